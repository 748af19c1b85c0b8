//! Gaussian beams u_k = k^{−1+d/4}·b(t)·e^{ikψ(x,t)} concentrated on a
//! geodesic γ, and the damped quasi-solutions G·u_k.
//!
//! With y = x − γ(t) and p = γ′, the phase is ψ = ⟨p,y⟩ + ½⟨My,y⟩. The
//! eikonal equation to second order along γ gives the Riccati equation
//! Ṁ = −M² + MppᵀM, and the leading transport term gives
//! ḃ = −½·b·tr(M(I − ppᵀ)).

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damping::{DampingError, DampingProfile};
use crate::geodesic::{cumulative_integral, Geodesic, GeodesicError};
use crate::grid::{Field, FieldKind, GridError, Spectral, TorusGrid};
use crate::solver::{Evolution, SolverConfig, SolverError, WaveState};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Frame ODE step.
const FRAME_DT: f64 = 1e-3;

/// Lattice images whose Gaussian weight falls below this are dropped.
const IMAGE_WEIGHT: f64 = 1e-16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("invalid beam: {0}")]
    InvalidSpec(String),
    #[error("Im M lost positive definiteness at t = {0}")]
    LostDefiniteness(f64),
    #[error("grid with {points} points per axis cannot resolve k = {k} (need at least 4k)")]
    UnderResolved { points: usize, k: f64 },
    #[error("time {t} precedes the beam start {t0}")]
    BeforeStart { t: f64, t0: f64 },
    #[error("grid dimension {grid} does not match beam dimension {beam}")]
    DimensionMismatch { grid: usize, beam: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Damping(#[from] DampingError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("csv output failed: {0}")]
    Io(String),
}

/// 2×2 complex matrix; on T¹ only the (0,0) entry is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat(pub [[C; 2]; 2]);

impl Mat {
    pub fn zero() -> Self {
        Mat([[ZERO; 2]; 2])
    }

    pub fn diag(a: C, b: C) -> Self {
        Mat([[a, ZERO], [ZERO, b]])
    }

    /// Identity on the first `dim` coordinates.
    fn eye(dim: usize) -> Self {
        Self::diag(C::new(1.0, 0.0), if dim == 2 { C::new(1.0, 0.0) } else { ZERO })
    }

    fn outer(p: [f64; 2], dim: usize) -> Self {
        let q = if dim == 2 { p[1] } else { 0.0 };
        Mat([[C::new(p[0] * p[0], 0.0), C::new(p[0] * q, 0.0)], [C::new(q * p[0], 0.0), C::new(q * q, 0.0)]])
    }

    fn mul(&self, o: &Mat) -> Mat {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[ZERO; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat(r)
    }

    fn add(&self, o: &Mat) -> Mat {
        let mut r = self.0;
        for (row, orow) in r.iter_mut().zip(&o.0) {
            for (x, y) in row.iter_mut().zip(orow) {
                *x += y;
            }
        }
        Mat(r)
    }

    fn scale(&self, s: C) -> Mat {
        Mat(self.0.map(|row| row.map(|v| v * s)))
    }

    fn sub(&self, o: &Mat) -> Mat {
        self.add(&o.scale(C::new(-1.0, 0.0)))
    }

    pub fn trace(&self) -> C {
        self.0[0][0] + self.0[1][1]
    }

    /// yᵀMy.
    fn quad(&self, y: [f64; 2]) -> C {
        let m = &self.0;
        m[0][0] * y[0] * y[0] + (m[0][1] + m[1][0]) * y[0] * y[1] + m[1][1] * y[1] * y[1]
    }

    /// pᵀMy.
    fn bilinear(&self, p: [f64; 2], y: [f64; 2]) -> C {
        let m = &self.0;
        p[0] * (m[0][0] * y[0] + m[0][1] * y[1]) + p[1] * (m[1][0] * y[0] + m[1][1] * y[1])
    }

    /// Smallest eigenvalue of the real symmetric matrix Im M restricted to `dim` coordinates.
    pub fn im_min_eigenvalue(&self, dim: usize) -> f64 {
        let a = self.0[0][0].im;
        if dim == 1 {
            return a;
        }
        let d = self.0[1][1].im;
        let b = 0.5 * (self.0[0][1].im + self.0[1][0].im);
        0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
    }

    /// det Im M on the first `dim` coordinates.
    pub fn im_det(&self, dim: usize) -> f64 {
        if dim == 1 {
            self.0[0][0].im
        } else {
            self.0[0][0].im * self.0[1][1].im - self.0[0][1].im * self.0[1][0].im
        }
    }

    fn is_symmetric(&self) -> bool {
        (self.0[0][1] - self.0[1][0]).norm() <= 1e-12 * (1.0 + self.0[0][1].norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub dim: usize,
    pub geodesic: Geodesic,
    pub k: f64,
    pub m0: Mat,
    /// Amplitude at t0; `None` picks the value that normalizes the energy to 1 as k → ∞.
    pub b0_init: Option<C>,
    pub t0: f64,
}

impl BeamSpec {
    /// Default seed M0 = i·I, energy-normalized amplitude, start time 0.
    pub fn new(dim: usize, geodesic: Geodesic, k: f64) -> Result<Self, BeamError> {
        let spec = Self { dim, geodesic, k, m0: Mat::diag(I, if dim == 2 { I } else { ZERO }), b0_init: None, t0: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_m0(mut self, m0: Mat) -> Result<Self, BeamError> {
        self.m0 = m0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_t0(mut self, t0: f64) -> Result<Self, BeamError> {
        self.t0 = t0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_k(mut self, k: f64) -> Result<Self, BeamError> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        let bad = |m: String| Err(BeamError::InvalidSpec(m));
        if self.dim != 1 && self.dim != 2 {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if !(self.k >= 1.0 && self.k.is_finite()) {
            return bad(format!("k must be at least 1, got {}", self.k));
        }
        if !(self.t0 >= 0.0) {
            return bad(format!("t0 must be nonnegative, got {}", self.t0));
        }
        let dir = self.geodesic.direction;
        if (dir[0].hypot(dir[1]) - 1.0).abs() > 1e-12 || (self.dim == 1 && dir[1] != 0.0) {
            return bad(format!("direction {dir:?} is not a unit vector on T^{}", self.dim));
        }
        if !self.m0.is_symmetric() {
            return bad("M0 must be symmetric".into());
        }
        if self.dim == 1 && self.m0.0[1][1] != ZERO {
            return bad("on T¹ only the (0,0) entry of M0 may be set".into());
        }
        if !(self.m0.im_min_eigenvalue(self.dim) > 0.0) {
            return bad("Im M0 must be positive definite".into());
        }
        Ok(())
    }

    /// (det Im M0)^{1/4}·π^{−d/4}.
    pub fn normalizing_amplitude(&self) -> f64 {
        self.m0.im_det(self.dim).powf(0.25) * PI.powf(-(self.dim as f64) / 4.0)
    }

    pub fn b0(&self) -> C {
        self.b0_init.unwrap_or_else(|| C::new(self.normalizing_amplitude(), 0.0))
    }

    /// k^{−1+d/4}.
    pub fn prefactor(&self) -> f64 {
        self.k.powf(-1.0 + self.dim as f64 / 4.0)
    }
}

/// State of the beam ODEs at time t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamFrame {
    pub t: f64,
    pub m: Mat,
    pub b0: C,
    /// γ(t), unwrapped.
    pub position: [f64; 2],
    pub direction: [f64; 2],
    pub dim: usize,
}

impl BeamFrame {
    fn projectors(&self) -> (Mat, Mat) {
        let p = Mat::outer(self.direction, self.dim);
        (p, Mat::eye(self.dim).sub(&p))
    }

    /// Ṁ = −M² + MPM.
    pub fn m_dot(&self) -> Mat {
        riccati(&self.m, &self.projectors().0)
    }

    /// M̈ = −ṀM − MṀ + ṀPM + MPṀ.
    pub fn m_ddot(&self) -> Mat {
        let (p, _) = self.projectors();
        let md = self.m_dot();
        let m = &self.m;
        md.mul(m).add(&m.mul(&md)).scale(C::new(-1.0, 0.0)).add(&md.mul(&p).mul(m)).add(&m.mul(&p).mul(&md))
    }

    /// ḃ = −½·b·tr(MQ).
    pub fn b_dot(&self) -> C {
        let (_, q) = self.projectors();
        -0.5 * self.b0 * self.m.mul(&q).trace()
    }

    /// b̈ = −½ḃ·tr(MQ) − ½b·tr(ṀQ).
    pub fn b_ddot(&self) -> C {
        let (_, q) = self.projectors();
        -0.5 * self.b_dot() * self.m.mul(&q).trace() - 0.5 * self.b0 * self.m_dot().mul(&q).trace()
    }
}

fn riccati(m: &Mat, p: &Mat) -> Mat {
    m.mul(p).mul(m).sub(&m.mul(m))
}

/// Integrates the frame ODEs from t0 to t with RK4 at step 10⁻³.
pub fn propagate_frame(spec: &BeamSpec, t: f64) -> Result<BeamFrame, BeamError> {
    spec.validate()?;
    if t < spec.t0 {
        return Err(BeamError::BeforeStart { t, t0: spec.t0 });
    }
    let dim = spec.dim;
    let p = Mat::outer(spec.geodesic.direction, dim);
    let q = Mat::eye(dim).sub(&p);
    let rhs = |m: &Mat, b: C| (riccati(m, &p), -0.5 * b * m.mul(&q).trace());
    let span = t - spec.t0;
    let n = (span / FRAME_DT).ceil() as usize;
    let h = if n == 0 { 0.0 } else { span / n as f64 };
    let hc = C::new(h, 0.0);
    let (mut m, mut b) = (spec.m0, spec.b0());
    for step in 0..n {
        let (k1m, k1b) = rhs(&m, b);
        let (k2m, k2b) = rhs(&m.add(&k1m.scale(0.5 * hc)), b + 0.5 * h * k1b);
        let (k3m, k3b) = rhs(&m.add(&k2m.scale(0.5 * hc)), b + 0.5 * h * k2b);
        let (k4m, k4b) = rhs(&m.add(&k3m.scale(hc)), b + h * k3b);
        let inc = k1m.add(&k2m.scale(C::new(2.0, 0.0))).add(&k3m.scale(C::new(2.0, 0.0))).add(&k4m);
        m = m.add(&inc.scale(hc / 6.0));
        b += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        if !(m.im_min_eigenvalue(dim) > 0.0) {
            return Err(BeamError::LostDefiniteness(spec.t0 + (step + 1) as f64 * h));
        }
    }
    Ok(BeamFrame { t, m, b0: b, position: spec.geodesic.at(t), direction: spec.geodesic.direction, dim })
}

/// u, ∂ₜu and ∂ₜ²u of the periodized beam at every node.
struct Samples {
    u: Vec<C>,
    ut: Vec<C>,
    utt: Vec<C>,
}

fn check_grid(spec: &BeamSpec, grid: &TorusGrid) -> Result<(), BeamError> {
    if grid.dim() != spec.dim {
        return Err(BeamError::DimensionMismatch { grid: grid.dim(), beam: spec.dim });
    }
    if (grid.points_per_axis() as f64) < 4.0 * spec.k {
        return Err(BeamError::UnderResolved { points: grid.points_per_axis(), k: spec.k });
    }
    Ok(())
}

fn sample(spec: &BeamSpec, frame: &BeamFrame, grid: &TorusGrid) -> Samples {
    let dim = spec.dim;
    let k = spec.k;
    let period = grid.period();
    let amp = spec.prefactor();
    let p = frame.direction;
    let m = frame.m;
    let md = frame.m_dot();
    let mdd = frame.m_ddot();
    let (b, bd, bdd) = (frame.b0, frame.b_dot(), frame.b_ddot());
    let p_m_p = m.bilinear(p, p);
    // images beyond this many periods carry weight below the cutoff
    let reach = (2.0 * -IMAGE_WEIGHT.ln() / (k * m.im_min_eigenvalue(dim))).sqrt();
    let r = (reach / period + 0.5).ceil() as i64;
    let shifts: Vec<[f64; 2]> = if dim == 1 {
        (-r..=r).map(|a| [a as f64 * period, 0.0]).collect()
    } else {
        (-r..=r).flat_map(|a| (-r..=r).map(move |c| [a as f64 * period, c as f64 * period])).collect()
    };
    let centre = frame.position;
    let cut = -IMAGE_WEIGHT.ln();
    let per_node = |i: usize| {
        let x = grid.node(i);
        let mut base = [x[0] - centre[0], x[1] - centre[1]];
        for v in base.iter_mut().take(dim) {
            *v -= period * (*v / period).round();
        }
        if dim == 1 {
            base[1] = 0.0;
        }
        let (mut u, mut ut, mut utt) = (ZERO, ZERO, ZERO);
        for s in &shifts {
            let y = [base[0] + s[0], base[1] + s[1]];
            let psi = p[0] * y[0] + p[1] * y[1] + 0.5 * m.quad(y);
            if k * psi.im > cut {
                continue;
            }
            let e = (I * k * psi).exp() * amp;
            let psi_t = -1.0 - m.bilinear(p, y) + 0.5 * md.quad(y);
            let psi_tt = p_m_p - 2.0 * md.bilinear(p, y) + 0.5 * mdd.quad(y);
            u += e * b;
            ut += e * (bd + I * k * b * psi_t);
            utt += e * (bdd + 2.0 * I * k * bd * psi_t + I * k * b * psi_tt - k * k * b * psi_t * psi_t);
        }
        (u, ut, utt)
    };
    let vals: Vec<(C, C, C)> = (0..grid.len()).into_par_iter().map(per_node).collect();
    Samples {
        u: vals.iter().map(|v| v.0).collect(),
        ut: vals.iter().map(|v| v.1).collect(),
        utt: vals.iter().map(|v| v.2).collect(),
    }
}

/// The beam and its exact time derivative, sampled at time t.
pub fn beam_field(spec: &BeamSpec, grid: &TorusGrid, t: f64) -> Result<(Field, Field), BeamError> {
    check_grid(spec, grid)?;
    let frame = propagate_frame(spec, t)?;
    let s = sample(spec, &frame, grid);
    Ok((Field::new(*grid, FieldKind::Position, s.u)?, Field::new(*grid, FieldKind::Velocity, s.ut)?))
}

/// W along the beam's geodesic, w(t) = W(γ(t), t).
fn w_gamma(w: &DampingProfile, g: &Geodesic, t: f64) -> Result<f64, DampingError> {
    w.eval(g.at(t), t)
}

/// d/dt W(γ(t), t) by central differences (one-sided at t = 0).
fn w_gamma_dot(w: &DampingProfile, g: &Geodesic, t: f64) -> Result<f64, DampingError> {
    let h = 1e-5;
    if t >= h {
        Ok((w_gamma(w, g, t + h)? - w_gamma(w, g, t - h)?) / (2.0 * h))
    } else {
        Ok((w_gamma(w, g, t + h)? - w_gamma(w, g, t)?) / h)
    }
}

/// G(γ, t0, t) for an optional damping.
pub fn beam_propagator(spec: &BeamSpec, w: Option<&DampingProfile>, t: f64) -> Result<f64, BeamError> {
    match w {
        None => Ok(1.0),
        Some(w) => Ok((-cumulative_integral(w, &spec.geodesic, spec.t0, &[t], 0.01)?[0]).exp()),
    }
}

/// v = G·u_k with ∂ₜv = G·(∂ₜu_k − W(γ(t),t)·u_k).
pub fn quasi_solution(
    spec: &BeamSpec,
    w: Option<&DampingProfile>,
    grid: &TorusGrid,
    t: f64,
) -> Result<(Field, Field), BeamError> {
    check_grid(spec, grid)?;
    let frame = propagate_frame(spec, t)?;
    let s = sample(spec, &frame, grid);
    let g = beam_propagator(spec, w, t)?;
    let wg = match w {
        Some(w) => w_gamma(w, &spec.geodesic, t)?,
        None => 0.0,
    };
    let u: Vec<C> = s.u.iter().map(|v| v * g).collect();
    let v: Vec<C> = s.ut.iter().zip(&s.u).map(|(ut, u)| (ut - wg * u) * g).collect();
    Ok((Field::new(*grid, FieldKind::Position, u)?, Field::new(*grid, FieldKind::Velocity, v)?))
}

/// ‖(∂ₜ² − Δ + 2W∂ₜ)v‖ at time t for the quasi-solution v.
pub fn residual_norm(spec: &BeamSpec, w: Option<&DampingProfile>, grid: &TorusGrid, t: f64) -> Result<f64, BeamError> {
    check_grid(spec, grid)?;
    let frame = propagate_frame(spec, t)?;
    let s = sample(spec, &frame, grid);
    let lap = Spectral::new(*grid).laplacian_values(&s.u);
    let g = beam_propagator(spec, w, t)?;
    let (wg, wg_dot, snapshot) = match w {
        Some(w) => (
            w_gamma(w, &spec.geodesic, t)?,
            w_gamma_dot(w, &spec.geodesic, t)?,
            w.snapshot(grid, t)?.into_values().into_iter().map(|z| z.re).collect(),
        ),
        None => (0.0, 0.0, vec![0.0; grid.len()]),
    };
    let sum: f64 = (0..grid.len())
        .map(|i| {
            let (u, ut, utt) = (s.u[i], s.ut[i], s.utt[i]);
            let r = utt - lap[i] - 2.0 * wg * ut + (wg * wg - wg_dot) * u + 2.0 * snapshot[i] * (ut - wg * u);
            r.norm_sqr()
        })
        .sum();
    Ok(g * (sum * grid.cell_volume()).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamVsExactReport {
    pub times: Vec<f64>,
    pub energy_exact: Vec<f64>,
    pub g_squared: Vec<f64>,
    /// |E(ω_k, t) − G²| per sample.
    pub defect: Vec<f64>,
    pub sup_defect: f64,
    /// sup_t |E(v_k, t) − G²| for the quasi-solution, sampled at `epsilon_samples` times.
    pub epsilon: f64,
    /// E(ω_k,t) > E(ω_k,t0)(G² − 2ε) at every sample.
    pub lower_bound_holds: bool,
}

impl BeamVsExactReport {
    /// CSV with header `t,E_exact,G_squared,defect`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BeamError> {
        let err = |e: csv::Error| BeamError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "E_exact", "G_squared", "defect"]).map_err(err)?;
        for i in 0..self.times.len() {
            w.write_record([
                format!("{:e}", self.times[i]),
                format!("{:e}", self.energy_exact[i]),
                format!("{:e}", self.g_squared[i]),
                format!("{:e}", self.defect[i]),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| BeamError::Io(e.to_string()))
    }
}

/// Quasi-solution energy defect sup_t |E(v_k,t) − G²| over `samples` equally spaced times.
pub fn quasi_energy_defect(
    spec: &BeamSpec,
    w: Option<&DampingProfile>,
    grid: &TorusGrid,
    t_end: f64,
    samples: usize,
) -> Result<f64, BeamError> {
    let spectral = Spectral::new(*grid);
    let mut sup: f64 = 0.0;
    for i in 0..=samples {
        let t = spec.t0 + (t_end - spec.t0) * i as f64 / samples.max(1) as f64;
        let (u, v) = quasi_solution(spec, w, grid, t)?;
        let g = beam_propagator(spec, w, t)?;
        sup = sup.max((spectral.energy(&u, &v)? - g * g).abs());
    }
    Ok(sup)
}

/// Evolves the exact solution from the quasi-solution's data at t0 and
/// compares its energy with G(γ, t0, t)².
pub fn beam_vs_exact(
    spec: &BeamSpec,
    w: Option<&DampingProfile>,
    grid: &TorusGrid,
    t_end: f64,
    config: &SolverConfig,
    epsilon_samples: usize,
) -> Result<BeamVsExactReport, BeamError> {
    let (u, v) = quasi_solution(spec, w, grid, spec.t0)?;
    let state = WaveState::new(u, v, spec.t0)?;
    let (_, trace) = Evolution::new(*config).damping(w).run(state, t_end)?;
    let g_squared: Vec<f64> = match w {
        None => vec![1.0; trace.len()],
        Some(w) => cumulative_integral(w, &spec.geodesic, spec.t0, &trace.times, 0.01)?
            .into_iter()
            .map(|i| (-2.0 * i).exp())
            .collect(),
    };
    let defect: Vec<f64> = trace.energy.iter().zip(&g_squared).map(|(e, g)| (e - g).abs()).collect();
    let sup_defect = defect.iter().copied().fold(0.0, f64::max);
    let epsilon = quasi_energy_defect(spec, w, grid, t_end, epsilon_samples)?;
    let e0 = trace.energy[0];
    let lower_bound_holds = trace.energy.iter().zip(&g_squared).all(|(e, g)| *e > e0 * (g - 2.0 * epsilon));
    Ok(BeamVsExactReport {
        times: trace.times,
        energy_exact: trace.energy,
        g_squared,
        defect,
        sup_defect,
        epsilon,
        lower_bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::BumpShape;
    use crate::grid::{l2_norm, Spectral};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn t1_beam(k: f64) -> BeamSpec {
        BeamSpec::new(1, Geodesic::t1(PI, true), k).unwrap()
    }

    fn t2_beam(k: f64) -> BeamSpec {
        BeamSpec::new(2, Geodesic::t2([PI, PI], 0.0), k).unwrap()
    }

    #[test]
    fn t1_frame_is_constant() {
        let spec = t1_beam(8.0).with_m0(Mat::diag(C::new(0.3, 2.0), ZERO)).unwrap();
        let f = propagate_frame(&spec, 7.5).unwrap();
        assert_eq!(f.m, spec.m0);
        assert_eq!(f.b0, spec.b0());
    }

    #[test]
    fn t2_frame_matches_closed_form() {
        let spec = t2_beam(8.0);
        for t in [0.5, 2.0, 10.0] {
            let f = propagate_frame(&spec, t).unwrap();
            let m22 = I / (1.0 + I * t);
            assert!((f.m.0[0][0] - I).norm() < 1e-12);
            assert!((f.m.0[1][1] - m22).norm() < 1e-10, "t={t}");
            assert!(f.m.0[0][1].norm() < 1e-12);
            let amp = f.b0.norm() / spec.b0().norm();
            assert_relative_eq!(amp, (1.0 + t * t).powf(-0.25), max_relative = 1e-10);
        }
    }

    #[test]
    fn tilted_frame_matches_inverse_formula() {
        // N = M⁻¹ solves Ṅ = I − ppᵀ, so M(t) = (M0⁻¹ + tQ)⁻¹
        let theta = 0.6f64;
        let spec = BeamSpec::new(2, Geodesic::t2([1.0, 2.0], theta), 16.0)
            .unwrap()
            .with_m0(Mat([[C::new(0.2, 1.5), C::new(0.1, 0.3)], [C::new(0.1, 0.3), C::new(-0.4, 0.8)]]))
            .unwrap();
        let inv = |m: &Mat| {
            let d = m.0[0][0] * m.0[1][1] - m.0[0][1] * m.0[1][0];
            Mat([[m.0[1][1] / d, -m.0[0][1] / d], [-m.0[1][0] / d, m.0[0][0] / d]])
        };
        let t = 3.0;
        let (s, c) = theta.sin_cos();
        let q = Mat([[C::new(s * s, 0.0), C::new(-s * c, 0.0)], [C::new(-s * c, 0.0), C::new(c * c, 0.0)]]);
        let expected = inv(&inv(&spec.m0).add(&q.scale(C::new(t, 0.0))));
        let got = propagate_frame(&spec, t).unwrap().m;
        for i in 0..2 {
            for j in 0..2 {
                assert!((got.0[i][j] - expected.0[i][j]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(t1_beam(8.0).with_m0(Mat::diag(C::new(1.0, 0.0), ZERO)).is_err());
        assert!(BeamSpec::new(1, Geodesic::t1(0.0, true), 0.5).is_err());
        let g = TorusGrid::t1(64).unwrap();
        assert!(matches!(beam_field(&t1_beam(32.0), &g, 0.0), Err(BeamError::UnderResolved { .. })));
        assert!(matches!(propagate_frame(&t1_beam(8.0).with_t0(1.0).unwrap(), 0.5), Err(BeamError::BeforeStart { .. })));
    }

    #[test]
    fn centre_value() {
        for spec in [t1_beam(32.0), t2_beam(32.0)] {
            let n = 128;
            let grid = TorusGrid::new(spec.dim, n, 2.0 * PI).unwrap();
            let (u, _) = beam_field(&spec, &grid, 0.0).unwrap();
            // γ(0) = (π, π) is the node n/2 on each axis
            let idx = if spec.dim == 1 { n / 2 } else { n / 2 * n + n / 2 };
            assert_relative_eq!(u.values()[idx].norm(), spec.prefactor() * spec.b0().norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn small_l2_norm() {
        for spec in [t1_beam(1.0), t2_beam(1.0)] {
            let ratios: Vec<f64> = [32.0, 64.0, 128.0]
                .iter()
                .map(|&k| {
                    let s = spec.with_k(k).unwrap();
                    let grid = TorusGrid::new(s.dim, (4.0 * k) as usize, 2.0 * PI).unwrap();
                    l2_norm(&beam_field(&s, &grid, 0.0).unwrap().0) * k
                })
                .collect();
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
            assert!(hi / lo < 1.01, "{ratios:?}");
        }
    }

    #[test]
    fn energy_tends_to_one() {
        let spectral = |g: TorusGrid| Spectral::new(g);
        for (k, tol) in [(128.0, 0.10), (512.0, 0.03)] {
            let spec = t1_beam(k);
            let grid = TorusGrid::t1((4.0 * k) as usize).unwrap();
            let (u, v) = beam_field(&spec, &grid, 0.0).unwrap();
            let e = spectral(grid).energy(&u, &v).unwrap();
            assert!((e - 1.0).abs() < tol, "k={k} E={e}");
        }
    }

    #[test]
    fn quasi_solution_energy_law() {
        let a = DampingProfile::constant(0.3).unwrap();
        let spec = t1_beam(256.0);
        let grid = TorusGrid::t1(1024).unwrap();
        let (u, v) = quasi_solution(&spec, Some(&a), &grid, 2.0).unwrap();
        let e = Spectral::new(grid).energy(&u, &v).unwrap();
        assert_relative_eq!(e, (-1.2f64).exp(), max_relative = 0.01);

        let (u0, v0) = quasi_solution(&spec, None, &grid, 1.0).unwrap();
        let (u1, v1) = beam_field(&spec, &grid, 1.0).unwrap();
        assert_eq!((u0, v0), (u1, v1));
    }

    #[test]
    fn avoiding_geodesic_keeps_energy() {
        let bump = DampingProfile::space_bump(2.0, [PI, PI], 1.5, BumpShape::Smooth).unwrap();
        let spec = BeamSpec::new(2, Geodesic::t2([0.0, 0.0], 0.0), 32.0).unwrap();
        let grid = TorusGrid::t2(128).unwrap();
        for t in [0.0, 2.0, 5.0] {
            let (u, v) = quasi_solution(&spec, Some(&bump), &grid, t).unwrap();
            let e = Spectral::new(grid).energy(&u, &v).unwrap();
            assert!((e - 1.0).abs() < 0.05, "t={t} E={e}");
        }
    }

    #[test]
    fn velocity_is_time_derivative() {
        let spec = t2_beam(16.0);
        let grid = TorusGrid::t2(64).unwrap();
        let h = 1e-4;
        let (_, v) = beam_field(&spec, &grid, 1.0).unwrap();
        let (up, _) = beam_field(&spec, &grid, 1.0 + h).unwrap();
        let (um, _) = beam_field(&spec, &grid, 1.0 - h).unwrap();
        let scale = v.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..grid.len() {
            let fd = (up.values()[i] - um.values()[i]) / (2.0 * h);
            assert!((fd - v.values()[i]).norm() < 1e-5 * scale);
        }
    }

    fn spd_strategy() -> impl Strategy<Value = Mat> {
        (0.1..3.0f64, 0.1..3.0f64, -0.9..0.9f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(
            |(a, d, rho, x1, x2, x3)| {
                let off = rho * (a * d).sqrt();
                Mat([[C::new(x1, a), C::new(x2, off)], [C::new(x2, off), C::new(x3, d)]])
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn im_m_stays_definite(m0 in spd_strategy(), theta in 0.0..2.0 * PI) {
            let spec = BeamSpec::new(2, Geodesic::t2([0.0, 0.0], theta), 10.0).unwrap().with_m0(m0).unwrap();
            let f = propagate_frame(&spec, 20.0).unwrap();
            prop_assert!(f.m.im_min_eigenvalue(2) > 0.0);
        }
    }
}
