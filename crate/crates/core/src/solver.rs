//! Time stepping for ∂ₜ²u − Δu + 2W∂ₜu = 0 written as the first-order system
//! ∂ₜ(u, v) = (v, Δu − 2Wv), with an energy trace.
//!
//! Two schemes are available. `Rk4` integrates the full system with a spectral
//! Laplacian. `Strang` alternates the exact undamped rotation of each Fourier
//! mode with the exact pointwise decay v ↦ v·exp(−2∫W), which is stable for
//! any step and makes the discrete energy identity hold to roundoff.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damping::{DampingError, DampingProfile, Side};
use crate::geodesic::{sigma_curve, GeodesicError, GeodesicSampling};
use crate::grid::{EnergyTrace, Field, FieldKind, GridError, Spectral, TorusGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("time step {dt} exceeds the stability limit {limit} for this grid")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("unstable step detected at t = {t}: energy grew from {e0:e} to {e:e}")]
    Unstable { t: f64, e0: f64, e: f64 },
    #[error("end time {t_end} precedes the state time {t}")]
    EndBeforeStart { t: f64, t_end: f64 },
    #[error("trace has no cumulative observation channel")]
    MissingChannel,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Damping(#[from] DampingError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl WaveState {
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self, SolverError> {
        if u.grid() != v.grid() {
            return Err(GridError::GridMismatch.into());
        }
        if u.kind() != FieldKind::Position {
            return Err(GridError::KindMismatch { expected: FieldKind::Position, got: u.kind() }.into());
        }
        if v.kind() != FieldKind::Velocity {
            return Err(GridError::KindMismatch { expected: FieldKind::Velocity, got: v.kind() }.into());
        }
        if !(t >= 0.0) {
            return Err(DampingError::NegativeTime(t).into());
        }
        Ok(Self { u, v, t })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    pub fn energy(&self) -> f64 {
        Spectral::new(*self.grid()).energy_values(self.u.values(), self.v.values())
    }
}

/// Real band-limited data with random coefficients on the modes 1 ≤ |m|∞ ≤ `max_mode`.
///
/// Displacement coefficients are divided by |m| so every mode carries
/// comparable energy in both components.
pub fn random_band_limited(grid: TorusGrid, min_mode: u32, max_mode: u32, seed: u64) -> WaveState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = min_mode.max(1) as i32;
    let hi = max_mode as i32;
    let modes: Vec<[i32; 2]> = if grid.dim() == 1 {
        (lo..=hi).map(|m| [m, 0]).collect()
    } else {
        // one representative of each ±m pair
        (-hi..=hi)
            .flat_map(|a| (0..=hi).map(move |b| [a, b]))
            .filter(|&[a, b]| (b > 0 || a > 0) && a.abs().max(b) >= lo)
            .collect()
    };
    let mut coeffs = Vec::with_capacity(modes.len());
    for m in &modes {
        let norm = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
        let mut draw = || rng.gen_range(-1.0..1.0);
        coeffs.push(([draw() / norm, draw() / norm], [draw(), draw()]));
    }
    type Coeff = ([f64; 2], [f64; 2]);
    let eval = |p: [f64; 2], pick: fn(&Coeff) -> [f64; 2]| {
        modes
            .iter()
            .zip(&coeffs)
            .map(|(m, c)| {
                let phase = m[0] as f64 * p[0] + m[1] as f64 * p[1];
                let [a, b] = pick(c);
                a * phase.cos() + b * phase.sin()
            })
            .sum::<f64>()
    };
    let u = Field::from_real_fn(grid, FieldKind::Position, |p| eval(p, |c| c.0));
    let v = Field::from_real_fn(grid, FieldKind::Velocity, |p| eval(p, |c| c.1));
    WaveState { u, v, t: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub align_to_discontinuities: bool,
    pub trace_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 1e-3, scheme: Scheme::Rk4, align_to_discontinuities: true, trace_stride: 10 }
    }
}

impl SolverConfig {
    pub fn rk4(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn strang(dt: f64) -> Self {
        Self { dt, scheme: Scheme::Strang, ..Self::default() }
    }

    pub fn with_stride(mut self, trace_stride: usize) -> Self {
        self.trace_stride = trace_stride;
        self
    }

    /// Largest stable rk4 step on `grid`.
    pub fn rk4_limit(grid: &TorusGrid) -> f64 {
        2.8 / grid.max_wavenumber()
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<(), SolverError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.trace_stride == 0 {
            return Err(SolverError::InvalidConfig("trace_stride must be at least 1".into()));
        }
        if self.scheme == Scheme::Rk4 && self.dt > Self::rk4_limit(grid) {
            return Err(SolverError::StepTooLarge { dt: self.dt, limit: Self::rk4_limit(grid) });
        }
        Ok(())
    }
}

/// Relative energy growth that counts as an instability.
const GROWTH_TOLERANCE: f64 = 1e-6;

/// A configured evolution: damping, observation weight, forced sample times.
#[derive(Debug, Clone)]
pub struct Evolution<'a> {
    config: SolverConfig,
    damping: Option<&'a DampingProfile>,
    observer: Option<&'a DampingProfile>,
    breakpoints: Vec<f64>,
    sigma: Option<GeodesicSampling>,
}

/// Samples a damping profile as S(x) on the grid and τ(t) on demand.
struct Separable<'a> {
    profile: &'a DampingProfile,
    spatial: Vec<f64>,
}

impl<'a> Separable<'a> {
    fn new(profile: &'a DampingProfile, grid: &TorusGrid) -> Self {
        let spatial = profile.spatial_field(grid).values().iter().map(|v| v.re).collect();
        Self { profile, spatial }
    }

    fn tau(&self, t: f64, side: Side) -> Result<f64, DampingError> {
        self.profile.temporal(t, side)
    }

    /// ∫τ over [a, b], a step that does not cross a switch time.
    fn tau_integral(&self, a: f64, b: f64) -> Result<f64, DampingError> {
        // three-point Gauss–Legendre
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        let x = (0.6f64).sqrt() * h;
        let s = 5.0 * self.tau(m - x, Side::At)? + 8.0 * self.tau(m, Side::At)? + 5.0 * self.tau(m + x, Side::At)?;
        Ok(s * h / 9.0)
    }
}

impl<'a> Evolution<'a> {
    pub fn new(config: SolverConfig) -> Self {
        Self { config, damping: None, observer: None, breakpoints: Vec::new(), sigma: None }
    }

    pub fn damping(mut self, w: Option<&'a DampingProfile>) -> Self {
        self.damping = w;
        self
    }

    /// Weight for the cumulative channel ∫∫W_obs|v|². Defaults to the damping.
    pub fn observer(mut self, w: &'a DampingProfile) -> Self {
        self.observer = Some(w);
        self
    }

    /// Times at which steps end exactly and the trace is sampled.
    pub fn breakpoints(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(times);
        self
    }

    /// Also record Σ(t) from the damping along the trace.
    pub fn sigma(mut self, sampling: GeodesicSampling) -> Self {
        self.sigma = Some(sampling);
        self
    }

    pub fn run(&self, state: WaveState, t_end: f64) -> Result<(WaveState, EnergyTrace), SolverError> {
        let grid = *state.grid();
        self.config.validate(&grid)?;
        if t_end < state.t {
            return Err(SolverError::EndBeforeStart { t: state.t, t_end });
        }
        let spectral = Spectral::new(grid);
        let damping = self.damping.map(|w| Separable::new(w, &grid));
        let observer = self.observer.or(self.damping).map(|w| Separable::new(w, &grid));
        let observer_is_damping = self.observer.is_none() || self.observer == self.damping;

        let mut stops: Vec<f64> = self.breakpoints.clone();
        if self.config.align_to_discontinuities {
            for w in [self.damping, self.observer].into_iter().flatten() {
                stops.extend(w.discontinuity_times(t_end));
            }
        }
        stops.retain(|&s| s > state.t && s < t_end);
        stops.push(t_end);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        let forced: Vec<f64> = self.breakpoints.iter().copied().filter(|&s| s > state.t && s <= t_end).collect();

        let mut u = state.u.values().to_vec();
        let mut v = state.v.values().to_vec();
        // The mean of u decouples (Δ kills it, the damping acts on v). Carry it
        // separately so FFT roundoff on a large mean cannot leak into the
        // oscillating modes once they have decayed far below it.
        let mut u_mean = Complex64::new(0.0, 0.0);
        let mut strip_mean = |u: &mut [Complex64]| {
            let m = u.iter().sum::<Complex64>() / u.len() as f64;
            if m != Complex64::new(0.0, 0.0) {
                u.iter_mut().for_each(|x| *x -= m);
                u_mean += m;
            }
        };
        strip_mean(&mut u);
        let mut t = state.t;
        let mut q = 0.0;
        let e0 = spectral.energy_values(&u, &v);
        let mut trace = EnergyTrace { times: vec![t], energy: vec![e0], sigma: None, cum_obs: Some(vec![0.0]) };
        let mut stepper = Stepper::new(&spectral, grid.cell_volume());
        let mut steps = 0usize;

        for &stop in &stops {
            let span = stop - t;
            if span <= 0.0 {
                continue;
            }
            let n = (span / self.config.dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let start = t;
            for i in 0..n {
                let a = start + i as f64 * h;
                let b = if i + 1 == n { stop } else { start + (i + 1) as f64 * h };
                match self.config.scheme {
                    Scheme::Rk4 => stepper.rk4(&mut u, &mut v, &mut q, a, b, damping.as_ref(), observer.as_ref())?,
                    Scheme::Strang => stepper.strang(
                        &mut u,
                        &mut v,
                        &mut q,
                        a,
                        b,
                        damping.as_ref(),
                        observer.as_ref(),
                        observer_is_damping,
                    )?,
                }
                strip_mean(&mut u);
                t = b;
                steps += 1;
                let at_forced = i + 1 == n && (stop == t_end || forced.contains(&stop));
                if steps.is_multiple_of(self.config.trace_stride) || at_forced {
                    let e = spectral.energy_values(&u, &v);
                    if !(e <= e0 * (1.0 + GROWTH_TOLERANCE) + 1e-300) {
                        return Err(SolverError::Unstable { t, e0, e });
                    }
                    trace.times.push(t);
                    trace.energy.push(e);
                    if let Some(c) = trace.cum_obs.as_mut() {
                        c.push(q);
                    }
                }
            }
        }

        if let (Some(sampling), Some(w)) = (&self.sigma, self.damping) {
            trace.sigma = Some(sigma_curve(w, &trace.times, sampling)?);
        } else if self.sigma.is_some() {
            trace.sigma = Some(vec![0.0; trace.len()]);
        }
        u.iter_mut().for_each(|x| *x += u_mean);
        let u = Field::new(grid, FieldKind::Position, u)?;
        let v = Field::new(grid, FieldKind::Velocity, v)?;
        Ok((WaveState { u, v, t }, trace))
    }
}

/// Scratch buffers for one evolution.
struct Stepper<'s> {
    spectral: &'s Spectral,
    dv: f64,
    omega: Vec<f64>,
    ku: [Vec<Complex64>; 4],
    kv: [Vec<Complex64>; 4],
    tu: Vec<Complex64>,
    tv: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'s> Stepper<'s> {
    fn new(spectral: &'s Spectral, dv: f64) -> Self {
        let n = spectral.grid().len();
        let z = || vec![Complex64::new(0.0, 0.0); n];
        Self {
            spectral,
            dv,
            omega: spectral.xi_sq().iter().map(|k| k.sqrt()).collect(),
            ku: [z(), z(), z(), z()],
            kv: [z(), z(), z(), z()],
            tu: z(),
            tv: z(),
            scratch: z(),
        }
    }

    /// Writes (v, Δu − 2Wv) into stage `s` and returns ∫W_obs|v|².
    #[allow(clippy::too_many_arguments)]
    fn rhs(
        &mut self,
        s: usize,
        u: &[Complex64],
        v: &[Complex64],
        t: f64,
        side: Side,
        damping: Option<&Separable>,
        observer: Option<&Separable>,
    ) -> Result<f64, DampingError> {
        self.scratch.copy_from_slice(u);
        self.spectral.forward(&mut self.scratch);
        for (c, k2) in self.scratch.iter_mut().zip(self.spectral.xi_sq()) {
            *c *= -k2;
        }
        self.spectral.inverse(&mut self.scratch);
        self.ku[s].copy_from_slice(v);
        let kv = &mut self.kv[s];
        kv.copy_from_slice(&self.scratch);
        if let Some(d) = damping {
            let tau = d.tau(t, side)?;
            if tau != 0.0 {
                for ((out, vi), si) in kv.iter_mut().zip(v).zip(&d.spatial) {
                    *out -= vi * (2.0 * si * tau);
                }
            }
        }
        let mut obs = 0.0;
        if let Some(o) = observer {
            let tau = o.tau(t, side)?;
            if tau != 0.0 {
                obs = v.iter().zip(&o.spatial).map(|(vi, si)| si * vi.norm_sqr()).sum::<f64>() * tau * self.dv;
            }
        }
        Ok(obs)
    }

    #[allow(clippy::too_many_arguments)]
    fn rk4(
        &mut self,
        u: &mut [Complex64],
        v: &mut [Complex64],
        q: &mut f64,
        a: f64,
        b: f64,
        damping: Option<&Separable>,
        observer: Option<&Separable>,
    ) -> Result<(), DampingError> {
        let h = b - a;
        let mid = 0.5 * (a + b);
        let q1 = self.rhs(0, u, v, a, Side::Right, damping, observer)?;
        let stage = |this: &mut Self, from: usize, to: usize, c: f64, t: f64, side| {
            let (ku, kv) = (&this.ku[from], &this.kv[from]);
            for i in 0..u.len() {
                this.tu[i] = u[i] + ku[i] * c;
                this.tv[i] = v[i] + kv[i] * c;
            }
            let (tu, tv) = (std::mem::take(&mut this.tu), std::mem::take(&mut this.tv));
            let r = this.rhs(to, &tu, &tv, t, side, damping, observer);
            this.tu = tu;
            this.tv = tv;
            r
        };
        let q2 = stage(self, 0, 1, 0.5 * h, mid, Side::At)?;
        let q3 = stage(self, 1, 2, 0.5 * h, mid, Side::At)?;
        let q4 = stage(self, 2, 3, h, b, Side::Left)?;
        let w = h / 6.0;
        for i in 0..u.len() {
            u[i] += (self.ku[0][i] + 2.0 * self.ku[1][i] + 2.0 * self.ku[2][i] + self.ku[3][i]) * w;
            v[i] += (self.kv[0][i] + 2.0 * self.kv[1][i] + 2.0 * self.kv[2][i] + self.kv[3][i]) * w;
        }
        *q += w * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
        Ok(())
    }

    /// Exact decay v ↦ v·exp(−2S∫τ) over [a, b]; returns the observed increment
    /// when the observer is the damping itself.
    fn decay(&self, v: &mut [Complex64], d: &Separable, a: f64, b: f64) -> Result<f64, DampingError> {
        let i = d.tau_integral(a, b)?;
        if i == 0.0 {
            return Ok(0.0);
        }
        let mut obs = 0.0;
        for (vi, si) in v.iter_mut().zip(&d.spatial) {
            let x = 2.0 * si * i;
            // ∫ S τ |v|² over the substep, with |v|² = |v₀|² e^{−4S∫τ}
            obs += vi.norm_sqr() * -(-2.0 * x).exp_m1() / 4.0;
            *vi *= (-x).exp();
        }
        Ok(obs * self.dv)
    }

    fn observed(&self, v: &[Complex64], o: &Separable, t: f64, side: Side) -> Result<f64, DampingError> {
        let tau = o.tau(t, side)?;
        Ok(v.iter().zip(&o.spatial).map(|(vi, si)| si * vi.norm_sqr()).sum::<f64>() * tau * self.dv)
    }

    #[allow(clippy::too_many_arguments)]
    fn strang(
        &mut self,
        u: &mut [Complex64],
        v: &mut [Complex64],
        q: &mut f64,
        a: f64,
        b: f64,
        damping: Option<&Separable>,
        observer: Option<&Separable>,
        observer_is_damping: bool,
    ) -> Result<(), DampingError> {
        let h = b - a;
        let mid = 0.5 * (a + b);
        let obs_start = match (observer, observer_is_damping) {
            (Some(o), false) => self.observed(v, o, a, Side::Right)?,
            _ => 0.0,
        };
        if let Some(d) = damping {
            let inc = self.decay(v, d, a, mid)?;
            if observer_is_damping {
                *q += inc;
            }
        }
        self.rotate(u, v, h);
        if let Some(d) = damping {
            let inc = self.decay(v, d, mid, b)?;
            if observer_is_damping {
                *q += inc;
            }
        }
        if let (Some(o), false) = (observer, observer_is_damping) {
            *q += 0.5 * h * (obs_start + self.observed(v, o, b, Side::Left)?);
        }
        Ok(())
    }

    /// Exact undamped flow of every Fourier mode over a step h.
    fn rotate(&mut self, u: &mut [Complex64], v: &mut [Complex64], h: f64) {
        self.spectral.forward(u);
        self.spectral.forward(v);
        for i in 0..u.len() {
            let w = self.omega[i];
            let (uh, vh) = (u[i], v[i]);
            if w == 0.0 {
                u[i] = uh + vh * h;
            } else {
                let (s, c) = (w * h).sin_cos();
                u[i] = uh * c + vh * (s / w);
                v[i] = -uh * (w * s) + vh * c;
            }
        }
        self.spectral.inverse(u);
        self.spectral.inverse(v);
    }
}

/// Evolves `state` to `t_end` under damping `w` (or the free wave equation).
pub fn evolve(
    state: WaveState,
    w: Option<&DampingProfile>,
    t_end: f64,
    config: &SolverConfig,
) -> Result<(WaveState, EnergyTrace), SolverError> {
    Evolution::new(*config).damping(w).run(state, t_end)
}

/// max_t |E(t) − E(0) + 2∫₀ᵗ∫W|v|²| for a trace whose observer is the damping.
pub fn energy_identity_check(trace: &EnergyTrace) -> Result<f64, SolverError> {
    let obs = trace.cum_obs.as_ref().ok_or(SolverError::MissingChannel)?;
    let e0 = trace.energy.first().copied().unwrap_or(0.0);
    Ok(trace.energy.iter().zip(obs).map(|(e, q)| (e - e0 + 2.0 * q).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::LengthSequence;
    use approx::assert_relative_eq;

    fn single_mode(grid: TorusGrid, lambda: f64, u_amp: f64, v_amp: f64) -> WaveState {
        let u = Field::from_real_fn(grid, FieldKind::Position, |p| u_amp * (lambda * p[0]).cos());
        let v = Field::from_real_fn(grid, FieldKind::Velocity, |p| v_amp * (lambda * p[0]).cos());
        WaveState::new(u, v, 0.0).unwrap()
    }

    #[test]
    fn free_cosine() {
        let g = TorusGrid::t1(32).unwrap();
        let (end, trace) = evolve(single_mode(g, 1.0, 1.0, 0.0), None, 3.0, &SolverConfig::rk4(1e-3)).unwrap();
        for (i, z) in end.u.values().iter().enumerate() {
            assert!((z.re - 3f64.cos() * g.node(i)[0].cos()).abs() < 1e-10);
        }
        for e in &trace.energy {
            assert_relative_eq!(*e, std::f64::consts::FRAC_PI_2, max_relative = 1e-10);
        }
        assert!(energy_identity_check(&trace).unwrap() < 1e-10);
    }

    #[test]
    fn damped_mode_matches_closed_form() {
        let g = TorusGrid::t1(64).unwrap();
        let (a, lambda) = (0.1f64, 8.0);
        let omega = (lambda * lambda - a * a).sqrt();
        for cfg in [SolverConfig::rk4(1e-3), SolverConfig::strang(1e-3)] {
            let (end, _) = evolve(
                single_mode(g, lambda, 1.0, -a),
                Some(&DampingProfile::constant(a).unwrap()),
                5.0,
                &cfg,
            )
            .unwrap();
            let amp = (-a * 5.0f64).exp() * (omega * 5.0).cos();
            for (i, z) in end.u.values().iter().enumerate() {
                let x = g.node(i)[0];
                assert!((z.re - amp * (lambda * x).cos()).abs() < 1e-6 * amp.abs().max(1e-3), "{cfg:?}");
            }
        }
    }

    /// Energy of ü + 2aů + λ²u = 0 with u(0)=1, ů(0)=w0, times the mode's norm factor.
    fn mode_energy(a: f64, lambda: f64, u0: f64, w0: f64, t: f64) -> f64 {
        let om = (lambda * lambda - a * a).sqrt();
        let e = (-a * t).exp();
        let c2 = (w0 + a * u0) / om;
        let u = e * (u0 * (om * t).cos() + c2 * (om * t).sin());
        let du = -a * u + e * (-u0 * om * (om * t).sin() + c2 * om * (om * t).cos());
        0.5 * (lambda * lambda * u * u + du * du)
    }

    #[test]
    fn generic_data_follows_mode_oracle() {
        let g = TorusGrid::t1(64).unwrap();
        let a = 0.1;
        // u = Σ cos(mx)/m, v = Σ sin(mx)·0.3
        let modes = [1.0, 2.0, 3.0, 5.0, 8.0];
        let u = Field::from_real_fn(g, FieldKind::Position, |p| modes.iter().map(|m| (m * p[0]).cos() / m).sum());
        let v = Field::from_real_fn(g, FieldKind::Velocity, |p| modes.iter().map(|m| 0.3 * (m * p[0]).sin()).sum());
        let cfg = SolverConfig::rk4(1e-3).with_stride(500);
        let (_, trace) =
            evolve(WaveState::new(u, v, 0.0).unwrap(), Some(&DampingProfile::constant(a).unwrap()), 10.0, &cfg).unwrap();
        for (t, e) in trace.times.iter().zip(&trace.energy) {
            // cos and sin parts decouple; each carries ∫cos² = ∫sin² = π
            let oracle: f64 = modes
                .iter()
                .map(|&m| std::f64::consts::PI * (mode_energy(a, m, 1.0 / m, 0.0, *t) + mode_energy(a, m, 0.0, 0.3, *t)))
                .sum();
            assert_relative_eq!(*e, oracle, max_relative = 1e-6);
            let ratio = e / trace.energy[0];
            let env = (-0.2 * t).exp();
            assert!(ratio <= env * 1.25 && ratio >= env * 0.75, "t={t} ratio={ratio} env={env}");
        }
    }

    #[test]
    fn step_limit_and_validation() {
        let g = TorusGrid::t1(256).unwrap();
        let state = random_band_limited(g, 1, 8, 1);
        let too_big = SolverConfig::rk4(0.03);
        assert!(matches!(evolve(state.clone(), None, 1.0, &too_big), Err(SolverError::StepTooLarge { .. })));
        assert!(evolve(state.clone(), None, 1.0, &SolverConfig::strang(0.03)).is_ok());
        let mut stride0 = SolverConfig::rk4(1e-3);
        stride0.trace_stride = 0;
        assert!(evolve(state.clone(), None, 1.0, &stride0).is_err());
        let later = WaveState { t: 2.0, ..state };
        assert!(matches!(evolve(later, None, 1.0, &SolverConfig::rk4(1e-3)), Err(SolverError::EndBeforeStart { .. })));
    }

    #[test]
    fn identity_needs_channel() {
        let trace = EnergyTrace { times: vec![0.0], energy: vec![1.0], ..Default::default() };
        assert_eq!(energy_identity_check(&trace), Err(SolverError::MissingChannel));
    }

    #[test]
    fn identity_converges_at_fourth_order() {
        let g = TorusGrid::t1(64).unwrap();
        let w = DampingProfile::poly_product(DampingProfile::cosine(1.0, 0.5, [1, 0]).unwrap(), 0.5).unwrap();
        let state = random_band_limited(g, 1, 6, 3);
        let defect = |dt: f64| {
            let (_, tr) = evolve(state.clone(), Some(&w), 4.0, &SolverConfig::rk4(dt)).unwrap();
            energy_identity_check(&tr).unwrap()
        };
        let (d1, d2, d3) = (defect(0.02), defect(0.01), defect(0.005));
        assert!(d1 / d2 > 12.0 && d2 / d3 > 12.0, "{d1:e} {d2:e} {d3:e}");
    }

    #[test]
    fn growing_off_identity_aligned() {
        let g = TorusGrid::t1(64).unwrap();
        let w = DampingProfile::growing_off(DampingProfile::constant(1.0).unwrap(), 1.0, LengthSequence::power(1.0, 1.0))
            .unwrap();
        let state = random_band_limited(g, 1, 6, 5);
        for cfg in [SolverConfig::rk4(1e-3), SolverConfig::strang(1e-3)] {
            let (_, tr) = evolve(state.clone(), Some(&w), 12.0, &cfg).unwrap();
            assert!(energy_identity_check(&tr).unwrap() < 1e-6, "{cfg:?}");
            // trace is nonincreasing
            assert!(tr.energy.windows(2).all(|p| p[1] <= p[0] + 1e-10));
        }
    }

    #[test]
    fn breakpoints_are_sampled() {
        let g = TorusGrid::t1(32).unwrap();
        let state = random_band_limited(g, 1, 4, 9);
        let (_, tr) = Evolution::new(SolverConfig::rk4(0.01).with_stride(1000))
            .breakpoints([0.123, 1.5])
            .run(state, 2.0)
            .unwrap();
        assert_eq!(tr.times, vec![0.0, 0.123, 1.5, 2.0]);
        tr.validate().unwrap();
    }

    #[test]
    fn separate_observer_channel() {
        // free single mode cos(t)cos(x), weight 1: ∫₀^{2π} π sin²t dt = π²
        let g = TorusGrid::t1(32).unwrap();
        let one = DampingProfile::constant(1.0).unwrap();
        for cfg in [SolverConfig::rk4(1e-3), SolverConfig::strang(1e-3)] {
            let (_, tr) = Evolution::new(cfg).observer(&one).run(single_mode(g, 1.0, 1.0, 0.0), 2.0 * std::f64::consts::PI).unwrap();
            let q = *tr.cum_obs.as_ref().unwrap().last().unwrap();
            let tol = if cfg.scheme == Scheme::Rk4 { 1e-10 } else { 1e-5 };
            assert_relative_eq!(q, std::f64::consts::PI.powi(2), max_relative = tol);
        }
    }

    #[test]
    fn large_mean_does_not_floor_the_decay() {
        // a huge constant in u carries no energy and must not stall the decay
        let g = TorusGrid::t1(32).unwrap();
        let u = Field::from_real_fn(g, FieldKind::Position, |p| 1e6 + (3.0 * p[0]).cos());
        let state = WaveState::new(u, Field::zeros(g, FieldKind::Velocity), 0.0).unwrap();
        let w = DampingProfile::constant(1.0).unwrap();
        for cfg in [SolverConfig::rk4(0.01), SolverConfig::strang(0.01)] {
            let (end, tr) = evolve(state.clone(), Some(&w), 30.0, &cfg).unwrap();
            let ratio = tr.energy.last().unwrap() / tr.energy[0];
            assert!(ratio < 1e-24, "{:?}: {ratio:e}", cfg.scheme);
            let mean = end.u.values().iter().map(|z| z.re).sum::<f64>() / 32.0;
            assert_relative_eq!(mean, 1e6, max_relative = 1e-12);
        }
    }
}
