//! Straight-line geodesics on flat tori and the damping functionals built
//! from line integrals of W along them: G, Σ(t), L(T), L∞ and the
//! time-dependent geometric control check.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damping::{DampingError, DampingProfile};
use crate::grid::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("integration interval is reversed: t1 = {t1} < t0 = {t0}")]
    ReversedInterval { t0: f64, t1: f64 },
    #[error("window length must be positive, got {0}")]
    NonPositiveWindow(f64),
    #[error("invalid geodesic: {0}")]
    InvalidGeodesic(String),
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error(transparent)]
    Damping(#[from] DampingError),
}

/// Unit-speed line γ(s) = x0 + s·direction, parametrized by absolute time s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub x0: Point,
    pub direction: [f64; 2],
}

impl Geodesic {
    pub fn new(x0: Point, direction: [f64; 2]) -> Result<Self, GeodesicError> {
        let norm = direction[0].hypot(direction[1]);
        if !((norm - 1.0).abs() < 1e-12) || !x0.iter().all(|v| v.is_finite()) {
            return Err(GeodesicError::InvalidGeodesic(format!(
                "direction {direction:?} is not a unit vector or x0 {x0:?} is not finite"
            )));
        }
        Ok(Self { x0, direction })
    }

    /// Line on T¹ moving right (`forward`) or left.
    pub fn t1(x0: f64, forward: bool) -> Self {
        Self { x0: [x0, 0.0], direction: [if forward { 1.0 } else { -1.0 }, 0.0] }
    }

    /// Line on T² with direction angle θ.
    pub fn t2(x0: Point, theta: f64) -> Self {
        Self { x0, direction: [theta.cos(), theta.sin()] }
    }

    /// γ(s), not wrapped.
    pub fn at(&self, s: f64) -> Point {
        [self.x0[0] + s * self.direction[0], self.x0[1] + s * self.direction[1]]
    }

    /// γ(s) wrapped into [0, period)².
    pub fn position(&self, s: f64, period: f64) -> Point {
        let p = self.at(s);
        [p[0].rem_euclid(period), p[1].rem_euclid(period)]
    }

    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }
}

/// Deterministic sample of geodesics and start times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicSampling {
    pub dim: usize,
    pub period: f64,
    /// Base points per axis.
    pub n_points: usize,
    /// Directions on the circle (T² only); the axes and the diagonal are always added.
    pub n_directions: usize,
    /// Start-time samples per window, uniform on [0, t0_max].
    pub n_start_times: usize,
    pub t0_max: f64,
    /// Upper bound for the midpoint step.
    pub quadrature_step: f64,
    /// Golden-section pass around the grid minimizer.
    pub refine: bool,
    /// Rungs of the dyadic window ladder used by L∞ and the control check.
    pub ladder_len: usize,
}

impl Default for GeodesicSampling {
    fn default() -> Self {
        Self {
            dim: 1,
            period: 2.0 * PI,
            n_points: 16,
            n_directions: 8,
            n_start_times: 1,
            t0_max: 0.0,
            quadrature_step: 0.01,
            refine: true,
            ladder_len: 6,
        }
    }
}

impl GeodesicSampling {
    pub fn t1(n_points: usize) -> Self {
        Self { dim: 1, n_points, ..Self::default() }
    }

    pub fn t2(n_points: usize, n_directions: usize) -> Self {
        Self { dim: 2, n_points, n_directions, ..Self::default() }
    }

    pub fn with_start_times(mut self, n: usize, t0_max: f64) -> Self {
        self.n_start_times = n;
        self.t0_max = t0_max;
        self
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn validate(&self) -> Result<(), GeodesicError> {
        let bad = |m: &str| Err(GeodesicError::InvalidSampling(m.to_string()));
        if self.dim != 1 && self.dim != 2 {
            return bad("dim must be 1 or 2");
        }
        if self.n_points == 0 || self.n_directions == 0 || self.n_start_times == 0 || self.ladder_len == 0 {
            return bad("all counts must be at least 1");
        }
        if !(self.quadrature_step > 0.0) || !(self.period > 0.0) || !(self.t0_max >= 0.0) {
            return bad("quadrature_step and period must be positive, t0_max nonnegative");
        }
        Ok(())
    }

    /// Direction angles on T², uniform plus the axes and the diagonal, deduplicated.
    pub fn angles(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.n_directions).map(|j| 2.0 * PI * j as f64 / self.n_directions as f64).collect();
        for extra in [0.0, 0.5 * PI, 0.25 * PI] {
            if !out.iter().any(|a| (a - extra).abs() < 1e-12) {
                out.push(extra);
            }
        }
        out
    }

    /// All sampled geodesics, in a fixed order.
    pub fn geodesics(&self) -> Vec<Geodesic> {
        let h = self.period / self.n_points as f64;
        if self.dim == 1 {
            (0..self.n_points)
                .flat_map(|i| [Geodesic::t1(i as f64 * h, true), Geodesic::t1(i as f64 * h, false)])
                .collect()
        } else {
            let angles = self.angles();
            let mut out = Vec::with_capacity(self.n_points * self.n_points * angles.len());
            for j in 0..self.n_points {
                for i in 0..self.n_points {
                    for &a in &angles {
                        out.push(Geodesic::t2([i as f64 * h, j as f64 * h], a));
                    }
                }
            }
            out
        }
    }

    pub fn start_times(&self) -> Vec<f64> {
        if self.n_start_times == 1 {
            return vec![0.0];
        }
        let n = self.n_start_times - 1;
        (0..=n).map(|i| self.t0_max * i as f64 / n as f64).collect()
    }
}

fn midpoint(w: &DampingProfile, g: &Geodesic, a: f64, b: f64, h_max: f64) -> Result<f64, DampingError> {
    let len = b - a;
    if len <= 0.0 {
        return Ok(0.0);
    }
    let n = (len / h_max.min(len / 8.0)).ceil().max(1.0) as usize;
    let h = len / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let s = a + (i as f64 + 0.5) * h;
        sum += w.eval(g.at(s), s)?;
    }
    Ok(sum * h)
}

/// ∫ W(γ(s), s) ds over [t0, t1], split at the damping's switch times.
pub fn line_integral(w: &DampingProfile, g: &Geodesic, t0: f64, t1: f64) -> Result<f64, GeodesicError> {
    line_integral_with_step(w, g, t0, t1, 0.01)
}

pub fn line_integral_with_step(
    w: &DampingProfile,
    g: &Geodesic,
    t0: f64,
    t1: f64,
    h_max: f64,
) -> Result<f64, GeodesicError> {
    Ok(cumulative_integral(w, g, t0, &[t1], h_max)?[0])
}

/// Running integrals ∫_{t0}^{t} W(γ(s), s) ds at every `t` in `times` (sorted, ≥ t0).
pub fn cumulative_integral(
    w: &DampingProfile,
    g: &Geodesic,
    t0: f64,
    times: &[f64],
    h_max: f64,
) -> Result<Vec<f64>, GeodesicError> {
    if t0 < 0.0 {
        return Err(DampingError::NegativeTime(t0).into());
    }
    let mut out = Vec::with_capacity(times.len());
    let Some(&t_end) = times.last() else { return Ok(out) };
    let switches = w.discontinuity_times(t_end);
    let mut si = switches.partition_point(|&s| s <= t0);
    let mut acc = 0.0;
    let mut a = t0;
    for &t in times {
        if t < a {
            return Err(GeodesicError::ReversedInterval { t0: a, t1: t });
        }
        while si < switches.len() && switches[si] < t {
            acc += midpoint(w, g, a, switches[si], h_max)?;
            a = switches[si];
            si += 1;
        }
        acc += midpoint(w, g, a, t, h_max)?;
        a = t;
        out.push(acc);
    }
    Ok(out)
}

/// G(γ, t0, t) = exp(−∫_{t0}^{t} W(γ(s), s) ds).
pub fn propagator_g(w: &DampingProfile, g: &Geodesic, t0: f64, t: f64) -> Result<f64, GeodesicError> {
    Ok((-line_integral(w, g, t0, t)?).exp())
}

/// Where an infimum was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub geodesic: Geodesic,
    pub t0: f64,
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub t: f64,
    pub sigma: f64,
    pub witness: Witness,
    pub sampling: GeodesicSampling,
}

/// One (geodesic, start time) candidate: min over the grid, ties to the lowest index.
fn grid_min(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
}

fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coordinates of a candidate: x, y, angle, start time.
#[derive(Clone, Copy)]
struct Candidate {
    coords: [f64; 4],
}

impl Candidate {
    fn of(g: &Geodesic, t0: f64) -> Self {
        Self { coords: [g.x0[0], g.x0[1], g.angle(), t0] }
    }

    fn geodesic(&self, dim: usize) -> Geodesic {
        if dim == 1 {
            Geodesic { x0: [self.coords[0], 0.0], direction: [self.coords[2].cos().round(), 0.0] }
        } else {
            Geodesic::t2([self.coords[0], self.coords[1]], self.coords[2])
        }
    }
}

/// One golden-section pass along each free coordinate, starting from `start`.
fn refine(
    sampling: &GeodesicSampling,
    start: Candidate,
    value: f64,
    free_t0: bool,
    objective: impl Fn(&Geodesic, f64) -> f64,
) -> (Candidate, f64) {
    let h = sampling.period / sampling.n_points as f64;
    let dtheta = 2.0 * PI / sampling.angles().len() as f64;
    let dt0 = if sampling.n_start_times > 1 { sampling.t0_max / (sampling.n_start_times - 1) as f64 } else { 0.0 };
    let mut axes = vec![(0usize, h)];
    if sampling.dim == 2 {
        axes.push((1, h));
        axes.push((2, dtheta));
    }
    if free_t0 && dt0 > 0.0 {
        axes.push((3, dt0));
    }
    let (mut best, mut best_v) = (start, value);
    for (axis, radius) in axes {
        let mut lo = best.coords[axis] - radius;
        let mut hi = best.coords[axis] + radius;
        if axis == 3 {
            lo = lo.max(0.0);
            hi = hi.min(sampling.t0_max);
        }
        let eval = |c: f64| {
            let mut cand = best;
            cand.coords[axis] = c;
            objective(&cand.geodesic(sampling.dim), cand.coords[3])
        };
        let (c, v) = golden_section(eval, lo, hi);
        if v < best_v {
            best.coords[axis] = c;
            best_v = v;
        }
    }
    (best, best_v)
}

/// Σ(t): least damping accumulated on [0, t] over the sampled geodesics.
pub fn sigma(w: &DampingProfile, t: f64, sampling: &GeodesicSampling) -> Result<SigmaReport, GeodesicError> {
    sampling.validate()?;
    if t < 0.0 {
        return Err(DampingError::NegativeTime(t).into());
    }
    let geos = sampling.geodesics();
    let step = sampling.quadrature_step;
    let values = geos
        .par_iter()
        .map(|g| line_integral_with_step(w, g, 0.0, t, step))
        .collect::<Result<Vec<_>, _>>()?;
    let (i, mut best) = grid_min(&values);
    let mut witness = Witness { geodesic: geos[i], t0: 0.0, window: t };
    if sampling.refine && t > 0.0 {
        let objective = |g: &Geodesic, _t0: f64| line_integral_with_step(w, g, 0.0, t, step).unwrap_or(f64::INFINITY);
        let (cand, v) = refine(sampling, Candidate::of(&geos[i], 0.0), best, false, objective);
        if v < best {
            best = v;
            witness.geodesic = cand.geodesic(sampling.dim);
        }
    }
    Ok(SigmaReport { t, sigma: best, witness, sampling: sampling.clone() })
}

/// Σ at every time in `times` (sorted), from one pass per sampled geodesic. No refinement.
pub fn sigma_curve(w: &DampingProfile, times: &[f64], sampling: &GeodesicSampling) -> Result<Vec<f64>, GeodesicError> {
    sampling.validate()?;
    let step = sampling.quadrature_step;
    let per_geodesic = sampling
        .geodesics()
        .par_iter()
        .map(|g| cumulative_integral(w, g, 0.0, times, step))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..times.len()).map(|k| per_geodesic.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: f64,
    pub min_average: f64,
    pub witness: Witness,
}

/// L(T): least window average of W over the sampled geodesics and start times.
pub fn l_of_t(w: &DampingProfile, window: f64, sampling: &GeodesicSampling) -> Result<WindowReport, GeodesicError> {
    sampling.validate()?;
    if !(window > 0.0) {
        return Err(GeodesicError::NonPositiveWindow(window));
    }
    let geos = sampling.geodesics();
    let starts = sampling.start_times();
    let step = sampling.quadrature_step;
    let pairs: Vec<(usize, f64)> = starts.iter().flat_map(|&t0| (0..geos.len()).map(move |g| (g, t0))).collect();
    let values = pairs
        .par_iter()
        .map(|&(g, t0)| line_integral_with_step(w, &geos[g], t0, t0 + window, step).map(|v| v / window))
        .collect::<Result<Vec<_>, _>>()?;
    let (i, mut best) = grid_min(&values);
    let (g, t0) = pairs[i];
    let mut witness = Witness { geodesic: geos[g], t0, window };
    if sampling.refine {
        let objective = |g: &Geodesic, t0: f64| {
            line_integral_with_step(w, g, t0, t0 + window, step).map_or(f64::INFINITY, |v| v / window)
        };
        let (cand, v) = refine(sampling, Candidate::of(&geos[g], t0), best, true, objective);
        if v < best {
            best = v;
            witness = Witness { geodesic: cand.geodesic(sampling.dim), t0: cand.coords[3], window };
        }
    }
    Ok(WindowReport { window, min_average: best, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LInfinityReport {
    pub l_infinity: f64,
    /// L(T) on the ladder T_max/2^m, longest window first.
    pub curve: Vec<WindowReport>,
}

/// max of L(T) over T ∈ {T_max / 2^m}.
pub fn l_infinity(w: &DampingProfile, sampling: &GeodesicSampling, t_max: f64) -> Result<LInfinityReport, GeodesicError> {
    if !(t_max > 0.0) {
        return Err(GeodesicError::NonPositiveWindow(t_max));
    }
    let curve = (0..sampling.ladder_len)
        .map(|m| l_of_t(w, t_max / 2f64.powi(m as i32), sampling))
        .collect::<Result<Vec<_>, _>>()?;
    let l_infinity = curve.iter().map(|r| r.min_average).fold(f64::NEG_INFINITY, f64::max);
    Ok(LInfinityReport { l_infinity, curve })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgccReport {
    pub t0_threshold: f64,
    pub min_average: f64,
    pub witness: Witness,
    pub satisfied: bool,
    pub tolerance: f64,
    /// L(T) on the ladder T0·2^m.
    pub curve: Vec<WindowReport>,
    pub sampling: GeodesicSampling,
}

/// Averages below this count as zero in the control check.
pub const TGCC_TOLERANCE: f64 = 1e-8;

/// Least window average over the ladder T ∈ {T0·2^m}; satisfied when it is positive.
pub fn check_tgcc(w: &DampingProfile, t0_threshold: f64, sampling: &GeodesicSampling) -> Result<TgccReport, GeodesicError> {
    if !(t0_threshold > 0.0) {
        return Err(GeodesicError::NonPositiveWindow(t0_threshold));
    }
    let curve = (0..sampling.ladder_len)
        .map(|m| l_of_t(w, t0_threshold * 2f64.powi(m as i32), sampling))
        .collect::<Result<Vec<_>, _>>()?;
    let best = curve
        .iter()
        .fold(&curve[0], |b, r| if r.min_average < b.min_average { r } else { b });
    Ok(TgccReport {
        t0_threshold,
        min_average: best.min_average,
        witness: best.witness,
        satisfied: best.min_average > TGCC_TOLERANCE,
        tolerance: TGCC_TOLERANCE,
        curve: curve.clone(),
        sampling: sampling.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{BumpShape, LengthSequence};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn growing_linear() -> DampingProfile {
        DampingProfile::growing_off(DampingProfile::constant(1.0).unwrap(), 1.0, LengthSequence::power(1.0, 1.0)).unwrap()
    }

    fn one_plus_cos() -> DampingProfile {
        DampingProfile::cosine(1.0, 1.0, [1, 0]).unwrap()
    }

    #[test]
    fn line_integral_examples() {
        let c = DampingProfile::constant(0.3).unwrap();
        let g = Geodesic::t2([0.4, 1.0], 0.7);
        assert_relative_eq!(line_integral(&c, &g, 0.0, 5.0).unwrap(), 1.5, max_relative = 1e-12);

        let x = Geodesic::t1(0.0, true);
        assert_relative_eq!(line_integral(&one_plus_cos(), &x, 0.0, 2.0 * PI).unwrap(), 2.0 * PI, max_relative = 1e-12);

        assert_relative_eq!(line_integral(&growing_linear(), &g, 0.0, 6.0).unwrap(), 3.0, max_relative = 1e-12);
        assert!(matches!(line_integral(&c, &g, 2.0, 1.0), Err(GeodesicError::ReversedInterval { .. })));
    }

    #[test]
    fn propagator_examples() {
        let g = Geodesic::t1(1.0, false);
        assert_eq!(propagator_g(&DampingProfile::constant(0.0).unwrap(), &g, 0.0, 3.0).unwrap(), 1.0);
        let a = DampingProfile::constant(0.2).unwrap();
        assert_relative_eq!(propagator_g(&a, &g, 1.0, 4.0).unwrap(), (-0.6f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(propagator_g(&growing_linear(), &g, 0.0, 6.0).unwrap(), (-3.0f64).exp(), max_relative = 1e-12);
        assert_eq!(propagator_g(&a, &g, 2.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn sigma_examples() {
        let a = DampingProfile::constant(0.25).unwrap();
        let r = sigma(&a, 4.0, &GeodesicSampling::t2(4, 4)).unwrap();
        assert_relative_eq!(r.sigma, 1.0, max_relative = 1e-12);

        // bump kept off the strip |x₁| < 0.5 so the vertical line x₁ = 0 never meets it
        let bump = DampingProfile::space_bump(1.0, [PI, PI], 1.5, BumpShape::Smooth).unwrap();
        for t in [1.0, 5.0, 20.0] {
            let r = sigma(&bump, t, &GeodesicSampling::t2(4, 4)).unwrap();
            assert_eq!(r.sigma, 0.0);
        }

        // dense oracle over base points: every full-period average equals the mean 1
        let w = one_plus_cos();
        let oracle = (0..200)
            .map(|i| {
                let x0 = 2.0 * PI * i as f64 / 200.0;
                line_integral(&w, &Geodesic::t1(x0, true), 0.0, 2.0 * PI).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let r = sigma(&w, 2.0 * PI, &GeodesicSampling::t1(8)).unwrap();
        assert_relative_eq!(r.sigma, oracle, max_relative = 1e-9);
        assert_relative_eq!(r.sigma, 2.0 * PI, max_relative = 1e-9);
    }

    #[test]
    fn window_functionals() {
        let a = DampingProfile::constant(0.4).unwrap();
        let s = GeodesicSampling::t2(2, 4).with_start_times(3, 10.0);
        assert_relative_eq!(l_of_t(&a, 3.0, &s).unwrap().min_average, 0.4, max_relative = 1e-12);
        assert_relative_eq!(l_infinity(&a, &s, 8.0).unwrap().l_infinity, 0.4, max_relative = 1e-12);
        assert!(l_of_t(&a, 0.0, &s).is_err());

        // (1/T)ln((1+t0+T)/(1+t0)) is decreasing in t0: the last start time wins
        let p = DampingProfile::poly_product(DampingProfile::constant(1.0).unwrap(), 1.0).unwrap();
        let oracle = |t0: f64, t: f64| ((1.0 + t0 + t) / (1.0 + t0)).ln() / t;
        let mut prev = f64::INFINITY;
        for t0_max in [10.0, 100.0, 1000.0] {
            let s = GeodesicSampling::t1(1).with_start_times(5, t0_max).with_refine(false);
            let r = l_of_t(&p, 2.0, &s).unwrap();
            assert_relative_eq!(r.min_average, oracle(t0_max, 2.0), max_relative = 1e-6);
            assert!(r.min_average < prev);
            prev = r.min_average;
        }
        assert!(prev < 2e-3);
    }

    #[test]
    fn tgcc_examples() {
        let a = DampingProfile::constant(0.5).unwrap();
        let r = check_tgcc(&a, 1.0, &GeodesicSampling::t2(2, 4)).unwrap();
        assert!(r.satisfied);
        assert_relative_eq!(r.min_average, 0.5, max_relative = 1e-12);

        let bump = DampingProfile::space_bump(1.0, [PI, PI], 1.5, BumpShape::Smooth).unwrap();
        let r = check_tgcc(&bump, 2.0, &GeodesicSampling::t2(4, 4)).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.min_average, 0.0);

        // the gap after the on-interval [54, 55] is 10 long
        let s = GeodesicSampling { ladder_len: 2, ..GeodesicSampling::t1(1).with_start_times(101, 100.0) };
        let r = check_tgcc(&growing_linear(), 10.0, &s).unwrap();
        assert!(!r.satisfied);
        assert!(r.min_average <= 0.2);
        let oracle = line_integral(&growing_linear(), &Geodesic::t1(0.0, true), 6.0, 16.0).unwrap() / 10.0;
        assert!(oracle <= 0.2);
    }

    #[test]
    fn refinement_never_increases() {
        let w = DampingProfile::space_bump(1.0, [2.0, 3.0], 1.2, BumpShape::Smooth).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2, 4, 8] {
            let r = sigma(&w, 3.0, &GeodesicSampling::t2(n, 4).with_refine(false)).unwrap();
            assert!(r.sigma <= prev + 1e-15);
            prev = r.sigma;
            let refined = sigma(&w, 3.0, &GeodesicSampling::t2(n, 4)).unwrap();
            assert!(refined.sigma <= r.sigma);
        }
    }

    #[test]
    fn sigma_curve_matches_pointwise() {
        let w = growing_linear();
        let s = GeodesicSampling::t1(4).with_refine(false);
        let times = [0.5, 2.5, 6.0, 12.0];
        let curve = sigma_curve(&w, &times, &s).unwrap();
        for (t, c) in times.iter().zip(&curve) {
            assert_relative_eq!(*c, sigma(&w, *t, &s).unwrap().sigma, max_relative = 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn sigma_is_an_infimum(t in 0.1..20.0f64, x in 0.0..6.0f64, y in 0.0..6.0f64, th in 0.0..std::f64::consts::TAU) {
            let w = DampingProfile::space_bump(0.8, [2.0, 3.0], 1.2, BumpShape::Smooth).unwrap();
            let s = GeodesicSampling::t2(4, 4);
            let sig = sigma(&w, t, &s).unwrap().sigma;
            for g in s.geodesics() {
                prop_assert!(sig <= line_integral(&w, &g, 0.0, t).unwrap() + 1e-12);
            }
            let g = propagator_g(&w, &Geodesic::t2([x, y], th), 0.0, t).unwrap();
            prop_assert!(g > 0.0 && g <= 1.0);
        }

        #[test]
        fn window_superadditivity(s in 0.2..5.0f64, t in 0.2..5.0f64) {
            // exact values are T − 2|sin(T/2)|, superadditive because |sin| is subadditive
            let w = one_plus_cos();
            let sam = GeodesicSampling { quadrature_step: 1e-3, ..GeodesicSampling::t1(16) };
            let l = |x: f64| x * l_of_t(&w, x, &sam).unwrap().min_average;
            prop_assert!(l(s + t) >= l(s) + l(t) - 1e-6);
        }
    }
}
