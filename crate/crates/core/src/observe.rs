//! Observability functionals: observed kinetic energy on a window, the
//! observability ratio, the damped/undamped sandwich, the short-time law for a
//! single eigenmode, and the observation-to-decay bookkeeping.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damping::DampingProfile;
use crate::grid::EnergyTrace;
use crate::rates::loglog_slope;
use crate::solver::{Evolution, SolverConfig, SolverError, WaveState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObserveError {
    #[error("invalid observation window: {0}")]
    InvalidWindow(String),
    #[error("window [{start}, {end}] is not covered by the run samples")]
    OutsideRun { start: f64, end: f64 },
    #[error("unobservable on window [{start}, {end}]: observed quantity is zero")]
    Unobservable { start: f64, end: f64 },
    #[error("δ must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("negative window constant b = {value} at j = {index}")]
    NegativeConstant { index: usize, value: f64 },
    #[error("trace has no cumulative observation channel")]
    MissingChannel,
    #[error("csv output failed: {0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Window [t0, t0 + duration] with observation weight W.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub t0: f64,
    pub duration: f64,
    pub weight: DampingProfile,
}

impl ObservationWindow {
    pub fn new(t0: f64, duration: f64, weight: DampingProfile) -> Result<Self, ObserveError> {
        if !(t0 >= 0.0 && t0.is_finite()) {
            return Err(ObserveError::InvalidWindow(format!("t0 must be ≥ 0, got {t0}")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(ObserveError::InvalidWindow(format!("duration must be > 0, got {duration}")));
        }
        Ok(Self { t0, duration, weight })
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.duration
    }
}

/// Cumulative channel at a sampled time.
fn cum_at(trace: &EnergyTrace, t: f64) -> Option<(usize, f64)> {
    let obs = trace.cum_obs.as_ref()?;
    let i = trace.index_of(t, 1e-9 * t.abs().max(1.0))?;
    Some((i, obs[i]))
}

/// ∫_{t0}^{t0+T}∫W|v|² read off a trace whose observer was `window.weight`.
pub fn observed_quantity(trace: &EnergyTrace, window: &ObservationWindow) -> Result<f64, ObserveError> {
    if trace.cum_obs.is_none() {
        return Err(ObserveError::MissingChannel);
    }
    let outside = ObserveError::OutsideRun { start: window.t0, end: window.end() };
    let (_, a) = cum_at(trace, window.t0).ok_or(outside.clone())?;
    let (_, b) = cum_at(trace, window.end()).ok_or(outside)?;
    Ok((b - a).max(0.0))
}

/// Observed quantity of the free wave started from `state` (taken as the data at t0).
pub fn observe_free(state: &WaveState, window: &ObservationWindow, config: &SolverConfig) -> Result<f64, ObserveError> {
    let mut start = state.clone();
    start.t = window.t0;
    let (_, trace) = Evolution::new(*config).observer(&window.weight).run(start, window.end())?;
    observed_quantity(&trace, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityReport {
    pub t0: f64,
    pub duration: f64,
    pub energy: f64,
    pub observed: f64,
    /// E(ψ, t0) / observed.
    pub ratio: f64,
}

fn report(t0: f64, duration: f64, energy: f64, observed: f64) -> Result<ObservabilityReport, ObserveError> {
    if !(observed > 0.0) {
        return Err(ObserveError::Unobservable { start: t0, end: t0 + duration });
    }
    Ok(ObservabilityReport { t0, duration, energy, observed, ratio: energy / observed })
}

/// C_obs = E(ψ, t0) / ∫∫W|∂ₜψ|² for the free wave with data `state` at t0.
pub fn observability_ratio(
    state: &WaveState,
    window: &ObservationWindow,
    config: &SolverConfig,
) -> Result<ObservabilityReport, ObserveError> {
    let observed = observe_free(state, window, config)?;
    report(window.t0, window.duration, state.energy(), observed)
}

/// C_obs for every start time in `t0s`, from one free run of `state` (data at t = state.t).
pub fn observability_sweep(
    state: &WaveState,
    weight: &DampingProfile,
    duration: f64,
    t0s: &[f64],
    config: &SolverConfig,
) -> Result<Vec<ObservabilityReport>, ObserveError> {
    let mut windows = Vec::with_capacity(t0s.len());
    for &t0 in t0s {
        if t0 < state.t {
            return Err(ObserveError::InvalidWindow(format!("t0 = {t0} precedes the data time {}", state.t)));
        }
        windows.push(ObservationWindow::new(t0, duration, weight.clone())?);
    }
    let t_end = windows.iter().map(|w| w.end()).fold(state.t, f64::max);
    let stops = windows.iter().flat_map(|w| [w.t0, w.end()]);
    let (_, trace) = Evolution::new(*config).observer(weight).breakpoints(stops).run(state.clone(), t_end)?;
    windows
        .iter()
        .map(|w| {
            let observed = observed_quantity(&trace, w)?;
            let (i, _) = cum_at(&trace, w.t0).ok_or(ObserveError::OutsideRun { start: w.t0, end: w.end() })?;
            report(w.t0, w.duration, trace.energy[i], observed)
        })
        .collect()
}

/// Damped (lhs), free (mid) and C_T²·lhs (rhs) observed quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub c_t: f64,
    /// min(mid − lhs, rhs − mid).
    pub slack: f64,
    pub pass: bool,
}

/// Quadrature tolerance on the sandwich slack.
pub const SANDWICH_TOLERANCE: f64 = 1e-8;

/// Compares the damped and free runs from the same data at t0 = state.t over [t0, t0 + duration].
pub fn sandwich_check(
    state: &WaveState,
    w: &DampingProfile,
    duration: f64,
    config: &SolverConfig,
) -> Result<SandwichReport, ObserveError> {
    let window = ObservationWindow::new(state.t, duration, w.clone())?;
    let (_, damped) = Evolution::new(*config).damping(Some(w)).run(state.clone(), window.end())?;
    let lhs = observed_quantity(&damped, &window)?;
    let mid = observe_free(state, &window, config)?;
    let c_t = 1.0 + 2.0 * duration * w.sup_norm();
    let rhs = c_t * c_t * lhs;
    let slack = (mid - lhs).min(rhs - mid);
    Ok(SandwichReport { lhs, mid, rhs, c_t, slack, pass: slack >= -SANDWICH_TOLERANCE })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeRow {
    pub delta: f64,
    pub energy: f64,
    pub observed: f64,
    /// energy / observed
    pub ratio: f64,
    /// ratio·δ³
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeTable {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub rows: Vec<ShortTimeRow>,
    /// log–log slope of ratio against δ.
    pub slope: f64,
}

impl ShortTimeTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ObserveError> {
        let err = |e: csv::Error| ObserveError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "lambda", "delta", "energy", "observed", "ratio", "c", "slope"]).map_err(err)?;
        for r in &self.rows {
            w.write_record(
                [self.a, self.b, self.lambda, r.delta, r.energy, r.observed, r.ratio, r.c, self.slope].map(|v| format!("{v:e}")),
            )
            .map_err(err)?;
        }
        w.flush().map_err(|e| ObserveError::Io(e.to_string()))
    }
}

/// 2X − sin 2X, by series for small X.
fn two_x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let y = 2.0 * x;
        let y2 = y * y;
        // y³/3! − y⁵/5! + y⁷/7! − y⁹/9!
        y * y2 * (1.0 / 6.0 - y2 * (1.0 / 120.0 - y2 * (1.0 / 5040.0 - y2 / 362880.0)))
    } else {
        2.0 * x - (2.0 * x).sin()
    }
}

/// ψ = (A cos λt + B sin λt)·φ with ‖φ‖ = 1 and −Δφ = λ²φ; C(δ) for each δ.
pub fn short_time_sweep(a: f64, b: f64, lambda: f64, deltas: &[f64]) -> Result<ShortTimeTable, ObserveError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ObserveError::InvalidMode(format!("λ must be positive, got {lambda}")));
    }
    if a == 0.0 && b == 0.0 {
        return Err(ObserveError::InvalidMode("A = B = 0 has no energy".into()));
    }
    let energy = 0.5 * lambda * lambda * (a * a + b * b);
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(delta > 0.0) {
            return Err(ObserveError::InvalidDelta(delta));
        }
        let x = lambda * delta;
        let s = two_x_minus_sin(x);
        let i_sin = s / (4.0 * lambda);
        let i_cos = (4.0 * x - s) / (4.0 * lambda);
        let i_mix = x.sin().powi(2) / (2.0 * lambda);
        // ∂ₜψ = λ(−A sin λt + B cos λt)φ
        let observed = lambda * lambda * (a * a * i_sin + b * b * i_cos - 2.0 * a * b * i_mix);
        let ratio = energy / observed;
        rows.push(ShortTimeRow { delta, energy, observed, ratio, c: ratio * delta.powi(3) });
    }
    let slope = if rows.len() >= 2 {
        let d: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        let q: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        loglog_slope(&d, &q)
    } else {
        f64::NAN
    };
    Ok(ShortTimeTable { a, b, lambda, rows, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayBookkeeping {
    /// exp(−B(k)) for k = 0..=len(b).
    pub bounds: Vec<f64>,
    /// Indices j with b(jT0) ≥ 1.
    pub flagged: Vec<usize>,
}

/// Predicted bound factors exp(−Σ_{j<k} b_j); a window with b ≥ 1 zeroes the rest.
pub fn decay_bookkeeping(b: &[f64]) -> Result<DecayBookkeeping, ObserveError> {
    let mut bounds = Vec::with_capacity(b.len() + 1);
    let mut flagged = Vec::new();
    let mut sum = 0.0;
    let mut absorbed = false;
    bounds.push(1.0);
    for (j, &bj) in b.iter().enumerate() {
        if !(bj >= 0.0) {
            return Err(ObserveError::NegativeConstant { index: j, value: bj });
        }
        if bj >= 1.0 {
            flagged.push(j);
            absorbed = true;
        }
        sum += bj;
        bounds.push(if absorbed { 0.0 } else { (-sum).exp() });
    }
    Ok(DecayBookkeeping { bounds, flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub period: f64,
    /// Measured b(jT0) = observed_j / E(jT0).
    pub b: Vec<f64>,
    /// E(kT0).
    pub energy: Vec<f64>,
    /// E(0)·exp(−B(k)).
    pub bound: Vec<f64>,
    pub flagged: Vec<usize>,
    /// max_k E(kT0) − bound_k.
    pub worst_excess: f64,
    pub pass: bool,
}

/// Checks E(kT0) ≤ E(0)·exp(−B(k)) on a damped trace (observer = damping) sampled at every kT0.
pub fn check_decay_trace(trace: &EnergyTrace, period: f64) -> Result<DecayCheck, ObserveError> {
    if !(period > 0.0) {
        return Err(ObserveError::InvalidWindow(format!("T0 must be positive, got {period}")));
    }
    let obs = trace.cum_obs.as_ref().ok_or(ObserveError::MissingChannel)?;
    let t_start = trace.times.first().copied().unwrap_or(0.0);
    let t_end = trace.times.last().copied().unwrap_or(0.0);
    let n = ((t_end - t_start) / period + 1e-9).floor() as usize;
    let mut idx = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = t_start + k as f64 * period;
        let i = trace.index_of(t, 1e-9 * t.abs().max(1.0)).ok_or(ObserveError::OutsideRun { start: t, end: t })?;
        idx.push(i);
    }
    let energy: Vec<f64> = idx.iter().map(|&i| trace.energy[i]).collect();
    let b: Vec<f64> = (0..n).map(|j| (obs[idx[j + 1]] - obs[idx[j]]).max(0.0) / energy[j]).collect();
    let book = decay_bookkeeping(&b)?;
    let bound: Vec<f64> = book.bounds.iter().map(|f| f * energy[0]).collect();
    let worst_excess = energy.iter().zip(&bound).map(|(e, c)| e - c).fold(f64::NEG_INFINITY, f64::max);
    let pass = energy.iter().zip(&bound).all(|(e, c)| *e <= c * (1.0 + 1e-10) + 1e-14 * energy[0]);
    Ok(DecayCheck { period, b, energy, bound, flagged: book.flagged, worst_excess, pass })
}
