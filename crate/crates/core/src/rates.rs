//! Decay-law fits for energy traces and the closed-form rate predictions for
//! the polynomial, growing-off and shrinking-on damping families.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damping::LengthSequence;
use crate::grid::EnergyTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("nonpositive energy {energy} at t = {t}")]
    NonPositiveEnergy { t: f64, energy: f64 },
    #[error("fit window [{t_min}, {t_max}] holds {count} samples, need at least 8")]
    TooFewSamples { t_min: f64, t_max: f64, count: usize },
    #[error("trace has no Σ(t) channel")]
    MissingSigma,
    #[error("stretched fit needs E < E(0) inside the window (t = {0})")]
    NoDecay(f64),
    #[error("fitted rate {0} is negative")]
    NegativeRate(f64),
    #[error("expected an {expected:?} fit, got {got:?}")]
    WrongModel { expected: RateModel, got: RateModel },
    #[error("gap function falls below C1 = {c1} at z = {z} (f = {f})")]
    GapBelowFloor { c1: f64, z: f64, f: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv output failed: {0}")]
    Io(String),
}

/// Ordinary least squares y ≈ a + b·x; returns (b, a, RMS residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icept, rms)
}

/// Slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// E ≈ C·e^{−cΣ(t)}
    ExpSigma,
    /// E ≈ C·e^{−c·t^p}
    Stretched,
    /// E ≈ C·(1+t)^{−c}
    Power,
    /// E ≈ C·ln(2+t)^{−c}
    LogPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Prefactor C.
    pub prefactor: f64,
    /// Rate c.
    pub rate: f64,
    /// Stretch exponent p (stretched model only).
    pub exponent: Option<f64>,
    /// RMS of log E − log model over the window.
    pub residual: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl RateFit {
    /// log model(t) given Σ(t) where needed.
    pub fn log_model(&self, t: f64, sigma: f64) -> f64 {
        let lc = self.prefactor.ln();
        match self.model {
            RateModel::ExpSigma => lc - self.rate * sigma,
            RateModel::Stretched => lc - self.rate * t.powf(self.exponent.unwrap_or(1.0)),
            RateModel::Power => lc - self.rate * (1.0 + t).ln(),
            RateModel::LogPower => lc - self.rate * (2.0 + t).ln().ln(),
        }
    }

    /// Human-readable block.
    pub fn summary(&self) -> String {
        let p = self.exponent.map_or(String::new(), |p| format!(" p = {p:.4}"));
        format!(
            "model {:?} on [{:.3}, {:.3}] ({} samples): C = {:.4e} c = {:.4}{} residual = {:.3e}",
            self.model, self.t_min, self.t_max, self.samples, self.prefactor, self.rate, p, self.residual
        )
    }

    pub fn write_csv<W: Write>(fits: &[RateFit], out: W) -> Result<(), RateError> {
        let err = |e: csv::Error| RateError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "prefactor", "rate", "exponent", "residual", "t_min", "t_max", "samples"])
            .map_err(err)?;
        for f in fits {
            w.write_record([
                format!("{:?}", f.model).to_lowercase(),
                format!("{:e}", f.prefactor),
                format!("{:e}", f.rate),
                f.exponent.map_or(String::new(), |p| format!("{p:e}")),
                format!("{:e}", f.residual),
                format!("{:e}", f.t_min),
                format!("{:e}", f.t_max),
                f.samples.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| RateError::Io(e.to_string()))
    }
}

/// Default window [0.2·t_max, t_max].
pub fn default_window(trace: &EnergyTrace) -> (f64, f64) {
    let t_max = trace.times.last().copied().unwrap_or(0.0);
    (0.2 * t_max, t_max)
}

/// Least-squares fit of `model` to the trace samples inside `window`.
pub fn fit(trace: &EnergyTrace, model: RateModel, window: Option<(f64, f64)>) -> Result<RateFit, RateError> {
    let (t_min, t_max) = window.unwrap_or_else(|| default_window(trace));
    let idx: Vec<usize> = (0..trace.len()).filter(|&i| trace.times[i] >= t_min && trace.times[i] <= t_max).collect();
    if idx.len() < 8 {
        return Err(RateError::TooFewSamples { t_min, t_max, count: idx.len() });
    }
    for &i in &idx {
        if !(trace.energy[i] > 0.0) {
            return Err(RateError::NonPositiveEnergy { t: trace.times[i], energy: trace.energy[i] });
        }
    }
    let t: Vec<f64> = idx.iter().map(|&i| trace.times[i]).collect();
    let log_e: Vec<f64> = idx.iter().map(|&i| trace.energy[i].ln()).collect();
    let sigma: Vec<f64> = match (&trace.sigma, model) {
        (Some(s), _) => idx.iter().map(|&i| s[i]).collect(),
        (None, RateModel::ExpSigma) => return Err(RateError::MissingSigma),
        (None, _) => vec![0.0; idx.len()],
    };
    let (prefactor, rate, exponent) = match model {
        RateModel::Stretched => {
            let e0 = trace.energy[0];
            let mut x = Vec::with_capacity(t.len());
            let mut y = Vec::with_capacity(t.len());
            for (ti, le) in t.iter().zip(&log_e) {
                let decay = e0.ln() - le;
                if !(decay > 0.0) || !(*ti > 0.0) {
                    return Err(RateError::NoDecay(*ti));
                }
                x.push(ti.ln());
                y.push(decay.ln());
            }
            let (p, lc, _) = linear_fit(&x, &y);
            (e0, lc.exp(), Some(p))
        }
        _ => {
            let x: Vec<f64> = match model {
                RateModel::ExpSigma => sigma.clone(),
                RateModel::Power => t.iter().map(|v| (1.0 + v).ln()).collect(),
                _ => t.iter().map(|v| (2.0 + v).ln().ln()).collect(),
            };
            let (slope, icept, _) = linear_fit(&x, &log_e);
            (icept.exp(), -slope, None)
        }
    };
    if rate < 0.0 {
        return Err(RateError::NegativeRate(rate));
    }
    let mut out = RateFit { model, prefactor, rate, exponent, residual: 0.0, t_min, t_max, samples: idx.len() };
    let ss: f64 = (0..t.len()).map(|i| (log_e[i] - out.log_model(t[i], sigma[i])).powi(2)).sum();
    out.residual = (ss / t.len() as f64).sqrt();
    Ok(out)
}

/// Upper limit on the fitted Σ-rate before a fit counts as exceeding c ≤ 2.
pub const SIGMA_RATE_LIMIT: f64 = 2.0 + 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub diagnostic: String,
}

/// Passes when the fitted Σ-rate is at most 2 (plus tolerance).
pub fn sigma_exponent_bound_check(fit: &RateFit) -> Result<Verdict, RateError> {
    if fit.model != RateModel::ExpSigma {
        return Err(RateError::WrongModel { expected: RateModel::ExpSigma, got: fit.model });
    }
    let pass = fit.rate <= SIGMA_RATE_LIMIT;
    let diagnostic = if pass {
        format!("fitted rate {:.4} within the limit {SIGMA_RATE_LIMIT}", fit.rate)
    } else {
        format!(
            "fitted rate {:.4} exceeds {SIGMA_RATE_LIMIT}: check Σ sampling, resolution and fit window [{}, {}]",
            fit.rate, fit.t_min, fit.t_max
        )
    };
    Ok(Verdict { pass, value: fit.rate, limit: SIGMA_RATE_LIMIT, diagnostic })
}

/// Qualitative decay law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RateForm {
    Exponential,
    /// exp(−c·t^p)
    Stretched { exponent: f64 },
    /// (1+t)^{−c}
    Power,
    /// ln(2+t)^{−c}
    LogPower,
    /// No uniform rate.
    None,
}

impl RateForm {
    /// Stretch exponent when the form has one (exponential counts as 1).
    pub fn stretch_exponent(&self) -> Option<f64> {
        match self {
            RateForm::Exponential => Some(1.0),
            RateForm::Stretched { exponent } => Some(*exponent),
            _ => None,
        }
    }
}

/// Adaptive Simpson quadrature of f on [a, b].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol || !diff.is_finite() {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Running integral of the gap function with inverse by bisection.
#[derive(Debug, Clone, Copy)]
pub struct GapIntegral {
    pub f: LengthSequence,
    /// Lower integration limit at x = 0; the upper limit is x + offset.
    pub offset: f64,
}

impl GapIntegral {
    /// F(x) = ∫_1^{x+1} f.
    pub fn forward_sum(f: LengthSequence) -> Self {
        Self { f, offset: 1.0 }
    }

    /// B(x) = ∫_0^x f.
    pub fn backward_sum(f: LengthSequence) -> Self {
        Self { f, offset: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let f = |z: f64| self.f.eval(z);
        let (a, b) = (self.offset, self.offset + x);
        // split at integers so each piece is smooth and scaled
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let hi = (lo.floor() + 1.0).min(b);
            let piece = adaptive_simpson(&f, lo, hi, 1e-14 * f(hi).abs().max(1e-300));
            total += piece;
            lo = hi;
        }
        total
    }

    /// Solves eval(x) = s for x ≥ 0 by bisection.
    pub fn inverse(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.eval(hi) < s {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-13 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowingPrediction {
    pub t: f64,
    /// F⁻¹(C1·t/(L0+C1)): the upper rate is exp(−c·upper_exponent).
    pub upper_exponent: f64,
    /// B⁻¹(t): rates exp(−c·lower_exponent) with large c are ruled out.
    pub lower_exponent: f64,
    /// Bracket for the number N(t) of completed on-intervals.
    pub n_bounds: (f64, f64),
    /// N(t) counted directly from the interval bookkeeping.
    pub n_completed: u64,
}

impl GrowingPrediction {
    pub fn upper_rate(&self, c: f64) -> f64 {
        (-c * self.upper_exponent).exp()
    }

    pub fn lower_envelope(&self, c: f64) -> f64 {
        (-c * self.lower_exponent).exp()
    }
}

/// Largest N with N·L0 + Σ_{j<N} f(j) ≤ t.
pub fn completed_on_intervals(f: &LengthSequence, l0: f64, t: f64) -> u64 {
    let mut n = 0u64;
    let mut gaps = 0.0;
    loop {
        let next = (n + 1) as f64 * l0 + gaps;
        if next > t {
            return n;
        }
        n += 1;
        gaps += f.eval(n as f64);
    }
}

/// Rate envelopes for the growing-off family.
pub fn predict_growing(f: &LengthSequence, l0: f64, c1: f64, t: f64) -> Result<GrowingPrediction, RateError> {
    if !(l0 > 0.0 && c1 > 0.0 && t >= 0.0) {
        return Err(RateError::InvalidParameter(format!("need L0 > 0, C1 > 0, t ≥ 0 (got {l0}, {c1}, {t})")));
    }
    // the gaps are f(1), f(2), …; check the floor where they are used
    for i in 0..=200 {
        let z = 1.0 + i as f64 * 0.25;
        let v = f.eval(z);
        if v.is_finite() && v < c1 * (1.0 - 1e-12) {
            return Err(RateError::GapBelowFloor { c1, z, f: v });
        }
    }
    let upper_exponent = GapIntegral::forward_sum(*f).inverse(c1 * t / (l0 + c1));
    let lower_exponent = GapIntegral::backward_sum(*f).inverse(t);
    Ok(GrowingPrediction {
        t,
        upper_exponent,
        lower_exponent,
        n_bounds: (upper_exponent - 1.0, lower_exponent + 2.0),
        n_completed: completed_on_intervals(f, l0, t),
    })
}

/// Local log–log slopes of the two growing-off exponents over [t_min, t_max].
pub fn growing_envelope_exponents(f: &LengthSequence, l0: f64, c1: f64, t_min: f64, t_max: f64) -> Result<(f64, f64), RateError> {
    let ts: Vec<f64> = (0..=16).map(|i| t_min * (t_max / t_min).powf(i as f64 / 16.0)).collect();
    let preds = ts.iter().map(|&t| predict_growing(f, l0, c1, t)).collect::<Result<Vec<_>, _>>()?;
    let up: Vec<f64> = preds.iter().map(|p| p.upper_exponent).collect();
    let lo: Vec<f64> = preds.iter().map(|p| p.lower_exponent).collect();
    Ok((loglog_slope(&ts, &up), loglog_slope(&ts, &lo)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Proven decay form.
    pub upper: RateForm,
    /// Fastest form not ruled out.
    pub lower: RateForm,
    /// Rates c above this are ruled out for the lower form, when known.
    pub lower_threshold: Option<f64>,
}

impl Prediction {
    /// [lower stretch exponent, upper one] widened by `tol`, when both are stretched forms.
    pub fn exponent_interval(&self, tol: f64) -> Option<(f64, f64)> {
        let a = self.upper.stretch_exponent()?;
        let b = self.lower.stretch_exponent()?;
        Some((a.min(b) - tol, a.max(b) + tol))
    }
}

/// Forms for the shrinking-on family with lengths f(k) ~ (1+k)^{−β}.
pub fn predict_shrinking(beta: f64, s0: f64) -> Result<Prediction, RateError> {
    if !(beta >= 0.0 && s0 > 0.0) {
        return Err(RateError::InvalidParameter(format!("need β ≥ 0 and S0 > 0 (got {beta}, {s0})")));
    }
    let third = 1.0 / 3.0;
    let upper = if (beta - third).abs() < 1e-12 {
        RateForm::Power
    } else if beta < third {
        RateForm::Stretched { exponent: 1.0 - 3.0 * beta }
    } else {
        RateForm::None
    };
    Ok(Prediction { upper, lower: sigma_form(beta), lower_threshold: None })
}

/// Growth of Σ(t) ~ ∫(1+s)^{−β} ds.
fn sigma_form(beta: f64) -> RateForm {
    if beta == 0.0 {
        RateForm::Exponential
    } else if beta < 1.0 {
        RateForm::Stretched { exponent: 1.0 - beta }
    } else if beta == 1.0 {
        RateForm::Power
    } else {
        RateForm::None
    }
}

/// Forms for W = Ŵ·f with f ~ (1+t)^{−β}; `c_max` and `w_sup` give the lower-bound threshold.
pub fn poly_rate_check(beta: f64, c_max: f64, w_sup: f64) -> Result<Prediction, RateError> {
    if !(beta >= 0.0) {
        return Err(RateError::InvalidParameter(format!("β must be nonnegative, got {beta}")));
    }
    let form = sigma_form(beta);
    let lower_threshold = if beta < 1.0 {
        Some(2.0 * c_max * w_sup / (1.0 - beta))
    } else if beta == 1.0 {
        Some(2.0 * c_max * w_sup)
    } else {
        None
    };
    Ok(Prediction { upper: form, lower: form, lower_threshold })
}
