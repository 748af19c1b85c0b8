//! The damping coefficient W(x,t) and its named families.
//!
//! Every built-in family factors as W(x,t) = S(x)·τ(t). The solver relies on
//! this to sample the spatial part once and rescale it in time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, FieldKind, Point, TorusGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DampingError {
    #[error("damping evaluated at negative time t = {0}")]
    NegativeTime(f64),
    #[error("{family}: invalid {field}: {reason}")]
    InvalidParameter { family: &'static str, field: &'static str, reason: String },
}

fn invalid(family: &'static str, field: &'static str, reason: impl Into<String>) -> DampingError {
    DampingError::InvalidParameter { family, field, reason: reason.into() }
}

/// Which value to take at a jump in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The value the family assigns at the point itself.
    At,
    /// Limit from below.
    Left,
    /// Limit from above.
    Right,
}

/// A positive function of a (real) index, used for interval lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthSequence {
    /// scale·(z + shift)^exponent
    Power {
        scale: f64,
        exponent: f64,
        #[serde(default)]
        shift: f64,
    },
    /// scale·ratio^z
    Geometric { scale: f64, ratio: f64 },
    /// scale·exp(z + e^z)
    DoubleExponential { scale: f64 },
}

impl LengthSequence {
    /// f(j) = c·j^α.
    pub fn power(scale: f64, exponent: f64) -> Self {
        Self::Power { scale, exponent, shift: 0.0 }
    }

    /// f(k) = c·(1+k)^{−β}.
    pub fn inverse_power(scale: f64, beta: f64) -> Self {
        Self::Power { scale, exponent: -beta, shift: 1.0 }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Self::Power { scale, exponent, shift } => scale * (z + shift).powf(exponent),
            Self::Geometric { scale, ratio } => scale * ratio.powf(z),
            Self::DoubleExponential { scale } => scale * (z + z.exp()).exp(),
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Self::Power { scale, .. } | Self::Geometric { scale, .. } | Self::DoubleExponential { scale } => scale,
        }
    }
}

/// Temporal cutoff χ: [0,1] → [0,1] with χ ≡ 1 on [¼, ¾].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// χ = 1 on [0,1].
    #[default]
    Indicator,
    /// C^∞ ramps on [0,¼] and [¾,1].
    Smooth,
}

impl Window {
    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Window::Indicator => 1.0,
            Window::Smooth => {
                if s < 0.25 {
                    smooth_step(4.0 * s)
                } else if s > 0.75 {
                    smooth_step(4.0 * (1.0 - s))
                } else {
                    1.0
                }
            }
        }
    }
}

fn smooth_step(s: f64) -> f64 {
    let bump = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let a = bump(s);
    let b = bump(1.0 - s);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Radial profile of a spatial bump.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BumpShape {
    /// exp(1 − 1/(1−ρ²)), C^∞.
    #[default]
    Smooth,
    /// (1−ρ²)^power, C^{power−1}.
    Polynomial { power: u32 },
}

impl BumpShape {
    fn eval(&self, rho_sq: f64) -> f64 {
        if rho_sq >= 1.0 {
            return 0.0;
        }
        match *self {
            BumpShape::Smooth => (1.0 - 1.0 / (1.0 - rho_sq)).exp(),
            BumpShape::Polynomial { power } => (1.0 - rho_sq).powi(power as i32),
        }
    }
}

/// Family tag and parameters. Construct through [`DampingProfile`], which validates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingFamily {
    Constant {
        a: f64,
    },
    SpaceBump {
        w0: f64,
        center: Point,
        radius: f64,
        #[serde(default)]
        shape: BumpShape,
        #[serde(default = "default_period")]
        period: f64,
    },
    /// offset + amplitude·cos(m₁x₁ + m₂x₂)
    Cosine {
        offset: f64,
        amplitude: f64,
        mode: [i32; 2],
    },
    /// base·f with f = (1+t)^{−β}·(C_m + (C_M − C_m)(1 + cos x₁)/2).
    PolyProduct {
        base: Box<DampingProfile>,
        beta: f64,
        #[serde(default = "one")]
        c_min: f64,
        #[serde(default = "one")]
        c_max: f64,
    },
    /// base (in local time) for L0, then off for f(k+1), repeating.
    GrowingOff {
        base: Box<DampingProfile>,
        l0: f64,
        gaps: LengthSequence,
    },
    /// g(x)·χ((t−kS0)/f(k)) on [kS0, kS0+f(k)), zero until (k+1)S0.
    ShrinkingOn {
        g: Box<DampingProfile>,
        #[serde(default)]
        window: Window,
        s0: f64,
        lengths: LengthSequence,
    },
}

fn default_period() -> f64 {
    2.0 * PI
}

fn one() -> f64 {
    1.0
}

/// A validated damping coefficient W(x,t) ≥ 0 with a declared sup norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DampingFamily", into = "DampingFamily")]
pub struct DampingProfile {
    family: DampingFamily,
    sup_norm: f64,
}

impl From<DampingProfile> for DampingFamily {
    fn from(p: DampingProfile) -> Self {
        p.family
    }
}

impl TryFrom<DampingFamily> for DampingProfile {
    type Error = DampingError;

    fn try_from(family: DampingFamily) -> Result<Self, DampingError> {
        let finite = |name, field, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, field, format!("{v} is not finite")))
            }
        };
        let sup_norm = match &family {
            DampingFamily::Constant { a } => {
                finite("constant", "a", *a)?;
                if *a < 0.0 {
                    return Err(invalid("constant", "a", "must be nonnegative"));
                }
                *a
            }
            DampingFamily::SpaceBump { w0, center, radius, period, .. } => {
                for (field, v) in [("w0", *w0), ("center", center[0]), ("center", center[1]), ("radius", *radius)] {
                    finite("space_bump", field, v)?;
                }
                if *w0 < 0.0 {
                    return Err(invalid("space_bump", "w0", "must be nonnegative"));
                }
                if !(*period > 0.0) {
                    return Err(invalid("space_bump", "period", "must be positive"));
                }
                if !(*radius > 0.0 && *radius < 0.5 * period) {
                    return Err(invalid("space_bump", "radius", "must lie in (0, period/2)"));
                }
                *w0
            }
            DampingFamily::Cosine { offset, amplitude, .. } => {
                finite("cosine", "offset", *offset)?;
                finite("cosine", "amplitude", *amplitude)?;
                if *offset < amplitude.abs() {
                    return Err(invalid("cosine", "offset", "must be at least |amplitude| to keep W ≥ 0"));
                }
                offset + amplitude.abs()
            }
            DampingFamily::PolyProduct { base, beta, c_min, c_max } => {
                if !(*beta >= 0.0 && beta.is_finite()) {
                    return Err(invalid("poly_product", "beta", "must be finite and nonnegative"));
                }
                if !(*c_min > 0.0 && c_min <= c_max && c_max.is_finite()) {
                    return Err(invalid("poly_product", "c_min", "need 0 < c_min ≤ c_max"));
                }
                base.sup_norm * c_max
            }
            DampingFamily::GrowingOff { base, l0, gaps } => {
                if !(*l0 > 0.0 && l0.is_finite()) {
                    return Err(invalid("growing_off", "l0", "must be positive"));
                }
                let mut prev = 0.0;
                for j in 1..=64 {
                    let f = gaps.eval(j as f64);
                    if f.is_nan() || f <= 0.0 {
                        return Err(invalid("growing_off", "gaps", format!("f({j}) = {f} is not positive")));
                    }
                    if f < prev {
                        return Err(invalid("growing_off", "gaps", format!("f decreases at j = {j}")));
                    }
                    prev = f;
                }
                base.sup_norm
            }
            DampingFamily::ShrinkingOn { g, s0, lengths, .. } => {
                if !(*s0 > 0.0 && s0.is_finite()) {
                    return Err(invalid("shrinking_on", "s0", "must be positive"));
                }
                if !g.is_autonomous() {
                    return Err(invalid("shrinking_on", "g", "must not depend on time"));
                }
                let floor = g.spatial_floor();
                if !(floor > 0.0) {
                    return Err(invalid("shrinking_on", "g", "needs a strictly positive lower bound"));
                }
                for k in 0..=10_000 {
                    let f = lengths.eval(k as f64);
                    if !(f > 0.0 && f <= *s0 * (1.0 + 1e-12)) {
                        return Err(invalid("shrinking_on", "lengths", format!("f({k}) = {f} is outside (0, S0]")));
                    }
                }
                g.sup_norm
            }
        };
        Ok(Self { family, sup_norm })
    }
}

/// One interval on which an on/off family is switched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnInterval {
    pub index: u64,
    pub start: f64,
    pub end: f64,
}

impl DampingProfile {
    pub fn constant(a: f64) -> Result<Self, DampingError> {
        DampingFamily::Constant { a }.try_into()
    }

    pub fn space_bump(w0: f64, center: Point, radius: f64, shape: BumpShape) -> Result<Self, DampingError> {
        DampingFamily::SpaceBump { w0, center, radius, shape, period: default_period() }.try_into()
    }

    pub fn cosine(offset: f64, amplitude: f64, mode: [i32; 2]) -> Result<Self, DampingError> {
        DampingFamily::Cosine { offset, amplitude, mode }.try_into()
    }

    /// base·(1+t)^{−β}.
    pub fn poly_product(base: DampingProfile, beta: f64) -> Result<Self, DampingError> {
        Self::poly_product_bounded(base, beta, 1.0, 1.0)
    }

    pub fn poly_product_bounded(base: DampingProfile, beta: f64, c_min: f64, c_max: f64) -> Result<Self, DampingError> {
        DampingFamily::PolyProduct { base: Box::new(base), beta, c_min, c_max }.try_into()
    }

    pub fn growing_off(base: DampingProfile, l0: f64, gaps: LengthSequence) -> Result<Self, DampingError> {
        DampingFamily::GrowingOff { base: Box::new(base), l0, gaps }.try_into()
    }

    pub fn shrinking_on(g: DampingProfile, window: Window, s0: f64, lengths: LengthSequence) -> Result<Self, DampingError> {
        DampingFamily::ShrinkingOn { g: Box::new(g), window, s0, lengths }.try_into()
    }

    pub fn family(&self) -> &DampingFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            DampingFamily::Constant { .. } => "constant",
            DampingFamily::SpaceBump { .. } => "space_bump",
            DampingFamily::Cosine { .. } => "cosine",
            DampingFamily::PolyProduct { .. } => "poly_product",
            DampingFamily::GrowingOff { .. } => "growing_off",
            DampingFamily::ShrinkingOn { .. } => "shrinking_on",
        }
    }

    /// Declared upper bound for W.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_autonomous(&self) -> bool {
        match &self.family {
            DampingFamily::Constant { .. } | DampingFamily::SpaceBump { .. } | DampingFamily::Cosine { .. } => true,
            DampingFamily::PolyProduct { beta, base, .. } => *beta == 0.0 && base.is_autonomous(),
            DampingFamily::GrowingOff { .. } | DampingFamily::ShrinkingOn { .. } => false,
        }
    }

    /// Lower bound of the spatial factor S(x).
    pub fn spatial_floor(&self) -> f64 {
        match &self.family {
            DampingFamily::Constant { a } => *a,
            DampingFamily::SpaceBump { .. } => 0.0,
            DampingFamily::Cosine { offset, amplitude, .. } => offset - amplitude.abs(),
            DampingFamily::PolyProduct { base, c_min, .. } => base.spatial_floor() * c_min,
            DampingFamily::GrowingOff { base, .. } => base.spatial_floor(),
            DampingFamily::ShrinkingOn { g, .. } => g.spatial_floor(),
        }
    }

    /// W(x,t).
    pub fn eval(&self, x: Point, t: f64) -> Result<f64, DampingError> {
        self.eval_side(x, t, Side::At)
    }

    pub fn eval_side(&self, x: Point, t: f64, side: Side) -> Result<f64, DampingError> {
        Ok(self.spatial(x) * self.temporal(t, side)?)
    }

    /// Spatial factor S(x).
    pub fn spatial(&self, x: Point) -> f64 {
        match &self.family {
            DampingFamily::Constant { a } => *a,
            DampingFamily::SpaceBump { w0, center, radius, shape, period } => {
                let d = |a: f64, b: f64| {
                    let r = (a - b).rem_euclid(*period);
                    r.min(period - r)
                };
                let dx = d(x[0], center[0]);
                let dy = d(x[1], center[1]);
                w0 * shape.eval((dx * dx + dy * dy) / (radius * radius))
            }
            DampingFamily::Cosine { offset, amplitude, mode } => {
                offset + amplitude * (mode[0] as f64 * x[0] + mode[1] as f64 * x[1]).cos()
            }
            DampingFamily::PolyProduct { base, c_min, c_max, .. } => {
                base.spatial(x) * (c_min + (c_max - c_min) * 0.5 * (1.0 + x[0].cos()))
            }
            DampingFamily::GrowingOff { base, .. } => base.spatial(x),
            DampingFamily::ShrinkingOn { g, .. } => g.spatial(x),
        }
    }

    /// Temporal factor τ(t).
    pub fn temporal(&self, t: f64, side: Side) -> Result<f64, DampingError> {
        if !(t >= 0.0) {
            return Err(DampingError::NegativeTime(t));
        }
        // there is nothing to the left of the origin
        let side = if t == 0.0 && side == Side::Left { Side::Right } else { side };
        Ok(match &self.family {
            DampingFamily::Constant { .. } | DampingFamily::SpaceBump { .. } | DampingFamily::Cosine { .. } => 1.0,
            DampingFamily::PolyProduct { base, beta, .. } => base.temporal(t, side)? * (1.0 + t).powf(-beta),
            DampingFamily::GrowingOff { base, l0, .. } => {
                let strict = side == Side::Left;
                let mut hit = None;
                for iv in self.on_intervals() {
                    if iv.start < t || (!strict && iv.start == t) {
                        hit = Some(iv);
                    } else {
                        break;
                    }
                }
                match hit {
                    Some(iv) => {
                        let on = match side {
                            Side::Right => t < iv.end,
                            Side::At | Side::Left => t <= iv.end,
                        };
                        if on {
                            base.temporal((t - iv.start).min(*l0), side)?
                        } else {
                            0.0
                        }
                    }
                    None => 0.0,
                }
            }
            DampingFamily::ShrinkingOn { window, s0, lengths, .. } => {
                let mut k = (t / s0).floor();
                if side == Side::Left && k * s0 == t {
                    k -= 1.0;
                }
                let start = k * s0;
                let len = lengths.eval(k);
                let end = start + len;
                let on = match side {
                    Side::Left => t <= end,
                    Side::At | Side::Right => t < end,
                };
                if on {
                    window.eval(((t - start) / len).clamp(0.0, 1.0))
                } else {
                    0.0
                }
            }
        })
    }

    /// On-intervals of the on/off families, in order. Empty for the others.
    pub fn on_intervals(&self) -> Box<dyn Iterator<Item = OnInterval> + '_> {
        match &self.family {
            DampingFamily::GrowingOff { l0, gaps, .. } => {
                let l0 = *l0;
                let mut k = 0u64;
                let mut start = 0.0_f64;
                Box::new(std::iter::from_fn(move || {
                    if !start.is_finite() {
                        return None;
                    }
                    let iv = OnInterval { index: k, start, end: start + l0 };
                    k += 1;
                    start = iv.end + gaps.eval(k as f64);
                    Some(iv)
                }))
            }
            DampingFamily::ShrinkingOn { s0, lengths, .. } => {
                let s0 = *s0;
                Box::new((0u64..).map(move |k| {
                    let start = k as f64 * s0;
                    OnInterval { index: k, start, end: start + lengths.eval(k as f64) }
                }))
            }
            _ => Box::new(std::iter::empty()),
        }
    }

    /// Sorted times in (0, t_max] where W may jump in t.
    pub fn discontinuity_times(&self, t_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.family {
            DampingFamily::Constant { .. } | DampingFamily::SpaceBump { .. } | DampingFamily::Cosine { .. } => {}
            DampingFamily::PolyProduct { base, .. } => out = base.discontinuity_times(t_max),
            DampingFamily::GrowingOff { base, .. } => {
                for iv in self.on_intervals() {
                    if iv.start > t_max {
                        break;
                    }
                    out.push(iv.start);
                    out.extend(base.discontinuity_times(iv.end - iv.start).into_iter().map(|s| iv.start + s));
                    out.push(iv.end);
                }
            }
            DampingFamily::ShrinkingOn { s0, .. } => {
                for iv in self.on_intervals() {
                    if iv.start > t_max {
                        break;
                    }
                    out.push(iv.start);
                    if iv.end < iv.start + s0 {
                        out.push(iv.end);
                    }
                }
            }
        }
        out.retain(|&s| s > 0.0 && s <= t_max);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Samples W(·,t) at the grid nodes.
    pub fn snapshot(&self, grid: &TorusGrid, t: f64) -> Result<Field, DampingError> {
        let tau = self.temporal(t, Side::At)?;
        Ok(self.spatial_field(grid).scale(tau.into()))
    }

    /// Samples S(x) at the grid nodes.
    pub fn spatial_field(&self, grid: &TorusGrid) -> Field {
        Field::from_real_fn(*grid, FieldKind::DampingSnapshot, |p| self.spatial(p))
    }
}
