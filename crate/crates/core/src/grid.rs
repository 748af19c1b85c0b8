//! Periodic grids on the flat tori T¹ and T², sampled fields, and the
//! spectral operators used everywhere else in the crate.
//!
//! Every field is stored as complex samples on a uniform lattice. Derivatives
//! are exact for the trigonometric interpolant of the samples, so band-limited
//! data is differentiated without truncation error.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point on the torus. On T¹ only the first coordinate is used.
pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected a {expected:?} field, got {got:?}")]
    KindMismatch { expected: FieldKind, got: FieldKind },
    #[error("damping snapshot must be real and nonnegative (node {index}: {value})")]
    InvalidDamping { index: usize, value: Complex64 },
    #[error("csv output failed: {0}")]
    Io(String),
}

/// Uniform periodic lattice on T^dim with `points_per_axis` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    points_per_axis: usize,
    period: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 4 {
            return Err(GridError::InvalidGrid(format!(
                "points_per_axis must be at least 4, got {points_per_axis}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(GridError::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, points_per_axis, period })
    }

    /// T¹ of length 2π.
    pub fn t1(points: usize) -> Result<Self, GridError> {
        Self::new(1, points, 2.0 * PI)
    }

    /// T² with both periods 2π.
    pub fn t2(points_per_axis: usize) -> Result<Self, GridError> {
        Self::new(2, points_per_axis, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total node count, `points_per_axis^dim`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points_per_axis as f64
    }

    /// Quadrature weight of one node, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Position of the node with flat index `index` (x varies fastest).
    pub fn node(&self, index: usize) -> Point {
        let n = self.points_per_axis;
        let h = self.spacing();
        match self.dim {
            1 => [index as f64 * h, 0.0],
            _ => [(index % n) as f64 * h, (index / n) as f64 * h],
        }
    }

    /// Multi-index of a flat index, as written to CSV.
    pub fn multi_index(&self, index: usize) -> (usize, Option<usize>) {
        let n = self.points_per_axis;
        match self.dim {
            1 => (index, None),
            _ => (index % n, Some(index / n)),
        }
    }

    /// Angular wavenumber of DFT bin `j` along one axis.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points_per_axis as i64;
        let j = j as i64;
        let signed = if j <= n / 2 { j } else { j - n };
        2.0 * PI / self.period * signed as f64
    }

    /// Largest |ξ| represented on the grid (spectral radius of √(−Δ)).
    pub fn max_wavenumber(&self) -> f64 {
        let per_axis = PI * self.points_per_axis as f64 / self.period;
        per_axis * (self.dim as f64).sqrt()
    }

    /// Wraps a coordinate into `[0, period)`.
    pub fn wrap(&self, x: f64) -> f64 {
        x.rem_euclid(self.period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Position,
    Velocity,
    DampingSnapshot,
}

/// Complex samples of a function on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    kind: FieldKind,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: TorusGrid, kind: FieldKind, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if kind == FieldKind::DampingSnapshot {
            if let Some((index, value)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| v.im != 0.0 || !(v.re >= 0.0))
            {
                return Err(GridError::InvalidDamping { index, value: *value });
            }
        }
        Ok(Self { grid, kind, values })
    }

    pub fn zeros(grid: TorusGrid, kind: FieldKind) -> Self {
        Self { grid, kind, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples a complex function at every node.
    pub fn from_fn(grid: TorusGrid, kind: FieldKind, f: impl Fn(Point) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, kind, values }
    }

    /// Samples a real function at every node.
    pub fn from_real_fn(grid: TorusGrid, kind: FieldKind, f: impl Fn(Point) -> f64) -> Self {
        Self::from_fn(grid, kind, |p| Complex64::new(f(p), 0.0))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Same samples, different tag. Damping snapshots cannot be produced this way.
    pub fn with_kind(self, kind: FieldKind) -> Result<Self, GridError> {
        Self::new(self.grid, kind, self.values)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            kind: self.kind,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Writes one row per node: `i[,j],value_re,value_im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), GridError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| GridError::Io(e.to_string());
        if self.grid.dim() == 1 {
            w.write_record(["i", "value_re", "value_im"]).map_err(io)?;
        } else {
            w.write_record(["i", "j", "value_re", "value_im"]).map_err(io)?;
        }
        for (index, v) in self.values.iter().enumerate() {
            let (i, j) = self.grid.multi_index(index);
            let mut row = vec![i.to_string()];
            if let Some(j) = j {
                row.push(j.to_string());
            }
            row.push(format!("{:e}", v.re));
            row.push(format!("{:e}", v.im));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| GridError::Io(e.to_string()))
    }
}

/// Cached FFT plans and wavenumber tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// |ξ|² per flat index.
    xi_sq: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let xi_sq = (0..grid.len())
            .map(|index| {
                let (i, j) = grid.multi_index(index);
                let kx = grid.wavenumber(i);
                let ky = j.map_or(0.0, |j| grid.wavenumber(j));
                kx * kx + ky * ky
            })
            .collect();
        Self { grid, forward, inverse, xi_sq }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// |ξ|² for every DFT bin, in the same flat layout as the samples.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    /// Unnormalized forward DFT, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT including the 1/N normalization, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.grid.len());
        let n = self.grid.points_per_axis();
        // rows (x is contiguous)
        plan.process(data);
        if self.grid.dim() == 2 {
            let mut t = transpose(data, n);
            plan.process(&mut t);
            data.copy_from_slice(&transpose(&t, n));
        }
    }

    /// Spectral Laplacian of raw samples.
    pub fn laplacian_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        buf.iter_mut().zip(&self.xi_sq).for_each(|(c, k2)| *c *= -k2);
        self.inverse(&mut buf);
        buf
    }

    /// ∫|∇u|² computed from the Fourier coefficients.
    pub fn gradient_norm_sq(&self, values: &[Complex64]) -> f64 {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        let total: f64 = buf.iter().zip(&self.xi_sq).map(|(c, k2)| k2 * c.norm_sqr()).sum();
        let n = self.grid.len() as f64;
        total * self.grid.volume() / (n * n)
    }

    /// ∫|f|² computed from the Fourier coefficients (Parseval).
    pub fn coefficient_norm_sq(&self, values: &[Complex64]) -> f64 {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        let n = self.grid.len() as f64;
        buf.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume() / (n * n)
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field, GridError> {
        if f.grid != self.grid {
            return Err(GridError::GridMismatch);
        }
        if f.kind != FieldKind::Position {
            return Err(GridError::KindMismatch { expected: FieldKind::Position, got: f.kind });
        }
        Ok(Field { grid: self.grid, kind: FieldKind::Position, values: self.laplacian_values(&f.values) })
    }

    /// E = ½∫|∇u|² + |v|².
    pub fn energy(&self, u: &Field, v: &Field) -> Result<f64, GridError> {
        if u.grid != self.grid || v.grid != self.grid {
            return Err(GridError::GridMismatch);
        }
        if u.kind != FieldKind::Position {
            return Err(GridError::KindMismatch { expected: FieldKind::Position, got: u.kind });
        }
        if v.kind != FieldKind::Velocity {
            return Err(GridError::KindMismatch { expected: FieldKind::Velocity, got: v.kind });
        }
        Ok(self.energy_values(&u.values, &v.values))
    }

    pub fn energy_values(&self, u: &[Complex64], v: &[Complex64]) -> f64 {
        let kinetic: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume();
        0.5 * (self.gradient_norm_sq(u) + kinetic)
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = data[r * n + c];
        }
    }
    out
}

/// Spectral Laplacian of a position field.
pub fn laplacian(f: &Field) -> Result<Field, GridError> {
    Spectral::new(f.grid).laplacian(f)
}

/// Energy ½∫|∇u|² + |v|² of the pair (u, v).
pub fn energy(u: &Field, v: &Field) -> Result<f64, GridError> {
    Spectral::new(u.grid).energy(u, v)
}

/// ∫|f|² by the trapezoidal rule (exact for band-limited data).
pub fn l2_norm_sq(f: &Field) -> f64 {
    f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.cell_volume()
}

pub fn l2_norm(f: &Field) -> f64 {
    l2_norm_sq(f).sqrt()
}

/// ∫ f·ḡ.
pub fn inner(f: &Field, g: &Field) -> Result<Complex64, GridError> {
    if f.grid != g.grid {
        return Err(GridError::GridMismatch);
    }
    let sum: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * f.grid.cell_volume())
}

/// Time series of the energy and its companion channels for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// Σ(t), the least damping accumulated along any geodesic.
    pub sigma: Option<Vec<f64>>,
    /// Running ∫₀ᵗ∫ W_obs |∂ₜu|² dx ds.
    pub cum_obs: Option<Vec<f64>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace channels have different lengths")]
    Ragged,
    #[error("trace times are not strictly increasing at sample {0}")]
    NonIncreasing(usize),
    #[error("negative energy at sample {0}")]
    NegativeEnergy(usize),
    #[error("malformed trace csv: {0}")]
    Parse(String),
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let n = self.times.len();
        let ragged = self.energy.len() != n
            || self.sigma.as_ref().is_some_and(|s| s.len() != n)
            || self.cum_obs.as_ref().is_some_and(|s| s.len() != n);
        if ragged {
            return Err(TraceError::Ragged);
        }
        if let Some(i) = (1..n).find(|&i| !(self.times[i] > self.times[i - 1])) {
            return Err(TraceError::NonIncreasing(i));
        }
        if let Some(i) = self.energy.iter().position(|&e| !(e >= 0.0)) {
            return Err(TraceError::NegativeEnergy(i));
        }
        Ok(())
    }

    /// Index of the sample at time `t`, if one lies within `tol`.
    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    /// CSV with header `t,energy,sigma,cum_obs`; absent channels are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TraceError> {
        let err = |e: csv::Error| TraceError::Parse(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "energy", "sigma", "cum_obs"]).map_err(err)?;
        let cell = |c: &Option<Vec<f64>>, i: usize| c.as_ref().map_or(String::new(), |c| format!("{:e}", c[i]));
        for i in 0..self.len() {
            w.write_record([
                format!("{:e}", self.times[i]),
                format!("{:e}", self.energy[i]),
                cell(&self.sigma, i),
                cell(&self.cum_obs, i),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| TraceError::Parse(e.to_string()))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, TraceError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(|e| TraceError::Parse(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "energy", "sigma", "cum_obs"] {
            return Err(TraceError::Parse(format!("unexpected header {headers:?}")));
        }
        let mut trace = EnergyTrace::default();
        let mut sigma = Vec::new();
        let mut cum = Vec::new();
        let parse = |s: &str| s.parse::<f64>().map_err(|e| TraceError::Parse(format!("{s:?}: {e}")));
        for rec in r.records() {
            let rec = rec.map_err(|e| TraceError::Parse(e.to_string()))?;
            trace.times.push(parse(&rec[0])?);
            trace.energy.push(parse(&rec[1])?);
            sigma.push((!rec[2].is_empty()).then(|| parse(&rec[2])).transpose()?);
            cum.push((!rec[3].is_empty()).then(|| parse(&rec[3])).transpose()?);
        }
        trace.sigma = sigma.iter().all(Option::is_some).then(|| sigma.into_iter().flatten().collect());
        trace.cum_obs = cum.iter().all(Option::is_some).then(|| cum.into_iter().flatten().collect());
        if trace.is_empty() {
            trace.sigma = None;
            trace.cum_obs = None;
        }
        trace.validate()?;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn max_err(a: &Field, b: impl Fn(Point) -> f64) -> f64 {
        (0..a.grid().len())
            .map(|i| (a.values()[i] - Complex64::new(b(a.grid().node(i)), 0.0)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_of_eigenfunctions() {
        let g = TorusGrid::t1(32).unwrap();
        let f = Field::from_real_fn(g, FieldKind::Position, |p| p[0].cos());
        assert!(max_err(&laplacian(&f).unwrap(), |p| -p[0].cos()) < 1e-12);

        let one = Field::from_real_fn(g, FieldKind::Position, |_| 1.0);
        assert!(max_err(&laplacian(&one).unwrap(), |_| 0.0) < 1e-12);

        let g2 = TorusGrid::t2(16).unwrap();
        let f = Field::from_real_fn(g2, FieldKind::Position, |p| (2.0 * p[0] + 3.0 * p[1]).cos());
        let lap = laplacian(&f).unwrap();
        assert!(max_err(&lap, |p| -13.0 * (2.0 * p[0] + 3.0 * p[1]).cos()) < 1e-10);
    }

    #[test]
    fn laplacian_rejects_velocity_fields() {
        let g = TorusGrid::t1(8).unwrap();
        let v = Field::zeros(g, FieldKind::Velocity);
        assert!(matches!(laplacian(&v), Err(GridError::KindMismatch { .. })));
        let other = Spectral::new(TorusGrid::t1(16).unwrap());
        let u = Field::zeros(g, FieldKind::Position);
        assert_eq!(other.laplacian(&u), Err(GridError::GridMismatch));
    }

    #[test]
    fn energy_examples() {
        let g = TorusGrid::t1(64).unwrap();
        let cos = Field::from_real_fn(g, FieldKind::Position, |p| p[0].cos());
        let zero_v = Field::zeros(g, FieldKind::Velocity);
        assert_relative_eq!(energy(&cos, &zero_v).unwrap(), PI / 2.0, max_relative = 1e-12);

        let zero_u = Field::zeros(g, FieldKind::Position);
        let one_v = Field::from_real_fn(g, FieldKind::Velocity, |_| 1.0);
        assert_relative_eq!(energy(&zero_u, &one_v).unwrap(), PI, max_relative = 1e-12);

        let sin_v = Field::from_real_fn(g, FieldKind::Velocity, |p| p[0].sin());
        assert_relative_eq!(energy(&cos, &sin_v).unwrap(), PI, max_relative = 1e-12);

        assert!(matches!(energy(&sin_v, &cos), Err(GridError::KindMismatch { .. })));
    }

    #[test]
    fn norms() {
        let g = TorusGrid::t1(64).unwrap();
        let s = Field::from_real_fn(g, FieldKind::Position, |p| p[0].sin());
        assert_relative_eq!(l2_norm_sq(&s), PI, max_relative = 1e-12);
        assert_eq!(l2_norm(&Field::zeros(g, FieldKind::Position)), 0.0);
        let e = Field::from_fn(g, FieldKind::Position, |p| Complex64::from_polar(1.0, 8.0 * p[0]));
        assert_relative_eq!(l2_norm_sq(&e), 2.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn grid_invariants() {
        assert!(TorusGrid::t1(3).is_err());
        assert!(TorusGrid::new(3, 8, 1.0).is_err());
        assert!(TorusGrid::new(1, 8, 0.0).is_err());
        let g = TorusGrid::t2(8).unwrap();
        assert_eq!(g.len(), 64);
        assert_relative_eq!(g.spacing(), PI / 4.0);
        assert!(Field::new(g, FieldKind::Position, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let neg = vec![Complex64::new(-1.0, 0.0); 64];
        assert!(matches!(
            Field::new(g, FieldKind::DampingSnapshot, neg),
            Err(GridError::InvalidDamping { .. })
        ));
    }

    #[test]
    fn energy_of_constants_vanishes() {
        let g = TorusGrid::t2(8).unwrap();
        let c = Field::from_real_fn(g, FieldKind::Position, |_| 3.5);
        assert!(energy(&c, &Field::zeros(g, FieldKind::Velocity)).unwrap().abs() < 1e-24);
    }

    #[test]
    fn field_csv_layout() {
        let g = TorusGrid::t2(4).unwrap();
        let f = Field::from_real_fn(g, FieldKind::Position, |p| p[0]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,value_re,value_im"));
        assert_eq!(lines.next(), Some("0,0,0e0,0e0"));
        assert_eq!(text.lines().count(), 17);
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = EnergyTrace {
            times: vec![0.0, 0.5, 1.0],
            energy: vec![1.0, 0.75, 0.5],
            sigma: None,
            cum_obs: Some(vec![0.0, 0.125, 0.25]),
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert_eq!(EnergyTrace::read_csv(buf.as_slice()).unwrap(), trace);

        let bad = EnergyTrace { times: vec![0.0, 0.0], energy: vec![1.0, 1.0], ..Default::default() };
        assert_eq!(bad.validate(), Err(TraceError::NonIncreasing(1)));
    }

    fn random_band_limited(grid: TorusGrid, band: i32, seed: u64) -> Field {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(f64, f64, Complex64)> = (-band..=band)
            .flat_map(|a| (-band..=band).map(move |b| (a as f64, b as f64)))
            .filter(|(_, b)| grid.dim() == 2 || *b == 0.0)
            .map(|(a, b)| (a, b, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        Field::from_fn(grid, FieldKind::Position, |p| {
            modes.iter().map(|(a, b, c)| c * Complex64::from_polar(1.0, a * p[0] + b * p[1])).sum()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval(seed in any::<u64>(), dim in 1usize..=2) {
            let grid = TorusGrid::new(dim, 32, 2.0 * PI).unwrap();
            let f = random_band_limited(grid, 6, seed);
            let physical = l2_norm_sq(&f);
            let coefficient = Spectral::new(grid).coefficient_norm_sq(f.values());
            prop_assert!((physical - coefficient).abs() <= 1e-12 * physical);
        }

        #[test]
        fn laplacian_is_symmetric(seed in any::<u64>(), dim in 1usize..=2) {
            let grid = TorusGrid::new(dim, 32, 2.0 * PI).unwrap();
            let f = random_band_limited(grid, 6, seed);
            let g = random_band_limited(grid, 6, seed.wrapping_add(1));
            let lhs = inner(&laplacian(&f).unwrap(), &g).unwrap();
            let rhs = inner(&f, &laplacian(&g).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        }

        #[test]
        fn energy_is_nonnegative(seed in any::<u64>()) {
            let grid = TorusGrid::t1(32).unwrap();
            let u = random_band_limited(grid, 6, seed);
            let v = random_band_limited(grid, 6, seed ^ 7).with_kind(FieldKind::Velocity).unwrap();
            prop_assert!(energy(&u, &v).unwrap() >= 0.0);
        }
    }

    #[test]
    fn wrap_and_wavenumbers() {
        let g = TorusGrid::t1(8).unwrap();
        assert_relative_eq!(g.wrap(-0.5), 2.0 * PI - 0.5);
        assert_eq!(g.wavenumber(3), 3.0);
        assert_eq!(g.wavenumber(5), -3.0);
        assert_eq!(g.wavenumber(4), 4.0);
    }
}
