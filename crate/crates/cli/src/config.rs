//! TOML experiment configuration. Unknown keys are rejected everywhere.

use std::f64::consts::PI;
use std::path::Path;

use dampwave::geodesic::GeodesicSampling;
use dampwave::rates::RateModel;
use dampwave::solver::random_band_limited;
use dampwave::{BeamSpec, DampingProfile, Field, FieldKind, Geodesic, SolverConfig, TorusGrid, WaveState};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional guard: must match the subcommand when present.
    pub kind: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    pub damping: Option<DampingProfile>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    pub sampling: Option<GeodesicSampling>,
    pub sigma: Option<SigmaSection>,
    pub tgcc: Option<TgccSection>,
    pub beam: Option<BeamSection>,
    pub observe: Option<ObserveSection>,
    pub fit: Option<FitSection>,
    pub sweep: Option<SweepSection>,
}

fn default_t_end() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub period: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 1, points: 256, period: 2.0 * PI }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<TorusGrid, CliError> {
        TorusGrid::new(self.dim, self.points, self.period).map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Random real data on the modes min_mode ≤ |m|∞ ≤ max_mode.
    Random { min_mode: u32, max_mode: u32 },
    /// u = u_amp·cos(m·x), v = v_amp·cos(m·x).
    Mode {
        mode: [i32; 2],
        #[serde(default = "one")]
        u_amp: f64,
        #[serde(default)]
        v_amp: f64,
    },
    /// Beam quasi-solution data from the [beam] section.
    Beam,
}

fn one() -> f64 {
    1.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Random { min_mode: 1, max_mode: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSection {
    /// Times at which Σ(t) is reported.
    pub times: Vec<f64>,
    /// Windows at which L(T) is reported.
    #[serde(default)]
    pub windows: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TgccSection {
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub x0: [f64; 2],
    /// Direction angle (T²); on T¹ any angle with cos < 0 runs backwards.
    #[serde(default)]
    pub angle: f64,
    pub k: f64,
    #[serde(default)]
    pub t0: f64,
    /// Times sampled for the quasi-solution energy defect.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    20
}

impl BeamSection {
    pub fn spec(&self, dim: usize) -> Result<BeamSpec, CliError> {
        let g = if dim == 1 { Geodesic::t1(self.x0[0], self.angle.cos() >= 0.0) } else { Geodesic::t2(self.x0, self.angle) };
        BeamSpec::new(dim, g, self.k)
            .and_then(|s| s.with_t0(self.t0))
            .map_err(|e| CliError::Config(format!("beam: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserveSection {
    pub weight: DampingProfile,
    pub duration: f64,
    pub t0s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Trace CSV to fit; relative paths resolve against the config file.
    pub trace: String,
    pub models: Vec<RateModel>,
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Beam wavenumber; residual at beam.t0 + t_end.
    K,
    /// Short-time window length for a single eigenmode.
    Delta,
    /// Decay exponent β of W = Ŵ·(1+t)^{−β}, with Ŵ from [damping].
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Mode (A, B, λ) for delta sweeps.
    #[serde(default = "default_mode")]
    pub mode: [f64; 3],
}

fn default_mode() -> [f64; 3] {
    [1.0, 0.0, 1.0]
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid.build()?;
        self.solver.validate(&grid).map_err(|e| CliError::Config(format!("solver: {e}")))?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end: must be a nonnegative number, got {}", self.t_end)));
        }
        if let Some(s) = &self.sampling {
            s.validate().map_err(|e| CliError::Config(format!("sampling: {e}")))?;
        }
        if let InitialConfig::Random { min_mode, max_mode } = self.initial {
            if min_mode > max_mode || max_mode as usize >= self.grid.points / 2 {
                return Err(CliError::Config(format!(
                    "initial: modes [{min_mode}, {max_mode}] do not fit a grid of {} points",
                    self.grid.points
                )));
            }
        }
        if let Some(b) = &self.beam {
            b.spec(self.grid.dim)?;
        }
        Ok(())
    }

    pub fn require_kind(&self, kind: &str) -> Result<(), CliError> {
        match &self.kind {
            Some(k) if k != kind => Err(CliError::Config(format!("kind: config is for {k:?}, not {kind:?}"))),
            _ => Ok(()),
        }
    }

    pub fn sampling_or_default(&self) -> GeodesicSampling {
        self.sampling.clone().unwrap_or_else(|| GeodesicSampling {
            dim: self.grid.dim,
            period: self.grid.period,
            ..GeodesicSampling::default()
        })
    }

    pub fn damping_required(&self) -> Result<&DampingProfile, CliError> {
        self.damping.as_ref().ok_or_else(|| CliError::Config("damping: section required".into()))
    }

    pub fn initial_state(&self, seed: u64) -> Result<WaveState, CliError> {
        let grid = self.grid.build()?;
        match self.initial {
            InitialConfig::Random { min_mode, max_mode } => Ok(random_band_limited(grid, min_mode, max_mode, seed)),
            InitialConfig::Mode { mode, u_amp, v_amp } => {
                let phase = move |p: [f64; 2]| mode[0] as f64 * p[0] + mode[1] as f64 * p[1];
                let u = Field::from_real_fn(grid, FieldKind::Position, |p| u_amp * phase(p).cos());
                let v = Field::from_real_fn(grid, FieldKind::Velocity, |p| v_amp * phase(p).cos());
                WaveState::new(u, v, 0.0).map_err(CliError::numerical)
            }
            InitialConfig::Beam => {
                let b = self.beam.as_ref().ok_or_else(|| CliError::Config("initial: kind = \"beam\" needs a [beam] section".into()))?;
                let spec = b.spec(self.grid.dim)?;
                let (u, v) = dampwave::beam::quasi_solution(&spec, self.damping.as_ref(), &grid, spec.t0).map_err(CliError::numerical)?;
                WaveState::new(u, v, spec.t0).map_err(CliError::numerical)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::parse("t_end = 5.0\n[damping]\nfamily = \"constant\"\na = 0.1\n").unwrap();
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.damping.unwrap().sup_norm(), 0.1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::parse("t_end = 5.0\ntend = 3\n").unwrap_err();
        assert!(e.to_string().contains("tend"), "{e}");
        let e = ExperimentConfig::parse("[damping]\nfamily = \"constant\"\na = 0.1\nb = 2\n").unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        let e = ExperimentConfig::parse("[solver]\ndt = 0.001\nstep = 3\n").unwrap_err();
        assert!(e.to_string().contains("step"), "{e}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let e = ExperimentConfig::parse("[damping]\nfamily = \"constant\"\na = -1.0\n").unwrap_err();
        assert!(e.to_string().contains('a'), "{e}");
        let e = ExperimentConfig::parse("[grid]\npoints = 64\n[solver]\ndt = 1.0\n").unwrap_err();
        assert!(e.to_string().starts_with("config error: solver"), "{e}");
    }

    #[test]
    fn round_trips_through_toml() {
        let text = r#"
seed = 3
t_end = 2.0
[grid]
dim = 2
points = 32
[damping]
family = "growing_off"
l0 = 1.0
base = { family = "space_bump", w0 = 1.0, center = [3.0, 3.0], radius = 1.0 }
gaps = { kind = "power", scale = 1.0, exponent = 1.0 }
[initial]
kind = "mode"
mode = [2, 1]
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let back = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }
}
