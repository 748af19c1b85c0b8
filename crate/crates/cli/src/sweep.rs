//! Parameter sweeps: one run per value, executed concurrently, written in input order.

use dampwave::beam::residual_norm;
use dampwave::observe::short_time_sweep;
use dampwave::rates::{fit, loglog_slope, RateModel};
use dampwave::{DampingProfile, EnergyTrace, Evolution, TorusGrid};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, SweepParameter};
use crate::output::{write_table, OutputDir};
use crate::CliError;

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub measured: Result<f64, String>,
    trace: Option<EnergyTrace>,
}

fn run_point(cfg: &ExperimentConfig, param: SweepParameter, mode: [f64; 3], value: f64, seed: u64) -> Result<(f64, Option<EnergyTrace>), CliError> {
    match param {
        SweepParameter::K => {
            let section = cfg.beam.ok_or_else(|| CliError::Config("sweep: k sweeps need a [beam] section".into()))?;
            let spec = section.spec(cfg.grid.dim)?.with_k(value).map_err(|e| CliError::Config(format!("sweep: {e}")))?;
            let n = cfg.grid.points.max((4.0 * value).ceil() as usize);
            let grid = TorusGrid::new(cfg.grid.dim, n, cfg.grid.period).map_err(CliError::numerical)?;
            let r = residual_norm(&spec, cfg.damping.as_ref(), &grid, spec.t0 + cfg.t_end).map_err(CliError::numerical)?;
            Ok((r, None))
        }
        SweepParameter::Delta => {
            let t = short_time_sweep(mode[0], mode[1], mode[2], &[value]).map_err(CliError::numerical)?;
            Ok((t.rows[0].ratio, None))
        }
        SweepParameter::Beta => {
            let base = cfg.damping.clone().unwrap_or_else(|| DampingProfile::constant(1.0).expect("valid constant"));
            let w = DampingProfile::poly_product(base, value).map_err(|e| CliError::Config(format!("sweep: {e}")))?;
            let state = cfg.initial_state(seed)?;
            let (_, trace) = Evolution::new(cfg.solver).damping(Some(&w)).run(state, cfg.t_end).map_err(CliError::numerical)?;
            let f = fit(&trace, RateModel::Stretched, None).map_err(CliError::numerical)?;
            Ok((f.exponent.unwrap_or(f64::NAN), Some(trace)))
        }
    }
}

/// Runs every value of the sweep section; failed points are recorded and the sweep continues.
pub fn run(cfg: &ExperimentConfig, seed: u64, out: &mut OutputDir) -> Result<(Vec<SweepPoint>, f64), CliError> {
    let section = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep: section required".into()))?;
    if section.values.is_empty() {
        return Err(CliError::Config("sweep.values: must be nonempty".into()));
    }
    let points: Vec<SweepPoint> = section
        .values
        .par_iter()
        .map(|&value| match run_point(cfg, section.parameter, section.mode, value, seed) {
            Ok((m, trace)) => SweepPoint { value, measured: Ok(m), trace },
            Err(e) => SweepPoint { value, measured: Err(e.to_string()), trace: None },
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        if let Some(trace) = &p.trace {
            out.write(&format!("point_{i:03}.csv"), |w| trace.write_csv(w))?;
        }
    }
    let ok: Vec<(f64, f64)> = points.iter().filter_map(|p| p.measured.as_ref().ok().map(|m| (p.value, *m))).collect();
    let slope = match section.parameter {
        _ if ok.len() < 2 => f64::NAN,
        SweepParameter::Beta => {
            let (x, y): (Vec<f64>, Vec<f64>) = ok.iter().copied().unzip();
            dampwave::rates::linear_fit(&x, &y).0
        }
        _ => {
            let (x, y): (Vec<f64>, Vec<f64>) = ok.iter().copied().unzip();
            loglog_slope(&x, &y)
        }
    };
    let name = match section.parameter {
        SweepParameter::K => "k",
        SweepParameter::Delta => "delta",
        SweepParameter::Beta => "beta",
    };
    out.write("summary.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([name, "measured", "slope", "status"])?;
        for p in &points {
            let (m, status) = match &p.measured {
                Ok(m) => (format!("{m:e}"), "ok".to_string()),
                Err(e) => (String::new(), e.clone()),
            };
            w.write_record([format!("{:e}", p.value), m, format!("{slope:e}"), status])?;
        }
        w.flush().map_err(csv::Error::from)
    })?;
    Ok((points, slope))
}

/// Convenience for tests and experiments: a table with a slope column.
pub fn slope_table(out: &mut OutputDir, name: &str, header: [&str; 2], rows: &[(f64, f64)]) -> Result<f64, CliError> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    let slope = loglog_slope(&x, &y);
    let table: Vec<Vec<f64>> = rows.iter().map(|(a, b)| vec![*a, *b, slope]).collect();
    out.write(name, |w| write_table(w, &[header[0], header[1], "slope"], &table))?;
    Ok(slope)
}
