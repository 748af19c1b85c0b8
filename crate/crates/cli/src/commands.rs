//! One function per config-driven subcommand. Each writes its artifacts into
//! the output directory and returns a short human-readable summary.

use std::fs::File;
use std::path::Path;

use dampwave::beam::{beam_vs_exact, residual_norm};
use dampwave::geodesic::{check_tgcc, l_of_t, sigma, sigma_curve};
use dampwave::observe::observability_sweep;
use dampwave::rates::{fit as fit_trace, RateFit};
use dampwave::{energy_identity_check, EnergyTrace, Evolution};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{write_table, OutputDir};
use crate::CliError;

#[derive(Serialize)]
struct SimulateReport {
    t_end: f64,
    initial_energy: f64,
    final_energy: f64,
    identity_defect: f64,
    samples: usize,
}

pub fn simulate(cfg: &ExperimentConfig, seed: u64, out: &mut OutputDir) -> Result<String, CliError> {
    let state = cfg.initial_state(seed)?;
    let mut run = Evolution::new(cfg.solver).damping(cfg.damping.as_ref());
    if cfg.sampling.is_some() && cfg.damping.is_some() {
        run = run.sigma(cfg.sampling_or_default());
    }
    let (_, trace) = run.run(state, cfg.t_end).map_err(CliError::numerical)?;
    out.write("trace.csv", |w| trace.write_csv(w))?;
    let report = SimulateReport {
        t_end: cfg.t_end,
        initial_energy: trace.energy[0],
        final_energy: *trace.energy.last().unwrap_or(&0.0),
        identity_defect: energy_identity_check(&trace).map_err(CliError::numerical)?,
        samples: trace.len(),
    };
    out.json("report.json", &report)?;
    Ok(format!(
        "E(0) = {:.6e}, E({}) = {:.6e}, identity defect {:.2e}",
        report.initial_energy, report.t_end, report.final_energy, report.identity_defect
    ))
}

pub fn sigma_cmd(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let w = cfg.damping_required()?;
    let sampling = cfg.sampling_or_default();
    let section = cfg.sigma.clone().unwrap_or_else(|| crate::config::SigmaSection {
        times: (0..=20).map(|i| cfg.t_end * i as f64 / 20.0).collect(),
        windows: Vec::new(),
    });
    let curve = sigma_curve(w, &section.times, &sampling).map_err(CliError::numerical)?;
    let rows: Vec<Vec<f64>> = section.times.iter().zip(&curve).map(|(t, s)| vec![*t, *s]).collect();
    out.write("sigma.csv", |w| write_table(w, &["t", "sigma"], &rows))?;
    let t_last = section.times.iter().copied().fold(0.0, f64::max);
    let last = sigma(w, t_last, &sampling).map_err(CliError::numerical)?;
    let windows = section
        .windows
        .iter()
        .map(|&t| l_of_t(w, t, &sampling))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::numerical)?;
    if !windows.is_empty() {
        let rows: Vec<Vec<f64>> = windows.iter().map(|r| vec![r.window, r.min_average]).collect();
        out.write("l_of_t.csv", |w| write_table(w, &["window", "min_average"], &rows))?;
    }
    out.json("sigma.json", &(&last, &windows))?;
    Ok(format!(
        "Σ({}) = {:.6e}, witness x0 = {:?} direction = {:?}",
        last.t, last.sigma, last.witness.geodesic.x0, last.witness.geodesic.direction
    ))
}

pub fn tgcc(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let w = cfg.damping_required()?;
    let t0 = cfg.tgcc.map_or(1.0, |s| s.t0);
    let report = check_tgcc(w, t0, &cfg.sampling_or_default()).map_err(CliError::numerical)?;
    let rows: Vec<Vec<f64>> = report.curve.iter().map(|r| vec![r.window, r.min_average]).collect();
    out.write("tgcc_curve.csv", |w| write_table(w, &["window", "min_average"], &rows))?;
    out.json("tgcc.json", &report)?;
    let verdict = if report.satisfied { "satisfied" } else { "not satisfied" };
    Ok(format!(
        "control condition {verdict} (T0 = {t0}, least window average {:.3e}); witness x0 = {:?} direction = {:?} t0 = {} T = {}",
        report.min_average,
        report.witness.geodesic.x0,
        report.witness.geodesic.direction,
        report.witness.t0,
        report.witness.window
    ))
}

#[derive(Serialize)]
struct BeamSummary {
    k: f64,
    residual_at_end: f64,
    sup_defect: f64,
    epsilon: f64,
    lower_bound_holds: bool,
}

pub fn beam(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let section = cfg.beam.ok_or_else(|| CliError::Config("beam: section required".into()))?;
    let spec = section.spec(cfg.grid.dim)?;
    let grid = cfg.grid.build()?;
    let w = cfg.damping.as_ref();
    let t_end = spec.t0 + cfg.t_end;
    let report = beam_vs_exact(&spec, w, &grid, t_end, &cfg.solver, section.samples).map_err(CliError::numerical)?;
    let residual = residual_norm(&spec, w, &grid, t_end).map_err(CliError::numerical)?;
    out.write("beam.csv", |w| report.write_csv(w))?;
    let summary = BeamSummary {
        k: spec.k,
        residual_at_end: residual,
        sup_defect: report.sup_defect,
        epsilon: report.epsilon,
        lower_bound_holds: report.lower_bound_holds,
    };
    out.json("beam.json", &summary)?;
    Ok(format!(
        "k = {}: sup |E − G²| = {:.3e}, ε = {:.3e}, residual = {:.3e}, lower bound {}",
        spec.k,
        report.sup_defect,
        report.epsilon,
        residual,
        if report.lower_bound_holds { "holds" } else { "fails" }
    ))
}

pub fn observe(cfg: &ExperimentConfig, seed: u64, out: &mut OutputDir) -> Result<String, CliError> {
    let section = cfg.observe.as_ref().ok_or_else(|| CliError::Config("observe: section required".into()))?;
    let state = cfg.initial_state(seed)?;
    let rows = observability_sweep(&state, &section.weight, section.duration, &section.t0s, &cfg.solver)
        .map_err(CliError::numerical)?;
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.t0, r.duration, r.energy, r.observed, r.ratio]).collect();
    out.write("observe.csv", |w| write_table(w, &["t0", "duration", "energy", "observed", "ratio"], &table))?;
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    out.json("observe.json", &rows)?;
    Ok(format!("max C_obs over {} start times = {max:.6e}", rows.len()))
}

pub fn fit(cfg: &ExperimentConfig, config_dir: &Path, out: &mut OutputDir) -> Result<String, CliError> {
    let section = cfg.fit.as_ref().ok_or_else(|| CliError::Config("fit: section required".into()))?;
    let path = config_dir.join(&section.trace);
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let trace = EnergyTrace::read_csv(file).map_err(|e| CliError::Config(format!("fit.trace: {e}")))?;
    let window = section.window.map(|[a, b]| (a, b));
    let fits = section
        .models
        .iter()
        .map(|&m| fit_trace(&trace, m, window))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::numerical)?;
    out.write("fits.csv", |w| RateFit::write_csv(&fits, w))?;
    Ok(fits.iter().map(|f| f.summary()).collect::<Vec<_>>().join("\n"))
}
