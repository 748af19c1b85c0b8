//! Named reproduction experiments. Each writes CSV artifacts and returns
//! pass/fail checks with the measured numbers.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use dampwave::beam::{beam_vs_exact, quasi_energy_defect, residual_norm};
use dampwave::damping::{BumpShape, LengthSequence, Window};
use dampwave::geodesic::{check_tgcc, sigma, GeodesicSampling};
use dampwave::observe::{check_decay_trace, sandwich_check, short_time_sweep};
use dampwave::rates::{
    fit, growing_envelope_exponents, poly_rate_check, predict_growing, predict_shrinking, sigma_exponent_bound_check,
    RateModel,
};
use dampwave::solver::random_band_limited;
use dampwave::{
    BeamSpec, DampingProfile, EnergyTrace, Evolution, Field, FieldKind, Geodesic, SolverConfig, TorusGrid, WaveState,
};
use serde::Serialize;

use crate::output::{write_table, OutputDir};
use crate::sweep::slope_table;
use crate::CliError;

/// One verdict line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(criterion: &str, name: &str, pass: bool, detail: String) -> Self {
        Self { criterion: criterion.into(), name: name.into(), pass, detail }
    }

    pub fn line(&self) -> String {
        format!("{} criterion {} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.criterion, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub name: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub files: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

type Runner = fn(u64, &mut OutputDir) -> Result<Vec<Check>, CliError>;

pub struct Experiment {
    pub name: &'static str,
    pub criterion: &'static str,
    pub summary: &'static str,
    /// Wall-clock budget in seconds.
    pub budget: f64,
    run: Runner,
}

pub const CATALOG: &[Experiment] = &[
    Experiment { name: "energy-conservation", criterion: "1", summary: "undamped T¹ run, energy drift", budget: 10.0, run: energy_conservation },
    Experiment { name: "constant-oracle", criterion: "2", summary: "constant damping vs the closed-form mode, fitted Σ-rate", budget: 10.0, run: constant_oracle },
    Experiment { name: "beam-residual", criterion: "3", summary: "beam residual slope in k on T¹ and T²", budget: 120.0, run: beam_residual },
    Experiment { name: "beam-energy", criterion: "4", summary: "beam energy defect at k = 128 and 512", budget: 120.0, run: beam_energy },
    Experiment { name: "lower-bound-witness", criterion: "5", summary: "beam along an undamped geodesic keeps its energy", budget: 180.0, run: lower_bound_witness },
    Experiment { name: "sandwich", criterion: "6", summary: "damped/free observation sandwich", budget: 120.0, run: sandwich },
    Experiment { name: "short-time", criterion: "7", summary: "short-time observability slopes", budget: 5.0, run: short_time },
    Experiment { name: "poly-beta-02", criterion: "8", summary: "polynomial damping β = 0.2, stretched exponent", budget: 75.0, run: poly_beta_02 },
    Experiment { name: "poly-beta-05", criterion: "8", summary: "polynomial damping β = 0.5, stretched exponent", budget: 75.0, run: poly_beta_05 },
    Experiment { name: "poly-beta-1", criterion: "8", summary: "polynomial damping β = 1, power law vs stretched", budget: 75.0, run: poly_beta_1 },
    Experiment { name: "poly-beta-15", criterion: "8", summary: "polynomial damping β = 1.5, energy plateau", budget: 75.0, run: poly_beta_15 },
    Experiment { name: "growing-off", criterion: "9", summary: "growing-off family f(j) = j, stretched exponent", budget: 300.0, run: growing_off },
    Experiment { name: "shrinking-on", criterion: "10", summary: "shrinking-on family β = 0.2, exponent gap and bookkeeping", budget: 300.0, run: shrinking_on },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

/// Runs `name` into `out_dir` and writes `checks.json` plus the manifest.
pub fn reproduce(name: &str, seed: u64, out_dir: &Path) -> Result<Outcome, CliError> {
    let exp = find(name).ok_or_else(|| CliError::Config(format!("unknown experiment {name:?} (see list-experiments)")))?;
    let mut out = OutputDir::create(out_dir)?;
    let start = Instant::now();
    let mut checks = (exp.run)(seed, &mut out)?;
    let seconds = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        exp.criterion,
        "runtime",
        seconds < exp.budget,
        format!("{seconds:.2} s (budget {} s)", exp.budget),
    ));
    out.json("checks.json", &checks)?;
    let files = out.finish(&format!("reproduce {name}"), &format!("experiment = {name:?}\nseed = {seed}\n"), seed)?;
    Ok(Outcome { name: name.into(), checks, seconds, files })
}

fn num<E: std::fmt::Display>(e: E) -> CliError {
    CliError::numerical(e)
}

fn write_trace(out: &mut OutputDir, name: &str, trace: &EnergyTrace) -> Result<(), CliError> {
    out.write(name, |w| trace.write_csv(w)).map(|_| ())
}

fn energy_conservation(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let grid = TorusGrid::t1(256).map_err(num)?;
    let state = random_band_limited(grid, 1, 16, seed);
    let (_, trace) = Evolution::new(SolverConfig::rk4(1e-3).with_stride(100)).run(state, 10.0).map_err(num)?;
    write_trace(out, "trace.csv", &trace)?;
    let e0 = trace.energy[0];
    let drift = trace.energy.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
    Ok(vec![Check::new("1", "energy drift", drift <= 1e-8, format!("max relative drift {drift:.3e} (limit 1e-8)"))])
}

fn constant_oracle(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let _ = seed;
    let (a, lambda, t_end) = (0.1, 8.0, 40.0);
    let grid = TorusGrid::t1(64).map_err(num)?;
    let u = Field::from_real_fn(grid, FieldKind::Position, |p| (lambda * p[0]).cos());
    let state = WaveState::new(u, Field::zeros(grid, FieldKind::Velocity), 0.0).map_err(num)?;
    let w = DampingProfile::constant(a).map_err(num)?;
    let (_, trace) = Evolution::new(SolverConfig::rk4(1e-3))
        .damping(Some(&w))
        .sigma(GeodesicSampling::t1(8))
        .run(state, t_end)
        .map_err(num)?;
    // u'' + 2a u' + λ²u = 0 with u(0) = 1, u'(0) = 0
    let omega = (lambda * lambda - a * a).sqrt();
    let exact = |t: f64| {
        let y = (-a * t).exp() * ((omega * t).cos() + a / omega * (omega * t).sin());
        let yd = -(-a * t).exp() * (omega + a * a / omega) * (omega * t).sin();
        0.5 * PI * (lambda * lambda * y * y + yd * yd)
    };
    let rows: Vec<Vec<f64>> = trace.times.iter().zip(&trace.energy).map(|(t, e)| vec![*t, *e, exact(*t)]).collect();
    let mismatch = rows.iter().map(|r| (r[1] - r[2]).abs() / r[2]).fold(0.0, f64::max);
    write_trace(out, "trace.csv", &trace)?;
    out.write("oracle.csv", |o| write_table(o, &["t", "energy", "exact"], &rows))?;
    let f = fit(&trace, RateModel::ExpSigma, None).map_err(num)?;
    out.write("fit.csv", |o| dampwave::RateFit::write_csv(&[f], o))?;
    let verdict = sigma_exponent_bound_check(&f).map_err(num)?;
    Ok(vec![
        Check::new("2", "closed-form mode", mismatch <= 1e-6, format!("max relative mismatch {mismatch:.3e} (limit 1e-6)")),
        Check::new(
            "2",
            "fitted Σ-rate",
            (1.9..=2.1).contains(&f.rate) && verdict.pass,
            format!("c = {:.4} in [1.9, 2.1]; {}", f.rate, verdict.diagnostic),
        ),
    ])
}

fn beam_residual(_seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let w = DampingProfile::constant(0.2).map_err(num)?;
    let ks = [32.0, 64.0, 128.0, 256.0];
    let mut checks = Vec::new();
    let mut table = Vec::new();
    for dim in [1usize, 2] {
        for damped in [false, true] {
            let g = if dim == 1 { Geodesic::t1(PI, true) } else { Geodesic::t2([PI, 0.5], 0.0) };
            let mut rows = Vec::new();
            for k in ks {
                let spec = BeamSpec::new(dim, g, k).map_err(num)?;
                let grid = TorusGrid::new(dim, (4.0 * k) as usize, 2.0 * PI).map_err(num)?;
                rows.push((k, residual_norm(&spec, damped.then_some(&w), &grid, 1.0).map_err(num)?));
            }
            let name = format!("residual_t{dim}_{}.csv", if damped { "damped" } else { "free" });
            let slope = slope_table(out, &name, ["k", "residual"], &rows)?;
            table.extend(rows.iter().map(|(k, r)| vec![dim as f64, damped as u8 as f64, *k, *r, slope]));
            checks.push(Check::new(
                "3",
                &format!("residual slope T{dim} {}", if damped { "W = 0.2" } else { "W = 0" }),
                slope <= -0.4,
                format!("slope {slope:.3} (limit -0.4); residuals {:?}", rows.iter().map(|r| format!("{:.2e}", r.1)).collect::<Vec<_>>()),
            ));
        }
    }
    out.write("residuals.csv", |o| write_table(o, &["dim", "damped", "k", "residual", "slope"], &table))?;
    Ok(checks)
}

fn beam_energy(_seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let w = DampingProfile::constant(0.2).map_err(num)?;
    let mut rows = Vec::new();
    for k in [128.0, 512.0] {
        let spec = BeamSpec::new(1, Geodesic::t1(PI, true), k).map_err(num)?;
        let grid = TorusGrid::t1((4.0 * k) as usize).map_err(num)?;
        rows.push((k, quasi_energy_defect(&spec, Some(&w), &grid, 5.0, 50).map_err(num)?));
    }
    slope_table(out, "defect.csv", ["k", "sup_defect"], &rows)?;
    let (d128, d512) = (rows[0].1, rows[1].1);
    Ok(vec![Check::new(
        "4",
        "energy defect decay",
        d512 <= 1.3 * d128 / 2.0,
        format!("D(128) = {d128:.3e}, D(512) = {d512:.3e}, ratio {:.2} (need D(512) ≤ 1.3·D(128)/2)", d128 / d512),
    )])
}

fn lower_bound_witness(_seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let w = DampingProfile::space_bump(1.0, [PI, PI], 1.5, BumpShape::Smooth).map_err(num)?;
    let grid = TorusGrid::t2(512).map_err(num)?;
    // the line x₂ = 0 stays at distance π from the bump centre
    let spec = BeamSpec::new(2, Geodesic::t2([PI, 0.0], 0.0), 128.0).map_err(num)?;
    let report = beam_vs_exact(&spec, Some(&w), &grid, 5.0, &SolverConfig::strang(0.01), 10).map_err(num)?;
    out.write("beam.csv", |o| report.write_csv(o))?;
    let retained = report.energy_exact.last().copied().unwrap_or(0.0) / report.energy_exact[0];
    let sampling = GeodesicSampling::t2(16, 8);
    let s = sigma(&w, 5.0, &sampling).map_err(num)?;
    let tg = check_tgcc(&w, 5.0, &sampling).map_err(num)?;
    out.json("tgcc.json", &tg)?;
    Ok(vec![
        Check::new("5", "energy retained", retained >= 0.8, format!("E(5)/E(0) = {retained:.4} (need ≥ 0.8)")),
        Check::new(
            "5",
            "Σ and control condition",
            s.sigma.abs() <= 1e-12 && !tg.satisfied,
            format!(
                "Σ(5) = {:.2e}, control condition {} (least average {:.2e}, witness direction {:?})",
                s.sigma,
                if tg.satisfied { "satisfied" } else { "not satisfied" },
                tg.min_average,
                tg.witness.geodesic.direction
            ),
        ),
    ])
}

fn sandwich(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let one = DampingProfile::constant(1.0).map_err(num)?;
    let bump = DampingProfile::space_bump(1.0, [PI, 0.0], 1.0, BumpShape::Smooth).map_err(num)?;
    let families = [
        ("constant", DampingProfile::constant(0.3).map_err(num)?),
        ("poly_product", DampingProfile::poly_product(one, 0.5).map_err(num)?),
        ("growing_off", DampingProfile::growing_off(bump, 1.0, LengthSequence::power(1.0, 1.0)).map_err(num)?),
    ];
    let grid = TorusGrid::t1(64).map_err(num)?;
    let duration = 5.0;
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    let mut all = true;
    let mut c_t_ok = true;
    for (fi, (_, w)) in families.iter().enumerate() {
        for r in 0..5u64 {
            for t0 in [0.0, 2.5] {
                let mut state = random_band_limited(grid, 1, 8, seed.wrapping_add(r));
                state.t = t0;
                let rep = sandwich_check(&state, w, duration, &SolverConfig::rk4(2e-3)).map_err(num)?;
                c_t_ok &= rep.c_t == 1.0 + 2.0 * duration * w.sup_norm();
                all &= rep.pass;
                worst = worst.min(rep.slack);
                rows.push(vec![fi as f64, r as f64, t0, rep.lhs, rep.mid, rep.rhs, rep.c_t, rep.slack]);
            }
        }
    }
    out.write("sandwich.csv", |o| write_table(o, &["family", "sample", "t0", "lhs", "mid", "rhs", "c_t", "slack"], &rows))?;
    Ok(vec![Check::new(
        "6",
        "sandwich inequalities",
        all && c_t_ok,
        format!(
            "{} runs over {}, least slack {worst:.3e} (need ≥ -1e-8), C_T formula {}",
            rows.len(),
            families.iter().map(|f| f.0).collect::<Vec<_>>().join("/"),
            if c_t_ok { "matches" } else { "differs" }
        ),
    )])
}

fn short_time(_seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let deltas: Vec<f64> = (0..=20).map(|i| 0.01 * 10f64.powf(i as f64 / 20.0)).collect();
    let mut checks = Vec::new();
    for (a, b, target, name) in [(1.0, 0.0, -3.0, "sin"), (0.0, 1.0, -1.0, "cos")] {
        let t = short_time_sweep(a, b, 1.0, &deltas).map_err(num)?;
        out.write(&format!("short_time_{name}.csv"), |o| t.write_csv(o))?;
        checks.push(Check::new(
            "7",
            &format!("short-time slope A = {a}, B = {b}"),
            (t.slope - target).abs() <= 0.05,
            format!("slope {:.4} (target {target} ± 0.05)", t.slope),
        ));
    }
    Ok(checks)
}

/// T¹, N = 128, W = (1+t)^{−β}, high-frequency data, t ∈ [0, 200].
fn poly_run(beta: f64, seed: u64, out: &mut OutputDir) -> Result<(EnergyTrace, DampingProfile), CliError> {
    let w = DampingProfile::poly_product(DampingProfile::constant(1.0).map_err(num)?, beta).map_err(num)?;
    let grid = TorusGrid::t1(128).map_err(num)?;
    let state = random_band_limited(grid, 6, 16, seed);
    let (_, trace) = Evolution::new(SolverConfig::strang(0.01)).damping(Some(&w)).run(state, 200.0).map_err(num)?;
    write_trace(out, "trace.csv", &trace)?;
    Ok((trace, w))
}

fn poly_exponent(beta: f64, seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let (trace, _) = poly_run(beta, seed, out)?;
    let f = fit(&trace, RateModel::Stretched, None).map_err(num)?;
    out.write("fit.csv", |o| dampwave::RateFit::write_csv(&[f], o))?;
    let p = f.exponent.unwrap_or(f64::NAN);
    let predicted = poly_rate_check(beta, 1.0, 1.0).map_err(num)?;
    let target = predicted.upper.stretch_exponent().unwrap_or(f64::NAN);
    Ok(vec![Check::new(
        "8",
        &format!("stretched exponent β = {beta}"),
        (p - target).abs() <= 0.1,
        format!("fitted p = {p:.4}, predicted 1 − β = {target:.2} ± 0.1"),
    )])
}

fn poly_beta_02(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    poly_exponent(0.2, seed, out)
}

fn poly_beta_05(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    poly_exponent(0.5, seed, out)
}

fn poly_beta_1(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let (trace, _) = poly_run(1.0, seed, out)?;
    let power = fit(&trace, RateModel::Power, None).map_err(num)?;
    let stretched = fit(&trace, RateModel::Stretched, None).map_err(num)?;
    out.write("fit.csv", |o| dampwave::RateFit::write_csv(&[power, stretched], o))?;
    Ok(vec![Check::new(
        "8",
        "power law beats stretched at β = 1",
        power.residual < stretched.residual,
        format!(
            "power residual {:.3e} (rate {:.3}), stretched residual {:.3e} (p = {:.3})",
            power.residual,
            power.rate,
            stretched.residual,
            stretched.exponent.unwrap_or(f64::NAN)
        ),
    )])
}

fn poly_beta_15(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let (trace, _) = poly_run(1.5, seed, out)?;
    let e0 = trace.energy[0];
    let e_end = *trace.energy.last().unwrap_or(&0.0);
    let mid = trace.index_of(100.0, 1e-9).map_or(f64::NAN, |i| trace.energy[i]);
    // Σ(t) = 2(1 − (1+t)^{−1/2}) for W = (1+t)^{−3/2}
    let sigma_end = 2.0 * (1.0 - 201f64.sqrt().recip());
    let ratio = e_end / e0;
    Ok(vec![Check::new(
        "8",
        "energy plateau at β = 1.5",
        ratio >= 0.5,
        format!(
            "E(200)/E(0) = {ratio:.4} (need ≥ 0.5); E(200)/E(100) = {:.4}; exp(−2Σ(200)) = {:.4}",
            e_end / mid,
            (-2.0 * sigma_end).exp()
        ),
    )])
}

fn growing_off(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let (l0, c1, t_end) = (1.0, 1.0, 400.0);
    let gaps = LengthSequence::power(c1, 1.0);
    let w = DampingProfile::growing_off(DampingProfile::constant(1.0).map_err(num)?, l0, gaps).map_err(num)?;
    let grid = TorusGrid::t1(128).map_err(num)?;
    let state = random_band_limited(grid, 6, 16, seed);
    let (_, trace) = Evolution::new(SolverConfig::strang(0.01)).damping(Some(&w)).run(state, t_end).map_err(num)?;
    write_trace(out, "trace.csv", &trace)?;
    let f = fit(&trace, RateModel::Stretched, None).map_err(num)?;
    out.write("fit.csv", |o| dampwave::RateFit::write_csv(&[f], o))?;
    let p = f.exponent.unwrap_or(f64::NAN);
    let (up, lo) = growing_envelope_exponents(&gaps, l0, c1, f.t_min, f.t_max).map_err(num)?;
    let pred = predict_growing(&gaps, l0, c1, t_end).map_err(num)?;
    let (a, b) = (up.min(lo) - 0.1, up.max(lo) + 0.1);
    Ok(vec![Check::new(
        "9",
        "growing-off stretched exponent",
        (p - 0.5).abs() <= 0.1 && (a..=b).contains(&p),
        format!(
            "fitted p = {p:.4}; envelope exponents {up:.4} (upper) / {lo:.4} (lower); N({t_end}) = {} in [{:.2}, {:.2}]",
            pred.n_completed, pred.n_bounds.0, pred.n_bounds.1
        ),
    )])
}

fn shrinking_on(seed: u64, out: &mut OutputDir) -> Result<Vec<Check>, CliError> {
    let (beta, s0, t_end) = (0.2, 2.0, 400.0);
    let g = DampingProfile::constant(1.0).map_err(num)?;
    let w = DampingProfile::shrinking_on(g, Window::Indicator, s0, LengthSequence::inverse_power(1.0, beta)).map_err(num)?;
    let grid = TorusGrid::t1(128).map_err(num)?;
    let state = random_band_limited(grid, 6, 16, seed);
    let n = (t_end / s0) as usize;
    let (_, trace) = Evolution::new(SolverConfig::strang(0.01))
        .damping(Some(&w))
        .breakpoints((1..=n).map(|k| k as f64 * s0))
        .run(state, t_end)
        .map_err(num)?;
    write_trace(out, "trace.csv", &trace)?;
    let f = fit(&trace, RateModel::Stretched, None).map_err(num)?;
    out.write("fit.csv", |o| dampwave::RateFit::write_csv(&[f], o))?;
    let p = f.exponent.unwrap_or(f64::NAN);
    let (a, b) = predict_shrinking(beta, s0).map_err(num)?.exponent_interval(0.1).unwrap_or((f64::NAN, f64::NAN));
    let book = check_decay_trace(&trace, s0).map_err(num)?;
    let rows: Vec<Vec<f64>> = (0..book.energy.len())
        .map(|k| vec![k as f64 * s0, book.energy[k], book.bound[k]])
        .collect();
    out.write("bookkeeping.csv", |o| write_table(o, &["t", "energy", "bound"], &rows))?;
    Ok(vec![
        Check::new(
            "10",
            "shrinking-on exponent in the gap",
            (a - 1e-12..=b + 1e-12).contains(&p),
            format!("fitted p = {p:.4} in [{a:.2}, {b:.2}]"),
        ),
        Check::new(
            "10",
            "decay bookkeeping",
            book.pass,
            format!("{} windows, worst E(kT0) − bound = {:.3e}", book.b.len(), book.worst_excess),
        ),
    ])
}
