//! Cross-module properties checked on every built-in damping family.

use std::f64::consts::PI;

use dampwave::damping::{BumpShape, LengthSequence, Window};
use dampwave::observe::{check_decay_trace, observability_ratio, sandwich_check, ObservationWindow};
use dampwave::rates::{fit, RateModel};
use dampwave::solver::random_band_limited;
use dampwave::{
    beam, energy_identity_check, evolve, BeamSpec, DampingProfile, Evolution, Geodesic, SolverConfig, TorusGrid,
};

fn families() -> Vec<(&'static str, DampingProfile)> {
    let one = DampingProfile::constant(1.0).unwrap();
    let bump = DampingProfile::space_bump(0.8, [2.0, 0.0], 1.2, BumpShape::Polynomial { power: 3 }).unwrap();
    vec![
        ("constant", DampingProfile::constant(0.3).unwrap()),
        ("space_bump", bump.clone()),
        ("cosine", DampingProfile::cosine(0.5, 0.4, [1, 0]).unwrap()),
        ("poly_product", DampingProfile::poly_product(one.clone(), 0.7).unwrap()),
        ("growing_off", DampingProfile::growing_off(bump, 0.8, LengthSequence::Geometric { scale: 0.5, ratio: 1.4 }).unwrap()),
        (
            "shrinking_on",
            DampingProfile::shrinking_on(one, Window::Smooth, 1.5, LengthSequence::inverse_power(1.0, 0.4)).unwrap(),
        ),
    ]
}

#[test]
fn sandwich_holds_for_every_family() {
    let grid = TorusGrid::t1(48).unwrap();
    for (name, w) in families() {
        for seed in 0..5 {
            let mut state = random_band_limited(grid, 1, 6, seed);
            state.t = 0.7 * seed as f64;
            let r = sandwich_check(&state, &w, 3.0, &SolverConfig::rk4(5e-3)).unwrap();
            assert!(r.pass, "{name} seed {seed}: {r:?}");
            assert_eq!(r.c_t, 1.0 + 6.0 * w.sup_norm());
        }
    }
}

#[test]
fn dissipation_identity_and_bookkeeping_for_every_family() {
    let grid = TorusGrid::t1(64).unwrap();
    for (name, w) in families() {
        for cfg in [SolverConfig::rk4(5e-3).with_stride(1), SolverConfig::strang(5e-3).with_stride(1)] {
            let state = random_band_limited(grid, 1, 10, 42);
            let (_, tr) = Evolution::new(cfg)
                .damping(Some(&w))
                .breakpoints((1..=6).map(|k| k as f64))
                .run(state, 6.0)
                .unwrap();
            assert!(tr.energy.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)), "{name} {:?}", cfg.scheme);
            let defect = energy_identity_check(&tr).unwrap();
            let tol = if cfg.scheme == dampwave::Scheme::Strang { 1e-10 } else { 1e-6 };
            assert!(defect <= tol * tr.energy[0], "{name} {:?}: identity defect {defect:e}", cfg.scheme);
            let book = check_decay_trace(&tr, 1.0).unwrap();
            assert!(book.pass, "{name}: {book:?}");
        }
    }
}

#[test]
fn observability_degrades_along_an_undamped_geodesic() {
    // the bump misses the line x₂ = 0; beams along it are nearly invisible
    let w = DampingProfile::space_bump(1.0, [PI, PI], 1.5, BumpShape::Smooth).unwrap();
    let window = ObservationWindow::new(0.0, 2.0, w).unwrap();
    let mut ratios = Vec::new();
    for k in [32.0, 64.0, 128.0] {
        let grid = TorusGrid::t2((4.0 * k) as usize).unwrap();
        let spec = BeamSpec::new(2, Geodesic::t2([PI, 0.0], 0.0), k).unwrap();
        let (u, v) = beam::quasi_solution(&spec, None, &grid, 0.0).unwrap();
        let state = dampwave::WaveState::new(u, v, 0.0).unwrap();
        ratios.push(observability_ratio(&state, &window, &SolverConfig::strang(0.01)).unwrap().ratio);
    }
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2], "{ratios:?}");
}

#[test]
fn constant_damping_fits_the_sigma_rate() {
    let grid = TorusGrid::t1(64).unwrap();
    let w = DampingProfile::constant(0.25).unwrap();
    let state = random_band_limited(grid, 8, 16, 3);
    let (_, tr) = Evolution::new(SolverConfig::strang(0.01))
        .damping(Some(&w))
        .sigma(dampwave::GeodesicSampling::t1(8))
        .run(state, 30.0)
        .unwrap();
    let f = fit(&tr, RateModel::ExpSigma, None).unwrap();
    assert!((f.rate - 2.0).abs() < 0.05, "{}", f.summary());
}

#[test]
fn beam_energy_follows_the_propagator() {
    // exact evolution from beam data keeps E ≈ G² up to the beam error
    let w = DampingProfile::constant(0.2).unwrap();
    let spec = BeamSpec::new(1, Geodesic::t1(1.0, true), 64.0).unwrap();
    let grid = TorusGrid::t1(256).unwrap();
    let r = beam::beam_vs_exact(&spec, Some(&w), &grid, 3.0, &SolverConfig::strang(5e-3), 10).unwrap();
    assert!(r.sup_defect < 0.02, "{}", r.sup_defect);
    assert!(r.lower_bound_holds);
    let g_end = *r.g_squared.last().unwrap();
    assert!((g_end - (-1.2f64).exp()).abs() < 1e-9);
}

#[test]
fn undamped_runs_conserve_energy_on_t2() {
    let grid = TorusGrid::t2(32).unwrap();
    let state = random_band_limited(grid, 1, 6, 8);
    let e0 = state.energy();
    let (end, _) = evolve(state, None, 3.0, &SolverConfig::rk4(2e-3)).unwrap();
    assert!((end.energy() - e0).abs() <= 1e-9 * e0);
}
