use landau_lab::experiments::*;
use serde_json::{json, Value};

fn config(v: Value) -> ExperimentConfig {
    let c: ExperimentConfig = serde_json::from_value(v).unwrap();
    c.validate().unwrap();
    c
}

fn pair(n: usize, gamma: f64, g0: Value, f0: Value) -> ExperimentConfig {
    config(json!({
        "grid": {"L": 6, "N": n, "gamma": gamma},
        "initial": {"g0": g0, "f0": f0},
        "solver": {"T": 0.5},
    }))
}

fn m(mu: f64) -> Value {
    json!({"kind": "maxwellian", "mu": mu})
}

fn bump(amplitude: f64) -> Value {
    json!({"kind": "perturbed_maxwellian", "mu": 0.5, "amplitude": amplitude})
}

#[test]
fn identical_data_stay_identical() {
    let r = run_weak_strong(&pair(16, -3.0, m(0.5), m(0.5))).unwrap();
    assert!(r.samples.iter().all(|s| s.rel_entropy <= 1e-10));
    assert!(r.pass && r.c_star == 0.0);
    let id = run_entropy_identity(&pair(16, -3.0, m(0.5), m(0.5))).unwrap();
    assert!(id.windows.iter().all(|w| w.slope.abs() <= 1e-10 && w.production.abs() <= 1e-10));
}

#[test]
fn bump_perturbation_decays_inside_the_envelope() {
    let r = run_weak_strong(&pair(24, -3.0, m(0.5), bump(0.1))).unwrap();
    let ratio = r.samples.last().unwrap().rel_entropy / r.initial_rel_entropy;
    assert!(r.pass && r.non_increasing_after_first);
    assert!((ratio - BUMP_RATIO).abs() <= 1e-8 * BUMP_RATIO, "{ratio:e}");
}

const BUMP_RATIO: f64 = 6.35570062902084842e-1;

#[test]
fn halving_the_bump_quarters_the_relative_entropy() {
    let h = |a: f64| run_weak_strong(&pair(16, -3.0, m(0.5), bump(a))).unwrap();
    let (full, half) = (h(0.1), h(0.05));
    let q = full.initial_rel_entropy / half.initial_rel_entropy;
    assert!((q - 4.0).abs() <= 0.3 * 4.0, "{q}");
    // the whole trajectory scales alike, within a factor 2
    for (a, b) in full.samples.iter().zip(&half.samples) {
        let s = a.rel_entropy / b.rel_entropy / q;
        assert!(s > 0.5 && s < 2.0, "{s}");
    }
}

#[test]
fn shifted_maxwellian_needs_a_finite_constant() {
    let f0 = json!({"kind": "maxwellian", "mu": 0.5, "mean": [0.3, 0.0, 0.0], "energy": 3.0});
    let r = run_weak_strong(&pair(24, -3.0, m(0.5), f0)).unwrap();
    assert!(r.c_star.is_finite() && r.pass);
    assert!((r.c_star - SHIFTED_C_STAR).abs() <= 1e-6 * SHIFTED_C_STAR.max(1e-12), "{:e}", r.c_star);
}

const SHIFTED_C_STAR: f64 = 0.0;

#[test]
fn entropy_identity_residual_regression() {
    let r = run_entropy_identity(&pair(16, -3.0, m(0.5), bump(0.1))).unwrap();
    assert!(r.pass && r.direction_ok && r.bad_bound_finite);
    assert!((r.max_residual - IDENTITY_RESIDUAL).abs() <= 1e-6 * IDENTITY_RESIDUAL);
}

const IDENTITY_RESIDUAL: f64 = 1.58882713734165033e-6;

#[test]
fn maxwellian_sandwich_propagates() {
    let exact = run_maxwellian_propagation(&pair(24, -3.0, m(0.5), m(0.5))).unwrap();
    assert!(exact.samples.iter().all(|s| {
        (0.9..=1.1).contains(&s.ratio_lo) && (0.9..=1.1).contains(&s.ratio_hi)
    }));
    let heavy = config(json!({
        "grid": {"L": 6, "N": 24, "gamma": -3},
        "initial": {"g0": {"kind": "maxwellian", "mu": 0.5, "mass": 1.5}},
        "solver": {"T": 0.0},
    }));
    let base = run_maxwellian_propagation(&pair(24, -3.0, m(0.5), m(0.5))).unwrap().initial;
    let scaled = run_maxwellian_propagation(&heavy).unwrap().initial;
    assert!((scaled.k_lo / base.k_lo - 1.5).abs() < 1e-12 && (scaled.k_hi / base.k_hi - 1.5).abs() < 1e-12);
    let soft = pair(24, -2.5, bump(0.1), m(0.5));
    let r = run_maxwellian_propagation(&soft).unwrap();
    assert!(r.pass);
}

#[test]
fn moments_stay_bounded() {
    // the discrete equilibrium drifts at O(h^6) in this weight; N = 32 is
    // the first desk grid below 1e-6
    let mut eq = pair(32, -3.0, m(0.5), m(0.5));
    eq.exponents.rho = Rho::Value(9.0);
    let r = run_moment_propagation(&eq).unwrap();
    assert_eq!(r.order, 12.0);
    assert!(r.moment_g.iter().all(|x| (x / r.moment_g[0] - 1.0).abs() <= 1e-6));

    let mut pert = pair(24, -3.0, m(0.5), bump(0.1));
    pert.exponents.rho = Rho::Value(9.0);
    let light = run_moment_propagation(&pert).unwrap();
    let mut heavy_cfg = pair(24, -3.0, m(0.5), json!({"kind": "maxwellian", "mu": 0.4}));
    heavy_cfg.exponents.rho = Rho::Value(9.0);
    let heavy = run_moment_propagation(&heavy_cfg).unwrap();
    assert!(light.pass && heavy.pass);
    let top = |r: &MomentReport| r.moment_f.iter().cloned().fold(0.0, f64::max);
    assert!(top(&heavy) > top(&light));
}

#[test]
fn comparison_principle_on_soft_potentials() {
    for gamma in [-3.0, -2.5] {
        let r = run_maximum_principle(&pair(16, gamma, m(0.5), m(0.5))).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn interpolation_constant_for_the_sine() {
    let corpus = interpolation_corpus(0);
    let sine: Vec<AnalyticField> = corpus.into_iter().filter(|f| f.name == "sin_v1").collect();
    let r = run_interpolation_suite(&sine, 3.0, 24, 0.5, 0.75, 10.0).unwrap();
    let f = &r.fields[0];
    // direct scan of eps (|grad u| - eps |hess u|) / |u| over the same eps grid
    let oracle = r
        .epsilons
        .iter()
        .map(|&e| e * (f.grad_sup - e * f.hess_sup) / f.sup)
        .fold(0.0, f64::max);
    assert!((f.required[1] - oracle).abs() <= 1e-14, "{} vs {oracle}", f.required[1]);
    assert!(oracle > 0.2 && oracle <= 0.25 / f.hess_sup * f.grad_sup * f.grad_sup / f.sup + 1e-12);
    let all = run_interpolation(&pair(12, -3.0, m(0.5), m(0.5))).unwrap();
    assert!(all.pass && all.c_hat <= 10.0);
}
