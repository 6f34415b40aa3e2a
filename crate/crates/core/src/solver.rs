//! Explicit time stepping of `d_t g = a_bar : hess g + c_bar g`.
//!
//! Heun's method with the coefficients recomputed from the stage state,
//! followed by clipping of negative cells and a multiplicative projection
//! onto the conserved mass, momentum and energy of the initial datum.

use nalgebra::{Matrix5, Vector5};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{ellipticity, CoefficientEngine, CoefficientPair};
use crate::error::{Error, Result};
use crate::functionals::entropy;
use crate::grid::{conserved_moments, pairwise_sum, ScalarField, SymMatrixField};
use crate::linalg::norm_sq;
use crate::stencil::{density_hessian, GhostPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t_final: f64,
    /// Safety factor of the diffusive time-step bound, in (0, 1].
    pub cfl: f64,
    pub projection: bool,
    #[serde(skip, default = "default_ghost")]
    pub ghost: GhostPolicy,
    /// Abort when the entropy of a density rises by more than the allowed
    /// slack in one step.
    pub entropy_check: bool,
}

fn default_ghost() -> GhostPolicy {
    GhostPolicy::Auto
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_final: 0.5,
            cfl: 0.4,
            projection: true,
            ghost: GhostPolicy::Auto,
            entropy_check: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            problems.push(format!("time horizon must be finite and non-negative, got {}", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            problems.push(format!("cfl factor must lie in (0, 1], got {}", self.cfl));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Allowed per-step entropy increase: `1e-8 + 10 * |projection change|_1`.
pub const ENTROPY_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepReport {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    /// Relative drift of (mass, momentum, energy) before projection.
    pub drift: [f64; 5],
    /// Relative drift left after projection.
    pub residual_drift: [f64; 5],
    pub clipped: usize,
    /// `max |d_t g|` at the start of the step.
    pub max_rate: f64,
    /// `h^3 sum |g_projected - g_clipped|`.
    pub projection_change: f64,
    pub entropy_before: f64,
    pub entropy_after: f64,
}

/// `a_bar : hess u + c_bar u` for given coefficients.
pub fn rhs_frozen(coeffs: &CoefficientPair, u: &ScalarField, ghost: GhostPolicy) -> ScalarField {
    let hess = density_hessian(u, ghost);
    apply_operator(&coeffs.a_bar, &coeffs.c_bar, &hess, u)
}

fn apply_operator(
    a_bar: &SymMatrixField,
    c_bar: &ScalarField,
    hess: &SymMatrixField,
    u: &ScalarField,
) -> ScalarField {
    let values = (0..u.grid().len())
        .into_par_iter()
        .map(|i| a_bar.at(i).contract(&hess.at(i)) + c_bar.at(i) * u.at(i))
        .collect();
    ScalarField::from_values(*u.grid(), values).expect("sized by grid")
}

/// Right-hand side with self-consistent coefficients.
pub fn rhs(engine: &CoefficientEngine, g: &ScalarField) -> ScalarField {
    rhs_frozen(&engine.pair_unchecked(g), g, GhostPolicy::Auto)
}

/// `c h^2 / (2 d max lambda_max(a_bar))` with `d = 3`.
pub fn cfl_dt(a_bar: &SymMatrixField, cfl: f64) -> Result<f64> {
    let h = a_bar.grid().spacing();
    let lam = a_bar
        .values()
        .par_iter()
        .map(|m| m.max_eigenvalue())
        .reduce(|| 0.0, f64::max);
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::Numerical {
            t: f64::NAN,
            message: format!("degenerate diffusion matrix (max eigenvalue {lam})"),
        });
    }
    Ok(cfl * h * h / (6.0 * lam))
}

/// Natural scales for relative drift: mass, `sqrt(mass * energy)` for each
/// momentum component, energy.
fn drift_scales(target: &[f64; 5]) -> [f64; 5] {
    let p = (target[0].abs() * target[4].abs()).sqrt();
    [target[0].abs(), p, p, p, target[4].abs()]
}

fn relative_drift(current: &[f64; 5], target: &[f64; 5]) -> [f64; 5] {
    let s = drift_scales(target);
    std::array::from_fn(|k| (current[k] - target[k]).abs() / s[k])
}

fn basis(v: [f64; 3]) -> [f64; 5] {
    [1.0, v[0], v[1], v[2], norm_sq(v)]
}

/// Rescales `f` by `alpha + beta . v + delta |v|^2` so that its mass,
/// momentum and energy equal `target`.
///
/// The multiplier is found from the 5x5 Gram system of `{1, v, |v|^2}`
/// weighted by `f`, with one refinement pass. Cells driven negative are
/// clipped and the system re-solved, at most twice.
pub fn conservative_projection(f: &ScalarField, target: &[f64; 5]) -> Result<ScalarField> {
    if !(target[0] > 0.0) {
        return Err(Error::InvalidInput(format!("target mass must be positive, got {}", target[0])));
    }
    let mut out = f.clone();
    for round in 0..3 {
        for _ in 0..2 {
            out = project_once(&out, target)?;
        }
        let negative = out.values().iter().filter(|&&x| x < 0.0).count();
        if negative == 0 {
            return Ok(out);
        }
        if round == 2 {
            break;
        }
        out = out.map(|x| x.max(0.0));
    }
    Err(Error::Numerical {
        t: f64::NAN,
        message: "projection keeps producing negative cells".into(),
    })
}

fn project_once(f: &ScalarField, target: &[f64; 5]) -> Result<ScalarField> {
    let grid = *f.grid();
    let current = conserved_moments(f);
    let rhs = Vector5::from_fn(|k, _| target[k] - current[k]);
    if rhs.iter().all(|&x| x == 0.0) {
        return Ok(f.clone());
    }
    let w = grid.cell_volume();
    // 15 distinct Gram entries
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); 15];
    for (idx, &x) in f.values().iter().enumerate() {
        let b = basis(grid.node(idx));
        let mut c = 0;
        for k in 0..5 {
            for l in k..5 {
                cols[c].push(x * b[k] * b[l]);
                c += 1;
            }
        }
    }
    let mut gram = Matrix5::zeros();
    let mut c = 0;
    for k in 0..5 {
        for l in k..5 {
            let s = w * pairwise_sum(&cols[c]);
            gram[(k, l)] = s;
            gram[(l, k)] = s;
            c += 1;
        }
    }
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|c| c.is_finite()))
        .ok_or_else(|| Error::Singular("moment Gram matrix of the density".into()))?;
    Ok(f.map_with_node(|v, x| {
        let b = basis(v);
        x * (1.0 + (0..5).map(|k| coeffs[k] * b[k]).sum::<f64>())
    }))
}

/// One density under evolution.
struct Density {
    g: ScalarField,
    target: [f64; 5],
}

/// Lockstep evolution of one or more densities with a common time step.
///
/// The step sequence depends only on the current states and the requested
/// end times, so a run resumed from a stored state (with the same targets)
/// reproduces an uninterrupted run bit for bit.
pub struct Stepper<'e> {
    engine: &'e CoefficientEngine,
    config: SolverConfig,
    t: f64,
    densities: Vec<Density>,
    steps: usize,
}

impl<'e> Stepper<'e> {
    /// Starts at `t = 0`; each state's own conserved moments become its target.
    pub fn new(engine: &'e CoefficientEngine, config: SolverConfig, states: Vec<ScalarField>) -> Result<Self> {
        let targets = states.iter().map(conserved_moments).collect();
        Self::resume(engine, config, 0.0, states, targets)
    }

    pub fn resume(
        engine: &'e CoefficientEngine,
        config: SolverConfig,
        t: f64,
        states: Vec<ScalarField>,
        targets: Vec<[f64; 5]>,
    ) -> Result<Self> {
        config.validate()?;
        if states.is_empty() || states.len() != targets.len() {
            return Err(Error::InvalidInput("need one projection target per state".into()));
        }
        for s in &states {
            s.grid().check_compatible(engine.grid())?;
            if !s.is_finite() {
                return Err(Error::InvalidInput("initial state has non-finite values".into()));
            }
            if s.min() < 0.0 {
                return Err(Error::InvalidInput("initial state has negative values".into()));
            }
        }
        Ok(Stepper {
            engine,
            config,
            t,
            densities: states
                .into_iter()
                .zip(targets)
                .map(|(g, target)| Density { g, target })
                .collect(),
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn state(&self, k: usize) -> &ScalarField {
        &self.densities[k].g
    }

    pub fn target(&self, k: usize) -> [f64; 5] {
        self.densities[k].target
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Steps until `t_end`, truncating the last step to land on it exactly.
    /// `on_step` receives one report per density per step.
    pub fn advance_to(&mut self, t_end: f64, mut on_step: impl FnMut(&[StepReport])) -> Result<()> {
        while self.t < t_end {
            let reports = self.step(t_end)?;
            on_step(&reports);
        }
        Ok(())
    }

    /// One Heun step of at most `t_end - t`; states are only replaced once
    /// every density has been advanced successfully.
    pub fn step(&mut self, t_end: f64) -> Result<Vec<StepReport>> {
        let ghost = self.config.ghost;
        let stage1: Vec<(ScalarField, f64)> = self
            .densities
            .iter()
            .map(|d| {
                let coeffs = self.engine.pair_unchecked(&d.g);
                let k1 = rhs_frozen(&coeffs, &d.g, ghost);
                let dt = cfl_dt(&coeffs.a_bar, self.config.cfl)?;
                Ok((k1, dt))
            })
            .collect::<Result<_>>()?;
        let dt_cfl = stage1.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let remaining = t_end - self.t;
        // avoid leaving a sliver shorter than a hundredth of a step
        let dt = if remaining <= dt_cfl * 1.01 { remaining } else { dt_cfl };
        let t_next = if dt == remaining { t_end } else { self.t + dt };

        let mut next = Vec::with_capacity(self.densities.len());
        let mut reports = Vec::with_capacity(self.densities.len());
        for (d, (k1, _)) in self.densities.iter().zip(&stage1) {
            let g1 = d.g.zip_map(k1, |g, k| g + dt * k);
            let coeffs1 = self.engine.pair_unchecked(&g1);
            let k2 = rhs_frozen(&coeffs1, &g1, ghost);
            let raw: Vec<f64> = (0..d.g.grid().len())
                .into_par_iter()
                .map(|i| d.g.at(i) + 0.5 * dt * (k1.at(i) + k2.at(i)))
                .collect();
            if raw.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical {
                    t: t_next,
                    message: "non-finite values after time step".into(),
                });
            }
            let clipped = raw.iter().filter(|&&x| x < 0.0).count();
            let g_clip = ScalarField::from_values(*d.g.grid(), raw.into_iter().map(|x| x.max(0.0)).collect())
                .expect("sized by grid");
            let drift = relative_drift(&conserved_moments(&g_clip), &d.target);
            let g_next = if self.config.projection {
                conservative_projection(&g_clip, &d.target).map_err(|e| match e {
                    Error::Numerical { message, .. } => Error::Numerical { t: t_next, message },
                    other => other,
                })?
            } else {
                g_clip.clone()
            };
            let projection_change = g_next.grid().cell_volume()
                * pairwise_sum(
                    &g_next
                        .values()
                        .iter()
                        .zip(g_clip.values())
                        .map(|(a, b)| (a - b).abs())
                        .collect::<Vec<_>>(),
                );
            let residual_drift = relative_drift(&conserved_moments(&g_next), &d.target);
            let entropy_before = entropy(&d.g);
            let entropy_after = entropy(&g_next);
            if self.config.entropy_check
                && entropy_after - entropy_before > ENTROPY_SLACK + 10.0 * projection_change
            {
                return Err(Error::Numerical {
                    t: t_next,
                    message: format!(
                        "entropy increased by {:e} in one step",
                        entropy_after - entropy_before
                    ),
                });
            }
            reports.push(StepReport {
                t: t_next,
                dt,
                drift,
                residual_drift,
                clipped,
                max_rate: k1.max_abs(),
                projection_change,
                entropy_before,
                entropy_after,
            });
            next.push(g_next);
        }
        for (d, g) in self.densities.iter_mut().zip(next) {
            d.g = g;
        }
        self.t = t_next;
        self.steps += 1;
        Ok(reports)
    }
}

/// Stored states of a run at its sample times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ScalarField>,
    /// Per-step reports, in order.
    pub reports: Vec<StepReport>,
    pub target: [f64; 5],
}

/// Evolves `g0` to each of the (ascending) `sample_times`, calling `observer`
/// with every sampled state; `t = 0` is always sampled.
pub fn evolve(
    engine: &CoefficientEngine,
    g0: &ScalarField,
    config: SolverConfig,
    sample_times: &[f64],
    observer: impl FnMut(f64, &ScalarField, Option<&StepReport>),
) -> Result<Trajectory> {
    let stepper = Stepper::new(engine, config, vec![g0.clone()])?;
    run_samples(stepper, sample_times, observer)
}

/// Continues a run from a stored state at time `t0` with its original target.
pub fn evolve_from(
    engine: &CoefficientEngine,
    g: &ScalarField,
    t0: f64,
    target: [f64; 5],
    config: SolverConfig,
    sample_times: &[f64],
    observer: impl FnMut(f64, &ScalarField, Option<&StepReport>),
) -> Result<Trajectory> {
    let stepper = Stepper::resume(engine, config, t0, vec![g.clone()], vec![target])?;
    run_samples(stepper, sample_times, observer)
}

fn run_samples(
    mut stepper: Stepper<'_>,
    sample_times: &[f64],
    mut observer: impl FnMut(f64, &ScalarField, Option<&StepReport>),
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: vec![stepper.time()],
        states: vec![stepper.state(0).clone()],
        reports: Vec::new(),
        target: stepper.target(0),
    };
    observer(stepper.time(), stepper.state(0), None);
    let t0 = stepper.time();
    for &ts in sample_times.iter().filter(|&&ts| ts > t0) {
        if ts > stepper.config().t_final {
            break;
        }
        let reports = &mut traj.reports;
        stepper.advance_to(ts, |r| reports.push(r[0]))?;
        traj.times.push(ts);
        traj.states.push(stepper.state(0).clone());
        observer(ts, stepper.state(0), traj.reports.last());
    }
    Ok(traj)
}

/// `n + 1` uniform sample times on `[0, t_final]`.
pub fn uniform_samples(t_final: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| t_final * k as f64 / n as f64).collect()
}

/// Heun integration of the linear equation with frozen coefficients, without
/// clipping or projection. Calls `observer(t, u)` after every step.
pub fn evolve_linear(
    coeffs: &CoefficientPair,
    u0: &ScalarField,
    t_final: f64,
    cfl: f64,
    observer: impl FnMut(f64, &ScalarField),
) -> Result<ScalarField> {
    evolve_linear_with(coeffs, u0, t_final, cfl, GhostPolicy::Polynomial, observer)
}

/// `evolve_linear` with a chosen Hessian policy. Under `Auto` a positive
/// solution uses the log-form Hessian, which resolves Gaussian tails that
/// the plain stencil drives negative; the step map is then only positively
/// homogeneous, not additive.
pub fn evolve_linear_with(
    coeffs: &CoefficientPair,
    u0: &ScalarField,
    t_final: f64,
    cfl: f64,
    ghost: GhostPolicy,
    mut observer: impl FnMut(f64, &ScalarField),
) -> Result<ScalarField> {
    let dt_cfl = cfl_dt(&coeffs.a_bar, cfl)?;
    let steps = (t_final / dt_cfl).ceil().max(0.0) as usize;
    let mut u = u0.clone();
    observer(0.0, &u);
    if steps == 0 {
        return Ok(u);
    }
    let dt = t_final / steps as f64;
    for s in 0..steps {
        let k1 = rhs_frozen(coeffs, &u, ghost);
        let u1 = u.zip_map(&k1, |a, k| a + dt * k);
        let k2 = rhs_frozen(coeffs, &u1, ghost);
        let next: Vec<f64> = (0..u.grid().len())
            .into_par_iter()
            .map(|i| u.at(i) + 0.5 * dt * (k1.at(i) + k2.at(i)))
            .collect();
        let t = dt * (s + 1) as f64;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical {
                t,
                message: "non-finite values in linear evolution".into(),
            });
        }
        u = ScalarField::from_values(*u.grid(), next).expect("sized by grid");
        observer(t, &u);
    }
    Ok(u)
}

/// Ellipticity of the coefficients of `g`, convenience for reports.
pub fn coefficient_ellipticity(engine: &CoefficientEngine, g: &ScalarField) -> crate::coefficients::EllipticityReport {
    ellipticity(&engine.pair_unchecked(g).a_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, GridSpec};
    use std::f64::consts::PI;

    fn maxwellian(grid: GridSpec, mass: f64) -> ScalarField {
        let c = mass * (2.0 * PI).powf(-1.5);
        ScalarField::from_fn(grid, |v| c * (-0.5 * norm_sq(v)).exp())
    }

    #[test]
    fn projection_is_identity_on_target() {
        let grid = GridSpec::new(6.0, 12, -3.0).unwrap();
        let m = maxwellian(grid, 1.0);
        let target = conserved_moments(&m);
        let p = conservative_projection(&m, &target).unwrap();
        for (a, b) in p.values().iter().zip(m.values()) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
    }

    #[test]
    fn projection_restores_mass() {
        let grid = GridSpec::new(6.0, 16, -3.0).unwrap();
        let m = maxwellian(grid, 1.0);
        let target = conserved_moments(&m);
        let heavy = m.scaled(1.01);
        let p = conservative_projection(&heavy, &target).unwrap();
        assert!((integrate(&p) - target[0]).abs() <= 1e-13);
        for (a, b) in p.values().iter().zip(heavy.values()) {
            assert!((a / b - 1.0).abs() <= 0.011);
        }
    }

    #[test]
    fn projection_rejects_degenerate_density() {
        let grid = GridSpec::new(6.0, 8, -3.0).unwrap();
        let mut f = ScalarField::zeros(grid);
        f.values_mut()[10] = 1.0;
        let target = [1.0, 0.0, 0.0, 0.0, 3.0];
        assert!(conservative_projection(&f, &target).is_err());
    }

    #[test]
    fn cfl_scaling() {
        let grid = GridSpec::new(6.0, 12, -3.0).unwrap();
        let engine = CoefficientEngine::new(grid);
        let a = engine.pair_unchecked(&maxwellian(grid, 1.0)).a_bar;
        let dt = cfl_dt(&a, 0.4).unwrap();
        let dt2 = cfl_dt(&a.scaled(2.0), 0.4).unwrap();
        assert!((dt / dt2 - 2.0).abs() < 1e-12);
        let fine = GridSpec::new(6.0, 24, -3.0).unwrap();
        let a_fine = SymMatrixField::new(fine, vec![a.at(0); fine.len()]).unwrap();
        let a_coarse = SymMatrixField::new(grid, vec![a.at(0); grid.len()]).unwrap();
        let r = cfl_dt(&a_coarse, 0.4).unwrap() / cfl_dt(&a_fine, 0.4).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert!(cfl_dt(&a.scaled(0.0), 0.4).is_err());
    }

    #[test]
    fn frozen_rhs_is_linear() {
        let grid = GridSpec::new(6.0, 12, -2.5).unwrap();
        let engine = CoefficientEngine::new(grid);
        let g = maxwellian(grid, 1.0);
        let coeffs = engine.pair_unchecked(&g);
        let u1 = ScalarField::from_fn(grid, |v| (v[0] * 0.3).sin() * (-0.2 * norm_sq(v)).exp());
        let u2 = ScalarField::from_fn(grid, |v| v[1] * v[2] * (-0.3 * norm_sq(v)).exp());
        let p = GhostPolicy::Polynomial;
        let sum = rhs_frozen(&coeffs, &u1.add(&u2), p);
        let parts = rhs_frozen(&coeffs, &u1, p).add(&rhs_frozen(&coeffs, &u2, p));
        let scale = parts.max_abs();
        for (a, b) in sum.values().iter().zip(parts.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn coulomb_rhs_contains_local_reaction() {
        let grid = GridSpec::new(6.0, 12, -3.0).unwrap();
        let engine = CoefficientEngine::new(grid);
        let g = maxwellian(grid, 1.0);
        let coeffs = engine.pair_unchecked(&g);
        let diffusion = coeffs.a_bar.contract(&density_hessian(&g, GhostPolicy::Auto));
        let full = rhs(&engine, &g);
        for i in (0..grid.len()).step_by(97) {
            let reaction = 8.0 * PI * g.at(i) * g.at(i);
            assert!((full.at(i) - diffusion.at(i) - reaction).abs() <= 1e-14 * full.max_abs());
        }
    }

    #[test]
    fn zero_horizon_keeps_initial_state() {
        let grid = GridSpec::new(6.0, 8, -3.0).unwrap();
        let engine = CoefficientEngine::new(grid);
        let g = maxwellian(grid, 1.0);
        let config = SolverConfig { t_final: 0.0, ..Default::default() };
        let traj = evolve(&engine, &g, config, &[0.0], |_, _, _| {}).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.states[0], g);
    }

    #[test]
    fn resumed_run_is_bit_identical() {
        let grid = GridSpec::new(6.0, 12, -3.0).unwrap();
        let engine = CoefficientEngine::new(grid);
        let g = maxwellian(grid, 1.0).map_with_node(|v, x| x * (1.0 + 0.1 * (PI * v[0] / 6.0).cos()));
        let config = SolverConfig { t_final: 0.1, ..Default::default() };
        let times = [0.0, 0.05, 0.1];
        let full = evolve(&engine, &g, config, &times, |_, _, _| {}).unwrap();
        let resumed = evolve_from(&engine, &full.states[1], 0.05, full.target, config, &times, |_, _, _| {})
            .unwrap();
        assert_eq!(resumed.states.last().unwrap(), full.states.last().unwrap());
    }

    #[test]
    fn linear_flow_of_zero_stays_zero() {
        let grid = GridSpec::new(6.0, 8, -3.0).unwrap();
        let engine = CoefficientEngine::new(grid);
        let mut coeffs = engine.pair_unchecked(&maxwellian(grid, 1.0));
        coeffs.c_bar = ScalarField::zeros(grid);
        let u = evolve_linear(&coeffs, &ScalarField::zeros(grid), 0.1, 0.4, |_, _| {}).unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
    }
}
