//! Scripted experiments: weak-strong stability of the relative entropy, the
//! relative entropy identity, Maxwellian and moment propagation, the
//! comparison principle for the linearised equation, and the interpolation
//! inequalities.
//!
//! Everything here is deterministic given the configuration; the only
//! randomness (phases of the trigonometric interpolation corpus) is drawn
//! from the configured seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{ellipticity, CoefficientEngine, EllipticityReport};
use crate::error::{Error, Result};
use crate::functionals::{
    good_bad_report, holder_seminorm, log_derivative_envelopes, maxwellian_envelope, relative_entropy,
    Exponents, MaxwellEnvelope, Region,
};
use crate::grid::{conserved_moments, integrate, moment, GridSpec, ScalarField};
use crate::linalg::{norm, norm_sq, Sym3, Vec3};
use crate::solver::{conservative_projection, evolve_linear_with, uniform_samples, SolverConfig, Stepper};
use crate::stencil::GhostPolicy;

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points_per_axis: usize,
    pub gamma: f64,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.half_width, self.points_per_axis, self.gamma)
    }
}

/// Initial density on the grid; every variant is normalised on the grid so
/// that its discrete mass is exactly `mass`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `mass * c * exp(-mu |v - mean|^2)`. With `energy` set, the rate is
    /// replaced by the one giving that second moment, and the discrete state
    /// is projected onto it exactly.
    Maxwellian {
        mu: f64,
        #[serde(default)]
        mean: Vec3,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        energy: Option<f64>,
    },
    /// The Maxwellian times `1 + amplitude cos(mode pi v_1 / L)`, projected
    /// back onto the mass, momentum and energy of the unperturbed one.
    PerturbedMaxwellian {
        mu: f64,
        #[serde(default)]
        mean: Vec3,
        #[serde(default = "one")]
        mass: f64,
        amplitude: f64,
        #[serde(default = "one_u32")]
        mode: u32,
    },
    /// Two Maxwellians of rate `mu` at `+-separation / 2` along `v_1`.
    Bimodal {
        mu: f64,
        separation: f64,
        #[serde(default = "one")]
        mass: f64,
    },
}

fn gaussian(grid: GridSpec, mu: f64, mean: Vec3) -> ScalarField {
    ScalarField::from_fn(grid, |v| {
        (-mu * norm_sq([v[0] - mean[0], v[1] - mean[1], v[2] - mean[2]])).exp()
    })
}

fn normalised(f: ScalarField, mass: f64) -> Result<ScalarField> {
    let m = integrate(&f);
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Config("initial density vanishes on the grid".into()));
    }
    Ok(f.scaled(mass / m))
}

impl InitialData {
    /// Gaussian decay rate of the data, used as the default sandwich rate.
    pub fn rate(&self) -> f64 {
        match *self {
            InitialData::Maxwellian { mu, mean, mass, energy } => match energy {
                Some(e) => 1.5 / (e / mass - norm_sq(mean)),
                None => mu,
            },
            InitialData::PerturbedMaxwellian { mu, .. } | InitialData::Bimodal { mu, .. } => mu,
        }
    }

    pub fn validate(&self, problems: &mut Vec<String>, label: &str) {
        let (mu, mass) = match *self {
            InitialData::Maxwellian { mu, mass, .. }
            | InitialData::PerturbedMaxwellian { mu, mass, .. }
            | InitialData::Bimodal { mu, mass, .. } => (mu, mass),
        };
        if !(mu > 0.0 && mu.is_finite()) {
            problems.push(format!("{label}: mu must be positive, got {mu}"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            problems.push(format!("{label}: mass must be positive, got {mass}"));
        }
        match *self {
            InitialData::Maxwellian { mean, mass, energy: Some(e), .. } => {
                if !(e / mass > norm_sq(mean)) {
                    problems.push(format!("{label}: energy {e} leaves no thermal part"));
                }
            }
            InitialData::PerturbedMaxwellian { amplitude, .. } => {
                if !(amplitude.abs() < 1.0) {
                    problems.push(format!("{label}: amplitude must lie in (-1, 1), got {amplitude}"));
                }
            }
            InitialData::Bimodal { separation, .. } => {
                if !(separation >= 0.0 && separation.is_finite()) {
                    problems.push(format!("{label}: separation must be non-negative, got {separation}"));
                }
            }
            _ => {}
        }
    }

    pub fn build(&self, grid: GridSpec) -> Result<ScalarField> {
        match *self {
            InitialData::Maxwellian { mu, mean, mass, energy } => {
                let rate = self.rate();
                let g = normalised(gaussian(grid, rate, mean), mass)?;
                match energy {
                    Some(e) => conservative_projection(
                        &g,
                        &[mass, mass * mean[0], mass * mean[1], mass * mean[2], e],
                    ),
                    None => {
                        let _ = mu;
                        Ok(g)
                    }
                }
            }
            InitialData::PerturbedMaxwellian { mu, mean, mass, amplitude, mode } => {
                let base = normalised(gaussian(grid, mu, mean), mass)?;
                let k = mode as f64 * PI / grid.half_width();
                let bumped = base.map_with_node(|v, x| x * (1.0 + amplitude * (k * v[0]).cos()));
                conservative_projection(&bumped, &conserved_moments(&base))
            }
            InitialData::Bimodal { mu, separation, mass } => {
                let d = 0.5 * separation;
                let a = gaussian(grid, mu, [d, 0.0, 0.0]);
                let b = gaussian(grid, mu, [-d, 0.0, 0.0]);
                normalised(a.add(&b), mass)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub g0: InitialData,
    /// Defaults to `g0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<InitialData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "T", default = "default_t")]
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_true")]
    pub projection: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_t() -> f64 {
    0.5
}

fn default_cfl() -> f64 {
    0.4
}

fn default_true() -> bool {
    true
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            t_final: default_t(),
            cfl: default_cfl(),
            projection: true,
            seed: 0,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            t_final: self.t_final,
            cfl: self.cfl,
            projection: self.projection,
            ..SolverConfig::default()
        }
    }
}

/// `rho` as a number or the keyword `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rho {
    Auto,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RhoRepr {
    Number(f64),
    Keyword(String),
}

impl Serialize for Rho {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Rho::Auto => RhoRepr::Keyword("auto".into()).serialize(s),
            Rho::Value(x) => RhoRepr::Number(x).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Rho {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RhoRepr::deserialize(d)? {
            RhoRepr::Number(x) => Ok(Rho::Value(x)),
            RhoRepr::Keyword(k) if k == "auto" => Ok(Rho::Auto),
            RhoRepr::Keyword(k) => Err(serde::de::Error::custom(format!(
                "rho must be a number or \"auto\", got \"{k}\""
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_rho")]
    pub rho: Rho,
}

fn default_zeta() -> f64 {
    2.0
}

fn default_rho() -> Rho {
    Rho::Auto
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            kappa: 1.0,
            nu: 1.0,
            zeta: default_zeta(),
            rho: Rho::Auto,
        }
    }
}

impl ExponentConfig {
    pub fn exponents(&self) -> Exponents {
        Exponents {
            kappa: self.kappa,
            nu: self.nu,
            zeta: self.zeta,
        }
    }

    pub fn rho(&self, gamma: f64) -> f64 {
        match self.rho {
            Rho::Auto => self.exponents().auto_rho(gamma),
            Rho::Value(x) => x,
        }
    }
}

/// Optional time-series columns; the rest are always written.
pub const OPTIONAL_COLUMNS: [&str; 13] = [
    "dissipation",
    "rel_entropy",
    "good_term",
    "bad_term",
    "K1",
    "K2",
    "K3",
    "lambda_hat",
    "Lambda_hat",
    "c0_hat",
    "env_klo",
    "env_Khi",
    "entropy",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Number of uniform sample intervals on `[0, T]`.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Times at which snapshots are written; empty means the final time.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Enabled optional time-series columns; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<String>>,
}

fn default_cadence() -> usize {
    20
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            cadence: default_cadence(),
            snapshot_times: Vec::new(),
            diagnostics: None,
        }
    }
}

impl OutputConfig {
    pub fn enabled(&self, column: &str) -> bool {
        match &self.diagnostics {
            None => true,
            Some(list) => list.iter().any(|c| c == column),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Multiplicative corridor for the sandwich constants.
    #[serde(default = "default_corridor")]
    pub corridor: [f64; 2],
    /// Gaussian rate of the sandwich; the rate of `g0` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_mu: Option<f64>,
    /// Allowed growth factor of the weighted moments.
    #[serde(default = "default_moment_growth")]
    pub moment_growth: f64,
    /// Sign tolerance of the comparison-principle tests.
    #[serde(default = "default_sign")]
    pub sign: f64,
    /// Ratio between the comparison rates and the rate of `g0`.
    #[serde(default = "default_rate_factor")]
    pub rate_factor: f64,
    /// Allowed excess of the entropy slope over `-G + B`.
    #[serde(default = "default_identity")]
    pub identity: f64,
    /// Also run the identity check with `h` and `dt` halved.
    #[serde(default)]
    pub refine_identity: bool,
    /// Gronwall constant from a calibration family; `2 C*` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gronwall_constant: Option<f64>,
    /// Largest admissible interpolation constant.
    #[serde(default = "default_interpolation")]
    pub interpolation: f64,
}

fn default_corridor() -> [f64; 2] {
    [0.25, 4.0]
}

fn default_moment_growth() -> f64 {
    1.5
}

fn default_sign() -> f64 {
    1e-10
}

fn default_rate_factor() -> f64 {
    1.5
}

fn default_identity() -> f64 {
    1e-6
}

fn default_interpolation() -> f64 {
    10.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            corridor: default_corridor(),
            envelope_mu: None,
            moment_growth: default_moment_growth(),
            sign: default_sign(),
            rate_factor: default_rate_factor(),
            identity: default_identity(),
            refine_identity: false,
            gronwall_constant: None,
            interpolation: default_interpolation(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    WeakStrong,
    EntropyIdentity,
    MaxwellianPropagation,
    MomentPropagation,
    MaximumPrinciple,
    Interpolation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::WeakStrong => "weak_strong",
            ExperimentKind::EntropyIdentity => "entropy_identity",
            ExperimentKind::MaxwellianPropagation => "maxwellian_propagation",
            ExperimentKind::MomentPropagation => "moment_propagation",
            ExperimentKind::MaximumPrinciple => "maximum_principle",
            ExperimentKind::Interpolation => "interpolation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub exponents: ExponentConfig,
    #[serde(default)]
    pub experiments: Vec<ExperimentKind>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Checks every parameter and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.grid.spec() {
            problems.push(e.to_string());
        }
        self.initial.g0.validate(&mut problems, "initial.g0");
        if let Some(f0) = &self.initial.f0 {
            f0.validate(&mut problems, "initial.f0");
        }
        if let Err(e) = self.solver.solver_config().validate() {
            problems.push(e.to_string());
        }
        let e = &self.exponents;
        for (name, x) in [("kappa", e.kappa), ("nu", e.nu), ("zeta", e.zeta)] {
            if !(x >= 0.0 && x.is_finite()) {
                problems.push(format!("exponents.{name} must be non-negative, got {x}"));
            }
        }
        if let Rho::Value(r) = e.rho {
            if !r.is_finite() {
                problems.push(format!("exponents.rho must be finite, got {r}"));
            }
        }
        if self.output.cadence == 0 {
            problems.push("output.cadence must be at least 1".into());
        }
        for &t in &self.output.snapshot_times {
            if !(t >= 0.0 && t <= self.solver.t_final) {
                problems.push(format!("snapshot time {t} outside [0, T]"));
            }
        }
        if let Some(list) = &self.output.diagnostics {
            for c in list {
                if !OPTIONAL_COLUMNS.contains(&c.as_str()) {
                    problems.push(format!("unknown diagnostic column \"{c}\""));
                }
            }
        }
        let t = &self.tolerances;
        if !(t.corridor[0] > 0.0 && t.corridor[0] <= 1.0 && t.corridor[1] >= 1.0) {
            problems.push(format!("corridor must bracket 1, got {:?}", t.corridor));
        }
        if !(t.rate_factor > 1.0) {
            problems.push(format!("rate_factor must exceed 1, got {}", t.rate_factor));
        }
        if let Some(mu) = t.envelope_mu {
            if !(mu > 0.0) {
                problems.push(format!("envelope_mu must be positive, got {mu}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.grid.spec()
    }

    pub fn initial_states(&self, grid: GridSpec) -> Result<(ScalarField, ScalarField)> {
        let g0 = self.initial.g0.build(grid)?;
        let f0 = match &self.initial.f0 {
            Some(spec) => spec.build(grid)?,
            None => g0.clone(),
        };
        Ok((g0, f0))
    }

    pub fn rho(&self) -> f64 {
        self.exponents.rho(self.grid.gamma)
    }

    /// Weight exponent `rho - gamma` of the moments `M_f`, `M_g`.
    pub fn moment_order(&self) -> f64 {
        self.rho() - self.grid.gamma
    }

    pub fn sample_times(&self) -> Vec<f64> {
        uniform_samples(self.solver.t_final, self.output.cadence)
    }

    pub fn envelope_mu(&self) -> f64 {
        self.tolerances.envelope_mu.unwrap_or_else(|| self.initial.g0.rate())
    }

    /// Same experiment with `h` and the sample spacing halved; the solver
    /// step follows from the CFL bound.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        c.grid.points_per_axis *= 2;
        c.output.cadence *= 2;
        c
    }
}

/// Evolves `g` and `f` in lockstep and calls `at_sample(t, g, f, clips)` at
/// every sample time, `clips` counting cells clipped since the last sample.
pub fn run_pair(
    engine: &CoefficientEngine,
    config: SolverConfig,
    g0: &ScalarField,
    f0: &ScalarField,
    samples: &[f64],
    mut at_sample: impl FnMut(f64, &ScalarField, &ScalarField, usize) -> Result<()>,
) -> Result<()> {
    let mut stepper = Stepper::new(engine, config, vec![g0.clone(), f0.clone()])?;
    at_sample(0.0, g0, f0, 0)?;
    for &t in samples.iter().filter(|&&t| t > 0.0 && t <= config.t_final) {
        let mut clips = 0;
        stepper.advance_to(t, |r| clips += r.iter().map(|x| x.clipped).sum::<usize>())?;
        at_sample(t, stepper.state(0), stepper.state(1), clips)?;
    }
    Ok(())
}

fn trapezoid_cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for k in 0..values.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Absolute level below which a relative entropy counts as zero.
pub const ZERO_ENTROPY: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallSample {
    pub t: f64,
    pub rel_entropy: f64,
    pub k1: f64,
    pub k3: f64,
    /// Trapezoid integral of `K1^2 + K3^2` from 0 to `t`.
    pub integral: f64,
    pub moment_f: f64,
    pub moment_g: f64,
    pub c0: f64,
    pub envelope: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallReport {
    pub moment_order: f64,
    pub exponents: Exponents,
    pub initial_rel_entropy: f64,
    /// Smallest constant for which the envelope holds at every sample.
    pub c_star: f64,
    /// Constant of the checked envelope.
    pub envelope_constant: f64,
    pub max_moment_f: f64,
    pub max_moment_g: f64,
    pub min_c0: f64,
    /// `(1 + M_f^2 + M_g^2)(1 + 1/c0)` with the extreme measured values.
    pub constant_formula: f64,
    pub non_increasing_after_first: bool,
    pub samples: Vec<GronwallSample>,
    pub pass: bool,
}

pub fn run_weak_strong(config: &ExperimentConfig) -> Result<GronwallReport> {
    let grid = config.grid_spec()?;
    let engine = CoefficientEngine::new(grid);
    let (g0, f0) = config.initial_states(grid)?;
    let h0 = relative_entropy(&f0, &g0);
    if !h0.is_finite() {
        return Err(Error::Config("initial relative entropy is infinite".into()));
    }
    let exps = config.exponents.exponents();
    let order = config.moment_order();
    let mut raw = Vec::new();
    run_pair(&engine, config.solver.solver_config(), &g0, &f0, &config.sample_times(), |t, g, f, _| {
        let env = log_derivative_envelopes(g, exps, None)?;
        raw.push((
            t,
            relative_entropy(f, g),
            env.k1,
            env.k3,
            moment(f, order),
            moment(g, order),
            crate::coefficients::coercivity_c0_with(&engine, f).c0,
        ));
        Ok(())
    })?;
    let times: Vec<f64> = raw.iter().map(|r| r.0).collect();
    let k_sq: Vec<f64> = raw.iter().map(|r| r.2 * r.2 + r.3 * r.3).collect();
    let integral = trapezoid_cumulative(&times, &k_sq);

    let mut c_star: f64 = 0.0;
    for (r, &i) in raw.iter().zip(&integral).skip(1) {
        let h = r.1;
        let needed = if h0 <= ZERO_ENTROPY {
            if h <= ZERO_ENTROPY {
                0.0
            } else {
                f64::INFINITY
            }
        } else if h <= h0 {
            0.0
        } else if i > 0.0 {
            (h / h0).ln() / i
        } else {
            f64::INFINITY
        };
        c_star = c_star.max(needed);
    }
    let envelope_constant = config.tolerances.gronwall_constant.unwrap_or(2.0 * c_star);
    let samples: Vec<GronwallSample> = raw
        .iter()
        .zip(&integral)
        .map(|(r, &i)| {
            let envelope = h0 * (envelope_constant * i).exp();
            GronwallSample {
                t: r.0,
                rel_entropy: r.1,
                k1: r.2,
                k3: r.3,
                integral: i,
                moment_f: r.4,
                moment_g: r.5,
                c0: r.6,
                envelope,
                within: r.1 <= envelope * (1.0 + 1e-12) + ZERO_ENTROPY,
            }
        })
        .collect();
    let non_increasing_after_first = samples
        .windows(2)
        .skip(1)
        .all(|w| w[1].rel_entropy <= w[0].rel_entropy * (1.0 + 1e-12) + 1e-15);
    let max_moment_f = samples.iter().map(|s| s.moment_f).fold(0.0, f64::max);
    let max_moment_g = samples.iter().map(|s| s.moment_g).fold(0.0, f64::max);
    let min_c0 = samples.iter().map(|s| s.c0).fold(f64::INFINITY, f64::min);
    let pass = c_star.is_finite() && samples.iter().all(|s| s.within);
    Ok(GronwallReport {
        moment_order: order,
        exponents: exps,
        initial_rel_entropy: h0,
        c_star,
        envelope_constant,
        max_moment_f,
        max_moment_g,
        min_c0,
        constant_formula: (1.0 + max_moment_f.powi(2) + max_moment_g.powi(2)) * (1.0 + 1.0 / min_c0),
        non_increasing_after_first,
        samples,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitySample {
    pub t: f64,
    pub rel_entropy: f64,
    pub good: f64,
    pub bad: f64,
    pub fisher_rel: f64,
    pub c0: f64,
    /// Smallest `C` with `|B| <= c0 F + C bad_factor H` at this sample.
    pub implied_bad_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityWindow {
    pub t_mid: f64,
    /// Difference quotient of `H(f|g)` over the window.
    pub slope: f64,
    /// `-G + B` at the window midpoint (mean of the end values).
    pub production: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub points_per_axis: usize,
    pub tolerance: f64,
    pub samples: Vec<IdentitySample>,
    pub windows: Vec<IdentityWindow>,
    pub max_residual: f64,
    /// `slope <= -G + B + tolerance` in every window.
    pub direction_ok: bool,
    pub bad_bound_finite: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<Box<IdentityReport>>,
    /// `max_residual / refined.max_residual`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_ratio: Option<f64>,
    pub pass: bool,
}

/// Residual of the relative entropy identity from consecutive samples;
/// `window` sample intervals per difference quotient.
pub fn check_entropy_identity(samples: &[IdentitySample], window: usize, tolerance: f64) -> IdentityReport {
    let window = window.max(1);
    let windows: Vec<IdentityWindow> = (0..samples.len().saturating_sub(window))
        .map(|k| {
            let (a, b) = (&samples[k], &samples[k + window]);
            let slope = (b.rel_entropy - a.rel_entropy) / (b.t - a.t);
            let production = 0.5 * ((-a.good + a.bad) + (-b.good + b.bad));
            IdentityWindow {
                t_mid: 0.5 * (a.t + b.t),
                slope,
                production,
                residual: slope - production,
            }
        })
        .collect();
    let max_residual = windows.iter().map(|w| w.residual.abs()).fold(0.0, f64::max);
    let direction_ok = windows.iter().all(|w| w.slope <= w.production + tolerance);
    let bad_bound_finite = samples.iter().all(|s| s.implied_bad_constant.is_finite());
    IdentityReport {
        points_per_axis: 0,
        tolerance,
        samples: samples.to_vec(),
        windows,
        max_residual,
        direction_ok,
        bad_bound_finite,
        refined: None,
        refinement_ratio: None,
        pass: direction_ok && bad_bound_finite,
    }
}

fn identity_run(config: &ExperimentConfig) -> Result<IdentityReport> {
    let grid = config.grid_spec()?;
    let engine = CoefficientEngine::new(grid);
    let (g0, f0) = config.initial_states(grid)?;
    let exps = config.exponents.exponents();
    let order = config.moment_order();
    let mut samples = Vec::new();
    run_pair(&engine, config.solver.solver_config(), &g0, &f0, &config.sample_times(), |t, g, f, _| {
        let env = log_derivative_envelopes(g, exps, None)?;
        let r = good_bad_report(&engine, f, g, &env, order);
        samples.push(IdentitySample {
            t,
            rel_entropy: r.rel_entropy,
            good: r.good,
            bad: r.bad,
            fisher_rel: r.fisher_rel,
            c0: r.c0,
            implied_bad_constant: r.implied_bad_constant,
        });
        Ok(())
    })?;
    let mut report = check_entropy_identity(&samples, 1, config.tolerances.identity);
    report.points_per_axis = grid.points_per_axis();
    Ok(report)
}

/// Identity check on the configured grid, plus the refined companion run when
/// `tolerances.refine_identity` is set (passing then also needs the residual
/// to shrink by at least 1.4x).
pub fn run_entropy_identity(config: &ExperimentConfig) -> Result<IdentityReport> {
    let mut report = identity_run(config)?;
    if config.tolerances.refine_identity {
        let fine = identity_run(&config.refined())?;
        let ratio = report.max_residual / fine.max_residual;
        report.pass = report.pass && fine.pass && ratio >= 1.4;
        report.refinement_ratio = Some(ratio);
        report.refined = Some(Box::new(fine));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeSample {
    pub t: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagationReport {
    pub mu: f64,
    pub corridor: [f64; 2],
    pub initial: MaxwellEnvelope,
    pub samples: Vec<EnvelopeSample>,
    pub min_ratio_lo: f64,
    pub max_ratio_hi: f64,
    pub pass: bool,
}

pub fn run_maxwellian_propagation(config: &ExperimentConfig) -> Result<PropagationReport> {
    let grid = config.grid_spec()?;
    let engine = CoefficientEngine::new(grid);
    let (g0, _) = config.initial_states(grid)?;
    let mu = config.envelope_mu();
    let initial = maxwellian_envelope(&g0, mu)?;
    let mut samples = Vec::new();
    let mut stepper = Stepper::new(&engine, config.solver.solver_config(), vec![g0.clone()])?;
    for &t in &config.sample_times() {
        if t > 0.0 {
            stepper.advance_to(t, |_| {})?;
        }
        let env = maxwellian_envelope(stepper.state(0), mu)?;
        samples.push(EnvelopeSample {
            t,
            k_lo: env.k_lo,
            k_hi: env.k_hi,
            ratio_lo: env.k_lo / initial.k_lo,
            ratio_hi: env.k_hi / initial.k_hi,
        });
    }
    let corridor = config.tolerances.corridor;
    let min_ratio_lo = samples.iter().map(|s| s.ratio_lo).fold(f64::INFINITY, f64::min);
    let max_ratio_hi = samples.iter().map(|s| s.ratio_hi).fold(0.0, f64::max);
    let pass = samples.iter().all(|s| {
        s.ratio_lo >= corridor[0] && s.ratio_lo <= corridor[1] && s.ratio_hi >= corridor[0] && s.ratio_hi <= corridor[1]
    });
    Ok(PropagationReport {
        mu,
        corridor,
        initial,
        samples,
        min_ratio_lo,
        max_ratio_hi,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub order: f64,
    pub times: Vec<f64>,
    pub moment_g: Vec<f64>,
    pub moment_f: Vec<f64>,
    /// `sup_t M(t) / M(0)`.
    pub growth_g: f64,
    pub growth_f: f64,
    pub limit: f64,
    pub pass: bool,
}

pub fn run_moment_propagation(config: &ExperimentConfig) -> Result<MomentReport> {
    let grid = config.grid_spec()?;
    let engine = CoefficientEngine::new(grid);
    let (g0, f0) = config.initial_states(grid)?;
    let order = config.moment_order();
    let (mut times, mut mg, mut mf) = (Vec::new(), Vec::new(), Vec::new());
    run_pair(&engine, config.solver.solver_config(), &g0, &f0, &config.sample_times(), |t, g, f, _| {
        times.push(t);
        mg.push(moment(g, order));
        mf.push(moment(f, order));
        Ok(())
    })?;
    let growth = |m: &[f64]| m.iter().fold(0.0_f64, |a, &x| a.max(x / m[0]));
    let (growth_g, growth_f) = (growth(&mg), growth(&mf));
    let limit = config.tolerances.moment_growth;
    Ok(MomentReport {
        order,
        times,
        moment_g: mg,
        moment_f: mf,
        growth_g,
        growth_f,
        limit,
        pass: growth_g <= limit && growth_f <= limit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub ellipticity: EllipticityReport,
    pub c_bar_max: f64,
    pub mu_sub: f64,
    pub mu_sup: f64,
    /// `k` with `k exp(-mu_sub |v|^2) <= g` at every node.
    pub k_sub: f64,
    /// `K` with `g <= K exp(-mu_sup |v|^2)` at every node.
    pub k_sup: f64,
    pub omega_sub: f64,
    pub omega_sup: f64,
    /// `max_t max_v (k psi_sub(t) - w(t))`, `w` the linear flow of `g`.
    pub max_sub: f64,
    /// `max_t max_v (w(t) - K psi_sup(t))`.
    pub max_sup: f64,
    /// `max_t max_v u(t)` for the flow of `u0 = k psi_sub(0) - g`, evolved
    /// as the difference of the flows of its two positive parts.
    pub max_linear: f64,
    /// `min_t max_v u(t)` for the control flow from `u0 = +psi_sub(0)`.
    pub control_min_max: f64,
    /// `max_linear` with the plain central Hessian on the signed `u0`.
    /// Reported only: that stencil is not monotone in the Gaussian tail.
    pub max_linear_plain: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Comparison tests for `d_t u = a_bar : hess u + c_bar u` with the
/// coefficients of `g0` frozen.
///
/// Positive solutions are evolved with the log-form Hessian; the signed
/// flow of `u0 = k psi - g` is the difference of the flows of `k psi` and
/// `g`, which is what the exact linear flow gives.
pub fn run_maximum_principle(config: &ExperimentConfig) -> Result<MaxPrincipleReport> {
    let grid = config.grid_spec()?;
    let engine = CoefficientEngine::new(grid);
    let (g, _) = config.initial_states(grid)?;
    let coeffs = engine.pair(&g)?;
    let ell = ellipticity(&coeffs.a_bar);
    let c_bar_max = coeffs.c_bar.max();
    let mu = config.envelope_mu();
    let factor = config.tolerances.rate_factor;
    let (mu_sub, mu_sup) = (mu * factor, mu / factor);
    let omega_sub = -6.0 * ell.big_lambda_hat * mu_sub;
    let omega_sup = 4.0 * mu_sup * mu_sup * ell.big_lambda_hat.max(ell.radial_max) + c_bar_max;
    let psi = |mu: f64, omega: f64, t: f64| ScalarField::from_fn(grid, move |v| (omega * t - mu * norm_sq(v)).exp());
    let ratio_extreme = |mu: f64, lower: bool| {
        let r = g.map_with_node(|v, x| x * (mu * norm_sq(v)).exp());
        if lower {
            r.min()
        } else {
            r.max()
        }
    };
    let k_sub = ratio_extreme(mu_sub, true);
    let k_sup = ratio_extreme(mu_sup, false);
    let t_final = config.solver.t_final;
    let cfl = config.solver.cfl;
    let flow = |u0: &ScalarField, ghost: GhostPolicy| -> Result<Vec<(f64, ScalarField)>> {
        let mut states = Vec::new();
        evolve_linear_with(&coeffs, u0, t_final, cfl, ghost, |t, u| states.push((t, u.clone())))?;
        Ok(states)
    };

    let w = flow(&g, GhostPolicy::Auto)?;
    let psi0 = psi(mu_sub, omega_sub, 0.0);
    let sub_flow = flow(&psi0.scaled(k_sub), GhostPolicy::Auto)?;
    let (mut max_sub, mut max_sup, mut max_linear) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for ((t, w), (_, s)) in w.iter().zip(&sub_flow) {
        max_sub = max_sub.max(psi(mu_sub, omega_sub, *t).scaled(k_sub).sub(w).max());
        max_sup = max_sup.max(w.sub(&psi(mu_sup, omega_sup, *t).scaled(k_sup)).max());
        max_linear = max_linear.max(s.sub(w).max());
    }
    let control_min_max = flow(&psi0, GhostPolicy::Auto)?
        .iter()
        .map(|(_, u)| u.max())
        .fold(f64::INFINITY, f64::min);
    let u0 = psi0.scaled(k_sub).sub(&g);
    let max_linear_plain = flow(&u0, GhostPolicy::Polynomial)?
        .iter()
        .map(|(_, u)| u.max())
        .fold(f64::NEG_INFINITY, f64::max);
    let tolerance = config.tolerances.sign;
    Ok(MaxPrincipleReport {
        ellipticity: ell,
        c_bar_max,
        mu_sub,
        mu_sup,
        k_sub,
        k_sup,
        omega_sub,
        omega_sup,
        max_sub,
        max_sup,
        max_linear,
        control_min_max,
        max_linear_plain,
        tolerance,
        pass: max_sub <= tolerance && max_sup <= tolerance && max_linear <= tolerance && control_min_max >= 0.0,
    })
}

/// Field with closed-form gradient and Hessian.
pub struct AnalyticField {
    pub name: String,
    pub eval: Box<dyn Fn(Vec3) -> (f64, Vec3, Sym3) + Sync + Send>,
}

fn gauss_field(width: f64) -> AnalyticField {
    let s2 = width * width;
    AnalyticField {
        name: format!("gaussian_{width}"),
        eval: Box::new(move |v| {
            let u = (-0.5 * norm_sq(v) / s2).exp();
            let grad = v.map(|x| -x / s2 * u);
            let hess = (Sym3::outer(v) * (1.0 / (s2 * s2)) - Sym3::scalar(1.0 / s2)) * u;
            (u, grad, hess)
        }),
    }
}

/// `p(v) exp(-|v|^2 / 2)` for a polynomial given with its gradient and
/// (constant or not) Hessian.
fn poly_gauss(name: &str, p: fn(Vec3) -> (f64, Vec3, Sym3)) -> AnalyticField {
    AnalyticField {
        name: name.into(),
        eval: Box::new(move |v| {
            let e = (-0.5 * norm_sq(v)).exp();
            let (p0, dp, hp) = p(v);
            let grad: Vec3 = std::array::from_fn(|i| e * (dp[i] - p0 * v[i]));
            let cross = Sym3::from_array([
                2.0 * dp[0] * v[0],
                dp[0] * v[1] + dp[1] * v[0],
                dp[0] * v[2] + dp[2] * v[0],
                2.0 * dp[1] * v[1],
                dp[1] * v[2] + dp[2] * v[1],
                2.0 * dp[2] * v[2],
            ]);
            let hess = (hp - cross - Sym3::scalar(p0) + Sym3::outer(v) * p0) * e;
            (e * p0, grad, hess)
        }),
    }
}

fn plane_wave(name: String, k: Vec3, phase: f64) -> AnalyticField {
    AnalyticField {
        name,
        eval: Box::new(move |v| {
            let arg = k[0] * v[0] + k[1] * v[1] + k[2] * v[2] + phase;
            (arg.cos(), k.map(|x| -x * arg.sin()), Sym3::outer(k) * (-arg.cos()))
        }),
    }
}

/// Gaussians, polynomials times Gaussians, trigonometric fields (two with
/// seeded random wave vectors and phases) and a constant.
pub fn interpolation_corpus(seed: u64) -> Vec<AnalyticField> {
    let mut corpus = vec![gauss_field(0.5), gauss_field(1.0), gauss_field(2.0)];
    corpus.push(poly_gauss("v1_gaussian", |v| (v[0], [1.0, 0.0, 0.0], Sym3::ZERO)));
    corpus.push(poly_gauss("quadratic_gaussian", |v| {
        (
            v[0] * v[0] - v[1] * v[2],
            [2.0 * v[0], -v[2], -v[1]],
            Sym3::from_array([2.0, 0.0, 0.0, 0.0, -1.0, 0.0]),
        )
    }));
    corpus.push(plane_wave("sin_v1".into(), [1.0, 0.0, 0.0], -0.5 * PI));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..2 {
        let k: Vec3 = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
        let phase = rng.random_range(0.0..2.0 * PI);
        corpus.push(plane_wave(format!("wave_{i}"), k, phase));
    }
    corpus.push(AnalyticField {
        name: "constant".into(),
        eval: Box::new(|_| (1.0, [0.0; 3], Sym3::ZERO)),
    });
    corpus
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldInterpolation {
    pub name: String,
    pub sup: f64,
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub holder_alpha: f64,
    pub holder_beta: f64,
    pub grad_holder_alpha: f64,
    /// Smallest constants for the four inequalities, in the order
    /// `|grad u| <= eps^a [grad u]_a + C/eps |u|`,
    /// `|grad u| <= eps |hess u| + C/eps |u|`,
    /// `[u]_a <= eps^(b-a) [u]_b + C eps^-a |u|`,
    /// `[u]_a <= eps^(1-a) |grad u| + C eps^-a |u|`.
    pub required: [f64; 4],
    /// `eps` attaining each required constant.
    pub argmax_eps: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub alpha: f64,
    pub beta: f64,
    pub half_side: f64,
    pub epsilons: Vec<f64>,
    pub fields: Vec<FieldInterpolation>,
    /// Smallest corpus-wide constant.
    pub c_hat: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Interpolation constants on the cube `[-R, R]^3` sampled on a
/// cell-centred grid with `n` points per axis.
pub fn run_interpolation_suite(
    corpus: &[AnalyticField],
    half_side: f64,
    n: usize,
    alpha: f64,
    beta: f64,
    limit: f64,
) -> Result<InterpolationReport> {
    if !(alpha > 0.0 && alpha < beta && beta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < alpha < beta < 1, got alpha {alpha}, beta {beta}"
        )));
    }
    let grid = GridSpec::new(half_side, n, -3.0)?;
    let stride = n.div_ceil(12).max(1);
    let epsilons: Vec<f64> = (0..16).map(|k| half_side * 10f64.powf(-3.0 + 3.0 * k as f64 / 16.0)).collect();
    let mut fields = Vec::new();
    for field in corpus {
        let samples: Vec<(f64, Vec3, Sym3)> = (0..grid.len()).map(|i| (field.eval)(grid.node(i))).collect();
        let u = ScalarField::from_values(grid, samples.iter().map(|s| s.0).collect())?;
        let sup = u.max_abs();
        let grad_sup = samples.iter().map(|s| norm(s.1)).fold(0.0, f64::max);
        let hess_sup = samples.iter().map(|s| s.2.operator_norm()).fold(0.0, f64::max);
        let holder_alpha = holder_seminorm(&u, alpha, Region::Whole, stride)?;
        let holder_beta = holder_seminorm(&u, beta, Region::Whole, stride)?;
        let mut grad_holder_alpha: f64 = 0.0;
        for c in 0..3 {
            let comp = ScalarField::from_values(grid, samples.iter().map(|s| s.1[c]).collect())?;
            grad_holder_alpha = grad_holder_alpha.max(holder_seminorm(&comp, alpha, Region::Whole, stride)?);
        }
        let mut required = [0.0; 4];
        let mut argmax_eps = [f64::NAN; 4];
        for &eps in &epsilons {
            let excess = [
                (grad_sup - eps.powf(alpha) * grad_holder_alpha) * eps,
                (grad_sup - eps * hess_sup) * eps,
                (holder_alpha - eps.powf(beta - alpha) * holder_beta) * eps.powf(alpha),
                (holder_alpha - eps.powf(1.0 - alpha) * grad_sup) * eps.powf(alpha),
            ];
            for k in 0..4 {
                let need = if excess[k] <= 0.0 {
                    0.0
                } else if sup > 0.0 {
                    excess[k] / sup
                } else {
                    f64::INFINITY
                };
                if need > required[k] {
                    required[k] = need;
                    argmax_eps[k] = eps;
                }
            }
        }
        fields.push(FieldInterpolation {
            name: field.name.clone(),
            sup,
            grad_sup,
            hess_sup,
            holder_alpha,
            holder_beta,
            grad_holder_alpha,
            required,
            argmax_eps,
        });
    }
    let c_hat = fields
        .iter()
        .flat_map(|f| f.required.iter().copied())
        .fold(0.0, f64::max);
    Ok(InterpolationReport {
        alpha,
        beta,
        half_side,
        epsilons,
        fields,
        c_hat,
        limit,
        pass: c_hat <= limit,
    })
}

/// The interpolation suite with the default corpus on `[-3, 3]^3`.
pub fn run_interpolation(config: &ExperimentConfig) -> Result<InterpolationReport> {
    let corpus = interpolation_corpus(config.solver.seed);
    run_interpolation_suite(&corpus, 3.0, 24, 0.5, 0.75, config.tolerances.interpolation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> ExperimentConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn defaults_and_auto_rho() {
        let c = config(
            r#"{"grid": {"L": 6, "N": 12, "gamma": -3},
                "initial": {"g0": {"kind": "maxwellian", "mu": 0.5}},
                "exponents": {"kappa": 1, "nu": 1, "zeta": 2, "rho": "auto"}}"#,
        );
        assert_eq!(c.output.cadence, 20);
        assert_eq!(c.solver.cfl, 0.4);
        assert_eq!(c.rho(), 4.0);
        assert_eq!(c.moment_order(), 7.0);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_rho() {
        let bad = r#"{"gird": {}, "grid": {"L": 6, "N": 12, "gamma": -3},
                      "initial": {"g0": {"kind": "maxwellian", "mu": 0.5}}}"#;
        let err = serde_json::from_str::<ExperimentConfig>(bad).unwrap_err().to_string();
        assert!(err.contains("gird"), "{err}");
        let bad = r#"{"grid": {"L": 6, "N": 12, "gamma": -3},
                      "initial": {"g0": {"kind": "maxwellian", "mu": 0.5, "sigma": 1}}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
        let bad = r#"{"grid": {"L": 6, "N": 12, "gamma": -3},
                      "initial": {"g0": {"kind": "maxwellian", "mu": 0.5}},
                      "exponents": {"rho": "automatic"}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn validation_lists_all_problems() {
        let c = config(
            r#"{"grid": {"L": 6, "N": 12, "gamma": -3},
                "initial": {"g0": {"kind": "maxwellian", "mu": -1, "mass": 0}},
                "solver": {"cfl": 2}}"#,
        );
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("mu") && msg.contains("mass") && msg.contains("cfl"), "{msg}");
    }

    #[test]
    fn initial_data_hits_targets() {
        let grid = GridSpec::new(6.0, 16, -3.0).unwrap();
        let m = InitialData::Maxwellian { mu: 0.5, mean: [0.3, 0.0, 0.0], mass: 1.0, energy: Some(3.0) }
            .build(grid)
            .unwrap();
        let c = conserved_moments(&m);
        assert!((c[0] - 1.0).abs() < 1e-13 && (c[1] - 0.3).abs() < 1e-13 && (c[4] - 3.0).abs() < 1e-12);
        let base = InitialData::Maxwellian { mu: 0.5, mean: [0.0; 3], mass: 1.0, energy: None }
            .build(grid)
            .unwrap();
        let p = InitialData::PerturbedMaxwellian { mu: 0.5, mean: [0.0; 3], mass: 1.0, amplitude: 0.1, mode: 1 }
            .build(grid)
            .unwrap();
        let (a, b) = (conserved_moments(&base), conserved_moments(&p));
        for k in 0..5 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
        let scaled = InitialData::Maxwellian { mu: 0.5, mean: [0.0; 3], mass: 1.5, energy: None }
            .build(grid)
            .unwrap();
        assert!((integrate(&scaled) - 1.5).abs() < 1e-13);
    }

    #[test]
    fn sine_needs_a_quarter() {
        let corpus = vec![plane_wave("sin".into(), [1.0, 0.0, 0.0], -0.5 * PI)];
        // cube wide enough to contain the extrema of sin and cos
        let r = run_interpolation_suite(&corpus, 3.2, 32, 0.5, 0.75, 10.0).unwrap();
        let f = &r.fields[0];
        assert!((f.grad_sup - 1.0).abs() < 1e-2 && (f.hess_sup - 1.0).abs() < 1e-2);
        // max over the sampled eps of (1 - eps) eps is just below 1/4
        assert!(f.required[1] > 0.23 && f.required[1] <= 0.25, "{}", f.required[1]);
    }

    #[test]
    fn constant_field_needs_nothing() {
        let corpus = vec![AnalyticField { name: "c".into(), eval: Box::new(|_| (2.0, [0.0; 3], Sym3::ZERO)) }];
        let r = run_interpolation_suite(&corpus, 3.0, 8, 0.5, 0.75, 10.0).unwrap();
        assert_eq!(r.c_hat, 0.0);
        assert_eq!(r.fields[0].holder_alpha, 0.0);
    }

    #[test]
    fn identity_check_on_consistent_samples() {
        // H(t) = exp(-t), -G + B = -exp(-t)
        let samples: Vec<IdentitySample> = (0..=10)
            .map(|k| {
                let t = 0.1 * k as f64;
                IdentitySample {
                    t,
                    rel_entropy: (-t).exp(),
                    good: (-t).exp(),
                    bad: 0.0,
                    fisher_rel: 0.0,
                    c0: 1.0,
                    implied_bad_constant: 0.0,
                }
            })
            .collect();
        let r = check_entropy_identity(&samples, 1, 1e-3);
        assert_eq!(r.windows.len(), 10);
        // difference quotient vs trapezoid mean: O(dt^2) with opposite signs
        assert!(r.max_residual < 2e-3 && r.direction_ok);
    }
}
