//! Entropy-type functionals, pair functionals and envelope constants.
//!
//! The double integrals `D`, `G` and `B` are evaluated through convolution
//! identities. Writing `A = sqrt(f) grad ln(f/g) / 2` and `B = sqrt(f)`, the
//! pair integrand of `G` (and of `D`, with `g` constant) is
//! `2 a(v - v') : (B' A - B A')^{(x)2}`, which expands into
//! `4 [ int A . (a * f) A - int B A_i (a_ij * (B A_j)) ]`.
//! A uniform pair-subsampling estimator is provided as an independent route.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::{
    coercivity_c0_with, component_index, kernel_eval, CoefficientEngine, KernelKind,
};
use crate::error::{Error, Result};
use crate::grid::{integrate, japanese_bracket_pow, moment, pairwise_sum, ScalarField, SymMatrixField};
use crate::linalg::{norm, norm_sq, Vec3};
use crate::stencil::{gradient_with, hessian_with, masked_log_gradient, sqrt_gradient, GhostPolicy};

/// Relative threshold defining the trusted region `{g > TRUST * max g}`.
pub const TRUST: f64 = 1e-12;

/// `h^3 sum f ln f` with `0 ln 0 = 0`.
pub fn entropy(f: &ScalarField) -> f64 {
    let terms: Vec<f64> = f
        .values()
        .par_iter()
        .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
        .collect();
    f.grid().cell_volume() * pairwise_sum(&terms)
}

/// `int (phi ln phi - phi + 1) g` with `phi = f / g`; `+inf` when `f > 0`
/// somewhere `g` vanishes.
pub fn relative_entropy(f: &ScalarField, g: &ScalarField) -> f64 {
    let terms: Vec<f64> = f
        .values()
        .par_iter()
        .zip(g.values().par_iter())
        .map(|(&fv, &gv)| relative_entropy_density(fv, gv))
        .collect();
    if terms.iter().any(|t| t.is_infinite()) {
        return f64::INFINITY;
    }
    f.grid().cell_volume() * pairwise_sum(&terms)
}

#[inline]
fn relative_entropy_density(f: f64, g: f64) -> f64 {
    let f = f.max(0.0);
    if g <= 0.0 {
        return if f > 0.0 { f64::INFINITY } else { 0.0 };
    }
    if f == 0.0 {
        return g;
    }
    f * (f / g).ln() - f + g
}

/// Squared Hellinger distance `int |sqrt f - sqrt g|^2`.
pub fn hellinger_sq(f: &ScalarField, g: &ScalarField) -> f64 {
    let terms: Vec<f64> = f
        .values()
        .par_iter()
        .zip(g.values().par_iter())
        .map(|(&a, &b)| (a.max(0.0).sqrt() - b.max(0.0).sqrt()).powi(2))
        .collect();
    f.grid().cell_volume() * pairwise_sum(&terms)
}

/// `H(f|g) - int |sqrt f - sqrt g|^2` for unit-mass densities.
///
/// Summed cell by cell; each cell contributes a non-negative amount in exact
/// arithmetic.
pub fn pinsker_gap(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid().check_compatible(g.grid())?;
    for (name, d) in [("f", f), ("g", g)] {
        let m = integrate(d);
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("{name} has mass {m}, expected 1")));
        }
    }
    let terms: Vec<f64> = f
        .values()
        .par_iter()
        .zip(g.values().par_iter())
        .map(|(&a, &b)| {
            let h = relative_entropy_density(a, b);
            h - (a.max(0.0).sqrt() - b.max(0.0).sqrt()).powi(2)
        })
        .collect();
    if terms.iter().any(|t| t.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok(f.grid().cell_volume() * pairwise_sum(&terms))
}

/// Nodal ingredients of the pair functionals.
#[derive(Clone, Debug)]
pub struct PairFields {
    /// `sqrt(f) grad ln(f/g) / 2`; zero outside the trusted region of `g`.
    pub a: Vec<Vec3>,
    /// `sqrt(f)`.
    pub b: Vec<f64>,
    /// `grad ln g` on the trusted region, zero elsewhere.
    pub q: Vec<Vec3>,
    pub trusted: Vec<bool>,
}

impl PairFields {
    /// Fields for `D(f)`: `A = grad sqrt(f)`.
    pub fn dissipation(f: &ScalarField) -> Self {
        let n = f.grid().len();
        PairFields {
            a: sqrt_gradient(f).values().to_vec(),
            b: f.values().iter().map(|x| x.max(0.0).sqrt()).collect(),
            q: vec![[0.0; 3]; n],
            trusted: vec![true; n],
        }
    }

    /// Fields for the relative functionals of `f` against `g`.
    pub fn relative(f: &ScalarField, g: &ScalarField) -> Self {
        let threshold = TRUST * g.max();
        let (q, trusted) = masked_log_gradient(g, threshold);
        let (lf, f_ok) = masked_log_gradient(f, 0.0);
        let sqrt_f = f.map(|x| x.max(0.0).sqrt());
        let fallback = gradient_with(&sqrt_f, GhostPolicy::LogPolynomial);
        let a = (0..f.grid().len())
            .into_par_iter()
            .map(|i| {
                if !trusted[i] {
                    return [0.0; 3];
                }
                let s = sqrt_f.at(i);
                let qi = q.at(i);
                if f_ok[i] {
                    let l = lf.at(i);
                    std::array::from_fn(|c| 0.5 * s * (l[c] - qi[c]))
                } else {
                    let d = fallback.at(i);
                    std::array::from_fn(|c| d[c] - 0.5 * s * qi[c])
                }
            })
            .collect();
        PairFields {
            a,
            b: sqrt_f.into_values(),
            q: q.values().to_vec(),
            trusted,
        }
    }
}

/// `2 iint a : (B' A - B A')^{(x)2}` via convolutions on the engine's grid.
fn pair_quadratic(engine: &CoefficientEngine, p: &PairFields) -> f64 {
    let grid = *engine.grid();
    let n = grid.len();
    let f: Vec<f64> = p.b.iter().map(|b| b * b).collect();
    let ba: [Vec<f64>; 3] = std::array::from_fn(|j| (0..n).map(|i| p.b[i] * p.a[i][j]).collect());
    let spectra = engine.pair_spectra();
    let sf = engine.source(&f);
    let af = engine.matrix_convolve(spectra, &sf);
    let sba: Vec<_> = ba.iter().map(|x| engine.source(x)).collect();
    let row = |i: usize| -> Vec<_> {
        (0..3)
            .map(|j| (&spectra[component_index(i, j)], &sba[j]))
            .collect()
    };
    let conv = engine.convolver();
    let (o0, o1) = conv.inverse_pair(&row(0), &row(1));
    let (o2, _) = conv.inverse_pair(&row(2), &[]);
    let out = [o0, o1, o2];
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = p.a[k];
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    t1 += a[i] * af[component_index(i, j)][k] * a[j];
                }
                t2 += p.b[k] * a[i] * out[i][k];
            }
            t1 - t2
        })
        .collect();
    4.0 * grid.cell_volume() * pairwise_sum(&terms)
}

/// Entropy dissipation `D(f) = 2 iint |v-v'|^(gamma+2) |Pi (grad - grad') sqrt(ff')|^2`.
pub fn entropy_dissipation(f: &ScalarField) -> f64 {
    entropy_dissipation_with(&CoefficientEngine::new(*f.grid()), f)
}

pub fn entropy_dissipation_with(engine: &CoefficientEngine, f: &ScalarField) -> f64 {
    pair_quadratic(engine, &PairFields::dissipation(f))
}

/// Good term `G(f, g)` in its square-root pairing.
pub fn good_term(f: &ScalarField, g: &ScalarField) -> f64 {
    good_term_with(&CoefficientEngine::new(*f.grid()), f, g)
}

pub fn good_term_with(engine: &CoefficientEngine, f: &ScalarField, g: &ScalarField) -> f64 {
    pair_quadratic(engine, &PairFields::relative(f, g))
}

/// Bad term `B = -iint f (f' - g') grad ln(f/g) . a(v - v') (grad - grad') ln(gg')`.
pub fn bad_term(f: &ScalarField, g: &ScalarField) -> f64 {
    bad_term_with(&CoefficientEngine::new(*f.grid()), f, g)
}

pub fn bad_term_with(engine: &CoefficientEngine, f: &ScalarField, g: &ScalarField) -> f64 {
    let p = PairFields::relative(f, g);
    bad_from_fields(engine, &p, f, g)
}

fn bad_from_fields(engine: &CoefficientEngine, p: &PairFields, f: &ScalarField, g: &ScalarField) -> f64 {
    let grid = *engine.grid();
    let n = grid.len();
    let d: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a - b).collect();
    if d.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let dq: [Vec<f64>; 3] = std::array::from_fn(|j| (0..n).map(|i| d[i] * p.q[i][j]).collect());
    let spectra = engine.pair_spectra();
    let sd = engine.source(&d);
    let ad = engine.matrix_convolve(spectra, &sd);
    let sdq: Vec<_> = dq.iter().map(|x| engine.source(x)).collect();
    let row = |i: usize| -> Vec<_> {
        (0..3)
            .map(|j| (&spectra[component_index(i, j)], &sdq[j]))
            .collect()
    };
    let conv = engine.convolver();
    let (o0, o1) = conv.inverse_pair(&row(0), &row(1));
    let (o2, _) = conv.inverse_pair(&row(2), &[]);
    let out = [o0, o1, o2];
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = p.a[k];
            let q = p.q[k];
            let mut acc = 0.0;
            for i in 0..3 {
                let mut inner = -out[i][k];
                for j in 0..3 {
                    inner += ad[component_index(i, j)][k] * q[j];
                }
                acc += a[i] * inner;
            }
            p.b[k] * acc
        })
        .collect();
    -2.0 * grid.cell_volume() * pairwise_sum(&terms)
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampledEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn sampled_pair_quadratic(
    p: &PairFields,
    grid: &crate::grid::GridSpec,
    fraction: f64,
    seed: u64,
) -> SampledEstimate {
    let n = grid.len();
    let total = (n as f64) * (n as f64);
    let samples = ((fraction * total).ceil() as usize).max(2);
    let gamma = grid.gamma();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..samples)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                return 0.0;
            }
            let (vi, vj) = (grid.node(i), grid.node(j));
            let z = [vi[0] - vj[0], vi[1] - vj[1], vi[2] - vj[2]];
            let x: Vec3 = std::array::from_fn(|c| p.b[j] * p.a[i][c] - p.b[i] * p.a[j][c]);
            2.0 * kernel_eval(KernelKind::Full, gamma, z).bilinear(x, x)
        })
        .collect();
    let mean = pairwise_sum(&values) / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let scale = total * grid.cell_volume() * grid.cell_volume();
    SampledEstimate {
        value: scale * mean,
        std_error: scale * (var / samples as f64).sqrt(),
        samples,
    }
}

/// `D(f)` from a uniform random subset of ordered node pairs.
pub fn entropy_dissipation_sampled(f: &ScalarField, fraction: f64, seed: u64) -> SampledEstimate {
    sampled_pair_quadratic(&PairFields::dissipation(f), f.grid(), fraction, seed)
}

/// `G(f, g)` from a uniform random subset of ordered node pairs.
pub fn good_term_sampled(f: &ScalarField, g: &ScalarField, fraction: f64, seed: u64) -> SampledEstimate {
    sampled_pair_quadratic(&PairFields::relative(f, g), f.grid(), fraction, seed)
}

/// `int |grad ln(f/g)|^2 <v>^gamma f` over the trusted region of `g`.
pub fn weighted_relative_fisher(f: &ScalarField, g: &ScalarField) -> f64 {
    fisher_from_fields(&PairFields::relative(f, g), f)
}

fn fisher_from_fields(p: &PairFields, f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let gamma = grid.gamma();
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| 4.0 * norm_sq(p.a[i]) * japanese_bracket_pow(grid.node(i), gamma))
        .collect();
    grid.cell_volume() * pairwise_sum(&terms)
}

/// `int |grad sqrt f|^2 <v>^gamma`.
pub fn weighted_sqrt_fisher(f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let gamma = grid.gamma();
    let d = sqrt_gradient(f);
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| norm_sq(d.at(i)) * japanese_bracket_pow(grid.node(i), gamma))
        .collect();
    grid.cell_volume() * pairwise_sum(&terms)
}

/// Good and bad terms with the measured ingredients of their bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoodBadReport {
    pub good: f64,
    pub bad: f64,
    pub fisher_rel: f64,
    pub c0: f64,
    pub rel_entropy: f64,
    pub moment_f: f64,
    pub moment_g: f64,
    /// `(1 + K1^2)(M_f + M_g)`, the factor of `H(f|g)` in the good-term bound.
    pub good_factor: f64,
    /// `(K1^2 + K3^2)(M_f^2 + M_g^2) / c0`, the same for the bad term.
    pub bad_factor: f64,
    /// Smallest `C` with `G >= c0 F - C good_factor H` (0 if none needed).
    pub implied_good_constant: f64,
    /// Smallest `C` with `|B| <= c0 F + C bad_factor H` (0 if none needed).
    pub implied_bad_constant: f64,
}

/// Evaluates `G`, `B`, the relative Fisher information and `c0` for one pair.
///
/// `moment_order` is the weight exponent of the moments `M_f`, `M_g`.
pub fn good_bad_report(
    engine: &CoefficientEngine,
    f: &ScalarField,
    g: &ScalarField,
    env: &EnvelopeReport,
    moment_order: f64,
) -> GoodBadReport {
    let p = PairFields::relative(f, g);
    let good = pair_quadratic(engine, &p);
    let bad = bad_from_fields(engine, &p, f, g);
    let fisher_rel = fisher_from_fields(&p, f);
    let c0 = coercivity_c0_with(engine, f).c0;
    let rel_entropy = relative_entropy(f, g);
    let moment_f = moment(f, moment_order);
    let moment_g = moment(g, moment_order);
    let good_factor = (1.0 + env.k1 * env.k1) * (moment_f + moment_g);
    let bad_factor = (env.k1 * env.k1 + env.k3 * env.k3) * (moment_f.powi(2) + moment_g.powi(2)) / c0;
    let implied = |excess: f64, factor: f64| {
        if excess <= 0.0 {
            0.0
        } else if rel_entropy > 0.0 && factor > 0.0 {
            excess / (factor * rel_entropy)
        } else {
            f64::INFINITY
        }
    };
    GoodBadReport {
        good,
        bad,
        fisher_rel,
        c0,
        rel_entropy,
        moment_f,
        moment_g,
        good_factor,
        bad_factor,
        implied_good_constant: implied(c0 * fisher_rel - good, good_factor),
        implied_bad_constant: implied(bad.abs() - c0 * fisher_rel, bad_factor),
    }
}

/// Node subset for Hölder seminorms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Whole,
    /// Closed cube `|v_i - center_i| <= half_side`.
    Cube { center: Vec3, half_side: f64 },
    /// Closed ball `|v - center| <= radius`.
    Ball { center: Vec3, radius: f64 },
}

impl Region {
    pub fn contains(&self, v: Vec3) -> bool {
        match *self {
            Region::Whole => true,
            Region::Cube { center, half_side } => (0..3).all(|c| (v[c] - center[c]).abs() <= half_side),
            Region::Ball { center, radius } => {
                norm([v[0] - center[0], v[1] - center[1], v[2] - center[2]]) <= radius
            }
        }
    }
}

fn sampled_nodes(grid: &crate::grid::GridSpec, region: Region, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    (0..grid.len())
        .filter(|&i| {
            let [a, b, c] = grid.unravel(i);
            a % stride == 0 && b % stride == 0 && c % stride == 0 && region.contains(grid.node(i))
        })
        .collect()
}

fn holder_over(
    grid: &crate::grid::GridSpec,
    alpha: f64,
    region: Region,
    stride: usize,
    diff: impl Fn(usize, usize) -> f64 + Sync,
) -> f64 {
    let nodes = sampled_nodes(grid, region, stride);
    nodes
        .par_iter()
        .enumerate()
        .map(|(k, &i)| {
            let vi = grid.node(i);
            nodes[k + 1..].iter().fold(0.0_f64, |m, &j| {
                let vj = grid.node(j);
                let r = norm([vi[0] - vj[0], vi[1] - vj[1], vi[2] - vj[2]]);
                m.max(diff(i, j) / r.powf(alpha))
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// `max |phi(v) - phi(w)| / |v - w|^alpha` over sampled node pairs in the
/// region; a lower bound for the true seminorm.
pub fn holder_seminorm(field: &ScalarField, alpha: f64, region: Region, stride: usize) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(holder_over(field.grid(), alpha, region, stride, |i, j| {
        (field.at(i) - field.at(j)).abs()
    }))
}

/// Matrix version of [`holder_seminorm`] using the operator norm.
pub fn holder_seminorm_matrix(
    field: &SymMatrixField,
    alpha: f64,
    region: Region,
    stride: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(holder_over(field.grid(), alpha, region, stride, |i, j| {
        (field.at(i) - field.at(j)).operator_norm()
    }))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("Hölder exponent must lie in (0, 1), got {alpha}")))
    }
}

/// Growth exponents of the logarithmic-derivative envelopes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Exponents {
    pub kappa: f64,
    pub nu: f64,
    pub zeta: f64,
}

impl Exponents {
    /// Default exponents for smoothness index `delta` and initial decay `ell`.
    pub fn from_regularity(gamma: f64, ell: f64, delta: f64) -> Self {
        let beta = regularity_beta(ell, delta);
        let kappa = 2.0 * beta + (2.0 - gamma) / delta;
        Exponents {
            kappa,
            zeta: 2.0 * kappa,
            nu: 2.0 * beta + (4.0 - 2.0 * gamma) / delta,
        }
    }

    /// `rho = max(2 kappa, 2 kappa + 2 gamma + 4, 2 zeta, nu)`.
    pub fn auto_rho(&self, gamma: f64) -> f64 {
        (2.0 * self.kappa)
            .max(2.0 * self.kappa + 2.0 * gamma + 4.0)
            .max(2.0 * self.zeta)
            .max(self.nu)
    }
}

fn regularity_beta(ell: f64, delta: f64) -> f64 {
    (2.0 + (ell - 2.0) / (2.0 + delta)).max(1.0)
}

/// Moment order required of `f_0`, `k(gamma, ell, delta)`.
pub fn required_moment_order(gamma: f64, ell: f64, delta: f64) -> f64 {
    8.0 * (regularity_beta(ell, delta) + (2.0 - gamma) / (2.0 * delta)) - gamma
}

/// Logarithmic-derivative envelope constants over the trusted region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub k1: f64,
    /// `NaN` when no time derivative was supplied.
    pub k2: f64,
    pub k3: f64,
    pub exponents: Exponents,
    pub threshold: f64,
    pub argmax_k1: usize,
    pub argmax_k2: Option<usize>,
    pub argmax_k3: usize,
}

fn argmax_of(values: &[Option<f64>]) -> Option<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x)))
        .fold(None, |acc, (i, x)| match acc {
            Some((_, m)) if m >= x => acc,
            _ => Some((i, x)),
        })
}

/// `K1 = max |grad ln g| / <v>^kappa`, `K3 = max ||hess ln g|| / <v>^zeta`,
/// `K2 = max |d_t ln g| / <v>^nu` (if `dt_g` is given), over
/// `{g > 1e-12 max g}`.
pub fn log_derivative_envelopes(
    g: &ScalarField,
    exponents: Exponents,
    dt_g: Option<&ScalarField>,
) -> Result<EnvelopeReport> {
    let grid = *g.grid();
    let Exponents { kappa, nu, zeta } = exponents;
    if kappa < 0.0 || nu < 0.0 || zeta < 0.0 {
        return Err(Error::InvalidInput(format!("envelope exponents must be non-negative: {exponents:?}")));
    }
    let threshold = TRUST * g.max();
    let (grad, trusted) = masked_log_gradient(g, threshold);
    if !trusted.iter().any(|&t| t) {
        return Err(Error::InvalidInput("trusted region of g is empty".into()));
    }
    let ln_g = g.map(|x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY });
    let hess = hessian_with(&ln_g, GhostPolicy::Polynomial);
    let k1s: Vec<Option<f64>> = (0..grid.len())
        .map(|i| trusted[i].then(|| norm(grad.at(i)) / japanese_bracket_pow(grid.node(i), kappa)))
        .collect();
    let k3s: Vec<Option<f64>> = (0..grid.len())
        .map(|i| {
            let m = hess.at(i);
            (trusted[i] && m.to_array().iter().all(|x| x.is_finite()))
                .then(|| m.operator_norm() / japanese_bracket_pow(grid.node(i), zeta))
        })
        .collect();
    let (argmax_k1, k1) = argmax_of(&k1s).expect("trusted region is non-empty");
    let (argmax_k3, k3) = argmax_of(&k3s).unwrap_or((argmax_k1, f64::NAN));
    let (argmax_k2, k2) = match dt_g {
        Some(dt) => {
            dt.grid().check_compatible(&grid)?;
            let k2s: Vec<Option<f64>> = (0..grid.len())
                .map(|i| {
                    trusted[i].then(|| (dt.at(i) / g.at(i)).abs() / japanese_bracket_pow(grid.node(i), nu))
                })
                .collect();
            let (i, k) = argmax_of(&k2s).expect("trusted region is non-empty");
            (Some(i), k)
        }
        None => (None, f64::NAN),
    };
    Ok(EnvelopeReport {
        k1,
        k2,
        k3,
        exponents,
        threshold,
        argmax_k1,
        argmax_k2,
        argmax_k3,
    })
}

/// Two-sided Gaussian sandwich `k_lo e^{-mu|v|^2} <= g <= k_hi e^{-mu|v|^2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxwellEnvelope {
    pub mu: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    /// Radius of the ball `|v| <= radius` over which the constants are taken.
    pub radius: f64,
}

/// Fraction of the half width defining the trusted ball of the sandwich.
pub const ENVELOPE_RADIUS_FRACTION: f64 = 0.8;

pub fn maxwellian_envelope(g: &ScalarField, mu: f64) -> Result<MaxwellEnvelope> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!("Gaussian rate must be positive, got {mu}")));
    }
    let grid = *g.grid();
    let radius = ENVELOPE_RADIUS_FRACTION * grid.half_width();
    let (k_lo, k_hi) = (0..grid.len())
        .filter_map(|i| {
            let r2 = norm_sq(grid.node(i));
            (r2 <= radius * radius).then(|| g.at(i) * (mu * r2).exp())
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    Ok(MaxwellEnvelope { mu, k_lo, k_hi, radius })
}
