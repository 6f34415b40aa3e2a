//! Landau kernels and the parabolic coefficients `a_bar = a * g`, `c_bar`.
//!
//! Convolutions run on the padded FFT lattice of [`crate::convolution`]. The
//! kernel tables already carry the cell volume `h^3`, so a convolution output
//! is directly the midpoint approximation of the integral.
//!
//! Origin cell rules. A kernel homogeneous of degree `s` near the origin gets
//! the weight `C_s h^s` at zero offset, where `C_s` is the regularised lattice
//! constant of `|k|^s` on the unit cubic lattice (see [`lattice_origin_constant`]).
//! This makes the midpoint rule exact on the leading singular term. The next
//! term, driven by the Hessian of `g`, is removed the same way with the
//! constants of `|y|^s y_k y_l`, which leaves an `O(h^(s+7))` error:
//! * full kernel `a`: `(2/3) C_(gamma+2) h^(gamma+2) I` (its trace is
//!   `2 |z|^(gamma+2)`, and cubic symmetry makes the correction isotropic);
//! * scalar kernel `|z|^gamma`: `C_gamma h^gamma`;
//! * cut-off kernel: its (continuous) value at the origin, which is zero;
//! * pair kernel for the double-integral functionals: zero, because every
//!   pair integrand vanishes on the diagonal.

use std::f64::consts::PI;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::convolution::{Convolver, KernelSpectrum, SourceSpectrum};
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, GridSpec, ScalarField, SymMatrixField};
use crate::linalg::{norm, norm_sq, Sym3, Vec3};
use crate::stencil::{density_hessian, GhostPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    /// `a(z) = |z|^(gamma+2) Pi(z)`.
    Full,
    /// `a~(z) = <z>^gamma |z|^2 Pi(z)`.
    CutOff,
}

/// Storage index of entry `(i, j)` in the (xx, xy, xz, yy, yz, zz) layout.
pub(crate) const fn component_index(i: usize, j: usize) -> usize {
    const MAP: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    MAP[i][j]
}

/// `I - z z^T / |z|^2`; the zero matrix at `z = 0`.
pub fn projection_matrix(z: Vec3) -> Sym3 {
    let r2 = norm_sq(z);
    if r2 == 0.0 {
        return Sym3::ZERO;
    }
    Sym3::identity() - Sym3::outer(z) * (1.0 / r2)
}

/// Kernel value at `z`; the zero matrix at `z = 0`.
pub fn kernel_eval(kind: KernelKind, gamma: f64, z: Vec3) -> Sym3 {
    let r2 = norm_sq(z);
    if r2 == 0.0 {
        return Sym3::ZERO;
    }
    // |z|^2 Pi(z) = |z|^2 I - z z^T avoids the division
    let base = Sym3::scalar(r2) - Sym3::outer(z);
    match kind {
        KernelKind::Full => base * r2.powf(0.5 * gamma),
        KernelKind::CutOff => base * (1.0 + r2).powf(0.5 * gamma),
    }
}

/// `|z|^gamma`, zero at the origin.
pub fn scalar_kernel(gamma: f64, z: Vec3) -> f64 {
    let r = norm(z);
    if r == 0.0 {
        0.0
    } else {
        r.powf(gamma)
    }
}

/// Radius of the ball with the volume of one grid cell.
pub fn cell_ball_radius(h: f64) -> f64 {
    h * (3.0 / (4.0 * PI)).cbrt()
}

/// Even monomial weights of the regularised lattice constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Moment {
    /// `|y|^s`
    Plain,
    /// `y_1^4 |y|^(s - 4)`
    Quartic,
    /// `y_1^2 y_2^2 |y|^(s - 4)`
    MixedQuartic,
}

impl Moment {
    fn weight(self, y: [f64; 3]) -> f64 {
        match self {
            Moment::Plain => 1.0,
            Moment::Quartic => y[0].powi(4),
            Moment::MixedQuartic => y[0] * y[0] * y[1] * y[1],
        }
    }

    /// Polynomial degree and spherical mean of the weight.
    fn degree_and_mean(self) -> (f64, f64) {
        match self {
            Moment::Plain => (0.0, 1.0),
            Moment::Quartic => (4.0, 0.2),
            Moment::MixedQuartic => (4.0, 1.0 / 15.0),
        }
    }
}

/// `int P |y|^(s - deg P) phi - sum_{k != 0} P(k) |k|^(s - deg P) phi(k)`
/// for the Gaussian `phi` of width `sigma`.
fn gaussian_defect(moment: Moment, s: f64, sigma: f64) -> f64 {
    let (deg, mean) = moment.degree_and_mean();
    let k_max = (8.0 * sigma).ceil() as i64;
    let w1: Vec<f64> = (0..=k_max)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    // octant sum with multiplicities 2 per non-zero coordinate
    let mult = |k: i64| if k == 0 { 1.0 } else { 2.0 };
    let planes: Vec<f64> = (0..=k_max)
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..=k_max {
                for c in 0..=k_max {
                    let r2 = (a * a + b * b + c * c) as f64;
                    if r2 == 0.0 {
                        continue;
                    }
                    let p = moment.weight([a as f64, b as f64, c as f64]);
                    acc += mult(b) * mult(c) * w1[b as usize] * w1[c as usize] * p * r2.powf(0.5 * (s - deg));
                }
            }
            mult(a) * w1[a as usize] * acc
        })
        .collect();
    let lattice = pairwise_sum(&planes);
    let integral = mean * 2.0 * PI * (2.0 * sigma * sigma).powf(0.5 * (s + 3.0)) * gamma_fn(0.5 * (s + 3.0));
    integral - lattice
}

fn regularised_constant(moment: Moment, s: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<(Moment, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (moment, s.to_bits());
    if let Some(&c) = cache.lock().expect("cache lock").get(&key) {
        return c;
    }
    let c: Vec<f64> = [3.0, 6.0, 12.0].iter().map(|&w| gaussian_defect(moment, s, w)).collect();
    let r1 = [(4.0 * c[1] - c[0]) / 3.0, (4.0 * c[2] - c[1]) / 3.0];
    let value = (16.0 * r1[1] - r1[0]) / 15.0;
    cache.lock().expect("cache lock").insert(key, value);
    value
}

/// Lanczos approximation of the Gamma function for positive arguments.
fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_fn(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Regularised lattice constant `C_s` of `|k|^s` on the unit cubic lattice,
/// `s > -3`: the limit of `int |y|^s phi - sum_{k != 0} |k|^s phi(k)` for
/// wide Gaussians `phi`, `phi(0) = 1`. Evaluated at widths 3, 6, 12 with two
/// Richardson levels and cached per exponent.
pub fn lattice_origin_constant(s: f64) -> f64 {
    regularised_constant(Moment::Plain, s)
}

/// Scalar coefficient `w` of the origin weight `w I` of the full kernel.
pub fn full_origin_weight(gamma: f64, h: f64) -> f64 {
    2.0 / 3.0 * lattice_origin_constant(gamma + 2.0) * h.powf(gamma + 2.0)
}

/// Origin weight of the scalar kernel `|z|^gamma`; requires `gamma > -3`.
pub fn scalar_origin_weight(gamma: f64, h: f64) -> f64 {
    lattice_origin_constant(gamma) * h.powf(gamma)
}

/// Kernel spectra and FFT plans for one grid, built lazily and reused.
pub struct CoefficientEngine {
    grid: GridSpec,
    conv: Convolver,
    full: OnceLock<Vec<KernelSpectrum>>,
    cutoff: OnceLock<Vec<KernelSpectrum>>,
    pair: OnceLock<Vec<KernelSpectrum>>,
    scalar: OnceLock<KernelSpectrum>,
}

impl CoefficientEngine {
    pub fn new(grid: GridSpec) -> Self {
        CoefficientEngine {
            grid,
            conv: Convolver::new(grid.points_per_axis()),
            full: OnceLock::new(),
            cutoff: OnceLock::new(),
            pair: OnceLock::new(),
            scalar: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub(crate) fn convolver(&self) -> &Convolver {
        &self.conv
    }

    fn matrix_spectra(&self, kind: KernelKind, origin: f64) -> Vec<KernelSpectrum> {
        let h = self.grid.spacing();
        let gamma = self.grid.gamma();
        let w = self.grid.cell_volume();
        (0..6)
            .map(|c| {
                self.conv.kernel_spectrum(|d| {
                    if d == [0, 0, 0] {
                        // diagonal components only
                        return if c == 0 || c == 3 || c == 5 { origin * w } else { 0.0 };
                    }
                    let z = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
                    kernel_eval(kind, gamma, z).to_array()[c] * w
                })
            })
            .collect()
    }

    fn spectra(&self, kind: KernelKind) -> &[KernelSpectrum] {
        match kind {
            KernelKind::Full => self.full.get_or_init(|| {
                let origin = full_origin_weight(self.grid.gamma(), self.grid.spacing());
                self.matrix_spectra(KernelKind::Full, origin)
            }),
            KernelKind::CutOff => self
                .cutoff
                .get_or_init(|| self.matrix_spectra(KernelKind::CutOff, 0.0)),
        }
    }

    /// Full kernel with a zero origin cell, used by the pair functionals.
    pub(crate) fn pair_spectra(&self) -> &[KernelSpectrum] {
        self.pair
            .get_or_init(|| self.matrix_spectra(KernelKind::Full, 0.0))
    }

    fn scalar_spectrum(&self) -> &KernelSpectrum {
        self.scalar.get_or_init(|| {
            let h = self.grid.spacing();
            let gamma = self.grid.gamma();
            let w = self.grid.cell_volume();
            let origin = scalar_origin_weight(gamma, h);
            self.conv.kernel_spectrum(|d| {
                if d == [0, 0, 0] {
                    return origin * w;
                }
                let z = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
                scalar_kernel(gamma, z) * w
            })
        })
    }

    pub(crate) fn source(&self, values: &[f64]) -> SourceSpectrum {
        self.conv.source_spectrum(values)
    }

    /// Six components of `K * src` for a matrix kernel set, from a source
    /// spectrum. Outputs in storage order.
    pub(crate) fn matrix_convolve(
        &self,
        spectra: &[KernelSpectrum],
        src: &SourceSpectrum,
    ) -> [Vec<f64>; 6] {
        let (c0, c1) = self.conv.inverse_pair(&[(&spectra[0], src)], &[(&spectra[1], src)]);
        let (c2, c3) = self.conv.inverse_pair(&[(&spectra[2], src)], &[(&spectra[3], src)]);
        let (c4, c5) = self.conv.inverse_pair(&[(&spectra[4], src)], &[(&spectra[5], src)]);
        [c0, c1, c2, c3, c4, c5]
    }

    fn assemble(&self, comps: [Vec<f64>; 6]) -> SymMatrixField {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| Sym3::from_array(std::array::from_fn(|c| comps[c][i])))
            .collect();
        SymMatrixField::new(self.grid, values).expect("sized by grid")
    }

    /// Next term of the singular quadrature expansion for the full kernel,
    /// `h^(s+5)/2 sum_kl C[a y_k y_l] d_kl g` with `s = gamma + 2`.
    pub fn full_curvature_correction(&self, g: &ScalarField) -> Vec<Sym3> {
        let h = self.grid.spacing();
        let s = self.grid.gamma() + 2.0;
        let trace = lattice_origin_constant(s + 2.0) / 3.0;
        let e1 = regularised_constant(Moment::Quartic, s + 2.0);
        let e2 = regularised_constant(Moment::MixedQuartic, s + 2.0);
        let scale = 0.5 * h.powf(s + 5.0);
        let hess = density_hessian(g, GhostPolicy::Auto);
        hess.values()
            .par_iter()
            .map(|d| {
                let lap = d.xx + d.yy + d.zz;
                let diag = |dii: f64| scale * (trace * lap - e1 * dii - e2 * (lap - dii));
                Sym3 {
                    xx: diag(d.xx),
                    yy: diag(d.yy),
                    zz: diag(d.zz),
                    xy: -2.0 * scale * e2 * d.xy,
                    xz: -2.0 * scale * e2 * d.xz,
                    yz: -2.0 * scale * e2 * d.yz,
                }
            })
            .collect()
    }

    /// Scalar-kernel analogue of [`Self::full_curvature_correction`], before the
    /// `2 (gamma + 3)` factor.
    pub fn scalar_curvature_correction(&self, g: &ScalarField) -> Vec<f64> {
        let h = self.grid.spacing();
        let gamma = self.grid.gamma();
        let scale = h.powf(gamma + 5.0) * lattice_origin_constant(gamma + 2.0) / 6.0;
        density_hessian(g, GhostPolicy::Auto)
            .values()
            .par_iter()
            .map(|d| scale * (d.xx + d.yy + d.zz))
            .collect()
    }

    fn full_with_correction(&self, g: &ScalarField, comps: [Vec<f64>; 6]) -> SymMatrixField {
        let corr = self.full_curvature_correction(g);
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| Sym3::from_array(std::array::from_fn(|c| comps[c][i])) + corr[i])
            .collect();
        SymMatrixField::new(self.grid, values).expect("sized by grid")
    }

    fn scaled_c_bar(&self, g: &ScalarField, conv: Vec<f64>) -> ScalarField {
        let s = 2.0 * (self.grid.gamma() + 3.0);
        let corr = self.scalar_curvature_correction(g);
        let values = conv.into_iter().zip(corr).map(|(x, c)| s * (x + c)).collect();
        ScalarField::from_values(self.grid, values).expect("sized by grid")
    }

    /// `a_bar = kernel * g` without input validation.
    pub fn a_bar_unchecked(&self, g: &ScalarField, kind: KernelKind) -> SymMatrixField {
        let src = self.source(g.values());
        let comps = self.matrix_convolve(self.spectra(kind), &src);
        match kind {
            KernelKind::Full => self.full_with_correction(g, comps),
            KernelKind::CutOff => self.assemble(comps),
        }
    }

    /// `c_bar` without input validation.
    pub fn c_bar_unchecked(&self, g: &ScalarField) -> ScalarField {
        let gamma = self.grid.gamma();
        if gamma == -3.0 {
            return g.scaled(8.0 * PI);
        }
        let out = self.conv.convolve(self.scalar_spectrum(), g.values());
        self.scaled_c_bar(g, out)
    }

    /// `a_bar` (full kernel) and `c_bar` sharing one forward transform.
    pub fn pair_unchecked(&self, g: &ScalarField) -> CoefficientPair {
        let gamma = self.grid.gamma();
        let src = self.source(g.values());
        let spectra = self.spectra(KernelKind::Full);
        let comps = self.matrix_convolve(spectra, &src);
        let c_bar = if gamma == -3.0 {
            g.scaled(8.0 * PI)
        } else {
            let out = self
                .conv
                .inverse_pair(&[(self.scalar_spectrum(), &src)], &[])
                .0;
            self.scaled_c_bar(g, out)
        };
        CoefficientPair {
            a_bar: self.full_with_correction(g, comps),
            c_bar,
            gamma,
        }
    }

    pub fn a_bar(&self, g: &ScalarField, kind: KernelKind) -> Result<SymMatrixField> {
        self.check_source(g)?;
        Ok(self.a_bar_unchecked(g, kind))
    }

    pub fn c_bar(&self, g: &ScalarField) -> Result<ScalarField> {
        self.check_source(g)?;
        Ok(self.c_bar_unchecked(g))
    }

    pub fn pair(&self, g: &ScalarField) -> Result<CoefficientPair> {
        self.check_source(g)?;
        Ok(self.pair_unchecked(g))
    }

    fn check_source(&self, g: &ScalarField) -> Result<()> {
        g.grid().check_compatible(&self.grid)?;
        if !g.is_finite() {
            return Err(Error::InvalidInput("source density has non-finite values".into()));
        }
        let mass = crate::grid::integrate(g);
        if mass < 0.0 {
            return Err(Error::InvalidInput(format!("source density has negative mass {mass}")));
        }
        Ok(())
    }
}

/// `a_bar` and `c_bar` computed from one source density.
#[derive(Clone, Debug)]
pub struct CoefficientPair {
    pub a_bar: SymMatrixField,
    pub c_bar: ScalarField,
    pub gamma: f64,
}

pub fn coeff_a_bar(g: &ScalarField, kind: KernelKind) -> Result<SymMatrixField> {
    CoefficientEngine::new(*g.grid()).a_bar(g, kind)
}

/// `c_bar` for interaction exponent `gamma` (which overrides the grid's).
pub fn coeff_c_bar(g: &ScalarField, gamma: f64) -> Result<ScalarField> {
    let grid = g.grid();
    let grid = GridSpec::new(grid.half_width(), grid.points_per_axis(), gamma)?;
    let g = ScalarField::from_values(grid, g.values().to_vec())?;
    CoefficientEngine::new(grid).c_bar(&g)
}

/// Direct evaluation of `sum_w K(v - w) g(w) h^3` at an arbitrary point `v`.
///
/// At `v = 0` the cell-centred lattice is symmetric under all coordinate
/// reflections and permutations, so the result is exactly isotropic for
/// radially symmetric `g`. Nodes coinciding with `v` are skipped.
pub fn a_bar_at_point(g: &ScalarField, kind: KernelKind, v: Vec3) -> Sym3 {
    let grid = *g.grid();
    let gamma = grid.gamma();
    let comps: Vec<[f64; 6]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let w = grid.node(idx);
            let z = [v[0] - w[0], v[1] - w[1], v[2] - w[2]];
            (kernel_eval(kind, gamma, z) * g.at(idx)).to_array()
        })
        .collect();
    let h = grid.spacing();
    let h3 = grid.cell_volume();
    let mut sum = Sym3::from_array(std::array::from_fn(|c| {
        let col: Vec<f64> = comps.iter().map(|m| m[c]).collect();
        h3 * pairwise_sum(&col)
    }));
    if kind == KernelKind::Full {
        // offset of the lattice relative to v, in cell units
        let t: Vec3 = std::array::from_fn(|a| {
            let x = (grid.half_width() + v[a]) / h - 0.5;
            x - x.floor()
        });
        let c = shifted_lattice_constant(gamma + 2.0, t);
        let gv = trilinear(g, v);
        sum = sum + Sym3::from_array(c) * (h.powf(gamma + 5.0) * gv);
    }
    sum
}

/// Trilinear interpolation of a nodal field, zero outside the node hull.
fn trilinear(g: &ScalarField, v: Vec3) -> f64 {
    let grid = g.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let x = (grid.half_width() + v[a]) / h - 0.5;
        if x < 0.0 || x > (n - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = x - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let up = (corner >> a) & 1 == 1;
            idx[a] = base[a] + up as usize;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
        }
        acc += w * g.at(grid.index(idx[0], idx[1], idx[2]));
    }
    acc
}

fn shifted_matrix_defect(s: f64, t: Vec3, sigma: f64) -> [f64; 6] {
    let k_max = (8.0 * sigma).ceil() as i64;
    let planes: Vec<[f64; 6]> = (-k_max..=k_max)
        .into_par_iter()
        .map(|a| {
            let mut acc = [0.0; 6];
            let y0 = a as f64 + t[0];
            for b in -k_max..=k_max {
                let y1 = b as f64 + t[1];
                for c in -k_max..=k_max {
                    let y = [y0, y1, c as f64 + t[2]];
                    let r2 = norm_sq(y);
                    if r2 == 0.0 {
                        continue;
                    }
                    let weight = (-r2 / (2.0 * sigma * sigma)).exp() * r2.powf(0.5 * s - 1.0);
                    let m = (Sym3::scalar(r2) - Sym3::outer(y)).to_array();
                    for (o, x) in acc.iter_mut().zip(m) {
                        *o += weight * x;
                    }
                }
            }
            acc
        })
        .collect();
    let integral = 2.0 / 3.0
        * 2.0
        * PI
        * (2.0 * sigma * sigma).powf(0.5 * (s + 3.0))
        * gamma_fn(0.5 * (s + 3.0));
    std::array::from_fn(|c| {
        let col: Vec<f64> = planes.iter().map(|p| p[c]).collect();
        let diag = if c == 0 || c == 3 || c == 5 { integral } else { 0.0 };
        diag - pairwise_sum(&col)
    })
}

/// Matrix analogue of [`lattice_origin_constant`] for `|y|^s Pi(y)` on the
/// shifted lattice `Z^3 + t`. For `t = 0` it equals `(2/3) C_s I`.
pub fn shifted_lattice_constant(s: f64, t: Vec3) -> [f64; 6] {
    type Key = (u64, [u64; 3]);
    static CACHE: OnceLock<Mutex<HashMap<Key, [f64; 6]>>> = OnceLock::new();
    let key = (s.to_bits(), t.map(f64::to_bits));
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("cache lock").get(&key) {
        return *c;
    }
    let d: Vec<[f64; 6]> = [3.0, 6.0, 12.0].iter().map(|&w| shifted_matrix_defect(s, t, w)).collect();
    let mut value: [f64; 6] = std::array::from_fn(|c| {
        let r1 = [(4.0 * d[1][c] - d[0][c]) / 3.0, (4.0 * d[2][c] - d[1][c]) / 3.0];
        (16.0 * r1[1] - r1[0]) / 15.0
    });
    // impose the lattice symmetries that fix the shift
    let reflective = t.map(|x| x == 0.0 || x == 0.5);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if reflective[i] || reflective[j] {
            value[component_index(i, j)] = 0.0;
        }
        if t[i] == t[j] {
            let (a, b) = (component_index(i, i), component_index(j, j));
            let mean = 0.5 * (value[a] + value[b]);
            value[a] = mean;
            value[b] = mean;
        }
    }
    if t[0] == t[1] && t[1] == t[2] {
        let mean = (value[0] + value[3] + value[5]) / 3.0;
        value[0] = mean;
        value[3] = mean;
        value[5] = mean;
    }
    cache.lock().expect("cache lock").insert(key, value);
    value
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// `min_v lambda_min(a~ * f)(v) / <v>^gamma`.
    pub c0: f64,
    pub argmin: usize,
    pub node: Vec3,
}

pub fn coercivity_c0(f: &ScalarField) -> CoercivityReport {
    coercivity_c0_with(&CoefficientEngine::new(*f.grid()), f)
}

pub fn coercivity_c0_with(engine: &CoefficientEngine, f: &ScalarField) -> CoercivityReport {
    let grid = *f.grid();
    let gamma = grid.gamma();
    let a = engine.a_bar_unchecked(f, KernelKind::CutOff);
    let ratios: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let v = grid.node(i);
            a.at(i).min_eigenvalue() / crate::grid::japanese_bracket_pow(v, gamma)
        })
        .collect();
    let (argmin, c0) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc });
    CoercivityReport {
        c0,
        argmin,
        node: grid.node(argmin),
    }
}

/// Measured ellipticity constants of `a_bar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    /// `min_v lambda_min(a_bar) / <v>^gamma`.
    pub lambda_hat: f64,
    /// `max_v lambda_max(a_bar) / <v>^(gamma+2)`.
    pub big_lambda_hat: f64,
    /// `max_v <a_bar v^, v^> / <v>^gamma`.
    pub radial_max: f64,
    /// Median over nodes of the same radial quotient.
    pub radial_median: f64,
    /// `max_v lambda_max(a_bar) / <v>^gamma`.
    pub generic_max: f64,
    /// `max_v lambda_max(a_bar)`, which sets the time step.
    pub max_eigenvalue: f64,
}

pub fn ellipticity(a_bar: &SymMatrixField) -> EllipticityReport {
    let grid = *a_bar.grid();
    let gamma = grid.gamma();
    let rows: Vec<[f64; 5]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let v = grid.node(i);
            let m = a_bar.at(i);
            let e = m.eigenvalues();
            let wg = crate::grid::japanese_bracket_pow(v, gamma);
            let wg2 = crate::grid::japanese_bracket_pow(v, gamma + 2.0);
            let r = norm(v);
            let u = [v[0] / r, v[1] / r, v[2] / r];
            [e[0] / wg, e[2] / wg2, m.bilinear(u, u) / wg, e[2] / wg, e[2]]
        })
        .collect();
    let min = |k: usize| rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
    let mut radial: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    radial.sort_by(f64::total_cmp);
    let n = radial.len();
    let radial_median = if n % 2 == 1 {
        radial[n / 2]
    } else {
        0.5 * (radial[n / 2 - 1] + radial[n / 2])
    };
    EllipticityReport {
        lambda_hat: min(0),
        big_lambda_hat: max(1),
        radial_max: max(2),
        radial_median,
        generic_max: max(3),
        max_eigenvalue: max(4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    fn maxwellian(grid: GridSpec) -> ScalarField {
        let c = (2.0 * PI).powf(-1.5);
        ScalarField::from_fn(grid, |v| c * (-0.5 * norm_sq(v)).exp())
    }

    fn close(a: Sym3, b: Sym3, tol: f64) -> bool {
        (a - b).max_abs_entry() <= tol
    }

    #[test]
    fn projection_examples() {
        assert_eq!(projection_matrix([1.0, 0.0, 0.0]), Sym3::diag(0.0, 1.0, 1.0));
        let s = 1.0 / 2f64.sqrt();
        let p = projection_matrix([s, s, 0.0]);
        let expect = Sym3 {
            xx: 0.5,
            xy: -0.5,
            xz: 0.0,
            yy: 0.5,
            yz: 0.0,
            zz: 1.0,
        };
        assert!(close(p, expect, 1e-15));
        let z = [0.3, -2.0, 1.7];
        let pz = projection_matrix(z).apply(z);
        assert!(norm(pz) < 1e-14);
        assert!((projection_matrix(z).trace() - 2.0).abs() < 1e-14);
        assert_eq!(projection_matrix([0.0; 3]), Sym3::ZERO);
    }

    #[test]
    fn kernel_examples() {
        let full = kernel_eval(KernelKind::Full, -3.0, [2.0, 0.0, 0.0]);
        assert!(close(full, Sym3::diag(0.0, 0.5, 0.5), 1e-15));
        let cut = kernel_eval(KernelKind::CutOff, -3.0, [2.0, 0.0, 0.0]);
        let c = 4.0 / 5f64.powf(1.5);
        assert!(close(cut, Sym3::diag(0.0, c, c), 1e-15));
    }

    #[test]
    fn full_kernel_dominates_cutoff() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let z: Vec3 = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
            let gamma = rng.random_range(-3.0..0.0);
            let d = kernel_eval(KernelKind::Full, gamma, z) - kernel_eval(KernelKind::CutOff, gamma, z);
            assert!(d.min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn point_mass_reproduces_kernel() {
        let grid = GridSpec::new(4.0, 12, -3.0).unwrap();
        let w0 = grid.index(5, 6, 4);
        let mut g = ScalarField::zeros(grid);
        g.values_mut()[w0] = 1.0 / grid.cell_volume();
        let a = coeff_a_bar(&g, KernelKind::Full).unwrap();
        let c = coeff_c_bar(&g, -2.5).unwrap();
        let p = grid.node(w0);
        for idx in [0, 100, 777, grid.len() - 1] {
            let v = grid.node(idx);
            let z = [v[0] - p[0], v[1] - p[1], v[2] - p[2]];
            let exact = kernel_eval(KernelKind::Full, -3.0, z);
            assert!(close(a.at(idx), exact, 1e-6 * exact.max_abs_entry()));
            let ce = 2.0 * 0.5 * norm(z).powf(-2.5);
            assert!((c.at(idx) - ce).abs() <= 1e-6 * ce);
        }
    }

    #[test]
    fn null_direction_aligns_with_offset() {
        let grid = GridSpec::new(4.0, 12, -2.5).unwrap();
        let w0 = grid.index(6, 6, 6);
        let mut g = ScalarField::zeros(grid);
        g.values_mut()[w0] = 1.0;
        let a = coeff_a_bar(&g, KernelKind::Full).unwrap();
        let p = grid.node(w0);
        let h = grid.spacing();
        for idx in 0..grid.len() {
            let v = grid.node(idx);
            let z = [v[0] - p[0], v[1] - p[1], v[2] - p[2]];
            if norm(z) <= 4.0 * h {
                continue;
            }
            let e = a.at(idx).min_eigenvector();
            let cos = crate::linalg::dot(e, z).abs() / norm(z);
            assert!(cos > (1e-3f64).cos(), "node {idx}");
        }
    }

    #[test]
    fn gamma_minus_three_c_bar_is_local() {
        let grid = GridSpec::new(6.0, 8, -3.0).unwrap();
        let g = maxwellian(grid);
        let c = coeff_c_bar(&g, -3.0).unwrap();
        for i in 0..grid.len() {
            assert_eq!(c.at(i), 8.0 * PI * g.at(i));
        }
        assert!(coeff_c_bar(&g, 0.5).is_err());
    }

    #[test]
    fn a_bar_is_psd_and_origin_isotropic() {
        let grid = GridSpec::new(6.0, 16, -3.0).unwrap();
        let g = maxwellian(grid);
        let a = coeff_a_bar(&g, KernelKind::Full).unwrap();
        for m in a.values() {
            assert!(m.min_eigenvalue() >= -1e-10);
        }
        let a0 = a_bar_at_point(&g, KernelKind::Full, [0.0; 3]);
        assert!(a0.xy.abs() < 1e-14 && a0.xz.abs() < 1e-14 && a0.yz.abs() < 1e-14);
        assert!((a0.xx - a0.yy).abs() < 1e-14 && (a0.xx - a0.zz).abs() < 1e-14);
    }

    #[test]
    fn coercivity_is_homogeneous_and_symmetric() {
        let grid = GridSpec::new(6.0, 12, -3.0).unwrap();
        let f = ScalarField::from_fn(grid, |v| {
            (-0.5 * (v[0] - 0.4).powi(2) - 0.3 * v[1] * v[1] - 0.7 * v[2] * v[2]).exp()
        });
        let engine = CoefficientEngine::new(grid);
        let base = coercivity_c0_with(&engine, &f).c0;
        assert!(base > 0.0);
        let twice = coercivity_c0_with(&engine, &f.scaled(2.0)).c0;
        assert!((twice - 2.0 * base).abs() <= 1e-12 * base.abs());
        // swap the first two axes
        let swapped = ScalarField::from_fn(grid, |v| {
            (-0.5 * (v[1] - 0.4).powi(2) - 0.3 * v[0] * v[0] - 0.7 * v[2] * v[2]).exp()
        });
        let s = coercivity_c0_with(&engine, &swapped).c0;
        assert!((s - base).abs() <= 1e-12 * base.abs());
        assert!(integrate(&f) > 0.0);
    }

    #[test]
    fn lattice_constants_match_known_values() {
        // regularised cubic-lattice sums of 1/|k| and 1/|k|^2
        assert!((lattice_origin_constant(-1.0) - 2.837_297_479).abs() < 1e-5);
        assert!((lattice_origin_constant(-2.0) - 8.913_632_917).abs() < 1e-5);
        assert!((lattice_origin_constant(0.0) - 1.0).abs() < 1e-8);
        assert!((gamma_fn(0.5) - PI.sqrt()).abs() < 1e-13);
        let m = shifted_lattice_constant(-1.0, [0.0; 3]);
        let c = 2.0 / 3.0 * lattice_origin_constant(-1.0);
        assert!((m[0] - c).abs() < 1e-6 && m[1].abs() < 1e-10);
        // y1^4 + 2 y1^2 y2^2 summed over the lattice reproduces |y|^2 / 3 weights
        for s in [0.5, 1.0] {
            let e1 = regularised_constant(Moment::Quartic, s);
            let e2 = regularised_constant(Moment::MixedQuartic, s);
            assert!((e1 + 2.0 * e2 - lattice_origin_constant(s) / 3.0).abs() < 1e-6, "{s}");
        }
    }

    #[test]
    fn rejects_negative_mass() {
        let grid = GridSpec::new(6.0, 8, -3.0).unwrap();
        let g = ScalarField::constant(grid, -1.0);
        assert!(matches!(coeff_a_bar(&g, KernelKind::Full), Err(Error::InvalidInput(_))));
    }
}
