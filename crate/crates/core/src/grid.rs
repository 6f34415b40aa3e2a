//! Truncated velocity box, nodal fields and midpoint quadrature.
//!
//! Nodes are cell centred: along each axis `v_i = -L + (i + 1/2) h` with
//! `h = 2L / N`, so no node sits on the origin for even `N`. Field storage is
//! row-major with flat index `(ix * N + iy) * N + iz`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Sym3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    points_per_axis: usize,
    gamma: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, points_per_axis: usize, gamma: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(half_width.is_finite() && half_width > 0.0) {
            problems.push(format!("half width must be positive, got {half_width}"));
        }
        if points_per_axis < 8 {
            problems.push(format!("need at least 8 points per axis, got {points_per_axis}"));
        }
        if points_per_axis % 2 != 0 {
            problems.push(format!("points per axis must be even, got {points_per_axis}"));
        }
        if !(-3.0..0.0).contains(&gamma) {
            problems.push(format!("gamma must lie in [-3, 0), got {gamma}"));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidGrid(problems.join("; ")));
        }
        Ok(GridSpec {
            half_width,
            points_per_axis,
            gamma,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Number of nodes, `N^3`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let n = self.points_per_axis;
        (ix * n + iy) * n + iz
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn node(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Node closest to `v` (ties broken towards the lower index).
    pub fn nearest_node(&self, v: Vec3) -> usize {
        let n = self.points_per_axis;
        let h = self.spacing();
        let axis = |x: f64| {
            let i = ((x + self.half_width) / h - 0.5).round();
            i.clamp(0.0, (n - 1) as f64) as usize
        };
        self.index(axis(v[0]), axis(v[1]), axis(v[2]))
    }

    /// Same box and resolution; the interaction exponent may differ.
    pub fn same_lattice(&self, other: &GridSpec) -> bool {
        self.half_width == other.half_width && self.points_per_axis == other.points_per_axis
    }

    pub fn check_compatible(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Deterministic pairwise summation; the split points depend only on the
/// slice length, so results are independent of thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 256;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    let (a, b) = xs.split_at(mid);
    if xs.len() >= 1 << 16 {
        let (sa, sb) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        sa + sb
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Nodal real field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Vec3) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.node(idx)))
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.par_iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        debug_assert!(self.grid.same_lattice(&other.grid));
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Pointwise map with access to the node coordinate.
    pub fn map_with_node(&self, f: impl Fn(Vec3, f64) -> f64 + Sync) -> Self {
        let grid = self.grid;
        ScalarField {
            grid,
            values: self
                .values
                .par_iter()
                .enumerate()
                .map(|(idx, &x)| f(grid.node(idx), x))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

/// Three real components per node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    values: Vec<Vec3>,
}

impl VectorField {
    pub fn new(grid: GridSpec, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} vectors, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        VectorField {
            grid,
            values: vec![[0.0; 3]; grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    pub fn at(&self, idx: usize) -> Vec3 {
        self.values[idx]
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }
}

/// Symmetric 3x3 matrix per node.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrixField {
    grid: GridSpec,
    values: Vec<Sym3>,
}

impl SymMatrixField {
    pub fn new(grid: GridSpec, values: Vec<Sym3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} matrices, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(SymMatrixField { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Sym3] {
        &self.values
    }

    pub fn at(&self, idx: usize) -> Sym3 {
        self.values[idx]
    }

    /// One of the six stored components, in (xx, xy, xz, yy, yz, zz) order.
    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|m| m.to_array()[c]).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrixField {
            grid: self.grid,
            values: self.values.iter().map(|&m| m * s).collect(),
        }
    }

    /// Pointwise Frobenius contraction with another matrix field.
    pub fn contract(&self, other: &SymMatrixField) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(a, b)| a.contract(b))
                .collect(),
        }
    }
}

/// `<v>^k = (1 + |v|^2)^(k/2)` at every node.
pub fn weight_field(grid: &GridSpec, k: f64) -> ScalarField {
    ScalarField::from_fn(*grid, |v| japanese_bracket_pow(v, k))
}

#[inline]
pub fn japanese_bracket_pow(v: Vec3, k: f64) -> f64 {
    (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powf(0.5 * k)
}

/// Midpoint rule: `h^3 * sum(values)`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.cell_volume() * pairwise_sum(&f.values)
}

/// `integrate(f * <v>^k)` over the truncated box.
pub fn moment(f: &ScalarField, k: f64) -> f64 {
    let grid = f.grid;
    let weighted: Vec<f64> = f
        .values
        .par_iter()
        .enumerate()
        .map(|(idx, &x)| {
            if x == 0.0 {
                0.0
            } else {
                x * japanese_bracket_pow(grid.node(idx), k)
            }
        })
        .collect();
    grid.cell_volume() * pairwise_sum(&weighted)
}

/// Mass, momentum, energy, entropy and optional polynomial moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityStats {
    pub mass: f64,
    pub momentum: Vec3,
    pub energy: f64,
    pub entropy: f64,
    /// `(k, integral of f <v>^k)` pairs in the order requested.
    pub moments: Vec<(f64, f64)>,
}

impl DensityStats {
    /// The five conserved quantities in projection order.
    pub fn conserved(&self) -> [f64; 5] {
        [
            self.mass,
            self.momentum[0],
            self.momentum[1],
            self.momentum[2],
            self.energy,
        ]
    }
}

/// The five velocity monomials `1, v1, v2, v3, |v|^2`, integrated against `f`.
pub fn conserved_moments(f: &ScalarField) -> [f64; 5] {
    let grid = f.grid;
    let mut cols: [Vec<f64>; 5] = Default::default();
    for c in cols.iter_mut() {
        c.reserve(grid.len());
    }
    for (idx, &x) in f.values.iter().enumerate() {
        let v = grid.node(idx);
        cols[0].push(x);
        cols[1].push(x * v[0]);
        cols[2].push(x * v[1]);
        cols[3].push(x * v[2]);
        cols[4].push(x * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
    }
    let w = grid.cell_volume();
    std::array::from_fn(|k| w * pairwise_sum(&cols[k]))
}

/// Mass, momentum and energy by quadrature plus the entropy `H(f)`.
pub fn conserved_triple(f: &ScalarField) -> DensityStats {
    let m = conserved_moments(f);
    DensityStats {
        mass: m[0],
        momentum: [m[1], m[2], m[3]],
        energy: m[4],
        entropy: crate::functionals::entropy(f),
        moments: Vec::new(),
    }
}

/// `conserved_triple` plus the moments `integral f <v>^k` for each `k`.
pub fn density_stats(f: &ScalarField, ks: &[f64]) -> DensityStats {
    let mut s = conserved_triple(f);
    s.moments = ks.iter().map(|&k| (k, moment(f, k))).collect();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maxwellian(grid: GridSpec, sigma: f64) -> ScalarField {
        let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-1.5);
        ScalarField::from_fn(grid, |v| {
            norm * (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / (2.0 * sigma * sigma)).exp()
        })
    }

    #[test]
    fn grid_geometry() {
        let g = GridSpec::new(4.0, 8, -3.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.node(0), [-3.5, -3.5, -3.5]);
        let g = GridSpec::new(6.0, 24, -2.5).unwrap();
        assert_eq!(g.spacing(), 0.5);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(GridSpec::new(4.0, 7, -3.0), Err(Error::InvalidGrid(m)) if m.contains("even")));
        assert!(GridSpec::new(0.0, 8, -3.0).is_err());
        assert!(GridSpec::new(4.0, 6, -3.0).is_err());
        assert!(GridSpec::new(4.0, 8, 0.0).is_err());
        assert!(GridSpec::new(4.0, 8, -3.1).is_err());
    }

    #[test]
    fn index_roundtrip_and_nearest() {
        let g = GridSpec::new(3.0, 12, -3.0).unwrap();
        for idx in [0, 17, 999, g.len() - 1] {
            let [i, j, k] = g.unravel(idx);
            assert_eq!(g.index(i, j, k), idx);
            assert_eq!(g.nearest_node(g.node(idx)), idx);
        }
    }

    #[test]
    fn weights() {
        let g = GridSpec::new(4.0, 8, -3.0).unwrap();
        assert!(weight_field(&g, 0.0).values().iter().all(|&x| x == 1.0));
        assert_eq!(japanese_bracket_pow([1.0, 0.0, 0.0], 2.0), 2.0);
        let w = weight_field(&g, -3.0);
        let idx = g.nearest_node([0.0; 3]);
        assert!((w.at(idx) - 1.75_f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_basics() {
        let g = GridSpec::new(4.0, 8, -3.0).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 512.0).abs() < 1e-12);
        assert_eq!(integrate(&ScalarField::zeros(g)), 0.0);
    }

    #[test]
    fn maxwellian_mass_and_moments() {
        let g = GridSpec::new(6.0, 32, -3.0).unwrap();
        let m = maxwellian(g, 1.0);
        assert!((integrate(&m) - 1.0).abs() < 1e-6);
        assert!((moment(&m, 2.0) - 4.0).abs() < 1e-4);
        assert_eq!(moment(&m, 0.0), integrate(&m));
        let s = conserved_triple(&m);
        assert!((s.mass - 1.0).abs() < 1e-6);
        assert!(s.momentum.iter().all(|p| p.abs() < 1e-12));
        assert!((s.energy - 3.0).abs() < 1e-5);
    }

    #[test]
    fn shifted_maxwellian_momentum() {
        let g = GridSpec::new(6.0, 32, -3.0).unwrap();
        let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
        let m = ScalarField::from_fn(g, |v| {
            norm * (-((v[0] - 0.5).powi(2) + v[1] * v[1] + v[2] * v[2]) / 2.0).exp()
        });
        let s = conserved_triple(&m);
        assert!((s.momentum[0] - 0.5).abs() < 1e-6);
        assert!(s.momentum[1].abs() < 1e-12 && s.momentum[2].abs() < 1e-12);
        assert!((s.energy - 3.25).abs() < 1e-5);
    }

    #[test]
    fn stats_are_linear() {
        let g = GridSpec::new(6.0, 16, -3.0).unwrap();
        let a = maxwellian(g, 1.0);
        let b = maxwellian(g, 0.7).map_with_node(|v, x| x * (1.0 + 0.2 * v[0].tanh()));
        let sa = conserved_moments(&a);
        let sb = conserved_moments(&b);
        let sab = conserved_moments(&a.add(&b));
        for k in 0..5 {
            assert!((sab[k] - sa[k] - sb[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn pairwise_sum_is_deterministic_and_accurate() {
        let xs: Vec<f64> = (0..100_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
        let naive: f64 = xs.iter().rev().sum();
        assert!((a - naive).abs() < 1e-10);
    }
}
