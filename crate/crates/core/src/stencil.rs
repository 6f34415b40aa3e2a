//! Second-order central differences with one ghost layer per face.
//!
//! Ghost values are extrapolated along each axis in turn (x faces, then y,
//! then z), so edges and corners are filled from already-extended data.
//! Quadratic extrapolation `u_ghost = 3 u_0 - 3 u_1 + u_2` is exact for
//! quadratics; the logarithmic variant applies the same rule to `ln u`, which
//! reproduces Gaussians exactly. This is the single boundary policy shared by
//! the diagnostics and the time stepper.

use rayon::prelude::*;

use crate::grid::{ScalarField, SymMatrixField, VectorField};
use crate::linalg::{Sym3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhostPolicy {
    /// Quadratic polynomial extrapolation.
    Polynomial,
    /// Quadratic extrapolation of `ln u` for positive data; cells touching
    /// non-positive values fall back to polynomial extrapolation clamped at 0.
    LogPolynomial,
    /// `LogPolynomial` when the field is non-negative, `Polynomial` otherwise.
    Auto,
}

impl GhostPolicy {
    fn resolve(self, values: &[f64]) -> GhostPolicy {
        match self {
            GhostPolicy::Auto => {
                if values.iter().all(|&x| x >= 0.0) {
                    GhostPolicy::LogPolynomial
                } else {
                    GhostPolicy::Polynomial
                }
            }
            p => p,
        }
    }

    #[inline]
    fn extrapolate(self, u0: f64, u1: f64, u2: f64) -> f64 {
        match self {
            GhostPolicy::LogPolynomial if u0 > 0.0 && u1 > 0.0 && u2 > 0.0 => {
                let (l0, l1, l2) = (u0.ln(), u1.ln(), u2.ln());
                // convex log profiles (rough tails) are extrapolated linearly,
                // and the ghost never exceeds the values it was built from
                let l = (3.0 * l0 - 3.0 * l1 + l2).min(2.0 * l0 - l1);
                l.exp().min(u0.max(u1).max(u2))
            }
            GhostPolicy::LogPolynomial => (3.0 * u0 - 3.0 * u1 + u2).max(0.0),
            _ => 3.0 * u0 - 3.0 * u1 + u2,
        }
    }
}

/// Field values on the `(N + 2)^3` lattice including the ghost layer.
pub(crate) struct Extended {
    m: usize,
    data: Vec<f64>,
}

impl Extended {
    pub(crate) fn new(field: &ScalarField, policy: GhostPolicy) -> Self {
        let n = field.grid().points_per_axis();
        let m = n + 2;
        let policy = policy.resolve(field.values());
        let mut data = vec![0.0; m * m * m];
        let src = field.values();
        for i in 0..n {
            for j in 0..n {
                let dst = ((i + 1) * m + j + 1) * m + 1;
                let s = (i * n + j) * n;
                data[dst..dst + n].copy_from_slice(&src[s..s + n]);
            }
        }
        let at = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
        // x faces, interior (j, k)
        for j in 1..=n {
            for k in 1..=n {
                data[at(0, j, k)] =
                    policy.extrapolate(data[at(1, j, k)], data[at(2, j, k)], data[at(3, j, k)]);
                data[at(n + 1, j, k)] = policy.extrapolate(
                    data[at(n, j, k)],
                    data[at(n - 1, j, k)],
                    data[at(n - 2, j, k)],
                );
            }
        }
        // y faces over all i (ghost i included)
        for i in 0..m {
            for k in 1..=n {
                data[at(i, 0, k)] =
                    policy.extrapolate(data[at(i, 1, k)], data[at(i, 2, k)], data[at(i, 3, k)]);
                data[at(i, n + 1, k)] = policy.extrapolate(
                    data[at(i, n, k)],
                    data[at(i, n - 1, k)],
                    data[at(i, n - 2, k)],
                );
            }
        }
        // z faces over everything
        for i in 0..m {
            for j in 0..m {
                data[at(i, j, 0)] =
                    policy.extrapolate(data[at(i, j, 1)], data[at(i, j, 2)], data[at(i, j, 3)]);
                data[at(i, j, n + 1)] = policy.extrapolate(
                    data[at(i, j, n)],
                    data[at(i, j, n - 1)],
                    data[at(i, j, n - 2)],
                );
            }
        }
        Extended { m, data }
    }

    fn map(&self, op: impl Fn(f64) -> f64 + Sync) -> Self {
        Extended {
            m: self.m,
            data: self.data.par_iter().map(|&x| op(x)).collect(),
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.m + j) * self.m + k]
    }

    /// Central gradient at physical node `(i, j, k)`.
    #[inline]
    pub(crate) fn gradient_at(&self, [i, j, k]: [usize; 3], h: f64) -> Vec3 {
        let (i, j, k) = (i + 1, j + 1, k + 1);
        let s = 0.5 / h;
        [
            (self.get(i + 1, j, k) - self.get(i - 1, j, k)) * s,
            (self.get(i, j + 1, k) - self.get(i, j - 1, k)) * s,
            (self.get(i, j, k + 1) - self.get(i, j, k - 1)) * s,
        ]
    }

    /// Central Hessian at physical node `(i, j, k)`; the mixed terms use the
    /// four diagonal neighbours.
    #[inline]
    pub(crate) fn hessian_at(&self, [i, j, k]: [usize; 3], h: f64) -> Sym3 {
        let (i, j, k) = (i + 1, j + 1, k + 1);
        let c = self.get(i, j, k);
        let d2 = 1.0 / (h * h);
        let x4 = 0.25 * d2;
        Sym3 {
            xx: (self.get(i + 1, j, k) - 2.0 * c + self.get(i - 1, j, k)) * d2,
            yy: (self.get(i, j + 1, k) - 2.0 * c + self.get(i, j - 1, k)) * d2,
            zz: (self.get(i, j, k + 1) - 2.0 * c + self.get(i, j, k - 1)) * d2,
            xy: (self.get(i + 1, j + 1, k) - self.get(i + 1, j - 1, k)
                - self.get(i - 1, j + 1, k)
                + self.get(i - 1, j - 1, k))
                * x4,
            xz: (self.get(i + 1, j, k + 1) - self.get(i + 1, j, k - 1)
                - self.get(i - 1, j, k + 1)
                + self.get(i - 1, j, k - 1))
                * x4,
            yz: (self.get(i, j + 1, k + 1) - self.get(i, j + 1, k - 1)
                - self.get(i, j - 1, k + 1)
                + self.get(i, j - 1, k - 1))
                * x4,
        }
    }
}

pub fn gradient_with(f: &ScalarField, policy: GhostPolicy) -> VectorField {
    let grid = *f.grid();
    let ext = Extended::new(f, policy);
    let h = grid.spacing();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| ext.gradient_at(grid.unravel(idx), h))
        .collect();
    VectorField::new(grid, values).expect("sized by grid")
}

pub fn hessian_with(f: &ScalarField, policy: GhostPolicy) -> SymMatrixField {
    let grid = *f.grid();
    let ext = Extended::new(f, policy);
    let h = grid.spacing();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| ext.hessian_at(grid.unravel(idx), h))
        .collect();
    SymMatrixField::new(grid, values).expect("sized by grid")
}

/// Hessian of a density for the evolution operator.
///
/// Under a log policy (or `Auto` on non-negative data) the Hessian is taken as
/// `f (hess ln f + grad ln f grad ln f^T)` with central differences of `ln f`,
/// which is exact for Gaussians; nodes whose stencil touches a non-positive
/// value use the plain central Hessian. `Polynomial` gives the plain Hessian
/// everywhere, which keeps the operator linear in `f`.
pub fn density_hessian(f: &ScalarField, policy: GhostPolicy) -> SymMatrixField {
    let grid = *f.grid();
    let policy = policy.resolve(f.values());
    let ext = Extended::new(f, policy);
    if policy == GhostPolicy::Polynomial {
        let h = grid.spacing();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| ext.hessian_at(grid.unravel(idx), h))
            .collect();
        return SymMatrixField::new(grid, values).expect("sized by grid");
    }
    let log_ext = ext.map(|x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY });
    let h = grid.spacing();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let node = grid.unravel(idx);
            let u = f.at(idx);
            if u > 0.0 {
                let d = log_ext.gradient_at(node, h);
                let l = log_ext.hessian_at(node, h);
                if d.iter().all(|x| x.is_finite()) && l.to_array().iter().all(|x| x.is_finite()) {
                    return (l + Sym3::outer(d)) * u;
                }
            }
            ext.hessian_at(node, h)
        })
        .collect();
    SymMatrixField::new(grid, values).expect("sized by grid")
}

/// Central-difference gradient with the automatic ghost policy.
pub fn gradient(f: &ScalarField) -> VectorField {
    gradient_with(f, GhostPolicy::Auto)
}

/// Central-difference Hessian with the automatic ghost policy.
pub fn hessian(f: &ScalarField) -> SymMatrixField {
    hessian_with(f, GhostPolicy::Auto)
}

/// `grad sqrt(f)` for a non-negative density.
///
/// Where `f` is positive on the whole stencil this is `sqrt(f) grad(ln f) / 2`
/// with `grad(ln f)` differenced in log space (exact for Gaussians); elsewhere
/// it is the plain central difference of `sqrt(f)`.
pub fn sqrt_gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let h = grid.spacing();
    let ln_f = f.map(|x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY });
    let sqrt_f = f.map(|x| x.max(0.0).sqrt());
    let log_ext = Extended::new(&ln_f, GhostPolicy::Polynomial);
    let sqrt_ext = Extended::new(&sqrt_f, GhostPolicy::LogPolynomial);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let node = grid.unravel(idx);
            let s = sqrt_f.at(idx);
            if s > 0.0 {
                let d = log_ext.gradient_at(node, h);
                if d.iter().all(|x| x.is_finite()) {
                    return [0.5 * s * d[0], 0.5 * s * d[1], 0.5 * s * d[2]];
                }
            }
            sqrt_ext.gradient_at(node, h)
        })
        .collect();
    VectorField::new(grid, values).expect("sized by grid")
}

/// `grad ln g` on nodes where `g > threshold` (and on their whole stencil);
/// zero elsewhere. Returns the field and the trusted-node mask.
pub fn masked_log_gradient(g: &ScalarField, threshold: f64) -> (VectorField, Vec<bool>) {
    let grid = *g.grid();
    let h = grid.spacing();
    let ln_g = g.map(|x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY });
    let ext = Extended::new(&ln_g, GhostPolicy::Polynomial);
    let (values, mask): (Vec<Vec3>, Vec<bool>) = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if g.at(idx) <= threshold {
                return ([0.0; 3], false);
            }
            let d = ext.gradient_at(grid.unravel(idx), h);
            if d.iter().all(|x| x.is_finite()) {
                (d, true)
            } else {
                ([0.0; 3], false)
            }
        })
        .unzip();
    (VectorField::new(grid, values).expect("sized by grid"), mask)
}

/// Observed convergence order from errors at spacing `h` and `h / 2`.
pub fn richardson_order(coarse_error: f64, fine_error: f64) -> f64 {
    (coarse_error / fine_error).log2()
}
