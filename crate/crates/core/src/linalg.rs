//! Small dense linear algebra: symmetric 3x3 matrices and 3-vectors.

use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::{Matrix3, SymmetricEigen};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Symmetric 3x3 matrix stored by its upper triangle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

/// Closed-form eigenvalues lose accuracy when the spectrum is nearly
/// degenerate; below this gap we hand over to the iterative solver.
const CLOSED_FORM_GAP: f64 = 1e-5;

impl Sym3 {
    pub const ZERO: Sym3 = Sym3 {
        xx: 0.0,
        xy: 0.0,
        xz: 0.0,
        yy: 0.0,
        yz: 0.0,
        zz: 0.0,
    };

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        Sym3 {
            xx: a,
            xy: 0.0,
            xz: 0.0,
            yy: b,
            yz: 0.0,
            zz: c,
        }
    }

    pub const fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    pub fn scalar(s: f64) -> Self {
        Self::diag(s, s, s)
    }

    pub fn outer(v: Vec3) -> Self {
        Sym3 {
            xx: v[0] * v[0],
            xy: v[0] * v[1],
            xz: v[0] * v[2],
            yy: v[1] * v[1],
            yz: v[1] * v[2],
            zz: v[2] * v[2],
        }
    }

    /// Components in storage order (xx, xy, xz, yy, yz, zz).
    pub fn to_array(self) -> [f64; 6] {
        [self.xx, self.xy, self.xz, self.yy, self.yz, self.zz]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Sym3 {
            xx: a[0],
            xy: a[1],
            xz: a[2],
            yy: a[3],
            yz: a[4],
            zz: a[5],
        }
    }

    /// Entry (i, j) of the full matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.xx,
            (0, 1) => self.xy,
            (0, 2) => self.xz,
            (1, 1) => self.yy,
            (1, 2) => self.yz,
            (2, 2) => self.zz,
            _ => panic!("index ({i}, {j}) out of range"),
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn det(&self) -> f64 {
        self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        [
            self.xx * v[0] + self.xy * v[1] + self.xz * v[2],
            self.xy * v[0] + self.yy * v[1] + self.yz * v[2],
            self.xz * v[0] + self.yz * v[1] + self.zz * v[2],
        ]
    }

    /// Quadratic form <A x, y>.
    pub fn bilinear(&self, x: Vec3, y: Vec3) -> f64 {
        dot(self.apply(x), y)
    }

    /// Frobenius inner product A : B.
    pub fn contract(&self, other: &Sym3) -> f64 {
        self.xx * other.xx
            + self.yy * other.yy
            + self.zz * other.zz
            + 2.0 * (self.xy * other.xy + self.xz * other.xz + self.yz * other.yz)
    }

    pub fn frobenius(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    fn to_nalgebra(self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.xz, self.xy, self.yy, self.yz, self.xz, self.yz, self.zz,
        )
    }

    /// Eigenvalues in ascending order.
    ///
    /// Uses the trigonometric closed form and falls back to a Householder
    /// tridiagonal QR solve when two eigenvalues nearly coincide.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let off = self.xy * self.xy + self.xz * self.xz + self.yz * self.yz;
        let scale = self.max_abs_entry();
        if scale == 0.0 {
            return [0.0; 3];
        }
        if off <= (1e-30 * scale) * scale {
            let mut d = [self.xx, self.yy, self.zz];
            d.sort_by(f64::total_cmp);
            return d;
        }
        let q = self.trace() / 3.0;
        let p2 = (self.xx - q).powi(2) + (self.yy - q).powi(2) + (self.zz - q).powi(2) + 2.0 * off;
        let p = (p2 / 6.0).sqrt();
        let b = Sym3 {
            xx: (self.xx - q) / p,
            yy: (self.yy - q) / p,
            zz: (self.zz - q) / p,
            xy: self.xy / p,
            xz: self.xz / p,
            yz: self.yz / p,
        };
        let r = (b.det() / 2.0).clamp(-1.0, 1.0);
        if 1.0 - r.abs() < CLOSED_FORM_GAP {
            return self.eigenvalues_iterative();
        }
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let mid = 3.0 * q - hi - lo;
        [lo, mid, hi]
    }

    fn eigenvalues_iterative(&self) -> [f64; 3] {
        let eig = SymmetricEigen::new(self.to_nalgebra());
        let mut d = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        d.sort_by(f64::total_cmp);
        d
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[2]
    }

    /// Largest eigenvalue in absolute value (operator norm).
    pub fn operator_norm(&self) -> f64 {
        let e = self.eigenvalues();
        e[0].abs().max(e[2].abs())
    }

    /// Unit eigenvector of the smallest eigenvalue.
    pub fn min_eigenvector(&self) -> Vec3 {
        let eig = SymmetricEigen::new(self.to_nalgebra());
        let (k, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("three eigenvalues");
        let c = eig.eigenvectors.column(k);
        [c[0], c[1], c[2]]
    }
}

impl Add for Sym3 {
    type Output = Sym3;
    fn add(self, o: Sym3) -> Sym3 {
        Sym3::from_array(std::array::from_fn(|i| {
            self.to_array()[i] + o.to_array()[i]
        }))
    }
}

impl AddAssign for Sym3 {
    fn add_assign(&mut self, o: Sym3) {
        *self = *self + o;
    }
}

impl Sub for Sym3 {
    type Output = Sym3;
    fn sub(self, o: Sym3) -> Sym3 {
        Sym3::from_array(std::array::from_fn(|i| {
            self.to_array()[i] - o.to_array()[i]
        }))
    }
}

impl Mul<f64> for Sym3 {
    type Output = Sym3;
    fn mul(self, s: f64) -> Sym3 {
        Sym3::from_array(self.to_array().map(|x| x * s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_eigs(m: &Sym3) -> [f64; 3] {
        m.eigenvalues_iterative()
    }

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let m = Sym3::diag(3.0, -1.0, 2.0);
        assert_eq!(m.eigenvalues(), [-1.0, 2.0, 3.0]);
    }

    #[test]
    fn closed_form_matches_iterative() {
        let m = Sym3 {
            xx: 2.0,
            xy: 0.3,
            xz: -0.7,
            yy: 1.1,
            yz: 0.25,
            zz: -0.4,
        };
        let a = m.eigenvalues();
        let b = reference_eigs(&m);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn near_degenerate_spectrum_is_accurate() {
        // rank-one perturbation of the identity: eigenvalues (1, 1, 1 + 3e-9)
        let v = [1.0, 1.0, 1.0];
        let m = Sym3::identity() + Sym3::outer(v) * 1e-9;
        let e = m.eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-14);
        assert!((e[1] - 1.0).abs() < 1e-14);
        assert!((e[2] - (1.0 + 3e-9)).abs() < 1e-14);
    }

    #[test]
    fn contraction_and_apply() {
        let a = Sym3::outer([1.0, 2.0, 3.0]);
        assert!((a.contract(&Sym3::identity()) - 14.0).abs() < 1e-15);
        assert_eq!(a.apply([1.0, 0.0, 0.0]), [1.0, 2.0, 3.0]);
        assert_eq!(a.get(2, 1), 6.0);
    }

    #[test]
    fn min_eigenvector_of_projection_is_null_direction() {
        let z = [0.3, -1.2, 0.5];
        let n = norm(z);
        let p = Sym3::identity() - Sym3::outer(scale(z, 1.0 / n));
        let e = p.min_eigenvector();
        let cos = dot(e, z).abs() / n;
        assert!((cos - 1.0).abs() < 1e-12);
    }
}
