mod common;

use common::*;
use landau_lab::grid::{conserved_triple, integrate, moment};
use landau_lab::stencil::{gradient_with, GhostPolicy};

/// `E[(1 + |v|^2)^6]` for the unit Gaussian: `|v|^2` is chi-squared with 3
/// degrees of freedom and `E[X^k] = 3 * 5 * ... * (2k + 1)`.
fn chi_moment_12() -> f64 {
    let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
    let mut raw = 1.0;
    let mut total = 0.0;
    for (k, b) in binom.iter().enumerate() {
        if k > 0 {
            raw *= (2 * k + 1) as f64;
        }
        total += b * raw;
    }
    total
}

#[test]
fn gaussian_quadrature_on_the_reference_grid() {
    let grid = grid(6.0, 32, -3.0);
    let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
    let m = landau_lab::ScalarField::from_fn(grid, |v| norm * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp());
    assert!((integrate(&m) - 1.0).abs() < 1e-6);
    assert!((moment(&m, 2.0) - 4.0).abs() < 1e-4);
    let m12 = moment(&m, 12.0);
    let oracle = chi_moment_12();
    assert!((m12 - oracle).abs() <= 1e-3 * oracle, "{m12} vs {oracle}");
}

#[test]
fn shifted_maxwellian_momentum() {
    let grid = grid(6.0, 32, -3.0);
    let m = maxwellian(grid, 0.5, [0.5, 0.0, 0.0]);
    let s = conserved_triple(&m);
    assert!((s.mass - 1.0).abs() < 1e-12);
    assert!((s.momentum[0] - 0.5).abs() < 1e-6 && s.momentum[1].abs() < 1e-12);
    assert!((s.energy - 3.25).abs() < 1e-5);
}

#[test]
fn log_gradient_converges_at_second_order() {
    let err = |n: usize| {
        let grid = grid(6.0, n, -3.0);
        let m = maxwellian(grid, 0.5, [0.0; 3]);
        let ln = m.map(f64::ln);
        let d = gradient_with(&ln, GhostPolicy::Polynomial);
        let i = grid.nearest_node([1.0, 0.0, 0.0]);
        let v = grid.node(i);
        (0..3).map(|c| (d.at(i)[c] + v[c]).abs()).fold(0.0, f64::max)
    };
    let (a, b) = (err(16), err(32));
    // ln M is quadratic, so the central stencil is exact up to rounding
    assert!(a < 1e-10 && b < 1e-10, "{a:e} {b:e}");
}
