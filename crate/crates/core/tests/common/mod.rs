//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use landau_lab::coefficients::{full_origin_weight, scalar_origin_weight, CoefficientEngine, KernelKind};
use landau_lab::functionals::PairFields;
use landau_lab::linalg::{Sym3, Vec3};
use landau_lab::{GridSpec, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(l: f64, n: usize, gamma: f64) -> GridSpec {
    GridSpec::new(l, n, gamma).unwrap()
}

/// `exp(-mu |v - m|^2)` normalised to unit discrete mass.
pub fn maxwellian(grid: GridSpec, mu: f64, m: Vec3) -> ScalarField {
    let f = ScalarField::from_fn(grid, |v| {
        let d = [v[0] - m[0], v[1] - m[1], v[2] - m[2]];
        (-mu * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])).exp()
    });
    let mass: f64 = f.values().iter().sum::<f64>() * grid.cell_volume();
    f.scaled(1.0 / mass)
}

/// `M (1 + amp cos(pi v_1 / L))`, renormalised to unit mass.
pub fn bumped(grid: GridSpec, mu: f64, amp: f64) -> ScalarField {
    let l = grid.half_width();
    let m = maxwellian(grid, mu, [0.0; 3]);
    let f = m.map_with_node(|v, x| x * (1.0 + amp * (std::f64::consts::PI * v[0] / l).cos()));
    let mass: f64 = f.values().iter().sum::<f64>() * grid.cell_volume();
    f.scaled(1.0 / mass)
}

/// Smooth random density: a Maxwellian with random rate and centre times a
/// positive random trigonometric factor, normalised.
pub fn random_density(grid: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    let mu = rng.random_range(0.35..0.9);
    let m: Vec3 = std::array::from_fn(|_| rng.random_range(-0.6..0.6));
    let k: Vec3 = std::array::from_fn(|_| rng.random_range(-1.2..1.2));
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let amp = rng.random_range(0.0..0.5);
    let base = maxwellian(grid, mu, m);
    let f = base.map_with_node(|v, x| x * (1.0 + amp * (k[0] * v[0] + k[1] * v[1] + k[2] * v[2] + phase).sin()));
    let mass: f64 = f.values().iter().sum::<f64>() * grid.cell_volume();
    f.scaled(1.0 / mass)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|z|^(gamma+2) (I - z z^T / |z|^2)` or its cut-off variant, written out
/// independently of the library.
fn kernel(kind: KernelKind, gamma: f64, z: Vec3) -> [f64; 6] {
    let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    let scale = match kind {
        KernelKind::Full => r2.powf(0.5 * gamma),
        KernelKind::CutOff => (1.0 + r2).powf(0.5 * gamma),
    };
    [
        scale * (r2 - z[0] * z[0]),
        -scale * z[0] * z[1],
        -scale * z[0] * z[2],
        scale * (r2 - z[1] * z[1]),
        -scale * z[1] * z[2],
        scale * (r2 - z[2] * z[2]),
    ]
}

/// Direct `O(N^6)` evaluation of `a_bar` at every node, with the same origin
/// rule and curvature correction as the engine.
pub fn brute_a_bar(g: &ScalarField, kind: KernelKind) -> Vec<Sym3> {
    let grid = *g.grid();
    let (gamma, h, w) = (grid.gamma(), grid.spacing(), grid.cell_volume());
    let nodes: Vec<Vec3> = (0..grid.len()).map(|i| grid.node(i)).collect();
    let correction = match kind {
        KernelKind::Full => Some(CoefficientEngine::new(grid).full_curvature_correction(g)),
        KernelKind::CutOff => None,
    };
    (0..grid.len())
        .map(|i| {
            let mut acc = [0.0; 6];
            for (j, vj) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let z = [nodes[i][0] - vj[0], nodes[i][1] - vj[1], nodes[i][2] - vj[2]];
                let k = kernel(kind, gamma, z);
                for c in 0..6 {
                    acc[c] += k[c] * g.at(j) * w;
                }
            }
            let mut a = Sym3::from_array(acc);
            if let Some(corr) = &correction {
                a = a + Sym3::scalar(full_origin_weight(gamma, h) * w * g.at(i)) + corr[i];
            }
            a
        })
        .collect()
}

/// Direct evaluation of `c_bar` for `gamma > -3`.
pub fn brute_c_bar(g: &ScalarField) -> Vec<f64> {
    let grid = *g.grid();
    let (gamma, h, w) = (grid.gamma(), grid.spacing(), grid.cell_volume());
    let corr = CoefficientEngine::new(grid).scalar_curvature_correction(g);
    let nodes: Vec<Vec3> = (0..grid.len()).map(|i| grid.node(i)).collect();
    (0..grid.len())
        .map(|i| {
            let mut acc = 0.0;
            for (j, vj) in nodes.iter().enumerate() {
                if j != i {
                    let z = [nodes[i][0] - vj[0], nodes[i][1] - vj[1], nodes[i][2] - vj[2]];
                    acc += (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).powf(0.5 * gamma) * g.at(j) * w;
                }
            }
            2.0 * (gamma + 3.0) * (acc + scalar_origin_weight(gamma, h) * w * g.at(i) + corr[i])
        })
        .collect()
}

/// `2 h^6 sum_{k != l} a(v_k - v_l) : (b_l A_k - b_k A_l)^(x)2`.
pub fn brute_pair_quadratic(grid: GridSpec, p: &PairFields) -> f64 {
    let w = grid.cell_volume();
    let nodes: Vec<Vec3> = (0..grid.len()).map(|i| grid.node(i)).collect();
    let mut total = 0.0;
    for k in 0..grid.len() {
        for l in 0..grid.len() {
            if k == l {
                continue;
            }
            let z = [nodes[k][0] - nodes[l][0], nodes[k][1] - nodes[l][1], nodes[k][2] - nodes[l][2]];
            let a = Sym3::from_array(kernel(KernelKind::Full, grid.gamma(), z));
            let x: Vec3 = std::array::from_fn(|c| p.b[l] * p.a[k][c] - p.b[k] * p.a[l][c]);
            total += a.bilinear(x, x);
        }
    }
    2.0 * w * w * total
}

/// `-2 h^6 sum_{k != l} b_k A_k . a(v_k - v_l) (q_k - q_l) (f_l - g_l)`.
pub fn brute_bad_term(f: &ScalarField, g: &ScalarField, p: &PairFields) -> f64 {
    let grid = *f.grid();
    let w = grid.cell_volume();
    let nodes: Vec<Vec3> = (0..grid.len()).map(|i| grid.node(i)).collect();
    let mut total = 0.0;
    for k in 0..grid.len() {
        for l in 0..grid.len() {
            if k == l {
                continue;
            }
            let z = [nodes[k][0] - nodes[l][0], nodes[k][1] - nodes[l][1], nodes[k][2] - nodes[l][2]];
            let a = Sym3::from_array(kernel(KernelKind::Full, grid.gamma(), z));
            let dq: Vec3 = std::array::from_fn(|c| p.q[k][c] - p.q[l][c]);
            total += p.b[k] * a.bilinear(p.a[k], dq) * (f.at(l) - g.at(l));
        }
    }
    -2.0 * w * w * total
}

/// Largest entrywise difference relative to the largest entry of `reference`.
pub fn rel_max_diff(a: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    a.iter().zip(reference).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn flatten(m: &[Sym3]) -> Vec<f64> {
    m.iter().flat_map(|s| s.to_array()).collect()
}
