//! Shared fixtures and independent oracles for the integration suites.
//! Everything here computes expected values by routes disjoint from the
//! library paths under test (closed forms, characteristic polynomials,
//! series expansions, dense scans, plain-grid Newton).

#![allow(dead_code)]

use patchsis::{
    build_connectivity, ConnectivityMatrix, DenseMatrix, EpidemicParameters,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Star fixture used across the suites.
pub fn star4() -> (ConnectivityMatrix, Vec<f64>) {
    (patchsis::star_example::graph(), patchsis::star_example::alpha())
}

pub fn star4_params(d_s: f64, d_i: f64) -> EpidemicParameters {
    patchsis::star_example::parameters(d_s, d_i)
}

/// Random quasi-positive matrix with strictly positive off-diagonals
/// (hence irreducible) and mixed-sign diagonal.
pub fn random_quasi_positive(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, |j, k| {
        if j == k {
            rng.gen_range(-2.0..2.0)
        } else {
            rng.gen_range(0.2..2.0)
        }
    })
    .unwrap()
}

pub fn random_connectivity(rng: &mut ChaCha8Rng, n: usize) -> ConnectivityMatrix {
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| if j == k { 0.0 } else { rng.gen_range(0.1..2.0) })
                .collect()
        })
        .collect();
    build_connectivity(&raw).unwrap()
}

pub fn random_symmetric_connectivity(rng: &mut ChaCha8Rng, n: usize) -> ConnectivityMatrix {
    let mut raw = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in j + 1..n {
            let w = rng.gen_range(0.2..2.0);
            raw[j][k] = w;
            raw[k][j] = w;
        }
    }
    build_connectivity(&raw).unwrap()
}

/// Rates with a guaranteed strict risk partition (gamma positive everywhere,
/// `high` patches strictly high-risk, the rest strictly low-risk).
pub fn random_strict_rates(
    rng: &mut ChaCha8Rng,
    n: usize,
    high: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut beta = vec![0.0; n];
    let mut gamma = vec![0.0; n];
    for j in 0..n {
        if j < high {
            gamma[j] = rng.gen_range(0.2..1.5);
            beta[j] = gamma[j] + rng.gen_range(0.3..2.0);
        } else {
            gamma[j] = rng.gen_range(0.8..3.0);
            beta[j] = gamma[j] * rng.gen_range(0.0..0.7);
        }
    }
    (beta, gamma)
}

/// Largest real part among the roots of the characteristic polynomial of a
/// 3x3 matrix, via the closed-form cubic solution.
pub fn cubic_spectral_bound_oracle(a: &DenseMatrix) -> f64 {
    assert_eq!(a.dim(), 3);
    let e = |j: usize, k: usize| a[(j, k)];
    let tr = e(0, 0) + e(1, 1) + e(2, 2);
    let minors = e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0) + e(0, 0) * e(2, 2)
        - e(0, 2) * e(2, 0)
        + e(1, 1) * e(2, 2)
        - e(1, 2) * e(2, 1);
    let det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
        - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
    // char poly: x^3 + b x^2 + c x + d
    let b = -tr;
    let c = minors;
    let d = -det;
    // depressed cubic t^3 + p t + q with x = t - b/3
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    if disc >= 0.0 {
        // three real roots, trigonometric form
        if p >= 0.0 {
            // p ~ 0 (triple root); fall back to the real root of t^3 = -q
            return shift + (-q).cbrt();
        }
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos();
        (0..3)
            .map(|k| shift + m * ((theta - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        // one real root (Cardano) and a conjugate pair with real part -t1/2
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let t1 = u + v;
        (shift + t1).max(shift - t1 / 2.0)
    }
}

/// exp(A t) for 2x2 A by scaling and squaring with a Taylor kernel.
pub fn expm_2x2_oracle(a: &DenseMatrix, t: f64) -> [[f64; 2]; 2] {
    assert_eq!(a.dim(), 2);
    let norm = a.max_abs() * t.abs();
    let k = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = t / (2f64.powi(k as i32));
    let b = [
        [a[(0, 0)] * scale, a[(0, 1)] * scale],
        [a[(1, 0)] * scale, a[(1, 1)] * scale],
    ];
    let mul = |x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]| {
        let mut z = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    // Taylor series of exp(b)
    let mut result = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    for m in 1..=24 {
        term = mul(&term, &b);
        for i in 0..2 {
            for j in 0..2 {
                term[i][j] /= m as f64;
                result[i][j] += term[i][j];
            }
        }
    }
    let mut out = result;
    for _ in 0..k {
        out = mul(&out, &out);
    }
    out
}

/// Auxiliary-system oracle for n = 2: dense grid over the open box followed
/// by a plain Newton iteration (own 2x2 solve) from the best grid point.
pub fn aux_grid_newton_oracle_2(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    d: f64,
) -> Vec<f64> {
    assert_eq!(l.n(), 2);
    let field = |x: &[f64]| -> [f64; 2] {
        let mut out = [0.0; 2];
        for j in 0..2 {
            let mut coupling = 0.0;
            for k in 0..2 {
                coupling += l.matrix()[(j, k)] * x[k];
            }
            let den = d * (alpha[j] - x[j]) + x[j];
            out[j] = d_i * coupling + x[j] * (beta[j] - gamma[j] - beta[j] * x[j] / den);
        }
        out
    };
    // best interior grid point, staying away from the trivial zero solution
    let mut best = (f64::INFINITY, [0.0; 2]);
    let m = 120;
    for i in 1..m {
        for j in 1..m {
            let x = [
                alpha[0] * i as f64 / m as f64,
                alpha[1] * j as f64 / m as f64,
            ];
            if x[0] < 2e-2 * alpha[0] && x[1] < 2e-2 * alpha[1] {
                continue;
            }
            let g = field(&x);
            let r = g[0].abs().max(g[1].abs());
            if r < best.0 {
                best = (r, x);
            }
        }
    }
    let mut x = best.1;
    for _ in 0..80 {
        let g = field(&x);
        if g[0].abs().max(g[1].abs()) < 1e-13 {
            break;
        }
        // Jacobian by central differences, inverted in closed form
        let h = 1e-8;
        let mut jac = [[0.0; 2]; 2];
        for col in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[col] += h;
            xm[col] -= h;
            let gp = field(&xp);
            let gm = field(&xm);
            for row in 0..2 {
                jac[row][col] = (gp[row] - gm[row]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        assert!(det.abs() > 1e-14, "oracle Newton hit a singular Jacobian");
        let dx = [
            (jac[1][1] * g[0] - jac[0][1] * g[1]) / det,
            (-jac[1][0] * g[0] + jac[0][0] * g[1]) / det,
        ];
        x[0] -= dx[0];
        x[1] -= dx[1];
    }
    let g = field(&x);
    assert!(
        g[0].abs().max(g[1].abs()) < 1e-10,
        "oracle Newton did not converge"
    );
    vec![x[0], x[1]]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
