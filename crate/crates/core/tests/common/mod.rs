//! Independent oracles shared by the integration tests. None of these call
//! into the solver paths they check.
#![allow(dead_code)]

use comp_core::equilibrium::{CeMode, GameMode, PayoffTable};
use comp_core::numerics::{Complex64, ComplexMatrix};
use comp_core::rates::RatePair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// A·Aᴴ + shift·I, Hermitian positive definite for shift > 0.
pub fn random_hpd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    let mut g = &a * &a.adjoint();
    for i in 0..n {
        g[(i, i)] += Complex64::new(shift, 0.0);
    }
    g
}

/// Laplace expansion along the first row.
pub fn cofactor_det(m: &ComplexMatrix) -> Complex64 {
    let n = m.rows();
    assert_eq!(n, m.cols());
    if n == 1 {
        return m[(0, 0)];
    }
    let mut det = Complex64::new(0.0, 0.0);
    for c in 0..n {
        let minor = ComplexMatrix::from_fn(n - 1, n - 1, |i, j| m[(i + 1, if j < c { j } else { j + 1 })]);
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        det += m[(0, c)] * cofactor_det(&minor) * sign;
    }
    det
}

/// Rank of the column set by modified Gram–Schmidt with relative cutoff.
pub fn gram_schmidt_rank(m: &ComplexMatrix, tol: f64) -> usize {
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for c in 0..m.cols() {
        let mut v: Vec<Complex64> = (0..m.rows()).map(|r| m[(r, c)]).collect();
        for q in &basis {
            let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol * scale {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis.len()
}

pub fn random_table(rng: &mut ChaCha8Rng, nm: usize, nf: usize) -> PayoffTable {
    let payoffs = (0..nm * nf)
        .map(|_| RatePair::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
        .collect();
    PayoffTable::new(GameMode::Uncoordinated, nm, nf, payoffs).unwrap()
}

/// Largest violation of the equilibrium inequalities, written straight from
/// the definitions (positive means violated).
pub fn ce_violation(t: &PayoffTable, p: &[f64], mode: CeMode) -> f64 {
    let (nm, nf) = (t.n_macro(), t.n_femto());
    let pr = |i: usize, j: usize| p[i * nf + j];
    let um = |i: usize, j: usize| t.get(i, j).macro_rate;
    let uf = |i: usize, j: usize| t.get(i, j).femto_rate;
    let mut worst = f64::NEG_INFINITY;
    match mode {
        CeMode::Correlated => {
            for a in 0..nm {
                for d in 0..nm {
                    let gain: f64 = (0..nf).map(|b| pr(a, b) * (um(d, b) - um(a, b))).sum();
                    worst = worst.max(gain);
                }
            }
            for b in 0..nf {
                for d in 0..nf {
                    let gain: f64 = (0..nm).map(|a| pr(a, b) * (uf(a, d) - uf(a, b))).sum();
                    worst = worst.max(gain);
                }
            }
        }
        CeMode::Coarse => {
            let value_m: f64 = (0..nm).flat_map(|a| (0..nf).map(move |b| (a, b))).map(|(a, b)| pr(a, b) * um(a, b)).sum();
            let value_f: f64 = (0..nm).flat_map(|a| (0..nf).map(move |b| (a, b))).map(|(a, b)| pr(a, b) * uf(a, b)).sum();
            for d in 0..nm {
                let dev: f64 = (0..nm).flat_map(|a| (0..nf).map(move |b| (a, b))).map(|(a, b)| pr(a, b) * um(d, b)).sum();
                worst = worst.max(dev - value_m);
            }
            for d in 0..nf {
                let dev: f64 = (0..nm).flat_map(|a| (0..nf).map(move |b| (a, b))).map(|(a, b)| pr(a, b) * uf(a, d)).sum();
                worst = worst.max(dev - value_f);
            }
        }
    }
    for &x in p {
        worst = worst.max(-x);
    }
    worst.max((p.iter().sum::<f64>() - 1.0).abs())
}

/// Pure Nash equilibria by exhaustive best-response scan.
pub fn pure_nash(t: &PayoffTable) -> Vec<(usize, usize)> {
    let (nm, nf) = (t.n_macro(), t.n_femto());
    let mut out = Vec::new();
    for i in 0..nm {
        for j in 0..nf {
            let m_ok = (0..nm).all(|a| t.get(a, j).macro_rate <= t.get(i, j).macro_rate);
            let f_ok = (0..nf).all(|b| t.get(i, b).femto_rate <= t.get(i, j).femto_rate);
            if m_ok && f_ok {
                out.push((i, j));
            }
        }
    }
    out
}

/// Dense Gaussian elimination with partial pivoting; None when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-11 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Incentive rows g·p ≥ 0 built directly from the definitions.
fn incentive_rows(t: &PayoffTable, mode: CeMode) -> Vec<Vec<f64>> {
    let (nm, nf) = (t.n_macro(), t.n_femto());
    let n = nm * nf;
    let mut rows = Vec::new();
    match mode {
        CeMode::Correlated => {
            for a in 0..nm {
                for d in (0..nm).filter(|&d| d != a) {
                    let mut g = vec![0.0; n];
                    for b in 0..nf {
                        g[a * nf + b] = t.get(a, b).macro_rate - t.get(d, b).macro_rate;
                    }
                    rows.push(g);
                }
            }
            for b in 0..nf {
                for d in (0..nf).filter(|&d| d != b) {
                    let mut g = vec![0.0; n];
                    for a in 0..nm {
                        g[a * nf + b] = t.get(a, b).femto_rate - t.get(a, d).femto_rate;
                    }
                    rows.push(g);
                }
            }
        }
        CeMode::Coarse => {
            for d in 0..nm {
                rows.push(
                    (0..n)
                        .map(|k| t.get(k / nf, k % nf).macro_rate - t.get(d, k % nf).macro_rate)
                        .collect(),
                );
            }
            for d in 0..nf {
                rows.push(
                    (0..n)
                        .map(|k| t.get(k / nf, k % nf).femto_rate - t.get(k / nf, d).femto_rate)
                        .collect(),
                );
            }
        }
    }
    rows
}

/// Every vertex of {p ≥ 0, incentive rows ≥ 0, Σp = 1}: choose n−1 tight
/// inequalities, solve with the normalization, keep the feasible points.
pub fn ce_vertices(t: &PayoffTable, mode: CeMode) -> Vec<Vec<f64>> {
    let n = t.num_joint();
    let mut ineq: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            e
        })
        .collect();
    ineq.extend(incentive_rows(t, mode));
    let feasible = |p: &[f64]| {
        ineq.iter()
            .all(|g| g.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() >= -1e-9 * (1.0 + g.iter().map(|v| v.abs()).sum::<f64>()))
    };

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    combinations(ineq.len(), n - 1, 0, &mut chosen, &mut |subset| {
        let mut a: Vec<Vec<f64>> = subset.iter().map(|&r| ineq[r].clone()).collect();
        let mut b = vec![0.0; n - 1];
        a.push(vec![1.0; n]);
        b.push(1.0);
        if let Some(p) = solve_square(a, b) {
            if feasible(&p) && !vertices.iter().any(|v| v.iter().zip(&p).all(|(x, y)| (x - y).abs() < 1e-9)) {
                vertices.push(p);
            }
        }
    });
    vertices
}

fn combinations(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        combinations(n, k, i + 1, chosen, f);
        chosen.pop();
    }
}

/// Max expected sum rate over the vertex set.
pub fn vertex_optimum(t: &PayoffTable, mode: CeMode) -> f64 {
    ce_vertices(t, mode)
        .iter()
        .map(|p| p.iter().zip(t.payoffs()).map(|(q, r)| q * r.sum()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}
