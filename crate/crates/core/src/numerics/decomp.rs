//! Factorizations over [`ComplexMatrix`]: Cholesky, Householder QR with
//! column pivoting, and a Jacobi eigenvalue sweep for Hermitian matrices.

use num_complex::Complex64;

use super::{ComplexMatrix, NumericsError, HERMITIAN_TOL};

/// Lower-triangular Cholesky factor L with M = L·Lᴴ.
///
/// Only the lower triangle of `m` is read; callers check Hermiticity.
pub fn cholesky(m: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.shape()));
    }
    let n = m.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(NumericsError::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }
    Ok(l)
}

/// Solves L·X = B for lower-triangular L by forward substitution.
pub fn forward_solve(l: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    let n = l.rows();
    if !l.is_square() || b.rows() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: (n, b.cols()),
            found: b.shape(),
        });
    }
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut acc = x[(i, col)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    Ok(x)
}

/// log₂ det(M) for Hermitian positive-definite M, from the Cholesky pivots.
pub fn hermitian_logdet(m: &ComplexMatrix) -> Result<f64, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.shape()));
    }
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(NumericsError::NotHermitian { defect });
    }
    let l = cholesky(m)?;
    Ok((0..l.rows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Orthonormal basis (as columns) of the null space of a wide matrix.
///
/// Runs a pivoted Householder QR on Mᴴ; trailing columns of the unitary
/// factor past the numerical rank span null(M). Rank counts diagonal
/// entries of R above `tol·‖M‖_F`.
pub fn null_space_basis(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, NumericsError> {
    if m.rows() > m.cols() {
        return Err(NumericsError::NotWide(m.shape()));
    }
    let n = m.cols();
    let (q, r_diag) = pivoted_qr(&m.adjoint());
    let threshold = tol * m.frobenius_norm();
    let rank = r_diag.iter().take_while(|d| **d > threshold).count();
    if rank == n {
        return Err(NumericsError::EmptyNullSpace);
    }
    let cols: Vec<usize> = (rank..n).collect();
    Ok(q.select_columns(&cols))
}

/// Full Householder QR with column pivoting of a (tall) matrix A.
/// Returns the n×n unitary Q and |R_kk| in pivot order.
fn pivoted_qr(a: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
    let (n, p) = a.shape();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut diag = Vec::with_capacity(p.min(n));
    let steps = p.min(n);

    for k in 0..steps {
        // Pivot: remaining column with the largest trailing norm, lowest index on ties.
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..p {
            let norm: f64 = (k..n).map(|i| r[(i, j)].norm_sqr()).sum();
            if norm > best_norm {
                best_norm = norm;
                best = j;
            }
        }
        if best != k {
            for i in 0..n {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, best)];
                r[(i, best)] = tmp;
            }
        }

        let x: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        let norm_x = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            diag.push(0.0);
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * norm_x;
        let mut v = x;
        v[0] -= alpha;
        let v_norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sqr == 0.0 {
            diag.push(norm_x);
            continue;
        }

        // R ← (I − 2vvᴴ/vᴴv) R on rows k..n.
        for j in k..p {
            let mut dot = Complex64::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * r[(k + t, j)];
            }
            let coef = dot * (2.0 / v_norm_sqr);
            for (t, vi) in v.iter().enumerate() {
                r[(k + t, j)] -= vi * coef;
            }
        }
        // Q ← Q (I − 2vvᴴ/vᴴv) on columns k..n.
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += q[(i, k + t)] * vi;
            }
            let coef = dot * (2.0 / v_norm_sqr);
            for (t, vi) in v.iter().enumerate() {
                q[(i, k + t)] -= coef * vi.conj();
            }
        }
        diag.push(r[(k, k)].norm());
    }
    (q, diag)
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The n×n Hermitian M = A + iB maps to the 2n×2n real symmetric
/// [[A, −B], [B, A]], whose spectrum is that of M with every eigenvalue
/// doubled; a cyclic Jacobi sweep diagonalizes the embedding.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.shape()));
    }
    let n = m.rows();
    let size = 2 * n;
    let mut s = vec![vec![0.0_f64; size]; size];
    for i in 0..n {
        for j in 0..n {
            // Symmetrize so tiny Hermitian defects do not leak in.
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            s[i][j] = z.re;
            s[i + n][j + n] = z.re;
            s[i][j + n] = -z.im;
            s[i + n][j] = z.im;
        }
    }

    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|i| (0..size).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        let scale: f64 = (0..size).map(|i| s[i][i] * s[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..size {
            for q in (p + 1)..size {
                let apq = s[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..size {
                    let skp = s[k][p];
                    let skq = s[k][q];
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..size {
                    let spk = s[p][k];
                    let sqk = s[q][k];
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..size).map(|i| s[i][i]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// True iff the smallest eigenvalue of Hermitian `m` is at least −tol.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool, NumericsError> {
    let defect = m.hermitian_defect();
    if defect > tol.max(HERMITIAN_TOL) {
        return Err(NumericsError::NotHermitian { defect });
    }
    let eig = hermitian_eigenvalues(m)?;
    Ok(eig.first().is_none_or(|&min| min >= -tol))
}
