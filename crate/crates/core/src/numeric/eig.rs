use super::{Matrix, NumericError};

pub const DEFAULT_EIG_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
///
/// Column `i` of `vectors` is the unit eigenvector for `values[i]`, with its
/// sign fixed so that its largest-magnitude entry is positive.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for r in 0..n {
            for c in 0..n {
                scaled[(r, c)] *= self.values[c];
            }
        }
        scaled.matmul_transposed(&self.vectors)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal mass reaches
/// machine precision relative to `‖M‖_F`. If `max_sweeps` runs out first, the
/// result is still accepted when the residual off-diagonal norm is within
/// `tol · max(1, ‖M‖_F)`, which bounds the reconstruction error.
pub fn sym_eig(m: &Matrix, tol: f64, max_sweeps: usize) -> Result<EigenDecomposition, NumericError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(NumericError::ShapeMismatch { expected: (n, n), found: m.shape() });
    }
    let norm = m.frobenius_norm();
    if !norm.is_finite() {
        return Err(NumericError::NonFinite);
    }
    let asym = m.asymmetry().unwrap_or(0.0);
    if asym > 1e-12 * norm {
        return Err(NumericError::NotSymmetric { asymmetry: asym });
    }

    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let mut v = Matrix::identity(n);

    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..max_sweeps {
        let off = off_norm(&a);
        if off <= f64::EPSILON * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[(k, p)] = new_kp;
                    a[(p, k)] = new_kp;
                    a[(k, q)] = new_kq;
                    a[(q, k)] = new_kq;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > tol * norm.max(1.0) {
            return Err(NumericError::NoConvergence { sweeps: max_sweeps, off_diagonal: off });
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values: Vec<f64> = idx.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_c, &old_c) in idx.iter().enumerate() {
        let mut pivot = 0;
        for r in 0..n {
            if v[(r, old_c)].abs() > v[(pivot, old_c)].abs() {
                pivot = r;
            }
        }
        let sign = if v[(pivot, old_c)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, new_c)] = sign * v[(r, old_c)];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}
