//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use ndarray::{Array1, Array2};

use crate::error::{domain, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigenvectors (columns of `vectors`) with eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub vectors: Array2<T>,
    pub values: Array1<T>,
}

impl<T: Scalar> EigenPair<T> {
    /// `u diag(values) u^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        self.map_values(|v| v)
    }

    /// `u diag(f(values)) u^T`.
    pub fn map_values(&self, f: impl Fn(T) -> T) -> Array2<T> {
        let scaled = &self.vectors * &self.values.mapv(f);
        scaled.dot(&self.vectors.t())
    }
}

/// Largest absolute asymmetry relative to the largest absolute entry.
pub fn asymmetry<T: Scalar>(a: &Array2<T>) -> T {
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let mut worst = T::zero();
    for ((i, j), &v) in a.indexed_iter() {
        worst = worst.max((v - a[[j, i]]).abs());
    }
    worst / scale
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues come back in nonincreasing order. Each eigenvector is signed so
/// that its entry of largest magnitude is positive, ties going to the lowest
/// index, which makes the result reproducible across runs.
pub fn sym_eig<T: Scalar>(a: &Array2<T>) -> Result<EigenPair<T>> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return domain(format!("sym_eig: matrix is {rows}x{cols}, not square"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return domain("sym_eig: matrix has non-finite entries");
    }
    if asymmetry(a) > T::c(1e-10) {
        return domain("sym_eig: matrix is not symmetric");
    }
    let n = rows;
    let mut m = (a + &a.t()) * T::c(0.5);
    let mut v = Array2::<T>::eye(n);

    let total: T = m.iter().map(|&x| x * x).sum();
    let tol = T::epsilon() * T::epsilon() * total;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off + off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[[j, j]]
            .partial_cmp(&m[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Array1::from_iter(order.iter().map(|&k| m[[k, k]]));
    let mut vectors = Array2::<T>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < T::zero() {
            col.mapv_inplace(|x| -x);
        }
        vectors.column_mut(dst).assign(&col);
    }
    Ok(EigenPair { vectors, values })
}

/// Applies the rotation `J(p, q, c, s)` as `m <- J^T m J`, `v <- v J`.
fn rotate<T: Scalar>(m: &mut Array2<T>, v: &mut Array2<T>, p: usize, q: usize, c: T, s: T) {
    let n = m.nrows();
    for k in 0..n {
        let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
        m[[k, p]] = c * mkp - s * mkq;
        m[[k, q]] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
        m[[p, k]] = c * mpk - s * mqk;
        m[[q, k]] = s * mpk + c * mqk;
    }
    // exact zero for the annihilated pair
    m[[p, q]] = T::zero();
    m[[q, p]] = T::zero();
    for k in 0..n {
        let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}
