//! Sample moments, the four whitening transforms and their diagnostics.
//!
//! Signals are the variables and time samples the observations, so an
//! ensemble of `d` signals of length `n` yields a `d x d` covariance.
//!
//! | method    | whitening matrix                 |
//! |-----------|----------------------------------|
//! | `Zca`     | `Sigma^{-1/2} = u L^{-1/2} u^T`  |
//! | `Pca`     | `L^{-1/2} u^T`                   |
//! | `ZcaCor`  | `P^{-1/2} V^{-1/2}`              |
//! | `PcaCor`  | `Theta^{-1/2} G^T V^{-1/2}`      |
//!
//! with `Sigma = u L u^T`, `V = diag(Sigma)`, `P = V^{-1/2} Sigma V^{-1/2}`
//! and `P = G Theta G^T`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::eigen::{sym_eig, EigenPair};
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;
use crate::signals::Ensemble;
use crate::stats::pearson;

/// Relative eigenvalue floor applied before inverting.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WhiteningMethod {
    Pca,
    Zca,
    PcaCor,
    ZcaCor,
}

impl WhiteningMethod {
    pub const ALL: [WhiteningMethod; 4] = [
        WhiteningMethod::Pca,
        WhiteningMethod::Zca,
        WhiteningMethod::PcaCor,
        WhiteningMethod::ZcaCor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WhiteningMethod::Pca => "pca",
            WhiteningMethod::Zca => "zca",
            WhiteningMethod::PcaCor => "pca-cor",
            WhiteningMethod::ZcaCor => "zca-cor",
        }
    }

    fn uses_correlation(self) -> bool {
        matches!(self, WhiteningMethod::PcaCor | WhiteningMethod::ZcaCor)
    }
}

impl fmt::Display for WhiteningMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WhiteningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown whitening method '{s}'")))
    }
}

/// Sample mean and unbiased covariance of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub mean: Array1<T>,
    pub covariance: Array2<T>,
    pub n_obs: usize,
}

pub fn estimate_moments<T: Scalar>(e: &Ensemble<T>) -> Result<Moments<T>> {
    let n = e.n();
    if n < 2 {
        return domain("estimate_moments: need at least 2 observations");
    }
    let x = e.matrix();
    let mean = x.mean_axis(Axis(1)).expect("n >= 2");
    let centered = &x - &mean.view().insert_axis(Axis(1));
    let cov = centered.dot(&centered.t()) / T::from_count(n - 1);
    let covariance = (&cov + &cov.t()) * T::c(0.5);
    Ok(Moments {
        mean,
        covariance,
        n_obs: n,
    })
}

/// `V`, `P` and the eigendecomposition of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDecomp<T> {
    pub variances: Array1<T>,
    pub correlation: Array2<T>,
    pub eig: EigenPair<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel<T> {
    pub method: WhiteningMethod,
    pub moments: Moments<T>,
    pub eig: EigenPair<T>,
    /// Present for the correlation-based methods.
    pub corr: Option<CorrelationDecomp<T>>,
    /// The `d x d` whitening matrix.
    pub matrix: Array2<T>,
    pub eig_floor: T,
}

fn floored<T: Scalar>(values: &Array1<T>, floor: T) -> Array1<T> {
    let top = values.iter().fold(T::zero(), |m, &v| m.max(v));
    values.mapv(|v| v.max(floor * top))
}

/// Builds the whitening matrix for `method`.
///
/// Eigenvalues of `Sigma` (and of `P` for the correlation methods) are clamped
/// below at `eig_floor * max` before inversion, so near-singular input still
/// yields a finite transform.
pub fn whitening_matrix<T: Scalar>(
    method: WhiteningMethod,
    moments: &Moments<T>,
    eig_floor: T,
) -> Result<WhiteningModel<T>> {
    if !(eig_floor > T::zero()) {
        return domain("eig_floor must be positive");
    }
    let eig = sym_eig(&moments.covariance)?;
    let top = eig.values.iter().fold(T::zero(), |m, &v| m.max(v));
    if !(top > T::zero()) || !top.is_finite() {
        return Err(Error::DegenerateInput(
            "covariance has no positive eigenvalue (all signals constant?)".into(),
        ));
    }
    let inv_sqrt = |v: T| T::one() / v.sqrt();

    let (matrix, corr) = if method.uses_correlation() {
        let diag = moments.covariance.diag().to_owned();
        let vmax = diag.iter().fold(T::zero(), |m, &v| m.max(v));
        let variances = diag.mapv(|v| v.max(eig_floor * vmax));
        let scale = variances.mapv(inv_sqrt);
        let col = scale.view().insert_axis(Axis(1));
        let row = scale.view().insert_axis(Axis(0));
        let p = &moments.covariance * &col * row;
        let p = (&p + &p.t()) * T::c(0.5);
        let peig = sym_eig(&p)?;
        let theta = floored(&peig.values, eig_floor).mapv(inv_sqrt);
        // M V^{-1/2}: scale columns
        let w = match method {
            WhiteningMethod::ZcaCor => {
                let g = (&peig.vectors * &theta).dot(&peig.vectors.t());
                (&g + &g.t()) * T::c(0.5)
            }
            _ => &peig.vectors.t().to_owned() * &theta.view().insert_axis(Axis(1)),
        };
        let w = w * row;
        let corr = CorrelationDecomp {
            variances,
            correlation: p,
            eig: peig,
        };
        (w, Some(corr))
    } else {
        let lam = floored(&eig.values, eig_floor).mapv(inv_sqrt);
        let w = match method {
            WhiteningMethod::Zca => {
                let z = (&eig.vectors * &lam).dot(&eig.vectors.t());
                (&z + &z.t()) * T::c(0.5)
            }
            _ => eig.vectors.t().to_owned() * lam.view().insert_axis(Axis(1)),
        };
        (w, None)
    };

    Ok(WhiteningModel {
        method,
        moments: moments.clone(),
        eig,
        corr,
        matrix,
        eig_floor,
    })
}

impl<T: Scalar> WhiteningModel<T> {
    /// Estimates moments on `e` and builds the transform.
    pub fn fit(e: &Ensemble<T>, method: WhiteningMethod, eig_floor: T) -> Result<Self> {
        whitening_matrix(method, &estimate_moments(e)?, eig_floor)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `W Sigma W^T`.
    pub fn whitened_covariance(&self) -> Array2<T> {
        self.matrix
            .dot(&self.moments.covariance)
            .dot(&self.matrix.t())
    }
}

/// `Z = W (X - mu 1^T)`, keeping ids, labels and `dt`.
pub fn whiten<T: Scalar>(e: &Ensemble<T>, model: &WhiteningModel<T>) -> Result<Ensemble<T>> {
    if e.d() != model.dim() {
        return domain(format!(
            "whiten: ensemble has {} signals, model expects {}",
            e.d(),
            model.dim()
        ));
    }
    let centered = e.matrix() - model.moments.mean.view().insert_axis(Axis(1));
    e.with_matrix(&model.matrix.dot(&centered))
}

/// Share of squared Frobenius mass off the diagonal. 0 for diagonal (and zero) matrices.
pub fn diagonality<T: Scalar>(m: &Array2<T>) -> Result<T> {
    let (r, c) = m.dim();
    if r != c {
        return domain(format!("diagonality: matrix is {r}x{c}, not square"));
    }
    let mut off = T::zero();
    let mut total = T::zero();
    for ((i, j), &v) in m.indexed_iter() {
        let sq = v * v;
        total += sq;
        if i != j {
            off += sq;
        }
    }
    Ok(if total > T::zero() {
        off / total
    } else {
        T::zero()
    })
}

/// Entry `(i, j)`: Pearson correlation of `original[i]` with `processed[j]`.
pub fn cross_correlation<T: Scalar>(
    original: &Ensemble<T>,
    processed: &Ensemble<T>,
) -> Result<Array2<T>> {
    if original.d() != processed.d() || original.n() != processed.n() {
        return domain(format!(
            "cross_correlation: shapes {}x{} and {}x{} differ",
            original.d(),
            original.n(),
            processed.d(),
            processed.n()
        ));
    }
    let constant = |e: &Ensemble<T>| {
        e.signals()
            .iter()
            .find(|s| s.samples().iter().all(|&v| v == s.samples()[0]))
            .map(|s| s.id.clone())
    };
    if let Some(id) = constant(original).or_else(|| constant(processed)) {
        return domain(format!("cross_correlation: signal {id} has zero variance"));
    }
    let d = original.d();
    let mut out = Array2::zeros((d, d));
    for (i, a) in original.signals().iter().enumerate() {
        for (j, b) in processed.signals().iter().enumerate() {
            out[[i, j]] = pearson(a.samples(), b.samples()).ok_or_else(|| {
                Error::Domain(format!(
                    "cross_correlation: zero variance in {} or {}",
                    a.id, b.id
                ))
            })?;
        }
    }
    Ok(out)
}
