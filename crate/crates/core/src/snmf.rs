//! Sparse non-negative matrix factorization under the beta-divergence.
//!
//! Supervised use keeps the dictionary `W` fixed and solves
//! `min_H D_beta(M | WH) + lambda * sum(H)` by multiplicative updates;
//! unsupervised use alternates the `H` step with a `W` step followed by
//! column renormalization.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Matrix with finite, non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NonNegMatrix<T>(Array2<T>);

impl<T: Scalar> NonNegMatrix<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        if let Some(((i, j), v)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < T::zero())
        {
            return domain(format!("entry ({i}, {j}) = {v} is negative or not finite"));
        }
        Ok(Self(values))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Array2::zeros((rows, cols)))
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.0.view()
    }

    pub fn values(&self) -> &Array2<T> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<T> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }
}

/// Fixed atoms (unit-norm columns) with one label per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    atoms: NonNegMatrix<T>,
    labels: Vec<String>,
}

fn unit_tolerance<T: Scalar>() -> T {
    T::c(1e-10).max(T::epsilon() * T::c(100.0))
}

impl<T: Scalar> Dictionary<T> {
    /// Wraps atoms that already have unit Euclidean norm.
    pub fn new(atoms: NonNegMatrix<T>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != atoms.dim().1 {
            return domain(format!(
                "{} labels for {} atoms",
                labels.len(),
                atoms.dim().1
            ));
        }
        for (k, col) in atoms.0.columns().into_iter().enumerate() {
            let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm == T::zero() {
                return Err(Error::DegenerateAtom {
                    index: k,
                    label: labels[k].clone(),
                });
            }
            if (norm - T::one()).abs() > unit_tolerance() {
                return domain(format!("atom {k} has norm {norm}, expected 1"));
            }
        }
        Ok(Self { atoms, labels })
    }

    /// Scales every column to unit Euclidean norm.
    pub fn normalized(atoms: NonNegMatrix<T>, labels: Vec<String>) -> Result<Self> {
        let (w, _) = normalize_columns(atoms.0, &labels)?;
        Self::new(NonNegMatrix(w), labels)
    }

    pub fn atoms(&self) -> &NonNegMatrix<T> {
        &self.atoms
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.atoms.0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.atoms.0.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.0.ncols()
    }
}

/// Divides each column by its norm; returns the norms.
fn normalize_columns<T: Scalar>(
    mut w: Array2<T>,
    labels: &[String],
) -> Result<(Array2<T>, Vec<T>)> {
    let mut norms = Vec::with_capacity(w.ncols());
    for (k, mut col) in w.columns_mut().into_iter().enumerate() {
        let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::DegenerateAtom {
                index: k,
                label: labels.get(k).cloned().unwrap_or_default(),
            });
        }
        col.mapv_inplace(|v| v / norm);
        norms.push(norm);
    }
    Ok((w, norms))
}

/// Coefficients of each column of the data on each atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations<T>(NonNegMatrix<T>);

impl<T: Scalar> Activations<T> {
    pub fn new(h: Array2<T>) -> Result<Self> {
        NonNegMatrix::new(h).map(Self)
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.0 .0
    }

    pub fn into_inner(self) -> Array2<T> {
        self.0 .0
    }

    /// Sum of all entries, i.e. the l1 norm.
    pub fn mass(&self) -> T {
        self.0 .0.sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// All ones.
    Ones,
    /// `W^T M + epsilon`.
    Wtm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub beta: T,
    /// Weight of the l1 penalty on `H`.
    pub sparsity: T,
    pub max_iters: usize,
    pub rel_tol: T,
    /// Floor for the reconstruction before negative powers.
    pub epsilon: T,
    pub init: Init,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            beta: T::one(),
            sparsity: T::c(0.1),
            max_iters: 500,
            rel_tol: T::c(1e-6),
            epsilon: T::c(1e-12),
            init: Init::Wtm,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return domain("beta must be finite");
        }
        if !(self.sparsity >= T::zero()) || !self.sparsity.is_finite() {
            return domain("sparsity must be >= 0");
        }
        if self.max_iters < 1 {
            return domain("max_iters must be >= 1");
        }
        if !(self.rel_tol > T::zero()) {
            return domain("rel_tol must be > 0");
        }
        if !(self.epsilon > T::zero()) {
            return domain("epsilon must be > 0");
        }
        Ok(())
    }
}

/// Elementwise beta-divergence `D_beta(x | y)`.
///
/// `beta = 1` is generalized Kullback-Leibler (with `0 log 0 = 0`),
/// `beta = 0` is Itakura-Saito, and `beta = 2` reduces to `(x - y)^2 / 2`.
pub fn beta_divergence<T: Scalar>(x: T, y: T, beta: T) -> T {
    let d = if beta == T::one() {
        let xlogx = if x == T::zero() {
            T::zero()
        } else {
            x * (x.ln() - y.ln())
        };
        xlogx + (y - x)
    } else if beta == T::zero() {
        let r = x / y;
        r - r.ln() - T::one()
    } else if x > T::zero() && (beta - T::one()).abs() < T::c(NEAR_LIMIT) {
        // Expanded around beta = 1 so the 1/(beta - 1) factor does not cancel.
        let r = x / y;
        let u = r.ln();
        y.powf(beta) / beta * ((r * u - r + T::one()) + r * u * expm1_excess(u * (beta - T::one())))
    } else if x > T::zero() && beta.abs() < T::c(NEAR_LIMIT) {
        let r = x / y;
        let u = r.ln();
        y.powf(beta) / (beta - T::one())
            * (u * (T::one() + expm1_excess(u * beta)) - (r - T::one()))
    } else {
        let bm1 = beta - T::one();
        (x.powf(beta) - y.powf(beta) - beta * y.powf(bm1) * (x - y)) / (beta * bm1)
    };
    d.max(T::zero())
}

const NEAR_LIMIT: f64 = 1e-2;

/// `(exp(z) - 1 - z) / z`, accurate for small `z`.
fn expm1_excess<T: Scalar>(z: T) -> T {
    if z.abs() > T::c(0.5) {
        return (z.exp_m1() - z) / z;
    }
    let mut term = z / T::c(2.0);
    let mut sum = term;
    for k in 3..40 {
        term = term * z / T::from_count(k);
        sum += term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum
}

/// Sum of elementwise divergences. `y` must be at least `epsilon` everywhere.
///
/// For `beta <= 0` the divergence is infinite at `x = 0`, so `x` is floored at
/// `epsilon` on that branch.
pub fn beta_divergence_sum<T: Scalar>(
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    beta: T,
    epsilon: T,
) -> Result<T> {
    if x.dim() != y.dim() {
        return domain(format!(
            "divergence: shapes {:?} and {:?} differ",
            x.dim(),
            y.dim()
        ));
    }
    if y.iter().any(|&v| !(v >= epsilon)) {
        return domain("divergence: y has entries below epsilon");
    }
    let floor_x = beta <= T::zero();
    let mut total = T::zero();
    Zip::from(&x).and(&y).for_each(|&a, &b| {
        let a = if floor_x { a.max(epsilon) } else { a };
        total += beta_divergence(a, b, beta);
    });
    Ok(total)
}

fn check_shapes<T>(m: &NonNegMatrix<T>, w: &Dictionary<T>, h: &Array2<T>) -> Result<()>
where
    T: Scalar,
{
    let (f, t) = m.dim();
    let (wf, k) = w.atoms.dim();
    let (hk, ht) = h.dim();
    if f != wf || k != hk || t != ht {
        return domain(format!(
            "shape mismatch: M {f}x{t}, W {wf}x{k}, H {hk}x{ht}"
        ));
    }
    Ok(())
}

/// `max(WH, epsilon)`.
fn reconstruction<T: Scalar>(w: &Array2<T>, h: &Array2<T>, epsilon: T) -> Array2<T> {
    w.dot(h).mapv_into(|v| v.max(epsilon))
}

/// `x^p`, exact for the small integer exponents used by KL and Euclidean costs.
fn pow_exp<T: Scalar>(x: T, p: T) -> T {
    if p == T::zero() {
        T::one()
    } else if p == T::one() {
        x
    } else if p == -T::one() {
        x.recip()
    } else if p == -T::c(2.0) {
        (x * x).recip()
    } else {
        x.powf(p)
    }
}

/// `D_beta(M | WH) + lambda * sum(H)`.
pub fn objective<T: Scalar>(
    m: &NonNegMatrix<T>,
    w: &Dictionary<T>,
    h: &Activations<T>,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    check_shapes(m, w, h.matrix())?;
    let lam = reconstruction(w.matrix(), h.matrix(), cfg.epsilon);
    let d = beta_divergence_sum(m.view(), lam.view(), cfg.beta, cfg.epsilon)?;
    Ok(d + cfg.sparsity * h.mass())
}

/// One multiplicative step on `H`:
/// `H <- H * (W^T (M * R^(beta-2))) / (W^T R^(beta-1) + lambda)`, `R = max(WH, eps)`.
pub fn update_activations<T: Scalar>(
    m: &NonNegMatrix<T>,
    w: &Dictionary<T>,
    h: &Activations<T>,
    cfg: &SolverConfig<T>,
) -> Result<Activations<T>> {
    check_shapes(m, w, h.matrix())?;
    Ok(Activations(NonNegMatrix(h_step(
        m.values(),
        w.matrix(),
        h.matrix(),
        cfg,
    ))))
}

fn h_step<T: Scalar>(
    m: &Array2<T>,
    w: &Array2<T>,
    h: &Array2<T>,
    cfg: &SolverConfig<T>,
) -> Array2<T> {
    let lam = reconstruction(w, h, cfg.epsilon);
    let (p_num, p_den) = (cfg.beta - T::c(2.0), cfg.beta - T::one());
    let weighted = Zip::from(m)
        .and(&lam)
        .map_collect(|&x, &r| x * pow_exp(r, p_num));
    let num = w.t().dot(&weighted);
    let den = w.t().dot(&lam.mapv(|r| pow_exp(r, p_den)));
    let mut out = h.clone();
    Zip::from(&mut out)
        .and(&num)
        .and(&den)
        .for_each(|o, &n, &d| {
            let d = d + cfg.sparsity;
            *o = if d > T::zero() { *o * n / d } else { T::zero() };
        });
    out
}

fn init_activations<T: Scalar>(m: &Array2<T>, w: &Array2<T>, cfg: &SolverConfig<T>) -> Array2<T> {
    match cfg.init {
        Init::Ones => Array2::ones((w.ncols(), m.ncols())),
        Init::Wtm => w.t().dot(m).mapv_into(|v| v + cfg.epsilon),
    }
}

/// True once the objective stopped moving by more than `rel_tol`.
fn converged<T: Scalar>(prev: T, cur: T, rel_tol: T) -> bool {
    let scale = prev.abs();
    if scale == T::zero() {
        return cur == T::zero();
    }
    (prev - cur).abs() / scale < rel_tol
}

/// Solves for `H` with the dictionary held fixed.
///
/// Returns the activations and the objective trace, starting with the value at
/// the initial point and one entry per iteration after that.
pub fn solve_activations<T: Scalar>(
    m: &NonNegMatrix<T>,
    w: &Dictionary<T>,
    cfg: &SolverConfig<T>,
) -> Result<(Activations<T>, Vec<T>)> {
    cfg.validate()?;
    let mut h = Activations(NonNegMatrix(init_activations(m.values(), w.matrix(), cfg)));
    check_shapes(m, w, h.matrix())?;
    let mut trace = vec![objective(m, w, &h, cfg)?];
    for _ in 0..cfg.max_iters {
        h = update_activations(m, w, &h, cfg)?;
        let cur = objective(m, w, &h, cfg)?;
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(cur);
        if converged(prev, cur, cfg.rel_tol) {
            break;
        }
    }
    Ok((h, trace))
}

/// One multiplicative step on `W`, then unit-norm columns with `H` rows rescaled
/// so that `WH` is unchanged.
pub fn update_dictionary<T: Scalar>(
    m: &NonNegMatrix<T>,
    w: &Dictionary<T>,
    h: &Activations<T>,
    cfg: &SolverConfig<T>,
) -> Result<(Dictionary<T>, Activations<T>)> {
    check_shapes(m, w, h.matrix())?;
    let (wm, hm) = (w.matrix(), h.matrix());
    let lam = reconstruction(wm, hm, cfg.epsilon);
    let (p_num, p_den) = (cfg.beta - T::c(2.0), cfg.beta - T::one());
    let weighted = Zip::from(m.values())
        .and(&lam)
        .map_collect(|&x, &r| x * pow_exp(r, p_num));
    let num = weighted.dot(&hm.t());
    let den = lam.mapv(|r| pow_exp(r, p_den)).dot(&hm.t());
    let mut next = wm.clone();
    Zip::from(&mut next)
        .and(&num)
        .and(&den)
        .for_each(|o, &n, &d| {
            // an atom with no activation keeps its shape
            if d > T::zero() {
                *o = *o * n / d;
            }
        });
    let (next, norms) = normalize_columns(next, w.labels())?;
    let mut h_next = hm.clone();
    for (mut row, &norm) in h_next.axis_iter_mut(Axis(0)).zip(&norms) {
        row.mapv_inplace(|v| v * norm);
    }
    Ok((
        Dictionary {
            atoms: NonNegMatrix(next),
            labels: w.labels.clone(),
        },
        Activations(NonNegMatrix(h_next)),
    ))
}

#[derive(Debug, Clone)]
pub struct NmfFit<T> {
    pub dictionary: Dictionary<T>,
    pub activations: Activations<T>,
    pub trace: Vec<T>,
}

/// Unsupervised factorization `M ~ WH` with `rank` atoms.
///
/// Both factors start from a seeded uniform draw on `(epsilon, 1)`.
pub fn fit_nmf<T: Scalar>(
    m: &NonNegMatrix<T>,
    rank: usize,
    cfg: &SolverConfig<T>,
    seed: u64,
) -> Result<NmfFit<T>> {
    cfg.validate()?;
    let (f, t) = m.dim();
    if rank < 1 || rank > f.min(t) {
        return domain(format!("rank {rank} outside 1..={}", f.min(t)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = cfg.epsilon.as_f64();
    let mut draw =
        |rows, cols| Array2::from_shape_simple_fn((rows, cols), || T::c(rng.random_range(lo..1.0)));
    let w0 = draw(f, rank);
    let h0 = draw(rank, t);
    let labels: Vec<String> = (0..rank).map(|k| format!("atom_{k}")).collect();
    let (w0, norms) = normalize_columns(w0, &labels)?;
    let mut h0 = h0;
    for (mut row, &norm) in h0.axis_iter_mut(Axis(0)).zip(&norms) {
        row.mapv_inplace(|v| v * norm);
    }
    let mut w = Dictionary {
        atoms: NonNegMatrix(w0),
        labels,
    };
    let mut h = Activations(NonNegMatrix(h0));

    let mut trace = vec![objective(m, &w, &h, cfg)?];
    for _ in 0..cfg.max_iters {
        h = update_activations(m, &w, &h, cfg)?;
        (w, h) = update_dictionary(m, &w, &h, cfg)?;
        let cur = objective(m, &w, &h, cfg)?;
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(cur);
        if converged(prev, cur, cfg.rel_tol) {
            break;
        }
    }
    Ok(NmfFit {
        dictionary: w,
        activations: h,
        trace,
    })
}
