//! Dictionary-based identification of a query trace.
//!
//! References are whitened, rectified and column-normalized into a fixed
//! dictionary. A query is whitened together with the references (the
//! whitening matrix acts across signals, so it has to be re-estimated with
//! the query included), rectified, and decomposed on the dictionary with the
//! sparse solver. The label whose atoms carry the most activation wins.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::signals::{Ensemble, Signal};
use crate::snmf::{solve_activations, Activations, Dictionary, NonNegMatrix, SolverConfig};
use crate::whitening::{whiten, WhiteningMethod, WhiteningModel};

/// Winner reported when the solver returns no activation at all.
pub const INDETERMINATE: &str = "indeterminate";

/// Absolute values of the ensemble, one column per signal (`n x d`).
pub fn rectify<T: Scalar>(e: &Ensemble<T>) -> NonNegMatrix<T> {
    let values = e.matrix().t().mapv(|v| v.abs());
    NonNegMatrix::new(values).expect("absolute values of finite samples")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationModel<T> {
    references: Ensemble<T>,
    method: WhiteningMethod,
    solver: SolverConfig<T>,
    eig_floor: T,
    whitening: WhiteningModel<T>,
    dictionary: Dictionary<T>,
    raw_dictionary: Dictionary<T>,
}

/// Fits whitening on `refs` and builds both the whitened and the raw dictionary.
pub fn build_model<T: Scalar>(
    refs: Ensemble<T>,
    method: WhiteningMethod,
    solver: SolverConfig<T>,
    eig_floor: T,
) -> Result<IdentificationModel<T>> {
    if refs.d() < 2 {
        return domain("need at least 2 reference signals");
    }
    if let Some(s) = refs.signals().iter().find(|s| s.label.is_empty()) {
        return domain(format!("reference {} has an empty label", s.id));
    }
    solver.validate()?;
    let labels = refs.labels();
    let whitening = WhiteningModel::fit(&refs, method, eig_floor)?;
    let white = whiten(&refs, &whitening)?;
    let dictionary = Dictionary::normalized(rectify(&white), labels.clone())?;
    let raw_dictionary = Dictionary::normalized(rectify(&refs), labels)?;
    Ok(IdentificationModel {
        references: refs,
        method,
        solver,
        eig_floor,
        whitening,
        dictionary,
        raw_dictionary,
    })
}

impl<T: Scalar> IdentificationModel<T> {
    pub fn references(&self) -> &Ensemble<T> {
        &self.references
    }

    pub fn method(&self) -> WhiteningMethod {
        self.method
    }

    pub fn solver(&self) -> &SolverConfig<T> {
        &self.solver
    }

    pub fn eig_floor(&self) -> T {
        self.eig_floor
    }

    pub fn whitening(&self) -> &WhiteningModel<T> {
        &self.whitening
    }

    /// Atoms built from whitened references.
    pub fn dictionary(&self) -> &Dictionary<T> {
        &self.dictionary
    }

    /// Atoms built from the references as recorded.
    pub fn raw_dictionary(&self) -> &Dictionary<T> {
        &self.raw_dictionary
    }

    /// Distinct labels in reference order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in self.references.labels() {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }

    fn check_query(&self, query: &Signal<T>) -> Result<()> {
        if query.len() != self.references.n() {
            return domain(format!(
                "query {} has {} samples, references have {}",
                query.id,
                query.len(),
                self.references.n()
            ));
        }
        Ok(())
    }
}

/// Whitens `query` jointly with the model's references and returns the whitened query.
pub fn transductive_whiten<T: Scalar>(
    query: &Signal<T>,
    model: &IdentificationModel<T>,
) -> Result<Signal<T>> {
    model.check_query(query)?;
    let joint = model.references.with_signal(query.clone())?;
    let w = WhiteningModel::fit(&joint, model.method, model.eig_floor)?;
    let white = whiten(&joint, &w)?;
    Ok(white
        .into_signals()
        .pop()
        .expect("joint ensemble is non-empty"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult<T> {
    /// Summed activation per label.
    pub scores: BTreeMap<String, T>,
    pub winner: String,
    /// `(top - runner_up) / top`; 1 with a single label, 0 when indeterminate.
    pub margin: T,
    pub activations: Activations<T>,
}

impl<T: Scalar> IdentificationResult<T> {
    /// Scores sorted by decreasing value, ties by label.
    pub fn ranked(&self) -> Vec<(&str, T)> {
        let mut v: Vec<(&str, T)> = self.scores.iter().map(|(k, &s)| (k.as_str(), s)).collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        v
    }
}

fn decide<T: Scalar>(dict: &Dictionary<T>, h: Activations<T>) -> IdentificationResult<T> {
    let mut scores: BTreeMap<String, T> = BTreeMap::new();
    for (label, row) in dict.labels().iter().zip(h.matrix().rows()) {
        *scores.entry(label.clone()).or_insert_with(T::zero) += row.sum();
    }
    let mut best: Option<(&String, T)> = None;
    for (label, &s) in &scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((label, s));
        }
    }
    let (winner, top) = best.expect("dictionary has at least one atom");
    let (winner, margin) = if top > T::zero() {
        let runner_up = scores
            .iter()
            .filter(|(l, _)| *l != winner)
            .map(|(_, &s)| s)
            .fold(None, |m: Option<T>, s| Some(m.map_or(s, |m| m.max(s))));
        let margin = runner_up.map_or(T::one(), |r| (top - r) / top);
        (winner.clone(), margin)
    } else {
        (INDETERMINATE.to_string(), T::zero())
    };
    IdentificationResult {
        scores,
        winner,
        margin,
        activations: h,
    }
}

/// Identifies one query. `use_whitening = false` runs the unwhitened ablation.
pub fn identify<T: Scalar>(
    query: &Signal<T>,
    model: &IdentificationModel<T>,
    use_whitening: bool,
) -> Result<IdentificationResult<T>> {
    model.check_query(query)?;
    let (processed, dict) = if use_whitening {
        (transductive_whiten(query, model)?, &model.dictionary)
    } else {
        (query.clone(), &model.raw_dictionary)
    };
    let column = rectify(&Ensemble::new(vec![processed])?);
    let (h, _) = solve_activations(&column, dict, &model.solver)?;
    Ok(decide(dict, h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Row and column labels, in model order.
    pub labels: Vec<String>,
    /// `confusion[[true, predicted]]`.
    pub confusion: Array2<usize>,
    /// Per true label: queries that came back indeterminate.
    pub indeterminate: Vec<usize>,
    pub accuracy: f64,
    pub total: usize,
}

/// Identifies every test signal and tallies a confusion matrix.
pub fn evaluate<T: Scalar>(
    test: &Ensemble<T>,
    model: &IdentificationModel<T>,
    use_whitening: bool,
) -> Result<Evaluation> {
    let labels = model.labels();
    let index = |l: &str| labels.iter().position(|x| x == l);
    let k = labels.len();
    let mut confusion = Array2::zeros((k, k));
    let mut indeterminate = vec![0; k];
    for s in test.signals() {
        let Some(truth) = index(&s.label) else {
            return domain(format!(
                "test signal {} has unknown label '{}'",
                s.id, s.label
            ));
        };
        let r = identify(s, model, use_whitening)?;
        match index(&r.winner) {
            Some(p) => confusion[[truth, p]] += 1,
            None => indeterminate[truth] += 1,
        }
    }
    let total = test.d();
    let correct: usize = (0..k).map(|i| confusion[[i, i]]).sum();
    Ok(Evaluation {
        labels,
        confusion,
        indeterminate,
        accuracy: correct as f64 / total as f64,
        total,
    })
}
