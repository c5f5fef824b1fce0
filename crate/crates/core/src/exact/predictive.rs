use std::cell::Cell;

use super::dp::dp_build;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::priors::ModularPrior;
use crate::scoring::build_score_table;

/// Exact Bayesian predictive `p(x | D)` by the ratio `p(D ∪ {x}) / p(D)`.
///
/// Each query costs one full score-table build and DP run; the constructor
/// costs one more for `p(D)`.
pub struct DpPredictor<'a> {
    train: &'a Dataset,
    prior: ModularPrior,
    max_indegree: usize,
    log_evidence: f64,
    builds: Cell<usize>,
}

impl<'a> DpPredictor<'a> {
    pub fn new(train: &'a Dataset, prior: ModularPrior, max_indegree: usize) -> Result<Self> {
        let log_evidence = evidence(train, &prior, max_indegree)?;
        Ok(DpPredictor {
            train,
            prior,
            max_indegree,
            log_evidence,
            builds: Cell::new(1),
        })
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// Number of DP runs so far.
    pub fn builds(&self) -> usize {
        self.builds.get()
    }

    pub fn logprob(&self, x: &[usize]) -> Result<f64> {
        self.train.check_record(x)?;
        let joint = self.train.with_record(x)?;
        let lp = evidence(&joint, &self.prior, self.max_indegree)?;
        self.builds.set(self.builds.get() + 1);
        Ok(lp - self.log_evidence)
    }
}

fn evidence(ds: &Dataset, prior: &ModularPrior, max_indegree: usize) -> Result<f64> {
    let t = build_score_table(ds, max_indegree)?;
    Ok(dp_build(&t, prior)?.log_marginal_likelihood())
}

/// `ln p(x | D)` for one fully observed record.
pub fn dp_predictive_logprob(
    train: &Dataset,
    x: &[usize],
    prior: &ModularPrior,
    max_indegree: usize,
) -> Result<f64> {
    if x.len() != train.d() {
        return Err(Error::input(format!(
            "record has {} values, dataset has {} variables",
            x.len(),
            train.d()
        )));
    }
    DpPredictor::new(train, prior.clone(), max_indegree)?.logprob(x)
}
