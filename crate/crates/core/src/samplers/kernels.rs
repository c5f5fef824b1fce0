use rand::Rng;

use super::GlobalProposal;
use crate::error::{Error, Result};
use crate::graph::{AncestorMatrix, Dag, NodeSet};
use crate::numeric::log_sum_exp;
use crate::priors::GlobalPrior;
use crate::scoring::FamilyScoreTable;

/// Current graph of a structure chain with its cached target terms.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub dag: Dag,
    pub ancestors: AncestorMatrix,
    pub log_lik: f64,
    pub log_prior: f64,
    pub step: usize,
}

impl ChainState {
    pub fn new(dag: Dag, t: &FamilyScoreTable, prior: &GlobalPrior) -> Result<Self> {
        let log_lik = t.graph_log_marglik(&dag)?;
        let log_prior = prior.log_prior(&dag)?;
        if log_prior == f64::NEG_INFINITY || log_prior.is_nan() {
            return Err(Error::input(format!("initial graph {dag} has zero prior mass")));
        }
        Ok(ChainState {
            ancestors: AncestorMatrix::from_dag(&dag),
            dag,
            log_lik,
            log_prior,
            step: 0,
        })
    }

    pub fn log_target(&self) -> f64 {
        self.log_lik + self.log_prior
    }

    fn replace(&mut self, dag: Dag, anc: AncestorMatrix, t: &FamilyScoreTable, log_prior: f64) {
        self.log_lik = t.log_marglik_or_neg_inf(&dag);
        self.log_prior = log_prior;
        self.dag = dag;
        self.ancestors = anc;
    }
}

/// Outcome of one kernel application.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub kernel: KernelUsed,
    pub accepted: bool,
    /// Global proposal ran out of retries; the step counted as a rejection.
    pub retries_exhausted: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KernelUsed {
    #[default]
    Local,
    Global,
    Gibbs,
}

fn accept<R: Rng + ?Sized>(log_alpha: f64, rng: &mut R) -> bool {
    if log_alpha >= 0.0 {
        return true;
    }
    if log_alpha.is_nan() || log_alpha == f64::NEG_INFINITY {
        return false;
    }
    rng.random::<f64>().ln() < log_alpha
}

/// `log p(G')` after changing the families in `changed`, exploiting
/// modularity when the prior has it.
fn proposed_log_prior(
    s: &ChainState,
    prior: &GlobalPrior,
    new: &Dag,
    changed: &[usize],
) -> Result<f64> {
    match prior.modular_part() {
        Some(None) => Ok(0.0),
        Some(Some(p)) => {
            let d = new.d();
            let delta: f64 = changed
                .iter()
                .map(|&i| p.log_rho(i, new.parents(i), d) - p.log_rho(i, s.dag.parents(i), d))
                .sum();
            Ok(s.log_prior + delta)
        }
        None => prior.log_prior(new),
    }
}

/// Metropolis–Hastings step with a uniform proposal over single-edge
/// additions, deletions and reversals.
pub fn local_step<R: Rng + ?Sized>(
    s: &mut ChainState,
    t: &FamilyScoreTable,
    prior: &GlobalPrior,
    rng: &mut R,
) -> Result<StepOutcome> {
    s.step += 1;
    let mut out = StepOutcome {
        kernel: KernelUsed::Local,
        ..Default::default()
    };
    let edits = s.dag.legal_edits(&s.ancestors);
    if edits.is_empty() {
        return Ok(out);
    }
    let edit = edits[rng.random_range(0..edits.len())];
    let mut new = s.dag.clone();
    let mut anc = s.ancestors.clone();
    anc.apply(&mut new, edit)?;
    let (a, b) = edit.touched_families();
    let changed: Vec<usize> = std::iter::once(a).chain(b).collect();
    let mut delta_ll = 0.0;
    for &i in &changed {
        match t.score(i, new.parents(i)) {
            Some(v) => delta_ll += v - t.score_or_neg_inf(i, s.dag.parents(i)),
            None => return Ok(out),
        }
    }
    let new_prior = proposed_log_prior(s, prior, &new, &changed)?;
    let n_new = new.count_legal_edits(&anc);
    let log_alpha = delta_ll + (new_prior - s.log_prior) + (edits.len() as f64).ln()
        - (n_new as f64).ln();
    if accept(log_alpha, rng) {
        s.replace(new, anc, t, new_prior);
        out.accepted = true;
    }
    Ok(out)
}

/// Independence Metropolis–Hastings step using the global proposal.
pub fn global_step<R: Rng + ?Sized>(
    s: &mut ChainState,
    gp: &GlobalProposal,
    t: &FamilyScoreTable,
    prior: &GlobalPrior,
    max_retries: usize,
    rng: &mut R,
) -> Result<StepOutcome> {
    s.step += 1;
    let mut out = StepOutcome {
        kernel: KernelUsed::Global,
        ..Default::default()
    };
    let (proposal, _) = gp.sample(rng, max_retries);
    let Some(new) = proposal else {
        out.retries_exhausted = true;
        return Ok(out);
    };
    let new_ll = t.log_marglik_or_neg_inf(&new);
    if new_ll == f64::NEG_INFINITY {
        return Ok(out);
    }
    let new_prior = prior.log_prior(&new)?;
    let log_alpha = (new_ll + new_prior) - s.log_target() + gp.log_q(&s.dag) - gp.log_q(&new);
    if accept(log_alpha, rng) {
        let anc = AncestorMatrix::from_dag(&new);
        s.replace(new, anc, t, new_prior);
        out.accepted = true;
    }
    Ok(out)
}

/// Local kernel with probability `beta`, global kernel otherwise. For
/// `beta` of exactly 0 or 1 no coin is drawn, so the chain coincides with
/// the pure kernel's chain for the same random stream.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_step<R: Rng + ?Sized>(
    s: &mut ChainState,
    beta: f64,
    gp: &GlobalProposal,
    t: &FamilyScoreTable,
    prior: &GlobalPrior,
    max_retries: usize,
    rng: &mut R,
) -> Result<StepOutcome> {
    let local = if beta >= 1.0 {
        true
    } else if beta <= 0.0 {
        false
    } else {
        rng.random::<f64>() < beta
    };
    if local {
        local_step(s, t, prior, rng)
    } else {
        global_step(s, gp, t, prior, max_retries, rng)
    }
}

/// One systematic Gibbs sweep over unordered pairs, resampling each pair
/// among no edge and the orientations that keep the graph acyclic.
pub fn gibbs_step<R: Rng + ?Sized>(
    s: &mut ChainState,
    t: &FamilyScoreTable,
    prior: &GlobalPrior,
    rng: &mut R,
) -> Result<StepOutcome> {
    s.step += 1;
    let d = s.dag.d();
    let before = s.dag.clone();
    let modular = prior.modular_part();
    for i in 0..d {
        for j in i + 1..d {
            let mut base = s.dag.clone();
            let pi = base.parents(i).without(j);
            let pj = base.parents(j).without(i);
            base.set_parents_unchecked(i, pi);
            base.set_parents_unchecked(j, pj);
            let options: [(NodeSet, NodeSet, bool); 3] = [
                (pi, pj, true),
                (pi, pj.with(i), !base.descendants(j).contains(i)),
                (pi.with(j), pj, !base.descendants(i).contains(j)),
            ];
            let mut logw = [f64::NEG_INFINITY; 3];
            for (k, &(a, b, legal)) in options.iter().enumerate() {
                if !legal {
                    continue;
                }
                let (Some(si), Some(sj)) = (t.score(i, a), t.score(j, b)) else {
                    continue;
                };
                let lp = match modular {
                    Some(None) => 0.0,
                    Some(Some(p)) => p.log_rho(i, a, d) + p.log_rho(j, b, d),
                    None => {
                        let mut g = base.clone();
                        g.set_parents_unchecked(i, a);
                        g.set_parents_unchecked(j, b);
                        prior.log_prior(&g)?
                    }
                };
                logw[k] = si + sj + lp;
            }
            let z = log_sum_exp(&logw);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = 0;
            for (k, &w) in logw.iter().enumerate() {
                if w == f64::NEG_INFINITY {
                    continue;
                }
                pick = k;
                acc += (w - z).exp();
                if u < acc {
                    break;
                }
            }
            let (a, b, _) = options[pick];
            base.set_parents_unchecked(i, a);
            base.set_parents_unchecked(j, b);
            s.dag = base;
        }
    }
    s.ancestors = AncestorMatrix::from_dag(&s.dag);
    s.log_lik = t.graph_log_marglik(&s.dag)?;
    s.log_prior = prior.log_prior(&s.dag)?;
    Ok(StepOutcome {
        kernel: KernelUsed::Gibbs,
        accepted: s.dag != before,
        retries_exhausted: false,
    })
}
