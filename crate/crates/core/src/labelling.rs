//! Label-level annotation: states are grouped into label classes and the
//! pointwise risk terms are computed from class-averaged marginals.

use ndarray::Array2;

use crate::decoders::{combined_lattice, DecodedPath};
use crate::error::{Error, Result};
use crate::inference::PosteriorSummary;
use crate::model::{prior_marginals, HmmModel, StatePath};
use crate::risk::{weighted, RiskEvaluator, RiskWeights};

/// Partition of the state space into `num_labels` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    assignment: Vec<usize>,
    names: Vec<String>,
    /// Averaging exponent used by [`averaged_label_posterior`].
    pub averaging_beta: f64,
}

impl LabelMap {
    /// `assignment[s]` is the label of state `s`; labels must cover `0..names.len()`.
    pub fn new(assignment: Vec<usize>, names: Vec<String>, averaging_beta: f64) -> Result<Self> {
        if !(averaging_beta >= 0.0 && averaging_beta.is_finite()) {
            return Err(Error::InvalidLabels(format!("averaging exponent {averaging_beta}")));
        }
        if assignment.is_empty() {
            return Err(Error::InvalidLabels("empty assignment".into()));
        }
        let mut used = vec![false; names.len()];
        for (s, &l) in assignment.iter().enumerate() {
            if l >= names.len() {
                return Err(Error::InvalidLabels(format!("state {} has unknown label {l}", s + 1)));
            }
            used[l] = true;
        }
        if let Some(l) = used.iter().position(|u| !u) {
            return Err(Error::InvalidLabels(format!("label `{}` has no states", names[l])));
        }
        Ok(LabelMap {
            assignment,
            names,
            averaging_beta,
        })
    }

    /// Builds a map from one name per state; labels are numbered by first
    /// appearance.
    pub fn from_state_names<S: AsRef<str>>(state_names: &[S], averaging_beta: f64) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let assignment = state_names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                names.iter().position(|x| x == n).unwrap_or_else(|| {
                    names.push(n.to_string());
                    names.len() - 1
                })
            })
            .collect();
        Self::new(assignment, names, averaging_beta)
    }

    pub fn identity(num_states: usize, averaging_beta: f64) -> Self {
        Self::new(
            (0..num_states).collect(),
            (1..=num_states).map(|s| s.to_string()).collect(),
            averaging_beta,
        )
        .expect("identity labelling is valid")
    }

    pub fn num_states(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_labels(&self) -> usize {
        self.names.len()
    }

    pub fn label_of(&self, state: usize) -> usize {
        self.assignment[state]
    }

    pub fn name(&self, label: usize) -> &str {
        &self.names[label]
    }

    pub fn class(&self, label: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == label)
            .map(|(s, _)| s)
    }

    pub fn labels_of(&self, path: &StatePath) -> Vec<usize> {
        path.states().iter().map(|&s| self.assignment[s]).collect()
    }
}

/// `pbar_t(s; beta)`: arithmetic class mean raised to `beta` for `beta > 0`,
/// geometric class mean for `beta = 0`.
pub fn averaged_label_posterior(
    summary: &PosteriorSummary,
    labels: &LabelMap,
    t: usize,
    s: usize,
) -> Result<f64> {
    average_at(&summary.smoothed, labels, labels.averaging_beta, t, s)
}

fn average_at(table: &Array2<f64>, labels: &LabelMap, beta: f64, t: usize, s: usize) -> Result<f64> {
    let (t_len, k) = table.dim();
    if t >= t_len || s >= k || labels.num_states() != k {
        return Err(Error::IndexOutOfRange(format!(
            "position {} state {} for a {t_len}x{k} table with {} labelled states",
            t + 1,
            s + 1,
            labels.num_states()
        )));
    }
    let members: Vec<f64> = labels.class(labels.label_of(s)).map(|m| table[[t, m]]).collect();
    let n = members.len() as f64;
    Ok(if beta == 0.0 {
        members.iter().product::<f64>().powf(1.0 / n)
    } else {
        (members.iter().sum::<f64>() / n).powf(beta)
    })
}

/// Table of `-rho` scores computed from class averages: `(pbar - 1)/beta`
/// for `beta > 0` and `log pbar` for `beta = 0`.
pub(crate) fn label_scores(table: &Array2<f64>, labels: &LabelMap, beta: f64) -> Array2<f64> {
    let (t_len, k) = table.dim();
    let mut out = Array2::zeros((t_len, k));
    for t in 0..t_len {
        for l in 0..labels.num_labels() {
            let members: Vec<usize> = labels.class(l).collect();
            let n = members.len() as f64;
            let score = if beta == 0.0 {
                members.iter().map(|&m| table[[t, m]].ln()).sum::<f64>() / n
            } else {
                let mean = members.iter().map(|&m| table[[t, m]]).sum::<f64>() / n;
                (mean.powf(beta) - 1.0) / beta
            };
            for &m in &members {
                out[[t, m]] = score;
            }
        }
    }
    out
}

/// Combined risk with label-averaged pointwise terms, evaluated per path.
pub fn combined_label_risk(
    eval: &RiskEvaluator,
    labels: &LabelMap,
    weights: &RiskWeights,
    path: &StatePath,
) -> Result<f64> {
    let t_len = eval.horizon();
    let report = eval.evaluate(path)?;
    let rho = |avg: f64, beta: f64| if beta == 0.0 { -avg.ln() } else { (1.0 - avg) / beta };
    let mut post = 0.0;
    let mut prior = 0.0;
    for (t, &s) in path.states().iter().enumerate() {
        if weights.c1 != 0.0 {
            post += rho(average_at(&eval.summary.smoothed, labels, weights.beta1, t, s)?, weights.beta1);
        }
        if weights.c3 != 0.0 {
            prior += rho(average_at(eval.prior_marginals(), labels, weights.beta3, t, s)?, weights.beta3);
        }
    }
    Ok(weighted(weights.c1, post / t_len as f64)
        + weighted(weights.c2, report.rbarinf_joint)
        + weighted(weights.c3, prior / t_len as f64)
        + weighted(weights.c4, report.rbarinf_prior))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledPath {
    pub decoded: DecodedPath,
    pub labels: Vec<usize>,
}

/// Runs the combined-risk decoder with pointwise terms replaced by class
/// averages. The posterior term averages with `weights.beta1`, the prior
/// term with `weights.beta3`.
pub fn label_decode(
    model: &HmmModel,
    summary: &PosteriorSummary,
    labels: &LabelMap,
    weights: &RiskWeights,
) -> Result<LabelledPath> {
    if labels.num_states() != model.num_states() {
        return Err(Error::InvalidLabels(format!(
            "label map covers {} states, model has {}",
            labels.num_states(),
            model.num_states()
        )));
    }
    let prior = prior_marginals(model, summary.horizon());
    let lat = combined_lattice(
        model,
        summary,
        &label_scores(&summary.smoothed, labels, weights.beta1),
        &label_scores(&prior, labels, weights.beta3),
        weights,
    )?;
    let objective = -lat.best / summary.horizon() as f64;
    let path = StatePath(lat.path);
    let risks = RiskEvaluator::new(model, summary).evaluate(&path)?;
    let label_seq = labels.labels_of(&path);
    Ok(LabelledPath {
        decoded: DecodedPath {
            path,
            objective,
            admissible: risks.rbarinf_posterior < f64::INFINITY,
            risks,
            decoder_tag: format!("labels {weights}"),
        },
        labels: label_seq,
    })
}
