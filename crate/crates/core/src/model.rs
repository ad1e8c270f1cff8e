//! HMM instances: validation, prior marginals and trajectory sampling.
//!
//! States are `0..K` internally. Text formats and user-facing messages use
//! the one-based numbering `1..K`.

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on probability sums of user supplied vectors and rows.
pub const INPUT_SUM_TOL: f64 = 1e-12;
/// Tolerance on probability sums of computed marginals.
pub const MARGINAL_SUM_TOL: f64 = 1e-10;

/// Emission specification of an HMM.
#[derive(Debug, Clone, PartialEq)]
pub enum Emission {
    /// `K x M` table of symbol probabilities `f_s(m)`.
    Categorical { probabilities: Array2<f64> },
    /// Per-state diagonal Gaussian, each `K x D`.
    DiagonalGaussian {
        means: Array2<f64>,
        variances: Array2<f64>,
    },
    /// Explicit `T x K` table of density values `f_s(x_t)` bound to one
    /// observation sequence.
    DirectLikelihood { likelihoods: Array2<f64> },
}

/// Observations `x_1..x_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservationSequence {
    Symbols(Vec<usize>),
    Vectors(Vec<Vec<f64>>),
    /// Row indices into a [`Emission::DirectLikelihood`] table.
    Positions(Vec<usize>),
}

impl ObservationSequence {
    pub fn len(&self) -> usize {
        match self {
            ObservationSequence::Symbols(v) => v.len(),
            ObservationSequence::Vectors(v) => v.len(),
            ObservationSequence::Positions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The identity positions `0..T` for a direct-likelihood table.
    pub fn positions(horizon: usize) -> Self {
        ObservationSequence::Positions((0..horizon).collect())
    }
}

/// A hidden state sequence `s_1..s_T` (zero-based state indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatePath(pub Vec<usize>);

impl StatePath {
    pub fn new(states: Vec<usize>) -> Self {
        StatePath(states)
    }

    /// Builds a path from one-based state numbers.
    pub fn from_one_based(states: &[usize]) -> Self {
        StatePath(states.iter().map(|&s| s - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&s| s + 1).collect()
    }
}

impl fmt::Display for StatePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s + 1)?;
        }
        write!(f, ")")
    }
}

/// A homogeneous hidden Markov model.
///
/// Construct through [`HmmModel::new`], which validates. [`HmmModel::from_parts`]
/// skips validation so that [`validate_model`] can report on arbitrary input.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    initial: Array1<f64>,
    transition: Array2<f64>,
    emission: Emission,
}

impl HmmModel {
    pub fn new(initial: Array1<f64>, transition: Array2<f64>, emission: Emission) -> Result<Self> {
        let model = Self::from_parts(initial, transition, emission);
        let report = validate_model(&model);
        if report.is_ok() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(report.to_string()))
        }
    }

    pub fn from_parts(initial: Array1<f64>, transition: Array2<f64>, emission: Emission) -> Self {
        HmmModel {
            initial,
            transition,
            emission,
        }
    }

    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &Array1<f64> {
        &self.initial
    }

    pub fn transition(&self) -> &Array2<f64> {
        &self.transition
    }

    pub fn emission(&self) -> &Emission {
        &self.emission
    }

    pub fn log_initial(&self) -> Array1<f64> {
        self.initial.mapv(f64::ln)
    }

    pub fn log_transition(&self) -> Array2<f64> {
        self.transition.mapv(f64::ln)
    }

    pub fn is_generative(&self) -> bool {
        !matches!(self.emission, Emission::DirectLikelihood { .. })
    }

    /// Checks that `obs` is compatible with the emission specification.
    pub fn check_observations(&self, obs: &ObservationSequence) -> Result<()> {
        if obs.is_empty() {
            return Err(Error::InvalidObservations("empty observation sequence".into()));
        }
        match (&self.emission, obs) {
            (Emission::Categorical { probabilities }, ObservationSequence::Symbols(xs)) => {
                let m = probabilities.ncols();
                if let Some((t, &x)) = xs.iter().enumerate().find(|(_, &x)| x >= m) {
                    return Err(Error::InvalidObservations(format!(
                        "symbol {x} at position {} outside alphabet of size {m}",
                        t + 1
                    )));
                }
                Ok(())
            }
            (Emission::DiagonalGaussian { means, .. }, ObservationSequence::Vectors(xs)) => {
                let d = means.ncols();
                if let Some((t, x)) = xs.iter().enumerate().find(|(_, x)| x.len() != d) {
                    return Err(Error::InvalidObservations(format!(
                        "observation {} has dimension {}, expected {d}",
                        t + 1,
                        x.len()
                    )));
                }
                Ok(())
            }
            (Emission::DirectLikelihood { likelihoods }, ObservationSequence::Positions(xs)) => {
                let rows = likelihoods.nrows();
                if xs.len() != rows {
                    return Err(Error::InvalidObservations(format!(
                        "sequence length {} does not match likelihood table length {rows}",
                        xs.len()
                    )));
                }
                if let Some((t, &x)) = xs.iter().enumerate().find(|(_, &x)| x >= rows) {
                    return Err(Error::InvalidObservations(format!(
                        "position {x} at {} outside likelihood table",
                        t + 1
                    )));
                }
                Ok(())
            }
            _ => Err(Error::InvalidObservations(
                "observation kind does not match emission type".into(),
            )),
        }
    }

    /// `T x K` table of `log f_j(x_t)`.
    pub fn log_emissions(&self, obs: &ObservationSequence) -> Result<Array2<f64>> {
        self.check_observations(obs)?;
        let k = self.num_states();
        let t_len = obs.len();
        let mut table = Array2::zeros((t_len, k));
        match (&self.emission, obs) {
            (Emission::Categorical { probabilities }, ObservationSequence::Symbols(xs)) => {
                for (t, &x) in xs.iter().enumerate() {
                    for j in 0..k {
                        table[[t, j]] = probabilities[[j, x]].ln();
                    }
                }
            }
            (Emission::DiagonalGaussian { means, variances }, ObservationSequence::Vectors(xs)) => {
                for (t, x) in xs.iter().enumerate() {
                    for j in 0..k {
                        table[[t, j]] = x
                            .iter()
                            .enumerate()
                            .map(|(d, &v)| {
                                let var = variances[[j, d]];
                                let diff = v - means[[j, d]];
                                -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var)
                            })
                            .sum();
                    }
                }
            }
            (Emission::DirectLikelihood { likelihoods }, ObservationSequence::Positions(xs)) => {
                for (t, &x) in xs.iter().enumerate() {
                    for j in 0..k {
                        table[[t, j]] = likelihoods[[x, j]].ln();
                    }
                }
            }
            _ => unreachable!("checked by check_observations"),
        }
        Ok(table)
    }
}

/// A single invariant violation found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.message.clone()).collect();
        f.write_str(&msgs.join("; "))
    }
}

fn check_distribution(
    field: &'static str,
    label: &str,
    index: Option<usize>,
    values: impl Iterator<Item = f64> + Clone,
    out: &mut Vec<Violation>,
) {
    let pos = index.map(|i| format!(" {}", i + 1)).unwrap_or_default();
    for (j, v) in values.clone().enumerate() {
        if !v.is_finite() || v < 0.0 {
            out.push(Violation {
                field,
                index,
                message: format!("{label}{pos} entry {} is {v}", j + 1),
            });
            return;
        }
    }
    let sum: f64 = values.sum();
    if (sum - 1.0).abs() > INPUT_SUM_TOL {
        out.push(Violation {
            field,
            index,
            message: format!("{label}{pos} sums to {sum}"),
        });
    }
}

/// Reports every violated model invariant. Never fails.
pub fn validate_model(model: &HmmModel) -> ValidationReport {
    let mut violations = Vec::new();
    let k = model.initial.len();
    if k == 0 {
        violations.push(Violation {
            field: "num_states",
            index: None,
            message: "model has no states".into(),
        });
        return ValidationReport { violations };
    }
    check_distribution("initial", "initial", None, model.initial.iter().copied(), &mut violations);

    if model.transition.dim() != (k, k) {
        violations.push(Violation {
            field: "transition",
            index: None,
            message: format!(
                "transition has shape {:?}, expected ({k}, {k})",
                model.transition.dim()
            ),
        });
    } else {
        for (i, row) in model.transition.rows().into_iter().enumerate() {
            check_distribution("transition", "transition row", Some(i), row.iter().copied(), &mut violations);
        }
    }

    match &model.emission {
        Emission::Categorical { probabilities } => {
            if probabilities.nrows() != k || probabilities.ncols() == 0 {
                violations.push(Violation {
                    field: "emission",
                    index: None,
                    message: format!(
                        "categorical table has shape {:?}, expected ({k}, M)",
                        probabilities.dim()
                    ),
                });
            } else {
                for (i, row) in probabilities.rows().into_iter().enumerate() {
                    check_distribution("emission", "emission row", Some(i), row.iter().copied(), &mut violations);
                }
            }
        }
        Emission::DiagonalGaussian { means, variances } => {
            if means.nrows() != k || means.dim() != variances.dim() || means.ncols() == 0 {
                violations.push(Violation {
                    field: "emission",
                    index: None,
                    message: format!(
                        "gaussian parameters have shapes {:?} and {:?}, expected ({k}, D)",
                        means.dim(),
                        variances.dim()
                    ),
                });
            } else {
                for ((i, d), &v) in variances.indexed_iter() {
                    if !(v > 0.0 && v.is_finite()) {
                        violations.push(Violation {
                            field: "emission",
                            index: Some(i),
                            message: format!("variance of state {} dimension {} is {v}", i + 1, d + 1),
                        });
                    }
                }
                for ((i, d), &m) in means.indexed_iter() {
                    if !m.is_finite() {
                        violations.push(Violation {
                            field: "emission",
                            index: Some(i),
                            message: format!("mean of state {} dimension {} is {m}", i + 1, d + 1),
                        });
                    }
                }
            }
        }
        Emission::DirectLikelihood { likelihoods } => {
            if likelihoods.ncols() != k || likelihoods.nrows() == 0 {
                violations.push(Violation {
                    field: "emission",
                    index: None,
                    message: format!(
                        "likelihood table has shape {:?}, expected (T, {k})",
                        likelihoods.dim()
                    ),
                });
            } else {
                for ((t, j), &v) in likelihoods.indexed_iter() {
                    if !(v >= 0.0 && v.is_finite()) {
                        violations.push(Violation {
                            field: "emission",
                            index: Some(t),
                            message: format!("likelihood at position {} state {} is {v}", t + 1, j + 1),
                        });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Prior marginals `p_t(j) = (pi P^{t-1})_j` for `t = 1..horizon`.
pub fn prior_marginals(model: &HmmModel, horizon: usize) -> Array2<f64> {
    let k = model.num_states();
    let mut out = Array2::zeros((horizon, k));
    if horizon == 0 {
        return out;
    }
    out.row_mut(0).assign(&model.initial);
    for t in 1..horizon {
        let next = out.row(t - 1).dot(&model.transition);
        out.row_mut(t).assign(&next);
    }
    out
}

/// Samples a hidden path and conditionally independent observations.
pub fn sample_trajectory(
    model: &HmmModel,
    horizon: usize,
    seed: u64,
) -> Result<(StatePath, ObservationSequence)> {
    if !model.is_generative() {
        return Err(Error::DirectLikelihoodNotGenerative);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = model.num_states();
    let initial = WeightedIndex::new(model.initial.iter().copied())
        .map_err(|e| Error::InvalidModel(format!("initial distribution: {e}")))?;
    let rows = (0..k)
        .map(|i| {
            WeightedIndex::new(model.transition.row(i).iter().copied())
                .map_err(|e| Error::InvalidModel(format!("transition row {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut states: Vec<usize> = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let s = if t == 0 {
            initial.sample(&mut rng)
        } else {
            rows[states[t - 1]].sample(&mut rng)
        };
        states.push(s);
    }

    let obs = match &model.emission {
        Emission::Categorical { probabilities } => {
            let emit = (0..k)
                .map(|i| {
                    WeightedIndex::new(probabilities.row(i).iter().copied())
                        .map_err(|e| Error::InvalidModel(format!("emission row {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            ObservationSequence::Symbols(states.iter().map(|&s| emit[s].sample(&mut rng)).collect())
        }
        Emission::DiagonalGaussian { means, variances } => {
            let xs = states
                .iter()
                .map(|&s| {
                    means
                        .row(s)
                        .iter()
                        .zip(variances.row(s).iter())
                        .map(|(&m, &v)| {
                            Normal::new(m, v.sqrt())
                                .map(|n| n.sample(&mut rng))
                                .map_err(|e| Error::InvalidModel(format!("gaussian state {}: {e}", s + 1)))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            ObservationSequence::Vectors(xs)
        }
        Emission::DirectLikelihood { .. } => unreachable!(),
    };
    Ok((StatePath(states), obs))
}
