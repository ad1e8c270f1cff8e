//! Text formats for models, observations, label maps and paths.
//!
//! Model files are JSON:
//!
//! ```json
//! {"num_states": 2, "initial": [0.5, 0.5],
//!  "transition": [[0.9, 0.1], [0.1, 0.9]],
//!  "emission": {"type": "categorical", "params": {"probabilities": [[0.8, 0.2], [0.3, 0.7]]}}}
//! ```
//!
//! `type` is one of `categorical`, `gaussian` (`means`, `variances`) or
//! `direct` (`likelihoods`, one row per position). Observation files hold
//! one observation per line: a zero-based symbol, whitespace separated
//! reals, or a zero-based row of the likelihood table. Label files hold
//! `state label` lines with one-based states. Path files hold one one-based
//! state per line, optionally followed by a label name; reading stops at a
//! `---` line.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelling::LabelMap;
use crate::model::{Emission, HmmModel, ObservationSequence, StatePath};

#[derive(Serialize, Deserialize)]
struct ModelFile {
    num_states: usize,
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: EmissionFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
enum EmissionFile {
    Categorical { probabilities: Vec<Vec<f64>> },
    Gaussian { means: Vec<Vec<f64>>, variances: Vec<Vec<f64>> },
    Direct { likelihoods: Vec<Vec<f64>> },
}

fn matrix(name: &str, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("`{name}` rows have unequal lengths")));
    }
    let nrows = rows.len();
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Parse(format!("`{name}`: {e}")))
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Parses and validates a JSON model.
pub fn parse_model(text: &str) -> Result<HmmModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
    if file.initial.len() != file.num_states {
        return Err(Error::InvalidModel(format!(
            "num_states is {} but initial has {} entries",
            file.num_states,
            file.initial.len()
        )));
    }
    let emission = match file.emission {
        EmissionFile::Categorical { probabilities } => Emission::Categorical {
            probabilities: matrix("probabilities", probabilities)?,
        },
        EmissionFile::Gaussian { means, variances } => Emission::DiagonalGaussian {
            means: matrix("means", means)?,
            variances: matrix("variances", variances)?,
        },
        EmissionFile::Direct { likelihoods } => Emission::DirectLikelihood {
            likelihoods: matrix("likelihoods", likelihoods)?,
        },
    };
    HmmModel::new(Array1::from(file.initial), matrix("transition", file.transition)?, emission)
}

pub fn model_to_json(model: &HmmModel) -> String {
    let emission = match model.emission() {
        Emission::Categorical { probabilities } => EmissionFile::Categorical {
            probabilities: rows(probabilities),
        },
        Emission::DiagonalGaussian { means, variances } => EmissionFile::Gaussian {
            means: rows(means),
            variances: rows(variances),
        },
        Emission::DirectLikelihood { likelihoods } => EmissionFile::Direct {
            likelihoods: rows(likelihoods),
        },
    };
    let file = ModelFile {
        num_states: model.num_states(),
        initial: model.initial().to_vec(),
        transition: rows(model.transition()),
        emission,
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn index(line: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: expected a nonnegative integer, got `{s}`")))
}

/// Parses observations in the form the model's emission expects, and checks
/// them against the model.
pub fn parse_observations(text: &str, model: &HmmModel) -> Result<ObservationSequence> {
    let obs = match model.emission() {
        Emission::Categorical { .. } => {
            ObservationSequence::Symbols(data_lines(text).map(|(n, l)| index(n, l)).collect::<Result<_>>()?)
        }
        Emission::DirectLikelihood { .. } => {
            ObservationSequence::Positions(data_lines(text).map(|(n, l)| index(n, l)).collect::<Result<_>>()?)
        }
        Emission::DiagonalGaussian { .. } => ObservationSequence::Vectors(
            data_lines(text)
                .map(|(n, l)| {
                    l.split_whitespace()
                        .map(|v| v.parse().map_err(|_| Error::Parse(format!("line {n}: invalid number `{v}`"))))
                        .collect()
                })
                .collect::<Result<_>>()?,
        ),
    };
    model.check_observations(&obs)?;
    Ok(obs)
}

pub fn format_observations(obs: &ObservationSequence) -> String {
    let mut out = String::new();
    match obs {
        ObservationSequence::Symbols(v) | ObservationSequence::Positions(v) => {
            for x in v {
                out.push_str(&format!("{x}\n"));
            }
        }
        ObservationSequence::Vectors(v) => {
            for x in v {
                let cols: Vec<String> = x.iter().map(|&c| crate::format::fmt_num(c)).collect();
                out.push_str(&cols.join(" "));
                out.push('\n');
            }
        }
    }
    out
}

/// Parses `state label` lines (one-based states) into a label map. Every
/// state must be listed exactly once.
pub fn parse_labels(text: &str, num_states: usize, averaging_beta: f64) -> Result<LabelMap> {
    let mut names: Vec<Option<String>> = vec![None; num_states];
    for (n, line) in data_lines(text) {
        let mut parts = line.split_whitespace();
        let (Some(state), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {n}: expected `state label`")));
        };
        let s = index(n, state)?;
        if s == 0 || s > num_states {
            return Err(Error::InvalidLabels(format!("line {n}: state {s} outside 1..{num_states}")));
        }
        if names[s - 1].replace(label.to_string()).is_some() {
            return Err(Error::InvalidLabels(format!("state {s} labelled twice")));
        }
    }
    let names: Vec<String> = names
        .into_iter()
        .enumerate()
        .map(|(s, n)| n.ok_or_else(|| Error::InvalidLabels(format!("state {} has no label", s + 1))))
        .collect::<Result<_>>()?;
    LabelMap::from_state_names(&names, averaging_beta)
}

/// Reads one-based states, ignoring an optional label column, up to `---`.
pub fn parse_path(text: &str) -> Result<StatePath> {
    let mut states = Vec::new();
    for (n, line) in data_lines(text) {
        if line == "---" {
            break;
        }
        let first = line.split_whitespace().next().unwrap_or_default();
        let s = index(n, first)?;
        if s == 0 {
            return Err(Error::Parse(format!("line {n}: states are numbered from 1")));
        }
        states.push(s);
    }
    if states.is_empty() {
        return Err(Error::Parse("empty path".into()));
    }
    Ok(StatePath::from_one_based(&states))
}

/// One one-based state per line, with the label name when `labels` is given.
pub fn format_path(path: &StatePath, labels: Option<&LabelMap>) -> String {
    let mut out = String::new();
    for &s in path.states() {
        match labels {
            Some(l) => out.push_str(&format!("{} {}\n", s + 1, l.name(l.label_of(s)))),
            None => out.push_str(&format!("{}\n", s + 1)),
        }
    }
    out
}
