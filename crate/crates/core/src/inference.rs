//! Scaled forward-backward, block posteriors and Viterbi decoding.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::lattice::{self, ChainTrellis};
use crate::model::{HmmModel, ObservationSequence, StatePath};

/// Largest `K^(k-1)` for which block posteriors are tabulated.
pub const MAX_BLOCK_TUPLES: usize = 1_000_000;

/// Output of [`forward_backward`].
///
/// `scaled_forward[[t, j]] = alpha_t(j) / (c_1 ... c_t)` and
/// `scaled_backward[[t, j]] = beta_t(j) / (c_{t+1} ... c_T)`, so that
/// `log_evidence = sum_t log_scale[t]`.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub scaled_forward: Array2<f64>,
    pub scaled_backward: Array2<f64>,
    /// `log c_t` for every position.
    pub log_scale: Vec<f64>,
    /// Smoothed marginals `p_t(j | x^T)`.
    pub smoothed: Array2<f64>,
    /// `log p(x^T)`.
    pub log_evidence: f64,
    /// `log f_j(x_t)`, kept for block posteriors and risk evaluation.
    pub log_emissions: Array2<f64>,
}

impl PosteriorSummary {
    pub fn horizon(&self) -> usize {
        self.smoothed.nrows()
    }

    pub fn num_states(&self) -> usize {
        self.smoothed.ncols()
    }
}

pub fn forward_backward(model: &HmmModel, obs: &ObservationSequence) -> Result<PosteriorSummary> {
    let log_emissions = model.log_emissions(obs)?;
    summarize(model, log_emissions)
}

/// Forward-backward from a precomputed `T x K` log-emission table.
pub fn summarize(model: &HmmModel, log_emissions: Array2<f64>) -> Result<PosteriorSummary> {
    let (t_len, k) = log_emissions.dim();
    let trans = model.transition();

    // Emissions are shifted by their row maximum before exponentiation so
    // that Gaussian densities far in the tails cannot underflow.
    let mut shifted = Array2::zeros((t_len, k));
    let mut shift = Array1::zeros(t_len);
    for t in 0..t_len {
        let m = log_emissions.row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Err(Error::ZeroEvidence);
        }
        shift[t] = m;
        for j in 0..k {
            shifted[[t, j]] = (log_emissions[[t, j]] - m).exp();
        }
    }

    let mut alpha = Array2::zeros((t_len, k));
    let mut log_scale = vec![0.0; t_len];
    for t in 0..t_len {
        for j in 0..k {
            let prior = if t == 0 {
                model.initial()[j]
            } else {
                (0..k).map(|i| alpha[[t - 1, i]] * trans[[i, j]]).sum()
            };
            alpha[[t, j]] = prior * shifted[[t, j]];
        }
        let c: f64 = alpha.row(t).sum();
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::ZeroEvidence);
        }
        alpha.row_mut(t).mapv_inplace(|v| v / c);
        log_scale[t] = c.ln() + shift[t];
    }

    let mut beta = Array2::zeros((t_len, k));
    beta.row_mut(t_len - 1).fill(1.0);
    for t in (0..t_len.saturating_sub(1)).rev() {
        let ratio: Vec<f64> = (0..k)
            .map(|j| (log_emissions[[t + 1, j]] - log_scale[t + 1]).exp())
            .collect();
        for i in 0..k {
            beta[[t, i]] = (0..k).map(|j| trans[[i, j]] * ratio[j] * beta[[t + 1, j]]).sum();
        }
    }

    let mut smoothed = &alpha * &beta;
    for mut row in smoothed.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }

    Ok(PosteriorSummary {
        scaled_forward: alpha,
        scaled_backward: beta,
        log_evidence: log_scale.iter().sum(),
        log_scale,
        smoothed,
        log_emissions,
    })
}

/// `log p(s_t, ..., s_{t+k-1} | x^T)` for the block starting at `t` (zero-based).
pub fn log_block_posterior(
    summary: &PosteriorSummary,
    model: &HmmModel,
    t: usize,
    block: &[usize],
) -> Result<f64> {
    let t_len = summary.horizon();
    let k = model.num_states();
    if block.is_empty() || t + block.len() > t_len {
        return Err(Error::IndexOutOfRange(format!(
            "block of length {} at position {} exceeds horizon {t_len}",
            block.len(),
            t + 1
        )));
    }
    if let Some(&s) = block.iter().find(|&&s| s >= k) {
        return Err(Error::IndexOutOfRange(format!("state {} of {k}", s + 1)));
    }
    let trans = model.transition();
    let mut acc = summary.scaled_forward[[t, block[0]]].ln();
    for (off, w) in block.windows(2).enumerate() {
        let u = t + off + 1;
        acc += trans[[w[0], w[1]]].ln() + summary.log_emissions[[u, w[1]]] - summary.log_scale[u];
    }
    acc += summary.scaled_backward[[t + block.len() - 1, block[block.len() - 1]]].ln();
    Ok(acc)
}

/// `p(s_t^{t+k-1} | x^T)`; refuses blocks whose `K^(k-1)` exceeds
/// [`MAX_BLOCK_TUPLES`].
pub fn block_posterior(
    summary: &PosteriorSummary,
    model: &HmmModel,
    t: usize,
    block: &[usize],
) -> Result<f64> {
    check_block_len(model.num_states(), block.len(), summary.horizon())?;
    Ok(log_block_posterior(summary, model, t, block)?.exp().clamp(0.0, 1.0))
}

pub(crate) fn check_block_len(num_states: usize, k: usize, horizon: usize) -> Result<()> {
    if k == 0 || k > horizon {
        return Err(Error::KOutOfRange { k, horizon });
    }
    let tuples = (num_states as f64).powi(k as i32 - 1);
    if tuples > MAX_BLOCK_TUPLES as f64 {
        return Err(Error::KOutOfRange { k, horizon });
    }
    Ok(())
}

/// MAP path; ties resolve to the lexicographically smallest optimal path.
pub fn viterbi(model: &HmmModel, obs: &ObservationSequence) -> Result<StatePath> {
    let log_emissions = model.log_emissions(obs)?;
    viterbi_from_emissions(model, &log_emissions)
}

pub(crate) fn viterbi_from_emissions(model: &HmmModel, log_emissions: &Array2<f64>) -> Result<StatePath> {
    let log_init = model.log_initial();
    let initial: Vec<f64> = (0..model.num_states())
        .map(|j| log_init[j] + log_emissions[[0, j]])
        .collect();
    let transition = model.log_transition();
    let trellis = ChainTrellis {
        initial: &initial,
        node: log_emissions,
        transition: &transition,
    };
    match lattice::solve(&trellis) {
        Ok(lat) => Ok(StatePath(lat.path)),
        Err(Error::NoFinitePath) => Err(Error::ZeroEvidence),
        Err(e) => Err(e),
    }
}

/// `log p(x^T, s^T)` from a log-emission table.
pub fn log_joint(model: &HmmModel, log_emissions: &Array2<f64>, path: &StatePath) -> f64 {
    log_prior_path(model, path)
        + path
            .states()
            .iter()
            .enumerate()
            .map(|(t, &s)| log_emissions[[t, s]])
            .sum::<f64>()
}

/// `log p(s^T)` under the prior chain.
pub fn log_prior_path(model: &HmmModel, path: &StatePath) -> f64 {
    let s = path.states();
    let trans = model.transition();
    model.initial()[s[0]].ln()
        + s.windows(2).map(|w| trans[[w[0], w[1]]].ln()).sum::<f64>()
}
