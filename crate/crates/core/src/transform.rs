//! Power-transformed forward and backward variables.
//!
//! For `q >= 1` the sums over predecessors (successors) of the usual
//! recursions are replaced by power means `[sum_i (a_i)^q]^(1/q)`. `q = 1`
//! gives the ordinary variables, `q = inf` the max-product ones.
//!
//! Plain tables are held in the log domain. Rescaled tables are linear and
//! normalized at every position by the forward normalizer.

use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::lattice::argmax_first;
use crate::model::{HmmModel, ObservationSequence, StatePath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(q: f64) -> Result<Self> {
        if q.is_finite() && q >= 1.0 {
            Ok(Exponent::Finite(q))
        } else if q == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::InvalidWeights(format!("exponent q must be >= 1, got {q}")))
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" => Ok(Exponent::Infinity),
            _ => Self::finite(crate::format::parse_num(s)?),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => f.write_str(&fmt_num(*q)),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransformedTables {
    pub q: Exponent,
    /// `log alpha_t(j; q)` when plain, `alpha~_t(j; q)` when rescaled.
    pub alpha: Array2<f64>,
    /// `log beta_t(j; q)` when plain, `beta~_t(j; q)` when rescaled.
    pub beta: Array2<f64>,
    pub rescaled: bool,
}

/// `log [sum_i exp(x_i)^q]^(1/q)`, or `max_i x_i` for `q = inf`.
fn log_power_sum(xs: impl Iterator<Item = f64> + Clone, q: Exponent) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    match q {
        Exponent::Infinity => m,
        _ if m == f64::NEG_INFINITY => m,
        Exponent::Finite(q) => m + xs.map(|x| (q * (x - m)).exp()).sum::<f64>().ln() / q,
    }
}

/// `[sum_i a_i^q]^(1/q)` for nonnegative `a_i`, computed relative to the
/// largest term.
fn power_sum(xs: impl Iterator<Item = f64> + Clone, q: Exponent) -> f64 {
    let m = xs.clone().fold(0.0, f64::max);
    match q {
        Exponent::Infinity => m,
        _ if m == 0.0 => 0.0,
        Exponent::Finite(q) => m * xs.map(|x| (x / m).powf(q)).sum::<f64>().powf(1.0 / q),
    }
}

pub fn transformed_forward_backward(
    model: &HmmModel,
    obs: &ObservationSequence,
    q: Exponent,
    rescaled: bool,
) -> Result<TransformedTables> {
    if let Exponent::Finite(v) = q {
        Exponent::finite(v)?;
    }
    let log_f = model.log_emissions(obs)?;
    if rescaled {
        rescaled_tables(model, &log_f, q)
    } else {
        plain_tables(model, &log_f, q)
    }
}

fn plain_tables(model: &HmmModel, log_f: &Array2<f64>, q: Exponent) -> Result<TransformedTables> {
    let (t_len, k) = log_f.dim();
    let log_p = model.log_transition();
    let log_pi = model.log_initial();
    let mut alpha = Array2::from_elem((t_len, k), f64::NEG_INFINITY);
    for j in 0..k {
        alpha[[0, j]] = log_pi[j] + log_f[[0, j]];
    }
    for t in 1..t_len {
        for j in 0..k {
            let prev = alpha.row(t - 1);
            alpha[[t, j]] = log_power_sum((0..k).map(|i| prev[i] + log_p[[i, j]]), q) + log_f[[t, j]];
        }
    }
    if alpha.row(t_len - 1).iter().all(|&v| v == f64::NEG_INFINITY) {
        return Err(Error::ZeroEvidence);
    }
    let mut beta = Array2::zeros((t_len, k));
    for t in (0..t_len - 1).rev() {
        for j in 0..k {
            let next = beta.row(t + 1);
            beta[[t, j]] = log_power_sum((0..k).map(|i| log_p[[j, i]] + log_f[[t + 1, i]] + next[i]), q);
        }
    }
    Ok(TransformedTables {
        q,
        alpha,
        beta,
        rescaled: false,
    })
}

fn rescaled_tables(model: &HmmModel, log_f: &Array2<f64>, q: Exponent) -> Result<TransformedTables> {
    let (t_len, k) = log_f.dim();
    let p = model.transition();
    // Each emission row is divided by its maximum; the factor cancels in
    // every normalized ratio below.
    let mut f = Array2::zeros((t_len, k));
    for t in 0..t_len {
        let m = log_f.row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Err(Error::ZeroEvidence);
        }
        for j in 0..k {
            f[[t, j]] = (log_f[[t, j]] - m).exp();
        }
    }
    let mut alpha = Array2::zeros((t_len, k));
    let mut norm = vec![0.0; t_len];
    for t in 0..t_len {
        for j in 0..k {
            let pre = if t == 0 {
                model.initial()[j]
            } else {
                let prev = alpha.row(t - 1);
                power_sum((0..k).map(|i| prev[i] * p[[i, j]]), q)
            };
            alpha[[t, j]] = pre * f[[t, j]];
        }
        norm[t] = alpha.row(t).sum();
        if !(norm[t] > 0.0 && norm[t].is_finite()) {
            return Err(Error::ZeroEvidence);
        }
        let n = norm[t];
        alpha.row_mut(t).mapv_inplace(|v| v / n);
    }
    let mut beta = Array2::ones((t_len, k));
    for t in (0..t_len - 1).rev() {
        for j in 0..k {
            let next = beta.row(t + 1);
            beta[[t, j]] = power_sum((0..k).map(|i| p[[j, i]] * f[[t + 1, i]] * next[i]), q) / norm[t + 1];
        }
    }
    Ok(TransformedTables {
        q,
        alpha,
        beta,
        rescaled: true,
    })
}

/// `v_t = argmax_j alpha_t(j; q) beta_t(j; q)`, smallest index on ties.
/// The result need not be admissible.
pub fn symbol_by_symbol_decode(tables: &TransformedTables) -> StatePath {
    let path = tables
        .alpha
        .rows()
        .into_iter()
        .zip(tables.beta.rows())
        .map(|(a, b)| {
            let scores = a.iter().zip(b.iter()).map(|(&x, &y)| if tables.rescaled { x * y } else { x + y });
            argmax_first(scores.collect::<Vec<_>>()).expect("nonempty row")
        })
        .collect();
    StatePath(path)
}

/// FNV-1a over the zero-based states, as 64-bit little-endian words.
pub fn path_hash(path: &StatePath) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &s in path.states() {
        for b in (s as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub q: Exponent,
    pub plain_path: StatePath,
    pub rescaled_path: StatePath,
}

impl ProbeRow {
    pub fn agree(&self) -> bool {
        self.plain_path == self.rescaled_path
    }
}

/// Decodes symbol by symbol from plain and rescaled tables at every `q`.
pub fn rescaling_distortion_probe(model: &HmmModel, obs: &ObservationSequence, qs: &[Exponent]) -> Result<Vec<ProbeRow>> {
    qs.par_iter()
        .map(|&q| {
            let plain = symbol_by_symbol_decode(&transformed_forward_backward(model, obs, q, false)?);
            let rescaled = symbol_by_symbol_decode(&transformed_forward_backward(model, obs, q, true)?);
            Ok(ProbeRow {
                q,
                plain_path: plain,
                rescaled_path: rescaled,
            })
        })
        .collect()
}

pub fn probe_csv(rows: &[ProbeRow]) -> String {
    let mut out = String::from("q,plain_path_hash,rescaled_path_hash,agree\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:016x},{:016x},{}\n",
            r.q,
            path_hash(&r.plain_path),
            path_hash(&r.rescaled_path),
            r.agree()
        ));
    }
    out
}
