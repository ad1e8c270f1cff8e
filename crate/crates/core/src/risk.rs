//! Risk functionals of a hidden path.
//!
//! All logarithmic risks are normalized by `1/T` and take the value `+inf`
//! when the underlying probability is zero.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::inference::{check_block_len, log_block_posterior, log_joint, log_prior_path, PosteriorSummary};
use crate::model::{prior_marginals, HmmModel, StatePath};

/// `rho(p; beta) = -(p^beta - 1)/beta` for `beta > 0`, `-log p` for `beta = 0`.
pub fn power_risk(p: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0 + 1e-12).contains(&p), "probability {p}");
    if beta == 0.0 {
        -p.ln()
    } else {
        -(p.powf(beta) - 1.0) / beta
    }
}

/// `c * x` with the convention `0 * inf = 0`.
pub(crate) fn weighted(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

/// Weights of the combined risk
/// `C1 R1(.|x; beta1) + C2 Rbar_inf(., x) + C3 R1(.; beta3) + C4 Rbar_inf(.)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskWeights {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub beta1: f64,
    pub beta3: f64,
}

impl RiskWeights {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64, beta1: f64, beta3: f64) -> Result<Self> {
        let w = RiskWeights {
            c1,
            c2,
            c3,
            c4,
            beta1,
            beta3,
        };
        w.validate()?;
        Ok(w)
    }

    /// Logarithmic family (`beta1 = beta3 = 0`).
    pub fn log_family(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        Self::new(c1, c2, c3, c4, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c2, self.c3, self.c4, self.beta1, self.beta3];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights and exponents must be finite and nonnegative: {self}"
            )));
        }
        if self.c1 + self.c2 + self.c3 + self.c4 <= 0.0 {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }
        Ok(())
    }
}

impl fmt::Display for RiskWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C=({},{},{},{}) beta1={} beta3={}",
            fmt_num(self.c1),
            fmt_num(self.c2),
            fmt_num(self.c3),
            fmt_num(self.c4),
            fmt_num(self.beta1),
            fmt_num(self.beta3)
        )
    }
}

/// Every risk of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub r1_posterior: f64,
    pub rbar1_posterior: f64,
    pub rinf_posterior: f64,
    pub rbarinf_posterior: f64,
    pub rbarinf_joint: f64,
    pub r1_prior: f64,
    pub rbar1_prior: f64,
    pub rbarinf_prior: f64,
}

impl RiskReport {
    pub const FIELDS: [&'static str; 8] = [
        "r1_posterior",
        "rbar1_posterior",
        "rinf_posterior",
        "rbarinf_posterior",
        "rbarinf_joint",
        "r1_prior",
        "rbar1_prior",
        "rbarinf_prior",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.r1_posterior,
            self.rbar1_posterior,
            self.rinf_posterior,
            self.rbarinf_posterior,
            self.rbarinf_joint,
            self.r1_prior,
            self.rbar1_prior,
            self.rbarinf_prior,
        ]
    }

    pub fn fields(&self) -> impl Iterator<Item = (&'static str, f64)> {
        Self::FIELDS.into_iter().zip(self.values())
    }

    /// One `name value` pair per line.
    pub fn to_record(&self) -> String {
        self.fields()
            .map(|(k, v)| format!("{k} {}\n", fmt_num(v)))
            .collect()
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut vals = [f64::NAN; 8];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut it = line.split_whitespace();
            let (Some(key), Some(val), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("malformed risk line `{line}`")));
            };
            let idx = Self::FIELDS
                .iter()
                .position(|f| *f == key)
                .ok_or_else(|| Error::Parse(format!("unknown risk field `{key}`")))?;
            vals[idx] = crate::format::parse_num(val)?;
        }
        if let Some(i) = vals.iter().position(|v| v.is_nan()) {
            return Err(Error::Parse(format!("missing risk field `{}`", Self::FIELDS[i])));
        }
        Ok(RiskReport {
            r1_posterior: vals[0],
            rbar1_posterior: vals[1],
            rinf_posterior: vals[2],
            rbarinf_posterior: vals[3],
            rbarinf_joint: vals[4],
            r1_prior: vals[5],
            rbar1_prior: vals[6],
            rbarinf_prior: vals[7],
        })
    }

    pub fn csv_header() -> String {
        Self::FIELDS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.values().iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(",")
    }
}

/// Precomputed tables for evaluating risks of many paths against one
/// `(model, observations)` pair.
pub struct RiskEvaluator<'a> {
    pub model: &'a HmmModel,
    pub summary: &'a PosteriorSummary,
    prior: Array2<f64>,
}

impl<'a> RiskEvaluator<'a> {
    pub fn new(model: &'a HmmModel, summary: &'a PosteriorSummary) -> Self {
        let prior = prior_marginals(model, summary.horizon());
        RiskEvaluator { model, summary, prior }
    }

    pub fn prior_marginals(&self) -> &Array2<f64> {
        &self.prior
    }

    pub fn horizon(&self) -> usize {
        self.summary.horizon()
    }

    fn check(&self, path: &StatePath) -> Result<()> {
        if path.len() != self.horizon() {
            return Err(Error::IndexOutOfRange(format!(
                "path length {} does not match horizon {}",
                path.len(),
                self.horizon()
            )));
        }
        let k = self.model.num_states();
        if let Some(&s) = path.states().iter().find(|&&s| s >= k) {
            return Err(Error::IndexOutOfRange(format!("state {} of {k}", s + 1)));
        }
        Ok(())
    }

    pub fn evaluate(&self, path: &StatePath) -> Result<RiskReport> {
        self.check(path)?;
        let t_len = self.horizon() as f64;
        let s = path.states();
        let post = &self.summary.smoothed;
        let sum_post: f64 = s.iter().enumerate().map(|(t, &j)| post[[t, j]]).sum();
        let sum_log_post: f64 = s.iter().enumerate().map(|(t, &j)| post[[t, j]].ln()).sum();
        let sum_prior: f64 = s.iter().enumerate().map(|(t, &j)| self.prior[[t, j]]).sum();
        let sum_log_prior: f64 = s.iter().enumerate().map(|(t, &j)| self.prior[[t, j]].ln()).sum();
        let lj = log_joint(self.model, &self.summary.log_emissions, path);
        let lp = log_prior_path(self.model, path);
        let rbarinf_joint = -lj / t_len;
        let rbarinf_posterior = if lj == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            rbarinf_joint + self.summary.log_evidence / t_len
        };
        Ok(RiskReport {
            r1_posterior: 1.0 - sum_post / t_len,
            rbar1_posterior: -sum_log_post / t_len,
            rinf_posterior: 1.0 - (-t_len * rbarinf_posterior).exp(),
            rbarinf_posterior,
            rbarinf_joint,
            r1_prior: 1.0 - sum_prior / t_len,
            rbar1_prior: -sum_log_prior / t_len,
            rbarinf_prior: -lp / t_len,
        })
    }

    /// Combined risk minimized by the generalized decoder, with the
    /// data term in its joint form `Rbar_inf(s^T, x^T)`.
    pub fn combined(&self, path: &StatePath, weights: &RiskWeights) -> Result<f64> {
        self.check(path)?;
        let t_len = self.horizon() as f64;
        let s = path.states();
        let post = &self.summary.smoothed;
        let pointwise_post: f64 = s
            .iter()
            .enumerate()
            .map(|(t, &j)| power_risk(post[[t, j]], weights.beta1))
            .sum::<f64>()
            / t_len;
        let pointwise_prior: f64 = s
            .iter()
            .enumerate()
            .map(|(t, &j)| power_risk(self.prior[[t, j]], weights.beta3))
            .sum::<f64>()
            / t_len;
        let joint = -log_joint(self.model, &self.summary.log_emissions, path) / t_len;
        let prior_path = -log_prior_path(self.model, path) / t_len;
        Ok(weighted(weights.c1, pointwise_post)
            + weighted(weights.c2, joint)
            + weighted(weights.c3, pointwise_prior)
            + weighted(weights.c4, prior_path))
    }

    /// `sum_{t=1}^{T-k+1} p(s_t^{t+k-1} | x^T)`.
    pub fn rabiner_block_gain(&self, path: &StatePath, k: usize) -> Result<f64> {
        self.check(path)?;
        rabiner_block_gain(self.summary, self.model, path, k)
    }
}

pub fn evaluate_risks(model: &HmmModel, summary: &PosteriorSummary, path: &StatePath) -> Result<RiskReport> {
    RiskEvaluator::new(model, summary).evaluate(path)
}

/// Sum of the posterior probabilities of all length-`k` windows of `path`.
/// Equals `T - k + 1` minus the expected number of wrongly decoded blocks.
pub fn rabiner_block_gain(
    summary: &PosteriorSummary,
    model: &HmmModel,
    path: &StatePath,
    k: usize,
) -> Result<f64> {
    let t_len = summary.horizon();
    if path.len() != t_len {
        return Err(Error::IndexOutOfRange(format!(
            "path length {} does not match horizon {t_len}",
            path.len()
        )));
    }
    check_block_len(model.num_states(), k, t_len)?;
    let s = path.states();
    let mut gain = 0.0;
    for t in 0..=t_len - k {
        gain += log_block_posterior(summary, model, t, &s[t..t + k])?.exp();
    }
    Ok(gain)
}

/// A first-order Markov chain on `S^T` that can score windows of a path.
pub trait FirstOrderChain {
    fn horizon(&self) -> usize;
    /// `log p(s_start, ..., s_{start + len - 1})` for the given window states.
    fn log_window(&self, start: usize, states: &[usize]) -> f64;

    /// `-(1/T) log p(s^T)`.
    fn rbar_inf(&self, path: &StatePath) -> f64 {
        -self.log_window(0, path.states()) / self.horizon() as f64
    }

    /// `-(1/T) sum_t log p_t(s_t)`.
    fn rbar_1(&self, path: &StatePath) -> f64 {
        let s = path.states();
        -(0..s.len()).map(|t| self.log_window(t, &s[t..=t])).sum::<f64>() / self.horizon() as f64
    }
}

/// The hidden chain a priori.
pub struct PriorChain {
    marginals: Array2<f64>,
    log_transition: Array2<f64>,
}

impl PriorChain {
    pub fn new(model: &HmmModel, horizon: usize) -> Self {
        PriorChain {
            marginals: prior_marginals(model, horizon),
            log_transition: model.log_transition(),
        }
    }
}

impl FirstOrderChain for PriorChain {
    fn horizon(&self) -> usize {
        self.marginals.nrows()
    }

    fn log_window(&self, start: usize, states: &[usize]) -> f64 {
        self.marginals[[start, states[0]]].ln()
            + states
                .windows(2)
                .map(|w| self.log_transition[[w[0], w[1]]])
                .sum::<f64>()
    }
}

/// The hidden chain conditioned on the observations.
pub struct PosteriorChain<'a> {
    pub model: &'a HmmModel,
    pub summary: &'a PosteriorSummary,
}

impl FirstOrderChain for PosteriorChain<'_> {
    fn horizon(&self) -> usize {
        self.summary.horizon()
    }

    fn log_window(&self, start: usize, states: &[usize]) -> f64 {
        log_block_posterior(self.summary, self.model, start, states).unwrap_or(f64::NEG_INFINITY)
    }
}

/// `Rbar_k(s^T) = -(1/T) log prod_{j=1-k}^{T-1} p(s_{(j+1) v 1}^{(j+k) ^ T})`,
/// including the truncated windows at both ends.
pub fn kblock_logrisk<C: FirstOrderChain + ?Sized>(chain: &C, path: &StatePath, k: usize) -> Result<f64> {
    let t_len = chain.horizon();
    if k == 0 || k > t_len || path.len() != t_len {
        return Err(Error::KOutOfRange { k, horizon: t_len });
    }
    let s = path.states();
    let (t_i, k_i) = (t_len as isize, k as isize);
    let mut total = 0.0;
    for j in (1 - k_i)..t_i {
        let lo = (j + 1).max(1) as usize - 1;
        let hi = (j + k_i).min(t_i) as usize;
        total += chain.log_window(lo, &s[lo..hi]);
    }
    Ok(-total / t_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{four_state_example, random_direct_instance};
    use crate::inference::forward_backward;
    use crate::model::{Emission, ObservationSequence};
    use ndarray::array;

    #[test]
    fn power_risk_values() {
        for b in [0.0, 0.3, 1.0, 2.5] {
            assert_eq!(power_risk(1.0, b), 0.0);
        }
        assert!((power_risk(0.3, 1.0) - 0.7).abs() < 1e-15);
        assert!((power_risk(0.5, 1e-6) - power_risk(0.5, 0.0)).abs() < 1e-6);
        assert_eq!(power_risk(0.0, 0.0), f64::INFINITY);
        assert_eq!(power_risk(0.0, 2.0), 0.5);
    }

    proptest::proptest! {
        #[test]
        fn power_risk_nonincreasing(p in 0.0f64..1.0, q in 0.0f64..1.0, b in 0.0f64..3.0) {
            let (lo, hi) = if p < q { (p, q) } else { (q, p) };
            proptest::prop_assert!(power_risk(hi, b) <= power_risk(lo, b) + 1e-15);
        }
    }

    #[test]
    fn weights_validation() {
        assert!(RiskWeights::log_family(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(RiskWeights::new(1.0, -1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(RiskWeights::new(1.0, 0.0, 0.0, 0.0, f64::NAN, 0.0).is_err());
        assert!(RiskWeights::new(0.0, 0.0, 0.0, 1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn single_state_risks_vanish() {
        let model = HmmModel::new(
            array![1.0],
            array![[1.0]],
            Emission::Categorical {
                probabilities: array![[0.4, 0.6]],
            },
        )
        .unwrap();
        let obs = ObservationSequence::Symbols(vec![0, 1, 1]);
        let s = forward_backward(&model, &obs).unwrap();
        let r = evaluate_risks(&model, &s, &StatePath(vec![0, 0, 0])).unwrap();
        assert!(r.r1_posterior.abs() < 1e-15);
        assert_eq!(r.rbarinf_prior, 0.0);
        assert!(r.rbarinf_posterior.abs() < 1e-12);
    }

    #[test]
    fn inadmissible_example_path_has_infinite_log_risk() {
        let (model, obs) = four_state_example(2.0);
        let s = forward_backward(&model, &obs).unwrap();
        let r = evaluate_risks(&model, &s, &StatePath::from_one_based(&[2, 1, 1, 2])).unwrap();
        assert_eq!(r.rinf_posterior, 1.0);
        assert_eq!(r.rbarinf_posterior, f64::INFINITY);
        assert!(r.rbar1_posterior.is_finite());
    }

    #[test]
    fn report_identities_and_joint_risk() {
        for seed in 0..30 {
            let (model, obs) = random_direct_instance(seed, 3, 6, 0.1);
            let Ok(s) = forward_backward(&model, &obs) else { continue };
            let path = StatePath((0..6).map(|t| (t * 7 + seed as usize) % 3).collect());
            let r = evaluate_risks(&model, &s, &path).unwrap();
            // direct product of model terms
            let Emission::DirectLikelihood { likelihoods } = model.emission() else { unreachable!() };
            let st = path.states();
            let mut joint = model.initial()[st[0]] * likelihoods[[0, st[0]]];
            for t in 1..6 {
                joint *= model.transition()[[st[t - 1], st[t]]] * likelihoods[[t, st[t]]];
            }
            let expected = -joint.ln() / 6.0;
            if expected.is_finite() {
                assert!((r.rbarinf_joint - expected).abs() < 1e-10);
                assert!((r.rbarinf_posterior - (r.rbarinf_joint + s.log_evidence / 6.0)).abs() < 1e-9);
                assert!((r.rinf_posterior - (1.0 - (-6.0 * r.rbarinf_posterior).exp())).abs() < 1e-9);
            } else {
                assert_eq!(r.rbarinf_joint, f64::INFINITY);
                assert_eq!(r.rinf_posterior, 1.0);
            }
        }
    }

    #[test]
    fn record_round_trip_with_infinity() {
        let (model, obs) = four_state_example(2.0);
        let s = forward_backward(&model, &obs).unwrap();
        let r = evaluate_risks(&model, &s, &StatePath::from_one_based(&[2, 1, 1, 2])).unwrap();
        let text = r.to_record();
        assert!(text.contains("rbarinf_posterior inf"));
        let back = RiskReport::from_record(&text).unwrap();
        for (a, b) in r.values().iter().zip(back.values()) {
            assert!(a == &b || (a - b).abs() <= 1e-11 * a.abs());
        }
    }

    #[test]
    fn kblock_k1_is_rbar1_and_full_length_closed_form() {
        for seed in 0..20 {
            let (model, obs) = random_direct_instance(50 + seed, 3, 5, 0.0);
            let s = forward_backward(&model, &obs).unwrap();
            let path = StatePath(vec![0, 1, 2, 2, 1]);
            let post = PosteriorChain { model: &model, summary: &s };
            let r = evaluate_risks(&model, &s, &path).unwrap();
            assert!((kblock_logrisk(&post, &path, 1).unwrap() - r.rbar1_posterior).abs() < 1e-12);
            let prior = PriorChain::new(&model, 5);
            assert!((kblock_logrisk(&prior, &path, 1).unwrap() - r.rbar1_prior).abs() < 1e-12);
            let rt = kblock_logrisk(&post, &path, 5).unwrap();
            assert!((rt - (4.0 * r.rbarinf_posterior + r.rbar1_posterior)).abs() < 1e-9);
            assert!((post.rbar_inf(&path) - r.rbarinf_posterior).abs() < 1e-10);
            assert!(kblock_logrisk(&post, &path, 6).is_err());
            assert!(kblock_logrisk(&post, &path, 0).is_err());
        }
    }

    #[test]
    fn rabiner_gain_special_cases() {
        let (model, obs) = four_state_example(2.0);
        let s = forward_backward(&model, &obs).unwrap();
        let eval = RiskEvaluator::new(&model, &s);
        let a = 2.0;
        let g2112 = eval.rabiner_block_gain(&StatePath::from_one_based(&[2, 1, 1, 2]), 2).unwrap();
        let g2222 = eval.rabiner_block_gain(&StatePath::from_one_based(&[2, 2, 2, 2]), 2).unwrap();
        assert!((g2112 / g2222 - 80.0 * a / (32.0 * a + 13.0)).abs() < 1e-9);

        let path = StatePath::from_one_based(&[2, 4, 1, 2]);
        let r = eval.evaluate(&path).unwrap();
        let g1 = eval.rabiner_block_gain(&path, 1).unwrap();
        assert!((g1 - 4.0 * (1.0 - r.r1_posterior)).abs() < 1e-12);
        let g4 = eval.rabiner_block_gain(&path, 4).unwrap();
        assert!((g4 - (1.0 - r.rinf_posterior)).abs() < 1e-12);
        assert!(eval.rabiner_block_gain(&path, 5).is_err());
    }
}
