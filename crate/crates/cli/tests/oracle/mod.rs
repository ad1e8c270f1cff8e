//! Reference values by explicit enumeration of every state path.
//!
//! Nothing here calls the inference or risk code of the library: every
//! probability is a plain product of model entries, and every marginal is
//! a sum over enumerated paths.

#![allow(dead_code)]

use riskpath::{Emission, HmmModel};

pub struct Oracle {
    pub k: usize,
    pub t: usize,
    pub paths: Vec<Vec<usize>>,
    /// `p(x^T, s^T)` per path.
    pub joint: Vec<f64>,
    /// `p(s^T)` per path.
    pub prior: Vec<f64>,
    pub evidence: f64,
}

pub fn likelihood_table(model: &HmmModel) -> Vec<Vec<f64>> {
    match model.emission() {
        Emission::DirectLikelihood { likelihoods } => likelihoods.rows().into_iter().map(|r| r.to_vec()).collect(),
        _ => panic!("oracle works on direct-likelihood instances"),
    }
}

pub fn enumerate(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(k.pow(t as u32));
    for code in 0..k.pow(t as u32) {
        out.push((0..t).map(|u| code / k.pow((t - 1 - u) as u32) % k).collect());
    }
    out
}

/// `-(p^beta - 1)/beta`, or `-ln p` at `beta = 0`.
pub fn rho(p: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        -p.ln()
    } else {
        -(p.powf(beta) - 1.0) / beta
    }
}

/// `c * x` with `0 * inf = 0`.
pub fn cx(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

impl Oracle {
    pub fn new(model: &HmmModel) -> Self {
        let f = likelihood_table(model);
        let (t, k) = (f.len(), model.num_states());
        let pi = model.initial();
        let p = model.transition();
        let paths = enumerate(k, t);
        let mut joint = Vec::with_capacity(paths.len());
        let mut prior = Vec::with_capacity(paths.len());
        for s in &paths {
            let mut a = pi[s[0]];
            let mut b = pi[s[0]] * f[0][s[0]];
            for u in 1..t {
                a *= p[[s[u - 1], s[u]]];
                b *= p[[s[u - 1], s[u]]] * f[u][s[u]];
            }
            prior.push(a);
            joint.push(b);
        }
        let evidence = joint.iter().sum();
        Oracle {
            k,
            t,
            paths,
            joint,
            prior,
            evidence,
        }
    }

    pub fn index(&self, path: &[usize]) -> usize {
        path.iter().fold(0, |acc, &s| acc * self.k + s)
    }

    pub fn posterior(&self, path: &[usize]) -> f64 {
        self.joint[self.index(path)] / self.evidence
    }

    /// `p(s_start..s_{start+len-1} = window | x^T)`.
    pub fn window_posterior(&self, start: usize, window: &[usize]) -> f64 {
        self.window(&self.joint, start, window) / self.evidence
    }

    pub fn window_prior(&self, start: usize, window: &[usize]) -> f64 {
        self.window(&self.prior, start, window)
    }

    fn window(&self, weights: &[f64], start: usize, window: &[usize]) -> f64 {
        self.paths
            .iter()
            .zip(weights)
            .filter(|(s, _)| &s[start..start + window.len()] == window)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn marginal(&self, t: usize, j: usize) -> f64 {
        self.window_posterior(t, &[j])
    }

    pub fn prior_marginal(&self, t: usize, j: usize) -> f64 {
        self.window_prior(t, &[j])
    }

    fn tf(&self) -> f64 {
        self.t as f64
    }

    pub fn rbar_inf(&self, s: &[usize]) -> f64 {
        -self.posterior(s).ln() / self.tf()
    }

    pub fn rbar_1(&self, s: &[usize]) -> f64 {
        -(0..self.t).map(|u| self.marginal(u, s[u]).ln()).sum::<f64>() / self.tf()
    }

    /// Sum over all length-k windows, truncated at both ends.
    pub fn rbar_k(&self, s: &[usize], k: usize, prior: bool) -> f64 {
        let (t, k) = (self.t as isize, k as isize);
        let mut total = 0.0;
        for j in (1 - k)..t {
            let lo = (j + 1).max(1) as usize - 1;
            let hi = (j + k).min(t) as usize;
            let w = if prior {
                self.window_prior(lo, &s[lo..hi])
            } else {
                self.window_posterior(lo, &s[lo..hi])
            };
            total += w.ln();
        }
        -total / self.tf()
    }

    pub fn admissible(&self, s: &[usize]) -> bool {
        self.joint[self.index(s)] > 0.0
    }

    /// Minimum of `objective` over all paths.
    pub fn minimum(&self, objective: impl Fn(&[usize]) -> f64) -> f64 {
        self.paths.iter().map(|s| objective(s)).fold(f64::INFINITY, f64::min)
    }

    pub fn combined(&self, s: &[usize], c: [f64; 4], beta1: f64, beta3: f64) -> f64 {
        let tf = self.tf();
        let r1: f64 = (0..self.t).map(|u| rho(self.marginal(u, s[u]), beta1)).sum::<f64>() / tf;
        let r3: f64 = (0..self.t).map(|u| rho(self.prior_marginal(u, s[u]), beta3)).sum::<f64>() / tf;
        let joint = -self.joint[self.index(s)].ln() / tf;
        let prior = -self.prior[self.index(s)].ln() / tf;
        cx(c[0], r1) + cx(c[1], joint) + cx(c[2], r3) + cx(c[3], prior)
    }

    pub fn viterbi(&self, s: &[usize]) -> f64 {
        -self.joint[self.index(s)].ln() / self.tf()
    }

    pub fn pmap(&self, s: &[usize]) -> f64 {
        1.0 - (0..self.t).map(|u| self.marginal(u, s[u])).sum::<f64>() / self.tf()
    }

    pub fn constrained_pmap(&self, s: &[usize]) -> f64 {
        if self.admissible(s) {
            self.pmap(s)
        } else {
            f64::INFINITY
        }
    }

    pub fn pvd(&self, s: &[usize]) -> f64 {
        if self.admissible(s) {
            self.rbar_1(s)
        } else {
            f64::INFINITY
        }
    }

    pub fn alpha(&self, s: &[usize], a: f64) -> f64 {
        cx(1.0 - a, self.rbar_inf(s)) + cx(a, self.rbar_1(s))
    }

    /// Expected number of wrongly decoded length-k blocks.
    pub fn rabiner(&self, s: &[usize], k: usize) -> f64 {
        let gain: f64 = (0..=self.t - k).map(|u| self.window_posterior(u, &s[u..u + k])).sum();
        (self.t - k + 1) as f64 - gain
    }
}

/// `|a - b| <= tol * max(1, |b|)`, with equal infinities accepted.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * b.abs().max(1.0)
}
