//! Path decoders: the generalized combined-risk dynamic program, its special
//! cases, the block-gain decoder and an exhaustive reference decoder.
//!
//! Every decoder returns the lexicographically smallest optimal path (see
//! [`crate::lattice`]). Objectives are reported as risks, i.e. the value
//! being minimized, normalized by `1/T`.

use ndarray::Array2;
use std::fmt;

use crate::error::{Error, Result};
use crate::inference::{check_block_len, log_block_posterior, PosteriorSummary};
use crate::labelling::{self, LabelMap};
use crate::lattice::{self, argmax_first, ChainTrellis, Lattice, Trellis};
use crate::model::{HmmModel, StatePath};
use crate::risk::{kblock_logrisk, power_risk, weighted, PosteriorChain, RiskEvaluator, RiskReport, RiskWeights};

/// Weight standing in for "sufficiently small" path-probability penalties.
pub const EPSILON_WEIGHT: f64 = 1e-9;

/// Largest number of paths [`brute_force_decode`] will enumerate.
pub const MAX_ENUMERATION: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath {
    pub path: StatePath,
    /// Value of the minimized risk at `path`.
    pub objective: f64,
    pub risks: RiskReport,
    /// `p(path | x^T) > 0`.
    pub admissible: bool,
    pub decoder_tag: String,
}

fn finish(
    model: &HmmModel,
    summary: &PosteriorSummary,
    path: StatePath,
    objective: f64,
    decoder_tag: String,
) -> Result<DecodedPath> {
    let risks = RiskEvaluator::new(model, summary).evaluate(&path)?;
    Ok(DecodedPath {
        path,
        objective,
        admissible: risks.rbarinf_posterior < f64::INFINITY,
        risks,
        decoder_tag,
    })
}

/// Builds and solves the combined-risk trellis from per-position pointwise
/// scores (`-rho` of posterior and prior terms, already transformed).
pub(crate) fn combined_lattice(
    model: &HmmModel,
    summary: &PosteriorSummary,
    posterior_scores: &Array2<f64>,
    prior_scores: &Array2<f64>,
    weights: &RiskWeights,
) -> Result<Lattice> {
    weights.validate()?;
    let (t_len, k) = summary.log_emissions.dim();
    let path_weight = weights.c2 + weights.c4;
    let node = Array2::from_shape_fn((t_len, k), |(t, j)| {
        weighted(weights.c1, posterior_scores[[t, j]])
            + weighted(weights.c2, summary.log_emissions[[t, j]])
            + weighted(weights.c3, prior_scores[[t, j]])
    });
    let log_init = model.log_initial();
    let initial: Vec<f64> = (0..k)
        .map(|j| node[[0, j]] + weighted(path_weight, log_init[j]))
        .collect();
    let transition = model.log_transition().mapv(|v| weighted(path_weight, v));
    lattice::solve(&ChainTrellis {
        initial: &initial,
        node: &node,
        transition: &transition,
    })
}

pub(crate) fn negated_power(table: &Array2<f64>, beta: f64) -> Array2<f64> {
    table.mapv(|p| -power_risk(p, beta))
}

/// Solved lattice of [`hybrid_decode`], exposed for inspection.
pub fn hybrid_lattice(model: &HmmModel, summary: &PosteriorSummary, weights: &RiskWeights) -> Result<Lattice> {
    let prior = crate::model::prior_marginals(model, summary.horizon());
    combined_lattice(
        model,
        summary,
        &negated_power(&summary.smoothed, weights.beta1),
        &negated_power(&prior, weights.beta3),
        weights,
    )
}

/// Global minimizer of
/// `C1 R1(.|x; beta1) + C2 Rbar_inf(., x) + C3 R1(.; beta3) + C4 Rbar_inf(.)`.
pub fn hybrid_decode(model: &HmmModel, summary: &PosteriorSummary, weights: &RiskWeights) -> Result<DecodedPath> {
    let lat = hybrid_lattice(model, summary, weights)?;
    let objective = -lat.best / summary.horizon() as f64;
    finish(model, summary, StatePath(lat.path), objective, format!("hybrid {weights}"))
}

/// MAP decoding through the combined kernel with weights `(0,1,0,0)`.
pub fn viterbi_decode(model: &HmmModel, summary: &PosteriorSummary) -> Result<DecodedPath> {
    let weights = RiskWeights::log_family(0.0, 1.0, 0.0, 0.0)?;
    let mut out = hybrid_decode(model, summary, &weights)?;
    out.decoder_tag = "viterbi".into();
    Ok(out)
}

/// Pointwise argmax of the smoothed marginals. May be inadmissible.
pub fn pmap_decode(model: &HmmModel, summary: &PosteriorSummary) -> Result<DecodedPath> {
    let path: Vec<usize> = summary
        .smoothed
        .rows()
        .into_iter()
        .map(|row| argmax_first(row.iter().copied()).expect("nonempty row"))
        .collect();
    let path = StatePath(path);
    let risks = RiskEvaluator::new(model, summary).evaluate(&path)?;
    finish(model, summary, path, risks.r1_posterior, "pmap".into())
}

fn indicator(v: f64) -> f64 {
    if v > 0.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Trellis restricted to admissible paths: positive initial, transition
/// and emission terms.
fn admissible_lattice(model: &HmmModel, summary: &PosteriorSummary, score: impl Fn(f64) -> f64) -> Result<Lattice> {
    let (t_len, k) = summary.smoothed.dim();
    let node = Array2::from_shape_fn((t_len, k), |(t, j)| {
        if summary.log_emissions[[t, j]] == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            score(summary.smoothed[[t, j]])
        }
    });
    let initial: Vec<f64> = (0..k).map(|j| node[[0, j]] + indicator(model.initial()[j])).collect();
    let transition = model.transition().mapv(indicator);
    lattice::solve(&ChainTrellis {
        initial: &initial,
        node: &node,
        transition: &transition,
    })
}

/// Maximizes `sum_t p_t(s_t | x^T)` over admissible paths.
pub fn constrained_pmap_decode(model: &HmmModel, summary: &PosteriorSummary) -> Result<DecodedPath> {
    let lat = admissible_lattice(model, summary, |p| p)?;
    let objective = 1.0 - lat.best / summary.horizon() as f64;
    finish(model, summary, StatePath(lat.path), objective, "constrained-pmap".into())
}

/// Posterior-Viterbi: maximizes `sum_t log p_t(s_t | x^T)` over admissible paths.
pub fn pvd_decode(model: &HmmModel, summary: &PosteriorSummary) -> Result<DecodedPath> {
    let lat = admissible_lattice(model, summary, f64::ln)?;
    let objective = -lat.best / summary.horizon() as f64;
    finish(model, summary, StatePath(lat.path), objective, "pvd".into())
}

/// Minimizer of `Rbar_k(.|x^T) = Rbar_1 + (k-1) Rbar_inf`. The objective is
/// reported in that posterior form.
pub fn kblock_pvd_decode(model: &HmmModel, summary: &PosteriorSummary, k: usize) -> Result<DecodedPath> {
    if k == 0 {
        return Err(Error::KOutOfRange {
            k,
            horizon: summary.horizon(),
        });
    }
    let c2 = (k - 1) as f64;
    let weights = RiskWeights::log_family(1.0, c2, 0.0, 0.0)?;
    let mut out = hybrid_decode(model, summary, &weights)?;
    out.objective += weighted(c2, summary.log_evidence) / summary.horizon() as f64;
    out.decoder_tag = format!("kblock k={k}");
    Ok(out)
}

/// Minimizer of `(1-alpha) Rbar_inf(.|x^T) + alpha Rbar_1(.|x^T)`.
pub fn alpha_interpolation_decode(model: &HmmModel, summary: &PosteriorSummary, alpha: f64) -> Result<DecodedPath> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidWeights(format!("alpha {alpha} outside [0, 1]")));
    }
    let weights = RiskWeights::log_family(alpha, 1.0 - alpha, 0.0, 0.0)?;
    let mut out = hybrid_decode(model, summary, &weights)?;
    out.objective += weighted(1.0 - alpha, summary.log_evidence) / summary.horizon() as f64;
    out.decoder_tag = format!("alpha={}", crate::format::fmt_num(alpha));
    Ok(out)
}

/// Trellis whose node at position `t` is the tuple `(s_t, ..., s_{t+k-2})`.
struct BlockTrellis<'a> {
    model: &'a HmmModel,
    summary: &'a PosteriorSummary,
    k: usize,
    num_states: usize,
    tuples: usize,
}

impl BlockTrellis<'_> {
    fn digits(&self, mut code: usize, out: &mut [usize]) {
        for d in out.iter_mut().rev() {
            *d = code % self.num_states;
            code /= self.num_states;
        }
    }
}

impl Trellis for BlockTrellis<'_> {
    fn positions(&self) -> usize {
        self.summary.horizon() - self.k + 2
    }

    fn num_nodes(&self) -> usize {
        self.tuples
    }

    fn initial_score(&self, _node: usize) -> f64 {
        0.0
    }

    fn for_each_successor(&self, node: usize, f: &mut dyn FnMut(usize)) {
        let base = (node % (self.tuples / self.num_states)) * self.num_states;
        for c in 0..self.num_states {
            f(base + c);
        }
    }

    fn step_score(&self, t: usize, from: usize, to: usize) -> f64 {
        let mut block = vec![0; self.k];
        self.digits(from, &mut block[..self.k - 1]);
        block[self.k - 1] = to % self.num_states;
        log_block_posterior(self.summary, self.model, t - 1, &block)
            .map(f64::exp)
            .unwrap_or(0.0)
    }
}

/// Maximizes the expected number of correctly decoded overlapping blocks
/// of length `k`. The objective is the expected block loss
/// `T - k + 1 - gain`. Admissibility is not guaranteed.
pub fn rabiner_block_decode(model: &HmmModel, summary: &PosteriorSummary, k: usize) -> Result<DecodedPath> {
    let t_len = summary.horizon();
    let num_states = model.num_states();
    check_block_len(num_states, k, t_len)?;
    let tag = format!("rabiner k={k}");
    if k == 1 {
        let mut out = pmap_decode(model, summary)?;
        out.objective = t_len as f64 * out.risks.r1_posterior;
        out.decoder_tag = tag;
        return Ok(out);
    }
    let trellis = BlockTrellis {
        model,
        summary,
        k,
        num_states,
        tuples: num_states.pow(k as u32 - 1),
    };
    let lat = lattice::solve(&trellis)?;
    let mut path = vec![0; k - 1];
    trellis.digits(lat.path[0], &mut path);
    path.extend(lat.path[1..].iter().map(|&node| node % num_states));
    let objective = (t_len - k + 1) as f64 - lat.best;
    finish(model, summary, StatePath(path), objective, tag)
}

/// Objectives understood by [`brute_force_decode`]; each is a risk to minimize.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Combined(RiskWeights),
    Viterbi,
    Pmap,
    ConstrainedPmap,
    Pvd,
    KBlock(usize),
    Alpha(f64),
    RabinerBlock(usize),
    Labelled { labels: LabelMap, weights: RiskWeights },
}

impl Objective {
    /// Evaluates the objective through the risk module.
    pub fn evaluate(&self, eval: &RiskEvaluator, path: &StatePath) -> Result<f64> {
        let horizon = eval.horizon();
        Ok(match self {
            Objective::Combined(w) => eval.combined(path, w)?,
            Objective::Viterbi => eval.evaluate(path)?.rbarinf_joint,
            Objective::Pmap => eval.evaluate(path)?.r1_posterior,
            Objective::ConstrainedPmap => {
                let r = eval.evaluate(path)?;
                if r.rbarinf_posterior.is_finite() {
                    r.r1_posterior
                } else {
                    f64::INFINITY
                }
            }
            Objective::Pvd => {
                let r = eval.evaluate(path)?;
                if r.rbarinf_posterior.is_finite() {
                    r.rbar1_posterior
                } else {
                    f64::INFINITY
                }
            }
            Objective::KBlock(k) if *k >= 1 && *k <= horizon => {
                let chain = PosteriorChain {
                    model: eval.model,
                    summary: eval.summary,
                };
                kblock_logrisk(&chain, path, *k)?
            }
            Objective::KBlock(k) => {
                let r = eval.evaluate(path)?;
                r.rbar1_posterior + weighted(*k as f64 - 1.0, r.rbarinf_posterior)
            }
            Objective::Alpha(a) => {
                let r = eval.evaluate(path)?;
                weighted(1.0 - a, r.rbarinf_posterior) + weighted(*a, r.rbar1_posterior)
            }
            Objective::RabinerBlock(k) => (horizon - k + 1) as f64 - eval.rabiner_block_gain(path, *k)?,
            Objective::Labelled { labels, weights } => labelling::combined_label_risk(eval, labels, weights, path)?,
        })
    }
}

/// Enumerates `S^T` in lexicographic order and returns the first minimizer.
pub fn brute_force_decode(model: &HmmModel, summary: &PosteriorSummary, objective: &Objective) -> Result<DecodedPath> {
    let k = model.num_states();
    let t_len = summary.horizon();
    let total = (k as f64).powi(t_len as i32);
    if total > MAX_ENUMERATION as f64 {
        return Err(Error::InstanceTooLarge {
            states: k,
            horizon: t_len,
        });
    }
    let eval = RiskEvaluator::new(model, summary);
    let mut best: Option<(f64, StatePath)> = None;
    let mut states = vec![0; t_len];
    for _ in 0..total as usize {
        let path = StatePath(states.clone());
        let value = objective.evaluate(&eval, &path)?;
        let better = match &best {
            None => value < f64::INFINITY,
            Some((b, _)) => value < *b && !lattice::ties(-b, -value),
        };
        if better {
            best = Some((value, path));
        }
        for d in states.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    let (value, path) = best.ok_or(Error::NoFinitePath)?;
    finish(model, summary, path, value, format!("brute-force {objective:?}"))
}

/// Every path attaining the minimum of `objective`, in lexicographic order.
pub fn all_minimizers(model: &HmmModel, summary: &PosteriorSummary, objective: &Objective) -> Result<(f64, Vec<StatePath>)> {
    let best = brute_force_decode(model, summary, objective)?.objective;
    let k = model.num_states();
    let t_len = summary.horizon();
    let eval = RiskEvaluator::new(model, summary);
    let mut out = Vec::new();
    let mut states = vec![0; t_len];
    for _ in 0..k.pow(t_len as u32) {
        let path = StatePath(states.clone());
        if lattice::ties(-objective.evaluate(&eval, &path)?, -best) {
            out.push(path);
        }
        for d in states.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok((best, out))
}

/// A decoder selection, as used by sweeps, simulations and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoder {
    Viterbi,
    Pmap,
    ConstrainedPmap,
    Pvd,
    KBlock(usize),
    Alpha(f64),
    Rabiner(usize),
    Hybrid(RiskWeights),
}

impl Decoder {
    pub fn decode(&self, model: &HmmModel, summary: &PosteriorSummary) -> Result<DecodedPath> {
        match self {
            Decoder::Viterbi => viterbi_decode(model, summary),
            Decoder::Pmap => pmap_decode(model, summary),
            Decoder::ConstrainedPmap => constrained_pmap_decode(model, summary),
            Decoder::Pvd => pvd_decode(model, summary),
            Decoder::KBlock(k) => kblock_pvd_decode(model, summary, *k),
            Decoder::Alpha(a) => alpha_interpolation_decode(model, summary, *a),
            Decoder::Rabiner(k) => rabiner_block_decode(model, summary, *k),
            Decoder::Hybrid(w) => hybrid_decode(model, summary, w),
        }
    }

    /// The objective this decoder minimizes, as a brute-force target.
    pub fn objective(&self) -> Objective {
        match self {
            Decoder::Viterbi => Objective::Viterbi,
            Decoder::Pmap => Objective::Pmap,
            Decoder::ConstrainedPmap => Objective::ConstrainedPmap,
            Decoder::Pvd => Objective::Pvd,
            Decoder::KBlock(k) => Objective::KBlock(*k),
            Decoder::Alpha(a) => Objective::Alpha(*a),
            Decoder::Rabiner(k) => Objective::RabinerBlock(*k),
            Decoder::Hybrid(w) => Objective::Combined(*w),
        }
    }

    /// Parses `viterbi`, `pmap`, `cpmap`, `pvd`, `kblock:K`, `alpha:A`,
    /// `rabiner:K` or `hybrid:C1,C2,C3,C4[,B1,B3]`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let need = || arg.ok_or_else(|| Error::Parse(format!("decoder `{name}` needs an argument")));
        let int = |a: &str| a.parse::<usize>().map_err(|_| Error::Parse(format!("invalid integer `{a}`")));
        Ok(match name {
            "viterbi" => Decoder::Viterbi,
            "pmap" => Decoder::Pmap,
            "cpmap" | "constrained-pmap" => Decoder::ConstrainedPmap,
            "pvd" => Decoder::Pvd,
            "kblock" => Decoder::KBlock(int(need()?)?),
            "rabiner" => Decoder::Rabiner(int(need()?)?),
            "alpha" => {
                let a = need()?;
                Decoder::Alpha(a.parse().map_err(|_| Error::Parse(format!("invalid alpha `{a}`")))?)
            }
            "hybrid" => {
                let vals = need()?
                    .split(',')
                    .map(crate::format::parse_num)
                    .collect::<Result<Vec<f64>>>()?;
                let w = match vals.as_slice() {
                    [c1, c2, c3, c4] => RiskWeights::log_family(*c1, *c2, *c3, *c4)?,
                    [c1, c2, c3, c4, b1, b3] => RiskWeights::new(*c1, *c2, *c3, *c4, *b1, *b3)?,
                    _ => return Err(Error::Parse(format!("hybrid needs 4 or 6 numbers, got `{s}`"))),
                };
                Decoder::Hybrid(w)
            }
            _ => return Err(Error::Parse(format!("unknown decoder `{s}`"))),
        })
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::format::fmt_num;
        match self {
            Decoder::Viterbi => write!(f, "viterbi"),
            Decoder::Pmap => write!(f, "pmap"),
            Decoder::ConstrainedPmap => write!(f, "cpmap"),
            Decoder::Pvd => write!(f, "pvd"),
            Decoder::KBlock(k) => write!(f, "kblock:{k}"),
            Decoder::Alpha(a) => write!(f, "alpha:{}", fmt_num(*a)),
            Decoder::Rabiner(k) => write!(f, "rabiner:{k}"),
            Decoder::Hybrid(w) => write!(
                f,
                "hybrid:{},{},{},{},{},{}",
                fmt_num(w.c1),
                fmt_num(w.c2),
                fmt_num(w.c3),
                fmt_num(w.c4),
                fmt_num(w.beta1),
                fmt_num(w.beta3)
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{four_state_example, random_categorical_model, random_direct_instance};
    use crate::inference::{forward_backward, viterbi};
    use crate::model::{Emission, ObservationSequence};
    use ndarray::array;

    fn example() -> (HmmModel, PosteriorSummary) {
        let (model, obs) = four_state_example(2.0);
        let s = forward_backward(&model, &obs).unwrap();
        (model, s)
    }

    fn p(states: &[usize]) -> StatePath {
        StatePath::from_one_based(states)
    }

    #[test]
    fn example_decoders() {
        let (model, s) = example();
        let pmap = pmap_decode(&model, &s).unwrap();
        assert_eq!(pmap.path, p(&[2, 1, 1, 2]));
        assert!(!pmap.admissible);

        let rab = rabiner_block_decode(&model, &s, 2).unwrap();
        assert_eq!(rab.path, p(&[2, 1, 1, 2]));
        assert!(!rab.admissible);

        let k2 = kblock_pvd_decode(&model, &s, 2).unwrap();
        assert_eq!(k2.path, p(&[2, 1, 4, 2]));
        assert!(k2.admissible);

        let hyb = hybrid_decode(&model, &s, &RiskWeights::log_family(1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(hyb.path, k2.path);

        let vit = viterbi_decode(&model, &s).unwrap();
        assert_eq!(vit.path, p(&[2, 1, 2, 2]));

        let cp = constrained_pmap_decode(&model, &s).unwrap();
        assert!(cp.admissible);
        assert_ne!(cp.path, p(&[2, 1, 1, 2]));
        assert_eq!(cp.path, p(&[2, 1, 4, 2]));

        let pvd = pvd_decode(&model, &s).unwrap();
        assert!(pvd.admissible);
        let brute = brute_force_decode(&model, &s, &Objective::Pvd).unwrap();
        assert!((pvd.objective - brute.objective).abs() < 1e-12, "{pvd:?} {brute:?}");

        let (_, vits) = all_minimizers(&model, &s, &Objective::Viterbi).unwrap();
        assert_eq!(vits, vec![p(&[2, 1, 2, 2]), p(&[2, 1, 4, 2]), p(&[2, 2, 1, 2]), p(&[2, 4, 1, 2])]);
    }

    #[test]
    fn viterbi_weights_match_viterbi() {
        for seed in 0..10 {
            let model = random_categorical_model(seed, 3, 2, 0.2);
            let obs = ObservationSequence::Symbols(vec![0, 1, 1, 0, 1]);
            let Ok(s) = forward_backward(&model, &obs) else { continue };
            let d = hybrid_decode(&model, &s, &RiskWeights::log_family(0.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
            assert_eq!(d.path, viterbi(&model, &obs).unwrap());
            assert!((d.objective - d.risks.rbarinf_joint).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_pointwise_weights_give_pmap() {
        for seed in 0..10 {
            let (model, obs) = random_direct_instance(seed, 3, 6, 0.2);
            let Ok(s) = forward_backward(&model, &obs) else { continue };
            let w = RiskWeights::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
            let d = hybrid_decode(&model, &s, &w).unwrap();
            assert_eq!(d.path, pmap_decode(&model, &s).unwrap().path);
            assert!((d.objective - d.risks.r1_posterior).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_delta_follows_recursion() {
        let (model, obs) = random_direct_instance(3, 3, 6, 0.2);
        let s = forward_backward(&model, &obs).unwrap();
        let w = RiskWeights::log_family(0.7, 0.4, 0.2, 1.3).unwrap();
        let lat = hybrid_lattice(&model, &s, &w).unwrap();
        let prior = crate::model::prior_marginals(&model, 6);
        let g = |t: usize, j: usize| {
            weighted(w.c1, s.smoothed[[t, j]].ln())
                + weighted(w.c2, s.log_emissions[[t, j]])
                + weighted(w.c3, prior[[t, j]].ln())
        };
        for j in 0..3 {
            let init = weighted(w.c1, s.smoothed[[0, j]].ln())
                + weighted(w.c2 + w.c3 + w.c4, model.initial()[j].ln())
                + weighted(w.c2, s.log_emissions[[0, j]]);
            assert!((lat.delta[[0, j]] - init).abs() < 1e-12 || lat.delta[[0, j]] == init);
        }
        for t in 1..6 {
            for j in 0..3 {
                let expected = (0..3)
                    .map(|i| lat.delta[[t - 1, i]] + weighted(w.c2 + w.c4, model.transition()[[i, j]].ln()))
                    .fold(f64::NEG_INFINITY, f64::max)
                    + g(t, j);
                assert!(lat.delta[[t, j]] == expected || (lat.delta[[t, j]] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constrained_pmap_equals_pmap_on_positive_models() {
        for seed in 0..10 {
            let model = random_categorical_model(300 + seed, 3, 3, 0.0);
            let obs = ObservationSequence::Symbols(vec![0, 2, 1, 1, 2]);
            let s = forward_backward(&model, &obs).unwrap();
            assert_eq!(
                constrained_pmap_decode(&model, &s).unwrap().path,
                pmap_decode(&model, &s).unwrap().path
            );
        }
    }

    #[test]
    fn pvd_matches_small_c2_on_positive_models() {
        for seed in 0..10 {
            let model = random_categorical_model(400 + seed, 3, 3, 0.0);
            let obs = ObservationSequence::Symbols(vec![0, 2, 1, 1, 2, 0]);
            let s = forward_backward(&model, &obs).unwrap();
            let w = RiskWeights::log_family(1.0, EPSILON_WEIGHT, 0.0, 0.0).unwrap();
            assert_eq!(pvd_decode(&model, &s).unwrap().path, hybrid_decode(&model, &s, &w).unwrap().path);
        }
    }

    #[test]
    fn single_state_decoders_are_constant() {
        let model = HmmModel::new(
            array![1.0],
            array![[1.0]],
            Emission::Categorical {
                probabilities: array![[0.5, 0.5]],
            },
        )
        .unwrap();
        let obs = ObservationSequence::Symbols(vec![0, 1, 0]);
        let s = forward_backward(&model, &obs).unwrap();
        for d in [
            Decoder::Viterbi,
            Decoder::Pmap,
            Decoder::ConstrainedPmap,
            Decoder::Pvd,
            Decoder::KBlock(2),
            Decoder::Alpha(0.5),
            Decoder::Rabiner(3),
        ] {
            assert_eq!(d.decode(&model, &s).unwrap().path.states(), &[0, 0, 0]);
        }
        let b = brute_force_decode(&model, &s, &Objective::Pmap).unwrap();
        assert_eq!(b.path.states(), &[0, 0, 0]);
    }

    #[test]
    fn kblock_one_is_pmap_and_alpha_ends() {
        for seed in 0..10 {
            let (model, obs) = random_direct_instance(500 + seed, 3, 6, 0.15);
            let Ok(s) = forward_backward(&model, &obs) else { continue };
            assert_eq!(kblock_pvd_decode(&model, &s, 1).unwrap().path, pmap_decode(&model, &s).unwrap().path);
            assert_eq!(
                alpha_interpolation_decode(&model, &s, 0.0).unwrap().path,
                viterbi(&model, &obs).unwrap()
            );
            let k3 = kblock_pvd_decode(&model, &s, 3).unwrap();
            let a3 = alpha_interpolation_decode(&model, &s, 1.0 / 3.0).unwrap();
            assert_eq!(k3.path, a3.path);
            assert!((k3.objective / 3.0 - a3.objective).abs() < 1e-9 * (1.0 + k3.objective.abs()));
            let brute = brute_force_decode(&model, &s, &Objective::KBlock(3)).unwrap();
            assert!((k3.objective - brute.objective).abs() < 1e-9 * (1.0 + brute.objective.abs()));
            let brute = brute_force_decode(&model, &s, &Objective::Alpha(0.4)).unwrap();
            let a4 = alpha_interpolation_decode(&model, &s, 0.4).unwrap();
            assert!((a4.objective - brute.objective).abs() < 1e-9 * (1.0 + brute.objective.abs()));
        }
    }

    #[test]
    fn rabiner_full_length_is_viterbi() {
        for seed in 0..10 {
            let (model, obs) = random_direct_instance(600 + seed, 3, 5, 0.15);
            let Ok(s) = forward_backward(&model, &obs) else { continue };
            let r = rabiner_block_decode(&model, &s, 5).unwrap();
            let v = viterbi_decode(&model, &s).unwrap();
            assert!((r.risks.rbarinf_posterior - v.risks.rbarinf_posterior).abs() < 1e-9);
            assert_eq!(r.path, v.path);
        }
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let (model, obs) = random_direct_instance(1, 4, 12, 0.0);
        let s = forward_backward(&model, &obs).unwrap();
        assert!(matches!(
            brute_force_decode(&model, &s, &Objective::Pmap),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn decoder_parse_round_trip() {
        for text in ["viterbi", "pmap", "cpmap", "pvd", "kblock:3", "alpha:0.25", "rabiner:2", "hybrid:1,0.5,0,0.25,1,0"] {
            let d = Decoder::parse(text).unwrap();
            assert_eq!(d.to_string(), text);
        }
        assert!(Decoder::parse("kblock").is_err());
        assert!(Decoder::parse("hybrid:1,2").is_err());
        assert!(Decoder::parse("bogus").is_err());
    }
}
