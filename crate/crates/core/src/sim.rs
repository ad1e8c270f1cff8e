//! Monte Carlo estimates of decoder risks as the horizon grows.

use rayon::prelude::*;

use crate::decoders::{kblock_pvd_decode, viterbi_decode, Decoder};
use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::inference::forward_backward;
use crate::model::{sample_trajectory, HmmModel, StatePath};
use crate::risk::RiskReport;

/// Metric name of the empirical error rate against the sampled path.
pub const MISCLASSIFICATION: &str = "misclassification";

/// Slack allowed on both sides of the sandwich inequality.
pub const SANDWICH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCell {
    pub horizon: usize,
    pub decoder_tag: String,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskTrajectory {
    pub horizons: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub cells: Vec<TrajectoryCell>,
}

impl RiskTrajectory {
    pub fn cell(&self, horizon: usize, decoder_tag: &str, metric: &str) -> Option<&TrajectoryCell> {
        self.cells
            .iter()
            .find(|c| c.horizon == horizon && c.decoder_tag == decoder_tag && c.metric == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon,decoder_tag,metric,mean,sd,replicates\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.horizon,
                c.decoder_tag,
                c.metric,
                fmt_num(c.mean),
                fmt_num(c.sd),
                self.replicates
            ));
        }
        out
    }
}

fn check_design(model: &HmmModel, horizons: &[usize], replicates: usize) -> Result<()> {
    if !model.is_generative() {
        return Err(Error::DirectLikelihoodNotGenerative);
    }
    if replicates < 2 {
        return Err(Error::InvalidObservations(format!("need at least 2 replicates, got {replicates}")));
    }
    if horizons.is_empty() || horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidObservations(format!(
            "horizons must be positive and strictly increasing, got {horizons:?}"
        )));
    }
    Ok(())
}

/// Sample mean and standard deviation (divisor `n - 1`). Infinite samples
/// give an infinite mean and deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if !mean.is_finite() {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn misclassification(decoded: &StatePath, truth: &StatePath) -> f64 {
    let wrong = decoded.states().iter().zip(truth.states()).filter(|(a, b)| a != b).count();
    wrong as f64 / truth.len() as f64
}

/// For every horizon and replicate `r`, samples a trajectory with seed
/// `seed + r`, runs each decoder and records the empirical error rate and
/// every posterior and prior risk of the decoded path.
pub fn estimate_risk_trajectories(
    model: &HmmModel,
    decoders: &[Decoder],
    horizons: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<RiskTrajectory> {
    check_design(model, horizons, replicates)?;
    let mut cells = Vec::new();
    for &horizon in horizons {
        // samples[r][d] = metric values of decoder d on replicate r
        let samples: Vec<Vec<[f64; 9]>> = (0..replicates)
            .into_par_iter()
            .map(|r| -> Result<Vec<[f64; 9]>> {
                let (truth, obs) = sample_trajectory(model, horizon, seed.wrapping_add(r as u64))?;
                let summary = forward_backward(model, &obs)?;
                decoders
                    .iter()
                    .map(|d| {
                        let out = d.decode(model, &summary)?;
                        let mut row = [0.0; 9];
                        row[0] = misclassification(&out.path, &truth);
                        row[1..].copy_from_slice(&out.risks.values());
                        Ok(row)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (d, decoder) in decoders.iter().enumerate() {
            let metrics = std::iter::once(MISCLASSIFICATION).chain(RiskReport::FIELDS);
            for (m, metric) in metrics.enumerate() {
                let column: Vec<f64> = samples.iter().map(|s| s[d][m]).collect();
                let (mean, sd) = mean_sd(&column);
                cells.push(TrajectoryCell {
                    horizon,
                    decoder_tag: decoder.to_string(),
                    metric: metric.to_string(),
                    mean,
                    sd,
                });
            }
        }
    }
    Ok(RiskTrajectory {
        horizons: horizons.to_vec(),
        replicates,
        seed,
        cells,
    })
}

/// One sample of `0 <= Rbar_inf(v(k)) - Rbar_inf(v(inf)) <= Rbar_1(v(inf)) / (k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichRow {
    pub horizon: usize,
    pub k: usize,
    pub replicate: usize,
    pub gap: f64,
    pub bound: f64,
}

impl SandwichRow {
    pub fn holds(&self) -> bool {
        self.gap >= -SANDWICH_TOL && self.gap <= self.bound + SANDWICH_TOL
    }
}

/// Evaluates the sandwich gap of the k-block decoder against Viterbi for
/// every horizon, `k >= 2` (constant `C = k - 1`) and replicate.
pub fn sandwich_constant_sweep(
    model: &HmmModel,
    horizons: &[usize],
    ks: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<SandwichRow>> {
    check_design(model, horizons, replicates)?;
    if let Some(&k) = ks.iter().find(|&&k| k < 2) {
        return Err(Error::KOutOfRange { k, horizon: horizons[0] });
    }
    let mut rows = Vec::new();
    for &horizon in horizons {
        let per_rep: Vec<Vec<SandwichRow>> = (0..replicates)
            .into_par_iter()
            .map(|r| -> Result<Vec<SandwichRow>> {
                let (_, obs) = sample_trajectory(model, horizon, seed.wrapping_add(r as u64))?;
                let summary = forward_backward(model, &obs)?;
                let vit = viterbi_decode(model, &summary)?.risks;
                ks.iter()
                    .map(|&k| {
                        let dec = kblock_pvd_decode(model, &summary, k)?.risks;
                        Ok(SandwichRow {
                            horizon,
                            k,
                            replicate: r,
                            gap: dec.rbarinf_posterior - vit.rbarinf_posterior,
                            bound: vit.rbar1_posterior / (k - 1) as f64,
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        rows.extend(per_rep.into_iter().flatten());
    }
    Ok(rows)
}

pub fn sandwich_csv(rows: &[SandwichRow]) -> String {
    let mut out = String::from("horizon,k,C,replicate,gap,bound,holds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.horizon,
            r.k,
            r.k - 1,
            r.replicate,
            fmt_num(r.gap),
            fmt_num(r.bound),
            r.holds()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{noisy_two_state, random_categorical_model, sharp_two_state};
    use crate::model::Emission;
    use ndarray::array;

    #[test]
    fn single_state_never_errs() {
        let model = HmmModel::new(
            array![1.0],
            array![[1.0]],
            Emission::Categorical {
                probabilities: array![[0.3, 0.7]],
            },
        )
        .unwrap();
        let t = estimate_risk_trajectories(&model, &[Decoder::Viterbi, Decoder::Pmap], &[5, 20], 3, 1).unwrap();
        assert!(t.cells.iter().filter(|c| c.metric == MISCLASSIFICATION).all(|c| c.mean == 0.0 && c.sd == 0.0));
        assert_eq!(t.cells.len(), 2 * 2 * 9);
    }

    #[test]
    fn sharp_emissions_rarely_err() {
        let model = sharp_two_state();
        let t = estimate_risk_trajectories(&model, &[Decoder::Viterbi, Decoder::Pmap], &[500], 50, 11).unwrap();
        for tag in ["viterbi", "pmap"] {
            assert!(t.cell(500, tag, MISCLASSIFICATION).unwrap().mean < 0.05);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let model = noisy_two_state();
        let run = || estimate_risk_trajectories(&model, &[Decoder::Pmap, Decoder::KBlock(2)], &[10, 30], 4, 3).unwrap();
        assert_eq!(run().to_csv(), run().to_csv());
    }

    #[test]
    fn rejects_bad_designs() {
        let model = noisy_two_state();
        assert!(estimate_risk_trajectories(&model, &[Decoder::Pmap], &[10], 1, 0).is_err());
        assert!(estimate_risk_trajectories(&model, &[Decoder::Pmap], &[10, 10], 2, 0).is_err());
        let (direct, _) = crate::fixtures::four_state_example(2.0);
        assert_eq!(
            estimate_risk_trajectories(&direct, &[Decoder::Pmap], &[10], 2, 0),
            Err(Error::DirectLikelihoodNotGenerative)
        );
        assert!(sandwich_constant_sweep(&model, &[10], &[1], 2, 0).is_err());
    }

    #[test]
    fn sandwich_holds_and_gap_shrinks_with_k() {
        for m in 0..4 {
            let model = random_categorical_model(40 + m, 3, 3, 0.0);
            let rows = sandwich_constant_sweep(&model, &[8, 25], &[2, 3, 5, 9], 10, m).unwrap();
            assert!(rows.iter().all(SandwichRow::holds));
            for chunk in rows.chunks(4) {
                for w in chunk.windows(2) {
                    assert!(w[1].gap <= w[0].gap + SANDWICH_TOL);
                }
            }
        }
    }

    #[test]
    fn csv_columns() {
        let model = noisy_two_state();
        let t = estimate_risk_trajectories(&model, &[Decoder::Viterbi], &[4], 2, 0).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("horizon,decoder_tag,metric,mean,sd,replicates\n4,viterbi,misclassification,"));
        let rows = sandwich_constant_sweep(&model, &[4], &[2], 2, 0).unwrap();
        assert!(sandwich_csv(&rows).starts_with("horizon,k,C,replicate,gap,bound,holds\n4,2,1,0,"));
    }

    #[test]
    fn mean_sd_by_hand() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
