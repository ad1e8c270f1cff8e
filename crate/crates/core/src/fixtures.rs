//! Built-in models: the four-state inadmissibility example and seeded random
//! instances used by tests, benchmarks and the CLI.

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Emission, HmmModel, ObservationSequence};

/// Four-state chain whose best pair-recognition path is inadmissible.
///
/// The chain always starts in state 2. Observations 1 and 4 are only
/// possible from state 2; observations 2 and 3 are `A` times more likely
/// under state 1 than under the others. Requires `a > 1`.
pub fn four_state_example(a: f64) -> (HmmModel, ObservationSequence) {
    let transition = array![
        [0.0, 4.0, 2.0, 2.0],
        [4.0, 1.0, 1.0, 2.0],
        [2.0, 1.0, 1.0, 4.0],
        [2.0, 2.0, 4.0, 0.0]
    ] / 8.0;
    let likelihoods = array![
        [0.0, 1.0, 0.0, 0.0],
        [a, 1.0, 1.0, 1.0],
        [a, 1.0, 1.0, 1.0],
        [0.0, 1.0, 0.0, 0.0]
    ];
    let model = HmmModel::new(
        array![0.0, 1.0, 0.0, 0.0],
        transition,
        Emission::DirectLikelihood { likelihoods },
    )
    .expect("four-state example is a valid model");
    (model, ObservationSequence::positions(4))
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize, zero_prob: f64) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < zero_prob {
                    0.0
                } else {
                    rng.random::<f64>() + 0.05
                }
            })
            .collect();
        let sum = v.sum();
        if sum > 0.0 {
            let mut v = v / sum;
            // renormalise so the row sums to 1 within input tolerance
            let resid = 1.0 - v.sum();
            let j = v.iter().position(|&x| x > 0.0).unwrap();
            v[j] += resid;
            return v;
        }
    }
}

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize, zero_prob: f64) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for i in 0..rows {
        m.row_mut(i).assign(&random_distribution(rng, cols, zero_prob));
    }
    m
}

/// Random categorical model with `k` states and `m` symbols. Each entry is
/// zeroed with probability `zero_prob` (rows are kept non-empty).
pub fn random_categorical_model(seed: u64, k: usize, m: usize, zero_prob: f64) -> HmmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_distribution(&mut rng, k, zero_prob);
    let transition = random_stochastic(&mut rng, k, k, zero_prob);
    let probabilities = random_stochastic(&mut rng, k, m, zero_prob);
    HmmModel::new(initial, transition, Emission::Categorical { probabilities })
        .expect("random model is valid")
}

/// Random direct-likelihood instance of length `horizon`.
pub fn random_direct_instance(
    seed: u64,
    k: usize,
    horizon: usize,
    zero_prob: f64,
) -> (HmmModel, ObservationSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_distribution(&mut rng, k, zero_prob);
    let transition = random_stochastic(&mut rng, k, k, zero_prob);
    let likelihoods = Array2::from_shape_fn((horizon, k), |_| {
        if rng.random::<f64>() < zero_prob {
            0.0
        } else {
            rng.random::<f64>() * 2.0
        }
    });
    let model = HmmModel::new(initial, transition, Emission::DirectLikelihood { likelihoods })
        .expect("random model is valid");
    (model, ObservationSequence::positions(horizon))
}

/// Symmetric two-state chain with overlapping binary emissions.
pub fn noisy_two_state() -> HmmModel {
    HmmModel::new(
        array![0.5, 0.5],
        array![[0.8, 0.2], [0.2, 0.8]],
        Emission::Categorical {
            probabilities: array![[0.75, 0.25], [0.25, 0.75]],
        },
    )
    .expect("valid model")
}

/// Symmetric two-state chain whose emissions almost identify the state.
pub fn sharp_two_state() -> HmmModel {
    HmmModel::new(
        array![0.5, 0.5],
        array![[0.9, 0.1], [0.1, 0.9]],
        Emission::Categorical {
            probabilities: array![[0.999, 0.001], [0.001, 0.999]],
        },
    )
    .expect("valid model")
}
