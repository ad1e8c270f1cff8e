//! Max-sum dynamic programming over a layered graph.
//!
//! Every decoder in this crate reduces to maximizing an additive score over
//! paths in a trellis: an initial score for the node at the first position
//! plus a step score for every move to the next position. Scores are
//! log-domain values and `-inf` marks forbidden nodes or moves.
//!
//! [`solve`] fills the forward score table `delta` with smallest-index
//! backpointers, and a backward table of best suffix scores. The returned
//! path is the lexicographically smallest optimal node sequence: it is
//! traced forward from the first position choosing, at every step, the
//! smallest node that still completes to the optimum.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Relative tolerance used to treat two scores as tied.
pub const TIE_TOL: f64 = 1e-12;

pub(crate) fn ties(candidate: f64, best: f64) -> bool {
    if best == f64::NEG_INFINITY {
        return candidate == f64::NEG_INFINITY;
    }
    candidate >= best - TIE_TOL * (1.0 + best.abs())
}

/// Smallest index whose value ties the maximum of `values`.
pub fn argmax_first(values: impl IntoIterator<Item = f64> + Clone) -> Option<usize> {
    let best = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    values.into_iter().position(|v| ties(v, best))
}

/// A layered graph with `positions()` layers of `num_nodes()` nodes.
pub trait Trellis {
    fn positions(&self) -> usize;
    fn num_nodes(&self) -> usize;
    fn initial_score(&self, node: usize) -> f64;
    /// Calls `f` with each successor of `node`, in increasing order.
    fn for_each_successor(&self, node: usize, f: &mut dyn FnMut(usize));
    /// Score of moving from `from` at position `t - 1` to `to` at position `t`.
    fn step_score(&self, t: usize, from: usize, to: usize) -> f64;
}

/// Filled score tables of a solved trellis.
#[derive(Debug, Clone)]
pub struct Lattice {
    /// `delta[[t, j]]`: best score of a prefix ending in node `j` at position `t`.
    pub delta: Array2<f64>,
    /// Smallest predecessor attaining `delta[[t, j]]`; `None` at `t = 0` or
    /// when the node is unreachable.
    pub backpointers: Array2<Option<usize>>,
    /// `suffix[[t, j]]`: best score of a completion starting from node `j` at `t`.
    pub suffix: Array2<f64>,
    /// Smallest node maximizing the last row of `delta`.
    pub terminal: usize,
    /// Optimal total score.
    pub best: f64,
    /// Lexicographically smallest optimal node sequence.
    pub path: Vec<usize>,
}

/// Runs the forward and backward passes and traces the optimal path.
pub fn solve<T: Trellis + ?Sized>(trellis: &T) -> Result<Lattice> {
    let n_pos = trellis.positions();
    let n = trellis.num_nodes();
    assert!(n_pos > 0 && n > 0, "empty trellis");

    let mut delta = Array2::from_elem((n_pos, n), f64::NEG_INFINITY);
    let mut backpointers = Array2::from_elem((n_pos, n), None);
    for j in 0..n {
        delta[[0, j]] = trellis.initial_score(j);
    }
    for t in 1..n_pos {
        for i in 0..n {
            let prev = delta[[t - 1, i]];
            if prev == f64::NEG_INFINITY {
                continue;
            }
            trellis.for_each_successor(i, &mut |j| {
                let cand = prev + trellis.step_score(t, i, j);
                if cand > delta[[t, j]] {
                    delta[[t, j]] = cand;
                    backpointers[[t, j]] = Some(i);
                }
            });
        }
    }

    let mut suffix = Array2::from_elem((n_pos, n), f64::NEG_INFINITY);
    for j in 0..n {
        suffix[[n_pos - 1, j]] = 0.0;
    }
    for t in (1..n_pos).rev() {
        for i in 0..n {
            let mut best = f64::NEG_INFINITY;
            trellis.for_each_successor(i, &mut |j| {
                let cand = trellis.step_score(t, i, j) + suffix[[t, j]];
                if cand > best {
                    best = cand;
                }
            });
            suffix[[t - 1, i]] = best;
        }
    }

    let last = delta.row(n_pos - 1);
    let best = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY || best.is_nan() {
        return Err(Error::NoFinitePath);
    }
    let terminal = last.iter().position(|&v| v == best).unwrap();

    let starts: Vec<f64> = (0..n).map(|j| delta[[0, j]] + suffix[[0, j]]).collect();
    let mut node = argmax_first(starts.iter().copied()).ok_or(Error::NoFinitePath)?;
    let mut path = Vec::with_capacity(n_pos);
    path.push(node);
    for t in 1..n_pos {
        let target = suffix[[t - 1, node]];
        let mut chosen = None;
        trellis.for_each_successor(node, &mut |j| {
            if chosen.is_none() && ties(trellis.step_score(t, node, j) + suffix[[t, j]], target) {
                chosen = Some(j);
            }
        });
        node = chosen.ok_or(Error::NoFinitePath)?;
        path.push(node);
    }

    Ok(Lattice {
        delta,
        backpointers,
        suffix,
        terminal,
        best,
        path,
    })
}

/// Trellis over states with homogeneous transition weights and per-position
/// node scores: `initial[j]` at the first position, then
/// `transition[[i, j]] + node[[t, j]]` for every move.
pub struct ChainTrellis<'a> {
    pub initial: &'a [f64],
    pub node: &'a Array2<f64>,
    pub transition: &'a Array2<f64>,
}

impl Trellis for ChainTrellis<'_> {
    fn positions(&self) -> usize {
        self.node.nrows()
    }

    fn num_nodes(&self) -> usize {
        self.initial.len()
    }

    fn initial_score(&self, node: usize) -> f64 {
        self.initial[node]
    }

    fn for_each_successor(&self, _node: usize, f: &mut dyn FnMut(usize)) {
        for j in 0..self.initial.len() {
            f(j);
        }
    }

    fn step_score(&self, t: usize, from: usize, to: usize) -> f64 {
        let w = self.transition[[from, to]];
        let g = self.node[[t, to]];
        w + g
    }
}
