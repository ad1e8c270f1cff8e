//! Risk-based hidden path decoding for hidden Markov models.
//!
//! The crate computes posterior summaries by scaled forward-backward,
//! evaluates pointwise and path-level risks of arbitrary state paths, and
//! decodes paths minimizing weighted combinations of those risks. Exhaustive
//! reference decoders are provided for checking on small instances.

pub mod decoders;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod inference;
pub mod io;
pub mod labelling;
pub mod lattice;
pub mod model;
pub mod risk;
pub mod sim;
pub mod transform;

pub use decoders::{brute_force_decode, hybrid_decode, DecodedPath, Decoder, Objective};
pub use error::{Error, Result};
pub use inference::{forward_backward, PosteriorSummary};
pub use labelling::{label_decode, LabelMap};
pub use model::{Emission, HmmModel, ObservationSequence, StatePath};
pub use risk::{RiskEvaluator, RiskReport, RiskWeights};
pub use transform::{Exponent, TransformedTables};
