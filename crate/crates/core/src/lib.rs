//! Graph-sparse LDA: a topic model whose topics are sparse distributions over
//! concept words in a known ontology, each concept emitting observed words
//! among its ancestors and descendants.
//!
//! The model is `X_n ~ Mult(B_n · A · P)` with sparse `B` (documents over
//! topics), sparse `A` (topics over concepts) and `P` (concepts over words)
//! restricted to ontology reach sets. Inference is blocked Gibbs sampling plus
//! split/merge moves that sparsify `A` while keeping `A P` nearly unchanged.
//!
//! Core types are generic over the scalar (`f32` or `f64`); the aliases below
//! fix it to `f64`.

pub mod birth_death;
pub mod config;
pub mod corpus;
pub mod counts;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod init;
pub mod io;
pub mod likelihood;
pub mod matrix;
pub mod mh_sparsify;
pub mod model_state;
pub mod ontology;
pub mod rng;
pub mod run;
pub mod scalar;
pub mod synth;

pub use config::{Mode, RunConfig};
pub use corpus::Corpus;
pub use error::{Error, Result};
pub use matrix::Mask;
pub use model_state::{HyperParams, ModelState};
pub use ontology::Ontology;
pub use rng::RngStream;
pub use scalar::Real;

pub type Matrix = matrix::Matrix<f64>;
pub type State = model_state::ModelState<f64>;
pub type MhProposal = mh_sparsify::MhProposal<f64>;

pub type Matrix32 = matrix::Matrix<f32>;
pub type State32 = model_state::ModelState<f32>;
