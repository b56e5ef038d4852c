//! Meta-path guided self-supervised recommendation over heterogeneous graphs.
//!
//! Pipeline: load typed relation files into a [`hetgraph::HeteroGraph`],
//! filter and split the user–item interactions, turn a meta-path into a
//! link-score matrix ([`metapath`]), propagate shared and task embeddings
//! over the interaction and meta-path bipartite graphs ([`encoder`]), fuse
//! experts per task with learned gates ([`fusion`]), and train under a joint
//! recommendation + link-score-regression + contrastive objective
//! ([`objectives`], [`trainer`]), evaluating full-catalog top-K ranking
//! ([`evaluation`]).

pub mod bundle;
pub mod dense;
pub mod error;
pub mod evaluation;
pub mod hetgraph;
pub mod encoder;
pub mod fusion;
pub mod metapath;
pub mod objectives;
mod par;
pub mod rng;
pub mod sparse;
pub mod trainer;

pub use error::Error;
pub use par::configure_threads;

pub type Result<T> = std::result::Result<T, Error>;
