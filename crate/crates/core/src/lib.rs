//! Shared information of discrete random variables, with exact formulas for
//! Markov chains on trees and sample-based estimation of the minimizing edge.

pub mod bandit;
pub mod emi;
pub mod error;
pub mod info;
pub mod mct;
pub mod partition;
pub mod pmf;
pub mod rng;
pub mod shared_info;
pub mod tree;

pub use error::{Error, Result};
pub use info::{
    conditional_mutual_information, entropy, entropy_of_probs, kl_divergence, mutual_information,
    SubsetEntropies,
};
pub use mct::{MctModel, SampleMatrix};
pub use partition::{enumerate_partitions, Partition};
pub use pmf::{JointPmf, MarginalKey, VarId};
pub use tree::{Edge, Tree, Vertex, VertexSet};
