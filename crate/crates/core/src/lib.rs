//! k-nearest-neighbor queries on road networks using customizable
//! contraction hierarchies and their separator decomposition, together with
//! a radiation-model travel demand generator.

pub mod baselines;
pub mod cch;
pub mod demand;
pub mod error;
pub mod graph;
pub mod io;
pub mod knn;
pub mod network;
pub mod partition;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Coordinates, Graph, Vertex, Weight, INFINITY, INVALID_VERTEX};
pub use network::Network;
