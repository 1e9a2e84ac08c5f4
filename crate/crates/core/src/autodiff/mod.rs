//! Differentiable array computation, named parameter storage and Adam.

mod adam;
mod array;
mod graph;
mod params;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use array::Array;
pub use graph::{Gradients, Graph, LeafKind, Var};
pub use params::{NamedParam, ParamStore};
