//! Learnable function families: the implicit quantile network and the
//! conditional generator/critic pair.

mod checkpoint;
mod conditional;
mod layers;
mod quantile;

pub use checkpoint::{Architecture, Checkpoint, SavedNetwork};
pub use conditional::{pair_encoding, ConditionalArch, ConditionalNet, CriticNetwork, GeneratorNetwork};
pub use layers::{dense, init_linear, mlp, one_hot, Activation, LEAKY_SLOPE};
pub use quantile::{column_means, cosine_embed, cosine_features, QuantileArch, QuantileNetwork};
