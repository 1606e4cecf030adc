//! Neural-network substrate: tensors, layers with analytic backward passes,
//! Adam, finite-difference checking and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod ops;
pub mod optim;
pub mod param;
pub mod tensor;

pub use checkpoint::{Checkpoint, NamedTensor};
pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{LayerNorm, Linear, MultiHeadAttention, TransformerLayer};
pub use ops::Mode;
pub use optim::{Adam, AdamConfig};
pub use param::{Module, Param};
pub use tensor::Tensor;
