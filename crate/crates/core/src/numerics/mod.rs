//! Dense networks, softmax, Adam and gradient verification.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod softmax;

pub use adam::AdamState;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use gradcheck::{check_gradient, check_gradient_with, finite_diff_check, relative_error, GradCheckReport, Stencil};
pub use mlp::{Activation, ForwardCache, MlpNetwork};
pub use softmax::{argmax, entropy, log_softmax, softmax};
