//! Dense matrices, seeded RNG streams, and a small from-scratch MLP with
//! explicit tapes, reverse-mode gradients and SGD.

mod matrix;
mod net;
mod rng;

pub use matrix::Matrix;
pub use net::{gradcheck, Activation, Gradients, NetworkParams, Sgd, Tape};
pub use rng::{derive_seed, Rng};
