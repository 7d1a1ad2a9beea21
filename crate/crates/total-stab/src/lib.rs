//! Exact desk-scale training of kernel-regularized risk minimizers
//! (classical and pairwise) on finite ground spaces, plus verification of
//! the total-stability bounds that control how the trained function moves
//! when the measure, the regularization parameter, and the kernel all
//! change at once.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod kernels;
mod linalg;
pub mod losses;
pub mod scenariogen;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
