pub mod decompose;
pub mod embezzle;
pub mod error;
pub mod format;
pub mod gaussian;
pub mod inflate;
pub mod linalg;
pub mod network;
pub mod numeric;
pub mod permutation;
pub mod simulate;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{CMatrix, EigenResult, HermitianMatrix};
pub use network::Network;
pub use permutation::Permutation;
