pub mod channels;
pub mod cuculescu;
pub mod error;
pub mod filtration;
pub mod free_group;
pub mod harness;
pub mod jmz;
pub mod orlicz;
pub mod qps;
pub mod scalar;
pub mod seq_spaces;
pub mod strong_maximal;
pub mod sequence;

pub use error::{Error, Result};
pub use scalar::Real;

pub type HermitianOp = qps::Hermitian<f64>;
pub type ProjectionOp = qps::Projection<f64>;
pub type Filtration64 = filtration::Filtration<f64>;
