//! Error exponents and entropy dualities for classical-quantum channels,
//! data compression with quantum side information and privacy
//! amplification, with certified solvers for the finite-blocklength
//! quantities.
//!
//! All logarithms are base 2.

// Range checks are written `!(x >= lo)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codes;
pub mod config;
pub mod discrimination;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod ext;
pub mod linalg;
pub mod optimize;
pub mod random;
pub mod specfile;
pub mod states;

pub use codes::FieldMatrix;
pub use config::Tolerances;
pub use discrimination::{CertifiedValue, Ensemble, SolverOptions};
pub use entropy::{BipartiteState, RenyiOrder};
pub use error::{Error, Result};
pub use experiments::{ScanCell, ScanConfig, ScanMode, Source};
pub use exponents::{CriticalRate, CurvePoint, ExponentCurve, ExponentOptions, Flag};
pub use ext::ExtReal;
pub use linalg::{CMat, CVec, DensityMatrix, HermitianMatrix};
pub use specfile::ChannelSpecFile;
pub use states::{CQChannel, GroupAction, ProbabilityVector, SourceFamily, SymmetricChannel};
