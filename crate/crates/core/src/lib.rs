//! Noncommutative gauge theory at desk scale.
//!
//! * [`linalg`]: Hermitian traceless bases of `sl_n`, structure constants, metric.
//! * [`universal`]: universal differential calculus over a finite set.
//! * [`calculus`]: the derivation-based calculus `M_n ⊗ Λ(sl_n*)`.
//! * [`gauge`]: connections, curvature and the Yang-Mills action on matrix modules.
//! * [`lattice`]: a periodic-lattice Yang-Mills-Higgs model on `C∞(M) ⊗ M_n`.
//! * [`spectral`]: finite real even spectral triples and inner fluctuations.
//! * [`verify`]: seeded invariant suites across all modules.

pub mod calculus;
pub mod error;
pub mod gauge;
pub mod lattice;
pub mod linalg;
pub mod optimize;
pub mod spectral;
pub mod universal;
pub mod verify;

pub use error::{Error, Result};
