//! Computational laboratory for narrow arithmetic progressions in the primes.
//!
//! The crate is organised by subsystem:
//!
//! * [`numtheory`]: smallest-prime-factor sieves, multiplicative functions,
//!   the W-trick context and deterministic primality.
//! * [`cutoff`]: the smooth cutoff χ, its Fourier companion ψ and the
//!   numerical sieve factors c_{χ,m}.
//! * [`linforms`]: exact linear algebra over systems of affine forms, the
//!   collision index L(Ψ) and exhaustive subspace checks.
//! * [`singular`]: singular series, Δ(h), the error factor E(h) and
//!   Gallagher-type averages.
//! * [`majorant`]: the truncated von Mangoldt function Λ_{χ,R} and the prime
//!   majorant ν tabulated over Z/N'Z.
//! * [`conditions`]: empirical linear-forms-condition averages and the
//!   random-model width threshold.
//! * [`aplab`]: the Λ_D functional, AP counts in primes and Hardy–Littlewood
//!   comparisons.
//! * [`cache`]: binary cache formats for sieves and majorant tables.

pub mod aplab;
pub mod cache;
pub mod conditions;
pub mod cutoff;
mod error;
pub mod linforms;
pub mod majorant;
pub mod numtheory;
pub mod quad;
pub mod singular;
mod summation;

pub use conditions::{BoxRegion, ExponentPattern, WeightModel};
pub use cutoff::{CutoffKind, CutoffSpec, Normalization};
pub use error::{Error, Result};
pub use linforms::{FormPartition, LinearForm, LinearSystem, Subspace};
pub use majorant::MajorantTable;
pub use numtheory::{FactorSieve, WTrickContext};
pub use singular::{ShiftVector, SingularValue};
