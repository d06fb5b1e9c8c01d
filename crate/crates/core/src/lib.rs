//! Transfinite sums and products over well-ordered index sets, product
//! integrals of step mappings, Stieltjes product integrals, Haahti products
//! of projection paths, and residual checks for generalized differential
//! equations.

// Negated float comparisons throughout are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod gode;
pub mod ordinal;
pub mod partition;
pub mod prodint;
pub mod stepmap;
pub mod stieltjes;
pub mod transfinite;
pub mod transport;

pub use algebra::{AlgebraKind, Element};
pub use error::{Error, Result};
pub use ordinal::{OrdinalIndex, WellOrderedSet};
pub use partition::{ConvergenceReport, Tag, TaggedPartition};
pub use stepmap::{Mapping, StepMapping};
pub use transfinite::{Family, TransfiniteResult};
pub use stieltjes::{KsReport, LimitRule};
pub use gode::{VForm, VFunction};
pub use transport::{ProjectionPath, Surface};
