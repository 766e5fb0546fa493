//! Verification, search, and cost analysis for fault-tolerant magic state
//! distillation sequences.
//!
//! The crate is organized around the flow of the artifact:
//!
//! - [`gf2`]: bit-packed GF(2) vectors, matrices, and image bases.
//! - [`codes`]: the two code contexts (15-to-1 |T> on the tesseract,
//!   8-to-CCZ on the cube), support decomposition, destabilizer checks, and
//!   Hamming-encoded measurement redundancy.
//! - [`seqfile`]: the plain-text sequence file format.
//! - [`ftcheck`]: the fault-tolerance verifier — pattern enumeration,
//!   classification, sufficiency, and per-measurement necessity.
//! - [`oracle`]: brute-force ground truth — an exact phase-polynomial
//!   operator algebra and a dense state-vector simulator with fault
//!   injection, used to cross-validate the verifier.
//! - [`search`]: constrained random samplers, sufficiency-probability
//!   estimation, local optimization, and stage/cluster layout metrics.
//! - [`model`]: the analytic error and cost model — surface-code logical
//!   error rates, the magic-state error recursion, thresholds,
//!   amplification, and the gate cost table.

pub mod codes;
pub mod ftcheck;
pub mod gf2;
pub mod model;
pub mod oracle;
pub mod search;
pub mod seqfile;
