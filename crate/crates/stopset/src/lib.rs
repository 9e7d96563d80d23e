//! Exhaustive enumeration of error-prone patterns in parity-check codes.
//!
//! This library locates the minimal stopping sets and minimal k-out trapping
//! sets of an arbitrary finite parity-check code, and computes rigorous upper
//! and lower bounds on the bit- and frame-error rates of iterative decoding
//! over binary erasure channels. The search is exhaustive: when a run reports
//! `exhaustive = true`, every pattern of the requested kind up to the search
//! range is either listed or provably absent.
//!
//! The central machinery is a mutable decoding tree grown from the Tanner
//! graph. Conflicting observations are resolved by a pivoting rule that
//! preserves the tree's Boolean function exactly, so the candidate family the
//! tree represents only ever narrows. A density-evolution-like bottom-up pass
//! over the finished tree yields an upper bound on the error probability that
//! is tight in asymptotic order, and the minimal-weight candidates extracted
//! from the tree yield the exhaustive pattern lists plus a matching lower
//! bound.
//!
//! Modules:
//!
//! - [`tanner`] — sparse parity-check representation, alist I/O, built-in
//!   codes, and ground-truth classification of variable subsets.
//! - [`booltree`] — the decoding-tree engine: leaf growth, youngest common
//!   ancestor queries, pivoting, and pruning.
//! - [`bounds`] — truncated-polynomial arithmetic, bound evaluation,
//!   minimal-weight candidate extraction, and tightness confirmation.
//! - [`exhaust`] — search drivers: bit-wise and frame-wise stopping-set
//!   exhaustion, the composite (partitioned) approach, and trapping-set
//!   exhaustion.
//! - [`simulate`] — the peeling decoder, Monte-Carlo estimation, the
//!   brute-force oracle, and exact small-n erasure curves.
//! - [`run`] — configuration and report emission for the command-line tool.
//!
//! The `examples/` directory contains one runnable program per capability;
//! start with `c1_walkthrough`.

pub mod booltree;
pub mod bounds;
pub mod exhaust;
pub mod run;
pub mod simulate;
pub mod tanner;

pub use bounds::ErasurePolynomial;
pub use exhaust::{SearchLimits, SearchReport};
pub use tanner::{PatternClass, PatternKind, SparseParityCheck, SupportSet};
