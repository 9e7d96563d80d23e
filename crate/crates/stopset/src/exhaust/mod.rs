//! Search drivers: bit-wise and frame-wise stopping-set exhaustion, the
//! composite (partitioned-sample-space) approach, k-out trapping-set
//! exhaustion, and the uniformly-good check.
//!
//! Every driver reports through [`SearchReport`]: the minimal pattern size
//! found (or the proven absence level), the exhaustive list at that size,
//! whether the run is exhaustive, per-set classification, optional bound
//! curves, and resource statistics. A report with `exhaustive = true` and an
//! empty list certifies that no pattern of the requested kind and size
//! `<= w_min` exists.

mod bitwise;
mod composite;
mod frame;
mod trapping;

pub use bitwise::{sse_bit, LfPolicy};
pub use composite::{composite_sse, default_partition, validate_partition, PartitionEvent};
pub use frame::{sse_frame, sse_frame_aux_equivalent};
pub use trapping::{ktse, uniformly_good_check, KtseOptions, UniformlyGoodVerdict};

pub(crate) use bitwise::sse_bit_core;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::ErasurePolynomial;
use crate::tanner::{PatternClass, SupportSet, TannerError};

#[derive(Debug, Error)]
pub enum ExhaustError {
    #[error("bit {0} is shortened; grow from a live bit")]
    ShortenedBit(usize),
    #[error("bit {bit} out of range for n = {n}")]
    BitOutOfRange { bit: usize, n: usize },
    #[error("events do not partition the sample space: {0}")]
    NotAPartition(String),
    #[error("k-out exhaustion requires a code without shortened bits")]
    ShortenedCode,
    #[error(transparent)]
    Tanner(#[from] TannerError),
}

/// Resource limits for one search run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Maximum pattern size of interest; exhaustion is proven up to here.
    pub t: usize,
    /// Decoding-tree size limit.
    pub node_budget: usize,
    /// Cap on the candidate antichain per tree node.
    pub count_cap: usize,
    /// Optional wall-clock limit in milliseconds for one driver call.
    pub time_budget_ms: Option<u64>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            t: 8,
            node_budget: 2_000_000,
            count_cap: 100_000,
            time_budget_ms: None,
        }
    }
}

impl SearchLimits {
    pub(crate) fn with_t(&self, t: usize) -> Self {
        SearchLimits {
            t,
            ..self.clone()
        }
    }
}

/// What a report exhausted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchScope {
    Bit(usize),
    Frame,
    KOut(usize),
}

/// Resource statistics accumulated over a run.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub peak_nodes: u64,
    pub grows: u64,
    pub pivots: u64,
    pub rule4_hits: u64,
    /// Partition events or edge selections processed.
    pub partitions: u64,
    pub runtime_ms: u64,
}

impl SearchStats {
    pub(crate) fn absorb(&mut self, other: &SearchStats) {
        self.nodes += other.nodes;
        self.peak_nodes = self.peak_nodes.max(other.peak_nodes);
        self.grows += other.grows;
        self.pivots += other.pivots;
        self.rule4_hits += other.rule4_hits;
        self.partitions += other.partitions;
    }
}

/// Outcome of an exhaustion run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchReport {
    pub scope: SearchScope,
    /// Size of the listed minimal patterns; when the list is empty and the
    /// run is exhaustive, no pattern of size <= w_min exists.
    pub w_min: usize,
    /// All minimal patterns (original variable indices, 0-based).
    pub x_min: Vec<SupportSet>,
    pub exhaustive: bool,
    /// Classification of each listed set, aligned with `x_min`.
    pub classification: Vec<PatternClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ub_curve: Option<ErasurePolynomial>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lb_curve: Option<ErasurePolynomial>,
    pub stats: SearchStats,
}

impl SearchReport {
    /// Re-verifies every listed set through classification against the given
    /// code; used by tests and by the CLI's exit-status logic.
    pub fn verify_against(&self, code: &crate::tanner::SparseParityCheck) -> Result<(), String> {
        use crate::tanner::classify_pattern;
        if self.x_min.len() != self.classification.len() {
            return Err("classification list length mismatch".into());
        }
        for (set, cls) in self.x_min.iter().zip(&self.classification) {
            let fresh = classify_pattern(code, set).map_err(|e| e.to_string())?;
            if fresh != *cls {
                return Err(format!("set {set} classification drifted"));
            }
            if set.len() != self.w_min {
                return Err(format!("set {set} size differs from w_min"));
            }
            let ok = match self.scope {
                SearchScope::Bit(_) | SearchScope::Frame => fresh.is_stopping(),
                SearchScope::KOut(k) => fresh.is_k_out(k),
            };
            if !ok {
                return Err(format!("set {set} does not verify for {:?}", self.scope));
            }
        }
        Ok(())
    }
}
