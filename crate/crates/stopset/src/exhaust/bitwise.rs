//! The bit-wise stopping-set exhaustion driver: decoding-tree growth with a
//! counterexample-guided engine, periodic candidate extraction, and the
//! tightness/absence stop rules.
//!
//! The guided engine repeatedly extracts the minimal-weight candidates of
//! the current tree, verifies each against the peeling decoder, and grows
//! exactly the unexpanded positions that keep a spurious candidate alive
//! (those on paths it erases). Growth order never affects soundness — the
//! tree function only narrows — so the exhaustion claims are the same as
//! for breadth-first growth, reached with far smaller trees.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::booltree::{DecodingTree, TreeError};
use crate::bounds::{
    lower_bound_poly, min_weight_terms, ub_poly, CandidateCollection, EXACT_LB_THRESHOLD,
};
use crate::simulate::peel_decode;
use crate::tanner::{classify_pattern, SparseParityCheck, SupportSet};

use super::{ExhaustError, SearchLimits, SearchReport, SearchScope, SearchStats};

/// Leaf-finding policy. The guided policy expands whatever keeps the current
/// spurious candidates alive; balanced growing follows the breadth-first
/// order of the unpivoted decoding tree, serving duplicated copies
/// consecutively; the random policy is the experimental baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LfPolicy {
    Guided,
    Balanced,
    Random { seed: u64 },
}

impl Default for LfPolicy {
    fn default() -> Self {
        LfPolicy::Guided
    }
}

/// Raw outcome of one conditioned bit-rooted search. Sets are over the free
/// (non-punctured, non-shortened) variables of the searched code; callers
/// adjoin forced bits and lift indices.
#[derive(Debug, Clone)]
pub(crate) struct CoreOutcome {
    /// Minimal free-pattern weight, None when none exists within `t`.
    pub w_free: Option<usize>,
    /// All verified minimal free failure patterns (true failures only).
    pub free_sets: Vec<SupportSet>,
    /// True when the run proves its claim: either `free_sets` lists every
    /// minimal free failure pattern, or none of weight <= t exists.
    pub exhaustive: bool,
    /// Upper-bound polynomial of the finished tree.
    pub ub: crate::bounds::ErasurePolynomial,
    pub stats: SearchStats,
}

/// True failure test for the conditioned bit-rooted problem: the peeling
/// residual of (pattern + punctured bits) must still contain the root.
fn verify_free_pattern(code: &SparseParityCheck, root: usize, free: &SupportSet) -> bool {
    let erased: SupportSet = free
        .iter()
        .chain(code.punctured().iter().copied())
        .collect();
    peel_decode(code, &erased).contains(root)
}

fn erasure_vector(code: &SparseParityCheck, free: &SupportSet) -> Vec<bool> {
    let mut y = vec![false; code.n()];
    for i in free.iter() {
        y[i] = true;
    }
    for &i in code.punctured() {
        y[i] = true;
    }
    y
}

enum KillOutcome {
    Killed,
    VerifiedTrue,
    Budget,
}

/// Expands the positions that keep the assignment alive until its value
/// drops to zero or no supporting position remains (then the pattern is a
/// genuine failure).
fn grow_to_kill(tree: &mut DecodingTree, y: &[bool]) -> KillOutcome {
    loop {
        if !tree.eval_function(y) {
            return KillOutcome::Killed;
        }
        let live = tree.live_path_positions(y);
        if live.is_empty() {
            return KillOutcome::VerifiedTrue;
        }
        for pid in live {
            // pivots along the way may have consumed or replaced positions
            if !tree.position_is_pending(pid) {
                continue;
            }
            match tree.grow_leaf(pid) {
                Ok(_) => {}
                Err(TreeError::BudgetExceeded { .. }) => return KillOutcome::Budget,
                Err(e) => panic!("tree invariant failure: {e}"),
            }
        }
    }
}

enum Stop {
    /// Candidates complete; either tight or empty below the cap.
    Proven(CandidateCollection),
    /// Blind growth exhausted every position within the caps.
    FullyGrown,
    Budget,
}

fn drive_guided(
    tree: &mut DecodingTree,
    code: &SparseParityCheck,
    bit: usize,
    limits: &SearchLimits,
    start: &Instant,
) -> Stop {
    loop {
        if let Some(ms) = limits.time_budget_ms {
            if start.elapsed().as_millis() as u64 > ms {
                return Stop::Budget;
            }
        }
        let dp0 = Instant::now();
        let cand = min_weight_terms(tree, limits.t, limits.count_cap);
        if std::env::var("STOPSET_TRACE").is_ok() {
            eprintln!(
                "round: nodes={} w={:?} cands={} complete={} dp={:?}",
                tree.live_nodes(), cand.weight, cand.sets.len(), cand.complete, dp0.elapsed()
            );
        }
        if !cand.complete {
            return Stop::Budget;
        }
        if cand.weight.is_none() {
            return Stop::Proven(cand);
        }
        if cand.sets.iter().any(|s| verify_free_pattern(code, bit, s)) {
            return Stop::Proven(cand);
        }
        // every minimal candidate is spurious: kill them one by one
        for s in &cand.sets {
            let y = erasure_vector(code, s);
            match grow_to_kill(tree, &y) {
                KillOutcome::Killed => {}
                // exact on this assignment yet the peeling decoder recovers
                // the bit: impossible while narrowing holds
                KillOutcome::VerifiedTrue => panic!(
                    "candidate {s} evaluates true on the finished subtree but fails verification"
                ),
                KillOutcome::Budget => return Stop::Budget,
            }
        }
    }
}

fn drive_blind(
    tree: &mut DecodingTree,
    code: &SparseParityCheck,
    bit: usize,
    limits: &SearchLimits,
    start: &Instant,
    mut rng: Option<ChaCha8Rng>,
) -> Stop {
    let mut next_check = 512usize;
    let mut grows_since = 0u64;
    loop {
        if tree.live_nodes() >= next_check || grows_since >= 4096 {
            grows_since = 0;
            let cand = min_weight_terms(tree, limits.t, limits.count_cap);
            if cand.complete {
                let done = match cand.weight {
                    None => true,
                    Some(_) => cand.sets.iter().any(|s| verify_free_pattern(code, bit, s)),
                };
                if done {
                    return Stop::Proven(cand);
                }
            }
            next_check = tree.live_nodes() + (tree.live_nodes() / 2).max(256);
        }
        if let Some(ms) = limits.time_budget_ms {
            if start.elapsed().as_millis() as u64 > ms {
                return Stop::Budget;
            }
        }
        let pos = match &mut rng {
            None => tree.next_position_balanced(),
            Some(r) => tree.next_position_random(r),
        };
        let Some(pid) = pos else {
            return Stop::FullyGrown;
        };
        match tree.grow_leaf(pid) {
            Ok(_) => grows_since += 1,
            Err(TreeError::BudgetExceeded { .. }) => return Stop::Budget,
            Err(e) => panic!("tree invariant failure: {e}"),
        }
    }
}

pub(crate) fn sse_bit_core(
    code: &SparseParityCheck,
    bit: usize,
    limits: &SearchLimits,
    policy: LfPolicy,
) -> Result<CoreOutcome, ExhaustError> {
    if bit >= code.n() {
        return Err(ExhaustError::BitOutOfRange { bit, n: code.n() });
    }
    if code.is_shortened(bit) {
        return Err(ExhaustError::ShortenedBit(bit));
    }
    let start = Instant::now();
    let budget = limits.node_budget.max(1 + code.var_degree(bit));
    let mut tree =
        DecodingTree::new(code, bit, budget).expect("budget was raised to fit the root");
    tree.set_weight_freeze(limits.t);

    let stop = match policy {
        LfPolicy::Guided => drive_guided(&mut tree, code, bit, limits, &start),
        LfPolicy::Balanced => drive_blind(&mut tree, code, bit, limits, &start, None),
        LfPolicy::Random { seed } => drive_blind(
            &mut tree,
            code,
            bit,
            limits,
            &start,
            Some(ChaCha8Rng::seed_from_u64(seed)),
        ),
    };

    // candidate extraction uses the boundary-slot semantics, so it must see
    // the tree before finalize hardwires the remaining slots to one
    let cand = match &stop {
        Stop::Proven(c) => c.clone(),
        _ => min_weight_terms(&tree, limits.t, limits.count_cap),
    };
    let pre_finalize_nodes = tree.live_nodes();
    tree.finalize();
    let verified: Vec<SupportSet> = cand
        .sets
        .iter()
        .filter(|s| verify_free_pattern(code, bit, s))
        .cloned()
        .collect();
    let tight = !verified.is_empty();
    // Exhaustive when the candidate list is complete and either some minimal
    // candidate is a true failure (then every true minimal pattern is among
    // the candidates) or no candidate of weight <= t remains at all. A tree
    // grown to exhaustion under the weight caps is exact on all patterns of
    // weight <= t, so its non-tight survivors also certify absence.
    let (w_free, free_sets, exhaustive) = if !cand.complete {
        (None, Vec::new(), false)
    } else {
        match (cand.weight, tight) {
            (None, _) => (None, Vec::new(), true),
            (Some(w), true) => (Some(w), verified, true),
            (Some(_), false) => match stop {
                Stop::FullyGrown => (None, Vec::new(), true),
                _ => (None, Vec::new(), false),
            },
        }
    };

    let trunc = w_free.unwrap_or(limits.t) + 6;
    let ub = ub_poly(&tree, trunc);
    let ts = tree.stats();
    let stats = SearchStats {
        nodes: pre_finalize_nodes as u64,
        peak_nodes: ts.peak_nodes as u64,
        grows: ts.grows,
        pivots: ts.pivots,
        rule4_hits: ts.rule4_hits,
        partitions: 0,
        runtime_ms: start.elapsed().as_millis() as u64,
    };
    Ok(CoreOutcome {
        w_free,
        free_sets,
        exhaustive,
        ub,
        stats,
    })
}

/// Exhausts the minimal stopping sets containing `bit`, up to size
/// `limits.t`. When the report says `exhaustive` with a nonempty list, the
/// list is all of them; when it says `exhaustive` with an empty list, no
/// stopping set through `bit` has size <= `w_min`. Punctured bits of the
/// code are adjoined to every reported set.
pub fn sse_bit(
    code: &SparseParityCheck,
    bit: usize,
    limits: &SearchLimits,
) -> Result<SearchReport, ExhaustError> {
    sse_bit_with_policy(code, bit, limits, LfPolicy::Guided)
}

pub fn sse_bit_with_policy(
    code: &SparseParityCheck,
    bit: usize,
    limits: &SearchLimits,
    policy: LfPolicy,
) -> Result<SearchReport, ExhaustError> {
    let start = Instant::now();
    let core = sse_bit_core(code, bit, limits, policy)?;
    let punctured: SupportSet = code.punctured().iter().copied().collect();
    let x_min: Vec<SupportSet> = core
        .free_sets
        .iter()
        .map(|s| s.union(&punctured))
        .collect();
    let classification = x_min
        .iter()
        .map(|s| classify_pattern(code, s).expect("indices in range"))
        .collect();
    let lb_sets: Vec<SupportSet> = x_min
        .iter()
        .zip(&classification)
        .filter(|(_, c): &(_, &crate::tanner::PatternClass)| c.is_stopping())
        .map(|(s, _)| s.clone())
        .collect();
    let lb_curve = if lb_sets.is_empty() {
        None
    } else {
        Some(lower_bound_poly(&lb_sets, EXACT_LB_THRESHOLD).expect("nonempty"))
    };
    let mut stats = core.stats;
    stats.runtime_ms = start.elapsed().as_millis() as u64;
    let w_min = match (core.w_free, core.exhaustive) {
        (Some(w), _) => w + punctured.len(),
        (None, true) => limits.t + punctured.len(),
        (None, false) => 0,
    };
    Ok(SearchReport {
        scope: SearchScope::Bit(bit),
        w_min,
        x_min,
        exhaustive: core.exhaustive,
        classification,
        ub_curve: Some(core.ub),
        lb_curve,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::{builtin_code, BuiltinCode};

    #[test]
    fn c1_bit2_exhausts_both_minimal_sets() {
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        let rep = sse_bit(&h, 1, &SearchLimits::default().with_t(5)).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.w_min, 3);
        let mut sets = rep.x_min.clone();
        sets.sort();
        assert_eq!(
            sets,
            vec![SupportSet::new(vec![0, 1, 5]), SupportSet::new(vec![1, 2, 3])]
        );
        rep.verify_against(&h).unwrap();
        // the lower bound is 2 eps^3 - eps^5
        let lb = rep.lb_curve.unwrap();
        assert_eq!(lb, crate::bounds::poly_from_ints(&[0, 0, 0, 2, 0, -1]));
        // the upper bound dominates the exact value at eps = 0.1
        let ub = rep.ub_curve.unwrap();
        assert!(ub.eval_f64(0.1) >= 2.152e-3 - 1e-12);
    }

    #[test]
    fn absence_certificate_on_bit_without_small_sets() {
        // every bit of C1 sits in stopping sets of size 3 and up; a search
        // with t = 2 must certify absence
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        let rep = sse_bit(&h, 0, &SearchLimits::default().with_t(2)).unwrap();
        assert!(rep.exhaustive);
        assert!(rep.x_min.is_empty());
        assert_eq!(rep.w_min, 2);
    }

    #[test]
    fn all_policies_agree() {
        let h = builtin_code(&BuiltinCode::Regular { dv: 3, dc: 6, n: 18 }, 3).unwrap();
        let mut limits = SearchLimits::default().with_t(4);
        limits.node_budget = 100_000;
        let a = sse_bit(&h, 0, &limits).unwrap();
        assert!(a.exhaustive);
        let b = sse_bit_with_policy(&h, 0, &limits, LfPolicy::Balanced).unwrap();
        let c = sse_bit_with_policy(&h, 0, &limits, LfPolicy::Random { seed: 99 }).unwrap();
        for other in [&b, &c] {
            if other.exhaustive {
                let (mut xa, mut xb) = (a.x_min.clone(), other.x_min.clone());
                xa.sort();
                xb.sort();
                assert_eq!(xa, xb);
            }
        }
    }

    #[test]
    fn punctured_root_searches_conditioned_problem() {
        // puncture bit 1 of C1: minimal free patterns for bit-1 failure are
        // the minimal stopping sets through v2 minus the punctured bit
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap().with_punctured([1]);
        let rep = sse_bit(&h, 1, &SearchLimits::default().with_t(5)).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.w_min, 3);
        let mut sets = rep.x_min.clone();
        sets.sort();
        assert_eq!(
            sets,
            vec![SupportSet::new(vec![0, 1, 5]), SupportSet::new(vec![1, 2, 3])]
        );
    }
}
