//! Frame-wise stopping-set exhaustion: partition the sample space by the
//! first erased free bit, run the bit-rooted driver on each conditioned
//! code, and lift the per-event minima back to original indices.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::bounds::{lower_bound_poly, ErasurePolynomial, EXACT_LB_THRESHOLD};
use crate::simulate::peel_decode;
use crate::tanner::{classify_pattern, shorten, SparseParityCheck, SupportSet};

use super::{sse_bit_core, ExhaustError, LfPolicy, SearchLimits, SearchReport, SearchScope, SearchStats};

struct EventResult {
    /// Free failure patterns lifted to original indices, event bit adjoined.
    sets: Vec<SupportSet>,
    /// Total free size of those patterns (event bit included).
    w: Option<usize>,
    exhaustive: bool,
    /// eps * UB of the conditioned tree, in original terms.
    ub_term: ErasurePolynomial,
    stats: SearchStats,
}

fn run_event(
    code: &SparseParityCheck,
    free: &[usize],
    idx: usize,
    limits: &SearchLimits,
    best: &AtomicUsize,
) -> Result<EventResult, ExhaustError> {
    let k = free[idx];
    let earlier: SupportSet = free[..idx].iter().copied().collect();
    let reduced = shorten(code, &earlier)?;
    let root = reduced
        .to_reduced(k)
        .expect("event bit is not shortened");
    let cond = reduced.code.with_punctured([root]);
    // Search no deeper than the best total size found so far: a pattern
    // strictly larger than the running minimum can never join the final
    // list, and patterns at it are found by their own event. Candidate
    // totals here are free weight plus the punctured count of `cond`.
    let adjoined = cond.punctured().len();
    let t_event = limits
        .t
        .min(best.load(Ordering::Relaxed))
        .saturating_sub(adjoined);
    let core = sse_bit_core(&cond, root, &limits.with_t(t_event), LfPolicy::Guided)?;
    if let Some(w) = core.w_free {
        best.fetch_min(w + adjoined, Ordering::Relaxed);
    }
    // Lift: free patterns exclude the punctured root and any pre-punctured
    // bits; adjoin the event bit, then map back to original indices.
    let pre_punct: SupportSet = cond
        .punctured()
        .iter()
        .copied()
        .collect();
    let sets: Vec<SupportSet> = core
        .free_sets
        .iter()
        .map(|s| reduced.lift(&s.union(&pre_punct)))
        .collect();
    let ub_term = ErasurePolynomial::eps_pow(1).mul(&core.ub);
    Ok(EventResult {
        sets,
        w: core.w_free.map(|w| w + adjoined),
        exhaustive: core.exhaustive,
        ub_term,
        stats: core.stats,
    })
}

/// Exhausts the frame-wise minimal stopping sets of the code up to
/// `limits.t`, and assembles the frame-error upper bound as the sum of
/// eps-weighted conditioned bit bounds. Pre-punctured bits participate for
/// free and are adjoined to the reported sets.
pub fn sse_frame(
    code: &SparseParityCheck,
    limits: &SearchLimits,
) -> Result<SearchReport, ExhaustError> {
    let start = Instant::now();
    let free = code.free_vars();
    let mut stats = SearchStats::default();

    // all-free-bits-known event: failure from punctured bits alone
    let punctured: SupportSet = code.punctured().iter().copied().collect();
    let base_residual = peel_decode(code, &punctured);
    if !base_residual.is_empty() {
        // every erasure pattern fails; the minimal failure pattern is empty
        stats.runtime_ms = start.elapsed().as_millis() as u64;
        let set = punctured;
        let classification = vec![classify_pattern(code, &set)?];
        return Ok(SearchReport {
            scope: SearchScope::Frame,
            w_min: set.len(),
            x_min: vec![set],
            exhaustive: true,
            classification,
            ub_curve: Some(ErasurePolynomial::one()),
            lb_curve: None,
            stats,
        });
    }

    // Shared running minimum over total pattern size: later events prune
    // their search depth to it, exactly like the running-minimum update of
    // the trapping-set loop. The final list is unaffected because every
    // pattern at the final minimum is found by its own event.
    let best = AtomicUsize::new(limits.t + code.punctured().len() + 1);
    let events: Vec<EventResult> = (0..free.len())
        .into_par_iter()
        .map(|idx| run_event(code, &free, idx, limits, &best))
        .collect::<Result<_, _>>()?;

    let mut exhaustive = true;
    let mut ub = ErasurePolynomial::zero();
    let mut w_min: Option<usize> = None;
    for ev in &events {
        exhaustive &= ev.exhaustive;
        ub = ub.add(&ev.ub_term);
        if let Some(w) = ev.w {
            w_min = Some(w_min.map_or(w, |cur: usize| cur.min(w)));
        }
        stats.absorb(&ev.stats);
        stats.partitions += 1;
    }
    let mut x_min: Vec<SupportSet> = Vec::new();
    if let Some(w) = w_min {
        for ev in &events {
            if ev.w == Some(w) {
                x_min.extend(ev.sets.iter().cloned());
            }
        }
        x_min.sort();
        x_min.dedup();
    }
    let classification: Vec<_> = x_min
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
    stats.runtime_ms = start.elapsed().as_millis() as u64;
    let w_min = match (w_min, exhaustive) {
        (Some(w), _) => w,
        (None, true) => limits.t + code.punctured().len(),
        (None, false) => 0,
    };
    Ok(SearchReport {
        scope: SearchScope::Frame,
        w_min,
        x_min,
        exhaustive,
        classification,
        ub_curve: Some(ub),
        lb_curve,
        stats,
    })
}

/// The auxiliary-node formulation of the frame search: add one punctured
/// variable x0 and one check tied to every variable, then run the bit-rooted
/// driver at x0. The frame error of the original code is the bit error of
/// x0. Kept as an equivalence test path, not the production path.
pub fn sse_frame_aux_equivalent(
    code: &SparseParityCheck,
    limits: &SearchLimits,
) -> Result<SearchReport, ExhaustError> {
    let n = code.n();
    let mut rows: Vec<Vec<usize>> = (0..code.m())
        .map(|j| code.check_neighbors(j).to_vec())
        .collect();
    rows.push((0..=n).collect()); // new check touches x0..xn; x0 is index n
    let aug = SparseParityCheck::from_rows(n + 1, rows)?
        .with_punctured(code.punctured().iter().copied().chain([n]))
        .with_shortened_annotation(code.shortened().iter().copied());
    let core = sse_bit_core(&aug, n, &limits.with_t(limits.t), LfPolicy::Balanced)?;
    let punct: SupportSet = code.punctured().iter().copied().collect();
    let x_min: Vec<SupportSet> = core
        .free_sets
        .iter()
        .map(|s| s.union(&punct))
        .collect();
    let classification = x_min
        .iter()
        .map(|s| classify_pattern(code, s).expect("within original range"))
        .collect();
    Ok(SearchReport {
        scope: SearchScope::Frame,
        w_min: core.w_free.unwrap_or(limits.t) + punct.len(),
        x_min,
        exhaustive: core.exhaustive,
        classification,
        ub_curve: None,
        lb_curve: None,
        stats: core.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{brute_force_patterns, PatternQuery};
    use crate::tanner::{builtin_code, BuiltinCode};

    #[test]
    fn c1_frame_matches_brute_force() {
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        let rep = sse_frame(&h, &SearchLimits::default().with_t(5)).unwrap();
        assert!(rep.exhaustive);
        let (w, oracle) = brute_force_patterns(&h, 5, PatternQuery::Stopping, None).unwrap();
        assert_eq!(rep.w_min, w);
        let mut expected = oracle;
        expected.sort();
        assert_eq!(rep.x_min, expected);
        rep.verify_against(&h).unwrap();
    }

    #[test]
    fn weight_one_stopping_set_found_immediately() {
        // a degree-0 column is a stopping set of size 1
        let h = SparseParityCheck::from_rows(4, vec![vec![0, 1, 2]]).unwrap();
        let rep = sse_frame(&h, &SearchLimits::default().with_t(3)).unwrap();
        assert_eq!(rep.w_min, 1);
        assert!(rep.x_min.contains(&SupportSet::new(vec![3])));
        assert!(rep.exhaustive);
    }

    #[test]
    fn aux_formulation_agrees_on_c1() {
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        let a = sse_frame(&h, &SearchLimits::default().with_t(4)).unwrap();
        let b = sse_frame_aux_equivalent(&h, &SearchLimits::default().with_t(4)).unwrap();
        assert_eq!(a.exhaustive, b.exhaustive);
        assert_eq!(a.w_min, b.w_min);
        let (mut xa, mut xb) = (a.x_min.clone(), b.x_min.clone());
        xa.sort();
        xb.sort();
        assert_eq!(xa, xb);
    }
}
