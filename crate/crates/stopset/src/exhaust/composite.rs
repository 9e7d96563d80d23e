//! The composite approach: partition the sample space by forcing a few bits
//! to erased/known, solve each conditioned code, union the per-event minima
//! after adjoining the forced-erased bits, and recombine the bounds into a
//! probability-weighted composite upper bound.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ErasurePolynomial;
use crate::tanner::{classify_pattern, shorten, PatternClass, SparseParityCheck, SupportSet};

use super::{
    sse_frame, ExhaustError, SearchLimits, SearchReport, SearchScope, SearchStats,
    bitwise::sse_bit,
};

/// One event of a sample-space partition: the listed bits are forced erased
/// (punctured in the conditioned code) or forced known (shortened).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionEvent {
    pub forced_one: SupportSet,
    pub forced_zero: SupportSet,
}

impl PartitionEvent {
    pub fn new(forced_one: SupportSet, forced_zero: SupportSet) -> Self {
        PartitionEvent {
            forced_one,
            forced_zero,
        }
    }

    /// eps^{|forced_one|} (1-eps)^{|forced_zero|}.
    pub fn probability_factor(&self) -> ErasurePolynomial {
        let eps = ErasurePolynomial::eps_pow(1);
        let comp = eps.one_minus();
        let mut p = ErasurePolynomial::one();
        for _ in 0..self.forced_one.len() {
            p = p.mul(&eps);
        }
        for _ in 0..self.forced_zero.len() {
            p = p.mul(&comp);
        }
        p
    }

    fn contradicts(&self, other: &PartitionEvent) -> bool {
        self.forced_one.iter().any(|i| other.forced_zero.contains(i))
            || self.forced_zero.iter().any(|i| other.forced_one.contains(i))
    }
}

/// Checks that the events are pairwise contradiction-free and that their
/// probability factors sum to one as polynomials.
pub fn validate_partition(
    code: &SparseParityCheck,
    events: &[PartitionEvent],
) -> Result<(), ExhaustError> {
    for ev in events {
        if let Some(i) = ev
            .forced_one
            .iter()
            .chain(ev.forced_zero.iter())
            .find(|&i| i >= code.n())
        {
            return Err(ExhaustError::NotAPartition(format!(
                "forced bit {i} out of range"
            )));
        }
        if ev
            .forced_one
            .iter()
            .any(|i| ev.forced_zero.contains(i))
        {
            return Err(ExhaustError::NotAPartition(
                "an event forces a bit both ways".into(),
            ));
        }
        if ev
            .forced_one
            .iter()
            .chain(ev.forced_zero.iter())
            .any(|i| code.is_punctured(i) || code.is_shortened(i))
        {
            return Err(ExhaustError::NotAPartition(
                "events must force free bits only".into(),
            ));
        }
    }
    for (a, ea) in events.iter().enumerate() {
        for eb in events.iter().skip(a + 1) {
            if !ea.contradicts(eb) {
                return Err(ExhaustError::NotAPartition(
                    "two events overlap (no contradicting forced bit)".into(),
                ));
            }
        }
    }
    let total = events
        .iter()
        .fold(ErasurePolynomial::zero(), |acc, ev| {
            acc.add(&ev.probability_factor())
        });
    if total != ErasurePolynomial::one() {
        return Err(ExhaustError::NotAPartition(format!(
            "probability factors sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// The documented default partition for bit-wise runs: condition on up to
/// three highest-degree variables among those sharing a check with the root,
/// using all sign patterns (at most 8 events).
pub fn default_partition(code: &SparseParityCheck, root: usize) -> Vec<PartitionEvent> {
    let mut nbhd: Vec<usize> = Vec::new();
    for &j in code.var_neighbors(root) {
        for &i in code.check_neighbors(j) {
            if i != root
                && !code.is_punctured(i)
                && !code.is_shortened(i)
                && !nbhd.contains(&i)
            {
                nbhd.push(i);
            }
        }
    }
    nbhd.sort_by_key(|&i| (std::cmp::Reverse(code.var_degree(i)), i));
    nbhd.truncate(3);
    let pivots = nbhd;
    let mut events = Vec::new();
    for mask in 0..1usize << pivots.len() {
        let forced_one: SupportSet = pivots
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &i)| i)
            .collect();
        let forced_zero: SupportSet = pivots
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 0)
            .map(|(_, &i)| i)
            .collect();
        events.push(PartitionEvent::new(forced_one, forced_zero));
    }
    events
}

struct EventOutcome {
    sets: Vec<SupportSet>,
    exhaustive: bool,
    weighted_ub: Option<ErasurePolynomial>,
    stats: SearchStats,
}

fn run_event(
    code: &SparseParityCheck,
    scope: SearchScope,
    event: &PartitionEvent,
    limits: &SearchLimits,
) -> Result<EventOutcome, ExhaustError> {
    // A bit-scope event that forces the target bit known contributes nothing.
    if let SearchScope::Bit(i) = scope {
        if event.forced_zero.contains(i) {
            return Ok(EventOutcome {
                sets: Vec::new(),
                exhaustive: true,
                weighted_ub: Some(ErasurePolynomial::zero()),
                stats: SearchStats::default(),
            });
        }
    }
    let reduced = shorten(code, &event.forced_zero)?;
    let cond = reduced
        .code
        .with_punctured(event.forced_one.iter().map(|i| {
            reduced
                .to_reduced(i)
                .expect("forced-one bits are disjoint from forced-zero")
        }));
    let t_event = limits.t.saturating_sub(event.forced_one.len());
    let inner = match scope {
        SearchScope::Bit(i) => {
            let root = reduced.to_reduced(i).expect("target not shortened here");
            sse_bit(&cond, root, &limits.with_t(t_event))?
        }
        SearchScope::Frame => sse_frame(&cond, &limits.with_t(t_event))?,
        SearchScope::KOut(_) => unreachable!("composite runs bit or frame scope"),
    };
    // Inner reports adjoin the conditioned code's punctured set (this
    // event's forced-one bits); only index lifting remains.
    let sets: Vec<SupportSet> = inner.x_min.iter().map(|s| reduced.lift(s)).collect();
    let weighted_ub = inner
        .ub_curve
        .as_ref()
        .map(|ub| event.probability_factor().mul(ub));
    Ok(EventOutcome {
        sets,
        exhaustive: inner.exhaustive,
        weighted_ub,
        stats: inner.stats,
    })
}

/// Runs the underlying driver once per partition event on the conditioned
/// code, unions the per-event minima after adjoining each event's forced
/// bits, verifies every candidate against the original code, and sums the
/// probability-weighted bounds into the composite upper bound.
pub fn composite_sse(
    code: &SparseParityCheck,
    scope: SearchScope,
    partition: &[PartitionEvent],
    limits: &SearchLimits,
) -> Result<SearchReport, ExhaustError> {
    let start = Instant::now();
    validate_partition(code, partition)?;
    let outcomes: Vec<EventOutcome> = partition
        .par_iter()
        .map(|ev| run_event(code, scope, ev, limits))
        .collect::<Result<_, _>>()?;

    let mut stats = SearchStats::default();
    let mut exhaustive = true;
    let mut ub = ErasurePolynomial::zero();
    for o in &outcomes {
        exhaustive &= o.exhaustive;
        stats.absorb(&o.stats);
        stats.partitions += 1;
        if let Some(p) = &o.weighted_ub {
            ub = ub.add(p);
        }
    }

    // Global assembly: verify adjoined candidates against the original code
    // and keep the minimum verified size.
    let verifier = |s: &SupportSet| -> Option<PatternClass> {
        let cls = classify_pattern(code, s).ok()?;
        let ok = match scope {
            SearchScope::Bit(i) => cls.is_stopping() && s.contains(i),
            SearchScope::Frame => cls.is_stopping() && !s.is_empty(),
            SearchScope::KOut(_) => false,
        };
        ok.then_some(cls)
    };
    let mut verified: Vec<(SupportSet, PatternClass)> = outcomes
        .iter()
        .flat_map(|o| o.sets.iter())
        .filter_map(|s| verifier(s).map(|c| (s.clone(), c)))
        .collect();
    verified.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    verified.dedup_by(|a, b| a.0 == b.0);
    let w_min = verified.first().map(|(s, _)| s.len());
    let (x_min, classification): (Vec<_>, Vec<_>) = verified
        .into_iter()
        .take_while(|(s, _)| Some(s.len()) == w_min)
        .unzip();

    stats.runtime_ms = start.elapsed().as_millis() as u64;
    let w_min = match (w_min, exhaustive) {
        (Some(w), _) => w,
        (None, true) => limits.t,
        (None, false) => 0,
    };
    Ok(SearchReport {
        scope,
        w_min,
        x_min,
        exhaustive,
        classification,
        ub_curve: Some(ub),
        lb_curve: None,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaust::sse_bit;
    use crate::tanner::{builtin_code, BuiltinCode};

    #[test]
    fn single_trivial_event_matches_base_driver() {
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        let partition = vec![PartitionEvent::new(SupportSet::empty(), SupportSet::empty())];
        let limits = SearchLimits::default().with_t(5);
        let a = composite_sse(&h, SearchScope::Bit(1), &partition, &limits).unwrap();
        let b = sse_bit(&h, 1, &limits).unwrap();
        assert_eq!(a.w_min, b.w_min);
        let (mut xa, mut xb) = (a.x_min.clone(), b.x_min.clone());
        xa.sort();
        xb.sort();
        assert_eq!(xa, xb);
        assert!(a.exhaustive);
    }

    #[test]
    fn three_event_partition_matches_unpartitioned() {
        // the running example partition shape: {b1=0}, {b1=1,b2=0}, {b1=1,b2=1}
        let h = builtin_code(&BuiltinCode::Regular { dv: 3, dc: 6, n: 24 }, 11).unwrap();
        let (b1, b2) = (3, 7);
        let partition = vec![
            PartitionEvent::new(SupportSet::empty(), SupportSet::new(vec![b1])),
            PartitionEvent::new(SupportSet::new(vec![b1]), SupportSet::new(vec![b2])),
            PartitionEvent::new(SupportSet::new(vec![b1, b2]), SupportSet::empty()),
        ];
        let limits = SearchLimits::default().with_t(6);
        let a = composite_sse(&h, SearchScope::Bit(0), &partition, &limits).unwrap();
        let b = sse_bit(&h, 0, &limits).unwrap();
        assert_eq!(a.exhaustive, b.exhaustive);
        assert_eq!(a.w_min, b.w_min);
        let (mut xa, mut xb) = (a.x_min.clone(), b.x_min.clone());
        xa.sort();
        xb.sort();
        assert_eq!(xa, xb);
    }

    #[test]
    fn bad_partitions_rejected() {
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        // overlap: two events with no contradiction
        let p = vec![
            PartitionEvent::new(SupportSet::new(vec![0]), SupportSet::empty()),
            PartitionEvent::new(SupportSet::new(vec![1]), SupportSet::empty()),
        ];
        assert!(validate_partition(&h, &p).is_err());
        // not covering: single event pinning a bit
        let p = vec![PartitionEvent::new(SupportSet::new(vec![0]), SupportSet::empty())];
        assert!(validate_partition(&h, &p).is_err());
    }

    #[test]
    fn default_partition_is_valid() {
        let h = builtin_code(&BuiltinCode::Regular { dv: 3, dc: 6, n: 30 }, 2).unwrap();
        let p = default_partition(&h, 0);
        assert!(p.len() <= 8);
        validate_partition(&h, &p).unwrap();
    }
}
