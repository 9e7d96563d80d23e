//! Ground truth and cross-validation: the BEC peeling decoder, seeded
//! Monte-Carlo estimation with stopping-set harvesting, the brute-force
//! pattern oracle, and exact erasure curves for small codes.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::ErasurePolynomial;
use crate::tanner::{classify_pattern, PatternKind, SparseParityCheck, SupportSet};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("enumeration of {0} subsets exceeds the configured ceiling {1}")]
    CeilingExceeded(u128, u128),
    #[error("exact curves require n <= {max}, code has n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("erasure probability {0} outside (0,1)")]
    BadEpsilon(f64),
}

/// Stop rule for Monte-Carlo runs: a fixed trial count, or run until the
/// given number of frame-error events has been observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    FixedTrials(u64),
    ErrorEvents(u64),
}

/// Outcome of a Monte-Carlo run at one erasure probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McEstimate {
    pub eps: f64,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: Vec<u64>,
    pub fer: f64,
    pub ber: f64,
    /// Normal-approximation 95% half-widths for (fer, ber).
    pub ci95: (f64, f64),
    /// Distinct residual stopping sets observed among the failures.
    pub harvested: Vec<SupportSet>,
}

/// Runs the BEC peeling decoder: repeatedly recover any erased variable
/// incident to a check whose other neighbors are all known. Returns the
/// residual erased set, which is the unique maximal stopping set contained in
/// the input (empty on success).
pub fn peel_decode(code: &SparseParityCheck, erased: &SupportSet) -> SupportSet {
    let mut is_erased = vec![false; code.n()];
    for i in erased.iter() {
        is_erased[i] = true;
    }
    debug_assert!(erased.iter().all(|i| !code.is_shortened(i)));
    debug_assert!(code.punctured().iter().all(|&i| is_erased[i]));
    // erased-neighbor count per check, then a FIFO of degree-1 checks
    let mut count = vec![0usize; code.m()];
    for i in erased.iter() {
        for &j in code.var_neighbors(i) {
            count[j] += 1;
        }
    }
    let mut queue: std::collections::VecDeque<usize> =
        (0..code.m()).filter(|&j| count[j] == 1).collect();
    while let Some(j) = queue.pop_front() {
        if count[j] != 1 {
            continue;
        }
        let &i = code
            .check_neighbors(j)
            .iter()
            .find(|&&i| is_erased[i])
            .expect("count says one erased neighbor");
        is_erased[i] = false;
        for &j2 in code.var_neighbors(i) {
            count[j2] -= 1;
            if count[j2] == 1 {
                queue.push_back(j2);
            }
        }
    }
    (0..code.n()).filter(|&i| is_erased[i]).collect()
}

/// Draws the erasure pattern of one trial from the counter-based stream
/// (seed, trial): shortened bits never erased, punctured bits always erased.
fn draw_erasure(code: &SparseParityCheck, eps: f64, seed: u64, trial: u64) -> SupportSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut erased = Vec::new();
    for i in 0..code.n() {
        if code.is_shortened(i) {
            continue;
        }
        if code.is_punctured(i) || rng.gen::<f64>() < eps {
            erased.push(i);
        }
    }
    SupportSet::new(erased)
}

struct TrialBatch {
    frame_errors: u64,
    bit_errors: Vec<u64>,
    harvested: BTreeSet<SupportSet>,
}

fn run_batch(code: &SparseParityCheck, eps: f64, seed: u64, lo: u64, hi: u64) -> TrialBatch {
    let mut out = TrialBatch {
        frame_errors: 0,
        bit_errors: vec![0; code.n()],
        harvested: BTreeSet::new(),
    };
    for trial in lo..hi {
        let erased = draw_erasure(code, eps, seed, trial);
        let residual = peel_decode(code, &erased);
        if !residual.is_empty() {
            out.frame_errors += 1;
            for i in residual.iter() {
                out.bit_errors[i] += 1;
            }
            out.harvested.insert(residual);
        }
    }
    out
}

/// Monte-Carlo estimation of FER/BER with stopping-set harvesting.
/// Deterministic for fixed (seed, stop_rule, eps); trials run in parallel on
/// independent counter-based streams.
pub fn mc_run(
    code: &SparseParityCheck,
    eps: f64,
    stop_rule: StopRule,
    seed: u64,
) -> Result<McEstimate, SimulateError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(SimulateError::BadEpsilon(eps));
    }
    let mut frame_errors = 0u64;
    let mut bit_errors = vec![0u64; code.n()];
    let mut harvested = BTreeSet::new();
    let mut trials = 0u64;
    const BATCH: u64 = 4096;
    loop {
        let target = match stop_rule {
            StopRule::FixedTrials(t) => {
                if trials >= t {
                    break;
                }
                (t - trials).min(BATCH * 8)
            }
            StopRule::ErrorEvents(e) => {
                if frame_errors >= e || eps == 0.0 {
                    break;
                }
                BATCH * 8
            }
        };
        let chunks: Vec<(u64, u64)> = (0..target.div_ceil(BATCH))
            .map(|k| {
                let lo = trials + k * BATCH;
                (lo, (lo + BATCH).min(trials + target))
            })
            .collect();
        let batches: Vec<TrialBatch> = chunks
            .par_iter()
            .map(|&(lo, hi)| run_batch(code, eps, seed, lo, hi))
            .collect();
        for b in batches {
            frame_errors += b.frame_errors;
            for (acc, x) in bit_errors.iter_mut().zip(b.bit_errors) {
                *acc += x;
            }
            harvested.extend(b.harvested);
        }
        trials += target;
    }
    let free: Vec<usize> = code.free_vars();
    let fer = frame_errors as f64 / trials.max(1) as f64;
    let total_bits: u64 = free.iter().map(|&i| bit_errors[i]).sum();
    let ber = total_bits as f64 / (trials.max(1) as f64 * free.len().max(1) as f64);
    let half = |p: f64, n: f64| 1.96 * (p * (1.0 - p) / n).sqrt();
    Ok(McEstimate {
        eps,
        trials,
        frame_errors,
        fer,
        ber,
        ci95: (
            half(fer, trials.max(1) as f64),
            half(ber, trials.max(1) as f64 * free.len().max(1) as f64),
        ),
        bit_errors,
        harvested: harvested.into_iter().collect(),
    })
}

/// Default ceiling on the number of subsets the oracle will enumerate.
pub const ORACLE_CEILING: u128 = 200_000_000;

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Which pattern the oracle (and the ktse driver) is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternQuery {
    Stopping,
    CodewordSupport,
    KOut(usize),
}

impl PatternQuery {
    pub fn matches(&self, kind: PatternKind) -> bool {
        match (self, kind) {
            (PatternQuery::Stopping, PatternKind::StoppingSet)
            | (PatternQuery::Stopping, PatternKind::CodewordSupport)
            | (PatternQuery::CodewordSupport, PatternKind::CodewordSupport) => true,
            (PatternQuery::KOut(0), k) => {
                matches!(k, PatternKind::StoppingSet | PatternKind::CodewordSupport)
            }
            (PatternQuery::KOut(k), PatternKind::KOutTrapping(k2)) => *k == k2,
            _ => false,
        }
    }
}

/// Exhaustively enumerates all nonempty subsets of size <= t (containing
/// `bit` when given), classifies each, and returns the minimal size at which
/// the requested kind occurs together with every set of that size.
/// Returns (t, empty) when none exists within range.
pub fn brute_force_patterns(
    code: &SparseParityCheck,
    t: usize,
    kind: PatternQuery,
    bit: Option<usize>,
) -> Result<(usize, Vec<SupportSet>), SimulateError> {
    let n = code.n();
    let work: u128 = match bit {
        Some(_) => (1..=t).map(|s| binom(n.saturating_sub(1), s - 1)).sum(),
        None => (1..=t).map(|s| binom(n, s)).sum(),
    };
    if work > ORACLE_CEILING {
        return Err(SimulateError::CeilingExceeded(work, ORACLE_CEILING));
    }
    let mut found: Vec<SupportSet> = Vec::new();
    let mut best = t + 1;
    // Iterative enumeration of subsets by size, smallest first, so we can
    // stop as soon as one size yields matches.
    for s in 1..=t {
        if s > best {
            break;
        }
        enumerate_size(code, s, bit, &mut |set: &SupportSet| {
            let c = classify_pattern(code, set).expect("indices valid");
            if kind.matches(c.kind) {
                best = s;
                found.push(set.clone());
            }
        });
        if !found.is_empty() {
            return Ok((s, found));
        }
    }
    Ok((t, Vec::new()))
}

fn enumerate_size(
    code: &SparseParityCheck,
    size: usize,
    bit: Option<usize>,
    f: &mut impl FnMut(&SupportSet),
) {
    let n = code.n();
    let pool: Vec<usize> = match bit {
        Some(b) => (0..n).filter(|&i| i != b).collect(),
        None => (0..n).collect(),
    };
    let choose = match bit {
        Some(_) => {
            if size == 0 {
                return;
            }
            size - 1
        }
        None => size,
    };
    if choose > pool.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..choose).collect();
    loop {
        let mut members: Vec<usize> = idx.iter().map(|&k| pool[k]).collect();
        if let Some(b) = bit {
            members.push(b);
        }
        f(&SupportSet::new(members));
        // next combination
        let mut i = choose;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + pool.len() - choose {
                break;
            }
        }
        if choose == 0 {
            return;
        }
        idx[i] += 1;
        for j in i + 1..choose {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Scope of a curve or search: one bit's error event, or the frame event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveScope {
    Bit(usize),
    Frame,
}

/// Maximum code length accepted by `exact_curve`.
pub const EXACT_CURVE_MAX_N: usize = 20;

/// Exact erasure curve by full enumeration: for each weight w, counts free
/// erasure sets of size w whose residual is nonempty (frame) or contains the
/// bit, and assembles sum_w count_w eps^w (1-eps)^(n_free-w) exactly.
pub fn exact_curve(
    code: &SparseParityCheck,
    scope: CurveScope,
) -> Result<ErasurePolynomial, SimulateError> {
    let free = code.free_vars();
    let nf = free.len();
    if nf > EXACT_CURVE_MAX_N {
        return Err(SimulateError::TooLarge {
            n: nf,
            max: EXACT_CURVE_MAX_N,
        });
    }
    if let CurveScope::Bit(b) = scope {
        if b >= code.n() {
            return Err(SimulateError::TooLarge { n: b, max: code.n() });
        }
    }
    let punctured: Vec<usize> = code.punctured().iter().copied().collect();
    let mut counts = vec![0u64; nf + 1];
    for mask in 0u64..(1u64 << nf) {
        let mut erased: Vec<usize> = punctured.clone();
        let mut w = 0usize;
        for (k, &i) in free.iter().enumerate() {
            if mask >> k & 1 == 1 {
                erased.push(i);
                w += 1;
            }
        }
        let residual = peel_decode(code, &SupportSet::new(erased));
        let fails = match scope {
            CurveScope::Frame => !residual.is_empty(),
            CurveScope::Bit(b) => residual.contains(b),
        };
        if fails {
            counts[w] += 1;
        }
    }
    let mut total = ErasurePolynomial::zero();
    let eps = ErasurePolynomial::eps_pow(1);
    let comp = eps.one_minus();
    // eps^w (1-eps)^(nf-w), assembled once per weight
    let mut eps_pows = vec![ErasurePolynomial::one()];
    let mut comp_pows = vec![ErasurePolynomial::one()];
    for k in 1..=nf {
        eps_pows.push(eps_pows[k - 1].mul(&eps));
        comp_pows.push(comp_pows[k - 1].mul(&comp));
    }
    for (w, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let term = eps_pows[w]
            .mul(&comp_pows[nf - w])
            .scale(&BigRational::from_integer(BigInt::from(c)));
        total = total.add(&term);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::poly_from_ints;
    use crate::tanner::{builtin_code, BuiltinCode};

    fn c1() -> SparseParityCheck {
        builtin_code(&BuiltinCode::C1, 0).unwrap()
    }

    #[test]
    fn peel_examples() {
        let h = c1();
        // {v2,v3,v4} is a stopping set: untouched
        let r = peel_decode(&h, &SupportSet::new(vec![1, 2, 3]));
        assert_eq!(r, SupportSet::new(vec![1, 2, 3]));
        // {v1..v4}: c4 has induced degree 1, recovering v1
        let r = peel_decode(&h, &SupportSet::new(vec![0, 1, 2, 3]));
        assert_eq!(r, SupportSet::new(vec![1, 2, 3]));
        // empty
        let r = peel_decode(&h, &SupportSet::empty());
        assert!(r.is_empty());
    }

    #[test]
    fn residual_is_maximal_stopping_set() {
        let h = builtin_code(&BuiltinCode::Regular { dv: 3, dc: 6, n: 12 }, 5).unwrap();
        // exhaustive over all erasure patterns: residual nonempty iff the
        // pattern contains a nonempty stopping set, and every stopping subset
        // is inside the residual
        let mut stopping: Vec<SupportSet> = Vec::new();
        for mask in 1u32..(1 << 12) {
            let set: SupportSet = (0..12).filter(|&i| mask >> i & 1 == 1).collect();
            if classify_pattern(&h, &set).unwrap().is_stopping() {
                stopping.push(set);
            }
        }
        for mask in 0u32..(1 << 12) {
            let erased: SupportSet = (0..12).filter(|&i| mask >> i & 1 == 1).collect();
            let residual = peel_decode(&h, &erased);
            let contains_ss = stopping.iter().any(|s| s.is_subset_of(&erased));
            assert_eq!(!residual.is_empty(), contains_ss);
            if !residual.is_empty() {
                assert!(classify_pattern(&h, &residual).unwrap().is_stopping());
            }
            for s in stopping.iter().filter(|s| s.is_subset_of(&erased)) {
                assert!(s.is_subset_of(&residual));
            }
        }
    }

    #[test]
    fn mc_zero_eps_no_errors() {
        let h = c1();
        let est = mc_run(&h, 0.0, StopRule::FixedTrials(1000), 1).unwrap();
        assert_eq!(est.frame_errors, 0);
        assert_eq!(est.fer, 0.0);
    }

    #[test]
    fn mc_deterministic() {
        let h = c1();
        let a = mc_run(&h, 0.3, StopRule::FixedTrials(20_000), 7).unwrap();
        let b = mc_run(&h, 0.3, StopRule::FixedTrials(20_000), 7).unwrap();
        assert_eq!(a.frame_errors, b.frame_errors);
        assert_eq!(a.bit_errors, b.bit_errors);
        assert_eq!(a.harvested, b.harvested);
    }

    #[test]
    fn mc_bit2_matches_exact_within_three_sigma() {
        let h = c1();
        let est = mc_run(&h, 0.1, StopRule::FixedTrials(1_000_000), 11).unwrap();
        let p2 = est.bit_errors[1] as f64 / est.trials as f64;
        let sigma = (2.152e-3 * (1.0 - 2.152e-3) / est.trials as f64).sqrt();
        assert!((p2 - 2.152e-3).abs() <= 3.0 * sigma, "p2 = {p2}");
        for s in &est.harvested {
            assert!(classify_pattern(&h, s).unwrap().is_stopping());
        }
    }

    #[test]
    fn mc_error_event_rule_stops() {
        let h = c1();
        let est = mc_run(&h, 0.2, StopRule::ErrorEvents(100), 3).unwrap();
        assert!(est.frame_errors >= 100);
    }

    #[test]
    fn brute_force_golay() {
        let h = builtin_code(&BuiltinCode::Golay23, 0).unwrap();
        let (w, sets) = brute_force_patterns(&h, 4, PatternQuery::Stopping, None).unwrap();
        assert_eq!(w, 4);
        assert_eq!(sets.len(), 130);
    }

    #[test]
    fn brute_force_trivial_cases() {
        let h = c1();
        let (w, sets) = brute_force_patterns(&h, 0, PatternQuery::Stopping, None).unwrap();
        assert_eq!((w, sets.len()), (0, 0));
        let (w, sets) = brute_force_patterns(&h, 5, PatternQuery::Stopping, Some(1)).unwrap();
        assert_eq!(w, 3);
        let expected = vec![SupportSet::new(vec![0, 1, 5]), SupportSet::new(vec![1, 2, 3])];
        let mut got = sets.clone();
        got.sort();
        assert_eq!(got, expected);
        // every size-2 subset of C1 induces two or four degree-one checks,
        // so the minimal 1-out trapping sets have size 4
        let (w, sets) = brute_force_patterns(&h, 4, PatternQuery::KOut(1), None).unwrap();
        assert_eq!(w, 4);
        assert!(sets.contains(&SupportSet::new(vec![0, 1, 2, 3])));
    }

    #[test]
    fn exact_curve_c1_bit2() {
        let h = c1();
        let p = exact_curve(&h, CurveScope::Bit(1)).unwrap();
        assert_eq!(p, poly_from_ints(&[0, 0, 0, 2, 2, -5, 2]));
    }

    #[test]
    fn exact_curve_degenerate_codes() {
        // one variable, one check of degree 1: the parity equation x = 0 has
        // no other participants, so the erased bit is always recovered
        let h = SparseParityCheck::from_rows(1, vec![vec![0]]).unwrap();
        let p = exact_curve(&h, CurveScope::Bit(0)).unwrap();
        assert_eq!(p, ErasurePolynomial::zero());
        // one variable, zero checks: the bit is never recoverable
        let h = SparseParityCheck::from_rows(1, vec![]).unwrap();
        let p = exact_curve(&h, CurveScope::Bit(0)).unwrap();
        assert_eq!(p, poly_from_ints(&[0, 1]));
    }
}
