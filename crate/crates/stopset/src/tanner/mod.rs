//! Code representation and ground-truth classification.
//!
//! A parity-check code is stored as the bipartite Tanner graph of its m x n
//! binary matrix: per-check and per-variable sorted adjacency lists that
//! always describe the same edge set. Variables may carry puncture (always
//! erased) or shorten (never erased) annotations; conditioned searches rely
//! on both.

mod alist;
mod builtin;

pub use alist::{parse_alist, write_alist};
pub use builtin::{builtin_code, parse_builtin_name, BuiltinCode, ShiftDirection};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from graph construction, file parsing, and subset classification.
#[derive(Debug, Error)]
pub enum TannerError {
    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("line {line}: degree/list length mismatch: {msg}")]
    DegreeMismatch { line: usize, msg: String },
    #[error("line {line}: index {index} out of range (1..={max})")]
    IndexOutOfRange { line: usize, index: usize, max: usize },
    #[error("line {line}: duplicate edge between check {check} and variable {var}")]
    DuplicateEdge { line: usize, check: usize, var: usize },
    #[error("variable index {index} out of range for code with n = {n}")]
    VariableOutOfRange { index: usize, n: usize },
    #[error("infeasible degree profile: {0}")]
    InfeasibleProfile(String),
    #[error("resampling budget exhausted after {0} attempts")]
    ResamplingExhausted(usize),
    #[error("unknown builtin code: {0}")]
    UnknownBuiltin(String),
}

/// Canonical sorted set of variable indices: the unit of stopping-set and
/// trapping-set lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Builds a support set from arbitrary indices, sorting and deduplicating.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SupportSet { indices }
    }

    pub fn empty() -> Self {
        SupportSet { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// Union with another set.
    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        SupportSet::new(v)
    }

    /// True when every element of `self` is in `other`.
    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        SupportSet::new(iter.into_iter().collect())
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Classification of a variable subset by the degrees of its induced checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum PatternKind {
    Empty,
    /// No induced check of odd degree; always also a stopping set.
    CodewordSupport,
    /// No induced check of degree one.
    StoppingSet,
    /// Exactly k induced checks of degree one, k >= 1.
    KOutTrapping(usize),
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKind::Empty => write!(f, "empty"),
            PatternKind::CodewordSupport => write!(f, "codeword_support"),
            PatternKind::StoppingSet => write!(f, "stopping_set"),
            PatternKind::KOutTrapping(k) => write!(f, "k_out_trapping({k})"),
        }
    }
}

/// Degree statistics and kind of one classified subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternClass {
    pub degree_one_checks: usize,
    pub odd_degree_checks: usize,
    pub kind: PatternKind,
}

impl PatternClass {
    /// A codeword support or stopping set; i.e. no induced degree-one check.
    pub fn is_stopping(&self) -> bool {
        matches!(
            self.kind,
            PatternKind::CodewordSupport | PatternKind::StoppingSet
        )
    }

    /// True when the subset is a k-out trapping set for exactly this k.
    /// A stopping set is the k = 0 case.
    pub fn is_k_out(&self, k: usize) -> bool {
        self.degree_one_checks == k && self.kind != PatternKind::Empty
    }
}

/// Bipartite Tanner graph of an m x n binary parity-check matrix, with
/// puncture/shorten annotations. Immutable after construction and safely
/// shareable across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityCheck {
    n: usize,
    m: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
    punctured: BTreeSet<usize>,
    shortened: BTreeSet<usize>,
}

impl SparseParityCheck {
    /// Builds a graph from per-check adjacency lists. Lists are sorted, the
    /// column view is derived, and duplicate edges are rejected.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self, TannerError> {
        let m = rows.len();
        let mut row_adj = rows;
        let mut col_adj = vec![Vec::new(); n];
        for (j, row) in row_adj.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(TannerError::DuplicateEdge {
                        line: 0,
                        check: j,
                        var: w[0],
                    });
                }
            }
            for &i in row.iter() {
                if i >= n {
                    return Err(TannerError::VariableOutOfRange { index: i, n });
                }
                col_adj[i].push(j);
            }
        }
        Ok(SparseParityCheck {
            n,
            m,
            row_adj,
            col_adj,
            punctured: BTreeSet::new(),
            shortened: BTreeSet::new(),
        })
    }

    /// Number of variable nodes (code length).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of check nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Variables adjacent to check `j`, sorted.
    pub fn check_neighbors(&self, j: usize) -> &[usize] {
        &self.row_adj[j]
    }

    /// Checks adjacent to variable `i`, sorted.
    pub fn var_neighbors(&self, i: usize) -> &[usize] {
        &self.col_adj[i]
    }

    pub fn var_degree(&self, i: usize) -> usize {
        self.col_adj[i].len()
    }

    pub fn check_degree(&self, j: usize) -> usize {
        self.row_adj[j].len()
    }

    pub fn edge_count(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn punctured(&self) -> &BTreeSet<usize> {
        &self.punctured
    }

    pub fn shortened(&self) -> &BTreeSet<usize> {
        &self.shortened
    }

    pub fn is_punctured(&self, i: usize) -> bool {
        self.punctured.contains(&i)
    }

    pub fn is_shortened(&self, i: usize) -> bool {
        self.shortened.contains(&i)
    }

    /// Variables that are neither punctured nor shortened, in order.
    pub fn free_vars(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|i| !self.punctured.contains(i) && !self.shortened.contains(i))
            .collect()
    }

    /// Returns a copy with the given variables additionally marked punctured
    /// (deterministically erased). Punctured and shortened sets must stay
    /// disjoint.
    pub fn with_punctured(&self, vars: impl IntoIterator<Item = usize>) -> Self {
        let mut g = self.clone();
        for i in vars {
            assert!(i < g.n, "puncture index {i} out of range");
            assert!(!g.shortened.contains(&i), "variable {i} is shortened");
            g.punctured.insert(i);
        }
        g
    }

    /// Returns a copy with the given variables marked shortened in place
    /// (hardwired to zero) without removing their columns.
    pub fn with_shortened_annotation(&self, vars: impl IntoIterator<Item = usize>) -> Self {
        let mut g = self.clone();
        for i in vars {
            assert!(i < g.n, "shorten index {i} out of range");
            assert!(!g.punctured.contains(&i), "variable {i} is punctured");
            g.shortened.insert(i);
        }
        g
    }

    /// Returns a copy with the given check rows deleted.
    pub fn without_checks(&self, checks: &BTreeSet<usize>) -> Self {
        let rows: Vec<Vec<usize>> = self
            .row_adj
            .iter()
            .enumerate()
            .filter(|(j, _)| !checks.contains(j))
            .map(|(_, r)| r.clone())
            .collect();
        let mut g = SparseParityCheck::from_rows(self.n, rows).expect("row filter keeps validity");
        g.punctured = self.punctured.clone();
        g.shortened = self.shortened.clone();
        g
    }

    /// SHA-256 checksum of the canonical alist serialization, hex encoded.
    /// Reports embed this so a run can be tied to its exact code.
    pub fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(write_alist(self).as_bytes());
        let d = h.finalize();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Internal consistency check: transpose agreement, sortedness, no
    /// duplicate edges, annotation disjointness.
    pub fn validate(&self) -> Result<(), String> {
        let mut edges_r: Vec<(usize, usize)> = Vec::new();
        for (j, row) in self.row_adj.iter().enumerate() {
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("row {j} not strictly sorted"));
            }
            for &i in row {
                if i >= self.n {
                    return Err(format!("row {j} references variable {i} >= n"));
                }
                edges_r.push((j, i));
            }
        }
        let mut edges_c: Vec<(usize, usize)> = Vec::new();
        for (i, col) in self.col_adj.iter().enumerate() {
            if col.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("column {i} not strictly sorted"));
            }
            for &j in col {
                if j >= self.m {
                    return Err(format!("column {i} references check {j} >= m"));
                }
                edges_c.push((j, i));
            }
        }
        edges_r.sort_unstable();
        edges_c.sort_unstable();
        if edges_r != edges_c {
            return Err("row and column adjacency disagree".into());
        }
        if self.punctured.intersection(&self.shortened).next().is_some() {
            return Err("punctured and shortened sets intersect".into());
        }
        if let Some(&i) = self.punctured.iter().chain(self.shortened.iter()).max() {
            if i >= self.n {
                return Err(format!("annotation index {i} out of range"));
            }
        }
        Ok(())
    }
}

/// Classifies the subgraph induced by `set`: counts induced checks of degree
/// one and of odd degree, and assigns the pattern kind. The empty set
/// classifies as `Empty` (vacuously a stopping set for internal use).
pub fn classify_pattern(
    code: &SparseParityCheck,
    set: &SupportSet,
) -> Result<PatternClass, TannerError> {
    if let Some(i) = set.iter().find(|&i| i >= code.n) {
        return Err(TannerError::VariableOutOfRange { index: i, n: code.n });
    }
    let mut touched: Vec<usize> = Vec::new();
    let mut degree: Vec<usize> = Vec::new();
    let mut mark = vec![usize::MAX; code.m];
    for i in set.iter() {
        for &j in code.var_neighbors(i) {
            if mark[j] == usize::MAX {
                mark[j] = touched.len();
                touched.push(j);
                degree.push(0);
            }
            degree[mark[j]] += 1;
        }
    }
    let degree_one_checks = degree.iter().filter(|&&d| d == 1).count();
    let odd_degree_checks = degree.iter().filter(|&&d| d % 2 == 1).count();
    let kind = if set.is_empty() {
        PatternKind::Empty
    } else if odd_degree_checks == 0 {
        PatternKind::CodewordSupport
    } else if degree_one_checks == 0 {
        PatternKind::StoppingSet
    } else {
        PatternKind::KOutTrapping(degree_one_checks)
    };
    Ok(PatternClass {
        degree_one_checks,
        odd_degree_checks,
        kind,
    })
}

/// Result of structurally shortening a code: the reduced graph plus the
/// retained-index map (`retained[new] = old`). Check rows stay in place even
/// when emptied, so check indices are unchanged.
#[derive(Debug, Clone)]
pub struct ShortenedCode {
    pub code: SparseParityCheck,
    pub retained: Vec<usize>,
}

impl ShortenedCode {
    /// Maps a variable index of the reduced code back to the original code.
    pub fn to_original(&self, new_index: usize) -> usize {
        self.retained[new_index]
    }

    /// Maps an original variable index to the reduced code, if retained.
    pub fn to_reduced(&self, old_index: usize) -> Option<usize> {
        self.retained.binary_search(&old_index).ok()
    }

    /// Lifts a support set of the reduced code back to original indices.
    pub fn lift(&self, set: &SupportSet) -> SupportSet {
        set.iter().map(|i| self.retained[i]).collect()
    }
}

/// Removes the columns in `set` (shortening those bits to zero and deleting
/// them from the code). Annotations on retained variables are remapped.
pub fn shorten(
    code: &SparseParityCheck,
    set: &SupportSet,
) -> Result<ShortenedCode, TannerError> {
    if let Some(i) = set.iter().find(|&i| i >= code.n) {
        return Err(TannerError::VariableOutOfRange { index: i, n: code.n });
    }
    let retained: Vec<usize> = (0..code.n).filter(|&i| !set.contains(i)).collect();
    let mut old_to_new = vec![usize::MAX; code.n];
    for (new, &old) in retained.iter().enumerate() {
        old_to_new[old] = new;
    }
    let rows: Vec<Vec<usize>> = code
        .row_adj
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&i| old_to_new[i] != usize::MAX)
                .map(|&i| old_to_new[i])
                .collect()
        })
        .collect();
    let mut reduced = SparseParityCheck::from_rows(retained.len(), rows)
        .expect("column removal keeps validity");
    reduced.punctured = code
        .punctured
        .iter()
        .filter(|&&i| old_to_new[i] != usize::MAX)
        .map(|&i| old_to_new[i])
        .collect();
    reduced.shortened = code
        .shortened
        .iter()
        .filter(|&&i| old_to_new[i] != usize::MAX)
        .map(|&i| old_to_new[i])
        .collect();
    Ok(ShortenedCode {
        code: reduced,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::builtin::{builtin_code, BuiltinCode};

    fn c1() -> SparseParityCheck {
        builtin_code(&BuiltinCode::C1, 0).unwrap()
    }

    #[test]
    fn c1_adjacency_matches_printed_matrix() {
        let h = c1();
        assert_eq!(h.n(), 6);
        assert_eq!(h.m(), 4);
        // v2 (0-based index 1) joins c1 and c2 (0-based 0 and 1)
        assert_eq!(h.var_neighbors(1), &[0, 1]);
        assert_eq!(h.check_neighbors(0), &[0, 1, 2]);
        assert_eq!(h.check_neighbors(3), &[0, 4, 5]);
        h.validate().unwrap();
    }

    #[test]
    fn classify_c1_examples() {
        let h = c1();
        // {v2,v3,v4} 1-based -> indices {1,2,3}: a stopping set (all induced
        // degrees here even turn out even, so it is a codeword support too)
        let c = classify_pattern(&h, &SupportSet::new(vec![1, 2, 3])).unwrap();
        assert_eq!(c.kind, PatternKind::CodewordSupport);
        assert_eq!(c.degree_one_checks, 0);
        assert!(c.is_stopping());
        // {x1,x2,x6} -> {0,1,5}
        let c = classify_pattern(&h, &SupportSet::new(vec![0, 1, 5])).unwrap();
        assert_eq!(c.kind, PatternKind::CodewordSupport);
        assert_eq!(c.degree_one_checks, 0);
        assert!(c.is_stopping());
        // {v1..v4} -> {0,1,2,3}
        let c = classify_pattern(&h, &SupportSet::new(vec![0, 1, 2, 3])).unwrap();
        assert_eq!(c.kind, PatternKind::KOutTrapping(1));
        assert!(c.is_k_out(1));
        // empty set
        let c = classify_pattern(&h, &SupportSet::empty()).unwrap();
        assert_eq!(c.kind, PatternKind::Empty);
        assert_eq!(c.degree_one_checks, 0);
    }

    #[test]
    fn classify_rejects_out_of_range() {
        let h = c1();
        assert!(classify_pattern(&h, &SupportSet::new(vec![6])).is_err());
    }

    #[test]
    fn classify_order_invariant() {
        let h = c1();
        let a = classify_pattern(&h, &SupportSet::new(vec![3, 1, 2])).unwrap();
        let b = classify_pattern(&h, &SupportSet::new(vec![2, 3, 1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shorten_v1_of_c1() {
        let h = c1();
        let s = shorten(&h, &SupportSet::new(vec![0])).unwrap();
        assert_eq!(s.code.n(), 5);
        assert_eq!(s.code.m(), 4);
        // c1's adjacency {v1,v2,v3} loses v1 and remaps: {v2,v3} -> {0,1}
        assert_eq!(s.code.check_neighbors(0), &[0, 1]);
        assert_eq!(s.to_original(0), 1);
        assert_eq!(s.to_reduced(0), None);
        s.code.validate().unwrap();
    }

    #[test]
    fn shorten_empty_is_identity() {
        let h = c1();
        let s = shorten(&h, &SupportSet::empty()).unwrap();
        assert_eq!(s.code, h);
        assert_eq!(s.retained, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn shorten_everything_yields_empty_code() {
        let h = c1();
        let s = shorten(&h, &SupportSet::new((0..6).collect())).unwrap();
        assert_eq!(s.code.n(), 0);
        assert_eq!(s.code.m(), 4);
        assert!(s.code.check_neighbors(0).is_empty());
    }

    #[test]
    fn shorten_preserves_stopping_semantics() {
        // T is a stopping set of shorten(H, S) iff T induces no degree-1 check
        // in the reduced graph, recounted directly on the reduced adjacency.
        let h = builtin_code(&BuiltinCode::Regular { dv: 3, dc: 6, n: 24 }, 7).unwrap();
        let s = shorten(&h, &SupportSet::new(vec![0, 5, 11])).unwrap();
        for t in [vec![1, 2, 3], vec![0, 4, 8], vec![2, 9, 13, 17]] {
            let t = SupportSet::new(t);
            let cls = classify_pattern(&s.code, &t).unwrap();
            let mut deg = std::collections::HashMap::new();
            for i in t.iter() {
                for &j in s.code.var_neighbors(i) {
                    *deg.entry(j).or_insert(0usize) += 1;
                }
            }
            let ones = deg.values().filter(|&&d| d == 1).count();
            assert_eq!(cls.degree_one_checks, ones);
            assert_eq!(cls.is_stopping(), ones == 0);
        }
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = SparseParityCheck::from_rows(3, vec![vec![0, 1, 1]]);
        assert!(matches!(err, Err(TannerError::DuplicateEdge { .. })));
    }
}
