//! Reader and writer for the conventional alist sparse-matrix text format.
//!
//! Layout: line 1 `n m`; line 2 `max_col_degree max_row_degree`; line 3 the
//! n column degrees; line 4 the m row degrees; then n column neighbor lists
//! and m row neighbor lists, 1-based and zero-padded to the maximum degree.
//! Padding zeros are ignored on read and emitted on write.

use super::{SparseParityCheck, TannerError};

struct Lines<'a> {
    tokens: Vec<Vec<&'a str>>,
}

fn tokenize(text: &str) -> Lines<'_> {
    Lines {
        tokens: text
            .lines()
            .map(|l| l.split_whitespace().collect())
            .collect(),
    }
}

impl<'a> Lines<'a> {
    fn ints(&self, line: usize, expected: usize) -> Result<Vec<usize>, TannerError> {
        let toks = self.tokens.get(line).ok_or(TannerError::DegreeMismatch {
            line: line + 1,
            msg: "unexpected end of file".into(),
        })?;
        if toks.len() != expected {
            return Err(TannerError::DegreeMismatch {
                line: line + 1,
                msg: format!("expected {expected} integers, found {}", toks.len()),
            });
        }
        toks.iter()
            .map(|t| {
                t.parse::<usize>().map_err(|_| TannerError::DegreeMismatch {
                    line: line + 1,
                    msg: format!("not an integer: {t:?}"),
                })
            })
            .collect()
    }
}

/// Parses an alist document into a Tanner graph. Every failure is reported
/// with its 1-based line number.
pub fn parse_alist(text: &str) -> Result<SparseParityCheck, TannerError> {
    let lines = tokenize(text);
    let header = lines.ints(0, 2).map_err(|e| match e {
        TannerError::DegreeMismatch { line, msg } => TannerError::MalformedHeader { line, msg },
        other => other,
    })?;
    let (n, m) = (header[0], header[1]);
    if n == 0 || m == 0 {
        return Err(TannerError::MalformedHeader {
            line: 1,
            msg: format!("n and m must be positive, got {n} {m}"),
        });
    }
    let maxdeg = lines.ints(1, 2).map_err(|e| match e {
        TannerError::DegreeMismatch { line, msg } => TannerError::MalformedHeader { line, msg },
        other => other,
    })?;
    let (max_col, max_row) = (maxdeg[0], maxdeg[1]);
    let col_degs = lines.ints(2, n)?;
    let row_degs = lines.ints(3, m)?;
    if let Some(d) = col_degs.iter().find(|&&d| d > max_col) {
        return Err(TannerError::DegreeMismatch {
            line: 3,
            msg: format!("column degree {d} exceeds declared maximum {max_col}"),
        });
    }
    if let Some(d) = row_degs.iter().find(|&&d| d > max_row) {
        return Err(TannerError::DegreeMismatch {
            line: 4,
            msg: format!("row degree {d} exceeds declared maximum {max_row}"),
        });
    }

    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, adj) in col_adj.iter_mut().enumerate() {
        let line = 4 + i;
        let entries = lines.ints(line, max_col)?;
        for &e in &entries {
            if e == 0 {
                continue; // padding
            }
            if e > m {
                return Err(TannerError::IndexOutOfRange {
                    line: line + 1,
                    index: e,
                    max: m,
                });
            }
            let j = e - 1;
            if adj.contains(&j) {
                return Err(TannerError::DuplicateEdge {
                    line: line + 1,
                    check: j,
                    var: i,
                });
            }
            adj.push(j);
        }
        if adj.len() != col_degs[i] {
            return Err(TannerError::DegreeMismatch {
                line: line + 1,
                msg: format!(
                    "column {} lists {} neighbors but declares degree {}",
                    i + 1,
                    adj.len(),
                    col_degs[i]
                ),
            });
        }
        adj.sort_unstable();
    }

    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (j, adj) in row_adj.iter_mut().enumerate() {
        let line = 4 + n + j;
        let entries = lines.ints(line, max_row)?;
        for &e in &entries {
            if e == 0 {
                continue;
            }
            if e > n {
                return Err(TannerError::IndexOutOfRange {
                    line: line + 1,
                    index: e,
                    max: n,
                });
            }
            let i = e - 1;
            if adj.contains(&i) {
                return Err(TannerError::DuplicateEdge {
                    line: line + 1,
                    check: j,
                    var: i,
                });
            }
            adj.push(i);
        }
        if adj.len() != row_degs[j] {
            return Err(TannerError::DegreeMismatch {
                line: line + 1,
                msg: format!(
                    "row {} lists {} neighbors but declares degree {}",
                    j + 1,
                    adj.len(),
                    row_degs[j]
                ),
            });
        }
        adj.sort_unstable();
    }

    let code = SparseParityCheck::from_rows(n, row_adj)?;
    // Transpose consistency between the two stored views.
    for (i, col) in col_adj.iter().enumerate() {
        if code.var_neighbors(i) != col.as_slice() {
            return Err(TannerError::DegreeMismatch {
                line: 4 + i + 1,
                msg: format!("column {} disagrees with the row lists", i + 1),
            });
        }
    }
    Ok(code)
}

/// Serializes a graph in the alist format, padding neighbor lists with zeros.
/// Annotations are not representable in alist and are dropped.
pub fn write_alist(code: &SparseParityCheck) -> String {
    let n = code.n();
    let m = code.m();
    let max_col = (0..n).map(|i| code.var_degree(i)).max().unwrap_or(0);
    let max_row = (0..m).map(|j| code.check_degree(j)).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{n} {m}\n{max_col} {max_row}\n"));
    let degs: Vec<String> = (0..n).map(|i| code.var_degree(i).to_string()).collect();
    out.push_str(&degs.join(" "));
    out.push('\n');
    let degs: Vec<String> = (0..m).map(|j| code.check_degree(j).to_string()).collect();
    out.push_str(&degs.join(" "));
    out.push('\n');
    let pad_line = |entries: &[usize], max: usize, out: &mut String| {
        let mut toks: Vec<String> = entries.iter().map(|&e| (e + 1).to_string()).collect();
        while toks.len() < max {
            toks.push("0".into());
        }
        out.push_str(&toks.join(" "));
        out.push('\n');
    };
    for i in 0..n {
        pad_line(code.var_neighbors(i), max_col, &mut out);
    }
    for j in 0..m {
        pad_line(code.check_neighbors(j), max_row, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::builtin::{builtin_code, BuiltinCode};

    #[test]
    fn parse_c1_alist() {
        let h = builtin_code(&BuiltinCode::C1, 0).unwrap();
        let text = write_alist(&h);
        let back = parse_alist(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.var_neighbors(1), &[0, 1]);
    }

    #[test]
    fn parse_one_by_one() {
        let text = "1 1\n1 1\n1\n1\n1\n1\n";
        let h = parse_alist(text).unwrap();
        assert_eq!(h.n(), 1);
        assert_eq!(h.m(), 1);
        assert_eq!(h.edge_count(), 1);
    }

    #[test]
    fn duplicate_column_entry_reports_line() {
        // variable 1 lists check 1 twice
        let text = "2 2\n2 2\n2 1\n2 1\n1 1\n2 0\n1 2\n1 0\n";
        match parse_alist(text) {
            Err(TannerError::DuplicateEdge { line, check, var }) => {
                assert_eq!(line, 5);
                assert_eq!(check, 0);
                assert_eq!(var, 0);
            }
            other => panic!("expected duplicate edge error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_reports_line() {
        assert!(matches!(
            parse_alist("banana\n"),
            Err(TannerError::MalformedHeader { line: 1, .. })
        ));
    }

    #[test]
    fn degree_mismatch_reports_line() {
        // column 1 declares degree 2 but lists one neighbor
        let text = "2 2\n2 2\n2 1\n2 1\n1 0\n2 0\n1 2\n1 0\n";
        assert!(matches!(
            parse_alist(text),
            Err(TannerError::DegreeMismatch { line: 5, .. })
        ));
    }

    #[test]
    fn out_of_range_index_reports_line() {
        let text = "2 2\n1 2\n1 1\n1 1\n3\n1\n1 0\n2 0\n";
        assert!(matches!(
            parse_alist(text),
            Err(TannerError::IndexOutOfRange { line: 5, index: 3, .. })
        ));
    }

    #[test]
    fn golay_round_trip() {
        let h = builtin_code(&BuiltinCode::Golay23, 0).unwrap();
        let back = parse_alist(&write_alist(&h)).unwrap();
        assert_eq!(back, h);
    }
}
