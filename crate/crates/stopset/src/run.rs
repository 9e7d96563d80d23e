//! Configuration and dispatch for the command-line tool: every run is
//! described by a [`RunConfig`], and every report embeds its config plus the
//! code checksum so results can be reproduced exactly.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::ErasurePolynomial;
use crate::exhaust::{
    composite_sse, default_partition, ktse, sse_bit, sse_frame, uniformly_good_check,
    KtseOptions, PartitionEvent, SearchLimits, SearchReport, SearchScope,
};
use crate::simulate::{
    brute_force_patterns, exact_curve, mc_run, CurveScope, PatternQuery, StopRule,
};
use crate::tanner::{
    builtin_code, classify_pattern, parse_alist, parse_builtin_name, SparseParityCheck,
    SupportSet,
};

/// Exit statuses of the command-line tool.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum CodeSource {
    Alist { path: String },
    Builtin { name: String, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunScope {
    Bit(usize),
    Frame,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", tag = "command")]
pub enum Command {
    /// Stopping-set exhaustion (bit-wise or frame-wise, optionally composite).
    Sse {
        scope: RunScope,
        #[serde(skip_serializing_if = "Option::is_none")]
        partition: Option<Vec<PartitionEvent>>,
        #[serde(default)]
        use_default_partition: bool,
    },
    /// k-out trapping-set exhaustion.
    Tse {
        k: usize,
        #[serde(default)]
        strict_selections: bool,
        #[serde(default)]
        trivial_filter: bool,
    },
    /// Bound curves (upper/lower/exact where feasible) on an eps grid.
    Bound { scope: RunScope, eps: Vec<f64> },
    /// Monte-Carlo estimation on an eps grid.
    Mc {
        eps: Vec<f64>,
        stop_rule: StopRule,
        seed: u64,
    },
    /// Brute-force pattern oracle.
    Oracle {
        t: usize,
        kind: PatternQuery,
        #[serde(skip_serializing_if = "Option::is_none")]
        bit: Option<usize>,
    },
    /// Classify one variable subset.
    Verify { set: Vec<usize> },
    /// Uniformly-good check: stopping distance after check removals.
    Good { d_target: usize, c_max: usize },
}

/// A fully reproducible run description; embedded verbatim in every report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub code: CodeSource,
    #[serde(default)]
    pub limits: SearchLimits,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Outcome handed to the binary: exit status, primary document, and the
/// rendered text for stdout or the output file.
pub struct RunOutcome {
    pub exit: i32,
    pub document: serde_json::Value,
    pub rendered: String,
}

fn load_code(source: &CodeSource) -> Result<SparseParityCheck, String> {
    match source {
        CodeSource::Alist { path } => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            parse_alist(&text).map_err(|e| format!("{path}: {e}"))
        }
        CodeSource::Builtin { name, seed } => {
            let b = parse_builtin_name(name).map_err(|e| e.to_string())?;
            builtin_code(&b, *seed).map_err(|e| e.to_string())
        }
    }
}

fn render_csv_curves(rows: &[(f64, Option<f64>, Option<f64>, Option<f64>)]) -> String {
    let mut out = String::from("eps,ub,lb,exact\n");
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for (eps, ub, lb, exact) in rows {
        out.push_str(&format!(
            "{eps},{},{},{}\n",
            cell(*ub),
            cell(*lb),
            cell(*exact)
        ));
    }
    out
}

fn report_exit(rep: &SearchReport) -> i32 {
    if rep.exhaustive {
        EXIT_OK
    } else {
        EXIT_BUDGET
    }
}

fn wrap(config: &RunConfig, code: &SparseParityCheck, body: serde_json::Value) -> serde_json::Value {
    json!({
        "schema": "stopset-report-v1",
        "config": config,
        "code_checksum": code.checksum(),
        "n": code.n(),
        "m": code.m(),
        "result": body,
    })
}

/// Executes one configured run and produces the report document. All
/// machine-readable errors carry a category prefix; exit statuses are
/// `0` success, `2` input error, `3` budget exhaustion (partial report
/// still produced), `4` internal invariant violation.
pub fn run(config: &RunConfig) -> RunOutcome {
    match execute(config) {
        Ok(outcome) => outcome,
        Err(msg) => RunOutcome {
            exit: EXIT_INPUT,
            document: json!({"error": msg}),
            rendered: format!("error[input]: {msg}\n"),
        },
    }
}

fn execute(config: &RunConfig) -> Result<RunOutcome, String> {
    if let Some(w) = config.workers {
        // best effort: the global pool can be initialized only once
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    let code = load_code(&config.code)?;
    let limits = config.limits.clone();
    match &config.command {
        Command::Sse {
            scope,
            partition,
            use_default_partition,
        } => {
            let rep = match (scope, partition, use_default_partition) {
                (RunScope::Bit(i), Some(p), _) => {
                    composite_sse(&code, SearchScope::Bit(*i), p, &limits)
                        .map_err(|e| e.to_string())?
                }
                (RunScope::Frame, Some(p), _) => {
                    composite_sse(&code, SearchScope::Frame, p, &limits)
                        .map_err(|e| e.to_string())?
                }
                (RunScope::Bit(i), None, true) => {
                    let p = default_partition(&code, *i);
                    composite_sse(&code, SearchScope::Bit(*i), &p, &limits)
                        .map_err(|e| e.to_string())?
                }
                (RunScope::Bit(i), None, false) => {
                    sse_bit(&code, *i, &limits).map_err(|e| e.to_string())?
                }
                (RunScope::Frame, None, _) => {
                    sse_frame(&code, &limits).map_err(|e| e.to_string())?
                }
            };
            rep.verify_against(&code)
                .map_err(|e| format!("internal: {e}"))?;
            let exit = report_exit(&rep);
            let doc = wrap(config, &code, serde_json::to_value(&rep).unwrap());
            let rendered = serde_json::to_string_pretty(&doc).unwrap() + "\n";
            Ok(RunOutcome {
                exit,
                document: doc,
                rendered,
            })
        }
        Command::Tse {
            k,
            strict_selections,
            trivial_filter,
        } => {
            let opts = KtseOptions {
                strict_selections: *strict_selections,
                trivial_filter: *trivial_filter,
            };
            let rep = ktse(&code, *k, &limits, &opts).map_err(|e| e.to_string())?;
            rep.verify_against(&code)
                .map_err(|e| format!("internal: {e}"))?;
            let exit = report_exit(&rep);
            let doc = wrap(config, &code, serde_json::to_value(&rep).unwrap());
            let rendered = serde_json::to_string_pretty(&doc).unwrap() + "\n";
            Ok(RunOutcome {
                exit,
                document: doc,
                rendered,
            })
        }
        Command::Bound { scope, eps } => {
            let rep = match scope {
                RunScope::Bit(i) => sse_bit(&code, *i, &limits).map_err(|e| e.to_string())?,
                RunScope::Frame => sse_frame(&code, &limits).map_err(|e| e.to_string())?,
            };
            let exact: Option<ErasurePolynomial> = {
                let cs = match scope {
                    RunScope::Bit(i) => CurveScope::Bit(*i),
                    RunScope::Frame => CurveScope::Frame,
                };
                exact_curve(&code, cs).ok()
            };
            let rows: Vec<(f64, Option<f64>, Option<f64>, Option<f64>)> = eps
                .iter()
                .map(|&e| {
                    (
                        e,
                        rep.ub_curve.as_ref().map(|p| p.eval_f64(e)),
                        rep.lb_curve.as_ref().map(|p| p.eval_f64(e)),
                        exact.as_ref().map(|p| p.eval_f64(e)),
                    )
                })
                .collect();
            let doc = wrap(
                config,
                &code,
                json!({
                    "report": rep,
                    "exact_curve": exact,
                    "rows": rows.iter().map(|(e, u, l, x)| json!({
                        "eps": e, "ub": u, "lb": l, "exact": x
                    })).collect::<Vec<_>>(),
                }),
            );
            let rendered = match config.format {
                OutputFormat::Csv => render_csv_curves(&rows),
                OutputFormat::Json => serde_json::to_string_pretty(&doc).unwrap() + "\n",
            };
            Ok(RunOutcome {
                exit: report_exit(&rep),
                document: doc,
                rendered,
            })
        }
        Command::Mc { eps, stop_rule, seed } => {
            let mut ests = Vec::new();
            for &e in eps {
                let est = mc_run(&code, e, *stop_rule, *seed).map_err(|e| e.to_string())?;
                ests.push(est);
            }
            let doc = wrap(config, &code, serde_json::to_value(&ests).unwrap());
            let rendered = match config.format {
                OutputFormat::Csv => {
                    let mut out = String::from("eps,fer,ber,fer_ci95,ber_ci95,trials\n");
                    for est in &ests {
                        out.push_str(&format!(
                            "{},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                            est.eps, est.fer, est.ber, est.ci95.0, est.ci95.1, est.trials
                        ));
                    }
                    out
                }
                OutputFormat::Json => serde_json::to_string_pretty(&doc).unwrap() + "\n",
            };
            Ok(RunOutcome {
                exit: EXIT_OK,
                document: doc,
                rendered,
            })
        }
        Command::Oracle { t, kind, bit } => {
            let (w, sets) =
                brute_force_patterns(&code, *t, *kind, *bit).map_err(|e| e.to_string())?;
            let doc = wrap(
                config,
                &code,
                json!({"w_min": w, "count": sets.len(), "sets": sets}),
            );
            let rendered = serde_json::to_string_pretty(&doc).unwrap() + "\n";
            Ok(RunOutcome {
                exit: EXIT_OK,
                document: doc,
                rendered,
            })
        }
        Command::Verify { set } => {
            let s = SupportSet::new(set.clone());
            let cls = classify_pattern(&code, &s).map_err(|e| e.to_string())?;
            let doc = wrap(config, &code, serde_json::to_value(cls).unwrap());
            Ok(RunOutcome {
                exit: EXIT_OK,
                document: doc,
                rendered: format!("{}\n", cls.kind),
            })
        }
        Command::Good { d_target, c_max } => {
            let verdict = uniformly_good_check(&code, *d_target, *c_max, &limits)
                .map_err(|e| e.to_string())?;
            let exit = match verdict.holds {
                Some(_) => EXIT_OK,
                None => EXIT_BUDGET,
            };
            let doc = wrap(config, &code, serde_json::to_value(&verdict).unwrap());
            let rendered = serde_json::to_string_pretty(&doc).unwrap() + "\n";
            Ok(RunOutcome {
                exit,
                document: doc,
                rendered,
            })
        }
    }
}

/// Writes the rendered output to the configured destination (stdout when no
/// path is set). Returns an input-error exit on write failure.
pub fn emit(config: &RunConfig, outcome: &RunOutcome) -> i32 {
    match &config.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &outcome.rendered) {
                eprintln!("error[input]: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
            outcome.exit
        }
        None => {
            print!("{}", outcome.rendered);
            outcome.exit
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> RunConfig {
        RunConfig {
            command,
            code: CodeSource::Builtin {
                name: "c1".into(),
                seed: 0,
            },
            limits: SearchLimits {
                t: 5,
                ..Default::default()
            },
            workers: None,
            format: OutputFormat::Json,
            output: None,
        }
    }

    #[test]
    fn verify_prints_classification() {
        let config = cfg(Command::Verify { set: vec![1, 2, 3] });
        let out = run(&config);
        assert_eq!(out.exit, EXIT_OK);
        assert_eq!(out.rendered, "stopping_set\n");
    }

    #[test]
    fn sse_report_round_trips_through_embedded_config() {
        let config = cfg(Command::Sse {
            scope: RunScope::Bit(1),
            partition: None,
            use_default_partition: false,
        });
        let first = run(&config);
        assert_eq!(first.exit, EXIT_OK);
        let embedded: RunConfig =
            serde_json::from_value(first.document["config"].clone()).unwrap();
        let second = run(&embedded);
        let strip = |mut v: serde_json::Value| {
            v["result"]["stats"]["runtime_ms"] = json!(0);
            v
        };
        assert_eq!(strip(first.document), strip(second.document));
    }

    #[test]
    fn bad_input_is_exit_2() {
        let config = RunConfig {
            command: Command::Verify { set: vec![0] },
            code: CodeSource::Builtin {
                name: "nope".into(),
                seed: 0,
            },
            limits: Default::default(),
            workers: None,
            format: OutputFormat::Json,
            output: None,
        };
        let out = run(&config);
        assert_eq!(out.exit, EXIT_INPUT);
        assert!(out.rendered.starts_with("error[input]:"));
    }
}
