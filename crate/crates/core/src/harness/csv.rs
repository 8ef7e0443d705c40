//! Trace files: `iteration,p1,p2,p_norm` rows with 17 significant digits,
//! closed by a `# outcome=<label> at=<n>` trailer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::run::{Outcome, RunTrace, TraceRow};

pub const HEADER: &str = "iteration,p1,p2,p_norm";

pub fn format_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.rows.len() + 2));
    out.push_str(HEADER);
    out.push('\n');
    for r in &trace.rows {
        let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.iteration, r.p1, r.p2, r.p_norm);
    }
    let _ = writeln!(
        out,
        "# outcome={} at={}",
        trace.outcome.label(),
        trace.outcome.iteration()
    );
    out
}

pub fn emit_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    if trace.rows.is_empty() {
        return Err(Error::Config("refusing to write an empty trace".into()));
    }
    fs::write(path, format_csv(trace)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_csv(text: &str, origin: &Path) -> Result<RunTrace> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(err(1, format!("expected header `{HEADER}`"))),
    }
    let mut rows = Vec::new();
    let mut outcome = None;
    for (i, line) in lines {
        let lineno = i + 1;
        if outcome.is_some() {
            return Err(err(lineno, "content after the outcome trailer".into()));
        }
        if let Some(rest) = line.strip_prefix("# ") {
            outcome = Some(parse_trailer(rest).map_err(|m| err(lineno, m))?);
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(err(lineno, format!("expected 4 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(lineno, format!("bad number `{s}`")));
        rows.push(TraceRow {
            iteration: fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("bad iteration `{}`", fields[0])))?,
            p1: num(fields[1])?,
            p2: num(fields[2])?,
            p_norm: num(fields[3])?,
        });
    }
    let outcome = outcome.ok_or_else(|| err(text.lines().count(), "missing outcome trailer".into()))?;
    Ok(RunTrace { rows, outcome })
}

fn parse_trailer(s: &str) -> std::result::Result<Outcome, String> {
    let mut label = None;
    let mut at = None;
    for part in s.split_whitespace() {
        match part.split_once('=') {
            Some(("outcome", v)) => label = Some(v),
            Some(("at", v)) => at = Some(v.parse::<u64>().map_err(|_| format!("bad iteration `{v}`"))?),
            _ => return Err(format!("unexpected trailer field `{part}`")),
        }
    }
    let at = at.ok_or("trailer lacks at=")?;
    match label {
        Some("Diverged") => Ok(Outcome::Diverged { at }),
        Some("Converged") => Ok(Outcome::Converged { at }),
        Some("Completed") => Ok(Outcome::Completed { at }),
        other => Err(format!("unknown outcome {other:?}")),
    }
}

pub fn read_csv(path: &Path) -> Result<RunTrace> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn sample() -> RunTrace {
        RunTrace {
            rows: vec![
                TraceRow::new(0, [5.23e-5, 8.53e-5]),
                TraceRow::new(1000, [-1.0 / 3.0, 2.0e-300]),
                TraceRow::new(1500, [123456.789, -0.0]),
            ],
            outcome: Outcome::Diverged { at: 1500 },
        }
    }

    #[test]
    fn layout() {
        let text = format_csv(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[4], "# outcome=Diverged at=1500");
        assert!(lines[1].starts_with("0,5.2299999999999997e-5,"));
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_csv(&sample(), &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), sample());
    }

    #[test]
    fn empty_trace_rejected() {
        let t = RunTrace {
            rows: vec![],
            outcome: Outcome::Completed { at: 1 },
        };
        assert!(emit_csv(&t, Path::new("/nonexistent/x.csv")).is_err());
    }

    #[test]
    fn io_error_names_path() {
        let e = emit_csv(&sample(), Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn malformed_input() {
        let o = PathBuf::from("m.csv");
        assert!(parse_csv("a,b,c\n", &o).is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,2,3,4\n"), &o).is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,2,3\n# outcome=Completed at=1\n"), &o).is_err());
        assert!(parse_csv(&format!("{HEADER}\n# outcome=Exploded at=1\n"), &o).is_err());
        assert!(parse_csv(&format!("{HEADER}\n# outcome=Completed at=1\n1,2,3,4\n"), &o).is_err());
    }

    proptest! {
        #[test]
        fn parse_inverts_format(
            pts in prop::collection::vec((any::<f64>(), any::<f64>()), 1..20),
            at in 0u64..1_000_000,
        ) {
            let rows: Vec<TraceRow> = pts
                .iter()
                .enumerate()
                .filter(|(_, (a, b))| a.is_finite() && b.is_finite())
                .map(|(i, &(a, b))| TraceRow { iteration: i as u64, p1: a, p2: b, p_norm: a.hypot(b) })
                .collect();
            let trace = RunTrace { rows, outcome: Outcome::Completed { at } };
            let back = parse_csv(&format_csv(&trace), Path::new("p.csv")).unwrap();
            prop_assert_eq!(back, trace);
        }
    }
}
