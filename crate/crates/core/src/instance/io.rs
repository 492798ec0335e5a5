//! Text format:
//!
//! ```text
//! ckm v1
//! nF nC k
//! u_0 ... u_{nF-1}
//! <(nF+nC) rows of the distance matrix, facilities first>
//! ```

use std::fmt::Write as _;

use super::{validate_metric, Instance};
use crate::error::{Error, FormatError, Result};

/// Formats a real with 12 significant digits in plain decimal notation,
/// trailing zeros removed.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (_, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (11 - exp).max(0) as usize;
    let mut out = format!("{rounded:.decimals$}");
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if out == "-0" {
        out = "0".into();
    }
    out
}

/// Rounds a real to the value its canonical text form parses back to.
pub(crate) fn canonical(x: f64) -> f64 {
    format_real(x).parse().expect("canonical reals parse")
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str("ckm v1\n");
    let _ = writeln!(out, "{} {} {}", inst.n_facilities(), inst.n_clients(), inst.k());
    let caps: Vec<String> = inst.capacities().iter().map(|u| u.to_string()).collect();
    out.push_str(&caps.join(" "));
    out.push('\n');
    for a in 0..inst.n_points() {
        let row: Vec<String> = (0..inst.n_points()).map(|b| format_real(inst.d(a, b))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            self.last = idx + 1;
            if !line.trim().is_empty() {
                return Some((idx + 1, line));
            }
        }
        None
    }
}

fn parse_tokens<T: std::str::FromStr>(line_no: usize, line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| {
                Error::from(FormatError::Token { line: line_no, token: tok.to_string() })
            })
        })
        .collect()
}

pub fn read_instance(text: &str) -> Result<Instance> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let missing = |line: usize, what: &str| {
        Error::from(FormatError::Dimension { line, detail: format!("missing {what}") })
    };

    let (ln, header) = lines.next().ok_or_else(|| missing(1, "header"))?;
    let mut parts = header.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some("ckm"), Some("v1"), None) => {}
        (Some("ckm"), Some(v), _) => {
            return Err(FormatError::Version { line: ln, found: v.to_string() }.into())
        }
        _ => return Err(FormatError::Header { line: ln, found: header.to_string() }.into()),
    }

    let (ln, dims) = lines.next().ok_or_else(|| missing(lines.last + 1, "dimension line"))?;
    let dims: Vec<usize> = parse_tokens(ln, dims)?;
    if dims.len() != 3 {
        return Err(FormatError::Dimension {
            line: ln,
            detail: format!("expected `nF nC k`, found {} values", dims.len()),
        }
        .into());
    }
    let (nf, nc, k) = (dims[0], dims[1], dims[2]);
    let n = nf + nc;

    let (ln, caps) = lines.next().ok_or_else(|| missing(lines.last + 1, "capacity line"))?;
    let caps: Vec<u32> = parse_tokens(ln, caps)?;
    if caps.len() != nf {
        return Err(FormatError::Dimension {
            line: ln,
            detail: format!("expected {nf} capacities, found {}", caps.len()),
        }
        .into());
    }

    let mut rows = Vec::with_capacity(n);
    let mut first_row_line = 0;
    while let Some((ln, line)) = lines.next() {
        if rows.is_empty() {
            first_row_line = ln;
        }
        if rows.len() == n {
            return Err(FormatError::Dimension {
                line: ln,
                detail: format!("more than {n} matrix rows"),
            }
            .into());
        }
        let row: Vec<f64> = parse_tokens(ln, line)?;
        if row.len() != n {
            return Err(FormatError::Dimension {
                line: ln,
                detail: format!("expected {n} entries, found {}", row.len()),
            }
            .into());
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(FormatError::Dimension {
            line: lines.last + 1,
            detail: format!("expected {n} matrix rows, found {}", rows.len()),
        }
        .into());
    }

    let inst = Instance::new(caps, nc, k, rows).map_err(|e| match e {
        Error::InvalidInstance(detail) => Error::from(FormatError::Dimension { line: 2, detail }),
        other => other,
    })?;
    let report = validate_metric(&inst);
    if !report.symmetric_ok {
        return Err(FormatError::Metric {
            line: first_row_line,
            detail: "distance matrix is not symmetric with zero diagonal".into(),
        }
        .into());
    }
    if let Some(v) = report.triangle_violations.first() {
        return Err(FormatError::Metric {
            line: first_row_line + v.a,
            detail: format!(
                "triangle inequality violated: d({}, {}) exceeds the path through {} by {}",
                v.a, v.c, v.via, v.slack
            ),
        }
        .into());
    }
    Ok(inst)
}
