//! Text format:
//!
//! ```text
//! ckm-sol v1
//! cost <real> opened <int> k <int>
//! open <facility> <copies>      one line per opened facility
//! assign <client> <facility>    one line per client
//! ```

use std::fmt::Write as _;

use super::IntegralSolution;
use crate::error::{Error, FormatError, Result};
use crate::instance::{format_real, Instance};

pub fn write_solution(sol: &IntegralSolution, k: usize) -> String {
    let mut out = String::from("ckm-sol v1\n");
    let _ = writeln!(out, "cost {} opened {} k {k}", format_real(sol.cost), sol.opened_total);
    for (i, &c) in sol.open.iter().enumerate().filter(|(_, &c)| c > 0) {
        let _ = writeln!(out, "open {i} {c}");
    }
    for (j, &i) in sol.assignment.iter().enumerate() {
        let _ = writeln!(out, "assign {j} {i}");
    }
    out
}

fn token<T: std::str::FromStr>(line: usize, tok: Option<&str>) -> Result<T> {
    let tok = tok.unwrap_or("");
    tok.parse().map_err(|_| FormatError::Token { line, token: tok.into() }.into())
}

/// Parses a solution for `inst`. The cost is recomputed from the assignment
/// and must match the header up to its printed precision. Capacities are
/// left to [`IntegralSolution::validate`].
pub fn read_solution(text: &str, inst: &Instance) -> Result<IntegralSolution> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "ckm-sol v1")) => {}
        Some((line, found)) => return Err(FormatError::Header { line, found: found.into() }.into()),
        None => return Err(FormatError::Header { line: 1, found: String::new() }.into()),
    }
    let (line, header) = lines
        .next()
        .ok_or(FormatError::Dimension { line: 2, detail: "missing cost line".into() })?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != "cost" || h[2] != "opened" || h[4] != "k" {
        return Err(FormatError::Header { line, found: header.into() }.into());
    }
    let cost: f64 = token(line, Some(h[1]))?;
    let opened: u32 = token(line, Some(h[3]))?;
    let k: usize = token(line, Some(h[5]))?;
    if k != inst.k() {
        return Err(FormatError::Dimension { line, detail: format!("k {k} differs from instance k {}", inst.k()) }.into());
    }

    let mut open = vec![0u32; inst.n_facilities()];
    let mut assignment = vec![None; inst.n_clients()];
    for (line, l) in lines {
        let mut it = l.split_whitespace();
        let kind = it.next().unwrap_or("");
        let a: usize = token(line, it.next())?;
        let b: usize = token(line, it.next())?;
        if let Some(extra) = it.next() {
            return Err(FormatError::Token { line, token: extra.into() }.into());
        }
        match kind {
            "open" if a < open.len() && open[a] == 0 && b > 0 => open[a] = b as u32,
            "assign" if a < assignment.len() && assignment[a].is_none() => assignment[a] = Some(b),
            "open" | "assign" => {
                return Err(FormatError::Dimension { line, detail: format!("bad or repeated {kind} {a}") }.into())
            }
            _ => return Err(FormatError::Token { line, token: kind.into() }.into()),
        }
    }
    let assignment: Vec<usize> = assignment
        .iter()
        .enumerate()
        .map(|(j, a)| a.ok_or_else(|| Error::InvalidInstance(format!("client {j} is not assigned"))))
        .collect::<Result<_>>()?;
    let sol = IntegralSolution::new(inst, open, assignment);
    if sol.opened_total != opened {
        return Err(Error::InvalidInstance(format!(
            "header says {opened} copies, open lines give {}",
            sol.opened_total
        )));
    }
    if format_real(sol.cost) != format_real(cost) {
        return Err(Error::InvalidInstance(format!("header cost {cost} differs from {}", sol.cost)));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_gap_instance;

    #[test]
    fn round_trip() {
        let inst = gen_gap_instance(2, 100.0).unwrap();
        let sol = IntegralSolution::new(&inst, vec![1, 1, 1, 0], vec![0, 0, 1, 2, 2, 1]);
        let text = write_solution(&sol, inst.k());
        assert!(text.starts_with("ckm-sol v1\ncost 100 opened 3 k 3\nopen 0 1\n"));
        assert_eq!(read_solution(&text, &inst).unwrap(), sol);
    }

    #[test]
    fn rejects_wrong_cost_and_missing_clients() {
        let inst = gen_gap_instance(2, 100.0).unwrap();
        let sol = IntegralSolution::new(&inst, vec![1, 1, 1, 0], vec![0, 0, 1, 2, 2, 1]);
        let text = write_solution(&sol, inst.k());
        assert!(read_solution(&text.replace("cost 100", "cost 99"), &inst).is_err());
        let truncated: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(read_solution(&truncated, &inst).is_err());
        assert!(read_solution("ckm-sol v2\n", &inst).unwrap_err().is_input_error());
    }
}
