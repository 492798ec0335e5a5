use rand::Rng;

use crate::error::{Error, Result};
use crate::tol;

const SNAP: f64 = 1e-12;

fn is_fractional(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn check_and_normalize(w: &mut [Vec<f64>], row_caps: &[u32], col_caps: &[u32]) -> Result<()> {
    let rows = w.len();
    let cols = col_caps.len();
    if row_caps.len() != rows || w.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter("rounding matrix shape mismatch".into()));
    }
    for v in w.iter_mut().flatten() {
        if !(-tol::FEAS..=1.0 + tol::FEAS).contains(v) {
            return Err(Error::InvalidParameter(format!("entry {v} outside [0, 1]")));
        }
        *v = v.clamp(0.0, 1.0);
    }
    // scale rows and columns that exceed their cap by rounding noise only
    for (i, &cap) in row_caps.iter().enumerate() {
        let sum: f64 = w[i].iter().sum();
        if sum > cap as f64 + tol::FEAS {
            return Err(Error::InvalidParameter(format!(
                "row {i} degree {sum} exceeds cap {cap}"
            )));
        }
        if sum > cap as f64 {
            let f = cap as f64 / sum * (1.0 - SNAP);
            w[i].iter_mut().for_each(|v| *v *= f);
        }
    }
    for (j, &cap) in col_caps.iter().enumerate() {
        let sum: f64 = w.iter().map(|r| r[j]).sum();
        if sum > cap as f64 + tol::FEAS {
            return Err(Error::InvalidParameter(format!(
                "column {j} degree {sum} exceeds cap {cap}"
            )));
        }
        if sum > cap as f64 {
            let f = cap as f64 / sum * (1.0 - SNAP);
            w.iter_mut().for_each(|r| r[j] *= f);
        }
    }
    Ok(())
}

/// Bipartite vertices: rows `0..R`, columns `R..R+C`.
fn edge(rows: usize, a: usize, b: usize) -> (usize, usize) {
    if a < rows {
        (a, b - rows)
    } else {
        (b, a - rows)
    }
}

/// Walks fractional edges from `start` without immediately reversing.
/// Returns the vertex sequence, closed (first == last) when it found a cycle.
fn walk(w: &[Vec<f64>], start: usize) -> Vec<usize> {
    let rows = w.len();
    let cols = w[0].len();
    let mut seq = vec![start];
    let mut pos = vec![usize::MAX; rows + cols];
    pos[start] = 0;
    let mut came_from = usize::MAX;
    let mut cur = start;
    loop {
        let next = if cur < rows {
            (0..cols).map(|j| rows + j).find(|&v| v != came_from && is_fractional(w[cur][v - rows]))
        } else {
            (0..rows).find(|&i| i != came_from && is_fractional(w[i][cur - rows]))
        };
        let Some(next) = next else {
            return seq;
        };
        if pos[next] != usize::MAX {
            let mut cycle = seq.split_off(pos[next]);
            cycle.push(next);
            return cycle;
        }
        pos[next] = seq.len();
        seq.push(next);
        came_from = cur;
        cur = next;
    }
}

/// Rounds a fractional bipartite matrix to a 0/1 matrix whose row and column
/// degrees stay within their caps, with `Pr[out[i][j]] = w[i][j]`.
pub fn dependent_round<R: Rng + ?Sized>(
    w: &[Vec<f64>],
    row_caps: &[u32],
    col_caps: &[u32],
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    let mut w = w.to_vec();
    check_and_normalize(&mut w, row_caps, col_caps)?;
    let rows = w.len();
    if rows == 0 || col_caps.is_empty() {
        return Ok(vec![Vec::new(); rows]);
    }

    loop {
        let Some((i, _)) = (0..rows)
            .flat_map(|i| w[i].iter().map(move |&v| (i, v)))
            .find(|&(_, v)| is_fractional(v))
        else {
            break;
        };
        let first = walk(&w, i);
        let chain = if first.len() > 1 && first.first() == first.last() {
            first
        } else {
            // restart from a dead end so the path is maximal at both ends
            walk(&w, *first.last().expect("walk is nonempty"))
        };
        let edges: Vec<(usize, usize)> =
            chain.windows(2).map(|p| edge(rows, p[0], p[1])).collect();

        // alternate edges: even positions gain, odd positions lose
        let mut alpha = f64::INFINITY;
        let mut beta = f64::INFINITY;
        for (k, &(a, b)) in edges.iter().enumerate() {
            let v = w[a][b];
            if k % 2 == 0 {
                alpha = alpha.min(1.0 - v);
                beta = beta.min(v);
            } else {
                alpha = alpha.min(v);
                beta = beta.min(1.0 - v);
            }
        }
        let step = if rng.random::<f64>() * (alpha + beta) < beta { alpha } else { -beta };
        for (k, &(a, b)) in edges.iter().enumerate() {
            let v = &mut w[a][b];
            *v += if k % 2 == 0 { step } else { -step };
            if *v < SNAP {
                *v = 0.0;
            } else if *v > 1.0 - SNAP {
                *v = 1.0;
            }
        }
    }

    let out: Vec<Vec<bool>> = w.iter().map(|r| r.iter().map(|&v| v == 1.0).collect()).collect();
    for (i, &cap) in row_caps.iter().enumerate() {
        if out[i].iter().filter(|&&b| b).count() > cap as usize {
            return Err(Error::Invariant(format!("rounded row {i} exceeds cap {cap}")));
        }
    }
    for (j, &cap) in col_caps.iter().enumerate() {
        if out.iter().filter(|r| r[j]).count() > cap as usize {
            return Err(Error::Invariant(format!("rounded column {j} exceeds cap {cap}")));
        }
    }
    Ok(out)
}
