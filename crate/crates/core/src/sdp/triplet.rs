//! Plain-text sparse dump of an [`SdpProblem`] for cross-checking with
//! external solvers.
//!
//! ```text
//! # sdp-triplets v1
//! # n 3 k 2 maximize
//! # blocks 2 1
//! # b 2 0.5
//! 0 1 2 1
//! 1 1 1 1
//! ```
//!
//! Every non-comment line is `matrix row col value`: matrix `0` is the
//! objective, `i >= 1` is constraint `i`. Indices are 1-based and only the
//! upper triangle (`row <= col`) is written.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::SdpProblem;
use crate::error::{Error, Result};

const MAGIC: &str = "# sdp-triplets v1";

pub fn write_triplets<W: Write>(problem: &SdpProblem, mut out: W) -> Result<()> {
    let n = problem.dim();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "# n {} k {} maximize", n, problem.num_constraints())?;
    let blocks: Vec<String> = problem.blocks.iter().map(|b| b.to_string()).collect();
    writeln!(out, "# blocks {}", blocks.join(" "))?;
    let b: Vec<String> = problem.b.iter().map(|v| v.to_string()).collect();
    writeln!(out, "# b {}", b.join(" "))?;
    let all = std::iter::once(&problem.c).chain(problem.constraints.iter());
    for (idx, m) in all.enumerate() {
        for i in 0..n {
            for j in i..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{} {} {} {}", idx, i + 1, j + 1, v)?;
                }
            }
        }
    }
    Ok(())
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Dataset(format!("triplet line {line}: {msg}"))
}

pub fn read_triplets<R: BufRead>(input: R) -> Result<SdpProblem> {
    let mut n = None;
    let mut k = None;
    let mut blocks = None;
    let mut b = None;
    let mut mats: Vec<DMatrix<f64>> = Vec::new();

    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let mut words = rest.split_whitespace();
            match words.next() {
                Some("n") => {
                    let nv: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| parse_err(lineno, "bad n"))?;
                    let _ = words.next();
                    let kv: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| parse_err(lineno, "bad k"))?;
                    n = Some(nv);
                    k = Some(kv);
                    mats = vec![DMatrix::zeros(nv, nv); kv + 1];
                }
                Some("blocks") => {
                    let v: std::result::Result<Vec<usize>, _> = words.map(str::parse).collect();
                    blocks = Some(v.map_err(|_| parse_err(lineno, "bad block size"))?);
                }
                Some("b") => {
                    let v: std::result::Result<Vec<f64>, _> = words.map(str::parse).collect();
                    b = Some(v.map_err(|_| parse_err(lineno, "bad right-hand side"))?);
                }
                _ => {}
            }
            continue;
        }
        let nv = n.ok_or_else(|| parse_err(lineno, "entry before size header"))?;
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(lineno, "expected 4 fields"));
        }
        let idx: usize = fields[0].parse().map_err(|_| parse_err(lineno, "bad matrix index"))?;
        let i: usize = fields[1].parse().map_err(|_| parse_err(lineno, "bad row"))?;
        let j: usize = fields[2].parse().map_err(|_| parse_err(lineno, "bad column"))?;
        let v: f64 = fields[3].parse().map_err(|_| parse_err(lineno, "bad value"))?;
        if idx >= mats.len() || i == 0 || j == 0 || i > nv || j > nv {
            return Err(parse_err(lineno, "index out of range"));
        }
        mats[idx][(i - 1, j - 1)] = v;
        mats[idx][(j - 1, i - 1)] = v;
    }

    let nv = n.ok_or_else(|| Error::Dataset("missing size header".into()))?;
    let kv = k.unwrap_or(0);
    let b = b.ok_or_else(|| Error::Dataset("missing right-hand side".into()))?;
    if b.len() != kv {
        return Err(Error::Dataset(format!("header says k = {kv} but b has {} entries", b.len())));
    }
    let mut iter = mats.into_iter();
    let c = iter.next().unwrap_or_else(|| DMatrix::zeros(nv, nv));
    SdpProblem::with_blocks(c, iter.collect(), b, blocks.unwrap_or_else(|| vec![nv]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = DMatrix::zeros(3, 3);
        c[(0, 1)] = 1.0;
        c[(1, 0)] = 1.0;
        c[(2, 2)] = -0.1;
        let mut a1 = DMatrix::zeros(3, 3);
        a1[(0, 0)] = 1.0;
        a1[(1, 1)] = 1.0;
        let mut a2 = DMatrix::zeros(3, 3);
        a2[(2, 2)] = 1.0 / 3.0;
        let p = SdpProblem::with_blocks(c, vec![a1, a2], vec![2.0, 0.5], vec![2, 1]).unwrap();
        let mut buf = Vec::new();
        write_triplets(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(MAGIC));
        assert!(text.contains("\n0 1 2 1\n"));
        let back = read_triplets(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn malformed_line_reports_position() {
        let text = "# n 1 k 1 maximize\n# b 1\n0 1 1\n";
        let err = read_triplets(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
