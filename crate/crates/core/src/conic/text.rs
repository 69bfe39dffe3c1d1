//! Line-oriented debug format for [`ConicProgram`].
//!
//! ```text
//! conic-program 1
//! n <n>
//! c <c_0> … <c_{n-1}>
//! blocks <count>
//! block <ZERO|NONNEG|SOC> <dim> <nnz>
//! <row> <col> <value>          (nnz lines)
//! b <b_0> … <b_{dim-1}>
//! ```
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64` exactly. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Cone, ConicProgram, ConstraintBlock, Triplets};

const MAGIC: &str = "conic-program";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_text(p: &ConicProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "n {}", p.n);
    s.push('c');
    for v in &p.c {
        s.push(' ');
        s.push_str(&num(*v));
    }
    s.push('\n');
    let _ = writeln!(s, "blocks {}", p.blocks.len());
    for blk in &p.blocks {
        let _ = writeln!(s, "block {} {} {}", blk.cone.tag(), blk.dim, blk.a.len());
        for ((r, c), v) in blk.a.rows.iter().zip(&blk.a.cols).zip(&blk.a.vals) {
            let _ = writeln!(s, "{r} {c} {}", num(*v));
        }
        s.push('b');
        for v in &blk.b {
            s.push(' ');
            s.push_str(&num(*v));
        }
        s.push('\n');
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>, TextError> {
        for (i, raw) in self.inner.by_ref() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            return Ok(t.split_whitespace().collect());
        }
        Err(self.err("unexpected end of input"))
    }

    fn err(&self, message: impl Into<String>) -> TextError {
        TextError {
            line: self.line,
            message: message.into(),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<Vec<&'a str>, TextError> {
        let toks = self.next()?;
        if toks.first() != Some(&key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(toks[1..].to_vec())
    }

    fn parse<T: std::str::FromStr>(&self, tok: &str) -> Result<T, TextError> {
        tok.parse()
            .map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }

    fn floats(&self, toks: &[&str], expected: usize) -> Result<Vec<f64>, TextError> {
        if toks.len() != expected {
            return Err(self.err(format!("expected {expected} values, got {}", toks.len())));
        }
        toks.iter().map(|t| self.parse(t)).collect()
    }
}

pub fn from_text(text: &str) -> Result<ConicProgram, TextError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let head = lines.keyword(MAGIC)?;
    if head.len() != 1 || lines.parse::<u32>(head[0])? != VERSION {
        return Err(lines.err("unsupported format version"));
    }
    let n_tok = lines.keyword("n")?;
    if n_tok.len() != 1 {
        return Err(lines.err("expected a single variable count"));
    }
    let n: usize = lines.parse(n_tok[0])?;
    let c_tok = lines.keyword("c")?;
    let c = lines.floats(&c_tok, n)?;
    let b_tok = lines.keyword("blocks")?;
    if b_tok.len() != 1 {
        return Err(lines.err("expected a single block count"));
    }
    let count: usize = lines.parse(b_tok[0])?;
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let h = lines.keyword("block")?;
        if h.len() != 3 {
            return Err(lines.err("block header needs cone, dim and nnz"));
        }
        let cone = Cone::from_tag(h[0]).ok_or_else(|| lines.err(format!("unknown cone `{}`", h[0])))?;
        let dim: usize = lines.parse(h[1])?;
        let nnz: usize = lines.parse(h[2])?;
        let mut a = Triplets::default();
        for _ in 0..nnz {
            let t = lines.next()?;
            if t.len() != 3 {
                return Err(lines.err("triplet needs row, col and value"));
            }
            a.push(lines.parse(t[0])?, lines.parse(t[1])?, lines.parse(t[2])?);
        }
        let b_vals = lines.keyword("b")?;
        let b = lines.floats(&b_vals, dim)?;
        blocks.push(ConstraintBlock { cone, dim, a, b });
    }
    Ok(ConicProgram { n, c, blocks })
}
