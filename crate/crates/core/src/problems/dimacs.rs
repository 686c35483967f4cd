use std::io::Read;

use super::{Clause, Literal, SatInstance};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a DIMACS CNF document whose clauses all have exactly two literals.
///
/// Comment lines (`c ...`) and a trailing `%` section are ignored. Clauses may
/// span lines; each is terminated by `0`.
pub fn parse_dimacs(text: &str) -> Result<SatInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut pending: Vec<(i64, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(parse_err(lineno, "duplicate problem line"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(parse_err(lineno, "expected header `p cnf <vars> <clauses>`"));
            }
            let n: usize = fields[2]
                .parse()
                .map_err(|_| parse_err(lineno, "variable count is not an integer"))?;
            let m: usize = fields[3]
                .parse()
                .map_err(|_| parse_err(lineno, "clause count is not an integer"))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| parse_err(lineno, "clause before `p cnf` header"))?;
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid literal `{tok}`")))?;
            if lit == 0 {
                clauses.push(finish_clause(&pending, n, lineno)?);
                pending.clear();
            } else {
                pending.push((lit, lineno));
            }
        }
    }

    let (n, m) = header.ok_or_else(|| parse_err(0, "missing `p cnf` header"))?;
    if let Some(&(_, lineno)) = pending.last() {
        return Err(parse_err(lineno, "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(parse_err(
            0,
            format!("header declares {m} clauses but {} were found", clauses.len()),
        ));
    }
    SatInstance::new(n, clauses).map_err(|e| parse_err(0, e.to_string()))
}

fn finish_clause(lits: &[(i64, usize)], n: usize, lineno: usize) -> Result<Clause> {
    if lits.len() != 2 {
        return Err(parse_err(
            lineno,
            format!("clause arity {} (only 2-literal clauses are supported)", lits.len()),
        ));
    }
    let mut out = [Literal::pos(0); 2];
    for (slot, &(lit, _)) in out.iter_mut().zip(lits) {
        if lit.unsigned_abs() as usize > n {
            return Err(parse_err(
                lineno,
                format!("variable {} out of range 1..={n}", lit.unsigned_abs()),
            ));
        }
        *slot = Literal::from_dimacs(lit).expect("non-zero literal");
    }
    if out[0].var == out[1].var {
        return Err(parse_err(
            lineno,
            format!("clause repeats variable {}", out[0].var + 1),
        ));
    }
    Ok(Clause(out))
}

pub fn read_dimacs<R: Read>(mut reader: R) -> Result<SatInstance> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_dimacs(&text)
}

/// Serializes the canonical form of `inst`.
pub fn to_dimacs(inst: &SatInstance) -> String {
    let canon = inst.canonical();
    let mut out = format!("p cnf {} {}\n", canon.n_vars(), canon.n_clauses());
    for c in canon.clauses() {
        out.push_str(&format!("{} {} 0\n", c.0[0].to_dimacs(), c.0[1].to_dimacs()));
    }
    out
}
