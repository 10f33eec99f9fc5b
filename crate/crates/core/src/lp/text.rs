//! CPLEX-style LP text format, written with 17 significant digits so that a
//! parse of the output reproduces the program bit for bit.

use std::fmt::Write;

use super::{LinearProgram, LpError, Relation, VarBound};

const TERMS_PER_LINE: usize = 6;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c))
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    for (k, &(j, v)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if v < 0.0 || (v == 0.0 && v.is_sign_negative()) { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", num(v.abs()), names[j]);
        } else {
            let _ = write!(out, " {sign} {} {}", num(v.abs()), names[j]);
        }
    }
}

/// Writes the program in LP text form. Every variable appears in the
/// objective (with a zero coefficient if need be) so that column order
/// survives a round trip.
pub fn export_lp_text(lp: &LinearProgram) -> Result<String, LpError> {
    lp.validate()?;
    for name in lp.var_names.iter().chain(lp.constraints.iter().map(|r| &r.name)) {
        if !valid_name(name) || name == "obj" {
            return Err(LpError::Malformed(format!("name {name:?} cannot be written in LP format")));
        }
    }
    let mut out = String::from("\\ semicoarse linear program\nMaximize\n obj:");
    let obj: Vec<(usize, f64)> = lp.objective.iter().copied().enumerate().collect();
    write_terms(&mut out, &obj, &lp.var_names);
    out.push_str("\nSubject To\n");
    for r in &lp.constraints {
        let _ = write!(out, " {}:", r.name);
        if r.coeffs.is_empty() {
            let _ = write!(out, " {} {}", num(0.0), lp.var_names.first().map_or("x", |s| s.as_str()));
        } else {
            write_terms(&mut out, &r.coeffs, &lp.var_names);
        }
        let op = match r.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", num(r.rhs));
    }
    out.push_str("Bounds\n");
    for (name, b) in lp.var_names.iter().zip(&lp.bounds) {
        if *b == VarBound::Free {
            let _ = writeln!(out, " {name} free");
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Objective,
    Rows,
    Bounds,
    Done,
}

/// Reads the subset of the LP format produced by [`export_lp_text`].
pub fn parse_lp_text(text: &str) -> Result<LinearProgram, LpError> {
    let mut lp = LinearProgram::new();
    let mut index = std::collections::HashMap::new();
    let mut section = Section::Preamble;
    // tokens of the statement being read, with the line it started on
    let mut pending: Vec<String> = Vec::new();
    let mut start = 0;

    let err = |line: usize, msg: String| LpError::Parse { line, msg };

    let flush = |section: &Section, toks: &mut Vec<String>, line: usize, lp: &mut LinearProgram, index: &mut std::collections::HashMap<String, usize>| -> Result<(), LpError> {
        if toks.is_empty() {
            return Ok(());
        }
        let label = toks[0]
            .strip_suffix(':')
            .ok_or_else(|| err(line, format!("expected a label, found {:?}", toks[0])))?
            .to_string();
        let body = &toks[1..];
        match section {
            Section::Objective => {
                for (v, name) in parse_terms(body, line)? {
                    if index.contains_key(&name) {
                        return Err(err(line, format!("variable {name} repeated in objective")));
                    }
                    index.insert(name.clone(), lp.num_vars());
                    lp.add_var(name, VarBound::NonNegative, v);
                }
            }
            Section::Rows => {
                let op = body
                    .iter()
                    .position(|t| t == "<=" || t == ">=" || t == "=")
                    .ok_or_else(|| err(line, "constraint without relation".into()))?;
                if op + 2 != body.len() {
                    return Err(err(line, "expected a single number after the relation".into()));
                }
                let rel = match body[op].as_str() {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    _ => Relation::Eq,
                };
                let rhs: f64 = body[op + 1].parse().map_err(|_| err(line, format!("bad number {:?}", body[op + 1])))?;
                let mut coeffs = Vec::new();
                for (v, name) in parse_terms(&body[..op], line)? {
                    let j = *index.get(&name).ok_or_else(|| err(line, format!("unknown variable {name}")))?;
                    coeffs.push((j, v));
                }
                lp.add_constraint(label, coeffs, rel, rhs);
            }
            _ => return Err(err(line, "statement outside a section".into())),
        }
        toks.clear();
        Ok(())
    };

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let keyword = content.to_ascii_lowercase();
        let next = match keyword.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "subject to" | "st" | "s.t." => Some(Section::Rows),
            "bounds" => Some(Section::Bounds),
            "end" => Some(Section::Done),
            "minimize" | "minimise" | "min" => return Err(err(line, "only maximisation programs are supported".into())),
            _ => None,
        };
        if let Some(next) = next {
            flush(&section, &mut pending, start, &mut lp, &mut index)?;
            section = next;
            continue;
        }
        match section {
            Section::Objective | Section::Rows => {
                for tok in content.split_whitespace() {
                    if tok.ends_with(':') && !pending.is_empty() {
                        flush(&section, &mut pending, start, &mut lp, &mut index)?;
                    }
                    if pending.is_empty() {
                        start = line;
                    }
                    pending.push(tok.to_string());
                }
            }
            Section::Bounds => {
                let toks: Vec<&str> = content.split_whitespace().collect();
                match toks.as_slice() {
                    [name, free] if free.eq_ignore_ascii_case("free") => {
                        let j = *index.get(*name).ok_or_else(|| err(line, format!("unknown variable {name}")))?;
                        lp.bounds[j] = VarBound::Free;
                    }
                    _ => return Err(err(line, format!("unsupported bound {content:?}"))),
                }
            }
            Section::Preamble => return Err(err(line, "content before the objective section".into())),
            Section::Done => return Err(err(line, "content after End".into())),
        }
    }
    flush(&section, &mut pending, start, &mut lp, &mut index)?;
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing End".into()));
    }
    Ok(lp)
}

fn parse_terms(toks: &[String], line: usize) -> Result<Vec<(f64, String)>, LpError> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        let mut sign = 1.0;
        if toks[k] == "+" || toks[k] == "-" {
            if toks[k] == "-" {
                sign = -1.0;
            }
            k += 1;
        }
        if k >= toks.len() {
            return Err(LpError::Parse { line, msg: "incomplete term".into() });
        }
        // the coefficient may be omitted, as in `x + 2 y`
        if valid_name(&toks[k]) {
            out.push((sign, toks[k].clone()));
            k += 1;
            continue;
        }
        if k + 1 >= toks.len() {
            return Err(LpError::Parse { line, msg: "incomplete term".into() });
        }
        let v: f64 = toks[k]
            .parse()
            .map_err(|_| LpError::Parse { line, msg: format!("bad coefficient {:?}", toks[k]) })?;
        out.push((sign * v, toks[k + 1].clone()));
        k += 2;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LinearProgram {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarBound::NonNegative, 1.0 / 3.0);
        let y = lp.add_var("y", VarBound::Free, -2.5e-17);
        let z = lp.add_var("z", VarBound::NonNegative, 0.0);
        lp.add_constraint("r0", [(x, 0.1), (y, -7.0), (z, 1e300)], Relation::Le, -3.0);
        lp.add_constraint("r1", [(y, 1.0)], Relation::Eq, 0.0);
        lp.add_constraint("r2", (0..20).map(|k| (k % 3, k as f64 + 0.5)), Relation::Ge, 2.0);
        lp
    }

    #[test]
    fn round_trip_is_exact() {
        let lp = sample();
        let text = export_lp_text(&lp).unwrap();
        assert_eq!(parse_lp_text(&text).unwrap(), lp);
        assert_eq!(export_lp_text(&lp).unwrap(), text);
    }

    #[test]
    fn implicit_unit_coefficients() {
        let lp = parse_lp_text("Maximize\n obj: x - y\nSubject To\n c: - x + 2 y <= 4\nEnd\n").unwrap();
        assert_eq!(lp.objective, vec![1.0, -1.0]);
        assert_eq!(lp.constraints[0].coeffs, vec![(0, -1.0), (1, 2.0)]);
    }

    #[test]
    fn uses_seventeen_digits() {
        let text = export_lp_text(&sample()).unwrap();
        assert!(text.contains("3.3333333333333331e-1 x"));
    }

    #[test]
    fn rejects_bad_names() {
        let mut lp = sample();
        lp.var_names[0] = "has space".into();
        assert!(export_lp_text(&lp).is_err());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = "Maximize\n obj: 1 x\nSubject To\n c: 1 y <= 1\nEnd\n";
        assert!(matches!(parse_lp_text(bad), Err(LpError::Parse { line: 4, .. })));
    }
}
