//! MPS and LP text formats.
//!
//! Both writers are deterministic: variables and rows appear in declaration
//! order and coefficients use the shortest exact decimal representation, so
//! files round-trip bit for bit through the bundled readers. Names follow
//! the fixed scheme of the builders and may exceed the historical 8-column
//! MPS name limit; fields are whitespace-aligned, which every modern reader
//! accepts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

use super::{MilpModel, Sense, VarKind};

fn num<T: Scalar>(v: T) -> String {
    format!("{v}")
}

/// Fixed-layout MPS text for a model.
pub fn write_mps_string<T: Scalar>(model: &MilpModel<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    out.push_str("ROWS\n");
    out.push_str(" N  COST\n");
    for con in model.cons() {
        let tag = match con.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {tag}  {}", con.name);
    }

    // column-major view of the constraint matrix
    let mut columns: Vec<Vec<(usize, T)>> = vec![Vec::new(); model.n_vars()];
    for (row, con) in model.cons().iter().enumerate() {
        for &(col, coeff) in &con.terms {
            columns[col].push((row, coeff));
        }
    }

    out.push_str("COLUMNS\n");
    let mut integer_mode = false;
    let mut marker = 0usize;
    for (col, var) in model.vars().iter().enumerate() {
        let wants_integer = var.kind == VarKind::Binary;
        if wants_integer != integer_mode {
            let tag = if wants_integer { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARK{marker:04}  'MARKER'  '{tag}'");
            marker += 1;
            integer_mode = wants_integer;
        }
        let mut wrote_any = false;
        if var.obj != T::zero() {
            let _ = writeln!(out, "    {:<10}  {:<10}  {}", var.name, "COST", num(var.obj));
            wrote_any = true;
        }
        for &(row, coeff) in &columns[col] {
            let _ = writeln!(
                out,
                "    {:<10}  {:<10}  {}",
                var.name,
                model.cons()[row].name,
                num(coeff)
            );
            wrote_any = true;
        }
        if !wrote_any {
            // declare the column even when all its coefficients vanish
            let _ = writeln!(out, "    {:<10}  {:<10}  0", var.name, "COST");
        }
    }
    if integer_mode {
        let _ = writeln!(out, "    MARK{marker:04}  'MARKER'  'INTEND'");
    }

    out.push_str("RHS\n");
    for con in model.cons() {
        if con.rhs != T::zero() {
            let _ = writeln!(out, "    RHS  {:<10}  {}", con.name, num(con.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for var in model.vars() {
        if var.kind == VarKind::Binary {
            let _ = writeln!(out, " BV BND  {}", var.name);
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_mps<T: Scalar>(model: &MilpModel<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mps_string(model))?;
    Ok(())
}

/// Reads back the MPS subset produced by [`write_mps_string`].
pub fn read_mps<T: Scalar>(text: &str) -> Result<MilpModel<T>> {
    #[derive(PartialEq)]
    enum Section {
        Start,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let mut section = Section::Start;
    let mut model = MilpModel::new("");
    let mut row_sense: Vec<Sense> = Vec::new();
    let mut row_terms: Vec<Vec<(usize, T)>> = Vec::new();
    let mut row_rhs: Vec<T> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut integer_mode = false;
    let mut objective_row: Option<String> = None;

    let parse_num = |tok: &str| -> Result<T> {
        tok.parse::<f64>()
            .map(T::from_f64_lossy)
            .map_err(|_| Error::Parse(format!("bad number {tok:?} in MPS file")))
    };

    for raw in text.lines() {
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            let mut fields = raw.split_whitespace();
            match fields.next().unwrap_or("") {
                "NAME" => {
                    model.name = fields.next().unwrap_or("").to_string();
                    continue;
                }
                "ROWS" => {
                    section = Section::Rows;
                    continue;
                }
                "COLUMNS" => {
                    section = Section::Columns;
                    continue;
                }
                "RHS" => {
                    section = Section::Rhs;
                    continue;
                }
                "BOUNDS" => {
                    section = Section::Bounds;
                    continue;
                }
                "RANGES" => {
                    return Err(Error::Parse("RANGES sections are not supported".into()));
                }
                "ENDATA" => {
                    section = Section::Done;
                    break;
                }
                other => return Err(Error::Parse(format!("unknown MPS section {other:?}"))),
            }
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match section {
            Section::Rows => {
                let [tag, name] = fields.as_slice() else {
                    return Err(Error::Parse(format!("bad ROWS line: {raw:?}")));
                };
                match *tag {
                    "N" => objective_row = Some((*name).to_string()),
                    "L" | "G" | "E" => {
                        let sense = match *tag {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            _ => Sense::Eq,
                        };
                        row_index.insert((*name).to_string(), row_names.len());
                        row_names.push((*name).to_string());
                        row_sense.push(sense);
                        row_terms.push(Vec::new());
                        row_rhs.push(T::zero());
                    }
                    other => return Err(Error::Parse(format!("unknown row type {other:?}"))),
                }
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    match fields[2] {
                        "'INTORG'" => integer_mode = true,
                        "'INTEND'" => integer_mode = false,
                        other => {
                            return Err(Error::Parse(format!("unknown marker {other:?}")));
                        }
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(Error::Parse(format!("bad COLUMNS line: {raw:?}")));
                }
                let name = fields[0];
                let col = match model.col(name) {
                    Some(col) => col,
                    None => {
                        let kind = if integer_mode {
                            VarKind::Binary
                        } else {
                            VarKind::Continuous
                        };
                        model.add_var(name, kind, T::zero())
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = parse_num(pair[1])?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        model.vars[col].obj = value;
                    } else {
                        let row = *row_index.get(pair[0]).ok_or_else(|| {
                            Error::Parse(format!("COLUMNS references unknown row {:?}", pair[0]))
                        })?;
                        if value != T::zero() {
                            row_terms[row].push((col, value));
                        }
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad RHS line: {raw:?}")));
                }
                let row = *row_index.get(fields[1]).ok_or_else(|| {
                    Error::Parse(format!("RHS references unknown row {:?}", fields[1]))
                })?;
                row_rhs[row] = parse_num(fields[2])?;
            }
            Section::Bounds => {
                match fields.as_slice() {
                    ["BV", _, name] => {
                        let col = model.col(name).ok_or_else(|| {
                            Error::Parse(format!("BOUNDS references unknown column {name:?}"))
                        })?;
                        model.vars[col].kind = VarKind::Binary;
                    }
                    _ => {
                        return Err(Error::Parse(format!("unsupported BOUNDS line: {raw:?}")));
                    }
                };
            }
            Section::Start | Section::Done => {
                return Err(Error::Parse(format!("unexpected data line: {raw:?}")));
            }
        }
    }
    if section != Section::Done {
        return Err(Error::Parse("MPS file has no ENDATA".into()));
    }
    for (((name, terms), sense), rhs) in row_names
        .into_iter()
        .zip(row_terms)
        .zip(row_sense)
        .zip(row_rhs)
    {
        model.add_con(name, terms, sense, rhs);
    }
    Ok(model)
}

/// CPLEX-style LP text for a model. The objective lists every nonzero
/// coefficient exactly once; all continuous variables get an explicit
/// bound line and all binaries appear in the Binary section, so every
/// declared variable is recoverable from the file.
pub fn write_lp_string<T: Scalar>(model: &MilpModel<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Minimize\n obj:");
    let mut first = true;
    let mut on_line = 0usize;
    for var in model.vars() {
        if var.obj == T::zero() {
            continue;
        }
        push_term(&mut out, &mut first, &mut on_line, var.obj, &var.name);
    }
    if first {
        out.push_str(" 0 ");
        out.push_str(&model.vars().first().map_or("none".into(), |v| v.name.clone()));
    }
    out.push_str("\nSubject To\n");
    for con in model.cons() {
        let _ = write!(out, " {}:", con.name);
        let mut first = true;
        let mut on_line = 0usize;
        for &(col, coeff) in &con.terms {
            push_term(
                &mut out,
                &mut first,
                &mut on_line,
                coeff,
                &model.vars()[col].name,
            );
        }
        if first {
            out.push_str(" 0");
        }
        let _ = writeln!(out, " {} {}", con.sense.symbol(), num(con.rhs));
    }
    out.push_str("Bounds\n");
    for var in model.vars() {
        if var.kind == VarKind::Continuous {
            let _ = writeln!(out, " 0 <= {}", var.name);
        }
    }
    out.push_str("Binary\n");
    for var in model.vars() {
        if var.kind == VarKind::Binary {
            let _ = writeln!(out, " {}", var.name);
        }
    }
    out.push_str("End\n");
    out
}

fn push_term<T: Scalar>(
    out: &mut String,
    first: &mut bool,
    on_line: &mut usize,
    coeff: T,
    name: &str,
) {
    if *on_line == 8 {
        out.push_str("\n   ");
        *on_line = 0;
    }
    let magnitude = coeff.abs();
    if *first {
        if coeff < T::zero() {
            let _ = write!(out, " -{} {}", num(magnitude), name);
        } else {
            let _ = write!(out, " {} {}", num(magnitude), name);
        }
        *first = false;
    } else if coeff < T::zero() {
        let _ = write!(out, " - {} {}", num(magnitude), name);
    } else {
        let _ = write!(out, " + {} {}", num(magnitude), name);
    }
    *on_line += 1;
}

pub fn export_lp<T: Scalar>(model: &MilpModel<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_lp_string(model))?;
    Ok(())
}

/// Reads back the LP subset produced by [`write_lp_string`].
pub fn read_lp<T: Scalar>(text: &str) -> Result<MilpModel<T>> {
    // strip comments, then tokenize; ':' sticks to the preceding token
    let mut tokens: Vec<String> = Vec::new();
    let mut name = String::new();
    for (lineno, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim_start().strip_prefix('\\') {
            if lineno == 0 {
                name = rest.trim().to_string();
            }
            continue;
        }
        for tok in line.split_whitespace() {
            // detach a leading sign unless the token is a signed number
            let signed = (tok.starts_with('+') || tok.starts_with('-')) && tok.len() > 1;
            if signed && tok[1..].parse::<f64>().is_err() {
                tokens.push(tok[..1].to_string());
                tokens.push(tok[1..].to_string());
            } else {
                tokens.push(tok.to_string());
            }
        }
    }

    let keyword = |t: &str| -> Option<&'static str> {
        match t.to_ascii_lowercase().as_str() {
            "minimize" | "min" => Some("minimize"),
            "maximize" | "max" => Some("maximize"),
            "subject" => Some("subject"),
            "st" | "s.t." => Some("st"),
            "bounds" => Some("bounds"),
            "binary" | "binaries" | "bin" => Some("binary"),
            "general" | "generals" | "gen" => Some("general"),
            "end" => Some("end"),
            _ => None,
        }
    };

    let mut model: MilpModel<T> = MilpModel::new(name);
    let mut pos = 0usize;
    match tokens.first().map(|t| keyword(t)) {
        Some(Some("minimize")) => pos += 1,
        Some(Some("maximize")) => {
            return Err(Error::Parse("only minimization is supported".into()))
        }
        _ => return Err(Error::Parse("LP file must start with Minimize".into())),
    }

    let is_number = |t: &str| t.parse::<f64>().is_ok();
    let ensure_var = |model: &mut MilpModel<T>, name: &str| -> usize {
        match model.col(name) {
            Some(col) => col,
            None => model.add_var(name, VarKind::Continuous, T::zero()),
        }
    };

    // expression parser: consumes [sign] [number] var ... until a
    // non-expression token; returns (col, coeff) pairs
    let parse_expr = |model: &mut MilpModel<T>,
                      tokens: &[String],
                      pos: &mut usize|
     -> Result<Vec<(usize, T)>> {
        let mut terms: Vec<(usize, T)> = Vec::new();
        loop {
            let Some(tok) = tokens.get(*pos) else { break };
            let mut sign = T::one();
            let mut idx = *pos;
            let mut tok = tok.as_str();
            if tok == "+" || tok == "-" {
                if tok == "-" {
                    sign = -T::one();
                }
                idx += 1;
                let Some(next) = tokens.get(idx) else {
                    return Err(Error::Parse("dangling sign in LP expression".into()));
                };
                tok = next.as_str();
            } else if keyword(tok).is_some() || tok.contains(':') || matches!(tok, "<=" | ">=" | "=") {
                break;
            }
            let coeff;
            if is_number(tok) {
                coeff = sign
                    * tok
                        .parse::<f64>()
                        .map(T::from_f64_lossy)
                        .expect("checked numeric");
                idx += 1;
                let Some(next) = tokens.get(idx) else {
                    return Err(Error::Parse("number without variable in LP".into()));
                };
                tok = next.as_str();
            } else {
                coeff = sign;
            }
            if keyword(tok).is_some() || tok.contains(':') {
                return Err(Error::Parse(format!("expected variable, found {tok:?}")));
            }
            let col = ensure_var(model, tok);
            terms.push((col, coeff));
            *pos = idx + 1;
        }
        Ok(terms)
    };

    // objective (optional "obj:" label)
    if tokens.get(pos).is_some_and(|t| t.ends_with(':')) {
        pos += 1;
    }
    let obj_terms = parse_expr(&mut model, &tokens, &mut pos)?;
    for (col, coeff) in obj_terms {
        model.vars[col].obj += coeff;
    }

    // Subject To
    match tokens.get(pos).map(|t| keyword(t)) {
        Some(Some("subject")) => {
            pos += 1;
            if tokens.get(pos).is_some_and(|t| t.eq_ignore_ascii_case("to")) {
                pos += 1;
            }
        }
        Some(Some("st")) => pos += 1,
        _ => return Err(Error::Parse("expected Subject To section".into())),
    }

    loop {
        let Some(tok) = tokens.get(pos) else {
            return Err(Error::Parse("unterminated LP file".into()));
        };
        if let Some(kw) = keyword(tok) {
            if kw == "bounds" || kw == "binary" || kw == "general" || kw == "end" {
                break;
            }
        }
        let row_name = tok
            .strip_suffix(':')
            .ok_or_else(|| Error::Parse(format!("expected row label, found {tok:?}")))?
            .to_string();
        pos += 1;
        let terms = parse_expr(&mut model, &tokens, &mut pos)?;
        let sense = match tokens.get(pos).map(String::as_str) {
            Some("<=") => Sense::Le,
            Some(">=") => Sense::Ge,
            Some("=") => Sense::Eq,
            other => return Err(Error::Parse(format!("expected sense, found {other:?}"))),
        };
        pos += 1;
        let rhs_tok = tokens
            .get(pos)
            .ok_or_else(|| Error::Parse("missing right-hand side".into()))?;
        let rhs = rhs_tok
            .parse::<f64>()
            .map(T::from_f64_lossy)
            .map_err(|_| Error::Parse(format!("bad right-hand side {rhs_tok:?}")))?;
        pos += 1;
        model.add_con(row_name, terms, sense, rhs);
    }

    // Bounds / Binary / End
    while let Some(tok) = tokens.get(pos) {
        match keyword(tok) {
            Some("bounds") => {
                pos += 1;
                // only the " 0 <= var" form is produced
                while let Some(t) = tokens.get(pos) {
                    if keyword(t).is_some() {
                        break;
                    }
                    let lo = t.clone();
                    let op = tokens.get(pos + 1).cloned().unwrap_or_default();
                    let var = tokens.get(pos + 2).cloned().unwrap_or_default();
                    if lo != "0" || op != "<=" {
                        return Err(Error::Parse(format!("unsupported bound: {lo} {op} {var}")));
                    }
                    ensure_var(&mut model, &var);
                    pos += 3;
                }
            }
            Some("binary") => {
                pos += 1;
                while let Some(t) = tokens.get(pos) {
                    if keyword(t).is_some() {
                        break;
                    }
                    let col = ensure_var(&mut model, t);
                    model.vars[col].kind = VarKind::Binary;
                    pos += 1;
                }
            }
            Some("general") => {
                return Err(Error::Parse("general integers are not supported".into()));
            }
            Some("end") => return Ok(model),
            _ => return Err(Error::Parse(format!("unexpected token {tok:?}"))),
        }
    }
    Err(Error::Parse("LP file has no End".into()))
}

/// Structural equality by names: same variables (kind, objective), same
/// constraints (sense, right-hand side, coefficient multiset). Term and
/// declaration order may differ.
pub fn models_equivalent<T: Scalar>(
    a: &MilpModel<T>,
    b: &MilpModel<T>,
) -> std::result::Result<(), String> {
    if a.n_vars() != b.n_vars() {
        return Err(format!("{} vs {} variables", a.n_vars(), b.n_vars()));
    }
    if a.n_cons() != b.n_cons() {
        return Err(format!("{} vs {} constraints", a.n_cons(), b.n_cons()));
    }
    for var in a.vars() {
        let Some(col) = b.col(&var.name) else {
            return Err(format!("missing variable {}", var.name));
        };
        let other = &b.vars()[col];
        if other.kind != var.kind {
            return Err(format!("variable {} changed kind", var.name));
        }
        if other.obj != var.obj {
            return Err(format!(
                "variable {}: objective {} vs {}",
                var.name, var.obj, other.obj
            ));
        }
    }
    let b_rows: HashMap<&str, &super::Constraint<T>> =
        b.cons().iter().map(|c| (c.name.as_str(), c)).collect();
    for con in a.cons() {
        let Some(other) = b_rows.get(con.name.as_str()) else {
            return Err(format!("missing constraint {}", con.name));
        };
        if other.sense != con.sense || other.rhs != con.rhs {
            return Err(format!("constraint {} changed sense or rhs", con.name));
        }
        let key = |m: &MilpModel<T>, terms: &[(usize, T)]| -> Vec<(String, String)> {
            let mut v: Vec<(String, String)> = terms
                .iter()
                .map(|&(col, coeff)| (m.vars()[col].name.clone(), format!("{coeff}")))
                .collect();
            v.sort();
            v
        };
        if key(a, &con.terms) != key(b, &other.terms) {
            return Err(format!("constraint {} changed coefficients", con.name));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp;
    use crate::recourse::test_util::instance;
    use crate::recourse::Policy;
    use crate::scenario::sample_independent;

    fn sample_models() -> Vec<MilpModel<f64>> {
        let mut inst = instance(
            2,
            3,
            vec![1.25, 2.0, 3.5, 0.75, 1.0 / 3.0, 0.6],
            vec![1, 2],
            vec![4.5, 5.0],
            7.25,
            vec![0.3, 0.4, 0.5],
        );
        inst.open_cost = vec![10.0, 11.5];
        inst.min_assigned = vec![1, 0];
        let scen = sample_independent(&inst, 3, 13).unwrap();
        Policy::ALL
            .iter()
            .map(|&p| milp::build(&inst, &scen, p, p == Policy::Fo))
            .collect()
    }

    #[test]
    fn mps_round_trip_is_exact() {
        for model in sample_models() {
            let text = write_mps_string(&model);
            let back: MilpModel<f64> = read_mps(&text).unwrap();
            models_equivalent(&model, &back).unwrap();
            assert_eq!(model.n_vars(), back.n_vars());
            // writer is deterministic
            assert_eq!(text, write_mps_string(&back));
        }
    }

    #[test]
    fn lp_round_trip_is_exact() {
        for model in sample_models() {
            let text = write_lp_string(&model);
            let back: MilpModel<f64> = read_lp(&text).unwrap();
            models_equivalent(&model, &back).unwrap();
        }
    }

    #[test]
    fn lp_objective_lists_each_nonzero_coefficient_once() {
        for model in sample_models() {
            let text = write_lp_string(&model);
            let objective_section: &str = text
                .split("Subject To")
                .next()
                .expect("has objective section");
            for var in model.vars() {
                let hits = objective_section.matches(&format!(" {}", var.name)).count();
                let expected = usize::from(var.obj != 0.0);
                assert_eq!(hits, expected, "{} in objective", var.name);
            }
        }
    }

    #[test]
    fn mps_marker_pairs_are_balanced() {
        for model in sample_models() {
            let text = write_mps_string(&model);
            let orgs = text.matches("'INTORG'").count();
            let ends = text.matches("'INTEND'").count();
            assert_eq!(orgs, ends);
        }
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(read_mps::<f64>("NAME x\nROWS\n N  COST\nRANGES\nENDATA\n").is_err());
        assert!(read_mps::<f64>("NAME x\nROWS\n N  COST\nCOLUMNS\n").is_err());
        assert!(read_lp::<f64>("Maximize\n obj: 1 x\nSubject To\nEnd\n").is_err());
    }

    #[test]
    fn lp_reader_handles_signs_and_implicit_coefficients() {
        let text = "Minimize\n obj: 2 a - 3 b\nSubject To\n r0: a + b <= 4\n r1: -a - 2 b >= -7\nBounds\n 0 <= a\n 0 <= b\nEnd\n";
        let model: MilpModel<f64> = read_lp(text).unwrap();
        assert_eq!(model.n_vars(), 2);
        assert_eq!(model.n_cons(), 2);
        let r1 = &model.cons()[1];
        assert_eq!(r1.rhs, -7.0);
        assert_eq!(r1.terms, vec![(0, -1.0), (1, -2.0)]);
    }
}
