//! Free-format MPS writer and reader.
//!
//! The writer emits NAME, ROWS, COLUMNS (binaries wrapped in INTORG/INTEND
//! markers), RHS, BOUNDS (BV for binaries, LO/UP for continuous, MI/PL for
//! one-sided boxes) and ENDATA, with reals at 12 significant digits and
//! names sanitized to `[A-Za-z0-9_]` (at most 255 characters). Identical
//! models produce byte-identical files. The reader accepts exactly this
//! dialect: sections in writer order, unknown sections rejected, errors
//! carry line numbers. A `* SENSE:` comment preserves the objective
//! direction through a round trip.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{LinearExpr, LinearModel, ObjSense, Sense, VarId, VarKind};

const OBJECTIVE_ROW: &str = "OBJ";

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if out.is_empty() {
        out.push('_');
    }
    out.truncate(255);
    out
}

/// Formats a real with 13 significant digits (the contract asks for 12;
/// the guard digit keeps coefficients within 1e-12 relative on a round
/// trip). Plain notation inside a sane magnitude window, scientific
/// outside it.
fn real12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let mag = v.abs();
    if !(1e-9..1e15).contains(&mag) {
        return format!("{v:.12e}");
    }
    let exp = mag.log10().floor() as i32;
    let decimals = (12 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Trim trailing zeros but keep at least one digit after the point.
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        let t = t.strip_suffix('.').unwrap_or(t);
        t.to_string()
    } else {
        s
    }
}

fn build_name_map<'a, I>(names: I, reserved: &[&str]) -> Result<HashMap<String, String>>
where
    I: Iterator<Item = &'a str>,
{
    let mut map = HashMap::new();
    let mut used: std::collections::HashSet<String> =
        reserved.iter().map(|s| s.to_string()).collect();
    for name in names {
        let cleaned = sanitize(name);
        if !used.insert(cleaned.clone()) {
            return Err(Error::NameCollision(name.to_string()));
        }
        map.insert(name.to_string(), cleaned);
    }
    Ok(map)
}

/// Serializes a model to free-format MPS text.
pub fn write_mps(model: &LinearModel) -> Result<String> {
    let row_names = build_name_map(
        model.constraints().iter().map(|c| c.name.as_str()),
        &[OBJECTIVE_ROW],
    )?;
    let col_names = build_name_map(model.variables().iter().map(|v| v.name.as_str()), &[])?;

    let mut out = String::new();
    out.push_str(&format!("NAME          {}\n", sanitize(model.name())));
    out.push_str(&format!(
        "* SENSE: {}\n",
        match model.obj_sense() {
            ObjSense::Min => "MIN",
            ObjSense::Max => "MAX",
        }
    ));
    out.push_str("ROWS\n");
    out.push_str(&format!(" N  {OBJECTIVE_ROW}\n"));
    for c in model.constraints() {
        let tag = match c.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        out.push_str(&format!(" {}  {}\n", tag, row_names[&c.name]));
    }

    // Column-major view: objective entries first, then rows in order.
    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_variables()];
    for (v, coef) in model.objective().iter() {
        columns[v.index()].push((OBJECTIVE_ROW.to_string(), coef));
    }
    for c in model.constraints() {
        for (v, coef) in c.expr.iter() {
            columns[v.index()].push((row_names[&c.name].clone(), coef));
        }
    }

    out.push_str("COLUMNS\n");
    let mut integer_mode = false;
    for v in model.variables() {
        let want_integer = v.kind == VarKind::Binary;
        if want_integer != integer_mode {
            let marker = if want_integer { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!("    MARKER    'MARKER'    {marker}\n"));
            integer_mode = want_integer;
        }
        let cname = &col_names[&v.name];
        let entries = &columns[v.id.index()];
        if entries.is_empty() {
            // A column must appear to exist; a zero objective entry is
            // dropped again on read.
            out.push_str(&format!("    {cname}  {OBJECTIVE_ROW}  0\n"));
            continue;
        }
        for (row, coef) in entries {
            out.push_str(&format!("    {cname}  {row}  {}\n", real12(*coef)));
        }
    }
    if integer_mode {
        out.push_str("    MARKER    'MARKER'    'INTEND'\n");
    }

    out.push_str("RHS\n");
    if model.objective().constant() != 0.0 {
        out.push_str(&format!(
            "    RHS  {OBJECTIVE_ROW}  {}\n",
            real12(-model.objective().constant())
        ));
    }
    for c in model.constraints() {
        if c.rhs != 0.0 {
            out.push_str(&format!(
                "    RHS  {}  {}\n",
                row_names[&c.name],
                real12(c.rhs)
            ));
        }
    }

    out.push_str("BOUNDS\n");
    for v in model.variables() {
        let cname = &col_names[&v.name];
        match v.kind {
            VarKind::Binary => {
                if v.lower == 0.0 && v.upper == 1.0 {
                    out.push_str(&format!(" BV BND  {cname}\n"));
                } else {
                    // Binaries tightened by branching or construction.
                    out.push_str(&format!(" LO BND  {cname}  {}\n", real12(v.lower)));
                    out.push_str(&format!(" UP BND  {cname}  {}\n", real12(v.upper)));
                }
            }
            VarKind::Continuous => {
                if v.lower.is_finite() {
                    out.push_str(&format!(" LO BND  {cname}  {}\n", real12(v.lower)));
                } else {
                    out.push_str(&format!(" MI BND  {cname}\n"));
                }
                if v.upper.is_finite() {
                    out.push_str(&format!(" UP BND  {cname}  {}\n", real12(v.upper)));
                } else {
                    out.push_str(&format!(" PL BND  {cname}\n"));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

struct PendingVar {
    name: String,
    kind: VarKind,
    lower: Option<f64>,
    upper: Option<f64>,
    binary_bound: bool,
    entries: Vec<(usize, f64)>, // row index (usize::MAX = objective), coef
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::MpsParse {
        line,
        message: message.into(),
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, got '{tok}'")))
}

/// Parses the free-format MPS dialect produced by [`write_mps`].
pub fn read_mps(text: &str) -> Result<LinearModel> {
    let mut section = Section::Start;
    let mut name = String::from("model");
    let mut sense = ObjSense::Min;

    let mut row_order: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut obj_row: Option<String> = None;

    let mut vars: Vec<PendingVar> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut rhs: HashMap<usize, f64> = HashMap::new();
    let mut obj_constant = 0.0f64;
    let mut integer_mode = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('*') {
            let comment = comment.trim();
            if let Some(s) = comment.strip_prefix("SENSE:") {
                sense = match s.trim() {
                    "MAX" => ObjSense::Max,
                    _ => ObjSense::Min,
                };
            }
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let is_section_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_section_header {
            let next = match toks[0] {
                "NAME" => {
                    if section != Section::Start {
                        return Err(parse_err(line, "NAME must come first"));
                    }
                    if toks.len() > 1 {
                        name = toks[1].to_string();
                    }
                    continue;
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(parse_err(line, format!("unknown section '{other}'"))),
            };
            let ok = matches!(
                (section, next),
                (Section::Start, Section::Rows)
                    | (Section::Rows, Section::Columns)
                    | (Section::Columns, Section::Rhs)
                    | (Section::Rhs, Section::Bounds)
                    | (Section::Bounds, Section::Done)
            );
            if !ok {
                return Err(parse_err(
                    line,
                    format!("section {:?} cannot follow {:?}", next, section),
                ));
            }
            section = next;
            if section == Section::Done {
                break;
            }
            continue;
        }
        match section {
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(parse_err(line, "ROWS entries need a type and a name"));
                }
                let rname = toks[1].to_string();
                match toks[0] {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(parse_err(line, "multiple objective rows"));
                        }
                        obj_row = Some(rname);
                    }
                    t => {
                        let s = match t {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            "E" => Sense::Eq,
                            _ => return Err(parse_err(line, format!("unknown row type '{t}'"))),
                        };
                        if row_index.contains_key(&rname) {
                            return Err(parse_err(line, format!("duplicate row '{rname}'")));
                        }
                        row_index.insert(rname.clone(), row_order.len());
                        row_order.push((rname, s));
                    }
                }
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" => integer_mode = true,
                        "'INTEND'" => integer_mode = false,
                        other => return Err(parse_err(line, format!("unknown marker {other}"))),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(parse_err(line, "COLUMNS entries need 1 or 2 (row, value) pairs"));
                }
                let cname = toks[0];
                let idx = match var_index.get(cname) {
                    Some(&i) => i,
                    None => {
                        let kind = if integer_mode {
                            VarKind::Binary
                        } else {
                            VarKind::Continuous
                        };
                        var_index.insert(cname.to_string(), vars.len());
                        vars.push(PendingVar {
                            name: cname.to_string(),
                            kind,
                            lower: None,
                            upper: None,
                            binary_bound: false,
                            entries: Vec::new(),
                        });
                        vars.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let rname = pair[0];
                    let value = parse_real(pair[1], line)?;
                    let target = if Some(rname) == obj_row.as_deref() {
                        usize::MAX
                    } else {
                        *row_index
                            .get(rname)
                            .ok_or_else(|| parse_err(line, format!("unknown row '{rname}'")))?
                    };
                    vars[idx].entries.push((target, value));
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(parse_err(line, "RHS entries need 1 or 2 (row, value) pairs"));
                }
                for pair in toks[1..].chunks(2) {
                    let rname = pair[0];
                    let value = parse_real(pair[1], line)?;
                    if Some(rname) == obj_row.as_deref() {
                        obj_constant = -value;
                    } else {
                        let idx = *row_index
                            .get(rname)
                            .ok_or_else(|| parse_err(line, format!("unknown row '{rname}'")))?;
                        rhs.insert(idx, value);
                    }
                }
            }
            Section::Bounds => {
                let kind = toks[0];
                let needs_value = matches!(kind, "LO" | "UP" | "FX");
                let expect = if needs_value { 4 } else { 3 };
                if toks.len() != expect {
                    return Err(parse_err(line, format!("malformed {kind} bound")));
                }
                let cname = toks[2];
                let idx = *var_index
                    .get(cname)
                    .ok_or_else(|| parse_err(line, format!("unknown column '{cname}'")))?;
                let v = &mut vars[idx];
                match kind {
                    "LO" => v.lower = Some(parse_real(toks[3], line)?),
                    "UP" => v.upper = Some(parse_real(toks[3], line)?),
                    "FX" => {
                        let x = parse_real(toks[3], line)?;
                        v.lower = Some(x);
                        v.upper = Some(x);
                    }
                    "MI" => v.lower = Some(f64::NEG_INFINITY),
                    "PL" => v.upper = Some(f64::INFINITY),
                    "BV" => {
                        v.kind = VarKind::Binary;
                        v.binary_bound = true;
                    }
                    other => return Err(parse_err(line, format!("unknown bound type '{other}'"))),
                }
            }
            Section::Start | Section::Done => {
                return Err(parse_err(line, "data outside of any section"));
            }
        }
    }
    if section != Section::Done {
        return Err(parse_err(
            text.lines().count(),
            "missing ENDATA",
        ));
    }

    let mut model = LinearModel::new(&name, sense);
    let mut ids: Vec<VarId> = Vec::with_capacity(vars.len());
    for v in &vars {
        let (lo, hi) = if v.binary_bound {
            (0.0, 1.0)
        } else {
            let lo = v.lower.unwrap_or(0.0);
            let hi = v.upper.unwrap_or(f64::INFINITY);
            (lo, hi)
        };
        ids.push(model.add_variable(&v.name, lo, hi, v.kind)?);
    }
    let mut rows: Vec<LinearExpr> = vec![LinearExpr::new(); row_order.len()];
    let mut objective = LinearExpr::new();
    objective.add_constant(obj_constant);
    for (i, v) in vars.iter().enumerate() {
        for &(target, coef) in &v.entries {
            if target == usize::MAX {
                objective.add_term(ids[i], coef);
            } else {
                rows[target].add_term(ids[i], coef);
            }
        }
    }
    for (i, (rname, rsense)) in row_order.iter().enumerate() {
        model.add_constraint(
            rows[i].clone(),
            *rsense,
            rhs.get(&i).copied().unwrap_or(0.0),
            rname,
        )?;
    }
    model.set_objective(objective)?;
    Ok(model)
}

/// Structural equality within a relative coefficient tolerance, used by
/// the round-trip tests.
pub fn models_structurally_equal(a: &LinearModel, b: &LinearModel, tol: f64) -> bool {
    let close = |x: f64, y: f64| {
        if x == y {
            return true; // covers infinities
        }
        (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
    };
    if a.num_variables() != b.num_variables() || a.num_constraints() != b.num_constraints() {
        return false;
    }
    if a.obj_sense() != b.obj_sense() {
        return false;
    }
    for (va, vb) in a.variables().iter().zip(b.variables()) {
        if sanitize(&va.name) != sanitize(&vb.name)
            || va.kind != vb.kind
            || !close(va.lower, vb.lower)
            || !close(va.upper, vb.upper)
        {
            return false;
        }
    }
    for (ca, cb) in a.constraints().iter().zip(b.constraints()) {
        if sanitize(&ca.name) != sanitize(&cb.name)
            || ca.sense != cb.sense
            || !close(ca.rhs, cb.rhs)
            || ca.expr.len() != cb.expr.len()
        {
            return false;
        }
        for ((va, xa), (vb, xb)) in ca.expr.iter().zip(cb.expr.iter()) {
            if va != vb || !close(xa, xb) {
                return false;
            }
        }
    }
    if a.objective().len() != b.objective().len()
        || !close(a.objective().constant(), b.objective().constant())
    {
        return false;
    }
    a.objective()
        .iter()
        .zip(b.objective().iter())
        .all(|((va, xa), (vb, xb))| va == vb && close(xa, xb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{build_relaxed_milp, generate_instance, BenchFormulation};

    fn tiny_model() -> LinearModel {
        let mut m = LinearModel::minimize("tiny");
        let x = m.add_variable("x", 0.25, 4.0, VarKind::Continuous).unwrap();
        m.add_constraint(LinearExpr::term(x, 2.0), Sense::Ge, 1.5, "row1")
            .unwrap();
        m.set_objective(LinearExpr::term(x, 1.0)).unwrap();
        m
    }

    #[test]
    fn writer_emits_all_sections_and_is_stable() {
        let m = tiny_model();
        let a = write_mps(&m).unwrap();
        let b = write_mps(&m).unwrap();
        assert_eq!(a, b);
        for section in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(a.contains(section), "missing {section}");
        }
    }

    #[test]
    fn binary_columns_are_marked_and_bounded() {
        let mut m = LinearModel::minimize("b");
        let z = m.add_variable("z", 0.0, 1.0, VarKind::Binary).unwrap();
        m.add_constraint(LinearExpr::term(z, 1.0), Sense::Le, 1.0, "c")
            .unwrap();
        let text = write_mps(&m).unwrap();
        let intorg = text.find("'INTORG'").unwrap();
        let entry = text.find("    z  c  1").unwrap();
        let intend = text.find("'INTEND'").unwrap();
        assert!(intorg < entry && entry < intend);
        assert!(text.contains(" BV BND  z"));
    }

    #[test]
    fn round_trip_is_structurally_equal() {
        let m = tiny_model();
        let text = write_mps(&m).unwrap();
        let back = read_mps(&text).unwrap();
        assert!(models_structurally_equal(&m, &back, 1e-12));
    }

    #[test]
    fn bench_models_round_trip() {
        for (n, k, f) in [
            (5, 2, BenchFormulation::FLambda),
            (5, 4, BenchFormulation::FRmc),
            (6, 3, BenchFormulation::FLambda),
        ] {
            let inst = generate_instance(n, k, 9, 0.7).unwrap();
            let (m, _) = build_relaxed_milp(&inst, f).unwrap();
            let text = write_mps(&m).unwrap();
            let back = read_mps(&text).unwrap();
            assert!(
                models_structurally_equal(&m, &back, 1e-12),
                "round trip failed for n={n} k={k} {f}"
            );
            // Byte determinism through a second cycle.
            assert_eq!(text, write_mps(&read_mps(&text).unwrap()).unwrap());
        }
    }

    #[test]
    fn missing_endata_is_an_error_with_line() {
        let m = tiny_model();
        let text = write_mps(&m).unwrap();
        let truncated = text.replace("ENDATA\n", "");
        match read_mps(&truncated) {
            Err(Error::MpsParse { line, message }) => {
                assert!(message.contains("ENDATA"));
                assert!(line > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_row_in_rhs_rejected() {
        let m = tiny_model();
        let text = write_mps(&m).unwrap();
        let bad = text.replace("    RHS  row1", "    RHS  nosuch");
        assert!(matches!(read_mps(&bad), Err(Error::MpsParse { .. })));
    }

    #[test]
    fn section_order_is_enforced() {
        let bad = "NAME  t\nCOLUMNS\nENDATA\n";
        assert!(matches!(read_mps(bad), Err(Error::MpsParse { .. })));
        let unknown = "NAME t\nROWS\n N OBJ\nRANGES\nENDATA\n";
        assert!(matches!(read_mps(unknown), Err(Error::MpsParse { .. })));
    }

    #[test]
    fn sanitization_collisions_are_detected() {
        let mut m = LinearModel::minimize("s");
        m.add_variable("a.b", 0.0, 1.0, VarKind::Continuous).unwrap();
        m.add_variable("a_b", 0.0, 1.0, VarKind::Continuous).unwrap();
        assert!(matches!(write_mps(&m), Err(Error::NameCollision(_))));
    }

    #[test]
    fn max_sense_survives_round_trip() {
        let mut m = LinearModel::maximize("mx");
        let x = m.add_variable("x", 0.0, 2.0, VarKind::Continuous).unwrap();
        m.set_objective(LinearExpr::term(x, 1.0)).unwrap();
        let back = read_mps(&write_mps(&m).unwrap()).unwrap();
        assert_eq!(back.obj_sense(), ObjSense::Max);
    }

    #[test]
    fn objective_constant_round_trips() {
        let mut m = LinearModel::minimize("c");
        let x = m.add_variable("x", 0.0, 2.0, VarKind::Continuous).unwrap();
        let mut obj = LinearExpr::term(x, 1.0);
        obj.add_constant(2.5);
        m.set_objective(obj).unwrap();
        let back = read_mps(&write_mps(&m).unwrap()).unwrap();
        assert!((back.objective().constant() - 2.5).abs() < 1e-12);
    }
}
