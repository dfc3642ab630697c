//! Fixed-format MPS export and a human-readable LP listing.

use std::collections::HashSet;
use std::fmt::Write;

use super::model::{LinearModel, Relation};

const OBJ_ROW: &str = "COST";

#[derive(Debug, Clone)]
pub struct MpsExport {
    pub text: String,
    /// `(mps name, original name)` for every column, then every row.
    pub name_map: Vec<(String, String)>,
}

impl MpsExport {
    /// Sidecar listing, one `mps_name original_name` pair per line.
    pub fn name_map_text(&self) -> String {
        let mut out = String::new();
        for (short, long) in &self.name_map {
            let _ = writeln!(out, "{short} {long}");
        }
        out
    }
}

/// Shortens names to at most 8 printable characters, uniquely.
fn short_names<'a>(names: impl Iterator<Item = &'a str>, prefix: char, taken: &mut HashSet<String>) -> Vec<String> {
    let names: Vec<&str> = names.collect();
    let mut out = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let usable =
            !name.is_empty() && name.len() <= 8 && name.chars().all(|c| c.is_ascii_graphic()) && !taken.contains(*name);
        let short = if usable {
            name.to_string()
        } else {
            let mut k = i;
            loop {
                let cand = format!("{prefix}{k:07}");
                if !taken.contains(&cand) {
                    break cand;
                }
                k += names.len();
            }
        };
        taken.insert(short.clone());
        out.push(short);
    }
    out
}

/// Formats a number into at most 12 characters.
fn num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for digits in (0..=10).rev() {
        let s = format!("{v:.digits$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:e}")
}

fn field_line(out: &mut String, code: &str, f1: &str, f2: &str, f3: &str) {
    let _ = writeln!(out, " {code:<2} {f1:<8}  {f2:<8}  {f3:>12}");
}

/// Writes `model` in fixed MPS format.
pub fn export_mps(model: &LinearModel, name: &str) -> MpsExport {
    let mut taken: HashSet<String> = HashSet::new();
    taken.insert(OBJ_ROW.to_string());
    let cols = short_names(model.variables().iter().map(|v| v.name.as_str()), 'C', &mut taken);
    let rows = short_names(model.constraints().iter().map(|c| c.name.as_str()), 'R', &mut taken);

    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", name.chars().take(8).collect::<String>());
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (c, short) in model.constraints().iter().zip(&rows) {
        let code = match c.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        let _ = writeln!(out, " {code}  {short}");
    }

    // Column-major entries.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_variables()];
    for (i, c) in model.constraints().iter().enumerate() {
        for &(v, a) in &c.row {
            by_col[v.index()].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, entries) in by_col.iter().enumerate() {
        let cost = model.objective()[j];
        let mut pairs: Vec<(&str, f64)> = Vec::new();
        if cost != 0.0 || entries.is_empty() {
            pairs.push((OBJ_ROW, cost));
        }
        for &(i, a) in entries {
            pairs.push((rows[i].as_str(), a));
        }
        for chunk in pairs.chunks(2) {
            let mut line = format!("    {:<8}  {:<8}  {:>12}", cols[j], chunk[0].0, num(chunk[0].1));
            if let Some(&(r, a)) = chunk.get(1) {
                let _ = write!(line, "   {:<8}  {:>12}", r, num(a));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }

    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        // Solvers read the objective-row RHS as the negated constant.
        field_line(&mut out, "", "RHS", OBJ_ROW, &num(-model.objective_constant()));
    }
    for (c, short) in model.constraints().iter().zip(&rows) {
        if c.rhs != 0.0 {
            let line = format!("    {:<8}  {:<8}  {:>12}", "RHS", short, num(c.rhs));
            out.push_str(&line);
            out.push('\n');
        }
    }

    out.push_str("BOUNDS\n");
    for (v, short) in model.variables().iter().zip(&cols) {
        let (l, u) = (v.lower, v.upper);
        if l == u {
            field_line(&mut out, "FX", "BND", short, &num(l));
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " FR BND       {short}");
        } else {
            if l == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND       {short}");
            } else if l != 0.0 {
                field_line(&mut out, "LO", "BND", short, &num(l));
            }
            if u.is_finite() {
                field_line(&mut out, "UP", "BND", short, &num(u));
            }
        }
    }
    out.push_str("ENDATA\n");

    let mut name_map: Vec<(String, String)> = Vec::new();
    for (v, short) in model.variables().iter().zip(&cols) {
        name_map.push((short.clone(), v.name.clone()));
    }
    for (c, short) in model.constraints().iter().zip(&rows) {
        name_map.push((short.clone(), c.name.clone()));
    }
    MpsExport { text: out, name_map }
}

/// Plain-text listing of the model for review.
pub fn review_text(model: &LinearModel) -> String {
    let mut out = String::new();
    let term = |out: &mut String, first: bool, coef: f64, name: &str| {
        let sign = if coef < 0.0 {
            "-"
        } else if first {
            ""
        } else {
            "+"
        };
        let mag = coef.abs();
        if mag == 1.0 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {mag} {name}");
        }
    };
    out.push_str("minimize\n  obj:");
    let mut first = true;
    for (j, &c) in model.objective().iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &model.variables()[j].name);
            first = false;
        }
    }
    if model.objective_constant() != 0.0 || first {
        let _ = write!(out, " + {}", model.objective_constant());
    }
    out.push_str("\nsubject to\n");
    for c in model.constraints() {
        let _ = write!(out, "  {}:", c.name);
        let mut first = true;
        for &(v, a) in &c.row {
            term(&mut out, first, a, &model.variables()[v.index()].name);
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        let _ = writeln!(out, " {} {}", c.relation, c.rhs);
    }
    out.push_str("bounds\n");
    for v in model.variables() {
        let _ = writeln!(out, "  {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    out.push_str("end\n");
    out
}
