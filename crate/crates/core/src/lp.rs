//! Linear 0-1 models and their LP text representation.
//!
//! The writer emits a deterministic subset of the LP file format
//! (`Minimize`, `Subject To`, `Bounds`, `Binaries`, `Generals`, `End`):
//! one constraint per line, constraints and terms sorted by name, explicit
//! coefficients, LF line endings, and numeric literals limited to 12
//! significant digits. [`parse_lp`] reads exactly that subset back, so
//! write -> parse -> write is a fixpoint. [`evaluate_against`] substitutes
//! a variable assignment into every row for external cross-checking.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Comparison slack when checking rows under an assignment.
pub const LP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn binary() -> Self {
        Variable { kind: VarKind::Binary, lower: 0.0, upper: 1.0 }
    }

    pub fn integer(lower: f64, upper: f64) -> Self {
        Variable { kind: VarKind::Integer, lower, upper }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// One named linear row: `terms <op> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimization model over named variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearModel {
    /// Header comment lines, written with a leading backslash.
    pub comments: Vec<String>,
    pub objective: Vec<(f64, String)>,
    pub variables: BTreeMap<String, Variable>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("constraint {constraint} references undeclared variable {variable}")]
    UndeclaredVariable { constraint: String, variable: String },
    #[error("duplicate constraint name {0}")]
    DuplicateConstraint(String),
    #[error("name {0} exceeds 255 characters")]
    NameTooLong(String),
    #[error("LP text, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("assignment names unknown variable {0}")]
    UnknownAssignmentVariable(String),
    #[error("binary variable {name} has non-binary value {value}")]
    FractionalBinary { name: String, value: f64 },
    #[error("integer variable {name} has fractional value {value}")]
    FractionalInteger { name: String, value: f64 },
    #[error("model would need {vars} variables, over the budget of {budget}")]
    ModelTooLarge { vars: usize, budget: usize },
    #[error("assignment text, line {line}: {message}")]
    Assignment { line: usize, message: String },
}

/// Result of substituting an assignment into a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Names of violated rows; `bounds(name)` entries flag range breaks.
    pub violated: Vec<String>,
    pub warnings: Vec<String>,
}

impl LinearModel {
    pub fn validate(&self) -> Result<(), LpError> {
        let mut seen = BTreeMap::new();
        for c in &self.constraints {
            if c.name.len() > 255 {
                return Err(LpError::NameTooLong(c.name.clone()));
            }
            if seen.insert(&c.name, ()).is_some() {
                return Err(LpError::DuplicateConstraint(c.name.clone()));
            }
            for (_, v) in &c.terms {
                if !self.variables.contains_key(v) {
                    return Err(LpError::UndeclaredVariable {
                        constraint: c.name.clone(),
                        variable: v.clone(),
                    });
                }
            }
        }
        for name in self.variables.keys() {
            if name.len() > 255 {
                return Err(LpError::NameTooLong(name.clone()));
            }
        }
        for (_, v) in &self.objective {
            if !self.variables.contains_key(v) {
                return Err(LpError::UndeclaredVariable {
                    constraint: "objective".into(),
                    variable: v.clone(),
                });
            }
        }
        Ok(())
    }

    /// Render the deterministic LP text.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            writeln!(s, "\\ {c}").unwrap();
        }
        s.push_str("Minimize\n");
        let mut obj = self.objective.clone();
        obj.sort_by(|a, b| a.1.cmp(&b.1));
        s.push_str(" obj:");
        write_terms(&mut s, &obj);
        s.push('\n');

        s.push_str("Subject To\n");
        let mut rows: Vec<&Constraint> = self.constraints.iter().collect();
        rows.sort_by(|a, b| a.name.cmp(&b.name));
        for c in rows {
            let mut terms = c.terms.clone();
            terms.sort_by(|a, b| a.1.cmp(&b.1));
            write!(s, " {}:", c.name).unwrap();
            write_terms(&mut s, &terms);
            writeln!(s, " {} {}", c.relation.symbol(), fmt_num(c.rhs)).unwrap();
        }

        let bounded: Vec<(&String, &Variable)> = self
            .variables
            .iter()
            .filter(|(_, v)| v.kind == VarKind::Integer || v.kind == VarKind::Continuous)
            .filter(|(_, v)| v.lower != 0.0 || v.upper.is_finite())
            .collect();
        if !bounded.is_empty() {
            s.push_str("Bounds\n");
            for (name, v) in bounded {
                writeln!(s, " {} <= {} <= {}", fmt_num(v.lower), name, fmt_num(v.upper)).unwrap();
            }
        }

        let binaries: Vec<&String> = self
            .variables
            .iter()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(n, _)| n)
            .collect();
        if !binaries.is_empty() {
            s.push_str("Binaries\n");
            write_name_list(&mut s, &binaries);
        }
        let generals: Vec<&String> = self
            .variables
            .iter()
            .filter(|(_, v)| v.kind == VarKind::Integer)
            .map(|(n, _)| n)
            .collect();
        if !generals.is_empty() {
            s.push_str("Generals\n");
            write_name_list(&mut s, &generals);
        }
        s.push_str("End\n");
        s
    }
}

fn write_terms(s: &mut String, terms: &[(f64, String)]) {
    if terms.is_empty() {
        s.push_str(" 0");
        return;
    }
    for (i, (coef, var)) in terms.iter().enumerate() {
        if i == 0 {
            if *coef < 0.0 {
                write!(s, " - {} {}", fmt_num(-coef), var).unwrap();
            } else {
                write!(s, " {} {}", fmt_num(*coef), var).unwrap();
            }
        } else if *coef < 0.0 {
            write!(s, " - {} {}", fmt_num(-coef), var).unwrap();
        } else {
            write!(s, " + {} {}", fmt_num(*coef), var).unwrap();
        }
    }
}

fn write_name_list(s: &mut String, names: &[&String]) {
    let mut line_len = 0usize;
    for name in names {
        if line_len == 0 {
            write!(s, " {name}").unwrap();
            line_len = 1 + name.len();
        } else if line_len + 1 + name.len() > 78 {
            writeln!(s).unwrap();
            write!(s, " {name}").unwrap();
            line_len = 1 + name.len();
        } else {
            write!(s, " {name}").unwrap();
            line_len += 1 + name.len();
        }
    }
    writeln!(s).unwrap();
}

/// Format with at most 12 significant digits, no exponent notation.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e12 {
        return format!("{}", x as i64);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Minimize,
    SubjectTo,
    Bounds,
    Binaries,
    Generals,
    Done,
}

/// Strict reader for the writer's LP subset.
pub fn parse_lp(text: &str) -> Result<LinearModel, LpError> {
    let mut model = LinearModel::default();
    let mut section = Section::Preamble;
    let mut binaries: Vec<String> = Vec::new();
    let mut generals: Vec<String> = Vec::new();
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| LpError::Parse { line: line_no, message };
        if let Some(comment) = raw.strip_prefix('\\') {
            model.comments.push(comment.trim_start_matches(' ').to_string());
            continue;
        }
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        match line {
            "Minimize" => {
                section = Section::Minimize;
                continue;
            }
            "Subject To" => {
                section = Section::SubjectTo;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "Binaries" => {
                section = Section::Binaries;
                continue;
            }
            "Generals" => {
                section = Section::Generals;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble | Section::Done => {
                return Err(err(format!("unexpected content: {line}")));
            }
            Section::Minimize => {
                let body = line
                    .trim_start()
                    .strip_prefix("obj:")
                    .ok_or_else(|| err("objective line must start with 'obj:'".into()))?;
                model.objective = parse_terms(body, line_no)?;
            }
            Section::SubjectTo => {
                let trimmed = line.trim_start();
                let colon = trimmed
                    .find(':')
                    .ok_or_else(|| err("constraint line needs 'name:'".into()))?;
                let name = trimmed[..colon].to_string();
                let rest = &trimmed[colon + 1..];
                let (lhs, relation, rhs) = split_relation(rest, line_no)?;
                model.constraints.push(Constraint {
                    name,
                    terms: parse_terms(lhs, line_no)?,
                    relation,
                    rhs,
                });
            }
            Section::Bounds => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 5 || toks[1] != "<=" || toks[3] != "<=" {
                    return Err(err("bounds line must read 'lo <= name <= hi'".into()));
                }
                let lo = parse_number(toks[0], line_no)?;
                let hi = parse_number(toks[4], line_no)?;
                bounds.push((toks[2].to_string(), lo, hi));
            }
            Section::Binaries => {
                binaries.extend(line.split_whitespace().map(str::to_string));
            }
            Section::Generals => {
                generals.extend(line.split_whitespace().map(str::to_string));
            }
        }
    }

    for name in binaries {
        model.variables.insert(name, Variable::binary());
    }
    for name in generals {
        model.variables.insert(name, Variable::integer(0.0, f64::INFINITY));
    }
    for (name, lo, hi) in bounds {
        match model.variables.get_mut(&name) {
            Some(v) => {
                v.lower = lo;
                v.upper = hi;
            }
            None => {
                model
                    .variables
                    .insert(name, Variable { kind: VarKind::Continuous, lower: lo, upper: hi });
            }
        }
    }
    // Variables only mentioned in rows default to free continuous.
    let mentioned: Vec<String> = model
        .constraints
        .iter()
        .flat_map(|c| c.terms.iter().map(|(_, v)| v.clone()))
        .chain(model.objective.iter().map(|(_, v)| v.clone()))
        .collect();
    for name in mentioned {
        model.variables.entry(name).or_insert(Variable {
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    Ok(model)
}

fn split_relation(rest: &str, line: usize) -> Result<(&str, Relation, f64), LpError> {
    for (sym, rel) in [("<=", Relation::Le), (">=", Relation::Ge), ("=", Relation::Eq)] {
        if let Some(pos) = rest.rfind(&format!(" {sym} ")) {
            let lhs = &rest[..pos];
            let rhs_text = rest[pos + sym.len() + 2..].trim();
            let rhs = parse_number(rhs_text, line)?;
            return Ok((lhs, rel, rhs));
        }
    }
    Err(LpError::Parse { line, message: "constraint line lacks a relation".into() })
}

fn parse_terms(body: &str, line: usize) -> Result<Vec<(f64, String)>, LpError> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    let mut terms = Vec::new();
    let mut i = 0;
    if toks == ["0"] {
        return Ok(terms);
    }
    let mut sign = 1.0;
    while i < toks.len() {
        match toks[i] {
            "+" => {
                sign = 1.0;
                i += 1;
            }
            "-" => {
                sign = -1.0;
                i += 1;
            }
            _ => {}
        }
        if i + 1 >= toks.len() {
            return Err(LpError::Parse { line, message: "dangling coefficient".into() });
        }
        let coef = sign * parse_number(toks[i], line)?;
        let var = toks[i + 1].to_string();
        terms.push((coef, var));
        sign = 1.0;
        i += 2;
    }
    Ok(terms)
}

fn parse_number(tok: &str, line: usize) -> Result<f64, LpError> {
    match tok {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse::<f64>()
            .map_err(|_| LpError::Parse { line, message: format!("bad number {tok}") }),
    }
}

/// Substitute an assignment and collect the names of violated rows.
/// Missing variables default to 0 with a warning; unknown names and
/// non-integral values for discrete variables are errors.
pub fn evaluate_against(
    model: &LinearModel,
    assignment: &BTreeMap<String, f64>,
) -> Result<Evaluation, LpError> {
    for name in assignment.keys() {
        if !model.variables.contains_key(name) {
            return Err(LpError::UnknownAssignmentVariable(name.clone()));
        }
    }
    let mut warnings = Vec::new();
    let mut values: BTreeMap<&str, f64> = BTreeMap::new();
    for (name, var) in &model.variables {
        let v = match assignment.get(name) {
            Some(&v) => v,
            None => {
                warnings.push(format!("variable {name} missing from assignment; using 0"));
                0.0
            }
        };
        match var.kind {
            VarKind::Binary => {
                if (v - 0.0).abs() > LP_EPS && (v - 1.0).abs() > LP_EPS {
                    return Err(LpError::FractionalBinary { name: name.clone(), value: v });
                }
            }
            VarKind::Integer => {
                if (v - v.round()).abs() > LP_EPS {
                    return Err(LpError::FractionalInteger { name: name.clone(), value: v });
                }
            }
            VarKind::Continuous => {}
        }
        values.insert(name, v);
    }

    let mut violated = Vec::new();
    for (name, var) in &model.variables {
        let v = values[name.as_str()];
        if v < var.lower - LP_EPS || v > var.upper + LP_EPS {
            violated.push(format!("bounds({name})"));
        }
    }
    for c in &model.constraints {
        let lhs: f64 = c.terms.iter().map(|(coef, v)| coef * values[v.as_str()]).sum();
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs + LP_EPS,
            Relation::Ge => lhs >= c.rhs - LP_EPS,
            Relation::Eq => (lhs - c.rhs).abs() <= LP_EPS,
        };
        if !ok {
            violated.push(c.name.clone());
        }
    }
    violated.sort();
    Ok(Evaluation { violated, warnings })
}

/// Objective value of an assignment (missing variables count 0).
pub fn evaluate_objective(model: &LinearModel, assignment: &BTreeMap<String, f64>) -> f64 {
    model
        .objective
        .iter()
        .map(|(coef, v)| coef * assignment.get(v).copied().unwrap_or(0.0))
        .sum()
}

/// Parse `name value` lines into an assignment map.
pub fn parse_assignment(text: &str) -> Result<BTreeMap<String, f64>, LpError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (name, value) = match (it.next(), it.next(), it.next()) {
            (Some(n), Some(v), None) => (n, v),
            _ => {
                return Err(LpError::Assignment {
                    line: idx + 1,
                    message: "expected 'name value'".into(),
                })
            }
        };
        let value = value.parse::<f64>().map_err(|_| LpError::Assignment {
            line: idx + 1,
            message: format!("bad number {value}"),
        })?;
        map.insert(name.to_string(), value);
    }
    Ok(map)
}

/// Render an assignment as sorted `name value` lines.
pub fn write_assignment(assignment: &BTreeMap<String, f64>) -> String {
    let mut s = String::new();
    for (name, value) in assignment {
        writeln!(s, "{name} {}", fmt_num(*value)).unwrap();
    }
    s
}
