//! Scenario files, batch commands and the incremental elicitation session.
//!
//! A scenario is line-oriented text with `#` comments:
//!
//! ```text
//! [variables]
//! M: bool
//! TEMP: low, med, high
//!
//! [constants]
//! c = 0.6
//!
//! [config]
//! grid = 256
//! independence = off
//!
//! [constraints]
//! Bel(M | P) = c
//!
//! [constraints.independence]      # included only while the flag is on
//! Bel(~P | ~M) = Bel(~P | ~M /\ E)
//!
//! [calibration]
//! 51 43 4
//!
//! [queries]
//! m_pe: Bel(M | P /\ E)
//! s: surprise(~FLY | BIRD)
//!
//! [masses]
//! m(X=T \/ X=J \/ X=P) = 0.6
//! ```

use std::collections::VecDeque;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::belief::{BeliefError, MassFunction};
use crate::calibration::{CalibrationCurve, CalibrationError};
use crate::constraints::{
    self, BelTerm, CompileOptions, CompiledSystem, Constraint, Interval, QueryError,
};
use crate::frames::{is_identifier, Formula, ParseError, ProductFrame, Subset};

pub const HISTORY_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

impl ScenarioError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ScenarioError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn shifted(line: usize, offset: usize, e: ParseError) -> Self {
        ScenarioError::at(line, offset + e.column, e.message)
    }
}

/// A named query of the `[queries]` section.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Belief(BelTerm),
    /// Surprise at `event` occurring, given `given`.
    Surprise { event: Formula, given: Option<Formula> },
}

impl Query {
    /// `Bel(...)` or `surprise(E)` / `surprise(E | G)`.
    pub fn parse(text: &str, frame: &Arc<ProductFrame>) -> Result<Self, ParseError> {
        let trimmed = text.trim_start();
        let lead = text.len() - trimmed.len();
        if let Some(rest) = trimmed.strip_prefix("surprise") {
            // reuse the term grammar: `surprise(E | G)` reads like `Bel(E | G)`
            let as_term = format!("Bel{rest}");
            let shift = |e: ParseError| {
                let column = if e.column > 3 { e.column + 5 } else { 1 } + lead;
                ParseError::new(column, e.message)
            };
            let term = BelTerm::parse(&as_term, frame).map_err(shift)?;
            return Ok(Query::Surprise {
                event: term.target,
                given: term.evidence,
            });
        }
        BelTerm::parse(text, frame).map(Query::Belief)
    }

    pub fn display<'a>(&'a self, frame: &'a ProductFrame) -> impl fmt::Display + 'a {
        QueryDisplay { q: self, frame }
    }
}

struct QueryDisplay<'a> {
    q: &'a Query,
    frame: &'a ProductFrame,
}

impl fmt::Display for QueryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.q {
            Query::Belief(t) => write!(f, "{}", t.display(self.frame)),
            Query::Surprise { event, given } => {
                write!(f, "surprise({}", event.display(self.frame))?;
                if let Some(g) = given {
                    write!(f, " | {}", g.display(self.frame))?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub grid: usize,
    pub max_theta: usize,
    pub max_parameters: usize,
    /// Named on/off switches in declaration order.
    pub flags: Vec<(String, bool)>,
}

impl Default for Config {
    fn default() -> Self {
        let o = CompileOptions::default();
        Config {
            grid: o.grid,
            max_theta: o.max_theta,
            max_parameters: o.max_parameters,
            flags: Vec::new(),
        }
    }
}

impl Config {
    pub fn flag(&self, name: &str) -> Option<bool> {
        self.flags.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            grid: self.grid,
            max_theta: self.max_theta,
            max_parameters: self.max_parameters,
            ..CompileOptions::default()
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let number = |v: &str| -> Result<usize, String> {
            match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(format!("`{key}` needs a positive integer, got `{v}`")),
            }
        };
        match key {
            "grid" => self.grid = number(value)?,
            "max-theta" => self.max_theta = number(value)?,
            "max-parameters" => self.max_parameters = number(value)?,
            _ => {
                let on = parse_switch(value).ok_or_else(|| format!("`{key}` needs on or off, got `{value}`"))?;
                match self.flags.iter_mut().find(|(n, _)| n == key) {
                    Some(entry) => entry.1 = on,
                    None => self.flags.push((key.to_string(), on)),
                }
            }
        }
        Ok(())
    }
}

fn parse_switch(v: &str) -> Option<bool> {
    match v {
        "on" | "true" | "yes" => Some(true),
        "off" | "false" | "no" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub frame: Arc<ProductFrame>,
    pub constants: Vec<(String, f64)>,
    pub config: Config,
    /// Active constraints, constants substituted.
    pub constraints: Vec<Constraint>,
    pub calibration_entries: Vec<(u64, u64, f64)>,
    pub calibration: Option<CalibrationCurve>,
    pub queries: Vec<(String, Query)>,
    /// Declared focal elements, kept with the formula they were written as.
    pub masses: Vec<(Formula, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Variables,
    Constants,
    Config,
    Constraints,
    Calibration,
    Queries,
    Masses,
}

struct Line<'a> {
    number: usize,
    /// Char offset of `text` within the source line.
    offset: usize,
    text: &'a str,
}

fn strip_comment(raw: &str) -> &str {
    raw.split_once('#').map_or(raw, |(a, _)| a)
}

fn trimmed_line(number: usize, raw: &str) -> Option<Line<'_>> {
    let body = strip_comment(raw);
    let text = body.trim();
    if text.is_empty() {
        return None;
    }
    let offset = body[..body.len() - body.trim_start().len()].chars().count();
    Some(Line { number, offset, text })
}

/// Splits `a <sep> b` keeping the char offset of `b` within the line.
fn split_at<'a>(line: &Line<'a>, sep: char) -> Option<(&'a str, usize, &'a str)> {
    let (a, b) = line.text.split_once(sep)?;
    let b_trim = b.trim_start();
    let offset = line.offset + a.chars().count() + 1 + (b.len() - b_trim.len());
    Some((a.trim(), offset, b_trim.trim_end()))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Self::parse_with(text, &[])
    }

    /// Parses `text`, with `overrides` replacing constants and config values.
    pub fn parse_with(text: &str, overrides: &[(String, String)]) -> Result<Self, ScenarioError> {
        let mut sections: Vec<(Section, Option<String>, Vec<Line<'_>>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let number = i + 1;
            let Some(line) = trimmed_line(number, raw) else { continue };
            if let Some(header) = line.text.strip_prefix('[') {
                let name = header
                    .strip_suffix(']')
                    .ok_or_else(|| ScenarioError::at(number, line.offset + 1, "section header needs a closing `]`"))?
                    .trim();
                let (section, flag) = match name {
                    "variables" => (Section::Variables, None),
                    "constants" => (Section::Constants, None),
                    "config" => (Section::Config, None),
                    "constraints" => (Section::Constraints, None),
                    "calibration" => (Section::Calibration, None),
                    "queries" => (Section::Queries, None),
                    "masses" => (Section::Masses, None),
                    _ => match name.strip_prefix("constraints.") {
                        Some(flag) if is_identifier(flag) => (Section::Constraints, Some(flag.to_string())),
                        _ => {
                            return Err(ScenarioError::at(number, line.offset + 1, format!("unknown section `[{name}]`")))
                        }
                    },
                };
                sections.push((section, flag, Vec::new()));
                continue;
            }
            match sections.last_mut() {
                Some((_, _, lines)) => lines.push(line),
                None => {
                    return Err(ScenarioError::at(number, line.offset + 1, "content before the first section header"))
                }
            }
        }
        let of = |s: Section| sections.iter().filter(move |(k, _, _)| *k == s);

        // variables
        let mut variables: Vec<(String, Vec<String>)> = Vec::new();
        let mut last_line = 0;
        for (_, _, lines) in of(Section::Variables) {
            for line in lines {
                last_line = line.number;
                let (name, offset, values) = split_at(line, ':')
                    .ok_or_else(|| ScenarioError::at(line.number, line.offset + 1, "expected `NAME: value, value` or `NAME: bool`"))?;
                if !is_identifier(name) {
                    return Err(ScenarioError::at(line.number, line.offset + 1, format!("`{name}` is not a valid variable name")));
                }
                let values: Vec<String> = if values == "bool" {
                    vec!["Yes".into(), "No".into()]
                } else {
                    values.split(',').map(|v| v.trim().to_string()).collect()
                };
                if let Some(bad) = values.iter().find(|v| !is_identifier(v)) {
                    return Err(ScenarioError::at(line.number, offset + 1, format!("`{bad}` is not a valid value name")));
                }
                variables.push((name.to_string(), values));
            }
        }
        let frame = ProductFrame::new(variables).map_err(|e| ScenarioError::at(last_line.max(1), 1, e.to_string()))?;

        // constants and config, then overrides
        let mut constants: Vec<(String, Option<f64>, usize)> = Vec::new();
        for (_, _, lines) in of(Section::Constants) {
            for line in lines {
                let (name, value) = match split_at(line, '=') {
                    Some((name, offset, value)) => {
                        let v = value
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| ScenarioError::at(line.number, offset + 1, format!("`{value}` is not a number")))?;
                        (name, Some(v))
                    }
                    None => (line.text, None),
                };
                if !is_identifier(name) {
                    return Err(ScenarioError::at(line.number, line.offset + 1, format!("`{name}` is not a valid constant name")));
                }
                if constants.iter().any(|(n, _, _)| n == name) {
                    return Err(ScenarioError::at(line.number, line.offset + 1, format!("constant `{name}` declared twice")));
                }
                constants.push((name.to_string(), value, line.number));
            }
        }
        let mut config = Config::default();
        for (_, _, lines) in of(Section::Config) {
            for line in lines {
                let (key, offset, value) = split_at(line, '=')
                    .ok_or_else(|| ScenarioError::at(line.number, line.offset + 1, "expected `key = value`"))?;
                config.set(key, value).map_err(|m| ScenarioError::at(line.number, offset + 1, m))?;
            }
        }
        for (name, value) in overrides {
            if let Some(entry) = constants.iter_mut().find(|(n, _, _)| n == name) {
                let v = value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ScenarioError::Usage(format!("--set {name}: `{value}` is not a number")))?;
                entry.1 = Some(v);
            } else if matches!(name.as_str(), "grid" | "max-theta" | "max-parameters") || config.flag(name).is_some() {
                config.set(name, value).map_err(|m| ScenarioError::Usage(format!("--set {name}: {m}")))?;
            } else {
                return Err(ScenarioError::Usage(format!("--set {name}: no constant or config value of that name")));
            }
        }
        let constants: Vec<(String, f64)> = constants
            .into_iter()
            .map(|(n, v, line)| {
                v.map(|v| (n.clone(), v))
                    .ok_or_else(|| ScenarioError::at(line, 1, format!("constant `{n}` has no value; give one with --set {n}=...")))
            })
            .collect::<Result<_, _>>()?;
        let lookup = |name: &str| constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v);

        // constraints
        let mut constraints = Vec::new();
        for (_, flag, lines) in of(Section::Constraints) {
            let active = match flag {
                None => true,
                Some(flag) => config.flag(flag).unwrap_or(false),
            };
            for line in lines {
                let c = Constraint::parse(line.text, &frame, &lookup)
                    .map_err(|e| ScenarioError::shifted(line.number, line.offset, e))?;
                if active {
                    constraints.push(c);
                }
            }
        }

        // calibration
        let mut calibration_entries = Vec::new();
        let mut calibration_line = None;
        for (_, _, lines) in of(Section::Calibration) {
            for line in lines {
                calibration_line.get_or_insert(line.number);
                let parts: Vec<&str> = line.text.split_whitespace().collect();
                let bad = || ScenarioError::at(line.number, line.offset + 1, "expected `x y surprise` with positive integers x, y");
                if parts.len() != 3 {
                    return Err(bad());
                }
                let x = parts[0].parse::<u64>().map_err(|_| bad())?;
                let y = parts[1].parse::<u64>().map_err(|_| bad())?;
                let s = parts[2].parse::<f64>().map_err(|_| bad())?;
                calibration_entries.push((x, y, s));
            }
        }
        let calibration = match calibration_line {
            None => None,
            Some(line) => Some(CalibrationCurve::new(&calibration_entries).map_err(|e| ScenarioError::at(line, 1, e.to_string()))?),
        };

        // queries
        let mut queries: Vec<(String, Query)> = Vec::new();
        for (_, _, lines) in of(Section::Queries) {
            for line in lines {
                let (name, offset, body) = split_at(line, ':')
                    .ok_or_else(|| ScenarioError::at(line.number, line.offset + 1, "expected `name: Bel(...)`"))?;
                if !is_identifier(name) {
                    return Err(ScenarioError::at(line.number, line.offset + 1, format!("`{name}` is not a valid query name")));
                }
                if queries.iter().any(|(n, _)| n == name) {
                    return Err(ScenarioError::at(line.number, line.offset + 1, format!("query `{name}` declared twice")));
                }
                let q = Query::parse(body, &frame).map_err(|e| ScenarioError::shifted(line.number, offset, e))?;
                queries.push((name.to_string(), q));
            }
        }

        // masses
        let mut masses = Vec::new();
        for (_, _, lines) in of(Section::Masses) {
            for line in lines {
                let bad = |column: usize| ScenarioError::at(line.number, column, "expected `m(formula) = value`");
                let (lhs, value) = line.text.rsplit_once('=').ok_or_else(|| bad(line.offset + 1))?;
                let inner = lhs
                    .trim()
                    .strip_prefix("m(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| bad(line.offset + 1))?;
                let value_col = line.offset + lhs.chars().count() + 2;
                let value = value.trim().parse::<f64>().map_err(|_| bad(value_col))?;
                let f = crate::frames::parse_formula(inner, &frame)
                    .map_err(|e| ScenarioError::shifted(line.number, line.offset + 2, e))?;
                masses.push((f, value));
            }
        }

        let scenario = Scenario {
            frame,
            constants,
            config,
            constraints,
            calibration_entries,
            calibration,
            queries,
            masses,
        };
        if !scenario.masses.is_empty() {
            scenario.mass_function()?;
        }
        Ok(scenario)
    }

    pub fn load(path: &std::path::Path, overrides: &[(String, String)]) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_with(&text, overrides)
    }

    pub fn compile(&self) -> Result<CompiledSystem, ScenarioError> {
        constraints::compile(&self.constraints, &self.frame, &self.config.compile_options())
            .map_err(|e| ScenarioError::Query(e.into()))
    }

    /// The `[masses]` section as a mass function, if present.
    pub fn mass_function(&self) -> Result<Option<MassFunction>, ScenarioError> {
        if self.masses.is_empty() {
            return Ok(None);
        }
        let focals = self.masses.iter().map(|(f, v)| (f.extension(&self.frame), *v));
        Ok(Some(MassFunction::new(&self.frame, focals)?))
    }

    /// Replayable text form: constants already substituted, inactive
    /// flagged sections dropped.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[variables]\n");
        for v in self.frame.variables() {
            if v.is_boolean() && v.values() == ["Yes", "No"] {
                let _ = writeln!(out, "{}: bool", v.name());
            } else {
                let _ = writeln!(out, "{}: {}", v.name(), v.values().join(", "));
            }
        }
        if !self.constants.is_empty() {
            out.push_str("\n[constants]\n");
            for (n, v) in &self.constants {
                let _ = writeln!(out, "{n} = {v}");
            }
        }
        out.push_str("\n[config]\n");
        let _ = writeln!(out, "grid = {}", self.config.grid);
        let _ = writeln!(out, "max-theta = {}", self.config.max_theta);
        let _ = writeln!(out, "max-parameters = {}", self.config.max_parameters);
        for (n, on) in &self.config.flags {
            let _ = writeln!(out, "{n} = {}", if *on { "on" } else { "off" });
        }
        out.push_str("\n[constraints]\n");
        for c in &self.constraints {
            let _ = writeln!(out, "{}", c.display(&self.frame));
        }
        if !self.calibration_entries.is_empty() {
            out.push_str("\n[calibration]\n");
            for (x, y, s) in &self.calibration_entries {
                let _ = writeln!(out, "{x} {y} {s}");
            }
        }
        if !self.queries.is_empty() {
            out.push_str("\n[queries]\n");
            for (n, q) in &self.queries {
                let _ = writeln!(out, "{n}: {}", q.display(&self.frame));
            }
        }
        if !self.masses.is_empty() {
            out.push_str("\n[masses]\n");
            for (f, v) in &self.masses {
                let _ = writeln!(out, "m({}) = {v}", f.display(&self.frame));
            }
        }
        out
    }

    fn parse_query(&self, text: &str) -> Result<(String, Query), ScenarioError> {
        if let Some((n, q)) = self.queries.iter().find(|(n, _)| n == text.trim()) {
            return Ok((n.clone(), q.clone()));
        }
        let q = Query::parse(text, &self.frame).map_err(|e| ScenarioError::Usage(format!("query `{text}`: {e}")))?;
        let name = q.display(&self.frame).to_string();
        Ok((name, q))
    }

    fn parse_formula(&self, text: &str) -> Result<Formula, ScenarioError> {
        crate::frames::parse_formula(text, &self.frame).map_err(|e| ScenarioError::Usage(format!("formula `{text}`: {e}")))
    }
}

/// A batch operation over a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Check,
    /// A query by name or text; every scenario query when absent.
    Bounds { query: Option<String> },
    /// Condition the scenario's mass function on a formula.
    Condition { on: String },
    /// Surprise at `event` occurring, given `given`.
    Surprise { event: String, given: Option<String> },
    MinCommit,
    Classify,
    /// One ratio, or the whole curve when absent.
    Calibrate { ratio: Option<(u64, u64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Interval(Interval),
    Masses { focals: Vec<(String, f64)> },
    Boolean { value: bool },
    Value { value: f64 },
    Feasibility { feasible: bool, conflict: Vec<String> },
    /// No answer of the requested kind exists.
    Absent { reason: String },
    Undefined { reason: String },
}

/// One output record: `KIND query = outcome`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub kind: &'static str,
    pub query: String,
    pub outcome: Outcome,
}

impl QueryResult {
    fn new(kind: &'static str, query: impl Into<String>, outcome: Outcome) -> Self {
        QueryResult {
            kind,
            query: query.into(),
            outcome,
        }
    }

    /// Whether this result means "infeasible" or "undefined".
    pub fn is_failure(&self) -> bool {
        matches!(
            self.outcome,
            Outcome::Feasibility { feasible: false, .. } | Outcome::Undefined { .. }
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("results serialize")
    }
}

impl fmt::Display for QueryResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} = ", self.kind, self.query)?;
        match &self.outcome {
            Outcome::Interval(i) => write!(f, "{i}"),
            Outcome::Masses { focals } => {
                for (i, (s, m)) in focals.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{s} -> {m:.6}")?;
                }
                Ok(())
            }
            Outcome::Boolean { value } => write!(f, "{value}"),
            Outcome::Value { value } => write!(f, "{value:.6}"),
            Outcome::Feasibility { feasible: true, .. } => f.write_str("feasible"),
            Outcome::Feasibility { feasible: false, conflict } => {
                f.write_str("infeasible")?;
                for c in conflict {
                    write!(f, "\nCONFLICT {c}")?;
                }
                Ok(())
            }
            Outcome::Absent { reason } => write!(f, "none ({reason})"),
            Outcome::Undefined { reason } => write!(f, "undefined ({reason})"),
        }
    }
}

fn masses_outcome(m: &MassFunction) -> Outcome {
    Outcome::Masses {
        focals: m.focal_elements().map(|(s, v)| (s.to_string(), v)).collect(),
    }
}

/// Turns "no answer exists" errors into an undefined outcome.
fn soft<T>(r: Result<T, QueryError>) -> Result<Result<T, Outcome>, ScenarioError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (QueryError::Infeasible | QueryError::QueryUndefinedEverywhere))
        | Err(e @ QueryError::Belief(BeliefError::ConditioningUndefined)) => {
            Ok(Err(Outcome::Undefined { reason: e.to_string() }))
        }
        Err(e) => Err(e.into()),
    }
}

fn query_outcome(sys: &CompiledSystem, q: &Query) -> Result<Outcome, ScenarioError> {
    let r = match q {
        Query::Belief(t) => constraints::bounds(sys, t),
        Query::Surprise { event, given } => constraints::surprise_report(sys, event, given.as_ref()),
    };
    Ok(match soft(r)? {
        Ok(b) => Outcome::Interval(b.interval),
        Err(o) => o,
    })
}

fn numbered(scenario: &Scenario, idx: &[usize]) -> Vec<String> {
    idx.iter()
        .map(|&i| format!("#{} {}", i + 1, scenario.constraints[i].display(&scenario.frame)))
        .collect()
}

fn check(scenario: &Scenario) -> Result<QueryResult, ScenarioError> {
    let sys = scenario.compile()?;
    let feasible = constraints::feasible(&sys)?.is_feasible();
    let conflict = if feasible {
        Vec::new()
    } else {
        let opts = scenario.config.compile_options();
        let idx = constraints::why_infeasible(&scenario.constraints, &scenario.frame, &opts)?.unwrap_or_default();
        numbered(scenario, &idx)
    };
    Ok(QueryResult::new("CHECK", "constraints", Outcome::Feasibility { feasible, conflict }))
}

/// The scenario's declared masses, else its minimum-committed belief function.
fn source_masses(scenario: &Scenario) -> Result<Result<(MassFunction, &'static str), Outcome>, ScenarioError> {
    if let Some(m) = scenario.mass_function()? {
        return Ok(Ok((m, "masses")));
    }
    let sys = scenario.compile()?;
    Ok(match soft(constraints::mincommit(&sys))? {
        Ok(mc) => match mc.result {
            Some(m) => Ok((m, "mincommit")),
            None => Err(Outcome::Absent {
                reason: "no [masses] section and no minimum-committed belief function".into(),
            }),
        },
        Err(o) => Err(o),
    })
}

impl Command {
    pub fn run(&self, scenario: &Scenario) -> Result<Vec<QueryResult>, ScenarioError> {
        match self {
            Command::Check => Ok(vec![check(scenario)?]),
            Command::Bounds { query } => {
                let sys = scenario.compile()?;
                let queries = match query {
                    Some(text) => vec![scenario.parse_query(text)?],
                    None => scenario.queries.clone(),
                };
                queries
                    .iter()
                    .map(|(name, q)| Ok(QueryResult::new("QUERY", name.clone(), query_outcome(&sys, q)?)))
                    .collect()
            }
            Command::Condition { on } => {
                let b = scenario.parse_formula(on)?;
                let label = format!("condition({})", b.display(&scenario.frame));
                let (m, _) = match source_masses(scenario)? {
                    Ok(m) => m,
                    Err(o) => return Ok(vec![QueryResult::new("MASSES", label, o)]),
                };
                let evidence = b.extension(&scenario.frame);
                let k = 1.0 - m.belief(&evidence.complement())?;
                let outcome = match m.condition(&evidence) {
                    Ok(c) => masses_outcome(&c),
                    Err(e @ (BeliefError::ConditioningUndefined | BeliefError::EmptyEvidence)) => {
                        Outcome::Undefined { reason: e.to_string() }
                    }
                    Err(e) => return Err(e.into()),
                };
                Ok(vec![
                    QueryResult::new("VALUE", format!("K({})", b.display(&scenario.frame)), Outcome::Value { value: k }),
                    QueryResult::new("MASSES", label, outcome),
                ])
            }
            Command::Surprise { event, given } => {
                let e = scenario.parse_formula(event)?;
                let g = given.as_deref().map(|t| scenario.parse_formula(t)).transpose()?;
                let q = Query::Surprise { event: e, given: g };
                let label = q.display(&scenario.frame).to_string();
                let outcome = match scenario.mass_function()? {
                    Some(m) => {
                        let Query::Surprise { event, given } = &q else { unreachable!() };
                        let ev = event.extension(&scenario.frame);
                        let r = match given {
                            None => m.surprise(&ev),
                            Some(g) => m.conditional_surprise(&ev, &g.extension(&scenario.frame)),
                        };
                        match r {
                            Ok(v) => Outcome::Interval(Interval::closed(v, v)),
                            Err(e @ (BeliefError::ConditioningUndefined | BeliefError::EmptyEvidence)) => {
                                Outcome::Undefined { reason: e.to_string() }
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                    None => query_outcome(&scenario.compile()?, &q)?,
                };
                Ok(vec![QueryResult::new("SURPRISE", label, outcome)])
            }
            Command::MinCommit => {
                let sys = scenario.compile()?;
                let outcome = match soft(constraints::mincommit(&sys))? {
                    Ok(mc) => match mc.result {
                        Some(m) => masses_outcome(&m),
                        None if mc.negative_mass => Outcome::Absent {
                            reason: "lower envelope has negative Möbius mass".into(),
                        },
                        None => Outcome::Absent {
                            reason: "lower envelope violates the constraints".into(),
                        },
                    },
                    Err(o) => o,
                };
                Ok(vec![QueryResult::new("MINCOMMIT", "constraints", outcome)])
            }
            Command::Classify => {
                let (m, source) = match source_masses(scenario)? {
                    Ok(m) => m,
                    Err(o) => return Ok(vec![QueryResult::new("CLASSIFY", "masses", o)]),
                };
                let conjunctive = match m.is_conjunctive() {
                    Ok(v) => Outcome::Boolean { value: v },
                    Err(e @ BeliefError::FrameTooLarge { .. }) => Outcome::Undefined { reason: e.to_string() },
                    Err(e) => return Err(e.into()),
                };
                Ok(vec![
                    QueryResult::new("CLASSIFY", format!("vacuous({source})"), Outcome::Boolean { value: m.is_vacuous() }),
                    QueryResult::new("CLASSIFY", format!("consonant({source})"), Outcome::Boolean { value: m.is_consonant() }),
                    QueryResult::new("CLASSIFY", format!("conjunctive({source})"), conjunctive),
                ])
            }
            Command::Calibrate { ratio } => {
                let fallback;
                let curve = match &scenario.calibration {
                    Some(c) => c,
                    None => {
                        fallback = CalibrationCurve::new(&[])?;
                        &fallback
                    }
                };
                Ok(match ratio {
                    Some((x, y)) => vec![QueryResult::new(
                        "CALIBRATE",
                        format!("{x}:{y}"),
                        Outcome::Value {
                            value: curve.to_surprise(*x, *y)?,
                        },
                    )],
                    None => curve
                        .anchors()
                        .iter()
                        .map(|a| {
                            QueryResult::new(
                                "ANCHOR",
                                format!("{}:{}", a.ratio.0, a.ratio.1),
                                Outcome::Value { value: a.surprise },
                            )
                        })
                        .collect(),
                })
            }
        }
    }
}

/// Reply to one REPL line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reply {
    pub lines: Vec<String>,
    pub quit: bool,
}

impl Reply {
    fn text(lines: Vec<String>) -> Self {
        Reply { lines, quit: false }
    }
}

/// Incremental elicitation: assume and retract constraints, watching
/// feasibility and the bounds asked for so far.
#[derive(Debug, Clone)]
pub struct Session {
    scenario: Scenario,
    history: VecDeque<String>,
    /// Bounds queries asked so far, with their latest answers.
    tracked: Vec<(String, BelTerm, Option<Interval>)>,
}

pub const REPL_HELP: &str = "commands: assume <constraint> | retract <n> | bounds <Bel(...)> | why-infeasible | list | save <path> | quit";

impl Session {
    pub fn new(scenario: Scenario) -> Self {
        Session {
            scenario,
            history: VecDeque::new(),
            tracked: Vec::new(),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn history(&self) -> impl Iterator<Item = &str> {
        self.history.iter().map(String::as_str)
    }

    /// Scenario text with the asked bounds recorded as queries `q1`, `q2`, ...
    pub fn saved_text(&self) -> String {
        let mut s = self.scenario.clone();
        for (name, term, _) in &self.tracked {
            if !s.queries.iter().any(|(n, _)| n == name) {
                s.queries.push((name.clone(), Query::Belief(term.clone())));
            }
        }
        s.to_text()
    }

    pub fn handle_line(&mut self, line: &str) -> Reply {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Reply::default();
        }
        if self.history.len() == HISTORY_CAP {
            self.history.pop_front();
        }
        self.history.push_back(line.to_string());
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let result = match cmd {
            "assume" => self.assume(rest),
            "retract" => self.retract(rest),
            "bounds" => self.bounds(rest),
            "why-infeasible" => self.why(),
            "list" => Ok(self.list()),
            "save" => self.save(rest),
            "help" => Ok(vec![REPL_HELP.to_string()]),
            "quit" | "exit" => {
                return Reply {
                    lines: Vec::new(),
                    quit: true,
                }
            }
            _ => Err(ScenarioError::Usage(format!("unknown command `{cmd}`; {REPL_HELP}"))),
        };
        match result {
            Ok(lines) => Reply::text(lines),
            Err(e) => Reply::text(vec![format!("error: {e}")]),
        }
    }

    fn lookup(&self) -> impl Fn(&str) -> Option<f64> + '_ {
        |name| self.scenario.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn assume(&mut self, text: &str) -> Result<Vec<String>, ScenarioError> {
        let c = Constraint::parse(text, &self.scenario.frame, &self.lookup())
            .map_err(|e| ScenarioError::Usage(format!("constraint: {e}")))?;
        let mut trial = self.scenario.clone();
        trial.constraints.push(c);
        trial.compile()?;
        self.scenario = trial;
        let n = self.scenario.constraints.len();
        let mut out = vec![format!(
            "#{n} {}",
            self.scenario.constraints[n - 1].display(&self.scenario.frame)
        )];
        out.extend(self.status()?);
        Ok(out)
    }

    fn retract(&mut self, text: &str) -> Result<Vec<String>, ScenarioError> {
        let n: usize = text
            .parse()
            .ok()
            .filter(|n| (1..=self.scenario.constraints.len()).contains(n))
            .ok_or_else(|| ScenarioError::Usage(format!("retract needs a constraint number, got `{text}`")))?;
        let mut trial = self.scenario.clone();
        let c = trial.constraints.remove(n - 1);
        trial.compile()?;
        self.scenario = trial;
        let mut out = vec![format!("retracted #{n} {}", c.display(&self.scenario.frame))];
        out.extend(self.status()?);
        Ok(out)
    }

    /// Feasibility line, then any tracked bounds that changed.
    fn status(&mut self) -> Result<Vec<String>, ScenarioError> {
        let mut out = Vec::new();
        let check = check(&self.scenario)?;
        out.extend(check.to_string().lines().map(String::from));
        let sys = self.scenario.compile()?;
        for (name, term, last) in self.tracked.iter_mut() {
            let now = match soft(constraints::bounds(&sys, term))? {
                Ok(b) => Some(b.interval),
                Err(_) => None,
            };
            let same = match (&*last, &now) {
                (Some(a), Some(b)) => a.to_string() == b.to_string(),
                (a, b) => a.is_none() && b.is_none(),
            };
            if !same {
                let show = |i: &Option<Interval>| i.map_or("undefined".to_string(), |i| i.to_string());
                let verb = match (&*last, &now) {
                    (Some(a), Some(b)) if b.lo >= a.lo && b.hi <= a.hi => "narrowed",
                    (Some(a), Some(b)) if a.lo >= b.lo && a.hi <= b.hi => "widened",
                    _ => "changed",
                };
                out.push(format!("{verb} {name}: {} -> {}", show(last), show(&now)));
            }
            *last = now;
        }
        Ok(out)
    }

    fn bounds(&mut self, text: &str) -> Result<Vec<String>, ScenarioError> {
        let term = BelTerm::parse(text, &self.scenario.frame).map_err(|e| ScenarioError::Usage(format!("term: {e}")))?;
        let sys = self.scenario.compile()?;
        let outcome = query_outcome(&sys, &Query::Belief(term.clone()))?;
        let name = match self.tracked.iter().position(|(_, t, _)| *t == term) {
            Some(i) => self.tracked[i].0.clone(),
            None => {
                let name = format!("q{}", self.tracked.len() + 1);
                self.tracked.push((name.clone(), term, None));
                name
            }
        };
        if let Some(entry) = self.tracked.iter_mut().find(|(n, _, _)| *n == name) {
            entry.2 = match &outcome {
                Outcome::Interval(i) => Some(*i),
                _ => None,
            };
        }
        Ok(vec![QueryResult::new("QUERY", name, outcome).to_string()])
    }

    fn why(&self) -> Result<Vec<String>, ScenarioError> {
        let opts = self.scenario.config.compile_options();
        Ok(
            match constraints::why_infeasible(&self.scenario.constraints, &self.scenario.frame, &opts)? {
                None => vec!["feasible".to_string()],
                Some(idx) => numbered(&self.scenario, &idx)
                    .into_iter()
                    .map(|c| format!("CONFLICT {c}"))
                    .collect(),
            },
        )
    }

    fn list(&self) -> Vec<String> {
        numbered(&self.scenario, &(0..self.scenario.constraints.len()).collect::<Vec<_>>())
    }

    fn save(&self, path: &str) -> Result<Vec<String>, ScenarioError> {
        if path.is_empty() {
            return Err(ScenarioError::Usage("save needs a path".into()));
        }
        std::fs::write(path, self.saved_text()).map_err(|e| ScenarioError::Io(format!("{path}: {e}")))?;
        Ok(vec![format!("saved {path}")])
    }
}

/// Subset of a scenario frame given as formula text.
pub fn subset(scenario: &Scenario, formula: &str) -> Result<Subset, ScenarioError> {
    Ok(scenario.parse_formula(formula)?.extension(&scenario.frame))
}

#[cfg(test)]
mod tests {
    use super::*;

    const WINDOW: &str = "
# who broke the window
[variables]
X: T, J, P, O

[constraints]
Bel(X=T \\/ X=J \\/ X=P) = .6

[queries]
tjp: Bel(X=T \\/ X=J \\/ X=P)
s: surprise(X=O)

[masses]
m(X=T \\/ X=J \\/ X=P) = 0.6
m(X=T \\/ ~X=T) = 0.4
";

    #[test]
    fn parses_sections() {
        let s = Scenario::parse(WINDOW).unwrap();
        assert_eq!(s.frame.theta_size(), 4);
        assert_eq!(s.constraints.len(), 1);
        assert_eq!(s.queries.len(), 2);
        assert_eq!(s.mass_function().unwrap().unwrap().focal_count(), 2);
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = Scenario::parse("[variables]\nA: bool\n[constraints]\n  Bel(A and) = 1\n").unwrap_err();
        match e {
            ScenarioError::Parse { line, column, .. } => {
                assert_eq!(line, 4);
                assert_eq!(column, 12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Scenario::parse("[variables]\nA: bool\n[constraints]\nBel(A) = k\n"),
            Err(ScenarioError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            Scenario::parse("[variables]\nA: bool\n[constants]\nk\n"),
            Err(ScenarioError::Parse { line: 4, .. })
        ));
        assert!(Scenario::parse_with("[variables]\nA: bool\n[constants]\nk\n", &[("k".into(), "0.5".into())]).is_ok());
        assert!(matches!(
            Scenario::parse_with("[variables]\nA: bool\n", &[("zz".into(), "1".into())]),
            Err(ScenarioError::Usage(_))
        ));
    }

    #[test]
    fn flagged_sections() {
        let text = "[variables]\nA: bool\n[config]\nextra = off\n[constraints]\nBel(A) >= .2\n[constraints.extra]\nBel(~A) >= .2\n";
        assert_eq!(Scenario::parse(text).unwrap().constraints.len(), 1);
        let on = Scenario::parse_with(text, &[("extra".into(), "on".into())]).unwrap();
        assert_eq!(on.constraints.len(), 2);
    }

    #[test]
    fn commands_on_window() {
        let s = Scenario::parse(WINDOW).unwrap();
        let r = Command::Bounds { query: None }.run(&s).unwrap();
        assert_eq!(r[0].to_string(), "QUERY tjp = [0.600000, 0.600000]");
        let r = Command::Condition { on: "~X=T /\\ ~X=J".into() }.run(&s).unwrap();
        assert_eq!(r[0].to_string(), "VALUE K(~X=T /\\ ~X=J) = 1.000000");
        assert_eq!(r[1].to_string(), "MASSES condition(~X=T /\\ ~X=J) = {P} -> 0.600000; {P, O} -> 0.400000");
        let r = Command::Classify.run(&s).unwrap();
        assert!(r.iter().all(|q| q.outcome != Outcome::Boolean { value: false } || q.query.starts_with("vacuous")));
        let r = Command::Surprise {
            event: "X=O".into(),
            given: None,
        }
        .run(&s)
        .unwrap();
        assert_eq!(r[0].to_string(), "SURPRISE surprise(X=O) = [0.600000, 0.600000]");
    }

    #[test]
    fn save_round_trips() {
        let s = Scenario::parse(WINDOW).unwrap();
        let again = Scenario::parse(&s.to_text()).unwrap();
        assert_eq!(again.constraints, s.constraints);
        assert_eq!(again.queries, s.queries);
        assert_eq!(again.masses, s.masses);
    }

    #[test]
    fn session_flow() {
        let s = Scenario::parse("[variables]\nA: bool\nRAIN: bool\nWET: bool\n").unwrap();
        let mut session = Session::new(s);
        let r = session.handle_line("assume Bel(RAIN | WET) = .4");
        assert_eq!(r.lines[1], "CHECK constraints = feasible");
        let r = session.handle_line("assume Bel(~RAIN | WET) = 0");
        assert_eq!(r.lines[1], "CHECK constraints = feasible");
        let r = session.handle_line("bounds Bel(A)");
        assert_eq!(r.lines[0], "QUERY q1 = [0.000000, 1.000000]");
        let r = session.handle_line("assume Bel(A) = .6");
        assert!(r.lines.iter().any(|l| l.starts_with("narrowed q1")));
        let r = session.handle_line("assume Bel(A) = .3");
        assert!(r.lines[1].contains("infeasible"));
        assert!(r.lines.iter().any(|l| l == "CONFLICT #3 Bel(A) = 0.6"));
        assert!(r.lines.iter().any(|l| l == "CONFLICT #4 Bel(A) = 0.3"));
        let r = session.handle_line("retract 4");
        assert_eq!(r.lines[1], "CHECK constraints = feasible");
        let before = session.scenario().constraints.len();
        let r = session.handle_line("assume Bel(A |");
        assert!(r.lines[0].starts_with("error:"));
        assert_eq!(session.scenario().constraints.len(), before);
        assert!(session.handle_line("quit").quit);
    }
}
