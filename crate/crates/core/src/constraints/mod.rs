//! The constraint language for belief fragments and its reduction to linear
//! systems over the mass vector.
//!
//! A mass vector has one coordinate per subset of `Θ` (bitmask order, the
//! coordinate of `∅` pinned to zero). `Bel(A)` is the sum of the
//! coordinates of the nonempty subsets of `A`, so unconditional terms are
//! linear. A conditional term is cleared of its denominator through
//!
//! ```text
//! Bel(A | B) = (Bel(A ∪ Bᶜ) - Bel(Bᶜ)) / (1 - Bel(Bᶜ))
//! ```
//!
//! which is linear once the value it is compared with is a constant. When
//! two terms are equated (or a conditional term appears inside a longer
//! linear combination) the common value becomes a scalar parameter that
//! is swept over `[0, 1]`.

mod compile;
mod reason;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::belief::{BeliefError, MassFunction};
use crate::frames::{Formula, ParseError, ProductFrame};
use crate::solver::SolveError;

pub use compile::{compile, CompileOptions, CompiledSystem, Link, MassRow, ParamRow, Parameter, RowOrigin};
pub use reason::{
    bounds, feasible, mincommit, optimize, surprise_report, why_infeasible, Bounds, Feasibility, MinCommit,
    Witness, BISECTION_STEPS, MINCOMMIT_CAP, SEARCH_BUDGET,
};

/// `Bel(target)` or `Bel(target | evidence)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BelTerm {
    pub target: Formula,
    pub evidence: Option<Formula>,
}

impl BelTerm {
    pub fn unconditional(target: Formula) -> Self {
        BelTerm { target, evidence: None }
    }

    pub fn conditional(target: Formula, evidence: Formula) -> Self {
        BelTerm {
            target,
            evidence: Some(evidence),
        }
    }

    pub fn parse(text: &str, frame: &Arc<ProductFrame>) -> Result<Self, ParseError> {
        crate::syntax::parse_bel_term(text, frame)
    }

    /// Value of the term under `m`, through conditioning when evidence is present.
    pub fn evaluate(&self, m: &MassFunction) -> Result<f64, BeliefError> {
        let frame = m.frame();
        let target = self.target.extension(frame);
        match &self.evidence {
            None => m.belief(&target),
            Some(e) => m.conditional_belief(&target, &e.extension(frame)),
        }
    }

    pub fn display<'a>(&'a self, frame: &'a ProductFrame) -> impl fmt::Display + 'a {
        TermDisplay { term: self, frame }
    }
}

struct TermDisplay<'a> {
    term: &'a BelTerm,
    frame: &'a ProductFrame,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bel({}", self.term.target.display(self.frame))?;
        if let Some(e) = &self.term.evidence {
            write!(f, " | {}", e.display(self.frame))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relop {
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Relop {
    pub fn symbol(self) -> &'static str {
        match self {
            Relop::Eq => "=",
            Relop::Le => "<=",
            Relop::Ge => ">=",
            Relop::Lt => "<",
            Relop::Gt => ">",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relop::Lt | Relop::Gt)
    }

    /// Whether `lhs relop rhs` holds, strict comparisons requiring a margin of `strict_margin`.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64, strict_margin: f64) -> bool {
        match self {
            Relop::Eq => (lhs - rhs).abs() <= tol,
            Relop::Le => lhs <= rhs + tol,
            Relop::Ge => lhs >= rhs - tol,
            Relop::Lt => lhs <= rhs - strict_margin + tol,
            Relop::Gt => lhs >= rhs + strict_margin - tol,
        }
    }
}

/// `Σ coefficient · term + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(f64, BelTerm)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn term(term: BelTerm) -> Self {
        LinExpr {
            terms: vec![(1.0, term)],
            constant: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn evaluate(&self, m: &MassFunction) -> Result<f64, BeliefError> {
        let mut total = self.constant;
        for (c, t) in &self.terms {
            total += c * t.evaluate(m)?;
        }
        Ok(total)
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, frame: &ProductFrame) -> fmt::Result {
        let mut first = true;
        for (c, t) in &self.terms {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag != 1.0 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{}", t.display(frame))?;
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0.0 {
            let sign = if self.constant < 0.0 { "-" } else { "+" };
            write!(f, " {sign} {}", self.constant.abs())?;
        }
        Ok(())
    }
}

/// A belief fragment `lhs relop rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: LinExpr,
    pub relop: Relop,
    pub rhs: LinExpr,
}

impl Constraint {
    pub fn new(lhs: LinExpr, relop: Relop, rhs: LinExpr) -> Self {
        Constraint { lhs, relop, rhs }
    }

    /// Parses `Bel(...) relop ...`; identifiers outside `Bel(...)` are
    /// resolved through `constants`.
    pub fn parse(
        text: &str,
        frame: &Arc<ProductFrame>,
        constants: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<Self, ParseError> {
        crate::syntax::parse_constraint(text, frame, constants)
    }

    pub fn terms(&self) -> impl Iterator<Item = &BelTerm> {
        self.lhs.terms.iter().chain(&self.rhs.terms).map(|(_, t)| t)
    }

    /// Direct check against a mass function through conditioning, not
    /// through the compiled rows. Strict comparisons need a margin of
    /// `strict_margin`; a term whose conditioning is undefined fails.
    pub fn holds(&self, m: &MassFunction, tol: f64, strict_margin: f64) -> bool {
        match (self.lhs.evaluate(m), self.rhs.evaluate(m)) {
            (Ok(l), Ok(r)) => self.relop.holds(l, r, tol, strict_margin),
            _ => false,
        }
    }

    pub fn display<'a>(&'a self, frame: &'a ProductFrame) -> impl fmt::Display + 'a {
        ConstraintDisplay { c: self, frame }
    }
}

struct ConstraintDisplay<'a> {
    c: &'a Constraint,
    frame: &'a ProductFrame,
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.c.lhs.fmt_with(f, self.frame)?;
        write!(f, " {} ", self.c.relop.symbol())?;
        self.c.rhs.fmt_with(f, self.frame)
    }
}

/// A closed or half-open interval inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{:.6}, {:.6}{}",
            if self.lo_open { "(" } else { "[" },
            self.lo,
            self.hi,
            if self.hi_open { ")" } else { "]" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("frame has {size} points; compiling is limited to {cap}")]
    ThetaCap { size: usize, cap: usize },
    #[error("system needs {needed} parameters; at most {max} allowed")]
    TooManyParameters { needed: usize, max: usize },
    #[error("constraint formula does not match the frame: {0}")]
    Frame(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("constraint system is infeasible")]
    Infeasible,
    #[error("query is undefined for every feasible belief function: Bel of the complement of its evidence is forced to 1")]
    QueryUndefinedEverywhere,
    #[error("frame has {size} points; this operation is limited to {cap}")]
    FrameTooLarge { size: usize, cap: usize },
    #[error("parameter search exceeded {0} linear programs")]
    SearchBudget(usize),
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}
