//! Belief-function reasoning engine built around the reading
//! "surprise at E occurring = belief that E would not occur".
//!
//! Users declare fragments of belief (`Bel(f) = .3`, `Bel(f | g) >= Bel(h)`, ...)
//! over a product frame of discrete variables. The engine compiles them into
//! linear systems over the mass vector and answers:
//!
//! * feasibility, with a witness mass function,
//! * tight lower/upper bounds on (conditional) belief and surprise,
//! * the minimum-committed belief function when one exists,
//! * classification of mass functions (vacuous, consonant, conjunctive).
//!
//! A calibration curve converts announced "x versus y" ratios into
//! surprise degrees on `[0, 1]`.

pub mod belief;
pub mod calibration;
pub mod constraints;
pub mod frames;
pub mod scenario;
pub mod solver;
mod syntax;

pub use belief::{BeliefError, MassFunction};
pub use calibration::{CalibrationCurve, CalibrationError};
pub use constraints::{BelTerm, CompileError, CompiledSystem, Constraint, Interval};
pub use frames::{Formula, FrameError, ParseError, ProductFrame, Subset};
pub use scenario::{Command, QueryResult, Scenario, ScenarioError};

/// Tolerance used for mass normalization and belief comparisons.
pub const TOLERANCE: f64 = 1e-9;
