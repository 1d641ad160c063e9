use std::fmt;
use std::sync::Arc;

use super::{FrameError, PointSet, ProductFrame, Subset};

/// Propositional formula over `variable = value` atoms.
///
/// Atoms hold indices into the owning [`ProductFrame`], so a formula is only
/// meaningful together with the frame it was built or parsed against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { var: usize, value: usize },
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Atom `name = value`, checked against the frame.
    pub fn atom(frame: &ProductFrame, name: &str, value: &str) -> Result<Self, FrameError> {
        let var = frame
            .variable_index(name)
            .ok_or_else(|| FrameError::UnknownVariable(name.to_string()))?;
        let value = frame.variables()[var]
            .value_index(value)
            .ok_or_else(|| FrameError::UnknownValue {
                variable: name.to_string(),
                value: value.to_string(),
            })?;
        Ok(Formula::Atom { var, value })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn or(f: Formula, g: Formula) -> Self {
        Formula::Or(Box::new(f), Box::new(g))
    }

    pub fn and(f: Formula, g: Formula) -> Self {
        Formula::And(Box::new(f), Box::new(g))
    }

    pub fn implies(f: Formula, g: Formula) -> Self {
        Formula::Implies(Box::new(f), Box::new(g))
    }

    /// Whether point `point` of `frame` satisfies the formula.
    ///
    /// Conjunction and implication are evaluated through their definitions
    /// `¬(¬g ∨ ¬h)` and `¬g ∨ h`.
    pub fn satisfies(&self, frame: &ProductFrame, point: usize) -> bool {
        match self {
            Formula::Atom { var, value } => frame.coordinate(point, *var) == *value,
            Formula::Not(g) => !g.satisfies(frame, point),
            Formula::Or(g, h) => g.satisfies(frame, point) || h.satisfies(frame, point),
            Formula::And(g, h) => !(!g.satisfies(frame, point) || !h.satisfies(frame, point)),
            Formula::Implies(g, h) => !g.satisfies(frame, point) || h.satisfies(frame, point),
        }
    }

    /// `[f]`: the set of points of `Θ` satisfying the formula.
    pub fn extension(&self, frame: &Arc<ProductFrame>) -> Subset {
        let mut points = PointSet::empty(frame.theta_size());
        for p in 0..frame.theta_size() {
            if self.satisfies(frame, p) {
                points.insert(p);
            }
        }
        Subset::new(frame, points)
    }

    /// Checks every atom against the frame.
    pub fn validate(&self, frame: &ProductFrame) -> Result<(), FrameError> {
        match self {
            Formula::Atom { var, value } => {
                let v = frame
                    .variables()
                    .get(*var)
                    .ok_or_else(|| FrameError::UnknownVariable(format!("#{var}")))?;
                if *value >= v.values().len() {
                    return Err(FrameError::UnknownValue {
                        variable: v.name().to_string(),
                        value: format!("#{value}"),
                    });
                }
                Ok(())
            }
            Formula::Not(g) => g.validate(frame),
            Formula::Or(g, h) | Formula::And(g, h) | Formula::Implies(g, h) => {
                g.validate(frame)?;
                h.validate(frame)
            }
        }
    }

    /// Renders the formula in the concrete syntax accepted by the parser.
    pub fn display<'a>(&'a self, frame: &'a ProductFrame) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, frame }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) => 4,
            Formula::Atom { .. } => 5,
        }
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    frame: &'a ProductFrame,
}

impl FormulaDisplay<'_> {
    fn child(&self, f: &mut fmt::Formatter<'_>, child: &Formula, min_prec: u8) -> fmt::Result {
        let inner = child.display(self.frame);
        if child.precedence() < min_prec {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.formula {
            Formula::Atom { var, value } => {
                let v = &self.frame.variables()[*var];
                if v.is_boolean() && v.values()[*value] == "Yes" {
                    f.write_str(v.name())
                } else {
                    write!(f, "{}={}", v.name(), v.values()[*value])
                }
            }
            Formula::Not(g) => {
                f.write_str("~")?;
                self.child(f, g, 4)
            }
            // `and`/`or` associate to the left, `=>` to the right.
            Formula::And(g, h) => {
                self.child(f, g, 3)?;
                f.write_str(" /\\ ")?;
                self.child(f, h, 4)
            }
            Formula::Or(g, h) => {
                self.child(f, g, 2)?;
                f.write_str(" \\/ ")?;
                self.child(f, h, 3)
            }
            Formula::Implies(g, h) => {
                self.child(f, g, 2)?;
                f.write_str(" => ")?;
                self.child(f, h, 1)
            }
        }
    }
}
