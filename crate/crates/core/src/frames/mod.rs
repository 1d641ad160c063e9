//! Variables, product frames, subsets of `Θ`, and the propositional
//! formula language used to name those subsets.
//!
//! Concrete syntax (highest precedence first):
//!
//! | form                     | meaning                         |
//! |--------------------------|---------------------------------|
//! | `X = v`, `X`             | atom; bare `X` means `X = Yes`  |
//! | `not f`, `~f`            | negation                        |
//! | `f and g`, `f /\ g`      | conjunction (left associative)  |
//! | `f or g`, `f \/ g`       | disjunction (left associative)  |
//! | `f => g`                 | implication (right associative) |

mod formula;
mod frame;
mod subset;

use std::fmt;
use std::sync::Arc;

pub use formula::{Formula, FormulaDisplay};
pub use frame::{ProductFrame, Variable, DEFAULT_THETA_CAP};
pub use subset::{PointSet, Subset};

pub(crate) use frame::is_identifier;
pub(crate) use subset::write_points;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("frame declares no variables")]
    NoVariables,
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{variable}` lists value `{value}` twice")]
    DuplicateValue { variable: String, value: String },
    #[error("variable `{0}` has an empty frame")]
    EmptyFrame(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("product space exceeds the cap of {cap} points")]
    TooLarge { cap: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{value}` is not a value of variable `{variable}`")]
    UnknownValue { variable: String, value: String },
    #[error("`{0}` used without a value but is not boolean")]
    NotBoolean(String),
}

/// Syntax or name-resolution error with a 1-based column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(column: usize, message: impl Into<String>) -> Self {
        ParseError {
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

/// Parses a formula against `frame`.
pub fn parse_formula(text: &str, frame: &Arc<ProductFrame>) -> Result<Formula, ParseError> {
    crate::syntax::parse_formula(text, frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn booleans(names: &[&str]) -> Arc<ProductFrame> {
        ProductFrame::booleans(names).unwrap()
    }

    #[test]
    fn parses_implication_of_booleans() {
        let frame = booleans(&["M", "P"]);
        let f = parse_formula("M => P", &frame).unwrap();
        let m = Formula::atom(&frame, "M", "Yes").unwrap();
        let p = Formula::atom(&frame, "P", "Yes").unwrap();
        assert_eq!(f, Formula::implies(m, p));
    }

    #[test]
    fn parses_multivalued_disjunction() {
        let frame = ProductFrame::new([("TEMP", vec!["low", "med", "high"])]).unwrap();
        let f = parse_formula("TEMP=med or TEMP=low", &frame).unwrap();
        let med = Formula::atom(&frame, "TEMP", "med").unwrap();
        let low = Formula::atom(&frame, "TEMP", "low").unwrap();
        assert_eq!(f, Formula::or(med, low));
    }

    #[test]
    fn parses_double_negation() {
        let frame = booleans(&["X"]);
        let f = parse_formula("not not X", &frame).unwrap();
        let x = Formula::atom(&frame, "X", "Yes").unwrap();
        assert_eq!(f, Formula::not(Formula::not(x)));
    }

    #[test]
    fn precedence_and_associativity() {
        let frame = booleans(&["A", "B", "C"]);
        let a = || Formula::atom(&frame, "A", "Yes").unwrap();
        let b = || Formula::atom(&frame, "B", "Yes").unwrap();
        let c = || Formula::atom(&frame, "C", "Yes").unwrap();
        assert_eq!(
            parse_formula("~A /\\ B \\/ C", &frame).unwrap(),
            Formula::or(Formula::and(Formula::not(a()), b()), c())
        );
        assert_eq!(
            parse_formula("A => B => C", &frame).unwrap(),
            Formula::implies(a(), Formula::implies(b(), c()))
        );
        assert_eq!(
            parse_formula("A or B and C => A", &frame).unwrap(),
            Formula::implies(Formula::or(a(), Formula::and(b(), c())), a())
        );
    }

    #[test]
    fn parse_errors() {
        let frame = ProductFrame::new([("X", vec!["T", "J"]), ("B", vec!["Yes", "No"])]).unwrap();
        let err = parse_formula("Q", &frame).unwrap_err();
        assert!(err.message.contains("unknown variable"), "{err}");
        let err = parse_formula("X = Z", &frame).unwrap_err();
        assert!(err.message.contains("not a value"), "{err}");
        let err = parse_formula("X", &frame).unwrap_err();
        assert!(err.message.contains("not boolean"), "{err}");
        let err = parse_formula("B and (B or", &frame).unwrap_err();
        assert_eq!(err.column, 12);
        assert!(parse_formula("", &frame).is_err());
        assert!(parse_formula("B B", &frame).is_err());
    }

    #[test]
    fn satisfies_cases() {
        let frame = booleans(&["M", "P"]);
        let f = parse_formula("M => P", &frame).unwrap();
        let point = frame.point_index(&[0, 1]).unwrap(); // M=Yes, P=No
        assert!(!f.satisfies(&frame, point));

        let xf = ProductFrame::new([("X", vec!["T", "J", "P", "O"])]).unwrap();
        let g = parse_formula("X=T or X=J", &xf).unwrap();
        assert!(g.satisfies(&xf, 0));
        let taut = parse_formula("X=T or not X=T", &xf).unwrap();
        assert!((0..4).all(|p| taut.satisfies(&xf, p)));
    }

    #[test]
    fn extension_examples() {
        let hire = booleans(&["HIRE"]);
        assert!(parse_formula("HIRE or not HIRE", &hire).unwrap().extension(&hire).is_full());
        assert!(parse_formula("HIRE and not HIRE", &hire).unwrap().extension(&hire).is_empty());

        let frame = booleans(&["M", "P", "E"]);
        let ext = parse_formula("M => P", &frame).unwrap().extension(&frame);
        // enumerate the 8 points directly: excluded are exactly M=Yes, P=No
        let expected: Vec<usize> = (0..8)
            .filter(|&p| !(frame.coordinate(p, 0) == 0 && frame.coordinate(p, 1) == 1))
            .collect();
        assert_eq!(ext.points().points().collect::<Vec<_>>(), expected);
        assert_eq!(ext.len(), 6);
    }

    fn arb_frame() -> impl Strategy<Value = Arc<ProductFrame>> {
        prop::collection::vec(1usize..=4, 1..=3)
            .prop_filter("at most 64 points", |sizes| sizes.iter().product::<usize>() <= 64)
            .prop_map(|sizes| {
                let vars: Vec<(String, Vec<String>)> = sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| {
                        let values = if n == 2 {
                            vec!["Yes".to_string(), "No".to_string()]
                        } else {
                            (0..n).map(|k| format!("v{k}")).collect()
                        };
                        (format!("X{i}"), values)
                    })
                    .collect();
                ProductFrame::new(vars).unwrap()
            })
    }

    fn arb_formula(frame: Arc<ProductFrame>) -> impl Strategy<Value = Formula> {
        let sizes: Vec<usize> = frame.variables().iter().map(|v| v.values().len()).collect();
        let leaf = (0..sizes.len())
            .prop_flat_map(move |var| (Just(var), 0..sizes[var]))
            .prop_map(|(var, value)| Formula::Atom { var, value });
        leaf.prop_recursive(5, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
            ]
        })
    }

    fn frame_and_formulas() -> impl Strategy<Value = (Arc<ProductFrame>, Formula, Formula)> {
        arb_frame().prop_flat_map(|frame| {
            let f = arb_formula(frame.clone());
            let g = arb_formula(frame.clone());
            (Just(frame), f, g)
        })
    }

    proptest! {
        #[test]
        fn extension_is_a_boolean_homomorphism((frame, g, h) in frame_and_formulas()) {
            let eg = g.extension(&frame);
            let eh = h.extension(&frame);
            prop_assert_eq!(Formula::not(g.clone()).extension(&frame), eg.complement());
            prop_assert_eq!(Formula::or(g.clone(), h.clone()).extension(&frame), eg.union(&eh));
            prop_assert_eq!(Formula::and(g.clone(), h.clone()).extension(&frame), eg.intersection(&eh));
            prop_assert_eq!(
                Formula::implies(g.clone(), h.clone()).extension(&frame),
                Formula::or(Formula::not(g), h).extension(&frame)
            );
        }

        #[test]
        fn pretty_print_roundtrip((frame, f, _g) in frame_and_formulas()) {
            let text = f.display(&frame).to_string();
            let parsed = parse_formula(&text, &frame).unwrap();
            prop_assert_eq!(parsed, f, "printed as {}", text);
        }
    }
}
