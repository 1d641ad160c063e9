use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use super::{FrameError, Subset};

/// Default upper bound on the number of points in the product space.
pub const DEFAULT_THETA_CAP: usize = 1 << 16;

/// A discrete variable together with its frame of mutually exclusive values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    name: String,
    values: Vec<String>,
}

impl Variable {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    /// A variable is boolean when its frame is exactly `{Yes, No}`.
    pub fn is_boolean(&self) -> bool {
        self.values.len() == 2
            && self.values.iter().any(|v| v == "Yes")
            && self.values.iter().any(|v| v == "No")
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// The ordered variable set and the product space of their frames.
///
/// Points are indexed by mixed-radix encoding over the declared variable
/// order; the last declared variable varies fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductFrame {
    variables: Vec<Variable>,
    strides: Vec<usize>,
    theta_size: usize,
}

impl ProductFrame {
    /// Builds a frame under the default size cap.
    pub fn new<N, V>(variables: impl IntoIterator<Item = (N, Vec<V>)>) -> Result<Arc<Self>, FrameError>
    where
        N: Into<String>,
        V: Into<String>,
    {
        Self::with_cap(variables, DEFAULT_THETA_CAP)
    }

    pub fn with_cap<N, V>(
        variables: impl IntoIterator<Item = (N, Vec<V>)>,
        cap: usize,
    ) -> Result<Arc<Self>, FrameError>
    where
        N: Into<String>,
        V: Into<String>,
    {
        let mut vars = Vec::new();
        let mut names = HashSet::new();
        for (name, values) in variables {
            let name: String = name.into();
            if !is_identifier(&name) {
                return Err(FrameError::InvalidName(name));
            }
            if !names.insert(name.clone()) {
                return Err(FrameError::DuplicateVariable(name));
            }
            let values: Vec<String> = values.into_iter().map(Into::into).collect();
            if values.is_empty() {
                return Err(FrameError::EmptyFrame(name));
            }
            let mut seen = HashSet::new();
            for v in &values {
                if !is_identifier(v) {
                    return Err(FrameError::InvalidName(v.clone()));
                }
                if !seen.insert(v.as_str()) {
                    return Err(FrameError::DuplicateValue {
                        variable: name.clone(),
                        value: v.clone(),
                    });
                }
            }
            vars.push(Variable { name, values });
        }
        if vars.is_empty() {
            return Err(FrameError::NoVariables);
        }

        let mut theta_size: usize = 1;
        for v in &vars {
            theta_size = theta_size
                .checked_mul(v.values.len())
                .filter(|&n| n <= cap)
                .ok_or(FrameError::TooLarge { cap })?;
        }
        let mut strides = vec![1; vars.len()];
        for i in (0..vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * vars[i + 1].values.len();
        }

        Ok(Arc::new(ProductFrame {
            variables: vars,
            strides,
            theta_size,
        }))
    }

    /// Convenience constructor for frames made only of boolean variables.
    pub fn booleans(names: &[&str]) -> Result<Arc<Self>, FrameError> {
        Self::new(names.iter().map(|n| (*n, vec!["Yes", "No"])))
    }

    pub fn theta_size(&self) -> usize {
        self.theta_size
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Value index of variable `var` at point `point`.
    pub fn coordinate(&self, point: usize, var: usize) -> usize {
        (point / self.strides[var]) % self.variables[var].values.len()
    }

    /// Point index from one value index per variable.
    pub fn point_index(&self, coordinates: &[usize]) -> Option<usize> {
        if coordinates.len() != self.variables.len() {
            return None;
        }
        let mut index = 0;
        for (i, &c) in coordinates.iter().enumerate() {
            if c >= self.variables[i].values.len() {
                return None;
            }
            index += c * self.strides[i];
        }
        Some(index)
    }

    /// Human readable point label: the value itself for one-variable frames,
    /// `<v1,v2,...>` otherwise.
    pub fn point_label(&self, point: usize) -> String {
        if self.variables.len() == 1 {
            return self.variables[0].values[point].clone();
        }
        let parts: Vec<&str> = (0..self.variables.len())
            .map(|i| self.variables[i].values[self.coordinate(point, i)].as_str())
            .collect();
        format!("<{}>", parts.join(","))
    }

    pub fn full(self: &Arc<Self>) -> Subset {
        Subset::full(self)
    }

    pub fn empty(self: &Arc<Self>) -> Subset {
        Subset::empty(self)
    }
}

impl fmt::Display for ProductFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.variables.iter().enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{}:{{{}}}", v.name, v.values.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    if matches!(s, "not" | "and" | "or" | "Bel") {
        return false;
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_radix_roundtrip() {
        let frame = ProductFrame::new([("A", vec!["x", "y", "z"]), ("B", vec!["Yes", "No"])]).unwrap();
        assert_eq!(frame.theta_size(), 6);
        for p in 0..6 {
            let coords = [frame.coordinate(p, 0), frame.coordinate(p, 1)];
            assert_eq!(frame.point_index(&coords), Some(p));
        }
        assert_eq!(frame.point_label(1), "<x,No>");
    }

    #[test]
    fn rejects_duplicates_and_oversize() {
        assert!(matches!(
            ProductFrame::new([("A", vec!["x"]), ("A", vec!["y"])]),
            Err(FrameError::DuplicateVariable(_))
        ));
        assert!(matches!(
            ProductFrame::new([("A", vec!["x", "x"])]),
            Err(FrameError::DuplicateValue { .. })
        ));
        assert!(matches!(
            ProductFrame::with_cap([("A", vec!["a", "b", "c"])], 2),
            Err(FrameError::TooLarge { cap: 2 })
        ));
        assert!(matches!(
            ProductFrame::new(Vec::<(&str, Vec<&str>)>::new()),
            Err(FrameError::NoVariables)
        ));
    }

    #[test]
    fn boolean_detection() {
        let frame = ProductFrame::new([("H", vec!["No", "Yes"]), ("T", vec!["low", "med"])]).unwrap();
        assert!(frame.variables()[0].is_boolean());
        assert!(!frame.variables()[1].is_boolean());
    }
}
