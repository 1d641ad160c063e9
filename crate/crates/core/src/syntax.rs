//! Lexer and recursive-descent parser shared by formulas, belief terms and
//! constraints.

use std::sync::Arc;

use crate::constraints::{BelTerm, Constraint, LinExpr, Relop};
use crate::frames::{Formula, ParseError, ProductFrame};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Eq,
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Bar,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Eq => "`=`".into(),
            Tok::Not => "`not`".into(),
            Tok::And => "`and`".into(),
            Tok::Or => "`or`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        let (tok, width) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '|' => (Tok::Bar, 1),
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            '~' | '¬' => (Tok::Not, 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '⊃' => (Tok::Implies, 1),
            '≤' => (Tok::Le, 1),
            '≥' => (Tok::Ge, 1),
            '/' if next == Some('\\') => (Tok::And, 2),
            '\\' if next == Some('/') => (Tok::Or, 2),
            '=' if next == Some('>') => (Tok::Implies, 2),
            '=' if next == Some('=') => (Tok::Eq, 2),
            '=' => (Tok::Eq, 1),
            '<' if next == Some('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if next == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[start..j].iter().collect();
                let value: f64 = s
                    .parse()
                    .map_err(|_| ParseError::new(col, format!("malformed number `{s}`")))?;
                (Tok::Number(value), j - start)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                let tok = match s.as_str() {
                    "not" => Tok::Not,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    _ => Tok::Ident(s),
                };
                (tok, j - start)
            }
            other => return Err(ParseError::new(col, format!("unexpected character `{other}`"))),
        };
        out.push((tok, col));
        i += width;
    }
    Ok(out)
}

pub(crate) struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
    frame: &'a Arc<ProductFrame>,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &str, frame: &'a Arc<ProductFrame>) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            end_col: text.chars().count() + 1,
            frame,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", tok.describe())))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(self.col(), format!("{what}, found {}", t.describe())),
            None => ParseError::new(self.col(), format!("{what}, found end of input")),
        }
    }

    pub(crate) fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            Err(self.unexpected("expected end of input"))
        } else {
            Ok(())
        }
    }

    pub(crate) fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::Or) {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.negation()?;
        while self.eat(&Tok::And) {
            f = Formula::and(f, self.negation()?);
        }
        Ok(f)
    }

    fn negation(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::not(self.negation()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let col = self.col();
        let name = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return Err(self.unexpected("expected a variable")),
        };
        self.pos += 1;
        let var = self
            .frame
            .variable_index(&name)
            .ok_or_else(|| ParseError::new(col, format!("unknown variable `{name}`")))?;
        let variable = &self.frame.variables()[var];
        if self.eat(&Tok::Eq) {
            let vcol = self.col();
            let value = match self.bump() {
                Some(Tok::Ident(v)) => v,
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("expected a value"));
                }
            };
            let value = variable.value_index(&value).ok_or_else(|| {
                ParseError::new(vcol, format!("`{value}` is not a value of `{name}`"))
            })?;
            Ok(Formula::Atom { var, value })
        } else {
            if !variable.is_boolean() {
                return Err(ParseError::new(
                    col,
                    format!("`{name}` is not boolean; write `{name} = <value>`"),
                ));
            }
            let value = variable.value_index("Yes").expect("boolean frame has Yes");
            Ok(Formula::Atom { var, value })
        }
    }

    /// `Bel(f)` or `Bel(f | g)`.
    pub(crate) fn bel_term(&mut self) -> Result<BelTerm, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "Bel" => {
                self.pos += 1;
            }
            _ => return Err(self.unexpected("expected `Bel(`")),
        }
        self.expect(&Tok::LParen)?;
        let target = self.formula()?;
        let evidence = if self.eat(&Tok::Bar) {
            Some(self.formula()?)
        } else {
            None
        };
        self.expect(&Tok::RParen)?;
        Ok(BelTerm { target, evidence })
    }

    fn relop(&mut self) -> Result<Relop, ParseError> {
        let op = match self.peek() {
            Some(Tok::Eq) => Relop::Eq,
            Some(Tok::Le) => Relop::Le,
            Some(Tok::Ge) => Relop::Ge,
            Some(Tok::Lt) => Relop::Lt,
            Some(Tok::Gt) => Relop::Gt,
            _ => return Err(self.unexpected("expected a comparison")),
        };
        self.pos += 1;
        Ok(op)
    }

    fn linear(&mut self, constants: &dyn Fn(&str) -> Option<f64>) -> Result<LinExpr, ParseError> {
        let mut expr = LinExpr::default();
        let mut sign = 1.0;
        if self.eat(&Tok::Minus) {
            sign = -1.0;
        } else {
            self.eat(&Tok::Plus);
        }
        loop {
            self.product(sign, &mut expr, constants)?;
            if self.eat(&Tok::Plus) {
                sign = 1.0;
            } else if self.eat(&Tok::Minus) {
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn product(
        &mut self,
        sign: f64,
        expr: &mut LinExpr,
        constants: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<(), ParseError> {
        let mut scalar = sign;
        let mut term = None;
        loop {
            let col = self.col();
            match self.peek().cloned() {
                Some(Tok::Number(n)) => {
                    self.pos += 1;
                    scalar *= n;
                }
                Some(Tok::Ident(s)) if s == "Bel" => {
                    if term.is_some() {
                        return Err(ParseError::new(col, "product of two belief terms is not linear"));
                    }
                    term = Some(self.bel_term()?);
                }
                Some(Tok::Ident(s)) => {
                    self.pos += 1;
                    let v = constants(&s)
                        .ok_or_else(|| ParseError::new(col, format!("undeclared constant `{s}`")))?;
                    scalar *= v;
                }
                _ => return Err(self.unexpected("expected a number, constant or `Bel(...)`")),
            }
            if !self.eat(&Tok::Star) {
                break;
            }
        }
        if !scalar.is_finite() {
            return Err(ParseError::new(self.col(), "coefficient is not finite"));
        }
        match term {
            Some(t) => expr.terms.push((scalar, t)),
            None => expr.constant += scalar,
        }
        Ok(())
    }

    pub(crate) fn constraint(
        &mut self,
        constants: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<Constraint, ParseError> {
        let start = self.col();
        let lhs = self.linear(constants)?;
        let relop = self.relop()?;
        let rhs = self.linear(constants)?;
        if lhs.terms.is_empty() && rhs.terms.is_empty() {
            return Err(ParseError::new(start, "constraint mentions no `Bel(...)` term"));
        }
        Ok(Constraint { lhs, relop, rhs })
    }
}

pub(crate) fn parse_formula(text: &str, frame: &Arc<ProductFrame>) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, frame)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub(crate) fn parse_bel_term(text: &str, frame: &Arc<ProductFrame>) -> Result<BelTerm, ParseError> {
    let mut p = Parser::new(text, frame)?;
    let t = p.bel_term()?;
    p.finish()?;
    Ok(t)
}

pub(crate) fn parse_constraint(
    text: &str,
    frame: &Arc<ProductFrame>,
    constants: &dyn Fn(&str) -> Option<f64>,
) -> Result<Constraint, ParseError> {
    let mut p = Parser::new(text, frame)?;
    let c = p.constraint(constants)?;
    p.finish()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators() {
        let toks: Vec<Tok> = lex("a /\\ b \\/ ~c => d <= .5e1 >= 1").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("a".into()),
                Tok::And,
                Tok::Ident("b".into()),
                Tok::Or,
                Tok::Not,
                Tok::Ident("c".into()),
                Tok::Implies,
                Tok::Ident("d".into()),
                Tok::Le,
                Tok::Number(5.0),
                Tok::Ge,
                Tok::Number(1.0),
            ]
        );
        assert!(lex("a # b").is_err());
    }

    #[test]
    fn parses_linear_constraints() {
        let frame = ProductFrame::booleans(&["A", "B"]).unwrap();
        let consts = |s: &str| (s == "c").then_some(0.25);
        let c = parse_constraint("Bel(A) + 2*Bel(B | A) - c < Bel(A or B) * 0.5", &frame, &consts).unwrap();
        assert_eq!(c.lhs.terms.len(), 2);
        assert_eq!(c.lhs.terms[1].0, 2.0);
        assert!(c.lhs.terms[1].1.evidence.is_some());
        assert_eq!(c.lhs.constant, -0.25);
        assert_eq!(c.relop, Relop::Lt);
        assert_eq!(c.rhs.terms[0].0, 0.5);

        let err = parse_constraint("Bel(A) = d", &frame, &consts).unwrap_err();
        assert!(err.message.contains("undeclared constant"));
        assert!(parse_constraint("0 = 1", &frame, &consts).is_err());
        assert!(parse_constraint("Bel(A) * Bel(B) = 1", &frame, &consts).is_err());
        assert!(parse_constraint("Bel(A)", &frame, &consts).is_err());
    }
}
