use std::collections::HashMap;
use std::sync::Arc;

use super::{BelTerm, CompileError, Constraint, Relop};
use crate::frames::ProductFrame;
use crate::solver::{LinearProgram, LinearRow, Relation};

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    /// Largest `|Θ|` accepted; the mass vector has `2^|Θ|` coordinates.
    pub max_theta: usize,
    pub max_parameters: usize,
    /// Margin that turns `<`/`>` into `<=`/`>=`.
    pub strict_slack: f64,
    /// Evidence guards require `Bel(Bᶜ) <= 1 - guard_eps`.
    pub guard_eps: f64,
    /// Parameter sweep resolution: cells of width `1/grid`.
    pub grid: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_theta: 12,
            max_parameters: 2,
            strict_slack: 1e-6,
            guard_eps: 1e-9,
            grid: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrigin {
    /// Row generated from the constraint with this index.
    Constraint(usize),
    /// Guard `Bel(Bᶜ) <= 1 - ε` for evidence first used by this constraint.
    Guard(usize),
    /// Row added while answering a query.
    Query,
    /// Evidence guard of a query term.
    QueryGuard,
}

impl RowOrigin {
    pub fn constraint(self) -> Option<usize> {
        match self {
            RowOrigin::Constraint(i) | RowOrigin::Guard(i) => Some(i),
            RowOrigin::Query | RowOrigin::QueryGuard => None,
        }
    }
}

/// `coefficients · mass relation constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassRow {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub constant: f64,
    pub origin: RowOrigin,
    /// Came from a strict comparison (already shifted by the strict slack).
    pub strict: bool,
}

impl MassRow {
    fn to_linear(&self) -> LinearRow {
        LinearRow::new(self.coefficients.clone(), self.relation, self.constant)
    }

    pub fn violation(&self, mass: &[f64]) -> f64 {
        self.to_linear().violation(mass)
    }

    /// Whether the row holds with equality at `mass`.
    pub fn is_tight(&self, mass: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coefficients.iter().zip(mass).map(|(a, x)| a * x).sum();
        (lhs - self.constant).abs() <= tol
    }
}

/// A term whose value is tied to a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    /// `Bel(set)`.
    Unconditional { set: u64 },
    /// `Bel(A | B)` stored as `A ∪ Bᶜ` and `Bᶜ`.
    Conditional { target_or_not_evidence: u64, not_evidence: u64 },
}

/// A scalar standing for the common value of its linked terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    /// Admissible values; narrowed to a point when another constraint pins a linked term.
    pub domain: (f64, f64),
    pub links: Vec<Link>,
}

impl Parameter {
    pub fn is_free(&self) -> bool {
        self.domain.1 - self.domain.0 > 1e-12
    }
}

/// `base · mass + Σ coefficient · parameter relation constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub base: Vec<f64>,
    pub params: Vec<(usize, f64)>,
    pub relation: Relation,
    pub constant: f64,
    pub origin: RowOrigin,
    pub strict: bool,
}

/// Constraints lowered to rows over the mass vector.
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    frame: Arc<ProductFrame>,
    mass_dim: usize,
    pub(crate) rows: Vec<MassRow>,
    pub(crate) guards: Vec<MassRow>,
    pub(crate) parameters: Vec<Parameter>,
    pub(crate) param_rows: Vec<ParamRow>,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) options: CompileOptions,
}

/// Term identity up to the sets it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum TermKey {
    Plain(u64),
    Cond { target_or_not_evidence: u64, not_evidence: u64 },
}

impl TermKey {
    fn link(self) -> Link {
        match self {
            TermKey::Plain(set) => Link::Unconditional { set },
            TermKey::Cond {
                target_or_not_evidence,
                not_evidence,
            } => Link::Conditional {
                target_or_not_evidence,
                not_evidence,
            },
        }
    }
}

impl CompiledSystem {
    pub fn frame(&self) -> &Arc<ProductFrame> {
        &self.frame
    }

    pub fn mass_dim(&self) -> usize {
        self.mass_dim
    }

    pub fn linear_rows(&self) -> &[MassRow] {
        &self.rows
    }

    pub fn guards(&self) -> &[MassRow] {
        &self.guards
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    pub fn param_rows(&self) -> &[ParamRow] {
        &self.param_rows
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn options(&self) -> &CompileOptions {
        &self.options
    }

    pub fn has_free_parameters(&self) -> bool {
        self.parameters.iter().any(Parameter::is_free)
    }

    fn full_mask(&self) -> u64 {
        full_mask(self.frame.theta_size())
    }

    /// Coefficients of `Bel(set)` over the mass vector.
    pub fn belief_row(&self, set: u64) -> Vec<f64> {
        belief_row(self.mass_dim, set)
    }

    /// Subset mask of a formula's extension.
    pub(crate) fn mask_of(&self, f: &crate::frames::Formula) -> u64 {
        f.extension(&self.frame).mask().expect("compiled frames fit a mask")
    }

    /// Key of a term, independent of how its formulas are written.
    fn key_of(&self, term: &BelTerm) -> TermKey {
        term_key(term, &self.frame, self.full_mask())
    }

    /// Rows stating `Bel(term) relation value`, plus the guard a conditional needs.
    pub fn query_rows(&self, term: &BelTerm, relation: Relation, value: f64) -> Vec<MassRow> {
        let key = self.key_of(term);
        let mut out = vec![value_row(self.mass_dim, key, relation, value, RowOrigin::Query, false)];
        if let TermKey::Cond { not_evidence, .. } = key {
            out.push(guard_row(self.mass_dim, not_evidence, self.options.guard_eps, RowOrigin::QueryGuard));
        }
        out
    }

    /// Evidence guard for a conditional query, if the term has evidence.
    pub fn query_guard(&self, term: &BelTerm) -> Option<MassRow> {
        match self.key_of(term) {
            TermKey::Cond { not_evidence, .. } => Some(guard_row(
                self.mass_dim,
                not_evidence,
                self.options.guard_eps,
                RowOrigin::QueryGuard,
            )),
            TermKey::Plain(_) => None,
        }
    }

    /// Value of a term at a mass vector through the cleared ratio; `None`
    /// when its denominator vanishes.
    pub fn term_value(&self, term: &BelTerm, mass: &[f64]) -> Option<f64> {
        link_value(self.key_of(term).link(), mass)
    }

    /// Copies of every guard (the system's and those in `extra`) requiring
    /// `Bel(Bᶜ) <= 1 - eps`.
    pub(crate) fn tightened_guards(&self, extra: &[MassRow], eps: f64) -> Vec<MassRow> {
        self.guards
            .iter()
            .chain(extra.iter().filter(|r| r.origin == RowOrigin::QueryGuard))
            .map(|r| MassRow {
                constant: 1.0 - eps,
                ..r.clone()
            })
            .collect()
    }

    /// Linear program over the mass vector for one parameter box, with
    /// `extra` rows appended. Exact when every box side is degenerate.
    pub fn program(&self, bx: &[(f64, f64)], extra: &[MassRow]) -> LinearProgram {
        let mut lp = LinearProgram::new(self.mass_dim);
        lp.pin_zero(0);
        for row in self.rows.iter().chain(&self.guards).chain(extra) {
            lp.push_row(row.to_linear());
        }
        for (p, param) in self.parameters.iter().enumerate() {
            let (lo, hi) = bx[p];
            for &link in &param.links {
                for row in link_rows(self.mass_dim, link, lo, hi) {
                    lp.push_row(row);
                }
            }
        }
        for row in &self.param_rows {
            let (mut smin, mut smax) = (0.0, 0.0);
            for &(p, c) in &row.params {
                let (lo, hi) = bx[p];
                smin += (c * lo).min(c * hi);
                smax += (c * lo).max(c * hi);
            }
            let base = row.base.clone();
            match row.relation {
                Relation::Le => lp.push_row(LinearRow::new(base, Relation::Le, row.constant - smin)),
                Relation::Ge => lp.push_row(LinearRow::new(base, Relation::Ge, row.constant - smax)),
                Relation::Eq => {
                    if smax - smin <= 1e-15 {
                        lp.push_row(LinearRow::new(base, Relation::Eq, row.constant - smin));
                    } else {
                        lp.push_row(LinearRow::new(base.clone(), Relation::Ge, row.constant - smax));
                        lp.push_row(LinearRow::new(base, Relation::Le, row.constant - smin));
                    }
                }
            }
        }
        lp
    }

    /// Whether `mass` satisfies every row, guard and parameter tie of the
    /// system within `tol`. Returns the parameter values when it does.
    pub fn check(&self, mass: &[f64], tol: f64) -> Option<Vec<f64>> {
        if mass.len() != self.mass_dim || mass[0].abs() > tol || mass.iter().any(|&x| x < -tol) {
            return None;
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > tol {
            return None;
        }
        if self.rows.iter().chain(&self.guards).any(|r| r.violation(mass) > tol) {
            return None;
        }
        let mut values = Vec::with_capacity(self.parameters.len());
        for param in &self.parameters {
            let vals: Option<Vec<f64>> = param.links.iter().map(|&l| link_value(l, mass)).collect();
            let vals = vals?;
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tol {
                return None;
            }
            let v = (lo + hi) / 2.0;
            if v < param.domain.0 - tol || v > param.domain.1 + tol {
                return None;
            }
            values.push(v);
        }
        for row in &self.param_rows {
            let lhs: f64 = row.base.iter().zip(mass).map(|(a, x)| a * x).sum::<f64>()
                + row.params.iter().map(|&(p, c)| c * values[p]).sum::<f64>();
            let ok = match row.relation {
                Relation::Le => lhs <= row.constant + tol,
                Relation::Ge => lhs >= row.constant - tol,
                Relation::Eq => (lhs - row.constant).abs() <= tol,
            };
            if !ok {
                return None;
            }
        }
        Some(values)
    }

    /// Mean value of each parameter's linked terms at `mass`.
    pub(crate) fn param_values(&self, mass: &[f64]) -> Option<Vec<f64>> {
        self.parameters
            .iter()
            .map(|p| {
                let vals: Option<Vec<f64>> = p.links.iter().map(|&l| link_value(l, mass)).collect();
                let vals = vals?;
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    /// Whether some strict comparison holds with equality at `mass`.
    pub(crate) fn strict_rows_tight(&self, mass: &[f64], params: &[f64], tol: f64) -> bool {
        let direct = self
            .rows
            .iter()
            .filter(|r| r.strict)
            .any(|r| r.is_tight(mass, tol));
        let with_params = self.param_rows.iter().filter(|r| r.strict).any(|row| {
            let lhs: f64 = row.base.iter().zip(mass).map(|(a, x)| a * x).sum::<f64>()
                + row.params.iter().map(|&(p, c)| c * params.get(p).copied().unwrap_or(0.0)).sum::<f64>();
            (lhs - row.constant).abs() <= tol
        });
        direct || with_params
    }
}

pub(crate) fn full_mask(theta: usize) -> u64 {
    if theta >= 64 {
        u64::MAX
    } else {
        (1u64 << theta) - 1
    }
}

fn belief_row(dim: usize, set: u64) -> Vec<f64> {
    let mut row = vec![0.0; dim];
    let mut sub = set;
    loop {
        if sub != 0 {
            row[sub as usize] = 1.0;
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & set;
    }
    row
}

fn term_key(term: &BelTerm, frame: &Arc<ProductFrame>, full: u64) -> TermKey {
    let target = term.target.extension(frame).mask().expect("compiled frames fit a mask");
    match &term.evidence {
        None => TermKey::Plain(target),
        Some(e) => {
            let evidence = e.extension(frame).mask().expect("compiled frames fit a mask");
            let not_evidence = full & !evidence;
            TermKey::Cond {
                target_or_not_evidence: target | not_evidence,
                not_evidence,
            }
        }
    }
}

/// `N - value·K relation 0` for a conditional, `Bel(set) relation value` otherwise.
fn value_row(dim: usize, key: TermKey, relation: Relation, value: f64, origin: RowOrigin, strict: bool) -> MassRow {
    match key {
        TermKey::Plain(set) => MassRow {
            coefficients: belief_row(dim, set),
            relation,
            constant: value,
            origin,
            strict,
        },
        TermKey::Cond {
            target_or_not_evidence,
            not_evidence,
        } => MassRow {
            coefficients: cleared_row(dim, target_or_not_evidence, not_evidence, value),
            relation,
            constant: 0.0,
            origin,
            strict,
        },
    }
}

/// Coefficients of `Bel(A ∪ Bᶜ) - Bel(Bᶜ) - v·(1 - Bel(Bᶜ))`, using `Σ mass = 1`.
fn cleared_row(dim: usize, target_or_not_evidence: u64, not_evidence: u64, v: f64) -> Vec<f64> {
    let num = belief_row(dim, target_or_not_evidence);
    let nb = belief_row(dim, not_evidence);
    (0..dim)
        .map(|i| {
            let ones = if i == 0 { 0.0 } else { 1.0 };
            num[i] - nb[i] - v * (ones - nb[i])
        })
        .collect()
}

fn guard_row(dim: usize, not_evidence: u64, eps: f64, origin: RowOrigin) -> MassRow {
    MassRow {
        coefficients: belief_row(dim, not_evidence),
        relation: Relation::Le,
        constant: 1.0 - eps,
        origin,
        strict: false,
    }
}

fn link_rows(dim: usize, link: Link, lo: f64, hi: f64) -> Vec<LinearRow> {
    let key = match link {
        Link::Unconditional { set } => TermKey::Plain(set),
        Link::Conditional {
            target_or_not_evidence,
            not_evidence,
        } => TermKey::Cond {
            target_or_not_evidence,
            not_evidence,
        },
    };
    let row = |rel, v| value_row(dim, key, rel, v, RowOrigin::Query, false).to_linear();
    if hi - lo <= 1e-15 {
        vec![row(Relation::Eq, lo)]
    } else {
        vec![row(Relation::Ge, lo), row(Relation::Le, hi)]
    }
}

pub(crate) fn link_value(link: Link, mass: &[f64]) -> Option<f64> {
    let bel = |set: u64| -> f64 {
        let mut total = 0.0;
        let mut sub = set;
        while sub != 0 {
            total += mass[sub as usize];
            sub = (sub - 1) & set;
        }
        total
    };
    match link {
        Link::Unconditional { set } => Some(bel(set)),
        Link::Conditional {
            target_or_not_evidence,
            not_evidence,
        } => {
            let nb = bel(not_evidence);
            let k = 1.0 - nb;
            if k <= 1e-12 {
                None
            } else {
                Some((bel(target_or_not_evidence) - nb) / k)
            }
        }
    }
}

fn relation_of(relop: Relop) -> Relation {
    match relop {
        Relop::Eq => Relation::Eq,
        Relop::Le | Relop::Lt => Relation::Le,
        Relop::Ge | Relop::Gt => Relation::Ge,
    }
}

fn flip(relop: Relop) -> Relop {
    match relop {
        Relop::Eq => Relop::Eq,
        Relop::Le => Relop::Ge,
        Relop::Ge => Relop::Le,
        Relop::Lt => Relop::Gt,
        Relop::Gt => Relop::Lt,
    }
}

/// Shifts a strict comparison's constant so it becomes non-strict.
fn tighten(relop: Relop, constant: f64, slack: f64) -> f64 {
    match relop {
        Relop::Lt => constant - slack,
        Relop::Gt => constant + slack,
        _ => constant,
    }
}

/// Lowers `constraints` into a [`CompiledSystem`] over `frame`.
pub fn compile(
    constraints: &[Constraint],
    frame: &Arc<ProductFrame>,
    options: &CompileOptions,
) -> Result<CompiledSystem, CompileError> {
    let theta = frame.theta_size();
    if theta > options.max_theta || theta > 20 {
        return Err(CompileError::ThetaCap {
            size: theta,
            cap: options.max_theta.min(20),
        });
    }
    for c in constraints {
        for t in c.terms() {
            t.target.validate(frame).map_err(|e| CompileError::Frame(e.to_string()))?;
            if let Some(e) = &t.evidence {
                e.validate(frame).map_err(|e| CompileError::Frame(e.to_string()))?;
            }
        }
    }

    let dim = 1usize << theta;
    let full = full_mask(theta);
    let mut rows = Vec::new();
    let mut guards: Vec<MassRow> = Vec::new();
    let mut guarded: HashMap<u64, usize> = HashMap::new();
    let mut parameters: Vec<Parameter> = Vec::new();
    let mut param_of: HashMap<TermKey, usize> = HashMap::new();
    let mut param_rows: Vec<ParamRow> = Vec::new();
    // single-term constraints, used to narrow parameter domains
    let mut pins: Vec<(TermKey, Relop, f64)> = Vec::new();

    let mut add_guard = |key: TermKey, origin: usize, guards: &mut Vec<MassRow>| {
        if let TermKey::Cond { not_evidence, .. } = key {
            guarded.entry(not_evidence).or_insert_with(|| {
                guards.push(guard_row(dim, not_evidence, options.guard_eps, RowOrigin::Guard(origin)));
                guards.len() - 1
            });
        }
    };

    for (ci, c) in constraints.iter().enumerate() {
        let origin = RowOrigin::Constraint(ci);
        let strict = c.relop.is_strict();
        // lhs - rhs relop 0, terms merged by the sets they denote
        let mut terms: Vec<(TermKey, f64)> = Vec::new();
        for (coef, t) in c.lhs.terms.iter().map(|(k, t)| (*k, t)).chain(c.rhs.terms.iter().map(|(k, t)| (-k, t))) {
            let key = term_key(t, frame, full);
            match terms.iter_mut().find(|(k, _)| *k == key) {
                Some(entry) => entry.1 += coef,
                None => terms.push((key, coef)),
            }
        }
        terms.retain(|(_, c)| *c != 0.0);
        let constant = c.rhs.constant - c.lhs.constant;
        for (key, _) in &terms {
            add_guard(*key, ci, &mut guards);
        }

        let conditional: Vec<usize> = (0..terms.len())
            .filter(|&i| matches!(terms[i].0, TermKey::Cond { .. }))
            .collect();

        if conditional.is_empty() {
            let mut coefficients = vec![0.0; dim];
            for (key, coef) in &terms {
                if let TermKey::Plain(set) = key {
                    for (c, b) in coefficients.iter_mut().zip(belief_row(dim, *set)) {
                        *c += coef * b;
                    }
                }
            }
            if terms.len() == 1 {
                let (key, coef) = terms[0];
                let relop = if coef < 0.0 { flip(c.relop) } else { c.relop };
                pins.push((key, relop, constant / coef));
            }
            rows.push(MassRow {
                coefficients,
                relation: relation_of(c.relop),
                constant: tighten(c.relop, constant, options.strict_slack),
                origin,
                strict,
            });
            continue;
        }

        if terms.len() == 1 {
            let (key, coef) = terms[0];
            let relop = if coef < 0.0 { flip(c.relop) } else { c.relop };
            let value = constant / coef;
            pins.push((key, relop, value));
            let v = tighten(relop, value, options.strict_slack);
            rows.push(value_row(dim, key, relation_of(relop), v, origin, strict));
            continue;
        }

        let is_tie = c.relop == Relop::Eq
            && terms.len() == 2
            && constant == 0.0
            && (terms[0].1 + terms[1].1).abs() <= 1e-15;
        if is_tie {
            let (a, b) = (terms[0].0, terms[1].0);
            match (param_of.get(&a).copied(), param_of.get(&b).copied()) {
                (Some(p), Some(q)) if p != q => merge_parameters(&mut parameters, &mut param_of, &mut param_rows, p, q),
                (Some(_), Some(_)) => {}
                (Some(p), None) => {
                    parameters[p].links.push(b.link());
                    param_of.insert(b, p);
                }
                (None, Some(q)) => {
                    parameters[q].links.push(a.link());
                    param_of.insert(a, q);
                }
                (None, None) => {
                    let p = parameters.len();
                    parameters.push(Parameter {
                        name: String::new(),
                        domain: (0.0, 1.0),
                        links: vec![a.link(), b.link()],
                    });
                    param_of.insert(a, p);
                    param_of.insert(b, p);
                }
            }
            continue;
        }

        // general linear combination: one parameter per conditional term
        let mut base = vec![0.0; dim];
        let mut params = Vec::new();
        for (key, coef) in &terms {
            match key {
                TermKey::Plain(set) => {
                    for (c, b) in base.iter_mut().zip(belief_row(dim, *set)) {
                        *c += coef * b;
                    }
                }
                TermKey::Cond { .. } => {
                    let p = *param_of.entry(*key).or_insert_with(|| {
                        parameters.push(Parameter {
                            name: String::new(),
                            domain: (0.0, 1.0),
                            links: vec![key.link()],
                        });
                        parameters.len() - 1
                    });
                    params.push((p, *coef));
                }
            }
        }
        param_rows.push(ParamRow {
            base,
            params,
            relation: relation_of(c.relop),
            constant: tighten(c.relop, constant, options.strict_slack),
            origin,
            strict,
        });
    }

    if parameters.len() > options.max_parameters {
        return Err(CompileError::TooManyParameters {
            needed: parameters.len(),
            max: options.max_parameters,
        });
    }

    for (p, param) in parameters.iter_mut().enumerate() {
        param.name = format!("t{}", p + 1);
        let (mut lo, mut hi) = param.domain;
        for (key, relop, v) in &pins {
            if !param.links.contains(&key.link()) {
                continue;
            }
            match relop {
                Relop::Eq => {
                    lo = lo.max(*v);
                    hi = hi.min(*v);
                }
                Relop::Le => hi = hi.min(*v),
                Relop::Lt => hi = hi.min(v - options.strict_slack),
                Relop::Ge => lo = lo.max(*v),
                Relop::Gt => lo = lo.max(v + options.strict_slack),
            }
        }
        param.domain = (lo, hi);
    }

    Ok(CompiledSystem {
        frame: Arc::clone(frame),
        mass_dim: dim,
        rows,
        guards,
        parameters,
        param_rows,
        constraints: constraints.to_vec(),
        options: options.clone(),
    })
}

fn merge_parameters(
    parameters: &mut Vec<Parameter>,
    param_of: &mut HashMap<TermKey, usize>,
    param_rows: &mut [ParamRow],
    keep: usize,
    gone: usize,
) {
    let moved = std::mem::take(&mut parameters[gone].links);
    parameters[keep].links.extend(moved);
    parameters.remove(gone);
    let relabel = |p: usize| {
        let p = if p == gone { keep } else { p };
        if p > gone {
            p - 1
        } else {
            p
        }
    };
    for v in param_of.values_mut() {
        *v = relabel(*v);
    }
    for row in param_rows.iter_mut() {
        for entry in row.params.iter_mut() {
            entry.0 = relabel(entry.0);
        }
    }
}
