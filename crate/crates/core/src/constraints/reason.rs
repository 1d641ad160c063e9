use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

/// A mass vector or a parameter assignment.
type Point = Vec<f64>;

use super::compile::{compile, full_mask, CompileOptions, CompiledSystem, MassRow, RowOrigin};
use super::{BelTerm, Constraint, Interval, QueryError};
use crate::belief::MassFunction;
use crate::frames::{Formula, ProductFrame};
use crate::solver::{solve, Direction, Relation};

/// Linear programs one witness search may solve before giving up.
pub const SEARCH_BUDGET: usize = 20_000;
/// Bisection steps for conditional and parameterized bounds.
pub const BISECTION_STEPS: usize = 30;
/// Frame size above which `mincommit` refuses to run.
pub const MINCOMMIT_CAP: usize = 12;

const ACCEPT_TOL: f64 = 1e-7;
/// Tolerance of the conditioning-based check every witness must pass.
const ORACLE_TOL: f64 = 1e-6;
const LEAF_WIDTH: f64 = 1e-9;
const WITNESS_CACHE: usize = 32;
/// Guard used when re-solving after a vertex failed the direct check.
const ROBUST_GUARD: f64 = 1e-6;

/// A mass vector satisfying a compiled system, with its parameter values.
#[derive(Debug, Clone)]
pub struct Witness {
    pub mass: MassFunction,
    pub vector: Vec<f64>,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }
}

/// Range of a query over the feasible set, with the witnesses at each end.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub interval: Interval,
    pub lo_witness: Witness,
    pub hi_witness: Witness,
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.interval.fmt(f)
    }
}

/// Lower envelope of `Bel` over the feasible set and its Möbius inverse.
#[derive(Debug, Clone)]
pub struct MinCommit {
    /// The minimum-committed belief function, when the envelope is one and satisfies the system.
    pub result: Option<MassFunction>,
    /// `envelope[mask]` is the least feasible `Bel` of that subset.
    pub envelope: Vec<f64>,
    /// Möbius inverse of the envelope before clamping.
    pub candidate: Vec<f64>,
    /// Some candidate mass fell below `-1e-9`.
    pub negative_mass: bool,
}

/// What a witness must additionally satisfy when evaluated directly:
/// the query term is defined, and optionally compares with a value.
#[derive(Clone, Copy)]
struct QueryCheck<'a> {
    term: &'a BelTerm,
    compare: Option<(Relation, f64)>,
}

struct Search<'a> {
    sys: &'a CompiledSystem,
    extra: &'a [MassRow],
    query: Option<QueryCheck<'a>>,
    objective: Option<(&'a [f64], Direction)>,
    lps: usize,
}

impl Search<'_> {
    fn solve(&mut self, bx: &[(f64, f64)], robust: bool) -> Result<Option<Vec<f64>>, QueryError> {
        if self.lps >= SEARCH_BUDGET {
            return Err(QueryError::SearchBudget(SEARCH_BUDGET));
        }
        self.lps += 1;
        let mut lp = if robust {
            let mut extra = self.extra.to_vec();
            let guards = self.sys.tightened_guards(self.extra, ROBUST_GUARD);
            // prefer vertices whose evidence carries as much mass as possible
            let mut spread = vec![0.0; self.sys.mass_dim()];
            for g in &guards {
                for (s, c) in spread.iter_mut().zip(&g.coefficients) {
                    *s += c;
                }
            }
            extra.extend(guards);
            let mut lp = self.sys.program(bx, &extra);
            if self.objective.is_none() {
                lp.set_objective(spread, Direction::Minimize);
            }
            lp
        } else {
            self.sys.program(bx, self.extra)
        };
        if let Some((c, dir)) = self.objective {
            lp.set_objective(c.to_vec(), dir);
        }
        Ok(solve(&lp)?.point().map(<[f64]>::to_vec))
    }

    /// Accepts an LP point only if conditioning and belief, evaluated
    /// directly, agree that every constraint (and the query) holds. Cleared
    /// rows alone are fooled by vertices whose evidence has mass near the
    /// guard.
    fn accept(&self, point: &[f64]) -> Option<Vec<f64>> {
        if self.extra.iter().any(|r| r.violation(point) > ACCEPT_TOL) {
            return None;
        }
        let m = MassFunction::from_mass_vector(self.sys.frame(), point).ok()?;
        if !self.sys.constraints().iter().all(|c| c.holds(&m, ORACLE_TOL, 0.0)) {
            return None;
        }
        if let Some(q) = self.query {
            let v = q.term.evaluate(&m).ok()?;
            let ok = match q.compare {
                None => true,
                Some((Relation::Le, c)) => v <= c + ORACLE_TOL,
                Some((Relation::Ge, c)) => v >= c - ORACLE_TOL,
                Some((Relation::Eq, c)) => (v - c).abs() <= ORACLE_TOL,
            };
            if !ok {
                return None;
            }
        }
        self.sys.param_values(point)
    }

    /// Solves one box; a point failing the direct check is retried once
    /// with guards held well away from the tolerance.
    fn try_box(&mut self, bx: &[(f64, f64)]) -> Result<(Option<Point>, Option<Point>), QueryError> {
        let Some(point) = self.solve(bx, false)? else { return Ok((None, None)) };
        if let Some(params) = self.accept(&point) {
            return Ok((Some(point), Some(params)));
        }
        let has_guards = !self.sys.guards().is_empty() || self.extra.iter().any(|r| r.origin == RowOrigin::QueryGuard);
        if has_guards {
            if let Some(robust) = self.solve(bx, true)? {
                if let Some(params) = self.accept(&robust) {
                    return Ok((Some(robust), Some(params)));
                }
            }
        }
        Ok((Some(point), None))
    }

    /// Depth-first bisection over the free parameters' box.
    fn run(&mut self) -> Result<Option<(Point, Point)>, QueryError> {
        let domains: Vec<(f64, f64)> = self.sys.parameters().iter().map(|p| p.domain).collect();
        if domains.iter().any(|(lo, hi)| lo > hi) {
            return Ok(None);
        }
        let cell = 1.0 / self.sys.options().grid.max(1) as f64;
        let mut stack = vec![(domains, false)];
        while let Some((bx, centered)) = stack.pop() {
            let (point, params) = self.try_box(&bx)?;
            let Some(point) = point else { continue };
            if let Some(params) = params {
                return Ok(Some((point, params)));
            }
            let (widest, width) = bx
                .iter()
                .enumerate()
                .map(|(i, (lo, hi))| (i, hi - lo))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if width <= LEAF_WIDTH {
                continue;
            }
            let mut centered = centered;
            if width <= cell && !centered {
                centered = true;
                let center: Vec<(f64, f64)> = bx.iter().map(|(lo, hi)| ((lo + hi) / 2.0, (lo + hi) / 2.0)).collect();
                if let (Some(point), Some(params)) = self.try_box(&center)? {
                    return Ok(Some((point, params)));
                }
            }
            let (lo, hi) = bx[widest];
            let mid = (lo + hi) / 2.0;
            let mut upper = bx.clone();
            upper[widest] = (mid, hi);
            let mut lower = bx;
            lower[widest] = (lo, mid);
            stack.push((upper, centered));
            stack.push((lower, centered));
        }
        Ok(None)
    }
}

fn witness(sys: &CompiledSystem, vector: Vec<f64>, params: Vec<f64>) -> Result<Witness, QueryError> {
    let mass = MassFunction::from_mass_vector(sys.frame(), &vector)?;
    Ok(Witness { mass, vector, params })
}

fn find(
    sys: &CompiledSystem,
    extra: &[MassRow],
    query: Option<QueryCheck<'_>>,
    objective: Option<(&[f64], Direction)>,
) -> Result<Option<Witness>, QueryError> {
    let mut search = Search {
        sys,
        extra,
        query,
        objective,
        lps: 0,
    };
    match search.run()? {
        Some((vector, params)) => Ok(Some(witness(sys, vector, params)?)),
        None => Ok(None),
    }
}

/// Whether some belief function satisfies the system.
pub fn feasible(sys: &CompiledSystem) -> Result<Feasibility, QueryError> {
    Ok(match find(sys, &[], None, None)? {
        Some(w) => Feasibility::Feasible(w),
        None => Feasibility::Infeasible,
    })
}

/// A feasible witness optimizing a linear objective over the mass vector.
/// With free parameters the witness is optimal for its parameter cell only.
pub fn optimize(sys: &CompiledSystem, objective: &[f64], direction: Direction) -> Result<Option<Witness>, QueryError> {
    find(sys, &[], None, Some((objective, direction)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Lo,
    Hi,
}

fn extreme(sys: &CompiledSystem, query: &BelTerm, side: Side, seed: &Witness) -> Result<(f64, Witness), QueryError> {
    if query.evidence.is_none() && !sys.has_free_parameters() {
        let set = sys.mask_of(&query.target);
        let dir = match side {
            Side::Lo => Direction::Minimize,
            Side::Hi => Direction::Maximize,
        };
        let w = find(sys, &[], None, Some((&sys.belief_row(set), dir)))?.ok_or(QueryError::Infeasible)?;
        let v = sys.term_value(query, &w.vector).unwrap_or(0.0).clamp(0.0, 1.0);
        return Ok((v, w));
    }

    let (relation, edge) = match side {
        Side::Lo => (Relation::Le, 0.0),
        Side::Hi => (Relation::Ge, 1.0),
    };
    let at = |v: f64| {
        Some(QueryCheck {
            term: query,
            compare: Some((relation, v)),
        })
    };
    if let Some(w) = find(sys, &sys.query_rows(query, relation, edge), at(edge), None)? {
        return Ok((edge, w));
    }
    // `good` is always attained by a witness, `bad` never
    let (mut good, mut bad) = (1.0 - edge, edge);
    let mut best = seed.clone();
    for _ in 0..BISECTION_STEPS {
        let mid = (good + bad) / 2.0;
        match find(sys, &sys.query_rows(query, relation, mid), at(mid), None)? {
            Some(w) => {
                good = mid;
                best = w;
            }
            None => bad = mid,
        }
    }
    // the witness value may pass `good` by the direct-check tolerance
    let (a, b) = if good < bad { (good, bad) } else { (bad, good) };
    let v = sys
        .term_value(query, &best.vector)
        .unwrap_or(good)
        .clamp(a - ORACLE_TOL, b + ORACLE_TOL)
        .clamp(0.0, 1.0);
    Ok((v, best))
}

/// Tight range of `query` over every belief function satisfying the system.
pub fn bounds(sys: &CompiledSystem, query: &BelTerm) -> Result<Bounds, QueryError> {
    query
        .target
        .validate(sys.frame())
        .map_err(|e| super::CompileError::Frame(e.to_string()))?;
    if let Some(e) = &query.evidence {
        e.validate(sys.frame())
            .map_err(|e| super::CompileError::Frame(e.to_string()))?;
    }
    let seed = match feasible(sys)? {
        Feasibility::Feasible(w) => w,
        Feasibility::Infeasible => return Err(QueryError::Infeasible),
    };
    let seed = match sys.query_guard(query) {
        None => seed,
        Some(guard) => {
            let defined = QueryCheck {
                term: query,
                compare: None,
            };
            find(sys, &[guard], Some(defined), None)?.ok_or(QueryError::QueryUndefinedEverywhere)?
        }
    };
    let (mut lo, lo_witness) = extreme(sys, query, Side::Lo, &seed)?;
    let (mut hi, hi_witness) = extreme(sys, query, Side::Hi, &seed)?;
    let open = |w: &Witness| sys.strict_rows_tight(&w.vector, &w.params, LEAF_WIDTH);
    let (lo_open, hi_open) = (open(&lo_witness), open(&hi_witness));
    if lo_open || hi_open {
        // an open endpoint is the extreme of the closure, not of the slackened system
        let closed = CompileOptions {
            strict_slack: 0.0,
            ..sys.options().clone()
        };
        let closure = compile(sys.constraints(), sys.frame(), &closed)?;
        if lo_open {
            lo = extreme(&closure, query, Side::Lo, &seed)?.0.min(lo);
        }
        if hi_open {
            hi = extreme(&closure, query, Side::Hi, &seed)?.0.max(hi);
        }
    }
    let interval = Interval {
        lo,
        hi: hi.max(lo),
        lo_open,
        hi_open,
    };
    Ok(Bounds {
        interval,
        lo_witness,
        hi_witness,
    })
}

/// Guaranteed range of surprise at `event` occurring, given `evidence`:
/// the bounds of `Bel(¬event | evidence)`.
pub fn surprise_report(sys: &CompiledSystem, event: &Formula, evidence: Option<&Formula>) -> Result<Bounds, QueryError> {
    let target = Formula::not(event.clone());
    let query = match evidence {
        Some(g) => BelTerm::conditional(target, g.clone()),
        None => BelTerm::unconditional(target),
    };
    bounds(sys, &query)
}

fn belief_table(vector: &[f64]) -> Vec<f64> {
    let mut t = vector.to_vec();
    let n = t.len().trailing_zeros();
    for bit in 0..n {
        let b = 1usize << bit;
        for s in 0..t.len() {
            if s & b != 0 {
                t[s] += t[s ^ b];
            }
        }
    }
    t
}

fn mobius(envelope: &[f64]) -> Vec<f64> {
    let mut m = envelope.to_vec();
    let n = m.len().trailing_zeros();
    for bit in 0..n {
        let b = 1usize << bit;
        for s in 0..m.len() {
            if s & b != 0 {
                m[s] -= m[s ^ b];
            }
        }
    }
    m
}

/// Minimum-committed element of the feasible set, via the lower envelope
/// of `Bel` and Möbius inversion.
pub fn mincommit(sys: &CompiledSystem) -> Result<MinCommit, QueryError> {
    let theta = sys.frame().theta_size();
    if theta > MINCOMMIT_CAP {
        return Err(QueryError::FrameTooLarge {
            size: theta,
            cap: MINCOMMIT_CAP,
        });
    }
    let seed = feasible(sys)?.witness().cloned().ok_or(QueryError::Infeasible)?;
    let dim = sys.mass_dim();
    let full = full_mask(theta) as usize;
    let mut cache: VecDeque<Vec<f64>> = VecDeque::new();
    cache.push_back(belief_table(&seed.vector));

    let mut envelope = vec![0.0; dim];
    envelope[full] = 1.0;
    for set in 1..full {
        if cache.iter().any(|t| t[set] <= 1e-12) {
            continue;
        }
        let term = BelTerm::unconditional(mask_formula(sys.frame(), set as u64));
        let (v, w) = extreme(sys, &term, Side::Lo, &seed)?;
        envelope[set] = v;
        if cache.len() == WITNESS_CACHE {
            cache.pop_front();
        }
        cache.push_back(belief_table(&w.vector));
    }

    let candidate = mobius(&envelope);
    let negative_mass = candidate.iter().any(|&m| m < -1e-9);
    let result = if negative_mass {
        None
    } else {
        let clamped: Vec<f64> = candidate.iter().map(|&m| m.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if (total - 1.0).abs() > 1e-6 || sys.check(&clamped, ACCEPT_TOL).is_none() {
            None
        } else {
            Some(MassFunction::from_mass_vector(sys.frame(), &clamped)?)
        }
    };
    Ok(MinCommit {
        result,
        envelope,
        candidate,
        negative_mass,
    })
}

/// Disjunction of the points of `mask`, each written as a conjunction of atoms.
fn mask_formula(frame: &Arc<ProductFrame>, mask: u64) -> Formula {
    let point_formula = |p: usize| {
        let mut f: Option<Formula> = None;
        for v in 0..frame.variables().len() {
            let atom = Formula::Atom {
                var: v,
                value: frame.coordinate(p, v),
            };
            f = Some(match f {
                None => atom,
                Some(g) => Formula::and(g, atom),
            });
        }
        f.expect("frames have variables")
    };
    let mut out: Option<Formula> = None;
    for p in 0..frame.theta_size() {
        if mask >> p & 1 == 1 {
            let f = point_formula(p);
            out = Some(match out {
                None => f,
                Some(g) => Formula::or(g, f),
            });
        }
    }
    out.unwrap_or_else(|| {
        let a = point_formula(0);
        Formula::and(a.clone(), Formula::not(a))
    })
}

/// Indices of an irreducible infeasible subset of `constraints`, found by
/// greedy deletion; `None` when the whole set is feasible.
pub fn why_infeasible(
    constraints: &[Constraint],
    frame: &Arc<ProductFrame>,
    options: &CompileOptions,
) -> Result<Option<Vec<usize>>, QueryError> {
    let infeasible = |idx: &[usize]| -> Result<Option<bool>, QueryError> {
        let subset: Vec<Constraint> = idx.iter().map(|&i| constraints[i].clone()).collect();
        match compile(&subset, frame, options) {
            Ok(sys) => Ok(Some(!feasible(&sys)?.is_feasible())),
            Err(_) => Ok(None),
        }
    };
    let mut keep: Vec<usize> = (0..constraints.len()).collect();
    match infeasible(&keep)? {
        Some(true) => {}
        Some(false) => return Ok(None),
        None => return Err(compile(constraints, frame, options).unwrap_err().into()),
    }
    let mut i = 0;
    while i < keep.len() {
        let mut trial = keep.clone();
        trial.remove(i);
        if infeasible(&trial)? == Some(true) {
            keep = trial;
        } else {
            i += 1;
        }
    }
    Ok(Some(keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(frame: &Arc<ProductFrame>, lines: &[&str]) -> CompiledSystem {
        let cs: Vec<Constraint> = lines
            .iter()
            .map(|l| Constraint::parse(l, frame, &|_| None).unwrap())
            .collect();
        compile(&cs, frame, &CompileOptions::default()).unwrap()
    }

    fn term(frame: &Arc<ProductFrame>, text: &str) -> BelTerm {
        BelTerm::parse(text, frame).unwrap()
    }

    #[test]
    fn empty_system_gives_unit_interval() {
        let frame = ProductFrame::booleans(&["HIRE"]).unwrap();
        let sys = system(&frame, &[]);
        let b = bounds(&sys, &term(&frame, "Bel(HIRE)")).unwrap();
        assert_eq!((b.interval.lo, b.interval.hi), (0.0, 1.0));
        let b = bounds(&sys, &term(&frame, "Bel(HIRE or not HIRE)")).unwrap();
        assert_eq!((b.interval.lo, b.interval.hi), (1.0, 1.0));
    }

    #[test]
    fn hire_is_vacuous() {
        let frame = ProductFrame::booleans(&["HIRE"]).unwrap();
        let sys = system(&frame, &["Bel(HIRE) = 0", "Bel(~HIRE) = 0"]);
        let w = feasible(&sys).unwrap();
        assert!(w.witness().unwrap().mass.is_vacuous());
        let mc = mincommit(&sys).unwrap();
        assert!(mc.result.unwrap().is_vacuous());
        let s = surprise_report(&sys, &crate::frames::parse_formula("HIRE", &frame).unwrap(), None).unwrap();
        assert_eq!((s.interval.lo, s.interval.hi), (0.0, 0.0));
    }

    #[test]
    fn two_halves_mincommit() {
        let frame = ProductFrame::booleans(&["A"]).unwrap();
        let sys = system(&frame, &["Bel(A) >= .5", "Bel(~A) >= .5"]);
        let m = mincommit(&sys).unwrap().result.unwrap();
        assert_eq!(m.focal_count(), 2);
        assert!((m.belief(&crate::frames::parse_formula("A", &frame).unwrap().extension(&frame)).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn conditional_bounds_by_bisection() {
        let frame = ProductFrame::booleans(&["BIRD", "FLY"]).unwrap();
        let sys = system(&frame, &["Bel(FLY | BIRD) = .4"]);
        let b = bounds(&sys, &term(&frame, "Bel(FLY | BIRD)")).unwrap();
        assert!((b.interval.lo - 0.4).abs() < 1e-8 && (b.interval.hi - 0.4).abs() < 1e-8);
    }

    #[test]
    fn undefined_query_is_reported() {
        let frame = ProductFrame::booleans(&["A"]).unwrap();
        let sys = system(&frame, &["Bel(~A) = 1"]);
        assert!(matches!(
            bounds(&sys, &term(&frame, "Bel(A | A)")),
            Err(QueryError::QueryUndefinedEverywhere)
        ));
    }

    #[test]
    fn strict_endpoints_are_open() {
        let frame = ProductFrame::booleans(&["Pac"]).unwrap();
        let sys = system(&frame, &["Bel(Pac) > 0", "Bel(~Pac) > 0"]);
        let b = bounds(&sys, &term(&frame, "Bel(Pac)")).unwrap();
        assert!(b.interval.lo_open);
        assert!(b.interval.hi_open);
    }

    #[test]
    fn conflict_is_irreducible() {
        let frame = ProductFrame::booleans(&["A", "B"]).unwrap();
        let cs: Vec<Constraint> = ["Bel(B) = .2", "Bel(A) = .6", "Bel(A) = .3"]
            .iter()
            .map(|l| Constraint::parse(l, &frame, &|_| None).unwrap())
            .collect();
        let core = why_infeasible(&cs, &frame, &CompileOptions::default()).unwrap().unwrap();
        assert_eq!(core, vec![1, 2]);
        assert!(why_infeasible(&cs[..2], &frame, &CompileOptions::default()).unwrap().is_none());
    }

    #[test]
    fn party_parameter_is_swept() {
        let frame = ProductFrame::booleans(&["PARTY", "RAIN"]).unwrap();
        let sys = system(&frame, &["Bel(PARTY) = Bel(PARTY | RAIN)", "Bel(PARTY) >= .3"]);
        let w = feasible(&sys).unwrap();
        let w = w.witness().unwrap();
        let a = term(&frame, "Bel(PARTY)").evaluate(&w.mass).unwrap();
        let b = term(&frame, "Bel(PARTY | RAIN)").evaluate(&w.mass).unwrap();
        assert!((a - b).abs() < 1e-6 && a >= 0.3 - 1e-9);
    }
}
