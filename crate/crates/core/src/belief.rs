//! Mass functions, belief, Dempster's rule of conditioning, surprise and
//! the commitment order on belief functions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::frames::{write_points, PointSet, ProductFrame, Subset};
use crate::TOLERANCE;

/// Output focal elements lighter than this are dropped after conditioning.
const DROP_BELOW: f64 = 1e-12;

/// Largest frame for which [`MassFunction::is_conjunctive`] enumerates triples.
pub const CONJUNCTIVE_CAP: usize = 8;
/// Largest frame for which [`leq_committed`] compares full belief tables.
pub const COMMITMENT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeliefError {
    #[error("subset belongs to a different frame")]
    FrameMismatch,
    #[error("conditioning undefined: Bel of the complement of the evidence is 1")]
    ConditioningUndefined,
    #[error("cannot condition on the empty set")]
    EmptyEvidence,
    #[error("frame has {size} points; this operation is limited to {cap}")]
    FrameTooLarge { size: usize, cap: usize },
    #[error("invalid mass assignment: {0}")]
    InvalidMass(String),
}

/// A basic mass assignment over the subsets of `Θ`.
///
/// Only focal elements are stored. `m(∅) = 0`, every stored mass is
/// strictly positive, and the masses sum to one within [`TOLERANCE`].
#[derive(Clone)]
pub struct MassFunction {
    frame: Arc<ProductFrame>,
    masses: BTreeMap<PointSet, f64>,
}

impl MassFunction {
    /// Builds a mass function from `(subset, mass)` pairs. Repeated subsets
    /// are merged and zero masses are skipped.
    pub fn new(
        frame: &Arc<ProductFrame>,
        entries: impl IntoIterator<Item = (Subset, f64)>,
    ) -> Result<Self, BeliefError> {
        let mut masses = BTreeMap::new();
        for (subset, mass) in entries {
            if !subset.same_frame(frame) {
                return Err(BeliefError::FrameMismatch);
            }
            if !mass.is_finite() || mass < 0.0 {
                return Err(BeliefError::InvalidMass(format!("mass {mass} on {subset}")));
            }
            if mass == 0.0 {
                continue;
            }
            if subset.is_empty() {
                return Err(BeliefError::InvalidMass("positive mass on the empty set".into()));
            }
            *masses.entry(subset.into_points()).or_insert(0.0) += mass;
        }
        let total: f64 = masses.values().sum();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(BeliefError::InvalidMass(format!("masses sum to {total}, not 1")));
        }
        Ok(MassFunction {
            frame: Arc::clone(frame),
            masses,
        })
    }

    /// The vacuous belief function: all mass on `Θ`.
    pub fn vacuous(frame: &Arc<ProductFrame>) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(PointSet::full(frame.theta_size()), 1.0);
        MassFunction {
            frame: Arc::clone(frame),
            masses,
        }
    }

    /// Builds a mass function from a dense vector indexed by subset bitmask
    /// (index 0 is `∅`). Entries below `1e-12` in magnitude are treated as zero
    /// and the rest are renormalized, which absorbs solver round-off.
    pub fn from_mass_vector(frame: &Arc<ProductFrame>, vector: &[f64]) -> Result<Self, BeliefError> {
        let n = frame.theta_size();
        if n > 63 || vector.len() != 1usize << n {
            return Err(BeliefError::InvalidMass(format!(
                "mass vector of length {} does not match a frame of {n} points",
                vector.len()
            )));
        }
        if vector[0].abs() > 1e-7 {
            return Err(BeliefError::InvalidMass("positive mass on the empty set".into()));
        }
        let mut masses = BTreeMap::new();
        let mut total = 0.0;
        for (mask, &v) in vector.iter().enumerate().skip(1) {
            if v < -1e-7 || !v.is_finite() {
                return Err(BeliefError::InvalidMass(format!("mass {v} at index {mask}")));
            }
            if v > DROP_BELOW {
                masses.insert(PointSet::from_mask(n, mask as u64), v);
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(BeliefError::InvalidMass(format!("masses sum to {total}, not 1")));
        }
        for v in masses.values_mut() {
            *v /= total;
        }
        Ok(MassFunction {
            frame: Arc::clone(frame),
            masses,
        })
    }

    pub fn frame(&self) -> &Arc<ProductFrame> {
        &self.frame
    }

    /// Focal elements with their masses, in a stable order.
    pub fn focal_elements(&self) -> impl Iterator<Item = (Subset, f64)> + '_ {
        self.masses
            .iter()
            .map(|(p, &m)| (Subset::new(&self.frame, p.clone()), m))
    }

    pub fn focal_count(&self) -> usize {
        self.masses.len()
    }

    /// Mass of exactly `subset` (zero when it is not focal).
    pub fn mass(&self, subset: &Subset) -> Result<f64, BeliefError> {
        self.check(subset)?;
        Ok(self.masses.get(subset.points()).copied().unwrap_or(0.0))
    }

    /// Dense mass vector indexed by subset bitmask; frames of at most 20 points.
    pub fn to_mass_vector(&self) -> Result<Vec<f64>, BeliefError> {
        let n = self.frame.theta_size();
        if n > 20 {
            return Err(BeliefError::FrameTooLarge { size: n, cap: 20 });
        }
        let mut v = vec![0.0; 1 << n];
        for (p, &m) in &self.masses {
            v[p.mask().expect("small frame") as usize] = m;
        }
        Ok(v)
    }

    fn check(&self, subset: &Subset) -> Result<(), BeliefError> {
        if subset.same_frame(&self.frame) {
            Ok(())
        } else {
            Err(BeliefError::FrameMismatch)
        }
    }

    /// `Bel(B)`: total mass of the focal elements contained in `B`.
    pub fn belief(&self, subset: &Subset) -> Result<f64, BeliefError> {
        self.check(subset)?;
        Ok(self.belief_of(subset.points()))
    }

    fn belief_of(&self, points: &PointSet) -> f64 {
        self.masses
            .iter()
            .filter(|(focal, _)| focal.is_subset_of(points))
            .fold(0.0, |acc, (_, m)| acc + m)
    }

    /// Dempster's rule of conditioning on evidence `B`.
    ///
    /// Every focal element `A` hands its mass to `A ∩ B`; focal elements
    /// inside `Bᶜ` are discarded and the rest renormalized by
    /// `K = 1 - Bel(Bᶜ)`.
    pub fn condition(&self, evidence: &Subset) -> Result<MassFunction, BeliefError> {
        self.check(evidence)?;
        if evidence.is_empty() {
            return Err(BeliefError::EmptyEvidence);
        }
        let k = 1.0 - self.belief_of(&evidence.points().complement());
        if k < TOLERANCE {
            return Err(BeliefError::ConditioningUndefined);
        }
        let mut masses: BTreeMap<PointSet, f64> = BTreeMap::new();
        for (focal, &m) in &self.masses {
            let kept = focal.intersection(evidence.points());
            if !kept.is_empty() {
                *masses.entry(kept).or_insert(0.0) += m;
            }
        }
        masses.retain(|_, m| {
            *m /= k;
            *m >= DROP_BELOW
        });
        let total: f64 = masses.values().sum();
        for m in masses.values_mut() {
            *m /= total;
        }
        Ok(MassFunction {
            frame: Arc::clone(&self.frame),
            masses,
        })
    }

    /// `Bel(A | B)` through conditioning.
    pub fn conditional_belief(&self, target: &Subset, evidence: &Subset) -> Result<f64, BeliefError> {
        self.condition(evidence)?.belief(target)
    }

    /// Surprise upon learning that `event` occurred: `Bel(eventᶜ)`.
    pub fn surprise(&self, event: &Subset) -> Result<f64, BeliefError> {
        self.check(event)?;
        Ok(self.belief_of(&event.points().complement()))
    }

    /// Surprise upon learning `event`, given that `given` is already known.
    pub fn conditional_surprise(&self, event: &Subset, given: &Subset) -> Result<f64, BeliefError> {
        self.check(event)?;
        self.condition(given)?.surprise(event)
    }

    pub fn is_vacuous(&self) -> bool {
        self.masses.len() == 1 && self.masses.keys().next().is_some_and(PointSet::is_full)
    }

    /// True iff the focal elements form a chain under inclusion.
    pub fn is_consonant(&self) -> bool {
        let mut focals: Vec<&PointSet> = self.masses.keys().collect();
        focals.sort_by_key(|p| p.len());
        focals.windows(2).all(|w| w[0].is_subset_of(w[1]))
    }

    /// Exhaustive conjunctivity test over all `(A, B, C)` triples.
    ///
    /// For every `B` on which conditioning is defined, the propositions that
    /// are believed with positive confidence while their complement gets no
    /// belief must be closed under intersection.
    pub fn is_conjunctive(&self) -> Result<bool, BeliefError> {
        self.is_conjunctive_with_cap(CONJUNCTIVE_CAP)
    }

    pub fn is_conjunctive_with_cap(&self, cap: usize) -> Result<bool, BeliefError> {
        let n = self.frame.theta_size();
        if n > cap || n > 16 {
            return Err(BeliefError::FrameTooLarge { size: n, cap: cap.min(16) });
        }
        let full = (1usize << n) - 1;
        let table = self.belief_table()?;
        for b in 1..=full {
            if table[full & !b] > 1.0 - TOLERANCE {
                continue;
            }
            let conditioned = self.condition(&Subset::from_mask(&self.frame, b as u64))?;
            let cond_table = conditioned.belief_table()?;
            let accepted = |a: usize| cond_table[a] > TOLERANCE && cond_table[full & !a] <= TOLERANCE;
            let believed: Vec<usize> = (0..=full).filter(|&a| accepted(a)).collect();
            for (i, &a) in believed.iter().enumerate() {
                for &c in &believed[i..] {
                    if !accepted(a & c) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// `Bel` of every subset, indexed by bitmask (zeta transform of the
    /// mass vector). Frames of at most [`COMMITMENT_CAP`] points.
    pub fn belief_table(&self) -> Result<Vec<f64>, BeliefError> {
        let n = self.frame.theta_size();
        if n > COMMITMENT_CAP {
            return Err(BeliefError::FrameTooLarge { size: n, cap: COMMITMENT_CAP });
        }
        let mut table = self.to_mass_vector()?;
        for bit in 0..n {
            let step = 1usize << bit;
            for mask in 0..table.len() {
                if mask & step != 0 {
                    table[mask] += table[mask ^ step];
                }
            }
        }
        Ok(table)
    }
}

/// `σ ≤ τ` in the commitment order: `Bel_σ(A) ≤ Bel_τ(A) + 1e-9` for every `A ⊆ Θ`.
pub fn leq_committed(sigma: &MassFunction, tau: &MassFunction) -> Result<bool, BeliefError> {
    if !(Arc::ptr_eq(&sigma.frame, &tau.frame) || sigma.frame == tau.frame) {
        return Err(BeliefError::FrameMismatch);
    }
    let s = sigma.belief_table()?;
    let t = tau.belief_table()?;
    Ok(s.iter().zip(&t).all(|(a, b)| *a <= *b + TOLERANCE))
}

impl fmt::Debug for MassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MassFunction({self})")
    }
}

impl fmt::Display for MassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, m)) in self.masses.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write_points(f, &self.frame, p)?;
            write!(f, " -> {m:.6}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window() -> (Arc<ProductFrame>, MassFunction) {
        let frame = ProductFrame::new([("X", vec!["T", "J", "P", "O"])]).unwrap();
        let m = MassFunction::new(
            &frame,
            [(Subset::from_points(&frame, [0, 1, 2]), 0.6), (frame.full(), 0.4)],
        )
        .unwrap();
        (frame, m)
    }

    fn abc() -> Arc<ProductFrame> {
        ProductFrame::new([("X", vec!["a", "b", "c"])]).unwrap()
    }

    #[test]
    fn validation() {
        let frame = abc();
        assert!(MassFunction::new(&frame, [(frame.empty(), 1.0)]).is_err());
        assert!(MassFunction::new(&frame, [(frame.full(), 0.5)]).is_err());
        assert!(MassFunction::new(&frame, [(frame.full(), -0.5), (frame.full(), 1.5)]).is_err());
        let other = abc();
        let foreign = Subset::full(&ProductFrame::booleans(&["Q"]).unwrap());
        assert_eq!(
            MassFunction::new(&other, [(foreign, 1.0)]).unwrap_err(),
            BeliefError::FrameMismatch
        );
        let merged = MassFunction::new(&frame, [(frame.full(), 0.5), (frame.full(), 0.5)]).unwrap();
        assert!(merged.is_vacuous());
    }

    #[test]
    fn belief_examples() {
        let hire = ProductFrame::booleans(&["HIRE"]).unwrap();
        let vac = MassFunction::vacuous(&hire);
        assert_eq!(vac.belief(&Subset::from_points(&hire, [0])).unwrap(), 0.0);
        assert_eq!(vac.belief(&hire.full()).unwrap(), 1.0);

        let (frame, m) = window();
        assert!((m.belief(&Subset::from_points(&frame, [0, 1, 2])).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(m.belief(&frame.full()).unwrap(), 1.0);
        assert_eq!(
            m.belief(&hire.full()).unwrap_err(),
            BeliefError::FrameMismatch
        );
    }

    #[test]
    fn window_conditioning() {
        let (frame, m) = window();
        // neither Tom nor Jerry: {P, O}
        let c = m.condition(&Subset::from_points(&frame, [2, 3])).unwrap();
        let p = Subset::from_points(&frame, [2]);
        assert!((c.mass(&p).unwrap() - 0.6).abs() < 1e-12);
        assert!((c.mass(&Subset::from_points(&frame, [2, 3])).unwrap() - 0.4).abs() < 1e-12);
        assert!((c.belief(&p).unwrap() - 0.6).abs() < 1e-12);

        // someone else did it: K = 0.4, everything lands on {O}
        let o = Subset::from_points(&frame, [3]);
        assert!((m.surprise(&o).unwrap() - 0.6).abs() < 1e-12);
        let c = m.condition(&o).unwrap();
        assert_eq!(c.focal_count(), 1);
        assert!((c.mass(&o).unwrap() - 1.0).abs() < 1e-12);

        let same = m.condition(&frame.full()).unwrap();
        assert_eq!(same.to_mass_vector().unwrap(), m.to_mass_vector().unwrap());
    }

    #[test]
    fn conditioning_errors() {
        let frame = abc();
        let m = MassFunction::new(&frame, [(Subset::from_points(&frame, [0]), 1.0)]).unwrap();
        assert_eq!(
            m.condition(&frame.empty()).unwrap_err(),
            BeliefError::EmptyEvidence
        );
        assert_eq!(
            m.condition(&Subset::from_points(&frame, [1, 2])).unwrap_err(),
            BeliefError::ConditioningUndefined
        );
    }

    #[test]
    fn surprise_examples() {
        // Bel(FLY | BIRD) = .4 read as surprise at ¬FLY given BIRD.
        let frame = ProductFrame::booleans(&["BIRD", "FLY"]).unwrap();
        let bird = Subset::from_points(&frame, [0, 1]);
        let fly = Subset::from_points(&frame, [0, 2]);
        let bird_implies_fly = Subset::from_points(&frame, [0, 2, 3]);
        let m = MassFunction::new(&frame, [(bird_implies_fly, 0.4), (frame.full(), 0.6)]).unwrap();
        assert!((m.conditional_belief(&fly, &bird).unwrap() - 0.4).abs() < 1e-12);
        assert!((m.conditional_surprise(&fly.complement(), &bird).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(
            m.conditional_surprise(&fly, &frame.full()).unwrap(),
            m.surprise(&fly).unwrap()
        );

        let vac = MassFunction::vacuous(&frame);
        assert_eq!(vac.surprise(&fly).unwrap(), 0.0);
        assert_eq!(vac.surprise(&frame.full()).unwrap(), 0.0);

        let (wf, wm) = window();
        assert!((wm.conditional_surprise(&Subset::from_points(&wf, [2]).complement(), &Subset::from_points(&wf, [2, 3])).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn classifiers() {
        let frame = abc();
        let s = |pts: &[usize]| Subset::from_points(&frame, pts.iter().copied());
        let chain = MassFunction::new(&frame, [(s(&[0]), 0.3), (s(&[0, 1]), 0.5), (frame.full(), 0.2)]).unwrap();
        assert!(chain.is_consonant());
        assert!(!chain.is_vacuous());
        let split = MassFunction::new(&frame, [(s(&[0]), 0.5), (s(&[1]), 0.5)]).unwrap();
        assert!(!split.is_consonant());
        let (_, w) = window();
        assert!(w.is_consonant());
        assert!(!w.is_vacuous());
        assert!(MassFunction::vacuous(&frame).is_vacuous());
        assert!(!MassFunction::new(&frame, [(s(&[2]), 1.0)]).unwrap().is_vacuous());

        assert!(MassFunction::vacuous(&frame).is_conjunctive().unwrap());
        let overlapping = MassFunction::new(&frame, [(s(&[0, 1]), 0.5), (s(&[1, 2]), 0.5)]).unwrap();
        assert!(!overlapping.is_conjunctive().unwrap());
        assert!(MassFunction::new(&frame, [(s(&[0]), 1.0)]).unwrap().is_conjunctive().unwrap());

        let big = ProductFrame::booleans(&["A", "B", "C", "D"]).unwrap();
        assert!(matches!(
            MassFunction::vacuous(&big).is_conjunctive(),
            Err(BeliefError::FrameTooLarge { size: 16, cap: 8 })
        ));
    }

    #[test]
    fn commitment_order() {
        let frame = abc();
        let vac = MassFunction::vacuous(&frame);
        let point = MassFunction::new(&frame, [(Subset::from_points(&frame, [0]), 1.0)]).unwrap();
        assert!(leq_committed(&vac, &point).unwrap());
        assert!(!leq_committed(&point, &vac).unwrap());
        let (wf, w) = window();
        assert!(!leq_committed(&w, &MassFunction::vacuous(&wf)).unwrap());
        assert!(leq_committed(&MassFunction::vacuous(&wf), &w).unwrap());
    }

    /// Random mass function with up to `max_focal` focal elements on a frame of `n` points.
    fn arb_mass(n: usize, max_focal: usize) -> impl Strategy<Value = (Arc<ProductFrame>, MassFunction)> {
        let full = (1u64 << n) - 1;
        prop::collection::vec((1..=full, 1u32..100), 1..=max_focal).prop_map(move |entries| {
            let values: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
            let frame = ProductFrame::new([("X", values)]).unwrap();
            let total: u32 = entries.iter().map(|e| e.1).sum();
            let m = MassFunction::new(
                &frame,
                entries
                    .iter()
                    .map(|&(mask, w)| (Subset::from_mask(&frame, mask), w as f64 / total as f64)),
            )
            .unwrap();
            (frame, m)
        })
    }

    proptest! {
        #[test]
        fn belief_is_monotone_and_normalized((frame, m) in arb_mass(5, 5), a in 0u64..32, b in 0u64..32) {
            let a = Subset::from_mask(&frame, a);
            let ab = a.union(&Subset::from_mask(&frame, b));
            prop_assert!(m.belief(&a).unwrap() <= m.belief(&ab).unwrap() + 1e-12);
            prop_assert_eq!(m.belief(&frame.empty()).unwrap(), 0.0);
            prop_assert!((m.belief(&frame.full()).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn two_monotone((frame, m) in arb_mass(6, 6), a in 0u64..64, b in 0u64..64) {
            let a = Subset::from_mask(&frame, a);
            let b = Subset::from_mask(&frame, b);
            let lhs = m.belief(&a.union(&b)).unwrap() + m.belief(&a.intersection(&b)).unwrap();
            let rhs = m.belief(&a).unwrap() + m.belief(&b).unwrap();
            prop_assert!(lhs >= rhs - 1e-12);
        }

        #[test]
        fn surprise_is_belief_of_complement((frame, m) in arb_mass(5, 4), e in 0u64..32) {
            let e = Subset::from_mask(&frame, e);
            prop_assert_eq!(m.surprise(&e).unwrap(), m.belief(&e.complement()).unwrap());
        }

        #[test]
        fn conditioning_concentrates_on_evidence((frame, m) in arb_mass(5, 4), b in 1u64..32, s in 0u64..32) {
            let b = Subset::from_mask(&frame, b);
            if let Ok(c) = m.condition(&b) {
                let s = Subset::from_mask(&frame, s);
                prop_assert!((c.belief(&b).unwrap() - 1.0).abs() < 1e-9);
                prop_assert!((c.belief(&s.intersection(&b)).unwrap() - c.belief(&s).unwrap()).abs() < 1e-9);
            }
        }

        #[test]
        fn consonant_belief_is_min_on_intersections(n in 2usize..6, cuts in prop::collection::vec(1u32..50, 1..5), a in 0u64..64, b in 0u64..64) {
            // nested chain p0 ⊂ p0p1 ⊂ ... with random weights
            let values: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
            let frame = ProductFrame::new([("X", values)]).unwrap();
            let total: u32 = cuts.iter().sum();
            let entries = cuts.iter().enumerate().map(|(i, &w)| {
                let len = (i % n) + 1;
                (Subset::from_points(&frame, 0..len), w as f64 / total as f64)
            });
            let m = MassFunction::new(&frame, entries).unwrap();
            prop_assert!(m.is_consonant());
            let mask = (1u64 << n) - 1;
            let a = Subset::from_mask(&frame, a & mask);
            let b = Subset::from_mask(&frame, b & mask);
            let both = m.belief(&a.intersection(&b)).unwrap();
            let min = m.belief(&a).unwrap().min(m.belief(&b).unwrap());
            prop_assert!((both - min).abs() < 1e-12);
        }
    }
}
