//! Random frames, subsets and mass functions shared by the test targets.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use surprise_core::{Formula, MassFunction, ProductFrame, Subset};

/// Formula whose extension is exactly `set`.
pub fn formula_of(frame: &ProductFrame, set: &Subset) -> Formula {
    let atom = |var, value| Formula::Atom { var, value };
    let contradiction = Formula::and(atom(0, 0), Formula::not(atom(0, 0)));
    set.points().points().fold(contradiction, |acc, p| {
        let point = (1..frame.variables().len())
            .fold(atom(0, frame.coordinate(p, 0)), |f, v| Formula::and(f, atom(v, frame.coordinate(p, v))));
        Formula::or(acc, point)
    })
}

pub fn random_frame(rng: &mut impl Rng, max_points: usize) -> Arc<ProductFrame> {
    if max_points >= 4 && rng.random_bool(0.3) {
        if max_points >= 8 && rng.random_bool(0.5) {
            return ProductFrame::booleans(&["A", "B", "C"]).unwrap();
        }
        return ProductFrame::booleans(&["A", "B"]).unwrap();
    }
    let k = rng.random_range(2..=max_points);
    let values: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
    ProductFrame::new([("X", values)]).unwrap()
}

pub fn random_subset(rng: &mut impl Rng, frame: &Arc<ProductFrame>, nonempty: bool) -> Subset {
    let n = frame.theta_size();
    loop {
        let mask = rng.random_range(0..(1u64 << n));
        if !nonempty || mask != 0 {
            return Subset::from_mask(frame, mask);
        }
    }
}

pub fn random_mass(rng: &mut impl Rng, frame: &Arc<ProductFrame>, max_focals: usize) -> MassFunction {
    let k = rng.random_range(1..=max_focals);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let entries = weights.iter().map(|w| (random_subset(rng, frame, true), w / total));
    MassFunction::new(frame, entries).unwrap()
}

