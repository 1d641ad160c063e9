use std::fmt;
use std::sync::Arc;

use super::ProductFrame;

/// Dense bit-indexed set of points over a universe of fixed size.
///
/// Frame-less on purpose: used as a map key inside mass functions, where
/// every key shares the owning frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    universe: usize,
    words: Vec<u64>,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        PointSet {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self::empty(universe);
        for i in 0..set.words.len() {
            set.words[i] = u64::MAX;
        }
        set.trim();
        set
    }

    /// Set whose members are the set bits of `mask`; requires `universe <= 64`.
    pub fn from_mask(universe: usize, mask: u64) -> Self {
        assert!(universe <= 64, "mask encoding needs a universe of at most 64 points");
        let mut set = Self::empty(universe);
        if universe > 0 {
            set.words[0] = mask;
            set.trim();
        }
        set
    }

    /// Bitmask encoding, available for universes of at most 64 points.
    pub fn mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    fn trim(&mut self) {
        let rem = self.universe % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, point: usize) {
        assert!(point < self.universe);
        self.words[point / 64] |= 1 << (point % 64);
    }

    pub fn contains(&self, point: usize) -> bool {
        point < self.universe && self.words[point / 64] & (1 << (point % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.universe
    }

    pub fn complement(&self) -> Self {
        let mut out = PointSet {
            universe: self.universe,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.universe, other.universe);
        PointSet {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(&a, &b)| a & b != 0)
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }
}

/// A subset of the product space `Θ` of a particular frame.
#[derive(Clone)]
pub struct Subset {
    frame: Arc<ProductFrame>,
    points: PointSet,
}

impl Subset {
    pub fn new(frame: &Arc<ProductFrame>, points: PointSet) -> Self {
        assert_eq!(points.universe(), frame.theta_size(), "point set sized for another frame");
        Subset {
            frame: Arc::clone(frame),
            points,
        }
    }

    pub fn empty(frame: &Arc<ProductFrame>) -> Self {
        Self::new(frame, PointSet::empty(frame.theta_size()))
    }

    pub fn full(frame: &Arc<ProductFrame>) -> Self {
        Self::new(frame, PointSet::full(frame.theta_size()))
    }

    pub fn from_points(frame: &Arc<ProductFrame>, points: impl IntoIterator<Item = usize>) -> Self {
        let mut set = PointSet::empty(frame.theta_size());
        for p in points {
            set.insert(p);
        }
        Self::new(frame, set)
    }

    pub fn from_mask(frame: &Arc<ProductFrame>, mask: u64) -> Self {
        Self::new(frame, PointSet::from_mask(frame.theta_size(), mask))
    }

    pub fn frame(&self) -> &Arc<ProductFrame> {
        &self.frame
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn into_points(self) -> PointSet {
        self.points
    }

    pub fn mask(&self) -> Option<u64> {
        self.points.mask()
    }

    pub fn same_frame(&self, other: &Arc<ProductFrame>) -> bool {
        Arc::ptr_eq(&self.frame, other) || *self.frame == **other
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.points.is_full()
    }

    pub fn contains(&self, point: usize) -> bool {
        self.points.contains(point)
    }

    pub fn complement(&self) -> Self {
        self.with_points(self.points.complement())
    }

    pub fn union(&self, other: &Self) -> Self {
        self.with_points(self.points.union(&other.points))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.with_points(self.points.intersection(&other.points))
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.with_points(self.points.difference(&other.points))
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.points.is_subset_of(&other.points)
    }

    fn with_points(&self, points: PointSet) -> Self {
        Subset {
            frame: Arc::clone(&self.frame),
            points,
        }
    }
}

impl PartialEq for Subset {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.same_frame(&other.frame)
    }
}

impl Eq for Subset {}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subset({self})")
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_points(f, &self.frame, &self.points)
    }
}

/// `Θ`, `∅`, or `{a, b, ...}` using the frame's point labels.
pub(crate) fn write_points(f: &mut impl fmt::Write, frame: &ProductFrame, points: &PointSet) -> fmt::Result {
    if points.is_full() && frame.theta_size() > 1 {
        return f.write_str("Θ");
    }
    if points.is_empty() {
        return f.write_str("∅");
    }
    f.write_char('{')?;
    for (i, p) in points.points().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(&frame.point_label(p))?;
    }
    f.write_char('}')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra_on_wide_universe() {
        let a = {
            let mut s = PointSet::empty(130);
            for p in [0, 63, 64, 129] {
                s.insert(p);
            }
            s
        };
        let c = a.complement();
        assert_eq!(c.len(), 126);
        assert_eq!(c.complement(), a);
        assert!(a.intersection(&c).is_empty());
        assert!(a.union(&c).is_full());
        assert_eq!(a.points().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(a.mask(), None);
    }

    #[test]
    fn mask_roundtrip() {
        let s = PointSet::from_mask(5, 0b10110);
        assert_eq!(s.mask(), Some(0b10110));
        assert_eq!(s.complement().mask(), Some(0b01001));
        assert!(PointSet::from_mask(5, 0b00110).is_subset_of(&s));
    }

    #[test]
    fn display_uses_labels() {
        let frame = ProductFrame::new([("X", vec!["T", "J", "P", "O"])]).unwrap();
        assert_eq!(Subset::from_points(&frame, [0, 2]).to_string(), "{T, P}");
        assert_eq!(frame.full().to_string(), "Θ");
        assert_eq!(frame.empty().to_string(), "∅");
    }
}
