//! Planar body-surface grid. Coordinates are 1-based integers in centimetres.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extent of the rectangular body-surface patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub length_cm: u32,
    pub width_cm: u32,
    pub cell_size_cm: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            length_cm: 16,
            width_cm: 15,
            cell_size_cm: 1,
        }
    }
}

impl GridSpec {
    pub fn new(length_cm: u32, width_cm: u32) -> Self {
        Self {
            length_cm,
            width_cm,
            cell_size_cm: 1,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.length_cm < 2 {
            return Err(format!("length_cm must be >= 2, got {}", self.length_cm));
        }
        if self.width_cm < 2 {
            return Err(format!("width_cm must be >= 2, got {}", self.width_cm));
        }
        if self.cell_size_cm < 1 {
            return Err("cell_size_cm must be >= 1".to_string());
        }
        Ok(())
    }

    pub fn contains(&self, p: NodePosition) -> bool {
        (1..=self.length_cm).contains(&p.x) && (1..=self.width_cm).contains(&p.y)
    }

    pub fn check(&self, p: NodePosition) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OffGrid(p, self.length_cm, self.width_cm))
        }
    }

    /// Cell coordinates along x (length).
    pub fn xs(&self) -> impl Iterator<Item = u32> + Clone {
        (1..=self.length_cm).step_by(self.cell_size_cm.max(1) as usize)
    }

    /// Cell coordinates along y (width).
    pub fn ys(&self) -> impl Iterator<Item = u32> + Clone {
        (1..=self.width_cm).step_by(self.cell_size_cm.max(1) as usize)
    }
}

/// A node location on the grid, in centimetres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct NodePosition {
    pub x: u32,
    pub y: u32,
}

impl NodePosition {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Chebyshev (king-move) distance in cells.
    pub fn chebyshev(&self, other: NodePosition) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    fn offset_cm(&self, to: NodePosition) -> (f64, f64) {
        (
            f64::from(to.x) - f64::from(self.x),
            f64::from(to.y) - f64::from(self.y),
        )
    }
}

impl From<[u32; 2]> for NodePosition {
    fn from([x, y]: [u32; 2]) -> Self {
        Self { x, y }
    }
}

impl From<NodePosition> for [u32; 2] {
    fn from(p: NodePosition) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for NodePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Euclidean distance between two grid points, in metres.
pub fn distance(a: NodePosition, b: NodePosition) -> f64 {
    let (dx, dy) = a.offset_cm(b);
    dx.hypot(dy) / 100.0
}

/// Unsigned angle in degrees, within `[0, 180]`, between the directions
/// `origin -> a` and `origin -> b`.
pub fn angle_between(origin: NodePosition, a: NodePosition, b: NodePosition) -> Result<f64> {
    if a == origin {
        return Err(Error::DegenerateDirection(a));
    }
    if b == origin {
        return Err(Error::DegenerateDirection(b));
    }
    let (ax, ay) = origin.offset_cm(a);
    let (bx, by) = origin.offset_cm(b);
    // atan2 of cross and dot is well conditioned near 0 and 180.
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    Ok(cross.abs().atan2(dot).to_degrees())
}

/// Row-major (x fastest) enumeration of the grid, skipping `excluded`.
pub fn grid_cells(spec: &GridSpec, excluded: &BTreeSet<NodePosition>) -> Vec<NodePosition> {
    let xs = spec.xs();
    spec.ys()
        .flat_map(|y| xs.clone().map(move |x| NodePosition::new(x, y)))
        .filter(|p| !excluded.contains(p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(x: u32, y: u32) -> NodePosition {
        NodePosition::new(x, y)
    }

    #[test]
    fn distances() {
        assert_eq!(distance(p(1, 1), p(1, 1)), 0.0);
        assert_abs_diff_eq!(distance(p(1, 1), p(15, 15)), 0.19799, epsilon = 1e-5);
        assert_abs_diff_eq!(distance(p(1, 1), p(5, 6)), 0.06403, epsilon = 1e-5);
    }

    #[test]
    fn angles() {
        assert_abs_diff_eq!(angle_between(p(1, 1), p(5, 1), p(5, 1)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            angle_between(p(1, 1), p(5, 1), p(1, 5)).unwrap(),
            90.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            angle_between(p(1, 1), p(15, 15), p(5, 6)).unwrap(),
            6.34,
            epsilon = 5e-3
        );
        assert_abs_diff_eq!(
            angle_between(p(5, 5), p(6, 5), p(4, 5)).unwrap(),
            180.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn degenerate_angle() {
        assert_eq!(
            angle_between(p(1, 1), p(1, 1), p(2, 2)),
            Err(Error::DegenerateDirection(p(1, 1)))
        );
        assert!(angle_between(p(1, 1), p(2, 2), p(1, 1)).is_err());
    }

    #[test]
    fn cell_enumeration() {
        let g = GridSpec::default();
        assert_eq!(grid_cells(&g, &BTreeSet::new()).len(), 240);
        let ex: BTreeSet<_> = [p(1, 1), p(15, 15)].into();
        assert_eq!(grid_cells(&g, &ex).len(), 238);
        let small = GridSpec::new(2, 2);
        assert_eq!(
            grid_cells(&small, &BTreeSet::new()),
            vec![p(1, 1), p(2, 1), p(1, 2), p(2, 2)]
        );
    }

    #[test]
    fn off_grid_exclusions_do_not_count() {
        let ex: BTreeSet<_> = [p(1, 1), p(40, 40)].into();
        assert_eq!(grid_cells(&GridSpec::default(), &ex).len(), 239);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 5).validate().is_err());
        assert!(GridSpec::new(5, 1).validate().is_err());
        assert!(GridSpec::default().validate().is_ok());
        assert!(!GridSpec::default().contains(p(0, 3)));
        assert!(!GridSpec::default().contains(p(16, 16)));
    }

    fn pos() -> impl Strategy<Value = NodePosition> {
        (1u32..=16, 1u32..=15).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in pos(), b in pos(), c in pos()) {
            prop_assert!(distance(a, b) >= 0.0);
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-15);
        }

        #[test]
        fn angle_symmetric_and_bounded(o in pos(), a in pos(), b in pos()) {
            prop_assume!(a != o && b != o);
            let ab = angle_between(o, a, b).unwrap();
            prop_assert_eq!(ab, angle_between(o, b, a).unwrap());
            prop_assert!((0.0..=180.0).contains(&ab));
        }

        #[test]
        fn cell_count(ex in proptest::collection::btree_set(
            (1u32..=20, 1u32..=20).prop_map(|(x, y)| p(x, y)), 0..30)) {
            let g = GridSpec::default();
            let inside = ex.iter().filter(|q| g.contains(**q)).count();
            prop_assert_eq!(grid_cells(&g, &ex).len(), 240 - inside);
        }
    }
}
