//! Disc and workspace predicates.
//!
//! Objects are closed discs of a shared radius `r`. Two discs collide when
//! their interiors overlap, i.e. when their centers are strictly closer than
//! `2r`; touching discs are allowed. The set of centers that collide with a
//! disc at `p` is the open disc of radius `2r` around `p` (the conflict disc).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("position ({x}, {y}) lies outside the configuration rectangle")]
    PositionOutOfBounds { x: f64, y: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(&self, other: &Position) -> f64 {
        self.distance_sq(other).sqrt()
    }

    /// Point at parameter `t` on the segment from `self` to `other`.
    #[inline]
    pub fn lerp(&self, other: &Position, t: f64) -> Position {
        Position::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl From<[f64; 2]> for Position {
    fn from(v: [f64; 2]) -> Self {
        Position::new(v[0], v[1])
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle `[0, width] x [0, height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
}

/// Closed rectangle of admissible disc centers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfigRect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl ConfigRect {
    #[inline]
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    #[inline]
    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn check(&self, p: &Position) -> Result<(), GeometryError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GeometryError::PositionOutOfBounds { x: p.x, y: p.y })
        }
    }
}

impl Workspace {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// The workspace inset by `r` on every side. `None` when empty.
    pub fn config_rect(&self, r: f64) -> Option<ConfigRect> {
        if !(self.width > 2.0 * r && self.height > 2.0 * r && r > 0.0) {
            return None;
        }
        Some(ConfigRect {
            min_x: r,
            min_y: r,
            max_x: self.width - r,
            max_y: self.height - r,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscSpec {
    pub radius: f64,
}

#[inline]
pub fn discs_collide(p: &Position, q: &Position, r: f64) -> bool {
    let reach = 2.0 * r;
    p.distance_sq(q) < reach * reach
}

/// Membership in the conflict disc of `center`.
#[inline]
pub fn conflict_disc_contains(center: &Position, query: &Position, r: f64) -> bool {
    discs_collide(center, query, r)
}

/// Checks pairwise collision-freeness of an arrangement of centers.
pub fn arrangement_feasible(
    positions: &[Position],
    r: f64,
    bounds: &ConfigRect,
) -> Result<bool, GeometryError> {
    for p in positions {
        bounds.check(p)?;
    }
    for (i, p) in positions.iter().enumerate() {
        if positions[i + 1..].iter().any(|q| discs_collide(p, q, r)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Labels whose pose collides with a disc placed at `query`.
pub fn interference_set<L: Copy>(query: &Position, poses: &[(L, Position)], r: f64) -> Vec<L> {
    poses
        .iter()
        .filter(|(_, p)| discs_collide(query, p, r))
        .map(|(l, _)| *l)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Position {
        Position::new(x, y)
    }

    #[test]
    fn collision_examples() {
        assert!(discs_collide(&p(0.0, 0.0), &p(0.0, 0.0), 1.0));
        assert!(!discs_collide(&p(0.0, 0.0), &p(2.0, 0.0), 1.0));
        assert!(discs_collide(&p(0.0, 0.0), &p(1.5, 0.0), 1.0));
    }

    #[test]
    fn conflict_disc_examples() {
        assert!(conflict_disc_contains(&p(0.0, 0.0), &p(1.9, 0.0), 1.0));
        assert!(!conflict_disc_contains(&p(0.0, 0.0), &p(2.0, 0.0), 1.0));
        assert!(conflict_disc_contains(&p(5.0, 5.0), &p(5.0, 6.0), 1.0));
    }

    #[test]
    fn feasibility_examples() {
        let ws = Workspace::new(10.0, 10.0);
        let b = ws.config_rect(0.5).unwrap();
        assert!(arrangement_feasible(&[p(1.0, 1.0)], 0.5, &b).unwrap());
        assert!(!arrangement_feasible(&[p(1.0, 1.0), p(1.0, 1.0)], 0.5, &b).unwrap());
        let b1 = ws.config_rect(1.0).unwrap();
        assert!(
            arrangement_feasible(&[p(1.0, 1.0), p(3.0, 1.0), p(5.0, 1.0)], 1.0, &b1).unwrap()
        );
        assert_eq!(
            arrangement_feasible(&[p(0.5, 5.0)], 1.0, &b1),
            Err(GeometryError::PositionOutOfBounds { x: 0.5, y: 5.0 })
        );
    }

    #[test]
    fn interference_examples() {
        let poses = [('a', p(0.5, 0.0)), ('b', p(10.0, 10.0))];
        assert_eq!(interference_set(&p(0.0, 0.0), &poses, 1.0), vec!['a']);
        assert!(interference_set(&p(-30.0, 40.0), &poses, 1.0).is_empty());
        let overlapping = [('a', p(0.2, 0.0)), ('b', p(-0.2, 0.0))];
        assert_eq!(interference_set(&p(0.0, 0.0), &overlapping, 1.0), vec!['a', 'b']);
    }

    #[test]
    fn empty_config_rect() {
        assert!(Workspace::new(2.0, 10.0).config_rect(1.0).is_none());
        assert!(Workspace::new(2.1, 10.0).config_rect(1.0).is_some());
    }

    proptest! {
        #[test]
        fn collision_is_symmetric(ax in -5.0..5.0f64, ay in -5.0..5.0f64,
                                  bx in -5.0..5.0f64, by in -5.0..5.0f64, r in 0.01..3.0f64) {
            let (a, b) = (p(ax, ay), p(bx, by));
            prop_assert_eq!(discs_collide(&a, &b, r), discs_collide(&b, &a, r));
            prop_assert_eq!(conflict_disc_contains(&a, &b, r), discs_collide(&a, &b, r));
        }

        #[test]
        fn interference_monotone_in_poses(
            pts in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 0..8),
            extra in (-5.0..5.0f64, -5.0..5.0f64),
            q in (-5.0..5.0f64, -5.0..5.0f64),
        ) {
            let mut poses: Vec<(usize, Position)> =
                pts.iter().enumerate().map(|(i, &(x, y))| (i, p(x, y))).collect();
            let before = interference_set(&p(q.0, q.1), &poses, 1.0);
            poses.push((poses.len(), p(extra.0, extra.1)));
            let after = interference_set(&p(q.0, q.1), &poses, 1.0);
            for l in before {
                prop_assert!(after.contains(&l));
            }
        }
    }
}
