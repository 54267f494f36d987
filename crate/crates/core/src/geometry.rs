//! Domains and splitting geometry.
//!
//! Three domains appear throughout:
//!
//! * the parabolic strip `ω_ε = {(x, y) : x² ≤ y ≤ x² + ε²}`;
//! * the domain of the three-dimensional Bellman function
//!   `Ω = {(x, y, z) : x² ≤ y ≤ 1 − z² + x², 0 ≤ z ≤ 1}`;
//! * its roof `Ω_R = {y − x² = 1 − z²}`.
//!
//! Membership tests use the absolute tolerance [`DOMAIN_TOL`]; boundary points
//! count as inside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the defining inequalities of every domain.
pub const DOMAIN_TOL: f64 = 1e-9;

/// A point `(x, y)` of the plane: mean and second moment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// `y − x²`, the squared distance-to-vertex of the parabola through the point.
    pub fn gap(&self) -> f64 {
        self.y - self.x * self.x
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A state `(x, y, z)`: mean, second moment, and the part of the
/// square-function budget already used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// The state on the lower boundary `y = x²` at budget `z`.
    pub fn on_lower_boundary(x: f64, z: f64) -> Self {
        Self { x, y: x * x, z }
    }

    /// The roof state above `(x, y)`: `z = √(1 − y + x²)`.
    pub fn on_roof(x: f64, y: f64) -> Self {
        let z = (1.0 - (y - x * x)).max(0.0).sqrt();
        Self { x, y, z }
    }

    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn gap(&self) -> f64 {
        self.y - self.x * self.x
    }

    /// Remaining strip width `√(1 − z²)`.
    pub fn strip_width(&self) -> f64 {
        (1.0 - self.z * self.z).max(0.0).sqrt()
    }

    /// `y − x² − (1 − z²)`: zero on the roof, negative below it.
    pub fn roof_residual(&self) -> f64 {
        self.gap() - (1.0 - self.z * self.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

pub fn in_omega_eps(p: Point2, eps: f64) -> bool {
    if !p.is_finite() || !(eps > 0.0) {
        return false;
    }
    let gap = p.gap();
    gap >= -DOMAIN_TOL && gap <= eps * eps + DOMAIN_TOL
}

pub fn in_omega(s: State3) -> bool {
    if !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()) {
        return false;
    }
    let gap = s.gap();
    s.z >= -DOMAIN_TOL
        && s.z <= 1.0 + DOMAIN_TOL
        && gap >= -DOMAIN_TOL
        && gap <= 1.0 - s.z * s.z + DOMAIN_TOL
}

pub fn on_roof(s: State3) -> bool {
    in_omega(s) && s.roof_residual().abs() <= DOMAIN_TOL
}

/// `ω_smile = {2x² ≤ y ≤ x² + 1, |x| ≤ 1}`.
pub fn in_omega_smile(p: Point2) -> bool {
    p.is_finite()
        && p.x.abs() <= 1.0 + DOMAIN_TOL
        && p.y >= 2.0 * p.x * p.x - DOMAIN_TOL
        && p.gap() <= 1.0 + DOMAIN_TOL
}

/// The parabolic shift `(x, y) ↦ (x − τ, y + τ² − 2τx)`; it preserves `y − x²`.
pub fn parabolic_shift(p: Point2, tau: f64) -> Point2 {
    Point2::new(p.x - tau, p.y + tau * tau - 2.0 * tau * p.x)
}

pub fn shift_state(s: State3, tau: f64) -> State3 {
    let p = parabolic_shift(s.point(), tau);
    State3::new(p.x, p.y, s.z)
}

/// Tangency abscissa of the left (`u_L`) or right (`u_R`) tangent through `p`.
///
/// Left tangents run from `(u, u²)` to the strip top at `u + ε`; right
/// tangents run from `(u, u²)` to the strip top at `u − ε`. The radicand
/// `ε² + x² − y` is clamped to zero within [`DOMAIN_TOL`].
pub fn u_tangent(p: Point2, eps: f64, side: Side) -> Result<f64> {
    if !in_omega_eps(p, eps) {
        return Err(Error::OutsideStrip { x: p.x, y: p.y, eps });
    }
    if p.gap() <= 0.0 {
        return Ok(p.x);
    }
    let root = (eps * eps - p.gap()).max(0.0).sqrt();
    Ok(match side {
        Side::Left => p.x - eps + root,
        Side::Right => p.x + eps - root,
    })
}

/// One step of a martingale: a parent state and weighted children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub parent: State3,
    pub children: Vec<(f64, State3)>,
}

impl SplitEvent {
    pub fn new(parent: State3, children: Vec<(f64, State3)>) -> Self {
        Self { parent, children }
    }

    /// Largest violation among the splitting rules: weight normalization,
    /// conservation of `x` and `y`, the budget update
    /// `z_j² = z² + (x_j − x)²`, domain membership of every state, and the
    /// children lying under the tangent to the strip top of width `√(1 − z²)`
    /// at the parent.
    pub fn residual(&self) -> f64 {
        let p = self.parent;
        let mut worst = domain_violation(p);
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for &(w, c) in &self.children {
            sw += w;
            sx += w * c.x;
            sy += w * c.y;
            let dx = c.x - p.x;
            worst = worst.max((c.z * c.z - p.z * p.z - dx * dx).abs());
            worst = worst.max(domain_violation(c));
            let tangent = p.x * p.x + (1.0 - p.z * p.z) + 2.0 * p.x * dx;
            worst = worst.max(c.y - tangent);
            if w < 0.0 {
                worst = worst.max(-w);
            }
        }
        worst
            .max((sw - 1.0).abs())
            .max((sx - p.x).abs())
            .max((sy - p.y).abs())
    }

    pub fn shifted(&self, tau: f64) -> Self {
        Self {
            parent: shift_state(self.parent, tau),
            children: self
                .children
                .iter()
                .map(|&(w, c)| (w, shift_state(c, tau)))
                .collect(),
        }
    }
}

fn domain_violation(s: State3) -> f64 {
    if !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()) {
        return f64::INFINITY;
    }
    let gap = s.gap();
    (-s.z)
        .max(s.z - 1.0)
        .max(-gap)
        .max(gap - (1.0 - s.z * s.z))
        .max(0.0)
}

/// True when every weight lies in `(0, 1]` and [`SplitEvent::residual`] is
/// within [`DOMAIN_TOL`].
pub fn admissible_split(e: &SplitEvent) -> bool {
    !e.children.is_empty()
        && e.children.iter().all(|&(w, _)| w > 0.0 && w <= 1.0)
        && e.residual() <= DOMAIN_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_membership() {
        assert!(in_omega_eps(Point2::new(0.0, 1.0), 1.0));
        assert!(!in_omega_eps(Point2::new(0.0, 1.0001), 1.0));
        assert!(in_omega_eps(Point2::new(2.0, 4.0), 0.5));
        assert!(!in_omega_eps(Point2::new(0.0, 0.1), 0.0));
    }

    #[test]
    fn omega_membership() {
        assert!(in_omega(State3::new(0.0, 1.0, 0.0)));
        assert!(!in_omega(State3::new(0.0, 0.5, 0.8)));
        assert!(in_omega(State3::new(-1.0, 2.0, 0.0)));
        assert!(!in_omega(State3::new(0.0, 0.0, 1.5)));
        assert!(on_roof(State3::on_roof(0.3, 0.5)));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(parabolic_shift(Point2::new(0.0, 1.0), 0.0), Point2::new(0.0, 1.0));
        assert_eq!(parabolic_shift(Point2::new(1.0, 1.0), 1.0), Point2::new(0.0, 0.0));
        let q = parabolic_shift(Point2::new(0.0, 1.0), -2.0);
        assert_eq!(q, Point2::new(2.0, 5.0));
        assert_eq!(q.gap(), 1.0);
    }

    #[test]
    fn tangent_examples() {
        let eps = 0.7;
        let top = Point2::new(0.0, eps * eps);
        assert!((u_tangent(top, eps, Side::Left).unwrap() + eps).abs() < 1e-15);
        assert!((u_tangent(top, eps, Side::Right).unwrap() - eps).abs() < 1e-15);
        let u = -0.3;
        assert_eq!(u_tangent(Point2::new(u, u * u), eps, Side::Left).unwrap(), u);
        assert!(matches!(
            u_tangent(Point2::new(0.0, 1.0), eps, Side::Left),
            Err(Error::OutsideStrip { .. })
        ));
    }

    #[test]
    fn radicand_clamped_just_above_top() {
        let eps = 1.0;
        let p = Point2::new(0.2, 0.04 + 1.0 + 1e-12);
        assert_eq!(u_tangent(p, eps, Side::Left).unwrap(), 0.2 - 1.0);
    }

    fn symmetric(y: f64) -> SplitEvent {
        let r = y.sqrt();
        SplitEvent::new(
            State3::new(0.0, y, 0.0),
            vec![(0.5, State3::new(-r, y, r)), (0.5, State3::new(r, y, r))],
        )
    }

    #[test]
    fn split_examples() {
        for y in [0.0, 0.25, 0.9, 1.0] {
            assert!(admissible_split(&symmetric(y)), "y = {y}");
        }
        let mut heavy = symmetric(0.5);
        heavy.children[0].0 = 0.6;
        assert!(!admissible_split(&heavy));

        let mut bad_z = symmetric(0.5);
        bad_z.children[1].1.z = 0.1;
        assert!(!admissible_split(&bad_z));

        assert!(!admissible_split(&symmetric(1.2)));
    }

    #[test]
    fn roof_children_stay_on_roof() {
        let parent = State3::on_roof(0.2, 0.2 * 0.2 + 0.64);
        let c = 0.8;
        let (d1, d2) = (-0.5 * c, 0.9 * c);
        let w1 = d2 / (d2 - d1);
        let child = |d: f64| {
            State3::new(parent.x + d, parent.y + 2.0 * parent.x * d, (parent.z * parent.z + d * d).sqrt())
        };
        let e = SplitEvent::new(parent, vec![(w1, child(d1)), (1.0 - w1, child(d2))]);
        assert!(admissible_split(&e));
        for (_, s) in &e.children {
            assert!(s.roof_residual().abs() < 1e-14);
        }
    }
}
