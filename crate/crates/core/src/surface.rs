//! The BMO Bellman surface `b_ε` on the parabolic strip `ω_ε`.
//!
//! For payoffs with monotone `f″` the strip is foliated by tangents to the
//! lower parabola and `b_ε` is linear along each of them:
//!
//! * right tangents (`f″` non-increasing): `b = f(u_R) + m_R(u_R)(x − u_R)`;
//! * left tangents (`f″` non-decreasing): `b = f(u_L) + m_L(u_L)(x − u_L)`.
//!
//! When `f″` increases and then decreases, a cup of chords sits around the
//! vertex, with left tangents to its left and right tangents to its right.
//! The indicator `χ_[0,∞)` has a four-piece closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{in_omega_eps, u_tangent, Point2, Side, State3};
use crate::payoff::{BoundaryFunction, Shape};
use crate::quadrature::integrate_with_breaks;
use crate::roots::{bisect, bisect_newton};

/// Relative target of the slope integrals.
pub const TAU_QUAD: f64 = 1e-11;
/// Residual target of the cup equation.
pub const TAU_ROOT: f64 = 1e-12;

/// Decay lengths kept by the truncated exponential-weight integrals.
const DECAY_LENGTHS: f64 = 45.0;

fn truncation(eps: f64, rate: f64) -> Result<f64> {
    let decay = 1.0 / eps - rate;
    if !(decay > 0.0) {
        return Err(Error::Divergent { rate, eps });
    }
    Ok(DECAY_LENGTHS / decay)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("strip width {eps} must be positive")))
    }
}

fn smooth_payoff(f: &BoundaryFunction) -> Result<()> {
    if f.is_indicator() {
        Err(Error::UnsupportedPayoff(f.name()))
    } else {
        Ok(())
    }
}

/// `∫_0^len e^{−s/ε} f(u + dir·s) ds` with the payoff kinks as breakpoints.
fn weighted_integral(f: &BoundaryFunction, u: f64, dir: f64, eps: f64, len: f64) -> Result<f64> {
    let breaks: Vec<f64> = f.kinks().iter().map(|k| (k - u) * dir).collect();
    let scale = f.eval(u).abs().max(1e-300) * eps;
    integrate_with_breaks(
        |s| f.eval_weighted(u + dir * s, -s / eps),
        0.0,
        len,
        &breaks,
        1e-15 * scale,
        TAU_QUAD,
    )
}

/// Slope of the right tangent at `(u, u²)`:
/// `m_R(u) = f(u)/ε − ε⁻² ∫_{−∞}^0 e^{t/ε} f(u + t) dt`.
pub fn slope_m_right(u: f64, eps: f64, f: &BoundaryFunction) -> Result<f64> {
    check_eps(eps)?;
    smooth_payoff(f)?;
    let len = truncation(eps, f.growth_rate(false))?;
    let i = weighted_integral(f, u, -1.0, eps, len)?;
    Ok(f.eval(u) / eps - i / (eps * eps))
}

/// Slope of the left tangent at `(u, u²)`:
/// `m_L(u) = −f(u)/ε + ε⁻² ∫_0^∞ e^{−t/ε} f(u + t) dt`.
///
/// Fails with [`Error::Divergent`] when `f` grows like `e^{t/ε'}`, `ε' ≤ ε`.
pub fn slope_m_left(u: f64, eps: f64, f: &BoundaryFunction) -> Result<f64> {
    check_eps(eps)?;
    smooth_payoff(f)?;
    let len = truncation(eps, f.growth_rate(true))?;
    let i = weighted_integral(f, u, 1.0, eps, len)?;
    Ok(-f.eval(u) / eps + i / (eps * eps))
}

/// Solves the cup equation `(f′(a) + f′(b))/2 = (f(b) − f(a))/(b − a)` for the
/// chord of length `l = b − a` around the vertex of a single-cup payoff.
pub fn solve_cup(l: f64, f: &BoundaryFunction) -> Result<(f64, f64)> {
    let c = match f.shape() {
        Shape::SingleCup { vertex } => vertex,
        _ => return Err(Error::UnsupportedPayoff(f.name())),
    };
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::InvalidParameter(format!("chord length {l} must be non-negative")));
    }
    if l == 0.0 {
        return Ok((c, c));
    }
    if f.is_power() {
        return Ok((c - 0.5 * l, c + 0.5 * l));
    }
    let d1 = |t: f64| f.d1(t).expect("smooth payoff");
    let phi = |a: f64| {
        let b = a + l;
        0.5 * (d1(a) + d1(b)) - (f.eval(b) - f.eval(a)) / l
    };
    let dphi = |a: f64| {
        let b = a + l;
        let d2a = f.d2(a).unwrap_or(0.0);
        let d2b = f.d2(b).unwrap_or(0.0);
        0.5 * (d2a + d2b) - (d1(b) - d1(a)) / l
    };
    let a = bisect_newton(phi, dphi, c - l, c, TAU_ROOT)?;
    Ok((a, a + l))
}

/// The chord family of a cup on `ω_ε`, with the widest chord cached.
#[derive(Clone, Debug)]
pub struct CupFoliation {
    pub eps: f64,
    pub vertex: f64,
    pub a2eps: f64,
    pub b2eps: f64,
    payoff: BoundaryFunction,
}

impl CupFoliation {
    pub fn new(payoff: BoundaryFunction, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let vertex = match payoff.shape() {
            Shape::SingleCup { vertex } => vertex,
            _ => return Err(Error::UnsupportedPayoff(payoff.name())),
        };
        let (a2eps, b2eps) = solve_cup(2.0 * eps, &payoff)?;
        Ok(Self { eps, vertex, a2eps, b2eps, payoff })
    }

    pub fn endpoints(&self, l: f64) -> Result<(f64, f64)> {
        solve_cup(l, &self.payoff)
    }

    /// Left-tangent slope for `u ≤ a(2ε)`.
    pub fn slope_left(&self, u: f64) -> Result<f64> {
        let (f, eps, a2) = (&self.payoff, self.eps, self.a2eps);
        let mid = 0.5 * (f.eval(self.b2eps) + f.eval(a2)) / eps;
        let len = (a2 - u).min(truncation(eps, f.growth_rate(true))?).max(0.0);
        let i = weighted_integral(f, u, 1.0, eps, len)?;
        Ok(mid * ((u - a2) / eps).exp() - f.eval(u) / eps + i / (eps * eps))
    }

    /// Right-tangent slope for `u ≥ b(2ε)`.
    pub fn slope_right(&self, u: f64) -> Result<f64> {
        let (f, eps, b2) = (&self.payoff, self.eps, self.b2eps);
        let mid = 0.5 * (f.eval(b2) + f.eval(self.a2eps)) / eps;
        let len = (u - b2).min(truncation(eps, f.growth_rate(false))?).max(0.0);
        let i = weighted_integral(f, u, -1.0, eps, len)?;
        Ok(-mid * ((b2 - u) / eps).exp() + f.eval(u) / eps - i / (eps * eps))
    }

    /// The chord `[a, b]` through `p`, which must lie under the widest chord.
    pub fn chord_through(&self, p: Point2) -> Result<(f64, f64)> {
        let gap = p.gap().max(0.0);
        if self.payoff.is_power() {
            let d = p.x - self.vertex;
            let half = (gap + d * d).sqrt().min(self.eps);
            return Ok((self.vertex - half, self.vertex + half));
        }
        let x = p.x;
        let two_eps = 2.0 * self.eps;
        let end = |l: f64| self.endpoints(l).expect("cup solvable inside (0, 2ε]");
        let l_min = if x >= self.vertex {
            if x >= self.b2eps {
                two_eps
            } else {
                bisect(|l| end(l).1 - x, 0.0, two_eps, 1e-15)?
            }
        } else if x <= self.a2eps {
            two_eps
        } else {
            bisect(|l| end(l).0 - x, 0.0, two_eps, 1e-15)?
        };
        let h = |l: f64| {
            let (a, b) = end(l);
            (b - x) * (x - a) - gap
        };
        if h(two_eps) <= 0.0 {
            return Ok(end(two_eps));
        }
        let l = if h(l_min) >= 0.0 {
            l_min
        } else {
            bisect(h, l_min, two_eps, 1e-15)?
        };
        Ok(end(l))
    }
}

#[derive(Clone, Debug)]
pub enum Foliation {
    RightTangents,
    LeftTangents,
    Cup(CupFoliation),
    IndicatorClosedForm,
}

/// Region of the indicator closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndicatorDomain {
    D1,
    D2,
    D3,
    D4,
}

/// Evaluator of `b_ε` for one payoff and one strip width.
#[derive(Clone, Debug)]
pub struct BellmanSurface {
    pub eps: f64,
    pub payoff: BoundaryFunction,
    pub foliation: Foliation,
}

impl BellmanSurface {
    /// Picks the foliation from the payoff shape. Tangent slopes that would
    /// diverge are rejected here rather than at evaluation.
    pub fn new(payoff: BoundaryFunction, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let foliation = match payoff.shape() {
            Shape::D2Nonincreasing => {
                truncation(eps, payoff.growth_rate(false))?;
                Foliation::RightTangents
            }
            Shape::D2Nondecreasing => {
                truncation(eps, payoff.growth_rate(true))?;
                Foliation::LeftTangents
            }
            Shape::SingleCup { .. } => {
                truncation(eps, payoff.growth_rate(false))?;
                truncation(eps, payoff.growth_rate(true))?;
                Foliation::Cup(CupFoliation::new(payoff.clone(), eps)?)
            }
            Shape::Indicator => Foliation::IndicatorClosedForm,
        };
        Ok(Self { eps, payoff, foliation })
    }

    pub fn eval(&self, p: Point2) -> Result<f64> {
        let eps = self.eps;
        if !in_omega_eps(p, eps) {
            return Err(Error::OutsideStrip { x: p.x, y: p.y, eps });
        }
        if p.gap() <= 0.0 {
            return Ok(self.payoff.eval(p.x));
        }
        let f = &self.payoff;
        match &self.foliation {
            Foliation::RightTangents => {
                let u = u_tangent(p, eps, Side::Right)?;
                Ok(f.eval(u) + slope_m_right(u, eps, f)? * (p.x - u))
            }
            Foliation::LeftTangents => {
                let u = u_tangent(p, eps, Side::Left)?;
                Ok(f.eval(u) + slope_m_left(u, eps, f)? * (p.x - u))
            }
            Foliation::Cup(cup) => {
                let ul = u_tangent(p, eps, Side::Left)?;
                if ul <= cup.a2eps {
                    return Ok(f.eval(ul) + cup.slope_left(ul)? * (p.x - ul));
                }
                let ur = u_tangent(p, eps, Side::Right)?;
                if ur >= cup.b2eps {
                    return Ok(f.eval(ur) + cup.slope_right(ur)? * (p.x - ur));
                }
                let (a, b) = cup.chord_through(p)?;
                let beta = ((p.x - a) / (b - a)).clamp(0.0, 1.0);
                Ok((1.0 - beta) * f.eval(a) + beta * f.eval(b))
            }
            Foliation::IndicatorClosedForm => indicator_b(p, eps),
        }
    }
}

/// Region label for the indicator closed form; ties go to the lower index.
pub fn classify_indicator_domain(p: Point2, eps: f64) -> Result<IndicatorDomain> {
    if !in_omega_eps(p, eps) {
        return Err(Error::OutsideStrip { x: p.x, y: p.y, eps });
    }
    let tie = 1e-13 * (1.0 + p.y.abs());
    let (x, y) = (p.x, p.y);
    Ok(if y <= 2.0 * eps * x + tie || x >= eps - tie {
        IndicatorDomain::D1
    } else if x.abs() <= eps + tie && y >= 2.0 * eps * x.abs() - tie {
        IndicatorDomain::D2
    } else if y <= -2.0 * eps * x + tie {
        IndicatorDomain::D3
    } else {
        IndicatorDomain::D4
    })
}

/// `b_ε` for `f = χ_[0,∞)`.
pub fn indicator_b(p: Point2, eps: f64) -> Result<f64> {
    let dom = classify_indicator_domain(p, eps)?;
    let (x, y) = (p.x, p.y);
    if p.gap() <= 0.0 {
        return Ok(if x >= 0.0 { 1.0 } else { 0.0 });
    }
    Ok(match dom {
        IndicatorDomain::D1 => 1.0,
        IndicatorDomain::D2 => 1.0 - (y - 2.0 * eps * x) / (8.0 * eps * eps),
        IndicatorDomain::D3 => 1.0 - x * x / y,
        IndicatorDomain::D4 => {
            let t = (1.0 - p.gap() / (eps * eps)).max(0.0).sqrt();
            0.5 * std::f64::consts::E * (1.0 - t) * (x / eps + t).exp()
        }
    })
}

/// The majorant `(x, y, z) ↦ b_{√(1−z²)}(x, y)` of the three-dimensional
/// Bellman function.
pub fn composite_b(payoff: &BoundaryFunction, s: State3) -> Result<f64> {
    if !crate::geometry::in_omega(s) {
        return Err(Error::OutsideDomain { x: s.x, y: s.y, z: s.z });
    }
    let eps = s.strip_width();
    if s.gap() <= 0.0 || eps <= 0.0 {
        return Ok(payoff.eval(s.x));
    }
    // Clamp round-off above the strip top.
    let p = Point2::new(s.x, s.y.min(s.x * s.x + eps * eps));
    BellmanSurface::new(payoff.clone(), eps)?.eval(p)
}
