//! The indicator model problem and the roof trace of `B`.
//!
//! On the roof `y − x² = 1 − z²` the splitting dynamics are self-contained,
//! so `B(x, y, √(1 − y + x²))` is a function of `(x, y) ∈ ω_1` alone. Outside
//! `ω_smile = {2x² ≤ y}` it equals `b_ε(x, y)` with `ε = √(y − x²)`; inside it
//! is the model solution
//!
//! `M(x, y) = 1 − ((√(1 − ρ²) − ρ)/(2√2))·e^{−arcsin ρ − π/4}`,
//! `ρ = x/√(2(y − x²))`.
//!
//! `M` is constant along the rays `λ ↦ (λx, λ²y)`, so `M(x, y) = Ψ(x/√(y − x²))`.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{in_omega_eps, in_omega_smile, Point2, Side};
use crate::roots::bisect;
use crate::surface::{classify_indicator_domain, indicator_b, IndicatorDomain};

fn asin_clamped(s: f64) -> f64 {
    s.clamp(-1.0, 1.0).asin()
}

/// `Ψ(v) = 1 − ((√(2 − v²) − v)/4)·e^{−arcsin(v/√2) − π/4}`.
pub fn psi(v: f64) -> f64 {
    let root = (2.0 - v * v).max(0.0).sqrt();
    1.0 - 0.25 * (root - v) * (-asin_clamped(v / SQRT_2) - FRAC_PI_4).exp()
}

/// `Ψ′(v) = ½·e^{−π/4 − arcsin(v/√2)}`.
pub fn psi_prime(v: f64) -> f64 {
    0.5 * (-FRAC_PI_4 - asin_clamped(v / SQRT_2)).exp()
}

/// `t(v) = 2/(√(2 − v²) − v)·e^{arcsin(v/√2) + π/4}`, the time at which the
/// model trajectory reaches `v`. Runs from `t(−1) = 1` to `t(1) = ∞`.
pub fn t_of_v(v: f64) -> Result<f64> {
    if !(-1.0..1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("t(v) needs v in [-1, 1), got {v}")));
    }
    let root = (2.0 - v * v).sqrt();
    Ok(2.0 / (root - v) * (asin_clamped(v / SQRT_2) + FRAC_PI_4).exp())
}

/// Inverse of [`t_of_v`] for `t ≥ 1`.
pub fn v_of_t(t: f64) -> Result<f64> {
    if !(t >= 1.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("v(t) needs finite t >= 1, got {t}")));
    }
    if t == 1.0 {
        return Ok(-1.0);
    }
    let mut hi = 0.0;
    while t_of_v(hi)? < t {
        hi = 0.5 * (hi + 1.0);
    }
    bisect(|v| t_of_v(v).unwrap_or(f64::INFINITY) - t, -1.0, hi, 1e-16)
}

/// Residual of the Cauchy problem `2t·v′ = −v + √(2 − v²)` at `v`, with `v′`
/// taken by central differences of the inverse `v(t)`.
pub fn ode_residual(v: f64) -> Result<f64> {
    let t = t_of_v(v)?;
    let h = 1e-5 * t;
    let lo = (t - h).max(1.0);
    let dv = (v_of_t(t + h)? - v_of_t(lo)?) / (t + h - lo);
    Ok(2.0 * t * dv + v - (2.0 - v * v).sqrt())
}

/// A point of `ω_smile` with its `ρ` cached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub x: f64,
    pub y: f64,
    pub rho: f64,
}

impl ModelPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let p = Point2::new(x, y);
        if !in_omega_smile(p) {
            return Err(Error::InvalidParameter(format!("({x}, {y}) lies outside the smile domain")));
        }
        let gap = p.gap();
        let rho = if gap > 0.0 {
            (x / (2.0 * gap).sqrt()).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        Ok(Self { x, y, rho })
    }
}

/// The model solution `M` on `ω_smile`; `M(0, 0) = 1` by the boundary value.
pub fn model_m(p: ModelPoint) -> f64 {
    if p.y <= 0.0 {
        return 1.0;
    }
    let r = p.rho;
    let root = (1.0 - r * r).max(0.0).sqrt();
    1.0 - (root - r) / (2.0 * SQRT_2) * (-asin_clamped(r) - FRAC_PI_4).exp()
}

/// Auxiliary points of the right/left constructions: `v` on the top of
/// `ω_c` and `u` with `(u, 2u²)` on the lower edge of the smile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentAux {
    pub c: f64,
    pub v: f64,
    pub u: f64,
}

/// `v = x ∓ √(x² + c² − y)`, `u = (v + √(2c² − v²))/2`.
///
/// Admissible triples satisfy `c ∈ (0, 1]`, `max(∓2cx, x²) ≤ y ≤ x² + c²`
/// (upper sign for the right case) and `|v| ≤ c`.
pub fn tangent_aux(x: f64, y: f64, c: f64, side: Side) -> Result<TangentAux> {
    let bad = || Error::InvalidParameter(format!("({x}, {y}, {c}) is not admissible for the {side:?} construction"));
    if !(c > 0.0 && c <= 1.0) || !x.is_finite() || !y.is_finite() {
        return Err(bad());
    }
    let tol = 1e-12;
    let sign = if side == Side::Right { -1.0 } else { 1.0 };
    if y < (sign * 2.0 * c * x).max(x * x) - tol || y > x * x + c * c + tol {
        return Err(bad());
    }
    let root = (x * x + c * c - y).max(0.0).sqrt();
    let v = x + sign * root;
    if v.abs() > c * (1.0 + tol) {
        return Err(bad());
    }
    let u = 0.5 * (v + (2.0 * c * c - v * v).max(0.0).sqrt());
    Ok(TangentAux { c, v, u })
}

// `(Ψ(v/c) − 1)/(u − v)` simplifies to `−Ψ′(v/c)/c`, which avoids the
// cancellation of both factors as `|v| → c`.
fn g_from_aux(x: f64, a: TangentAux) -> f64 {
    1.0 - (a.u - x) * psi_prime((a.v / a.c).clamp(-1.0, 1.0)) / a.c
}

/// `G_R(x, y, c)`: linear between `(v, v² + c²)` where it equals `Ψ(v/c)` and
/// `(u, 2u²)` where it equals 1.
pub fn g_right(x: f64, y: f64, c: f64) -> Result<f64> {
    Ok(g_from_aux(x, tangent_aux(x, y, c, Side::Right)?))
}

/// `G_L(x, y, c)`: the same interpolation continued beyond `(v, v² + c²)`.
pub fn g_left(x: f64, y: f64, c: f64) -> Result<f64> {
    Ok(g_from_aux(x, tangent_aux(x, y, c, Side::Left)?))
}

/// `B` on the roof above `(x, y) ∈ ω_1`, for the payoff `χ_[0,∞)`.
pub fn roof_b(p: Point2) -> Result<f64> {
    if !in_omega_eps(p, 1.0) {
        return Err(Error::OutsideStrip { x: p.x, y: p.y, eps: 1.0 });
    }
    let gap = p.gap();
    if gap <= 0.0 {
        return Ok(if p.x >= 0.0 { 1.0 } else { 0.0 });
    }
    let eps = gap.sqrt();
    match classify_indicator_domain(p, eps)? {
        IndicatorDomain::D2 => {
            let rho = (p.x / (2.0 * gap).sqrt()).clamp(-1.0, 1.0);
            Ok(model_m(ModelPoint { x: p.x, y: p.y, rho }))
        }
        _ => indicator_b(p, eps),
    }
}

/// The tangent plane of `M` at `(x0, y0)` restricted to the line of slope
/// `2x0` through it, as a function of the abscissa.
pub fn tangent_plane(x0: f64, y0: f64, xbar: f64) -> Result<f64> {
    let m = ModelPoint::new(x0, y0)?;
    let c0 = (y0 - x0 * x0).sqrt();
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("({x0}, {y0}) is on the lower boundary")));
    }
    Ok(model_m(m) + psi_prime(x0 / c0) * (xbar - x0) / c0)
}

/// The kernel `F(α, γ)` whose non-positivity on `0 ≤ α ≤ γ ≤ π/2` closes the
/// verification of the roof trace.
pub fn f_kernel(alpha: f64, gamma: f64) -> f64 {
    let tail = (gamma.sin() + alpha.cos()) * (-alpha).exp() - 2.0;
    if (gamma - alpha).abs() <= 1e-15 {
        // The exponent is exactly 0 at α = γ, also when cos γ vanishes.
        return (-gamma).exp() * (gamma.sin() + gamma.cos()) - 1.0;
    }
    let cg = gamma.cos();
    let num = alpha.sin() - alpha.cos() - gamma.sin();
    let expo = if cg <= 0.0 {
        if num < 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (1.0 + num / cg).exp()
    };
    expo + tail
}
