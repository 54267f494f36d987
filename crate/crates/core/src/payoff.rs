//! Payoff functions `f` on the lower boundary and their `f″` shape.
//!
//! The shape decides the foliation of `b_ε`: non-increasing `f″` gives right
//! tangents, non-decreasing `f″` gives left tangents, and a single maximum of
//! `f″` gives a cup flanked by tangents. The indicator is handled by its own
//! closed form.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::VerificationReport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    D2Nonincreasing,
    D2Nondecreasing,
    SingleCup { vertex: f64 },
    Indicator,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Exp(f64),
    Power(f64),
    Indicator,
    Custom {
        name: String,
        f: RealFn,
        d1: RealFn,
        d2: RealFn,
        growth: (f64, f64),
        kinks: Vec<f64>,
    },
}

/// A payoff with derivative data and a shape tag.
#[derive(Clone)]
pub struct BoundaryFunction {
    kind: Kind,
    shape: Shape,
}

impl fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFunction")
            .field("name", &self.name())
            .field("shape", &self.shape)
            .finish()
    }
}

impl BoundaryFunction {
    /// `f(t) = e^{λt}`.
    pub fn exp(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("exp rate {lambda} is not finite")));
        }
        // f″ = λ²e^{λt} increases for λ > 0 and decreases for λ < 0.
        let shape = if lambda >= 0.0 {
            Shape::D2Nondecreasing
        } else {
            Shape::D2Nonincreasing
        };
        Ok(Self { kind: Kind::Exp(lambda), shape })
    }

    /// `f(t) = |t|^p` for `p ∈ [1, 2]`.
    pub fn power(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("power exponent {p} outside [1, 2]")));
        }
        Ok(Self {
            kind: Kind::Power(p),
            shape: Shape::SingleCup { vertex: 0.0 },
        })
    }

    /// `f = χ_[0,∞)`.
    pub fn indicator() -> Self {
        Self { kind: Kind::Indicator, shape: Shape::Indicator }
    }

    /// A user payoff with explicit derivatives.
    ///
    /// `growth` holds the exponential growth rates of `f` toward `−∞` and
    /// `+∞`; polynomial growth is rate 0.
    pub fn custom<F, D1, D2>(name: &str, shape: Shape, f: F, d1: D1, d2: D2, growth: (f64, f64)) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: Kind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
                d1: Arc::new(d1),
                d2: Arc::new(d2),
                growth,
                kinks: Vec::new(),
            },
            shape,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Exp(l) => format!("exp:{l}"),
            Kind::Power(p) => format!("power:{p}"),
            Kind::Indicator => "indicator".to_string(),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn spec(&self) -> Option<PayoffSpec> {
        match self.kind {
            Kind::Exp(l) => Some(PayoffSpec::Exp(l)),
            Kind::Power(p) => Some(PayoffSpec::Power(p)),
            Kind::Indicator => Some(PayoffSpec::Indicator),
            Kind::Custom { .. } => None,
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self.kind, Kind::Indicator)
    }

    pub(crate) fn is_power(&self) -> bool {
        matches!(self.kind, Kind::Power(_))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Exp(l) => (l * t).exp(),
            Kind::Power(p) => t.abs().powf(*p),
            Kind::Indicator => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Custom { f, .. } => f(t),
        }
    }

    /// `e^{log_w}·f(t)`, combined in the exponent where `f` is exponential so
    /// that a vanishing weight and an overflowing payoff do not meet as 0·∞.
    pub fn eval_weighted(&self, t: f64, log_w: f64) -> f64 {
        match &self.kind {
            Kind::Exp(l) => (log_w + l * t).exp(),
            _ => {
                let w = log_w.exp();
                if w == 0.0 {
                    0.0
                } else {
                    w * self.eval(t)
                }
            }
        }
    }

    /// `f′(t)`; `None` for the indicator. For `|t|^p` the value at 0 is 0
    /// when `p > 1`, and the one-sided average 0 when `p = 1`.
    pub fn d1(&self, t: f64) -> Option<f64> {
        match &self.kind {
            Kind::Exp(l) => Some(l * (l * t).exp()),
            Kind::Power(p) => {
                if t == 0.0 {
                    Some(0.0)
                } else {
                    Some(p * t.signum() * t.abs().powf(p - 1.0))
                }
            }
            Kind::Indicator => None,
            Kind::Custom { d1, .. } => Some(d1(t)),
        }
    }

    /// `f″(t)`; `None` for the indicator and for `|t|^p` at the vertex.
    pub fn d2(&self, t: f64) -> Option<f64> {
        match &self.kind {
            Kind::Exp(l) => Some(l * l * (l * t).exp()),
            Kind::Power(p) => {
                if t == 0.0 {
                    None
                } else {
                    Some(p * (p - 1.0) * t.abs().powf(p - 2.0))
                }
            }
            Kind::Indicator => None,
            Kind::Custom { d2, .. } => Some(d2(t)),
        }
    }

    /// Exponential growth rate of `f` in the given direction: `r` such that
    /// `f(t) = O(e^{r|t|})` as `t → ±∞`.
    pub fn growth_rate(&self, toward_positive: bool) -> f64 {
        match &self.kind {
            Kind::Exp(l) => {
                if toward_positive {
                    l.max(0.0)
                } else {
                    (-l).max(0.0)
                }
            }
            Kind::Power(_) | Kind::Indicator => 0.0,
            Kind::Custom { growth, .. } => {
                if toward_positive {
                    growth.1
                } else {
                    growth.0
                }
            }
        }
    }

    /// Declared supremum of the admissible `ε*` in the growth condition
    /// `∫ e^{−|t|/ε*} |df″| < ∞`. Infinite for sub-exponential payoffs.
    pub fn growth_bound(&self) -> f64 {
        let r = self.growth_rate(true).max(self.growth_rate(false));
        if r > 0.0 {
            1.0 / r
        } else {
            f64::INFINITY
        }
    }

    /// Points where `f` is not smooth; quadrature splits there.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Exp(_) => Vec::new(),
            Kind::Power(p) if *p == 2.0 => Vec::new(),
            Kind::Power(_) | Kind::Indicator => vec![0.0],
            Kind::Custom { kinks, .. } => kinks.clone(),
        }
    }
}

/// Parsed payoff selector: `exp:λ`, `power:p`, or `indicator`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PayoffSpec {
    Exp(f64),
    Power(f64),
    Indicator,
}

impl FromStr for PayoffSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "indicator" {
            return Ok(Self::Indicator);
        }
        let bad = || Error::InvalidParameter(format!("unrecognized payoff `{s}`"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = arg.trim().parse().map_err(|_| bad())?;
        match kind {
            "exp" => Ok(Self::Exp(v)),
            "power" => Ok(Self::Power(v)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exp(l) => write!(f, "exp:{l}"),
            Self::Power(p) => write!(f, "power:{p}"),
            Self::Indicator => write!(f, "indicator"),
        }
    }
}

pub fn make_payoff(spec: PayoffSpec) -> Result<BoundaryFunction> {
    match spec {
        PayoffSpec::Exp(l) => BoundaryFunction::exp(l),
        PayoffSpec::Power(p) => BoundaryFunction::power(p),
        PayoffSpec::Indicator => Ok(BoundaryFunction::indicator()),
    }
}

/// Checks that `f″` on `grid` is monotone in the way the shape tag claims.
///
/// The violation is the largest step of `f″` against the declared direction,
/// relative to `max |f″|` on the grid. Grid points where `f″` is undefined
/// are skipped.
pub fn check_shape(f: &BoundaryFunction, grid: &[f64]) -> Result<VerificationReport> {
    if f.shape() == Shape::Indicator {
        return Err(Error::UnsupportedPayoff(f.name()));
    }
    let mut pts: Vec<(f64, f64)> = grid
        .iter()
        .filter_map(|&t| f.d2(t).map(|v| (t, v)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.1.abs())).max(1.0);

    let mut worst = f64::NEG_INFINITY;
    let mut at = vec![f64::NAN];
    for w in pts.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        let rising = match f.shape() {
            Shape::D2Nondecreasing => true,
            Shape::D2Nonincreasing => false,
            Shape::SingleCup { vertex } => t1 <= vertex,
            Shape::Indicator => unreachable!(),
        };
        if let Shape::SingleCup { vertex } = f.shape() {
            // A step straddling the vertex has no prescribed direction.
            if t0 < vertex && t1 > vertex {
                continue;
            }
        }
        let v = if rising { v0 - v1 } else { v1 - v0 } / scale;
        if v > worst {
            worst = v;
            at = vec![0.5 * (t0 + t1)];
        }
    }
    if pts.len() < 2 {
        worst = 0.0;
    }
    let tol = 1e-12;
    Ok(VerificationReport::new(
        format!("shape:{}", f.name()),
        pts.len(),
        worst,
        at,
        tol,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    #[test]
    fn catalog_values() {
        assert_eq!(BoundaryFunction::exp(1.0).unwrap().eval(0.0), 1.0);
        assert_eq!(BoundaryFunction::power(2.0).unwrap().eval(-3.0), 9.0);
        let ind = BoundaryFunction::indicator();
        assert_eq!(ind.eval(-0.001), 0.0);
        assert_eq!(ind.eval(0.0), 1.0);
        assert!(ind.d1(1.0).is_none());
    }

    #[test]
    fn power_range_enforced() {
        assert!(BoundaryFunction::power(0.5).is_err());
        assert!(BoundaryFunction::power(2.5).is_err());
        assert!(BoundaryFunction::power(1.0).is_ok());
    }

    #[test]
    fn spec_roundtrip() {
        for s in ["exp:1", "power:1.5", "indicator", "exp:-0.25"] {
            let spec: PayoffSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<PayoffSpec>().unwrap(), spec);
        }
        assert!("cosh:1".parse::<PayoffSpec>().is_err());
        assert!("exp:x".parse::<PayoffSpec>().is_err());
    }

    #[test]
    fn shape_checks() {
        let g = grid(-5.0, 5.0, 100);
        assert!(check_shape(&BoundaryFunction::exp(1.0).unwrap(), &g).unwrap().passed);
        assert!(check_shape(&BoundaryFunction::exp(-1.0).unwrap(), &g).unwrap().passed);
        let no_zero: Vec<f64> = g.iter().copied().filter(|t| t.abs() > 1e-9).collect();
        assert!(check_shape(&BoundaryFunction::power(1.5).unwrap(), &no_zero).unwrap().passed);

        let wobbly = BoundaryFunction::custom(
            "wobbly",
            Shape::D2Nondecreasing,
            |t| t * t + (3.0 * t).cos(),
            |t| 2.0 * t - 3.0 * (3.0 * t).sin(),
            |t| 2.0 - 9.0 * (3.0 * t).cos(),
            (0.0, 0.0),
        );
        assert!(!check_shape(&wobbly, &g).unwrap().passed);
        assert!(check_shape(&BoundaryFunction::indicator(), &g).is_err());
    }

    #[test]
    fn power_derivatives_match_differences() {
        let h = 1e-5;
        for p in [1.0, 1.3, 1.5, 1.8, 2.0] {
            let f = BoundaryFunction::power(p).unwrap();
            for t in grid(-3.0, 3.0, 60).into_iter().filter(|t| t.abs() >= 0.1) {
                let fd1 = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
                let fd2 = (f.d1(t + h).unwrap() - f.d1(t - h).unwrap()) / (2.0 * h);
                let d1 = f.d1(t).unwrap();
                let d2 = f.d2(t).unwrap();
                assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1.0), "p={p} t={t}");
                assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1.0), "p={p} t={t}");
            }
        }
    }

    #[test]
    fn growth() {
        let f = BoundaryFunction::exp(0.5).unwrap();
        assert_eq!(f.growth_rate(true), 0.5);
        assert_eq!(f.growth_rate(false), 0.0);
        assert_eq!(f.growth_bound(), 2.0);
        assert!(BoundaryFunction::power(1.5).unwrap().growth_bound().is_infinite());
    }
}
