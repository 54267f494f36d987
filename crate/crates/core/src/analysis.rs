//! Verification suites and sharp-constant extraction.
//!
//! Every suite reports a signed `worst_violation`: the largest amount by which
//! the checked inequality fails over all samples. It is negative when every
//! sample holds with slack, and a suite passes when it is at most the
//! tolerance.

use std::f64::consts::{E, FRAC_PI_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Side, SplitEvent, State3};
use crate::martingale::{
    bmo_norm_estimate, extremize_parabola_chain, extremize_roof_indicator, random_tree, rearrangement,
    DistributionTable, MartingaleTree,
};
use crate::payoff::BoundaryFunction;
use crate::roof::{f_kernel, g_left, g_right, ode_residual, psi, roof_b, t_of_v, tangent_aux, tangent_plane};
use crate::roots::{golden_max, golden_max_ties};
use crate::surface::{composite_b, indicator_b, BellmanSurface};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub samples: usize,
    pub worst_violation: f64,
    pub worst_location: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub seed: Option<u64>,
}

impl VerificationReport {
    pub fn new(
        suite: impl Into<String>,
        samples: usize,
        worst_violation: f64,
        worst_location: Vec<f64>,
        tolerance: f64,
        seed: Option<u64>,
    ) -> Self {
        Self {
            suite: suite.into(),
            samples,
            worst_violation,
            worst_location,
            tolerance,
            passed: worst_violation <= tolerance,
            seed,
        }
    }
}

/// Worst `(violation, location)` over a batch; NaN violations always win so
/// that they surface as failures.
#[derive(Clone, Debug)]
struct Worst {
    v: f64,
    at: Vec<f64>,
    n: usize,
}

impl Worst {
    fn empty() -> Self {
        Self { v: f64::NEG_INFINITY, at: Vec::new(), n: 0 }
    }

    fn push(&mut self, v: f64, at: impl FnOnce() -> Vec<f64>) {
        self.n += 1;
        if v.is_nan() {
            if !self.v.is_nan() {
                self.v = f64::NAN;
                self.at = at();
            }
        } else if !self.v.is_nan() && v > self.v {
            self.v = v;
            self.at = at();
        }
    }

    fn merge(mut self, o: Self) -> Self {
        self.n += o.n;
        let take = if o.v.is_nan() { !self.v.is_nan() } else { !self.v.is_nan() && o.v > self.v };
        if take {
            self.v = o.v;
            self.at = o.at;
        }
        self
    }

    fn report(self, suite: &str, tol: f64, seed: Option<u64>) -> VerificationReport {
        // A NaN violation fails: NaN <= tol is false.
        VerificationReport::new(suite, self.n, self.v, self.at, tol, seed)
    }
}

const CHUNK: usize = 2048;

/// Runs `body` on `samples` draws split into deterministic parallel chunks;
/// chunk `k` uses the ChaCha8 stream `k` of `seed`.
fn par_samples<F>(samples: usize, seed: u64, body: F) -> Worst
where
    F: Fn(&mut ChaCha8Rng, &mut Worst) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut w = Worst::empty();
            let n = CHUNK.min(samples - k * CHUNK);
            for _ in 0..n {
                body(&mut rng, &mut w);
            }
            w
        })
        .reduce(Worst::empty, Worst::merge)
}

/// Where sampled parents live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParentDomain {
    /// All of `Ω`.
    Omega,
    /// `Ω ∩ {z = 0}`: the children's convex hull lies in `ω_1`.
    OmegaZ0,
    /// The roof `y − x² = 1 − z²`.
    Roof,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub domain: ParentDomain,
    pub samples: usize,
    pub seed: u64,
    /// Parent abscissas are uniform in `[−x_range, x_range]`.
    pub x_range: f64,
    /// At most this many children per event (at least 2).
    pub max_children: usize,
}

impl SamplerConfig {
    pub fn new(domain: ParentDomain, samples: usize, seed: u64) -> Self {
        Self { domain, samples, seed, x_range: 2.5, max_children: 5 }
    }
}

/// Draws one event obeying the splitting rules.
///
/// Child offsets `d_j` are uniform in `[−r, r]`, `r = √(1 − z²)`. Dirichlet
/// weights are mixed with a point mass at an extreme offset to zero the
/// weighted mean. The child second moments are placed at random between
/// `x_j²` and the top of their strips, then moved together so that their
/// weighted mean hits the parent.
pub fn sample_split<R: Rng>(rng: &mut R, cfg: &SamplerConfig) -> SplitEvent {
    let z = match cfg.domain {
        ParentDomain::OmegaZ0 => 0.0,
        _ => rng.gen_range(0.0..1.0f64).powf(0.7),
    };
    let r = (1.0 - z * z).sqrt();
    let x = rng.gen_range(-cfg.x_range..=cfg.x_range);
    let k = rng.gen_range(2..=cfg.max_children.max(2));

    let mut d: Vec<f64> = (0..k)
        .map(|_| if rng.gen_bool(0.15) { r * sign(rng) } else { rng.gen_range(-r..=r) })
        .collect();
    // Force a strict sign change on two distinct children.
    let (imin, _) = argminmax(&d);
    if d[imin] >= 0.0 {
        d[imin] = -r * rng.gen_range(0.01..=1.0);
    }
    let (imin, imax) = argminmax(&d);
    if d[imax] <= 0.0 {
        d[(imin + 1) % k] = r * rng.gen_range(0.01..=1.0);
    }
    let (imin, imax) = argminmax(&d);
    let mut w: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12..1.0f64).ln()).collect();
    let tw: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= tw);
    let m: f64 = w.iter().zip(&d).map(|(w, d)| w * d).sum();
    let j = if m > 0.0 { imin } else { imax };
    if m != 0.0 && d[j] != m {
        let theta = m / (m - d[j]);
        w.iter_mut().for_each(|v| *v *= 1.0 - theta);
        w[j] += theta;
    }
    let m: f64 = w.iter().zip(&d).map(|(w, d)| w * d).sum();
    // Absorb the round-off of the mean into the heaviest child.
    let heavy = (0..k).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    d[heavy] -= m / w[heavy];

    // Second moments in coordinates centered at the parent: y'_j ∈ [d_j², r²].
    let q = match cfg.domain {
        ParentDomain::Roof => 1.0,
        _ => {
            let u: f64 = rng.gen();
            if u < 0.1 {
                1.0
            } else if u < 0.15 {
                0.0
            } else {
                rng.gen()
            }
        }
    };
    let room: Vec<f64> = d.iter().map(|d| (r * r - d * d).max(0.0)).collect();
    let mut s: Vec<f64> = (0..k)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen(),
        })
        .collect();
    let tot: f64 = w.iter().zip(&room).map(|(w, r)| w * r).sum();
    if tot > 0.0 {
        let avg = w.iter().zip(&room).zip(&s).map(|((w, r), s)| w * r * s).sum::<f64>() / tot;
        for sj in &mut s {
            *sj = if avg >= q {
                if avg > 0.0 { *sj * q / avg } else { q }
            } else {
                1.0 - (1.0 - *sj) * (1.0 - q) / (1.0 - avg)
            };
        }
    }
    let yc: Vec<f64> = (0..k).map(|j| d[j] * d[j] + s[j] * room[j]).collect();
    let gap: f64 = w.iter().zip(&yc).map(|(w, y)| w * y).sum();

    // Back to absolute coordinates: shift by −x.
    let parent = State3::new(x, x * x + gap, z);
    let children = (0..k)
        .map(|j| {
            let xj = x + d[j];
            let yj = yc[j] + 2.0 * x * d[j] + x * x;
            (w[j], State3::new(xj, yj, (z * z + d[j] * d[j]).min(1.0).sqrt()))
        })
        .collect();
    SplitEvent::new(parent, children)
}

fn sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn argminmax(v: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[lo] {
            lo = i;
        }
        if x > v[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Checks the main inequality `G(parent) ≥ Σ w_j G(child_j)` on sampled
/// events. Evaluation errors count as infinite violations.
pub fn verify_supersolution<G>(suite: &str, g: G, cfg: &SamplerConfig, tol: f64) -> VerificationReport
where
    G: Fn(State3) -> Result<f64> + Sync,
{
    let w = par_samples(cfg.samples, cfg.seed, |rng, worst| {
        let e = sample_split(rng, cfg);
        let v = (|| -> Result<f64> {
            let mut avg = 0.0;
            for &(w, c) in &e.children {
                avg += w * g(c)?;
            }
            Ok(avg - g(e.parent)?)
        })()
        .unwrap_or(f64::INFINITY);
        worst.push(v, || vec![e.parent.x, e.parent.y, e.parent.z]);
    });
    w.report(suite, tol, Some(cfg.seed))
}

/// The three supersolution suites: `b_1` for the indicator under splits
/// from `z = 0`, the exponential composite `b_{√(1−z²)}` on all of `Ω`, and
/// the glued roof function under roof splits.
pub fn supersolution_suite(samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    let tol = 1e-9;
    let b1 = |s: State3| indicator_b(clamp_top(s.point(), 1.0), 1.0);
    let a = verify_supersolution(
        "supersolution:indicator",
        b1,
        &SamplerConfig::new(ParentDomain::OmegaZ0, samples, seed),
        tol,
    );
    let f = BoundaryFunction::exp(0.5)?;
    let b = verify_supersolution(
        "supersolution:exp-composite",
        |s| composite_b(&f, s),
        &SamplerConfig::new(ParentDomain::Omega, samples, seed),
        tol,
    );
    let c = verify_supersolution(
        "supersolution:roof",
        |s| roof_b(clamp_top(s.point(), 1.0)),
        &SamplerConfig::new(ParentDomain::Roof, samples, seed),
        tol,
    );
    Ok(vec![a, b, c])
}

/// The indicator suite run on `b_1 + 0.05·x²`, which is not a
/// supersolution; a working verifier must reject it.
pub fn supersolution_negative_control(samples: usize, seed: u64) -> VerificationReport {
    let bumped = |s: State3| Ok(indicator_b(clamp_top(s.point(), 1.0), 1.0)? + 0.05 * s.x * s.x);
    verify_supersolution(
        "supersolution:negative-control",
        bumped,
        &SamplerConfig::new(ParentDomain::OmegaZ0, samples, seed),
        1e-9,
    )
}

/// Clamps round-off above the top of `ω_ε`.
fn clamp_top(p: Point2, eps: f64) -> Point2 {
    Point2::new(p.x, p.y.min(p.x * p.x + eps * eps))
}

/// Finite-difference check that `G_R` and `G_L` do not decrease in `c`.
pub fn verify_monotone_c(samples: usize, seed: u64) -> Vec<VerificationReport> {
    let tol = 1e-9;
    [Side::Right, Side::Left]
        .into_iter()
        .map(|side| {
            let g = |x: f64, y: f64, c: f64| match side {
                Side::Right => g_right(x, y, c),
                Side::Left => g_left(x, y, c),
            };
            let stream = if side == Side::Right { seed } else { seed ^ 0x9e37_79b9 };
            let w = par_samples(samples, stream, |rng, worst| loop {
                let c: f64 = rng.gen_range(0.02..=1.0);
                let x: f64 = rng.gen_range(-c..=c);
                // (x, y) must also lie in ω_smile, so y ≥ 2x².
                let lo = match side {
                    Side::Right => (-2.0 * c * x).max(2.0 * x * x),
                    Side::Left => (2.0 * c * x).max(2.0 * x * x),
                };
                let hi = x * x + c * c;
                if lo > hi {
                    continue;
                }
                let y = rng.gen_range(lo..=hi);
                if tangent_aux(x, y, c, side).is_err() {
                    continue;
                }
                let h = 1e-6 * c;
                let up = if c + h <= 1.0 { g(x, y, c + h).ok() } else { None };
                let down = g(x, y, c - h).ok();
                let mid = g(x, y, c).expect("admissible");
                let deriv = match (down, up) {
                    (Some(d), Some(u)) => (u - d) / (2.0 * h),
                    (None, Some(u)) => (u - mid) / h,
                    (Some(d), None) => (mid - d) / h,
                    (None, None) => continue,
                };
                worst.push(-deriv, || vec![x, y, c]);
                break;
            });
            let name = if side == Side::Right { "monotone-c:right" } else { "monotone-c:left" };
            w.report(name, tol, Some(seed))
        })
        .collect()
}

/// `F(α, γ) ≤ 0` on the `n × n` grid of `0 ≤ α ≤ γ ≤ π/2`, the two edges
/// `α = 0` and `α = γ` on their own, and convexity in `α` along each
/// `γ`-slice.
pub fn f_kernel_suite(n: usize) -> Vec<VerificationReport> {
    let n = n.max(3);
    let h = FRAC_PI_2 / (n - 1) as f64;
    let node = |i: usize| if i == n - 1 { FRAC_PI_2 } else { i as f64 * h };
    let (mut grid, mut edge0, mut diag, mut convex) = (Worst::empty(), Worst::empty(), Worst::empty(), Worst::empty());
    for j in 0..n {
        let g = node(j);
        let vals: Vec<f64> = (0..=j).map(|i| f_kernel(node(i), g)).collect();
        for (i, &v) in vals.iter().enumerate() {
            grid.push(v, || vec![node(i), g]);
        }
        edge0.push(vals[0], || vec![0.0, g]);
        diag.push(vals[j], || vec![g, g]);
        for i in 1..j {
            let second = vals[i - 1] - 2.0 * vals[i] + vals[i + 1];
            convex.push(-second, || vec![node(i), g]);
        }
    }
    vec![
        grid.report("f-kernel:grid", 1e-12, None),
        edge0.report("f-kernel:alpha-zero", 0.0, None),
        diag.report("f-kernel:diagonal", 0.0, None),
        convex.report("f-kernel:convexity", 1e-9, None),
    ]
}

/// `Ψ = 1 − 1/(2t)` on sampled `v`, and the residual of `2t·v′ = −v + √(2 − v²)`.
pub fn ode_suite(samples: usize, seed: u64) -> Vec<VerificationReport> {
    let identity = par_samples(samples, seed, |rng, worst| {
        let v: f64 = rng.gen_range(-1.0..0.999);
        let t = t_of_v(v).expect("v < 1");
        worst.push((psi(v) - (1.0 - 0.5 / t)).abs(), || vec![v]);
    });
    let residual = par_samples(samples, seed.wrapping_add(1), |rng, worst| {
        let v: f64 = rng.gen_range(-0.999..0.99);
        let r = ode_residual(v).map(f64::abs).unwrap_or(f64::INFINITY);
        worst.push(r, || vec![v]);
    });
    vec![
        identity.report("ode:psi-identity", 1e-12, Some(seed)),
        residual.report("ode:cauchy-residual", 1e-8, Some(seed)),
    ]
}

/// The glued roof function stays under the tangent plane of `M` along the
/// slope-`2x0` line, for `(x0, y0) ∈ ω_smile`.
pub fn verify_tangent_plane(samples: usize, seed: u64) -> VerificationReport {
    let w = par_samples(samples, seed, |rng, worst| {
        let c0: f64 = rng.gen_range(1e-3..=1.0);
        let v0: f64 = rng.gen_range(-1.0..=1.0);
        let (x0, y0) = (c0 * v0, c0 * c0 * (1.0 + v0 * v0));
        let d: f64 = rng.gen_range(-c0..=c0);
        let (xb, yb) = (x0 + d, y0 + 2.0 * x0 * d);
        let v = (|| -> Result<f64> {
            let g = roof_b(clamp_top(Point2::new(xb, yb), 1.0))?;
            Ok(g - tangent_plane(x0, y0, xb)?)
        })()
        .unwrap_or(f64::INFINITY);
        worst.push(v, || vec![x0, y0, xb, yb]);
    });
    w.report("tangent-plane", 1e-9, Some(seed))
}

/// Random admissible trees with `sup Sφ ≤ 1` satisfy the embedding bound;
/// the `±1` martingale attains it.
pub fn verify_embedding(trees: usize, seed: u64) -> Vec<VerificationReport> {
    let grid = 512;
    let w = (0..trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let t = random_tree(&mut rng, 5, 4);
            let mut w = Worst::empty();
            let v = if t.validate().is_ok() && t.square_function_sup() <= 1.0 + 1e-12 {
                bmo_norm_estimate(&rearrangement(&t), grid) - 1.0
            } else {
                f64::INFINITY
            };
            w.push(v, || vec![k as f64]);
            w
        })
        .reduce(Worst::empty, Worst::merge);
    let witness = DistributionTable::new(vec![(1.0, 0.5), (-1.0, 0.5)]).expect("valid table");
    let est = bmo_norm_estimate(&witness, grid);
    vec![
        w.report("embedding:random-trees", 1e-3, Some(seed)),
        VerificationReport::new("embedding:witness", 1, (1.0 - 1e-6) - est, vec![est], 0.0, None),
    ]
}

/// `P(φ_∞ ≥ 0) ≤ (e/2)e^{−λ}` for roof extremizers started at `−λ`, and
/// saturation within 2% at `λ = 1`.
pub fn verify_weak_jn_c1() -> Result<Vec<VerificationReport>> {
    let n = 4000;
    let mut bound = Worst::empty();
    let mut sat = Worst::empty();
    for lambda in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let p = weak_jn_tree(lambda, n)?.expectation(|t| if t >= 0.0 { 1.0 } else { 0.0 });
        let b = 0.5 * E * (-lambda).exp();
        bound.push(p - b, || vec![lambda, p]);
        if lambda == 1.0 {
            sat.push((b - p) / b, || vec![lambda, p]);
        }
    }
    Ok(vec![
        bound.report("weak-jn:bound", 1e-12, None),
        sat.report("weak-jn:saturation", 0.02, None),
    ])
}

/// The extremizer started at `(−λ, λ² + 1, 0)`: the roof chain for `λ ≤ 1`,
/// a parabola chain to `x = −1 + θ` followed by a symmetric split otherwise.
pub fn weak_jn_tree(lambda: f64, n: usize) -> Result<MartingaleTree> {
    if lambda <= 1.0 {
        return extremize_roof_indicator(-lambda, 1.0, n);
    }
    let theta = 0.01;
    extremize_parabola_chain(State3::new(-lambda, lambda * lambda + 1.0, 0.0), -1.0 + theta, n)
}

fn refine_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let step = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    for i in 1..=n {
        let y = lo + step * i as f64;
        let v = f(y);
        if v >= best.1 {
            best = (y, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let g = golden_max(&f, a, b, 1e-12);
    if g.1 > best.1 {
        g
    } else {
        best
    }
}

/// `sup_{0 ≤ y ≤ 1} b_1(0, y)^{1/p}` for `f = |t|^p`.
pub fn sharp_constant_cp(p: f64, grid: usize) -> Result<f64> {
    let s = BellmanSurface::new(BoundaryFunction::power(p)?, 1.0)?;
    let f = |y: f64| s.eval(Point2::new(0.0, y)).map(|v| v.powf(1.0 / p)).unwrap_or(f64::NAN);
    Ok(refine_max(f, 0.0, 1.0, grid.max(2)).1)
}

/// `sup_{0 ≤ y ≤ 1} b_1(0, y)` for `f = e^{εt}`; equals `e^{−ε}/(1 − ε)`.
pub fn sharp_constant_exp(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("exp constant needs 0 < eps < 1, got {eps}")));
    }
    let s = BellmanSurface::new(BoundaryFunction::exp(eps)?, 1.0)?;
    let f = |y: f64| s.eval(Point2::new(0.0, y)).unwrap_or(f64::NAN);
    Ok(refine_max(f, 0.0, 1.0, 64).1)
}

/// `sup e^{−x} b_1(x, y)` over `ω_1 ∩ {|x| ≤ 2}` for the indicator, with its
/// location. The supremum `e/2` is attained on the whole top edge
/// `x ≤ −1`; ties go to the largest `x`, which picks `(−1, 2)`.
pub fn sharp_constant_tail(grid: usize) -> (f64, Point2) {
    let n = grid.max(3);
    let s = |x: f64, h: f64| {
        let h = h.clamp(0.0, 1.0);
        (-x).exp() * indicator_b(Point2::new(x, x * x + h), 1.0).unwrap_or(f64::NAN)
    };
    let xs = |i: usize| -2.0 + 4.0 * i as f64 / (n - 1) as f64;
    let hs = |j: usize| j as f64 / (n - 1) as f64;
    let tie = 1e-12;
    let better = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        // Larger value, or a tie with larger x.
        if b.0 > a.0 + tie || ((b.0 - a.0).abs() <= tie && b.1 > a.1) {
            b
        } else {
            a
        }
    };
    let start = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0);
    let (mut v, mut x, mut h) = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = xs(i);
            (0..n).fold(start, |acc, j| better(acc, (s(x, hs(j)), x, hs(j))))
        })
        .reduce(|| start, better);

    let dx = 4.0 / (n - 1) as f64;
    let dh = 1.0 / (n - 1) as f64;
    for _ in 0..3 {
        let (bx, vx) = golden_max_ties(|t| s(t, h), (x - dx).max(-2.0), (x + dx).min(2.0), 1e-12, tie);
        if vx > v + tie || ((vx - v).abs() <= tie && bx > x) {
            x = bx;
            v = vx;
        }
        let (bh, vh) = golden_max_ties(|t| s(x, t), (h - dh).max(0.0), (h + dh).min(1.0), 1e-12, tie);
        if vh > v + tie {
            h = bh;
            v = vh;
        }
    }
    (v, Point2::new(x, x * x + h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::admissible_split;

    #[test]
    fn sampler_respects_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for domain in [ParentDomain::Omega, ParentDomain::OmegaZ0, ParentDomain::Roof] {
            let cfg = SamplerConfig::new(domain, 1, 0);
            for _ in 0..2000 {
                let e = sample_split(&mut rng, &cfg);
                assert!(e.residual() <= 1e-9, "{domain:?}: {e:?}");
                assert!(admissible_split(&e));
                if domain == ParentDomain::Roof {
                    for (_, c) in &e.children {
                        assert!(c.roof_residual().abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn report_sign_convention() {
        assert!(VerificationReport::new("x", 1, -0.5, vec![], 1e-9, None).passed);
        assert!(!VerificationReport::new("x", 1, 1e-6, vec![], 1e-9, None).passed);
        assert!(!VerificationReport::new("x", 1, f64::NAN, vec![], 1e-9, None).passed);
    }

    #[test]
    fn small_supersolution_runs() {
        for r in supersolution_suite(3000, 1).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn perturbed_surface_fails() {
        let r = supersolution_negative_control(2000, 0);
        assert!(!r.passed && r.worst_violation > 1e-3, "{r:?}");
    }

    #[test]
    fn constants_small_grid() {
        assert!((sharp_constant_cp(1.5, 32).unwrap() - 1.0).abs() < 1e-9);
        let c = sharp_constant_exp(0.5).unwrap();
        assert!((c - 2.0 * (-0.5f64).exp()).abs() < 1e-7);
        assert!(sharp_constant_exp(1.0).is_err());
        let (c, at) = sharp_constant_tail(201);
        assert!((c - 0.5 * E).abs() < 1e-6);
        assert!((at.x + 1.0).abs() < 1e-3 && (at.y - 2.0).abs() < 1e-3, "{at:?}");
    }
}
