use bellman_core::analysis::{sample_split, ParentDomain, SamplerConfig};
use bellman_core::geometry::{in_omega_eps, parabolic_shift, u_tangent};
use bellman_core::martingale::random_tree;
use bellman_core::roof::{model_m, roof_b, ModelPoint};
use bellman_core::surface::indicator_b;
use bellman_core::{BellmanSurface, BoundaryFunction, Point2, Side};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn surfaces(eps: f64) -> Vec<BellmanSurface> {
    let mut out = vec![BellmanSurface::new(BoundaryFunction::indicator(), eps).unwrap()];
    for lambda in [-0.8, 0.5] {
        if let Ok(s) = BellmanSurface::new(BoundaryFunction::exp(lambda).unwrap(), eps) {
            out.push(s);
        }
    }
    for p in [1.0, 1.5, 2.0] {
        out.push(BellmanSurface::new(BoundaryFunction::power(p).unwrap(), eps).unwrap());
    }
    out
}

/// A point of `ω_ε` from an abscissa and a fraction of the strip height.
fn strip_point(x: f64, frac: f64, eps: f64) -> Point2 {
    Point2::new(x, x * x + frac * eps * eps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn boundary_condition(x in -3.0..3.0f64, eps in 0.05..1.0f64) {
        for s in surfaces(eps) {
            let v = s.eval(Point2::new(x, x * x)).unwrap();
            prop_assert!((v - s.payoff.eval(x)).abs() <= 1e-10);
        }
    }

    #[test]
    fn exp_surface_matches_tangent_closed_form(
        lambda in prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
        x in -2.0..2.0f64,
        frac in 0.0..=1.0f64,
        eps_frac in 0.05..0.995f64,
    ) {
        // λε up to 0.995 reaches the regime where e^{λt} overflows inside
        // the truncated slope integral.
        let eps = eps_frac / lambda.abs();
        prop_assume!(eps <= 2.0);
        let s = BellmanSurface::new(BoundaryFunction::exp(lambda).unwrap(), eps).unwrap();
        let p = strip_point(x, frac, eps);
        let (side, m) = if lambda > 0.0 {
            (Side::Left, lambda / (1.0 - lambda * eps))
        } else {
            (Side::Right, lambda / (1.0 + lambda * eps))
        };
        let u = u_tangent(p, eps, side).unwrap();
        let want = (lambda * u).exp() * (1.0 + m * (p.x - u));
        let got = s.eval(p).unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn exp_surface_shift_covariance(
        x in -1.5..1.5f64,
        frac in 0.0..=1.0f64,
        tau in -1.0..1.0f64,
    ) {
        // Shifting φ by τ multiplies e^{λφ} by e^{−λτ}.
        let (lambda, eps) = (0.7, 0.6);
        let s = BellmanSurface::new(BoundaryFunction::exp(lambda).unwrap(), eps).unwrap();
        let p = strip_point(x, frac, eps);
        let q = parabolic_shift(p, tau);
        prop_assume!(in_omega_eps(q, eps));
        let lhs = s.eval(q).unwrap();
        let rhs = (-lambda * tau).exp() * s.eval(p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn split_rules_survive_parabolic_shift(seed in any::<u64>(), tau in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = SamplerConfig::new(ParentDomain::Omega, 1, seed);
        let e = sample_split(&mut rng, &cfg);
        let scale = 1.0 + e.parent.y.abs() + tau * tau;
        prop_assert!(e.shifted(tau).residual() <= 1e-12 * scale + e.residual());
    }

    #[test]
    fn monotone_in_eps(x in -2.0..2.0f64, frac in 0.0..=1.0f64, e1 in 0.05..0.9f64, bump in 0.0..0.5f64) {
        let e2 = (e1 + bump).min(0.95);
        let p = strip_point(x, frac, e1);
        for (s1, s2) in surfaces(e1).into_iter().zip(surfaces(e2)) {
            prop_assert_eq!(s1.payoff.name(), s2.payoff.name());
            let (b1, b2) = (s1.eval(p).unwrap(), s2.eval(p).unwrap());
            prop_assert!(b1 <= b2 + 1e-9, "{}: {b1} > {b2}", s1.payoff.name());
        }
    }

    #[test]
    fn locally_concave_along_chords(
        x in -2.0..2.0f64,
        frac in 0.0..=1.0f64,
        dx in -0.3..0.3f64,
        dy in -0.3..0.3f64,
        w in 0.05..0.95f64,
        eps in 0.2..0.9f64,
    ) {
        let a = strip_point(x, frac, eps);
        let b = Point2::new(a.x + dx, a.y + dy);
        // The gap is concave along the chord: its maximum must stay below ε².
        let g = |s: f64| {
            let (px, py) = (a.x + s * dx, a.y + s * dy);
            py - px * px
        };
        let s_star = if dx == 0.0 { 0.0 } else { ((dy - 2.0 * a.x * dx) / (2.0 * dx * dx)).clamp(0.0, 1.0) };
        prop_assume!(b.gap() >= 0.0 && g(s_star).max(g(0.0)).max(g(1.0)) <= eps * eps);
        let mid = Point2::new(w * a.x + (1.0 - w) * b.x, w * a.y + (1.0 - w) * b.y);
        for s in surfaces(eps) {
            let avg = w * s.eval(a).unwrap() + (1.0 - w) * s.eval(b).unwrap();
            let m = s.eval(mid).unwrap();
            prop_assert!(m >= avg - 1e-9, "{}: {m} < {avg}", s.payoff.name());
        }
    }

    #[test]
    fn indicator_continuous_across_domains(eps in 0.05..1.0f64, frac in 0.0..=1.0f64, which in 0usize..3) {
        // Interfaces: y = 2εx on [0, ε] (D1|D2), y = −2εx on [−ε, 0] (D2|D3)
        // and on [−2ε, −ε] (D3|D4).
        let x = match which {
            0 => frac * eps,
            1 => -frac * eps,
            _ => -eps * (1.0 + frac),
        };
        let p = Point2::new(x, 2.0 * eps * x.abs());
        prop_assume!(in_omega_eps(p, eps));
        let h = 1e-9 * eps;
        let mut vals = vec![indicator_b(p, eps).unwrap()];
        for (ddx, ddy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let q = Point2::new(p.x + ddx, p.y + ddy);
            if in_omega_eps(q, eps) {
                vals.push(indicator_b(q, eps).unwrap());
            }
        }
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(spread <= 1e-7, "{p:?}: {vals:?}");
    }

    #[test]
    fn model_is_homogeneous(x in -1.0..1.0f64, frac in 0.0..=1.0f64, lambda in 0.01..=1.0f64) {
        let lo = 2.0 * x * x;
        let hi = x * x + 1.0;
        prop_assume!(lo <= hi);
        let y = lo + frac * (hi - lo);
        let a = model_m(ModelPoint::new(x, y).unwrap());
        let b = model_m(ModelPoint::new(lambda * x, lambda * lambda * y).unwrap());
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn roof_bounded_by_indicator_b1(x in -2.0..2.0f64, frac in 0.0..=1.0f64) {
        let p = strip_point(x, frac, 1.0);
        let r = roof_b(p).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(r <= indicator_b(p, 1.0).unwrap() + 1e-12);
    }

    #[test]
    fn random_trees_are_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, 4, 4);
        prop_assert!(t.validate().is_ok());
        prop_assert!(t.max_split_residual() <= 1e-12);
        let r = t.root();
        prop_assert!((t.expectation(|v| v) - r.x).abs() <= 1e-10);
        prop_assert!((t.expectation(|v| v * v) - r.y).abs() <= 1e-10);
        prop_assert!(t.square_function_sup() <= 1.0 + 1e-12);
        let mass: f64 = t.leaves().iter().map(|&(_, m)| m).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
    }
}
