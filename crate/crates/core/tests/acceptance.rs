//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{E, FRAC_PI_4, SQRT_2};
use std::time::{Duration, Instant};

use bellman_core::analysis::{
    f_kernel_suite, ode_suite, sharp_constant_cp, sharp_constant_exp, sharp_constant_tail, supersolution_negative_control,
    supersolution_suite, verify_embedding, verify_monotone_c, VerificationReport,
};
use bellman_core::geometry::admissible_split;
use bellman_core::martingale::{
    extremize_parabola_chain, extremize_roof_indicator, extremize_scaling_chain, extremize_two_point, random_tree,
};
use bellman_core::roof::{psi, roof_b};
use bellman_core::{MartingaleTree, Point2, State3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn all_pass(reports: &[VerificationReport]) -> Outcome {
    let summary: Vec<String> = reports
        .iter()
        .map(|r| format!("{}={:.3e}", r.suite, r.worst_violation))
        .collect();
    check(reports.iter().all(|r| r.passed), summary.join(" "))
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    match (out, limit) {
        (Ok(m), Some(l)) if took > l => Err(format!("{m} but took {took:.2?} > {l:?}")),
        (Ok(m), _) => Ok(format!("{m} [{took:.2?}]")),
        (Err(m), _) => Err(format!("{m} [{took:.2?}]")),
    }
}

fn c1_cp() -> Outcome {
    let mut msgs = vec![];
    for p in [1.0, 1.5, 2.0] {
        let r = timed(Some(Duration::from_secs(5)), || {
            let c = sharp_constant_cp(p, 2001).map_err(|e| e.to_string())?;
            check((c - 1.0).abs() <= 1e-6, format!("c_{p} = {c:.10}"))
        })?;
        msgs.push(r);
    }
    Ok(msgs.join(", "))
}

fn c2_exp() -> Outcome {
    let mut msgs = vec![];
    for eps in [0.1f64, 0.5, 0.9] {
        let r = timed(Some(Duration::from_secs(5)), || {
            let c = sharp_constant_exp(eps).map_err(|e| e.to_string())?;
            let want = (-eps).exp() / (1.0 - eps);
            check((c - want).abs() <= 1e-7, format!("C({eps}) = {c:.10} vs {want:.10}"))
        })?;
        msgs.push(r);
    }
    Ok(msgs.join(", "))
}

fn c3_tail() -> Outcome {
    timed(Some(Duration::from_secs(60)), || {
        let (c, at) = sharp_constant_tail(2001);
        let ok = (c - E / 2.0).abs() <= 1e-6 && (at.x + 1.0).abs() <= 1e-3 && (at.y - 2.0).abs() <= 1e-3;
        check(ok, format!("{c:.9} at ({:.6}, {:.6})", at.x, at.y))
    })
}

fn c4_roof() -> Outcome {
    let want = 1.0 - (-FRAC_PI_4).exp() / (2.0 * SQRT_2);
    let mut worst_axis = 0.0f64;
    for k in 0..=1000 {
        let y = if k == 0 { 1e-12 } else { k as f64 / 1000.0 };
        let v = roof_b(Point2::new(0.0, y)).map_err(|e| e.to_string())?;
        worst_axis = worst_axis.max((v - want).abs());
    }
    // On the roof the strip width is √(y − x²), so the interfaces sit at
    // x = ±ε: D1|D2 on the right, D2|D3|D4 on the left.
    let mut worst_jump = 0.0f64;
    let n = 5000;
    for k in 1..=n {
        let eps = k as f64 / n as f64;
        for x0 in [eps, -eps] {
            let at = |x: f64| roof_b(Point2::new(x, x * x + eps * eps));
            let d = 1e-11 * eps;
            let (l, m, r) = (at(x0 - d), at(x0), at(x0 + d));
            let (l, m, r) = (l.map_err(|e| e.to_string())?, m.map_err(|e| e.to_string())?, r.map_err(|e| e.to_string())?);
            worst_jump = worst_jump.max((l - m).abs()).max((r - m).abs());
        }
    }
    check(
        worst_axis <= 1e-10 && worst_jump <= 1e-9,
        format!("axis error {worst_axis:.2e}, interface jump {worst_jump:.2e} over {} points", 2 * n),
    )
}

fn c5_parabola() -> Outcome {
    let f = |t: f64| (0.5 * t).exp();
    let want = (-0.5f64).exp() / 0.5;
    let s0 = State3::new(0.0, 1.0, 0.0);
    let gap = |n: usize| -> Result<f64, String> {
        let t = extremize_parabola_chain(s0, 20.0, n).map_err(|e| e.to_string())?;
        Ok(want - t.expectation(f))
    };
    let (g1, g2) = (gap(10_000)?, gap(20_000)?);
    let ratio = g2 / g1;
    check(
        g1.abs() <= 1e-3 && (0.4..=0.6).contains(&ratio),
        format!("gap {g1:.3e} at N=1e4, {g2:.3e} at N=2e4, ratio {ratio:.3}"),
    )
}

fn c6_roof_chain() -> Outcome {
    let mut msgs = vec![];
    let mut ok = true;
    for v0 in [-1.0, -0.5, 0.0, 0.5] {
        let t = extremize_roof_indicator(v0, 1.0, 4000).map_err(|e| e.to_string())?;
        let e = t.expectation(|x| if x >= 0.0 { 1.0 } else { 0.0 });
        let bound = roof_b(Point2::new(v0, v0 * v0 + 1.0)).map_err(|e| e.to_string())?;
        let below = psi(v0) - e;
        ok &= (0.0..=0.01).contains(&below) && e <= bound + 1e-9;
        msgs.push(format!("v0={v0}: {below:.2e} below"));
    }
    check(ok, msgs.join(", "))
}

fn c7_supersolution() -> Outcome {
    let reports = supersolution_suite(100_000, SEED).map_err(|e| e.to_string())?;
    let main = all_pass(&reports);
    let control = supersolution_negative_control(100_000, SEED);
    match main {
        Ok(m) if !control.passed => Ok(format!("{m}; control rejected at {:.3e}", control.worst_violation)),
        Ok(m) => Err(format!("{m}; negative control was not rejected")),
        Err(m) => Err(m),
    }
}

fn c8_monotone() -> Outcome {
    all_pass(&verify_monotone_c(10_000, SEED))
}

fn c9_f_kernel() -> Outcome {
    let reports = f_kernel_suite(400);
    all_pass(&reports)
}

fn c10_ode() -> Outcome {
    all_pass(&ode_suite(1000, SEED))
}

fn c11_embedding() -> Outcome {
    all_pass(&verify_embedding(100, SEED))
}

fn exact(tree: &MartingaleTree) -> Result<f64, String> {
    tree.validate().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..tree.len() {
        if let Some(e) = tree.split_event(i) {
            if !admissible_split(&e) {
                return Err(format!("node {i} is not an admissible split"));
            }
            worst = worst.max(e.residual());
        }
    }
    let r = tree.root();
    let dx = (tree.expectation(|t| t) - r.x).abs();
    let dy = (tree.expectation(|t| t * t) - r.y).abs();
    if dx > 1e-10 || dy > 1e-10 {
        return Err(format!("moments off by ({dx:.2e}, {dy:.2e})"));
    }
    Ok(worst)
}

fn c12_exactness() -> Outcome {
    let mut trees = vec![
        extremize_two_point(State3::new(0.3, 0.5, 0.2)),
        extremize_parabola_chain(State3::new(0.0, 1.0, 0.0), 20.0, 10_000),
        extremize_parabola_chain(State3::new(0.5, 0.6, 0.3), -1.0, 500),
        extremize_scaling_chain(State3::new(-0.495, 0.99, 0.0), Point2::new(-0.99, 1.98), 0.0, 5000),
        extremize_roof_indicator(0.0, 1.0, 4000),
        extremize_roof_indicator(0.3, 0.7, 1000),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    trees.extend((0..100).map(|_| random_tree(&mut rng, 5, 4)));
    let mut worst = 0.0f64;
    for t in &trees {
        worst = worst.max(exact(t)?);
    }
    check(worst <= 1e-12, format!("{} trees, worst split residual {worst:.2e}", trees.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("c_p = 1 for p in {1, 1.5, 2}", c1_cp),
        ("exponential constant C(eps)", c2_exp),
        ("tail constant e/2 at (-1, 2)", c3_tail),
        ("roof values and interface continuity", c4_roof),
        ("parabola chain converges for exp", c5_parabola),
        ("roof chain converges for the indicator", c6_roof_chain),
        ("supersolution suites and negative control", c7_supersolution),
        ("G_R, G_L nondecreasing in c", c8_monotone),
        ("F-kernel nonpositive", c9_f_kernel),
        ("ODE and closed form agree", c10_ode),
        ("embedding into BMO", c11_embedding),
        ("tree exactness", c12_exactness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match timed(None, f) {
            Ok(m) => println!("PASS {:>2} {name}: {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {m}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
