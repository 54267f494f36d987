//! The `bellman` command-line driver.
//!
//! Every subcommand prints plain text by default and a JSON object with
//! `--json`. `verify` exits 0 exactly when every report passes; the
//! `BELLMAN_SEED` environment variable overrides `--seed`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    f_kernel_suite, ode_suite, sharp_constant_cp, sharp_constant_exp, sharp_constant_tail, supersolution_suite,
    verify_embedding, verify_monotone_c, verify_tangent_plane, verify_weak_jn_c1, VerificationReport,
};
use crate::error::{Error, Result};
use crate::geometry::{Point2, State3};
use crate::martingale::{
    extremize_parabola_chain, extremize_roof_indicator, extremize_scaling_chain, extremize_two_point, MartingaleTree,
};
use crate::payoff::{make_payoff, PayoffSpec};
use crate::roof::roof_b;
use crate::surface::{composite_b, BellmanSurface};

#[derive(Parser, Debug)]
#[command(name = "bellman", about = "Bellman functions for martingales with bounded square function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate b_eps(x, y) for a payoff.
    Eval {
        #[arg(long)]
        payoff: PayoffSpec,
        #[arg(long)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate B on the roof above (x, y) for the indicator payoff.
    Roof {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long)]
        json: bool,
    },
    /// Build an extremal martingale and report E f, sup S and the gap to the bound.
    Extremize {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value = "indicator")]
        payoff: PayoffSpec,
        /// Start state (two-point, parabola, scaling).
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        x: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        y: f64,
        #[arg(long, default_value_t = 0.0)]
        z: f64,
        /// Chain end (parabola) or target abscissa (scaling).
        #[arg(long, allow_hyphen_values = true)]
        target_x: Option<f64>,
        /// Target second moment (scaling).
        #[arg(long, allow_hyphen_values = true)]
        target_y: Option<f64>,
        /// Anchor abscissa t of the scaling chain.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        anchor: f64,
        /// Roof chain start x/c.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        v0: f64,
        /// Roof chain start scale c.
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        emit_tree: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run a verification suite; exit status 0 iff it passes.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the reports to this file as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compute a sharp constant: cp:P, exp:EPS or tail.
    Constants {
        #[arg(long)]
        which: String,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long)]
        json: bool,
    },
    /// Write x,y,value rows over the strip for plotting.
    Export {
        /// A payoff (exp:L, power:P, indicator) or `roof`.
        #[arg(long)]
        surface: String,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
        x_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
        x_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    TwoPoint,
    Parabola,
    Scaling,
    Roof,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Supersolution,
    MonotoneC,
    FKernel,
    Embedding,
    OdeResidual,
    TangentPlane,
    WeakJn,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with(argv, &mut out, &mut err)
}

/// As [`run`], writing to the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn emit(out: &mut dyn Write, json: bool, text: String, value: serde_json::Value) -> Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    } else {
        writeln!(out, "{text}")?;
    }
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Eval { payoff, eps, x, y, json } => {
            let s = BellmanSurface::new(make_payoff(payoff)?, eps)?;
            let v = s.eval(Point2::new(x, y))?;
            emit(out, json, format!("{v}"), json!({"payoff": payoff.to_string(), "eps": eps, "x": x, "y": y, "value": v}))?;
            Ok(0)
        }
        Command::Roof { x, y, json } => {
            let v = roof_b(Point2::new(x, y))?;
            emit(out, json, format!("{v}"), json!({"x": x, "y": y, "value": v}))?;
            Ok(0)
        }
        Command::Extremize {
            kind,
            payoff,
            x,
            y,
            z,
            target_x,
            target_y,
            anchor,
            v0,
            c0,
            steps,
            emit_tree,
            json,
        } => {
            let f = make_payoff(payoff)?;
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required for this kind")))
            };
            let tree: MartingaleTree = match kind {
                Kind::TwoPoint => extremize_two_point(State3::new(x, y, z))?,
                Kind::Parabola => extremize_parabola_chain(State3::new(x, y, z), need(target_x, "target-x")?, steps)?,
                Kind::Scaling => extremize_scaling_chain(
                    State3::new(x, y, z),
                    Point2::new(need(target_x, "target-x")?, need(target_y, "target-y")?),
                    anchor,
                    steps,
                )?,
                Kind::Roof => extremize_roof_indicator(v0, c0, steps)?,
            };
            tree.validate()?;
            let e = tree.expectation(|t| f.eval(t));
            let s = tree.square_function_sup();
            let root = tree.root();
            let bound = match kind {
                Kind::Roof if f.is_indicator() => roof_b(root.point())?,
                _ => composite_b(&f, root)?,
            };
            if let Some(path) = emit_tree {
                fs::write(path, tree.to_json()?)?;
            }
            let text = format!("E f = {e}\nsup S = {s}\nbound = {bound}\ngap = {}", bound - e);
            let value = json!({
                "kind": format!("{kind:?}"),
                "payoff": payoff.to_string(),
                "root": root,
                "expectation": e,
                "square_function_sup": s,
                "bound": bound,
                "gap": bound - e,
                "nodes": tree.len(),
            });
            emit(out, json, text, value)?;
            Ok(0)
        }
        Command::Verify { suite, samples, seed, json } => {
            let seed = match std::env::var("BELLMAN_SEED") {
                Ok(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("BELLMAN_SEED `{s}` is not an integer")))?,
                Err(_) => seed,
            };
            let reports: Vec<VerificationReport> = match suite {
                Suite::Supersolution => supersolution_suite(samples, seed)?,
                Suite::MonotoneC => verify_monotone_c(samples, seed),
                Suite::FKernel => f_kernel_suite(400),
                Suite::Embedding => verify_embedding(samples.min(10_000), seed),
                Suite::OdeResidual => ode_suite(samples, seed),
                Suite::TangentPlane => vec![verify_tangent_plane(samples, seed)],
                Suite::WeakJn => verify_weak_jn_c1()?,
            };
            for r in &reports {
                writeln!(
                    out,
                    "{} {}: samples={} worst_violation={:e} tolerance={:e}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.samples,
                    r.worst_violation,
                    r.tolerance
                )?;
            }
            if let Some(path) = json {
                fs::write(path, serde_json::to_string_pretty(&reports)?)?;
            }
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
        }
        Command::Constants { which, grid, json } => {
            let which = which.trim();
            if which == "tail" {
                let (c, at) = sharp_constant_tail(grid);
                let text = format!("{c:.6} at ({:.6}, {:.6})", at.x, at.y);
                emit(out, json, text, json!({"which": "tail", "value": c, "argmax": at}))?;
            } else if let Some(p) = which.strip_prefix("cp:") {
                let p: f64 = parse_num(p)?;
                let c = sharp_constant_cp(p, grid.min(4096))?;
                emit(out, json, format!("{c:.10}"), json!({"which": which, "value": c}))?;
            } else if let Some(e) = which.strip_prefix("exp:") {
                let e: f64 = parse_num(e)?;
                let c = sharp_constant_exp(e)?;
                emit(out, json, format!("{c:.10}"), json!({"which": which, "value": c}))?;
            } else {
                return Err(Error::InvalidParameter(format!("unknown constant `{which}`")));
            }
            Ok(0)
        }
        Command::Export { surface, eps, grid, x_min, x_max, out: path } => {
            let n = grid.max(2);
            let eval: Box<dyn Fn(Point2) -> Result<f64>> = if surface.trim() == "roof" {
                Box::new(roof_b)
            } else {
                let s = BellmanSurface::new(make_payoff(surface.parse()?)?, eps)?;
                Box::new(move |p| s.eval(p))
            };
            let width = if surface.trim() == "roof" { 1.0 } else { eps * eps };
            let mut csv = String::from("x,y,value\n");
            for i in 0..n {
                let x = x_min + (x_max - x_min) * i as f64 / (n - 1) as f64;
                for j in 0..n {
                    let y = x * x + width * j as f64 / (n - 1) as f64;
                    let v = eval(Point2::new(x, y))?;
                    csv.push_str(&format!("{x:.16e},{y:.16e},{v:.16e}\n"));
                }
            }
            fs::write(&path, csv)?;
            writeln!(out, "wrote {} rows to {}", n * n, path.display())?;
            Ok(0)
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("`{s}` is not a number")))
}
