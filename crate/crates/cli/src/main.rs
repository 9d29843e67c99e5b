use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use islands_core::harness::{self, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "islands", version, about = "Islands of closed streamlines in perturbed channel flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `out`, else `out/<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent points; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the perturbed steady state and analyse its streamlines.
    Solve,
    /// First-order expansion and remainder at the configured epsilon.
    Expand,
    /// Sweep epsilon and fit island height and remainder scaling laws.
    Sweep,
    /// Random boundary perturbations and how often they produce islands.
    Genericity,
    /// Flat-bottom, flat-flat and two-stagnation configurations.
    AppendixA,
    /// Picard iteration for the remainder, checked against Newton.
    FixedPoint,
    /// Grid convergence of phi against the Couette series solution.
    Oracle,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Solve => ExperimentKind::Solve,
            Command::Expand => ExperimentKind::Expand,
            Command::Sweep => ExperimentKind::Sweep,
            Command::Genericity => ExperimentKind::Genericity,
            Command::AppendixA => ExperimentKind::AppendixA,
            Command::FixedPoint => ExperimentKind::FixedPoint,
            Command::Oracle => ExperimentKind::Oracle,
        }
    }

    fn dir_name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Expand => "expand",
            Command::Sweep => "sweep",
            Command::Genericity => "genericity",
            Command::AppendixA => "appendix-a",
            Command::FixedPoint => "fixed-point",
            Command::Oracle => "oracle",
        }
    }
}

fn load(common: &Common, cmd: Command) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.expect_kind(cmd.kind())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<()> {
    match cmd {
        Command::Solve => {
            let (summary, point) = harness::run_solve(cfg)?;
            harness::write_solve(out, &summary, &point)?;
            let r = &summary.point;
            println!("newton iterations {}, islands {}, max height {}", r.newton_iterations, r.island_count, fmt(r.max_height));
        }
        Command::Expand => {
            let s = harness::run_expand(cfg)?;
            harness::write_expand(out, &s)?;
            println!("eps {} |r|_inf {:.4e} |phi|_inf {:.4e}", s.report.epsilon, s.report.r_max, s.report.phi_max);
        }
        Command::Sweep => {
            let (record, results) = harness::run_sweep(cfg, jobs)?;
            harness::write_sweep(out, &record, &results)?;
            for p in &record.points {
                println!("eps {:<8} ok {:<5} |r|_inf {} height {}", p.epsilon, p.ok, fmt(p.r_max), fmt(p.max_height));
            }
            match &record.height_fit {
                Some(f) => println!("height slope {:.4} (95% CI {:.4} .. {:.4})", f.slope, f.ci_low, f.ci_high),
                None => println!("height slope omitted: fewer than {} successful points", harness::MIN_FIT_POINTS),
            }
            if let Some(f) = &record.remainder_fit {
                println!("remainder slope {:.4} (95% CI {:.4} .. {:.4})", f.slope, f.ci_low, f.ci_high);
            }
        }
        Command::Genericity => {
            let s = harness::run_genericity(cfg, jobs)?;
            std::fs::create_dir_all(out)?;
            harness::write_json(&out.join("summary.json"), &s)?;
            println!(
                "{} of {} generic samples produced islands; complement max trace oscillation {}",
                s.bprime_with_islands,
                s.bprime_members,
                fmt(s.complement_max_relative_oscillation)
            );
        }
        Command::AppendixA => {
            let (summary, fields) = harness::run_appendix_a(cfg, jobs)?;
            for c in &summary.cases {
                println!("{:?}: {}", c.kind, if c.passed { "as expected" } else { "FAILED" });
            }
            harness::write_appendix(out, &summary, &fields)?;
        }
        Command::FixedPoint => {
            let s = harness::run_fixed_point(cfg)?;
            harness::write_fixed_point(out, &s)?;
            println!(
                "contraction factor {:.3e} after {} iterations, gap to Newton {:.3e}",
                s.trace.contraction_factor,
                s.trace.diff_norms.len(),
                s.newton_gap
            );
        }
        Command::Oracle => {
            let s = harness::run_oracle(cfg)?;
            harness::runs::write_oracle(out, &s)?;
            for l in &s.levels {
                println!("{}x{} relative error {:.4e} order {}", l.nx, l.ns, l.relative_error, fmt(l.order));
            }
            println!("lambda1 {:.6} (exact {:.6})", s.lambda1, s.lambda1_exact);
        }
    }
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load(&cli.common, cli.command)?;
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| Path::new("out").join(cli.command.dir_name()));
    run(cli.command, &cfg, &out, cli.common.jobs)?;
    println!("wrote {}", out.display());
    Ok(())
}
