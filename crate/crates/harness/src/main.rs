use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use machflow_core::besov::{norm, DyadicPartition, NormSpec, Summation};
use machflow_core::snapshot;
use machflow_harness::converge::{run_converge, EpsRow, SeriesPoint};
use machflow_harness::divisor::{run_divisor, DivisorRow, FitRow};
use machflow_harness::emit::{Emitter, Manifest};
use machflow_harness::identities::{run_identities, Check};
use machflow_harness::simulate::{run_simulate, SimRow};
use machflow_harness::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "machflow", version, about = "Low-Mach limit experiments on periodic boxes")]
struct Cli {
    /// TOML configuration (`schema = 1`); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Take the configuration from a run manifest instead.
    #[arg(long, global = true, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set sweep.eps=[0.1,0.05]`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mach-number sweep against the limit systems, with rate fits.
    Converge,
    /// Small-divisor scans and exponent fits.
    Divisor,
    /// Randomised identity checks; exits nonzero if any fails.
    Identities {
        /// Relative perturbation of the density entropy weight.
        #[arg(long)]
        perturb_weight: Option<f64>,
    },
    /// One full-system run at `simulate.eps` with snapshots.
    Simulate,
    /// Evaluate a norm of a snapshot file.
    Norm {
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        /// High-frequency regularity of a hybrid norm (needs --eta).
        #[arg(long, requires = "eta")]
        t: Option<f64>,
        #[arg(long, requires = "t")]
        eta: Option<f64>,
        /// Use the l² (Sobolev) sum instead of the l¹ (Besov) sum.
        #[arg(long)]
        sobolev: bool,
        #[arg(long)]
        homogeneous: bool,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.manifest) {
        (Some(p), _) => ExperimentConfig::load(p, &cli.overrides)?,
        (None, Some(m)) => ExperimentConfig::from_toml_str(&Manifest::load(m)?.config, &cli.overrides)?,
        (None, None) => ExperimentConfig::from_toml_str("schema = 1", &cli.overrides)?,
    };
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Converge => {
            let table = run_converge(&cfg)?;
            let mut e = Emitter::new(&cfg.output)?;
            e.csv("convergence.csv", &EpsRow::COLUMNS, &table.rows)?;
            e.csv("series.csv", &SeriesPoint::COLUMNS, &table.series)?;
            let summary = serde_json::json!({
                "s": table.s,
                "w_fit": table.w_fit,
                "mean_fit": table.mean_fit,
                "z_nonincreasing": table.z_nonincreasing,
                "note": table.note,
                "limit": table.limit,
            });
            e.json("convergence_summary.json", &summary)?;
            e.finish("converge", &cfg)?;
            for r in &table.rows {
                println!("eps = {:<8} W = {:.4e}  Z = {:.4e}  mean gap = {:.4e}", r.eps, r.w, r.z, r.mean_gap);
            }
            match (&table.w_fit, &table.mean_fit) {
                (Some(w), Some(m)) => {
                    println!("W slope {:.3} ± {:.3} (target >= {})", w.slope, w.stderr, w.target);
                    println!("mean-gap slope {:.3} ± {:.3} (target >= {})", m.slope, m.stderr, m.target);
                }
                _ => println!("{}", table.note.as_deref().unwrap_or("fits unavailable")),
            }
            if let Some(z) = table.z_nonincreasing {
                println!("Z nonincreasing: {z}");
            }
            Ok(true)
        }
        Command::Divisor => {
            let s = run_divisor(&cfg)?;
            let mut e = Emitter::new(&cfg.output)?;
            e.csv("divisor.csv", &DivisorRow::COLUMNS, &s.rows)?;
            e.csv("divisor_fits.csv", &FitRow::COLUMNS, &s.fits)?;
            e.finish("divisor", &cfg)?;
            for f in &s.fits {
                println!(
                    "{:<12} {:<5} slope {:.3} ± {:.3} (bound {:.2}) {}",
                    f.aspect_sq,
                    f.order,
                    f.slope,
                    f.stderr,
                    f.bound,
                    if f.pass { "ok" } else { "FAIL" }
                );
            }
            println!("C¹_M <= 2M on a = 1: {}", s.integer_gap_bound);
            Ok(true)
        }
        Command::Identities { perturb_weight } => {
            if let Some(p) = perturb_weight {
                cfg.identities.weight_perturbation = p;
            }
            let r = run_identities(&cfg)?;
            let mut e = Emitter::new(&cfg.output)?;
            e.csv("identities.csv", &Check::COLUMNS, &r.checks)?;
            e.finish("identities", &cfg)?;
            for c in &r.checks {
                println!(
                    "{:<28} {:>4} samples  residual {:.3e}  threshold {:.0e}  {}",
                    c.name,
                    c.samples,
                    c.residual,
                    c.threshold,
                    if c.pass { "ok" } else { "FAIL" }
                );
            }
            Ok(r.all_pass())
        }
        Command::Simulate => {
            let sim = run_simulate(&cfg)?;
            let mut e = Emitter::new(&cfg.output)?;
            e.csv("simulate.csv", &SimRow::COLUMNS, &sim.rows)?;
            for (j, (t, u)) in sim.snapshots.iter().enumerate() {
                let mut buf = Vec::new();
                snapshot::write_snapshot(&mut buf, u)?;
                let p = e.bytes(&format!("snapshots/snap_{j:04}.mfld"), &buf)?;
                println!("t = {t:.6}  {}", p.display());
            }
            e.finish("simulate", &cfg)?;
            Ok(true)
        }
        Command::Norm { snapshot: path, s, t, eta, sobolev, homogeneous } => {
            let u = snapshot::load(&path, None)?;
            let part = DyadicPartition::new(u.lattice().clone());
            let spec = NormSpec {
                summation: if sobolev { Summation::Sobolev } else { Summation::Besov },
                s,
                t,
                eta,
                homogeneous,
            };
            let v = norm(&part, &u, &spec)?;
            println!("{}", v.value);
            if v.dropped_mean {
                eprintln!("note: a nonzero mean was discarded by the homogeneous norm");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
