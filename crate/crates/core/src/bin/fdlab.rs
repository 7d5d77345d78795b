use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fdlab::harness::acceptance::{run_acceptance, AcceptanceOptions};
use fdlab::harness::experiments::{compare_cases, write_cases, write_curves};
use fdlab::harness::simulate::simulate;
use fdlab::harness::spectrum::{spectrum_rows, write_spectrum, CERTIFY_TOLERANCE};
use fdlab::harness::ExperimentConfig;
use fdlab::spectral::RayleighConfig;
use fdlab::Error;

#[derive(Parser)]
#[command(name = "fdlab", version, about = "Entropy decay rates of the fast diffusion equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fdlab-out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and Rayleigh-certified spectrum tables.
    Spectrum,
    /// One run with reports, checkpoints and a manifest.
    Simulate,
    /// Rate curves over m and the simulated three-case comparison.
    Rates,
    /// The acceptance suite.
    Verify,
}

enum Outcome {
    Ok,
    Failed(String),
}

fn load(cli: &Cli) -> fdlab::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn spectrum(cfg: &ExperimentConfig, out: &Path) -> fdlab::Result<Outcome> {
    cfg.validate_spectrum()?;
    let s = &cfg.spectrum;
    let rayleigh = RayleighConfig {
        nodes: s.nodes,
        ..RayleighConfig::default()
    };
    let rows = spectrum_rows(s.d, &s.alphas, s.l_max, s.k_max, s.certify.then_some(&rayleigh))?;
    let path = out.join("spectrum.csv");
    write_spectrum(&path, &rows)?;
    println!("{} rows written to {}", rows.len(), path.display());
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.certified && !r.within(CERTIFY_TOLERANCE))
        .map(|r| format!("alpha={} (l,k)=({},{})", r.alpha, r.l, r.k))
        .collect();
    Ok(if bad.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Failed(format!("certified rows off by more than 1%: {}", bad.join(", ")))
    })
}

fn simulate_cmd(cfg: &ExperimentConfig, out: &Path) -> fdlab::Result<Outcome> {
    let result = simulate(cfg, out)?;
    let s = &result.summary;
    println!(
        "{} steps to t = {}, F = {:.3e}, sigma = {:.6}, mass drift {:.1e}",
        s.steps, s.t_end, s.final_entropy, s.final_sigma, s.mass_drift
    );
    match (&s.fit, &s.fit_warning) {
        (Some(f), _) => println!("log F slope {:.4} over t in [{:.2}, {:.2}]", f.slope, f.t_a, f.t_b),
        (None, Some(w)) => eprintln!("warning: {w}"),
        _ => {}
    }
    println!("{} of {} snapshots violate a bound", s.snapshot_failures, s.snapshots_checked);
    println!("run written to {}", out.display());
    Ok(Outcome::Ok)
}

fn rates(cfg: &ExperimentConfig, out: &Path) -> fdlab::Result<Outcome> {
    cfg.validate_rates()?;
    let r = &cfg.rates;
    let report = compare_cases(r.d, &r.m_grid, &r.simulate, r.cells)?;
    write_curves(&out.join("gamma_curves.csv"), &report.curves)?;
    write_cases(&out.join("cases.csv"), &report.cases)?;
    std::fs::write(out.join("comparison.json"), serde_json::to_string_pretty(&report)?)?;
    if r.d != fdlab::harness::experiments::REFERENCE_DIMENSION {
        eprintln!("note: curves for d = {} extend the d = 5 figure data", r.d);
    }
    for c in &report.cases {
        match (&c.fit, &c.warning) {
            (Some(f), _) => println!(
                "m = {}, case {}: slope {:.3} (predicted {:.3})",
                c.m, c.case, f.slope, c.predicted_slope
            ),
            (None, w) => eprintln!("warning: m = {}, case {}: {}", c.m, c.case, w.as_deref().unwrap_or("")),
        }
    }
    println!("{} curve rows written to {}", report.curves.len(), out.display());
    Ok(if report.cases.is_empty() || report.ordering_holds(0.0) {
        Outcome::Ok
    } else {
        Outcome::Failed("case ordering 3 > 2 > 1 violated".into())
    })
}

fn verify(out: &Path) -> fdlab::Result<Outcome> {
    let summary = run_acceptance(&AcceptanceOptions::default());
    for line in summary.lines() {
        println!("{line}");
    }
    std::fs::write(out.join("acceptance.json"), summary.to_json())?;
    Ok(if summary.passed {
        Outcome::Ok
    } else {
        Outcome::Failed(format!("failed: {}", summary.failed.join(", ")))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("config error in `--jobs`: must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool starts once");
    }
    let result = load(&cli).and_then(|cfg| {
        std::fs::create_dir_all(&cli.out)?;
        match cli.command {
            Command::Spectrum => spectrum(&cfg, &cli.out),
            Command::Simulate => simulate_cmd(&cfg, &cli.out),
            Command::Rates => rates(&cfg, &cli.out),
            Command::Verify => verify(&cli.out),
        }
    });
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
