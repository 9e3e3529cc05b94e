use clap::{Args, Parser, Subcommand};
use dnls::battery::{transform_suite, vops_suite};
use dnls::config::SimConfig;
use dnls::experiment::{profile_report, run_experiment, write_report, SUMMARY_FILE};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dnls",
    version,
    about = "Cubic NLS with a repulsive delta potential: runs and checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a configured run and write snapshots, CSV and a summary.
    #[command(allow_negative_numbers = true)]
    Evolve(RunArgs),
    /// Unitarity, round-trip and oracle table for the distorted transform.
    VerifyTransform {
        /// Potential strength; repeat for several (default 0.5, 1, 2).
        #[arg(long)]
        q: Vec<f64>,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 40.0)]
        l: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Oracle agreement, approximant rates and H1 growth of V(t) and its inverse.
    VerifyVops {
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 8.0)]
        l: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract the asymptotic profile from a stored run and fit its residuals.
    ExtractProfile {
        /// Run directory (DNLS_OUT takes precedence).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Extraction time; defaults to the last snapshot.
        #[arg(long)]
        tfinal: Option<f64>,
    },
    /// Write plot_<column>.dat files from a run's CSV.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or "default".
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory (DNLS_OUT takes precedence).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn out_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    std::env::var_os("DNLS_OUT").map(PathBuf::from).or(flag)
}

fn build_config(a: RunArgs) -> dnls::Result<SimConfig> {
    let mut c = match a.config.as_deref() {
        None | Some("default") => SimConfig::default(),
        Some(path) => SimConfig::load(path.as_ref())?,
    };
    c.q = a.q.unwrap_or(c.q);
    c.lambda = a.lambda.unwrap_or(c.lambda);
    c.epsilon = a.epsilon.unwrap_or(c.epsilon);
    c.l = a.l.unwrap_or(c.l);
    c.n = a.n.unwrap_or(c.n);
    c.dt = a.dt.unwrap_or(c.dt);
    c.t_max = a.tmax.unwrap_or(c.t_max);
    c.beta = a.beta.unwrap_or(c.beta);
    c.seed = a.seed.unwrap_or(c.seed);
    if let Some(d) = out_dir(a.out) {
        c.output_dir = d;
    }
    c.validate()?;
    Ok(c)
}

fn run(cmd: Cmd) -> dnls::Result<bool> {
    match cmd {
        Cmd::Evolve(a) => {
            let cfg = build_config(a)?;
            let s = run_experiment(&cfg)?;
            println!(
                "run {} ({} snapshots, config {})",
                cfg.output_dir.display(),
                s.snapshots,
                &s.config_hash[..12]
            );
            println!(
                "mass drift {:.3e}  energy drift {:.3e}",
                s.mass_drift, s.energy_drift
            );
            if let Some(d) = s.decay {
                println!(
                    "sqrt(t)|u|_inf: at t=1 {:.4e}  sup {:.4e}  ratio {:.3}",
                    d.at_one, d.sup, d.ratio
                );
            }
            println!(
                "monitors: w_inf {:.3}  w_h1 {:.3}  u_decay {:.3}",
                s.monitors.w_inf, s.monitors.w_h1, s.monitors.u_decay
            );
            for c in &s.ode_checks {
                println!(
                    "ode t={:<8} mismatch {:.3e}  nonlinear {:.3e} (bound {:.3e})",
                    c.t, c.mismatch, c.nonlinear, c.nonlinear_bound
                );
            }
            match (&s.fits, &s.fit_note) {
                (Some(f), _) => println!(
                    "slopes: g_cauchy {:.3}  profile {:.3}  theorem {:.3}",
                    f.g_cauchy.slope, f.profile.slope, f.theorem.slope
                ),
                (None, Some(note)) => println!("fits skipped: {note}"),
                _ => {}
            }
            for v in &s.violations {
                eprintln!("violation: {v}");
            }
            println!("summary in {}", cfg.output_dir.join(SUMMARY_FILE).display());
            Ok(s.passed())
        }
        Cmd::VerifyTransform { q, n, l, seed } => {
            let qs = if q.is_empty() { vec![0.5, 1.0, 2.0] } else { q };
            let r = transform_suite(l, n, &qs, seed)?;
            print!("{}", r.render());
            let f = r.failures();
            for m in &f {
                eprintln!("FAIL {m}");
            }
            Ok(f.is_empty())
        }
        Cmd::VerifyVops { q, n, l, seed } => {
            let r = vops_suite(q, l, n, seed)?;
            print!("{}", r.render());
            let f = r.failures();
            for m in &f {
                eprintln!("FAIL {m}");
            }
            Ok(f.is_empty())
        }
        Cmd::ExtractProfile { out, tfinal } => {
            let dir = out_dir(out).unwrap_or_else(|| SimConfig::default().output_dir);
            let r = profile_report(&dir, tfinal)?;
            let text =
                serde_json::to_string_pretty(&r).map_err(|e| dnls::Error::Format(e.to_string()))?;
            println!("{text}");
            Ok(true)
        }
        Cmd::Report { out } => {
            let dir = out_dir(out).unwrap_or_else(|| SimConfig::default().output_dir);
            for p in write_report(&dir)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
