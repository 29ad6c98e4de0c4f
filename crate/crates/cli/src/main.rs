//! `optimshare`: profile a dataset, run a release, or inspect a report.
//!
//! Exit codes: 0 released (or command succeeded), 1 internal error,
//! 2 usage or configuration error, 3 no instance met the threshold.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optimshare_core::pipeline::{
    self, write_grid_csv, write_instances_csv, write_profile_artifacts, write_release_artifacts, ReleaseReport,
    RunConfig, RunStatus,
};
use optimshare_core::fis::write_surface_csv;
use optimshare_core::synth::SynthRegistry;
use optimshare_core::tabular::{load_csv, CsvOptions};
use optimshare_core::Error;

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_REJECTED: u8 = 3;

#[derive(Parser)]
#[command(name = "optimshare", version, about = "Partially perturbed tabular data release")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Triage and profile a dataset; writes csf.csv, pif.json and refinement.json.
    Profile(RunArgs),
    /// Run the full pipeline; writes released.csv, report.json and CSV exports.
    Release(RunArgs),
    /// Print one view of a stored report as CSV.
    Inspect {
        report: PathBuf,
        #[arg(long, value_enum)]
        view: View,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum View {
    Grid,
    Instances,
    Surface,
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV with a header row.
    dataset: PathBuf,
    /// Config file, flat `key = value` lines or JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated quasi-identifier columns.
    #[arg(long)]
    gq: Option<String>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `$OPTIM_DATA_DIR/<dataset stem>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "epsilon-threshold")]
    epsilon_threshold: Option<f64>,
    #[arg(long)]
    tn: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    ts: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "e-threshold")]
    e_threshold: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `kl_generic` or `classification:gaussian_nb`.
    #[arg(long)]
    app: Option<String>,
    #[arg(long, env = "OPTIM_DATA_DIR", hide_env_values = true)]
    data_dir: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::UnknownColumn(_) | Error::UnknownSynthesizer(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl RunArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut put = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k.to_string(), val));
            }
        };
        put("gq", self.gq.clone());
        put("label", self.label.clone());
        put("seed", self.seed.map(|s| s.to_string()));
        put("t_eps", self.epsilon_threshold.map(|x| x.to_string()));
        put("tn", self.tn.map(|x| x.to_string()));
        put("t", self.t.map(|x| x.to_string()));
        put("ts", self.ts.map(|x| x.to_string()));
        put("c", self.c.map(|x| x.to_string()));
        put("e_t", self.e_threshold.map(|x| x.to_string()));
        put("alpha", self.alpha.map(|x| x.to_string()));
        put("app", self.app.clone());
        v
    }

    fn config(&self) -> Result<RunConfig, Failure> {
        let base = match &self.config {
            Some(p) => {
                if !p.is_file() {
                    return Err(Failure::Usage(format!("config file {} not found", p.display())));
                }
                RunConfig::load(p)?
            }
            None => RunConfig::default(),
        };
        Ok(base.with_overrides(&self.overrides())?)
    }

    fn out_dir(&self) -> PathBuf {
        if let Some(o) = &self.out {
            return o.clone();
        }
        let stem = self.dataset.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
        self.data_dir.clone().unwrap_or_else(|| PathBuf::from("optimshare-out")).join(stem)
    }

    fn load(&self) -> Result<optimshare_core::tabular::Dataset, Failure> {
        if !self.dataset.is_file() {
            return Err(Failure::Usage(format!("dataset {} not found", self.dataset.display())));
        }
        Ok(load_csv(&self.dataset, &CsvOptions::default())?)
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn cmd_profile(args: &RunArgs) -> Result<u8, Failure> {
    let config = args.config()?;
    let dataset = args.load()?;
    let profile = pipeline::profile(&dataset, &config)?;
    let written = write_profile_artifacts(&profile, &args.out_dir())?;
    print_written(&written);
    Ok(0)
}

fn cmd_release(args: &RunArgs) -> Result<u8, Failure> {
    let config = args.config()?;
    let dataset = args.load()?;
    let outcome = pipeline::run(&dataset, &config, &SynthRegistry::default())?;
    let written = write_release_artifacts(&outcome, &args.out_dir())?;
    print_written(&written);
    let r = &outcome.report;
    if let Some(s) = &r.summary {
        println!(
            "instances {}  mean utility {:.4}  mean effectiveness {:.4}",
            s.instance_count, s.mean_utility, s.mean_effectiveness
        );
    }
    Ok(match &r.status {
        RunStatus::Released => {
            let id = r.released_id().expect("released run has a selection");
            println!("released instance {id}");
            0
        }
        RunStatus::Rejected => {
            eprintln!("no instance reached effectiveness {}", r.config.e_t);
            EXIT_REJECTED
        }
        RunStatus::Failed { stage, message } => {
            eprintln!("run failed during {stage}: {message}");
            EXIT_INTERNAL
        }
    })
}

fn cmd_inspect(path: &Path, view: View) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let report = ReleaseReport::from_json(&text)?;
    let out = std::io::stdout().lock();
    match view {
        View::Grid => write_grid_csv(&report, out)?,
        View::Instances => write_instances_csv(&report, out)?,
        View::Surface => write_surface_csv(&report.surface, out)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Profile(a) => cmd_profile(a),
        Command::Release(a) => cmd_release(a),
        Command::Inspect { report, view } => cmd_inspect(report, *view),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
