use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use curvcert_core::pipeline::{self, exit_code_for, EXIT_USAGE};
use curvcert_core::report::{self, to_json};
use curvcert_core::shadow_flow::trajectory_csv;
use curvcert_core::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "curvcert")]
#[command(about = "Existence certificates for prescribed scalar curvature on S^4")]
#[command(version)]
struct Cli {
    /// JSON run configuration; flags below override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Expression for K in x1..x5
    #[arg(long, global = true)]
    field: Option<String>,

    /// Seed for the multi-start search
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of multi-start points for the critical point search
    #[arg(long, global = true)]
    starts: Option<usize>,

    /// Gradient norm accepted as a critical point
    #[arg(long, global = true)]
    grad_tol: Option<f64>,

    /// Geodesic distance below which two critical points are merged
    #[arg(long, global = true)]
    merge_tol: Option<f64>,

    /// Newton iteration cap per start
    #[arg(long, global = true)]
    max_newton_iters: Option<usize>,

    /// Directory receiving JSON and text reports
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Format written to standard output
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and report the verdict
    Analyze,
    /// Locate and classify the critical points of K
    CriticalPoints,
    /// Interaction matrix of a comma-separated subset of positive-beta points
    Matrix { subset: String },
    /// Counting sums and verdict only
    Certificate,
    /// Bubble constants with their closed forms
    Constants,
    /// Model concentration dynamics started at a subset
    Flow { subset: String },
}

impl Cli {
    fn run_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match (&self.config, &self.field) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(f)) => RunConfig::new(f.clone()),
            (None, None) => match self.command {
                Command::Constants => RunConfig::new("1"),
                _ => anyhow::bail!("either --config or --field is required"),
            },
        };
        if let Some(f) = &self.field {
            cfg.field = f.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let search = &mut cfg.tolerances.search;
        if let Some(v) = self.starts {
            search.starts = v;
        }
        if let Some(v) = self.grad_tol {
            search.grad_tol = v;
        }
        if let Some(v) = self.merge_tol {
            search.merge_tol = v;
        }
        if let Some(v) = self.max_newton_iters {
            search.max_newton_iters = v;
        }
        Ok(cfg)
    }
}

fn subset_names(s: &str) -> Vec<String> {
    s.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect()
}

struct Emitter<'a> {
    out: Option<&'a Path>,
    format: Format,
}

impl Emitter<'_> {
    fn emit<T: Serialize>(&self, stem: &str, report: &T, text: String) -> anyhow::Result<()> {
        let json = to_json(report);
        if let Some(dir) = self.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(format!("{stem}.json")), &json)?;
            fs::write(dir.join(format!("{stem}.txt")), &text)?;
        }
        match self.format {
            Format::Json => print!("{json}"),
            Format::Text => print!("{text}"),
        }
        Ok(())
    }

    fn file(&self, name: &str, contents: &str) -> anyhow::Result<()> {
        if let Some(dir) = self.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    let cfg = cli.run_config()?;
    let emit = Emitter { out: cli.out.as_deref(), format: cli.format };
    match &cli.command {
        Command::Analyze => {
            let a = pipeline::analyze(&cfg)?;
            let r = report::analysis_report(&a);
            emit.emit("report", &r, report::render_text(&r))?;
            Ok(a.outcome.exit_code())
        }
        Command::Certificate => {
            let a = pipeline::analyze(&cfg)?;
            let r = report::certificate_report(&a);
            emit.emit("certificate", &r, report::render_certificate_text(&r))?;
            Ok(a.outcome.exit_code())
        }
        Command::CriticalPoints => {
            let p = pipeline::prepare(&cfg)?;
            let r = report::critical_points_report(&p);
            emit.emit("critical_points", &r, report::render_critical_points_text(&r))?;
            Ok(if p.h0.pass { 0 } else { pipeline::EXIT_HYPOTHESIS })
        }
        Command::Matrix { subset } => {
            let p = pipeline::prepare(&cfg)?;
            let m = pipeline::subset_matrix(&p, &subset_names(subset))?;
            let r = report::matrix_report(&p, &m);
            emit.emit("matrix", &r, report::render_matrix_text(&r))?;
            Ok(0)
        }
        Command::Constants => {
            let c = pipeline::constants(&cfg)?;
            let r = report::constants_report(&c);
            emit.emit("constants", &r, report::render_constants_text(&r))?;
            Ok(0)
        }
        Command::Flow { subset } => {
            let p = pipeline::prepare(&cfg)?;
            let (members, run) = pipeline::subset_flow(&p, &subset_names(subset))?;
            let r = report::flow_report(&p, &members, &run);
            emit.file("trajectory.csv", &trajectory_csv(&run.trajectory))?;
            emit.emit("flow", &r, report::render_flow_text(&r))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(EXIT_USAGE, exit_code_for);
            ExitCode::from(code as u8)
        }
    }
}
