use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use stark_core::config::{FieldInput, OutputFormat, ResolvedConfig, RunConfig, TimeInput};
use stark_core::dynamics::PhaseKind;
use stark_core::packet::{build_packet, Truncation};
use stark_core::report::{
    histogram_csv, run_interferogram, timescales_report, write_file, write_interferogram_outputs,
};
use stark_core::revivals::decomposition_report;
use stark_core::stark::Ratio;
use stark_core::units::UnitSystem;
use stark_core::verify::run_checks;
use stark_core::{Error, Result};

const EXIT_VERIFY_FAILED: u8 = 3;

/// Stark wave-packet revivals: time scales, interferograms and
/// fractional-revival decompositions.
#[derive(Debug, Parser)]
#[command(name = "stark", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical periods, revival times, their ratios and the ionization threshold.
    Timescales {
        #[command(flatten)]
        run: RunArgs,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Sample |A(t)|² and write data, resolved config, metadata and a gnuplot script.
    Interferogram {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Decompose the packet at t = (p1/q1) t_rev^(n) into shifted classical waves.
    Revival {
        #[command(flatten)]
        run: RunArgs,
        /// Fraction p1/q1 of t_rev^(n), in lowest terms.
        #[arg(long)]
        frac: String,
    },
    /// Export the packet's |c_nk|² histogram as CSV (n,k,weight).
    Packet {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the built-in acceptance checks; exit status 3 if any fails.
    Verify {
        /// Override the atomic unit of field (V/cm) for fault injection.
        #[arg(long, hide = true)]
        field_unit: Option<f64>,
        /// Override the atomic unit of time (s) for fault injection.
        #[arg(long, hide = true)]
        time_unit: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file; flags below override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    nbar: Option<u32>,
    /// Field with unit, e.g. 645.8V/cm or 1.2559e-7au.
    #[arg(long, group = "field_source")]
    field: Option<String>,
    /// Target T_cl^(n)/T_cl^(k), e.g. 2/13.
    #[arg(long, group = "field_source")]
    classical_ratio: Option<String>,
    /// Target t_rev^(n)/t_rev^(nk), e.g. 1/12.
    #[arg(long, group = "field_source")]
    revival_ratio: Option<String>,
    /// exact or taylor2.
    #[arg(long)]
    phase_model: Option<String>,
    /// Comma-separated manifolds, e.g. 23,24,25.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    #[arg(long)]
    k_sigma: Option<f64>,
    /// half_manifold or full.
    #[arg(long)]
    truncation: Option<String>,
    /// Grid start with unit, e.g. 168ps.
    #[arg(long)]
    t_start: Option<String>,
    /// Grid end with unit, e.g. 410ps.
    #[arg(long)]
    t_max: Option<String>,
    /// Grid step with unit; defaults to T_cl^(n)/50.
    #[arg(long)]
    dt: Option<String>,
    /// Output file; for interferogram, the stem of the files written.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(n) = self.nbar {
            cfg.nbar = Some(n);
        }
        if let Some(f) = &self.field {
            cfg.set_field(f.parse::<FieldInput>()?);
        }
        if let Some(r) = &self.classical_ratio {
            cfg.set_classical_ratio(r.parse::<Ratio>()?);
        }
        if let Some(r) = &self.revival_ratio {
            cfg.set_revival_ratio(r.parse::<Ratio>()?);
        }
        if let Some(m) = &self.phase_model {
            cfg.phase_model = Some(m.parse::<PhaseKind>()?);
        }
        if let Some(list) = &self.n_list {
            cfg.packet.n_list = Some(list.clone());
        }
        if let Some(s) = self.k_sigma {
            cfg.packet.k_sigma = Some(s);
        }
        if let Some(t) = &self.truncation {
            cfg.packet.truncation = Some(match t.as_str() {
                "half_manifold" => Truncation::HalfManifold,
                "full" => Truncation::Full,
                other => {
                    return Err(Error::Config(format!(
                        "unknown truncation {other:?} (half_manifold|full; use a config file for energy_window)"
                    )))
                }
            });
        }
        let time = |s: &Option<String>| s.as_deref().map(str::parse::<TimeInput>).transpose();
        if let Some(t) = time(&self.t_start)? {
            cfg.grid.t_start = Some(t);
        }
        if let Some(t) = time(&self.t_max)? {
            cfg.grid.t_max = Some(t);
        }
        if let Some(t) = time(&self.dt)? {
            cfg.grid.dt = Some(t);
        }
        if let Some(p) = &self.output {
            cfg.output.path = Some(p.clone());
        }
        if let Some(f) = &self.format {
            cfg.output.format = Some(f.parse::<OutputFormat>()?);
        }
        Ok(cfg)
    }

    fn resolve(&self) -> Result<ResolvedConfig> {
        self.to_config()?.resolve()
    }
}

/// Writes `text` to `--output`, or stdout when it is absent. The config file's
/// output path is an interferogram stem and is not used here.
fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            write_file(path, text)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Error::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Timescales { run, json } => {
            let cfg = run.resolve()?;
            let report = timescales_report(&cfg)?;
            if json {
                print!("{}", to_json(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Interferogram { run } => {
            let cfg = run.resolve()?;
            let stem = cfg
                .output_path
                .clone()
                .ok_or_else(|| Error::Config("an output path is required (--output or [output] path)".into()))?;
            let (_, ig) = run_interferogram(&cfg)?;
            let files = write_interferogram_outputs(&cfg, &ig, &stem)?;
            println!("wrote {} ({} samples)", files.data.display(), ig.len());
            println!("wrote {}", files.resolved_config.display());
            println!("wrote {}", files.metadata.display());
            println!("wrote {}", files.plot_script.display());
        }
        Command::Revival { run, frac } => {
            let cfg = run.resolve()?;
            let (p1, q1) = frac
                .split_once('/')
                .and_then(|(p, q)| Some((p.trim().parse::<u64>().ok()?, q.trim().parse::<u64>().ok()?)))
                .ok_or_else(|| Error::Config(format!("expected --frac p1/q1, got {frac:?}")))?;
            let wp = build_packet(&cfg.packet)?;
            let (_, report) = decomposition_report(&wp, p1, q1)?;
            emit(run.output.as_deref(), &to_json(&report)?)?;
        }
        Command::Packet { run } => {
            let cfg = run.resolve()?;
            let wp = build_packet(&cfg.packet)?;
            emit(run.output.as_deref(), &histogram_csv(&wp))?;
        }
        Command::Verify { field_unit, time_unit } => {
            let units = UnitSystem {
                field_v_per_cm: field_unit.unwrap_or(UnitSystem::CODATA.field_v_per_cm),
                time_seconds: time_unit.unwrap_or(UnitSystem::CODATA.time_seconds),
            };
            let checks = run_checks(&units);
            for c in &checks {
                println!("{}", c.line());
            }
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
            if failed.is_empty() {
                println!("all {} checks passed", checks.len());
            } else {
                println!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "));
                return Ok(ExitCode::from(EXIT_VERIFY_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    if std::env::args_os().len() <= 1 {
        let _ = Cli::command().print_help();
        return ExitCode::SUCCESS;
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
