use clap::{Args, Parser, Subcommand};
use nhqc_core::harness::{
    self, plot, GateSpec, HarnessError, InitialState, RunConfig, SweepParameter, SweepSpec,
};
use nhqc_core::protocol::Protocol;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "nhqc", about = "Holonomic gate simulation and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one protocol and write the trajectory CSV
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Process tomography: χ matrix JSON plus a histogram CSV
    Tomo {
        #[command(flatten)]
        common: CommonArgs,
        /// Histogram CSV path (JSON goes to --out or stdout)
        #[arg(long)]
        hist_out: Option<PathBuf>,
    },
    /// Sweep a noise parameter over a grid for all protocols
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// kappa_khz | delta | delta_omega
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Render a trajectory or sweep CSV as an SVG line chart
    Plot {
        /// traj | sweep
        #[arg(long)]
        kind: String,
        /// Input CSV path
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print unit conversions and schedule durations
    Selftest {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file mirroring the run-config field names
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated protocol list (NHQC, BNHQC, CBNHQC)
    #[arg(long)]
    protocol: Option<String>,
    /// Named preset (sqrtx, tgate) or explicit "theta,phi,gamma" in radians
    #[arg(long)]
    gate: Option<String>,
    #[arg(long)]
    rabi_khz: Option<f64>,
    #[arg(long)]
    kappa_khz: Option<f64>,
    /// Detuning error in units of Ω
    #[arg(long)]
    delta: Option<f64>,
    /// Fractional Rabi error
    #[arg(long)]
    delta_omega: Option<f64>,
    /// common | differential
    #[arg(long)]
    detuning_mode: Option<String>,
    /// 0 = exact expectation values
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// g | e | gx | gy
    #[arg(long)]
    initial_state: Option<String>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn build_config(&self) -> Result<RunConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    HarnessError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                    HarnessError::Config(format!("bad config {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(list) = &self.protocol {
            cfg.protocols = list
                .split(',')
                .map(|s| Protocol::from_str(s.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if let Some(gate) = &self.gate {
            cfg.gate = GateSpec::parse(gate)?;
        }
        if let Some(v) = self.rabi_khz {
            cfg.rabi_khz = v;
        }
        if let Some(v) = self.kappa_khz {
            cfg.kappa_khz = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.delta_omega {
            cfg.delta_omega = v;
        }
        if let Some(mode) = &self.detuning_mode {
            cfg.detuning_mode = mode
                .parse()
                .map_err(|e: String| HarnessError::Config(e))?;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.steps {
            cfg.steps_per_segment = v;
        }
        if let Some(state) = &self.initial_state {
            cfg.initial_state = InitialState::parse(state)?;
        }
        Ok(cfg)
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| HarnessError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Evolve { common } => {
            let cfg = common.build_config()?;
            let csv = harness::run_evolve(&cfg)?;
            write_output(&common.out, &csv)
        }
        Command::Tomo { common, hist_out } => {
            let cfg = common.build_config()?;
            let (doc, hist) = harness::run_tomo(&cfg)?;
            if let Some(path) = &hist_out {
                write_output(&Some(path.clone()), &hist)?;
            }
            let mut json = serde_json::to_string_pretty(&doc)
                .map_err(|e| HarnessError::Numerical(e.to_string()))?;
            json.push('\n');
            write_output(&common.out, &json)
        }
        Command::Sweep {
            common,
            param,
            from,
            to,
            points,
        } => {
            let cfg = common.build_config()?;
            let parameter = match &param {
                Some(name) => SweepParameter::parse(name)?,
                None => SweepParameter::Kappa,
            };
            let mut spec = SweepSpec::default_for(parameter);
            if let Some(v) = from {
                spec.from = v;
            }
            if let Some(v) = to {
                spec.to = v;
            }
            if let Some(v) = points {
                spec.points = v;
            }
            spec.validate()?;
            let rows = harness::run_sweep_rows(&cfg, &spec)?;
            write_output(&common.out, &harness::sweep_rows_to_csv(&rows))?;
            let asym = harness::asymmetry_report(&rows);
            if asym.lines().count() > 1 {
                eprint!("{asym}");
            }
            Ok(())
        }
        Command::Plot { kind, csv, out } => {
            let kind = plot::PlotKind::parse(&kind)?;
            let text = std::fs::read_to_string(&csv)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", csv.display())))?;
            let svg = plot::render(&text, kind)?;
            write_output(&out, &svg)
        }
        Command::Selftest { common } => {
            let cfg = common.build_config()?;
            write_output(&common.out, &harness::selftest_report(&cfg))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ HarnessError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ HarnessError::Numerical(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
