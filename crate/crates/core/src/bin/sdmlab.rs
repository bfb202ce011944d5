use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sdmlab::dataset::frequencies;
use sdmlab::experiments::{CorruptionMode, EmptySpherePolicy};
use sdmlab::report::{render_csv, render_svg, skipped_listing, ReportKind};
use sdmlab::results::{ExperimentKind, ResultDocument};
use sdmlab::run::{self, exit, OutputFormat, RunError, RunManifest, RunOutput, RunSettings};
use sdmlab::sdm::{RadiusPolicy, SdmConfig, TieBreak};

#[derive(Parser)]
#[command(
    name = "sdmlab",
    version,
    about = "Sparse distributed memory recoverability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-parameter frequencies of a dataset as CSV.
    Frequencies {
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment and write result files plus a manifest.
    Run {
        #[command(subcommand)]
        kind: RunKind,
    },
    /// Plot-ready CSV (and optional SVG) from a result file.
    Report {
        kind: ReportArg,
        result: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-run the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum RunKind {
    /// Every language written, every parameter probed.
    Corruption {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Balanced subsets per parameter.
    Normalized {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 95)]
        size: usize,
    },
    /// Synthetic data with matching per-parameter frequencies.
    Baseline {
        #[command(flatten)]
        common: CommonArgs,
        /// Synthetic rows per trial [default: dataset row count]
        #[arg(long)]
        rows: Option<usize>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset (CSV or JSON). Optional for baseline, which then uses the
    /// reference frequency table.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, env = "SDMLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = SdmConfig::DEFAULT_HARD_LOCATIONS)]
    hard_locations: usize,
    /// fixed:R, quarter-median or hl-median+D
    #[arg(long, default_value = "quarter-median")]
    radius: RadiusPolicy,
    #[arg(long, value_enum, default_value_t = TieArg::Zero)]
    tie_break: TieArg,
    /// Clamp counters to ±B.
    #[arg(long)]
    counter_bound: Option<u32>,
    /// single, multi:K or write:K
    #[arg(long, default_value = "single")]
    mode: CorruptionMode,
    #[arg(long, value_enum, default_value_t = EmptyArg::Skip)]
    on_empty: EmptyArg,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Zero,
    One,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmptyArg {
    Skip,
    Abort,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Scatter,
    Bars,
}

impl CommonArgs {
    fn settings(self, kind: ExperimentKind) -> (RunSettings, PathBuf) {
        let settings = RunSettings {
            kind,
            data: self.data,
            seed: self.seed,
            trials: self.trials,
            hard_locations: self.hard_locations,
            radius: self.radius,
            tie_break: match self.tie_break {
                TieArg::Zero => TieBreak::Zero,
                TieArg::One => TieBreak::One,
                TieArg::Random => TieBreak::SeededRandom,
            },
            counter_bound: self.counter_bound,
            mode: self.mode,
            size: RunSettings::new(kind).size,
            rows: None,
            on_empty: match self.on_empty {
                EmptyArg::Skip => EmptySpherePolicy::Skip,
                EmptyArg::Abort => EmptySpherePolicy::Abort,
            },
            format: match self.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Both => OutputFormat::Both,
            },
        };
        (settings, self.out)
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), RunError> {
    match out {
        Some(path) => run::write_atomic(path, contents)
            .map_err(|e| RunError::Abort(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn finish_run(output: RunOutput, out_dir: &Path) -> Result<(), RunError> {
    let written = run::write_outputs(&output, out_dir)?;
    let skipped = skipped_listing(&output.document);
    if !skipped.is_empty() {
        eprint!("skipped parameters:\n{skipped}");
    }
    let meta = &output.document.metadata;
    if meta.skipped_probes > 0 {
        eprintln!(
            "warning: {} of {} probes hit an empty access sphere and were excluded",
            meta.skipped_probes, meta.total_probes
        );
    }
    match (&output.document.stats, &output.document.stats_note) {
        (Some(s), _) => eprintln!(
            "spearman(score, |prevalence - 0.5|) = {:.4} over {} parameters",
            s.spearman_balance, s.points
        ),
        (None, Some(note)) => eprintln!("no correlation statistics: {note}"),
        (None, None) => {}
    }
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Frequencies { data, out } => {
            let dataset = run::load_dataset(&data)?;
            let table = frequencies(&dataset).map_err(|e| RunError::Data {
                path: data.display().to_string(),
                message: e.to_string(),
            })?;
            emit(out.as_deref(), &table.to_csv())
        }
        Command::Run { kind } => {
            let (settings, out_dir) = match kind {
                RunKind::Corruption { common } => common.settings(ExperimentKind::Corruption),
                RunKind::Normalized { common, size } => {
                    let (mut s, out) = common.settings(ExperimentKind::Normalized);
                    s.size = size;
                    (s, out)
                }
                RunKind::Baseline { common, rows } => {
                    let (mut s, out) = common.settings(ExperimentKind::Baseline);
                    s.rows = rows;
                    (s, out)
                }
            };
            finish_run(run::execute(&settings)?, &out_dir)
        }
        Command::Report { kind, result, out, svg } => {
            let text = std::fs::read_to_string(&result).map_err(|e| RunError::Data {
                path: result.display().to_string(),
                message: e.to_string(),
            })?;
            let doc = ResultDocument::from_json(&text).map_err(|e| RunError::Data {
                path: result.display().to_string(),
                message: e.to_string(),
            })?;
            let kind = match kind {
                ReportArg::Scatter => ReportKind::Scatter,
                ReportArg::Bars => ReportKind::Bars,
            };
            let skipped = skipped_listing(&doc);
            if !skipped.is_empty() {
                eprint!("skipped parameters:\n{skipped}");
            }
            if let Some(path) = svg {
                emit(Some(&path), &render_svg(&doc, kind))?;
            }
            emit(out.as_deref(), &render_csv(&doc, kind))
        }
        Command::Replay { manifest, out } => {
            let text = std::fs::read_to_string(&manifest).map_err(|e| RunError::Data {
                path: manifest.display().to_string(),
                message: e.to_string(),
            })?;
            let m = RunManifest::from_json(&text).map_err(|e| RunError::Data {
                path: manifest.display().to_string(),
                message: e,
            })?;
            finish_run(run::replay(&m)?, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
