mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use biaslens::pipeline::PipelineConfig;
use biaslens::synthetic::SyntheticConfig;
use clap::{Parser, Subcommand, ValueEnum};

use commands::WeatSets;
use settings::ConfigArgs;

#[derive(Parser, Debug)]
#[command(name = "biaslens", version, about = "Discover and categorise language biases in comment corpora")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train skip-gram vectors on a corpus.
    Train,
    /// Load a model and print its shape; optionally convert it.
    Load {
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Rank the most biased words toward each target set.
    Rank {
        /// Rank by cosine with the direction between the two centroids.
        #[arg(long)]
        direct: bool,
    },
    /// Cluster the words of a ranking CSV.
    Cluster {
        #[arg(long)]
        ranking: PathBuf,
        /// Which stage seed to use (1 or 2), as in a full run.
        #[arg(long, default_value_t = 1)]
        side: u8,
    },
    /// Label a partition with the semantic lexicon.
    Label {
        #[arg(long)]
        partition: PathBuf,
    },
    /// Join two labeled partitions into a label rank table.
    Compare {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Word embedding association test.
    Weat {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = commands::default_max_permutations())]
        max_permutations: u64,
    },
    /// Retrain on bootstrap samples and compare the label rankings.
    Stability {
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
    },
    /// Sweep the reduction factor or the frequency threshold.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepKind::Granularity)]
        kind: SweepKind,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.15, 0.2, 0.3])]
        r_values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 20, 50])]
        thresholds: Vec<u64>,
    },
    /// Run every stage and write the full report.
    Run,
    /// Generate a synthetic corpus with a planted bias.
    Synth {
        #[arg(long, default_value = "synthetic.jsonl")]
        output: PathBuf,
        #[arg(long, default_value_t = 2_000_000)]
        bytes: usize,
        #[arg(long, default_value_t = 0.9)]
        share: f64,
        #[arg(long, default_value_t = 1)]
        synth_seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepKind {
    Granularity,
    MinCount,
}

fn report(out: &std::path::Path, written: &[String]) {
    for name in written {
        println!("{}", out.join(name).display());
    }
}

fn execute(cli: Cli, cfg: PipelineConfig) -> Result<()> {
    if cli.print_config {
        println!("{}", toml::to_string(&cfg)?);
        return Ok(());
    }
    let written = match cli.command {
        Command::Train => commands::train(&cfg)?,
        Command::Load { save } => {
            let summary = commands::load(&cfg, save.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            return Ok(());
        }
        Command::Rank { direct } => commands::rank(&cfg, direct)?,
        Command::Cluster { ranking, side } => commands::cluster(&cfg, &ranking, side)?,
        Command::Label { partition } => commands::label(&cfg, &partition)?,
        Command::Compare { left, right } => commands::compare(&cfg, &left, &right)?,
        Command::Weat { x, y, a, b, max_permutations } => commands::run_weat(
            &cfg,
            &WeatSets {
                x,
                y,
                a,
                b,
                max_permutations,
            },
        )?,
        Command::Stability { runs, fraction } => commands::stability(&cfg, runs, fraction)?,
        Command::Sweep { kind, r_values, thresholds } => match kind {
            SweepKind::Granularity => commands::sweep_granularity(&cfg, &r_values)?,
            SweepKind::MinCount => commands::sweep_min_count(&cfg, &thresholds)?,
        },
        Command::Run => {
            cfg.validate()?;
            commands::run(&cfg)?
        }
        Command::Synth { output, bytes, share, synth_seed } => {
            let synth = SyntheticConfig {
                target_bytes: bytes,
                planted_share: share,
                seed: synth_seed,
                ..Default::default()
            };
            let n = commands::synth(&output, &synth)?;
            println!("{} ({n} comments)", output.display());
            return Ok(());
        }
    };
    report(&cfg.out, &written);
    Ok(())
}

/// 2 for bad input (arguments, configuration, unknown words or sets),
/// 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    use biaslens::Error;
    let bad_input = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<Error>(),
            Some(Error::Argument(_) | Error::Config(_) | Error::TargetSet { .. } | Error::Lookup(_))
        )
    });
    if bad_input {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match cli.config.resolve() {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(2);
        }
    };
    match execute(cli, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
