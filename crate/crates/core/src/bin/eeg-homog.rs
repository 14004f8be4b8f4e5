use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eeg_homog::harness::{self, resolve_out};
use eeg_homog::{Error, PipelineConfig, Split};

#[derive(Parser)]
#[command(
    name = "eeg-homog",
    version,
    about = "EEG channel homogenization and edge-enriched encoding"
)]
struct Cli {
    /// Pipeline config file (`key = value` sections; unknown keys are errors)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed (also used as the training seed)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Only print errors
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset as EEGB files plus dataset.json
    Synth {
        /// Synth spec file
        spec: PathBuf,
    },
    /// Encode a dataset into PGM previews and [3, H, W] tensors
    Encode {
        /// Dataset directory (contains dataset.json); defaults to [io] dataset
        dataset: Option<PathBuf>,
    },
    /// Train the softmax head on a dataset or an encoded directory
    Train {
        /// Dataset or encoded directory; defaults to [io] dataset
        input: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on one split
    Eval {
        checkpoint: PathBuf,
        /// Dataset or encoded directory; defaults to [io] dataset
        input: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Run the 11-row ablation grid
    Ablate {
        /// Dataset directory; defaults to [io] dataset
        dataset: Option<PathBuf>,
        /// Seeds per grid cell (overrides [ablation] seeds)
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    Ok(match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    })
}

fn input_dir(arg: &Option<PathBuf>, config: &PipelineConfig) -> Result<PathBuf, Error> {
    arg.clone()
        .or_else(|| config.io.dataset.clone())
        .ok_or_else(|| Error::InvalidConfig("no input directory given and [io] dataset is unset".into()))
}

fn run(cli: Cli) -> Result<(), Error> {
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Synth { spec } => {
            let mut spec = harness::load_synth_spec(spec)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
            let manifest = harness::cmd_synth(&spec, &out)?;
            say(format!(
                "wrote {} samples ({} classes, {}x{}) to {}",
                manifest.samples.len(),
                manifest.num_classes,
                manifest.channels,
                manifest.length,
                out.display()
            ));
        }
        Command::Encode { dataset } => {
            let config = load_config(&cli)?;
            let out = resolve_out(cli.out.clone(), &config, "encoded");
            let manifest = harness::cmd_encode(&input_dir(dataset, &config)?, &config, &out)?;
            say(format!(
                "encoded {} samples to {} ({} files)",
                manifest.samples.len(),
                out.display(),
                manifest.files.len()
            ));
        }
        Command::Train { input } => {
            let config = load_config(&cli)?;
            let out = resolve_out(cli.out.clone(), &config, "run");
            let report = harness::cmd_train(&input_dir(input, &config)?, &config, &out)?;
            say(format!(
                "best epoch {} val_acc {:.4}{}; checkpoint {}",
                report.best_epoch,
                report.best_val_acc,
                report.test_acc.map(|a| format!(" test_acc {a:.4}")).unwrap_or_default(),
                out.join(harness::CHECKPOINT_FILE).display()
            ));
        }
        Command::Eval {
            checkpoint,
            input,
            split,
        } => {
            let config = load_config(&cli)?;
            let report = harness::cmd_eval(checkpoint, &input_dir(input, &config)?, *split, &config)?;
            // The accuracy line is the command's result, so it ignores --quiet.
            println!(
                "{} accuracy {:.4} on {} samples",
                split.as_str(),
                report.accuracy,
                report.samples
            );
        }
        Command::Ablate { dataset, seeds } => {
            let mut config = load_config(&cli)?;
            if let Some(n) = seeds {
                config.ablation.seeds = *n;
            }
            let out = resolve_out(cli.out.clone(), &config, "ablation");
            let table = harness::cmd_ablate(&input_dir(dataset, &config)?, &config, &out)?;
            if !cli.quiet {
                print!("{}", table.to_text());
            }
            say(format!(
                "wrote {}",
                Path::new(&out).join(harness::ABLATION_CSV).display()
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "error"
    } else {
        "warn"
    }))
    .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
