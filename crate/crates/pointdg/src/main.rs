//! Command-line entry points: dataset generation, training, evaluation,
//! ablation suites, and complexity benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pointdg::data::{build_benchmark, DatasetStore, Manifest, Split, CLASS_NAMES};
use pointdg::error::{Error, Result};
use pointdg::harness::{
    self, ablate, bench, evaluate, manifest_from_file, manifest_to_text, RunConfig, Suite,
};
use pointdg::model::ModelState;

#[derive(Parser)]
#[command(
    name = "pointdg",
    about = "Domain-generalized point cloud classification with a linear WKV attention backbone"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic multi-domain benchmark tree.
    GenData {
        /// Manifest file; omit for the built-in default benchmark.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory for the dataset tree.
        #[arg(long, default_value = "data")]
        out: PathBuf,
        /// Overwrite an existing tree.
        #[arg(long)]
        force: bool,
    },
    /// Train one leave-one-out task.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a task's unseen target domain.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Task id = index of the held-out domain.
        #[arg(long)]
        task: usize,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Output directory for CSV reports (defaults next to the checkpoint).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ablation suite over all tasks and several seeds.
    Ablate {
        /// One of: module, shift, align, scale.
        #[arg(long)]
        suite: String,
        /// Base run config; omit for defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Number of seeds (0, 1, 2, ...).
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value = "runs/ablate")]
        out: PathBuf,
    },
    /// Analytic FLOPs and wall-clock scaling of the kernels.
    Bench {
        /// Restrict to one kernel: biwkv, softmax, or agt. Omit for all.
        #[arg(long)]
        kernel: Option<String>,
        /// Comma-separated sequence lengths / point counts.
        #[arg(long, default_value = "256,512,1024,2048")]
        lengths: String,
        /// Channel width.
        #[arg(long, default_value_t = 64)]
        width: usize,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_store(data_dir: &PathBuf) -> Result<DatasetStore> {
    let manifest = manifest_from_file(&data_dir.join("manifest.txt"))?;
    DatasetStore::load(&manifest, data_dir)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            manifest,
            out,
            force,
        } => {
            let manifest = match manifest {
                Some(path) => manifest_from_file(&path)?,
                None => Manifest::default(),
            };
            std::fs::create_dir_all(&out)?;
            build_benchmark(&manifest, &out, force)?;
            std::fs::write(out.join("manifest.txt"), manifest_to_text(&manifest))?;
            println!("benchmark written to {}", out.display());
            println!(
                "{} domains x {} classes; per-domain counts per class: train {}, val {}, test {}",
                manifest.domains.len(),
                CLASS_NAMES.len(),
                manifest.train_per_class,
                manifest.val_per_class,
                manifest.test_per_class
            );
            for (t, d) in manifest.domains.iter().enumerate() {
                println!("  task {t}: target domain {:?}", d.name);
            }
            Ok(())
        }
        Command::Train { config, seed } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let store = load_store(&cfg.data_dir)?;
            if cfg.task >= store.num_domains() {
                return Err(Error::InvalidConfig(format!(
                    "task {} out of range ({} domains)",
                    cfg.task,
                    store.num_domains()
                )));
            }
            let outcome = harness::train(&cfg, &store)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            outcome.state.save(&cfg.out_dir.join("model.ckpt"))?;
            std::fs::write(cfg.out_dir.join("config.txt"), cfg.to_text())?;
            std::fs::write(cfg.out_dir.join("epochs.csv"), outcome.report.epochs_csv())?;
            std::fs::write(cfg.out_dir.join("summary.csv"), outcome.report.summary_csv())?;
            print!("{}", outcome.report.summary_text());
            println!("checkpoint: {}", cfg.out_dir.join("model.ckpt").display());
            Ok(())
        }
        Command::Eval {
            checkpoint,
            task,
            data,
            out,
        } => {
            let state = ModelState::load(&checkpoint)?;
            let store = load_store(&data)?;
            if task >= store.num_domains() {
                return Err(Error::InvalidConfig(format!(
                    "task {} out of range ({} domains)",
                    task,
                    store.num_domains()
                )));
            }
            if state.config.num_classes != CLASS_NAMES.len() {
                return Err(Error::CheckpointMismatch(format!(
                    "checkpoint expects {} classes, dataset has {}",
                    state.config.num_classes,
                    CLASS_NAMES.len()
                )));
            }
            let samples = store.split_samples(task, Split::Test);
            let report = evaluate(&state, &samples, state.seed ^ 0x65766c)?;
            let out_dir = out.unwrap_or_else(|| {
                checkpoint
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(
                out_dir.join("confusion.csv"),
                report.confusion_csv(&CLASS_NAMES),
            )?;
            std::fs::write(out_dir.join("embeddings.csv"), report.embeddings_csv())?;
            print!("{}", report.summary_text(&CLASS_NAMES));
            Ok(())
        }
        Command::Ablate {
            suite,
            config,
            data,
            seeds,
            out,
        } => {
            let suite = Suite::parse(&suite)?;
            let base = match config {
                Some(path) => RunConfig::from_file(&path)?,
                None => RunConfig::default(),
            };
            let store = load_store(&data)?;
            let seed_list: Vec<u64> = (0..seeds.max(1) as u64).collect();
            let table = ablate::run_suite(suite, &base, &store, &seed_list)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("table.csv"), table.to_csv())?;
            std::fs::write(out.join("table.txt"), table.to_text())?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::Bench {
            kernel,
            lengths,
            width,
            out,
        } => {
            let lengths: Vec<usize> = lengths
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad length {s:?}")))
                })
                .collect::<Result<_>>()?;
            if lengths.len() < 2 {
                return Err(Error::InvalidConfig(
                    "need at least two lengths for a slope fit".into(),
                ));
            }
            let report = bench::run_bench(kernel.as_deref(), &lengths, width)?;
            if let Some(path) = out {
                std::fs::write(&path, report.to_csv())?;
                println!("csv written to {}", path.display());
            } else {
                print!("{}", report.to_csv());
            }
            print!("{}", report.summary_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
