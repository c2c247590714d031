use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semharq::experiment::pipeline::{self, Layout, StageLog};
use semharq::experiment::{load_csv, parse_override, summarize, ExperimentConfig, SummaryRow};
use semharq::knowledge_base::{LocalKnowledgeBase, KB_HEADER};
use semharq::tensor::{load_checkpoint, CHECKPOINT_HEADER};
use semharq::{Error, Result};

/// Semantic HARQ simulator.
#[derive(Parser)]
#[command(name = "semharq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration document (TOML key-value); desk defaults otherwise.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set channel.snr_db=[0,10]`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (same as `--set output.dir=...`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the codec and the similarity embedder.
    Train {
        #[command(flatten)]
        common: Common,
        /// Also train the discriminator, generator and detector of every
        /// sweep point, generating knowledge bases as needed.
        #[arg(long)]
        modules: bool,
    },
    /// Generate the knowledge base of every sweep point.
    Genkb {
        #[command(flatten)]
        common: Common,
    },
    /// Run every scheme at every sweep point from existing artifacts.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Every stage, reusing whatever is already on disk.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Describe a checkpoint, knowledge base, result file or output directory.
    Inspect {
        path: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut overrides = common.overrides.iter().map(|o| parse_override(o)).collect::<Result<Vec<_>>>()?;
    if let Some(out) = &common.out {
        overrides.push(("output.dir".into(), toml::Value::String(out.display().to_string())));
    }
    match &common.config {
        Some(path) => ExperimentConfig::load(path, &overrides),
        None => ExperimentConfig::from_str_with_overrides("", &overrides),
    }
}

fn report(log: &StageLog) {
    for (path, action) in &log.entries {
        eprintln!("{:?} {}", action, path.display());
    }
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<8} {:<9} {:>7} {:>6} {:>9} {:>11} {:>7} {:>6}",
        "scheme", "rule", "snr_db", "n", "bleu", "similarity", "rounds", "ack"
    );
    for r in rows {
        println!(
            "{:<8} {:<9} {:>7} {:>6} {:>9.4} {:>11.4} {:>7.3} {:>6.3}",
            r.scheme, r.combine_rule, r.snr_db, r.sentences, r.mean_bleu, r.mean_similarity, r.mean_rounds, r.ack_rate
        );
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train { common, modules } => {
            let config = load_config(&common)?;
            let points: Vec<usize> = if modules { (0..config.channel.snr_db.len()).collect() } else { Vec::new() };
            let system = pipeline::build_system_at(&config, &points)?;
            report(&system.log);
        }
        Command::Genkb { common } => {
            let config = load_config(&common)?;
            let (kbs, log) = pipeline::generate_kbs(&config)?;
            for kb in &kbs {
                println!(
                    "snr {} dB: {} transmissions, abnormal fraction {:.4}, |K2| = {}",
                    kb.meta.snr_db,
                    kb.k1.len(),
                    kb.abnormal_fraction(),
                    kb.k2.len()
                );
            }
            report(&log);
        }
        Command::Sweep { common } => {
            let config = load_config(&common)?;
            config.validate()?;
            let missing = pipeline::missing_artifacts(&config);
            if !missing.is_empty() {
                let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
                return Err(Error::Config(format!("missing artifacts (run `pipeline` or `train --modules`): {}", list.join(", "))));
            }
            let system = pipeline::build_system(&config)?;
            let rows = pipeline::run_sweep(&config, &system)?;
            pipeline::write_results(&config, &rows)?;
            print_summary(&summarize(&rows));
        }
        Command::Pipeline { common } => {
            let config = load_config(&common)?;
            let (system, rows) = pipeline::pipeline(&config)?;
            report(&system.log);
            print_summary(&summarize(&rows));
        }
        Command::Inspect { path } => inspect(&path)?,
    }
    Ok(())
}

fn first_line(path: &Path) -> Result<String> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = Vec::new();
    BufReader::new(file).read_until(b'\n', &mut line).map_err(|e| Error::io(path, e))?;
    Ok(String::from_utf8_lossy(&line).trim_end().to_string())
}

fn inspect(path: &Path) -> Result<()> {
    if path.is_dir() {
        let config_path = Layout::new(path).config();
        let config = ExperimentConfig::load(&config_path, &[])?;
        let config = ExperimentConfig { output_dir: path.to_path_buf(), ..config };
        let missing = pipeline::missing_artifacts(&config);
        println!("profile {}, {} sweep points", config.profile.as_str(), config.channel.snr_db.len());
        if missing.is_empty() {
            println!("all stage artifacts present");
        }
        for p in missing {
            println!("missing {}", p.display());
        }
        let results = Layout::new(path).results();
        if results.exists() {
            print_summary(&summarize(&load_csv(&results)?));
        }
        return Ok(());
    }
    let header = first_line(path)?;
    if header == CHECKPOINT_HEADER {
        let params = load_checkpoint(path)?;
        for p in params.iter() {
            println!("{:<28} {:?}", p.name, p.value.shape());
        }
        println!("{} tensors, {} scalars", params.len(), params.scalar_count());
    } else if header == KB_HEADER {
        let kb = LocalKnowledgeBase::load(path)?;
        println!("snr_db {}", kb.meta.snr_db);
        println!("seed {}", kb.meta.seed);
        println!("transmissions {}", kb.meta.transmissions);
        println!("|K1| {}  |K2| {}  |K3| {}", kb.k1.len(), kb.k2.len(), kb.k3.len());
        println!("abnormal fraction {:.4}", kb.abnormal_fraction());
    } else if header.starts_with("scheme,combine_rule,snr_db,sentence_id") {
        print_summary(&summarize(&load_csv(path)?));
    } else if header.starts_with("scheme,combine_rule,snr_db,sentences") {
        print_summary(&semharq::experiment::results::load_summary(path)?);
    } else {
        print!("{}", ExperimentConfig::load(path, &[])?.to_document());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
