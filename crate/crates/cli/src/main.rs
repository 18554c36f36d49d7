mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use stego_core::lsb::LsbConfig;
use stego_core::train::Precision;

use commands::{Backend, EmbedArgs, EncodeArgs};
use config::RunConfig;

/// Bad flags, missing inputs or invalid configuration. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "stego", version, about = "Hide tabular records in cover images with a trained steganography network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bits {
    #[value(name = "32")]
    F32,
    #[value(name = "64")]
    F64,
}

impl From<Bits> for Precision {
    fn from(b: Bits) -> Self {
        match b {
            Bits::F32 => Precision::F32,
            Bits::F64 => Precision::F64,
        }
    }
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat key=value config file ('#' starts a comment)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable. Wins over the file and STEGO_SEED
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        RunConfig::from_env(self.config.as_deref(), &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic payment-records CSV
    SynthRecords {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write procedural cover PNGs
    SynthCovers {
        #[arg(long, default_value_t = 256)]
        count: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit a one-hot schema to a CSV
    FitSchema {
        #[arg(long)]
        csv: PathBuf,
        /// Categorical columns
        #[arg(long, value_delimiter = ',')]
        categorical: Vec<String>,
        /// Numeric columns as NAME or NAME:BINS
        #[arg(long, value_delimiter = ',')]
        numeric: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode CSV records as binary secret PNGs plus a manifest
    EncodeData {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        /// Records to skip from the top of the CSV
        #[arg(long, default_value_t = 0)]
        skip: usize,
        /// Maximum records to encode
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = 1)]
        records_per_image: usize,
    },
    /// Train a model; writes the checkpoint and history CSV named in the config
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Continue from the configured checkpoint
        #[arg(long)]
        resume: bool,
    },
    /// Hide secret images in covers
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        secrets_dir: PathBuf,
        #[arg(long)]
        cover_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Seeds cover choice and cover crops
        #[arg(long, env = "STEGO_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        cover_crop: usize,
        #[arg(long, value_enum, default_value = "32")]
        precision: Bits,
    },
    /// Recover secret images from containers
    Reveal {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        containers_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "32")]
        precision: Bits,
    },
    /// Decode (revealed) secret images back into CSV records
    DecodeData {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        images_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average PSNR, SSIM, bit accuracy and losses over random pairs
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Model to evaluate; defaults to the configured checkpoint
        #[arg(long, conflicts_with = "backend")]
        checkpoint: Option<PathBuf>,
        /// Use a built-in backend instead of a model
        #[arg(long, value_enum)]
        backend: Option<BuiltinBackend>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate once per alpha (and per seed)
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-significant-bit baseline
    #[command(subcommand)]
    Lsb(LsbCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinBackend {
    /// Container = cover, reveal = secret
    Identity,
}

#[derive(Subcommand)]
enum LsbCommand {
    /// Write the bytes of PAYLOAD into the low bits of a cover PNG
    Embed {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        payload: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Low bits used per sample; defaults to the config's lsb_bits
        #[arg(long)]
        bits: Option<u8>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Read BYTES payload bytes back out of a container PNG
    Extract {
        #[arg(long)]
        container: PathBuf,
        #[arg(long)]
        bytes: usize,
        #[arg(long)]
        out: PathBuf,
        /// Low bits used per sample; defaults to the config's lsb_bits
        #[arg(long)]
        bits: Option<u8>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn lsb_config(cfg: &ConfigArgs, bits: Option<u8>) -> Result<LsbConfig> {
    let mut cfg = cfg.load()?;
    if let Some(b) = bits {
        cfg.lsb_bits = b;
    }
    cfg.lsb()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthRecords { count, seed, out } => commands::synth_records(count, seed, &out),
        Command::SynthCovers {
            count,
            height,
            width,
            channels,
            seed,
            out_dir,
        } => commands::synth_covers(count, height, width, channels, seed, &out_dir),
        Command::FitSchema {
            csv,
            categorical,
            numeric,
            out,
        } => commands::fit_schema(&csv, &categorical, &numeric, &out),
        Command::EncodeData {
            csv,
            schema,
            out_dir,
            height,
            width,
            skip,
            limit,
            records_per_image,
        } => commands::encode_data(&EncodeArgs {
            csv: &csv,
            schema: &schema,
            out_dir: &out_dir,
            height,
            width,
            skip,
            limit,
            records_per_image,
        }),
        Command::Train { cfg, resume } => commands::train_cmd(&cfg.load()?, resume),
        Command::Embed {
            checkpoint,
            secrets_dir,
            cover_dir,
            out_dir,
            seed,
            cover_crop,
            precision,
        } => commands::embed(&EmbedArgs {
            checkpoint: &checkpoint,
            secrets_dir: &secrets_dir,
            cover_dir: &cover_dir,
            out_dir: &out_dir,
            seed,
            cover_crop,
            precision: precision.into(),
        }),
        Command::Reveal {
            checkpoint,
            containers_dir,
            out_dir,
            precision,
        } => commands::reveal(&checkpoint, &containers_dir, &out_dir, precision.into()),
        Command::DecodeData {
            schema,
            manifest,
            images_dir,
            out,
        } => commands::decode_data(&schema, &manifest, &images_dir, &out),
        Command::Evaluate {
            cfg,
            checkpoint,
            backend,
            out,
        } => {
            let cfg = cfg.load()?;
            let backend = match (backend, checkpoint) {
                (Some(BuiltinBackend::Identity), _) => Backend::Identity,
                (None, Some(p)) => Backend::Checkpoint(p),
                (None, None) => Backend::Checkpoint(cfg.required("checkpoint")?.to_path_buf()),
            };
            commands::evaluate_cmd(&cfg, &backend, out.as_deref())
        }
        Command::Sweep {
            cfg,
            alphas,
            seeds,
            out,
        } => commands::sweep(&cfg.load()?, &alphas, &seeds, out.as_deref()),
        Command::Lsb(LsbCommand::Embed {
            cover,
            payload,
            out,
            bits,
            cfg,
        }) => commands::lsb_embed(&cover, &payload, &out, lsb_config(&cfg, bits)?),
        Command::Lsb(LsbCommand::Extract {
            container,
            bytes,
            out,
            bits,
            cfg,
        }) => commands::lsb_extract(&container, bytes, &out, lsb_config(&cfg, bits)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let usage = err.chain().any(|e| e.is::<UsageError>());
            let line = format!("{err:#}").replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
