use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stego_core::codec::{self, AttributeSpec, SecretImage, SyntheticSpec, Table, TabularSchema};
use stego_core::media::{self, RasterImage};
use stego_core::metrics::MetricsReport;
use stego_core::network::{NetworkConfig, StegoModel};
use stego_core::train::{self, Dataset, IdentityStub, Precision, Trainer, TrainingHistory, SUMMARY_HEADER};
use stego_core::{lsb, Scalar, Tensor};

use crate::config::{require_dir, require_file, require_parent, RunConfig};
use crate::UsageError;

pub const MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: [&str; 3] = ["record_index", "filename", "payload_dims"];
const COVER_STREAM: u64 = 0x2545_F491_4F6C_DD1D;

macro_rules! with_precision {
    ($p:expr, $t:ident => $body:expr) => {
        match $p {
            Precision::F32 => {
                type $t = f32;
                $body
            }
            Precision::F64 => {
                type $t = f64;
                $body
            }
        }
    };
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub record_index: usize,
    pub filename: String,
    pub payload_dims: usize,
}

/// Record-to-image bookkeeping. Records sharing a file occupy consecutive
/// `payload_dims`-wide slots in the order they are listed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let table = codec::load_csv(path)?;
        if table.header != MANIFEST_HEADER {
            bail!(UsageError(format!(
                "{}: expected header {}",
                path.display(),
                MANIFEST_HEADER.join(",")
            )));
        }
        let num = |s: &str, line: usize| -> Result<usize> {
            s.parse()
                .map_err(|_| UsageError(format!("{} row {line}: bad number `{s}`", path.display())).into())
        };
        let entries = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(ManifestEntry {
                    record_index: num(&r[0], i + 1)?,
                    filename: r[1].clone(),
                    payload_dims: num(&r[2], i + 1)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            bail!(UsageError(format!("{} lists no records", path.display())));
        }
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let table = Table {
            header: MANIFEST_HEADER.iter().map(|s| s.to_string()).collect(),
            rows: self
                .entries
                .iter()
                .map(|e| vec![e.record_index.to_string(), e.filename.clone(), e.payload_dims.to_string()])
                .collect(),
        };
        codec::save_csv(&table, path)?;
        Ok(())
    }

    /// Distinct filenames in first-seen order, with the total payload bits
    /// each carries.
    pub fn images(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|(f, _)| *f == e.filename) {
                Some((_, bits)) => *bits += e.payload_dims,
                None => out.push((e.filename.clone(), e.payload_dims)),
            }
        }
        out
    }

    /// Bit offset of every entry within its image.
    pub fn slots(&self) -> Vec<usize> {
        let mut used: Vec<(&str, usize)> = Vec::new();
        self.entries
            .iter()
            .map(|e| match used.iter_mut().find(|(f, _)| *f == e.filename) {
                Some((_, off)) => {
                    let o = *off;
                    *off += e.payload_dims;
                    o
                }
                None => {
                    used.push((&e.filename, e.payload_dims));
                    0
                }
            })
            .collect()
    }
}

fn manifest_in(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    require_file(&path, "manifest")?;
    Manifest::load(&path)
}

fn copy_manifest(from: &Path, to: &Path) -> Result<()> {
    fs::copy(from.join(MANIFEST), to.join(MANIFEST))
        .with_context(|| format!("copying manifest into {}", to.display()))?;
    Ok(())
}

pub fn synth_records(count: usize, seed: u64, out: &Path) -> Result<()> {
    require_parent(out, "output")?;
    let table = codec::generate_synthetic_payments(count, seed, &SyntheticSpec::default());
    codec::save_csv(&table, out)?;
    Ok(())
}

pub fn synth_covers(count: usize, height: usize, width: usize, channels: usize, seed: u64, out_dir: &Path) -> Result<()> {
    if channels != 1 && channels != 3 {
        bail!(UsageError(format!("channels must be 1 or 3, got {channels}")));
    }
    create_dir(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let img = media::synthetic_cover(channels, height, width, &mut rng);
        media::save_png(&img, &out_dir.join(format!("cover_{i:05}.png")))?;
    }
    Ok(())
}

/// `name` or `name:bins`.
pub fn parse_numeric_spec(s: &str) -> Result<AttributeSpec> {
    match s.split_once(':') {
        None => Ok(AttributeSpec::numeric(s, codec::DEFAULT_BINS)),
        Some((name, bins)) => {
            let bins = bins
                .parse()
                .map_err(|_| UsageError(format!("bad bin count in `{s}`")))?;
            Ok(AttributeSpec::numeric(name, bins))
        }
    }
}

pub fn fit_schema(csv: &Path, categorical: &[String], numeric: &[String], out: &Path) -> Result<()> {
    require_file(csv, "csv")?;
    require_parent(out, "schema")?;
    if categorical.is_empty() && numeric.is_empty() {
        bail!(UsageError("name at least one --categorical or --numeric column".into()));
    }
    let table = codec::load_csv(csv)?;
    let mut specs: Vec<AttributeSpec> = categorical.iter().map(AttributeSpec::categorical).collect();
    for n in numeric {
        specs.push(parse_numeric_spec(n)?);
    }
    let schema = TabularSchema::fit(&table, &specs)?;
    schema.save(out)?;
    eprintln!("schema: {} attributes, D = {}", schema.attributes().len(), schema.total_dims());
    Ok(())
}

pub struct EncodeArgs<'a> {
    pub csv: &'a Path,
    pub schema: &'a Path,
    pub out_dir: &'a Path,
    pub height: usize,
    pub width: usize,
    pub skip: usize,
    pub limit: Option<usize>,
    pub records_per_image: usize,
}

pub fn encode_data(a: &EncodeArgs) -> Result<()> {
    require_file(a.csv, "csv")?;
    require_file(a.schema, "schema")?;
    if a.records_per_image == 0 {
        bail!(UsageError("records-per-image must be positive".into()));
    }
    let schema = TabularSchema::load(a.schema)?;
    let table = codec::load_csv(a.csv)?;
    let d = schema.total_dims();
    if a.records_per_image * d > a.height * a.width {
        bail!(UsageError(format!(
            "{} records of {d} bits do not fit a {}x{} secret image",
            a.records_per_image, a.height, a.width
        )));
    }
    let end = match a.limit {
        Some(l) => (a.skip + l).min(table.len()),
        None => table.len(),
    };
    if a.skip >= end {
        bail!(UsageError(format!("no records left after skipping {}", a.skip)));
    }
    create_dir(a.out_dir)?;
    let mut manifest = Manifest::default();
    let rows: Vec<usize> = (a.skip..end).collect();
    for group in rows.chunks(a.records_per_image) {
        let records = group
            .iter()
            .map(|&r| schema.encode(&table, r))
            .collect::<stego_core::Result<Vec<_>>>()?;
        let (image, _) = codec::pack_records(&records, a.height, a.width)?;
        let filename = format!("secret_{:06}.png", group[0]);
        image.save_png(&a.out_dir.join(&filename))?;
        for &r in group {
            manifest.entries.push(ManifestEntry {
                record_index: r,
                filename: filename.clone(),
                payload_dims: d,
            });
        }
    }
    manifest.save(&a.out_dir.join(MANIFEST))?;
    eprintln!("encoded {} records into {} images", rows.len(), manifest.images().len());
    Ok(())
}

fn load_secrets<T: Scalar>(dir: &Path, net: &NetworkConfig) -> Result<(Vec<Tensor<T>>, usize)> {
    let manifest = manifest_in(dir)?;
    let mut tensors = Vec::new();
    let mut dims = 0;
    for (file, bits) in manifest.images() {
        let img = SecretImage::load_png(&dir.join(&file), bits)?;
        if (img.height, img.width) != (net.height, net.width) {
            bail!(UsageError(format!(
                "secret {file} is {}x{}, the network expects {}x{}",
                img.height, img.width, net.height, net.width
            )));
        }
        dims = dims.max(bits);
        tensors.push(img.to_tensor());
    }
    Ok((tensors, dims))
}

fn load_covers<T: Scalar>(dir: &Path, net: &NetworkConfig, crop: usize, seed: u64) -> Result<Vec<Tensor<T>>> {
    if net.height != net.width {
        bail!(UsageError(format!(
            "cover directories need a square network input, got {}x{}",
            net.height, net.width
        )));
    }
    let crop = if crop == 0 { usize::MAX } else { crop };
    let covers = media::load_cover_dir(dir, crop, net.height, net.cover_channels == 1, seed)?;
    Ok(covers.iter().map(RasterImage::to_tensor).collect())
}

fn load_dataset<T: Scalar>(secrets: &Path, covers: &Path, cfg: &RunConfig, net: &NetworkConfig) -> Result<Dataset<T>> {
    let (secrets, payload_dims) = load_secrets(secrets, net)?;
    let covers = load_covers(covers, net, cfg.cover_crop, cfg.seed)?;
    Ok(Dataset {
        secrets,
        covers,
        payload_dims,
    })
}

pub fn train_cmd(cfg: &RunConfig, resume: bool) -> Result<()> {
    let secrets = cfg.required("secrets_dir")?;
    let covers = cfg.required("cover_dir")?;
    let ckpt = cfg.required("checkpoint")?;
    let history = cfg.required("history")?;
    require_dir(secrets, "secrets_dir")?;
    require_dir(covers, "cover_dir")?;
    require_parent(ckpt, "checkpoint")?;
    require_parent(history, "history")?;
    if resume {
        require_file(ckpt, "checkpoint")?;
    }
    let tcfg = cfg.training()?;
    let net = cfg.network()?;
    with_precision!(tcfg.precision, T => {
        let data = load_dataset::<T>(secrets, covers, cfg, &net)?;
        let mut trainer = if resume {
            let t = Trainer::<T>::load_checkpoint(ckpt, tcfg.clone())?;
            if *t.model.config() != net {
                bail!(UsageError("checkpoint network does not match the config".into()));
            }
            t
        } else {
            Trainer::new(StegoModel::<T>::build(net, tcfg.seed)?, tcfg.clone())?
        };
        let reason = trainer.run(&data, |r| {
            eprintln!(
                "iteration {} loss_all {:.6} mse {:.6} bce {:.6}",
                r.iteration, r.loss_all, r.loss_mse, r.loss_bce
            )
        })?;
        trainer.save_checkpoint(ckpt)?;
        write_history(&trainer.history, history)?;
        eprintln!("stopped at iteration {} ({reason:?})", trainer.iteration);
    });
    Ok(())
}

fn write_history(history: &TrainingHistory, path: &Path) -> Result<()> {
    write_text(path, &history.to_csv())
}

pub struct EmbedArgs<'a> {
    pub checkpoint: &'a Path,
    pub secrets_dir: &'a Path,
    pub cover_dir: &'a Path,
    pub out_dir: &'a Path,
    pub seed: u64,
    pub cover_crop: usize,
    pub precision: Precision,
}

pub fn embed(a: &EmbedArgs) -> Result<()> {
    require_file(a.checkpoint, "checkpoint")?;
    require_dir(a.secrets_dir, "secrets dir")?;
    require_dir(a.cover_dir, "cover dir")?;
    with_precision!(a.precision, T => {
        let model = train::load_model::<T>(a.checkpoint)?;
        let net = *model.config();
        let manifest = manifest_in(a.secrets_dir)?;
        let covers = load_covers::<T>(a.cover_dir, &net, a.cover_crop, a.seed)?;
        let (secrets, _) = load_secrets::<T>(a.secrets_dir, &net)?;
        create_dir(a.out_dir)?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ COVER_STREAM);
        for ((file, _), secret) in manifest.images().iter().zip(&secrets) {
            let cover = &covers[rng.random_range(0..covers.len())];
            let prepared = model.prep_forward(secret)?;
            let container = model.hide_forward(&prepared, cover)?;
            media::save_png(&RasterImage::from_tensor(&container)?, &a.out_dir.join(file))?;
        }
    });
    copy_manifest(a.secrets_dir, a.out_dir)
}

pub fn reveal(checkpoint: &Path, containers: &Path, out_dir: &Path, precision: Precision) -> Result<()> {
    require_file(checkpoint, "checkpoint")?;
    require_dir(containers, "containers dir")?;
    let manifest = manifest_in(containers)?;
    with_precision!(precision, T => {
        let model = train::load_model::<T>(checkpoint)?;
        let shape = model.config().cover_shape();
        create_dir(out_dir)?;
        for (file, _) in manifest.images() {
            let container: Tensor<T> = media::load_png(&containers.join(&file))?.to_tensor();
            if container.shape() != shape {
                bail!(UsageError(format!(
                    "container {file} has shape {:?}, the network expects {shape:?}",
                    container.shape()
                )));
            }
            let revealed = model.reveal_forward(&container)?;
            media::save_png(&RasterImage::from_tensor(&revealed)?, &out_dir.join(&file))?;
        }
    });
    copy_manifest(containers, out_dir)
}

pub fn decode_data(schema: &Path, manifest: &Path, images: &Path, out: &Path) -> Result<()> {
    require_file(schema, "schema")?;
    require_file(manifest, "manifest")?;
    require_dir(images, "images dir")?;
    require_parent(out, "output")?;
    let schema = TabularSchema::load(schema)?;
    let manifest = Manifest::load(manifest)?;
    let d = schema.total_dims();
    if let Some(e) = manifest.entries.iter().find(|e| e.payload_dims != d) {
        bail!(UsageError(format!(
            "manifest record {} has {} bits, the schema has {d}",
            e.record_index, e.payload_dims
        )));
    }
    let mut decoded: Vec<(usize, Vec<String>)> = Vec::with_capacity(manifest.entries.len());
    let mut cache: Option<(String, RasterImage)> = None;
    for (entry, slot) in manifest.entries.iter().zip(manifest.slots()) {
        if cache.as_ref().is_none_or(|(f, _)| *f != entry.filename) {
            let img = media::load_png(&images.join(&entry.filename))?;
            if img.channels != 1 {
                bail!(UsageError(format!("{} is not single-channel", entry.filename)));
            }
            cache = Some((entry.filename.clone(), img));
        }
        let (_, img) = cache.as_ref().expect("just loaded");
        if slot + d > img.pixels.len() {
            bail!(UsageError(format!("{} is too small for its records", entry.filename)));
        }
        let values = schema.decode(&img.pixels[slot..slot + d])?;
        decoded.push((entry.record_index, values.iter().map(ToString::to_string).collect()));
    }
    decoded.sort_by_key(|(i, _)| *i);
    let table = Table {
        header: schema.names().iter().map(|s| s.to_string()).collect(),
        rows: decoded.into_iter().map(|(_, r)| r).collect(),
    };
    codec::save_csv(&table, out)?;
    Ok(())
}

pub enum Backend {
    Checkpoint(PathBuf),
    Identity,
}

pub fn evaluate_cmd(cfg: &RunConfig, backend: &Backend, out: Option<&Path>) -> Result<()> {
    let secrets = match &cfg.eval_secrets_dir {
        Some(p) => p.as_path(),
        None => cfg.required("secrets_dir")?,
    };
    let covers = cfg.required("cover_dir")?;
    require_dir(secrets, "secrets dir")?;
    require_dir(covers, "cover_dir")?;
    if let Backend::Checkpoint(p) = backend {
        require_file(p, "checkpoint")?;
    }
    let out = out.or(cfg.metrics.as_deref());
    if let Some(o) = out {
        require_parent(o, "metrics")?;
    }
    let opts = cfg.eval_options()?;
    let report: MetricsReport = with_precision!(cfg.precision()?, T => {
        match backend {
            Backend::Checkpoint(p) => {
                let model = train::load_model::<T>(p)?;
                let data = load_dataset::<T>(secrets, covers, cfg, model.config())?;
                train::evaluate(&model, &data, &opts)?
            }
            Backend::Identity => {
                let data = load_dataset::<T>(secrets, covers, cfg, &cfg.network()?)?;
                train::evaluate(&IdentityStub, &data, &opts)?
            }
        }
    });
    let csv = MetricsReport::to_csv(std::slice::from_ref(&report));
    print!("{csv}");
    if let Some(o) = out {
        write_text(o, &csv)?;
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, alphas: &[f64], seeds: &[u64], out: Option<&Path>) -> Result<()> {
    let secrets = cfg.required("secrets_dir")?;
    let covers = cfg.required("cover_dir")?;
    require_dir(secrets, "secrets_dir")?;
    require_dir(covers, "cover_dir")?;
    if let Some(o) = out {
        require_parent(o, "output")?;
    }
    if alphas.is_empty() {
        bail!(UsageError("--alphas is empty".into()));
    }
    let seeds = if seeds.is_empty() { vec![cfg.seed] } else { seeds.to_vec() };
    let tcfg = cfg.training()?;
    let net = cfg.network()?;
    let opts = cfg.eval_options()?;
    let rows = with_precision!(tcfg.precision, T => {
        let data = load_dataset::<T>(secrets, covers, cfg, &net)?;
        train::alpha_sweep_seeds(net, &data, &tcfg, alphas, &seeds, &opts)?
    });
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    print!("{csv}");
    if let Some(o) = out {
        write_text(o, &csv)?;
    }
    Ok(())
}

fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect()
}

fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b) << (8 - c.len()))
        .collect()
}

pub fn lsb_embed(cover: &Path, payload: &Path, out: &Path, config: lsb::LsbConfig) -> Result<()> {
    require_file(cover, "cover")?;
    require_file(payload, "payload")?;
    require_parent(out, "output")?;
    let img = media::load_png(cover)?;
    let data = fs::read(payload).with_context(|| format!("reading {}", payload.display()))?;
    let container = lsb::lsb_embed(&img.to_bytes(), &bytes_to_bits(&data), config)?;
    let out_img = RasterImage::from_bytes(img.channels, img.height, img.width, &container)?;
    media::save_png(&out_img, out)?;
    eprintln!("embedded {} bytes", data.len());
    Ok(())
}

pub fn lsb_extract(container: &Path, bytes: usize, out: &Path, config: lsb::LsbConfig) -> Result<()> {
    require_file(container, "container")?;
    require_parent(out, "output")?;
    let img = media::load_png(container)?;
    let payload = lsb::lsb_extract(&img.to_bytes(), bytes * 8, config)?;
    fs::write(out, bits_to_bytes(&payload)).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_bit_round_trip() {
        let data = [0u8, 1, 0x80, 0xA5, 0xFF];
        let bits = bytes_to_bits(&data);
        assert_eq!(&bits[16..24], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bits_to_bytes(&bits), data);
        assert_eq!(bits_to_bytes(&[1, 1]), vec![0xC0]);
    }

    #[test]
    fn manifest_slots_follow_listing_order() {
        let e = |r, f: &str| ManifestEntry {
            record_index: r,
            filename: f.into(),
            payload_dims: 10,
        };
        let m = Manifest {
            entries: vec![e(4, "b"), e(0, "a"), e(5, "b"), e(1, "a"), e(6, "b")],
        };
        assert_eq!(m.slots(), vec![0, 0, 10, 10, 20]);
        assert_eq!(m.images(), vec![("b".to_string(), 30), ("a".to_string(), 20)]);
    }

    #[test]
    fn numeric_spec_parsing() {
        assert_eq!(parse_numeric_spec("amount").unwrap(), AttributeSpec::numeric("amount", 32));
        assert_eq!(parse_numeric_spec("amount:8").unwrap(), AttributeSpec::numeric("amount", 8));
        assert!(parse_numeric_spec("amount:x").is_err());
    }
}
