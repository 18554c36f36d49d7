//! Tabular records to one-hot bit vectors and back, and bit vectors to
//! binary secret images.
//!
//! Categorical attributes map to their sorted vocabulary; numeric attributes
//! are cut into equal-frequency bins and decode to the bin midpoint.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const DEFAULT_BINS: usize = 32;
const SCHEMA_MAGIC: &str = "stego-schema 1";

/// A table of string cells with a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Categorical,
    Numeric { bins: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
        }
    }

    pub fn numeric(name: impl Into<String>, bins: usize) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric { bins },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Attribute {
    Categorical { name: String, vocabulary: Vec<String> },
    /// `edges.len() == bins + 1`, strictly ascending.
    Numeric { name: String, edges: Vec<f64> },
}

impl Attribute {
    pub fn name(&self) -> &str {
        match self {
            Attribute::Categorical { name, .. } | Attribute::Numeric { name, .. } => name,
        }
    }

    /// Number of one-hot positions this attribute occupies.
    pub fn width(&self) -> usize {
        match self {
            Attribute::Categorical { vocabulary, .. } => vocabulary.len(),
            Attribute::Numeric { edges, .. } => edges.len() - 1,
        }
    }

    /// Bin index of `v`; values outside the fitted range clamp to the end bins.
    fn bin_of(edges: &[f64], v: f64) -> usize {
        let bins = edges.len() - 1;
        edges[1..bins].partition_point(|&e| e <= v)
    }

    /// Bin midpoint, or the lower edge when the bin is too narrow for the
    /// midpoint to land strictly inside it.
    fn midpoint(edges: &[f64], bin: usize) -> f64 {
        let (lo, hi) = (edges[bin], edges[bin + 1]);
        let mid = lo + (hi - lo) / 2.0;
        if mid < hi { mid } else { lo }
    }
}

/// A decoded cell: the category itself, or the representative of a bin.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Category(String),
    Number(f64),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Category(s) => f.write_str(s),
            Value::Number(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularSchema {
    attributes: Vec<Attribute>,
}

impl TabularSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut names = BTreeSet::new();
        for a in &attributes {
            if !names.insert(a.name()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name())));
            }
            match a {
                Attribute::Categorical { name, vocabulary } => {
                    if vocabulary.is_empty() {
                        return Err(Error::Schema(format!("`{name}` has an empty vocabulary")));
                    }
                    if vocabulary.iter().collect::<BTreeSet<_>>().len() != vocabulary.len() {
                        return Err(Error::Schema(format!("`{name}` has duplicate vocabulary entries")));
                    }
                }
                Attribute::Numeric { name, edges } => {
                    if edges.len() < 2 {
                        return Err(Error::Schema(format!("`{name}` needs at least one bin")));
                    }
                    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::Schema(format!(
                            "`{name}` bin edges must be finite and strictly ascending"
                        )));
                    }
                }
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Total one-hot width `D`.
    pub fn total_dims(&self) -> usize {
        self.attributes.iter().map(Attribute::width).sum()
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(Attribute::name).collect()
    }

    /// Sorted distinct values for categoricals, equal-frequency quantile edges
    /// for numerics. Independent of row order.
    pub fn fit(table: &Table, specs: &[AttributeSpec]) -> Result<Self> {
        if table.rows.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a schema on zero records".into()));
        }
        let mut attributes = Vec::with_capacity(specs.len());
        for spec in specs {
            let col = column_values(table, &spec.name)?;
            attributes.push(match spec.kind {
                AttributeKind::Categorical => Attribute::Categorical {
                    name: spec.name.clone(),
                    vocabulary: col
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect(),
                },
                AttributeKind::Numeric { bins } => {
                    if bins == 0 {
                        return Err(Error::InvalidArgument(format!(
                            "`{}`: bin count must be at least 1",
                            spec.name
                        )));
                    }
                    let mut values = col
                        .iter()
                        .map(|s| parse_number(&spec.name, s))
                        .collect::<Result<Vec<_>>>()?;
                    values.sort_by(f64::total_cmp);
                    Attribute::Numeric {
                        name: spec.name.clone(),
                        edges: quantile_edges(&values, bins),
                    }
                }
            });
        }
        Self::new(attributes)
    }

    /// One active bit per attribute slice, attributes in schema order.
    pub fn encode(&self, table: &Table, row: usize) -> Result<Vec<u8>> {
        let cells = table
            .rows
            .get(row)
            .ok_or_else(|| Error::InvalidArgument(format!("record {row} out of range")))?;
        let mut bits = vec![0u8; self.total_dims()];
        let mut offset = 0;
        for attr in &self.attributes {
            let cell = lookup(table, cells, attr.name(), row)?;
            let hot = match attr {
                Attribute::Categorical { name, vocabulary } => vocabulary
                    .binary_search_by(|v| v.as_str().cmp(cell))
                    .map_err(|_| Error::UnknownValue {
                        attribute: name.clone(),
                        value: cell.to_string(),
                    })?,
                Attribute::Numeric { name, edges } => Attribute::bin_of(edges, parse_number(name, cell)?),
            };
            bits[offset + hot] = 1;
            offset += attr.width();
        }
        Ok(bits)
    }

    /// What a record decodes back to: categories verbatim, numbers replaced by
    /// their bin representative.
    pub fn canonical(&self, table: &Table, row: usize) -> Result<Vec<Value>> {
        let bits = self.encode(table, row)?;
        self.decode(&bits.iter().map(|&b| b as f64).collect::<Vec<_>>())
    }

    /// Slice-wise argmax over hard or soft values; ties go to the lowest index.
    pub fn decode<T: Scalar>(&self, values: &[T]) -> Result<Vec<Value>> {
        let d = self.total_dims();
        if values.len() != d {
            return Err(Error::LengthMismatch {
                op: "decode_bits",
                expected: d,
                actual: values.len(),
            });
        }
        let mut offset = 0;
        let mut out = Vec::with_capacity(self.attributes.len());
        for attr in &self.attributes {
            let slice = &values[offset..offset + attr.width()];
            let mut best = 0;
            for (i, v) in slice.iter().enumerate() {
                if *v > slice[best] {
                    best = i;
                }
            }
            out.push(match attr {
                Attribute::Categorical { vocabulary, .. } => Value::Category(vocabulary[best].clone()),
                Attribute::Numeric { edges, .. } => Value::Number(Attribute::midpoint(edges, best)),
            });
            offset += attr.width();
        }
        Ok(out)
    }

    /// Versioned text form: one tab-separated attribute per line
    /// (`name, kind, width, entries...`) with `\t`, `\n`, `\r`, `\\` escaped.
    pub fn to_text(&self) -> String {
        let mut s = format!("{SCHEMA_MAGIC}\n");
        for a in &self.attributes {
            let (kind, entries): (&str, Vec<String>) = match a {
                Attribute::Categorical { vocabulary, .. } => ("categorical", vocabulary.clone()),
                Attribute::Numeric { edges, .. } => ("numeric", edges.iter().map(|e| format!("{e:?}")).collect()),
            };
            let _ = write!(s, "{}\t{kind}\t{}", escape(a.name()), a.width());
            for e in entries {
                let _ = write!(s, "\t{}", escape(&e));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(SCHEMA_MAGIC) => {}
            other => {
                return Err(Error::Schema(format!(
                    "expected header `{SCHEMA_MAGIC}`, found {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut attributes = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let lineno = i + 2;
            let fields = line.split('\t').map(unescape).collect::<Result<Vec<_>>>()?;
            if fields.len() < 3 {
                return Err(Error::Schema(format!("line {lineno}: expected name, kind, width")));
            }
            let width: usize = fields[2]
                .parse()
                .map_err(|_| Error::Schema(format!("line {lineno}: bad width `{}`", fields[2])))?;
            let entries = &fields[3..];
            let name = fields[0].clone();
            let attr = match fields[1].as_str() {
                "categorical" if entries.len() == width => Attribute::Categorical {
                    name,
                    vocabulary: entries.to_vec(),
                },
                "numeric" if entries.len() == width + 1 => Attribute::Numeric {
                    name,
                    edges: entries
                        .iter()
                        .map(|e| {
                            e.parse::<f64>()
                                .map_err(|_| Error::Schema(format!("line {lineno}: bad bin edge `{e}`")))
                        })
                        .collect::<Result<_>>()?,
                },
                "categorical" | "numeric" => {
                    return Err(Error::Schema(format!(
                        "line {lineno}: width {width} disagrees with {} entries",
                        entries.len()
                    )))
                }
                k => return Err(Error::Schema(format!("line {lineno}: unknown kind `{k}`"))),
            };
            attributes.push(attr);
        }
        Self::new(attributes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn column_values<'t>(table: &'t Table, name: &str) -> Result<Vec<&'t str>> {
    let col = table.column(name).ok_or_else(|| Error::MissingAttribute {
        attribute: name.to_string(),
        record: 0,
    })?;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.get(col).map(String::as_str).ok_or_else(|| Error::MissingAttribute {
                attribute: name.to_string(),
                record: i,
            })
        })
        .collect()
}

fn lookup<'r>(table: &Table, cells: &'r [String], name: &str, row: usize) -> Result<&'r str> {
    table
        .column(name)
        .and_then(|c| cells.get(c))
        .map(String::as_str)
        .ok_or_else(|| Error::MissingAttribute {
            attribute: name.to_string(),
            record: row,
        })
}

fn parse_number(attribute: &str, cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NotNumeric {
            attribute: attribute.to_string(),
            value: cell.to_string(),
        })
}

/// `bins + 1` edges at the `i/bins` quantiles of sorted `values`, nudged
/// upward where duplicates would make them collide.
fn quantile_edges(sorted: &[f64], bins: usize) -> Vec<f64> {
    let last = sorted.len() - 1;
    let mut edges: Vec<f64> = (0..=bins)
        .map(|i| {
            let pos = i as f64 * last as f64 / bins as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        })
        .collect();
    for i in 1..edges.len() {
        if edges[i] <= edges[i - 1] {
            edges[i] = edges[i - 1].next_up();
        }
    }
    edges
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next() {
            Some('\\') => '\\',
            Some('t') => '\t',
            Some('n') => '\n',
            Some('r') => '\r',
            other => return Err(Error::Schema(format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default()))),
        });
    }
    Ok(out)
}

/// Binary `1×H×W` image carrying `payload_dims` bits row-major from (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SecretImage {
    pub height: usize,
    pub width: usize,
    pub payload_dims: usize,
    pub pixels: Vec<u8>,
}

impl SecretImage {
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::new(
            &[1, self.height, self.width],
            self.pixels.iter().map(|&p| if p == 1 { T::one() } else { T::zero() }).collect(),
        )
        .expect("pixel count matches image size")
    }

    /// 1-bit grayscale PNG, white = 1.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = png::Encoder::new(std::io::BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let stride = self.width.div_ceil(8);
        let mut packed = vec![0u8; stride * self.height];
        for (i, &p) in self.pixels.iter().enumerate() {
            if p == 1 {
                let (y, x) = (i / self.width, i % self.width);
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
        let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        w.write_image_data(&packed).map_err(|e| Error::Png(e.to_string()))?;
        w.finish().map_err(|e| Error::Png(e.to_string()))
    }

    /// Reads any 8-bit or 1-bit grayscale PNG, thresholding at half range.
    pub fn load_png(path: &Path, payload_dims: usize) -> Result<Self> {
        let img = crate::media::load_png(path)?;
        if img.channels != 1 {
            return Err(Error::UnsupportedImage {
                path: path.to_path_buf(),
                reason: "secret images must be single-channel".into(),
            });
        }
        let pixels = img.pixels.iter().map(|&v| u8::from(v >= 0.5)).collect();
        Ok(Self {
            height: img.height,
            width: img.width,
            payload_dims,
            pixels,
        })
    }
}

/// Places `bits` row-major into an `H×W` image, zero-filling the rest.
pub fn pack_bits(bits: &[u8], height: usize, width: usize) -> Result<SecretImage> {
    if bits.len() > height * width {
        return Err(Error::PayloadTooLarge {
            dims: bits.len(),
            height,
            width,
        });
    }
    if let Some(i) = bits.iter().position(|&b| b > 1) {
        return Err(Error::NonBinarySecret {
            index: i,
            value: bits[i] as f64,
        });
    }
    let mut pixels = vec![0u8; height * width];
    pixels[..bits.len()].copy_from_slice(bits);
    Ok(SecretImage {
        height,
        width,
        payload_dims: bits.len(),
        pixels,
    })
}

/// First `dims` values in row-major order; soft values pass through.
pub fn unpack_bits<T: Copy>(image: &[T], dims: usize) -> Result<Vec<T>> {
    if dims > image.len() {
        return Err(Error::LengthMismatch {
            op: "unpack_bits",
            expected: dims,
            actual: image.len(),
        });
    }
    Ok(image[..dims].to_vec())
}

/// Concatenates as many whole records as fit into one image.
pub fn pack_records(records: &[Vec<u8>], height: usize, width: usize) -> Result<(SecretImage, usize)> {
    let Some(first) = records.first() else {
        return Err(Error::InvalidArgument("no records to pack".into()));
    };
    let d = first.len();
    if records.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("records differ in width".into()));
    }
    let per_image = (height * width) / d.max(1);
    if per_image == 0 {
        return Err(Error::PayloadTooLarge {
            dims: d,
            height,
            width,
        });
    }
    let take = per_image.min(records.len());
    let bits: Vec<u8> = records[..take].concat();
    Ok((pack_bits(&bits, height, width)?, take))
}

/// Splits the first `count·dims` values back into per-record slices.
pub fn unpack_records<T: Copy>(image: &[T], dims: usize, count: usize) -> Result<Vec<Vec<T>>> {
    Ok(unpack_bits(image, dims * count)?.chunks(dims.max(1)).map(<[T]>::to_vec).collect())
}

/// Reads an RFC 4180 CSV with a header row.
pub fn load_csv(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    Error::Csv { line, message }
}

pub fn write_csv<W: std::io::Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(&table.header).map_err(io)?;
    for r in &table.rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Csv {
        line: 0,
        message: e.to_string(),
    })
}

pub fn save_csv(table: &Table, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file))
}

/// Shape of a synthetic payment corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Distinct values per categorical column.
    pub cardinalities: Vec<usize>,
    /// Bin count used when fitting the amount column.
    pub amount_bins: usize,
}

impl Default for SyntheticSpec {
    /// Ten categorical columns plus an amount, `D = 200` once fitted on a
    /// corpus large enough to hit every category.
    fn default() -> Self {
        Self {
            cardinalities: vec![40, 30, 25, 20, 15, 12, 10, 8, 5, 3],
            amount_bins: DEFAULT_BINS,
        }
    }
}

const COLUMN_NAMES: [&str; 10] = [
    "vendor", "department", "category", "contract_type", "fund", "region", "payment_method",
    "fiscal_quarter", "approval_level", "currency",
];

impl SyntheticSpec {
    pub fn column_names(&self) -> Vec<String> {
        (0..self.cardinalities.len())
            .map(|i| match COLUMN_NAMES.get(i) {
                Some(n) => n.to_string(),
                None => format!("attr_{i}"),
            })
            .chain(std::iter::once("amount".to_string()))
            .collect()
    }

    pub fn attribute_specs(&self) -> Vec<AttributeSpec> {
        let names = self.column_names();
        let (amount, cats) = names.split_last().expect("amount column");
        cats.iter()
            .map(AttributeSpec::categorical)
            .chain(std::iter::once(AttributeSpec::numeric(amount, self.amount_bins)))
            .collect()
    }
}

/// Deterministic payment-like records. Categorical values are `<column>_<k>`
/// with a mildly skewed draw; amounts are log-uniform between 10 and 100000 with
/// cent precision.
pub fn generate_synthetic_payments(n: usize, seed: u64, spec: &SyntheticSpec) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let header = spec.column_names();
    let rows = (0..n)
        .map(|_| {
            let mut row: Vec<String> = spec
                .cardinalities
                .iter()
                .zip(&header)
                .map(|(&card, name)| {
                    // mild skew toward low indices
                    let u: f64 = rng.random::<f64>().powf(1.5);
                    let k = ((u * card as f64) as usize).min(card.saturating_sub(1));
                    format!("{name}_{k:03}")
                })
                .collect();
            let amount = 10f64.powf(rng.random_range(1.0..5.0));
            row.push(format!("{:.2}", amount));
            row
        })
        .collect();
    Table { header, rows }
}
