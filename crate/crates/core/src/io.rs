//! File formats: labelled datasets (CSV, IDX, embedding files) and model
//! persistence (JSON and the `NPC1` binary layout).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, Metric, PrototypeModel, SphereBlock, SphereEmbedding};

pub const MODEL_VERSION: u32 = 1;
const MODEL_MAGIC: &[u8; 4] = b"NPC1";
const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";
const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

/// Labelled points of a common dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    dim: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::Format(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        Ok(Dataset { dim, points, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// One more than the largest label (0 when empty).
    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes.max(self.num_classes())];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Indices of the points labelled `y`.
    pub fn class_indices(&self, y: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == y).collect()
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Parses a CSV with header `label,f1,…,fd`. Rows and columns in errors
/// are 1-based file positions.
pub fn parse_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.is_empty() || !header[0].eq_ignore_ascii_case("label") {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "header must start with 'label'".into(),
        });
    }
    let dim = header.len() - 1;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 2;
        let record = record.map_err(csv_error)?;
        if record.len() != dim + 1 {
            return Err(Error::Parse {
                row,
                column: record.len().min(dim + 1) + 1,
                message: format!("expected {} fields, found {}", dim + 1, record.len()),
            });
        }
        let label = record[0].parse::<usize>().map_err(|e| Error::Parse {
            row,
            column: 1,
            message: format!("label '{}': {e}", &record[0]),
        })?;
        let mut x = Vec::with_capacity(dim);
        for c in 1..=dim {
            let v = record[c].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row,
                column: c + 1,
                message: format!("'{}' is not a finite number", &record[c]),
            })?;
            x.push(v);
        }
        labels.push(label);
        points.push(x);
    }
    Dataset::new(dim, points, labels)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        row,
        column: 0,
        message: e.to_string(),
    }
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(std::io::BufReader::new(file))
}

/// Writes `label,f1,…` with shortest round-trip float formatting.
pub fn write_csv_to(data: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    let header: Vec<String> = std::iter::once("label".to_string())
        .chain((1..=data.dim).map(|k| format!("f{k}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (x, y) in data.points.iter().zip(&data.labels) {
        write!(out, "{y}")?;
        for v in x {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_csv_to(data, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8], what: &'static str) -> Self {
        Cursor { bytes, pos: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("{} is truncated at byte {}", self.what, self.bytes.len()))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32_be(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u32_le(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64_le(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_le(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} has {} trailing bytes",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Decodes an IDX image/label pair. Pixels are scaled to [0,1] by /255.
pub fn parse_idx(images: &[u8], labels: &[u8], num_classes: Option<usize>) -> Result<Dataset> {
    let mut img = Cursor::new(images, "IDX image file");
    let magic = img.u32_be()?;
    if magic != IDX_IMAGES {
        return Err(Error::Format(format!("bad image magic {magic:#010x}, expected {IDX_IMAGES:#010x}")));
    }
    let count = img.u32_be()? as usize;
    let rows = img.u32_be()? as usize;
    let cols = img.u32_be()? as usize;
    let dim = rows * cols;
    let mut lab = Cursor::new(labels, "IDX label file");
    let magic = lab.u32_be()?;
    if magic != IDX_LABELS {
        return Err(Error::Format(format!("bad label magic {magic:#010x}, expected {IDX_LABELS:#010x}")));
    }
    let label_count = lab.u32_be()? as usize;
    if label_count != count {
        return Err(Error::Format(format!("{count} images but {label_count} labels")));
    }
    let pixels = img.take(count * dim)?;
    img.finish()?;
    let raw = lab.take(count)?;
    lab.finish()?;
    let limit = num_classes.unwrap_or(256);
    let labels = raw
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if (y as usize) < limit {
                Ok(y as usize)
            } else {
                Err(Error::Format(format!("label {y} of item {i} is outside [0, {limit})")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let points = pixels
        .chunks(dim.max(1))
        .take(count)
        .map(|c| c.iter().map(|&p| p as f64 / 255.0).collect())
        .collect();
    Dataset::new(dim, points, labels)
}

pub fn read_idx(images: &Path, labels: &Path, num_classes: Option<usize>) -> Result<Dataset> {
    parse_idx(&read_bytes(images)?, &read_bytes(labels)?, num_classes)
}

/// Path of the block descriptor accompanying an embedding CSV.
pub fn embedding_sidecar(csv: &Path) -> PathBuf {
    csv.with_extension("blocks.json")
}

/// Reads precomputed embeddings: the `EMB1` binary layout, or a CSV with a
/// JSON block descriptor next to it (see [`embedding_sidecar`]).
pub fn read_embeddings(path: &Path) -> Result<(Dataset, SphereEmbedding)> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(EMBEDDING_MAGIC) {
        return parse_embeddings(&bytes);
    }
    let sidecar = embedding_sidecar(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let embedding: SphereEmbedding = serde_json::from_str(&text)?;
    let embedding = SphereEmbedding::new(embedding.blocks)?;
    let data = parse_csv(bytes.as_slice())?;
    if data.dim() != embedding.dim() && !data.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: embedding.dim(),
            got: data.dim(),
        });
    }
    Ok((data, embedding))
}

pub fn parse_embeddings(bytes: &[u8]) -> Result<(Dataset, SphereEmbedding)> {
    let mut c = Cursor::new(bytes, "embedding file");
    if c.take(4)? != EMBEDDING_MAGIC {
        return Err(Error::Format("missing EMB1 magic".into()));
    }
    let nblocks = c.u32_le()? as usize;
    let mut blocks = Vec::with_capacity(nblocks.min(1 << 16));
    for _ in 0..nblocks {
        let radius = c.f64_le()?;
        let channels = c.u32_le()? as usize;
        let positions = c.u32_le()? as usize;
        blocks.push(SphereBlock {
            radius,
            channels,
            positions,
        });
    }
    let embedding = SphereEmbedding::new(blocks)?;
    let dim = embedding.dim();
    let count = c.u64_le()? as usize;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..count {
        labels.push(c.u32_le()? as usize);
        points.push((0..dim).map(|_| c.f64_le()).collect::<Result<Vec<_>>>()?);
    }
    c.finish()?;
    Ok((Dataset::new(dim, points, labels)?, embedding))
}

pub fn write_embeddings(data: &Dataset, embedding: &SphereEmbedding, path: &Path) -> Result<()> {
    if data.dim() != embedding.dim() {
        return Err(Error::DimensionMismatch {
            expected: embedding.dim(),
            got: data.dim(),
        });
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(EMBEDDING_MAGIC);
    buf.extend_from_slice(&(embedding.blocks.len() as u32).to_le_bytes());
    for b in &embedding.blocks {
        buf.extend_from_slice(&b.radius.to_le_bytes());
        buf.extend_from_slice(&(b.channels as u32).to_le_bytes());
        buf.extend_from_slice(&(b.positions as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(data.len() as u64).to_le_bytes());
    for (x, &y) in data.points.iter().zip(&data.labels) {
        buf.extend_from_slice(&(y as u32).to_le_bytes());
        for v in x {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    metric: String,
    domain: Domain,
    dim: usize,
    num_classes: usize,
    labels: Vec<usize>,
    prototypes: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<SphereEmbedding>,
}

fn metric_from_name(name: &str, embedding: Option<SphereEmbedding>) -> Result<Metric> {
    match (name, embedding) {
        ("l1", None) => Ok(Metric::L1),
        ("l2", None) => Ok(Metric::L2),
        ("linf", None) => Ok(Metric::Linf),
        ("embedded_l2", Some(e)) => Ok(Metric::EmbeddedL2(SphereEmbedding::new(e.blocks)?)),
        ("embedded_l2", None) => Err(Error::SchemaVersionMismatch("embedded_l2 model without embedding".into())),
        (m @ ("l1" | "l2" | "linf"), Some(_)) => {
            Err(Error::SchemaVersionMismatch(format!("metric {m} does not take an embedding")))
        }
        (other, _) => Err(Error::SchemaVersionMismatch(format!("unknown metric '{other}'"))),
    }
}

pub fn model_to_json(model: &PrototypeModel) -> Result<String> {
    let file = ModelFile {
        version: MODEL_VERSION,
        metric: model.metric().name().to_string(),
        domain: model.domain(),
        dim: model.dim(),
        num_classes: model.num_classes(),
        labels: model.labels().to_vec(),
        prototypes: (0..model.num_prototypes()).map(|i| model.prototype(i).to_vec()).collect(),
        embedding: model.metric().embedding().cloned(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn model_from_json(text: &str) -> Result<PrototypeModel> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == MODEL_VERSION as u64 => {}
        Some(v) => return Err(Error::SchemaVersionMismatch(format!("model version {v}, expected {MODEL_VERSION}"))),
        None => return Err(Error::SchemaVersionMismatch("model file has no version".into())),
    }
    let file: ModelFile = serde_json::from_value(value)?;
    if let Some(r) = file.prototypes.iter().position(|r| r.len() != file.dim) {
        return Err(Error::SchemaVersionMismatch(format!(
            "prototype {r} has {} entries but dim is {}",
            file.prototypes[r].len(),
            file.dim
        )));
    }
    let metric = metric_from_name(&file.metric, file.embedding)?;
    PrototypeModel::new(file.dim, file.num_classes, file.prototypes, file.labels, metric, file.domain)
}

fn domain_code(domain: Domain) -> u32 {
    match domain {
        Domain::Unbounded => 0,
        Domain::UnitBox => 1,
        Domain::SphereProduct => 2,
    }
}

/// `NPC1`, then little-endian u32 version, metric code (0 l1, 1 l2, 2 linf,
/// 3 embedded_l2), domain code, dim, class count, prototype count, block
/// count; per block f64 radius and u32 channels, positions; u32 labels; f64
/// prototype rows.
pub fn model_to_binary(model: &PrototypeModel) -> Vec<u8> {
    let mut buf = Vec::new();
    let metric = match model.metric() {
        Metric::L1 => 0u32,
        Metric::L2 => 1,
        Metric::Linf => 2,
        Metric::EmbeddedL2(_) => 3,
    };
    let blocks = model.metric().embedding().map_or(&[][..], |e| &e.blocks[..]);
    buf.extend_from_slice(MODEL_MAGIC);
    for v in [
        MODEL_VERSION,
        metric,
        domain_code(model.domain()),
        model.dim() as u32,
        model.num_classes() as u32,
        model.num_prototypes() as u32,
        blocks.len() as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for b in blocks {
        buf.extend_from_slice(&b.radius.to_le_bytes());
        buf.extend_from_slice(&(b.channels as u32).to_le_bytes());
        buf.extend_from_slice(&(b.positions as u32).to_le_bytes());
    }
    for &y in model.labels() {
        buf.extend_from_slice(&(y as u32).to_le_bytes());
    }
    for v in model.prototypes_flat() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn model_from_binary(bytes: &[u8]) -> Result<PrototypeModel> {
    let mut c = Cursor::new(bytes, "model file");
    if c.take(4)? != MODEL_MAGIC {
        return Err(Error::Format("missing NPC1 magic".into()));
    }
    let version = c.u32_le()?;
    if version != MODEL_VERSION {
        return Err(Error::SchemaVersionMismatch(format!("model version {version}, expected {MODEL_VERSION}")));
    }
    let metric = c.u32_le()?;
    let domain = match c.u32_le()? {
        0 => Domain::Unbounded,
        1 => Domain::UnitBox,
        2 => Domain::SphereProduct,
        d => return Err(Error::SchemaVersionMismatch(format!("unknown domain code {d}"))),
    };
    let dim = c.u32_le()? as usize;
    let num_classes = c.u32_le()? as usize;
    let count = c.u32_le()? as usize;
    let nblocks = c.u32_le()? as usize;
    let mut blocks = Vec::new();
    for _ in 0..nblocks {
        let radius = c.f64_le()?;
        let channels = c.u32_le()? as usize;
        let positions = c.u32_le()? as usize;
        blocks.push(SphereBlock {
            radius,
            channels,
            positions,
        });
    }
    let metric = match (metric, nblocks) {
        (0, 0) => Metric::L1,
        (1, 0) => Metric::L2,
        (2, 0) => Metric::Linf,
        (3, n) if n > 0 => Metric::EmbeddedL2(SphereEmbedding::new(blocks)?),
        (m, n) => {
            return Err(Error::SchemaVersionMismatch(format!(
                "metric code {m} with {n} embedding blocks"
            )))
        }
    };
    let labels = (0..count).map(|_| c.u32_le().map(|y| y as usize)).collect::<Result<Vec<_>>>()?;
    let flat = (0..count * dim).map(|_| c.f64_le()).collect::<Result<Vec<_>>>()?;
    c.finish()?;
    PrototypeModel::from_flat(dim, num_classes, flat, labels, metric, domain)
}

/// Writes JSON, or the binary layout when the extension is `.npc` or `.bin`.
pub fn save_model(model: &PrototypeModel, path: &Path) -> Result<()> {
    let binary = matches!(path.extension().and_then(|e| e.to_str()), Some("npc" | "bin"));
    let bytes = if binary {
        model_to_binary(model)
    } else {
        model_to_json(model)?.into_bytes()
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads either format, detected by the `NPC1` magic.
pub fn load_model(path: &Path) -> Result<PrototypeModel> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(MODEL_MAGIC) {
        model_from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Format("model file is neither NPC1 nor UTF-8 JSON".into()))?;
        model_from_json(&text)
    }
}
