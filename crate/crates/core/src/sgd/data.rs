use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Per-row supervision.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// Integer class ids in `0..num_classes`.
    Classes { ids: Vec<usize>, num_classes: usize },
    /// One real target per row (regression with squared error).
    Targets(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { ids, .. } => ids.len(),
            Labels::Targets(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, indices: &[usize]) -> Labels {
        match self {
            Labels::Classes { ids, num_classes } => Labels::Classes {
                ids: indices.iter().map(|&i| ids[i]).collect(),
                num_classes: *num_classes,
            },
            Labels::Targets(t) => Labels::Targets(indices.iter().map(|&i| t[i]).collect()),
        }
    }

    fn write_label_bytes(&self, i: usize, out: &mut Vec<u8>) {
        match self {
            Labels::Classes { ids, .. } => out.extend_from_slice(&(ids[i] as u64).to_le_bytes()),
            Labels::Targets(t) => out.extend_from_slice(&t[i].to_le_bytes()),
        }
    }
}

/// Row-major `n x d` inputs with labels, identified by a content hash.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    dim: usize,
    labels: Labels,
    id: [u8; 32],
}

/// An owned subset of a dataset's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Vec<f64>,
    pub dim: usize,
    pub labels: Labels,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }
}

impl Dataset {
    pub fn new(inputs: Vec<f64>, dim: usize, labels: Labels) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dataset("input dimension must be >= 1".into()));
        }
        if inputs.len() != dim * labels.len() {
            return Err(Error::Dataset(format!(
                "{} input values do not form {} rows of width {dim}",
                inputs.len(),
                labels.len()
            )));
        }
        if let Labels::Classes { ids, num_classes } = &labels {
            if let Some(bad) = ids.iter().find(|&&c| c >= *num_classes) {
                return Err(Error::Dataset(format!(
                    "class id {bad} >= number of classes {num_classes}"
                )));
            }
        }
        let mut ds = Self {
            inputs,
            dim,
            labels,
            id: [0; 32],
        };
        ds.id = ds.content_hash();
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    /// SHA-256 content identifier.
    pub fn id(&self) -> [u8; 32] {
        self.id
    }

    pub fn num_classes(&self) -> Option<usize> {
        match &self.labels {
            Labels::Classes { num_classes, .. } => Some(*num_classes),
            Labels::Targets(_) => None,
        }
    }

    /// Canonical bytes of one row: features as f64 LE, then the label
    /// (class id as u64 LE or target as f64 LE).
    pub fn write_row_bytes(&self, i: usize, out: &mut Vec<u8>) {
        for v in self.row(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        self.labels.write_label_bytes(i, out);
    }

    fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dim as u64).to_le_bytes());
        let mut buf = Vec::with_capacity(8 * (self.dim + 1));
        for i in 0..self.len() {
            buf.clear();
            self.write_row_bytes(i, &mut buf);
            h.update(&buf);
        }
        h.finalize().into()
    }

    pub fn check_indices(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.len()) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            }),
            None => Ok(()),
        }
    }

    /// Gathers the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Batch> {
        self.check_indices(indices)?;
        let mut inputs = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
        }
        Ok(Batch {
            inputs,
            dim: self.dim,
            labels: self.labels.select(indices),
        })
    }

    pub fn all(&self) -> Batch {
        Batch {
            inputs: self.inputs.clone(),
            dim: self.dim,
            labels: self.labels.clone(),
        }
    }

    /// Reads a CSV with a header row; the last column is the label. Labels
    /// that are all non-negative integers become classes, anything else is
    /// read as real-valued targets.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let width = rdr
            .headers()
            .map_err(|e| Error::Dataset(e.to_string()))?
            .len();
        if width < 2 {
            return Err(Error::Dataset(
                "need at least one feature column and a label".into(),
            ));
        }
        let mut inputs = Vec::new();
        let mut raw_labels = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Dataset(e.to_string()))?;
            if rec.len() != width {
                return Err(Error::Dataset(format!(
                    "row {} has {} fields",
                    line + 1,
                    rec.len()
                )));
            }
            for field in rec.iter().take(width - 1) {
                inputs.push(parse_f64(field, line)?);
            }
            raw_labels.push(rec[width - 1].trim().to_owned());
        }
        let classes: Option<Vec<usize>> = raw_labels.iter().map(|s| s.parse().ok()).collect();
        let labels = match classes {
            Some(ids) => {
                let num_classes = ids.iter().max().map_or(1, |m| m + 1);
                Labels::Classes { ids, num_classes }
            }
            None => Labels::Targets(
                raw_labels
                    .iter()
                    .enumerate()
                    .map(|(i, s)| parse_f64(s, i))
                    .collect::<Result<_>>()?,
            ),
        };
        Self::new(inputs, width - 1, labels)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)
            .map_err(|e| Error::Dataset(e.to_string()))?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(match &self.labels {
                Labels::Classes { ids, .. } => ids[i].to_string(),
                Labels::Targets(t) => t[i].to_string(),
            });
            w.write_record(&rec)
                .map_err(|e| Error::Dataset(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Dataset(e.to_string()))
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Dataset(format!("row {}: cannot parse '{s}' as a number", line + 1)))
}

/// Synthetic generators used in place of image benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Unit-variance Gaussian clusters whose centres sit `separation` apart.
    GaussianBlobs { separation: f64 },
    /// Two interleaved half circles in the first two coordinates, Gaussian
    /// noise in the rest. Always two classes.
    TwoMoons { noise: f64 },
}

impl SyntheticKind {
    pub fn blobs() -> Self {
        SyntheticKind::GaussianBlobs { separation: 5.0 }
    }

    pub fn moons() -> Self {
        SyntheticKind::TwoMoons { noise: 0.1 }
    }
}

/// Deterministic synthetic classification data; row `i` has label `i % classes`,
/// so labels are balanced within one.
pub fn make_synthetic_dataset(
    kind: SyntheticKind,
    n: usize,
    dim: usize,
    classes: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 || dim == 0 || classes == 0 {
        return Err(Error::InvalidConfig("n, d and classes must be >= 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(n * dim);
    let ids: Vec<usize>;
    match kind {
        SyntheticKind::GaussianBlobs { separation } => {
            // Orthogonal centres at distance `separation` pairwise while they fit.
            let scale = separation / std::f64::consts::SQRT_2;
            let centres: Vec<Vec<f64>> = (0..classes)
                .map(|c| {
                    if c < dim {
                        let mut v = vec![0.0; dim];
                        v[c] = scale;
                        v
                    } else {
                        (0..dim)
                            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                            .collect()
                    }
                })
                .collect();
            ids = (0..n).map(|i| i % classes).collect();
            for &c in &ids {
                for j in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    inputs.push(centres[c][j] + z);
                }
            }
        }
        SyntheticKind::TwoMoons { noise } => {
            if classes != 2 {
                return Err(Error::InvalidConfig(
                    "two_moons always has 2 classes".into(),
                ));
            }
            if dim < 2 {
                return Err(Error::InvalidConfig("two_moons needs d >= 2".into()));
            }
            ids = (0..n).map(|i| i % 2).collect();
            for &c in &ids {
                let theta = rng.gen_range(0.0..std::f64::consts::PI);
                let (x, y) = if c == 0 {
                    (theta.cos(), theta.sin())
                } else {
                    (1.0 - theta.cos(), 0.5 - theta.sin())
                };
                let nx: f64 = StandardNormal.sample(&mut rng);
                let ny: f64 = StandardNormal.sample(&mut rng);
                inputs.push(x + noise * nx);
                inputs.push(y + noise * ny);
                for _ in 2..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    inputs.push(noise * z);
                }
            }
        }
    }
    Dataset::new(
        inputs,
        dim,
        Labels::Classes {
            ids,
            num_classes: classes,
        },
    )
}
