//! Synthetic Gaussian-blob classification data.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::rng::{normal_vec, substream, Purpose};

/// Scale of the class centres relative to unit-variance noise.
const CENTER_SCALE: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n: usize,
    d: usize,
    classes: usize,
    seed: u64,
}

impl Dataset {
    /// `features` is row-major `n x d`.
    pub fn new(features: Vec<f64>, labels: Vec<usize>, d: usize, classes: usize, seed: u64) -> Result<Self> {
        let n = labels.len();
        if n == 0 || d == 0 || classes == 0 {
            return Err(GsamError::Config("dataset needs n >= 1, d >= 1 and classes >= 1".into()));
        }
        if features.len() != n * d {
            return Err(GsamError::Dimension {
                context: "dataset features",
                expected: n * d,
                got: features.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(GsamError::Config(format!("label {bad} is out of range for {classes} classes")));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(GsamError::numeric("dataset feature"));
        }
        Ok(Dataset {
            features,
            labels,
            n,
            d,
            classes,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.d
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Writes `feature_0,...,feature_{d-1},label` followed by one row per sample.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.d).map(|j| format!("feature_{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| GsamError::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads the format produced by [`Dataset::write_csv`]. The class count is
    /// taken as `max(label) + 1` unless given.
    pub fn read_csv<R: Read>(reader: R, classes: Option<usize>, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(csv_err)?.clone();
        let d = header.len().checked_sub(1).unwrap_or(0);
        let expected: Vec<String> = (0..d)
            .map(|j| format!("feature_{j}"))
            .chain(std::iter::once("label".to_string()))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(GsamError::Parse {
                path: "<dataset csv>".into(),
                message: format!("unexpected header {:?}", header),
            });
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            for j in 0..d {
                features.push(parse_field::<f64>(&rec[j])?);
            }
            labels.push(parse_field::<usize>(&rec[d])?);
        }
        let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
        Dataset::new(features, labels, d, classes, seed)
    }

    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| GsamError::io(path, e))?;
        self.write_csv(f)
    }

    pub fn from_csv_file(path: &Path, classes: Option<usize>, seed: u64) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| GsamError::io(path, e))?;
        Self::read_csv(f, classes, seed)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| GsamError::Parse {
        path: "<dataset csv>".into(),
        message: format!("cannot parse field {s:?}"),
    })
}

fn csv_err(e: csv::Error) -> GsamError {
    GsamError::Parse {
        path: "<dataset csv>".into(),
        message: e.to_string(),
    }
}

/// Parameters of a Gaussian-blob dataset. Class centres depend only on
/// `seed`; samples depend on `(seed, split)`, so split 0 (train) and split 1
/// (test) share the same classes but never the same draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobsConfig {
    pub seed: u64,
    pub n_per_class: usize,
    pub dim: usize,
    pub classes: usize,
    pub spread: f64,
}

impl BlobsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.dim == 0 || self.classes == 0 {
            return Err(GsamError::Argument("blob counts must be positive".into()));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(GsamError::Argument(format!("spread must be positive, got {}", self.spread)));
        }
        Ok(())
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        let mut rng = substream(self.seed, Purpose::DataCenters, 0);
        (0..self.classes)
            .map(|_| normal_vec(&mut rng, self.dim).into_iter().map(|x| CENTER_SCALE * x).collect())
            .collect()
    }

    pub fn generate(&self, split: u32) -> Result<Dataset> {
        self.generate_with(split, self.n_per_class)
    }

    /// Same classes, a different number of samples per class (for test sets).
    pub fn generate_with(&self, split: u32, n_per_class: usize) -> Result<Dataset> {
        self.validate()?;
        if n_per_class == 0 {
            return Err(GsamError::Argument("n_per_class must be positive".into()));
        }
        let centers = self.centers();
        let mut rng = substream(self.seed, Purpose::DataSamples, split);
        let n = n_per_class * self.classes;
        let mut features = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        // Interleaved labels keep every prefix of the dataset close to balanced.
        for i in 0..n {
            let y = i % self.classes;
            let noise = normal_vec(&mut rng, self.dim);
            features.extend(centers[y].iter().zip(noise).map(|(c, e)| c + self.spread * e));
            labels.push(y);
        }
        Dataset::new(features, labels, self.dim, self.classes, self.seed)
    }
}

/// Training split of a blob dataset.
pub fn generate_blobs(seed: u64, n_per_class: usize, d: usize, classes: usize, spread: f64) -> Result<Dataset> {
    BlobsConfig {
        seed,
        n_per_class,
        dim: d,
        classes,
        spread,
    }
    .generate(0)
}
