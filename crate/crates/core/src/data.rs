//! Dataset ingestion and synthetic benchmark generation.
//!
//! Features arrive precomputed: a binary file (`DRLHFV1` magic, u32 item
//! count, u32 dimension, f32 rows) paired with a text labels file of one
//! comma-separated class list per item.

use crate::hamming::LabelSet;
use crate::rng::{self, domain};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

pub const FEATURE_MAGIC: &[u8; 7] = b"DRLHFV1";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("bad magic: not a DRLHFV1 feature file")]
    BadMagic,
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("empty label line {0}")]
    EmptyLabelLine(usize),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Split tag for synthetic benchmarks. Ingested datasets default every
/// item to `Train`; the commands decide what each file means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Query,
    Database,
}

/// An in-memory dataset: row-major features, one label set per item,
/// and per-item split tags.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    d_f: usize,
    labels: Vec<LabelSet>,
    splits: Vec<Split>,
    provenance: String,
}

impl Dataset {
    /// Wraps flat row-major features and labels; every item is tagged
    /// `Train`.
    pub fn from_parts(
        features: Vec<f64>,
        d_f: usize,
        labels: Vec<LabelSet>,
        provenance: String,
    ) -> Result<Self, DataError> {
        if d_f == 0 || features.len() % d_f != 0 {
            return Err(DataError::Format(format!(
                "feature length {} not a multiple of dimension {d_f}",
                features.len()
            )));
        }
        let n = features.len() / d_f;
        if labels.len() != n {
            return Err(DataError::HeaderMismatch(format!(
                "{n} feature rows but {} label lines",
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Format("non-finite feature value".into()));
        }
        Ok(Dataset {
            features,
            n,
            d_f,
            labels,
            splits: vec![Split::Train; n],
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.d_f
    }

    pub fn feature(&self, item: usize) -> &[f64] {
        &self.features[item * self.d_f..(item + 1) * self.d_f]
    }

    pub fn labels(&self, item: usize) -> &LabelSet {
        &self.labels[item]
    }

    pub fn all_labels(&self) -> &[LabelSet] {
        &self.labels
    }

    pub fn split(&self, item: usize) -> Split {
        self.splits[item]
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn indices_with_split(&self, split: Split) -> Vec<usize> {
        (0..self.n).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices_with_split(Split::Train)
    }

    pub fn query_indices(&self) -> Vec<usize> {
        self.indices_with_split(Split::Query)
    }

    /// Retrieval pool mirroring the protocol of searching the training
    /// pool: database-tagged items plus the training items.
    pub fn database_indices_including_train(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| matches!(self.splits[i], Split::Database | Split::Train))
            .collect()
    }

    /// Restriction to a subset of items (features, labels; split tags
    /// reset to `Train`).
    pub fn subset(&self, indices: &[usize], provenance: String) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.d_f);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.feature(i));
            labels.push(self.labels[i].clone());
        }
        Dataset {
            features,
            n: indices.len(),
            d_f: self.d_f,
            labels,
            splits: vec![Split::Train; indices.len()],
            provenance,
        }
    }

    /// Every label index must name a class in the codebook.
    pub fn check_labels_fit(&self, num_classes: usize) -> Result<(), String> {
        for (i, l) in self.labels.iter().enumerate() {
            for &c in l.classes() {
                if c as usize >= num_classes {
                    return Err(format!(
                        "item {i} labelled {c}, codebook has {num_classes} classes"
                    ));
                }
            }
            if l.len() >= num_classes {
                return Err(format!(
                    "item {i} covers all {num_classes} classes; no negatives remain"
                ));
            }
        }
        Ok(())
    }
}

/// Reads the paired binary feature / text label files.
pub fn load_features(features_path: &Path, labels_path: &Path) -> Result<Dataset, DataError> {
    let mut bytes = Vec::new();
    std::fs::File::open(features_path)?.read_to_end(&mut bytes)?;
    let rest = bytes.strip_prefix(FEATURE_MAGIC).ok_or(DataError::BadMagic)?;
    if rest.len() < 8 {
        return Err(DataError::HeaderMismatch("missing n / d_f header".into()));
    }
    let n = u32::from_le_bytes(rest[0..4].try_into().expect("length")) as usize;
    let d_f = u32::from_le_bytes(rest[4..8].try_into().expect("length")) as usize;
    let payload = &rest[8..];
    if d_f == 0 {
        return Err(DataError::HeaderMismatch("d_f must be positive".into()));
    }
    if payload.len() != n * d_f * 4 {
        return Err(DataError::HeaderMismatch(format!(
            "header says {n} x {d_f} floats, payload holds {} bytes",
            payload.len()
        )));
    }
    let features: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("length")) as f64)
        .collect();

    let label_text = std::fs::read_to_string(labels_path)?;
    let labels = parse_labels(&label_text)?;
    if labels.len() != n {
        return Err(DataError::HeaderMismatch(format!(
            "feature file has {n} items but labels file has {}",
            labels.len()
        )));
    }
    Dataset::from_parts(
        features,
        d_f,
        labels,
        format!("loaded from {}", features_path.display()),
    )
}

/// Parses one comma-separated class list per line.
pub fn parse_labels(text: &str) -> Result<Vec<LabelSet>, DataError> {
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            return Err(DataError::EmptyLabelLine(lineno + 1));
        }
        let classes: Vec<u32> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| DataError::Format(format!("line {}: bad class {t:?}", lineno + 1)))
            })
            .collect::<Result<_, _>>()?;
        labels.push(
            LabelSet::new(classes)
                .map_err(|_| DataError::EmptyLabelLine(lineno + 1))?,
        );
    }
    Ok(labels)
}

/// Writes the binary feature file for a subset of items.
pub fn write_features_file(
    path: &Path,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<(), DataError> {
    let mut out = Vec::with_capacity(15 + indices.len() * dataset.feature_dim() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(indices.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dataset.feature_dim() as u32).to_le_bytes());
    for &i in indices {
        for &v in dataset.feature(i) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the text labels file for a subset of items.
pub fn write_labels_file(
    path: &Path,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<(), DataError> {
    let mut out = String::new();
    for &i in indices {
        let line = dataset
            .labels(i)
            .classes()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Synthetic single-label benchmark: class centers drawn uniformly on
/// the unit sphere, items perturbed by isotropic Gaussian noise of the
/// given spread. Split 80% train / 10% query / 10% database by a seeded
/// permutation. Feature values are rounded through f32 so the in-memory
/// dataset matches its file round-trip exactly.
pub fn synth_gaussian(
    num_classes: usize,
    per_class_n: usize,
    d_f: usize,
    spread: f64,
    seed: u64,
) -> Dataset {
    assert!(num_classes >= 2, "need at least two classes");
    assert!(d_f >= 2, "need at least two feature dimensions");
    assert!(per_class_n >= 1);
    let mut r = rng::stream(&[domain::SYNTH_DATA, seed]);

    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let mut v: Vec<f64> = (0..d_f).map(|_| gaussian(&mut r)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            for x in v.iter_mut() {
                *x /= norm;
            }
            v
        })
        .collect();

    let n = num_classes * per_class_n;
    let mut features = Vec::with_capacity(n * d_f);
    let mut labels = Vec::with_capacity(n);
    for class in 0..num_classes {
        for _ in 0..per_class_n {
            for dim in 0..d_f {
                let v = centers[class][dim] + spread * gaussian(&mut r);
                features.push(v as f32 as f64);
            }
            labels.push(LabelSet::single(class as u32));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let n_train = n * 8 / 10;
    let n_query = n / 10;
    let mut splits = vec![Split::Database; n];
    for &i in &order[..n_train] {
        splits[i] = Split::Train;
    }
    for &i in &order[n_train..n_train + n_query] {
        splits[i] = Split::Query;
    }

    Dataset {
        features,
        n,
        d_f,
        labels,
        splits,
        provenance: format!(
            "synth_gaussian C={num_classes} per_class={per_class_n} d_f={d_f} spread={spread} seed={seed}"
        ),
    }
}

/// Standard normal via Box-Muller; deterministic given the stream.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn golden_feature_bytes() -> Vec<u8> {
        // 3 items x 2 dims: rows (1.5, -2.0), (0.25, 8.0), (0.0, -0.5)
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DRLHFV1");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        for v in [1.5f32, -2.0, 0.25, 8.0, 0.0, -0.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    #[test]
    fn golden_file_loads_exactly() {
        let dir = tempdir().unwrap();
        let fpath = dir.path().join("x.feat");
        let lpath = dir.path().join("x.labels");
        std::fs::write(&fpath, golden_feature_bytes()).unwrap();
        std::fs::write(&lpath, "0\n2,5\n1\n").unwrap();
        let ds = load_features(&fpath, &lpath).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.feature_dim(), 2);
        assert_eq!(ds.feature(0), &[1.5, -2.0]);
        assert_eq!(ds.feature(1), &[0.25, 8.0]);
        assert_eq!(ds.feature(2), &[0.0, -0.5]);
        assert_eq!(ds.labels(1).classes(), &[2, 5]);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let fpath = dir.path().join("x.feat");
        let lpath = dir.path().join("x.labels");
        std::fs::write(&fpath, b"WRONGMG1rest").unwrap();
        std::fs::write(&lpath, "0\n").unwrap();
        assert!(matches!(
            load_features(&fpath, &lpath),
            Err(DataError::BadMagic)
        ));
    }

    #[test]
    fn header_mismatch_between_files() {
        let dir = tempdir().unwrap();
        let fpath = dir.path().join("x.feat");
        let lpath = dir.path().join("x.labels");
        std::fs::write(&fpath, golden_feature_bytes()).unwrap();
        // 3 items in the feature file, 2 label lines.
        std::fs::write(&lpath, "0\n1\n").unwrap();
        assert!(matches!(
            load_features(&fpath, &lpath),
            Err(DataError::HeaderMismatch(_))
        ));
        // Truncated payload also violates the header.
        let mut short = golden_feature_bytes();
        short.truncate(short.len() - 4);
        std::fs::write(&fpath, short).unwrap();
        std::fs::write(&lpath, "0\n1\n2\n").unwrap();
        assert!(matches!(
            load_features(&fpath, &lpath),
            Err(DataError::HeaderMismatch(_))
        ));
    }

    #[test]
    fn empty_label_line_rejected() {
        let err = parse_labels("0\n\n1\n").unwrap_err();
        assert!(matches!(err, DataError::EmptyLabelLine(2)));
    }

    #[test]
    fn labels_parse_multi_class() {
        let labels = parse_labels("2,5\n7\n").unwrap();
        assert_eq!(labels[0].classes(), &[2, 5]);
        assert_eq!(labels[1].classes(), &[7]);
    }

    #[test]
    fn synth_zero_spread_repeats_center() {
        let ds = synth_gaussian(3, 4, 8, 0.0, 2);
        for class in 0..3 {
            let base = ds.feature(class * 4).to_vec();
            for i in 0..4 {
                assert_eq!(ds.feature(class * 4 + i), &base[..]);
            }
        }
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_gaussian(4, 10, 16, 0.2, 7);
        let b = synth_gaussian(4, 10, 16, 0.2, 7);
        assert_eq!(a.features, b.features);
        assert_eq!(a.splits, b.splits);
        let c = synth_gaussian(4, 10, 16, 0.2, 8);
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn synth_split_ratios() {
        let ds = synth_gaussian(10, 250, 4, 0.1, 1);
        assert_eq!(ds.len(), 2500);
        assert_eq!(ds.train_indices().len(), 2000);
        assert_eq!(ds.query_indices().len(), 250);
        assert_eq!(ds.indices_with_split(Split::Database).len(), 250);
        assert_eq!(ds.database_indices_including_train().len(), 2250);
    }

    #[test]
    fn synth_nearest_center_separability() {
        // The benchmark must be learnable: nearest-center classification
        // on the noisy items recovers the class almost always.
        let ds = synth_gaussian(10, 100, 32, 0.1, 3);
        // Recover centers as per-class means.
        let mut centers = vec![vec![0.0; 32]; 10];
        let mut counts = vec![0usize; 10];
        for i in 0..ds.len() {
            let c = ds.labels(i).classes()[0] as usize;
            counts[c] += 1;
            for (acc, v) in centers[c].iter_mut().zip(ds.feature(i)) {
                *acc += v;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            for v in center.iter_mut() {
                *v /= counts[c] as f64;
            }
        }
        let mut correct = 0usize;
        for i in 0..ds.len() {
            let f = ds.feature(i);
            let nearest = (0..10)
                .min_by(|&a, &b| {
                    let da: f64 = centers[a].iter().zip(f).map(|(c, x)| (c - x).powi(2)).sum();
                    let db: f64 = centers[b].iter().zip(f).map(|(c, x)| (c - x).powi(2)).sum();
                    da.partial_cmp(&db).expect("finite")
                })
                .expect("ten classes");
            if nearest == ds.labels(i).classes()[0] as usize {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / ds.len() as f64;
        assert!(accuracy >= 0.99, "separability only {accuracy}");
    }

    #[test]
    fn feature_file_round_trip() {
        let dir = tempdir().unwrap();
        let ds = synth_gaussian(3, 5, 6, 0.15, 11);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let fpath = dir.path().join("r.feat");
        let lpath = dir.path().join("r.labels");
        write_features_file(&fpath, &ds, &idx).unwrap();
        write_labels_file(&lpath, &ds, &idx).unwrap();
        let back = load_features(&fpath, &lpath).unwrap();
        assert_eq!(back.len(), ds.len());
        for i in 0..ds.len() {
            assert_eq!(back.feature(i), ds.feature(i), "item {i}");
            assert_eq!(back.labels(i), ds.labels(i));
        }
    }

    #[test]
    fn check_labels_fit_catches_overflow() {
        let ds = synth_gaussian(4, 2, 4, 0.1, 0);
        assert!(ds.check_labels_fit(4).is_ok());
        assert!(ds.check_labels_fit(3).is_err());
    }
}
