//! Dataset ingestion, synthesis, persistence, and the image-domain
//! scaling rule.
//!
//! Image-domain features always live in [0,1] (pixel bytes are scaled by
//! 1/255 on load); series-domain features are unscaled and never clipped.

pub mod npy;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::stable_dist::{draw_standard, RngStream};
use crate::{Error, Result};

pub use npy::{Dtype, NpyArray};

/// Whether features obey the [0,1] image range or are free-ranging series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Image,
    Series,
}

/// Labeled samples as a row-major feature matrix plus per-sample shape
/// metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    shape: Vec<usize>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
    domain: Domain,
    /// Original label values for remapped series files, sorted ascending;
    /// index i is the original label of class id i.
    label_map: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        shape: Vec<usize>,
        labels: Vec<usize>,
        n_classes: usize,
        domain: Domain,
        label_map: Option<Vec<i64>>,
    ) -> Result<Self> {
        let n_features: usize = shape.iter().product();
        if n_features == 0 {
            return Err(Error::Parameter(format!("empty sample shape {shape:?}")));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Parameter(format!(
                "{} feature values do not match {} samples x {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if n_classes < 1 {
            return Err(Error::Parameter("n_classes must be >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Parameter(format!(
                "label {bad} outside [0, {n_classes})"
            )));
        }
        if domain == Domain::Image {
            if let Some(&bad) = features.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::Parameter(format!(
                    "image-domain feature {bad} outside [0, 1]"
                )));
            }
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite feature value".into()));
        }
        Ok(Self {
            name: name.into(),
            features,
            shape,
            n_features,
            labels,
            n_classes,
            domain,
            label_map,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }
    pub fn n_features(&self) -> usize {
        self.n_features
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn features(&self) -> &[f64] {
        &self.features
    }
    pub fn label_map(&self) -> Option<&[i64]> {
        self.label_map.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Subset by sample indices, keeping metadata.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n_samples() {
                return Err(Error::Parameter(format!("subset index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(
            name,
            features,
            self.shape.clone(),
            labels,
            self.n_classes,
            self.domain,
            self.label_map.clone(),
        )
    }
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, field: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format(format!("truncated IDX file reading {field}")))
}

/// Load an MNIST-style IDX image/label pair. Pixel bytes are scaled by 1/255
/// into [0,1]; the per-sample shape comes from the IDX header.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = fs::read(images_path)?;
    let lbl = fs::read(labels_path)?;

    let img_magic = be_u32(&img, 0, "image magic")?;
    if img_magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "unexpected magic {img_magic:#010x} in image file (want {IDX_IMAGES_MAGIC:#010x})"
        )));
    }
    let lbl_magic = be_u32(&lbl, 0, "label magic")?;
    if lbl_magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "unexpected magic {lbl_magic:#010x} in label file (want {IDX_LABELS_MAGIC:#010x})"
        )));
    }

    let n_images = be_u32(&img, 4, "image count")? as usize;
    let rows = be_u32(&img, 8, "row count")? as usize;
    let cols = be_u32(&img, 12, "column count")? as usize;
    let n_labels = be_u32(&lbl, 4, "label count")? as usize;
    if n_images != n_labels {
        return Err(Error::Format(format!(
            "image count {n_images} does not match label count {n_labels}"
        )));
    }
    let pixels = img
        .get(16..16 + n_images * rows * cols)
        .ok_or_else(|| Error::Format("truncated IDX file reading pixel data".into()))?;
    let label_bytes = lbl
        .get(8..8 + n_labels)
        .ok_or_else(|| Error::Format("truncated IDX file reading label data".into()))?;

    let features: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<usize> = label_bytes.iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().max().map_or(1, |&m| m + 1);
    Dataset::new(
        images_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "idx".into()),
        features,
        vec![rows, cols, 1],
        labels,
        n_classes,
        Domain::Image,
        None,
    )
}

// ---------------------------------------------------------------------------
// Series CSV
// ---------------------------------------------------------------------------

/// Load a UCR-style series file: each row is `label, v1, v2, ...`. Labels are
/// remapped to contiguous 0-based ids by sorting the distinct original values
/// ascending; the mapping is recorded on the dataset.
pub fn load_series_csv(path: &Path, delimiter: char) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut raw_labels: Vec<i64> = Vec::new();
    let mut features: Vec<f64> = Vec::new();
    let mut n_features: Option<usize> = None;

    for (row_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(delimiter).map(|c| c.trim()).collect();
        if cells.len() < 2 {
            return Err(Error::Format(format!(
                "row {row_idx}: need a label and at least one value"
            )));
        }
        let label_val: f64 = cells[0].parse().map_err(|_| {
            Error::Format(format!("row {row_idx}, column 0: non-numeric label '{}'", cells[0]))
        })?;
        if label_val.fract() != 0.0 {
            return Err(Error::Format(format!(
                "row {row_idx}, column 0: label {label_val} is not integer-valued"
            )));
        }
        raw_labels.push(label_val as i64);

        let width = cells.len() - 1;
        match n_features {
            None => n_features = Some(width),
            Some(w) if w != width => {
                return Err(Error::Format(format!(
                    "row {row_idx}: {width} values but earlier rows have {w}"
                )))
            }
            _ => {}
        }
        for (col, cell) in cells[1..].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Format(format!(
                    "row {row_idx}, column {}: non-numeric cell '{cell}'",
                    col + 1
                ))
            })?;
            features.push(v);
        }
    }

    let n_features =
        n_features.ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?;
    let distinct: Vec<i64> = raw_labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| distinct.binary_search(l).unwrap())
        .collect();
    Dataset::new(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into()),
        features,
        vec![n_features, 1],
        labels,
        distinct.len(),
        Domain::Series,
        Some(distinct),
    )
}

// ---------------------------------------------------------------------------
// NPY tensors
// ---------------------------------------------------------------------------

/// Load an NPY tensor: unsigned-byte data is scaled by 1/255, float data is
/// passed through.
pub fn load_npy(path: &Path) -> Result<(Vec<f64>, Vec<usize>)> {
    let arr = npy::read(path)?;
    let data = match arr.dtype {
        Dtype::U1 => arr.data.iter().map(|&b| b / 255.0).collect(),
        _ => arr.data,
    };
    Ok((data, arr.shape))
}

// ---------------------------------------------------------------------------
// Synthetic datasets
// ---------------------------------------------------------------------------

fn normal_draw(rng: &mut impl RngCore) -> f64 {
    draw_standard(2.0, rng) * std::f64::consts::FRAC_1_SQRT_2
}

/// Isotropic Gaussian blobs, one center per class, centers pairwise at least
/// `class_separation` apart. Series domain (unclipped).
pub fn synth_gaussians(
    n_per_class: usize,
    n_classes: usize,
    n_features: usize,
    class_separation: f64,
    stream: RngStream,
) -> Result<Dataset> {
    if n_per_class < 1 || n_classes < 1 || n_features < 1 {
        return Err(Error::Parameter("all synth_gaussians counts must be >= 1".into()));
    }
    if !(class_separation > 0.0) {
        return Err(Error::Parameter("class_separation must be > 0".into()));
    }
    // center for class c: class_separation * (1 + c / d) along axis c mod d
    let mut centers = vec![vec![0.0; n_features]; n_classes];
    for (c, center) in centers.iter_mut().enumerate() {
        let axis = c % n_features;
        let ring = (c / n_features) as f64;
        center[axis] = class_separation * (1.0 + ring);
    }
    let mut rng = stream.rng();
    let mut features = Vec::with_capacity(n_per_class * n_classes * n_features);
    let mut labels = Vec::with_capacity(n_per_class * n_classes);
    for c in 0..n_classes {
        for _ in 0..n_per_class {
            for j in 0..n_features {
                features.push(centers[c][j] + normal_draw(&mut rng));
            }
            labels.push(c);
        }
    }
    Dataset::new(
        "synth_gaussians",
        features,
        vec![n_features, 1],
        labels,
        n_classes,
        Domain::Series,
        None,
    )
}

/// Synthetic images: one high-contrast "ink" template per class (each pixel
/// inked with probability 1/2), samples are the template plus small Gaussian
/// jitter, clipped to [0,1]. Image domain; a desk-scale stand-in when real
/// image files are absent.
pub fn synth_images(
    n_per_class: usize,
    n_classes: usize,
    shape: &[usize],
    jitter: f64,
    stream: RngStream,
) -> Result<Dataset> {
    if n_per_class < 1 || n_classes < 1 {
        return Err(Error::Parameter("all synth_images counts must be >= 1".into()));
    }
    let n_features: usize = shape.iter().product();
    if n_features == 0 {
        return Err(Error::Parameter(format!("empty sample shape {shape:?}")));
    }
    if !(jitter >= 0.0) {
        return Err(Error::Parameter("jitter must be >= 0".into()));
    }
    let mut template_rng = stream.derive("templates", 0).rng();
    let ink_fraction = 0.12;
    let templates: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            (0..n_features)
                .map(|_| {
                    let u = (template_rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    if u < ink_fraction {
                        // ink intensity in [0.6, 1.0]
                        let v = (template_rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                        0.6 + 0.4 * v
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let mut rng = stream.derive("samples", 0).rng();
    let mut features = Vec::with_capacity(n_per_class * n_classes * n_features);
    let mut labels = Vec::with_capacity(n_per_class * n_classes);
    for (c, template) in templates.iter().enumerate() {
        for _ in 0..n_per_class {
            for &t in template {
                features.push((t + jitter * normal_draw(&mut rng)).clamp(0.0, 1.0));
            }
            labels.push(c);
        }
    }
    Dataset::new(
        "synth_images",
        features,
        shape.to_vec(),
        labels,
        n_classes,
        Domain::Image,
        None,
    )
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

/// Disjoint shuffled partition into `floor(fraction * n)` and the remainder.
pub fn split(dataset: &Dataset, fraction: f64, stream: RngStream) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let n = dataset.n_samples();
    let n_first = (fraction * n as f64).floor() as usize;
    if n_first == 0 || n_first == n {
        return Err(Error::Parameter(format!(
            "split of {n} samples at fraction {fraction} empties one side"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    shuffle(&mut indices, &mut stream.rng());
    let first = dataset.subset(&indices[..n_first], format!("{}/split-a", dataset.name))?;
    let second = dataset.subset(&indices[n_first..], format!("{}/split-b", dataset.name))?;
    Ok((first, second))
}

/// Fisher-Yates shuffle driven by the given generator.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        // rejection sampling keeps the index unbiased
        let bound = (i + 1) as u64;
        let zone = u64::MAX - (u64::MAX % bound);
        let j = loop {
            let r = rng.next_u64();
            if r < zone {
                break (r % bound) as usize;
            }
        };
        items.swap(i, j);
    }
}

// ---------------------------------------------------------------------------
// Persistence: NPY pair + JSON sidecar
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    name: String,
    shape: Vec<usize>,
    domain: Domain,
    n_classes: usize,
    label_map: Option<Vec<i64>>,
    /// Reserved for per-channel scaling of multi-channel images; unused.
    per_channel_scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_spec: Option<serde_json::Value>,
}

/// Persist a dataset as `<stem>.features.npy`, `<stem>.labels.npy` and a
/// `<stem>.json` sidecar; returns the sidecar path. `noise_spec`, when given,
/// is recorded verbatim in the sidecar.
pub fn save_dataset(
    dataset: &Dataset,
    dir: &Path,
    stem: &str,
    noise_spec: Option<serde_json::Value>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut full_shape = vec![dataset.n_samples()];
    full_shape.extend_from_slice(&dataset.shape);
    let features = NpyArray::new(full_shape, Dtype::F8, dataset.features.clone())?;
    npy::write(&dir.join(format!("{stem}.features.npy")), &features)?;
    let labels = NpyArray::new(
        vec![dataset.n_samples()],
        Dtype::I8,
        dataset.labels.iter().map(|&l| l as f64).collect(),
    )?;
    npy::write(&dir.join(format!("{stem}.labels.npy")), &labels)?;

    let sidecar = Sidecar {
        name: dataset.name.clone(),
        shape: dataset.shape.clone(),
        domain: dataset.domain,
        n_classes: dataset.n_classes,
        label_map: dataset.label_map.clone(),
        per_channel_scale: None,
        noise_spec,
    };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(path)
}

/// Load a dataset from its sidecar path (as written by [`save_dataset`]).
pub fn load_dataset(sidecar_path: &Path) -> Result<Dataset> {
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path)?)?;
    let stem = sidecar_path
        .file_stem()
        .ok_or_else(|| Error::Format("sidecar path has no file stem".into()))?
        .to_string_lossy();
    let dir = sidecar_path.parent().unwrap_or_else(|| Path::new("."));
    let features = npy::read(&dir.join(format!("{stem}.features.npy")))?;
    let labels = npy::read(&dir.join(format!("{stem}.labels.npy")))?;
    if features.shape.first() != Some(&labels.data.len()) {
        return Err(Error::Format(format!(
            "feature file has {:?} samples but label file has {}",
            features.shape.first(),
            labels.data.len()
        )));
    }
    Dataset::new(
        sidecar.name,
        features.data,
        sidecar.shape,
        labels.data.iter().map(|&l| l as usize).collect(),
        sidecar.n_classes,
        sidecar.domain,
        sidecar.label_map,
    )
}

/// Read back just the recorded noise spec, if any.
pub fn load_noise_spec(sidecar_path: &Path) -> Result<Option<serde_json::Value>> {
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path)?)?;
    Ok(sidecar.noise_spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_pair(n: usize, rows: usize, cols: usize) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&(n as u32).to_be_bytes());
        img.extend_from_slice(&(rows as u32).to_be_bytes());
        img.extend_from_slice(&(cols as u32).to_be_bytes());
        for i in 0..n * rows * cols {
            img.push((i % 256) as u8);
        }
        let mut lbl = Vec::new();
        lbl.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        lbl.extend_from_slice(&(n as u32).to_be_bytes());
        for i in 0..n {
            lbl.push((i % 10) as u8);
        }
        (img, lbl)
    }

    fn write_pair(dir: &Path, img: &[u8], lbl: &[u8]) -> (PathBuf, PathBuf) {
        let ip = dir.join("images-idx3-ubyte");
        let lp = dir.join("labels-idx1-ubyte");
        fs::File::create(&ip).unwrap().write_all(img).unwrap();
        fs::File::create(&lp).unwrap().write_all(lbl).unwrap();
        (ip, lp)
    }

    #[test]
    fn idx_loads_mnist_style_pair() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = idx_pair(20, 28, 28);
        let (ip, lp) = write_pair(dir.path(), &img, &lbl);
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.n_samples(), 20);
        assert_eq!(ds.shape(), &[28, 28, 1]);
        assert_eq!(ds.n_classes(), 10);
        assert_eq!(ds.domain(), Domain::Image);
        assert!(ds.features().iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert_eq!(ds.row(0)[255], 1.0); // byte 255 scales to 1
    }

    #[test]
    fn idx_wrong_magic_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let (img, _) = idx_pair(3, 2, 2);
        // pass the image file where labels are expected
        let (ip, lp) = write_pair(dir.path(), &img, &img);
        let err = load_idx(&ip, &lp).unwrap_err();
        assert!(matches!(&err, Error::Format(m) if m.contains("unexpected magic")), "{err}");
    }

    #[test]
    fn idx_count_mismatch_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = idx_pair(3, 2, 2);
        let (_, lp2) = {
            let (mut l2, _) = (lbl.clone(), ());
            l2[7] = 4; // claim 4 labels
            write_pair(dir.path(), &img, &l2)
        };
        let ip = dir.path().join("images-idx3-ubyte");
        assert!(matches!(load_idx(&ip, &lp2), Err(Error::Format(m)) if m.contains("count")));

        let (img_trunc, lbl_ok) = idx_pair(3, 2, 2);
        let (ip3, lp3) = write_pair(dir.path(), &img_trunc[..20].to_vec(), &lbl_ok);
        assert!(matches!(load_idx(&ip3, &lp3), Err(Error::Format(m)) if m.contains("truncated")));
    }

    #[test]
    fn series_csv_remaps_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("two.csv");
        fs::write(&p, "1,0.5,0.5\n-1,1.0,2.0\n").unwrap();
        let ds = load_series_csv(&p, ',').unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.domain(), Domain::Series);
        // sorted original labels: -1 -> 0, 1 -> 1
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.label_map(), Some(&[-1i64, 1][..]));
    }

    #[test]
    fn series_csv_ecg_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ecg.tsv");
        let mut text = String::new();
        for i in 0..100 {
            let label = if i % 2 == 0 { -1 } else { 1 };
            text.push_str(&label.to_string());
            for j in 0..96 {
                text.push_str(&format!("\t{}.0", (i + j) % 7));
            }
            text.push('\n');
        }
        fs::write(&p, text).unwrap();
        let ds = load_series_csv(&p, '\t').unwrap();
        assert_eq!(ds.n_samples(), 100);
        assert_eq!(ds.n_features(), 96);
        assert_eq!(ds.n_classes(), 2);
    }

    #[test]
    fn series_csv_ragged_row_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ragged.csv");
        fs::write(&p, "0,1,2,3\n1,4,5\n").unwrap();
        let err = load_series_csv(&p, ',').unwrap_err();
        assert!(matches!(&err, Error::Format(m) if m.contains("row 1")), "{err}");
    }

    #[test]
    fn npy_u8_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ones.npy");
        let arr = NpyArray::new(vec![4, 2, 2], Dtype::U1, vec![255.0; 16]).unwrap();
        npy::write(&p, &arr).unwrap();
        let (data, shape) = load_npy(&p).unwrap();
        assert_eq!(shape, vec![4, 2, 2]);
        assert!(data.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn synth_gaussians_counts_and_determinism() {
        let ds = synth_gaussians(1, 3, 5, 1.0, RngStream::new(1)).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.labels(), &[0, 1, 2]);

        let a = synth_gaussians(50, 2, 4, 3.0, RngStream::new(2)).unwrap();
        let b = synth_gaussians(50, 2, 4, 3.0, RngStream::new(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synth_gaussians_is_linearly_separable() {
        let ds = synth_gaussians(100, 2, 2, 10.0, RngStream::new(3)).unwrap();
        // reference logistic separator trained by plain gradient descent
        let mut w = vec![0.0; 3]; // bias last
        for _ in 0..500 {
            let mut grad = vec![0.0; 3];
            for i in 0..ds.n_samples() {
                let x = ds.row(i);
                let z = w[0] * x[0] + w[1] * x[1] + w[2];
                let p = 1.0 / (1.0 + (-z).exp());
                let err = p - ds.labels()[i] as f64;
                grad[0] += err * x[0];
                grad[1] += err * x[1];
                grad[2] += err;
            }
            for j in 0..3 {
                w[j] -= 0.05 * grad[j] / ds.n_samples() as f64;
            }
        }
        let correct = (0..ds.n_samples())
            .filter(|&i| {
                let x = ds.row(i);
                let z = w[0] * x[0] + w[1] * x[1] + w[2];
                (z > 0.0) == (ds.labels()[i] == 1)
            })
            .count();
        assert!(correct as f64 / ds.n_samples() as f64 >= 0.99);
    }

    #[test]
    fn synth_images_stays_in_range() {
        let ds = synth_images(5, 3, &[8, 8, 1], 0.1, RngStream::new(4)).unwrap();
        assert_eq!(ds.n_samples(), 15);
        assert_eq!(ds.domain(), Domain::Image);
        assert!(ds.features().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn split_sizes_partition_and_determinism() {
        let ds = synth_gaussians(5, 2, 3, 2.0, RngStream::new(5)).unwrap();
        let (a, b) = split(&ds, 0.8, RngStream::new(6)).unwrap();
        assert_eq!(a.n_samples(), 8);
        assert_eq!(b.n_samples(), 2);

        // union of both halves is the original multiset of (row, label) pairs
        let mut orig: Vec<(Vec<u8>, usize)> = (0..ds.n_samples())
            .map(|i| {
                (
                    ds.row(i).iter().flat_map(|x| x.to_le_bytes()).collect(),
                    ds.labels()[i],
                )
            })
            .collect();
        let mut both: Vec<(Vec<u8>, usize)> = (0..a.n_samples())
            .map(|i| {
                (
                    a.row(i).iter().flat_map(|x| x.to_le_bytes()).collect(),
                    a.labels()[i],
                )
            })
            .chain((0..b.n_samples()).map(|i| {
                (
                    b.row(i).iter().flat_map(|x| x.to_le_bytes()).collect(),
                    b.labels()[i],
                )
            }))
            .collect();
        orig.sort();
        both.sort();
        assert_eq!(orig, both);

        let (a2, _) = split(&ds, 0.8, RngStream::new(6)).unwrap();
        assert_eq!(a.features(), a2.features());

        assert!(split(&ds, 0.05, RngStream::new(6)).is_err());
    }

    #[test]
    fn dataset_persistence_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth_images(3, 2, &[4, 4, 1], 0.05, RngStream::new(7)).unwrap();
        let sidecar = save_dataset(&ds, dir.path(), "demo", Some(serde_json::json!({"kind": "clean"}))).unwrap();
        let back = load_dataset(&sidecar).unwrap();
        assert_eq!(ds, back);
        let spec = load_noise_spec(&sidecar).unwrap().unwrap();
        assert_eq!(spec["kind"], "clean");
    }

    #[test]
    fn image_range_enforced_on_construction() {
        let res = Dataset::new("bad", vec![1.5], vec![1], vec![0], 1, Domain::Image, None);
        assert!(res.is_err());
        let ok = Dataset::new("ok", vec![1.5], vec![1], vec![0], 1, Domain::Series, None);
        assert!(ok.is_ok());
    }
}
