//! Block-transform semantic codec with shared-codebook vector quantization.
//!
//! The encoder applies an orthonormal 2-D DCT-II to non-overlapping B×B
//! patches; coefficient (u, v) of every patch forms feature channel
//! i = u·B + v, so a B×B patch grid of H×W patches yields a B²×H×W
//! feature tensor. Features are matched to the nearest entry of a shared
//! codebook at the transmitter and rematched at the receiver: any
//! perturbation smaller than half an entry's minimum distance to the rest
//! of the codebook is corrected exactly.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::image::Image;
use crate::{Result, SemcomError};

/// Magic bytes of the codebook file format.
const CODEBOOK_MAGIC: &[u8; 4] = b"VQCB";
const CODEBOOK_VERSION: u16 = 1;

/// A D×H×W real feature tensor: D channels over an H×W patch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            values: vec![0.0; channels * height * width],
        }
    }

    pub fn from_values(
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(SemcomError::DimensionMismatch(format!(
                "expected {} values for {}x{}x{}, got {}",
                channels * height * width,
                channels,
                height,
                width,
                values.len()
            )));
        }
        Ok(Self { channels, height, width, values })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.values[(channel * self.height + row) * self.width + col]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, v: f64) {
        self.values[(channel * self.height + row) * self.width + col] = v;
    }

    /// The D-dimensional vector across channels at patch position (row, col).
    pub fn position_vector(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.channels).map(|i| self.get(i, row, col)).collect()
    }
}

/// Orthonormal DCT-II basis matrix for size `b`.
fn dct_matrix(b: usize) -> Vec<f64> {
    let mut c = vec![0.0; b * b];
    let norm0 = (1.0 / b as f64).sqrt();
    let norm = (2.0 / b as f64).sqrt();
    for u in 0..b {
        for x in 0..b {
            let a = if u == 0 { norm0 } else { norm };
            c[u * b + x] =
                a * (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2 * b) as f64).cos();
        }
    }
    c
}

/// Encodes an image into a B²×H×W feature tensor via per-patch
/// orthonormal 2-D DCT-II. Channel u·B+v holds coefficient (u, v).
pub fn dct_encode(img: &Image, patch: usize) -> Result<FeatureTensor> {
    if patch == 0 || img.width() % patch != 0 || img.height() % patch != 0 {
        return Err(SemcomError::DimensionMismatch(format!(
            "image {}x{} not divisible by patch size {}",
            img.width(),
            img.height(),
            patch
        )));
    }
    let h = img.height() / patch;
    let w = img.width() / patch;
    let c = dct_matrix(patch);
    let mut out = FeatureTensor::zeros(patch * patch, h, w);
    let mut block = vec![0.0; patch * patch];
    let mut tmp = vec![0.0; patch * patch];
    for n in 0..h {
        for m in 0..w {
            for y in 0..patch {
                for x in 0..patch {
                    block[y * patch + x] = img.get(n * patch + y, m * patch + x);
                }
            }
            // F = C · X · Cᵀ
            for u in 0..patch {
                for x in 0..patch {
                    let mut acc = 0.0;
                    for y in 0..patch {
                        acc += c[u * patch + y] * block[y * patch + x];
                    }
                    tmp[u * patch + x] = acc;
                }
            }
            for u in 0..patch {
                for v in 0..patch {
                    let mut acc = 0.0;
                    for x in 0..patch {
                        acc += tmp[u * patch + x] * c[v * patch + x];
                    }
                    out.set(u * patch + v, n, m, acc);
                }
            }
        }
    }
    Ok(out)
}

/// Inverse block DCT without the final clamp; returns row-major samples.
/// Used wherever the exact linear inverse is needed (gradients, round-trip
/// checks).
pub fn dct_decode_raw(feat: &FeatureTensor, patch: usize) -> Result<(usize, usize, Vec<f64>)> {
    if feat.channels() != patch * patch {
        return Err(SemcomError::DimensionMismatch(format!(
            "tensor has {} channels, patch size {} needs {}",
            feat.channels(),
            patch,
            patch * patch
        )));
    }
    let height = feat.height() * patch;
    let width = feat.width() * patch;
    let c = dct_matrix(patch);
    let mut samples = vec![0.0; width * height];
    let mut coeff = vec![0.0; patch * patch];
    let mut tmp = vec![0.0; patch * patch];
    for n in 0..feat.height() {
        for m in 0..feat.width() {
            for u in 0..patch {
                for v in 0..patch {
                    coeff[u * patch + v] = feat.get(u * patch + v, n, m);
                }
            }
            // X = Cᵀ · F · C
            for y in 0..patch {
                for v in 0..patch {
                    let mut acc = 0.0;
                    for u in 0..patch {
                        acc += c[u * patch + y] * coeff[u * patch + v];
                    }
                    tmp[y * patch + v] = acc;
                }
            }
            for y in 0..patch {
                for x in 0..patch {
                    let mut acc = 0.0;
                    for v in 0..patch {
                        acc += tmp[y * patch + v] * c[v * patch + x];
                    }
                    samples[(n * patch + y) * width + (m * patch + x)] = acc;
                }
            }
        }
    }
    Ok((width, height, samples))
}

/// Inverse block DCT with samples clamped to `[0, 255]`.
pub fn dct_decode(feat: &FeatureTensor, patch: usize) -> Result<Image> {
    let (width, height, samples) = dct_decode_raw(feat, patch)?;
    Image::from_samples(width, height, samples)
}

/// The shared codebook: J real D-dimensional entries plus the component
/// value range used by the uniform bit quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    entries: Vec<Vec<f64>>,
    dim: usize,
    value_range: (f64, f64),
}

impl Codebook {
    /// Validates entries (J >= 2, equal dimension, pairwise distinct) and
    /// derives the component value range.
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(SemcomError::InvalidCodebook(format!(
                "need at least 2 entries, got {}",
                entries.len()
            )));
        }
        let dim = entries[0].len();
        if dim == 0 || entries.iter().any(|e| e.len() != dim) {
            return Err(SemcomError::InvalidCodebook(
                "entries must share a nonzero dimension".into(),
            ));
        }
        for (j, e) in entries.iter().enumerate() {
            for (k, f) in entries.iter().enumerate().skip(j + 1) {
                if e == f {
                    return Err(SemcomError::InvalidCodebook(format!(
                        "entries {j} and {k} are identical"
                    )));
                }
            }
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for e in &entries {
            for &v in e {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if !(min < max) {
            return Err(SemcomError::InvalidCodebook(
                "degenerate value range".into(),
            ));
        }
        Ok(Self { entries, dim, value_range: (min, max) })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, j: usize) -> &[f64] {
        &self.entries[j]
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    /// Index of the Euclidean-nearest entry; ties break to the lowest index.
    pub fn nearest(&self, v: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, e) in self.entries.iter().enumerate() {
            let d = sq_dist(v, e);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    /// Minimum Euclidean distance from entry `i` to any other entry.
    pub fn dmin(&self, i: usize) -> Result<f64> {
        if i >= self.entries.len() {
            return Err(SemcomError::IndexOutOfRange { index: i, len: self.entries.len() });
        }
        let mut best = f64::INFINITY;
        for (j, e) in self.entries.iter().enumerate() {
            if j != i {
                best = best.min(sq_dist(e, &self.entries[i]));
            }
        }
        Ok(best.sqrt())
    }

    /// Serializes the codebook: magic "VQCB", version u16, J u32, D u32,
    /// range min/max f64, then J·D entry components, all little-endian.
    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(22 + self.entries.len() * self.dim * 8);
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.value_range.0.to_le_bytes());
        out.extend_from_slice(&self.value_range.1.to_le_bytes());
        for e in &self.entries {
            for &v in e {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let data = fs::read(path)?;
        if data.len() < 30 || &data[0..4] != CODEBOOK_MAGIC {
            return Err(SemcomError::BadFileFormat("not a VQCB codebook file".into()));
        }
        let version = u16::from_le_bytes([data[4], data[5]]);
        if version != CODEBOOK_VERSION {
            return Err(SemcomError::BadFileFormat(format!(
                "unsupported codebook version {version}"
            )));
        }
        let j = u32::from_le_bytes(data[6..10].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(data[10..14].try_into().unwrap()) as usize;
        let min = f64::from_le_bytes(data[14..22].try_into().unwrap());
        let max = f64::from_le_bytes(data[22..30].try_into().unwrap());
        if data.len() != 30 + j * d * 8 {
            return Err(SemcomError::BadFileFormat(format!(
                "codebook file length {} does not match J={j}, D={d}",
                data.len()
            )));
        }
        let mut entries = Vec::with_capacity(j);
        let mut pos = 30;
        for _ in 0..j {
            let mut e = Vec::with_capacity(d);
            for _ in 0..d {
                e.push(f64::from_le_bytes(data[pos..pos + 8].try_into().unwrap()));
                pos += 8;
            }
            entries.push(e);
        }
        let cb = Codebook::new(entries)?;
        if cb.value_range != (min, max) {
            return Err(SemcomError::BadFileFormat(
                "stored value range disagrees with entries".into(),
            ));
        }
        Ok(cb)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Replaces every per-position D-vector by its nearest codebook entry.
pub fn vq_quantize(tensor: &FeatureTensor, cb: &Codebook) -> Result<FeatureTensor> {
    if cb.dim() != tensor.channels() {
        return Err(SemcomError::DimensionMismatch(format!(
            "codebook dimension {} != tensor channels {}",
            cb.dim(),
            tensor.channels()
        )));
    }
    let mut out = tensor.clone();
    let mut v = vec![0.0; tensor.channels()];
    for n in 0..tensor.height() {
        for m in 0..tensor.width() {
            for (i, slot) in v.iter_mut().enumerate() {
                *slot = tensor.get(i, n, m);
            }
            let j = cb.nearest(&v);
            for (i, &c) in cb.entry(j).iter().enumerate() {
                out.set(i, n, m, c);
            }
        }
    }
    Ok(out)
}

/// Receiver-side rematching of a distorted tensor onto the shared
/// codebook. Same nearest-neighbor contract as [`vq_quantize`]: a
/// per-position error below half the entry's minimum distance is
/// corrected exactly.
pub fn rematch(received: &FeatureTensor, cb: &Codebook) -> Result<FeatureTensor> {
    vq_quantize(received, cb)
}

/// Result of a Lloyd training run: the codebook plus the distortion
/// recorded after every assignment step.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub codebook: Codebook,
    pub distortion: Vec<f64>,
}

/// Trains a codebook by the generalized Lloyd algorithm: seeded k-means++
/// initialization, then assign/centroid iterations until the relative
/// distortion change drops below `tol` or `max_iters` is reached. Empty
/// clusters are re-seeded from the farthest point of the largest cluster.
pub fn train_codebook(
    vectors: &[Vec<f64>],
    entries: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<TrainOutcome> {
    if entries < 2 {
        return Err(SemcomError::InvalidCodebook(format!(
            "need at least 2 entries, got {entries}"
        )));
    }
    if vectors.len() < entries {
        return Err(SemcomError::InsufficientTrainingData {
            have: vectors.len(),
            want: entries,
        });
    }
    let dim = vectors[0].len();
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(SemcomError::DimensionMismatch(
            "training vectors must share a nonzero dimension".into(),
        ));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(vectors, entries, &mut rng);
    let mut assign = vec![0usize; vectors.len()];
    let mut distortion = Vec::new();

    for _ in 0..max_iters {
        // Assignment step (ties to lowest centroid index).
        let mut total = 0.0;
        for (vi, v) in vectors.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = sq_dist(v, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            assign[vi] = best;
            total += best_d;
        }
        let total = total / vectors.len() as f64;
        let done = match distortion.last() {
            Some(&prev) if prev > 0.0 => (prev - total) / prev < tol,
            Some(&prev) => total >= prev,
            None => false,
        };
        distortion.push(total);
        if done {
            break;
        }

        // Centroid update.
        let mut sums = vec![vec![0.0; dim]; entries];
        let mut counts = vec![0usize; entries];
        for (vi, v) in vectors.iter().enumerate() {
            counts[assign[vi]] += 1;
            for (s, &x) in sums[assign[vi]].iter_mut().zip(v) {
                *s += x;
            }
        }
        for j in 0..entries {
            if counts[j] > 0 {
                for s in &mut sums[j] {
                    *s /= counts[j] as f64;
                }
                centroids[j] = sums[j].clone();
            }
        }
        // Re-seed empty clusters from the farthest point of the largest
        // cluster.
        for j in 0..entries {
            if counts[j] == 0 {
                let largest = (0..entries).max_by_key(|&k| counts[k]).unwrap();
                let far = vectors
                    .iter()
                    .enumerate()
                    .filter(|(vi, _)| assign[*vi] == largest)
                    .max_by(|(_, a), (_, b)| {
                        sq_dist(a, &centroids[largest])
                            .partial_cmp(&sq_dist(b, &centroids[largest]))
                            .unwrap()
                    })
                    .map(|(vi, _)| vi)
                    .unwrap();
                centroids[j] = vectors[far].clone();
                counts[j] = 1;
                counts[largest] -= 1;
                assign[far] = j;
            }
        }
    }

    Ok(TrainOutcome {
        codebook: Codebook::new(centroids)?,
        distortion,
    })
}

fn kmeans_pp_init(vectors: &[Vec<f64>], entries: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(entries);
    let first = rng.random_range(0..vectors.len());
    centroids.push(vectors[first].clone());
    let mut dists: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < entries {
        let total: f64 = dists.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = vectors.len() - 1;
            for (i, &d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining points coincide with existing centroids.
            rng.random_range(0..vectors.len())
        };
        centroids.push(vectors[pick].clone());
        let last = centroids.last().unwrap();
        for (i, v) in vectors.iter().enumerate() {
            dists[i] = dists[i].min(sq_dist(v, last));
        }
    }
    centroids
}
