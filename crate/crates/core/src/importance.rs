//! Gradient-based per-channel feature importance.
//!
//! The reconstruction loss is L = (1/l)·‖z′ − z‖². Because the block
//! transform is orthonormal, the gradient of L with respect to the
//! quantized features K is (2/l)·(K − z_e) in closed form. Global average
//! pooling of that gradient over the patch grid gives one weight per
//! channel; channels are ranked by |ω| descending for resource mapping.

use crate::codec::FeatureTensor;
use crate::image::Image;
use crate::{Result, SemcomError};

/// Per-channel importance weights and the derived transmission ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    pub omega: Vec<f64>,
    /// Channel indices, most important first.
    pub ranking: Vec<usize>,
}

impl ImportanceWeights {
    /// The identity ranking used when importance-aware mapping is off.
    pub fn identity(channels: usize) -> Self {
        Self {
            omega: vec![0.0; channels],
            ranking: (0..channels).collect(),
        }
    }

    /// CSV diagnostic row: ranking as comma-separated channel indices.
    pub fn ranking_csv(&self) -> String {
        self.ranking
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Mean squared pixel error L = (1/l)·‖z′ − z‖².
pub fn reconstruction_loss(z: &Image, z_prime: &Image) -> Result<f64> {
    if z.width() != z_prime.width() || z.height() != z_prime.height() {
        return Err(SemcomError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            z.width(),
            z.height(),
            z_prime.width(),
            z_prime.height()
        )));
    }
    Ok(loss_from_samples(z.samples(), z_prime.samples()))
}

/// Loss over raw (possibly unclamped) sample vectors.
pub fn loss_from_samples(z: &[f64], z_prime: &[f64]) -> f64 {
    let sq: f64 = z.iter().zip(z_prime).map(|(a, b)| (b - a) * (b - a)).sum();
    sq / z.len() as f64
}

/// Analytic gradient of the reconstruction loss with respect to the
/// quantized features: (2/l)·(K − z_e).
pub fn feature_gradients(
    z_e: &FeatureTensor,
    quantized: &FeatureTensor,
    pixels: usize,
) -> Result<FeatureTensor> {
    if z_e.channels() != quantized.channels()
        || z_e.height() != quantized.height()
        || z_e.width() != quantized.width()
    {
        return Err(SemcomError::DimensionMismatch(
            "feature tensors differ in shape".into(),
        ));
    }
    let scale = 2.0 / pixels as f64;
    let values = quantized
        .values()
        .iter()
        .zip(z_e.values())
        .map(|(k, z)| scale * (k - z))
        .collect();
    FeatureTensor::from_values(z_e.channels(), z_e.height(), z_e.width(), values)
}

/// Global average pooling of the gradient per channel, then ranking by
/// |ω| descending with ties broken to the lower channel index.
pub fn importance_weights(grads: &FeatureTensor) -> ImportanceWeights {
    let per_channel = grads.height() * grads.width();
    let omega: Vec<f64> = (0..grads.channels())
        .map(|i| {
            let mut acc = 0.0;
            for n in 0..grads.height() {
                for m in 0..grads.width() {
                    acc += grads.get(i, n, m);
                }
            }
            acc / per_channel as f64
        })
        .collect();
    let mut ranking: Vec<usize> = (0..omega.len()).collect();
    ranking.sort_by(|&a, &b| {
        omega[b]
            .abs()
            .partial_cmp(&omega[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    ImportanceWeights { omega, ranking }
}
