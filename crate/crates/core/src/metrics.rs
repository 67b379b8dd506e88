//! Image- and link-quality metrics, and the per-run report record.

use crate::bitquant::BitPayload;
use crate::chanest::RoleMse;
use crate::codec::FeatureTensor;
use crate::image::Image;
use crate::{Result, SemcomError};

/// SSIM window: 11×11 Gaussian, sigma 1.5.
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Peak signal-to-noise ratio in dB against a 255 peak; +inf for
/// identical images.
pub fn psnr(orig: &Image, recon: &Image) -> Result<f64> {
    check_dims(orig, recon)?;
    let mse: f64 = orig
        .samples()
        .iter()
        .zip(recon.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / orig.len() as f64;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (255.0 * 255.0 / mse).log10())
    }
}

/// Mean structural similarity over all fully-interior 11×11 windows.
pub fn ssim(orig: &Image, recon: &Image) -> Result<f64> {
    check_dims(orig, recon)?;
    if orig.width() < SSIM_WINDOW || orig.height() < SSIM_WINDOW {
        return Err(SemcomError::DimensionMismatch(format!(
            "image {}x{} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window",
            orig.width(),
            orig.height()
        )));
    }
    let w = orig.width();
    let h = orig.height();
    let x = orig.samples();
    let y = recon.samples();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let kernel = gaussian_kernel();
    let mu_x = separable_valid(x, w, h, &kernel);
    let mu_y = separable_valid(y, w, h, &kernel);
    let m_xx = separable_valid(&xx, w, h, &kernel);
    let m_yy = separable_valid(&yy, w, h, &kernel);
    let m_xy = separable_valid(&xy, w, h, &kernel);

    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = m_xx[i] - mx * mx;
        let vy = m_yy[i] - my * my;
        let cov = m_xy[i] - mx * my;
        total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(total / mu_x.len() as f64)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        *v = (-(i as f64 - mid).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Valid-mode separable windowed weighted mean: horizontal pass then
/// vertical, output (h-10)×(w-10).
fn separable_valid(data: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * data[r * w + c + k];
            }
            horiz[r * ow + c] = acc;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(r + k) * ow + c];
            }
            out[r * ow + c] = acc;
        }
    }
    out
}

/// Per-channel feature error E_i = ‖k_i − k_i′‖₂.
pub fn feature_error(a: &FeatureTensor, b: &FeatureTensor) -> Result<Vec<f64>> {
    if a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width() {
        return Err(SemcomError::DimensionMismatch(
            "feature tensors differ in shape".into(),
        ));
    }
    let mut out = Vec::with_capacity(a.channels());
    for i in 0..a.channels() {
        let mut sq = 0.0;
        for n in 0..a.height() {
            for m in 0..a.width() {
                let d = a.get(i, n, m) - b.get(i, n, m);
                sq += d * d;
            }
        }
        out.push(sq.sqrt());
    }
    Ok(out)
}

/// Fraction of differing bits between two payloads of identical shape.
pub fn bit_error_rate(tx: &BitPayload, rx: &BitPayload) -> Result<f64> {
    if tx.channels != rx.channels
        || tx.words.len() != rx.words.len()
        || tx.word_len() != rx.word_len()
    {
        return Err(SemcomError::DimensionMismatch(
            "payloads differ in shape".into(),
        ));
    }
    let mut diff = 0usize;
    let mut total = 0usize;
    for (a, b) in tx.words.iter().zip(&rx.words) {
        total += a.len();
        diff += a.iter().zip(b).filter(|(x, y)| x != y).count();
    }
    Ok(diff as f64 / total as f64)
}

/// Everything measured for one link realization.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scheme: String,
    pub snr_db: f64,
    pub seed: u64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub ber: f64,
    /// Per-channel total error E_i = ‖k_i − k_i′‖.
    pub feature_errors: Vec<f64>,
    /// Per-channel bit-quantization error E_{b,i}.
    pub quantization_errors: Vec<f64>,
    /// Per-channel channel-transmission error E_{h,i}.
    pub channel_errors: Vec<f64>,
    pub est_mse: RoleMse,
}

impl RunReport {
    pub const CSV_HEADER: &'static str = "scheme,snr_db,seed,psnr_db,ssim,ber,mean_Ei,mean_Eb,mean_Eh,mse_pilot,mse_green,mse_regular";

    pub fn csv_row(&self) -> String {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            fmt_f64(self.snr_db),
            self.seed,
            fmt_f64(self.psnr_db),
            fmt_f64(self.ssim),
            fmt_f64(self.ber),
            fmt_f64(mean(&self.feature_errors)),
            fmt_f64(mean(&self.quantization_errors)),
            fmt_f64(mean(&self.channel_errors)),
            fmt_f64(self.est_mse.pilot),
            fmt_f64(self.est_mse.important),
            fmt_f64(self.est_mse.regular),
        )
    }
}

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn check_dims(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(SemcomError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}
