//! End-to-end link execution: configuration, per-run chain, SNR sweeps.
//!
//! A run is fully determined by (config, seed): every random draw uses a
//! sub-seed derived from the master seed and a stage label, so toggling
//! one scheme flag never perturbs another stage's randomness.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::bitquant::{dequantize_features, quantize_features};
use crate::chanest::{bilinear_interpolate, equalize, estimation_error_stats, ls_estimate, RoleMse};
use crate::codec::{
    dct_decode, dct_encode, rematch, train_codebook, vq_quantize, Codebook, TrainOutcome,
};
use crate::grid::{build_layout, demap_payload, map_payload, GridLayout};
use crate::image::Image;
use crate::importance::{feature_gradients, importance_weights, ImportanceWeights};
use crate::metrics::{bit_error_rate, feature_error, psnr, ssim, RunReport};
use crate::phy::{channel_apply, draw_channel, ofdm_demodulate, ofdm_modulate};
use crate::{Result, SemcomError};

/// Known pilot symbol, unit energy.
pub const PILOT_SYMBOL: Complex64 = Complex64::new(
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
);

/// Built-in parameter profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Full-scale grid: 448×792, CP 72, FFT 1024.
    Paper,
    /// Small grid for fast runs: 56×72, CP 16, FFT 128.
    Desk,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(SemcomError::InvalidConfig(format!(
                "unknown profile {other:?} (expected desk or paper)"
            ))),
        }
    }
}

/// Transmission scheme toggles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    /// Importance-aware mapping: rank channels by gradient weight instead
    /// of identity order.
    pub fit: bool,
    /// Receiver-side codebook rematching.
    pub rematch: bool,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme { fit: true, rematch: true },
        Scheme { fit: false, rematch: true },
        Scheme { fit: true, rematch: false },
        Scheme { fit: false, rematch: false },
    ];

    pub fn name(&self) -> &'static str {
        match (self.fit, self.rematch) {
            (true, true) => "fit+rematch",
            (false, true) => "rematch",
            (true, false) => "fit",
            (false, false) => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fit+rematch" => Ok(Scheme { fit: true, rematch: true }),
            "rematch" => Ok(Scheme { fit: false, rematch: true }),
            "fit" => Ok(Scheme { fit: true, rematch: false }),
            "none" => Ok(Scheme { fit: false, rematch: false }),
            other => Err(SemcomError::InvalidConfig(format!(
                "unknown scheme {other:?} (expected fit+rematch, rematch, fit or none)"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full simulator configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub profile: Profile,
    // grid
    pub n_t: usize,
    pub n_f: usize,
    pub dt: usize,
    pub df: usize,
    // phy
    pub fft_size: usize,
    pub cp_len: usize,
    pub qam_order: usize,
    // channel
    pub l_taps: usize,
    pub decay: f64,
    pub rho: f64,
    // codec
    pub patch: usize,
    pub entries: usize,
    // bit quantizer
    pub bits: u32,
    // recorded metadata only; the simulation is sample-indexed
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    // optional file paths
    pub image: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl SimConfig {
    pub fn from_profile(profile: Profile) -> Self {
        let (n_t, n_f, fft_size, cp_len) = match profile {
            Profile::Paper => (448, 792, 1024, 72),
            Profile::Desk => (56, 72, 128, 16),
        };
        Self {
            profile,
            n_t,
            n_f,
            dt: 4,
            df: 6,
            fft_size,
            cp_len,
            qam_order: 16,
            l_taps: 12,
            decay: 3.0,
            rho: 0.999,
            patch: 4,
            entries: 1024,
            bits: 8,
            carrier_ghz: 2.4,
            bandwidth_mhz: 20.0,
            image: None,
            codebook: None,
            csv: None,
        }
    }

    /// Applies `section.key = value` lines from a flat config file.
    /// `#` starts a comment; unknown keys are rejected.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SemcomError::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets a single `section.key` to a value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| SemcomError::InvalidConfig(format!("bad value for {what}: {value}"));
        match key {
            "grid.n_t" => self.n_t = value.parse().map_err(|_| bad(key))?,
            "grid.n_f" => self.n_f = value.parse().map_err(|_| bad(key))?,
            "grid.dt" => self.dt = value.parse().map_err(|_| bad(key))?,
            "grid.df" => self.df = value.parse().map_err(|_| bad(key))?,
            "phy.fft_size" => self.fft_size = value.parse().map_err(|_| bad(key))?,
            "phy.cp_len" => self.cp_len = value.parse().map_err(|_| bad(key))?,
            "phy.qam_order" => self.qam_order = value.parse().map_err(|_| bad(key))?,
            "chan.l_taps" => self.l_taps = value.parse().map_err(|_| bad(key))?,
            "chan.decay" => self.decay = value.parse().map_err(|_| bad(key))?,
            "chan.rho" => self.rho = value.parse().map_err(|_| bad(key))?,
            "codec.patch" => self.patch = value.parse().map_err(|_| bad(key))?,
            "codec.entries" => self.entries = value.parse().map_err(|_| bad(key))?,
            "quant.bits" => self.bits = value.parse().map_err(|_| bad(key))?,
            "meta.carrier_ghz" => self.carrier_ghz = value.parse().map_err(|_| bad(key))?,
            "meta.bandwidth_mhz" => self.bandwidth_mhz = value.parse().map_err(|_| bad(key))?,
            "paths.image" => self.image = Some(PathBuf::from(value)),
            "paths.codebook" => self.codebook = Some(PathBuf::from(value)),
            "paths.csv" => self.csv = Some(PathBuf::from(value)),
            other => {
                return Err(SemcomError::InvalidConfig(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Consistency checks run before any simulation.
    pub fn validate(&self) -> Result<()> {
        if self.qam_order != 16 {
            return Err(SemcomError::InvalidConfig(format!(
                "qam_order {} unsupported (only 16)",
                self.qam_order
            )));
        }
        if self.l_taps == 0 || self.cp_len + 1 < self.l_taps {
            return Err(SemcomError::InvalidConfig(format!(
                "cp_len {} must be >= l_taps - 1 = {}",
                self.cp_len,
                self.l_taps.saturating_sub(1)
            )));
        }
        if self.fft_size < self.n_f {
            return Err(SemcomError::InvalidConfig(format!(
                "fft_size {} below subcarrier count {}",
                self.fft_size, self.n_f
            )));
        }
        if !(self.rho.abs() <= 1.0) || !(self.decay > 0.0) {
            return Err(SemcomError::InvalidConfig(
                "need |rho| <= 1 and decay > 0".into(),
            ));
        }
        if self.bits < 1 || self.bits > 16 {
            return Err(SemcomError::InvalidConfig(format!(
                "quant.bits {} outside 1..=16",
                self.bits
            )));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<GridLayout> {
        build_layout(self.n_t, self.n_f, self.dt, self.df)
    }
}

/// Derives an independent sub-seed from the master seed and a stage
/// label (FNV-1a over both, then a splitmix64 finalizer).
pub fn stage_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in master.to_le_bytes().iter().chain(label.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    // splitmix64 finalizer
    h = h.wrapping_add(0x9e3779b97f4a7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Intermediate artifacts of one run, exposed for scheme-isolation
/// checks and diagnostics.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub ranking: ImportanceWeights,
    pub quantized: crate::codec::FeatureTensor,
    pub received: crate::codec::FeatureTensor,
    pub corrected: crate::codec::FeatureTensor,
    pub reconstruction: Image,
}

/// Executes the full chain for one (image, SNR, seed, scheme) point.
pub fn run_once(
    cfg: &SimConfig,
    image: &Image,
    cb: &Codebook,
    snr_db: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<RunReport> {
    run_once_traced(cfg, image, cb, snr_db, seed, scheme).map(|(report, _)| report)
}

/// [`run_once`] plus the intermediate artifacts.
pub fn run_once_traced(
    cfg: &SimConfig,
    image: &Image,
    cb: &Codebook,
    snr_db: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<(RunReport, RunTrace)> {
    cfg.validate()?;
    let layout = cfg.layout()?;

    // Transmitter: features, codebook matching, importance, bits.
    let z_e = dct_encode(image, cfg.patch)?;
    let quantized = vq_quantize(&z_e, cb)?;
    let ranking = if scheme.fit {
        importance_weights(&feature_gradients(&z_e, &quantized, image.len())?)
    } else {
        ImportanceWeights::identity(quantized.channels())
    };
    let payload = quantize_features(&quantized, cfg.bits, cb.value_range())?;
    let mapped = map_payload(&layout, &payload, &ranking, PILOT_SYMBOL)?;

    // PHY and channel.
    let mut tx = Vec::new();
    for frame in &mapped.frames {
        tx.extend(ofdm_modulate(frame, cfg.n_t, cfg.n_f, cfg.fft_size, cfg.cp_len)?);
    }
    let n_symbols = mapped.frames.len() * cfg.n_t;
    let sigma2 = sigma2_from_snr_db(snr_db);
    let chan = draw_channel(
        stage_seed(seed, "channel"),
        cfg.l_taps,
        cfg.decay,
        cfg.rho,
        n_symbols,
        sigma2,
        cfg.fft_size,
        cfg.n_f,
    );
    let mut noise_rng = ChaCha20Rng::seed_from_u64(stage_seed(seed, "noise"));
    let rx = channel_apply(&tx, &chan, cfg.cp_len, &mut noise_rng);

    // Receiver: per-frame estimation, equalization, demapping.
    let block = (cfg.fft_size + cfg.cp_len) * cfg.n_t;
    let mut eq_frames = Vec::with_capacity(mapped.frames.len());
    let mut mse_acc = RoleMse::default();
    for (i, chunk) in rx.chunks(block).enumerate() {
        let rx_frame = ofdm_demodulate(chunk, cfg.fft_size, cfg.cp_len, cfg.n_f)?;
        let pilots = ls_estimate(&rx_frame, &layout, PILOT_SYMBOL)?;
        let est = bilinear_interpolate(&pilots, &layout)?;
        let mse = estimation_error_stats(&est, &chan, &layout, i * cfg.n_t)?;
        mse_acc.pilot += mse.pilot;
        mse_acc.important += mse.important;
        mse_acc.regular += mse.regular;
        eq_frames.push(equalize(&rx_frame, &est)?);
    }
    let n_frames = mapped.frames.len() as f64;
    let est_mse = RoleMse {
        pilot: mse_acc.pilot / n_frames,
        important: mse_acc.important / n_frames,
        regular: mse_acc.regular / n_frames,
    };
    let rx_payload = demap_payload(
        &eq_frames,
        &layout,
        &ranking,
        payload.channels,
        payload.height,
        payload.width,
        payload.bits_per_value,
        payload.value_range,
    )?;

    // Feature recovery and metrics.
    let ber = bit_error_rate(&payload, &rx_payload)?;
    let received = dequantize_features(&rx_payload)?;
    let corrected = if scheme.rematch {
        rematch(&received, cb)?
    } else {
        received.clone()
    };
    let reconstruction = dct_decode(&corrected, cfg.patch)?;
    let dequant_tx = dequantize_features(&payload)?;
    let report = RunReport {
        scheme: scheme.name().to_string(),
        snr_db,
        seed,
        psnr_db: psnr(image, &reconstruction)?,
        ssim: ssim(image, &reconstruction)?,
        ber,
        feature_errors: feature_error(&quantized, &received)?,
        quantization_errors: feature_error(&quantized, &dequant_tx)?,
        channel_errors: feature_error(&dequant_tx, &received)?,
        est_mse,
    };
    Ok((
        report,
        RunTrace { ranking, quantized, received, corrected, reconstruction },
    ))
}

/// Runs the full Cartesian sweep (schemes × SNRs × seeds) in deterministic
/// order; if `csv_path` is given, writes one row per run under the
/// metrics column contract.
pub fn sweep(
    cfg: &SimConfig,
    image: &Image,
    cb: &Codebook,
    snrs_db: &[f64],
    seeds: &[u64],
    schemes: &[Scheme],
    csv_path: Option<&Path>,
) -> Result<Vec<RunReport>> {
    let mut reports = Vec::with_capacity(schemes.len() * snrs_db.len() * seeds.len());
    for &scheme in schemes {
        for &snr_db in snrs_db {
            for &seed in seeds {
                reports.push(run_once(cfg, image, cb, snr_db, seed, scheme)?);
            }
        }
    }
    if let Some(path) = csv_path {
        let mut out = String::new();
        out.push_str(RunReport::CSV_HEADER);
        out.push('\n');
        for r in &reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        let mut file = fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
    }
    Ok(reports)
}

/// Collects per-position feature vectors from images for codebook
/// training.
pub fn patch_vectors(images: &[Image], patch: usize) -> Result<Vec<Vec<f64>>> {
    let mut vectors = Vec::new();
    for img in images {
        let feat = dct_encode(img, patch)?;
        for n in 0..feat.height() {
            for m in 0..feat.width() {
                vectors.push(feat.position_vector(n, m));
            }
        }
    }
    Ok(vectors)
}

/// Trains a codebook from an image corpus with the stage-derived seed.
pub fn train_codebook_from_images(
    images: &[Image],
    patch: usize,
    entries: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<TrainOutcome> {
    let vectors = patch_vectors(images, patch)?;
    train_codebook(&vectors, entries, max_iters, tol, stage_seed(seed, "codebook"))
}
