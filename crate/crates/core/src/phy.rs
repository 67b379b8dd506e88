//! Baseband PHY: 16-QAM Gray mapping, OFDM modulation with cyclic
//! prefix, and a tapped-delay-line Rayleigh fading channel.
//!
//! DFT scaling is unitary throughout, so frame energy equals time-sample
//! energy and the SNR convention is simply sigma2 = 10^(-SNR_dB/10) for a
//! unit-energy constellation over a unit-power channel.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

use crate::{Result, SemcomError};

/// 16-QAM amplitude normalization for unit average symbol energy.
const QAM16_SCALE: f64 = 0.31622776601683794; // 1/sqrt(10)

/// Gray mapping of a 2-bit pair to a PAM level: 00 -> -3, 01 -> -1,
/// 11 -> +1, 10 -> +3.
fn gray_level(msb: u8, lsb: u8) -> f64 {
    match (msb, lsb) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

fn gray_bits(level: f64) -> (u8, u8) {
    if level < -2.0 {
        (0, 0)
    } else if level < 0.0 {
        (0, 1)
    } else if level < 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Maps a bitstream onto unit-average-energy 16-QAM symbols. Bits
/// (b0 b1) select the in-phase level and (b2 b3) the quadrature level;
/// the tail is zero-padded to a multiple of 4 bits.
pub fn qam16_modulate(bits: &[u8]) -> Vec<Complex64> {
    let n_sym = bits.len().div_ceil(4);
    let mut out = Vec::with_capacity(n_sym);
    let bit = |i: usize| -> u8 {
        if i < bits.len() {
            bits[i]
        } else {
            0
        }
    };
    for s in 0..n_sym {
        let i = gray_level(bit(4 * s), bit(4 * s + 1));
        let q = gray_level(bit(4 * s + 2), bit(4 * s + 3));
        out.push(Complex64::new(i * QAM16_SCALE, q * QAM16_SCALE));
    }
    out
}

/// Hard-decision 16-QAM demodulation: nearest PAM level per axis, Gray
/// inverse mapping. Exact inverse of [`qam16_modulate`] in the noiseless
/// case.
pub fn qam16_demodulate(symbols: &[Complex64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * 4);
    for s in symbols {
        let i = nearest_level(s.re / QAM16_SCALE);
        let q = nearest_level(s.im / QAM16_SCALE);
        let (b0, b1) = gray_bits(i);
        let (b2, b3) = gray_bits(q);
        bits.extend([b0, b1, b2, b3]);
    }
    bits
}

fn nearest_level(x: f64) -> f64 {
    let mut best = -3.0;
    let mut best_d = f64::INFINITY;
    for lv in [-3.0, -1.0, 1.0, 3.0] {
        let d = (x - lv).abs();
        if d < best_d {
            best_d = d;
            best = lv;
        }
    }
    best
}

/// FFT bin carrying subcarrier `f` of an `n_f`-wide band centered on DC.
pub fn subcarrier_bin(f: usize, n_f: usize, fft_size: usize) -> usize {
    (f as i64 - (n_f / 2) as i64).rem_euclid(fft_size as i64) as usize
}

/// OFDM-modulates an n_t×n_f frequency-domain frame (row-major, time
/// major) into time samples: unitary IDFT per OFDM symbol with the active
/// band centered in the FFT, guards zero, plus a cyclic prefix.
pub fn ofdm_modulate(
    frame: &[Complex64],
    n_t: usize,
    n_f: usize,
    fft_size: usize,
    cp_len: usize,
) -> Result<Vec<Complex64>> {
    if frame.len() != n_t * n_f {
        return Err(SemcomError::InvalidSize(format!(
            "frame has {} REs, expected {}",
            frame.len(),
            n_t * n_f
        )));
    }
    if fft_size < n_f {
        return Err(SemcomError::InvalidSize(format!(
            "fft size {fft_size} below subcarrier count {n_f}"
        )));
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(fft_size);
    let scale = 1.0 / (fft_size as f64).sqrt();
    let mut out = Vec::with_capacity(n_t * (fft_size + cp_len));
    let mut buf = vec![Complex64::default(); fft_size];
    for t in 0..n_t {
        buf.fill(Complex64::default());
        for f in 0..n_f {
            buf[subcarrier_bin(f, n_f, fft_size)] = frame[t * n_f + f];
        }
        ifft.process(&mut buf);
        for v in &mut buf {
            *v *= scale;
        }
        out.extend_from_slice(&buf[fft_size - cp_len..]);
        out.extend_from_slice(&buf);
    }
    Ok(out)
}

/// Inverse of [`ofdm_modulate`] over an ideal channel: CP removal,
/// unitary DFT, active band extraction.
pub fn ofdm_demodulate(
    samples: &[Complex64],
    fft_size: usize,
    cp_len: usize,
    n_f: usize,
) -> Result<Vec<Complex64>> {
    let block = fft_size + cp_len;
    if fft_size < n_f || block == 0 || samples.len() % block != 0 {
        return Err(SemcomError::InvalidSize(format!(
            "sample count {} is not a multiple of {block}",
            samples.len()
        )));
    }
    let n_t = samples.len() / block;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(fft_size);
    let scale = 1.0 / (fft_size as f64).sqrt();
    let mut out = Vec::with_capacity(n_t * n_f);
    let mut buf = vec![Complex64::default(); fft_size];
    for t in 0..n_t {
        buf.copy_from_slice(&samples[t * block + cp_len..(t + 1) * block]);
        fft.process(&mut buf);
        for f in 0..n_f {
            out.push(buf[subcarrier_bin(f, n_f, fft_size)] * scale);
        }
    }
    Ok(out)
}

/// One multipath channel realization: per-OFDM-symbol tap vectors with an
/// exponential power-delay profile, AR(1) evolution across symbols, and
/// the exact frequency response on the active band.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// taps[sym][k]: tap k during OFDM symbol `sym`.
    pub taps: Vec<Vec<Complex64>>,
    /// Nominal per-tap power profile (sums to 1 for drawn channels).
    pub pdp: Vec<f64>,
    pub rho: f64,
    pub sigma2: f64,
    pub n_f: usize,
    pub fft_size: usize,
    /// Exact frequency response, n_symbols × n_f, row-major.
    pub freq_response: Vec<Complex64>,
}

impl ChannelRealization {
    /// Builds a realization from explicit taps; the frequency response is
    /// derived by evaluating the tap DFT on the active band.
    pub fn from_taps(
        taps: Vec<Vec<Complex64>>,
        sigma2: f64,
        rho: f64,
        fft_size: usize,
        n_f: usize,
    ) -> Self {
        let l = taps.first().map_or(0, |t| t.len());
        let mut pdp: Vec<f64> = vec![0.0; l];
        for row in &taps {
            for (p, g) in pdp.iter_mut().zip(row) {
                *p += g.norm_sqr();
            }
        }
        let total: f64 = pdp.iter().sum();
        if total > 0.0 {
            for p in &mut pdp {
                *p /= total;
            }
        }
        let freq_response = tap_frequency_response(&taps, fft_size, n_f);
        Self { taps, pdp, rho, sigma2, n_f, fft_size, freq_response }
    }

    pub fn n_symbols(&self) -> usize {
        self.taps.len()
    }

    pub fn response(&self, sym: usize, f: usize) -> Complex64 {
        self.freq_response[sym * self.n_f + f]
    }
}

fn tap_frequency_response(
    taps: &[Vec<Complex64>],
    fft_size: usize,
    n_f: usize,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(taps.len() * n_f);
    for row in taps {
        for f in 0..n_f {
            let bin = subcarrier_bin(f, n_f, fft_size);
            let mut h = Complex64::default();
            for (k, g) in row.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (bin * k) as f64 / fft_size as f64;
                h += g * Complex64::from_polar(1.0, phase);
            }
            out.push(h);
        }
    }
    out
}

/// Draws a Rayleigh fading realization: taps are i.i.d. circular complex
/// Gaussian with pdp(k) proportional to exp(-k/decay) normalized to unit
/// total power, evolved across OFDM symbols by
/// g[n+1] = rho*g[n] + sqrt(1 - rho^2)*w.
#[allow(clippy::too_many_arguments)]
pub fn draw_channel(
    seed: u64,
    l_taps: usize,
    decay: f64,
    rho: f64,
    n_symbols: usize,
    sigma2: f64,
    fft_size: usize,
    n_f: usize,
) -> ChannelRealization {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..l_taps).map(|k| (-(k as f64) / decay).exp()).collect();
    let total: f64 = raw.iter().sum();
    let pdp: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let draw = |rng: &mut ChaCha20Rng, power: f64| -> Complex64 {
        let s = (power / 2.0).sqrt();
        Complex64::new(normal.sample(rng) * s, normal.sample(rng) * s)
    };

    let mut taps = Vec::with_capacity(n_symbols);
    let mut current: Vec<Complex64> = pdp.iter().map(|&p| draw(&mut rng, p)).collect();
    taps.push(current.clone());
    let innov = (1.0 - rho * rho).max(0.0).sqrt();
    for _ in 1..n_symbols {
        for (k, g) in current.iter_mut().enumerate() {
            *g = rho * *g + innov * draw(&mut rng, pdp[k]);
        }
        taps.push(current.clone());
    }
    let freq_response = tap_frequency_response(&taps, fft_size, n_f);
    ChannelRealization { taps, pdp, rho, sigma2, n_f, fft_size, freq_response }
}

/// Passes time samples through the channel: per-OFDM-symbol linear
/// convolution with that symbol's taps (the cyclic prefix absorbs the
/// tail) plus complex AWGN of variance sigma2.
pub fn channel_apply(
    samples: &[Complex64],
    chan: &ChannelRealization,
    cp_len: usize,
    noise_rng: &mut ChaCha20Rng,
) -> Vec<Complex64> {
    let block = chan.fft_size + cp_len;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let noise_scale = (chan.sigma2 / 2.0).sqrt();
    let mut out = Vec::with_capacity(samples.len());
    for (idx, x) in samples.chunks(block).enumerate() {
        let taps = &chan.taps[idx.min(chan.taps.len() - 1)];
        for n in 0..x.len() {
            let mut y = Complex64::default();
            for (k, g) in taps.iter().enumerate() {
                if n >= k {
                    y += g * x[n - k];
                }
            }
            if noise_scale > 0.0 {
                y += Complex64::new(
                    normal.sample(noise_rng) * noise_scale,
                    normal.sample(noise_rng) * noise_scale,
                );
            }
            out.push(y);
        }
    }
    out
}
