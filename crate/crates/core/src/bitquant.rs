//! Uniform scalar quantization of feature values to fixed-width bit words.
//!
//! Mid-rise quantizer: cell width Δ = (max − min)/2^c, index
//! q = clamp(⌊(v − min)/Δ⌋, 0, 2^c − 1), reconstruction
//! v̂ = min + (q + 0.5)·Δ. Each feature channel becomes one bit word of
//! length H·W·c; values are emitted row-major within a channel, c bits per
//! value, most significant bit first.

use crate::codec::FeatureTensor;
use crate::{Result, SemcomError};

/// Bit-quantized feature tensor: one word per channel plus the metadata
/// needed to invert the mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPayload {
    pub bits_per_value: u32,
    pub value_range: (f64, f64),
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// One word per channel; each element is a single bit (0 or 1).
    pub words: Vec<Vec<u8>>,
}

impl BitPayload {
    /// Word length in bits: H·W·c.
    pub fn word_len(&self) -> usize {
        self.height * self.width * self.bits_per_value as usize
    }

    /// Total payload size in bits.
    pub fn total_bits(&self) -> usize {
        self.channels * self.word_len()
    }

    fn validate(&self) -> Result<()> {
        if self.bits_per_value < 1 || self.bits_per_value > 16 {
            return Err(SemcomError::MalformedPayload(format!(
                "bits per value {} outside 1..=16",
                self.bits_per_value
            )));
        }
        if self.words.len() != self.channels {
            return Err(SemcomError::MalformedPayload(format!(
                "{} words for {} channels",
                self.words.len(),
                self.channels
            )));
        }
        let want = self.word_len();
        for (i, w) in self.words.iter().enumerate() {
            if w.len() != want {
                return Err(SemcomError::MalformedPayload(format!(
                    "word {i} has {} bits, expected {want}",
                    w.len()
                )));
            }
        }
        Ok(())
    }
}

/// Quantizer cell width for a range and bit count.
pub fn step(range: (f64, f64), bits: u32) -> f64 {
    (range.1 - range.0) / (1u64 << bits) as f64
}

/// Quantizes one value to its cell index.
pub fn quantize_value(v: f64, range: (f64, f64), bits: u32) -> u64 {
    let delta = step(range, bits);
    let max_q = (1u64 << bits) - 1;
    let q = ((v - range.0) / delta).floor();
    if q < 0.0 {
        0
    } else if q > max_q as f64 {
        max_q
    } else {
        q as u64
    }
}

/// Cell-center reconstruction of a cell index.
pub fn dequantize_value(q: u64, range: (f64, f64), bits: u32) -> f64 {
    range.0 + (q as f64 + 0.5) * step(range, bits)
}

/// Bit-quantizes a feature tensor channel by channel.
pub fn quantize_features(
    tensor: &FeatureTensor,
    bits: u32,
    range: (f64, f64),
) -> Result<BitPayload> {
    if !(range.0 < range.1) {
        return Err(SemcomError::InvalidRange { min: range.0, max: range.1 });
    }
    if bits < 1 || bits > 16 {
        return Err(SemcomError::MalformedPayload(format!(
            "bits per value {bits} outside 1..=16"
        )));
    }
    let mut words = Vec::with_capacity(tensor.channels());
    for i in 0..tensor.channels() {
        let mut word = Vec::with_capacity(tensor.height() * tensor.width() * bits as usize);
        for n in 0..tensor.height() {
            for m in 0..tensor.width() {
                let q = quantize_value(tensor.get(i, n, m), range, bits);
                for b in (0..bits).rev() {
                    word.push(((q >> b) & 1) as u8);
                }
            }
        }
        words.push(word);
    }
    Ok(BitPayload {
        bits_per_value: bits,
        value_range: range,
        channels: tensor.channels(),
        height: tensor.height(),
        width: tensor.width(),
        words,
    })
}

/// Inverts [`quantize_features`] up to the Δ/2 cell-center error.
pub fn dequantize_features(payload: &BitPayload) -> Result<FeatureTensor> {
    payload.validate()?;
    let bits = payload.bits_per_value;
    let mut out = FeatureTensor::zeros(payload.channels, payload.height, payload.width);
    for (i, word) in payload.words.iter().enumerate() {
        let mut pos = 0usize;
        for n in 0..payload.height {
            for m in 0..payload.width {
                let mut q = 0u64;
                for _ in 0..bits {
                    q = (q << 1) | word[pos] as u64;
                    pos += 1;
                }
                out.set(i, n, m, dequantize_value(q, payload.value_range, bits));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn two_bit_examples() {
        let range = (0.0, 1.0);
        assert_eq!(quantize_value(0.6, range, 2), 2);
        assert_eq!(quantize_value(0.0, range, 2), 0);
        assert_eq!(quantize_value(1.0, range, 2), 3); // upper clamp
        assert!((dequantize_value(2, range, 2) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn quantizer_is_monotone() {
        let range = (-2.0, 3.0);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..500 {
            let a = rng.random_range(-3.0..4.0);
            let b = rng.random_range(-3.0..4.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            assert!(quantize_value(lo, range, 5) <= quantize_value(hi, range, 5));
        }
    }

    #[test]
    fn word_bit_order_is_msb_first() {
        let mut t = FeatureTensor::zeros(1, 1, 1);
        t.set(0, 0, 0, 0.6);
        let p = quantize_features(&t, 2, (0.0, 1.0)).unwrap();
        assert_eq!(p.words[0], vec![1, 0]);
    }

    #[test]
    fn round_trip_error_within_half_step() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let range = (-4.0, 4.0);
        let bits = 6;
        let delta = step(range, bits);
        let mut t = FeatureTensor::zeros(3, 4, 4);
        for i in 0..3 {
            for n in 0..4 {
                for m in 0..4 {
                    t.set(i, n, m, rng.random_range(range.0..range.1));
                }
            }
        }
        let p = quantize_features(&t, bits, range).unwrap();
        let back = dequantize_features(&p).unwrap();
        for (a, b) in t.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= delta / 2.0 + 1e-12);
        }
        // Per-channel error bound: ||k_i - k̂_i|| <= (Δ/2)·sqrt(H·W).
        for i in 0..3 {
            let mut e = 0.0;
            for n in 0..4 {
                for m in 0..4 {
                    e += (t.get(i, n, m) - back.get(i, n, m)).powi(2);
                }
            }
            assert!(e.sqrt() <= delta / 2.0 * 16f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_range_and_malformed_words() {
        let t = FeatureTensor::zeros(1, 2, 2);
        assert!(quantize_features(&t, 4, (1.0, 1.0)).is_err());
        assert!(quantize_features(&t, 0, (0.0, 1.0)).is_err());
        let mut p = quantize_features(&t, 4, (0.0, 1.0)).unwrap();
        p.words[0].pop();
        assert!(dequantize_features(&p).is_err());
    }
}
