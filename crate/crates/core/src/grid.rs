//! OFDM time-frequency resource layout and payload mapping.
//!
//! Pilots sit on the lattice t ≡ 0 (mod dt), f ≡ 0 (mod df). The four
//! grid neighbors of each pilot are reserved as Important REs for the
//! top-ranked feature channels (out-of-bounds neighbors are dropped);
//! everything else is a Regular RE. Payload bits are split into an
//! important stream (top D_imp channels by ranking) and a regular stream,
//! modulated, and poured into consecutive frames: green REs drain the
//! important stream, regular REs the other, with either stream spilling
//! into the other's REs once it runs dry.

use num_complex::Complex64;

use crate::bitquant::BitPayload;
use crate::importance::ImportanceWeights;
use crate::phy::{qam16_demodulate, qam16_modulate};
use crate::{Result, SemcomError};

/// Role of one resource element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Pilot,
    Important,
    Regular,
}

/// Per-RE role map over an n_t × n_f grid, plus role counts.
#[derive(Debug, Clone)]
pub struct GridLayout {
    pub n_t: usize,
    pub n_f: usize,
    pub dt: usize,
    pub df: usize,
    roles: Vec<Role>,
    pub n_ref: usize,
    pub n_green: usize,
    pub n_regular: usize,
    /// Pilot lattice lines (ascending).
    pub pilot_times: Vec<usize>,
    pub pilot_freqs: Vec<usize>,
}

impl GridLayout {
    pub fn n_cpi(&self) -> usize {
        self.n_t * self.n_f
    }

    /// Data REs (Important + Regular) per frame.
    pub fn data_res(&self) -> usize {
        self.n_green + self.n_regular
    }

    pub fn role(&self, t: usize, f: usize) -> Role {
        self.roles[t * self.n_f + f]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    /// Number of pilot REs (all lattice points).
    pub fn pilot_count(&self) -> usize {
        self.pilot_times.len() * self.pilot_freqs.len()
    }
}

/// Builds the role map for an n_t × n_f grid with pilot spacings dt, df.
pub fn build_layout(n_t: usize, n_f: usize, dt: usize, df: usize) -> Result<GridLayout> {
    if dt < 3 || df < 3 {
        return Err(SemcomError::InvalidSpacing(format!(
            "pilot spacings dt={dt}, df={df} must both be >= 3"
        )));
    }
    if n_t < dt || n_f < df {
        return Err(SemcomError::InvalidSpacing(format!(
            "grid {n_t}x{n_f} smaller than pilot spacing {dt}x{df}"
        )));
    }
    let mut roles = vec![Role::Regular; n_t * n_f];
    let pilot_times: Vec<usize> = (0..n_t).step_by(dt).collect();
    let pilot_freqs: Vec<usize> = (0..n_f).step_by(df).collect();
    for &t in &pilot_times {
        for &f in &pilot_freqs {
            roles[t * n_f + f] = Role::Pilot;
        }
    }
    let mut n_green = 0usize;
    for &t in &pilot_times {
        for &f in &pilot_freqs {
            let neighbors = [
                (t.wrapping_sub(1), f),
                (t + 1, f),
                (t, f.wrapping_sub(1)),
                (t, f + 1),
            ];
            for (nt, nf) in neighbors {
                if nt < n_t && nf < n_f && roles[nt * n_f + nf] == Role::Regular {
                    roles[nt * n_f + nf] = Role::Important;
                    n_green += 1;
                }
            }
        }
    }
    let n_ref = pilot_times.len() * pilot_freqs.len();
    let n_regular = n_t * n_f - n_ref - n_green;
    Ok(GridLayout {
        n_t,
        n_f,
        dt,
        df,
        roles,
        n_ref,
        n_green,
        n_regular,
        pilot_times,
        pilot_freqs,
    })
}

/// Number of feature channels granted Important placement:
/// ⌊D · N_green / (N_CPI − N_ref)⌋, capped at D.
pub fn important_feature_count(layout: &GridLayout, channels: usize) -> usize {
    let data = layout.n_cpi() - layout.n_ref;
    if data == 0 {
        return 0;
    }
    (channels * layout.n_green / data).min(channels)
}

/// Frequency-domain frames produced by payload mapping.
#[derive(Debug, Clone)]
pub struct MappedFrames {
    /// Each frame is an n_t × n_f grid, row-major, time major.
    pub frames: Vec<Vec<Complex64>>,
    pub pilot_symbol: Complex64,
    /// Modulated symbol counts of the important / regular streams.
    pub important_symbols: usize,
    pub regular_symbols: usize,
}

/// Stream symbol counts implied by a payload shape and ranking split.
fn stream_symbol_counts(
    channels: usize,
    word_bits: usize,
    d_imp: usize,
) -> (usize, usize) {
    let a_bits = d_imp * word_bits;
    let b_bits = (channels - d_imp) * word_bits;
    (a_bits.div_ceil(4), b_bits.div_ceil(4))
}

/// Maps a bit payload onto consecutive OFDM frames. The words of the
/// top-D_imp channels (per ranking) form the important stream; the
/// remaining channels, in ranking order, form the regular stream.
pub fn map_payload(
    layout: &GridLayout,
    payload: &BitPayload,
    ranking: &ImportanceWeights,
    pilot_symbol: Complex64,
) -> Result<MappedFrames> {
    if ranking.ranking.len() != payload.channels {
        return Err(SemcomError::DimensionMismatch(format!(
            "ranking covers {} channels, payload has {}",
            ranking.ranking.len(),
            payload.channels
        )));
    }
    let d_imp = important_feature_count(layout, payload.channels);
    let mut a_bits = Vec::new();
    let mut b_bits = Vec::new();
    for (rank, &ch) in ranking.ranking.iter().enumerate() {
        let target = if rank < d_imp { &mut a_bits } else { &mut b_bits };
        target.extend_from_slice(&payload.words[ch]);
    }
    let a_syms = qam16_modulate(&a_bits);
    let b_syms = qam16_modulate(&b_bits);

    let total = a_syms.len() + b_syms.len();
    let n_frames = total.div_ceil(layout.data_res()).max(1);
    let mut frames = Vec::with_capacity(n_frames);
    let mut a_it = a_syms.iter();
    let mut b_it = b_syms.iter();
    for _ in 0..n_frames {
        let mut frame = Vec::with_capacity(layout.n_cpi());
        for role in layout.roles() {
            let sym = match role {
                Role::Pilot => pilot_symbol,
                Role::Important => *a_it
                    .next()
                    .or_else(|| b_it.next())
                    .unwrap_or(&Complex64::default()),
                Role::Regular => *b_it
                    .next()
                    .or_else(|| a_it.next())
                    .unwrap_or(&Complex64::default()),
            };
            frame.push(sym);
        }
        frames.push(frame);
    }
    Ok(MappedFrames {
        frames,
        pilot_symbol,
        important_symbols: a_syms.len(),
        regular_symbols: b_syms.len(),
    })
}

/// Inverse of [`map_payload`]: collects data symbols from equalized
/// frames, demodulates the two streams, and restores channel-major bit
/// order.
#[allow(clippy::too_many_arguments)]
pub fn demap_payload(
    frames: &[Vec<Complex64>],
    layout: &GridLayout,
    ranking: &ImportanceWeights,
    channels: usize,
    height: usize,
    width: usize,
    bits_per_value: u32,
    value_range: (f64, f64),
) -> Result<BitPayload> {
    let word_bits = height * width * bits_per_value as usize;
    let d_imp = important_feature_count(layout, channels);
    let (a_total, b_total) = stream_symbol_counts(channels, word_bits, d_imp);
    let n_frames = (a_total + b_total).div_ceil(layout.data_res()).max(1);
    if frames.len() != n_frames {
        return Err(SemcomError::MalformedPayload(format!(
            "got {} frames, payload shape needs {n_frames}",
            frames.len()
        )));
    }
    let mut a_syms = Vec::with_capacity(a_total);
    let mut b_syms = Vec::with_capacity(b_total);
    for frame in frames {
        if frame.len() != layout.n_cpi() {
            return Err(SemcomError::MalformedPayload(format!(
                "frame has {} REs, layout has {}",
                frame.len(),
                layout.n_cpi()
            )));
        }
        for (role, &sym) in layout.roles().iter().zip(frame) {
            match role {
                Role::Pilot => {}
                Role::Important => {
                    if a_syms.len() < a_total {
                        a_syms.push(sym);
                    } else if b_syms.len() < b_total {
                        b_syms.push(sym);
                    }
                }
                Role::Regular => {
                    if b_syms.len() < b_total {
                        b_syms.push(sym);
                    } else if a_syms.len() < a_total {
                        a_syms.push(sym);
                    }
                }
            }
        }
    }
    let mut a_bits = qam16_demodulate(&a_syms);
    let mut b_bits = qam16_demodulate(&b_syms);
    a_bits.truncate(d_imp * word_bits);
    b_bits.truncate((channels - d_imp) * word_bits);

    let mut words = vec![Vec::new(); channels];
    for (rank, &ch) in ranking.ranking.iter().enumerate() {
        let src = if rank < d_imp {
            let start = rank * word_bits;
            &a_bits[start..start + word_bits]
        } else {
            let start = (rank - d_imp) * word_bits;
            &b_bits[start..start + word_bits]
        };
        words[ch] = src.to_vec();
    }
    Ok(BitPayload {
        bits_per_value,
        value_range,
        channels,
        height,
        width,
        words,
    })
}
