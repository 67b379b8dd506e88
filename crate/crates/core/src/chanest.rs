//! Pilot-based channel estimation and equalization.
//!
//! LS estimates ĥ = y/x at every pilot RE, bilinear interpolation fills
//! the rest of the grid (frequency axis first, then time; REs past the
//! outermost pilot line clamp to that line), and zero-forcing
//! equalization divides each RE by its estimate with an ε-cap for
//! near-zero estimates.

use num_complex::Complex64;

use crate::grid::{GridLayout, Role};
use crate::phy::ChannelRealization;
use crate::{Result, SemcomError};

/// Equalizer gain cap: estimates with magnitude below this yield a zero
/// output symbol instead of a blow-up.
const ZF_EPSILON: f64 = 1e-6;

/// LS estimates at the pilot lattice, row-major over
/// (pilot_times × pilot_freqs).
#[derive(Debug, Clone)]
pub struct PilotEstimates {
    pub values: Vec<Complex64>,
}

/// Interpolated channel estimate over the whole grid.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub n_t: usize,
    pub n_f: usize,
    /// Row-major n_t × n_f grid; agrees with the LS values at pilots.
    pub full_grid: Vec<Complex64>,
}

impl ChannelEstimate {
    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.full_grid[t * self.n_f + f]
    }
}

/// Per-role mean squared estimation error |ĥ − h|².
#[derive(Debug, Clone, Copy, Default)]
pub struct RoleMse {
    pub pilot: f64,
    pub important: f64,
    pub regular: f64,
}

/// LS channel estimation at every pilot RE: ĥ_p = y_p / x_p.
pub fn ls_estimate(
    rx_frame: &[Complex64],
    layout: &GridLayout,
    pilot_symbol: Complex64,
) -> Result<PilotEstimates> {
    if pilot_symbol.norm() == 0.0 {
        return Err(SemcomError::ZeroPilot);
    }
    if rx_frame.len() != layout.n_cpi() {
        return Err(SemcomError::DimensionMismatch(format!(
            "frame has {} REs, layout has {}",
            rx_frame.len(),
            layout.n_cpi()
        )));
    }
    let mut values = Vec::with_capacity(layout.pilot_count());
    for &t in &layout.pilot_times {
        for &f in &layout.pilot_freqs {
            values.push(rx_frame[t * layout.n_f + f] / pilot_symbol);
        }
    }
    Ok(PilotEstimates { values })
}

/// Bilinear interpolation of pilot estimates to the full grid:
/// interpolation runs along frequency first, then time; positions beyond
/// the outermost pilot row/column use constant extrapolation.
pub fn bilinear_interpolate(
    pilots: &PilotEstimates,
    layout: &GridLayout,
) -> Result<ChannelEstimate> {
    let nt_p = layout.pilot_times.len();
    let nf_p = layout.pilot_freqs.len();
    if nt_p == 0 || nf_p == 0 {
        return Err(SemcomError::DegenerateLattice("no pilot lines".into()));
    }
    if pilots.values.len() != nt_p * nf_p {
        return Err(SemcomError::DimensionMismatch(format!(
            "{} pilot estimates for a {nt_p}x{nf_p} lattice",
            pilots.values.len()
        )));
    }
    let at = |ti: usize, fi: usize| pilots.values[ti * nf_p + fi];

    // Bracketing lattice index and interpolation weight along one axis.
    let bracket = |lines: &[usize], x: usize| -> (usize, usize, f64) {
        match lines.binary_search(&x) {
            Ok(i) => (i, i, 0.0),
            Err(0) => (0, 0, 0.0),
            Err(i) if i == lines.len() => (i - 1, i - 1, 0.0),
            Err(i) => {
                let lo = lines[i - 1];
                let hi = lines[i];
                (i - 1, i, (x - lo) as f64 / (hi - lo) as f64)
            }
        }
    };

    let mut full_grid = Vec::with_capacity(layout.n_cpi());
    for t in 0..layout.n_t {
        let (t0, t1, wt) = bracket(&layout.pilot_times, t);
        for f in 0..layout.n_f {
            let (f0, f1, wf) = bracket(&layout.pilot_freqs, f);
            let row0 = at(t0, f0) * (1.0 - wf) + at(t0, f1) * wf;
            let row1 = at(t1, f0) * (1.0 - wf) + at(t1, f1) * wf;
            full_grid.push(row0 * (1.0 - wt) + row1 * wt);
        }
    }
    Ok(ChannelEstimate { n_t: layout.n_t, n_f: layout.n_f, full_grid })
}

/// Zero-forcing equalization x̂ = y/ĥ with the ε-cap rule.
pub fn equalize(rx_frame: &[Complex64], est: &ChannelEstimate) -> Result<Vec<Complex64>> {
    if rx_frame.len() != est.full_grid.len() {
        return Err(SemcomError::DimensionMismatch(format!(
            "frame has {} REs, estimate covers {}",
            rx_frame.len(),
            est.full_grid.len()
        )));
    }
    Ok(rx_frame
        .iter()
        .zip(&est.full_grid)
        .map(|(y, h)| {
            if h.norm() < ZF_EPSILON {
                Complex64::default()
            } else {
                y / h
            }
        })
        .collect())
}

/// Mean |ĥ − h|² per RE role, against the true response of the given
/// symbol range (`sym_offset` is the index of the frame's first OFDM
/// symbol within the realization).
pub fn estimation_error_stats(
    est: &ChannelEstimate,
    chan: &ChannelRealization,
    layout: &GridLayout,
    sym_offset: usize,
) -> Result<RoleMse> {
    if est.n_t != layout.n_t || est.n_f != layout.n_f {
        return Err(SemcomError::DimensionMismatch(
            "estimate and layout shapes differ".into(),
        ));
    }
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for t in 0..layout.n_t {
        for f in 0..layout.n_f {
            let err = (est.get(t, f) - chan.response(sym_offset + t, f)).norm_sqr();
            let slot = match layout.role(t, f) {
                Role::Pilot => 0,
                Role::Important => 1,
                Role::Regular => 2,
            };
            sums[slot] += err;
            counts[slot] += 1;
        }
    }
    let mean = |s: f64, c: usize| if c > 0 { s / c as f64 } else { 0.0 };
    Ok(RoleMse {
        pilot: mean(sums[0], counts[0]),
        important: mean(sums[1], counts[1]),
        regular: mean(sums[2], counts[2]),
    })
}
