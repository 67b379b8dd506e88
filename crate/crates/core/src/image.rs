//! Grayscale image container and portable graymap (PGM) I/O.
//!
//! Samples are stored as `f64` in `[0, 255]`, row-major. Both the ASCII
//! (`P2`) and binary (`P5`) graymap variants are read; files are written
//! as `P5` with maxval 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Result, SemcomError};

/// A grayscale image with real-valued samples in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major samples. Samples are clamped to
    /// `[0, 255]`.
    pub fn from_samples(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(SemcomError::DimensionMismatch(format!(
                "expected {} samples for {}x{}, got {}",
                width * height,
                width,
                height,
                samples.len()
            )));
        }
        let samples = samples.into_iter().map(|v| v.clamp(0.0, 255.0)).collect();
        Ok(Self { width, height, samples })
    }

    /// Constant-valued image.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            samples: vec![value.clamp(0.0, 255.0); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Total pixel count (the `l` in the reconstruction loss).
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    /// Reads a PGM file, accepting both P2 and P5 with maxval <= 255.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let data = fs::read(path)?;
        parse_pgm(&data)
    }

    /// Writes the image as binary PGM (P5), rounding samples to u8.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(self.samples.len() + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend(
            self.samples
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8),
        );
        fs::write(path, out)?;
        Ok(())
    }
}

fn parse_pgm(data: &[u8]) -> Result<Image> {
    let mut pos = 0usize;

    // Header tokens are whitespace-separated; '#' starts a comment line.
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < data.len() && data[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < data.len() && data[*pos] == b'#' {
                while *pos < data.len() && data[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(SemcomError::BadFileFormat("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(SemcomError::BadFileFormat(format!(
            "unsupported graymap magic {magic:?}"
        )));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| SemcomError::BadFileFormat("bad width".into()))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| SemcomError::BadFileFormat("bad height".into()))?;
    let maxval: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| SemcomError::BadFileFormat("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(SemcomError::BadFileFormat(format!(
            "maxval {maxval} outside 1..=255"
        )));
    }

    let n = width * height;
    let scale = 255.0 / maxval as f64;
    let samples: Vec<f64> = if magic == "P5" {
        // Exactly one whitespace byte separates the header from raster data.
        pos += 1;
        if data.len() < pos + n {
            return Err(SemcomError::BadFileFormat("truncated P5 raster".into()));
        }
        data[pos..pos + n].iter().map(|&b| b as f64 * scale).collect()
    } else {
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            let v: usize = next_token(&mut pos)?
                .parse()
                .map_err(|_| SemcomError::BadFileFormat("bad P2 sample".into()))?;
            if v > maxval {
                return Err(SemcomError::BadFileFormat(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            vals.push(v as f64 * scale);
        }
        vals
    };

    Image::from_samples(width, height, samples)
}
