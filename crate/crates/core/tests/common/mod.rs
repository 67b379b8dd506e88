//! Shared fixtures for integration tests: a synthetic image corpus and a
//! codebook trained on it once per test binary.

// Not every test binary uses every fixture.
#![allow(dead_code)]

use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use semcom::codec::Codebook;
use semcom::image::Image;
use semcom::pipeline::train_codebook_from_images;

/// Smooth random test image: a few low-frequency cosines plus mild
/// texture noise, stretched to cover most of [0, 255].
pub fn synthetic_image(seed: u64, width: usize, height: usize) -> Image {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut waves = Vec::new();
    for k in 0..6 {
        waves.push((
            rng.random_range(0.0..0.12f64),             // fx
            rng.random_range(0.0..0.12f64),             // fy
            rng.random_range(0.0..std::f64::consts::TAU), // phase
            1.0 / (k as f64 + 1.0),                     // amplitude
        ));
    }
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut v = 0.0;
            for &(fx, fy, ph, amp) in &waves {
                v += amp
                    * (std::f64::consts::TAU * (fx * x as f64 + fy * y as f64) + ph).cos();
            }
            v += rng.random_range(-0.08..0.08);
            samples.push(v);
        }
    }
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = 245.0 / (max - min);
    let samples = samples.into_iter().map(|v| 5.0 + (v - min) * scale).collect();
    Image::from_samples(width, height, samples).unwrap()
}

/// Corpus used for codebook training (disjoint seeds from test images).
pub fn training_corpus() -> Vec<Image> {
    (100..106).map(|s| synthetic_image(s, 128, 128)).collect()
}

/// The image transmitted in end-to-end tests; held out of training.
pub fn test_image() -> &'static Image {
    static IMG: OnceLock<Image> = OnceLock::new();
    IMG.get_or_init(|| synthetic_image(1, 128, 128))
}

/// A 64-entry codebook trained once per test binary.
pub fn shared_codebook() -> &'static Codebook {
    static CB: OnceLock<Codebook> = OnceLock::new();
    CB.get_or_init(|| {
        train_codebook_from_images(&training_corpus(), 4, 64, 0, 60, 1e-7)
            .unwrap()
            .codebook
    })
}
