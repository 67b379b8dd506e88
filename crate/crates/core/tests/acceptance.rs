//! End-to-end acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines as they complete.

mod common;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use semcom::bitquant::{dequantize_features, quantize_features};
use semcom::chanest::ls_estimate;
use semcom::codec::{dct_decode_raw, dct_encode, Codebook};
use semcom::grid::{build_layout, demap_payload, important_feature_count, map_payload};
use semcom::importance::{feature_gradients, loss_from_samples, ImportanceWeights};
use semcom::phy::{ofdm_demodulate, ofdm_modulate, qam16_demodulate, qam16_modulate};
use semcom::pipeline::{run_once, Profile, Scheme, SimConfig, PILOT_SYMBOL};

struct Outcome {
    label: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, label: &'static str, pass: bool, detail: String) {
    println!("criterion {label}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    results.push(Outcome { label, pass, detail });
}

/// 1. LS pilot-estimate MSE equals sigma^2 / sigma_x^2 within 3%.
fn criterion_1(results: &mut Vec<Outcome>) {
    let layout = build_layout(56, 72, 4, 6).unwrap();
    let pilot = PILOT_SYMBOL; // unit power
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for &sigma2 in &[0.01, 0.1, 1.0] {
        let s = (sigma2 / 2.0f64).sqrt();
        let mut total = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let h = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let mut frame = vec![Complex64::default(); layout.n_cpi()];
            for &t in &layout.pilot_times {
                for &f in &layout.pilot_freqs {
                    let n = Complex64::new(normal.sample(&mut rng) * s, normal.sample(&mut rng) * s);
                    frame[t * layout.n_f + f] = h * pilot + n;
                }
            }
            for v in ls_estimate(&frame, &layout, pilot).unwrap().values {
                total += (v - h).norm_sqr();
                count += 1;
            }
        }
        let mse = total / count as f64;
        let rel = (mse - sigma2).abs() / sigma2;
        pass &= rel < 0.03;
        detail.push(format!("sigma2 {sigma2}: mse {mse:.5} (rel {rel:.4})"));
    }
    record(results, "1 LS error law", pass, detail.join(", "));
}

/// 2. Perturbations below d_min/2 always rematch exactly; above it,
/// failures exist.
fn criterion_2(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let dim = 8;
    let mut all_recovered = true;
    let mut failures_above = 0usize;
    for _ in 0..100 {
        let entries: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng) * 10.0).collect())
            .collect();
        let cb = Codebook::new(entries).unwrap();
        for case in 0..100 {
            let i = rng.random_range(0..cb.len());
            let dmin = cb.dmin(i).unwrap();
            // Half the directions are uniform on the sphere, half point at
            // the nearest neighboring entry (the only directions where the
            // 1.01 case can actually fail).
            let dir: Vec<f64> = if case % 2 == 0 {
                let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect()
            } else {
                let nn = (0..cb.len())
                    .filter(|&j| j != i)
                    .min_by(|&a, &b| {
                        let da: f64 = cb.entry(a).iter().zip(cb.entry(i)).map(|(x, y)| (x - y) * (x - y)).sum();
                        let db: f64 = cb.entry(b).iter().zip(cb.entry(i)).map(|(x, y)| (x - y) * (x - y)).sum();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                let v: Vec<f64> = cb.entry(nn).iter().zip(cb.entry(i)).map(|(x, y)| x - y).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect()
            };
            let probe = |radius: f64| -> usize {
                let v: Vec<f64> = cb
                    .entry(i)
                    .iter()
                    .zip(&dir)
                    .map(|(e, d)| e + d * radius)
                    .collect();
                cb.nearest(&v)
            };
            all_recovered &= probe(0.99 * dmin / 2.0) == i;
            if probe(1.01 * dmin / 2.0) != i {
                failures_above += 1;
            }
        }
    }
    let pass = all_recovered && failures_above > 0;
    record(
        results,
        "2 perfect correction",
        pass,
        format!("10000 triples: all recovered below d_min/2, {failures_above} failures above"),
    );
}

/// 3. Analytic feature gradients match central finite differences.
fn criterion_3(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let patch = 4;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let img = common::synthetic_image(rng.random(), 8, 8);
        let z_e = dct_encode(&img, patch).unwrap();
        let mut quantized = z_e.clone();
        for ch in 0..quantized.channels() {
            for r in 0..quantized.height() {
                for c in 0..quantized.width() {
                    let v = quantized.get(ch, r, c) + rng.random_range(-20.0..20.0);
                    quantized.set(ch, r, c, v);
                }
            }
        }
        let analytic = feature_gradients(&z_e, &quantized, img.len()).unwrap();
        let loss = |k: &semcom::codec::FeatureTensor| {
            let (_, _, recon) = dct_decode_raw(k, patch).unwrap();
            loss_from_samples(img.samples(), &recon)
        };
        let step = 1e-5;
        let mut num = 0.0;
        let mut den = 0.0;
        for ch in 0..quantized.channels() {
            for r in 0..quantized.height() {
                for c in 0..quantized.width() {
                    let v = quantized.get(ch, r, c);
                    let mut hi = quantized.clone();
                    hi.set(ch, r, c, v + step);
                    let mut lo = quantized.clone();
                    lo.set(ch, r, c, v - step);
                    let fd = (loss(&hi) - loss(&lo)) / (2.0 * step);
                    let a = analytic.get(ch, r, c);
                    num += (a - fd) * (a - fd);
                    den += a * a;
                }
            }
        }
        worst = worst.max((num / den).sqrt());
    }
    record(
        results,
        "3 gradient correctness",
        worst < 1e-6,
        format!("worst relative error {worst:.2e} over 20 instances"),
    );
}

/// 4. Interpolated estimates on Important REs are no worse than on
/// Regular REs.
fn criterion_4(results: &mut Vec<Outcome>) {
    let mut cfg = SimConfig::from_profile(Profile::Desk);
    cfg.rho = 0.99;
    let cb = common::shared_codebook();
    let img = common::test_image();
    let scheme = Scheme { fit: true, rematch: true };
    let mut mse_i = 0.0;
    let mut mse_r = 0.0;
    for seed in 0..100 {
        let r = run_once(&cfg, img, cb, 10.0, seed, scheme).unwrap();
        mse_i += r.est_mse.important;
        mse_r += r.est_mse.regular;
    }
    mse_i /= 100.0;
    mse_r /= 100.0;
    record(
        results,
        "4 interpolation locality",
        mse_i <= mse_r,
        format!("important-RE mse {mse_i:.4} vs regular-RE mse {mse_r:.4}"),
    );
}

/// 5. Mean PSNR is non-decreasing in SNR for every scheme (0.2 dB slack).
fn criterion_5(results: &mut Vec<Outcome>) {
    let cfg = SimConfig::from_profile(Profile::Desk);
    let cb = common::shared_codebook();
    let img = common::test_image();
    let snrs = [5.0, 10.0, 15.0, 20.0, 25.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for scheme in Scheme::ALL {
        let means: Vec<f64> = snrs
            .iter()
            .map(|&snr| {
                (0..20)
                    .map(|seed| run_once(&cfg, img, cb, snr, seed, scheme).unwrap().psnr_db)
                    .sum::<f64>()
                    / 20.0
            })
            .collect();
        let ok = means.windows(2).all(|w| w[1] >= w[0] - 0.2);
        pass &= ok;
        detail.push(format!(
            "{}: {}",
            scheme.name(),
            means.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join("/")
        ));
    }
    record(results, "5 SNR monotonicity", pass, detail.join("; "));
}

/// 6. With rematch fixed on, importance-aware mapping does not hurt SSIM
/// at 5 and 10 dB (paired seeds).
fn criterion_6(results: &mut Vec<Outcome>) {
    let cfg = SimConfig::from_profile(Profile::Desk);
    let cb = common::shared_codebook();
    let img = common::test_image();
    let mut pass = true;
    let mut detail = Vec::new();
    for &snr in &[5.0, 10.0] {
        let mean = |fit: bool| {
            let scheme = Scheme { fit, rematch: true };
            (0..50)
                .map(|seed| run_once(&cfg, img, cb, snr, seed, scheme).unwrap().ssim)
                .sum::<f64>()
                / 50.0
        };
        let on = mean(true);
        let off = mean(false);
        pass &= on >= off;
        detail.push(format!("{snr} dB: {on:.4} vs {off:.4}"));
    }
    record(results, "6 FIT benefit at low SNR", pass, detail.join(", "));
}

/// 7. With fit fixed on, rematching does not hurt SSIM at 5/10/15 dB
/// (paired seeds).
fn criterion_7(results: &mut Vec<Outcome>) {
    let cfg = SimConfig::from_profile(Profile::Desk);
    let cb = common::shared_codebook();
    let img = common::test_image();
    let mut pass = true;
    let mut detail = Vec::new();
    for &snr in &[5.0, 10.0, 15.0] {
        let mean = |rematch: bool| {
            let scheme = Scheme { fit: true, rematch };
            (0..50)
                .map(|seed| run_once(&cfg, img, cb, snr, seed, scheme).unwrap().ssim)
                .sum::<f64>()
                / 50.0
        };
        let on = mean(true);
        let off = mean(false);
        pass &= on >= off;
        detail.push(format!("{snr} dB: {on:.4} vs {off:.4}"));
    }
    record(results, "7 rematch benefit", pass, detail.join(", "));
}

/// 8. Full-scale layout counts, checked against brute-force enumeration.
fn criterion_8(results: &mut Vec<Outcome>) {
    let layout = build_layout(448, 792, 4, 6).unwrap();
    let mut n_ref = 0usize;
    let mut n_green = 0usize;
    for t in 0..448i64 {
        for f in 0..792i64 {
            let pilot = |t: i64, f: i64| {
                (0..448).contains(&t) && (0..792).contains(&f) && t % 4 == 0 && f % 6 == 0
            };
            if pilot(t, f) {
                n_ref += 1;
            } else if pilot(t - 1, f) || pilot(t + 1, f) || pilot(t, f - 1) || pilot(t, f + 1) {
                n_green += 1;
            }
        }
    }
    let d_imp = important_feature_count(&layout, 16);
    let pass = layout.n_cpi() == 354_816
        && layout.n_ref == 14_784
        && layout.n_ref == n_ref
        && layout.n_green == n_green
        && d_imp == 2;
    record(
        results,
        "8 structural counts",
        pass,
        format!(
            "N_CPI {} N_ref {} N_green {} D_imp {d_imp}",
            layout.n_cpi(),
            layout.n_ref,
            layout.n_green
        ),
    );
}

/// 9. Map/demap, bit quantization, QAM, OFDM, and codebook files all
/// round-trip exactly, 100+ randomized cases each.
fn criterion_9(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();

    // Map/demap over equalization-free frames.
    let layout = build_layout(12, 18, 4, 6).unwrap();
    let mut ok = true;
    for _ in 0..100 {
        let channels = rng.random_range(2..6);
        let h = rng.random_range(1..4) * 2;
        let w = rng.random_range(1..4) * 2;
        let bits = rng.random_range(1..9) as u32;
        let range = (-1.0, 1.0);
        let values: Vec<f64> = (0..channels * h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tensor = semcom::codec::FeatureTensor::from_values(channels, h, w, values).unwrap();
        let payload = quantize_features(&tensor, bits, range).unwrap();
        let mut perm: Vec<usize> = (0..channels).collect();
        for i in (1..channels).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let ranking = ImportanceWeights { omega: vec![0.0; channels], ranking: perm };
        let mapped = map_payload(&layout, &payload, &ranking, PILOT_SYMBOL).unwrap();
        let back = demap_payload(
            &mapped.frames,
            &layout,
            &ranking,
            channels,
            h,
            w,
            bits,
            range,
        )
        .unwrap();
        ok &= back.words == payload.words;
    }
    pass &= ok;
    notes.push(format!("map/demap {}", if ok { "ok" } else { "FAIL" }));

    // Quantizer bitstrings: dequantize then requantize is the identity.
    let mut ok = true;
    for _ in 0..100 {
        let channels = rng.random_range(1..5);
        let h = rng.random_range(1..6);
        let w = rng.random_range(1..6);
        let bits = rng.random_range(1..13) as u32;
        let lo = rng.random_range(-10.0..0.0);
        let hi = lo + rng.random_range(0.5..20.0);
        let values: Vec<f64> = (0..channels * h * w).map(|_| rng.random_range(lo..hi)).collect();
        let tensor = semcom::codec::FeatureTensor::from_values(channels, h, w, values).unwrap();
        let payload = quantize_features(&tensor, bits, (lo, hi)).unwrap();
        let recon = dequantize_features(&payload).unwrap();
        let again = quantize_features(&recon, bits, (lo, hi)).unwrap();
        ok &= again.words == payload.words;
    }
    pass &= ok;
    notes.push(format!("bit quantizer {}", if ok { "ok" } else { "FAIL" }));

    // QAM round trip.
    let mut ok = true;
    for _ in 0..100 {
        let n = rng.random_range(1..60) * 4;
        let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        ok &= qam16_demodulate(&qam16_modulate(&bits)) == bits;
    }
    pass &= ok;
    notes.push(format!("qam {}", if ok { "ok" } else { "FAIL" }));

    // OFDM round trip (numerical identity).
    let mut ok = true;
    for _ in 0..100 {
        let n_t = rng.random_range(1..4);
        let n_f: usize = rng.random_range(4..33);
        let fft = n_f.next_power_of_two() * 2;
        let cp = rng.random_range(0..fft / 4);
        let frame: Vec<Complex64> = (0..n_t * n_f)
            .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let tx = ofdm_modulate(&frame, n_t, n_f, fft, cp).unwrap();
        let back = ofdm_demodulate(&tx, fft, cp, n_f).unwrap();
        ok &= frame
            .iter()
            .zip(&back)
            .all(|(a, b)| (a - b).norm() < 1e-9);
    }
    pass &= ok;
    notes.push(format!("ofdm {}", if ok { "ok" } else { "FAIL" }));

    // Codebook file round trip (bit-exact f64s).
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    for case in 0..100 {
        let j = rng.random_range(2..20);
        let d = rng.random_range(1..12);
        let entries: Vec<Vec<f64>> = (0..j)
            .map(|_| (0..d).map(|_| normal.sample(&mut rng) * 100.0).collect())
            .collect();
        let cb = Codebook::new(entries).unwrap();
        let path = dir.path().join(format!("cb{case}.vqcb"));
        cb.write_file(&path).unwrap();
        let back = Codebook::read_file(&path).unwrap();
        ok &= back.len() == cb.len()
            && (0..cb.len()).all(|i| back.entry(i) == cb.entry(i))
            && back.value_range() == cb.value_range();
    }
    pass &= ok;
    notes.push(format!("codebook file {}", if ok { "ok" } else { "FAIL" }));

    record(results, "9 bit-exact plumbing", pass, notes.join(", "));
}

/// 10. A 128x128 input produces a 16x32x32 feature tensor.
fn criterion_10(results: &mut Vec<Outcome>) {
    let img = common::synthetic_image(1234, 128, 128);
    let feat = dct_encode(&img, 4).unwrap();
    let pass = feat.channels() == 16 && feat.height() == 32 && feat.width() == 32;
    record(
        results,
        "10 feature-shape parity",
        pass,
        format!("{}x{}x{}", feat.channels(), feat.height(), feat.width()),
    );
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    criterion_1(&mut results);
    criterion_2(&mut results);
    criterion_3(&mut results);
    criterion_4(&mut results);
    criterion_5(&mut results);
    criterion_6(&mut results);
    criterion_7(&mut results);
    criterion_8(&mut results);
    criterion_9(&mut results);
    criterion_10(&mut results);
    let failures: Vec<&Outcome> = results.iter().filter(|o| !o.pass).collect();
    assert!(
        failures.is_empty(),
        "failed criteria: {}",
        failures
            .iter()
            .map(|o| format!("{} ({})", o.label, o.detail))
            .collect::<Vec<_>>()
            .join("; ")
    );
}
