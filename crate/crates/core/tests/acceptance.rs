//! Acceptance criteria A1–A10, one `PASS`/`FAIL`/`SKIP` line each.
//!
//! Runs without the libtest harness so every line is printed even when
//! output capture is on. Arguments that do not start with `-` filter the
//! criteria by substring (`cargo test --test acceptance -- a9`). The process
//! exits nonzero if any criterion fails.
//!
//! A10 needs a real corpus: set `SCATEMO_EMODB_MANIFEST` to an EmoDB manifest
//! CSV to run it, otherwise it is skipped.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use scatemo::classify::{kkt_residual, svm_train, train_binary};
use scatemo::eval::{accuracy, evaluate_features, uar, ManifestRow};
use scatemo::features::{extract_waveforms, FeatureCache};
use scatemo::filterbank::{build_morlet_bank, littlewood_paley_bounds, littlewood_paley_bounds_in, Region};
use scatemo::mfcc::{mfcc_frames, MfccExtractor};
use scatemo::scattering::ScatteringNetwork;
use scatemo::{
    ConfusionMatrix, DatasetManifest, FeatureConfig, FeatureKind, FilterBankSpec, GridSpec, MfccConfig,
    ScatteringConfig, ScatteringPath, SvmParams, Waveform,
};

const SR: f64 = 16000.0;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Verdict {
    status: Status,
    detail: String,
}

fn verdict(_id: &str, pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { status: if pass { Status::Pass } else { Status::Fail }, detail: detail.into() }
}

fn wave(x: Vec<f64>) -> Waveform {
    Waveform::new(x, 16000).unwrap()
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn flat(frames: &[Vec<f64>]) -> Vec<f64> {
    frames.iter().flatten().copied().collect()
}

fn a1_filterbank_soundness() -> Verdict {
    let start = Instant::now();
    let mut worst_max = 0.0f64;
    let mut worst_min = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    for q in [1u32, 3, 5, 8] {
        for t in [4096usize, 16384, 32768] {
            let bank = build_morlet_bank(FilterBankSpec::new(q, t, 65536).unwrap()).unwrap();
            worst_max = worst_max.max(littlewood_paley_bounds(&bank).max);
            // Covered band: from 1/T up to the highest center frequency.
            let band = littlewood_paley_bounds_in(&bank, 1.0 / t as f64, bank.filters()[0].center);
            worst_min = worst_min.min(band.min);
            let r = 2f64.powf(-1.0 / q as f64);
            let geo: Vec<f64> =
                bank.filters().iter().filter(|f| f.region == Region::Geometric).map(|f| f.center).collect();
            for w in geo.windows(2) {
                worst_ratio = worst_ratio.max((w[1] / w[0] - r).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_max <= 1.0 + 1e-6 && worst_min >= 0.5 && worst_ratio <= 1e-9 && elapsed < Duration::from_secs(5);
    verdict(
        "A1",
        pass,
        format!(
            "LP max {worst_max:.9}, covered-band min {worst_min:.4}, ratio error {worst_ratio:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn random_signal(rng: &mut ChaCha8Rng, kind: usize) -> Vec<f64> {
    let n = 51000;
    match kind % 3 {
        0 => {
            let amp = rng.gen_range(0.01..1.0);
            (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
        }
        1 => {
            let parts: Vec<(f64, f64, f64)> =
                (0..5).map(|_| (rng.gen_range(0.0..0.5), rng.gen_range(50.0..7900.0), rng.gen_range(0.0..2.0 * PI))).collect();
            (0..n)
                .map(|i| parts.iter().map(|&(a, f, p)| a * (2.0 * PI * f * i as f64 / SR + p).sin()).sum())
                .collect()
        }
        _ => {
            let (f0, f1) = (rng.gen_range(100.0..1000.0), rng.gen_range(1000.0..7000.0));
            let dur = n as f64 / SR;
            (0..n)
                .map(|i| {
                    let t = i as f64 / SR;
                    let phase = 2.0 * PI * (f0 * t + (f1 - f0) * t * t / (2.0 * dur));
                    (PI * i as f64 / n as f64).sin() * phase.sin()
                })
                .collect()
        }
    }
}

fn a2_non_expansive() -> Verdict {
    let net = ScatteringNetwork::new(ScatteringConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio = 0.0f64;
    let mut violations = 0;
    for trial in 0..100 {
        let x = random_signal(&mut rng, trial);
        // Every third pair is a small perturbation, the hardest case for the ratio.
        let y: Vec<f64> = if trial % 3 == 2 {
            x.iter().map(|v| v + rng.gen_range(-1e-3..1e-3)).collect()
        } else {
            random_signal(&mut rng, trial + 1)
        };
        let input_dist = l2_diff(&x, &y);
        let sx = flat(&net.transform(&wave(x)).unwrap().frames);
        let sy = flat(&net.transform(&wave(y)).unwrap().frames);
        let feat_dist = l2_diff(&sx, &sy);
        if feat_dist > input_dist + 1e-6 {
            violations += 1;
        }
        worst_ratio = worst_ratio.max(feat_dist / input_dist);
    }
    verdict("A2", violations == 0, format!("100 pairs, {violations} violations, max ‖ΔS‖/‖Δx‖ = {worst_ratio:.4}"))
}

/// Noise band-limited to 80–4000 Hz under a Hann envelope of `len` samples starting at `offset`.
fn burst(rng: &mut ChaCha8Rng, total: usize, offset: usize, len: usize) -> Vec<f64> {
    let mut spec: Vec<Complex64> = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut spec);
    for (k, z) in spec.iter_mut().enumerate() {
        let f = k.min(len - k) as f64 * SR / len as f64;
        if !(80.0..=4000.0).contains(&f) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut spec);
    let mut out = vec![0.0; total];
    for (i, z) in spec.iter().enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos();
        out[offset + i] = hann * z.re / len as f64;
    }
    out
}

fn delay(x: &[f64], by: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    out[by..].copy_from_slice(&x[..x.len() - by]);
    out
}

fn a3_translation_invariance() -> Verdict {
    let cfg = ScatteringConfig::default();
    let t = cfg.t;
    let net = ScatteringNetwork::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_small = 0.0f64;
    let mut worst_pooled = 0.0f64;
    let mut sweep = String::new();
    for i in 0..20 {
        let x = burst(&mut rng, 51000, 4000, 24000);
        let base = net.transform(&wave(x.clone())).unwrap();
        let base_frames = flat(&base.frames);
        let small = net.transform(&wave(delay(&x, 256))).unwrap();
        worst_small = worst_small.max(l2_diff(&flat(&small.frames), &base_frames) / l2(&base_frames));
        let large = net.transform(&wave(delay(&x, t))).unwrap();
        worst_pooled = worst_pooled
            .max(l2_diff(&large.utterance_vector, &base.utterance_vector) / l2(&base.utterance_vector));
        if i == 0 {
            // Brute-force sweep backing the two thresholds.
            for shift in [64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384] {
                let s = net.transform(&wave(delay(&x, shift))).unwrap();
                let frame_change = l2_diff(&flat(&s.frames), &base_frames) / l2(&base_frames);
                let pooled_change =
                    l2_diff(&s.utterance_vector, &base.utterance_vector) / l2(&base.utterance_vector);
                sweep.push_str(&format!(" {shift}:{frame_change:.4}/{pooled_change:.4}"));
            }
        }
    }
    println!("A3 sweep (shift:frame/pooled):{sweep}");
    verdict(
        "A3",
        worst_small < 0.05 && worst_pooled < 0.10,
        format!("20 signals, 256-sample frame change max {worst_small:.4}, T-shift pooled change max {worst_pooled:.4}"),
    )
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
}

fn a4_layer_physics() -> Verdict {
    let net = ScatteringNetwork::new(ScatteringConfig::default()).unwrap();
    let n_fft = net.bank1().n_fft();
    let bin_of = |hz: f64| (hz / SR * n_fft as f64).round() as usize;

    // Layer 1: expected band from the bank dump, the filter with the largest gain at 1 kHz.
    let k1 = bin_of(1000.0);
    let gains1: Vec<f64> = net.bank1().filters().iter().map(|f| f.gain(k1)).collect();
    let expected1 = argmax(&gains1);
    let tone: Vec<f64> = (0..51000).map(|i| (2.0 * PI * 1000.0 * i as f64 / SR).sin()).collect();
    let s = net.transform(&wave(tone)).unwrap();
    let got1 = argmax(&s.pooled_subset(|p| p.order() == 1 && !p.is_frequency()));

    // Layer 2: AM tone, 8 Hz envelope; λ2 read in the carrier's λ1 band.
    let am: Vec<f64> = (0..51000)
        .map(|i| {
            let t = i as f64 / SR;
            (1.0 + 0.8 * (2.0 * PI * 8.0 * t).cos()) * (2.0 * PI * 1000.0 * t).sin()
        })
        .collect();
    let s2 = net.transform(&wave(am)).unwrap();
    let lambda1 = argmax(&s2.pooled_subset(|p| p.order() == 1 && !p.is_frequency()));
    let candidates: Vec<(usize, f64)> = s2
        .paths
        .iter()
        .zip(&s2.utterance_vector)
        .filter_map(|(p, v)| match *p {
            ScatteringPath::Order2 { lambda1: l1, lambda2 } if l1 == lambda1 => Some((lambda2, *v)),
            _ => None,
        })
        .collect();
    let got2 = candidates.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let k2 = bin_of(8.0);
    let gains2: Vec<f64> = net.bank2().filters().iter().map(|f| f.gain(k2)).collect();
    let expected2 = argmax(&gains2);
    let nearest_center = (0..net.bank2().len())
        .min_by(|&a, &b| {
            let d = |i: usize| (net.bank2().filters()[i].center * SR / 8.0).ln().abs();
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    let hz = |c: f64| c * SR;
    verdict(
        "A4",
        got1 == expected1 && lambda1 == expected1 && got2 == expected2,
        format!(
            "S1 argmax λ1={got1} ({:.1} Hz), bank dump {expected1}; S2 argmax λ2={got2} ({:.2} Hz), bank dump {expected2}, log-nearest center {nearest_center} ({:.2} Hz)",
            hz(net.bank1().filters()[got1].center),
            hz(net.bank2().filters()[got2].center),
            hz(net.bank2().filters()[nearest_center].center),
        ),
    )
}

fn harmonic(f0: f64, parts: &[(f64, f64)], eps: f64) -> Vec<f64> {
    (0..51000)
        .map(|i| {
            let t = i as f64 / SR;
            parts
                .iter()
                .enumerate()
                .map(|(k, &(a, ph))| a * (2.0 * PI * (k + 1) as f64 * f0 * (1.0 - eps) * t + ph).sin())
                .sum()
        })
        .collect()
}

/// Deformation distance over the mean distance to the other signals' vectors.
///
/// Unlike ‖ΔΦ‖/‖Φ‖ this is unchanged by adding a constant to, or rescaling,
/// a representation, so MFCC's large log-energy offset does not mask its
/// deviation.
fn relative_deviation(base: &[Vec<f64>], warped: &[Vec<f64>], i: usize) -> f64 {
    let spread = (0..base.len()).filter(|&j| j != i).map(|j| l2_diff(&base[i], &base[j])).sum::<f64>()
        / (base.len() - 1) as f64;
    l2_diff(&base[i], &warped[i]) / spread
}

fn a5_deformation_stability() -> Verdict {
    let net = ScatteringNetwork::new(ScatteringConfig::default()).unwrap();
    let mfcc = MfccExtractor::new(MfccConfig::default(), 16000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let signals: Vec<(f64, Vec<(f64, f64)>)> = (0..10)
        .map(|_| {
            let f0 = rng.gen_range(100.0..250.0);
            let parts = (0..(7500.0 / f0) as usize)
                .map(|k| (rng.gen_range(0.5..1.0) / ((k + 1) as f64).sqrt(), rng.gen_range(0.0..2.0 * PI)))
                .collect();
            (f0, parts)
        })
        .collect();
    let features = |eps: f64| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        signals
            .iter()
            .map(|(f0, parts)| {
                let w = wave(harmonic(*f0, parts, eps));
                (net.transform(&w).unwrap().utterance_vector, mfcc.utterance_vector(&w).unwrap())
            })
            .unzip()
    };
    let (scat0, mfcc0) = features(0.0);
    let mut pass = true;
    let mut detail = Vec::new();
    for eps in [0.002, 0.005, 0.01] {
        let (scat, mf) = features(eps);
        let wins = (0..10)
            .filter(|&i| relative_deviation(&scat0, &scat, i) < relative_deviation(&mfcc0, &mf, i))
            .count();
        let mean = |v: &[Vec<f64>], w: &[Vec<f64>]| (0..10).map(|i| relative_deviation(v, w, i)).sum::<f64>() / 10.0;
        detail.push(format!(
            "ε={eps}: scattering more stable in {wins}/10 (mean dev scat {:.4}, mfcc {:.4})",
            mean(&scat0, &scat),
            mean(&mfcc0, &mf)
        ));
        pass &= wins >= 8;
    }
    verdict("A5", pass, detail.join("; "))
}

/// Independent MFCC reference: naive DFT, mel triangles and DCT-II written out directly.
fn naive_mfcc(x: &[f64]) -> Vec<Vec<f64>> {
    let (win, hop, n_fft, n_mels, n_coeffs) = (320usize, 160usize, 512usize, 26usize, 13usize);
    let mel = |hz: f64| 2595.0 * (1.0 + hz / 700.0).log10();
    let inv_mel = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let edges: Vec<f64> = (0..n_mels + 2).map(|i| inv_mel(mel(8000.0) * i as f64 / (n_mels + 1) as f64)).collect();
    let mut frames = Vec::new();
    let mut start = 0;
    while start + win <= x.len() {
        let windowed: Vec<f64> = (0..win)
            .map(|i| x[start + i] * (0.54 - 0.46 * (2.0 * PI * i as f64 / (win - 1) as f64).cos()))
            .collect();
        let power: Vec<f64> = (0..=n_fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in windowed.iter().enumerate() {
                    let a = -2.0 * PI * ((k * i) % n_fft) as f64 / n_fft as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .collect();
        let log_mel: Vec<f64> = (0..n_mels)
            .map(|m| {
                let e: f64 = power
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let f = k as f64 * SR / n_fft as f64;
                        let w = ((f - edges[m]) / (edges[m + 1] - edges[m]))
                            .min((edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]))
                            .max(0.0);
                        w * p
                    })
                    .sum();
                (e + 1e-10).ln()
            })
            .collect();
        frames.push(
            (0..n_coeffs)
                .map(|c| {
                    let norm = if c == 0 { (1.0 / n_mels as f64).sqrt() } else { (2.0 / n_mels as f64).sqrt() };
                    norm * log_mel
                        .iter()
                        .enumerate()
                        .map(|(m, v)| v * (PI * c as f64 * (2 * m + 1) as f64 / (2 * n_mels) as f64).cos())
                        .sum::<f64>()
                })
                .collect(),
        );
        start += hop;
    }
    frames
}

fn a6_mfcc_matches_naive_dft() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut frames_checked = 0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..16000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = mfcc_frames(&wave(x.clone()), &MfccConfig::default()).unwrap();
        let slow = naive_mfcc(&x);
        assert_eq!(fast.len(), slow.len());
        frames_checked += fast.len();
        for (a, b) in fast.iter().zip(&slow) {
            for (u, v) in a.iter().zip(b) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    verdict("A6", worst <= 1e-9, format!("20 signals, {frames_checked} frames, max |Δ| = {worst:.2e}"))
}

fn a7_metrics() -> Verdict {
    let classes = vec!["a".to_string(), "b".to_string()];
    let m1 = ConfusionMatrix::from_counts(classes.clone(), vec![vec![8, 2], vec![4, 6]]).unwrap();
    let m2 = ConfusionMatrix::from_counts(classes, vec![vec![8, 2], vec![40, 60]]).unwrap();
    let (u1, a1, u2, a2) = (uar(&m1).unwrap(), accuracy(&m1).unwrap(), uar(&m2).unwrap(), accuracy(&m2).unwrap());
    let pass = u1 == 0.7 && a1 == 0.7 && u2 == 0.7 && (a2 - 0.6182).abs() < 1e-4;
    verdict("A7", pass, format!("UAR {u1}, acc {a1}; imbalanced UAR {u2}, acc {a2:.4}"))
}

fn blobs(rng: &mut ChaCha8Rng, centers: &[(f64, f64, &str)], per: usize, sigma: f64) -> (Vec<Vec<f64>>, Vec<String>) {
    let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &(cx, cy, label) in centers {
        for _ in 0..per {
            x.push(vec![cx + rng.sample(normal), cy + rng.sample(normal)]);
            y.push(label.to_string());
        }
    }
    (x, y)
}

fn a8_svm() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let train_acc = |x: &[Vec<f64>], y: &[String], params: SvmParams| {
        let model = svm_train(x, y, &params).unwrap();
        x.iter().zip(y).filter(|(r, l)| &model.predict(r).unwrap().label == *l).count() as f64 / x.len() as f64
    };
    let (bx, by) = blobs(&mut rng, &[(2.0, 2.0, "p"), (-2.0, -2.0, "n")], 50, 0.3);
    let blob_acc = train_acc(&bx, &by, SvmParams::new(1.0, 1.0));
    let (xx, xy) = blobs(&mut rng, &[(1.0, 1.0, "p"), (-1.0, -1.0, "p"), (1.0, -1.0, "n"), (-1.0, 1.0, "n")], 25, 0.1);
    let xor_acc = train_acc(&xx, &xy, SvmParams::new(10.0, 1.0));

    let mut worst_kkt = 0.0f64;
    for (x, y, params) in [(&bx, &by, SvmParams::new(1.0, 1.0)), (&xx, &xy, SvmParams::new(10.0, 1.0))] {
        let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let signs: Vec<f64> = y.iter().map(|l| if l == "p" { 1.0 } else { -1.0 }).collect();
        let sol = train_binary(&rows, &signs, &params).unwrap();
        worst_kkt = worst_kkt.max(kkt_residual(&rows, &signs, &sol.alpha, params.c, params.gamma));
    }
    verdict(
        "A8",
        blob_acc == 1.0 && xor_acc >= 0.95 && worst_kkt <= 1e-3,
        format!("blobs train acc {blob_acc}, XOR train acc {xor_acc}, max KKT residual {worst_kkt:.2e}"),
    )
}

/// 4 speakers (carrier) × 3 classes (modulation rate) × 10 AM-tone utterances.
fn am_corpus() -> (DatasetManifest, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rows = Vec::new();
    let mut audio = Vec::new();
    for (s, carrier) in [600.0, 1200.0, 2400.0, 4800.0].into_iter().enumerate() {
        for (label, rate) in [("m04", 4.0), ("m16", 16.0), ("m64", 64.0)] {
            for u in 0..10 {
                let fc = carrier * rng.gen_range(0.97..1.03);
                let fm = rate * rng.gen_range(0.95..1.05);
                let depth = rng.gen_range(0.5..0.9);
                let amp = rng.gen_range(0.2..0.8);
                let (pc, pm) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                let len = rng.gen_range(40000..56000);
                let x: Vec<f64> = (0..len)
                    .map(|i| {
                        let t = i as f64 / SR;
                        amp * (1.0 + depth * (2.0 * PI * fm * t + pm).cos()) * (2.0 * PI * fc * t + pc).sin()
                            + 0.01 * rng.gen_range(-1.0..1.0)
                    })
                    .collect();
                rows.push(ManifestRow {
                    utterance_id: format!("spk{s}_{label}_{u:02}"),
                    path: PathBuf::from(format!("spk{s}_{label}_{u:02}.wav")),
                    speaker_id: format!("spk{s}"),
                    label: label.into(),
                });
                audio.push(x);
            }
        }
    }
    (DatasetManifest::new(rows).unwrap(), audio)
}

fn a9_end_to_end_loso() -> Verdict {
    let start = Instant::now();
    let (manifest, audio) = am_corpus();
    let index = |r: &ManifestRow| manifest.rows.iter().position(|m| m.utterance_id == r.utterance_id).unwrap();
    let features =
        extract_waveforms(&manifest, &FeatureConfig::new(FeatureKind::Scatnet), |r| wave(audio[index(r)].clone()))
            .unwrap();
    let report = evaluate_features(&features, &GridSpec::default()).unwrap();

    let mut shuffled = features.clone();
    let mut labels: Vec<String> = shuffled.rows.iter().map(|r| r.label.clone()).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    for (row, label) in shuffled.rows.iter_mut().zip(labels) {
        row.label = label;
    }
    let control = evaluate_features(&shuffled, &GridSpec::default()).unwrap();
    let elapsed = start.elapsed();
    verdict(
        "A9",
        report.mean_uar >= 0.9 && control.mean_uar <= 0.55 && elapsed < Duration::from_secs(300),
        format!(
            "scatnet UAR {:.4}, label-permuted UAR {:.4}, {} utterances in {:.1}s",
            report.mean_uar,
            control.mean_uar,
            features.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn a10_emodb_reproduction() -> Verdict {
    let Ok(path) = std::env::var("SCATEMO_EMODB_MANIFEST") else {
        return Verdict { status: Status::Skip, detail: "set SCATEMO_EMODB_MANIFEST to an EmoDB manifest to run".into() };
    };
    let manifest = DatasetManifest::from_path(Path::new(&path)).unwrap();
    let cache_dir = std::env::var("SCATEMO_CACHE_DIR").unwrap_or_else(|_| std::env::temp_dir().join("scatemo-a10").display().to_string());
    let cache = FeatureCache::new(cache_dir);
    let run = |kind| {
        scatemo::eval::run_experiment(&manifest, &FeatureConfig::new(kind), &GridSpec::default(), Some(&cache))
            .unwrap()
            .mean_uar
    };
    let scat = run(FeatureKind::Scatnet);
    let mfcc = run(FeatureKind::Mfcc);
    let layer1 = run(FeatureKind::ScatLayer1);
    let layer2 = run(FeatureKind::ScatLayer2);
    verdict(
        "A10",
        (scat - 0.7130).abs() <= 0.05 && (mfcc - 0.5403).abs() <= 0.05 && layer2 > layer1,
        format!("ScatNet UAR {scat:.4} (ref 0.7130), MFCC {mfcc:.4} (ref 0.5403), layer1 {layer1:.4}, layer2 {layer2:.4}"),
    )
}

fn main() -> std::process::ExitCode {
    let criteria: [(&str, &str, fn() -> Verdict); 10] = [
        ("A1", "a1_filterbank_soundness", a1_filterbank_soundness),
        ("A2", "a2_non_expansive", a2_non_expansive),
        ("A3", "a3_translation_invariance", a3_translation_invariance),
        ("A4", "a4_layer_physics", a4_layer_physics),
        ("A5", "a5_deformation_stability", a5_deformation_stability),
        ("A6", "a6_mfcc_matches_naive_dft", a6_mfcc_matches_naive_dft),
        ("A7", "a7_metrics", a7_metrics),
        ("A8", "a8_svm", a8_svm),
        ("A9", "a9_end_to_end_loso", a9_end_to_end_loso),
        ("A10", "a10_emodb_reproduction", a10_emodb_reproduction),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let v = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict { status: Status::Fail, detail: format!("panicked: {}", msg.unwrap_or_default()) }
        });
        let tag = match v.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed.push(id);
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("{id} {tag}: {}", v.detail);
    }
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: {} failed ({})", failed.len(), failed.join(", "));
        std::process::ExitCode::FAILURE
    }
}
