mod common;

use common::*;
use dfsep::signal::{istft, stft, StftConfig, TimeSignal};
use proptest::prelude::*;

#[test]
fn bins_match_direct_dft() {
    let mut r = rng(8);
    let cfg = StftConfig::new(32, 48).unwrap();
    let x = TimeSignal::new(random_vec(&mut r, 200), 8000).unwrap();
    let spec = stft(&x, &cfg).unwrap();
    let w = hamming_ref(32);
    for f in 0..spec.num_frames() {
        let frame: Vec<f64> = (0..32).map(|n| x.samples()[f * 16 + n] * w[n]).collect();
        for (k, (re, im)) in dft_one_sided(&frame, 48).into_iter().enumerate() {
            let c = spec.complex_bins[[k, f]];
            assert!((c.re - re).abs() < 1e-10 && (c.im - im).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_interior(seed in 0u64..10_000, half in 4usize..64, len_extra in 0usize..300) {
        let n = 2 * half;
        let cfg = StftConfig::new(n, n).unwrap();
        let len = 4 * n + len_extra;
        let mut r = rng(seed);
        let x = TimeSignal::new(random_vec(&mut r, len), 8000).unwrap();
        let spec = stft(&x, &cfg).unwrap();
        let y = istft(&spec.magnitude, &spec.phase, &cfg, 8000).unwrap();
        let hop = cfg.hop();
        let end = y.len() - hop;
        let err: f64 = (hop..end).map(|i| (y.samples()[i] - x.samples()[i]).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = (hop..end).map(|i| x.samples()[i].powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-9 * norm.max(1e-300));
    }

    #[test]
    fn frame_parseval(seed in 0u64..10_000) {
        let cfg = StftConfig::new(64, 64).unwrap();
        let mut r = rng(seed);
        let x = TimeSignal::new(random_vec(&mut r, 400), 8000).unwrap();
        let spec = stft(&x, &cfg).unwrap();
        let w = hamming_ref(64);
        for f in 0..spec.num_frames() {
            let time: f64 = (0..64).map(|n| (x.samples()[f * 32 + n] * w[n]).powi(2)).sum();
            let col = spec.magnitude.column(f);
            let freq: f64 = col.iter().enumerate()
                .map(|(k, m)| if k == 0 || k == 32 { m * m } else { 2.0 * m * m })
                .sum::<f64>() / 64.0;
            prop_assert!((time - freq).abs() <= 1e-9 * time.max(1e-300));
        }
    }
}
