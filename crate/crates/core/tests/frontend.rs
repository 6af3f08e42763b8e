use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spkid_core::frontend::{
    autocorrelate, decimate_by_two, frame_samples, levinson_durbin, lpc_to_cepstrum, FRAME_HOP,
    FRAME_LEN,
};
use spkid_core::{prepare, AudioSignal, Error};
use spkid_oracles as oracle;

#[test]
fn decimated_sinusoid_matches_direct_8k_synthesis() {
    let tone = |rate: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| 0.8 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate).sin())
            .collect()
    };
    let hi = tone(16000.0, 16000);
    let direct = tone(8000.0, 8000);
    let down = decimate_by_two(&hi);
    assert_eq!(down.len(), 8000);
    // skip the zero-padded edges
    let interior = 40..7960;
    let peak_down = down[interior.clone()]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let peak_direct = direct[interior.clone()]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak_down / peak_direct - 1.0).abs() < 0.01);
    for i in interior {
        assert!((down[i] - direct[i]).abs() < 0.01 * 0.8, "sample {i}");
    }
}

#[test]
fn prepare_16k_yields_8k() {
    let s = AudioSignal::new(vec![0.1; 3200], 16000).unwrap();
    let p = prepare(&s).unwrap();
    assert_eq!(p.sample_rate_hz(), 8000);
    assert_eq!(p.len(), 1600);
}

#[test]
fn autocorrelation_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let x: Vec<f64> = (0..FRAME_LEN).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = autocorrelate(&x, 12).unwrap();
        let want = oracle::autocorrelation(&x, 12);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!(got[1..].iter().all(|r| r.abs() <= got[0]));
    }
}

#[test]
fn levinson_recovers_ar10_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let a = oracle::random_stable_lpc(&mut rng, 10, 0.8);
        let x = oracle::ar_process(&mut rng, &a, 200_000, 1.0);
        let r = autocorrelate(&x, 10).unwrap();
        let est = levinson_durbin(&r, 10).unwrap();
        for (e, t) in est.lpc.iter().zip(&a) {
            assert!((e - t).abs() < 0.05, "{e} vs {t}");
        }
    }
}

#[test]
fn cepstrum_recursion_matches_fft_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = oracle::random_lpc_from_poles(&mut rng, 10, 0.0, 0.98);
        let got = lpc_to_cepstrum(&a, 12).unwrap();
        let want = oracle::fft_cepstrum(&a, 12, 8192);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    assert!(worst <= 1e-6, "worst deviation {worst:e}");
}

#[test]
fn unstable_lpc_is_rejected() {
    assert!(matches!(
        lpc_to_cepstrum(&[0.0, 0.0, 1.2], 12),
        Err(Error::UnstableModel { order: 3, .. })
    ));
}

proptest! {
    #[test]
    fn frames_copy_signal_and_hop_by_80(len in 0usize..3000, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let frames = frame_samples(&x);
        let expected = if len < FRAME_LEN { 0 } else { (len - FRAME_LEN) / FRAME_HOP + 1 };
        prop_assert_eq!(frames.len(), expected);
        for (i, f) in frames.iter().enumerate() {
            prop_assert_eq!(f.start_index(), i * FRAME_HOP);
            prop_assert_eq!(f.raw(), &x[f.start_index()..f.start_index() + FRAME_LEN]);
        }
    }

    #[test]
    fn levinson_reflections_bounded_and_error_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..FRAME_LEN).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = autocorrelate(&x, 10).unwrap();
        let mut prev = r[0];
        for order in 1..=10 {
            let a = levinson_durbin(&r, order).unwrap();
            prop_assert!(a.reflection.iter().all(|k| k.abs() < 1.0));
            prop_assert!(a.pred_error > 0.0);
            prop_assert!(a.pred_error <= prev * (1.0 + 1e-12));
            prev = a.pred_error;
        }
    }

    #[test]
    fn prepared_samples_are_bounded(xs in proptest::collection::vec(-5.0f64..5.0, 1..500)) {
        let p = prepare(&AudioSignal::new(xs, 8000).unwrap()).unwrap();
        prop_assert!(p.samples().iter().all(|v| v.abs() <= 1.0));
    }
}
