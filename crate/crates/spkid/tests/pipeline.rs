use std::sync::OnceLock;

use spkid::eval::{best_alpha, ScoredCorpus};
use spkid::persist::to_string;
use spkid::{
    evaluate, sweep_alpha, sweep_k, synth_corpus, train_models, Corpus, ModelSet, SpeakerData,
    SyntheticSpec, TrainingConfig,
};
use spkid_core::{IdentifyConfig, ResidualMeasure, ResidualSource, SpeakerModel};

fn spec() -> SyntheticSpec {
    SyntheticSpec {
        num_speakers: 4,
        nonlinear_speakers: 2,
        train_utterances: 2,
        test_utterances: 3,
        min_secs: 0.4,
        max_secs: 0.6,
        noise_level: 0.3,
        seed: 17,
        ..SyntheticSpec::default()
    }
}

fn quick_config() -> TrainingConfig {
    TrainingConfig {
        linear_bits: 3,
        nonlinear_bits: 2,
        lloyd_iters: 1,
        seed: 5,
        epochs_per_start: 2,
        num_random_starts: 1,
        max_pairs_per_cluster: 3000,
        ..TrainingConfig::default()
    }
}

fn fixture() -> &'static (Corpus, Vec<SpeakerModel>) {
    static CELL: OnceLock<(Corpus, Vec<SpeakerModel>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let corpus = synth_corpus(&spec()).unwrap();
        let models = train_models(&corpus, &quick_config()).unwrap();
        (corpus, models)
    })
}

fn scored(with_residual: bool) -> ScoredCorpus {
    let (corpus, models) = fixture();
    ScoredCorpus::compute(
        models,
        corpus,
        ResidualMeasure::Mae,
        ResidualSource::Mlp,
        with_residual,
        9,
    )
    .unwrap()
}

#[test]
fn models_have_requested_sizes() {
    let (corpus, models) = fixture();
    assert_eq!(models.len(), corpus.len());
    for (m, s) in models.iter().zip(corpus.speakers()) {
        assert_eq!(m.speaker_id, s.id);
        assert_eq!(m.linear_cb.len(), 8);
        let ncb = m.nonlinear_cb.as_ref().unwrap();
        assert_eq!(ncb.len(), 4);
        assert_eq!(ncb.distortion_history().len(), 2);
        assert_eq!(m.lpc_cb.as_ref().unwrap().predictors.len(), 4);
    }
}

#[test]
fn training_is_reproducible_to_the_byte() {
    let (corpus, models) = fixture();
    let again = train_models(corpus, &quick_config()).unwrap();
    let file = |m: &[SpeakerModel]| {
        to_string(&ModelSet {
            training: quick_config(),
            alpha: None,
            models: m.to_vec(),
        })
        .unwrap()
    };
    assert_eq!(file(models), file(&again));
}

#[test]
fn linear_only_training_has_no_mlp_codebooks() {
    let (corpus, _) = fixture();
    let cfg = TrainingConfig {
        nonlinear: false,
        ..quick_config()
    };
    let models = train_models(corpus, &cfg).unwrap();
    assert!(models.iter().all(|m| m.nonlinear_cb.is_none()));
    let report = evaluate(&models, corpus, &IdentifyConfig::new(0.0, 2)).unwrap();
    let fused = evaluate(&fixture().1, corpus, &IdentifyConfig::new(0.0, 2)).unwrap();
    // alpha = 0 decides on LPCC alone, and LPCC codebooks do not depend on the MLPs
    assert_eq!(report.decided(), fused.decided());
    assert!(evaluate(&models, corpus, &IdentifyConfig::new(1.0, 2)).is_err());
}

#[test]
fn training_utterances_are_recognized() {
    let (corpus, models) = fixture();
    let as_test: Vec<SpeakerData> = corpus
        .speakers()
        .iter()
        .map(|s| SpeakerData {
            test: s.train.clone(),
            ..s.clone()
        })
        .collect();
    let closed = Corpus::new(as_test).unwrap();
    let report = evaluate(models, &closed, &IdentifyConfig::new(0.0, 1)).unwrap();
    assert_eq!(report.errors, 0);
}

#[test]
fn single_speaker_never_errs() {
    let (corpus, models) = fixture();
    let one = Corpus::new(vec![corpus.speakers()[0].clone()]).unwrap();
    let report = evaluate(&models[..1], &one, &IdentifyConfig::new(0.5, 1)).unwrap();
    assert_eq!(report.error_rate, 0.0);
}

#[test]
fn report_is_consistent() {
    let (corpus, models) = fixture();
    let r = evaluate(models, corpus, &IdentifyConfig::new(0.2, 2)).unwrap();
    assert_eq!(r.total, corpus.test_count());
    let confusion_total: usize = r.confusion.values().flat_map(|row| row.values()).sum();
    assert_eq!(confusion_total, r.total);
    assert_eq!(r.errors, r.decisions.iter().filter(|d| !d.correct).count());
    assert!((0.0..=1.0).contains(&r.error_rate));
    assert_eq!(r.error_rate, r.errors as f64 / r.total as f64);
}

#[test]
fn score_cache_matches_identify() {
    let (corpus, models) = fixture();
    let s = scored(true);
    for k in 1..=models.len() {
        for alpha in [0.0, 0.01, 0.1, 1.0, 10.0] {
            let direct = evaluate(models, corpus, &IdentifyConfig::new(alpha, k)).unwrap();
            let cached = s.report(alpha, k).unwrap();
            assert_eq!(cached, direct, "alpha {alpha} k {k}");
        }
    }
}

#[test]
fn alpha_sweep_limits() {
    let (corpus, models) = fixture();
    let lpcc_only = evaluate(models, corpus, &IdentifyConfig::new(0.0, 2)).unwrap();
    assert_eq!(
        sweep_alpha(&scored(false), &[0.0], 2).unwrap(),
        [(0.0, lpcc_only.error_rate)]
    );

    let s = scored(true);
    let alphas = spkid::parse_alphas("log:1e-4:1e2:200").unwrap();
    let table = sweep_alpha(&s, &alphas, 4).unwrap();
    assert_eq!(table.len(), 200);
    // error changes only where some decision changes
    for w in alphas.windows(2) {
        let (a, b) = (s.report(w[0], 4).unwrap(), s.report(w[1], 4).unwrap());
        if a.decided() == b.decided() {
            assert_eq!(a.error_rate, b.error_rate);
        }
    }
    let (best, err) = best_alpha(&table).unwrap();
    assert!(table.iter().all(|&(_, e)| e >= err));
    assert!(alphas.contains(&best));
}

#[test]
fn k_sweep_limits() {
    let (corpus, models) = fixture();
    let n = models.len();
    let s = scored(true);
    let alpha = 0.3;
    let ks: Vec<usize> = (1..=n).collect();
    let table = sweep_k(&s, alpha, &ks).unwrap();

    let lpcc_only = evaluate(models, corpus, &IdentifyConfig::new(0.0, n)).unwrap();
    assert_eq!(table[0].1, lpcc_only.error_rate);

    let exhaustive = evaluate(models, corpus, &IdentifyConfig::new(alpha, n)).unwrap();
    assert_eq!(table[n - 1].1, exhaustive.error_rate);

    for w in table.windows(2) {
        assert!(w[1].2 > w[0].2, "{table:?}");
    }
}

#[test]
fn instruction_counts_follow_the_cost_model() {
    let (corpus, models) = fixture();
    let cm = spkid_core::recognizer::cost_model_for(models, 2, 9).unwrap();
    let r = evaluate(models, corpus, &IdentifyConfig::new(0.5, 2)).unwrap();
    for d in &r.decisions {
        assert_eq!(d.instruction_count, d.frames as u64 * cm.cost_mlp());
    }
}

#[test]
fn linear_residue_baseline_runs() {
    let (corpus, models) = fixture();
    let cfg = IdentifyConfig {
        source: ResidualSource::Lpc,
        ..IdentifyConfig::new(0.5, 2)
    };
    let r = evaluate(models, corpus, &cfg).unwrap();
    assert_eq!(r.total, corpus.test_count());
    let s = ScoredCorpus::compute(
        models,
        corpus,
        ResidualMeasure::Mse,
        ResidualSource::Lpc,
        true,
        9,
    )
    .unwrap();
    let only = s.residual_only_report(models.len()).unwrap();
    assert_eq!(only.alpha, None);
    assert_eq!(only.total, corpus.test_count());
}
