use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spkid::load_models;

fn spkid(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_spkid"))
        .args(args)
        .output()
        .expect("spawn spkid");
    assert!(
        out.status.success(),
        "spkid {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SPEC: &str = "\
num_speakers = 3
nonlinear_speakers = 1
train_utterances = 2
test_utterances = 2
min_secs = 0.4
max_secs = 0.5
seed = 9
";

const TRAIN: [&str; 10] = [
    "--linear-bits",
    "3",
    "--nonlinear-bits",
    "2",
    "--epochs",
    "2",
    "--random-starts",
    "1",
    "--max-pairs",
    "2000",
];

#[test]
fn end_to_end_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    let corpus = dir.path().join("corpus");
    let models = dir.path().join("models.json");
    fs::write(&spec, SPEC).unwrap();

    let out = stdout(&spkid(&["synth", "--spec", p(&spec), "--out", p(&corpus)]));
    assert!(out.contains("wrote 3 speakers"), "{out}");
    assert!(corpus.join("spk02/test/01.wav").is_file());

    let mut train = vec!["train", "--corpus", p(&corpus), "--out", p(&models)];
    train.extend(TRAIN);
    spkid(&train);
    let set = load_models(&models).unwrap();
    assert_eq!(set.models.len(), 3);
    assert_eq!(set.alpha, None);

    // no stored alpha and no flag
    let failed = Command::new(env!("CARGO_BIN_EXE_spkid"))
        .args(["evaluate", "--models", p(&models), "--corpus", p(&corpus)])
        .output()
        .unwrap();
    assert!(!failed.status.success());

    let report = dir.path().join("report.json");
    let out = stdout(&spkid(&[
        "evaluate",
        "--models",
        p(&models),
        "--corpus",
        p(&corpus),
        "--alpha",
        "0",
        "--report",
        p(&report),
    ]));
    assert!(out.contains("/ 6 wrong"), "{out}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["report"]["total"], 6);
    assert_eq!(json["training"]["linear_bits"], 3);

    let out = stdout(&spkid(&[
        "evaluate",
        "--models",
        p(&models),
        "--corpus",
        p(&corpus),
        "--residual-only",
        "--k",
        "3",
    ]));
    assert!(out.contains("residual-only"), "{out}");

    let sweep = dir.path().join("alpha.tsv");
    let out = stdout(&spkid(&[
        "sweep-alpha",
        "--models",
        p(&models),
        "--corpus",
        p(&corpus),
        "--alphas",
        "0,0.1,1",
        "--out",
        p(&sweep),
        "--store-best",
    ]));
    assert!(out.contains("best alpha"), "{out}");
    assert_eq!(fs::read_to_string(&sweep).unwrap().lines().count(), 4);
    let stored = load_models(&models).unwrap().alpha.expect("alpha stored");
    assert!([0.0, 0.1, 1.0].contains(&stored));

    let wav = corpus.join("spk01/test/00.wav");
    let out = stdout(&spkid(&[
        "identify",
        "--models",
        p(&models),
        "--wav",
        p(&wav),
    ]));
    assert!(out.starts_with("speaker spk0"), "{out}");
    assert_eq!(
        out.lines().filter(|l| l.starts_with("spk")).count(),
        3,
        "{out}"
    );

    let ksweep = dir.path().join("k.tsv");
    let out = stdout(&spkid(&[
        "sweep-k",
        "--models",
        p(&models),
        "--corpus",
        p(&corpus),
        "--alpha",
        "0.5",
        "--out",
        p(&ksweep),
    ]));
    assert_eq!(out.lines().count(), 3, "{out}");
    let counts: Vec<u64> = fs::read_to_string(&ksweep)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
}

#[test]
fn cost_prints_the_model() {
    let out = stdout(&spkid(&["cost", "--n", "38"]));
    assert_eq!(out, "lpcc 58368\nresidual 1633920\ntotal 1692288\n");
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cost.conf");
    fs::write(&cfg, "# ten speakers\nn = 10\nt_cl = 64\n").unwrap();
    let from_file = stdout(&spkid(&["cost", "--config", p(&cfg)]));
    let explicit = stdout(&spkid(&["cost", "--n", "10", "--t-cl", "64"]));
    assert_eq!(from_file, explicit);
    let overridden = stdout(&spkid(&[
        "cost",
        "--config",
        p(&cfg),
        "--n",
        "38",
        "--t-cl",
        "128",
    ]));
    assert_eq!(overridden, stdout(&spkid(&["cost", "--n", "38"])));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spkid"))
        .args([
            "evaluate",
            "--models",
            p(&dir.path().join("absent.json")),
            "--corpus",
            p(dir.path()),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}
