use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use spkid::eval::{best_alpha, format_table, ScoredCorpus};
use spkid::{
    config, evaluate, load_corpus, load_models, parse_alphas, save_models, sweep_alpha, sweep_k,
    synth, train_models, Corpus, ModelSet, SyntheticSpec, TrainingConfig,
};
use spkid_core::cost::DEFAULT_C_TG;
use spkid_core::frontend::{extract_features, prepare};
use spkid_core::{
    identify, CostModel, IdentifyConfig, ResidualMeasure, ResidualSource, SplitMethod,
};

/// Speaker identification with LPCC codebooks fused with MLP predictor
/// codebooks.
///
/// Any subcommand accepts `--config FILE`: a `key = value` file whose keys
/// are that subcommand's flag names. Flags on the command line win.
#[derive(Parser)]
#[command(version, args_override_self = true)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per speaker and save them.
    Train(TrainArgs),
    /// Identify the speaker of one WAV file.
    Identify(IdentifyArgs),
    /// Closed-set error rate on a corpus's test utterances.
    Evaluate(EvaluateArgs),
    /// Error rate as a function of the fusion weight alpha.
    SweepAlpha(SweepAlphaArgs),
    /// Error rate and instruction count as a function of K.
    SweepK(SweepKArgs),
    /// Per-frame instruction counts of the cost model.
    Cost(CostArgs),
    /// Write a synthetic WAV corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Corpus root: <DIR>/<speaker>/{train,test}/*.wav.
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    /// Synthetic corpus spec (key = value file) generated in memory.
    #[arg(long, value_name = "SPECFILE")]
    synthetic: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<Corpus> {
        if let Some(dir) = &self.corpus {
            return load_corpus(dir).with_context(|| format!("loading corpus {}", dir.display()));
        }
        let path = self.synthetic.as_ref().expect("clap enforces one source");
        let spec = SyntheticSpec::from_file(path)?;
        Ok(spkid::synth_corpus(&spec)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Mae,
    Mse,
}

impl From<MeasureArg> for ResidualMeasure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Mae => ResidualMeasure::Mae,
            MeasureArg::Mse => ResidualMeasure::Mse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ResidualArg {
    /// MLP predictor codebook.
    Mlp,
    /// Linear-prediction baseline, one LPC predictor per LPCC cell.
    Lpc,
}

impl From<ResidualArg> for ResidualSource {
    fn from(r: ResidualArg) -> Self {
        match r {
            ResidualArg::Mlp => ResidualSource::Mlp,
            ResidualArg::Lpc => ResidualSource::Lpc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Hyperplane,
    Stddev,
}

#[derive(Args)]
struct ScoringArgs {
    #[arg(long, value_enum, default_value = "mae")]
    measure: MeasureArg,
    /// Predictor codebook producing the residue term.
    #[arg(long, value_enum, default_value = "mlp")]
    residual: ResidualArg,
    /// Units charged per tanh evaluation.
    #[arg(long, default_value_t = DEFAULT_C_TG)]
    c_tg: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "MODELS")]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    linear_bits: u32,
    #[arg(long, default_value_t = 4)]
    nonlinear_bits: u32,
    #[arg(long, default_value_t = 0)]
    lloyd_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train LPCC codebooks only.
    #[arg(long)]
    no_nonlinear: bool,
    #[arg(long, value_enum, default_value = "hyperplane")]
    split: SplitArg,
    /// LM epochs per initialization.
    #[arg(long, default_value_t = 8)]
    epochs: usize,
    /// Random initializations besides the warm start.
    #[arg(long, default_value_t = 4)]
    random_starts: usize,
    /// Training pairs per MLP beyond this are subsampled.
    #[arg(long, default_value_t = 20_000)]
    max_pairs: usize,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long, value_name = "MODELS")]
    models: PathBuf,
    #[arg(long, value_name = "FILE")]
    wav: PathBuf,
    /// Fusion weight; defaults to the one stored in the model file.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[command(flatten)]
    scoring: ScoringArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "MODELS")]
    models: PathBuf,
    #[command(flatten)]
    source: Source,
    /// Fusion weight; defaults to the one stored in the model file.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// JSON report with the confusion matrix and every decision.
    #[arg(long, value_name = "OUT")]
    report: Option<PathBuf>,
    /// Decide by the residue alone among the K preselected (baseline).
    #[arg(long)]
    residual_only: bool,
}

#[derive(Args)]
struct SweepAlphaArgs {
    #[arg(long, value_name = "MODELS")]
    models: PathBuf,
    #[command(flatten)]
    source: Source,
    /// `a,b,c`, `lin:START:STOP:COUNT` or `log:START:STOP:COUNT`.
    #[arg(long, value_name = "SPEC", default_value = "log:1e-4:1e2:1000")]
    alphas: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Two-column output: alpha, error rate.
    #[arg(long, value_name = "OUT")]
    out: PathBuf,
    /// Record the best alpha in the model file.
    #[arg(long)]
    store_best: bool,
}

#[derive(Args)]
struct SweepKArgs {
    #[arg(long, value_name = "MODELS")]
    models: PathBuf,
    #[command(flatten)]
    source: Source,
    /// Fusion weight; defaults to the one stored in the model file.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated K values (default: 1 through the number of speakers).
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Three-column output: K, error rate, total instruction count.
    #[arg(long, value_name = "OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct CostArgs {
    /// LPCC codebook size.
    #[arg(long, default_value_t = 128)]
    t_cl: u64,
    /// MLP codebook size.
    #[arg(long, default_value_t = 32)]
    t_cnl: u64,
    #[arg(long, default_value_t = 2)]
    k: u64,
    /// Number of speakers.
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long, default_value_t = DEFAULT_C_TG)]
    c_tg: u64,
    /// Cepstral order.
    #[arg(long, default_value_t = 12)]
    p: u64,
    /// Frame length.
    #[arg(long, default_value_t = 240)]
    l_t: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Spec file (key = value); defaults apply to missing keys.
    #[arg(long, value_name = "SPECFILE")]
    spec: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn resolve_alpha(flag: Option<f64>, set: &ModelSet) -> Result<f64> {
    match flag.or(set.alpha) {
        Some(a) => Ok(a),
        None => {
            bail!("no --alpha given and the model file stores none (run sweep-alpha --store-best)")
        }
    }
}

fn identify_config(alpha: f64, k: usize, s: &ScoringArgs) -> IdentifyConfig {
    IdentifyConfig {
        measure: s.measure.into(),
        source: s.residual.into(),
        c_tg: s.c_tg,
        ..IdentifyConfig::new(alpha, k)
    }
}

fn load(path: &Path) -> Result<ModelSet> {
    load_models(path).with_context(|| format!("loading models {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train(a: TrainArgs) -> Result<()> {
    let corpus = a.source.load()?;
    let training = TrainingConfig {
        linear_bits: a.linear_bits,
        nonlinear_bits: a.nonlinear_bits,
        lloyd_iters: a.lloyd_iters,
        seed: a.seed,
        split_method: match a.split {
            SplitArg::Hyperplane => SplitMethod::Hyperplane,
            SplitArg::Stddev => SplitMethod::StdDev,
        },
        nonlinear: !a.no_nonlinear,
        epochs_per_start: a.epochs,
        num_random_starts: a.random_starts,
        max_pairs_per_cluster: a.max_pairs,
        ..TrainingConfig::default()
    };
    let models = train_models(&corpus, &training)?;
    save_models(
        &a.out,
        &ModelSet {
            training,
            alpha: None,
            models,
        },
    )?;
    println!("trained {} speakers -> {}", corpus.len(), a.out.display());
    Ok(())
}

fn run_identify(a: IdentifyArgs) -> Result<()> {
    let set = load(&a.models)?;
    let alpha = resolve_alpha(a.alpha, &set)?;
    let raw = spkid::wav::read_wav(&a.wav)?;
    let features = extract_features(&prepare(&raw)?)?;
    let r = identify(
        &features,
        &set.models,
        &identify_config(alpha, a.k, &a.scoring),
    )?;
    println!("speaker {}", r.decided_speaker);
    println!("# speaker lpcc residual combined");
    for (id, l) in &r.lpcc_scores {
        let show = |v: Option<&f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        println!(
            "{id} {l:.6} {} {}",
            show(r.residual_scores.get(id)),
            show(r.combined_scores.get(id))
        );
    }
    println!(
        "# frames {} instructions {}",
        r.frames_scored, r.instruction_count
    );
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let set = load(&a.models)?;
    let corpus = a.source.load()?;
    let report = if a.residual_only {
        let s = &a.scoring;
        ScoredCorpus::compute(
            &set.models,
            &corpus,
            s.measure.into(),
            s.residual.into(),
            true,
            s.c_tg,
        )?
        .residual_only_report(a.k)?
    } else {
        let alpha = resolve_alpha(a.alpha, &set)?;
        evaluate(
            &set.models,
            &corpus,
            &identify_config(alpha, a.k, &a.scoring),
        )?
    };
    let alpha = report
        .alpha
        .map_or("residual-only".to_string(), |x| x.to_string());
    println!(
        "alpha {alpha} k {}: {} / {} wrong, error rate {:.4}",
        a.k, report.errors, report.total, report.error_rate
    );
    if let Some(path) = &a.report {
        #[derive(serde::Serialize)]
        struct Out<'a> {
            training: &'a TrainingConfig,
            report: &'a spkid::EvalReport,
        }
        let text = serde_json::to_string_pretty(&Out {
            training: &set.training,
            report: &report,
        })?;
        write_text(path, &text)?;
    }
    Ok(())
}

fn run_sweep_alpha(a: SweepAlphaArgs) -> Result<()> {
    let mut set = load(&a.models)?;
    let corpus = a.source.load()?;
    let alphas = parse_alphas(&a.alphas)?;
    let with_residual = alphas.iter().any(|&x| x > 0.0);
    let scored = ScoredCorpus::compute(
        &set.models,
        &corpus,
        a.scoring.measure.into(),
        a.scoring.residual.into(),
        with_residual,
        a.scoring.c_tg,
    )?;
    let table = sweep_alpha(&scored, &alphas, a.k)?;
    let rows: Vec<[String; 2]> = table
        .iter()
        .map(|(al, e)| [format!("{al:e}"), format!("{e:.6}")])
        .collect();
    write_text(&a.out, &format_table(&["alpha", "error"], &rows))?;
    let (best, err) = best_alpha(&table).expect("nonempty sweep");
    println!("best alpha {best:e}: error rate {err:.4}");
    if a.store_best {
        set.alpha = Some(best);
        save_models(&a.models, &set)?;
        println!("stored alpha in {}", a.models.display());
    }
    Ok(())
}

fn run_sweep_k(a: SweepKArgs) -> Result<()> {
    let set = load(&a.models)?;
    let alpha = resolve_alpha(a.alpha, &set)?;
    let corpus = a.source.load()?;
    let ks: Vec<usize> = if a.ks.is_empty() {
        (1..=set.models.len()).collect()
    } else {
        a.ks.clone()
    };
    let scored = ScoredCorpus::compute(
        &set.models,
        &corpus,
        a.scoring.measure.into(),
        a.scoring.residual.into(),
        alpha > 0.0,
        a.scoring.c_tg,
    )?;
    let table = sweep_k(&scored, alpha, &ks)?;
    let rows: Vec<[String; 3]> = table
        .iter()
        .map(|(k, e, n)| [k.to_string(), format!("{e:.6}"), n.to_string()])
        .collect();
    write_text(
        &a.out,
        &format_table(&["k", "error", "instructions"], &rows),
    )?;
    for (k, e, n) in &table {
        println!("k {k}: error rate {e:.4}, instructions {n}");
    }
    Ok(())
}

fn run_cost(a: CostArgs) -> Result<()> {
    let cm = CostModel {
        t_cl: a.t_cl,
        t_cnl: a.t_cnl,
        k: a.k,
        n: a.n,
        c_tg: a.c_tg,
        p: a.p,
        l_t: a.l_t,
        ..CostModel::default()
    };
    println!("lpcc {}", cm.cost_lpcc());
    println!("residual {}", cm.cost_residual());
    println!("total {}", cm.cost_mlp());
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => SyntheticSpec::from_file(p)?,
        None => SyntheticSpec::default(),
    };
    let corpus = synth::synthesize(&spec)?;
    corpus.write(&a.out)?;
    println!(
        "wrote {} speakers to {}",
        corpus.speakers.len(),
        a.out.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    let args = config::expand_config_args(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Train(a) => train(a),
        Command::Identify(a) => run_identify(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::SweepAlpha(a) => run_sweep_alpha(a),
        Command::SweepK(a) => run_sweep_k(a),
        Command::Cost(a) => run_cost(a),
        Command::Synth(a) => run_synth(a),
    }
}
