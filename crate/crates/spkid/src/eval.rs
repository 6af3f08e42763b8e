//! Closed-set evaluation, alpha and K sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spkid_core::frontend::FRAME_LEN;
use spkid_core::predictor::residual_count;
use spkid_core::recognizer::ScoreSheet;
use spkid_core::{
    identify, IdentifyConfig, LpcPredictor, MlpPredictor, ResidualMeasure, ResidualSource,
    SamplePredictor, SentenceFeatures, SpeakerModel,
};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub utterance: String,
    pub true_speaker: String,
    pub decided_speaker: String,
    pub correct: bool,
    pub frames: usize,
    pub instruction_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `None` for residual-only decisions.
    pub alpha: Option<f64>,
    pub k: usize,
    pub measure: ResidualMeasure,
    pub source: ResidualSource,
    pub speakers: usize,
    pub total: usize,
    pub errors: usize,
    /// `errors / total`.
    pub error_rate: f64,
    /// `confusion[true][decided]`.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub decisions: Vec<Decision>,
    pub instruction_count: u64,
}

impl EvalReport {
    fn from_decisions(
        alpha: Option<f64>,
        k: usize,
        measure: ResidualMeasure,
        source: ResidualSource,
        speakers: usize,
        decisions: Vec<Decision>,
    ) -> Self {
        let total = decisions.len();
        let errors = decisions.iter().filter(|d| !d.correct).count();
        let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for d in &decisions {
            *confusion
                .entry(d.true_speaker.clone())
                .or_default()
                .entry(d.decided_speaker.clone())
                .or_default() += 1;
        }
        Self {
            alpha,
            k,
            measure,
            source,
            speakers,
            total,
            errors,
            error_rate: if total == 0 {
                0.0
            } else {
                errors as f64 / total as f64
            },
            confusion,
            instruction_count: decisions.iter().map(|d| d.instruction_count).sum(),
            decisions,
        }
    }

    pub fn accuracy(&self) -> f64 {
        1.0 - self.error_rate
    }

    /// Decided speaker per utterance.
    pub fn decided(&self) -> Vec<&str> {
        self.decisions
            .iter()
            .map(|d| d.decided_speaker.as_str())
            .collect()
    }
}

/// A test utterance with its features, ready for scoring.
#[derive(Debug, Clone)]
pub struct TestItem {
    pub utterance: String,
    pub speaker_id: String,
    pub features: SentenceFeatures,
}

fn check_coverage(models: &[SpeakerModel], corpus: &Corpus) -> Result<()> {
    if models.is_empty() {
        return Err(Error::InvalidArgument("no speaker models".into()));
    }
    for id in corpus.ids() {
        if !models.iter().any(|m| m.speaker_id == id) {
            return Err(Error::InvalidArgument(format!(
                "no model for corpus speaker {id:?}"
            )));
        }
    }
    Ok(())
}

/// Features of every test utterance, in corpus order.
pub fn test_items(corpus: &Corpus) -> Result<Vec<TestItem>> {
    let flat: Vec<_> = corpus
        .speakers()
        .iter()
        .flat_map(|s| s.test.iter().map(move |u| (s.id.as_str(), u)))
        .collect();
    flat.par_iter()
        .map(|(id, u)| {
            Ok(TestItem {
                utterance: u.name.clone(),
                speaker_id: id.to_string(),
                features: u.features()?,
            })
        })
        .collect()
}

/// One [`identify`] call per test utterance.
pub fn evaluate(
    models: &[SpeakerModel],
    corpus: &Corpus,
    config: &IdentifyConfig,
) -> Result<EvalReport> {
    check_coverage(models, corpus)?;
    let items = test_items(corpus)?;
    let decisions = items
        .par_iter()
        .map(|item| {
            let r = identify(&item.features, models, config)
                .map_err(|e| Error::core(&item.utterance, e))?;
            Ok(Decision {
                correct: r.decided_speaker == item.speaker_id,
                utterance: item.utterance.clone(),
                true_speaker: item.speaker_id.clone(),
                decided_speaker: r.decided_speaker,
                frames: r.frames_scored,
                instruction_count: r.instruction_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_decisions(
        Some(config.alpha),
        config.k,
        config.measure,
        config.source,
        models.len(),
        decisions,
    ))
}

/// Every speaker's scores for every test utterance, computed once so that
/// decisions for many `(alpha, k)` pairs cost nothing extra. Decisions and
/// instruction counts equal what [`identify`] would report.
#[derive(Debug, Clone)]
pub struct ScoredCorpus {
    ids: Vec<String>,
    items: Vec<(TestItem, ScoreSheet)>,
    /// Per model: LPCC units and residual units per frame.
    lpcc_units: Vec<u64>,
    residual_units: Vec<u64>,
    measure: ResidualMeasure,
    source: ResidualSource,
}

fn residual_units_per_frame<P: SamplePredictor>(predictors: &[P], c_tg: u64) -> u64 {
    let per = predictors
        .first()
        .map_or(0, |p| p.units_per_prediction(c_tg));
    predictors.len() as u64 * residual_count(FRAME_LEN) as u64 * per
}

impl ScoredCorpus {
    pub fn compute(
        models: &[SpeakerModel],
        corpus: &Corpus,
        measure: ResidualMeasure,
        source: ResidualSource,
        with_residual: bool,
        c_tg: u64,
    ) -> Result<Self> {
        check_coverage(models, corpus)?;
        let items = test_items(corpus)?
            .into_par_iter()
            .map(|item| {
                let sheet =
                    ScoreSheet::compute(&item.features, models, measure, source, with_residual)
                        .map_err(|e| Error::core(&item.utterance, e))?;
                Ok((item, sheet))
            })
            .collect::<Result<Vec<_>>>()?;
        let lpcc_units = models
            .iter()
            .map(|m| (m.linear_cb.len() * spkid_core::frontend::CEPSTRUM_ORDER) as u64)
            .collect();
        let residual_units = models
            .iter()
            .map(|m| match source {
                ResidualSource::Mlp => m.nonlinear_cb.as_ref().map_or(0, |n| {
                    residual_units_per_frame::<MlpPredictor>(n.predictors(), c_tg)
                }),
                ResidualSource::Lpc => m.lpc_cb.as_ref().map_or(0, |l| {
                    residual_units_per_frame::<LpcPredictor>(&l.predictors, c_tg)
                }),
            })
            .collect();
        Ok(Self {
            ids: models.iter().map(|m| m.speaker_id.clone()).collect(),
            items,
            lpcc_units,
            residual_units,
            measure,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn report_with(
        &self,
        alpha: Option<f64>,
        k: usize,
        decide: impl Fn(&ScoreSheet, &[&str]) -> spkid_core::Result<usize>,
        with_residual: bool,
    ) -> Result<EvalReport> {
        let ids: Vec<&str> = self.ids.iter().map(String::as_str).collect();
        let lpcc_per_frame: u64 = self.lpcc_units.iter().sum();
        let decisions = self
            .items
            .iter()
            .map(|(item, sheet)| {
                let winner = decide(sheet, &ids).map_err(|e| Error::core(&item.utterance, e))?;
                let mut per_frame = lpcc_per_frame;
                if with_residual {
                    per_frame += spkid_core::recognizer::preselect(&sheet.lpcc, &ids, k)
                        .iter()
                        .map(|&i| self.residual_units[i])
                        .sum::<u64>();
                }
                Ok(Decision {
                    utterance: item.utterance.clone(),
                    true_speaker: item.speaker_id.clone(),
                    decided_speaker: self.ids[winner].clone(),
                    correct: self.ids[winner] == item.speaker_id,
                    frames: sheet.frames_scored,
                    instruction_count: sheet.frames_scored as u64 * per_frame,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalReport::from_decisions(
            alpha,
            k,
            self.measure,
            self.source,
            self.ids.len(),
            decisions,
        ))
    }

    /// Fused decisions with K-preselection.
    pub fn report(&self, alpha: f64, k: usize) -> Result<EvalReport> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} must be finite and non-negative"
            )));
        }
        self.report_with(
            Some(alpha),
            k,
            |s, ids| s.decide(ids, alpha, k),
            alpha > 0.0,
        )
    }

    /// Decisions by residue alone among the `k` preselected speakers.
    pub fn residual_only_report(&self, k: usize) -> Result<EvalReport> {
        self.report_with(None, k, |s, ids| s.decide_residual_only(ids, k), true)
    }
}

/// `(alpha, error rate)` per alpha.
pub fn sweep_alpha(scored: &ScoredCorpus, alphas: &[f64], k: usize) -> Result<Vec<(f64, f64)>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty alpha list".into()));
    }
    alphas
        .iter()
        .map(|&a| Ok((a, scored.report(a, k)?.error_rate)))
        .collect()
}

/// `(k, error rate, total instruction count)` per k.
pub fn sweep_k(scored: &ScoredCorpus, alpha: f64, ks: &[usize]) -> Result<Vec<(usize, f64, u64)>> {
    ks.iter()
        .map(|&k| {
            let r = scored.report(alpha, k)?;
            Ok((k, r.error_rate, r.instruction_count))
        })
        .collect()
}

/// Smallest alpha reaching the lowest error rate in a sweep.
pub fn best_alpha(table: &[(f64, f64)]) -> Option<(f64, f64)> {
    table
        .iter()
        .copied()
        .reduce(|best, row| if row.1 < best.1 { row } else { best })
}

/// Parses `a,b,c`, `lin:START:STOP:COUNT` or `log:START:STOP:COUNT`
/// (geometric spacing, `START > 0`). Ranges include both ends.
pub fn parse_alphas(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::InvalidArgument(format!("alpha list {spec:?}: {m}"));
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("{s:?}: {e}")))
    };
    let values: Vec<f64> = if let Some(range) = spec
        .strip_prefix("lin:")
        .map(|r| (false, r))
        .or_else(|| spec.strip_prefix("log:").map(|r| (true, r)))
    {
        let (log, body) = range;
        let parts: Vec<&str> = body.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad("expected START:STOP:COUNT".into()));
        };
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|e| bad(format!("count: {e}")))?;
        if count == 0 {
            return Err(bad("count must be positive".into()));
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(bad("log spacing needs positive bounds".into()));
        }
        let t = |i: usize| {
            if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            }
        };
        (0..count)
            .map(|i| {
                if i + 1 == count && count > 1 {
                    stop
                } else if log {
                    (start.ln() + t(i) * (stop.ln() - start.ln())).exp()
                } else {
                    start + t(i) * (stop - start)
                }
            })
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(bad(format!("{v} is not a finite non-negative alpha")));
    }
    Ok(values)
}

/// Whitespace-separated columns under a `#` header line.
pub fn format_table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for r in rows {
        let _ = writeln!(out, "{}", r.as_ref().join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_lists() {
        assert_eq!(parse_alphas("0, 0.5,2").unwrap(), [0.0, 0.5, 2.0]);
        assert_eq!(
            parse_alphas("lin:0:1:5").unwrap(),
            [0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let log = parse_alphas("log:0.01:100:5").unwrap();
        for (got, want) in log.iter().zip([0.01, 0.1, 1.0, 10.0, 100.0]) {
            assert!((got - want).abs() < 1e-12 * want);
        }
        assert_eq!(parse_alphas("log:1e-3:1e3:1000").unwrap().len(), 1000);
        assert!(parse_alphas("log:0:1:3").is_err());
        assert!(parse_alphas("-1").is_err());
        assert!(parse_alphas("lin:0:1").is_err());
        assert!(parse_alphas("a,b").is_err());
    }

    #[test]
    fn best_alpha_prefers_smallest_on_ties() {
        assert_eq!(
            best_alpha(&[(0.0, 0.2), (1.0, 0.1), (2.0, 0.1)]),
            Some((1.0, 0.1))
        );
        assert_eq!(best_alpha(&[]), None);
    }
}
