//! Corpus-level evaluation: micro-averaged error decomposition, noun
//! recall, change against a named baseline, and sentence-flow accounting.
//!
//! Rates are corpus totals over corpus reference length, not means of
//! per-sentence rates, and are kept at full precision; rounding happens
//! only in `CorpusReport::rounded` and in table rendering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Language, NounLexicon, Utterance};
use crate::metrics::{align_tokens, noun_recall, tokenize, MetricsError, NounRecall};
use crate::pipeline::{CorrectionOutcome, OutcomeStatus};

/// Error rates as percentages of reference tokens. `total` is built as the
/// sum of the three components, so the decomposition identity is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RatePercents {
    pub substitution: f64,
    pub deletion: f64,
    pub insertion: f64,
    pub total: f64,
}

/// Movement of the total rate against a named baseline system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeVsBaseline {
    /// Percentage-point difference: this system's total minus the baseline's.
    pub absolute: f64,
    /// `absolute / baseline_total`, as a signed fraction.
    pub relative: f64,
}

impl ChangeVsBaseline {
    /// Table form, e.g. "-1.11(21%)": signed absolute points, then the
    /// relative magnitude as a whole percent.
    pub fn render(&self) -> String {
        format!("{:+.2}({:.0}%)", self.absolute, self.relative.abs() * 100.0)
    }
}

/// Sentence accounting across the pipeline gates, plus the quality flow
/// (erroneous sentences fixed, clean sentences broken).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCounts {
    pub detected: usize,
    pub confident: usize,
    pub abandoned: usize,
    pub rejected: usize,
    pub corrected: usize,
    pub fixed_sentences: usize,
    pub broken_sentences: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTotals {
    pub tokens_in: u64,
    pub tokens_out: u64,
}

/// One system's aggregated evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub utterances: usize,
    pub rates: RatePercents,
    /// Percent of reference noun occurrences kept, when a lexicon was given
    /// and matched at least one reference noun.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noun_recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change: Option<ChangeVsBaseline>,
    pub flow: FlowCounts,
    pub tokens: TokenTotals,
}

impl CorpusReport {
    /// Copy with stable precision for report files: rates, recall, and the
    /// absolute change at 2 decimals; the relative change at 4 (two
    /// decimals of its percent form).
    pub fn rounded(&self) -> CorpusReport {
        let r2 = |x: f64| (x * 100.0).round() / 100.0;
        CorpusReport {
            utterances: self.utterances,
            rates: RatePercents {
                substitution: r2(self.rates.substitution),
                deletion: r2(self.rates.deletion),
                insertion: r2(self.rates.insertion),
                total: r2(self.rates.total),
            },
            noun_recall: self.noun_recall.map(r2),
            change: self.change.map(|c| ChangeVsBaseline {
                absolute: r2(c.absolute),
                relative: (c.relative * 10000.0).round() / 10000.0,
            }),
            flow: self.flow,
            tokens: self.tokens,
        }
    }
}

#[derive(Default)]
struct RateAccumulator {
    substitutions: u64,
    deletions: u64,
    insertions: u64,
    reference_tokens: u64,
    recall: NounRecall,
}

impl RateAccumulator {
    fn add_pair(
        &mut self,
        reference: &str,
        hypothesis: &str,
        language: Language,
        lexicon: Option<&NounLexicon>,
    ) -> Result<(), MetricsError> {
        let r = tokenize(reference, language);
        if r.tokens.is_empty() {
            return Err(MetricsError::EmptyReference);
        }
        let h = tokenize(hypothesis, language);
        let counts = align_tokens(&r.tokens, &h.tokens).counts;
        self.substitutions += counts.substitutions as u64;
        self.deletions += counts.deletions as u64;
        self.insertions += counts.insertions as u64;
        self.reference_tokens += counts.reference_tokens as u64;
        if let Some(lexicon) = lexicon {
            self.recall.add(&noun_recall(reference, hypothesis, lexicon)?);
        }
        Ok(())
    }

    fn rates(&self) -> RatePercents {
        if self.reference_tokens == 0 {
            return RatePercents::default();
        }
        let percent = |n: u64| 100.0 * n as f64 / self.reference_tokens as f64;
        let substitution = percent(self.substitutions);
        let deletion = percent(self.deletions);
        let insertion = percent(self.insertions);
        RatePercents { substitution, deletion, insertion, total: substitution + deletion + insertion }
    }
}

fn change_against(total: f64, baseline_total: f64) -> ChangeVsBaseline {
    let absolute = total - baseline_total;
    let relative = if baseline_total == 0.0 { 0.0 } else { absolute / baseline_total };
    ChangeVsBaseline { absolute, relative }
}

fn edit_errors(reference: &str, hypothesis: &str, language: Language) -> Result<usize, MetricsError> {
    let r = tokenize(reference, language);
    if r.tokens.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h = tokenize(hypothesis, language);
    Ok(align_tokens(&r.tokens, &h.tokens).counts.total_errors())
}

/// Full evaluation of a run's outcomes against gold references. Failed
/// outcomes carry no correction and are skipped; `references` maps utterance
/// id to gold text.
pub fn aggregate(
    outcomes: &[CorrectionOutcome],
    references: &BTreeMap<String, String>,
    language: Language,
    lexicon: Option<&NounLexicon>,
    baseline: Option<&CorpusReport>,
) -> Result<CorpusReport, MetricsError> {
    let mut acc = RateAccumulator::default();
    let mut tokens = TokenTotals::default();
    let mut counted = 0usize;
    for outcome in outcomes.iter().filter(|o| !o.status.is_failed()) {
        let reference = references
            .get(&outcome.id)
            .ok_or_else(|| MetricsError::MissingReference(outcome.id.clone()))?;
        acc.add_pair(reference, &outcome.final_text, language, lexicon)?;
        tokens.tokens_in += outcome.tokens_in;
        tokens.tokens_out += outcome.tokens_out;
        counted += 1;
    }
    let flow = sentence_change_analysis(None, outcomes, references, language)?;
    let rates = acc.rates();
    Ok(CorpusReport {
        utterances: counted,
        rates,
        noun_recall: acc.recall.rate().map(|r| 100.0 * r),
        change: baseline.map(|b| change_against(rates.total, b.rates.total)),
        flow,
        tokens,
    })
}

/// Score plain hypothesis/reference pairs with no pipeline context (the
/// direct corpus evaluation entry point). Flow and token counts stay zero.
pub fn corpus_error_report(
    pairs: &[Utterance],
    lexicon: Option<&NounLexicon>,
    baseline: Option<&CorpusReport>,
) -> Result<CorpusReport, MetricsError> {
    let mut acc = RateAccumulator::default();
    for utterance in pairs {
        let reference = utterance
            .reference
            .as_deref()
            .ok_or_else(|| MetricsError::MissingReference(utterance.id.clone()))?;
        acc.add_pair(reference, &utterance.hypothesis, utterance.language, lexicon)?;
    }
    let rates = acc.rates();
    Ok(CorpusReport {
        utterances: pairs.len(),
        rates,
        noun_recall: acc.recall.rate().map(|r| 100.0 * r),
        change: baseline.map(|b| change_against(rates.total, b.rates.total)),
        flow: FlowCounts::default(),
        tokens: TokenTotals::default(),
    })
}

/// Sentence-flow accounting for a run. Gate counts come from the outcome
/// statuses; fixed/broken compare error counts before and after, where
/// "before" is the baseline system's output for the same utterance when
/// given, and the raw original otherwise. Both conservation identities,
/// detected = confident + abandoned and corrected = confident - rejected,
/// are enforced as internal assertions.
pub fn sentence_change_analysis(
    baseline_outcomes: Option<&[CorrectionOutcome]>,
    corrected_outcomes: &[CorrectionOutcome],
    references: &BTreeMap<String, String>,
    language: Language,
) -> Result<FlowCounts, MetricsError> {
    let outcomes: Vec<&CorrectionOutcome> =
        corrected_outcomes.iter().filter(|o| !o.status.is_failed()).collect();
    let baseline_map: Option<BTreeMap<&str, &str>> = match baseline_outcomes {
        None => None,
        Some(baseline) => {
            let baseline: Vec<&CorrectionOutcome> =
                baseline.iter().filter(|o| !o.status.is_failed()).collect();
            let ours: BTreeSet<&str> = outcomes.iter().map(|o| o.id.as_str()).collect();
            let theirs: BTreeSet<&str> = baseline.iter().map(|o| o.id.as_str()).collect();
            if ours != theirs {
                let odd = ours.symmetric_difference(&theirs).next().expect("sets differ");
                return Err(MetricsError::CorpusMismatch(format!(
                    "utterance `{odd}` is present on only one side"
                )));
            }
            Some(baseline.iter().map(|o| (o.id.as_str(), o.final_text.as_str())).collect())
        }
    };

    let mut flow = FlowCounts::default();
    for outcome in &outcomes {
        if outcome.detected {
            flow.detected += 1;
        }
        if outcome.confident {
            flow.confident += 1;
        }
        match outcome.status {
            OutcomeStatus::Corrected => flow.corrected += 1,
            OutcomeStatus::AbandonedNoConfidence => flow.abandoned += 1,
            OutcomeStatus::RejectedByVerification => flow.rejected += 1,
            OutcomeStatus::PassthroughClean | OutcomeStatus::Failed => {}
        }
        let reference = references
            .get(&outcome.id)
            .ok_or_else(|| MetricsError::MissingReference(outcome.id.clone()))?;
        let before_text = baseline_map
            .as_ref()
            .map(|m| *m.get(outcome.id.as_str()).expect("id sets were checked equal"))
            .unwrap_or(&outcome.original);
        let before = edit_errors(reference, before_text, language)?;
        let after = edit_errors(reference, &outcome.final_text, language)?;
        if before > 0 && after == 0 {
            flow.fixed_sentences += 1;
        }
        if before == 0 && after > 0 {
            flow.broken_sentences += 1;
        }
    }
    assert_eq!(
        flow.detected,
        flow.confident + flow.abandoned,
        "every detected sentence must end confident or abandoned"
    );
    assert_eq!(
        flow.corrected,
        flow.confident - flow.rejected,
        "every confident sentence must end corrected or rejected"
    );
    Ok(flow)
}
