//! Comparison of DSC, the 0-1 baseline and observed sharing against
//! manual relevance labels.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::error::Result;
use crate::relevance::{Label, Model, Scorer, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Set-based precision, recall and F1.
///
/// An empty prediction has precision 1 against an empty truth set and 0
/// otherwise; recall is 1 whenever the truth set is empty; F1 is 0 when
/// both precision and recall are 0.
pub fn precision_recall(predicted: &BTreeSet<String>, truth: &BTreeSet<String>) -> Metrics {
    let hits = predicted.intersection(truth).count() as f64;
    let precision = match (predicted.is_empty(), truth.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => hits / predicted.len() as f64,
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        precision,
        recall,
        f1,
    }
}

/// `(|shared \ truth|, |truth \ shared|)`.
pub fn redundancy_and_miss(shared: &BTreeSet<String>, truth: &BTreeSet<String>) -> (usize, usize) {
    (shared.difference(truth).count(), truth.difference(shared).count())
}

/// Where a predicted recipient set comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Predictor {
    Model(Model),
    /// The roles the event was actually shared with.
    Observed,
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predictor::Model(m) => m.fmt(f),
            Predictor::Observed => f.write_str("observed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub predictor: Predictor,
    pub predicted: BTreeSet<String>,
    /// Absent when the event carries no manual labels.
    pub scores: Option<OutcomeScores>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeScores {
    pub metrics: Metrics,
    pub redundancy: usize,
    pub miss: usize,
}

impl Outcome {
    fn new(predictor: Predictor, predicted: BTreeSet<String>, truth: Option<&BTreeSet<String>>) -> Self {
        let scores = truth.map(|t| {
            let (redundancy, miss) = redundancy_and_miss(&predicted, t);
            OutcomeScores {
                metrics: precision_recall(&predicted, t),
                redundancy,
                miss,
            }
        });
        Self {
            predictor,
            predicted,
            scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub role_id: String,
    pub role_name: String,
    pub dsc_score: f64,
    pub dsc_label: Label,
    pub static_score: Option<u32>,
    pub static_label: Option<Label>,
    pub shared: Option<bool>,
    pub manual: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventComparison {
    pub event_id: String,
    pub rows: Vec<ComparisonRow>,
    pub outcomes: Vec<Outcome>,
}

impl EventComparison {
    pub fn outcome(&self, predictor: Predictor) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.predictor == predictor)
    }

    pub fn has_truth(&self) -> bool {
        self.rows.iter().any(|r| r.manual.is_some())
    }
}

/// Scores one event under both models and lines the results up against
/// the observed sharing and manual labels.
pub fn compare_models(scorer: &Scorer<'_>, event_id: &str, thresholds: Thresholds) -> Result<EventComparison> {
    let dsc = scorer.dsc_scores(event_id, thresholds.tau())?;
    let statics = if scorer.has_profiles() {
        Some(scorer.static_scores(event_id)?)
    } else {
        None
    };
    let corpus = scorer.corpus();
    let event = corpus
        .event(event_id)
        .expect("event existence checked by dsc_scores");
    let shared = event.shared_to();
    let truth = event.manual_relevant();

    let rows = dsc
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let role = corpus.role(&s.role_id).expect("scores follow registered roles");
            let static_score = statics.as_ref().map(|v| v[i].1);
            ComparisonRow {
                role_id: s.role_id.clone(),
                role_name: role.name.clone(),
                dsc_score: s.score,
                dsc_label: s.label,
                static_score,
                static_label: static_score.map(|v| {
                    crate::relevance::classify(f64::from(v), thresholds.for_model(Model::Static01))
                }),
                shared: shared.map(|set| set.contains(&s.role_id)),
                manual: truth.map(|set| set.contains(&s.role_id)),
            }
        })
        .collect::<Vec<_>>();

    let high = |pick: &dyn Fn(&ComparisonRow) -> Option<Label>| -> BTreeSet<String> {
        rows.iter()
            .filter(|r| pick(r) == Some(Label::High))
            .map(|r| r.role_id.clone())
            .collect()
    };
    let mut outcomes = vec![Outcome::new(
        Predictor::Model(Model::Dsc),
        high(&|r| Some(r.dsc_label)),
        truth,
    )];
    if statics.is_some() {
        outcomes.push(Outcome::new(
            Predictor::Model(Model::Static01),
            high(&|r| r.static_label),
            truth,
        ));
    }
    if let Some(shared) = shared {
        outcomes.push(Outcome::new(Predictor::Observed, shared.clone(), truth));
    }
    Ok(EventComparison {
        event_id: event_id.to_string(),
        rows,
        outcomes,
    })
}

/// Unweighted mean of per-event scores over events with manual labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub predictor: Predictor,
    pub events: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub redundancy: f64,
    pub miss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub events: Vec<EventComparison>,
    pub aggregates: Vec<Aggregate>,
}

pub fn aggregate(events: &[EventComparison]) -> Vec<Aggregate> {
    let predictors: BTreeSet<Predictor> = events
        .iter()
        .flat_map(|e| e.outcomes.iter().map(|o| o.predictor))
        .collect();
    predictors
        .into_iter()
        .filter_map(|predictor| {
            let scored: Vec<OutcomeScores> = events
                .iter()
                .filter_map(|e| e.outcome(predictor).and_then(|o| o.scores))
                .collect();
            if scored.is_empty() {
                return None;
            }
            let n = scored.len() as f64;
            let mean = |f: fn(&OutcomeScores) -> f64| scored.iter().map(f).sum::<f64>() / n;
            Some(Aggregate {
                predictor,
                events: scored.len(),
                precision: mean(|s| s.metrics.precision),
                recall: mean(|s| s.metrics.recall),
                f1: mean(|s| s.metrics.f1),
                redundancy: mean(|s| s.redundancy as f64),
                miss: mean(|s| s.miss as f64),
            })
        })
        .collect()
}

pub fn evaluate<'e, I>(scorer: &Scorer<'_>, event_ids: I, thresholds: Thresholds) -> Result<EvalReport>
where
    I: IntoIterator<Item = &'e str>,
{
    let events = event_ids
        .into_iter()
        .map(|id| compare_models(scorer, id, thresholds))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = aggregate(&events);
    Ok(EvalReport { events, aggregates })
}

fn yes_no(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

/// Human-readable report: one score table per event, then metrics.
pub fn render_text(report: &EvalReport, include_aggregate: bool) -> String {
    let mut out = String::new();
    for (i, ev) in report.events.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let width = ev
            .rows
            .iter()
            .map(|r| r.role_name.chars().count() + 1)
            .max()
            .unwrap_or(0)
            .max(6);
        let _ = writeln!(out, "Event {}", ev.event_id);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:<5}  {:>9}  {:<5}  {:<6}  {:<6}",
            "Roles", "DSC Model", "Label", "0-1 Model", "Label", "Shared", "Manual"
        );
        for r in &ev.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:<5}  {:>9}  {:<5}  {:<6}  {:<6}",
                format!("{}:", r.role_name),
                r.dsc_score,
                r.dsc_label,
                opt(r.static_score),
                opt(r.static_label),
                yes_no(r.shared),
                yes_no(r.manual),
            );
        }
        out.push('\n');
        if ev.has_truth() {
            let _ = writeln!(
                out,
                "{:<9}  {:>9}  {:>6}  {:>6}  {:>10}  {:>4}  recipients",
                "predictor", "precision", "recall", "f1", "redundancy", "miss"
            );
        }
        for o in &ev.outcomes {
            let recipients = o.predicted.iter().cloned().collect::<Vec<_>>().join(",");
            match &o.scores {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{:<9}  {:>9.4}  {:>6.4}  {:>6.4}  {:>10}  {:>4}  {}",
                        o.predictor.to_string(),
                        s.metrics.precision,
                        s.metrics.recall,
                        s.metrics.f1,
                        s.redundancy,
                        s.miss,
                        recipients
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:<9}  metrics unavailable (no manual labels)  {}",
                        o.predictor.to_string(),
                        recipients
                    );
                }
            }
        }
    }
    if include_aggregate {
        out.push('\n');
        let _ = writeln!(out, "Aggregate over labeled events");
        let _ = writeln!(
            out,
            "{:<9}  {:>6}  {:>9}  {:>6}  {:>6}  {:>10}  {:>6}",
            "predictor", "events", "precision", "recall", "f1", "redundancy", "miss"
        );
        for a in &report.aggregates {
            let _ = writeln!(
                out,
                "{:<9}  {:>6}  {:>9.4}  {:>6.4}  {:>6.4}  {:>10.4}  {:>6.4}",
                a.predictor.to_string(),
                a.events,
                a.precision,
                a.recall,
                a.f1,
                a.redundancy,
                a.miss
            );
        }
    }
    out
}

/// Per-role rows as TSV.
pub fn render_rows_tsv(report: &EvalReport) -> String {
    let mut out = String::from(
        "event_id\trole_id\trole_name\tdsc_score\tdsc_label\tstatic_score\tstatic_label\tshared\tmanual\n",
    );
    for ev in &report.events {
        for r in &ev.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}",
                ev.event_id,
                r.role_id,
                r.role_name,
                r.dsc_score,
                r.dsc_label,
                opt(r.static_score),
                opt(r.static_label),
                yes_no(r.shared),
                yes_no(r.manual)
            );
        }
    }
    out
}

/// Metrics as TSV; aggregate rows use `*` as the event id.
pub fn render_metrics_tsv(report: &EvalReport, include_aggregate: bool) -> String {
    let mut out =
        String::from("event_id\tpredictor\tevents\tprecision\trecall\tf1\tredundancy\tmiss\tpredicted\n");
    for ev in &report.events {
        for o in &ev.outcomes {
            let predicted = o.predicted.iter().cloned().collect::<Vec<_>>().join(",");
            match &o.scores {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t1\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                        ev.event_id,
                        o.predictor,
                        s.metrics.precision,
                        s.metrics.recall,
                        s.metrics.f1,
                        s.redundancy,
                        s.miss,
                        predicted
                    );
                }
                None => {
                    let _ = writeln!(out, "{}\t{}\t0\t-\t-\t-\t-\t-\t{}", ev.event_id, o.predictor, predicted);
                }
            }
        }
    }
    if include_aggregate {
        for a in &report.aggregates {
            let _ = writeln!(
                out,
                "*\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t-",
                a.predictor, a.events, a.precision, a.recall, a.f1, a.redundancy, a.miss
            );
        }
    }
    out
}
