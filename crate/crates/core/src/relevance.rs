//! Event-role relevance: cosine scoring, the static 0-1 baseline,
//! High/Low classification and recipient ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::context::{CfRegistry, Pattern};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::vectorize::{role_vector, EventVector, RoleVector, Vectorizer};

pub const DEFAULT_TAU: f64 = 0.3;
pub const DEFAULT_STATIC_THRESHOLD: u32 = 7;

/// Cosine of the angle between two weight vectors.
///
/// Returns 0 when either vector has zero norm. With non-negative inputs the
/// result lies in `[0, 1]`.
pub fn cosine_relevance(event: &[f64], role: &[f64]) -> Result<f64> {
    if event.len() != role.len() {
        return Err(Error::DimensionMismatch {
            left: event.len(),
            right: role.len(),
        });
    }
    let (mut dot, mut ne, mut nr) = (0.0, 0.0, 0.0);
    for (a, b) in event.iter().zip(role) {
        dot += a * b;
        ne += a * a;
        nr += b * b;
    }
    if ne == 0.0 || nr == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (ne.sqrt() * nr.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    High,
    Low,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::High => "High",
            Label::Low => "Low",
        })
    }
}

/// High iff `score >= threshold`.
pub fn classify(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::High
    } else {
        Label::Low
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    Dsc,
    Static01,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Dsc => "dsc",
            Model::Static01 => "static01",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsc" => Ok(Model::Dsc),
            "static01" => Ok(Model::Static01),
            other => Err(Error::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

/// Cut-offs for both models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    tau: f64,
    static_threshold: u32,
}

impl Thresholds {
    pub fn new(tau: f64, static_threshold: u32) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(Self {
            tau,
            static_threshold,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn static_threshold(&self) -> u32 {
        self.static_threshold
    }

    pub fn for_model(&self, model: Model) -> f64 {
        match model {
            Model::Dsc => self.tau,
            Model::Static01 => f64::from(self.static_threshold),
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            static_threshold: DEFAULT_STATIC_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceScore {
    pub event_id: String,
    pub role_id: String,
    pub score: f64,
    pub label: Label,
}

/// Pre-acquired binary interests of a role, one entry per factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticInterestProfile {
    pub role_id: String,
    pub interests: Vec<bool>,
}

/// Number of factors that are both present in the event and of interest.
pub fn static01_score(profile: &StaticInterestProfile, event_presence: &[bool]) -> Result<u32> {
    if profile.interests.len() != event_presence.len() {
        return Err(Error::DimensionMismatch {
            left: profile.interests.len(),
            right: event_presence.len(),
        });
    }
    Ok(profile
        .interests
        .iter()
        .zip(event_presence)
        .filter(|(a, b)| **a && **b)
        .count() as u32)
}

#[derive(Debug, Deserialize)]
struct ProfileRecord {
    role: String,
    #[serde(default)]
    interests: Vec<String>,
}

/// Reads `{role, interests[]}` lines, mapping interest patterns onto the
/// registry. Patterns absent from the registry are reported as warnings.
pub fn read_profiles<R: BufRead>(
    reader: R,
    source_name: &str,
    registry: &CfRegistry,
) -> Result<(Vec<StaticInterestProfile>, Vec<String>)> {
    let records: Vec<jsonl::Numbered<ProfileRecord>> = jsonl::read_records(reader, source_name)?;
    let mut warnings = Vec::new();
    let mut profiles = Vec::with_capacity(records.len());
    for r in records {
        let mut interests = vec![false; registry.len()];
        for text in &r.value.interests {
            let pattern = Pattern::parse(text).map_err(|e| Error::parse(source_name, r.line, e))?;
            match registry.position(&pattern) {
                Some(pos) => interests[pos] = true,
                None => warnings.push(format!(
                    "{source_name}:{}: interest '{pattern}' of role {} is not a registry factor",
                    r.line, r.value.role
                )),
            }
        }
        profiles.push(StaticInterestProfile {
            role_id: r.value.role,
            interests,
        });
    }
    Ok((profiles, warnings))
}

pub fn load_profiles(
    path: &Path,
    registry: &CfRegistry,
) -> Result<(Vec<StaticInterestProfile>, Vec<String>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_profiles(BufReader::new(file), &path.display().to_string(), registry)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRole {
    pub role_id: String,
    pub score: f64,
    pub label: Label,
}

/// Roles ranked for one event under one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub event_id: String,
    pub model: Model,
    pub ranked: Vec<RankedRole>,
}

impl Recommendation {
    /// The High subset, i.e. the recommended recipients.
    pub fn recommended(&self) -> BTreeSet<String> {
        self.ranked
            .iter()
            .filter(|r| r.label == Label::High)
            .map(|r| r.role_id.clone())
            .collect()
    }
}

/// Classifies and sorts scores: descending by score, ties by role id.
pub fn recommend<I>(event_id: &str, model: Model, scores: I, threshold: f64) -> Recommendation
where
    I: IntoIterator<Item = (String, f64)>,
{
    let mut ranked: Vec<RankedRole> = scores
        .into_iter()
        .map(|(role_id, score)| RankedRole {
            label: classify(score, threshold),
            role_id,
            score,
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.role_id.cmp(&b.role_id)));
    Recommendation {
        event_id: event_id.to_string(),
        model,
        ranked,
    }
}

/// Scores events of a frozen corpus against every registered role.
#[derive(Debug)]
pub struct Scorer<'a> {
    corpus: &'a Corpus,
    vectorizer: Vectorizer<'a>,
    role_vectors: Vec<RoleVector>,
    profiles: Option<BTreeMap<String, StaticInterestProfile>>,
}

impl<'a> Scorer<'a> {
    pub fn new(corpus: &'a Corpus, registry: &'a CfRegistry) -> Result<Self> {
        corpus.ensure_ready()?;
        let role_vectors = corpus
            .roles()
            .map(|r| role_vector(&r.id, corpus, registry))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            corpus,
            vectorizer: Vectorizer::new(registry),
            role_vectors,
            profiles: None,
        })
    }

    /// Attaches 0-1 interest profiles. Roles without a profile score 0.
    pub fn with_profiles(mut self, profiles: Vec<StaticInterestProfile>) -> Result<Self> {
        let n = self.vectorizer.registry().len();
        let mut map = BTreeMap::new();
        for p in profiles {
            if self.corpus.role(&p.role_id).is_none() {
                return Err(Error::UnknownRole(p.role_id));
            }
            if p.interests.len() != n {
                return Err(Error::DimensionMismatch {
                    left: p.interests.len(),
                    right: n,
                });
            }
            if map.contains_key(&p.role_id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate profile for role {}",
                    p.role_id
                )));
            }
            map.insert(p.role_id.clone(), p);
        }
        self.profiles = Some(map);
        Ok(self)
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    pub fn registry(&self) -> &CfRegistry {
        self.vectorizer.registry()
    }

    pub fn has_profiles(&self) -> bool {
        self.profiles.is_some()
    }

    pub fn role_vectors(&self) -> &[RoleVector] {
        &self.role_vectors
    }

    pub fn event_vector(&self, event_id: &str) -> Result<EventVector> {
        let event = self
            .corpus
            .event(event_id)
            .ok_or_else(|| Error::UnknownEvent(event_id.to_string()))?;
        Ok(self.vectorizer.event_vector(event))
    }

    /// DSC scores for every role, in role registration order.
    pub fn dsc_scores(&self, event_id: &str, tau: f64) -> Result<Vec<RelevanceScore>> {
        let ev = self.event_vector(event_id)?;
        self.role_vectors
            .iter()
            .map(|rv| {
                let score = cosine_relevance(&ev.weights, &rv.weights)?;
                Ok(RelevanceScore {
                    event_id: event_id.to_string(),
                    role_id: rv.role_id.clone(),
                    score,
                    label: classify(score, tau),
                })
            })
            .collect()
    }

    /// 0-1 scores for every role, in role registration order.
    pub fn static_scores(&self, event_id: &str) -> Result<Vec<(String, u32)>> {
        let profiles = self
            .profiles
            .as_ref()
            .ok_or_else(|| Error::Config("the static01 model needs interest profiles".into()))?;
        let event = self
            .corpus
            .event(event_id)
            .ok_or_else(|| Error::UnknownEvent(event_id.to_string()))?;
        let presence = self.vectorizer.presence(event);
        self.corpus
            .roles()
            .map(|r| {
                let score = match profiles.get(&r.id) {
                    Some(p) => static01_score(p, &presence)?,
                    None => 0,
                };
                Ok((r.id.clone(), score))
            })
            .collect()
    }

    pub fn recommend(&self, event_id: &str, model: Model, thresholds: Thresholds) -> Result<Recommendation> {
        let scores: Vec<(String, f64)> = match model {
            Model::Dsc => self
                .dsc_scores(event_id, thresholds.tau())?
                .into_iter()
                .map(|s| (s.role_id, s.score))
                .collect(),
            Model::Static01 => self
                .static_scores(event_id)?
                .into_iter()
                .map(|(r, s)| (r, f64::from(s)))
                .collect(),
        };
        Ok(recommend(event_id, model, scores, thresholds.for_model(model)))
    }
}

pub(crate) fn format_score(model: Model, score: f64) -> String {
    match model {
        Model::Dsc => format!("{score:.6}"),
        Model::Static01 => format!("{score:.0}"),
    }
}

pub fn write_recommendations_tsv<W: Write>(writer: &mut W, recs: &[Recommendation]) -> std::io::Result<()> {
    writeln!(writer, "event_id\trole_id\tmodel\tscore\tlabel\trecommended")?;
    for rec in recs {
        for r in &rec.ranked {
            writeln!(
                writer,
                "{}\t{}\t{}\t{}\t{}\t{}",
                rec.event_id,
                r.role_id,
                rec.model,
                format_score(rec.model, r.score),
                r.label,
                if r.label == Label::High { "yes" } else { "no" }
            )?;
        }
    }
    Ok(())
}
