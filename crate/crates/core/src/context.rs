//! Context-factor registry: document frequencies, IEF, top-k selection and
//! category labels.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_tokens, Corpus, Token};
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextCategory {
    Role,
    Task,
    Object,
    Tool,
    Requirement,
    Community,
    EventType,
}

impl ContextCategory {
    pub const ALL: [ContextCategory; 7] = [
        ContextCategory::Role,
        ContextCategory::Task,
        ContextCategory::Object,
        ContextCategory::Tool,
        ContextCategory::Requirement,
        ContextCategory::Community,
        ContextCategory::EventType,
    ];
}

/// A word or phrase, stored as its normalized token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<Token>);

impl Pattern {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = normalize_tokens(text);
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "pattern '{text}' has no tokens"
            )));
        }
        Ok(Pattern(tokens))
    }

    pub fn from_token(token: Token) -> Self {
        Pattern(vec![token])
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if the pattern appears as a contiguous run of `tokens`.
    pub fn occurs_in(&self, tokens: &[Token]) -> bool {
        tokens.windows(self.0.len()).any(|w| w == self.0.as_slice())
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextFactor {
    /// 1-based position in the registry.
    pub index: usize,
    pub pattern: Pattern,
    pub category: ContextCategory,
    pub ief: f64,
}

/// Ordered context factors; the basis of every event and role vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CfRegistry {
    factors: Vec<ContextFactor>,
    positions: HashMap<Pattern, usize>,
}

impl CfRegistry {
    pub fn new(factors: Vec<ContextFactor>) -> Result<Self> {
        let mut positions = HashMap::with_capacity(factors.len());
        for (pos, f) in factors.iter().enumerate() {
            if f.index != pos + 1 {
                return Err(Error::InvalidArgument(format!(
                    "factor '{}' has index {}, expected {}",
                    f.pattern,
                    f.index,
                    pos + 1
                )));
            }
            if f.pattern.is_empty() {
                return Err(Error::InvalidArgument(format!("factor {} has an empty pattern", f.index)));
            }
            if !(f.ief.is_finite() && f.ief >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "factor '{}' has invalid IEF {}",
                    f.pattern, f.ief
                )));
            }
            if positions.insert(f.pattern.clone(), pos).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate pattern '{}'", f.pattern)));
            }
        }
        Ok(Self { factors, positions })
    }

    /// n, the vector dimension.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[ContextFactor] {
        &self.factors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ContextFactor> {
        self.factors.iter()
    }

    /// 0-based position of a pattern.
    pub fn position(&self, pattern: &Pattern) -> Option<usize> {
        self.positions.get(pattern).copied()
    }
}

/// Number of events in which `pattern` occurs at least once.
pub fn document_frequency(corpus: &Corpus, pattern: &Pattern) -> Result<usize> {
    if !corpus.is_frozen() {
        return Err(Error::NotFrozen);
    }
    Ok(corpus
        .events()
        .filter(|e| pattern.occurs_in(e.tokens()))
        .count())
}

/// Inverse event frequency, `log10(total_events / df)`.
pub fn compute_ief(total_events: usize, df: usize) -> Result<f64> {
    if total_events == 0 {
        return Err(Error::EmptyCorpus);
    }
    if df == 0 {
        return Err(Error::UndefinedFactor(None));
    }
    if df > total_events {
        return Err(Error::Inconsistent(format!(
            "document frequency {df} exceeds event count {total_events}"
        )));
    }
    Ok((total_events as f64 / df as f64).log10())
}

/// Manual adjustment to factor selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub pattern: Pattern,
    pub category: ContextCategory,
    pub force_include: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OverrideRecord {
    pattern: String,
    category: ContextCategory,
    #[serde(default)]
    force_include: bool,
}

pub fn read_overrides<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Override>> {
    let records: Vec<jsonl::Numbered<OverrideRecord>> = jsonl::read_records(reader, source_name)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let pattern =
            Pattern::parse(&r.value.pattern).map_err(|e| Error::parse(source_name, r.line, e))?;
        if !seen.insert(pattern.clone()) {
            return Err(Error::parse(
                source_name,
                r.line,
                format!("duplicate override for '{pattern}'"),
            ));
        }
        out.push(Override {
            pattern,
            category: r.value.category,
            force_include: r.value.force_include,
        });
    }
    Ok(out)
}

pub fn load_overrides(path: &Path) -> Result<Vec<Override>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_overrides(BufReader::new(file), &path.display().to_string())
}

/// A selected registry plus any non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct Selection {
    pub registry: CfRegistry,
    pub warnings: Vec<String>,
}

/// Picks `k` context factors.
///
/// Force-included override patterns come first, in override order. The
/// remaining slots are filled from the corpus vocabulary ranked by IEF
/// descending, ties broken lexicographically. Categories come from the
/// override list; anything else is [`ContextCategory::EventType`].
pub fn select_context_factors(corpus: &Corpus, k: usize, overrides: &[Override]) -> Result<Selection> {
    corpus.ensure_ready()?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let total = corpus.event_count();
    let mut warnings = Vec::new();

    let mut vocabulary: BTreeMap<&Token, usize> = BTreeMap::new();
    for event in corpus.events() {
        let distinct: BTreeSet<&Token> = event.tokens().iter().collect();
        for token in distinct {
            *vocabulary.entry(token).or_default() += 1;
        }
    }

    let categories: HashMap<&Pattern, ContextCategory> =
        overrides.iter().map(|o| (&o.pattern, o.category)).collect();

    let mut chosen: Vec<(Pattern, usize)> = Vec::new();
    for o in overrides.iter().filter(|o| o.force_include) {
        let df = document_frequency(corpus, &o.pattern)?;
        if df == 0 {
            return Err(Error::UndefinedFactor(Some(o.pattern.to_string())));
        }
        chosen.push((o.pattern.clone(), df));
    }
    if chosen.len() > k {
        warnings.push(format!(
            "{} force-included factors exceed k={k}; all are kept",
            chosen.len()
        ));
    }

    let forced: HashSet<Pattern> = chosen.iter().map(|(p, _)| p.clone()).collect();
    let mut ranked: Vec<(Pattern, usize)> = vocabulary
        .into_iter()
        .map(|(t, df)| (Pattern::from_token(t.clone()), df))
        .filter(|(p, _)| !forced.contains(p))
        .collect();
    // Lower df means higher IEF; the vocabulary is already in lexicographic
    // order and the sort is stable.
    ranked.sort_by_key(|(_, df)| *df);

    let available = chosen.len() + ranked.len();
    if available == 0 {
        return Err(Error::InvalidArgument("corpus vocabulary is empty".into()));
    }
    if k > available {
        warnings.push(format!(
            "k={k} exceeds the vocabulary of {available} candidate factors; using all of them"
        ));
    }
    let remaining = k.saturating_sub(chosen.len());
    chosen.extend(ranked.into_iter().take(remaining));

    let factors = chosen
        .into_iter()
        .enumerate()
        .map(|(i, (pattern, df))| {
            let category = categories
                .get(&pattern)
                .copied()
                .unwrap_or(ContextCategory::EventType);
            Ok(ContextFactor {
                index: i + 1,
                ief: compute_ief(total, df)?,
                pattern,
                category,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection {
        registry: CfRegistry::new(factors)?,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryRecord {
    index: usize,
    pattern: String,
    category: ContextCategory,
    ief: f64,
}

pub fn write_registry<W: Write>(registry: &CfRegistry, writer: &mut W) -> std::io::Result<()> {
    for f in registry.iter() {
        jsonl::write_record(
            writer,
            &RegistryRecord {
                index: f.index,
                pattern: f.pattern.to_string(),
                category: f.category,
                ief: f.ief,
            },
        )?;
    }
    Ok(())
}

pub fn read_registry<R: BufRead>(reader: R, source_name: &str) -> Result<CfRegistry> {
    let records: Vec<jsonl::Numbered<RegistryRecord>> = jsonl::read_records(reader, source_name)?;
    let mut factors = Vec::with_capacity(records.len());
    for r in records {
        let pattern =
            Pattern::parse(&r.value.pattern).map_err(|e| Error::parse(source_name, r.line, e))?;
        factors.push(ContextFactor {
            index: r.value.index,
            pattern,
            category: r.value.category,
            ief: r.value.ief,
        });
    }
    CfRegistry::new(factors).map_err(|e| Error::parse(source_name, 0, e))
}

pub fn save_registry(registry: &CfRegistry, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_registry(registry, &mut writer)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_registry(path: &Path) -> Result<CfRegistry> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_registry(BufReader::new(file), &path.display().to_string())
}
