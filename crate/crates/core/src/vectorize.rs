//! Event-attribute and role interest-degree vectors over a [`CfRegistry`].

use std::collections::HashMap;
use std::io::Write;

use crate::context::CfRegistry;
use crate::corpus::{Corpus, Event, Token};
use crate::error::{Error, Result};

/// Context factor frequency `n_i / W`; zero for an empty event.
pub fn cff(occurrences: usize, total_words: usize) -> Result<f64> {
    if occurrences > total_words {
        return Err(Error::Inconsistent(format!(
            "{occurrences} occurrences in an event of {total_words} words"
        )));
    }
    if total_words == 0 {
        return Ok(0.0);
    }
    Ok(occurrences as f64 / total_words as f64)
}

pub fn event_weight(cff: f64, ief: f64) -> f64 {
    cff * ief
}

/// Relevant event frequency `count / |E_r|`; zero for a role with no history.
pub fn relevant_event_frequency(relevant_with_cf: usize, relevant_total: usize) -> Result<f64> {
    if relevant_with_cf > relevant_total {
        return Err(Error::Inconsistent(format!(
            "{relevant_with_cf} of {relevant_total} relevant events"
        )));
    }
    if relevant_total == 0 {
        return Ok(0.0);
    }
    Ok(relevant_with_cf as f64 / relevant_total as f64)
}

pub fn role_weight(ref_i: f64, ief: f64) -> f64 {
    ref_i * ief
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventVector {
    pub event_id: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleVector {
    pub role_id: String,
    pub weights: Vec<f64>,
}

/// Counts registry factors in token streams.
///
/// Scanning is left to right; at each position the longest matching
/// pattern wins and its tokens are consumed, so occurrences never overlap.
#[derive(Debug, Clone)]
pub struct Vectorizer<'r> {
    registry: &'r CfRegistry,
    by_first: HashMap<&'r Token, Vec<usize>>,
}

impl<'r> Vectorizer<'r> {
    pub fn new(registry: &'r CfRegistry) -> Self {
        let mut by_first: HashMap<&Token, Vec<usize>> = HashMap::new();
        for (pos, f) in registry.iter().enumerate() {
            by_first.entry(&f.pattern.tokens()[0]).or_default().push(pos);
        }
        for candidates in by_first.values_mut() {
            candidates.sort_by_key(|&pos| std::cmp::Reverse(registry.factors()[pos].pattern.len()));
        }
        Self { registry, by_first }
    }

    pub fn registry(&self) -> &CfRegistry {
        self.registry
    }

    /// n_i for every factor.
    pub fn occurrences(&self, tokens: &[Token]) -> Vec<usize> {
        let factors = self.registry.factors();
        let mut counts = vec![0; factors.len()];
        let mut i = 0;
        'scan: while i < tokens.len() {
            if let Some(candidates) = self.by_first.get(&tokens[i]) {
                for &pos in candidates {
                    let pattern = factors[pos].pattern.tokens();
                    if tokens[i..].starts_with(pattern) {
                        counts[pos] += 1;
                        i += pattern.len();
                        continue 'scan;
                    }
                }
            }
            i += 1;
        }
        counts
    }

    /// Binary presence of each factor in the event.
    pub fn presence(&self, event: &Event) -> Vec<bool> {
        self.occurrences(event.tokens()).into_iter().map(|n| n > 0).collect()
    }

    pub fn event_vector(&self, event: &Event) -> EventVector {
        let w = event.total_words();
        let weights = self
            .occurrences(event.tokens())
            .into_iter()
            .zip(self.registry.iter())
            .map(|(n, f)| {
                // n_i <= W holds by construction of the counts.
                let freq = cff(n, w).expect("occurrence count bounded by word count");
                event_weight(freq, f.ief)
            })
            .collect();
        EventVector {
            event_id: event.id().to_string(),
            weights,
        }
    }
}

pub fn event_vector(event: &Event, registry: &CfRegistry) -> EventVector {
    Vectorizer::new(registry).event_vector(event)
}

/// Role interest-degree vector built from the role's relevant events E_r.
pub fn role_vector(role_id: &str, corpus: &Corpus, registry: &CfRegistry) -> Result<RoleVector> {
    if !corpus.is_frozen() {
        return Err(Error::NotFrozen);
    }
    let relevant = corpus
        .links()
        .events_for(role_id)
        .ok_or_else(|| Error::UnknownRole(role_id.to_string()))?;
    let events: Vec<&Event> = relevant
        .iter()
        .map(|id| corpus.event(id).ok_or_else(|| Error::UnknownEvent(id.clone())))
        .collect::<Result<_>>()?;
    let weights = registry
        .iter()
        .map(|f| {
            let with_cf = events.iter().filter(|e| f.pattern.occurs_in(e.tokens())).count();
            Ok(role_weight(relevant_event_frequency(with_cf, events.len())?, f.ief))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoleVector {
        role_id: role_id.to_string(),
        weights,
    })
}

/// Writes vectors as CSV with a header of factor indices.
pub fn write_vectors_csv<'a, W, I>(writer: W, dimension: usize, rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let to_err = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((1..=dimension).map(|i| i.to_string()));
    out.write_record(&header).map_err(to_err)?;
    for (id, weights) in rows {
        if weights.len() != dimension {
            return Err(Error::DimensionMismatch {
                left: weights.len(),
                right: dimension,
            });
        }
        let mut record = Vec::with_capacity(dimension + 1);
        record.push(id.to_string());
        record.extend(weights.iter().map(|w| w.to_string()));
        out.write_record(&record).map_err(to_err)?;
    }
    out.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{ContextCategory, ContextFactor, Pattern};
    use crate::corpus::{EventRecord, Role, RoleKind};

    fn registry(items: &[(&str, f64)]) -> CfRegistry {
        CfRegistry::new(
            items
                .iter()
                .enumerate()
                .map(|(i, (p, ief))| ContextFactor {
                    index: i + 1,
                    pattern: Pattern::parse(p).unwrap(),
                    category: ContextCategory::EventType,
                    ief: *ief,
                })
                .collect(),
        )
        .unwrap()
    }

    fn corpus(texts: &[&str], links: &[(&str, &[usize])]) -> Corpus {
        let mut c = Corpus::new();
        for (role, _) in links {
            c.add_role(Role {
                id: (*role).into(),
                name: (*role).into(),
                team: "T".into(),
                kind: RoleKind::Designer,
                layer: "L2".into(),
            })
            .unwrap();
        }
        for (i, t) in texts.iter().enumerate() {
            c.ingest_event(EventRecord {
                id: format!("e{}", i + 1),
                text: (*t).into(),
                team: "T".into(),
                author_role: None,
                shared_to: None,
                manual_relevant: None,
            })
            .unwrap();
        }
        for (role, events) in links {
            for e in *events {
                c.link_role_relevance(role, &format!("e{e}")).unwrap();
            }
        }
        c.freeze();
        c
    }

    #[test]
    fn cff_examples() {
        assert!((cff(2, 289).unwrap() - 0.00692042).abs() < 1e-8);
        assert!((cff(1, 289).unwrap() - 0.00346021).abs() < 1e-8);
        assert_eq!(cff(0, 289).unwrap(), 0.0);
        assert_eq!(cff(0, 0).unwrap(), 0.0);
        assert!(matches!(cff(3, 2), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn event_weight_examples() {
        // 0.00692042 * 0.46665582 = 0.0032294542698444 (exact decimal product)
        assert!((event_weight(0.00692042, 0.46665582) - 0.0032294543).abs() < 1e-8);
        assert_eq!(event_weight(0.0, 1.4366926), 0.0);
        // 0.00346021 * 0.95957134 = 0.0033203183463814
        assert!((event_weight(0.00346021, 0.95957134) - 0.0033203183).abs() < 1e-8);
    }

    #[test]
    fn ref_examples() {
        assert_eq!(relevant_event_frequency(15, 20).unwrap(), 0.75);
        assert_eq!(relevant_event_frequency(0, 20).unwrap(), 0.0);
        assert_eq!(relevant_event_frequency(20, 20).unwrap(), 1.0);
        assert_eq!(relevant_event_frequency(0, 0).unwrap(), 0.0);
        assert!(matches!(relevant_event_frequency(21, 20), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn role_weight_examples() {
        assert!((role_weight(0.75, 0.46665582) - 0.3500).abs() < 5e-5);
        assert!((role_weight(0.4, 0.95957134) - 0.3838).abs() < 5e-5);
        assert_eq!(role_weight(0.0, 1.4366926), 0.0);
    }

    #[test]
    fn longest_match_wins_and_consumes() {
        let reg = registry(&[("digital", 1.0), ("digital factory", 1.0), ("factory", 1.0)]);
        let v = Vectorizer::new(&reg);
        let toks = crate::corpus::normalize_tokens("digital factory factory digital");
        assert_eq!(v.occurrences(&toks), vec![1, 1, 1]);
        let toks = crate::corpus::normalize_tokens("a a a");
        let reg = registry(&[("a a", 1.0)]);
        assert_eq!(Vectorizer::new(&reg).occurrences(&toks), vec![1]);
    }

    #[test]
    fn event_vector_cases() {
        let c = corpus(&["layout layout", "nothing here", ""], &[]);
        let reg = registry(&[("layout", 0.5)]);
        assert_eq!(event_vector(c.event("e1").unwrap(), &reg).weights, vec![0.5]);
        assert_eq!(event_vector(c.event("e2").unwrap(), &reg).weights, vec![0.0]);
        assert_eq!(event_vector(c.event("e3").unwrap(), &reg).weights, vec![0.0]);
    }

    #[test]
    fn role_vector_cases() {
        let c = corpus(
            &["layout cost", "layout", "review", "cost cost"],
            &[("r1", &[1, 2, 3]), ("r2", &[])],
        );
        let reg = registry(&[("layout", 0.4), ("cost", 0.3), ("review", 0.6)]);
        let v = role_vector("r1", &c, &reg).unwrap();
        let expected = [2.0 / 3.0 * 0.4, 1.0 / 3.0 * 0.3, 1.0 / 3.0 * 0.6];
        for (a, b) in v.weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(role_vector("r2", &c, &reg).unwrap().weights, vec![0.0; 3]);
        assert!(matches!(role_vector("zz", &c, &reg), Err(Error::UnknownRole(_))));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let rows = [("e1", &[0.5, 0.0][..]), ("e2", &[0.25, 1.0][..])];
        write_vectors_csv(&mut buf, 2, rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,1,2\ne1,0.5,0\ne2,0.25,1\n");
        let bad = [("e1", &[0.5][..])];
        assert!(write_vectors_csv(Vec::new(), 2, bad).is_err());
    }
}
