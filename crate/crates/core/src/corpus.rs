//! Events, roles and role relevance links.
//!
//! A [`Corpus`] is filled during ingestion and then frozen. Every statistic
//! computed downstream requires a frozen, non-empty corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

/// A lowercase word with punctuation removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_separator(ch: char) -> bool {
    ch.is_whitespace() || matches!(ch, '-' | '\u{2010}'..='\u{2015}' | '\u{2212}')
}

/// Splits raw text into tokens.
///
/// Whitespace and hyphen/dash characters separate tokens, every other
/// non-alphanumeric character is dropped, and letters are lowercased.
pub fn normalize_tokens(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if is_separator(ch) {
            if !current.is_empty() {
                tokens.push(Token(std::mem::take(&mut current)));
            }
        } else if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        }
    }
    if !current.is_empty() {
        tokens.push(Token(current));
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoleKind {
    #[serde(alias = "TM", alias = "Manager")]
    TeamManager,
    #[serde(alias = "SR")]
    SynthesisResponsible,
    #[serde(alias = "QR")]
    QualityResponsible,
    #[serde(alias = "DS")]
    Designer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub id: String,
    pub name: String,
    pub team: String,
    pub kind: RoleKind,
    pub layer: String,
}

/// Event as it appears in an events file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub team: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_to: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual_relevant: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub role: String,
    #[serde(default)]
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    id: String,
    text: String,
    tokens: Vec<Token>,
    team: String,
    author_role: Option<String>,
    shared_to: Option<BTreeSet<String>>,
    manual_relevant: Option<BTreeSet<String>>,
}

impl Event {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// W: number of words in the event.
    pub fn total_words(&self) -> usize {
        self.tokens.len()
    }

    pub fn team(&self) -> &str {
        &self.team
    }

    pub fn author_role(&self) -> Option<&str> {
        self.author_role.as_deref()
    }

    /// Roles the event was actually shared with, when recorded.
    pub fn shared_to(&self) -> Option<&BTreeSet<String>> {
        self.shared_to.as_ref()
    }

    /// Ground-truth relevant roles, when labeled.
    pub fn manual_relevant(&self) -> Option<&BTreeSet<String>> {
        self.manual_relevant.as_ref()
    }

    pub fn to_record(&self) -> EventRecord {
        EventRecord {
            id: self.id.clone(),
            text: self.text.clone(),
            team: self.team.clone(),
            author_role: self.author_role.clone(),
            shared_to: self.shared_to.as_ref().map(|s| s.iter().cloned().collect()),
            manual_relevant: self
                .manual_relevant
                .as_ref()
                .map(|s| s.iter().cloned().collect()),
        }
    }
}

/// E_r for every registered role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelevanceLinks {
    by_role: BTreeMap<String, BTreeSet<String>>,
}

impl RelevanceLinks {
    pub fn events_for(&self, role: &str) -> Option<&BTreeSet<String>> {
        self.by_role.get(role)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.by_role.iter().map(|(r, e)| (r.as_str(), e))
    }

    pub fn total_links(&self) -> usize {
        self.by_role.values().map(BTreeSet::len).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    roles: IndexMap<String, Role>,
    events: IndexMap<String, Event>,
    links: RelevanceLinks,
    frozen: bool,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure_mutable(&self) -> Result<()> {
        if self.frozen {
            Err(Error::Frozen)
        } else {
            Ok(())
        }
    }

    pub fn add_role(&mut self, role: Role) -> Result<()> {
        self.ensure_mutable()?;
        if role.id.is_empty() {
            return Err(Error::InvalidArgument("role id must not be empty".into()));
        }
        if self.roles.contains_key(&role.id) {
            return Err(Error::DuplicateRole(role.id));
        }
        self.links.by_role.insert(role.id.clone(), BTreeSet::new());
        self.roles.insert(role.id.clone(), role);
        Ok(())
    }

    fn checked_roles(&self, ids: Option<Vec<String>>) -> Result<Option<BTreeSet<String>>> {
        let Some(ids) = ids else { return Ok(None) };
        let mut set = BTreeSet::new();
        for id in ids {
            if !self.roles.contains_key(&id) {
                return Err(Error::UnknownRole(id));
            }
            set.insert(id);
        }
        Ok(Some(set))
    }

    /// Tokenizes and stores an event. Referenced roles must already be
    /// registered.
    pub fn ingest_event(&mut self, record: EventRecord) -> Result<String> {
        self.ensure_mutable()?;
        if record.id.is_empty() {
            return Err(Error::InvalidArgument("event id must not be empty".into()));
        }
        if self.events.contains_key(&record.id) {
            return Err(Error::DuplicateEvent(record.id));
        }
        if let Some(author) = &record.author_role {
            if !self.roles.contains_key(author) {
                return Err(Error::UnknownRole(author.clone()));
            }
        }
        let shared_to = self.checked_roles(record.shared_to)?;
        let manual_relevant = self.checked_roles(record.manual_relevant)?;
        let event = Event {
            tokens: normalize_tokens(&record.text),
            id: record.id,
            text: record.text,
            team: record.team,
            author_role: record.author_role,
            shared_to,
            manual_relevant,
        };
        let id = event.id.clone();
        self.events.insert(id.clone(), event);
        Ok(id)
    }

    /// Adds `event` to E_role. Idempotent.
    pub fn link_role_relevance(&mut self, role: &str, event: &str) -> Result<()> {
        self.ensure_mutable()?;
        if !self.events.contains_key(event) {
            return Err(Error::UnknownEvent(event.to_string()));
        }
        let set = self
            .links
            .by_role
            .get_mut(role)
            .ok_or_else(|| Error::UnknownRole(role.to_string()))?;
        set.insert(event.to_string());
        Ok(())
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Fails unless the corpus is frozen and holds at least one event.
    pub fn ensure_ready(&self) -> Result<()> {
        if !self.frozen {
            return Err(Error::NotFrozen);
        }
        if self.events.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(())
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = &Event> {
        self.events.values()
    }

    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.get(id)
    }

    pub fn roles(&self) -> impl ExactSizeIterator<Item = &Role> {
        self.roles.values()
    }

    pub fn role(&self, id: &str) -> Option<&Role> {
        self.roles.get(id)
    }

    pub fn links(&self) -> &RelevanceLinks {
        &self.links
    }

    /// Assembles a corpus from decoded input files.
    ///
    /// When `selection` is given, only those event ids are kept (in file
    /// order) and every selected id must exist. Errors carry the source
    /// line of the offending record.
    pub fn from_records(
        roles: Vec<jsonl::Numbered<Role>>,
        events: Vec<jsonl::Numbered<EventRecord>>,
        links: Vec<jsonl::Numbered<LinkRecord>>,
        selection: Option<&BTreeSet<String>>,
        names: &SourceNames,
    ) -> Result<Self> {
        let mut corpus = Corpus::new();
        for r in roles {
            corpus
                .add_role(r.value)
                .map_err(|e| Error::parse(&names.roles, r.line, e))?;
        }
        for ev in events {
            if selection.is_some_and(|s| !s.contains(&ev.value.id)) {
                continue;
            }
            corpus
                .ingest_event(ev.value)
                .map_err(|e| Error::parse(&names.events, ev.line, e))?;
        }
        if let Some(selection) = selection {
            if let Some(missing) = selection.iter().find(|id| !corpus.events.contains_key(*id)) {
                return Err(Error::UnknownEvent(missing.clone()));
            }
        }
        for link in links {
            for event in &link.value.events {
                corpus
                    .link_role_relevance(&link.value.role, event)
                    .map_err(|e| Error::parse(&names.links, link.line, e))?;
            }
            if link.value.events.is_empty() && corpus.role(&link.value.role).is_none() {
                return Err(Error::parse(
                    &names.links,
                    link.line,
                    Error::UnknownRole(link.value.role.clone()),
                ));
            }
        }
        Ok(corpus)
    }
}

/// Display names of the input files, used in diagnostics.
#[derive(Debug, Clone)]
pub struct SourceNames {
    pub roles: String,
    pub events: String,
    pub links: String,
}

impl Default for SourceNames {
    fn default() -> Self {
        Self {
            roles: "roles".into(),
            events: "events".into(),
            links: "links".into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum CorpusLine {
    Header { format: String, version: u32, frozen: bool },
    Role(Role),
    Event(EventRecord),
    Link(LinkRecord),
}

const FORMAT_NAME: &str = "dsc-corpus";
const FORMAT_VERSION: u32 = 1;

/// Writes the corpus as JSON Lines: a header, then roles, events and links.
pub fn write_corpus<W: Write>(corpus: &Corpus, writer: &mut W) -> std::io::Result<()> {
    jsonl::write_record(
        writer,
        &CorpusLine::Header {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            frozen: corpus.frozen,
        },
    )?;
    for role in corpus.roles() {
        jsonl::write_record(writer, &CorpusLine::Role(role.clone()))?;
    }
    for event in corpus.events() {
        jsonl::write_record(writer, &CorpusLine::Event(event.to_record()))?;
    }
    for (role, events) in corpus.links.iter() {
        jsonl::write_record(
            writer,
            &CorpusLine::Link(LinkRecord {
                role: role.to_string(),
                events: events.iter().cloned().collect(),
            }),
        )?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(reader: R, source_name: &str) -> Result<Corpus> {
    let lines: Vec<jsonl::Numbered<CorpusLine>> = jsonl::read_records(reader, source_name)?;
    let mut iter = lines.into_iter();
    let frozen = match iter.next() {
        Some(jsonl::Numbered {
            value: CorpusLine::Header { format, version, frozen },
            line,
        }) => {
            if format != FORMAT_NAME || version != FORMAT_VERSION {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("unsupported corpus format {format} v{version}"),
                ));
            }
            frozen
        }
        Some(other) => {
            return Err(Error::parse(source_name, other.line, "missing corpus header"));
        }
        None => return Err(Error::parse(source_name, 0, "empty corpus file")),
    };

    let mut corpus = Corpus::new();
    for record in iter {
        let line = record.line;
        let result = match record.value {
            CorpusLine::Header { .. } => Err(Error::InvalidArgument("repeated header".into())),
            CorpusLine::Role(role) => corpus.add_role(role),
            CorpusLine::Event(event) => corpus.ingest_event(event).map(|_| ()),
            CorpusLine::Link(link) => {
                if corpus.role(&link.role).is_none() {
                    Err(Error::UnknownRole(link.role))
                } else {
                    link.events
                        .iter()
                        .try_for_each(|e| corpus.link_role_relevance(&link.role, e))
                }
            }
        };
        result.map_err(|e| Error::parse(source_name, line, e))?;
    }
    if frozen {
        corpus.freeze();
    }
    Ok(corpus)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_corpus(corpus, &mut writer)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), &path.display().to_string())
}
