//! Staged command pipeline: ingest, extract-cf, vectors, score, recommend,
//! compare. Every stage reads and writes files under the output directory.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::context::{load_overrides, load_registry, save_registry, select_context_factors, CfRegistry};
use crate::corpus::{load_corpus, save_corpus, Corpus, SourceNames};
use crate::error::{Error, Result};
use crate::eval::{evaluate, render_metrics_tsv, render_rows_tsv, render_text};
use crate::jsonl;
use crate::relevance::{
    format_score, load_profiles, write_recommendations_tsv, Model, Scorer, Thresholds, DEFAULT_STATIC_THRESHOLD,
    DEFAULT_TAU,
};
use crate::vectorize::write_vectors_csv;

pub const DEFAULT_K: usize = 64;
/// IEF uses base-10 logarithms; not configurable.
pub const LOG_BASE: u32 = 10;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const REGISTRY_FILE: &str = "registry.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSelection {
    Dsc,
    Static01,
    Both,
}

impl ModelSelection {
    fn models(self) -> &'static [Model] {
        match self {
            ModelSelection::Dsc => &[Model::Dsc],
            ModelSelection::Static01 => &[Model::Static01],
            ModelSelection::Both => &[Model::Dsc, Model::Static01],
        }
    }
}

impl fmt::Display for ModelSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelSelection::Dsc => "dsc",
            ModelSelection::Static01 => "static01",
            ModelSelection::Both => "both",
        })
    }
}

impl FromStr for ModelSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsc" => Ok(ModelSelection::Dsc),
            "static01" => Ok(ModelSelection::Static01),
            "both" => Ok(ModelSelection::Both),
            other => Err(Error::Config(format!(
                "model must be dsc, static01 or both, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub events: Option<PathBuf>,
    pub roles: Option<PathBuf>,
    pub links: Option<PathBuf>,
    /// Event ids to keep at ingestion, one per line.
    pub select: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub out: PathBuf,
    pub k: usize,
    pub tau: f64,
    pub static_threshold: u32,
    pub model: ModelSelection,
    pub event_id: Option<String>,
    pub all: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            events: None,
            roles: None,
            links: None,
            select: None,
            registry: None,
            overrides: None,
            profiles: None,
            out: PathBuf::from("."),
            k: DEFAULT_K,
            tau: DEFAULT_TAU,
            static_threshold: DEFAULT_STATIC_THRESHOLD,
            model: ModelSelection::Both,
            event_id: None,
            all: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean '{value}' for {key}"))),
    }
}

impl RunConfig {
    /// Sets one parameter by its flag name (`static-threshold` and
    /// `static_threshold` are equivalent).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let path = || Some(PathBuf::from(value));
        match key.as_str() {
            "events" => self.events = path(),
            "roles" => self.roles = path(),
            "links" => self.links = path(),
            "select" => self.select = path(),
            "registry" => self.registry = path(),
            "overrides" => self.overrides = path(),
            "profiles" => self.profiles = path(),
            "out" => self.out = PathBuf::from(value),
            "k" => self.k = parse_value(&key, value)?,
            "tau" => self.tau = parse_value(&key, value)?,
            "static-threshold" => self.static_threshold = parse_value(&key, value)?,
            "model" => self.model = value.parse()?,
            "event-id" => self.event_id = Some(value.to_string()),
            "all" => self.all = parse_bool(&key, value)?,
            "log-base" => {
                if value != LOG_BASE.to_string() {
                    return Err(Error::Config(format!("log-base is fixed at {LOG_BASE}")));
                }
            }
            other => return Err(Error::Config(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` config file. `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source_name, idx + 1, "expected 'key = value'"))?;
            self.set(key, value.trim())
                .map_err(|e| Error::parse(source_name, idx + 1, e))?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_config_text(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Thresholds::new(self.tau, self.static_threshold).map_err(|e| Error::Config(e.to_string()))?;
        if self.out.as_os_str().is_empty() {
            return Err(Error::Config("output directory must not be empty".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        Thresholds::new(self.tau, self.static_threshold)
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.out.join(CORPUS_FILE)
    }

    pub fn registry_path(&self) -> PathBuf {
        self.registry
            .clone()
            .unwrap_or_else(|| self.out.join(REGISTRY_FILE))
    }

    /// One line recording every effective parameter.
    pub fn echo(&self, command: Command) -> String {
        let p = |v: &Option<PathBuf>| v.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        format!(
            "# dsc {command}: k={} tau={} static_threshold={} log_base={LOG_BASE} model={} events={} roles={} links={} select={} registry={} overrides={} profiles={} out={} event_id={} all={}",
            self.k,
            self.tau,
            self.static_threshold,
            self.model,
            p(&self.events),
            p(&self.roles),
            p(&self.links),
            p(&self.select),
            self.registry_path().display(),
            p(&self.overrides),
            p(&self.profiles),
            self.out.display(),
            self.event_id.as_deref().unwrap_or("-"),
            self.all,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    ExtractCf,
    Vectors,
    Score,
    Recommend,
    Compare,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Ingest => "ingest",
            Command::ExtractCf => "extract-cf",
            Command::Vectors => "vectors",
            Command::Score => "score",
            Command::Recommend => "recommend",
            Command::Compare => "compare",
        })
    }
}

/// Runs a command, writing results to `stdout` and diagnostics (config
/// echo, warnings) to `diag`.
pub fn run(command: Command, config: &RunConfig, stdout: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    config.validate()?;
    let console = |e: std::io::Error| Error::io("<console>", e);
    writeln!(diag, "{}", config.echo(command)).map_err(console)?;
    match command {
        Command::Ingest => cmd_ingest(config, stdout),
        Command::ExtractCf => cmd_extract_cf(config, stdout, diag),
        Command::Vectors => cmd_vectors(config, stdout),
        Command::Score => cmd_score(config, stdout, diag),
        Command::Recommend => cmd_recommend(config, stdout, diag),
        Command::Compare => cmd_compare(config, stdout, diag),
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn read_selection(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

pub fn cmd_ingest(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let roles_path = required(&config.roles, "roles")?;
    let events_path = required(&config.events, "events")?;
    let names = SourceNames {
        roles: roles_path.display().to_string(),
        events: events_path.display().to_string(),
        links: config
            .links
            .as_ref()
            .map_or_else(String::new, |p| p.display().to_string()),
    };
    let roles = jsonl::read_file(roles_path)?;
    let events = jsonl::read_file(events_path)?;
    let links = match &config.links {
        Some(p) => jsonl::read_file(p)?,
        None => Vec::new(),
    };
    let selection = config.select.as_deref().map(read_selection).transpose()?;
    let mut corpus = Corpus::from_records(roles, events, links, selection.as_ref(), &names)?;
    corpus.freeze();

    ensure_out_dir(config)?;
    save_corpus(&corpus, &config.corpus_path())?;

    let mut summary = format!(
        "events\t{}\nroles\t{}\nlinks\t{}\n",
        corpus.event_count(),
        corpus.roles().len(),
        corpus.links().total_links()
    );
    for role in corpus.roles() {
        let n = corpus.links().events_for(&role.id).map_or(0, BTreeSet::len);
        summary.push_str(&format!("E_r\t{}\t{n}\n", role.id));
    }
    emit(stdout, &summary)
}

fn load_ready_corpus(config: &RunConfig) -> Result<Corpus> {
    let corpus = load_corpus(&config.corpus_path())?;
    corpus.ensure_ready()?;
    Ok(corpus)
}

pub fn cmd_extract_cf(config: &RunConfig, stdout: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    let corpus = load_ready_corpus(config)?;
    let overrides = match &config.overrides {
        Some(p) => load_overrides(p)?,
        None => Vec::new(),
    };
    let selection = select_context_factors(&corpus, config.k, &overrides)?;
    for w in &selection.warnings {
        let _ = writeln!(diag, "warning: {w}");
    }
    let path = config.registry_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_registry(&selection.registry, &path)?;
    emit(
        stdout,
        &format!(
            "factors\t{}\nevents\t{}\nregistry\t{}\n",
            selection.registry.len(),
            corpus.event_count(),
            path.display()
        ),
    )
}

fn file_stem(config: &RunConfig) -> Result<String> {
    match (&config.event_id, config.all) {
        (Some(_), true) => Err(Error::Config("--event-id and --all are mutually exclusive".into())),
        (None, true) => Ok("all".into()),
        (Some(id), false) => Ok(id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
            .collect()),
        (None, false) => Err(Error::Config("--event-id or --all is required".into())),
    }
}

struct Loaded {
    corpus: Corpus,
    registry: CfRegistry,
}

fn load_stage(config: &RunConfig) -> Result<Loaded> {
    let corpus = load_ready_corpus(config)?;
    let registry = load_registry(&config.registry_path())?;
    Ok(Loaded { corpus, registry })
}

fn build_scorer<'a>(config: &RunConfig, loaded: &'a Loaded, diag: &mut dyn Write) -> Result<Scorer<'a>> {
    let scorer = Scorer::new(&loaded.corpus, &loaded.registry)?;
    match &config.profiles {
        Some(path) => {
            let (profiles, warnings) = load_profiles(path, &loaded.registry)?;
            for w in warnings {
                let _ = writeln!(diag, "warning: {w}");
            }
            scorer.with_profiles(profiles)
        }
        None => Ok(scorer),
    }
}

fn effective_models(config: &RunConfig, scorer: &Scorer<'_>, diag: &mut dyn Write) -> Result<Vec<Model>> {
    match config.model {
        ModelSelection::Static01 if !scorer.has_profiles() => {
            Err(Error::Config("--model static01 requires --profiles".into()))
        }
        ModelSelection::Both if !scorer.has_profiles() => {
            let _ = writeln!(diag, "warning: no --profiles given; scoring the dsc model only");
            Ok(vec![Model::Dsc])
        }
        sel => Ok(sel.models().to_vec()),
    }
}

fn target_events(config: &RunConfig, corpus: &Corpus, labeled_only: bool) -> Result<Vec<String>> {
    if config.all {
        Ok(corpus
            .events()
            .filter(|e| !labeled_only || e.manual_relevant().is_some())
            .map(|e| e.id().to_string())
            .collect())
    } else {
        let id = config.event_id.as_deref().expect("checked by file_stem");
        if corpus.event(id).is_none() {
            return Err(Error::UnknownEvent(id.to_string()));
        }
        Ok(vec![id.to_string()])
    }
}

pub fn cmd_vectors(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let loaded = load_stage(config)?;
    let scorer = Scorer::new(&loaded.corpus, &loaded.registry)?;
    let n = loaded.registry.len();
    ensure_out_dir(config)?;

    let event_vectors = loaded
        .corpus
        .events()
        .map(|e| scorer.event_vector(e.id()))
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_vectors_csv(
        &mut buf,
        n,
        event_vectors.iter().map(|v| (v.event_id.as_str(), v.weights.as_slice())),
    )?;
    let events_path = config.out.join("event_vectors.csv");
    write_file(&events_path, &buf)?;

    let mut buf = Vec::new();
    write_vectors_csv(
        &mut buf,
        n,
        scorer
            .role_vectors()
            .iter()
            .map(|v| (v.role_id.as_str(), v.weights.as_slice())),
    )?;
    let roles_path = config.out.join("role_vectors.csv");
    write_file(&roles_path, &buf)?;
    emit(
        stdout,
        &format!("{}\n{}\n", events_path.display(), roles_path.display()),
    )
}

pub fn cmd_score(config: &RunConfig, stdout: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    let stem = file_stem(config)?;
    let loaded = load_stage(config)?;
    let scorer = build_scorer(config, &loaded, diag)?;
    let models = effective_models(config, &scorer, diag)?;
    let thresholds = config.thresholds()?;

    let mut table = String::from("event_id\trole_id\trole_name\tmodel\tscore\tlabel\n");
    for event_id in target_events(config, &loaded.corpus, false)? {
        for &model in &models {
            let scores: Vec<(String, f64)> = match model {
                Model::Dsc => scorer
                    .dsc_scores(&event_id, thresholds.tau())?
                    .into_iter()
                    .map(|s| (s.role_id, s.score))
                    .collect(),
                Model::Static01 => scorer
                    .static_scores(&event_id)?
                    .into_iter()
                    .map(|(r, s)| (r, f64::from(s)))
                    .collect(),
            };
            for (role_id, score) in scores {
                let name = &loaded.corpus.role(&role_id).expect("registered role").name;
                let label = crate::relevance::classify(score, thresholds.for_model(model));
                table.push_str(&format!(
                    "{event_id}\t{role_id}\t{name}\t{model}\t{}\t{label}\n",
                    format_score(model, score)
                ));
            }
        }
    }
    ensure_out_dir(config)?;
    write_file(&config.out.join(format!("scores_{stem}.tsv")), table.as_bytes())?;
    emit(stdout, &table)
}

pub fn cmd_recommend(config: &RunConfig, stdout: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    let stem = file_stem(config)?;
    let loaded = load_stage(config)?;
    let scorer = build_scorer(config, &loaded, diag)?;
    let models = effective_models(config, &scorer, diag)?;
    let thresholds = config.thresholds()?;

    let mut recs = Vec::new();
    for event_id in target_events(config, &loaded.corpus, false)? {
        for &model in &models {
            recs.push(scorer.recommend(&event_id, model, thresholds)?);
        }
    }
    let mut buf = Vec::new();
    write_recommendations_tsv(&mut buf, &recs).map_err(|e| Error::io("<buffer>", e))?;
    ensure_out_dir(config)?;
    write_file(&config.out.join(format!("recommend_{stem}.tsv")), &buf)?;
    stdout.write_all(&buf).map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_compare(config: &RunConfig, stdout: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    let stem = file_stem(config)?;
    let loaded = load_stage(config)?;
    let scorer = build_scorer(config, &loaded, diag)?;
    let thresholds = config.thresholds()?;

    let ids = target_events(config, &loaded.corpus, true)?;
    let report = evaluate(&scorer, ids.iter().map(String::as_str), thresholds)?;
    let text = render_text(&report, config.all);
    ensure_out_dir(config)?;
    write_file(&config.out.join(format!("compare_{stem}.txt")), text.as_bytes())?;
    write_file(
        &config.out.join(format!("compare_{stem}.tsv")),
        render_rows_tsv(&report).as_bytes(),
    )?;
    write_file(
        &config.out.join(format!("compare_{stem}_metrics.tsv")),
        render_metrics_tsv(&report, config.all).as_bytes(),
    )?;
    emit(stdout, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_config_text(
            "# run settings\nk = 12\ntau=0.25  # inline\nstatic_threshold = 5\nmodel = dsc\nevent-id = e80\nlog_base = 10\n",
            "cfg",
        )
        .unwrap();
        assert_eq!(c.k, 12);
        assert_eq!(c.tau, 0.25);
        assert_eq!(c.static_threshold, 5);
        assert_eq!(c.model, ModelSelection::Dsc);
        assert_eq!(c.event_id.as_deref(), Some("e80"));
        c.set("--tau", "0.3").unwrap();
        assert_eq!(c.tau, 0.3);

        let err = c.apply_config_text("k = 3\nbogus = 1\n", "cfg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(c.clone().set("log-base", "2").is_err());
        assert!(c.apply_config_text("just words\n", "cfg").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.tau = 1.0;
        assert!(c.validate().is_err());
        c.tau = 0.3;
        c.k = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn echo_lists_parameters() {
        let c = RunConfig::default();
        let line = c.echo(Command::ExtractCf);
        for needle in ["k=64", "tau=0.3", "static_threshold=7", "log_base=10", "model=both"] {
            assert!(line.contains(needle), "{line}");
        }
    }

    #[test]
    fn stems() {
        let mut c = RunConfig::default();
        assert!(file_stem(&c).is_err());
        c.event_id = Some("ev/80".into());
        assert_eq!(file_stem(&c).unwrap(), "ev_80");
        c.all = true;
        assert!(file_stem(&c).is_err());
        c.event_id = None;
        assert_eq!(file_stem(&c).unwrap(), "all");
    }
}
