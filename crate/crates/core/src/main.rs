use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsc_core::cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "dsc", version, about = "Route collaborative-work events to relevant roles")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Validate input files and write a frozen corpus
    Ingest,
    /// Rank vocabulary by IEF and write the context-factor registry
    ExtractCf,
    /// Export event and role vectors as CSV
    Vectors,
    /// Score an event against every role
    Score,
    /// Rank recipients for an event
    Recommend,
    /// Compare models with observed sharing and manual labels
    Compare,
}

#[derive(Args)]
struct Opts {
    /// Plain-text `key = value` file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    events: Option<String>,
    #[arg(long, global = true)]
    roles: Option<String>,
    #[arg(long, global = true)]
    links: Option<String>,
    /// Event ids to keep at ingestion, one per line
    #[arg(long, global = true)]
    select: Option<String>,
    #[arg(long, global = true)]
    registry: Option<String>,
    #[arg(long, global = true)]
    overrides: Option<String>,
    /// Static 0-1 interest profiles
    #[arg(long, global = true)]
    profiles: Option<String>,
    /// Number of context factors
    #[arg(long, global = true)]
    k: Option<String>,
    /// DSC High/Low threshold
    #[arg(long, global = true)]
    tau: Option<String>,
    /// 0-1 model High/Low threshold
    #[arg(long, global = true)]
    static_threshold: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    event_id: Option<String>,
    #[arg(long, global = true)]
    all: bool,
    /// dsc, static01 or both
    #[arg(long, global = true)]
    model: Option<String>,
}

impl Opts {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        let fields: [(&str, &Option<String>); 13] = [
            ("events", &self.events),
            ("roles", &self.roles),
            ("links", &self.links),
            ("select", &self.select),
            ("registry", &self.registry),
            ("overrides", &self.overrides),
            ("profiles", &self.profiles),
            ("k", &self.k),
            ("tau", &self.tau),
            ("static-threshold", &self.static_threshold),
            ("out", &self.out),
            ("event-id", &self.event_id),
            ("model", &self.model),
        ];
        for (key, value) in fields {
            if let Some(v) = value {
                pairs.push((key, v.clone()));
            }
        }
        if self.all {
            pairs.push(("all", "true".into()));
        }
        pairs
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match cli.command {
        Cmd::Ingest => Command::Ingest,
        Cmd::ExtractCf => Command::ExtractCf,
        Cmd::Vectors => Command::Vectors,
        Cmd::Score => Command::Score,
        Cmd::Recommend => Command::Recommend,
        Cmd::Compare => Command::Compare,
    };

    let mut config = RunConfig::default();
    let applied = cli
        .opts
        .config
        .as_deref()
        .map_or(Ok(()), |p| config.apply_config_file(p))
        .and_then(|_| {
            cli.opts
                .pairs()
                .into_iter()
                .try_for_each(|(k, v)| config.set(k, &v))
        });

    let stdout = io::stdout();
    let stderr = io::stderr();
    let result = applied.and_then(|_| run(command, &config, &mut stdout.lock(), &mut stderr.lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
