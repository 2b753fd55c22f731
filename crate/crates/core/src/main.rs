use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use coopnet::backbone::{
    BackboneParams, DEFAULT_MAX_RANK, DEFAULT_MIN_COMMUNITY_SIZE, DEFAULT_MIN_EMBEDDEDNESS,
};
use coopnet::ingest::{convert_vcs_log, parse_commit_log, TimeField};
use coopnet::report::{run_pipeline, AnalysisParams, Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "coopnet",
    version,
    about = "Firm collaboration networks from commit history"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeArg {
    Committer,
    Author,
}

#[derive(Subcommand)]
enum Command {
    /// Build per-release graphs, metrics and backbones.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        releases: PathBuf,
        #[arg(long)]
        affiliations: PathBuf,
        /// Restrict graphs to the firms listed in this file.
        #[arg(long)]
        firms: Option<PathBuf>,
        #[arg(long)]
        revenue_models: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_RANK)]
        backbone_k: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_EMBEDDEDNESS)]
        backbone_min_embeddedness: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_COMMUNITY_SIZE)]
        community_min_size: usize,
        #[arg(long, value_enum, default_value = "committer")]
        time_field: TimeArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "graphml,dot,csv,json")]
        formats: Vec<Format>,
        /// 0 picks a thread count automatically, 1 runs sequentially.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Convert raw `git log` output into the canonical NDJSON log.
    Convert {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a canonical log and print its validation report.
    Validate {
        #[arg(long)]
        log: PathBuf,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("coopnet: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            log,
            releases,
            affiliations,
            firms,
            revenue_models,
            backbone_k,
            backbone_min_embeddedness,
            community_min_size,
            time_field,
            out,
            formats,
            threads,
        } => {
            let Some(backbone) = BackboneParams::new(backbone_k, backbone_min_embeddedness) else {
                return fail(2, "--backbone-k must be at least 1");
            };
            let cfg = RunConfig {
                commit_log: log,
                releases,
                affiliations,
                firms,
                revenue_models,
                params: AnalysisParams {
                    backbone,
                    community_min_size,
                    time_field: match time_field {
                        TimeArg::Committer => TimeField::Committer,
                        TimeArg::Author => TimeField::Author,
                    },
                    threads,
                },
                out_dir: out,
                formats: formats.into_iter().collect::<BTreeSet<_>>(),
            };
            match run_pipeline(&cfg) {
                Ok(summary) => {
                    eprintln!(
                        "coopnet: {} windows, {} developers, {} commits analyzed",
                        summary.windows.len(),
                        summary.developers,
                        summary.commits.analyzed
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e.exit_code() as u8, e),
            }
        }
        Command::Convert { raw, out } => {
            let text = match fs::read_to_string(&raw) {
                Ok(t) => t,
                Err(e) => return fail(2, format_args!("cannot read {}: {e}", raw.display())),
            };
            let conversion = match convert_vcs_log(&text) {
                Ok(c) => c,
                Err(e) => return fail(2, e),
            };
            if let Err(e) = fs::write(&out, &conversion.ndjson) {
                return fail(3, format_args!("cannot write {}: {e}", out.display()));
            }
            eprintln!(
                "coopnet: {} commits written, {} merge commits dropped",
                conversion.records, conversion.merges_dropped
            );
            ExitCode::SUCCESS
        }
        Command::Validate { log } => {
            let file = match fs::File::open(&log) {
                Ok(f) => f,
                Err(e) => return fail(2, format_args!("cannot read {}: {e}", log.display())),
            };
            let report = match parse_commit_log(BufReader::new(file), TimeField::Committer) {
                Ok((_, report)) => report,
                Err(e) => return fail(3, e),
            };
            let mut stdout = io::stdout().lock();
            let json = serde_json::to_string_pretty(&report).expect("serializable");
            if writeln!(stdout, "{json}").is_err() {
                return ExitCode::from(3);
            }
            if report.rejected.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
