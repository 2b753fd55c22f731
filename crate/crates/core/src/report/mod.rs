//! End-to-end analysis run and its on-disk artifacts.
//!
//! A run loads every input first, computes all windows (optionally in
//! parallel), renders every artifact in memory and only then writes the
//! output tree. Nothing is written when loading or analysis fails, and a
//! failed write removes whatever it had created.

pub mod export;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::backbone::{
    detect_subcommunities, extract_backbone, firm_overlap, BackboneParams, SubCommunity,
};
use crate::coopetition::{
    compare_revenue_stream, load_revenue_models, CoopetitionError, RevenueStream,
};
use crate::graph::{build_collaboration_graph, CollaborationGraph, FirmFilter, GraphError};
use crate::identity::{
    canonicalize_identities, load_affiliation_map, ExcludedCommit, ExclusionReason, Identities,
    IdentityError,
};
use crate::ingest::{
    parse_commit_log, Cleaning, CommitRecord, IngestError, Rejection, TimeField, ValidationReport,
};
use crate::metrics::{density, evolution_series, HomophilyReport};
use crate::slicing::{assign_release, load_releases, Assignment, ReleaseWindow, SlicingError};

use export::{
    export_dot, export_graphml, export_metrics_csv, format_value, ComparisonRow, ComparisonTable,
    DegreeTable, HomophilyTable, Scope,
};

/// Label of the merged multi-window graph in tables.
pub const MERGED_LABEL: &str = "all";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: io::Error },
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Slicing(#[from] SlicingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coopetition(#[from] CoopetitionError),
}

impl PipelineError {
    /// 2 for configuration and parse problems, 3 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } | PipelineError::Ingest(IngestError::Io(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Graphml,
    Dot,
    Csv,
    Json,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Graphml, Format::Dot, Format::Csv, Format::Json];
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "graphml" => Ok(Format::Graphml),
            "dot" => Ok(Format::Dot),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Graphml => "graphml",
            Format::Dot => "dot",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Analysis parameters that do not depend on input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisParams {
    pub backbone: BackboneParams,
    pub community_min_size: usize,
    pub time_field: TimeField,
    /// Worker threads for per-window work; 0 uses the rayon default, 1 runs
    /// sequentially.
    pub threads: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            backbone: BackboneParams::default(),
            community_min_size: crate::backbone::DEFAULT_MIN_COMMUNITY_SIZE,
            time_field: TimeField::Committer,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub commit_log: PathBuf,
    pub releases: PathBuf,
    pub affiliations: PathBuf,
    pub firms: Option<PathBuf>,
    pub revenue_models: Option<PathBuf>,
    pub params: AnalysisParams,
    pub out_dir: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl RunConfig {
    fn input_paths(&self) -> impl Iterator<Item = &Path> {
        [&self.commit_log, &self.releases, &self.affiliations]
            .into_iter()
            .map(PathBuf::as_path)
            .chain(self.firms.as_deref())
            .chain(self.revenue_models.as_deref())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.formats.is_empty() {
            return Err(PipelineError::Config("no output formats selected".into()));
        }
        let out = normalize_path(&self.out_dir);
        if let Some(clash) = self.input_paths().find(|p| normalize_path(p) == out) {
            return Err(PipelineError::Config(format!(
                "output directory {} is also an input",
                clash.display()
            )));
        }
        Ok(())
    }
}

fn normalize_path(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Parsed inputs of a run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub records: Vec<CommitRecord>,
    pub validation: ValidationReport,
    pub identities: Identities,
    pub windows: Vec<ReleaseWindow>,
    pub filter: Option<FirmFilter>,
    pub universe: BTreeSet<String>,
    pub streams: Vec<RevenueStream>,
}

impl Inputs {
    /// Parses inputs already held in memory.
    pub fn from_texts(
        commit_log: &str,
        releases: &str,
        affiliations: &str,
        firms: Option<&str>,
        revenue_models: Option<&str>,
        time_field: TimeField,
    ) -> Result<Self, PipelineError> {
        let (records, validation) = parse_commit_log(commit_log.as_bytes(), time_field)?;
        Self::assemble(
            records,
            validation,
            releases,
            affiliations,
            firms,
            revenue_models,
        )
    }

    fn assemble(
        records: Vec<CommitRecord>,
        validation: ValidationReport,
        releases: &str,
        affiliations: &str,
        firms: Option<&str>,
        revenue_models: Option<&str>,
    ) -> Result<Self, PipelineError> {
        let windows = load_releases(releases)?;
        let map = load_affiliation_map(affiliations)?;
        let filter = firms.map(FirmFilter::parse).transpose()?;
        let universe = match &filter {
            Some(f) => f.firms().clone(),
            None => map.firms(),
        };
        let streams = match revenue_models {
            Some(text) => load_revenue_models(text, &universe)?,
            None => Vec::new(),
        };
        let identities = canonicalize_identities(&records, &map)?;
        Ok(Self {
            records,
            validation,
            identities,
            windows,
            filter,
            universe,
            streams,
        })
    }

    pub fn load(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let log = fs::File::open(&cfg.commit_log).map_err(|e| input_error(&cfg.commit_log, e))?;
        let (records, validation) = parse_commit_log(BufReader::new(log), cfg.params.time_field)?;
        let releases = read_input(&cfg.releases)?;
        let affiliations = read_input(&cfg.affiliations)?;
        let firms = cfg.firms.as_deref().map(read_input).transpose()?;
        let revenue = cfg.revenue_models.as_deref().map(read_input).transpose()?;
        Self::assemble(
            records,
            validation,
            &releases,
            &affiliations,
            firms.as_deref(),
            revenue.as_deref(),
        )
    }
}

fn input_error(path: &Path, source: io::Error) -> PipelineError {
    match source.kind() {
        io::ErrorKind::NotFound | io::ErrorKind::InvalidData | io::ErrorKind::PermissionDenied => {
            PipelineError::Input {
                path: path.to_path_buf(),
                source,
            }
        }
        _ => PipelineError::Io {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| input_error(path, e))
}

/// Everything computed for one release window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowAnalysis {
    pub release: String,
    pub commits: usize,
    pub graph: CollaborationGraph,
    pub homophily: HomophilyReport,
    pub backbone: CollaborationGraph,
    pub communities: Vec<SubCommunity>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub windows: Vec<WindowAnalysis>,
    pub merged: CollaborationGraph,
    pub comparisons: ComparisonTable,
    pub post_release_commits: usize,
}

/// Groups attributable commits by release window.
fn slice_commits(inputs: &Inputs) -> (Vec<Vec<&CommitRecord>>, usize) {
    let excluded = inputs.identities.excluded_shas();
    let mut per_window = vec![Vec::new(); inputs.windows.len()];
    let position: BTreeMap<&str, usize> = inputs
        .windows
        .iter()
        .enumerate()
        .map(|(i, w)| (w.name.as_str(), i))
        .collect();
    let mut post_release = 0;
    for record in &inputs.records {
        if excluded.contains(record.sha.as_str()) {
            continue;
        }
        match assign_release(record.timestamp, &inputs.windows) {
            Assignment::Window(w) => per_window[position[w.name.as_str()]].push(record),
            Assignment::PostRelease => post_release += 1,
        }
    }
    (per_window, post_release)
}

fn analyze_window(
    window: &ReleaseWindow,
    records: &[&CommitRecord],
    inputs: &Inputs,
    params: &AnalysisParams,
) -> WindowAnalysis {
    let owned: Vec<CommitRecord> = records.iter().map(|r| (*r).clone()).collect();
    let graph = build_collaboration_graph(
        &window.name,
        &owned,
        &inputs.identities,
        inputs.filter.as_ref(),
    );
    let backbone = extract_backbone(&graph, &params.backbone);
    let communities = detect_subcommunities(&backbone, params.community_min_size);
    WindowAnalysis {
        release: window.name.clone(),
        commits: records.len(),
        homophily: HomophilyReport::of(&graph),
        graph,
        backbone,
        communities,
    }
}

pub fn analyze(inputs: &Inputs, params: &AnalysisParams) -> Result<Analysis, PipelineError> {
    let (per_window, post_release_commits) = slice_commits(inputs);
    let jobs: Vec<(&ReleaseWindow, &Vec<&CommitRecord>)> =
        inputs.windows.iter().zip(&per_window).collect();
    let windows: Vec<WindowAnalysis> = if params.threads == 1 {
        jobs.iter()
            .map(|(w, r)| analyze_window(w, r, inputs, params))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.threads)
            .build()
            .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            jobs.par_iter()
                .map(|(w, r)| analyze_window(w, r, inputs, params))
                .collect()
        })
    };

    let merged = CollaborationGraph::union(MERGED_LABEL, windows.iter().map(|w| &w.graph))?;
    let mut rows = Vec::new();
    for w in &windows {
        for stream in &inputs.streams {
            rows.push(ComparisonRow {
                scope: Scope::Window,
                release: w.release.clone(),
                comparison: compare_revenue_stream(&w.graph, stream, &inputs.universe),
            });
        }
    }
    for stream in &inputs.streams {
        rows.push(ComparisonRow {
            scope: Scope::Merged,
            release: MERGED_LABEL.to_string(),
            comparison: compare_revenue_stream(&merged, stream, &inputs.universe),
        });
    }
    Ok(Analysis {
        windows,
        merged,
        comparisons: ComparisonTable(rows),
        post_release_commits,
    })
}

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub contents: String,
}

#[derive(Serialize)]
struct ValidationJson<'a> {
    accepted: usize,
    rejected: &'a [Rejection],
    cleaned: &'a [Cleaning],
    excluded: &'a [ExcludedCommit],
}

#[derive(Serialize)]
struct CommunitiesJson<'a> {
    release: &'a str,
    communities: &'a [SubCommunity],
    firm_overlap: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExclusionCounts {
    pub bot: usize,
    pub missing_email: usize,
    pub invalid_email: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitSummary {
    pub lines_accepted: usize,
    pub lines_rejected: usize,
    pub excluded: ExclusionCounts,
    pub post_release: usize,
    pub analyzed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamSummary {
    pub backbone_k: usize,
    pub backbone_min_embeddedness: usize,
    pub community_min_size: usize,
    pub time_field: &'static str,
    pub firm_filter: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowSummary {
    pub release: String,
    pub commits: usize,
    pub nodes: usize,
    pub edges: usize,
    pub density: String,
    pub backbone_edges: usize,
    pub communities: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub density: String,
}

/// Contents of `run_summary.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub commits: CommitSummary,
    pub developers: usize,
    pub parameters: ParamSummary,
    pub windows: Vec<WindowSummary>,
    pub merged: GraphSummary,
}

pub fn summarize(inputs: &Inputs, analysis: &Analysis, params: &AnalysisParams) -> RunSummary {
    let count = |reason| {
        inputs
            .identities
            .excluded
            .iter()
            .filter(|e| e.reason == reason)
            .count()
    };
    RunSummary {
        commits: CommitSummary {
            lines_accepted: inputs.validation.accepted,
            lines_rejected: inputs.validation.rejected.len(),
            excluded: ExclusionCounts {
                bot: count(ExclusionReason::Bot),
                missing_email: count(ExclusionReason::MissingEmail),
                invalid_email: count(ExclusionReason::InvalidEmail),
            },
            post_release: analysis.post_release_commits,
            analyzed: analysis.windows.iter().map(|w| w.commits).sum(),
        },
        developers: inputs.identities.developers().len(),
        parameters: ParamSummary {
            backbone_k: params.backbone.max_rank_k(),
            backbone_min_embeddedness: params.backbone.min_embeddedness(),
            community_min_size: params.community_min_size,
            time_field: match params.time_field {
                TimeField::Committer => "committer",
                TimeField::Author => "author",
            },
            firm_filter: inputs
                .filter
                .as_ref()
                .map(|f| f.firms().iter().cloned().collect()),
        },
        windows: analysis
            .windows
            .iter()
            .map(|w| WindowSummary {
                release: w.release.clone(),
                commits: w.commits,
                nodes: w.graph.node_count(),
                edges: w.graph.edge_count(),
                density: format_value(density(&w.graph)),
                backbone_edges: w.backbone.edge_count(),
                communities: w.communities.len(),
            })
            .collect(),
        merged: GraphSummary {
            nodes: analysis.merged.node_count(),
            edges: analysis.merged.edge_count(),
            density: format_value(density(&analysis.merged)),
        },
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Renders every artifact of a run, sorted by path.
pub fn render(
    inputs: &Inputs,
    analysis: &Analysis,
    params: &AnalysisParams,
    formats: &BTreeSet<Format>,
) -> Vec<Artifact> {
    let mut out = Vec::new();
    let mut add = |path: PathBuf, contents: String| out.push(Artifact { path, contents });

    add(
        "validation_report.json".into(),
        json(&ValidationJson {
            accepted: inputs.validation.accepted,
            rejected: &inputs.validation.rejected,
            cleaned: &inputs.validation.cleaned,
            excluded: &inputs.identities.excluded,
        }),
    );
    add(
        "run_summary.json".into(),
        json(&summarize(inputs, analysis, params)),
    );

    for w in &analysis.windows {
        let dir = Path::new("windows").join(&w.release);
        if formats.contains(&Format::Graphml) {
            add(dir.join("graph.graphml"), export_graphml(&w.graph));
            add(dir.join("backbone.graphml"), export_graphml(&w.backbone));
        }
        if formats.contains(&Format::Dot) {
            add(dir.join("graph.dot"), export_dot(&w.graph));
            add(dir.join("backbone.dot"), export_dot(&w.backbone));
        }
        if formats.contains(&Format::Csv) {
            add(
                dir.join("degree.csv"),
                export_metrics_csv(&DegreeTable(&w.graph)),
            );
        }
    }
    if formats.contains(&Format::Csv) {
        let series = evolution_series(analysis.windows.iter().map(|w| &w.graph));
        add("evolution.csv".into(), export_metrics_csv(&series));
        let homophily = HomophilyTable(
            analysis
                .windows
                .iter()
                .map(|w| (w.release.clone(), w.homophily))
                .collect(),
        );
        add("homophily.csv".into(), export_metrics_csv(&homophily));
        add(
            "comparisons.csv".into(),
            export_metrics_csv(&analysis.comparisons),
        );
    }
    if formats.contains(&Format::Json) {
        let communities: Vec<CommunitiesJson<'_>> = analysis
            .windows
            .iter()
            .map(|w| CommunitiesJson {
                release: &w.release,
                communities: &w.communities,
                firm_overlap: firm_overlap(&w.communities),
            })
            .collect();
        add("communities.json".into(), json(&communities));
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out
}

/// Writes artifacts under `out_dir`, removing everything it created if any
/// write fails.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<(), PipelineError> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut created_files: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for artifact in artifacts {
            let path = out_dir.join(&artifact.path);
            let parent = path.parent().unwrap_or(out_dir).to_path_buf();
            let mut missing: Vec<PathBuf> = parent
                .ancestors()
                .take_while(|p| !p.as_os_str().is_empty() && !p.exists())
                .map(Path::to_path_buf)
                .collect();
            missing.reverse();
            for dir in missing {
                fs::create_dir(&dir).map_err(|source| PipelineError::Io {
                    path: dir.clone(),
                    source,
                })?;
                created_dirs.push(dir);
            }
            fs::write(&path, &artifact.contents).map_err(|source| PipelineError::Io {
                path: path.clone(),
                source,
            })?;
            created_files.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for file in created_files.iter().rev() {
            let _ = fs::remove_file(file);
        }
        for dir in created_dirs.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
    }
    result
}

/// Loads, analyzes, renders and writes one run.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    let inputs = Inputs::load(cfg)?;
    let analysis = analyze(&inputs, &cfg.params)?;
    let artifacts = render(&inputs, &analysis, &cfg.params, &cfg.formats);
    write_artifacts(&cfg.out_dir, &artifacts)?;
    Ok(summarize(&inputs, &analysis, &cfg.params))
}
