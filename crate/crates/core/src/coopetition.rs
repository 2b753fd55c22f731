//! Cohesion of firms competing for a revenue stream versus the rest.
//!
//! For a stream with competing firms `C` over a firm universe `U`, the
//! "competing" side is the node-induced subgraph on developers of `C` and
//! the "non-competing" side is the one on `U \ C`. Edges between the two
//! sides belong to neither.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{induced_by_firms, CollaborationGraph};
use crate::metrics::{density, Exact};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoopetitionError {
    #[error("revenue models: {0}")]
    Csv(String),
    #[error("revenue models line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("revenue models line {line}: firm {firm:?} is not in the firm universe")]
    UnknownFirm { line: u64, firm: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevenueStream {
    pub name: String,
    pub competing_firms: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityComparison {
    pub stream: String,
    pub n_alpha: usize,
    pub den_alpha: Option<Exact>,
    pub n_beta: usize,
    pub den_beta: Option<Exact>,
}

/// Reads a `stream,firm` CSV. Streams keep the order of their first row.
pub fn load_revenue_models(
    config: &str,
    universe: &BTreeSet<String>,
) -> Result<Vec<RevenueStream>, CoopetitionError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(config.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CoopetitionError::Csv(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["stream", "firm"] {
        return Err(CoopetitionError::Csv(
            "expected header \"stream,firm\"".to_string(),
        ));
    }
    let mut order: Vec<String> = Vec::new();
    let mut firms: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| CoopetitionError::Csv(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let (stream, firm) = (&row[0], &row[1]);
        if stream.is_empty() || firm.is_empty() {
            return Err(CoopetitionError::Row {
                line,
                reason: "empty stream or firm".to_string(),
            });
        }
        if !universe.contains(firm) {
            return Err(CoopetitionError::UnknownFirm {
                line,
                firm: firm.to_string(),
            });
        }
        if !firms.contains_key(stream) {
            order.push(stream.to_string());
        }
        firms
            .entry(stream.to_string())
            .or_default()
            .insert(firm.to_string());
    }
    Ok(order
        .into_iter()
        .map(|name| {
            let competing_firms = firms.remove(&name).expect("recorded stream");
            RevenueStream {
                name,
                competing_firms,
            }
        })
        .collect())
}

/// Competing-side and complement-side subgraphs for `stream`.
pub fn stream_subgraphs(
    g: &CollaborationGraph,
    stream: &RevenueStream,
    universe: &BTreeSet<String>,
) -> (CollaborationGraph, CollaborationGraph) {
    let complement: BTreeSet<String> = universe
        .difference(&stream.competing_firms)
        .cloned()
        .collect();
    (
        induced_by_firms(g, &stream.competing_firms),
        induced_by_firms(g, &complement),
    )
}

pub fn compare_revenue_stream(
    g: &CollaborationGraph,
    stream: &RevenueStream,
    universe: &BTreeSet<String>,
) -> DensityComparison {
    let (alpha, beta) = stream_subgraphs(g, stream, universe);
    DensityComparison {
        stream: stream.name.clone(),
        n_alpha: alpha.edge_count(),
        den_alpha: density(&alpha),
        n_beta: beta.edge_count(),
        den_beta: density(&beta),
    }
}
