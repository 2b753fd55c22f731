//! Per-window collaboration graphs.
//!
//! Nodes are canonical developer ids carrying a firm attribute. Two
//! developers are adjacent iff they modified at least one common file inside
//! the same release window. Edges are unweighted and undirected.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::identity::Identities;
use crate::ingest::CommitRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("firm filter is empty")]
    EmptyFilter,
    #[error("edge endpoint {0:?} is not a node")]
    UnknownEndpoint(String),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("node {id:?} given two firms: {first:?} and {second:?}")]
    ConflictingFirm {
        id: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Developer {
    pub id: String,
    pub firm: String,
}

/// Undirected simple graph over developers.
///
/// Nodes are kept sorted by id, so node indices follow lexicographic id
/// order. Edges are stored once as `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollaborationGraph {
    window: String,
    nodes: Vec<Developer>,
    edges: Vec<(usize, usize)>,
}

impl CollaborationGraph {
    pub fn empty(window: impl Into<String>) -> Self {
        Self {
            window: window.into(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Builds a graph from `(id, firm)` nodes and `(id, id)` edges.
    /// Duplicate nodes (with the same firm) and duplicate edges collapse.
    pub fn from_parts<N, E, S, T>(
        window: impl Into<String>,
        nodes: N,
        edges: E,
    ) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = (S, S)>,
        E: IntoIterator<Item = (T, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut firms: BTreeMap<String, String> = BTreeMap::new();
        for (id, firm) in nodes {
            let (id, firm) = (id.into(), firm.into());
            if let Some(first) = firms.get(&id) {
                if *first != firm {
                    return Err(GraphError::ConflictingFirm {
                        id,
                        first: first.clone(),
                        second: firm,
                    });
                }
            }
            firms.insert(id, firm);
        }
        let nodes: Vec<Developer> = firms
            .into_iter()
            .map(|(id, firm)| Developer { id, firm })
            .collect();
        let mut graph = Self {
            window: window.into(),
            nodes,
            edges: Vec::new(),
        };
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let i = graph
                .node_index(a)
                .ok_or_else(|| GraphError::UnknownEndpoint(a.to_string()))?;
            let j = graph
                .node_index(b)
                .ok_or_else(|| GraphError::UnknownEndpoint(b.to_string()))?;
            if i == j {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            edge_set.insert((i.min(j), i.max(j)));
        }
        graph.edges = edge_set.into_iter().collect();
        Ok(graph)
    }

    /// Index-level constructor; `nodes` must be sorted by id without
    /// duplicates and every pair must satisfy `i < j < nodes.len()`.
    pub(crate) fn from_sorted(
        window: String,
        nodes: Vec<Developer>,
        edges: BTreeSet<(usize, usize)>,
    ) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0].id < w[1].id));
        debug_assert!(edges.iter().all(|&(i, j)| i < j && j < nodes.len()));
        Self {
            window,
            nodes,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn window(&self) -> &str {
        &self.window
    }

    pub fn with_window(mut self, window: impl Into<String>) -> Self {
        self.window = window.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Developer] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn firm_of(&self, id: &str) -> Option<&str> {
        self.node_index(id).map(|i| self.nodes[i].firm.as_str())
    }

    /// Edges as node-index pairs `(i, j)`, `i < j`, ascending.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges as developer pairs, smaller id first.
    pub fn edges(&self) -> impl Iterator<Item = (&Developer, &Developer)> + '_ {
        self.edges
            .iter()
            .map(move |&(i, j)| (&self.nodes[i], &self.nodes[j]))
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(i), Some(j)) if i != j => self.edges.binary_search(&(i.min(j), i.max(j))).is_ok(),
            _ => false,
        }
    }

    /// Sorted neighbor lists indexed by node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn firms(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.firm.as_str()).collect()
    }

    /// Keeps the nodes for which `keep` is true and the edges among them.
    pub(crate) fn induced_by<F: Fn(&Developer) -> bool>(&self, keep: F) -> Self {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep(n) {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(i, j)| remap[i] != usize::MAX && remap[j] != usize::MAX)
            .map(|&(i, j)| (remap[i], remap[j]))
            .collect();
        Self {
            window: self.window.clone(),
            nodes,
            edges,
        }
    }

    /// Same node set, keeping edge `e` of `edge_indices()` iff `keep[e]`.
    pub(crate) fn retain_edges(&self, keep: &[bool]) -> Self {
        debug_assert_eq!(keep.len(), self.edges.len());
        Self {
            window: self.window.clone(),
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(&e, _)| e)
                .collect(),
        }
    }

    /// Node and edge union of several graphs.
    pub fn union<'a, I>(window: impl Into<String>, graphs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = &'a CollaborationGraph>,
    {
        let graphs: Vec<&CollaborationGraph> = graphs.into_iter().collect();
        let nodes = graphs
            .iter()
            .flat_map(|g| g.nodes.iter().map(|n| (n.id.clone(), n.firm.clone())));
        let edges: Vec<(&str, &str)> = graphs
            .iter()
            .flat_map(|g| g.edges().map(|(a, b)| (a.id.as_str(), b.id.as_str())))
            .collect();
        Self::from_parts(window, nodes, edges)
    }
}

/// Restricts graphs to developers of the listed firms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmFilter {
    firms: BTreeSet<String>,
}

impl FirmFilter {
    pub fn new<I, S>(firms: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let firms: BTreeSet<String> = firms.into_iter().map(Into::into).collect();
        if firms.is_empty() {
            return Err(GraphError::EmptyFilter);
        }
        Ok(Self { firms })
    }

    /// One firm per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        Self::new(
            text.lines()
                .map(|l| l.split_once('#').map_or(l, |(before, _)| before).trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        )
    }

    pub fn contains(&self, firm: &str) -> bool {
        self.firms.contains(firm)
    }

    pub fn firms(&self) -> &BTreeSet<String> {
        &self.firms
    }
}

/// Builds the collaboration graph of one window.
///
/// `records` must all belong to the window. Records whose author has no
/// identity (excluded commits) are skipped, as are developers outside
/// `filter`. Every remaining author is a node, even without edges.
pub fn build_collaboration_graph(
    window: &str,
    records: &[CommitRecord],
    identities: &Identities,
    filter: Option<&FirmFilter>,
) -> CollaborationGraph {
    let mut developers: BTreeMap<&str, &str> = BTreeMap::new();
    let mut touched: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for record in records {
        let Some(dev) = identities.get(&record.author_email) else {
            continue;
        };
        if filter.is_some_and(|f| !f.contains(&dev.firm)) {
            continue;
        }
        developers.insert(&dev.canonical_id, &dev.firm);
        for file in &record.files {
            touched.entry(file).or_default().insert(&dev.canonical_id);
        }
    }

    let index: BTreeMap<&str, usize> = developers
        .keys()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let mut edges = BTreeSet::new();
    for devs in touched.values() {
        // BTreeSet order matches index order, so i < j below.
        let ids: Vec<usize> = devs.iter().map(|d| index[d]).collect();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                edges.insert((i, j));
            }
        }
    }
    let nodes = developers
        .into_iter()
        .map(|(id, firm)| Developer {
            id: id.to_string(),
            firm: firm.to_string(),
        })
        .collect();
    CollaborationGraph::from_sorted(window.to_string(), nodes, edges)
}

/// Node-induced subgraph on developers whose firm is in `firms`.
pub fn induced_by_firms(g: &CollaborationGraph, firms: &BTreeSet<String>) -> CollaborationGraph {
    g.induced_by(|n| firms.contains(&n.firm))
}
