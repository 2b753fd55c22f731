//! Simmelian backbones and the sub-communities they expose.
//!
//! Tie strength is embeddedness: the number of triangles an edge sits in.
//! Every node ranks its incident edges by strength (descending, ties by
//! neighbor id). An edge survives when it is strong enough and each endpoint
//! has it among its top `k`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::graph::CollaborationGraph;

pub const DEFAULT_MAX_RANK: usize = 5;
pub const DEFAULT_MIN_EMBEDDEDNESS: usize = 1;
pub const DEFAULT_MIN_COMMUNITY_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackboneParams {
    max_rank_k: usize,
    min_embeddedness: usize,
}

impl Default for BackboneParams {
    fn default() -> Self {
        Self {
            max_rank_k: DEFAULT_MAX_RANK,
            min_embeddedness: DEFAULT_MIN_EMBEDDEDNESS,
        }
    }
}

impl BackboneParams {
    /// `None` when `max_rank_k` is zero.
    pub fn new(max_rank_k: usize, min_embeddedness: usize) -> Option<Self> {
        (max_rank_k >= 1).then_some(Self {
            max_rank_k,
            min_embeddedness,
        })
    }

    pub fn max_rank_k(&self) -> usize {
        self.max_rank_k
    }

    pub fn min_embeddedness(&self) -> usize {
        self.min_embeddedness
    }
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Embeddedness of each edge, aligned with `g.edge_indices()`.
pub fn embeddedness_per_edge(g: &CollaborationGraph) -> Vec<usize> {
    let adj = g.adjacency();
    g.edge_indices()
        .iter()
        .map(|&(i, j)| sorted_intersection_len(&adj[i], &adj[j]))
        .collect()
}

/// `|N(u) ∩ N(v)|` for every edge, keyed by `(smaller id, larger id)`.
pub fn edge_embeddedness(g: &CollaborationGraph) -> BTreeMap<(String, String), usize> {
    g.edges()
        .zip(embeddedness_per_edge(g))
        .map(|((a, b), e)| ((a.id.clone(), b.id.clone()), e))
        .collect()
}

pub fn extract_backbone(g: &CollaborationGraph, params: &BackboneParams) -> CollaborationGraph {
    let strength = embeddedness_per_edge(g);
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); g.node_count()];
    for (e, &(i, j)) in g.edge_indices().iter().enumerate() {
        incident[i].push(e);
        incident[j].push(e);
    }
    let edges = g.edge_indices();
    let other = |e: usize, u: usize| {
        let (i, j) = edges[e];
        if i == u {
            j
        } else {
            i
        }
    };
    // Number of endpoints that rank the edge within their top k.
    let mut votes = vec![0u8; edges.len()];
    for (u, list) in incident.iter_mut().enumerate() {
        // Node indices follow id order, so comparing indices breaks ties by id.
        list.sort_by(|&x, &y| {
            strength[y]
                .cmp(&strength[x])
                .then_with(|| other(x, u).cmp(&other(y, u)))
        });
        for &e in list.iter().take(params.max_rank_k) {
            votes[e] += 1;
        }
    }
    let keep: Vec<bool> = (0..edges.len())
        .map(|e| votes[e] == 2 && strength[e] >= params.min_embeddedness)
        .collect();
    g.retain_edges(&keep)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubCommunity {
    pub members: BTreeSet<String>,
    /// Member count per firm.
    pub firms: BTreeMap<String, usize>,
}

impl SubCommunity {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Connected components of the backbone with at least `min_size` members,
/// largest first, ties by smallest member id.
pub fn detect_subcommunities(backbone: &CollaborationGraph, min_size: usize) -> Vec<SubCommunity> {
    let adj = backbone.adjacency();
    let nodes = backbone.nodes();
    let mut seen = vec![false; nodes.len()];
    let mut communities = Vec::new();
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut component = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    component.push(v);
                    queue.push_back(v);
                }
            }
        }
        if component.len() < min_size.max(1) {
            continue;
        }
        let mut firms = BTreeMap::new();
        for &i in &component {
            *firms.entry(nodes[i].firm.clone()).or_insert(0) += 1;
        }
        communities.push(SubCommunity {
            members: component.iter().map(|&i| nodes[i].id.clone()).collect(),
            firms,
        });
    }
    communities.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.members.first().cmp(&b.members.first()))
    });
    communities
}

/// Number of communities each firm appears in.
pub fn firm_overlap(communities: &[SubCommunity]) -> BTreeMap<String, usize> {
    let mut overlap = BTreeMap::new();
    for c in communities {
        for firm in c.firms.keys() {
            *overlap.entry(firm.clone()).or_insert(0) += 1;
        }
    }
    overlap
}
