//! Brute-force oracles and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use coopnet::backbone::BackboneParams;
use coopnet::ingest::TimeField;
use coopnet::report::{AnalysisParams, Format, RunConfig};
use coopnet::CollaborationGraph;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_config(out_dir: &Path, threads: usize) -> RunConfig {
    let input = fixture_dir().join("input");
    RunConfig {
        commit_log: input.join("commits.ndjson"),
        releases: input.join("releases.csv"),
        affiliations: input.join("affiliations.ini"),
        firms: Some(input.join("firms.txt")),
        revenue_models: Some(input.join("revenue_models.csv")),
        params: AnalysisParams {
            backbone: BackboneParams::default(),
            community_min_size: 3,
            time_field: TimeField::Committer,
            threads,
        },
        out_dir: out_dir.to_path_buf(),
        formats: Format::ALL.into(),
    }
}

/// Every file under `root`, keyed by relative path.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let Ok(entries) = fs::read_dir(dir) else {
            return;
        };
        for entry in entries {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Describes how two trees differ, or `None` when they are identical.
pub fn tree_diff(
    expected: &BTreeMap<PathBuf, Vec<u8>>,
    actual: &BTreeMap<PathBuf, Vec<u8>>,
) -> Option<String> {
    let want: BTreeSet<_> = expected.keys().collect();
    let got: BTreeSet<_> = actual.keys().collect();
    if want != got {
        return Some(format!(
            "file sets differ: missing {:?}, unexpected {:?}",
            want.difference(&got).collect::<Vec<_>>(),
            got.difference(&want).collect::<Vec<_>>()
        ));
    }
    expected
        .iter()
        .find(|(path, bytes)| actual[*path] != **bytes)
        .map(|(path, _)| format!("{} differs", path.display()))
}

pub fn node_id(i: usize) -> String {
    format!("v{i}")
}

/// Edge slots of a complete graph on `n` nodes, in a fixed order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// Adjacency-matrix graph used by the oracles.
#[derive(Debug, Clone)]
pub struct Matrix {
    pub n: usize,
    pub adj: Vec<Vec<bool>>,
    pub firm: Vec<String>,
}

impl Matrix {
    pub fn from_mask(n: usize, mask: u64, firm: &[&str]) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for (bit, &(i, j)) in pairs(n).iter().enumerate() {
            if mask >> bit & 1 == 1 {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
        Self {
            n,
            adj,
            firm: firm[..n].iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn to_graph(&self) -> CollaborationGraph {
        let nodes = (0..self.n).map(|i| (node_id(i), self.firm[i].clone()));
        let edges: Vec<(String, String)> = pairs(self.n)
            .into_iter()
            .filter(|&(i, j)| self.adj[i][j])
            .map(|(i, j)| (node_id(i), node_id(j)))
            .collect();
        CollaborationGraph::from_parts("w", nodes, edges).unwrap()
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        pairs(self.n)
            .into_iter()
            .filter(|&(i, j)| self.adj[i][j])
            .collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].iter().filter(|&&x| x).count()
    }

    pub fn density(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let possible = pairs(self.n).len() as f64;
        Some(self.edge_list().len() as f64 / possible)
    }

    pub fn same_firm_fraction(&self) -> Option<f64> {
        let edges = self.edge_list();
        if edges.is_empty() {
            return None;
        }
        let same = edges
            .iter()
            .filter(|&&(i, j)| self.firm[i] == self.firm[j])
            .count();
        Some(same as f64 / edges.len() as f64)
    }

    /// Newman's categorical assortativity from the normalized mixing matrix.
    pub fn assortativity(&self) -> Option<f64> {
        let edges = self.edge_list();
        if edges.is_empty() {
            return None;
        }
        let labels: Vec<&String> = self
            .firm
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let k = labels.len();
        let pos = |f: &String| labels.iter().position(|l| *l == f).unwrap();
        let mut e = vec![vec![0.0f64; k]; k];
        let w = 1.0 / (2.0 * edges.len() as f64);
        for &(i, j) in &edges {
            let (a, b) = (pos(&self.firm[i]), pos(&self.firm[j]));
            e[a][b] += w;
            e[b][a] += w;
        }
        let trace: f64 = (0..k).map(|x| e[x][x]).sum();
        let sq: f64 = (0..k)
            .map(|x| {
                let a: f64 = e[x].iter().sum();
                a * a
            })
            .sum();
        if (1.0 - sq).abs() < 1e-12 {
            return None;
        }
        Some((trace - sq) / (1.0 - sq))
    }

    /// Triangles through edge `(i, j)`.
    pub fn triangles(&self, i: usize, j: usize) -> usize {
        (0..self.n)
            .filter(|&w| w != i && w != j && self.adj[i][w] && self.adj[j][w])
            .count()
    }

    /// Whether `u` places its edge to `v` within its top `k`: fewer than `k`
    /// incident edges outrank it.
    fn in_top_k(&self, u: usize, v: usize, k: usize) -> bool {
        let s = self.triangles(u, v);
        let better = (0..self.n)
            .filter(|&w| w != u && w != v && self.adj[u][w])
            .filter(|&w| {
                let t = self.triangles(u, w);
                t > s || (t == s && node_id(w) < node_id(v))
            })
            .count();
        better < k
    }

    pub fn backbone_edges(&self, k: usize, min_emb: usize) -> BTreeSet<(usize, usize)> {
        self.edge_list()
            .into_iter()
            .filter(|&(i, j)| {
                self.triangles(i, j) >= min_emb && self.in_top_k(i, j, k) && self.in_top_k(j, i, k)
            })
            .collect()
    }
}

/// Edge set of a library graph as index pairs of `v{i}` ids.
pub fn index_edges(g: &CollaborationGraph) -> BTreeSet<(usize, usize)> {
    let parse = |id: &str| id[1..].parse::<usize>().unwrap();
    g.edges()
        .map(|(a, b)| {
            let (x, y) = (parse(&a.id), parse(&b.id));
            (x.min(y), x.max(y))
        })
        .collect()
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}
