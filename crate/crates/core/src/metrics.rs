//! Cohesion and homophily measures.
//!
//! Every measure here is a ratio of integer counts, so values are kept as
//! exact rationals ([`Exact`]) and only turned into `f64` or decimal text at
//! the edges. `None` means the measure is undefined for the graph (its
//! denominator vanishes); it is never folded into zero.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::Zero;

use crate::graph::CollaborationGraph;

/// An exact rational metric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(Ratio<i128>);

impl Exact {
    pub fn new(numer: i128, denom: i128) -> Self {
        Self(Ratio::new(numer, denom))
    }

    pub fn ratio(self) -> Ratio<i128> {
        self.0
    }

    pub fn value(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Fixed-point decimal with `places` digits, rounding half to even on
    /// the exact value.
    pub fn fixed(self, places: u32) -> String {
        let scale = 10i128.pow(places);
        let numer = *self.0.numer();
        let denom = *self.0.denom();
        let scaled = numer.abs() * scale;
        let mut q = scaled / denom;
        let rem = scaled % denom;
        if 2 * rem > denom || (2 * rem == denom && q % 2 == 1) {
            q += 1;
        }
        let sign = if numer.is_negative() && q != 0 {
            "-"
        } else {
            ""
        };
        if places == 0 {
            return format!("{sign}{q}");
        }
        format!(
            "{sign}{}.{:0width$}",
            q / scale,
            q % scale,
            width = places as usize
        )
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fixed(6))
    }
}

/// Summary statistics for one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMetrics {
    pub node_count: usize,
    pub edge_count: usize,
    pub density: Option<Exact>,
    pub degree: BTreeMap<String, usize>,
    pub normalized_degree: BTreeMap<String, Option<Exact>>,
}

impl GraphMetrics {
    pub fn of(g: &CollaborationGraph) -> Self {
        let centrality = degree_centrality(g);
        Self {
            node_count: g.node_count(),
            edge_count: g.edge_count(),
            density: density(g),
            degree: centrality
                .iter()
                .map(|(id, c)| (id.clone(), c.degree))
                .collect(),
            normalized_degree: centrality
                .into_iter()
                .map(|(id, c)| (id, c.normalized))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeCentrality {
    pub degree: usize,
    /// `degree / (n - 1)`; undefined below two nodes.
    pub normalized: Option<Exact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HomophilyReport {
    pub same_firm_edge_fraction: Option<Exact>,
    pub assortativity: Option<Exact>,
}

impl HomophilyReport {
    pub fn of(g: &CollaborationGraph) -> Self {
        Self {
            same_firm_edge_fraction: same_firm_edge_fraction(g),
            assortativity: firm_assortativity(g),
        }
    }
}

/// `2|E| / (|V| (|V| - 1))`.
pub fn density(g: &CollaborationGraph) -> Option<Exact> {
    let n = g.node_count() as i128;
    if n < 2 {
        return None;
    }
    Some(Exact::new(2 * g.edge_count() as i128, n * (n - 1)))
}

pub fn degree_centrality(g: &CollaborationGraph) -> BTreeMap<String, DegreeCentrality> {
    let mut degree = vec![0usize; g.node_count()];
    for &(i, j) in g.edge_indices() {
        degree[i] += 1;
        degree[j] += 1;
    }
    let n = g.node_count() as i128;
    g.nodes()
        .iter()
        .zip(degree)
        .map(|(node, d)| {
            let normalized = (n >= 2).then(|| Exact::new(d as i128, n - 1));
            (
                node.id.clone(),
                DegreeCentrality {
                    degree: d,
                    normalized,
                },
            )
        })
        .collect()
}

/// Share of edges whose endpoints belong to the same firm.
pub fn same_firm_edge_fraction(g: &CollaborationGraph) -> Option<Exact> {
    if g.edge_count() == 0 {
        return None;
    }
    let within = g.edges().filter(|(a, b)| a.firm == b.firm).count();
    Some(Exact::new(within as i128, g.edge_count() as i128))
}

/// Categorical assortativity of the firm attribute.
///
/// With each undirected edge counted once per direction over `2m` ends,
/// `T` the number of same-firm ends and `A_f` the number of ends in firm
/// `f`, `r = (2m·T − ΣA_f²) / ((2m)² − ΣA_f²)`. This is the usual
/// `(Σe_ff − Σa_f²) / (1 − Σa_f²)` over the mixing matrix, kept in integers.
pub fn firm_assortativity(g: &CollaborationGraph) -> Option<Exact> {
    let ends = 2 * g.edge_count() as i128;
    if ends == 0 {
        return None;
    }
    let mut per_firm: BTreeMap<&str, i128> = BTreeMap::new();
    let mut same = 0i128;
    for (a, b) in g.edges() {
        *per_firm.entry(&a.firm).or_default() += 1;
        *per_firm.entry(&b.firm).or_default() += 1;
        if a.firm == b.firm {
            same += 2;
        }
    }
    let squares: i128 = per_firm.values().map(|c| c * c).sum();
    let denom = ends * ends - squares;
    if denom.is_zero() {
        return None;
    }
    Some(Exact::new(ends * same - squares, denom))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionRow {
    pub release: String,
    pub nodes: usize,
    pub edges: usize,
    pub density: Option<Exact>,
}

/// Size and cohesion per release, in the order given.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvolutionSeries(pub Vec<EvolutionRow>);

pub fn evolution_series<'a, I>(graphs: I) -> EvolutionSeries
where
    I: IntoIterator<Item = &'a CollaborationGraph>,
{
    EvolutionSeries(
        graphs
            .into_iter()
            .map(|g| EvolutionRow {
                release: g.window().to_string(),
                nodes: g.node_count(),
                edges: g.edge_count(),
                density: density(g),
            })
            .collect(),
    )
}
