//! Deterministic text serializations.
//!
//! All writers emit nodes and edges in lexicographic id order and end every
//! line with `\n`. Undefined values are written as [`UNDEFINED`]; reals as
//! six-decimal fixed point.

use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use crate::coopetition::DensityComparison;
use crate::graph::{CollaborationGraph, GraphError};
use crate::metrics::{degree_centrality, EvolutionSeries, Exact, HomophilyReport};

/// Marker for a value whose denominator vanishes.
pub const UNDEFINED: &str = "UND";

pub fn format_value(value: Option<Exact>) -> String {
    match value {
        Some(v) => v.fixed(6),
        None => UNDEFINED.to_string(),
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn export_graphml(g: &CollaborationGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"firm\" for=\"node\" attr.name=\"firm\" attr.type=\"string\"/>\n");
    out.push_str(&format!(
        "  <graph id=\"{}\" edgedefault=\"undirected\">\n",
        xml_escape(g.window())
    ));
    for node in g.nodes() {
        out.push_str(&format!(
            "    <node id=\"{}\">\n      <data key=\"firm\">{}</data>\n    </node>\n",
            xml_escape(&node.id),
            xml_escape(&node.firm)
        ));
    }
    for (n, (a, b)) in g.edges().enumerate() {
        out.push_str(&format!(
            "    <edge id=\"e{n}\" source=\"{}\" target=\"{}\"/>\n",
            xml_escape(&a.id),
            xml_escape(&b.id)
        ));
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Undirected DOT. An empty graph is `graph G {\n}\n`.
pub fn export_dot(g: &CollaborationGraph) -> String {
    let mut out = String::from("graph G {\n");
    for node in g.nodes() {
        out.push_str(&format!(
            "  {} [firm={}];\n",
            dot_quote(&node.id),
            dot_quote(&node.firm)
        ));
    }
    for (a, b) in g.edges() {
        out.push_str(&format!(
            "  {} -- {};\n",
            dot_quote(&a.id),
            dot_quote(&b.id)
        ));
    }
    out.push_str("}\n");
    out
}

/// A table with a fixed header, written as CSV.
pub trait CsvTable {
    fn header(&self) -> &'static [&'static str];
    fn rows(&self) -> Vec<Vec<String>>;
}

/// RFC 4180 CSV with `\n` record terminators.
pub fn export_metrics_csv<T: CsvTable + ?Sized>(table: &T) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(table.header())
        .expect("in-memory write");
    for row in table.rows() {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

impl CsvTable for EvolutionSeries {
    fn header(&self) -> &'static [&'static str] {
        &["release", "nodes", "edges", "density"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|r| {
                vec![
                    r.release.clone(),
                    r.nodes.to_string(),
                    r.edges.to_string(),
                    format_value(r.density),
                ]
            })
            .collect()
    }
}

/// Homophily measures per release.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HomophilyTable(pub Vec<(String, HomophilyReport)>);

impl CsvTable for HomophilyTable {
    fn header(&self) -> &'static [&'static str] {
        &["release", "same_firm_fraction", "assortativity"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|(release, h)| {
                vec![
                    release.clone(),
                    format_value(h.same_firm_edge_fraction),
                    format_value(h.assortativity),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Window,
    Merged,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Window => "window",
            Scope::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub scope: Scope,
    pub release: String,
    pub comparison: DensityComparison,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComparisonTable(pub Vec<ComparisonRow>);

impl CsvTable for ComparisonTable {
    fn header(&self) -> &'static [&'static str] {
        &[
            "scope",
            "release",
            "stream",
            "n_alpha",
            "den_alpha",
            "n_beta",
            "den_beta",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|row| {
                let c = &row.comparison;
                vec![
                    row.scope.as_str().to_string(),
                    row.release.clone(),
                    c.stream.clone(),
                    c.n_alpha.to_string(),
                    format_value(c.den_alpha),
                    c.n_beta.to_string(),
                    format_value(c.den_beta),
                ]
            })
            .collect()
    }
}

/// Degree centrality of every node of one graph.
pub struct DegreeTable<'a>(pub &'a CollaborationGraph);

impl CsvTable for DegreeTable<'_> {
    fn header(&self) -> &'static [&'static str] {
        &["node", "firm", "degree", "normalized_degree"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let centrality = degree_centrality(self.0);
        self.0
            .nodes()
            .iter()
            .map(|n| {
                let c = centrality[&n.id];
                vec![
                    n.id.clone(),
                    n.firm.clone(),
                    c.degree.to_string(),
                    format_value(c.normalized),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum GraphmlError {
    #[error("GraphML parse error: {0}")]
    Xml(#[from] quick_xml::Error),
    #[error("GraphML attribute error: {0}")]
    Attr(#[from] quick_xml::events::attributes::AttrError),
    #[error("GraphML: {0}")]
    Structure(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn attribute(
    e: &quick_xml::events::BytesStart<'_>,
    name: &[u8],
) -> Result<Option<String>, GraphmlError> {
    for attr in e.attributes() {
        let attr = attr?;
        if attr.key.as_ref() == name {
            return Ok(Some(attr.unescape_value()?.into_owned()));
        }
    }
    Ok(None)
}

/// Reads an undirected GraphML document with a string `firm` node key.
pub fn read_graphml(text: &str) -> Result<CollaborationGraph, GraphmlError> {
    let mut reader = Reader::from_str(text);
    let mut window = String::new();
    let mut firm_key = None;
    let mut nodes: Vec<(String, String)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut current_node: Option<String> = None;
    let mut in_firm_data = false;
    let mut firm_text = String::new();
    loop {
        match reader.read_event()? {
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"key" => {
                if attribute(&e, b"attr.name")?.as_deref() == Some("firm") {
                    firm_key = attribute(&e, b"id")?;
                }
            }
            Event::Start(e) if e.name().as_ref() == b"graph" => {
                if attribute(&e, b"edgedefault")?.as_deref() != Some("undirected") {
                    return Err(GraphmlError::Structure("graph is not undirected".into()));
                }
                window = attribute(&e, b"id")?.unwrap_or_default();
            }
            Event::Start(e) if e.name().as_ref() == b"node" => {
                current_node = attribute(&e, b"id")?;
                firm_text.clear();
            }
            Event::Empty(e) if e.name().as_ref() == b"node" => {
                let id = attribute(&e, b"id")?
                    .ok_or_else(|| GraphmlError::Structure("node without id".into()))?;
                nodes.push((id, String::new()));
            }
            Event::End(e) if e.name().as_ref() == b"node" => {
                let id = current_node
                    .take()
                    .ok_or_else(|| GraphmlError::Structure("node without id".into()))?;
                nodes.push((id, std::mem::take(&mut firm_text)));
            }
            Event::Start(e) if e.name().as_ref() == b"data" => {
                in_firm_data = current_node.is_some()
                    && attribute(&e, b"key")? == firm_key
                    && firm_key.is_some();
            }
            Event::Text(t) if in_firm_data => {
                firm_text.push_str(&t.unescape()?);
            }
            Event::End(e) if e.name().as_ref() == b"data" => in_firm_data = false,
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"edge" => {
                let source = attribute(&e, b"source")?;
                let target = attribute(&e, b"target")?;
                match (source, target) {
                    (Some(s), Some(t)) => edges.push((s, t)),
                    _ => return Err(GraphmlError::Structure("edge without endpoints".into())),
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(CollaborationGraph::from_parts(window, nodes, edges)?)
}
