mod common;

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use proptest::prelude::*;

use coopnet::backbone::{detect_subcommunities, extract_backbone, BackboneParams};
use coopnet::graph::{build_collaboration_graph, induced_by_firms};
use coopnet::identity::{canonicalize_identities, load_affiliation_map};
use coopnet::ingest::{parse_commit_log, to_ndjson, CommitRecord, TimeField};
use coopnet::metrics::{
    degree_centrality, density, firm_assortativity, same_firm_edge_fraction, Exact,
};
use coopnet::report::export::{export_graphml, read_graphml};
use coopnet::slicing::{assign_release, release_instant, Assignment, ReleaseWindow};
use coopnet::CollaborationGraph;

use common::{pairs, Matrix};

const FIRMS: [&str; 3] = ["HP", "IBM", "Red Hat"];
const AFFILIATIONS: &str = "[domains]\nhp.com = HP\nibm.com = IBM\nredhat.com = Red Hat\n";
const DOMAINS: [&str; 3] = ["hp.com", "ibm.com", "redhat.com"];

fn graph_strategy(max_n: usize) -> impl Strategy<Value = CollaborationGraph> {
    (0..=max_n)
        .prop_flat_map(|n| {
            let slots = pairs(n).len() as u32;
            let mask = if slots == 0 {
                Just(0u64).boxed()
            } else {
                (0..1u64 << slots).boxed()
            };
            (Just(n), mask, prop::collection::vec(0..FIRMS.len(), n))
        })
        .prop_map(|(n, mask, labels)| {
            let firms: Vec<&str> = labels.iter().map(|&l| FIRMS[l]).collect();
            Matrix::from_mask(n, mask, &firms).to_graph()
        })
}

fn records_strategy() -> impl Strategy<Value = Vec<CommitRecord>> {
    prop::collection::vec(
        (0..6usize, prop::collection::btree_set(0..5usize, 1..4)),
        0..20,
    )
    .prop_map(|commits| {
        commits
            .into_iter()
            .enumerate()
            .map(|(i, (dev, files))| CommitRecord {
                sha: format!("{:040x}", i + 1),
                author_name: String::new(),
                author_email: format!("dev{dev}@{}", DOMAINS[dev % 3]),
                timestamp: DateTime::from_timestamp(1_300_000_000 + i as i64, 0).unwrap(),
                files: files.iter().map(|f| format!("src/{f}.py")).collect(),
            })
            .collect()
    })
}

fn window_graph(records: &[CommitRecord]) -> CollaborationGraph {
    let map = load_affiliation_map(AFFILIATIONS).unwrap();
    let ids = canonicalize_identities(records, &map).unwrap();
    build_collaboration_graph("w", records, &ids, None)
}

proptest! {
    #[test]
    fn graph_is_simple_and_symmetric(records in records_strategy()) {
        let g = window_graph(&records);
        for (a, b) in g.edges() {
            prop_assert!(a.id < b.id);
            prop_assert!(g.has_edge(&a.id, &b.id) && g.has_edge(&b.id, &a.id));
        }
        let adj = g.adjacency();
        for (u, list) in adj.iter().enumerate() {
            prop_assert!(!list.contains(&u));
            for &v in list {
                prop_assert!(adj[v].contains(&u));
            }
        }
    }

    #[test]
    fn more_commits_never_remove_edges(records in records_strategy(), extra in records_strategy()) {
        let base = window_graph(&records);
        let mut all = records.clone();
        all.extend(extra.into_iter().enumerate().map(|(i, mut r)| {
            r.sha = format!("{:040x}", 1000 + i);
            r
        }));
        let grown = window_graph(&all);
        for (a, b) in base.edges() {
            prop_assert!(grown.has_edge(&a.id, &b.id));
        }
        prop_assert!(grown.node_count() >= base.node_count());
    }

    #[test]
    fn induced_subgraphs_compose(g in graph_strategy(8), s in prop::collection::btree_set(0..3usize, 0..=3), t in prop::collection::btree_set(0..3usize, 0..=3)) {
        let names = |set: &BTreeSet<usize>| -> BTreeSet<String> { set.iter().map(|&i| FIRMS[i].to_string()).collect() };
        let (s, t) = (names(&s), names(&t));
        let both: BTreeSet<String> = s.intersection(&t).cloned().collect();
        prop_assert_eq!(induced_by_firms(&induced_by_firms(&g, &s), &t), induced_by_firms(&g, &both));
    }

    #[test]
    fn handshake_and_ranges(g in graph_strategy(9)) {
        let degrees: usize = degree_centrality(&g).values().map(|c| c.degree).sum();
        prop_assert_eq!(degrees, 2 * g.edge_count());
        let unit = |x: Option<Exact>| x.is_none_or(|v| v >= Exact::new(0, 1) && v <= Exact::new(1, 1));
        prop_assert!(unit(density(&g)));
        prop_assert!(unit(same_firm_edge_fraction(&g)));
        prop_assert!(firm_assortativity(&g).is_none_or(|r| r <= Exact::new(1, 1) && r >= Exact::new(-1, 1)));
    }

    #[test]
    fn metrics_ignore_firm_names(g in graph_strategy(8), shift in 1..3usize) {
        let renamed = CollaborationGraph::from_parts(
            g.window(),
            g.nodes().iter().map(|n| {
                let i = FIRMS.iter().position(|f| *f == n.firm).unwrap();
                (n.id.clone(), format!("firm{}", (i + shift) % 3))
            }),
            g.edges().map(|(a, b)| (a.id.clone(), b.id.clone())).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert_eq!(density(&g), density(&renamed));
        prop_assert_eq!(same_firm_edge_fraction(&g), same_firm_edge_fraction(&renamed));
        prop_assert_eq!(firm_assortativity(&g), firm_assortativity(&renamed));
    }

    #[test]
    fn backbone_is_a_spanning_subgraph(g in graph_strategy(10), k in 1..6usize, min in 0..3usize) {
        let b = extract_backbone(&g, &BackboneParams::new(k, min).unwrap());
        prop_assert_eq!(b.nodes(), g.nodes());
        for (x, y) in b.edges() {
            prop_assert!(g.has_edge(&x.id, &y.id));
        }
        prop_assert_eq!(extract_backbone(&g, &BackboneParams::new(k, min).unwrap()), b);
    }

    #[test]
    fn communities_are_connected_and_large(g in graph_strategy(10), min_size in 1..5usize) {
        let b = extract_backbone(&g, &BackboneParams::default());
        let communities = detect_subcommunities(&b, min_size);
        let mut seen = BTreeSet::new();
        for c in &communities {
            prop_assert!(c.len() >= min_size);
            prop_assert_eq!(c.firms.values().sum::<usize>(), c.len());
            // Flood from one member within the backbone reaches exactly the community.
            let start = c.members.first().unwrap().clone();
            let mut reached = BTreeSet::from([start.clone()]);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for (x, y) in b.edges() {
                    let next = if x.id == u { &y.id } else if y.id == u { &x.id } else { continue };
                    if reached.insert(next.clone()) {
                        stack.push(next.clone());
                    }
                }
            }
            prop_assert_eq!(&reached, &c.members);
            for m in &c.members {
                prop_assert!(seen.insert(m.clone()));
            }
        }
        prop_assert!(communities.windows(2).all(|w| w[0].len() >= w[1].len()));
    }

    #[test]
    fn graphml_round_trips(
        ids in prop::collection::btree_set("[a-z<>&\"' ]{1,6}", 0..7),
        firms in prop::collection::vec("[A-Za-z &<]{1,8}", 7),
        mask in 0..1u64 << 21,
    ) {
        let ids: Vec<String> = ids.into_iter().collect();
        let edges: Vec<(String, String)> = pairs(ids.len())
            .into_iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, (i, j))| (ids[i].clone(), ids[j].clone()))
            .collect();
        let g = CollaborationGraph::from_parts(
            "Diablo",
            ids.iter().cloned().zip(firms.iter().cloned()),
            edges,
        ).unwrap();
        let text = export_graphml(&g);
        prop_assert_eq!(read_graphml(&text).unwrap(), g);
    }

    #[test]
    fn every_instant_has_one_home(offsets in prop::collection::vec(1..400i64, 1..5), probe in -100..2000i64) {
        let mut date = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
        let mut windows = Vec::new();
        let mut start = None;
        for (i, off) in offsets.iter().enumerate() {
            date += Duration::days(*off);
            let end = release_instant(date);
            windows.push(ReleaseWindow { name: format!("r{i}"), start, end });
            start = Some(end);
        }
        let base = release_instant(NaiveDate::from_ymd_opt(2012, 1, 1).unwrap());
        for t in [base + Duration::hours(probe * 6), base + Duration::hours(probe * 6) + Duration::seconds(1)] {
            let holders: Vec<&ReleaseWindow> = windows.iter().filter(|w| w.contains(t)).collect();
            match assign_release(t, &windows) {
                Assignment::Window(w) => prop_assert_eq!(holders, vec![w]),
                Assignment::PostRelease => {
                    prop_assert!(holders.is_empty());
                    prop_assert!(t > windows.last().unwrap().end);
                }
            }
        }
    }

    #[test]
    fn ndjson_round_trips(records in records_strategy()) {
        let text = to_ndjson(&records);
        let (parsed, report) = parse_commit_log(text.as_bytes(), TimeField::Committer).unwrap();
        prop_assert!(report.rejected.is_empty());
        prop_assert!(report.cleaned.is_empty());
        prop_assert_eq!(parsed, records);
    }
}

#[test]
fn window_boundary_instant_belongs_to_earlier_release() {
    let end = release_instant(NaiveDate::from_ymd_opt(2011, 2, 3).unwrap());
    assert_eq!(
        end,
        "2011-02-03T23:59:59Z".parse::<DateTime<Utc>>().unwrap()
    );
    let windows = [
        ReleaseWindow {
            name: "Bexar".into(),
            start: None,
            end,
        },
        ReleaseWindow {
            name: "Cactus".into(),
            start: Some(end),
            end: end + Duration::days(70),
        },
    ];
    assert!(matches!(assign_release(end, &windows), Assignment::Window(w) if w.name == "Bexar"));
    assert!(
        matches!(assign_release(end + Duration::seconds(1), &windows), Assignment::Window(w) if w.name == "Cactus")
    );
}
