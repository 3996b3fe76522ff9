mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{hop_distance, random_case, reachable, smallest_separator, vertex, ExactEdges};
use ddsrecon::capture::{load_capture, CaptureRecord, Guid, ParticipantDatabase};
use ddsrecon::glob::GlobPattern;
use ddsrecon::intersection::{EdgeOracle, EdgeStatus, EdgeVerifier};
use ddsrecon::netsim::{emit_capture, generate_grid, Scenario};
use ddsrecon::topology::*;
use ddsrecon::time::Timestamp;

fn at() -> Timestamp {
    "2025-06-01T00:00:00Z".parse().unwrap()
}

fn talker_listener() -> ParticipantDatabase {
    let docs = [
        (1u8, "CN=talker", include_str!("fixtures/talker.xml")),
        (2u8, "CN=listener", include_str!("fixtures/listener.xml")),
    ];
    let records: Vec<CaptureRecord> = docs
        .iter()
        .map(|(n, subject, doc)| CaptureRecord {
            timestamp: Timestamp::from_unix(0),
            source_address: format!("10.0.0.{n}:7410"),
            destination_address: "239.255.0.1:7400".into(),
            participant_guid: Guid::from_parts([0; 12], u32::from(*n)),
            subject_name: subject.to_string(),
            permissions_document: doc.as_bytes().to_vec(),
        })
        .collect();
    load_capture(&records, &ParticipantDatabase::new()).unwrap().0
}

fn scenario_db(s: &Scenario) -> ParticipantDatabase {
    load_capture(&emit_capture(s), &ParticipantDatabase::new()).unwrap().0
}

fn patterns(sources: &[&str]) -> BipartiteGraph {
    BipartiteGraph {
        participants: vec![],
        labels: Default::default(),
        topic_patterns: sources.iter().map(|s| GlobPattern::parse(s).unwrap()).collect(),
        publish_edges: BTreeSet::new(),
        subscribe_edges: BTreeSet::new(),
    }
}

#[test]
fn talker_listener_sample() {
    let db = talker_listener();
    let talker = db.resolve("talker").unwrap();
    let listener = db.resolve("listener").unwrap();
    let bipartite = build_bipartite(&db);
    assert_eq!(bipartite.participants.len(), 2);
    assert_eq!(bipartite.topic_patterns.len(), 4);
    let contracted = collapse_topics(&bipartite, TopicMatchMode::ExactIntersection);
    let g = project_participants(&contracted, TopicMatchMode::ExactIntersection);
    assert_eq!(g.edges.keys().copied().collect::<Vec<_>>(), [(talker, listener)]);

    let oracle = EdgeOracle::new(&db);
    let forward = oracle.verify(talker, listener, at()).unwrap();
    match &forward {
        EdgeStatus::Verified(w) => assert!(w.validates(
            &db.get(&talker).unwrap().permissions,
            &db.get(&listener).unwrap().permissions,
            at()
        )),
        other => panic!("expected a verified edge, got {other:?}"),
    }
    assert_eq!(oracle.verify(listener, talker, at()).unwrap(), EdgeStatus::Refuted);
    assert_eq!(oracle.solver_calls(), 2);
    assert_eq!(oracle.verify(talker, listener, at()).unwrap(), forward);
    assert_eq!(oracle.solver_calls(), 2);
    assert!(oracle.verify(Guid::MAX, talker, at()).is_err());
}

#[test]
fn empty_database_gives_empty_graph() {
    let g = heuristic_graph(&ParticipantDatabase::new(), TopicMatchMode::default());
    assert!(g.vertices.is_empty() && g.edges.is_empty());
}

#[test]
fn shared_expressions_share_a_vertex() {
    let s = generate_grid(1, 2, 1, false).unwrap();
    let mut db = scenario_db(&s);
    // A third participant publishing the same topic as cell 0,0.
    let mut extra = emit_capture(&s)[0].clone();
    extra.participant_guid = Guid::MAX;
    db.load(&[extra]).unwrap();
    let b = build_bipartite(&db);
    assert_eq!(b.participants.len(), 3);
    assert_eq!(b.topic_patterns.len(), 2);
}

#[test]
fn collapsing_components() {
    let c = collapse_topics(&patterns(&["foo/bar/pudding", "foo/bar/*", "foo/bar/test"]), TopicMatchMode::FastFnmatch);
    assert_eq!(c.topic_components.len(), 1);
    let c = collapse_topics(&patterns(&["a", "b", "c/d"]), TopicMatchMode::ExactIntersection);
    assert_eq!(c.topic_components.len(), 3);
    let tricky = patterns(&["foo/*x", "foo/a*"]);
    assert_eq!(collapse_topics(&tricky, TopicMatchMode::FastFnmatch).topic_components.len(), 2);
    assert_eq!(collapse_topics(&tricky, TopicMatchMode::ExactIntersection).topic_components.len(), 1);
}

#[test]
fn grid_projection_matches_adjacency() {
    let s = generate_grid(2, 2, 9, false).unwrap();
    assert_eq!(s.intended_adjacency.len(), 8);
    let g = heuristic_graph(&scenario_db(&s), TopicMatchMode::ExactIntersection);
    assert_eq!(g.edges.keys().copied().collect::<BTreeSet<_>>(), s.intended_adjacency);
}

#[test]
fn no_self_edges() {
    let s = generate_grid(1, 1, 0, false).unwrap();
    let mut db = scenario_db(&s);
    // Cell publishes cell/0/0; give a second document that also subscribes to it.
    let p = db.participants().next().unwrap().clone();
    let mut perms = p.permissions.clone();
    perms.grants[0].rules[0].subscribe = perms.grants[0].rules[0].publish.clone();
    let record = CaptureRecord {
        timestamp: Timestamp::from_unix(0),
        source_address: "x:1".into(),
        destination_address: "y:1".into(),
        participant_guid: Guid::MAX,
        subject_name: p.subject_name.clone(),
        permissions_document: ddsrecon::permissions::serialize_permissions(&perms),
    };
    db.load(&[record]).unwrap();
    let g = heuristic_graph(&db, TopicMatchMode::ExactIntersection);
    assert!(g.edges.keys().all(|(u, v)| u != v));
    assert_eq!(g.edges.keys().copied().collect::<Vec<_>>(), [(p.guid, Guid::MAX)]);
}

fn graph(n: usize, edges: &[(usize, usize)]) -> HeuristicGraph {
    HeuristicGraph::from_edges((0..n).map(vertex), edges.iter().map(|&(a, b)| (vertex(a), vertex(b))))
}

fn exact(edges: &[(usize, usize)]) -> ExactEdges {
    ExactEdges::new(edges.iter().map(|&(a, b)| (vertex(a), vertex(b))).collect())
}

#[test]
fn small_cuts() {
    let t = at();
    let chain = graph(3, &[(0, 1), (1, 2)]);
    let v = exact(&[(0, 1), (1, 2)]);
    let cut = min_cut_between(&chain, &v, vertex(0), vertex(2), t).unwrap();
    assert_eq!(cut.cut_nodes, BTreeSet::from([vertex(1)]));
    assert!(cut.certified);

    let direct = graph(2, &[(0, 1)]);
    let cut = min_cut_between(&direct, &exact(&[(0, 1)]), vertex(0), vertex(1), t).unwrap();
    assert_eq!(cut.outcome, CutOutcome::NoVertexCut);
    assert!(!cut.certified);

    let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
    let out = isolate_source(&star, &exact(&[(0, 1), (0, 2), (0, 3)]), vertex(0), t).unwrap();
    assert_eq!(out.cut_nodes.len(), 3);
    let star_in = graph(4, &[(1, 0), (2, 0), (3, 0)]);
    let into = isolate_target(&star_in, &exact(&[(1, 0), (2, 0), (3, 0)]), vertex(0), t).unwrap();
    assert_eq!(into.cut_nodes.len(), 3);
    assert!(isolate_source(&star_in, &exact(&[]), vertex(0), t).unwrap().cut_nodes.is_empty());
    assert!(isolate_target(&star, &exact(&[]), vertex(0), t).unwrap().cut_nodes.is_empty());

    let p = find_path(&chain, &v, vertex(1), vertex(1), t).unwrap().unwrap();
    assert_eq!((p.nodes.len(), p.edge_witnesses.len()), (1, 0));
    assert!(matches!(find_path(&chain, &v, vertex(0), vertex(9), t), Err(QueryError::UnknownVertex(_))));
}

#[test]
fn refuted_shortcut_is_avoided() {
    // 0 -> 3 looks direct but is refuted; the verified route is 0 -> 1 -> 2 -> 3.
    let g = graph(4, &[(0, 3), (0, 1), (1, 2), (2, 3)]);
    let v = exact(&[(0, 1), (1, 2), (2, 3)]);
    let p = find_path(&g, &v, vertex(0), vertex(3), at()).unwrap().unwrap();
    assert_eq!(p.nodes, [vertex(0), vertex(1), vertex(2), vertex(3)]);
    let cut = min_cut_between(&g, &v, vertex(0), vertex(3), at()).unwrap();
    assert_eq!(cut.cut_nodes.len(), 1);
}

#[test]
fn disjoint_namespaces_are_refuted() {
    let s = generate_grid(1, 2, 3, true).unwrap();
    let db = scenario_db(&s);
    let ids: Vec<_> = db.ids().collect();
    // Heuristic graph from a fabricated superset: both directions.
    let g = HeuristicGraph::from_edges(ids.clone(), [(ids[0], ids[1]), (ids[1], ids[0])]);
    let oracle = EdgeOracle::new(&db);
    for (a, b) in [(ids[0], ids[1]), (ids[1], ids[0])] {
        let found = find_path(&g, &oracle, a, b, s.reference_time).unwrap();
        assert_eq!(found.is_some(), s.intended_adjacency.contains(&(a, b)));
        if found.is_none() {
            assert_eq!(oracle.cached(a, b, s.reference_time), Some(EdgeStatus::Refuted));
        }
    }
}

#[test]
fn graph_exports() {
    let db = talker_listener();
    let mut g = heuristic_graph(&db, TopicMatchMode::ExactIntersection);
    g.verify_all(&EdgeOracle::new(&db), at()).unwrap();
    let json = g.to_json();
    assert!(json.contains("\"status\": \"VERIFIED\""), "{json}");
    assert_eq!(HeuristicGraph::from_json(&json).unwrap(), g);
    let dot = g.to_dot();
    assert!(dot.starts_with("digraph") && dot.contains("CN=talker") && dot.contains("foo/bar/"));
}

proptest! {
    #[test]
    fn queries_match_exhaustive_answers(seed in any::<u64>()) {
        let (g, verifier, truth, n) = random_case(seed);
        let t = at();
        let (src, dst) = (vertex(0), vertex(n - 1));
        let others = |skip: &[Guid]| (0..n).map(vertex).filter(|v| !skip.contains(v)).collect::<Vec<_>>();

        let path = find_path(&g, &verifier, src, dst, t).unwrap();
        prop_assert_eq!(path.as_ref().map(|p| p.nodes.len() - 1), hop_distance(&truth, src, dst));
        if let Some(p) = &path {
            for w in p.nodes.windows(2) {
                prop_assert!(truth.contains(&(w[0], w[1])));
            }
        }

        let cut = min_cut_between(&g, &verifier, src, dst, t).unwrap();
        if truth.contains(&(src, dst)) {
            prop_assert_eq!(cut.outcome, CutOutcome::NoVertexCut);
        } else {
            let brute = smallest_separator(&others(&[src, dst]), |r| !reachable(&truth, src, r).contains(&dst));
            prop_assert_eq!(Some(cut.cut_nodes.len()), brute);
            prop_assert!(!reachable(&truth, src, &cut.cut_nodes).contains(&dst));
        }

        let iso = isolate_source(&g, &verifier, src, t).unwrap();
        let brute = smallest_separator(&others(&[src]), |r| reachable(&truth, src, r).len() == 1);
        prop_assert_eq!(Some(iso.cut_nodes.len()), brute);
        prop_assert_eq!(reachable(&truth, src, &iso.cut_nodes).len(), 1);

        let reversed: BTreeSet<_> = truth.iter().map(|&(a, b)| (b, a)).collect();
        let iso = isolate_target(&g, &verifier, dst, t).unwrap();
        let brute = smallest_separator(&others(&[dst]), |r| reachable(&reversed, dst, r).len() == 1);
        prop_assert_eq!(Some(iso.cut_nodes.len()), brute);
        prop_assert!(!iso.cut_nodes.contains(&dst));
    }
}

#[test]
fn grid_queries() {
    let s = generate_grid(6, 6, 42, false).unwrap();
    let db = scenario_db(&s);
    let g = heuristic_graph(&db, TopicMatchMode::ExactIntersection);
    let oracle = EdgeOracle::new(&db);
    let (src, dst) = (db.resolve("5,0").unwrap(), db.resolve("0,3").unwrap());
    let p = find_path(&g, &oracle, src, dst, s.reference_time).unwrap().unwrap();
    assert_eq!(p.nodes.len() - 1, 8);
    let edge_node = db.resolve("2,0").unwrap();
    let iso = isolate_source(&g, &oracle, edge_node, s.reference_time).unwrap();
    assert_eq!(iso.cut_nodes.len(), g.successors(edge_node).count());
    assert_eq!(iso.cut_nodes.len(), 3);
    let corner = db.resolve("0,0").unwrap();
    assert_eq!(isolate_target(&g, &oracle, corner, s.reference_time).unwrap().cut_nodes.len(), 2);
}
