//! Randomized invariants over generated networks.

use apdkit::decomp::{apd_by_invisible_switching, apd_decomposed};
use apdkit::dp::{compute_tables, run_dp, run_dp_f64, DpTables};
use apdkit::extension::{scanwidth_exact, scanwidth_heuristic};
use apdkit::generate::{random_rv_network, random_small_network, random_tree, seeded};
use apdkit::maxapd::{max_apd_exact, max_apd_greedy};
use apdkit::network::{NetworkBuilder, NodeId, PhyloNetwork, TaxonSet};
use apdkit::newick::{emit_enewick, emit_json, parse_enewick, parse_json, structural_signature};
use apdkit::rational::{int, to_f64, Rational};
use apdkit::rv::{apd_rv, gamma_rv};
use apdkit::switching::{
    apd_all_bruteforce, apd_by_partition, apd_bruteforce, enumerate_switchings,
    gamma_bruteforce, switching_probability,
};
use apdkit::{apd, Engine, TreeExtension};
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn small(seed: u64) -> (PhyloNetwork, ChaCha8Rng) {
    let mut rng = seeded(seed);
    let net = random_small_network(&mut rng, 14, 4);
    (net, rng)
}

fn random_taxa(rng: &mut ChaCha8Rng, net: &PhyloNetwork) -> TaxonSet {
    net.leaves().into_iter().filter(|_| rng.gen_bool(0.5)).collect()
}

fn random_extension(rng: &mut ChaCha8Rng, net: &PhyloNetwork) -> TreeExtension {
    let mut indeg: Vec<usize> = net.nodes().map(|v| net.in_degree(v)).collect();
    let mut ready: Vec<NodeId> = net.nodes().filter(|v| indeg[v.0] == 0).collect();
    let mut order = Vec::new();
    while !ready.is_empty() {
        ready.shuffle(rng);
        let v = ready.pop().unwrap();
        order.push(v);
        for c in net.children(v) {
            indeg[c.0] -= 1;
            if indeg[c.0] == 0 {
                ready.push(c);
            }
        }
    }
    TreeExtension::from_topological_order(net, &order).unwrap()
}

/// Splits `net` at `top`: the part below `top` rooted there, and the rest
/// with `top` turned into a leaf named `__cut`.
fn split_at(net: &PhyloNetwork, below: &[bool], top: NodeId) -> (PhyloNetwork, PhyloNetwork) {
    let mut parts = (NetworkBuilder::new(), NetworkBuilder::new());
    let mut ids = vec![(None, None); net.node_count()];
    for v in net.nodes() {
        let make = |b: &mut NetworkBuilder, leaf_name: Option<String>| match leaf_name {
            Some(t) => b.add_leaf(t),
            None => b.add_node(),
        };
        let taxon = net.taxon(v).map(str::to_string);
        if below[v.0] {
            ids[v.0].0 = Some(make(&mut parts.0, taxon.clone()));
        }
        if v == top {
            ids[v.0].1 = Some(parts.1.add_leaf("__cut"));
        } else if !below[v.0] {
            ids[v.0].1 = Some(make(&mut parts.1, taxon));
        }
    }
    for e in net.edges() {
        if below[e.tail.0] {
            let (t, h) = (ids[e.tail.0].0.unwrap(), ids[e.head.0].0.unwrap());
            parts.0.add_edge(t, h, e.weight.clone(), e.prob.clone());
        } else {
            let (t, h) = (ids[e.tail.0].1.unwrap(), ids[e.head.0].1.unwrap());
            parts.1.add_edge(t, h, e.weight.clone(), e.prob.clone());
        }
    }
    (parts.0.build().unwrap(), parts.1.build().unwrap())
}

/// Nodes reachable from `v`, if no edge enters that set from outside
/// other than into `v` itself.
fn closed_below(net: &PhyloNetwork, v: NodeId) -> Option<Vec<bool>> {
    let mut below = vec![false; net.node_count()];
    below[v.0] = true;
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        for c in net.children(x) {
            if !below[c.0] {
                below[c.0] = true;
                stack.push(c);
            }
        }
    }
    let closed = net
        .edges()
        .iter()
        .all(|e| !below[e.head.0] || e.head == v || below[e.tail.0]);
    closed.then_some(below)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn switching_probabilities_sum_to_one(seed in any::<u64>()) {
        let (net, _) = small(seed);
        let total: Rational = enumerate_switchings(&net, &net.reticulations())
            .unwrap()
            .map(|s| switching_probability(&net, &s).unwrap())
            .sum();
        prop_assert_eq!(total, int(1));
    }

    #[test]
    fn apd_is_weighted_gamma_sum(seed in any::<u64>()) {
        let (net, mut rng) = small(seed);
        let z = random_taxa(&mut rng, &net);
        let by_gamma: Rational = net
            .edge_ids()
            .map(|e| &net.edge(e).weight * gamma_bruteforce(&net, e, &z).unwrap())
            .sum();
        prop_assert_eq!(apd_bruteforce(&net, &z).unwrap(), by_gamma);
    }

    #[test]
    fn apd_is_monotone(seed in any::<u64>()) {
        let (net, mut rng) = small(seed);
        let z = random_taxa(&mut rng, &net);
        let base = apd_bruteforce(&net, &z).unwrap();
        for x in net.leaves() {
            let mut bigger = z.clone();
            bigger.insert(x);
            prop_assert!(apd_bruteforce(&net, &bigger).unwrap() >= base);
        }
    }

    #[test]
    fn partial_switching_sums(seed in any::<u64>()) {
        let (net, mut rng) = small(seed);
        let z = random_taxa(&mut rng, &net);
        let scope: Vec<NodeId> = net
            .reticulations()
            .into_iter()
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        prop_assert_eq!(
            apd_by_partition(&net, &scope, &z).unwrap(),
            apd_bruteforce(&net, &z).unwrap()
        );
    }

    #[test]
    fn dp_tables_are_normalized(seed in any::<u64>()) {
        let (net, mut rng) = small(seed);
        let ext = random_extension(&mut rng, &net);
        let tables: DpTables<Rational> = compute_tables(&net, &ext).unwrap();
        for v in net.nodes() {
            let total: Rational = tables.p[v.0].iter().sum();
            prop_assert_eq!(total, int(1), "node {}", net.label(v));
            for (p, d) in tables.p[v.0].iter().zip(&tables.d[v.0]) {
                prop_assert!(!p.is_zero() || d.is_zero());
            }
        }
        prop_assert_eq!(tables.apd(), apd_all_bruteforce(&net).unwrap());
    }

    #[test]
    fn float_dp_tracks_exact(seed in any::<u64>()) {
        let (net, _) = small(seed);
        let (ext, _) = scanwidth_heuristic(&net).unwrap();
        let exact = to_f64(&run_dp(&net, &ext).unwrap());
        let float = run_dp_f64(&net, &ext).unwrap();
        prop_assert!((exact - float).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn bags_follow_extension_paths(seed in any::<u64>()) {
        let (net, mut rng) = small(seed);
        let ext = random_extension(&mut rng, &net);
        let bags = ext.bags(&net).unwrap();
        for e in net.edge_ids() {
            let (u, w) = (net.edge(e).tail, net.edge(e).head);
            for x in net.nodes() {
                let on_path = ext.is_ancestor_or_self(x, w) && ext.is_proper_ancestor(u, x);
                prop_assert_eq!(bags[x.0].contains(&e), on_path);
            }
        }
        let (_, exact) = scanwidth_exact(&net, 64).unwrap();
        prop_assert!(ext.width(&net).unwrap() >= exact);
    }

    #[test]
    fn trees_have_level_zero(seed in any::<u64>()) {
        let (net, _) = small(seed);
        let level = net.level().unwrap();
        prop_assert_eq!(level == 0, net.reticulations().is_empty());
        prop_assert_eq!(level == 0, net.is_tree());
    }

    #[test]
    fn inducing_all_taxa_is_identity(seed in any::<u64>()) {
        let (net, _) = small(seed);
        let induced = net.induce(&TaxonSet::all(&net)).unwrap();
        prop_assert!(!induced.lost_in_edge);
        prop_assert_eq!(induced.network.node_count(), net.node_count());
        prop_assert_eq!(induced.network.edge_count(), net.edge_count());
        prop_assert_eq!(
            structural_signature(&induced.network).unwrap(),
            structural_signature(&net).unwrap()
        );
    }

    #[test]
    fn blobs_partition_edges(seed in any::<u64>()) {
        let (net, _) = small(seed);
        let mut seen = vec![0usize; net.edge_count()];
        for c in net.biconnected_components().unwrap() {
            for e in c.edges {
                seen[e.0] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn formats_round_trip(seed in any::<u64>()) {
        let (net, _) = small(seed);
        let sig = structural_signature(&net).unwrap();
        let text = emit_enewick(&net).unwrap();
        let back = parse_enewick(&text).unwrap();
        prop_assert_eq!(back.edge_count(), net.edge_count());
        prop_assert_eq!(structural_signature(&back).unwrap(), sig.clone());
        let back = parse_json(&emit_json(&net)).unwrap();
        prop_assert_eq!(back.edge_count(), net.edge_count());
        prop_assert_eq!(structural_signature(&back).unwrap(), sig);
    }

    #[test]
    fn engines_agree(seed in any::<u64>()) {
        let (net, mut rng) = small(seed);
        let z = random_taxa(&mut rng, &net);
        let want = apd_bruteforce(&net, &z).unwrap();
        for engine in [Engine::Auto, Engine::SwDp, Engine::Decomp] {
            prop_assert_eq!(&apd(&net, &z, engine, None).unwrap().0, &want, "{:?}", engine);
        }
    }

    #[test]
    fn decomposition_matches_enumeration(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let net = random_small_network(&mut rng, 16, 5);
        let brute = apd_all_bruteforce(&net).unwrap();
        prop_assert_eq!(apd_decomposed(&net).unwrap(), brute.clone());
        prop_assert_eq!(apd_by_invisible_switching(&net).unwrap(), brute);
    }

    #[test]
    fn rv_engine_on_visible_networks(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let net = random_rv_network(&mut rng, 14, 4);
        prop_assert_eq!(apd_rv(&net).unwrap(), apd_all_bruteforce(&net).unwrap());
        // dropping taxa can hide a reticulation, which the engine refuses
        let z = random_taxa(&mut rng, &net);
        let visible = z.is_empty()
            || net.induce(&z).unwrap().network.is_reticulation_visible().unwrap();
        if visible {
            prop_assert_eq!(
                apd(&net, &z, Engine::Rv, None).unwrap().0,
                apd_bruteforce(&net, &z).unwrap()
            );
        }
        let bridges: Vec<bool> = {
            let mut b = vec![false; net.edge_count()];
            for c in net.biconnected_components().unwrap() {
                if c.is_trivial() {
                    b[c.edges[0].0] = true;
                }
            }
            b
        };
        for e in net.edge_ids() {
            let g = gamma_rv(&net, e).unwrap();
            prop_assert!(g >= int(0) && g <= int(1));
            if bridges[e.0] {
                prop_assert_eq!(g, int(1));
            }
        }
    }

    #[test]
    fn pendant_part_splits_off(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let net = random_small_network(&mut rng, 16, 4);
        let root = net.root().unwrap();
        let cuts: Vec<(NodeId, Vec<bool>)> = net
            .nodes()
            .filter(|&v| v != root && !net.is_leaf(v))
            .filter_map(|v| closed_below(&net, v).map(|b| (v, b)))
            .collect();
        prop_assume!(!cuts.is_empty());
        let (top, below) = &cuts[rng.gen_range(0..cuts.len())];
        let (lower, upper) = split_at(&net, below, *top);
        prop_assert_eq!(
            apd_all_bruteforce(&net).unwrap(),
            apd_all_bruteforce(&lower).unwrap() + apd_all_bruteforce(&upper).unwrap()
        );
    }

    #[test]
    fn greedy_is_optimal_on_trees(seed in any::<u64>(), leaves in 2usize..9) {
        let mut rng = seeded(seed);
        let planted = rng.gen_bool(0.5);
        let tree = random_tree(&mut rng, leaves, planted);
        for k in 0..=leaves {
            let (_, exact) = max_apd_exact(&tree, k, Engine::Auto).unwrap();
            let (_, greedy) = max_apd_greedy(&tree, k, Engine::Auto).unwrap();
            prop_assert_eq!(greedy, exact, "k = {}", k);
        }
    }

    #[test]
    fn maximizer_engines_agree(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let net = random_small_network(&mut rng, 12, 3);
        let k = rng.gen_range(0..=net.leaves().len());
        let want = max_apd_exact(&net, k, Engine::Brute).unwrap();
        for engine in [Engine::SwDp, Engine::Decomp] {
            prop_assert_eq!(&max_apd_exact(&net, k, engine).unwrap(), &want, "{:?}", engine);
        }
    }
}
