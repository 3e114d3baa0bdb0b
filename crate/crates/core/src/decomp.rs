//! APD of all taxa on general networks: switch only the invisible
//! reticulations, and handle one biconnected component at a time.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::error::{ApdError, Result};
use crate::network::{require_engine_input, EdgeId, NetworkBuilder, NodeId, PhyloNetwork};
use crate::rational::Rational;
use crate::rv::apd_rv;
use crate::switching::{
    enumerate_switchings, switching_cap_from_env, switching_count, switching_probability,
};

/// Sums `P(sigma) * APD(residue)` over the partial switchings `sigma` of
/// the invisible reticulations. Each residue keeps only the chosen in-edges
/// (with probability 1) and the nodes that still reach a leaf.
pub fn apd_by_invisible_switching(net: &PhyloNetwork) -> Result<Rational> {
    require_engine_input(net)?;
    by_invisible_switching(net, switching_cap_from_env())
}

fn by_invisible_switching(net: &PhyloNetwork, cap: u128) -> Result<Rational> {
    let invisible = net.invisible_reticulations()?;
    if invisible.is_empty() {
        return apd_rv(net);
    }
    let count = switching_count(net, &invisible);
    if count > cap {
        return Err(ApdError::Resource(format!(
            "{count} partial switchings over {} invisible reticulations exceed the cap of {cap}",
            invisible.len()
        )));
    }
    debug_assert!(invisible.iter().all(|&r| !net.visibility().unwrap().is_visible(r)));
    let mut total = Rational::zero();
    for sigma in enumerate_switchings(net, &invisible)? {
        let p = switching_probability(net, &sigma)?;
        if p.is_zero() {
            continue;
        }
        let residue = residue(net, |e| sigma.keeps(net, e), |e| sigma.choice(net.edge(e).head) == Some(e));
        let value = if residue.is_reticulation_visible()? {
            apd_rv(&residue)?
        } else {
            by_invisible_switching(&residue, cap)?
        };
        total += p * value;
    }
    Ok(total)
}

/// Keeps the edges accepted by `keep`, resets the probability of the
/// `chosen` ones to 1, and drops nodes that no longer reach a leaf.
fn residue(
    net: &PhyloNetwork,
    keep: impl Fn(EdgeId) -> bool,
    chosen: impl Fn(EdgeId) -> bool,
) -> PhyloNetwork {
    let keep_edge: Vec<bool> = net.edge_ids().map(&keep).collect();
    let mut reach = vec![false; net.node_count()];
    let mut stack: Vec<NodeId> = net.leaves();
    for &l in &stack {
        reach[l.0] = true;
    }
    while let Some(x) = stack.pop() {
        for &e in net.in_edges(x) {
            let t = net.edge(e).tail;
            if keep_edge[e.0] && !reach[t.0] {
                reach[t.0] = true;
                stack.push(t);
            }
        }
    }
    let keep_edge: Vec<bool> = net
        .edge_ids()
        .map(|e| keep_edge[e.0] && reach[net.edge(e).head.0])
        .collect();
    let mut sub = net.extract(&reach, &keep_edge);
    for e in net.edge_ids() {
        if chosen(e) {
            if let Some(ne) = sub.edge_map[e.0] {
                sub.network.override_prob(ne, Rational::one());
            }
        }
    }
    sub.network
}

/// Summary of a decomposed evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    pub value: Rational,
    /// Nontrivial biconnected components handled.
    pub blobs: usize,
    /// Largest number of partial switchings enumerated for one blob.
    pub max_switchings: u128,
}

pub fn apd_decomposed(net: &PhyloNetwork) -> Result<Rational> {
    Ok(apd_decomposed_report(net)?.value)
}

/// Repeatedly cuts off the pendant part below the root of a lowest
/// nontrivial biconnected component, evaluates it on its own, and replaces
/// it by a leaf (when its root has nothing else below it). What remains at
/// the end is a tree whose edges all reach a leaf.
pub fn apd_decomposed_report(net: &PhyloNetwork) -> Result<DecompositionReport> {
    require_engine_input(net)?;
    let cap = switching_cap_from_env();
    let blobs: Vec<_> = net
        .biconnected_components()?
        .into_iter()
        .filter(|c| !c.is_trivial())
        .collect();
    let mut removed_node = vec![false; net.node_count()];
    let mut removed_edge = vec![false; net.edge_count()];
    let mut synthetic: HashMap<NodeId, String> = HashMap::new();
    let mut total = Rational::zero();
    let mut max_switchings = 0u128;

    for (k, blob) in blobs.iter().enumerate() {
        let root = blob.root;
        let mut in_part = vec![false; net.node_count()];
        let mut part_edges = vec![false; net.edge_count()];
        in_part[root.0] = true;
        let mut stack = Vec::new();
        for &e in net.out_edges(root) {
            if blob.edges.binary_search(&e).is_ok() && !removed_edge[e.0] {
                part_edges[e.0] = true;
                let h = net.edge(e).head;
                if !in_part[h.0] {
                    in_part[h.0] = true;
                    stack.push(h);
                }
            }
        }
        while let Some(x) = stack.pop() {
            for &e in net.out_edges(x) {
                if removed_edge[e.0] {
                    continue;
                }
                part_edges[e.0] = true;
                let h = net.edge(e).head;
                if !in_part[h.0] {
                    in_part[h.0] = true;
                    stack.push(h);
                }
            }
        }
        let part = build_part(net, &in_part, &part_edges, &synthetic)?;
        let invisible = part.invisible_reticulations()?;
        debug_assert!(invisible.iter().all(|r| blob.nodes.binary_search(&net_node(&part, *r)).is_ok()));
        max_switchings = max_switchings.max(switching_count(&part, &invisible));
        total += by_invisible_switching(&part, cap)?;

        for v in net.nodes().filter(|v| in_part[v.0] && *v != root) {
            removed_node[v.0] = true;
        }
        for e in net.edge_ids().filter(|e| part_edges[e.0]) {
            removed_edge[e.0] = true;
        }
        let still_internal = net.out_edges(root).iter().any(|e| !removed_edge[e.0]);
        if !still_internal && net.taxon(root).is_none() {
            synthetic.insert(root, format!("__part{k}"));
        }
    }
    for e in net.edge_ids().filter(|e| !removed_edge[e.0]) {
        debug_assert!(!removed_node[net.edge(e).head.0]);
        total += &net.edge(e).weight;
    }
    Ok(DecompositionReport {
        value: total,
        blobs: blobs.len(),
        max_switchings,
    })
}

/// Node of `net` that a node of a part was copied from.
fn net_node(part: &PhyloNetwork, v: NodeId) -> NodeId {
    part.name(v)
        .and_then(|n| n.strip_prefix("__n"))
        .and_then(|i| i.parse().ok())
        .map(NodeId)
        .expect("parts name their nodes after the original ids")
}

fn build_part(
    net: &PhyloNetwork,
    keep_node: &[bool],
    keep_edge: &[bool],
    synthetic: &HashMap<NodeId, String>,
) -> Result<PhyloNetwork> {
    let mut b = NetworkBuilder::new();
    let mut map = vec![None; net.node_count()];
    for v in net.nodes().filter(|v| keep_node[v.0]) {
        let nv = b.add_node();
        b.set_name(nv, format!("__n{}", v.0));
        if let Some(t) = net.taxon(v) {
            b.set_taxon(nv, t);
        } else if let Some(t) = synthetic.get(&v) {
            b.set_taxon(nv, t.clone());
        }
        map[v.0] = Some(nv);
    }
    for e in net.edge_ids().filter(|e| keep_edge[e.0]) {
        let edge = net.edge(e);
        if let (Some(t), Some(h)) = (map[edge.tail.0], map[edge.head.0]) {
            b.add_edge(t, h, edge.weight.clone(), edge.prob.clone());
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TaxonSet;
    use crate::rational::{int, ratio};
    use crate::samples::{cherry_with_stem, diamond, diamond_chain, figure_one, invisible_tree_node};
    use crate::switching::{apd_all_bruteforce, apd_bruteforce};

    #[test]
    fn figure_one_by_invisible_switching() {
        let net = figure_one();
        assert_eq!(apd_by_invisible_switching(&net).unwrap(), ratio(271, 10));
    }

    #[test]
    fn figure_one_decomposed() {
        let net = figure_one();
        let report = apd_decomposed_report(&net).unwrap();
        assert_eq!(report.value, ratio(271, 10));
        assert_eq!(report.blobs, 1);
        assert_eq!(report.max_switchings, 2);
    }

    #[test]
    fn visible_input_is_a_single_term() {
        let net = invisible_tree_node();
        assert_eq!(
            apd_by_invisible_switching(&net).unwrap(),
            crate::rv::apd_rv(&net).unwrap()
        );
    }

    #[test]
    fn trees() {
        let net = cherry_with_stem();
        assert_eq!(apd_by_invisible_switching(&net).unwrap(), int(6));
        assert_eq!(apd_decomposed(&net).unwrap(), int(6));
    }

    #[test]
    fn chain_of_diamonds() {
        let net = diamond_chain();
        let brute = apd_all_bruteforce(&net).unwrap();
        let report = apd_decomposed_report(&net).unwrap();
        assert_eq!(report.value, brute);
        assert_eq!(report.blobs, 2);
    }

    #[test]
    fn diamond_matches_oracle() {
        let net = diamond(ratio(2, 7));
        let all = TaxonSet::all(&net);
        assert_eq!(apd_decomposed(&net).unwrap(), apd_bruteforce(&net, &all).unwrap());
    }

    #[test]
    fn blobs_sharing_a_root() {
        // Two diamonds hanging from the same node.
        let mut b = NetworkBuilder::new();
        let rho = b.add_node();
        for i in 0..2 {
            let x = b.add_node();
            let y = b.add_node();
            let r = b.add_node();
            let l = b.add_leaf(format!("l{i}"));
            let lx = b.add_leaf(format!("lx{i}"));
            b.add_tree_edge(rho, x, int(1 + i));
            b.add_tree_edge(rho, y, int(2));
            b.add_edge(x, r, int(3), ratio(1, 3));
            b.add_edge(y, r, int(4), ratio(2, 3));
            b.add_tree_edge(r, l, int(5));
            b.add_tree_edge(x, lx, int(1));
        }
        let net = b.build().unwrap();
        let report = apd_decomposed_report(&net).unwrap();
        assert_eq!(report.blobs, 2);
        assert_eq!(report.value, apd_all_bruteforce(&net).unwrap());
    }
}
