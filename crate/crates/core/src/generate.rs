//! Seeded random instances: binary trees, level-1 networks, small general
//! networks, NAP instances and the two scaling families.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ApdError, Result};
use crate::extension::TreeExtension;
use crate::maxapd::NapInstance;
use crate::network::{NetworkBuilder, NodeId, PhyloNetwork};
use crate::rational::{int, ratio, Rational};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct DraftEdge {
    tail: usize,
    head: usize,
    weight: Rational,
    prob: Rational,
}

/// Mutable edge list; leaves are named `t1, t2, ...` in node order on
/// [`Draft::build`].
#[derive(Default)]
struct Draft {
    nodes: usize,
    edges: Vec<DraftEdge>,
}

impl Draft {
    fn node(&mut self) -> usize {
        self.nodes += 1;
        self.nodes - 1
    }

    fn edge(&mut self, tail: usize, head: usize, weight: Rational, prob: Rational) -> usize {
        self.edges.push(DraftEdge {
            tail,
            head,
            weight,
            prob,
        });
        self.edges.len() - 1
    }

    /// Splits edge `e = (a, b)` into `a -> s -> b`; `s -> b` inherits the
    /// probability so that `b` stays normal.
    fn subdivide<R: Rng>(&mut self, rng: &mut R, e: usize) -> usize {
        let s = self.node();
        let b = self.edges[e].head;
        let p = std::mem::replace(&mut self.edges[e].prob, int(1));
        self.edges[e].head = s;
        let w = weight(rng);
        self.edge(s, b, w, p);
        s
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut out = vec![Vec::new(); self.nodes];
        for e in &self.edges {
            out[e.tail].push(e.head);
        }
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            for &y in &out[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    fn build(&self, prefix: &str) -> PhyloNetwork {
        let mut has_out = vec![false; self.nodes];
        for e in &self.edges {
            has_out[e.tail] = true;
        }
        let mut b = NetworkBuilder::new();
        let mut leaf = 0;
        for &internal in &has_out {
            if internal {
                b.add_node();
            } else {
                leaf += 1;
                b.add_leaf(format!("{prefix}{leaf}"));
            }
        }
        for e in &self.edges {
            b.add_edge(NodeId(e.tail), NodeId(e.head), e.weight.clone(), e.prob.clone());
        }
        b.build().expect("generated networks have unique taxa")
    }
}

fn weight<R: Rng>(rng: &mut R) -> Rational {
    int(rng.gen_range(1..=9))
}

fn probability<R: Rng>(rng: &mut R) -> Rational {
    ratio(rng.gen_range(1..=9), 10)
}

/// Random binary tree grown by splitting a uniformly chosen leaf. A planted
/// tree has a root of out-degree 1.
fn tree_draft<R: Rng>(rng: &mut R, leaves: usize, planted: bool) -> Draft {
    assert!(leaves >= 1, "a tree needs a leaf");
    let mut d = Draft::default();
    let root = d.node();
    let mut tips = Vec::new();
    if planted || leaves == 1 {
        let x = d.node();
        let w = weight(rng);
        d.edge(root, x, w, int(1));
        tips.push(x);
    } else {
        for _ in 0..2 {
            let x = d.node();
            let w = weight(rng);
            d.edge(root, x, w, int(1));
            tips.push(x);
        }
    }
    while tips.len() < leaves {
        let i = rng.gen_range(0..tips.len());
        let t = tips.swap_remove(i);
        for _ in 0..2 {
            let x = d.node();
            let w = weight(rng);
            d.edge(t, x, w, int(1));
            tips.push(x);
        }
    }
    d
}

pub fn random_tree<R: Rng>(rng: &mut R, leaves: usize, planted: bool) -> PhyloNetwork {
    tree_draft(rng, leaves, planted).build("t")
}

/// A tree with `gadgets` of its edges `a -> b` (distinct, where possible)
/// replaced by `a -> t -> r -> b` plus `t -> x -> r` and a new leaf under
/// `x`. Every blob is a single gadget.
pub fn random_level1<R: Rng>(rng: &mut R, leaves: usize, gadgets: usize) -> PhyloNetwork {
    let mut d = tree_draft(rng, leaves, false);
    let mut slots: Vec<usize> = (0..d.edges.len()).collect();
    slots.shuffle(rng);
    for &e in slots.iter().cycle().take(gadgets) {
        let t = d.subdivide(rng, e);
        // the edge t -> b is the last one; subdivide it again for r
        let lower = d.edges.len() - 1;
        let r = d.subdivide(rng, lower);
        let x = d.node();
        let leaf = d.node();
        let q = probability(rng);
        let w = weight(rng);
        d.edges[lower].prob = q.clone();
        d.edge(t, x, w, int(1));
        let w = weight(rng);
        d.edge(x, r, w, int(1) - q);
        let w = weight(rng);
        d.edge(x, leaf, w, int(1));
    }
    d.build("t")
}

/// A random binary tree with `retics` extra edges between subdivision
/// points of two distinct edges. Candidates that would close a cycle are
/// redrawn; after many failures fewer reticulations are returned.
pub fn random_network<R: Rng>(rng: &mut R, leaves: usize, retics: usize) -> PhyloNetwork {
    let mut d = tree_draft(rng, leaves.max(2), false);
    let mut added = 0;
    let mut attempts = 0;
    while added < retics && attempts < 100 * (retics + 1) {
        attempts += 1;
        let m = d.edges.len();
        let (e1, e2) = (rng.gen_range(0..m), rng.gen_range(0..m));
        if e1 == e2 {
            continue;
        }
        let a = d.edges[e1].tail;
        let dd = d.edges[e2].head;
        if d.reaches(dd, a) {
            continue;
        }
        let s = d.subdivide(rng, e1);
        let r = d.subdivide(rng, e2);
        let q = probability(rng);
        d.edges[e2].prob = q.clone();
        let w = weight(rng);
        d.edge(s, r, w, int(1) - q);
        added += 1;
    }
    d.build("t")
}

/// A random network with at most `max_nodes` nodes and at most
/// `max_retics` reticulations.
pub fn random_small_network<R: Rng>(rng: &mut R, max_nodes: usize, max_retics: usize) -> PhyloNetwork {
    assert!(max_nodes >= 3, "need room for a cherry");
    let most = max_retics.min((max_nodes - 3) / 2);
    let retics = rng.gen_range(0..=most);
    let max_leaves = (max_nodes + 1 - 2 * retics) / 2;
    let leaves = rng.gen_range(2..=max_leaves.max(2));
    random_network(rng, leaves, retics)
}

/// Like [`random_small_network`], but redrawn until every reticulation is
/// visible.
pub fn random_rv_network<R: Rng>(rng: &mut R, max_nodes: usize, max_retics: usize) -> PhyloNetwork {
    loop {
        let net = random_small_network(rng, max_nodes, max_retics);
        if net.is_reticulation_visible().unwrap_or(false) {
            return net;
        }
    }
}

/// Planted binary tree with survival probabilities in `{0.1, .., 0.9}`, a
/// random budget and a target above 1. Survival 1 is left out because the
/// reduction then drops the copy edge and the instance loses width.
pub fn random_nap<R: Rng>(rng: &mut R, leaves: usize) -> NapInstance {
    let tree = random_tree(rng, leaves, true);
    let survival: BTreeMap<String, Rational> = tree
        .leaves()
        .into_iter()
        .map(|x| {
            (
                tree.taxon(x).expect("leaf").to_string(),
                ratio(rng.gen_range(1..=9), 10),
            )
        })
        .collect();
    NapInstance {
        k: rng.gen_range(0..=leaves),
        d: ratio(rng.gen_range(11..=60), 10),
        tree,
        survival,
    }
}

/// The DP scaling family: a spine `rho -> a_1 .. a_k -> s_1 .. s_L` with a
/// leaf under each `s_j`, and a chain of reticulations
/// `s_L -> r_1 -> .. -> r_k -> end` where `r_i` also hangs from `a_i`.
/// Returned with the chain extension, whose width is `k + 1 = width`.
/// `L` is chosen so the network has about `nodes` nodes.
pub fn dp_scaling_instance(width: usize, nodes: usize) -> Result<(PhyloNetwork, TreeExtension)> {
    if width < 2 {
        return Err(ApdError::Input("the scaling family needs width >= 2".into()));
    }
    let k = width - 1;
    let spine = (nodes.saturating_sub(2 * k + 2) / 2).max(1);
    let mut b = NetworkBuilder::new();
    let half = ratio(1, 2);
    let rho = b.add_node();
    let a: Vec<NodeId> = (0..k).map(|_| b.add_node()).collect();
    let s: Vec<NodeId> = (0..spine).map(|_| b.add_node()).collect();
    let r: Vec<NodeId> = (0..k).map(|_| b.add_node()).collect();
    let l: Vec<NodeId> = (0..spine).map(|j| b.add_leaf(format!("l{j}"))).collect();
    let end = b.add_leaf("end");
    let mut parent: Vec<Option<NodeId>> = vec![None; 2 + 2 * k + 2 * spine];
    let mut prev = rho;
    for (i, &x) in a.iter().chain(&s).enumerate() {
        b.add_tree_edge(prev, x, int(1 + (i % 3) as i64));
        parent[x.0] = Some(prev);
        prev = x;
    }
    for (j, (&sj, &lj)) in s.iter().zip(&l).enumerate() {
        b.add_tree_edge(sj, lj, int(1 + (j % 2) as i64));
        parent[lj.0] = Some(sj);
    }
    for i in 0..k {
        b.add_edge(a[i], r[i], int(2), half.clone());
        b.add_edge(prev, r[i], int(1), half.clone());
        parent[r[i].0] = Some(prev);
        prev = r[i];
    }
    b.add_tree_edge(prev, end, int(3));
    parent[end.0] = Some(prev);
    let ext = TreeExtension::from_parents(parent)?;
    Ok((b.build()?, ext))
}

/// The RV scaling family: a random binary tree on `leaves` leaves where
/// `gadgets` distinct edges `a -> b` become
/// `a -> g, g -> v, g -> u, v -> r, u -> r, r -> b, u -> leaf`. The node
/// `v` is an invisible tree node, `r` is visible.
pub fn rv_scaling_instance<R: Rng>(rng: &mut R, leaves: usize, gadgets: usize) -> PhyloNetwork {
    let mut d = tree_draft(rng, leaves.max(2), false);
    let mut slots: Vec<usize> = (0..d.edges.len()).collect();
    slots.shuffle(rng);
    for &e in slots.iter().take(gadgets) {
        let g = d.subdivide(rng, e);
        let lower = d.edges.len() - 1;
        d.subdivide(rng, lower);
        // now g -> v -> b; push b under a fresh reticulation r
        let to_b = d.edges.len() - 1;
        let r = d.subdivide(rng, to_b);
        let q = probability(rng);
        d.edges[to_b].prob = q.clone();
        let u = d.node();
        let leaf = d.node();
        let w = weight(rng);
        d.edge(g, u, w, int(1));
        let w = weight(rng);
        d.edge(u, r, w, int(1) - q);
        let w = weight(rng);
        d.edge(u, leaf, w, int(1));
    }
    d.build("t")
}

/// The edge count of [`rv_scaling_instance`].
pub fn rv_scaling_edges(leaves: usize, gadgets: usize) -> usize {
    2 * leaves.max(2) - 2 + 6 * gadgets
}
