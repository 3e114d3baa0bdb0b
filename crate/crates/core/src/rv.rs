//! APD of all taxa on reticulation-visible networks from closed-form edge
//! probabilities.
//!
//! If the head `v` of `uv` is visible, `uv` reaches a leaf exactly when it
//! is kept, so `gamma(uv) = p(uv)`. Otherwise `v` is a tree node all of
//! whose tree-paths end in (visible) reticulations, and `uv` reaches a leaf
//! exactly when one of those reticulations picks an in-edge lying on such a
//! path. Reticulations switch independently, hence
//! `gamma(uv) = 1 - prod_r (1 - sum of p over the in-edges of r reachable
//! from v along tree-paths)`.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::error::{ApdError, Result};
use crate::network::{require_engine_input, EdgeId, NodeId, PhyloNetwork, Visibility};
use crate::rational::Rational;

fn check_input(net: &PhyloNetwork) -> Result<(Visibility, u64)> {
    require_engine_input(net)?;
    let (vis, ops) = net.visibility_counted()?;
    if let Some(r) = net.reticulations().into_iter().find(|&r| !vis.is_visible(r)) {
        return Err(ApdError::InvisibleReticulation(r));
    }
    Ok((vis, ops))
}

/// `r -> sum of p(qr)` over tree-path edges, with the product of
/// `1 - sum` kept as a count of zero factors times the other factors.
struct ReachMap {
    sums: HashMap<NodeId, Rational>,
    zeros: usize,
    product: Rational,
}

impl ReachMap {
    fn new() -> Self {
        ReachMap {
            sums: HashMap::new(),
            zeros: 0,
            product: Rational::one(),
        }
    }

    fn add(&mut self, r: NodeId, p: &Rational, ops: &mut u64) {
        *ops += 1;
        let slot = self.sums.entry(r).or_insert_with(Rational::zero);
        let old = Rational::one() - &*slot;
        if old.is_zero() {
            self.zeros -= 1;
        } else if !slot.is_zero() {
            self.product /= &old;
        }
        *slot += p;
        let new = Rational::one() - &*slot;
        if new.is_zero() {
            self.zeros += 1;
        } else {
            self.product *= &new;
        }
    }

    fn absorb(mut self, mut other: ReachMap, ops: &mut u64) -> ReachMap {
        if self.sums.len() < other.sums.len() {
            std::mem::swap(&mut self, &mut other);
        }
        for (r, p) in other.sums {
            self.add(r, &p, ops);
        }
        self
    }

    fn gamma(&self) -> Rational {
        if self.zeros > 0 {
            Rational::one()
        } else {
            Rational::one() - &self.product
        }
    }
}

/// Edge probabilities of every edge, in one bottom-up sweep, with the
/// number of elementary operations spent (visibility included).
pub fn gammas_rv_counted(net: &PhyloNetwork) -> Result<(Vec<Rational>, u64)> {
    let (vis, mut ops) = check_input(net)?;
    let order = net.require_topological_order()?;
    ops += (net.node_count() + net.edge_count()) as u64;
    let mut maps: Vec<Option<ReachMap>> = (0..net.node_count()).map(|_| None).collect();
    let mut node_gamma: Vec<Option<Rational>> = vec![None; net.node_count()];
    for &v in order.iter().rev() {
        ops += 1;
        if vis.is_visible(v) || net.is_reticulation(v) {
            continue;
        }
        let mut map = ReachMap::new();
        for &e in net.out_edges(v) {
            ops += 1;
            let c = net.edge(e).head;
            if net.is_reticulation(c) {
                map.add(c, &net.edge(e).prob, &mut ops);
            } else {
                let below = maps[c.0]
                    .take()
                    .expect("tree children of an invisible node are invisible");
                map = map.absorb(below, &mut ops);
            }
        }
        node_gamma[v.0] = Some(map.gamma());
        maps[v.0] = Some(map);
    }
    let gammas = net
        .edge_ids()
        .map(|e| {
            let edge = net.edge(e);
            node_gamma[edge.head.0]
                .clone()
                .unwrap_or_else(|| edge.prob.clone())
        })
        .collect();
    ops += net.edge_count() as u64;
    Ok((gammas, ops))
}

pub fn gammas_rv(net: &PhyloNetwork) -> Result<Vec<Rational>> {
    Ok(gammas_rv_counted(net)?.0)
}

/// APD of all taxa and the operation count of the sweep.
pub fn apd_rv_counted(net: &PhyloNetwork) -> Result<(Rational, u64)> {
    let (gammas, mut ops) = gammas_rv_counted(net)?;
    let mut total = Rational::zero();
    for (e, g) in net.edges().iter().zip(&gammas) {
        ops += 1;
        if !e.weight.is_zero() && !g.is_zero() {
            total += &e.weight * g;
        }
    }
    Ok((total, ops))
}

pub fn apd_rv(net: &PhyloNetwork) -> Result<Rational> {
    Ok(apd_rv_counted(net)?.0)
}

/// Closed form for a single edge, evaluated by an explicit search over the
/// tree-paths leaving its head.
pub fn gamma_rv(net: &PhyloNetwork, e: EdgeId) -> Result<Rational> {
    if e.0 >= net.edge_count() {
        return Err(ApdError::UnknownEdge(e));
    }
    let (vis, _) = check_input(net)?;
    Ok(gamma_closed_form(net, &vis, e))
}

fn gamma_closed_form(net: &PhyloNetwork, vis: &Visibility, e: EdgeId) -> Rational {
    let edge = net.edge(e);
    let v = edge.head;
    if vis.is_visible(v) {
        return edge.prob.clone();
    }
    let mut sums: HashMap<NodeId, Rational> = HashMap::new();
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        for &out in net.out_edges(x) {
            let c = net.edge(out).head;
            if net.is_reticulation(c) {
                *sums.entry(c).or_insert_with(Rational::zero) += &net.edge(out).prob;
            } else {
                stack.push(c);
            }
        }
    }
    let miss: Rational = sums
        .values()
        .map(|s| Rational::one() - s)
        .product();
    Rational::one() - miss
}

/// Slow reference: the closed form edge by edge.
pub fn apd_rv_reference(net: &PhyloNetwork) -> Result<Rational> {
    let (vis, _) = check_input(net)?;
    Ok(net
        .edge_ids()
        .map(|e| &net.edge(e).weight * gamma_closed_form(net, &vis, e))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TaxonSet;
    use crate::rational::{int, ratio};
    use crate::samples::{cherry_with_stem, diamond, figure_one, invisible_tree_node};
    use crate::switching::{apd_all_bruteforce, gamma_bruteforce, SwitchingMask};

    fn edge(net: &PhyloNetwork, t: &str, h: &str) -> EdgeId {
        net.find_edge(net.node_by_label(t).unwrap(), net.node_by_label(h).unwrap())
            .unwrap()
    }

    #[test]
    fn visible_head() {
        let net = diamond(ratio(3, 10));
        assert_eq!(gamma_rv(&net, edge(&net, "x", "r")).unwrap(), ratio(3, 10));
        assert_eq!(apd_rv(&net).unwrap(), apd_all_bruteforce(&net).unwrap());
    }

    #[test]
    fn invisible_tree_head() {
        let net = invisible_tree_node();
        let e = edge(&net, "rho", "v");
        assert_eq!(gamma_rv(&net, e).unwrap(), ratio(3, 10));
        let all = TaxonSet::all(&net);
        assert_eq!(gamma_bruteforce(&net, e, &all).unwrap(), ratio(3, 10));
        assert_eq!(gammas_rv(&net).unwrap()[e.0], ratio(3, 10));
        assert_eq!(apd_rv(&net).unwrap(), apd_all_bruteforce(&net).unwrap());
        assert_eq!(apd_rv_reference(&net).unwrap(), apd_rv(&net).unwrap());
    }

    #[test]
    fn leaf_edges_are_certain() {
        let net = invisible_tree_node();
        let e = edge(&net, "r", "l");
        assert_eq!(gamma_rv(&net, e).unwrap(), int(1));
    }

    #[test]
    fn tree_total_weight() {
        assert_eq!(apd_rv(&cherry_with_stem()).unwrap(), int(6));
    }

    #[test]
    fn refuses_invisible_reticulation() {
        let net = figure_one();
        let r = net.node_by_label("r").unwrap();
        assert!(matches!(apd_rv(&net), Err(ApdError::InvisibleReticulation(x)) if x == r));
    }

    #[test]
    fn figure_one_after_switching_r() {
        let net = figure_one();
        let ur = edge(&net, "u", "r");
        let vr = edge(&net, "v", "r");
        let keep: Vec<bool> = net.edge_ids().map(|e| e != vr).collect();
        let alive = vec![true; net.node_count()];
        let mut sub = net.extract(&alive, &keep).network;
        let new_ur = sub.find_edge(sub.node_by_label("u").unwrap(), sub.node_by_label("r").unwrap()).unwrap();
        sub.override_prob(new_ur, int(1));
        let _ = ur;
        assert!(sub.is_reticulation_visible().unwrap());
        let mask = SwitchingMask::new();
        let _ = mask;
        assert_eq!(apd_rv(&sub).unwrap(), apd_all_bruteforce(&sub).unwrap());
    }

    #[test]
    fn shared_reticulation_below_two_paths() {
        use crate::network::NetworkBuilder;
        // v -> a -> r and v -> b -> r: both in-edges of r sit below v.
        let mut b = NetworkBuilder::new();
        let rho = b.add_node();
        let v = b.add_node();
        let a = b.add_node();
        let bb = b.add_node();
        let w = b.add_node();
        let r = b.add_node();
        let l = b.add_leaf("l");
        let lw = b.add_leaf("lw");
        b.add_tree_edge(rho, v, int(1));
        b.add_tree_edge(rho, w, int(1));
        b.add_tree_edge(v, a, int(1));
        b.add_tree_edge(v, bb, int(1));
        b.add_edge(a, r, int(1), ratio(1, 5));
        b.add_edge(bb, r, int(1), ratio(3, 10));
        b.add_edge(w, r, int(1), ratio(1, 2));
        b.add_tree_edge(r, l, int(1));
        b.add_tree_edge(w, lw, int(1));
        let net = b.build().unwrap();
        let g = gammas_rv(&net).unwrap();
        let rv = net.find_edge(rho, v).unwrap();
        assert_eq!(g[rv.0], ratio(1, 2));
        assert_eq!(apd_rv(&net).unwrap(), apd_all_bruteforce(&net).unwrap());
    }
}
