//! Max-APD at desk scale, expected surviving diversity on trees, and the
//! reduction that turns a tree instance with survival probabilities into a
//! binary Max-APD instance of scanwidth 3.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::engine::{apd, Engine};
use crate::error::{ApdError, Result};
use crate::extension::TreeExtension;
use crate::network::{NetworkBuilder, NodeId, PhyloNetwork, TaxonSet};
use crate::rational::{exact_literal, Rational};

/// Cap on the number of subsets [`max_apd_exact`] evaluates.
pub const MAX_SUBSETS: u128 = 1 << 22;

/// A tree with per-taxon survival probabilities, a budget `k` and a
/// diversity target `d`.
#[derive(Debug, Clone)]
pub struct NapInstance {
    pub tree: PhyloNetwork,
    /// Survival probability per taxon name, in `(0, 1]`.
    pub survival: BTreeMap<String, Rational>,
    pub k: usize,
    pub d: Rational,
}

impl NapInstance {
    /// Requires a binary tree (root out-degree 1 or 2, other internal
    /// nodes out-degree 2) and a survival probability for every taxon.
    pub fn check(&self) -> Result<()> {
        let t = &self.tree;
        t.require_valid()?;
        if !t.is_tree() {
            return Err(ApdError::Input("the instance network must be a tree".into()));
        }
        let root = t.require_root()?;
        for v in t.nodes() {
            let out = t.out_degree(v);
            let ok = t.is_leaf(v) || out == 2 || (v == root && out == 1);
            if !ok {
                return Err(ApdError::Input(format!(
                    "tree is not binary at {} (out-degree {out})",
                    t.label(v)
                )));
            }
        }
        for x in t.leaves() {
            let name = t.taxon(x).expect("leaves carry taxa");
            match self.survival.get(name) {
                None => {
                    return Err(ApdError::Input(format!("no survival probability for {name}")))
                }
                Some(p) if *p <= Rational::zero() || *p > Rational::one() => {
                    return Err(ApdError::Input(format!(
                        "survival probability of {name} outside (0,1]"
                    )))
                }
                Some(_) => {}
            }
        }
        if self.k > t.leaves().len() {
            return Err(ApdError::Input("k exceeds the number of taxa".into()));
        }
        Ok(())
    }
}

/// Expected diversity of the edges above surviving members of `s`.
pub fn epd(nap: &NapInstance, s: &TaxonSet) -> Result<Rational> {
    let t = &nap.tree;
    let order = t.require_topological_order()?;
    // miss[v] = probability that no member of s below v survives
    let mut miss = vec![Rational::one(); t.node_count()];
    for &x in s.iter() {
        t.check_node(x)?;
        let name = t
            .taxon(x)
            .ok_or_else(|| ApdError::Input(format!("{} is not a taxon", t.label(x))))?;
        let p = nap
            .survival
            .get(name)
            .ok_or_else(|| ApdError::Input(format!("no survival probability for {name}")))?;
        miss[x.0] = Rational::one() - p;
    }
    for &v in order.iter().rev() {
        if !t.is_leaf(v) {
            miss[v.0] = t.children(v).map(|c| miss[c.0].clone()).product();
        }
    }
    Ok(t
        .edges()
        .iter()
        .map(|e| &e.weight * (Rational::one() - &miss[e.head.0]))
        .sum())
}

fn sorted_names(net: &PhyloNetwork, set: &TaxonSet) -> Vec<String> {
    set.names(net)
}

/// Prefers the larger value, then the lexicographically smaller sorted
/// list of taxon names.
fn better(net: &PhyloNetwork, a: &(TaxonSet, Rational), b: &(TaxonSet, Rational)) -> bool {
    match a.1.cmp(&b.1) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => sorted_names(net, &a.0) < sorted_names(net, &b.0),
    }
}

fn binomial_sum(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    total
}

/// Exhaustive Max-APD over every set of at most `k` taxa.
pub fn max_apd_exact(net: &PhyloNetwork, k: usize, engine: Engine) -> Result<(TaxonSet, Rational)> {
    net.require_valid()?;
    let leaves = net.leaves();
    if k > leaves.len() {
        return Err(ApdError::Input(format!(
            "k = {k} exceeds the {} taxa",
            leaves.len()
        )));
    }
    let count = binomial_sum(leaves.len(), k);
    if count > MAX_SUBSETS {
        return Err(ApdError::Resource(format!(
            "{count} subsets exceed the cap of {MAX_SUBSETS}"
        )));
    }
    let mut subsets: Vec<TaxonSet> = Vec::with_capacity(count as usize);
    let mut current: Vec<NodeId> = Vec::new();
    fn rec(leaves: &[NodeId], start: usize, k: usize, cur: &mut Vec<NodeId>, out: &mut Vec<TaxonSet>) {
        out.push(cur.iter().copied().collect());
        if cur.len() == k {
            return;
        }
        for i in start..leaves.len() {
            cur.push(leaves[i]);
            rec(leaves, i + 1, k, cur, out);
            cur.pop();
        }
    }
    rec(&leaves, 0, k, &mut current, &mut subsets);
    let scored: Vec<Result<(TaxonSet, Rational)>> = subsets
        .into_par_iter()
        .map(|s| apd(net, &s, engine, None).map(|(v, _)| (s, v)))
        .collect();
    let mut best: Option<(TaxonSet, Rational)> = None;
    for item in scored {
        let item = item?;
        if best.as_ref().is_none_or(|b| better(net, &item, b)) {
            best = Some(item);
        }
    }
    Ok(best.expect("the empty set is always a candidate"))
}

/// Adds, `k` times, the taxon with the largest marginal gain (ties: the
/// smallest name).
pub fn max_apd_greedy(net: &PhyloNetwork, k: usize, engine: Engine) -> Result<(TaxonSet, Rational)> {
    net.require_valid()?;
    let leaves = net.leaves();
    if k > leaves.len() {
        return Err(ApdError::Input(format!(
            "k = {k} exceeds the {} taxa",
            leaves.len()
        )));
    }
    let mut cache: HashMap<TaxonSet, Rational> = HashMap::new();
    let mut chosen = TaxonSet::new();
    let mut value = Rational::zero();
    for _ in 0..k {
        let mut best: Option<(NodeId, Rational)> = None;
        for &x in &leaves {
            if chosen.contains(x) {
                continue;
            }
            let mut candidate = chosen.clone();
            candidate.insert(x);
            let v = match cache.get(&candidate) {
                Some(v) => v.clone(),
                None => {
                    let v = apd(net, &candidate, engine, None)?.0;
                    cache.insert(candidate, v.clone());
                    v
                }
            };
            let replace = match &best {
                None => true,
                Some((bx, bv)) => v > *bv || (v == *bv && net.label(x) < net.label(*bx)),
            };
            if replace {
                best = Some((x, v));
            }
        }
        let (x, v) = best.expect("k does not exceed the taxa");
        chosen.insert(x);
        value = v;
    }
    Ok((chosen, value))
}

/// The Max-APD instance built from a [`NapInstance`].
#[derive(Debug, Clone)]
pub struct HardnessInstance {
    pub network: PhyloNetwork,
    pub k: usize,
    pub d: Rational,
    /// Total edge weight of the source tree.
    pub m: Rational,
    /// Width-3 extension: the source tree with every edge subdivided by
    /// the copy of its head, plus the gadget nodes.
    pub extension: TreeExtension,
    /// Per source taxon `x`: the nodes `(x', alpha, beta, gamma, delta)`.
    pub gadgets: BTreeMap<String, Gadget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gadget {
    pub x: NodeId,
    pub x_copy: NodeId,
    pub alpha: NodeId,
    pub beta: NodeId,
    pub gamma: NodeId,
    pub delta: NodeId,
}

impl HardnessInstance {
    /// The taxon set `{delta_x : x in s} + {beta_x : every x}` matching a
    /// set `s` of source taxa.
    pub fn lift(&self, names: &[String]) -> Result<TaxonSet> {
        let mut out = TaxonSet::new();
        for g in self.gadgets.values() {
            out.insert(g.beta);
        }
        for n in names {
            let g = self
                .gadgets
                .get(n)
                .ok_or_else(|| ApdError::UnknownTaxon(n.clone()))?;
            out.insert(g.delta);
        }
        Ok(out)
    }

    /// `k'`, `D'`, `M` and the source instance, as JSON.
    pub fn sidecar(&self, nap: &NapInstance) -> Value {
        let survival: serde_json::Map<String, Value> = nap
            .survival
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(exact_literal(v))))
            .collect();
        json!({
            "k_prime": self.k,
            "d_prime": exact_literal(&self.d),
            "m": exact_literal(&self.m),
            "source": {
                "tree": crate::newick::emit_enewick(&nap.tree).unwrap_or_default(),
                "survival": survival,
                "k": nap.k,
                "d": exact_literal(&nap.d),
            },
            "extension": serde_json::from_str::<Value>(&self.extension.to_json()).unwrap_or(Value::Null),
        })
    }
}

/// Doubles the tree below a shared root and joins each taxon to its copy
/// through a reticulation. A taxon with survival probability 1 gets no
/// edge from its copy, since that edge would have probability 0.
pub fn construct_hardness_instance(nap: &NapInstance) -> Result<HardnessInstance> {
    nap.check()?;
    if nap.d <= Rational::one() {
        return Err(ApdError::Input("the diversity target must exceed 1".into()));
    }
    let t = &nap.tree;
    let root = t.require_root()?;
    let m = t.total_weight();
    let one = Rational::one();
    let mut b = NetworkBuilder::new();
    let mut orig = vec![NodeId(0); t.node_count()];
    let mut copy = vec![NodeId(0); t.node_count()];
    for v in t.nodes() {
        orig[v.0] = b.add_node();
        if let Some(name) = t.name(v) {
            b.set_name(orig[v.0], name);
        }
    }
    for v in t.nodes() {
        copy[v.0] = if v == root {
            orig[v.0]
        } else {
            let c = b.add_node();
            b.set_name(c, format!("{}'", t.label(v)));
            c
        };
    }
    for e in t.edges() {
        b.add_tree_edge(orig[e.tail.0], orig[e.head.0], e.weight.clone());
        b.add_tree_edge(copy[e.tail.0], copy[e.head.0], e.weight.clone());
    }
    let mut gadgets = BTreeMap::new();
    for x in t.leaves() {
        let name = t.taxon(x).expect("leaves carry taxa").to_string();
        let ps = nap.survival[&name].clone();
        let (xo, xc) = (orig[x.0], copy[x.0]);
        b.set_name(xo, name.clone());
        let alpha = b.add_leaf(format!("alpha_{name}"));
        let beta = b.add_leaf(format!("beta_{name}"));
        let gamma = b.add_named_node(format!("gamma_{name}"));
        let delta = b.add_leaf(format!("delta_{name}"));
        b.add_edge(xo, gamma, one.clone(), ps.clone());
        if ps < one {
            b.add_edge(xc, gamma, one.clone(), &one - &ps);
        }
        b.add_tree_edge(xo, alpha, one.clone());
        b.add_tree_edge(gamma, delta, &m - &one);
        b.add_tree_edge(xc, beta, &m + &m);
        gadgets.insert(
            name,
            Gadget {
                x: xo,
                x_copy: xc,
                alpha,
                beta,
                gamma,
                delta,
            },
        );
    }
    let network = b.build()?;

    let mut parent: Vec<Option<NodeId>> = vec![None; network.node_count()];
    for v in t.nodes() {
        if v == root {
            continue;
        }
        let u = t.parents(v).next().expect("non-root tree nodes have a parent");
        parent[copy[v.0].0] = Some(orig[u.0]);
        parent[orig[v.0].0] = Some(copy[v.0]);
    }
    for g in gadgets.values() {
        parent[g.beta.0] = Some(g.x_copy);
        parent[g.alpha.0] = Some(g.x);
        parent[g.gamma.0] = Some(g.x);
        parent[g.delta.0] = Some(g.gamma);
    }
    let extension = TreeExtension::from_parents(parent)?;

    let x_count = gadgets.len();
    let d = &nap.d + &m * Rational::from_integer((nap.k + 2 * x_count + 1).into());
    Ok(HardnessInstance {
        network,
        k: nap.k + x_count,
        d,
        m,
        extension,
        gadgets,
    })
}
