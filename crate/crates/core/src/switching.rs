//! Explicit switchings: enumeration, probabilities, PD scores and the
//! brute-force APD / edge-probability oracles.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{ApdError, Result};
use crate::extension::TreeExtension;
use crate::network::{require_engine_input, EdgeId, NodeId, PhyloNetwork, TaxonSet};
use crate::rational::Rational;

/// Default cap on the number of switchings an oracle may enumerate.
pub const DEFAULT_SWITCHING_CAP: u128 = 1 << 24;

/// Environment variable overriding [`DEFAULT_SWITCHING_CAP`].
pub const SWITCHING_CAP_ENV: &str = "APDKIT_SWITCHING_CAP";

pub fn switching_cap_from_env() -> u128 {
    std::env::var(SWITCHING_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SWITCHING_CAP)
}

/// A (partial) switching: one chosen in-edge per switched node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SwitchingMask {
    choices: BTreeMap<NodeId, EdgeId>,
}

impl SwitchingMask {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_choices(
        net: &PhyloNetwork,
        choices: impl IntoIterator<Item = EdgeId>,
    ) -> Result<Self> {
        let mut mask = SwitchingMask::new();
        for e in choices {
            if e.0 >= net.edge_count() {
                return Err(ApdError::UnknownEdge(e));
            }
            let head = net.edge(e).head;
            if mask.choices.insert(head, e).is_some() {
                return Err(ApdError::Contract(format!(
                    "two choices for node {}",
                    net.label(head)
                )));
            }
        }
        Ok(mask)
    }

    pub fn choice(&self, v: NodeId) -> Option<EdgeId> {
        self.choices.get(&v).copied()
    }

    pub fn choices(&self) -> impl Iterator<Item = (NodeId, EdgeId)> + '_ {
        self.choices.iter().map(|(&v, &e)| (v, e))
    }

    /// The switched nodes.
    pub fn scope(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.choices.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Whether edge `e` survives in the switching.
    pub fn keeps(&self, net: &PhyloNetwork, e: EdgeId) -> bool {
        match self.choices.get(&net.edge(e).head) {
            Some(&chosen) => chosen == e,
            None => true,
        }
    }

    /// Switches every reticulation of `net`.
    pub fn is_full(&self, net: &PhyloNetwork) -> bool {
        net.reticulations()
            .iter()
            .all(|r| self.choices.contains_key(r))
    }

    fn check(&self, net: &PhyloNetwork) -> Result<()> {
        for (&v, &e) in &self.choices {
            if e.0 >= net.edge_count() || net.edge(e).head != v {
                return Err(ApdError::Contract(format!(
                    "choice {e} is not an in-edge of {}",
                    net.label(v)
                )));
            }
        }
        Ok(())
    }
}

/// Merges two switchings with disjoint scopes.
pub fn combine(a: &SwitchingMask, b: &SwitchingMask) -> Result<SwitchingMask> {
    let mut merged = a.clone();
    for (&v, &e) in &b.choices {
        if merged.choices.insert(v, e).is_some() {
            return Err(ApdError::Contract(format!(
                "switchings overlap on node {v}"
            )));
        }
    }
    Ok(merged)
}

/// Number of switchings over `scope`: the product of in-degrees.
pub fn switching_count(net: &PhyloNetwork, scope: &[NodeId]) -> u128 {
    scope
        .iter()
        .map(|&r| net.in_degree(r).max(1) as u128)
        .fold(1u128, |acc, d| acc.saturating_mul(d))
}

/// Lexicographic enumeration of all switchings over `scope`.
pub struct Switchings<'a> {
    net: &'a PhyloNetwork,
    scope: Vec<NodeId>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Switchings<'_> {
    type Item = SwitchingMask;

    fn next(&mut self) -> Option<SwitchingMask> {
        if self.done {
            return None;
        }
        let choices = self
            .scope
            .iter()
            .zip(&self.digits)
            .map(|(&r, &i)| (r, self.net.in_edges(r)[i]))
            .collect();
        // odometer, last position fastest
        self.done = true;
        for pos in (0..self.scope.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < self.net.in_degree(self.scope[pos]) {
                self.done = false;
                break;
            }
            self.digits[pos] = 0;
        }
        Some(SwitchingMask { choices })
    }
}

/// All switchings over `scope` (sorted, deduplicated), in lexicographic
/// order of (node id, in-edge index).
pub fn enumerate_switchings<'a>(net: &'a PhyloNetwork, scope: &[NodeId]) -> Result<Switchings<'a>> {
    let mut scope = scope.to_vec();
    scope.sort();
    scope.dedup();
    for &r in &scope {
        net.check_node(r)?;
        if net.in_degree(r) == 0 {
            return Err(ApdError::Input(format!(
                "{} has no in-edge to switch",
                net.label(r)
            )));
        }
    }
    let digits = vec![0; scope.len()];
    Ok(Switchings {
        net,
        scope,
        digits,
        done: false,
    })
}

/// Product of the chosen in-edge probabilities.
pub fn switching_probability(net: &PhyloNetwork, sigma: &SwitchingMask) -> Result<Rational> {
    sigma.check(net)?;
    Ok(sigma
        .choices
        .values()
        .map(|&e| net.edge(e).prob.clone())
        .product())
}

/// `reach[v]`: `v` has a path into `targets` using only edges kept by
/// `sigma`.
fn reach_in_switching(
    net: &PhyloNetwork,
    order: &[NodeId],
    sigma: &SwitchingMask,
    targets: &[bool],
) -> Vec<bool> {
    let mut reach = targets.to_vec();
    for &v in order.iter().rev() {
        if reach[v.0] {
            continue;
        }
        reach[v.0] = net
            .out_edges(v)
            .iter()
            .any(|&e| sigma.keeps(net, e) && reach[net.edge(e).head.0]);
    }
    reach
}

/// Edges of the switching that start a path into `targets`.
pub fn edges_reaching(
    net: &PhyloNetwork,
    sigma: &SwitchingMask,
    targets: &[bool],
) -> Result<Vec<bool>> {
    let order = net.require_topological_order()?;
    let reach = reach_in_switching(net, &order, sigma, targets);
    Ok(net
        .edge_ids()
        .map(|e| sigma.keeps(net, e) && reach[net.edge(e).head.0])
        .collect())
}

/// PD of `taxa` in a full switching.
pub fn pd_score(net: &PhyloNetwork, sigma: &SwitchingMask, taxa: &TaxonSet) -> Result<Rational> {
    sigma.check(net)?;
    if !sigma.is_full(net) {
        return Err(ApdError::Contract(
            "PD scores need a switching of every reticulation".into(),
        ));
    }
    let reaching = edges_reaching(net, sigma, &taxa.mask(net))?;
    Ok(net
        .edge_ids()
        .filter(|e| reaching[e.0])
        .map(|e| net.edge(e).weight.clone())
        .sum())
}

fn check_oracle_input(net: &PhyloNetwork, cap: u128) -> Result<Vec<NodeId>> {
    net.require_valid()?;
    let retics = net.reticulations();
    let count = switching_count(net, &retics);
    if count > cap {
        return Err(ApdError::Resource(format!(
            "{count} switchings exceed the enumeration cap of {cap}"
        )));
    }
    Ok(retics)
}

/// Sum over switchings of `P(sigma) * f(sigma)`, split across workers.
fn weighted_sum<F>(net: &PhyloNetwork, retics: &[NodeId], f: F) -> Result<Rational>
where
    F: Fn(&SwitchingMask) -> Rational + Sync,
{
    let all: Vec<SwitchingMask> = enumerate_switchings(net, retics)?.collect();
    let term = |s: &SwitchingMask| -> Rational {
        let p: Rational = s.choices.values().map(|&e| net.edge(e).prob.clone()).product();
        p * f(s)
    };
    if all.len() < 256 {
        return Ok(all.iter().map(term).sum());
    }
    Ok(all
        .par_chunks(64)
        .map(|chunk| chunk.iter().map(term).sum::<Rational>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum())
}

/// APD of `taxa` by enumerating every switching.
pub fn apd_bruteforce(net: &PhyloNetwork, taxa: &TaxonSet) -> Result<Rational> {
    apd_bruteforce_with_cap(net, taxa, switching_cap_from_env())
}

pub fn apd_bruteforce_with_cap(net: &PhyloNetwork, taxa: &TaxonSet, cap: u128) -> Result<Rational> {
    let retics = check_oracle_input(net, cap)?;
    let order = net.require_topological_order()?;
    let targets = taxa.mask(net);
    weighted_sum(net, &retics, |s| {
        let reach = reach_in_switching(net, &order, s, &targets);
        net.edge_ids()
            .filter(|&e| s.keeps(net, e) && reach[net.edge(e).head.0])
            .map(|e| net.edge(e).weight.clone())
            .sum()
    })
}

/// Probability that a random switching has a path starting with `edge`
/// and ending in `taxa`.
pub fn gamma_bruteforce(net: &PhyloNetwork, edge: EdgeId, taxa: &TaxonSet) -> Result<Rational> {
    if edge.0 >= net.edge_count() {
        return Err(ApdError::UnknownEdge(edge));
    }
    let retics = check_oracle_input(net, switching_cap_from_env())?;
    let order = net.require_topological_order()?;
    let targets = taxa.mask(net);
    let head = net.edge(edge).head;
    weighted_sum(net, &retics, |s| {
        let reach = reach_in_switching(net, &order, s, &targets);
        if s.keeps(net, edge) && reach[head.0] {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

/// All edge probabilities at once.
pub fn gammas_bruteforce(net: &PhyloNetwork, taxa: &TaxonSet) -> Result<Vec<Rational>> {
    let retics = check_oracle_input(net, switching_cap_from_env())?;
    let order = net.require_topological_order()?;
    let targets = taxa.mask(net);
    let mut acc = vec![Rational::zero(); net.edge_count()];
    for s in enumerate_switchings(net, &retics)? {
        let p = switching_probability(net, &s)?;
        let reach = reach_in_switching(net, &order, &s, &targets);
        for e in net.edge_ids() {
            if s.keeps(net, e) && reach[net.edge(e).head.0] {
                acc[e.0] += &p;
            }
        }
    }
    Ok(acc)
}

/// Sum of `P(sigma_R) * APD_{sigma_R}(taxa)` over all partial switchings of
/// `scope`, where each term is evaluated by full enumeration of the
/// completions. Equals the APD for every scope.
pub fn apd_by_partition(net: &PhyloNetwork, scope: &[NodeId], taxa: &TaxonSet) -> Result<Rational> {
    let retics = check_oracle_input(net, switching_cap_from_env())?;
    let order = net.require_topological_order()?;
    let targets = taxa.mask(net);
    let rest: Vec<NodeId> = retics
        .iter()
        .copied()
        .filter(|r| !scope.contains(r))
        .collect();
    let mut total = Rational::zero();
    for partial in enumerate_switchings(net, scope)? {
        let mut block = Rational::zero();
        for completion in enumerate_switchings(net, &rest)? {
            let sigma = combine(&partial, &completion)?;
            let p = switching_probability(net, &sigma)?;
            let reach = reach_in_switching(net, &order, &sigma, &targets);
            let pd: Rational = net
                .edge_ids()
                .filter(|&e| sigma.keeps(net, e) && reach[net.edge(e).head.0])
                .map(|e| net.edge(e).weight.clone())
                .sum();
            block += p * pd;
        }
        total += block;
    }
    Ok(total)
}

/// `(v, A, Y)`-compatibility: within the edge universe `GW(v) ∩ GW(A)`,
/// exactly the edges of `selected` reach a leaf in `sigma`.
pub fn is_compatible_general(
    net: &PhyloNetwork,
    sigma: &SwitchingMask,
    ext: &TreeExtension,
    v: NodeId,
    area: &[NodeId],
    selected: &[EdgeId],
) -> Result<bool> {
    sigma.check(net)?;
    if !sigma.is_full(net) {
        return Err(ApdError::Contract(
            "compatibility is defined for full switchings".into(),
        ));
    }
    let bag_v = ext.bag(net, v)?;
    let mut universe: Vec<EdgeId> = Vec::new();
    for &a in area {
        for e in ext.bag(net, a)? {
            if bag_v.contains(&e) && !universe.contains(&e) {
                universe.push(e);
            }
        }
    }
    if let Some(bad) = selected.iter().find(|e| !universe.contains(e)) {
        return Err(ApdError::Contract(format!(
            "edge {} is outside the compatibility universe",
            net.edge_label(*bad)
        )));
    }
    let leaves: Vec<bool> = net.nodes().map(|x| net.is_leaf(x)).collect();
    let reaching = edges_reaching(net, sigma, &leaves)?;
    Ok(universe
        .iter()
        .all(|e| reaching[e.0] == selected.contains(e)))
}

/// `(v, Y)`-compatibility.
pub fn is_compatible(
    net: &PhyloNetwork,
    sigma: &SwitchingMask,
    ext: &TreeExtension,
    v: NodeId,
    selected: &[EdgeId],
) -> Result<bool> {
    is_compatible_general(net, sigma, ext, v, &[v], selected)
}

/// APD of all taxa; requires a valid network whose nodes all reach a leaf.
pub fn apd_all_bruteforce(net: &PhyloNetwork) -> Result<Rational> {
    require_engine_input(net)?;
    apd_bruteforce(net, &TaxonSet::all(net))
}
