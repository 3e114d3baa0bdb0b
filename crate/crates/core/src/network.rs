//! Rooted phylogenetic networks: representation, validation and structural
//! queries (offspring, induced subnetworks, visibility, blobs).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Signed};

use crate::error::{ApdError, Result};
use crate::rational::{fraction, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Tree,
    Reticulation,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tail: NodeId,
    pub head: NodeId,
    /// Branch length.
    pub weight: Rational,
    /// Inheritance probability.
    pub prob: Rational,
}

/// A rooted DAG with weighted, probability-annotated edges. Leaves carry
/// taxon names. The structure is immutable once built; use [`validate`]
/// to check the phylogenetic-network invariants.
///
/// [`validate`]: PhyloNetwork::validate
#[derive(Debug, Clone)]
pub struct PhyloNetwork {
    taxa: Vec<Option<String>>,
    names: Vec<Option<String>>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    taxon_index: HashMap<String, NodeId>,
}

#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    taxa: Vec<Option<String>>,
    names: Vec<Option<String>>,
    edges: Vec<Edge>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self) -> NodeId {
        self.taxa.push(None);
        self.names.push(None);
        NodeId(self.taxa.len() - 1)
    }

    pub fn add_named_node(&mut self, name: impl Into<String>) -> NodeId {
        let v = self.add_node();
        self.names[v.0] = Some(name.into());
        v
    }

    pub fn add_leaf(&mut self, taxon: impl Into<String>) -> NodeId {
        let v = self.add_node();
        self.taxa[v.0] = Some(taxon.into());
        v
    }

    pub fn set_taxon(&mut self, v: NodeId, taxon: impl Into<String>) {
        self.taxa[v.0] = Some(taxon.into());
    }

    pub fn set_name(&mut self, v: NodeId, name: impl Into<String>) {
        self.names[v.0] = Some(name.into());
    }

    pub fn node_count(&self) -> usize {
        self.taxa.len()
    }

    pub fn add_edge(
        &mut self,
        tail: NodeId,
        head: NodeId,
        weight: Rational,
        prob: Rational,
    ) -> EdgeId {
        self.edges.push(Edge {
            tail,
            head,
            weight,
            prob,
        });
        EdgeId(self.edges.len() - 1)
    }

    /// Edge with inheritance probability 1.
    pub fn add_tree_edge(&mut self, tail: NodeId, head: NodeId, weight: Rational) -> EdgeId {
        self.add_edge(tail, head, weight, Rational::one())
    }

    /// Checks only what indexing needs: endpoints exist and taxa are unique.
    pub fn build(self) -> Result<PhyloNetwork> {
        let n = self.taxa.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail.0 >= n {
                return Err(ApdError::UnknownNode(e.tail));
            }
            if e.head.0 >= n {
                return Err(ApdError::UnknownNode(e.head));
            }
            out_edges[e.tail.0].push(EdgeId(i));
            in_edges[e.head.0].push(EdgeId(i));
        }
        let mut taxon_index = HashMap::new();
        for (i, t) in self.taxa.iter().enumerate() {
            if let Some(t) = t {
                if taxon_index.insert(t.clone(), NodeId(i)).is_some() {
                    return Err(ApdError::Input(format!("duplicate taxon label `{t}`")));
                }
            }
        }
        Ok(PhyloNetwork {
            taxa: self.taxa,
            names: self.names,
            edges: self.edges,
            out_edges,
            in_edges,
            taxon_index,
        })
    }
}

impl PhyloNetwork {
    pub fn node_count(&self) -> usize {
        self.taxa.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_count()).map(EdgeId)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out_edges[v.0]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_edges[v.0]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_edges[v.0].len()
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_edges[v.0].len()
    }

    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out_edges[v.0].iter().map(|&e| self.edges[e.0].head)
    }

    pub fn parents(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.in_edges[v.0].iter().map(|&e| self.edges[e.0].tail)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.node_count()
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(ApdError::UnknownNode(v))
        }
    }

    pub fn taxon(&self, v: NodeId) -> Option<&str> {
        self.taxa[v.0].as_deref()
    }

    /// Display name of an internal node (no semantics attached).
    pub fn name(&self, v: NodeId) -> Option<&str> {
        self.names[v.0].as_deref()
    }

    /// Taxon, else display name, else the numeric id.
    pub fn label(&self, v: NodeId) -> String {
        self.taxon(v)
            .or_else(|| self.name(v))
            .map(str::to_owned)
            .unwrap_or_else(|| v.to_string())
    }

    pub fn node_by_taxon(&self, taxon: &str) -> Option<NodeId> {
        self.taxon_index.get(taxon).copied()
    }

    /// Looks a node up by taxon, then display name, then `n<id>`.
    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        if let Some(v) = self.node_by_taxon(label) {
            return Some(v);
        }
        if let Some(i) = self.names.iter().position(|n| n.as_deref() == Some(label)) {
            return Some(NodeId(i));
        }
        label
            .strip_prefix('n')
            .and_then(|s| s.parse().ok())
            .map(NodeId)
            .filter(|v| self.contains(*v))
    }

    /// First edge `tail -> head`, if any.
    pub fn find_edge(&self, tail: NodeId, head: NodeId) -> Option<EdgeId> {
        self.out_edges
            .get(tail.0)?
            .iter()
            .copied()
            .find(|&e| self.edges[e.0].head == head)
    }

    pub fn edge_label(&self, e: EdgeId) -> String {
        let edge = self.edge(e);
        format!("{}{}", self.label(edge.tail), self.label(edge.head))
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.out_edges[v.0].is_empty()
    }

    pub fn is_reticulation(&self, v: NodeId) -> bool {
        self.in_edges[v.0].len() >= 2
    }

    pub fn kind(&self, v: NodeId) -> NodeKind {
        if self.is_leaf(v) {
            NodeKind::Leaf
        } else if self.in_edges[v.0].is_empty() {
            NodeKind::Root
        } else if self.is_reticulation(v) {
            NodeKind::Reticulation
        } else {
            NodeKind::Tree
        }
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn reticulations(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.is_reticulation(v)).collect()
    }

    pub fn is_tree(&self) -> bool {
        self.nodes().all(|v| self.in_degree(v) <= 1)
    }

    /// The unique in-degree-0 node, if there is exactly one.
    pub fn root(&self) -> Option<NodeId> {
        let mut sources = self.nodes().filter(|&v| self.in_edges[v.0].is_empty());
        let first = sources.next()?;
        match sources.next() {
            None => Some(first),
            Some(_) => None,
        }
    }

    pub fn require_root(&self) -> Result<NodeId> {
        self.root()
            .ok_or_else(|| ApdError::Precondition("network does not have a unique root".into()))
    }

    /// Kahn order; `None` when the graph has a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let n = self.node_count();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.in_edges[i].len()).collect();
        let mut queue: VecDeque<NodeId> = self.nodes().filter(|v| indeg[v.0] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &e in &self.out_edges[v.0] {
                let h = self.edges[e.0].head;
                indeg[h.0] -= 1;
                if indeg[h.0] == 0 {
                    queue.push_back(h);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn require_topological_order(&self) -> Result<Vec<NodeId>> {
        self.topological_order()
            .ok_or_else(|| ApdError::Precondition("network contains a directed cycle".into()))
    }

    /// Replaces the inheritance probability of one edge.
    pub(crate) fn override_prob(&mut self, e: EdgeId, prob: Rational) {
        self.edges[e.0].prob = prob;
    }

    pub fn total_weight(&self) -> Rational {
        self.edges.iter().map(|e| e.weight.clone()).sum()
    }

    /// Checks every network invariant and reports each violation.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let n = self.node_count();
        if n == 0 {
            issues.push(Issue::error(Violation::Empty));
            return ValidationReport { issues };
        }
        let sources: Vec<NodeId> = self
            .nodes()
            .filter(|&v| self.in_edges[v.0].is_empty())
            .collect();
        match sources.len() {
            0 => issues.push(Issue::error(Violation::NoRoot)),
            1 => {}
            _ => issues.push(Issue::error(Violation::MultipleRoots(sources))),
        }
        if self.topological_order().is_none() {
            issues.push(Issue::error(Violation::Cycle));
        }
        for v in self.nodes() {
            let (indeg, outdeg) = (self.in_degree(v), self.out_degree(v));
            if indeg >= 2 && outdeg > 1 {
                issues.push(Issue::error(Violation::ReticulationOutDegree {
                    node: v,
                    out_degree: outdeg,
                }));
            }
            match (outdeg == 0, self.taxa[v.0].is_some()) {
                (true, false) => issues.push(Issue::error(Violation::UnlabeledLeaf(v))),
                (false, true) => issues.push(Issue::error(Violation::LabeledInternalNode(v))),
                _ => {}
            }
            let normal = match self.in_edges[v.0].as_slice() {
                [] => true,
                [e] => self.edges[e.0].prob.is_one(),
                many => many
                    .iter()
                    .map(|e| self.edges[e.0].prob.clone())
                    .sum::<Rational>()
                    .is_one(),
            };
            if !normal {
                let sum = self.in_edges[v.0]
                    .iter()
                    .map(|e| self.edges[e.0].prob.clone())
                    .sum();
                issues.push(Issue::error(Violation::NotNormal { node: v, sum }));
            }
            let out = &self.out_edges[v.0];
            if out.len() <= 16 {
                for (i, &e) in out.iter().enumerate().skip(1) {
                    let h = self.edges[e.0].head;
                    if let Some(&first) = out[..i].iter().find(|f| self.edges[f.0].head == h) {
                        issues.push(Issue::warning(Violation::ParallelEdges(first, e)));
                    }
                }
            } else {
                let mut seen = BTreeMap::new();
                for &e in out {
                    let h = self.edges[e.0].head;
                    if let Some(&first) = seen.get(&h) {
                        issues.push(Issue::warning(Violation::ParallelEdges(first, e)));
                    } else {
                        seen.insert(h, e);
                    }
                }
            }
        }
        for e in self.edge_ids() {
            let edge = self.edge(e);
            if edge.weight.is_negative() {
                issues.push(Issue::error(Violation::NegativeWeight(e)));
            }
            if !edge.prob.is_positive() || edge.prob > Rational::one() {
                issues.push(Issue::error(Violation::ProbabilityOutOfRange(e)));
            }
        }
        ValidationReport { issues }
    }

    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        let first = report.errors().next().map(|i| i.violation.describe(self));
        match first {
            None => Ok(()),
            Some(text) => Err(ApdError::Precondition(format!("invalid network: {text}"))),
        }
    }

    /// All leaves reachable from `v` (a leaf is its own offspring).
    pub fn offspring(&self, v: NodeId) -> Result<TaxonSet> {
        self.check_node(v)?;
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![v];
        seen[v.0] = true;
        let mut leaves = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if self.is_leaf(x) {
                leaves.insert(x);
            }
            for c in self.children(x) {
                if !seen[c.0] {
                    seen[c.0] = true;
                    stack.push(c);
                }
            }
        }
        Ok(TaxonSet(leaves))
    }

    /// Marks every node with a directed path to some node of `targets`.
    pub fn nodes_reaching(&self, targets: &[bool]) -> Vec<bool> {
        let mut reach = targets.to_vec();
        let mut stack: Vec<NodeId> = self.nodes().filter(|v| reach[v.0]).collect();
        while let Some(x) = stack.pop() {
            for p in self.parents(x) {
                if !reach[p.0] {
                    reach[p.0] = true;
                    stack.push(p);
                }
            }
        }
        reach
    }

    /// Nodes that cannot reach any leaf.
    pub fn nodes_without_leaf(&self) -> Vec<NodeId> {
        let leaves: Vec<bool> = self.nodes().map(|v| self.is_leaf(v)).collect();
        let reach = self.nodes_reaching(&leaves);
        self.nodes().filter(|v| !reach[v.0]).collect()
    }

    /// Subnetwork on the kept nodes and edges; ids are re-densified in
    /// increasing order. Edges need both endpoints kept.
    pub fn extract(&self, keep_node: &[bool], keep_edge: &[bool]) -> Extracted {
        let mut node_map = vec![None; self.node_count()];
        let mut b = NetworkBuilder::new();
        for v in self.nodes().filter(|v| keep_node[v.0]) {
            let nv = b.add_node();
            if let Some(t) = &self.taxa[v.0] {
                b.set_taxon(nv, t.clone());
            }
            if let Some(name) = &self.names[v.0] {
                b.set_name(nv, name.clone());
            }
            node_map[v.0] = Some(nv);
        }
        let mut edge_map = vec![None; self.edge_count()];
        for e in self.edge_ids().filter(|e| keep_edge[e.0]) {
            let edge = self.edge(e);
            if let (Some(t), Some(h)) = (node_map[edge.tail.0], node_map[edge.head.0]) {
                edge_map[e.0] =
                    Some(b.add_edge(t, h, edge.weight.clone(), edge.prob.clone()));
            }
        }
        let network = b
            .build()
            .expect("extracting from a well-formed network cannot fail");
        Extracted {
            network,
            node_map,
            edge_map,
        }
    }

    /// Deletes every node whose offspring misses `taxa`. Inheritance
    /// probabilities are kept as they are.
    pub fn induce(&self, taxa: &TaxonSet) -> Result<Induced> {
        if taxa.is_empty() {
            return Err(ApdError::Input("cannot induce on an empty taxon set".into()));
        }
        for &x in taxa.iter() {
            self.check_node(x)?;
            if !self.is_leaf(x) {
                return Err(ApdError::Input(format!("{} is not a leaf", self.label(x))));
            }
        }
        let mut targets = vec![false; self.node_count()];
        for &x in taxa.iter() {
            targets[x.0] = true;
        }
        let alive = self.nodes_reaching(&targets);
        let keep_edge: Vec<bool> = self.edges.iter().map(|e| alive[e.head.0]).collect();
        let lost_in_edge = self
            .edges
            .iter()
            .any(|e| alive[e.head.0] && !alive[e.tail.0]);
        let Extracted {
            network,
            node_map,
            edge_map,
        } = self.extract(&alive, &keep_edge);
        Ok(Induced {
            network,
            node_map,
            edge_map,
            lost_in_edge,
        })
    }

    /// Reference visibility test: `v` is visible from the leaves that become
    /// unreachable from the root once `v` is deleted. Returns the smallest
    /// such leaf.
    pub fn visible_witness(&self, v: NodeId) -> Result<Option<NodeId>> {
        self.check_node(v)?;
        let root = self.require_root()?;
        if v == root {
            return Ok(self.leaves().into_iter().next());
        }
        let mut seen = vec![false; self.node_count()];
        seen[root.0] = true;
        seen[v.0] = true;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for c in self.children(x) {
                if !seen[c.0] {
                    seen[c.0] = true;
                    stack.push(c);
                }
            }
        }
        if self.is_leaf(v) {
            return Ok(Some(v));
        }
        Ok(self.nodes().find(|&x| self.is_leaf(x) && !seen[x.0]))
    }

    pub fn is_visible(&self, v: NodeId) -> Result<bool> {
        Ok(self.visible_witness(v)?.is_some())
    }

    /// Visibility of every node via the dominator tree of the rooted DAG.
    pub fn visibility(&self) -> Result<Visibility> {
        Ok(self.visibility_counted()?.0)
    }

    /// [`visibility`](Self::visibility) plus a count of elementary steps
    /// (nodes, edges and dominator-tree climbs).
    pub fn visibility_counted(&self) -> Result<(Visibility, u64)> {
        let order = self.require_topological_order()?;
        let mut ops = (self.node_count() + self.edge_count()) as u64;
        let root = self.require_root()?;
        let n = self.node_count();
        let mut pos = vec![0usize; n];
        for (i, v) in order.iter().enumerate() {
            pos[v.0] = i;
        }
        let mut idom = vec![root; n];
        let mut depth = vec![0usize; n];
        for &v in order.iter().skip(1) {
            let mut acc: Option<NodeId> = None;
            for p in self.parents(v) {
                acc = Some(match acc {
                    None => p,
                    Some(a) => dominator_lca(&idom, &depth, a, p, &mut ops),
                });
            }
            let d = acc.unwrap_or(root);
            idom[v.0] = d;
            depth[v.0] = depth[d.0] + 1;
        }
        let mut witness: Vec<Option<NodeId>> = self
            .nodes()
            .map(|v| self.is_leaf(v).then_some(v))
            .collect();
        for &v in order.iter().rev() {
            if v == root {
                continue;
            }
            if let Some(w) = witness[v.0] {
                let d = idom[v.0];
                witness[d.0] = Some(witness[d.0].map_or(w, |x| x.min(w)));
            }
        }
        Ok((Visibility { idom, witness }, ops))
    }

    pub fn invisible_reticulations(&self) -> Result<Vec<NodeId>> {
        let vis = self.visibility()?;
        Ok(self
            .reticulations()
            .into_iter()
            .filter(|&r| !vis.is_visible(r))
            .collect())
    }

    pub fn is_reticulation_visible(&self) -> Result<bool> {
        Ok(self.invisible_reticulations()?.is_empty())
    }

    /// Biconnected components of the underlying undirected multigraph,
    /// lowest component roots first.
    pub fn biconnected_components(&self) -> Result<Vec<Component>> {
        let order = self.require_topological_order()?;
        let n = self.node_count();
        let mut topo_pos = vec![0usize; n];
        for (i, v) in order.iter().enumerate() {
            topo_pos[v.0] = i;
        }
        let mut adjacency: Vec<Vec<(NodeId, EdgeId)>> = vec![Vec::new(); n];
        for e in self.edge_ids() {
            let edge = self.edge(e);
            adjacency[edge.tail.0].push((edge.head, e));
            adjacency[edge.head.0].push((edge.tail, e));
        }
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut edge_stack: Vec<EdgeId> = Vec::new();
        let mut groups: Vec<Vec<EdgeId>> = Vec::new();
        for start in self.nodes() {
            if disc[start.0] != usize::MAX {
                continue;
            }
            disc[start.0] = timer;
            low[start.0] = timer;
            timer += 1;
            // (node, edge used to enter it, next adjacency index)
            let mut frames: Vec<(NodeId, Option<EdgeId>, usize)> = vec![(start, None, 0)];
            while let Some(frame) = frames.last_mut() {
                let (u, via, idx) = *frame;
                if idx < adjacency[u.0].len() {
                    frame.2 += 1;
                    let (w, e) = adjacency[u.0][idx];
                    if Some(e) == via {
                        continue;
                    }
                    if disc[w.0] == usize::MAX {
                        edge_stack.push(e);
                        disc[w.0] = timer;
                        low[w.0] = timer;
                        timer += 1;
                        frames.push((w, Some(e), 0));
                    } else if disc[w.0] < disc[u.0] {
                        edge_stack.push(e);
                        low[u.0] = low[u.0].min(disc[w.0]);
                    }
                } else {
                    frames.pop();
                    if let (Some(&(parent, _, _)), Some(e)) = (frames.last(), via) {
                        low[parent.0] = low[parent.0].min(low[u.0]);
                        if low[u.0] >= disc[parent.0] {
                            let mut group = Vec::new();
                            while let Some(x) = edge_stack.pop() {
                                group.push(x);
                                if x == e {
                                    break;
                                }
                            }
                            groups.push(group);
                        }
                    }
                }
            }
        }
        let mut comps: Vec<Component> = groups
            .into_iter()
            .map(|mut edges| {
                edges.sort();
                let mut nodes: Vec<NodeId> = edges
                    .iter()
                    .flat_map(|&e| [self.edge(e).tail, self.edge(e).head])
                    .collect();
                nodes.sort();
                nodes.dedup();
                let heads: BTreeSet<NodeId> = edges.iter().map(|&e| self.edge(e).head).collect();
                let sources: Vec<NodeId> =
                    nodes.iter().copied().filter(|v| !heads.contains(v)).collect();
                debug_assert_eq!(sources.len(), 1, "component root must be unique");
                let root = sources
                    .into_iter()
                    .min_by_key(|v| topo_pos[v.0])
                    .expect("an acyclic component has a source");
                Component { nodes, edges, root }
            })
            .collect();
        comps.sort_by(|a, b| {
            topo_pos[b.root.0]
                .cmp(&topo_pos[a.root.0])
                .then_with(|| a.edges[0].cmp(&b.edges[0]))
        });
        Ok(comps)
    }

    /// Maximum number of reticulations in one biconnected component.
    pub fn level(&self) -> Result<usize> {
        Ok(self
            .biconnected_components()?
            .iter()
            .map(|c| c.reticulations(self).len())
            .max()
            .unwrap_or(0))
    }
}

fn dominator_lca(
    idom: &[NodeId],
    depth: &[usize],
    mut a: NodeId,
    mut b: NodeId,
    ops: &mut u64,
) -> NodeId {
    while a != b {
        *ops += 1;
        if depth[a.0] >= depth[b.0] {
            a = idom[a.0];
        } else {
            b = idom[b.0];
        }
    }
    a
}

/// Dominator-tree visibility data.
#[derive(Debug, Clone)]
pub struct Visibility {
    idom: Vec<NodeId>,
    witness: Vec<Option<NodeId>>,
}

impl Visibility {
    pub fn is_visible(&self, v: NodeId) -> bool {
        self.witness[v.0].is_some()
    }

    /// Smallest leaf from which `v` is visible.
    pub fn witness(&self, v: NodeId) -> Option<NodeId> {
        self.witness[v.0]
    }

    pub fn immediate_dominator(&self, v: NodeId) -> NodeId {
        self.idom[v.0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    /// The only node without an in-edge inside the component.
    pub root: NodeId,
}

impl Component {
    /// A bridge: a single edge.
    pub fn is_trivial(&self) -> bool {
        self.edges.len() == 1
    }

    pub fn reticulations(&self, net: &PhyloNetwork) -> Vec<NodeId> {
        let mut count: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &e in &self.edges {
            *count.entry(net.edge(e).head).or_default() += 1;
        }
        count
            .into_iter()
            .filter(|&(_, c)| c >= 2)
            .map(|(v, _)| v)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Extracted {
    pub network: PhyloNetwork,
    pub node_map: Vec<Option<NodeId>>,
    pub edge_map: Vec<Option<EdgeId>>,
}

/// Subnetwork induced by a taxon set, carrying the parent's probabilities.
#[derive(Debug, Clone)]
pub struct Induced {
    pub network: PhyloNetwork,
    pub node_map: Vec<Option<NodeId>>,
    pub edge_map: Vec<Option<EdgeId>>,
    /// Set when a surviving node lost an in-edge, leaving it non-normal.
    pub lost_in_edge: bool,
}

/// A set of leaves of one network.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaxonSet(BTreeSet<NodeId>);

impl TaxonSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(net: &PhyloNetwork) -> Self {
        TaxonSet(net.leaves().into_iter().collect())
    }

    pub fn from_nodes(net: &PhyloNetwork, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for v in nodes {
            net.check_node(v)?;
            if !net.is_leaf(v) {
                return Err(ApdError::Input(format!("{} is not a leaf", net.label(v))));
            }
            set.insert(v);
        }
        Ok(TaxonSet(set))
    }

    pub fn from_taxa<S: AsRef<str>>(
        net: &PhyloNetwork,
        taxa: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let mut nodes = Vec::new();
        for t in taxa {
            let t = t.as_ref();
            nodes.push(
                net.node_by_taxon(t)
                    .ok_or_else(|| ApdError::UnknownTaxon(t.to_owned()))?,
            );
        }
        Self::from_nodes(net, nodes)
    }

    pub fn insert(&mut self, v: NodeId) -> bool {
        self.0.insert(v)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeId> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &TaxonSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn mask(&self, net: &PhyloNetwork) -> Vec<bool> {
        let mut m = vec![false; net.node_count()];
        for v in &self.0 {
            m[v.0] = true;
        }
        m
    }

    /// Sorted taxon names.
    pub fn names(&self, net: &PhyloNetwork) -> Vec<String> {
        let mut names: Vec<String> = self.0.iter().map(|&v| net.label(v)).collect();
        names.sort();
        names
    }

    /// The same taxa, looked up by name in another network.
    pub fn translate(&self, from: &PhyloNetwork, to: &PhyloNetwork) -> Result<TaxonSet> {
        TaxonSet::from_taxa(to, self.names(from))
    }
}

impl FromIterator<NodeId> for TaxonSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        TaxonSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NoRoot,
    MultipleRoots(Vec<NodeId>),
    Cycle,
    ReticulationOutDegree { node: NodeId, out_degree: usize },
    UnlabeledLeaf(NodeId),
    LabeledInternalNode(NodeId),
    NotNormal { node: NodeId, sum: Rational },
    NegativeWeight(EdgeId),
    ProbabilityOutOfRange(EdgeId),
    ParallelEdges(EdgeId, EdgeId),
}

impl Violation {
    pub fn describe(&self, net: &PhyloNetwork) -> String {
        match self {
            Violation::Empty => "network has no nodes".into(),
            Violation::NoRoot => "no node has in-degree 0".into(),
            Violation::MultipleRoots(v) => format!(
                "several in-degree-0 nodes: {}",
                v.iter().map(|&x| net.label(x)).collect::<Vec<_>>().join(", ")
            ),
            Violation::Cycle => "graph contains a directed cycle".into(),
            Violation::ReticulationOutDegree { node, out_degree } => format!(
                "reticulation {} has out-degree {out_degree}",
                net.label(*node)
            ),
            Violation::UnlabeledLeaf(v) => format!("leaf {} carries no taxon", net.label(*v)),
            Violation::LabeledInternalNode(v) => {
                format!("internal node {} carries a taxon", net.label(*v))
            }
            Violation::NotNormal { node, sum } => format!(
                "in-edge probabilities of {} sum to {}",
                net.label(*node),
                fraction(sum)
            ),
            Violation::NegativeWeight(e) => format!("edge {} has negative weight", net.edge_label(*e)),
            Violation::ProbabilityOutOfRange(e) => format!(
                "edge {} has probability {} outside (0,1]",
                net.edge_label(*e),
                fraction(&net.edge(*e).prob)
            ),
            Violation::ParallelEdges(a, b) => format!(
                "parallel edges {a} and {b} ({})",
                net.edge_label(*a)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub violation: Violation,
}

impl Issue {
    fn error(violation: Violation) -> Self {
        Issue {
            severity: Severity::Error,
            violation,
        }
    }

    fn warning(violation: Violation) -> Self {
        Issue {
            severity: Severity::Warning,
            violation,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    /// No errors; warnings are allowed.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }
}

/// Requires a valid network in which every node reaches a leaf.
pub(crate) fn require_engine_input(net: &PhyloNetwork) -> Result<()> {
    if let Some(&dead) = net
        .nodes_without_leaf()
        .iter()
        .find(|&&v| net.taxon(v).is_none())
    {
        return Err(ApdError::NoLeafOffspring(dead));
    }
    net.require_valid()
}
