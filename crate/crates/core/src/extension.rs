//! Tree-extensions, their bags and widths, and scanwidth search.
//!
//! A tree-extension is a rooted tree on the network's node set whose
//! ancestor relation contains the network's. The bag of `v` holds the
//! network edges `xy` with `x` strictly above `v` and `y` at or below `v`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{ApdError, Result};
use crate::network::{EdgeId, NodeId, PhyloNetwork};

/// Default node budget for [`scanwidth_exact`].
pub const DEFAULT_EXACT_BUDGET: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeExtension {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
    enter: Vec<usize>,
    exit: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ExtensionJson {
    parent: Vec<Option<usize>>,
}

impl TreeExtension {
    /// Builds the tree from a parent array; exactly one entry is `None`.
    pub fn from_parents(parent: Vec<Option<NodeId>>) -> Result<Self> {
        let n = parent.len();
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(ApdError::Input(format!(
                "an extension needs exactly one root, found {}",
                roots.len()
            )));
        }
        let root = NodeId(roots[0]);
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                if p.0 >= n {
                    return Err(ApdError::UnknownNode(*p));
                }
                children[p.0].push(NodeId(i));
            }
        }
        let mut enter = vec![usize::MAX; n];
        let mut exit = vec![0; n];
        let mut clock = 0;
        let mut stack = vec![(root, 0usize)];
        enter[root.0] = clock;
        clock += 1;
        while let Some(top) = stack.last_mut() {
            let (v, idx) = *top;
            if idx < children[v.0].len() {
                top.1 += 1;
                let c = children[v.0][idx];
                enter[c.0] = clock;
                clock += 1;
                stack.push((c, 0));
            } else {
                exit[v.0] = clock;
                clock += 1;
                stack.pop();
            }
        }
        if let Some(i) = enter.iter().position(|&t| t == usize::MAX) {
            return Err(ApdError::Input(format!(
                "node n{i} is not connected to the extension root"
            )));
        }
        Ok(TreeExtension {
            parent,
            children,
            root,
            enter,
            exit,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ExtensionJson = serde_json::from_str(text)
            .map_err(|e| ApdError::Input(format!("extension JSON: {e}")))?;
        Self::from_parents(raw.parent.into_iter().map(|p| p.map(NodeId)).collect())
    }

    pub fn to_json(&self) -> String {
        let raw = ExtensionJson {
            parent: self.parent.iter().map(|p| p.map(|v| v.0)).collect(),
        };
        serde_json::to_string(&raw).expect("serializable")
    }

    /// Canonical extension of a topological order: processing nodes from
    /// the last to the first, each node adopts the current roots of the
    /// subtrees holding its network children.
    pub fn from_topological_order(net: &PhyloNetwork, order: &[NodeId]) -> Result<Self> {
        let n = net.node_count();
        if order.len() != n {
            return Err(ApdError::Input("order must list every node once".into()));
        }
        let mut pos = vec![usize::MAX; n];
        for (i, v) in order.iter().enumerate() {
            net.check_node(*v)?;
            if pos[v.0] != usize::MAX {
                return Err(ApdError::Input(format!("{v} appears twice in the order")));
            }
            pos[v.0] = i;
        }
        for e in net.edges() {
            if pos[e.tail.0] >= pos[e.head.0] {
                return Err(ApdError::Input("order is not topological".into()));
            }
        }
        let mut dsu = Dsu::new(n);
        let mut top: Vec<NodeId> = (0..n).map(NodeId).collect();
        let mut parent = vec![None; n];
        for &v in order.iter().rev() {
            for c in net.children(v) {
                let rc = dsu.find(c.0);
                let rv = dsu.find(v.0);
                if rc == rv {
                    continue;
                }
                parent[top[rc].0] = Some(v);
                let merged = dsu.union(rc, rv);
                top[merged] = v;
            }
        }
        Self::from_parents(parent)
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0]
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    /// `a` is `b` or an ancestor of `b`.
    pub fn is_ancestor_or_self(&self, a: NodeId, b: NodeId) -> bool {
        self.enter[a.0] <= self.enter[b.0] && self.exit[b.0] <= self.exit[a.0]
    }

    pub fn is_proper_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.is_ancestor_or_self(a, b)
    }

    /// Children before parents; siblings in increasing id order.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = (0..self.node_count()).map(NodeId).collect();
        order.sort_by_key(|v| self.exit[v.0]);
        order
    }

    /// Checks both extension invariants against `net`.
    pub fn validate(&self, net: &PhyloNetwork) -> Result<ExtensionReport> {
        if self.node_count() != net.node_count() {
            return Err(ApdError::Input(format!(
                "extension has {} nodes, network has {}",
                self.node_count(),
                net.node_count()
            )));
        }
        let mut issues = Vec::new();
        for v in net.nodes() {
            let ext_leaf = self.children[v.0].is_empty();
            if ext_leaf != net.is_leaf(v) {
                issues.push(ExtensionIssue::LeafMismatch(v));
            }
        }
        for e in net.edge_ids() {
            let edge = net.edge(e);
            if !self.is_proper_ancestor(edge.tail, edge.head) {
                issues.push(ExtensionIssue::EdgeNotExtended(e));
            }
        }
        Ok(ExtensionReport { issues })
    }

    pub fn require_valid(&self, net: &PhyloNetwork) -> Result<()> {
        let report = self.validate(net)?;
        match report.issues.first() {
            None => Ok(()),
            Some(issue) => Err(ApdError::Contract(format!(
                "invalid tree-extension: {}",
                issue.describe(net)
            ))),
        }
    }

    /// All bags, computed bottom-up: a node's bag is the union of its
    /// children's bags and its own in-edges, minus its out-edges.
    pub fn bags(&self, net: &PhyloNetwork) -> Result<Vec<Vec<EdgeId>>> {
        self.require_valid(net)?;
        let mut bags: Vec<Vec<EdgeId>> = vec![Vec::new(); net.node_count()];
        for v in self.post_order() {
            let size = net.in_degree(v)
                + self.children[v.0].iter().map(|c| bags[c.0].len()).sum::<usize>();
            let mut bag: Vec<EdgeId> = Vec::with_capacity(size);
            bag.extend_from_slice(net.in_edges(v));
            for &c in &self.children[v.0] {
                bag.extend(bags[c.0].iter().copied().filter(|&e| net.edge(e).tail != v));
            }
            bag.sort();
            bags[v.0] = bag;
        }
        Ok(bags)
    }

    /// Direct evaluation of the bag definition for one node.
    pub fn bag(&self, net: &PhyloNetwork, v: NodeId) -> Result<Vec<EdgeId>> {
        net.check_node(v)?;
        if self.node_count() != net.node_count() {
            return Err(ApdError::Input("extension does not match network".into()));
        }
        Ok(net
            .edge_ids()
            .filter(|&e| {
                let edge = net.edge(e);
                self.is_proper_ancestor(edge.tail, v) && self.is_ancestor_or_self(v, edge.head)
            })
            .collect())
    }

    /// Maximum bag size.
    pub fn width(&self, net: &PhyloNetwork) -> Result<usize> {
        Ok(self.bags(net)?.iter().map(Vec::len).max().unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtensionIssue {
    /// Extension leaves must be exactly the network leaves.
    LeafMismatch(NodeId),
    /// The tail of this network edge is not a proper ancestor of its head.
    EdgeNotExtended(EdgeId),
}

impl ExtensionIssue {
    pub fn describe(&self, net: &PhyloNetwork) -> String {
        match self {
            ExtensionIssue::LeafMismatch(v) => format!(
                "{} is a leaf in exactly one of network and extension",
                net.label(*v)
            ),
            ExtensionIssue::EdgeNotExtended(e) => format!(
                "edge {} is not directed downwards in the extension",
                net.edge_label(*e)
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtensionReport {
    pub issues: Vec<ExtensionIssue>,
}

impl ExtensionReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }
}

/// Greedy sinks-first ordering: repeatedly place the available node whose
/// new component has the smallest in-cut (ties: lowest id), then build the
/// canonical extension.
pub fn scanwidth_heuristic(net: &PhyloNetwork) -> Result<(TreeExtension, usize)> {
    net.require_topological_order()?;
    let n = net.node_count();
    let mut dsu = Dsu::new(n);
    let mut cut = vec![0usize; n];
    let mut placed = vec![false; n];
    let mut missing: Vec<usize> = net.nodes().map(|v| net.out_degree(v)).collect();
    let mut available: std::collections::BTreeSet<NodeId> =
        net.nodes().filter(|v| missing[v.0] == 0).collect();
    let mut sequence = Vec::with_capacity(n);
    let mut width = 0;
    while !available.is_empty() {
        let mut best: Option<(usize, NodeId)> = None;
        for &v in &available {
            let c = merged_cut(net, &mut dsu, &cut, v);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, v));
            }
        }
        let (c, v) = best.expect("non-empty");
        available.remove(&v);
        placed[v.0] = true;
        let mut root = dsu.find(v.0);
        for child in net.children(v).collect::<Vec<_>>() {
            root = dsu.union(root, child.0);
        }
        cut[root] = c;
        width = width.max(c);
        sequence.push(v);
        for p in net.parents(v).collect::<Vec<_>>() {
            missing[p.0] -= 1;
            if missing[p.0] == 0 {
                available.insert(p);
            }
        }
    }
    sequence.reverse();
    let ext = TreeExtension::from_topological_order(net, &sequence)?;
    Ok((ext, width))
}

fn merged_cut(net: &PhyloNetwork, dsu: &mut Dsu, cut: &[usize], v: NodeId) -> usize {
    let mut roots: Vec<usize> = net.children(v).map(|c| dsu.find(c.0)).collect();
    roots.sort_unstable();
    roots.dedup();
    let below: usize = roots.iter().map(|&r| cut[r]).sum();
    below + net.in_degree(v) - net.out_degree(v)
}

/// Exact scanwidth by iterative deepening over sinks-first orderings, with
/// failed placement sets memoised per bound. Leaves are placed up front,
/// which never changes the components formed later.
pub fn scanwidth_exact(net: &PhyloNetwork, node_budget: usize) -> Result<(TreeExtension, usize)> {
    let n = net.node_count();
    if n > node_budget || n > 64 {
        return Err(ApdError::Resource(format!(
            "{n} nodes exceed the exact scanwidth budget of {node_budget}; use the heuristic"
        )));
    }
    let (heur_ext, heur_width) = scanwidth_heuristic(net)?;
    let lower = net
        .nodes()
        .map(|v| net.in_degree(v))
        .max()
        .unwrap_or(0)
        .max(usize::from(net.edge_count() > 0));
    let search = ExactSearch::new(net);
    for bound in lower..heur_width {
        if let Some(sequence) = search.run(bound) {
            let mut order = sequence;
            order.reverse();
            let ext = TreeExtension::from_topological_order(net, &order)?;
            let width = ext.width(net)?;
            debug_assert!(width <= bound);
            return Ok((ext, width));
        }
    }
    Ok((heur_ext, heur_width))
}

struct ExactSearch<'a> {
    net: &'a PhyloNetwork,
    child_mask: Vec<u64>,
    neighbours: Vec<u64>,
    leaves: u64,
    full: u64,
}

impl<'a> ExactSearch<'a> {
    fn new(net: &'a PhyloNetwork) -> Self {
        let n = net.node_count();
        let mut child_mask = vec![0u64; n];
        let mut neighbours = vec![0u64; n];
        let mut leaves = 0u64;
        for v in net.nodes() {
            for c in net.children(v) {
                child_mask[v.0] |= 1 << c.0;
                neighbours[v.0] |= 1 << c.0;
                neighbours[c.0] |= 1 << v.0;
            }
            if net.is_leaf(v) {
                leaves |= 1 << v.0;
            }
        }
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        ExactSearch {
            net,
            child_mask,
            neighbours,
            leaves,
            full,
        }
    }

    /// In-cut of the weak component of `v` inside `placed` (which holds `v`).
    fn component_cut(&self, placed: u64, v: usize) -> usize {
        let mut comp = 1u64 << v;
        let mut frontier = comp;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.neighbours[x] & placed & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        let mut cut = 0;
        let mut rest = comp;
        while rest != 0 {
            let x = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            cut += self
                .net
                .parents(NodeId(x))
                .filter(|p| placed & (1 << p.0) == 0)
                .count();
        }
        cut
    }

    fn run(&self, bound: usize) -> Option<Vec<NodeId>> {
        let mut failed = HashSet::new();
        let mut sequence: Vec<NodeId> = (0..self.net.node_count())
            .filter(|&i| self.leaves & (1 << i) != 0)
            .map(NodeId)
            .collect();
        if self.dfs(self.leaves, bound, &mut failed, &mut sequence) {
            Some(sequence)
        } else {
            None
        }
    }

    fn dfs(&self, placed: u64, bound: usize, failed: &mut HashSet<u64>, seq: &mut Vec<NodeId>) -> bool {
        if placed == self.full {
            return true;
        }
        if failed.contains(&placed) {
            return false;
        }
        let mut todo = self.full & !placed;
        while todo != 0 {
            let v = todo.trailing_zeros() as usize;
            todo &= todo - 1;
            if self.child_mask[v] & !placed != 0 {
                continue;
            }
            let next = placed | (1 << v);
            if self.component_cut(next, v) > bound {
                continue;
            }
            seq.push(NodeId(v));
            if self.dfs(next, bound, failed, seq) {
                return true;
            }
            seq.pop();
        }
        failed.insert(placed);
        false
    }
}
