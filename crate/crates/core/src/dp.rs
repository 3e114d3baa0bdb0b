//! Dynamic program over a tree-extension computing the APD of all taxa in
//! time `O(2^w * n)` for extension width `w`.
//!
//! For every node `v` and every subset `Y` of its bag, `p[v][Y]` is the
//! probability of drawing a switching in which exactly the bag edges in `Y`
//! reach a leaf, and `d[v][Y]` is the expected weight, over those
//! switchings, of the edges on a path from a bag edge to a leaf. Subsets
//! are bitmasks over the bag's local edge indices (bags are sorted by edge
//! id).

use num_traits::{One, Zero};
use serde_json::{Map, Value};

use crate::error::{ApdError, Result};
use crate::extension::TreeExtension;
use crate::network::{require_engine_input, EdgeId, NodeId, PhyloNetwork, TaxonSet};
use crate::rational::{exact_literal, Rational};

/// Largest bag the tables are built for (`2^30` entries per node).
pub const MAX_DP_WIDTH: usize = 30;

/// Arithmetic the DP needs; implemented for exact rationals and `f64`.
pub trait Scalar: Clone + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn is_zero(&self) -> bool;
}

impl Scalar for Rational {
    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn one() -> Self {
        <Rational as One>::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        if Zero::is_zero(self) || Zero::is_zero(other) {
            return <Rational as Zero>::zero();
        }
        self * other
    }
    fn add_assign(&mut self, other: &Self) {
        if !Zero::is_zero(other) {
            *self += other;
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        crate::rational::to_f64(r)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Final `p` and `d` tables of every node.
#[derive(Debug, Clone)]
pub struct DpTables<S> {
    pub bags: Vec<Vec<EdgeId>>,
    pub p: Vec<Vec<S>>,
    pub d: Vec<Vec<S>>,
    pub root: NodeId,
}

impl<S: Scalar> DpTables<S> {
    /// Bitmask of an edge subset of the bag of `v`.
    pub fn mask(&self, v: NodeId, edges: &[EdgeId]) -> Result<usize> {
        let bag = &self.bags[v.0];
        let mut mask = 0;
        for e in edges {
            match bag.binary_search(e) {
                Ok(i) => mask |= 1 << i,
                Err(_) => {
                    return Err(ApdError::Contract(format!("edge {e} is not in the bag of {v}")))
                }
            }
        }
        Ok(mask)
    }

    /// The edges of the bag of `v` selected by `mask`.
    pub fn subset(&self, v: NodeId, mask: usize) -> Vec<EdgeId> {
        self.bags[v.0]
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect()
    }

    pub fn entry(&self, v: NodeId, edges: &[EdgeId]) -> Result<(S, S)> {
        let m = self.mask(v, edges)?;
        Ok((self.p[v.0][m].clone(), self.d[v.0][m].clone()))
    }

    /// `d[root][{}]`.
    pub fn apd(&self) -> S {
        self.d[self.root.0][0].clone()
    }
}

/// Auxiliary tables of one node, indexed `[h][Y]` for `h = 0..=children`.
#[derive(Debug, Clone)]
pub struct AuxTables<S> {
    pub qp: Vec<Vec<S>>,
    pub qd: Vec<Vec<S>>,
    pub cp: Vec<Vec<S>>,
    pub cd: Vec<Vec<S>>,
}

const CHUNKS: usize = MAX_DP_WIDTH / 8 + 2;

/// How one child's bag relates to the parent's. The translation from a
/// parent mask to the child bits it fixes goes eight bits at a time: chunk
/// `c` owns `trans[chunk[c]..chunk[c + 1]]`, one entry per bit pattern.
/// `sums[sum..]` holds, per child mask without the parent's out-edges, the
/// sums over nonempty subsets `Z` of those out-edges.
struct ChildView {
    child: usize,
    chunk: [usize; CHUNKS],
    chunks: usize,
    sum: usize,
}

/// Buffers reused from node to node, including retired tables.
struct Workspace<S> {
    views: Vec<ChildView>,
    trans: Vec<usize>,
    sum_p: Vec<S>,
    sum_d: Vec<S>,
    pool: Vec<Vec<S>>,
}

impl<S: Scalar> Workspace<S> {
    fn new() -> Self {
        Workspace {
            views: Vec::new(),
            trans: Vec::new(),
            sum_p: Vec::new(),
            sum_d: Vec::new(),
            pool: Vec::new(),
        }
    }

    fn table(&mut self, size: usize) -> Vec<S> {
        let mut t = self.pool.pop().unwrap_or_default();
        t.clear();
        t.resize(size, S::zero());
        t
    }

    fn retire(&mut self, t: Vec<S>) {
        if t.capacity() > 0 {
            self.pool.push(t);
        }
    }

    #[inline]
    fn translate(&self, view: &ChildView, mask: usize) -> usize {
        let mut out = 0;
        for c in 0..view.chunks {
            let len = view.chunk[c + 1] - view.chunk[c];
            out |= self.trans[view.chunk[c] + ((mask >> (8 * c)) & (len - 1))];
        }
        out
    }
}

/// Edge probabilities and weights converted once.
struct EdgeScalars<S> {
    prob: Vec<S>,
    weight: Vec<S>,
}

impl<S: Scalar> EdgeScalars<S> {
    fn new(net: &PhyloNetwork) -> Self {
        EdgeScalars {
            prob: net.edges().iter().map(|e| S::from_rational(&e.prob)).collect(),
            weight: net.edges().iter().map(|e| S::from_rational(&e.weight)).collect(),
        }
    }
}

struct Prepared {
    bags: Vec<Vec<EdgeId>>,
    order: Vec<NodeId>,
}

fn prepare(net: &PhyloNetwork, ext: &TreeExtension) -> Result<Prepared> {
    require_engine_input(net)?;
    let bags = ext.bags(net)?;
    if let Some((v, bag)) = bags.iter().enumerate().find(|(_, b)| b.len() > MAX_DP_WIDTH) {
        return Err(ApdError::Resource(format!(
            "bag of n{v} has {} edges; the tables support at most {MAX_DP_WIDTH}",
            bag.len()
        )));
    }
    Ok(Prepared {
        bags,
        order: ext.post_order(),
    })
}

fn child_views<S: Scalar>(
    net: &PhyloNetwork,
    ext: &TreeExtension,
    bags: &[Vec<EdgeId>],
    p: &[Vec<S>],
    d: &[Vec<S>],
    v: NodeId,
    ws: &mut Workspace<S>,
) {
    let bag = &bags[v.0];
    ws.views.clear();
    ws.trans.clear();
    ws.sum_p.clear();
    ws.sum_d.clear();
    for &w in ext.children(v) {
        let child_bag = &bags[w.0];
        let mut bits = [None; MAX_DP_WIDTH];
        let mut out_mask = 0usize;
        for (j, &e) in child_bag.iter().enumerate() {
            if net.edge(e).tail == v {
                out_mask |= 1 << j;
            } else {
                let i = bag
                    .binary_search(&e)
                    .expect("a child bag lies within the parent bag and its out-edges");
                bits[i] = Some(j);
            }
        }
        let mut chunk = [0; CHUNKS];
        chunk[0] = ws.trans.len();
        let chunks = bag.len().div_ceil(8);
        for (c, part) in bits[..bag.len()].chunks(8).enumerate() {
            let start = ws.trans.len();
            ws.trans.resize(start + (1 << part.len()), 0);
            let t = &mut ws.trans[start..];
            for m in 1..t.len() {
                let low = m.trailing_zeros() as usize;
                t[m] = t[m & (m - 1)] | part[low].map_or(0, |j| 1 << j);
            }
            chunk[c + 1] = ws.trans.len();
        }
        if chunks == 0 {
            // Empty parent bag: every mask translates to 0.
            ws.trans.push(0);
            chunk[1] = ws.trans.len();
        }
        let sum = ws.sum_p.len();
        let size = 1usize << child_bag.len();
        ws.sum_p.resize(sum + size, S::zero());
        ws.sum_d.resize(sum + size, S::zero());
        if out_mask != 0 {
            for m in 0..size {
                if m & out_mask != 0 {
                    let base = sum + (m & !out_mask);
                    ws.sum_p[base].add_assign(&p[w.0][m]);
                    ws.sum_d[base].add_assign(&d[w.0][m]);
                }
            }
        }
        ws.views.push(ChildView {
            child: w.0,
            chunk,
            chunks: chunks.max(1),
            sum,
        });
    }
}

/// Fills `p[v]` and `d[v]` from the children's tables; optionally records
/// the auxiliary tables.
#[allow(clippy::too_many_arguments)]
fn node_tables<S: Scalar>(
    net: &PhyloNetwork,
    ext: &TreeExtension,
    bags: &[Vec<EdgeId>],
    scalars: &EdgeScalars<S>,
    p: &[Vec<S>],
    d: &[Vec<S>],
    v: NodeId,
    ws: &mut Workspace<S>,
    mut aux: Option<&mut AuxTables<S>>,
) -> (Vec<S>, Vec<S>) {
    let bag = &bags[v.0];
    let size = 1usize << bag.len();
    let mut in_mask = 0usize;
    for (i, &e) in bag.iter().enumerate() {
        if net.edge(e).head == v {
            in_mask |= 1 << i;
        }
    }
    let is_root = net.in_degree(v) == 0;
    let mut out_p = ws.table(size);
    let mut out_d = ws.table(size);

    if ext.children(v).is_empty() {
        // Leaf: it reaches itself, and nothing hangs below it.
        for (y, (pp, dd)) in out_p.iter_mut().zip(out_d.iter_mut()).enumerate() {
            let yin = y & in_mask;
            if is_root {
                *pp = S::one();
            } else if yin.count_ones() == 1 {
                let e = bag[yin.trailing_zeros() as usize].0;
                *pp = scalars.prob[e].clone();
                *dd = pp.mul(&scalars.weight[e]);
            }
        }
        if let Some(aux) = aux {
            aux.qp = vec![vec![S::one(); size]];
            aux.qd = vec![vec![S::zero(); size]];
            aux.cp = vec![vec![S::zero(); size]];
            aux.cd = vec![vec![S::zero(); size]];
        }
        return (out_p, out_d);
    }

    child_views(net, ext, bags, p, d, v, ws);
    if let Some(aux) = aux.as_deref_mut() {
        let rows = ws.views.len() + 1;
        aux.qp = vec![vec![S::zero(); size]; rows];
        aux.qd = vec![vec![S::zero(); size]; rows];
        aux.cp = vec![vec![S::zero(); size]; rows];
        aux.cd = vec![vec![S::zero(); size]; rows];
    }
    for y in 0..size {
        let yin = y & in_mask;
        if yin.count_ones() >= 2 && aux.is_none() {
            continue;
        }
        let mut qp = S::one();
        let mut qd = S::zero();
        let mut cp = S::zero();
        let mut cd = S::zero();
        if let Some(aux) = aux.as_deref_mut() {
            aux.qp[0][y] = qp.clone();
        }
        for (h, view) in ws.views.iter().enumerate() {
            let yc = ws.translate(view, y);
            let w = view.child;
            let (ph, dh) = (&p[w][yc], &d[w][yc]);
            let (sp, sd) = (&ws.sum_p[view.sum + yc], &ws.sum_d[view.sum + yc]);
            let reach_p = cp.add(&qp);
            let new_cp = {
                let mut t = cp.mul(ph);
                t.add_assign(&reach_p.mul(sp));
                t
            };
            let new_cd = {
                let mut t = cd.mul(ph);
                t.add_assign(&dh.mul(&cp));
                t.add_assign(&sd.mul(&reach_p));
                t.add_assign(&cd.add(&qd).mul(sp));
                t
            };
            let new_qd = {
                let mut t = qd.mul(ph);
                t.add_assign(&dh.mul(&qp));
                t
            };
            qp = qp.mul(ph);
            qd = new_qd;
            cp = new_cp;
            cd = new_cd;
            if let Some(aux) = aux.as_deref_mut() {
                aux.qp[h + 1][y] = qp.clone();
                aux.qd[h + 1][y] = qd.clone();
                aux.cp[h + 1][y] = cp.clone();
                aux.cd[h + 1][y] = cd.clone();
            }
        }
        if is_root {
            out_p[y] = qp.add(&cp);
            out_d[y] = qd.add(&cd);
        } else {
            match yin.count_ones() {
                0 => {
                    out_p[y] = qp;
                    out_d[y] = qd;
                }
                1 => {
                    let e = bag[yin.trailing_zeros() as usize].0;
                    let pv = scalars.prob[e].mul(&cp);
                    let mut dv = scalars.prob[e].mul(&cd);
                    dv.add_assign(&scalars.weight[e].mul(&pv));
                    out_p[y] = pv;
                    out_d[y] = dv;
                }
                _ => {}
            }
        }
    }
    (out_p, out_d)
}

/// All `p` and `d` tables. The network must be valid with every node
/// reaching a leaf, and `ext` must be a valid extension of it.
pub fn compute_tables<S: Scalar>(net: &PhyloNetwork, ext: &TreeExtension) -> Result<DpTables<S>> {
    let Prepared { bags, order } = prepare(net, ext)?;
    let scalars = EdgeScalars::new(net);
    let mut ws = Workspace::new();
    let n = net.node_count();
    let mut p: Vec<Vec<S>> = vec![Vec::new(); n];
    let mut d: Vec<Vec<S>> = vec![Vec::new(); n];
    for &v in &order {
        let (pv, dv) = node_tables(net, ext, &bags, &scalars, &p, &d, v, &mut ws, None);
        p[v.0] = pv;
        d[v.0] = dv;
    }
    Ok(DpTables {
        bags,
        p,
        d,
        root: ext.root(),
    })
}

/// APD of all taxa; only the tables of the current frontier are kept.
pub fn run_dp_with<S: Scalar>(net: &PhyloNetwork, ext: &TreeExtension) -> Result<S> {
    let Prepared { bags, order } = prepare(net, ext)?;
    let scalars = EdgeScalars::new(net);
    let mut ws = Workspace::new();
    let n = net.node_count();
    let mut p: Vec<Vec<S>> = vec![Vec::new(); n];
    let mut d: Vec<Vec<S>> = vec![Vec::new(); n];
    for &v in &order {
        let (pv, dv) = node_tables(net, ext, &bags, &scalars, &p, &d, v, &mut ws, None);
        for &w in ext.children(v) {
            ws.retire(std::mem::take(&mut p[w.0]));
            ws.retire(std::mem::take(&mut d[w.0]));
        }
        p[v.0] = pv;
        d[v.0] = dv;
    }
    Ok(d[ext.root().0][0].clone())
}

/// Exact APD of all taxa.
pub fn run_dp(net: &PhyloNetwork, ext: &TreeExtension) -> Result<Rational> {
    run_dp_with::<Rational>(net, ext)
}

pub fn run_dp_f64(net: &PhyloNetwork, ext: &TreeExtension) -> Result<f64> {
    run_dp_with::<f64>(net, ext)
}

/// Auxiliary `Qp, Qd, Cp, Cd` tables of `v`, given completed tables.
pub fn aux_tables<S: Scalar>(
    net: &PhyloNetwork,
    ext: &TreeExtension,
    tables: &DpTables<S>,
    v: NodeId,
) -> Result<AuxTables<S>> {
    net.check_node(v)?;
    let mut aux = AuxTables {
        qp: Vec::new(),
        qd: Vec::new(),
        cp: Vec::new(),
        cd: Vec::new(),
    };
    let scalars = EdgeScalars::new(net);
    let mut ws = Workspace::new();
    node_tables(net, ext, &tables.bags, &scalars, &tables.p, &tables.d, v, &mut ws, Some(&mut aux));
    Ok(aux)
}

/// Base-case entries of a leaf `x`: `(Y, p, d)` for every subset of its
/// in-edges.
pub fn leaf_tables(net: &PhyloNetwork, x: NodeId) -> Result<Vec<(Vec<EdgeId>, Rational, Rational)>> {
    net.check_node(x)?;
    if !net.is_leaf(x) {
        return Err(ApdError::Input(format!("{} is not a leaf", net.label(x))));
    }
    let in_edges = net.in_edges(x);
    if in_edges.len() > MAX_DP_WIDTH {
        return Err(ApdError::Resource("too many in-edges".into()));
    }
    Ok((0..1usize << in_edges.len())
        .map(|y| {
            let subset: Vec<EdgeId> = in_edges
                .iter()
                .enumerate()
                .filter(|(i, _)| y >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let (p, d) = if subset.len() == 1 {
                let e = net.edge(subset[0]);
                (e.prob.clone(), &e.prob * &e.weight)
            } else if in_edges.is_empty() {
                (<Rational as One>::one(), <Rational as Zero>::zero())
            } else {
                (<Rational as Zero>::zero(), <Rational as Zero>::zero())
            };
            (subset, p, d)
        })
        .collect())
}

/// Restricts `ext` to the nodes of an induced subnetwork.
pub fn restrict_extension(
    ext: &TreeExtension,
    node_map: &[Option<NodeId>],
    new_count: usize,
) -> Result<TreeExtension> {
    let mut parent = vec![None; new_count];
    for (old, mapped) in node_map.iter().enumerate() {
        let Some(new) = mapped else { continue };
        let mut up = ext.parent(NodeId(old));
        while let Some(a) = up {
            if let Some(na) = node_map[a.0] {
                parent[new.0] = Some(na);
                break;
            }
            up = ext.parent(a);
        }
    }
    TreeExtension::from_parents(parent)
}

/// How [`apd_dp`] obtains its extension.
#[derive(Debug, Clone)]
pub enum ExtensionSource<'a> {
    Heuristic,
    /// Exact search with the given node budget.
    Exact(usize),
    /// An extension of the full network, restricted to the induced one.
    Given(&'a TreeExtension),
}

/// Exact APD of `taxa`: the network is first induced on `taxa`.
pub fn apd_dp(net: &PhyloNetwork, taxa: &TaxonSet, source: ExtensionSource<'_>) -> Result<Rational> {
    net.require_valid()?;
    if taxa.is_empty() {
        return Ok(<Rational as Zero>::zero());
    }
    let induced = net.induce(taxa)?;
    let sub = &induced.network;
    let ext = match source {
        ExtensionSource::Heuristic => crate::extension::scanwidth_heuristic(sub)?.0,
        ExtensionSource::Exact(budget) => crate::extension::scanwidth_exact(sub, budget)?.0,
        ExtensionSource::Given(ext) => {
            let report = ext.validate(net)?;
            if !report.is_valid() {
                return Err(ApdError::Contract(format!(
                    "invalid tree-extension: {}",
                    report.issues[0].describe(net)
                )));
            }
            restrict_extension(ext, &induced.node_map, sub.node_count())?
        }
    };
    run_dp(sub, &ext)
}

/// JSON dump of every non-zero entry, keyed by node label and by the
/// sorted edge labels of the subset.
pub fn tables_to_json(net: &PhyloNetwork, tables: &DpTables<Rational>) -> Value {
    let mut nodes = Map::new();
    for v in net.nodes() {
        let mut entries = Map::new();
        for (m, p) in tables.p[v.0].iter().enumerate() {
            if Zero::is_zero(p) {
                continue;
            }
            let mut names: Vec<String> = tables
                .subset(v, m)
                .iter()
                .map(|&e| net.edge_label(e))
                .collect();
            names.sort();
            let mut cell = Map::new();
            cell.insert("p".into(), Value::String(exact_literal(p)));
            cell.insert("d".into(), Value::String(exact_literal(&tables.d[v.0][m])));
            entries.insert(format!("{{{}}}", names.join(",")), Value::Object(cell));
        }
        nodes.insert(net.label(v), Value::Object(entries));
    }
    Value::Object(nodes)
}
