//! Small hand-built networks used by tests, examples and the CLI.

use crate::extension::TreeExtension;
use crate::network::{NetworkBuilder, NodeId, PhyloNetwork};
use crate::rational::{int, ratio, Rational};

/// The 14-edge network with reticulations `r` and `s` used throughout the
/// documentation. Internal nodes carry display names.
pub fn figure_one() -> PhyloNetwork {
    let mut b = NetworkBuilder::new();
    let [rho, u, v, p, q, r, s, w] =
        ["rho", "u", "v", "p", "q", "r", "s", "w"].map(|n| b.add_named_node(n));
    let [a, bb, c, d, e] = ["a", "b", "c", "d", "e"].map(|t| b.add_leaf(t));
    b.add_tree_edge(rho, u, int(2));
    b.add_tree_edge(u, p, int(5));
    b.add_tree_edge(p, a, int(1));
    b.add_edge(u, r, int(1), ratio(3, 10));
    b.add_tree_edge(p, q, int(1));
    b.add_tree_edge(q, bb, int(2));
    b.add_edge(q, s, int(4), ratio(4, 10));
    b.add_tree_edge(s, c, int(1));
    b.add_tree_edge(rho, v, int(2));
    b.add_tree_edge(v, w, int(1));
    b.add_tree_edge(w, d, int(1));
    b.add_tree_edge(w, e, int(2));
    b.add_edge(v, r, int(6), ratio(7, 10));
    b.add_edge(r, s, int(8), ratio(6, 10));
    b.build().expect("static network")
}

/// The width-3 tree-extension of [`figure_one`]: the spine
/// `rho, v, u, r, p, q, s, c` with `w` under `v`, `d, e` under `w`,
/// `a` under `p` and `b` under `q`.
pub fn figure_two_extension(net: &PhyloNetwork) -> TreeExtension {
    let id = |l: &str| net.node_by_label(l).expect("figure one label");
    let mut parent: Vec<Option<NodeId>> = vec![None; net.node_count()];
    for (child, par) in [
        ("v", "rho"),
        ("u", "v"),
        ("r", "u"),
        ("p", "r"),
        ("q", "p"),
        ("s", "q"),
        ("c", "s"),
        ("w", "v"),
        ("d", "w"),
        ("e", "w"),
        ("a", "p"),
        ("b", "q"),
    ] {
        parent[id(child).0] = Some(id(par));
    }
    TreeExtension::from_parents(parent).expect("static extension")
}

/// `((a:1,b:2):3);`
pub fn cherry_with_stem() -> PhyloNetwork {
    let mut b = NetworkBuilder::new();
    let root = b.add_node();
    let u = b.add_node();
    let a = b.add_leaf("a");
    let bb = b.add_leaf("b");
    b.add_tree_edge(root, u, int(3));
    b.add_tree_edge(u, a, int(1));
    b.add_tree_edge(u, bb, int(2));
    b.build().expect("static network")
}

/// `rho -> x, rho -> y, x -> r (p), y -> r (1 - p), r -> l`, with pendant
/// leaves `lx` under `x` and `ly` under `y`. The reticulation is visible.
pub fn diamond(p: Rational) -> PhyloNetwork {
    let mut b = NetworkBuilder::new();
    let [rho, x, y, r] = ["rho", "x", "y", "r"].map(|n| b.add_named_node(n));
    let [l, lx, ly] = ["l", "lx", "ly"].map(|t| b.add_leaf(t));
    b.add_tree_edge(rho, x, int(1));
    b.add_tree_edge(rho, y, int(2));
    b.add_edge(x, r, int(3), p.clone());
    b.add_edge(y, r, int(4), int(1) - p);
    b.add_tree_edge(r, l, int(5));
    b.add_tree_edge(x, lx, int(6));
    b.add_tree_edge(y, ly, int(7));
    b.build().expect("static network")
}

/// `rho -> v -> r (0.3), rho -> u -> r (0.7), r -> l, u -> lu`: `v` is an
/// invisible tree node while `r` stays visible from `l`.
pub fn invisible_tree_node() -> PhyloNetwork {
    let mut b = NetworkBuilder::new();
    let [rho, v, u, r] = ["rho", "v", "u", "r"].map(|n| b.add_named_node(n));
    let [l, lu] = ["l", "lu"].map(|t| b.add_leaf(t));
    b.add_tree_edge(rho, v, int(2));
    b.add_edge(v, r, int(3), ratio(3, 10));
    b.add_tree_edge(rho, u, int(1));
    b.add_edge(u, r, int(4), ratio(7, 10));
    b.add_tree_edge(r, l, int(5));
    b.add_tree_edge(u, lu, int(6));
    b.build().expect("static network")
}

/// Two diamonds hanging off a common path: `rho -> t1 -> (diamond) -> m`
/// and `m -> t2 -> (diamond)`, each with its own pendant leaves.
pub fn diamond_chain() -> PhyloNetwork {
    let mut b = NetworkBuilder::new();
    let rho = b.add_named_node("rho");
    let mut top = rho;
    for i in 1..=2 {
        let x = b.add_named_node(format!("x{i}"));
        let y = b.add_named_node(format!("y{i}"));
        let r = b.add_named_node(format!("r{i}"));
        let lx = b.add_leaf(format!("lx{i}"));
        b.add_tree_edge(top, x, int(i));
        b.add_tree_edge(top, y, int(2 * i));
        b.add_edge(x, r, int(3), ratio(1, 4 + i));
        b.add_edge(y, r, int(1), int(1) - ratio(1, 4 + i));
        b.add_tree_edge(x, lx, int(2));
        let ly = b.add_leaf(format!("ly{i}"));
        b.add_tree_edge(y, ly, int(5));
        let m = b.add_named_node(format!("m{i}"));
        b.add_tree_edge(r, m, int(1));
        top = m;
    }
    let end = b.add_leaf("z");
    b.add_tree_edge(top, end, int(4));
    let extra = b.add_leaf("zz");
    b.add_tree_edge(top, extra, int(1));
    b.build().expect("static network")
}
