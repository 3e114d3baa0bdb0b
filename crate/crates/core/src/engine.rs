//! One entry point for the APD of an arbitrary taxon set, with a choice of
//! evaluation engine.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::decomp::apd_decomposed;
use crate::dp::{apd_dp, ExtensionSource};
use crate::error::{ApdError, Result};
use crate::extension::{scanwidth_heuristic, TreeExtension};
use crate::network::{NodeId, PhyloNetwork, TaxonSet};
use crate::rational::Rational;
use crate::rv::apd_rv;
use crate::switching::{apd_bruteforce, switching_cap_from_env, switching_count};

/// Largest per-blob number of partial switchings `auto` hands to the
/// decomposition engine.
pub const AUTO_DECOMP_THRESHOLD: u128 = 1 << 16;

/// Largest heuristic extension width `auto` hands to the DP.
pub const AUTO_DP_WIDTH: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Auto,
    Brute,
    SwDp,
    Rv,
    Decomp,
}

/// The engine that actually produced a value (`Tree` for Faith PD).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Used {
    Tree,
    Brute,
    SwDp,
    Rv,
    Decomp,
}

impl fmt::Display for Used {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Used::Tree => "tree",
            Used::Brute => "brute",
            Used::SwDp => "swdp",
            Used::Rv => "rv",
            Used::Decomp => "decomp",
        })
    }
}

impl FromStr for Engine {
    type Err = ApdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "brute" => Ok(Engine::Brute),
            "swdp" => Ok(Engine::SwDp),
            "rv" => Ok(Engine::Rv),
            "decomp" => Ok(Engine::Decomp),
            other => Err(ApdError::Input(format!(
                "unknown engine `{other}` (auto, brute, swdp, rv, decomp)"
            ))),
        }
    }
}

/// Largest product of in-degrees over the invisible reticulations of one
/// biconnected component.
pub fn max_blob_switchings(net: &PhyloNetwork) -> Result<u128> {
    let invisible = net.invisible_reticulations()?;
    if invisible.is_empty() {
        return Ok(1);
    }
    let mut per_blob: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    let blobs = net.biconnected_components()?;
    for r in invisible {
        let e = net.in_edges(r)[0];
        let k = blobs
            .iter()
            .position(|b| b.edges.binary_search(&e).is_ok())
            .expect("every edge lies in a component");
        per_blob.entry(k).or_default().push(r);
    }
    Ok(per_blob
        .values()
        .map(|rs| switching_count(net, rs))
        .max()
        .unwrap_or(1))
}

/// APD of `taxa` with the requested engine. `extension`, if given, must
/// extend `net` and is used by the DP engine.
pub fn apd(
    net: &PhyloNetwork,
    taxa: &TaxonSet,
    engine: Engine,
    extension: Option<&TreeExtension>,
) -> Result<(Rational, Used)> {
    net.require_valid()?;
    for &x in taxa.iter() {
        net.check_node(x)?;
        if !net.is_leaf(x) {
            return Err(ApdError::Input(format!("{} is not a leaf", net.label(x))));
        }
    }
    if engine == Engine::Brute {
        return Ok((apd_bruteforce(net, taxa)?, Used::Brute));
    }
    if taxa.is_empty() {
        let used = match engine {
            Engine::SwDp => Used::SwDp,
            Engine::Rv => Used::Rv,
            Engine::Decomp => Used::Decomp,
            _ => Used::Tree,
        };
        return Ok((Rational::zero(), used));
    }
    if engine == Engine::SwDp {
        let source = match extension {
            Some(ext) => ExtensionSource::Given(ext),
            None => ExtensionSource::Heuristic,
        };
        return Ok((apd_dp(net, taxa, source)?, Used::SwDp));
    }
    let induced = net.induce(taxa)?;
    let sub = &induced.network;
    match engine {
        Engine::Rv => Ok((apd_rv(sub)?, Used::Rv)),
        Engine::Decomp => Ok((apd_decomposed(sub)?, Used::Decomp)),
        _ => auto(net, taxa, sub, extension),
    }
}

fn auto(
    net: &PhyloNetwork,
    taxa: &TaxonSet,
    sub: &PhyloNetwork,
    extension: Option<&TreeExtension>,
) -> Result<(Rational, Used)> {
    if sub.is_tree() {
        return Ok((sub.total_weight(), Used::Tree));
    }
    if sub.is_reticulation_visible()? {
        return Ok((apd_rv(sub)?, Used::Rv));
    }
    if max_blob_switchings(sub)? <= AUTO_DECOMP_THRESHOLD {
        return Ok((apd_decomposed(sub)?, Used::Decomp));
    }
    if let Some(ext) = extension {
        return Ok((apd_dp(net, taxa, ExtensionSource::Given(ext))?, Used::SwDp));
    }
    let (ext, width) = scanwidth_heuristic(sub)?;
    if width <= AUTO_DP_WIDTH {
        return Ok((crate::dp::run_dp(sub, &ext)?, Used::SwDp));
    }
    let retics = sub.reticulations();
    if switching_count(sub, &retics) <= switching_cap_from_env() {
        return Ok((apd_bruteforce(net, taxa)?, Used::Brute));
    }
    Err(ApdError::Resource(format!(
        "no engine is feasible: heuristic width {width}, {} reticulations",
        retics.len()
    )))
}
