//! Average-tree phylogenetic diversity (APD) on rooted phylogenetic
//! networks.
//!
//! Values are exact rationals. Four engines compute the APD of a taxon set
//! and check one another: switching enumeration ([`switching`]), a dynamic
//! program over tree-extensions ([`dp`]), a linear sweep for
//! reticulation-visible networks ([`rv`]) and a blob decomposition
//! ([`decomp`]). [`engine::apd`] picks one automatically.

pub mod decomp;
pub mod dp;
pub mod engine;
pub mod error;
pub mod extension;
pub mod generate;
pub mod maxapd;
pub mod network;
pub mod newick;
pub mod rational;
pub mod rv;
pub mod samples;
pub mod switching;

pub use engine::{apd, Engine, Used};
pub use error::{ApdError, ErrorClass, Result};
pub use extension::TreeExtension;
pub use network::{EdgeId, NetworkBuilder, NodeId, PhyloNetwork, TaxonSet};
pub use rational::Rational;
