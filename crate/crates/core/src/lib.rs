//! Phylogenetic invariants for the Kimura 3-parameter model.
//!
//! The crate covers the Fourier (Hadamard) change of coordinates between
//! leaf-pattern probabilities and Fourier coordinates, the monomial
//! parameterization of the model on unrooted trivalent trees, a recursive
//! construction of `4^(n-1) - 6n + 9` binomial generators that cut out the
//! model variety near its biologically meaningful points, independent
//! checks of those generators, and a topology scoring pipeline for
//! alignments.

pub mod config;
pub mod error;
pub mod fourier;
pub mod group;
pub mod invariants;
pub mod linalg;
pub mod model;
pub mod scoring;
pub mod tree;
pub mod verify;

pub use config::{Tolerances, DEFAULT_MAX_LEAVES};
pub use error::{Error, Result};
pub use fourier::{p_to_q, params_to_fourier, params_to_prob, q_to_p, EdgeParams, Frame, PatternDistribution, QVector};
pub use group::{GroupElement, Nucleotide, Pattern};
pub use invariants::{codimension, lci, quadric_minors, three_leaf_generators, Binomial, InvariantSet, Monomial, Tag};
pub use model::{act, fiber, is_biologically_meaningful, is_singular_parameter, joint_probability, phi, ModelParams, SignAction};
pub use scoring::{rank_topologies, read_fasta, score_topology, simulate, Aggregation, Alignment, TopologyScore};
pub use tree::{enumerate_topologies, parse_newick, Cherry, Tree};
pub use verify::{jacobian_rank, theta_expand, vanishes_on_model};
