//! Block moment SDP assembly.

mod assemble;
mod complexity;
mod monomials;
mod sdp;

pub use assemble::{assemble_dense_moment_sdp, assemble_lr_moment_sdp, MomentRelaxation};
pub use complexity::ComplexityReport;
pub use monomials::{clique_monomials, MonomialBasis};
pub use sdp::{Block, BlockEntry, BlockKind, BlockSdp, Equalities, LinearForm};
