//! Flash-dump triage toolkit.
//!
//! Takes raw flash images plus acquisition metadata and grades them through
//! three tiers — size verification, digest self-consistency across repeated
//! reads, and entropy-plus-structural content analysis — emitting entropy
//! profiles, signature maps, layout region maps, cross-dump consistency
//! reports, and corpus-level success summaries. A deterministic fixture
//! generator provides ground-truth images for all of it.

pub mod consistency;
pub mod corpus;
mod crc32;
pub mod entropy;
pub mod error;
pub mod image;
pub mod sig;
pub mod synth;
pub mod validate;

pub use error::{Error, Result};
pub use image::{
    ingest_image, verify_digest, AcquisitionMetadata, Digest, FirmwareImage, Fixture, Interface,
    PowerSource,
};
