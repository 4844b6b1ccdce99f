//! Error type shared across the triage pipeline.

use crate::sig::SignatureFormat;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Reading the dump source failed mid-stream.
    #[error("failed to read image source: {0}")]
    Ingest(#[source] std::io::Error),

    /// A caller-supplied parameter is out of contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The payload is too short for the requested analysis.
    #[error("insufficient data: need at least {needed} bytes, image has {actual}")]
    InsufficientData { needed: u64, actual: u64 },

    /// A header structure runs past the end of the image.
    #[error("{format} header at offset {offset:#x} extends past end of image")]
    TruncatedHeader { format: SignatureFormat, offset: u64 },

    /// A header is present but violates the format's field constraints.
    #[error("malformed {format} header at offset {offset:#x}: {reason}")]
    MalformedHeader {
        format: SignatureFormat,
        offset: u64,
        reason: String,
    },

    /// Profile and signature hits were computed from different images.
    #[error("provenance mismatch: entropy profile and signature scan come from different images")]
    ProvenanceMismatch,

    /// A ledger record violates its own invariants.
    #[error("record validation failed: {0}")]
    RecordValidation(String),

    /// A second canonical dump was registered for a device model.
    #[error("canonical dump already registered for device model {device_model}")]
    CanonicalConflict { device_model: String },

    /// The backing store could not be read or written.
    #[error("corpus store I/O failure: {0}")]
    Persistence(#[source] std::io::Error),

    /// A stored record line could not be decoded.
    #[error("corrupt corpus record in {file}: {source}")]
    CorruptRecord {
        file: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
