//! Immutable firmware image values: payload, declared capacity, SHA-256
//! digest, and acquisition metadata.

use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::error::{Error, Result};

/// SHA-256 digest, rendered as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(data: &[u8]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(data);
        Digest(hasher.finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 64 {
            return Err(Error::InvalidArgument(format!(
                "digest must be 64 hex characters, got {}",
                s.len()
            )));
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks_exact(2).enumerate() {
            let hi = hex_nibble(chunk[0])?;
            let lo = hex_nibble(chunk[1])?;
            out[i] = (hi << 4) | lo;
        }
        Ok(Digest(out))
    }
}

fn hex_nibble(c: u8) -> Result<u8> {
    match c {
        b'0'..=b'9' => Ok(c - b'0'),
        b'a'..=b'f' => Ok(c - b'a' + 10),
        b'A'..=b'F' => Ok(c - b'A' + 10),
        _ => Err(Error::InvalidArgument(format!(
            "invalid hex character {:?} in digest",
            c as char
        ))),
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hardware interface a dump was read over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Interface {
    Spi,
    Swd,
    Uart,
    Other,
}

/// Physical contact apparatus used during the read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Fixture {
    Alligator,
    Hook,
    Direct,
    None,
}

/// Power arrangement during the read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PowerSource {
    Bench,
    Battery,
    Programmer,
    Unknown,
}

/// Bench-session details attached to every ingested dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionMetadata {
    pub device_model: String,
    pub interface: Interface,
    pub fixture: Fixture,
    pub power_source: PowerSource,
    pub captured_at: DateTime<Utc>,
    pub notes: String,
}

impl AcquisitionMetadata {
    /// Metadata with the given model and neutral defaults for the rest.
    pub fn for_model(device_model: impl Into<String>) -> Result<Self> {
        let device_model = device_model.into();
        if device_model.is_empty() {
            return Err(Error::InvalidArgument(
                "device_model must be non-empty".into(),
            ));
        }
        Ok(AcquisitionMetadata {
            device_model,
            interface: Interface::Other,
            fixture: Fixture::None,
            power_source: PowerSource::Unknown,
            captured_at: DateTime::<Utc>::UNIX_EPOCH,
            notes: String::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.device_model.is_empty() {
            return Err(Error::InvalidArgument(
                "device_model must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// An acquired flash dump. Immutable once constructed; cheap to clone and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct FirmwareImage {
    payload: Arc<[u8]>,
    declared_capacity: u64,
    digest: Digest,
    metadata: AcquisitionMetadata,
}

impl FirmwareImage {
    /// Wrap an in-memory payload. `declared_capacity` is the vendor-nominal
    /// flash size; a payload of a different length is accepted (size
    /// mismatches are a validation concern, not an ingestion error).
    pub fn from_bytes(
        payload: impl Into<Arc<[u8]>>,
        declared_capacity: u64,
        metadata: AcquisitionMetadata,
    ) -> Result<Self> {
        if declared_capacity == 0 {
            return Err(Error::InvalidArgument(
                "declared_capacity must be greater than zero".into(),
            ));
        }
        metadata.validate()?;
        let payload = payload.into();
        let digest = Digest::of(&payload);
        Ok(FirmwareImage {
            payload,
            declared_capacity,
            digest,
            metadata,
        })
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn len(&self) -> u64 {
        self.payload.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    pub fn declared_capacity(&self) -> u64 {
        self.declared_capacity
    }

    /// Digest computed over the payload at construction time.
    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn metadata(&self) -> &AcquisitionMetadata {
        &self.metadata
    }
}

/// Read a dump source to its end and wrap it as a [`FirmwareImage`].
///
/// The payload length is recorded even when it differs from
/// `declared_capacity`; only an unreadable source or a zero capacity is an
/// error here.
pub fn ingest_image(
    mut source: impl Read,
    declared_capacity: u64,
    metadata: AcquisitionMetadata,
) -> Result<FirmwareImage> {
    if declared_capacity == 0 {
        return Err(Error::InvalidArgument(
            "declared_capacity must be greater than zero".into(),
        ));
    }
    let mut payload = Vec::new();
    source.read_to_end(&mut payload).map_err(Error::Ingest)?;
    FirmwareImage::from_bytes(payload, declared_capacity, metadata)
}

/// True iff the recomputed digest of the payload equals `expected`,
/// byte for byte.
pub fn verify_digest(image: &FirmwareImage, expected: &Digest) -> bool {
    Digest::of(image.payload()) == *expected
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> AcquisitionMetadata {
        AcquisitionMetadata::for_model("HS175D").unwrap()
    }

    #[test]
    fn empty_stream_hashes_to_reference_vector() {
        let img = ingest_image(std::io::empty(), 8 * 1024 * 1024, meta()).unwrap();
        assert_eq!(img.len(), 0);
        assert_eq!(
            img.digest().to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn abc_stream_hashes_to_reference_vector() {
        let img = ingest_image(&b"abc"[..], 8 * 1024 * 1024, meta()).unwrap();
        assert_eq!(
            img.digest().to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn zero_capacity_is_an_argument_error() {
        let err = ingest_image(std::io::empty(), 0, meta()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn undersized_payload_is_not_an_ingestion_error() {
        let img = FirmwareImage::from_bytes(vec![0u8; 100], 16 * 1024 * 1024, meta()).unwrap();
        assert_eq!(img.len(), 100);
        assert_eq!(img.declared_capacity(), 16 * 1024 * 1024);
    }

    #[test]
    fn verify_digest_identity_and_mutation() {
        let img = FirmwareImage::from_bytes(vec![7u8; 4096], 4096, meta()).unwrap();
        assert!(verify_digest(&img, img.digest()));

        let mut bytes = img.payload().to_vec();
        bytes[100] ^= 0x01;
        let mutated = FirmwareImage::from_bytes(bytes, 4096, meta()).unwrap();
        assert!(!verify_digest(&mutated, img.digest()));
        assert_ne!(mutated.digest(), img.digest());
    }

    #[test]
    fn digest_round_trips_through_hex() {
        let d = Digest::of(b"round trip");
        let parsed: Digest = d.to_hex().parse().unwrap();
        assert_eq!(parsed, d);
        assert_eq!(d.to_hex().len(), 64);
    }

    #[test]
    fn digest_rejects_bad_hex() {
        assert!("zz".repeat(32).parse::<Digest>().is_err());
        assert!("abcd".parse::<Digest>().is_err());
    }

    #[test]
    fn metadata_round_trips_through_json() {
        let mut m = meta();
        m.interface = Interface::Spi;
        m.fixture = Fixture::Hook;
        m.power_source = PowerSource::Bench;
        m.notes = "clip repositioned twice".into();
        let json = serde_json::to_string(&m).unwrap();
        let back: AcquisitionMetadata = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_device_model_is_rejected() {
        assert!(AcquisitionMetadata::for_model("").is_err());
    }
}
