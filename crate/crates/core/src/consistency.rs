//! Cross-dump consistency: digest equality, first divergent byte, and
//! signature-map agreement between two reads of the same target.

use serde::{Deserialize, Serialize};

use crate::image::FirmwareImage;
use crate::sig::{self, ScanOptions, SignatureCatalog, SignatureFormat};

/// Which input a delta entry was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresentIn {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureDelta {
    pub offset: u64,
    pub format: SignatureFormat,
    pub present_in: PresentIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub digest_equal: bool,
    /// Lowest byte offset where the payloads differ; when one payload is a
    /// strict prefix of the other this is the shorter length. `None` means
    /// byte-identical.
    pub first_divergence: Option<u64>,
    pub signature_map_equal: bool,
    pub signature_deltas: Vec<SignatureDelta>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.digest_equal && self.signature_map_equal
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        match self.first_divergence {
            None if self.signature_map_equal => "CONSISTENT".to_string(),
            None => "CONSISTENT BYTES, SIGNATURE MAPS DIFFER".to_string(),
            Some(off) => format!("DIVERGES AT {off:#x}"),
        }
    }
}

/// Compare two dumps byte-for-byte and by signature map. Lengths may
/// differ; a truncated read diverges at the shorter length.
pub fn compare(a: &FirmwareImage, b: &FirmwareImage) -> ConsistencyReport {
    let digest_equal = a.digest() == b.digest();
    let first_divergence = first_divergence(a.payload(), b.payload());

    let catalog = SignatureCatalog::builtin();
    let opts = ScanOptions::default();
    let map_a = sig::signature_map(&sig::scan(a, &catalog, &opts).hits);
    let map_b = sig::signature_map(&sig::scan(b, &catalog, &opts).hits);
    let signature_map_equal = map_a == map_b;

    let mut signature_deltas: Vec<SignatureDelta> = Vec::new();
    if !signature_map_equal {
        for &(offset, format) in map_a.iter().filter(|e| !map_b.contains(e)) {
            signature_deltas.push(SignatureDelta {
                offset,
                format,
                present_in: PresentIn::A,
            });
        }
        for &(offset, format) in map_b.iter().filter(|e| !map_a.contains(e)) {
            signature_deltas.push(SignatureDelta {
                offset,
                format,
                present_in: PresentIn::B,
            });
        }
        signature_deltas.sort_by_key(|d| (d.offset, d.format, d.present_in == PresentIn::B));
    }

    ConsistencyReport {
        digest_equal,
        first_divergence,
        signature_map_equal,
        signature_deltas,
    }
}

fn first_divergence(a: &[u8], b: &[u8]) -> Option<u64> {
    let common = a.len().min(b.len());
    // Compare in blocks so the fast path over identical prefixes is a
    // memcmp rather than a byte loop.
    const BLOCK: usize = 4096;
    let mut base = 0;
    while base < common {
        let end = (base + BLOCK).min(common);
        if a[base..end] != b[base..end] {
            for i in base..end {
                if a[i] != b[i] {
                    return Some(i as u64);
                }
            }
        }
        base = end;
    }
    if a.len() != b.len() {
        Some(common as u64)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::AcquisitionMetadata;
    use crate::image::{Fixture, Interface};

    fn image_of(bytes: Vec<u8>) -> FirmwareImage {
        FirmwareImage::from_bytes(
            bytes,
            1024 * 1024,
            AcquisitionMetadata::for_model("TEST").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identical_images_are_fully_consistent() {
        let img = image_of(vec![0x42; 65536]);
        let report = compare(&img, &img.clone());
        assert!(report.digest_equal);
        assert_eq!(report.first_divergence, None);
        assert!(report.signature_map_equal);
        assert!(report.signature_deltas.is_empty());
        assert_eq!(report.summary(), "CONSISTENT");
    }

    #[test]
    fn planted_flip_is_located() {
        let base = vec![0x42u8; 65536];
        let mut flipped = base.clone();
        flipped[0x1000] ^= 0x80;
        let report = compare(&image_of(base), &image_of(flipped));
        assert!(!report.digest_equal);
        assert_eq!(report.first_divergence, Some(0x1000));
        assert_eq!(report.summary(), "DIVERGES AT 0x1000");
    }

    #[test]
    fn metadata_differences_do_not_matter() {
        let bytes = vec![0x17u8; 32768];
        let mut meta_a = AcquisitionMetadata::for_model("HS175D").unwrap();
        meta_a.interface = Interface::Spi;
        meta_a.fixture = Fixture::Alligator;
        let mut meta_b = AcquisitionMetadata::for_model("HS175D").unwrap();
        meta_b.interface = Interface::Spi;
        meta_b.fixture = Fixture::Hook;
        let a = FirmwareImage::from_bytes(bytes.clone(), 32768, meta_a).unwrap();
        let b = FirmwareImage::from_bytes(bytes, 32768, meta_b).unwrap();
        let report = compare(&a, &b);
        assert!(report.digest_equal && report.signature_map_equal);
        assert_eq!(report.first_divergence, None);
    }

    #[test]
    fn strict_prefix_diverges_at_shorter_length() {
        let long = vec![0x99u8; 10000];
        let short = long[..6000].to_vec();
        let report = compare(&image_of(long), &image_of(short));
        assert!(!report.digest_equal);
        assert_eq!(report.first_divergence, Some(6000));
    }

    #[test]
    fn symmetry_of_equality_and_divergence() {
        let a = image_of((0..50_000u32).map(|i| (i % 251) as u8).collect());
        let mut bytes = a.payload().to_vec();
        bytes[47_000] = bytes[47_000].wrapping_add(1);
        let b = image_of(bytes);
        let ab = compare(&a, &b);
        let ba = compare(&b, &a);
        assert_eq!(ab.digest_equal, ba.digest_equal);
        assert_eq!(ab.first_divergence, ba.first_divergence);
        assert_eq!(ab.signature_map_equal, ba.signature_map_equal);
    }
}
