//! Independent oracles shared by the integration suites.
//!
//! These deliberately re-derive results through the dumbest possible
//! route: direct histogram arithmetic for entropy, and an every-offset
//! sweep for signature scanning. Production code paths must agree with
//! them.

use fwtriage_core::image::{AcquisitionMetadata, FirmwareImage};
use fwtriage_core::sig::{ScanOptions, SignatureCatalog, SignatureHit};
use fwtriage_core::synth::SplitMix64;

/// Brute-force Shannon entropy of one window: histogram, then the single
/// defining sum, accumulated from the top of the byte range down (the
/// reverse of the production order).
pub fn oracle_window_entropy(window: &[u8]) -> f64 {
    let mut counts = [0u64; 256];
    for &b in window {
        counts[b as usize] += 1;
    }
    let n = window.len() as f64;
    let mut h = 0.0f64;
    for value in (0..=255usize).rev() {
        let c = counts[value];
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// Brute-force profile pieces: per-window entropies, mean, population
/// standard deviation, and strict-threshold band fractions.
pub struct OracleProfile {
    pub entropies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub low_fraction: f64,
    pub high_fraction: f64,
}

pub fn oracle_profile(payload: &[u8], window: usize, low: f64, high: f64) -> OracleProfile {
    let entropies: Vec<f64> = payload
        .chunks(window)
        .filter(|w| w.len() == window)
        .map(oracle_window_entropy)
        .collect();
    let n = entropies.len() as f64;
    let mean = entropies.iter().sum::<f64>() / n;
    let std = (entropies.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n).sqrt();
    let low_fraction = entropies.iter().filter(|&&h| h < low).count() as f64 / n;
    let high_fraction = entropies.iter().filter(|&&h| h > high).count() as f64 / n;
    OracleProfile {
        entropies,
        mean,
        std,
        low_fraction,
        high_fraction,
    }
}

/// Exhaustive scanner: every structure offset is tested against every
/// catalog entry with the production validators.
pub fn oracle_scan(payload: &[u8], catalog: &SignatureCatalog, opts: &ScanOptions) -> Vec<SignatureHit> {
    let mut hits = Vec::new();
    for offset in 0..payload.len() {
        for entry in catalog.entries() {
            if let Some(hit) = fwtriage_core::sig::probe_entry(payload, offset, entry, opts) {
                hits.push(hit);
            }
        }
    }
    hits.sort_by_key(|h| (h.offset, h.format));
    hits
}

pub fn test_image(bytes: Vec<u8>, capacity: u64) -> FirmwareImage {
    FirmwareImage::from_bytes(
        bytes,
        capacity,
        AcquisitionMetadata::for_model("TEST").unwrap(),
    )
    .unwrap()
}

/// Mixed-content payload: seeded spans of constant, text-like, and random
/// bytes, representative of real dump layouts.
pub fn mixed_payload(seed: u64, len: usize) -> Vec<u8> {
    let mut rng = SplitMix64::new(seed);
    let mut out = vec![0u8; len];
    let mut cursor = 0;
    while cursor < len {
        let span = 256 + rng.next_below(16 * 1024) as usize;
        let end = (cursor + span).min(len);
        match rng.next_u64() % 4 {
            0 => out[cursor..end].fill(0xFF),
            1 => out[cursor..end].fill(0x00),
            2 => {
                for b in out[cursor..end].iter_mut() {
                    *b = 0x20 + (rng.next_u64() & 0x3F) as u8;
                }
            }
            _ => rng.fill_bytes(&mut out[cursor..end]),
        }
        cursor = end;
    }
    out
}
