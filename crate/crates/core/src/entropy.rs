//! Sliding-window Shannon entropy profiles.
//!
//! The image is partitioned into consecutive non-overlapping windows
//! (default 4096 bytes); each window gets a Shannon entropy in bits/byte
//! from its byte-value histogram. A trailing partial window is dropped and
//! its length recorded, so per-window statistics stay comparable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Digest, FirmwareImage};

pub const DEFAULT_WINDOW_SIZE: usize = 4096;
pub const DEFAULT_LOW_THRESHOLD: f64 = 1.0;
pub const DEFAULT_HIGH_THRESHOLD: f64 = 7.0;

/// Per-window entropy series plus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub window_size: u64,
    pub window_offsets: Vec<u64>,
    pub window_entropies: Vec<f64>,
    /// Arithmetic mean of the window entropies, bits/byte.
    pub mean: f64,
    /// Population standard deviation, bits/byte.
    pub std: f64,
    /// Fraction of windows with entropy strictly below `low_threshold`.
    pub low_fraction: f64,
    /// Fraction of windows with entropy strictly above `high_threshold`.
    pub high_fraction: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
    /// Bytes of trailing partial window excluded from the series.
    pub dropped_trailing_bytes: u64,
    /// Digest of the image the profile was computed from.
    pub source_digest: Digest,
}

impl EntropyProfile {
    pub fn window_count(&self) -> usize {
        self.window_entropies.len()
    }

    /// Length of the profiled prefix of the image (windows only, without
    /// the dropped tail).
    pub fn profiled_len(&self) -> u64 {
        self.window_size * self.window_entropies.len() as u64
    }

    /// Build a profile from an explicit entropy series, computing the
    /// summary statistics. Used by higher layers that synthesize profiles.
    pub fn from_window_entropies(
        window_size: u64,
        entropies: Vec<f64>,
        low_threshold: f64,
        high_threshold: f64,
        dropped_trailing_bytes: u64,
        source_digest: Digest,
    ) -> Self {
        let offsets = (0..entropies.len() as u64).map(|i| i * window_size).collect();
        let (mean, std) = mean_and_population_std(&entropies);
        let n = entropies.len().max(1) as f64;
        let low = entropies.iter().filter(|&&h| h < low_threshold).count() as f64 / n;
        let high = entropies.iter().filter(|&&h| h > high_threshold).count() as f64 / n;
        EntropyProfile {
            window_size,
            window_offsets: offsets,
            window_entropies: entropies,
            mean,
            std,
            low_fraction: low,
            high_fraction: high,
            low_threshold,
            high_threshold,
            dropped_trailing_bytes,
            source_digest,
        }
    }
}

/// Output encoding for [`emit_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFormat {
    Csv,
    Json,
}

/// Shannon entropy of one window in bits/byte, from the byte-value
/// histogram. Zero-probability symbols contribute nothing; the result is
/// always in [0, 8].
pub fn window_entropy(window: &[u8]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::InvalidArgument(
            "entropy window must be non-empty".into(),
        ));
    }
    Ok(entropy_of(window))
}

fn entropy_of(window: &[u8]) -> f64 {
    let mut counts = [0u32; 256];
    for &b in window {
        counts[b as usize] += 1;
    }
    let n = window.len() as f64;
    let mut acc = 0.0f64;
    for &c in counts.iter() {
        if c > 0 {
            let p = c as f64 / n;
            acc -= p * p.log2();
        }
    }
    // A single-symbol window yields -0.0; normalize so renderings and exact
    // comparisons see +0.0.
    if acc == 0.0 {
        0.0
    } else {
        acc
    }
}

/// Entropy of each full `window_size` window of `payload`, in offset order.
/// Dispatches to the parallel path when the `parallel` feature is enabled;
/// results are bit-identical either way.
pub fn window_entropies(payload: &[u8], window_size: usize) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        // chunks_exact drops the trailing partial window.
        payload
            .par_chunks_exact(window_size)
            .map(entropy_of)
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        window_entropies_sequential(payload, window_size)
    }
}

/// Single-threaded window entropy series. Always available; the parallel
/// path must agree with it bit for bit.
pub fn window_entropies_sequential(payload: &[u8], window_size: usize) -> Vec<f64> {
    payload.chunks_exact(window_size).map(entropy_of).collect()
}

fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (norm_zero(mean), norm_zero(std))
}

fn norm_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Profile an image with explicit parameters.
///
/// Band fractions use strict comparisons: low is `H < low_threshold`, high
/// is `H > high_threshold`.
pub fn profile_with(
    image: &FirmwareImage,
    window_size: usize,
    low_threshold: f64,
    high_threshold: f64,
) -> Result<EntropyProfile> {
    if window_size == 0 {
        return Err(Error::InvalidArgument("window_size must be > 0".into()));
    }
    let payload = image.payload();
    if payload.len() < window_size {
        return Err(Error::InsufficientData {
            needed: window_size as u64,
            actual: payload.len() as u64,
        });
    }
    let entropies = window_entropies(payload, window_size);
    let dropped = (payload.len() % window_size) as u64;
    Ok(EntropyProfile::from_window_entropies(
        window_size as u64,
        entropies,
        low_threshold,
        high_threshold,
        dropped,
        *image.digest(),
    ))
}

/// Profile an image with the default 4096-byte window and 1.0/7.0
/// bits/byte band thresholds.
pub fn profile(image: &FirmwareImage) -> Result<EntropyProfile> {
    profile_with(
        image,
        DEFAULT_WINDOW_SIZE,
        DEFAULT_LOW_THRESHOLD,
        DEFAULT_HIGH_THRESHOLD,
    )
}

/// Serialize a profile. CSV carries the per-window series with six-decimal
/// entropies; JSON carries every profile field. Both are deterministic.
pub fn emit_profile(profile: &EntropyProfile, format: ProfileFormat) -> Vec<u8> {
    match format {
        ProfileFormat::Csv => {
            let mut out = String::from("offset,entropy_bits_per_byte\n");
            for (off, h) in profile.window_offsets.iter().zip(&profile.window_entropies) {
                out.push_str(&format!("{off},{h:.6}\n"));
            }
            out.into_bytes()
        }
        ProfileFormat::Json => {
            let mut bytes =
                serde_json::to_vec_pretty(profile).expect("profile serialization cannot fail");
            bytes.push(b'\n');
            bytes
        }
    }
}

/// Parse a profile back from its JSON emission.
pub fn parse_profile_json(bytes: &[u8]) -> Result<EntropyProfile> {
    serde_json::from_slice(bytes).map_err(|e| Error::InvalidArgument(format!("bad profile JSON: {e}")))
}
