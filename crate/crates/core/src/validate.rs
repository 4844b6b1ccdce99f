//! Three-tier dump validation and flash-layout region maps.
//!
//! Tier 1 checks the payload length against the declared capacity. Tier 2
//! checks digest self-consistency across repeated reads. Tier 3 classifies
//! content from the entropy profile and the signature scan. A dump is
//! VALIDATED only when all three tiers pass; everything else is
//! INCOMPLETE, but every tier is always evaluated and reported.

use serde::{Deserialize, Serialize};

use crate::entropy::{self, EntropyProfile};
use crate::error::{Error, Result};
use crate::image::{Digest, FirmwareImage};
use crate::sig::{self, FormatClass, ScanOptions, ScanReport, SignatureCatalog, SignatureHit};

/// Low-band fraction at or above which a hit-free image counts as erased.
pub const ERASED_LOW_FRACTION: f64 = 0.85;
/// High-band fraction at or above which validated firmware is "dense".
pub const DENSE_HIGH_FRACTION: f64 = 0.5;
/// Low-band fraction at or above which validated firmware is "sparse".
pub const SPARSE_LOW_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TierOutcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConsistencyOutcome {
    Pass,
    Fail,
    Unevaluated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContentClass {
    ValidatedFirmware,
    Erased,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LayoutCharacter {
    Dense,
    Sparse,
    Empty,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverallStatus {
    Validated,
    Incomplete,
}

/// The full three-tier result for a set of reads of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub tier1: TierOutcome,
    pub tier2: ConsistencyOutcome,
    pub tier3: ContentClass,
    pub layout_character: LayoutCharacter,
    pub overall: OverallStatus,
    /// Human-auditable notes: window statistics, signatures, and digests
    /// the verdict rests on.
    pub evidence: Vec<String>,
}

/// Combine tier results into a verdict. The overall status is derived, not
/// chosen: VALIDATED exactly when tier1 and tier2 pass and tier3 found
/// validated firmware.
pub fn assemble_verdict(
    tier1: TierOutcome,
    tier2: ConsistencyOutcome,
    tier3: ContentClass,
    layout_character: LayoutCharacter,
    evidence: Vec<String>,
) -> ValidationVerdict {
    let overall = if tier1 == TierOutcome::Pass
        && tier2 == ConsistencyOutcome::Pass
        && tier3 == ContentClass::ValidatedFirmware
    {
        OverallStatus::Validated
    } else {
        OverallStatus::Incomplete
    };
    ValidationVerdict {
        tier1,
        tier2,
        tier3,
        layout_character,
        overall,
        evidence,
    }
}

/// Tier 1: the payload length must equal the declared capacity exactly.
pub fn tier1_size(image: &FirmwareImage) -> TierOutcome {
    if image.len() == image.declared_capacity() {
        TierOutcome::Pass
    } else {
        TierOutcome::Fail
    }
}

/// Tier 2: all digests from repeated reads must agree. Fewer than two
/// reads cannot self-corroborate and stay UNEVALUATED.
pub fn tier2_consistency(digests: &[Digest]) -> ConsistencyOutcome {
    match digests {
        [] | [_] => ConsistencyOutcome::Unevaluated,
        [first, rest @ ..] => {
            if rest.iter().all(|d| d == first) {
                ConsistencyOutcome::Pass
            } else {
                ConsistencyOutcome::Fail
            }
        }
    }
}

/// Tier 3: classify content from band fractions and signature classes.
///
/// Rules, in order:
/// (a) erased — low band covers ≥ 85% of windows and no kernel-,
///     filesystem-, or bootloader-class signatures exist;
/// (b) validated firmware — at least one kernel-class and one
///     filesystem-class signature;
/// (c) indeterminate otherwise.
pub fn tier3_content(
    profile: &EntropyProfile,
    scan: &ScanReport,
) -> Result<(ContentClass, LayoutCharacter)> {
    if profile.source_digest != scan.image_digest {
        return Err(Error::ProvenanceMismatch);
    }
    Ok(classify(profile, &scan.hits))
}

fn classify(profile: &EntropyProfile, hits: &[SignatureHit]) -> (ContentClass, LayoutCharacter) {
    let has_kernel = hits.iter().any(|h| h.format_class == FormatClass::Kernel);
    let has_fs = hits.iter().any(|h| h.format_class == FormatClass::Filesystem);
    let has_boot = hits
        .iter()
        .any(|h| h.format_class == FormatClass::BootloaderStage);
    let structurally_quiet = !(has_kernel || has_fs || has_boot);
    let low_dominated = profile.low_fraction >= ERASED_LOW_FRACTION;

    if low_dominated && structurally_quiet {
        (ContentClass::Erased, LayoutCharacter::Empty)
    } else if has_kernel && has_fs {
        let layout = if profile.high_fraction >= DENSE_HIGH_FRACTION {
            LayoutCharacter::Dense
        } else if profile.low_fraction >= SPARSE_LOW_FRACTION {
            LayoutCharacter::Sparse
        } else {
            LayoutCharacter::Mixed
        };
        (ContentClass::ValidatedFirmware, layout)
    } else if low_dominated {
        // The entropy picture says erased, but a stray structural hit
        // blocked rule (a).
        (ContentClass::Indeterminate, LayoutCharacter::Empty)
    } else {
        (ContentClass::Indeterminate, LayoutCharacter::Mixed)
    }
}

/// Run all three tiers over repeated reads of one target.
///
/// All images must share a device model. Tier 1 is reported from the first
/// image; disagreements across reads are noted in the evidence. Tier 3 is
/// computed from the first image (when tier 2 passes all reads are
/// byte-identical anyway).
pub fn validate(images: &[FirmwareImage]) -> Result<ValidationVerdict> {
    let Some(first) = images.first() else {
        return Err(Error::InvalidArgument(
            "validate needs at least one image".into(),
        ));
    };
    let model = &first.metadata().device_model;
    if images
        .iter()
        .any(|img| &img.metadata().device_model != model)
    {
        return Err(Error::InvalidArgument(
            "validate needs images of a single device model".into(),
        ));
    }

    let mut evidence = Vec::new();

    let tier1 = tier1_size(first);
    evidence.push(format!(
        "tier1: payload {} bytes vs declared {} -> {:?}",
        first.len(),
        first.declared_capacity(),
        tier1
    ));
    for (i, img) in images.iter().enumerate().skip(1) {
        if tier1_size(img) != tier1 || img.declared_capacity() != first.declared_capacity() {
            evidence.push(format!(
                "tier1: read {} disagrees ({} bytes vs declared {})",
                i,
                img.len(),
                img.declared_capacity()
            ));
        }
    }

    let digests: Vec<Digest> = images.iter().map(|img| *img.digest()).collect();
    let tier2 = tier2_consistency(&digests);
    match tier2 {
        ConsistencyOutcome::Pass => evidence.push(format!(
            "tier2: {} reads, identical digest {}",
            digests.len(),
            digests[0]
        )),
        ConsistencyOutcome::Fail => {
            let mut uniq: Vec<String> = digests.iter().map(|d| d.to_string()).collect();
            uniq.sort();
            uniq.dedup();
            evidence.push(format!(
                "tier2: {} reads, {} distinct digests",
                digests.len(),
                uniq.len()
            ));
        }
        ConsistencyOutcome::Unevaluated => {
            evidence.push("tier2: single read cannot self-corroborate".into())
        }
    }

    let catalog = SignatureCatalog::builtin();
    let opts = ScanOptions::default();
    let (tier3, layout) = match entropy::profile(first) {
        Ok(profile) => {
            let scan = sig::scan(first, &catalog, &opts);
            evidence.push(format!(
                "tier3: mean {:.3} b/B, std {:.3}, low {:.3}, high {:.3} over {} windows",
                profile.mean,
                profile.std,
                profile.low_fraction,
                profile.high_fraction,
                profile.window_count()
            ));
            let kernels = count_class(&scan.hits, FormatClass::Kernel);
            let filesystems = count_class(&scan.hits, FormatClass::Filesystem);
            let bootloaders = count_class(&scan.hits, FormatClass::BootloaderStage);
            evidence.push(format!(
                "tier3: {} hits ({} kernel, {} filesystem, {} bootloader)",
                scan.hits.len(),
                kernels,
                filesystems,
                bootloaders
            ));
            tier3_content(&profile, &scan)?
        }
        Err(Error::InsufficientData { needed, actual }) => {
            evidence.push(format!(
                "tier3: image too small to profile ({actual} bytes, need {needed})"
            ));
            (ContentClass::Indeterminate, LayoutCharacter::Mixed)
        }
        Err(e) => return Err(e),
    };
    evidence.push(format!("tier3: {tier3:?} ({layout:?})"));

    Ok(assemble_verdict(tier1, tier2, tier3, layout, evidence))
}

fn count_class(hits: &[SignatureHit], class: FormatClass) -> usize {
    hits.iter().filter(|h| h.format_class == class).count()
}

/// Entropy band of one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Band {
    Low,
    Mid,
    High,
}

impl Band {
    pub fn glyph(self) -> char {
        match self {
            Band::Low => '.',
            Band::Mid => '-',
            Band::High => '#',
        }
    }
}

/// Band of each window in the profile, using the profile's thresholds.
pub fn window_bands(profile: &EntropyProfile) -> Vec<Band> {
    profile
        .window_entropies
        .iter()
        .map(|&h| {
            if h < profile.low_threshold {
                Band::Low
            } else if h > profile.high_threshold {
                Band::High
            } else {
                Band::Mid
            }
        })
        .collect()
}

/// A run of consecutive windows sharing a band, with the formats of any
/// overlapping signatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub start: u64,
    pub end: u64,
    pub dominant_band: Band,
    pub labels: Vec<String>,
}

/// Contiguous, non-overlapping regions covering the profiled prefix of the
/// image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub window_size: u64,
    pub regions: Vec<Region>,
}

/// Merge consecutive same-band windows into regions and attach the formats
/// of signatures whose claimed extent overlaps each region.
pub fn layout_map(profile: &EntropyProfile, scan: &ScanReport) -> Result<RegionMap> {
    if profile.source_digest != scan.image_digest {
        return Err(Error::ProvenanceMismatch);
    }
    let bands = window_bands(profile);
    let mut regions: Vec<Region> = Vec::new();
    for (i, band) in bands.iter().enumerate() {
        let start = i as u64 * profile.window_size;
        let end = start + profile.window_size;
        match regions.last_mut() {
            Some(last) if last.dominant_band == *band => last.end = end,
            _ => regions.push(Region {
                start,
                end,
                dominant_band: *band,
                labels: Vec::new(),
            }),
        }
    }

    for region in &mut regions {
        let mut labels: Vec<String> = scan
            .hits
            .iter()
            .filter(|h| {
                let ext = h.extent(scan.image_len);
                ext.start < region.end && ext.end > region.start
            })
            .map(|h| h.format.name().to_string())
            .collect();
        labels.sort();
        labels.dedup();
        region.labels = labels;
    }

    Ok(RegionMap {
        window_size: profile.window_size,
        regions,
    })
}

/// Fixed-width ASCII layout bar: one character per group of windows, `.`
/// low, `-` mid, `#` high. Groups take the band holding the most windows;
/// ties go to the higher band.
pub fn render_bar(profile: &EntropyProfile, width: usize) -> String {
    let bands = window_bands(profile);
    if bands.is_empty() || width == 0 {
        return String::new();
    }
    let per_char = bands.len().div_ceil(width);
    let mut out = String::with_capacity(width);
    for group in bands.chunks(per_char) {
        let mut counts = [0usize; 3];
        for b in group {
            counts[*b as usize] += 1;
        }
        let band = if counts[2] >= counts[1] && counts[2] >= counts[0] {
            Band::High
        } else if counts[1] >= counts[0] {
            Band::Mid
        } else {
            Band::Low
        };
        out.push(band.glyph());
    }
    out
}
