//! Deterministic synthetic dump generation.
//!
//! Generators produce the three layout archetypes — a dense Linux-style
//! image, a sparse flash with filesystem islands, and a near-empty erased
//! part — plus byte-level corruption modes standing in for the physical
//! failure classes (unstable contact, truncation, sector damage).
//!
//! All randomness flows from SplitMix64 with its published constants, so a
//! given seed yields bit-identical fixtures on any platform or
//! implementation. After planting, each image is scrubbed until a full
//! scan finds exactly the planted signatures and nothing else; the
//! returned manifest is therefore ground truth for scanner tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{AcquisitionMetadata, Digest, FirmwareImage};
use crate::sig::{
    self, FieldMap, ScanOptions, SignatureCatalog, SignatureFormat,
};

const WINDOW: usize = 4096;

/// SplitMix64: state advances by the golden-gamma constant and each output
/// is finalized with the Stafford mix13 multipliers. Chosen for being tiny,
/// fully specified, and trivially portable across languages.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        self.next_u64() % bound
    }

    pub fn fill_bytes(&mut self, buf: &mut [u8]) {
        let mut chunks = buf.chunks_exact_mut(8);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.next_u64().to_le_bytes());
        }
        let rem = chunks.into_remainder();
        if !rem.is_empty() {
            let bytes = self.next_u64().to_le_bytes();
            rem.copy_from_slice(&bytes[..rem.len()]);
        }
    }
}

/// Content style for filler spans and placement bodies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpanStyle {
    /// Full-range seeded bytes; profiles into the high band.
    Random,
    Constant(u8),
    /// Printable 64-symbol alphabet (0x20..=0x5F); profiles into the mid
    /// band, like code or config text.
    Text,
}

fn paint(buf: &mut [u8], style: SpanStyle, rng: &mut SplitMix64) {
    match style {
        SpanStyle::Random => rng.fill_bytes(buf),
        SpanStyle::Constant(v) => buf.fill(v),
        SpanStyle::Text => {
            for b in buf.iter_mut() {
                *b = 0x20 + (rng.next_u64() & 0x3F) as u8;
            }
        }
    }
}

/// Filler region painted before any placements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillSpan {
    pub start: usize,
    pub len: usize,
    pub style: SpanStyle,
}

/// Header parameters for one planted signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlacementSpec {
    Fdt {
        total_size: u32,
        version: u32,
    },
    Gzip {
        original_name: Option<String>,
        mtime: u32,
    },
    UImage {
        name: String,
        time: u32,
        data_size: u32,
        load: u32,
        entry: u32,
        os: u8,
        arch: u8,
        image_type: u8,
        compression: u8,
    },
    AndroidBootimg {
        kernel_size: u32,
        page_size: u32,
    },
    ArmZimage {
        start: u32,
        end: u32,
    },
    Squashfs {
        inode_count: u32,
        mod_time: u32,
        block_size: u32,
        compression_id: u16,
        bytes_used: u64,
    },
    Jffs2Node {
        node_type: u16,
        total_len: u32,
    },
    Zlib {
        level: u8,
    },
    Lzma {
        dict_size: u32,
        uncompressed_size: u64,
    },
    Bmp {
        width: u32,
        height: u32,
        bits_per_pixel: u16,
    },
}

impl PlacementSpec {
    pub fn format(&self) -> SignatureFormat {
        match self {
            PlacementSpec::Fdt { .. } => SignatureFormat::Fdt,
            PlacementSpec::Gzip { .. } => SignatureFormat::Gzip,
            PlacementSpec::UImage { .. } => SignatureFormat::Uimage,
            PlacementSpec::AndroidBootimg { .. } => SignatureFormat::AndroidBootimg,
            PlacementSpec::ArmZimage { .. } => SignatureFormat::ArmZimage,
            PlacementSpec::Squashfs { .. } => SignatureFormat::Squashfs,
            PlacementSpec::Jffs2Node { .. } => SignatureFormat::Jffs2Node,
            PlacementSpec::Zlib { .. } => SignatureFormat::Zlib,
            PlacementSpec::Lzma { .. } => SignatureFormat::Lzma,
            PlacementSpec::Bmp { .. } => SignatureFormat::Bmp,
        }
    }

    /// Bytes the written header occupies (the scrubber must not touch
    /// these).
    pub fn header_len(&self) -> usize {
        match self {
            PlacementSpec::Fdt { .. } => 40,
            PlacementSpec::Gzip { original_name, .. } => {
                10 + original_name.as_ref().map_or(0, |n| n.len() + 1)
            }
            PlacementSpec::UImage { .. } => 64,
            PlacementSpec::AndroidBootimg { .. } => 40,
            PlacementSpec::ArmZimage { .. } => 0x30,
            PlacementSpec::Squashfs { .. } => 96,
            PlacementSpec::Jffs2Node { .. } => 12,
            PlacementSpec::Zlib { .. } => 2,
            PlacementSpec::Lzma { .. } => 13,
            PlacementSpec::Bmp { .. } => 54,
        }
    }

    /// Bytes the validator requires to be present from the placement
    /// offset (size fields included), used for bounds checking.
    pub fn required_span(&self) -> usize {
        match self {
            PlacementSpec::Fdt { total_size, .. } => (*total_size as usize).max(40),
            PlacementSpec::UImage { data_size, .. } => 64 + *data_size as usize,
            PlacementSpec::AndroidBootimg {
                kernel_size,
                page_size,
            } => (*page_size + *kernel_size) as usize,
            PlacementSpec::Squashfs { bytes_used, .. } => (*bytes_used as usize).max(96),
            PlacementSpec::Jffs2Node { total_len, .. } => (*total_len as usize).max(12),
            other => other.header_len(),
        }
    }
}

/// One planted structure: header at `offset`, then `body_len` bytes of
/// `body_style` content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub offset: usize,
    pub spec: PlacementSpec,
    pub body_len: usize,
    pub body_style: SpanStyle,
}

impl Placement {
    fn extent(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.spec.header_len() + self.body_len
    }

    fn protected(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.spec.header_len()
    }
}

/// Full recipe for a synthetic image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixturePlan {
    pub archetype: String,
    pub device_model: String,
    pub total_size: usize,
    pub declared_capacity: u64,
    pub fill: u8,
    pub seed: u64,
    pub fill_spans: Vec<FillSpan>,
    pub placements: Vec<Placement>,
}

impl FixturePlan {
    fn validate(&self) -> Result<()> {
        for span in &self.fill_spans {
            if span.start + span.len > self.total_size {
                return Err(Error::InvalidArgument(format!(
                    "fill span [{:#x}, {:#x}) exceeds total size {:#x}",
                    span.start,
                    span.start + span.len,
                    self.total_size
                )));
            }
        }
        let mut extents: Vec<(std::ops::Range<usize>, SignatureFormat)> = Vec::new();
        for p in &self.placements {
            if p.offset + p.spec.required_span() > self.total_size
                || p.extent().end > self.total_size
            {
                return Err(Error::InvalidArgument(format!(
                    "placement {} at {:#x} exceeds total size {:#x}",
                    p.spec.format(),
                    p.offset,
                    self.total_size
                )));
            }
            for (other, fmt) in &extents {
                let e = p.extent();
                if e.start < other.end && other.start < e.end {
                    return Err(Error::InvalidArgument(format!(
                        "placement {} at {:#x} overlaps a {} placement",
                        p.spec.format(),
                        p.offset,
                        fmt
                    )));
                }
            }
            extents.push((p.extent(), p.spec.format()));
        }
        Ok(())
    }
}

/// Expected scan result recorded in a fixture manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedHit {
    pub offset: u64,
    pub offset_hex: String,
    pub format: SignatureFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSummary {
    pub offset: u64,
    pub offset_hex: String,
    pub format: SignatureFormat,
    pub fields: FieldMap,
}

/// Ground truth shipped with every generated fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub archetype: String,
    pub seed: u64,
    pub total_size: u64,
    pub declared_capacity: u64,
    pub digest: Digest,
    pub expected_hits: Vec<ExpectedHit>,
    pub placements: Vec<PlacementSummary>,
}

#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub image: FirmwareImage,
    pub manifest: FixtureManifest,
}

/// Byte value scrub mutations write. Not the first byte of any catalog
/// magic and not a member of any multi-byte magic, so a scrub can kill a
/// match but never seed a new one.
const SCRUB_BYTE: u8 = 0xE9;

const MAX_SCRUB_PASSES: usize = 32;
const MAX_NONCES: u64 = 64;

/// Build an image from a plan: paint fill and spans, paint bodies, write
/// headers, then scrub accidental signatures until a scan reports exactly
/// the planted set.
pub fn build_plan(plan: &FixturePlan) -> Result<SynthFixture> {
    plan.validate()?;
    let catalog = SignatureCatalog::builtin();
    let opts = ScanOptions::default();

    let mut expected: Vec<(u64, SignatureFormat)> = plan
        .placements
        .iter()
        .map(|p| (p.offset as u64, p.spec.format()))
        .collect();
    expected.sort();

    let protected: Vec<std::ops::Range<usize>> =
        plan.placements.iter().map(|p| p.protected()).collect();

    for nonce in 0..MAX_NONCES {
        let effective_seed = plan.seed ^ nonce.wrapping_mul(0xA24B_AED4_963E_E407);
        let mut buf = assemble(plan, effective_seed);
        if scrub(&mut buf, &catalog, &opts, &expected, &protected) {
            let found = sig::scan_payload(&buf, &catalog, &opts);
            let found_map: Vec<(u64, SignatureFormat)> =
                found.iter().map(|h| (h.offset, h.format)).collect();
            if found_map != expected {
                return Err(Error::InvalidArgument(format!(
                    "plan is not scan-closed: expected {} planted signatures, scan found {}",
                    expected.len(),
                    found_map.len()
                )));
            }
            return finish(plan, buf, found);
        }
    }
    Err(Error::InvalidArgument(
        "fixture generation failed to converge; a planted header shadows every scrub site".into(),
    ))
}

fn assemble(plan: &FixturePlan, effective_seed: u64) -> Vec<u8> {
    let mut rng = SplitMix64::new(effective_seed);
    let mut buf = vec![plan.fill; plan.total_size];
    for span in &plan.fill_spans {
        paint(&mut buf[span.start..span.start + span.len], span.style, &mut rng);
    }
    for p in &plan.placements {
        let body_start = p.offset + p.spec.header_len();
        paint(&mut buf[body_start..body_start + p.body_len], p.body_style, &mut rng);
    }
    for p in &plan.placements {
        write_placement_header(&mut buf, p);
    }
    buf
}

fn write_placement_header(buf: &mut [u8], p: &Placement) {
    let at = p.offset;
    match &p.spec {
        PlacementSpec::Fdt {
            total_size,
            version,
        } => sig::fdt::write_header(&mut buf[at..], *total_size, *version),
        PlacementSpec::Gzip {
            original_name,
            mtime,
        } => {
            let header = sig::gzip::header_bytes(original_name.as_deref(), *mtime);
            buf[at..at + header.len()].copy_from_slice(&header);
        }
        PlacementSpec::UImage {
            name,
            time,
            data_size,
            load,
            entry,
            os,
            arch,
            image_type,
            compression,
        } => {
            let data_start = at + 64;
            let data = buf[data_start..data_start + *data_size as usize].to_vec();
            let spec = sig::uimage::HeaderSpec {
                name,
                time: *time,
                data_size: *data_size,
                load: *load,
                entry: *entry,
                os: *os,
                arch: *arch,
                image_type: *image_type,
                compression: *compression,
            };
            sig::uimage::write_header(&mut buf[at..], &spec, &data);
        }
        PlacementSpec::AndroidBootimg {
            kernel_size,
            page_size,
        } => sig::bootimg::write_header(&mut buf[at..], *kernel_size, *page_size),
        PlacementSpec::ArmZimage { start, end } => {
            // ARM NOP prologue ahead of the magic words keeps the
            // protected extent free of seed-dependent bytes.
            for chunk in buf[at..at + 0x24].chunks_exact_mut(4) {
                chunk.copy_from_slice(&[0x00, 0x00, 0xA0, 0xE1]);
            }
            sig::zimage::write_header(&mut buf[at..], *start, *end);
        }
        PlacementSpec::Squashfs {
            inode_count,
            mod_time,
            block_size,
            compression_id,
            bytes_used,
        } => {
            let spec = sig::squashfs::SuperblockSpec {
                inode_count: *inode_count,
                mod_time: *mod_time,
                block_size: *block_size,
                compression_id: *compression_id,
                bytes_used: *bytes_used,
            };
            sig::squashfs::write_header(&mut buf[at..], &spec);
        }
        PlacementSpec::Jffs2Node {
            node_type,
            total_len,
        } => sig::jffs2::write_header(&mut buf[at..], *node_type, *total_len),
        PlacementSpec::Zlib { level } => {
            let header = sig::zlib_stream::header_bytes(*level);
            buf[at..at + 2].copy_from_slice(&header);
        }
        PlacementSpec::Lzma {
            dict_size,
            uncompressed_size,
        } => sig::lzma::write_header(&mut buf[at..], *dict_size, *uncompressed_size),
        PlacementSpec::Bmp {
            width,
            height,
            bits_per_pixel,
        } => sig::bmp::write_header(&mut buf[at..], *width, *height, *bits_per_pixel),
    }
}

/// Kill accidental signatures by overwriting one unprotected magic byte
/// per stray hit, rescanning until the scan matches the planted set.
/// Returns false when a stray hit has every magic byte inside a protected
/// header (the caller rebuilds with a new nonce).
fn scrub(
    buf: &mut [u8],
    catalog: &SignatureCatalog,
    opts: &ScanOptions,
    expected: &[(u64, SignatureFormat)],
    protected: &[std::ops::Range<usize>],
) -> bool {
    let anchor_of = |format: SignatureFormat| {
        catalog
            .entries()
            .iter()
            .find(|e| e.format == format)
            .map(|e| (e.anchor_offset, e.magic.len()))
            .expect("builtin catalog covers every format")
    };
    for _ in 0..MAX_SCRUB_PASSES {
        let found = sig::scan_payload(buf, catalog, opts);
        let extras: Vec<_> = found
            .iter()
            .filter(|h| !expected.contains(&(h.offset, h.format)))
            .collect();
        if extras.is_empty() {
            return true;
        }
        for extra in extras {
            let (anchor, magic_len) = anchor_of(extra.format);
            let magic_start = extra.offset as usize + anchor;
            let site = (magic_start..magic_start + magic_len)
                .find(|i| !protected.iter().any(|r| r.contains(i)));
            match site {
                Some(i) => buf[i] = SCRUB_BYTE,
                None => return false,
            }
        }
    }
    false
}

fn finish(plan: &FixturePlan, buf: Vec<u8>, hits: Vec<sig::SignatureHit>) -> Result<SynthFixture> {
    let opts = ScanOptions::default();
    let mut placements = Vec::with_capacity(plan.placements.len());
    for p in &plan.placements {
        let parsed = sig::parse_at(p.spec.format(), &buf, p.offset, &opts)?;
        placements.push(PlacementSummary {
            offset: p.offset as u64,
            offset_hex: format!("{:#x}", p.offset),
            format: p.spec.format(),
            fields: parsed.fields,
        });
    }
    let expected_hits = hits
        .iter()
        .map(|h| ExpectedHit {
            offset: h.offset,
            offset_hex: format!("{:#x}", h.offset),
            format: h.format,
        })
        .collect();

    let mut metadata = AcquisitionMetadata::for_model(plan.device_model.clone())?;
    metadata.notes = format!("synthetic {} fixture, seed {}", plan.archetype, plan.seed);
    let image = FirmwareImage::from_bytes(buf, plan.declared_capacity, metadata)?;
    let manifest = FixtureManifest {
        archetype: plan.archetype.clone(),
        seed: plan.seed,
        total_size: plan.total_size as u64,
        declared_capacity: plan.declared_capacity,
        digest: *image.digest(),
        expected_hits,
        placements,
    };
    Ok(SynthFixture { image, manifest })
}

// 2023-07-10T00:00:00Z and 2022-05-31T00:00:00Z
const DENSE_BUILD_TIME: u32 = 1_688_947_200;
const SPARSE_BUILD_TIME: u32 = 1_653_955_200;

/// Plan for the dense 16 MiB archetype: a packed boot chain (device trees,
/// gzip bootloader stages, Android boot image wrapping a zImage, SquashFS
/// root, BMP splash resources) over mostly high-entropy content.
pub fn dense_plan(seed: u64) -> FixturePlan {
    let total = 16 * 1024 * 1024;
    let mut fill_spans = vec![FillSpan {
        start: 0x29000,
        len: 0xDCF000 - 0x29000,
        style: SpanStyle::Random,
    }];
    // a few half-and-half windows between the filesystem end and the
    // erased tail
    for w in 0..8 {
        let start = 0xDCF000 + w * WINDOW;
        fill_spans.push(FillSpan {
            start,
            len: WINDOW / 2,
            style: SpanStyle::Random,
        });
        fill_spans.push(FillSpan {
            start: start + WINDOW / 2,
            len: WINDOW / 2,
            style: SpanStyle::Constant(0x00),
        });
    }
    fill_spans.push(FillSpan {
        start: 0xDD7000,
        len: total - 0xDD7000,
        style: SpanStyle::Constant(0xFF),
    });

    let kernel_size = 2_790_992;
    let placements = vec![
        Placement {
            offset: 0x29EE4,
            spec: PlacementSpec::Fdt {
                total_size: 6_455,
                version: 17,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x40E00,
            spec: PlacementSpec::Gzip {
                original_name: Some("u-boot-nodtb.bin".into()),
                mtime: DENSE_BUILD_TIME,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x6AA00,
            spec: PlacementSpec::Gzip {
                original_name: Some("tee.bin".into()),
                mtime: DENSE_BUILD_TIME,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x7D800,
            spec: PlacementSpec::Fdt {
                total_size: 10_931,
                version: 17,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0xB0000,
            spec: PlacementSpec::AndroidBootimg {
                kernel_size,
                page_size: 2048,
            },
            body_len: 2048 - 40,
            body_style: SpanStyle::Constant(0x00),
        },
        Placement {
            offset: 0xB0800,
            spec: PlacementSpec::ArmZimage {
                start: 0x8000,
                end: 0x8000 + kernel_size,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x35A800,
            spec: PlacementSpec::Fdt {
                total_size: 92_240,
                version: 17,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x371200,
            spec: PlacementSpec::Bmp {
                width: 654,
                height: 270,
                bits_per_pixel: 8,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x374600,
            spec: PlacementSpec::Bmp {
                width: 654,
                height: 270,
                bits_per_pixel: 8,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
        Placement {
            offset: 0x3B0000,
            spec: PlacementSpec::Squashfs {
                inode_count: 1_054,
                mod_time: DENSE_BUILD_TIME,
                block_size: 131_072,
                compression_id: 4,
                bytes_used: 10_609_848,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        },
    ];

    FixturePlan {
        archetype: "dense".into(),
        device_model: "SYNTH-DENSE".into(),
        total_size: total,
        declared_capacity: total as u64,
        fill: 0x00,
        seed,
        fill_spans,
        placements,
    }
}

/// Plan for the sparse 8 MiB archetype: erased fill around a uImage
/// kernel, filesystem-node islands across the upper range, and a strip of
/// zlib segments.
pub fn sparse_plan(seed: u64) -> FixturePlan {
    let total = 8 * 1024 * 1024;
    let mut placements = vec![Placement {
        offset: 0x90000,
        spec: PlacementSpec::UImage {
            name: "Linux-4.9.129".into(),
            time: SPARSE_BUILD_TIME,
            data_size: 0x20_0000,
            load: 0x8000_8000,
            entry: 0x8000_8000,
            os: 5,
            arch: 2,
            image_type: 2,
            compression: 0,
        },
        body_len: 0x20_0000,
        body_style: SpanStyle::Text,
    }];

    // Filesystem-node islands: runs of back-to-back nodes, spread across
    // the upper range with the last run ending exactly at 0x7FD280.
    let node_len: usize = 0x1040;
    let nodes_per_island = 32;
    let mut island_starts: Vec<usize> = (0..10).map(|k| 0x390000 + k * 0x40000).collect();
    island_starts.extend([0x6C0000, 0x708000, 0x750000, 0x798000, 0x7DCA80]);
    for (i, island) in island_starts.iter().enumerate() {
        for j in 0..nodes_per_island {
            let node_type = if (i + j) % 5 == 0 {
                sig::jffs2::NODETYPE_DIRENT
            } else {
                sig::jffs2::NODETYPE_INODE
            };
            placements.push(Placement {
                offset: island + j * node_len,
                spec: PlacementSpec::Jffs2Node {
                    node_type,
                    total_len: node_len as u32,
                },
                body_len: node_len - 12,
                body_style: SpanStyle::Text,
            });
        }
    }

    // zlib-compressed segments inside the island range
    for k in 0..16 {
        placements.push(Placement {
            offset: 0x621000 + k * 0x9000,
            spec: PlacementSpec::Zlib {
                level: (k % 4) as u8,
            },
            body_len: 0x2000 - 2,
            body_style: SpanStyle::Random,
        });
    }

    FixturePlan {
        archetype: "sparse".into(),
        device_model: "SYNTH-SPARSE".into(),
        total_size: total,
        declared_capacity: total as u64,
        fill: 0xFF,
        seed,
        fill_spans: Vec::new(),
        placements,
    }
}

pub fn dense_fixture(seed: u64) -> SynthFixture {
    build_plan(&dense_plan(seed)).expect("dense plan is statically valid")
}

pub fn sparse_fixture(seed: u64) -> SynthFixture {
    build_plan(&sparse_plan(seed)).expect("sparse plan is statically valid")
}

/// 16 MiB dense-archetype image.
pub fn make_dense_image(seed: u64) -> FirmwareImage {
    dense_fixture(seed).image
}

/// 8 MiB sparse-archetype image.
pub fn make_sparse_image(seed: u64) -> FirmwareImage {
    sparse_fixture(seed).image
}

/// Erased-flash image: 0xFF fill with `noise_windows` windows of faint
/// residue (roughly a quarter of the bytes disturbed), no valid
/// signatures anywhere.
pub fn erased_fixture(size: usize, noise_windows: usize, seed: u64) -> Result<SynthFixture> {
    let window_count = size / WINDOW;
    if noise_windows > window_count {
        return Err(Error::InvalidArgument(format!(
            "noise_windows {noise_windows} exceeds window count {window_count}"
        )));
    }
    let catalog = SignatureCatalog::builtin();
    let opts = ScanOptions::default();

    let mut rng = SplitMix64::new(seed);
    let mut buf = vec![0xFFu8; size];

    // seeded partial shuffle picks the noisy windows
    let mut indices: Vec<usize> = (0..window_count).collect();
    for i in 0..noise_windows.min(window_count.saturating_sub(1)) {
        let j = i + rng.next_below((window_count - i) as u64) as usize;
        indices.swap(i, j);
    }
    let mut chosen: Vec<usize> = indices[..noise_windows].to_vec();
    chosen.sort_unstable();
    for w in chosen {
        let start = w * WINDOW;
        for b in buf[start..start + WINDOW].iter_mut() {
            if rng.next_u64() % 4 == 0 {
                *b = (rng.next_u64() & 0xFF) as u8;
            }
        }
    }

    if !scrub(&mut buf, &catalog, &opts, &[], &[]) {
        return Err(Error::InvalidArgument(
            "erased fixture failed to scrub clean".into(),
        ));
    }

    let mut metadata = AcquisitionMetadata::for_model("SYNTH-ERASED")?;
    metadata.notes = format!("synthetic erased fixture, seed {seed}, {noise_windows} noise windows");
    let image = FirmwareImage::from_bytes(buf, size as u64, metadata)?;
    let manifest = FixtureManifest {
        archetype: "erased".into(),
        seed,
        total_size: size as u64,
        declared_capacity: size as u64,
        digest: *image.digest(),
        expected_hits: Vec::new(),
        placements: Vec::new(),
    };
    Ok(SynthFixture { image, manifest })
}

/// Erased-flash image of `size` bytes with `noise_windows` residue
/// windows.
pub fn make_erased_image(size: usize, noise_windows: usize, seed: u64) -> Result<FirmwareImage> {
    Ok(erased_fixture(size, noise_windows, seed)?.image)
}

/// Byte-level corruption modes standing in for physical read failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorruptMode {
    /// Flip one bit in each of `count` distinct bytes.
    BitFlips { count: usize, seed: u64 },
    /// Keep only the first `new_length` bytes.
    Truncate { new_length: usize },
    /// Overwrite `[start, start+length)` with `value`.
    SectorFill { start: usize, length: usize, value: u8 },
    /// Permute whole 4096-byte sectors (a trailing partial sector stays
    /// put).
    SectorShuffle { seed: u64 },
}

/// Apply a corruption mode, returning a new image; the input is untouched.
/// Declared capacity and metadata carry over.
pub fn corrupt(image: &FirmwareImage, mode: CorruptMode) -> Result<FirmwareImage> {
    let mut bytes = image.payload().to_vec();
    match mode {
        CorruptMode::BitFlips { count, seed } => {
            if count > bytes.len() {
                return Err(Error::InvalidArgument(format!(
                    "cannot flip bits in {count} distinct bytes of a {} byte image",
                    bytes.len()
                )));
            }
            let mut rng = SplitMix64::new(seed);
            let mut touched = std::collections::HashSet::with_capacity(count);
            while touched.len() < count {
                let pos = rng.next_below(bytes.len() as u64) as usize;
                if touched.insert(pos) {
                    bytes[pos] ^= 1 << (rng.next_u64() % 8);
                }
            }
        }
        CorruptMode::Truncate { new_length } => {
            if new_length > bytes.len() {
                return Err(Error::InvalidArgument(format!(
                    "cannot truncate {} bytes to {new_length}",
                    bytes.len()
                )));
            }
            bytes.truncate(new_length);
        }
        CorruptMode::SectorFill { start, length, value } => {
            let end = start.checked_add(length).filter(|&e| e <= bytes.len());
            let Some(end) = end else {
                return Err(Error::InvalidArgument(format!(
                    "sector fill [{start:#x}, +{length:#x}) exceeds image length {:#x}",
                    bytes.len()
                )));
            };
            bytes[start..end].fill(value);
        }
        CorruptMode::SectorShuffle { seed } => {
            let sectors = bytes.len() / WINDOW;
            let mut rng = SplitMix64::new(seed);
            for i in (1..sectors).rev() {
                let j = rng.next_below(i as u64 + 1) as usize;
                if i != j {
                    let (a, b) = (i * WINDOW, j * WINDOW);
                    for k in 0..WINDOW {
                        bytes.swap(a + k, b + k);
                    }
                }
            }
        }
    }
    FirmwareImage::from_bytes(bytes, image.declared_capacity(), image.metadata().clone())
}

/// Small randomized plan for scanner stress tests: a handful of placements
/// over assorted fill, everything within `max_size` bytes.
pub fn random_plan(seed: u64, max_size: usize) -> FixturePlan {
    assert!(max_size >= 32 * 1024);
    let mut rng = SplitMix64::new(seed);
    let total = 16 * 1024 + rng.next_below((max_size - 16 * 1024) as u64 + 1) as usize;
    let fill = if rng.next_u64() % 2 == 0 { 0x00 } else { 0xFF };

    let mut fill_spans = Vec::new();
    for _ in 0..rng.next_below(4) {
        let len = 512 + rng.next_below(8192) as usize;
        if len + 1 >= total {
            continue;
        }
        let start = rng.next_below((total - len) as u64) as usize;
        let style = match rng.next_u64() % 3 {
            0 => SpanStyle::Random,
            1 => SpanStyle::Text,
            _ => SpanStyle::Constant(0xA5),
        };
        fill_spans.push(FillSpan { start, len, style });
    }

    let mut placements: Vec<Placement> = Vec::new();
    let wanted = rng.next_below(7) as usize;
    'outer: for _ in 0..wanted * 8 {
        if placements.len() >= wanted {
            break;
        }
        let (spec, body_len, body_style) = random_spec(&mut rng, total);
        let span = spec.required_span().max(spec.header_len() + body_len);
        if span + 64 >= total {
            continue;
        }
        let offset = rng.next_below((total - span - 32) as u64) as usize;
        let lo = offset.saturating_sub(16);
        let hi = offset + spec.header_len() + body_len + 16;
        for existing in &placements {
            let e = existing.extent();
            if lo < e.end + 16 && e.start.saturating_sub(16) < hi {
                continue 'outer;
            }
        }
        placements.push(Placement {
            offset,
            spec,
            body_len,
            body_style,
        });
    }

    FixturePlan {
        archetype: "random".into(),
        device_model: "SYNTH-RANDOM".into(),
        total_size: total,
        declared_capacity: total as u64,
        fill,
        seed,
        fill_spans,
        placements,
    }
}

fn random_spec(rng: &mut SplitMix64, total: usize) -> (PlacementSpec, usize, SpanStyle) {
    match rng.next_u64() % 10 {
        0 => (
            PlacementSpec::Fdt {
                total_size: 40 + rng.next_below(2000.min(total as u64 / 4)) as u32,
                version: 16 + rng.next_below(2) as u32,
            },
            0,
            SpanStyle::Random,
        ),
        1 => {
            let names = [None, Some("u-boot-nodtb.bin"), Some("tee.bin"), Some("app.img")];
            (
                PlacementSpec::Gzip {
                    original_name: names[rng.next_below(4) as usize].map(String::from),
                    mtime: if rng.next_u64() % 2 == 0 { 0 } else { DENSE_BUILD_TIME },
                },
                48,
                SpanStyle::Random,
            )
        }
        2 => {
            let data_size = rng.next_below(2048) as u32;
            (
                PlacementSpec::UImage {
                    name: "Linux-4.9.129".into(),
                    time: SPARSE_BUILD_TIME,
                    data_size,
                    load: 0x8000_8000,
                    entry: 0x8000_8000,
                    os: 5,
                    arch: 2,
                    image_type: 2,
                    compression: 0,
                },
                data_size as usize,
                SpanStyle::Text,
            )
        }
        3 => (
            PlacementSpec::AndroidBootimg {
                kernel_size: 1 + rng.next_below(4096) as u32,
                page_size: 2048 << rng.next_below(2),
            },
            64,
            SpanStyle::Constant(0x00),
        ),
        4 => (
            PlacementSpec::ArmZimage {
                start: 0x8000,
                end: 0x8000 + 1 + rng.next_below(1 << 20) as u32,
            },
            0,
            SpanStyle::Random,
        ),
        5 => (
            PlacementSpec::Squashfs {
                inode_count: 1 + rng.next_below(4000) as u32,
                mod_time: DENSE_BUILD_TIME,
                block_size: 131_072,
                compression_id: [1u16, 2, 3, 4, 5, 6][rng.next_below(6) as usize],
                bytes_used: 96 + rng.next_below(4096),
            },
            0,
            SpanStyle::Random,
        ),
        6 => {
            let total_len = 12 + rng.next_below(4096) as u32;
            (
                PlacementSpec::Jffs2Node {
                    node_type: if rng.next_u64() % 2 == 0 {
                        sig::jffs2::NODETYPE_INODE
                    } else {
                        sig::jffs2::NODETYPE_DIRENT
                    },
                    total_len,
                },
                total_len as usize - 12,
                SpanStyle::Text,
            )
        }
        7 => (
            PlacementSpec::Zlib {
                level: (rng.next_u64() % 4) as u8,
            },
            64,
            SpanStyle::Random,
        ),
        8 => (
            PlacementSpec::Lzma {
                dict_size: 1 << (12 + rng.next_below(15)),
                uncompressed_size: if rng.next_u64() % 2 == 0 {
                    u64::MAX
                } else {
                    rng.next_below(1 << 30)
                },
            },
            32,
            SpanStyle::Random,
        ),
        _ => (
            PlacementSpec::Bmp {
                width: 1 + rng.next_below(1000) as u32,
                height: 1 + rng.next_below(800) as u32,
                bits_per_pixel: [1u16, 4, 8, 16, 24, 32][rng.next_below(6) as usize],
            },
            0,
            SpanStyle::Random,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency;
    use crate::entropy;
    use crate::validate::{self, ContentClass, LayoutCharacter, TierOutcome};

    #[test]
    fn splitmix_reference_stream() {
        // seed 1234567 outputs published with the algorithm
        let mut rng = SplitMix64::new(1234567);
        assert_eq!(rng.next_u64(), 6457827717110365317);
        assert_eq!(rng.next_u64(), 3203168211198807973);
    }

    #[test]
    fn dense_fixture_finds_exactly_the_planted_signatures() {
        let fixture = dense_fixture(1);
        let offsets: Vec<(u64, SignatureFormat)> = fixture
            .manifest
            .expected_hits
            .iter()
            .map(|h| (h.offset, h.format))
            .collect();
        assert_eq!(
            offsets,
            vec![
                (0x29EE4, SignatureFormat::Fdt),
                (0x40E00, SignatureFormat::Gzip),
                (0x6AA00, SignatureFormat::Gzip),
                (0x7D800, SignatureFormat::Fdt),
                (0xB0000, SignatureFormat::AndroidBootimg),
                (0xB0800, SignatureFormat::ArmZimage),
                (0x35A800, SignatureFormat::Fdt),
                (0x371200, SignatureFormat::Bmp),
                (0x374600, SignatureFormat::Bmp),
                (0x3B0000, SignatureFormat::Squashfs),
            ]
        );
    }

    #[test]
    fn dense_fixture_is_deterministic_and_seed_sensitive() {
        let a = make_dense_image(1);
        let b = make_dense_image(1);
        assert_eq!(a.digest(), b.digest());
        let c = make_dense_image(2);
        assert_ne!(a.digest(), c.digest());

        let map_a: Vec<_> = dense_fixture(1)
            .manifest
            .expected_hits
            .iter()
            .map(|h| (h.offset, h.format))
            .collect();
        let map_c: Vec<_> = dense_fixture(2)
            .manifest
            .expected_hits
            .iter()
            .map(|h| (h.offset, h.format))
            .collect();
        assert_eq!(map_a, map_c);
    }

    #[test]
    fn sparse_fixture_statistics_and_classification() {
        let fixture = sparse_fixture(7);
        let profile = entropy::profile(&fixture.image).unwrap();
        assert!(
            profile.low_fraction >= 0.3 && profile.low_fraction <= 0.7,
            "low fraction {}",
            profile.low_fraction
        );
        assert!(
            profile.high_fraction < 0.05,
            "high fraction {}",
            profile.high_fraction
        );

        let scan = sig::scan(
            &fixture.image,
            &SignatureCatalog::builtin(),
            &ScanOptions::default(),
        );
        let jffs2_in_range = scan
            .hits
            .iter()
            .filter(|h| {
                h.format == SignatureFormat::Jffs2Node
                    && (0x390000..=0x7FD280).contains(&h.offset)
            })
            .count();
        assert!(jffs2_in_range >= 40, "{jffs2_in_range} nodes");
        let zlib_in_range = scan
            .hits
            .iter()
            .filter(|h| {
                h.format == SignatureFormat::Zlib && (0x621000..=0x6C0000).contains(&h.offset)
            })
            .count();
        assert!(zlib_in_range >= 15, "{zlib_in_range} segments");
        assert!(scan
            .hits
            .iter()
            .any(|h| h.format == SignatureFormat::Uimage && h.offset == 0x90000));

        let (class, layout) = validate::tier3_content(&profile, &scan).unwrap();
        assert_eq!(class, ContentClass::ValidatedFirmware);
        assert_eq!(layout, LayoutCharacter::Sparse);
    }

    #[test]
    fn erased_fixture_limits() {
        let img = make_erased_image(8 * 1024 * 1024, 0, 9).unwrap();
        let profile = entropy::profile(&img).unwrap();
        assert_eq!(profile.mean, 0.0);
        assert_eq!(profile.low_fraction, 1.0);
        let scan = sig::scan(&img, &SignatureCatalog::builtin(), &ScanOptions::default());
        assert!(scan.hits.is_empty());
        assert_eq!(validate::tier1_size(&img), TierOutcome::Pass);
    }

    #[test]
    fn erased_fixture_with_noise_tracks_the_requested_fraction() {
        let fixture = erased_fixture(8 * 1024 * 1024, 190, 3).unwrap();
        let profile = entropy::profile(&fixture.image).unwrap();
        let expected_low = 1.0 - 190.0 / 2048.0;
        assert!(
            (profile.low_fraction - expected_low).abs() < 0.02,
            "low fraction {} vs expected {expected_low}",
            profile.low_fraction
        );
        let scan = sig::scan(
            &fixture.image,
            &SignatureCatalog::builtin(),
            &ScanOptions::default(),
        );
        let (class, layout) = validate::tier3_content(&profile, &scan).unwrap();
        assert_eq!(class, ContentClass::Erased);
        assert_eq!(layout, LayoutCharacter::Empty);
    }

    #[test]
    fn erased_fixture_rejects_excess_noise() {
        assert!(make_erased_image(8 * 4096, 9, 0).is_err());
    }

    #[test]
    fn bit_flip_shows_up_in_comparison() {
        let img = make_erased_image(64 * 4096, 4, 11).unwrap();
        let flipped = corrupt(&img, CorruptMode::BitFlips { count: 1, seed: 5 }).unwrap();
        let report = consistency::compare(&img, &flipped);
        assert!(!report.digest_equal);
        assert!(report.first_divergence.is_some());
        // input untouched
        assert!(crate::image::verify_digest(&img, img.digest()));
    }

    #[test]
    fn truncation_fails_tier1() {
        let img = make_erased_image(16 * 4096, 0, 0).unwrap();
        let cut = corrupt(
            &img,
            CorruptMode::Truncate {
                new_length: 16 * 4096 - 1,
            },
        )
        .unwrap();
        assert_eq!(validate::tier1_size(&cut), TierOutcome::Fail);
        assert_eq!(cut.declared_capacity(), img.declared_capacity());
    }

    #[test]
    fn sector_fill_erases_a_planted_signature() {
        let fixture = dense_fixture(1);
        let wiped = corrupt(
            &fixture.image,
            CorruptMode::SectorFill {
                start: 0x3B0000,
                length: 4096,
                value: 0xFF,
            },
        )
        .unwrap();
        let scan = sig::scan(&wiped, &SignatureCatalog::builtin(), &ScanOptions::default());
        assert!(!scan
            .hits
            .iter()
            .any(|h| h.format == SignatureFormat::Squashfs && h.offset == 0x3B0000));
    }

    #[test]
    fn corrupt_modes_are_deterministic_and_bounded() {
        let img = make_erased_image(32 * 4096, 2, 21).unwrap();
        let a = corrupt(&img, CorruptMode::BitFlips { count: 9, seed: 3 }).unwrap();
        let b = corrupt(&img, CorruptMode::BitFlips { count: 9, seed: 3 }).unwrap();
        assert_eq!(a.digest(), b.digest());
        let s1 = corrupt(&img, CorruptMode::SectorShuffle { seed: 8 }).unwrap();
        let s2 = corrupt(&img, CorruptMode::SectorShuffle { seed: 8 }).unwrap();
        assert_eq!(s1.digest(), s2.digest());

        assert!(corrupt(&img, CorruptMode::Truncate { new_length: usize::MAX }).is_err());
        assert!(corrupt(
            &img,
            CorruptMode::SectorFill {
                start: 32 * 4096 - 10,
                length: 100,
                value: 0
            }
        )
        .is_err());
        assert!(
            corrupt(&img, CorruptMode::BitFlips { count: 32 * 4096 + 1, seed: 0 }).is_err()
        );
    }

    #[test]
    fn random_plans_build_and_close() {
        for seed in 0..6 {
            let plan = random_plan(seed, 128 * 1024);
            let fixture = build_plan(&plan).unwrap();
            assert_eq!(
                fixture.manifest.expected_hits.len(),
                plan.placements.len(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn plan_rejects_overlapping_placements() {
        let mut plan = random_plan(3, 64 * 1024);
        plan.placements = vec![
            Placement {
                offset: 100,
                spec: PlacementSpec::Fdt {
                    total_size: 40,
                    version: 17,
                },
                body_len: 0,
                body_style: SpanStyle::Random,
            },
            Placement {
                offset: 120,
                spec: PlacementSpec::Bmp {
                    width: 10,
                    height: 10,
                    bits_per_pixel: 8,
                },
                body_len: 0,
                body_style: SpanStyle::Random,
            },
        ];
        assert!(build_plan(&plan).is_err());
    }

    #[test]
    fn plan_rejects_out_of_bounds_placements() {
        let mut plan = random_plan(4, 64 * 1024);
        plan.placements = vec![Placement {
            offset: plan.total_size - 20,
            spec: PlacementSpec::Fdt {
                total_size: 400,
                version: 17,
            },
            body_len: 0,
            body_style: SpanStyle::Random,
        }];
        assert!(build_plan(&plan).is_err());
    }
}
