//! Structural signature scanning.
//!
//! The catalog covers the formats that show up in consumer-drone style
//! flash images: device trees, gzip members, uImage containers, Android
//! boot images, ARM zImage kernels, SquashFS superblocks, JFFS2 nodes,
//! zlib/LZMA streams, and BMP resources. A magic match alone is never
//! enough to report a hit; every format has a validator that parses the
//! candidate header and rejects implausible field values. Weak-magic
//! formats (gzip, zlib, LZMA) additionally require the 16 bytes after the
//! magic to not be constant fill.

pub(crate) mod bmp;
pub(crate) mod bootimg;
pub(crate) mod fdt;
pub(crate) mod gzip;
pub(crate) mod jffs2;
pub(crate) mod lzma;
pub(crate) mod squashfs;
pub(crate) mod uimage;
pub(crate) mod zimage;
pub(crate) mod zlib_stream;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Digest, FirmwareImage};

/// Recognized structural formats, in report tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignatureFormat {
    Fdt,
    Gzip,
    Uimage,
    AndroidBootimg,
    ArmZimage,
    Squashfs,
    Jffs2Node,
    Zlib,
    Lzma,
    Bmp,
}

impl SignatureFormat {
    pub const ALL: [SignatureFormat; 10] = [
        SignatureFormat::Fdt,
        SignatureFormat::Gzip,
        SignatureFormat::Uimage,
        SignatureFormat::AndroidBootimg,
        SignatureFormat::ArmZimage,
        SignatureFormat::Squashfs,
        SignatureFormat::Jffs2Node,
        SignatureFormat::Zlib,
        SignatureFormat::Lzma,
        SignatureFormat::Bmp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SignatureFormat::Fdt => "FDT",
            SignatureFormat::Gzip => "GZIP",
            SignatureFormat::Uimage => "UIMAGE",
            SignatureFormat::AndroidBootimg => "ANDROID_BOOTIMG",
            SignatureFormat::ArmZimage => "ARM_ZIMAGE",
            SignatureFormat::Squashfs => "SQUASHFS",
            SignatureFormat::Jffs2Node => "JFFS2_NODE",
            SignatureFormat::Zlib => "ZLIB",
            SignatureFormat::Lzma => "LZMA",
            SignatureFormat::Bmp => "BMP",
        }
    }
}

impl fmt::Display for SignatureFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coarse role a signature plays in a firmware layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FormatClass {
    BootloaderStage,
    Kernel,
    Filesystem,
    CompressedData,
    Resource,
}

impl FormatClass {
    pub fn name(&self) -> &'static str {
        match self {
            FormatClass::BootloaderStage => "BOOTLOADER_STAGE",
            FormatClass::Kernel => "KERNEL",
            FormatClass::Filesystem => "FILESYSTEM",
            FormatClass::CompressedData => "COMPRESSED_DATA",
            FormatClass::Resource => "RESOURCE",
        }
    }
}

impl fmt::Display for FormatClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parsed header attributes, keyed by field name. BTreeMap keeps key order
/// deterministic in every emission.
pub type FieldMap = BTreeMap<String, serde_json::Value>;

/// One recognized signature: where it sits, what it is, and what its
/// header says.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureHit {
    pub offset: u64,
    pub format: SignatureFormat,
    pub format_class: FormatClass,
    pub fields: FieldMap,
    pub description: String,
}

impl SignatureHit {
    /// One JSON line per hit, offset in both decimal and hex.
    pub fn to_jsonl(&self) -> String {
        let value = serde_json::json!({
            "offset": self.offset,
            "offset_hex": format!("{:#x}", self.offset),
            "format": self.format,
            "class": self.format_class,
            "fields": self.fields,
            "description": self.description,
        });
        value.to_string()
    }

    /// Fixed-width text row: hex offset, class, description.
    pub fn table_row(&self) -> String {
        format!(
            "{:<10} {:<17} {}",
            format!("{:#x}", self.offset),
            self.format_class.name(),
            self.description
        )
    }

    /// Byte span the signature claims, derived from its parsed fields and
    /// clamped to `image_len`. Falls back to the minimal header length when
    /// the format carries no size field.
    pub fn extent(&self, image_len: u64) -> std::ops::Range<u64> {
        let field_u64 = |k: &str| self.fields.get(k).and_then(|v| v.as_u64());
        let len = match self.format {
            SignatureFormat::Fdt => field_u64("total_size"),
            SignatureFormat::Uimage => field_u64("data_size").map(|s| s + 64),
            SignatureFormat::AndroidBootimg => match (field_u64("kernel_size"), field_u64("page_size")) {
                (Some(k), Some(p)) => Some(k + p),
                _ => None,
            },
            SignatureFormat::Squashfs => field_u64("bytes_used"),
            SignatureFormat::Jffs2Node => field_u64("node_length"),
            _ => None,
        };
        let min_len = catalog_min_header_len(self.format) as u64;
        let end = self.offset + len.unwrap_or(min_len).max(min_len);
        self.offset..end.min(image_len)
    }
}

/// Maps a format (plus, for gzip, its parsed name) onto its layout class.
pub fn format_class(format: SignatureFormat, fields: &FieldMap) -> FormatClass {
    match format {
        SignatureFormat::Fdt => FormatClass::BootloaderStage,
        SignatureFormat::Gzip => {
            let name = fields
                .get("original_name")
                .and_then(|v| v.as_str())
                .unwrap_or("")
                .to_ascii_lowercase();
            if name.contains("u-boot") || name.contains("uboot") || name.starts_with("tee") {
                FormatClass::BootloaderStage
            } else {
                FormatClass::CompressedData
            }
        }
        SignatureFormat::Uimage | SignatureFormat::AndroidBootimg | SignatureFormat::ArmZimage => {
            FormatClass::Kernel
        }
        SignatureFormat::Squashfs | SignatureFormat::Jffs2Node => FormatClass::Filesystem,
        SignatureFormat::Zlib | SignatureFormat::Lzma => FormatClass::CompressedData,
        SignatureFormat::Bmp => FormatClass::Resource,
    }
}

/// A catalog row: the magic bytes, where they sit inside the structure,
/// the minimal header length, and the validator applied on a match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub format: SignatureFormat,
    pub magic: Vec<u8>,
    /// Offset of the magic within the structure; hits are reported at the
    /// structure start.
    pub anchor_offset: usize,
    pub min_header_len: usize,
    pub validator_rule: &'static str,
    /// Weak-magic entries also require the 16 bytes after the magic to not
    /// be constant fill.
    pub weak_magic: bool,
}

/// Ordered set of signature definitions driving a scan.
#[derive(Debug, Clone)]
pub struct SignatureCatalog {
    entries: Vec<CatalogEntry>,
}

impl SignatureCatalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self> {
        for e in &entries {
            if e.magic.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "catalog entry {} has an empty magic pattern",
                    e.format
                )));
            }
        }
        for (i, a) in entries.iter().enumerate() {
            if entries[i + 1..].contains(a) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate catalog entry for {}",
                    a.format
                )));
            }
        }
        Ok(SignatureCatalog { entries })
    }

    /// The full built-in catalog.
    pub fn builtin() -> Self {
        let entries = vec![
            CatalogEntry {
                format: SignatureFormat::Fdt,
                magic: vec![0xD0, 0x0D, 0xFE, 0xED],
                anchor_offset: 0,
                min_header_len: fdt::MIN_HEADER_LEN,
                validator_rule: "fdt_totalsize_version",
                weak_magic: false,
            },
            CatalogEntry {
                format: SignatureFormat::Gzip,
                magic: vec![0x1F, 0x8B, 0x08],
                anchor_offset: 0,
                min_header_len: gzip::MIN_HEADER_LEN,
                validator_rule: "gzip_flags_name",
                weak_magic: true,
            },
            CatalogEntry {
                format: SignatureFormat::Uimage,
                magic: vec![0x27, 0x05, 0x19, 0x56],
                anchor_offset: 0,
                min_header_len: uimage::MIN_HEADER_LEN,
                validator_rule: "uimage_header_crc",
                weak_magic: false,
            },
            CatalogEntry {
                format: SignatureFormat::AndroidBootimg,
                magic: b"ANDROID!".to_vec(),
                anchor_offset: 0,
                min_header_len: bootimg::MIN_HEADER_LEN,
                validator_rule: "bootimg_pagesize_kernel",
                weak_magic: false,
            },
            CatalogEntry {
                format: SignatureFormat::ArmZimage,
                magic: vec![0x18, 0x28, 0x6F, 0x01],
                anchor_offset: zimage::MAGIC_OFFSET,
                min_header_len: zimage::MIN_HEADER_LEN,
                validator_rule: "zimage_span",
                weak_magic: false,
            },
            CatalogEntry {
                format: SignatureFormat::Squashfs,
                magic: b"hsqs".to_vec(),
                anchor_offset: 0,
                min_header_len: squashfs::MIN_HEADER_LEN,
                validator_rule: "squashfs_v4_bytes_used",
                weak_magic: false,
            },
            CatalogEntry {
                format: SignatureFormat::Jffs2Node,
                magic: vec![0x85, 0x19],
                anchor_offset: 0,
                min_header_len: jffs2::MIN_HEADER_LEN,
                validator_rule: "jffs2_nodetype_totlen_crc",
                weak_magic: false,
            },
            CatalogEntry {
                format: SignatureFormat::Zlib,
                magic: vec![0x78],
                anchor_offset: 0,
                min_header_len: zlib_stream::MIN_HEADER_LEN,
                validator_rule: "zlib_fcheck",
                weak_magic: true,
            },
            CatalogEntry {
                format: SignatureFormat::Lzma,
                magic: vec![0x5D],
                anchor_offset: 0,
                min_header_len: lzma::MIN_HEADER_LEN,
                validator_rule: "lzma_props_dict",
                weak_magic: true,
            },
            CatalogEntry {
                format: SignatureFormat::Bmp,
                magic: b"BM".to_vec(),
                anchor_offset: 0,
                min_header_len: bmp::MIN_HEADER_LEN,
                validator_rule: "bmp_dib_dimensions",
                weak_magic: false,
            },
        ];
        SignatureCatalog { entries }
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }
}

fn catalog_min_header_len(format: SignatureFormat) -> usize {
    match format {
        SignatureFormat::Fdt => fdt::MIN_HEADER_LEN,
        SignatureFormat::Gzip => gzip::MIN_HEADER_LEN,
        SignatureFormat::Uimage => uimage::MIN_HEADER_LEN,
        SignatureFormat::AndroidBootimg => bootimg::MIN_HEADER_LEN,
        SignatureFormat::ArmZimage => zimage::MIN_HEADER_LEN,
        SignatureFormat::Squashfs => squashfs::MIN_HEADER_LEN,
        SignatureFormat::Jffs2Node => jffs2::MIN_HEADER_LEN,
        SignatureFormat::Zlib => zlib_stream::MIN_HEADER_LEN,
        SignatureFormat::Lzma => lzma::MIN_HEADER_LEN,
        SignatureFormat::Bmp => bmp::MIN_HEADER_LEN,
    }
}

/// Scan tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    /// Verify JFFS2 node header CRCs before accepting a node.
    pub jffs2_crc_check: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            jffs2_crc_check: true,
        }
    }
}

/// A scan result: ordered hits plus the provenance of the scanned image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub image_digest: Digest,
    pub image_len: u64,
    pub hits: Vec<SignatureHit>,
}

pub(crate) struct ParsedHeader {
    pub fields: FieldMap,
    pub description: String,
}

/// Strict header parse for `format` at `offset`. Errors with a truncated-
/// or malformed-header diagnostic when the bytes do not hold a valid
/// header.
pub fn parse_header(
    format: SignatureFormat,
    image: &FirmwareImage,
    offset: u64,
) -> Result<FieldMap> {
    parse_header_with(format, image, offset, &ScanOptions::default())
}

pub fn parse_header_with(
    format: SignatureFormat,
    image: &FirmwareImage,
    offset: u64,
    opts: &ScanOptions,
) -> Result<FieldMap> {
    let parsed = parse_at(format, image.payload(), offset as usize, opts)?;
    Ok(parsed.fields)
}

pub(crate) fn parse_at(
    format: SignatureFormat,
    payload: &[u8],
    offset: usize,
    opts: &ScanOptions,
) -> Result<ParsedHeader> {
    match format {
        SignatureFormat::Fdt => fdt::parse(payload, offset),
        SignatureFormat::Gzip => gzip::parse(payload, offset),
        SignatureFormat::Uimage => uimage::parse(payload, offset),
        SignatureFormat::AndroidBootimg => bootimg::parse(payload, offset),
        SignatureFormat::ArmZimage => zimage::parse(payload, offset),
        SignatureFormat::Squashfs => squashfs::parse(payload, offset),
        SignatureFormat::Jffs2Node => jffs2::parse(payload, offset, opts.jffs2_crc_check),
        SignatureFormat::Zlib => zlib_stream::parse(payload, offset),
        SignatureFormat::Lzma => lzma::parse(payload, offset),
        SignatureFormat::Bmp => bmp::parse(payload, offset),
    }
}

/// Full validator for one catalog entry at one structure offset: magic
/// match, weak-magic context rule, then a strict header parse. Returns the
/// finished hit on success. This is the single validation path shared by
/// the production scan and any exhaustive re-check.
pub fn probe_entry(
    payload: &[u8],
    structure_offset: usize,
    entry: &CatalogEntry,
    opts: &ScanOptions,
) -> Option<SignatureHit> {
    let magic_at = structure_offset.checked_add(entry.anchor_offset)?;
    let magic_end = magic_at.checked_add(entry.magic.len())?;
    if magic_end > payload.len() {
        return None;
    }
    if payload[magic_at..magic_end] != entry.magic[..] {
        return None;
    }
    if entry.weak_magic && !context_after_magic_ok(payload, magic_end) {
        return None;
    }
    let parsed = parse_at(entry.format, payload, structure_offset, opts).ok()?;
    let class = format_class(entry.format, &parsed.fields);
    Some(SignatureHit {
        offset: structure_offset as u64,
        format: entry.format,
        format_class: class,
        fields: parsed.fields,
        description: parsed.description,
    })
}

/// Weak-magic context rule: the 16 bytes following the magic must exist
/// and must not all be one value.
fn context_after_magic_ok(payload: &[u8], magic_end: usize) -> bool {
    match payload.get(magic_end..magic_end + 16) {
        Some(w) => w.iter().any(|&b| b != w[0]),
        None => false,
    }
}

/// Scan every byte offset of the image against the catalog. Hits come back
/// in ascending offset order, ties broken by format order. An empty image
/// yields no hits.
pub fn scan(image: &FirmwareImage, catalog: &SignatureCatalog, opts: &ScanOptions) -> ScanReport {
    let hits = scan_payload(image.payload(), catalog, opts);
    ScanReport {
        image_digest: *image.digest(),
        image_len: image.len(),
        hits,
    }
}

/// Parallel chunking: each chunk owns a disjoint range of structure
/// offsets, so no hit can be produced twice and concatenation preserves
/// global order.
const PARALLEL_CHUNK: usize = 1 << 21;

pub(crate) fn scan_payload(
    payload: &[u8],
    catalog: &SignatureCatalog,
    opts: &ScanOptions,
) -> Vec<SignatureHit> {
    #[cfg(feature = "parallel")]
    {
        if payload.len() >= 2 * PARALLEL_CHUNK {
            use rayon::prelude::*;
            let ranges: Vec<std::ops::Range<usize>> = (0..payload.len())
                .step_by(PARALLEL_CHUNK)
                .map(|start| start..(start + PARALLEL_CHUNK).min(payload.len()))
                .collect();
            return ranges
                .into_par_iter()
                .map(|r| scan_offset_range(payload, r, catalog, opts))
                .reduce(Vec::new, |mut acc, mut part| {
                    acc.append(&mut part);
                    acc
                });
        }
    }
    scan_offset_range(payload, 0..payload.len(), catalog, opts)
}

/// Sequential scan, kept callable regardless of features so results can be
/// compared against the parallel path.
pub fn scan_sequential(
    image: &FirmwareImage,
    catalog: &SignatureCatalog,
    opts: &ScanOptions,
) -> ScanReport {
    let payload = image.payload();
    ScanReport {
        image_digest: *image.digest(),
        image_len: image.len(),
        hits: scan_offset_range(payload, 0..payload.len(), catalog, opts),
    }
}

fn scan_offset_range(
    payload: &[u8],
    offsets: std::ops::Range<usize>,
    catalog: &SignatureCatalog,
    opts: &ScanOptions,
) -> Vec<SignatureHit> {
    let mut hits = Vec::new();
    for entry in catalog.entries() {
        // Structure offsets in `offsets` put the magic byte in
        // [offsets.start+anchor, offsets.end+anchor).
        let lo = offsets.start.saturating_add(entry.anchor_offset);
        let hi = offsets
            .end
            .saturating_add(entry.anchor_offset)
            .min(payload.len());
        if lo >= hi {
            continue;
        }
        for rel in memchr::memchr_iter(entry.magic[0], &payload[lo..hi]) {
            let structure_offset = lo + rel - entry.anchor_offset;
            if let Some(hit) = probe_entry(payload, structure_offset, entry, opts) {
                hits.push(hit);
            }
        }
    }
    hits.sort_by_key(|h| (h.offset, h.format));
    hits
}

/// The canonical ordered (offset, format) list used for cross-dump
/// signature comparison.
pub fn signature_map(hits: &[SignatureHit]) -> Vec<(u64, SignatureFormat)> {
    hits.iter().map(|h| (h.offset, h.format)).collect()
}

/// Render an integer with comma separators ("10,609,848").
pub(crate) fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    let lead = digits.len() % 3;
    for (i, c) in digits.chars().enumerate() {
        if i != 0 && (i + 3 - lead) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

pub(crate) fn read_be32(payload: &[u8], at: usize) -> Option<u32> {
    payload
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
}

pub(crate) fn read_le16(payload: &[u8], at: usize) -> Option<u16> {
    payload
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes(b.try_into().unwrap()))
}

pub(crate) fn read_le32(payload: &[u8], at: usize) -> Option<u32> {
    payload
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
}

pub(crate) fn read_le64(payload: &[u8], at: usize) -> Option<u64> {
    payload
        .get(at..at + 8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
}

pub(crate) fn unix_date(ts: u32) -> String {
    chrono::DateTime::from_timestamp(ts as i64, 0)
        .map(|dt| dt.format("%Y-%m-%d").to_string())
        .unwrap_or_else(|| ts.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::AcquisitionMetadata;

    fn image_of(bytes: Vec<u8>) -> FirmwareImage {
        FirmwareImage::from_bytes(
            bytes,
            1024 * 1024,
            AcquisitionMetadata::for_model("TEST").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn empty_image_yields_no_hits() {
        let img = image_of(vec![]);
        let report = scan(&img, &SignatureCatalog::builtin(), &ScanOptions::default());
        assert!(report.hits.is_empty());
    }

    #[test]
    fn constant_fill_images_yield_no_hits() {
        for fill in [0x00u8, 0xFF] {
            for size in [4096usize, 1 << 20] {
                let img = image_of(vec![fill; size]);
                let report = scan(&img, &SignatureCatalog::builtin(), &ScanOptions::default());
                assert!(report.hits.is_empty(), "fill {fill:#x} size {size}");
            }
        }
    }

    #[test]
    fn scanning_twice_is_identical() {
        let bytes: Vec<u8> = (0..65536u32).map(|i| (i.wrapping_mul(2654435761) >> 11) as u8).collect();
        let img = image_of(bytes);
        let cat = SignatureCatalog::builtin();
        let a = scan(&img, &cat, &ScanOptions::default());
        let b = scan(&img, &cat, &ScanOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn empty_hit_list_maps_to_empty_signature_map() {
        assert!(signature_map(&[]).is_empty());
    }

    #[test]
    fn catalog_rejects_empty_magic() {
        let bad = vec![CatalogEntry {
            format: SignatureFormat::Fdt,
            magic: vec![],
            anchor_offset: 0,
            min_header_len: 40,
            validator_rule: "x",
            weak_magic: false,
        }];
        assert!(SignatureCatalog::new(bad).is_err());
    }

    #[test]
    fn catalog_rejects_duplicate_entries() {
        let e = CatalogEntry {
            format: SignatureFormat::Bmp,
            magic: b"BM".to_vec(),
            anchor_offset: 0,
            min_header_len: 54,
            validator_rule: "bmp",
            weak_magic: false,
        };
        assert!(SignatureCatalog::new(vec![e.clone(), e]).is_err());
    }

    #[test]
    fn thousands_grouping() {
        assert_eq!(group_thousands(0), "0");
        assert_eq!(group_thousands(999), "999");
        assert_eq!(group_thousands(6455), "6,455");
        assert_eq!(group_thousands(10_609_848), "10,609,848");
        assert_eq!(group_thousands(2_790_992), "2,790,992");
    }
}
