//! SquashFS v4 superblock (96 bytes, little-endian).

use serde_json::json;

use super::{group_thousands, read_le16, read_le32, read_le64, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 96;

pub(crate) const MAGIC: &[u8; 4] = b"hsqs";

fn compression_name(id: u16) -> &'static str {
    match id {
        1 => "gzip",
        2 => "lzma",
        3 => "lzo",
        4 => "xz",
        5 => "lz4",
        6 => "zstd",
        _ => "unknown",
    }
}

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Squashfs;
    let truncated = || Error::TruncatedHeader {
        format,
        offset: offset as u64,
    };
    let malformed = |reason: &str| Error::MalformedHeader {
        format,
        offset: offset as u64,
        reason: reason.to_string(),
    };

    let sb = payload.get(offset..offset + MIN_HEADER_LEN).ok_or_else(truncated)?;
    if &sb[0..4] != MAGIC {
        return Err(malformed("bad magic"));
    }
    let inode_count = read_le32(sb, 4).unwrap();
    let compression_id = read_le16(sb, 20).unwrap();
    let version_major = read_le16(sb, 28).unwrap();
    let version_minor = read_le16(sb, 30).unwrap();
    let bytes_used = read_le64(sb, 40).unwrap();

    if version_major != 4 {
        return Err(malformed("unsupported major version"));
    }
    if !(1..=6).contains(&compression_id) {
        return Err(malformed("unknown compression id"));
    }
    if bytes_used < MIN_HEADER_LEN as u64 {
        return Err(malformed("bytes_used smaller than superblock"));
    }
    if offset as u64 + bytes_used > payload.len() as u64 {
        return Err(truncated());
    }

    let mut fields = super::FieldMap::new();
    fields.insert("version_major".into(), json!(version_major));
    fields.insert("compression_id".into(), json!(compression_id));
    fields.insert("bytes_used".into(), json!(bytes_used));
    fields.insert("inode_count".into(), json!(inode_count));

    let description = format!(
        "SquashFS v{}.{}, {}, {} bytes, {} inodes",
        version_major,
        version_minor,
        compression_name(compression_id),
        group_thousands(bytes_used),
        group_thousands(inode_count as u64)
    );
    Ok(ParsedHeader {
        fields,
        description,
    })
}

pub(crate) struct SuperblockSpec {
    pub inode_count: u32,
    pub mod_time: u32,
    pub block_size: u32,
    pub compression_id: u16,
    pub bytes_used: u64,
}

pub(crate) fn write_header(buf: &mut [u8], spec: &SuperblockSpec) {
    let h = &mut buf[..MIN_HEADER_LEN];
    h.fill(0);
    h[0..4].copy_from_slice(MAGIC);
    h[4..8].copy_from_slice(&spec.inode_count.to_le_bytes());
    h[8..12].copy_from_slice(&spec.mod_time.to_le_bytes());
    h[12..16].copy_from_slice(&spec.block_size.to_le_bytes());
    h[16..20].copy_from_slice(&0u32.to_le_bytes());
    h[20..22].copy_from_slice(&spec.compression_id.to_le_bytes());
    h[22..24].copy_from_slice(&(spec.block_size.trailing_zeros() as u16).to_le_bytes());
    h[24..26].copy_from_slice(&0x00C0u16.to_le_bytes());
    h[26..28].copy_from_slice(&1u16.to_le_bytes());
    h[28..30].copy_from_slice(&4u16.to_le_bytes());
    h[30..32].copy_from_slice(&0u16.to_le_bytes());
    h[32..40].copy_from_slice(&0x0000_0000_1234_5678u64.to_le_bytes());
    h[40..48].copy_from_slice(&spec.bytes_used.to_le_bytes());
    // table references: point just past the data area
    for (i, chunk) in h[48..96].chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&(spec.bytes_used.saturating_sub(48 - 8 * i as u64)).to_le_bytes());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_superblock_parses_back() {
        let mut buf = vec![0u8; 11_000_000];
        let spec = SuperblockSpec {
            inode_count: 1054,
            mod_time: 1_688_947_200,
            block_size: 131_072,
            compression_id: 4,
            bytes_used: 10_609_848,
        };
        write_header(&mut buf, &spec);
        let parsed = parse(&buf, 0).unwrap();
        assert_eq!(parsed.fields["inode_count"], json!(1054));
        assert_eq!(parsed.fields["bytes_used"], json!(10_609_848u64));
        assert_eq!(parsed.fields["compression_id"], json!(4));
        assert_eq!(
            parsed.description,
            "SquashFS v4.0, xz, 10,609,848 bytes, 1,054 inodes"
        );
    }

    #[test]
    fn wrong_major_version_is_malformed() {
        let mut buf = vec![0u8; 4096];
        let spec = SuperblockSpec {
            inode_count: 10,
            mod_time: 0,
            block_size: 4096,
            compression_id: 1,
            bytes_used: 1024,
        };
        write_header(&mut buf, &spec);
        buf[28] = 3;
        assert!(matches!(parse(&buf, 0), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn bytes_used_past_end_is_truncated() {
        let mut buf = vec![0u8; 4096];
        let spec = SuperblockSpec {
            inode_count: 10,
            mod_time: 0,
            block_size: 4096,
            compression_id: 1,
            bytes_used: 1 << 20,
        };
        write_header(&mut buf, &spec);
        assert!(matches!(parse(&buf, 0), Err(Error::TruncatedHeader { .. })));
    }
}
