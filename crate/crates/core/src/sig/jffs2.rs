//! JFFS2 node header (little-endian): magic, node type, total length, and
//! a CRC over the first eight bytes.

use serde_json::json;

use super::{group_thousands, read_le16, read_le32, ParsedHeader};
use crate::crc32::crc32_jffs2;
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 12;

const MAGIC: u16 = 0x1985;

pub(crate) const NODETYPE_DIRENT: u16 = 0xE001;
pub(crate) const NODETYPE_INODE: u16 = 0xE002;

fn node_type_name(t: u16) -> Option<&'static str> {
    match t {
        NODETYPE_DIRENT => Some("dirent"),
        NODETYPE_INODE => Some("inode"),
        0xE003 => Some("xattr"),
        0xE004 => Some("xref"),
        0xE008 => Some("summary"),
        0x2003 => Some("cleanmarker"),
        0x2004 => Some("padding"),
        _ => None,
    }
}

pub(crate) fn parse(payload: &[u8], offset: usize, check_crc: bool) -> Result<ParsedHeader> {
    let format = SignatureFormat::Jffs2Node;
    let truncated = || Error::TruncatedHeader {
        format,
        offset: offset as u64,
    };
    let malformed = |reason: &str| Error::MalformedHeader {
        format,
        offset: offset as u64,
        reason: reason.to_string(),
    };

    let header = payload.get(offset..offset + MIN_HEADER_LEN).ok_or_else(truncated)?;
    if read_le16(header, 0) != Some(MAGIC) {
        return Err(malformed("bad magic"));
    }
    let node_type = read_le16(header, 2).unwrap();
    let Some(type_name) = node_type_name(node_type) else {
        return Err(malformed("unknown node type"));
    };
    let total_len = read_le32(header, 4).unwrap();
    if (total_len as usize) < MIN_HEADER_LEN {
        return Err(malformed("node length smaller than header"));
    }
    if offset + total_len as usize > payload.len() {
        return Err(truncated());
    }
    if check_crc {
        let stored = read_le32(header, 8).unwrap();
        if crc32_jffs2(&header[0..8]) != stored {
            return Err(malformed("header CRC mismatch"));
        }
    }

    let mut fields = super::FieldMap::new();
    fields.insert("node_type".into(), json!(type_name));
    fields.insert("node_length".into(), json!(total_len));
    let description = format!(
        "JFFS2 node ({type_name}, {} bytes)",
        group_thousands(total_len as u64)
    );
    Ok(ParsedHeader {
        fields,
        description,
    })
}

pub(crate) fn write_header(buf: &mut [u8], node_type: u16, total_len: u32) {
    buf[0..2].copy_from_slice(&MAGIC.to_le_bytes());
    buf[2..4].copy_from_slice(&node_type.to_le_bytes());
    buf[4..8].copy_from_slice(&total_len.to_le_bytes());
    let crc = crc32_jffs2(&buf[0..8]);
    buf[8..12].copy_from_slice(&crc.to_le_bytes());
}
