//! gzip member header (RFC 1952), deflate method only.

use serde_json::json;

use super::{unix_date, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 10;

const FLG_FEXTRA: u8 = 0x04;
const FLG_FNAME: u8 = 0x08;
const FLG_RESERVED: u8 = 0xE0;
const MAX_NAME_LEN: usize = 255;

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Gzip;
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
    if header[0] != 0x1F || header[1] != 0x8B {
        return Err(malformed("bad magic"));
    }
    if header[2] != 0x08 {
        return Err(malformed("compression method is not deflate"));
    }
    let flg = header[3];
    if flg & FLG_RESERVED != 0 {
        return Err(malformed("reserved flag bits set"));
    }
    let mtime = u32::from_le_bytes(header[4..8].try_into().unwrap());

    let mut cursor = offset + MIN_HEADER_LEN;
    if flg & FLG_FEXTRA != 0 {
        let xlen = super::read_le16(payload, cursor).ok_or_else(truncated)? as usize;
        cursor += 2 + xlen;
        if cursor > payload.len() {
            return Err(truncated());
        }
    }

    let mut original_name = None;
    if flg & FLG_FNAME != 0 {
        let rest = payload.get(cursor..).ok_or_else(truncated)?;
        let nul = rest
            .iter()
            .take(MAX_NAME_LEN + 1)
            .position(|&b| b == 0)
            .ok_or_else(|| malformed("unterminated original name"))?;
        let name_bytes = &rest[..nul];
        if name_bytes.is_empty() || !name_bytes.iter().all(|&b| (0x20..0x7F).contains(&b)) {
            return Err(malformed("original name is not printable"));
        }
        original_name = Some(String::from_utf8_lossy(name_bytes).into_owned());
    }

    let mut fields = super::FieldMap::new();
    if let Some(name) = &original_name {
        fields.insert("original_name".into(), json!(name));
    }
    if mtime != 0 {
        fields.insert("mtime".into(), json!(unix_date(mtime)));
    }

    let description = match (&original_name, mtime) {
        (Some(name), 0) => format!("gzip: {name}"),
        (Some(name), t) => format!("gzip: {name} ({})", unix_date(t)),
        (None, 0) => "gzip compressed data".to_string(),
        (None, t) => format!("gzip compressed data ({})", unix_date(t)),
    };
    Ok(ParsedHeader {
        fields,
        description,
    })
}

/// Header bytes for a named gzip member (used by the fixture generator).
/// Returns the full header including the name terminator.
pub(crate) fn header_bytes(original_name: Option<&str>, mtime: u32) -> Vec<u8> {
    let mut out = vec![0x1F, 0x8B, 0x08, 0x00, 0, 0, 0, 0, 0x00, 0x03];
    out[4..8].copy_from_slice(&mtime.to_le_bytes());
    if let Some(name) = original_name {
        out[3] |= FLG_FNAME;
        out.extend_from_slice(name.as_bytes());
        out.push(0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_member_parses_back() {
        // 2023-07-10T00:00:00Z
        let mtime = 1_688_947_200;
        let mut buf = header_bytes(Some("u-boot-nodtb.bin"), mtime);
        buf.extend_from_slice(&[0xAA; 64]);
        let parsed = parse(&buf, 0).unwrap();
        assert_eq!(parsed.fields["original_name"], json!("u-boot-nodtb.bin"));
        assert_eq!(parsed.fields["mtime"], json!("2023-07-10"));
        assert_eq!(parsed.description, "gzip: u-boot-nodtb.bin (2023-07-10)");
    }

    #[test]
    fn anonymous_member_parses() {
        let mut buf = header_bytes(None, 0);
        buf.extend_from_slice(&[0x55; 32]);
        let parsed = parse(&buf, 0).unwrap();
        assert!(!parsed.fields.contains_key("original_name"));
        assert_eq!(parsed.description, "gzip compressed data");
    }

    #[test]
    fn reserved_flag_bits_are_malformed() {
        let mut buf = header_bytes(None, 0);
        buf[3] = 0x80;
        assert!(matches!(parse(&buf, 0), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn unterminated_name_is_malformed() {
        let mut buf = vec![0x1F, 0x8B, 0x08, FLG_FNAME, 0, 0, 0, 0, 0, 3];
        buf.extend_from_slice(&[b'a'; 300]);
        assert!(matches!(parse(&buf, 0), Err(Error::MalformedHeader { .. })));
    }
}
