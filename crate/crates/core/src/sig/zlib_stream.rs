//! zlib stream header (RFC 1950): CMF 0x78 (deflate, 32 KiB window) plus a
//! flags byte whose check bits must satisfy the mod-31 rule.

use serde_json::json;

use super::ParsedHeader;
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 2;

const CMF_DEFLATE_32K: u8 = 0x78;

fn level_name(flevel: u8) -> &'static str {
    match flevel {
        0 => "fastest",
        1 => "fast",
        2 => "default compression",
        _ => "best compression",
    }
}

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Zlib;
    let header = payload.get(offset..offset + MIN_HEADER_LEN).ok_or(Error::TruncatedHeader {
        format,
        offset: offset as u64,
    })?;
    let malformed = |reason: &str| Error::MalformedHeader {
        format,
        offset: offset as u64,
        reason: reason.to_string(),
    };

    let cmf = header[0];
    let flg = header[1];
    if cmf != CMF_DEFLATE_32K {
        return Err(malformed("unsupported CMF byte"));
    }
    if (cmf as u16 * 256 + flg as u16) % 31 != 0 {
        return Err(malformed("FCHECK failure"));
    }

    let mut fields = super::FieldMap::new();
    fields.insert("method".into(), json!("deflate"));
    fields.insert("window_size".into(), json!(32768));
    fields.insert("preset_dict".into(), json!(flg & 0x20 != 0));
    fields.insert("compression_level".into(), json!(level_name(flg >> 6)));
    Ok(ParsedHeader {
        fields,
        description: format!("Zlib compressed data ({})", level_name(flg >> 6)),
    })
}

/// The two header bytes for a given compression level (0..=3), no preset
/// dictionary.
pub(crate) fn header_bytes(flevel: u8) -> [u8; 2] {
    let cmf = CMF_DEFLATE_32K;
    let mut flg = (flevel & 0x03) << 6;
    let rem = (cmf as u16 * 256 + flg as u16) % 31;
    if rem != 0 {
        flg += (31 - rem) as u8;
    }
    [cmf, flg]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_known_headers_validate() {
        for (bytes, level) in [
            ([0x78u8, 0x01], "fastest"),
            ([0x78, 0x5E], "fast"),
            ([0x78, 0x9C], "default compression"),
            ([0x78, 0xDA], "best compression"),
        ] {
            let parsed = parse(&bytes, 0).unwrap();
            assert_eq!(parsed.fields["compression_level"], json!(level));
        }
    }

    #[test]
    fn generated_headers_hit_the_well_known_values() {
        assert_eq!(header_bytes(0), [0x78, 0x01]);
        assert_eq!(header_bytes(1), [0x78, 0x5E]);
        assert_eq!(header_bytes(2), [0x78, 0x9C]);
        assert_eq!(header_bytes(3), [0x78, 0xDA]);
    }

    #[test]
    fn fcheck_failure_is_malformed() {
        assert!(matches!(
            parse(&[0x78, 0x02], 0),
            Err(Error::MalformedHeader { .. })
        ));
    }
}
