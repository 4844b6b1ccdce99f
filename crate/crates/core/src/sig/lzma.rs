//! Raw LZMA stream header: properties byte, dictionary size, uncompressed
//! size. Only streams with the default properties byte (0x5D) are
//! cataloged; anything else is indistinguishable from noise at scan time.

use serde_json::json;

use super::{read_le32, read_le64, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 13;

const MAX_PROPS: u8 = 225;
const MIN_DICT: u32 = 1 << 12;
const MAX_DICT: u32 = 1 << 29;

fn dict_plausible(dict: u32) -> bool {
    if !(MIN_DICT..=MAX_DICT).contains(&dict) {
        return false;
    }
    // Encoders emit 2^n or 3·2^n dictionary sizes.
    dict.is_power_of_two() || (dict % 3 == 0 && (dict / 3).is_power_of_two())
}

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Lzma;
    let header = payload.get(offset..offset + MIN_HEADER_LEN).ok_or(Error::TruncatedHeader {
        format,
        offset: offset as u64,
    })?;
    let malformed = |reason: &str| Error::MalformedHeader {
        format,
        offset: offset as u64,
        reason: reason.to_string(),
    };

    let props = header[0];
    if props >= MAX_PROPS {
        return Err(malformed("properties byte out of range"));
    }
    let lc = props % 9;
    let lp = (props / 9) % 5;
    let pb = props / 45;

    let dict = read_le32(header, 1).unwrap();
    if !dict_plausible(dict) {
        return Err(malformed("implausible dictionary size"));
    }
    let uncompressed = read_le64(header, 5).unwrap();
    if uncompressed != u64::MAX && uncompressed > 1 << 40 {
        return Err(malformed("implausible uncompressed size"));
    }

    let mut fields = super::FieldMap::new();
    fields.insert("properties".into(), json!(props));
    fields.insert("lc".into(), json!(lc));
    fields.insert("lp".into(), json!(lp));
    fields.insert("pb".into(), json!(pb));
    fields.insert("dictionary_size".into(), json!(dict));
    Ok(ParsedHeader {
        fields,
        description: format!("LZMA compressed data (lc={lc}, lp={lp}, pb={pb}, dict {dict} bytes)"),
    })
}

pub(crate) fn write_header(buf: &mut [u8], dict_size: u32, uncompressed: u64) {
    buf[0] = 0x5D;
    buf[1..5].copy_from_slice(&dict_size.to_le_bytes());
    buf[5..13].copy_from_slice(&uncompressed.to_le_bytes());
}
