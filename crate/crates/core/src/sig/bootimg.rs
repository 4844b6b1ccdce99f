//! Android boot image header (v0 layout, little-endian fields).

use serde_json::json;

use super::{group_thousands, read_le32, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 40;

pub(crate) const MAGIC: &[u8; 8] = b"ANDROID!";

const VALID_PAGE_SIZES: [u32; 4] = [2048, 4096, 8192, 16384];

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::AndroidBootimg;
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
    if &header[0..8] != MAGIC {
        return Err(malformed("bad magic"));
    }
    let kernel_size = read_le32(header, 8).unwrap();
    let page_size = read_le32(header, 36).unwrap();

    if kernel_size == 0 {
        return Err(malformed("zero kernel size"));
    }
    if !VALID_PAGE_SIZES.contains(&page_size) {
        return Err(malformed("implausible page size"));
    }
    if offset + page_size as usize + kernel_size as usize > payload.len() {
        return Err(truncated());
    }

    let mut fields = super::FieldMap::new();
    fields.insert("kernel_size".into(), json!(kernel_size));
    fields.insert("page_size".into(), json!(page_size));
    let description = format!(
        "Android bootimg; kernel ({} bytes)",
        group_thousands(kernel_size as u64)
    );
    Ok(ParsedHeader {
        fields,
        description,
    })
}

pub(crate) fn write_header(buf: &mut [u8], kernel_size: u32, page_size: u32) {
    let h = &mut buf[..MIN_HEADER_LEN];
    h.fill(0);
    h[0..8].copy_from_slice(MAGIC);
    h[8..12].copy_from_slice(&kernel_size.to_le_bytes());
    h[12..16].copy_from_slice(&0x8000_8000u32.to_le_bytes());
    h[16..20].copy_from_slice(&0u32.to_le_bytes());
    h[20..24].copy_from_slice(&0x8100_0000u32.to_le_bytes());
    h[32..36].copy_from_slice(&0x8000_0100u32.to_le_bytes());
    h[36..40].copy_from_slice(&page_size.to_le_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_header_parses_back() {
        let mut buf = vec![0u8; 2048 + 4096];
        write_header(&mut buf, 2_790_992 / 1024, 2048);
        let parsed = parse(&buf, 0).unwrap();
        assert_eq!(parsed.fields["page_size"], json!(2048));
    }

    #[test]
    fn bad_page_size_is_malformed() {
        let mut buf = vec![0u8; 8192];
        write_header(&mut buf, 512, 1000);
        assert!(matches!(parse(&buf, 0), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn kernel_past_end_is_truncated() {
        let mut buf = vec![0u8; 4096];
        write_header(&mut buf, 1 << 20, 2048);
        assert!(matches!(parse(&buf, 0), Err(Error::TruncatedHeader { .. })));
    }
}
