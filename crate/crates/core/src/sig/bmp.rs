//! BMP resource header: 14-byte file header plus an info-class DIB header.

use serde_json::json;

use super::{read_le16, read_le32, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 54;

const DIB_SIZES: [u32; 5] = [40, 52, 56, 108, 124];
const MAX_DIMENSION: i32 = 65535;

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Bmp;
    let header = payload.get(offset..offset + MIN_HEADER_LEN).ok_or(Error::TruncatedHeader {
        format,
        offset: offset as u64,
    })?;
    let malformed = |reason: &str| Error::MalformedHeader {
        format,
        offset: offset as u64,
        reason: reason.to_string(),
    };

    if &header[0..2] != b"BM" {
        return Err(malformed("bad magic"));
    }
    let data_offset = read_le32(header, 10).unwrap();
    let dib_size = read_le32(header, 14).unwrap();
    if !DIB_SIZES.contains(&dib_size) {
        return Err(malformed("implausible DIB header size"));
    }
    if data_offset < 14 + dib_size {
        return Err(malformed("pixel data offset inside headers"));
    }
    let width = read_le32(header, 18).unwrap() as i32;
    let height = read_le32(header, 22).unwrap() as i32;
    if !(1..=MAX_DIMENSION).contains(&width) || !(1..=MAX_DIMENSION).contains(&height) {
        return Err(malformed("dimensions out of range"));
    }
    let planes = read_le16(header, 26).unwrap();
    if planes != 1 {
        return Err(malformed("plane count must be 1"));
    }
    let bpp = read_le16(header, 28).unwrap();
    if ![1, 4, 8, 16, 24, 32].contains(&bpp) {
        return Err(malformed("unsupported bit depth"));
    }

    let mut fields = super::FieldMap::new();
    fields.insert("width".into(), json!(width));
    fields.insert("height".into(), json!(height));
    fields.insert("bits_per_pixel".into(), json!(bpp));
    Ok(ParsedHeader {
        fields,
        description: format!("BMP image, {width}x{height} pixels, {bpp}-bit"),
    })
}

pub(crate) fn write_header(buf: &mut [u8], width: u32, height: u32, bpp: u16) {
    let palette_len = if bpp <= 8 { 4 * (1u32 << bpp) } else { 0 };
    let row = (width * bpp as u32 / 8).div_ceil(4) * 4;
    let pixel_len = row * height;
    let data_offset = 54 + palette_len;

    let h = &mut buf[..MIN_HEADER_LEN];
    h.fill(0);
    h[0..2].copy_from_slice(b"BM");
    h[2..6].copy_from_slice(&(data_offset + pixel_len).to_le_bytes());
    h[10..14].copy_from_slice(&data_offset.to_le_bytes());
    h[14..18].copy_from_slice(&40u32.to_le_bytes());
    h[18..22].copy_from_slice(&width.to_le_bytes());
    h[22..26].copy_from_slice(&height.to_le_bytes());
    h[26..28].copy_from_slice(&1u16.to_le_bytes());
    h[28..30].copy_from_slice(&bpp.to_le_bytes());
    h[34..38].copy_from_slice(&pixel_len.to_le_bytes());
    h[38..42].copy_from_slice(&2835u32.to_le_bytes());
    h[42..46].copy_from_slice(&2835u32.to_le_bytes());
    if bpp <= 8 {
        h[46..50].copy_from_slice(&(1u32 << bpp).to_le_bytes());
    }
}
