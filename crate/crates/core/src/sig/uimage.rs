//! Legacy U-Boot uImage container: 64-byte big-endian header protected by
//! a CRC-32 over the header itself (CRC field zeroed).

use serde_json::json;

use super::{read_be32, unix_date, ParsedHeader};
use crate::crc32::crc32_ieee;
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 64;

const MAGIC: u32 = 0x2705_1956;

fn os_name(code: u8) -> String {
    match code {
        5 => "Linux".to_string(),
        17 => "U-Boot".to_string(),
        2 => "NetBSD".to_string(),
        16 => "QNX".to_string(),
        other => format!("os-{other}"),
    }
}

fn arch_name(code: u8) -> String {
    match code {
        2 => "ARM".to_string(),
        3 => "x86".to_string(),
        5 => "MIPS".to_string(),
        7 => "PowerPC".to_string(),
        22 => "AArch64".to_string(),
        other => format!("arch-{other}"),
    }
}

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Uimage;
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
    if read_be32(header, 0) != Some(MAGIC) {
        return Err(malformed("bad magic"));
    }
    let stored_hcrc = read_be32(header, 4).unwrap();
    let mut check = [0u8; MIN_HEADER_LEN];
    check.copy_from_slice(header);
    check[4..8].fill(0);
    if crc32_ieee(&check) != stored_hcrc {
        return Err(malformed("header CRC mismatch"));
    }

    let time = read_be32(header, 8).unwrap();
    let data_size = read_be32(header, 12).unwrap();
    let os = header[28];
    let arch = header[29];
    let name_bytes = &header[32..64];
    let name_end = name_bytes.iter().position(|&b| b == 0).unwrap_or(32);
    let image_name = String::from_utf8_lossy(&name_bytes[..name_end]).into_owned();

    if offset + MIN_HEADER_LEN + data_size as usize > payload.len() {
        return Err(truncated());
    }

    let mut fields = super::FieldMap::new();
    fields.insert("image_name".into(), json!(image_name));
    fields.insert("os".into(), json!(os_name(os)));
    fields.insert("architecture".into(), json!(arch_name(arch)));
    fields.insert("build_timestamp".into(), json!(unix_date(time)));
    fields.insert("data_size".into(), json!(data_size));

    let description = format!(
        "uImage: {}, {} ({})",
        image_name,
        arch_name(arch),
        unix_date(time)
    );
    Ok(ParsedHeader {
        fields,
        description,
    })
}

/// Parameters for a planted uImage header.
pub(crate) struct HeaderSpec<'a> {
    pub name: &'a str,
    pub time: u32,
    pub data_size: u32,
    pub load: u32,
    pub entry: u32,
    pub os: u8,
    pub arch: u8,
    pub image_type: u8,
    pub compression: u8,
}

/// Emit a 64-byte header with a correct header CRC. `data` is the payload
/// that follows the header (used for the data CRC field).
pub(crate) fn write_header(buf: &mut [u8], spec: &HeaderSpec<'_>, data: &[u8]) {
    let h = &mut buf[..MIN_HEADER_LEN];
    h.fill(0);
    h[0..4].copy_from_slice(&MAGIC.to_be_bytes());
    h[8..12].copy_from_slice(&spec.time.to_be_bytes());
    h[12..16].copy_from_slice(&spec.data_size.to_be_bytes());
    h[16..20].copy_from_slice(&spec.load.to_be_bytes());
    h[20..24].copy_from_slice(&spec.entry.to_be_bytes());
    h[24..28].copy_from_slice(&crc32_ieee(data).to_be_bytes());
    h[28] = spec.os;
    h[29] = spec.arch;
    h[30] = spec.image_type;
    h[31] = spec.compression;
    let name = spec.name.as_bytes();
    h[32..32 + name.len().min(31)].copy_from_slice(&name[..name.len().min(31)]);
    let hcrc = crc32_ieee(h);
    h[4..8].copy_from_slice(&hcrc.to_be_bytes());
}
