//! CRC-32 (reflected, polynomial 0xEDB88320) in the two parameterizations
//! this codebase needs: the zlib/IEEE form used by gzip and uImage header
//! checksums, and the raw form (init 0, no final inversion) used by JFFS2
//! node header CRCs.

const POLY: u32 = 0xEDB8_8320;

const fn build_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ POLY } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static TABLE: [u32; 256] = build_table();

fn update(mut crc: u32, data: &[u8]) -> u32 {
    for &b in data {
        crc = TABLE[((crc ^ b as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    crc
}

/// Standard CRC-32 (init 0xFFFFFFFF, final XOR 0xFFFFFFFF) as produced by
/// zlib's `crc32()`.
pub fn crc32_ieee(data: &[u8]) -> u32 {
    update(0xFFFF_FFFF, data) ^ 0xFFFF_FFFF
}

/// CRC-32 with zero seed and no final inversion, matching the convention
/// JFFS2 uses for its node header CRCs.
pub fn crc32_jffs2(data: &[u8]) -> u32 {
    update(0, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bit-at-a-time reimplementation, kept deliberately table-free.
    fn bitwise(init: u32, xorout: u32, data: &[u8]) -> u32 {
        let mut crc = init;
        for &b in data {
            crc ^= b as u32;
            for _ in 0..8 {
                crc = if crc & 1 != 0 { (crc >> 1) ^ POLY } else { crc >> 1 };
            }
        }
        crc ^ xorout
    }

    #[test]
    fn ieee_matches_check_value() {
        assert_eq!(crc32_ieee(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn both_variants_match_bitwise_reference() {
        let samples: &[&[u8]] = &[b"", b"a", b"123456789", &[0xFF; 64], &[0x00; 13]];
        for s in samples {
            assert_eq!(crc32_ieee(s), bitwise(0xFFFF_FFFF, 0xFFFF_FFFF, s));
            assert_eq!(crc32_jffs2(s), bitwise(0, 0, s));
        }
    }
}
