//! LEB128 unsigned varints.

pub fn encode_varint(mut v: u64, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Decodes a varint at `*pos`, advancing it. `None` on truncation or overflow.
pub fn decode_varint(buf: &[u8], pos: &mut usize) -> Option<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let b = *buf.get(*pos)?;
        *pos += 1;
        if shift >= 64 {
            return None;
        }
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Some(v);
        }
        shift += 7;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        let mut b = Vec::new();
        encode_varint(300, &mut b);
        assert_eq!(b, [0xac, 0x02]);
        let mut pos = 0;
        assert_eq!(decode_varint(&[0x80], &mut pos), None);
    }

    proptest! {
        #[test]
        fn round_trip(vals in prop::collection::vec(any::<u64>(), 0..50)) {
            let mut b = Vec::new();
            for &v in &vals { encode_varint(v, &mut b); }
            let mut pos = 0;
            for &v in &vals { prop_assert_eq!(decode_varint(&b, &mut pos), Some(v)); }
            prop_assert_eq!(pos, b.len());
        }
    }
}
