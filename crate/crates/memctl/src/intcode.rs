//! Integer coding: range checks and the bit-level encoding of integers.
//!
//! Values are encoded as two's complement in little-endian bit order (least
//! significant bit first) and then permuted by the environment's endianize
//! function. Encoding and decoding are exact inverses on in-range values.

use crate::implenv::ImplEnv;
use crate::types::{IntType, Signedness};

/// Whether `x` is representable in integer type `it`.
pub fn int_typed(ie: &ImplEnv, x: i128, it: IntType) -> bool {
    let bits = ie.int_bits(it.rank) as u32;
    match it.sign {
        Signedness::Signed => {
            let bound = 1i128 << (bits - 1);
            -bound <= x && x < bound
        }
        Signedness::Unsigned => {
            let bound = 1i128 << bits;
            0 <= x && x < bound
        }
    }
}

/// Encodes `x` at type `it`; meaningful when `int_typed` holds.
pub fn int_to_bits(ie: &ImplEnv, it: IntType, x: i128) -> Vec<bool> {
    let bits = ie.int_bits(it.rank);
    let mut le = Vec::with_capacity(bits);
    let mut v = x as u128; // two's complement wrap for negatives
    for _ in 0..bits {
        le.push(v & 1 == 1);
        v >>= 1;
    }
    ie.endianize(it.rank, le)
}

/// Decodes a bit sequence of exactly the type's width.
pub fn int_of_bits(ie: &ImplEnv, it: IntType, bs: &[bool]) -> Option<i128> {
    let bits = ie.int_bits(it.rank);
    if bs.len() != bits {
        return None;
    }
    let le = ie.deendianize(it.rank, bs.to_vec());
    let mut v: i128 = 0;
    for (i, b) in le.iter().enumerate() {
        if *b {
            v |= 1i128 << i;
        }
    }
    if it.sign == Signedness::Signed && le[bits - 1] {
        v -= 1i128 << bits;
    }
    Some(v)
}

/// Renders a bit list the way dumps do: first bit first, `1`/`0`.
pub fn bits_to_string(bs: &[bool]) -> String {
    bs.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implenv::ImplEnv;
    use crate::types::Rank;
    use proptest::prelude::*;

    fn ie() -> ImplEnv {
        ImplEnv::test_default()
    }

    #[test]
    fn range_boundaries() {
        let schar = IntType::signed(Rank::Char);
        assert!(int_typed(&ie(), 127, schar));
        assert!(!int_typed(&ie(), 128, schar));
        assert!(int_typed(&ie(), 255, IntType::unsigned(Rank::Char)));
        assert!(!int_typed(&ie(), 256, IntType::unsigned(Rank::Char)));
        assert!(int_typed(&ie(), -32768, IntType::signed(Rank::Short)));
        assert!(!int_typed(&ie(), -32769, IntType::signed(Rank::Short)));
    }

    #[test]
    fn short_33_bit_pattern() {
        // LSB-first two's complement of 33 in a 16-bit type.
        let bs = int_to_bits(&ie(), IntType::signed(Rank::Short), 33);
        assert_eq!(bits_to_string(&bs), "1000010000000000");
    }

    #[test]
    fn short_10_bit_pattern() {
        let bs = int_to_bits(&ie(), IntType::signed(Rank::Short), 10);
        assert_eq!(bits_to_string(&bs), "0101000000000000");
    }

    #[test]
    fn big_endian_reverses_bytes() {
        let mut cfg = crate::implenv::ImplConfig::test_default();
        cfg.endianness = crate::implenv::Endianness::Big;
        let ie = ImplEnv::from_config(cfg).unwrap();
        let bs = int_to_bits(&ie, IntType::signed(Rank::Short), 33);
        assert_eq!(bits_to_string(&bs), "0000000010000100");
        assert_eq!(int_of_bits(&ie, IntType::signed(Rank::Short), &bs), Some(33));
    }

    #[test]
    fn one_byte_roundtrip_exhaustive() {
        for it in [IntType::signed(Rank::Char), IntType::unsigned(Rank::Char)] {
            let (lo, hi) = match it.sign {
                Signedness::Signed => (-128, 128),
                Signedness::Unsigned => (0, 256),
            };
            for x in lo..hi {
                let bs = int_to_bits(&ie(), it, x);
                assert_eq!(bs.len(), 8);
                assert_eq!(int_of_bits(&ie(), it, &bs), Some(x));
            }
        }
    }

    #[test]
    fn decode_length_mismatch() {
        assert_eq!(int_of_bits(&ie(), IntType::signed(Rank::Short), &[false; 8]), None);
    }

    proptest! {
        #[test]
        fn roundtrip_longlong(x in any::<i64>()) {
            let it = IntType::signed(Rank::LongLong);
            let bs = int_to_bits(&ie(), it, x as i128);
            prop_assert_eq!(int_of_bits(&ie(), it, &bs), Some(x as i128));
        }

        #[test]
        fn decode_then_encode_is_identity(bs in proptest::collection::vec(any::<bool>(), 16)) {
            let it = IntType::unsigned(Rank::Short);
            let x = int_of_bits(&ie(), it, &bs).unwrap();
            prop_assert!(int_typed(&ie(), x, it));
            prop_assert_eq!(int_to_bits(&ie(), it, x), bs);
        }
    }
}
