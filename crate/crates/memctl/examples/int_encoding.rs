//! Integer object representations: two's complement bit lists and
//! endianness.
//!
//! ```bash
//! cargo run --example int_encoding
//! ```

use memctl::implenv::{Endianness, ImplConfig, ImplEnv};
use memctl::intcode::{bits_to_string, int_of_bits, int_to_bits};
use memctl::types::{IntType, Rank};

fn main() {
    let le = ImplEnv::test_default();
    let short = IntType::signed(Rank::Short);

    // Bits are stored least significant first on the default target.
    for x in [33i128, 10, -1] {
        let bits = int_to_bits(&le, short, x);
        println!("{x:>4} as short (le) = {}", bits_to_string(&bits));
        assert_eq!(int_of_bits(&le, short, &bits), Some(x));
    }

    // A big-endian target permutes the bytes of the representation.
    let mut cfg = ImplConfig::test_default();
    cfg.endianness = Endianness::Big;
    let be = ImplEnv::from_config(cfg).unwrap();
    for x in [33i128, 10] {
        let bits = int_to_bits(&be, short, x);
        println!("{x:>4} as short (be) = {}", bits_to_string(&bits));
        assert_eq!(int_of_bits(&be, short, &bits), Some(x));
    }

    // Every 16-bit pattern decodes and re-encodes to itself.
    let it = IntType::unsigned(Rank::Short);
    let mut checked = 0;
    for pattern in 0..(1u32 << 16) {
        let bs: Vec<bool> = (0..16).map(|i| pattern >> i & 1 == 1).collect();
        let x = int_of_bits(&le, it, &bs).unwrap();
        assert_eq!(int_to_bits(&le, it, x), bs);
        checked += 1;
    }
    println!("checked {checked} exhaustive 16-bit roundtrips");
}
