//! Byte-level access to object representations: symbolic bytes, padding,
//! and pointer fragments.
//!
//! ```bash
//! cargo run --example byte_views
//! ```

use memctl::implenv::Env;
use memctl::mem::{mem_alloc, mem_insert, mem_lookup, Mem, ObjId};
use memctl::place::{Addr, Ptr, RefSeg};
use memctl::types::PtrType;
use memctl::types::{CType, IntType, Rank, TypeEnv};
use memctl::value::{BaseVal, Val};

fn main() {
    // struct S { short x; short *r; } s = { 10, &s.x };
    let mut types = TypeEnv::new();
    let short = CType::int(IntType::signed(Rank::Short));
    types.declare_compound("S", vec![short.clone(), CType::ptr_to(short.clone())]);
    let env = Env::with_types(types);
    let st = CType::Struct("S".into());
    let o = ObjId(0);

    let x_addr = Addr::new(
        o,
        st.clone(),
        vec![RefSeg::Struct(0, "S".into())],
        0,
        short.clone(),
        PtrType::to(short.clone()),
    );
    let s = Val::Struct(
        "S".into(),
        vec![
            Val::int(IntType::signed(Rank::Short), 10),
            Val::Base(BaseVal::Ptr(Ptr::Ptr(x_addr.clone()))),
        ],
    );
    let m = mem_alloc(&env, o, &s, false, &Mem::new()).unwrap();

    // ((unsigned char*)&s)[i] — a byte view of the whole struct.
    let byte = |i: usize| {
        Addr::new(o, st.clone(), vec![], i, st.clone(), PtrType::to(CType::uchar()))
    };
    for i in 0..8 {
        let got = mem_lookup(&env, &byte(i), &m).unwrap();
        println!("byte {i} = {}", memctl::value::val_json(&got));
    }
    // Bytes 0-1 are the short's concrete bits, 2-3 are indeterminate
    // padding, 4-7 are symbolic pointer fragments.

    // Storing into a padding byte is masked: the byte stays indeterminate.
    let m2 = mem_insert(&env, &byte(2), &Val::int(IntType::UCHAR, 0xAB), &m).unwrap();
    println!(
        "padding byte after store = {}",
        memctl::value::val_json(&mem_lookup(&env, &byte(2), &m2).unwrap())
    );

    // Storing into a data byte lands exactly there.
    let m3 = mem_insert(&env, &byte(1), &Val::int(IntType::UCHAR, 1), &m).unwrap();
    println!(
        "s.x after poking byte 1  = {}",
        memctl::value::val_json(&mem_lookup(&env, &x_addr, &m3).unwrap())
    );
}
