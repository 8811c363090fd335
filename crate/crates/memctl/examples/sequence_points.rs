//! The sequence-point restriction: stores lock, sequence points unlock.
//!
//! ```bash
//! cargo run --example sequence_points
//! ```

use memctl::implenv::Env;
use memctl::mem::{
    mem_alloc, mem_insert, mem_lock, mem_locks, mem_lookup, mem_unlock, Mem, ObjId, UbReason,
};
use memctl::place::Addr;
use memctl::types::{CType, IntType};
use memctl::value::Val;

fn main() {
    let env = Env::default();
    let o = ObjId(0);
    let a = Addr::whole(o, CType::sint());
    let m = mem_alloc(&env, o, &Val::int(IntType::SINT, 0), false, &Mem::new()).unwrap();

    // x = 3: store, then lock until the next sequence point.
    let m = mem_insert(&env, &a, &Val::int(IntType::SINT, 3), &m).unwrap();
    let m = mem_lock(&env, &a, &m).unwrap();

    // (x = 3) + (x = 4) — the second store in the same full expression hits
    // the locked permission.
    let second = mem_insert(&env, &a, &Val::int(IntType::SINT, 4), &m).err();
    println!("second store before ; = {second:?}");
    assert_eq!(second, Some(UbReason::Locked));
    // Even reading x is undefined while locked.
    println!("read before ;         = {:?}", mem_lookup(&env, &a, &m).err());

    // The ; unlocks everything written in the expression.
    let locks = mem_locks(&env, &m);
    println!("lockset before ;      = {} bits", locks.len());
    let m = mem_unlock(&locks, &m);
    println!("read after ;          = {:?}", mem_lookup(&env, &a, &m));
    let m = mem_insert(&env, &a, &Val::int(IntType::SINT, 4), &m).unwrap();
    println!("store after ;         = {:?}", mem_lookup(&env, &a, &m));
}
