//! Allocate, store, load, and free — and what each step does to the memory
//! trees underneath.
//!
//! ```bash
//! cargo run --example memory_basics
//! ```

use memctl::implenv::Env;
use memctl::mem::{
    dump_string, mem_alloc, mem_free, mem_freeable, mem_insert, mem_lookup, Mem, ObjId,
    UbReason,
};
use memctl::place::{Addr, RefSeg};
use memctl::types::PtrType;
use memctl::types::{CType, IntType};
use memctl::value::{val_new, Val};

fn main() {
    let env = Env::default();
    let int = CType::sint();

    // malloc(sizeof(int)) — a one-element array object with indeterminate
    // contents and full permissions.
    let arr = CType::array(int.clone(), 1);
    let o = ObjId(0);
    let m = mem_alloc(&env, o, &val_new(&env, &arr).unwrap(), true, &Mem::new()).unwrap();

    let elem = Addr::new(
        o,
        arr.clone(),
        vec![RefSeg::Array(0, int.clone(), 1)],
        0,
        int.clone(),
        PtrType::to(int.clone()),
    );
    println!("fresh read   = {:?}", mem_lookup(&env, &elem, &m));

    let m = mem_insert(&env, &elem, &Val::int(IntType::SINT, 42), &m).unwrap();
    println!("after store  = {:?}", mem_lookup(&env, &elem, &m));

    // One past the end is typed but not readable.
    let mut end = elem.clone();
    end.byte_off = 4;
    assert_eq!(mem_lookup(&env, &end, &m), Err(UbReason::EndOfArray));
    println!("end-of-array = undefined ({})", UbReason::EndOfArray);

    // Deallocation needs the malloc flag and the full permission.
    assert!(mem_freeable(&env, &elem, &m));
    let m = mem_free(o, &m).unwrap();
    assert_eq!(mem_lookup(&env, &elem, &m), Err(UbReason::DeadObject));
    println!("after free   = undefined ({})", UbReason::DeadObject);

    println!("\nfinal state:\n{}", dump_string(&m));
}
