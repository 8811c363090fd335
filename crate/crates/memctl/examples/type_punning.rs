//! Effective types in action: direct union punning is allowed, punning
//! through a stored pointer is not, and reads force union variants.
//!
//! ```bash
//! cargo run --example type_punning
//! ```

use memctl::implenv::Env;
use memctl::mem::{mem_alloc, mem_force, mem_insert, mem_lookup, Mem, ObjId, UbReason};
use memctl::place::{Addr, Frozenness, RefSeg};
use memctl::types::PtrType;
use memctl::types::{CType, IntType, Rank, TypeEnv};
use memctl::value::{val_new, Val};

fn main() {
    // union U { int x; short y; } u = { .x = 3 };
    let mut types = TypeEnv::new();
    let short = CType::int(IntType::signed(Rank::Short));
    types.declare_compound("U", vec![CType::sint(), short.clone()]);
    let env = Env::with_types(types);
    let u = CType::Union("U".into());
    let o = ObjId(0);

    let variant = |i: usize, q: Frozenness| {
        let sub = if i == 0 { CType::sint() } else { short.clone() };
        Addr::new(
            o,
            u.clone(),
            vec![RefSeg::Union(i, "U".into(), q)],
            0,
            sub.clone(),
            PtrType::to(sub),
        )
    };

    let m = mem_alloc(&env, o, &val_new(&env, &u).unwrap(), false, &Mem::new()).unwrap();
    let m = mem_insert(&env, &variant(0, Frozenness::Unfrozen), &Val::int(IntType::SINT, 3), &m)
        .unwrap();

    // u.y — the access goes directly through the union object, so the
    // reference is unfrozen and the int's bits reinterpret as a short.
    let direct = mem_lookup(&env, &variant(1, Frozenness::Unfrozen), &m);
    println!("u.y directly        = {direct:?}");

    // *p where short *p = &u.y — storing the pointer froze it, and a frozen
    // reference may not switch the variant.
    let stored = mem_lookup(&env, &variant(1, Frozenness::Frozen), &m);
    println!("*p via stored &u.y  = {stored:?}");
    assert_eq!(stored, Err(UbReason::EffectiveTypes));

    // The direct read, used as a real access, forces the variant to y;
    // afterwards even the frozen pointer to x is dead for stores.
    let m = mem_force(&env, &variant(1, Frozenness::Unfrozen), &m).unwrap();
    let after = mem_insert(
        &env,
        &variant(0, Frozenness::Frozen),
        &Val::int(IntType::SINT, 10),
        &m,
    );
    println!("store via frozen &u.x after reading u.y = {:?}", after.err());
}
