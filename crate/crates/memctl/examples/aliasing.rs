//! Why a compiler may assume an `int*` and a `short*` do not alias: any pair
//! of frozen addresses is subtype-related, disjoint, or doubly undefined on
//! cross access.
//!
//! ```bash
//! cargo run --example aliasing
//! ```

use memctl::implenv::Env;
use memctl::mem::{mem_alloc, mem_force, mem_lookup, Mem, ObjId};
use memctl::place::{Addr, Frozenness, RefSeg};
use memctl::types::PtrType;
use memctl::refine::subtype;
use memctl::suites::aliasing_suite;
use memctl::types::{CType, IntType, Rank, TypeEnv};
use memctl::value::val_new;

fn main() {
    // union U { int x; short y; } u, byte-initialized: variant unknown.
    let mut types = TypeEnv::new();
    let short = CType::int(IntType::signed(Rank::Short));
    types.declare_compound("U", vec![CType::sint(), short.clone()]);
    let env = Env::with_types(types);
    let u = CType::Union("U".into());
    let o = ObjId(0);
    let m = mem_alloc(&env, o, &val_new(&env, &u).unwrap(), false, &Mem::new()).unwrap();

    // The two frozen pointers g() receives.
    let p = Addr::new(
        o,
        u.clone(),
        vec![RefSeg::Union(0, "U".into(), Frozenness::Frozen)],
        0,
        CType::sint(),
        PtrType::to(CType::sint()),
    );
    let q = Addr::new(
        o,
        u.clone(),
        vec![RefSeg::Union(1, "U".into(), Frozenness::Frozen)],
        0,
        short.clone(),
        PtrType::to(short.clone()),
    );

    println!(
        "int subtype of short? {}   short subtype of int? {}",
        subtype(&env, &p.sub_type, &q.sub_type),
        subtype(&env, &q.sub_type, &p.sub_type)
    );
    println!("disjoint?             {}", memctl::place::addr_disjoint(&env, &p, &q));

    // Neither — so both cross accesses must be undefined: reading *q forces
    // the union's variant, after which *p fails, and vice versa.
    let forced_q = mem_force(&env, &q, &m).unwrap();
    println!("*p after reading *q   = {:?}", mem_lookup(&env, &p, &forced_q).err());
    let forced_p = mem_force(&env, &p, &m).unwrap();
    println!("*q after reading *p   = {:?}", mem_lookup(&env, &q, &forced_p).err());

    // The full trichotomy over every enumerable frozen pair of the fixture.
    let report = aliasing_suite(0);
    print!("{}", report.render());
}
