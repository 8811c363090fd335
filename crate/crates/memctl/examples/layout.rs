//! Struct and union layout: sizes, alignment, field offsets and padding.
//!
//! ```bash
//! cargo run --example layout
//! ```

use memctl::implenv::Env;
use memctl::types::{CType, IntType, Rank, TypeEnv};

fn main() {
    // struct S { short x; short *r; }  — two bytes of padding before the
    // 4-aligned pointer on the default ilp32-like target.
    let mut types = TypeEnv::new();
    let short = CType::int(IntType::signed(Rank::Short));
    types.declare_compound("S", vec![short.clone(), CType::ptr_to(short.clone())]);
    types.declare_compound("U", vec![CType::sint(), short.clone()]);
    let env = Env::with_types(types);
    let ie = &env.ienv;

    for t in [
        CType::sint(),
        short.clone(),
        CType::ptr_to(CType::sint()),
        CType::array(CType::sint(), 4),
        CType::Struct("S".into()),
        CType::Union("U".into()),
    ] {
        println!(
            "{t:<12} size {:>2}  align {}  bits {}",
            ie.size_of(&env.types, &t).unwrap(),
            ie.align_of(&env.types, &t).unwrap(),
            ie.bit_size_of(&env.types, &t).unwrap(),
        );
    }

    let fields = env.types.compound("S").unwrap().clone();
    println!("struct S slots    {:?}", ie.field_sizes(&env.types, &fields).unwrap());
    for i in 0..fields.len() {
        println!(
            "  field {i} at byte offset {}",
            ie.offset_of(&env.types, &fields, i).unwrap()
        );
    }

    // The environment validates its own layout constraints.
    ie.validate(&env.types).unwrap();
    println!("layout constraints hold");
}
