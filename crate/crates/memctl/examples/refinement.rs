//! Memory refinements: relating a source memory to a more defined target,
//! and the transformations this justifies.
//!
//! ```bash
//! cargo run --example refinement
//! ```

use memctl::implenv::Env;
use memctl::mem::{mem_env_of, mem_insert, mem_lookup, Mem, ObjId};
use memctl::mem::mem_alloc;
use memctl::perm::Perm;
use memctl::place::Addr;
use memctl::refine::{mem_refine, tree_refine, val_refine, RefineCx, Renaming};
use memctl::tree::{tree_flatten, tree_unflatten, MTree};
use memctl::types::{CType, IntType, Rank, TypeEnv};
use memctl::value::{of_val, to_val, Val};

fn main() {
    let mut types = TypeEnv::new();
    let short = CType::int(IntType::signed(Rank::Short));
    types.declare_compound("U", vec![CType::sint(), short]);
    let env = Env::with_types(types);

    // Identity: every valid memory refines itself.
    let m = mem_alloc(&env, ObjId(0), &Val::int(IntType::SINT, 5), false, &Mem::new()).unwrap();
    let delta = mem_env_of(&m);
    let id = Renaming::identity(&delta);
    let cx = RefineCx::with_identity(&env, &id, &delta);
    println!("m ⊑ m                      : {}", mem_refine(&cx, &m, &m));

    // Constant propagation: the value read back after a store refines the
    // stored constant, so the compiler may substitute it.
    let a = Addr::whole(ObjId(0), CType::sint());
    let v = Val::int(IntType::SINT, 42);
    let m2 = mem_insert(&env, &a, &v, &m).unwrap();
    let got = mem_lookup(&env, &a, &m2).unwrap();
    println!(
        "lookup-after-store ⊑ stored: {}",
        val_refine(&cx, &got, &v, &CType::sint())
    );

    // Byte-wise copying: flattening a union tree and reading it back
    // forgets the variant — the source refines the copy.
    let u = CType::Union("U".into());
    let n = env.ienv.bit_size_of(&env.types, &u).unwrap();
    let w = of_val(
        &env,
        &vec![Perm::full(); n],
        &Val::Union("U".into(), 0, Box::new(Val::int(IntType::SINT, 3))),
    )
    .unwrap();
    let bytewise = tree_unflatten(&env, &u, &tree_flatten(&w)).unwrap();
    println!(
        "w is a {:?}, its byte copy a {:?}",
        std::mem::discriminant(&w),
        std::mem::discriminant(&bytewise)
    );
    println!("w ⊑ unflatten(flatten w)   : {}", tree_refine(&cx, &w, &bytewise));

    // An assignment copy converts through abstract values; the copy refines
    // the original.
    let perms: Vec<Perm> = tree_flatten(&w).iter().map(|pb| pb.perm.clone()).collect();
    let assigned: MTree = of_val(&env, &perms, &to_val(&env, &w).unwrap()).unwrap();
    println!("of_val(to_val w) ⊑ w       : {}", tree_refine(&cx, &assigned, &w));

    // Renamings coalesce objects into compound targets.
    let mut f = Renaming::new();
    f.insert(ObjId(0), ObjId(9), vec![]);
    println!("rename 0 -> 9 composes     : {:?}", Renaming::compose(&f, &id).get(ObjId(0)));
}
