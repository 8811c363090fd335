//! Deterministic generators for property suites.
//!
//! Everything is driven by a seeded ChaCha stream so that suite reports are
//! byte-identical across runs. The fixture environment nests a union inside
//! a struct next to an array, which is enough to reach every tree
//! constructor, padding, and the type-punning rules.

use crate::implenv::Env;
use crate::mem::{mem_alloc, mem_env_of, mem_force, Mem, MemEnv, ObjId};
use crate::perm::Perm;
use crate::place::{ref_size, ref_typed, Addr, Frozenness, Ref, RefSeg};
use crate::sepalg::{rat, SepAlg};
use crate::tree::MTree;
use crate::types::{CType, IntType, PtrType, Rank, TypeEnv};
use crate::value::{of_val, val_new, val_unflatten, BaseVal, Val};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `struct S { union U u; short s; int a[2]; }`, `union U { int x; short y; }`,
/// plus one declared function for function pointers.
pub fn fixture_env() -> Env {
    let mut types = TypeEnv::new();
    types.declare_compound("U", vec![CType::sint(), short_t()]);
    types.declare_compound(
        "S",
        vec![
            CType::Union("U".into()),
            short_t(),
            CType::array(CType::sint(), 2),
        ],
    );
    types.declare_function("id_int", vec![CType::sint()], CType::sint());
    Env::with_types(types)
}

pub fn short_t() -> CType {
    CType::int(IntType::signed(Rank::Short))
}

/// The types values and trees are generated at.
pub fn fixture_types() -> Vec<CType> {
    vec![
        CType::sint(),
        short_t(),
        CType::uchar(),
        CType::ptr_to(CType::sint()),
        CType::array(CType::sint(), 2),
        CType::array(short_t(), 3),
        CType::Union("U".into()),
        CType::Struct("S".into()),
        CType::array(CType::Union("U".into()), 2),
    ]
}

/// A deterministic random source.
pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn usize(&mut self, bound: usize) -> usize {
        self.rng.gen_range(0..bound.max(1))
    }

    pub fn bool(&mut self) -> bool {
        self.rng.gen()
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.usize(xs.len())]
    }

    pub fn int_in(&mut self, lo: i128, hi: i128) -> i128 {
        self.rng.gen_range(lo..=hi)
    }

    /// A valid, mapped permission (readable or better, occasionally with an
    /// outstanding token).
    pub fn perm(&mut self) -> Perm {
        match self.usize(5) {
            0 => Perm::full(),
            1 => Perm::full().half(),
            2 => Perm::full().difference(&Perm::token()),
            3 => Perm::constant(rat(1, 2)),
            _ => Perm::full().half().half(),
        }
    }

    /// A flat permission sequence; uniform per object so that union
    /// reinterpretation stays possible when exclusively owned.
    pub fn perm_seq(&mut self, n: usize) -> Vec<Perm> {
        vec![self.perm(); n]
    }

    /// A typed value of type `t`; pointer leaves draw from `ptr_pool`.
    pub fn value(&mut self, env: &Env, t: &CType, ptr_pool: &[Addr]) -> Val {
        match t {
            CType::Base(crate::types::BaseType::Int(it)) => {
                if self.usize(6) == 0 {
                    return Val::Base(BaseVal::Indet(crate::types::BaseType::Int(*it)));
                }
                let bits = env.ienv.int_bits(it.rank) as u32;
                let (lo, hi) = match it.sign {
                    crate::types::Signedness::Signed => {
                        (-(1i128 << (bits - 1)), (1i128 << (bits - 1)) - 1)
                    }
                    crate::types::Signedness::Unsigned => (0, (1i128 << bits) - 1),
                };
                Val::int(*it, self.int_in(lo, hi))
            }
            CType::Base(crate::types::BaseType::Ptr(pt)) => {
                let candidates: Vec<&Addr> = ptr_pool
                    .iter()
                    .filter(|a| a.cast_type == *pt)
                    .collect();
                match self.usize(4) {
                    0 => Val::Base(BaseVal::Ptr(crate::place::Ptr::Null(pt.clone()))),
                    1 if matches!(pt, PtrType::Fun(..)) => Val::Base(BaseVal::Ptr(
                        crate::place::Ptr::Fun("id_int".into(), vec![CType::sint()], CType::sint()),
                    )),
                    _ if !candidates.is_empty() => {
                        let a = (*self.pick(&candidates)).clone();
                        Val::Base(BaseVal::Ptr(crate::place::Ptr::Ptr(a)))
                    }
                    _ => Val::Base(BaseVal::Indet(crate::types::BaseType::Ptr(pt.clone()))),
                }
            }
            CType::Base(crate::types::BaseType::Void) => Val::Base(BaseVal::Void),
            CType::Array(elem, n) => Val::Array(
                (**elem).clone(),
                (0..*n).map(|_| self.value(env, elem, ptr_pool)).collect(),
            ),
            CType::Struct(tag) => {
                let fields = env.types.compound(tag).cloned().unwrap_or_default();
                Val::Struct(
                    tag.clone(),
                    fields.iter().map(|f| self.value(env, f, ptr_pool)).collect(),
                )
            }
            CType::Union(tag) => {
                let fields = env.types.compound(tag).cloned().unwrap_or_default();
                if self.bool() {
                    let i = self.usize(fields.len());
                    Val::Union(
                        tag.clone(),
                        i,
                        Box::new(self.value(env, &fields[i], ptr_pool)),
                    )
                } else {
                    // An unknown-variant union: read one off the bits of a
                    // known-variant value, which keeps the bits coherent.
                    let i = self.usize(fields.len());
                    let inner = Val::Union(
                        tag.clone(),
                        i,
                        Box::new(self.value(env, &fields[i], ptr_pool)),
                    );
                    let bits = crate::value::val_flatten(env, &inner).expect("typed");
                    val_unflatten(env, t, &bits).expect("length matches")
                }
            }
        }
    }

    /// A typed tree at `t` with its own permissions.
    pub fn tree(&mut self, env: &Env, t: &CType, ptr_pool: &[Addr]) -> MTree {
        let n = env.ienv.bit_size_of(&env.types, t).expect("fixture type");
        let v = self.value(env, t, ptr_pool);
        of_val(env, &self.perm_seq(n), &v).expect("typed value")
    }

    /// A memory of `objs` objects over the fixture types, with full
    /// permissions, pointers into earlier objects, and some forced unions.
    pub fn memory(&mut self, env: &Env, objs: usize) -> (Mem, MemEnv) {
        let mut m = Mem::new();
        let mut pool: Vec<Addr> = Vec::new();
        let types = fixture_types();
        for i in 0..objs {
            let o = ObjId(i as u64);
            let t = self.pick(&types).clone();
            let v = if self.bool() {
                self.value(env, &t, &pool)
            } else {
                val_new(env, &t).expect("fixture type")
            };
            m = mem_alloc(env, o, &v, self.bool(), &m).expect("fresh id");
            for a in subobject_addrs(env, o, &t, false) {
                pool.push(a);
            }
        }
        // Occasionally force a union path to pin a variant.
        if objs > 0 && self.usize(3) == 0 {
            let all: Vec<Addr> = m
                .ids()
                .flat_map(|o| {
                    let t = match m.get(o) {
                        Some(crate::mem::MemEntry::Obj(w, _)) => w.type_of(),
                        _ => return Vec::new(),
                    };
                    subobject_addrs(env, o, &t, false)
                })
                .collect();
            if !all.is_empty() {
                let a = self.pick(&all).clone();
                if let Ok(m2) = mem_force(env, &a, &m) {
                    m = m2;
                }
            }
        }
        let delta = mem_env_of(&m);
        (m, delta)
    }
}

/// Converts a reference with real array indices into the canonical address
/// form (head reference plus byte offset).
pub fn canonical_addr(env: &Env, o: ObjId, full: &CType, r: &Ref, sub: &CType) -> Addr {
    let (ref_path, byte_off) = match r.last() {
        Some(RefSeg::Array(i, elem, n)) => {
            let mut rr = r.clone();
            *rr.last_mut().unwrap() = RefSeg::Array(0, elem.clone(), *n);
            let sz = env.ienv.size_of(&env.types, elem).expect("fixture type");
            (rr, i * sz)
        }
        _ => (r.clone(), 0),
    };
    Addr::new(
        o,
        full.clone(),
        ref_path,
        byte_off,
        sub.clone(),
        PtrType::to(sub.clone()),
    )
}

fn subobject_refs(env: &Env, t: &CType, frozen_variants: bool) -> Vec<(Ref, CType)> {
    let mut out = vec![(Vec::new(), t.clone())];
    match t {
        CType::Array(elem, n) => {
            for i in 0..*n {
                for (mut r, sub) in subobject_refs(env, elem, frozen_variants) {
                    r.insert(0, RefSeg::Array(i, (**elem).clone(), *n));
                    out.push((r, sub));
                }
            }
        }
        CType::Struct(tag) => {
            if let Some(fields) = env.types.compound(tag) {
                for (i, f) in fields.clone().iter().enumerate() {
                    for (mut r, sub) in subobject_refs(env, f, frozen_variants) {
                        r.insert(0, RefSeg::Struct(i, tag.clone()));
                        out.push((r, sub));
                    }
                }
            }
        }
        CType::Union(tag) => {
            if let Some(fields) = env.types.compound(tag) {
                let quals: &[Frozenness] = if frozen_variants {
                    &[Frozenness::Unfrozen, Frozenness::Frozen]
                } else {
                    &[Frozenness::Unfrozen]
                };
                for (i, f) in fields.clone().iter().enumerate() {
                    for q in quals {
                        for (mut r, sub) in subobject_refs(env, f, frozen_variants) {
                            r.insert(0, RefSeg::Union(i, tag.clone(), *q));
                            out.push((r, sub));
                        }
                    }
                }
            }
        }
        CType::Base(_) => {}
    }
    out
}

/// All strict whole-subobject addresses of object `o : t`, cast at their own
/// type. With `frozen_variants`, union segments are enumerated in both
/// annotations.
pub fn subobject_addrs(env: &Env, o: ObjId, t: &CType, frozen_variants: bool) -> Vec<Addr> {
    subobject_refs(env, t, frozen_variants)
        .into_iter()
        .map(|(r, sub)| canonical_addr(env, o, t, &r, &sub))
        .collect()
}

/// Byte-cast addresses for every byte of every subobject.
pub fn byte_addrs(env: &Env, o: ObjId, t: &CType) -> Vec<Addr> {
    let mut out = Vec::new();
    for (r, sub) in subobject_refs(env, t, false) {
        let base = canonical_addr(env, o, t, &r, &sub);
        let sz = env.ienv.size_of(&env.types, &sub).expect("fixture type");
        for b in 0..sz * ref_size(&base.ref_path) {
            let mut a = base.clone();
            a.byte_off = b;
            a.cast_type = PtrType::to(CType::uchar());
            out.push(a);
        }
    }
    out
}

/// One-past-the-end addresses of every subobject.
pub fn end_addrs(env: &Env, o: ObjId, t: &CType) -> Vec<Addr> {
    let mut out = Vec::new();
    for (r, sub) in subobject_refs(env, t, false) {
        let base = canonical_addr(env, o, t, &r, &sub);
        let sz = env.ienv.size_of(&env.types, &sub).expect("fixture type");
        let mut a = base.clone();
        a.byte_off = sz * ref_size(&a.ref_path);
        out.push(a);
    }
    out
}

/// Sanity check used by the suites: the enumerated addresses really are
/// typed.
pub fn addr_well_typed(env: &Env, delta: &MemEnv, a: &Addr) -> bool {
    crate::place::addr_typed(env, delta, a).is_ok()
        && ref_typed(env, &a.ref_path, &a.full_type).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::place::addr_strict;

    #[test]
    fn enumerated_addresses_are_typed() {
        let env = fixture_env();
        let mut g = Gen::new(7);
        let (m, delta) = g.memory(&env, 3);
        for o in m.ids() {
            let Some(t) = delta.type_of(o).cloned() else { continue };
            for a in subobject_addrs(&env, o, &t, true) {
                assert!(addr_well_typed(&env, &delta, &a), "{a:?}");
                assert!(addr_strict(&env, &a), "{a:?}");
            }
            for a in byte_addrs(&env, o, &t) {
                assert!(addr_well_typed(&env, &delta, &a), "{a:?}");
            }
            for a in end_addrs(&env, o, &t) {
                assert!(addr_well_typed(&env, &delta, &a), "{a:?}");
                assert!(!addr_strict(&env, &a), "{a:?}");
            }
        }
    }

    #[test]
    fn generated_values_are_typed() {
        let env = fixture_env();
        let mut g = Gen::new(11);
        let (_, delta) = g.memory(&env, 2);
        let pool: Vec<Addr> = delta
            .iter()
            .flat_map(|(o, (t, _))| subobject_addrs(&env, *o, t, false))
            .collect();
        for t in fixture_types() {
            for _ in 0..50 {
                let v = g.value(&env, &t, &pool);
                assert_eq!(
                    crate::value::val_typed(&env, &delta, &v),
                    Ok(t.clone()),
                    "{v:?}"
                );
            }
        }
    }

    #[test]
    fn generated_trees_are_typed() {
        let env = fixture_env();
        let mut g = Gen::new(13);
        let (_, delta) = g.memory(&env, 2);
        for t in fixture_types() {
            for _ in 0..30 {
                let w = g.tree(&env, &t, &[]);
                assert_eq!(crate::tree::tree_typed(&env, &delta, &w), Ok(t.clone()));
            }
        }
    }

    #[test]
    fn generated_memories_are_valid() {
        let env = fixture_env();
        for seed in 0..20 {
            let mut g = Gen::new(seed);
            let (m, delta) = g.memory(&env, 3);
            assert!(crate::mem::mem_valid(&env, &delta, &m), "seed {seed}");
        }
    }

    #[test]
    fn same_seed_same_memory() {
        let env = fixture_env();
        let (m1, _) = Gen::new(42).memory(&env, 4);
        let (m2, _) = Gen::new(42).memory(&env, 4);
        assert_eq!(crate::mem::dump_string(&m1), crate::mem::dump_string(&m2));
    }
}
