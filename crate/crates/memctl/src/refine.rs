//! Memory refinements: renaming-indexed relations under which a target
//! memory may be more defined than a source memory.
//!
//! A renaming maps source objects to (target object, reference) pairs,
//! coalescing objects into subobjects of compound targets. On top of it,
//! refinement judgments for addresses, pointers, bits, trees, values and
//! memories allow the target to replace indeterminate bits and dead-pointer
//! fragments by arbitrary valid bits, to forget union variants, and to
//! unfreeze union annotations. All memory operations are preserved by
//! refinement, which is what justifies transformations like constant
//! propagation and byte-wise copying.

use crate::implenv::Env;
use crate::mem::{mem_valid, Mem, MemEntry, MemEnv, ObjId};
use crate::place::{
    addr_typed, ptr_typed, ref_disjoint, ref_frozen, ref_typed, Addr, Frozenness, Ptr, Ref,
    RefSeg,
};
use crate::tree::{
    bit_valid, pbit_valid, ptr_bit_size, tree_flatten, tree_lookup, tree_typed, Bit, MTree, PBit,
};
use crate::types::{ptr_type_valid, CType};
use crate::value::{val_typed, BaseVal, Val};
use std::collections::BTreeMap;

/// A renaming function: a finite partial map from source objects to target
/// (object, reference) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Renaming {
    map: BTreeMap<ObjId, (ObjId, Ref)>,
}

impl Renaming {
    pub fn new() -> Self {
        Renaming::default()
    }

    pub fn insert(&mut self, from: ObjId, to: ObjId, r: Ref) {
        self.map.insert(from, (to, r));
    }

    pub fn get(&self, o: ObjId) -> Option<&(ObjId, Ref)> {
        self.map.get(&o)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjId, &(ObjId, Ref))> {
        self.map.iter()
    }

    /// The identity renaming on everything `delta` types.
    pub fn identity(delta: &MemEnv) -> Renaming {
        let mut f = Renaming::new();
        for (o, _) in delta.iter() {
            f.insert(*o, *o, Vec::new());
        }
        f
    }

    /// `g ∘ f`: follow `f`, then `g`, concatenating the references.
    pub fn compose(g: &Renaming, f: &Renaming) -> Renaming {
        let mut out = Renaming::new();
        for (o1, (o2, r2)) in f.iter() {
            if let Some((o3, r3)) = g.get(*o2) {
                let mut r = r3.clone();
                r.extend(r2.iter().cloned());
                out.insert(*o1, *o3, r);
            }
        }
        out
    }
}

/// Validity of a renaming between two memory environments: injectivity up to
/// reference disjointness, frozen target references, type compatibility in
/// both directions, and preservation of aliveness.
pub fn renaming_valid(env: &Env, f: &Renaming, d1: &MemEnv, d2: &MemEnv) -> bool {
    let entries: Vec<_> = f.iter().collect();
    for (i, (o1, (t1, r1))) in entries.iter().enumerate() {
        for (o2, (t2, r2)) in entries.iter().skip(i + 1) {
            if t1 == t2 && o1 != o2 && !ref_disjoint(r1, r2) {
                return false;
            }
        }
    }
    f.iter().all(|(o1, (o2, r))| {
        if !ref_frozen(r) {
            return false;
        }
        let tgt_ok = match (d1.type_of(*o1), d2.type_of(*o2)) {
            (Some(sigma), Some(tau)) => ref_typed(env, r, tau) == Ok(sigma.clone()),
            (None, _) => true,
            (Some(_), None) => false,
        };
        let back_ok = match (d2.type_of(*o2), d1.type_of(*o1)) {
            (Some(tau), Some(sigma)) => ref_typed(env, r, tau) == Ok(sigma.clone()),
            (None, _) => true,
            (Some(_), None) => false,
        };
        tgt_ok && back_ok && (!d1.alive(*o1) || d2.alive(*o2))
    })
}

/// Everything a refinement check needs: the type/implementation environment,
/// the renaming, and the two memory typing environments.
pub struct RefineCx<'a> {
    pub env: &'a Env,
    pub f: &'a Renaming,
    pub d1: &'a MemEnv,
    pub d2: &'a MemEnv,
}

impl<'a> RefineCx<'a> {
    pub fn new(env: &'a Env, f: &'a Renaming, d1: &'a MemEnv, d2: &'a MemEnv) -> Self {
        RefineCx { env, f, d1, d2 }
    }

    /// Identity context over a single environment.
    pub fn with_identity(env: &'a Env, f: &'a Renaming, delta: &'a MemEnv) -> Self {
        RefineCx { env, f, d1: delta, d2: delta }
    }
}

fn seg_unfreezes_to(s1: &RefSeg, s2: &RefSeg) -> bool {
    match (s1, s2) {
        (RefSeg::Union(i, t, q1), RefSeg::Union(j, u, q2)) => {
            i == j
                && t == u
                && (q1 == q2 || (*q1 == Frozenness::Frozen && *q2 == Frozenness::Unfrozen))
        }
        _ => s1 == s2,
    }
}

/// Address refinement: the target address is the source address relocated
/// under the renaming, with union annotations possibly unfrozen.
pub fn addr_refine(cx: &RefineCx, a1: &Addr, a2: &Addr) -> bool {
    let Some((o2, rhat)) = cx.f.get(a1.index) else {
        return false;
    };
    if a2.index != *o2 {
        return false;
    }
    let Ok(t1) = addr_typed(cx.env, cx.d1, a1) else {
        return false;
    };
    let Ok(t2) = addr_typed(cx.env, cx.d2, a2) else {
        return false;
    };
    if t1 != t2 || a1.sub_type != a2.sub_type || a1.byte_off != a2.byte_off {
        return false;
    }
    if a2.ref_path.len() != rhat.len() + a1.ref_path.len() {
        return false;
    }
    let (prefix, rest) = a2.ref_path.split_at(rhat.len());
    prefix == rhat.as_slice()
        && rest
            .iter()
            .zip(a1.ref_path.iter())
            .all(|(s2, s1)| seg_unfreezes_to(s1, s2))
}

pub fn ptr_refine(cx: &RefineCx, p1: &Ptr, p2: &Ptr) -> bool {
    match (p1, p2) {
        (Ptr::Null(t1), Ptr::Null(t2)) => t1 == t2 && ptr_type_valid(&cx.env.types, t1),
        (Ptr::Fun(n1, a1, r1), Ptr::Fun(n2, a2, r2)) => {
            n1 == n2 && a1 == a2 && r1 == r2 && ptr_typed(cx.env, cx.d1, p1).is_ok()
        }
        (Ptr::Ptr(a1), Ptr::Ptr(a2)) => addr_refine(cx, a1, a2),
        _ => false,
    }
}

/// Bit refinement: concrete bits are preserved, pointer fragments are
/// renamed, and indeterminate or dead-pointer bits may become anything
/// valid.
pub fn bit_refine(cx: &RefineCx, b1: &Bit, b2: &Bit) -> bool {
    let exact = match (b1, b2) {
        (Bit::B0, Bit::B0) | (Bit::B1, Bit::B1) => true,
        (Bit::PtrFrag(p1, i), Bit::PtrFrag(p2, j)) => {
            i == j && p2.frozen() && *i < ptr_bit_size(cx.env) && ptr_refine(cx, p1, p2)
        }
        _ => false,
    };
    if exact {
        return true;
    }
    let weaken = match b1 {
        Bit::Indet => true,
        Bit::PtrFrag(Ptr::Ptr(a), _) => {
            addr_typed(cx.env, cx.d1, a).is_ok() && !cx.d1.alive(a.index)
        }
        _ => false,
    };
    weaken && bit_valid(cx.env, cx.d2, b2)
}

/// Permissions are preserved exactly; only the bit may become more defined.
pub fn pbit_refine(cx: &RefineCx, pb1: &PBit, pb2: &PBit) -> bool {
    pb1.perm == pb2.perm
        && bit_refine(cx, &pb1.tag, &pb2.tag)
        && pbit_valid(cx.env, cx.d1, pb1)
        && pbit_valid(cx.env, cx.d2, pb2)
}

fn pbits_refine(cx: &RefineCx, xs: &[PBit], ys: &[PBit]) -> bool {
    xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| pbit_refine(cx, x, y))
}

/// Tree refinement: both sides typed at the same type, leaves refine
/// pointwise, and a union with a known variant in the source may turn into
/// an unknown-variant union in the target.
pub fn tree_refine(cx: &RefineCx, w1: &MTree, w2: &MTree) -> bool {
    let Ok(t1) = tree_typed(cx.env, cx.d1, w1) else {
        return false;
    };
    let Ok(t2) = tree_typed(cx.env, cx.d2, w2) else {
        return false;
    };
    t1 == t2 && tree_refine_rec(cx, w1, w2)
}

fn tree_refine_rec(cx: &RefineCx, w1: &MTree, w2: &MTree) -> bool {
    use MTree::*;
    match (w1, w2) {
        (Base(t1, pbs1), Base(t2, pbs2)) => t1 == t2 && pbits_refine(cx, pbs1, pbs2),
        (Array(t1, ws1), Array(t2, ws2)) => {
            t1 == t2
                && ws1.len() == ws2.len()
                && ws1
                    .iter()
                    .zip(ws2.iter())
                    .all(|(x, y)| tree_refine_rec(cx, x, y))
        }
        (Struct(t1, items1), Struct(t2, items2)) => {
            t1 == t2
                && items1.len() == items2.len()
                && items1.iter().zip(items2.iter()).all(|((x, px), (y, py))| {
                    tree_refine_rec(cx, x, y) && pbits_refine(cx, px, py)
                })
        }
        (Union(t1, i, x, px), Union(t2, j, y, py)) => {
            t1 == t2 && i == j && tree_refine_rec(cx, x, y) && pbits_refine(cx, px, py)
        }
        (UnionAll(t1, pbs1), UnionAll(t2, pbs2)) => t1 == t2 && pbits_refine(cx, pbs1, pbs2),
        // A specific variant in the source may be forgotten in the target.
        (Union(t1, _, x, px), UnionAll(t2, pbs2)) => {
            let mut flat = tree_flatten(x);
            flat.extend_from_slice(px);
            t1 == t2 && pbits_refine(cx, &flat, pbs2)
        }
        _ => false,
    }
}

fn base_val_refine(cx: &RefineCx, bv1: &BaseVal, bv2: &BaseVal) -> bool {
    let exact = match (bv1, bv2) {
        (BaseVal::Void, BaseVal::Void) => true,
        (BaseVal::Int(it1, x1), BaseVal::Int(it2, x2)) => it1 == it2 && x1 == x2,
        (BaseVal::Ptr(p1), BaseVal::Ptr(p2)) => ptr_refine(cx, p1, p2),
        (BaseVal::Byte(bs1), BaseVal::Byte(bs2)) => {
            bs1.len() == bs2.len()
                && bs1.iter().zip(bs2.iter()).all(|(a, b)| bit_refine(cx, a, b))
        }
        // A symbolic byte may become concrete.
        (BaseVal::Byte(bs1), BaseVal::Int(it, x)) if *it == crate::types::IntType::UCHAR => {
            let bits = crate::intcode::int_to_bits(&cx.env.ienv, *it, *x);
            bs1.len() == bits.len()
                && bs1
                    .iter()
                    .zip(bits.iter())
                    .all(|(a, b)| bit_refine(cx, a, &Bit::concrete(*b)))
        }
        _ => false,
    };
    if exact {
        return true;
    }
    // Weakening rules: indeterminate values and dead pointers refine to
    // anything of the same type (the target was typed by the caller).
    match bv1 {
        BaseVal::Indet(bt) => *bt == bv2.type_of() && *bt != crate::types::BaseType::Void,
        BaseVal::Ptr(Ptr::Ptr(a)) => {
            bv1.type_of() == bv2.type_of()
                && addr_typed(cx.env, cx.d1, a).is_ok()
                && !cx.d1.alive(a.index)
        }
        _ => false,
    }
}

/// Value refinement at a type.
pub fn val_refine(cx: &RefineCx, v1: &Val, v2: &Val, t: &CType) -> bool {
    if val_typed(cx.env, cx.d1, v1) != Ok(t.clone())
        || val_typed(cx.env, cx.d2, v2) != Ok(t.clone())
    {
        return false;
    }
    val_refine_rec(cx, v1, v2)
}

fn val_refine_rec(cx: &RefineCx, v1: &Val, v2: &Val) -> bool {
    use Val::*;
    match (v1, v2) {
        (Base(b1), Base(b2)) => base_val_refine(cx, b1, b2),
        (Array(t1, vs1), Array(t2, vs2)) => {
            t1 == t2
                && vs1.len() == vs2.len()
                && vs1.iter().zip(vs2.iter()).all(|(x, y)| val_refine_rec(cx, x, y))
        }
        (Struct(t1, vs1), Struct(t2, vs2)) | (UnionAll(t1, vs1), UnionAll(t2, vs2)) => {
            t1 == t2
                && vs1.len() == vs2.len()
                && vs1.iter().zip(vs2.iter()).all(|(x, y)| val_refine_rec(cx, x, y))
        }
        (Union(t1, i, x), Union(t2, j, y)) => t1 == t2 && i == j && val_refine_rec(cx, x, y),
        // A known variant may be forgotten: the source value must refine the
        // target's interpretation of that variant.
        (Union(t1, i, x), UnionAll(t2, vs2)) => {
            t1 == t2 && vs2.get(*i).map(|y| val_refine_rec(cx, x, y)).unwrap_or(false)
        }
        _ => false,
    }
}

/// Memory refinement: every live source object must land, via the renaming,
/// on a subtree of a live target object that its tree refines.
pub fn mem_refine(cx: &RefineCx, m1: &Mem, m2: &Mem) -> bool {
    if !renaming_valid(cx.env, cx.f, cx.d1, cx.d2) {
        return false;
    }
    if !mem_valid(cx.env, cx.d1, m1) || !mem_valid(cx.env, cx.d2, m2) {
        return false;
    }
    m1.iter().all(|(o1, e)| match e {
        MemEntry::Tomb(_) => true,
        MemEntry::Obj(w1, mu1) => {
            let Some((o2, r)) = cx.f.get(*o1) else {
                return false;
            };
            let Some(MemEntry::Obj(w2full, mu2)) = m2.get(*o2) else {
                return false;
            };
            if r.is_empty() && mu1 != mu2 {
                return false;
            }
            match tree_lookup(cx.env, r, w2full) {
                Ok(w2) => tree_refine(cx, w1, &w2),
                Err(_) => false,
            }
        }
    })
}

/// `τ` is a subobject type of `σ` when some reference leads from `σ` to
/// `τ`.
pub fn subtype(env: &Env, tau: &CType, sigma: &CType) -> bool {
    if tau == sigma {
        return true;
    }
    match sigma {
        CType::Array(elem, _) => subtype(env, tau, elem),
        CType::Struct(tag) | CType::Union(tag) => env
            .types
            .compound(tag)
            .map(|fields| fields.iter().any(|f| subtype(env, tau, f)))
            .unwrap_or(false),
        CType::Base(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mem::{mem_alloc, mem_env_of, Mem};
    use crate::perm::Perm;
    use crate::types::{IntType, PtrType, Rank, TypeEnv};
    use crate::value::{of_val, val_new};

    fn env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound(
            "U",
            vec![CType::sint(), CType::int(IntType::signed(Rank::Short))],
        );
        types.declare_compound("Pair", vec![CType::sint(), CType::sint()]);
        Env::with_types(types)
    }

    #[test]
    fn identity_refines_valid_memory() {
        let env = env();
        let m = mem_alloc(
            &env,
            ObjId(0),
            &val_new(&env, &CType::Union("U".into())).unwrap(),
            false,
            &Mem::new(),
        )
        .unwrap();
        let delta = mem_env_of(&m);
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        assert!(mem_refine(&cx, &m, &m));
    }

    #[test]
    fn coalescing_two_ints_into_a_pair() {
        let env = env();
        // Source: two separate ints. Target: one struct Pair.
        let m1 = mem_alloc(&env, ObjId(0), &Val::int(IntType::SINT, 1), false, &Mem::new())
            .unwrap();
        let m1 = mem_alloc(&env, ObjId(1), &Val::int(IntType::SINT, 2), false, &m1).unwrap();
        let m2 = mem_alloc(
            &env,
            ObjId(7),
            &Val::Struct(
                "Pair".into(),
                vec![Val::int(IntType::SINT, 1), Val::int(IntType::SINT, 2)],
            ),
            false,
            &Mem::new(),
        )
        .unwrap();
        let d1 = mem_env_of(&m1);
        let d2 = mem_env_of(&m2);
        let mut f = Renaming::new();
        f.insert(ObjId(0), ObjId(7), vec![RefSeg::Struct(0, "Pair".into())]);
        f.insert(ObjId(1), ObjId(7), vec![RefSeg::Struct(1, "Pair".into())]);
        assert!(renaming_valid(&env, &f, &d1, &d2));
        let cx = RefineCx::new(&env, &f, &d1, &d2);
        assert!(mem_refine(&cx, &m1, &m2));

        // Mapping both to the same field violates injectivity.
        let mut bad = Renaming::new();
        bad.insert(ObjId(0), ObjId(7), vec![RefSeg::Struct(0, "Pair".into())]);
        bad.insert(ObjId(1), ObjId(7), vec![RefSeg::Struct(0, "Pair".into())]);
        assert!(!renaming_valid(&env, &bad, &d1, &d2));
    }

    #[test]
    fn indet_bit_refines_concrete() {
        let env = env();
        let delta = MemEnv::new();
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        assert!(bit_refine(&cx, &Bit::Indet, &Bit::B1));
        assert!(!bit_refine(&cx, &Bit::B1, &Bit::Indet));
        assert!(bit_refine(&cx, &Bit::B0, &Bit::B0));
    }

    #[test]
    fn union_refines_to_unionall() {
        let env = env();
        let mut delta = MemEnv::new();
        delta.insert(ObjId(0), CType::Union("U".into()), false);
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        let n = env
            .ienv
            .bit_size_of(&env.types, &CType::Union("U".into()))
            .unwrap();
        let v = Val::Union("U".into(), 0, Box::new(Val::int(IntType::SINT, 5)));
        let w = of_val(&env, &vec![Perm::full(); n], &v).unwrap();
        let forgotten = MTree::UnionAll("U".into(), tree_flatten(&w));
        assert!(tree_refine(&cx, &w, &forgotten));
        assert!(!tree_refine(&cx, &forgotten, &w));
    }

    #[test]
    fn frozen_value_refines_unfrozen() {
        let env = env();
        let mut delta = MemEnv::new();
        delta.insert(ObjId(0), CType::Union("U".into()), false);
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        let a = Addr::new(
            ObjId(0),
            CType::Union("U".into()),
            vec![RefSeg::Union(0, "U".into(), Frozenness::Unfrozen)],
            0,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        let v = Val::Base(BaseVal::Ptr(Ptr::Ptr(a)));
        let t = v.type_of();
        assert!(val_refine(&cx, &v.freeze(), &v, &t));
        assert!(!val_refine(&cx, &v, &v.freeze(), &t));
    }

    #[test]
    fn composition_concatenates_refs() {
        let mut f = Renaming::new();
        f.insert(ObjId(0), ObjId(1), vec![]);
        let mut g = Renaming::new();
        g.insert(ObjId(1), ObjId(2), vec![RefSeg::Struct(1, "Pair".into())]);
        let h = Renaming::compose(&g, &f);
        assert_eq!(
            h.get(ObjId(0)),
            Some(&(ObjId(2), vec![RefSeg::Struct(1, "Pair".into())]))
        );
    }

    #[test]
    fn subtype_examples() {
        let env = env();
        assert!(subtype(&env, &CType::sint(), &CType::Struct("Pair".into())));
        assert!(subtype(&env, &CType::sint(), &CType::Union("U".into())));
        assert!(subtype(
            &env,
            &CType::sint(),
            &CType::array(CType::array(CType::sint(), 2), 2)
        ));
        assert!(!subtype(
            &env,
            &CType::Struct("Pair".into()),
            &CType::sint()
        ));
        // Pointers do not make subobjects.
        assert!(!subtype(&env, &CType::sint(), &CType::ptr_to(CType::sint())));
    }
}
