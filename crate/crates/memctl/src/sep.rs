//! Separation structure on memory trees and memories.
//!
//! Memory trees are not a separation algebra on their own — there is one
//! identity tree per type — but they carry the validity, disjointness and
//! union structure that lifts pointwise from permission-annotated bits, with
//! side conditions on unions: a union that remembers its variant must own at
//! least one mapped bit, and it can absorb an unknown-variant union only when
//! the latter is fully unmapped. Memories lift the tree structure per object
//! and do form a separation algebra, checked against the full law suite.

use crate::mem::{Mem, MemEntry};
use crate::sepalg::SepAlg;
use crate::tree::{tree_flatten, tree_merge, MTree, PBit};

fn pbits_all_unmapped(pbs: &[PBit]) -> bool {
    pbs.iter().all(|pb| pb.unmapped())
}

fn flat_with_pad(w: &MTree, pad: &[PBit]) -> Vec<PBit> {
    let mut all = tree_flatten(w);
    all.extend_from_slice(pad);
    all
}

fn zip_all(f: impl Fn(&PBit, &PBit) -> bool, xs: &[PBit], ys: &[PBit]) -> bool {
    xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| f(x, y))
}

fn zip_map(f: impl Fn(&PBit, &PBit) -> PBit, xs: &[PBit], ys: &[PBit]) -> Vec<PBit> {
    xs.iter().zip(ys.iter()).map(|(x, y)| f(x, y)).collect()
}

/// Pointwise validity lifted to trees, plus the union canonicity condition.
pub fn tree_sep_valid(w: &MTree) -> bool {
    match w {
        MTree::Base(_, pbs) | MTree::UnionAll(_, pbs) => pbs.iter().all(|pb| pb.valid()),
        MTree::Array(_, ws) => ws.iter().all(tree_sep_valid),
        MTree::Struct(_, items) => items
            .iter()
            .all(|(w, pad)| tree_sep_valid(w) && pad.iter().all(|pb| pb.valid())),
        MTree::Union(_, _, w, pad) => {
            tree_sep_valid(w)
                && pad.iter().all(|pb| pb.valid())
                && !pbits_all_unmapped(&flat_with_pad(w, pad))
        }
    }
}

/// Disjointness of trees. Equal-shape nodes are disjoint pointwise; a
/// known-variant union and an unknown-variant one are disjoint only when the
/// unknown side is fully unmapped.
pub fn tree_disjoint(w1: &MTree, w2: &MTree) -> bool {
    use MTree::*;
    match (w1, w2) {
        (Base(t1, pbs1), Base(t2, pbs2)) => {
            t1 == t2 && zip_all(|x, y| x.disjoint(y), pbs1, pbs2)
        }
        (Array(t1, ws1), Array(t2, ws2)) => {
            t1 == t2
                && ws1.len() == ws2.len()
                && ws1.iter().zip(ws2.iter()).all(|(x, y)| tree_disjoint(x, y))
        }
        (Struct(t1, items1), Struct(t2, items2)) => {
            t1 == t2
                && items1.len() == items2.len()
                && items1.iter().zip(items2.iter()).all(|((x, px), (y, py))| {
                    tree_disjoint(x, y) && zip_all(|a, b| a.disjoint(b), px, py)
                })
        }
        (Union(t1, i, x, px), Union(t2, j, y, py)) => {
            t1 == t2
                && i == j
                && tree_disjoint(x, y)
                && zip_all(|a, b| a.disjoint(b), px, py)
                && !pbits_all_unmapped(&flat_with_pad(x, px))
                && !pbits_all_unmapped(&flat_with_pad(y, py))
        }
        (UnionAll(t1, pbs1), UnionAll(t2, pbs2)) => {
            t1 == t2 && zip_all(|x, y| x.disjoint(y), pbs1, pbs2)
        }
        (Union(t1, _, x, px), UnionAll(t2, pbs2)) => {
            t1 == t2
                && zip_all(|a, b| a.disjoint(b), &flat_with_pad(x, px), pbs2)
                && tree_sep_valid(w1)
                && !pbits_all_unmapped(&flat_with_pad(x, px))
                && pbits_all_unmapped(pbs2)
        }
        (UnionAll(t1, pbs1), Union(t2, _, y, py)) => {
            t1 == t2
                && zip_all(|a, b| a.disjoint(b), pbs1, &flat_with_pad(y, py))
                && tree_sep_valid(w2)
                && pbits_all_unmapped(pbs1)
                && !pbits_all_unmapped(&flat_with_pad(y, py))
        }
        _ => false,
    }
}

/// Union of disjoint trees; the mixed union cases zip the known-variant tree
/// leaf-wise with the unmapped bits of the unknown-variant one.
pub fn tree_union(w1: &MTree, w2: &MTree) -> MTree {
    use MTree::*;
    match (w1, w2) {
        (Base(t, pbs1), Base(_, pbs2)) => {
            Base(t.clone(), zip_map(|x, y| x.union(y), pbs1, pbs2))
        }
        (Array(t, ws1), Array(_, ws2)) => Array(
            t.clone(),
            ws1.iter().zip(ws2.iter()).map(|(x, y)| tree_union(x, y)).collect(),
        ),
        (Struct(t, items1), Struct(_, items2)) => Struct(
            t.clone(),
            items1
                .iter()
                .zip(items2.iter())
                .map(|((x, px), (y, py))| (tree_union(x, y), zip_map(|a, b| a.union(b), px, py)))
                .collect(),
        ),
        (Union(t, i, x, px), Union(_, _, y, py)) => Union(
            t.clone(),
            *i,
            Box::new(tree_union(x, y)),
            zip_map(|a, b| a.union(b), px, py),
        ),
        (UnionAll(t, pbs1), UnionAll(_, pbs2)) => {
            UnionAll(t.clone(), zip_map(|x, y| x.union(y), pbs1, pbs2))
        }
        (Union(..), UnionAll(_, pbs2)) => {
            tree_merge(&|pb, y: &PBit| pb.union(y), w1, pbs2).expect("disjoint trees zip")
        }
        (UnionAll(_, pbs1), Union(..)) => {
            tree_merge(&|pb, y: &PBit| pb.union(y), w2, pbs1).expect("disjoint trees zip")
        }
        _ => w1.clone(),
    }
}

/// Difference of trees, meaningful when `x ⊑ y`. A known-variant union whose
/// leftover is fully unmapped collapses to an unknown-variant union, which is
/// the only shape a fully unmapped complement may take.
pub fn tree_difference(y: &MTree, x: &MTree) -> MTree {
    use MTree::*;
    let out = match (y, x) {
        (Base(t, pbs1), Base(_, pbs2)) => {
            Base(t.clone(), zip_map(|a, b| a.difference(b), pbs1, pbs2))
        }
        (Array(t, ws1), Array(_, ws2)) => Array(
            t.clone(),
            ws1.iter()
                .zip(ws2.iter())
                .map(|(a, b)| tree_difference(a, b))
                .collect(),
        ),
        (Struct(t, items1), Struct(_, items2)) => Struct(
            t.clone(),
            items1
                .iter()
                .zip(items2.iter())
                .map(|((a, pa), (b, pb))| {
                    (tree_difference(a, b), zip_map(|u, v| u.difference(v), pa, pb))
                })
                .collect(),
        ),
        (Union(t, i, a, pa), Union(_, j, b, pb)) if i == j => Union(
            t.clone(),
            *i,
            Box::new(tree_difference(a, b)),
            zip_map(|u, v| u.difference(v), pa, pb),
        ),
        (UnionAll(t, pbs1), UnionAll(_, pbs2)) => {
            UnionAll(t.clone(), zip_map(|a, b| a.difference(b), pbs1, pbs2))
        }
        (Union(..), UnionAll(_, pbs2)) => {
            tree_merge(&|pb, v: &PBit| pb.difference(v), y, pbs2).expect("subset trees zip")
        }
        _ => y.clone(),
    };
    match &out {
        Union(t, _, w, pad) if pbits_all_unmapped(&flat_with_pad(w, pad)) => {
            UnionAll(t.clone(), flat_with_pad(w, pad))
        }
        _ => out,
    }
}

/// `x ⊑ y` on trees, decided through the difference operation.
pub fn tree_subseteq(x: &MTree, y: &MTree) -> bool {
    let d = tree_difference(y, x);
    tree_disjoint(x, &d) && tree_union(x, &d) == *y
}

fn entry_obj_nonempty(w: &MTree) -> bool {
    !tree_flatten(w)
        .iter()
        .all(|pb| *pb == PBit::empty())
}

impl SepAlg for Mem {
    fn empty() -> Self {
        Mem::new()
    }

    fn valid(&self) -> bool {
        self.iter().all(|(_, e)| match e {
            MemEntry::Obj(w, _) => tree_sep_valid(w) && entry_obj_nonempty(w),
            MemEntry::Tomb(_) => true,
        })
    }

    fn disjoint(&self, other: &Self) -> bool {
        let ids: std::collections::BTreeSet<_> =
            self.ids().chain(other.ids()).collect();
        ids.into_iter().all(|o| match (self.get(o), other.get(o)) {
            (Some(MemEntry::Obj(w1, mu1)), Some(MemEntry::Obj(w2, mu2))) => {
                mu1 == mu2
                    && tree_disjoint(w1, w2)
                    && entry_obj_nonempty(w1)
                    && entry_obj_nonempty(w2)
            }
            (Some(MemEntry::Obj(w, _)), None) | (None, Some(MemEntry::Obj(w, _))) => {
                tree_sep_valid(w) && entry_obj_nonempty(w)
            }
            (Some(MemEntry::Tomb(_)), None) | (None, Some(MemEntry::Tomb(_))) => true,
            (None, None) => true,
            _ => false,
        })
    }

    fn union(&self, other: &Self) -> Self {
        let ids: std::collections::BTreeSet<_> =
            self.ids().chain(other.ids()).collect();
        let mut out = Mem::new();
        for o in ids {
            let entry = match (self.get(o), other.get(o)) {
                (Some(MemEntry::Obj(w1, mu)), Some(MemEntry::Obj(w2, _))) => {
                    Some(MemEntry::Obj(tree_union(w1, w2), *mu))
                }
                (Some(e), None) | (None, Some(e)) => Some(e.clone()),
                (None, None) => None,
                (Some(e), Some(_)) => Some(e.clone()), // dummy, not disjoint
            };
            if let Some(e) = entry {
                out.insert_entry(o, e);
            }
        }
        out
    }

    fn subseteq(&self, other: &Self) -> bool {
        let d = other.difference(self);
        self.disjoint(&d) && self.union(&d) == *other
    }

    fn difference(&self, other: &Self) -> Self {
        let mut out = Mem::new();
        for (o, e) in self.iter() {
            match (e, other.get(*o)) {
                (MemEntry::Obj(w1, mu), Some(MemEntry::Obj(w2, _))) => {
                    let d = tree_difference(w1, w2);
                    if entry_obj_nonempty(&d) {
                        out.insert_entry(*o, MemEntry::Obj(d, *mu));
                    }
                }
                (MemEntry::Tomb(t1), Some(MemEntry::Tomb(t2))) if t1 == t2 => {}
                (e, None) => out.insert_entry(*o, e.clone()),
                (e, Some(_)) => out.insert_entry(*o, e.clone()), // dummy
            }
        }
        out
    }

    fn splittable(&self) -> bool {
        self.iter().all(|(_, e)| match e {
            MemEntry::Obj(w, _) => tree_flatten(w).iter().all(|pb| pb.splittable()),
            MemEntry::Tomb(_) => true,
        })
    }

    fn half(&self) -> Self {
        let mut out = Mem::new();
        for (o, e) in self.iter() {
            match e {
                MemEntry::Obj(w, mu) => {
                    let halved = crate::tree::tree_map(&|pb| pb.half(), w);
                    out.insert_entry(*o, MemEntry::Obj(halved, *mu));
                }
                MemEntry::Tomb(t) => out.insert_entry(*o, MemEntry::Tomb(t.clone())),
            }
        }
        out
    }

    fn unmapped(&self) -> bool {
        self.iter().all(|(_, e)| match e {
            MemEntry::Obj(w, _) => pbits_all_unmapped(&tree_flatten(w)),
            MemEntry::Tomb(_) => true,
        })
    }

    fn unshared(&self) -> bool {
        // Memories are never globally unshared: a disjoint memory can always
        // add fresh objects, so no memory dominates all of its neighbors.
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implenv::Env;
    use crate::mem::{mem_alloc, ObjId};
    use crate::perm::Perm;
    use crate::tree::{pbit, tree_map, tree_new, Bit};
    use crate::types::{CType, IntType, Rank, TypeEnv};
    use crate::value::Val;

    fn env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound(
            "U",
            vec![CType::sint(), CType::int(IntType::signed(Rank::Short))],
        );
        Env::with_types(types)
    }

    fn halved(w: &MTree) -> MTree {
        tree_map(&|pb| pb.half(), w)
    }

    #[test]
    fn halves_of_a_tree_rejoin() {
        let env = env();
        let w = tree_new(&env, &Perm::full(), &CType::array(CType::sint(), 2)).unwrap();
        let h = halved(&w);
        assert!(tree_disjoint(&h, &h));
        assert_eq!(tree_union(&h, &h), w);
    }

    #[test]
    fn mixed_union_rules() {
        let env = env();
        // A union with known variant and full permissions.
        let w = {
            let v = Val::Union(
                "U".into(),
                0,
                Box::new(Val::int(IntType::SINT, 7)),
            );
            let n = env
                .ienv
                .bit_size_of(&env.types, &CType::Union("U".into()))
                .unwrap();
            crate::value::of_val(&env, &vec![Perm::full(); n], &v).unwrap()
        };
        // An unknown-variant union of unmapped permissions.
        let empty_bits = vec![pbit(Perm::empty(), Bit::Indet); 32];
        let all = MTree::UnionAll("U".into(), empty_bits);
        assert!(tree_disjoint(&w, &all));
        assert_eq!(tree_union(&w, &all), w);
        // A mapped UnionAll is not disjoint from a known-variant union.
        let mapped =
            MTree::UnionAll("U".into(), vec![pbit(Perm::full().half(), Bit::Indet); 32]);
        assert!(!tree_disjoint(&w, &mapped));
        // But is from another UnionAll.
        assert!(tree_disjoint(&mapped, &mapped));
    }

    #[test]
    fn tree_cancellation() {
        let env = env();
        let w = tree_new(&env, &Perm::full(), &CType::sint()).unwrap();
        let h = halved(&w);
        assert!(tree_subseteq(&h, &w));
        assert_eq!(tree_difference(&w, &h), h);
        assert!(!tree_subseteq(&w, &h));
    }

    #[test]
    fn union_difference_collapses_to_unionall() {
        let env = env();
        let v = Val::Union(
            "U".into(),
            1,
            Box::new(Val::int(IntType::signed(Rank::Short), 3)),
        );
        let n = env
            .ienv
            .bit_size_of(&env.types, &CType::Union("U".into()))
            .unwrap();
        let w = crate::value::of_val(&env, &vec![Perm::full(); n], &v).unwrap();
        let d = tree_difference(&w, &w);
        // Subtracting everything leaves an unmapped unknown-variant union.
        assert!(matches!(&d, MTree::UnionAll(_, pbs) if pbits_all_unmapped(pbs)));
    }

    #[test]
    fn memory_split_like_the_assignment_example() {
        // int x = 10, *p = &x: the memory splits onto the two objects.
        let env = env();
        let ox = ObjId(0);
        let op = ObjId(1);
        let m = mem_alloc(&env, ox, &Val::int(IntType::SINT, 10), false, &Mem::new()).unwrap();
        let m = {
            let a = crate::place::Addr::whole(ox, CType::sint());
            let pv = Val::Base(crate::value::BaseVal::Ptr(crate::place::Ptr::Ptr(a)));
            mem_alloc(&env, op, &pv, false, &m).unwrap()
        };
        let mut mx = Mem::new();
        mx.insert_entry(ox, m.get(ox).unwrap().clone());
        let mut mp = Mem::new();
        mp.insert_entry(op, m.get(op).unwrap().clone());
        assert!(mx.disjoint(&mp));
        assert_eq!(mx.union(&mp), m);
        // m ∪ ∅ = m.
        assert!(Mem::empty().disjoint(&m));
        assert_eq!(Mem::empty().union(&m), m);
        // The split-off halves sit below the whole.
        assert!(mx.subseteq(&m));
        assert_eq!(m.difference(&mx), mp);
        // The pointer fragment is typeable under the joint environment but
        // not under the fragment's own minimal one.
        let joint = crate::mem::mem_env_of(&m);
        assert!(crate::mem::mem_valid(&env, &joint, &mp));
        let own = crate::mem::mem_env_of(&mp);
        assert!(!crate::mem::mem_valid(&env, &own, &mp));
        // Validity of a disjoint union is validity of both halves under the
        // shared (undivided) environment.
        assert_eq!(
            crate::mem::mem_valid(&env, &joint, &mx.union(&mp)),
            crate::mem::mem_valid(&env, &joint, &mx) && crate::mem::mem_valid(&env, &joint, &mp)
        );
        // And a half-permission split keeps both sides valid.
        let hx = mx.half();
        assert!(hx.disjoint(&hx));
        assert_eq!(hx.union(&hx), mx);
        assert!(crate::mem::mem_valid(&env, &joint, &hx));
    }
}
