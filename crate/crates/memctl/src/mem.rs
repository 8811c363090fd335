//! The memory: a finite map from object identifiers to trees or tombstones,
//! memory typing environments, locksets, and the public memory operations.
//!
//! Operations that C leaves undefined fail with a [`UbReason`] instead of
//! doing something arbitrary. Reading is split into the pure lookup and the
//! `force` operation that records the access's effect on effective types
//! (the variants of unions along the path).

use crate::implenv::Env;
use crate::perm::{Perm, PermKind};
use crate::sepalg::SepAlg;
use crate::place::{
    addr_bit_size, addr_normalize, addr_object_offset, addr_strict, Addr, RefSeg,
};
use crate::tree::{
    pbit, tree_alter, tree_flatten, tree_lookup, tree_map, tree_merge, tree_typed,
    tree_unflatten, Bit, LookupError, MTree,
};
use crate::types::{type_valid, CType, IntType};
use crate::value::{of_val, to_val, Val};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// An opaque object identifier. Fresh identifiers are chosen by the caller
/// (scripts use a counter); the model only needs equality and ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjId(pub u64);

impl fmt::Display for ObjId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A memory typing environment: the type of every object ever allocated,
/// plus whether it has been deallocated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemEnv {
    map: BTreeMap<ObjId, (CType, bool)>,
}

impl MemEnv {
    pub fn new() -> Self {
        MemEnv::default()
    }

    pub fn insert(&mut self, o: ObjId, t: CType, dead: bool) {
        self.map.insert(o, (t, dead));
    }

    pub fn kill(&mut self, o: ObjId) {
        if let Some(entry) = self.map.get_mut(&o) {
            entry.1 = true;
        }
    }

    pub fn type_of(&self, o: ObjId) -> Option<&CType> {
        self.map.get(&o).map(|(t, _)| t)
    }

    pub fn alive(&self, o: ObjId) -> bool {
        matches!(self.map.get(&o), Some((_, false)))
    }

    pub fn contains(&self, o: ObjId) -> bool {
        self.map.contains_key(&o)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjId, &(CType, bool))> {
        self.map.iter()
    }

    /// `self` extends `other`: everything typed there is typed here the same
    /// way, and nothing alive there is dead here.
    pub fn extends(&self, other: &MemEnv) -> bool {
        other.map.iter().all(|(o, (t, dead))| {
            matches!(self.map.get(o), Some((t2, dead2)) if t2 == t && (*dead || !dead2))
        })
    }
}

/// One slot of the memory: a live object with its malloc flag, or the
/// tombstone of a deallocated object (its type is kept so dangling pointers
/// stay typeable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemEntry {
    Obj(MTree, bool),
    Tomb(CType),
}

/// A memory state. Iteration order is by object identifier, so equal states
/// have identical dumps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mem {
    map: BTreeMap<ObjId, MemEntry>,
}

/// The set of (object, bit) positions currently locked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lockset {
    set: BTreeSet<(ObjId, usize)>,
}

impl Lockset {
    pub fn new() -> Self {
        Lockset::default()
    }

    pub fn insert(&mut self, o: ObjId, bit: usize) {
        self.set.insert((o, bit));
    }

    pub fn contains(&self, o: ObjId, bit: usize) -> bool {
        self.set.contains(&(o, bit))
    }

    pub fn union(&self, other: &Lockset) -> Lockset {
        Lockset { set: self.set.union(&other.set).cloned().collect() }
    }

    pub fn minus(&self, other: &Lockset) -> Lockset {
        Lockset { set: self.set.difference(&other.set).cloned().collect() }
    }

    pub fn is_subset(&self, other: &Lockset) -> bool {
        self.set.is_subset(&other.set)
    }

    pub fn is_disjoint(&self, other: &Lockset) -> bool {
        self.set.is_disjoint(&other.set)
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ObjId, usize)> {
        self.set.iter()
    }

    /// Every locked position must exist in the layout described by `delta`.
    pub fn valid(&self, env: &Env, delta: &MemEnv) -> bool {
        self.set.iter().all(|(o, i)| match delta.type_of(*o) {
            Some(t) => env
                .ienv
                .bit_size_of(&env.types, t)
                .map(|n| *i < n)
                .unwrap_or(false),
            None => false,
        })
    }
}

/// Why a memory operation is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UbReason {
    EndOfArray,
    EffectiveTypes,
    Permission,
    Locked,
    DeadObject,
    Unwritable,
    NotFreeable,
}

impl fmt::Display for UbReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UbReason::EndOfArray => "end-of-array",
            UbReason::EffectiveTypes => "effective-types",
            UbReason::Permission => "permission",
            UbReason::Locked => "locked",
            UbReason::DeadObject => "dead-object",
            UbReason::Unwritable => "unwritable",
            UbReason::NotFreeable => "not-freeable",
        };
        write!(f, "{s}")
    }
}

impl UbReason {
    pub fn parse(s: &str) -> Option<UbReason> {
        match s {
            "end-of-array" => Some(UbReason::EndOfArray),
            "effective-types" => Some(UbReason::EffectiveTypes),
            "permission" => Some(UbReason::Permission),
            "locked" => Some(UbReason::Locked),
            "dead-object" => Some(UbReason::DeadObject),
            "unwritable" => Some(UbReason::Unwritable),
            "not-freeable" => Some(UbReason::NotFreeable),
            _ => None,
        }
    }
}

impl Mem {
    pub fn new() -> Self {
        Mem::default()
    }

    pub fn get(&self, o: ObjId) -> Option<&MemEntry> {
        self.map.get(&o)
    }

    pub fn insert_entry(&mut self, o: ObjId, e: MemEntry) {
        self.map.insert(o, e);
    }

    pub fn contains(&self, o: ObjId) -> bool {
        self.map.contains_key(&o)
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjId> + '_ {
        self.map.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjId, &MemEntry)> {
        self.map.iter()
    }

    pub fn tree(&self, o: ObjId) -> Option<&MTree> {
        match self.map.get(&o) {
            Some(MemEntry::Obj(w, _)) => Some(w),
            _ => None,
        }
    }
}

/// The minimal typing environment of a memory: live objects typed alive,
/// tombstones typed dead.
pub fn mem_env_of(m: &Mem) -> MemEnv {
    let mut delta = MemEnv::new();
    for (o, e) in m.iter() {
        match e {
            MemEntry::Obj(w, _) => delta.insert(*o, w.type_of(), false),
            MemEntry::Tomb(t) => delta.insert(*o, t.clone(), true),
        }
    }
    delta
}

/// Memory validity under an ambient environment `delta`, which may type more
/// objects than the memory itself contains (a split-off fragment can hold
/// pointers into the rest).
pub fn mem_valid(env: &Env, delta: &MemEnv, m: &Mem) -> bool {
    m.iter().all(|(o, e)| match e {
        MemEntry::Tomb(t) => {
            delta.type_of(*o) == Some(t) && !delta.alive(*o) && type_valid(&env.types, t)
        }
        MemEntry::Obj(w, _) => {
            let typed = match tree_typed(env, delta, w) {
                Ok(t) => delta.type_of(*o) == Some(&t),
                Err(_) => false,
            };
            typed
                && delta.alive(*o)
                && !tree_flatten(w)
                    .iter()
                    .all(|pb| *pb == pbit(Perm::empty(), Bit::Indet))
        }
    })
}

/// Looks up the memory tree at an address: fails on dead objects,
/// end-of-array addresses, and effective-type violations. Byte addresses
/// slice one byte out of the object representation of the subobject.
pub fn cmap_lookup(env: &Env, a: &Addr, m: &Mem) -> Result<MTree, UbReason> {
    let w = match m.get(a.index) {
        Some(MemEntry::Obj(w, _)) => w,
        _ => return Err(UbReason::DeadObject),
    };
    if !addr_strict(env, a) {
        return Err(UbReason::EndOfArray);
    }
    let n = addr_normalize(env, a);
    let sub = tree_lookup(env, &n.norm_ref, w).map_err(|e| match e {
        LookupError::EffectiveTypes => UbReason::EffectiveTypes,
        LookupError::SharedUnion => UbReason::Permission,
        LookupError::Path => UbReason::EffectiveTypes,
    })?;
    if a.is_byte() {
        let cb = env.ienv.char_bits();
        let flat = tree_flatten(&sub);
        let lo = n.norm_byte * cb;
        let byte = &flat[lo..lo + cb];
        tree_unflatten(env, &CType::int(IntType::UCHAR), byte)
            .map_err(|_| UbReason::EffectiveTypes)
    } else {
        Ok(sub)
    }
}

fn readable_guard(w: &MTree) -> Result<(), UbReason> {
    let flat = tree_flatten(w);
    if flat
        .iter()
        .all(|pb| PermKind::Readable.le(pb.perm.kind()))
    {
        Ok(())
    } else if flat.iter().any(|pb| pb.perm.kind() == PermKind::Locked) {
        Err(UbReason::Locked)
    } else {
        Err(UbReason::Permission)
    }
}

fn writable_guard(w: &MTree) -> Result<(), UbReason> {
    let flat = tree_flatten(w);
    if flat
        .iter()
        .all(|pb| PermKind::Writable.le(pb.perm.kind()))
    {
        Ok(())
    } else if flat.iter().any(|pb| pb.perm.kind() == PermKind::Locked) {
        Err(UbReason::Locked)
    } else {
        Err(UbReason::Unwritable)
    }
}

/// The pure read: the value at `a`, provided every bit is readable.
pub fn mem_lookup(env: &Env, a: &Addr, m: &Mem) -> Result<Val, UbReason> {
    let w = cmap_lookup(env, a, m)?;
    readable_guard(&w)?;
    to_val(env, &w).map_err(|_| UbReason::EffectiveTypes)
}

/// Applies `f` to the subobject at `a`, with the byte-splice wrapper for
/// byte addresses: the subobject is flattened, the addressed byte replaced
/// by the flattening of `f`'s result, and the whole reassembled by
/// unflattening — which masks stores to padding.
pub fn cmap_alter(
    env: &Env,
    f: &dyn Fn(MTree) -> MTree,
    a: &Addr,
    m: &Mem,
) -> Result<Mem, UbReason> {
    let (w, malloced) = match m.get(a.index) {
        Some(MemEntry::Obj(w, mu)) => (w.clone(), *mu),
        _ => return Err(UbReason::DeadObject),
    };
    let n = addr_normalize(env, a);
    let new_tree = if a.is_byte() {
        let cb = env.ienv.char_bits();
        let lo = n.norm_byte * cb;
        let wrapped = |sub: MTree| -> MTree {
            let t = sub.type_of();
            let mut flat = tree_flatten(&sub);
            let byte = tree_unflatten(env, &CType::int(IntType::UCHAR), &flat[lo..lo + cb])
                .expect("slice is one byte");
            let replaced = tree_flatten(&f(byte));
            flat.splice(lo..lo + cb, replaced);
            tree_unflatten(env, &t, &flat).expect("length preserved")
        };
        tree_alter(env, &wrapped, &n.norm_ref, &w)
    } else {
        tree_alter(env, f, &n.norm_ref, &w)
    }
    .map_err(|e| match e {
        LookupError::EffectiveTypes => UbReason::EffectiveTypes,
        LookupError::SharedUnion => UbReason::Permission,
        LookupError::Path => UbReason::EffectiveTypes,
    })?;
    let mut out = m.clone();
    out.insert_entry(a.index, MemEntry::Obj(new_tree, malloced));
    Ok(out)
}

/// Records the effective-type effect of an access: the identity alteration
/// at `a`, which forces the variants of the unions along the path. Requires
/// the read itself to be defined.
pub fn mem_force(env: &Env, a: &Addr, m: &Mem) -> Result<Mem, UbReason> {
    mem_lookup(env, a, m)?;
    let (w, malloced) = match m.get(a.index) {
        Some(MemEntry::Obj(w, mu)) => (w.clone(), *mu),
        _ => return Err(UbReason::DeadObject),
    };
    let n = addr_normalize(env, a);
    let new_tree = tree_alter(env, &|w| w, &n.norm_ref, &w).map_err(|e| match e {
        LookupError::EffectiveTypes => UbReason::EffectiveTypes,
        LookupError::SharedUnion => UbReason::Permission,
        LookupError::Path => UbReason::EffectiveTypes,
    })?;
    let mut out = m.clone();
    out.insert_entry(a.index, MemEntry::Obj(new_tree, malloced));
    Ok(out)
}

/// Detailed writability check; [`mem_writable`] is the Boolean view.
pub fn mem_writable_check(env: &Env, a: &Addr, m: &Mem) -> Result<(), UbReason> {
    let w = cmap_lookup(env, a, m)?;
    writable_guard(&w)
}

pub fn mem_writable(env: &Env, a: &Addr, m: &Mem) -> bool {
    mem_writable_check(env, a, m).is_ok()
}

/// Stores `v` at `a`, retaining the permissions already present. The stored
/// tree is the value merged with the old flat permissions; for byte
/// addresses only the addressed byte is replaced and stores into padding are
/// masked.
pub fn mem_insert(env: &Env, a: &Addr, v: &Val, m: &Mem) -> Result<Mem, UbReason> {
    mem_writable_check(env, a, m)?;
    let env2 = env.clone();
    let v = v.clone();
    cmap_alter(
        env,
        &move |w: MTree| {
            let perms: Vec<Perm> = tree_flatten(&w).iter().map(|pb| pb.perm.clone()).collect();
            of_val(&env2, &perms, &v).unwrap_or(w)
        },
        a,
        m,
    )
}

/// Locks every bit of the subobject at `a`; used right after a store to
/// enforce the sequence-point restriction.
pub fn mem_lock(env: &Env, a: &Addr, m: &Mem) -> Result<Mem, UbReason> {
    mem_writable_check(env, a, m)?;
    cmap_alter(
        env,
        &|w: MTree| tree_map(&|pb| pbit(pb.perm.lock(), pb.tag.clone()), &w),
        a,
        m,
    )
}

/// The lockset covering exactly the bits the address reads or writes.
pub fn lock_singleton(env: &Env, a: &Addr) -> Result<Lockset, UbReason> {
    let off = addr_object_offset(env, a).map_err(|_| UbReason::EffectiveTypes)?;
    let width = addr_bit_size(env, a).map_err(|_| UbReason::EffectiveTypes)?;
    let mut out = Lockset::new();
    for i in off..off + width {
        out.insert(a.index, i);
    }
    Ok(out)
}

/// All currently locked positions of the memory.
pub fn mem_locks(env: &Env, m: &Mem) -> Lockset {
    let mut out = Lockset::new();
    for (o, e) in m.iter() {
        if let MemEntry::Obj(w, _) = e {
            let _ = env;
            for (i, pb) in tree_flatten(w).iter().enumerate() {
                if pb.perm.kind() == PermKind::Locked {
                    out.insert(*o, i);
                }
            }
        }
    }
    out
}

/// Unlocks all positions in `omega`; positions outside any object are
/// ignored by the masking, and tombstones pass through.
pub fn mem_unlock(omega: &Lockset, m: &Mem) -> Mem {
    let mut out = Mem::new();
    for (o, e) in m.iter() {
        match e {
            MemEntry::Tomb(t) => out.insert_entry(*o, MemEntry::Tomb(t.clone())),
            MemEntry::Obj(w, mu) => {
                let n = tree_flatten(w).len();
                let mask: Vec<bool> = (0..n).map(|i| omega.contains(*o, i)).collect();
                let new_tree = tree_merge(
                    &|pb, on: &bool| {
                        if *on {
                            pbit(pb.perm.unlock(), pb.tag.clone())
                        } else {
                            pb.clone()
                        }
                    },
                    w,
                    &mask,
                )
                .expect("mask built to length");
                out.insert_entry(*o, MemEntry::Obj(new_tree, *mu));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AllocError {
    IdInUse(ObjId),
    BadValue(String),
}

/// Allocates a fresh object holding `v` with full permission on every bit.
pub fn mem_alloc(env: &Env, o: ObjId, v: &Val, malloced: bool, m: &Mem) -> Result<Mem, AllocError> {
    if m.contains(o) {
        return Err(AllocError::IdInUse(o));
    }
    let bits = env
        .ienv
        .bit_size_of(&env.types, &v.type_of())
        .map_err(|e| AllocError::BadValue(e.to_string()))?;
    let w = of_val(env, &vec![Perm::full(); bits], v)
        .map_err(|e| AllocError::BadValue(format!("{e:?}")))?;
    let mut out = m.clone();
    out.insert_entry(o, MemEntry::Obj(w, malloced));
    Ok(out)
}

/// `free(p)` is defined only when `a` is the head address of a whole
/// malloc'ed array object and every bit still carries the full permission —
/// handing out even an existence token forfeits deallocation.
pub fn mem_freeable(env: &Env, a: &Addr, m: &Mem) -> bool {
    let _ = env;
    let CType::Array(elem, n) = &a.full_type else {
        return false;
    };
    if a.ref_path != vec![RefSeg::Array(0, (**elem).clone(), *n)]
        || a.byte_off != 0
        || a.sub_type != **elem
    {
        return false;
    }
    match m.get(a.index) {
        Some(MemEntry::Obj(w, true)) => tree_flatten(w).iter().all(|pb| pb.perm.is_full()),
        _ => false,
    }
}

/// Deallocates object `o`, leaving a typed tombstone.
pub fn mem_free(o: ObjId, m: &Mem) -> Result<Mem, UbReason> {
    match m.get(o) {
        Some(MemEntry::Obj(w, _)) => {
            let mut out = m.clone();
            out.insert_entry(o, MemEntry::Tomb(w.type_of()));
            Ok(out)
        }
        _ => Err(UbReason::DeadObject),
    }
}

/// Version of the JSON dump schema produced by [`dump_state`]. Bump when
/// the object/lock layout or the bit-string alphabet changes.
pub const DUMP_SCHEMA_VERSION: u32 = 1;

/// Canonical JSON dump of a memory state; byte-identical across runs for
/// equal states.
pub fn dump_state(m: &Mem) -> serde_json::Value {
    let mut objects = serde_json::Map::new();
    for (o, e) in m.iter() {
        let entry = match e {
            MemEntry::Obj(w, malloced) => serde_json::json!({
                "type": w.type_of().to_string(),
                "malloced": malloced,
                "tree": crate::tree::tree_json(w),
            }),
            MemEntry::Tomb(t) => serde_json::json!({
                "dead": true,
                "type": t.to_string(),
            }),
        };
        objects.insert(o.to_string(), entry);
    }
    let locks: Vec<serde_json::Value> = mem_locks(&Env::default(), m)
        .iter()
        .map(|(o, i)| serde_json::json!([o.0, i]))
        .collect();
    serde_json::json!({ "objects": objects, "locks": locks })
}

/// The dump as a stable string.
pub fn dump_string(m: &Mem) -> String {
    serde_json::to_string_pretty(&dump_state(m)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::place::Frozenness;
    use crate::types::PtrType;
    use crate::sepalg::SepAlg;
    use crate::types::{Rank, TypeEnv};
    use crate::value::{val_new, BaseVal};

    fn short_t() -> CType {
        CType::int(IntType::signed(Rank::Short))
    }

    /// union U { int x; short y; }
    fn env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound("U", vec![CType::sint(), short_t()]);
        Env::with_types(types)
    }

    fn alloc_union(env: &Env) -> (Mem, ObjId) {
        let o = ObjId(0);
        let v = val_new(env, &CType::Union("U".into())).unwrap();
        let m = mem_alloc(env, o, &v, false, &Mem::new()).unwrap();
        (m, o)
    }

    fn variant_addr(o: ObjId, i: usize, q: Frozenness) -> Addr {
        let sub = if i == 0 { CType::sint() } else { short_t() };
        Addr::new(
            o,
            CType::Union("U".into()),
            vec![RefSeg::Union(i, "U".into(), q)],
            0,
            sub.clone(),
            PtrType::to(sub),
        )
    }

    #[test]
    fn alloc_lookup_roundtrip() {
        let env = env();
        let o = ObjId(3);
        let v = Val::int(IntType::SINT, 42);
        let m = mem_alloc(&env, o, &v, false, &Mem::new()).unwrap();
        let a = Addr::whole(o, CType::sint());
        assert_eq!(mem_lookup(&env, &a, &m).unwrap(), v.freeze());
        let delta = mem_env_of(&m);
        assert!(delta.alive(o));
        assert_eq!(delta.type_of(o), Some(&CType::sint()));
        assert!(mem_valid(&env, &delta, &m));
    }

    #[test]
    fn store_then_direct_punning_is_defined() {
        let env = env();
        let (m, o) = alloc_union(&env);
        let ax = variant_addr(o, 0, Frozenness::Unfrozen);
        let m = mem_insert(&env, &ax, &Val::int(IntType::SINT, 3), &m).unwrap();
        // Direct, unfrozen access to the other variant reinterprets bits.
        let ay = variant_addr(o, 1, Frozenness::Unfrozen);
        let got = mem_lookup(&env, &ay, &m).unwrap();
        assert_eq!(got, Val::int(IntType::signed(Rank::Short), 3));
        // Through a frozen (stored) reference it is undefined.
        let frozen = variant_addr(o, 1, Frozenness::Frozen);
        assert_eq!(mem_lookup(&env, &frozen, &m), Err(UbReason::EffectiveTypes));
    }

    #[test]
    fn force_switches_variant() {
        let env = env();
        let (m, o) = alloc_union(&env);
        let ax = variant_addr(o, 0, Frozenness::Unfrozen);
        let m = mem_insert(&env, &ax, &Val::int(IntType::SINT, 3), &m).unwrap();
        let ay = variant_addr(o, 1, Frozenness::Unfrozen);
        let m2 = mem_force(&env, &ay, &m).unwrap();
        match m2.tree(o).unwrap() {
            MTree::Union(_, 1, _, _) => {}
            other => panic!("variant not forced: {other:?}"),
        }
        // After the forced read, a store through the frozen other-variant
        // pointer is undefined.
        let frozen_x = variant_addr(o, 0, Frozenness::Frozen);
        assert_eq!(
            mem_insert(&env, &frozen_x, &Val::int(IntType::SINT, 1), &m2),
            Err(UbReason::EffectiveTypes)
        );
        // The looked-up value is unchanged by force.
        assert_eq!(mem_lookup(&env, &ay, &m), mem_lookup(&env, &ay, &m2));
    }

    #[test]
    fn locked_objects_reject_access() {
        let env = env();
        let o = ObjId(0);
        let m = mem_alloc(&env, o, &Val::int(IntType::SINT, 1), false, &Mem::new()).unwrap();
        let a = Addr::whole(o, CType::sint());
        let m = mem_lock(&env, &a, &m).unwrap();
        assert_eq!(mem_lookup(&env, &a, &m), Err(UbReason::Locked));
        assert_eq!(
            mem_insert(&env, &a, &Val::int(IntType::SINT, 2), &m),
            Err(UbReason::Locked)
        );
        // Unlock restores access and shrinks the lockset to empty.
        let locks = mem_locks(&env, &m);
        assert_eq!(locks.len(), 32);
        assert_eq!(locks, lock_singleton(&env, &a).unwrap());
        let m = mem_unlock(&locks, &m);
        assert!(mem_locks(&env, &m).is_empty());
        assert!(mem_lookup(&env, &a, &m).is_ok());
    }

    #[test]
    fn live_object_marked_dead_is_invalid() {
        let env = env();
        let o = ObjId(0);
        let m = mem_alloc(&env, o, &Val::int(IntType::SINT, 1), false, &Mem::new()).unwrap();
        let mut delta = mem_env_of(&m);
        assert!(mem_valid(&env, &delta, &m));
        delta.kill(o);
        assert!(!mem_valid(&env, &delta, &m));
    }

    #[test]
    fn unlock_of_empty_lockset_is_identity() {
        let env = env();
        let (m, _) = alloc_union(&env);
        assert_eq!(mem_unlock(&Lockset::new(), &m), m);
    }

    #[test]
    fn end_of_array_read_fails() {
        let env = env();
        let o = ObjId(0);
        let arr = CType::array(CType::sint(), 4);
        let m = mem_alloc(&env, o, &val_new(&env, &arr).unwrap(), false, &Mem::new()).unwrap();
        let a = Addr::new(
            o,
            arr.clone(),
            vec![RefSeg::Array(0, CType::sint(), 4)],
            16,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        assert_eq!(mem_lookup(&env, &a, &m), Err(UbReason::EndOfArray));
    }

    #[test]
    fn free_makes_objects_dead() {
        let env = env();
        let o = ObjId(0);
        let arr = CType::array(CType::sint(), 1);
        let m = mem_alloc(&env, o, &val_new(&env, &arr).unwrap(), true, &Mem::new()).unwrap();
        let head = Addr::new(
            o,
            arr.clone(),
            vec![RefSeg::Array(0, CType::sint(), 1)],
            0,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        assert!(mem_freeable(&env, &head, &m));
        let m = mem_free(o, &m).unwrap();
        let delta = mem_env_of(&m);
        assert!(!delta.alive(o));
        assert!(delta.contains(o));
        assert_eq!(mem_lookup(&env, &head, &m), Err(UbReason::DeadObject));
        assert!(mem_valid(&env, &delta, &m));
    }

    #[test]
    fn freeable_needs_malloc_and_full_permission() {
        let env = env();
        let o = ObjId(0);
        let arr = CType::array(CType::sint(), 1);
        let head = Addr::new(
            o,
            arr.clone(),
            vec![RefSeg::Array(0, CType::sint(), 1)],
            0,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        // Not malloced.
        let m = mem_alloc(&env, o, &val_new(&env, &arr).unwrap(), false, &Mem::new()).unwrap();
        assert!(!mem_freeable(&env, &head, &m));
        // Malloced, but a token has been handed out of one bit.
        let m = mem_alloc(&env, o, &val_new(&env, &arr).unwrap(), true, &Mem::new()).unwrap();
        assert!(mem_freeable(&env, &head, &m));
        let mut w = m.tree(o).unwrap().clone();
        w = tree_map(
            &|pb| pbit(pb.perm.difference(&Perm::token()), pb.tag.clone()),
            &w,
        );
        let mut m2 = m.clone();
        m2.insert_entry(o, MemEntry::Obj(w, true));
        assert!(!mem_freeable(&env, &head, &m2));
    }

    #[test]
    fn byte_store_into_padding_is_masked() {
        // struct S { short x; short *r; } has two padding bytes at offset 2.
        let mut types = TypeEnv::new();
        types.declare_compound("S", vec![short_t(), CType::ptr_to(short_t())]);
        let env = Env::with_types(types);
        let o = ObjId(0);
        let st = CType::Struct("S".into());
        let m = mem_alloc(
            &env,
            o,
            &Val::Struct(
                "S".into(),
                vec![
                    Val::int(IntType::signed(Rank::Short), 10),
                    Val::Base(BaseVal::Ptr(crate::place::Ptr::Null(PtrType::to(short_t())))),
                ],
            ),
            false,
            &Mem::new(),
        )
        .unwrap();
        let pad_byte = Addr::new(
            o,
            st.clone(),
            vec![],
            2,
            st.clone(),
            PtrType::to(CType::uchar()),
        );
        let m2 = mem_insert(&env, &pad_byte, &Val::int(IntType::UCHAR, 7), &m).unwrap();
        // The padding byte reads back indeterminate, not 7.
        let got = mem_lookup(&env, &pad_byte, &m2).unwrap();
        assert_eq!(got, Val::Base(BaseVal::Indet(crate::types::BaseType::Int(IntType::UCHAR))));
        // And the struct fields are untouched.
        let x = Addr::new(
            o,
            st.clone(),
            vec![RefSeg::Struct(0, "S".into())],
            0,
            short_t(),
            PtrType::to(short_t()),
        );
        assert_eq!(
            mem_lookup(&env, &x, &m2).unwrap(),
            Val::int(IntType::signed(Rank::Short), 10)
        );
    }

    #[test]
    fn byte_store_into_data_byte_lands() {
        let env = env();
        let o = ObjId(0);
        let m = mem_alloc(&env, o, &Val::int(IntType::SINT, 0), false, &Mem::new()).unwrap();
        let b1 = Addr::new(
            o,
            CType::sint(),
            vec![],
            1,
            CType::sint(),
            PtrType::to(CType::uchar()),
        );
        let m = mem_insert(&env, &b1, &Val::int(IntType::UCHAR, 1), &m).unwrap();
        let whole = Addr::whole(o, CType::sint());
        // Byte 1 set to 1 in a little-endian int is 256.
        assert_eq!(mem_lookup(&env, &whole, &m).unwrap(), Val::int(IntType::SINT, 256));
    }

    #[test]
    fn dump_is_deterministic() {
        let env = env();
        let (m, _) = alloc_union(&env);
        assert_eq!(dump_string(&m), dump_string(&m.clone()));
        let empty = Mem::new();
        assert_eq!(
            serde_json::to_string(&dump_state(&empty)).unwrap(),
            r#"{"objects":{},"locks":[]}"#
        );
    }
}
