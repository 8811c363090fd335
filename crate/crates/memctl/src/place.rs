//! References, addresses and pointers.
//!
//! A reference is a path from the top of an object to a subobject, with an
//! annotation on every union segment saying whether type-punning through it
//! is still permitted (`Unfrozen`) or not (`Frozen`). An address names an
//! object, a reference whose final array segment is normalized to index 0, a
//! byte offset inside the subobject, and the type the address was cast to.
//! Constructors do not validate; typing is a separate judgment so that
//! ill-formed addresses can be represented and rejected.

use crate::implenv::Env;
use crate::mem::{MemEnv, ObjId};
use crate::types::{type_valid, CType, FuncName, IntType, PtrType};
use std::fmt;

/// Whether a union path segment still permits type-punning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frozenness {
    Frozen,
    Unfrozen,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RefSeg {
    /// `i`th element of an array of `n` elements of the given type.
    Array(usize, CType, usize),
    /// `i`th field of a struct.
    Struct(usize, String),
    /// `i`th variant of a union.
    Union(usize, String, Frozenness),
}

pub type Ref = Vec<RefSeg>;

impl RefSeg {
    pub fn freeze(&self) -> RefSeg {
        match self {
            RefSeg::Union(i, t, _) => RefSeg::Union(*i, t.clone(), Frozenness::Frozen),
            other => other.clone(),
        }
    }

    pub fn frozen(&self) -> bool {
        *self == self.freeze()
    }
}

pub fn ref_freeze(r: &[RefSeg]) -> Ref {
    r.iter().map(RefSeg::freeze).collect()
}

pub fn ref_frozen(r: &[RefSeg]) -> bool {
    r.iter().all(RefSeg::frozen)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefError {
    IndexOutOfRange,
    TypeMismatch,
    UnknownTag(String),
}

/// `Γ ⊢ r : from ↝ σ`: the subobject type reached by following `r` from
/// `from`.
pub fn ref_typed(env: &Env, r: &[RefSeg], from: &CType) -> Result<CType, RefError> {
    let mut cur = from.clone();
    for seg in r {
        cur = match (seg, &cur) {
            (RefSeg::Array(i, elem, n), CType::Array(t, len)) => {
                if **t != *elem || *len != *n {
                    return Err(RefError::TypeMismatch);
                }
                if i >= n {
                    return Err(RefError::IndexOutOfRange);
                }
                elem.clone()
            }
            (RefSeg::Struct(i, tag), CType::Struct(t)) if tag == t => {
                let fields = env
                    .types
                    .compound(tag)
                    .ok_or_else(|| RefError::UnknownTag(tag.clone()))?;
                fields.get(*i).cloned().ok_or(RefError::IndexOutOfRange)?
            }
            (RefSeg::Union(i, tag, _), CType::Union(t)) if tag == t => {
                let fields = env
                    .types
                    .compound(tag)
                    .ok_or_else(|| RefError::UnknownTag(tag.clone()))?;
                fields.get(*i).cloned().ok_or(RefError::IndexOutOfRange)?
            }
            _ => return Err(RefError::TypeMismatch),
        };
    }
    Ok(cur)
}

/// Index of the final array segment, or 0.
pub fn ref_offset(r: &[RefSeg]) -> usize {
    match r.last() {
        Some(RefSeg::Array(i, _, _)) => *i,
        _ => 0,
    }
}

/// Length of the final array segment, or 1.
pub fn ref_size(r: &[RefSeg]) -> usize {
    match r.last() {
        Some(RefSeg::Array(_, _, n)) => *n,
        _ => 1,
    }
}

/// Replaces the index of the final array segment.
pub fn ref_set_offset(r: &[RefSeg], j: usize) -> Ref {
    let mut out = r.to_vec();
    if let Some(RefSeg::Array(i, _, _)) = out.last_mut().map(|s| &mut *s) {
        *i = j;
    }
    out
}

/// A path-based location: object, normalized reference, byte offset inside
/// the referenced subobject, and the cast type the location is viewed at.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Addr {
    pub index: ObjId,
    pub full_type: CType,
    pub ref_path: Ref,
    pub byte_off: usize,
    pub sub_type: CType,
    pub cast_type: PtrType,
}

impl Addr {
    pub fn new(
        index: ObjId,
        full_type: CType,
        ref_path: Ref,
        byte_off: usize,
        sub_type: CType,
        cast_type: PtrType,
    ) -> Self {
        Addr { index, full_type, ref_path, byte_off, sub_type, cast_type }
    }

    /// The address of the whole object `o : τ`.
    pub fn whole(o: ObjId, t: CType) -> Self {
        let cast = PtrType::to(t.clone());
        Addr::new(o, t.clone(), Vec::new(), 0, t, cast)
    }

    pub fn freeze(&self) -> Addr {
        Addr { ref_path: ref_freeze(&self.ref_path), ..self.clone() }
    }

    pub fn frozen(&self) -> bool {
        ref_frozen(&self.ref_path)
    }

    /// A byte address views its subobject as unsigned-char bytes: the cast
    /// type differs from the subobject type.
    pub fn is_byte(&self) -> bool {
        self.cast_type != PtrType::to(self.sub_type.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ptr {
    Null(PtrType),
    Ptr(Addr),
    Fun(FuncName, Vec<CType>, CType),
}

impl Ptr {
    pub fn freeze(&self) -> Ptr {
        match self {
            Ptr::Ptr(a) => Ptr::Ptr(a.freeze()),
            other => other.clone(),
        }
    }

    pub fn frozen(&self) -> bool {
        match self {
            Ptr::Ptr(a) => a.frozen(),
            _ => true,
        }
    }

    /// The point-to type carried by the pointer.
    pub fn type_of(&self) -> PtrType {
        match self {
            Ptr::Null(pt) => pt.clone(),
            Ptr::Ptr(a) => a.cast_type.clone(),
            Ptr::Fun(_, args, ret) => PtrType::Fun(args.clone(), Box::new(ret.clone())),
        }
    }
}

/// Why an address failed to type-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddrError {
    UntypedIndex,
    InvalidRef,
    OffsetOutOfRange,
    OffsetMisaligned,
    NotCastable,
}

impl fmt::Display for AddrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self {
            AddrError::UntypedIndex => "object identifier has no type",
            AddrError::InvalidRef => "invalid reference path",
            AddrError::OffsetOutOfRange => "byte offset out of range",
            AddrError::OffsetMisaligned => "byte offset misaligned for cast type",
            AddrError::NotCastable => "subobject type not castable to cast type",
        };
        write!(f, "{m}")
    }
}

/// `σ` is pointer-castable to `σp` when `σp` is `σ` itself, unsigned char,
/// or the anonymous `void*` pointee.
pub fn ptr_castable(sub: &CType, cast: &PtrType) -> bool {
    *cast == PtrType::to(sub.clone())
        || *cast == PtrType::to(CType::int(IntType::UCHAR))
        || *cast == PtrType::Any
}

/// Typing of addresses. The reference must point at the head of any final
/// array subobject (the array index is folded into the byte offset), the
/// offset must stay within the subobject range — one past the end is allowed
/// — and must be a multiple of the cast type's size.
pub fn addr_typed(env: &Env, delta: &MemEnv, a: &Addr) -> Result<PtrType, AddrError> {
    match delta.type_of(a.index) {
        Some(t) if *t == a.full_type => {}
        _ => return Err(AddrError::UntypedIndex),
    }
    if !type_valid(&env.types, &a.full_type) {
        return Err(AddrError::InvalidRef);
    }
    let sigma = ref_typed(env, &a.ref_path, &a.full_type).map_err(|_| AddrError::InvalidRef)?;
    if sigma != a.sub_type || ref_offset(&a.ref_path) != 0 {
        return Err(AddrError::InvalidRef);
    }
    let sub_size = env
        .ienv
        .size_of(&env.types, &a.sub_type)
        .map_err(|_| AddrError::InvalidRef)?;
    if a.byte_off > sub_size * ref_size(&a.ref_path) {
        return Err(AddrError::OffsetOutOfRange);
    }
    let cast_size = env
        .ienv
        .size_of_ptr_type(&env.types, &a.cast_type)
        .map_err(|_| AddrError::InvalidRef)?;
    if cast_size == 0 || a.byte_off % cast_size != 0 {
        return Err(AddrError::OffsetMisaligned);
    }
    if !ptr_castable(&a.sub_type, &a.cast_type) {
        return Err(AddrError::NotCastable);
    }
    Ok(a.cast_type.clone())
}

/// Strict addresses point at actual storage; the one-past-the-end offset is
/// typed but not strict.
pub fn addr_strict(env: &Env, a: &Addr) -> bool {
    let sub_size = match env.ienv.size_of(&env.types, &a.sub_type) {
        Ok(s) => s,
        Err(_) => return false,
    };
    a.byte_off < sub_size * ref_size(&a.ref_path)
}

/// The normalized view of an address: the reference pointing at the actual
/// array element, and the byte offset within that element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormAddr {
    pub index: ObjId,
    pub norm_ref: Ref,
    pub norm_byte: usize,
}

pub fn addr_normalize(env: &Env, a: &Addr) -> NormAddr {
    let sub_size = env.ienv.size_of(&env.types, &a.sub_type).unwrap_or(1).max(1);
    NormAddr {
        index: a.index,
        norm_ref: ref_set_offset(&a.ref_path, a.byte_off / sub_size),
        norm_byte: a.byte_off % sub_size,
    }
}

/// Disjointness of references: after an equal frozen prefix, the paths take
/// different branches of an array or struct.
pub fn ref_disjoint(r1: &[RefSeg], r2: &[RefSeg]) -> bool {
    for (s1, s2) in r1.iter().zip(r2.iter()) {
        if s1.freeze() == s2.freeze() {
            continue;
        }
        return match (s1, s2) {
            (RefSeg::Array(i, t1, n1), RefSeg::Array(j, t2, n2)) => {
                i != j && t1 == t2 && n1 == n2
            }
            (RefSeg::Struct(i, t1), RefSeg::Struct(j, t2)) => i != j && t1 == t2,
            _ => false,
        };
    }
    false
}

/// Disjointness of addresses: different objects, disjoint normalized
/// references, or different bytes of the same subobject viewed byte-wise.
pub fn addr_disjoint(env: &Env, a1: &Addr, a2: &Addr) -> bool {
    if a1.index != a2.index {
        return true;
    }
    let n1 = addr_normalize(env, a1);
    let n2 = addr_normalize(env, a2);
    if ref_disjoint(&n1.norm_ref, &n2.norm_ref) {
        return true;
    }
    a1.is_byte()
        && a2.is_byte()
        && ref_freeze(&n1.norm_ref) == ref_freeze(&n2.norm_ref)
        && n1.norm_byte != n2.norm_byte
}

/// Bit offset contributed by one reference segment.
pub fn ref_seg_object_offset(env: &Env, seg: &RefSeg) -> Result<usize, RefError> {
    match seg {
        RefSeg::Array(i, t, _) => {
            let bits = env
                .ienv
                .bit_size_of(&env.types, t)
                .map_err(|_| RefError::TypeMismatch)?;
            Ok(i * bits)
        }
        RefSeg::Union(..) => Ok(0),
        RefSeg::Struct(i, tag) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| RefError::UnknownTag(tag.clone()))?;
            env.ienv
                .bit_offset_of(&env.types, fields, *i)
                .map_err(|_| RefError::TypeMismatch)
        }
    }
}

/// Bit offset of the storage an address denotes, measured from the start of
/// its object. For typed addresses this is always a multiple of the
/// subobject alignment in bits.
pub fn addr_object_offset(env: &Env, a: &Addr) -> Result<usize, RefError> {
    let n = addr_normalize(env, a);
    let mut total = 0;
    for seg in &n.norm_ref {
        total += ref_seg_object_offset(env, seg)?;
    }
    Ok(total + n.norm_byte * env.ienv.char_bits())
}

/// Bit width of the storage the address reads or writes: one byte for byte
/// addresses, the whole subobject otherwise.
pub fn addr_bit_size(env: &Env, a: &Addr) -> Result<usize, RefError> {
    if a.is_byte() {
        Ok(env.ienv.char_bits())
    } else {
        env.ienv
            .bit_size_of(&env.types, &a.sub_type)
            .map_err(|_| RefError::TypeMismatch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PtrError {
    Addr(AddrError),
    UnknownFunction(String),
    SignatureMismatch,
    InvalidPtrType,
}

pub fn ptr_typed(env: &Env, delta: &MemEnv, p: &Ptr) -> Result<PtrType, PtrError> {
    match p {
        Ptr::Null(pt) => {
            if crate::types::ptr_type_valid(&env.types, pt) {
                Ok(pt.clone())
            } else {
                Err(PtrError::InvalidPtrType)
            }
        }
        Ptr::Ptr(a) => addr_typed(env, delta, a).map_err(PtrError::Addr),
        Ptr::Fun(name, args, ret) => match env.types.function(name) {
            None => Err(PtrError::UnknownFunction(name.clone())),
            Some((fargs, fret)) => {
                if fargs == args && fret == ret {
                    Ok(PtrType::Fun(args.clone(), Box::new(ret.clone())))
                } else {
                    Err(PtrError::SignatureMismatch)
                }
            }
        },
    }
}

/// Null and function pointers are always alive; object pointers live only as
/// long as their object.
pub fn ptr_alive(delta: &MemEnv, p: &Ptr) -> bool {
    match p {
        Ptr::Null(_) | Ptr::Fun(..) => true,
        Ptr::Ptr(a) => delta.alive(a.index),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implenv::Env;
    use crate::mem::{MemEnv, ObjId};
    use crate::types::{Rank, TypeEnv};

    /// struct S { union U { signed char x[2]; int y; } u; void *p; }
    fn nested_env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound(
            "U",
            vec![
                CType::array(CType::int(IntType::SCHAR), 2),
                CType::sint(),
            ],
        );
        types.declare_compound(
            "S",
            vec![CType::Union("U".into()), CType::ptr(PtrType::Any)],
        );
        Env::with_types(types)
    }

    fn schar() -> CType {
        CType::int(IntType::SCHAR)
    }

    /// The address for `(void*)(s.u.x + 2)`.
    fn byte_addr(o: ObjId) -> Addr {
        Addr::new(
            o,
            CType::Struct("S".into()),
            vec![
                RefSeg::Struct(0, "S".into()),
                RefSeg::Union(0, "U".into(), Frozenness::Unfrozen),
                RefSeg::Array(0, schar(), 2),
            ],
            2,
            schar(),
            PtrType::Any,
        )
    }

    #[test]
    fn nested_byte_address_types() {
        let env = nested_env();
        let mut delta = MemEnv::new();
        let o = ObjId(0);
        delta.insert(o, CType::Struct("S".into()), false);
        let a = byte_addr(o);
        assert_eq!(addr_typed(&env, &delta, &a).unwrap(), PtrType::Any);
        assert!(a.is_byte());
        // Offset 2 of a 2-element char array is one past the end.
        assert!(!addr_strict(&env, &a));
        // Its object bit offset: union at 0, array head at 0, byte 2.
        assert_eq!(addr_object_offset(&env, &a).unwrap(), 16);
    }

    #[test]
    fn end_of_array_addresses() {
        let env = Env::default();
        let mut delta = MemEnv::new();
        let o = ObjId(1);
        let arr = CType::array(CType::sint(), 4);
        delta.insert(o, arr.clone(), false);
        // Canonical end-of-array representation: head reference, offset 16.
        let a = Addr::new(
            o,
            arr.clone(),
            vec![RefSeg::Array(0, CType::sint(), 4)],
            16,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        assert!(addr_typed(&env, &delta, &a).is_ok());
        assert!(!addr_strict(&env, &a));
        let n = addr_normalize(&env, &a);
        assert_eq!(n.norm_ref, vec![RefSeg::Array(4, CType::sint(), 4)]);
        assert_eq!(n.norm_byte, 0);
        // The normalized reference is ill-typed: index 4 of a 4-array.
        assert!(ref_typed(&env, &n.norm_ref, &arr).is_err());
        // The non-canonical representation with the index in the reference
        // is rejected.
        let bad = Addr::new(
            o,
            arr.clone(),
            vec![RefSeg::Array(3, CType::sint(), 4)],
            4,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        assert_eq!(addr_typed(&env, &delta, &bad), Err(AddrError::InvalidRef));
    }

    #[test]
    fn ref_typing_rules() {
        let env = nested_env();
        let s = CType::Struct("S".into());
        assert_eq!(ref_typed(&env, &[], &s).unwrap(), s);
        assert_eq!(
            ref_typed(&env, &[RefSeg::Struct(0, "S".into())], &s).unwrap(),
            CType::Union("U".into())
        );
        let arr = CType::array(CType::sint(), 4);
        assert!(ref_typed(&env, &[RefSeg::Array(4, CType::sint(), 4)], &arr).is_err());
    }

    #[test]
    fn freezing() {
        let seg = RefSeg::Union(1, "U".into(), Frozenness::Unfrozen);
        assert_eq!(seg.freeze(), RefSeg::Union(1, "U".into(), Frozenness::Frozen));
        assert_eq!(seg.freeze().freeze(), seg.freeze());
        assert!(!seg.frozen());
        assert!(seg.freeze().frozen());
    }

    /// union { struct { int x, y; } s; int z; } u1, u2 — the disjointness
    /// examples.
    fn overlap_env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound("In", vec![CType::sint(), CType::sint()]);
        types.declare_compound("Out", vec![CType::Struct("In".into()), CType::sint()]);
        Env::with_types(types)
    }

    #[test]
    fn address_disjointness() {
        let env = overlap_env();
        let u = CType::Union("Out".into());
        let u1 = ObjId(0);
        let u2 = ObjId(1);
        let sx = |o: ObjId| {
            Addr::new(
                o,
                u.clone(),
                vec![
                    RefSeg::Union(0, "Out".into(), Frozenness::Unfrozen),
                    RefSeg::Struct(0, "In".into()),
                ],
                0,
                CType::sint(),
                PtrType::to(CType::sint()),
            )
        };
        let sy = Addr::new(
            u1,
            u.clone(),
            vec![
                RefSeg::Union(0, "Out".into(), Frozenness::Unfrozen),
                RefSeg::Struct(1, "In".into()),
            ],
            0,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        let z = Addr::new(
            u1,
            u.clone(),
            vec![RefSeg::Union(1, "Out".into(), Frozenness::Unfrozen)],
            0,
            CType::sint(),
            PtrType::to(CType::sint()),
        );
        // Separate objects.
        assert!(addr_disjoint(&env, &sx(u1), &sx(u2)));
        // Different fields of the same struct.
        assert!(addr_disjoint(&env, &sx(u1), &sy));
        assert!(addr_disjoint(&env, &sy, &sx(u1)));
        // Overlapping union variants are not disjoint.
        assert!(!addr_disjoint(&env, &sx(u1), &z));
        // Disjointness ignores freezing.
        assert!(addr_disjoint(&env, &sx(u1).freeze(), &sy));
    }

    #[test]
    fn object_offsets_align() {
        let env = nested_env();
        let seg = RefSeg::Array(2, CType::sint(), 4);
        assert_eq!(ref_seg_object_offset(&env, &seg).unwrap(), 64);
        assert_eq!(
            ref_seg_object_offset(&env, &RefSeg::Union(1, "U".into(), Frozenness::Frozen))
                .unwrap(),
            0
        );
    }

    #[test]
    fn pointer_typing_and_aliveness() {
        let env = nested_env();
        let mut delta = MemEnv::new();
        let o = ObjId(0);
        delta.insert(o, CType::Struct("S".into()), false);
        let null = Ptr::Null(PtrType::to(CType::sint()));
        assert!(ptr_typed(&env, &delta, &null).is_ok());
        assert!(ptr_alive(&delta, &null));
        let p = Ptr::Ptr(byte_addr(o));
        assert!(ptr_typed(&env, &delta, &p).is_ok());
        assert!(ptr_alive(&delta, &p));
        delta.kill(o);
        // Still typed, no longer alive.
        assert!(ptr_typed(&env, &delta, &p).is_ok());
        assert!(!ptr_alive(&delta, &p));
    }

    #[test]
    fn castability() {
        assert!(ptr_castable(&CType::sint(), &PtrType::to(CType::sint())));
        assert!(ptr_castable(&CType::sint(), &PtrType::Any));
        assert!(ptr_castable(&CType::sint(), &PtrType::to(CType::uchar())));
        assert!(!ptr_castable(
            &CType::sint(),
            &PtrType::to(CType::int(IntType::signed(Rank::Short)))
        ));
    }
}
