//! Base values and abstract values, and their conversions to trees and bits.
//!
//! Abstract values are the external currency of the memory model: trees over
//! mathematical integers and pointers, with no permissions or padding. A
//! union read whose variant is unknown yields `UnionAll` carrying one
//! interpretation per variant; typing demands that those interpretations be
//! readings of a single common bit sequence.

use crate::implenv::Env;
use crate::intcode::{int_of_bits, int_to_bits, int_typed};
use crate::mem::MemEnv;
use crate::perm::Perm;
use crate::place::{ptr_alive, ptr_typed, Ptr};
use crate::tree::{bit_join, bit_valid, pbit, ptr_bit_size, Bit, MTree, PBit, TreeError};
use crate::types::{base_type_valid, BaseType, CType, IntType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseVal {
    /// An unusable value of the given base type.
    Indet(BaseType),
    Void,
    Int(IntType, i128),
    Ptr(Ptr),
    /// One object-representation byte that is neither fully concrete nor
    /// fully indeterminate.
    Byte(Vec<Bit>),
}

impl BaseVal {
    pub fn type_of(&self) -> BaseType {
        match self {
            BaseVal::Indet(bt) => bt.clone(),
            BaseVal::Void => BaseType::Void,
            BaseVal::Int(it, _) => BaseType::Int(*it),
            BaseVal::Ptr(p) => BaseType::Ptr(p.type_of()),
            BaseVal::Byte(_) => BaseType::Int(IntType::UCHAR),
        }
    }

    pub fn freeze(&self) -> BaseVal {
        match self {
            BaseVal::Ptr(p) => BaseVal::Ptr(p.freeze()),
            BaseVal::Byte(bs) => BaseVal::Byte(bs.iter().map(Bit::freeze).collect()),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Base(BaseVal),
    Array(CType, Vec<Val>),
    Struct(String, Vec<Val>),
    /// A union with known variant.
    Union(String, usize, Box<Val>),
    /// A union with unknown variant: one interpretation per variant.
    UnionAll(String, Vec<Val>),
}

impl Val {
    pub fn int(it: IntType, x: i128) -> Val {
        Val::Base(BaseVal::Int(it, x))
    }

    pub fn type_of(&self) -> CType {
        match self {
            Val::Base(bv) => CType::Base(bv.type_of()),
            Val::Array(t, vs) => CType::array(t.clone(), vs.len()),
            Val::Struct(t, _) => CType::Struct(t.clone()),
            Val::Union(t, _, _) | Val::UnionAll(t, _) => CType::Union(t.clone()),
        }
    }

    pub fn freeze(&self) -> Val {
        match self {
            Val::Base(bv) => Val::Base(bv.freeze()),
            Val::Array(t, vs) => Val::Array(t.clone(), vs.iter().map(Val::freeze).collect()),
            Val::Struct(t, vs) => Val::Struct(t.clone(), vs.iter().map(Val::freeze).collect()),
            Val::Union(t, i, v) => Val::Union(t.clone(), *i, Box::new(v.freeze())),
            Val::UnionAll(t, vs) => Val::UnionAll(t.clone(), vs.iter().map(Val::freeze).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValError {
    LengthMismatch { want: usize, got: usize },
    Layout(String),
    /// Joining the variant representations of an unknown-variant union
    /// failed; the value was ill-typed.
    JoinConflict,
}

impl From<TreeError> for ValError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::LengthMismatch { want, got } => ValError::LengthMismatch { want, got },
            TreeError::Layout(m) => ValError::Layout(m),
        }
    }
}

fn bit_size(env: &Env, t: &CType) -> Result<usize, ValError> {
    env.ienv
        .bit_size_of(&env.types, t)
        .map_err(|e| ValError::Layout(e.to_string()))
}

/// Object representation of a base value. Pointers flatten to fragment bits
/// of their frozen form — this is what makes stored pointers lose the right
/// to type-punning.
pub fn base_flatten(env: &Env, bv: &BaseVal) -> Result<Vec<Bit>, ValError> {
    Ok(match bv {
        BaseVal::Indet(bt) => vec![Bit::Indet; bit_size(env, &CType::Base(bt.clone()))?],
        BaseVal::Void => vec![Bit::Indet; bit_size(env, &CType::void())?],
        BaseVal::Int(it, x) => int_to_bits(&env.ienv, *it, *x)
            .into_iter()
            .map(Bit::concrete)
            .collect(),
        BaseVal::Ptr(p) => {
            let frozen = p.freeze();
            (0..ptr_bit_size(env))
                .map(|i| Bit::PtrFrag(frozen.clone(), i))
                .collect()
        }
        BaseVal::Byte(bs) => bs.clone(),
    })
}

/// Reads a base value off a bit sequence. Fully concrete bits decode as an
/// integer; a mixed unsigned-char byte is kept symbolic; anything else is
/// indeterminate. A pointer is recovered only from the complete in-order
/// fragment sequence of a single pointer of the right type.
pub fn base_unflatten(env: &Env, bt: &BaseType, bs: &[Bit]) -> Result<BaseVal, ValError> {
    let want = bit_size(env, &CType::Base(bt.clone()))?;
    if bs.len() != want {
        return Err(ValError::LengthMismatch { want, got: bs.len() });
    }
    Ok(match bt {
        BaseType::Void => BaseVal::Void,
        BaseType::Int(it) => {
            let concrete: Option<Vec<bool>> = bs.iter().map(Bit::as_bool).collect();
            if let Some(beta) = concrete {
                BaseVal::Int(*it, int_of_bits(&env.ienv, *it, &beta).expect("length checked"))
            } else if *it == IntType::UCHAR && !bs.iter().all(|b| *b == Bit::Indet) {
                BaseVal::Byte(bs.to_vec())
            } else {
                BaseVal::Indet(BaseType::Int(*it))
            }
        }
        BaseType::Ptr(pt) => {
            let p = match &bs[0] {
                Bit::PtrFrag(p, 0) => Some(p.clone()),
                _ => None,
            };
            match p {
                Some(p)
                    if p.type_of() == *pt
                        && bs
                            .iter()
                            .enumerate()
                            .all(|(i, b)| *b == Bit::PtrFrag(p.clone(), i)) =>
                {
                    BaseVal::Ptr(p)
                }
                _ => BaseVal::Indet(BaseType::Ptr(pt.clone())),
            }
        }
    })
}

/// Reads an abstract value off a bit sequence at a type; unions become
/// `UnionAll` with every variant interpreted from its prefix.
pub fn val_unflatten(env: &Env, t: &CType, bs: &[Bit]) -> Result<Val, ValError> {
    let want = bit_size(env, t)?;
    if bs.len() != want {
        return Err(ValError::LengthMismatch { want, got: bs.len() });
    }
    Ok(match t {
        CType::Base(bt) => Val::Base(base_unflatten(env, bt, bs)?),
        CType::Array(elem, n) => {
            let s = bit_size(env, elem)?;
            let vs = (0..*n)
                .map(|i| val_unflatten(env, elem, &bs[i * s..(i + 1) * s]))
                .collect::<Result<Vec<_>, _>>()?;
            Val::Array((**elem).clone(), vs)
        }
        CType::Struct(tag) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValError::Layout(format!("unknown tag {tag}")))?
                .clone();
            let mut vs = Vec::with_capacity(fields.len());
            for (i, ft) in fields.iter().enumerate() {
                let z = env
                    .ienv
                    .bit_offset_of(&env.types, &fields, i)
                    .map_err(|e| ValError::Layout(e.to_string()))?;
                let s = bit_size(env, ft)?;
                vs.push(val_unflatten(env, ft, &bs[z..z + s])?);
            }
            Val::Struct(tag.clone(), vs)
        }
        CType::Union(tag) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValError::Layout(format!("unknown tag {tag}")))?
                .clone();
            let vs = fields
                .iter()
                .map(|ft| {
                    let s = bit_size(env, ft)?;
                    val_unflatten(env, ft, &bs[..s])
                })
                .collect::<Result<Vec<_>, _>>()?;
            Val::UnionAll(tag.clone(), vs)
        }
    })
}

/// Object representation of a value: padding positions are indeterminate,
/// and an unknown-variant union's representation is the join of its padded
/// variant representations. The join only fails on ill-typed values.
pub fn val_flatten(env: &Env, v: &Val) -> Result<Vec<Bit>, ValError> {
    Ok(match v {
        Val::Base(bv) => base_flatten(env, bv)?,
        Val::Array(_, vs) => {
            let mut out = Vec::new();
            for v in vs {
                out.extend(val_flatten(env, v)?);
            }
            out
        }
        Val::Struct(tag, vs) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValError::Layout(format!("unknown tag {tag}")))?
                .clone();
            let slots = env
                .ienv
                .field_bit_sizes(&env.types, &fields)
                .map_err(|e| ValError::Layout(e.to_string()))?;
            let mut out = Vec::new();
            for (i, v) in vs.iter().enumerate() {
                let mut flat = val_flatten(env, v)?;
                flat.resize(slots[i], Bit::Indet);
                out.extend(flat);
            }
            out
        }
        Val::Union(tag, _, v) => {
            let total = bit_size(env, &CType::Union(tag.clone()))?;
            let mut flat = val_flatten(env, v)?;
            flat.resize(total, Bit::Indet);
            flat
        }
        Val::UnionAll(tag, vs) => {
            let total = bit_size(env, &CType::Union(tag.clone()))?;
            let mut acc = vec![Bit::Indet; total];
            for v in vs {
                let mut flat = val_flatten(env, v)?;
                flat.resize(total, Bit::Indet);
                for (a, b) in acc.iter_mut().zip(flat.iter()) {
                    *a = bit_join(a, b).ok_or(ValError::JoinConflict)?;
                }
            }
            acc
        }
    })
}

/// Merges a value with a flat sequence of permissions, producing the memory
/// tree that stores it.
pub fn of_val(env: &Env, perms: &[Perm], v: &Val) -> Result<MTree, ValError> {
    let want = bit_size(env, &v.type_of())?;
    if perms.len() != want {
        return Err(ValError::LengthMismatch { want, got: perms.len() });
    }
    Ok(match v {
        Val::Base(bv) => {
            let bits = base_flatten(env, bv)?;
            MTree::Base(bv.type_of(), zip_pbits(perms, &bits))
        }
        Val::Array(t, vs) => {
            let s = bit_size(env, t)?;
            let ws = vs
                .iter()
                .enumerate()
                .map(|(i, v)| of_val(env, &perms[i * s..(i + 1) * s], v))
                .collect::<Result<Vec<_>, _>>()?;
            MTree::Array(t.clone(), ws)
        }
        Val::Struct(tag, vs) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValError::Layout(format!("unknown tag {tag}")))?
                .clone();
            let slots = env
                .ienv
                .field_bit_sizes(&env.types, &fields)
                .map_err(|e| ValError::Layout(e.to_string()))?;
            let mut items = Vec::with_capacity(vs.len());
            let mut at = 0;
            for (i, v) in vs.iter().enumerate() {
                let s = bit_size(env, &fields[i])?;
                let w = of_val(env, &perms[at..at + s], v)?;
                let pad = perms[at + s..at + slots[i]]
                    .iter()
                    .map(|g| pbit(g.clone(), Bit::Indet))
                    .collect();
                items.push((w, pad));
                at += slots[i];
            }
            MTree::Struct(tag.clone(), items)
        }
        Val::Union(tag, i, v) => {
            let s = bit_size(env, &v.type_of())?;
            let w = of_val(env, &perms[..s], v)?;
            let pad = perms[s..]
                .iter()
                .map(|g| pbit(g.clone(), Bit::Indet))
                .collect();
            MTree::Union(tag.clone(), *i, Box::new(w), pad)
        }
        Val::UnionAll(tag, _) => {
            let bits = val_flatten(env, v)?;
            MTree::UnionAll(tag.clone(), zip_pbits(perms, &bits))
        }
    })
}

fn zip_pbits(perms: &[Perm], bits: &[Bit]) -> Vec<PBit> {
    perms
        .iter()
        .zip(bits.iter())
        .map(|(g, b)| pbit(g.clone(), b.clone()))
        .collect()
}

/// Strips permissions from a tree, reading unknown-variant unions back as
/// `UnionAll` values.
pub fn to_val(env: &Env, w: &MTree) -> Result<Val, ValError> {
    Ok(match w {
        MTree::Base(bt, pbs) => {
            let bits: Vec<Bit> = pbs.iter().map(|pb| pb.tag.clone()).collect();
            Val::Base(base_unflatten(env, bt, &bits)?)
        }
        MTree::Array(t, ws) => Val::Array(
            t.clone(),
            ws.iter().map(|w| to_val(env, w)).collect::<Result<_, _>>()?,
        ),
        MTree::Struct(t, items) => Val::Struct(
            t.clone(),
            items
                .iter()
                .map(|(w, _)| to_val(env, w))
                .collect::<Result<_, _>>()?,
        ),
        MTree::Union(t, i, w, _) => Val::Union(t.clone(), *i, Box::new(to_val(env, w)?)),
        MTree::UnionAll(t, pbs) => {
            let bits: Vec<Bit> = pbs.iter().map(|pb| pb.tag.clone()).collect();
            val_unflatten(env, &CType::Union(t.clone()), &bits)?
        }
    })
}

/// The indeterminate value of a type.
pub fn val_new(env: &Env, t: &CType) -> Result<Val, ValError> {
    let n = bit_size(env, t)?;
    val_unflatten(env, t, &vec![Bit::Indet; n])
}

/// Why a value failed to type-check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValTypeError {
    InvalidBaseType,
    IndetVoid,
    IntOutOfRange,
    BadPointer,
    ByteNotCanonical,
    BadBit,
    EmptyArray,
    ElementTypeMismatch,
    UnknownTag(String),
    VariantOutOfRange,
    NoCommonBits,
}

pub fn base_val_typed(
    env: &Env,
    delta: &MemEnv,
    bv: &BaseVal,
) -> Result<BaseType, ValTypeError> {
    match bv {
        BaseVal::Indet(bt) => {
            if *bt == BaseType::Void {
                Err(ValTypeError::IndetVoid)
            } else if base_type_valid(&env.types, bt) {
                Ok(bt.clone())
            } else {
                Err(ValTypeError::InvalidBaseType)
            }
        }
        BaseVal::Void => Ok(BaseType::Void),
        BaseVal::Int(it, x) => {
            if int_typed(&env.ienv, *x, *it) {
                Ok(BaseType::Int(*it))
            } else {
                Err(ValTypeError::IntOutOfRange)
            }
        }
        BaseVal::Ptr(p) => ptr_typed(env, delta, p)
            .map(BaseType::Ptr)
            .map_err(|_| ValTypeError::BadPointer),
        BaseVal::Byte(bs) => {
            if bs.len() != env.ienv.char_bits() {
                return Err(ValTypeError::ByteNotCanonical);
            }
            if bs.iter().all(|b| b.as_bool().is_some()) || bs.iter().all(|b| *b == Bit::Indet) {
                return Err(ValTypeError::ByteNotCanonical);
            }
            if !bs.iter().all(|b| bit_valid(env, delta, b)) {
                return Err(ValTypeError::BadBit);
            }
            Ok(BaseType::Int(IntType::UCHAR))
        }
    }
}

pub fn val_typed(env: &Env, delta: &MemEnv, v: &Val) -> Result<CType, ValTypeError> {
    match v {
        Val::Base(bv) => Ok(CType::Base(base_val_typed(env, delta, bv)?)),
        Val::Array(t, vs) => {
            if vs.is_empty() {
                return Err(ValTypeError::EmptyArray);
            }
            for v in vs {
                if val_typed(env, delta, v)? != *t {
                    return Err(ValTypeError::ElementTypeMismatch);
                }
            }
            Ok(CType::array(t.clone(), vs.len()))
        }
        Val::Struct(tag, vs) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValTypeError::UnknownTag(tag.clone()))?
                .clone();
            if fields.len() != vs.len() {
                return Err(ValTypeError::ElementTypeMismatch);
            }
            for (v, ft) in vs.iter().zip(fields.iter()) {
                if val_typed(env, delta, v)? != *ft {
                    return Err(ValTypeError::ElementTypeMismatch);
                }
            }
            Ok(CType::Struct(tag.clone()))
        }
        Val::Union(tag, i, v) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValTypeError::UnknownTag(tag.clone()))?
                .clone();
            let ft = fields.get(*i).ok_or(ValTypeError::VariantOutOfRange)?;
            if val_typed(env, delta, v)? != *ft {
                return Err(ValTypeError::ElementTypeMismatch);
            }
            Ok(CType::Union(tag.clone()))
        }
        Val::UnionAll(tag, vs) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| ValTypeError::UnknownTag(tag.clone()))?
                .clone();
            if fields.len() != vs.len() {
                return Err(ValTypeError::ElementTypeMismatch);
            }
            for (v, ft) in vs.iter().zip(fields.iter()) {
                if val_typed(env, delta, v)? != *ft {
                    return Err(ValTypeError::ElementTypeMismatch);
                }
            }
            // The variants must be readings of one common bit sequence; the
            // join of their padded representations is the canonical witness.
            let bs = val_flatten(env, v).map_err(|_| ValTypeError::NoCommonBits)?;
            if !bs.iter().all(|b| bit_valid(env, delta, b)) {
                return Err(ValTypeError::BadBit);
            }
            for (v, ft) in vs.iter().zip(fields.iter()) {
                let s = env
                    .ienv
                    .bit_size_of(&env.types, ft)
                    .map_err(|e| ValTypeError::UnknownTag(e.to_string()))?;
                let reread = val_unflatten(env, ft, &bs[..s])
                    .map_err(|_| ValTypeError::NoCommonBits)?;
                if reread != *v {
                    return Err(ValTypeError::NoCommonBits);
                }
            }
            Ok(CType::Union(tag.clone()))
        }
    }
}

/// Whether a value is still usable: every pointer inside it (including those
/// hidden in symbolic bytes) refers to a live object.
pub fn val_alive(delta: &MemEnv, v: &Val) -> bool {
    match v {
        Val::Base(BaseVal::Ptr(p)) => ptr_alive(delta, p),
        Val::Base(BaseVal::Byte(bs)) => bs.iter().all(|b| match b {
            Bit::PtrFrag(p, _) => ptr_alive(delta, p),
            _ => true,
        }),
        Val::Base(_) => true,
        Val::Array(_, vs) | Val::Struct(_, vs) | Val::UnionAll(_, vs) => {
            vs.iter().all(|v| val_alive(delta, v))
        }
        Val::Union(_, _, v) => val_alive(delta, v),
    }
}

/// JSON rendering of a value, used by CLI dumps and assertion messages.
pub fn val_json(v: &Val) -> serde_json::Value {
    match v {
        Val::Base(BaseVal::Indet(bt)) => serde_json::json!({ "indet": bt.to_string() }),
        Val::Base(BaseVal::Void) => serde_json::json!("void"),
        Val::Base(BaseVal::Int(it, x)) => serde_json::json!({
            "int": { "type": it.to_string(), "value": x.to_string() }
        }),
        Val::Base(BaseVal::Ptr(p)) => serde_json::json!({ "ptr": ptr_string(p) }),
        Val::Base(BaseVal::Byte(bs)) => serde_json::json!({
            "byte": bs.iter().map(crate::tree::bit_token).collect::<String>()
        }),
        Val::Array(_, vs) => serde_json::json!({
            "array": vs.iter().map(val_json).collect::<Vec<_>>()
        }),
        Val::Struct(tag, vs) => serde_json::json!({
            "struct": tag,
            "fields": vs.iter().map(val_json).collect::<Vec<_>>(),
        }),
        Val::Union(tag, i, v) => serde_json::json!({
            "union": tag,
            "variant": i,
            "value": val_json(v),
        }),
        Val::UnionAll(tag, vs) => serde_json::json!({
            "union_all": tag,
            "variants": vs.iter().map(val_json).collect::<Vec<_>>(),
        }),
    }
}

fn ptr_string(p: &Ptr) -> String {
    match p {
        Ptr::Null(pt) => format!("null:{pt}"),
        Ptr::Fun(name, _, _) => format!("fn:{name}"),
        Ptr::Ptr(a) => {
            let mut s = format!("obj{}", a.index);
            for seg in &a.ref_path {
                match seg {
                    crate::place::RefSeg::Array(i, _, _) => s.push_str(&format!("[{i}]")),
                    crate::place::RefSeg::Struct(i, _) => s.push_str(&format!(".{i}")),
                    crate::place::RefSeg::Union(i, t, q) => {
                        let q = match q {
                            crate::place::Frozenness::Frozen => "!",
                            crate::place::Frozenness::Unfrozen => "",
                        };
                        s.push_str(&format!("<{t}:{i}{q}>"));
                    }
                }
            }
            s.push_str(&format!("+{}@{}", a.byte_off, a.cast_type));
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mem::{MemEnv, ObjId};
    use crate::place::Addr;
    use crate::types::PtrType;
    use crate::types::{Rank, TypeEnv};

    fn short_t() -> CType {
        CType::int(IntType::signed(Rank::Short))
    }

    /// union U { int x; short y; int *p; }
    fn env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound(
            "U",
            vec![CType::sint(), short_t(), CType::ptr_to(CType::sint())],
        );
        types.declare_compound("S", vec![short_t(), CType::ptr(PtrType::Any)]);
        Env::with_types(types)
    }

    #[test]
    fn int_flatten_matches_encoding() {
        let env = env();
        let bits = base_flatten(&env, &BaseVal::Int(IntType::signed(Rank::Short), 33)).unwrap();
        let s: String = bits
            .iter()
            .map(|b| match b.as_bool() {
                Some(true) => '1',
                Some(false) => '0',
                None => 'x',
            })
            .collect();
        assert_eq!(s, "1000010000000000");
    }

    #[test]
    fn pointer_flattens_to_frozen_fragments() {
        let env = env();
        let a = Addr::whole(ObjId(0), CType::sint());
        let p = Ptr::Ptr(a);
        let bits = base_flatten(&env, &BaseVal::Ptr(p.clone())).unwrap();
        assert_eq!(bits.len(), 32);
        assert_eq!(bits[0], Bit::PtrFrag(p.freeze(), 0));
        assert_eq!(bits[31], Bit::PtrFrag(p.freeze(), 31));
    }

    #[test]
    fn unflatten_prefers_int_over_byte() {
        let env = env();
        let zeros = vec![Bit::B0; 8];
        assert_eq!(
            base_unflatten(&env, &BaseType::Int(IntType::UCHAR), &zeros).unwrap(),
            BaseVal::Int(IntType::UCHAR, 0)
        );
        let mut mixed = zeros;
        mixed[3] = Bit::Indet;
        assert!(matches!(
            base_unflatten(&env, &BaseType::Int(IntType::UCHAR), &mixed).unwrap(),
            BaseVal::Byte(_)
        ));
    }

    #[test]
    fn zero_bits_at_union_interpret_every_variant() {
        let env = env();
        let bs = vec![Bit::B0; 32];
        let v = val_unflatten(&env, &CType::Union("U".into()), &bs).unwrap();
        match v {
            Val::UnionAll(_, vs) => {
                assert_eq!(vs[0], Val::int(IntType::SINT, 0));
                assert_eq!(vs[1], Val::int(IntType::signed(Rank::Short), 0));
                // Zeros are not a pointer representation.
                assert_eq!(
                    vs[2],
                    Val::Base(BaseVal::Indet(BaseType::Ptr(PtrType::to(CType::sint()))))
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn val_new_shapes() {
        let env = env();
        assert_eq!(
            val_new(&env, &CType::sint()).unwrap(),
            Val::Base(BaseVal::Indet(BaseType::Int(IntType::SINT)))
        );
        assert_eq!(
            val_new(&env, &CType::array(CType::sint(), 2)).unwrap(),
            Val::Array(
                CType::sint(),
                vec![
                    Val::Base(BaseVal::Indet(BaseType::Int(IntType::SINT))),
                    Val::Base(BaseVal::Indet(BaseType::Int(IntType::SINT))),
                ]
            )
        );
    }

    #[test]
    fn to_of_val_is_freeze() {
        let env = env();
        let mut delta = MemEnv::new();
        let o = ObjId(0);
        delta.insert(o, CType::Union("U".into()), false);
        // A struct holding a short and an unfrozen union pointer.
        let a = Addr::new(
            o,
            CType::Union("U".into()),
            vec![crate::place::RefSeg::Union(0, "U".into(), crate::place::Frozenness::Unfrozen)],
            0,
            CType::sint(),
            PtrType::Any,
        );
        let v = Val::Struct(
            "S".into(),
            vec![
                Val::int(IntType::signed(Rank::Short), 10),
                Val::Base(BaseVal::Ptr(Ptr::Ptr(a))),
            ],
        );
        assert!(val_typed(&env, &delta, &v).is_ok());
        let n = env
            .ienv
            .bit_size_of(&env.types, &CType::Struct("S".into()))
            .unwrap();
        let perms = vec![Perm::full(); n];
        let w = of_val(&env, &perms, &v).unwrap();
        let back = to_val(&env, &w).unwrap();
        assert_eq!(back, v.freeze());
        assert_ne!(back, v); // the pointer annotation was unfrozen
    }

    #[test]
    fn val_tree_new_agree() {
        let env = env();
        for t in [CType::sint(), CType::Struct("S".into()), CType::Union("U".into())] {
            let n = env.ienv.bit_size_of(&env.types, &t).unwrap();
            let v = val_new(&env, &t).unwrap();
            let w = crate::tree::tree_new(&env, &Perm::full(), &t).unwrap();
            assert_eq!(to_val(&env, &w).unwrap(), v);
            assert_eq!(of_val(&env, &vec![Perm::full(); n], &v).unwrap(), w);
        }
    }

    #[test]
    fn unionall_without_common_bits_is_ill_typed() {
        let env = env();
        let delta = MemEnv::new();
        let v = Val::UnionAll(
            "U".into(),
            vec![
                Val::int(IntType::SINT, 0),
                Val::int(IntType::signed(Rank::Short), 1),
                Val::Base(BaseVal::Indet(BaseType::Ptr(PtrType::to(CType::sint())))),
            ],
        );
        assert_eq!(val_typed(&env, &delta, &v), Err(ValTypeError::NoCommonBits));
    }

    #[test]
    fn byte_value_canonicity() {
        let env = env();
        let delta = MemEnv::new();
        let concrete = BaseVal::Byte(vec![Bit::B0; 8]);
        assert_eq!(
            base_val_typed(&env, &delta, &concrete),
            Err(ValTypeError::ByteNotCanonical)
        );
        let indet = BaseVal::Byte(vec![Bit::Indet; 8]);
        assert_eq!(
            base_val_typed(&env, &delta, &indet),
            Err(ValTypeError::ByteNotCanonical)
        );
    }

    #[test]
    fn empty_array_value_is_ill_typed() {
        let env = env();
        let delta = MemEnv::new();
        assert_eq!(
            val_typed(&env, &delta, &Val::Array(CType::sint(), vec![])),
            Err(ValTypeError::EmptyArray)
        );
    }

    /// union U2 { struct S2 { short y; void *p; } x1; int x2; } with an
    /// unknown variant: the representation is the join of the two variant
    /// rows — the short's zeros and the int's zeros agree, the int's zeros
    /// fill the struct's padding, and the pointer fragments survive.
    #[test]
    fn union_flatten_joins_variant_rows() {
        let mut types = TypeEnv::new();
        let short = short_t();
        types.declare_compound("S2", vec![short.clone(), CType::ptr(PtrType::Any)]);
        types.declare_compound("U2", vec![CType::Struct("S2".into()), CType::sint()]);
        let env = Env::with_types(types);
        let mut delta = MemEnv::new();
        delta.insert(ObjId(0), CType::sint(), false);

        let p = Ptr::Ptr(Addr::new(
            ObjId(0),
            CType::sint(),
            vec![],
            0,
            CType::sint(),
            PtrType::Any,
        ));
        let v = Val::UnionAll(
            "U2".into(),
            vec![
                Val::Struct(
                    "S2".into(),
                    vec![
                        Val::int(IntType::signed(Rank::Short), 0),
                        Val::Base(BaseVal::Ptr(p.clone())),
                    ],
                ),
                Val::int(IntType::SINT, 0),
            ],
        );
        assert_eq!(val_typed(&env, &delta, &v), Ok(CType::Union("U2".into())));
        let bits = val_flatten(&env, &v).unwrap();
        assert_eq!(bits.len(), 64);
        // 32 zero bits: the short's own 16 plus the struct padding filled in
        // by the int variant's zeros.
        assert!(bits[..32].iter().all(|b| *b == Bit::B0));
        for (i, b) in bits[32..].iter().enumerate() {
            assert_eq!(*b, Bit::PtrFrag(p.freeze(), i));
        }
        // A conflicting pair of variants has no join.
        let bad = Val::UnionAll(
            "U2".into(),
            vec![
                Val::Struct(
                    "S2".into(),
                    vec![
                        Val::int(IntType::signed(Rank::Short), 1),
                        Val::Base(BaseVal::Ptr(p)),
                    ],
                ),
                Val::int(IntType::SINT, 0),
            ],
        );
        assert_eq!(val_flatten(&env, &bad), Err(ValError::JoinConflict));
    }

    #[test]
    fn flatten_round_trip_union_free() {
        let env = env();
        // For a padding-free, union-free type the two directions are exact.
        let t = CType::array(short_t(), 4);
        let bs: Vec<Bit> = (0..64).map(|i| Bit::concrete(i % 3 == 0)).collect();
        let v = val_unflatten(&env, &t, &bs).unwrap();
        assert_eq!(val_flatten(&env, &v).unwrap(), bs);
    }
}
