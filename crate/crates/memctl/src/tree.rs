//! Symbolic bits, permission-annotated bits, and memory trees.
//!
//! A bit is concrete (`0`/`1`), indeterminate, or one fragment of a pointer's
//! object representation. Memory trees mirror the structure of C types with
//! permission-annotated bits at the leaves; padding is stored explicitly but
//! pinned to indeterminate, and unions either remember their active variant
//! (`Union`) or hold raw bits when no variant is known (`UnionAll`).

use crate::implenv::Env;
use crate::mem::MemEnv;
use crate::perm::Perm;
use crate::place::{ptr_typed, Ptr};
use crate::sepalg::{SepAlg, SepTag, Tagged};
use crate::types::{BaseType, CType};
use std::fmt;

/// A symbolic bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Bit {
    Indet,
    B0,
    B1,
    /// Fragment `i` of pointer `p`'s representation.
    PtrFrag(Ptr, usize),
}

impl Bit {
    pub fn concrete(b: bool) -> Bit {
        if b {
            Bit::B1
        } else {
            Bit::B0
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Bit::B0 => Some(false),
            Bit::B1 => Some(true),
            _ => None,
        }
    }

    pub fn freeze(&self) -> Bit {
        match self {
            Bit::PtrFrag(p, i) => Bit::PtrFrag(p.freeze(), *i),
            other => other.clone(),
        }
    }
}

impl SepTag for Bit {
    fn default_tag() -> Self {
        Bit::Indet
    }
}

/// A permission-annotated bit: the tagged separation algebra over
/// permissions with `Indet` as the default tag.
pub type PBit = Tagged<Perm, Bit>;

pub fn pbit(perm: Perm, bit: Bit) -> PBit {
    Tagged::new(perm, bit)
}

pub fn pbit_indetify(pb: &PBit) -> PBit {
    Tagged::new(pb.perm.clone(), Bit::Indet)
}

/// Valid bits are concrete, indeterminate, or fragments of typed frozen
/// pointers with an in-range fragment index.
pub fn bit_valid(env: &Env, delta: &MemEnv, b: &Bit) -> bool {
    match b {
        Bit::Indet | Bit::B0 | Bit::B1 => true,
        Bit::PtrFrag(p, i) => {
            ptr_typed(env, delta, p).is_ok()
                && p.frozen()
                && *i < ptr_bit_size(env)
        }
    }
}

/// Bit width of any pointer's object representation.
pub fn ptr_bit_size(env: &Env) -> usize {
    env.ienv.config().ptr_size * env.ienv.char_bits()
}

/// A valid permission-annotated bit has a valid permission, a valid bit, and
/// no usable value when the permission is unmapped.
pub fn pbit_valid(env: &Env, delta: &MemEnv, pb: &PBit) -> bool {
    bit_valid(env, delta, &pb.tag)
        && pb.perm.valid()
        && (!pb.perm.unmapped() || pb.tag == Bit::Indet)
}

/// Join of bits: indeterminate bits absorb, equal bits join, and unequal
/// determinate bits have no common representation.
pub fn bit_join(b1: &Bit, b2: &Bit) -> Option<Bit> {
    match (b1, b2) {
        (Bit::Indet, b) => Some(b.clone()),
        (b, Bit::Indet) => Some(b.clone()),
        (a, b) if a == b => Some(a.clone()),
        _ => None,
    }
}

/// Memory trees.
#[derive(Clone, PartialEq, Eq)]
pub enum MTree {
    Base(BaseType, Vec<PBit>),
    Array(CType, Vec<MTree>),
    /// Fields paired with the padding that follows each of them.
    Struct(String, Vec<(MTree, Vec<PBit>)>),
    /// A union with known variant `i`, plus trailing padding.
    Union(String, usize, Box<MTree>, Vec<PBit>),
    /// A union whose variant is unknown; holds the raw object
    /// representation.
    UnionAll(String, Vec<PBit>),
}

impl fmt::Debug for MTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MTree::Base(bt, pbs) => write!(f, "Base({bt}, {} bits)", pbs.len()),
            MTree::Array(t, ws) => f.debug_list().entries(ws).finish().and_then(|_| write!(f, ": {t}[]")),
            MTree::Struct(t, fields) => {
                write!(f, "Struct {t} ")?;
                f.debug_list().entries(fields.iter().map(|(w, _)| w)).finish()
            }
            MTree::Union(t, i, w, _) => write!(f, "Union {t}.{i} {w:?}"),
            MTree::UnionAll(t, pbs) => write!(f, "UnionAll {t} ({} bits)", pbs.len()),
        }
    }
}

impl MTree {
    /// The type annotation carried by the tree.
    pub fn type_of(&self) -> CType {
        match self {
            MTree::Base(bt, _) => CType::Base(bt.clone()),
            MTree::Array(t, ws) => CType::array(t.clone(), ws.len()),
            MTree::Struct(t, _) => CType::Struct(t.clone()),
            MTree::Union(t, _, _, _) | MTree::UnionAll(t, _) => CType::Union(t.clone()),
        }
    }
}

/// Appends the leaves of `w` in order; for typed trees the result has
/// exactly the object-representation width of the tree's type.
pub fn tree_flatten(w: &MTree) -> Vec<PBit> {
    let mut out = Vec::new();
    flatten_into(w, &mut out);
    out
}

fn flatten_into(w: &MTree, out: &mut Vec<PBit>) {
    match w {
        MTree::Base(_, pbs) | MTree::UnionAll(_, pbs) => out.extend_from_slice(pbs),
        MTree::Array(_, ws) => ws.iter().for_each(|w| flatten_into(w, out)),
        MTree::Struct(_, fields) => {
            for (w, pad) in fields {
                flatten_into(w, out);
                out.extend_from_slice(pad);
            }
        }
        MTree::Union(_, _, w, pad) => {
            flatten_into(w, out);
            out.extend_from_slice(pad);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    LengthMismatch { want: usize, got: usize },
    Layout(String),
}

fn bit_size(env: &Env, t: &CType) -> Result<usize, TreeError> {
    env.ienv
        .bit_size_of(&env.types, t)
        .map_err(|e| TreeError::Layout(e.to_string()))
}

/// Structures a flat bit sequence according to a type. Padding slices are
/// indetified (the bit is dropped, the permission kept) and unions come out
/// as [`MTree::UnionAll`] since the variant cannot be read off the bits.
pub fn tree_unflatten(env: &Env, t: &CType, pbs: &[PBit]) -> Result<MTree, TreeError> {
    let want = bit_size(env, t)?;
    if pbs.len() != want {
        return Err(TreeError::LengthMismatch { want, got: pbs.len() });
    }
    Ok(match t {
        CType::Base(bt) => MTree::Base(bt.clone(), pbs.to_vec()),
        CType::Array(elem, n) => {
            let s = bit_size(env, elem)?;
            let ws = (0..*n)
                .map(|i| tree_unflatten(env, elem, &pbs[i * s..(i + 1) * s]))
                .collect::<Result<Vec<_>, _>>()?;
            MTree::Array((**elem).clone(), ws)
        }
        CType::Struct(tag) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| TreeError::Layout(format!("unknown tag {tag}")))?
                .clone();
            let mut out = Vec::with_capacity(fields.len());
            let mut at = 0;
            for (i, ft) in fields.iter().enumerate() {
                let s = bit_size(env, ft)?;
                let slot = env
                    .ienv
                    .field_bit_sizes(&env.types, &fields)
                    .map_err(|e| TreeError::Layout(e.to_string()))?[i];
                let w = tree_unflatten(env, ft, &pbs[at..at + s])?;
                let pad = pbs[at + s..at + slot].iter().map(pbit_indetify).collect();
                out.push((w, pad));
                at += slot;
            }
            MTree::Struct(tag.clone(), out)
        }
        CType::Union(tag) => MTree::UnionAll(tag.clone(), pbs.to_vec()),
    })
}

/// The all-indeterminate tree of a type, with permission `perm` on every
/// bit.
pub fn tree_new(env: &Env, perm: &Perm, t: &CType) -> Result<MTree, TreeError> {
    let n = bit_size(env, t)?;
    tree_unflatten(env, t, &vec![pbit(perm.clone(), Bit::Indet); n])
}

/// Why a tree failed to type-check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeTypeError {
    BadBit,
    BadLength,
    PaddingNotIndet,
    EmptyArray,
    ElementTypeMismatch,
    UnknownTag(String),
    VariantOutOfRange,
    UnmappedUnionVariant,
    InvalidBaseType,
}

/// Typing of memory trees: leaf widths match the layout, all bits are valid,
/// padding carries no information, and a union with a known variant must own
/// at least one mapped bit (unmapped unions must forget their variant).
pub fn tree_typed(env: &Env, delta: &MemEnv, w: &MTree) -> Result<CType, TreeTypeError> {
    match w {
        MTree::Base(bt, pbs) => {
            if !crate::types::base_type_valid(&env.types, bt) {
                return Err(TreeTypeError::InvalidBaseType);
            }
            let t = CType::Base(bt.clone());
            let want = env
                .ienv
                .bit_size_of(&env.types, &t)
                .map_err(|_| TreeTypeError::InvalidBaseType)?;
            if pbs.len() != want {
                return Err(TreeTypeError::BadLength);
            }
            if !pbs.iter().all(|pb| pbit_valid(env, delta, pb)) {
                return Err(TreeTypeError::BadBit);
            }
            Ok(t)
        }
        MTree::Array(elem, ws) => {
            if ws.is_empty() {
                return Err(TreeTypeError::EmptyArray);
            }
            for w in ws {
                let t = tree_typed(env, delta, w)?;
                if t != *elem {
                    return Err(TreeTypeError::ElementTypeMismatch);
                }
            }
            Ok(CType::array(elem.clone(), ws.len()))
        }
        MTree::Struct(tag, items) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| TreeTypeError::UnknownTag(tag.clone()))?
                .clone();
            if fields.len() != items.len() {
                return Err(TreeTypeError::BadLength);
            }
            let slots = env
                .ienv
                .field_bit_sizes(&env.types, &fields)
                .map_err(|e| TreeTypeError::UnknownTag(e.to_string()))?;
            for (i, (w, pad)) in items.iter().enumerate() {
                let t = tree_typed(env, delta, w)?;
                if t != fields[i] {
                    return Err(TreeTypeError::ElementTypeMismatch);
                }
                let s = env
                    .ienv
                    .bit_size_of(&env.types, &fields[i])
                    .map_err(|e| TreeTypeError::UnknownTag(e.to_string()))?;
                if pad.len() != slots[i] - s {
                    return Err(TreeTypeError::BadLength);
                }
                if !pad.iter().all(|pb| pbit_valid(env, delta, pb)) {
                    return Err(TreeTypeError::BadBit);
                }
                if !pad.iter().all(|pb| pb.tag == Bit::Indet) {
                    return Err(TreeTypeError::PaddingNotIndet);
                }
            }
            Ok(CType::Struct(tag.clone()))
        }
        MTree::Union(tag, i, w, pad) => {
            let fields = env
                .types
                .compound(tag)
                .ok_or_else(|| TreeTypeError::UnknownTag(tag.clone()))?
                .clone();
            if *i >= fields.len() {
                return Err(TreeTypeError::VariantOutOfRange);
            }
            let t = tree_typed(env, delta, w)?;
            if t != fields[*i] {
                return Err(TreeTypeError::ElementTypeMismatch);
            }
            let union_bits = env
                .ienv
                .bit_size_of(&env.types, &CType::Union(tag.clone()))
                .map_err(|e| TreeTypeError::UnknownTag(e.to_string()))?;
            let s = env
                .ienv
                .bit_size_of(&env.types, &fields[*i])
                .map_err(|e| TreeTypeError::UnknownTag(e.to_string()))?;
            if pad.len() != union_bits - s {
                return Err(TreeTypeError::BadLength);
            }
            if !pad.iter().all(|pb| pbit_valid(env, delta, pb)) {
                return Err(TreeTypeError::BadBit);
            }
            if !pad.iter().all(|pb| pb.tag == Bit::Indet) {
                return Err(TreeTypeError::PaddingNotIndet);
            }
            let mut all = tree_flatten(w);
            all.extend_from_slice(pad);
            if all.iter().all(|pb| pb.unmapped()) {
                return Err(TreeTypeError::UnmappedUnionVariant);
            }
            Ok(CType::Union(tag.clone()))
        }
        MTree::UnionAll(tag, pbs) => {
            let want = env
                .ienv
                .bit_size_of(&env.types, &CType::Union(tag.clone()))
                .map_err(|_| TreeTypeError::UnknownTag(tag.clone()))?;
            if pbs.len() != want {
                return Err(TreeTypeError::BadLength);
            }
            if !pbs.iter().all(|pb| pbit_valid(env, delta, pb)) {
                return Err(TreeTypeError::BadBit);
            }
            Ok(CType::Union(tag.clone()))
        }
    }
}

/// Why a tree lookup failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupError {
    /// Access through a frozen reference to a different union variant.
    EffectiveTypes,
    /// Reinterpreting a union requires exclusive ownership of its bits.
    SharedUnion,
    /// The path does not fit the tree.
    Path,
}

use crate::place::{Frozenness, RefSeg};

/// Descends a reference path through a tree. Same-variant union access
/// descends structurally; access to a different variant through an unfrozen
/// reference reinterprets the union's bits at the new variant, provided the
/// permissions are exclusively owned; frozen references to a different
/// variant fail — that is the effective-types rule.
pub fn tree_lookup(env: &Env, r: &[RefSeg], w: &MTree) -> Result<MTree, LookupError> {
    let Some((seg, rest)) = r.split_first() else {
        return Ok(w.clone());
    };
    match (seg, w) {
        (RefSeg::Array(i, _, _), MTree::Array(_, ws)) => {
            let w = ws.get(*i).ok_or(LookupError::Path)?;
            tree_lookup(env, rest, w)
        }
        (RefSeg::Struct(i, _), MTree::Struct(_, items)) => {
            let (w, _) = items.get(*i).ok_or(LookupError::Path)?;
            tree_lookup(env, rest, w)
        }
        (RefSeg::Union(i, tag, q), MTree::Union(wtag, j, inner, pad)) => {
            if tag != wtag {
                return Err(LookupError::Path);
            }
            if i == j {
                return tree_lookup(env, rest, inner);
            }
            match q {
                Frozenness::Frozen => Err(LookupError::EffectiveTypes),
                Frozenness::Unfrozen => {
                    let mut all = tree_flatten(inner);
                    all.extend_from_slice(pad);
                    if !all.iter().all(|pb| pb.unshared()) {
                        return Err(LookupError::SharedUnion);
                    }
                    let ti = variant_type(env, tag, *i).ok_or(LookupError::Path)?;
                    let s = bit_size(env, &ti).map_err(|_| LookupError::Path)?;
                    let sub = tree_unflatten(env, &ti, &all[..s]).map_err(|_| LookupError::Path)?;
                    tree_lookup(env, rest, &sub)
                }
            }
        }
        (RefSeg::Union(i, tag, _), MTree::UnionAll(wtag, pbs)) => {
            if tag != wtag {
                return Err(LookupError::Path);
            }
            if !pbs.iter().all(|pb| pb.unshared()) {
                return Err(LookupError::SharedUnion);
            }
            let ti = variant_type(env, tag, *i).ok_or(LookupError::Path)?;
            let s = bit_size(env, &ti).map_err(|_| LookupError::Path)?;
            let sub = tree_unflatten(env, &ti, &pbs[..s]).map_err(|_| LookupError::Path)?;
            tree_lookup(env, rest, &sub)
        }
        _ => Err(LookupError::Path),
    }
}

fn variant_type(env: &Env, tag: &str, i: usize) -> Option<CType> {
    env.types.compound(tag).and_then(|fs| fs.get(i).cloned())
}

/// Applies `f` to the subtree at `r`. Changing a union's variant
/// reinterprets its bits at the new variant and indetifies the remainder;
/// the result is only meaningful when the corresponding lookup succeeds, so
/// the lookup is checked first.
pub fn tree_alter(
    env: &Env,
    f: &dyn Fn(MTree) -> MTree,
    r: &[RefSeg],
    w: &MTree,
) -> Result<MTree, LookupError> {
    tree_lookup(env, r, w)?;
    Ok(alter_unchecked(env, f, r, w))
}

fn alter_unchecked(env: &Env, f: &dyn Fn(MTree) -> MTree, r: &[RefSeg], w: &MTree) -> MTree {
    let Some((seg, rest)) = r.split_first() else {
        return f(w.clone());
    };
    match (seg, w) {
        (RefSeg::Array(i, _, _), MTree::Array(t, ws)) => {
            let mut ws = ws.clone();
            ws[*i] = alter_unchecked(env, f, rest, &ws[*i]);
            MTree::Array(t.clone(), ws)
        }
        (RefSeg::Struct(i, _), MTree::Struct(t, items)) => {
            let mut items = items.clone();
            items[*i].0 = alter_unchecked(env, f, rest, &items[*i].0);
            MTree::Struct(t.clone(), items)
        }
        (RefSeg::Union(i, tag, _), MTree::Union(_, j, inner, pad)) => {
            if i == j {
                MTree::Union(
                    tag.clone(),
                    *i,
                    Box::new(alter_unchecked(env, f, rest, inner)),
                    pad.clone(),
                )
            } else {
                let mut all = tree_flatten(inner);
                all.extend_from_slice(pad);
                reinterpret_variant(env, f, rest, tag, *i, &all)
            }
        }
        (RefSeg::Union(i, tag, _), MTree::UnionAll(_, pbs)) => {
            reinterpret_variant(env, f, rest, tag, *i, pbs)
        }
        // Unreachable under the lookup guard.
        _ => w.clone(),
    }
}

fn reinterpret_variant(
    env: &Env,
    f: &dyn Fn(MTree) -> MTree,
    rest: &[RefSeg],
    tag: &str,
    i: usize,
    all: &[PBit],
) -> MTree {
    let ti = variant_type(env, tag, i).expect("guarded by lookup");
    let s = bit_size(env, &ti).expect("guarded by lookup");
    let sub = tree_unflatten(env, &ti, &all[..s]).expect("guarded by lookup");
    let pad = all[s..].iter().map(pbit_indetify).collect();
    MTree::Union(
        tag.to_string(),
        i,
        Box::new(alter_unchecked(env, f, rest, &sub)),
        pad,
    )
}

/// Applies a function to every leaf, preserving the tree shape.
pub fn tree_map(f: &dyn Fn(&PBit) -> PBit, w: &MTree) -> MTree {
    match w {
        MTree::Base(bt, pbs) => MTree::Base(bt.clone(), pbs.iter().map(f).collect()),
        MTree::Array(t, ws) => {
            MTree::Array(t.clone(), ws.iter().map(|w| tree_map(f, w)).collect())
        }
        MTree::Struct(t, items) => MTree::Struct(
            t.clone(),
            items
                .iter()
                .map(|(w, pad)| (tree_map(f, w), pad.iter().map(f).collect()))
                .collect(),
        ),
        MTree::Union(t, i, w, pad) => MTree::Union(
            t.clone(),
            *i,
            Box::new(tree_map(f, w)),
            pad.iter().map(f).collect(),
        ),
        MTree::UnionAll(t, pbs) => MTree::UnionAll(t.clone(), pbs.iter().map(f).collect()),
    }
}

/// Zips the leaves of `w` with `ys`, preserving the tree shape. `ys` must be
/// exactly as long as the flattened tree.
pub fn tree_merge<Y: Clone>(
    f: &dyn Fn(&PBit, &Y) -> PBit,
    w: &MTree,
    ys: &[Y],
) -> Result<MTree, TreeError> {
    let want = tree_flatten(w).len();
    if ys.len() != want {
        return Err(TreeError::LengthMismatch { want, got: ys.len() });
    }
    let mut pos = 0;
    Ok(merge_rec(f, w, ys, &mut pos))
}

fn merge_rec<Y: Clone>(
    f: &dyn Fn(&PBit, &Y) -> PBit,
    w: &MTree,
    ys: &[Y],
    pos: &mut usize,
) -> MTree {
    let zip_leaves = |pbs: &[PBit], pos: &mut usize| -> Vec<PBit> {
        let out = pbs
            .iter()
            .enumerate()
            .map(|(k, pb)| f(pb, &ys[*pos + k]))
            .collect();
        *pos += pbs.len();
        out
    };
    match w {
        MTree::Base(bt, pbs) => MTree::Base(bt.clone(), zip_leaves(pbs, pos)),
        MTree::Array(t, ws) => MTree::Array(
            t.clone(),
            ws.iter().map(|w| merge_rec(f, w, ys, pos)).collect(),
        ),
        MTree::Struct(t, items) => MTree::Struct(
            t.clone(),
            items
                .iter()
                .map(|(w, pad)| {
                    let w = merge_rec(f, w, ys, pos);
                    let pad = zip_leaves(pad, pos);
                    (w, pad)
                })
                .collect(),
        ),
        MTree::Union(t, i, w, pad) => {
            let w = merge_rec(f, w, ys, pos);
            let pad = zip_leaves(pad, pos);
            MTree::Union(t.clone(), *i, Box::new(w), pad)
        }
        MTree::UnionAll(t, pbs) => MTree::UnionAll(t.clone(), zip_leaves(pbs, pos)),
    }
}

/// Renders one bit as a dump token: `0`, `1`, `x`, or a parenthesized
/// pointer-fragment token `(p:<id>:<i>)`.
pub fn bit_token(b: &Bit) -> String {
    match b {
        Bit::B0 => "0".into(),
        Bit::B1 => "1".into(),
        Bit::Indet => "x".into(),
        Bit::PtrFrag(p, i) => match p {
            Ptr::Ptr(a) => format!("(p:{}:{})", a.index, i),
            Ptr::Null(_) => format!("(p:null:{i})"),
            Ptr::Fun(name, _, _) => format!("(p:fn:{name}:{i})"),
        },
    }
}

/// Bit string of a leaf, e.g. `10xx(p:0:0)(p:0:1)`.
pub fn bits_string(pbs: &[PBit]) -> String {
    pbs.iter().map(|pb| bit_token(&pb.tag)).collect()
}

/// Run-length encoded permissions of a leaf: `[["U(0,1)", 16], ...]`.
pub fn perms_json(pbs: &[PBit]) -> serde_json::Value {
    let mut runs: Vec<(String, usize)> = Vec::new();
    for pb in pbs {
        let s = pb.perm.to_string();
        match runs.last_mut() {
            Some((p, n)) if *p == s => *n += 1,
            _ => runs.push((s, 1)),
        }
    }
    serde_json::Value::Array(
        runs.into_iter()
            .map(|(p, n)| serde_json::json!([p, n]))
            .collect(),
    )
}

/// Constructor-tagged JSON rendering of a tree; byte-identical for equal
/// trees.
pub fn tree_json(w: &MTree) -> serde_json::Value {
    match w {
        MTree::Base(bt, pbs) => serde_json::json!({
            "kind": "base",
            "type": bt.to_string(),
            "bits": bits_string(pbs),
            "perms": perms_json(pbs),
        }),
        MTree::Array(t, ws) => serde_json::json!({
            "kind": "array",
            "elem": t.to_string(),
            "children": ws.iter().map(tree_json).collect::<Vec<_>>(),
        }),
        MTree::Struct(tag, items) => serde_json::json!({
            "kind": "struct",
            "tag": tag,
            "fields": items.iter().map(|(w, pad)| serde_json::json!({
                "tree": tree_json(w),
                "pad_bits": bits_string(pad),
                "pad_perms": perms_json(pad),
            })).collect::<Vec<_>>(),
        }),
        MTree::Union(tag, i, w, pad) => serde_json::json!({
            "kind": "union",
            "tag": tag,
            "variant": i,
            "tree": tree_json(w),
            "pad_bits": bits_string(pad),
            "pad_perms": perms_json(pad),
        }),
        MTree::UnionAll(tag, pbs) => serde_json::json!({
            "kind": "union_all",
            "tag": tag,
            "bits": bits_string(pbs),
            "perms": perms_json(pbs),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implenv::Env;
    use crate::mem::{MemEnv, ObjId};
    use crate::perm::Perm;
    use crate::place::{Addr, Frozenness, RefSeg};
    use crate::sepalg::rat;
    use crate::types::{IntType, TypeEnv};

    fn env() -> Env {
        let mut types = TypeEnv::new();
        types.declare_compound(
            "U",
            vec![CType::sint(), CType::int(IntType::signed(crate::types::Rank::Short))],
        );
        types.declare_compound(
            "S",
            vec![
                CType::int(IntType::signed(crate::types::Rank::Short)),
                CType::ptr_to(CType::int(IntType::signed(crate::types::Rank::Short))),
            ],
        );
        Env::with_types(types)
    }

    fn full_bits(n: usize, bit: Bit) -> Vec<PBit> {
        vec![pbit(Perm::full(), bit); n]
    }

    #[test]
    fn join_rules() {
        assert_eq!(bit_join(&Bit::Indet, &Bit::B1), Some(Bit::B1));
        assert_eq!(bit_join(&Bit::B0, &Bit::Indet), Some(Bit::B0));
        assert_eq!(bit_join(&Bit::B1, &Bit::B1), Some(Bit::B1));
        assert_eq!(bit_join(&Bit::B1, &Bit::B0), None);
    }

    #[test]
    fn unmapped_pbit_must_be_indet() {
        let env = env();
        let delta = MemEnv::new();
        assert!(!pbit_valid(&env, &delta, &pbit(Perm::empty(), Bit::B0)));
        assert!(pbit_valid(&env, &delta, &pbit(Perm::empty(), Bit::Indet)));
    }

    #[test]
    fn unflatten_struct_indetifies_padding() {
        let env = env();
        let delta = MemEnv::new();
        // struct S is short + 2 bytes padding + 4-byte pointer = 8 bytes.
        let bits = full_bits(64, Bit::B1);
        let w = tree_unflatten(&env, &CType::Struct("S".into()), &bits).unwrap();
        match &w {
            MTree::Struct(_, items) => {
                assert_eq!(items.len(), 2);
                assert_eq!(items[0].1.len(), 16);
                assert!(items[0].1.iter().all(|pb| pb.tag == Bit::Indet));
                // Permissions on padding are kept.
                assert!(items[0].1.iter().all(|pb| pb.perm == Perm::full()));
            }
            _ => panic!("expected struct"),
        }
        assert!(tree_typed(&env, &delta, &w).is_ok());
    }

    #[test]
    fn unions_unflatten_to_unionall() {
        let env = env();
        let bits = full_bits(32, Bit::B0);
        let w = tree_unflatten(&env, &CType::Union("U".into()), &bits).unwrap();
        assert!(matches!(w, MTree::UnionAll(_, _)));
    }

    #[test]
    fn new_array_replicates() {
        let env = env();
        let t = CType::array(CType::sint(), 3);
        let w = tree_new(&env, &Perm::full(), &t).unwrap();
        let elem = tree_new(&env, &Perm::full(), &CType::sint()).unwrap();
        assert_eq!(w, MTree::Array(CType::sint(), vec![elem.clone(), elem.clone(), elem]));
        assert!(tree_flatten(&w)
            .iter()
            .all(|pb| *pb == pbit(Perm::full(), Bit::Indet)));
    }

    #[test]
    fn typing_rejects_bad_padding_and_union_variants() {
        let env = env();
        let delta = MemEnv::new();
        // Non-Indet padding bit.
        let bits = full_bits(64, Bit::B1);
        let mut w = tree_unflatten(&env, &CType::Struct("S".into()), &bits).unwrap();
        if let MTree::Struct(_, items) = &mut w {
            items[0].1[0].tag = Bit::B0;
        }
        assert_eq!(tree_typed(&env, &delta, &w), Err(TreeTypeError::PaddingNotIndet));

        // A union with a known variant but fully unmapped permissions.
        let payload = MTree::Base(
            BaseType::Int(IntType::SINT),
            vec![pbit(Perm::empty(), Bit::Indet); 32],
        );
        let w = MTree::Union("U".into(), 0, Box::new(payload), vec![]);
        assert_eq!(tree_typed(&env, &delta, &w), Err(TreeTypeError::UnmappedUnionVariant));

        // Wrong leaf width.
        let w = MTree::Base(BaseType::Int(IntType::SINT), full_bits(16, Bit::B0));
        assert_eq!(tree_typed(&env, &delta, &w), Err(TreeTypeError::BadLength));
    }

    #[test]
    fn flatten_length_matches_bit_size() {
        let env = env();
        let delta = MemEnv::new();
        for t in [
            CType::sint(),
            CType::Struct("S".into()),
            CType::Union("U".into()),
            CType::array(CType::Struct("S".into()), 2),
        ] {
            let w = tree_new(&env, &Perm::full(), &t).unwrap();
            assert_eq!(
                tree_flatten(&w).len(),
                env.ienv.bit_size_of(&env.types, &t).unwrap()
            );
            assert!(tree_typed(&env, &delta, &w).is_ok(), "{t}");
        }
    }

    #[test]
    fn frozen_wrong_variant_lookup_fails() {
        let env = env();
        // A union holding variant 0 (int), all zero bits.
        let payload = MTree::Base(BaseType::Int(IntType::SINT), full_bits(32, Bit::B0));
        let w = MTree::Union("U".into(), 0, Box::new(payload), vec![]);
        let frozen = [RefSeg::Union(1, "U".into(), Frozenness::Frozen)];
        assert_eq!(tree_lookup(&env, &frozen, &w), Err(LookupError::EffectiveTypes));
        // Unfrozen access reinterprets the prefix at the other variant.
        let unfrozen = [RefSeg::Union(1, "U".into(), Frozenness::Unfrozen)];
        let got = tree_lookup(&env, &unfrozen, &w).unwrap();
        assert_eq!(
            got.type_of(),
            CType::int(IntType::signed(crate::types::Rank::Short))
        );
        // Shared permissions forbid the reinterpretation.
        let shared = tree_map(&|pb| pbit(pb.perm.half(), pb.tag.clone()), &w);
        assert_eq!(tree_lookup(&env, &unfrozen, &shared), Err(LookupError::SharedUnion));
    }

    #[test]
    fn lookup_nil_is_identity() {
        let env = env();
        let w = tree_new(&env, &Perm::full(), &CType::sint()).unwrap();
        assert_eq!(tree_lookup(&env, &[], &w).unwrap(), w);
    }

    #[test]
    fn alter_switches_union_variant() {
        let env = env();
        let payload = MTree::Base(BaseType::Int(IntType::SINT), full_bits(32, Bit::B0));
        let w = MTree::Union("U".into(), 0, Box::new(payload), vec![]);
        let r = [RefSeg::Union(1, "U".into(), Frozenness::Unfrozen)];
        let got = tree_alter(&env, &|w| w, &r, &w).unwrap();
        match got {
            MTree::Union(_, 1, inner, pad) => {
                assert_eq!(
                    inner.type_of(),
                    CType::int(IntType::signed(crate::types::Rank::Short))
                );
                assert_eq!(pad.len(), 16);
                assert!(pad.iter().all(|pb| pb.tag == Bit::Indet));
            }
            other => panic!("unexpected {other:?}"),
        }
        // Alter at a frozen wrong-variant path is rejected.
        let frozen = [RefSeg::Union(1, "U".into(), Frozenness::Frozen)];
        assert!(tree_alter(&env, &|w| w, &frozen, &w).is_err());
    }

    #[test]
    fn merge_first_projection_is_identity() {
        let env = env();
        let w = tree_new(&env, &Perm::full(), &CType::Struct("S".into())).unwrap();
        let ys: Vec<u8> = vec![0; tree_flatten(&w).len()];
        let got = tree_merge(&|pb, _| pb.clone(), &w, &ys).unwrap();
        assert_eq!(got, w);
        assert!(tree_merge(&|pb, _| pb.clone(), &w, &ys[1..]).is_err());
    }

    #[test]
    fn merge_unlock_mask_unlocks_exactly_masked_leaves() {
        let env = env();
        let w0 = tree_new(&env, &Perm::full(), &CType::array(CType::uchar(), 2)).unwrap();
        let locked = tree_map(&|pb| pbit(pb.perm.lock(), pb.tag.clone()), &w0);
        let mut mask = vec![false; 16];
        for m in mask.iter_mut().take(8) {
            *m = true;
        }
        let got = tree_merge(
            &|pb, on: &bool| {
                if *on {
                    pbit(pb.perm.unlock(), pb.tag.clone())
                } else {
                    pb.clone()
                }
            },
            &locked,
            &mask,
        )
        .unwrap();
        let flat = tree_flatten(&got);
        assert!(flat[..8].iter().all(|pb| pb.perm == Perm::full()));
        assert!(flat[8..].iter().all(|pb| pb.perm == Perm::full().lock()));
    }

    /// struct S { union U { signed char x[2]; int y; } u; void *p; }
    /// s = { .u = { .x = {33, 34} }, .p = s.u.x + 2 }
    /// flattens to the two char encodings, 16 indeterminate padding bits
    /// inside the union, and 32 pointer fragment bits.
    #[test]
    fn nested_struct_flatten_layout() {
        let mut types = TypeEnv::new();
        let schar = CType::int(IntType::SCHAR);
        types.declare_compound("U", vec![CType::array(schar.clone(), 2), CType::sint()]);
        types.declare_compound(
            "S",
            vec![CType::Union("U".into()), CType::ptr(crate::types::PtrType::Any)],
        );
        let env = Env::with_types(types);
        let o = ObjId(0);
        let mut delta = MemEnv::new();
        delta.insert(o, CType::Struct("S".into()), false);

        let p = Ptr::Ptr(Addr::new(
            o,
            CType::Struct("S".into()),
            vec![
                RefSeg::Struct(0, "S".into()),
                RefSeg::Union(0, "U".into(), Frozenness::Unfrozen),
                RefSeg::Array(0, schar.clone(), 2),
            ],
            2,
            schar.clone(),
            crate::types::PtrType::Any,
        ));
        let v = crate::value::Val::Struct(
            "S".into(),
            vec![
                crate::value::Val::Union(
                    "U".into(),
                    0,
                    Box::new(crate::value::Val::Array(
                        schar.clone(),
                        vec![
                            crate::value::Val::int(IntType::SCHAR, 33),
                            crate::value::Val::int(IntType::SCHAR, 34),
                        ],
                    )),
                ),
                crate::value::Val::Base(crate::value::BaseVal::Ptr(p.clone())),
            ],
        );
        assert!(crate::value::val_typed(&env, &delta, &v).is_ok());
        let w = crate::value::of_val(&env, &vec![Perm::full(); 64], &v).unwrap();
        assert_eq!(tree_typed(&env, &delta, &w), Ok(CType::Struct("S".into())));

        let s = bits_string(&tree_flatten(&w));
        let (data, rest) = s.split_at(16);
        assert_eq!(data, "1000010001000100");
        let (pad, frags) = rest.split_at(16);
        assert_eq!(pad, "x".repeat(16));
        // Stored pointer fragments are frozen.
        assert!(frags.starts_with("(p:0:0)(p:0:1)"));
        assert_eq!(frags.matches("(p:").count(), 32);
        let flat = tree_flatten(&w);
        match &flat[32].tag {
            Bit::PtrFrag(stored, 0) => {
                assert!(stored.frozen());
                assert_eq!(*stored, p.freeze());
            }
            other => panic!("unexpected bit {other:?}"),
        }
    }

    #[test]
    fn pointer_fragment_bits_validate() {
        let env = env();
        let mut delta = MemEnv::new();
        let o = ObjId(0);
        delta.insert(o, CType::sint(), false);
        let p = Ptr::Ptr(Addr::whole(o, CType::sint()));
        assert!(bit_valid(&env, &delta, &Bit::PtrFrag(p.clone(), 0)));
        assert!(!bit_valid(&env, &delta, &Bit::PtrFrag(p.clone(), 32)));
        // Unfrozen pointers may not be stored as bits.
        let u = Ptr::Ptr(Addr::new(
            o,
            CType::sint(),
            vec![],
            0,
            CType::sint(),
            crate::types::PtrType::to(CType::sint()),
        ));
        let _ = u;
        let half = pbit(Perm::full().half(), Bit::B1);
        assert!(pbit_valid(&env, &delta, &half));
        let _ = rat(1, 2);
    }
}
