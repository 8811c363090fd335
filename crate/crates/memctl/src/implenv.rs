//! Implementation environments: integer widths, endianness, and the layout
//! of structs and unions.
//!
//! Everything implementation-defined lives here. The default environment is
//! a 32-bit-flavored fixture: 8-bit bytes, signed plain `char`, rank sizes
//! 1/2/4/4/8, 4-byte pointers, little-endian, alignment equal to base-type
//! size, and greedy C struct layout (each field at the next multiple of its
//! alignment, total size rounded up to the maximum alignment).

use crate::types::{type_valid, BaseType, CType, PtrType, Rank, Signedness, TypeEnv};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

/// The raw, loadable description of an implementation environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplConfig {
    pub char_bits: usize,
    pub char_signedness: Signedness,
    pub rank_sizes: BTreeMap<Rank, usize>,
    pub size_rank: Rank,
    pub ptr_size: usize,
    pub endianness: Endianness,
}

impl ImplConfig {
    pub fn test_default() -> Self {
        let mut rank_sizes = BTreeMap::new();
        rank_sizes.insert(Rank::Char, 1);
        rank_sizes.insert(Rank::Short, 2);
        rank_sizes.insert(Rank::Int, 4);
        rank_sizes.insert(Rank::Long, 4);
        rank_sizes.insert(Rank::LongLong, 8);
        ImplConfig {
            char_bits: 8,
            char_signedness: Signedness::Signed,
            rank_sizes,
            size_rank: Rank::Int,
            ptr_size: 4,
            endianness: Endianness::Little,
        }
    }

    /// Parses `key = value` lines. Unknown keys and malformed values are
    /// errors; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = ImplConfig::test_default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {}", lineno + 1, e))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let usize_of = |v: &str| v.parse::<usize>().map_err(|_| format!("bad number `{v}`"));
        match key {
            "char_bits" => self.char_bits = usize_of(value)?,
            "ptr_size" => self.ptr_size = usize_of(value)?,
            "rank_char" => {
                self.rank_sizes.insert(Rank::Char, usize_of(value)?);
            }
            "rank_short" => {
                self.rank_sizes.insert(Rank::Short, usize_of(value)?);
            }
            "rank_int" => {
                self.rank_sizes.insert(Rank::Int, usize_of(value)?);
            }
            "rank_long" => {
                self.rank_sizes.insert(Rank::Long, usize_of(value)?);
            }
            "rank_longlong" => {
                self.rank_sizes.insert(Rank::LongLong, usize_of(value)?);
            }
            "size_rank" => {
                self.size_rank = match value {
                    "char" => Rank::Char,
                    "short" => Rank::Short,
                    "int" => Rank::Int,
                    "long" => Rank::Long,
                    "longlong" => Rank::LongLong,
                    other => return Err(format!("unknown rank `{other}`")),
                }
            }
            "char_signedness" => {
                self.char_signedness = match value {
                    "signed" => Signedness::Signed,
                    "unsigned" => Signedness::Unsigned,
                    other => return Err(format!("unknown signedness `{other}`")),
                }
            }
            "endianness" => {
                self.endianness = match value {
                    "little" => Endianness::Little,
                    "big" => Endianness::Big,
                    other => return Err(format!("unknown endianness `{other}`")),
                }
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

/// A checked implementation environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplEnv {
    cfg: ImplConfig,
}

/// A type environment paired with the implementation environment; almost
/// every memory-model operation needs both.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub types: TypeEnv,
    pub ienv: ImplEnv,
}

impl Default for ImplEnv {
    fn default() -> Self {
        ImplEnv::test_default()
    }
}

impl Env {
    pub fn new(types: TypeEnv, ienv: ImplEnv) -> Self {
        Env { types, ienv }
    }
    pub fn with_types(types: TypeEnv) -> Self {
        Env { types, ienv: ImplEnv::test_default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayoutError {
    UnknownTag(String),
    InvalidConfig(String),
}

impl fmt::Display for LayoutError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutError::UnknownTag(t) => write!(f, "unknown struct/union tag `{t}`"),
            LayoutError::InvalidConfig(m) => write!(f, "invalid implementation config: {m}"),
        }
    }
}

fn align_up(n: usize, align: usize) -> usize {
    debug_assert!(align > 0);
    n.div_ceil(align) * align
}

impl ImplEnv {
    pub fn test_default() -> Self {
        ImplEnv { cfg: ImplConfig::test_default() }
    }

    pub fn from_config(cfg: ImplConfig) -> Result<Self, LayoutError> {
        if cfg.char_bits < 8 {
            return Err(LayoutError::InvalidConfig("char_bits must be at least 8".into()));
        }
        if cfg.rank_sizes.get(&Rank::Char) != Some(&1) {
            return Err(LayoutError::InvalidConfig("rank_char must be 1".into()));
        }
        let mut prev = 0;
        for r in Rank::ALL {
            let sz = *cfg
                .rank_sizes
                .get(&r)
                .ok_or_else(|| LayoutError::InvalidConfig(format!("missing size for {r:?}")))?;
            if sz == 0 {
                return Err(LayoutError::InvalidConfig(format!("{r:?} has size 0")));
            }
            if sz < prev {
                return Err(LayoutError::InvalidConfig("rank sizes must be monotone".into()));
            }
            prev = sz;
        }
        if cfg.ptr_size == 0 {
            return Err(LayoutError::InvalidConfig("ptr_size must be nonzero".into()));
        }
        Ok(ImplEnv { cfg })
    }

    pub fn config(&self) -> &ImplConfig {
        &self.cfg
    }

    pub fn char_bits(&self) -> usize {
        self.cfg.char_bits
    }

    pub fn char_signedness(&self) -> Signedness {
        self.cfg.char_signedness
    }

    pub fn size_rank(&self) -> Rank {
        self.cfg.size_rank
    }

    pub fn rank_size(&self, r: Rank) -> usize {
        self.cfg.rank_sizes[&r]
    }

    /// Bit width of an integer rank.
    pub fn int_bits(&self, r: Rank) -> usize {
        self.rank_size(r) * self.cfg.char_bits
    }

    /// Permutes a little-endian bit list into storage order.
    pub fn endianize(&self, r: Rank, bits: Vec<bool>) -> Vec<bool> {
        match self.cfg.endianness {
            Endianness::Little => bits,
            Endianness::Big => {
                let _ = r;
                bits.chunks(self.cfg.char_bits)
                    .rev()
                    .flat_map(|c| c.iter().copied())
                    .collect()
            }
        }
    }

    /// Inverse of [`ImplEnv::endianize`].
    pub fn deendianize(&self, r: Rank, bits: Vec<bool>) -> Vec<bool> {
        // Byte reversal is an involution, so the two directions coincide.
        self.endianize(r, bits)
    }

    pub fn size_of(&self, env: &TypeEnv, t: &CType) -> Result<usize, LayoutError> {
        match t {
            CType::Base(BaseType::Int(it)) => Ok(self.rank_size(it.rank)),
            CType::Base(BaseType::Ptr(_)) => Ok(self.cfg.ptr_size),
            CType::Base(BaseType::Void) => Ok(1),
            CType::Array(t, n) => Ok(n * self.size_of(env, t)?),
            CType::Struct(tag) => {
                let fields = env
                    .compound(tag)
                    .ok_or_else(|| LayoutError::UnknownTag(tag.clone()))?;
                Ok(self.field_sizes(env, fields)?.iter().sum())
            }
            CType::Union(tag) => {
                let fields = env
                    .compound(tag)
                    .ok_or_else(|| LayoutError::UnknownTag(tag.clone()))?;
                let mut max = 0;
                for f in fields {
                    max = max.max(self.size_of(env, f)?);
                }
                Ok(align_up(max, self.align_of(env, t)?))
            }
        }
    }

    pub fn align_of(&self, env: &TypeEnv, t: &CType) -> Result<usize, LayoutError> {
        match t {
            CType::Base(b) => self.size_of(env, &CType::Base(b.clone())),
            CType::Array(t, _) => self.align_of(env, t),
            CType::Struct(tag) | CType::Union(tag) => {
                let fields = env
                    .compound(tag)
                    .ok_or_else(|| LayoutError::UnknownTag(tag.clone()))?;
                let mut max = 1;
                for f in fields {
                    max = max.max(self.align_of(env, f)?);
                }
                Ok(max)
            }
        }
    }

    /// Slot sizes of consecutive struct fields: each field's size plus the
    /// padding that follows it, with the last slot rounded so the struct size
    /// is a multiple of the struct alignment.
    pub fn field_sizes(&self, env: &TypeEnv, fields: &[CType]) -> Result<Vec<usize>, LayoutError> {
        if fields.is_empty() {
            return Ok(Vec::new());
        }
        let mut offsets = Vec::with_capacity(fields.len());
        let mut at = 0;
        let mut max_align = 1;
        for f in fields {
            let align = self.align_of(env, f)?;
            max_align = max_align.max(align);
            at = align_up(at, align);
            offsets.push(at);
            at += self.size_of(env, f)?;
        }
        let total = align_up(at, max_align);
        let mut out = Vec::with_capacity(fields.len());
        for i in 0..fields.len() {
            let end = if i + 1 < fields.len() { offsets[i + 1] } else { total };
            out.push(end - offsets[i]);
        }
        Ok(out)
    }

    /// Byte offset of field `i` in a struct with the given fields.
    pub fn offset_of(&self, env: &TypeEnv, fields: &[CType], i: usize) -> Result<usize, LayoutError> {
        Ok(self.field_sizes(env, fields)?[..i].iter().sum())
    }

    pub fn bit_size_of(&self, env: &TypeEnv, t: &CType) -> Result<usize, LayoutError> {
        Ok(self.size_of(env, t)? * self.cfg.char_bits)
    }

    pub fn bit_offset_of(
        &self,
        env: &TypeEnv,
        fields: &[CType],
        i: usize,
    ) -> Result<usize, LayoutError> {
        Ok(self.offset_of(env, fields, i)? * self.cfg.char_bits)
    }

    pub fn field_bit_sizes(
        &self,
        env: &TypeEnv,
        fields: &[CType],
    ) -> Result<Vec<usize>, LayoutError> {
        Ok(self
            .field_sizes(env, fields)?
            .iter()
            .map(|z| z * self.cfg.char_bits)
            .collect())
    }

    /// Size of what a pointer of the given point-to type addresses; used for
    /// the byte-offset divisibility requirement on addresses. `void*` and
    /// function pointers address single bytes.
    pub fn size_of_ptr_type(&self, env: &TypeEnv, pt: &PtrType) -> Result<usize, LayoutError> {
        match pt {
            PtrType::Type(t) => self.size_of(env, t),
            PtrType::Any | PtrType::Fun(..) => Ok(1),
        }
    }

    /// Checks every layout constraint against all declared compounds and a
    /// panel of base types. Used as a self-test of a loaded configuration.
    pub fn validate(&self, env: &TypeEnv) -> Result<(), String> {
        let mut base_panel: Vec<CType> = Vec::new();
        for r in Rank::ALL {
            base_panel.push(CType::int(crate::types::IntType::signed(r)));
            base_panel.push(CType::int(crate::types::IntType::unsigned(r)));
        }
        base_panel.push(CType::ptr_to(CType::sint()));
        base_panel.push(CType::ptr(PtrType::Any));
        base_panel.push(CType::void());

        let fail = |m: String| Err(m);
        for t in &base_panel {
            let sz = self.size_of(env, t).map_err(|e| e.to_string())?;
            if sz == 0 {
                return fail(format!("size_of({t}) = 0"));
            }
            if let CType::Base(BaseType::Int(it)) = t {
                if sz != self.rank_size(it.rank) {
                    return fail(format!("size_of({t}) != rank_size"));
                }
            }
            let al = self.align_of(env, t).map_err(|e| e.to_string())?;
            if sz % al != 0 {
                return fail(format!("align_of({t}) does not divide size_of"));
            }
        }
        // Arrays multiply.
        for t in &base_panel {
            let sz = self.size_of(env, t).map_err(|e| e.to_string())?;
            let arr = CType::array(t.clone(), 3);
            if self.size_of(env, &arr).map_err(|e| e.to_string())? != 3 * sz {
                return fail(format!("size_of({t}[3]) != 3 * size_of({t})"));
            }
            let al = self.align_of(env, t).map_err(|e| e.to_string())?;
            if self.align_of(env, &arr).map_err(|e| e.to_string())? % al != 0 {
                return fail(format!("align_of({t}) does not divide align_of({t}[3])"));
            }
        }
        for tag in env.compound_tags() {
            let fields = env.compound(tag).unwrap();
            if !fields.iter().all(|f| type_valid(env, f)) {
                continue; // layout constraints are only about valid types
            }
            let st = CType::Struct(tag.clone());
            let ut = CType::Union(tag.clone());
            let zs = self.field_sizes(env, fields).map_err(|e| e.to_string())?;
            if zs.len() != fields.len() {
                return fail(format!("field_sizes length mismatch at {tag}"));
            }
            let ssz = self.size_of(env, &st).map_err(|e| e.to_string())?;
            if ssz != zs.iter().sum::<usize>() {
                return fail(format!("struct {tag} size is not the sum of field sizes"));
            }
            let usz = self.size_of(env, &ut).map_err(|e| e.to_string())?;
            let sal = self.align_of(env, &st).map_err(|e| e.to_string())?;
            let ual = self.align_of(env, &ut).map_err(|e| e.to_string())?;
            if ssz % sal != 0 || usz % ual != 0 {
                return fail(format!("alignment of {tag} does not divide its size"));
            }
            for (i, f) in fields.iter().enumerate() {
                let fsz = self.size_of(env, f).map_err(|e| e.to_string())?;
                let fal = self.align_of(env, f).map_err(|e| e.to_string())?;
                if fsz > zs[i] {
                    return fail(format!("field {i} of {tag} does not fit its slot"));
                }
                if fsz > usz {
                    return fail(format!("field {i} of union {tag} exceeds the union size"));
                }
                if sal % fal != 0 || ual % fal != 0 {
                    return fail(format!("field {i} alignment does not divide {tag}'s"));
                }
                let off = self.offset_of(env, fields, i).map_err(|e| e.to_string())?;
                if off % fal != 0 {
                    return fail(format!("field {i} of {tag} is misaligned"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::IntType;

    fn short_ptr_struct() -> TypeEnv {
        // struct S { short x; short *r; }
        let mut env = TypeEnv::new();
        env.declare_compound(
            "S",
            vec![
                CType::int(IntType::signed(Rank::Short)),
                CType::ptr_to(CType::int(IntType::signed(Rank::Short))),
            ],
        );
        env
    }

    #[test]
    fn default_sizes() {
        let ie = ImplEnv::test_default();
        let env = TypeEnv::new();
        assert_eq!(ie.size_of(&env, &CType::sint()).unwrap(), 4);
        assert_eq!(ie.size_of(&env, &CType::array(CType::sint(), 4)).unwrap(), 16);
        assert_eq!(ie.size_of(&env, &CType::ptr_to(CType::sint())).unwrap(), 4);
    }

    #[test]
    fn struct_with_padding_hole() {
        let ie = ImplEnv::test_default();
        let env = short_ptr_struct();
        let fields = env.compound("S").unwrap().clone();
        // Two bytes of padding between the short and the 4-aligned pointer.
        assert_eq!(ie.field_sizes(&env, &fields).unwrap(), vec![4, 4]);
        assert_eq!(ie.offset_of(&env, &fields, 1).unwrap(), 4);
        assert_eq!(ie.size_of(&env, &CType::Struct("S".into())).unwrap(), 8);
    }

    #[test]
    fn union_size_is_max_rounded() {
        let ie = ImplEnv::test_default();
        let mut env = TypeEnv::new();
        env.declare_compound(
            "U",
            vec![CType::int(IntType::signed(Rank::Char)), CType::sint()],
        );
        assert_eq!(ie.size_of(&env, &CType::Union("U".into())).unwrap(), 4);
        assert_eq!(ie.align_of(&env, &CType::Union("U".into())).unwrap(), 4);
    }

    #[test]
    fn default_env_validates() {
        let ie = ImplEnv::test_default();
        let env = short_ptr_struct();
        ie.validate(&env).unwrap();
    }

    #[test]
    fn config_roundtrip() {
        let cfg = ImplConfig::parse(
            "char_bits = 8\nendianness = big\nptr_size = 8\nrank_long = 8 # lp64\n",
        )
        .unwrap();
        assert_eq!(cfg.endianness, Endianness::Big);
        assert_eq!(cfg.ptr_size, 8);
        let ie = ImplEnv::from_config(cfg).unwrap();
        ie.validate(&TypeEnv::new()).unwrap();
    }

    #[test]
    fn bad_config_rejected() {
        let mut cfg = ImplConfig::test_default();
        cfg.rank_sizes.insert(Rank::Short, 8); // not monotone with int = 4
        assert!(ImplEnv::from_config(cfg).is_err());
    }

    #[test]
    fn unknown_tag_is_an_error() {
        let ie = ImplEnv::test_default();
        let env = TypeEnv::new();
        assert!(matches!(
            ie.size_of(&env, &CType::Struct("nope".into())),
            Err(LayoutError::UnknownTag(_))
        ));
    }
}
