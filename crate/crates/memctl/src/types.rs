//! C types, typing environments, and the validity judgments.
//!
//! Types come in three mutually recursive sorts: point-to types (what a
//! pointer may refer to), base types, and full types. Struct and union types
//! are just tags; a [`TypeEnv`] assigns field lists to tags and signatures to
//! function names. Validity of an environment requires every recursive use
//! of a compound type to be guarded by a pointer, which keeps all sizes
//! finite.

use std::collections::BTreeMap;
use std::fmt;

/// Struct/union tag.
pub type Tag = String;

/// Function name.
pub type FuncName = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signedness {
    Signed,
    Unsigned,
}

/// Integer ranks, totally ordered `Char ⊂ Short ⊂ Int ⊂ Long ⊂ LongLong`.
/// The rank of `size_t`/`ptrdiff_t` is a designated element of this set,
/// chosen by the implementation environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rank {
    Char,
    Short,
    Int,
    Long,
    LongLong,
}

impl Rank {
    pub const ALL: [Rank; 5] = [Rank::Char, Rank::Short, Rank::Int, Rank::Long, Rank::LongLong];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntType {
    pub sign: Signedness,
    pub rank: Rank,
}

impl IntType {
    pub const fn new(sign: Signedness, rank: Rank) -> Self {
        IntType { sign, rank }
    }
    pub const fn signed(rank: Rank) -> Self {
        IntType::new(Signedness::Signed, rank)
    }
    pub const fn unsigned(rank: Rank) -> Self {
        IntType::new(Signedness::Unsigned, rank)
    }
    /// `unsigned char`: the type of object-representation bytes.
    pub const UCHAR: IntType = IntType::unsigned(Rank::Char);
    pub const SCHAR: IntType = IntType::signed(Rank::Char);
    pub const SINT: IntType = IntType::signed(Rank::Int);
}

/// Point-to types: a concrete referenced type, the anonymous `void*`
/// pointee, or a function signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PtrType {
    Type(Box<CType>),
    Any,
    Fun(Vec<CType>, Box<CType>),
}

impl PtrType {
    pub fn to(t: CType) -> Self {
        PtrType::Type(Box::new(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int(IntType),
    Ptr(PtrType),
    Void,
}

/// Full types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CType {
    Base(BaseType),
    Array(Box<CType>, usize),
    Struct(Tag),
    Union(Tag),
}

impl CType {
    pub fn int(it: IntType) -> Self {
        CType::Base(BaseType::Int(it))
    }
    pub fn sint() -> Self {
        CType::int(IntType::SINT)
    }
    pub fn uchar() -> Self {
        CType::int(IntType::UCHAR)
    }
    pub fn ptr(pt: PtrType) -> Self {
        CType::Base(BaseType::Ptr(pt))
    }
    pub fn ptr_to(t: CType) -> Self {
        CType::ptr(PtrType::to(t))
    }
    pub fn array(t: CType, n: usize) -> Self {
        CType::Array(Box::new(t), n)
    }
    pub fn void() -> Self {
        CType::Base(BaseType::Void)
    }

    pub fn is_uchar(&self) -> bool {
        *self == CType::uchar()
    }

    pub fn is_union(&self) -> bool {
        matches!(self, CType::Union(_))
    }

    /// Whether the type contains a union anywhere below a non-pointer
    /// position. Used by the flat read oracle, which declines union
    /// reinterpretation.
    pub fn union_free(&self, env: &TypeEnv) -> bool {
        match self {
            CType::Base(_) => true,
            CType::Array(t, _) => t.union_free(env),
            CType::Struct(tag) => env
                .compound(tag)
                .map(|fields| fields.iter().all(|f| f.union_free(env)))
                .unwrap_or(false),
            CType::Union(_) => false,
        }
    }
}

impl fmt::Display for Signedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signedness::Signed => write!(f, "signed"),
            Signedness::Unsigned => write!(f, "unsigned"),
        }
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rank = match self.rank {
            Rank::Char => "char",
            Rank::Short => "short",
            Rank::Int => "int",
            Rank::Long => "long",
            Rank::LongLong => "longlong",
        };
        match self.sign {
            Signedness::Signed if self.rank == Rank::Char => write!(f, "signed char"),
            Signedness::Signed => write!(f, "{rank}"),
            Signedness::Unsigned => write!(f, "unsigned {rank}"),
        }
    }
}

impl fmt::Display for PtrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtrType::Type(t) => write!(f, "{t}"),
            PtrType::Any => write!(f, "any"),
            PtrType::Fun(args, ret) => {
                write!(f, "fn(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ") -> {ret}")
            }
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseType::Int(it) => write!(f, "{it}"),
            BaseType::Ptr(pt) => write!(f, "{pt}*"),
            BaseType::Void => write!(f, "void"),
        }
    }
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CType::Base(b) => write!(f, "{b}"),
            CType::Array(t, n) => write!(f, "{t}[{n}]"),
            CType::Struct(tag) => write!(f, "struct {tag}"),
            CType::Union(tag) => write!(f, "union {tag}"),
        }
    }
}

/// Assigns field lists to struct/union tags and signatures to functions.
/// Struct and union tags share one name space, so the same tag cannot be
/// declared as both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    compounds: BTreeMap<Tag, Vec<CType>>,
    functions: BTreeMap<FuncName, (Vec<CType>, CType)>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    pub fn declare_compound(&mut self, tag: impl Into<Tag>, fields: Vec<CType>) {
        self.compounds.insert(tag.into(), fields);
    }

    pub fn declare_function(&mut self, name: impl Into<FuncName>, args: Vec<CType>, ret: CType) {
        self.functions.insert(name.into(), (args, ret));
    }

    pub fn compound(&self, tag: &str) -> Option<&Vec<CType>> {
        self.compounds.get(tag)
    }

    pub fn function(&self, name: &str) -> Option<&(Vec<CType>, CType)> {
        self.functions.get(name)
    }

    pub fn compound_tags(&self) -> impl Iterator<Item = &Tag> {
        self.compounds.keys()
    }
}

/// The sort at which a type is judged valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeSort {
    /// Types a pointer may point to; incomplete compounds are allowed.
    Ptr,
    Base,
    Full,
}

/// Validity of point-to types. Struct and union pointees need not be
/// complete, which is what permits recursive types guarded by pointers.
pub fn ptr_type_valid(env: &TypeEnv, pt: &PtrType) -> bool {
    match pt {
        PtrType::Any => true,
        PtrType::Fun(args, ret) => {
            args.iter().all(|t| pointee_valid(env, t)) && pointee_valid(env, ret)
        }
        PtrType::Type(t) => pointee_valid(env, t),
    }
}

fn pointee_valid(env: &TypeEnv, t: &CType) -> bool {
    match t {
        CType::Base(b) => base_type_valid(env, b),
        CType::Array(t, n) => *n != 0 && type_valid(env, t),
        CType::Struct(_) | CType::Union(_) => true,
    }
}

pub fn base_type_valid(env: &TypeEnv, bt: &BaseType) -> bool {
    match bt {
        BaseType::Int(_) | BaseType::Void => true,
        BaseType::Ptr(pt) => ptr_type_valid(env, pt),
    }
}

/// Validity of full types: arrays are nonempty and compound tags must be
/// declared.
pub fn type_valid(env: &TypeEnv, t: &CType) -> bool {
    match t {
        CType::Base(b) => base_type_valid(env, b),
        CType::Array(t, n) => *n != 0 && type_valid(env, t),
        CType::Struct(tag) | CType::Union(tag) => env.compound(tag).is_some(),
    }
}

pub fn type_valid_sorted(env: &TypeEnv, sort: TypeSort, t: &CType) -> bool {
    match sort {
        TypeSort::Ptr => pointee_valid(env, t),
        TypeSort::Base => match t {
            CType::Base(b) => base_type_valid(env, b),
            _ => false,
        },
        TypeSort::Full => type_valid(env, t),
    }
}

/// Well-formedness of a whole environment: there must be an order in which
/// every declaration can be introduced with its fields valid against the
/// previously introduced ones. Equivalent to the inductive judgment, and
/// rules out unguarded recursion such as `struct S { struct S x; }`.
pub fn env_valid(env: &TypeEnv) -> bool {
    let mut known = TypeEnv::new();
    let mut remaining: Vec<&Tag> = env.compounds.keys().collect();
    loop {
        let before = remaining.len();
        remaining.retain(|tag| {
            let fields = &env.compounds[*tag];
            let ok = !fields.is_empty() && fields.iter().all(|f| type_valid(&known, f));
            if ok {
                known.declare_compound((*tag).clone(), fields.clone());
            }
            !ok
        });
        if remaining.is_empty() {
            break;
        }
        if remaining.len() == before {
            return false;
        }
    }
    env.functions.values().all(|(args, ret)| {
        args.iter().all(|t| pointee_valid(&known, t)) && pointee_valid(&known, ret)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_guarded_recursion_is_legal() {
        // struct S3 { struct S3 *p; }
        let mut env = TypeEnv::new();
        env.declare_compound("S3", vec![CType::ptr_to(CType::Struct("S3".into()))]);
        assert!(env_valid(&env));
    }

    #[test]
    fn direct_recursion_is_illegal() {
        // struct S2 { struct S2 x; }
        let mut env = TypeEnv::new();
        env.declare_compound("S2", vec![CType::Struct("S2".into())]);
        assert!(!env_valid(&env));
    }

    #[test]
    fn recursion_through_function_pointer_is_legal() {
        // union U { int i; union U (*f)(union U); }
        let mut env = TypeEnv::new();
        let u = CType::Union("U".into());
        env.declare_compound(
            "U",
            vec![
                CType::sint(),
                CType::ptr(PtrType::Fun(vec![u.clone()], Box::new(u.clone()))),
            ],
        );
        assert!(env_valid(&env));
    }

    #[test]
    fn type_valid_does_not_imply_env_valid() {
        let mut env = TypeEnv::new();
        env.declare_compound("S2", vec![CType::Struct("S2".into())]);
        // The tag is declared, so the type itself is valid...
        assert!(type_valid(&env, &CType::Struct("S2".into())));
        // ...while the environment is not.
        assert!(!env_valid(&env));
    }

    #[test]
    fn empty_compound_is_illegal() {
        let mut env = TypeEnv::new();
        env.declare_compound("E", vec![]);
        assert!(!env_valid(&env));
    }

    #[test]
    fn zero_length_array_is_invalid() {
        let env = TypeEnv::new();
        assert!(!type_valid(&env, &CType::array(CType::sint(), 0)));
        assert!(type_valid(&env, &CType::array(CType::sint(), 4)));
    }

    #[test]
    fn incomplete_pointee_ok_at_ptr_sort_only() {
        let env = TypeEnv::new();
        let s = CType::Struct("Undeclared".into());
        assert!(type_valid_sorted(&env, TypeSort::Ptr, &s));
        assert!(!type_valid_sorted(&env, TypeSort::Full, &s));
    }
}
