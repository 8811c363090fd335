//! The memory-operation script language and its interpreter.
//!
//! Scripts declare types, allocate objects, and drive the memory operations,
//! asserting which accesses are defined and which are undefined (and why).
//! A `read` models a C access: it forces the effective types along the path
//! and then looks the value up; `peek` is the pure lookup. A `write` stores
//! and locks the target until the next sequence point (`seq;`), which is how
//! the sequence-point restriction surfaces in scripts.
//!
//! ```text
//! union U { int x; short y; };
//! let u = alloc union U;
//! write u<U:x> = 3;
//! seq;
//! assert_value u<U:y> == 3;        // direct type-punning is defined
//! let p = alloc short*; write p = &u<U:y>; seq;
//! assert_undefined(effective-types) read *p;  // via a stored pointer it is not
//! ```
//!
//! Execution is deterministic: the same script and implementation
//! configuration always produce the same report and dumps.

use crate::implenv::{Env, ImplConfig, ImplEnv};
use crate::intcode::int_typed;
use crate::mem::{
    dump_string, lock_singleton, mem_alloc, mem_env_of, mem_force, mem_free, mem_freeable,
    mem_insert, mem_lock, mem_locks, mem_lookup, mem_unlock, mem_writable_check, Mem, MemEnv,
    ObjId, UbReason,
};
use crate::place::{addr_typed, ptr_alive, Addr, Frozenness, Ptr, RefSeg};
use crate::types::{env_valid, BaseType, CType, IntType, PtrType, Rank, Signedness, TypeEnv};
use crate::value::{val_json, val_new, val_typed, BaseVal, Val};
use std::collections::BTreeMap;
use std::fmt;

// ---------------------------------------------------------------------------
// Surface syntax
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i128),
    Str(String),
    Punct(&'static str),
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

const PUNCTS: [&str; 18] = [
    "->", "==", "{", "}", "(", ")", "[", "]", "<", ">", ";", ",", "=", "*", "&", ".", ":", "-",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, ScriptError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        let bytes: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '"' {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != '"' {
                    j += 1;
                }
                if j == bytes.len() {
                    return Err(ScriptError {
                        line: lineno + 1,
                        col,
                        message: "unterminated string".into(),
                    });
                }
                out.push((
                    Tok::Str(bytes[start..j].iter().collect()),
                    lineno + 1,
                    col,
                ));
                i = j + 1;
                continue;
            }
            if c.is_ascii_digit() {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = bytes[i..j].iter().collect();
                out.push((Tok::Int(s.parse().unwrap()), lineno + 1, col));
                i = j;
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_alphanumeric() || bytes[j] == '_' || bytes[j] == '-')
                {
                    j += 1;
                }
                // Identifiers may contain dashes (the UB reason names), but
                // a trailing dash belongs to the next token.
                while j > i && bytes[j - 1] == '-' {
                    j -= 1;
                }
                out.push((
                    Tok::Ident(bytes[i..j].iter().collect()),
                    lineno + 1,
                    col,
                ));
                i = j;
                continue;
            }
            let two: String = bytes[i..(i + 2).min(bytes.len())].iter().collect();
            if let Some(p) = PUNCTS.iter().find(|p| p.len() == 2 && **p == two) {
                out.push((Tok::Punct(p), lineno + 1, col));
                i += 2;
                continue;
            }
            let one = c.to_string();
            if let Some(p) = PUNCTS.iter().find(|p| **p == one) {
                out.push((Tok::Punct(p), lineno + 1, col));
                i += 1;
                continue;
            }
            return Err(ScriptError {
                line: lineno + 1,
                col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

/// Source types before name resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SrcType {
    Named(String),
    Struct(String),
    Union(String),
    Ptr(Box<SrcType>),
    Array(Box<SrcType>, usize),
}

/// A path expression: optional dereferences around a root object with
/// selector suffixes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub derefs: usize,
    pub root: String,
    pub segs: Vec<PathSeg>,
    /// A final `.byte[i]` suffix viewing the subobject byte-wise.
    pub byte: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSeg {
    Field(String),
    Index(usize),
    Variant(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SrcVal {
    Int(i128),
    Indet,
    Null,
    AddrOf(Path),
    List(Vec<SrcVal>),
}

/// One memory operation that can stand alone or under an assertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Read(Path),
    Peek(Path),
    Force(Path),
    Write(Path, SrcVal),
    /// `copy dst = src;`: read `src` (with its access side effect), then
    /// store the value at `dst`.
    Copy(Path, Path),
    Lock(Path),
    Unlock(Path),
    Free(String),
    Kill(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    DeclCompound { union: bool, tag: String, fields: Vec<(SrcType, String)> },
    DeclFn { name: String, args: Vec<SrcType>, ret: Option<SrcType> },
    ImplSet { key: String, value: String },
    Let { name: String, malloc: bool, ty: SrcType, init: Option<SrcVal> },
    Op(Op),
    Seq,
    AssertDefined(Op),
    AssertUndefined(UbReason, Op),
    AssertValue(Path, SrcVal),
    AssertIndet(Path),
    Checkpoint(String),
    AssertEqMemory(String, Option<String>),
    Dump(Option<String>),
}

/// A parsed script: statements with their source lines.
#[derive(Debug, Clone, Default)]
pub struct Script {
    pub stmts: Vec<(usize, Stmt)>,
}

struct Parser {
    lx: Lexer,
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ScriptError> {
        let (line, col) = self.pos();
        Err(ScriptError { line, col, message: message.into() })
    }

    fn pos(&self) -> (usize, usize) {
        match self.lx.toks.get(self.lx.pos.min(self.lx.toks.len().saturating_sub(1))) {
            Some((_, l, c)) => (*l, *c),
            None => (0, 0),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.lx.toks.get(self.lx.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.lx.toks.get(self.lx.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.lx.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek() == Some(&Tok::Punct(PUNCTS.iter().find(|q| **q == p).copied().unwrap_or("")))
        {
            self.lx.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ScriptError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn eat_ident(&mut self, name: &str) -> bool {
        if self.peek() == Some(&Tok::Ident(name.to_string())) {
            self.lx.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> Result<String, ScriptError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.lx.pos = self.lx.pos.saturating_sub(1);
                self.err("expected an identifier")
            }
        }
    }

    fn expect_int(&mut self) -> Result<i128, ScriptError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(n),
            _ => {
                self.lx.pos = self.lx.pos.saturating_sub(1);
                self.err("expected a number")
            }
        }
    }

    fn parse_type(&mut self) -> Result<SrcType, ScriptError> {
        let base = match self.next() {
            Some(Tok::Ident(s)) => match s.as_str() {
                "struct" => SrcType::Struct(self.expect_ident()?),
                "union" => SrcType::Union(self.expect_ident()?),
                "signed" | "unsigned" => {
                    let next = self.expect_ident()?;
                    SrcType::Named(format!("{s} {next}"))
                }
                _ => SrcType::Named(s),
            },
            _ => {
                self.lx.pos = self.lx.pos.saturating_sub(1);
                return self.err("expected a type");
            }
        };
        self.parse_type_suffixes(base)
    }

    fn parse_type_suffixes(&mut self, mut t: SrcType) -> Result<SrcType, ScriptError> {
        loop {
            if self.eat_punct("*") {
                t = SrcType::Ptr(Box::new(t));
            } else if self.peek() == Some(&Tok::Punct("[")) {
                self.expect_punct("[")?;
                let n = self.expect_int()?;
                self.expect_punct("]")?;
                t = SrcType::Array(Box::new(t), n as usize);
            } else {
                return Ok(t);
            }
        }
    }

    fn parse_path(&mut self) -> Result<Path, ScriptError> {
        let mut derefs = 0;
        while self.eat_punct("*") {
            derefs += 1;
        }
        let root = self.expect_ident()?;
        let mut segs = Vec::new();
        let mut byte = None;
        loop {
            if self.eat_punct(".") {
                let name = self.expect_ident()?;
                if name == "byte" {
                    self.expect_punct("[")?;
                    byte = Some(self.expect_int()? as usize);
                    self.expect_punct("]")?;
                    break;
                }
                segs.push(PathSeg::Field(name));
            } else if self.peek() == Some(&Tok::Punct("[")) {
                self.expect_punct("[")?;
                let i = self.expect_int()? as usize;
                self.expect_punct("]")?;
                segs.push(PathSeg::Index(i));
            } else if self.peek() == Some(&Tok::Punct("<")) {
                self.expect_punct("<")?;
                let tag = self.expect_ident()?;
                self.expect_punct(":")?;
                let variant = self.expect_ident()?;
                self.expect_punct(">")?;
                segs.push(PathSeg::Variant(tag, variant));
            } else {
                break;
            }
        }
        Ok(Path { derefs, root, segs, byte })
    }

    fn parse_value(&mut self) -> Result<SrcVal, ScriptError> {
        if self.eat_punct("-") {
            let n = self.expect_int()?;
            return Ok(SrcVal::Int(-n));
        }
        if self.eat_punct("&") {
            return Ok(SrcVal::AddrOf(self.parse_path()?));
        }
        if self.peek() == Some(&Tok::Punct("{")) {
            self.expect_punct("{")?;
            let mut items = Vec::new();
            if !self.eat_punct("}") {
                loop {
                    items.push(self.parse_value()?);
                    if self.eat_punct("}") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
            }
            return Ok(SrcVal::List(items));
        }
        match self.next() {
            Some(Tok::Int(n)) => Ok(SrcVal::Int(n)),
            Some(Tok::Ident(s)) if s == "indet" => Ok(SrcVal::Indet),
            Some(Tok::Ident(s)) if s == "null" => Ok(SrcVal::Null),
            _ => {
                self.lx.pos = self.lx.pos.saturating_sub(1);
                self.err("expected a value")
            }
        }
    }

    fn parse_op(&mut self) -> Result<Op, ScriptError> {
        if self.eat_ident("read") {
            let p = self.parse_path()?;
            Ok(Op::Read(p))
        } else if self.eat_ident("peek") {
            Ok(Op::Peek(self.parse_path()?))
        } else if self.eat_ident("force") {
            Ok(Op::Force(self.parse_path()?))
        } else if self.eat_ident("lock") {
            Ok(Op::Lock(self.parse_path()?))
        } else if self.eat_ident("unlock") {
            Ok(Op::Unlock(self.parse_path()?))
        } else if self.eat_ident("free") {
            Ok(Op::Free(self.expect_ident()?))
        } else if self.eat_ident("kill") {
            Ok(Op::Kill(self.expect_ident()?))
        } else if self.eat_ident("write") {
            let p = self.parse_path()?;
            self.expect_punct("=")?;
            let v = self.parse_value()?;
            Ok(Op::Write(p, v))
        } else if self.eat_ident("copy") {
            let dst = self.parse_path()?;
            self.expect_punct("=")?;
            let src = self.parse_path()?;
            Ok(Op::Copy(dst, src))
        } else {
            self.err("expected a memory operation")
        }
    }

    fn parse_stmt(&mut self) -> Result<Stmt, ScriptError> {
        if self.eat_ident("struct") || {
            self.lx.pos = self.lx.pos.saturating_sub(0);
            false
        } {
            return self.parse_compound(false);
        }
        if let Some(Tok::Ident(kw)) = self.peek().cloned() {
            match kw.as_str() {
                "union" => {
                    // Lookahead: `union U {` is a declaration.
                    if matches!(self.lx.toks.get(self.lx.pos + 2), Some((Tok::Punct("{"), _, _))) {
                        self.lx.pos += 1;
                        return self.parse_compound(true);
                    }
                }
                "fn" => {
                    self.lx.pos += 1;
                    let name = self.expect_ident()?;
                    self.expect_punct("(")?;
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.parse_type()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    let ret = if self.eat_punct("->") { Some(self.parse_type()?) } else { None };
                    self.expect_punct(";")?;
                    return Ok(Stmt::DeclFn { name, args, ret });
                }
                "impl" => {
                    self.lx.pos += 1;
                    let key = self.expect_ident()?;
                    self.expect_punct("=")?;
                    let value = match self.next() {
                        Some(Tok::Ident(s)) => s,
                        Some(Tok::Int(n)) => n.to_string(),
                        _ => return self.err("expected a configuration value"),
                    };
                    self.expect_punct(";")?;
                    return Ok(Stmt::ImplSet { key, value });
                }
                "let" => {
                    self.lx.pos += 1;
                    let name = self.expect_ident()?;
                    self.expect_punct("=")?;
                    let malloc = if self.eat_ident("malloc") {
                        true
                    } else if self.eat_ident("alloc") {
                        false
                    } else {
                        return self.err("expected `alloc` or `malloc`");
                    };
                    let ty = self.parse_type()?;
                    let init =
                        if self.eat_punct("=") { Some(self.parse_value()?) } else { None };
                    self.expect_punct(";")?;
                    return Ok(Stmt::Let { name, malloc, ty, init });
                }
                "seq" => {
                    self.lx.pos += 1;
                    self.expect_punct(";")?;
                    return Ok(Stmt::Seq);
                }
                "assert_defined" => {
                    self.lx.pos += 1;
                    let op = self.parse_op()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::AssertDefined(op));
                }
                "assert_undefined" => {
                    self.lx.pos += 1;
                    self.expect_punct("(")?;
                    let reason = self.expect_ident()?;
                    let reason = UbReason::parse(&reason)
                        .ok_or(())
                        .or_else(|_| self.err(format!("unknown reason `{reason}`")))?;
                    self.expect_punct(")")?;
                    let op = self.parse_op()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::AssertUndefined(reason, op));
                }
                "assert_value" => {
                    self.lx.pos += 1;
                    let p = self.parse_path()?;
                    self.expect_punct("==")?;
                    let v = self.parse_value()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::AssertValue(p, v));
                }
                "assert_indet" => {
                    self.lx.pos += 1;
                    let p = self.parse_path()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::AssertIndet(p));
                }
                "checkpoint" => {
                    self.lx.pos += 1;
                    let name = self.expect_ident()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::Checkpoint(name));
                }
                "assert_eq_memory" => {
                    self.lx.pos += 1;
                    let a = self.expect_ident()?;
                    let b = if let Some(Tok::Ident(_)) = self.peek() {
                        Some(self.expect_ident()?)
                    } else {
                        None
                    };
                    self.expect_punct(";")?;
                    return Ok(Stmt::AssertEqMemory(a, b));
                }
                "dump" => {
                    self.lx.pos += 1;
                    let target = match self.peek() {
                        Some(Tok::Str(s)) => {
                            let s = s.clone();
                            self.lx.pos += 1;
                            Some(s)
                        }
                        _ => None,
                    };
                    self.expect_punct(";")?;
                    return Ok(Stmt::Dump(target));
                }
                _ => {}
            }
        }
        let op = self.parse_op()?;
        self.expect_punct(";")?;
        Ok(Stmt::Op(op))
    }

    fn parse_compound(&mut self, union: bool) -> Result<Stmt, ScriptError> {
        let tag = self.expect_ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.eat_punct("}") {
            let ty = self.parse_type()?;
            let name = self.expect_ident()?;
            // C-style array suffix on the field name.
            let ty = self.parse_field_array_suffix(ty)?;
            self.expect_punct(";")?;
            fields.push((ty, name));
        }
        let _ = self.eat_punct(";");
        Ok(Stmt::DeclCompound { union, tag, fields })
    }

    fn parse_field_array_suffix(&mut self, mut t: SrcType) -> Result<SrcType, ScriptError> {
        while self.peek() == Some(&Tok::Punct("[")) {
            self.expect_punct("[")?;
            let n = self.expect_int()?;
            self.expect_punct("]")?;
            t = SrcType::Array(Box::new(t), n as usize);
        }
        Ok(t)
    }
}

/// Parses a script, reporting the first syntax error with its position.
pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let toks = lex(text)?;
    let mut p = Parser { lx: Lexer { toks, pos: 0 } };
    let mut script = Script::default();
    while p.peek().is_some() {
        let (line, _) = p.pos();
        // `struct` at statement level is always a declaration.
        let stmt = if p.eat_ident("struct") {
            p.parse_compound(false)?
        } else {
            p.parse_stmt()?
        };
        script.stmts.push((line, stmt));
    }
    Ok(script)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Outcome of one executed statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok(String),
    Undefined(UbReason),
    AssertPassed(String),
    AssertFailed(String),
    Error(String),
}

/// Deterministic execution report: one outcome per statement, the dumps
/// requested, and the final memory digest.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub lines: Vec<String>,
    pub dumps: Vec<(String, String)>,
    pub failures: usize,
    pub final_dump: String,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out.push_str(if self.passed() { "script: ok\n" } else { "script: FAILED\n" });
        out
    }
}

struct Runner {
    env: Env,
    cfg: ImplConfig,
    m: Mem,
    names: BTreeMap<String, ObjId>,
    field_names: BTreeMap<String, Vec<String>>,
    /// Whether a declared tag is a union (false: struct); lets a bare tag
    /// stand for its compound type in script type positions.
    tag_is_union: BTreeMap<String, bool>,
    next_id: u64,
    checkpoints: BTreeMap<String, String>,
    report: RunReport,
}

type OpResult = Result<String, UbReason>;

impl Runner {
    fn new(cfg: ImplConfig) -> Result<Self, String> {
        let ienv = ImplEnv::from_config(cfg.clone()).map_err(|e| e.to_string())?;
        Ok(Runner {
            env: Env::new(TypeEnv::new(), ienv),
            cfg,
            m: Mem::new(),
            names: BTreeMap::new(),
            field_names: BTreeMap::new(),
            tag_is_union: BTreeMap::new(),
            next_id: 0,
            checkpoints: BTreeMap::new(),
            report: RunReport::default(),
        })
    }

    fn delta(&self) -> MemEnv {
        mem_env_of(&self.m)
    }

    fn resolve_type(&self, t: &SrcType) -> Result<CType, String> {
        Ok(match t {
            SrcType::Named(name) => match name.as_str() {
                "void" => CType::void(),
                "char" => CType::int(IntType::new(
                    self.env.ienv.char_signedness(),
                    Rank::Char,
                )),
                "signed char" | "schar" => CType::int(IntType::SCHAR),
                "unsigned char" | "uchar" => CType::int(IntType::UCHAR),
                "short" | "signed short" => CType::int(IntType::signed(Rank::Short)),
                "unsigned short" | "ushort" => CType::int(IntType::unsigned(Rank::Short)),
                "int" | "signed int" => CType::int(IntType::signed(Rank::Int)),
                "unsigned int" | "uint" => CType::int(IntType::unsigned(Rank::Int)),
                "long" | "signed long" => CType::int(IntType::signed(Rank::Long)),
                "unsigned long" | "ulong" => CType::int(IntType::unsigned(Rank::Long)),
                "longlong" | "signed longlong" => CType::int(IntType::signed(Rank::LongLong)),
                "unsigned longlong" | "ulonglong" => {
                    CType::int(IntType::unsigned(Rank::LongLong))
                }
                "size_t" => CType::int(IntType::new(
                    Signedness::Unsigned,
                    self.env.ienv.size_rank(),
                )),
                other => match self.tag_is_union.get(other) {
                    Some(true) => CType::Union(other.to_string()),
                    Some(false) => CType::Struct(other.to_string()),
                    None => return Err(format!("unknown type `{other}`")),
                },
            },
            SrcType::Struct(tag) => CType::Struct(tag.clone()),
            SrcType::Union(tag) => CType::Union(tag.clone()),
            SrcType::Ptr(inner) => {
                let inner = self.resolve_type(inner)?;
                if inner == CType::void() {
                    CType::ptr(PtrType::Any)
                } else {
                    CType::ptr_to(inner)
                }
            }
            SrcType::Array(inner, n) => CType::array(self.resolve_type(inner)?, *n),
        })
    }

    /// Elaborates a path to an address under the current memory.
    fn elaborate(&self, p: &Path) -> Result<Addr, Outcome> {
        let o = *self
            .names
            .get(&p.root)
            .ok_or_else(|| Outcome::Error(format!("unknown object `{}`", p.root)))?;
        let delta = self.delta();
        let full = delta
            .type_of(o)
            .cloned()
            .ok_or_else(|| Outcome::Error(format!("object `{}` has no type", p.root)))?;
        let mut segs: Vec<RefSeg> = Vec::new();
        let mut sub = full.clone();
        for seg in &p.segs {
            match seg {
                PathSeg::Index(i) => {
                    let CType::Array(elem, n) = &sub else {
                        return Err(Outcome::Error(format!("`[{i}]` applied to {sub}")));
                    };
                    segs.push(RefSeg::Array(*i, (**elem).clone(), *n));
                    sub = (**elem).clone();
                }
                PathSeg::Field(name) => {
                    let tag = match &sub {
                        CType::Struct(t) | CType::Union(t) => t.clone(),
                        other => {
                            return Err(Outcome::Error(format!("`.{name}` applied to {other}")))
                        }
                    };
                    let idx = self
                        .field_names
                        .get(&tag)
                        .and_then(|ns| ns.iter().position(|n| n == name))
                        .ok_or_else(|| {
                            Outcome::Error(format!("no field `{name}` in `{tag}`"))
                        })?;
                    let ftype = self.env.types.compound(&tag).unwrap()[idx].clone();
                    match &sub {
                        CType::Struct(_) => segs.push(RefSeg::Struct(idx, tag)),
                        _ => segs.push(RefSeg::Union(idx, tag, Frozenness::Unfrozen)),
                    }
                    sub = ftype;
                }
                PathSeg::Variant(tag, name) => {
                    let CType::Union(t) = &sub else {
                        return Err(Outcome::Error(format!("`<{tag}:{name}>` applied to {sub}")));
                    };
                    if t != tag {
                        return Err(Outcome::Error(format!(
                            "variant tag `{tag}` does not match union `{t}`"
                        )));
                    }
                    let idx = self
                        .field_names
                        .get(tag)
                        .and_then(|ns| ns.iter().position(|n| n == name))
                        .ok_or_else(|| {
                            Outcome::Error(format!("no variant `{name}` in `{tag}`"))
                        })?;
                    let ftype = self.env.types.compound(tag).unwrap()[idx].clone();
                    segs.push(RefSeg::Union(idx, tag.clone(), Frozenness::Unfrozen));
                    sub = ftype;
                }
            }
        }
        let mut addr = crate::gen::canonical_addr(&self.env, o, &full, &segs, &sub);
        if let Some(b) = p.byte {
            addr.byte_off += b;
            addr.cast_type = PtrType::to(CType::uchar());
        }
        let mut addr = addr;
        for _ in 0..p.derefs {
            addr = self.deref(&addr)?;
        }
        addr_typed(&self.env, &delta, &addr)
            .map_err(|e| Outcome::Error(format!("address does not type-check: {e}")))?;
        Ok(addr)
    }

    /// Loads a pointer value and uses it as an address.
    fn deref(&self, a: &Addr) -> Result<Addr, Outcome> {
        let v = mem_lookup(&self.env, a, &self.m).map_err(Outcome::Undefined)?;
        match v {
            Val::Base(BaseVal::Ptr(Ptr::Ptr(target))) => {
                if !ptr_alive(&self.delta(), &Ptr::Ptr(target.clone())) {
                    Err(Outcome::Undefined(UbReason::DeadObject))
                } else {
                    Ok(target)
                }
            }
            _ => Err(Outcome::Undefined(UbReason::DeadObject)),
        }
    }

    /// Elaborates a source value against an expected type.
    fn value_at(&self, v: &SrcVal, t: &CType) -> Result<Val, Outcome> {
        match (v, t) {
            (SrcVal::Indet, _) => val_new(&self.env, t)
                .map_err(|e| Outcome::Error(format!("cannot build a value of {t}: {e:?}"))),
            (SrcVal::Int(x), CType::Base(BaseType::Int(it))) => {
                if int_typed(&self.env.ienv, *x, *it) {
                    Ok(Val::int(*it, *x))
                } else {
                    Err(Outcome::Error(format!("{x} does not fit {t}")))
                }
            }
            (SrcVal::Null, CType::Base(BaseType::Ptr(pt))) => {
                Ok(Val::Base(BaseVal::Ptr(Ptr::Null(pt.clone()))))
            }
            (SrcVal::AddrOf(p), CType::Base(BaseType::Ptr(pt))) => {
                let mut a = self.elaborate(p)?;
                if !crate::place::ptr_castable(&a.sub_type, pt) {
                    return Err(Outcome::Error(format!(
                        "&{} has type {}, not castable to {t}",
                        p.root, a.sub_type
                    )));
                }
                a.cast_type = pt.clone();
                addr_typed(&self.env, &self.delta(), &a)
                    .map_err(|e| Outcome::Error(format!("&-address ill-typed: {e}")))?;
                Ok(Val::Base(BaseVal::Ptr(Ptr::Ptr(a))))
            }
            (SrcVal::List(items), CType::Array(elem, n)) => {
                if items.len() != *n {
                    return Err(Outcome::Error(format!(
                        "array initializer has {} elements, type {t} wants {n}",
                        items.len()
                    )));
                }
                let vs = items
                    .iter()
                    .map(|i| self.value_at(i, elem))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Val::Array((**elem).clone(), vs))
            }
            (SrcVal::List(items), CType::Struct(tag)) => {
                let fields = self
                    .env
                    .types
                    .compound(tag)
                    .cloned()
                    .ok_or_else(|| Outcome::Error(format!("unknown tag {tag}")))?;
                if items.len() != fields.len() {
                    return Err(Outcome::Error(format!(
                        "struct initializer has {} fields, `{tag}` wants {}",
                        items.len(),
                        fields.len()
                    )));
                }
                let vs = items
                    .iter()
                    .zip(fields.iter())
                    .map(|(i, f)| self.value_at(i, f))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Val::Struct(tag.clone(), vs))
            }
            _ => Err(Outcome::Error(format!("value {v:?} does not fit type {t}"))),
        }
    }

    /// The type a path reads or writes: one byte for byte views, the
    /// subobject type otherwise.
    fn read_type(a: &Addr) -> CType {
        if a.is_byte() {
            CType::uchar()
        } else {
            a.sub_type.clone()
        }
    }

    /// Elaboration inside an operation: undefined behavior hit while
    /// resolving the path (a dangling dereference, say) is the operation's
    /// own undefinedness, not a script error.
    fn elaborate_op(&self, p: &Path) -> Result<Result<Addr, UbReason>, Outcome> {
        match self.elaborate(p) {
            Ok(a) => Ok(Ok(a)),
            Err(Outcome::Undefined(r)) => Ok(Err(r)),
            Err(o) => Err(o),
        }
    }

    fn exec_op(&mut self, op: &Op) -> Result<OpResult, Outcome> {
        match op {
            Op::Read(p) => {
                let a = match self.elaborate_op(p)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                match mem_lookup(&self.env, &a, &self.m) {
                    Err(r) => Ok(Err(r)),
                    Ok(v) => {
                        self.m = mem_force(&self.env, &a, &self.m)
                            .expect("force defined after successful lookup");
                        Ok(Ok(format!("read {}", val_json(&v))))
                    }
                }
            }
            Op::Peek(p) => {
                let a = match self.elaborate_op(p)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                Ok(mem_lookup(&self.env, &a, &self.m)
                    .map(|v| format!("peek {}", val_json(&v))))
            }
            Op::Force(p) => {
                let a = match self.elaborate_op(p)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                match mem_force(&self.env, &a, &self.m) {
                    Err(r) => Ok(Err(r)),
                    Ok(m) => {
                        self.m = m;
                        Ok(Ok("forced".to_string()))
                    }
                }
            }
            Op::Write(p, sv) => {
                let a = match self.elaborate_op(p)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                let v = self.value_at(sv, &Self::read_type(&a))?;
                if val_typed(&self.env, &self.delta(), &v).is_err() {
                    return Err(Outcome::Error("stored value is ill-typed".into()));
                }
                if let Err(r) = mem_writable_check(&self.env, &a, &self.m) {
                    return Ok(Err(r));
                }
                let m = mem_insert(&self.env, &a, &v, &self.m).map_err(Outcome::Undefined)?;
                self.m = mem_lock(&self.env, &a, &m).expect("lock after store");
                Ok(Ok("stored".to_string()))
            }
            Op::Copy(dst, src) => {
                let sa = match self.elaborate_op(src)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                let da = match self.elaborate_op(dst)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                let v = match mem_lookup(&self.env, &sa, &self.m) {
                    Err(r) => return Ok(Err(r)),
                    Ok(v) => v,
                };
                if Self::read_type(&da) != Self::read_type(&sa) {
                    return Err(Outcome::Error(format!(
                        "copy between different types {} and {}",
                        Self::read_type(&da),
                        Self::read_type(&sa)
                    )));
                }
                self.m = mem_force(&self.env, &sa, &self.m).expect("lookup succeeded");
                if let Err(r) = mem_writable_check(&self.env, &da, &self.m) {
                    return Ok(Err(r));
                }
                let m = mem_insert(&self.env, &da, &v, &self.m).map_err(Outcome::Undefined)?;
                self.m = mem_lock(&self.env, &da, &m).expect("lock after store");
                Ok(Ok("copied".to_string()))
            }
            Op::Lock(p) => {
                let a = match self.elaborate_op(p)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                match mem_lock(&self.env, &a, &self.m) {
                    Err(r) => Ok(Err(r)),
                    Ok(m) => {
                        self.m = m;
                        Ok(Ok("locked".to_string()))
                    }
                }
            }
            Op::Unlock(p) => {
                let a = match self.elaborate_op(p)? {
                    Ok(a) => a,
                    Err(r) => return Ok(Err(r)),
                };
                let single = lock_singleton(&self.env, &a).map_err(Outcome::Undefined)?;
                self.m = mem_unlock(&single, &self.m);
                Ok(Ok("unlocked".to_string()))
            }
            Op::Free(name) => {
                let o = *self
                    .names
                    .get(name)
                    .ok_or_else(|| Outcome::Error(format!("unknown object `{name}`")))?;
                let delta = self.delta();
                if !delta.alive(o) {
                    return Ok(Err(UbReason::DeadObject));
                }
                let Some(t) = delta.type_of(o).cloned() else {
                    return Ok(Err(UbReason::DeadObject));
                };
                let CType::Array(elem, n) = &t else {
                    return Ok(Err(UbReason::NotFreeable));
                };
                let head = Addr::new(
                    o,
                    t.clone(),
                    vec![RefSeg::Array(0, (**elem).clone(), *n)],
                    0,
                    (**elem).clone(),
                    PtrType::to((**elem).clone()),
                );
                if !mem_freeable(&self.env, &head, &self.m) {
                    return Ok(Err(UbReason::NotFreeable));
                }
                self.m = mem_free(o, &self.m).map_err(Outcome::Undefined)?;
                Ok(Ok(format!("freed {name}")))
            }
            Op::Kill(name) => {
                let o = *self
                    .names
                    .get(name)
                    .ok_or_else(|| Outcome::Error(format!("unknown object `{name}`")))?;
                match mem_free(o, &self.m) {
                    Err(r) => Ok(Err(r)),
                    Ok(m) => {
                        self.m = m;
                        Ok(Ok(format!("killed {name}")))
                    }
                }
            }
        }
    }

    fn exec_stmt(&mut self, stmt: &Stmt) -> Outcome {
        match stmt {
            Stmt::DeclCompound { union, tag, fields } => {
                let mut types = Vec::new();
                let mut names = Vec::new();
                for (t, n) in fields {
                    match self.resolve_type(t) {
                        Ok(ct) => {
                            types.push(ct);
                            names.push(n.clone());
                        }
                        Err(e) => return Outcome::Error(e),
                    }
                }
                self.env.types.declare_compound(tag.clone(), types);
                self.field_names.insert(tag.clone(), names);
                self.tag_is_union.insert(tag.clone(), *union);
                if !env_valid(&self.env.types) {
                    return Outcome::Error(format!(
                        "declaring `{tag}` makes the type environment ill-formed"
                    ));
                }
                Outcome::Ok(format!("declared {tag}"))
            }
            Stmt::DeclFn { name, args, ret } => {
                let args = match args.iter().map(|t| self.resolve_type(t)).collect() {
                    Ok(a) => a,
                    Err(e) => return Outcome::Error(e),
                };
                let ret = match ret {
                    None => CType::void(),
                    Some(t) => match self.resolve_type(t) {
                        Ok(t) => t,
                        Err(e) => return Outcome::Error(e),
                    },
                };
                self.env.types.declare_function(name.clone(), args, ret);
                Outcome::Ok(format!("declared fn {name}"))
            }
            Stmt::ImplSet { key, value } => {
                if self.m.ids().next().is_some() {
                    return Outcome::Error(
                        "impl settings must precede the first allocation".into(),
                    );
                }
                if let Err(e) = self.cfg.set(key, value) {
                    return Outcome::Error(e);
                }
                match ImplEnv::from_config(self.cfg.clone()) {
                    Ok(ienv) => {
                        self.env.ienv = ienv;
                        Outcome::Ok(format!("impl {key} = {value}"))
                    }
                    Err(e) => Outcome::Error(e.to_string()),
                }
            }
            Stmt::Let { name, malloc, ty, init } => {
                let base = match self.resolve_type(ty) {
                    Ok(t) => t,
                    Err(e) => return Outcome::Error(e),
                };
                if !crate::types::type_valid(&self.env.types, &base) {
                    return Outcome::Error(format!("type {base} is not valid here"));
                }
                // malloc'ed storage is always an array object.
                let obj_type = if *malloc && !matches!(base, CType::Array(..)) {
                    CType::array(base.clone(), 1)
                } else {
                    base.clone()
                };
                let v = match init {
                    None => match val_new(&self.env, &obj_type) {
                        Ok(v) => v,
                        Err(e) => return Outcome::Error(format!("{e:?}")),
                    },
                    Some(sv) => {
                        let inner = match self.value_at(sv, &base) {
                            Ok(v) => v,
                            Err(o) => return o,
                        };
                        if obj_type != base {
                            Val::Array(base.clone(), vec![inner])
                        } else {
                            inner
                        }
                    }
                };
                let o = ObjId(self.next_id);
                self.next_id += 1;
                match mem_alloc(&self.env, o, &v, *malloc, &self.m) {
                    Ok(m) => {
                        self.m = m;
                        self.names.insert(name.clone(), o);
                        Outcome::Ok(format!("allocated {name}: {obj_type} (object {o})"))
                    }
                    Err(e) => Outcome::Error(format!("{e:?}")),
                }
            }
            Stmt::Seq => {
                self.m = mem_unlock(&mem_locks(&self.env, &self.m), &self.m);
                Outcome::Ok("sequence point".to_string())
            }
            Stmt::Op(op) => match self.exec_op(op) {
                Err(o) => o,
                Ok(Ok(msg)) => Outcome::Ok(msg),
                Ok(Err(r)) => Outcome::Undefined(r),
            },
            Stmt::AssertDefined(op) => match self.exec_op(op) {
                Err(o) => o,
                Ok(Ok(msg)) => Outcome::AssertPassed(format!("defined: {msg}")),
                Ok(Err(r)) => Outcome::AssertFailed(format!("expected defined, got {r}")),
            },
            Stmt::AssertUndefined(want, op) => {
                let saved = self.m.clone();
                match self.exec_op(op) {
                    Err(o) => o,
                    Ok(Err(got)) if got == *want => {
                        self.m = saved;
                        Outcome::AssertPassed(format!("undefined: {got}"))
                    }
                    Ok(Err(got)) => {
                        self.m = saved;
                        Outcome::AssertFailed(format!("expected {want}, got {got}"))
                    }
                    Ok(Ok(msg)) => {
                        self.m = saved;
                        Outcome::AssertFailed(format!("expected {want}, but defined: {msg}"))
                    }
                }
            }
            Stmt::AssertValue(p, sv) => {
                let a = match self.elaborate(p) {
                    Ok(a) => a,
                    Err(o) => return o,
                };
                let want = match self.value_at(sv, &Self::read_type(&a)) {
                    Ok(v) => v.freeze(),
                    Err(o) => return o,
                };
                match mem_lookup(&self.env, &a, &self.m) {
                    Err(r) => Outcome::AssertFailed(format!("value read undefined: {r}")),
                    Ok(got) if got == want => {
                        Outcome::AssertPassed(format!("value {}", val_json(&got)))
                    }
                    Ok(got) => Outcome::AssertFailed(format!(
                        "expected {}, got {}",
                        val_json(&want),
                        val_json(&got)
                    )),
                }
            }
            Stmt::AssertIndet(p) => {
                let a = match self.elaborate(p) {
                    Ok(a) => a,
                    Err(o) => return o,
                };
                let want = match val_new(&self.env, &Self::read_type(&a)) {
                    Ok(v) => v,
                    Err(e) => return Outcome::Error(format!("{e:?}")),
                };
                match mem_lookup(&self.env, &a, &self.m) {
                    Err(r) => Outcome::AssertFailed(format!("value read undefined: {r}")),
                    Ok(got) if got == want => Outcome::AssertPassed("indeterminate".into()),
                    Ok(got) => {
                        Outcome::AssertFailed(format!("expected indet, got {}", val_json(&got)))
                    }
                }
            }
            Stmt::Checkpoint(name) => {
                self.checkpoints.insert(name.clone(), dump_string(&self.m));
                Outcome::Ok(format!("checkpoint {name}"))
            }
            Stmt::AssertEqMemory(a, b) => {
                let lhs = match self.checkpoints.get(a) {
                    Some(s) => s.clone(),
                    None => return Outcome::Error(format!("unknown checkpoint `{a}`")),
                };
                let rhs = match b {
                    None => dump_string(&self.m),
                    Some(b) => match self.checkpoints.get(b) {
                        Some(s) => s.clone(),
                        None => return Outcome::Error(format!("unknown checkpoint `{b}`")),
                    },
                };
                if lhs == rhs {
                    Outcome::AssertPassed("memories equal".into())
                } else {
                    Outcome::AssertFailed("memories differ".into())
                }
            }
            Stmt::Dump(target) => {
                let dump = dump_string(&self.m);
                let name = target.clone().unwrap_or_else(|| "<report>".to_string());
                self.report.dumps.push((name.clone(), dump));
                Outcome::Ok(format!("dumped to {name}"))
            }
        }
    }
}

/// Runs a parsed script under an implementation configuration.
pub fn run_script(script: &Script, cfg: ImplConfig) -> RunReport {
    let mut runner = match Runner::new(cfg) {
        Ok(r) => r,
        Err(e) => {
            return RunReport {
                lines: vec![format!("configuration error: {e}")],
                failures: 1,
                ..Default::default()
            }
        }
    };
    for (line, stmt) in &script.stmts {
        let outcome = runner.exec_stmt(stmt);
        let (status, failed) = match &outcome {
            Outcome::Ok(m) => (format!("ok: {m}"), false),
            // Unasserted undefined behavior fails the script.
            Outcome::Undefined(r) => (format!("UNDEFINED ({r})"), true),
            Outcome::AssertPassed(m) => (format!("assert ok: {m}"), false),
            Outcome::AssertFailed(m) => (format!("ASSERT FAILED: {m}"), true),
            Outcome::Error(m) => (format!("ERROR: {m}"), true),
        };
        if failed {
            runner.report.failures += 1;
        }
        runner.report.lines.push(format!("line {line}: {status}"));
    }
    runner.report.final_dump = dump_string(&runner.m);
    runner.report
}

/// Parses and runs a script text with the default implementation
/// configuration.
pub fn run_text(text: &str) -> Result<RunReport, ScriptError> {
    Ok(run_script(&parse_script(text)?, ImplConfig::test_default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_overview_example() {
        let s = parse_script(
            "union U { int x; short y; };\nlet u = alloc union U;\nwrite u<U:x> = 3;\nread u<U:y>;\n",
        )
        .unwrap();
        assert_eq!(s.stmts.len(), 4);
    }

    #[test]
    fn empty_script_is_empty() {
        assert_eq!(parse_script("").unwrap().stmts.len(), 0);
    }

    #[test]
    fn syntax_error_carries_position() {
        let e = parse_script("read u.\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.col > 0);
    }

    #[test]
    fn direct_punning_defined_stored_pointer_not() {
        let text = r#"
union U { int x; short y; };
let u = alloc union U;
let p = alloc short*;
write u<U:x> = 3;
write p = &u<U:y>;
seq;
assert_undefined(effective-types) read *p;
assert_defined read u<U:y>;
assert_value u<U:y> == 3;
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn sequence_point_restriction() {
        let text = r#"
let x = alloc int;
write x = 1;
assert_undefined(locked) write x = 2;
assert_undefined(locked) read x;
seq;
assert_defined write x = 2;
seq;
assert_value x == 2;
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn padding_byte_is_indeterminate_after_member_store() {
        let text = r#"
struct S { short x; short* r; };
let s = alloc struct S;
write s.byte[2] = 7;
seq;
write s.x = 10;
seq;
assert_indet s.byte[2];
assert_value s.x == 10;
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn end_of_array_and_free() {
        let text = r#"
let a = malloc int[4];
write a[0] = 1;
seq;
assert_undefined(end-of-array) read a[4];
assert_defined read a[3];
free a;
assert_undefined(dead-object) read a[0];
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn unasserted_ub_fails_the_script() {
        let report = run_text("let x = alloc int;\nread x[0];\n");
        // `[0]` on a non-array is an elaboration error.
        assert!(!report.unwrap().passed());
        let report = run_text("let u = alloc int;\nwrite u = 1;\nwrite u = 2;\n").unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn checkpoints_compare_memories() {
        let text = r#"
let x = alloc int = 5;
checkpoint a;
write x = 5;
seq;
checkpoint b;
assert_eq_memory a b;
assert_eq_memory a;
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn deref_of_dangling_pointer_is_dead() {
        let text = r#"
let p = alloc int*;
let q = malloc int;
write p = &q[0];
seq;
assert_defined read *p;
free q;
assert_undefined(dead-object) read *p;
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn freeable_requires_malloc_and_full_permission() {
        let text = r#"
let x = alloc int[1];
assert_undefined(not-freeable) free x;
"#;
        let report = run_text(text).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn reports_are_deterministic() {
        let text = "let x = alloc int = 1;\nseq;\nassert_value x == 1;\ndump;\n";
        let a = run_text(text).unwrap();
        let b = run_text(text).unwrap();
        assert_eq!(a.render(), b.render());
        assert_eq!(a.final_dump, b.final_dump);
        assert_eq!(a.dumps, b.dumps);
    }
}
