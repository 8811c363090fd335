//! An executable C11 memory model.
//!
//! The library models memory the way the C11 standard talks about it rather
//! than the way any one machine implements it:
//!
//! - **Permissions** annotate every bit in memory and form a separation
//!   algebra built from fractional, counting, lockable and const components
//!   ([`sepalg`], [`perm`]).
//! - **Objects are trees**, not byte arrays: the shape of a memory tree
//!   follows the C type of the object, padding is kept symbolically
//!   indeterminate, and unions remember their active variant ([`tree`]).
//! - **Pointers are paths**: an address is an object identifier plus a
//!   reference path with union-variant annotations, a byte offset and a cast
//!   type. This gives an exact account of effective types, type-punning and
//!   end-of-array pointers ([`place`]).
//! - **Values** are abstract trees over mathematical integers and pointers;
//!   conversions between values, trees and bits drive the memory operations
//!   ([`value`], [`mem`]).
//! - **Refinements** relate memories across renaming, coalescing and
//!   weakening of effective types, and validate program transformations such
//!   as constant propagation and byte-wise `memcpy` ([`refine`]).
//!
//! Undefined behavior is a first-class result: operations that C leaves
//! undefined fail with a precise [`mem::UbReason`] instead of doing something
//! arbitrary.
//!
//! The `examples/` directory walks through each capability; the `memctl`
//! binary runs memory-operation scripts ([`script`]) and the property suites
//! ([`suites`]).

pub mod gen;
pub mod implenv;
pub mod intcode;
pub mod mem;
pub mod perm;
pub mod place;
pub mod refine;
pub mod script;
pub mod sep;
pub mod sepalg;
pub mod suites;
pub mod tree;
pub mod types;
pub mod value;

pub use implenv::{Env, ImplEnv};
pub use perm::{Perm, PermKind};
pub use types::{BaseType, CType, IntType, PtrType, Rank, Signedness, TypeEnv};
