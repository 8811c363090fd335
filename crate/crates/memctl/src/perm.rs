//! The permission type annotating every bit in memory.
//!
//! A permission is either non-const — a lockable, counting, fractional
//! element `Unlocked⟨x,y⟩` / `Locked⟨x,y⟩` with counter `x` and fraction `y`
//! — or a const fraction `C(x)`. The whole type is the sum separation
//! algebra `Lockable<Counting<Frac>> + Frac`, so all splitting and
//! recombination comes from the generic algebra; this module adds the
//! classification into kinds and the lock/unlock/token operations used by
//! the memory model.

use crate::sepalg::{rat, Counting, Frac, Lockable, Rational, SepAlg, Sum};
use std::fmt;

type NonConst = Lockable<Counting<Frac>>;
type PermRepr = Sum<NonConst, Frac>;

/// Whether a non-const permission is locked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockState {
    Unlocked,
    Locked,
}

/// A CH-style bit permission.
#[derive(Clone, PartialEq, Eq)]
pub struct Perm(PermRepr);

/// Classification of permissions by the operations they allow.
///
/// The kinds form a lattice: `None ⊂ Existing ⊂ {Readable, Locked} ⊂
/// Writable`, with `Readable` and `Locked` incomparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermKind {
    None,
    Existing,
    Readable,
    Locked,
    Writable,
}

impl PermKind {
    /// Decides the lattice order.
    pub fn le(self, other: PermKind) -> bool {
        use PermKind::*;
        match (self, other) {
            (None, _) => true,
            (_, Writable) => true,
            (Existing, Existing) | (Existing, Readable) | (Existing, Locked) => true,
            (Readable, Readable) => true,
            (Locked, Locked) => true,
            _ => false,
        }
    }
}

impl Perm {
    /// `Unlocked⟨count, frac⟩`.
    pub fn unlocked(count: Rational, frac: Rational) -> Self {
        Perm(Sum::Inl(Lockable::Unlocked(Counting::new(count, Frac::new(frac)))))
    }

    /// `Locked⟨count, frac⟩`.
    pub fn locked(count: Rational, frac: Rational) -> Self {
        Perm(Sum::Inl(Lockable::Locked(Counting::new(count, Frac::new(frac)))))
    }

    /// The const (read-only) permission `C(frac)`.
    pub fn constant(frac: Rational) -> Self {
        Perm(Sum::Inr(Frac::new(frac)))
    }

    /// The full permission `Unlocked⟨0,1⟩`: unshared, splittable, writable,
    /// and the only permission that allows deallocation.
    pub fn full() -> Self {
        Perm::unlocked(rat(0, 1), rat(1, 1))
    }

    /// The existence permission `token = Unlocked⟨-1,0⟩`; it only allows
    /// pointer arithmetic on the object.
    pub fn token() -> Self {
        Perm::unlocked(rat(-1, 1), rat(0, 1))
    }

    pub fn is_full(&self) -> bool {
        *self == Perm::full()
    }

    pub fn is_const(&self) -> bool {
        matches!(self.0, Sum::Inr(_))
    }

    /// The lock state of a non-const permission.
    pub fn lock_state(&self) -> Option<LockState> {
        match &self.0 {
            Sum::Inl(Lockable::Unlocked(_)) => Some(LockState::Unlocked),
            Sum::Inl(Lockable::Locked(_)) => Some(LockState::Locked),
            Sum::Inr(_) => None,
        }
    }

    fn parts(&self) -> Option<(LockState, Rational, Rational)> {
        match &self.0 {
            Sum::Inl(Lockable::Unlocked(c)) => Some((LockState::Unlocked, c.count, c.inner.0)),
            Sum::Inl(Lockable::Locked(c)) => Some((LockState::Locked, c.count, c.inner.0)),
            Sum::Inr(_) => None,
        }
    }

    /// The token counter of a non-const permission.
    pub fn counter(&self) -> Option<Rational> {
        self.parts().map(|(_, c, _)| c)
    }

    /// Classifies the permission.
    pub fn kind(&self) -> PermKind {
        let zero = Rational::new(0, 1);
        let one = Rational::new(1, 1);
        match &self.0 {
            Sum::Inl(Lockable::Unlocked(c)) => {
                let y = c.inner.0;
                if y == one {
                    PermKind::Writable
                } else if zero < y && y < one {
                    PermKind::Readable
                } else if y == zero && c.count != zero {
                    PermKind::Existing
                } else {
                    PermKind::None
                }
            }
            Sum::Inl(Lockable::Locked(_)) => PermKind::Locked,
            Sum::Inr(f) => {
                if zero < f.0 {
                    PermKind::Readable
                } else {
                    PermKind::None
                }
            }
        }
    }

    /// Maps `Unlocked⟨x,y⟩` to `Locked⟨x,y⟩`; everything else is unchanged.
    pub fn lock(&self) -> Self {
        match &self.0 {
            Sum::Inl(Lockable::Unlocked(c)) => Perm(Sum::Inl(Lockable::Locked(c.clone()))),
            _ => self.clone(),
        }
    }

    /// Maps `Locked⟨x,y⟩` to `Unlocked⟨x,y⟩`; everything else is unchanged.
    pub fn unlock(&self) -> Self {
        match &self.0 {
            Sum::Inl(Lockable::Locked(c)) => Perm(Sum::Inl(Lockable::Unlocked(c.clone()))),
            _ => self.clone(),
        }
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Perm {
    /// Stable rendering used in JSON dumps: `U(x,y)`, `L(x,y)`, `C(x)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parts() {
            Some((LockState::Unlocked, x, y)) => write!(f, "U({x},{y})"),
            Some((LockState::Locked, x, y)) => write!(f, "L({x},{y})"),
            None => match &self.0 {
                Sum::Inr(frac) => write!(f, "C({})", frac.0),
                Sum::Inl(_) => unreachable!(),
            },
        }
    }
}

impl SepAlg for Perm {
    fn empty() -> Self {
        Perm(PermRepr::empty())
    }
    fn valid(&self) -> bool {
        self.0.valid()
    }
    fn disjoint(&self, other: &Self) -> bool {
        self.0.disjoint(&other.0)
    }
    fn union(&self, other: &Self) -> Self {
        Perm(self.0.union(&other.0))
    }
    fn subseteq(&self, other: &Self) -> bool {
        self.0.subseteq(&other.0)
    }
    fn difference(&self, other: &Self) -> Self {
        Perm(self.0.difference(&other.0))
    }
    fn splittable(&self) -> bool {
        self.0.splittable()
    }
    fn half(&self) -> Self {
        Perm(self.0.half())
    }
    fn unmapped(&self) -> bool {
        self.0.unmapped()
    }
    fn unshared(&self) -> bool {
        self.0.unshared()
    }
}

/// The exhaustive permission carrier used by the law and lemma checks:
/// counters in {-1, -1/2, 0, 1/2}, fractions in {0, 1/4, 1/2, 1}, both lock
/// states, and the const injections.
pub fn perm_carrier() -> Vec<Perm> {
    let counts = [rat(-1, 1), rat(-1, 2), rat(0, 1), rat(1, 2)];
    let fracs = [rat(0, 1), rat(1, 4), rat(1, 2), rat(1, 1)];
    let mut out = Vec::new();
    for &c in &counts {
        for &f in &fracs {
            out.push(Perm::unlocked(c, f));
            out.push(Perm::locked(c, f));
        }
    }
    for &f in &fracs {
        out.push(Perm::constant(f));
    }
    out
}
