//! Concrete separation algebras and the functors used to compose them.
//!
//! The permission system is assembled as `Lockable<Counting<Frac>> + Frac`;
//! permission-annotated bits use `Tagged` over permissions. Where a
//! construction leaves `difference`/`subseteq` unspecified, the definitions
//! here are the ones forced by laws 7 and 8.

use super::{Rational, SepAlg};
use num_traits::Zero;
use std::fmt;

/// The Boolean separation algebra `(bool, false, ∨)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoolSa(pub bool);

impl SepAlg for BoolSa {
    fn empty() -> Self {
        BoolSa(false)
    }
    fn valid(&self) -> bool {
        true
    }
    fn disjoint(&self, other: &Self) -> bool {
        !self.0 || !other.0
    }
    fn union(&self, other: &Self) -> Self {
        BoolSa(self.0 || other.0)
    }
    fn subseteq(&self, other: &Self) -> bool {
        !self.0 || other.0
    }
    fn difference(&self, other: &Self) -> Self {
        BoolSa(self.0 && !other.0)
    }
    fn splittable(&self) -> bool {
        !self.0
    }
    fn half(&self) -> Self {
        *self
    }
    fn unmapped(&self) -> bool {
        !self.0
    }
    fn unshared(&self) -> bool {
        self.0
    }
}

/// The fractional separation algebra: rationals with `0` as no access, `1` as
/// exclusive access, and strictly intermediate values as read-only shares.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frac(pub Rational);

impl Frac {
    pub fn new(q: Rational) -> Self {
        Frac(q)
    }
    pub fn one() -> Self {
        Frac(Rational::new(1, 1))
    }
}

impl fmt::Debug for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl SepAlg for Frac {
    fn empty() -> Self {
        Frac(Rational::zero())
    }
    fn valid(&self) -> bool {
        Rational::zero() <= self.0 && self.0 <= Rational::new(1, 1)
    }
    fn disjoint(&self, other: &Self) -> bool {
        Rational::zero() <= self.0
            && Rational::zero() <= other.0
            && self.0 + other.0 <= Rational::new(1, 1)
    }
    fn union(&self, other: &Self) -> Self {
        Frac(self.0 + other.0)
    }
    fn subseteq(&self, other: &Self) -> bool {
        Rational::zero() <= self.0 && self.0 <= other.0 && other.0 <= Rational::new(1, 1)
    }
    fn difference(&self, other: &Self) -> Self {
        Frac(self.0 - other.0)
    }
    fn splittable(&self) -> bool {
        self.valid()
    }
    fn half(&self) -> Self {
        Frac(self.0 / 2)
    }
    fn unmapped(&self) -> bool {
        self.0.is_zero()
    }
    fn unshared(&self) -> bool {
        self.0 == Rational::new(1, 1)
    }
}

/// The counting separation algebra over `A`: pairs of a rational counter and
/// a payload. The counter tracks how many existence permissions (elements
/// `⟨x, ∅⟩` with `x < 0`) have been handed out of this share.
#[derive(Clone, PartialEq, Eq)]
pub struct Counting<A> {
    pub count: Rational,
    pub inner: A,
}

impl<A> Counting<A> {
    pub fn new(count: Rational, inner: A) -> Self {
        Counting { count, inner }
    }
}

impl<A: fmt::Debug> fmt::Debug for Counting<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{:?}>", self.count, self.inner)
    }
}

impl<A: SepAlg> SepAlg for Counting<A> {
    fn empty() -> Self {
        Counting::new(Rational::zero(), A::empty())
    }
    fn valid(&self) -> bool {
        self.inner.valid()
            && (!self.inner.unmapped() || self.count <= Rational::zero())
            && (!self.inner.unshared() || Rational::zero() <= self.count)
    }
    fn disjoint(&self, other: &Self) -> bool {
        self.inner.disjoint(&other.inner)
            && (!self.inner.unmapped() || self.count <= Rational::zero())
            && (!other.inner.unmapped() || other.count <= Rational::zero())
            && (!self.inner.union(&other.inner).unshared()
                || Rational::zero() <= self.count + other.count)
    }
    fn union(&self, other: &Self) -> Self {
        Counting::new(self.count + other.count, self.inner.union(&other.inner))
    }
    fn subseteq(&self, other: &Self) -> bool {
        // The four clauses exactly mirror what law 8's disjointness of
        // `other ∖ self` from `self` requires.
        self.inner.subseteq(&other.inner)
            && (!self.inner.unmapped() || self.count <= Rational::zero())
            && (!other.inner.difference(&self.inner).unmapped()
                || other.count - self.count <= Rational::zero())
            && (!other.inner.unshared() || Rational::zero() <= other.count)
    }
    fn difference(&self, other: &Self) -> Self {
        Counting::new(
            self.count - other.count,
            self.inner.difference(&other.inner),
        )
    }
    fn splittable(&self) -> bool {
        self.inner.splittable()
            && (!self.inner.unmapped() || self.count <= Rational::zero())
            && (!self.inner.unshared() || Rational::zero() <= self.count)
    }
    fn half(&self) -> Self {
        Counting::new(self.count / 2, self.inner.half())
    }
    fn unmapped(&self) -> bool {
        self.inner.unmapped() && self.count <= Rational::zero()
    }
    fn unshared(&self) -> bool {
        self.inner.unshared() && Rational::zero() <= self.count
    }
}

/// The lockable separation algebra: payloads annotated as locked or
/// unlocked. Locked elements carry exclusive write ownership, so they are
/// disjoint only from unmapped elements and cannot be split.
#[derive(Clone, PartialEq, Eq)]
pub enum Lockable<A> {
    Unlocked(A),
    Locked(A),
}

impl<A: fmt::Debug> fmt::Debug for Lockable<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lockable::Unlocked(x) => write!(f, "U{x:?}"),
            Lockable::Locked(x) => write!(f, "L{x:?}"),
        }
    }
}

impl<A: SepAlg> SepAlg for Lockable<A> {
    fn empty() -> Self {
        Lockable::Unlocked(A::empty())
    }
    fn valid(&self) -> bool {
        match self {
            Lockable::Unlocked(x) => x.valid(),
            Lockable::Locked(x) => x.unshared(),
        }
    }
    fn disjoint(&self, other: &Self) -> bool {
        use Lockable::*;
        match (self, other) {
            (Unlocked(x), Unlocked(y)) => x.disjoint(y),
            (Unlocked(x), Locked(y)) => x.disjoint(y) && x.unmapped() && y.unshared(),
            (Locked(x), Unlocked(y)) => x.disjoint(y) && x.unshared() && y.unmapped(),
            (Locked(_), Locked(_)) => false,
        }
    }
    fn union(&self, other: &Self) -> Self {
        use Lockable::*;
        match (self, other) {
            (Unlocked(x), Unlocked(y)) => Unlocked(x.union(y)),
            (Unlocked(x), Locked(y)) | (Locked(x), Unlocked(y)) | (Locked(x), Locked(y)) => {
                Locked(x.union(y))
            }
        }
    }
    fn subseteq(&self, other: &Self) -> bool {
        use Lockable::*;
        match (self, other) {
            (Unlocked(x), Unlocked(y)) => x.subseteq(y),
            // Adding an unlocked share to a locked one keeps it locked, so a
            // locked element sits below a locked one when the leftover is
            // unmapped; an unlocked one does when it is itself unmapped.
            (Unlocked(x), Locked(y)) => {
                x.subseteq(y) && x.unmapped() && y.difference(x).unshared()
            }
            (Locked(x), Locked(y)) => x.subseteq(y) && x.unshared() && y.difference(x).unmapped(),
            (Locked(_), Unlocked(_)) => false,
        }
    }
    fn difference(&self, other: &Self) -> Self {
        use Lockable::*;
        match (self, other) {
            (Unlocked(x), Unlocked(y)) => Unlocked(x.difference(y)),
            (Locked(x), Unlocked(y)) => Locked(x.difference(y)),
            (Locked(x), Locked(y)) => Unlocked(x.difference(y)),
            // Dummy: Unlocked is never above Locked.
            (Unlocked(x), Locked(y)) => Unlocked(x.difference(y)),
        }
    }
    fn splittable(&self) -> bool {
        match self {
            Lockable::Unlocked(x) => x.splittable(),
            Lockable::Locked(_) => false,
        }
    }
    fn half(&self) -> Self {
        match self {
            Lockable::Unlocked(x) => Lockable::Unlocked(x.half()),
            // Dummy branch: locked permissions cannot be split.
            Lockable::Locked(x) => Lockable::Locked(x.clone()),
        }
    }
    fn unmapped(&self) -> bool {
        match self {
            Lockable::Unlocked(x) => x.unmapped(),
            Lockable::Locked(_) => false,
        }
    }
    fn unshared(&self) -> bool {
        match self {
            Lockable::Unlocked(x) => x.unshared(),
            Lockable::Locked(x) => x.unshared(),
        }
    }
}

/// Tag types usable with [`Tagged`]: a distinguished default tag marks
/// elements with no usable payload.
pub trait SepTag: Clone + Eq + fmt::Debug {
    fn default_tag() -> Self;
}

/// The tagged separation algebra over `A`: elements of `A` paired with a tag.
/// Unmapped elements must carry the default tag, and a union keeps whichever
/// tag is not the default.
#[derive(Clone, PartialEq, Eq)]
pub struct Tagged<A, T> {
    pub perm: A,
    pub tag: T,
}

impl<A, T> Tagged<A, T> {
    pub fn new(perm: A, tag: T) -> Self {
        Tagged { perm, tag }
    }
}

impl<A: fmt::Debug, T: fmt::Debug> fmt::Debug for Tagged<A, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{:?})", self.perm, self.tag)
    }
}

impl<A: SepAlg, T: SepTag> SepAlg for Tagged<A, T> {
    fn empty() -> Self {
        Tagged::new(A::empty(), T::default_tag())
    }
    fn valid(&self) -> bool {
        self.perm.valid() && (!self.perm.unmapped() || self.tag == T::default_tag())
    }
    fn disjoint(&self, other: &Self) -> bool {
        self.perm.disjoint(&other.perm)
            && (self.perm.unmapped() || self.tag == other.tag || other.perm.unmapped())
            && (!self.perm.unmapped() || self.tag == T::default_tag())
            && (!other.perm.unmapped() || other.tag == T::default_tag())
    }
    fn union(&self, other: &Self) -> Self {
        let tag = if self.tag == T::default_tag() {
            other.tag.clone()
        } else {
            self.tag.clone()
        };
        Tagged::new(self.perm.union(&other.perm), tag)
    }
    fn subseteq(&self, other: &Self) -> bool {
        self.perm.subseteq(&other.perm)
            && (self.tag == other.tag || self.perm.unmapped())
            && (!self.perm.unmapped() || self.tag == T::default_tag())
            && (!other.perm.unmapped() || other.tag == T::default_tag())
    }
    fn difference(&self, other: &Self) -> Self {
        let perm = self.perm.difference(&other.perm);
        let tag = if perm.unmapped() {
            T::default_tag()
        } else {
            self.tag.clone()
        };
        Tagged::new(perm, tag)
    }
    fn splittable(&self) -> bool {
        self.perm.splittable() && (!self.perm.unmapped() || self.tag == T::default_tag())
    }
    fn half(&self) -> Self {
        Tagged::new(self.perm.half(), self.tag.clone())
    }
    fn unmapped(&self) -> bool {
        self.perm.unmapped() && self.tag == T::default_tag()
    }
    fn unshared(&self) -> bool {
        self.perm.unshared()
    }
}

/// The separation algebra on a sum `A + B`. The two identity elements are
/// identified by allowing only the left `∅`: valid right injections are
/// nonempty, and `inl ∅` acts as the unit on both sides.
#[derive(Clone, PartialEq, Eq)]
pub enum Sum<A, B> {
    Inl(A),
    Inr(B),
}

impl<A: fmt::Debug, B: fmt::Debug> fmt::Debug for Sum<A, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sum::Inl(x) => write!(f, "inl {x:?}"),
            Sum::Inr(x) => write!(f, "inr {x:?}"),
        }
    }
}

impl<A: SepAlg, B: SepAlg> SepAlg for Sum<A, B> {
    fn empty() -> Self {
        Sum::Inl(A::empty())
    }
    fn valid(&self) -> bool {
        match self {
            Sum::Inl(x) => x.valid(),
            Sum::Inr(x) => x.valid() && *x != B::empty(),
        }
    }
    fn disjoint(&self, other: &Self) -> bool {
        use Sum::*;
        match (self, other) {
            (Inl(x), Inl(y)) => x.disjoint(y),
            (Inr(x), Inr(y)) => x.disjoint(y) && *x != B::empty() && *y != B::empty(),
            (Inl(x), Inr(y)) => *x == A::empty() && y.valid() && *y != B::empty(),
            (Inr(x), Inl(y)) => x.valid() && *x != B::empty() && *y == A::empty(),
        }
    }
    fn union(&self, other: &Self) -> Self {
        use Sum::*;
        match (self, other) {
            (Inl(x), Inl(y)) => Inl(x.union(y)),
            (Inr(x), Inr(y)) => Inr(x.union(y)),
            (Inl(_), Inr(y)) => Inr(y.clone()),
            (Inr(x), Inl(_)) => Inr(x.clone()),
        }
    }
    fn subseteq(&self, other: &Self) -> bool {
        use Sum::*;
        match (self, other) {
            (Inl(x), Inl(y)) => x.subseteq(y),
            (Inr(x), Inr(y)) => x.subseteq(y) && *x != B::empty() && *y != B::empty(),
            (Inl(x), Inr(y)) => *x == A::empty() && y.valid() && *y != B::empty(),
            (Inr(_), Inl(_)) => false,
        }
    }
    fn difference(&self, other: &Self) -> Self {
        use Sum::*;
        match (self, other) {
            (Inl(x), Inl(y)) => Inl(x.difference(y)),
            (Inr(x), Inr(y)) => {
                let d = x.difference(y);
                if d == B::empty() {
                    Inl(A::empty())
                } else {
                    Inr(d)
                }
            }
            (Inr(x), Inl(_)) => Inr(x.clone()),
            // Dummy: a right injection is never below a left one.
            (Inl(x), Inr(_)) => Inl(x.clone()),
        }
    }
    fn splittable(&self) -> bool {
        match self {
            Sum::Inl(x) => x.splittable(),
            Sum::Inr(x) => x.splittable() && *x != B::empty(),
        }
    }
    fn half(&self) -> Self {
        match self {
            Sum::Inl(x) => Sum::Inl(x.half()),
            Sum::Inr(x) => Sum::Inr(x.half()),
        }
    }
    fn unmapped(&self) -> bool {
        match self {
            Sum::Inl(x) => x.unmapped(),
            Sum::Inr(x) => x.unmapped() && *x != B::empty(),
        }
    }
    fn unshared(&self) -> bool {
        match self {
            Sum::Inl(x) => x.unshared(),
            Sum::Inr(x) => x.unshared(),
        }
    }
}
