//! Separation algebras.
//!
//! A separation algebra is a partial cancellative commutative monoid used to
//! split and recombine ownership of resources. Partial operations are modeled
//! as total functions guarded by predicates: `union` is only meaningful when
//! `disjoint` holds, `difference x y` when `y ⊑ x`, and `half` when
//! `splittable` holds. Out-of-domain results are unspecified dummy values that
//! the laws never observe.
//!
//! The extended structure adds `splittable`/`half` for subdivision and the
//! `unmapped`/`unshared` predicates that classify elements as bottom (no
//! usable value) or top (exclusive ownership).

mod instances;
mod laws;

pub use instances::{BoolSa, Counting, Frac, Lockable, SepTag, Sum, Tagged};
pub use laws::{check_laws, law_names, LawReport, LawResult, NUM_LAWS};

use std::fmt;

/// Exact rational numbers; always in lowest terms with a positive denominator.
pub type Rational = num_rational::Ratio<i64>;

/// Shorthand for building rationals in tests and carriers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// A separation algebra with the extended split/unmapped/unshared structure.
///
/// Laws 1-8 (identity, commutativity, associativity, cancellativity, validity
/// closure, positivity, union-subseteq, union-difference) plus the extended
/// laws 9-18 are checkable over finite carriers with [`check_laws`].
pub trait SepAlg: Clone + Eq + fmt::Debug {
    fn empty() -> Self;
    fn valid(&self) -> bool;
    fn disjoint(&self, other: &Self) -> bool;
    fn union(&self, other: &Self) -> Self;
    fn subseteq(&self, other: &Self) -> bool;
    /// `x.difference(y)` is `x ∖ y`, meaningful when `y ⊑ x`.
    fn difference(&self, other: &Self) -> Self;
    fn splittable(&self) -> bool;
    fn half(&self) -> Self;
    fn unmapped(&self) -> bool;
    fn unshared(&self) -> bool;
}

/// A guard predicate that failed on a checked operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardError {
    pub predicate: &'static str,
    pub detail: String,
}

impl fmt::Display for GuardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "guard `{}` failed: {}", self.predicate, self.detail)
    }
}

/// `x ∪ y`, failing unless `x ⊥ y`.
pub fn checked_union<A: SepAlg>(x: &A, y: &A) -> Result<A, GuardError> {
    if x.disjoint(y) {
        Ok(x.union(y))
    } else {
        Err(GuardError {
            predicate: "disjoint",
            detail: format!("{x:?} vs {y:?}"),
        })
    }
}

/// `x ∖ y`, failing unless `y ⊑ x`.
pub fn checked_difference<A: SepAlg>(x: &A, y: &A) -> Result<A, GuardError> {
    if y.subseteq(x) {
        Ok(x.difference(y))
    } else {
        Err(GuardError {
            predicate: "subseteq",
            detail: format!("{y:?} not below {x:?}"),
        })
    }
}

/// `½x`, failing unless `splittable x`.
pub fn checked_half<A: SepAlg>(x: &A) -> Result<A, GuardError> {
    if x.splittable() {
        Ok(x.half())
    } else {
        Err(GuardError {
            predicate: "splittable",
            detail: format!("{x:?}"),
        })
    }
}

/// All predicates of one element (and optionally a second) in one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredRecord {
    pub valid: bool,
    pub unmapped: bool,
    pub unshared: bool,
    pub splittable: bool,
    pub disjoint: Option<bool>,
    pub subseteq: Option<bool>,
}

pub fn preds<A: SepAlg>(x: &A, y: Option<&A>) -> PredRecord {
    PredRecord {
        valid: x.valid(),
        unmapped: x.unmapped(),
        unshared: x.unshared(),
        splittable: x.splittable(),
        disjoint: y.map(|y| x.disjoint(y)),
        subseteq: y.map(|y| x.subseteq(y)),
    }
}

/// `⋃ xs`: left-to-right fold of `∪` starting at `∅`.
pub fn union_list<A: SepAlg>(xs: &[A]) -> A {
    match xs.split_first() {
        None => A::empty(),
        Some((x, rest)) => x.union(&union_list(rest)),
    }
}

/// Disjointness of a list: `⊥ []`, and `⊥ (x :: xs)` iff `⊥ xs` and
/// `x ⊥ ⋃ xs`. Stronger than pairwise disjointness.
pub fn disjoint_list<A: SepAlg>(xs: &[A]) -> bool {
    match xs.split_first() {
        None => true,
        Some((x, rest)) => disjoint_list(rest) && x.disjoint(&union_list(rest)),
    }
}

/// `xs ⊑⊥ ys` relative to a probe set: every probe that extends `xs` to a
/// disjoint list also extends `ys`. Exact over the full carrier; a sampled
/// approximation otherwise.
pub fn list_le<A: SepAlg>(xs: &[A], ys: &[A], probes: &[A]) -> bool {
    probes.iter().all(|p| {
        let mut pxs = vec![p.clone()];
        pxs.extend_from_slice(xs);
        let mut pys = vec![p.clone()];
        pys.extend_from_slice(ys);
        !disjoint_list(&pxs) || disjoint_list(&pys)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ListRel {
    pub le: bool,
    pub equiv: bool,
}

/// Decides `xs ⊑⊥ ys` and `xs ≡⊥ ys` over a probe set.
pub fn list_rel<A: SepAlg>(xs: &[A], ys: &[A], probes: &[A]) -> ListRel {
    let le = list_le(xs, ys, probes);
    let ge = list_le(ys, xs, probes);
    ListRel { le, equiv: le && ge }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_union_halves() {
        let h = Frac::new(rat(1, 2));
        assert!(h.disjoint(&h));
        assert_eq!(h.union(&h), Frac::new(rat(1, 1)));
        assert_eq!(checked_union(&Frac::new(rat(0, 1)), &h).unwrap(), h);
    }

    #[test]
    fn frac_predicates() {
        assert!(Frac::new(rat(1, 1)).unshared());
        assert!(Frac::new(rat(0, 1)).unmapped());
        assert!(!Frac::new(rat(1, 1)).disjoint(&Frac::new(rat(1, 2))));
    }

    #[test]
    fn counting_negative_counter_is_valid() {
        // An existence permission: counter -1 over the unmapped payload.
        let c = Counting::new(rat(-1, 1), Frac::new(rat(0, 1)));
        assert!(c.valid());
    }

    #[test]
    fn union_guard_failure_names_predicate() {
        let one = Frac::new(rat(1, 1));
        let err = checked_union(&one, &Frac::new(rat(1, 2))).unwrap_err();
        assert_eq!(err.predicate, "disjoint");
    }

    #[test]
    fn list_disjoint_halves() {
        let h = Frac::new(rat(1, 2));
        assert!(disjoint_list(&[h.clone(), h.clone()]));
        assert!(!disjoint_list(&[h.clone(), h.clone(), h.clone()]));
        assert!(disjoint_list::<Frac>(&[]));
    }

    #[test]
    fn union_equiv_to_parts() {
        let q = Frac::new(rat(1, 4));
        let h = Frac::new(rat(1, 2));
        let probes: Vec<Frac> = (0..=4).map(|n| Frac::new(rat(n, 4))).collect();
        let r = list_rel(&[q.union(&q)], &[q.clone(), q.clone()], &probes);
        assert!(r.equiv);
        // x2 ≡⊥ x1 ++ (x2 ∖ x1) for x1 ⊑ x2.
        let r = list_rel(
            &[h.clone()],
            &[q.clone(), h.difference(&q)],
            &probes,
        );
        assert!(r.equiv);
        // ∅ ≡⊥ [].
        let r = list_rel(&[Frac::empty()], &[], &probes);
        assert!(r.equiv);
    }
}
