//! Decidable checks of the separation-algebra laws over finite carriers.
//!
//! Every law is evaluated for every instantiation of its quantifiers drawn
//! from the given sample; the first counterexample is reported with the
//! witnesses that produced it.

use super::SepAlg;

pub const NUM_LAWS: usize = 18;

/// Human-readable law names, indexed by law number minus one.
pub fn law_names() -> [&'static str; NUM_LAWS] {
    [
        "1: empty is a left identity on valid elements",
        "2: union is commutative",
        "3: union is associative",
        "4: union is cancellative",
        "5: validity is closed under union",
        "6: positivity",
        "7: disjointness gives subseteq of the union",
        "8: difference complements subseteq",
        "9: self-disjoint unions are splittable",
        "10: halves are disjoint and rejoin",
        "11: splittable is downward closed",
        "12: half distributes over union",
        "13: empty is unmapped, unmapped is valid",
        "14: unmapped is downward closed",
        "15: unmapped is closed under union",
        "16: unshared is maximal among disjoint elements",
        "17: unshared and unmapped exclude each other",
        "18: some valid element is not unmapped",
    ]
}

/// Outcome of checking one law.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawResult {
    pub law: usize,
    pub name: &'static str,
    pub instantiations: usize,
    pub counterexample: Option<String>,
}

impl LawResult {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Report for a whole law suite run.
#[derive(Debug, Clone)]
pub struct LawReport {
    pub instance: String,
    pub results: Vec<LawResult>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed())
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.results {
            match &r.counterexample {
                None => out.push(format!(
                    "[PASS] {}: law {} ({} instantiations)",
                    self.instance, r.name, r.instantiations
                )),
                Some(w) => out.push(format!(
                    "[FAIL] {}: law {} -- counterexample {}",
                    self.instance, r.name, w
                )),
            }
        }
        out
    }
}

struct Checker<'a, A: SepAlg> {
    sample: &'a [A],
    results: Vec<LawResult>,
}

impl<'a, A: SepAlg> Checker<'a, A> {
    fn unary(&mut self, law: usize, f: impl Fn(&A) -> bool) {
        let mut counterexample = None;
        let mut n = 0;
        for x in self.sample {
            n += 1;
            if !f(x) {
                counterexample = Some(format!("x = {x:?}"));
                break;
            }
        }
        self.push(law, n, counterexample);
    }

    fn binary(&mut self, law: usize, f: impl Fn(&A, &A) -> bool) {
        let mut counterexample = None;
        let mut n = 0;
        'outer: for x in self.sample {
            for y in self.sample {
                n += 1;
                if !f(x, y) {
                    counterexample = Some(format!("x = {x:?}, y = {y:?}"));
                    break 'outer;
                }
            }
        }
        self.push(law, n, counterexample);
    }

    fn ternary(&mut self, law: usize, f: impl Fn(&A, &A, &A) -> bool) {
        let mut counterexample = None;
        let mut n = 0;
        'outer: for x in self.sample {
            for y in self.sample {
                for z in self.sample {
                    n += 1;
                    if !f(x, y, z) {
                        counterexample = Some(format!("x = {x:?}, y = {y:?}, z = {z:?}"));
                        break 'outer;
                    }
                }
            }
        }
        self.push(law, n, counterexample);
    }

    fn nullary(&mut self, law: usize, holds: bool, witness: &str) {
        let counterexample = if holds { None } else { Some(witness.to_string()) };
        self.push(law, 1, counterexample);
    }

    fn push(&mut self, law: usize, instantiations: usize, counterexample: Option<String>) {
        self.results.push(LawResult {
            law,
            name: law_names()[law - 1],
            instantiations,
            counterexample,
        });
    }
}

/// Runs laws 1-18 over all quantifier instantiations drawn from `sample`.
pub fn check_laws<A: SepAlg>(instance: &str, sample: &[A]) -> LawReport {
    let mut c = Checker { sample, results: Vec::new() };
    let e = A::empty();

    c.unary(1, |x| {
        !x.valid() || (e.disjoint(x) && e.union(x) == *x)
    });
    c.binary(2, |x, y| {
        !x.disjoint(y) || (y.disjoint(x) && x.union(y) == y.union(x))
    });
    c.ternary(3, |x, y, z| {
        if !(x.disjoint(y) && x.union(y).disjoint(z)) {
            return true;
        }
        y.disjoint(z)
            && x.disjoint(&y.union(z))
            && x.union(&y.union(z)) == x.union(y).union(z)
    });
    c.ternary(4, |z, x, y| {
        if !(z.disjoint(x) && z.disjoint(y) && z.union(x) == z.union(y)) {
            return true;
        }
        x == y
    });
    c.binary(5, |x, y| {
        !x.disjoint(y) || (x.valid() && x.union(y).valid())
    });
    c.binary(6, |x, y| {
        if !(x.disjoint(y) && x.union(y) == A::empty()) {
            return true;
        }
        *x == A::empty()
    });
    c.binary(7, |x, y| !x.disjoint(y) || x.subseteq(&x.union(y)));
    c.binary(8, |x, y| {
        if !x.subseteq(y) {
            return true;
        }
        let d = y.difference(x);
        x.disjoint(&d) && x.union(&d) == *y
    });
    c.unary(9, |x| !x.disjoint(x) || x.union(x).splittable());
    c.unary(10, |x| {
        if !x.splittable() {
            return true;
        }
        let h = x.half();
        h.disjoint(&h) && h.union(&h) == *x
    });
    c.binary(11, |x, y| {
        !(y.splittable() && x.subseteq(y)) || x.splittable()
    });
    c.binary(12, |x, y| {
        if !(x.disjoint(y) && x.union(y).splittable()) {
            return true;
        }
        x.union(y).half() == x.half().union(&y.half())
    });
    c.unary(13, |x| {
        A::empty().unmapped() && (!x.unmapped() || x.valid())
    });
    c.binary(14, |x, y| {
        !(y.unmapped() && x.subseteq(y)) || x.unmapped()
    });
    c.binary(15, |x, y| {
        !(x.disjoint(y) && x.unmapped() && y.unmapped()) || x.union(y).unmapped()
    });
    // Law 16 quantifies over the sample: unshared x iff x is valid and every
    // sampled element disjoint from x is unmapped.
    {
        let mut counterexample = None;
        let mut n = 0;
        for x in sample {
            n += 1;
            let rhs = x.valid()
                && sample
                    .iter()
                    .filter(|y| x.disjoint(y))
                    .all(|y| y.unmapped());
            if x.unshared() != rhs {
                counterexample = Some(format!("x = {x:?}"));
                break;
            }
        }
        c.push(16, n, counterexample);
    }
    c.unary(17, |x| !(x.unshared() && x.unmapped()));
    let inhabited = sample.iter().any(|x| x.valid() && !x.unmapped());
    c.nullary(18, inhabited, "no valid non-unmapped element in sample");

    LawReport {
        instance: instance.to_string(),
        results: c.results,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{rat, BoolSa, Frac, SepAlg};
    use super::*;

    #[test]
    fn bool_laws_pass() {
        let report = check_laws("bool", &[BoolSa(false), BoolSa(true)]);
        assert!(report.passed(), "{:#?}", report.results);
    }

    #[test]
    fn frac_laws_pass() {
        let sample: Vec<Frac> = (0..=4).map(|n| Frac::new(rat(n, 4))).collect();
        let report = check_laws("frac", &sample);
        assert!(report.passed(), "{:#?}", report.results);
    }

    /// A deliberately broken instance: difference is `max` instead of
    /// subtraction, so law 8 must fail with a witness.
    #[derive(Debug, Clone, PartialEq, Eq)]
    struct BrokenFrac(Frac);

    impl SepAlg for BrokenFrac {
        fn empty() -> Self {
            BrokenFrac(Frac::empty())
        }
        fn valid(&self) -> bool {
            self.0.valid()
        }
        fn disjoint(&self, other: &Self) -> bool {
            self.0.disjoint(&other.0)
        }
        fn union(&self, other: &Self) -> Self {
            BrokenFrac(self.0.union(&other.0))
        }
        fn subseteq(&self, other: &Self) -> bool {
            self.0.subseteq(&other.0)
        }
        fn difference(&self, other: &Self) -> Self {
            BrokenFrac(Frac::new(self.0 .0.max(other.0 .0)))
        }
        fn splittable(&self) -> bool {
            self.0.splittable()
        }
        fn half(&self) -> Self {
            BrokenFrac(self.0.half())
        }
        fn unmapped(&self) -> bool {
            self.0.unmapped()
        }
        fn unshared(&self) -> bool {
            self.0.unshared()
        }
    }

    #[test]
    fn broken_difference_fails_law_8() {
        let sample: Vec<BrokenFrac> = (0..=4)
            .map(|n| BrokenFrac(Frac::new(rat(n, 4))))
            .collect();
        let report = check_laws("broken", &sample);
        let law8 = &report.results[7];
        assert_eq!(law8.law, 8);
        assert!(law8.counterexample.is_some());
    }
}
