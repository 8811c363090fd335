//! The separation-algebra toolkit: instances, guarded operations, and the
//! law checker.
//!
//! ```bash
//! cargo run --example sepalg_laws
//! ```

use memctl::sepalg::{
    check_laws, checked_difference, checked_union, disjoint_list, rat, Frac, SepAlg,
};

fn main() {
    // Fractional permissions: 1 is exclusive, 0 is nothing, and halves
    // recombine exactly.
    let half = Frac::new(rat(1, 2));
    println!("1/2 ⊥ 1/2          = {}", half.disjoint(&half));
    println!("1/2 ∪ 1/2          = {:?}", checked_union(&half, &half).unwrap());
    println!("1 ∖ 1/2            = {:?}", checked_difference(&Frac::one(), &half).unwrap());
    println!("unshared(1)        = {}", Frac::one().unshared());
    println!("unmapped(0)        = {}", Frac::empty().unmapped());

    // Guard failures name the violated predicate instead of overflowing.
    let err = checked_union(&Frac::one(), &half).unwrap_err();
    println!("1 ∪ 1/2            -> {err}");

    // List disjointness is stronger than pairwise disjointness.
    println!(
        "⊥[1/2, 1/2]        = {}",
        disjoint_list(&[half.clone(), half.clone()])
    );
    println!(
        "⊥[1/2, 1/2, 1/2]   = {}",
        disjoint_list(&[half.clone(), half.clone(), half])
    );

    // Every law, checked over all instantiations from a finite carrier.
    let carrier: Vec<Frac> = (0..=4).map(|n| Frac::new(rat(n, 4))).collect();
    let report = check_laws("frac", &carrier);
    for line in report.lines() {
        println!("{line}");
    }
    assert!(report.passed());
}
