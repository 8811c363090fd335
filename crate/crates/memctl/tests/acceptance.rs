//! Acceptance criteria, one test per criterion. Each prints a single
//! pass/fail line; run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria too.

use memctl::gen::{fixture_env, Gen};
use memctl::implenv::ImplConfig;
use memctl::intcode::{bits_to_string, int_of_bits, int_to_bits, int_typed};
use memctl::mem::dump_string;
use memctl::script::{parse_script, run_script};
use memctl::suites;
use memctl::types::{IntType, Rank, Signedness};
use std::time::Instant;

fn verdict(n: usize, what: &str, pass: bool, detail: String) -> bool {
    if pass {
        println!("[PASS] criterion {n}: {what}");
    } else {
        println!("[FAIL] criterion {n}: {what}\n{detail}");
    }
    pass
}

#[test]
fn c01_separation_algebra_laws() {
    let start = Instant::now();
    let reports = suites::law_reports(None);
    let all = reports.iter().all(|r| r.passed());
    let detail = reports
        .iter()
        .flat_map(|r| r.lines())
        .filter(|l| l.contains("FAIL"))
        .collect::<Vec<_>>()
        .join("\n");
    let elapsed = start.elapsed();
    let in_time = elapsed.as_secs() < 60;
    assert!(verdict(
        1,
        &format!(
            "laws 1-18 exhaustive on bool/frac/counting/lockable/tagged/sum carriers ({:.1}s)",
            elapsed.as_secs_f64()
        ),
        all && in_time,
        detail,
    ));
}

#[test]
fn c02_permission_lemma() {
    let r = suites::perm_suite();
    assert!(verdict(
        2,
        "the six permission lemma clauses hold exhaustively on the carrier",
        r.passed(),
        r.render(),
    ));
}

#[test]
fn c03_integer_coding() {
    let env = fixture_env();
    let ie = &env.ienv;
    let mut ok = true;
    let mut detail = String::new();

    // The displayed encoding of 33 as a signed short, least significant
    // bit first.
    let bits = int_to_bits(ie, IntType::signed(Rank::Short), 33);
    if bits_to_string(&bits) != "1000010000000000" {
        ok = false;
        detail = format!("33 encoded as {}", bits_to_string(&bits));
    }

    // Exhaustive roundtrips for all one- and two-byte types, both
    // directions.
    for (rank, bytes) in [(Rank::Char, 1usize), (Rank::Short, 2)] {
        for sign in [Signedness::Signed, Signedness::Unsigned] {
            let it = IntType::new(sign, rank);
            let bits_n = bytes * 8;
            let (lo, hi) = match sign {
                Signedness::Signed => (-(1i128 << (bits_n - 1)), (1i128 << (bits_n - 1)) - 1),
                Signedness::Unsigned => (0, (1i128 << bits_n) - 1),
            };
            for x in lo..=hi {
                let bs = int_to_bits(ie, it, x);
                if bs.len() != bits_n || int_of_bits(ie, it, &bs) != Some(x) {
                    ok = false;
                    detail = format!("value roundtrip failed at {x}: {it:?}");
                }
            }
            for pattern in 0..(1u32 << bits_n) {
                let bs: Vec<bool> = (0..bits_n).map(|i| pattern >> i & 1 == 1).collect();
                let x = int_of_bits(ie, it, &bs).unwrap();
                if !int_typed(ie, x, it) || int_to_bits(ie, it, x) != bs {
                    ok = false;
                    detail = format!("bit roundtrip failed at pattern {pattern:#x}: {it:?}");
                }
            }
        }
    }
    assert!(verdict(
        3,
        "integer encode/decode roundtrips exhaustively; 33 encodes as 1000010000000000",
        ok,
        detail,
    ));
}

#[test]
fn c04_value_tree_conversions() {
    let r = suites::tree_suite(0xC4, 1000);
    assert!(verdict(
        4,
        "to_val after of_val freezes; val_new/tree_new agree (1000 generated values)",
        r.passed(),
        r.render(),
    ));
}

#[test]
fn c05_memory_operation_laws() {
    let r = suites::mem_suite(0xC5, 500);
    assert!(verdict(
        5,
        "stores commute, lookup-after-store freezes, reads/writes commute, alter commutes (500 cases each)",
        r.passed(),
        r.render(),
    ));
}

#[test]
fn c06_strict_aliasing_trichotomy() {
    let r = suites::aliasing_suite(0xC6);
    assert!(verdict(
        6,
        "every enumerable frozen address pair is subtype-related, disjoint, or cross-fails",
        r.passed(),
        r.render(),
    ));
}

#[test]
fn c07_refinement_theorems() {
    let r = suites::refine_suite(0xC7, 500);
    assert!(verdict(
        7,
        "identity/composition, variant forgetting, constant propagation, memcpy, force erasure (500 cases each)",
        r.passed(),
        r.render(),
    ));
}

#[test]
fn c08_oracle_equivalence() {
    // The flat-oracle agreement lines live in the mem suite; this run sizes
    // it so that at least 1000 applicable cases are checked.
    let r = suites::mem_suite(0xC8, 1000);
    let line = r
        .lines
        .iter()
        .find(|l| l.contains("flat oracle"))
        .cloned()
        .unwrap_or_default();
    let applicable: usize = line
        .split('(')
        .nth(2)
        .and_then(|s| s.split(' ').next())
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let pass = r.passed() && line.contains("[PASS]") && applicable >= 1000;
    assert!(verdict(
        8,
        &format!("flat oracle agrees with mem_lookup on 100% of {applicable} applicable cases"),
        pass,
        r.render(),
    ));
}

#[test]
fn c09_scenario_corpus() {
    let start = Instant::now();
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scripts");
    let mut ok = true;
    let mut detail = String::new();
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .expect("scripts directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map(|e| e == "mem").unwrap_or(false))
        .collect();
    names.sort();
    assert!(names.len() >= 6, "corpus too small: {names:?}");
    for path in names {
        let text = std::fs::read_to_string(&path).unwrap();
        match parse_script(&text) {
            Err(e) => {
                ok = false;
                detail.push_str(&format!("{}: {e}\n", path.display()));
            }
            Ok(s) => {
                let report = run_script(&s, ImplConfig::test_default());
                if !report.passed() {
                    ok = false;
                    detail.push_str(&format!("{}:\n{}\n", path.display(), report.render()));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(verdict(
        9,
        &format!("scenario corpus passes its assertions ({:.2}s)", elapsed.as_secs_f64()),
        ok && elapsed.as_secs() < 5,
        detail,
    ));
}

#[test]
fn c10_determinism() {
    let mut ok = true;
    let mut detail = String::new();
    for name in ["sepalg", "perm", "tree", "mem", "refine", "aliasing"] {
        let a = suites::run_suite(name, 7, 50).unwrap().render();
        let b = suites::run_suite(name, 7, 50).unwrap().render();
        if a != b {
            ok = false;
            detail.push_str(&format!("suite {name} differs between runs\n"));
        }
    }
    let env = fixture_env();
    let (m, _) = Gen::new(99).memory(&env, 4);
    if dump_string(&m) != dump_string(&m.clone()) {
        ok = false;
        detail.push_str("memory dumps differ\n");
    }
    let (m2, _) = Gen::new(99).memory(&env, 4);
    if dump_string(&m) != dump_string(&m2) {
        ok = false;
        detail.push_str("regenerated memory differs\n");
    }
    assert!(verdict(
        10,
        "suite reports and state dumps are byte-identical across runs",
        ok,
        detail,
    ));
}
