//! Driving the model from the script language, embedded in Rust.
//!
//! ```bash
//! cargo run --example run_script
//! ```

use memctl::script::run_text;

fn main() {
    let text = r#"
// The motivating program: g(int *p, short *q) called on aliased union
// pointers. The standard makes the call undefined, and the model agrees.
union U { int x; short y; };
let u = alloc union U;
let p = alloc int*;
let q = alloc short*;

write u<U:x> = 3;      // u = { .x = 3 }
write p = &u<U:x>;
write q = &u<U:y>;
seq;

// Inside g: short z = *q; *p = 10;
assert_undefined(effective-types) read *q;   // reading through q already fails:
                                             // q is frozen and u holds variant x
// Directly through the union, punning is fine:
assert_defined read u<U:y>;
assert_value u<U:y> == 3;
dump;
"#;
    let report = run_text(text).expect("script parses");
    print!("{}", report.render());
    for (name, dump) in &report.dumps {
        println!("--- dump {name} ---\n{dump}");
    }
    assert!(report.passed());
}
