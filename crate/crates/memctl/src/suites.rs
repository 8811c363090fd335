//! Property suites over generated inputs, plus the independent flat-memory
//! read oracle.
//!
//! Each suite returns a [`Report`] whose lines are deterministic for a given
//! seed and case count, so two runs with the same parameters are
//! byte-identical.

use crate::gen::{
    byte_addrs, end_addrs, fixture_env, fixture_types, subobject_addrs, Gen,
};
use crate::implenv::Env;
use crate::mem::{
    cmap_alter, mem_env_of, mem_force, mem_insert, mem_lock, mem_locks,
    mem_lookup, mem_unlock, mem_valid, mem_writable, Mem, MemEntry, ObjId,
};
use crate::perm::{perm_carrier, Perm, PermKind};
use crate::place::{
    addr_bit_size, addr_disjoint, addr_object_offset, addr_strict, addr_typed, Addr,
};
use crate::refine::{mem_refine, subtype, val_refine, RefineCx, Renaming};
use crate::sepalg::{
    check_laws, disjoint_list, list_rel, rat, union_list, BoolSa, Counting, Frac, Lockable,
    Rational, SepAlg, Sum, Tagged,
};
use crate::tree::{
    pbit, tree_flatten, tree_new, tree_typed, tree_unflatten, Bit, MTree,
};
use crate::types::CType;
use crate::value::{
    base_flatten, base_unflatten, of_val, to_val, val_flatten, val_new, val_typed,
    val_unflatten, Val,
};

/// Outcome of one suite: one line per checked property.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub lines: Vec<String>,
    pub failures: usize,
}

impl Report {
    pub fn new(name: &str) -> Self {
        Report { name: name.to_string(), lines: Vec::new(), failures: 0 }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn check(&mut self, what: &str, cases: usize, counterexample: Option<String>) {
        match counterexample {
            None => self.lines.push(format!("[PASS] {}: {} ({} cases)", self.name, what, cases)),
            Some(w) => {
                self.failures += 1;
                self.lines.push(format!("[FAIL] {}: {} -- {}", self.name, what, w));
            }
        }
    }

    pub fn absorb_laws(&mut self, rep: crate::sepalg::LawReport, upto: usize) {
        for r in rep.results.iter().take(upto) {
            match &r.counterexample {
                None => self.lines.push(format!(
                    "[PASS] {}: {} laws: {} ({} instantiations)",
                    self.name, rep.instance, r.name, r.instantiations
                )),
                Some(w) => {
                    self.failures += 1;
                    self.lines.push(format!(
                        "[FAIL] {}: {} laws: {} -- {}",
                        self.name, rep.instance, r.name, w
                    ));
                }
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out.push_str(&format!(
            "{}: {}\n",
            self.name,
            if self.passed() { "all checks passed" } else { "FAILURES PRESENT" }
        ));
        out
    }
}

// ---------------------------------------------------------------------------
// Carriers for the algebra suites
// ---------------------------------------------------------------------------

/// Rationals `k/4` in `[lo, hi]` (denominators 1, 2, 4).
fn quarters(lo: i64, hi: i64) -> Vec<Rational> {
    (lo * 4..=hi * 4).map(|k| rat(k, 4)).collect()
}

/// Rationals in `[0,1]` with denominator at most 4.
fn frac_carrier() -> Vec<Frac> {
    let mut out = Vec::new();
    for den in 1..=4i64 {
        for num in 0..=den {
            let q = rat(num, den);
            if !out.iter().any(|f: &Frac| f.0 == q) {
                out.push(Frac::new(q));
            }
        }
    }
    out
}

fn counting_carrier() -> Vec<Counting<Frac>> {
    let mut out = Vec::new();
    for c in quarters(-2, 2) {
        for f in quarters(0, 1) {
            out.push(Counting::new(c, Frac::new(f)));
        }
    }
    out
}

fn lockable_carrier() -> Vec<Lockable<Counting<Frac>>> {
    let counts = [rat(-1, 1), rat(-1, 2), rat(0, 1), rat(1, 2)];
    let fracs = [rat(0, 1), rat(1, 4), rat(1, 2), rat(1, 1)];
    let mut out = Vec::new();
    for &c in &counts {
        for &f in &fracs {
            out.push(Lockable::Unlocked(Counting::new(c, Frac::new(f))));
            out.push(Lockable::Locked(Counting::new(c, Frac::new(f))));
        }
    }
    out
}

fn tagged_carrier() -> Vec<Tagged<Frac, Bit>> {
    let mut out = Vec::new();
    for f in quarters(0, 1) {
        for tag in [Bit::Indet, Bit::B0, Bit::B1] {
            out.push(Tagged::new(Frac::new(f), tag.clone()));
        }
    }
    out
}

fn sum_carrier() -> Vec<Sum<Lockable<Counting<Frac>>, Frac>> {
    let mut out: Vec<Sum<_, _>> = lockable_carrier().into_iter().map(Sum::Inl).collect();
    for f in [rat(0, 1), rat(1, 4), rat(1, 2), rat(1, 1)] {
        out.push(Sum::Inr(Frac::new(f)));
    }
    out
}

/// Law reports for every named algebra instance. `instance` filters by name.
pub fn law_reports(instance: Option<&str>) -> Vec<crate::sepalg::LawReport> {
    let mut out = Vec::new();
    let want = |n: &str| instance.map(|i| i == n).unwrap_or(true);
    if want("bool") {
        out.push(check_laws("bool", &[BoolSa(false), BoolSa(true)]));
    }
    if want("frac") {
        out.push(check_laws("frac", &frac_carrier()));
    }
    if want("counting") {
        out.push(check_laws("counting", &counting_carrier()));
    }
    if want("lockable") {
        out.push(check_laws("lockable", &lockable_carrier()));
    }
    if want("tagged") {
        out.push(check_laws("tagged", &tagged_carrier()));
    }
    if want("sum") {
        out.push(check_laws("sum", &sum_carrier()));
    }
    if want("perm") {
        out.push(check_laws("perm", &perm_carrier()));
    }
    out
}

// ---------------------------------------------------------------------------
// sepalg suite
// ---------------------------------------------------------------------------

pub fn sepalg_suite() -> Report {
    let mut r = Report::new("sepalg");
    for rep in law_reports(None) {
        r.absorb_laws(rep, crate::sepalg::NUM_LAWS);
    }

    // List disjointness over fractional permissions.
    let h = Frac::new(rat(1, 2));
    r.check(
        "half/half list disjointness",
        3,
        if disjoint_list(&[h.clone(), h.clone()])
            && !disjoint_list(&[h.clone(), h.clone(), h.clone()])
            && disjoint_list::<Frac>(&[])
        {
            None
        } else {
            Some("list disjointness on halves misbehaves".into())
        },
    );

    // The algebraic equations for list equivalence, over the carrier.
    let sample = frac_carrier();
    let mut cases = 0;
    let mut bad = None;
    // ∅ ≡⊥ [].
    if !list_rel(&[Frac::empty()], &[], &sample).equiv {
        bad = Some("empty is not equivalent to the empty list".to_string());
    }
    for x in &sample {
        for y in &sample {
            cases += 1;
            if x.disjoint(y) {
                let rel = list_rel(
                    &[x.union(y)],
                    &[x.clone(), y.clone()],
                    &sample,
                );
                if !rel.equiv {
                    bad = Some(format!("[x∪y] !≡ [x,y] at {x:?},{y:?}"));
                }
            }
            if x.subseteq(y) {
                let rel = list_rel(
                    &[y.clone()],
                    &[x.clone(), y.difference(x)],
                    &sample,
                );
                if !rel.equiv {
                    bad = Some(format!("[y] !≡ [x, y∖x] at {x:?},{y:?}"));
                }
            }
        }
    }
    // [⋃xs] ≡⊥ xs for sampled disjoint triples.
    for x in &sample {
        for y in &sample {
            for z in &sample {
                let xs = [x.clone(), y.clone(), z.clone()];
                if disjoint_list(&xs) {
                    cases += 1;
                    if !list_rel(&[union_list(&xs)], &xs, &sample).equiv {
                        bad = Some(format!("[⋃xs] !≡ xs at {xs:?}"));
                    }
                }
            }
        }
    }
    // Equivalence is a congruence for concatenation and permutation.
    let q = Frac::new(rat(1, 4));
    let perm_ok = list_rel(
        &[q.clone(), h.clone()],
        &[h.clone(), q.clone()],
        &sample,
    )
    .equiv;
    let concat_ok = {
        let lhs = [q.union(&q), q.clone()];
        let rhs = [q.clone(), q.clone(), q.clone()];
        list_rel(&lhs, &rhs, &sample).equiv
    };
    if !(perm_ok && concat_ok) {
        bad = Some("equivalence is not a permutation/concatenation congruence".into());
    }
    r.check("list equivalence equations", cases, bad);
    r
}

// ---------------------------------------------------------------------------
// perm suite
// ---------------------------------------------------------------------------

pub fn perm_suite() -> Report {
    let mut r = Report::new("perm");
    let carrier = perm_carrier();
    r.absorb_laws(check_laws("perm", &carrier), crate::sepalg::NUM_LAWS);

    let writable = |x: &Perm| PermKind::Writable.le(x.kind());

    let mut bad = None;
    let mut n = 0;
    for x in &carrier {
        if writable(x) {
            n += 1;
            if x.lock().unlock() != *x {
                bad = Some(format!("unlock(lock {x}) != {x}"));
            }
        }
    }
    r.check("unlock after lock is the identity on writable", n, bad);

    let mut bad = None;
    for x in carrier.iter().filter(|x| writable(x)) {
        if x.lock().kind() != PermKind::Locked {
            bad = Some(format!("kind(lock {x}) != Locked"));
        }
    }
    r.check("locking yields kind Locked", carrier.len(), bad);

    let mut bad = None;
    for x in &carrier {
        let want = if writable(x) { PermKind::Readable } else { x.kind() };
        if x.half().kind() != want {
            bad = Some(format!("kind(half {x}) = {:?}, want {want:?}", x.half().kind()));
        }
    }
    r.check("kind of half", carrier.len(), bad);

    r.check(
        "kind of the token is Existing",
        1,
        if Perm::token().kind() == PermKind::Existing {
            None
        } else {
            Some("token kind mismatch".into())
        },
    );

    // Splitting off a token does not change the kind, for permissions that
    // strictly contain a token.
    let token = Perm::token();
    let mut bad = None;
    let mut n = 0;
    for x in &carrier {
        if token.subseteq(x) && *x != token {
            n += 1;
            let d = x.difference(&token);
            if d.kind() != x.kind() {
                bad = Some(format!("kind({x} ∖ token) = {:?} != {:?}", d.kind(), x.kind()));
            }
        }
    }
    r.check("kind is preserved by removing a token", n, bad);

    let mut bad = None;
    let mut n = 0;
    for x in &carrier {
        for y in &carrier {
            if x.subseteq(y) {
                n += 1;
                if !x.kind().le(y.kind()) {
                    bad = Some(format!("kind not monotone at {x}, {y}"));
                }
            }
        }
    }
    r.check("kind is monotone in subseteq", n, bad);

    // The full permission: unshared, splittable, writable, and locking
    // changes it; any other carrier element with those properties has handed
    // out tokens (a positive counter) and so is no longer the deallocation
    // permission.
    let full = Perm::full();
    let qualifies = |x: &Perm| {
        x.unshared() && x.splittable() && x.kind() == PermKind::Writable && x.lock() != *x
    };
    let mut bad = None;
    if !qualifies(&full) || !full.is_full() {
        bad = Some("the full permission lost one of its properties".into());
    }
    for x in carrier.iter().filter(|x| qualifies(x) && !x.is_full()) {
        // The only other qualifying elements are writable permissions with
        // outstanding (possibly fractional) tokens; those cannot free.
        let outstanding = x.counter().map(|c| c > rat(0, 1)).unwrap_or(false);
        if !outstanding {
            bad = Some(format!("unexpected full-like permission {x}"));
        }
    }
    r.check("full permission is unique up to outstanding tokens", carrier.len(), bad);
    r
}

// ---------------------------------------------------------------------------
// tree/value suite
// ---------------------------------------------------------------------------

fn spine(w: &MTree) -> String {
    match w {
        MTree::Base(bt, _) => format!("b:{bt}"),
        MTree::Array(_, ws) => format!("a[{}]", ws.iter().map(spine).collect::<String>()),
        MTree::Struct(t, items) => format!(
            "s:{t}[{}]",
            items.iter().map(|(w, _)| spine(w)).collect::<String>()
        ),
        MTree::Union(t, i, w, _) => format!("u:{t}.{i}({})", spine(w)),
        MTree::UnionAll(t, _) => format!("ua:{t}"),
    }
}

fn padding_free(env: &Env, t: &CType) -> bool {
    match t {
        CType::Base(_) => true,
        CType::Array(e, _) => padding_free(env, e),
        CType::Struct(tag) => {
            let fields = env.types.compound(tag).cloned().unwrap_or_default();
            let slots = env.ienv.field_sizes(&env.types, &fields).unwrap_or_default();
            fields.iter().zip(slots.iter()).all(|(f, z)| {
                padding_free(env, f) && env.ienv.size_of(&env.types, f) == Ok(*z)
            })
        }
        CType::Union(_) => false,
    }
}

pub fn tree_suite(seed: u64, cases: usize) -> Report {
    let mut r = Report::new("tree");
    let env = fixture_env();
    let mut g = Gen::new(seed);
    let (m, delta) = g.memory(&env, 3);
    let pool: Vec<Addr> = m
        .ids()
        .flat_map(|o| {
            delta
                .type_of(o)
                .map(|t| subobject_addrs(&env, o, t, false))
                .unwrap_or_default()
        })
        .collect();
    let types = fixture_types();

    let mut bad_len = None;
    let mut bad_roundtrip = None;
    let mut bad_exact = None;
    let mut bad_spine = None;
    let mut bad_typed = None;
    for i in 0..cases {
        let t = types[i % types.len()].clone();
        let w = g.tree(&env, &t, &pool);
        let flat = tree_flatten(&w);
        let bits = env.ienv.bit_size_of(&env.types, &t).unwrap();
        if flat.len() != bits {
            bad_len = Some(format!("flatten length {} != {} at {t}", flat.len(), bits));
        }
        if tree_typed(&env, &delta, &w) != Ok(t.clone()) {
            bad_typed = Some(format!("generated tree untyped at {t}"));
        }
        // Unflattening the flattening is typed and loses only variants and
        // padding; exact for union- and padding-free types.
        match tree_unflatten(&env, &t, &flat) {
            Err(e) => bad_roundtrip = Some(format!("unflatten failed at {t}: {e:?}")),
            Ok(w2) => {
                if tree_typed(&env, &delta, &w2) != Ok(t.clone()) {
                    bad_roundtrip = Some(format!("unflatten(flatten) untyped at {t}"));
                }
                if t.union_free(&env.types) && padding_free(&env, &t) && w2 != w {
                    bad_exact = Some(format!("exact roundtrip failed at {t}"));
                }
            }
        }
        // Merge with the first projection preserves the tree, and the spine
        // is preserved by any merge.
        let ys: Vec<u8> = (0..flat.len()).map(|k| (k % 7) as u8).collect();
        let merged = crate::tree::tree_merge(&|pb, _| pb.clone(), &w, &ys).unwrap();
        if merged != w || spine(&merged) != spine(&w) {
            bad_spine = Some(format!("merge disturbed the tree at {t}"));
        }
    }
    r.check("flatten length equals the type's bit size", cases, bad_len);
    r.check("generated trees are typed", cases, bad_typed);
    r.check("unflatten of flatten is typed", cases, bad_roundtrip);
    r.check("exact roundtrip on union- and padding-free types", cases, bad_exact);
    r.check("merge preserves the constructor spine", cases, bad_spine);

    // Bit-sequence roundtrip in the other direction.
    let mut bad = None;
    for i in 0..cases {
        let t = [crate::gen::short_t(), CType::sint(), CType::array(CType::uchar(), 3)]
            [i % 3]
            .clone();
        let bits = env.ienv.bit_size_of(&env.types, &t).unwrap();
        let pbs: Vec<_> = (0..bits)
            .map(|_| {
                pbit(
                    g.perm(),
                    if g.bool() { Bit::B1 } else { Bit::B0 },
                )
            })
            .collect();
        let w = tree_unflatten(&env, &t, &pbs).unwrap();
        if tree_flatten(&w) != pbs {
            bad = Some(format!("flatten(unflatten(bs)) != bs at {t}"));
        }
    }
    r.check("flatten of unflatten on padding-free bits", cases, bad);

    // Alter at a path touches only the subobject's bit range.
    let mut bad = None;
    let mut n = 0;
    for o in m.ids() {
        let Some(MemEntry::Obj(w, _)) = m.get(o) else { continue };
        let t = w.type_of();
        for a in subobject_addrs(&env, o, &t, false) {
            // Skip paths that reinterpret a union variant; they may rewrite
            // the whole union region.
            let norm = crate::place::addr_normalize(&env, &a);
            if crate::tree::tree_lookup(&env, &norm.norm_ref, w).is_err() {
                continue;
            }
            let same_variant = {
                let mut cur = w.clone();
                let mut ok = true;
                for seg in &norm.norm_ref {
                    match (seg, &cur) {
                        (crate::place::RefSeg::Array(i, _, _), MTree::Array(_, ws)) => {
                            cur = ws[*i].clone();
                        }
                        (crate::place::RefSeg::Struct(i, _), MTree::Struct(_, items)) => {
                            cur = items[*i].0.clone();
                        }
                        (crate::place::RefSeg::Union(i, _, _), MTree::Union(_, j, inner, _)) => {
                            if i != j {
                                ok = false;
                                break;
                            }
                            cur = (**inner).clone();
                        }
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                ok
            };
            if !same_variant {
                continue;
            }
            n += 1;
            let v = g.value(&env, &a.sub_type, &[]);
            let env2 = env.clone();
            let vv = v.clone();
            let f = move |old: MTree| {
                let perms: Vec<Perm> =
                    tree_flatten(&old).iter().map(|pb| pb.perm.clone()).collect();
                of_val(&env2, &perms, &vv).unwrap_or(old)
            };
            let got = crate::tree::tree_alter(&env, &f, &norm.norm_ref, w).unwrap();
            let off = addr_object_offset(&env, &a).unwrap();
            let width = addr_bit_size(&env, &a).unwrap();
            let before = tree_flatten(w);
            let after = tree_flatten(&got);
            let untouched = before
                .iter()
                .zip(after.iter())
                .enumerate()
                .all(|(k, (x, y))| (off..off + width).contains(&k) || x == y);
            if !untouched {
                bad = Some(format!("alter spilled outside [{off}, {})", off + width));
            }
            // Looking up through the altered tree sees exactly f's result.
            let seen = crate::tree::tree_lookup(&env, &norm.norm_ref, &got);
            let expect = crate::tree::tree_lookup(&env, &norm.norm_ref, w).map(&f);
            if seen != expect {
                bad = Some(format!("lookup after alter is not f at {a:?}"));
            }
        }
    }
    r.check("alter touches only the addressed bit range", n, bad);

    // Value conversions: to_val(of_val(γ̄, v)) = freeze v, and the
    // indeterminate value/tree agree.
    let mut bad_freeze = None;
    let mut bad_new = None;
    let mut bad_base = None;
    for i in 0..cases {
        let t = types[i % types.len()].clone();
        let v = g.value(&env, &t, &pool);
        let bits = env.ienv.bit_size_of(&env.types, &t).unwrap();
        let perms = g.perm_seq(bits);
        let w = of_val(&env, &perms, &v).unwrap();
        match to_val(&env, &w) {
            Ok(back) => {
                if back != v.freeze() {
                    bad_freeze = Some(format!("to_val(of_val(v)) != freeze v at {t}"));
                }
            }
            Err(e) => bad_freeze = Some(format!("to_val failed at {t}: {e:?}")),
        }
        let gamma = g.perm();
        let wn = tree_new(&env, &gamma, &t).unwrap();
        let vn = val_new(&env, &t).unwrap();
        if to_val(&env, &wn).unwrap() != vn {
            bad_new = Some(format!("to_val(tree_new) != val_new at {t}"));
        }
        if of_val(&env, &vec![gamma.clone(); bits], &vn).unwrap() != wn {
            bad_new = Some(format!("of_val(val_new) != tree_new at {t}"));
        }
        // Base-level inverse up to freezing.
        if let Val::Base(bv) = &v {
            let bs = base_flatten(&env, bv).unwrap();
            let bt = bv.type_of();
            if base_unflatten(&env, &bt, &bs).unwrap() != bv.freeze() {
                bad_base = Some(format!("base unflatten∘flatten != freeze at {bt}"));
            }
        }
    }
    r.check("to_val after of_val freezes", cases, bad_freeze);
    r.check("indeterminate value and tree agree", cases, bad_new);
    r.check("base value flatten/unflatten freezes", cases, bad_base);

    // Address geometry over the enumerated fixture addresses: object
    // offsets are aligned, freezing changes neither typing nor offsets,
    // disjointness is symmetric, and disjoint strict addresses of one
    // object occupy non-overlapping bit ranges.
    let mut n_geo = 0;
    let mut bad_geo = None;
    {
        let (m2, d2) = g.memory(&env, 3);
        for o in m2.ids() {
            let Some(t) = d2.type_of(o).cloned() else { continue };
            let addrs = subobject_addrs(&env, o, &t, true);
            for a in &addrs {
                n_geo += 1;
                let off = addr_object_offset(&env, a).unwrap();
                let align = env.ienv.align_of(&env.types, &a.sub_type).unwrap()
                    * env.ienv.char_bits();
                if off % align != 0 {
                    bad_geo = Some(format!("offset {off} not {align}-aligned at {a:?}"));
                }
                let frozen = a.freeze();
                if addr_typed(&env, &d2, &frozen).is_err()
                    || addr_object_offset(&env, &frozen).unwrap() != off
                {
                    bad_geo = Some(format!("freezing disturbed {a:?}"));
                }
            }
            for a1 in &addrs {
                for a2 in &addrs {
                    if addr_disjoint(&env, a1, a2) != addr_disjoint(&env, a2, a1) {
                        bad_geo = Some(format!("disjointness asymmetric at {a1:?}/{a2:?}"));
                    }
                    if !addr_disjoint(&env, a1, a2) {
                        continue;
                    }
                    let o1 = addr_object_offset(&env, a1).unwrap();
                    let o2 = addr_object_offset(&env, a2).unwrap();
                    let w1 = addr_bit_size(&env, a1).unwrap();
                    let w2 = addr_bit_size(&env, a2).unwrap();
                    if o1 + w1 > o2 && o2 + w2 > o1 {
                        bad_geo =
                            Some(format!("disjoint ranges overlap at {a1:?}/{a2:?}"));
                    }
                }
            }
        }
    }
    r.check("address offsets align and disjoint ranges do not overlap", n_geo, bad_geo);

    // Typed trees are valid for the separation structure, and the tree
    // operations agree with the leaf-wise algebra when spines match.
    let mut bad_sep = None;
    for i in 0..cases {
        let t = types[i % types.len()].clone();
        let w = g.tree(&env, &t, &pool);
        if !crate::sep::tree_sep_valid(&w) {
            bad_sep = Some(format!("typed tree not sep-valid at {t}"));
            continue;
        }
        let h = crate::tree::tree_map(&|pb| pb.half(), &w);
        let hflat = tree_flatten(&h);
        let leafwise = hflat.iter().zip(hflat.iter()).all(|(x, y)| x.disjoint(y));
        if crate::sep::tree_disjoint(&h, &h) != leafwise {
            bad_sep = Some(format!("tree disjointness disagrees with leaves at {t}"));
        }
        if crate::sep::tree_disjoint(&h, &h) {
            let joined = crate::sep::tree_union(&h, &h);
            let expect: Vec<_> =
                hflat.iter().zip(hflat.iter()).map(|(x, y)| x.union(y)).collect();
            if tree_flatten(&joined) != expect {
                bad_sep = Some(format!("tree union disagrees with leaves at {t}"));
            }
        }
    }
    r.check("typed trees are sep-valid; union/disjoint agree leafwise", cases, bad_sep);

    // Typed values survive a flatten/unflatten roundtrip of their union
    // interpretation (the typing premise of unknown-variant unions).
    let mut bad = None;
    for _ in 0..cases {
        let t = CType::Union("U".into());
        let v = g.value(&env, &t, &pool);
        if val_typed(&env, &delta, &v) != Ok(t.clone()) {
            bad = Some("generated union value untyped".to_string());
            continue;
        }
        if let Val::UnionAll(_, vs) = &v {
            let bs = val_flatten(&env, &v).unwrap();
            let fields = env.types.compound("U").unwrap().clone();
            for (i, f) in fields.iter().enumerate() {
                let s = env.ienv.bit_size_of(&env.types, f).unwrap();
                if val_unflatten(&env, f, &bs[..s]).unwrap() != vs[i] {
                    bad = Some(format!("variant {i} does not reread from the join"));
                }
            }
        }
    }
    r.check("unknown-variant unions reread from their join", cases, bad);
    r
}

// ---------------------------------------------------------------------------
// flat oracle
// ---------------------------------------------------------------------------

/// An independent read semantics: flatten the whole object, slice the
/// address's bit range, and unflatten at the read type. Declines (returns
/// `None`) when a union would need reinterpretation, when the subobject type
/// contains unions, or when permissions forbid the read — cases where the
/// tree semantics is the authority.
pub fn flat_oracle(env: &Env, m: &Mem, a: &Addr) -> Option<Val> {
    let delta = mem_env_of(m);
    if addr_typed(env, &delta, a).is_err() || !addr_strict(env, a) {
        return None;
    }
    let Some(MemEntry::Obj(w, _)) = m.get(a.index) else {
        return None;
    };
    // Walk the stored tree: every union segment must match the stored
    // variant exactly.
    let norm = crate::place::addr_normalize(env, a);
    let mut cur = w.clone();
    for seg in &norm.norm_ref {
        match (seg, &cur) {
            (crate::place::RefSeg::Array(i, _, _), MTree::Array(_, ws)) => {
                cur = ws.get(*i)?.clone();
            }
            (crate::place::RefSeg::Struct(i, _), MTree::Struct(_, items)) => {
                cur = items.get(*i)?.0.clone();
            }
            (crate::place::RefSeg::Union(i, _, _), MTree::Union(_, j, inner, _)) => {
                if i != j {
                    return None;
                }
                cur = (**inner).clone();
            }
            _ => return None,
        }
    }
    if !a.sub_type.union_free(&env.types) {
        return None;
    }
    let off = addr_object_offset(env, a).ok()?;
    let width = addr_bit_size(env, a).ok()?;
    let flat = tree_flatten(w);
    let slice = flat.get(off..off + width)?;
    if !slice
        .iter()
        .all(|pb| PermKind::Readable.le(pb.perm.kind()))
    {
        return None;
    }
    let read_type = if a.is_byte() { CType::uchar() } else { a.sub_type.clone() };
    let bits: Vec<Bit> = slice.iter().map(|pb| pb.tag.clone()).collect();
    val_unflatten(env, &read_type, &bits).ok()
}

// ---------------------------------------------------------------------------
// mem suite
// ---------------------------------------------------------------------------

/// A memory with the same objects but only an existence token on each bit;
/// subtracting it from `m` leaves a writable remainder.
fn token_copy(env: &Env, m: &Mem) -> Mem {
    let mut out = Mem::new();
    for (o, e) in m.iter() {
        match e {
            MemEntry::Obj(w, mu) => {
                let t = w.type_of();
                let blank = tree_new(env, &Perm::token(), &t).expect("typed object");
                out.insert_entry(*o, MemEntry::Obj(blank, *mu));
            }
            MemEntry::Tomb(t) => out.insert_entry(*o, MemEntry::Tomb(t.clone())),
        }
    }
    out
}

fn writable_addrs(env: &Env, m: &Mem) -> Vec<Addr> {
    let mut out = Vec::new();
    for o in m.ids() {
        let Some(MemEntry::Obj(w, _)) = m.get(o) else { continue };
        let t = w.type_of();
        for a in subobject_addrs(env, o, &t, false) {
            if mem_writable(env, &a, m) {
                out.push(a);
            }
        }
    }
    out
}

pub fn mem_suite(seed: u64, cases: usize) -> Report {
    let mut r = Report::new("mem");
    let env = fixture_env();
    let mut g = Gen::new(seed);

    let mut n_commute = 0;
    let mut bad_commute = None;
    let mut n_freeze = 0;
    let mut bad_freeze = None;
    let mut n_rw = 0;
    let mut bad_rw = None;
    let mut n_alter = 0;
    let mut bad_alter = None;
    let mut bad_fact = None;
    let mut round = 0;
    while n_commute < cases || n_freeze < cases || n_rw < cases {
        round += 1;
        let (m, delta) = g.memory(&env, 2 + round % 2);
        if !mem_valid(&env, &delta, &m) {
            continue;
        }
        let addrs = writable_addrs(&env, &m);
        // Lookup after store yields the frozen value (non-byte addresses).
        for a in addrs.iter().take(4) {
            if n_freeze >= cases {
                break;
            }
            n_freeze += 1;
            let v = g.value(&env, &a.sub_type, &[]);
            let m2 = mem_insert(&env, a, &v, &m).unwrap();
            match mem_lookup(&env, a, &m2) {
                Ok(got) if got == v.freeze() => {}
                other => {
                    bad_freeze = Some(format!("lookup after store gave {other:?}"));
                }
            }
            // Writability implies a defined lookup.
            if mem_lookup(&env, a, &m).is_err() {
                bad_fact = Some("writable address failed to read".to_string());
            }
        }
        // Commutation on disjoint pairs.
        for a1 in addrs.iter() {
            for a2 in addrs.iter() {
                if n_commute >= cases && n_rw >= cases && n_alter >= cases {
                    break;
                }
                if !addr_disjoint(&env, a1, a2) {
                    continue;
                }
                let v1 = g.value(&env, &a1.sub_type, &[]);
                let v2 = g.value(&env, &a2.sub_type, &[]);
                if n_commute < cases {
                    n_commute += 1;
                    let lhs = mem_insert(&env, a1, &v1, &mem_insert(&env, a2, &v2, &m).unwrap());
                    let rhs = mem_insert(&env, a2, &v2, &mem_insert(&env, a1, &v1, &m).unwrap());
                    if lhs != rhs {
                        bad_commute = Some(format!("stores at {a1:?} / {a2:?} do not commute"));
                    }
                }
                if n_rw < cases {
                    n_rw += 1;
                    if let Ok(before) = mem_lookup(&env, a1, &m) {
                        let m2 = mem_insert(&env, a2, &v2, &m).unwrap();
                        match mem_lookup(&env, a1, &m2) {
                            Ok(after) if after == before => {}
                            other => {
                                bad_rw = Some(format!(
                                    "store at {a2:?} disturbed a disjoint read: {other:?}"
                                ));
                            }
                        }
                    }
                }
                if n_alter < cases {
                    n_alter += 1;
                    let env1 = env.clone();
                    let vv1 = v1.clone();
                    let f1 = move |old: MTree| {
                        let perms: Vec<Perm> =
                            tree_flatten(&old).iter().map(|pb| pb.perm.clone()).collect();
                        of_val(&env1, &perms, &vv1).unwrap_or(old)
                    };
                    let env2 = env.clone();
                    let vv2 = v2.clone();
                    let f2 = move |old: MTree| {
                        let perms: Vec<Perm> =
                            tree_flatten(&old).iter().map(|pb| pb.perm.clone()).collect();
                        of_val(&env2, &perms, &vv2).unwrap_or(old)
                    };
                    let lhs = cmap_alter(&env, &f1, a1, &cmap_alter(&env, &f2, a2, &m).unwrap());
                    let rhs = cmap_alter(&env, &f2, a2, &cmap_alter(&env, &f1, a1, &m).unwrap());
                    if lhs != rhs {
                        bad_alter = Some(format!("alter at {a1:?} / {a2:?} does not commute"));
                    }
                }
            }
        }
        if round > cases * 4 {
            break;
        }
    }
    r.check("stores commute on disjoint addresses", n_commute, bad_commute);
    r.check("lookup after store freezes (non-byte)", n_freeze, bad_freeze);
    r.check("stores and lookups commute when disjoint", n_rw, bad_rw);
    r.check("alter commutes on disjoint addresses", n_alter, bad_alter);
    r.check("writable implies readable", n_freeze, bad_fact);

    // Flat oracle agreement, over subobject, byte and end addresses.
    let mut n = 0;
    let mut bad = None;
    let mut applicable = 0;
    for round in 0..cases.max(1) {
        let (m, delta) = g.memory(&env, 2);
        for o in m.ids() {
            let Some(t) = delta.type_of(o).cloned() else { continue };
            let mut all = subobject_addrs(&env, o, &t, true);
            all.extend(byte_addrs(&env, o, &t));
            all.extend(end_addrs(&env, o, &t));
            for a in all {
                n += 1;
                if let Some(expect) = flat_oracle(&env, &m, &a) {
                    applicable += 1;
                    match mem_lookup(&env, &a, &m) {
                        Ok(got) if got == expect => {}
                        other => {
                            bad = Some(format!(
                                "oracle {expect:?} but lookup {other:?} at {a:?}"
                            ));
                        }
                    }
                }
            }
        }
        if applicable >= cases && round > 2 {
            break;
        }
    }
    r.check(
        &format!("flat oracle agrees with lookup ({applicable} applicable)"),
        n,
        bad,
    );

    // The memory forms a separation algebra: laws 1-8 over generated
    // memories.
    let mut sample: Vec<Mem> = vec![Mem::new()];
    for i in 0..6 {
        let (m, _) = g.memory(&env, 1 + i % 3);
        use crate::sepalg::SepAlg as _;
        sample.push(m.difference(&token_copy(&env, &m)));
        sample.push(m.half());
        sample.push(token_copy(&env, &m));
        sample.push(m);
    }
    r.absorb_laws(check_laws("memories", &sample), 8);

    // Preservation of lookups/writability under subseteq, and union
    // distribution.
    let mut n_pres = 0;
    let mut bad_pres = None;
    let mut n_dist = 0;
    let mut bad_dist = None;
    for _ in 0..cases.max(1) {
        let (m2, delta) = g.memory(&env, 2);
        if !mem_valid(&env, &delta, &m2) {
            continue;
        }
        use crate::sepalg::SepAlg as _;
        let mc = token_copy(&env, &m2);
        let m1 = m2.difference(&mc);
        if !(m1.disjoint(&mc) && m1.union(&mc) == m2) {
            bad_pres = Some("token split failed to reassemble".to_string());
            continue;
        }
        for a in writable_addrs(&env, &m1).into_iter().take(4) {
            n_pres += 1;
            match (mem_lookup(&env, &a, &m1), mem_lookup(&env, &a, &m2)) {
                (Ok(v1), Ok(v2)) if v1 == v2 => {}
                other => bad_pres = Some(format!("lookup not preserved under ⊑: {other:?}")),
            }
            if !mem_writable(&env, &a, &m2) {
                bad_pres = Some("writability not preserved under ⊑".to_string());
            }
            // Distribution over union.
            n_dist += 1;
            let v = g.value(&env, &a.sub_type, &[]);
            let lhs = mem_insert(&env, &a, &v, &m2).unwrap();
            let rhs = mem_insert(&env, &a, &v, &m1).unwrap().union(&mc);
            if lhs != rhs {
                bad_dist = Some(format!("insert does not distribute at {a:?}"));
            }
            let lhs = mem_force(&env, &a, &m2).unwrap();
            let rhs = mem_force(&env, &a, &m1).unwrap().union(&mc);
            if lhs != rhs {
                bad_dist = Some(format!("force does not distribute at {a:?}"));
            }
            let lhs = mem_lock(&env, &a, &m2).unwrap();
            let locked1 = mem_lock(&env, &a, &m1).unwrap();
            let rhs = locked1.union(&mc);
            if lhs != rhs {
                bad_dist = Some(format!("lock does not distribute at {a:?}"));
            }
            let omega = mem_locks(&env, &locked1);
            let lhs = mem_unlock(&omega, &locked1.union(&mc));
            let rhs = mem_unlock(&omega, &locked1).union(&mc);
            if lhs != rhs {
                bad_dist = Some(format!("unlock does not distribute at {a:?}"));
            }
            // Disjointness is preserved by all four operations on the left
            // part.
            let after_ops = [
                ("insert", mem_insert(&env, &a, &v, &m1).unwrap()),
                ("force", mem_force(&env, &a, &m1).unwrap()),
                ("lock", mem_lock(&env, &a, &m1).unwrap()),
                ("unlock", mem_unlock(&omega, &locked1)),
            ];
            for (what, after) in after_ops {
                if !after.disjoint(&mc) {
                    bad_dist = Some(format!("{what} broke disjointness at {a:?}"));
                }
            }
        }
        if n_pres >= cases {
            break;
        }
    }
    r.check("lookups and writability preserved under subseteq", n_pres, bad_pres);
    r.check("operations distribute over disjoint unions", n_dist, bad_dist);

    // Lock singletons: disjoint strict addresses have disjoint ranges and
    // locking grows the lockset by exactly the singleton.
    let mut n_lock = 0;
    let mut bad_lock = None;
    for _ in 0..cases.max(1) {
        let (m, _) = g.memory(&env, 2);
        let addrs = writable_addrs(&env, &m);
        for a1 in addrs.iter().take(6) {
            n_lock += 1;
            let m2 = mem_lock(&env, a1, &m).unwrap();
            let grown = mem_locks(&env, &m2);
            let single = crate::mem::lock_singleton(&env, a1).unwrap();
            if grown != mem_locks(&env, &m).union(&single) {
                bad_lock = Some(format!("lockset did not grow by the singleton at {a1:?}"));
            }
            let m3 = mem_unlock(&single, &m2);
            if mem_locks(&env, &m3) != mem_locks(&env, &m) || !mem_writable(&env, a1, &m3) {
                bad_lock = Some(format!("unlock did not restore writability at {a1:?}"));
            }
            for a2 in addrs.iter().take(6) {
                if addr_disjoint(&env, a1, a2) {
                    let s2 = crate::mem::lock_singleton(&env, a2).unwrap();
                    if !single.is_disjoint(&s2) {
                        bad_lock =
                            Some(format!("singletons overlap for disjoint {a1:?} / {a2:?}"));
                    }
                }
            }
        }
        if n_lock >= cases {
            break;
        }
    }
    r.check("lock singletons behave", n_lock, bad_lock);

    // All operations preserve validity.
    let mut n_valid = 0;
    let mut bad_valid = None;
    for _ in 0..cases.max(1) {
        let (m, delta) = g.memory(&env, 2);
        for a in writable_addrs(&env, &m).into_iter().take(4) {
            n_valid += 1;
            let v = g.value(&env, &a.sub_type, &[]);
            let m2 = mem_insert(&env, &a, &v, &m).unwrap();
            let m3 = mem_lock(&env, &a, &m2).unwrap();
            let m4 = mem_unlock(&mem_locks(&env, &m3), &m3);
            let m5 = mem_force(&env, &a, &m4).unwrap();
            for (i, mm) in [&m2, &m3, &m4, &m5].iter().enumerate() {
                if !mem_valid(&env, &delta, mm) {
                    bad_valid = Some(format!("operation {i} broke validity at {a:?}"));
                }
            }
        }
        if n_valid >= cases {
            break;
        }
    }
    r.check("operations preserve memory validity", n_valid, bad_valid);
    r
}

// ---------------------------------------------------------------------------
// refine suite
// ---------------------------------------------------------------------------

/// Concretizes some indeterminate bits of base leaves and unknown-variant
/// unions; a target-ward transformation under the identity renaming.
fn concretize(g: &mut Gen, w: &MTree) -> MTree {
    fn walk(g: &mut Gen, w: &MTree) -> MTree {
        match w {
            MTree::Base(bt, pbs) => MTree::Base(
                bt.clone(),
                pbs.iter()
                    .map(|pb| {
                        if pb.tag == Bit::Indet && !pb.perm.unmapped() && g.bool() {
                            pbit(pb.perm.clone(), Bit::B0)
                        } else {
                            pb.clone()
                        }
                    })
                    .collect(),
            ),
            MTree::Array(t, ws) => {
                MTree::Array(t.clone(), ws.iter().map(|w| walk(g, w)).collect())
            }
            MTree::Struct(t, items) => MTree::Struct(
                t.clone(),
                items.iter().map(|(w, pad)| (walk(g, w), pad.clone())).collect(),
            ),
            MTree::Union(t, i, w, pad) => {
                MTree::Union(t.clone(), *i, Box::new(walk(g, w)), pad.clone())
            }
            MTree::UnionAll(t, pbs) => MTree::UnionAll(
                t.clone(),
                pbs.iter()
                    .map(|pb| {
                        if pb.tag == Bit::Indet && !pb.perm.unmapped() && g.bool() {
                            pbit(pb.perm.clone(), Bit::B1)
                        } else {
                            pb.clone()
                        }
                    })
                    .collect(),
            ),
        }
    }
    walk(g, w)
}

fn map_mem(m: &Mem, mut f: impl FnMut(&MTree) -> MTree) -> Mem {
    let mut out = Mem::new();
    for (o, e) in m.iter() {
        match e {
            MemEntry::Obj(w, mu) => out.insert_entry(*o, MemEntry::Obj(f(w), *mu)),
            MemEntry::Tomb(t) => out.insert_entry(*o, MemEntry::Tomb(t.clone())),
        }
    }
    out
}

fn rename_mem(m: &Mem, shift: u64) -> (Mem, Renaming) {
    // Pointers stored in the bits must be relocated along with the objects
    // they point into.
    let relocate_bit = |b: &Bit| match b {
        Bit::PtrFrag(crate::place::Ptr::Ptr(a), i) => {
            let mut a = a.clone();
            a.index = ObjId(a.index.0 + shift);
            Bit::PtrFrag(crate::place::Ptr::Ptr(a), *i)
        }
        other => other.clone(),
    };
    let mut out = Mem::new();
    let mut f = Renaming::new();
    for (o, e) in m.iter() {
        let e = match e {
            MemEntry::Obj(w, mu) => MemEntry::Obj(
                crate::tree::tree_map(&|pb| pbit(pb.perm.clone(), relocate_bit(&pb.tag)), w),
                *mu,
            ),
            MemEntry::Tomb(t) => MemEntry::Tomb(t.clone()),
        };
        out.insert_entry(ObjId(o.0 + shift), e);
        f.insert(*o, ObjId(o.0 + shift), Vec::new());
    }
    (out, f)
}

pub fn refine_suite(seed: u64, cases: usize) -> Report {
    let mut r = Report::new("refine");
    let env = fixture_env();
    let mut g = Gen::new(seed);

    let mut n_id = 0;
    let mut bad_id = None;
    let mut n_comp = 0;
    let mut bad_comp = None;
    while n_id < cases {
        let (m, delta) = g.memory(&env, 2);
        if !mem_valid(&env, &delta, &m) {
            continue;
        }
        n_id += 1;
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        if !mem_refine(&cx, &m, &m) {
            bad_id = Some("identity refinement failed".to_string());
        }
        // Chain: concretize, then forget variants via rename+unflatten.
        n_comp += 1;
        let m2 = map_mem(&m, |w| concretize(&mut g, w));
        if !mem_refine(&cx, &m, &m2) {
            bad_comp = Some("concretization is not a refinement".to_string());
            continue;
        }
        let mut forgotten = map_mem(&m2, |w| {
            tree_unflatten(&env, &w.type_of(), &tree_flatten(w)).expect("typed")
        });
        let (m3, f23) = rename_mem(&forgotten, 10);
        forgotten = m3;
        let d3 = mem_env_of(&forgotten);
        let cx23 = RefineCx::new(&env, &f23, &delta, &d3);
        if !mem_refine(&cx23, &m2, &forgotten) {
            bad_comp = Some("forgetting variants is not a refinement".to_string());
            continue;
        }
        let f13 = Renaming::compose(&f23, &f);
        let cx13 = RefineCx::new(&env, &f13, &delta, &d3);
        if !mem_refine(&cx13, &m, &forgotten) {
            bad_comp = Some("composition of refinements failed".to_string());
        }
        // Lookup preservation across a refinement.
        for o in m.ids() {
            let Some(t) = delta.type_of(o).cloned() else { continue };
            for a1 in subobject_addrs(&env, o, &t, true).into_iter().take(4) {
                if let Ok(v1) = mem_lookup(&env, &a1, &m) {
                    let mut a2 = a1.clone();
                    a2.index = ObjId(o.0 + 10);
                    match mem_lookup(&env, &a2, &forgotten) {
                        Ok(v2) => {
                            let tt = a1.sub_type.clone();
                            if !val_refine(&cx13, &v1, &v2, &tt) {
                                bad_comp =
                                    Some(format!("looked-up values do not refine at {a1:?}"));
                            }
                        }
                        Err(e) => {
                            bad_comp = Some(format!("lookup lost under refinement: {e:?}"));
                        }
                    }
                }
            }
        }
    }
    r.check("identity refinement on valid memories", n_id, bad_id);
    r.check("refinements compose and preserve lookups", n_comp, bad_comp);

    // The specific-variant to unknown-variant tree rule.
    let mut n = 0;
    let mut bad = None;
    while n < cases {
        let (_, delta) = g.memory(&env, 1);
        let t = CType::Union("U".into());
        let w = g.tree(&env, &t, &[]);
        let MTree::Union(tag, _, _, _) = &w else { continue };
        n += 1;
        let forgotten = MTree::UnionAll(tag.clone(), tree_flatten(&w));
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        if !crate::refine::tree_refine(&cx, &w, &forgotten) {
            bad = Some("union did not refine to unknown variant".to_string());
        }
        if crate::refine::tree_refine(&cx, &forgotten, &w) {
            bad = Some("refinement direction reversed".to_string());
        }
    }
    r.check("known variants refine to unknown variants", n, bad);

    // Stores and forces map refined inputs to refined outputs: apply the
    // same operation on both sides of a concretization pair.
    let mut n_ops = 0;
    let mut bad_ops = None;
    while n_ops < cases {
        let (m1, delta) = g.memory(&env, 2);
        if !mem_valid(&env, &delta, &m1) {
            continue;
        }
        let m2 = map_mem(&m1, |w| concretize(&mut g, w));
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        if !mem_refine(&cx, &m1, &m2) {
            bad_ops = Some("concretization pair stopped refining".to_string());
            continue;
        }
        for a in writable_addrs(&env, &m1).into_iter().take(3) {
            if n_ops >= cases {
                break;
            }
            n_ops += 1;
            let v = g.value(&env, &a.sub_type, &[]);
            if val_typed(&env, &delta, &v).is_err() {
                continue;
            }
            let s1 = mem_insert(&env, &a, &v, &m1).unwrap();
            let s2 = mem_insert(&env, &a, &v, &m2).unwrap();
            if !mem_refine(&cx, &s1, &s2) {
                bad_ops = Some(format!("insert lost refinement at {a:?}"));
            }
            if mem_lookup(&env, &a, &m1).is_ok() {
                let f1 = mem_force(&env, &a, &m1).unwrap();
                let f2 = mem_force(&env, &a, &m2).unwrap();
                if !mem_refine(&cx, &f1, &f2) {
                    bad_ops = Some(format!("force lost refinement at {a:?}"));
                }
            }
        }
    }
    r.check("insert and force preserve refinement", n_ops, bad_ops);

    // Constant propagation.
    let mut n = 0;
    let mut bad = None;
    while n < cases {
        let (m, delta) = g.memory(&env, 2);
        let addrs = writable_addrs(&env, &m);
        if addrs.is_empty() {
            continue;
        }
        for a in addrs.into_iter().take(4) {
            if n >= cases {
                break;
            }
            // The theorem is about whole-subobject stores.
            if a.is_byte() {
                continue;
            }
            let v = g.value(&env, &a.sub_type, &[]);
            if val_typed(&env, &delta, &v).is_err() {
                continue;
            }
            n += 1;
            let m2 = mem_insert(&env, &a, &v, &m).unwrap();
            let f = Renaming::identity(&delta);
            let cx = RefineCx::with_identity(&env, &f, &delta);
            match mem_lookup(&env, &a, &m2) {
                Ok(v2) => {
                    if !val_refine(&cx, &v2, &v, &a.sub_type) {
                        bad = Some(format!("stored constant not recoverable at {a:?}"));
                    }
                }
                Err(e) => bad = Some(format!("lookup after store failed: {e:?}")),
            }
        }
    }
    r.check("constant propagation", n, bad);

    // Byte-wise copies: value round trips and bit round trips both refine
    // the original tree (in the appropriate directions).
    let mut n = 0;
    let mut bad = None;
    let types = fixture_types();
    while n < cases {
        let (_, delta) = g.memory(&env, 2);
        let t = types[n % types.len()].clone();
        let w = g.tree(&env, &t, &[]);
        if tree_typed(&env, &delta, &w).is_err() {
            continue;
        }
        n += 1;
        let f = Renaming::identity(&delta);
        let cx = RefineCx::with_identity(&env, &f, &delta);
        let perms: Vec<Perm> = tree_flatten(&w).iter().map(|pb| pb.perm.clone()).collect();
        let copied = of_val(&env, &perms, &to_val(&env, &w).unwrap()).unwrap();
        if !crate::refine::tree_refine(&cx, &copied, &w) {
            bad = Some(format!("assignment copy does not refine the source at {t}"));
        }
        let bytewise = tree_unflatten(&env, &t, &tree_flatten(&w)).unwrap();
        if !crate::refine::tree_refine(&cx, &w, &bytewise) {
            bad = Some(format!("byte-wise copy is not refined by the source at {t}"));
        }
    }
    r.check("memcpy: both halves", n, bad);

    // Force erasure on frozen addresses.
    let mut n = 0;
    let mut bad = None;
    while n < cases {
        let (m, delta) = g.memory(&env, 2);
        if !mem_valid(&env, &delta, &m) {
            continue;
        }
        for o in m.ids() {
            let Some(t) = delta.type_of(o).cloned() else { continue };
            for a in subobject_addrs(&env, o, &t, true) {
                if n >= cases {
                    break;
                }
                if !a.frozen() || mem_lookup(&env, &a, &m).is_err() {
                    continue;
                }
                n += 1;
                let m2 = mem_force(&env, &a, &m).unwrap();
                let f = Renaming::identity(&delta);
                let cx = RefineCx::with_identity(&env, &f, &delta);
                if !mem_refine(&cx, &m2, &m) {
                    bad = Some(format!("force not erasable at frozen {a:?}"));
                }
            }
        }
    }
    r.check("force erasure on frozen addresses", n, bad);
    r
}

// ---------------------------------------------------------------------------
// aliasing suite
// ---------------------------------------------------------------------------

/// Accessing `snd` after accessing `fst` fails, for both the read
/// (force-then-lookup) and the store interpretation of the first access.
fn cross_access_fails(env: &Env, m: &Mem, fst: &Addr, snd: &Addr) -> bool {
    let read_fails = match mem_lookup(env, fst, m) {
        Err(_) => true,
        Ok(_) => {
            let forced = mem_force(env, fst, m).expect("lookup succeeded");
            mem_lookup(env, snd, &forced).is_err()
        }
    };
    let store_fails = if !mem_writable(env, fst, m) {
        true
    } else {
        let v = val_new(env, &fst.sub_type).expect("fixture type");
        let stored = mem_insert(env, fst, &v, m).expect("writable");
        mem_lookup(env, snd, &stored).is_err()
    };
    read_fails && store_fails
}

pub fn aliasing_suite(seed: u64) -> Report {
    let mut r = Report::new("aliasing");
    let env = fixture_env();
    let mut g = Gen::new(seed);

    // Objects covering the fixture: the struct with its inner union, a bare
    // union, an array, and a scalar.
    let mut m = Mem::new();
    let kinds = [
        CType::Struct("S".into()),
        CType::Union("U".into()),
        CType::array(CType::sint(), 4),
        crate::gen::short_t(),
    ];
    for (i, t) in kinds.iter().enumerate() {
        let v = if g.bool() {
            g.value(&env, t, &[])
        } else {
            val_new(&env, t).unwrap()
        };
        m = crate::mem::mem_alloc(&env, ObjId(i as u64), &v, false, &m).unwrap();
    }
    let delta = mem_env_of(&m);

    // All frozen typed addresses with non-byte read types.
    let mut addrs: Vec<Addr> = Vec::new();
    for (i, t) in kinds.iter().enumerate() {
        let o = ObjId(i as u64);
        addrs.extend(
            subobject_addrs(&env, o, t, true)
                .into_iter()
                .filter(|a| a.frozen()),
        );
        addrs.extend(end_addrs(&env, o, t).into_iter().filter(|a| a.frozen()));
    }
    for a in &addrs {
        assert!(addr_typed(&env, &delta, a).is_ok());
    }

    let mut pairs = 0;
    let mut uncovered = Vec::new();
    let mut case1 = 0;
    let mut case2 = 0;
    let mut case3 = 0;
    for a1 in &addrs {
        for a2 in &addrs {
            pairs += 1;
            let sub1 = subtype(&env, &a1.sub_type, &a2.sub_type)
                || subtype(&env, &a2.sub_type, &a1.sub_type);
            let disj = addr_disjoint(&env, a1, a2);
            let both_fail =
                cross_access_fails(&env, &m, a1, a2) && cross_access_fails(&env, &m, a2, a1);
            if sub1 {
                case1 += 1;
            } else if disj {
                case2 += 1;
            } else if both_fail {
                case3 += 1;
            } else {
                uncovered.push(format!("{a1:?} vs {a2:?}"));
            }
        }
    }
    r.check(
        &format!(
            "strict-aliasing trichotomy (subtype {case1}, disjoint {case2}, both-fail {case3})"
        ),
        pairs,
        uncovered.first().cloned(),
    );
    if pairs < 200 {
        r.check(
            "enumerated at least 200 address pairs",
            pairs,
            Some(format!("only {pairs} pairs")),
        );
    } else {
        r.check("enumerated at least 200 address pairs", pairs, None);
    }
    r
}

/// Runs a suite by name.
pub fn run_suite(name: &str, seed: u64, cases: usize) -> Option<Report> {
    match name {
        "sepalg" => Some(sepalg_suite()),
        "perm" => Some(perm_suite()),
        "tree" => Some(tree_suite(seed, cases)),
        "mem" => Some(mem_suite(seed, cases)),
        "refine" => Some(refine_suite(seed, cases)),
        "aliasing" => Some(aliasing_suite(seed)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sepalg_suite_passes() {
        let r = sepalg_suite();
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn perm_suite_passes() {
        let r = perm_suite();
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn tree_suite_smoke() {
        let r = tree_suite(1, 60);
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn mem_suite_smoke() {
        let r = mem_suite(1, 40);
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn refine_suite_smoke() {
        let r = refine_suite(1, 30);
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn aliasing_suite_passes() {
        let r = aliasing_suite(1);
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn suite_reports_are_deterministic() {
        let a = mem_suite(7, 25).render();
        let b = mem_suite(7, 25).render();
        assert_eq!(a, b);
    }
}
