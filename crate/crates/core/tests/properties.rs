mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snipflow::clone::{
    detect, jaccard_containment, jaccard_similarity, set_containment, CompiledMethod, CompiledUnit,
    MatchConfig, SemanticVector,
};
use snipflow::ingest::{code_regions, dedupe, extract_snippets, parse_dump, Diagnostics};
use snipflow::ir::compile_snippet;
use snipflow::resolver::{lex_elements, resolve, ApiRegistry, CodeElement};
use snipflow::synth::{rename_locals, reorder_independent, rule_fixtures};

// ---- Jaccard ----

/// Entry k with count c becomes the elements (k, 0) .. (k, c-1).
fn expand(v: &[u32]) -> BTreeSet<(usize, u32)> {
    v.iter()
        .enumerate()
        .flat_map(|(k, &c)| (0..c).map(move |j| (k, j)))
        .collect()
}

fn set_jaccard(x: &BTreeSet<(usize, u32)>, y: &BTreeSet<(usize, u32)>) -> f64 {
    let union = x.union(y).count();
    if union == 0 {
        1.0
    } else {
        x.intersection(y).count() as f64 / union as f64
    }
}

fn pair(max: u32) -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (1usize..=8).prop_flat_map(move |d| {
        (
            prop::collection::vec(0..=max, d),
            prop::collection::vec(0..=max, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn js_equals_set_jaccard_after_expansion((x, y) in pair(4)) {
        prop_assert_eq!(jaccard_similarity(&x, &y).unwrap(), set_jaccard(&expand(&x), &expand(&y)));
    }

    #[test]
    fn jc_is_multiset_containment((x, y) in pair(4)) {
        let as_map = |v: &[u32]| -> BTreeMap<usize, usize> {
            v.iter().enumerate().filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c as usize)).collect()
        };
        let (ex, ey) = (expand(&x), expand(&y));
        let want = if ex.is_empty() {
            1.0
        } else {
            ex.intersection(&ey).count() as f64 / ex.len() as f64
        };
        prop_assert_eq!(jaccard_containment(&as_map(&x), &as_map(&y)), want);
    }

    #[test]
    fn js_on_binary_vectors_is_classical((x, y) in pair(1)) {
        let and: u32 = x.iter().zip(&y).map(|(a, b)| a & b).sum();
        let or: u32 = x.iter().zip(&y).map(|(a, b)| a | b).sum();
        let want = if or == 0 { 1.0 } else { and as f64 / or as f64 };
        prop_assert_eq!(jaccard_similarity(&x, &y).unwrap(), want);
    }

    #[test]
    fn js_is_symmetric_bounded_and_reflexive((x, y) in pair(50)) {
        let a = jaccard_similarity(&x, &y).unwrap();
        prop_assert_eq!(a, jaccard_similarity(&y, &x).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(jaccard_similarity(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn set_containment_is_share_of_left(
        x in prop::collection::btree_set(0u8..10, 0..6),
        y in prop::collection::btree_set(0u8..10, 0..6),
    ) {
        let c = set_containment(&x, &y);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c == 1.0, x.is_subset(&y));
    }
}

#[test]
fn js_oracle_exhaustive_up_to_three_dims() {
    for d in 1..=3usize {
        let all: Vec<Vec<u32>> = (0..5u32.pow(d as u32))
            .map(|mut n| {
                (0..d)
                    .map(|_| {
                        let c = n % 5;
                        n /= 5;
                        c
                    })
                    .collect()
            })
            .collect();
        for x in &all {
            for y in &all {
                assert_eq!(jaccard_similarity(x, y).unwrap(), set_jaccard(&expand(x), &expand(y)));
            }
        }
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    assert!(jaccard_similarity(&[1, 2], &[1]).is_err());
}

// ---- IR invariances ----

fn corpus_codes() -> Vec<String> {
    let mut v: Vec<String> = common::robustness_snippets().into_iter().map(|s| s.code).collect();
    v.extend(rule_fixtures().into_iter().map(|f| f.code));
    v
}

fn shape(code: &str, reg: &ApiRegistry) -> Vec<(Vec<String>, Vec<SemanticVector>, String)> {
    let mut out: Vec<_> = compile_snippet(code, reg)
        .unwrap()
        .into_iter()
        .map(|m| {
            let c = CompiledMethod::new(m);
            let mut vs = c.vectors.clone();
            vs.sort();
            let extra = format!("{:?}|{:?}", c.ir.constants, c.ir.security_method_names);
            (c.ir.qualified_path, vs, extra)
        })
        .collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn renaming_locals_keeps_the_graph(ix in 0usize..88, seed in 0u64..1_000_000) {
        let reg = ApiRegistry::builtin();
        let codes = corpus_codes();
        let code = &codes[ix % codes.len()];
        prop_assume!(compile_snippet(code, &reg).is_ok());
        let renamed = rename_locals(code, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = compile_snippet(code, &reg).unwrap();
        let b = compile_snippet(&renamed, &reg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (ma, mb) in a.iter().zip(&b) {
            let kinds = |m: &snipflow::ir::IrMethod| m.instructions.iter().map(|i| (i.kind, i.uses.clone(), i.defines)).collect::<Vec<_>>();
            prop_assert_eq!(kinds(ma), kinds(mb));
            prop_assert_eq!(&ma.constants, &mb.constants);
            prop_assert_eq!(&ma.security_method_names, &mb.security_method_names);
        }
    }
}

#[test]
fn reordering_independent_statements_keeps_blocks() {
    let reg = ApiRegistry::builtin();
    for s in common::robustness_snippets() {
        let swapped = reorder_independent(&s.code).unwrap();
        assert_eq!(shape(&s.code, &reg), shape(&swapped, &reg), "{}", s.name);
    }
}

#[test]
fn app_file_order_does_not_change_units_or_matches() {
    let reg = ApiRegistry::builtin();
    let snippets: Vec<CompiledUnit> = common::robustness_snippets()
        .iter()
        .take(5)
        .map(|s| CompiledUnit::snippet(s.name.clone(), &s.code, &reg).unwrap())
        .collect();
    let files: Vec<(String, String)> = common::robustness_snippets()
        .iter()
        .take(5)
        .enumerate()
        .map(|(i, s)| {
            let p = snipflow::synth::Placement::Inline(s.code.clone());
            (
                format!("H{i}.java"),
                snipflow::synth::host_source(&format!("com.x{i}"), &format!("H{i}"), &p, i),
            )
        })
        .collect();
    let forward = CompiledUnit::from_sources("app", files.iter().map(|(n, t)| (n.as_str(), t.as_str())), &reg);
    let backward = CompiledUnit::from_sources("app", files.iter().rev().map(|(n, t)| (n.as_str(), t.as_str())), &reg);
    assert_eq!(forward, backward);
    let cfg = MatchConfig::default();
    let a = detect(&snippets, &[forward], &cfg);
    assert_eq!(a.len(), 5);
    assert_eq!(a, detect(&snippets, &[backward], &cfg));
}

// ---- resolver ----

fn registry_names() -> Vec<(String, Vec<String>)> {
    let reg = ApiRegistry::builtin();
    let mut out: Vec<(String, Vec<String>)> = reg
        .libraries()
        .iter()
        .flat_map(|l| l.classes.iter())
        .map(|c| (c.simple_name().to_string(), c.methods.iter().cloned().collect()))
        .collect();
    out.sort();
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn more_observed_methods_never_grow_candidates(
        ix in 0usize..1000,
        picks in prop::collection::vec(0usize..50, 0..4),
        extra in prop::collection::vec(0usize..50, 1..3),
    ) {
        let reg = ApiRegistry::builtin();
        let names = registry_names();
        let (simple, methods) = &names[ix % names.len()];
        let mut pool: Vec<String> = methods.clone();
        pool.extend(["toString", "frobnicate", "init", "getInstance"].map(String::from));
        let pick = |v: &[usize]| -> BTreeSet<String> { v.iter().map(|&i| pool[i % pool.len()].clone()).collect() };
        let base = CodeElement {
            simple_name: simple.clone(),
            observed_methods: pick(&picks),
            ..Default::default()
        };
        let mut more = base.clone();
        more.observed_methods.extend(pick(&extra));
        let small: BTreeSet<&str> = reg.candidates(&more).iter().map(|c| c.fqn.as_str()).collect();
        let large: BTreeSet<&str> = reg.candidates(&base).iter().map(|c| c.fqn.as_str()).collect();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn resolution_ignores_element_order_and_stays_in_registry(
        ixs in prop::collection::vec(0usize..88, 1..4),
        seed in 0u64..1000,
    ) {
        use rand::seq::SliceRandom;
        let reg = ApiRegistry::builtin();
        let codes = corpus_codes();
        let text: Vec<&str> = ixs.iter().map(|&i| codes[i % codes.len()].as_str()).collect();
        let elements = lex_elements(&text.join("\n"));
        let mut shuffled = elements.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = resolve(&elements, &reg);
        let b = resolve(&shuffled, &reg);
        prop_assert_eq!(&a.resolved, &b.resolved);
        for r in &a.resolved {
            prop_assert!(reg.class(&r.resolved_fqn).is_some());
            prop_assert!(!reg.is_blacklisted(&r.resolved_fqn));
            prop_assert!(r.observed_methods.iter().any(|m| m != "<init>"));
        }
    }
}

// ---- ingest ----

fn row(id: u64, kind: u8, parent: Option<u64>, body: &str) -> String {
    let esc = body
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;");
    let extra = match (kind, parent) {
        (1, _) => " Tags=\"&lt;android&gt;\" ViewCount=\"10\"".to_string(),
        (_, Some(p)) => format!(" ParentId=\"{p}\""),
        _ => String::new(),
    };
    format!("  <row Id=\"{id}\" PostTypeId=\"{kind}\" Score=\"1\"{extra} Body=\"{esc}\" />\n")
}

const CODES: [&str; 5] = [
    "int a = 1;",
    "int   a = 1;",
    "Cipher c = Cipher.getInstance(\"AES\");",
    "x",
    "return true;",
];

fn dump_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec((prop::collection::vec((0usize..5, prop::bool::ANY), 0..4), prop::bool::ANY), 1..8)
        .prop_map(|posts| {
            let mut xml = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n");
            for (i, (blocks, answer)) in posts.iter().enumerate() {
                let body: String = blocks
                    .iter()
                    .map(|&(c, pre)| {
                        if pre {
                            format!("<p>see</p><pre><code>{}</code></pre>", CODES[c])
                        } else {
                            format!("<p>use <code>{}</code> here</p>", CODES[c])
                        }
                    })
                    .collect();
                let id = i as u64 + 1;
                if *answer && i > 0 {
                    xml.push_str(&row(id, 2, Some(1), &body));
                } else {
                    xml.push_str(&row(id, 1, None, &body));
                }
            }
            xml.push_str("</posts>\n");
            xml
        })
}

fn ingest(xml: &str) -> (Vec<snipflow::ingest::SnippetRecord>, usize) {
    let filter = BTreeSet::from(["android".to_string()]);
    let (posts, mut diag): (_, Diagnostics) = parse_dump(Cursor::new(xml.as_bytes()), &filter).unwrap();
    let mut all = Vec::new();
    let mut expected = 0;
    for p in &posts {
        expected += code_regions(&p.body_html)
            .iter()
            .filter(|r| !r.text.trim().is_empty())
            .filter(|r| !r.inline || r.text.split_whitespace().count() >= 2)
            .count();
        all.extend(extract_snippets(p, &mut diag));
    }
    (all, expected)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ingest_is_deterministic_and_counts_add_up(xml in dump_strategy()) {
        let (a, expected) = ingest(&xml);
        let (b, _) = ingest(&xml);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), expected);
        let once = dedupe(a.clone());
        prop_assert_eq!(dedupe(once.clone()), once.clone());
        let hashes: BTreeSet<_> = a.iter().map(|s| s.hash).collect();
        prop_assert_eq!(once.len(), hashes.len());
    }
}
