mod common;

use common::{robustness_snippets, robustness_suite, PRESERVING};

#[test]
fn there_are_twenty_snippets_with_two_security_calls() {
    let reg = snipflow::resolver::ApiRegistry::builtin();
    let snippets = robustness_snippets();
    assert_eq!(snippets.len(), 20);
    for s in &snippets {
        let ms = snipflow::ir::compile_snippet(&s.code, &reg).unwrap();
        let names: std::collections::BTreeSet<_> =
            ms.iter().flat_map(|m| m.security_method_names.iter()).collect();
        assert!(names.len() >= 2, "{}: {names:?}", s.name);
    }
}

#[test]
fn preserving_edits_are_always_found_and_breaking_edits_never() {
    for r in robustness_suite() {
        let expected = if PRESERVING.contains(&r.transform) { r.total } else { 0 };
        assert_eq!(r.detected, expected, "{}: wrong on {:?}", r.transform, r.wrong);
    }
}
