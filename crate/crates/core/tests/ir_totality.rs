use serde::Deserialize;
use snipflow::ir::{build_pdg, compile_snippet, Rejection};
use snipflow::resolver::ApiRegistry;

#[derive(Deserialize)]
struct Fixtures {
    fixture: Vec<Fixture>,
}

#[derive(Deserialize)]
struct Fixture {
    rule: String,
    code: String,
}

#[test]
fn every_fixture_compiles_or_is_rejected_with_reason() {
    let reg = ApiRegistry::builtin();
    let fx: Fixtures = toml::from_str(include_str!("../fixtures/rule_fixtures.toml")).unwrap();
    let mut compiled = 0;
    for f in &fx.fixture {
        match compile_snippet(&f.code, &reg) {
            Ok(methods) => {
                compiled += 1;
                for m in &methods {
                    let pdg = build_pdg(m);
                    let covered: usize = pdg.semantic_blocks.iter().map(Vec::len).sum();
                    assert_eq!(covered, m.instructions.len(), "{}", f.rule);
                    for (a, b) in &pdg.edges {
                        assert!(a < b, "{}: edge {a}->{b} not forward", f.rule);
                    }
                }
            }
            Err(r) => panic!("{} rejected: {r}", f.rule),
        }
    }
    assert_eq!(compiled, fx.fixture.len());
}

#[test]
fn listings_compile() {
    let reg = ApiRegistry::builtin();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/listings");
    for name in ["verify_true", "static_key_iv", "string_seed", "empty_trust_manager"] {
        let code = std::fs::read_to_string(format!("{dir}/{name}.java")).unwrap();
        let r = compile_snippet(&code, &reg);
        assert!(r.is_ok(), "{name}: {:?}", r.err());
    }
}

#[test]
fn prose_is_a_typed_rejection() {
    let reg = ApiRegistry::builtin();
    let r = compile_snippet("You should use a proper TrustManager here.", &reg);
    assert!(matches!(r, Err(Rejection::Syntax { .. })));
}
