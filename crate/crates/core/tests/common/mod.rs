#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use snipflow::clone::{match_snippet, CompiledUnit, MatchConfig};
use snipflow::resolver::ApiRegistry;
use snipflow::synth::{self, Placement};

#[derive(Deserialize)]
struct File {
    snippet: Vec<Snippet>,
}

#[derive(Deserialize, Clone)]
pub struct Snippet {
    pub name: String,
    pub code: String,
}

pub fn robustness_snippets() -> Vec<Snippet> {
    let text = include_str!("../../fixtures/clone_robustness.toml");
    toml::from_str::<File>(text).unwrap().snippet
}

pub fn listing(name: &str) -> String {
    let path = format!("{}/fixtures/listings/{name}.java", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

#[derive(Debug)]
pub struct TransformResult {
    pub transform: &'static str,
    pub detected: usize,
    pub total: usize,
    /// Snippets detected when they should not be, or missed when they should.
    pub wrong: Vec<String>,
}

pub const PRESERVING: [&str; 4] = ["verbatim", "renaming", "reordering", "insertion"];
pub const BREAKING: [&str; 3] = ["constant-mutation", "security-call-removal", "method-split"];

fn placement(transform: &str, s: &Snippet, i: usize, reg: &ApiRegistry) -> Placement {
    let code = &s.code;
    let need = |o: Option<String>| o.unwrap_or_else(|| panic!("{transform} not applicable to {}", s.name));
    match transform {
        "verbatim" => Placement::Inline(code.clone()),
        "renaming" => {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let renamed = synth::rename_locals(code, &mut rng);
            assert_ne!(&renamed, code, "{}: nothing renamed", s.name);
            Placement::Inline(renamed)
        }
        "reordering" => Placement::Inline(need(synth::reorder_independent(code))),
        "insertion" => Placement::Inline(synth::insert_unrelated(code)),
        "constant-mutation" => Placement::Inline(need(synth::mutate_constant(code))),
        "security-call-removal" => Placement::Inline(need(synth::remove_security_call(code, reg))),
        "method-split" => {
            let k = synth::split_point(code, reg)
                .unwrap_or_else(|| panic!("{}: no split separating security calls", s.name));
            Placement::Split(code.clone(), k)
        }
        other => panic!("unknown transform {other}"),
    }
}

pub fn robustness_suite() -> Vec<TransformResult> {
    let reg = ApiRegistry::builtin();
    let cfg = MatchConfig::default();
    let snippets = robustness_snippets();
    let units: Vec<CompiledUnit> = snippets
        .iter()
        .map(|s| CompiledUnit::snippet(s.name.clone(), &s.code, &reg).unwrap())
        .collect();
    let mut out = Vec::new();
    for transform in PRESERVING.iter().chain(BREAKING.iter()) {
        let should_match = PRESERVING.contains(transform);
        let mut detected = 0;
        let mut wrong = Vec::new();
        for (i, (s, unit)) in snippets.iter().zip(&units).enumerate() {
            let p = placement(transform, s, i, &reg);
            let src = synth::host_source(&format!("com.example.host{i}"), "Host", &p, i);
            let app = CompiledUnit::from_sources(format!("app{i}"), [("Host.java", src.as_str())], &reg);
            assert!(app.rejected.is_empty(), "{transform}/{}: {:?}\n{src}", s.name, app.rejected);
            let hit = match_snippet(unit, &app, &cfg).is_some();
            if hit {
                detected += 1;
            }
            if hit != should_match {
                wrong.push(s.name.clone());
            }
        }
        out.push(TransformResult {
            transform,
            detected,
            total: snippets.len(),
            wrong,
        });
    }
    out
}
