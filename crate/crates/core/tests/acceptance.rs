//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the table.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snipflow::classifier::{
    cross_validate, grid_search_c, objective, subgradient, tokenize, train, ConfusionMatrix, TrainingSet,
};
use snipflow::clone::{
    jaccard_containment, jaccard_similarity, match_empty_trustmanager, match_snippet, CompiledUnit, MatchConfig,
};
use snipflow::pipeline::{Pipeline, PipelineConfig};
use snipflow::resolver::ApiRegistry;
use snipflow::rules::{rule_catalog, Category, Context, Label};
use snipflow::synth::{host_source, labeled_corpus, rule_fixtures, Placement, SYNTHETIC_VARIANTS};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, t: Instant) -> Result<(), String> {
    let e = t.elapsed();
    check(e < limit, || format!("took {e:.2?}, limit {limit:?}"))
}

fn rule_golden() -> Outcome {
    let t = Instant::now();
    let fixtures = rule_fixtures();
    check(fixtures.len() >= 38, || format!("only {} fixtures", fixtures.len()))?;
    let catalog = rule_catalog();
    let mut wrong = Vec::new();
    for f in &fixtures {
        let v = catalog.label_code(&f.code, f.context);
        if v.label != f.label || !v.fired_rules.contains(&f.rule) {
            wrong.push(f.rule.clone());
        }
    }
    for code in [
        "Cipher c = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");",
        "Cipher c = Cipher.getInstance(\"RSA/ECB/PKCS1Padding\");",
    ] {
        if catalog.label_code(code, Context::ClientServer).label != Label::Insecure
            || catalog.label_code(code, Context::NonClientServer).label != Label::Secure
        {
            wrong.push(code.to_string());
        }
    }
    check(wrong.is_empty(), || format!("mismatches: {wrong:?}"))?;
    within(Duration::from_secs(5), t)?;
    Ok(format!("{} fixtures plus 2 context flips in {:.2?}", fixtures.len(), t.elapsed()))
}

fn listings() -> Outcome {
    let reg = ApiRegistry::builtin();
    let cases = [
        ("verify_true", Category::Tls),
        ("static_key_iv", Category::SymmetricCrypto),
        ("string_seed", Category::SecureRandom),
        ("empty_trust_manager", Category::Tls),
    ];
    for (name, category) in cases {
        let code = common::listing(name);
        for ctx in [Context::ClientServer, Context::NonClientServer] {
            let v = rule_catalog().label_code(&code, ctx);
            check(v.label == Label::Insecure, || format!("{name} {ctx:?} labelled {:?}", v.label))?;
            let cats = v.insecure_categories(rule_catalog());
            check(cats.contains(&category), || format!("{name} categories {cats:?}"))?;
        }
    }
    let tm = common::listing("empty_trust_manager");
    let snippet = CompiledUnit::snippet("tm", &tm, &reg).map_err(|e| e.to_string())?;
    let src = host_source("com.example.net", "Host", &Placement::Inline(tm), 0);
    let app = CompiledUnit::from_sources("app", [("Host.java", src.as_str())], &reg);
    let m = match_empty_trustmanager(&snippet, &app, &MatchConfig::default())
        .ok_or("empty trust manager not detected")?;
    check(m.flags.empty_trustmanager_case, || "flag not set".into())?;
    Ok("4 regression snippets Insecure in both contexts, empty trust-manager path taken".into())
}

fn expand(v: &[u32]) -> BTreeSet<(usize, u32)> {
    v.iter()
        .enumerate()
        .flat_map(|(k, &c)| (0..c).map(move |j| (k, j)))
        .collect()
}

fn jaccard_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    for case in 0..1000 {
        let d = rng.gen_range(1..=8);
        let x: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=4)).collect();
        let y: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=4)).collect();
        let (ex, ey) = (expand(&x), expand(&y));
        let union = ex.union(&ey).count();
        let inter = ex.intersection(&ey).count();
        let want_s = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
        let got_s = jaccard_similarity(&x, &y).map_err(|e| e.to_string())?;
        check(got_s == want_s, || format!("case {case}: J_s({x:?},{y:?}) = {got_s}, oracle {want_s}"))?;
        let map = |v: &[u32]| -> BTreeMap<usize, usize> {
            v.iter().enumerate().filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c as usize)).collect()
        };
        let want_c = if ex.is_empty() { 1.0 } else { inter as f64 / ex.len() as f64 };
        let got_c = jaccard_containment(&map(&x), &map(&y));
        check(got_c == want_c, || format!("case {case}: J_c = {got_c}, oracle {want_c}"))?;
    }
    within(Duration::from_secs(5), t)?;
    Ok(format!("1000 cases exact in {:.2?}", t.elapsed()))
}

fn metric_arithmetic() -> Outcome {
    let m = ConfusionMatrix {
        tn: 181,
        fp: 7,
        fn_: 19,
        tp: 65,
    };
    let (a, p) = (m.accuracy(), m.precision());
    check((a - 0.904).abs() <= 5e-4, || format!("accuracy {a}"))?;
    check((p - 0.903).abs() <= 5e-4, || format!("precision {p}"))?;
    Ok(format!("accuracy {a:.4}, precision {p:.4}"))
}

fn classifier_properties() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fixtures = rule_fixtures();
    let docs: Vec<_> = fixtures.iter().take(12).map(|f| tokenize(&f.code)).collect();
    let y: Vec<i8> = fixtures.iter().take(12).map(|f| f.label.as_target()).collect();
    let ts = TrainingSet::from_documents(&docs, y).map_err(|e| e.to_string())?;
    let h = 1e-6;
    let mut checked = 0;
    while checked < 50 {
        let w: Vec<f64> = (0..ts.vocabulary.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let near_kink = ts
            .x
            .iter()
            .zip(&ts.y)
            .any(|(x, &yi)| (f64::from(yi) * (x.dot(&w) + b) - 1.0).abs() < 1e-3);
        if near_kink {
            continue;
        }
        let (gw, gb) = subgradient(&w, b, &ts, 0.644);
        for j in 0..w.len() {
            let mut up = w.clone();
            let mut down = w.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (objective(&up, b, &ts, 0.644) - objective(&down, b, &ts, 0.644)) / (2.0 * h);
            check((fd - gw[j]).abs() < 1e-4, || format!("coordinate {j}: {fd} vs {}", gw[j]))?;
        }
        let fd_b = (objective(&w, b + h, &ts, 0.644) - objective(&w, b - h, &ts, 0.644)) / (2.0 * h);
        check((fd_b - gb).abs() < 1e-4, || format!("bias: {fd_b} vs {gb}"))?;
        checked += 1;
    }

    let toy: Vec<(String, i8)> = (0..20)
        .map(|i| {
            if i % 2 == 0 {
                (format!("ecb md5 filler{i}"), 1)
            } else {
                (format!("gcm sha256 filler{i}"), -1)
            }
        })
        .collect();
    let tdocs: Vec<_> = toy.iter().map(|(s, _)| tokenize(s)).collect();
    let toy_set = TrainingSet::from_documents(&tdocs, toy.iter().map(|(_, l)| *l).collect())
        .map_err(|e| e.to_string())?;
    let model = train(&toy_set, 0.644, 50, 1).map_err(|e| e.to_string())?;
    let correct = toy_set
        .x
        .iter()
        .zip(&toy_set.y)
        .filter(|(x, &y)| model.predict(x).map(|p| p.label == y).unwrap_or(false))
        .count();
    check(correct == toy_set.len(), || format!("toy training accuracy {correct}/{}", toy_set.len()))?;

    let corpus = labeled_corpus(SYNTHETIC_VARIANTS, 42);
    let cdocs: Vec<_> = corpus.iter().map(|s| tokenize(&s.code)).collect();
    let cts = TrainingSet::from_documents(&cdocs, corpus.iter().map(|s| s.label.as_target()).collect())
        .map_err(|e| e.to_string())?;
    let grid = grid_search_c(&cts, &[0.644, 1.0, 5.0, 10.0, 50.0], 5, 50, 42).map_err(|e| e.to_string())?;
    let cv = cross_validate(&cts, 5, grid.best_c, 50, 42).map_err(|e| e.to_string())?;
    check(cts.len() >= 200, || format!("synthetic corpus has {} snippets", cts.len()))?;
    check(cv.mean_accuracy >= 0.85, || format!("5-fold accuracy {:.3}", cv.mean_accuracy))?;
    within(Duration::from_secs(60), t)?;
    Ok(format!(
        "gradient checks 50/50, toy 20/20, 5-fold accuracy {:.3} on {} snippets (C={}) in {:.1?}",
        cv.mean_accuracy,
        cts.len(),
        grid.best_c,
        t.elapsed()
    ))
}

fn clone_robustness() -> Outcome {
    let results = common::robustness_suite();
    let mut parts = Vec::new();
    for r in &results {
        let want = if common::PRESERVING.contains(&r.transform) { r.total } else { 0 };
        check(r.detected == want && r.wrong.is_empty(), || {
            format!("{}: {}/{} wrong {:?}", r.transform, r.detected, r.total, r.wrong)
        })?;
        parts.push(format!("{} {}/{}", r.transform, r.detected, r.total));
    }
    Ok(parts.join(", "))
}

const TEN: &str = "Cipher c = Cipher.getInstance(\"AES/GCM/NoPadding\");\nc.init(Cipher.ENCRYPT_MODE, Keys.KEY);\nbyte[] out = c.doFinal(data);";
const ELEVEN: &str = "Cipher c = Cipher.getInstance(\"AES/GCM/NoPadding\");\nc.init(Cipher.ENCRYPT_MODE, Keys.KEY);\nbyte[] out = c.doFinal(Payload.DATA);";

fn threshold_sensitivity() -> Outcome {
    let reg = ApiRegistry::builtin();
    let snippet = CompiledUnit::snippet("s", TEN, &reg).map_err(|e| e.to_string())?;
    let app = |code: &str| {
        let src = host_source("com.example.t", "Host", &Placement::Inline(code.to_string()), 1);
        CompiledUnit::from_sources("app", [("Host.java", src.as_str())], &reg)
    };
    let at = |t: f64| MatchConfig {
        similarity_threshold: t,
        ..Default::default()
    };
    let (verbatim, extended) = (app(TEN), app(ELEVEN));
    let s_vec = &snippet.methods[0].vectors;
    let mass: u32 = s_vec.iter().map(|v| v.0.iter().sum::<u32>()).sum();
    check(s_vec.len() == 1 && mass == 10, || format!("snippet block mass {mass}"))?;
    let body = extended
        .methods
        .iter()
        .find(|m| m.ir.name() == "configure")
        .ok_or("no configure method")?;
    let j = s_vec[0].similarity(&body.vectors[0]);
    check(j == 10.0 / 11.0, || format!("J_s = {j}"))?;
    check(match_snippet(&snippet, &verbatim, &at(0.91)).is_some(), || "verbatim missed at 0.91".into())?;
    check(match_snippet(&snippet, &verbatim, &at(1.0)).is_some(), || "verbatim missed at 1.0".into())?;
    check(match_snippet(&snippet, &extended, &at(0.90)).is_some(), || "10/11 missed at 0.90".into())?;
    check(match_snippet(&snippet, &extended, &at(0.91)).is_none(), || "10/11 matched at 0.91".into())?;
    Ok(format!("J_s = {j:.4}: match at 0.90, none at 0.91; verbatim matches at 0.91 and 1.0"))
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let p = entry.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_tree(&p, &dest);
        } else {
            std::fs::copy(&p, &dest).unwrap();
        }
    }
}

fn run_mini() -> Result<(tempfile::TempDir, BTreeMap<String, Vec<u8>>), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    copy_tree(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini"), dir.path());
    let _ = std::fs::remove_dir_all(dir.path().join("out"));
    let cfg = PipelineConfig::load(&dir.path().join("pipeline.toml")).map_err(|e| e.to_string())?;
    Pipeline::new(cfg)
        .and_then(|p| p.run(1..=5, false))
        .map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let files = std::fs::read_dir(&out)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    Ok((dir, files))
}

fn end_to_end() -> Outcome {
    let t = Instant::now();
    let (_a, first) = run_mini()?;
    let (_b, second) = run_mini()?;
    within(Duration::from_secs(60), t)?;
    let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    check(first.keys().eq(second.keys()) && differing.is_empty(), || {
        format!("differing artifacts: {differing:?}")
    })?;
    Ok(format!("{} artifacts identical across two runs, {:.2?} total", first.len(), t.elapsed()))
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("rule golden suite", rule_golden),
        ("regression snippets", listings),
        ("jaccard oracle", jaccard_oracle),
        ("confusion-matrix arithmetic", metric_arithmetic),
        ("classifier properties", classifier_properties),
        ("clone robustness", clone_robustness),
        ("threshold sensitivity", threshold_sensitivity),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
