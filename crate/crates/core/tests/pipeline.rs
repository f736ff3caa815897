use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use snipflow::pipeline::report::ReportCategory;
use snipflow::pipeline::stages::{self, ReportDocument};
use snipflow::pipeline::{Pipeline, PipelineConfig, PipelineError, StageOutcome};

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

/// Fresh copy of the mini fixture with no output directory.
fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini");
    copy_tree(&src, dir.path());
    let _ = std::fs::remove_dir_all(dir.path().join("out"));
    let cfg = dir.path().join("pipeline.toml");
    (dir, cfg)
}

fn pipeline(cfg: &Path) -> Pipeline {
    Pipeline::new(PipelineConfig::load(cfg).unwrap()).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn summary(out: &Path) -> ReportDocument {
    serde_json::from_str(&std::fs::read_to_string(out.join(stages::SUMMARY)).unwrap()).unwrap()
}

#[test]
fn full_run_writes_every_artifact_and_rerun_is_a_noop() {
    let (dir, cfg) = workspace();
    let p = pipeline(&cfg);
    let first = p.run(1..=5, false).unwrap();
    assert!(first.iter().all(|(_, o)| *o == StageOutcome::Ran));
    let names: Vec<&str> = first.iter().map(|(n, _)| *n).collect();
    assert_eq!(
        names,
        ["ingest", "filter", "label", "train", "classify", "compile", "detect", "report"]
    );
    let out = dir.path().join("out");
    for f in [
        stages::SNIPPETS,
        stages::INGEST_STATS,
        stages::FILTER,
        stages::LABELS,
        stages::VERDICTS,
        stages::SNIPPET_IR,
        stages::CORPUS_IR,
        stages::MATCHES,
        stages::FEEDBACK,
        stages::SUMMARY,
        stages::TIERS_CSV,
        stages::WARNINGS_CSV,
        "model.json",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let before = snapshot(&out);

    let again = pipeline(&cfg).run(1..=5, false).unwrap();
    assert!(again.iter().all(|(_, o)| *o == StageOutcome::Skipped), "{again:?}");
    assert_eq!(before, snapshot(&out));

    pipeline(&cfg).run(1..=5, true).unwrap();
    assert_eq!(before, snapshot(&out), "forced rerun must reproduce the same bytes");
}

#[test]
fn summary_counts_planted_apps() {
    let (dir, cfg) = workspace();
    pipeline(&cfg).run(1..=5, false).unwrap();
    let doc = summary(&dir.path().join("out"));
    let s = &doc.summary;
    assert_eq!(s.corpus_apps, 20);
    let tls = s.categories.iter().find(|c| c.category == ReportCategory::Tls).unwrap();
    assert_eq!(tls.insecure_apps, 6);
    assert_eq!(tls.insecure_pct, 30.0);
    let sym = s
        .categories
        .iter()
        .find(|c| c.category == ReportCategory::SymmetricCrypto)
        .unwrap();
    assert_eq!(sym.insecure_apps, 1);
    assert_eq!(s.insecure_apps, 7);
    assert_eq!(s.apps_with_matches, 9);
    assert_eq!(s.top_offenders[0].detection_count, 3);
    assert!(doc.feedback.is_some());
}

#[test]
fn tampered_compile_output_blocks_detect() {
    let (dir, cfg) = workspace();
    let p = pipeline(&cfg);
    p.run(1..=5, false).unwrap();
    let ir = dir.path().join("out").join(stages::CORPUS_IR);
    let mut text = std::fs::read_to_string(&ir).unwrap();
    text.push('\n');
    std::fs::write(&ir, text).unwrap();
    let err = p.run_stage("detect", false).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    match &err {
        PipelineError::Upstream { stage, .. } => assert_eq!(stage, "compile"),
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("`compile`"));
    // Rerunning the producer repairs the chain.
    assert_eq!(p.run_stage("compile", false).unwrap(), StageOutcome::Ran);
    assert_eq!(p.run_stage("detect", false).unwrap(), StageOutcome::Skipped);
}

#[test]
fn missing_upstream_names_the_stage_to_run() {
    let (_dir, cfg) = workspace();
    let p = pipeline(&cfg);
    let expect = |stage: &str, producer: &str| match p.run_stage(stage, false) {
        Err(PipelineError::Upstream { stage: s, .. }) => assert_eq!(s, producer, "{stage}"),
        other => panic!("{stage}: {other:?}"),
    };
    expect("filter", "ingest");
    expect("detect", "compile");
    p.run_stage("ingest", false).unwrap();
    expect("compile", "filter");
    expect("report", "classify");
}

#[test]
fn changed_inputs_and_params_rerun_only_what_depends_on_them() {
    let (dir, cfg) = workspace();
    pipeline(&cfg).run(1..=5, false).unwrap();

    let mut c = PipelineConfig::load(&cfg).unwrap();
    c.matching.similarity_threshold = 0.95;
    let ran: Vec<_> = Pipeline::new(c)
        .unwrap()
        .run(1..=5, false)
        .unwrap()
        .into_iter()
        .filter(|(_, o)| *o == StageOutcome::Ran)
        .map(|(n, _)| n)
        .collect();
    assert_eq!(ran, ["detect"]);

    let app = dir.path().join("corpus/app11/src/com/example/app11/MainActivity.java");
    let text = std::fs::read_to_string(&app).unwrap().replace("item 11", "item eleven");
    std::fs::write(&app, text).unwrap();
    let ran: Vec<_> = pipeline(&cfg)
        .run(1..=5, false)
        .unwrap()
        .into_iter()
        .filter(|(_, o)| *o == StageOutcome::Ran)
        .map(|(n, _)| n)
        .collect();
    assert_eq!(ran, ["compile", "detect", "report"]);
}

#[test]
fn config_round_trips_and_rejects_bad_input() {
    let (dir, cfg) = workspace();
    let loaded = PipelineConfig::load(&cfg).unwrap();
    assert_eq!(PipelineConfig::from_toml_str(&loaded.to_toml()).unwrap(), loaded);
    assert_eq!(loaded.paths.corpus, dir.path().join("corpus"));

    let text = std::fs::read_to_string(&cfg).unwrap();
    assert!(PipelineConfig::from_toml_str(&format!("{text}\nbogus = 1\n")).is_err());

    let mut missing = loaded.clone();
    missing.paths.dump = dir.path().join("nope.xml");
    let err = Pipeline::new(missing).err().unwrap();
    assert_eq!(err.exit_code(), 2);

    let mut bad = loaded;
    bad.matching.similarity_threshold = 1.5;
    assert!(matches!(Pipeline::new(bad), Err(PipelineError::Config(_))));
}
