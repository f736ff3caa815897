use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

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

fn mini() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/mini");
    copy_tree(&src, dir.path());
    let _ = std::fs::remove_dir_all(dir.path().join("out"));
    let cfg = dir.path().join("pipeline.toml");
    (dir, cfg)
}

fn snipflow(cfg: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snipflow"))
        .arg("--config")
        .arg(cfg)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_then_rerun_reports_up_to_date() {
    let (_dir, cfg) = mini();
    let o = snipflow(&cfg, &["--jobs", "2", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("report: ran"));
    let o = snipflow(&cfg, &["run"]);
    assert!(stdout(&o).lines().all(|l| l.ends_with("up to date")), "{}", stdout(&o));
    let o = snipflow(&cfg, &["detect", "--threshold", "0.95"]);
    assert_eq!(stdout(&o).trim(), "detect: ran");
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let (dir, cfg) = mini();
    let o = snipflow(&cfg, &["detect"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`compile`"));

    let o = snipflow(&dir.path().join("absent.toml"), &["run"]);
    assert_eq!(o.status.code(), Some(2));

    let o = snipflow(&cfg, &["run", "--threshold", "2.0"]);
    assert_eq!(o.status.code(), Some(2));

    snipflow(&cfg, &["run", "--to", "1"]);
    std::fs::write(dir.path().join("out/snippets.jsonl"), "{\"artifact\":\"snippets\"}\n").unwrap();
    let o = snipflow(&cfg, &["filter"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn predict_reads_stdin_and_files() {
    let (dir, cfg) = mini();
    assert!(snipflow(&cfg, &["run", "--to", "3"]).status.success());
    let mut child = Command::new(env!("CARGO_BIN_EXE_snipflow"))
        .arg("--config")
        .arg(&cfg)
        .arg("predict")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"Cipher c = Cipher.getInstance(\"DES/ECB/PKCS5Padding\");")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let line = stdout(&o);
    let fields: Vec<&str> = line.trim().split('\t').collect();
    assert_eq!(fields[0], "-");
    assert!(["Insecure", "Secure"].contains(&fields[1]));

    let f = dir.path().join("a.java");
    std::fs::write(&f, "SecureRandom r = new SecureRandom();").unwrap();
    let o = snipflow(&cfg, &["predict", "--model", dir.path().join("out/model.json").to_str().unwrap(), f.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with(f.to_str().unwrap()));
}

#[test]
fn synthetic_cv_prints_folds() {
    let (_dir, cfg) = mini();
    let o = snipflow(&cfg, &["cv", "--synthetic", "--c", "1", "--folds", "3", "--epochs", "5", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("fold ")).count(), 3);
    assert!(text.contains("mean: accuracy"));
}
