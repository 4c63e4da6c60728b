use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rgrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgrank")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_raw(path: &Path) {
    let mut raw = String::from("user,item,rating\n");
    for x in 0..50 {
        for y in 0..30 {
            let r = (x * 13 + y * 7) % 10;
            if r < 4 {
                raw.push_str(&format!("u{x},i{y},{}\n", 5 - r % 3));
            }
        }
    }
    fs::write(path, raw).unwrap();
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&rgrank(&[])), 1);
    assert_eq!(code(&rgrank(&["frobnicate"])), 1);
    assert_eq!(code(&rgrank(&["train", "--loss", "softmaxx", "--train", "x"])), 1);
    assert_eq!(code(&rgrank(&["train", "--loss", "sm", "--optimizer", "als", "--train", "x"])), 1);
    assert_eq!(code(&rgrank(&["verify", "--inject-fault", "nope"])), 1);
    assert_eq!(code(&rgrank(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = rgrank(&["train", "--train", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "a b\nc\n").unwrap();
    assert_eq!(code(&rgrank(&["prep", "-i", bad.to_str().unwrap(), "-o", dir.path().to_str().unwrap()])), 2);
}

#[test]
fn verify_passes_and_detects_an_injected_fault() {
    let out = rgrank(&["verify"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with("PASS")).count(), 9);

    let out = rgrank(&["verify", "--suite", "gradients", "--inject-fault", "rgx"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).starts_with("FAIL gradients"));
    let out = rgrank(&["verify", "-s", "gradients", "--inject-fault", "rgx", "--fault-size", "1e-12"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn prep_train_eval_curve_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    write_raw(&dir.path().join("raw.csv"));

    let out = rgrank(&[
        "prep", "-i", &d("raw.csv"), "-o", &d("data"), "--delimiter", "comma", "--header", "--rating-col", "2",
        "--threshold", "4", "--kcore", "2", "--seed", "7",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("contexts="));
    for f in ["train.txt", "valid.txt", "test.txt", "ids.txt"] {
        assert!(dir.path().join("data").join(f).exists());
    }

    let config = format!(
        "train = {}\nvalid = {}\nfactors = 4\nepochs = 6\npatience = 2\nlambda = 0.05\n",
        d("data/train.txt"),
        d("data/valid.txt")
    );
    fs::write(dir.path().join("run.cfg"), config).unwrap();
    let out = rgrank(&["train", "-c", &d("run.cfg"), "--log", &d("rgx.jsonl"), "--snapshot", &d("rgx.bin")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = rgrank(&[
        "train", "-c", &d("run.cfg"), "--loss", "sm", "--optimizer", "sgd", "--batch-size", "16", "--log",
        &d("sm.jsonl"), "--snapshot", &d("sm.txt"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = rgrank(&["eval", "--snapshot", &d("rgx.bin"), "--test", &d("data/test.txt"), "--train", &d("data/train.txt")]);
    assert_eq!(code(&out), 0);
    let record = stdout(&out);
    for key in ["\"ndcg\"", "\"mrr\"", "\"map\"", "\"empty\":false"] {
        assert!(record.contains(key), "{record}");
    }

    let out = rgrank(&["curve", "--log", &format!("rgx={}", d("rgx.jsonl")), "--log", &format!("sm={}", d("sm.jsonl"))]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("run,wall_clock_s,metric"));
    assert!(lines.all(|l| l.starts_with("rgx,") || l.starts_with("sm,")));
    assert_eq!(code(&rgrank(&["curve", "--log", "no-label"])), 1);

    // training without a log file streams the records to stdout
    let out = rgrank(&["train", "-c", &d("run.cfg"), "--epochs", "2", "--patience", "5"]);
    assert_eq!(stdout(&out).lines().count(), 2);
}
