use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn soc(args: &[&str]) -> Output {
    soc_env(args, &[])
}

fn soc_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_soc"));
    cmd.args(args).env_remove("SOC_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run soc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Trains a small model for a few epochs and returns its checkpoint path.
fn quick_model(dir: &Path, head: &str, extra: &[&str]) -> PathBuf {
    let ckpt = dir.join(format!("{head}.socm"));
    let overfit = data("overfit.tsv");
    let mut args = vec![
        "--seed",
        "3",
        "train",
        "--data",
        overfit.to_str().unwrap(),
        "--arch",
        "micro",
        "--head",
        head,
        "--epochs",
        "40",
        "--lr",
        "0.003",
        "--eval-fraction",
        "0",
        "--out",
        ckpt.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = soc(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    ckpt
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&soc(&["--help"])), 0);
    assert!(stdout(&soc(&["--help"])).contains("serve"));
    assert_eq!(code(&soc(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    let out = soc(&["train", "--bogus"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&soc(&["frobnicate"])), 1);
    assert_eq!(code(&soc(&[])), 1);
    assert_eq!(code(&soc(&["rank", "--store", "x", "--from", "2018-02-30", "--to", "2018-03-01"])), 1);
}

#[test]
fn missing_and_bad_inputs_exit_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.tsv");
    let out = dir.path().join("m.socm");
    let args = ["train", "--data", missing.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(code(&soc(&args)), 1);

    let junk = dir.path().join("junk.socm");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    std::fs::write(dir.path().join("junk.socm.vocab"), "<pad>\t0\n<unk>\t1\n").unwrap();
    let out = soc(&["predict", "--checkpoint", junk.to_str().unwrap(), "--text", "hi"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));

    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    let store = data("comments.jsonl");
    let rank = [
        "--config",
        cfg.to_str().unwrap(),
        "rank",
        "--store",
        store.to_str().unwrap(),
        "--from",
        "2018-11-04",
        "--to",
        "2018-11-10",
    ];
    assert_eq!(code(&soc(&rank)), 1);
    assert_eq!(code(&soc_env(&rank[2..], &[("SOC_SEED", "minus one")])), 1);
}

#[test]
fn rank_prints_csv() {
    let store = data("comments.jsonl");
    let out = soc(&["rank", "--store", store.to_str().unwrap(), "--from", "2018-11-04", "--to", "2018-11-10"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rank,token,M,W,score_orig,score_adj");
    assert_eq!(lines[1], "1,BTC,4,1,0.4,0.4");
    assert_eq!(lines[2], "2,XRP,1,0.25,1,0.25");
    assert!(lines[3].starts_with("3,DOGE,0,0,"));
    assert!(lines[4].starts_with("4,ETH,2,0.5,"));

    let inverted = soc(&["rank", "--store", store.to_str().unwrap(), "--from", "2018-11-10", "--to", "2018-11-04"]);
    assert_eq!(code(&inverted), 1);
}

#[test]
fn rank_needs_a_model_for_unscored_comments() {
    let dir = TempDir::new().unwrap();
    let store = dir.path().join("store.jsonl");
    std::fs::write(&store, "{\"token\":\"ADA\",\"date\":\"2018-11-05\",\"text\":\"great stuff\"}\n").unwrap();
    let args = ["rank", "--store", store.to_str().unwrap(), "--from", "2018-11-04", "--to", "2018-11-10"];
    let out = soc(&args);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("token ADA"));

    let ckpt = quick_model(dir.path(), "tanh", &[]);
    let mut with_model = args.to_vec();
    with_model.extend_from_slice(&["--checkpoint", ckpt.to_str().unwrap()]);
    let out = soc(&with_model);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("1,ADA,1,1,"));
}

#[test]
fn train_predict_eval_roundtrip() {
    let dir = TempDir::new().unwrap();
    let ckpt = quick_model(dir.path(), "softmax", &["--log", dir.path().join("log.csv").to_str().unwrap()]);
    assert!(ckpt.with_extension("socm.vocab").is_file());
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert!(log.starts_with("epoch,train_loss,eval_accuracy\n1,"));
    assert_eq!(log.lines().count(), 41);

    let out = soc(&["predict", "--checkpoint", ckpt.to_str().unwrap(), "--text", "this place is good."]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["bucket"], "positive");
    assert!(v["score"].as_f64().unwrap() > 0.0);

    let out = soc(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--data", data("overfit.tsv").to_str().unwrap(), "--csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("class,precision,recall,support"), "{}", stdout(&out));
}

#[test]
fn mismatched_vocabulary_is_refused() {
    let dir = TempDir::new().unwrap();
    let ckpt = quick_model(dir.path(), "tanh", &[]);
    let other = dir.path().join("other.tsv");
    std::fs::write(&other, "<pad>\t0\n<unk>\t1\nzebra\t2\n").unwrap();
    let out = soc(&["predict", "--checkpoint", ckpt.to_str().unwrap(), "--vocab", other.to_str().unwrap(), "--text", "x"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
}

#[test]
fn seed_comes_from_flag_config_or_environment() {
    let dir = TempDir::new().unwrap();
    let overfit = data("overfit.tsv");
    let run = |extra: &[&str], env: &[(&str, &str)], name: &str| {
        let ckpt = dir.path().join(name);
        let mut args: Vec<&str> = extra.to_vec();
        args.extend_from_slice(&[
            "train",
            "--data",
            overfit.to_str().unwrap(),
            "--arch",
            "micro",
            "--epochs",
            "3",
            "--batch-size",
            "8",
            "--out",
            ckpt.to_str().unwrap(),
        ]);
        let out = soc_env(&args, env);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# shared settings\nseed = 9\nhead = tanh\n").unwrap();
    let flag = run(&["--seed", "9", "--config", cfg.to_str().unwrap()], &[], "a.socm");
    let file = run(&["--config", cfg.to_str().unwrap()], &[], "b.socm");
    assert_eq!(flag, file);
    let missing = dir.path().join("none.conf");
    assert_eq!(code(&soc(&["--config", missing.to_str().unwrap(), "predict", "--checkpoint", "x"])), 1);
    let std_cfg = dir.path().join("tanh.conf");
    std::fs::write(&std_cfg, "head = tanh\n").unwrap();
    let env = run(&["--config", std_cfg.to_str().unwrap()], &[("SOC_SEED", "9")], "d.socm");
    assert_eq!(env, flag);
    let other = run(&["--config", std_cfg.to_str().unwrap()], &[("SOC_SEED", "10")], "e.socm");
    assert_ne!(other, flag);
}

#[test]
fn prepare_writes_vocab_and_embeddings() {
    let dir = TempDir::new().unwrap();
    let glove = dir.path().join("glove.txt");
    std::fs::write(&glove, "love 0.1 0.2 0.3 0.4\nzebra 1 1 1 1\n").unwrap();
    let out_dir = dir.path().join("prep");
    let out = soc(&[
        "prepare",
        "--data",
        data("s140_sample.csv").to_str().unwrap(),
        "--embeddings",
        glove.to_str().unwrap(),
        "--embed-dim",
        "4",
        "--min-count",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary["examples"], 4);
    let vocab = std::fs::read_to_string(out_dir.join("vocab.tsv")).unwrap();
    assert!(vocab.starts_with("<pad>\t0\n<unk>\t1\n"));
    // "love" appears once but has a pre-trained vector
    assert!(vocab.contains("love\t"));
    assert!(!vocab.contains("zebra"));
    let emb = std::fs::read_to_string(out_dir.join("embeddings.txt")).unwrap();
    assert!(emb.lines().any(|l| l == "love 0.1 0.2 0.3 0.4"));

    let bad = dir.path().join("bad_glove.txt");
    std::fs::write(&bad, "love 0.1 0.2\n").unwrap();
    let out = soc(&[
        "prepare",
        "--data",
        data("s140_sample.csv").to_str().unwrap(),
        "--embeddings",
        bad.to_str().unwrap(),
        "--embed-dim",
        "4",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn busy_port_exits_two() {
    let dir = TempDir::new().unwrap();
    let ckpt = quick_model(dir.path(), "tanh", &[]);
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = holder.local_addr().unwrap().to_string();
    let out = soc(&["serve", "--checkpoint", ckpt.to_str().unwrap(), "--addr", &addr]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot start server"));
}
