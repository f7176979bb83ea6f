use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pol_core::proof::decode_proof;
use pol_core::spoof::SpoofReport;
use tempfile::TempDir;

/// E=2, S=10 on a small network; k comes from the command line.
const SMALL: &str = "\
[model]
layer_dims = [8, 16, 3]
[data]
n = 240
classes = 3
[train]
batch_size = 24
epochs = 2
k = 5
";

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("small.toml"), SMALL).unwrap();
        Self { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn pol(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_pol"))
            .current_dir(self.path())
            .env_remove("POL_OUT_DIR")
            .args(args)
            .output()
            .unwrap()
    }

    /// Runs with the small config appended to the command's own arguments.
    fn small(&self, args: &[&str]) -> Output {
        let mut all = args.to_vec();
        all.extend(["--config", "small.toml"]);
        self.pol(&all)
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(o: &Output, key: &str) -> String {
    let prefix = format!("{key}: ");
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
        .unwrap_or_else(|| panic!("no '{key}' in output:\n{}", stdout(o)))
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn prove_writes_one_checkpoint_per_k_steps() {
    let sb = Sandbox::new();
    let out = sb.small(&["prove", "--name", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(field(&out, "checkpoints"), "4");
    assert_eq!(field(&out, "checkpoint_payload_bytes"), field(&out, "predicted_payload_bytes"));
    let proof = decode_proof(&fs::read(sb.path().join("run.pol")).unwrap()).unwrap();
    assert_eq!(proof.checkpoint_steps(), vec![0, 5, 10, 15]);
    assert_eq!(hex::encode(proof.content_hash()), field(&out, "proof_hash"));
}

#[test]
fn noiseless_reruns_give_identical_hashes() {
    let sb = Sandbox::new();
    let a = sb.small(&["prove", "--noise-rel", "0", "--name", "a"]);
    let b = sb.small(&["prove", "--noise-rel", "0", "--name", "b"]);
    assert_eq!(field(&a, "proof_hash"), field(&b, "proof_hash"));
    assert_eq!(fs::read(sb.path().join("a.pol")).unwrap(), fs::read(sb.path().join("b.pol")).unwrap());
    let c = sb.small(&["prove", "--noise-rel", "0", "--seed", "1", "--name", "c"]);
    assert_ne!(field(&a, "proof_hash"), field(&c, "proof_hash"));
}

#[test]
fn honest_proof_verifies_plain_and_sealed() {
    let sb = Sandbox::new();
    assert_eq!(code(&sb.pol(&["keys", "gen"])), 0);
    assert_eq!(code(&sb.small(&["prove", "--keys", "keys", "--name", "p"])), 0);
    let plain = sb.small(&["verify", "p.pol"]);
    assert_eq!(code(&plain), 0, "{}", stdout(&plain));
    let sealed = sb.small(&["verify", "p.envelope", "--report", "p.report"]);
    assert_eq!(code(&sealed), 0, "{}", stdout(&sealed));
    assert_eq!(field(&plain, "proof_hash"), field(&sealed, "proof_hash"));
    let report = fs::read_to_string(sb.path().join("p.report")).unwrap();
    assert!(report.starts_with("verdict: success\n"));
}

#[test]
fn tampered_envelope_exits_with_structural_code() {
    let sb = Sandbox::new();
    sb.pol(&["keys", "gen"]);
    sb.small(&["prove", "--keys", "keys", "--name", "p"]);
    let env = sb.path().join("p.envelope");
    let mut bytes = fs::read(&env).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    fs::write(&env, bytes).unwrap();
    let out = sb.small(&["verify", "p.envelope"]);
    assert_eq!(code(&out), 3);
    assert_eq!(field(&out, "reason"), "envelope_rejected");
}

#[test]
fn concat_spoof_is_rejected_on_a_segment() {
    let sb = Sandbox::new();
    let out = sb.small(&["spoof", "concat", "--name", "cat"]);
    assert_eq!(code(&out), 0);
    assert_eq!(field(&out, "verdict"), "fail");
    let v = sb.small(&["verify", "cat.pol"]);
    assert_eq!(code(&v), 2);
    assert_eq!(field(&v, "reason"), "segment_distance_exceeded");
    let stderr = String::from_utf8_lossy(&v.stderr);
    assert!(stderr.starts_with("reason: segment_distance_exceeded"), "{stderr}");
    let report = fs::read_to_string(sb.path().join("cat.report")).unwrap();
    assert!(report.contains("epoch,rank,start,end,magnitude,distance"));
}

#[test]
fn warm_start_without_prior_is_rejected() {
    let sb = Sandbox::new();
    sb.small(&["prove", "--name", "first"]);
    let w = sb.small(&["prove", "--warm-from", "first.pol", "--name", "second"]);
    assert_eq!(code(&w), 0);
    let v = sb.small(&["verify", "second.pol"]);
    assert_eq!(code(&v), 2);
    assert_eq!(field(&v, "reason"), "init_proof_missing");
    let with_prior = sb.small(&["verify", "second.pol", "--prior", "first.pol"]);
    assert_eq!(code(&with_prior), 0, "{}", stdout(&with_prior));
}

#[test]
fn ledger_records_and_chains() {
    let sb = Sandbox::new();
    let first = sb.small(&["prove", "--name", "first"]);
    sb.small(&["prove", "--warm-from", "first.pol", "--name", "second"]);
    let add = sb.small(&["ledger", "add", "first.pol"]);
    assert_eq!(code(&add), 0, "{}", stdout(&add));
    let hash = field(&first, "proof_hash");

    let get = sb.pol(&["ledger", "get", &hash]);
    assert_eq!(code(&get), 0);
    assert_eq!(field(&get, "accepted"), "true");
    let miss = sb.pol(&["ledger", "get", &"ab".repeat(32)]);
    assert_eq!(code(&miss), 2);

    let chained = sb.small(&["verify", "second.pol", "--ledger", "ledger.txt"]);
    assert_eq!(code(&chained), 0, "{}", stdout(&chained));
    assert_eq!(field(&chained, "prior_recomputed_steps"), "0");
    // Recording the same proof twice is refused.
    assert_eq!(code(&sb.small(&["ledger", "add", "first.pol"])), 3);
}

#[test]
fn out_dir_applies_to_every_written_file() {
    let sb = Sandbox::new();
    let out = sb.small(&["--out-dir", "nested/run", "prove", "--name", "p"]);
    assert_eq!(code(&out), 0);
    assert!(sb.path().join("nested/run/p.pol").exists());
    let via_env = Command::new(env!("CARGO_BIN_EXE_pol"))
        .current_dir(sb.path())
        .env("POL_OUT_DIR", "from_env")
        .args(["bench", "cost_curve", "--out", "cost.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&via_env), 0);
    assert!(sb.path().join("from_env/cost.csv").exists());
}

#[test]
fn config_errors_exit_3() {
    let sb = Sandbox::new();
    fs::write(sb.path().join("typo.toml"), "[train]\nepoch = 3\n").unwrap();
    let out = sb.pol(&["prove", "--config", "typo.toml"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field `epoch`"));
    assert_eq!(code(&sb.pol(&["verify"])), 3);
    assert_eq!(code(&sb.pol(&["verify", "missing.pol"])), 3);
    assert_eq!(code(&sb.small(&["prove", "--k", "0"])), 3);
}

#[test]
fn help_lists_the_defaults() {
    let sb = Sandbox::new();
    let out = sb.pol(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for key in ["[train]", "noise_rel = 0.05", "layer_dims", "[attack]"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn cost_curve_ratio_is_exactly_qk_over_s() {
    let sb = Sandbox::new();
    let out = sb.pol(&["bench", "cost_curve", "--ks", "1,2,5,10,20", "--qs", "1,3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let q: f64 = rec[col("q")].parse().unwrap();
        let k: f64 = rec[col("k")].parse().unwrap();
        let s: f64 = rec[col("steps_per_epoch")].parse().unwrap();
        let ratio: f64 = rec[col("ratio")].parse().unwrap();
        assert_eq!(ratio, q * k / s);
        rows += 1;
    }
    assert!(rows >= 6);
}

#[test]
fn spoof_reports_parse_back() {
    let sb = Sandbox::new();
    for attack in ["retrain", "regularizer"] {
        let out = sb.small(&["spoof", attack, "--name", attack]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let csv = fs::read_to_string(sb.path().join(format!("{attack}.csv"))).unwrap();
        let report = SpoofReport::from_csv(&csv).unwrap();
        assert_eq!(report.to_csv().unwrap(), csv);
        assert_eq!(report.to_text(), stdout(&out).split("report: ").next().unwrap());
    }
}

#[test]
fn attacks_fail_under_defaults() {
    let sb = Sandbox::new();
    for attack in ["concat", "inverse", "regularizer"] {
        let out = sb.pol(&["spoof", attack, "--name", attack]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(field(&out, "verdict"), "fail", "{attack}");
    }
}

#[test]
fn noiseless_retrain_succeeds() {
    let sb = Sandbox::new();
    let out = sb.small(&["spoof", "retrain", "--noise-rel", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(field(&out, "verdict"), "success");
    assert_eq!(field(&out, "final_distance"), "0");
}

#[test]
fn bench_tables_have_expected_rows() {
    let sb = Sandbox::new();
    let storage = sb.small(&["bench", "storage_curve", "--ks", "1,5,20"]);
    assert_eq!(code(&storage), 0);
    assert_eq!(stdout(&storage).lines().count(), 4);
    let sweep = sb.small(&["bench", "k_sweep", "--seeds", "2", "--ks", "1,20"]);
    assert_eq!(code(&sweep), 0);
    assert_eq!(stdout(&sweep).lines().count(), 1 + 2 * 2);
}
