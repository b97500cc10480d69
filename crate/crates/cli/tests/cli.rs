use std::io;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use wotsplus_cli::keystore::{marker_path, sign_file, SignFaults, SignStage, PUBLIC_KEY_FILE, SECRET_KEY_FILE};
use wotsplus_cli::CliError;

fn wotsplus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wotsplus"))
        .args(args)
        .env_remove(wotsplus_cli::SEED_ENV)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A temp dir holding a small key pair and a message file.
fn setup(seed: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    let o = wotsplus(&["keygen", "--n", "128", "--m", "128", "--w", "16", "--out", p(dir.path()), "--seed", seed]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(dir.path().join("msg.txt"), b"attack at dawn").unwrap();
    dir
}

#[test]
fn keygen_is_deterministic_under_seed_and_env() {
    let a = setup("5");
    let b = setup("5");
    let read = |d: &TempDir| std::fs::read(d.path().join(PUBLIC_KEY_FILE)).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&setup("6")));

    let c = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wotsplus"))
        .args(["keygen", "--n", "128", "--m", "128", "--w", "16", "--out", p(c.path())])
        .env(wotsplus_cli::SEED_ENV, "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(&a), read(&c));
    assert!(stdout(&o).contains("fingerprint: "));
}

#[test]
fn usage_errors_exit_3() {
    let d = TempDir::new().unwrap();
    for args in [
        vec!["keygen", "--w", "10", "--out", p(d.path())],
        vec!["keygen", "--n", "100", "--out", p(d.path())],
        vec!["frobnicate"],
        vec!["seclevel", "--w", "3"],
        vec!["harness", "--params", "128,256,16", "--trials", "10"],
        vec!["harness", "--params", "toy", "--adversary", "oracle"],
    ] {
        assert_eq!(wotsplus(&args).status.code(), Some(3), "{args:?}");
    }
    assert_eq!(wotsplus(&["--help"]).status.code(), Some(0));
}

#[test]
fn sign_verify_and_refuse_reuse() {
    let d = setup("1");
    let (sk, pk) = (d.path().join(SECRET_KEY_FILE), d.path().join(PUBLIC_KEY_FILE));
    let (msg, sig) = (d.path().join("msg.txt"), d.path().join("msg.sig"));
    let o = wotsplus(&["sign", "--key", p(&sk), "--in", p(&msg), "--out", p(&sig)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("usage marker"));
    assert!(marker_path(&sk).exists());

    let o = wotsplus(&["verify", "--pub", p(&pk), "--in", p(&msg), "--sig", p(&sig)]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "OK"));

    // A second signature is refused and nothing is written.
    let sig2 = d.path().join("again.sig");
    let o = wotsplus(&["sign", "--key", p(&sk), "--in", p(&msg), "--out", p(&sig2)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("already"));
    assert!(!sig2.exists());

    // Even with the marker gone, the key file itself records use.
    std::fs::remove_file(marker_path(&sk)).unwrap();
    let o = wotsplus(&["sign", "--key", p(&sk), "--in", p(&msg), "--out", p(&sig2)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!sig2.exists());

    // A different message under the same signature is rejected.
    let other = d.path().join("other.txt");
    std::fs::write(&other, b"attack at dusk").unwrap();
    let o = wotsplus(&["verify", "--pub", p(&pk), "--in", p(&other), "--sig", p(&sig)]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(1), "REJECT"));

    // Flip one byte past the header.
    let mut bytes = std::fs::read(&sig).unwrap();
    bytes[20] ^= 0x01;
    let bad = d.path().join("bad.sig");
    std::fs::write(&bad, &bytes).unwrap();
    let o = wotsplus(&["verify", "--pub", p(&pk), "--in", p(&msg), "--sig", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));

    // Truncated, garbage and missing files are malformed.
    std::fs::write(&bad, &bytes[..bytes.len() - 1]).unwrap();
    let o = wotsplus(&["verify", "--pub", p(&pk), "--in", p(&msg), "--sig", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&bad, b"not a signature").unwrap();
    let o = wotsplus(&["verify", "--pub", p(&pk), "--in", p(&msg), "--sig", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let o = wotsplus(&["verify", "--pub", p(&pk), "--in", p(&msg), "--sig", "/nonexistent/x.sig"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn keygen_into_fresh_dir_clears_stale_marker() {
    let d = setup("2");
    let sk = d.path().join(SECRET_KEY_FILE);
    std::fs::write(marker_path(&sk), b"stale").unwrap();
    let o = wotsplus(&["keygen", "--n", "128", "--m", "128", "--out", p(d.path()), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!marker_path(&sk).exists());
}

struct FailAt(SignStage);

impl SignFaults for FailAt {
    fn check(&self, stage: SignStage) -> io::Result<()> {
        if stage == self.0 {
            Err(io::Error::other("injected"))
        } else {
            Ok(())
        }
    }
}

#[test]
fn interrupted_signing_never_releases_a_signature() {
    for stage in [SignStage::CreateMarker, SignStage::SyncMarker, SignStage::WriteSignature] {
        let d = setup("9");
        let sk = d.path().join(SECRET_KEY_FILE);
        let (msg, sig) = (d.path().join("msg.txt"), d.path().join("msg.sig"));
        let err = sign_file(&sk, &msg, &sig, &FailAt(stage)).err().unwrap();
        assert!(matches!(err, CliError::Io { .. }), "{stage:?}: {err}");
        assert!(!sig.exists(), "{stage:?}");

        // Once the marker exists the key is spent, even though no signature
        // came out. Before that point a retry succeeds.
        let retry = sign_file(&sk, &msg, &sig, &wotsplus_cli::keystore::NoFaults);
        if stage == SignStage::CreateMarker {
            assert!(retry.is_ok());
            assert!(sig.exists());
        } else {
            assert!(matches!(retry, Err(CliError::Core(wotsplus::Error::KeyAlreadyUsed))), "{stage:?}");
            assert!(!sig.exists());
        }
    }
}

#[test]
fn seclevel_output() {
    let o = wotsplus(&["seclevel"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("b = 240.89 bits"), "{}", stdout(&o));
    let o = wotsplus(&["seclevel", "--floor", "--attack", "quantum"]);
    assert!(stdout(&o).contains("b = 112 bits"), "{}", stdout(&o));

    let o = wotsplus(&["seclevel", "--compare", "--format", "records"]);
    assert_eq!(o.status.code(), Some(0));
    let records: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 5);
    let level = |attack: &str, kind: &str| {
        records
            .iter()
            .find(|r| r["record"] == "level" && r["attack"] == attack && r["kind"] == kind)
            .unwrap()["level"]
            .as_f64()
            .unwrap()
    };
    assert!((level("classical", "new") - 240.89).abs() < 0.005);
    assert!((level("classical", "prior") - 241.93).abs() < 0.005);
    assert!((level("quantum", "new") - 112.89).abs() < 0.005);
    assert!((level("quantum", "prior") - 113.93).abs() < 0.005);
    let gap = records.last().unwrap();
    assert_eq!(gap["record"], "gap");
    assert_eq!(gap["l"], 67);
    assert!((gap["gap"].as_f64().unwrap() - 1.043).abs() < 1e-3);
}

#[test]
fn harness_give_up_and_reproducibility() {
    let o = wotsplus(&["harness", "--adversary", "give-up", "--trials", "200", "--seed", "1", "--format", "records"]);
    assert_eq!(o.status.code(), Some(0));
    let eps = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|r| r["record"] == "estimate" && r["name"] == "epsilon")
        .unwrap();
    assert_eq!(eps["value"], 0.0);

    let args = ["harness", "--trials", "300", "--seed", "4", "--format", "records"];
    let (a, b) = (wotsplus(&args), wotsplus(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&wotsplus(&["harness", "--trials", "300", "--seed", "4"]));
    assert!(text.contains("counting-bound: "), "{text}");
}
