use std::process::Command;

fn fraccal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraccal"))
}

#[test]
fn verify_passes_and_detects_a_corrupted_symbol() {
    let ok = fraccal().args(["verify", "--m", "10", "--samples", "20"]).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = fraccal().args(["verify", "--m", "10", "--samples", "20", "--corrupt-a1"]).output().unwrap();
    assert!(!bad.status.success());
    let table = String::from_utf8_lossy(&bad.stdout);
    let line = |name: &str| table.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| panic!("{name} row")).to_string();
    assert!(line("symmetry").contains("PASS"), "{table}");
    assert!(line("max-principle").contains("FAIL"), "{table}");
}

#[test]
fn forward_and_oracle_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let status = fraccal().args(["forward", "--preset", "smoke", "--out"]).arg(out).status().unwrap();
    assert!(status.success());
    let forward = std::fs::read_to_string(out.join("forward.csv")).unwrap();
    assert!(forward.starts_with("i,x,u\n"));
    let dn = std::fs::read_to_string(out.join("dn.csv")).unwrap();
    assert!(dn.starts_with("i,x,dn\n"));

    let status = fraccal().args(["oracle", "--preset", "smoke", "--x", "2,2.5", "--out"]).arg(out).status().unwrap();
    assert!(status.success());
    let symbol = std::fs::read_to_string(out.join("symbol.csv")).unwrap();
    assert_eq!(symbol.lines().count(), 1 + 59);
    assert_eq!(std::fs::read_to_string(out.join("dn_phi.csv")).unwrap().lines().count(), 3);
}

#[test]
fn simulate_then_sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let status = fraccal().args(["simulate", "--preset", "smoke", "--seed", "3", "--out"]).arg(out).status().unwrap();
    assert!(status.success());
    let data = out.join("measurements.csv");
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 21);
    let status = fraccal()
        .args(["sample", "--preset", "smoke", "--seed", "3", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(out.join("chain"))
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["loglik.csv", "f_burn.csv", "manifest.json"] {
        assert!(out.join("chain").join(f).exists(), "{f}");
    }
}

#[test]
fn bad_input_exits_nonzero() {
    let out = fraccal().args(["run", "--preset", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}
