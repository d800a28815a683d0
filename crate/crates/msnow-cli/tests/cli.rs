//! End-to-end checks of the command-line surface: exact PN-set output,
//! verification lines, exit codes, and byte-identical artifacts.

use std::process::Command;

fn msnow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msnow"))
}

#[test]
fn gen_pn_emits_the_evaluation_sets_exactly() {
    let out = msnow()
        .args(["gen-pn", "--n", "3", "--seed1", "101", "--seed2", "101"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "1011100\n1010011\n0001111\n1111011\n0010010\n1000001\n1100110\n0101000\n0110101\n"
    );

    let out = msnow()
        .args(["gen-pn", "--n", "3", "--seed1", "010", "--seed2", "010"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "0101110\n0100111\n0001001\n1100000\n0110011\n0010100\n1011010\n1000111\n1111101\n"
    );
}

#[test]
fn verify_pn_reports_the_three_valued_property() {
    let out = msnow().args(["verify-pn", "--n", "3"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("three-valued: PASS {-5, -1, 3}"),
        "unexpected output: {stdout}"
    );
}

#[test]
fn gen_pn_round_trips_through_verify_pn_file_import() {
    let dir = std::env::temp_dir().join("msnow_cli_roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pns1.txt");
    let out = msnow()
        .args(["gen-pn", "--n", "3", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = msnow()
        .args(["verify-pn", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn estimate_prints_the_reference_numbers() {
    let out = msnow().arg("estimate").output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("57.14 kbps"), "{stdout}");
    assert!(stdout.contains("80537118"), "{stdout}");
    assert!(stdout.contains("40268559"), "{stdout}");
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = std::env::temp_dir().join("msnow_cli_cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "sensors_per_subcarrier = 10\n").unwrap();
    let out = msnow()
        .args(["run-uplink", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("sensors_per_subcarrier"), "{stderr}");

    std::fs::write(&path, "snr_db = abc\n").unwrap();
    let out = msnow()
        .args(["run-uplink", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("snr_db"));
}

#[test]
fn usage_errors_exit_with_code_1() {
    let out = msnow()
        .args(["sweep", "--kind", "sensors", "--from", "10", "--to", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn same_seed_produces_byte_identical_artifacts() {
    let dir_a = std::env::temp_dir().join("msnow_cli_det_a");
    let dir_b = std::env::temp_dir().join("msnow_cli_det_b");
    for dir in [&dir_a, &dir_b] {
        let _ = std::fs::remove_dir_all(dir);
        std::fs::create_dir_all(dir).unwrap();
    }
    let cfg = std::env::temp_dir().join("msnow_cli_det.cfg");
    std::fs::write(
        &cfg,
        "active_subcarriers = 3\nsensors_per_subcarrier = 3\npackets_per_sensor = 10\n",
    )
    .unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = msnow()
            .args(["run-uplink", "--seed", "12345", "--config"])
            .arg(&cfg)
            .args(["--dump-events", "--out"])
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["uplink.json", "uplink_summary.csv", "uplink_events.csv"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn env_override_changes_the_config() {
    let out = msnow()
        .args(["run-uplink", "--seed", "3", "--reps", "1"])
        .env("MSNOW_ACTIVE_SUBCARRIERS", "2")
        .env("MSNOW_SENSORS_PER_SUBCARRIER", "1")
        .env("MSNOW_PACKETS_PER_SENSOR", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("10 / 10 packets"), "{stdout}");
}
