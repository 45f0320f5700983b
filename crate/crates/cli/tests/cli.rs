use std::fs;
use std::process::Command;

use fhmimo::ambiguity::range_ambiguity;
use fhmimo::experiments::{CurveTable, ExperimentConfig};
use fhmimo::rng::trial_rng;
use fhmimo::waveform::{synthesize_pulse, Modulator, Scheme};
use fhmimo_cli::{ambiguity_tables, parse_config, parse_kv, run, AmbiguityArgs, CliError, CommonArgs, Compare, RunManifest};
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fhmimo"))
}

fn preset(name: &str) -> CommonArgs {
    CommonArgs { preset: Some(name.into()), ..Default::default() }
}

#[test]
fn fig5_preset_values() {
    let cfg = parse_config(&preset("fig5")).unwrap();
    let p = cfg.validate().unwrap();
    assert_eq!((p.antennas(), p.subbands(), p.hops()), (10, 20, 10));
    assert_eq!((p.bandwidth(), p.hop_duration(), p.sample_interval()), (1e8, 2e-7, 5e-9));
    assert_eq!(p.samples_per_hop(), 40);
    assert_eq!(cfg.trials, 20_000);
    assert_eq!(cfg.channel.los.aod, std::f64::consts::FRAC_PI_2);
}

#[test]
fn fig3_preset_is_oversampled() {
    let p = parse_config(&preset("fig3")).unwrap().validate().unwrap();
    assert_eq!(p.sample_interval(), 1e-9);
    assert_eq!(p.samples_per_hop(), 200);
}

#[test]
fn empty_config_lists_required_keys() {
    let err = parse_config(&CommonArgs::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let msg = err.to_string();
    for k in ["M", "K", "H", "B", "T", "Ts"] {
        assert!(msg.contains(k), "{msg}");
    }
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# radar\npreset = fig5\ntrials=7 # inline\nseed=3\n\nsnr_grid=0:5:10\n").unwrap();
    let args = CommonArgs { config: Some(path), seed: Some(9), rx_antennas: Some(2), ..Default::default() };
    let cfg = parse_config(&args).unwrap();
    assert_eq!(cfg.trials, 7);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.grid_db, vec![0.0, 5.0, 10.0]);
    assert_eq!(cfg.rx.antennas, 2);
}

#[test]
fn bad_keys_and_values_are_named() {
    let cases = [("frobnicate=1", "frobnicate"), ("K=21", "K"), ("trials=0", "trials"), ("M=ten", "M")];
    for (kv, key) in cases {
        let args = CommonArgs { preset: Some("fig5".into()), overrides: vec![kv.into()], ..Default::default() };
        let err = parse_config(&args).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains(key), "{kv}: {err}");
    }
    assert!(parse_kv("M 10").is_err());
}

#[test]
fn timing_offset_must_fit_in_a_hop() {
    let args = CommonArgs { timing_offset_samples: Some(40), ..preset("fig5") };
    assert!(parse_config(&args).unwrap_err().to_string().contains("timing_offset_samples"));
}

fn read_manifest(dir: &std::path::Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn mse_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = bin()
            .args(["mse", "--preset", "fig5", "--seed", "1", "--trials", "50", "--snr-grid", "-4,6,16", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        csvs.push(fs::read(out.join("mse.csv")).unwrap());
        let m = read_manifest(&out);
        assert_eq!(m.subcommand, "mse");
        assert_eq!(m.files.iter().map(|f| f.path.as_str()).collect::<Vec<_>>(), ["mse.csv", "mse.gp"]);
        for f in &m.files {
            let bytes = fs::read(out.join(&f.path)).unwrap();
            assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256);
        }
    }
    assert_eq!(csvs[0], csvs[1]);
    let t = CurveTable::from_csv(std::str::from_utf8(&csvs[0]).unwrap()).unwrap();
    assert_eq!(&t.columns[..4], ["snr_db", "mse_u0", "mse_beta0", "crlb"]);
    assert_eq!(t.rows.len(), 3);
}

#[test]
fn rates_follow_table_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&preset("fig3")).unwrap();
    run("rates", &cfg, None, dir.path(), None).unwrap();
    let t = CurveTable::from_csv(&fs::read_to_string(dir.path().join("rates.csv")).unwrap()).unwrap();
    let prf = 1e5;
    let (h, m) = (10.0, 10.0);
    for row in &t.rows {
        let j = row[0];
        assert_eq!(row[1], prf * h * m * j);
        assert_eq!(row[2], prf * h * m * j);
        // floor(log2 C(20, 10)) = floor(log2 184756) = 17
        assert_eq!(row[3], prf * h * 17.0);
        assert_eq!(row[4], prf * h * (m * j + 17.0));
    }
}

#[test]
fn ambiguity_csv_matches_library_profile() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["ambiguity", "--preset", "fig3", "--modulation", "bpsk", "--compare", "none", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let t = CurveTable::from_csv(&fs::read_to_string(dir.path().join("ambiguity_bpsk.csv")).unwrap()).unwrap();
    assert_eq!(t.columns, ["lag_samples", "mag_db"]);
    assert_eq!(t.rows.len(), 2 * 2000 - 1);

    // Same pulse drawn directly from the library.
    let cfg = ExperimentConfig::preset("fig3").unwrap();
    let p = cfg.validate().unwrap();
    let modem = Modulator::new(p, Scheme::Psk, 1).unwrap();
    let mut rng = trial_rng(cfg.seed, 0x616d_6269_6775_6974, 0);
    let bits: Vec<bool> = (0..modem.bits_per_pulse()).map(|_| rand::Rng::random(&mut rng)).collect();
    let pulse = modem.modulate(&bits, &mut rng).unwrap();
    let profile = range_ambiguity(&synthesize_pulse::<f64>(&p, &pulse).unwrap());
    for (row, db) in t.rows.iter().zip(profile.magnitude_db()) {
        assert_eq!(row[1], db);
    }
    assert_eq!(t.rows[1999], vec![0.0, 0.0]);
}

#[test]
fn ambiguity_compare_modes() {
    let cfg = parse_config(&preset("fig3")).unwrap();
    let unmod = AmbiguityArgs { modulation: "fhcs".into(), compare: Compare::Unmodulated, average: 2 };
    let names: Vec<String> = ambiguity_tables(&cfg, &unmod).unwrap().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["ambiguity_fhcs", "ambiguity_none"]);

    let reord = AmbiguityArgs { modulation: "none".into(), compare: Compare::Reordered, average: 3 };
    let tables = ambiguity_tables(&cfg, &reord).unwrap();
    let diff: f64 = tables[0].1.meta("max_reorder_diff_db").unwrap().parse().unwrap();
    assert!(diff < 1e-9);
    assert_eq!(tables[0].1.meta("draws"), Some("3"));

    let bad = AmbiguityArgs { modulation: "ook".into(), ..AmbiguityArgs::default() };
    assert_eq!(ambiguity_tables(&cfg, &bad).unwrap_err().exit_code(), 2);
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["rates", "--preset", "fig5"]).env("FHMIMO_OUT", dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("rates.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn exit_codes_follow_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).env("FHMIMO_OUT", dir.path()).output().unwrap().status.code();
    assert_eq!(code(&["mse"]), Some(2));
    assert_eq!(code(&["mse", "--preset", "fig9"]), Some(2));
    assert_eq!(code(&["ser", "--preset", "fig6", "--knowledge", "psychic"]), Some(2));
    assert_eq!(code(&["rates", "--config", "/nonexistent/run.cfg"]), Some(4));

    let file = dir.path().join("blocker");
    fs::write(&file, "").unwrap();
    let out = bin().args(["rates", "--preset", "fig5", "--out"]).arg(file.join("sub")).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn multipath_emits_spectrum_and_detection() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&preset("fig7")).unwrap();
    cfg.trials = 20;
    let m = run("multipath", &cfg, None, dir.path(), None).unwrap();
    let names: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["multipath_spectrum.csv", "multipath_detection.csv", "multipath_spectrum.gp"]);
    let t = CurveTable::from_csv(&fs::read_to_string(dir.path().join("multipath_spectrum.csv")).unwrap()).unwrap();
    assert_eq!(t.columns, ["bin", "rx0_db", "rx1_db", "combined_db", "tx_antenna"]);
    assert_eq!(t.rows.len(), 200);
}

#[test]
fn ser_writes_one_column_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&preset("fig6")).unwrap();
    cfg.trials = 20;
    cfg.grid_db = vec![30.0, 40.0];
    run("ser", &cfg, None, dir.path(), None).unwrap();
    let t = CurveTable::from_csv(&fs::read_to_string(dir.path().join("ser.csv")).unwrap()).unwrap();
    assert_eq!(t.columns[0], "ebn0_db");
    assert!(t.columns.len() > 3);
    assert!(t.rows.iter().flat_map(|r| &r[1..]).all(|&s| (0.0..=1.0).contains(&s)));
}
