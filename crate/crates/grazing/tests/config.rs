use std::f64::consts::PI;

use grazing::config::{Angle, ExperimentConfig, Family};
use grazing::output::{blob_hash, combined_hash, ArtifactWriter, CheckRow, FileHash};
use proptest::prelude::*;

const SAMPLE: &str = r#"
version = 1
family = "grazing"
gamma = -0.5
nu = 0.6
eps = "pi/8"
n = 256
dt = 0.001
t_end = 0.05
theta_min = "pi/512"
seed = 7
eps_list = ["pi/2", "pi/4", 0.3, "3*pi/32"]
"#;

#[test]
fn angle_literals() {
    let cases = [
        ("pi", PI),
        ("pi/2", PI / 2.0),
        ("PI / 16", PI / 16.0),
        ("3*pi/4", 0.75 * PI),
        ("2*pi", 2.0 * PI),
        ("-pi/3", -PI / 3.0),
        ("0.25", 0.25),
        ("1e-3", 1e-3),
    ];
    for (s, want) in cases {
        let a: Angle = s.parse().unwrap();
        assert_eq!(a.value(), want, "{s}");
    }
    for bad in ["", "pi/0", "tau", "2pi", "pi/x", "pi*2", "nan"] {
        assert!(bad.parse::<Angle>().is_err(), "{bad:?}");
    }
}

#[test]
fn sample_config_round_trips() {
    let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
    assert_eq!(cfg.family, Some(Family::Grazing));
    assert_eq!(cfg.eps.as_ref().unwrap().literal(), Some("pi/8"));
    assert_eq!(cfg.eps_values().unwrap(), vec![PI / 2.0, PI / 4.0, 0.3, 3.0 * PI / 32.0]);
    let text = cfg.to_toml();
    assert!(text.contains("\"pi/8\"") && text.contains("\"3*pi/32\""), "{text}");
    let back = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_toml(), text);
}

#[test]
fn kernel_spec_is_echoed_verbatim() {
    let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
    let spec = serde_json::to_value(cfg.kernel_spec().unwrap()).unwrap();
    assert_eq!(spec["family"], "grazing");
    assert_eq!(spec["eps"], "pi/8");
    let k = cfg.kernel().unwrap();
    assert_eq!(k.support().1, PI / 8.0);
    let b = cfg.boltzmann().unwrap();
    assert_eq!(b.theta_min, PI / 512.0);
}

#[test]
fn malformed_configs_name_the_field() {
    let e = ExperimentConfig::from_toml("version = 1\nfamily = \"grazing\"\nbogus = 3\n").unwrap_err();
    let m = e.to_string();
    assert!(m.contains("bogus") && m.contains("line 3"), "{m}");
    let e = ExperimentConfig::from_toml("version = 1\neps = \"pi/zero\"\n").unwrap_err();
    assert!(e.to_string().contains("eps"), "{e}");
    let e = ExperimentConfig::from_toml("family = \"soft\"\n").unwrap_err();
    assert!(e.to_string().contains("version"));
    assert!(ExperimentConfig::from_toml("version = 2\n").is_err());
    let e = ExperimentConfig::from_toml("version = 1\nfamily = \"hard\"\n").unwrap_err();
    assert!(e.to_string().contains("family"), "{e}");
}

#[test]
fn later_layer_wins() {
    let file = ExperimentConfig::from_toml(SAMPLE).unwrap();
    let flags = ExperimentConfig {
        seed: Some(99),
        eps: Some("pi/4".parse().unwrap()),
        ..Default::default()
    };
    let m = file.clone().merge(flags);
    assert_eq!(m.seed, Some(99));
    assert_eq!(m.eps.unwrap().value(), PI / 4.0);
    assert_eq!(m.n, file.n);
    assert_eq!(m.version, Some(1));
}

#[test]
fn missing_keys_are_reported() {
    let cfg = ExperimentConfig::from_toml("version = 1\nfamily = \"grazing\"\ngamma = -0.5\n").unwrap();
    let e = cfg.kernel().unwrap_err().to_string();
    assert!(e.contains("nu"), "{e}");
    let e = cfg.boltzmann().unwrap_err().to_string();
    assert!(e.contains("nu") || e.contains("dt"), "{e}");
}

#[test]
fn coulomb_defaults() {
    let cfg = ExperimentConfig::from_toml("version = 1\nfamily = \"coulomb\"\neps = 0.1\ndt = 0.01\nt_end = 0.1\n").unwrap();
    let spec = cfg.kernel_spec().unwrap();
    assert_eq!(spec.h_eps, Some(0.1));
    assert_eq!(cfg.landau().unwrap().gamma, -3.0);
    let plan = cfg.coupling_plan().unwrap();
    assert!(plan.truncation.is_none());
}

#[test]
fn sweep_preconditions() {
    let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
    cfg.eps_list = Some(vec!["pi/2".parse().unwrap()]);
    assert!(cfg.sweep().is_err());
}

#[test]
fn hashes_follow_the_bytes() {
    // git's blob id for "hello\n" under SHA-256
    assert_eq!(
        blob_hash(b"hello\n"),
        "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
    );
    let f = |n: &str, b: &[u8]| FileHash {
        name: n.into(),
        bytes: b.len() as u64,
        sha256: blob_hash(b),
    };
    let a = combined_hash(&[f("x", b"1"), f("y", b"2")]);
    assert_eq!(a, combined_hash(&[f("x", b"1"), f("y", b"2")]));
    assert_ne!(a, combined_hash(&[f("x", b"1"), f("y", b"3")]));
}

#[test]
fn manifest_lists_every_file() {
    let dir = std::env::temp_dir().join(format!("grazing-manifest-{}", std::process::id()));
    let mut w = ArtifactWriter::new(&dir).unwrap();
    let rows = vec![CheckRow::at_most("demo", "x=1", 0.5, 1.0), CheckRow::at_least("demo", "x=2", 0.5, 1.0)];
    assert!(rows[0].pass && !rows[1].pass);
    w.checks("checks.csv", &rows).unwrap();
    let m = w.finish::<()>("version = 1\n", None, Some(3)).unwrap();
    let text = std::fs::read_to_string(dir.join("checks.csv")).unwrap();
    assert!(text.starts_with("check,parameter,measured,threshold,pass\n"));
    assert_eq!(m.files.len(), 1);
    assert_eq!(m.files[0].sha256, blob_hash(text.as_bytes()));
    assert!(dir.join("manifest.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn symbolic_angles_parse(a in 1u32..50, k in 1u32..1000) {
        let s = format!("{a}*pi/{k}");
        let v: Angle = s.parse().unwrap();
        prop_assert_eq!(v.value(), a as f64 * PI / k as f64);
        prop_assert_eq!(v.to_string(), s);
    }

    #[test]
    fn numeric_angles_round_trip(x in -1e6f64..1e6) {
        let v: Angle = format!("{x}").parse().unwrap();
        prop_assert_eq!(v.value(), x);
        prop_assert!(v.literal().is_none());
    }
}
