use std::fs;
use std::path::Path;
use std::process::Command;

fn a2z(args: &[&str], env_seed: Option<&str>) -> (i32, String) {
    let mut c = Command::new(env!("CARGO_BIN_EXE_a2z"));
    c.args(args).env_remove("A2Z_SEED");
    if let Some(s) = env_seed {
        c.env("A2Z_SEED", s);
    }
    let o = c.output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr))
}

fn setup(root: &Path, seeded: bool) -> String {
    let data = root.join("data");
    let (code, _) = a2z(&["fixtures", "--out", data.to_str().unwrap(), "--count", "3", "--per-chunk", "2"], None);
    assert_eq!(code, 0);
    let cfg = root.join("a2z.toml");
    let seed = if seeded { "global_seed = 3\n" } else { "" };
    fs::write(&cfg, format!("{seed}[io]\ninput = \"data\"\noutput = \"out\"\n[sketch]\nskills = [3]\n")).unwrap();
    cfg.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = setup(d.path(), true);
    let (code, text) = a2z(&["all", "--config", &cfg], None);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("3 of 3 models completed (seed 3)"), "{text}");
    fs::write(d.path().join("data/chunk_0001/box-02.ply"), b"ply\nformat nonsense\n").unwrap();
    let (code, text) = a2z(&["validate", "--config", &cfg], None);
    assert_eq!(code, 2, "{text}");
    let (code, _) = a2z(&["validate", "--config", d.path().join("missing.toml").to_str().unwrap()], None);
    assert_eq!(code, 1);
    let (code, _) = a2z(&["validate", "--config", &cfg, "--chunks", "7"], None);
    assert_eq!(code, 1);
}

#[test]
fn seed_sources() {
    let d = tempfile::tempdir().unwrap();
    let cfg = setup(d.path(), false);
    let (_, text) = a2z(&["validate", "--config", &cfg], Some("11"));
    assert!(text.contains("(seed 11)"), "{text}");
    let (_, text) = a2z(&["validate", "--config", &cfg, "--seed", "12"], Some("11"));
    assert!(text.contains("(seed 12)"), "{text}");
    let (_, text) = a2z(&["validate", "--config", &cfg], None);
    assert!(text.contains("(seed 0)"), "{text}");
}

#[test]
fn example_config_matches_defaults_where_unset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let cfg = a2z_pipeline::PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.global_seed, Some(2024));
    assert_eq!(cfg.scan, a2z_core::scan::ScanConfig::default());
    assert_eq!(cfg.annot, a2z_core::annot::SphConfig::default());
    assert_eq!(cfg.sketch.skills, vec![1, 2, 3, 4, 5]);
    assert!(cfg.io.input.ends_with("data"));
}
