use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};

use diamean::averaging::{upper_banach_density, EstimatorParams, FnOrbit};
use diamean::group::{standard_folner, FolnerStyle, GroupElement};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn diamean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diamean")).args(args).output().expect("binary runs")
}

fn run_config(text: &str, dir: &Path) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    diamean(&["--config", path.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
}

fn records(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn missing_system_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("command = \"diam\"\n\n[diam]\nsets = [{ kind = \"singleton\", point = \"0\" }]\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run_config("command = \"diam\"\n\n[system]\nname = \"rotaton\"\n", dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rotation_arc_has_its_length_as_mean_diameter() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("rotation_arc.toml");
    let out = diamean(&["--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(&dir.path().join("estimates.csv"));
    assert_eq!(rows.len(), 1);
    let value: f64 = rows[0][3].parse().unwrap();
    assert!((value - 0.1).abs() <= 1e-12, "{value}");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let config = configs().join("compactification.toml");
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip(["1", "4"]) {
        let out = diamean(&["--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--threads", threads]);
        assert!(out.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(fs::read(dirs[0].path().join(&name)).unwrap(), fs::read(dirs[1].path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn density_rows_match_the_library() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(17);
    let classes: Vec<(i64, i64)> = (0..10)
        .map(|_| {
            let a = rng.gen_range(1..=12i64);
            (a, rng.gen_range(0..a))
        })
        .collect();
    let sets: Vec<String> = classes.iter().map(|(a, b)| format!("{{ kind = \"residue\", modulus = {a}, residue = {b} }}")).collect();
    let text = format!("command = \"density\"\n\n[estimator]\nn_max = 2000\nradius = 40\n\n[density]\nsets = [{}]\n", sets.join(", "));
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&text, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(&dir.path().join("out/estimates.csv"));
    let params = EstimatorParams::with_scale(2000, 40);
    let forward = standard_folner(1, FolnerStyle::Forward).unwrap();
    for (a, b) in classes {
        let label = format!("ub-dens[{a}Z+{b}]@forward");
        let row = rows.iter().find(|r| r[0] == *label).unwrap_or_else(|| panic!("no row {label}"));
        let pred = FnOrbit::indicator(format!("{a}Z+{b}"), 1, move |g: &GroupElement| g.first().rem_euclid(a) == b);
        let expected = upper_banach_density(&forward, &pred, &params).unwrap().value;
        let got: f64 = row[3].parse().unwrap();
        assert_eq!(got, expected, "{label}");
    }
}
