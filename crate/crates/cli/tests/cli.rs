use std::path::Path;
use std::process::{Command, Output};

use irdeco_cli::config::{Format, RunConfig};
use irdeco_core::kinematics::{
    classical_current, deflected_pair, elementary_charge, EmissionCurrent, FourVector,
    FINE_STRUCTURE,
};
use irdeco_core::radiation::{
    divergence_coefficient, mean_photon_number, QuadratureSpec, SpectralCutoffs,
};
use nalgebra::Vector3;
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

fn irdeco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irdeco"))
        .args(args)
        .output()
        .unwrap()
}

fn with_config(dir: &TempDir, toml: &str, args: &[&str]) -> Output {
    let path = dir.path().join("run.toml");
    std::fs::write(&path, toml).unwrap();
    let mut all = vec!["--config", path.to_str().unwrap()];
    all.extend_from_slice(args);
    irdeco(&all)
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn column(v: &Value, table: &str, field: &str) -> Vec<f64> {
    v[table]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r[field].as_f64().unwrap())
        .collect()
}

#[test]
fn default_config_round_trips() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    assert_eq!(RunConfig::parse("").unwrap(), cfg);
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        any::<u64>(),
        prop::bool::ANY,
        0.5f64..100.0,
        0.0f64..180.0,
        prop::option::of(1usize..200),
        prop::collection::vec(1e-8f64..1.0, 1..6),
        prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 0..4),
        prop::option::of("[a-z]{1,8}"),
    )
        .prop_map(|(seed, json, energy, deg, n_max, mins, dirs, out)| {
            let mut cfg = RunConfig {
                seed,
                format: if json { Format::Json } else { Format::Csv },
                ..Default::default()
            };
            cfg.kinematics.electron_energy = energy;
            cfg.kinematics.deflection_deg = deg;
            cfg.grid.n_max = n_max;
            cfg.sweep.omega_min_fractions = mins;
            if !dirs.is_empty() {
                cfg.branches.count = dirs.len();
                cfg.branches.directions = dirs;
            }
            cfg.out = out.map(Into::into);
            cfg
        })
}

proptest! {
    #[test]
    fn configs_round_trip(cfg in arb_config()) {
        let once = RunConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&once, &cfg);
        prop_assert_eq!(once.to_toml(), cfg.to_toml());
    }
}

#[test]
fn malformed_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        &dir,
        "seed = 1\n[kinematics]\nelectron_energy = = 3\n",
        &["current"],
    );
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(&dir, "[kinematics]\nelectron_energie = 3.0\n", &["current"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = irdeco(&["--config", "/nonexistent/run.toml", "current"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unphysical_kinematics_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(&dir, "[kinematics]\nelectron_energy = 0.5\n", &["current"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn forward_current_rows_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&with_config(
        &dir,
        "[kinematics]\ndeflection_deg = 0.0\n",
        &["current", "--format", "json"],
    ));
    for row in v["current"].as_array().unwrap() {
        for f in [
            "re_j0", "re_j1", "re_j2", "re_j3", "im_j0", "im_j1", "im_j2", "im_j3", "k_dot_j",
        ] {
            assert_eq!(row[f].as_f64(), Some(0.0));
        }
    }
}

#[test]
fn benchmark_current_matches_library_bitwise() {
    let out = irdeco(&["current"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (p, q) = deflected_pair(10.0, 1.0, 90f64.to_radians()).unwrap();
    let cur = EmissionCurrent::new(p, q, elementary_charge(FINE_STRUCTURE)).unwrap();
    let photons = RunConfig::default().current.photons;
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), photons.len());
    for (line, ph) in rows.iter().zip(photons) {
        let field = |name: &str| -> f64 {
            let i = header.iter().position(|h| *h == name).unwrap();
            line.split(',').nth(i).unwrap().parse().unwrap()
        };
        let n = Vector3::new(ph[1], ph[2], ph[3]).normalize();
        let k = FourVector::lightlike(ph[0] * 10.0, &n);
        let j = classical_current(&cur, &k).unwrap();
        assert_eq!(field("omega").to_bits(), k.t.to_bits());
        for (i, c) in j.components().iter().enumerate() {
            assert_eq!(field(&format!("re_j{i}")).to_bits(), c.re.to_bits());
            assert_eq!(field(&format!("im_j{i}")).to_bits(), c.im.to_bits());
        }
    }
}

#[test]
fn csv_uses_plain_decimal_points() {
    let out = irdeco(&["current"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("omega,n_x"));
    for line in lines {
        for field in line.split(',') {
            assert!(field.parse::<f64>().is_ok(), "{field}");
        }
    }
}

#[test]
fn forward_spectrum_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&with_config(
        &dir,
        "[kinematics]\ndeflection_deg = 0.0\n",
        &["spectrum", "--format", "json"],
    ));
    assert!(column(&v, "spectrum", "density").iter().all(|&d| d == 0.0));
    assert!(column(&v, "spectrum", "c_fit").iter().all(|&c| c == 0.0));
}

#[test]
fn benchmark_spectrum_has_constant_coefficient() {
    let v = json(&irdeco(&["spectrum", "--format", "json"]));
    let row = &v["spectrum"][0];
    for f in ["omega", "density", "c_fit", "residual"] {
        assert!(row.get(f).is_some(), "missing {f}");
    }
    let (p, q) = deflected_pair(10.0, 1.0, 90f64.to_radians()).unwrap();
    let cur = EmissionCurrent::new(p, q, elementary_charge(FINE_STRUCTURE)).unwrap();
    let c = divergence_coefficient(
        &cur,
        &SpectralCutoffs::default_for(10.0),
        &QuadratureSpec::default(),
    )
    .unwrap()
    .c;
    for (w, d) in column(&v, "spectrum", "omega")
        .iter()
        .zip(column(&v, "spectrum", "density"))
    {
        assert!((w * d / c - 1.0).abs() < 0.01);
    }
    assert!(column(&v, "spectrum", "residual").iter().all(|&r| r < 0.01));
}

#[test]
fn single_branch_matrix_is_the_vacuum_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[branches]\ncount = 1\n[sweep]\nomega_max_fraction = 1.0\nomega_min_fractions = [0.1, 0.001]\n";
    let v = json(&with_config(&dir, cfg, &["decohere", "--format", "json"]));
    let set = irdeco_cli::commands::branch_set(&RunConfig::parse(cfg).unwrap()).unwrap();
    let rows = v["matrix"].as_array().unwrap();
    assert_eq!(rows.len(), 2 * 4);
    for (i, fraction) in [0.1, 0.001].iter().enumerate() {
        let cut = SpectralCutoffs::new(fraction * 10.0, 10.0).unwrap();
        let n = mean_photon_number(&set.branches()[0].current, &cut, &QuadratureSpec::default())
            .unwrap();
        let block = &rows[4 * i..4 * i + 4];
        assert_eq!(block[0]["entry"].as_f64(), Some(1.0));
        let off = block[1]["entry"].as_f64().unwrap();
        assert_eq!(off, block[2]["entry"].as_f64().unwrap());
        assert!((off / (-0.5 * n).exp() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn offdiagonal_mass_falls_over_four_decades() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[sweep]\nomega_min_fractions = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]\n[quadrature]\nn_cos = 64\nn_phi = 64\nn_omega = 4\n";
    let v = json(&with_config(&dir, cfg, &["decohere", "--format", "json"]));
    let norms = column(&v, "metrics", "offdiag_norm");
    assert_eq!(norms.len(), 5);
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn duplicate_directions_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[branches]\ncount = 3\ndirections = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 0.0, 0.0]]\n[sweep]\nomega_min_fractions = [0.01]\n";
    let v = json(&with_config(&dir, cfg, &["decohere", "--format", "json"]));
    let flagged: Vec<(u64, u64)> = v["matrix"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["coincident"].as_bool().unwrap())
        .map(|r| (r["row"].as_u64().unwrap(), r["col"].as_u64().unwrap()))
        .collect();
    assert_eq!(flagged, vec![(1, 3), (3, 1)]);
}

fn checks(out: &Output) -> Vec<(String, f64, bool)> {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["check"].as_str().unwrap().to_string(),
                r["value"].as_f64().unwrap(),
                r["pass"].as_bool().unwrap(),
            )
        })
        .collect()
}

#[test]
fn fock_check_passes_by_default() {
    let out = irdeco(&["fock-check", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let cs = checks(&out);
    assert!(cs.iter().all(|c| c.2), "{cs:?}");
    for name in ["bogoliubov_residual", "unitarity_residual"] {
        assert!(cs.iter().any(|c| c.0 == name && c.1 < 1e-8));
    }
}

#[test]
fn tiny_truncation_fails_the_check() {
    let out = irdeco(&["fock-check", "--format", "json", "--n-max", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let cs = checks(&out);
    assert!(cs.iter().any(|c| c.0 == "truncation" && !c.2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("too small"));
}

#[test]
fn undeflected_fock_check_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        &dir,
        "[kinematics]\ndeflection_deg = 0.0\n",
        &["fock-check", "--format", "json"],
    );
    assert_eq!(out.status.code(), Some(0));
    for (name, value, pass) in checks(&out) {
        assert!(pass, "{name}");
        if name != "truncation" {
            assert_eq!(value, 0.0, "{name}");
        }
    }
}

const SMALL_LADDER: &str = "[rescatter]\ndeltas = [1.0, 0.1, 0.01]\nsamples = 20000\n";

#[test]
fn full_sphere_tolerance_always_returns() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&with_config(
        &dir,
        SMALL_LADDER,
        &["rescatter", "--format", "json"],
    ));
    assert_eq!(v["ladder"][0]["delta"].as_f64(), Some(1.0));
    assert_eq!(v["ladder"][0]["estimate"].as_f64(), Some(1.0));
}

#[test]
fn default_ladder_slope_is_one() {
    let v = json(&irdeco(&["rescatter", "--format", "json"]));
    let slope = v["slope"][0]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = with_config(&dir, SMALL_LADDER, &["rescatter", "--seed", "9"]);
    let b = with_config(
        &dir,
        SMALL_LADDER,
        &["rescatter", "--seed", "9", "--threads", "1"],
    );
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = with_config(&dir, SMALL_LADDER, &["rescatter", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn multi_table_csv_goes_to_suffixed_files() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("ladder.csv");
    let out = with_config(
        &dir,
        SMALL_LADDER,
        &["rescatter", "--out", target.to_str().unwrap()],
    );
    assert!(out.status.success());
    assert!(dir.path().join("ladder_ladder.csv").exists());
    assert!(dir.path().join("ladder_slope.csv").exists());
}

#[test]
fn unwritable_demo_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let out = irdeco(&["demo", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("I/O error"));
}

#[cfg(unix)]
#[test]
fn read_only_demo_directory_is_an_io_error() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let locked = dir.path().join("locked");
    std::fs::create_dir(&locked).unwrap();
    std::fs::set_permissions(&locked, std::fs::Permissions::from_mode(0o555)).unwrap();
    // privileged users write through the mode bits
    if std::fs::write(locked.join("probe"), "").is_ok() {
        return;
    }
    let out = irdeco(&["demo", "--out", locked.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("demo");
    let out = irdeco(&["demo", "--dry-run", "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    let plan = String::from_utf8(out.stdout).unwrap();
    assert!(plan.contains("decohere") && plan.contains("summary"));
    assert!(!Path::new(&target).exists());
}

#[test]
fn schema_lists_every_command() {
    let v = json(&irdeco(&["--schema"]));
    for cmd in [
        "current",
        "spectrum",
        "overlap",
        "decohere",
        "fock-check",
        "rescatter",
        "demo",
    ] {
        assert!(v.get(cmd).is_some(), "{cmd}");
    }
    let fields: Vec<&str> = v["spectrum"]["spectrum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    for f in ["omega", "density", "c_fit", "residual"] {
        assert!(fields.contains(&f));
    }
}

#[test]
fn overlap_rows_follow_the_photon_number() {
    let v = json(&irdeco(&["overlap", "--format", "json"]));
    let deviations = column(&v, "overlap", "deviation");
    assert!(deviations.iter().all(|&d| d <= 1e-10));
    let n = column(&v, "overlap", "n_bar");
    assert_eq!(n[0], 0.0);
    assert!(n.windows(2).all(|w| w[0] < w[1]));
}
