use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use transwave_core::analysis::LIGHT_SPEED;
use transwave_core::emt::propagation_speed_em_kms;
use transwave_core::model::{presets, Disturbance, NetworkModel};

fn transwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transwave"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = transwave(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    transwave(dir, args).status.code().expect("exited normally")
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(',')?.parse().ok())
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ring23(dir: &Path) -> PathBuf {
    let path = dir.join("ring23.json");
    ok(dir, &["gen", "ring", "--preset", "ring23", "-o", s(&path)]);
    path
}

fn scenario(dir: &Path, name: &str, engine: &str, extra: &str, d: Disturbance) -> PathBuf {
    let path = dir.join(name);
    let d = serde_json::to_string(&d).unwrap();
    fs::write(
        &path,
        format!(r#"{{"engine": "{engine}", "disturbances": [{d}]{extra}}}"#),
    )
    .unwrap();
    path
}

fn header(csv: &Path) -> Vec<String> {
    let text = fs::read_to_string(csv).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_owned).collect()
}

#[test]
fn gen_ring_preset_is_the_reference_ring() {
    let dir = TempDir::new().unwrap();
    let path = ring23(dir.path());
    let model: NetworkModel = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(model.validate().is_valid());
    assert_eq!(model, presets::ring23());
    let h = field(
        &ok(dir.path(), &["theory", "--network", s(&path)]),
        "inertia_density_s_per_km",
    );
    assert!((h - 12.55).abs() < 0.01, "{h}");
}

#[test]
fn gen_mesh_has_the_requested_shape() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["gen", "mesh", "--rows", "7", "--cols", "7", "--spacing-km", "100"],
    );
    let model: NetworkModel =
        serde_json::from_str(&fs::read_to_string(dir.path().join("network.json")).unwrap()).unwrap();
    assert_eq!(model.buses.len(), 49);
    assert_eq!(model.lines.len(), 2 * 7 * 6);
}

#[test]
fn gen_rejects_a_two_bus_ring() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(dir.path(), &["gen", "ring", "--buses", "2"]), 2);
    assert!(!dir.path().join("network.json").exists());
}

#[test]
fn theory_reports_both_speeds() {
    let dir = TempDir::new().unwrap();
    let net = ring23(dir.path());
    let out = ok(dir.path(), &["theory", "--network", s(&net)]);
    assert!((field(&out, "v_mech_kms") - 339.97).abs() < 0.5);
    assert!((field(&out, "v_em_ms") / 2.92e8 - 1.0).abs() < 0.01);
    assert_eq!(field(&out, "light_speed_ms"), LIGHT_SPEED);

    let halved = ok(dir.path(), &["theory", "--network", s(&net), "--h", "5"]);
    let v = field(&halved, "v_mech_kms");
    assert!((v - 339.97 * 2f64.sqrt()).abs() < 0.5, "{v}");
}

#[test]
fn theory_names_missing_inertia() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("nogen.json");
    ok(
        dir.path(),
        &["gen", "mesh", "--rows", "2", "--cols", "3", "--no-gen", "-o", s(&net)],
    );
    let out = transwave(dir.path(), &["theory", "--network", s(&net)]);
    assert_eq!(out.status.code(), Some(5));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inertia_h"), "{err}");
}

#[test]
fn swing_run_has_two_columns_per_bus_and_a_fitting_speed() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(d, "sc.json", "swing", "", Disturbance::fault(1, 0.0));
    ok(d, &["simulate", "--network", s(&net), "--scenario", s(&sc)]);
    assert_eq!(header(&d.join("waves.csv")).len(), 47);
    assert!(d.join("manifest.json").exists());

    let out = ok(
        d,
        &[
            "speed",
            "--waves",
            s(&d.join("waves.csv")),
            "--network",
            s(&net),
            "--origin",
            "1",
        ],
    );
    let v = field(&out, "speed_kms");
    assert!((289.0..=391.0).contains(&v), "{v}");
    assert!(d.join("arrivals.csv").exists());
}

#[test]
fn emt_speed_matches_line_constants() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(d, "sc.json", "emt", "", Disturbance::fault(1, 0.0));
    ok(d, &["simulate", "--network", s(&net), "--scenario", s(&sc)]);
    let out = ok(
        d,
        &[
            "speed",
            "--waves",
            s(&d.join("waves.csv")),
            "--network",
            s(&net),
            "--origin",
            "1",
            "--quantity",
            "v",
        ],
    );
    let theory = propagation_speed_em_kms(&presets::ring23().lines[0]).unwrap();
    let v = field(&out, "speed_kms");
    assert!((v / theory - 1.0).abs() < 0.05, "{v} vs {theory}");
}

#[test]
fn hybrid_run_carries_both_families() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(
        d,
        "sc.json",
        "hybrid",
        r#", "hybrid": {"t_end": 0.05}"#,
        Disturbance::fault(1, 0.0),
    );
    ok(d, &["simulate", "--network", s(&net), "--scenario", s(&sc)]);
    let cols = header(&d.join("waves.csv"));
    assert!(cols.iter().any(|c| c.ends_with(".v")), "{cols:?}");
    assert!(cols.iter().any(|c| c.ends_with(".domega")), "{cols:?}");
}

#[test]
fn engine_flag_overrides_the_scenario() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(
        d,
        "sc.json",
        "swing",
        r#", "emt": {"t_end": 0.002}"#,
        Disturbance::fault(1, 0.0),
    );
    ok(
        d,
        &[
            "simulate",
            "--network",
            s(&net),
            "--scenario",
            s(&sc),
            "--engine",
            "emt",
        ],
    );
    let cols = header(&d.join("waves.csv"));
    assert!(cols.iter().all(|c| c == "t" || c.ends_with(".v")), "{cols:?}");
}

#[test]
fn malformed_scenario_reports_its_position() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let bad = d.join("bad.json");
    fs::write(&bad, "{\n  \"engine\": \"swing\",\n  \"disturbances\": [\n").unwrap();
    let out = transwave(d, &["simulate", "--network", s(&net), "--scenario", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("column"), "{err}");
}

#[test]
fn unknown_bus_in_scenario_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(d, "sc.json", "swing", "", Disturbance::fault(99, 0.0));
    assert_eq!(code(d, &["simulate", "--network", s(&net), "--scenario", s(&sc)]), 5);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(
        d,
        "sc.json",
        "swing",
        r#", "swing": {"t_end": 2.0}"#,
        Disturbance::generation_trip(3, 0.0, 100.0),
    );
    let (a, b, c) = (d.join("a"), d.join("b"), d.join("c"));
    for out in [&a, &b] {
        ok(out, &["simulate", "--network", s(&net), "--scenario", s(&sc)]);
    }
    assert_eq!(
        fs::read(a.join("waves.csv")).unwrap(),
        fs::read(b.join("waves.csv")).unwrap()
    );

    // the manifest alone repeats the run
    ok(&c, &["simulate", "--manifest", s(&a.join("manifest.json"))]);
    assert_eq!(
        fs::read(a.join("waves.csv")).unwrap(),
        fs::read(c.join("waves.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(c.join("manifest.json")).unwrap()
    );
}

#[test]
fn manifest_spells_out_defaults() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let sc = scenario(
        d,
        "sc.json",
        "emt",
        r#", "emt": {"t_end": 0.001}"#,
        Disturbance::fault(1, 0.0),
    );
    ok(
        d,
        &["simulate", "--network", s(&net), "--scenario", s(&sc), "--seed", "7"],
    );
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["engine"], "emt");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["scenario"]["emt"]["dt"], 1e-6);
    assert_eq!(m["scenario"]["swing"]["dt"], 1e-3);
    assert_eq!(m["outputs"][0], "waves.csv");
    assert!(m["tool_version"].as_str().is_some_and(|v| !v.is_empty()));
}

#[test]
fn speed_rejects_a_zero_threshold() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let waves = d.join("w.csv");
    fs::write(&waves, "t,bus0.domega\n0,0\n").unwrap();
    let args = [
        "speed",
        "--waves",
        s(&waves),
        "--network",
        s(&net),
        "--origin",
        "1",
        "--threshold",
        "0",
    ];
    assert_eq!(code(d, &args), 2);
}

#[test]
fn sweep_reports_the_inertia_ratio() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let cfg = d.join("sweep.json");
    fs::write(
        &cfg,
        r#"{"parameter": "inertia_h", "values": [10, 5, -1], "engine": "swing"}"#,
    )
    .unwrap();
    let out = ok(d, &["sweep", "--network", s(&net), "--config", s(&cfg)]);
    assert_eq!(out, fs::read_to_string(d.join("sweep.csv")).unwrap());
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let speed = |r: &str| r.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    let ratio = speed(rows[1]) / speed(rows[0]);
    assert!((1.30..=1.55).contains(&ratio), "{ratio}");
    assert!(rows[2].contains(",,,\"error"), "{}", rows[2]);
}

#[test]
fn sweep_with_no_surviving_point_fails() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = ring23(d);
    let cfg = d.join("sweep.json");
    fs::write(
        &cfg,
        r#"{"parameter": "inertia_h", "values": [-1, 0], "engine": "swing"}"#,
    )
    .unwrap();
    assert_eq!(code(d, &["sweep", "--network", s(&net), "--config", s(&cfg)]), 4);
}

fn square_arrivals(dir: &Path, speed: f64, event: [f64; 2]) -> PathBuf {
    let mut csv = String::from("sensor_id,x_km,y_km,arrival_s\n");
    for (i, p) in [[0.0, 0.0], [500.0, 0.0], [0.0, 500.0], [500.0, 500.0]]
        .iter()
        .enumerate()
    {
        let t = 2.0 + (p[0] - event[0]).hypot(p[1] - event[1]) / speed;
        csv.push_str(&format!("s{i},{},{},{t:.17e}\n", p[0], p[1]));
    }
    let path = dir.join("square.csv");
    fs::write(&path, csv).unwrap();
    path
}

#[test]
fn locate_recovers_an_exact_square_scenario() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let arrivals = square_arrivals(d, 350.0, [130.0, 340.0]);
    let out = ok(
        d,
        &[
            "locate",
            "--arrivals",
            s(&arrivals),
            "--speed",
            "350",
            "--truth",
            "130,340",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["abs_error_km"].as_f64().unwrap() < 1e-3, "{v}");
    assert!(d.join("location.json").exists());
}

#[test]
fn locate_needs_three_sensors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let path = d.join("two.csv");
    fs::write(&path, "sensor_id,x_km,y_km,arrival_s\na,0,0,1.0\nb,100,0,1.2\n").unwrap();
    assert_eq!(code(d, &["locate", "--arrivals", s(&path), "--speed", "350"]), 3);
}

#[test]
fn locate_needs_a_speed_mode() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let arrivals = square_arrivals(d, 350.0, [130.0, 340.0]);
    assert_eq!(code(d, &["locate", "--arrivals", s(&arrivals)]), 2);
}

#[test]
fn jitter_is_reproducible_per_seed() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let arrivals = square_arrivals(d, 350.0, [130.0, 340.0]);
    let run = |seed: &str| {
        ok(
            d,
            &[
                "locate",
                "--arrivals",
                s(&arrivals),
                "--speed",
                "350",
                "--jitter",
                "0.05",
                "--seed",
                seed,
            ],
        )
    };
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}

#[test]
fn mesh_simulation_is_located_within_one_spacing() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let net = d.join("mesh.json");
    ok(d, &["gen", "mesh", "--rows", "7", "--cols", "7", "-o", s(&net)]);
    let bus = 30;
    let sc = scenario(
        d,
        "trip.json",
        "swing",
        r#", "swing": {"t_end": 10.0}"#,
        Disturbance::generation_trip(bus, 0.0, 120.0),
    );
    ok(d, &["simulate", "--network", s(&net), "--scenario", s(&sc)]);
    ok(
        d,
        &[
            "speed",
            "--waves",
            s(&d.join("waves.csv")),
            "--network",
            s(&net),
            "--origin",
            "30",
            "--threshold",
            "1e-6",
            "--sensors",
            "0,6,24,42,48",
        ],
    );
    let model: NetworkModel = serde_json::from_str(&fs::read_to_string(&net).unwrap()).unwrap();
    let [x, y] = model.buses[bus].coord;
    let truth = format!("{x},{y}");
    let out = ok(
        d,
        &[
            "locate",
            "--arrivals",
            s(&d.join("sensors.csv")),
            "--fit-speed",
            "--truth",
            &truth,
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["abs_error_km"].as_f64().unwrap() < 100.0, "{v}");
}

#[test]
fn missing_input_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(dir.path(), &["theory", "--network", "/nonexistent/net.json"]), 5);
}
