use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn steerlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steerlab"))
        .current_dir(dir)
        .args(args)
        .env_remove("SSL_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn eq4_csv(dir: &Path) -> std::path::PathBuf {
    let mut text = String::from("tor_nm,dev_m,sat\n");
    for tor in [1.0, 2.0, 3.0] {
        for dev in [0.0, 0.4, 0.8] {
            let sat: f64 = -18.01 * tor * tor - 50.93 * dev * dev + 83.75 * tor + 28.01 * dev - 35.96;
            text.push_str(&format!("{tor},{dev},{sat}\n"));
        }
    }
    let path = dir.join("sat.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_writes_trajectory_and_metrics() {
    let tmp = TempDir::new().unwrap();
    let out = steerlab(tmp.path(), &["simulate", "--tor", "2", "--dev", "0.4", "--seed", "42"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    for key in ["sdlp=", "srr=", "rmsls=", "departures=", "duration=75"] {
        assert!(line.contains(key), "{line}");
    }
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,lat_pos,heading,steer_angle,driver_tq,assist_tq,lat_speed,engaged\n"));
    assert_eq!(traj.lines().count(), 7501);

    let m = manifest(&tmp.path().join("trajectory.manifest.json"));
    assert_eq!(m["status"], "complete");
    assert_eq!(m["seeds"][0], 42);
    assert!(m["config"].as_str().unwrap().contains("k_dev_m = 0.4"));

    let again = steerlab(tmp.path(), &["simulate", "--tor", "2", "--dev", "0.4", "--seed", "42", "--out", "b.csv"]);
    assert!(again.status.success());
    assert_eq!(traj, fs::read_to_string(tmp.path().join("b.csv")).unwrap());
    assert_eq!(line, stdout(&again));
}

#[test]
fn metrics_recomputes_the_simulated_values() {
    let tmp = TempDir::new().unwrap();
    let sim = steerlab(tmp.path(), &["simulate", "--condition", "5", "--seed", "3", "--duration", "20"]);
    assert!(sim.status.success(), "{}", stderr(&sim));
    assert!(stdout(&sim).starts_with("tor=2 dev=0.4 seed=3 "));
    let rec = steerlab(tmp.path(), &["metrics", "trajectory.csv"]);
    assert!(rec.status.success(), "{}", stderr(&rec));
    let tail = stdout(&sim).split_once("seed=3 ").unwrap().1.to_string();
    assert_eq!(stdout(&rec), tail);
}

#[test]
fn deadband_beyond_reference_deviation_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = steerlab(tmp.path(), &["simulate", "--tor", "2", "--dev", "3.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("k_DEV must be < d_ref"), "{}", stderr(&out));
}

#[test]
fn bad_input_exits_with_2() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[lkas]\nbogus = 1\n").unwrap();
    let cases: [(&[&str], &str); 7] = [
        (&["simulate", "--config", "bad.toml"], ""),
        (&["simulate", "--config", "missing.toml"], ""),
        (&["simulate", "--condition", "10"], ""),
        (&["metrics", "missing.csv"], ""),
        (&["latin-square", "1"], ""),
        (&["latin-square", "3"], "zero"),
        (&["contour", "--resolution", "1"], ""),
    ];
    for (args, threads) in cases {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_steerlab"));
        cmd.current_dir(tmp.path()).args(args).env_remove("SSL_THREADS");
        if !threads.is_empty() {
            cmd.env("SSL_THREADS", threads);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn divergence_exits_with_3_and_marks_the_manifest() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("soft.toml"),
        "[plant]\ncolumn_damping = 0.3\nself_align_stiffness = 1.0\n",
    )
    .unwrap();
    let out = steerlab(
        tmp.path(),
        &["simulate", "--config", "soft.toml", "--tor", "3", "--dev", "0", "--out", "d.csv"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("diverged"));
    let m = manifest(&tmp.path().join("d.manifest.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("diverged"));
}

#[test]
fn sweep_writes_all_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = steerlab(tmp.path(), &["sweep", "--seeds", "2", "--duration", "10", "--out", "s"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stderr(&out).matches(" aborted").count(), 9);
    let dir = tmp.path().join("s");

    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next().unwrap(), "condition_id,tor_nm,dev_m,seed,sdlp,srr,rmsls,departures,duration");
    assert_eq!(metrics.lines().count(), 1 + 9 * 2);
    let aggregate = fs::read_to_string(dir.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + 9 * 4);
    let latin = fs::read_to_string(dir.join("latin_square.csv")).unwrap();
    assert_eq!(latin.lines().count(), 18);

    let m = manifest(&dir.join("manifest.json"));
    assert_eq!(m["status"], "complete");
    assert_eq!(m["seeds"], serde_json::json!([1, 2]));
    for output in m["outputs"].as_array().unwrap() {
        assert!(tmp.path().join(output.as_str().unwrap()).exists(), "{output}");
    }

    // The snapshot alone reproduces the run.
    let again = steerlab(tmp.path(), &["sweep", "--config", "s/config.toml", "--out", "r", "-q"]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert!(stderr(&again).is_empty());
    assert_eq!(metrics, fs::read_to_string(tmp.path().join("r/metrics.csv")).unwrap());
    assert_eq!(aggregate, fs::read_to_string(tmp.path().join("r/aggregate.csv")).unwrap());
}

#[test]
fn sweep_with_trajectories_and_thread_cap() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_steerlab"))
        .current_dir(tmp.path())
        .args(["sweep", "--tor", "1,3", "--dev", "0", "--seeds", "2", "--duration", "5", "--trajectories", "--out", "t"])
        .env("SSL_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let mut names: Vec<String> = fs::read_dir(tmp.path().join("t/trajectories"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["tor1_dev0_seed1.csv", "tor1_dev0_seed2.csv", "tor3_dev0_seed1.csv", "tor3_dev0_seed2.csv"]
    );
    let latin = fs::read_to_string(tmp.path().join("t/latin_square.csv")).unwrap();
    assert_eq!(latin.lines().count(), 18);
    assert!(latin.lines().all(|l| l == "1,2" || l == "2,1"));
}

#[test]
fn interrupted_sweep_keeps_partial_results() {
    let tmp = TempDir::new().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_steerlab"))
        .current_dir(tmp.path())
        .args(["sweep", "--seeds", "40", "--out", "p"])
        .env("SSL_THREADS", "1")
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    assert!(first.starts_with("[1/9]"), "{first}");
    child.kill().unwrap();
    child.wait().unwrap();

    let dir = tmp.path().join("p");
    assert_eq!(manifest(&dir.join("manifest.json"))["status"], "incomplete");
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let rows = metrics.lines().count() - 1;
    assert!((40..9 * 40).contains(&rows), "{rows} rows");
    assert!(!dir.join("aggregate.csv").exists());
}

#[test]
fn fit_recovers_the_satisfaction_model() {
    let tmp = TempDir::new().unwrap();
    eq4_csv(tmp.path());
    let out = steerlab(tmp.path(), &["fit", "sat.csv", "--out", "f", "--resolution", "201"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("selected: y = -35.960000 + 83.750000 TOR + 28.010000 DEV - 18.010000 TOR^2 - 50.930000 DEV^2"), "{report}");
    assert!(report.contains("TOR = 2.32510, DEV = 0.27499"), "{report}");
    assert!(report.contains("(maximum)"));
    assert_eq!(fs::read_to_string(tmp.path().join("f/report.txt")).unwrap(), report);

    let coefficients = fs::read_to_string(tmp.path().join("f/coefficients.csv")).unwrap();
    assert_eq!(coefficients.lines().count(), 6);
    assert!(!coefficients.contains("TOR*DEV"));
    let candidates = fs::read_to_string(tmp.path().join("f/candidates.csv")).unwrap();
    assert_eq!(candidates.lines().count(), 32);
    let contour = fs::read_to_string(tmp.path().join("f/contour.csv")).unwrap();
    assert!(contour.starts_with("tor_nm,dev_m,sat\n"));
    assert_eq!(contour.lines().count(), 1 + 201 * 201);

    let opt = steerlab(tmp.path(), &["optimize", "--coefficients", "f/coefficients.csv"]);
    assert!(opt.status.success(), "{}", stderr(&opt));
    assert_eq!(stdout(&opt), stdout(&steerlab(tmp.path(), &["optimize"])));
    assert!(stdout(&opt).contains("TOR = 2.325097\nDEV = 0.274985\n"));
    assert!(stdout(&opt).contains("kind = maximum"));
}

#[test]
fn fit_names_collinear_columns() {
    let tmp = TempDir::new().unwrap();
    let mut text = String::from("x1,x2,y\n");
    for i in 0..8 {
        text.push_str(&format!("{},{},{}\n", i, 2 * i, (i * i) % 5));
    }
    fs::write(tmp.path().join("rd.csv"), text).unwrap();
    let out = steerlab(tmp.path(), &["fit", "rd.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("collinear terms: x2"), "{}", stderr(&out));
}

#[test]
fn fit_reads_sweep_output() {
    let tmp = TempDir::new().unwrap();
    let sweep = steerlab(tmp.path(), &["sweep", "--seeds", "3", "--duration", "20", "--out", "s", "-q"]);
    assert!(sweep.status.success());

    let missing = steerlab(tmp.path(), &["fit", "s/aggregate.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("sdlp, srr, rmsls, departures"), "{}", stderr(&missing));

    let agg = steerlab(tmp.path(), &["fit", "s/aggregate.csv", "--response", "sdlp", "--out", "a"]);
    assert!(agg.status.success(), "{}", stderr(&agg));
    assert!(stdout(&agg).starts_with("response: sdlp (9 observations, factors TOR, DEV)"));
    assert!(fs::read_to_string(tmp.path().join("a/contour.csv")).unwrap().starts_with("tor_nm,dev_m,sdlp\n"));

    let runs = steerlab(tmp.path(), &["fit", "s/metrics.csv", "--response", "rmsls", "--rank", "closest", "--out", "m"]);
    assert!(runs.status.success(), "{}", stderr(&runs));
    assert!(stdout(&runs).starts_with("response: rmsls (27 observations, factors TOR, DEV)"));
    assert!(stdout(&runs).contains("ranking: Cp closest to p"));
}

#[test]
fn contour_and_latin_square_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = steerlab(tmp.path(), &["contour", "--resolution", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tor_nm,dev_m,sat");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,0,"));
    assert!(lines[4].starts_with("3,0.8,"));

    let sq = steerlab(tmp.path(), &["latin-square", "9", "--out", "order.csv"]);
    assert!(sq.status.success());
    let rows: Vec<Vec<usize>> = fs::read_to_string(tmp.path().join("order.csv"))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 18);
    for row in &rows {
        let mut sorted = row.clone();
        sorted.sort();
        assert_eq!(sorted, (1..=9).collect::<Vec<_>>());
    }

    let p = steerlab(tmp.path(), &["latin-square", "4", "--participants", "6"]);
    let lines: Vec<String> = stdout(&p).lines().map(String::from).collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[4], lines[0]);
}
