use std::path::Path;
use std::process::Command;

use vanet_cli::{run_config, CliError, CSV_HEADER};

fn vanet(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vanet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

const MINIMAL: &str = "\
model = unit_disk
r = 250
L = 3000
rho = 0.05
pm = 0.1
method = simulation
trials = 5000
seed = 1
";

#[test]
fn minimal_config_gives_one_row() {
    let rows = run_config(MINIMAL).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(
        (row.method.as_str(), row.model.as_str()),
        ("simulation", "unit_disk")
    );
    assert_eq!(
        (row.r, row.road_length, row.rho, row.pm),
        (250.0, 3000.0, Some(0.05), 0.1)
    );
    assert_eq!((row.trials, row.seed), (5000, 1));
    assert!(row.ci_low <= row.p_succ && row.p_succ <= row.ci_high);
    assert!((0.5..=1.0).contains(&row.p_succ), "{row:?}");
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let err = run_config("L = 1000\nrho = 0.01\npm = 0\nspeed = 30\n").unwrap_err();
    assert!(matches!(err, CliError::Config { line: 4, .. }));
    assert!(err.to_string().contains("unknown key `speed`"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let out = vanet(
        dir.path(),
        &["simulate", "L=1000", "rho=0.01", "pm=0", "speed=30"],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown key `speed`"), "{stderr}");
}

#[test]
fn infeasible_analytic_request_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = vanet(dir.path(), &["analytic", "L=3000", "rho=0.05", "pm=0.1"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("infeasible"), "{stderr}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.cfg"),
        "L = 1000\nrho = 0.005\nsweep = malice_prob\nvalues = 0, 0.2, 0.4\n\
         trials = 3000\nseed = 9\nrecord_runtime = false\nout = a.csv, a.json, a.svg\n",
    )
    .unwrap();
    let first = vanet(dir.path(), &["sweep", "-c", "sweep.cfg"]);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let before: Vec<Vec<u8>> = ["a.csv", "a.json", "a.svg"]
        .iter()
        .map(|n| read(n))
        .collect();
    let second = vanet(dir.path(), &["sweep", "-c", "sweep.cfg"]);
    assert!(second.status.success());
    let after: Vec<Vec<u8>> = ["a.csv", "a.json", "a.svg"]
        .iter()
        .map(|n| read(n))
        .collect();
    assert_eq!(before, after);

    let csv = String::from_utf8(before[0].clone()).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    let pms: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(7).unwrap())
        .collect();
    assert_eq!(pms, ["0.0", "0.2", "0.4"]);
    assert!(
        csv.lines().skip(1).all(|l| l.ends_with(',')),
        "runtime column left empty"
    );
}

#[test]
fn overrides_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.cfg"),
        MINIMAL.replace("trials = 5000", "trials = 100"),
    )
    .unwrap();
    let out = vanet(
        dir.path(),
        &["simulate", "--config", "c.cfg", "--pm=0.4", "L=1000"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[6], row[7], row[8]), ("1000.0", "0.4", "100"));

    let clash = vanet(dir.path(), &["analytic", "--config", "c.cfg"]);
    assert!(!clash.status.success());
}

#[test]
fn oracle_and_simulation_on_a_fixture() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("road.txt"),
        "# position\tmalicious\n300\t0\n600\t1\n",
    )
    .unwrap();
    let base = [
        "topology=road.txt",
        "L=1000",
        "r=1000",
        "record_runtime=false",
    ];
    let oracle = vanet(dir.path(), &[&["oracle"][..], &base].concat());
    assert!(
        oracle.status.success(),
        "{}",
        String::from_utf8_lossy(&oracle.stderr)
    );
    let text = String::from_utf8(oracle.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "oracle");
    assert_eq!(row[5], "", "no density on a fixed road");
    assert_eq!(row[9], "0.75");

    let sim = vanet(
        dir.path(),
        &[&["simulate", "trials=20000"][..], &base].concat(),
    );
    let text = String::from_utf8(sim.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let p: f64 = row[9].parse().unwrap();
    let se: f64 = row[10].parse().unwrap();
    assert!((p - 0.75).abs() <= 4.0 * se, "p={p} se={se}");
}

#[test]
fn threshold_and_plot_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = format!(
        "{CSV_HEADER}\n\
         simulation,unit_disk,250.0,,,0.05,3000.0,0.0,100,1.0,0.0,1.0,1.0,1,\n\
         simulation,unit_disk,250.0,,,0.05,3000.0,0.1,100,0.7,0.04,0.62,0.78,1,\n\
         simulation,unit_disk,250.0,,,0.05,3000.0,0.2,100,0.51,0.05,0.41,0.61,1,\n"
    );
    std::fs::write(dir.path().join("c.csv"), csv).unwrap();
    let out = vanet(dir.path(), &["threshold", "input=c.csv"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .trim_end()
        .ends_with("p_th=0.2"));

    let out = vanet(
        dir.path(),
        &["plot", "input=c.csv", "x=pm", "out=f.svg", "title=demo"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let svg = std::fs::read_to_string(dir.path().join("f.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 3);

    let bad = vanet(dir.path(), &["plot", "input=c.csv", "x=alpha"]);
    assert!(!bad.status.success());
}
