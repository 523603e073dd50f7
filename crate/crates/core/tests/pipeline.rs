use std::fs;
use std::path::Path;

use permon::config::{RawConfig, RunConfig, Task};
use permon::output::read_table;
use permon::{pipeline, Error};

fn config(text: &str, base: &Path) -> permon::Result<RunConfig> {
    RunConfig::from_raw(&RawConfig::parse(text)?, base)
}

#[test]
fn transport_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "# corner square\n[system]\nsystem = transport\nkind = corner_square\ndelta = 0.5\n\
         [grid]\nN = 128\nhorizon = 200\n\
         tasks = simulate, spectrum, observability, rates, gcc\ninitial = ones\n",
        dir.path(),
    )
    .unwrap();
    assert!(cfg.effective_tasks().contains(&Task::Monodromy));
    let out = dir.path().join("out");
    let run = pipeline::run(&cfg, &out).unwrap();
    for f in [
        "report.txt",
        "monodromy.csv",
        "spectrum.txt",
        "boundary_profile.csv",
        "kt_profile.csv",
        "eigenvalues.csv",
        "trajectory.csv",
        "snapshot_x.csv",
        "sandwich.csv",
        "rates.csv",
        "rates_summary.txt",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let header = fs::read_to_string(out.join("monodromy.csv")).unwrap();
    assert!(header.starts_with("s,a,multiplier\n"));
    let rows = read_table(&out.join("monodromy.csv")).unwrap();
    assert_eq!(rows.len(), 128);
    assert!(rows.iter().all(|r| (r[2] - (-r[1]).exp()).abs() < 1e-15));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report, run.report.render());
    assert!(report.contains("[gcc]"));
    let summary = fs::read_to_string(out.join("rates_summary.txt")).unwrap();
    assert!(summary.contains("verdict=polynomial"), "{summary}");
}

#[test]
fn wave_simulation_and_gcc() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "system = wave\nkind = switched\ndelta = 0.4\nN = 64\nhorizon = 20\ntasks = simulate,gcc\nseed = 3\n",
        dir.path(),
    )
    .unwrap();
    let out = dir.path().join("w");
    let run = pipeline::run(&cfg, &out).unwrap();
    assert_eq!(run.report.get("gcc", "holds"), Some("false"));
    assert!(out.join("gcc_witness.csv").is_file());
    let traj = read_table(&out.join("trajectory.csv")).unwrap();
    assert!(traj.windows(2).all(|w| w[1][1] <= w[0][1] * (1.0 + 1e-12)));
}

#[test]
fn initial_data_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    // same layout as snapshot_x.csv: cell center, value
    let body: String = (0..n)
        .map(|i| format!("{},{}\n", (i as f64 + 0.5) / n as f64, (i as f64 / n as f64).sin()))
        .collect();
    fs::write(dir.path().join("x.txt"), format!("s,x\n{body}")).unwrap();
    let cfg = config(
        "system = transport\nkind = diamond\ndelta = 0.25\nN = 64\ntasks = simulate\ninitial = file:x.txt\n",
        dir.path(),
    )
    .unwrap();
    let x = pipeline::initial_state(&cfg).unwrap();
    assert_eq!(x.n(), n);
    assert!((x.coords()[10] - (10.0 / 64.0f64).sin()).abs() < 1e-15);
}

#[test]
fn config_errors() {
    let base = Path::new(".");
    let cases = [
        "system = transport\nkind = diamond\ndelta = 0.25\nN = 64\ntasks =\n",
        "system = transport\nkind = diamond\ndelta = 0.25\nN = 100\ntasks = simulate\n",
        "system = wave\nkind = hexagon\ndelta = 0.25\nN = 64\ntasks = simulate\n",
        "system = transport\nkind = diamond\ndelta = 0.25\nperiod = 2\nN = 64\ntasks = simulate\n",
        "system = transport\nkind = diamond\ndelta = 0.25\nN = 64\ntasks = simulate\nbogus = 1\n",
        "system = transport\nkind = diamond\ndelta = 0.25\nN = 64\nN = 128\ntasks = simulate\n",
        "system = wave\nkind = switched\ndelta = 0.5\nN = 4096\ntasks = spectrum\n",
        "system = transport\nkind = diamond\ndelta = 0.25\nN = 64\ntasks = simulate\ninitial = file:nope.txt\n",
    ];
    for text in cases {
        match config(text, base) {
            Err(Error::Config(_)) => {}
            other => panic!("expected a config error for\n{text}\ngot {other:?}"),
        }
    }
}

#[test]
fn overrides_replace_keys() {
    let mut raw = RawConfig::parse("system = transport\nkind = corner_square\ndelta = 0.5\nN = 64\ntasks = gcc\n").unwrap();
    raw.set("N", "256");
    raw.set("tasks", "simulate,monodromy");
    let cfg = RunConfig::from_raw(&raw, Path::new(".")).unwrap();
    assert_eq!(cfg.n, 256);
    assert_eq!(cfg.tasks, vec![Task::Simulate, Task::Monodromy]);
}

#[test]
fn rectangles_config() {
    let cfg = config(
        "system = transport\nkind = rectangles\nrectangles = [(0.1,0.3,0.0,0.5), (0.6, 0.9, 0.2, 0.4)]\nN = 64\ntasks = monodromy\n",
        Path::new("."),
    )
    .unwrap();
    assert!((cfg.region.area() - (0.2 * 0.5 + 0.3 * 0.2)).abs() < 1e-12);
}
