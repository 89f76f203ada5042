use reflect_hull::dynamics::simulate_ensemble_on;
use reflect_hull::estimation::{hausdorff_error_1d, hull_estimate};
use reflect_hull::harness::{emit_report, preset, read_json, run_experiment, ExperimentConfig, ReportFormat, CSV_HEADER};

fn small(name: &str) -> ExperimentConfig {
    let mut config = preset(name).unwrap();
    config.steps = 8;
    config.time_indices = vec![8];
    config.n_grid = vec![20, 80];
    config.replications = 4;
    config.diagnostic_copies = 200;
    config
}

#[test]
fn runs_are_reproducible_for_a_fixed_seed() {
    for name in ["e1", "e3"] {
        let a = run_experiment(&small(name)).unwrap();
        let b = run_experiment(&small(name)).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.series, b.series);
        assert_eq!(a.diagnostics, b.diagnostics);
    }
    let mut other = small("e1");
    other.seed += 1;
    assert_ne!(run_experiment(&small("e1")).unwrap().rows, run_experiment(&other).unwrap().rows);
}

#[test]
fn report_files_round_trip() {
    let report = run_experiment(&small("e4")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(&report, dir.path(), ReportFormat::Both).unwrap();
    assert_eq!(paths.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("e4.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    // two grid sizes, four replications, one time index, four probes
    assert_eq!(lines.len(), 1 + 2 * 4 * 4);
    assert_eq!(report.rows.len(), 2 * 4 * 4);
    assert_eq!(read_json(&dir.path().join("e4.json")).unwrap(), report);
}

#[test]
fn estimates_stay_inside_the_constraint_set() {
    let config = small("e2");
    let prepared = config.prepare().unwrap();
    let ensemble = simulate_ensemble_on(&prepared.model, &prepared.bodies, &prepared.grid, 500, 9, false).unwrap();
    assert!(hull_estimate(&ensemble, 0).is_err());
    for j in 1..=config.steps {
        let estimate = hull_estimate(&ensemble, j).unwrap();
        assert!(estimate.contained_in(&prepared.bodies[j], 1e-9));
    }
    let last = hull_estimate(&ensemble, config.steps).unwrap();
    let error = hausdorff_error_1d(&last, &prepared.bodies[config.steps]).unwrap();
    assert!((0.0..=2.0).contains(&error));
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let mut config = small("e1");
    config.x0 = vec![3.0];
    let err = run_experiment(&config).unwrap_err();
    assert!(err.is_validation());
    let mut config = small("e3");
    config.n_grid.clear();
    assert!(run_experiment(&config).unwrap_err().is_validation());
}
