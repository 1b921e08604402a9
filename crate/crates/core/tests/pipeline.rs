use std::fs;

use mnolab::erm::{erm_train, generate_training_set, pou_template, Measures, SampleCounts, TrainOptions, TrainingSet};
use mnolab::lab::{rows_to_csv, run_sweep, ExperimentConfig, Lab, SweepSidecar, SWEEP_COLUMNS};
use mnolab::operators::{kernel_operator, Domains};
use mnolab::separable::{ConstructionBudget, SeparableNet};

fn config() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "operator": {"name": "kernel", "quadrature_n": 40},
            "dims": [1, 1, 1],
            "cube": {"eta": 2.5, "terms": 4, "shift": 0.5},
            "budgets": [
                {"p": 2, "h": 2, "n": 3, "delta_w": 1.0, "delta_u": 1.0, "variant": "parallel"},
                {"p": 3, "h": 3, "n": 5, "delta_w": 0.5, "delta_u": 0.5, "variant": "parallel"},
                {"p": 3, "h": 2, "n": 3, "delta_w": 1.0, "delta_u": 1.0, "variant": "nested"}
            ],
            "training": {
                "budget": {"p": 2, "h": 2, "n": 3, "delta_w": 1.0, "delta_u": 1.0, "variant": "parallel"},
                "n_alpha": [4, 8],
                "n_u": 2,
                "n_x": 4,
                "sigma": 0.05,
                "optimizer": {"steps": 50, "lr": 0.5, "clip_a": 2.0, "theta_bound": 4.0}
            },
            "sup_samples": 30,
            "gen_samples": {"n_alpha": 3, "n_u": 2, "n_x": 3},
            "seed": 5
        }"#,
    )
    .unwrap()
}

#[test]
fn interrupted_sweep_resumes_from_journal() {
    let cfg = config();
    let full = tempfile::tempdir().unwrap();
    let reference = run_sweep(&cfg, full.path(), Some(2)).unwrap();
    assert_eq!(reference.rows.len(), 5);
    assert!(reference.rows.iter().all(|r| r.is_ok()), "{:?}", reference.rows);

    // an interrupted run: sidecar present, journal holds two rows and a torn line
    let part = tempfile::tempdir().unwrap();
    let mut sidecar: SweepSidecar = serde_json::from_str(&fs::read_to_string(&reference.sidecar).unwrap()).unwrap();
    sidecar.complete = false;
    fs::write(part.path().join("results.json"), serde_json::to_string(&sidecar).unwrap()).unwrap();
    let mut journal = rows_to_csv(&[reference.rows[3].clone(), reference.rows[0].clone()]).unwrap();
    journal.push_str("construct:p3-h3");
    fs::write(part.path().join("results.csv.partial"), journal).unwrap();

    let resumed = run_sweep(&cfg, part.path(), Some(1)).unwrap();
    assert_eq!(resumed.resumed, 2);
    assert_eq!(fs::read(&resumed.csv).unwrap(), fs::read(&reference.csv).unwrap());
    assert!(!part.path().join("results.csv.partial").exists());
}

#[test]
fn changed_config_discards_stale_results() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&cfg, dir.path(), Some(2)).unwrap();
    let other = ExperimentConfig { seed: 6, ..cfg };
    let out = run_sweep(&other, dir.path(), Some(2)).unwrap();
    assert_eq!(out.resumed, 0);
    let sidecar: SweepSidecar = serde_json::from_str(&fs::read_to_string(&out.sidecar).unwrap()).unwrap();
    assert_eq!(sidecar.config_hash, other.hash());
    assert!(sidecar.complete);
    assert_eq!(sidecar.columns, SWEEP_COLUMNS);
}

#[test]
fn training_set_files_roundtrip_and_train() {
    let dom = Domains::unit(1, 1, 1).unwrap();
    let g = kernel_operator(0.25, dom, 40).unwrap();
    let m = Measures::shifted_cubes(&dom, 2.5, 4, 0.5).unwrap();
    let template = pou_template(&g, ConstructionBudget::parallel(2, 2, 3, 0.5, 1.0), 1000).unwrap();
    let set =
        generate_training_set(&g, &m, &template.w_sensors, &template.u_sensors, SampleCounts::new(3, 2, 4), 0.02, 9)
            .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("train");
    set.save(&stem).unwrap();
    let back = TrainingSet::load(&stem).unwrap();
    assert_eq!(back, set);

    let opt = TrainOptions {
        steps: 100,
        lr: 0.5,
        batch: Some(8),
        seed: 1,
        clip_a: 2.0,
        theta_bound: 4.0,
        train_subnets: false,
    };
    let report = erm_train(&template, &back, &opt).unwrap();
    assert!(report.final_loss() < report.trace[0]);
    let json = report.net.to_json().unwrap();
    assert_eq!(SeparableNet::from_json(&json).unwrap(), report.net);
}

#[test]
fn lab_rows_record_complexity() {
    let lab = Lab::new(config()).unwrap();
    for p in lab.config.points() {
        let row = lab.run_point(&p);
        assert!(row.is_ok(), "{}", row.status);
        assert!(row.complexity.unwrap() >= 2.0 * row.nonzeros.unwrap() - 1e-9);
    }
}
