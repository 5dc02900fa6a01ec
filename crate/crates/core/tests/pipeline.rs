use phri_core::classifiers::{fit_classifier, predict_label, Algorithm, ForestParams, TrainedModel};
use phri_core::dataset::{InteractionClass, LabeledDataset};
use phri_core::evaluation::{run_experiment_grid, CvConfig, GridSpec};
use phri_core::features::{extract_dataset, FeatureMode, FeatureOptions};
use phri_core::io::{read_recording, write_recording};
use phri_core::resampling::smote_balance;
use phri_core::synth::{synth_dataset, ClassCounts, ClassTemplates, SynthConfig};

fn recordings(counts: ClassCounts, seed: u64) -> Vec<phri_core::dataset::Recording> {
    let cfg = SynthConfig {
        rng_seed: seed,
        ..SynthConfig::default()
    };
    synth_dataset(&cfg, &ClassTemplates::default(), &counts).unwrap()
}

#[test]
fn synth_to_model_round_trip() {
    let recs = recordings(ClassCounts::table1(40), 4);
    let tmp = tempfile::tempdir().unwrap();
    let reread: Vec<_> = recs
        .iter()
        .map(|r| read_recording(&write_recording(tmp.path(), r).unwrap()).unwrap())
        .collect();
    let data = LabeledDataset::from_recordings(&reread, 20, 20).unwrap();
    let fvs = extract_dataset(&data, FeatureMode::Abstract, &FeatureOptions::default()).unwrap();
    let balanced = smote_balance(&fvs, 5, 1).unwrap();
    let counts = balanced.class_counts();
    assert!(counts.values().all(|&c| c == balanced.target_count));

    let forest = ForestParams {
        n_trees: 20,
        ..ForestParams::default()
    };
    let classifier = fit_classifier(&balanced.features, Algorithm::Rf, 5, &forest).unwrap();
    let model = TrainedModel {
        version: TrainedModel::VERSION,
        window_size: 20,
        feature_mode: FeatureMode::Abstract,
        layout: fvs[0].layout,
        scaler: None,
        classifier,
    };
    let model = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
    let hits = fvs
        .iter()
        .filter(|f| predict_label(&model.predict_proba(f).unwrap()).unwrap() == f.label)
        .count();
    assert!(hits as f64 / fvs.len() as f64 > 0.95);
    assert!(fvs.iter().any(|f| f.label == InteractionClass::Handle));
}

#[test]
fn thread_count_does_not_change_results() {
    let recs = recordings(ClassCounts([8, 8, 8, 8]), 9);
    let grid = GridSpec {
        windows: vec![10, 30],
        ..GridSpec::default()
    };
    let cv = CvConfig {
        folds: 3,
        repeats: 1,
        forest: ForestParams {
            n_trees: 8,
            ..ForestParams::default()
        },
        ..CvConfig::default()
    };
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = many.install(|| run_experiment_grid(&recs, &grid, &cv).unwrap());
    let b = one.install(|| run_experiment_grid(&recs, &grid, &cv).unwrap());
    assert_eq!(a.reports.len(), 8);
    assert_eq!(a, b);
}
