use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use likert_miner::config::{Format, Response, RunConfig, Stage};
use likert_miner::pipeline::{emit_plot_data, run_on_dataset, write_outputs, PipelineError, PipelineRun, PlotKind};
use likert_miner::synthetic::SurveyGenerator;
use likert_miner::EvaluationDataset;
use serde_json::Value;

fn quick() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.forest.trees = 25;
    cfg.cluster_restarts = 4;
    cfg
}

fn survey() -> EvaluationDataset {
    SurveyGenerator::new(500, 17).generate()
}

fn validator() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(run: &PipelineRun) {
    let doc: Value = serde_json::from_str(&run.report.to_json()).unwrap();
    let errors: Vec<String> =
        validator().iter_errors(&doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn same_seed_gives_byte_identical_json() {
    let ds = survey();
    let a = run_on_dataset(&quick(), &ds, None).unwrap();
    let b = run_on_dataset(&quick(), &ds, None).unwrap();
    assert!(a.report.succeeded());
    assert_eq!(a.report.to_json(), b.report.to_json());
    let mut threaded = quick();
    threaded.threads = 4;
    assert_eq!(run_on_dataset(&threaded, &ds, None).unwrap().report.to_json(), a.report.to_json());
}

#[test]
fn seed_reaches_every_random_stage() {
    let ds = survey();
    let mut other = quick();
    other.seed += 1;
    let a = run_on_dataset(&quick(), &ds, None).unwrap();
    let b = run_on_dataset(&other, &ds, None).unwrap();
    let payload = |r: &PipelineRun, s| r.report.section(s).unwrap().payload.clone();
    assert_ne!(payload(&a, Stage::Forest), payload(&b, Stage::Forest));
    assert_eq!(payload(&a, Stage::Reliability), payload(&b, Stage::Reliability));
}

#[test]
fn full_report_matches_schema() {
    let run = run_on_dataset(&quick(), &survey(), Some("synthetic".into())).unwrap();
    assert_valid(&run);
    let mut item = quick();
    item.response = Response::Item("Q10".into());
    item.only(&[Stage::Tree, Stage::Forest]);
    assert_valid(&run_on_dataset(&item, &survey(), None).unwrap());
}

#[test]
fn load_only_report_holds_dimensions() {
    let mut cfg = quick();
    cfg.only(&[]);
    let run = run_on_dataset(&cfg, &survey(), None).unwrap();
    assert_valid(&run);
    let doc: Value = serde_json::from_str(&run.report.to_json()).unwrap();
    assert_eq!(doc["dataset"]["n"], 500);
    assert_eq!(doc["dataset"]["p"], 28);
    assert_eq!(doc["sections"].as_array().unwrap().len(), 1);
}

#[test]
fn enabled_stages_appear_once_and_disabled_are_absent() {
    let ds = survey();
    let subsets: [&[Stage]; 4] = [
        &[Stage::Reliability],
        &[Stage::Correlation, Stage::Factor],
        &[Stage::Summaries, Stage::Associations, Stage::Cluster],
        &[Stage::Cluster, Stage::Tree],
    ];
    for subset in subsets {
        let mut cfg = quick();
        cfg.only(subset);
        let run = run_on_dataset(&cfg, &ds, None).unwrap();
        assert!(run.report.succeeded(), "{subset:?}: {:?}", run.report.failure);
        let got: Vec<Stage> = run.report.sections.iter().map(|s| s.stage).collect();
        let mut want = vec![Stage::Load];
        want.extend(Stage::OPTIONAL.iter().copied().filter(|s| subset.contains(s)));
        assert_eq!(got, want);
    }
}

#[test]
fn failing_stage_leaves_a_marked_partial_report() {
    let mut cfg = quick();
    cfg.response = Response::Item("Q99".into());
    let run = run_on_dataset(&cfg, &survey(), None).unwrap();
    assert!(!run.report.succeeded());
    assert_valid(&run);
    let doc: Value = serde_json::from_str(&run.report.to_json()).unwrap();
    assert_eq!(doc["failure"]["stage"], "tree");
    assert!(doc["failure"]["message"].as_str().unwrap().contains("Q99"));
}

#[test]
fn output_format_changes_only_serialization() {
    let ds = survey();
    let run = |formats: &[Format]| {
        let mut cfg = quick();
        cfg.formats = formats.iter().copied().collect::<BTreeSet<_>>();
        run_on_dataset(&cfg, &ds, None).unwrap()
    };
    let json = run(&[Format::Json]);
    let csv = run(&[Format::Csv]);
    let text = run(&[Format::Text]);
    assert_eq!(json.report, csv.report);
    assert_eq!(json.report, text.report);

    let dir = tempfile::tempdir().unwrap();
    write_outputs(&csv, &[Format::Csv], dir.path()).unwrap();
    let doc: Value = serde_json::from_str(&json.report.to_json()).unwrap();
    let forest = &json.report.section(Stage::Forest).unwrap().payload;
    let mut rdr = csv::Reader::from_path(dir.path().join("importance.csv")).unwrap();
    for (row, want) in rdr.records().zip(forest["importance"].as_array().unwrap()) {
        let row = row.unwrap();
        assert_eq!(row[0], *want["feature"].as_str().unwrap());
        assert_eq!(row[1].parse::<f64>().unwrap(), want["importance"].as_f64().unwrap());
        assert_eq!(row[2].parse::<u64>().unwrap(), want["rank"].as_u64().unwrap());
    }
    assert_eq!(doc["seed"], 20131);
}

#[test]
fn plot_data_files() {
    let ds = survey();
    let run = run_on_dataset(&quick(), &ds, None).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let course = emit_plot_data(&run, PlotKind::CourseVariation, dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(&course[0]).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let courses: BTreeSet<String> = rows.iter().map(|r| r[0].to_string()).collect();
    let classes: BTreeSet<String> = rows.iter().map(|r| r[1].to_string()).collect();
    assert_eq!((courses.len(), classes.len(), rows.len()), (13, 2, 26));
    assert_eq!(rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum::<usize>(), ds.n());

    let bars = emit_plot_data(&run, PlotKind::ItemBars, dir.path()).unwrap();
    assert_eq!(bars.len(), 28);
    assert!(bars.iter().all(|p| p.is_file()));

    for kind in PlotKind::ALL {
        assert!(!emit_plot_data(&run, kind, dir.path()).unwrap().is_empty(), "{}", kind.name());
    }

    let mut cfg = quick();
    cfg.only(&[Stage::Reliability]);
    let bare = run_on_dataset(&cfg, &ds, None).unwrap();
    assert!(matches!(
        emit_plot_data(&bare, PlotKind::Importance, dir.path()),
        Err(PipelineError::StageNotRun(Stage::Forest))
    ));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(
        &path,
        "# quick run\ninput = survey.csv\nseed = 7\nforest.trees = 25\nfactor.enabled = false\nformat = json,csv\n",
    )
    .unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.input, Some(dir.path().join("survey.csv")));
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.forest.trees, 25);
    assert!(!cfg.is_enabled(Stage::Factor));
    assert!(cfg.formats.contains(&Format::Csv));
    assert!(RunConfig::parse_str("forest.tres = 3").is_err());
}
