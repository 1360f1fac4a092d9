use likert_miner::synthetic::SurveyGenerator;
use likert_miner::{run_on_dataset, RunConfig};

fn main() {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5820);
    let ds = SurveyGenerator::new(n, 1).generate();
    let started = std::time::Instant::now();
    let run = run_on_dataset(&RunConfig::default(), &ds, Some("synthetic".into())).expect("valid config");
    print!("{}", run.report.to_text());
    eprintln!("elapsed {:.2?}", started.elapsed());
}
