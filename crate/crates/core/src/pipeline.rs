//! Runs the configured stages in dependency order and collects a report
//! plus the tables needed for plot-data export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::association::{
    chi_squared_test, crosstab, format_p_value, write_long_csv, AssociationError, Attribute, ChiSquaredReport,
    ContingencyTable,
};
use crate::clustering::{kmeans, label_clusters, ClusterError, ClusterModel, ClusterSummary, Opinion};
use crate::config::{ConfigError, Format, Response, RunConfig, Stage};
use crate::correlation::{
    compare_matrices, correlation_matrix, CorrelationError, CorrelationMatrix, CorrelationMethod,
};
use crate::dataset::{load_csv, DatasetError, EvaluationDataset};
use crate::factor::{extract_factors, factor_scores, FactorError, FactorModel, FactorOptions, FactorScores};
use crate::forest::{
    avoob, oob_confusion, train_forest, variable_importance, ConfusionMatrix, ForestError, ImportanceReport,
};
use crate::reliability::{cronbach_alpha, partition_by_variation, respondent_reliability, ReliabilityError};
use crate::summaries::{grand_summary, item_distributions, write_distribution_csv, ItemDistribution};
use crate::tree::{grow_tree, DecisionTree, FeatureMatrix, LabeledDataset, TreeError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no input file configured")]
    NoInput,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
    #[error(transparent)]
    Association(#[from] AssociationError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("{0}")]
    Invalid(String),
    #[error("stage `{0}` did not run")]
    StageNotRun(Stage),
    #[error("cannot build worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub source: Option<String>,
    pub n: usize,
    pub p: usize,
    pub items: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section {
    pub stage: Stage,
    pub payload: Value,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub response: String,
    pub dataset: DatasetInfo,
    /// One entry per stage that completed, in execution order.
    pub sections: Vec<Section>,
    /// Set when a stage failed; later stages did not run.
    pub failure: Option<StageFailure>,
}

impl AnalysisReport {
    pub fn section(&self, stage: Stage) -> Option<&Section> {
        self.sections.iter().find(|s| s.stage == stage)
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for sec in &self.sections {
            let _ = writeln!(s, "== {} ==", sec.stage);
            s.push_str(&sec.text);
            if !sec.text.ends_with('\n') {
                s.push('\n');
            }
            s.push('\n');
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(s, "!! stage {} failed: {}", f.stage, f.message);
        }
        s
    }
}

/// Tables kept from each stage for plot-data export.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub distributions: Option<Vec<ItemDistribution<f64>>>,
    pub course_variation: Option<ContingencyTable>,
    pub correlation: Option<CorrelationMatrix<f64>>,
    pub cluster: Option<ClusterModel<f64>>,
    pub opinions: Option<Vec<Opinion>>,
    pub factor: Option<FactorModel<f64>>,
    pub scores: Option<FactorScores<f64>>,
    pub tree: Option<DecisionTree>,
    pub importance: Option<ImportanceReport<f64>>,
    pub confusion: Option<ConfusionMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: AnalysisReport,
    pub artifacts: Artifacts,
}

/// Loads the configured input and runs every enabled stage.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    let input = cfg.input.as_ref().ok_or(PipelineError::NoInput)?;
    let ds = load_csv(input, &cfg.schema)?;
    run_on_dataset(cfg, &ds, Some(input.display().to_string()))
}

/// Runs every enabled stage on an already loaded dataset.
pub fn run_on_dataset(
    cfg: &RunConfig,
    ds: &EvaluationDataset,
    source: Option<String>,
) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| PipelineError::WorkerPool(e.to_string()))?;
        Ok(pool.install(|| run_stages(cfg, ds, source)))
    } else {
        Ok(run_stages(cfg, ds, source))
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    ds: &'a EvaluationDataset,
    artifacts: Artifacts,
}

type StageOutput = Result<(Value, String), PipelineError>;

fn run_stages(cfg: &RunConfig, ds: &EvaluationDataset, source: Option<String>) -> PipelineRun {
    let m = ds.matrix();
    let mut report = AnalysisReport {
        tool: "likert-miner".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        response: cfg.response.to_string(),
        dataset: DatasetInfo { source, n: m.n(), p: m.p(), items: m.item_names().to_vec() },
        sections: Vec::new(),
        failure: None,
    };
    report.sections.push(Section {
        stage: Stage::Load,
        payload: json!({ "n": m.n(), "p": m.p(), "items": m.item_names() }),
        text: format!("{} respondents × {} items\n", m.n(), m.p()),
    });
    let mut runner = Runner { cfg, ds, artifacts: Artifacts::default() };
    for stage in Stage::OPTIONAL {
        if !cfg.is_enabled(stage) {
            continue;
        }
        let out = match stage {
            Stage::Reliability => runner.reliability(),
            Stage::Summaries => runner.summaries(),
            Stage::Associations => runner.associations(),
            Stage::Correlation => runner.correlation(),
            Stage::Cluster => runner.cluster(),
            Stage::Factor => runner.factor(),
            Stage::Tree => runner.tree(),
            Stage::Forest => runner.forest(),
            Stage::Load => unreachable!("load is not optional"),
        };
        match out {
            Ok((payload, text)) => report.sections.push(Section { stage, payload, text }),
            Err(e) => {
                report.failure = Some(StageFailure { stage, message: e.to_string() });
                break;
            }
        }
    }
    PipelineRun { report, artifacts: runner.artifacts }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "undefined".into())
}

impl Runner<'_> {
    fn reliability(&mut self) -> StageOutput {
        let m = self.ds.matrix();
        let full = cronbach_alpha::<f64>(m)?;
        let part = partition_by_variation::<f64>(m);
        let alpha_nonzero = cronbach_alpha::<f64>(&m.select_rows(&part.nonzero_rows)).ok().map(|r| r.alpha);
        let alpha_zero = cronbach_alpha::<f64>(&m.select_rows(&part.zero_rows)).ok().map(|r| r.alpha);
        let respondent = respondent_reliability::<f64>(m).ok().map(|r| r.alpha);
        let payload = json!({
            "alpha": full.alpha,
            "n": full.n,
            "p": full.p,
            "zero_count": part.zero_count(),
            "zero_fraction": part.zero_fraction,
            "alpha_nonzero": alpha_nonzero,
            "alpha_zero": alpha_zero,
            "respondent_alpha": respondent,
        });
        let text = format!(
            "Cronbach alpha: {:.4}\nzero-variation respondents: {} of {} ({:.4})\nalpha (nonzero variation): {}\nalpha (zero variation): {}\nrespondent reliability: {}\n",
            full.alpha,
            part.zero_count(),
            part.n(),
            part.zero_fraction,
            fmt_opt(alpha_nonzero),
            fmt_opt(alpha_zero),
            fmt_opt(respondent),
        );
        Ok((payload, text))
    }

    fn summaries(&mut self) -> StageOutput {
        let m = self.ds.matrix();
        let overall = grand_summary::<f64>(m).ok_or_else(|| PipelineError::Invalid("no respondents".into()))?;
        let mut instructors: Vec<u32> = self.ds.meta().instructor.clone();
        instructors.sort_unstable();
        instructors.dedup();
        let mut per_instructor = Vec::new();
        let mut text = format!(
            "grand mode {} (tied: {:?}), grand median {}, grand mean {:.4}\n",
            overall.grand_mode, overall.grand_mode_ties, overall.grand_median.value, overall.grand_mean
        );
        for code in instructors {
            let rows: Vec<usize> = (0..m.n()).filter(|&i| self.ds.meta().instructor[i] == code).collect();
            if let Some(s) = grand_summary::<f64>(&m.select_rows(&rows)) {
                let _ = writeln!(
                    text,
                    "instructor {code}: n={} mode {} median {} mean {:.4}",
                    rows.len(),
                    s.grand_mode,
                    s.grand_median.value,
                    s.grand_mean
                );
                per_instructor.push(json!({
                    "instructor": code,
                    "n": rows.len(),
                    "grand_mode": s.grand_mode,
                    "grand_mode_ties": s.grand_mode_ties,
                    "grand_median": s.grand_median,
                    "grand_mean": s.grand_mean,
                }));
            }
        }
        let dists = item_distributions::<f64>(m);
        let payload = json!({ "overall": overall, "per_instructor": per_instructor, "distributions": dists });
        self.artifacts.distributions = Some(dists);
        Ok((payload, text))
    }

    fn associations(&mut self) -> StageOutput {
        let mut tests = Vec::new();
        let mut text = String::new();
        for (a, b) in &self.cfg.associations {
            let a = Attribute::parse_for(&a.name(), self.ds)?;
            let b = Attribute::parse_for(&b.name(), self.ds)?;
            let t = crosstab(self.ds, &a, &b)?;
            let r = chi_squared_test::<f64>(&t)?;
            let _ = writeln!(
                text,
                "{a} × {b}: X-squared = {:.4}, df = {}, p-value {}",
                r.statistic,
                r.df,
                format_p_value(r.p_value)
            );
            let mut v = serde_json::to_value(ChiSquaredReport::new(&a, &b, &t, &r))?;
            v["p_value_text"] = json!(format_p_value(r.p_value));
            tests.push(v);
        }
        self.artifacts.course_variation = Some(crosstab(self.ds, &Attribute::Course, &Attribute::Variation)?);
        Ok((json!({ "tests": tests }), text))
    }

    fn correlation_for(&self, method: CorrelationMethod) -> Result<CorrelationMatrix<f64>, PipelineError> {
        match &self.artifacts.correlation {
            Some(c) if c.method == method => Ok(c.clone()),
            _ => Ok(correlation_matrix(self.ds.matrix(), method)?),
        }
    }

    fn correlation(&mut self) -> StageOutput {
        let m = self.ds.matrix();
        let primary = correlation_matrix::<f64>(m, self.cfg.correlation_method)?;
        let other_method = match self.cfg.correlation_method {
            CorrelationMethod::Pearson => CorrelationMethod::KendallTauB,
            CorrelationMethod::KendallTauB => CorrelationMethod::Pearson,
        };
        let other = correlation_matrix::<f64>(m, other_method)?;
        let (pearson, kendall) = match self.cfg.correlation_method {
            CorrelationMethod::Pearson => (&primary, &other),
            CorrelationMethod::KendallTauB => (&other, &primary),
        };
        let cmp = compare_matrices(pearson, kendall)?;
        let text = format!(
            "method: {:?}\nmean off-diagonal (Pearson − tau-B): {:.4}\nlargest |Pearson − tau-B|: {:.4}\nrank agreement of entries: {:.4}\n",
            primary.method, cmp.mean_offset, cmp.max_abs_offset, cmp.rank_agreement
        );
        let payload = json!({
            "method": primary.method,
            "items": primary.item_names,
            "matrix": primary.rows(),
            "pearson_vs_kendall": cmp,
        });
        self.artifacts.correlation = Some(primary);
        Ok((payload, text))
    }

    fn cluster(&mut self) -> StageOutput {
        let m = self.ds.matrix();
        let model = kmeans::<f64>(m, self.cfg.cluster_k, self.cfg.seed, self.cfg.cluster_restarts)?;
        let labeling = if model.k == 3 { Some(label_clusters(&model)?) } else { None };
        let summary = ClusterSummary::new(&model, labeling.as_ref());
        let mut text = format!(
            "k = {}, best of {} restarts, {:.2}% of variation between clusters\n",
            model.k,
            self.cfg.cluster_restarts,
            100.0 * model.pct_variation
        );
        for c in 0..model.k {
            let label = labeling.as_ref().map(|l| l.labels[c].name()).unwrap_or("-");
            let _ = writeln!(
                text,
                "cluster {}: size {}, center average {:.3}, {label}",
                c + 1,
                model.sizes[c],
                model.center_averages[c]
            );
        }
        let mut payload = serde_json::to_value(&summary)?;
        payload["iterations"] = json!(model.iterations);
        payload["converged"] = json!(model.converged);
        payload["best_restart"] = json!(model.best_restart);
        payload["restarts"] = json!(self.cfg.cluster_restarts);
        self.artifacts.opinions = labeling.map(|l| l.row_labels(&model.assignments));
        self.artifacts.cluster = Some(model);
        Ok((payload, text))
    }

    fn factor(&mut self) -> StageOutput {
        let m = self.ds.matrix();
        if self.cfg.factor_q >= m.p() {
            return Err(PipelineError::Invalid(format!(
                "factor.q = {} must be below p = {}",
                self.cfg.factor_q,
                m.p()
            )));
        }
        let c = self.correlation_for(self.cfg.factor_correlation)?;
        let model = extract_factors(&c, self.cfg.factor_q, &FactorOptions::default())?;
        let scores = factor_scores(&model, m, &c)?;
        let mut text = format!(
            "{} factors on {:?} correlations, {:.2}% of variance, {} iterations{}{}\n",
            model.q,
            c.method,
            100.0 * model.pct_variance,
            model.iterations,
            if model.converged { "" } else { " (not converged)" },
            if model.heywood { " (Heywood case)" } else { "" },
        );
        for (i, name) in model.item_names.iter().enumerate() {
            let row: Vec<String> = (0..model.q).map(|f| format!("{:7.3}", model.loading(i, f))).collect();
            let _ = writeln!(text, "{name:>5} {}  h2 {:.3}", row.join(" "), model.communalities[i]);
        }
        let payload = json!({
            "q": model.q,
            "correlation": c.method,
            "items": model.item_names,
            "loadings": model.loadings.to_rows(),
            "communalities": model.communalities,
            "pct_variance": model.pct_variance,
            "factor_variance": model.factor_variance,
            "rotation": model.rotation,
            "iterations": model.iterations,
            "converged": model.converged,
            "heywood": model.heywood,
            "degenerate": model.degenerate,
            "score_method": scores.method,
        });
        self.artifacts.factor = Some(model);
        self.artifacts.scores = Some(scores);
        Ok((payload, text))
    }

    fn labeled(&self) -> Result<LabeledDataset, PipelineError> {
        let m = self.ds.matrix();
        let all = FeatureMatrix::from_likert(m);
        let (mut features, labels, classes) = match &self.cfg.response {
            Response::Opinion => {
                let opinions = self.artifacts.opinions.as_ref().ok_or_else(|| {
                    PipelineError::Invalid(
                        "response Opinion needs a three-cluster solution from the cluster stage".into(),
                    )
                })?;
                let labels = opinions.iter().map(|&o| o as usize).collect();
                (all, labels, Opinion::ALL.iter().map(|o| o.name().to_string()).collect())
            }
            Response::Item(name) => {
                let j = m
                    .item_index(name)
                    .ok_or_else(|| PipelineError::Invalid(format!("unknown response item `{name}`")))?;
                let labels = (0..m.n()).map(|i| m.get(i, j).slot()).collect();
                (all.without(name)?, labels, (1..=5).map(|l: u8| l.to_string()).collect())
            }
        };
        if self.cfg.metadata_features {
            let meta = self.ds.meta();
            let reps: Vec<u8> = meta
                .repetitions
                .iter()
                .map(|&r| {
                    u8::try_from(r).map_err(|_| PipelineError::Invalid(format!("repetition count {r} too large")))
                })
                .collect::<Result<_, _>>()?;
            features.push_column(&self.cfg.schema.attendance, &meta.attendance)?;
            features.push_column(&self.cfg.schema.difficulty, &meta.difficulty)?;
            features.push_column(&self.cfg.schema.repetitions, &reps)?;
        }
        Ok(LabeledDataset::new(features, labels, classes)?)
    }

    fn tree(&mut self) -> StageOutput {
        let d = self.labeled()?;
        let tree = grow_tree(&d, &self.cfg.tree)?;
        let wrong = (0..d.n()).filter(|&i| tree.predict(d.features.row(i)).ok() != Some(d.labels[i])).count();
        let training_error = wrong as f64 / d.n() as f64;
        let root = tree.root_split().map(|(f, t)| json!({ "feature": f, "threshold": t }));
        let payload = json!({
            "response": self.cfg.response.to_string(),
            "classes": d.classes,
            "features": d.features.names(),
            "root_split": root,
            "regions": tree.regions(),
            "depth": tree.root.depth(),
            "single_class": tree.single_class,
            "training_error": training_error,
            "tree": tree.to_json(),
        });
        let text = format!(
            "response {}: {} regions, depth {}, training error {:.4}\n{}",
            self.cfg.response,
            tree.regions(),
            tree.root.depth(),
            training_error,
            tree.to_text()
        );
        self.artifacts.tree = Some(tree);
        Ok((payload, text))
    }

    fn forest(&mut self) -> StageOutput {
        let d = self.labeled()?;
        let mut params = self.cfg.forest.clone();
        params.seed = self.cfg.seed;
        let forest = train_forest::<f64>(&d, &params)?;
        let av = avoob(&forest).ok();
        let confusion = oob_confusion(&forest, &d)?;
        let importance = variable_importance(&forest);
        let oob_fraction =
            forest.trees.iter().map(|t| t.oob.len() as f64 / d.n() as f64).sum::<f64>() / forest.trees.len() as f64;
        let ranked: Vec<Value> = importance
            .ranking
            .iter()
            .enumerate()
            .map(|(r, &j)| json!({ "feature": importance.features[j], "importance": importance.scores[j], "rank": r + 1 }))
            .collect();
        let mut text = format!(
            "response {}: {} trees, {} features per tree\nAVOOB: {}\nmean out-of-bag fraction: {:.4}\nout-of-bag vote confusion (true × predicted), coverage {:.4}:\n",
            self.cfg.response,
            forest.trees.len(),
            params.resolved_features(d.features.p()),
            fmt_opt(av),
            oob_fraction,
            confusion.coverage()
        );
        for (g, row) in confusion.counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:6}")).collect();
            let _ = writeln!(
                text,
                "{:>12} {}  class.error {}",
                confusion.classes[g],
                cells.join(" "),
                fmt_opt(confusion.class_error[g])
            );
        }
        let _ = writeln!(text, "importance (mean decrease in Gini):");
        for &j in importance.ranking.iter().take(10) {
            let _ = writeln!(text, "{:>12} {:.3}", importance.features[j], importance.scores[j]);
        }
        let payload = json!({
            "response": self.cfg.response.to_string(),
            "trees": forest.trees.len(),
            "features_per_tree": params.resolved_features(d.features.p()),
            "avoob": av,
            "mean_oob_fraction": oob_fraction,
            "confusion": {
                "kind": "out-of-bag vote",
                "classes": confusion.classes,
                "counts": confusion.counts,
                "class_error": confusion.class_error,
                "covered": confusion.covered,
                "excluded": confusion.excluded,
                "coverage": confusion.coverage(),
            },
            "importance": ranked,
        });
        self.artifacts.importance = Some(importance);
        self.artifacts.confusion = Some(confusion);
        Ok((payload, text))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PlotKind {
    /// `course,variation_class,count`
    CourseVariation,
    /// One `item,level,count,proportion` file per item.
    ItemBars,
    /// `feature,importance,rank`
    Importance,
    Confusion,
    Loadings,
    Scores,
    Correlation,
    Clusters,
    Tree,
}

impl PlotKind {
    pub const ALL: [PlotKind; 9] = [
        PlotKind::CourseVariation,
        PlotKind::ItemBars,
        PlotKind::Importance,
        PlotKind::Confusion,
        PlotKind::Loadings,
        PlotKind::Scores,
        PlotKind::Correlation,
        PlotKind::Clusters,
        PlotKind::Tree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::CourseVariation => "course_variation",
            PlotKind::ItemBars => "item_bars",
            PlotKind::Importance => "importance",
            PlotKind::Confusion => "confusion",
            PlotKind::Loadings => "loadings",
            PlotKind::Scores => "scores",
            PlotKind::Correlation => "correlation",
            PlotKind::Clusters => "clusters",
            PlotKind::Tree => "tree",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            PlotKind::CourseVariation => Stage::Associations,
            PlotKind::ItemBars => Stage::Summaries,
            PlotKind::Importance | PlotKind::Confusion => Stage::Forest,
            PlotKind::Loadings | PlotKind::Scores => Stage::Factor,
            PlotKind::Correlation => Stage::Correlation,
            PlotKind::Clusters => Stage::Cluster,
            PlotKind::Tree => Stage::Tree,
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PlotKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown plot kind `{s}`"))
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, fs::File), PipelineError> {
    let path = dir.join(name);
    let file = fs::File::create(&path)?;
    Ok((path, file))
}

/// Writes plot data for `kind` under `dir`, returning the files written.
pub fn emit_plot_data(run: &PipelineRun, kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let a = &run.artifacts;
    let missing = || PipelineError::StageNotRun(kind.stage());
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match kind {
        PlotKind::CourseVariation => {
            let t = a.course_variation.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "course_variation.csv")?;
            write_long_csv(t, "course", "variation_class", f)?;
            written.push(path);
        }
        PlotKind::ItemBars => {
            let dists = a.distributions.as_ref().ok_or_else(missing)?;
            let sub = dir.join("item_bars");
            fs::create_dir_all(&sub)?;
            for d in dists {
                let (path, f) = create(&sub, &format!("{}.csv", d.item_name))?;
                write_distribution_csv(std::slice::from_ref(d), f)?;
                written.push(path);
            }
        }
        PlotKind::Importance => {
            let imp = a.importance.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "importance.csv")?;
            imp.write_csv(f)?;
            written.push(path);
        }
        PlotKind::Confusion => {
            let c = a.confusion.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "oob_confusion.csv")?;
            c.write_csv(f)?;
            written.push(path);
        }
        PlotKind::Loadings => {
            let m = a.factor.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "factor_loadings.csv")?;
            m.write_loadings_csv(f)?;
            written.push(path);
        }
        PlotKind::Scores => {
            let s = a.scores.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "factor_scores.csv")?;
            s.write_csv(f)?;
            written.push(path);
        }
        PlotKind::Correlation => {
            let c = a.correlation.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "correlation.csv")?;
            c.write_csv(f)?;
            written.push(path);
        }
        PlotKind::Clusters => {
            let model = a.cluster.as_ref().ok_or_else(missing)?;
            let (path, f) = create(dir, "clusters.csv")?;
            let mut w = csv::Writer::from_writer(f);
            let mut header = vec!["cluster".to_string(), "size".into(), "center_average".into()];
            header.extend(run.report.dataset.items.iter().cloned());
            w.write_record(&header)?;
            for c in 0..model.k {
                let mut rec =
                    vec![(c + 1).to_string(), model.sizes[c].to_string(), model.center_averages[c].to_string()];
                rec.extend(model.centers[c].iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            w.flush()?;
            written.push(path);
        }
        PlotKind::Tree => {
            let t = a.tree.as_ref().ok_or_else(missing)?;
            let (path, _) = create(dir, "tree.txt")?;
            fs::write(&path, t.to_text())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes the report in every configured format into `dir`; with `csv`,
/// plot data for every stage that ran is written as well.
pub fn write_outputs(run: &PipelineRun, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &format in formats {
        match format {
            Format::Json => {
                let path = dir.join("report.json");
                fs::write(&path, run.report.to_json())?;
                written.push(path);
            }
            Format::Text => {
                let path = dir.join("report.txt");
                fs::write(&path, run.report.to_text())?;
                written.push(path);
            }
            Format::Csv => {
                for kind in PlotKind::ALL {
                    if run.report.section(kind.stage()).is_some() {
                        written.extend(emit_plot_data(run, kind, dir)?);
                    }
                }
            }
        }
    }
    Ok(written)
}
