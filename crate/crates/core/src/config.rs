//! Run configuration: flat `key=value` text with dotted section prefixes.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::association::Attribute;
use crate::correlation::CorrelationMethod;
use crate::dataset::Schema;
use crate::forest::{Bootstrap, ForestParams};
use crate::tree::TreeParams;

pub const DEFAULT_SEED: u64 = 20131;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
    #[error("cannot read configuration: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Load,
    Reliability,
    Summaries,
    Associations,
    Correlation,
    Cluster,
    Factor,
    Tree,
    Forest,
}

impl Stage {
    /// Optional stages in execution order.
    pub const OPTIONAL: [Stage; 8] = [
        Stage::Reliability,
        Stage::Summaries,
        Stage::Associations,
        Stage::Correlation,
        Stage::Cluster,
        Stage::Factor,
        Stage::Tree,
        Stage::Forest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Reliability => "reliability",
            Stage::Summaries => "summaries",
            Stage::Associations => "associations",
            Stage::Correlation => "correlation",
            Stage::Cluster => "cluster",
            Stage::Factor => "factor",
            Stage::Tree => "tree",
            Stage::Forest => "forest",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        std::iter::once(Stage::Load)
            .chain(Stage::OPTIONAL)
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

/// Class variable for the supervised stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Response {
    /// Cluster-derived Dissatisfied / Neutral / Satisfied labels.
    Opinion,
    /// Levels of one item, predicted from the other items.
    Item(String),
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Opinion => f.write_str("Opinion"),
            Response::Item(name) => f.write_str(name),
        }
    }
}

impl FromStr for Response {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            Err("empty response".into())
        } else if s.eq_ignore_ascii_case("opinion") {
            Ok(Response::Opinion)
        } else {
            Ok(Response::Item(s.to_string()))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub schema: Schema,
    pub seed: u64,
    pub formats: BTreeSet<Format>,
    pub response: Response,
    /// Worker cap; 0 lets the thread pool decide.
    pub threads: usize,
    pub enabled: BTreeSet<Stage>,
    pub associations: Vec<(Attribute, Attribute)>,
    pub correlation_method: CorrelationMethod,
    pub cluster_k: usize,
    pub cluster_restarts: usize,
    pub factor_q: usize,
    pub factor_correlation: CorrelationMethod,
    pub tree: TreeParams,
    pub forest: ForestParams,
    /// Add attendance, difficulty and repetitions to the predictors.
    pub metadata_features: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        use Attribute::*;
        Self {
            input: None,
            out: None,
            schema: Schema::default(),
            seed: DEFAULT_SEED,
            formats: [Format::Text].into(),
            response: Response::Opinion,
            threads: 0,
            enabled: Stage::OPTIONAL.into_iter().collect(),
            associations: vec![
                (Instructor, Variation),
                (Attendance, Variation),
                (Difficulty, Variation),
                (Course, Variation),
                (Difficulty, Attendance),
            ],
            correlation_method: CorrelationMethod::KendallTauB,
            cluster_k: 3,
            cluster_restarts: 10,
            factor_q: 2,
            factor_correlation: CorrelationMethod::KendallTauB,
            tree: TreeParams::default(),
            forest: ForestParams::new(DEFAULT_SEED),
            metadata_features: false,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V, ConfigError>
where
    V::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: V::Err| ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => {
            Err(ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: "expected a boolean".into() })
        }
    }
}

fn parse_pairs(key: &str, value: &str) -> Result<Vec<(Attribute, Attribute)>, ConfigError> {
    let bad = |reason: &str| ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() };
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair.split_once(':').ok_or_else(|| bad("expected `row:column` pairs"))?;
            let a: Attribute = a.trim().parse().map_err(|_| bad("empty attribute"))?;
            let b: Attribute = b.trim().parse().map_err(|_| bad("empty attribute"))?;
            Ok((a, b))
        })
        .collect()
}

impl RunConfig {
    /// Every key `set` understands.
    pub const KEYS: &'static [&'static str] = &[
        "input",
        "out",
        "seed",
        "format",
        "response",
        "threads",
        "schema.instructor",
        "schema.course",
        "schema.repetitions",
        "schema.attendance",
        "schema.difficulty",
        "schema.item_prefix",
        "reliability.enabled",
        "summaries.enabled",
        "associations.enabled",
        "associations.pairs",
        "correlation.enabled",
        "correlation.method",
        "cluster.enabled",
        "cluster.k",
        "cluster.restarts",
        "factor.enabled",
        "factor.q",
        "factor.correlation",
        "tree.enabled",
        "tree.min_split",
        "tree.min_leaf",
        "tree.max_depth",
        "tree.cp",
        "forest.enabled",
        "forest.trees",
        "forest.features",
        "forest.min_split",
        "forest.min_leaf",
        "forest.max_depth",
        "forest.cp",
        "forest.bootstrap",
        "features.metadata",
    ];

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: k + 1, text: line.to_string() })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Reads a config file; relative `input`/`out` paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let mut cfg = Self::parse_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(stage) = key.strip_suffix(".enabled") {
            let stage: Stage = parse(key, stage).map_err(|_| ConfigError::UnknownKey(key.into()))?;
            if stage == Stage::Load {
                return Err(ConfigError::UnknownKey(key.into()));
            }
            if parse_bool(key, value)? {
                self.enabled.insert(stage);
            } else {
                self.enabled.remove(&stage);
            }
            return Ok(());
        }
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => {
                self.seed = parse(key, value)?;
                self.forest.seed = self.seed;
            }
            "format" => {
                self.formats = value.split(',').map(|f| parse(key, f)).collect::<Result<_, _>>()?;
                if self.formats.is_empty() {
                    return Err(ConfigError::InvalidValue {
                        key: key.into(),
                        value: value.into(),
                        reason: "no format".into(),
                    });
                }
            }
            "response" => self.response = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "schema.instructor" => self.schema.instructor = value.into(),
            "schema.course" => self.schema.course = value.into(),
            "schema.repetitions" => self.schema.repetitions = value.into(),
            "schema.attendance" => self.schema.attendance = value.into(),
            "schema.difficulty" => self.schema.difficulty = value.into(),
            "schema.item_prefix" => self.schema.item_prefix = value.into(),
            "associations.pairs" => self.associations = parse_pairs(key, value)?,
            "correlation.method" => self.correlation_method = parse(key, value)?,
            "cluster.k" => self.cluster_k = parse(key, value)?,
            "cluster.restarts" => self.cluster_restarts = parse(key, value)?,
            "factor.q" => self.factor_q = parse(key, value)?,
            "factor.correlation" => self.factor_correlation = parse(key, value)?,
            "tree.min_split" => self.tree.min_split = parse(key, value)?,
            "tree.min_leaf" => self.tree.min_leaf = parse(key, value)?,
            "tree.max_depth" => self.tree.max_depth = parse(key, value)?,
            "tree.cp" => self.tree.cp = parse(key, value)?,
            "forest.trees" => self.forest.trees = parse(key, value)?,
            "forest.features" => {
                let d: usize = parse(key, value)?;
                self.forest.features_per_tree = (d > 0).then_some(d);
            }
            "forest.min_split" => self.forest.tree.min_split = parse(key, value)?,
            "forest.min_leaf" => self.forest.tree.min_leaf = parse(key, value)?,
            "forest.max_depth" => self.forest.tree.max_depth = parse(key, value)?,
            "forest.cp" => self.forest.tree.cp = parse(key, value)?,
            "forest.bootstrap" => {
                self.forest.bootstrap = match value.trim() {
                    "sample" => Bootstrap::Sample,
                    "identity" => Bootstrap::Identity,
                    _ => {
                        return Err(ConfigError::InvalidValue {
                            key: key.into(),
                            value: value.into(),
                            reason: "expected `sample` or `identity`".into(),
                        })
                    }
                }
            }
            "features.metadata" => self.metadata_features = parse_bool(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn is_enabled(&self, stage: Stage) -> bool {
        stage == Stage::Load || self.enabled.contains(&stage)
    }

    /// Enables only `stages` (plus loading).
    pub fn only(&mut self, stages: &[Stage]) {
        self.enabled = stages.iter().copied().filter(|&s| s != Stage::Load).collect();
    }

    /// Checks constraints that do not need the data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let supervised = self.is_enabled(Stage::Tree) || self.is_enabled(Stage::Forest);
        if supervised && self.response == Response::Opinion {
            if !self.is_enabled(Stage::Cluster) {
                return Err(ConfigError::Inconsistent("response Opinion requires the cluster stage".into()));
            }
            if self.cluster_k != 3 {
                return Err(ConfigError::Inconsistent("response Opinion requires cluster.k=3".into()));
            }
        }
        if self.factor_q == 0 {
            return Err(ConfigError::Inconsistent("factor.q must be at least 1".into()));
        }
        if self.cluster_k == 0 || self.cluster_restarts == 0 {
            return Err(ConfigError::Inconsistent("cluster.k and cluster.restarts must be positive".into()));
        }
        if self.forest.trees == 0 {
            return Err(ConfigError::Inconsistent("forest.trees must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = RunConfig::parse_str(
            "# sample\nseed = 7\nforest.trees=50\nforest.features=3\nresponse=Q10\ncorrelation.method=pearson\nfactor.enabled=false\nformat=json,csv\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.forest.seed, 7);
        assert_eq!(cfg.forest.trees, 50);
        assert_eq!(cfg.forest.features_per_tree, Some(3));
        assert_eq!(cfg.response, Response::Item("Q10".into()));
        assert_eq!(cfg.correlation_method, CorrelationMethod::Pearson);
        assert!(!cfg.is_enabled(Stage::Factor));
        assert_eq!(cfg.formats, [Format::Json, Format::Csv].into());
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.seed, 20131);
        assert_eq!(cfg.response, Response::Opinion);
        assert_eq!(cfg.forest.trees, 500);
        assert_eq!(cfg.tree, TreeParams::default());
        assert!(Stage::OPTIONAL.iter().all(|&s| cfg.is_enabled(s)));
        cfg.validate().unwrap();
    }

    #[test]
    fn every_listed_key_is_accepted() {
        let sample = |key: &str| match key {
            "format" => "json",
            "response" => "Q10",
            "associations.pairs" => "course:variation",
            "correlation.method" | "factor.correlation" => "pearson",
            "forest.bootstrap" => "identity",
            "tree.cp" | "forest.cp" => "0.5",
            k if k.ends_with(".enabled") || k == "features.metadata" => "true",
            k if k.starts_with("schema.") || k == "input" || k == "out" => "x",
            _ => "3",
        };
        for key in RunConfig::KEYS {
            RunConfig::default().set(key, sample(key)).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse_str("nonsense"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse_str("cluster.q=2"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::parse_str("seed=abc"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(RunConfig::parse_str("load.enabled=false"), Err(ConfigError::UnknownKey(_))));
        let cfg = RunConfig::parse_str("cluster.enabled=false").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Inconsistent(_))));
        let cfg = RunConfig::parse_str("cluster.enabled=false\nresponse=Q10").unwrap();
        cfg.validate().unwrap();
    }
}
