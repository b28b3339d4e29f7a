//! Pipeline configuration: a TOML file with per-stage tables, overridable by
//! `INFUSE_<SECTION>__<KEY>` environment variables (`INFUSE_SEED` for top-level keys).

use std::path::{Path, PathBuf};

use infuse_core::fit::TrainingHyperparameters;
use infuse_core::ScoreKind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "INFUSE_";

/// Injection frequencies swept when no single frequency is requested.
pub const DEFAULT_FREQUENCIES: [usize; 6] = [10, 100, 200, 500, 1000, 10000];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Required by every stage that draws random numbers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    /// Relation registry; the six default relations when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relations: Option<Vec<String>>,
    pub paths: Paths,
    pub triples: TriplesConfig,
    pub inject: InjectConfig,
    pub eval: EvalConfig,
    pub score: ScoreConfig,
    pub fit: FitConfig,
    pub training: TrainingHyperparameters,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triples: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_in: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_filtered: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_infused: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection_manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection_report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infusion_templates: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question_templates: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token_sidecar: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distractors: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_summary: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fits: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriplesConfig {
    /// Accept relations outside the registry.
    pub permissive: bool,
    /// Keep one triple per (subject, relation) before any stage uses the set.
    pub dedupe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectConfig {
    /// Single frequency; when absent the stage sweeps `frequencies`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<usize>,
    pub frequencies: Vec<usize>,
    pub templates_per_relation: usize,
    /// Token budget D for base corpus plus statements.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_tokens: Option<u64>,
    /// Fail instead of emitting only statements when they alone exceed the budget.
    pub strict_budget: bool,
}

impl Default for InjectConfig {
    fn default() -> Self {
        Self {
            frequency: None,
            frequencies: DEFAULT_FREQUENCIES.to_vec(),
            templates_per_relation: 1,
            budget_tokens: None,
            strict_budget: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DistractorMode {
    ExternalFile,
    #[default]
    SameRelation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub distractor_mode: DistractorMode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub kind: ScoreKind,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub model_size: Option<u64>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub training_tokens: Option<u64>,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub frequency: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// `all` or any of `p1`..`p5`.
    pub forms: Vec<String>,
    pub random_starts: usize,
    /// Curve samples per group in the plot data.
    pub plot_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { forms: vec!["all".into()], random_starts: 0, plot_points: 200 }
    }
}

impl PipelineConfig {
    /// Parse TOML text and apply environment overrides from `env`.
    pub fn parse<I>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        apply_env(&mut table, env)?;
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Read `path` (or start from defaults when `None`) and apply `env`.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingArtifact(p.to_path_buf()),
                _ => Error::io(p, e),
            })?,
            None => String::new(),
        };
        Self::parse(&text, env)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (set `seed` or pass --seed)".into()))
    }
}

fn apply_env<I>(table: &mut toml::Table, env: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
        if path.iter().any(String::is_empty) {
            return Err(Error::Config(format!("malformed override {key}")));
        }
        // Values parse as TOML literals when they can (numbers, booleans, arrays), else as strings.
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(toml::Value::String(raw));
        let (last, parents) = path.split_last().expect("non-empty path");
        let mut cur = &mut *table;
        for p in parents {
            let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry.as_table_mut().ok_or_else(|| Error::Config(format!("{key}: {p} is not a table")))?;
        }
        cur.insert(last.clone(), value);
    }
    Ok(())
}
