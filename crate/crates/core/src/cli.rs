//! Batch entry points and the file formats they own: scenario configs,
//! line-delimited trace files, and the schema-store database. All
//! randomness flows from the single config seed; outputs never depend on
//! the wall clock or the environment.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 replay mismatch.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{run_episode, EpisodeParams, PayoffMode, Termination, TraceEvent};
use crate::geons::{default_catalog, Catalog, SchemaStore};
use crate::worldgen::{generate_scene, load_scene, save_scene, scene_from_str, ClassMix, Scene};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("replay mismatch: regenerated trace differs from the file")]
    ReplayMismatch,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::ReplayMismatch => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

/// Where the scenario's scene comes from: a file, an inline description, or
/// seeded generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    Path(String),
    Inline(Box<Scene>),
    Generate {
        objects: usize,
        #[serde(default)]
        mix: ClassMix,
    },
}

fn default_version() -> u32 {
    1
}
fn default_fov() -> f64 {
    90.0
}
fn default_horizon() -> f64 {
    12.0
}
fn default_capacity() -> usize {
    3
}
fn default_horizon_steps() -> usize {
    2
}
fn default_payoff_mode() -> PayoffMode {
    PayoffMode::ParJoin
}
fn default_max_steps() -> u64 {
    200
}
fn default_free_score() -> f64 {
    0.25
}

/// A scenario: the scene plus every knob of the episode. Unknown keys are
/// rejected so that typos fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub seed: u64,
    pub scene: SceneSource,
    #[serde(default = "default_fov")]
    pub fov_degrees: f64,
    #[serde(default = "default_horizon")]
    pub horizon_m: f64,
    #[serde(default = "default_capacity")]
    pub capacity_k: usize,
    #[serde(default = "default_horizon_steps")]
    pub horizon_steps: usize,
    #[serde(default = "default_payoff_mode")]
    pub payoff_mode: PayoffMode,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_free_score")]
    pub free_score: f64,
    /// Per-object salience overrides (object id as key).
    #[serde(default)]
    pub salience: BTreeMap<String, f64>,
    /// Path to a catalog override file (JSON class list).
    #[serde(default)]
    pub catalog: Option<String>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(CliError::Data(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if !(0.0 < self.fov_degrees && self.fov_degrees <= 360.0) {
            return Err(CliError::Data("fov_degrees outside (0, 360]".into()));
        }
        if self.horizon_m <= 0.0 {
            return Err(CliError::Data("horizon_m must be positive".into()));
        }
        if self.capacity_k < 1 {
            return Err(CliError::Data("capacity_k must be at least 1".into()));
        }
        if !(1..=4).contains(&self.horizon_steps) {
            return Err(CliError::Data("horizon_steps must be in 1..=4".into()));
        }
        for (key, value) in &self.salience {
            if key.parse::<u32>().is_err() {
                return Err(CliError::Data(format!("salience key `{key}` is not an id")));
            }
            if *value < 0.0 {
                return Err(CliError::Data("salience must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn episode_params(&self) -> EpisodeParams {
        EpisodeParams {
            fov_degrees: self.fov_degrees,
            horizon_m: self.horizon_m,
            capacity_k: self.capacity_k,
            horizon_steps: self.horizon_steps,
            payoff_mode: self.payoff_mode,
            max_steps: self.max_steps,
            free_score: self.free_score,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(data)?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(data)?;
    config.validate()?;
    Ok(config)
}

/// Resolves the config's scene source and applies salience overrides.
/// Relative scene paths are taken relative to the config file's directory.
pub fn resolve_scene(config: &ScenarioConfig, config_dir: &Path) -> Result<Scene> {
    let mut scene = match &config.scene {
        SceneSource::Path(p) => {
            let path = if Path::new(p).is_absolute() {
                PathBuf::from(p)
            } else {
                config_dir.join(p)
            };
            load_scene(&path, false).map_err(data)?
        }
        SceneSource::Inline(s) => {
            let text = crate::worldgen::scene_to_string(s).map_err(data)?;
            scene_from_str(&text, false).map_err(data)?
        }
        SceneSource::Generate { objects, mix } => {
            generate_scene(config.seed, *objects, mix).map_err(data)?
        }
    };
    for (key, value) in &config.salience {
        let id: u32 = key.parse().expect("validated");
        if let Some(obj) = scene.objects.iter_mut().find(|o| o.object_id == id) {
            obj.salience = *value;
        }
    }
    Ok(scene)
}

pub fn resolve_catalog(config: &ScenarioConfig, config_dir: &Path) -> Result<Catalog> {
    match &config.catalog {
        None => Ok(default_catalog()),
        Some(p) => {
            let path = if Path::new(p).is_absolute() {
                PathBuf::from(p)
            } else {
                config_dir.join(p)
            };
            let text = std::fs::read_to_string(&path).map_err(data)?;
            Catalog::from_json(&text).map_err(data)
        }
    }
}

/// Canonical one-line rendering of a trace event: sorted keys, shortest
/// round-trip floats. Replay compares these bytes exactly.
pub fn encode_trace_event(event: &TraceEvent) -> Result<String> {
    let value = serde_json::to_value(event).map_err(data)?;
    serde_json::to_string(&value).map_err(data)
}

pub fn encode_trace(events: &[TraceEvent]) -> Result<String> {
    let mut out = String::new();
    for e in events {
        out.push_str(&encode_trace_event(e)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a mix argument of the form `tree=1,wall=2,stairs=0.5`.
pub fn parse_mix(text: &str) -> Result<ClassMix> {
    let mut mix = ClassMix {
        tree: 0.0,
        wall: 0.0,
        stairs: 0.0,
    };
    for part in text.split(',').filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad mix entry `{part}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad mix weight in `{part}`")))?;
        if value < 0.0 {
            return Err(CliError::Usage("mix weights must be non-negative".into()));
        }
        match name.trim() {
            "tree" => mix.tree = value,
            "wall" => mix.wall = value,
            "stairs" => mix.stairs = value,
            other => return Err(CliError::Usage(format!("unknown class `{other}`"))),
        }
    }
    if mix.tree + mix.wall + mix.stairs <= 0.0 {
        return Err(CliError::Usage("mix weights must not all be zero".into()));
    }
    Ok(mix)
}

/// `generate`: seeded scene to a file.
pub fn cmd_generate(seed: u64, objects: usize, mix: &ClassMix, out: &Path) -> Result<()> {
    let scene = generate_scene(seed, objects, mix).map_err(data)?;
    save_scene(&scene, out).map_err(data)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub termination: Termination,
    pub objects_discovered: usize,
    pub types_stored: usize,
    pub schemes_stored: usize,
}

/// `run`: execute the episode described by the config, write the trace and
/// fold the episode's schema store into the database file.
pub fn cmd_run(config_path: &Path, trace_out: &Path, db_path: &Path) -> Result<RunSummary> {
    let config = load_config(config_path)?;
    let dir = config_dir(config_path);
    let scene = resolve_scene(&config, &dir)?;
    let catalog = resolve_catalog(&config, &dir)?;
    let outcome = run_episode(&scene, &catalog, &config.episode_params()).map_err(data)?;

    std::fs::write(trace_out, encode_trace(&outcome.trace)?).map_err(data)?;

    let mut db = if db_path.exists() {
        SchemaStore::load(db_path).map_err(data)?
    } else {
        SchemaStore::new()
    };
    db.merge(&outcome.store);
    db.save(db_path).map_err(data)?;

    Ok(RunSummary {
        steps: outcome.trace.len(),
        termination: outcome.termination,
        objects_discovered: outcome.final_state.beliefs.len(),
        types_stored: outcome.store.len(),
        schemes_stored: outcome
            .store
            .records()
            .values()
            .map(|r| r.schemes.len())
            .sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub matched: bool,
    pub file_events: usize,
    pub regenerated_events: usize,
}

/// `replay`: re-execute the episode from (seed, config) and compare the
/// regenerated trace byte-for-byte with the stored one.
pub fn cmd_replay(trace_path: &Path, config_path: &Path) -> Result<ReplayReport> {
    let config = load_config(config_path)?;
    let dir = config_dir(config_path);
    let scene = resolve_scene(&config, &dir)?;
    let catalog = resolve_catalog(&config, &dir)?;
    let stored = std::fs::read_to_string(trace_path).map_err(data)?;
    let outcome = run_episode(&scene, &catalog, &config.episode_params()).map_err(data)?;
    let regenerated = encode_trace(&outcome.trace)?;
    let report = ReplayReport {
        matched: stored == regenerated,
        file_events: stored.lines().count(),
        regenerated_events: outcome.trace.len(),
    };
    if report.matched {
        Ok(report)
    } else {
        Err(CliError::ReplayMismatch)
    }
}

/// `inspect`: human-readable schema-store listing.
pub fn cmd_inspect(db_path: &Path) -> Result<String> {
    let db = SchemaStore::load(db_path).map_err(data)?;
    let mut out = String::new();
    out.push_str(&format!("{} object type(s)\n", db.len()));
    for (key, record) in db.records() {
        out.push_str(&format!(
            "{key}: {} scheme(s), {} cumulative geon(s)\n",
            record.schemes.len(),
            record.cumulative_geons.len()
        ));
        for s in &record.schemes {
            match &s.viewpoint {
                Some(v) => out.push_str(&format!("  {} (from {v})\n", s.canonical)),
                None => out.push_str(&format!("  {}\n", s.canonical)),
            }
        }
    }
    Ok(out)
}

fn config_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_unknown_keys() {
        let json = r#"{"seed": 7, "scene": {"generate": {"objects": 2}}}"#;
        let config: ScenarioConfig = serde_json::from_str(json).unwrap();
        config.validate().unwrap();
        assert_eq!(config.fov_degrees, 90.0);
        assert_eq!(config.capacity_k, 3);
        assert_eq!(config.payoff_mode, PayoffMode::ParJoin);

        let bad = r#"{"seed": 7, "scene": {"generate": {"objects": 2}}, "fov": 90}"#;
        assert!(serde_json::from_str::<ScenarioConfig>(bad).is_err());
    }

    #[test]
    fn config_rejects_bad_ranges() {
        let json = r#"{"seed": 7, "scene": {"generate": {"objects": 2}}, "fov_degrees": 0.0}"#;
        let config: ScenarioConfig = serde_json::from_str(json).unwrap();
        assert!(config.validate().is_err());
        let json = r#"{"seed": 7, "scene": {"generate": {"objects": 2}}, "horizon_steps": 9}"#;
        let config: ScenarioConfig = serde_json::from_str(json).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn mix_parsing() {
        let mix = parse_mix("tree=1,wall=2,stairs=0.5").unwrap();
        assert_eq!(mix.tree, 1.0);
        assert_eq!(mix.wall, 2.0);
        assert_eq!(mix.stairs, 0.5);
        assert!(parse_mix("tree=1,boat=2").is_err());
        assert!(parse_mix("tree=0,wall=0,stairs=0").is_err());
        assert!(matches!(
            parse_mix("tree").unwrap_err(),
            CliError::Usage(_)
        ));
    }

    #[test]
    fn generate_run_replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scene_path = dir.path().join("scene.json");
        let config_path = dir.path().join("config.json");
        let trace_path = dir.path().join("trace.jsonl");
        let db_path = dir.path().join("db.json");

        cmd_generate(5, 2, &ClassMix::default(), &scene_path).unwrap();
        std::fs::write(
            &config_path,
            r#"{"seed": 5, "scene": {"path": "scene.json"}, "max_steps": 60}"#,
        )
        .unwrap();
        let summary = cmd_run(&config_path, &trace_path, &db_path).unwrap();
        assert!(summary.steps > 0);
        let report = cmd_replay(&trace_path, &config_path).unwrap();
        assert!(report.matched);

        // Tampering with the trace trips the mismatch error.
        let mut text = std::fs::read_to_string(&trace_path).unwrap();
        text = text.replacen("\"step\":0", "\"step\":99", 1);
        std::fs::write(&trace_path, text).unwrap();
        assert!(matches!(
            cmd_replay(&trace_path, &config_path).unwrap_err(),
            CliError::ReplayMismatch
        ));
    }

    #[test]
    fn run_with_zero_steps_writes_empty_trace() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("config.json");
        let trace_path = dir.path().join("trace.jsonl");
        let db_path = dir.path().join("db.json");
        std::fs::write(
            &config_path,
            r#"{"seed": 5, "scene": {"generate": {"objects": 1}}, "max_steps": 0}"#,
        )
        .unwrap();
        let summary = cmd_run(&config_path, &trace_path, &db_path).unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(std::fs::read_to_string(&trace_path).unwrap(), "");
    }

    #[test]
    fn inspect_lists_types() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("config.json");
        let trace_path = dir.path().join("trace.jsonl");
        let db_path = dir.path().join("db.json");
        // One wall close to the start pose saturates quickly.
        std::fs::write(
            &config_path,
            r#"{
                "seed": 5,
                "scene": {"inline": {
                    "seed": 1,
                    "bounds": {"min": [-20.0, -20.0, 0.0], "max": [20.0, 20.0, 10.0]},
                    "objects": [{
                        "object_id": 0,
                        "class_label": "wall",
                        "position": [6.0, 0.0, 0.0],
                        "orientation": "0",
                        "params": {"length": 1.0, "height": 1.0, "thickness": 0.5},
                        "salience": 0.5,
                        "expansion_seed": 7
                    }]
                }},
                "max_steps": 120
            }"#,
        )
        .unwrap();
        cmd_run(&config_path, &trace_path, &db_path).unwrap();
        let listing = cmd_inspect(&db_path).unwrap();
        assert!(listing.starts_with("1 object type(s)"));
        assert!(listing.contains("t1:"));
        assert!(listing.contains("classes="));
    }

    #[test]
    fn salience_overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let scene_path = dir.path().join("scene.json");
        cmd_generate(5, 2, &ClassMix::default(), &scene_path).unwrap();
        let config: ScenarioConfig = serde_json::from_str(&format!(
            r#"{{"seed": 5, "scene": {{"path": {:?}}}, "salience": {{"0": 9.5}}}}"#,
            scene_path.to_str().unwrap()
        ))
        .unwrap();
        config.validate().unwrap();
        let scene = resolve_scene(&config, dir.path()).unwrap();
        assert_eq!(scene.objects[0].salience, 9.5);
    }
}
