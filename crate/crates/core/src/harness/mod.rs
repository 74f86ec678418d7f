//! Scenario files, the built-in catalogue, scenario execution and result
//! emission.
//!
//! A scenario is a TOML document with five sections:
//!
//! ```toml
//! [plant]
//! system = "example1"
//! x0_low = 0.0
//! x0_high = 0.01
//!
//! [controller]
//! controllers = ["ailc"]
//!
//! [controller.ailc]
//! variant = "robust"
//! eta = 1.9
//! channels = [{ theta0 = [1.0, 1.0, 1.0, 1.0], ball = { center = [1.0, 1.0, 1.0, 1.0], radius = 0.9 } }]
//!
//! [controller.ailc.solver]
//! d0_lower = 0.2
//! epsilon_tol = 1e-10
//! max_iter_cap = 10000
//! gain_sign = "auto"
//! l_prime = { sampled = { margin_factor = 1.25, samples = 256 } }
//!
//! [reference]
//! family = "sine"
//! amplitude = 0.8
//! period = 25.0
//!
//! [[disturbance.channels]]
//! kind = "uniform"
//! low = -0.01
//! high = 0.01
//!
//! [run]
//! name = "my-run"
//! iterations = 200
//! seed = 1
//! ```
//!
//! Unknown keys anywhere are rejected, and every problem found is reported at
//! once.

mod catalog;
mod emit;
mod run;

pub use catalog::{builtin, builtin_scenarios, CatalogEntry};
pub use emit::{emit_results, read_trace_csv, trace_csv, CsvRow, CSV_HEADER};
pub use run::{check_scenario, run_scenario, ChannelSummary, ControllerSummary, RunSummary, ScenarioOutcome, SolverStats};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adaptation::{AdaptVariant, MMode};
use crate::controller::{ChannelInit, ControllerConfig, InputMode};
use crate::ddilc::DdilcParams;
use crate::disturbance::{DisturbanceKind, DisturbanceSpec};
use crate::error::{Error, Result};
use crate::plant::PlantSpec;
use crate::reference::Reference;
use crate::solver::SolverConfig;
use crate::systems;

const SECTIONS: [&str; 5] = ["plant", "controller", "reference", "disturbance", "run"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantConfig,
    pub controller: ControllerSection,
    pub reference: Reference,
    pub disturbance: DisturbanceSection,
    pub run: RunSection,
}

/// Built-in plants; initial states are drawn uniformly from
/// `[x0_low, x0_high]` on every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    Example1 { x0_low: f64, x0_high: f64 },
    Example2 { x0_low: f64, x0_high: f64 },
}

impl PlantConfig {
    pub fn build(&self, seed: u64) -> PlantSpec {
        match *self {
            Self::Example1 { x0_low, x0_high } => systems::example1(x0_low, x0_high, seed),
            Self::Example2 { x0_low, x0_high } => {
                let mut spec = systems::example2(seed);
                spec.initial_states = crate::plant::uniform_initial_states(2, 2, x0_low, x0_high, seed);
                spec
            }
        }
    }

    pub fn n_channels(&self) -> usize {
        match self {
            Self::Example1 { .. } => 1,
            Self::Example2 { .. } => 2,
        }
    }

    pub fn rho(&self) -> usize {
        match self {
            Self::Example1 { .. } => 1,
            Self::Example2 { .. } => 2,
        }
    }

    pub fn regressor_dim(&self) -> usize {
        4
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Self::Example1 { x0_low, x0_high } | Self::Example2 { x0_low, x0_high } => (x0_low, x0_high),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Ailc,
    Ddilc,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ailc => "ailc",
            Self::Ddilc => "ddilc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    /// Controllers to run on the plant, each from the same seed.
    pub controllers: Vec<ControllerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ailc: Option<AilcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ddilc: Option<DdilcParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AilcSection {
    pub variant: AdaptVariant,
    pub eta: f64,
    #[serde(default)]
    pub input_mode: InputMode,
    #[serde(default)]
    pub m_mode: MMode,
    #[serde(default)]
    pub project_initial: bool,
    /// One entry per plant channel.
    pub channels: Vec<ChannelInit>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl AilcSection {
    pub fn controller_config(&self) -> ControllerConfig {
        ControllerConfig {
            variant: self.variant,
            input_mode: self.input_mode,
            m_mode: self.m_mode,
            solver: self.solver.clone(),
            eta: self.eta,
            project_initial: self.project_initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    /// One entry per channel, or a single entry shared by every channel.
    pub channels: Vec<DisturbanceKind>,
}

impl DisturbanceSection {
    pub fn none() -> Self {
        Self {
            channels: vec![DisturbanceKind::None],
        }
    }

    pub fn specs(&self, n_channels: usize, seed: u64) -> Vec<DisturbanceSpec> {
        (0..n_channels)
            .map(|c| DisturbanceSpec {
                kind: self.channels[c.min(self.channels.len() - 1)].clone(),
                seed,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub iterations: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub verbose: bool,
}

fn messages(e: Error) -> Vec<String> {
    match e {
        Error::Validation(v) => v,
        Error::Config(s) => vec![s],
        e => vec![e.to_string()],
    }
}

fn section<T: DeserializeOwned>(table: &toml::Table, name: &str, errs: &mut Vec<String>) -> Option<T> {
    let value = table.get(name)?;
    match T::deserialize(value.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            errs.push(format!("[{name}] {}", e.message().trim()));
            None
        }
    }
}

/// Parses and validates a scenario document, reporting every problem found.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Validation(vec![e.to_string().trim().to_string()]))?;
    let mut errs = Vec::new();
    for key in table.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errs.push(format!("unknown section [{key}]"));
        }
    }
    for name in SECTIONS {
        if !table.contains_key(name) {
            errs.push(format!("missing section [{name}]"));
        }
    }
    let plant = section::<PlantConfig>(&table, "plant", &mut errs);
    let controller = section::<ControllerSection>(&table, "controller", &mut errs);
    let reference = section::<Reference>(&table, "reference", &mut errs);
    let disturbance = section::<DisturbanceSection>(&table, "disturbance", &mut errs);
    let run = section::<RunSection>(&table, "run", &mut errs);
    match (plant, controller, reference, disturbance, run) {
        (Some(plant), Some(controller), Some(reference), Some(disturbance), Some(run)) if errs.is_empty() => {
            let cfg = ScenarioConfig {
                plant,
                controller,
                reference,
                disturbance,
                run,
            };
            cfg.validate()?;
            Ok(cfg)
        }
        _ => Err(Error::Validation(errs)),
    }
}

impl ScenarioConfig {
    /// Semantic checks that the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let n = self.plant.n_channels();
        let (lo, hi) = self.plant.bounds();
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            errs.push(format!("[plant] need finite x0_low <= x0_high, got [{lo}, {hi}]"));
        }

        let ctl = &self.controller;
        if ctl.controllers.is_empty() {
            errs.push("[controller] controllers must name at least one of \"ailc\", \"ddilc\"".into());
        }
        let mut seen = ctl.controllers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != ctl.controllers.len() {
            errs.push("[controller] controllers lists a controller twice".into());
        }
        if ctl.controllers.contains(&ControllerKind::Ailc) && ctl.ailc.is_none() {
            errs.push("[controller] \"ailc\" is enabled but [controller.ailc] is missing".into());
        }
        if let Some(a) = &ctl.ailc {
            errs.extend(
                a.controller_config()
                    .validate()
                    .err()
                    .map(messages)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|m| format!("[controller.ailc] {m}")),
            );
            if a.channels.len() != n {
                errs.push(format!(
                    "[controller.ailc] {} channel entries for a {n}-channel plant",
                    a.channels.len()
                ));
            }
            let p = self.plant.regressor_dim();
            for (c, ch) in a.channels.iter().enumerate() {
                if ch.ball.center.len() != p || ch.theta0.len() != p {
                    errs.push(format!("[controller.ailc] channel {c}: ball center and theta0 need {p} entries"));
                }
                if !(ch.ball.radius > 0.0 && ch.ball.radius.is_finite()) {
                    errs.push(format!("[controller.ailc] channel {c}: radius must be positive"));
                }
                if ch.ball.center.iter().chain(&ch.theta0).any(|v| !v.is_finite()) {
                    errs.push(format!("[controller.ailc] channel {c}: non-finite entry"));
                }
            }
            if let AdaptVariant::KnownBound(w) = a.variant {
                if !(w >= 0.0 && w.is_finite()) {
                    errs.push(format!("[controller.ailc] known_bound must be non-negative, got {w}"));
                }
            }
        }
        if ctl.controllers.contains(&ControllerKind::Ddilc) {
            if self.plant.rho() != 1 || n != 1 {
                errs.push("[controller] \"ddilc\" needs a single-channel plant with relative degree 1".into());
            }
            if let Some(p) = &ctl.ddilc {
                errs.extend(p.validate().err().map(messages).unwrap_or_default().into_iter().map(|m| format!("[controller.ddilc] {m}")));
            }
        }

        if let Err(m) = self.reference.validate() {
            errs.push(format!("[reference] {m}"));
        }

        let d = &self.disturbance.channels;
        if d.is_empty() || (d.len() != 1 && d.len() != n) {
            errs.push(format!("[disturbance] need 1 or {n} channel entries, got {}", d.len()));
        }
        for kind in d {
            errs.extend(kind.validate().err().map(messages).unwrap_or_default().into_iter().map(|m| format!("[disturbance] {m}")));
        }

        if self.run.iterations == 0 {
            errs.push("[run] iterations must be at least 1".into());
        }
        if self.run.seed > i64::MAX as u64 {
            errs.push(format!("[run] seed must be at most {}", i64::MAX));
        }
        if self.run.name.is_empty() || self.run.name.contains(['/', '\\']) {
            errs.push(format!("[run] name {:?} must be non-empty and free of path separators", self.run.name));
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// TOML echo; loading it back gives an identical configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialise")
    }

    pub fn ddilc_params(&self) -> DdilcParams {
        self.controller.ddilc.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_names_every_missing_section() {
        match load_scenario("").unwrap_err() {
            Error::Validation(v) => {
                for s in SECTIONS {
                    assert!(v.iter().any(|m| m.contains(&format!("missing section [{s}]"))), "{v:?}");
                }
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn builtins_round_trip_through_toml() {
        for entry in builtin_scenarios() {
            let text = entry.config.to_toml();
            let back = load_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", entry.name));
            assert_eq!(back, entry.config, "{}", entry.name);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = builtin("example1-robust-d1").unwrap();
        let text = cfg.to_toml().replace("iterations = 200", "iterations = 200\niteratons = 3");
        let err = load_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("iteratons"), "{err}");
        let text = format!("{}\n[extra]\na = 1\n", cfg.to_toml());
        assert!(load_scenario(&text).unwrap_err().to_string().contains("unknown section [extra]"));
    }

    #[test]
    fn semantic_errors_are_collected() {
        let mut cfg = builtin("example2-nodist").unwrap();
        cfg.run.iterations = 0;
        cfg.controller.controllers.push(ControllerKind::Ddilc);
        cfg.disturbance.channels = vec![DisturbanceKind::None; 3];
        match cfg.validate().unwrap_err() {
            Error::Validation(v) => assert_eq!(v.len(), 3, "{v:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn malformed_toml_is_a_validation_error() {
        let err = load_scenario("[plant\nsystem = 1").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert_eq!(err.exit_code(), 1);
    }
}
