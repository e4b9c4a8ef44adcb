//! Experiment configuration files (TOML).
//!
//! Every field has a default, so a config can be as small as
//! `[scenario]\nkind = "scenario1"`. See `configs/scenario1.toml` in the
//! repository for a fully annotated example.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, FilterKind};
use crate::filter::Thresholds;
use crate::sim::ScenarioKind;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    scenario: ScenarioSection,
    #[serde(default)]
    models: ModelsSection,
    #[serde(default)]
    thresholds: ThresholdsSection,
    #[serde(default)]
    gospa: GospaSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    kind: String,
    horizon: Option<u32>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            kind: "scenario1".into(),
            horizon: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ModelsSection {
    fine_interval: f64,
    accel_noise: f64,
    meas_noise_var: f64,
    detect_prob: f64,
    survive_per_step: f64,
}

impl Default for ModelsSection {
    fn default() -> Self {
        Self {
            fine_interval: 0.2,
            accel_noise: 0.01,
            meas_noise_var: 0.1,
            detect_prob: 0.9,
            survive_per_step: 0.99,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ThresholdsSection {
    poisson_prune: f64,
    global_prune: f64,
    bernoulli_prune: f64,
    gate: f64,
    max_globals: usize,
    estimate: f64,
}

impl Default for ThresholdsSection {
    fn default() -> Self {
        let t = Thresholds::default();
        Self {
            poisson_prune: t.poisson_prune,
            global_prune: t.global_prune,
            bernoulli_prune: t.bernoulli_prune,
            gate: t.gate,
            max_globals: t.max_globals,
            estimate: t.estimate_threshold,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GospaSection {
    cutoff: f64,
    order: f64,
}

impl Default for GospaSection {
    fn default() -> Self {
        Self {
            cutoff: 10.0,
            order: 2.0,
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    window_lengths: Option<Vec<u32>>,
    full_detect_probs: Option<Vec<f64>>,
    clutter_rates: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunSection {
    runs: Option<u32>,
    seed: Option<u64>,
    filters: Option<Vec<String>>,
}

/// Parse an experiment spec from TOML text.
pub fn spec_from_toml(text: &str) -> Result<ExperimentSpec> {
    let file: ConfigFile = toml::from_str(text)
        .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
    let scenario = ScenarioKind::parse(&file.scenario.kind)?;
    let mut spec = ExperimentSpec::defaults(scenario);
    spec.horizon_override = file.scenario.horizon;

    spec.fine_interval = file.models.fine_interval;
    spec.accel_noise = file.models.accel_noise;
    spec.meas_noise_var = file.models.meas_noise_var;
    spec.detect_prob = file.models.detect_prob;
    spec.survive_per_step = file.models.survive_per_step;

    spec.thresholds = Thresholds {
        poisson_prune: file.thresholds.poisson_prune,
        global_prune: file.thresholds.global_prune,
        bernoulli_prune: file.thresholds.bernoulli_prune,
        gate: file.thresholds.gate,
        max_globals: file.thresholds.max_globals,
        estimate_threshold: file.thresholds.estimate,
    };
    spec.gospa_cutoff = file.gospa.cutoff;
    spec.gospa_order = file.gospa.order;

    if let Some(w) = file.sweep.window_lengths {
        spec.window_lengths = w;
    }
    if let Some(p) = file.sweep.full_detect_probs {
        spec.full_detect_probs = p;
    }
    if let Some(c) = file.sweep.clutter_rates {
        spec.clutter_rates = c;
    }
    if let Some(runs) = file.run.runs {
        spec.runs = runs;
    }
    if let Some(seed) = file.run.seed {
        spec.seed = seed;
    }
    if let Some(filters) = file.run.filters {
        spec.filters = filters
            .iter()
            .map(|f| FilterKind::parse(f))
            .collect::<Result<Vec<_>>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Load an experiment spec from a TOML file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    spec_from_toml(&text)
}
