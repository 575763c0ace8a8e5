//! Seeded assignment plans.
//!
//! Three modes: `fixed` draws one setting for the whole plan,
//! `experiment_random` draws one setting per experiment, `ilr` draws one
//! setting per (experiment, instance). Each draw of one dimension comes from
//! the stream `(PLAN, seed, experiment, instance, dimension)` with [`SHARED`]
//! in the slots a mode does not vary over.

use std::collections::BTreeMap;
use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{Dataset, Dimension, FactorSetting, FactorSpace, SettingIds};
use crate::par;
use crate::rng::{self, domain, SHARED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Fixed,
    ExperimentRandom,
    Ilr,
}

impl PlanMode {
    pub fn name(self) -> &'static str {
        match self {
            PlanMode::Fixed => "fixed",
            PlanMode::ExperimentRandom => "experiment_random",
            PlanMode::Ilr => "ilr",
        }
    }

    pub fn parse(s: &str) -> Option<PlanMode> {
        [PlanMode::Fixed, PlanMode::ExperimentRandom, PlanMode::Ilr]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

impl std::fmt::Display for PlanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn all_dimensions() -> Vec<Dimension> {
    Dimension::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub mode: PlanMode,
    pub n_experiments: usize,
    pub seed: u64,
    #[serde(default = "all_dimensions")]
    pub dimensions_randomized: Vec<Dimension>,
    /// Value id for every dimension that is not randomized.
    #[serde(default)]
    pub pins: BTreeMap<Dimension, String>,
}

impl PlannerConfig {
    pub fn new(mode: PlanMode, n_experiments: usize, seed: u64) -> Self {
        PlannerConfig {
            mode,
            n_experiments,
            seed,
            dimensions_randomized: all_dimensions(),
            pins: BTreeMap::new(),
        }
    }

    pub fn randomize(mut self, dims: &[Dimension]) -> Self {
        self.dimensions_randomized = dims.to_vec();
        self
    }

    pub fn pin(mut self, dim: Dimension, id: impl Into<String>) -> Self {
        self.pins.insert(dim, id.into());
        self
    }

    fn randomized_mask(&self) -> [bool; 4] {
        let mut m = [false; 4];
        for d in &self.dimensions_randomized {
            m[d.index()] = true;
        }
        m
    }
}

type Pins = [Option<usize>; 4];

/// Checks that pins cover exactly the non-randomized dimensions and resolves
/// them to pool indices.
fn resolve_pins(space: &FactorSpace, randomized: [bool; 4], pins: &BTreeMap<Dimension, String>) -> Result<Pins> {
    let mut out = [None; 4];
    for dim in Dimension::ALL {
        match (randomized[dim.index()], pins.get(&dim)) {
            (true, Some(_)) => {
                return Err(Error::Planner(format!("dimension {dim} is both randomized and pinned")));
            }
            (false, None) => {
                return Err(Error::Planner(format!("dimension {dim} is neither randomized nor pinned")));
            }
            (false, Some(id)) => out[dim.index()] = Some(space.find_or_err(dim, id)?),
            (true, None) => {}
        }
    }
    Ok(out)
}

/// One uniform, independent draw over each pool in `dims`; other dimensions
/// are copied from `pins`. Dimensions are drawn in canonical order.
pub fn sample_setting<R: Rng + ?Sized>(
    space: &FactorSpace,
    rng: &mut R,
    dims: &[Dimension],
    pins: &BTreeMap<Dimension, String>,
) -> Result<FactorSetting> {
    let mut randomized = [false; 4];
    for d in dims {
        randomized[d.index()] = true;
    }
    let pins = resolve_pins(space, randomized, pins)?;
    let mut s = FactorSetting::default();
    for dim in Dimension::ALL {
        let idx = match pins[dim.index()] {
            Some(p) => p,
            None => rng.random_range(0..space.pool_len(dim)),
        };
        s.set(dim, idx);
    }
    Ok(s)
}

/// A complete per-experiment, per-instance assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentPlan {
    pub mode: PlanMode,
    pub seed: u64,
    pub dimensions_randomized: Vec<Dimension>,
    pub dataset_digest: String,
    pub factor_space_digest: String,
    pub config_digest: Option<String>,
    instance_ids: Vec<String>,
    settings: Vec<Vec<FactorSetting>>,
}

impl AssignmentPlan {
    pub fn n_experiments(&self) -> usize {
        self.settings.len()
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn setting(&self, experiment: usize, instance: usize) -> FactorSetting {
        self.settings[experiment][instance]
    }

    pub fn experiment(&self, experiment: usize) -> &[FactorSetting] {
        &self.settings[experiment]
    }

    pub fn distinct_settings(&self) -> usize {
        self.settings.iter().flatten().collect::<HashSet<_>>().len()
    }

    /// Structural check of the mode contract: `fixed` has one setting across
    /// the plan, `experiment_random` is constant within each experiment.
    pub fn check_mode_contract(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(Error::Plan("plan has no experiments".into()));
        }
        match self.mode {
            PlanMode::Fixed => {
                if self.distinct_settings() > 1 {
                    return Err(Error::Plan("fixed plan uses more than one setting".into()));
                }
            }
            PlanMode::ExperimentRandom => {
                for (e, exp) in self.settings.iter().enumerate() {
                    if exp.windows(2).any(|w| w[0] != w[1]) {
                        return Err(Error::Plan(format!("experiment {e} is not constant across instances")));
                    }
                }
            }
            PlanMode::Ilr => {}
        }
        Ok(())
    }

    /// Verifies that no instance is shown itself as a few-shot exemplar.
    pub fn check_leakage(&self, space: &FactorSpace) -> Result<()> {
        for exp in &self.settings {
            for (id, s) in self.instance_ids.iter().zip(exp) {
                if space.few_shot_sets[s.get(Dimension::FewShotSet)].contains(id) {
                    return Err(Error::Leakage { instance: id.clone() });
                }
            }
        }
        Ok(())
    }

    /// Serializes to the plan file format: experiments as objects keyed by
    /// instance id in dataset order, each mapping dimension to value id.
    pub fn to_json(&self, space: &FactorSpace) -> Vec<u8> {
        let mut root = Map::new();
        root.insert("mode".into(), Value::from(self.mode.name()));
        root.insert("seed".into(), Value::from(self.seed));
        root.insert(
            "dimensions_randomized".into(),
            Value::from(self.dimensions_randomized.iter().map(|d| d.name()).collect::<Vec<_>>()),
        );
        root.insert("dataset_digest".into(), Value::from(self.dataset_digest.as_str()));
        root.insert("factor_space_digest".into(), Value::from(self.factor_space_digest.as_str()));
        if let Some(d) = &self.config_digest {
            root.insert("config_digest".into(), Value::from(d.as_str()));
        }
        root.insert("tool_version".into(), Value::from(crate::TOOL_VERSION));
        let experiments = self
            .settings
            .iter()
            .map(|exp| {
                let mut m = Map::new();
                for (id, s) in self.instance_ids.iter().zip(exp) {
                    m.insert(id.clone(), serde_json::to_value(s.to_ids(space)).expect("ids serialize"));
                }
                Value::Object(m)
            })
            .collect();
        root.insert("experiments".into(), Value::Array(experiments));
        let mut bytes = serde_json::to_vec(&Value::Object(root)).expect("plan serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Parses a plan file against the dataset and space it was made for.
    /// Every experiment must assign every dataset instance.
    pub fn from_json(bytes: &[u8], dataset: &Dataset, space: &FactorSpace) -> Result<Self> {
        let root: Value = serde_json::from_slice(bytes).map_err(|e| Error::Plan(format!("malformed plan file: {e}")))?;
        let field = |k: &str| root.get(k).ok_or_else(|| Error::Plan(format!("missing field `{k}`")));
        let mode = field("mode")?
            .as_str()
            .and_then(PlanMode::parse)
            .ok_or_else(|| Error::Plan("unknown mode".into()))?;
        let seed = field("seed")?
            .as_u64()
            .ok_or_else(|| Error::Plan("seed must be an unsigned integer".into()))?;
        let dimensions_randomized = match root.get("dimensions_randomized") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Plan(e.to_string()))?,
            None => all_dimensions(),
        };
        let text = |k: &str| root.get(k).and_then(Value::as_str).map(str::to_string);
        let exps = field("experiments")?
            .as_array()
            .ok_or_else(|| Error::Plan("`experiments` must be an array".into()))?;
        let mut settings = Vec::with_capacity(exps.len());
        for (e, exp) in exps.iter().enumerate() {
            let obj = exp
                .as_object()
                .ok_or_else(|| Error::Plan(format!("experiment {e} is not an object")))?;
            if obj.len() != dataset.len() {
                return Err(Error::Plan(format!(
                    "experiment {e} assigns {} instances, dataset has {}",
                    obj.len(),
                    dataset.len()
                )));
            }
            let mut row = Vec::with_capacity(dataset.len());
            for inst in dataset.instances() {
                let v = obj
                    .get(&inst.id)
                    .ok_or_else(|| Error::Plan(format!("experiment {e} does not assign `{}`", inst.id)))?;
                let ids: SettingIds =
                    serde_json::from_value(v.clone()).map_err(|err| Error::Plan(format!("experiment {e}: {err}")))?;
                row.push(FactorSetting::from_ids(space, &ids)?);
            }
            settings.push(row);
        }
        let plan = AssignmentPlan {
            mode,
            seed,
            dimensions_randomized,
            dataset_digest: text("dataset_digest").unwrap_or_else(|| dataset.digest()),
            factor_space_digest: text("factor_space_digest").unwrap_or_else(|| space.digest()),
            config_digest: text("config_digest"),
            instance_ids: dataset.instances().iter().map(|i| i.id.clone()).collect(),
            settings,
        };
        plan.check_mode_contract()?;
        Ok(plan)
    }
}

/// Few-shot sets that may be shown to a target instance.
fn leak_free_sets(space: &FactorSpace, excluded: &[&str]) -> Vec<usize> {
    (0..space.few_shot_sets.len())
        .filter(|&i| !excluded.iter().any(|id| space.few_shot_sets[i].contains(id)))
        .collect()
}

fn draw_index(seed: u64, experiment: u64, instance: u64, dim: Dimension, allowed: &[usize]) -> usize {
    let mut r = rng::stream(&[domain::PLAN, seed, experiment, instance, dim.index() as u64]);
    allowed[r.random_range(0..allowed.len())]
}

/// Draws one setting. `fs_allowed` lists the leak-free few-shot sets; a
/// pinned few-shot set outside that list is a leak.
fn draw_setting(
    space: &FactorSpace,
    seed: u64,
    experiment: u64,
    instance: u64,
    pins: &Pins,
    fs_allowed: &[usize],
    leak_target: &str,
) -> Result<FactorSetting> {
    let mut s = FactorSetting::default();
    for dim in Dimension::ALL {
        let idx = match pins[dim.index()] {
            Some(p) => {
                if dim == Dimension::FewShotSet && !fs_allowed.contains(&p) {
                    return Err(Error::Leakage {
                        instance: leak_target.to_string(),
                    });
                }
                p
            }
            None if dim == Dimension::FewShotSet => {
                if fs_allowed.is_empty() {
                    return Err(Error::Leakage {
                        instance: leak_target.to_string(),
                    });
                }
                draw_index(seed, experiment, instance, dim, fs_allowed)
            }
            None => {
                let all: Vec<usize> = (0..space.pool_len(dim)).collect();
                draw_index(seed, experiment, instance, dim, &all)
            }
        };
        s.set(dim, idx);
    }
    Ok(s)
}

struct Resolved {
    mode: PlanMode,
    n_experiments: usize,
    seed: u64,
    dims: Vec<Dimension>,
    pins: Pins,
}

fn build(dataset: &Dataset, space: &FactorSpace, r: &Resolved) -> Result<AssignmentPlan> {
    if r.n_experiments == 0 {
        return Err(Error::Planner("n_experiments must be at least 1".into()));
    }
    let m = dataset.len();
    let ids: Vec<&str> = dataset.instances().iter().map(|i| i.id.as_str()).collect();
    // Shared settings are shown to every instance, so they must avoid all ids.
    let first_leak = |allowed: &[usize]| -> String {
        let p = r.pins[Dimension::FewShotSet.index()].or(allowed.first().copied());
        p.and_then(|p| ids.iter().find(|id| space.few_shot_sets[p].contains(id)))
            .or(ids.first())
            .map_or_else(String::new, |s| s.to_string())
    };
    let settings: Vec<Vec<FactorSetting>> = match r.mode {
        PlanMode::Fixed => {
            let allowed = leak_free_sets(space, &ids);
            let s = draw_setting(space, r.seed, SHARED, SHARED, &r.pins, &allowed, &first_leak(&allowed))?;
            vec![vec![s; m]; r.n_experiments]
        }
        PlanMode::ExperimentRandom => {
            let allowed = leak_free_sets(space, &ids);
            let target = first_leak(&allowed);
            par::try_map_range(r.n_experiments, |e| {
                draw_setting(space, r.seed, e as u64, SHARED, &r.pins, &allowed, &target).map(|s| vec![s; m])
            })?
        }
        PlanMode::Ilr => {
            let any_leak = space
                .few_shot_sets
                .iter()
                .any(|set| set.all_ids().any(|id| dataset.contains(id)));
            let full: Vec<usize> = (0..space.few_shot_sets.len()).collect();
            let allowed: Vec<Vec<usize>> = if any_leak {
                ids.iter().map(|id| leak_free_sets(space, &[id])).collect()
            } else {
                Vec::new()
            };
            par::try_map_range(r.n_experiments, |e| {
                (0..m)
                    .map(|k| {
                        let a = if any_leak { &allowed[k] } else { &full };
                        draw_setting(space, r.seed, e as u64, k as u64, &r.pins, a, ids[k])
                    })
                    .collect()
            })?
        }
    };
    Ok(AssignmentPlan {
        mode: r.mode,
        seed: r.seed,
        dimensions_randomized: r.dims.clone(),
        dataset_digest: dataset.digest(),
        factor_space_digest: space.digest(),
        config_digest: None,
        instance_ids: ids.iter().map(|s| s.to_string()).collect(),
        settings,
    })
}

fn resolve(space: &FactorSpace, config: &PlannerConfig) -> Result<Resolved> {
    let pins = resolve_pins(space, config.randomized_mask(), &config.pins)?;
    let dims = Dimension::ALL
        .into_iter()
        .filter(|d| config.randomized_mask()[d.index()])
        .collect();
    Ok(Resolved {
        mode: config.mode,
        n_experiments: config.n_experiments,
        seed: config.seed,
        dims,
        pins,
    })
}

fn expect_mode(config: &PlannerConfig, mode: PlanMode) -> Result<()> {
    if config.mode != mode {
        return Err(Error::Planner(format!("config mode is {}, expected {mode}", config.mode)));
    }
    Ok(())
}

pub fn plan_fixed(dataset: &Dataset, space: &FactorSpace, config: &PlannerConfig) -> Result<AssignmentPlan> {
    expect_mode(config, PlanMode::Fixed)?;
    build(dataset, space, &resolve(space, config)?)
}

pub fn plan_experiment_random(dataset: &Dataset, space: &FactorSpace, config: &PlannerConfig) -> Result<AssignmentPlan> {
    expect_mode(config, PlanMode::ExperimentRandom)?;
    build(dataset, space, &resolve(space, config)?)
}

pub fn plan_ilr(dataset: &Dataset, space: &FactorSpace, config: &PlannerConfig) -> Result<AssignmentPlan> {
    expect_mode(config, PlanMode::Ilr)?;
    build(dataset, space, &resolve(space, config)?)
}

/// Dispatches on `config.mode`.
pub fn plan(dataset: &Dataset, space: &FactorSpace, config: &PlannerConfig) -> Result<AssignmentPlan> {
    build(dataset, space, &resolve(space, config)?)
}

/// How the repetition axis relates to the plan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum RepetitionDesign {
    /// Every repetition re-executes the same plan.
    #[default]
    Shared,
    /// Every repetition draws a fresh plan from a repetition-keyed seed.
    /// With `redraw_pins`, non-randomized dimensions are also redrawn once
    /// per repetition (shared by all experiments of that repetition) instead
    /// of being taken from the pins.
    Redraw {
        #[serde(default)]
        redraw_pins: bool,
    },
}

impl RepetitionDesign {
    pub fn label(self) -> &'static str {
        match self {
            RepetitionDesign::Shared => "shared",
            RepetitionDesign::Redraw { redraw_pins: false } => "redraw",
            RepetitionDesign::Redraw { redraw_pins: true } => "redraw_pins",
        }
    }
}

pub fn repetition_seed(seed: u64, repetition: usize) -> u64 {
    rng::mix(&[domain::REPETITION, seed, repetition as u64])
}

/// One plan per repetition under the redraw design.
pub fn redraw_plans(
    dataset: &Dataset,
    space: &FactorSpace,
    config: &PlannerConfig,
    repetitions: usize,
    redraw_pins: bool,
) -> Result<Vec<AssignmentPlan>> {
    if repetitions == 0 {
        return Err(Error::Planner("repetitions must be at least 1".into()));
    }
    let mask = config.randomized_mask();
    let base = if redraw_pins {
        // pins are ignored here, but any given ones must still exist
        for (d, id) in &config.pins {
            space.find_or_err(*d, id)?;
        }
        Resolved {
            mode: config.mode,
            n_experiments: config.n_experiments,
            seed: config.seed,
            dims: Dimension::ALL.into_iter().filter(|d| mask[d.index()]).collect(),
            pins: [None; 4],
        }
    } else {
        resolve(space, config)?
    };
    let ids: Vec<&str> = dataset.instances().iter().map(|i| i.id.as_str()).collect();
    let shared_allowed = leak_free_sets(space, &ids);
    (0..repetitions)
        .map(|rep| {
            let mut pins = base.pins;
            if redraw_pins {
                for dim in Dimension::ALL.into_iter().filter(|d| !mask[d.index()]) {
                    let pool: Vec<usize> = if dim == Dimension::FewShotSet {
                        shared_allowed.clone()
                    } else {
                        (0..space.pool_len(dim)).collect()
                    };
                    if pool.is_empty() {
                        return Err(Error::Leakage {
                            instance: ids[0].to_string(),
                        });
                    }
                    let mut r = rng::stream(&[domain::PINS, config.seed, rep as u64, dim.index() as u64]);
                    pins[dim.index()] = Some(pool[r.random_range(0..pool.len())]);
                }
            }
            build(
                dataset,
                space,
                &Resolved {
                    mode: base.mode,
                    n_experiments: base.n_experiments,
                    seed: repetition_seed(config.seed, rep),
                    dims: base.dims.clone(),
                    pins,
                },
            )
        })
        .collect()
}
