use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ilr_core::backend::{load_profile, EndpointConfig, SyntheticModelProfile};
use ilr_core::error::{Error, Result};
use ilr_core::planner::{PlannerConfig, RepetitionDesign};
use ilr_core::report::{file_sha256, json_bytes, read_json, sha256_hex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// One run per profile file.
    Synthetic { profiles: Vec<PathBuf> },
    Endpoint(EndpointConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    #[serde(default = "default_max_pairs")]
    pub max_pairs: usize,
    #[serde(default = "default_selections")]
    pub n_selections: usize,
    /// Largest n on the variance curve; defaults to all experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_std: Option<f64>,
}

fn default_max_pairs() -> usize {
    ilr_core::stats::DEFAULT_MAX_PAIRS
}

fn default_selections() -> usize {
    30
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            max_pairs: default_max_pairs(),
            n_selections: default_selections(),
            n_max: None,
            target_std: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrpConfig {
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_delta_max() -> f64 {
    ilr_core::orp::DEFAULT_DELTA_MAX
}

fn default_steps() -> usize {
    ilr_core::orp::DEFAULT_STEPS
}

impl Default for OrpConfig {
    fn default() -> Self {
        OrpConfig {
            delta_max: default_delta_max(),
            steps: default_steps(),
        }
    }
}

/// One JSON document describing a run. Relative paths resolve against the
/// directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub factor_space: PathBuf,
    pub planner: PlannerConfig,
    #[serde(default)]
    pub repetition_design: RepetitionDesign,
    pub backend: BackendConfig,
    pub repetitions: usize,
    /// Seed of the response streams; defaults to the planner seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub orp: OrpConfig,
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub backend: Option<PathBuf>,
    pub max_in_flight: Option<usize>,
    pub delta_max: Option<f64>,
    pub steps: Option<usize>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A backend override file is an endpoint config when it names a base URL,
/// otherwise a synthetic profile.
fn backend_from_file(path: &Path) -> Result<BackendConfig> {
    let v: serde_json::Value = read_json(path)?;
    if v.get("base_url").is_some() {
        Ok(BackendConfig::Endpoint(serde_json::from_value(v)?))
    } else {
        Ok(BackendConfig::Synthetic {
            profiles: vec![path.to_path_buf()],
        })
    }
}

impl RunConfig {
    pub fn load(path: &Path, o: &Overrides) -> Result<RunConfig> {
        let mut c: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        c.dataset = resolve(base, &c.dataset);
        c.factor_space = resolve(base, &c.factor_space);
        c.output_dir = resolve(base, &c.output_dir);
        if let BackendConfig::Synthetic { profiles } = &mut c.backend {
            for p in profiles.iter_mut() {
                *p = resolve(base, p);
            }
        }
        c.apply(o)?;
        c.validate()?;
        Ok(c)
    }

    fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.planner.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(b) = &o.backend {
            self.backend = backend_from_file(b)?;
        }
        if let Some(k) = o.max_in_flight {
            if let BackendConfig::Endpoint(e) = &mut self.backend {
                e.max_in_flight = k;
            }
        }
        if let Some(d) = o.delta_max {
            self.orp.delta_max = d;
        }
        if let Some(s) = o.steps {
            self.orp.steps = s;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (what, p) in [("dataset", &self.dataset), ("factor space", &self.factor_space)] {
            if !p.is_file() {
                return Err(Error::Planner(format!("{what} file {} does not exist", p.display())));
            }
        }
        match &self.backend {
            BackendConfig::Synthetic { profiles } => {
                if profiles.is_empty() {
                    return Err(Error::Profile("no synthetic profiles listed".into()));
                }
                if let Some(p) = profiles.iter().find(|p| !p.is_file()) {
                    return Err(Error::Profile(format!("profile file {} does not exist", p.display())));
                }
            }
            BackendConfig::Endpoint(e) => e.validate()?,
        }
        if self.repetitions == 0 {
            return Err(Error::Planner("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn run_seed(&self) -> u64 {
        self.run_seed.unwrap_or(self.planner.seed)
    }

    pub fn profiles(&self) -> Result<Vec<SyntheticModelProfile>> {
        match &self.backend {
            BackendConfig::Synthetic { profiles } => profiles.iter().map(load_profile).collect(),
            BackendConfig::Endpoint(_) => Ok(vec![]),
        }
    }

    /// Hash of everything that determines the run's results: the config with
    /// paths replaced by the contents they point to. The output directory is
    /// excluded.
    pub fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.dataset = PathBuf::from(file_sha256(&self.dataset)?);
        c.factor_space = PathBuf::from(file_sha256(&self.factor_space)?);
        if let BackendConfig::Synthetic { profiles } = &mut c.backend {
            for p in profiles.iter_mut() {
                *p = PathBuf::from(file_sha256(&*p)?);
            }
        }
        Ok(sha256_hex(&json_bytes(&c)?))
    }
}
