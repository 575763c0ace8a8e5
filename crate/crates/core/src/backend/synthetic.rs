//! Seeded synthetic model.
//!
//! The probability that the model answers instance `k` correctly under
//! setting `f` is
//!
//! ```text
//! P = clamp(S(x_k) + effect_scale * sum_dim e(dim, f[dim]), eps, 1 - eps)
//! ```
//!
//! where `S` is the per-instance base accuracy and `e` are preference
//! effects, centered to zero mean within each pool. A response is a Bernoulli
//! draw at `P` (optionally after adding Gaussian noise of scale
//! `noise_scale` before clamping) from the stream
//! `(RESPONSE, profile seed, run seed, experiment, repetition, instance)`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Dimension, FactorSetting, FactorSpace};
use crate::rng::{self, domain};

pub const DEFAULT_CLAMP_EPSILON: f64 = 0.02;

fn default_epsilon() -> f64 {
    DEFAULT_CLAMP_EPSILON
}

fn default_scale() -> f64 {
    1.0
}

/// Where per-instance base accuracies come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseAccuracy {
    /// Listed per instance id.
    Values(BTreeMap<String, f64>),
    /// Beta draws with the given mean and concentration (alpha + beta).
    Beta { mean: f64, concentration: f64 },
    Uniform { low: f64, high: f64 },
    Constant(f64),
}

/// Normally distributed effects for each value of a pool, centered and
/// rescaled so that their population standard deviation equals the given
/// value exactly.
pub type RandomEffects = BTreeMap<Dimension, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticModelProfile {
    pub model_id: String,
    #[serde(default)]
    pub seed: u64,
    pub base_accuracy: BaseAccuracy,
    /// Explicit effects per dimension and value id; missing values are 0.
    #[serde(default)]
    pub preference_effects: BTreeMap<Dimension, BTreeMap<String, f64>>,
    /// Generated effects, added to the explicit ones.
    #[serde(default)]
    pub random_effects: RandomEffects,
    #[serde(default = "default_scale")]
    pub effect_scale: f64,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default = "default_epsilon")]
    pub clamp_epsilon: f64,
}

impl SyntheticModelProfile {
    pub fn new(model_id: impl Into<String>, base_accuracy: BaseAccuracy) -> Self {
        SyntheticModelProfile {
            model_id: model_id.into(),
            seed: 0,
            base_accuracy,
            preference_effects: BTreeMap::new(),
            random_effects: BTreeMap::new(),
            effect_scale: 1.0,
            noise_scale: 0.0,
            clamp_epsilon: DEFAULT_CLAMP_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Profile(format!("{what} must be finite")))
            }
        };
        finite(self.effect_scale, "effect_scale")?;
        finite(self.noise_scale, "noise_scale")?;
        if self.noise_scale < 0.0 {
            return Err(Error::Profile("noise_scale must be non-negative".into()));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(Error::Profile(format!(
                "clamp_epsilon {} outside (0, 0.5)",
                self.clamp_epsilon
            )));
        }
        for (dim, sd) in &self.random_effects {
            if !(sd.is_finite() && *sd >= 0.0) {
                return Err(Error::Profile(format!("random effect sd for {dim} must be >= 0")));
            }
        }
        for effects in self.preference_effects.values() {
            for e in effects.values() {
                finite(*e, "preference effect")?;
            }
        }
        match &self.base_accuracy {
            BaseAccuracy::Values(v) => {
                if v.values().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::Profile("base accuracies must lie in [0, 1]".into()));
                }
            }
            BaseAccuracy::Beta { mean, concentration } => {
                if !(*mean > 0.0 && *mean < 1.0 && *concentration > 0.0 && concentration.is_finite()) {
                    return Err(Error::Profile("beta base accuracy needs 0 < mean < 1, concentration > 0".into()));
                }
            }
            BaseAccuracy::Uniform { low, high } => {
                if !(0.0 <= *low && low <= high && *high <= 1.0) {
                    return Err(Error::Profile("uniform base accuracy needs 0 <= low <= high <= 1".into()));
                }
            }
            BaseAccuracy::Constant(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Profile("base accuracy must lie in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<SyntheticModelProfile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let p: SyntheticModelProfile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    p.validate()?;
    Ok(p)
}

/// A profile resolved against one dataset and factor space.
#[derive(Clone, Debug)]
pub struct SyntheticModel {
    profile: SyntheticModelProfile,
    instance_ids: Vec<String>,
    base: Vec<f64>,
    /// Centered effects per dimension, indexed by pool position.
    effects: [Vec<f64>; 4],
    epsilon: f64,
}

fn centered(mut v: Vec<f64>) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in &mut v {
        *x -= mean;
    }
    v
}

impl SyntheticModel {
    pub fn new(profile: SyntheticModelProfile, dataset: &Dataset, space: &FactorSpace) -> Result<Self> {
        profile.validate()?;
        let base = dataset
            .instances()
            .iter()
            .map(|inst| base_accuracy(&profile, &inst.id))
            .collect::<Result<Vec<_>>>()?;
        let mut effects: [Vec<f64>; 4] = Default::default();
        for dim in Dimension::ALL {
            let len = space.pool_len(dim);
            let mut e = vec![0.0; len];
            if let Some(explicit) = profile.preference_effects.get(&dim) {
                for (id, x) in explicit {
                    e[space.find_or_err(dim, id)?] += x;
                }
            }
            let mut e = centered(e);
            if let Some(&sd) = profile.random_effects.get(&dim) {
                let draws = random_effects(profile.seed, dim, space, sd);
                for (a, b) in e.iter_mut().zip(draws) {
                    *a += b;
                }
            }
            effects[dim.index()] = e;
        }
        let epsilon = profile.clamp_epsilon;
        Ok(SyntheticModel {
            instance_ids: dataset.instances().iter().map(|i| i.id.clone()).collect(),
            profile,
            base,
            effects,
            epsilon,
        })
    }

    /// Drops the probability clamp entirely. Only meant for tests of
    /// degenerate cases (a perfect model).
    #[doc(hidden)]
    pub fn without_clamp_for_tests(mut self) -> Self {
        self.epsilon = 0.0;
        self
    }

    pub fn profile(&self) -> &SyntheticModelProfile {
        &self.profile
    }

    pub fn model_id(&self) -> &str {
        &self.profile.model_id
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Centered preference effects for `dim`, in pool order, before scaling.
    pub fn effects(&self, dim: Dimension) -> &[f64] {
        &self.effects[dim.index()]
    }

    fn shift(&self, setting: &FactorSetting) -> f64 {
        self.profile.effect_scale
            * Dimension::ALL
                .iter()
                .map(|&d| self.effects[d.index()][setting.get(d)])
                .sum::<f64>()
    }

    fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.epsilon, 1.0 - self.epsilon)
    }

    /// Correctness probability of the instance at dataset position `k`.
    pub fn prob_at(&self, k: usize, setting: &FactorSetting) -> f64 {
        self.clamp(self.base[k] + self.shift(setting))
    }

    /// Correctness probability by instance id.
    pub fn synthetic_prob(&self, instance_id: &str, setting: &FactorSetting) -> Result<f64> {
        let k = self.position(instance_id)?;
        self.check_setting(setting)?;
        Ok(self.prob_at(k, setting))
    }

    fn position(&self, instance_id: &str) -> Result<usize> {
        self.instance_ids
            .iter()
            .position(|id| id == instance_id)
            .ok_or_else(|| Error::Profile(format!("unknown instance `{instance_id}`")))
    }

    fn check_setting(&self, setting: &FactorSetting) -> Result<()> {
        for d in Dimension::ALL {
            if setting.get(d) >= self.effects[d.index()].len() {
                return Err(Error::UnknownValue {
                    dimension: d.name().into(),
                    id: format!("#{}", setting.get(d)),
                });
            }
        }
        Ok(())
    }

    /// One Bernoulli response for cell (experiment, repetition, k).
    pub fn respond_at(&self, run_seed: u64, experiment: usize, repetition: usize, k: usize, setting: &FactorSetting) -> u8 {
        let mut r = rng::stream(&[
            domain::RESPONSE,
            self.profile.seed,
            run_seed,
            experiment as u64,
            repetition as u64,
            k as u64,
        ]);
        let mut p = self.base[k] + self.shift(setting);
        if self.profile.noise_scale > 0.0 {
            let z: f64 = StandardNormal.sample(&mut r);
            p += self.profile.noise_scale * z;
        }
        let p = self.clamp(p);
        (r.random::<f64>() < p) as u8
    }

    pub fn synthetic_respond(
        &self,
        instance_id: &str,
        setting: &FactorSetting,
        run_seed: u64,
        experiment: usize,
        repetition: usize,
    ) -> Result<u8> {
        let k = self.position(instance_id)?;
        self.check_setting(setting)?;
        Ok(self.respond_at(run_seed, experiment, repetition, k, setting))
    }
}

fn base_accuracy(profile: &SyntheticModelProfile, id: &str) -> Result<f64> {
    let mut r = rng::stream(&[domain::BASE, profile.seed, rng::hash_str(id)]);
    Ok(match &profile.base_accuracy {
        BaseAccuracy::Values(v) => *v
            .get(id)
            .ok_or_else(|| Error::Profile(format!("no base accuracy listed for `{id}`")))?,
        BaseAccuracy::Beta { mean, concentration } => {
            let beta = Beta::new(mean * concentration, (1.0 - mean) * concentration)
                .map_err(|e| Error::Profile(e.to_string()))?;
            beta.sample(&mut r)
        }
        BaseAccuracy::Uniform { low, high } => low + (high - low) * r.random::<f64>(),
        BaseAccuracy::Constant(p) => *p,
    })
}

fn random_effects(seed: u64, dim: Dimension, space: &FactorSpace, sd: f64) -> Vec<f64> {
    let len = space.pool_len(dim);
    if len < 2 || sd == 0.0 {
        return vec![0.0; len];
    }
    let raw: Vec<f64> = (0..len)
        .map(|i| {
            let mut r = rng::stream(&[
                domain::EFFECTS,
                seed,
                dim.index() as u64,
                rng::hash_str(space.value_id(dim, i)),
            ]);
            StandardNormal.sample(&mut r)
        })
        .collect();
    let c = centered(raw);
    let pop_sd = (c.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt();
    if pop_sd == 0.0 {
        return vec![0.0; len];
    }
    c.into_iter().map(|x| x * sd / pop_sd).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dataset, space};

    fn profile(s: f64) -> SyntheticModelProfile {
        SyntheticModelProfile::new("m", BaseAccuracy::Constant(s))
    }

    #[test]
    fn zero_effects_returns_base() {
        let m = SyntheticModel::new(profile(0.7), &dataset(3), &space([2, 2, 2, 2])).unwrap();
        assert_eq!(m.synthetic_prob("i1", &FactorSetting::default()).unwrap(), 0.7);
    }

    #[test]
    fn clamp_boundary() {
        let mut p = profile(1.0);
        p.clamp_epsilon = 0.01;
        let m = SyntheticModel::new(p, &dataset(1), &space([1, 1, 1, 1])).unwrap();
        assert_eq!(m.synthetic_prob("i0", &FactorSetting::default()).unwrap(), 0.99);
    }

    #[test]
    fn effect_sum() {
        // pools of two with effects (+0.05, -0.05) and (-0.02, +0.02) are
        // already centered; setting (0, 0) shifts by +0.05 - 0.02
        let mut p = profile(0.6);
        p.preference_effects.insert(
            Dimension::FewShotSet,
            [("fs0".to_string(), 0.05), ("fs1".to_string(), -0.05)].into(),
        );
        p.preference_effects.insert(
            Dimension::OptionLabels,
            [("ol0".to_string(), -0.02), ("ol1".to_string(), 0.02)].into(),
        );
        let m = SyntheticModel::new(p, &dataset(1), &space([2, 2, 1, 1])).unwrap();
        let got = m.synthetic_prob("i0", &FactorSetting::default()).unwrap();
        let expected = 0.6 + 1.0 * (0.05 + (-0.02) + 0.0 + 0.0);
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.63).abs() < 1e-12);
    }

    #[test]
    fn explicit_effects_are_centered() {
        let mut p = profile(0.5);
        p.preference_effects
            .insert(Dimension::TaskDescription, [("td0".to_string(), 0.3)].into());
        let m = SyntheticModel::new(p, &dataset(1), &space([1, 1, 3, 1])).unwrap();
        let e = m.effects(Dimension::TaskDescription);
        assert!(e.iter().sum::<f64>().abs() < 1e-15);
        assert!((e[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn random_effects_exact_sd_and_zero_mean() {
        let mut p = profile(0.5);
        p.random_effects.insert(Dimension::FewShotSet, 0.04);
        let m = SyntheticModel::new(p, &dataset(1), &space([8, 1, 1, 1])).unwrap();
        let e = m.effects(Dimension::FewShotSet);
        assert!(e.iter().sum::<f64>().abs() < 1e-14);
        let sd = (e.iter().map(|x| x * x).sum::<f64>() / 8.0).sqrt();
        assert!((sd - 0.04).abs() < 1e-14);
    }

    #[test]
    fn unknown_effect_id_rejected() {
        let mut p = profile(0.5);
        p.preference_effects
            .insert(Dimension::PromptFormat, [("zzz".to_string(), 0.1)].into());
        assert!(SyntheticModel::new(p, &dataset(1), &space([1, 1, 1, 1])).is_err());
    }

    #[test]
    fn epsilon_range_enforced() {
        let mut p = profile(0.5);
        p.clamp_epsilon = 0.0;
        assert!(p.validate().is_err());
        p.clamp_epsilon = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn perfect_model_without_clamp() {
        let m = SyntheticModel::new(profile(1.0), &dataset(2), &space([1, 1, 1, 1]))
            .unwrap()
            .without_clamp_for_tests();
        for rep in 0..200 {
            assert_eq!(m.respond_at(0, 0, rep, 0, &FactorSetting::default()), 1);
        }
    }

    #[test]
    fn bernoulli_mean_within_three_sigma() {
        let m = SyntheticModel::new(profile(0.3), &dataset(1), &space([1, 1, 1, 1])).unwrap();
        let n = 100_000;
        let ones: usize = (0..n)
            .map(|r| m.respond_at(5, 0, r, 0, &FactorSetting::default()) as usize)
            .sum();
        let sd = (n as f64 * 0.3 * 0.7).sqrt();
        assert!((ones as f64 - 0.3 * n as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn same_key_same_bit() {
        let m = SyntheticModel::new(profile(0.5), &dataset(4), &space([1, 1, 1, 1])).unwrap();
        for k in 0..4 {
            let a = m.synthetic_respond(&format!("i{k}"), &FactorSetting::default(), 9, 1, 2).unwrap();
            let b = m.synthetic_respond(&format!("i{k}"), &FactorSetting::default(), 9, 1, 2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn beta_base_is_keyed_by_id() {
        let mut p = profile(0.0);
        p.base_accuracy = BaseAccuracy::Beta {
            mean: 0.7,
            concentration: 4.0,
        };
        let small = SyntheticModel::new(p.clone(), &dataset(3), &space([1, 1, 1, 1])).unwrap();
        let big = SyntheticModel::new(p, &dataset(10), &space([1, 1, 1, 1])).unwrap();
        assert_eq!(small.base(), &big.base()[..3]);
        assert!(big.base().iter().all(|b| (0.0..=1.0).contains(b)));
    }

    #[test]
    fn profile_json_round_trip() {
        let mut p = profile(0.6);
        p.random_effects.insert(Dimension::FewShotSet, 0.03);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"few_shot_set\""));
        let back: SyntheticModelProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
