//! A seeded population of synthetic models over a synthetic benchmark, and
//! the comparison studies run on it: best-worst spread of single-factor
//! runs, correlation summaries, variance-vs-n curves and pairwise ORP AUCs,
//! each contrasting shared settings with instance-level randomization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{run_plan, run_redraw, Backend, BaseAccuracy, SyntheticModel, SyntheticModelProfile};
use crate::error::Result;
use crate::model::{Dataset, Dimension, FactorSpace, FewShotSet, Instance, OutcomeTensor};
use crate::orp::{orp_auc_matrix, ModelScoreStats, DEFAULT_DELTA_MAX, DEFAULT_STEPS};
use crate::planner::{plan, redraw_plans, PlanMode, PlannerConfig};
use crate::prompt::{OptionLabelScheme, PromptFormat, TaskDescription};
use crate::rng::{self, domain};
use crate::stats::correlation::{correlation_report, mean_report, CorrelationReport, DEFAULT_MAX_PAIRS};
use crate::stats::curve::{variance_vs_n, VarianceCurve};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_instances: usize,
    pub n_options: usize,
    /// Pool sizes in dimension order.
    pub pools: [usize; 4],
    /// One model per entry: mean of its Beta base-accuracy distribution.
    pub base_means: Vec<f64>,
    pub concentration: f64,
    /// Standard deviation of the preference effects per dimension.
    pub effect_sd: [f64; 4],
    pub effect_scale: f64,
    pub clamp_epsilon: f64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            n_instances: 300,
            n_options: 4,
            pools: [8, 4, 4, 4],
            base_means: vec![0.70, 0.73, 0.76, 0.79],
            concentration: 4.0,
            effect_sd: [0.036, 0.012, 0.012, 0.012],
            effect_scale: 1.0,
            clamp_epsilon: 0.02,
        }
    }
}

pub struct Population {
    pub dataset: Dataset,
    pub space: FactorSpace,
    pub profiles: Vec<SyntheticModelProfile>,
    pub models: Vec<SyntheticModel>,
}

const LABELS: [[&str; 6]; 4] = [
    ["A.", "B.", "C.", "D.", "E.", "F."],
    ["(1)", "(2)", "(3)", "(4)", "(5)", "(6)"],
    ["a)", "b)", "c)", "d)", "e)", "f)"],
    ["I.", "II.", "III.", "IV.", "V.", "VI."],
];

const INTROS: [&str; 4] = [
    "Given a context and multiple options, choose the most reasonable continuation.",
    "Read the question and select the correct option.",
    "The following are multiple choice questions. Pick the best answer.",
    "Answer the question by choosing one of the listed options.",
];

const FORMATS: [(&str, &str, &str); 4] = [
    ("Question:", "Options:", "The solution is:"),
    ("Q:", "Choices:", "Answer:"),
    ("Context:", "Candidates:", "The answer is"),
    ("Problem:", "Select from:", "Final answer:"),
];

fn synthetic_instance(id: String, seed: u64, n_options: usize) -> Instance {
    use rand::Rng;
    let mut r = rng::stream(&[domain::BASE, seed, rng::hash_str(&id)]);
    Instance {
        question: format!("Synthetic question {id}."),
        options: (0..n_options).map(|o| format!("candidate {o} for {id}")).collect(),
        answer_index: r.random_range(0..n_options),
        rationale: Some(format!("Working through {id} step by step.")),
        id,
    }
}

impl PopulationSpec {
    /// Benchmark, factor space and one synthetic model per base mean. Few-shot
    /// sets hold inline exemplars that are not dataset instances.
    pub fn dataset_and_space(&self, seed: u64) -> Result<(Dataset, FactorSpace)> {
        let instances = (0..self.n_instances)
            .map(|k| synthetic_instance(format!("q{k:04}"), seed, self.n_options))
            .collect();
        let dataset = Dataset::new("synthetic", instances)?;
        let few_shot_sets = (0..self.pools[0])
            .map(|i| FewShotSet {
                id: format!("shots-{i}"),
                exemplar_ids: vec![],
                exemplars: (0..3)
                    .map(|j| synthetic_instance(format!("shot-{i}-{j}"), seed, self.n_options))
                    .collect(),
            })
            .collect();
        let option_label_schemes = (0..self.pools[1])
            .map(|i| {
                let labels = &LABELS[i % 4][..self.n_options];
                let s = OptionLabelScheme::new(format!("labels-{i}"), labels);
                if i >= 4 {
                    // further schemes rotate the option order
                    let rot = i / 4;
                    s.with_permutation((0..self.n_options).map(|j| (j + rot) % self.n_options).collect())
                } else {
                    s
                }
            })
            .collect();
        let task_descriptions = (0..self.pools[2])
            .map(|i| TaskDescription {
                id: format!("task-{i}"),
                intro: INTROS[i % 4].to_string(),
                cot_cue: if i % 2 == 0 {
                    "Let us do this task step by step.".into()
                } else {
                    "Think it through before answering.".into()
                },
            })
            .collect();
        let prompt_formats = (0..self.pools[3])
            .map(|i| {
                let (q, o, a) = FORMATS[i % 4];
                PromptFormat {
                    id: format!("format-{i}"),
                    question_prefix: q.into(),
                    option_prefix: o.into(),
                    answer_prefix: a.into(),
                    separator: if i < 4 { "\n".into() } else { "\n\n".into() },
                }
            })
            .collect();
        let space = FactorSpace {
            few_shot_sets,
            option_label_schemes,
            task_descriptions,
            prompt_formats,
        };
        space.validate()?;
        Ok((dataset, space))
    }

    pub fn profiles(&self, seed: u64) -> Vec<SyntheticModelProfile> {
        self.base_means
            .iter()
            .enumerate()
            .map(|(j, &mean)| {
                let mut p = SyntheticModelProfile::new(
                    format!("model-{}", (b'a' + j as u8) as char),
                    BaseAccuracy::Beta {
                        mean,
                        concentration: self.concentration,
                    },
                );
                p.seed = rng::mix(&[seed, j as u64]);
                p.random_effects = Dimension::ALL
                    .into_iter()
                    .map(|d| (d, self.effect_sd[d.index()]))
                    .collect::<BTreeMap<_, _>>();
                p.effect_scale = self.effect_scale;
                p.clamp_epsilon = self.clamp_epsilon;
                p
            })
            .collect()
    }

    pub fn build(&self, seed: u64) -> Result<Population> {
        let (dataset, space) = self.dataset_and_space(seed)?;
        let profiles = self.profiles(seed);
        let models = profiles
            .iter()
            .map(|p| SyntheticModel::new(p.clone(), &dataset, &space))
            .collect::<Result<Vec<_>>>()?;
        Ok(Population {
            dataset,
            space,
            profiles,
            models,
        })
    }
}

/// Pins every dimension outside `dims` to the first pool value.
pub fn first_value_pins(space: &FactorSpace, dims: &[Dimension]) -> BTreeMap<Dimension, String> {
    Dimension::ALL
        .into_iter()
        .filter(|d| !dims.contains(d))
        .map(|d| (d, space.value_id(d, 0).to_string()))
        .collect()
}

fn config(pop: &Population, mode: PlanMode, n: usize, seed: u64, dims: &[Dimension], pin: bool) -> PlannerConfig {
    let mut c = PlannerConfig::new(mode, n, seed).randomize(dims);
    if pin {
        c.pins = first_value_pins(&pop.space, dims);
    }
    c
}

/// Runs every model of the population on per-repetition plans drawn from
/// `config`. The plans are shared by all models so their runs are paired.
pub fn run_population(
    pop: &Population,
    cfg: &PlannerConfig,
    repetitions: usize,
    redraw_pins: bool,
    run_seed: u64,
) -> Result<Vec<OutcomeTensor>> {
    let plans = redraw_plans(&pop.dataset, &pop.space, cfg, repetitions, redraw_pins)?;
    pop.models
        .iter()
        .map(|m| {
            run_redraw(
                &plans,
                cfg.seed,
                redraw_pins,
                &pop.dataset,
                &pop.space,
                &Backend::Synthetic(m),
                run_seed,
                None,
            )
        })
        .collect()
}

/// Mean best-minus-worst experiment score when each model runs `n_runs`
/// experiments that differ only in the few-shot set (other dimensions at
/// their first value), averaged over models and `replicates` plan seeds.
pub fn spread_study(pop: &Population, n_runs: usize, replicates: usize, seed: u64) -> Result<f64> {
    let dims = [Dimension::FewShotSet];
    let mut total = 0.0;
    let mut count = 0usize;
    for rep in 0..replicates {
        let plan_seed = rng::mix(&[seed, rep as u64]);
        let p = plan(&pop.dataset, &pop.space, &config(pop, PlanMode::ExperimentRandom, n_runs, plan_seed, &dims, true))?;
        for m in &pop.models {
            let t = run_plan(&p, &pop.dataset, &pop.space, &Backend::Synthetic(m), 1, plan_seed)?;
            let scores: Vec<f64> = (0..n_runs).map(|e| t.score(e, 0)).collect();
            let best = scores.iter().cloned().fold(f64::MIN, f64::max);
            let worst = scores.iter().cloned().fold(f64::MAX, f64::min);
            total += best - worst;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationComparison {
    pub fixed: CorrelationReport,
    pub ilr: CorrelationReport,
    pub fixed_per_model: Vec<CorrelationReport>,
    pub ilr_per_model: Vec<CorrelationReport>,
}

/// Correlation summaries for few-shot-randomized experiments (the few-shot
/// set shared within an experiment; other dimensions redrawn once per
/// repetition) against instance-level randomization of every dimension.
pub fn correlation_study(pop: &Population, n: usize, r: usize, seed: u64) -> Result<CorrelationComparison> {
    let fixed_cfg = config(pop, PlanMode::ExperimentRandom, n, rng::mix(&[seed, 1]), &[Dimension::FewShotSet], false);
    let ilr_cfg = config(pop, PlanMode::Ilr, n, rng::mix(&[seed, 2]), &Dimension::ALL, false);
    let reports = |cfg: &PlannerConfig| -> Result<Vec<CorrelationReport>> {
        run_population(pop, cfg, r, true, seed)?
            .iter()
            .map(|t| correlation_report(t, DEFAULT_MAX_PAIRS, seed))
            .collect()
    };
    let fixed_per_model = reports(&fixed_cfg)?;
    let ilr_per_model = reports(&ilr_cfg)?;
    Ok(CorrelationComparison {
        fixed: mean_report(&fixed_per_model).expect("population is non-empty"),
        ilr: mean_report(&ilr_per_model).expect("population is non-empty"),
        fixed_per_model,
        ilr_per_model,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    /// Few-shot set shared within an experiment, others redrawn per repetition.
    pub single_factor: VarianceCurve,
    /// Every dimension shared within an experiment.
    pub multi_factor: VarianceCurve,
    /// Every dimension drawn per instance.
    pub ilr: VarianceCurve,
}

/// Population-mean variance-vs-n curves for the three designs.
pub fn curve_study(
    pop: &Population,
    n: usize,
    r: usize,
    n_max: usize,
    n_selections: usize,
    seed: u64,
) -> Result<CurveComparison> {
    let curve = |cfg: PlannerConfig| -> Result<VarianceCurve> {
        let curves = run_population(pop, &cfg, r, true, seed)?
            .iter()
            .map(|t| variance_vs_n(&t.score_matrix(), n_max, n_selections, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(VarianceCurve::average(&curves).expect("population is non-empty"))
    };
    Ok(CurveComparison {
        single_factor: curve(config(pop, PlanMode::ExperimentRandom, n, rng::mix(&[seed, 1]), &[Dimension::FewShotSet], false))?,
        multi_factor: curve(config(pop, PlanMode::ExperimentRandom, n, rng::mix(&[seed, 2]), &Dimension::ALL, false))?,
        ilr: curve(config(pop, PlanMode::Ilr, n, rng::mix(&[seed, 3]), &Dimension::ALL, false))?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucComparison {
    pub dimensions: Vec<Dimension>,
    pub fixed_mean_auc: f64,
    pub ilr_mean_auc: f64,
}

/// Mean pairwise ORP AUC across the population when `dims` are shared
/// within each experiment versus drawn per instance. Other dimensions stay
/// at their first value. Each model's score series is its experiment scores
/// over all experiments and repetitions.
pub fn auc_study(pop: &Population, dims: &[Dimension], n: usize, r: usize, seed: u64) -> Result<AucComparison> {
    let tag = dims.iter().fold(0u64, |acc, d| acc | 1 << d.index());
    let mean_auc = |mode: PlanMode, salt: u64| -> Result<f64> {
        let cfg = config(pop, mode, n, rng::mix(&[seed, tag, salt]), dims, true);
        let stats = run_population(pop, &cfg, r, false, seed)?
            .iter()
            .zip(&pop.profiles)
            .map(|(t, p)| ModelScoreStats::new(p.model_id.clone(), t.score_matrix().concat()))
            .collect::<Result<Vec<_>>>()?;
        Ok(orp_auc_matrix(&stats, DEFAULT_DELTA_MAX, DEFAULT_STEPS)?.mean_auc)
    };
    Ok(AucComparison {
        dimensions: dims.to_vec(),
        fixed_mean_auc: mean_auc(PlanMode::ExperimentRandom, 1)?,
        ilr_mean_auc: mean_auc(PlanMode::Ilr, 2)?,
    })
}
