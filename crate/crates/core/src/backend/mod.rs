//! Executing plans against a response source.

pub mod endpoint;
pub mod synthetic;

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use endpoint::{EndpointClient, EndpointConfig};
pub use synthetic::{load_profile, BaseAccuracy, SyntheticModel, SyntheticModelProfile};

use crate::error::{Error, Result};
use crate::model::{Dataset, Dimension, FactorSpace, OutcomeMeta, OutcomeTensor};
use crate::planner::{AssignmentPlan, RepetitionDesign};
use crate::prompt::{parse_answer, render_prompt};
use crate::{par, report};

pub enum Backend<'a> {
    Synthetic(&'a SyntheticModel),
    Endpoint(&'a EndpointClient),
}

impl Backend<'_> {
    pub fn id(&self) -> String {
        match self {
            Backend::Synthetic(m) => format!("synthetic:{}", m.model_id()),
            Backend::Endpoint(c) => format!("endpoint:{}", c.config().model),
        }
    }
}

/// Where the plan for each repetition comes from.
enum Plans<'a> {
    Shared(&'a AssignmentPlan, usize),
    PerRepetition(&'a [AssignmentPlan]),
}

impl Plans<'_> {
    fn repetitions(&self) -> usize {
        match self {
            Plans::Shared(_, r) => *r,
            Plans::PerRepetition(p) => p.len(),
        }
    }

    fn get(&self, rep: usize) -> &AssignmentPlan {
        match self {
            Plans::Shared(p, _) => p,
            Plans::PerRepetition(p) => &p[rep],
        }
    }

    fn first(&self) -> &AssignmentPlan {
        self.get(0)
    }
}

fn check_plans(plans: &Plans<'_>, dataset: &Dataset, space: &FactorSpace) -> Result<()> {
    let r = plans.repetitions();
    if r == 0 {
        return Err(Error::Plan("repetitions must be at least 1".into()));
    }
    let n = plans.first().n_experiments();
    let space_digest = space.digest();
    let distinct = match plans {
        Plans::Shared(..) => 1,
        Plans::PerRepetition(p) => p.len(),
    };
    for rep in 0..distinct {
        let p = plans.get(rep);
        if p.n_experiments() != n {
            return Err(Error::Plan("per-repetition plans differ in experiment count".into()));
        }
        if p.instance_ids().len() != dataset.len()
            || p.instance_ids().iter().zip(dataset.instances()).any(|(a, b)| *a != b.id)
        {
            return Err(Error::Plan("plan instances do not match the dataset".into()));
        }
        if p.factor_space_digest != space_digest {
            return Err(Error::Plan("plan was made for a different factor space".into()));
        }
    }
    Ok(())
}

fn meta_for(
    plans: &Plans<'_>,
    plan_seed: u64,
    design: RepetitionDesign,
    backend: &Backend<'_>,
    run_seed: u64,
    dataset: &Dataset,
    space: &FactorSpace,
) -> OutcomeMeta {
    let p = plans.first();
    OutcomeMeta {
        plan_seed,
        mode: p.mode.name().to_string(),
        repetition_design: design.label().to_string(),
        backend_id: backend.id(),
        run_seed,
        dataset: dataset.name().to_string(),
        dataset_digest: dataset.digest(),
        factor_space_digest: space.digest(),
        config_digest: p.config_digest.clone(),
        tool_version: crate::TOOL_VERSION.to_string(),
    }
}

/// Runs every repetition of `plan` (the same plan each time).
pub fn run_plan(
    plan: &AssignmentPlan,
    dataset: &Dataset,
    space: &FactorSpace,
    backend: &Backend<'_>,
    repetitions: usize,
    run_seed: u64,
) -> Result<OutcomeTensor> {
    run_plan_resumable(plan, dataset, space, backend, repetitions, run_seed, None)
}

/// As [`run_plan`]; endpoint runs persist partial results to `partial` on
/// failure and resume from it when it exists.
pub fn run_plan_resumable(
    plan: &AssignmentPlan,
    dataset: &Dataset,
    space: &FactorSpace,
    backend: &Backend<'_>,
    repetitions: usize,
    run_seed: u64,
    partial: Option<&Path>,
) -> Result<OutcomeTensor> {
    let plans = Plans::Shared(plan, repetitions);
    run(&plans, plan.seed, RepetitionDesign::Shared, dataset, space, backend, run_seed, partial)
}

/// Runs repetition `r` against `plans[r]` (see [`crate::planner::redraw_plans`]).
#[allow(clippy::too_many_arguments)]
pub fn run_redraw(
    plans: &[AssignmentPlan],
    plan_seed: u64,
    redraw_pins: bool,
    dataset: &Dataset,
    space: &FactorSpace,
    backend: &Backend<'_>,
    run_seed: u64,
    partial: Option<&Path>,
) -> Result<OutcomeTensor> {
    let design = RepetitionDesign::Redraw { redraw_pins };
    run(&Plans::PerRepetition(plans), plan_seed, design, dataset, space, backend, run_seed, partial)
}

#[allow(clippy::too_many_arguments)]
fn run(
    plans: &Plans<'_>,
    plan_seed: u64,
    design: RepetitionDesign,
    dataset: &Dataset,
    space: &FactorSpace,
    backend: &Backend<'_>,
    run_seed: u64,
    partial: Option<&Path>,
) -> Result<OutcomeTensor> {
    check_plans(plans, dataset, space)?;
    let meta = meta_for(plans, plan_seed, design, backend, run_seed, dataset, space);
    let dims = [plans.first().n_experiments(), plans.repetitions(), dataset.len()];
    match backend {
        Backend::Synthetic(model) => Ok(run_synthetic(plans, model, meta, dims, run_seed)),
        Backend::Endpoint(client) => run_endpoint(plans, client, meta, dims, dataset, space, partial),
    }
}

fn run_synthetic(
    plans: &Plans<'_>,
    model: &SyntheticModel,
    meta: OutcomeMeta,
    [n, r, m]: [usize; 3],
    run_seed: u64,
) -> OutcomeTensor {
    let mut values = vec![0u8; n * r * m];
    if m > 0 {
        par::for_each_chunk(&mut values, m, |row, start| {
            let cell = start / m;
            let (e, rep) = (cell / r, cell % r);
            let settings = plans.get(rep).experiment(e);
            for (k, v) in row.iter_mut().enumerate() {
                *v = model.respond_at(run_seed, e, rep, k, &settings[k]);
            }
        });
    }
    OutcomeTensor::new(meta, [n, r, m], values).expect("synthetic responses are binary")
}

/// Outcomes of an interrupted endpoint run. `None` marks a cell that was
/// never completed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialOutcomes {
    pub meta: OutcomeMeta,
    pub dims: [usize; 3],
    pub values: Vec<Option<u8>>,
}

impl PartialOutcomes {
    pub fn completed(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

fn load_partial(path: &Path, meta: &OutcomeMeta, dims: [usize; 3]) -> Result<Option<Vec<Option<u8>>>> {
    if !path.exists() {
        return Ok(None);
    }
    let p: PartialOutcomes = report::read_json(path)?;
    if p.dims != dims || p.values.len() != dims.iter().product::<usize>() || p.meta != *meta {
        return Err(Error::Backend(format!(
            "partial results in {} belong to a different run",
            path.display()
        )));
    }
    Ok(Some(p.values))
}

struct PendingCell {
    index: usize,
    text: String,
    answer_index: usize,
    scheme: usize,
    n_options: usize,
    answer_prefix: String,
}

fn run_endpoint(
    plans: &Plans<'_>,
    client: &EndpointClient,
    meta: OutcomeMeta,
    dims: [usize; 3],
    dataset: &Dataset,
    space: &FactorSpace,
    partial: Option<&Path>,
) -> Result<OutcomeTensor> {
    let [n, r, m] = dims;
    if r > 1 && client.config().temperature == 0.0 {
        log::warn!("temperature is 0: {r} repetitions of the same prompt are degenerate");
    }
    let mut results: Vec<Option<u8>> = match partial {
        Some(p) => load_partial(p, &meta, dims)?.unwrap_or_else(|| vec![None; n * r * m]),
        None => vec![None; n * r * m],
    };
    let mut pending = Vec::new();
    for (index, slot) in results.iter().enumerate() {
        if slot.is_some() {
            continue;
        }
        let (e, rep, k) = (index / (r * m), (index / m) % r, index % m);
        let setting = plans.get(rep).setting(e, k);
        let inst = &dataset.instances()[k];
        let prompt = render_prompt(inst, &setting, space, dataset)?;
        pending.push(PendingCell {
            index,
            text: prompt.text,
            answer_index: inst.answer_index,
            scheme: setting.get(Dimension::OptionLabels),
            n_options: inst.options.len(),
            answer_prefix: space.prompt_formats[setting.get(Dimension::PromptFormat)]
                .answer_prefix
                .clone(),
        });
    }
    log::info!("{} of {} cells to query", pending.len(), results.len());

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let shared = Mutex::new(&mut results);
    let failure: Mutex<Option<(usize, Error)>> = Mutex::new(None);
    let workers = client.config().max_in_flight.min(pending.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = pending.get(i) else { break };
                match client.complete(&cell.text) {
                    Ok(text) => {
                        let scheme = &space.option_label_schemes[cell.scheme];
                        let chosen = parse_answer(&text, scheme, cell.n_options, Some(&cell.answer_prefix));
                        let v = (chosen == Some(cell.answer_index)) as u8;
                        shared.lock().expect("results lock")[cell.index] = Some(v);
                    }
                    Err(err) => {
                        abort.store(true, Ordering::SeqCst);
                        let mut f = failure.lock().expect("failure lock");
                        if f.as_ref().is_none_or(|(idx, _)| cell.index < *idx) {
                            *f = Some((cell.index, err));
                        }
                    }
                }
            });
        }
    });

    if let Some((index, err)) = failure.into_inner().expect("failure lock") {
        let (e, rep, k) = (index / (r * m), (index / m) % r, index % m);
        let mut msg = format!("cell (experiment {e}, repetition {rep}, instance {k}): {err}");
        if let Some(path) = partial {
            let p = PartialOutcomes { meta, dims, values: results };
            report::write_json(path, &p)?;
            msg.push_str(&format!(
                "; {} of {} cells saved to {}",
                p.completed(),
                p.values.len(),
                path.display()
            ));
        }
        return Err(Error::Backend(msg));
    }
    if let Some(path) = partial.filter(|p| p.exists()) {
        std::fs::remove_file(path).map_err(|e| Error::io(path, e))?;
    }
    let values = results.into_iter().map(|v| v.expect("every cell completed")).collect();
    OutcomeTensor::new(meta, dims, values)
}
