use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use ilr_core::backend::{run_plan_resumable, run_redraw, Backend, EndpointClient, SyntheticModel};
use ilr_core::error::{Error, Result};
use ilr_core::orp::{orp_auc_matrix, orp_curve, AucMatrix, ModelScoreStats, OrpCurve};
use ilr_core::planner::{plan, redraw_plans, AssignmentPlan, RepetitionDesign};
use ilr_core::prompt::render_prompt;
use ilr_core::report::{
    common_config_digest, write_bytes, write_csv, write_json, Manifest, Provenance, MANIFEST_FILE,
};
use ilr_core::stats::{
    correlation_report, decompose_variance, mean_form, paired_t_test, variance_vs_n, CorrelationReport, MeanForm,
    TTestResult, VarianceCurve, VarianceDecomposition,
};
use ilr_core::study::PopulationSpec;
use ilr_core::{load_dataset, load_factor_space, load_outcomes, save_outcomes, Dataset, FactorSpace, OutcomeTensor};

use crate::config::{BackendConfig, OrpConfig, RunConfig, StatsConfig};

pub const PLAN_FILE: &str = "plan.json";
pub const PLANS_DIR: &str = "plans";
pub const OUTCOMES_DIR: &str = "outcomes";

/// Where files go and what the manifest stamps on them.
pub struct Workspace {
    pub dir: PathBuf,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
}

impl Workspace {
    pub fn from_config(c: &RunConfig) -> Result<Self> {
        Ok(Workspace {
            dir: c.output_dir.clone(),
            config_digest: Some(c.digest()?),
            seed: Some(c.planner.seed),
        })
    }

    fn record(&self, files: &[PathBuf]) -> Result<()> {
        let mut m = Manifest::open(&self.dir, self.config_digest.clone(), self.seed)?;
        for f in files {
            m.record(&self.dir, f)?;
        }
        m.save(&self.dir)
    }
}

fn loaded_inputs(c: &RunConfig) -> Result<(Dataset, FactorSpace)> {
    Ok((load_dataset(&c.dataset)?, load_factor_space(&c.factor_space)?))
}

fn repetition_plan_file(rep: usize) -> PathBuf {
    Path::new(PLANS_DIR).join(format!("rep-{rep:03}.json"))
}

fn build_plans(c: &RunConfig, dataset: &Dataset, space: &FactorSpace, digest: &str) -> Result<Vec<AssignmentPlan>> {
    let mut plans = match c.repetition_design {
        RepetitionDesign::Shared => vec![plan(dataset, space, &c.planner)?],
        RepetitionDesign::Redraw { redraw_pins } => redraw_plans(dataset, space, &c.planner, c.repetitions, redraw_pins)?,
    };
    for p in &mut plans {
        p.config_digest = Some(digest.to_string());
        p.check_mode_contract()?;
        p.check_leakage(space)?;
    }
    Ok(plans)
}

fn plan_files(c: &RunConfig) -> Vec<PathBuf> {
    match c.repetition_design {
        RepetitionDesign::Shared => vec![PathBuf::from(PLAN_FILE)],
        RepetitionDesign::Redraw { .. } => (0..c.repetitions).map(repetition_plan_file).collect(),
    }
}

pub fn cmd_plan(c: &RunConfig) -> Result<Vec<PathBuf>> {
    let ws = Workspace::from_config(c)?;
    let (dataset, space) = loaded_inputs(c)?;
    let digest = ws.config_digest.clone().unwrap_or_default();
    let plans = build_plans(c, &dataset, &space, &digest)?;
    let files = plan_files(c);
    for (p, f) in plans.iter().zip(&files) {
        write_bytes(ws.dir.join(f), &p.to_json(&space))?;
    }
    // the copy lives in the output directory, so it does not name it
    let mut copy = c.clone();
    copy.output_dir = PathBuf::from(".");
    write_json(ws.dir.join("config.json"), &copy)?;
    let mut recorded = files.clone();
    recorded.push(PathBuf::from("config.json"));
    ws.record(&recorded)?;
    Ok(files)
}

/// Plans from the output directory when present, otherwise freshly drawn.
fn load_plans(c: &RunConfig, dataset: &Dataset, space: &FactorSpace, plan_override: Option<&Path>) -> Result<Vec<AssignmentPlan>> {
    let read = |p: &Path| -> Result<AssignmentPlan> {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        AssignmentPlan::from_json(&bytes, dataset, space)
    };
    if let Some(p) = plan_override {
        return Ok(vec![read(p)?]);
    }
    let files = plan_files(c);
    if files.iter().all(|f| c.output_dir.join(f).is_file()) {
        files.iter().map(|f| read(&c.output_dir.join(f))).collect()
    } else {
        info!("no plan files in {}, drawing plans", c.output_dir.display());
        build_plans(c, dataset, space, &c.digest()?)
    }
}

#[derive(Serialize)]
struct RenderLine<'a> {
    experiment: usize,
    repetition: usize,
    #[serde(flatten)]
    prompt: &'a ilr_core::prompt::RenderedPrompt,
}

pub fn cmd_render(c: &RunConfig, experiment: Option<usize>, repetition: usize, limit: Option<usize>) -> Result<String> {
    let (dataset, space) = loaded_inputs(c)?;
    let plans = load_plans(c, &dataset, &space, None)?;
    if repetition >= c.repetitions {
        return Err(Error::Plan(format!("repetition {repetition} out of range")));
    }
    // a shared design has one plan for every repetition
    let p = &plans[repetition.min(plans.len() - 1)];
    let exps: Vec<usize> = match experiment {
        Some(e) if e >= p.n_experiments() => return Err(Error::Plan(format!("experiment {e} out of range"))),
        Some(e) => vec![e],
        None => (0..p.n_experiments()).collect(),
    };
    let mut out = String::new();
    let mut emitted = 0;
    'outer: for e in exps {
        for (k, inst) in dataset.instances().iter().enumerate() {
            if limit.is_some_and(|l| emitted >= l) {
                break 'outer;
            }
            let prompt = render_prompt(inst, &p.setting(e, k), &space, &dataset)?;
            out.push_str(&serde_json::to_string(&RenderLine {
                experiment: e,
                repetition,
                prompt: &prompt,
            })?);
            out.push('\n');
            emitted += 1;
        }
    }
    Ok(out)
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || "-_.".contains(ch) { ch } else { '_' })
        .collect()
}

pub fn cmd_run(c: &RunConfig, plan_override: Option<&Path>) -> Result<Vec<PathBuf>> {
    let ws = Workspace::from_config(c)?;
    let (dataset, space) = loaded_inputs(c)?;
    let plans = load_plans(c, &dataset, &space, plan_override)?;
    if c.repetitions < 2 {
        warn!("1 repetition: variance decomposition and correlation reports need at least 2");
    }
    let run_one = |backend: &Backend<'_>, name: &str| -> Result<PathBuf> {
        let rel = Path::new(OUTCOMES_DIR).join(format!("{}.json", file_safe(name)));
        let partial = ws.dir.join(OUTCOMES_DIR).join(format!("{}.partial.json", file_safe(name)));
        let t = match c.repetition_design {
            RepetitionDesign::Shared => {
                run_plan_resumable(&plans[0], &dataset, &space, backend, c.repetitions, c.run_seed(), Some(&partial))?
            }
            RepetitionDesign::Redraw { redraw_pins } => run_redraw(
                &plans,
                c.planner.seed,
                redraw_pins,
                &dataset,
                &space,
                backend,
                c.run_seed(),
                Some(&partial),
            )?,
        };
        save_outcomes(&t, ws.dir.join(&rel))?;
        Ok(rel)
    };
    let mut files = Vec::new();
    match &c.backend {
        BackendConfig::Synthetic { .. } => {
            for profile in c.profiles()? {
                let name = profile.model_id.clone();
                let model = SyntheticModel::new(profile, &dataset, &space)?;
                files.push(run_one(&Backend::Synthetic(&model), &name)?);
            }
        }
        BackendConfig::Endpoint(e) => {
            let client = EndpointClient::new(e.clone())?;
            files.push(run_one(&Backend::Endpoint(&client), &e.model)?);
        }
    }
    ws.record(&files)?;
    Ok(files)
}

/// Outcome files named on the command line, or every completed outcome file
/// in the output directory.
pub fn outcome_inputs(dir: &Path, given: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if !given.is_empty() {
        return Ok(given.to_vec());
    }
    let d = dir.join(OUTCOMES_DIR);
    let mut files: Vec<PathBuf> = fs::read_dir(&d)
        .map_err(|e| Error::io(&d, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.ends_with(".json") && !name.ends_with(".partial.json")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Precondition(format!("no outcome files in {}", d.display())));
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

struct Input {
    name: String,
    path: PathBuf,
    tensor: OutcomeTensor,
}

fn load_inputs(files: &[PathBuf]) -> Result<Vec<Input>> {
    let mut inputs: Vec<Input> = Vec::new();
    for f in files {
        let mut name = stem(f);
        let mut i = 1;
        while inputs.iter().any(|x| x.name == name) {
            i += 1;
            name = format!("{}-{i}", stem(f));
        }
        inputs.push(Input {
            name,
            path: f.clone(),
            tensor: load_outcomes(f)?,
        });
    }
    Ok(inputs)
}

fn provenance(inputs: &[&Input]) -> Result<Provenance> {
    let digest = common_config_digest(
        inputs.iter().map(|i| (i.name.as_str(), i.tensor.meta.config_digest.as_deref())),
        true,
    )?;
    let mut p = Provenance::new(digest);
    for i in inputs {
        p.add_input(&i.path)?;
    }
    Ok(p)
}

#[derive(Clone, Debug, Serialize)]
pub struct BestWorst {
    pub best_experiment: usize,
    pub worst_experiment: usize,
    pub best_score: f64,
    pub worst_score: f64,
    pub test: TTestResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsReport {
    pub provenance: Provenance,
    pub plan_seed: u64,
    pub run_seed: u64,
    pub mode: String,
    pub repetition_design: String,
    pub backend_id: String,
    pub dims: [usize; 3],
    /// Mean over repetitions of each experiment's score.
    pub experiment_scores: Vec<f64>,
    pub decomposition: VarianceDecomposition,
    pub mean_form: MeanForm,
    pub correlation: Option<CorrelationReport>,
    pub best_vs_worst: Option<BestWorst>,
    pub variance_curve: Option<VarianceCurve>,
    /// Statistics that could not be computed and why.
    pub skipped: Vec<String>,
}

#[derive(Serialize)]
struct StatRow<'a> {
    statistic: &'a str,
    value: f64,
}

/// Paired by instance: each instance's correctness in the best and the worst
/// experiment, averaged over repetitions.
fn best_vs_worst(t: &OutcomeTensor, scores: &[f64]) -> Result<BestWorst> {
    let best = (0..scores.len()).fold(0, |b, e| if scores[e] > scores[b] { e } else { b });
    let worst = (0..scores.len()).fold(0, |w, e| if scores[e] < scores[w] { e } else { w });
    let test = paired_t_test(&t.instance_means(best), &t.instance_means(worst))?;
    Ok(BestWorst {
        best_experiment: best,
        worst_experiment: worst,
        best_score: scores[best],
        worst_score: scores[worst],
        test,
    })
}

fn keep<T>(skipped: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| skipped.push(format!("{what}: {e}"))).ok()
}

fn stats_for(input: &Input, cfg: &StatsConfig, seed: u64) -> Result<StatsReport> {
    let t = &input.tensor;
    let decomposition = decompose_variance(t)?;
    let matrix = t.score_matrix();
    let mean_form = mean_form(&matrix)?;
    let experiment_scores: Vec<f64> = matrix.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
    let mut skipped = Vec::new();
    let correlation = keep(&mut skipped, "correlation", correlation_report(t, cfg.max_pairs, seed));
    let best_vs_worst = if matrix.len() >= 2 {
        keep(&mut skipped, "best_vs_worst", best_vs_worst(t, &experiment_scores))
    } else {
        skipped.push("best_vs_worst: needs at least 2 experiments".into());
        None
    };
    let variance_curve = if matrix.len() >= 2 {
        let n_max = cfg.n_max.unwrap_or(matrix.len()).min(matrix.len());
        Some(variance_vs_n(&matrix, n_max, cfg.n_selections, seed)?)
    } else {
        skipped.push("variance_curve: needs at least 2 experiments".into());
        None
    };
    Ok(StatsReport {
        provenance: provenance(&[input])?,
        plan_seed: t.meta.plan_seed,
        run_seed: t.meta.run_seed,
        mode: t.meta.mode.clone(),
        repetition_design: t.meta.repetition_design.clone(),
        backend_id: t.meta.backend_id.clone(),
        dims: t.dims(),
        experiment_scores,
        decomposition,
        mean_form,
        correlation,
        best_vs_worst,
        variance_curve,
        skipped,
    })
}

fn summary_rows(r: &StatsReport) -> Vec<StatRow<'static>> {
    let d = &r.decomposition;
    let mut rows = vec![
        StatRow { statistic: "term_variance", value: d.term_variance },
        StatRow { statistic: "term_instance_cov", value: d.term_instance_cov },
        StatRow { statistic: "term_experiment_cov", value: d.term_experiment_cov },
        StatRow { statistic: "total", value: d.total },
        StatRow { statistic: "direct_estimate", value: d.direct_estimate },
        StatRow { statistic: "v_bar", value: r.mean_form.v_bar },
        StatRow { statistic: "c_bar", value: r.mean_form.c_bar },
    ];
    if let Some(c) = &r.correlation {
        rows.push(StatRow { statistic: "corr_instance", value: c.corr_instance });
        if let Some(ce) = c.corr_experiment {
            rows.push(StatRow { statistic: "corr_experiment", value: ce });
        }
        rows.push(StatRow { statistic: "var_instance", value: c.var_instance });
    }
    if let Some(b) = &r.best_vs_worst {
        rows.push(StatRow { statistic: "best_score", value: b.best_score });
        rows.push(StatRow { statistic: "worst_score", value: b.worst_score });
        rows.push(StatRow { statistic: "t_statistic", value: b.test.t_statistic });
        rows.push(StatRow { statistic: "p_value", value: b.test.p_value });
    }
    rows
}

#[derive(Serialize)]
struct CorrelationTableRow<'a> {
    input: &'a str,
    mode: &'a str,
    repetition_design: &'a str,
    corr_instance: Option<f64>,
    corr_experiment: Option<f64>,
    var_instance: Option<f64>,
}

pub fn cmd_stats(ws: &Workspace, files: &[PathBuf], cfg: &StatsConfig) -> Result<(Vec<PathBuf>, String)> {
    let inputs = load_inputs(files)?;
    let mut written = Vec::new();
    let mut table = Vec::new();
    for input in &inputs {
        let seed = ws.seed.unwrap_or(input.tensor.meta.run_seed);
        let report = stats_for(input, cfg, seed)?;
        let base = Path::new("stats").join(&input.name);
        let json = base.with_extension("json");
        write_json(ws.dir.join(&json), &report)?;
        let summary = PathBuf::from(format!("{}_summary.csv", base.display()));
        write_csv(ws.dir.join(&summary), &summary_rows(&report))?;
        written.extend([json, summary]);
        if let Some(curve) = &report.variance_curve {
            let f = PathBuf::from(format!("{}_curve.csv", base.display()));
            write_csv(ws.dir.join(&f), &curve.points)?;
            written.push(f);
        }
        table.push((input, report.correlation));
    }
    let rows: Vec<CorrelationTableRow<'_>> = table
        .iter()
        .map(|(i, c)| CorrelationTableRow {
            input: &i.name,
            mode: &i.tensor.meta.mode,
            repetition_design: &i.tensor.meta.repetition_design,
            corr_instance: c.as_ref().map(|c| c.corr_instance),
            corr_experiment: c.as_ref().and_then(|c| c.corr_experiment),
            var_instance: c.as_ref().map(|c| c.var_instance),
        })
        .collect();
    let f = PathBuf::from("stats/correlation_table.csv");
    write_csv(ws.dir.join(&f), &rows)?;
    written.push(f);
    ws.record(&written)?;
    let mut text = format!("{:<24} {:>14} {:>16} {:>13}\n", "input", "corr_instance", "corr_experiment", "var_instance");
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for r in &rows {
        text.push_str(&format!(
            "{:<24} {:>14} {:>16} {:>13}\n",
            r.input,
            fmt(r.corr_instance),
            fmt(r.corr_experiment),
            fmt(r.var_instance)
        ));
    }
    Ok((written, text))
}

#[derive(Serialize)]
struct CurveFile<'a> {
    provenance: Provenance,
    plan_seed: u64,
    n_selections: usize,
    target_std: Option<f64>,
    n_to_target: Option<usize>,
    curve: &'a VarianceCurve,
}

pub fn cmd_curve(ws: &Workspace, files: &[PathBuf], cfg: &StatsConfig) -> Result<(Vec<PathBuf>, String)> {
    let inputs = load_inputs(files)?;
    let mut written = Vec::new();
    let mut text = String::new();
    for input in &inputs {
        let matrix = input.tensor.score_matrix();
        let n_max = cfg.n_max.unwrap_or(matrix.len());
        let seed = ws.seed.unwrap_or(input.tensor.meta.run_seed);
        let curve = variance_vs_n(&matrix, n_max, cfg.n_selections, seed)?;
        let n_to_target = cfg.target_std.and_then(|t| curve.n_to_target(t));
        let base = Path::new("curve").join(&input.name);
        let csv = base.with_extension("csv");
        let json = base.with_extension("json");
        write_csv(ws.dir.join(&csv), &curve.points)?;
        write_json(
            ws.dir.join(&json),
            &CurveFile {
                provenance: provenance(&[input])?,
                plan_seed: input.tensor.meta.plan_seed,
                n_selections: cfg.n_selections,
                target_std: cfg.target_std,
                n_to_target,
                curve: &curve,
            },
        )?;
        written.extend([csv, json]);
        text.push_str(&format!("{}:", input.name));
        for p in &curve.points {
            text.push_str(&format!(" {:.4}", p.mean_std));
        }
        if let Some(t) = cfg.target_std {
            let n = n_to_target.map_or_else(|| "not reached".to_string(), |n| n.to_string());
            text.push_str(&format!("  (n below {t}: {n})"));
        }
        text.push('\n');
    }
    ws.record(&written)?;
    Ok((written, text))
}

fn score_stats(input: &Input) -> Result<ModelScoreStats> {
    ModelScoreStats::new(input.name.clone(), input.tensor.score_matrix().concat())
}

#[derive(Serialize)]
struct AucFile<'a> {
    provenance: Provenance,
    matrix: &'a AucMatrix,
}

#[derive(Serialize)]
struct AucRow<'a> {
    model_a: &'a str,
    model_b: &'a str,
    auc: f64,
}

pub fn orp_for(files: &[PathBuf], cfg: &OrpConfig) -> Result<(AucMatrix, Vec<OrpCurve>)> {
    if files.len() < 2 {
        return Err(Error::Precondition(format!(
            "ORP compares models: need at least 2 outcome files, got {}",
            files.len()
        )));
    }
    let inputs = load_inputs(files)?;
    let stats = inputs.iter().map(score_stats).collect::<Result<Vec<_>>>()?;
    let matrix = orp_auc_matrix(&stats, cfg.delta_max, cfg.steps)?;
    let mut curves = Vec::new();
    for a in 0..stats.len() {
        for b in a + 1..stats.len() {
            curves.push(orp_curve(&stats[a], &stats[b], cfg.delta_max, cfg.steps)?);
        }
    }
    Ok((matrix, curves))
}

pub fn cmd_orp(ws: &Workspace, files: &[PathBuf], cfg: &OrpConfig) -> Result<(Vec<PathBuf>, String)> {
    let (matrix, curves) = orp_for(files, cfg)?;
    let inputs = load_inputs(files)?;
    let prov = provenance(&inputs.iter().collect::<Vec<_>>())?;
    let mut written = Vec::new();
    for c in &curves {
        let base = Path::new("orp").join(format!("{}__{}", c.model_a, c.model_b));
        let csv = base.with_extension("csv");
        let json = base.with_extension("json");
        write_csv(ws.dir.join(&csv), &c.rows())?;
        write_json(ws.dir.join(&json), &c.sidecar())?;
        written.extend([csv, json]);
    }
    let mut rows = Vec::new();
    for (a, ma) in matrix.models.iter().enumerate() {
        for (b, mb) in matrix.models.iter().enumerate() {
            rows.push(AucRow {
                model_a: ma,
                model_b: mb,
                auc: matrix.auc[a][b],
            });
        }
    }
    let csv = PathBuf::from("orp/auc_matrix.csv");
    let json = PathBuf::from("orp/auc_matrix.json");
    write_csv(ws.dir.join(&csv), &rows)?;
    write_json(
        ws.dir.join(&json),
        &AucFile {
            provenance: prov,
            matrix: &matrix,
        },
    )?;
    written.extend([csv, json]);
    ws.record(&written)?;
    let mut text = String::new();
    for c in &curves {
        text.push_str(&format!("{} vs {}: auc {:.6}\n", c.model_a, c.model_b, c.auc));
    }
    text.push_str(&format!("mean auc {:.6}\n", matrix.mean_auc));
    Ok((written, text))
}

#[derive(Serialize)]
struct ReportEntry {
    input: String,
    backend_id: String,
    mode: String,
    repetition_design: String,
    plan_seed: u64,
    run_seed: u64,
    dims: [usize; 3],
    mean_score: f64,
    best_experiment_score: f64,
    worst_experiment_score: f64,
    variance_of_mean: Option<f64>,
    corr_instance: Option<f64>,
    corr_experiment: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    provenance: Provenance,
    entries: Vec<ReportEntry>,
    mean_auc: Option<f64>,
    /// Artifacts whose bytes no longer match the manifest.
    manifest_mismatches: Vec<String>,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    input: &'a str,
    mode: &'a str,
    mean_score: f64,
    best_experiment_score: f64,
    worst_experiment_score: f64,
    variance_of_mean: Option<f64>,
    corr_instance: Option<f64>,
    corr_experiment: Option<f64>,
}

pub fn cmd_report(
    ws: &Workspace,
    files: &[PathBuf],
    stats_cfg: &StatsConfig,
    orp_cfg: &OrpConfig,
    allow_mixed: bool,
) -> Result<(Vec<PathBuf>, String)> {
    let inputs = load_inputs(files)?;
    let digest = common_config_digest(
        inputs.iter().map(|i| (i.name.as_str(), i.tensor.meta.config_digest.as_deref())),
        allow_mixed,
    )?;
    let mut prov = Provenance::new(digest);
    for i in &inputs {
        prov.add_input(&i.path)?;
    }
    let mut entries = Vec::new();
    for i in &inputs {
        let t = &i.tensor;
        let matrix = t.score_matrix();
        let exp: Vec<f64> = matrix.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
        let decomposition = decompose_variance(t).ok();
        let seed = ws.seed.unwrap_or(t.meta.run_seed);
        let corr = correlation_report(t, stats_cfg.max_pairs, seed).ok();
        entries.push(ReportEntry {
            input: i.name.clone(),
            backend_id: t.meta.backend_id.clone(),
            mode: t.meta.mode.clone(),
            repetition_design: t.meta.repetition_design.clone(),
            plan_seed: t.meta.plan_seed,
            run_seed: t.meta.run_seed,
            dims: t.dims(),
            mean_score: exp.iter().sum::<f64>() / exp.len() as f64,
            best_experiment_score: exp.iter().cloned().fold(f64::MIN, f64::max),
            worst_experiment_score: exp.iter().cloned().fold(f64::MAX, f64::min),
            variance_of_mean: decomposition.map(|d| d.direct_estimate),
            corr_instance: corr.as_ref().map(|c| c.corr_instance),
            corr_experiment: corr.as_ref().and_then(|c| c.corr_experiment),
        });
    }
    let mean_auc = if inputs.len() >= 2 {
        match orp_for(files, orp_cfg) {
            Ok((m, _)) => Some(m.mean_auc),
            Err(e) => {
                warn!("ORP skipped: {e}");
                None
            }
        }
    } else {
        None
    };
    let manifest_mismatches = if ws.dir.join(MANIFEST_FILE).is_file() {
        let m = Manifest::open(&ws.dir, None, None)?;
        let bad = m.verify(&ws.dir)?;
        for b in &bad {
            warn!("{b} changed since it was recorded");
        }
        bad
    } else {
        vec![]
    };
    let rows: Vec<ReportRow<'_>> = entries
        .iter()
        .map(|e| ReportRow {
            input: &e.input,
            mode: &e.mode,
            mean_score: e.mean_score,
            best_experiment_score: e.best_experiment_score,
            worst_experiment_score: e.worst_experiment_score,
            variance_of_mean: e.variance_of_mean,
            corr_instance: e.corr_instance,
            corr_experiment: e.corr_experiment,
        })
        .collect();
    let csv = PathBuf::from("report.csv");
    write_csv(ws.dir.join(&csv), &rows)?;
    let mut text = String::new();
    for e in &entries {
        text.push_str(&format!(
            "{}: mean {:.4}, best {:.4}, worst {:.4}\n",
            e.input, e.mean_score, e.best_experiment_score, e.worst_experiment_score
        ));
    }
    if let Some(a) = mean_auc {
        text.push_str(&format!("mean pairwise ORP auc {a:.6}\n"));
    }
    let json = PathBuf::from("report.json");
    write_json(
        ws.dir.join(&json),
        &Report {
            provenance: prov,
            entries,
            mean_auc,
            manifest_mismatches,
        },
    )?;
    let written = vec![csv, json];
    ws.record(&written)?;
    Ok((written, text))
}

/// Writes a synthetic benchmark, factor space, model profiles and a config
/// that runs them, ready for `plan` / `run`.
pub fn cmd_synth(dir: &Path, seed: u64, instances: usize) -> Result<Vec<PathBuf>> {
    let spec = PopulationSpec {
        n_instances: instances,
        ..PopulationSpec::default()
    };
    let (dataset, space) = spec.dataset_and_space(seed)?;
    write_bytes(dir.join("dataset.jsonl"), dataset.to_jsonl().as_bytes())?;
    write_json(dir.join("factor_space.json"), &space)?;
    let mut profiles = Vec::new();
    for p in spec.profiles(seed) {
        let f = Path::new("profiles").join(format!("{}.json", file_safe(&p.model_id)));
        write_json(dir.join(&f), &p)?;
        profiles.push(f);
    }
    let config = RunConfig {
        dataset: "dataset.jsonl".into(),
        factor_space: "factor_space.json".into(),
        planner: ilr_core::PlannerConfig::new(ilr_core::PlanMode::Ilr, 20, seed),
        repetition_design: RepetitionDesign::Redraw { redraw_pins: false },
        backend: BackendConfig::Synthetic { profiles: profiles.clone() },
        repetitions: 15,
        run_seed: None,
        output_dir: "out".into(),
        stats: StatsConfig::default(),
        orp: OrpConfig::default(),
    };
    write_json(dir.join("config.json"), &config)?;
    let mut files = vec!["dataset.jsonl".into(), "factor_space.json".into(), "config.json".into()];
    files.extend(profiles);
    Ok(files)
}
