//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use ilr_core::model::{Dimension, FewShotSet, Instance, OutcomeMeta, OutcomeTensor};
use ilr_core::orp::{orp_monte_carlo, orp_point};
use ilr_core::prompt::{parse_answer, render_prompt, OptionLabelScheme, PromptFormat, TaskDescription};
use ilr_core::rng::stream;
use ilr_core::stats::{decompose_variance, mean_form, paired_t_test, special};
use ilr_core::study::{auc_study, correlation_study, curve_study, spread_study, PopulationSpec};
use ilr_core::{Dataset, FactorSetting, FactorSpace};

const STUDY_SEED: u64 = 7;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    if elapsed <= Duration::from_secs(limit_secs) {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit_secs} s"))
    }
}

fn meta() -> OutcomeMeta {
    OutcomeMeta {
        plan_seed: 0,
        mode: "ilr".into(),
        repetition_design: "shared".into(),
        backend_id: "synthetic:acceptance".into(),
        run_seed: 0,
        dataset: "acceptance".into(),
        dataset_digest: String::new(),
        factor_space_digest: String::new(),
        config_digest: None,
        tool_version: String::new(),
    }
}

/// Unbiased variance over repetitions of the per-repetition mean score.
fn direct_variance_of_mean(scores: &[Vec<f64>]) -> f64 {
    let (n, r) = (scores.len(), scores[0].len());
    let avg: Vec<f64> = (0..r).map(|j| scores.iter().map(|s| s[j]).sum::<f64>() / n as f64).collect();
    let m = avg.iter().sum::<f64>() / r as f64;
    avg.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1) as f64
}

/// Relative tolerance, with an absolute floor for quantities that are zero
/// in exact arithmetic.
fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(a.abs()) || (a - b).abs() <= 1e-15
}

fn decomposition_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(&[1, 1]);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..=6);
        let r = rng.random_range(2..=10);
        let m = rng.random_range(1..=30);
        // correlated cells: a per-(experiment, repetition) shift on top of
        // per-instance base rates
        let base: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
        let shift: Vec<f64> = (0..n * r).map(|_| rng.random_range(-0.3..0.3)).collect();
        let values: Vec<u8> = (0..n * r * m)
            .map(|idx| {
                let p = (base[idx % m] + shift[idx / m]).clamp(0.0, 1.0);
                rng.random_bool(p) as u8
            })
            .collect();
        let t = OutcomeTensor::new(meta(), [n, r, m], values).map_err(|e| e.to_string())?;
        let d = decompose_variance(&t).map_err(|e| e.to_string())?;
        let direct = direct_variance_of_mean(&t.score_matrix());
        if !close(d.total, direct, 1e-10) {
            return Err(format!("case {case}: terms sum to {} but direct variance is {direct}", d.total));
        }
        // a mean score constant over repetitions leaves only rounding noise
        if direct > 1e-12 {
            worst = worst.max((d.total - direct).abs() / direct.abs());
        }
    }
    within(start.elapsed(), 5)?;
    Ok(format!("1000 tensors, worst relative gap {worst:.1e}, {:.2?}", start.elapsed()))
}

fn mean_form_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(&[2, 1]);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..=20);
        let r = rng.random_range(2..=30);
        let common: Vec<f64> = (0..r).map(|_| rng.random_range(-0.05..0.05)).collect();
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..r).map(|j| 0.6 + common[j] + rng.random_range(-0.05..0.05)).collect())
            .collect();
        let f = mean_form(&scores).map_err(|e| e.to_string())?;
        let direct = direct_variance_of_mean(&scores);
        if !close(f.mean_form, direct, 1e-10) {
            return Err(format!("case {case}: mean form {} vs direct {direct}", f.mean_form));
        }
        worst = worst.max((f.mean_form - direct).abs() / direct.abs());
    }
    within(start.elapsed(), 1)?;
    Ok(format!("1000 matrices, worst relative gap {worst:.1e}, {:.2?}", start.elapsed()))
}

fn orp_closed_form_vs_monte_carlo() -> Outcome {
    let start = Instant::now();
    let deltas = [0.0, 0.005, 0.01, 0.02, 0.05];
    let sigmas = [0.005, 0.01, 0.02, 0.03, 0.05];
    let rhos = [-0.9, -0.4, 0.0, 0.4, 0.9];
    let mut worst = 0.0f64;
    for &sa in &sigmas {
        for &sb in &sigmas {
            for &rho in &rhos {
                let mut line = Vec::new();
                for &d in &deltas {
                    let closed = orp_point(d, sa, sb, rho).map_err(|e| e.to_string())?.value;
                    let mc = orp_monte_carlo(d, sa, sb, rho, 1_000_000, 11).map_err(|e| e.to_string())?;
                    let gap = (closed - mc).abs();
                    worst = worst.max(gap);
                    if gap >= 0.005 {
                        return Err(format!("delta {d} sa {sa} sb {sb} rho {rho}: closed {closed} mc {mc}"));
                    }
                    line.push(closed);
                }
                if line[0] != 0.5 {
                    return Err(format!("ORP(0) = {} for sa {sa} sb {sb} rho {rho}", line[0]));
                }
                if line.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(format!("not decreasing in |delta| for sa {sa} sb {sb} rho {rho}: {line:?}"));
                }
                let neg: Vec<f64> = deltas
                    .iter()
                    .map(|&d| orp_point(-d, sa, sb, rho).map(|p| p.value))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                if neg != line {
                    return Err("ORP is not symmetric in delta".into());
                }
            }
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("625 grid points, worst |closed - mc| {worst:.4}, {:.2?}", start.elapsed()))
}

fn table_one() -> Outcome {
    let start = Instant::now();
    let pop = PopulationSpec::default().build(STUDY_SEED).map_err(|e| e.to_string())?;
    let spread = spread_study(&pop, 8, 50, STUDY_SEED).map_err(|e| e.to_string())?;
    let c = correlation_study(&pop, 20, 30, STUDY_SEED).map_err(|e| e.to_string())?;
    within(start.elapsed(), 30)?;
    let (f, i) = (&c.fixed, &c.ilr);
    let (fe, ie) = match (f.corr_experiment, i.corr_experiment) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err("experiment correlation undefined".into()),
    };
    let var_change = (i.var_instance - f.var_instance).abs() / f.var_instance;
    let detail = format!(
        "spread {spread:.4}; corr_instance {:.4} -> {:.4}; corr_experiment {fe:.4} -> {ie:.4}; \
         var_instance {:.4} -> {:.4} ({:.1}%); {:.2?}",
        f.corr_instance,
        i.corr_instance,
        f.var_instance,
        i.var_instance,
        100.0 * var_change,
        start.elapsed()
    );
    check(
        (0.10..=0.12).contains(&spread)
            && i.corr_instance < f.corr_instance
            && ie < fe
            && f.corr_instance >= 2.0 * i.corr_instance
            && var_change < 0.10,
        detail,
    )
}

fn figure_five() -> Outcome {
    let start = Instant::now();
    let target = 0.03;
    let pop = PopulationSpec::default().build(STUDY_SEED).map_err(|e| e.to_string())?;
    let c = curve_study(&pop, 20, 15, 15, 30, STUDY_SEED).map_err(|e| e.to_string())?;
    within(start.elapsed(), 60)?;
    let base = c.single_factor.n_to_target(target);
    let ilr = c.ilr.n_to_target(target);
    let detail = format!(
        "n below {target}: single-factor {base:?}, multi-factor {:?}, ILR {ilr:?}; {:.2?}",
        c.multi_factor.n_to_target(target),
        start.elapsed()
    );
    match (base, ilr) {
        (Some(b), Some(i)) => check(i as f64 <= 0.6 * b as f64, detail),
        _ => Err(detail),
    }
}

fn figure_six() -> Outcome {
    let start = Instant::now();
    let pop = PopulationSpec::default().build(STUDY_SEED).map_err(|e| e.to_string())?;
    let mut sets: Vec<Vec<Dimension>> = Dimension::ALL.iter().map(|&d| vec![d]).collect();
    sets.push(Dimension::ALL.to_vec());
    let mut parts = Vec::new();
    let mut ok = true;
    for dims in &sets {
        let a = auc_study(&pop, dims, 20, 50, STUDY_SEED).map_err(|e| e.to_string())?;
        ok &= a.ilr_mean_auc < a.fixed_mean_auc;
        let label = if dims.len() == 4 {
            "all".to_string()
        } else {
            dims[0].name().to_string()
        };
        parts.push(format!("{label} {:.4} -> {:.4}", a.fixed_mean_auc, a.ilr_mean_auc));
    }
    within(start.elapsed(), 120)?;
    check(ok, format!("mean AUC {}; {:.2?}", parts.join(", "), start.elapsed()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

const FAMILIES: [[&str; 6]; 4] = [
    ["A.", "B.", "C.", "D.", "E.", "F."],
    ["(1)", "(2)", "(3)", "(4)", "(5)", "(6)"],
    ["a)", "b)", "c)", "d)", "e)", "f)"],
    ["I.", "II.", "III.", "IV.", "V.", "VI."],
];

fn prompt_algebra() -> Outcome {
    let start = Instant::now();
    let format = PromptFormat {
        id: "fmt".into(),
        question_prefix: "Question:".into(),
        option_prefix: "Options:".into(),
        answer_prefix: "Answer:".into(),
        separator: "\n".into(),
    };
    let (mut graded, mut correct) = (0usize, 0usize);
    for n in 2..=6 {
        let instances: Vec<Instance> = (0..n)
            .map(|a| Instance {
                id: format!("q{a}"),
                question: format!("Which option is number {a}?"),
                options: (0..n).map(|o| format!("option text {o}")).collect(),
                answer_index: a,
                rationale: None,
            })
            .collect();
        let dataset = Dataset::new("algebra", instances).map_err(|e| e.to_string())?;
        for (f, family) in FAMILIES.iter().enumerate() {
            let schemes: Vec<OptionLabelScheme> = permutations(n)
                .into_iter()
                .enumerate()
                .map(|(i, p)| OptionLabelScheme::new(format!("s{f}-{i}"), &family[..n]).with_permutation(p))
                .collect();
            let space = FactorSpace {
                few_shot_sets: vec![FewShotSet {
                    id: "none".into(),
                    exemplar_ids: vec![],
                    exemplars: vec![],
                }],
                option_label_schemes: schemes,
                task_descriptions: vec![TaskDescription {
                    id: "t".into(),
                    intro: "Pick one.".into(),
                    cot_cue: String::new(),
                }],
                prompt_formats: vec![format.clone()],
            };
            for (s, scheme) in space.option_label_schemes.iter().enumerate() {
                for (a, inst) in dataset.instances().iter().enumerate() {
                    let prompt = render_prompt(inst, &FactorSetting::new([0, s, 0, 0]), &space, &dataset)
                        .map_err(|e| e.to_string())?;
                    if parse_answer(&prompt.answer_key, scheme, n, None) != Some(a) {
                        return Err(format!("key {} under {} does not round-trip", prompt.answer_key, scheme.id));
                    }
                    // the oracle model answers with the key after the cue
                    let reply = format!("{} {}", format.answer_prefix, prompt.answer_key);
                    graded += 1;
                    correct += (parse_answer(&reply, scheme, n, Some(&format.answer_prefix)) == Some(a)) as usize;
                }
            }
        }
    }
    within(start.elapsed(), 5)?;
    let score = correct as f64 / graded as f64;
    check(
        score == 1.0,
        format!("{graded} prompts, oracle score {score}, {:.2?}", start.elapsed()),
    )
}

/// Phi from its everywhere-convergent series
/// 0.5 + phi(z) * sum z^(2k+1) / (1*3*...*(2k+1)).
fn phi_oracle(z: f64) -> f64 {
    let x = z.abs();
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    while term > sum * 1e-18 {
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    let tail = (-0.5 * x * x).exp() / (2.0 * PI).sqrt() * sum;
    if z >= 0.0 {
        0.5 + tail
    } else {
        0.5 - tail
    }
}

/// Student-t CDF for integer df from the closed-form finite sums in
/// theta = atan(t / sqrt(df)).
fn t_cdf_oracle(t: f64, df: u32) -> f64 {
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let (s, c) = (theta.sin(), theta.cos());
    let a = if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut j = 3;
            while j < df {
                term *= c * c * (j - 1) as f64 / j as f64;
                sum += term;
                j += 2;
            }
        }
        2.0 / PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut j = 2;
        while j < df {
            term *= c * c * (j - 1) as f64 / j as f64;
            sum += term;
            j += 2;
        }
        s * sum
    };
    if t >= 0.0 {
        0.5 + a / 2.0
    } else {
        0.5 - a / 2.0
    }
}

fn special_functions() -> Outcome {
    let mut worst_phi = 0.0f64;
    for i in 0..=1600 {
        let z = -8.0 + i as f64 * 0.01;
        worst_phi = worst_phi.max((special::phi(z) - phi_oracle(z)).abs());
    }
    let mut worst_t = 0.0f64;
    for df in 1..=200u32 {
        for i in 0..=200 {
            let t = -10.0 + i as f64 * 0.1;
            worst_t = worst_t.max((special::student_t_cdf(t, df as f64) - t_cdf_oracle(t, df)).abs());
        }
    }
    let d = [1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
    let e = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
    let tt = paired_t_test(&d, &e).map_err(|e| e.to_string())?;
    check(
        worst_phi < 1e-8
            && worst_t < 1e-8
            && (tt.t_statistic - 1.9640).abs() < 1e-3
            && (tt.p_value - 0.0811).abs() < 1e-3,
        format!(
            "max |Phi err| {worst_phi:.1e}, max |t cdf err| {worst_t:.1e}, worked t {:.4} p {:.4}",
            tt.t_statistic, tt.p_value
        ),
    )
}

fn ilr(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ilr"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("ilr {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    ilr(root, &["synth", "--out", "inputs", "--seed", "5", "--instances", "100"])?;
    for out in ["first", "second"] {
        let out_dir = root.join(out);
        let out_dir = out_dir.to_str().unwrap();
        for cmd in ["plan", "run", "stats", "orp", "curve", "report"] {
            ilr(root, &["--config", "inputs/config.json", "--out", out_dir, cmd])?;
        }
    }
    let (a, b) = (tree(&root.join("first")), tree(&root.join("second")));
    let differing: Vec<_> = a.iter().filter(|(p, bytes)| b.get(*p) != Some(*bytes)).map(|(p, _)| p).collect();
    let has = |prefix: &str| a.keys().any(|p| p.starts_with(prefix));
    check(
        a.len() == b.len() && differing.is_empty() && has("plans") && has("outcomes") && has("report.json"),
        format!("{} artifacts compared, {} differ {:?}", a.len(), differing.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("decomposition identity", decomposition_identity),
        ("mean-form identity", mean_form_identity),
        ("ORP closed form vs Monte Carlo", orp_closed_form_vs_monte_carlo),
        ("correlation table, fixed vs ILR", table_one),
        ("variance-vs-n curves", figure_five),
        ("pairwise ORP AUC per dimension", figure_six),
        ("prompt algebra", prompt_algebra),
        ("special functions and t-test", special_functions),
        ("pipeline determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
