//! Datasets, factor spaces, factor settings and outcome tensors.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompt::{OptionLabelScheme, PromptFormat, TaskDescription};

/// One multiple-choice question with its reference answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub id: String,
    pub question: String,
    pub options: Vec<String>,
    pub answer_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Dataset("instance with empty id".into()));
        }
        if self.options.len() < 2 {
            return Err(Error::Dataset(format!(
                "instance `{}` has {} option(s), need at least 2",
                self.id,
                self.options.len()
            )));
        }
        if self.answer_index >= self.options.len() {
            return Err(Error::Dataset(format!(
                "instance `{}`: answer_index {} out of range for {} options",
                self.id,
                self.answer_index,
                self.options.len()
            )));
        }
        Ok(())
    }
}

/// An ordered, validated collection of instances with unique ids.
#[derive(Clone, Debug)]
pub struct Dataset {
    name: String,
    instances: Vec<Instance>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Dataset("dataset is empty".into()));
        }
        let mut index = HashMap::with_capacity(instances.len());
        for (pos, inst) in instances.iter().enumerate() {
            inst.validate()?;
            if index.insert(inst.id.clone(), pos).is_some() {
                return Err(Error::Dataset(format!("duplicate instance id `{}`", inst.id)));
            }
        }
        Ok(Dataset {
            name: name.into(),
            instances,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.position(id).map(|p| &self.instances[p])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Content hash of the dataset in its line-delimited serialized form.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        for inst in &self.instances {
            bytes.extend(serde_json::to_vec(inst).expect("instance serializes"));
            bytes.push(b'\n');
        }
        crate::report::sha256_hex(&bytes)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
            out.push('\n');
        }
        out
    }
}

/// Reads a line-delimited JSON dataset. The dataset name is the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut instances = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        instances.push(inst);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, instances)
}

/// The four random-factor dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    FewShotSet,
    OptionLabels,
    TaskDescription,
    PromptFormat,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::FewShotSet,
        Dimension::OptionLabels,
        Dimension::TaskDescription,
        Dimension::PromptFormat,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::FewShotSet => "few_shot_set",
            Dimension::OptionLabels => "option_labels",
            Dimension::TaskDescription => "task_description",
            Dimension::PromptFormat => "prompt_format",
        }
    }

    pub fn parse(s: &str) -> Option<Dimension> {
        Dimension::ALL.into_iter().find(|d| d.name() == s)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A few-shot exemplar set: references to dataset instances and/or inline
/// exemplars. An empty set is zero-shot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewShotSet {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplar_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplars: Vec<Instance>,
}

impl FewShotSet {
    /// Ids of every exemplar, referenced or inline.
    pub fn all_ids(&self) -> impl Iterator<Item = &str> {
        self.exemplar_ids
            .iter()
            .map(String::as_str)
            .chain(self.exemplars.iter().map(|e| e.id.as_str()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.all_ids().any(|x| x == id)
    }
}

/// One concrete value of a random factor.
#[derive(Clone, Copy, Debug)]
pub enum FactorValue<'a> {
    FewShotSet(&'a FewShotSet),
    OptionLabels(&'a OptionLabelScheme),
    TaskDescription(&'a TaskDescription),
    PromptFormat(&'a PromptFormat),
}

impl FactorValue<'_> {
    pub fn dimension(&self) -> Dimension {
        match self {
            FactorValue::FewShotSet(_) => Dimension::FewShotSet,
            FactorValue::OptionLabels(_) => Dimension::OptionLabels,
            FactorValue::TaskDescription(_) => Dimension::TaskDescription,
            FactorValue::PromptFormat(_) => Dimension::PromptFormat,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            FactorValue::FewShotSet(v) => &v.id,
            FactorValue::OptionLabels(v) => &v.id,
            FactorValue::TaskDescription(v) => &v.id,
            FactorValue::PromptFormat(v) => &v.id,
        }
    }
}

/// Candidate pools for each dimension. The joint factor distribution is the
/// product of independent uniform draws over these pools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpace {
    pub few_shot_sets: Vec<FewShotSet>,
    pub option_label_schemes: Vec<OptionLabelScheme>,
    pub task_descriptions: Vec<TaskDescription>,
    pub prompt_formats: Vec<PromptFormat>,
}

impl FactorSpace {
    pub fn validate(&self) -> Result<()> {
        for dim in Dimension::ALL {
            let len = self.pool_len(dim);
            if len == 0 {
                return Err(Error::FactorSpace(format!("empty {dim} pool")));
            }
            if len > u32::MAX as usize {
                return Err(Error::FactorSpace(format!("{dim} pool too large")));
            }
            let mut seen = HashSet::new();
            for i in 0..len {
                let id = self.value_id(dim, i);
                if id.is_empty() {
                    return Err(Error::FactorSpace(format!("{dim} value with empty id")));
                }
                if !seen.insert(id) {
                    return Err(Error::FactorSpace(format!("duplicate {dim} id `{id}`")));
                }
            }
        }
        for set in &self.few_shot_sets {
            let mut seen = HashSet::new();
            for id in set.all_ids() {
                if !seen.insert(id) {
                    return Err(Error::FactorSpace(format!(
                        "few-shot set `{}` lists exemplar `{id}` twice",
                        set.id
                    )));
                }
            }
            for ex in &set.exemplars {
                ex.validate()
                    .map_err(|e| Error::FactorSpace(format!("few-shot set `{}`: {e}", set.id)))?;
            }
        }
        for scheme in &self.option_label_schemes {
            scheme.validate()?;
        }
        for fmt in &self.prompt_formats {
            fmt.validate()?;
        }
        Ok(())
    }

    pub fn pool_len(&self, dim: Dimension) -> usize {
        match dim {
            Dimension::FewShotSet => self.few_shot_sets.len(),
            Dimension::OptionLabels => self.option_label_schemes.len(),
            Dimension::TaskDescription => self.task_descriptions.len(),
            Dimension::PromptFormat => self.prompt_formats.len(),
        }
    }

    pub fn pool_sizes(&self) -> [usize; 4] {
        Dimension::ALL.map(|d| self.pool_len(d))
    }

    /// Number of distinct factor settings.
    pub fn setting_count(&self) -> u128 {
        self.pool_sizes().iter().map(|&n| n as u128).product()
    }

    pub fn value(&self, dim: Dimension, idx: usize) -> FactorValue<'_> {
        match dim {
            Dimension::FewShotSet => FactorValue::FewShotSet(&self.few_shot_sets[idx]),
            Dimension::OptionLabels => FactorValue::OptionLabels(&self.option_label_schemes[idx]),
            Dimension::TaskDescription => FactorValue::TaskDescription(&self.task_descriptions[idx]),
            Dimension::PromptFormat => FactorValue::PromptFormat(&self.prompt_formats[idx]),
        }
    }

    pub fn value_id(&self, dim: Dimension, idx: usize) -> &str {
        match dim {
            Dimension::FewShotSet => &self.few_shot_sets[idx].id,
            Dimension::OptionLabels => &self.option_label_schemes[idx].id,
            Dimension::TaskDescription => &self.task_descriptions[idx].id,
            Dimension::PromptFormat => &self.prompt_formats[idx].id,
        }
    }

    pub fn find(&self, dim: Dimension, id: &str) -> Option<usize> {
        (0..self.pool_len(dim)).find(|&i| self.value_id(dim, i) == id)
    }

    pub fn find_or_err(&self, dim: Dimension, id: &str) -> Result<usize> {
        self.find(dim, id).ok_or_else(|| Error::UnknownValue {
            dimension: dim.name().into(),
            id: id.into(),
        })
    }

    /// Content hash of the canonical serialized space.
    pub fn digest(&self) -> String {
        crate::report::sha256_hex(&serde_json::to_vec(self).expect("factor space serializes"))
    }
}

pub fn load_factor_space(path: impl AsRef<Path>) -> Result<FactorSpace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let space: FactorSpace = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    space.validate()?;
    Ok(space)
}

/// One chosen value per dimension, stored as pool indices of a [`FactorSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorSetting([u32; 4]);

impl FactorSetting {
    pub fn new(indices: [usize; 4]) -> Self {
        FactorSetting(indices.map(|i| i as u32))
    }

    pub fn get(&self, dim: Dimension) -> usize {
        self.0[dim.index()] as usize
    }

    pub fn set(&mut self, dim: Dimension, idx: usize) {
        self.0[dim.index()] = idx as u32;
    }

    pub fn indices(&self) -> [usize; 4] {
        self.0.map(|i| i as usize)
    }

    pub fn from_ids(space: &FactorSpace, ids: &SettingIds) -> Result<Self> {
        let mut s = FactorSetting::default();
        for dim in Dimension::ALL {
            s.set(dim, space.find_or_err(dim, ids.get(dim))?);
        }
        Ok(s)
    }

    pub fn to_ids(&self, space: &FactorSpace) -> SettingIds {
        SettingIds {
            few_shot_set: space.value_id(Dimension::FewShotSet, self.get(Dimension::FewShotSet)).into(),
            option_labels: space
                .value_id(Dimension::OptionLabels, self.get(Dimension::OptionLabels))
                .into(),
            task_description: space
                .value_id(Dimension::TaskDescription, self.get(Dimension::TaskDescription))
                .into(),
            prompt_format: space
                .value_id(Dimension::PromptFormat, self.get(Dimension::PromptFormat))
                .into(),
        }
    }

    pub fn is_valid_in(&self, space: &FactorSpace) -> bool {
        Dimension::ALL.iter().all(|&d| self.get(d) < space.pool_len(d))
    }
}

impl Default for FactorSetting {
    fn default() -> Self {
        FactorSetting([0; 4])
    }
}

/// Id form of a [`FactorSetting`], as written in plan files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingIds {
    pub few_shot_set: String,
    pub option_labels: String,
    pub task_description: String,
    pub prompt_format: String,
}

impl SettingIds {
    pub fn get(&self, dim: Dimension) -> &str {
        match dim {
            Dimension::FewShotSet => &self.few_shot_set,
            Dimension::OptionLabels => &self.option_labels,
            Dimension::TaskDescription => &self.task_description,
            Dimension::PromptFormat => &self.prompt_format,
        }
    }
}

/// Provenance carried by every outcome file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeMeta {
    pub plan_seed: u64,
    pub mode: String,
    pub repetition_design: String,
    pub backend_id: String,
    pub run_seed: u64,
    pub dataset: String,
    pub dataset_digest: String,
    pub factor_space_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub tool_version: String,
}

/// Binary correctness indexed by (experiment, repetition, instance), row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeTensor {
    pub meta: OutcomeMeta,
    dims: [usize; 3],
    values: Vec<u8>,
}

impl OutcomeTensor {
    pub fn new(meta: OutcomeMeta, dims: [usize; 3], values: Vec<u8>) -> Result<Self> {
        let t = OutcomeTensor { meta, dims, values };
        t.validate()?;
        Ok(t)
    }

    /// Builds a tensor from `f(experiment, repetition, instance)`.
    pub fn from_fn(meta: OutcomeMeta, dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> u8) -> Result<Self> {
        let [n, r, m] = dims;
        let mut values = Vec::with_capacity(n * r * m);
        for i in 0..n {
            for rep in 0..r {
                for k in 0..m {
                    values.push(f(i, rep, k));
                }
            }
        }
        OutcomeTensor::new(meta, dims, values)
    }

    pub fn validate(&self) -> Result<()> {
        let [n, r, m] = self.dims;
        if n == 0 || r == 0 || m == 0 {
            return Err(Error::Outcome(format!("zero-sized dims {:?}", self.dims)));
        }
        let expected = n
            .checked_mul(r)
            .and_then(|x| x.checked_mul(m))
            .ok_or_else(|| Error::Outcome("dims overflow".into()))?;
        if self.values.len() != expected {
            return Err(Error::Outcome(format!(
                "dims {:?} imply {expected} values, found {}",
                self.dims,
                self.values.len()
            )));
        }
        if let Some(pos) = self.values.iter().position(|&v| v > 1) {
            return Err(Error::Outcome(format!(
                "value {} at position {pos} is not 0 or 1",
                self.values[pos]
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_experiments(&self) -> usize {
        self.dims[0]
    }

    pub fn n_repetitions(&self) -> usize {
        self.dims[1]
    }

    pub fn n_instances(&self) -> usize {
        self.dims[2]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, experiment: usize, repetition: usize, instance: usize) -> u8 {
        let [_, r, m] = self.dims;
        self.values[(experiment * r + repetition) * m + instance]
    }

    /// Correctness of every instance for one (experiment, repetition).
    pub fn row(&self, experiment: usize, repetition: usize) -> &[u8] {
        let [_, r, m] = self.dims;
        let start = (experiment * r + repetition) * m;
        &self.values[start..start + m]
    }

    /// Score of one experiment in one repetition (mean over instances).
    pub fn score(&self, experiment: usize, repetition: usize) -> f64 {
        let row = self.row(experiment, repetition);
        row.iter().map(|&v| v as f64).sum::<f64>() / row.len() as f64
    }

    /// Scores as an (experiment × repetition) matrix.
    pub fn score_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.dims[0])
            .map(|i| (0..self.dims[1]).map(|rep| self.score(i, rep)).collect())
            .collect()
    }

    /// Per-instance mean correctness of one experiment, averaged over repetitions.
    pub fn instance_means(&self, experiment: usize) -> Vec<f64> {
        let [_, r, m] = self.dims;
        let mut out = vec![0.0; m];
        for rep in 0..r {
            for (o, &v) in out.iter_mut().zip(self.row(experiment, rep)) {
                *o += v as f64;
            }
        }
        out.iter_mut().for_each(|o| *o /= r as f64);
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("outcome tensor serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let t: OutcomeTensor = serde_json::from_slice(bytes)
            .map_err(|e| Error::Outcome(format!("corrupted outcome file: {e}")))?;
        t.validate()?;
        Ok(t)
    }
}

pub fn save_outcomes(tensor: &OutcomeTensor, path: impl AsRef<Path>) -> Result<()> {
    tensor.validate()?;
    crate::report::write_bytes(path, &tensor.to_json())
}

pub fn load_outcomes(path: impl AsRef<Path>) -> Result<OutcomeTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    OutcomeTensor::from_json(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    pub(crate) fn meta() -> OutcomeMeta {
        OutcomeMeta {
            plan_seed: 1,
            mode: "ilr".into(),
            repetition_design: "shared".into(),
            backend_id: "test".into(),
            run_seed: 2,
            dataset: "d".into(),
            dataset_digest: "00".into(),
            factor_space_digest: "ff".into(),
            config_digest: None,
            tool_version: "0".into(),
        }
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_record_dataset() {
        let f = write_tmp(r#"{"id":"q1","question":"2+2?","options":["3","4"],"answer_index":1}"#);
        let ds = load_dataset(f.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.instances()[0].options[1], "4");
    }

    #[test]
    fn answer_index_out_of_range_names_the_id() {
        let f = write_tmp(
            r#"{"id":"bad-7","question":"q","options":["a","b","c","d"],"answer_index":5}"#,
        );
        let err = load_dataset(f.path()).unwrap_err().to_string();
        assert!(err.contains("bad-7"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = r#"{"id":"x","question":"q","options":["a","b"],"answer_index":0}"#;
        let f = write_tmp(&format!("{line}\n{line}\n"));
        assert!(matches!(load_dataset(f.path()), Err(Error::Dataset(_))));
    }

    #[test]
    fn parse_error_reports_line() {
        let good = r#"{"id":"x","question":"q","options":["a","b"],"answer_index":0}"#;
        let f = write_tmp(&format!("{good}\n{{not json\n"));
        match load_dataset(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dataset_order_is_preserved() {
        let lines: String = (0..5)
            .rev()
            .map(|i| format!(r#"{{"id":"i{i}","question":"q","options":["a","b"],"answer_index":0}}"#) + "\n")
            .collect();
        let f = write_tmp(&lines);
        let ds = load_dataset(f.path()).unwrap();
        let ids: Vec<_> = ds.instances().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["i4", "i3", "i2", "i1", "i0"]);
    }

    fn space_json(few_shot_ids: &[&str]) -> String {
        let fs: Vec<String> = few_shot_ids.iter().map(|id| format!(r#"{{"id":"{id}"}}"#)).collect();
        format!(
            r#"{{"few_shot_sets":[{}],
                "option_label_schemes":[{{"id":"abcd","labels":["A.","B.","C.","D."]}}],
                "task_descriptions":[{{"id":"t0","intro":"Choose.","cot_cue":"Think."}}],
                "prompt_formats":[{{"id":"p0","question_prefix":"Question:","option_prefix":"Options:","answer_prefix":"The solution is:","separator":"\n\n"}}]}}"#,
            fs.join(",")
        )
    }

    #[test]
    fn degenerate_space_has_one_setting() {
        let f = write_tmp(&space_json(&["zero"]));
        let space = load_factor_space(f.path()).unwrap();
        assert_eq!(space.setting_count(), 1);
    }

    #[test]
    fn duplicate_value_id_rejected() {
        let f = write_tmp(&space_json(&["a", "a"]));
        let err = load_factor_space(f.path()).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn empty_pool_rejected() {
        let f = write_tmp(&space_json(&[]));
        assert!(load_factor_space(f.path()).is_err());
    }

    #[test]
    fn eight_few_shot_variants() {
        let ids: Vec<String> = (0..8).map(|i| format!("fs{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let f = write_tmp(&space_json(&refs));
        let space = load_factor_space(f.path()).unwrap();
        assert_eq!(space.pool_sizes(), [8, 1, 1, 1]);
        assert_eq!(space.setting_count(), 8);
    }

    #[test]
    fn tensor_round_trip_2x2x2() {
        let t = OutcomeTensor::new(meta(), [2, 2, 2], vec![0, 1, 1, 0, 1, 1, 0, 0]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_outcomes(&t, f.path()).unwrap();
        let back = load_outcomes(f.path()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json(), std::fs::read(f.path()).unwrap());
    }

    #[test]
    fn tensor_with_value_two_rejected() {
        let t = OutcomeTensor::new(meta(), [1, 1, 2], vec![0, 1]).unwrap();
        let json = String::from_utf8(t.to_json()).unwrap().replace("[0,1]", "[0,2]");
        let err = OutcomeTensor::from_json(json.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("not 0 or 1"), "{err}");
    }

    #[test]
    fn tensor_dim_mismatch_rejected() {
        assert!(OutcomeTensor::new(meta(), [2, 2, 2], vec![0; 7]).is_err());
        let t = OutcomeTensor::new(meta(), [1, 1, 2], vec![0, 1]).unwrap();
        let json = String::from_utf8(t.to_json()).unwrap().replace("[1,1,2]", "[1,1,3]");
        assert!(OutcomeTensor::from_json(json.as_bytes()).is_err());
    }

    #[test]
    fn scores_and_rows() {
        let t = OutcomeTensor::from_fn(meta(), [2, 3, 4], |i, r, k| ((i + r + k) % 2) as u8).unwrap();
        assert_eq!(t.row(1, 2), &[1, 0, 1, 0]);
        assert_eq!(t.score(0, 0), 0.5);
        assert_eq!(t.score_matrix().len(), 2);
    }
}
