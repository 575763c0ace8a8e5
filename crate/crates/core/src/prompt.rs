//! Prompt rendering and answer extraction.
//!
//! A prompt is laid out as: task introduction, one block per few-shot
//! exemplar (question, options, chain-of-thought cue, answer), then the target
//! question, its options, the cue and the bare answer prefix. Blocks are
//! joined with the prompt format's separator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Dimension, FactorSetting, FactorSpace, Instance};

/// Question, option and answer prefixes plus the block separator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptFormat {
    pub id: String,
    pub question_prefix: String,
    pub option_prefix: String,
    pub answer_prefix: String,
    pub separator: String,
}

impl PromptFormat {
    pub fn validate(&self) -> Result<()> {
        if self.answer_prefix.trim().is_empty() {
            return Err(Error::FactorSpace(format!(
                "prompt format `{}` has an empty answer prefix",
                self.id
            )));
        }
        Ok(())
    }
}

/// Option labels and an optional reordering of option positions.
///
/// With a permutation, displayed slot `j` shows original option
/// `permutation[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionLabelScheme {
    pub id: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
}

impl OptionLabelScheme {
    pub fn new(id: impl Into<String>, labels: &[&str]) -> Self {
        OptionLabelScheme {
            id: id.into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            permutation: None,
        }
    }

    pub fn with_permutation(mut self, permutation: Vec<usize>) -> Self {
        self.permutation = Some(permutation);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::FactorSpace(format!("label scheme `{}` has no labels", self.id)));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::FactorSpace(format!("label scheme `{}` has an empty label", self.id)));
            }
            if self.labels[..i].contains(l) {
                return Err(Error::FactorSpace(format!(
                    "label scheme `{}` repeats label `{l}`",
                    self.id
                )));
            }
        }
        if let Some(p) = &self.permutation {
            check_bijection(p)?;
            if p.len() > self.labels.len() {
                return Err(Error::FactorSpace(format!(
                    "label scheme `{}` permutes {} options but has {} labels",
                    self.id,
                    p.len(),
                    self.labels.len()
                )));
            }
        }
        Ok(())
    }

    /// Original option index shown in slot `slot`.
    fn original_at(&self, slot: usize) -> usize {
        self.permutation.as_ref().map_or(slot, |p| p[slot])
    }
}

fn check_bijection(p: &[usize]) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || std::mem::replace(&mut seen[x], true) {
            return Err(Error::Prompt(format!("permutation {p:?} is not a bijection")));
        }
    }
    Ok(())
}

/// Task introduction and chain-of-thought cue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDescription {
    pub id: String,
    pub intro: String,
    pub cot_cue: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub answer_key: String,
    pub instance_id: String,
    #[serde(skip)]
    pub setting: FactorSetting,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledOption {
    pub label: String,
    pub text: String,
}

/// Applies a label scheme to an option list. Returns the options in display
/// order and the label of the slot that holds the originally correct option.
pub fn remap_options(
    options: &[String],
    answer_index: usize,
    scheme: &OptionLabelScheme,
) -> Result<(Vec<LabeledOption>, String)> {
    let k = options.len();
    if scheme.labels.len() < k {
        return Err(Error::Prompt(format!(
            "label scheme `{}` has {} labels for {k} options",
            scheme.id,
            scheme.labels.len()
        )));
    }
    if answer_index >= k {
        return Err(Error::Prompt(format!("answer_index {answer_index} out of range for {k} options")));
    }
    if let Some(p) = &scheme.permutation {
        check_bijection(p)?;
        if p.len() != k {
            return Err(Error::Prompt(format!(
                "label scheme `{}` permutes {} options, instance has {k}",
                scheme.id,
                p.len()
            )));
        }
    }
    let mut key = None;
    let labeled = (0..k)
        .map(|slot| {
            let orig = scheme.original_at(slot);
            if orig == answer_index {
                key = Some(scheme.labels[slot].clone());
            }
            LabeledOption {
                label: scheme.labels[slot].clone(),
                text: options[orig].clone(),
            }
        })
        .collect();
    Ok((labeled, key.expect("bijection covers the answer")))
}

fn push_block(text: &mut String, sep: &str, block: &str) {
    if block.is_empty() {
        return;
    }
    if !text.is_empty() {
        text.push_str(sep);
    }
    text.push_str(block);
}

fn push_question(
    text: &mut String,
    format: &PromptFormat,
    inst: &Instance,
    scheme: &OptionLabelScheme,
) -> Result<String> {
    let sep = &format.separator;
    let (labeled, key) = remap_options(&inst.options, inst.answer_index, scheme)?;
    push_block(text, sep, &format.question_prefix);
    push_block(text, sep, &inst.question);
    push_block(text, sep, &format.option_prefix);
    for opt in &labeled {
        push_block(text, sep, &format!("{} {}", opt.label, opt.text));
    }
    Ok(key)
}

/// Renders `instance` under `setting`. Referenced few-shot exemplars are
/// resolved in `dataset`.
pub fn render_prompt(
    instance: &Instance,
    setting: &FactorSetting,
    space: &FactorSpace,
    dataset: &Dataset,
) -> Result<RenderedPrompt> {
    if !setting.is_valid_in(space) {
        return Err(Error::Prompt("setting does not belong to the factor space".into()));
    }
    let shots = &space.few_shot_sets[setting.get(Dimension::FewShotSet)];
    let scheme = &space.option_label_schemes[setting.get(Dimension::OptionLabels)];
    let task = &space.task_descriptions[setting.get(Dimension::TaskDescription)];
    let format = &space.prompt_formats[setting.get(Dimension::PromptFormat)];
    let sep = &format.separator;

    let mut exemplars: Vec<&Instance> = Vec::with_capacity(shots.exemplar_ids.len() + shots.exemplars.len());
    for id in &shots.exemplar_ids {
        let ex = dataset
            .get(id)
            .ok_or_else(|| Error::Prompt(format!("few-shot set `{}` references unknown instance `{id}`", shots.id)))?;
        exemplars.push(ex);
    }
    exemplars.extend(shots.exemplars.iter());

    let mut text = String::new();
    push_block(&mut text, sep, &task.intro);
    for ex in exemplars {
        let key = push_question(&mut text, format, ex, scheme)?;
        push_block(&mut text, sep, &task.cot_cue);
        let answer = match &ex.rationale {
            Some(r) => format!("{} {} {}", format.answer_prefix, r, key),
            None => format!("{} {}", format.answer_prefix, key),
        };
        push_block(&mut text, sep, &answer);
    }
    let answer_key = push_question(&mut text, format, instance, scheme)?;
    push_block(&mut text, sep, &task.cot_cue);
    push_block(&mut text, sep, &format.answer_prefix);

    Ok(RenderedPrompt {
        text,
        answer_key,
        instance_id: instance.id.clone(),
        setting: *setting,
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte offset of the first occurrence of `needle` in `hay` whose
/// neighbouring characters are not alphanumeric.
fn find_bounded(hay: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let mut from = 0;
    while let Some(rel) = hay[from..].find(needle) {
        let start = from + rel;
        let end = start + needle.len();
        let before_ok = hay[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
        let after_ok = hay[end..].chars().next().is_none_or(|c| !is_word_char(c));
        if before_ok && after_ok {
            return Some(start);
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Earliest bounded match among `candidates`; ties go to the longer token.
fn first_match<'a>(hay: &str, candidates: impl Iterator<Item = (usize, &'a str)>) -> Option<usize> {
    candidates
        .filter_map(|(slot, tok)| find_bounded(hay, tok).map(|pos| (pos, std::cmp::Reverse(tok.len()), slot)))
        .min()
        .map(|(_, _, slot)| slot)
}

fn label_core(label: &str) -> &str {
    label.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Extracts the chosen option from raw model output.
///
/// Only the text after the last occurrence of `answer_prefix` is searched
/// when the prefix occurs. Labels are matched case-sensitively and must be
/// bounded by non-alphanumeric characters; the first occurrence wins. If no
/// full label matches, the labels' alphanumeric cores ("C" for "C.", "1" for
/// "(1)") are tried under the same rule. Returns the option index in original
/// order, or `None` for an abstention.
pub fn parse_answer(
    raw_output: &str,
    scheme: &OptionLabelScheme,
    n_options: usize,
    answer_prefix: Option<&str>,
) -> Option<usize> {
    let n = n_options.min(scheme.labels.len());
    if let Some(p) = &scheme.permutation {
        if p.len() != n {
            return None;
        }
    }
    let region = match answer_prefix.filter(|p| !p.is_empty()) {
        Some(prefix) => raw_output
            .rfind(prefix)
            .map_or(raw_output, |pos| &raw_output[pos + prefix.len()..]),
        None => raw_output,
    };
    let labels = &scheme.labels[..n];
    let slot = first_match(region, labels.iter().enumerate().map(|(i, l)| (i, l.as_str()))).or_else(|| {
        let cores: Vec<&str> = labels.iter().map(|l| label_core(l)).collect();
        let unique = |c: &str| !c.is_empty() && cores.iter().filter(|&&x| x == c).count() == 1;
        first_match(
            region,
            cores.iter().enumerate().filter(|(_, c)| unique(c)).map(|(i, c)| (i, *c)),
        )
    })?;
    Some(scheme.original_at(slot))
}
