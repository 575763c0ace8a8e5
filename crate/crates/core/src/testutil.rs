// Small fixtures shared by unit tests.

use crate::model::{Dataset, FactorSpace, FewShotSet, Instance};
use crate::prompt::{OptionLabelScheme, PromptFormat, TaskDescription};

pub fn instance(k: usize) -> Instance {
    Instance {
        id: format!("i{k}"),
        question: format!("question {k}"),
        options: (0..4).map(|o| format!("option {o} of {k}")).collect(),
        answer_index: k % 4,
        rationale: None,
    }
}

pub fn dataset(m: usize) -> Dataset {
    Dataset::new("fixture", (0..m).map(instance).collect()).unwrap()
}

const LABEL_SETS: [[&str; 4]; 4] = [
    ["A.", "B.", "C.", "D."],
    ["(1)", "(2)", "(3)", "(4)"],
    ["a)", "b)", "c)", "d)"],
    ["I.", "II.", "III.", "IV."],
];

/// Zero-shot few-shot sets and generic values with the given pool sizes.
pub fn space(sizes: [usize; 4]) -> FactorSpace {
    FactorSpace {
        few_shot_sets: (0..sizes[0])
            .map(|i| FewShotSet {
                id: format!("fs{i}"),
                exemplar_ids: vec![],
                exemplars: vec![],
            })
            .collect(),
        option_label_schemes: (0..sizes[1])
            .map(|i| {
                let scheme = OptionLabelScheme::new(format!("ol{i}"), &LABEL_SETS[i % 4]);
                if i >= 4 {
                    scheme.with_permutation(vec![(i) % 4, (i + 1) % 4, (i + 2) % 4, (i + 3) % 4])
                } else {
                    scheme
                }
            })
            .collect(),
        task_descriptions: (0..sizes[2])
            .map(|i| TaskDescription {
                id: format!("td{i}"),
                intro: format!("Task description {i}."),
                cot_cue: "Think step by step.".into(),
            })
            .collect(),
        prompt_formats: (0..sizes[3])
            .map(|i| PromptFormat {
                id: format!("pf{i}"),
                question_prefix: format!("Q{i}:"),
                option_prefix: "Options:".into(),
                answer_prefix: "Answer:".into(),
                separator: "\n".into(),
            })
            .collect(),
    }
}

pub fn meta() -> crate::model::OutcomeMeta {
    crate::model::OutcomeMeta {
        plan_seed: 0,
        mode: "ilr".into(),
        repetition_design: "shared".into(),
        backend_id: "test".into(),
        run_seed: 0,
        dataset: "fixture".into(),
        dataset_digest: String::new(),
        factor_space_digest: String::new(),
        config_digest: None,
        tool_version: String::new(),
    }
}
