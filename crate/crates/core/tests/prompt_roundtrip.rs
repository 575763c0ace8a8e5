use proptest::prelude::*;

use ilr_core::prompt::{parse_answer, remap_options, OptionLabelScheme};

const FAMILIES: [[&str; 6]; 4] = [
    ["A.", "B.", "C.", "D.", "E.", "F."],
    ["(1)", "(2)", "(3)", "(4)", "(5)", "(6)"],
    ["a)", "b)", "c)", "d)", "e)", "f)"],
    ["I.", "II.", "III.", "IV.", "V.", "VI."],
];

fn case() -> impl Strategy<Value = (usize, Vec<usize>, usize, usize)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            0..n,
            0..FAMILIES.len(),
        )
    })
}

proptest! {
    #[test]
    fn key_round_trips_through_remap((n, perm, answer, family) in case()) {
        let scheme = OptionLabelScheme::new("s", &FAMILIES[family][..n]).with_permutation(perm.clone());
        let options: Vec<String> = (0..n).map(|o| format!("text {o}")).collect();
        let (shown, key) = remap_options(&options, answer, &scheme).unwrap();
        // the slot carrying the key shows the originally correct option
        let slot = shown.iter().position(|o| o.label == key).unwrap();
        prop_assert_eq!(&shown[slot].text, &options[answer]);
        prop_assert_eq!(perm[slot], answer);
        prop_assert_eq!(parse_answer(&key, &scheme, n, None), Some(answer));
    }

    #[test]
    fn key_found_after_cue_in_free_text((n, perm, answer, family) in case(), pre in "[a-z ]{0,20}") {
        let scheme = OptionLabelScheme::new("s", &FAMILIES[family][..n]).with_permutation(perm);
        let options: Vec<String> = (0..n).map(|o| format!("text {o}")).collect();
        let (_, key) = remap_options(&options, answer, &scheme).unwrap();
        let reply = format!("{pre}\nAnswer: {key}\n");
        prop_assert_eq!(parse_answer(&reply, &scheme, n, Some("Answer:")), Some(answer));
    }
}

#[test]
fn all_permutations_of_six_round_trip() {
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        perms(k - 1)
            .into_iter()
            .flat_map(|p| {
                (0..=p.len()).map(move |i| {
                    let mut q = p.clone();
                    q.insert(i, k - 1);
                    q
                })
            })
            .collect()
    }
    let all = perms(6);
    assert_eq!(all.len(), 720);
    let options: Vec<String> = (0..6).map(|o| format!("o{o}")).collect();
    for family in &FAMILIES {
        for p in &all {
            let scheme = OptionLabelScheme::new("s", family).with_permutation(p.clone());
            for answer in 0..6 {
                let (_, key) = remap_options(&options, answer, &scheme).unwrap();
                assert_eq!(parse_answer(&key, &scheme, 6, None), Some(answer));
            }
        }
    }
}
