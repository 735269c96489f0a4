mod common;

use cribo_core::segment::Segmenter;

#[test]
fn hand_labeled_spanish_cases() {
    let seg = Segmenter::default();
    let cases = common::segmentation_cases();
    assert!(cases.len() >= 30);
    let mut failures = Vec::new();
    for case in &cases {
        let got: Vec<String> = seg.split_sentences(&case.input).into_iter().map(|s| s.text).collect();
        if got != case.sentences {
            failures.push(format!("{:?}\n  want {:?}\n  got  {:?}", case.input, case.sentences, got));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn sentences_reassemble_the_input() {
    let seg = Segmenter::default();
    for case in common::segmentation_cases() {
        let flat: Vec<&str> = case.input.split_whitespace().collect();
        let joined = seg
            .split_sentences(&case.input)
            .into_iter()
            .map(|s| s.text)
            .collect::<Vec<_>>()
            .join(" ");
        assert_eq!(joined.split(' ').collect::<Vec<_>>(), flat, "{:?}", case.input);
    }
}
