mod common;

use std::collections::BTreeSet;

use common::translation_descriptor;
use polyeval::langid::LanguageTag;
use polyeval::registry::{enumerate_directions, DirectionMode, RegistryError};

#[test]
fn counts_follow_the_number_of_languages() {
    for n in 2..=6 {
        let desc = translation_descriptor(n);
        for pivot in desc.aligned_tags() {
            let any = enumerate_directions(&desc, pivot, DirectionMode::AnyToPivot).unwrap();
            let from = enumerate_directions(&desc, pivot, DirectionMode::PivotToAny).unwrap();
            let both = enumerate_directions(&desc, pivot, DirectionMode::Both).unwrap();
            assert_eq!((any.len(), from.len(), both.len()), (n - 1, n - 1, 2 * (n - 1)));
            assert!(any.iter().all(|d| d.target == pivot && d.source != pivot));
            assert!(from.iter().all(|d| d.source == pivot && d.target != pivot));
            let union: BTreeSet<_> = any.iter().chain(&from).copied().collect();
            assert_eq!(union, both.iter().copied().collect::<BTreeSet<_>>());
            assert_eq!(union.len(), both.len());
        }
    }
}

#[test]
fn pivot_outside_the_benchmark_is_rejected() {
    let desc = translation_descriptor(3);
    let pivot: LanguageTag = "rus_Cyrl".parse().unwrap();
    for mode in [DirectionMode::AnyToPivot, DirectionMode::PivotToAny, DirectionMode::Both] {
        let err = enumerate_directions(&desc, pivot, mode).unwrap_err();
        assert!(matches!(err, RegistryError::PivotNotInBenchmark { .. }), "{err}");
    }
}

#[test]
fn order_is_canonical() {
    let desc = translation_descriptor(4);
    let pivot: LanguageTag = "fra_Latn".parse().unwrap();
    let both: Vec<String> =
        enumerate_directions(&desc, pivot, DirectionMode::Both).unwrap().iter().map(|d| d.to_string()).collect();
    assert_eq!(
        both,
        [
            "deu_Latn-fra_Latn",
            "eng_Latn-fra_Latn",
            "fin_Latn-fra_Latn",
            "fra_Latn-deu_Latn",
            "fra_Latn-eng_Latn",
            "fra_Latn-fin_Latn"
        ]
    );
}
