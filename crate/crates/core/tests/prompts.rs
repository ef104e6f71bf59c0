mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use polyeval::langid::LanguageTag;
use polyeval::promptlib::mock::{FnTranslator, IdentityTranslator, SentinelDroppingTranslator, UnavailableTranslator};
use polyeval::promptlib::{
    merge_propagation, parse_placeholders, propagate_template, render_prompt, select_template, PromptError,
    PromptLibrary, PromptStrategy, PromptTemplate, PropagateOptions, TargetFailure,
};
use polyeval::registry::TaskKind;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tag(s: &str) -> LanguageTag {
    s.parse().unwrap()
}

fn targets() -> Vec<LanguageTag> {
    TAG_POOL[1..].iter().map(|t| tag(t)).collect()
}

fn random_template(seed: u64) -> PromptTemplate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instruction = random_template_text(&mut rng);
    let fewshot = rand::Rng::gen_bool(&mut rng, 0.5).then(|| random_template_text(&mut rng));
    PromptTemplate::new(TaskKind::Summarization, tag("eng_Latn"), instruction, fewshot).unwrap()
}

fn block_on<F: std::future::Future>(f: F) -> F::Output {
    tokio::runtime::Builder::new_current_thread().build().unwrap().block_on(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn identity_conserves_placeholders(seed in any::<u64>()) {
        let t = random_template(seed);
        let p = block_on(propagate_template(&t, &targets(), &IdentityTranslator, PropagateOptions::default())).unwrap();
        prop_assert!(p.failures.is_empty());
        prop_assert_eq!(p.templates.len(), targets().len());
        for (_, out) in &p.templates {
            prop_assert_eq!(out.placeholder_multiset(), t.placeholder_multiset());
            prop_assert_eq!(&out.instruction, &t.instruction);
            prop_assert!(out.is_machine_translated());
        }
    }

    #[test]
    fn dropping_a_sentinel_fails_exactly_the_corrupted(seed in any::<u64>(), mask in 0u8..64) {
        let t = random_template(seed);
        let all = targets();
        let corrupt: BTreeSet<String> =
            all.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| t.to_string()).collect();
        let tr = SentinelDroppingTranslator { corrupt: corrupt.clone() };
        let p = block_on(propagate_template(&t, &all, &tr, PropagateOptions { targets_per_request: 2, concurrency: 3 })).unwrap();
        let failed: BTreeSet<String> = p.failures.iter().map(|f| f.target.to_string()).collect();
        if t.placeholder_multiset().is_empty() {
            prop_assert!(failed.is_empty());
        } else {
            prop_assert_eq!(&failed, &corrupt);
            for f in &p.failures {
                let is_lost = matches!(&f.failure, TargetFailure::PlaceholderLost { missing, .. } if missing.len() == 1);
                prop_assert!(is_lost);
            }
        }
        prop_assert_eq!(p.templates.len() + p.failures.len(), all.len());
    }

    #[test]
    fn rendering_substitutes_every_placeholder(seed in any::<u64>()) {
        let t = random_template(seed);
        let names: BTreeSet<String> = parse_placeholders(&t.instruction).into_iter().collect();
        let bindings: BTreeMap<String, String> = names.iter().map(|n| (n.clone(), format!("<{n}:{{text}}>"))).collect();
        let out = render_prompt(&t, &bindings, &[]).unwrap();
        for n in &names {
            let count = parse_placeholders(&t.instruction).iter().filter(|p| *p == n).count();
            prop_assert_eq!(out.matches(&format!("<{n}:{{text}}>")).count(), count);
        }
    }
}

#[test]
fn reordering_translator_is_harmless() {
    let t = PromptTemplate::new(TaskKind::Translation, tag("eng_Latn"), "From {src_lang} to {tgt_lang}: {src_text}", None)
        .unwrap();
    let reverse = FnTranslator {
        f: |s: &str, _: &str| s.split(' ').rev().collect::<Vec<_>>().join(" "),
        unsupported: ["deu_Latn".to_string()].into(),
    };
    let p = block_on(propagate_template(&t, &targets(), &reverse, PropagateOptions::default())).unwrap();
    assert_eq!(p.templates.len(), targets().len() - 1);
    assert_eq!(p.failures.len(), 1);
    assert_eq!(p.failures[0].failure, TargetFailure::TargetUnsupported);
    let (_, fra) = &p.templates[0];
    assert_eq!(fra.instruction, "{src_text} {tgt_lang}: to {src_lang} From");
}

#[test]
fn unavailable_translator_aborts() {
    let t = random_template(1);
    let err = block_on(propagate_template(&t, &targets(), &UnavailableTranslator, PropagateOptions::default()));
    assert!(matches!(err, Err(PromptError::TranslatorUnavailable(_))));
}

#[test]
fn merge_keeps_existing_unless_overwriting() {
    let dir = fixtures().join("prompts");
    let mut lib = PromptLibrary::load_dir(&dir).unwrap();
    let src = lib.get(TaskKind::Translation, tag("eng_Latn")).unwrap().clone();
    let p = block_on(propagate_template(&src, &targets(), &IdentityTranslator, PropagateOptions::default())).unwrap();
    let written = merge_propagation(&mut lib, &p, false);
    assert!(!written.contains(&tag("fin_Latn")));
    assert!(written.contains(&tag("deu_Latn")));
    assert!(lib.get(TaskKind::Translation, tag("fin_Latn")).unwrap().instruction.starts_with("Käännä"));
    merge_propagation(&mut lib, &p, true);
    assert!(lib.get(TaskKind::Translation, tag("fin_Latn")).unwrap().is_machine_translated());
}

#[test]
fn library_round_trips_through_disk() {
    let lib = PromptLibrary::load_dir(&fixtures().join("prompts")).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    for task in [TaskKind::Translation, TaskKind::Classification, TaskKind::Comprehension] {
        lib.save_task(tmp.path(), task).unwrap();
    }
    let back = PromptLibrary::load_dir(tmp.path()).unwrap();
    for t in ["eng_Latn", "fin_Latn", "zho_Hans"] {
        assert_eq!(back.get(TaskKind::Translation, tag(t)), lib.get(TaskKind::Translation, tag(t)));
    }
}

#[test]
fn strategies_select_as_documented() {
    let lib = PromptLibrary::load_dir(&fixtures().join("prompts")).unwrap();
    let single = PromptStrategy::single(tag("fin_Latn"));
    for t in TAG_POOL {
        let (tpl, fallback) = select_template(&lib, &single, TaskKind::Translation, tag(t)).unwrap();
        assert!(tpl.instruction.starts_with("Käännä seuraava lause"), "{t}");
        assert!(!fallback);
    }
    let (tpl, fallback) = select_template(&lib, &PromptStrategy::multi(), TaskKind::Classification, tag("fin_Latn")).unwrap();
    assert_eq!(tpl.tag, tag("eng_Latn"));
    assert!(fallback);
    let (tpl, fallback) = select_template(&lib, &PromptStrategy::multi(), TaskKind::Translation, tag("zho_Hans")).unwrap();
    assert_eq!((tpl.tag, fallback), (tag("zho_Hans"), false));
}
