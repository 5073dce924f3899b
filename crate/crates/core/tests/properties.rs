//! Property tests against independent oracles: sha3 for keccak, ethabi for
//! calldata, brute-force counting for the metrics.

mod common;

use std::collections::BTreeSet;

use ethabi::{ParamType, Token};
use proptest::prelude::*;
use sha3::{Digest, Keccak256};

use common::oracles::{signature_text, static_arg};
use intent_core::agents::{rank_scores, Score, Verdict};
use intent_core::chaindata::abi::{decode_params, AbiValue};
use intent_core::chaindata::{compute_selector, decode_calldata, keccak256, Confidence, Signature};
use intent_core::evaluation::{score, LabeledExample, Predictions};
use intent_core::llm::extract_json;
use intent_core::taxonomy::{load_taxonomy, IntentCode, IntentSet};
use intent_core::tokens::{estimate_tokens, truncate_to_budget};
use intent_core::toolbox::fit_to_budget;

fn codes() -> Vec<IntentCode> {
    load_taxonomy().labels().iter().map(|l| l.code).collect()
}

fn set_from_mask(mask: u32) -> IntentSet {
    codes()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, c)| c)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn selector_matches_independent_keccak(sig in signature_text()) {
        let ours = compute_selector(&sig).unwrap();
        let theirs = Keccak256::digest(sig.as_bytes());
        prop_assert_eq!(&ours.0[..], &theirs[..4]);
    }

    #[test]
    fn keccak_matches_on_arbitrary_bytes(data in prop::collection::vec(any::<u8>(), 0..300)) {
        prop_assert_eq!(&keccak256(&data)[..], &Keccak256::digest(&data)[..]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn decoder_inverts_independent_encoder(
        name in "[a-z][a-zA-Z0-9]{0,10}",
        args in prop::collection::vec(static_arg(), 0..7),
    ) {
        let params: Vec<ParamType> = args.iter().map(|a| a.param.clone()).collect();
        let tokens: Vec<Token> = args.iter().map(|a| a.token.clone()).collect();
        let text = format!("{name}({})", args.iter().map(|a| a.text.as_str()).collect::<Vec<_>>().join(","));
        let mut input = ethabi::short_signature(&name, &params).to_vec();
        input.extend(ethabi::encode(&tokens));

        let sig = Signature::parse(&text).unwrap();
        let call = decode_calldata(&input, &sig, Confidence::SignatureDb).unwrap();
        prop_assert_eq!(call.args.len(), args.len());
        prop_assert_eq!(&call.signature, &text);

        let values = decode_params(&sig.types(), &input[4..]).unwrap();
        let expected: Vec<AbiValue> = args.into_iter().map(|a| a.expected).collect();
        prop_assert_eq!(values, expected);
    }
}

fn examples() -> impl Strategy<Value = Vec<(u32, u32)>> {
    // gold sets are non-empty; predictions may be empty
    prop::collection::vec((1u32..(1 << 21), prop_oneof![Just(0u32), 0u32..(1 << 21)]), 1..20)
}

fn build(pairs: &[(u32, u32)]) -> (Vec<LabeledExample>, Predictions) {
    let golds: Vec<LabeledExample> = pairs
        .iter()
        .enumerate()
        .map(|(i, (g, _))| LabeledExample {
            tx_hash: format!("0x{i:064x}"),
            gold: set_from_mask(*g),
            note: None,
        })
        .collect();
    let preds = golds
        .iter()
        .zip(pairs)
        .map(|(e, (_, p))| (e.tx_hash.clone(), set_from_mask(*p)))
        .collect();
    (golds, preds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn metrics_agree_with_brute_force(pairs in examples()) {
        let (golds, preds) = build(&pairs);
        let m = score(&preds, &golds);
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (g, p) in &pairs {
            for bit in 0..21 {
                let (in_g, in_p) = (g & (1 << bit) != 0, p & (1 << bit) != 0);
                tp += u64::from(in_g && in_p);
                fp += u64::from(!in_g && in_p);
                fn_ += u64::from(in_g && !in_p);
            }
        }
        prop_assert_eq!((m.counts.tp, m.counts.fp, m.counts.fn_), (tp, fp, fn_));
        let r = tp as f64 / (tp + fn_) as f64;
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        prop_assert!((m.micro.recall - r).abs() < 1e-12);
        prop_assert!((m.micro.precision - p).abs() < 1e-12);
        prop_assert!((m.micro.f1 - f).abs() < 1e-12);
        for v in [m.micro.recall, m.micro.precision, m.micro.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let support: u64 = m.per_intent.values().map(|x| x.support).sum();
        prop_assert_eq!(support, tp + fn_);
    }

    #[test]
    fn adding_labels_moves_metrics_the_right_way(pairs in examples(), which in any::<prop::sample::Index>(), bit in 0u32..21) {
        let (golds, preds) = build(&pairs);
        let before = score(&preds, &golds);
        let i = which.index(pairs.len());
        let (g, p) = pairs[i];
        let mut changed = pairs.clone();
        changed[i].1 = p | (1 << bit);
        let (golds2, preds2) = build(&changed);
        let after = score(&preds2, &golds2);
        if g & (1 << bit) != 0 {
            prop_assert!(after.micro.recall >= before.micro.recall);
        } else {
            prop_assert!(after.micro.precision <= before.micro.precision + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn taxonomy_codes_and_names_round_trip(i in 0usize..21, upper in any::<bool>()) {
        let taxonomy = load_taxonomy();
        let label = &taxonomy.labels()[i];
        let code = label.code.as_str();
        let name = if upper { label.name.to_uppercase() } else { label.name.to_string() };
        prop_assert_eq!(taxonomy.parse_intent_code(code).unwrap().code, label.code);
        prop_assert_eq!(taxonomy.parse_intent_code(&format!("  {name} ")).unwrap().code, label.code);
        prop_assert_eq!(taxonomy.lookup(code).unwrap().code, label.code);
    }

    #[test]
    fn only_known_labels_parse(text in "[A-Za-z0-9 ]{0,12}") {
        let taxonomy = load_taxonomy();
        let t = text.trim();
        let known = taxonomy
            .labels()
            .iter()
            .any(|l| l.code.as_str().eq_ignore_ascii_case(t) || l.name.eq_ignore_ascii_case(t));
        prop_assert_eq!(taxonomy.parse_intent_code(&text).is_ok(), known);
    }

    #[test]
    fn json_survives_prose_and_fences(
        fields in prop::collection::btree_map("[a-z]{1,8}", prop_oneof![
            any::<i64>().prop_map(serde_json::Value::from),
            "[a-zA-Z0-9 .,]{0,20}".prop_map(serde_json::Value::from),
            any::<bool>().prop_map(serde_json::Value::from),
        ], 0..6),
        prose in "[a-zA-Z .,:]{0,40}",
        fenced in any::<bool>(),
    ) {
        let value = serde_json::Value::Object(fields.into_iter().collect());
        let body = serde_json::to_string_pretty(&value).unwrap();
        let text = if fenced { format!("{prose}\n```json\n{body}\n```\n{prose}") } else { format!("{prose} {body} {prose}") };
        prop_assert_eq!(extract_json(&text), Some(value));
    }

    #[test]
    fn truncation_fits_the_budget(text in "\\PC{0,400}", budget in 0usize..120) {
        let cut = truncate_to_budget(&text, budget);
        prop_assert!(text.starts_with(cut));
        prop_assert!(estimate_tokens(cut) <= budget);
        if estimate_tokens(&text) <= budget {
            prop_assert_eq!(cut, text.as_str());
        }
    }
}

#[test]
fn fitted_tool_output_respects_the_budget() {
    let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
    proptest!(ProptestConfig::with_cases(300), |(text in "\\PC{0,2000}", budget in 1usize..300)| {
        let (fitted, truncated) = rt.block_on(fit_to_budget(text.clone(), budget, None)).unwrap();
        prop_assert!(estimate_tokens(&fitted) <= budget);
        prop_assert_eq!(truncated, estimate_tokens(&text) > budget);
    });
}

fn scores_strategy() -> impl Strategy<Value = (u32, Vec<(usize, f64, f64)>, f64)> {
    (
        1u32..(1 << 21),
        prop::collection::btree_map(0usize..21, (-0.5f64..1.5, -0.5f64..1.5), 0..21),
        0.0f64..=1.0,
    )
        .prop_map(|(mask, m, t)| (mask, m.into_iter().map(|(i, (v, r))| (i, v, r)).collect(), t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn evaluator_ranking_is_ordered_total_and_order_free(
        (mask, raw, threshold) in scores_strategy(),
        seed in any::<u64>(),
    ) {
        let all = codes();
        let candidates: BTreeSet<IntentCode> = set_from_mask(mask).iter().collect();
        let scores: Vec<Score> = raw
            .iter()
            .map(|(i, v, r)| Score { code: all[*i], verifiability: *v, relevance: *r, reason: format!("r{i}") })
            .collect();
        let (ranked, _) = rank_scores(&candidates, &scores, threshold);

        let listed: BTreeSet<IntentCode> = ranked.entries.iter().map(|e| e.code).collect();
        prop_assert_eq!(&listed, &candidates);
        for w in ranked.entries.windows(2) {
            prop_assert!(w[0].combined > w[1].combined || (w[0].combined == w[1].combined && w[0].code < w[1].code));
        }
        for e in &ranked.entries {
            prop_assert!((0.0..=1.0).contains(&e.verifiability) && (0.0..=1.0).contains(&e.relevance));
            if e.verdict == Verdict::Accepted && !e.reason.starts_with("forced-best") {
                prop_assert!(e.combined >= threshold);
            }
            if e.verdict == Verdict::Rejected {
                prop_assert!(e.combined < threshold);
            }
        }
        prop_assert!(!ranked.accepted().is_empty());

        // any permutation of the score list gives the same ranking
        let mut shuffled = scores.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let (again, _) = rank_scores(&candidates, &shuffled, threshold);
        prop_assert_eq!(again, ranked);
    }
}
