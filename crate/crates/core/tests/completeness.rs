//! Whenever the bounded brute-force oracle finds a consistent program, the
//! synthesizer returns one too.

mod common;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use webrelate::extract_dsl::eval_program;
use webrelate::extract_synth::{learn_extract, ExtractConfig, ExtractExample};
use webrelate::harness::{
    brute_force_extract_oracle, brute_force_url_oracle, url_oracle_nonempty, ExtractBounds, UrlBounds,
};
use webrelate::url_dsl::{eval_predicate, pattern_matches};
use webrelate::url_synth::{apply_url, learn_url, LayerConfig, LayerFn, UrlConfig, UrlExample};

pub const CASES: u64 = 200;

fn substr_only() -> UrlConfig {
    let layer = LayerConfig { lambda_s: LayerFn::True, lambda_c: LayerFn::False, lambda_a: LayerFn::False };
    UrlConfig { layers: vec![layer], any_str: false, ..UrlConfig::default() }
}

#[test]
fn url_without_constants_or_gaps() {
    let bounds = UrlBounds { const_str: false, any_str: false, ..UrlBounds::default() };
    let cfg = substr_only();
    let (mut hits, mut misses) = (0, vec![]);
    for seed in 0..CASES {
        let mut r = common::rng(seed);
        let row = common::random_row(&mut r, 2);
        let o = common::short_output(&mut r, &row);
        if !url_oracle_nonempty(&row, &o, &bounds).unwrap() {
            continue;
        }
        hits += 1;
        let ex = UrlExample { row: row.clone(), url: o.clone(), candidates: vec![] };
        match learn_url(&[ex], &[], &cfg) {
            Some(p) => assert_eq!(apply_url(&p, &row, &[]).as_deref(), Some(o.as_str())),
            None => misses.push((seed, o)),
        }
    }
    assert!(misses.is_empty(), "{} misses out of {hits}: {misses:?}", misses.len());
    assert!(hits > CASES / 4, "only {hits} instances in bounds");
}

#[test]
fn url_unique_among_candidates() {
    // constants and gaps only, so the enumeration stays small
    let bounds = UrlBounds { substr: false, replace: false, ..UrlBounds::default() };
    let (mut hits, mut misses) = (0, vec![]);
    for seed in 0..CASES {
        let mut r = common::rng(seed);
        let row = common::random_row(&mut r, 1);
        let o = common::short_output(&mut r, &row);
        let mut cands: Vec<String> = Vec::new();
        for _ in 0..3 {
            let other = common::random_row(&mut r, 1);
            cands.push(common::short_output(&mut r, &other));
        }
        cands.push(o.clone());
        cands.push(format!("{o}x"));
        cands.shuffle(&mut r);
        let cands: Vec<String> = cands.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let unique = brute_force_url_oracle(&row, &o, &bounds).unwrap().into_iter().any(|p| {
            let pat = eval_predicate(&p, &row).unwrap();
            cands.iter().all(|c| (c == &o) == pattern_matches(&pat, c))
        });
        if !unique {
            continue;
        }
        hits += 1;
        let ex = UrlExample { row: row.clone(), url: o.clone(), candidates: cands.clone() };
        match learn_url(&[ex], &[], &UrlConfig::default()) {
            Some(p) => assert_eq!(apply_url(&p, &row, &cands).as_deref(), Some(o.as_str())),
            None => misses.push((seed, o, cands)),
        }
    }
    assert!(misses.is_empty(), "{} misses out of {hits}: {misses:?}", misses.len());
    assert!(hits > CASES / 4, "only {hits} instances in bounds");
}

#[test]
fn url_unique_without_constants() {
    let bounds = UrlBounds { const_str: false, max_atoms: 2, ..UrlBounds::default() };
    let layer = LayerConfig { lambda_s: LayerFn::True, lambda_c: LayerFn::False, lambda_a: LayerFn::True };
    let cfg = UrlConfig { layers: vec![layer], ..UrlConfig::default() };
    let (mut hits, mut misses) = (0, vec![]);
    for seed in 0..CASES {
        let mut r = common::rng(seed);
        let row = common::random_row(&mut r, 2);
        let o = common::short_output(&mut r, &row);
        let mut cands = vec![o.clone(), format!("{o}x")];
        for _ in 0..3 {
            let other = common::random_row(&mut r, 2);
            cands.push(common::short_output(&mut r, &other));
        }
        let cands: Vec<String> = cands.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let Ok(progs) = brute_force_url_oracle(&row, &o, &bounds) else { continue };
        let unique = progs.into_iter().any(|p| {
            let pat = eval_predicate(&p, &row).unwrap();
            cands.iter().all(|c| (c == &o) == pattern_matches(&pat, c))
        });
        if !unique {
            continue;
        }
        hits += 1;
        let ex = UrlExample { row: row.clone(), url: o.clone(), candidates: cands.clone() };
        match learn_url(&[ex], &[], &cfg) {
            Some(p) => assert_eq!(apply_url(&p, &row, &cands).as_deref(), Some(o.as_str())),
            None => misses.push((seed, o, cands)),
        }
    }
    assert!(misses.is_empty(), "{} misses out of {hits}: {misses:?}", misses.len());
    assert!(hits > CASES / 4, "only {hits} instances in bounds");
}

#[test]
fn extraction_against_enumeration() {
    let (mut hits, mut misses) = (0, vec![]);
    for seed in 0..CASES {
        let mut r = common::rng(seed);
        let tree = common::random_tree(&mut r, 15);
        let target = common::random_target(&mut r, &tree);
        let ex = ExtractExample { row: common::random_row(&mut r, 1), tree, target };
        let progs = brute_force_extract_oracle(&ex, &ExtractBounds::default()).unwrap();
        for p in &progs {
            assert_eq!(eval_program(p, &ex.row, &ex.tree), BTreeSet::from([target]), "oracle returned {p}");
        }
        if progs.is_empty() {
            continue;
        }
        hits += 1;
        match learn_extract(std::slice::from_ref(&ex), &[], &ExtractConfig::default()) {
            Some(p) => assert_eq!(eval_program(&p, &ex.row, &ex.tree), BTreeSet::from([target])),
            None => misses.push((seed, progs[0].to_string())),
        }
    }
    assert!(misses.is_empty(), "{} misses out of {hits}: {misses:?}", misses.len());
    assert!(hits > CASES / 4, "only {hits} instances in bounds");
}
