mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use webrelate::url_dsl::{
    eval_predicate, pattern_matches, run_filter, to_case, AtomicExpr, CaseMode, Predicate, UrlProgram,
};
use webrelate::url_synth::{gen_dag, layer_predicates, GenConfig, LayerConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn case_laws(s in "[a-zA-Z0-9 _-]{0,16}") {
        let c: Vec<char> = s.chars().collect();
        let lower = to_case(&c, CaseMode::Lower);
        prop_assert_eq!(to_case(&lower, CaseMode::Lower), lower.clone());
        prop_assert_eq!(to_case(&c, CaseMode::Iden), c.clone());
        prop_assert_eq!(lower.iter().collect::<String>(), s.to_lowercase());
        let prop = to_case(&c, CaseMode::Prop);
        prop_assert_eq!(to_case(&prop, CaseMode::Prop), prop.clone());
    }

    // Random source-to-target walks through a DAG spell programs that
    // reproduce the example, gaps aside.
    #[test]
    fn dag_paths_reproduce_output(seed in any::<u64>(), layer in 0usize..4) {
        let mut r = common::rng(seed);
        let row = common::random_row(&mut r, 2);
        let t = common::random_template(&mut r, 2);
        let o = common::render(&t, &row);
        let dag = gen_dag(&row, &o, &layer_predicates()[layer], &GenConfig::default()).pruned();
        if !dag.has_path() {
            return Ok(());
        }
        for _ in 0..20 {
            let mut v = dag.source();
            let mut atoms = Vec::new();
            while v != dag.target() {
                let next: Vec<usize> = dag.edges.keys().filter(|(k, _)| *k == v).map(|&(_, l)| l).collect();
                let l = *next.choose(&mut r).expect("pruned dag has no dead ends");
                atoms.push(dag.atoms(v, l).choose(&mut r).expect("edge has atoms").clone());
                v = l;
            }
            prop_assert!(dag.contains_program(&atoms));
            let pat = eval_predicate(&Predicate::new(atoms.clone()), &row).expect("evaluates");
            prop_assert!(pattern_matches(&pat, &o), "{:?} on {:?}", atoms, o);
        }
    }

    #[test]
    fn filter_is_first_match(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let row = common::random_row(&mut r, 1);
        let cands: Vec<String> = (0..4).map(|_| common::random_row(&mut r, 1).cells[0].clone()).collect();
        let prog = UrlProgram { pred: Predicate::new(vec![AtomicExpr::AnyStr]) };
        prop_assert_eq!(run_filter(&prog, &row, &cands), cands.first().map(String::as_str));
        let exact = UrlProgram { pred: Predicate::new(vec![AtomicExpr::ConstStr(cands[2].clone())]) };
        prop_assert_eq!(run_filter(&exact, &row, &cands), Some(cands[2].as_str()));
    }
}

#[test]
fn full_layer_has_every_constant() {
    let row = webrelate::InputRow::new(["EUR"]);
    let dag = gen_dag(&row, "q?s=eur", &LayerConfig::FULL, &GenConfig::default());
    assert!(dag.contains_program(&[AtomicExpr::ConstStr("q?s=eur".into())]));
}
