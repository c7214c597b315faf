use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trilogic_core::analysis::{build_graph, classify};
use trilogic_core::fixpoint::{answer_query, model, EvalConfig, Mode};
use trilogic_core::joineval::{eval_rule, plan, plan_in_order, stored, DeltaMode};
use trilogic_core::stable::{check_stable, propagate, solve, Assignment, SolveConfig};
use trilogic_core::store::Store;
use trilogic_core::syntax::{parse, Literal, Program};
use trilogic_core::testkit::{self, Shape};
use trilogic_core::wfs::{ground, well_founded, TruthValue};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn positive() -> Shape {
    Shape {
        negation: false,
        ..Shape::default()
    }
}

fn rendered(p: &Program, cfg: &EvalConfig) -> BTreeSet<String> {
    model(p, cfg).unwrap().iter().map(ToString::to_string).collect()
}

fn naive() -> EvalConfig {
    EvalConfig {
        mode: Mode::Naive,
        ..EvalConfig::default()
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn naive_matches_semi_naive(seed in any::<u64>()) {
        let p = testkit::random_program(&mut rng(seed), Shape::default());
        prop_assert_eq!(rendered(&p, &naive()), rendered(&p, &EvalConfig::default()));
    }

    #[test]
    fn least_model_matches_closure(seed in any::<u64>()) {
        let p = testkit::random_program(&mut rng(seed), positive());
        prop_assert_eq!(rendered(&p, &EvalConfig::default()), testkit::brute_least_model(&p));
    }

    #[test]
    fn demand_preserves_answers(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = testkit::random_program(&mut r, positive());
        let q = testkit::random_query(&mut r, &p);
        let on = answer_query(&p, &q, &EvalConfig::default()).unwrap();
        let off = answer_query(&p, &q, &EvalConfig { demand: false, ..EvalConfig::default() }).unwrap();
        prop_assert_eq!(&on.rows, &off.rows);
        prop_assert!(on.stats.tuples_derived <= off.stats.tuples_derived);
        let brute = testkit::brute_answers(&p, &q, &testkit::brute_least_model(&p));
        let rows: BTreeSet<Vec<String>> =
            on.rows.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
        prop_assert_eq!(rows, brute);
    }

    #[test]
    fn join_result_independent_of_plan(seed in any::<u64>()) {
        let p = testkit::random_program(&mut rng(seed), Shape::default());
        let mut store = Store::new(16);
        for f in &p.facts {
            store.insert_atom(f).unwrap();
        }
        for rule in &p.rules {
            let sizes = |k: &trilogic_core::syntax::PredKey| store.relation_by_key(k).map_or(0, |r| r.len());
            let greedy = plan(rule, &sizes);
            let expected = eval_rule(&mut store, rule, &greedy, DeltaMode::Full, &stored).unwrap();
            let atoms: Vec<usize> =
                (0..rule.body.len()).filter(|&i| matches!(rule.body[i], Literal::Pos(_))).collect();
            for order in permutations(&atoms) {
                let fixed = plan_in_order(rule, &order);
                let got = eval_rule(&mut store, rule, &fixed, DeltaMode::Full, &stored).unwrap();
                prop_assert_eq!(&got, &expected);
            }
        }
    }

    #[test]
    fn classification_ignores_rule_order(seed in any::<u64>()) {
        let mut p = testkit::random_program(&mut rng(seed), Shape::default());
        let before = classify(&build_graph(&p));
        p.rules.reverse();
        p.facts.reverse();
        let after = classify(&build_graph(&p));
        prop_assert_eq!(before.tier, after.tier);
        prop_assert_eq!(
            before.stratification.map(|s| s.level),
            after.stratification.map(|s| s.level)
        );
    }

    #[test]
    fn printed_programs_parse_back(seed in any::<u64>()) {
        let p = testkit::random_program(&mut rng(seed), Shape::default());
        prop_assert_eq!(parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn well_founded_agrees_with_stratified(seed in any::<u64>()) {
        let p = testkit::random_program(&mut rng(seed), Shape::default());
        let g = ground(&p, &EvalConfig::default()).unwrap();
        let wf = well_founded(&g);
        prop_assert!(wf.undefined_set.is_empty());
        let truths: BTreeSet<String> = wf.true_set.iter().map(|&a| g.atoms()[a].to_string()).collect();
        prop_assert_eq!(truths, rendered(&p, &EvalConfig::default()));
    }

    #[test]
    fn solver_matches_brute_force(seed in any::<u64>(), atoms in 0usize..=12) {
        let g = testkit::random_ground(&mut rng(seed), atoms);
        let brute = testkit::brute_stable(&g);
        let on = solve(&g, None, SolveConfig { backjumping: true });
        let off = solve(&g, None, SolveConfig { backjumping: false });
        let mut sorted = on.models.clone();
        sorted.sort();
        prop_assert_eq!(sorted, brute);
        prop_assert_eq!(&on.models, &off.models);
        prop_assert!(on.stats.decisions <= off.stats.decisions);
        for m in &on.models {
            let total: Vec<bool> = (0..g.atom_count()).map(|a| m.contains(a)).collect();
            prop_assert!(check_stable(&g, &total));
        }
    }

    #[test]
    fn propagation_prunes_no_stable_model(seed in any::<u64>(), atoms in 0usize..=12) {
        let g = testkit::random_ground(&mut rng(seed), atoms);
        let brute = testkit::brute_stable(&g);
        match propagate(&g, &Assignment::empty(g.atom_count())) {
            Err(_) => prop_assert!(brute.is_empty()),
            Ok(a) => {
                for m in &brute {
                    for atom in 0..g.atom_count() {
                        if let Some(v) = a.values[atom] {
                            prop_assert_eq!(v, m.contains(atom));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn stable_models_respect_well_founded_bounds(seed in any::<u64>(), atoms in 0usize..=12) {
        let g = testkit::random_ground(&mut rng(seed), atoms);
        let wf = well_founded(&g);
        for m in solve(&g, None, SolveConfig::default()).models {
            for a in 0..g.atom_count() {
                match wf.value(a) {
                    TruthValue::True => prop_assert!(m.contains(a)),
                    TruthValue::False => prop_assert!(!m.contains(a)),
                    TruthValue::Undefined => {}
                }
            }
        }
    }
}
