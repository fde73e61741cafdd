use atlplus::bounded::{BoundedEvaluator, BoundedOptions, TimerBound};
use atlplus::cgm::FinitePath;
use atlplus::checker::{model_check, random_instance, Engine, Limits};
use atlplus::formula::{parse_formula, Coalition, PathAnalysis};
use atlplus::oracle::{eval_finite_path, lasso_truth, tsn, Lasso};
use atlplus::{Cgm, StateFormula, Status, TruthFunction};
use proptest::prelude::*;

fn instance(seed: u64) -> (Cgm, StateFormula) {
    let (m, phi) = random_instance(seed, Limits::default());
    (m, phi.expand())
}

fn lasso_from(m: &Cgm, picks: &[usize]) -> Lasso {
    let mut q = m.state_ids().nth(picks[0] % m.num_states()).unwrap();
    let mut trace = Vec::new();
    for pick in picks[1..].iter().cycle() {
        if let Some(i) = trace.iter().position(|x| *x == q) {
            let cycle = trace.split_off(i);
            return Lasso::new(m, trace, cycle).unwrap();
        }
        trace.push(q);
        let succ = m.successors(q);
        q = succ[pick % succ.len()];
    }
    unreachable!()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_formulas_parse_back(seed in any::<u64>()) {
        let (_, phi) = random_instance(seed, Limits::default());
        let text = phi.to_string();
        prop_assert_eq!(parse_formula(&text).unwrap(), phi);
    }

    #[test]
    fn models_survive_serialization(seed in any::<u64>()) {
        let (m, _) = instance(seed);
        prop_assert_eq!(Cgm::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn negation_is_pointwise_complement(seed in any::<u64>()) {
        let (m, phi) = instance(seed);
        let pos = model_check(&m, &phi, Engine::Buchi).unwrap().values;
        let neg = model_check(&m, &phi.clone().not(), Engine::Buchi).unwrap().values;
        prop_assert!(pos.iter().zip(&neg).all(|(a, b)| a != b));
    }

    #[test]
    fn larger_coalitions_win_more(seed in any::<u64>(), extra in 0usize..3) {
        let (m, phi) = instance(seed);
        let top = phi.strategic_subformulas().pop().unwrap();
        let StateFormula::Coalition(c, body) = &top else { unreachable!() };
        let added = m.agents()[extra % m.num_agents()].clone();
        let bigger = Coalition::new(c.agents().iter().cloned().chain([added]));
        let wider = StateFormula::coalition(bigger, (**body).clone());
        let small = model_check(&m, &top, Engine::Buchi).unwrap().values;
        let large = model_check(&m, &wider, Engine::Buchi).unwrap().values;
        prop_assert!(small.iter().zip(&large).all(|(s, l)| !s || *l));
    }

    #[test]
    fn memoization_changes_nothing(seed in any::<u64>()) {
        // Without memo tables the search is exponential in the timer.
        let tiny = Limits { states: 3, agents: 2, actions: 2, width: 2, depth: 2 };
        let (m, phi) = random_instance(seed, tiny);
        let phi = phi.expand();
        let run = |options| {
            BoundedEvaluator::with_bound(&m, TimerBound::Fixed(2), options)
                .unwrap()
                .eval_all(&phi)
                .unwrap()
        };
        prop_assert_eq!(run(BoundedOptions::default()), run(BoundedOptions::memoized()));
    }

    #[test]
    fn finite_prefixes_stabilize_to_the_lasso_value(seed in any::<u64>(), picks in prop::collection::vec(0usize..8, 2..12)) {
        let (m, phi) = instance(seed);
        let labels = model_check(&m, &phi, Engine::Buchi).unwrap().labels;
        let top = phi.strategic_subformulas().pop().unwrap();
        let StateFormula::Coalition(_, body) = &top else { unreachable!() };
        let lasso = lasso_from(&m, &picks);
        let k = PathAnalysis::new(body).len();
        let horizon = lasso.prefix.len() + k.max(1) * lasso.cycle.len();
        let stable = lasso_truth(&m, &lasso, body, &labels).unwrap();
        for len in horizon..horizon + 2 * lasso.cycle.len() + 2 {
            let path = FinitePath::new(&m, lasso.take(len + 1)).unwrap();
            prop_assert_eq!(eval_finite_path(&m, &path, body, &labels).unwrap(), stable);
        }
        prop_assert!(tsn(&m, &lasso, body, &labels).unwrap() <= PathAnalysis::new(body).temporal_count());
    }

    #[test]
    fn truth_functions_round_trip(statuses in prop::collection::vec(0u8..3, 1..12)) {
        let mut t = TruthFunction::all_open(statuses.len());
        for (i, s) in statuses.iter().enumerate() {
            match s {
                1 => t = t.with(i, Status::True),
                2 => t = t.with(i, Status::False),
                _ => {}
            }
        }
        prop_assert_eq!(TruthFunction::from_names(&t.to_names()), Some(t));
        prop_assert!(TruthFunction::all_open(t.len()).refines_to(&t));
        prop_assert_eq!(t.open_count(), statuses.iter().filter(|s| **s == 0).count());
    }
}
