//! End-to-end acceptance suite. Prints one line per check and exits with a
//! failure status if any check fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use atlplus::bounded::{BoundedEvaluator, BoundedOptions, TimerBound, TimerPolicy};
use atlplus::cgm::{AvailableEntry, FinitePath, ModelDocument, TransitionEntry};
use atlplus::checker::{cross_validate, model_check, random_instance, Engine, Limits, Verdict};
use atlplus::formula::PathAnalysis;
use atlplus::oracle::{atl_fixpoint_label, eval_finite_path, positional_bruteforce, tsn, Lasso};
use atlplus::strategy::{synthesize_transducer, MemoryLevel};
use atlplus::{
    parse_formula, solve_buchi, Arena, BuchiSolution, Cgm, GameGraph, Labeling, Player,
    StateFormula,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PHI_STAR: &str = "!p2 & (p1 | <<a1>> ((!(X p3) & <<a2>> X p1) | (F p1 & (!p1) U p2)))";
const M3_GOAL: &str = "<<a2>> (G p1 | F p2)";
const CORPUS: u64 = 500;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

/// The random instances shared by several checks, with their Büchi labels.
struct Corpus {
    instances: Vec<(Cgm, StateFormula, Verdict)>,
}

impl Corpus {
    fn new() -> Corpus {
        let instances = (0..CORPUS)
            .map(|seed| {
                let (m, phi) = random_instance(seed, Limits::default());
                let phi = phi.expand();
                let v = model_check(&m, &phi, Engine::Buchi).expect("buchi engine");
                (m, phi, v)
            })
            .collect();
        Corpus { instances }
    }

    /// Every solved arena of the corpus with its strategic subformula.
    fn arenas(
        &self,
    ) -> impl Iterator<Item = (&Cgm, &Verdict, StateFormula, Arena, BuchiSolution)> + '_ {
        self.instances.iter().flat_map(|(m, phi, v)| {
            phi.strategic_subformulas().into_iter().map(move |sub| {
                let StateFormula::Coalition(c, body) = &sub else {
                    unreachable!()
                };
                let agents = m.resolve_coalition(c).expect("coalition");
                let arena = Arena::build(m, &v.labels, agents, body).expect("arena");
                let sol = solve_buchi(arena.graph());
                (m, v, sub.clone(), arena, sol)
            })
        })
    }
}

fn golden_verdicts() -> Outcome {
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for (model, text) in [("mstar", PHI_STAR), ("m3", M3_GOAL)] {
        let m = Cgm::fixture(model).expect("fixture");
        let phi = parse_formula(text).expect("formula");
        for engine in [Engine::Buchi, Engine::Bounded, Engine::StatusOracle] {
            let clock = Instant::now();
            let v = model_check(&m, &phi, engine).expect("check");
            let took = clock.elapsed();
            slowest = slowest.max(took);
            if !v.values[0] || took >= Duration::from_secs(1) {
                failures.push(format!("{model}/{engine}: {} in {took:?}", v.values[0]));
            }
        }
    }
    check(
        "golden verdicts",
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "both examples true at q0 on buchi, bounded, status-oracle; slowest {slowest:?}"
            )
        } else {
            failures.join("; ")
        },
    )
}

fn finite_depth_counterexample() -> Outcome {
    let m = Cgm::fixture("m3").expect("fixture");
    let body = parse_formula("<<a2>> (G p1 | F p2)")
        .expect("formula")
        .expand();
    let StateFormula::Coalition(_, path) = &body else {
        unreachable!()
    };
    let prefix = FinitePath::from_names(&m, &["q0", "q0", "q0", "q0", "q0", "q1"]).expect("path");
    let on_prefix = eval_finite_path(&m, &prefix, path, &Labeling::new()).expect("eval");
    let full = model_check(&m, &body, Engine::Buchi).expect("check").values[0];
    check(
        "finite witness depth counterexample",
        !on_prefix && full,
        format!("prefix q0^5 q1: {on_prefix}, full check at q0: {full}"),
    )
}

fn engine_equivalence() -> Outcome {
    let clock = Instant::now();
    let mut bad = Vec::new();
    let mut skipped = 0;
    for seed in 0..CORPUS {
        let (m, phi) = random_instance(seed, Limits::default());
        let r = cross_validate(&m, &phi);
        skipped += r.skipped.len();
        if !r.agrees() {
            bad.push(seed);
        }
    }
    let took = clock.elapsed();
    check(
        "engine equivalence",
        bad.is_empty() && skipped == 0 && took < Duration::from_secs(300),
        format!(
            "{CORPUS} instances, {} disagreeing {bad:?}, {skipped} engine runs skipped, {took:?}",
            bad.len()
        ),
    )
}

fn atl_conformance() -> Outcome {
    let limits = Limits {
        width: 1,
        ..Limits::default()
    };
    let mut bad = Vec::new();
    for seed in 0..200 {
        let (m, phi) = random_instance(10_000 + seed, limits);
        let buchi = model_check(&m, &phi, Engine::Buchi).expect("buchi").values;
        let fixpoint = atl_fixpoint_label(&m, &phi.expand()).expect("fixpoint");
        if buchi != fixpoint {
            bad.push(seed);
        }
    }
    check(
        "ATL conformance",
        bad.is_empty(),
        format!("200 width-1 instances, {} disagreeing {bad:?}", bad.len()),
    )
}

/// Winning regions are traps for the loser.
fn regions_closed(g: &GameGraph, sol: &BuchiSolution) -> bool {
    (0..g.len() as u32).all(|v| {
        let w = sol.winner(v);
        let succ = g.successors(v);
        if g.owner(v) == w {
            sol.strategy(v)
                .is_some_and(|s| succ.contains(&s) && sol.winner(s) == w)
        } else {
            succ.iter().all(|s| sol.winner(*s) == w)
        }
    })
}

/// Plays the declared winner's strategy against a random positional
/// opponent; returns the winner of the resulting lasso.
fn simulate(g: &GameGraph, sol: &BuchiSolution, start: u32, rng: &mut ChaCha8Rng) -> Player {
    let winner = sol.winner(start);
    let mut choice: HashMap<u32, u32> = HashMap::new();
    let mut seen: HashMap<u32, usize> = HashMap::new();
    let mut trace = Vec::new();
    let mut v = start;
    loop {
        if let Some(i) = seen.get(&v) {
            let cycle = &trace[*i..];
            return if cycle.iter().any(|x| g.is_target(*x)) {
                Player::Abelard
            } else {
                Player::Eloise
            };
        }
        seen.insert(v, trace.len());
        trace.push(v);
        v = if g.owner(v) == winner {
            sol.strategy(v).expect("winner strategy")
        } else {
            *choice.entry(v).or_insert_with(|| {
                let succ = g.successors(v);
                succ[rng.gen_range(0..succ.len())]
            })
        };
    }
}

fn determinacy(corpus: &Corpus) -> Outcome {
    let arenas: Vec<_> = corpus.arenas().collect();
    let per_arena = (10_000 / arenas.len().max(1)).max(20);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut open_regions = 0;
    let mut plays = 0;
    let mut mismatches = 0;
    for (_, _, _, arena, sol) in &arenas {
        let g = arena.graph();
        if !regions_closed(g, sol) {
            open_regions += 1;
        }
        for _ in 0..per_arena {
            let start = rng.gen_range(0..g.len() as u32);
            plays += 1;
            if simulate(g, sol, start, &mut rng) != sol.winner(start) {
                mismatches += 1;
            }
        }
    }
    check(
        "determinacy",
        open_regions == 0 && mismatches == 0 && plays >= 10_000,
        format!(
            "{} arenas, {open_regions} with leaking regions, {plays} plays, {mismatches} won by the declared loser",
            arenas.len()
        ),
    )
}

fn timer_laws(corpus: &Corpus) -> Outcome {
    let mut doubling = 0;
    for (m, phi, _) in &corpus.instances {
        let at = |factor| {
            BoundedEvaluator::with_bound(
                m,
                TimerBound::Stable { factor },
                BoundedOptions::memoized(),
            )
            .expect("evaluator")
            .eval_all(phi)
            .expect("bounded")
        };
        if at(1) != at(2) {
            doubling += 1;
        }
    }
    let tiny = Limits {
        states: 3,
        ..Limits::default()
    };
    let mut policies = 0;
    for seed in 0..50 {
        let (m, phi) = random_instance(20_000 + seed, tiny);
        let phi = phi.expand();
        let run = |policy| {
            BoundedEvaluator::with_bound(
                &m,
                TimerBound::Stable { factor: 1 },
                BoundedOptions {
                    policy,
                    memoize: true,
                },
            )
            .expect("evaluator")
            .eval_all(&phi)
            .expect("bounded")
        };
        if run(TimerPolicy::CanonicalMax) != run(TimerPolicy::Exhaustive) {
            policies += 1;
        }
    }
    check(
        "timer laws",
        doubling == 0 && policies == 0,
        format!("{doubling}/{CORPUS} differ between stable and doubled timers; {policies}/50 differ between timer policies"),
    )
}

fn memory_bound(corpus: &Corpus) -> Outcome {
    let (mut total, mut verified, mut compact) = (0, 0, 0);
    for (m, v, sub, arena, sol) in corpus.arenas() {
        let StateFormula::Coalition(_, body) = &sub else {
            unreachable!()
        };
        for q in m.state_ids() {
            if sol.winner(arena.initial(q)) != Player::Eloise {
                continue;
            }
            let w = synthesize_transducer(m, &v.labels, body, &arena, &sol, q).expect("witness");
            total += 1;
            verified += w.verified as usize;
            compact += (w.verified && w.level == MemoryLevel::Truth && w.memory as u128 <= w.bound)
                as usize;
        }
    }
    let rate = compact as f64 / total.max(1) as f64;

    let hub = Cgm::fixture("hub").expect("fixture");
    let goal = parse_formula("<<a>> (F p & F q)")
        .expect("formula")
        .expand();
    let StateFormula::Coalition(c, body) = &goal else {
        unreachable!()
    };
    let agents = hub.resolve_coalition(c).expect("coalition");
    let h = hub.state_id("h").expect("state");
    let positional =
        positional_bruteforce(&hub, &agents, body, &Labeling::new(), h).expect("brute force");
    let arena = Arena::build(&hub, &Labeling::new(), agents, body).expect("arena");
    let sol = solve_buchi(arena.graph());
    let w = synthesize_transducer(&hub, &Labeling::new(), body, &arena, &sol, h).expect("witness");

    check(
        "memory bound",
        verified == total && rate >= 0.95 && !positional && w.verified,
        format!(
            "{verified}/{total} witnesses verify, {:.1}% with truth-only memory within 3^k-2^k ({} fell back); \
             hub: positional {positional}, transducer with {} cells verifies {}",
            rate * 100.0,
            total - compact,
            w.memory,
            w.verified
        ),
    )
}

fn random_lasso(m: &Cgm, rng: &mut ChaCha8Rng) -> Lasso {
    let ids: Vec<_> = m.state_ids().collect();
    let mut q = ids[rng.gen_range(0..ids.len())];
    let mut trace = Vec::new();
    loop {
        if let Some(i) = trace.iter().position(|x| *x == q) {
            let cycle = trace.split_off(i);
            return Lasso::new(m, trace, cycle).expect("lasso");
        }
        trace.push(q);
        let succ = m.successors(q);
        q = succ[rng.gen_range(0..succ.len())];
    }
}

fn truth_swap_bound(corpus: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut max_seen = 0;
    for (m, phi, v) in corpus.instances.iter().take(200) {
        let top = phi
            .strategic_subformulas()
            .pop()
            .expect("strategic subformula");
        let StateFormula::Coalition(_, body) = &top else {
            unreachable!()
        };
        let lasso = random_lasso(m, &mut rng);
        let swaps = tsn(m, &lasso, body, &v.labels).expect("tsn");
        max_seen = max_seen.max(swaps);
        if swaps > PathAnalysis::new(body).temporal_count() {
            violations += 1;
        }
    }
    check(
        "truth swap bound",
        violations == 0,
        format!("200 lassos, {violations} exceed the temporal atom count, max swaps {max_seen}"),
    )
}

/// `c0 → c1 → … → c(n−1)`, where the agent may wait or advance; `p` marks
/// the last state and `q` the even ones.
fn chain(n: usize) -> Cgm {
    let name = |i: usize| format!("c{i}");
    let states: Vec<String> = (0..n).map(name).collect();
    let mut available = Vec::new();
    let mut transitions = Vec::new();
    for i in 0..n {
        let acts: Vec<String> = if i + 1 < n {
            vec!["wait".into(), "go".into()]
        } else {
            vec!["wait".into()]
        };
        for a in &acts {
            let to = if a == "go" { name(i + 1) } else { name(i) };
            transitions.push(TransitionEntry {
                from: name(i),
                profile: [("a".to_string(), a.clone())].into(),
                to,
            });
        }
        available.push(AvailableEntry {
            agent: "a".into(),
            state: name(i),
            actions: acts,
        });
    }
    let doc = ModelDocument {
        agents: vec!["a".into()],
        states: states.clone(),
        propositions: vec!["p".into(), "q".into()],
        actions: vec!["wait".into(), "go".into()],
        available,
        transitions,
        valuation: [
            ("p".to_string(), vec![name(n - 1)]),
            ("q".to_string(), states.iter().step_by(2).cloned().collect()),
        ]
        .into(),
    };
    Cgm::from_document(doc).expect("chain model")
}

fn scaling() -> Outcome {
    let clock = Instant::now();
    let phi = parse_formula("<<a>> (F p | G q)").expect("formula");
    let mut points = Vec::new();
    for n in [4usize, 8, 16, 32, 64] {
        let v = model_check(&chain(n), &phi, Engine::Buchi).expect("check");
        points.push(((n as f64).ln(), (v.stats.arena_positions as f64).ln()));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let took = clock.elapsed();
    let sizes: Vec<u64> = points.iter().map(|p| p.1.exp().round() as u64).collect();
    check(
        "width-2 scaling",
        slope <= 1.2 && took < Duration::from_secs(30),
        format!("arena positions {sizes:?} for 4..64 states, log-log slope {slope:.3}, {took:?}"),
    )
}

fn main() -> ExitCode {
    let mut results = vec![
        golden_verdicts(),
        finite_depth_counterexample(),
        engine_equivalence(),
        atl_conformance(),
    ];
    let corpus = Corpus::new();
    results.push(determinacy(&corpus));
    results.push(timer_laws(&corpus));
    results.push(memory_bound(&corpus));
    results.push(truth_swap_bound(&corpus));
    results.push(scaling());

    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!(
            "{}. [{}] {}: {}",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        failed += (!r.pass) as usize;
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
