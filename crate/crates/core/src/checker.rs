//! Labelling of whole formulas, engine dispatch and cross-validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::arena::{Arena, ArenaError};
use crate::bounded::{BoundedError, BoundedEvaluator, BoundedOptions, TimerBound};
use crate::buchi::{solve_buchi, Player};
use crate::cgm::{AvailableEntry, Cgm, ModelDocument, ModelError, TransitionEntry};
use crate::formula::{fragment_width, Coalition, PathAnalysis, PathFormula, StateFormula};
use crate::labeling::{LabelError, Labeling};
use crate::oracle::{atl_fixpoint_label, status_game_all, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Explicit untimed arena solved as a Büchi game.
    Buchi,
    /// Timed game by backward induction with a stable timer.
    Bounded,
    /// Status game over the model.
    StatusOracle,
    /// Classical labelling; formulas of width at most 1 only.
    Fixpoint,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::Buchi,
        Engine::Bounded,
        Engine::StatusOracle,
        Engine::Fixpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Buchi => "buchi",
            Engine::Bounded => "bounded",
            Engine::StatusOracle => "status-oracle",
            Engine::Fixpoint => "fixpoint",
        }
    }

    /// Büchi up to width 4, bounded above.
    pub fn default_for(phi: &StateFormula) -> Engine {
        if fragment_width(phi).width <= 4 {
            Engine::Buchi
        } else {
            Engine::Bounded
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = CheckError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CheckError::UnknownEngine(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("unknown engine `{0}` (expected buchi, bounded, status-oracle or fixpoint)")]
    UnknownEngine(String),
    #[error("the timer bound must be at least 1")]
    ZeroTimer,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Bounded(#[from] BoundedError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    /// One timer bound for every game of the bounded engine; by default each
    /// game gets its stable bound `|St| · |At(Φ)|`.
    pub timer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubformulaStats {
    pub formula: String,
    pub atoms: usize,
    pub stable_timer: usize,
    /// Explicit arena size, for the Büchi engine.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub arena_positions: usize,
    pub memo_size: usize,
    pub timer: Option<usize>,
    pub subformulas: Vec<SubformulaStats>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub formula: StateFormula,
    pub engine: Engine,
    /// Truth of the formula at each state.
    pub values: Vec<bool>,
    pub labels: Labeling,
    pub stats: Stats,
}

/// Truth of `phi` at every state of `m`.
pub fn model_check(m: &Cgm, phi: &StateFormula, engine: Engine) -> Result<Verdict, CheckError> {
    model_check_with(m, phi, engine, CheckOptions::default())
}

pub fn model_check_with(
    m: &Cgm,
    phi: &StateFormula,
    engine: Engine,
    options: CheckOptions,
) -> Result<Verdict, CheckError> {
    let clock = Instant::now();
    let phi = phi.expand();
    let subformulas = phi.strategic_subformulas();
    let mut labels = Labeling::new();
    let mut stats = Stats::default();

    let mut bounded = match engine {
        Engine::Bounded => {
            let bound = match options.timer {
                Some(0) => return Err(CheckError::ZeroTimer),
                Some(t) => TimerBound::Fixed(t),
                None => TimerBound::Stable { factor: 1 },
            };
            stats.timer = options.timer;
            Some(BoundedEvaluator::with_bound(
                m,
                bound,
                BoundedOptions::memoized(),
            )?)
        }
        _ => None,
    };
    if engine == Engine::Fixpoint {
        atl_fixpoint_label(m, &phi)?;
    }

    for sub in &subformulas {
        let StateFormula::Coalition(c, body) = sub else {
            unreachable!("strategic subformulas are coalition formulas")
        };
        let atoms = PathAnalysis::new(body).len();
        let mut positions = None;
        let values = match engine {
            Engine::Buchi => {
                let agents = m.resolve_coalition(c)?;
                let arena = Arena::build(m, &labels, agents, body)?;
                let sol = solve_buchi(arena.graph());
                positions = Some(arena.len());
                stats.arena_positions += arena.len();
                m.state_ids()
                    .map(|q| sol.winner(arena.initial(q)) == Player::Eloise)
                    .collect()
            }
            Engine::Bounded => bounded.as_mut().expect("evaluator").eval_all(sub)?,
            Engine::StatusOracle => {
                let agents = m.resolve_coalition(c)?;
                status_game_all(m, &agents, body, &labels)?
            }
            Engine::Fixpoint => atl_fixpoint_label(m, sub)?,
        };
        stats.subformulas.push(SubformulaStats {
            formula: sub.to_string(),
            atoms,
            stable_timer: m.num_states() * atoms,
            positions,
        });
        labels.insert(sub.clone(), values);
    }
    let values = labels.eval_all(m, &phi)?;
    if let Some(ev) = &bounded {
        stats.memo_size = ev.memo_size();
    }
    stats.elapsed = clock.elapsed();
    Ok(Verdict {
        formula: phi,
        engine,
        values,
        labels,
        stats,
    })
}

// ---------------------------------------------------------------------------
// Output documents

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateValue {
    pub state: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsDocument {
    pub arena_positions: usize,
    pub memo_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timer: Option<usize>,
    pub subformulas: Vec<SubformulaStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictDocument {
    pub formula: String,
    pub engine: Engine,
    pub states: Vec<StateValue>,
    pub stats: StatsDocument,
}

impl Verdict {
    /// The output document; timings are left out unless asked for so that
    /// repeated runs print identical bytes.
    pub fn to_document(&self, m: &Cgm, with_timing: bool) -> VerdictDocument {
        VerdictDocument {
            formula: self.formula.to_string(),
            engine: self.engine,
            states: m
                .state_ids()
                .map(|q| StateValue {
                    state: m.state_name(q).to_string(),
                    value: self.values[q.index()],
                })
                .collect(),
            stats: StatsDocument {
                arena_positions: self.stats.arena_positions,
                memo_size: self.stats.memo_size,
                timer: self.stats.timer,
                subformulas: self.stats.subformulas.clone(),
                elapsed_ms: with_timing.then_some(self.stats.elapsed.as_secs_f64() * 1e3),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Cross-validation

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub state: String,
    pub values: BTreeMap<Engine, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reproducer {
    pub model: ModelDocument,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub digest: String,
    pub engines: Vec<Engine>,
    /// Per state, the value each engine computed.
    pub matrix: Vec<Disagreement>,
    pub disagreements: Vec<Disagreement>,
    /// Engines that could not run on the instance, with the reason.
    pub skipped: BTreeMap<Engine, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproducer: Option<Reproducer>,
}

impl AgreementReport {
    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// FNV-1a over the model document and formula text.
pub fn instance_digest(m: &Cgm, phi: &StateFormula) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in m
        .to_json()
        .bytes()
        .chain([0u8])
        .chain(phi.to_string().bytes())
    {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn applicable_engines(phi: &StateFormula) -> Vec<Engine> {
    let mut engines = vec![Engine::Buchi, Engine::Bounded, Engine::StatusOracle];
    if fragment_width(phi).width <= 1 {
        engines.push(Engine::Fixpoint);
    }
    engines
}

type Matrix = (
    Vec<Engine>,
    BTreeMap<Engine, Vec<bool>>,
    BTreeMap<Engine, String>,
);

fn run_engines(m: &Cgm, phi: &StateFormula) -> Matrix {
    let engines = applicable_engines(phi);
    let mut results = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for e in &engines {
        match model_check(m, phi, *e) {
            Ok(v) => {
                results.insert(*e, v.values);
            }
            Err(err) => {
                skipped.insert(*e, err.to_string());
            }
        }
    }
    (engines, results, skipped)
}

fn disagreeing_states(m: &Cgm, results: &BTreeMap<Engine, Vec<bool>>) -> Vec<Disagreement> {
    matrix(m, results)
        .into_iter()
        .filter(|row| {
            let mut vals = row.values.values();
            let first = vals.next();
            vals.any(|v| Some(v) != first)
        })
        .collect()
}

fn matrix(m: &Cgm, results: &BTreeMap<Engine, Vec<bool>>) -> Vec<Disagreement> {
    m.state_ids()
        .map(|q| Disagreement {
            state: m.state_name(q).to_string(),
            values: results.iter().map(|(e, v)| (*e, v[q.index()])).collect(),
        })
        .collect()
}

/// Runs every applicable engine at every state and compares the results.
/// Disagreements come with a shrunk reproducer.
pub fn cross_validate(m: &Cgm, phi: &StateFormula) -> AgreementReport {
    let phi = phi.expand();
    let (engines, results, skipped) = run_engines(m, &phi);
    let disagreements = disagreeing_states(m, &results);
    let reproducer = (!disagreements.is_empty()).then(|| {
        let (model, formula) = shrink(m.to_document(), phi.clone());
        Reproducer {
            model,
            formula: formula.to_string(),
        }
    });
    AgreementReport {
        digest: instance_digest(m, &phi),
        engines,
        matrix: matrix(m, &results),
        disagreements,
        skipped,
        reproducer,
    }
}

fn still_fails(doc: &ModelDocument, phi: &StateFormula) -> bool {
    let Ok(m) = Cgm::from_document(doc.clone()) else {
        return false;
    };
    let (_, results, _) = run_engines(&m, phi);
    !disagreeing_states(&m, &results).is_empty()
}

/// Greedy delta debugging: drop states and simplify the formula while the
/// engines keep disagreeing.
pub fn shrink(mut doc: ModelDocument, mut phi: StateFormula) -> (ModelDocument, StateFormula) {
    loop {
        let mut progress = false;
        for state in doc.states.clone() {
            if doc.states.len() <= 1 {
                break;
            }
            let smaller = without_state(&doc, &state);
            if still_fails(&smaller, &phi) {
                doc = smaller;
                progress = true;
            }
        }
        for candidate in simplifications(&phi) {
            if still_fails(&doc, &candidate) {
                phi = candidate;
                progress = true;
                break;
            }
        }
        if !progress {
            return (doc, phi);
        }
    }
}

/// The model without `state`; transitions into it become self-loops.
fn without_state(doc: &ModelDocument, state: &str) -> ModelDocument {
    let mut out = doc.clone();
    out.states.retain(|s| s != state);
    out.available.retain(|e| e.state != state);
    out.transitions.retain(|t| t.from != state);
    for t in &mut out.transitions {
        if t.to == state {
            t.to = t.from.clone();
        }
    }
    for states in out.valuation.values_mut() {
        states.retain(|s| s != state);
    }
    out
}

/// Formulas one simplification step smaller than `phi`.
pub fn simplifications(phi: &StateFormula) -> Vec<StateFormula> {
    use StateFormula as S;
    let mut out = Vec::new();
    match phi {
        S::True => {}
        S::Prop(_) => out.push(S::True),
        S::Not(a) => {
            out.push((**a).clone());
            out.extend(simplifications(a).into_iter().map(S::not));
        }
        S::Or(a, b) | S::And(a, b) | S::Implies(a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            let rebuild = |x: StateFormula, y: StateFormula| match phi {
                S::Or(..) => x.or(y),
                S::And(..) => x.and(y),
                _ => S::Implies(Box::new(x), Box::new(y)),
            };
            out.extend(
                simplifications(a)
                    .into_iter()
                    .map(|x| rebuild(x, (**b).clone())),
            );
            out.extend(
                simplifications(b)
                    .into_iter()
                    .map(|y| rebuild((**a).clone(), y)),
            );
        }
        S::Coalition(c, body) => {
            for s in body_states(body) {
                out.push(s);
            }
            for a in c.agents() {
                let fewer = Coalition::new(c.agents().iter().filter(|x| *x != a).cloned());
                out.push(S::coalition(fewer, (**body).clone()));
            }
            out.extend(
                path_simplifications(body)
                    .into_iter()
                    .map(|b| S::coalition(c.clone(), b)),
            );
        }
    }
    out
}

fn body_states(body: &PathFormula) -> Vec<StateFormula> {
    use PathFormula as P;
    match body {
        P::State(s) | P::Next(s) | P::Eventually(s) | P::Always(s) => vec![s.clone()],
        P::Until(a, b) | P::Release(a, b) => vec![a.clone(), b.clone()],
        P::Not(a) => body_states(a),
        P::Or(a, b) | P::And(a, b) | P::Implies(a, b) => {
            let mut v = body_states(a);
            v.extend(body_states(b));
            v
        }
    }
}

fn path_simplifications(body: &PathFormula) -> Vec<PathFormula> {
    use PathFormula as P;
    let mut out = Vec::new();
    match body {
        P::State(s) => out.extend(simplifications(s).into_iter().map(P::State)),
        P::Not(a) => {
            out.push((**a).clone());
            out.extend(path_simplifications(a).into_iter().map(P::not));
        }
        P::Or(a, b) | P::And(a, b) | P::Implies(a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            let rebuild = |x: PathFormula, y: PathFormula| match body {
                P::Or(..) => x.or(y),
                P::And(..) => x.and(y),
                _ => P::Implies(Box::new(x), Box::new(y)),
            };
            out.extend(
                path_simplifications(a)
                    .into_iter()
                    .map(|x| rebuild(x, (**b).clone())),
            );
            out.extend(
                path_simplifications(b)
                    .into_iter()
                    .map(|y| rebuild((**a).clone(), y)),
            );
        }
        P::Next(s) => {
            out.push(P::State(s.clone()));
            out.extend(simplifications(s).into_iter().map(P::Next));
        }
        P::Until(a, b) => {
            out.push(P::State(b.clone()));
            out.push(P::Next(b.clone()));
            out.extend(
                simplifications(a)
                    .into_iter()
                    .map(|x| P::until(x, b.clone())),
            );
            out.extend(
                simplifications(b)
                    .into_iter()
                    .map(|y| P::until(a.clone(), y)),
            );
        }
        P::Eventually(s) | P::Always(s) => out.push(P::State(s.clone())),
        P::Release(a, b) => {
            out.push(P::State(a.clone()));
            out.push(P::State(b.clone()));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random instances

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub states: usize,
    pub agents: usize,
    pub actions: usize,
    /// Relative atoms per strategic subformula.
    pub width: usize,
    /// Nesting depth of state formulas.
    pub depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            states: 6,
            agents: 3,
            actions: 2,
            width: 3,
            depth: 3,
        }
    }
}

const PROPOSITIONS: [&str; 3] = ["p", "q", "r"];

/// A model and a formula drawn deterministically from `seed`.
pub fn random_instance(seed: u64, limits: Limits) -> (Cgm, StateFormula) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_model(&mut rng, limits);
    let agents = m.agents().to_vec();
    let phi = random_top(&mut rng, &agents, limits);
    (m, phi)
}

fn random_model(rng: &mut ChaCha8Rng, limits: Limits) -> Cgm {
    let n = rng.gen_range(1..=limits.states.max(1));
    let k = rng.gen_range(1..=limits.agents.max(1));
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let agents: Vec<String> = (0..k).map(|i| format!("a{}", i + 1)).collect();
    let actions: Vec<String> = (0..limits.actions.max(1))
        .map(|i| format!("x{i}"))
        .collect();

    let mut available = Vec::new();
    let mut per_state: Vec<Vec<Vec<String>>> = Vec::new();
    for s in &states {
        let mut row = Vec::new();
        for a in &agents {
            let count = rng.gen_range(1..=actions.len());
            let acts: Vec<String> = actions[..count].to_vec();
            available.push(AvailableEntry {
                agent: a.clone(),
                state: s.clone(),
                actions: acts.clone(),
            });
            row.push(acts);
        }
        per_state.push(row);
    }

    let mut transitions = Vec::new();
    for (s, row) in states.iter().zip(&per_state) {
        let total: usize = row.iter().map(Vec::len).product();
        for i in 0..total {
            let mut rest = i;
            let mut profile = BTreeMap::new();
            for (a, acts) in agents.iter().zip(row).rev() {
                profile.insert(a.clone(), acts[rest % acts.len()].clone());
                rest /= acts.len();
            }
            transitions.push(TransitionEntry {
                from: s.clone(),
                profile,
                to: states.choose(rng).expect("states").clone(),
            });
        }
    }

    let mut valuation = BTreeMap::new();
    for p in PROPOSITIONS {
        let holds: Vec<String> = states
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        valuation.insert(p.to_string(), holds);
    }
    let doc = ModelDocument {
        agents,
        states,
        propositions: PROPOSITIONS.iter().map(|p| p.to_string()).collect(),
        actions,
        available,
        transitions,
        valuation,
    };
    Cgm::from_document(doc).expect("generated models are valid")
}

fn random_top(rng: &mut ChaCha8Rng, agents: &[String], limits: Limits) -> StateFormula {
    let depth = limits.depth.max(1);
    let first = random_coalition(rng, agents, limits, depth - 1);
    match rng.gen_range(0..4) {
        0 => first.not(),
        1 => first.or(random_state(rng, agents, limits, depth - 1)),
        _ => first,
    }
}

fn random_state(
    rng: &mut ChaCha8Rng,
    agents: &[String],
    limits: Limits,
    depth: usize,
) -> StateFormula {
    let leaf = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            StateFormula::True
        } else {
            StateFormula::prop(*PROPOSITIONS.choose(rng).expect("propositions"))
        }
    };
    if depth == 0 {
        let l = leaf(rng);
        return if rng.gen_bool(0.3) { l.not() } else { l };
    }
    match rng.gen_range(0..10) {
        0..=3 => leaf(rng),
        4 => random_state(rng, agents, limits, depth - 1).not(),
        5 => random_state(rng, agents, limits, depth - 1).or(random_state(
            rng,
            agents,
            limits,
            depth - 1,
        )),
        6 => random_state(rng, agents, limits, depth - 1).and(random_state(
            rng,
            agents,
            limits,
            depth - 1,
        )),
        _ => random_coalition(rng, agents, limits, depth - 1),
    }
}

fn random_coalition(
    rng: &mut ChaCha8Rng,
    agents: &[String],
    limits: Limits,
    depth: usize,
) -> StateFormula {
    let members = agents.iter().filter(|_| rng.gen_bool(0.5)).cloned();
    let coalition = Coalition::new(members);
    let atoms = rng.gen_range(1..=limits.width.max(1));
    let mut parts: Vec<PathFormula> = (0..atoms)
        .map(|_| random_atom(rng, agents, limits, depth))
        .collect();
    while parts.len() > 1 {
        let b = parts.pop().expect("two parts");
        let a = parts.pop().expect("two parts");
        let joined = match rng.gen_range(0..3) {
            0 => a.or(b),
            1 => a.and(b),
            _ => PathFormula::Implies(Box::new(a), Box::new(b)),
        };
        let i = rng.gen_range(0..=parts.len());
        parts.insert(i, joined);
    }
    let body = parts.pop().expect("one part");
    let body = if rng.gen_bool(0.2) { body.not() } else { body };
    StateFormula::coalition(coalition, body)
}

fn random_atom(
    rng: &mut ChaCha8Rng,
    agents: &[String],
    limits: Limits,
    depth: usize,
) -> PathFormula {
    let s = |rng: &mut ChaCha8Rng| random_state(rng, agents, limits, depth);
    let atom = match rng.gen_range(0..7) {
        // A Boolean combination here would contribute several state atoms.
        0 if depth > 0 && rng.gen_bool(0.5) => {
            PathFormula::State(random_coalition(rng, agents, limits, depth - 1))
        }
        0 => PathFormula::State(StateFormula::prop(
            *PROPOSITIONS.choose(rng).expect("propositions"),
        )),
        1 => PathFormula::next(s(rng)),
        2 => PathFormula::until(s(rng), s(rng)),
        3 => PathFormula::Eventually(s(rng)),
        4 => PathFormula::Always(s(rng)),
        5 => PathFormula::Release(s(rng), s(rng)),
        _ => PathFormula::next(s(rng)),
    };
    if rng.gen_bool(0.25) {
        atom.not()
    } else {
        atom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    const PHI_STAR: &str = "!p2 & (p1 | <<a1>> ((!(X p3) & <<a2>> X p1) | (F p1 & (!p1) U p2)))";

    #[test]
    fn running_example_on_every_engine() {
        let m = Cgm::fixture("mstar").unwrap();
        let phi = parse_formula(PHI_STAR).unwrap();
        for engine in [Engine::Buchi, Engine::Bounded, Engine::StatusOracle] {
            let v = model_check(&m, &phi, engine).unwrap();
            assert!(v.values[0], "{engine}");
        }
        assert!(matches!(
            model_check(&m, &phi, Engine::Fixpoint),
            Err(CheckError::Oracle(OracleError::WidthTooLarge(4)))
        ));
    }

    #[test]
    fn m3_example_and_its_negation() {
        let m = Cgm::fixture("m3").unwrap();
        let phi = parse_formula("<<a2>> (G p1 | F p2)").unwrap();
        for engine in [Engine::Buchi, Engine::Bounded, Engine::StatusOracle] {
            assert!(model_check(&m, &phi, engine).unwrap().values[0]);
        }
        let neg = model_check(&m, &phi.clone().not(), Engine::Buchi).unwrap();
        assert!(!neg.values[0]);
        assert!(model_check(&m, &phi, Engine::Buchi).unwrap().values[1]);
    }

    #[test]
    fn cross_validation_examples() {
        let mstar = Cgm::fixture("mstar").unwrap();
        let r = cross_validate(&mstar, &parse_formula(PHI_STAR).unwrap());
        assert!(r.agrees() && r.skipped.is_empty());
        assert_eq!(r.matrix.len(), 5);

        let m3 = Cgm::fixture("m3").unwrap();
        let r = cross_validate(&m3, &parse_formula("<<a2>> (true U p2)").unwrap());
        assert!(r.engines.contains(&Engine::Fixpoint));
        assert!(r.agrees());

        let single = Cgm::from_json(
            r#"{"agents":["a"],"states":["s"],"propositions":["p"],"actions":["x"],
                "available":[{"agent":"a","state":"s","actions":["x"]}],
                "transitions":[{"from":"s","profile":{"a":"x"},"to":"s"}],
                "valuation":{"p":["s"]}}"#,
        )
        .unwrap();
        let r = cross_validate(&single, &parse_formula("<<>> X p").unwrap());
        assert!(r.agrees());
        assert!(r.matrix[0].values.values().all(|v| *v));
    }

    #[test]
    fn random_instances_are_deterministic_and_bounded() {
        let limits = Limits::default();
        for seed in 0..50 {
            let (m1, f1) = random_instance(seed, limits);
            let (m2, f2) = random_instance(seed, limits);
            assert_eq!(m1, m2);
            assert_eq!(f1, f2);
            assert!(fragment_width(&f1).width <= limits.width);
            assert!(m1.num_states() <= limits.states && m1.num_agents() <= limits.agents);
        }
    }

    #[test]
    fn shrinking_keeps_a_failure() {
        let m = Cgm::fixture("mstar").unwrap();
        let smaller = without_state(&m.to_document(), "q4");
        let m2 = Cgm::from_document(smaller).unwrap();
        assert_eq!(m2.num_states(), 4);
        let phi = parse_formula("<<a1>> (p1 U p2) | q").unwrap();
        let s = simplifications(&phi);
        assert!(s.contains(&parse_formula("q").unwrap()));
        assert!(s.iter().all(|c| *c != phi));
    }

    #[test]
    fn digests_are_stable() {
        let m = Cgm::fixture("m3").unwrap();
        let phi = parse_formula("<<a2>> F p2").unwrap();
        assert_eq!(instance_digest(&m, &phi), instance_digest(&m, &phi));
        assert_ne!(
            instance_digest(&m, &phi),
            instance_digest(&m, &phi.clone().not())
        );
    }
}
