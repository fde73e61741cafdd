//! Finite-memory witnesses for true strategic formulas.
//!
//! A witness is a transducer for the coalition: its memory is the truth
//! function accumulated along the path so far, it observes each new state and
//! picks a joint action. Actions are read off Eloise's positional winning
//! strategy in the Büchi arena. When no memory of truth functions alone works,
//! the memory is widened to whole arena positions (truth function, seeker,
//! counter, round) and the opponent's game moves are simulated truthfully.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{
    AdjustStage, Arena, Config, DecideStage, Move, PhaseDetail, Position, Round, Status, StepStage,
    TruthFunction,
};
use crate::buchi::{BuchiSolution, Player};
use crate::cgm::{ActionProfile, AgentSet, Cgm, CoalitionMove, StateId};
use crate::formula::{memory_bound, AtomKind, PathFormula};
use crate::labeling::Labeling;
use crate::oracle::{cycles_satisfy, OracleError, StatusTracker};

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("Eloise does not win at state `{0}`")]
    NotWinning(String),
    #[error("transducer has no action for cell {cell} at state `{state}`")]
    MissingAction { cell: usize, state: String },
    #[error("transducer has no update for cell {cell} on state `{state}`")]
    MissingUpdate { cell: usize, state: String },
    #[error("transducer has no start cell for state `{0}`")]
    MissingStart(String),
    #[error("action {profile} of cell {cell} is not available at state `{state}`")]
    Inadmissible {
        cell: usize,
        state: String,
        profile: String,
    },
    #[error("malformed witness document: {0}")]
    Document(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// How much memory the transducer keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryLevel {
    /// Truth functions only.
    Truth,
    /// Truth function, seeker, counter and round.
    TruthSeekerCounter,
}

impl fmt::Display for MemoryLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryLevel::Truth => "truth",
            MemoryLevel::TruthSeekerCounter => "truth-seeker-counter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Truth(TruthFunction),
    Position {
        truth: TruthFunction,
        seeker: Player,
        counter: u8,
        round: Round,
    },
    /// The simulated game has ended; the remaining choices are arbitrary.
    Finished(TruthFunction),
}

impl Cell {
    pub fn truth(&self) -> TruthFunction {
        match self {
            Cell::Truth(t) | Cell::Finished(t) => *t,
            Cell::Position { truth, .. } => *truth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transducer {
    pub level: MemoryLevel,
    /// Cells in discovery order.
    pub cells: Vec<Cell>,
    pub initial: usize,
    /// Memory after observing the first state of the path.
    pub start: BTreeMap<StateId, usize>,
    pub update: BTreeMap<(usize, StateId), usize>,
    pub act: BTreeMap<(usize, StateId), ActionProfile>,
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub transducer: Transducer,
    pub verified: bool,
    /// Number of memory cells.
    pub memory: usize,
    /// `3^k − 2^k` for the number `k` of relative atoms.
    pub bound: u128,
    pub level: MemoryLevel,
    /// Whether the truth-only attempt was tried and rejected.
    pub fell_back: bool,
}

/// Step positions where Eloise picks an action, grouped by state and truth.
struct StepIndex {
    by_key: HashMap<(StateId, TruthFunction), Vec<(u32, Config)>>,
}

impl StepIndex {
    fn new(arena: &Arena, sol: &BuchiSolution) -> Self {
        let mut by_key: HashMap<_, Vec<_>> = HashMap::new();
        for (id, p) in arena.positions().iter().enumerate() {
            if let Position::Config(c) = p {
                if c.detail == PhaseDetail::Step(StepStage::VerifierPicks)
                    && sol.winner(id as u32) == Player::Eloise
                {
                    by_key
                        .entry((c.state, c.truth))
                        .or_default()
                        .push((id as u32, *c));
                }
            }
        }
        StepIndex { by_key }
    }

    /// Eloise's profile index at the preferred matching position.
    fn choose(
        &self,
        arena: &Arena,
        sol: &BuchiSolution,
        q: StateId,
        truth: TruthFunction,
        round: Round,
    ) -> Option<u32> {
        let candidates = self.by_key.get(&(q, truth))?;
        let (id, _) = candidates.iter().min_by_key(|(id, c)| {
            (
                c.round != round,
                c.seeker != Player::Eloise,
                std::cmp::Reverse(c.counter),
                *id,
            )
        })?;
        profile_index(arena, sol, *id)
    }
}

fn profile_index(arena: &Arena, sol: &BuchiSolution, id: u32) -> Option<u32> {
    match arena.move_to(id, sol.strategy(id)?)? {
        Move::Profile(i) => Some(i),
        _ => None,
    }
}

fn round_at(stage: u8) -> Round {
    match stage {
        0 => Round::First,
        1 => Round::Second,
        _ => Round::Later,
    }
}

/// The arena records a false state or next atom as `Open`: nobody claims it.
fn as_claimed(tracker: &StatusTracker, theta: TruthFunction) -> TruthFunction {
    let mut t = TruthFunction::all_open(theta.len());
    for (i, atom) in tracker.analysis().atoms.iter().enumerate() {
        let s = theta.get(i);
        if s != Status::Open && (s == Status::True || atom.kind() == AtomKind::UntilAtom) {
            t = t.with(i, s);
        }
    }
    t
}

/// Truthful update of a memory cell; the step is recovered from the cell
/// since next atoms are open exactly before the second state.
fn truthful_update(tracker: &StatusTracker, theta: TruthFunction, q: StateId) -> TruthFunction {
    let next_open = tracker
        .analysis()
        .atoms
        .iter()
        .enumerate()
        .any(|(i, a)| a.kind() == AtomKind::NextAtom && theta.get(i) == Status::Open);
    tracker.update(theta, q, if next_open { 1 } else { 2 })
}

struct Builder {
    cells: Vec<Cell>,
    index: HashMap<Cell, usize>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            cells: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, c: Cell) -> usize {
        *self.index.entry(c).or_insert_with(|| {
            self.cells.push(c);
            self.cells.len() - 1
        })
    }
}

/// Builds a witness for `<<A>> body` at `from` from a solved arena.
pub fn synthesize_transducer(
    m: &Cgm,
    labels: &Labeling,
    body: &PathFormula,
    arena: &Arena,
    sol: &BuchiSolution,
    from: StateId,
) -> Result<WitnessReport, WitnessError> {
    if sol.winner(arena.initial(from)) != Player::Eloise {
        return Err(WitnessError::NotWinning(m.state_name(from).to_string()));
    }
    let tracker = StatusTracker::new(m, body, labels)?;
    let bound = memory_bound(tracker.analysis().len());
    let steps = StepIndex::new(arena, sol);
    let coalition = arena.coalition();

    if let Some(t) = truth_only(m, &tracker, arena, sol, &steps, from) {
        if verify_witness(m, coalition, body, labels, &t, from)? {
            return Ok(report(t, true, bound, false));
        }
    }
    let t = with_positions(m, &tracker, arena, sol, &steps, from);
    let verified = verify_witness(m, coalition, body, labels, &t, from)?;
    Ok(report(t, verified, bound, true))
}

fn report(t: Transducer, verified: bool, bound: u128, fell_back: bool) -> WitnessReport {
    WitnessReport {
        memory: t.cells.len(),
        level: t.level,
        transducer: t,
        verified,
        bound,
        fell_back,
    }
}

fn truth_only(
    m: &Cgm,
    tracker: &StatusTracker,
    arena: &Arena,
    sol: &BuchiSolution,
    steps: &StepIndex,
    from: StateId,
) -> Option<Transducer> {
    let moves: Vec<Vec<CoalitionMove>> = m
        .state_ids()
        .map(|q| m.coalition_moves(q, arena.coalition()))
        .collect();
    let fresh = tracker.fresh();
    let mut b = Builder::new();
    let initial = b.intern(Cell::Truth(fresh));
    let theta0 = tracker.update(fresh, from, 0);
    let start_truth = if theta0.open_count() > 0 {
        theta0
    } else {
        fresh
    };
    let start = b.intern(Cell::Truth(start_truth));

    let mut act: BTreeMap<(usize, StateId), u32> = BTreeMap::new();
    let mut update: BTreeMap<(usize, StateId), usize> = BTreeMap::new();

    // Nodes (state, cell, real status, stage). While the real status has an
    // open atom the cell equals it, and the action must come from the arena.
    let mut seen = std::collections::HashSet::new();
    let mut queue = VecDeque::new();
    queue.push_back((from, start, theta0, 0u8));
    seen.insert((from, start, theta0, 0u8));
    while let Some((q, cell, theta, stage)) = queue.pop_front() {
        let cell_truth = b.cells[cell].truth();
        let key = (cell, q);
        let choice = match act.get(&key) {
            Some(i) => *i,
            None => {
                let found = steps.choose(
                    arena,
                    sol,
                    q,
                    as_claimed(tracker, cell_truth),
                    round_at(stage),
                );
                let i = match found {
                    Some(i) => i,
                    None if theta.open_count() == 0 => 0,
                    None => return None,
                };
                act.insert(key, i);
                i
            }
        };
        for q2 in &moves[q.index()][choice as usize].successors {
            let next_truth = truthful_update(tracker, cell_truth, *q2);
            let next_cell = if next_truth.open_count() > 0 {
                b.intern(Cell::Truth(next_truth))
            } else {
                cell
            };
            update.insert((cell, *q2), next_cell);
            let step = stage as usize + 1;
            let node = (
                *q2,
                next_cell,
                tracker.update(theta, *q2, step),
                step.min(2) as u8,
            );
            if seen.insert(node) {
                queue.push_back(node);
            }
        }
    }
    Some(Transducer {
        level: MemoryLevel::Truth,
        cells: b.cells,
        initial,
        start: BTreeMap::from([(from, start)]),
        act: act
            .into_iter()
            .map(|((c, q), i)| ((c, q), moves[q.index()][i as usize].profile.clone()))
            .collect(),
        update,
    })
}

/// Plays the arena from `id` with Eloise's strategy and a truthful Abelard
/// until Eloise is to pick an action, or the game ends.
fn advance_to_step(arena: &Arena, sol: &BuchiSolution, mut id: u32) -> Result<u32, TruthFunction> {
    loop {
        let c = match arena.position(id) {
            Position::Config(c) => *c,
            Position::Exit { truth, .. } => return Err(*truth),
            Position::Ending(_) => return Err(TruthFunction::all_open(arena.analysis().len())),
        };
        if c.detail == PhaseDetail::Step(StepStage::VerifierPicks) {
            return Ok(id);
        }
        let edges: Vec<(Move, u32)> = arena.edges(id).collect();
        let pick = |mv: Move| edges.iter().find(|(m, _)| *m == mv).map(|(_, w)| *w);
        let next = if arena.graph().owner(id) == Player::Eloise {
            sol.strategy(id).unwrap_or(edges[0].1)
        } else {
            use AdjustStage::*;
            let holds = arena
                .analysis()
                .skeleton
                .eval(&|i| c.truth.get(i) == Status::True);
            match c.detail {
                PhaseDetail::Adjust { stage, .. } => match stage {
                    // Challenge exactly the false claims.
                    FalsifierRespondsVer | FalsifierRespondsFal => {
                        let challenge = pick(Move::Challenge).expect("challenge move");
                        if *arena.position(challenge) == Position::Ending(Player::Abelard) {
                            challenge
                        } else {
                            pick(Move::Accept).expect("accept move")
                        }
                    }
                    // Make exactly the true claims.
                    _ => {
                        let claim = pick(Move::Claim).expect("claim move");
                        let true_claim = arena.edges(claim).any(|(mv, w)| {
                            mv == Move::Challenge
                                && *arena.position(w) == Position::Ending(Player::Abelard)
                        });
                        if true_claim {
                            claim
                        } else {
                            pick(Move::Pass).expect("pass move")
                        }
                    }
                },
                PhaseDetail::Decide(DecideStage::SeekerChoice) => {
                    pick(if holds { Move::Continue } else { Move::Stop }).expect("decision move")
                }
                PhaseDetail::Decide(DecideStage::OpponentChoice) => {
                    pick(if holds { Move::TakeOver } else { Move::EndGame }).expect("decision move")
                }
                PhaseDetail::Step(_) => unreachable!("outcomes are chosen by the model path"),
            }
        };
        id = next;
    }
}

fn with_positions(
    m: &Cgm,
    tracker: &StatusTracker,
    arena: &Arena,
    sol: &BuchiSolution,
    steps: &StepIndex,
    from: StateId,
) -> Transducer {
    let moves: Vec<Vec<CoalitionMove>> = m
        .state_ids()
        .map(|q| m.coalition_moves(q, arena.coalition()))
        .collect();
    let mut b = Builder::new();
    let initial = b.intern(Cell::Finished(tracker.fresh()));
    let mut at: HashMap<usize, Result<u32, TruthFunction>> = HashMap::new();
    let cell_of = |r: Result<u32, TruthFunction>,
                   b: &mut Builder,
                   at: &mut HashMap<usize, Result<u32, TruthFunction>>| {
        let cell = match r {
            Ok(id) => match arena.position(id) {
                Position::Config(c) => Cell::Position {
                    truth: c.truth,
                    seeker: c.seeker,
                    counter: c.counter,
                    round: c.round,
                },
                _ => unreachable!(),
            },
            Err(t) => Cell::Finished(t),
        };
        let i = b.intern(cell);
        at.insert(i, r);
        i
    };
    let start = cell_of(
        advance_to_step(arena, sol, arena.initial(from)),
        &mut b,
        &mut at,
    );
    let mut act = BTreeMap::new();
    let mut update = BTreeMap::new();
    let mut queue = VecDeque::from([(start, from)]);
    let mut seen = std::collections::HashSet::from([(start, from)]);
    while let Some((cell, q)) = queue.pop_front() {
        let (choice, outcome_from) = match at[&cell] {
            Ok(id) => {
                let w = sol
                    .strategy(id)
                    .unwrap_or_else(|| arena.edges(id).next().unwrap().1);
                match arena.move_to(id, w) {
                    Some(Move::Profile(i)) => (i, Some(w)),
                    _ => (0, None),
                }
            }
            Err(t) => (
                steps.choose(arena, sol, q, t, Round::Later).unwrap_or(0),
                None,
            ),
        };
        act.insert((cell, q), moves[q.index()][choice as usize].profile.clone());
        for q2 in &moves[q.index()][choice as usize].successors {
            let r = match outcome_from {
                Some(w) => {
                    let target = arena
                        .edges(w)
                        .find(|(mv, _)| *mv == Move::Outcome(*q2))
                        .map(|(_, x)| x)
                        .expect("outcome edge");
                    advance_to_step(arena, sol, target)
                }
                None => at[&cell],
            };
            let next = cell_of(r, &mut b, &mut at);
            update.insert((cell, *q2), next);
            if seen.insert((next, *q2)) {
                queue.push_back((next, *q2));
            }
        }
    }
    Transducer {
        level: MemoryLevel::TruthSeekerCounter,
        cells: b.cells,
        initial,
        start: BTreeMap::from([(from, start)]),
        update,
        act,
    }
}

/// Whether every path from `q` consistent with the transducer satisfies `body`.
pub fn verify_witness(
    m: &Cgm,
    coalition: &AgentSet,
    body: &PathFormula,
    labels: &Labeling,
    t: &Transducer,
    q: StateId,
) -> Result<bool, WitnessError> {
    let tracker = StatusTracker::new(m, body, labels)?;
    let moves: Vec<Vec<CoalitionMove>> = m
        .state_ids()
        .map(|s| m.coalition_moves(s, coalition))
        .collect();
    let name = |s: StateId| m.state_name(s).to_string();
    let start = *t
        .start
        .get(&q)
        .ok_or_else(|| WitnessError::MissingStart(name(q)))?;
    let first = (q, start, tracker.update(tracker.fresh(), q, 0), 0u8);

    let mut failure: Option<WitnessError> = None;
    let ok = cycles_satisfy(
        &[first],
        |&(s, cell, theta, stage)| {
            if failure.is_some() {
                return Vec::new();
            }
            let Some(profile) = t.act.get(&(cell, s)) else {
                failure = Some(WitnessError::MissingAction {
                    cell,
                    state: name(s),
                });
                return Vec::new();
            };
            let Some(mv) = moves[s.index()].iter().find(|mv| mv.profile == *profile) else {
                failure = Some(WitnessError::Inadmissible {
                    cell,
                    state: name(s),
                    profile: m.format_profile(profile),
                });
                return Vec::new();
            };
            let mut out = Vec::new();
            for s2 in &mv.successors {
                let Some(next) = t.update.get(&(cell, *s2)) else {
                    failure = Some(WitnessError::MissingUpdate {
                        cell,
                        state: name(*s2),
                    });
                    return Vec::new();
                };
                let step = stage as usize + 1;
                out.push((
                    *s2,
                    *next,
                    tracker.update(theta, *s2, step),
                    step.min(2) as u8,
                ));
            }
            out
        },
        |&(_, _, theta, _)| tracker.value(theta),
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(ok),
    }
}

// ---------------------------------------------------------------------------
// Witness documents

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CellEntry {
    Truth {
        truth: Vec<String>,
    },
    Position {
        truth: Vec<String>,
        seeker: String,
        counter: u8,
        round: String,
    },
    Finished {
        truth: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartEntry {
    pub state: String,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateEntry {
    pub cell: usize,
    pub state: String,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActEntry {
    pub cell: usize,
    pub state: String,
    pub profile: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransducerDocument {
    pub formula: String,
    pub atoms: Vec<String>,
    pub level: MemoryLevel,
    pub cells: Vec<CellEntry>,
    pub initial: usize,
    pub start: Vec<StartEntry>,
    pub update: Vec<UpdateEntry>,
    pub act: Vec<ActEntry>,
}

fn round_name(r: Round) -> &'static str {
    match r {
        Round::First => "first",
        Round::Second => "second",
        Round::Later => "later",
    }
}

impl Transducer {
    /// The document form, with names from `m`. `formula` is the strategic
    /// formula the witness is for.
    pub fn to_document(&self, m: &Cgm, formula: &str, body: &PathFormula) -> TransducerDocument {
        let atoms = crate::formula::PathAnalysis::new(body)
            .atoms
            .iter()
            .map(|a| a.to_string())
            .collect();
        let cells = self
            .cells
            .iter()
            .map(|c| match c {
                Cell::Truth(t) => CellEntry::Truth {
                    truth: t.to_names(),
                },
                Cell::Finished(t) => CellEntry::Finished {
                    truth: t.to_names(),
                },
                Cell::Position {
                    truth,
                    seeker,
                    counter,
                    round,
                } => CellEntry::Position {
                    truth: truth.to_names(),
                    seeker: seeker.short().to_string(),
                    counter: *counter,
                    round: round_name(*round).to_string(),
                },
            })
            .collect();
        TransducerDocument {
            formula: formula.to_string(),
            atoms,
            level: self.level,
            cells,
            initial: self.initial,
            start: self
                .start
                .iter()
                .map(|(q, c)| StartEntry {
                    state: m.state_name(*q).to_string(),
                    cell: *c,
                })
                .collect(),
            update: self
                .update
                .iter()
                .map(|((c, q), n)| UpdateEntry {
                    cell: *c,
                    state: m.state_name(*q).to_string(),
                    next: *n,
                })
                .collect(),
            act: self
                .act
                .iter()
                .map(|((c, q), p)| ActEntry {
                    cell: *c,
                    state: m.state_name(*q).to_string(),
                    profile: p
                        .agents
                        .iter()
                        .zip(&p.actions)
                        .map(|(a, x)| (m.agent_name(*a).to_string(), m.action_name(*x).to_string()))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(m: &Cgm, doc: &TransducerDocument) -> Result<Transducer, WitnessError> {
        let bad = |s: String| WitnessError::Document(s);
        let truth = |names: &[String]| {
            TruthFunction::from_names(names)
                .ok_or_else(|| bad(format!("bad truth function {names:?}")))
        };
        let state = |n: &str| {
            m.state_id(n)
                .ok_or_else(|| bad(format!("unknown state `{n}`")))
        };
        let mut cells = Vec::new();
        for c in &doc.cells {
            cells.push(match c {
                CellEntry::Truth { truth: t } => Cell::Truth(truth(t)?),
                CellEntry::Finished { truth: t } => Cell::Finished(truth(t)?),
                CellEntry::Position {
                    truth: t,
                    seeker,
                    counter,
                    round,
                } => Cell::Position {
                    truth: truth(t)?,
                    seeker: match seeker.as_str() {
                        "E" => Player::Eloise,
                        "A" => Player::Abelard,
                        other => return Err(bad(format!("unknown seeker `{other}`"))),
                    },
                    counter: *counter,
                    round: match round.as_str() {
                        "first" => Round::First,
                        "second" => Round::Second,
                        "later" => Round::Later,
                        other => return Err(bad(format!("unknown round `{other}`"))),
                    },
                },
            });
        }
        let check = |i: usize| {
            if i < cells.len() {
                Ok(i)
            } else {
                Err(bad(format!("cell {i} out of range")))
            }
        };
        let mut start = BTreeMap::new();
        for e in &doc.start {
            start.insert(state(&e.state)?, check(e.cell)?);
        }
        let mut update = BTreeMap::new();
        for e in &doc.update {
            update.insert((check(e.cell)?, state(&e.state)?), check(e.next)?);
        }
        let mut act = BTreeMap::new();
        for e in &doc.act {
            let mut agents = Vec::new();
            let mut actions = Vec::new();
            for (a, x) in &e.profile {
                agents.push(
                    m.agent_id(a)
                        .ok_or_else(|| bad(format!("unknown agent `{a}`")))?,
                );
                actions.push(
                    m.action_id(x)
                        .ok_or_else(|| bad(format!("unknown action `{x}`")))?,
                );
            }
            let mut pairs: Vec<_> = agents.into_iter().zip(actions).collect();
            pairs.sort();
            act.insert(
                (check(e.cell)?, state(&e.state)?),
                ActionProfile {
                    agents: pairs.iter().map(|p| p.0).collect(),
                    actions: pairs.iter().map(|p| p.1).collect(),
                },
            );
        }
        Ok(Transducer {
            level: doc.level,
            initial: check(doc.initial)?,
            cells,
            start,
            update,
            act,
        })
    }
}
