//! Reference semantics that never play the evaluation game.
//!
//! These engines read the logic directly: finite-path truth, the classical
//! fixpoint labelling for formulas with one relative atom per strategic
//! subformula, a game over (state, atom status) pairs, and exhaustive search
//! over positional strategies. They share no solver code with the game-based
//! engines so that agreement between the two is meaningful.

use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hash;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::arena::{Status, TruthFunction, MAX_ATOMS};
use crate::cgm::{AgentSet, Cgm, CoalitionMove, FinitePath, ModelError, StateId};
use crate::formula::{fragment_width, PathAnalysis, PathFormula, RelativeAtom, StateFormula};
use crate::labeling::{LabelError, Labeling};

/// Upper limit on the number of positional strategies enumerated.
pub const POSITIONAL_GUARD: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("formula has width {0}; the fixpoint labelling handles width at most 1")]
    WidthTooLarge(usize),
    #[error("{0} positional strategies exceed the limit of {POSITIONAL_GUARD}")]
    GuardExceeded(u128),
    #[error("path formula has {0} relative atoms; at most {MAX_ATOMS} are supported")]
    TooManyAtoms(usize),
    #[error("lasso is not a path of the model")]
    BadLasso,
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// Atom status

/// Deterministic, label-driven status updates for the atoms of one path formula.
#[derive(Debug, Clone)]
pub struct StatusTracker {
    analysis: PathAnalysis,
    /// `goal[a][q]`: the state atom itself, `ψ` of `X ψ`, or `ψ` of `φ U ψ`.
    goal: Vec<Vec<bool>>,
    /// `hold[a][q]`: `φ` of `φ U ψ`; unused for other atoms.
    hold: Vec<Vec<bool>>,
}

impl StatusTracker {
    pub fn new(m: &Cgm, body: &PathFormula, labels: &Labeling) -> Result<Self, OracleError> {
        let analysis = PathAnalysis::new(body);
        if analysis.len() > MAX_ATOMS {
            return Err(OracleError::TooManyAtoms(analysis.len()));
        }
        let mut goal = Vec::new();
        let mut hold = Vec::new();
        for atom in &analysis.atoms {
            let (g, h) = match atom {
                RelativeAtom::State(chi) => (labels.eval_all(m, chi)?, Vec::new()),
                RelativeAtom::Next(psi) => (labels.eval_all(m, psi)?, Vec::new()),
                RelativeAtom::Until(phi, psi) => {
                    (labels.eval_all(m, psi)?, labels.eval_all(m, phi)?)
                }
            };
            goal.push(g);
            hold.push(h);
        }
        Ok(StatusTracker {
            analysis,
            goal,
            hold,
        })
    }

    pub fn analysis(&self) -> &PathAnalysis {
        &self.analysis
    }

    pub fn fresh(&self) -> TruthFunction {
        TruthFunction::all_open(self.analysis.len())
    }

    /// Status after visiting `q` as the `step`-th state of a path (from 0).
    pub fn update(&self, theta: TruthFunction, q: StateId, step: usize) -> TruthFunction {
        let mut out = theta;
        for (i, atom) in self.analysis.atoms.iter().enumerate() {
            if theta.get(i) != Status::Open {
                continue;
            }
            let g = self.goal[i][q.index()];
            let s = match atom {
                RelativeAtom::State(_) if step == 0 => Some(g),
                RelativeAtom::Next(_) if step == 1 => Some(g),
                RelativeAtom::Until(..) => {
                    if g {
                        Some(true)
                    } else if !self.hold[i][q.index()] {
                        Some(false)
                    } else {
                        None
                    }
                }
                _ => None,
            };
            if let Some(v) = s {
                out = out.with(i, if v { Status::True } else { Status::False });
            }
        }
        out
    }

    /// Truth of the path formula when the status no longer changes.
    pub fn value(&self, theta: TruthFunction) -> bool {
        self.analysis
            .skeleton
            .eval(&|i| theta.get(i) == Status::True)
    }
}

// ---------------------------------------------------------------------------
// Finite paths and lassos

/// Truth of a path formula on a finite path, clause by clause.
pub fn eval_finite_path(
    m: &Cgm,
    path: &FinitePath,
    phi: &PathFormula,
    labels: &Labeling,
) -> Result<bool, OracleError> {
    eval_prefix(m, path.states(), phi, labels)
}

fn eval_prefix(
    m: &Cgm,
    lambda: &[StateId],
    phi: &PathFormula,
    labels: &Labeling,
) -> Result<bool, OracleError> {
    let at = |s: &StateFormula, i: usize| labels.eval(m, s, lambda[i]);
    let lgt = lambda.len() - 1;
    Ok(match phi {
        PathFormula::State(s) => at(s, 0)?,
        PathFormula::Not(a) => !eval_prefix(m, lambda, a, labels)?,
        PathFormula::Or(a, b) => {
            eval_prefix(m, lambda, a, labels)? || eval_prefix(m, lambda, b, labels)?
        }
        PathFormula::Next(s) => lgt >= 1 && at(s, 1)?,
        PathFormula::Until(a, b) => {
            let mut holds = false;
            for i in 0..=lgt {
                if at(b, i)? {
                    holds = true;
                    break;
                }
                if !at(a, i)? {
                    break;
                }
            }
            holds
        }
        derived => eval_prefix(m, lambda, &derived.expand(), labels)?,
    })
}

/// The infinite path `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<StateId>,
    pub cycle: Vec<StateId>,
}

impl Lasso {
    pub fn new(m: &Cgm, prefix: Vec<StateId>, cycle: Vec<StateId>) -> Result<Lasso, OracleError> {
        if cycle.is_empty() {
            return Err(OracleError::BadLasso);
        }
        let mut unrolled = prefix.clone();
        unrolled.extend(&cycle);
        unrolled.push(cycle[0]);
        FinitePath::new(m, unrolled).map_err(|_| OracleError::BadLasso)?;
        Ok(Lasso { prefix, cycle })
    }

    pub fn state(&self, i: usize) -> StateId {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// The first `len` states.
    pub fn take(&self, len: usize) -> Vec<StateId> {
        (0..len).map(|i| self.state(i)).collect()
    }
}

/// Number of prefix lengths `i ≥ 1` at which finite-path truth differs
/// between the prefixes with `i − 1` and `i` transitions.
pub fn tsn(
    m: &Cgm,
    lasso: &Lasso,
    phi: &PathFormula,
    labels: &Labeling,
) -> Result<usize, OracleError> {
    let k = PathAnalysis::new(phi).len();
    let horizon = lasso.prefix.len() + (k + 1) * lasso.cycle.len() + 1;
    let states = lasso.take(horizon + 1);
    let mut swaps = 0;
    let mut last = eval_prefix(m, &states[..1], phi, labels)?;
    for i in 1..=horizon {
        let now = eval_prefix(m, &states[..=i], phi, labels)?;
        if now != last {
            swaps += 1;
        }
        last = now;
    }
    Ok(swaps)
}

/// Truth of a path formula on a lasso, read from the stable atom status.
pub fn lasso_truth(
    m: &Cgm,
    lasso: &Lasso,
    phi: &PathFormula,
    labels: &Labeling,
) -> Result<bool, OracleError> {
    let tracker = StatusTracker::new(m, phi, labels)?;
    let mut theta = tracker.fresh();
    // Two passes over the cycle settle every atom that will ever settle.
    let horizon = lasso.prefix.len() + 2 * lasso.cycle.len() + 2;
    for i in 0..horizon {
        theta = tracker.update(theta, lasso.state(i), i);
    }
    Ok(tracker.value(theta))
}

// ---------------------------------------------------------------------------
// Fixpoint labelling

fn forcing(m: &Cgm, moves: &[Vec<CoalitionMove>], target: &[bool]) -> Vec<bool> {
    m.state_ids()
        .map(|q| {
            moves[q.index()]
                .iter()
                .any(|mv| mv.successors.iter().all(|s| target[s.index()]))
        })
        .collect()
}

/// Classical labelling for formulas whose strategic subformulas have a single
/// relative atom each.
pub fn atl_fixpoint_label(m: &Cgm, phi: &StateFormula) -> Result<Vec<bool>, OracleError> {
    let width = fragment_width(phi).width;
    if width > 1 {
        return Err(OracleError::WidthTooLarge(width));
    }
    fixpoint_state(m, phi)
}

fn fixpoint_state(m: &Cgm, phi: &StateFormula) -> Result<Vec<bool>, OracleError> {
    let n = m.num_states();
    Ok(match phi {
        StateFormula::True => vec![true; n],
        StateFormula::Prop(p) => m
            .state_ids()
            .map(|q| {
                m.holds(p, q)
                    .ok_or_else(|| LabelError::UnknownProposition(p.clone()))
            })
            .collect::<Result<_, _>>()?,
        StateFormula::Not(a) => fixpoint_state(m, a)?.into_iter().map(|x| !x).collect(),
        StateFormula::Or(a, b) => zip(fixpoint_state(m, a)?, fixpoint_state(m, b)?, |x, y| x || y),
        StateFormula::And(a, b) => zip(fixpoint_state(m, a)?, fixpoint_state(m, b)?, |x, y| x && y),
        StateFormula::Implies(a, b) => {
            zip(fixpoint_state(m, a)?, fixpoint_state(m, b)?, |x, y| !x || y)
        }
        StateFormula::Coalition(c, body) => {
            let analysis = PathAnalysis::new(body);
            let [atom] = analysis.atoms.as_slice() else {
                return Err(OracleError::WidthTooLarge(analysis.len()));
            };
            let when_true = analysis.skeleton.eval(&|_| true);
            let when_false = analysis.skeleton.eval(&|_| false);
            if when_true == when_false {
                return Ok(vec![when_true; n]);
            }
            let positive = when_true;
            let agents = m.resolve_coalition(c)?;
            let moves: Vec<Vec<CoalitionMove>> = m
                .state_ids()
                .map(|q| m.coalition_moves(q, &agents))
                .collect();
            match atom {
                RelativeAtom::State(chi) => {
                    let v = fixpoint_state(m, chi)?;
                    v.into_iter().map(|x| x == positive).collect()
                }
                RelativeAtom::Next(psi) => {
                    let v: Vec<bool> = fixpoint_state(m, psi)?
                        .into_iter()
                        .map(|x| x == positive)
                        .collect();
                    forcing(m, &moves, &v)
                }
                RelativeAtom::Until(a, b) => {
                    let hold = fixpoint_state(m, a)?;
                    let goal = fixpoint_state(m, b)?;
                    if positive {
                        // μZ. goal ∨ (hold ∧ Pre Z)
                        let mut z = vec![false; n];
                        loop {
                            let pre = forcing(m, &moves, &z);
                            let next: Vec<bool> =
                                (0..n).map(|q| goal[q] || (hold[q] && pre[q])).collect();
                            if next == z {
                                break z;
                            }
                            z = next;
                        }
                    } else {
                        // νZ. ¬goal ∧ (¬hold ∨ Pre Z)
                        let mut z = vec![true; n];
                        loop {
                            let pre = forcing(m, &moves, &z);
                            let next: Vec<bool> =
                                (0..n).map(|q| !goal[q] && (!hold[q] || pre[q])).collect();
                            if next == z {
                                break z;
                            }
                            z = next;
                        }
                    }
                }
            }
        }
    })
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

// ---------------------------------------------------------------------------
// Status game

/// A state together with the atom status of the path so far. `stage` is the
/// index of the current state on the path, saturated at 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductNode {
    pub state: StateId,
    pub status: TruthFunction,
    pub stage: u8,
}

fn advance(tracker: &StatusTracker, node: ProductNode, to: StateId) -> ProductNode {
    let step = node.stage as usize + 1;
    ProductNode {
        state: to,
        status: tracker.update(node.status, to, step),
        stage: step.min(2) as u8,
    }
}

/// Whether the coalition can enforce the path formula from every state.
///
/// The game is played on product nodes; since the status only grows, every
/// play ends in a stratum of constant (status, stage). Strata are solved from
/// the most determined down: inside one, Eloise either wants to stay forever
/// (the status already satisfies the formula: a safety objective) or to leave
/// into a winning node (a reachability objective).
pub fn status_game_all(
    m: &Cgm,
    coalition: &AgentSet,
    body: &PathFormula,
    labels: &Labeling,
) -> Result<Vec<bool>, OracleError> {
    let tracker = StatusTracker::new(m, body, labels)?;
    let moves: Vec<Vec<CoalitionMove>> = m
        .state_ids()
        .map(|q| m.coalition_moves(q, coalition))
        .collect();

    let starts: Vec<ProductNode> = m
        .state_ids()
        .map(|q| ProductNode {
            state: q,
            status: tracker.update(tracker.fresh(), q, 0),
            stage: 0,
        })
        .collect();

    // Reachable product nodes and their successors per coalition move.
    let mut index: HashMap<ProductNode, usize> = HashMap::new();
    let mut nodes: Vec<ProductNode> = Vec::new();
    let mut queue = VecDeque::new();
    for s in &starts {
        if !index.contains_key(s) {
            index.insert(*s, nodes.len());
            nodes.push(*s);
            queue.push_back(*s);
        }
    }
    let mut succ: HashMap<usize, Vec<Vec<usize>>> = HashMap::new();
    while let Some(node) = queue.pop_front() {
        let id = index[&node];
        let mut per_move = Vec::new();
        for mv in &moves[node.state.index()] {
            let mut targets = Vec::new();
            for q in &mv.successors {
                let next = advance(&tracker, node, *q);
                let nid = *index.entry(next).or_insert_with(|| {
                    nodes.push(next);
                    queue.push_back(next);
                    nodes.len() - 1
                });
                targets.push(nid);
            }
            per_move.push(targets);
        }
        succ.insert(id, per_move);
    }

    let mut strata: HashMap<(TruthFunction, u8), Vec<usize>> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        strata.entry((n.status, n.stage)).or_default().push(i);
    }
    let mut order: Vec<(TruthFunction, u8)> = strata.keys().copied().collect();
    order.sort_by_key(|(t, s)| {
        (
            std::cmp::Reverse(t.len() - t.open_count()),
            std::cmp::Reverse(*s),
            *t,
        )
    });

    let mut win = vec![false; nodes.len()];
    let mut done = vec![false; nodes.len()];
    for key in order {
        let members = &strata[&key];
        let inside: HashSet<usize> = members.iter().copied().collect();
        let safe = tracker.value(key.0);
        let mut z: HashSet<usize> = if safe { inside.clone() } else { HashSet::new() };
        loop {
            let next: HashSet<usize> = members
                .iter()
                .copied()
                .filter(|v| {
                    succ[v].iter().any(|targets| {
                        targets.iter().all(|t| {
                            if inside.contains(t) {
                                z.contains(t)
                            } else {
                                debug_assert!(done[*t], "successor strata are solved first");
                                win[*t]
                            }
                        })
                    })
                })
                .collect();
            if next == z {
                break;
            }
            z = next;
        }
        for v in members {
            win[*v] = z.contains(v);
            done[*v] = true;
        }
    }
    Ok(starts.iter().map(|s| win[index[s]]).collect())
}

pub fn status_game_check(
    m: &Cgm,
    coalition: &AgentSet,
    body: &PathFormula,
    labels: &Labeling,
    q: StateId,
) -> Result<bool, OracleError> {
    Ok(status_game_all(m, coalition, body, labels)?[q.index()])
}

// ---------------------------------------------------------------------------
// Cycle test and positional strategies

/// Explores the graph reachable from `starts` and checks that every cycle
/// (every nontrivial strongly connected component) is `good`. Nodes on one
/// cycle share their status, so checking one node per component suffices.
pub fn cycles_satisfy<N, S, G>(starts: &[N], mut successors: S, good: G) -> bool
where
    N: Copy + Eq + Hash,
    S: FnMut(&N) -> Vec<N>,
    G: Fn(&N) -> bool,
{
    let mut graph: DiGraph<N, ()> = DiGraph::new();
    let mut index: HashMap<N, NodeIndex> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in starts {
        if !index.contains_key(s) {
            index.insert(*s, graph.add_node(*s));
            queue.push_back(*s);
        }
    }
    while let Some(n) = queue.pop_front() {
        let from = index[&n];
        for next in successors(&n) {
            let to = *index.entry(next).or_insert_with(|| {
                queue.push_back(next);
                graph.add_node(next)
            });
            graph.update_edge(from, to, ());
        }
    }
    tarjan_scc(&graph).into_iter().all(|scc| {
        let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        !cyclic || good(&graph[scc[0]])
    })
}

/// Whether some memoryless coalition strategy enforces the path formula from `q`.
pub fn positional_bruteforce(
    m: &Cgm,
    coalition: &AgentSet,
    body: &PathFormula,
    labels: &Labeling,
    q: StateId,
) -> Result<bool, OracleError> {
    let tracker = StatusTracker::new(m, body, labels)?;
    let moves: Vec<Vec<CoalitionMove>> = m
        .state_ids()
        .map(|s| m.coalition_moves(s, coalition))
        .collect();
    let radix: Vec<usize> = moves.iter().map(Vec::len).collect();
    let total: u128 = radix.iter().map(|r| *r as u128).product();
    if total > POSITIONAL_GUARD as u128 {
        return Err(OracleError::GuardExceeded(total));
    }
    let start = ProductNode {
        state: q,
        status: tracker.update(tracker.fresh(), q, 0),
        stage: 0,
    };
    let mut choice = vec![0usize; radix.len()];
    for _ in 0..total {
        let passes = cycles_satisfy(
            &[start],
            |n| {
                moves[n.state.index()][choice[n.state.index()]]
                    .successors
                    .iter()
                    .map(|s| advance(&tracker, *n, *s))
                    .collect()
            },
            |n| tracker.value(n.status),
        );
        if passes {
            return Ok(true);
        }
        for (c, r) in choice.iter_mut().zip(&radix).rev() {
            *c += 1;
            if *c < *r {
                break;
            }
            *c = 0;
        }
    }
    Ok(false)
}
