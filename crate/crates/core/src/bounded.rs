//! Timed evaluation games solved by backward induction.
//!
//! Every seeker turn carries a timer that must strictly decrease on each
//! continuation, so all plays are finite and the game can be solved by plain
//! AND-OR search. Nothing is precomputed: challenged claims and nested
//! strategic formulas are evaluated by recursively playing their own games,
//! with either player as the verifier.

use std::collections::HashMap;

use thiserror::Error;

use crate::arena::{
    ArenaError, ClaimKind, Config, DecideStage, Move, PhaseDetail, Successor, TransitionGame,
};
use crate::buchi::Player;
use crate::cgm::{Cgm, ModelError, StateId};
use crate::formula::{PathFormula, StateFormula};

/// How a player picks the new timer value when the rules allow any smaller one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimerPolicy {
    /// Always the largest admissible value.
    #[default]
    CanonicalMax,
    /// Every admissible value is a separate move.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundedOptions {
    pub policy: TimerPolicy,
    pub memoize: bool,
}

impl BoundedOptions {
    pub fn memoized() -> Self {
        BoundedOptions {
            memoize: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum BoundedError {
    #[error("the timer bound must be at least 1")]
    ZeroTimer,
    #[error("proposition `{0}` is not declared by the model")]
    UnknownProposition(String),
    #[error("relative atom `{0}` is not in the domain of the truth function")]
    MissingAtom(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Arena(#[from] ArenaError),
}

/// `|St| · |At(Φ)|`, a timer bound beyond which more time changes no winner.
pub fn stable_timer(m: &Cgm, body: &PathFormula) -> usize {
    m.num_states() * crate::formula::PathAnalysis::new(body).len()
}

/// Whether Eloise wins the timed evaluation game of `phi` at `q` with timer
/// bound `timer`.
pub fn bounded_check(
    m: &Cgm,
    phi: &StateFormula,
    q: StateId,
    timer: usize,
    options: BoundedOptions,
) -> Result<bool, BoundedError> {
    BoundedEvaluator::new(m, timer, options)?.wins(Player::Eloise, q, phi)
}

type GameKey = (StateFormula, Player);

/// How the timer bound of each transition game is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerBound {
    /// The same bound for every game.
    Fixed(usize),
    /// `factor · |St| · |At(Φ)|` for the game of `<<A>> Φ`.
    Stable { factor: usize },
}

/// Evaluation context shared by all queries against one model and timer bound.
pub struct BoundedEvaluator<'m> {
    model: &'m Cgm,
    bound: TimerBound,
    options: BoundedOptions,
    game_ids: HashMap<GameKey, u32>,
    games: Vec<TransitionGame<'m>>,
    timers: Vec<u32>,
    config_memo: HashMap<(u32, Config, u32), Player>,
    location_memo: HashMap<(StateFormula, Player, StateId), bool>,
    visited: u64,
}

impl<'m> BoundedEvaluator<'m> {
    pub fn new(
        model: &'m Cgm,
        timer: usize,
        options: BoundedOptions,
    ) -> Result<Self, BoundedError> {
        Self::with_bound(model, TimerBound::Fixed(timer), options)
    }

    pub fn with_bound(
        model: &'m Cgm,
        bound: TimerBound,
        options: BoundedOptions,
    ) -> Result<Self, BoundedError> {
        if matches!(
            bound,
            TimerBound::Fixed(0) | TimerBound::Stable { factor: 0 }
        ) {
            return Err(BoundedError::ZeroTimer);
        }
        Ok(BoundedEvaluator {
            model,
            bound,
            options,
            game_ids: HashMap::new(),
            games: Vec::new(),
            timers: Vec::new(),
            config_memo: HashMap::new(),
            location_memo: HashMap::new(),
            visited: 0,
        })
    }

    /// Entries in the memo tables.
    pub fn memo_size(&self) -> usize {
        self.config_memo.len() + self.location_memo.len()
    }

    /// Game positions evaluated so far, counting repeats.
    pub fn visited(&self) -> u64 {
        self.visited
    }

    pub fn eval_all(&mut self, phi: &StateFormula) -> Result<Vec<bool>, BoundedError> {
        self.model
            .state_ids()
            .map(|q| self.wins(Player::Eloise, q, phi))
            .collect()
    }

    /// Whether `verifier` wins the evaluation game at location `(verifier, q, phi)`.
    pub fn wins(
        &mut self,
        verifier: Player,
        q: StateId,
        phi: &StateFormula,
    ) -> Result<bool, BoundedError> {
        Ok(match phi {
            StateFormula::True => true,
            StateFormula::Prop(p) => self
                .model
                .holds(p, q)
                .ok_or_else(|| BoundedError::UnknownProposition(p.clone()))?,
            StateFormula::Not(a) => !self.wins(verifier.opponent(), q, a)?,
            StateFormula::Or(a, b) => self.wins(verifier, q, a)? || self.wins(verifier, q, b)?,
            StateFormula::And(a, b) => self.wins(verifier, q, a)? && self.wins(verifier, q, b)?,
            StateFormula::Implies(a, b) => {
                !self.wins(verifier.opponent(), q, a)? || self.wins(verifier, q, b)?
            }
            StateFormula::Coalition(c, body) => {
                let key = (phi.clone(), verifier, q);
                if self.options.memoize {
                    if let Some(v) = self.location_memo.get(&key) {
                        return Ok(*v);
                    }
                }
                let id = self.game_id(phi, verifier, c, body)?;
                let start = self.games[id as usize].initial(q);
                let won = self.solve(id, start, self.timers[id as usize])? == verifier;
                if self.options.memoize {
                    self.location_memo.insert(key, won);
                }
                won
            }
        })
    }

    fn game_id(
        &mut self,
        phi: &StateFormula,
        verifier: Player,
        coalition: &crate::formula::Coalition,
        body: &PathFormula,
    ) -> Result<u32, BoundedError> {
        let key = (phi.clone(), verifier);
        if let Some(id) = self.game_ids.get(&key) {
            return Ok(*id);
        }
        let agents = self.model.resolve_coalition(coalition)?;
        let game = TransitionGame::new(self.model, agents, body, verifier)?;
        let id = self.games.len() as u32;
        let timer = match self.bound {
            TimerBound::Fixed(t) => t,
            TimerBound::Stable { factor } => factor * stable_timer(self.model, body),
        };
        self.timers.push(timer as u32);
        self.games.push(game);
        self.game_ids.insert(key, id);
        Ok(id)
    }

    fn timers_after(&self, id: u32, mv: Move, gamma: u32) -> Vec<u32> {
        let below = |bound: u32| match self.options.policy {
            TimerPolicy::CanonicalMax => vec![bound - 1],
            TimerPolicy::Exhaustive => (0..bound).rev().collect(),
        };
        match mv {
            Move::Continue => below(gamma),
            Move::TakeOver => below(self.timers[id as usize]),
            _ => vec![gamma],
        }
    }

    /// Winner of the timed transition game `id` from configuration `c` with
    /// timer `gamma`.
    fn solve(&mut self, id: u32, c: Config, gamma: u32) -> Result<Player, BoundedError> {
        let key = (id, c, gamma);
        if self.options.memoize {
            if let Some(p) = self.config_memo.get(&key) {
                return Ok(*p);
            }
        }
        self.visited += 1;
        let game = &self.games[id as usize];
        let owner = game.owner(&c);
        let verifier = game.verifier();
        let mut moves = game.moves(&c);
        if c.detail == PhaseDetail::Decide(DecideStage::SeekerChoice) && gamma == 0 {
            moves.retain(|(mv, _)| *mv != Move::Continue);
        }

        let mut result = owner.opponent();
        'moves: for (mv, succ) in moves {
            for g in self.timers_after(id, mv, gamma) {
                let winner = match succ {
                    Successor::Config(next) => self.solve(id, next, g)?,
                    Successor::Challenge {
                        claimant,
                        state,
                        atom,
                        kind,
                    } => {
                        let claim = self.claim(id, atom, kind);
                        if self.wins(claimant, state, &claim)? {
                            claimant
                        } else {
                            claimant.opponent()
                        }
                    }
                    Successor::Exit { truth, .. } => {
                        let game = &self.games[id as usize];
                        if truth.len() != game.num_atoms() {
                            return Err(BoundedError::MissingAtom(
                                game.analysis()
                                    .atoms
                                    .get(truth.len())
                                    .map_or_else(String::new, |a| a.to_string()),
                            ));
                        }
                        if game.exit_value(truth) {
                            verifier
                        } else {
                            verifier.opponent()
                        }
                    }
                };
                if winner == owner {
                    result = owner;
                    break 'moves;
                }
            }
        }
        if self.options.memoize {
            self.config_memo.insert(key, result);
        }
        Ok(result)
    }

    fn claim(&self, id: u32, atom: usize, kind: ClaimKind) -> StateFormula {
        self.games[id as usize].claimed_formula(atom, kind)
    }
}
