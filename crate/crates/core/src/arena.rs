//! Transition games for one strategic formula `<<A>> Φ` and their explicit
//! position graphs.
//!
//! [`TransitionGame`] holds the rules: which moves exist at a configuration
//! and where they lead. Claims that are challenged and the final Boolean
//! evaluation leave the game; how those exits are settled is up to the
//! caller. [`Arena`] settles them with precomputed labels and explores the
//! untimed game exhaustively, producing a Büchi game for Abelard.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::buchi::{GameError, GameGraph, Player};
use crate::cgm::{AgentSet, Cgm, CoalitionMove, StateId};
use crate::formula::{AtomKind, PathAnalysis, PathFormula, RelativeAtom, StateFormula};
use crate::labeling::{LabelError, Labeling};

pub const MAX_ATOMS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Open,
    True,
    False,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Open => "open",
            Status::True => "true",
            Status::False => "false",
        }
    }

    pub fn from_name(s: &str) -> Option<Status> {
        match s {
            "open" => Some(Status::Open),
            "true" => Some(Status::True),
            "false" => Some(Status::False),
            _ => None,
        }
    }
}

/// Status of every relative atom, two bits per atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthFunction {
    bits: u64,
    len: u8,
}

impl TruthFunction {
    pub fn all_open(len: usize) -> Self {
        assert!(len <= MAX_ATOMS, "at most {MAX_ATOMS} atoms");
        TruthFunction {
            bits: 0,
            len: len as u8,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Status {
        debug_assert!(i < self.len());
        match (self.bits >> (2 * i)) & 3 {
            0 => Status::Open,
            1 => Status::True,
            _ => Status::False,
        }
    }

    /// Returns a copy with atom `i` set. Determined atoms never change.
    pub fn with(self, i: usize, s: Status) -> Self {
        debug_assert!(self.get(i) == Status::Open || self.get(i) == s);
        let code = match s {
            Status::Open => 0,
            Status::True => 1,
            Status::False => 2,
        };
        TruthFunction {
            bits: (self.bits & !(3 << (2 * i))) | (code << (2 * i)),
            len: self.len,
        }
    }

    pub fn statuses(&self) -> impl Iterator<Item = Status> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn open_count(&self) -> usize {
        self.statuses().filter(|s| *s == Status::Open).count()
    }

    pub fn is_determined(&self) -> bool {
        self.open_count() == 0
    }

    /// Every atom determined here has the same status in `other`.
    pub fn refines_to(&self, other: &TruthFunction) -> bool {
        self.len == other.len
            && self
                .statuses()
                .zip(other.statuses())
                .all(|(a, b)| a == Status::Open || a == b)
    }

    pub fn to_names(&self) -> Vec<String> {
        self.statuses().map(|s| s.name().to_string()).collect()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Option<Self> {
        if names.len() > MAX_ATOMS {
            return None;
        }
        let mut t = TruthFunction::all_open(names.len());
        for (i, n) in names.iter().enumerate() {
            t = t.with(i, Status::from_name(n.as_ref())?);
        }
        Some(t)
    }
}

impl fmt::Display for TruthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.statuses() {
            f.write_str(match s {
                Status::Open => "?",
                Status::True => "T",
                Status::False => "F",
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Round {
    First,
    Second,
    Later,
}

impl Round {
    pub fn next(self) -> Round {
        match self {
            Round::First => Round::Second,
            _ => Round::Later,
        }
    }
}

/// Sub-steps of the adjustment of one atom, in the order they are offered.
/// `Ver` claims assert the atom's goal formula, `Fal` claims assert that the
/// left argument of an until fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdjustStage {
    VerifierOffersVer,
    FalsifierRespondsVer,
    FalsifierOffersVer,
    VerifierRespondsVer,
    VerifierOffersFal,
    FalsifierRespondsFal,
    FalsifierOffersFal,
    VerifierRespondsFal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecideStage {
    SeekerChoice,
    OpponentChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepStage {
    VerifierPicks,
    /// Index into the coalition moves at the current state.
    FalsifierPicks(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseDetail {
    Adjust { atom: u8, stage: AdjustStage },
    Decide(DecideStage),
    Step(StepStage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub seeker: Player,
    pub state: StateId,
    pub truth: TruthFunction,
    pub counter: u8,
    pub round: Round,
    pub detail: PhaseDetail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Config(Config),
    /// The final Boolean evaluation of `Φ` under `truth`.
    Exit {
        verifier: Player,
        state: StateId,
        truth: TruthFunction,
    },
    Ending(Player),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Claim,
    Pass,
    Accept,
    Challenge,
    Continue,
    Stop,
    TakeOver,
    EndGame,
    Profile(u32),
    Outcome(StateId),
    Resolve,
    Stay,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Claim => f.write_str("claim"),
            Move::Pass => f.write_str("pass"),
            Move::Accept => f.write_str("accept"),
            Move::Challenge => f.write_str("challenge"),
            Move::Continue => f.write_str("continue"),
            Move::Stop => f.write_str("stop"),
            Move::TakeOver => f.write_str("takeover"),
            Move::EndGame => f.write_str("endgame"),
            Move::Profile(i) => write!(f, "profile:{i}"),
            Move::Outcome(q) => write!(f, "outcome:{}", q.0),
            Move::Resolve => f.write_str("resolve"),
            Move::Stay => f.write_str("stay"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClaimKind {
    /// The atom's goal (`ψ` of `φ U ψ` or `X ψ`, or a state atom itself) holds.
    Verify,
    /// The left argument of an until fails.
    Falsify,
}

/// Where a move leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Successor {
    Config(Config),
    /// A challenged claim: the claimant wins iff the claimed formula holds.
    Challenge {
        claimant: Player,
        state: StateId,
        atom: usize,
        kind: ClaimKind,
    },
    /// The game ended; `Φ` is evaluated under `truth`.
    Exit {
        state: StateId,
        truth: TruthFunction,
    },
}

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("path formula has {0} relative atoms; at most {MAX_ATOMS} are supported")]
    TooManyAtoms(usize),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// The rules of one transition game.
#[derive(Debug, Clone)]
pub struct TransitionGame<'m> {
    model: &'m Cgm,
    coalition: AgentSet,
    analysis: PathAnalysis,
    verifier: Player,
    moves: Vec<Vec<CoalitionMove>>,
}

impl<'m> TransitionGame<'m> {
    pub fn new(
        model: &'m Cgm,
        coalition: AgentSet,
        body: &PathFormula,
        verifier: Player,
    ) -> Result<Self, ArenaError> {
        let analysis = PathAnalysis::new(body);
        if analysis.len() > MAX_ATOMS {
            return Err(ArenaError::TooManyAtoms(analysis.len()));
        }
        let moves = model
            .state_ids()
            .map(|q| model.coalition_moves(q, &coalition))
            .collect();
        Ok(TransitionGame {
            model,
            coalition,
            analysis,
            verifier,
            moves,
        })
    }

    pub fn model(&self) -> &'m Cgm {
        self.model
    }

    pub fn analysis(&self) -> &PathAnalysis {
        &self.analysis
    }

    pub fn coalition(&self) -> &AgentSet {
        &self.coalition
    }

    pub fn verifier(&self) -> Player {
        self.verifier
    }

    pub fn coalition_moves(&self, q: StateId) -> &[CoalitionMove] {
        &self.moves[q.index()]
    }

    pub fn num_atoms(&self) -> usize {
        self.analysis.len()
    }

    /// The initial configuration at `q`: the verifier seeks, nothing is known.
    pub fn initial(&self, q: StateId) -> Config {
        let k = self.num_atoms();
        self.adjust_from(
            self.verifier,
            q,
            TruthFunction::all_open(k),
            k as u8,
            Round::First,
            0,
        )
    }

    fn applicable(&self, atom: usize, truth: TruthFunction, round: Round) -> bool {
        truth.get(atom) == Status::Open
            && match self.analysis.atoms[atom].kind() {
                AtomKind::StateAtom => round == Round::First,
                AtomKind::NextAtom => round == Round::Second,
                AtomKind::UntilAtom => true,
            }
    }

    /// The first adjustable atom at or after `from`, or the decision phase if
    /// there is none.
    fn adjust_from(
        &self,
        seeker: Player,
        state: StateId,
        truth: TruthFunction,
        counter: u8,
        round: Round,
        from: usize,
    ) -> Config {
        let detail = (from..self.num_atoms())
            .find(|i| self.applicable(*i, truth, round))
            .map_or(PhaseDetail::Decide(DecideStage::SeekerChoice), |atom| {
                PhaseDetail::Adjust {
                    atom: atom as u8,
                    stage: AdjustStage::VerifierOffersVer,
                }
            });
        Config {
            seeker,
            state,
            truth,
            counter,
            round,
            detail,
        }
    }

    pub fn owner(&self, c: &Config) -> Player {
        use AdjustStage::*;
        let v = self.verifier;
        match c.detail {
            PhaseDetail::Adjust { stage, .. } => match stage {
                VerifierOffersVer | VerifierRespondsVer | VerifierOffersFal
                | VerifierRespondsFal => v,
                _ => v.opponent(),
            },
            PhaseDetail::Decide(DecideStage::SeekerChoice) => c.seeker,
            PhaseDetail::Decide(DecideStage::OpponentChoice) => c.seeker.opponent(),
            PhaseDetail::Step(StepStage::VerifierPicks) => v,
            PhaseDetail::Step(StepStage::FalsifierPicks(_)) => v.opponent(),
        }
    }

    /// The state formula a claim asserts.
    pub fn claimed_formula(&self, atom: usize, kind: ClaimKind) -> StateFormula {
        match (&self.analysis.atoms[atom], kind) {
            (RelativeAtom::State(chi), ClaimKind::Verify) => chi.clone(),
            (RelativeAtom::Next(psi), ClaimKind::Verify) => psi.clone(),
            (RelativeAtom::Until(_, psi), ClaimKind::Verify) => psi.clone(),
            (RelativeAtom::Until(phi, _), ClaimKind::Falsify) => phi.clone().not(),
            (atom, ClaimKind::Falsify) => panic!("no falsification claims on {atom}"),
        }
    }

    /// Truth of `Φ` when every atom reads true iff its status is `True`.
    pub fn exit_value(&self, truth: TruthFunction) -> bool {
        self.analysis
            .skeleton
            .eval(&|i| truth.get(i) == Status::True)
    }

    /// Every legal move at `c` with its successor.
    pub fn moves(&self, c: &Config) -> Vec<(Move, Successor)> {
        use AdjustStage::*;
        let v = self.verifier;
        let at = |detail| Successor::Config(Config { detail, ..*c });
        match c.detail {
            PhaseDetail::Adjust { atom, stage } => {
                let a = atom as usize;
                let stage_at = |s| at(PhaseDetail::Adjust { atom, stage: s });
                let after = |truth: TruthFunction| {
                    Successor::Config(self.adjust_from(
                        c.seeker,
                        c.state,
                        truth,
                        c.counter,
                        c.round,
                        a + 1,
                    ))
                };
                let settle = |s| after(c.truth.with(a, s));
                let challenge = |claimant, kind| Successor::Challenge {
                    claimant,
                    state: c.state,
                    atom: a,
                    kind,
                };
                let is_until = self.analysis.atoms[a].kind() == AtomKind::UntilAtom;
                match stage {
                    VerifierOffersVer => vec![
                        (Move::Claim, stage_at(FalsifierRespondsVer)),
                        (Move::Pass, stage_at(FalsifierOffersVer)),
                    ],
                    FalsifierRespondsVer => vec![
                        (Move::Accept, settle(Status::True)),
                        (Move::Challenge, challenge(v, ClaimKind::Verify)),
                    ],
                    FalsifierOffersVer => vec![
                        (Move::Claim, stage_at(VerifierRespondsVer)),
                        (
                            Move::Pass,
                            if is_until {
                                stage_at(VerifierOffersFal)
                            } else {
                                after(c.truth)
                            },
                        ),
                    ],
                    VerifierRespondsVer => vec![
                        (Move::Accept, settle(Status::True)),
                        (Move::Challenge, challenge(v.opponent(), ClaimKind::Verify)),
                    ],
                    VerifierOffersFal => vec![
                        (Move::Claim, stage_at(FalsifierRespondsFal)),
                        (Move::Pass, stage_at(FalsifierOffersFal)),
                    ],
                    FalsifierRespondsFal => vec![
                        (Move::Accept, settle(Status::False)),
                        (Move::Challenge, challenge(v, ClaimKind::Falsify)),
                    ],
                    FalsifierOffersFal => vec![
                        (Move::Claim, stage_at(VerifierRespondsFal)),
                        (Move::Pass, after(c.truth)),
                    ],
                    VerifierRespondsFal => vec![
                        (Move::Accept, settle(Status::False)),
                        (Move::Challenge, challenge(v.opponent(), ClaimKind::Falsify)),
                    ],
                }
            }
            PhaseDetail::Decide(DecideStage::SeekerChoice) => {
                let stop = if c.counter > 0 {
                    at(PhaseDetail::Decide(DecideStage::OpponentChoice))
                } else {
                    Successor::Exit {
                        state: c.state,
                        truth: c.truth,
                    }
                };
                vec![
                    (
                        Move::Continue,
                        at(PhaseDetail::Step(StepStage::VerifierPicks)),
                    ),
                    (Move::Stop, stop),
                ]
            }
            PhaseDetail::Decide(DecideStage::OpponentChoice) => vec![
                (
                    Move::TakeOver,
                    Successor::Config(Config {
                        seeker: c.seeker.opponent(),
                        counter: c.counter - 1,
                        detail: PhaseDetail::Step(StepStage::VerifierPicks),
                        ..*c
                    }),
                ),
                (
                    Move::EndGame,
                    Successor::Exit {
                        state: c.state,
                        truth: c.truth,
                    },
                ),
            ],
            PhaseDetail::Step(StepStage::VerifierPicks) => (0..self.moves[c.state.index()].len()
                as u32)
                .map(|i| {
                    (
                        Move::Profile(i),
                        at(PhaseDetail::Step(StepStage::FalsifierPicks(i))),
                    )
                })
                .collect(),
            PhaseDetail::Step(StepStage::FalsifierPicks(i)) => self.moves[c.state.index()]
                [i as usize]
                .successors
                .iter()
                .map(|q| {
                    (
                        Move::Outcome(*q),
                        Successor::Config(self.adjust_from(
                            c.seeker,
                            *q,
                            c.truth,
                            c.counter,
                            c.round.next(),
                            0,
                        )),
                    )
                })
                .collect(),
        }
    }
}

/// The explicit untimed game of `<<A>> Φ` from every state of the model, with
/// challenged claims settled by labels. Eloise is the verifier.
#[derive(Debug, Clone)]
pub struct Arena {
    positions: Vec<Position>,
    moves: Vec<Move>,
    graph: GameGraph,
    initial: Vec<u32>,
    analysis: PathAnalysis,
    coalition: AgentSet,
}

impl Arena {
    pub fn build(
        m: &Cgm,
        labels: &Labeling,
        coalition: AgentSet,
        body: &PathFormula,
    ) -> Result<Arena, ArenaError> {
        let game = TransitionGame::new(m, coalition, body, Player::Eloise)?;
        let k = game.num_atoms();

        // truth[atom][kind][state] of every claim that can be made.
        let mut claims = Vec::with_capacity(k);
        for a in 0..k {
            let ver = labels.eval_all(m, &game.claimed_formula(a, ClaimKind::Verify))?;
            let fal = if game.analysis.atoms[a].kind() == AtomKind::UntilAtom {
                labels.eval_all(m, &game.claimed_formula(a, ClaimKind::Falsify))?
            } else {
                Vec::new()
            };
            claims.push([ver, fal]);
        }

        let mut index: HashMap<Position, u32> = HashMap::new();
        let mut positions: Vec<Position> = Vec::new();
        let mut succ: Vec<Vec<(Move, u32)>> = Vec::new();
        let mut intern = |p: Position, positions: &mut Vec<Position>| -> u32 {
            *index.entry(p).or_insert_with(|| {
                positions.push(p);
                positions.len() as u32 - 1
            })
        };

        let initial: Vec<u32> = m
            .state_ids()
            .map(|q| intern(Position::Config(game.initial(q)), &mut positions))
            .collect();

        let mut next = 0;
        while next < positions.len() {
            let pos = positions[next];
            let edges = match pos {
                Position::Ending(_) => vec![(Move::Stay, next as u32)],
                Position::Exit { truth, .. } => {
                    let winner = if game.exit_value(truth) {
                        Player::Eloise
                    } else {
                        Player::Abelard
                    };
                    vec![(
                        Move::Resolve,
                        intern(Position::Ending(winner), &mut positions),
                    )]
                }
                Position::Config(c) => game
                    .moves(&c)
                    .into_iter()
                    .map(|(mv, s)| {
                        let target = match s {
                            Successor::Config(c) => Position::Config(c),
                            Successor::Challenge {
                                claimant,
                                state,
                                atom,
                                kind,
                            } => {
                                let row = &claims[atom][kind as usize];
                                let holds = row[state.index()];
                                Position::Ending(if holds { claimant } else { claimant.opponent() })
                            }
                            Successor::Exit { state, truth } => Position::Exit {
                                verifier: Player::Eloise,
                                state,
                                truth,
                            },
                        };
                        (mv, intern(target, &mut positions))
                    })
                    .collect(),
            };
            succ.push(edges);
            next += 1;
        }

        let owner: Vec<Player> = positions
            .iter()
            .map(|p| match p {
                Position::Config(c) => game.owner(c),
                _ => Player::Eloise,
            })
            .collect();
        let target: Vec<bool> = positions
            .iter()
            .map(|p| match p {
                Position::Config(c) => c.seeker == Player::Eloise,
                Position::Ending(w) => *w == Player::Abelard,
                Position::Exit { .. } => false,
            })
            .collect();
        let moves: Vec<Move> = succ.iter().flatten().map(|(mv, _)| *mv).collect();
        let adjacency = succ
            .into_iter()
            .map(|edges| edges.into_iter().map(|(_, w)| w).collect())
            .collect();
        let graph = GameGraph::new(owner, adjacency, target)?;
        Ok(Arena {
            positions,
            moves,
            graph,
            initial,
            analysis: game.analysis,
            coalition: game.coalition,
        })
    }

    pub fn graph(&self) -> &GameGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: u32) -> &Position {
        &self.positions[id as usize]
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn initial(&self, q: StateId) -> u32 {
        self.initial[q.index()]
    }

    pub fn analysis(&self) -> &PathAnalysis {
        &self.analysis
    }

    pub fn coalition(&self) -> &AgentSet {
        &self.coalition
    }

    /// Outgoing edges of `id` with their move labels.
    pub fn edges(&self, id: u32) -> impl Iterator<Item = (Move, u32)> + '_ {
        let off = self.graph.edge_offset(id);
        self.graph
            .successors(id)
            .iter()
            .enumerate()
            .map(move |(i, w)| (self.moves[off + i], *w))
    }

    pub fn move_to(&self, from: u32, to: u32) -> Option<Move> {
        self.edges(from).find(|(_, w)| *w == to).map(|(mv, _)| mv)
    }

    pub fn id_of(&self, p: &Position) -> Option<u32> {
        self.positions.iter().position(|x| x == p).map(|i| i as u32)
    }

    /// Line-oriented dump: positions, `# edges`, `# buchi`.
    pub fn dump(&self, m: &Cgm) -> String {
        let mut out = String::new();
        for (id, p) in self.positions.iter().enumerate() {
            let owner = self.graph.owner(id as u32).short();
            let _ = match p {
                Position::Config(c) => {
                    let detail = match c.detail {
                        PhaseDetail::Adjust { atom, stage } => {
                            format!("adjust atom={atom} stage={stage:?}")
                        }
                        PhaseDetail::Decide(s) => format!("decide stage={s:?}"),
                        PhaseDetail::Step(StepStage::VerifierPicks) => {
                            "step stage=VerifierPicks".to_string()
                        }
                        PhaseDetail::Step(StepStage::FalsifierPicks(i)) => {
                            format!("step stage=FalsifierPicks profile={i}")
                        }
                    };
                    writeln!(
                        out,
                        "{id} {owner} config seeker={} state={} truth={} n={} round={:?} {detail}",
                        c.seeker.short(),
                        m.state_name(c.state),
                        c.truth,
                        c.counter,
                        c.round
                    )
                }
                Position::Exit {
                    verifier,
                    state,
                    truth,
                } => writeln!(
                    out,
                    "{id} {owner} exit verifier={} state={} truth={truth}",
                    verifier.short(),
                    m.state_name(*state)
                ),
                Position::Ending(w) => writeln!(out, "{id} {owner} ending winner={}", w.short()),
            };
        }
        out.push_str("# edges\n");
        for id in 0..self.positions.len() as u32 {
            for (mv, w) in self.edges(id) {
                let _ = writeln!(out, "{id} {mv} {w}");
            }
        }
        out.push_str("# buchi\n");
        for id in 0..self.positions.len() as u32 {
            if self.graph.is_target(id) {
                let _ = writeln!(out, "{id}");
            }
        }
        out
    }
}
