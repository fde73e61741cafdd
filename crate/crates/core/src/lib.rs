//! Model checking of ATL⁺ over explicit concurrent game models through
//! evaluation games.
//!
//! A strategic formula `<<A>> Φ` is true at a state iff Eloise wins the
//! transition game in which the players build a path step by step and
//! record claims about the relative atoms of `Φ` in a truth function.
//! The crate solves these games in several independent ways:
//!
//! * [`arena`] + [`buchi`]: the untimed game as an explicit Büchi game.
//! * [`bounded`]: the timed game by backward induction, fully nested.
//! * [`oracle`]: semantic reference engines that do not play the game.
//!
//! [`checker`] ties them together and [`strategy`] turns Eloise's winning
//! strategies into finite-memory witnesses.

pub mod arena;
pub mod bounded;
pub mod buchi;
pub mod cgm;
pub mod checker;
pub mod formula;
pub mod labeling;
pub mod oracle;
pub mod strategy;

pub use arena::{Arena, Position, Status, TransitionGame, TruthFunction};
pub use buchi::{solve_buchi, BuchiSolution, GameGraph, Player};
pub use cgm::{AgentSet, Cgm, ModelError, StateId};
pub use checker::{model_check, CheckError, Engine, Verdict};
pub use formula::{
    fragment_width, parse_formula, Coalition, ParseError, PathFormula, RelativeAtom, StateFormula,
};
pub use labeling::Labeling;
