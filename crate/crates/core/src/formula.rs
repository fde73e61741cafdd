//! ATL⁺ syntax.
//!
//! State and path formulas are kept as two mutually recursive types so that
//! the shape restriction of ATL⁺ (temporal operators apply to state formulas
//! only) is enforced by construction. The derived connectives `&`, `->`,
//! `F`, `G` and `R` exist only in the surface syntax; [`StateFormula::expand`]
//! rewrites them into the kernel connectives every engine works with.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// A set of agent names. Kept sorted and duplicate-free so that structural
/// equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(Vec<String>);

impl Coalition {
    pub fn new<I, S>(agents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = agents.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Coalition(names)
    }

    pub fn agents(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateFormula {
    True,
    Prop(String),
    Not(Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
    Coalition(Coalition, Box<PathFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathFormula {
    /// A state formula read at the first state of the path.
    State(StateFormula),
    Not(Box<PathFormula>),
    Or(Box<PathFormula>, Box<PathFormula>),
    And(Box<PathFormula>, Box<PathFormula>),
    Implies(Box<PathFormula>, Box<PathFormula>),
    Next(StateFormula),
    Until(StateFormula, StateFormula),
    Eventually(StateFormula),
    Always(StateFormula),
    Release(StateFormula, StateFormula),
}

impl StateFormula {
    pub fn prop(name: impl Into<String>) -> Self {
        StateFormula::Prop(name.into())
    }

    pub fn falsum() -> Self {
        StateFormula::True.not()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        StateFormula::Not(Box::new(self))
    }

    pub fn or(self, other: StateFormula) -> Self {
        StateFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn and(self, other: StateFormula) -> Self {
        StateFormula::And(Box::new(self), Box::new(other))
    }

    pub fn coalition(agents: Coalition, body: PathFormula) -> Self {
        StateFormula::Coalition(agents, Box::new(body))
    }

    /// Rewrites every derived connective into `⊤`, `¬`, `∨`, `⟨⟨⟩⟩`, `X`, `U`.
    pub fn expand(&self) -> StateFormula {
        match self {
            StateFormula::True => StateFormula::True,
            StateFormula::Prop(p) => StateFormula::Prop(p.clone()),
            StateFormula::Not(a) => a.expand().not(),
            StateFormula::Or(a, b) => a.expand().or(b.expand()),
            StateFormula::And(a, b) => a.expand().not().or(b.expand().not()).not(),
            StateFormula::Implies(a, b) => a.expand().not().or(b.expand()),
            StateFormula::Coalition(c, body) => StateFormula::coalition(c.clone(), body.expand()),
        }
    }

    /// True iff no derived connective occurs anywhere in the formula.
    pub fn is_kernel(&self) -> bool {
        match self {
            StateFormula::True | StateFormula::Prop(_) => true,
            StateFormula::Not(a) => a.is_kernel(),
            StateFormula::Or(a, b) => a.is_kernel() && b.is_kernel(),
            StateFormula::And(..) | StateFormula::Implies(..) => false,
            StateFormula::Coalition(_, body) => body.is_kernel(),
        }
    }

    pub fn has_coalition(&self) -> bool {
        match self {
            StateFormula::True | StateFormula::Prop(_) => false,
            StateFormula::Not(a) => a.has_coalition(),
            StateFormula::Or(a, b) | StateFormula::And(a, b) | StateFormula::Implies(a, b) => {
                a.has_coalition() || b.has_coalition()
            }
            StateFormula::Coalition(..) => true,
        }
    }

    /// Number of AST nodes, counting both state and path nodes.
    pub fn size(&self) -> usize {
        match self {
            StateFormula::True | StateFormula::Prop(_) => 1,
            StateFormula::Not(a) => 1 + a.size(),
            StateFormula::Or(a, b) | StateFormula::And(a, b) | StateFormula::Implies(a, b) => {
                1 + a.size() + b.size()
            }
            StateFormula::Coalition(_, body) => 1 + body.size(),
        }
    }

    /// Propositions in order of first occurrence.
    pub fn propositions(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut Vec<String>) {
        match self {
            StateFormula::True => {}
            StateFormula::Prop(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            StateFormula::Not(a) => a.collect_props(out),
            StateFormula::Or(a, b) | StateFormula::And(a, b) | StateFormula::Implies(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
            StateFormula::Coalition(_, body) => body.collect_props(out),
        }
    }

    /// Agent names mentioned in coalitions, in order of first occurrence.
    pub fn agents(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents(&self, out: &mut Vec<String>) {
        match self {
            StateFormula::True | StateFormula::Prop(_) => {}
            StateFormula::Not(a) => a.collect_agents(out),
            StateFormula::Or(a, b) | StateFormula::And(a, b) | StateFormula::Implies(a, b) => {
                a.collect_agents(out);
                b.collect_agents(out);
            }
            StateFormula::Coalition(c, body) => {
                for a in c.agents() {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                }
                body.collect_agents(out);
            }
        }
    }

    /// Distinct strategic subformulas, every one listed after all strategic
    /// subformulas properly contained in it.
    pub fn strategic_subformulas(&self) -> Vec<StateFormula> {
        let mut out = Vec::new();
        self.collect_strategic(&mut out);
        out
    }

    fn collect_strategic(&self, out: &mut Vec<StateFormula>) {
        match self {
            StateFormula::True | StateFormula::Prop(_) => {}
            StateFormula::Not(a) => a.collect_strategic(out),
            StateFormula::Or(a, b) | StateFormula::And(a, b) | StateFormula::Implies(a, b) => {
                a.collect_strategic(out);
                b.collect_strategic(out);
            }
            StateFormula::Coalition(_, body) => {
                body.collect_strategic(out);
                if !out.contains(self) {
                    out.push(self.clone());
                }
            }
        }
    }
}

impl PathFormula {
    pub fn state(s: StateFormula) -> Self {
        PathFormula::State(s)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        PathFormula::Not(Box::new(self))
    }

    pub fn or(self, other: PathFormula) -> Self {
        PathFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn and(self, other: PathFormula) -> Self {
        PathFormula::And(Box::new(self), Box::new(other))
    }

    pub fn until(a: StateFormula, b: StateFormula) -> Self {
        PathFormula::Until(a, b)
    }

    pub fn next(a: StateFormula) -> Self {
        PathFormula::Next(a)
    }

    pub fn expand(&self) -> PathFormula {
        match self {
            PathFormula::State(s) => PathFormula::State(s.expand()),
            PathFormula::Not(a) => a.expand().not(),
            PathFormula::Or(a, b) => a.expand().or(b.expand()),
            PathFormula::And(a, b) => a.expand().not().or(b.expand().not()).not(),
            PathFormula::Implies(a, b) => a.expand().not().or(b.expand()),
            PathFormula::Next(a) => PathFormula::Next(a.expand()),
            PathFormula::Until(a, b) => PathFormula::Until(a.expand(), b.expand()),
            PathFormula::Eventually(a) => PathFormula::Until(StateFormula::True, a.expand()),
            PathFormula::Always(a) => {
                PathFormula::Until(StateFormula::True, a.expand().not()).not()
            }
            PathFormula::Release(a, b) => {
                PathFormula::Until(a.expand().not(), b.expand().not()).not()
            }
        }
    }

    pub fn is_kernel(&self) -> bool {
        match self {
            PathFormula::State(s) | PathFormula::Next(s) => s.is_kernel(),
            PathFormula::Not(a) => a.is_kernel(),
            PathFormula::Or(a, b) => a.is_kernel() && b.is_kernel(),
            PathFormula::Until(a, b) => a.is_kernel() && b.is_kernel(),
            PathFormula::And(..)
            | PathFormula::Implies(..)
            | PathFormula::Eventually(_)
            | PathFormula::Always(_)
            | PathFormula::Release(..) => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            PathFormula::State(s) => s.size(),
            PathFormula::Not(a) => 1 + a.size(),
            PathFormula::Or(a, b) | PathFormula::And(a, b) | PathFormula::Implies(a, b) => {
                1 + a.size() + b.size()
            }
            PathFormula::Next(a) | PathFormula::Eventually(a) | PathFormula::Always(a) => {
                1 + a.size()
            }
            PathFormula::Until(a, b) | PathFormula::Release(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn collect_props(&self, out: &mut Vec<String>) {
        match self {
            PathFormula::State(s)
            | PathFormula::Next(s)
            | PathFormula::Eventually(s)
            | PathFormula::Always(s) => s.collect_props(out),
            PathFormula::Not(a) => a.collect_props(out),
            PathFormula::Or(a, b) | PathFormula::And(a, b) | PathFormula::Implies(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
            PathFormula::Until(a, b) | PathFormula::Release(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    fn collect_agents(&self, out: &mut Vec<String>) {
        match self {
            PathFormula::State(s)
            | PathFormula::Next(s)
            | PathFormula::Eventually(s)
            | PathFormula::Always(s) => s.collect_agents(out),
            PathFormula::Not(a) => a.collect_agents(out),
            PathFormula::Or(a, b) | PathFormula::And(a, b) | PathFormula::Implies(a, b) => {
                a.collect_agents(out);
                b.collect_agents(out);
            }
            PathFormula::Until(a, b) | PathFormula::Release(a, b) => {
                a.collect_agents(out);
                b.collect_agents(out);
            }
        }
    }

    fn collect_strategic(&self, out: &mut Vec<StateFormula>) {
        match self {
            PathFormula::State(s)
            | PathFormula::Next(s)
            | PathFormula::Eventually(s)
            | PathFormula::Always(s) => s.collect_strategic(out),
            PathFormula::Not(a) => a.collect_strategic(out),
            PathFormula::Or(a, b) | PathFormula::And(a, b) | PathFormula::Implies(a, b) => {
                a.collect_strategic(out);
                b.collect_strategic(out);
            }
            PathFormula::Until(a, b) | PathFormula::Release(a, b) => {
                a.collect_strategic(out);
                b.collect_strategic(out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Relative atoms

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    UntilAtom,
    NextAtom,
    StateAtom,
}

/// A maximal proposition, strategic, `X` or `U` subformula of a path formula.
///
/// `⊤` counts as a state atom, like a proposition true everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelativeAtom {
    State(StateFormula),
    Next(StateFormula),
    Until(StateFormula, StateFormula),
}

impl RelativeAtom {
    pub fn kind(&self) -> AtomKind {
        match self {
            RelativeAtom::State(_) => AtomKind::StateAtom,
            RelativeAtom::Next(_) => AtomKind::NextAtom,
            RelativeAtom::Until(..) => AtomKind::UntilAtom,
        }
    }

    pub fn is_temporal(&self) -> bool {
        self.kind() != AtomKind::StateAtom
    }

    pub fn to_path(&self) -> PathFormula {
        match self {
            RelativeAtom::State(s) => PathFormula::State(s.clone()),
            RelativeAtom::Next(s) => PathFormula::Next(s.clone()),
            RelativeAtom::Until(a, b) => PathFormula::Until(a.clone(), b.clone()),
        }
    }
}

impl fmt::Display for RelativeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_path().fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AtomPolarity {
    pub positive: bool,
    pub negative: bool,
}

impl AtomPolarity {
    pub fn swapped(self) -> Self {
        AtomPolarity {
            positive: self.negative,
            negative: self.positive,
        }
    }
}

/// Boolean skeleton of a path formula over the indices of its relative atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Skeleton {
    Atom(usize),
    Not(Box<Skeleton>),
    Or(Box<Skeleton>, Box<Skeleton>),
}

impl Skeleton {
    pub fn eval(&self, value: &impl Fn(usize) -> bool) -> bool {
        match self {
            Skeleton::Atom(i) => value(*i),
            Skeleton::Not(a) => !a.eval(value),
            Skeleton::Or(a, b) => a.eval(value) || b.eval(value),
        }
    }
}

/// Atoms (in document order), their polarities and the Boolean skeleton of
/// one path formula.
#[derive(Debug, Clone)]
pub struct PathAnalysis {
    pub atoms: Vec<RelativeAtom>,
    pub polarities: Vec<AtomPolarity>,
    pub skeleton: Skeleton,
}

impl PathAnalysis {
    pub fn new(phi: &PathFormula) -> Self {
        let mut index = HashMap::new();
        let mut atoms = Vec::new();
        let mut polarities = Vec::new();
        let skeleton = skel_path(phi, false, &mut index, &mut atoms, &mut polarities);
        PathAnalysis {
            atoms,
            polarities,
            skeleton,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn temporal_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_temporal()).count()
    }

    pub fn position(&self, atom: &RelativeAtom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }
}

fn intern(
    atom: RelativeAtom,
    negated: bool,
    index: &mut HashMap<RelativeAtom, usize>,
    atoms: &mut Vec<RelativeAtom>,
    polarities: &mut Vec<AtomPolarity>,
) -> Skeleton {
    let i = *index.entry(atom.clone()).or_insert_with(|| {
        atoms.push(atom);
        polarities.push(AtomPolarity::default());
        atoms.len() - 1
    });
    if negated {
        polarities[i].negative = true;
    } else {
        polarities[i].positive = true;
    }
    Skeleton::Atom(i)
}

fn skel_path(
    phi: &PathFormula,
    negated: bool,
    index: &mut HashMap<RelativeAtom, usize>,
    atoms: &mut Vec<RelativeAtom>,
    pols: &mut Vec<AtomPolarity>,
) -> Skeleton {
    match phi {
        PathFormula::State(s) => skel_state(s, negated, index, atoms, pols),
        PathFormula::Not(a) => Skeleton::Not(Box::new(skel_path(a, !negated, index, atoms, pols))),
        PathFormula::Or(a, b) => {
            let l = skel_path(a, negated, index, atoms, pols);
            let r = skel_path(b, negated, index, atoms, pols);
            Skeleton::Or(Box::new(l), Box::new(r))
        }
        PathFormula::Next(s) => intern(RelativeAtom::Next(s.clone()), negated, index, atoms, pols),
        PathFormula::Until(a, b) => intern(
            RelativeAtom::Until(a.clone(), b.clone()),
            negated,
            index,
            atoms,
            pols,
        ),
        derived => skel_path(&derived.expand(), negated, index, atoms, pols),
    }
}

fn skel_state(
    s: &StateFormula,
    negated: bool,
    index: &mut HashMap<RelativeAtom, usize>,
    atoms: &mut Vec<RelativeAtom>,
    pols: &mut Vec<AtomPolarity>,
) -> Skeleton {
    match s {
        StateFormula::Not(a) => {
            Skeleton::Not(Box::new(skel_state(a, !negated, index, atoms, pols)))
        }
        StateFormula::Or(a, b) => {
            let l = skel_state(a, negated, index, atoms, pols);
            let r = skel_state(b, negated, index, atoms, pols);
            Skeleton::Or(Box::new(l), Box::new(r))
        }
        StateFormula::And(..) | StateFormula::Implies(..) => {
            skel_state(&s.expand(), negated, index, atoms, pols)
        }
        atom => intern(
            RelativeAtom::State(atom.clone()),
            negated,
            index,
            atoms,
            pols,
        ),
    }
}

/// `At(Φ)` in document order of first occurrence.
pub fn relative_atoms(phi: &PathFormula) -> Vec<RelativeAtom> {
    PathAnalysis::new(phi).atoms
}

pub fn atom_polarities(phi: &PathFormula) -> Vec<(RelativeAtom, AtomPolarity)> {
    let analysis = PathAnalysis::new(phi);
    analysis
        .atoms
        .into_iter()
        .zip(analysis.polarities)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategicInfo {
    pub formula: StateFormula,
    pub atoms: usize,
    pub temporal_atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentReport {
    /// Least `k` such that the formula lies in ATLᵏ; 0 without coalitions.
    pub width: usize,
    /// Innermost first.
    pub subformulas: Vec<StrategicInfo>,
}

pub fn fragment_width(phi: &StateFormula) -> FragmentReport {
    let subformulas: Vec<StrategicInfo> = phi
        .strategic_subformulas()
        .into_iter()
        .map(|formula| {
            let StateFormula::Coalition(_, body) = &formula else {
                unreachable!("strategic subformulas are coalition formulas")
            };
            let analysis = PathAnalysis::new(body);
            StrategicInfo {
                atoms: analysis.len(),
                temporal_atoms: analysis.temporal_count(),
                formula,
            }
        })
        .collect();
    FragmentReport {
        width: subformulas.iter().map(|s| s.atoms).max().unwrap_or(0),
        subformulas,
    }
}

/// Memory bound `3ᵏ − 2ᵏ` for witnesses of width-`k` coalition formulas.
pub fn memory_bound(width: usize) -> u128 {
    let k = width as u32;
    3u128.pow(k) - 2u128.pow(k)
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected character {ch:?} at offset {at}")]
    BadCharacter { ch: char, at: usize },
    #[error("expected {expected} at offset {at}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
        at: usize,
    },
    #[error("unbalanced coalition brackets at offset {at}")]
    UnbalancedCoalition { at: usize },
    #[error("operator `{op}` at offset {at} is missing an operand")]
    Arity { op: &'static str, at: usize },
    #[error("chained `{op}` at offset {at} needs parentheses")]
    Chained { op: &'static str, at: usize },
    #[error("not an ATL+ formula at offset {at}: {reason}")]
    Shape { reason: &'static str, at: usize },
}

impl ParseError {
    /// Byte offset of the offending input.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::BadCharacter { at, .. }
            | ParseError::Unexpected { at, .. }
            | ParseError::UnbalancedCoalition { at }
            | ParseError::Arity { at, .. }
            | ParseError::Chained { at, .. }
            | ParseError::Shape { at, .. } => *at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Arrow,
    Open,
    Close,
    LAngles,
    RAngles,
    Comma,
    X,
    F,
    G,
    U,
    R,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Open => "`(`".into(),
            Tok::Close => "`)`".into(),
            Tok::LAngles => "`<<`".into(),
            Tok::RAngles => "`>>`".into(),
            Tok::Comma => "`,`".into(),
            Tok::X => "`X`".into(),
            Tok::F => "`F`".into(),
            Tok::G => "`G`".into(),
            Tok::U => "`U`".into(),
            Tok::R => "`R`".into(),
            Tok::End => "end of input".into(),
        }
    }

    /// Tokens that can start an operand.
    fn starts_operand(&self) -> bool {
        matches!(
            self,
            Tok::Ident(_)
                | Tok::True
                | Tok::False
                | Tok::Not
                | Tok::Open
                | Tok::LAngles
                | Tok::X
                | Tok::F
                | Tok::G
        )
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = |s: &[u8]| bytes[i..].starts_with(s);
        let (tok, len) = match c {
            b'<' if two(b"<<") => (Tok::LAngles, 2),
            b'>' if two(b">>") => (Tok::RAngles, 2),
            b'-' if two(b"->") => (Tok::Arrow, 2),
            b'!' => (Tok::Not, 1),
            b'&' => (Tok::And, 1),
            b'|' => (Tok::Or, 1),
            b'(' => (Tok::Open, 1),
            b')' => (Tok::Close, 1),
            b',' => (Tok::Comma, 1),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let end = bytes[i..]
                    .iter()
                    .position(|b| !(b.is_ascii_alphanumeric() || *b == b'_'))
                    .map_or(bytes.len(), |p| i + p);
                let word = &text[i..end];
                let tok = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::X,
                    "F" => Tok::F,
                    "G" => Tok::G,
                    "U" => Tok::U,
                    "R" => Tok::R,
                    _ => Tok::Ident(word.to_string()),
                };
                (tok, end - i)
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                if ch == '<' || ch == '>' {
                    return Err(ParseError::UnbalancedCoalition { at: i });
                }
                return Err(ParseError::BadCharacter { ch, at: i });
            }
        };
        out.push((tok, i));
        i += len;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Untyped parse tree; typed into state/path formulas afterwards.
#[derive(Debug, Clone)]
struct Node {
    at: usize,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    True,
    Prop(String),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
    Coalition(Vec<String>, Box<Node>),
    Next(Box<Node>),
    Eventually(Box<Node>),
    Always(Box<Node>),
    Until(Box<Node>, Box<Node>),
    Release(Box<Node>, Box<Node>),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect_operand(&self, op: &'static str, at: usize) -> Result<(), ParseError> {
        if self.peek().starts_operand() {
            Ok(())
        } else {
            Err(ParseError::Arity { op, at })
        }
    }

    fn implies(&mut self) -> Result<Node, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            let (_, at) = self.bump();
            self.expect_operand("->", at)?;
            let rhs = self.implies()?;
            return Ok(Node {
                at,
                kind: NodeKind::Implies(Box::new(lhs), Box::new(rhs)),
            });
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            let (_, at) = self.bump();
            self.expect_operand("|", at)?;
            let rhs = self.and()?;
            lhs = Node {
                at,
                kind: NodeKind::Or(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            let (_, at) = self.bump();
            self.expect_operand("&", at)?;
            let rhs = self.unary()?;
            lhs = Node {
                at,
                kind: NodeKind::And(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Tok::Not => {
                let (_, at) = self.bump();
                self.expect_operand("!", at)?;
                let inner = self.unary()?;
                Ok(Node {
                    at,
                    kind: NodeKind::Not(Box::new(inner)),
                })
            }
            Tok::LAngles => {
                let at = self.at();
                let agents = self.coalition()?;
                self.expect_operand("<<>>", at)?;
                let body = self.unary()?;
                Ok(Node {
                    at,
                    kind: NodeKind::Coalition(agents, Box::new(body)),
                })
            }
            _ => self.binary_temporal(),
        }
    }

    fn coalition(&mut self) -> Result<Vec<String>, ParseError> {
        let (_, open_at) = self.bump();
        let mut agents = Vec::new();
        if *self.peek() == Tok::RAngles {
            self.bump();
            return Ok(agents);
        }
        loop {
            match self.bump() {
                (Tok::Ident(name), _) => agents.push(name),
                (Tok::End, _) => return Err(ParseError::UnbalancedCoalition { at: open_at }),
                (tok, at) => {
                    return Err(ParseError::Unexpected {
                        expected: "agent name",
                        found: tok.describe(),
                        at,
                    })
                }
            }
            match self.bump() {
                (Tok::Comma, _) => continue,
                (Tok::RAngles, _) => return Ok(agents),
                (Tok::End, _) => return Err(ParseError::UnbalancedCoalition { at: open_at }),
                (tok, at) => {
                    return Err(ParseError::Unexpected {
                        expected: "`,` or `>>`",
                        found: tok.describe(),
                        at,
                    })
                }
            }
        }
    }

    fn binary_temporal(&mut self) -> Result<Node, ParseError> {
        let lhs = self.tight()?;
        let op = match self.peek() {
            Tok::U => "U",
            Tok::R => "R",
            _ => return Ok(lhs),
        };
        let (tok, at) = self.bump();
        self.expect_operand(op, at)?;
        let rhs = self.tight()?;
        if matches!(self.peek(), Tok::U | Tok::R) {
            let op = if *self.peek() == Tok::U { "U" } else { "R" };
            return Err(ParseError::Chained { op, at: self.at() });
        }
        let kind = if tok == Tok::U {
            NodeKind::Until(Box::new(lhs), Box::new(rhs))
        } else {
            NodeKind::Release(Box::new(lhs), Box::new(rhs))
        };
        Ok(Node { at, kind })
    }

    fn tight(&mut self) -> Result<Node, ParseError> {
        let at = self.at();
        let wrap: fn(Box<Node>) -> NodeKind = match self.peek() {
            Tok::X => NodeKind::Next,
            Tok::F => NodeKind::Eventually,
            Tok::G => NodeKind::Always,
            Tok::Not => NodeKind::Not,
            Tok::U | Tok::R => {
                let op = if *self.peek() == Tok::U { "U" } else { "R" };
                return Err(ParseError::Arity { op, at });
            }
            _ => return self.primary(),
        };
        let (tok, _) = self.bump();
        let op = match tok {
            Tok::X => "X",
            Tok::F => "F",
            Tok::G => "G",
            _ => "!",
        };
        self.expect_operand(op, at)?;
        let inner = self.tight()?;
        Ok(Node {
            at,
            kind: wrap(Box::new(inner)),
        })
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let (tok, at) = self.bump();
        let kind = match tok {
            Tok::Ident(name) => NodeKind::Prop(name),
            Tok::True => NodeKind::True,
            Tok::False => NodeKind::Not(Box::new(Node {
                at,
                kind: NodeKind::True,
            })),
            Tok::Open => {
                let inner = self.implies()?;
                match self.bump() {
                    (Tok::Close, _) => return Ok(inner),
                    (tok, at) => {
                        return Err(ParseError::Unexpected {
                            expected: "`)`",
                            found: tok.describe(),
                            at,
                        })
                    }
                }
            }
            Tok::RAngles => return Err(ParseError::UnbalancedCoalition { at }),
            Tok::LAngles => {
                // Coalitions in operand position of a tight operator need parentheses.
                return Err(ParseError::Unexpected {
                    expected: "`(` before coalition operand",
                    found: tok.describe(),
                    at,
                });
            }
            tok => {
                return Err(ParseError::Unexpected {
                    expected: "formula",
                    found: tok.describe(),
                    at,
                })
            }
        };
        Ok(Node { at, kind })
    }
}

fn to_state(node: Node) -> Result<StateFormula, ParseError> {
    let temporal = |at| ParseError::Shape {
        reason: "temporal operator outside the scope of a coalition",
        at,
    };
    Ok(match node.kind {
        NodeKind::True => StateFormula::True,
        NodeKind::Prop(p) => StateFormula::Prop(p),
        NodeKind::Not(a) => to_state(*a)?.not(),
        NodeKind::Or(a, b) => to_state(*a)?.or(to_state(*b)?),
        NodeKind::And(a, b) => to_state(*a)?.and(to_state(*b)?),
        NodeKind::Implies(a, b) => {
            StateFormula::Implies(Box::new(to_state(*a)?), Box::new(to_state(*b)?))
        }
        NodeKind::Coalition(agents, body) => {
            StateFormula::coalition(Coalition::new(agents), to_path(*body)?)
        }
        NodeKind::Next(_)
        | NodeKind::Eventually(_)
        | NodeKind::Always(_)
        | NodeKind::Until(..)
        | NodeKind::Release(..) => return Err(temporal(node.at)),
    })
}

fn operand(node: Node) -> Result<StateFormula, ParseError> {
    let at = node.at;
    to_state(node).map_err(|e| match e {
        ParseError::Shape { .. } => ParseError::Shape {
            reason: "temporal operator applied to a path formula",
            at,
        },
        other => other,
    })
}

fn to_path(node: Node) -> Result<PathFormula, ParseError> {
    Ok(match node.kind {
        NodeKind::Not(a) => to_path(*a)?.not(),
        NodeKind::Or(a, b) => to_path(*a)?.or(to_path(*b)?),
        NodeKind::And(a, b) => to_path(*a)?.and(to_path(*b)?),
        NodeKind::Implies(a, b) => {
            PathFormula::Implies(Box::new(to_path(*a)?), Box::new(to_path(*b)?))
        }
        NodeKind::Next(a) => PathFormula::Next(operand(*a)?),
        NodeKind::Eventually(a) => PathFormula::Eventually(operand(*a)?),
        NodeKind::Always(a) => PathFormula::Always(operand(*a)?),
        NodeKind::Until(a, b) => PathFormula::Until(operand(*a)?, operand(*b)?),
        NodeKind::Release(a, b) => PathFormula::Release(operand(*a)?, operand(*b)?),
        NodeKind::True | NodeKind::Prop(_) | NodeKind::Coalition(..) => {
            PathFormula::State(to_state(node)?)
        }
    })
}

fn parse_node(text: &str) -> Result<Node, ParseError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let node = parser.implies()?;
    match parser.bump() {
        (Tok::End, _) => Ok(node),
        (Tok::RAngles, at) => Err(ParseError::UnbalancedCoalition { at }),
        (tok, at) => Err(ParseError::Unexpected {
            expected: "end of input",
            found: tok.describe(),
            at,
        }),
    }
}

/// Parses a state formula. Derived connectives are kept; call
/// [`StateFormula::expand`] to eliminate them.
pub fn parse_formula(text: &str) -> Result<StateFormula, ParseError> {
    to_state(parse_node(text)?)
}

/// Parses a path formula (the body of a coalition operator).
pub fn parse_path_formula(text: &str) -> Result<PathFormula, ParseError> {
    to_path(parse_node(text)?)
}

impl std::str::FromStr for StateFormula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

// ---------------------------------------------------------------------------
// Printing
//
// Levels mirror the grammar: 0 `->`, 1 `|`, 2 `&`, 3 unary `!`/`<<A>>`,
// 4 `U`/`R`, 5 `X`/`F`/`G`, 6 atoms. `Tight` is the operand slot of `U`, `R`,
// `X`, `F`, `G`, where a prefix `!` is parsed tightly.

#[derive(Clone, Copy)]
enum Slot {
    Level(u8),
    Tight,
}

enum View<'a> {
    S(&'a StateFormula),
    P(&'a PathFormula),
}

impl View<'_> {
    fn level(&self) -> u8 {
        match self {
            View::S(s) => match s {
                StateFormula::True | StateFormula::Prop(_) => 6,
                StateFormula::Not(_) | StateFormula::Coalition(..) => 3,
                StateFormula::Or(..) => 1,
                StateFormula::And(..) => 2,
                StateFormula::Implies(..) => 0,
            },
            View::P(p) => match p {
                PathFormula::State(s) => View::S(s).level(),
                PathFormula::Not(_) => 3,
                PathFormula::Or(..) => 1,
                PathFormula::And(..) => 2,
                PathFormula::Implies(..) => 0,
                PathFormula::Until(..) | PathFormula::Release(..) => 4,
                PathFormula::Next(_) | PathFormula::Eventually(_) | PathFormula::Always(_) => 5,
            },
        }
    }

    fn negated(&self) -> Option<View<'_>> {
        match self {
            View::S(StateFormula::Not(a)) => Some(View::S(a)),
            View::P(PathFormula::Not(a)) => Some(View::P(a)),
            View::P(PathFormula::State(StateFormula::Not(a))) => Some(View::S(a)),
            _ => None,
        }
    }
}

fn write_view(f: &mut fmt::Formatter<'_>, v: View<'_>, slot: Slot) -> fmt::Result {
    if let (Slot::Tight, Some(inner)) = (slot, v.negated()) {
        f.write_str("!")?;
        return write_view(f, inner, Slot::Tight);
    }
    let fits = match slot {
        Slot::Level(n) => v.level() >= n,
        Slot::Tight => v.level() >= 5,
    };
    if !fits {
        f.write_str("(")?;
        write_view(f, v, Slot::Level(0))?;
        return f.write_str(")");
    }
    let bin = |f: &mut fmt::Formatter<'_>, l: View<'_>, op: &str, r: View<'_>, ls, rs| {
        write_view(f, l, ls)?;
        write!(f, " {op} ")?;
        write_view(f, r, rs)
    };
    match v {
        View::S(s) => match s {
            StateFormula::True => f.write_str("true"),
            StateFormula::Prop(p) => f.write_str(p),
            StateFormula::Not(a) => {
                f.write_str("!")?;
                write_view(f, View::S(a), Slot::Level(3))
            }
            StateFormula::Or(a, b) => bin(
                f,
                View::S(a),
                "|",
                View::S(b),
                Slot::Level(1),
                Slot::Level(2),
            ),
            StateFormula::And(a, b) => bin(
                f,
                View::S(a),
                "&",
                View::S(b),
                Slot::Level(2),
                Slot::Level(3),
            ),
            StateFormula::Implies(a, b) => bin(
                f,
                View::S(a),
                "->",
                View::S(b),
                Slot::Level(1),
                Slot::Level(0),
            ),
            StateFormula::Coalition(c, body) => {
                write!(f, "<<{}>> ", c.agents().join(","))?;
                write_view(f, View::P(body), Slot::Level(3))
            }
        },
        View::P(p) => match p {
            PathFormula::State(s) => write_view(f, View::S(s), slot),
            PathFormula::Not(a) => {
                f.write_str("!")?;
                write_view(f, View::P(a), Slot::Level(3))
            }
            PathFormula::Or(a, b) => bin(
                f,
                View::P(a),
                "|",
                View::P(b),
                Slot::Level(1),
                Slot::Level(2),
            ),
            PathFormula::And(a, b) => bin(
                f,
                View::P(a),
                "&",
                View::P(b),
                Slot::Level(2),
                Slot::Level(3),
            ),
            PathFormula::Implies(a, b) => bin(
                f,
                View::P(a),
                "->",
                View::P(b),
                Slot::Level(1),
                Slot::Level(0),
            ),
            PathFormula::Until(a, b) => {
                bin(f, View::S(a), "U", View::S(b), Slot::Level(5), Slot::Tight)
            }
            PathFormula::Release(a, b) => {
                bin(f, View::S(a), "R", View::S(b), Slot::Level(5), Slot::Tight)
            }
            PathFormula::Next(a) => {
                f.write_str("X ")?;
                write_view(f, View::S(a), Slot::Tight)
            }
            PathFormula::Eventually(a) => {
                f.write_str("F ")?;
                write_view(f, View::S(a), Slot::Tight)
            }
            PathFormula::Always(a) => {
                f.write_str("G ")?;
                write_view(f, View::S(a), Slot::Tight)
            }
        },
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_view(f, View::S(self), Slot::Level(0))
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_view(f, View::P(self), Slot::Level(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI_STAR: &str = "<<a1>> ((!(X p3) & <<a2>> X p1) | (F p1 & (!p1) U p2))";

    fn p(name: &str) -> StateFormula {
        StateFormula::prop(name)
    }

    fn psi_body() -> PathFormula {
        let StateFormula::Coalition(_, body) = parse_formula(PHI_STAR).unwrap() else {
            panic!("coalition expected")
        };
        *body
    }

    #[test]
    fn parses_phi_star() {
        let left =
            PathFormula::next(p("p3"))
                .not()
                .and(PathFormula::State(StateFormula::coalition(
                    Coalition::new(["a2"]),
                    PathFormula::next(p("p1")),
                )));
        let right =
            PathFormula::Eventually(p("p1")).and(PathFormula::until(p("p1").not(), p("p2")));
        let expected = StateFormula::coalition(Coalition::new(["a1"]), left.or(right));
        assert_eq!(parse_formula(PHI_STAR).unwrap(), expected);
    }

    #[test]
    fn parses_atoms_and_constants() {
        assert_eq!(parse_formula("p1").unwrap(), p("p1"));
        assert_eq!(parse_formula("false").unwrap(), StateFormula::True.not());
        assert_eq!(
            parse_formula("<<>> X p").unwrap(),
            StateFormula::coalition(Coalition::default(), PathFormula::next(p("p")))
        );
    }

    #[test]
    fn rejects_nested_temporal_operators() {
        let err = parse_formula("<<a>> G F p").unwrap_err();
        assert!(matches!(err, ParseError::Shape { .. }), "{err:?}");
        assert!(matches!(
            parse_formula("<<a>> X X p"),
            Err(ParseError::Shape { .. })
        ));
        assert!(matches!(
            parse_formula("X p"),
            Err(ParseError::Shape { .. })
        ));
    }

    #[test]
    fn reports_syntax_errors_with_offsets() {
        assert_eq!(
            parse_formula("<<a p"),
            Err(ParseError::Unexpected {
                expected: "`,` or `>>`",
                found: "identifier `p`".into(),
                at: 4
            })
        );
        assert!(matches!(
            parse_formula("<<a"),
            Err(ParseError::UnbalancedCoalition { at: 0 })
        ));
        assert!(matches!(
            parse_formula("p >> q"),
            Err(ParseError::UnbalancedCoalition { .. })
        ));
        assert!(matches!(
            parse_formula("p &"),
            Err(ParseError::Arity { op: "&", .. })
        ));
        assert!(matches!(
            parse_formula("<<a>> p U"),
            Err(ParseError::Arity { op: "U", .. })
        ));
        assert!(matches!(
            parse_formula("<<a>> p U q U r"),
            Err(ParseError::Chained { op: "U", .. })
        ));
        assert!(matches!(
            parse_formula("p $ q"),
            Err(ParseError::BadCharacter { ch: '$', at: 2 })
        ));
    }

    #[test]
    fn precedence() {
        // `->` is right associative and weakest; `!` is weaker than `U`.
        let f = parse_formula("a -> b -> c").unwrap();
        assert_eq!(
            f,
            StateFormula::Implies(
                Box::new(p("a")),
                Box::new(StateFormula::Implies(Box::new(p("b")), Box::new(p("c"))))
            )
        );
        let g = parse_formula("<<a>> !p U q").unwrap();
        assert_eq!(
            g,
            StateFormula::coalition(
                Coalition::new(["a"]),
                PathFormula::until(p("p"), p("q")).not()
            )
        );
        assert!(matches!(
            parse_formula("<<a>> X !p U q"),
            Err(ParseError::Shape { .. })
        ));
        let h = parse_formula("<<a>> (!p) U !q").unwrap();
        assert_eq!(
            h,
            StateFormula::coalition(
                Coalition::new(["a"]),
                PathFormula::until(p("p").not(), p("q").not())
            )
        );
    }

    #[test]
    fn expansion_of_derived_connectives() {
        let g = PathFormula::Always(p("p1")).expand();
        assert_eq!(
            g,
            PathFormula::until(StateFormula::True, p("p1").not()).not()
        );
        assert_eq!(g.to_string(), "!true U !p1");
        assert_eq!(p("p").expand(), p("p"));

        let psi = psi_body().expand();
        assert!(psi.is_kernel());
        assert_eq!(
            psi.to_string(),
            "!(!!X p3 | !<<a2>> X p1) | !(!true U p1 | !(!p1) U p2)"
        );
        assert_eq!(parse_path_formula(&psi.to_string()).unwrap(), psi);
    }

    #[test]
    fn relative_atoms_of_psi() {
        let atoms = relative_atoms(&psi_body().expand());
        let expected = vec![
            RelativeAtom::Next(p("p3")),
            RelativeAtom::State(StateFormula::coalition(
                Coalition::new(["a2"]),
                PathFormula::next(p("p1")),
            )),
            RelativeAtom::Until(StateFormula::True, p("p1")),
            RelativeAtom::Until(p("p1").not(), p("p2")),
        ];
        assert_eq!(atoms, expected);
    }

    #[test]
    fn atoms_are_deduplicated() {
        let f = PathFormula::until(StateFormula::True, p("p"));
        let phi = f.clone().or(f.clone().not());
        assert_eq!(relative_atoms(&phi).len(), 1);
        assert_eq!(
            relative_atoms(&PathFormula::State(p("p"))),
            vec![RelativeAtom::State(p("p"))]
        );
    }

    #[test]
    fn polarities() {
        let pols = atom_polarities(&psi_body().expand());
        let flags: Vec<(bool, bool)> = pols.iter().map(|(_, p)| (p.positive, p.negative)).collect();
        assert_eq!(
            flags,
            vec![(false, true), (true, false), (true, false), (true, false)]
        );

        let f = PathFormula::until(StateFormula::True, p("p"));
        let both = atom_polarities(&f.clone().or(f.not()));
        assert!(both[0].1.positive && both[0].1.negative);

        let lift = atom_polarities(&PathFormula::State(p("p")));
        assert_eq!(
            lift[0].1,
            AtomPolarity {
                positive: true,
                negative: false
            }
        );
    }

    #[test]
    fn width_and_innermost_order() {
        let phi = parse_formula(PHI_STAR).unwrap().expand();
        let report = fragment_width(&phi);
        assert_eq!(report.width, 4);
        let order: Vec<String> = report
            .subformulas
            .iter()
            .map(|s| s.formula.to_string())
            .collect();
        assert_eq!(order[0], "<<a2>> X p1");
        assert_eq!(report.subformulas[1].formula, phi);
        assert_eq!(report.subformulas[1].temporal_atoms, 3);

        let atl = parse_formula("<<a>> (true U p)").unwrap().expand();
        assert_eq!(fragment_width(&atl).width, 1);
        assert_eq!(fragment_width(&parse_formula("p | !q").unwrap()).width, 0);
        assert_eq!(
            fragment_width(&parse_formula("<<a>> true").unwrap()).width,
            1
        );
    }

    #[test]
    fn memory_bounds() {
        assert_eq!(memory_bound(1), 1);
        assert_eq!(memory_bound(2), 5);
        assert_eq!(memory_bound(4), 65);
    }

    #[test]
    fn printer_round_trips_examples() {
        for text in [
            PHI_STAR,
            "<<a2>> (G p1 | F p2)",
            "<<a>> (X !p | (!p) U !q)",
            "<<a,b>> (p R q) -> !<<>> X (p | q)",
            "<<a>> (X !(p | q) | !(X p))",
            "<<a>> !(!p U q) & <<b>> G !(<<a>> F q)",
        ] {
            let f = parse_formula(text).unwrap();
            let printed = f.to_string();
            assert_eq!(
                parse_formula(&printed).unwrap(),
                f,
                "{text} printed as {printed}"
            );
        }
    }
}
