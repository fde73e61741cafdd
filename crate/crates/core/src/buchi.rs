//! Two-player Büchi games on explicit graphs.
//!
//! Abelard is the Büchi player: he wins an infinite play iff it visits the
//! target set infinitely often. Eloise wins every other play.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Player {
    Eloise,
    Abelard,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Eloise => Player::Abelard,
            Player::Abelard => Player::Eloise,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Player::Eloise => "E",
            Player::Abelard => "A",
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Eloise => "Eloise",
            Player::Abelard => "Abelard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("position {0} has no successor")]
    NotSerial(u32),
    #[error("edge {from} -> {to} leaves the graph")]
    DanglingEdge { from: u32, to: u32 },
    #[error("dump line {line}: {reason}")]
    BadDump { line: usize, reason: String },
}

/// A game graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameGraph {
    owner: Vec<Player>,
    offsets: Vec<u32>,
    edges: Vec<u32>,
    target: Vec<bool>,
}

impl GameGraph {
    pub fn new(
        owner: Vec<Player>,
        successors: Vec<Vec<u32>>,
        target: Vec<bool>,
    ) -> Result<GameGraph, GameError> {
        assert_eq!(owner.len(), successors.len());
        assert_eq!(owner.len(), target.len());
        let n = owner.len() as u32;
        let mut offsets = Vec::with_capacity(owner.len() + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for (v, succ) in successors.into_iter().enumerate() {
            if succ.is_empty() {
                return Err(GameError::NotSerial(v as u32));
            }
            for w in succ {
                if w >= n {
                    return Err(GameError::DanglingEdge {
                        from: v as u32,
                        to: w,
                    });
                }
                edges.push(w);
            }
            offsets.push(edges.len() as u32);
        }
        Ok(GameGraph {
            owner,
            offsets,
            edges,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn owner(&self, v: u32) -> Player {
        self.owner[v as usize]
    }

    pub fn is_target(&self, v: u32) -> bool {
        self.target[v as usize]
    }

    pub fn successors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.edges[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Index of the first edge of `v` in the global edge order.
    pub fn edge_offset(&self, v: u32) -> usize {
        self.offsets[v as usize] as usize
    }

    fn predecessors(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.len();
        let mut count = vec![0u32; n + 1];
        for &w in &self.edges {
            count[w as usize + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut preds = vec![0u32; self.edges.len()];
        for v in 0..n as u32 {
            for &w in self.successors(v) {
                preds[fill[w as usize] as usize] = v;
                fill[w as usize] += 1;
            }
        }
        (count, preds)
    }

    /// Parses the `target` and edge sections of an arena dump: position lines
    /// `id owner ...`, then `# edges` with `from label to`, then `# buchi`
    /// with target ids.
    pub fn from_dump(text: &str) -> Result<GameGraph, GameError> {
        #[derive(PartialEq)]
        enum Section {
            Positions,
            Edges,
            Buchi,
        }
        let bad = |line: usize, reason: &str| GameError::BadDump {
            line: line + 1,
            reason: reason.to_string(),
        };
        let mut section = Section::Positions;
        let mut owner = Vec::new();
        let mut succ: Vec<Vec<u32>> = Vec::new();
        let mut target = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "# edges" => {
                    section = Section::Edges;
                    continue;
                }
                "# buchi" => {
                    section = Section::Buchi;
                    continue;
                }
                _ if line.starts_with('#') => continue,
                _ => {}
            }
            let mut fields = line.split_whitespace();
            match section {
                Section::Positions => {
                    let id: usize = fields
                        .next()
                        .and_then(|f| f.parse().ok())
                        .ok_or_else(|| bad(i, "expected position id"))?;
                    if id != owner.len() {
                        return Err(bad(i, "position ids must be consecutive from 0"));
                    }
                    owner.push(match fields.next() {
                        Some("E") => Player::Eloise,
                        Some("A") => Player::Abelard,
                        _ => return Err(bad(i, "owner must be E or A")),
                    });
                    succ.push(Vec::new());
                    target.push(false);
                }
                Section::Edges => {
                    let parts: Vec<&str> = fields.collect();
                    let (Some(from), Some(to)) = (parts.first(), parts.last()) else {
                        return Err(bad(i, "expected `from label to`"));
                    };
                    let from: usize = from.parse().map_err(|_| bad(i, "bad source id"))?;
                    let to: u32 = to.parse().map_err(|_| bad(i, "bad target id"))?;
                    succ.get_mut(from)
                        .ok_or_else(|| bad(i, "unknown source id"))?
                        .push(to);
                }
                Section::Buchi => {
                    for f in fields {
                        let id: usize = f.parse().map_err(|_| bad(i, "bad target id"))?;
                        *target
                            .get_mut(id)
                            .ok_or_else(|| bad(i, "unknown target id"))? = true;
                    }
                }
            }
        }
        GameGraph::new(owner, succ, target)
    }
}

/// Attractor of `target` for `player` on the whole graph. Returns membership
/// and the BFS layer of every member (`u32::MAX` outside).
pub fn attractor(g: &GameGraph, player: Player, target: &[bool]) -> (Vec<bool>, Vec<u32>) {
    let alive = vec![true; g.len()];
    let (pred_off, preds) = g.predecessors();
    let mut live_succ: Vec<u32> = (0..g.len() as u32)
        .map(|v| g.successors(v).len() as u32)
        .collect();
    attract(g, &pred_off, &preds, &alive, &mut live_succ, player, target)
}

fn attract(
    g: &GameGraph,
    pred_off: &[u32],
    preds: &[u32],
    alive: &[bool],
    live_succ: &mut [u32],
    player: Player,
    target: &[bool],
) -> (Vec<bool>, Vec<u32>) {
    let n = g.len();
    let mut inside = vec![false; n];
    let mut rank = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for v in 0..n {
        if alive[v] && target[v] {
            inside[v] = true;
            rank[v] = 0;
            queue.push_back(v as u32);
        }
    }
    // `live_succ` counts successors still outside the attractor; it is restored
    // by the caller through a fresh copy.
    while let Some(w) = queue.pop_front() {
        let r = rank[w as usize] + 1;
        for &v in &preds[pred_off[w as usize] as usize..pred_off[w as usize + 1] as usize] {
            let vi = v as usize;
            if !alive[vi] || inside[vi] {
                continue;
            }
            let join = if g.owner(v) == player {
                true
            } else {
                live_succ[vi] -= 1;
                live_succ[vi] == 0
            };
            if join {
                inside[vi] = true;
                rank[vi] = r;
                queue.push_back(v);
            }
        }
    }
    (inside, rank)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiSolution {
    winner: Vec<Player>,
    /// For each position owned by its winner, the chosen successor.
    strategy: Vec<Option<u32>>,
}

impl BuchiSolution {
    pub fn winner(&self, v: u32) -> Player {
        self.winner[v as usize]
    }

    pub fn winners(&self) -> &[Player] {
        &self.winner
    }

    pub fn strategy(&self, v: u32) -> Option<u32> {
        self.strategy[v as usize]
    }

    pub fn region(&self, p: Player) -> Vec<u32> {
        (0..self.winner.len() as u32)
            .filter(|v| self.winner[*v as usize] == p)
            .collect()
    }
}

/// Solves the Büchi game by the classic nested fixpoint: repeatedly remove
/// Eloise's attractor of the positions from which Abelard cannot force a
/// visit to the target.
pub fn solve_buchi(g: &GameGraph) -> BuchiSolution {
    let n = g.len();
    let (pred_off, preds) = g.predecessors();
    let mut alive = vec![true; n];
    let mut winner = vec![Player::Abelard; n];
    let mut strategy: Vec<Option<u32>> = vec![None; n];

    loop {
        let live_count = |alive: &[bool]| -> Vec<u32> {
            (0..n as u32)
                .map(|v| {
                    if alive[v as usize] {
                        g.successors(v)
                            .iter()
                            .filter(|w| alive[**w as usize])
                            .count() as u32
                    } else {
                        0
                    }
                })
                .collect()
        };
        let target: Vec<bool> = (0..n).map(|v| alive[v] && g.target[v]).collect();
        let mut counts = live_count(&alive);
        let (reach, reach_rank) = attract(
            g,
            &pred_off,
            &preds,
            &alive,
            &mut counts,
            Player::Abelard,
            &target,
        );
        let trap: Vec<bool> = (0..n).map(|v| alive[v] && !reach[v]).collect();

        if !trap.iter().any(|t| *t) {
            // Abelard wins everything still alive.
            for v in 0..n as u32 {
                let vi = v as usize;
                if !alive[vi] || g.owner(v) != Player::Abelard {
                    continue;
                }
                let choice = if g.target[vi] {
                    g.successors(v).iter().copied().find(|w| alive[*w as usize])
                } else {
                    best_by_rank(g.successors(v), &reach_rank)
                };
                strategy[vi] = choice;
            }
            break;
        }

        let mut counts = live_count(&alive);
        let (won, won_rank) = attract(
            g,
            &pred_off,
            &preds,
            &alive,
            &mut counts,
            Player::Eloise,
            &trap,
        );
        for v in 0..n as u32 {
            let vi = v as usize;
            if !won[vi] {
                continue;
            }
            winner[vi] = Player::Eloise;
            if g.owner(v) == Player::Eloise {
                strategy[vi] = if trap[vi] {
                    g.successors(v).iter().copied().find(|w| trap[*w as usize])
                } else {
                    best_by_rank(g.successors(v), &won_rank)
                };
            }
        }
        for v in 0..n {
            if won[v] {
                alive[v] = false;
            }
        }
    }
    BuchiSolution { winner, strategy }
}

/// Successor of least rank, ties to the lowest id.
fn best_by_rank(succ: &[u32], rank: &[u32]) -> Option<u32> {
    succ.iter()
        .copied()
        .filter(|w| rank[*w as usize] != u32::MAX)
        .min_by_key(|w| (rank[*w as usize], *w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Player::{Abelard, Eloise};

    fn graph(owner: &[Player], succ: &[&[u32]], target: &[u32]) -> GameGraph {
        let mut t = vec![false; owner.len()];
        for v in target {
            t[*v as usize] = true;
        }
        GameGraph::new(owner.to_vec(), succ.iter().map(|s| s.to_vec()).collect(), t).unwrap()
    }

    #[test]
    fn single_positions() {
        let g = graph(&[Eloise], &[&[0]], &[]);
        assert_eq!(solve_buchi(&g).winner(0), Eloise);
        let g = graph(&[Eloise], &[&[0]], &[0]);
        assert_eq!(solve_buchi(&g).winner(0), Abelard);
    }

    #[test]
    fn escape_to_sink() {
        let g = graph(&[Eloise, Eloise], &[&[0, 1], &[1]], &[0]);
        let sol = solve_buchi(&g);
        assert_eq!(sol.winners(), &[Eloise, Eloise]);
        assert_eq!(sol.strategy(0), Some(1));
        let (attr, _) = attractor(&g, Abelard, &[true, false]);
        assert_eq!(attr, vec![true, false]);
    }

    #[test]
    fn attractor_chain() {
        let g = graph(&[Eloise, Eloise, Eloise], &[&[1], &[2], &[2]], &[]);
        let (attr, rank) = attractor(&g, Eloise, &[false, false, true]);
        assert_eq!(attr, vec![true, true, true]);
        assert_eq!(rank, vec![2, 1, 0]);
        let (all, rank) = attractor(&g, Abelard, &[true, true, true]);
        assert!(all.iter().all(|x| *x));
        assert!(rank.iter().all(|r| *r == 0));
    }

    #[test]
    fn abelard_needs_to_return() {
        // 0 (A) -> 1 or 2; 1 (E) -> 0 or 3; 2 (E) -> 0; 3 sink. Target {0}.
        let g = graph(
            &[Abelard, Eloise, Eloise, Eloise],
            &[&[1, 2], &[0, 3], &[0], &[3]],
            &[0],
        );
        let sol = solve_buchi(&g);
        assert_eq!(sol.winners(), &[Abelard, Eloise, Abelard, Eloise]);
        assert_eq!(sol.strategy(0), Some(2));
        assert_eq!(sol.strategy(1), Some(3));
    }

    #[test]
    fn rejects_dead_ends() {
        let err = GameGraph::new(vec![Eloise], vec![vec![]], vec![false]).unwrap_err();
        assert_eq!(err, GameError::NotSerial(0));
    }

    #[test]
    fn parses_dumps() {
        let text = "0 E config x\n1 E ending winner=E\n# edges\n0 pass 0\n0 stop 1\n1 stay 1\n# buchi\n0\n";
        let g = GameGraph::from_dump(text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.successors(0), &[0, 1]);
        assert!(g.is_target(0) && !g.is_target(1));
        assert!(GameGraph::from_dump("0 X\n").is_err());
    }
}
