//! Explicit concurrent game models.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Coalition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A sorted set of agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AgentSet(Vec<AgentId>);

impl AgentSet {
    pub fn new(mut agents: Vec<AgentId>) -> Self {
        agents.sort();
        agents.dedup();
        AgentSet(agents)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.0
    }

    pub fn contains(&self, a: AgentId) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &AgentSet) -> bool {
        self.0.iter().all(|a| other.contains(*a))
    }
}

/// Actions for a set of agents, aligned with the agents in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionProfile {
    pub agents: Vec<AgentId>,
    pub actions: Vec<ActionId>,
}

/// One joint choice of a coalition at a state together with every outcome the
/// other agents can still bring about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionMove {
    pub profile: ActionProfile,
    /// One successor per completion by the opposing agents, in canonical order.
    pub outcomes: Vec<StateId>,
    /// `outcomes` sorted and deduplicated.
    pub successors: Vec<StateId>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("model declares no states")]
    NoStates,
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("undeclared {kind} `{name}` in {context}")]
    Undeclared {
        kind: &'static str,
        name: String,
        context: String,
    },
    #[error("agent `{agent}` has no available action at state `{state}`")]
    NoActions { agent: String, state: String },
    #[error("transition from `{state}` with profile {profile} is not admissible")]
    Inadmissible { state: String, profile: String },
    #[error("transition from `{state}` does not assign an action to agent `{agent}`")]
    IncompleteProfile { state: String, agent: String },
    #[error("transition from `{state}` with profile {profile} is defined twice")]
    DuplicateTransition { state: String, profile: String },
    #[error("outcome function is not total; missing: {}", format_missing(.missing))]
    NotTotal { missing: Vec<(String, Vec<String>)> },
    #[error("unknown fixture `{0}` (known: mstar, m3, hub)")]
    UnknownFixture(String),
}

fn format_missing(missing: &[(String, Vec<String>)]) -> String {
    missing
        .iter()
        .map(|(q, p)| format!("({q}, {})", p.join(", ")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// The on-disk model format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub agents: Vec<String>,
    pub states: Vec<String>,
    pub propositions: Vec<String>,
    pub actions: Vec<String>,
    pub available: Vec<AvailableEntry>,
    pub transitions: Vec<TransitionEntry>,
    pub valuation: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvailableEntry {
    pub agent: String,
    pub state: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub from: String,
    pub profile: BTreeMap<String, String>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cgm {
    agents: Vec<String>,
    states: Vec<String>,
    propositions: Vec<String>,
    actions: Vec<String>,
    /// `available[q][a]`, in declaration order of the action table.
    available: Vec<Vec<Vec<ActionId>>>,
    /// `outcome[q][i]` where `i` encodes a full profile in mixed radix over
    /// agents, the last agent varying fastest.
    outcome: Vec<Vec<StateId>>,
    /// `valuation[p][q]`
    valuation: Vec<Vec<bool>>,
    successors: Vec<Vec<StateId>>,
}

fn index_of(names: &[String], kind: &'static str) -> Result<HashMap<String, u32>, ModelError> {
    let mut map = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i as u32).is_some() {
            return Err(ModelError::Duplicate {
                kind,
                name: n.clone(),
            });
        }
    }
    Ok(map)
}

fn lookup(
    map: &HashMap<String, u32>,
    name: &str,
    kind: &'static str,
    context: impl FnOnce() -> String,
) -> Result<u32, ModelError> {
    map.get(name)
        .copied()
        .ok_or_else(|| ModelError::Undeclared {
            kind,
            name: name.to_string(),
            context: context(),
        })
}

impl Cgm {
    pub fn from_document(doc: ModelDocument) -> Result<Cgm, ModelError> {
        if doc.states.is_empty() {
            return Err(ModelError::NoStates);
        }
        let agent_ix = index_of(&doc.agents, "agent")?;
        let state_ix = index_of(&doc.states, "state")?;
        let prop_ix = index_of(&doc.propositions, "proposition")?;
        let action_ix = index_of(&doc.actions, "action")?;

        let mut available = vec![vec![Vec::new(); doc.agents.len()]; doc.states.len()];
        let mut seen = vec![vec![false; doc.agents.len()]; doc.states.len()];
        for entry in &doc.available {
            let ctx = || format!("available entry for ({}, {})", entry.agent, entry.state);
            let a = lookup(&agent_ix, &entry.agent, "agent", ctx)? as usize;
            let q = lookup(&state_ix, &entry.state, "state", ctx)? as usize;
            if seen[q][a] {
                return Err(ModelError::Duplicate {
                    kind: "available entry",
                    name: format!("({}, {})", entry.agent, entry.state),
                });
            }
            seen[q][a] = true;
            let mut acts = Vec::new();
            for name in &entry.actions {
                acts.push(ActionId(lookup(&action_ix, name, "action", ctx)?));
            }
            acts.sort();
            acts.dedup();
            available[q][a] = acts;
        }
        for (q, per_agent) in available.iter().enumerate() {
            for (a, acts) in per_agent.iter().enumerate() {
                if acts.is_empty() {
                    return Err(ModelError::NoActions {
                        agent: doc.agents[a].clone(),
                        state: doc.states[q].clone(),
                    });
                }
            }
        }

        let mut outcome: Vec<Vec<Option<StateId>>> = available
            .iter()
            .map(|per_agent| vec![None; per_agent.iter().map(Vec::len).product()])
            .collect();
        for t in &doc.transitions {
            let ctx = || format!("transition from `{}`", t.from);
            let q = lookup(&state_ix, &t.from, "state", ctx)? as usize;
            let to = lookup(&state_ix, &t.to, "state", ctx)?;
            for agent in t.profile.keys() {
                lookup(&agent_ix, agent, "agent", ctx)?;
            }
            let profile_text = || {
                let parts: Vec<String> =
                    t.profile.iter().map(|(a, x)| format!("{a}:{x}")).collect();
                format!("{{{}}}", parts.join(", "))
            };
            let mut index = 0usize;
            for (a, agent) in doc.agents.iter().enumerate() {
                let Some(action) = t.profile.get(agent) else {
                    return Err(ModelError::IncompleteProfile {
                        state: t.from.clone(),
                        agent: agent.clone(),
                    });
                };
                let act = ActionId(lookup(&action_ix, action, "action", ctx)?);
                let Ok(pos) = available[q][a].binary_search(&act) else {
                    return Err(ModelError::Inadmissible {
                        state: t.from.clone(),
                        profile: profile_text(),
                    });
                };
                index = index * available[q][a].len() + pos;
            }
            let slot = &mut outcome[q][index];
            if slot.is_some() {
                return Err(ModelError::DuplicateTransition {
                    state: t.from.clone(),
                    profile: profile_text(),
                });
            }
            *slot = Some(StateId(to));
        }

        let mut missing = Vec::new();
        for (q, row) in outcome.iter().enumerate() {
            for (i, o) in row.iter().enumerate() {
                if o.is_none() {
                    let profile = decode(&available[q], i)
                        .into_iter()
                        .map(|x| doc.actions[x.index()].clone())
                        .collect();
                    missing.push((doc.states[q].clone(), profile));
                }
            }
        }
        if !missing.is_empty() {
            return Err(ModelError::NotTotal { missing });
        }
        let outcome: Vec<Vec<StateId>> = outcome
            .into_iter()
            .map(|row| row.into_iter().flatten().collect())
            .collect();

        let mut valuation = vec![vec![false; doc.states.len()]; doc.propositions.len()];
        for (p, states) in &doc.valuation {
            let ctx = || format!("valuation of `{p}`");
            let pi = lookup(&prop_ix, p, "proposition", ctx)? as usize;
            for s in states {
                let q = lookup(&state_ix, s, "state", ctx)? as usize;
                valuation[pi][q] = true;
            }
        }

        let successors = outcome
            .iter()
            .map(|row| {
                let mut s = row.clone();
                s.sort();
                s.dedup();
                s
            })
            .collect();

        Ok(Cgm {
            agents: doc.agents,
            states: doc.states,
            propositions: doc.propositions,
            actions: doc.actions,
            available,
            outcome,
            valuation,
            successors,
        })
    }

    pub fn from_json(text: &str) -> Result<Cgm, ModelError> {
        Cgm::from_document(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Cgm, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Cgm::from_json(&text)
    }

    /// One of the bundled example models: `mstar`, `m3` or `hub`.
    pub fn fixture(name: &str) -> Result<Cgm, ModelError> {
        let text = match name {
            "mstar" => include_str!("../fixtures/mstar.json"),
            "m3" => include_str!("../fixtures/m3.json"),
            "hub" => include_str!("../fixtures/hub.json"),
            other => return Err(ModelError::UnknownFixture(other.to_string())),
        };
        Cgm::from_json(text)
    }

    pub fn to_document(&self) -> ModelDocument {
        let mut available = Vec::new();
        let mut transitions = Vec::new();
        for q in self.state_ids() {
            for a in self.agent_ids() {
                available.push(AvailableEntry {
                    agent: self.agent_name(a).to_string(),
                    state: self.state_name(q).to_string(),
                    actions: self
                        .available(a, q)
                        .iter()
                        .map(|x| self.action_name(*x).to_string())
                        .collect(),
                });
            }
            for (i, to) in self.outcome[q.index()].iter().enumerate() {
                let profile = decode(&self.available[q.index()], i)
                    .into_iter()
                    .enumerate()
                    .map(|(a, x)| (self.agents[a].clone(), self.actions[x.index()].clone()))
                    .collect();
                transitions.push(TransitionEntry {
                    from: self.state_name(q).to_string(),
                    profile,
                    to: self.state_name(*to).to_string(),
                });
            }
        }
        let valuation = self
            .propositions
            .iter()
            .enumerate()
            .map(|(p, name)| {
                let states = self
                    .state_ids()
                    .filter(|q| self.valuation[p][q.index()])
                    .map(|q| self.state_name(q).to_string())
                    .collect();
                (name.clone(), states)
            })
            .collect();
        ModelDocument {
            agents: self.agents.clone(),
            states: self.states.clone(),
            propositions: self.propositions.clone(),
            actions: self.actions.clone(),
            available,
            transitions,
            valuation,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents serialize")
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len() as u32).map(AgentId)
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn propositions(&self) -> &[String] {
        &self.propositions
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q.index()]
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.index()]
    }

    pub fn action_name(&self, x: ActionId) -> &str {
        &self.actions[x.index()]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u32))
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents
            .iter()
            .position(|s| s == name)
            .map(|i| AgentId(i as u32))
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions
            .iter()
            .position(|s| s == name)
            .map(|i| ActionId(i as u32))
    }

    /// `d(a, q)`
    pub fn available(&self, a: AgentId, q: StateId) -> &[ActionId] {
        &self.available[q.index()][a.index()]
    }

    /// Truth of a proposition at a state; `None` if the proposition is undeclared.
    pub fn holds(&self, prop: &str, q: StateId) -> Option<bool> {
        let p = self.propositions.iter().position(|x| x == prop)?;
        Some(self.valuation[p][q.index()])
    }

    pub fn successors(&self, q: StateId) -> &[StateId] {
        &self.successors[q.index()]
    }

    pub fn resolve_coalition(&self, c: &Coalition) -> Result<AgentSet, ModelError> {
        let mut ids = Vec::new();
        for name in c.agents() {
            let a = self.agent_id(name).ok_or_else(|| ModelError::Undeclared {
                kind: "agent",
                name: name.clone(),
                context: "coalition".to_string(),
            })?;
            ids.push(a);
        }
        Ok(AgentSet::new(ids))
    }

    /// `o(q, profile)` for a full action profile given in agent order.
    pub fn outcome(&self, q: StateId, profile: &[ActionId]) -> Result<StateId, ModelError> {
        let per_agent = &self.available[q.index()];
        let inadmissible = || ModelError::Inadmissible {
            state: self.state_name(q).to_string(),
            profile: profile
                .iter()
                .map(|x| self.actions.get(x.index()).map_or("?", String::as_str))
                .collect::<Vec<_>>()
                .join(", "),
        };
        if profile.len() != per_agent.len() {
            return Err(inadmissible());
        }
        let mut index = 0;
        for (acts, x) in per_agent.iter().zip(profile) {
            let pos = acts.binary_search(x).map_err(|_| inadmissible())?;
            index = index * acts.len() + pos;
        }
        Ok(self.outcome[q.index()][index])
    }

    /// Every joint action of `coalition` at `q` with the successors reachable
    /// under each completion by the remaining agents. Profiles are enumerated
    /// in mixed radix order, the last agent varying fastest.
    pub fn coalition_moves(&self, q: StateId, coalition: &AgentSet) -> Vec<CoalitionMove> {
        let per_agent = &self.available[q.index()];
        let n = per_agent.len();
        let mine: Vec<usize> = (0..n)
            .filter(|a| coalition.contains(AgentId(*a as u32)))
            .collect();
        let theirs: Vec<usize> = (0..n)
            .filter(|a| !coalition.contains(AgentId(*a as u32)))
            .collect();
        let radix = |agents: &[usize]| {
            agents
                .iter()
                .map(|a| per_agent[*a].len())
                .collect::<Vec<_>>()
        };
        let mine_radix = radix(&mine);
        let theirs_radix = radix(&theirs);
        let count = |r: &[usize]| r.iter().product::<usize>();

        let mut full = vec![0usize; n];
        let mut moves = Vec::with_capacity(count(&mine_radix));
        for i in 0..count(&mine_radix) {
            let mine_digits = digits(&mine_radix, i);
            for (a, d) in mine.iter().zip(&mine_digits) {
                full[*a] = *d;
            }
            let mut outcomes = Vec::with_capacity(count(&theirs_radix));
            for j in 0..count(&theirs_radix) {
                for (a, d) in theirs.iter().zip(digits(&theirs_radix, j)) {
                    full[*a] = d;
                }
                let index = full
                    .iter()
                    .zip(per_agent)
                    .fold(0, |acc, (d, acts)| acc * acts.len() + d);
                outcomes.push(self.outcome[q.index()][index]);
            }
            let mut successors = outcomes.clone();
            successors.sort();
            successors.dedup();
            moves.push(CoalitionMove {
                profile: ActionProfile {
                    agents: mine.iter().map(|a| AgentId(*a as u32)).collect(),
                    actions: mine
                        .iter()
                        .zip(&mine_digits)
                        .map(|(a, d)| per_agent[*a][*d])
                        .collect(),
                },
                outcomes,
                successors,
            });
        }
        moves
    }

    pub fn format_profile(&self, profile: &ActionProfile) -> String {
        let parts: Vec<String> = profile
            .agents
            .iter()
            .zip(&profile.actions)
            .map(|(a, x)| format!("{}:{}", self.agent_name(*a), self.action_name(*x)))
            .collect();
        parts.join(",")
    }
}

fn digits(radix: &[usize], mut i: usize) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, r) in out.iter_mut().zip(radix).rev() {
        *slot = i % r;
        i /= r;
    }
    out
}

fn decode(per_agent: &[Vec<ActionId>], i: usize) -> Vec<ActionId> {
    let radix: Vec<usize> = per_agent.iter().map(Vec::len).collect();
    digits(&radix, i)
        .into_iter()
        .zip(per_agent)
        .map(|(d, acts)| acts[d])
        .collect()
}

#[derive(Debug, Error)]
#[error("states {from} and {to} are not connected by any transition")]
pub struct PathError {
    pub from: String,
    pub to: String,
}

/// A nonempty sequence of states, each connected to the next by some profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePath(Vec<StateId>);

impl FinitePath {
    pub fn new(m: &Cgm, states: Vec<StateId>) -> Result<FinitePath, PathError> {
        assert!(!states.is_empty(), "a finite path has at least one state");
        for w in states.windows(2) {
            if m.successors(w[0]).binary_search(&w[1]).is_err() {
                return Err(PathError {
                    from: m.state_name(w[0]).to_string(),
                    to: m.state_name(w[1]).to_string(),
                });
            }
        }
        Ok(FinitePath(states))
    }

    pub fn from_names(m: &Cgm, names: &[&str]) -> Result<FinitePath, PathError> {
        let ids = names
            .iter()
            .map(|n| {
                m.state_id(n).ok_or_else(|| PathError {
                    from: n.to_string(),
                    to: n.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        FinitePath::new(m, ids)
    }

    /// Number of transitions.
    pub fn lgt(&self) -> usize {
        self.0.len() - 1
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(m: &Cgm, names: &[&str]) -> Vec<ActionId> {
        names.iter().map(|n| m.action_id(n).unwrap()).collect()
    }

    fn q(m: &Cgm, name: &str) -> StateId {
        m.state_id(name).unwrap()
    }

    #[test]
    fn loads_fixtures() {
        let m = Cgm::fixture("mstar").unwrap();
        assert_eq!(m.num_states(), 5);
        assert_eq!(m.num_agents(), 2);
        let m3 = Cgm::fixture("m3").unwrap();
        assert_eq!(m3.num_states(), 3);
        assert_eq!(m3.holds("p1", q(&m3, "q0")), Some(true));
        assert_eq!(m3.holds("p2", q(&m3, "q2")), Some(true));
        assert_eq!(m3.holds("p1", q(&m3, "q2")), Some(false));
        assert!(matches!(
            Cgm::fixture("nope"),
            Err(ModelError::UnknownFixture(_))
        ));
    }

    #[test]
    fn outcomes_of_mstar() {
        let m = Cgm::fixture("mstar").unwrap();
        assert_eq!(
            m.outcome(q(&m, "q0"), &ids(&m, &["alpha", "beta"]))
                .unwrap(),
            q(&m, "q2")
        );
        assert_eq!(
            m.outcome(q(&m, "q4"), &ids(&m, &["alpha", "alpha"]))
                .unwrap(),
            q(&m, "q4")
        );
        assert_eq!(
            m.outcome(q(&m, "q1"), &ids(&m, &["beta", "alpha"]))
                .unwrap(),
            q(&m, "q4")
        );
        assert!(matches!(
            m.outcome(q(&m, "q2"), &ids(&m, &["beta", "alpha"])),
            Err(ModelError::Inadmissible { .. })
        ));
    }

    #[test]
    fn coalition_moves_of_mstar() {
        let m = Cgm::fixture("mstar").unwrap();
        let a1 = AgentSet::new(vec![m.agent_id("a1").unwrap()]);
        let at_q0 = m.coalition_moves(q(&m, "q0"), &a1);
        assert_eq!(at_q0.len(), 1);
        assert_eq!(at_q0[0].successors, vec![q(&m, "q1"), q(&m, "q2")]);

        let none = m.coalition_moves(q(&m, "q0"), &AgentSet::default());
        assert_eq!(none.len(), 1);
        assert!(none[0].profile.actions.is_empty());
        assert_eq!(none[0].successors, vec![q(&m, "q1"), q(&m, "q2")]);

        let at_q1 = m.coalition_moves(q(&m, "q1"), &a1);
        let pairs: Vec<(String, Vec<StateId>)> = at_q1
            .iter()
            .map(|mv| (m.format_profile(&mv.profile), mv.successors.clone()))
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("a1:alpha".to_string(), vec![q(&m, "q3")]),
                ("a1:beta".to_string(), vec![q(&m, "q4")])
            ]
        );
    }

    #[test]
    fn reports_missing_outcomes() {
        let mut doc = Cgm::fixture("mstar").unwrap().to_document();
        doc.transitions.retain(|t| t.from != "q4");
        let err = Cgm::from_document(doc).unwrap_err();
        let ModelError::NotTotal { missing } = &err else {
            panic!("{err}")
        };
        assert_eq!(
            missing,
            &vec![(
                "q4".to_string(),
                vec!["alpha".to_string(), "alpha".to_string()]
            )]
        );
        assert!(err.to_string().contains("(q4, alpha, alpha)"));
    }

    #[test]
    fn rejects_bad_documents() {
        let base = Cgm::fixture("m3").unwrap().to_document();

        let mut doc = base.clone();
        doc.available[0].actions.clear();
        assert!(matches!(
            Cgm::from_document(doc),
            Err(ModelError::NoActions { .. })
        ));

        let mut doc = base.clone();
        doc.valuation.insert("p1".into(), vec!["q9".into()]);
        assert!(matches!(
            Cgm::from_document(doc),
            Err(ModelError::Undeclared { kind: "state", .. })
        ));

        let mut doc = base.clone();
        doc.transitions[0].to = "nowhere".into();
        assert!(matches!(
            Cgm::from_document(doc),
            Err(ModelError::Undeclared { .. })
        ));

        let mut doc = base.clone();
        let extra = doc.transitions[0].clone();
        doc.transitions.push(extra);
        assert!(matches!(
            Cgm::from_document(doc),
            Err(ModelError::DuplicateTransition { .. })
        ));

        let mut doc = base.clone();
        doc.transitions[4]
            .profile
            .insert("a1".into(), "beta".into());
        assert!(matches!(
            Cgm::from_document(doc),
            Err(ModelError::Inadmissible { .. })
        ));

        let mut doc = base;
        doc.transitions[0].profile.remove("a2");
        assert!(matches!(
            Cgm::from_document(doc),
            Err(ModelError::IncompleteProfile { .. })
        ));

        let text =
            include_str!("../fixtures/m3.json").replace("\"agents\"", "\"extra\": 1, \"agents\"");
        assert!(matches!(Cgm::from_json(&text), Err(ModelError::Syntax(_))));
    }

    #[test]
    fn document_round_trip() {
        for name in ["mstar", "m3"] {
            let m = Cgm::fixture(name).unwrap();
            assert_eq!(Cgm::from_json(&m.to_json()).unwrap(), m);
        }
    }

    #[test]
    fn finite_paths() {
        let m = Cgm::fixture("mstar").unwrap();
        let p = FinitePath::from_names(&m, &["q0", "q1", "q3"]).unwrap();
        assert_eq!(p.lgt(), 2);
        assert!(FinitePath::from_names(&m, &["q0", "q3"]).is_err());
    }
}
