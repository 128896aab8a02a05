//! Message assignments, fractional TDMA schedules and the exact TDMA search.
//!
//! A TDMA schedule time-shares between [`ServedSet`]s: sets of messages that
//! are each delivered from one transmitter holding them, with no served
//! receiver hearing any other active server.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;
use crate::rational::{self, Rational};
use crate::topology::Topology;

/// Largest K accepted by [`optimal_tdma`].
pub const TDMA_SEARCH_LIMIT: usize = 16;

pub const ASSIGNMENT_SCHEMA: &str = "timdof.assignment/1";
pub const SCHEDULE_SCHEMA: &str = "timdof.schedule/1";
pub const DOF_RESULT_SCHEMA: &str = "timdof.dof-result/1";

/// Bound on the transmit-set size `|T_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Budget {
    Bounded(usize),
    Unbounded,
}

impl Budget {
    pub fn allows(&self, size: usize) -> bool {
        match self {
            Budget::Bounded(m) => size <= *m,
            Budget::Unbounded => true,
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Budget::Bounded(m) => s.serialize_u64(*m as u64),
            Budget::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Budget::Bounded(m)),
            Raw::Text(t) if t == "unbounded" => Ok(Budget::Unbounded),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad budget {t:?}"))),
        }
    }
}

/// Transmit sets `T_1, …, T_K` (1-based transmitter indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentDoc", into = "AssignmentDoc")]
pub struct MessageAssignment {
    transmit_sets: Vec<Vec<usize>>,
    budget: Budget,
}

impl MessageAssignment {
    pub fn new(transmit_sets: Vec<Vec<usize>>, budget: Budget) -> Result<Self> {
        let k = transmit_sets.len();
        if k == 0 {
            return Err(Error::InvalidAssignment("no messages".into()));
        }
        if budget == Budget::Bounded(0) {
            return Err(Error::param("budget M must be positive"));
        }
        let mut sets = Vec::with_capacity(k);
        for (i, set) in transmit_sets.into_iter().enumerate() {
            let set: Vec<usize> = set.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
            if set.is_empty() {
                return Err(Error::InvalidAssignment(format!("T_{} is empty", i + 1)));
            }
            if let Some(&j) = set.iter().find(|&&j| j == 0 || j > k) {
                return Err(Error::InvalidAssignment(format!("T_{} names transmitter {j}", i + 1)));
            }
            if !budget.allows(set.len()) {
                return Err(Error::InvalidAssignment(format!(
                    "|T_{}| = {} exceeds the budget {budget:?}",
                    i + 1,
                    set.len()
                )));
            }
            sets.push(set);
        }
        Ok(MessageAssignment { transmit_sets: sets, budget })
    }

    /// `T_i = {servers[i-1]}` with budget `M = 1`.
    pub fn single(servers: &[usize]) -> Result<Self> {
        Self::new(servers.iter().map(|&t| vec![t]).collect(), Budget::Bounded(1))
    }

    /// Every message at every transmitter.
    pub fn full_cooperation(k: usize) -> Result<Self> {
        Self::new(vec![(1..=k).collect(); k], Budget::Unbounded)
    }

    pub fn k(&self) -> usize {
        self.transmit_sets.len()
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn transmit_set(&self, i: usize) -> &[usize] {
        &self.transmit_sets[i - 1]
    }

    pub fn transmit_sets(&self) -> &[Vec<usize>] {
        &self.transmit_sets
    }

    pub fn holds(&self, j: usize, i: usize) -> bool {
        self.transmit_sets[i - 1].binary_search(&j).is_ok()
    }

    /// The unique server of each message when every `|T_i| = 1`.
    pub fn servers(&self) -> Option<Vec<usize>> {
        self.transmit_sets
            .iter()
            .map(|s| (s.len() == 1).then(|| s[0]))
            .collect()
    }

    /// Checks that K matches and every message can reach its receiver.
    pub fn check_against(&self, t: &Topology) -> Result<()> {
        if self.k() != t.k() {
            return Err(Error::InvalidAssignment(format!(
                "assignment has {} messages, topology has K = {}",
                self.k(),
                t.k()
            )));
        }
        for i in 1..=self.k() {
            if !self.transmit_set(i).iter().any(|&j| t.connected(i, j)) {
                return Err(Error::InvalidAssignment(format!(
                    "no transmitter in T_{i} = {:?} reaches receiver {i}",
                    self.transmit_set(i)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AssignmentDoc {
    #[serde(default = "assignment_schema")]
    schema: String,
    #[serde(rename = "M")]
    budget: Budget,
    transmit_sets: Vec<Vec<usize>>,
}

fn assignment_schema() -> String {
    ASSIGNMENT_SCHEMA.into()
}

impl TryFrom<AssignmentDoc> for MessageAssignment {
    type Error = Error;

    fn try_from(doc: AssignmentDoc) -> Result<Self> {
        Error::check_schema(&doc.schema, ASSIGNMENT_SCHEMA)?;
        MessageAssignment::new(doc.transmit_sets, doc.budget)
    }
}

impl From<MessageAssignment> for AssignmentDoc {
    fn from(a: MessageAssignment) -> Self {
        AssignmentDoc { schema: assignment_schema(), budget: a.budget, transmit_sets: a.transmit_sets }
    }
}

/// Messages served together in one time fraction, each by one transmitter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ServedSet {
    /// `(message, server)` pairs sorted by message.
    pairs: Vec<(usize, usize)>,
}

impl ServedSet {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSchedule("a message appears twice in one served set".into()));
        }
        Ok(ServedSet { pairs })
    }

    pub fn empty() -> Self {
        ServedSet { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn served(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn server_of(&self, i: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == i).map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Checks the three schedulability conditions. Indices outside `1..=K` are
/// an error.
pub fn is_schedulable(t: &Topology, s: &ServedSet) -> Result<bool> {
    for &(i, j) in s.pairs() {
        t.check_index(i)?;
        t.check_index(j)?;
    }
    for (a, &(i, ti)) in s.pairs().iter().enumerate() {
        if !t.connected(i, ti) {
            return Ok(false);
        }
        for &(k, tk) in &s.pairs()[a + 1..] {
            if ti == tk || t.connected(i, tk) || t.connected(k, ti) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub set: ServedSet,
    #[serde(with = "rational::serde_pq")]
    pub fraction: Rational,
}

/// Fractional time-sharing over served sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleDoc", into = "ScheduleDoc")]
pub struct TdmaSchedule {
    k: usize,
    entries: Vec<ScheduleEntry>,
}

impl TdmaSchedule {
    /// Structural checks only: fractions in `(0, 1]`, total at most one,
    /// indices within `1..=k`. Schedulability needs a topology, see
    /// [`TdmaSchedule::validate`].
    pub fn new(k: usize, entries: Vec<ScheduleEntry>) -> Result<Self> {
        let zero = rational::int(0);
        let one = rational::int(1);
        let mut total = zero;
        for e in &entries {
            if e.fraction <= zero || e.fraction > one {
                return Err(Error::InvalidSchedule(format!("fraction {} outside (0, 1]", e.fraction)));
            }
            if let Some(&(i, j)) = e.set.pairs().iter().find(|&&(i, j)| !(1..=k).contains(&i) || !(1..=k).contains(&j)) {
                return Err(Error::InvalidSchedule(format!("pair ({i}, {j}) outside 1..={k}")));
            }
            total += e.fraction;
        }
        if total > one {
            return Err(Error::InvalidSchedule(format!("fractions sum to {total} > 1")));
        }
        Ok(TdmaSchedule { k, entries })
    }

    /// Serves `set` for the whole block.
    pub fn one_shot(k: usize, set: ServedSet) -> Result<Self> {
        if set.is_empty() {
            return Self::new(k, Vec::new());
        }
        Self::new(k, vec![ScheduleEntry { set, fraction: rational::int(1) }])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    /// `d_i = Σ λ` over the entries serving message `i`.
    pub fn per_message_dof(&self) -> Vec<Rational> {
        let mut d = vec![rational::int(0); self.k];
        for e in &self.entries {
            for i in e.set.served() {
                d[i - 1] += e.fraction;
            }
        }
        d
    }

    /// Every entry must be schedulable on `t`; when `a` is given every
    /// server must hold the message it serves.
    pub fn validate(&self, t: &Topology, a: Option<&MessageAssignment>) -> Result<()> {
        if self.k != t.k() {
            return Err(Error::InvalidSchedule(format!("schedule K = {} but topology K = {}", self.k, t.k())));
        }
        for (n, e) in self.entries.iter().enumerate() {
            if !is_schedulable(t, &e.set)? {
                return Err(Error::InvalidSchedule(format!("entry {} is not schedulable", n + 1)));
            }
            if let Some(a) = a {
                if let Some(&(i, j)) = e.set.pairs().iter().find(|&&(i, j)| !a.holds(j, i)) {
                    return Err(Error::InvalidSchedule(format!("transmitter {j} does not hold message {i}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleDoc {
    #[serde(default = "schedule_schema")]
    schema: String,
    #[serde(rename = "K")]
    k: usize,
    entries: Vec<ScheduleEntry>,
}

fn schedule_schema() -> String {
    SCHEDULE_SCHEMA.into()
}

impl TryFrom<ScheduleDoc> for TdmaSchedule {
    type Error = Error;

    fn try_from(doc: ScheduleDoc) -> Result<Self> {
        Error::check_schema(&doc.schema, SCHEDULE_SCHEMA)?;
        TdmaSchedule::new(doc.k, doc.entries)
    }
}

impl From<TdmaSchedule> for ScheduleDoc {
    fn from(s: TdmaSchedule) -> Self {
        ScheduleDoc { schema: schedule_schema(), k: s.k, entries: s.entries }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TdmaSearch,
    Canonical,
    LpBound,
    LinearSim,
}

/// Agreement of generic-rank evaluations across channel draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stability {
    pub trials: usize,
    /// Trials whose symbol count differs from the modal one.
    pub disagreements: usize,
    /// Set when disagreements exceed 1% of the trials.
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofResult {
    #[serde(with = "rational::serde_pq")]
    pub sum_dof: Rational,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(with = "rational::serde_pq")]
    pub per_user: Rational,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<Stability>,
}

impl DofResult {
    pub fn new(sum_dof: Rational, k: usize, method: Method) -> Self {
        let per_user = sum_dof / Rational::from_integer(k as i128);
        DofResult { sum_dof, k, per_user, method, stability: None }
    }
}

pub fn schedule_dof(t: &Topology, sched: &TdmaSchedule) -> Result<DofResult> {
    sched.validate(t, None)?;
    let sum: Rational = sched.per_message_dof().into_iter().sum();
    Ok(DofResult::new(sum, sched.k(), Method::TdmaSearch))
}

/// Candidate servers of receiver `i`, in offset order `(i - j) mod K`.
pub(crate) fn candidate_servers(t: &Topology, i: usize) -> Vec<usize> {
    let k = t.k();
    let mut c: Vec<usize> = (1..=k).filter(|&j| t.connected(i, j)).collect();
    c.sort_by_key(|&j| (i + k - j) % k);
    c
}

/// The one-shot pattern that serves two users per block of `L + 2`
/// (for `L = 2`: even messages from the preceding odd transmitter).
pub fn canonical_tdma(t: &Topology) -> Result<(MessageAssignment, TdmaSchedule)> {
    if !t.is_locally_connected() {
        return Err(Error::param("canonical schemes need a locally connected topology"));
    }
    let (k, l) = (t.k(), t.l());
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    if l == 2 {
        candidates.extend((2..=k).step_by(2).map(|i| (i, i - 1)));
    } else {
        for start in (0..k).step_by(l + 2) {
            candidates.push((start + 1, start + 1));
            candidates.push((start + l + 2, start + 2));
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, j) in candidates {
        if i > k || j > k {
            continue;
        }
        let mut trial = pairs.clone();
        trial.push((i, j));
        if is_schedulable(t, &ServedSet::new(trial.clone())?)? {
            pairs = trial;
        }
    }
    let set = ServedSet::new(pairs)?;
    let servers: Vec<usize> = (1..=k)
        .map(|i| match set.server_of(i) {
            Some(j) => j,
            None if l == 2 && i > 1 => i - 1,
            None if l == 2 && t.mode() == crate::topology::Mode::Cyclic => k,
            None => i,
        })
        .collect();
    let assignment = MessageAssignment::single(&servers)?;
    let schedule = TdmaSchedule::one_shot(k, set)?;
    Ok((assignment, schedule))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdmaOptimum {
    pub assignment: MessageAssignment,
    pub schedule: TdmaSchedule,
    pub result: DofResult,
}

/// Exact TDMA optimum over assignments with `|T_i| ≤ m` and fractional
/// schedules.
///
/// The sum-DoF objective is linear in the time fractions, so the optimum
/// is attained by a single served set and single-server assignments; the
/// returned assignment is the lexicographically smallest optimal one in
/// offset encoding and is therefore valid for every `m ≥ 1`.
pub fn optimal_tdma(t: &Topology, m: usize) -> Result<TdmaOptimum> {
    if m == 0 {
        return Err(Error::param("budget M must be positive"));
    }
    if t.k() > TDMA_SEARCH_LIMIT {
        return Err(Error::limit("K", t.k(), TDMA_SEARCH_LIMIT));
    }
    let k = t.k();
    let cands: Vec<Vec<usize>> = (1..=k).map(|i| candidate_servers(t, i)).collect();
    let best = max_served(t, &cands);

    // fix servers receiver by receiver, keeping the optimum reachable
    let mut fixed: Vec<Vec<usize>> = cands.clone();
    for i in 0..k {
        let mut chosen = None;
        for &j in &cands[i] {
            fixed[i] = vec![j];
            if max_served(t, &fixed) == best {
                chosen = Some(j);
                break;
            }
        }
        fixed[i] = vec![chosen.expect("some server keeps the optimum")];
    }
    let servers: Vec<usize> = fixed.iter().map(|s| s[0]).collect();
    let assignment = MessageAssignment::new(
        servers.iter().map(|&j| vec![j]).collect(),
        Budget::Bounded(m),
    )?;
    let schedule = schedule_lp(t, &assignment)?;
    let result = schedule_dof(t, &schedule)?;
    debug_assert_eq!(result.sum_dof, Rational::from_integer(best as i128));
    Ok(TdmaOptimum { assignment, schedule, result })
}

/// Largest served set when receiver `i` may only use servers in `options[i]`.
fn max_served(t: &Topology, options: &[Vec<usize>]) -> usize {
    fn go(t: &Topology, options: &[Vec<usize>], i: usize, chosen: &mut Vec<(usize, usize)>, best: &mut usize) {
        let k = options.len();
        if chosen.len() + (k - i) <= *best {
            return;
        }
        if i == k {
            *best = chosen.len();
            return;
        }
        let rx = i + 1;
        for &j in &options[i] {
            let ok = chosen
                .iter()
                .all(|&(r, s)| s != j && !t.connected(rx, s) && !t.connected(r, j));
            if ok {
                chosen.push((rx, j));
                go(t, options, i + 1, chosen, best);
                chosen.pop();
            }
        }
        go(t, options, i + 1, chosen, best);
    }
    let mut best = 0;
    go(t, options, 0, &mut Vec::new(), &mut best);
    best
}

/// Maximal schedulable served sets under assignment `a`, sorted.
pub fn maximal_served_sets(t: &Topology, a: &MessageAssignment) -> Result<Vec<ServedSet>> {
    a.check_against(t)?;
    let pairs: Vec<(usize, usize)> = (1..=t.k())
        .flat_map(|i| a.transmit_set(i).iter().filter(move |&&j| t.connected(i, j)).map(move |&j| (i, j)))
        .collect();
    let n = pairs.len();
    let compatible = |p: (usize, usize), q: (usize, usize)| {
        p.0 != q.0 && p.1 != q.1 && !t.connected(p.0, q.1) && !t.connected(q.0, p.1)
    };
    let adj: Vec<Vec<bool>> = (0..n).map(|x| (0..n).map(|y| x != y && compatible(pairs[x], pairs[y])).collect()).collect();

    // Bron–Kerbosch without pivoting; the pair graph is small
    fn bk(adj: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        let mut p = p;
        let mut x = x;
        while let Some(v) = p.first().copied() {
            r.push(v);
            let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
            let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
            bk(adj, r, np, nx, out);
            r.pop();
            p.remove(0);
            x.push(v);
        }
    }
    let mut cliques = Vec::new();
    bk(&adj, &mut Vec::new(), (0..n).collect(), Vec::new(), &mut cliques);
    let mut sets: Vec<ServedSet> = cliques
        .into_iter()
        .map(|c| ServedSet::new(c.into_iter().map(|x| pairs[x])))
        .collect::<Result<_>>()?;
    sets.sort();
    Ok(sets)
}

/// Best fractional schedule for a fixed assignment: the LP over maximal
/// schedulable sets, solved exactly.
pub fn schedule_lp(t: &Topology, a: &MessageAssignment) -> Result<TdmaSchedule> {
    let sets = maximal_served_sets(t, a)?;
    let objective: Vec<Rational> = sets.iter().map(|s| rational::int(s.len() as i64)).collect();
    let row = vec![rational::int(1); sets.len()];
    let sol = lp::maximize(&objective, &[row], &[rational::int(1)])?;
    let zero = rational::int(0);
    let entries = sets
        .into_iter()
        .zip(sol.primal)
        .filter(|(s, lambda)| *lambda > zero && !s.is_empty())
        .map(|(set, fraction)| ScheduleEntry { set, fraction })
        .collect();
    TdmaSchedule::new(t.k(), entries)
}
