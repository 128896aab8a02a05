//! Collapsed demand graphs for single-transmitter assignments and the
//! acyclic-subset LP outer bound on the sum DoF.
//!
//! Node `u` stands for message `W_u` together with receiver `u`. There is an
//! edge `u → v` when receiver `u` does not hear the transmitter carrying
//! `W_v`. Any set of messages whose induced subgraph is acyclic has sum DoF
//! at most one, which gives the LP
//!
//! ```text
//! max Σ d_i   s.t.   Σ_{i∈S} d_i ≤ 1  for every maximal acyclic S,   d ≥ 0.
//! ```

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpField, LpSolution};
use crate::rational::{self, Rational};
use crate::schemes::{canonical_tdma, candidate_servers, MessageAssignment};
use crate::topology::{Mode, Topology};

/// Largest K for which the constraint set is enumerated.
pub const LP_LIMIT: usize = 12;

/// Largest K accepted by [`best_assignment_upper_bound`].
pub const ASSIGNMENT_SEARCH_LIMIT: usize = 12;

/// Search nodes visited by [`best_assignment_upper_bound`] before giving up.
pub const ASSIGNMENT_SEARCH_BUDGET: usize = 20_000_000;

pub const DOF_BOUND_SCHEMA: &str = "timdof.dof-bound/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandGraph {
    k: usize,
    // bit (v-1) of out[u-1] is set iff u → v
    out: Vec<u64>,
    servers: Option<Vec<usize>>,
}

pub fn build_demand_graph(t: &Topology, a: &MessageAssignment) -> Result<DemandGraph> {
    let servers = a.servers().ok_or_else(|| {
        Error::UnsupportedAssignment("demand graphs need exactly one transmitter per message".into())
    })?;
    a.check_against(t)?;
    let reach: Vec<u64> = servers.iter().map(|&j| t.reach_mask(j)).collect();
    let k = t.k();
    let out = (0..k)
        .map(|u| (0..k).filter(|&v| v != u && reach[v] >> u & 1 == 0).fold(0u64, |m, v| m | 1 << v))
        .collect();
    Ok(DemandGraph { k, out, servers: Some(servers) })
}

impl DemandGraph {
    /// A raw graph on `1..=k` from 1-based `(u, v)` edges. Self-loops are
    /// rejected.
    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if k == 0 || k > 64 {
            return Err(Error::param(format!("node count {k} outside 1..=64")));
        }
        let mut out = vec![0u64; k];
        for &(u, v) in edges {
            if !(1..=k).contains(&u) || !(1..=k).contains(&v) {
                return Err(Error::param(format!("edge ({u}, {v}) outside 1..={k}")));
            }
            if u == v {
                return Err(Error::param(format!("self-loop at {u}")));
            }
            out[u - 1] |= 1 << (v - 1);
        }
        Ok(DemandGraph { k, out, servers: None })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        (1..=self.k).contains(&u) && (1..=self.k).contains(&v) && self.out[u - 1] >> (v - 1) & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..=self.k)
            .flat_map(|u| (1..=self.k).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
            .collect()
    }

    /// Server of each message, when built from an assignment.
    pub fn servers(&self) -> Option<&[usize]> {
        self.servers.as_deref()
    }

    pub fn without_edge(&self, u: usize, v: usize) -> Self {
        let mut g = self.clone();
        if self.has_edge(u, v) {
            g.out[u - 1] &= !(1 << (v - 1));
        }
        g
    }

    pub fn is_acyclic_subset(&self, subset: &[usize]) -> Result<bool> {
        let mut mask = 0u64;
        for &i in subset {
            if !(1..=self.k).contains(&i) {
                return Err(Error::param(format!("node {i} outside 1..={}", self.k)));
            }
            mask |= 1 << (i - 1);
        }
        Ok(is_acyclic_mask(&self.out, mask))
    }

    pub fn maximal_acyclic_subsets(&self) -> Result<Vec<Vec<usize>>> {
        if self.k > LP_LIMIT {
            return Err(Error::limit("K", self.k, LP_LIMIT));
        }
        Ok(maximal_acyclic(&self.out).into_iter().map(mask_to_nodes).collect())
    }

    /// Exact LP optimum with a dual certificate.
    pub fn dof_upper_bound_lp(&self) -> Result<DofBound> {
        if self.k > LP_LIMIT {
            return Err(Error::limit("K", self.k, LP_LIMIT));
        }
        let (rows, sol) = solve_bound::<Rational>(&self.out)?;
        let zero = rational::int(0);
        let certificate = rows
            .iter()
            .zip(&sol.dual)
            .filter(|(_, w)| **w > zero)
            .map(|(&m, &w)| CertificateEntry { subset: mask_to_nodes(m), weight: w })
            .collect();
        let assignment = match &self.servers {
            Some(s) => Some(MessageAssignment::single(s)?),
            None => None,
        };
        Ok(DofBound { value: sol.value, dof: sol.primal, certificate, assignment })
    }
}

fn mask_to_nodes(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).map(|i| i + 1).collect()
}

fn in_masks(out: &[u64]) -> Vec<u64> {
    let k = out.len();
    (0..k)
        .map(|v| (0..k).filter(|&u| out[u] >> v & 1 == 1).fold(0u64, |m, u| m | 1 << u))
        .collect()
}

fn is_acyclic_mask(out: &[u64], mut mask: u64) -> bool {
    let inm = in_masks(out);
    // peel sources until nothing is left or every node has an in-edge
    loop {
        if mask == 0 {
            return true;
        }
        let sources = (0..out.len())
            .filter(|&v| mask >> v & 1 == 1 && inm[v] & mask == 0)
            .fold(0u64, |m, v| m | 1 << v);
        if sources == 0 {
            return false;
        }
        mask &= !sources;
    }
}

fn acyclic_table(out: &[u64]) -> Vec<bool> {
    let k = out.len();
    let inm = in_masks(out);
    let mut table = vec![false; 1 << k];
    table[0] = true;
    for mask in 1usize..1 << k {
        let m = mask as u64;
        table[mask] = (0..k).any(|v| m >> v & 1 == 1 && inm[v] & m == 0 && table[mask & !(1 << v)]);
    }
    table
}

fn maximal_acyclic(out: &[u64]) -> Vec<u64> {
    let k = out.len();
    let table = acyclic_table(out);
    (1usize..1 << k)
        .filter(|&mask| table[mask] && (0..k).all(|v| mask >> v & 1 == 1 || !table[mask | 1 << v]))
        .map(|m| m as u64)
        .collect()
}

fn solve_bound<T: LpField>(out: &[u64]) -> Result<(Vec<u64>, LpSolution<T>)> {
    let k = out.len();
    let rows = maximal_acyclic(out);
    let a: Vec<Vec<T>> = rows
        .iter()
        .map(|&m| (0..k).map(|i| if m >> i & 1 == 1 { T::one() } else { T::zero() }).collect())
        .collect();
    let b = vec![T::one(); rows.len()];
    let c = vec![T::one(); k];
    let sol = lp::maximize(&c, &a, &b)?;
    Ok((rows, sol))
}

fn bound_value_f64(out: &[u64]) -> f64 {
    if out.is_empty() {
        return 0.0;
    }
    solve_bound::<f64>(out).map(|(_, s)| s.value).unwrap_or(f64::INFINITY)
}

fn bound_value_exact(out: &[u64]) -> Result<Rational> {
    if out.is_empty() {
        return Ok(rational::int(0));
    }
    Ok(solve_bound::<Rational>(out)?.1.value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub subset: Vec<usize>,
    #[serde(with = "rational::serde_pq")]
    pub weight: Rational,
}

/// LP outer bound with the dual weights that certify it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofBound {
    #[serde(with = "rational::serde_pq")]
    pub value: Rational,
    /// Optimal per-message DoF vector of the LP.
    #[serde(with = "rational::serde_pq_vec")]
    pub dof: Vec<Rational>,
    /// Acyclic subsets with positive dual weight.
    pub certificate: Vec<CertificateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<MessageAssignment>,
}

impl DofBound {
    /// Re-checks both sides against `g`: the dual weights sit on acyclic
    /// subsets, cover every node at least once and sum to `value`; the
    /// primal vector meets every maximal acyclic constraint and sums to
    /// `value`.
    pub fn verify(&self, g: &DemandGraph) -> Result<bool> {
        let zero = rational::int(0);
        let one = rational::int(1);
        let mut cover = vec![zero; g.k()];
        let mut total = zero;
        for e in &self.certificate {
            if e.weight < zero || !g.is_acyclic_subset(&e.subset)? {
                return Ok(false);
            }
            for &i in &e.subset {
                cover[i - 1] += e.weight;
            }
            total += e.weight;
        }
        if total != self.value || cover.iter().any(|c| *c < one) {
            return Ok(false);
        }
        if self.dof.len() != g.k() || self.dof.iter().any(|d| *d < zero) {
            return Ok(false);
        }
        let primal: Rational = self.dof.iter().sum();
        let feasible = g
            .maximal_acyclic_subsets()?
            .iter()
            .all(|s| s.iter().map(|&i| self.dof[i - 1]).sum::<Rational>() <= one);
        Ok(feasible && primal == self.value)
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("bound serializes");
        v.as_object_mut()
            .expect("object")
            .insert("schema".into(), DOF_BOUND_SCHEMA.into());
        serde_json::to_string_pretty(&v).expect("bound serializes")
    }
}

/// Maximum of the LP bound over every single-transmitter assignment in
/// which each message sits at a transmitter its receiver hears.
///
/// Assignments are tried in a fixed order: the canonical TDMA assignment
/// first, then every assignment in lexicographic order of the offsets
/// `(i - j) mod K`. The first one attaining the maximum is returned, and the
/// walk stops as soon as an assignment meets a proven bound on all of them.
/// A node is pruned when the LP value
/// of its fixed prefix plus a bound on the remaining segment cannot beat
/// the incumbent; segment bounds come from exhaustive tables of short
/// stretches of the infinite line, which is how every window of a
/// locally connected network looks from inside. Pruning compares floating
/// LP values with a margin well below the gap between distinct candidate
/// values; every reported value is recomputed exactly.
pub fn best_assignment_upper_bound(t: &Topology) -> Result<DofBound> {
    best_assignment_upper_bound_with_budget(t, ASSIGNMENT_SEARCH_BUDGET)
}

pub fn best_assignment_upper_bound_with_budget(t: &Topology, budget: usize) -> Result<DofBound> {
    let k = t.k();
    if k > ASSIGNMENT_SEARCH_LIMIT {
        return Err(Error::limit("K", k, ASSIGNMENT_SEARCH_LIMIT));
    }
    let bounds = SegmentBounds::for_topology(t);
    let seed = match canonical_tdma(t) {
        Ok((a, _)) => Some(build_demand_graph(t, &a)?),
        Err(_) => None,
    };
    if let Some(g) = &seed {
        let b = g.dof_upper_bound_lp()?;
        if b.value >= bounds.whole {
            return Ok(b);
        }
    }
    let mut search = AssignmentSearch {
        cands: (1..=k).map(|i| candidate_servers(t, i)).collect(),
        reach: (1..=k).map(|j| t.reach_mask(j)).collect(),
        rest: bounds.rest.iter().map(rational::to_f64).collect(),
        target: bounds.whole,
        servers: Vec::with_capacity(k),
        out: vec![0; k],
        best: match seed {
            Some(g) => Some((bound_value_exact(&g.out)?, g.servers.expect("built from an assignment"))),
            None => None,
        },
        nodes: 0,
        budget,
        k,
    };
    search.dfs()?;
    let (_, servers) = search.best.expect("at least one assignment exists");
    let a = MessageAssignment::single(&servers)?;
    build_demand_graph(t, &a)?.dof_upper_bound_lp()
}

struct SegmentBounds {
    /// `rest[m]` bounds the LP of the last `m` nodes for any completion.
    rest: Vec<Rational>,
    /// Bound on the whole network.
    whole: Rational,
}

impl SegmentBounds {
    fn for_topology(t: &Topology) -> Self {
        let k = t.k();
        let trivial: Vec<Rational> = (0..=k).map(|m| rational::int(m as i64)).collect();
        if !t.is_locally_connected() {
            return SegmentBounds { whole: trivial[k], rest: trivial };
        }
        let l = t.l();
        let table = line_table(l, k);
        let mut split = trivial.clone();
        for m in 1..=k {
            for a in 1..table.len().min(m + 1) {
                let v = table[a] + split[m - a];
                if v < split[m] {
                    split[m] = v;
                }
            }
        }
        match t.mode() {
            Mode::Truncated => SegmentBounds { whole: split[k], rest: split },
            Mode::Cyclic => {
                // stretches of at most K - L nodes see no wrap-around
                let plain = k - l;
                let rest = (0..=k).map(|m| if m <= plain { split[m] } else { trivial[m] }).collect();
                let kq = rational::int(k as i64);
                let mut whole = trivial[k];
                for (m, f) in table.iter().enumerate().skip(1).take_while(|(m, _)| *m <= plain) {
                    let v = kq * f / rational::int(m as i64);
                    if v < whole {
                        whole = v;
                    }
                }
                SegmentBounds { rest, whole }
            }
        }
    }
}

/// Exhaustive maxima of the LP over stretches of `m` consecutive nodes of
/// the infinite `L`-connected line, for every offset pattern. Entry 0 is 0.
fn line_table(l: usize, max_len: usize) -> Vec<Rational> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Rational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut table = vec![rational::int(0)];
    for m in 1..=max_len {
        if (l as u64 + 1).checked_pow(m as u32).is_none_or(|n| n > 20_000) {
            break;
        }
        if let Some(v) = cache.lock().unwrap().get(&(l, m)) {
            table.push(*v);
            continue;
        }
        let v = line_segment_max(l, m);
        cache.lock().unwrap().insert((l, m), v);
        table.push(v);
    }
    table
}

fn line_segment_max(l: usize, m: usize) -> Rational {
    let mut offsets = vec![0usize; m];
    let mut best = rational::int(0);
    loop {
        let out: Vec<u64> = (0..m)
            .map(|u| {
                (0..m)
                    .filter(|&v| {
                        let tv = v as i64 - offsets[v] as i64;
                        v != u && !(tv <= u as i64 && u as i64 <= tv + l as i64)
                    })
                    .fold(0u64, |acc, v| acc | 1 << v)
            })
            .collect();
        let v = bound_value_exact(&out).expect("bounded LP");
        if v > best {
            best = v;
        }
        // next offset pattern
        let mut pos = 0;
        loop {
            if pos == m {
                return best;
            }
            offsets[pos] += 1;
            if offsets[pos] <= l {
                break;
            }
            offsets[pos] = 0;
            pos += 1;
        }
    }
}

struct AssignmentSearch {
    k: usize,
    cands: Vec<Vec<usize>>,
    reach: Vec<u64>,
    rest: Vec<f64>,
    target: Rational,
    servers: Vec<usize>,
    out: Vec<u64>,
    best: Option<(Rational, Vec<usize>)>,
    nodes: usize,
    budget: usize,
}

// Distinct LP values here differ by far more than this.
const PRUNE_MARGIN: f64 = 1e-9;

impl AssignmentSearch {
    fn reached_target(&self) -> bool {
        matches!(&self.best, Some((v, _)) if *v >= self.target)
    }

    fn dfs(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::limit("assignment search nodes", self.nodes, self.budget));
        }
        let p = self.servers.len();
        if p == self.k {
            let value = bound_value_f64(&self.out);
            let improves = match &self.best {
                None => true,
                Some((b, _)) => value > rational::to_f64(b) + PRUNE_MARGIN,
            };
            if improves {
                let exact = bound_value_exact(&self.out)?;
                if self.best.as_ref().is_none_or(|(b, _)| exact > *b) {
                    self.best = Some((exact, self.servers.clone()));
                }
            }
            return Ok(());
        }
        if p > 0 {
            if let Some((b, _)) = &self.best {
                let bound = bound_value_f64(&self.out[..p]) + self.rest[self.k - p];
                if bound < rational::to_f64(b) + PRUNE_MARGIN {
                    return Ok(());
                }
            }
        }
        for c in 0..self.cands[p].len() {
            let j = self.cands[p][c];
            self.push(j);
            let r = self.dfs();
            self.pop();
            r?;
            if self.reached_target() {
                break;
            }
        }
        Ok(())
    }

    fn push(&mut self, j: usize) {
        let p = self.servers.len();
        let reach_new = self.reach[j - 1];
        for u in 0..p {
            if reach_new >> u & 1 == 0 {
                self.out[u] |= 1 << p;
            }
            if self.reach[self.servers[u] - 1] >> p & 1 == 0 {
                self.out[p] |= 1 << u;
            }
        }
        self.servers.push(j);
    }

    fn pop(&mut self) {
        let p = self.servers.len() - 1;
        for u in 0..p {
            self.out[u] &= !(1 << p);
        }
        self.out[p] = 0;
        self.servers.pop();
    }
}
