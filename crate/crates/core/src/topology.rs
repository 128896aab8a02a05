//! Locally connected K-user topologies and the chordal-bipartite test.
//!
//! Receivers and transmitters are indexed `1..=K` on every public surface.
//! Transmitter `j` is heard by receivers `j, j+1, …, j+L`; in truncated mode
//! indices past `K` are dropped, in cyclic mode they wrap modulo `K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest K representable by the bitmask connectivity.
pub const MAX_USERS: usize = 64;

/// Largest K accepted by [`Topology::is_chordal_bipartite`].
pub const CHORDALITY_LIMIT: usize = 16;

pub const TOPOLOGY_SCHEMA: &str = "timdof.topology/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Truncated,
    Cyclic,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Truncated => "truncated",
            Mode::Cyclic => "cyclic",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncated" => Ok(Mode::Truncated),
            "cyclic" => Ok(Mode::Cyclic),
            other => Err(Error::param(format!("unknown mode {other:?}"))),
        }
    }
}

/// Who hears whom in a K-user interference network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    k: usize,
    l: usize,
    mode: Mode,
    explicit: bool,
    // bit (j-1) of heard[i-1] is set iff receiver i hears transmitter j
    heard: Vec<u64>,
}

impl Topology {
    pub fn make_locally_connected(k: usize, l: usize, mode: Mode) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K must be positive"));
        }
        if k > MAX_USERS {
            return Err(Error::limit("K", k, MAX_USERS));
        }
        if l >= k {
            return Err(Error::param(format!("L = {l} must be smaller than K = {k}")));
        }
        let mut heard = vec![0u64; k];
        for tx in 0..k {
            for step in 0..=l {
                let rx = tx + step;
                let rx = match mode {
                    Mode::Truncated if rx >= k => break,
                    Mode::Truncated => rx,
                    Mode::Cyclic => rx % k,
                };
                heard[rx] |= 1 << tx;
            }
        }
        Ok(Topology { k, l, mode, explicit: false, heard })
    }

    /// Builds a hand-made topology from 1-based `(receiver, transmitter)`
    /// pairs. Direct links `(i, i)` must all be present. The result reports
    /// `L = 0` and truncated mode; connectivity comes only from `edges`.
    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K must be positive"));
        }
        if k > MAX_USERS {
            return Err(Error::limit("K", k, MAX_USERS));
        }
        let mut heard = vec![0u64; k];
        for &(rx, tx) in edges {
            if !(1..=k).contains(&rx) || !(1..=k).contains(&tx) {
                return Err(Error::param(format!("edge ({rx}, {tx}) outside 1..={k}")));
            }
            heard[rx - 1] |= 1 << (tx - 1);
        }
        if let Some(i) = (0..k).find(|&i| heard[i] >> i & 1 == 0) {
            return Err(Error::param(format!("direct link ({0}, {0}) missing", i + 1)));
        }
        Ok(Topology { k, l: 0, mode: Mode::Truncated, explicit: true, heard })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// True for topologies built by [`Topology::from_edges`].
    pub fn is_explicit(&self) -> bool {
        self.explicit
    }

    /// True when this is an `L`-connected pattern rather than a hand-built one.
    pub fn is_locally_connected(&self) -> bool {
        !self.explicit
    }

    /// Whether receiver `i` hears transmitter `j` (1-based). Out-of-range
    /// indices are simply not connected.
    pub fn connected(&self, i: usize, j: usize) -> bool {
        (1..=self.k).contains(&i) && (1..=self.k).contains(&j) && self.heard[i - 1] >> (j - 1) & 1 == 1
    }

    pub fn receivers_heard_by(&self, j: usize) -> Result<Vec<usize>> {
        self.check_index(j)?;
        Ok((1..=self.k).filter(|&i| self.connected(i, j)).collect())
    }

    /// Transmitters heard at receiver `i`, ascending.
    pub fn transmitters_heard_at(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        Ok((1..=self.k).filter(|&j| self.connected(i, j)).collect())
    }

    /// Bitmask (bit `i-1`) of receivers that hear transmitter `j`.
    pub(crate) fn reach_mask(&self, j: usize) -> u64 {
        (0..self.k)
            .filter(|&i| self.heard[i] >> (j - 1) & 1 == 1)
            .fold(0, |m, i| m | 1 << i)
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if (1..=self.k).contains(&i) {
            Ok(())
        } else {
            Err(Error::param(format!("index {i} outside 1..={}", self.k)))
        }
    }

    /// All connected `(receiver, transmitter)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..=self.k)
            .flat_map(|i| (1..=self.k).filter(move |&j| self.connected(i, j)).map(move |j| (i, j)))
            .collect()
    }

    /// Searches the transmitter/receiver bipartite graph for a chordless
    /// cycle of length at least 6, exploring cycles of at most
    /// `cycle_length_cap` vertices.
    pub fn is_chordal_bipartite(&self, cycle_length_cap: usize) -> Result<Chordality> {
        if self.k > CHORDALITY_LIMIT {
            return Err(Error::limit("K", self.k, CHORDALITY_LIMIT));
        }
        let k = self.k;
        // vertices 0..k are transmitters, k..2k receivers
        let mut adj = vec![0u64; 2 * k];
        for i in 0..k {
            for j in 0..k {
                if self.heard[i] >> j & 1 == 1 {
                    adj[j] |= 1 << (k + i);
                    adj[k + i] |= 1 << j;
                }
            }
        }
        // no cycle is longer than the vertex count, so a larger cap never truncates
        let full = cycle_length_cap >= 2 * k;
        let mut search = CycleSearch { adj: &adj, cap: cycle_length_cap.min(2 * k), full, truncated: false };
        for start in 0..2 * k {
            let mut path = vec![start];
            if let Some(cycle) = search.extend(&mut path) {
                let cycle = cycle
                    .into_iter()
                    .map(|v| if v < k { Vertex::Tx(v + 1) } else { Vertex::Rx(v - k + 1) })
                    .collect();
                return Ok(Chordality::NotChordal { cycle });
            }
        }
        Ok(if search.truncated { Chordality::Inconclusive } else { Chordality::Chordal })
    }

    pub fn to_doc(&self) -> TopologyDoc {
        TopologyDoc {
            schema: TOPOLOGY_SCHEMA.to_string(),
            k: self.k,
            l: self.l,
            mode: self.mode,
            explicit_edges: self.explicit.then(|| self.edges().into_iter().map(|(i, j)| [i, j]).collect()),
        }
    }

    pub fn from_doc(doc: &TopologyDoc) -> Result<Self> {
        Error::check_schema(&doc.schema, TOPOLOGY_SCHEMA)?;
        match &doc.explicit_edges {
            Some(edges) => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                Topology::from_edges(doc.k, &pairs)
            }
            None => Topology::make_locally_connected(doc.k, doc.l, doc.mode),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("topology doc serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TopologyDoc = serde_json::from_str(text)?;
        Topology::from_doc(&doc)
    }
}

/// Vertex of the bipartite topology graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vertex {
    Tx(usize),
    Rx(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chordality {
    Chordal,
    /// A chordless cycle of length ≥ 6 was found.
    NotChordal { cycle: Vec<Vertex> },
    /// No chordless cycle within the cap, but longer paths were cut off.
    Inconclusive,
}

impl Chordality {
    /// `Some(true/false)` when conclusive.
    pub fn is_chordal(&self) -> Option<bool> {
        match self {
            Chordality::Chordal => Some(true),
            Chordality::NotChordal { .. } => Some(false),
            Chordality::Inconclusive => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Chordality::Chordal => "true",
            Chordality::NotChordal { .. } => "false",
            Chordality::Inconclusive => "inconclusive",
        }
    }
}

struct CycleSearch<'a> {
    adj: &'a [u64],
    cap: usize,
    full: bool,
    truncated: bool,
}

impl CycleSearch<'_> {
    // Grows chordless paths from path[0] through vertices larger than path[0].
    fn extend(&mut self, path: &mut Vec<usize>) -> Option<Vec<usize>> {
        let start = path[0];
        let last = *path.last().unwrap();
        let above = !((1u64 << (start + 1)) - 1);
        let on_path = path.iter().fold(0u64, |m, &v| m | 1 << v);
        let interior = if path.len() > 2 {
            path[1..path.len() - 1].iter().fold(0u64, |m, &v| m | self.adj[v])
        } else {
            0
        };
        let mut candidates = self.adj[last] & above & !on_path & !interior;
        while candidates != 0 {
            let u = candidates.trailing_zeros() as usize;
            candidates &= candidates - 1;
            let closes = path.len() >= 2 && self.adj[start] >> u & 1 == 1;
            if closes {
                if (5..self.cap).contains(&path.len()) {
                    let mut cycle = path.clone();
                    cycle.push(u);
                    return Some(cycle);
                }
                if path.len() + 1 > self.cap {
                    self.truncated |= !self.full;
                }
                continue;
            }
            if path.len() + 1 >= self.cap {
                self.truncated |= !self.full;
                continue;
            }
            path.push(u);
            let found = self.extend(path);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// Structured text form of a [`Topology`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyDoc {
    #[serde(default = "topology_schema")]
    pub schema: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_edges: Option<Vec<[usize; 2]>>,
}

fn topology_schema() -> String {
    TOPOLOGY_SCHEMA.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trunc(k: usize, l: usize) -> Topology {
        Topology::make_locally_connected(k, l, Mode::Truncated).unwrap()
    }

    #[test]
    fn truncated_pattern() {
        let t = trunc(5, 2);
        assert!(t.connected(3, 1));
        assert!(!t.connected(4, 1));
        assert!(!t.connected(1, 3));
    }

    #[test]
    fn no_cross_links_when_l_is_zero() {
        let t = trunc(4, 0);
        for i in 1..=4 {
            for j in 1..=4 {
                assert_eq!(t.connected(i, j), i == j);
            }
        }
    }

    #[test]
    fn cyclic_wraps() {
        let t = Topology::make_locally_connected(6, 2, Mode::Cyclic).unwrap();
        assert!(t.connected(1, 5));
        assert!(!t.connected(1, 4));
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(Topology::make_locally_connected(0, 0, Mode::Truncated), Err(Error::InvalidParameter(_))));
        assert!(matches!(Topology::make_locally_connected(3, 3, Mode::Cyclic), Err(Error::InvalidParameter(_))));
        assert!(Topology::make_locally_connected(65, 1, Mode::Cyclic).unwrap_err().is_resource_limit());
    }

    #[test]
    fn heard_by() {
        assert_eq!(trunc(5, 2).receivers_heard_by(1).unwrap(), vec![1, 2, 3]);
        assert_eq!(trunc(5, 2).receivers_heard_by(5).unwrap(), vec![5]);
        let c = Topology::make_locally_connected(5, 2, Mode::Cyclic).unwrap();
        assert_eq!(c.receivers_heard_by(5).unwrap(), vec![1, 2, 5]);
        assert!(c.receivers_heard_by(6).is_err());
        assert!(c.receivers_heard_by(0).is_err());
    }

    #[test]
    fn chordless_hexagon() {
        let t = Topology::from_edges(3, &[(1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (1, 3)]).unwrap();
        let out = t.is_chordal_bipartite(6).unwrap();
        assert_eq!(out.is_chordal(), Some(false));
        if let Chordality::NotChordal { cycle } = out {
            assert_eq!(cycle.len(), 6);
        }
        // a cap below the hexagon cannot see it
        assert_eq!(t.is_chordal_bipartite(5).unwrap(), Chordality::Inconclusive);
    }

    #[test]
    fn small_locally_connected_are_chordal() {
        assert_eq!(trunc(8, 1).is_chordal_bipartite(16).unwrap(), Chordality::Chordal);
        assert_eq!(trunc(10, 3).is_chordal_bipartite(20).unwrap(), Chordality::Chordal);
    }

    #[test]
    fn cyclic_ring_is_not_chordal() {
        // L = 1 cyclic is one long 2K-cycle
        let t = Topology::make_locally_connected(6, 1, Mode::Cyclic).unwrap();
        assert_eq!(t.is_chordal_bipartite(12).unwrap().is_chordal(), Some(false));
    }

    #[test]
    fn chordality_limit() {
        let t = trunc(17, 1);
        assert!(t.is_chordal_bipartite(34).unwrap_err().is_resource_limit());
    }

    #[test]
    fn explicit_requires_direct_links() {
        assert!(Topology::from_edges(2, &[(1, 1), (2, 1)]).is_err());
        assert!(Topology::from_edges(2, &[(1, 1), (3, 1)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        for t in [
            trunc(7, 3),
            Topology::make_locally_connected(6, 2, Mode::Cyclic).unwrap(),
            Topology::from_edges(3, &[(1, 1), (2, 1), (2, 2), (3, 3)]).unwrap(),
        ] {
            let back = Topology::from_json(&t.to_json()).unwrap();
            assert_eq!(back, t);
        }
        assert!(!trunc(4, 1).to_json().contains("explicit_edges"));
        let newer = trunc(4, 1).to_json().replace("timdof.topology/1", "timdof.topology/2");
        assert!(matches!(Topology::from_json(&newer), Err(Error::InvalidInput(_))));
    }
}
