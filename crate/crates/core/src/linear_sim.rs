//! Linear cooperation schemes over `n` channel uses, evaluated by generic
//! rank on sampled channel realizations.
//!
//! Noise never enters: every quantity here is a rank of a noiseless map.
//! Precoders are drawn or constructed before any channel is sampled, so
//! they cannot depend on the coefficients.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Complex, DMatrix};
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::schemes::{DofResult, MessageAssignment, Method, Stability, TdmaSchedule};
use crate::topology::Topology;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Largest number of channel uses a scheme may span.
pub const SLOT_LIMIT: usize = 64;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

pub const SCHEME_SCHEMA: &str = "timdof.linear-scheme/1";
pub const CHANNEL_SCHEMA: &str = "timdof.channel/1";

/// Numerical rank of `m`.
pub fn rank(m: &CMatrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

fn check_slots(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if n > SLOT_LIMIT {
        return Err(Error::limit("n", n, SLOT_LIMIT));
    }
    Ok(())
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coherence {
    /// Fresh coefficients in every slot.
    TimeVarying,
    /// One coefficient per link for all slots.
    Constant,
}

/// Coefficients `H_{i,j}(t)` of every link, zero where the topology has none.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    k: usize,
    n: usize,
    coherence: Coherence,
    // (receiver, transmitter) -> per-slot coefficients
    links: BTreeMap<(usize, usize), Vec<C64>>,
}

pub fn sample_channel(t: &Topology, n: usize, coherence: Coherence, seed: u64) -> Result<ChannelRealization> {
    check_slots(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = BTreeMap::new();
    for (i, j) in t.edges() {
        let slots = match coherence {
            Coherence::TimeVarying => (0..n).map(|_| gaussian(&mut rng)).collect(),
            Coherence::Constant => vec![gaussian(&mut rng); n],
        };
        links.insert((i, j), slots);
    }
    Ok(ChannelRealization { k: t.k(), n, coherence, links })
}

impl ChannelRealization {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coherence(&self) -> Coherence {
        self.coherence
    }

    /// `H_{i,j}(slot)` with 1-based indices.
    pub fn coefficient(&self, i: usize, j: usize, slot: usize) -> C64 {
        self.links.get(&(i, j)).map_or(C64::new(0.0, 0.0), |h| h[slot - 1])
    }

    pub fn is_link(&self, i: usize, j: usize) -> bool {
        self.links.contains_key(&(i, j))
    }

    /// `diag(H_{i,j}(1..n))`.
    pub fn diagonal(&self, i: usize, j: usize) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |r, c| if r == c { self.coefficient(i, j, r + 1) } else { C64::new(0.0, 0.0) })
    }

    pub fn to_json(&self) -> String {
        let doc = ChannelDoc {
            schema: CHANNEL_SCHEMA.into(),
            k: self.k,
            n: self.n,
            coherence: self.coherence,
            links: self
                .links
                .iter()
                .map(|(&(rx, tx), h)| LinkDoc { rx, tx, values: h.iter().map(|z| [z.re, z.im]).collect() })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("channel serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChannelDoc = serde_json::from_str(text)?;
        Error::check_schema(&doc.schema, CHANNEL_SCHEMA)?;
        check_slots(doc.n)?;
        let mut links = BTreeMap::new();
        for l in doc.links {
            if !(1..=doc.k).contains(&l.rx) || !(1..=doc.k).contains(&l.tx) || l.values.len() != doc.n {
                return Err(Error::InvalidInput(format!("bad link entry ({}, {})", l.rx, l.tx)));
            }
            links.insert((l.rx, l.tx), l.values.iter().map(|v| C64::new(v[0], v[1])).collect());
        }
        Ok(ChannelRealization { k: doc.k, n: doc.n, coherence: doc.coherence, links })
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelDoc {
    schema: String,
    #[serde(rename = "K")]
    k: usize,
    n: usize,
    coherence: Coherence,
    links: Vec<LinkDoc>,
}

#[derive(Serialize, Deserialize)]
struct LinkDoc {
    rx: usize,
    tx: usize,
    values: Vec<[f64; 2]>,
}

/// Precoders `V_{j,i}` (n × m_i) for each message `i` and `j ∈ T_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScheme {
    n: usize,
    symbols: Vec<usize>,
    // (transmitter, message) -> V_{j,i}
    precoders: BTreeMap<(usize, usize), CMatrix>,
    assignment: MessageAssignment,
}

impl LinearScheme {
    /// `precoders` maps 1-based `(transmitter, message)` pairs to `n × m_i`
    /// matrices. Pairs left out transmit nothing.
    pub fn new(
        assignment: MessageAssignment,
        n: usize,
        symbols: Vec<usize>,
        precoders: impl IntoIterator<Item = ((usize, usize), CMatrix)>,
    ) -> Result<Self> {
        check_slots(n)?;
        let k = assignment.k();
        if symbols.len() != k {
            return Err(Error::InvalidInput(format!("{} symbol counts for K = {k}", symbols.len())));
        }
        if let Some(i) = symbols.iter().position(|&m| m > n) {
            return Err(Error::InvalidInput(format!("message {} has {} > n symbols", i + 1, symbols[i])));
        }
        let mut map = BTreeMap::new();
        for ((j, i), v) in precoders {
            if !(1..=k).contains(&i) || !assignment.holds(j, i) {
                return Err(Error::InvalidInput(format!("transmitter {j} does not hold message {i}")));
            }
            if v.shape() != (n, symbols[i - 1]) {
                return Err(Error::InvalidInput(format!(
                    "V_{{{j},{i}}} is {:?}, expected {:?}",
                    v.shape(),
                    (n, symbols[i - 1])
                )));
            }
            map.insert((j, i), v);
        }
        Ok(LinearScheme { n, symbols, precoders: map, assignment })
    }

    pub fn k(&self) -> usize {
        self.symbols.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn assignment(&self) -> &MessageAssignment {
        &self.assignment
    }

    pub fn precoder(&self, j: usize, i: usize) -> Option<&CMatrix> {
        self.precoders.get(&(j, i))
    }

    pub fn precoders(&self) -> impl Iterator<Item = ((usize, usize), &CMatrix)> {
        self.precoders.iter().map(|(&key, v)| (key, v))
    }

    /// Every precoder multiplied by `factor`.
    pub fn scaled(&self, factor: C64) -> Self {
        let mut s = self.clone();
        for v in s.precoders.values_mut() {
            *v *= factor;
        }
        s
    }

    fn check_channel(&self, c: &ChannelRealization) -> Result<()> {
        if c.k() != self.k() || c.n() != self.n {
            return Err(Error::InvalidInput(format!(
                "scheme has K = {}, n = {}; channel has K = {}, n = {}",
                self.k(),
                self.n,
                c.k(),
                c.n()
            )));
        }
        Ok(())
    }

    /// `Σ_j diag(H_{i,j}) V_{j,k}`: what receiver `i` sees of message `k`.
    fn seen(&self, c: &ChannelRealization, i: usize, msg: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.symbols[msg - 1]);
        for (&(j, m), v) in &self.precoders {
            if m == msg && c.is_link(i, j) {
                out += c.diagonal(i, j) * v;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = SchemeDoc {
            schema: SCHEME_SCHEMA.into(),
            n: self.n,
            symbols: self.symbols.clone(),
            assignment: self.assignment.clone(),
            precoders: self
                .precoders
                .iter()
                .map(|(&(tx, message), v)| PrecoderDoc {
                    tx,
                    message,
                    rows: v.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scheme serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SchemeDoc = serde_json::from_str(text)?;
        Error::check_schema(&doc.schema, SCHEME_SCHEMA)?;
        let mut precoders = Vec::new();
        for p in doc.precoders {
            let m = *doc.symbols.get(p.message.wrapping_sub(1)).unwrap_or(&0);
            if p.rows.len() != doc.n || p.rows.iter().any(|r| r.len() != m) {
                return Err(Error::InvalidInput(format!("precoder ({}, {}) has the wrong shape", p.tx, p.message)));
            }
            let v = CMatrix::from_fn(doc.n, m, |r, c| C64::new(p.rows[r][c][0], p.rows[r][c][1]));
            precoders.push(((p.tx, p.message), v));
        }
        LinearScheme::new(doc.assignment, doc.n, doc.symbols, precoders)
    }
}

#[derive(Serialize, Deserialize)]
struct SchemeDoc {
    schema: String,
    n: usize,
    symbols: Vec<usize>,
    assignment: MessageAssignment,
    precoders: Vec<PrecoderDoc>,
}

#[derive(Serialize, Deserialize)]
struct PrecoderDoc {
    tx: usize,
    message: usize,
    rows: Vec<Vec<[f64; 2]>>,
}

/// The desired block (n × m_i) and the interference block with the other
/// messages' columns in increasing message order.
pub fn received_map(s: &LinearScheme, c: &ChannelRealization, i: usize) -> Result<(CMatrix, CMatrix)> {
    s.check_channel(c)?;
    if !(1..=s.k()).contains(&i) {
        return Err(Error::param(format!("receiver {i} outside 1..={}", s.k())));
    }
    let desired = s.seen(c, i, i);
    let others: Vec<usize> = (1..=s.k()).filter(|&m| m != i).collect();
    let width: usize = others.iter().map(|&m| s.symbols[m - 1]).sum();
    let mut interference = CMatrix::zeros(s.n, width);
    let mut col = 0;
    for m in others {
        let block = s.seen(c, i, m);
        interference.view_mut((0, col), block.shape()).copy_from(&block);
        col += block.ncols();
    }
    Ok((desired, interference))
}

/// `rank([desired | interference]) - rank(interference)` at receiver `i`.
pub fn decodable_symbols(s: &LinearScheme, c: &ChannelRealization, i: usize) -> Result<usize> {
    let (d, f) = received_map(s, c, i)?;
    let joint = CMatrix::from_fn(s.n, d.ncols() + f.ncols(), |r, col| {
        if col < d.ncols() {
            d[(r, col)]
        } else {
            f[(r, col - d.ncols())]
        }
    });
    Ok(rank(&joint) - rank(&f))
}

fn total_decodable(s: &LinearScheme, c: &ChannelRealization) -> Result<usize> {
    (1..=s.k()).map(|i| decodable_symbols(s, c, i)).sum()
}

/// Decodable symbol totals for trials `0..trials`, trial `k` drawn with
/// `seed + k` on time-varying channels.
pub fn trial_totals(s: &LinearScheme, t: &Topology, trials: usize, seed: u64) -> Result<Vec<usize>> {
    if t.k() != s.k() {
        return Err(Error::InvalidInput(format!("scheme has K = {}, topology K = {}", s.k(), t.k())));
    }
    (0..trials as u64)
        .map(|k| total_decodable(s, &sample_channel(t, s.n, Coherence::TimeVarying, seed.wrapping_add(k))?))
        .collect()
}

/// Sum DoF of the scheme: the modal decodable total across trials, over `n`.
pub fn evaluate_dof(s: &LinearScheme, t: &Topology, trials: usize, seed: u64) -> Result<DofResult> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let totals = trial_totals(s, t, trials, seed)?;
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &v in &totals {
        *counts.entry(v).or_default() += 1;
    }
    // ties go to the smaller total
    let (&mode, &hits) = counts.iter().max_by_key(|(v, c)| (**c, std::cmp::Reverse(**v))).expect("trials ≥ 1");
    let disagreements = trials - hits;
    let mut result = DofResult::new(
        Rational::new(mode as i128, s.n as i128),
        s.k(),
        Method::LinearSim,
    );
    result.stability = Some(Stability { trials, disagreements, unstable: disagreements * 100 > trials });
    Ok(result)
}

/// Embeds a TDMA schedule: entry after entry takes consecutive slots, and
/// each served message gets one fresh symbol per slot, sent by its server.
/// With `n = None` the smallest `n` making every fraction integral is used.
pub fn scheme_from_schedule(
    t: &Topology,
    a: &MessageAssignment,
    sched: &TdmaSchedule,
    n: Option<usize>,
) -> Result<LinearScheme> {
    sched.validate(t, Some(a))?;
    let lcm = sched
        .entries()
        .iter()
        .try_fold(1i128, |acc, e| {
            let l = acc.lcm(e.fraction.denom());
            (l <= SLOT_LIMIT as i128).then_some(l)
        })
        .ok_or_else(|| Error::param(format!("slot count needed by the schedule exceeds {SLOT_LIMIT}")))?
        as usize;
    let n = match n {
        None => lcm,
        Some(n) if n % lcm == 0 => n,
        Some(n) => return Err(Error::param(format!("n = {n} is not a multiple of {lcm}"))),
    };
    check_slots(n)?;
    let k = t.k();
    // (transmitter, message) -> slots, in order
    let mut slots: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut next = 0;
    for e in sched.entries() {
        let len = (e.fraction * Rational::from_integer(n as i128)).to_integer() as usize;
        for &(msg, tx) in e.set.pairs() {
            slots.entry((tx, msg)).or_default().extend(next..next + len);
        }
        next += len;
    }
    let mut symbols = vec![0; k];
    for (&(_, msg), s) in &slots {
        symbols[msg - 1] += s.len();
    }
    let mut offset = vec![0; k];
    let precoders: Vec<_> = slots
        .into_iter()
        .map(|((tx, msg), s)| {
            let mut v = CMatrix::zeros(n, symbols[msg - 1]);
            for &slot in &s {
                v[(slot, offset[msg - 1])] = C64::new(1.0, 0.0);
                offset[msg - 1] += 1;
            }
            ((tx, msg), v)
        })
        .collect();
    LinearScheme::new(a.clone(), n, symbols, precoders)
}

/// Random precoders for assignment `a`: each `m_i` uniform in `0..=n`, each
/// `V_{j,i}` present with probability `density`, entries complex Gaussian.
pub fn random_scheme(t: &Topology, a: &MessageAssignment, n: usize, density: f64, seed: u64) -> Result<LinearScheme> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::param(format!("density {density} outside (0, 1]")));
    }
    check_slots(n)?;
    if a.k() != t.k() {
        return Err(Error::InvalidAssignment(format!("assignment has {} messages, K = {}", a.k(), t.k())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols: Vec<usize> = (0..t.k()).map(|_| rng.random_range(0..=n)).collect();
    let mut precoders = Vec::new();
    for i in 1..=t.k() {
        for &j in a.transmit_set(i) {
            if density < 1.0 && !rng.random_bool(density) {
                continue;
            }
            let m = symbols[i - 1];
            let v = CMatrix::from_fn(n, m, |_, _| gaussian(&mut rng));
            precoders.push(((j, i), v));
        }
    }
    LinearScheme::new(a.clone(), n, symbols, precoders)
}

fn receiver_set(k: usize, b: &[usize]) -> Result<Vec<usize>> {
    let mut b = b.to_vec();
    b.sort_unstable();
    b.dedup();
    if let Some(&i) = b.iter().find(|&&i| !(1..=k).contains(&i)) {
        return Err(Error::param(format!("receiver {i} outside 1..={k}")));
    }
    Ok(b)
}

/// `H_{B,[K]}`: one block row per receiver of `b` (sorted), one block column
/// per transmitter, each block `diag(H_{i,j}(1..n))`.
pub fn build_stacked_matrix(s: &LinearScheme, c: &ChannelRealization, b: &[usize]) -> Result<CMatrix> {
    s.check_channel(c)?;
    let b = receiver_set(s.k(), b)?;
    let n = s.n;
    Ok(CMatrix::from_fn(n * b.len(), n * s.k(), |r, col| {
        let (i, j) = (b[r / n], col / n + 1);
        if r % n == col % n {
            c.coefficient(i, j, r % n + 1)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `V_{[K],M}`: block row per transmitter, column block per message of `m`.
fn stacked_precoders(s: &LinearScheme, messages: &[usize]) -> CMatrix {
    let n = s.n;
    let width: usize = messages.iter().map(|&i| s.symbols[i - 1]).sum();
    let mut out = CMatrix::zeros(n * s.k(), width);
    let mut col = 0;
    for &i in messages {
        for j in 1..=s.k() {
            if let Some(v) = s.precoder(j, i) {
                out.view_mut((n * (j - 1), col), v.shape()).copy_from(v);
            }
        }
        col += s.symbols[i - 1];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    #[serde(rename = "B")]
    pub b: Vec<usize>,
    /// Transmitters holding only messages of `B`.
    #[serde(rename = "U_B")]
    pub u_b: Vec<usize>,
    /// Symbols of messages outside `B`.
    pub s: usize,
    /// Rank of the map from those symbols to the processed signals of `B`.
    pub r: usize,
    pub deficiency: usize,
    pub reconstructable: bool,
}

/// Whether the signals `X_{j,i}` of messages outside `B` can be rebuilt
/// linearly from the received signals of `B` once noise and the
/// contributions of `B`'s own messages are removed.
///
/// Everything is expressed in the coordinates of the outside symbols
/// `w_{B̄}`: the processed signals are the rows of `H_{B,[K]} V_{[K],B̄}`, and
/// the signals to rebuild are the rows of each `V_{j,i}`, `i ∉ B`. The check
/// passes when appending the latter does not raise the rank.
pub fn lemma1_check(s: &LinearScheme, c: &ChannelRealization, b: &[usize]) -> Result<ReconstructionReport> {
    let b = receiver_set(s.k(), b)?;
    let h = build_stacked_matrix(s, c, &b)?;
    let outside: Vec<usize> = (1..=s.k()).filter(|i| b.binary_search(i).is_err()).collect();
    let carried_outside: Vec<usize> = outside.iter().flat_map(|&i| s.assignment.transmit_set(i).to_vec()).collect();
    let u_b = (1..=s.k()).filter(|j| !carried_outside.contains(j)).collect();
    let v = stacked_precoders(s, &outside);
    let processed = h * &v;
    let s_count = v.ncols();
    let r = rank(&processed);
    // column offset of each outside message within w_{B̄}
    let mut col_of = BTreeMap::new();
    let mut col = 0;
    for &i in &outside {
        col_of.insert(i, col);
        col += s.symbols[i - 1];
    }
    let targets: Vec<(usize, &CMatrix)> = outside
        .iter()
        .flat_map(|&i| s.assignment.transmit_set(i).iter().filter_map(move |&j| s.precoder(j, i).map(|p| (i, p))))
        .collect();
    let mut augmented = CMatrix::zeros(processed.nrows() + targets.len() * s.n, s_count);
    augmented.view_mut((0, 0), processed.shape()).copy_from(&processed);
    let mut row = processed.nrows();
    for (i, p) in targets {
        augmented.view_mut((row, col_of[&i]), p.shape()).copy_from(p);
        row += s.n;
    }
    debug_assert_eq!(row, augmented.nrows());
    let reconstructable = rank(&augmented) == r;
    Ok(ReconstructionReport { b, u_b, s: s_count, r, deficiency: s_count - r, reconstructable })
}

/// One channel draw of a scheme: decodable symbols summed over receivers
/// and the reconstruction report for `B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub decodable: usize,
    pub report: ReconstructionReport,
}

/// Trial `k` uses the same channel draw (`seed + k`) as [`evaluate_dof`].
pub fn trial_records(s: &LinearScheme, t: &Topology, b: &[usize], trials: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    if t.k() != s.k() {
        return Err(Error::InvalidInput(format!("scheme has K = {}, topology K = {}", s.k(), t.k())));
    }
    (0..trials)
        .map(|trial| {
            let c = sample_channel(t, s.n, Coherence::TimeVarying, seed.wrapping_add(trial as u64))?;
            Ok(TrialRecord { trial, decodable: total_decodable(s, &c)?, report: lemma1_check(s, &c, b)? })
        })
        .collect()
}
