//! Straightforward reference implementations used to check the library.
//! Each one recomputes its answer from the definitions, sharing no code
//! with the implementation under test.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use num_rational::Ratio;
use num_traits::{One, Zero};
use timdof::linear_sim::{ChannelRealization, LinearScheme};
use timdof::{Mode, Topology};

pub type Q = Ratio<i128>;

/// Receiver `i` hears transmitter `j` (1-based), from the closed form.
pub fn hears(k: usize, l: usize, mode: Mode, i: usize, j: usize) -> bool {
    match mode {
        Mode::Truncated => i >= j && i - j <= l,
        Mode::Cyclic => (i + k - j) % k <= l,
    }
}

pub fn topo(k: usize, l: usize, mode: Mode) -> Topology {
    Topology::make_locally_connected(k, l, mode).unwrap()
}

/// Demand-graph edge `u → v` for single servers `servers[v-1]`.
pub fn demand_edge(t: &Topology, servers: &[usize], u: usize, v: usize) -> bool {
    u != v && !t.connected(u, servers[v - 1])
}

/// Whether the subgraph induced by `nodes` has a directed cycle, by
/// depth-first search with colours.
pub fn has_cycle(edge: &dyn Fn(usize, usize) -> bool, nodes: &[usize]) -> bool {
    fn visit(u: usize, nodes: &[usize], edge: &dyn Fn(usize, usize) -> bool, colour: &mut Vec<u8>) -> bool {
        colour[u] = 1;
        for v in 0..nodes.len() {
            if edge(nodes[u], nodes[v]) && (colour[v] == 1 || (colour[v] == 0 && visit(v, nodes, edge, colour))) {
                return true;
            }
        }
        colour[u] = 2;
        false
    }
    let mut colour = vec![0u8; nodes.len()];
    (0..nodes.len()).any(|u| colour[u] == 0 && visit(u, nodes, edge, &mut colour))
}

/// All subsets of `1..=k` that induce an acyclic subgraph, as bit masks.
pub fn acyclic_sets(k: usize, edge: &dyn Fn(usize, usize) -> bool) -> Vec<u32> {
    (0u32..1 << k)
        .filter(|&m| {
            let nodes: Vec<usize> = (0..k).filter(|&i| m >> i & 1 == 1).map(|i| i + 1).collect();
            !has_cycle(edge, &nodes)
        })
        .collect()
}

pub fn maximal_sets(k: usize, sets: &[u32]) -> Vec<u32> {
    sets.iter()
        .copied()
        .filter(|&m| (0..k).all(|v| m >> v & 1 == 1 || !sets.contains(&(m | 1 << v))))
        .collect()
}

/// Solves `a x = b` exactly; `None` when singular.
pub fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (x, v) in a[r].iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * v;
                }
                let v = b[col];
                b[r] -= f * v;
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// `max Σ d` over `d ≥ 0`, `Σ_{i∈S} d_i ≤ 1` for each mask, by trying every
/// choice of `k` tight constraints.
pub fn lp_by_vertices(k: usize, masks: &[u32]) -> Q {
    let mut cons: Vec<(Vec<Q>, Q)> = masks
        .iter()
        .map(|&m| ((0..k).map(|i| if m >> i & 1 == 1 { Q::one() } else { Q::zero() }).collect(), Q::one()))
        .collect();
    for i in 0..k {
        cons.push(((0..k).map(|c| if c == i { -Q::one() } else { Q::zero() }).collect(), Q::zero()));
    }
    let mut best = Q::zero();
    let mut pick = Vec::new();
    choose(cons.len(), k, 0, &mut pick, &mut |idx| {
        let a = idx.iter().map(|&c| cons[c].0.clone()).collect();
        let b = idx.iter().map(|&c| cons[c].1).collect();
        if let Some(x) = solve(a, b) {
            let feasible = cons.iter().all(|(row, rhs)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<Q>() <= *rhs);
            let value: Q = x.iter().sum();
            if feasible && value > best {
                best = value;
            }
        }
    });
    best
}

fn choose(n: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for c in start..n {
        pick.push(c);
        choose(n, k, c + 1, pick, f);
        pick.pop();
    }
}

/// Largest set of messages servable together without interference, by
/// trying every choice of server (or none) for every receiver.
pub fn max_interference_free(t: &Topology) -> usize {
    let k = t.k();
    let options: Vec<Vec<usize>> = (1..=k)
        .map(|i| std::iter::once(0).chain((1..=k).filter(|&j| t.connected(i, j))).collect())
        .collect();
    let mut best = 0;
    let mut choice = vec![0; k];
    fn walk(i: usize, options: &[Vec<usize>], choice: &mut Vec<usize>, t: &Topology, best: &mut usize) {
        let k = options.len();
        if i == k {
            let served: Vec<usize> = (1..=k).filter(|&m| choice[m - 1] != 0).collect();
            let ok = served.iter().all(|&a| {
                served.iter().all(|&b| a == b || (choice[a - 1] != choice[b - 1] && !t.connected(a, choice[b - 1])))
            });
            if ok {
                *best = (*best).max(served.len());
            }
            return;
        }
        for &j in &options[i] {
            choice[i] = j;
            walk(i + 1, options, choice, t, best);
        }
    }
    walk(0, &options, &mut choice, t, &mut best);
    best
}

/// Whether the bipartite topology graph contains an induced cycle of
/// length at least six, by checking every vertex subset.
pub fn has_chordless_long_cycle(t: &Topology) -> bool {
    let k = t.k();
    // vertices 0..k are transmitters, k..2k receivers
    let adj = |a: usize, b: usize| {
        let (tx, rx) = if a < k && b >= k {
            (a + 1, b - k + 1)
        } else if b < k && a >= k {
            (b + 1, a - k + 1)
        } else {
            return false;
        };
        t.connected(rx, tx)
    };
    (0u32..1 << (2 * k)).any(|m| {
        let vs: Vec<usize> = (0..2 * k).filter(|&v| m >> v & 1 == 1).collect();
        if vs.len() < 6 || vs.iter().any(|&v| vs.iter().filter(|&&w| adj(v, w)).count() != 2) {
            return false;
        }
        // 2-regular: a single cycle iff connected
        let mut seen = vec![vs[0]];
        let mut stack = vec![vs[0]];
        while let Some(v) = stack.pop() {
            for &w in &vs {
                if adj(v, w) && !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        seen.len() == vs.len()
    })
}

pub type C = Complex<f64>;

/// Receiver `i`'s noiseless signal, slot by slot, as a map from the symbols
/// of all messages (message-major order):
/// `Y_i(t) = Σ_j H_{i,j}(t) Σ_k (V_{j,k} w_k)(t)`.
pub fn received_coefficients(s: &LinearScheme, c: &ChannelRealization, i: usize) -> DMatrix<C> {
    let n = s.n();
    let k = s.k();
    let total: usize = s.symbols().iter().sum();
    let mut y = DMatrix::from_element(n, total, C::new(0.0, 0.0));
    for slot in 0..n {
        let mut col = 0;
        for msg in 1..=k {
            for sym in 0..s.symbols()[msg - 1] {
                let mut acc = C::new(0.0, 0.0);
                for j in 1..=k {
                    if let Some(v) = s.precoder(j, msg) {
                        acc += c.coefficient(i, j, slot + 1) * v[(slot, sym)];
                    }
                }
                y[(slot, col)] = acc;
                col += 1;
            }
        }
    }
    y
}
