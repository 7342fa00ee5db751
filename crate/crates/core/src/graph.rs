//! Undirected networks where every vertex carries a self-loop, plus the
//! random families used by the experiments.
//!
//! Degrees count the self-loop once (`d_i = sum_j alpha_ij` with
//! `alpha_ii = 1`); distances ignore self-loops.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeds tried (seed, seed+1, ...) before a generator gives up.
pub const MAX_ATTEMPTS: u64 = 100;

const RR_PAIRING_TRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    /// Mean of `d_i`, self-loop included.
    pub mean: f64,
    /// Population variance of `d_i`.
    pub variance: f64,
    pub histogram: BTreeMap<usize, usize>,
}

impl DegreeStats {
    pub fn mean_without_loops(&self) -> f64 {
        self.mean - 1.0
    }
}

impl Network {
    /// Builds a connected network from undirected edges on vertices `0..n`.
    /// Self-loops are added for every vertex; explicit self-loops and
    /// duplicate edges in the input are ignored.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let net = Network::build(n, edges)?;
        if !net.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(net)
    }

    fn build<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidParams("network needs at least one vertex".into()));
        }
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            adjacency[i * n + i] = true;
        }
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, len: n });
                }
            }
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[i * n + j]).collect())
            .collect();
        Ok(Network {
            n,
            adjacency,
            neighbors,
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Network::build(n, edges).expect("complete graph")
    }

    pub fn path(n: usize) -> Self {
        Network::build(n, (1..n).map(|v| (v - 1, v))).expect("path graph")
    }

    pub fn cycle(n: usize) -> Self {
        Network::build(n, (0..n).map(|v| (v, (v + 1) % n))).expect("cycle graph")
    }

    /// Star with vertex 0 at the centre.
    pub fn star(n: usize) -> Self {
        Network::build(n, (1..n).map(|v| (0, v))).expect("star graph")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Sorted neighbour list of `i`, including `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Non-self edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|u| {
                self.neighbors[u]
                    .iter()
                    .copied()
                    .filter(move |&v| v > u)
                    .map(move |v| (u, v))
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// 0/1 adjacency matrix including the diagonal.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if self.is_adjacent(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(Option::is_some)
    }

    /// Longest shortest path over all vertex pairs.
    pub fn diameter(&self) -> usize {
        (0..self.n)
            .map(|s| {
                self.bfs(s)
                    .into_iter()
                    .map(|d| d.expect("network is connected"))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let degrees = self.degrees();
        let n = self.n as f64;
        let mean = degrees.iter().sum::<usize>() as f64 / n;
        let variance = degrees
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let mut histogram = BTreeMap::new();
        for d in degrees {
            *histogram.entry(d).or_insert(0) += 1;
        }
        DegreeStats {
            mean,
            variance,
            histogram,
        }
    }

    /// Edge-list text: header `n=<count>`, then one 1-indexed `u v` per line.
    /// Self-loops are implied and not written.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n={}", self.n)?;
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", u + 1, v + 1)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let n = loop {
            match lines.next() {
                None => return Err(Error::Parse("missing header line n=<count>".into())),
                Some((_, line)) => {
                    let line = line?;
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    let count = line
                        .strip_prefix("n=")
                        .ok_or_else(|| Error::Parse(format!("expected n=<count>, got {:?}", line)))?;
                    break count
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad vertex count {:?}", count)))?;
                }
            }
        };
        let mut edges = Vec::new();
        for (no, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                let tok = parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: expected \"u v\"", no + 1)))?;
                let v: usize = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad vertex {:?}", no + 1, tok)))?;
                if v == 0 || v > n {
                    return Err(Error::Parse(format!(
                        "line {}: vertex {} outside 1..={}",
                        no + 1,
                        v,
                        n
                    )));
                }
                Ok(v - 1)
            };
            let u = next()?;
            let v = next()?;
            edges.push((u, v));
        }
        Network::from_edges(n, edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Network::read_edge_list(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_edge_list(std::io::BufWriter::new(f))
    }
}

/// Random network families. The serde form is the experiment-config group
/// syntax, e.g. `{"family": "ws", "k": 4, "p": 0.1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GraphFamily {
    /// Erdos-Renyi with link probability `p`.
    Er { p: f64 },
    /// Watts-Strogatz ring lattice of even degree `k`, rewiring probability `p`.
    Ws { k: usize, p: f64 },
    /// Preferential attachment, `m` edges per arriving vertex.
    Sf { m: usize },
    /// Random `k`-regular.
    Rr { k: usize },
}

impl GraphFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::Er { .. } => "er",
            GraphFamily::Ws { .. } => "ws",
            GraphFamily::Sf { .. } => "sf",
            GraphFamily::Rr { .. } => "rr",
        }
    }

    /// Parameter string without commas, for CSV output.
    pub fn params_label(&self) -> String {
        match self {
            GraphFamily::Er { p } => format!("p={}", p),
            GraphFamily::Ws { k, p } => format!("k={};p={}", k, p),
            GraphFamily::Sf { m } => format!("m={}", m),
            GraphFamily::Rr { k } => format!("k={}", k),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n = {} must be at least 2", n)));
        }
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match *self {
            GraphFamily::Er { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return bad(format!("er: p = {} must lie in (0, 1]", p));
                }
            }
            GraphFamily::Ws { k, p } => {
                if k < 2 || k % 2 != 0 || k >= n {
                    return bad(format!("ws: k = {} must be even with 2 <= k < n = {}", k, n));
                }
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("ws: p = {} must lie in [0, 1]", p));
                }
            }
            GraphFamily::Sf { m } => {
                if m < 1 || m >= n {
                    return bad(format!("sf: m = {} must satisfy 1 <= m < n = {}", m, n));
                }
            }
            GraphFamily::Rr { k } => {
                if k < 1 || k >= n {
                    return bad(format!("rr: k = {} must satisfy 1 <= k < n = {}", k, n));
                }
                if (n * k) % 2 != 0 {
                    return bad(format!("rr: n*k = {}*{} must be even", n, k));
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Network> {
        match *self {
            GraphFamily::Er { p } => gen_er(n, p, seed),
            GraphFamily::Ws { k, p } => gen_ws(n, k, p, seed),
            GraphFamily::Sf { m } => gen_sf(n, m, seed),
            GraphFamily::Rr { k } => gen_rr(n, k, seed),
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.params_label())
    }
}

/// Runs `attempt` with seed, seed+1, ... until it yields a connected network.
fn retry_connected<F>(what: &str, seed: u64, mut attempt: F) -> Result<Network>
where
    F: FnMut(&mut ChaCha8Rng) -> Option<Network>,
{
    for k in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
        if let Some(net) = attempt(&mut rng) {
            if net.is_connected() {
                return Ok(net);
            }
        }
    }
    Err(Error::GenerationFailed(format!(
        "{}: no connected sample in {} attempts from seed {}",
        what, MAX_ATTEMPTS, seed
    )))
}

pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Network> {
    let family = GraphFamily::Er { p };
    family.validate(n)?;
    retry_connected(&family.to_string(), seed, |rng| {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Network::build(n, edges).ok()
    })
}

pub fn gen_ws(n: usize, k: usize, p: f64, seed: u64) -> Result<Network> {
    let family = GraphFamily::Ws { k, p };
    family.validate(n)?;
    retry_connected(&family.to_string(), seed, |rng| {
        let mut adj = vec![false; n * n];
        let mut deg = vec![0usize; n];
        let link = |adj: &mut [bool], deg: &mut [usize], u: usize, v: usize, on: bool| {
            adj[u * n + v] = on;
            adj[v * n + u] = on;
            if on {
                deg[u] += 1;
                deg[v] += 1;
            } else {
                deg[u] -= 1;
                deg[v] -= 1;
            }
        };
        for u in 0..n {
            for j in 1..=k / 2 {
                link(&mut adj, &mut deg, u, (u + j) % n, true);
            }
        }
        for j in 1..=k / 2 {
            for u in 0..n {
                let v = (u + j) % n;
                if rng.random::<f64>() >= p {
                    continue;
                }
                if deg[u] >= n - 1 {
                    continue;
                }
                let mut w = rng.random_range(0..n);
                while w == u || adj[u * n + w] {
                    w = rng.random_range(0..n);
                }
                link(&mut adj, &mut deg, u, v, false);
                link(&mut adj, &mut deg, u, w, true);
            }
        }
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        let edges: Vec<_> = edges.filter(|&(u, v)| adj[u * n + v]).collect();
        Network::build(n, edges).ok()
    })
}

/// Preferential attachment grown from an `m`-vertex clique.
pub fn gen_sf(n: usize, m: usize, seed: u64) -> Result<Network> {
    let family = GraphFamily::Sf { m };
    family.validate(n)?;
    retry_connected(&family.to_string(), seed, |rng| {
        let mut edges = Vec::new();
        // Each vertex appears here once per incident edge.
        let mut ends: Vec<usize> = Vec::new();
        for u in 0..m {
            for v in u + 1..m {
                edges.push((u, v));
                ends.push(u);
                ends.push(v);
            }
        }
        for v in m..n {
            let mut targets: Vec<usize> = Vec::with_capacity(m);
            while targets.len() < m {
                let t = if ends.is_empty() {
                    rng.random_range(0..v)
                } else {
                    ends[rng.random_range(0..ends.len())]
                };
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for &t in &targets {
                edges.push((t, v));
                ends.push(t);
                ends.push(v);
            }
        }
        Network::build(n, edges).ok()
    })
}

/// Pairing-model random regular graph. Clashing pairs (loops, repeated
/// edges) are returned to the pool and re-paired; a dead end restarts.
pub fn gen_rr(n: usize, k: usize, seed: u64) -> Result<Network> {
    let family = GraphFamily::Rr { k };
    family.validate(n)?;
    retry_connected(&family.to_string(), seed, |rng| {
        (0..RR_PAIRING_TRIES)
            .find_map(|_| try_pairing(n, k, rng))
            .and_then(|edges| Network::build(n, edges).ok())
    })
}

fn try_pairing(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let mut adj = vec![false; n * n];
    let mut edges = Vec::with_capacity(n * k / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && !adj[u * n + v] {
                adj[u * n + v] = true;
                adj[v * n + u] = true;
                edges.push((u, v));
            } else {
                *leftover.entry(u).or_insert(0) += 1;
                *leftover.entry(v).or_insert(0) += 1;
            }
        }
        let pending: Vec<usize> = leftover.keys().copied().collect();
        let can_progress = pending.is_empty()
            || pending
                .iter()
                .enumerate()
                .any(|(a, &u)| pending[a + 1..].iter().any(|&v| !adj[u * n + v]));
        if !can_progress {
            return None;
        }
        stubs = leftover
            .into_iter()
            .flat_map(|(v, c)| std::iter::repeat_n(v, c))
            .collect();
    }
    Some(edges)
}
