//! Walks on self-looped networks, their order decomposition, and the
//! walk-sum bound on consensus errors.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::LinearSystem;

/// Enumeration refuses more than this many candidate walks (`n^t`).
pub const MAX_ENUMERATED_WALKS: f64 = 1e8;

/// Largest vertex count the bitmask dynamic program accepts.
pub const MAX_DP_VERTICES: usize = 20;

/// A vertex sequence whose consecutive pairs are edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk {
    vertices: Vec<usize>,
}

impl Walk {
    pub fn new(network: &Network, vertices: Vec<usize>) -> Result<Self> {
        let walk = Walk::on_complete(network.n(), vertices)?;
        for pair in walk.vertices.windows(2) {
            if !network.is_adjacent(pair[0], pair[1]) {
                return Err(Error::InvalidParams(format!(
                    "({}, {}) is not an edge",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(walk)
    }

    /// Any sequence is a walk on the complete graph with loops.
    pub fn on_complete(n: usize, vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= n) {
            return Err(Error::IndexOutOfRange { index: v, len: n });
        }
        Ok(Walk { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn source(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn order(&self, n: usize) -> OrderDecomposition {
        walk_order(&self.vertices, n)
    }

    pub fn f_product(&self, values: &[f64]) -> f64 {
        f_product(&self.vertices, values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderDecomposition {
    pub order: usize,
    /// Walk positions where a covering sub-walk closes. The vertex there
    /// also opens the next sub-walk.
    pub cut_positions: Vec<usize>,
    /// Position where the uncovered tail begins.
    pub residual_start: usize,
}

/// Greedy decomposition into minimal sub-walks that each visit all `n`
/// vertices, adjacent sub-walks sharing their junction vertex.
///
/// Vertices must be below `n`.
pub fn walk_order(vertices: &[usize], n: usize) -> OrderDecomposition {
    let mut seen = vec![false; n];
    let mut covered = 0;
    let mut start = 0;
    let mut cuts = Vec::new();
    if let Some(&v) = vertices.first() {
        seen[v] = true;
        covered = 1;
    }
    for (k, &v) in vertices.iter().enumerate().skip(1) {
        if !seen[v] {
            seen[v] = true;
            covered += 1;
        }
        if covered == n {
            cuts.push(k);
            start = k;
            seen.iter_mut().for_each(|s| *s = false);
            seen[v] = true;
            covered = 1;
        }
    }
    OrderDecomposition {
        order: cuts.len(),
        cut_positions: cuts,
        residual_start: start,
    }
}

/// Product of `values[v]` over every position of the walk.
pub fn f_product(vertices: &[usize], values: &[f64]) -> f64 {
    vertices.iter().map(|&v| values[v]).product()
}

/// `(1 - phi)^(n r / 2)`.
pub fn order_decay(phi: f64, n: usize, r: usize) -> f64 {
    (1.0 - phi).powf(n as f64 * r as f64 / 2.0)
}

fn check_enumerable(network: &Network, source: usize, t: usize) -> Result<()> {
    let n = network.n();
    if source >= n {
        return Err(Error::IndexOutOfRange { index: source, len: n });
    }
    if (n as f64).powf(t as f64) > MAX_ENUMERATED_WALKS {
        return Err(Error::TooLarge(format!(
            "{}^{} walks exceeds the enumeration limit",
            n, t
        )));
    }
    Ok(())
}

/// Every walk of length `t` from `source`, in lexicographic order.
pub fn enumerate_walks(network: &Network, source: usize, t: usize) -> Result<WalkIter<'_>> {
    check_enumerable(network, source, t)?;
    let mut vertices = vec![source];
    for _ in 0..t {
        let last = vertices[vertices.len() - 1];
        vertices.push(network.neighbors(last)[0]);
    }
    Ok(WalkIter {
        network,
        choices: vec![0; t],
        vertices,
        done: false,
    })
}

#[derive(Debug)]
pub struct WalkIter<'a> {
    network: &'a Network,
    choices: Vec<usize>,
    vertices: Vec<usize>,
    done: bool,
}

impl Iterator for WalkIter<'_> {
    type Item = Walk;

    fn next(&mut self) -> Option<Walk> {
        if self.done {
            return None;
        }
        let out = Walk {
            vertices: self.vertices.clone(),
        };
        // Odometer over neighbour-list indices, last position fastest.
        let t = self.choices.len();
        let mut pos = t;
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            let prev = self.vertices[pos - 1];
            let nbrs = self.network.neighbors(prev);
            if self.choices[pos - 1] + 1 < nbrs.len() {
                self.choices[pos - 1] += 1;
                self.vertices[pos] = nbrs[self.choices[pos - 1]];
                for k in pos + 1..=t {
                    self.choices[k - 1] = 0;
                    self.vertices[k] = self.network.neighbors(self.vertices[k - 1])[0];
                }
                break;
            }
            pos -= 1;
        }
        Some(out)
    }
}

fn visit_walks<F: FnMut(&[usize])>(
    network: &Network,
    t: usize,
    path: &mut Vec<usize>,
    f: &mut F,
) {
    if path.len() == t + 1 {
        f(path);
        return;
    }
    let last = path[path.len() - 1];
    for &u in network.neighbors(last) {
        path.push(u);
        visit_walks(network, t, path, f);
        path.pop();
    }
}

/// Neumaier-compensated running sum; enumeration adds up to `n^t` terms.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn inverse_degrees(network: &Network) -> Vec<f64> {
    network.degrees().iter().map(|&d| 1.0 / d as f64).collect()
}

/// Sum over walks of length `t + 1` from `source` of the `1/d` product over
/// all but the last position. Equals 1 for any self-looped network.
pub fn product_mass_identity(network: &Network, source: usize, t: usize) -> Result<f64> {
    check_enumerable(network, source, t)?;
    let inv = inverse_degrees(network);
    let mut total = CompensatedSum::default();
    visit_walks(network, t, &mut vec![source], &mut |w| {
        let f = f_product(w, &inv);
        for _ in network.neighbors(w[w.len() - 1]) {
            total.add(f);
        }
    });
    Ok(total.value())
}

/// Number of walks of length `t` from `source` at each raw greedy order.
pub fn order_histogram(network: &Network, source: usize, t: usize) -> Result<Vec<u64>> {
    check_enumerable(network, source, t)?;
    let n = network.n();
    let mut hist = Vec::new();
    visit_walks(network, t, &mut vec![source], &mut |w| {
        let r = walk_order(w, n).order;
        if hist.len() <= r {
            hist.resize(r + 1, 0);
        }
        hist[r] += 1;
    });
    Ok(hist)
}

/// Walk-sum bound on `|y_source(t + 1)|` from the initial error norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub source: usize,
    pub horizon: usize,
    pub phi: f64,
    pub bound: f64,
    /// Contribution of walks whose capped order is `r`.
    pub bound_by_order: Vec<f64>,
    /// Neighbour-extended `1/d` mass of walks whose capped order is `r`.
    pub mass_by_order: Vec<f64>,
}

impl BoundReport {
    pub fn total_mass(&self) -> f64 {
        self.mass_by_order.iter().sum()
    }
}

fn check_bound_inputs(network: &Network, source: usize, phi: f64, y0_norms: &[f64]) -> Result<()> {
    let n = network.n();
    if y0_norms.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} initial norms for {} agents",
            y0_norms.len(),
            n
        )));
    }
    if source >= n {
        return Err(Error::IndexOutOfRange { index: source, len: n });
    }
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidParams(format!("phi = {} outside [0, 1]", phi)));
    }
    if y0_norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParams("initial norms must be finite and non-negative".into()));
    }
    Ok(())
}

fn check_system(system: &LinearSystem, network: &Network) -> Result<()> {
    if system.n() != network.n() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} rows but network has {} agents",
            system.n(),
            network.n()
        )));
    }
    Ok(())
}

struct Accumulator {
    n: usize,
    phi: f64,
    bound_by_order: Vec<CompensatedSum>,
    mass_by_order: Vec<CompensatedSum>,
    neighbour_norms: Vec<f64>,
    degrees: Vec<usize>,
}

impl Accumulator {
    fn new(network: &Network, t: usize, phi: f64, y0_norms: &[f64]) -> Self {
        let n = network.n();
        let cap = t / n;
        Accumulator {
            n,
            phi,
            bound_by_order: vec![CompensatedSum::default(); cap + 1],
            mass_by_order: vec![CompensatedSum::default(); cap + 1],
            neighbour_norms: (0..n)
                .map(|j| network.neighbors(j).iter().map(|&k| y0_norms[k]).sum())
                .collect(),
            degrees: network.degrees(),
        }
    }

    fn add(&mut self, end: usize, r: usize, f: f64) {
        self.mass_by_order[r].add(f * self.degrees[end] as f64);
        self.bound_by_order[r].add(f * order_decay(self.phi, self.n, r) * self.neighbour_norms[end]);
    }

    fn finish(self, source: usize, horizon: usize) -> BoundReport {
        let bound_by_order: Vec<f64> = self.bound_by_order.iter().map(|s| s.value()).collect();
        BoundReport {
            source,
            horizon,
            phi: self.phi,
            bound: bound_by_order.iter().sum(),
            bound_by_order,
            mass_by_order: self.mass_by_order.iter().map(|s| s.value()).collect(),
        }
    }
}

/// Bound by literal enumeration of all length-`t` walks, for a given `phi`.
pub fn walk_bound_enum(
    network: &Network,
    source: usize,
    t: usize,
    phi: f64,
    y0_norms: &[f64],
) -> Result<BoundReport> {
    check_bound_inputs(network, source, phi, y0_norms)?;
    check_enumerable(network, source, t)?;
    let n = network.n();
    let cap = t / n;
    let inv = inverse_degrees(network);
    let mut acc = Accumulator::new(network, t, phi, y0_norms);
    for walk in enumerate_walks(network, source, t)? {
        let r = walk.order(n).order.min(cap);
        acc.add(walk.end(), r, walk.f_product(&inv));
    }
    Ok(acc.finish(source, t))
}

/// Same bound via a dynamic program over
/// (vertex, visited set since the last cut, capped order).
pub fn walk_bound_dp(
    network: &Network,
    source: usize,
    t: usize,
    phi: f64,
    y0_norms: &[f64],
) -> Result<BoundReport> {
    check_bound_inputs(network, source, phi, y0_norms)?;
    let n = network.n();
    if n > MAX_DP_VERTICES {
        return Err(Error::TooLarge(format!(
            "dynamic program needs n <= {}, got {}",
            MAX_DP_VERTICES, n
        )));
    }
    let cap = t / n;
    let full: u32 = (1u32 << n) - 1;
    let inv = inverse_degrees(network);

    let mut states: BTreeMap<(usize, u32, usize), f64> = BTreeMap::new();
    states.insert((source, 1 << source, 0), inv[source]);
    for _ in 0..t {
        let mut next = BTreeMap::new();
        for (&(v, mask, r), &mass) in &states {
            for &u in network.neighbors(v) {
                let mut m = mask | (1 << u);
                let mut order = r;
                if m == full {
                    order = (r + 1).min(cap);
                    m = 1 << u;
                }
                *next.entry((u, m, order)).or_insert(0.0) += mass * inv[u];
            }
        }
        states = next;
    }

    let mut acc = Accumulator::new(network, t, phi, y0_norms);
    for (&(v, _, r), &mass) in &states {
        acc.add(v, r, mass);
    }
    Ok(acc.finish(source, t))
}

pub fn bound_bruteforce(
    system: &LinearSystem,
    network: &Network,
    source: usize,
    t: usize,
    y0_norms: &[f64],
) -> Result<BoundReport> {
    check_system(system, network)?;
    walk_bound_enum(network, source, t, system.phi(), y0_norms)
}

pub fn bound_dp(
    system: &LinearSystem,
    network: &Network,
    source: usize,
    t: usize,
    y0_norms: &[f64],
) -> Result<BoundReport> {
    check_system(system, network)?;
    walk_bound_dp(network, source, t, system.phi(), y0_norms)
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut out = BigUint::from(1u32);
    for i in 0..k {
        out = out * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    out
}

/// `m (m - 1) ... (m - n + 1)`.
fn falling(m: usize, n: usize) -> BigUint {
    (0..n).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(m - i))
}

fn count_order_zero(n: usize, t: usize) -> BigUint {
    let mut sum = BigUint::from(0u32);
    for k in 1..n {
        sum += binomial(n, k) * BigUint::from(k).pow(t as u32);
    }
    sum - BigUint::from(n - 1).pow(t as u32)
}

/// Upper bound `c^r(t)` on the number of order-`r` walks of length `t` from
/// a fixed vertex of the complete graph with loops.
///
/// `c^0(t) = sum_{k=1}^{n-1} C(n,k) k^t - (n-1)^t` and, for `r >= 1`,
/// `c^r(t) = prod_{i=1}^{r} P^n_{t-(r-i)n} * c^0(t - rn)`.
pub fn complete_graph_count(n: usize, t: usize, r: usize) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::InvalidParams("counts need n >= 2".into()));
    }
    let span = r
        .checked_mul(n)
        .filter(|&rn| rn <= t)
        .ok_or_else(|| Error::InvalidParams(format!("r n = {} * {} exceeds t = {}", r, n, t)))?;
    let mut out = count_order_zero(n, t - span);
    for i in 1..=r {
        out *= falling(t - (r - i) * n, n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_er;
    use nalgebra::{DMatrix, DVector};

    fn k2() -> Network {
        Network::complete(2)
    }

    fn walks(net: &Network, i: usize, t: usize) -> Vec<Vec<usize>> {
        enumerate_walks(net, i, t)
            .unwrap()
            .map(|w| w.vertices().to_vec())
            .collect()
    }

    #[test]
    fn order_examples() {
        let d = walk_order(&[0, 1, 2, 0, 1, 2], 3);
        assert_eq!(d.order, 2);
        assert_eq!(d.cut_positions, vec![2, 4]);
        assert_eq!(d.residual_start, 4);

        assert_eq!(walk_order(&[0, 1], 3).order, 0);

        let d = walk_order(&[0, 1, 2, 1], 3);
        assert_eq!(d.order, 1);
        assert_eq!(d.cut_positions, vec![2]);
        assert_eq!(d.residual_start, 2);

        // The junction vertex is shared, so a two-vertex walk can cut every step.
        assert_eq!(walk_order(&[0, 1, 0, 1], 2).order, 3);
        assert_eq!(walk_order(&[0, 0, 0], 1).order, 2);
        assert_eq!(walk_order(&[0], 1).order, 0);
    }

    #[test]
    fn short_walks_have_order_zero() {
        let net = Network::complete(4);
        for t in 0..3 {
            for w in enumerate_walks(&net, 0, t).unwrap() {
                assert_eq!(w.order(4).order, 0);
            }
        }
    }

    #[test]
    fn f_product_examples() {
        let inv2 = [0.5, 0.5];
        assert_eq!(f_product(&[1], &[0.3, 0.7]), 0.7);
        assert_eq!(f_product(&[0, 1], &inv2), 0.25);
        let inv3 = [1.0 / 3.0; 3];
        assert!((f_product(&[0, 1, 2], &inv3) - 1.0 / 27.0).abs() < 1e-17);
    }

    #[test]
    fn walk_validation() {
        let net = Network::path(3);
        assert!(Walk::new(&net, vec![0, 1, 2]).is_ok());
        assert!(matches!(Walk::new(&net, vec![0, 2]), Err(Error::InvalidParams(_))));
        assert!(matches!(Walk::new(&net, vec![]), Err(Error::EmptyInput)));
        assert!(matches!(
            Walk::new(&net, vec![0, 3]),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        let w = Walk::on_complete(3, vec![2, 0]).unwrap();
        assert_eq!((w.source(), w.end(), w.length()), (2, 0, 1));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(walks(&k2(), 0, 1), vec![vec![0, 0], vec![0, 1]]);
        assert_eq!(
            walks(&Network::path(3), 0, 2),
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2]
            ]
        );
        assert_eq!(walks(&k2(), 1, 0), vec![vec![1]]);
    }

    #[test]
    fn enumeration_count_matches_adjacency_power() {
        let net = gen_er(5, 0.5, 11).unwrap();
        let a = net.adjacency_matrix();
        let mut p = DMatrix::<f64>::identity(5, 5);
        for _ in 0..6 {
            p = &p * &a;
        }
        for i in 0..5 {
            let expect = p.row(i).sum() as usize;
            let got = walks(&net, i, 6);
            assert_eq!(got.len(), expect);
            let mut sorted = got.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, got, "lexicographic and unique");
        }
    }

    #[test]
    fn enumeration_guard() {
        let net = Network::complete(10);
        assert!(matches!(enumerate_walks(&net, 0, 9), Err(Error::TooLarge(_))));
        assert!(enumerate_walks(&net, 0, 8).is_ok());
        assert!(matches!(enumerate_walks(&net, 10, 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn mass_identity_examples() {
        assert_eq!(product_mass_identity(&k2(), 0, 1).unwrap(), 1.0);
        assert_eq!(product_mass_identity(&k2(), 1, 1).unwrap(), 1.0);
        assert!((product_mass_identity(&Network::complete(3), 0, 3).unwrap() - 1.0).abs() < 1e-14);
        let net = gen_er(6, 0.5, 3).unwrap();
        for i in 0..6 {
            assert!((product_mass_identity(&net, i, 5).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_at_time_zero() {
        let r = walk_bound_enum(&k2(), 0, 0, 0.3, &[1.0, 1.0]).unwrap();
        assert_eq!(r.bound, 1.0);
        assert_eq!(r.mass_by_order, vec![1.0]);

        let net = Network::star(4);
        let y0 = [1.0, 2.0, 3.0, 4.0];
        let r = walk_bound_enum(&net, 0, 0, 0.2, &y0).unwrap();
        assert!((r.bound - 10.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn phi_zero_collapses_orders() {
        let net = Network::complete(3);
        let y0 = [1.0, 0.5, 2.0];
        let r = walk_bound_enum(&net, 0, 7, 0.0, &y0).unwrap();
        let mut plain = 0.0;
        let inv = [1.0 / 3.0; 3];
        for w in enumerate_walks(&net, 0, 7).unwrap() {
            plain += w.f_product(&inv) * 3.5;
        }
        assert!((r.bound - plain).abs() < 1e-12);
        assert!(r.mass_by_order.len() == 3 && r.mass_by_order[2] > 0.0);
    }

    #[test]
    fn dp_matches_enumeration_on_triangle() {
        let sys = LinearSystem::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        let net = Network::complete(3);
        let y0 = [1.0; 3];
        let a = bound_bruteforce(&sys, &net, 0, 4, &y0).unwrap();
        let b = bound_dp(&sys, &net, 0, 4, &y0).unwrap();
        assert!((a.bound - b.bound).abs() < 1e-12);
        for (x, y) in a.mass_by_order.iter().zip(&b.mass_by_order) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((b.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_zero_mass_never_increases() {
        for seed in 0..4 {
            let net = gen_er(4, 0.6, seed).unwrap();
            let y0 = [1.0; 4];
            let mut prev = f64::INFINITY;
            for t in 1..=12 {
                let r = walk_bound_dp(&net, 0, t, 0.1, &y0).unwrap();
                assert!(r.mass_by_order[0] <= prev + 1e-15);
                prev = r.mass_by_order[0];
            }
        }
    }

    #[test]
    fn bound_input_checks() {
        let net = k2();
        assert!(matches!(walk_bound_dp(&net, 0, 1, 0.1, &[1.0]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(walk_bound_dp(&net, 2, 1, 0.1, &[1.0, 1.0]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(walk_bound_dp(&net, 0, 1, 1.5, &[1.0, 1.0]), Err(Error::InvalidParams(_))));
        assert!(matches!(walk_bound_dp(&net, 0, 1, 0.5, &[-1.0, 1.0]), Err(Error::InvalidParams(_))));
        assert!(matches!(
            walk_bound_dp(&Network::cycle(21), 0, 1, 0.1, &[1.0; 21]),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn count_examples() {
        assert_eq!(complete_graph_count(2, 1, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(order_histogram(&k2(), 0, 1).unwrap()[0], 1);
        assert_eq!(complete_graph_count(3, 2, 0).unwrap(), BigUint::from(11u32));
        assert!(order_histogram(&Network::complete(3), 0, 2).unwrap()[0] <= 11);
        // c^1(3) = 3! * c^0(0) = 6 * 5
        assert_eq!(complete_graph_count(3, 3, 1).unwrap(), BigUint::from(30u32));
        assert!(matches!(complete_graph_count(3, 5, 2), Err(Error::InvalidParams(_))));
        assert!(matches!(complete_graph_count(1, 5, 0), Err(Error::InvalidParams(_))));
        assert!(complete_graph_count(20, 20, 1).unwrap() > BigUint::from(u64::MAX));
    }

    #[test]
    fn count_bounds_enumeration() {
        let net = Network::complete(3);
        for t in 0..=7 {
            let hist = order_histogram(&net, 0, t).unwrap();
            for (r, &count) in hist.iter().enumerate() {
                if r * 3 <= t {
                    assert!(BigUint::from(count) <= complete_graph_count(3, t, r).unwrap());
                }
            }
        }
    }

    #[test]
    fn order_zero_ratio_decreases() {
        use num_bigint::BigUint as B;
        let ratio = |t: usize| {
            let c = complete_graph_count(3, t, 0).unwrap();
            let denom = B::from(3u32).pow(t as u32);
            // Compare exactly via cross-multiplication.
            (c, denom)
        };
        for t in 3..10 {
            let (a, da) = ratio(t);
            let (b, db) = ratio(t + 1);
            assert!(b * &da < a * &db);
        }
    }
}
