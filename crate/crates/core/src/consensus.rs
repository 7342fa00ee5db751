//! The projection-consensus iteration
//!
//! ```text
//! x_i(t+1) = x_i(t) - (1/d_i) P_i (d_i x_i(t) - sum_{j in N_i} x_j(t))
//! ```
//!
//! where `N_i` contains `i` itself. Each agent stays on its own hyperplane
//! `A_i x = b_i`, and the stacked errors evolve as `y(t+1) = M y(t)` with the
//! updating matrix `M = P_diag [(D^-1 A^T) kron I] P_diag`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::{fmt_shortest, LinearSystem};

/// Largest agent count for which the `n^2 x n^2` updating matrix is built.
pub const MAX_DENSE_AGENTS: usize = 64;

pub const DEFAULT_STRIDE: usize = 10;

fn check_dims(system: &LinearSystem, network: &Network) -> Result<()> {
    if system.n() != network.n() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} rows but network has {} agents",
            system.n(),
            network.n()
        )));
    }
    Ok(())
}

/// Local solutions `x_i(t)` of all agents at one synchronous round.
#[derive(Debug, Clone)]
pub struct AgentEnsemble<'a> {
    system: &'a LinearSystem,
    network: &'a Network,
    states: Vec<DVector<f64>>,
    t: usize,
}

impl<'a> AgentEnsemble<'a> {
    pub fn new(
        system: &'a LinearSystem,
        network: &'a Network,
        states: Vec<DVector<f64>>,
    ) -> Result<Self> {
        check_dims(system, network)?;
        let n = system.n();
        if states.len() != n || states.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} states of length {}",
                n, n
            )));
        }
        Ok(AgentEnsemble {
            system,
            network,
            states,
            t: 0,
        })
    }

    /// `x_i(0) = x* + P_i r_i` with `r_i` a seeded random vector of norm
    /// `radius`, so every agent starts on its own hyperplane.
    pub fn init(
        system: &'a LinearSystem,
        network: &'a Network,
        radius: f64,
        seed: u64,
    ) -> Result<Self> {
        check_dims(system, network)?;
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "radius = {} must be finite and non-negative",
                radius
            )));
        }
        let n = system.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..n)
            .map(|i| {
                let r = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let norm = r.norm();
                let r = if norm > 0.0 { r * (radius / norm) } else { r };
                system.x_star() + system.project(i, &r)
            })
            .collect();
        AgentEnsemble::new(system, network, states)
    }

    pub fn system(&self) -> &'a LinearSystem {
        self.system
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `y_i(t) = x_i(t) - x*` for every agent.
    pub fn error_vectors(&self) -> Vec<DVector<f64>> {
        self.states
            .iter()
            .map(|x| x - self.system.x_star())
            .collect()
    }

    /// Errors stacked into one vector of length `n^2`.
    pub fn stacked_error(&self) -> DVector<f64> {
        let n = self.system.n();
        let ys = self.error_vectors();
        DVector::from_fn(n * n, |k, _| ys[k / n][k % n])
    }

    /// `eps_i(t) = |x_i(t) - x*|`.
    pub fn errors(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|x| (x - self.system.x_star()).norm())
            .collect()
    }

    /// One synchronous round computed from the previous states only.
    pub fn step(&self) -> AgentEnsemble<'a> {
        let states = (0..self.states.len())
            .map(|i| self.next_state(i))
            .collect();
        AgentEnsemble {
            system: self.system,
            network: self.network,
            states,
            t: self.t + 1,
        }
    }

    pub fn advance(&mut self) {
        *self = self.step();
    }

    fn next_state(&self, i: usize) -> DVector<f64> {
        let x_i = &self.states[i];
        let d_i = self.network.degree(i) as f64;
        let mut sum = DVector::zeros(x_i.len());
        for &j in self.network.neighbors(i) {
            sum += &self.states[j];
        }
        let disagreement = x_i * d_i - sum;
        x_i - self.system.project(i, &disagreement) / d_i
    }
}

pub fn init_states<'a>(
    system: &'a LinearSystem,
    network: &'a Network,
    radius: f64,
    seed: u64,
) -> Result<AgentEnsemble<'a>> {
    AgentEnsemble::init(system, network, radius, seed)
}

pub fn step<'a>(ensemble: &AgentEnsemble<'a>) -> AgentEnsemble<'a> {
    ensemble.step()
}

/// Dense `n^2 x n^2` error-update matrix with `n x n` blocks
/// `m_ij = (alpha_ij / d_i) P_i P_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdatingMatrix {
    n: usize,
    matrix: DMatrix<f64>,
}

impl UpdatingMatrix {
    pub fn build(system: &LinearSystem, network: &Network) -> Result<Self> {
        check_dims(system, network)?;
        let n = system.n();
        if n > MAX_DENSE_AGENTS {
            return Err(Error::TooLarge(format!(
                "updating matrix needs n <= {}, got {}",
                MAX_DENSE_AGENTS, n
            )));
        }
        let adjacency = network.adjacency_matrix();
        let degrees = network.degrees();
        let weights = DMatrix::from_fn(n, n, |i, j| adjacency[(j, i)] / degrees[i] as f64);
        let spread = weights.kronecker(&DMatrix::<f64>::identity(n, n));

        // P_diag * spread * P_diag, one block at a time.
        let projectors = system.projectors();
        let mut matrix = DMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let block = spread.view((i * n, j * n), (n, n));
                if block.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let m_ij = &projectors[i] * block * &projectors[j];
                matrix.view_mut((i * n, j * n), (n, n)).copy_from(&m_ij);
            }
        }
        Ok(UpdatingMatrix { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.matrix
            .view((i * self.n, j * self.n), (self.n, self.n))
            .into_owned()
    }

    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.matrix * y
    }

    pub fn power(&self, t: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.matrix.nrows(), self.matrix.ncols());
        for _ in 0..t {
            out = &out * &self.matrix;
        }
        out
    }
}

/// `max_i sum_j |B_ij|_2` over the `n x n` blocks `B_ij` of `m`.
pub fn block_mixed_norm(m: &DMatrix<f64>, n: usize) -> f64 {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let block = m.view((i * n, j * n), (n, n)).into_owned();
                    if block.iter().all(|&v| v == 0.0) {
                        0.0
                    } else {
                        block.singular_values().max()
                    }
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Mixed norm of `M^t`.
pub fn mixed_norm(system: &LinearSystem, network: &Network, t: usize) -> Result<f64> {
    Ok(*mixed_norm_sequence(system, network, t)?
        .last()
        .expect("t >= 1 gives at least one value"))
}

/// Mixed norms of `M^1, ..., M^t_max`.
pub fn mixed_norm_sequence(
    system: &LinearSystem,
    network: &Network,
    t_max: usize,
) -> Result<Vec<f64>> {
    if t_max < 1 {
        return Err(Error::InvalidParams("mixed norm needs t >= 1".into()));
    }
    let m = UpdatingMatrix::build(system, network)?;
    let mut power = m.matrix().clone();
    let mut out = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        if t > 1 {
            power = &power * m.matrix();
        }
        out.push(block_mixed_norm(&power, m.n()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: usize,
    /// Per-agent errors `eps_i(t)`.
    pub eps: Vec<f64>,
    /// `R(t) = sum_i eps_i(t) / sum_i eps_i(0)`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub radius: f64,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
}

impl ConvergenceTrace {
    pub fn final_relative(&self) -> f64 {
        self.checkpoints.last().map_or(1.0, |c| c.relative)
    }

    /// Columns `t,eps_1..eps_n,R`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.checkpoints.first().map_or(0, |c| c.eps.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("eps_{}", i)));
        header.push("R".into());
        writeln!(w, "{}", header.join(","))?;
        for c in &self.checkpoints {
            let mut row = vec![c.t.to_string()];
            row.extend(c.eps.iter().map(|e| fmt_shortest(*e)));
            row.push(fmt_shortest(c.relative));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Runs `t_max` rounds and records `0, stride, 2 stride, ...` and `t_max`.
pub fn run(
    system: &LinearSystem,
    network: &Network,
    t_max: usize,
    stride: usize,
    radius: f64,
    seed: u64,
) -> Result<ConvergenceTrace> {
    if stride == 0 {
        return Err(Error::InvalidParams("checkpoint stride must be positive".into()));
    }
    let mut checkpoints: Vec<usize> = (0..=t_max).step_by(stride).collect();
    if checkpoints.last() != Some(&t_max) {
        checkpoints.push(t_max);
    }
    run_at(system, network, &checkpoints, radius, seed)
}

/// Runs until the largest requested checkpoint, recording each one.
/// The trace always starts with `t = 0`.
pub fn run_at(
    system: &LinearSystem,
    network: &Network,
    checkpoints: &[usize],
    radius: f64,
    seed: u64,
) -> Result<ConvergenceTrace> {
    let mut wanted: Vec<usize> = checkpoints.to_vec();
    wanted.push(0);
    wanted.sort_unstable();
    wanted.dedup();

    let mut ens = AgentEnsemble::init(system, network, radius, seed)?;
    let eps0 = ens.errors();
    let total0: f64 = eps0.iter().sum();
    if total0 <= 0.0 {
        return Err(Error::DegenerateInitial);
    }

    let mut out = Vec::with_capacity(wanted.len());
    for &t in &wanted {
        while ens.t() < t {
            ens.advance();
        }
        let eps = ens.errors();
        let total: f64 = eps.iter().sum();
        out.push(Checkpoint {
            t,
            eps,
            relative: total / total0,
        });
    }
    Ok(ConvergenceTrace {
        radius,
        seed,
        checkpoints: out,
    })
}
