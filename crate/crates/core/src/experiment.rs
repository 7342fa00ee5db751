//! Ensembles of random systems solved over random network families, summarised
//! as box-whisker statistics of the relative error `R(t)`.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::consensus;
use crate::error::{Error, Result};
use crate::graph::GraphFamily;
use crate::linalg::LinearSystem;

pub const DEFAULT_TRIALS: usize = 30;
pub const DEFAULT_CONDITION_CAP: f64 = 1e4;
pub const DEFAULT_CHECKPOINT_STRIDE: usize = 10;
pub const MAX_SYSTEM_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EntryDistribution {
    /// Uniform on `[-1, 1]`.
    #[default]
    Uniform,
    /// Standard normal.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub distribution: EntryDistribution,
    #[serde(default = "default_cap")]
    pub condition_cap: f64,
}

fn default_cap() -> f64 {
    DEFAULT_CONDITION_CAP
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            distribution: EntryDistribution::Uniform,
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }
}

/// One topology group, e.g. `{"family": "rr", "k": 4, "label": "rr-4"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    #[serde(flatten)]
    pub family: GraphFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl GroupSpec {
    pub fn new(family: GraphFamily) -> Self {
        GroupSpec {
            family,
            label: None,
        }
    }

    pub fn labelled(family: GraphFamily, label: impl Into<String>) -> Self {
        GroupSpec {
            family,
            label: Some(label.into()),
        }
    }

    fn id(&self, index: usize) -> String {
        self.label.clone().unwrap_or_else(|| index.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub groups: Vec<GroupSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub t_max: usize,
    /// Defaults to every 10 steps plus `t_max`. `t = 0` is always reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub system: SystemSpec,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    /// Marks mean-degree levels chosen without a published value.
    #[serde(default)]
    pub placeholder_degrees: bool,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_radius() -> f64 {
    1.0
}

/// Families at matched mean degree `k` (self-loops excluded).
pub fn matched_groups(n: usize, mean_degrees: &[usize], ws_rewiring: &[f64]) -> Vec<GroupSpec> {
    let mut out = Vec::new();
    for &k in mean_degrees {
        out.push(GroupSpec::labelled(
            GraphFamily::Er {
                p: k as f64 / (n - 1) as f64,
            },
            format!("er-k{}", k),
        ));
        for &p in ws_rewiring {
            out.push(GroupSpec::labelled(
                GraphFamily::Ws { k, p },
                format!("ws-k{}-p{}", k, p),
            ));
        }
        out.push(GroupSpec::labelled(GraphFamily::Sf { m: k / 2 }, format!("sf-k{}", k)));
        out.push(GroupSpec::labelled(GraphFamily::Rr { k }, format!("rr-k{}", k)));
    }
    out
}

impl ExperimentConfig {
    /// n = 30, 500 steps, mean degrees 4 and 8.
    pub fn desk(master_seed: u64) -> Self {
        ExperimentConfig {
            n: 30,
            groups: matched_groups(30, &[4, 8], &[0.1]),
            trials: DEFAULT_TRIALS,
            t_max: 500,
            checkpoints: None,
            radius: 1.0,
            master_seed,
            system: SystemSpec::default(),
            workers: 0,
            placeholder_degrees: true,
        }
    }

    /// n = 100, 2000 steps, mean degrees 4, 8 and 12, three rewiring levels.
    pub fn full_scale(master_seed: u64) -> Self {
        ExperimentConfig {
            n: 100,
            groups: matched_groups(100, &[4, 8, 12], &[0.01, 0.1, 1.0]),
            t_max: 2000,
            ..ExperimentConfig::desk(master_seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.groups.is_empty() {
            return bad("at least one group is required".into());
        }
        if !(self.system.condition_cap > 1.0) {
            return bad(format!(
                "condition_cap = {} must exceed 1",
                self.system.condition_cap
            ));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius = {} must be positive", self.radius));
        }
        if let Some(cps) = &self.checkpoints {
            if let Some(&t) = cps.iter().find(|&&t| t > self.t_max) {
                return bad(format!("checkpoint {} exceeds t_max = {}", t, self.t_max));
            }
        }
        for (g, group) in self.groups.iter().enumerate() {
            group.family.validate(self.n).map_err(|e| {
                Error::InvalidParams(format!("group {} ({}): {}", group.id(g), group.family, e))
            })?;
        }
        Ok(())
    }

    /// Sorted checkpoint list, always starting at 0.
    pub fn checkpoint_list(&self) -> Vec<usize> {
        let mut cps = match &self.checkpoints {
            Some(c) => c.clone(),
            None => {
                let mut c: Vec<usize> =
                    (0..=self.t_max).step_by(DEFAULT_CHECKPOINT_STRIDE).collect();
                c.push(self.t_max);
                c
            }
        };
        cps.push(0);
        cps.sort_unstable();
        cps.dedup();
        cps
    }
}

/// Child seed from the master seed, an optional group index, the trial index
/// and a purpose tag.
pub fn derive_seed(master: u64, group: Option<usize>, trial: usize, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    match group {
        Some(g) => {
            h.update([1u8]);
            h.update((g as u64).to_le_bytes());
        }
        None => h.update([0u8]),
    }
    h.update((trial as u64).to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Random `A` (resampled until `kappa(A) <= cap`) and `b = A x*` with `x*`
/// uniform on `[-1, 1]^n`.
pub fn gen_random_system(n: usize, spec: &SystemSpec, seed: u64) -> Result<LinearSystem> {
    if n < 1 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(spec.condition_cap >= 1.0) {
        return Err(Error::InvalidParams(format!(
            "condition_cap = {} must be at least 1",
            spec.condition_cap
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_SYSTEM_RESAMPLES {
        let a = match spec.distribution {
            EntryDistribution::Uniform => DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0)),
            EntryDistribution::Normal => DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal)),
        };
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let b = &a * x;
        let Ok(sys) = LinearSystem::new(a, b) else {
            continue;
        };
        if sys.condition_numbers().kappa <= spec.condition_cap {
            return Ok(sys);
        }
    }
    Err(Error::GenerationFailed(format!(
        "no {}x{} system with condition number <= {} in {} samples",
        n, n, spec.condition_cap, MAX_SYSTEM_RESAMPLES
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Five-number summary with linearly interpolated (inclusive) quartiles.
pub fn quantiles(samples: &[f64]) -> Result<Quantiles> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let h = (s.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        s[lo] + (h - lo as f64) * (s[hi] - s[lo])
    };
    Ok(Quantiles {
        min: s[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileRow {
    pub group: String,
    pub family: String,
    pub params: String,
    pub t: usize,
    #[serde(flatten)]
    pub stats: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub family: String,
    pub params: String,
    /// Mean over trials of the average degree, self-loops excluded.
    pub mean_degree: f64,
    /// Same with the self-loop counted.
    pub mean_degree_with_loops: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub checkpoints: Vec<usize>,
    pub rows: Vec<QuantileRow>,
    pub groups: Vec<GroupSummary>,
    /// `R(t)` per group, per trial, per checkpoint.
    pub samples: Vec<Vec<Vec<f64>>>,
}

impl ExperimentResult {
    /// Median `R(t)` of a group at a reported checkpoint.
    pub fn median(&self, group: &str, t: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.group == group && r.t == t)
            .map(|r| r.stats.median)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "group,family,params,t,min,q1,median,q3,max")?;
        for r in &self.rows {
            let s = &r.stats;
            writeln!(
                w,
                "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.group, r.family, r.params, r.t, s.min, s.q1, s.median, s.q3, s.max
            )?;
        }
        Ok(())
    }

    pub fn metadata(&self, cfg: &ExperimentConfig) -> serde_json::Value {
        serde_json::json!({
            "whiskers": "min/max",
            "quartiles": "linear interpolation, inclusive",
            "statistic": "R(t) = sum_i |x_i(t) - x*| / sum_i |x_i(0) - x*|",
            "float_format": "17 significant digits",
            "seed_derivation": "sha256(master_seed, group, trial, purpose); systems and initial states are shared across groups for the same trial",
            "placeholder_degrees": cfg.placeholder_degrees,
            "config": cfg,
            "groups": self.groups,
        })
    }

    /// Writes the CSV and a `<stem>.meta.json` sidecar next to it.
    pub fn save(&self, cfg: &ExperimentConfig, csv_path: impl AsRef<Path>) -> Result<PathBuf> {
        let csv_path = csv_path.as_ref();
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(csv_path, buf)?;
        let meta_path = csv_path.with_extension("meta.json");
        let text = serde_json::to_string_pretty(&self.metadata(cfg))?;
        std::fs::write(&meta_path, text + "\n")?;
        Ok(meta_path)
    }
}

struct TrialOutcome {
    relative: Vec<f64>,
    mean_degree_with_loops: f64,
}

fn run_trial(cfg: &ExperimentConfig, g: usize, trial: usize, cps: &[usize]) -> Result<TrialOutcome> {
    let group = &cfg.groups[g];
    let context = |e: Error| match e {
        Error::GenerationFailed(msg) => Error::GenerationFailed(format!(
            "group {} trial {}: {}",
            group.id(g),
            trial,
            msg
        )),
        other => other,
    };
    let net = group
        .family
        .generate(cfg.n, derive_seed(cfg.master_seed, Some(g), trial, "graph"))
        .map_err(context)?;
    let sys = gen_random_system(
        cfg.n,
        &cfg.system,
        derive_seed(cfg.master_seed, None, trial, "system"),
    )
    .map_err(context)?;
    let trace = consensus::run_at(
        &sys,
        &net,
        cps,
        cfg.radius,
        derive_seed(cfg.master_seed, None, trial, "init"),
    )?;
    Ok(TrialOutcome {
        relative: trace.checkpoints.iter().map(|c| c.relative).collect(),
        mean_degree_with_loops: net.degree_stats().mean,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let cps = cfg.checkpoint_list();
    let jobs: Vec<(usize, usize)> = (0..cfg.groups.len())
        .flat_map(|g| (0..cfg.trials).map(move |k| (g, k)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {}", e)))?;
    // Indexed collect keeps (group, trial) order whatever the completion order.
    let outcomes: Vec<Result<TrialOutcome>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, k)| run_trial(cfg, g, k, &cps))
            .collect()
    });

    let mut samples = vec![Vec::with_capacity(cfg.trials); cfg.groups.len()];
    let mut degree_sums = vec![0.0; cfg.groups.len()];
    for (&(g, _), outcome) in jobs.iter().zip(outcomes) {
        let o = outcome?;
        degree_sums[g] += o.mean_degree_with_loops;
        samples[g].push(o.relative);
    }

    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (g, spec) in cfg.groups.iter().enumerate() {
        let id = spec.id(g);
        let with_loops = degree_sums[g] / cfg.trials as f64;
        groups.push(GroupSummary {
            group: id.clone(),
            family: spec.family.name().into(),
            params: spec.family.params_label(),
            mean_degree: with_loops - 1.0,
            mean_degree_with_loops: with_loops,
        });
        for (c, &t) in cps.iter().enumerate() {
            let at_t: Vec<f64> = samples[g].iter().map(|trial| trial[c]).collect();
            rows.push(QuantileRow {
                group: id.clone(),
                family: spec.family.name().into(),
                params: spec.family.params_label(),
                t,
                stats: quantiles(&at_t)?,
            });
        }
    }
    Ok(ExperimentResult {
        checkpoints: cps,
        rows,
        groups,
        samples,
    })
}
