//! Independent simulation runs executed in parallel.
//!
//! Run `k` is seeded with `base_seed + k` and owns its RNG; results are
//! collected in run order so every aggregate is independent of the thread
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ModelParams;
use crate::network::NetworkState;
use crate::sim::{self, InitSpec, SimConfig, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub params: ModelParams,
    pub init: InitSpec,
    pub sim: SimConfig,
    pub n_runs: usize,
    pub base_seed: u64,
}

impl EnsembleSpec {
    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    /// Builds the initial network and simulates run `run`.
    pub fn run_one(&self, run: usize) -> Result<TimeSeries> {
        let seed = self.seed(run);
        let mut rng = sim::rng_from_seed(seed);
        let mut state: NetworkState = sim::init_network(self.params.n_nodes, &self.init, &mut rng)?;
        sim::simulate_with(&mut state, &self.params, &self.sim, seed, &mut rng, |_, _, _| {})
    }
}

/// Runs every member and maps each finished series through `f`, so callers
/// that only need a summary do not keep all trajectories in memory.
pub fn ensemble_map<T, F>(spec: &EnsembleSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, TimeSeries) -> T + Sync,
{
    if spec.n_runs == 0 {
        return Err(crate::Error::InvalidParams("n_runs must be at least 1".into()));
    }
    spec.params.validate()?;
    (0..spec.n_runs)
        .into_par_iter()
        .map(|k| spec.run_one(k).map(|ts| f(k, ts)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub runs: Vec<TimeSeries>,
    pub seeds: Vec<u64>,
    pub die_out_fraction: f64,
    pub n_surviving: usize,
    /// Mean prevalence per sample over runs that never died out.
    pub mean_prevalence_surviving: Vec<f64>,
}

pub fn ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    let runs = ensemble_map(spec, |_, ts| ts)?;
    let seeds = (0..spec.n_runs).map(|k| spec.seed(k)).collect();
    let died = runs.iter().filter(|r| r.died_out.is_some()).count();
    let surviving: Vec<&TimeSeries> = runs.iter().filter(|r| r.died_out.is_none()).collect();
    let mean = mean_prevalence(&surviving);
    Ok(EnsembleResult {
        die_out_fraction: died as f64 / runs.len() as f64,
        n_surviving: surviving.len(),
        mean_prevalence_surviving: mean,
        runs,
        seeds,
    })
}

/// Pointwise mean prevalence, summed in run order. Series of unequal length
/// are averaged over the runs that reach each sample.
pub fn mean_prevalence(runs: &[&TimeSeries]) -> Vec<f64> {
    let len = runs.iter().map(|r| r.samples.len()).max().unwrap_or(0);
    let mut sum = vec![0.0; len];
    let mut count = vec![0usize; len];
    for r in runs {
        for (k, s) in r.samples.iter().enumerate() {
            sum[k] += s.infected as f64;
            count[k] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect()
}

/// JSON-friendly summary written next to ensemble CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub params: ModelParams,
    pub init: InitSpec,
    /// True when `init` came from the built-in default initial condition.
    pub init_is_default: bool,
    pub sim: SimConfig,
    pub seeds: Vec<u64>,
    pub die_out_fraction: f64,
    pub n_surviving: usize,
    pub extinction_times: Vec<Option<f64>>,
}

impl EnsembleSummary {
    pub fn new(spec: &EnsembleSpec, result: &EnsembleResult, init_is_default: bool) -> Self {
        EnsembleSummary {
            params: spec.params,
            init: spec.init.clone(),
            init_is_default,
            sim: spec.sim,
            seeds: result.seeds.clone(),
            die_out_fraction: result.die_out_fraction,
            n_surviving: result.n_surviving,
            extinction_times: result.runs.iter().map(|r| r.died_out).collect(),
        }
    }
}
