//! Multi-chain sampling at one or more angle pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use weakmeas_core::analysis::{disorder_average, AnalysisError, Pooled};
use weakmeas_core::contraction::{ContractionConfig, ContractionError, Network};
use weakmeas_core::sampler::{
    run_chain, ChainRecord, ChainSpec, InitMode, ProposalOrder, SamplerError, Schedule,
};
use weakmeas_core::{couplings_from_times, LatticeGraph};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("chain {chain} at t_A = {t_a}: {source}")]
    Chain {
        chain: u64,
        t_a: f64,
        source: SamplerError,
    },
    #[error("contraction setup: {0}")]
    Contraction(#[from] ContractionError),
    #[error("aggregation: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Everything a chain needs besides the lattice and angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub chains: usize,
    pub schedule: Schedule,
    pub seed: u64,
    pub contraction: ContractionConfig,
    pub proposal: ProposalOrder,
    pub init: InitMode,
}

/// Chain-pooled observables at one angle pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub t_a: f64,
    pub t_b: f64,
    pub q: Pooled,
    /// `[⟨σ_0 σ_c⟩]`, which vanishes on the Nishimori line.
    pub m_c: Pooled,
    pub mean_s: Pooled,
    pub mean_plaquette: Pooled,
    pub wilson_line: Pooled,
    pub acceptance: f64,
    pub max_discarded: f64,
    pub max_bond_dim: usize,
    pub exact_sweeps: usize,
}

pub struct PointResult {
    pub summary: PointSummary,
    pub records: Vec<ChainRecord>,
}

/// Chain seeds are derived from the master seed and a global chain index
/// `point * chains + chain`, so every chain of a scan has its own stream.
pub fn chain_index(point: usize, chains: usize, chain: usize) -> u64 {
    (point * chains + chain) as u64
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))
}

/// Runs all chains of one point (in parallel on the current rayon pool) and
/// pools them.
pub fn run_point(
    graph: &LatticeGraph,
    t_a: f64,
    t_b: f64,
    point: usize,
    opts: &SamplingOptions,
) -> Result<PointResult, RunError> {
    let network = Network::new(graph, couplings_from_times(t_a, t_b), opts.contraction)?;
    let records: Vec<ChainRecord> = (0..opts.chains)
        .into_par_iter()
        .map(|c| {
            let spec = ChainSpec {
                master_seed: opts.seed,
                chain_index: chain_index(point, opts.chains, c),
                init: opts.init,
                order: opts.proposal,
            };
            run_chain(graph, &network, &opts.schedule, &spec).map_err(|source| RunError::Chain {
                chain: spec.chain_index,
                t_a,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let summary = summarize(t_a, t_b, &records)?;
    Ok(PointResult { summary, records })
}

pub fn summarize(
    t_a: f64,
    t_b: f64,
    records: &[ChainRecord],
) -> Result<PointSummary, AnalysisError> {
    let pool = |f: &dyn Fn(&ChainRecord) -> Vec<f64>| {
        disorder_average(&records.iter().map(f).collect::<Vec<_>>(), 0)
    };
    Ok(PointSummary {
        t_a,
        t_b,
        q: pool(&|r| r.m_c_squared())?,
        m_c: pool(&|r| r.m_c.clone())?,
        mean_s: pool(&|r| r.mean_s.clone())?,
        mean_plaquette: pool(&|r| r.mean_plaquette.clone())?,
        wilson_line: pool(&|r| r.wilson_line.clone())?,
        acceptance: records
            .iter()
            .map(ChainRecord::mean_acceptance)
            .sum::<f64>()
            / records.len() as f64,
        max_discarded: records.iter().map(|r| r.max_discarded).fold(0.0, f64::max),
        max_bond_dim: records.iter().map(|r| r.max_bond_dim).max().unwrap_or(0),
        exact_sweeps: records.iter().map(|r| r.exact_sweeps).sum(),
    })
}
