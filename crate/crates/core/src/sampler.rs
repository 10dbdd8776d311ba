//! Metropolis sampling of ancilla outcomes with contraction-based ratios.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, AnalysisError};
use crate::contraction::{BondEnvironment, ContractionError, Network, SweepCache, SweepVisitor};
use crate::lattice::LatticeGraph;
use crate::model::CircuitParams;
use crate::transfer::DenseNetwork;

/// One `±1` outcome per ancilla bond.
pub type AncillaConfig = Vec<i8>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    UniformPlus,
    UniformMinus,
    Random,
    /// Uniform over configurations with every plaquette product `+1`.
    RandomFluxFree,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalOrder {
    /// Bonds in raster order with cached environments.
    #[default]
    Raster,
    /// Uniformly random bonds, environments contracted from scratch.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_sweeps: usize,
    /// Leading sweeps dropped from the record.
    pub n_discard: usize,
    /// Keep a configuration snapshot every `thin` retained sweeps (0: never).
    pub thin: usize,
}

impl Schedule {
    /// `n_sweeps` with the first tenth discarded and no snapshots.
    pub fn with_default_discard(n_sweeps: usize) -> Self {
        Schedule {
            n_sweeps,
            n_discard: n_sweeps / 10,
            thin: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SamplerError {
    Contraction(ContractionError),
    BadSchedule { n_sweeps: usize, n_discard: usize },
    NoPath,
    Analysis(AnalysisError),
}

impl fmt::Display for SamplerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerError::Contraction(e) => write!(f, "contraction failed: {e}"),
            SamplerError::BadSchedule {
                n_sweeps,
                n_discard,
            } => {
                write!(
                    f,
                    "discard count {n_discard} must be below the sweep count {n_sweeps}"
                )
            }
            SamplerError::NoPath => write!(f, "no path from the pinned corner to the central site"),
            SamplerError::Analysis(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SamplerError {}

impl From<ContractionError> for SamplerError {
    fn from(e: ContractionError) -> Self {
        SamplerError::Contraction(e)
    }
}

impl From<AnalysisError> for SamplerError {
    fn from(e: AnalysisError) -> Self {
        SamplerError::Analysis(e)
    }
}

type Result<T> = core::result::Result<T, SamplerError>;

/// The per-chain generator: ChaCha8 keyed by the master seed, one stream per
/// chain, so chain `i` is reproducible independently of the others.
pub fn chain_rng(master_seed: u64, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(chain_index);
    rng
}

pub fn init_config<R: Rng + ?Sized>(
    graph: &LatticeGraph,
    mode: InitMode,
    rng: &mut R,
) -> AncillaConfig {
    let n = graph.n_bonds();
    match mode {
        InitMode::UniformPlus => alloc::vec![1; n],
        InitMode::UniformMinus => alloc::vec![-1; n],
        InitMode::Random => (0..n).map(|_| random_sign(rng)).collect(),
        InitMode::RandomFluxFree => {
            // A random gauge transformation of the uniform configuration.
            let tau: Vec<i8> = (0..graph.n_sites()).map(|_| random_sign(rng)).collect();
            graph.bonds.iter().map(|b| tau[b.a] * tau[b.b]).collect()
        }
    }
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// Product of outcomes around each plaquette.
pub fn plaquette_products(graph: &LatticeGraph, s: &[i8]) -> Vec<i8> {
    graph
        .plaquettes
        .iter()
        .map(|p| p.bonds.iter().map(|&b| s[b]).product())
        .collect()
}

/// Observables of one recorded sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// `⟨σ_c⟩` with the corner pinned up, i.e. `⟨σ_0 σ_c⟩_s`.
    pub m_c: f64,
    /// `m_c ∏_path s`, the decorated-string estimator.
    pub wilson_line: f64,
    pub mean_plaquette: f64,
    pub mean_s: f64,
}

struct Probes {
    path: Vec<usize>,
}

impl Probes {
    fn new(graph: &LatticeGraph) -> Result<Self> {
        let path = graph
            .wilson_path(graph.pinned_corner, graph.central_site)
            .map_err(|_| SamplerError::NoPath)?;
        Ok(Probes { path })
    }

    fn observe(&self, graph: &LatticeGraph, s: &[i8], m_c: f64) -> Observation {
        let string: i8 = self.path.iter().map(|&b| s[b]).product();
        let mean_plaquette = if graph.plaquettes.is_empty() {
            0.0
        } else {
            plaquette_products(graph, s)
                .iter()
                .map(|&p| p as f64)
                .sum::<f64>()
                / graph.plaquettes.len() as f64
        };
        Observation {
            m_c,
            wilson_line: m_c * string as f64,
            mean_plaquette,
            mean_s: s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64,
        }
    }
}

/// Accepts with probability `min(ratio, 1)`; ties and uphill moves never
/// consume randomness.
fn accept<R: Rng + ?Sized>(rng: &mut R, ratio: f64) -> bool {
    ratio >= 1.0 || rng.random::<f64>() < ratio
}

struct Metropolis<'a> {
    rng: &'a mut ChaCha8Rng,
    params: &'a CircuitParams,
    graph: &'a LatticeGraph,
    probes: &'a Probes,
    accepted: usize,
    observation: Option<Observation>,
}

impl SweepVisitor for Metropolis<'_> {
    type Error = ContractionError;

    fn propose(
        &mut self,
        _bond: usize,
        s: i8,
        env: &BondEnvironment,
    ) -> core::result::Result<bool, ContractionError> {
        let ok = accept(self.rng, env.flip_ratio(self.params, s)?);
        self.accepted += ok as usize;
        Ok(ok)
    }

    fn measure(
        &mut self,
        s: &[i8],
        magnetization: f64,
    ) -> core::result::Result<(), ContractionError> {
        self.observation = Some(self.probes.observe(self.graph, s, magnetization));
        Ok(())
    }
}

/// Result of one sweep: `n_bonds` proposals and one observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOutcome {
    pub accepted: usize,
    pub proposals: usize,
    pub observation: Observation,
}

/// A Markov chain over ancilla outcomes bound to one network.
pub struct ChainState<'a> {
    graph: &'a LatticeGraph,
    network: &'a Network,
    probes: Probes,
    pub s: AncillaConfig,
    pub rng: ChaCha8Rng,
    pub sweep_count: usize,
    pub order: ProposalOrder,
    cache: SweepCache,
    exact: Option<Network>,
    exact_sweeps: usize,
}

impl<'a> ChainState<'a> {
    pub fn new(
        graph: &'a LatticeGraph,
        network: &'a Network,
        s: AncillaConfig,
        rng: ChaCha8Rng,
        order: ProposalOrder,
    ) -> Result<Self> {
        if s.len() != graph.n_bonds() {
            return Err(ContractionError::BadLength {
                expected: graph.n_bonds(),
                got: s.len(),
            }
            .into());
        }
        Ok(ChainState {
            graph,
            network,
            probes: Probes::new(graph)?,
            s,
            rng,
            sweep_count: 0,
            order,
            cache: network.new_cache(),
            exact: None,
            exact_sweeps: 0,
        })
    }

    /// Largest discarded weight and bond dimension seen by the cached sweeps.
    pub fn truncation(&self) -> (f64, usize) {
        (self.cache.max_discarded, self.cache.max_bond_dim)
    }

    /// Sweeps that had to be redone with exact contraction.
    pub fn exact_sweeps(&self) -> usize {
        self.exact_sweeps
    }

    /// One proposal per bond, accepted with `min(p'/p, 1)`.
    ///
    /// If truncation corrupts an environment mid-sweep, the configuration and
    /// generator are rolled back and the sweep is redone exactly: with dense
    /// row vectors when the layout is narrow enough, otherwise with an
    /// untruncated MPS. The chain thus follows the law of exact contraction.
    pub fn metropolis_sweep(&mut self) -> Result<SweepOutcome> {
        let (s0, rng0) = (self.s.clone(), self.rng.clone());
        let outcome = match Self::sweep_on(
            self.network,
            &mut self.cache,
            self.graph,
            &self.probes,
            self.order,
            &mut self.s,
            &mut self.rng,
        ) {
            Err(SamplerError::Contraction(e)) if e.is_truncation_artifact() => {
                self.s = s0;
                self.rng = rng0;
                self.exact_sweeps += 1;
                let outcome = match DenseNetwork::new(self.network) {
                    Some(dense) => Self::dense_sweep(
                        &dense,
                        self.network,
                        self.graph,
                        &self.probes,
                        self.order,
                        &mut self.s,
                        &mut self.rng,
                    )?,
                    None => {
                        let exact = self.exact.get_or_insert_with(|| self.network.untruncated());
                        let mut cache = exact.new_cache();
                        let outcome = Self::sweep_on(
                            exact,
                            &mut cache,
                            self.graph,
                            &self.probes,
                            self.order,
                            &mut self.s,
                            &mut self.rng,
                        )?;
                        self.cache.max_bond_dim = self.cache.max_bond_dim.max(cache.max_bond_dim);
                        outcome
                    }
                };
                // Restart the truncated stacks from the new configuration.
                self.cache.invalidate();
                outcome
            }
            other => other?,
        };
        self.sweep_count += 1;
        Ok(outcome)
    }

    fn dense_sweep(
        dense: &DenseNetwork,
        network: &Network,
        graph: &LatticeGraph,
        probes: &Probes,
        order: ProposalOrder,
        s: &mut AncillaConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<SweepOutcome> {
        let n = graph.n_bonds();
        let params = network.params();
        let mut accepted = 0;
        let m = match order {
            ProposalOrder::Raster => dense.sweep::<SamplerError, _>(s, |_, sb, env| {
                let ok = accept(rng, env.flip_ratio(params, sb)?);
                accepted += ok as usize;
                Ok(ok)
            })?,
            ProposalOrder::Random => {
                for _ in 0..n {
                    let bond = rng.random_range(0..n);
                    let env = dense.bond_environment(s, bond)?;
                    if accept(rng, env.flip_ratio(params, s[bond])?) {
                        s[bond] = -s[bond];
                        accepted += 1;
                    }
                }
                dense.pinned_central_magnetization(s)?
            }
        };
        Ok(SweepOutcome {
            accepted,
            proposals: n,
            observation: probes.observe(graph, s, m),
        })
    }

    fn sweep_on(
        network: &Network,
        cache: &mut SweepCache,
        graph: &LatticeGraph,
        probes: &Probes,
        order: ProposalOrder,
        s: &mut AncillaConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<SweepOutcome> {
        let n = graph.n_bonds();
        Ok(match order {
            ProposalOrder::Raster => {
                let mut visitor = Metropolis {
                    rng,
                    params: network.params(),
                    graph,
                    probes,
                    accepted: 0,
                    observation: None,
                };
                network.sweep(cache, s, &mut visitor)?;
                let observation = visitor.observation.expect("every sweep measures once");
                SweepOutcome {
                    accepted: visitor.accepted,
                    proposals: n,
                    observation,
                }
            }
            ProposalOrder::Random => {
                let mut accepted = 0;
                for _ in 0..n {
                    let bond = rng.random_range(0..n);
                    let env = network.bond_environment(s, bond)?;
                    if !env.is_valid(&network.params().bond(s[bond])) {
                        return Err(ContractionError::InvalidEnvironment { bond }.into());
                    }
                    if accept(rng, env.flip_ratio(network.params(), s[bond])?) {
                        s[bond] = -s[bond];
                        accepted += 1;
                    }
                }
                let m = network.pinned_central_magnetization(s)?;
                SweepOutcome {
                    accepted,
                    proposals: n,
                    observation: probes.observe(graph, s, m),
                }
            }
        })
    }
}

/// Per-sweep series of one chain after the discarded prefix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain_index: u64,
    /// Index of the first retained sweep.
    pub first_sweep: usize,
    pub m_c: Vec<f64>,
    pub wilson_line: Vec<f64>,
    pub mean_plaquette: Vec<f64>,
    pub mean_s: Vec<f64>,
    pub acceptance: Vec<f64>,
    /// `(sweep index, configuration)` every `thin` retained sweeps.
    pub snapshots: Vec<(usize, AncillaConfig)>,
    pub max_discarded: f64,
    pub max_bond_dim: usize,
    /// Sweeps redone with exact contraction.
    pub exact_sweeps: usize,
}

impl ChainRecord {
    pub fn len(&self) -> usize {
        self.m_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_c.is_empty()
    }

    pub fn m_c_squared(&self) -> Vec<f64> {
        self.m_c.iter().map(|m| m * m).collect()
    }

    pub fn mean_acceptance(&self) -> f64 {
        if self.acceptance.is_empty() {
            return 0.0;
        }
        self.acceptance.iter().sum::<f64>() / self.acceptance.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub master_seed: u64,
    pub chain_index: u64,
    pub init: InitMode,
    pub order: ProposalOrder,
}

/// Runs one chain and records every retained sweep.
pub fn run_chain(
    graph: &LatticeGraph,
    network: &Network,
    schedule: &Schedule,
    spec: &ChainSpec,
) -> Result<ChainRecord> {
    run_chain_with(graph, network, schedule, spec, |_, _| {})
}

/// [`run_chain`] with a hook called after every sweep with the sweep index
/// and the current configuration.
pub fn run_chain_with<F: FnMut(usize, &[i8])>(
    graph: &LatticeGraph,
    network: &Network,
    schedule: &Schedule,
    spec: &ChainSpec,
    mut hook: F,
) -> Result<ChainRecord> {
    if schedule.n_discard >= schedule.n_sweeps {
        return Err(SamplerError::BadSchedule {
            n_sweeps: schedule.n_sweeps,
            n_discard: schedule.n_discard,
        });
    }
    let mut rng = chain_rng(spec.master_seed, spec.chain_index);
    let s = init_config(graph, spec.init, &mut rng);
    let mut chain = ChainState::new(graph, network, s, rng, spec.order)?;
    let kept = schedule.n_sweeps - schedule.n_discard;
    let mut record = ChainRecord {
        chain_index: spec.chain_index,
        first_sweep: schedule.n_discard,
        m_c: Vec::with_capacity(kept),
        wilson_line: Vec::with_capacity(kept),
        mean_plaquette: Vec::with_capacity(kept),
        mean_s: Vec::with_capacity(kept),
        acceptance: Vec::with_capacity(kept),
        ..ChainRecord::default()
    };
    for sweep in 0..schedule.n_sweeps {
        let out = chain.metropolis_sweep()?;
        hook(sweep, &chain.s);
        if sweep < schedule.n_discard {
            continue;
        }
        let o = out.observation;
        record.m_c.push(o.m_c);
        record.wilson_line.push(o.wilson_line);
        record.mean_plaquette.push(o.mean_plaquette);
        record.mean_s.push(o.mean_s);
        record
            .acceptance
            .push(out.accepted as f64 / out.proposals as f64);
        let retained = sweep - schedule.n_discard;
        if schedule.thin > 0 && retained % schedule.thin == 0 {
            record.snapshots.push((sweep, chain.s.clone()));
        }
    }
    let (d, chi) = chain.truncation();
    record.max_discarded = d;
    record.max_bond_dim = chi;
    record.exact_sweeps = chain.exact_sweeps();
    Ok(record)
}

/// `q = [⟨σ_0 σ_c⟩²]` pooled over chains, with its standard error.
pub fn estimate_ea(records: &[ChainRecord]) -> Result<(f64, f64)> {
    let series: Vec<Vec<f64>> = records.iter().map(ChainRecord::m_c_squared).collect();
    Ok(analysis::disorder_average(&series, 0)?.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::ContractionConfig;
    use crate::lattice::{Extents, LatticeKind};
    use crate::model::couplings_from_times;
    use crate::oracle;
    use core::f64::consts::{FRAC_PI_4, PI};

    fn lieb(l: usize) -> LatticeGraph {
        LatticeGraph::build(LatticeKind::LiebSquare, Extents::square(l)).unwrap()
    }

    #[test]
    fn diagonal_cut_chains_survive_hard_constraints() {
        // On t_B = t_A the anti-aligned weight of s = -1 vanishes; truncated
        // environments occasionally lose a sector and must be recomputed.
        let g = lieb(6);
        let t = 0.1125 * PI;
        let network =
            Network::new(&g, couplings_from_times(t, t), ContractionConfig::default()).unwrap();
        for chain_index in [11, 14] {
            let spec = ChainSpec {
                master_seed: 6,
                chain_index,
                init: InitMode::Random,
                order: ProposalOrder::Raster,
            };
            let record =
                run_chain(&g, &network, &Schedule::with_default_discard(2000), &spec).unwrap();
            assert_eq!(record.len(), 1800);
            assert!(record
                .m_c
                .iter()
                .all(|m| m.is_finite() && m.abs() <= 1.0 + 1e-9));
            // The untruncated fallback is a rare event, not the normal path.
            assert!(
                record.exact_sweeps <= 20,
                "{} exact sweeps",
                record.exact_sweeps
            );
        }
    }

    fn net(g: &LatticeGraph, ta: f64, tb: f64) -> Network {
        Network::new(
            g,
            couplings_from_times(ta, tb),
            ContractionConfig::default(),
        )
        .unwrap()
    }

    fn spec(seed: u64, chain_index: u64, init: InitMode) -> ChainSpec {
        ChainSpec {
            master_seed: seed,
            chain_index,
            init,
            order: ProposalOrder::Raster,
        }
    }

    #[test]
    fn init_modes() {
        let g = lieb(4);
        let mut rng = chain_rng(42, 0);
        let plus = init_config(&g, InitMode::UniformPlus, &mut rng);
        assert!(plus.iter().all(|&v| v == 1));
        assert!(plaquette_products(&g, &plus).iter().all(|&p| p == 1));
        let ff = init_config(&g, InitMode::RandomFluxFree, &mut rng);
        let prods = plaquette_products(&g, &ff);
        assert_eq!(prods.len(), 16);
        assert!(prods.iter().all(|&p| p == 1));
        assert!(ff.iter().any(|&v| v == -1));
        let a = init_config(&g, InitMode::Random, &mut chain_rng(42, 0));
        let b = init_config(&g, InitMode::Random, &mut chain_rng(42, 0));
        assert_eq!(a, b);
        assert_ne!(a, init_config(&g, InitMode::Random, &mut chain_rng(42, 1)));
    }

    #[test]
    fn free_ancillas_always_flip() {
        let g = lieb(3);
        let n = net(&g, 0.0, FRAC_PI_4);
        let mut c = ChainState::new(
            &g,
            &n,
            alloc::vec![1; g.n_bonds()],
            chain_rng(1, 0),
            ProposalOrder::Raster,
        )
        .unwrap();
        for _ in 0..3 {
            let out = c.metropolis_sweep().unwrap();
            assert_eq!(out.accepted, out.proposals);
        }
    }

    #[test]
    fn free_ancilla_two_state_chain() {
        // Without entanglement every bond is an independent two-state chain.
        let tb = PI / 8.0;
        let g = lieb(2);
        let n = net(&g, 0.0, tb);
        let mut c = ChainState::new(
            &g,
            &n,
            alloc::vec![1; g.n_bonds()],
            chain_rng(2, 0),
            ProposalOrder::Raster,
        )
        .unwrap();
        let (mut up_attempts, mut up_accepts, mut plus, mut total) =
            (0usize, 0usize, 0usize, 0usize);
        for _ in 0..20_000 {
            let before = c.s.clone();
            c.metropolis_sweep().unwrap();
            for (a, b) in before.iter().zip(&c.s) {
                if *a == 1 {
                    up_attempts += 1;
                    up_accepts += (*b == -1) as usize;
                }
            }
            plus += c.s.iter().filter(|&&v| v == 1).count();
            total += c.s.len();
        }
        let rate = up_accepts as f64 / up_attempts as f64;
        let expected = tb.tan().powi(2);
        let se = (expected * (1.0 - expected) / up_attempts as f64).sqrt();
        assert!((rate - expected).abs() < 4.0 * se, "{rate} {expected}");
        let frac = plus as f64 / total as f64;
        // Consecutive sweeps are correlated; allow a generous band.
        assert!((frac - tb.cos().powi(2)).abs() < 0.01, "{frac}");
    }

    #[test]
    fn strong_limit_chain_is_frozen() {
        let g = lieb(3);
        let n = net(&g, FRAC_PI_4, FRAC_PI_4);
        let r = run_chain(
            &g,
            &n,
            &Schedule::with_default_discard(20),
            &spec(3, 0, InitMode::UniformMinus),
        )
        .unwrap();
        assert_eq!(r.len(), 18);
        assert!(r.m_c.iter().all(|&m| (m - 1.0).abs() < 1e-12));
        assert!(r.acceptance.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn chains_are_reproducible() {
        let g = lieb(3);
        let n = net(&g, 0.15 * PI, FRAC_PI_4);
        let sched = Schedule {
            n_sweeps: 30,
            n_discard: 5,
            thin: 10,
        };
        let a = run_chain(&g, &n, &sched, &spec(9, 4, InitMode::Random)).unwrap();
        let b = run_chain(&g, &n, &sched, &spec(9, 4, InitMode::Random)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.snapshots.iter().map(|s| s.0).collect::<Vec<_>>(),
            [5, 15, 25]
        );
        let c = run_chain(&g, &n, &sched, &spec(9, 5, InitMode::Random)).unwrap();
        assert_ne!(a.m_c, c.m_c);
        assert!(matches!(
            run_chain(
                &g,
                &n,
                &Schedule {
                    n_sweeps: 5,
                    n_discard: 5,
                    thin: 0
                },
                &spec(9, 4, InitMode::Random)
            ),
            Err(SamplerError::BadSchedule { .. })
        ));
    }

    #[test]
    fn random_order_samples_the_same_law() {
        // Single-ancilla mean and EA parameter on L=1 vs enumeration.
        let g = lieb(1);
        let p = couplings_from_times(PI / 8.0, PI / 5.0);
        let n = Network::new(&g, p, ContractionConfig::default()).unwrap();
        let ens = oracle::enumerate_ensemble(&g, &p).unwrap();
        let exact_s = ens.average(|i| {
            let s = oracle::config_from_index(i, g.n_bonds());
            s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64
        });
        for order in [ProposalOrder::Raster, ProposalOrder::Random] {
            let mut sp = spec(5, 0, InitMode::Random);
            sp.order = order;
            let r = run_chain(&g, &n, &Schedule::with_default_discard(40_000), &sp).unwrap();
            let b = analysis::binning_error(&r.mean_s).unwrap();
            assert!(
                (b.mean - exact_s).abs() < 4.0 * b.stderr,
                "{order:?} {} {} {}",
                b.mean,
                exact_s,
                b.stderr
            );
        }
    }

    #[test]
    fn dense_sweeps_sample_the_same_law() {
        let g = lieb(2);
        let p = couplings_from_times(0.12 * PI, 0.12 * PI);
        let n = Network::new(&g, p, ContractionConfig::default()).unwrap();
        let dense = DenseNetwork::new(&n).unwrap();
        let ens = oracle::enumerate_ensemble(&g, &p).unwrap();
        let exact_s = ens.average(|i| {
            let s = oracle::config_from_index(i, g.n_bonds());
            s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64
        });
        let probes = Probes::new(&g).unwrap();
        for order in [ProposalOrder::Raster, ProposalOrder::Random] {
            let mut s = alloc::vec![1i8; g.n_bonds()];
            let mut rng = chain_rng(8, 0);
            let means: Vec<f64> = (0..20_000)
                .map(|_| {
                    ChainState::dense_sweep(&dense, &n, &g, &probes, order, &mut s, &mut rng)
                        .unwrap()
                        .observation
                        .mean_s
                })
                .collect();
            let b = analysis::binning_error(&means[2000..]).unwrap();
            assert!(
                (b.mean - exact_s).abs() < 4.0 * b.stderr,
                "{order:?} {} {} {}",
                b.mean,
                exact_s,
                b.stderr
            );
        }
    }

    #[test]
    fn ea_estimates() {
        let g = lieb(2);
        let n = net(&g, FRAC_PI_4, FRAC_PI_4);
        let records: Vec<ChainRecord> = (0..3)
            .map(|i| {
                run_chain(
                    &g,
                    &n,
                    &Schedule::with_default_discard(20),
                    &spec(1, i, InitMode::RandomFluxFree),
                )
                .unwrap()
            })
            .collect();
        let (q, e) = estimate_ea(&records).unwrap();
        assert!((q - 1.0).abs() < 1e-12 && e < 1e-12);
        let n0 = net(&g, 0.0, FRAC_PI_4);
        let records: Vec<ChainRecord> = (0..3)
            .map(|i| {
                run_chain(
                    &g,
                    &n0,
                    &Schedule::with_default_discard(20),
                    &spec(1, i, InitMode::Random),
                )
                .unwrap()
            })
            .collect();
        let (q, _) = estimate_ea(&records).unwrap();
        assert!(q.abs() < 1e-12);
        assert!(matches!(
            estimate_ea(&records[..1]),
            Err(SamplerError::Analysis(_))
        ));
    }
}
