//! Exact ground truth at desk scale: brute-force enumeration of the
//! measurement ensemble, closed-form 1D results and Nishimori identities.
//!
//! A [`Protocol`] lists physical spins and ancillas. Each ancilla couples to
//! the parity of an "A" group of spins with time `t_A` and to the parity of a
//! "B" group with time `t_B`; given the physical configuration it returns
//! `s = +1` with probability `cos²(t_A π_A + t_B π_B)`. The Ising protocol has
//! one site in each group; the 3D gauge protocol puts spins on edges and
//! ancillas on faces, with `(left, up)` as the A group and `(right, down)` as
//! the B group.
//!
//! Outcome configurations are indexed by bitmasks: bit `q` set means
//! `s_q = -1`.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;
use core::fmt;

// Float supplies libm-backed methods without std; with std they are inherent.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeGraph, LatticeKind};
use crate::model::{
    couplings_from_times, nishimori_params, CircuitParams, Coupling, ModelError, StringKind,
};

/// Largest total spin count (physical + ancilla) handled by enumeration.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub enum OracleError {
    TooLarge { spins: usize },
    OddLength(usize),
    NoCorrelator,
    NoCube,
    BadObservable(String),
    Model(ModelError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { spins } => write!(
                f,
                "exact enumeration is limited to {ENUMERATION_LIMIT} spins (lattice has {spins})"
            ),
            OracleError::OddLength(l) => {
                write!(f, "closed 1D forms need an even chain length (got {l})")
            }
            OracleError::NoCorrelator => f.write_str("protocol has no designated correlator pair"),
            OracleError::NoCube => f.write_str("lattice contains no complete cube"),
            OracleError::BadObservable(m) => write!(f, "invalid observable: {m}"),
            OracleError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for OracleError {}

impl From<ModelError> for OracleError {
    fn from(e: ModelError) -> Self {
        OracleError::Model(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaTerm {
    pub a_mask: u32,
    pub b_mask: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Ising,
    Gauge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub n_physical: usize,
    pub terms: Vec<AncillaTerm>,
    /// Physical spins `(0, c)` of the two-point function, if any.
    pub correlator: Option<(usize, usize)>,
}

impl Protocol {
    /// Spins on sites, ancillas on bonds.
    pub fn ising(graph: &LatticeGraph) -> Result<Self, OracleError> {
        let p = Protocol {
            kind: ProtocolKind::Ising,
            n_physical: graph.n_sites(),
            terms: graph
                .bonds
                .iter()
                .map(|b| AncillaTerm {
                    a_mask: 1 << b.a,
                    b_mask: 1 << b.b,
                })
                .collect(),
            correlator: Some((graph.pinned_corner, graph.central_site)),
        };
        p.guard()
    }

    /// Spins on edges, ancillas on faces.
    pub fn gauge(graph: &LatticeGraph) -> Result<Self, OracleError> {
        let p = Protocol {
            kind: ProtocolKind::Gauge,
            n_physical: graph.n_bonds(),
            terms: graph
                .plaquettes
                .iter()
                .map(|plaq| {
                    let [down, right, up, left] =
                        [plaq.bonds[0], plaq.bonds[1], plaq.bonds[2], plaq.bonds[3]];
                    AncillaTerm {
                        a_mask: (1 << left) | (1 << up),
                        b_mask: (1 << right) | (1 << down),
                    }
                })
                .collect(),
            correlator: None,
        };
        p.guard()
    }

    /// The gauge protocol for cubic lattices, the Ising protocol otherwise.
    pub fn for_graph(graph: &LatticeGraph) -> Result<Self, OracleError> {
        match graph.kind {
            LatticeKind::Cubic3d => Protocol::gauge(graph),
            _ => Protocol::ising(graph),
        }
    }

    fn guard(self) -> Result<Self, OracleError> {
        let spins = self.n_physical + self.terms.len();
        if spins > ENUMERATION_LIMIT {
            return Err(OracleError::TooLarge { spins });
        }
        Ok(self)
    }

    pub fn n_ancillas(&self) -> usize {
        self.terms.len()
    }

    /// Bitmask of ancillas whose two parities agree in configuration `sigma`
    /// (bit `i` of `sigma` set means physical spin `i` is down).
    #[inline]
    fn aligned_mask(&self, sigma: u32) -> u32 {
        let mut m = 0;
        for (q, t) in self.terms.iter().enumerate() {
            if (sigma & t.a_mask).count_ones() % 2 == (sigma & t.b_mask).count_ones() % 2 {
                m |= 1 << q;
            }
        }
        m
    }

    /// Ancillas flipped by a gauge transformation on physical spin `i`.
    fn gauge_generator(&self, i: usize) -> u32 {
        let mut m = 0;
        for (q, t) in self.terms.iter().enumerate() {
            if ((t.a_mask ^ t.b_mask) >> i) & 1 == 1 {
                m |= 1 << q;
            }
        }
        m
    }
}

/// Pairwise (cascade) summation; deterministic and accurate for long sums.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Histogram of aligned masks over all physical configurations, with the
/// count weighted by the designated two-point function.
struct MaskHistogram {
    masks: Vec<u32>,
    count: Vec<f64>,
    signed: Vec<f64>,
}

fn histogram(protocol: &Protocol) -> MaskHistogram {
    let mut map: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let pair = protocol.correlator.map(|(i, j)| (1u32 << i) | (1u32 << j));
    for sigma in 0..(1u32 << protocol.n_physical) {
        let m = protocol.aligned_mask(sigma);
        let sign = match pair {
            Some(p) if (sigma & p).count_ones() % 2 == 1 => -1.0,
            _ => 1.0,
        };
        let e = map.entry(m).or_insert((0.0, 0.0));
        e.0 += 1.0;
        e.1 += sign;
    }
    let mut h = MaskHistogram {
        masks: Vec::with_capacity(map.len()),
        count: Vec::with_capacity(map.len()),
        signed: Vec::with_capacity(map.len()),
    };
    for (m, (c, s)) in map {
        h.masks.push(m);
        h.count.push(c);
        h.signed.push(s);
    }
    h
}

/// `Σ_σ ∏_q w[s_q][aligned_q]` and its correlator-weighted twin, where
/// `w[0]` is used for `s = +1`, `w[1]` for `s = -1`, and index `1` of the
/// inner pair for aligned ancillas.
fn partition(
    h: &MaskHistogram,
    n_anc: usize,
    s_index: u32,
    w: &[[f64; 2]; 2],
    buf: &mut Vec<f64>,
    sbuf: &mut Vec<f64>,
) -> (f64, f64) {
    buf.clear();
    sbuf.clear();
    for (k, &m) in h.masks.iter().enumerate() {
        let mut prod = 1.0;
        for q in 0..n_anc {
            prod *= w[((s_index >> q) & 1) as usize][((m >> q) & 1) as usize];
            if prod == 0.0 {
                break;
            }
        }
        buf.push(h.count[k] * prod);
        sbuf.push(h.signed[k] * prod);
    }
    (pairwise_sum(buf), pairwise_sum(sbuf))
}

fn born_weights(params: &CircuitParams) -> [[f64; 2]; 2] {
    [
        [params.bond_plus.anti, params.bond_plus.aligned],
        [params.bond_minus.anti, params.bond_minus.aligned],
    ]
}

/// The exact outcome distribution of one protocol at one pair of angles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactEnsemble {
    pub n_ancillas: usize,
    pub n_physical: usize,
    /// `p_{s}`, indexed by outcome bitmask.
    pub probabilities: Vec<f64>,
    /// `Z_{s} = Σ_σ ∏ B^{s}`, so that `p = Z / 2^{n_physical}`.
    pub partition: Vec<f64>,
    /// `⟨σ_0 σ_c⟩_{s}` (zero where `p_{s} = 0`); empty without a correlator.
    pub correlator: Vec<f64>,
}

impl ExactEnsemble {
    pub fn total_probability(&self) -> f64 {
        pairwise_sum(&self.probabilities)
    }

    /// `Σ_s p_s f(s)`.
    pub fn average(&self, f: impl Fn(u32) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .probabilities
            .iter()
            .enumerate()
            .map(|(s, &p)| if p == 0.0 { 0.0 } else { p * f(s as u32) })
            .collect();
        pairwise_sum(&terms)
    }
}

pub fn enumerate_protocol(protocol: &Protocol, params: &CircuitParams) -> ExactEnsemble {
    let n_anc = protocol.n_ancillas();
    let h = histogram(protocol);
    let w = born_weights(params);
    let norm = (0.5f64).powi(protocol.n_physical as i32);
    let n_s = 1usize << n_anc;
    let mut probabilities = Vec::with_capacity(n_s);
    let mut partition_fn = Vec::with_capacity(n_s);
    let mut correlator = Vec::new();
    let (mut buf, mut sbuf) = (Vec::new(), Vec::new());
    for s in 0..n_s as u32 {
        let (z, zc) = partition(&h, n_anc, s, &w, &mut buf, &mut sbuf);
        probabilities.push(z * norm);
        partition_fn.push(z);
        if protocol.correlator.is_some() {
            correlator.push(if z > 0.0 { zc / z } else { 0.0 });
        }
    }
    ExactEnsemble {
        n_ancillas: n_anc,
        n_physical: protocol.n_physical,
        probabilities,
        partition: partition_fn,
        correlator,
    }
}

pub fn enumerate_ensemble(
    graph: &LatticeGraph,
    params: &CircuitParams,
) -> Result<ExactEnsemble, OracleError> {
    Ok(enumerate_protocol(&Protocol::for_graph(graph)?, params))
}

/// `q = Σ_s p_s ⟨σ_0 σ_c⟩_s²`.
pub fn exact_ea(graph: &LatticeGraph, params: &CircuitParams) -> Result<f64, OracleError> {
    let protocol = Protocol::ising(graph)?;
    let ens = enumerate_protocol(&protocol, params);
    Ok(ens.average(|s| ens.correlator[s as usize].powi(2)))
}

/// Outcome bitmask of a ±1 configuration.
pub fn config_index(s: &[i8]) -> u32 {
    s.iter()
        .enumerate()
        .fold(0, |m, (q, &v)| if v < 0 { m | (1 << q) } else { m })
}

pub fn config_from_index(index: u32, n: usize) -> Vec<i8> {
    (0..n)
        .map(|q| if (index >> q) & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// 1D EA order parameter between the ends of a chain of `l` bonds, pinned at
/// one end and read out at the center: `(sin²2t_A sin²2t_B / (1 - cos²2t_A cos²2t_B))^{l/2}`.
pub fn oned_q(t_a: f64, t_b: f64, l: usize) -> Result<f64, OracleError> {
    if l % 2 == 1 {
        return Err(OracleError::OddLength(l));
    }
    let (ca, cb) = ((2.0 * t_a).cos(), (2.0 * t_b).cos());
    let (sa, sb) = ((2.0 * t_a).sin(), (2.0 * t_b).sin());
    let den = 1.0 - ca * ca * cb * cb;
    if den <= 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    Ok((sa * sa * sb * sb / den).powi((l / 2) as i32))
}

/// Probability of a single `s = +1` outcome: `(1 + cos 2t_A cos 2t_B) / 2`.
pub fn oned_bond_prob(t_a: f64, t_b: f64) -> f64 {
    0.5 * (1.0 + (2.0 * t_a).cos() * (2.0 * t_b).cos())
}

/// Observables of the premeasurement state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SingleS {
        ancilla: usize,
    },
    /// Product of `s^x` over a list of ancillas.
    String {
        ancillas: Vec<usize>,
    },
    Plaquette {
        index: usize,
    },
    /// Shortest-path string between two sites with `σ^z` at both ends.
    DecoratedString {
        from: usize,
        to: usize,
    },
    /// Product over the six faces of the cube at the origin.
    CubeProduct,
}

/// `⟨ψ| ∏_{q∈S} s^x_q ∏_{i∈D} σ^z_i |ψ⟩` by a direct sum over physical
/// configurations. Summing the outcomes first, an ancilla outside `S`
/// contributes `B^+ + B^- = 1` and one inside contributes `B^+ - B^-`.
pub fn string_expectation(
    protocol: &Protocol,
    params: &CircuitParams,
    ancillas: &[usize],
    decoration: u32,
) -> f64 {
    let diff = [
        params.bond_plus.anti - params.bond_minus.anti,
        params.bond_plus.aligned - params.bond_minus.aligned,
    ];
    let n = 1u32 << protocol.n_physical;
    let mut terms = Vec::with_capacity(n as usize);
    for sigma in 0..n {
        let m = protocol.aligned_mask(sigma);
        let mut v = if (sigma & decoration).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        for &q in ancillas {
            v *= diff[((m >> q) & 1) as usize];
        }
        terms.push(v);
    }
    pairwise_sum(&terms) / n as f64
}

/// Faces of the unit cube at the origin of a cubic lattice.
pub fn origin_cube(graph: &LatticeGraph) -> Result<Vec<usize>, OracleError> {
    let inside = |s: usize| graph.sites[s].coord.iter().all(|&c| c == 0 || c == 1);
    let faces: Vec<usize> = (0..graph.plaquettes.len())
        .filter(|&p| {
            graph.plaquettes[p]
                .bonds
                .iter()
                .all(|&b| inside(graph.bonds[b].a) && inside(graph.bonds[b].b))
        })
        .collect();
    if graph.kind != LatticeKind::Cubic3d || faces.len() != 6 {
        return Err(OracleError::NoCube);
    }
    Ok(faces)
}

pub fn premeasurement_check(
    graph: &LatticeGraph,
    params: &CircuitParams,
    observable: &Observable,
) -> Result<f64, OracleError> {
    let protocol = Protocol::for_graph(graph)?;
    let n_anc = protocol.n_ancillas();
    let check = |q: usize| {
        if q < n_anc {
            Ok(q)
        } else {
            Err(OracleError::BadObservable(alloc::format!(
                "ancilla {q} out of range"
            )))
        }
    };
    let (ancillas, decoration) = match observable {
        Observable::SingleS { ancilla } => (vec![check(*ancilla)?], 0),
        Observable::String { ancillas } => (
            ancillas
                .iter()
                .map(|&q| check(q))
                .collect::<Result<Vec<_>, _>>()?,
            0,
        ),
        Observable::Plaquette { index } => {
            if protocol.kind != ProtocolKind::Ising || *index >= graph.plaquettes.len() {
                return Err(OracleError::BadObservable("plaquette".into()));
            }
            (graph.plaquettes[*index].bonds.clone(), 0)
        }
        Observable::DecoratedString { from, to } => {
            if protocol.kind != ProtocolKind::Ising {
                return Err(OracleError::BadObservable(
                    "decorated strings need site spins".into(),
                ));
            }
            let path = graph
                .wilson_path(*from, *to)
                .map_err(|e| OracleError::BadObservable(alloc::format!("{e}")))?;
            let deco = if from == to {
                0
            } else {
                (1u32 << from) | (1u32 << to)
            };
            (path, deco)
        }
        Observable::CubeProduct => (origin_cube(graph)?, 0),
    };
    Ok(string_expectation(&protocol, params, &ancillas, decoration))
}

/// Closed form matching [`premeasurement_check`] for the observables whose
/// strings are simple paths or single loops.
pub fn premeasurement_closed_form(
    graph: &LatticeGraph,
    params: &CircuitParams,
    observable: &Observable,
) -> Result<f64, OracleError> {
    use crate::model::premeasurement_correlator as pc;
    let (ta, tb) = (params.t_a, params.t_b);
    Ok(match observable {
        Observable::SingleS { .. } => pc(ta, tb, 1, StringKind::Open),
        Observable::Plaquette { index } => pc(
            ta,
            tb,
            graph.plaquettes[*index].bonds.len(),
            StringKind::Closed,
        ),
        Observable::DecoratedString { from, to } => {
            let len = graph
                .wilson_path(*from, *to)
                .map_err(|e| OracleError::BadObservable(alloc::format!("{e}")))?
                .len();
            if len == 0 {
                1.0
            } else {
                pc(ta, tb, len, StringKind::Decorated)
            }
        }
        Observable::CubeProduct => crate::model::cube_product(ta, tb),
        Observable::String { ancillas } => {
            // Only open strings (no cycles among the chosen bonds) have the plain form.
            pc(ta, tb, ancillas.len(), StringKind::Open)
        }
    })
}

/// One named check with its worst deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, max_deviation: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            max_deviation,
            tolerance,
            passed: max_deviation <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NishimoriReport {
    pub t_a: f64,
    pub t_b: f64,
    pub checks: Vec<CheckResult>,
}

impl NishimoriReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const NISHIMORI_TOLERANCE: f64 = 1e-10;

/// RBIM weights `exp(-β (s ε + 1))` with `ε = ±1` for aligned/anti pairs,
/// shifted so the largest weight is one; `β = ∞` gives 0/1 weights.
fn rbim_weights(beta: Coupling) -> [[f64; 2]; 2] {
    let low = match beta {
        Coupling::Finite(b) => (-2.0 * b).exp(),
        _ => 0.0,
    };
    // s = +1: aligned (ε = +1) costs 2β, anti is free.
    [[1.0, low], [low, 1.0]]
}

/// Checks, on the line `t_B = π/4`:
/// (a) `p_{s} / Z_{s}` is constant, with `Z` the random-bond Ising partition
///     function at `β = ln|tan(t_A + π/4)|`;
/// (b) `p_{s}` is constant on gauge orbits;
/// (c) `[⟨σ_0σ_c⟩²]` equals `[⟨σ_0σ_c⟩]'` under independent bond disorder
///     with antiferromagnetic probability `p_flip` (Ising protocol only).
pub fn verify_nishimori(graph: &LatticeGraph, t_a: f64) -> Result<NishimoriReport, OracleError> {
    verify_nishimori_at(graph, t_a, FRAC_PI_4)
}

/// As [`verify_nishimori`] but at an arbitrary `t_B`, to show which identities
/// break off the line.
pub fn verify_nishimori_at(
    graph: &LatticeGraph,
    t_a: f64,
    t_b: f64,
) -> Result<NishimoriReport, OracleError> {
    let protocol = Protocol::for_graph(graph)?;
    let nish = nishimori_params(t_a)?;
    let params = couplings_from_times(t_a, t_b);
    let ens = enumerate_protocol(&protocol, &params);
    let n_anc = protocol.n_ancillas();
    let n_s = 1u32 << n_anc;
    let h = histogram(&protocol);
    let wr = rbim_weights(nish.beta);
    let (mut buf, mut sbuf) = (Vec::new(), Vec::new());
    let rbim: Vec<(f64, f64)> = (0..n_s)
        .map(|s| partition(&h, n_anc, s, &wr, &mut buf, &mut sbuf))
        .collect();

    let mut checks = Vec::new();

    // (a) Ratios relative to the all-plus configuration, which always has
    // positive weight.
    let ratio0 = ens.probabilities[0] / rbim[0].0;
    let mut dev_a: f64 = 0.0;
    for s in 0..n_s as usize {
        let (p, z) = (ens.probabilities[s], rbim[s].0);
        let d = if z == 0.0 {
            p / ratio0
        } else {
            (p / z / ratio0 - 1.0).abs()
        };
        dev_a = dev_a.max(d);
    }
    checks.push(CheckResult::new(
        "p_proportional_to_z",
        dev_a,
        NISHIMORI_TOLERANCE,
    ));

    // (b) Gauge orbits by breadth-first closure over single-spin flips.
    let generators: Vec<u32> = (0..protocol.n_physical)
        .map(|i| protocol.gauge_generator(i))
        .collect();
    let mut orbit = vec![u32::MAX; n_s as usize];
    let mut dev_b: f64 = 0.0;
    for root in 0..n_s {
        if orbit[root as usize] != u32::MAX {
            continue;
        }
        orbit[root as usize] = root;
        let p_root = ens.probabilities[root as usize];
        let mut queue = VecDeque::from([root]);
        while let Some(s) = queue.pop_front() {
            let p = ens.probabilities[s as usize];
            dev_b = dev_b.max(relative_gap(p, p_root));
            for &g in &generators {
                let t = s ^ g;
                if orbit[t as usize] == u32::MAX {
                    orbit[t as usize] = root;
                    queue.push_back(t);
                }
            }
        }
    }
    checks.push(CheckResult::new(
        "gauge_invariance",
        dev_b,
        NISHIMORI_TOLERANCE,
    ));

    // (c) EA identity against uncorrelated disorder.
    if protocol.correlator.is_some() {
        let born_ea = ens.average(|s| ens.correlator[s as usize].powi(2));
        let pf = nish.p_flip;
        let terms: Vec<f64> = (0..n_s)
            .map(|s| {
                let minus = s.count_ones() as i32;
                let prior = pf.powi(n_anc as i32 - minus) * (1.0 - pf).powi(minus);
                let (z, zc) = rbim[s as usize];
                if prior == 0.0 || z == 0.0 {
                    0.0
                } else {
                    prior * zc / z
                }
            })
            .collect();
        let linear = pairwise_sum(&terms);
        checks.push(CheckResult::new(
            "ea_identity",
            (born_ea - linear).abs(),
            NISHIMORI_TOLERANCE,
        ));
    }
    Ok(NishimoriReport { t_a, t_b, checks })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Complex number as `(re, im)`; enough for the single-ancilla operators.
type Complex = (f64, f64);

/// Diagonal entry of `⟨s^x = s| exp(-i s^z θ) |+⟩` for
/// `θ = t_A (σ_l + σ_u) + t_B (σ_r + σ_d)`: `cos θ` for `s = +1`, `-i sin θ`
/// for `s = -1`.
pub fn two_body_operator(t_a: f64, t_b: f64, s: i8, spins: [i8; 4]) -> Complex {
    let [l, u, r, d] = spins.map(f64::from);
    let theta = t_a * (l + u) + t_b * (r + d);
    if s > 0 {
        (theta.cos(), 0.0)
    } else {
        (0.0, -theta.sin())
    }
}

/// Strong-limit closed form of [`two_body_operator`] at `t_A = t_B = π/4`.
pub fn two_body_strong_limit(s: i8, spins: [i8; 4]) -> Complex {
    let sum: i32 = spins.iter().map(|&v| v as i32).sum();
    let w = spins.iter().map(|&v| v as i32).product::<i32>() as f64;
    if s > 0 {
        let sign = if sum.abs() == 4 { -1.0 } else { 1.0 };
        (0.5 * (1.0 + w) * sign, 0.0)
    } else {
        (0.0, -0.25 * (1.0 - w) * sum as f64)
    }
}

/// Strong-limit identity of the two-body gauge protocol on a cubic lattice:
/// for every edge configuration and every face, the operator equals its
/// closed form and has modulus `(1 + s W) / 2`, so the product over faces is
/// the flux projector `∏ (1 + s_q W_q) / 2` up to phases.
pub fn two_body_projector_check(graph: &LatticeGraph) -> Result<CheckResult, OracleError> {
    if graph.kind != LatticeKind::Cubic3d {
        return Err(OracleError::NoCube);
    }
    let n = graph.n_bonds();
    if n + graph.plaquettes.len() > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge {
            spins: n + graph.plaquettes.len(),
        });
    }
    let mut dev: f64 = 0.0;
    for sigma in 0..(1u32 << n) {
        let spin = |e: usize| if (sigma >> e) & 1 == 1 { -1i8 } else { 1 };
        for plaq in &graph.plaquettes {
            let [down, right, up, left] =
                [plaq.bonds[0], plaq.bonds[1], plaq.bonds[2], plaq.bonds[3]];
            let spins = [spin(left), spin(up), spin(right), spin(down)];
            let w = spins.iter().map(|&v| v as i32).product::<i32>() as f64;
            for s in [1i8, -1] {
                let direct = two_body_operator(FRAC_PI_4, FRAC_PI_4, s, spins);
                let closed = two_body_strong_limit(s, spins);
                let modulus = (direct.0 * direct.0 + direct.1 * direct.1).sqrt();
                dev = dev
                    .max((direct.0 - closed.0).abs())
                    .max((direct.1 - closed.1).abs())
                    .max((modulus - 0.5 * (1.0 + s as f64 * w)).abs());
            }
        }
    }
    Ok(CheckResult::new(
        "two_body_strong_limit_projector",
        dev,
        1e-12,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Extents;
    use core::f64::consts::PI;

    fn lieb(l: usize) -> LatticeGraph {
        LatticeGraph::build(LatticeKind::LiebSquare, Extents::square(l)).unwrap()
    }

    fn chain(l: usize) -> LatticeGraph {
        LatticeGraph::build(LatticeKind::Chain, Extents::line(l)).unwrap()
    }

    fn cube() -> LatticeGraph {
        LatticeGraph::build(LatticeKind::Cubic3d, Extents::cube(2)).unwrap()
    }

    #[test]
    fn single_bond_law() {
        for (ta, tb) in [(0.3, 0.7), (FRAC_PI_4, FRAC_PI_4), (PI / 8.0, PI / 8.0)] {
            let ens = enumerate_ensemble(&chain(1), &couplings_from_times(ta, tb)).unwrap();
            assert!((ens.probabilities[0] - oned_bond_prob(ta, tb)).abs() < 1e-14);
            assert!((ens.total_probability() - 1.0).abs() < 1e-14);
        }
        assert!((oned_bond_prob(PI / 8.0, PI / 8.0) - 0.75).abs() < 1e-15);
        let ens =
            enumerate_ensemble(&chain(1), &couplings_from_times(FRAC_PI_4, FRAC_PI_4)).unwrap();
        assert!(
            (ens.probabilities[0] - 0.5).abs() < 1e-15
                && (ens.probabilities[1] - 0.5).abs() < 1e-15
        );
    }

    #[test]
    fn normalization_and_outcome_flip() {
        let g = lieb(2);
        let all = (1u32 << g.n_bonds()) - 1;
        let max_flip_gap = |ens: &ExactEnsemble| {
            (0..=all)
                .map(|s| {
                    relative_gap(
                        ens.probabilities[s as usize],
                        ens.probabilities[(s ^ all) as usize],
                    )
                })
                .fold(0.0, f64::max)
        };
        // Flipping every outcome is a sublattice spin flip when t_B = π/4.
        let ens = enumerate_ensemble(&g, &couplings_from_times(0.37, FRAC_PI_4)).unwrap();
        assert!((ens.total_probability() - 1.0).abs() < 1e-12);
        assert!(max_flip_gap(&ens) < 1e-12);
        let ens = enumerate_ensemble(&g, &couplings_from_times(0.37, 0.91)).unwrap();
        assert!((ens.total_probability() - 1.0).abs() < 1e-12);
        assert!(max_flip_gap(&ens) > 1e-3);
    }

    #[test]
    fn chain_ea_closed_forms() {
        let q = exact_ea(&chain(4), &couplings_from_times(PI / 8.0, FRAC_PI_4)).unwrap();
        assert!((q - 0.25).abs() < 1e-12, "{q}");
        let q = exact_ea(&chain(4), &couplings_from_times(PI / 8.0, PI / 8.0)).unwrap();
        assert!((q - 1.0 / 9.0).abs() < 1e-12, "{q}");
        for l in [2usize, 4, 6, 8] {
            for (ta, tb) in [(0.21, 0.66), (0.4, 0.4), (0.1, FRAC_PI_4)] {
                let exact = exact_ea(&chain(l), &couplings_from_times(ta, tb)).unwrap();
                assert!((exact - oned_q(ta, tb, l).unwrap()).abs() < 1e-12);
            }
        }
        assert_eq!(oned_q(0.0, 0.0, 4).unwrap(), 0.0);
        assert!((oned_q(FRAC_PI_4, FRAC_PI_4, 10).unwrap() - 1.0).abs() < 1e-15);
        assert!((oned_q(PI / 8.0, FRAC_PI_4, 8).unwrap() - 0.0625).abs() < 1e-14);
        assert_eq!(oned_q(0.3, 0.3, 3), Err(OracleError::OddLength(3)));
    }

    #[test]
    fn ea_vanishes_without_entanglement() {
        let q = exact_ea(&lieb(2), &couplings_from_times(0.0, 0.5)).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            Protocol::ising(&lieb(3)),
            Err(OracleError::TooLarge { spins: 40 })
        ));
    }

    #[test]
    fn premeasurement_examples() {
        let g = lieb(2);
        let p = couplings_from_times(PI / 8.0, PI / 5.0);
        let v = premeasurement_check(&g, &p, &Observable::Plaquette { index: 0 }).unwrap();
        let expected = (PI / 4.0).cos().powi(4) * (2.0 * PI / 5.0).cos().powi(4)
            + (PI / 4.0).sin().powi(4) * (2.0 * PI / 5.0).sin().powi(4);
        assert!((v - expected).abs() < 1e-12);
        let strong = couplings_from_times(FRAC_PI_4, FRAC_PI_4);
        let open = premeasurement_check(
            &g,
            &strong,
            &Observable::String {
                ancillas: vec![0, 1, 4],
            },
        )
        .unwrap();
        assert!(open.abs() < 1e-12);
        let t = 0.13 * PI;
        let v = premeasurement_check(
            &cube(),
            &couplings_from_times(t, FRAC_PI_4),
            &Observable::CubeProduct,
        )
        .unwrap();
        assert!((v - (2.0 * t).sin().powi(6)).abs() < 1e-12);
    }

    #[test]
    fn premeasurement_matches_closed_forms() {
        let g = lieb(2);
        let cubic = cube();
        let mut x = 0.123f64;
        let mut next = || {
            x = (x * 97.13 + 0.377).fract();
            x
        };
        for _ in 0..25 {
            let p = couplings_from_times(next() * 1.5, next() * 1.5);
            let (a, b) = ((next() * 9.0) as usize, (next() * 9.0) as usize);
            let obs = [
                Observable::SingleS {
                    ancilla: (next() * 12.0) as usize,
                },
                Observable::Plaquette {
                    index: (next() * 4.0) as usize,
                },
                Observable::DecoratedString { from: a, to: b },
            ];
            for o in &obs {
                let e = premeasurement_check(&g, &p, o).unwrap();
                let c = premeasurement_closed_form(&g, &p, o).unwrap();
                assert!((e - c).abs() < 1e-10, "{o:?}: {e} vs {c}");
            }
            let e = premeasurement_check(&cubic, &p, &Observable::CubeProduct).unwrap();
            assert!((e - crate::model::cube_product(p.t_a, p.t_b)).abs() < 1e-10);
        }
    }

    #[test]
    fn nishimori_on_line() {
        for t in [0.0, PI / 8.0, 0.05 * PI, 0.2 * PI, FRAC_PI_4] {
            let r = verify_nishimori(&lieb(2), t).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.checks.len(), 3);
        }
        let r = verify_nishimori(&cube(), 0.15 * PI).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn gauge_breaks_off_line() {
        let r = verify_nishimori_at(&lieb(2), PI / 8.0, PI / 5.0).unwrap();
        let gauge = r.check("gauge_invariance").unwrap();
        assert!(!gauge.passed && gauge.max_deviation > 1e-3, "{gauge:?}");
    }

    #[test]
    fn uniform_without_entanglement() {
        let ens = enumerate_ensemble(&lieb(2), &couplings_from_times(0.0, FRAC_PI_4)).unwrap();
        let p0 = ens.probabilities[0];
        assert!(ens.probabilities.iter().all(|&p| (p - p0).abs() < 1e-16));
    }

    #[test]
    fn two_body_identity() {
        let r = two_body_projector_check(&cube()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(two_body_projector_check(&lieb(1)).is_err());
    }

    #[test]
    fn two_body_finite_time_expansion() {
        // Polynomial expansion in tan t_A, tan t_B of the single-face operator.
        let (ta, tb) = (0.31, 0.47);
        let (a, b) = (ta.tan(), tb.tan());
        let pre = ta.cos().powi(2) * tb.cos().powi(2);
        for bits in 0..16u32 {
            let sp: [i8; 4] = core::array::from_fn(|i| if (bits >> i) & 1 == 1 { -1 } else { 1 });
            let [l, u, r, d] = sp.map(f64::from);
            let w = l * u * r * d;
            let plus = pre
                * (1.0 + a * a * b * b * w
                    - (a * a * l * u + b * b * r * d + a * b * (l + u) * (r + d)));
            let minus = -pre
                * (a * (l + u) + b * (r + d) - a * b * b * w * (l + u) - a * a * b * w * (r + d));
            let p = two_body_operator(ta, tb, 1, sp);
            let m = two_body_operator(ta, tb, -1, sp);
            assert!((p.0 - plus).abs() < 1e-12 && p.1 == 0.0);
            assert!((m.1 - minus).abs() < 1e-12 && m.0 == 0.0);
        }
    }

    #[test]
    fn index_roundtrip() {
        let s = vec![1i8, -1, -1, 1, -1];
        assert_eq!(config_from_index(config_index(&s), 5), s);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-12);
    }
}
