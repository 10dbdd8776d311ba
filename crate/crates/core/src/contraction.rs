//! Boundary-MPS contraction of the classical network behind the Born
//! probabilities.
//!
//! For a row layout of width `W` the weight of an outcome configuration is
//! `Z = Σ_σ ∏_rows R_y ∏_verticals V`, where `R_y` is diagonal in the spins of
//! row `y` (site weights times horizontal bond matrices) and `V` couples
//! vertically adjacent spins. The bottom stack holds
//! `Bot_0 = 1`, `BotR_y = compress(R_y Bot_y)`, `Bot_{y+1} = V_y BotR_y`; the top
//! stack is the mirror image. Local environments of a bond are strip (row) or
//! ladder (vertical) contractions between one state of each stack.
//!
//! The pinned corner spin carries the projector `diag(1, 0)`, and so do the
//! empty slots of the heavy-hexagon layout.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;

use nalgebra::DMatrix;
// Float supplies libm-backed methods without std; with std they are inherent.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::lattice::{BondSlot, LatticeGraph, LatticeKind, RowLayout};
use crate::model::{BondMatrix, CircuitParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig {
    /// Relative discarded weight `Σ_discarded s² / Σ s²` allowed per bond.
    pub cutoff: f64,
    pub chi_max: usize,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        ContractionConfig {
            cutoff: 1e-10,
            chi_max: 256,
        }
    }
}

impl ContractionConfig {
    /// No truncation beyond exact zeros; for checks on small lattices.
    pub fn exact() -> Self {
        ContractionConfig {
            cutoff: 0.0,
            chi_max: usize::MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ContractionError {
    /// The configuration has zero weight (a measure-zero outcome).
    ZeroWeight {
        row: usize,
    },
    Unsupported(LatticeKind),
    BadBond(usize),
    BadLength {
        expected: usize,
        got: usize,
    },
    /// A truncated environment came out unusable (non-positive weight for
    /// the current outcome, or clearly negative entries).
    InvalidEnvironment {
        bond: usize,
    },
}

impl ContractionError {
    /// Failures that an untruncated contraction can resolve.
    pub fn is_truncation_artifact(&self) -> bool {
        matches!(
            self,
            ContractionError::ZeroWeight { .. } | ContractionError::InvalidEnvironment { .. }
        )
    }
}

impl fmt::Display for ContractionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractionError::ZeroWeight { row } => {
                write!(
                    f,
                    "outcome configuration has zero weight (detected at row {row})"
                )
            }
            ContractionError::Unsupported(kind) => {
                write!(f, "{kind} lattices have no row layout to contract")
            }
            ContractionError::BadBond(b) => write!(f, "bond {b} does not exist"),
            ContractionError::BadLength { expected, got } => {
                write!(
                    f,
                    "outcome configuration has {got} entries, expected {expected}"
                )
            }
            ContractionError::InvalidEnvironment { bond } => {
                write!(f, "truncated environment of bond {bond} is invalid")
            }
        }
    }
}

impl core::error::Error for ContractionError {}

type Result<T> = core::result::Result<T, ContractionError>;

/// Row-major strided view of a matrix.
#[derive(Clone, Copy)]
struct View<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

impl<'a> View<'a> {
    fn dense(data: &'a [f64], rows: usize, cols: usize) -> Self {
        View {
            data,
            rows,
            cols,
            rs: cols as isize,
            cs: 1,
        }
    }

    fn t(self) -> Self {
        View {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }
}

/// `c = alpha a b + beta c` with `c` dense row-major.
fn gemm(alpha: f64, a: View, b: View, beta: f64, c: &mut [f64]) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert!(c.len() >= a.rows * b.cols);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in &mut c[..m * n] {
            *v *= beta;
        }
        return;
    }
    let last = |v: &View| (v.rows as isize - 1) * v.rs + (v.cols as isize - 1) * v.cs;
    assert!((last(&a) as usize) < a.data.len() && (last(&b) as usize) < b.data.len());
    // SAFETY: the largest offsets touched are checked against the slices above
    // and strides are nonnegative.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs,
            a.cs,
            b.data.as_ptr(),
            b.rs,
            b.cs,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Rank-3 tensor `A[l][σ][r]` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsTensor {
    pub dl: usize,
    pub dr: usize,
    pub data: Vec<f64>,
}

impl MpsTensor {
    fn ones() -> Self {
        MpsTensor {
            dl: 1,
            dr: 1,
            data: vec![1.0, 1.0],
        }
    }

    /// The `dl x dr` matrix at physical index `s`.
    fn slice(&self, s: usize) -> View<'_> {
        View {
            data: &self.data[s * self.dr..],
            rows: self.dl,
            cols: self.dr,
            rs: 2 * self.dr as isize,
            cs: 1,
        }
    }

    #[inline]
    pub fn get(&self, l: usize, s: usize, r: usize) -> f64 {
        self.data[(l * 2 + s) * self.dr + r]
    }
}

/// Boundary MPS with its accumulated normalization. The represented vector is
/// `exp(log_norm) x (contraction of tensors)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryState {
    pub tensors: Vec<MpsTensor>,
    pub log_norm: f64,
    /// Largest relative discarded weight of any truncation so far.
    pub max_discarded: f64,
}

impl BoundaryState {
    /// The all-ones product state.
    pub fn ones(width: usize) -> Self {
        BoundaryState {
            tensors: vec![MpsTensor::ones(); width],
            log_norm: 0.0,
            max_discarded: 0.0,
        }
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors
            .iter()
            .take(self.tensors.len().saturating_sub(1))
            .map(|t| t.dr)
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.tensors.iter().map(|t| t.dr).max().unwrap_or(1)
    }

    /// Dense vector over `2^width` configurations (first column is the most
    /// significant bit), scaled by `exp(log_norm)`. Small widths only.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut cur = vec![1.0];
        let mut dim = 1;
        for t in &self.tensors {
            let mut next = vec![0.0; cur.len() / dim * 2 * t.dr];
            let n_conf = cur.len() / dim;
            for c in 0..n_conf {
                for s in 0..2 {
                    for r in 0..t.dr {
                        let mut acc = 0.0;
                        for l in 0..dim {
                            acc += cur[c * dim + l] * t.get(l, s, r);
                        }
                        next[(c * 2 + s) * t.dr + r] = acc;
                    }
                }
            }
            cur = next;
            dim = t.dr;
        }
        let scale = self.log_norm.exp();
        cur.iter().map(|v| v * scale).collect()
    }

    /// Multiplies every tensor by a diagonal single-site weight.
    fn apply_weights(&mut self, weights: &[[f64; 2]]) {
        for (t, w) in self.tensors.iter_mut().zip(weights) {
            if w[0] == 1.0 && w[1] == 1.0 {
                continue;
            }
            for l in 0..t.dl {
                for s in 0..2 {
                    let row = &mut t.data[(l * 2 + s) * t.dr..(l * 2 + s + 1) * t.dr];
                    for v in row {
                        *v *= w[s];
                    }
                }
            }
        }
    }

    /// Applies the diagonal operator `∏_g H_g(σ_g, σ_{g+1})`. Each nontrivial
    /// bond matrix becomes an MPO bond of dimension two that copies the left
    /// spin; all-ones matrices (absent bonds) are skipped.
    fn apply_horizontal(&mut self, horizontal: &[BondMatrix]) {
        let n = self.tensors.len();
        for x in 0..n {
            let left = if x > 0 && horizontal[x - 1] != BondMatrix::ONES {
                Some(horizontal[x - 1])
            } else {
                None
            };
            let right = x + 1 < n && horizontal[x] != BondMatrix::ONES;
            if left.is_none() && !right {
                continue;
            }
            let t = &self.tensors[x];
            let kl = if left.is_some() { 2 } else { 1 };
            let kr = if right { 2 } else { 1 };
            let (dl, dr) = (t.dl * kl, t.dr * kr);
            let mut data = vec![0.0; dl * 2 * dr];
            for l in 0..t.dl {
                for i in 0..kl {
                    for s in 0..2 {
                        // Left MPO leg i carries the spin of column x - 1.
                        let f = match left {
                            Some(h) => h.entry(i, s),
                            None => 1.0,
                        };
                        if f == 0.0 {
                            continue;
                        }
                        for r in 0..t.dr {
                            let v = f * t.get(l, s, r);
                            if right {
                                data[((l * kl + i) * 2 + s) * dr + r * 2 + s] = v;
                            } else {
                                data[((l * kl + i) * 2 + s) * dr + r] = v;
                            }
                        }
                    }
                }
            }
            self.tensors[x] = MpsTensor { dl, dr, data };
        }
    }

    /// Applies single-site matrices `new(σ') = Σ_σ V(σ', σ) old(σ)`.
    fn apply_vertical(&mut self, vertical: &[BondMatrix]) {
        for (t, v) in self.tensors.iter_mut().zip(vertical) {
            if *v == BondMatrix::IDENTITY {
                continue;
            }
            for l in 0..t.dl {
                let base = l * 2 * t.dr;
                for r in 0..t.dr {
                    let (a, b) = (t.data[base + r], t.data[base + t.dr + r]);
                    t.data[base + r] = v.aligned * a + v.anti * b;
                    t.data[base + t.dr + r] = v.anti * a + v.aligned * b;
                }
            }
        }
    }

    /// Left-to-right QR, then right-to-left SVD truncation, then
    /// normalization of the first tensor into `log_norm`.
    pub fn compress(&mut self, config: &ContractionConfig) -> Result<()> {
        let n = self.tensors.len();
        for x in 0..n.saturating_sub(1) {
            let t = &self.tensors[x];
            let (rows, cols) = (2 * t.dl, t.dr);
            let m = DMatrix::from_row_slice(rows, cols, &t.data);
            let qr = m.qr();
            let (q, r) = (qr.q(), qr.r());
            let k = q.ncols();
            let mut data = vec![0.0; rows * k];
            for i in 0..rows {
                for j in 0..k {
                    data[i * k + j] = q[(i, j)];
                }
            }
            self.tensors[x] = MpsTensor {
                dl: t.dl,
                dr: k,
                data,
            };
            let next = &self.tensors[x + 1];
            let mut r_rm = vec![0.0; k * cols];
            for i in 0..k {
                for j in 0..cols {
                    r_rm[i * cols + j] = r[(i, j)];
                }
            }
            let mut nd = vec![0.0; k * 2 * next.dr];
            gemm(
                1.0,
                View::dense(&r_rm, k, cols),
                View::dense(&next.data, next.dl, 2 * next.dr),
                0.0,
                &mut nd,
            );
            self.tensors[x + 1] = MpsTensor {
                dl: k,
                dr: next.dr,
                data: nd,
            };
        }
        for x in (1..n).rev() {
            let t = &self.tensors[x];
            let (rows, cols) = (t.dl, 2 * t.dr);
            let (u, sv, vt) = svd(&t.data, rows, cols);
            let mut order: Vec<usize> = (0..sv.len()).collect();
            order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
            let total: f64 = sv.iter().map(|s| s * s).sum();
            if total == 0.0 || !total.is_finite() {
                return Err(ContractionError::ZeroWeight { row: usize::MAX });
            }
            let mut keep = order.len();
            let mut discarded = 0.0;
            while keep > 1 {
                let s = sv[order[keep - 1]];
                let w = s * s / total;
                if keep > config.chi_max || discarded + w <= config.cutoff {
                    discarded += w;
                    keep -= 1;
                } else {
                    break;
                }
            }
            self.max_discarded = self.max_discarded.max(discarded);
            let mut data = vec![0.0; keep * cols];
            for (i, &o) in order[..keep].iter().enumerate() {
                for j in 0..cols {
                    data[i * cols + j] = vt[o * cols + j];
                }
            }
            self.tensors[x] = MpsTensor {
                dl: keep,
                dr: t.dr,
                data,
            };
            let mut us = vec![0.0; rows * keep];
            for i in 0..rows {
                for (j, &o) in order[..keep].iter().enumerate() {
                    us[i * keep + j] = u[i * sv.len() + o] * sv[o];
                }
            }
            let prev = &self.tensors[x - 1];
            let mut pd = vec![0.0; 2 * prev.dl * keep];
            gemm(
                1.0,
                View::dense(&prev.data, 2 * prev.dl, prev.dr),
                View::dense(&us, rows, keep),
                0.0,
                &mut pd,
            );
            self.tensors[x - 1] = MpsTensor {
                dl: prev.dl,
                dr: keep,
                data: pd,
            };
        }
        let first = &mut self.tensors[0];
        let norm = first.data.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(ContractionError::ZeroWeight { row: usize::MAX });
        }
        for v in &mut first.data {
            *v /= norm;
        }
        self.log_norm += norm.ln();
        Ok(())
    }
}

/// Diagonal row operator: site weights and horizontal bond matrices
/// (`BondMatrix::ONES` where a bond is absent).
#[derive(Clone, Debug, PartialEq)]
pub struct RowTransfer {
    pub weights: Vec<[f64; 2]>,
    pub horizontal: Vec<BondMatrix>,
}

impl RowTransfer {
    /// The identity operator on a row of `width` spins.
    pub fn identity(width: usize) -> Self {
        RowTransfer {
            weights: vec![[1.0, 1.0]; width],
            horizontal: vec![BondMatrix::ONES; width.saturating_sub(1)],
        }
    }
}

/// `compress(R state)`.
pub fn apply_transfer(
    state: &BoundaryState,
    transfer: &RowTransfer,
    config: &ContractionConfig,
) -> Result<BoundaryState> {
    let mut next = state.clone();
    next.apply_weights(&transfer.weights);
    next.apply_horizontal(&transfer.horizontal);
    next.compress(config)?;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

/// Local environment `W(σ_a, σ_b)` of one bond: the network with that bond
/// matrix removed, times `exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondEnvironment {
    /// Indexed by the spin indices (`0` = up) of the two endpoints, in row
    /// order (left/lower endpoint first).
    pub w: [[f64; 2]; 2],
    pub log_scale: f64,
}

impl BondEnvironment {
    /// `⟨W, B⟩ = Σ W(σ, σ') B(σ, σ')`.
    pub fn contract(&self, b: &BondMatrix) -> f64 {
        (self.w[0][0] + self.w[1][1]) * b.aligned + (self.w[0][1] + self.w[1][0]) * b.anti
    }

    /// Probability ratio for flipping the outcome `s` of this bond.
    pub fn flip_ratio(&self, params: &CircuitParams, s: i8) -> Result<f64> {
        let den = self.contract(&params.bond(s));
        if !(den > 0.0) {
            return Err(ContractionError::ZeroWeight { row: usize::MAX });
        }
        Ok(self.contract(&params.bond(-s)) / den)
    }

    /// Whether this environment is usable for a bond currently carrying
    /// `current`: a positive weight and no clearly negative entries.
    pub fn is_valid(&self, current: &BondMatrix) -> bool {
        let top = self.w.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        self.contract(current) > 0.0 && self.w.iter().flatten().all(|&v| v >= -1e-6 * top)
    }

    pub fn rank(&self, tol: f64) -> usize {
        let det = self.w[0][0] * self.w[1][1] - self.w[0][1] * self.w[1][0];
        let scale = self.w.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            0
        } else if det.abs() <= tol * scale * scale {
            1
        } else {
            2
        }
    }
}

/// Strip environment `E(a, c, σ)`: two `na x nc` matrices.
#[derive(Clone, Debug)]
struct StripEnv {
    na: usize,
    nc: usize,
    data: Vec<f64>,
    log: f64,
}

impl StripEnv {
    fn slice(&self, s: usize) -> &[f64] {
        &self.data[s * self.na * self.nc..(s + 1) * self.na * self.nc]
    }

    fn normalized(mut self, row: usize) -> Result<Self> {
        let m = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 || !m.is_finite() {
            return Err(ContractionError::ZeroWeight { row });
        }
        for v in &mut self.data {
            *v /= m;
        }
        self.log += m.ln();
        Ok(self)
    }
}

/// Ladder environment `G(a, c)`.
#[derive(Clone, Debug)]
struct LadderEnv {
    na: usize,
    nc: usize,
    data: Vec<f64>,
    log: f64,
}

impl LadderEnv {
    fn unit() -> Self {
        LadderEnv {
            na: 1,
            nc: 1,
            data: vec![1.0],
            log: 0.0,
        }
    }

    fn normalized(mut self, row: usize) -> Result<Self> {
        let m = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 || !m.is_finite() {
            return Err(ContractionError::ZeroWeight { row });
        }
        for v in &mut self.data {
            *v /= m;
        }
        self.log += m.ln();
        Ok(self)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_σ H(σ, σ') E(σ)` for both `σ'`, as a fresh strip environment. `H` is
/// symmetric, so the same helper serves both sweep directions.
fn mix(env: &StripEnv, h: &BondMatrix) -> StripEnv {
    let n = env.na * env.nc;
    let mut data = vec![0.0; 2 * n];
    let (e0, e1) = (env.slice(0), env.slice(1));
    for i in 0..n {
        data[i] = h.aligned * e0[i] + h.anti * e1[i];
        data[n + i] = h.anti * e0[i] + h.aligned * e1[i];
    }
    StripEnv {
        na: env.na,
        nc: env.nc,
        data,
        log: env.log,
    }
}

/// Row strip between a bottom and a top state with the diagonal row operator
/// in between.
struct Strip<'a> {
    bot: &'a BoundaryState,
    top: &'a BoundaryState,
    weights: &'a [[f64; 2]],
    row: usize,
}

impl Strip<'_> {
    /// `E_x` from `E_{x-1}`; `h` couples columns `x - 1` and `x`.
    fn left_step(&self, prev: Option<(&StripEnv, &BondMatrix)>, x: usize) -> Result<StripEnv> {
        let (b, t, w) = (&self.bot.tensors[x], &self.top.tensors[x], self.weights[x]);
        let (na, nc) = (b.dr, t.dr);
        let mut data = vec![0.0; 2 * na * nc];
        let mut log = 0.0;
        match prev {
            None => {
                for s in 0..2 {
                    if w[s] == 0.0 {
                        continue;
                    }
                    for a in 0..na {
                        let ba = w[s] * b.get(0, s, a);
                        for c in 0..nc {
                            data[s * na * nc + a * nc + c] = ba * t.get(0, s, c);
                        }
                    }
                }
            }
            Some((e, h)) => {
                let mixed = mix(e, h);
                log = e.log;
                let mut tmp = vec![0.0; na * e.nc];
                for s in 0..2 {
                    if w[s] == 0.0 {
                        continue;
                    }
                    gemm(
                        1.0,
                        b.slice(s).t(),
                        View::dense(mixed.slice(s), e.na, e.nc),
                        0.0,
                        &mut tmp,
                    );
                    gemm(
                        w[s],
                        View::dense(&tmp, na, e.nc),
                        t.slice(s),
                        0.0,
                        &mut data[s * na * nc..(s + 1) * na * nc],
                    );
                }
            }
        }
        StripEnv { na, nc, data, log }.normalized(self.row)
    }

    /// `F_x` from `F_{x+1}`; `h` couples columns `x` and `x + 1`.
    fn right_step(&self, next: Option<(&StripEnv, &BondMatrix)>, x: usize) -> Result<StripEnv> {
        let (b, t, w) = (&self.bot.tensors[x], &self.top.tensors[x], self.weights[x]);
        let (na, nc) = (b.dl, t.dl);
        let mut data = vec![0.0; 2 * na * nc];
        let mut log = 0.0;
        match next {
            None => {
                for s in 0..2 {
                    if w[s] == 0.0 {
                        continue;
                    }
                    for a in 0..na {
                        let ba = w[s] * b.get(a, s, 0);
                        for c in 0..nc {
                            data[s * na * nc + a * nc + c] = ba * t.get(c, s, 0);
                        }
                    }
                }
            }
            Some((f, h)) => {
                let mixed = mix(f, h);
                log = f.log;
                let mut tmp = vec![0.0; na * f.nc];
                for s in 0..2 {
                    if w[s] == 0.0 {
                        continue;
                    }
                    gemm(
                        1.0,
                        b.slice(s),
                        View::dense(mixed.slice(s), f.na, f.nc),
                        0.0,
                        &mut tmp,
                    );
                    gemm(
                        w[s],
                        View::dense(&tmp, na, f.nc),
                        t.slice(s).t(),
                        0.0,
                        &mut data[s * na * nc..(s + 1) * na * nc],
                    );
                }
            }
        }
        StripEnv { na, nc, data, log }.normalized(self.row)
    }
}

/// `W(σ, σ') = Σ E(σ) ∘ F(σ')`.
fn strip_environment(e: &StripEnv, f: &StripEnv, extra_log: f64) -> BondEnvironment {
    let mut w = [[0.0; 2]; 2];
    for (s, row) in w.iter_mut().enumerate() {
        for (sp, v) in row.iter_mut().enumerate() {
            *v = dot(e.slice(s), f.slice(sp));
        }
    }
    BondEnvironment {
        w,
        log_scale: e.log + f.log + extra_log,
    }
}

/// Ladder between `BotR_y` and `TopR_{y+1}` with vertical matrices between.
struct Ladder<'a> {
    bot: &'a BoundaryState,
    top: &'a BoundaryState,
    row: usize,
}

impl Ladder<'_> {
    /// `P_σ = B[:, σ, :]^T G` for both `σ`.
    fn lower(&self, g: &LadderEnv, x: usize) -> [Vec<f64>; 2] {
        let b = &self.bot.tensors[x];
        core::array::from_fn(|s| {
            let mut p = vec![0.0; b.dr * g.nc];
            gemm(
                1.0,
                b.slice(s).t(),
                View::dense(&g.data, g.na, g.nc),
                0.0,
                &mut p,
            );
            p
        })
    }

    /// `M_σ' = K T[:, σ', :]^T` for both `σ'`.
    fn upper(&self, k: &LadderEnv, x: usize) -> [Vec<f64>; 2] {
        let t = &self.top.tensors[x];
        core::array::from_fn(|s| {
            let mut m = vec![0.0; k.na * t.dl];
            gemm(
                1.0,
                View::dense(&k.data, k.na, k.nc),
                t.slice(s).t(),
                0.0,
                &mut m,
            );
            m
        })
    }

    fn left_step(&self, g: &LadderEnv, v: &BondMatrix, x: usize) -> Result<LadderEnv> {
        let (b, t) = (&self.bot.tensors[x], &self.top.tensors[x]);
        let p = self.lower(g, x);
        let n = b.dr * g.nc;
        let mut out = vec![0.0; b.dr * t.dr];
        let mut q = vec![0.0; n];
        for sp in 0..2 {
            let (c0, c1) = (v.entry(0, sp), v.entry(1, sp));
            for i in 0..n {
                q[i] = c0 * p[0][i] + c1 * p[1][i];
            }
            gemm(1.0, View::dense(&q, b.dr, g.nc), t.slice(sp), 1.0, &mut out);
        }
        LadderEnv {
            na: b.dr,
            nc: t.dr,
            data: out,
            log: g.log,
        }
        .normalized(self.row)
    }

    fn right_step(&self, k: &LadderEnv, v: &BondMatrix, x: usize) -> Result<LadderEnv> {
        let (b, t) = (&self.bot.tensors[x], &self.top.tensors[x]);
        let m = self.upper(k, x);
        let n = k.na * t.dl;
        let mut out = vec![0.0; b.dl * t.dl];
        let mut q = vec![0.0; n];
        for s in 0..2 {
            let (c0, c1) = (v.entry(s, 0), v.entry(s, 1));
            for i in 0..n {
                q[i] = c0 * m[0][i] + c1 * m[1][i];
            }
            gemm(1.0, b.slice(s), View::dense(&q, k.na, t.dl), 1.0, &mut out);
        }
        LadderEnv {
            na: b.dl,
            nc: t.dl,
            data: out,
            log: k.log,
        }
        .normalized(self.row)
    }

    fn environment(
        &self,
        g: &LadderEnv,
        k: &LadderEnv,
        x: usize,
        extra_log: f64,
    ) -> BondEnvironment {
        let p = self.lower(g, x);
        let m = self.upper(k, x);
        let mut w = [[0.0; 2]; 2];
        for (s, row) in w.iter_mut().enumerate() {
            for (sp, val) in row.iter_mut().enumerate() {
                *val = dot(&p[s], &m[sp]);
            }
        }
        BondEnvironment {
            w,
            log_scale: g.log + k.log + extra_log,
        }
    }
}

/// Receives proposals and measurement points during a sweep.
pub trait SweepVisitor {
    type Error: From<ContractionError>;
    /// Decide whether to flip `bond` given its environment.
    fn propose(
        &mut self,
        bond: usize,
        s: i8,
        env: &BondEnvironment,
    ) -> core::result::Result<bool, Self::Error>;
    /// Called once per sweep with `⟨σ_c⟩` of the pinned ensemble, just before
    /// the central row's horizontal proposals.
    fn measure(&mut self, s: &[i8], magnetization: f64) -> core::result::Result<(), Self::Error>;
}

/// Cached stacks for sweeps.
#[derive(Clone, Debug, Default)]
pub struct SweepCache {
    bot: Vec<Option<BoundaryState>>,
    bot_r: Vec<Option<BoundaryState>>,
    top: Vec<Option<BoundaryState>>,
    top_r: Vec<Option<BoundaryState>>,
    next: Option<Direction>,
    pub max_discarded: f64,
    pub max_bond_dim: usize,
}

impl SweepCache {
    /// Drops the cached stacks, keeping the diagnostics; the next sweep
    /// rebuilds from the current configuration.
    pub fn invalidate(&mut self) {
        *self = SweepCache {
            max_discarded: self.max_discarded,
            max_bond_dim: self.max_bond_dim,
            ..SweepCache::default()
        };
    }
}

/// Contraction engine for one lattice and one pair of angles.
#[derive(Clone, Debug)]
pub struct Network {
    layout: RowLayout,
    params: CircuitParams,
    config: ContractionConfig,
    n_bonds: usize,
    n_sites: usize,
    slots: Vec<BondSlot>,
    weights: Vec<Vec<[f64; 2]>>,
    center: (usize, usize),
}

impl Network {
    pub fn new(
        graph: &LatticeGraph,
        params: CircuitParams,
        config: ContractionConfig,
    ) -> Result<Self> {
        let layout = graph
            .rows
            .clone()
            .ok_or(ContractionError::Unsupported(graph.kind))?;
        let site_slots = layout.site_slots(graph.n_sites());
        let weights = layout
            .rows
            .iter()
            .map(|row| {
                row.sites
                    .iter()
                    .map(|s| match s {
                        Some(s) if *s == graph.pinned_corner => [1.0, 0.0],
                        Some(_) => [1.0, 1.0],
                        None => [1.0, 0.0],
                    })
                    .collect()
            })
            .collect();
        Ok(Network {
            slots: layout.bond_slots(graph.n_bonds()),
            layout,
            params,
            config,
            n_bonds: graph.n_bonds(),
            n_sites: graph.n_sites(),
            weights,
            center: site_slots[graph.central_site],
        })
    }

    pub fn params(&self) -> &CircuitParams {
        &self.params
    }

    pub fn config(&self) -> &ContractionConfig {
        &self.config
    }

    pub fn height(&self) -> usize {
        self.layout.height()
    }

    pub(crate) fn layout(&self) -> &RowLayout {
        &self.layout
    }

    /// Site weights of row `y`, including the pinned-corner and empty-slot
    /// projectors.
    pub(crate) fn site_weights(&self, y: usize) -> &[[f64; 2]] {
        &self.weights[y]
    }

    /// `(row, column)` of the central site.
    pub(crate) fn center(&self) -> (usize, usize) {
        self.center
    }

    pub(crate) fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub(crate) fn slot(&self, bond: usize) -> Option<BondSlot> {
        self.slots.get(bond).copied()
    }

    pub fn width(&self) -> usize {
        self.layout.width
    }

    pub(crate) fn check(&self, s: &[i8]) -> Result<()> {
        if s.len() != self.n_bonds {
            return Err(ContractionError::BadLength {
                expected: self.n_bonds,
                got: s.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn bond_matrix(&self, bond: Option<usize>, s: &[i8]) -> BondMatrix {
        match bond {
            Some(b) => self.params.bond(s[b]),
            None => BondMatrix::ONES,
        }
    }

    fn horizontals(&self, y: usize, s: &[i8]) -> Vec<BondMatrix> {
        self.layout.rows[y]
            .horizontal
            .iter()
            .map(|&b| self.bond_matrix(b, s))
            .collect()
    }

    fn verticals(&self, y: usize, s: &[i8]) -> Vec<BondMatrix> {
        self.layout.rows[y]
            .vertical
            .iter()
            .map(|&b| self.bond_matrix(b, s))
            .collect()
    }

    pub fn row_transfer(&self, y: usize, s: &[i8]) -> RowTransfer {
        RowTransfer {
            weights: self.weights[y].clone(),
            horizontal: self.horizontals(y, s),
        }
    }

    fn compress_row(&self, state: &BoundaryState, y: usize, s: &[i8]) -> Result<BoundaryState> {
        apply_transfer(state, &self.row_transfer(y, s), &self.config)
            .map_err(|_| ContractionError::ZeroWeight { row: y })
    }

    fn vertical_step(&self, state: &BoundaryState, y: usize, s: &[i8]) -> BoundaryState {
        let mut next = state.clone();
        next.apply_vertical(&self.verticals(y, s));
        next
    }

    /// One row of the stack recursion: `V_y compress(R_y state)` going up,
    /// `V_{y-1} compress(R_y state)` going down (no vertical step past the
    /// edge).
    pub fn apply_row(
        &self,
        state: &BoundaryState,
        s: &[i8],
        y: usize,
        direction: Direction,
    ) -> Result<BoundaryState> {
        self.check(s)?;
        let r = self.compress_row(state, y, s)?;
        Ok(match direction {
            Direction::Up if y + 1 < self.height() => self.vertical_step(&r, y, s),
            Direction::Down if y > 0 => self.vertical_step(&r, y - 1, s),
            _ => r,
        })
    }

    /// `Bot_y` for `y = 0..=up_to` together with `BotR_y` for `y < up_to`.
    fn bottom_stack(
        &self,
        s: &[i8],
        up_to: usize,
    ) -> Result<(Vec<BoundaryState>, Vec<BoundaryState>)> {
        let mut bot = vec![BoundaryState::ones(self.width())];
        let mut bot_r = Vec::new();
        for y in 0..up_to {
            let r = self.compress_row(&bot[y], y, s)?;
            bot.push(self.vertical_step(&r, y, s));
            bot_r.push(r);
        }
        Ok((bot, bot_r))
    }

    /// `Top_y` for `y = down_to..H` (index `y - down_to`) and `TopR_y` for
    /// `y > down_to`.
    fn top_stack(
        &self,
        s: &[i8],
        down_to: usize,
    ) -> Result<(Vec<BoundaryState>, Vec<BoundaryState>)> {
        let h = self.height();
        let mut top = vec![BoundaryState::ones(self.width())];
        let mut top_r = Vec::new();
        for y in (down_to + 1..h).rev() {
            let r = self.compress_row(top.last().unwrap(), y, s)?;
            top.push(self.vertical_step(&r, y - 1, s));
            top_r.push(r);
        }
        top.reverse();
        top_r.reverse();
        Ok((top, top_r))
    }

    fn strip<'a>(&'a self, bot: &'a BoundaryState, top: &'a BoundaryState, y: usize) -> Strip<'a> {
        Strip {
            bot,
            top,
            weights: &self.weights[y],
            row: y,
        }
    }

    fn left_envs(&self, strip: &Strip, h: &[BondMatrix], upto: usize) -> Result<Vec<StripEnv>> {
        let mut envs: Vec<StripEnv> = Vec::with_capacity(upto + 1);
        for x in 0..=upto {
            let e = strip.left_step(envs.last().map(|e| (e, &h[x - 1])), x)?;
            envs.push(e);
        }
        Ok(envs)
    }

    /// `F_x` for `x = from..W` (index `x - from`).
    fn right_envs(&self, strip: &Strip, h: &[BondMatrix], from: usize) -> Result<Vec<StripEnv>> {
        let w = self.width();
        let mut envs: Vec<StripEnv> = Vec::with_capacity(w - from);
        for x in (from..w).rev() {
            let f = strip.right_step(envs.last().map(|f| (f, &h[x])), x)?;
            envs.push(f);
        }
        envs.reverse();
        Ok(envs)
    }

    fn ladder_left(
        &self,
        ladder: &Ladder,
        v: &[BondMatrix],
        upto: usize,
    ) -> Result<Vec<LadderEnv>> {
        let mut envs = vec![LadderEnv::unit()];
        for x in 0..upto {
            let g = ladder.left_step(envs.last().unwrap(), &v[x], x)?;
            envs.push(g);
        }
        Ok(envs)
    }

    /// `K_x` for `x = from..=W` (index `x - from`).
    fn ladder_right(
        &self,
        ladder: &Ladder,
        v: &[BondMatrix],
        from: usize,
    ) -> Result<Vec<LadderEnv>> {
        let w = self.width();
        let mut envs = vec![LadderEnv::unit()];
        for x in (from..w).rev() {
            let k = ladder.right_step(envs.last().unwrap(), &v[x], x)?;
            envs.push(k);
        }
        envs.reverse();
        Ok(envs)
    }

    /// `log p_{s}`: the Born log-probability of the outcome configuration.
    pub fn log_weight(&self, s: &[i8]) -> Result<f64> {
        self.check(s)?;
        let h = self.height();
        let (bot, _) = self.bottom_stack(s, h - 1)?;
        let top = BoundaryState::ones(self.width());
        let strip = self.strip(&bot[h - 1], &top, h - 1);
        let hs = self.horizontals(h - 1, s);
        let envs = self.left_envs(&strip, &hs, self.width() - 1)?;
        let last = envs.last().unwrap();
        let z = last.data[0] + last.data[1];
        if !(z > 0.0) {
            return Err(ContractionError::ZeroWeight { row: h - 1 });
        }
        // The pin halves Z; each free site contributes 1/2 to the Born weight.
        Ok(z.ln() + last.log + bot[h - 1].log_norm + LN_2 - self.n_sites as f64 * LN_2)
    }

    /// Environment of one bond, contracted from scratch.
    pub fn bond_environment(&self, s: &[i8], bond: usize) -> Result<BondEnvironment> {
        self.check(s)?;
        if bond >= self.n_bonds {
            return Err(ContractionError::BadBond(bond));
        }
        match self.slots[bond] {
            BondSlot::Horizontal { row: y, gap } => {
                let (bot, _) = self.bottom_stack(s, y)?;
                let (top, _) = self.top_stack(s, y)?;
                let strip = self.strip(&bot[y], &top[0], y);
                let hs = self.horizontals(y, s);
                let e = self.left_envs(&strip, &hs, gap)?;
                let f = self.right_envs(&strip, &hs, gap + 1)?;
                Ok(strip_environment(
                    &e[gap],
                    &f[0],
                    bot[y].log_norm + top[0].log_norm,
                ))
            }
            BondSlot::Vertical { row: y, col } => {
                let (_, bot_r) = self.bottom_stack(s, y + 1)?;
                let (_, top_r) = self.top_stack(s, y)?;
                let ladder = Ladder {
                    bot: &bot_r[y],
                    top: &top_r[0],
                    row: y,
                };
                let vs = self.verticals(y, s);
                let g = self.ladder_left(&ladder, &vs, col)?;
                let k = self.ladder_right(&ladder, &vs, col + 1)?;
                Ok(ladder.environment(&g[col], &k[0], col, bot_r[y].log_norm + top_r[0].log_norm))
            }
        }
    }

    /// `⟨σ_c⟩` at the central site with the corner pinned up, from scratch.
    pub fn pinned_central_magnetization(&self, s: &[i8]) -> Result<f64> {
        self.check(s)?;
        let (yc, _) = self.center;
        let (bot, _) = self.bottom_stack(s, yc)?;
        let (top, _) = self.top_stack(s, yc)?;
        self.strip_magnetization(&bot[yc], &top[0], s)
    }

    /// Unnormalized marginal of the spin at column `xc` from `E_xc` and
    /// `F_{xc+1}` (absent at the right edge).
    fn site_marginal(e: &StripEnv, f: Option<&StripEnv>, h: &[BondMatrix], xc: usize) -> [f64; 2] {
        match f {
            Some(f) => {
                let r = mix(f, &h[xc]);
                [dot(e.slice(0), r.slice(0)), dot(e.slice(1), r.slice(1))]
            }
            None => [e.data[0], e.data[1]],
        }
    }

    fn strip_magnetization(
        &self,
        bot: &BoundaryState,
        top: &BoundaryState,
        s: &[i8],
    ) -> Result<f64> {
        let (yc, xc) = self.center;
        let strip = self.strip(bot, top, yc);
        let hs = self.horizontals(yc, s);
        let e = self.left_envs(&strip, &hs, xc)?;
        let f = if xc + 1 < self.width() {
            Some(self.right_envs(&strip, &hs, xc + 1)?)
        } else {
            None
        };
        let d = Self::site_marginal(&e[xc], f.as_ref().map(|f| &f[0]), &hs, xc);
        let z = d[0] + d[1];
        if !(z > 0.0) {
            return Err(ContractionError::ZeroWeight { row: yc });
        }
        Ok(((d[0] - d[1]) / z).clamp(-1.0, 1.0))
    }

    pub fn new_cache(&self) -> SweepCache {
        SweepCache::default()
    }

    /// The same network contracted without a discarded-weight cutoff.
    ///
    /// Hard constraints can leave a boundary state with a sector far below
    /// the cutoff that the opposite state amplifies; dropping it corrupts the
    /// environments of a whole row. Samplers fall back to this network when
    /// that happens.
    pub fn untruncated(&self) -> Network {
        let mut exact = self.clone();
        exact.config.cutoff = 0.0;
        exact
    }

    /// One Metropolis-style pass over every bond with cached environments.
    /// Directions alternate between calls: upward raster order first, then
    /// the reverse, so each sweep reuses the stack built by the previous one.
    pub fn sweep<V: SweepVisitor>(
        &self,
        cache: &mut SweepCache,
        s: &mut [i8],
        visitor: &mut V,
    ) -> core::result::Result<Direction, V::Error> {
        self.check(s)?;
        let h = self.height();
        let direction = cache.next.unwrap_or(Direction::Up);
        let ready = match direction {
            Direction::Up => cache.top.len() == h,
            Direction::Down => cache.bot.len() == h,
        };
        if !ready {
            self.rebuild(cache, s, direction)?;
        }
        match direction {
            Direction::Up => self.sweep_up(cache, s, visitor)?,
            Direction::Down => self.sweep_down(cache, s, visitor)?,
        }
        cache.next = Some(match direction {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        });
        Ok(direction)
    }

    /// Builds the far-side stack from scratch for a sweep in `direction`.
    fn rebuild(&self, cache: &mut SweepCache, s: &[i8], direction: Direction) -> Result<()> {
        let h = self.height();
        match direction {
            Direction::Up => {
                let (top, top_r) = self.top_stack(s, 0)?;
                cache.top = top.into_iter().map(Some).collect();
                cache.top_r = core::iter::once(None)
                    .chain(top_r.into_iter().map(Some))
                    .collect();
            }
            Direction::Down => {
                let (bot, bot_r) = self.bottom_stack(s, h - 1)?;
                cache.bot = bot.into_iter().map(Some).collect();
                cache.bot_r = bot_r
                    .into_iter()
                    .map(Some)
                    .chain(core::iter::once(None))
                    .collect();
            }
        }
        Ok(())
    }

    fn note(&self, cache: &mut SweepCache, state: &BoundaryState) {
        cache.max_discarded = cache.max_discarded.max(state.max_discarded);
        cache.max_bond_dim = cache.max_bond_dim.max(state.max_bond_dim());
    }

    fn propose<V: SweepVisitor>(
        &self,
        visitor: &mut V,
        s: &mut [i8],
        bond: usize,
        env: &BondEnvironment,
    ) -> core::result::Result<(), V::Error> {
        if !env.is_valid(&self.params.bond(s[bond])) {
            return Err(ContractionError::InvalidEnvironment { bond }.into());
        }
        if visitor.propose(bond, s[bond], env)? {
            s[bond] = -s[bond];
        }
        Ok(())
    }

    fn sweep_up<V: SweepVisitor>(
        &self,
        cache: &mut SweepCache,
        s: &mut [i8],
        visitor: &mut V,
    ) -> core::result::Result<(), V::Error> {
        let (h, w) = (self.height(), self.width());
        cache.bot = vec![None; h];
        cache.bot_r = vec![None; h];
        cache.bot[0] = Some(BoundaryState::ones(w));
        for y in 0..h {
            let bot = cache.bot[y].take().unwrap();
            let top = cache.top[y].take().unwrap();
            {
                let strip = self.strip(&bot, &top, y);
                let mut hs = self.horizontals(y, s);
                if y == self.center.0 {
                    let m = self.strip_magnetization(&bot, &top, s)?;
                    visitor.measure(s, m)?;
                }
                let f = self.right_envs(&strip, &hs, 1.min(w - 1))?;
                let mut e: Option<StripEnv> = None;
                for gap in 0..w - 1 {
                    let cur = strip.left_step(e.as_ref().map(|e| (e, &hs[gap - 1])), gap)?;
                    if let Some(b) = self.layout.rows[y].horizontal[gap] {
                        let env = strip_environment(&cur, &f[gap], bot.log_norm + top.log_norm);
                        self.propose(visitor, s, b, &env)?;
                        hs[gap] = self.params.bond(s[b]);
                    }
                    e = Some(cur);
                }
            }
            if y + 1 < h {
                let bot_r = self.compress_row(&bot, y, s)?;
                self.note(cache, &bot_r);
                let top_r = cache.top_r[y + 1].take().unwrap();
                let ladder = Ladder {
                    bot: &bot_r,
                    top: &top_r,
                    row: y,
                };
                let mut vs = self.verticals(y, s);
                let k = self.ladder_right(&ladder, &vs, 1)?;
                let mut g = LadderEnv::unit();
                for x in 0..w {
                    if let Some(b) = self.layout.rows[y].vertical[x] {
                        let env = ladder.environment(&g, &k[x], x, bot_r.log_norm + top_r.log_norm);
                        self.propose(visitor, s, b, &env)?;
                        vs[x] = self.params.bond(s[b]);
                    }
                    if x + 1 < w {
                        g = ladder.left_step(&g, &vs[x], x)?;
                    }
                }
                cache.bot[y + 1] = Some(self.vertical_step(&bot_r, y, s));
                cache.top_r[y + 1] = Some(top_r);
                cache.bot_r[y] = Some(bot_r);
            }
            cache.top[y] = Some(top);
            cache.bot[y] = Some(bot);
        }
        Ok(())
    }

    fn sweep_down<V: SweepVisitor>(
        &self,
        cache: &mut SweepCache,
        s: &mut [i8],
        visitor: &mut V,
    ) -> core::result::Result<(), V::Error> {
        let (h, w) = (self.height(), self.width());
        cache.top = vec![None; h];
        cache.top_r = vec![None; h];
        let mut top = BoundaryState::ones(w);
        for y in (0..h).rev() {
            if y + 1 < h {
                // Vertical bonds between rows y and y + 1, right to left.
                let bot_r = cache.bot_r[y].take().unwrap();
                let top_r = cache.top_r[y + 1].take().unwrap();
                {
                    let ladder = Ladder {
                        bot: &bot_r,
                        top: &top_r,
                        row: y,
                    };
                    let mut vs = self.verticals(y, s);
                    let g = self.ladder_left(&ladder, &vs, w - 1)?;
                    let mut k = LadderEnv::unit();
                    for x in (0..w).rev() {
                        if let Some(b) = self.layout.rows[y].vertical[x] {
                            let env =
                                ladder.environment(&g[x], &k, x, bot_r.log_norm + top_r.log_norm);
                            self.propose(visitor, s, b, &env)?;
                            vs[x] = self.params.bond(s[b]);
                        }
                        if x > 0 {
                            k = ladder.right_step(&k, &vs[x], x)?;
                        }
                    }
                }
                top = self.vertical_step(&top_r, y, s);
                cache.top_r[y + 1] = Some(top_r);
                cache.bot_r[y] = Some(bot_r);
            }
            let bot = cache.bot[y].take().unwrap();
            {
                let strip = self.strip(&bot, &top, y);
                let mut hs = self.horizontals(y, s);
                if y == self.center.0 {
                    let m = self.strip_magnetization(&bot, &top, s)?;
                    visitor.measure(s, m)?;
                }
                let e = self.left_envs(&strip, &hs, w.saturating_sub(2))?;
                let mut f: Option<StripEnv> = None;
                for gap in (0..w - 1).rev() {
                    let cur = strip.right_step(f.as_ref().map(|f| (f, &hs[gap + 1])), gap + 1)?;
                    if let Some(b) = self.layout.rows[y].horizontal[gap] {
                        let env = strip_environment(&e[gap], &cur, bot.log_norm + top.log_norm);
                        self.propose(visitor, s, b, &env)?;
                        hs[gap] = self.params.bond(s[b]);
                    }
                    f = Some(cur);
                }
            }
            if y > 0 {
                let top_r = self.compress_row(&top, y, s)?;
                self.note(cache, &top_r);
                cache.top_r[y] = Some(top_r);
            }
            cache.bot[y] = Some(bot);
            cache.top[y] = Some(core::mem::replace(&mut top, BoundaryState::ones(w)));
        }
        Ok(())
    }
}

/// `log p_{s}` for a planar lattice.
pub fn log_weight(graph: &LatticeGraph, params: &CircuitParams, s: &[i8]) -> Result<f64> {
    Network::new(graph, *params, ContractionConfig::default())?.log_weight(s)
}

pub fn bond_environment(
    graph: &LatticeGraph,
    params: &CircuitParams,
    s: &[i8],
    bond: usize,
) -> Result<BondEnvironment> {
    Network::new(graph, *params, ContractionConfig::default())?.bond_environment(s, bond)
}

pub fn pinned_central_magnetization(
    graph: &LatticeGraph,
    params: &CircuitParams,
    s: &[i8],
) -> Result<f64> {
    Network::new(graph, *params, ContractionConfig::default())?.pinned_central_magnetization(s)
}

/// Thin SVD `M = U diag(s) Vᵀ` of a row-major `rows × cols` matrix by one-sided
/// Jacobi rotations. Returns `U` (`rows × k`), `s` and `Vᵀ` (`k × cols`), all
/// row-major, with `k = min(rows, cols)`; singular values are unsorted.
///
/// Jacobi keeps full accuracy on the rank-deficient blocks that the hard
/// alignment constraints produce, where bidiagonal QR iteration can return
/// factors that do not reproduce the input.
fn svd(m: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // Orthogonalise the columns of A (n_a vectors of length len), with A = M
    // for tall input and A = Mᵀ for wide input.
    let wide = rows < cols;
    let (len, n_a) = if wide { (cols, rows) } else { (rows, cols) };
    // Work at unit scale; columns below `tiny` are numerically zero and are
    // left unrotated, which also keeps their squared norms from underflowing.
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let inv = if scale > 0.0 { 1.0 / scale } else { 1.0 };
    let tiny = 1e-200;
    let mut a = vec![0.0; n_a * len];
    for i in 0..rows {
        for j in 0..cols {
            let (c, r) = if wide { (i, j) } else { (j, i) };
            a[c * len + r] = m[i * cols + j] * inv;
        }
    }
    let tol = len as f64 * f64::EPSILON;
    let mut v = vec![0.0; n_a * n_a];
    for j in 0..n_a {
        v[j * n_a + j] = 1.0;
    }
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n_a {
            for q in p + 1..n_a {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..len {
                    let (x, y) = (a[p * len + r], a[q * len + r]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if alpha < tiny || beta < tiny || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                if !t.is_finite() || t == 0.0 {
                    continue;
                }
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotated = true;
                for (buf, stride) in [(&mut a, len), (&mut v, n_a)] {
                    for r in 0..stride {
                        let (x, y) = (buf[p * stride + r], buf[q * stride + r]);
                        buf[p * stride + r] = c * x - s * y;
                        buf[q * stride + r] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let k = n_a;
    let mut sv = vec![0.0; k];
    for j in 0..k {
        let norm = a[j * len..(j + 1) * len]
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        sv[j] = norm * scale;
        if norm > 0.0 {
            a[j * len..(j + 1) * len]
                .iter_mut()
                .for_each(|x| *x /= norm);
        }
    }
    // A = Â diag(s) Vᵀ with unit columns Â (stored as rows of `a`) and V (rows of `v`).
    let (mut u, mut vt) = (vec![0.0; rows * k], vec![0.0; k * cols]);
    let (left, right) = if wide { (&v, &a) } else { (&a, &v) };
    let (left_len, right_len) = if wide { (n_a, len) } else { (len, n_a) };
    for j in 0..k {
        for i in 0..rows {
            u[i * k + j] = left[j * left_len + i];
        }
        vt[j * cols..(j + 1) * cols].copy_from_slice(&right[j * right_len..j * right_len + cols]);
    }
    (u, sv, vt)
}
