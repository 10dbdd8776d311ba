//! Error bars for autocorrelated series, chain pooling and finite-size
//! scaling collapse.

use alloc::vec::Vec;
use core::fmt;

// Float supplies libm-backed methods without std; with std they are inherent.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub enum AnalysisError {
    TooShort { len: usize, min: usize },
    TooFewChains(usize),
    EmptyChain(usize),
    TooFewSizes(usize),
    TooFewPoints { l: f64, n: usize },
    BadWindow { lo: f64, hi: f64 },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::TooShort { len, min } => {
                write!(f, "series of length {len} is shorter than {min}")
            }
            AnalysisError::TooFewChains(n) => {
                write!(f, "need at least 2 chains for an error bar (got {n})")
            }
            AnalysisError::EmptyChain(i) => write!(f, "chain {i} has no retained samples"),
            AnalysisError::TooFewSizes(n) => {
                write!(f, "collapse needs at least 3 system sizes (got {n})")
            }
            AnalysisError::TooFewPoints { l, n } => {
                write!(
                    f,
                    "size L={l} has {n} points in the fit window (need at least 4)"
                )
            }
            AnalysisError::BadWindow { lo, hi } => write!(f, "empty fit window [{lo}, {hi}]"),
        }
    }
}

impl core::error::Error for AnalysisError {}

type Result<T> = core::result::Result<T, AnalysisError>;

pub const MIN_SERIES: usize = 8;
/// Binning levels are trusted while they hold at least this many bins.
pub const MIN_BINS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningResult {
    pub mean: f64,
    pub stderr: f64,
    /// `½ (stderr / naive stderr)²`; `½` for uncorrelated data.
    pub tau_int: f64,
    /// Standard error estimated at bin size `2^k`, for every level with at
    /// least two bins.
    pub levels: Vec<f64>,
    /// Highest level with at least [`MIN_BINS`] bins.
    pub plateau_level: usize,
}

/// Mean shifted by the first element, so constant data is reproduced exactly.
fn mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean of `xs` treated as independent.
fn naive_stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Logarithmic binning analysis. The error is read off the plateau: the
/// mean of the estimates at the highest level that still has
/// [`MIN_BINS`] bins and the two levels below it.
pub fn binning_error(series: &[f64]) -> Result<BinningResult> {
    if series.len() < MIN_SERIES {
        return Err(AnalysisError::TooShort {
            len: series.len(),
            min: MIN_SERIES,
        });
    }
    let m = mean(series);
    let mut levels = Vec::new();
    let mut plateau_level = 0;
    let mut bins: Vec<f64> = series.to_vec();
    loop {
        levels.push(naive_stderr(&bins));
        if bins.len() >= MIN_BINS {
            plateau_level = levels.len() - 1;
        }
        if bins.len() < 4 {
            break;
        }
        bins = bins.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
    let lo = plateau_level.saturating_sub(2);
    let plateau = &levels[lo..=plateau_level];
    let stderr = mean(plateau);
    let tau_int = if levels[0] > 0.0 {
        0.5 * (stderr / levels[0]).powi(2)
    } else {
        0.5
    };
    Ok(BinningResult {
        mean: m,
        stderr,
        tau_int,
        levels,
        plateau_level,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pooled {
    pub mean: f64,
    pub stderr: f64,
}

impl From<Pooled> for (f64, f64) {
    fn from(p: Pooled) -> Self {
        (p.mean, p.stderr)
    }
}

/// Pools independent chains after dropping `discard` leading samples of
/// each. The mean is weighted by chain length; the error is the larger of
/// the within-chain (binning) and between-chain estimates.
pub fn disorder_average<S: AsRef<[f64]>>(chains: &[S], discard: usize) -> Result<Pooled> {
    if chains.len() < 2 {
        return Err(AnalysisError::TooFewChains(chains.len()));
    }
    let mut stats = Vec::with_capacity(chains.len());
    for (i, c) in chains.iter().enumerate() {
        let c = c.as_ref();
        let kept = if discard < c.len() {
            &c[discard..]
        } else {
            &[][..]
        };
        if kept.is_empty() {
            return Err(AnalysisError::EmptyChain(i));
        }
        let err = if kept.len() >= MIN_SERIES {
            binning_error(kept)?.stderr
        } else {
            naive_stderr(kept)
        };
        stats.push((kept.len() as f64, mean(kept), err));
    }
    let total: f64 = stats.iter().map(|s| s.0).sum();
    let m0 = stats[0].1;
    let pooled = m0 + stats.iter().map(|&(n, m, _)| n * (m - m0)).sum::<f64>() / total;
    let within: f64 = stats.iter().map(|&(n, _, e)| (n / total * e).powi(2)).sum();
    let k = stats.len() as f64;
    let between: f64 = k / (k - 1.0)
        * stats
            .iter()
            .map(|&(n, m, _)| (n / total * (m - pooled)).powi(2))
            .sum::<f64>();
    Ok(Pooled {
        mean: pooled,
        stderr: within.max(between).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub t: f64,
    pub q: f64,
    pub err: f64,
}

/// Measurements `q(t)` at one system size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub l: f64,
    pub points: Vec<ScalingPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseParams {
    pub t_c: f64,
    pub nu: f64,
    pub beta_over_nu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub t_c: f64,
    pub nu: f64,
    pub beta_over_nu: f64,
    /// Collapse objective at the optimum (≈ 1 for a consistent collapse).
    pub quality: f64,
    pub window: (f64, f64),
    /// False if the simplex hit the iteration cap; the fit is the best seen.
    pub converged: bool,
    pub iterations: usize,
}

impl ScalingFit {
    pub fn params(&self) -> CollapseParams {
        CollapseParams {
            t_c: self.t_c,
            nu: self.nu,
            beta_over_nu: self.beta_over_nu,
        }
    }
}

/// A rescaled point `x = (t − t_c) L^{1/ν}`, `y = q L^{β/ν}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsedPoint {
    pub l: f64,
    pub x: f64,
    pub y: f64,
    pub dy: f64,
}

fn in_window(t: f64, window: (f64, f64)) -> bool {
    t >= window.0 - 1e-12 && t <= window.1 + 1e-12
}

pub fn rescale(
    datasets: &[Dataset],
    params: &CollapseParams,
    window: (f64, f64),
) -> Vec<Vec<CollapsedPoint>> {
    rescale_raw(
        datasets,
        params.t_c,
        1.0 / params.nu,
        params.beta_over_nu,
        window,
    )
}

fn rescale_raw(
    datasets: &[Dataset],
    t_c: f64,
    inv_nu: f64,
    beta_over_nu: f64,
    window: (f64, f64),
) -> Vec<Vec<CollapsedPoint>> {
    datasets
        .iter()
        .map(|d| {
            let sx = d.l.powf(inv_nu);
            let sy = d.l.powf(beta_over_nu);
            let mut pts: Vec<CollapsedPoint> = d
                .points
                .iter()
                .filter(|p| in_window(p.t, window))
                .map(|p| CollapsedPoint {
                    l: d.l,
                    x: (p.t - t_c) * sx,
                    y: p.q * sy,
                    dy: p.err * sy,
                })
                .collect();
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            pts
        })
        .collect()
}

/// Houdayer–Hartmann collapse quality: each rescaled point is compared with
/// a weighted straight-line fit through the bracketing points of every other
/// size, normalized by the combined variance and averaged.
pub fn collapse_objective(
    datasets: &[Dataset],
    params: &CollapseParams,
    window: (f64, f64),
) -> f64 {
    objective_raw(
        datasets,
        params.t_c,
        1.0 / params.nu,
        params.beta_over_nu,
        window,
    )
}

/// Returned when no point has a bracketing neighbourhood.
const NO_OVERLAP: f64 = 1e12;

fn objective_raw(
    datasets: &[Dataset],
    t_c: f64,
    inv_nu: f64,
    beta_over_nu: f64,
    window: (f64, f64),
) -> f64 {
    let sets = rescale_raw(datasets, t_c, inv_nu, beta_over_nu, window);
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut near: Vec<CollapsedPoint> = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        for p in set {
            near.clear();
            for (j, other) in sets.iter().enumerate() {
                if i == j || other.len() < 2 {
                    continue;
                }
                if let Some(k) = other
                    .windows(2)
                    .position(|w| w[0].x <= p.x && p.x <= w[1].x)
                {
                    near.push(other[k]);
                    near.push(other[k + 1]);
                }
            }
            if near.is_empty() {
                continue;
            }
            let (y, var) = line_estimate(&near, p.x);
            let denom = (p.dy * p.dy + var).max(1e-300);
            sum += (p.y - y) * (p.y - y) / denom;
            count += 1;
        }
    }
    if count == 0 {
        NO_OVERLAP
    } else {
        sum / count as f64
    }
}

/// Weighted least-squares line through `pts`, evaluated at `x`, with the
/// variance of that prediction.
fn line_estimate(pts: &[CollapsedPoint], x: f64) -> (f64, f64) {
    let w = |p: &CollapsedPoint| 1.0 / (p.dy * p.dy).max(1e-300);
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let wi = w(p);
        s += wi;
        sx += wi * p.x;
        sy += wi * p.y;
        sxx += wi * p.x * p.x;
        sxy += wi * p.x * p.y;
    }
    let delta = s * sxx - sx * sx;
    if delta.abs() <= 1e-14 * s * sxx.max(1e-300) {
        // All abscissae coincide: fall back to the weighted mean.
        return (sy / s, 1.0 / s);
    }
    let y = (sxx * sy - sx * sxy + x * (s * sxy - sx * sy)) / delta;
    let var = (sxx - 2.0 * x * sx + x * x * s) / delta;
    (y, var.max(0.0))
}

const MAX_ITERATIONS: usize = 4000;

/// Fits `(t_c, ν, β/ν)` by minimizing [`collapse_objective`] with a
/// Nelder–Mead simplex started from `init` and two jittered copies; the best
/// objective wins, ties going to the earliest start.
pub fn collapse_fit(
    datasets: &[Dataset],
    window: (f64, f64),
    init: CollapseParams,
) -> Result<ScalingFit> {
    if !(window.0 < window.1) {
        return Err(AnalysisError::BadWindow {
            lo: window.0,
            hi: window.1,
        });
    }
    if datasets.len() < 3 {
        return Err(AnalysisError::TooFewSizes(datasets.len()));
    }
    for d in datasets {
        let n = d.points.iter().filter(|p| in_window(p.t, window)).count();
        if n < 4 {
            return Err(AnalysisError::TooFewPoints { l: d.l, n });
        }
    }
    let width = window.1 - window.0;
    let f = |v: &[f64; 3]| {
        if v[1] <= 0.0 || !in_window(v[0], window) {
            return NO_OVERLAP;
        }
        objective_raw(datasets, v[0], v[1], v[2], window)
    };
    let base = [init.t_c, 1.0 / init.nu, init.beta_over_nu];
    let jitters = [
        [0.0, 0.0, 0.0],
        [0.1 * width, 0.1 * base[1], 0.05],
        [-0.1 * width, -0.1 * base[1], -0.05],
    ];
    let steps = [0.1 * width, 0.2 * base[1], 0.1];
    let mut best: Option<([f64; 3], f64, bool, usize)> = None;
    for j in jitters {
        let start = [base[0] + j[0], base[1] + j[1], base[2] + j[2]];
        let (x, fx, conv, it) = nelder_mead(&f, start, steps);
        // One restart from the optimum guards against a collapsed simplex.
        let (x2, fx2, conv2, it2) = nelder_mead(&f, x, [0.02 * width, 0.05 * x[1], 0.02]);
        let cand = if fx2 <= fx {
            (x2, fx2, conv && conv2, it + it2)
        } else {
            (x, fx, conv, it + it2)
        };
        if best.as_ref().is_none_or(|b| cand.1 < b.1) {
            best = Some(cand);
        }
    }
    let (x, quality, converged, iterations) = best.expect("at least one start");
    Ok(ScalingFit {
        t_c: x[0],
        nu: 1.0 / x[1],
        beta_over_nu: x[2],
        quality,
        window,
        converged,
        iterations,
    })
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction ½,
/// shrink ½). Returns the best vertex, its value, whether the simplex
/// converged before the iteration cap and the iteration count.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(
    f: &F,
    start: [f64; 3],
    steps: [f64; 3],
) -> ([f64; 3], f64, bool, usize) {
    const N: usize = 3;
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, f(&start)));
    for (i, &step) in steps.iter().enumerate() {
        let mut v = start;
        v[i] += step;
        simplex.push((v, f(&v)));
    }
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        core::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
    };
    for it in 0..MAX_ITERATIONS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[N].1);
        let size = (1..=N)
            .map(|i| {
                (0..N)
                    .map(|k| (simplex[i].0[k] - simplex[0].0[k]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= 1e-10 * (lo.abs() + 1e-10) && size < 1e-7 {
            return (simplex[0].0, lo, true, it);
        }
        let centroid: [f64; 3] =
            core::array::from_fn(|k| simplex[..N].iter().map(|v| v.0[k]).sum::<f64>() / N as f64);
        let worst = simplex[N].0;
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            simplex[N] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[N].1 {
                lerp(&centroid, &reflected, 0.5)
            } else {
                lerp(&centroid, &worst, 0.5)
            };
            let fc = f(&contracted);
            if fc < fr.min(simplex[N].1) {
                simplex[N] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, false, MAX_ITERATIONS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Extents, LatticeGraph, LatticeKind};
    use crate::model::couplings_from_times;
    use crate::oracle;
    use core::f64::consts::{FRAC_PI_4, PI};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        Normal::standard().inverse_cdf(rng.random::<f64>().clamp(1e-300, 1.0 - 1e-16))
    }

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = gaussian(&mut rng) / (1.0 - phi * phi).sqrt();
        (0..n)
            .map(|_| {
                x = phi * x + gaussian(&mut rng);
                x
            })
            .collect()
    }

    #[test]
    fn iid_series() {
        let xs = ar1(1 << 16, 0.0, 1);
        let b = binning_error(&xs).unwrap();
        let expected = 1.0 / (xs.len() as f64).sqrt();
        assert!(
            (b.stderr / expected - 1.0).abs() < 0.2,
            "{}",
            b.stderr / expected
        );
        assert!((b.tau_int - 0.5).abs() < 0.15, "{}", b.tau_int);
    }

    #[test]
    fn ar1_autocorrelation_time() {
        let phi = 0.9;
        let expected = (1.0 + phi) / (2.0 * (1.0 - phi));
        for seed in 0..4 {
            let b = binning_error(&ar1(1 << 20, phi, 10 + seed)).unwrap();
            assert!(
                (b.tau_int / expected - 1.0).abs() < 0.25,
                "seed {seed}: {}",
                b.tau_int
            );
            // Rising until the bin size passes a few autocorrelation times.
            for k in 1..=5 {
                assert!(
                    b.levels[k] >= b.levels[k - 1],
                    "level {k}: {:?}",
                    &b.levels[..6]
                );
            }
        }
    }

    #[test]
    fn constant_and_short_series() {
        let b = binning_error(&[2.5; 100]).unwrap();
        assert_eq!((b.mean, b.stderr), (2.5, 0.0));
        assert_eq!(
            binning_error(&[1.0; 7]),
            Err(AnalysisError::TooShort { len: 7, min: 8 })
        );
        let b = binning_error(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(b.plateau_level, 0);
        assert!((b.mean - 4.5).abs() < 1e-15);
    }

    #[test]
    fn pooling() {
        let p = disorder_average(&[[0.3; 20], [0.3; 20]], 2).unwrap();
        assert_eq!((p.mean, p.stderr), (0.3, 0.0));
        assert_eq!(
            disorder_average(&[[0.3; 20]], 0),
            Err(AnalysisError::TooFewChains(1))
        );
        assert_eq!(
            disorder_average(&[&[0.3; 20][..], &[0.1][..]], 1),
            Err(AnalysisError::EmptyChain(1))
        );
        // Unequal lengths weight by samples.
        let p = disorder_average(&[&[1.0; 30][..], &[0.0; 10][..]], 0).unwrap();
        assert!((p.mean - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pooled_oracle_draws_match_exact_ea() {
        let g = LatticeGraph::build(LatticeKind::LiebSquare, Extents::square(2)).unwrap();
        let params = couplings_from_times(PI / 8.0, FRAC_PI_4);
        let ens = oracle::enumerate_ensemble(&g, &params).unwrap();
        let q = oracle::exact_ea(&g, &params).unwrap();
        let mut cdf = Vec::with_capacity(ens.probabilities.len());
        let mut acc = 0.0;
        for p in &ens.probabilities {
            acc += p;
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let chains: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                (0..4000)
                    .map(|_| {
                        let u = rng.random::<f64>() * acc;
                        let i = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                        ens.correlator[i] * ens.correlator[i]
                    })
                    .collect()
            })
            .collect();
        let p = disorder_average(&chains, 0).unwrap();
        assert!(
            (p.mean - q).abs() < 3.0 * p.stderr,
            "{} {} {}",
            p.mean,
            q,
            p.stderr
        );
        assert!(p.stderr > 0.0);
    }

    fn synthetic(
        sizes: &[f64],
        t_c: f64,
        inv_nu: f64,
        bon: f64,
        noise: f64,
        seed: u64,
    ) -> Vec<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sizes
            .iter()
            .map(|&l| Dataset {
                l,
                points: (0..=10)
                    .map(|i| {
                        let t = (0.1 + 0.01 * i as f64) * PI;
                        let x = (t - t_c) * l.powf(inv_nu);
                        let q0 = l.powf(-bon) * (0.5 + 0.4 * (2.0 * x).tanh());
                        let err = noise * q0;
                        ScalingPoint {
                            t,
                            q: q0 + err * gaussian(&mut rng),
                            err,
                        }
                    })
                    .collect(),
            })
            .collect()
    }

    const WINDOW: (f64, f64) = (0.1 * PI, 0.2 * PI);

    #[test]
    fn recovers_planted_scaling() {
        let data = synthetic(&[6.0, 8.0, 12.0, 16.0], 0.149 * PI, 0.75, 0.27, 0.01, 3);
        let init = CollapseParams {
            t_c: 0.15 * PI,
            nu: 1.2,
            beta_over_nu: 0.2,
        };
        let fit = collapse_fit(&data, WINDOW, init).unwrap();
        assert!(fit.converged);
        assert!(
            (fit.t_c - 0.149 * PI).abs() < 0.002 * PI,
            "{}",
            fit.t_c / PI
        );
        assert!((fit.nu * 0.75 - 1.0).abs() < 0.1, "{}", fit.nu);
        assert!(
            (fit.beta_over_nu / 0.27 - 1.0).abs() < 0.1,
            "{}",
            fit.beta_over_nu
        );
        assert!(fit.quality < 3.0);
        assert_eq!(collapse_fit(&data, WINDOW, init).unwrap(), fit);
    }

    #[test]
    fn objective_invariances() {
        let data = synthetic(&[6.0, 8.0, 12.0], 0.149 * PI, 0.75, 0.27, 0.01, 4);
        let p = CollapseParams {
            t_c: 0.147 * PI,
            nu: 1.4,
            beta_over_nu: 0.3,
        };
        let base = collapse_objective(&data, &p, WINDOW);
        let mut rev = data.clone();
        rev.reverse();
        assert!((collapse_objective(&rev, &p, WINDOW) - base).abs() < 1e-12 * base);
        let shift = 0.37;
        let moved: Vec<Dataset> = data
            .iter()
            .map(|d| Dataset {
                l: d.l,
                points: d
                    .points
                    .iter()
                    .map(|q| ScalingPoint {
                        t: q.t + shift,
                        ..*q
                    })
                    .collect(),
            })
            .collect();
        let p2 = CollapseParams {
            t_c: p.t_c + shift,
            ..p
        };
        let w2 = (WINDOW.0 + shift, WINDOW.1 + shift);
        assert!((collapse_objective(&moved, &p2, w2) - base).abs() < 1e-9 * base);
        assert!(base >= 0.0);
    }

    #[test]
    fn fit_preconditions() {
        let data = synthetic(&[6.0, 8.0, 12.0], 0.149 * PI, 0.75, 0.27, 0.01, 5);
        let init = CollapseParams {
            t_c: 0.15 * PI,
            nu: 1.4,
            beta_over_nu: 0.3,
        };
        assert_eq!(
            collapse_fit(&data[..1], WINDOW, init),
            Err(AnalysisError::TooFewSizes(1))
        );
        assert!(matches!(
            collapse_fit(&data, (0.1 * PI, 0.12 * PI), init),
            Err(AnalysisError::TooFewPoints { .. })
        ));
    }
}
