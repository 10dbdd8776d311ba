//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs every criterion by default; `ACCEPTANCE_CRITERIA=1,3,8` selects a
//! subset. Exits nonzero if any selected criterion fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use weakmeas::run::{run_point, PointSummary, SamplingOptions};
use weakmeas_core::analysis::{collapse_fit, CollapseParams, Dataset, ScalingPoint};
use weakmeas_core::contraction::{ContractionConfig, Network};
use weakmeas_core::oracle::{
    config_from_index, config_index, enumerate_ensemble, premeasurement_check,
    two_body_projector_check, verify_nishimori, verify_nishimori_at, Observable,
};
use weakmeas_core::sampler::{run_chain_with, ChainSpec, InitMode, ProposalOrder, Schedule};
use weakmeas_core::{couplings_from_times, Extents, LatticeGraph, LatticeKind};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn options(chains: usize, sweeps: usize, seed: u64) -> SamplingOptions {
    SamplingOptions {
        chains,
        schedule: Schedule::with_default_discard(sweeps),
        seed,
        contraction: ContractionConfig::default(),
        proposal: ProposalOrder::Raster,
        init: InitMode::Random,
    }
}

fn lieb(l: usize) -> LatticeGraph {
    LatticeGraph::build(LatticeKind::LiebSquare, Extents::square(l)).unwrap()
}

/// Born weight by direct summation over site spins, from the gate angles.
fn brute_weight(g: &LatticeGraph, t_a: f64, t_b: f64, s: &[i8]) -> f64 {
    let n = g.n_sites();
    let (sum, diff) = (t_a + t_b, t_a - t_b);
    let mut total = 0.0;
    for sigma in 0..1u32 << n {
        let mut w = 1.0;
        for (b, bond) in g.bonds.iter().enumerate() {
            let aligned = (sigma >> bond.a) & 1 == (sigma >> bond.b) & 1;
            w *= match (s[b] > 0, aligned) {
                (true, true) => sum.cos().powi(2),
                (true, false) => diff.cos().powi(2),
                (false, true) => sum.sin().powi(2),
                (false, false) => diff.sin().powi(2),
            };
        }
        total += w;
    }
    total / (1u64 << n) as f64
}

/// Errors of one contraction setting against the direct sum: worst
/// flip-ratio and log-weight deviations.
fn contraction_errors(
    g: &LatticeGraph,
    t_a: f64,
    t_b: f64,
    config: ContractionConfig,
    s: &[i8],
    bond: usize,
) -> Result<(f64, f64), String> {
    let params = couplings_from_times(t_a, t_b);
    let net = Network::new(g, params, config).map_err(|e| e.to_string())?;
    let mut flipped = s.to_vec();
    flipped[bond] = -flipped[bond];
    let (p, p_flipped) = (
        brute_weight(g, t_a, t_b, s),
        brute_weight(g, t_a, t_b, &flipped),
    );
    let exact_ratio = p_flipped / p;
    let lw = net.log_weight(s).map_err(|e| e.to_string())?;
    let lw_flipped = net.log_weight(&flipped).map_err(|e| e.to_string())?;
    let env_ratio = net
        .bond_environment(s, bond)
        .and_then(|e| e.flip_ratio(&params, s[bond]))
        .map_err(|e| e.to_string())?;
    let ratio = ((lw_flipped - lw).exp() / exact_ratio - 1.0)
        .abs()
        .max((env_ratio / exact_ratio - 1.0).abs());
    Ok((ratio, (lw - p.ln()).abs()))
}

/// Exactness of log-weights and flip ratios on every contractible lattice
/// with at most 24 spins, for untruncated contraction on uniformly random
/// outcomes. The default cutoff is reported on Born-sampled outcomes but not
/// gated: its overlap error scales like the square root of the discarded
/// weight.
fn criterion_1() -> Outcome {
    let mut lattices: Vec<LatticeGraph> = (1..=11)
        .map(|l| LatticeGraph::build(LatticeKind::Chain, Extents::line(l)).unwrap())
        .collect();
    for (lx, ly) in [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2)] {
        lattices
            .push(LatticeGraph::build(LatticeKind::LiebSquare, Extents { lx, ly, lz: 1 }).unwrap());
    }
    lattices
        .push(LatticeGraph::build(LatticeKind::HeavyHexagon, Extents::heavy_hexagon(2)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 5];
    let mut truncated = Vec::new();
    let mut draws = 0;
    for g in &lattices {
        assert!(g.n_spins() <= 24);
        for _ in 0..100 {
            let (t_a, t_b) = (
                rng.random::<f64>() * PI / 2.0,
                rng.random::<f64>() * PI / 2.0,
            );
            let uniform: Vec<i8> = (0..g.n_bonds())
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let bond = rng.random_range(0..g.n_bonds());
            let (r, l) =
                contraction_errors(g, t_a, t_b, ContractionConfig::exact(), &uniform, bond)?;
            worst[0] = worst[0].max(r);
            worst[1] = worst[1].max(l);

            let ens = enumerate_ensemble(g, &couplings_from_times(t_a, t_b))
                .map_err(|e| e.to_string())?;
            worst[4] = worst[4].max(
                (ens.probabilities[config_index(&uniform) as usize]
                    / brute_weight(g, t_a, t_b, &uniform)
                    - 1.0)
                    .abs(),
            );
            let u: f64 = rng.random();
            let (mut acc, mut k) = (0.0, 0);
            while k + 1 < ens.probabilities.len() && acc + ens.probabilities[k] < u {
                acc += ens.probabilities[k];
                k += 1;
            }
            let born = config_from_index(k as u32, g.n_bonds());
            let (r, l) =
                contraction_errors(g, t_a, t_b, ContractionConfig::default(), &born, bond)?;
            worst[2] = worst[2].max(r);
            worst[3] = worst[3].max(l);
            truncated.push(r.max(l));
            draws += 1;
        }
    }
    truncated.sort_by(f64::total_cmp);
    let share = truncated.iter().filter(|&&e| e < 1e-8).count() as f64 / truncated.len() as f64;
    check(
        worst[0] < 1e-8 && worst[1] < 1e-8 && worst[4] < 1e-8,
        format!(
            "{} lattices, {draws} draws (tol 1e-8): untruncated ratio {:.1e} / log-weight {:.1e}; library enumeration {:.1e}; \
             [info] default cutoff on Born draws: max {:.1e} / {:.1e}, median {:.1e}, {:.1}% within 1e-8",
            lattices.len(),
            worst[0],
            worst[1],
            worst[4],
            worst[2],
            worst[3],
            truncated[truncated.len() / 2],
            100.0 * share
        ),
    )
}

/// Nishimori identities on lieb L=2 and their breakdown off the line.
fn criterion_2() -> Outcome {
    let g = lieb(2);
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for f in [0.05, 0.1, 0.15, 0.2] {
        let report = verify_nishimori(&g, f * PI).map_err(|e| e.to_string())?;
        for c in &report.checks {
            worst = worst.max(c.max_deviation);
            if !names.contains(&c.name) {
                names.push(c.name.clone());
            }
        }
    }
    let off = verify_nishimori_at(&g, 0.15 * PI, PI / 5.0).map_err(|e| e.to_string())?;
    let gauge_off = off
        .check("gauge_invariance")
        .map(|c| c.max_deviation)
        .unwrap_or(0.0);
    check(
        worst <= 1e-10 && names.len() == 3 && gauge_off > 1e-3,
        format!("checks {names:?} max deviation {worst:.1e} (tol 1e-10); gauge invariance at t_B=pi/5 deviates by {gauge_off:.3}"),
    )
}

/// `(q, [m^4])` for a chain of `l` bonds read out at the center: per bond,
/// `p_± = (1 ± cc)/2` and `tanh βJ_± = S/(±1 + cc)` with `S = sin2t_A sin2t_B`,
/// `cc = cos2t_A cos2t_B`.
fn oned_moments(t_a: f64, t_b: f64, l: usize) -> (f64, f64) {
    let big_s = (2.0 * t_a).sin() * (2.0 * t_b).sin();
    let cc = (2.0 * t_a).cos() * (2.0 * t_b).cos();
    let second = big_s.powi(2) / (1.0 - cc * cc);
    let fourth = 0.5 * big_s.powi(4) * ((1.0 + cc).powi(-3) + (1.0 - cc).powi(-3));
    let half = l as i32 / 2;
    (second.powi(half), fourth.powi(half))
}

/// 1D sampler against closed forms on both cuts. The per-sweep estimator
/// is log-normal-like at large L, so the binning error can miss rare
/// dominant configurations; sigma is the larger of the binning error and the
/// exact i.i.d. error from the closed-form fourth moment.
fn criterion_3() -> Outcome {
    const CHAINS: usize = 11;
    const SWEEPS: usize = 4000;
    let opts = options(CHAINS, SWEEPS, 3);
    let n = (CHAINS * (SWEEPS - opts.schedule.n_discard)) as f64;
    let mut lines = Vec::new();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for l in [4usize, 8, 16, 32] {
        let g = LatticeGraph::build(LatticeKind::Chain, Extents::line(l)).unwrap();
        for (i, f) in [0.1, 0.15, 0.2].into_iter().enumerate() {
            let t_a = f * PI;
            for (j, t_b) in [FRAC_PI_4, t_a].into_iter().enumerate() {
                let (exact, fourth) = oned_moments(t_a, t_b, l);
                if j == 0 {
                    assert!((exact - (2.0 * t_a).sin().powi(l as i32)).abs() < 1e-14);
                }
                let r = run_point(&g, t_a, t_b, 2 * i + j, &opts).map_err(|e| e.to_string())?;
                let q = r.summary.q.mean;
                let sigma = r
                    .summary
                    .q
                    .stderr
                    .max(((fourth - exact * exact).max(0.0) / n).sqrt());
                // On the Nishimori line the estimator has no variance at all;
                // 1e-12 absorbs round-off.
                let dev = (q - exact).abs();
                let z = 3.0 * dev / (3.0 * sigma + 1e-12);
                worst = worst.max(z);
                if z > 3.0 {
                    ok = false;
                    lines.push(format!(
                        "L={l} t_A={f}pi t_B={:.3}pi: q={q:.6e}±{:.1e} (iid {:.1e}) vs {exact:.6e}",
                        t_b / PI,
                        r.summary.q.stderr,
                        sigma
                    ));
                }
            }
        }
    }
    check(
        ok,
        format!(
            "24 points, worst deviation {worst:.2} sigma (tol 3, with 1e-12 round-off floor) {}",
            lines.join("; ")
        ),
    )
}

/// Sampled outcome correlators on lieb L=6 against the premeasurement formulas.
fn criterion_4() -> Outcome {
    let g = lieb(6);
    let path = g
        .wilson_path(g.pinned_corner, g.central_site)
        .unwrap()
        .len();
    let opts = options(11, 10_000, 4);
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (fa, fb)) in [(0.125, 0.125), (0.2, 0.25), (0.18, 0.3)]
        .into_iter()
        .enumerate()
    {
        let (t_a, t_b) = (fa * PI, fb * PI);
        let (sa, sb, ca, cb) = (
            (2.0 * t_a).sin(),
            (2.0 * t_b).sin(),
            (2.0 * t_a).cos(),
            (2.0 * t_b).cos(),
        );
        let expected = [
            ca * cb,
            (ca * cb).powi(4) + (sa * sb).powi(4),
            (-sa * sb).powi(path as i32),
        ];
        let r = run_point(&g, t_a, t_b, i, &opts).map_err(|e| e.to_string())?;
        let PointSummary {
            mean_s,
            mean_plaquette,
            wilson_line,
            ..
        } = r.summary;
        for (name, got, want) in [
            ("s", mean_s, expected[0]),
            ("plaquette", mean_plaquette, expected[1]),
            ("wilson", wilson_line, expected[2]),
        ] {
            let z = (got.mean - want).abs() / got.stderr;
            ok &= z <= 3.0;
            parts.push(format!(
                "{name}({fa}pi,{fb}pi) {:.4}±{:.4} vs {want:.4}",
                got.mean, got.stderr
            ));
        }
    }
    check(ok, format!("path length {path}; {}", parts.join(", ")))
}

/// Scans t_A over [0.1pi, 0.2pi] for L in {6, 8, 10, 12}.
fn scan(cut: impl Fn(f64) -> f64, seed: u64) -> Result<Vec<Dataset>, String> {
    let opts = options(11, 2000, seed);
    let mut sets = Vec::new();
    for l in [6usize, 8, 10, 12] {
        let g = lieb(l);
        let start = Instant::now();
        let mut points = Vec::new();
        let mut exact_sweeps = 0;
        for i in 0..9 {
            let t_a = (0.1 + 0.0125 * i as f64) * PI;
            let r = run_point(&g, t_a, cut(t_a), i, &opts).map_err(|e| e.to_string())?;
            exact_sweeps += r.summary.exact_sweeps;
            points.push(ScalingPoint {
                t: t_a,
                q: r.summary.q.mean,
                err: r.summary.q.stderr,
            });
        }
        eprintln!(
            "  L={l}: q = [{}] ({:.0}s, {exact_sweeps} exact fallback sweeps)",
            points
                .iter()
                .map(|p| format!("{:.4}", p.q))
                .collect::<Vec<_>>()
                .join(", "),
            start.elapsed().as_secs_f64()
        );
        sets.push(Dataset {
            l: l as f64,
            points,
        });
    }
    Ok(sets)
}

const INIT: CollapseParams = CollapseParams {
    t_c: 0.15 * PI,
    nu: 1.4,
    beta_over_nu: 0.25,
};

/// Nishimori-line collapse.
fn criterion_5() -> Outcome {
    let sets = scan(|_| FRAC_PI_4, 5)?;
    let fit = collapse_fit(&sets, (0.1 * PI, 0.2 * PI), INIT).map_err(|e| e.to_string())?;
    let tc = fit.t_c / PI;
    check(
        (0.14..=0.16).contains(&tc) && (1.1..=1.8).contains(&fit.nu),
        format!(
            "t_c = {tc:.4}pi (want [0.14, 0.16]), nu = {:.3} (want [1.1, 1.8]), beta/nu = {:.3}, quality {:.2}",
            fit.nu, fit.beta_over_nu, fit.quality
        ),
    )
}

/// Linear interpolation of `q L^{a}` at `t`.
fn scaled_at(set: &Dataset, a: f64, t: f64) -> f64 {
    let p = &set.points;
    let i = p
        .windows(2)
        .position(|w| w[0].t <= t && t <= w[1].t)
        .unwrap();
    let (x0, x1) = (p[i].t, p[i + 1].t);
    let y = p[i].q + (p[i + 1].q - p[i].q) * (t - x0) / (x1 - x0);
    y * set.l.powf(a)
}

/// Diagonal cut: the scaled curves of the smallest and largest size cross
/// inside [0.155pi, 0.18pi].
fn criterion_6() -> Outcome {
    let sets = scan(|t_a| t_a, 6)?;
    let fit = collapse_fit(&sets, (0.1 * PI, 0.2 * PI), INIT).map_err(|e| e.to_string())?;
    let a = fit.beta_over_nu;
    let (small, large) = (&sets[0], &sets[sets.len() - 1]);
    let gap = |t: f64| scaled_at(large, a, t) - scaled_at(small, a, t);
    let (lo, hi) = (gap(0.155 * PI), gap(0.18 * PI));
    // First sign change on the grid, refined linearly.
    let crossing = small
        .points
        .windows(2)
        .find(|w| gap(w[0].t) < 0.0 && gap(w[1].t) >= 0.0)
        .map(|w| {
            let (g0, g1) = (gap(w[0].t), gap(w[1].t));
            (w[0].t - g0 * (w[1].t - w[0].t) / (g1 - g0)) / PI
        });
    check(
        lo < 0.0 && hi > 0.0,
        format!(
            "beta/nu = {a:.3}: L^(beta/nu) q gap (L=12 minus L=6) {lo:+.4} at 0.155pi, {hi:+.4} at 0.18pi; crossing {}; collapse t_c = {:.4}pi",
            crossing.map(|c| format!("{c:.4}pi")).unwrap_or_else(|| "none".into()),
            fit.t_c / PI
        ),
    )
}

/// Cube product and the strong-limit two-body identity on the 2x2x2 lattice.
fn criterion_7() -> Outcome {
    let g = LatticeGraph::build(LatticeKind::Cubic3d, Extents::cube(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut general, mut nishimori): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let (t_a, t_b) = (
            rng.random::<f64>() * PI / 2.0,
            rng.random::<f64>() * PI / 2.0,
        );
        let (sa, sb, ca, cb) = (
            (2.0 * t_a).sin(),
            (2.0 * t_b).sin(),
            (2.0 * t_a).cos(),
            (2.0 * t_b).cos(),
        );
        let v = premeasurement_check(
            &g,
            &couplings_from_times(t_a, t_b),
            &Observable::CubeProduct,
        )
        .map_err(|e| e.to_string())?;
        general = general.max((v - (ca.powi(6) * cb.powi(6) + sa.powi(6) * sb.powi(6))).abs());
        let v = premeasurement_check(
            &g,
            &couplings_from_times(t_a, FRAC_PI_4),
            &Observable::CubeProduct,
        )
        .map_err(|e| e.to_string())?;
        nishimori = nishimori.max((v - sa.powi(6)).abs());
    }
    let two_body = two_body_projector_check(&g).map_err(|e| e.to_string())?;
    check(
        general < 1e-10 && nishimori < 1e-10 && two_body.passed,
        format!(
            "cube product deviation {general:.1e} (general), {nishimori:.1e} (Nishimori cut); two-body projector deviation {:.1e}",
            two_body.max_deviation
        ),
    )
}

/// Empirical outcome law on lieb L=2 against enumeration.
fn criterion_8() -> Outcome {
    const CHAINS: u64 = 8;
    const KEPT: usize = 125_000;
    const BURN: usize = 1000;
    const THIN: usize = 5;
    let g = lieb(2);
    let (t_a, t_b) = (0.08 * PI, 0.08 * PI);
    let params = couplings_from_times(t_a, t_b);
    let exact = enumerate_ensemble(&g, &params)
        .map_err(|e| e.to_string())?
        .probabilities;
    let net = Network::new(&g, params, ContractionConfig::default()).map_err(|e| e.to_string())?;
    let schedule = Schedule {
        n_sweeps: KEPT + BURN,
        n_discard: BURN,
        thin: 0,
    };
    let mut all = vec![0u64; exact.len()];
    let mut thinned = vec![0u64; exact.len()];
    for c in 0..CHAINS {
        let spec = ChainSpec {
            master_seed: 8,
            chain_index: c,
            init: InitMode::Random,
            order: ProposalOrder::Raster,
        };
        run_chain_with(&g, &net, &schedule, &spec, |sweep, s| {
            if sweep >= BURN {
                let k = config_index(s) as usize;
                all[k] += 1;
                if (sweep - BURN) % THIN == 0 {
                    thinned[k] += 1;
                }
            }
        })
        .map_err(|e| e.to_string())?;
    }
    let n = (CHAINS as usize * KEPT) as f64;
    let tv = 0.5
        * exact
            .iter()
            .zip(&all)
            .map(|(p, &c)| (c as f64 / n - p).abs())
            .sum::<f64>();

    // Chi-square on thinned samples, pooling cells with expected count < 5.
    let m = thinned.iter().sum::<u64>() as f64;
    let (mut stat, mut dof, mut pool_e, mut pool_o) = (0.0, 0usize, 0.0, 0.0);
    for (p, &o) in exact.iter().zip(&thinned) {
        let e = p * m;
        if e < 5.0 {
            pool_e += e;
            pool_o += o as f64;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            dof += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        dof += 1;
    }
    let p_value = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat);
    let sqrt_sum: f64 = exact.iter().map(|p| p.sqrt()).sum();
    check(
        p_value > 0.01 && tv < 0.02,
        format!(
            "t_A = t_B = 0.08pi, {n:.0} sweeps: TV {tv:.4} (tol 0.02, iid expectation {:.4}); chi-square {stat:.1} on {} dof (every {THIN}th sweep), p = {p_value:.3}",
            sqrt_sum / (2.0 * PI * n).sqrt(),
            dof - 1
        ),
    )
}

fn main() {
    let selected: Option<Vec<usize>> = std::env::var("ACCEPTANCE_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 8] = [
        (1, "exactness of contraction on small lattices", criterion_1),
        (2, "Nishimori identities", criterion_2),
        (3, "1D closed forms", criterion_3),
        (4, "correlator formulas on lieb L=6", criterion_4),
        (5, "Nishimori-line collapse", criterion_5),
        (6, "diagonal-cut crossing", criterion_6),
        (7, "3D cube product and two-body identity", criterion_7),
        (8, "sampler stationary law", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS ({name}, {secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL ({name}, {secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
