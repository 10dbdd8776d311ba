//! Run configuration: angle syntax, lattice sizes, scan grids, validation.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use weakmeas_core::contraction::ContractionConfig;
use weakmeas_core::sampler::{InitMode, ProposalOrder, Schedule};
use weakmeas_core::{Extents, LatticeGraph, LatticeKind};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "WEAKMEAS_OUT";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse angle {0:?} (use radians or a multiple of pi, e.g. 0.149pi or pi/8)")]
    Angle(String),
    #[error("angle {name} = {value} rad is outside [0, pi/2]")]
    AngleRange { name: &'static str, value: f64 },
    #[error("cannot parse lattice size {0:?} (use N, AxB or AxBxC)")]
    Size(String),
    #[error("unknown lattice {0:?} (chain, lieb, heavy_hex, cubic)")]
    Lattice(String),
    #[error("invalid lattice: {0}")]
    Geometry(String),
    #[error("{0}")]
    Invalid(String),
}

/// Parses `0.149pi`, `0.149π`, `pi/8`, `3pi/16` or plain radians.
pub fn parse_angle(text: &str) -> Result<f64, ConfigError> {
    let err = || ConfigError::Angle(text.to_string());
    let t = text.trim().to_ascii_lowercase().replace('π', "pi");
    let value = if let Some(pos) = t.find("pi") {
        let (coef, rest) = (&t[..pos], &t[pos + 2..]);
        let coef = match coef.trim_end_matches('*') {
            "" => 1.0,
            c => c.parse::<f64>().map_err(|_| err())?,
        };
        let div = match rest {
            "" => 1.0,
            r => r
                .strip_prefix('/')
                .ok_or_else(err)?
                .parse::<f64>()
                .map_err(|_| err())?,
        };
        coef * PI / div
    } else {
        t.parse::<f64>().map_err(|_| err())?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(err())
    }
}

pub fn parse_lattice(name: &str) -> Result<LatticeKind, ConfigError> {
    LatticeKind::parse(&name.to_ascii_lowercase().replace('-', "_"))
        .ok_or_else(|| ConfigError::Lattice(name.into()))
}

/// `N` uses the lattice's natural shape; `AxB` / `AxBxC` give raw extents.
pub fn parse_size(kind: LatticeKind, text: &str) -> Result<Extents, ConfigError> {
    let err = || ConfigError::Size(text.to_string());
    let parts: Vec<usize> = text
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>().map_err(|_| err()))
        .collect::<Result<_, _>>()?;
    match (parts.as_slice(), kind) {
        ([n], LatticeKind::Chain) => Ok(Extents::line(*n)),
        ([n], LatticeKind::LiebSquare) => Ok(Extents::square(*n)),
        ([n], LatticeKind::HeavyHexagon) => Ok(Extents::heavy_hexagon(*n)),
        ([n], LatticeKind::Cubic3d) => Ok(Extents::cube(*n)),
        ([a, b], _) => Ok(Extents {
            lx: *a,
            ly: *b,
            lz: 1,
        }),
        ([a, b, c], _) => Ok(Extents {
            lx: *a,
            ly: *b,
            lz: *c,
        }),
        _ => Err(err()),
    }
}

/// The linear size reported as `L` in tables.
pub fn size_label(kind: LatticeKind, extents: &Extents) -> usize {
    match kind {
        LatticeKind::HeavyHexagon => extents.ly,
        _ => extents.lx,
    }
}

/// Line through the `(t_A, t_B)` plane along which scans run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "cut", content = "t_b")]
pub enum Cut {
    /// `t_B = π/4`.
    Nishimori,
    /// `t_B = t_A`.
    Diagonal,
    FixedTb(f64),
}

impl Cut {
    pub fn t_b(&self, t_a: f64) -> f64 {
        match *self {
            Cut::Nishimori => FRAC_PI_4,
            Cut::Diagonal => t_a,
            Cut::FixedTb(t) => t,
        }
    }

    pub fn parse(name: &str, t_b: Option<f64>) -> Result<Self, ConfigError> {
        match (name.to_ascii_lowercase().replace('-', "_").as_str(), t_b) {
            ("nishimori", _) => Ok(Cut::Nishimori),
            ("diagonal", _) => Ok(Cut::Diagonal),
            ("fixed_tb", Some(t)) => Ok(Cut::FixedTb(t)),
            ("fixed_tb", None) => Err(ConfigError::Invalid("the fixed_tb cut needs --tB".into())),
            (other, _) => Err(ConfigError::Invalid(format!(
                "unknown cut {other:?} (nishimori, diagonal, fixed_tb)"
            ))),
        }
    }
}

/// Evenly spaced `t_A` values, endpoints included, ascending.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.t_min],
            n => (0..n)
                .map(|i| {
                    if i + 1 == n {
                        self.t_max
                    } else {
                        self.t_min + (self.t_max - self.t_min) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

/// Which angles a run visits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angles {
    Point { t_a: f64, t_b: f64 },
    Scan { cut: Cut, grid: Grid },
}

impl Angles {
    /// `(t_A, t_B)` pairs in ascending `t_A`.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            Angles::Point { t_a, t_b } => vec![(*t_a, *t_b)],
            Angles::Scan { cut, grid } => {
                grid.values().into_iter().map(|t| (t, cut.t_b(t))).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lattice: LatticeKind,
    pub extents: Extents,
    pub angles: Angles,
    pub chains: usize,
    pub sweeps: usize,
    /// Fraction of leading sweeps discarded per chain.
    pub discard: f64,
    /// Snapshot every `thin` retained sweeps (0: none).
    pub thin: usize,
    pub seed: u64,
    pub cutoff: f64,
    pub chi_max: usize,
    pub proposal: ProposalOrder,
    pub init: InitMode,
    pub threads: usize,
    pub out_dir: PathBuf,
}

fn check_angle(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=FRAC_PI_2 + 1e-12).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::AngleRange { name, value })
    }
}

impl RunConfig {
    pub fn graph(&self) -> Result<LatticeGraph, ConfigError> {
        LatticeGraph::build(self.lattice, self.extents)
            .map_err(|e| ConfigError::Geometry(e.to_string()))
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            n_sweeps: self.sweeps,
            n_discard: (self.discard * self.sweeps as f64).floor() as usize,
            thin: self.thin,
        }
    }

    pub fn contraction(&self) -> ContractionConfig {
        ContractionConfig {
            cutoff: self.cutoff,
            chi_max: self.chi_max,
        }
    }

    /// Checks every module precondition before any compute; returns the graph.
    pub fn validate(&self) -> Result<LatticeGraph, ConfigError> {
        let graph = self.graph()?;
        if self.lattice == LatticeKind::Cubic3d {
            return Err(ConfigError::Invalid(
                "cubic3d lattices are exact-only; use `exact`".into(),
            ));
        }
        for (t_a, t_b) in self.angles.pairs() {
            check_angle("t_A", t_a)?;
            check_angle("t_B", t_b)?;
        }
        if let Angles::Scan { grid, .. } = &self.angles {
            if grid.points == 0 || grid.t_min > grid.t_max {
                return Err(ConfigError::Invalid(format!(
                    "scan grid needs at least one point and t_min <= t_max (got {} points on [{}, {}])",
                    grid.points, grid.t_min, grid.t_max
                )));
            }
        }
        if self.chains < 2 {
            return Err(ConfigError::Invalid(
                "at least 2 chains are needed for error bars".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.discard) {
            return Err(ConfigError::Invalid(format!(
                "discard fraction {} is outside [0, 1)",
                self.discard
            )));
        }
        let sched = self.schedule();
        if sched.n_sweeps == 0 || sched.n_sweeps - sched.n_discard < 8 {
            return Err(ConfigError::Invalid(format!(
                "{} sweeps leave fewer than 8 retained samples per chain",
                self.sweeps
            )));
        }
        if !(self.cutoff >= 0.0 && self.cutoff < 1.0) || self.chi_max == 0 {
            return Err(ConfigError::Invalid(
                "cutoff must be in [0, 1) and chi_max positive".into(),
            ));
        }
        if self.threads == 0 {
            return Err(ConfigError::Invalid("--threads must be positive".into()));
        }
        Ok(graph)
    }
}

/// `--out` if given, else `$WEAKMEAS_OUT/<name>`, else `runs/<name>`.
pub fn output_dir(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
        root.join(name)
    })
}
