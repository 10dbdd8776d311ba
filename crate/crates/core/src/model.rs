//! Translation from gate times to the classical disordered Ising model.
//!
//! An ancilla coupled to sites `i` (time `t_A`) and `j` (time `t_B`) and then
//! measured in the x basis returns `s = +1` with probability
//! `cos^2(t_A σ_i + t_B σ_j)`. As a function of the site pair this is the
//! 2x2 bond matrix `B^s(σ_i, σ_j)`, which depends only on whether the pair is
//! aligned.

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use core::fmt;

// Float supplies libm-backed methods without std; with std they are inherent.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Squared amplitudes below this are treated as exact zeros, so that
/// strong-measurement angles produce exact permutation/identity matrices.
const ZERO_WEIGHT: f64 = 1e-28;

/// Effective coupling that may diverge at strong-measurement points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    Finite(f64),
    PosInfinity,
    NegInfinity,
    /// Both weights vanish: the outcome never occurs and the coupling is
    /// meaningless.
    Undefined,
}

impl Coupling {
    fn from_log_ratio(numerator: f64, denominator: f64, scale: f64) -> Self {
        match (numerator > 0.0, denominator > 0.0) {
            (true, true) => Coupling::Finite(scale * (numerator.ln() - denominator.ln())),
            (true, false) => Coupling::PosInfinity,
            (false, true) => Coupling::NegInfinity,
            (false, false) => Coupling::Undefined,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Coupling::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Coupling::Finite(_))
    }
}

/// Symmetric 2x2 nonnegative matrix with constant diagonal (`aligned`, for
/// `σ_i = σ_j`) and constant off-diagonal (`anti`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondMatrix {
    pub aligned: f64,
    pub anti: f64,
}

impl BondMatrix {
    pub const ONES: BondMatrix = BondMatrix {
        aligned: 1.0,
        anti: 1.0,
    };
    pub const IDENTITY: BondMatrix = BondMatrix {
        aligned: 1.0,
        anti: 0.0,
    };

    /// Entry for spin indices (`0` for up, `1` for down).
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.aligned
        } else {
            self.anti
        }
    }

    pub fn to_array(self) -> [[f64; 2]; 2] {
        [[self.aligned, self.anti], [self.anti, self.aligned]]
    }
}

/// Gate times plus everything derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub t_a: f64,
    pub t_b: f64,
    pub beta_j_plus: Coupling,
    pub beta_j_minus: Coupling,
    pub beta_h: Coupling,
    pub bond_plus: BondMatrix,
    pub bond_minus: BondMatrix,
}

fn sq(x: f64) -> f64 {
    let v = x * x;
    if v < ZERO_WEIGHT {
        0.0
    } else {
        v
    }
}

impl CircuitParams {
    /// Derives couplings and bond matrices. Angles are in radians; the
    /// physical domain is `[0, π/2]` but any finite angle is accepted since
    /// the weights are periodic.
    pub fn from_times(t_a: f64, t_b: f64) -> Self {
        assert!(
            t_a.is_finite() && t_b.is_finite(),
            "gate times must be finite"
        );
        let (sum, diff) = (t_a + t_b, t_a - t_b);
        let bond_plus = BondMatrix {
            aligned: sq(sum.cos()),
            anti: sq(diff.cos()),
        };
        let bond_minus = BondMatrix {
            aligned: sq(sum.sin()),
            anti: sq(diff.sin()),
        };
        // aligned / anti = exp(-2 βJ_s); the product of both entries is exp(-2 β h s) up to a shared constant.
        let beta_j_plus = Coupling::from_log_ratio(bond_plus.anti, bond_plus.aligned, 0.5);
        let beta_j_minus = Coupling::from_log_ratio(bond_minus.anti, bond_minus.aligned, 0.5);
        let beta_h = Coupling::from_log_ratio(
            bond_minus.aligned * bond_minus.anti,
            bond_plus.aligned * bond_plus.anti,
            0.25,
        );
        CircuitParams {
            t_a,
            t_b,
            beta_j_plus,
            beta_j_minus,
            beta_h,
            bond_plus,
            bond_minus,
        }
    }

    /// Bond matrix for outcome `s` (`+1` or `-1`).
    #[inline]
    pub fn bond(&self, s: i8) -> BondMatrix {
        if s > 0 {
            self.bond_plus
        } else {
            self.bond_minus
        }
    }

    /// `cos 2t_A cos 2t_B`: the mean single-ancilla outcome.
    pub fn mean_outcome(&self) -> f64 {
        (2.0 * self.t_a).cos() * (2.0 * self.t_b).cos()
    }

    /// `-sin 2t_A sin 2t_B`: the per-bond factor of closed and decorated strings.
    pub fn loop_factor(&self) -> f64 {
        -(2.0 * self.t_a).sin() * (2.0 * self.t_b).sin()
    }

    pub fn on_nishimori_line(&self) -> bool {
        (self.t_b - FRAC_PI_4).abs() < 1e-12 || (self.t_a - FRAC_PI_4).abs() < 1e-12
    }
}

pub fn couplings_from_times(t_a: f64, t_b: f64) -> CircuitParams {
    CircuitParams::from_times(t_a, t_b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NishimoriParams {
    /// `ln|tan(t_A + π/4)|`, `PosInfinity` at `t_A = π/4`.
    pub beta: Coupling,
    /// Probability of an antiferromagnetic (`s' = +1`) bond in the
    /// uncorrelated ensemble, `(1 - sin 2t_A) / 2`.
    pub p_flip: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelError {
    OutOfRange { t_a: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::OutOfRange { t_a } => {
                write!(f, "Nishimori parameters need t_A in [0, π/4] (got {t_a})")
            }
        }
    }
}

impl core::error::Error for ModelError {}

pub fn nishimori_params(t_a: f64) -> Result<NishimoriParams, ModelError> {
    if !(0.0..=FRAC_PI_4 + 1e-15).contains(&t_a) {
        return Err(ModelError::OutOfRange { t_a });
    }
    let s = (2.0 * t_a).sin().min(1.0);
    let p_flip = (1.0 - s) / 2.0;
    let beta = if s >= 1.0 {
        Coupling::PosInfinity
    } else {
        // ln tan(t + π/4) = ½ ln((1 + sin 2t) / (1 - sin 2t))
        Coupling::Finite(0.5 * ((1.0 + s) / (1.0 - s)).ln())
    };
    Ok(NishimoriParams { beta, p_flip })
}

/// Shape of an ancilla string in the premeasurement correlators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringKind {
    /// Product of `s^x` along an open string.
    Open,
    /// Product of `s^x` around a closed loop (or closed surface in 3D).
    Closed,
    /// Open string with `σ^z` inserted at both end points.
    Decorated,
}

/// Closed-form `⟨ψ|∏ s^x (σ^z σ^z)|ψ⟩` for a string of `length` ancillas.
pub fn premeasurement_correlator(t_a: f64, t_b: f64, length: usize, kind: StringKind) -> f64 {
    let n = length as i32;
    let plain = ((2.0 * t_a).cos() * (2.0 * t_b).cos()).powi(n);
    let looped = (-(2.0 * t_a).sin() * (2.0 * t_b).sin()).powi(n);
    match kind {
        StringKind::Open => plain,
        StringKind::Closed => plain + looped,
        StringKind::Decorated => looped,
    }
}

/// Six-plaquette cube product of the 3D gauge protocol.
pub fn cube_product(t_a: f64, t_b: f64) -> f64 {
    premeasurement_correlator(t_a, t_b, 6, StringKind::Closed)
}

/// Maps an angle by the half-period shift `t -> t + π/2`.
pub fn shift_half_period(t: f64) -> f64 {
    t + FRAC_PI_2
}
