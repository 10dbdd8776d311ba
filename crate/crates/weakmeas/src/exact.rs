//! Exact reports: enumeration, Nishimori identities, closed forms.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use weakmeas_core::oracle::{
    exact_ea, oned_bond_prob, oned_q, premeasurement_check, premeasurement_closed_form,
    two_body_projector_check, verify_nishimori_at, CheckResult, NishimoriReport, Observable,
    OracleError, Protocol, ProtocolKind,
};
use weakmeas_core::{couplings_from_times, Extents, LatticeGraph, LatticeKind};

/// Closed forms and enumeration must agree to this.
pub const EXACT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableCheck {
    pub name: String,
    pub enumerated: f64,
    pub closed_form: f64,
    pub deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactPoint {
    pub t_a: f64,
    pub t_b: f64,
    /// `[⟨σ_0 σ_c⟩²]` (Ising protocol only).
    pub q: Option<f64>,
    /// 1D closed form of `q` (even-length chains only).
    pub q_closed_form: Option<f64>,
    /// Present when `t_A ≤ π/4`. On `t_B = π/4` all checks must pass; off
    /// the line the gauge check is expected to fail.
    pub nishimori: Option<NishimoriReport>,
    pub observables: Vec<ObservableCheck>,
}

impl ExactPoint {
    pub fn on_nishimori_line(&self) -> bool {
        (self.t_b - FRAC_PI_4).abs() < 1e-12
    }

    /// Checks that are required to pass at this point.
    pub fn passed(&self) -> bool {
        let nish = match (&self.nishimori, self.on_nishimori_line()) {
            (Some(r), true) => r.passed(),
            _ => true,
        };
        nish && self.observables.iter().all(|o| o.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub lattice: LatticeKind,
    pub extents: Extents,
    pub n_spins: usize,
    pub points: Vec<ExactPoint>,
    /// Strong-limit identity of the two-body 3D protocol (cubic only).
    pub two_body: Option<CheckResult>,
    pub passed: bool,
}

fn observable_check(
    name: &str,
    graph: &LatticeGraph,
    t_a: f64,
    t_b: f64,
    obs: Observable,
) -> Result<ObservableCheck, OracleError> {
    let params = couplings_from_times(t_a, t_b);
    let enumerated = premeasurement_check(graph, &params, &obs)?;
    let closed_form = premeasurement_closed_form(graph, &params, &obs)?;
    let deviation = (enumerated - closed_form).abs();
    Ok(ObservableCheck {
        name: name.into(),
        enumerated,
        closed_form,
        deviation,
        passed: deviation <= EXACT_TOLERANCE,
    })
}

pub fn exact_point(graph: &LatticeGraph, t_a: f64, t_b: f64) -> Result<ExactPoint, OracleError> {
    let protocol = Protocol::for_graph(graph)?;
    let params = couplings_from_times(t_a, t_b);
    let ising = protocol.kind == ProtocolKind::Ising;
    let q = if ising {
        Some(exact_ea(graph, &params)?)
    } else {
        None
    };
    let q_closed_form = match graph.kind {
        LatticeKind::Chain if graph.extents.lx % 2 == 0 => {
            Some(oned_q(t_a, t_b, graph.extents.lx)?)
        }
        _ => None,
    };
    let nishimori = if t_a <= FRAC_PI_4 + 1e-15 {
        Some(verify_nishimori_at(graph, t_a, t_b)?)
    } else {
        None
    };
    let mut observables = vec![observable_check(
        "single_s",
        graph,
        t_a,
        t_b,
        Observable::SingleS { ancilla: 0 },
    )?];
    if ising && !graph.plaquettes.is_empty() {
        observables.push(observable_check(
            "plaquette",
            graph,
            t_a,
            t_b,
            Observable::Plaquette { index: 0 },
        )?);
    }
    if ising {
        let obs = Observable::DecoratedString {
            from: graph.pinned_corner,
            to: graph.central_site,
        };
        observables.push(observable_check("decorated_string", graph, t_a, t_b, obs)?);
    } else {
        observables.push(observable_check(
            "cube_product",
            graph,
            t_a,
            t_b,
            Observable::CubeProduct,
        )?);
    }
    Ok(ExactPoint {
        t_a,
        t_b,
        q,
        q_closed_form,
        nishimori,
        observables,
    })
}

pub fn exact_report(
    graph: &LatticeGraph,
    pairs: &[(f64, f64)],
) -> Result<ExactReport, OracleError> {
    let points = pairs
        .iter()
        .map(|&(a, b)| exact_point(graph, a, b))
        .collect::<Result<Vec<_>, _>>()?;
    let two_body = if graph.kind == LatticeKind::Cubic3d {
        Some(two_body_projector_check(graph)?)
    } else {
        None
    };
    let passed =
        points.iter().all(ExactPoint::passed) && two_body.as_ref().is_none_or(|c| c.passed);
    Ok(ExactReport {
        lattice: graph.kind,
        extents: graph.extents,
        n_spins: graph.n_spins(),
        points,
        two_body,
        passed,
    })
}

/// A row of the 1D closed-form table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnedRow {
    pub t_a: f64,
    pub t_b: f64,
    pub l: usize,
    pub q: f64,
    pub p_bond: f64,
}

pub fn oned_row(t_a: f64, t_b: f64, l: usize) -> Result<OnedRow, OracleError> {
    Ok(OnedRow {
        t_a,
        t_b,
        l,
        q: oned_q(t_a, t_b, l)?,
        p_bond: oned_bond_prob(t_a, t_b),
    })
}
