//! Bridge from the single-mode parallelogram test to a two-mode phase-space
//! Bell test on the state split with vacuum at a balanced beam splitter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::functionals::{bw_test, diagonals, test_value};
use crate::geometry::{OrderParameter, PointGeometry, Shape, Vertex};
use crate::optimize::{maximize, MaximizeOptions, Objective, OptimizationProblem, StateFamily};
use crate::quasiprob::eval;
use crate::states::{FockDensityMatrix, GaussianState, State};
use crate::{Result, C64};

/// Slack allowed in the chain inequality.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeResult {
    /// Sweep parameter (`r` or `f`).
    pub parameter: f64,
    pub p: f64,
    pub b: f64,
    /// Parallelogram value `N[ρ]`.
    pub n: f64,
    pub geometry: PointGeometry,
    pub d_a: C64,
    pub d_b: C64,
    /// `N > 2 ⇒ B ≥ N e^{-max(|D_a|,|D_b|)²/2}` within [`CHAIN_TOLERANCE`].
    pub chain_ok: bool,
    /// `B - N e^{-max²/2}`; only meaningful when `N > 2`.
    pub chain_slack: f64,
    /// `N > 2 ⇒` both vertex combinations are positive.
    pub positivity_ok: bool,
    /// `|S₀₀ + S₁₁ - S₁₀ - S₀₁|`.
    pub vertex_identity_error: f64,
    /// `|B - (two-term decomposition)|`.
    pub decomposition_error: f64,
}

/// `(W(S₀₀) - W(S₁₁), W(S₁₀) + W(S₀₁))` on the scaled Wigner scale.
pub fn vertex_combinations(state: &State, g: &PointGeometry) -> (f64, f64) {
    let w = |v| eval(state, crate::PhaseSpacePoint::from_complex(g.vertex(v)), OrderParameter::WIGNER).scaled;
    (w(Vertex::V00) - w(Vertex::V11), w(Vertex::V10) + w(Vertex::V01))
}

/// Evaluates the bridge quantities at a fixed four-point geometry.
pub fn bridge_point(state: &State, g: &PointGeometry, parameter: f64) -> BridgeResult {
    let four = g.with_shape(Shape::Parallelogram).expect("four-point relabel");
    let n = test_value(state, &four, OrderParameter::WIGNER);
    let (da, db) = diagonals(g);
    let dmax = da.norm().max(db.norm());
    let p = n - 2.0 * (0.5 * dmax * dmax).exp();
    let b = bw_test(state, g);
    let (minus, plus) = vertex_combinations(state, g);
    let two_term = minus * (-0.5 * db.norm_sqr()).exp() + plus * (-0.5 * da.norm_sqr()).exp();
    let chain_slack = b - n * (-0.5 * dmax * dmax).exp();
    let active = n > 2.0;
    let verts = g.all_vertices();
    BridgeResult {
        parameter,
        p,
        b,
        n,
        geometry: *g,
        d_a: da,
        d_b: db,
        chain_ok: !active || chain_slack >= -CHAIN_TOLERANCE,
        chain_slack,
        positivity_ok: !active || (minus > 0.0 && plus > 0.0),
        vertex_identity_error: (verts[0].1 + verts[3].1 - verts[1].1 - verts[2].1).norm(),
        decomposition_error: (b - two_term).abs(),
    }
}

/// Maximises `P` over the parallelogram family and evaluates the bridge
/// quantities at the optimum.
pub fn optimal_bridge(state: &State, parameter: f64, options: &MaximizeOptions) -> Result<BridgeResult> {
    let p = OptimizationProblem::new(Objective::P, StateFamily::Fixed(state.clone()), OrderParameter::WIGNER).with_options(*options);
    let m = maximize(&p)?;
    Ok(bridge_point(state, &m.argmax.geometry, parameter))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeFamily {
    /// Squeezed vacuum of strength `r`.
    SqueezedVacuum,
    /// `f|0⟩⟨0| + (1-f)|2⟩⟨2|`.
    VacuumTwoPhoton,
}

impl BridgeFamily {
    pub fn state(self, parameter: f64) -> Result<State> {
        Ok(match self {
            BridgeFamily::SqueezedVacuum => State::Gaussian(GaussianState::new(C64::new(0.0, 0.0), parameter, 0.0, 0.0)?),
            BridgeFamily::VacuumTwoPhoton => State::Fock(FockDensityMatrix::vacuum_two_photon_mixture(parameter)?),
        })
    }
}

pub fn bridge_sweep(family: BridgeFamily, grid: &[f64], options: &MaximizeOptions) -> Result<Vec<BridgeResult>> {
    grid.par_iter()
        .map(|&x| optimal_bridge(&family.state(x)?, x, options))
        .collect()
}

pub fn sweep_csv(rows: &[BridgeResult]) -> String {
    let mut out = String::from("parameter,P,B,chain_ok\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.parameter, r.p, r.b, r.chain_ok));
    }
    out
}
