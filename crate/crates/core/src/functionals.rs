//! The four test functionals (rectangle, right triangle, parallelogram,
//! sheared triangle), their bounds and verdicts, and the two-mode bridge
//! quantities built on the parallelogram vertices.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::bounds::gaussian_mixture_bound;
use crate::geometry::{OrderParameter, PointGeometry, Shape, Vertex};
use crate::quasiprob::eval;
use crate::states::{bw_two_mode_wigner, State};
use crate::{Error, Result, C64, VIOLATION_MARGIN};

pub type TestKind = Shape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub value: f64,
    pub s: OrderParameter,
    pub kind: TestKind,
    pub classical_bound: f64,
    /// Bound used for the non-Gaussianity verdict.
    pub gaussian_mixture_bound: f64,
    /// Gaussian maximum at `s = 0` (`8/3^{9/8}` or 2).
    pub gaussian_bound_s0: f64,
    /// Gaussian maximum at this `s`.
    pub gaussian_bound_at_s: f64,
    pub algebraic_range: (f64, f64),
    /// `None` for the squeezed kinds, which do not witness nonclassicality.
    pub nonclassical: Option<bool>,
    pub genuinely_non_gaussian: bool,
    pub classical_margin: f64,
    pub gaussian_margin: f64,
    pub degenerate: bool,
    pub points: Vec<LabelledPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledPoint {
    pub label: String,
    pub q: f64,
    pub p: f64,
    pub scaled: f64,
}

impl TestResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("test result serialises")
    }
}

/// Signed sum of scaled values over the geometry's vertices.
pub fn test_value(state: &State, g: &PointGeometry, s: OrderParameter) -> f64 {
    g.points()
        .into_iter()
        .map(|(v, p)| v.sign() * eval(state, p, s).scaled)
        .sum()
}

/// `[(2s+4)/(s-1), (2s-4)/(s-1)]` (four points) or `[(s+3)/(s-1), (s-3)/(s-1)]`
/// (three points) for `-1 ≤ s ≤ 0`; `(-1, 3)` and `(-1, 2)` below.
pub fn algebraic_range(s: OrderParameter, three_point: bool) -> (f64, f64) {
    let sv = s.value();
    match (three_point, sv < -1.0) {
        (false, false) => ((2.0 * sv + 4.0) / (sv - 1.0), (2.0 * sv - 4.0) / (sv - 1.0)),
        (true, false) => ((sv + 3.0) / (sv - 1.0), (sv - 3.0) / (sv - 1.0)),
        (false, true) => (-1.0, 3.0),
        (true, true) => (-1.0, 2.0),
    }
}

/// Checked variant taking a raw `s`.
pub fn algebraic_range_for(s: f64, three_point: bool) -> Result<(f64, f64)> {
    Ok(algebraic_range(OrderParameter::new(s)?, three_point))
}

/// Evaluates the functional matching the geometry's shape.
pub fn evaluate(state: &State, g: &PointGeometry, s: OrderParameter) -> TestResult {
    let kind = g.shape;
    let three = kind.is_three_point();
    let mut value = 0.0;
    let mut points = Vec::new();
    for (v, p) in g.points() {
        let scaled = eval(state, p, s).scaled;
        value += v.sign() * scaled;
        points.push(LabelledPoint {
            label: v.label().to_string(),
            q: p.q,
            p: p.p,
            scaled,
        });
    }
    let classical = if three { 1.0 } else { 2.0 };
    let s0 = gaussian_mixture_bound(OrderParameter::WIGNER, three);
    let at_s = gaussian_mixture_bound(s, three);
    let gaussian = if kind.is_squeezed() { s0 } else { at_s };
    TestResult {
        value,
        s,
        kind,
        classical_bound: classical,
        gaussian_mixture_bound: gaussian,
        gaussian_bound_s0: s0,
        gaussian_bound_at_s: at_s,
        algebraic_range: algebraic_range(s, three),
        nonclassical: if kind.is_squeezed() {
            None
        } else {
            Some(value > classical + VIOLATION_MARGIN)
        },
        genuinely_non_gaussian: value > gaussian + VIOLATION_MARGIN,
        classical_margin: value - classical,
        gaussian_margin: value - gaussian,
        degenerate: g.is_degenerate(),
        points,
    }
}

fn expect_shape(g: &PointGeometry, shape: Shape) -> Result<()> {
    if g.shape != shape {
        return Err(Error::InvalidGeometry(format!(
            "expected a {} geometry, got {}",
            shape.name(),
            g.shape.name()
        )));
    }
    Ok(())
}

pub fn rectangle_test(state: &State, g: &PointGeometry, s: OrderParameter) -> Result<TestResult> {
    expect_shape(g, Shape::Rectangle)?;
    Ok(evaluate(state, g, s))
}

pub fn triangle_test(state: &State, g: &PointGeometry, s: OrderParameter) -> Result<TestResult> {
    expect_shape(g, Shape::RightTriangle)?;
    Ok(evaluate(state, g, s))
}

pub fn parallelogram_test(state: &State, g: &PointGeometry, s: OrderParameter) -> Result<TestResult> {
    expect_shape(g, Shape::Parallelogram)?;
    Ok(evaluate(state, g, s))
}

pub fn sheared_triangle_test(state: &State, g: &PointGeometry, s: OrderParameter) -> Result<TestResult> {
    expect_shape(g, Shape::ShearedTriangle)?;
    Ok(evaluate(state, g, s))
}

/// Diagonals `D_a = S₁₁ - S₀₀` and `D_b = S₁₀ - S₀₁` of the vertex set.
pub fn diagonals(g: &PointGeometry) -> (C64, C64) {
    (
        g.vertex(Vertex::V11) - g.vertex(Vertex::V00),
        g.vertex(Vertex::V10) - g.vertex(Vertex::V01),
    )
}

/// Two-mode points `(α₀, α₁, β₀, β₁)` built from the single-mode vertices.
pub fn bw_points(g: &PointGeometry) -> (C64, C64, C64, C64) {
    let s00 = g.vertex(Vertex::V00);
    let s10 = g.vertex(Vertex::V10);
    let s01 = g.vertex(Vertex::V01);
    let s11 = g.vertex(Vertex::V11);
    let c = 0.5 * FRAC_1_SQRT_2;
    (
        (2.0 * s00 - s10 + s01) * c,
        (2.0 * s11 + s10 - s01) * c,
        (2.0 * s00 + s10 - s01) * c,
        (2.0 * s11 - s10 + s01) * c,
    )
}

/// Two-mode phase-space Bell quantity of the state mixed with vacuum on a
/// 50:50 beam splitter, at the points of [`bw_points`]. Any four-point
/// geometry is accepted; the Wigner function is used throughout.
pub fn bw_test(state: &State, g: &PointGeometry) -> f64 {
    let (a0, a1, b0, b1) = bw_points(g);
    let w = |a, b| bw_two_mode_wigner(state, a, b);
    let pi2 = std::f64::consts::PI.powi(2) / 4.0;
    pi2 * (w(a0, b0) + w(a1, b0) + w(a0, b1) - w(a1, b1))
}

/// `N[ρ] - 2 exp(½ max(|D_a|, |D_b|)²)` at `s = 0`.
pub fn cst_margin(state: &State, g: &PointGeometry) -> f64 {
    let four = g.with_shape(Shape::Parallelogram).expect("four-point relabel");
    let n = test_value(state, &four, OrderParameter::WIGNER);
    let (da, db) = diagonals(g);
    let dmax = da.norm().max(db.norm());
    n - 2.0 * (0.5 * dmax * dmax).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BaseRectangle, SqueezeMap};
    use crate::states::{FockDensityMatrix, GaussianState};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn s(v: f64) -> OrderParameter {
        OrderParameter::new(v).unwrap()
    }

    fn vac() -> State {
        State::Gaussian(GaussianState::vacuum())
    }

    #[test]
    fn coincident_points_on_vacuum() {
        let g = PointGeometry::rectangle(BaseRectangle::new(0.0, 0.0, 0.0, 0.0), 0.0);
        let r = rectangle_test(&vac(), &g, OrderParameter::WIGNER).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-15);
        assert_eq!(r.nonclassical, Some(false));
        assert!(r.degenerate);
        let t = triangle_test(&vac(), &g.with_shape(Shape::RightTriangle).unwrap(), OrderParameter::WIGNER).unwrap();
        assert_abs_diff_eq!(t.value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn algebraic_ranges() {
        assert_eq!(algebraic_range(OrderParameter::WIGNER, false), (-4.0, 4.0));
        assert_eq!(algebraic_range(OrderParameter::WIGNER, true), (-3.0, 3.0));
        assert_eq!(algebraic_range(OrderParameter::HUSIMI, false), (-1.0, 3.0));
        assert_eq!(algebraic_range(OrderParameter::HUSIMI, true), (-1.0, 2.0));
        assert_eq!(algebraic_range(s(-2.0), false), (-1.0, 3.0));
        assert!(algebraic_range_for(0.1, false).is_err());
    }

    #[test]
    fn shape_is_checked() {
        let g = PointGeometry::rectangle(BaseRectangle::from_sides(1.0, 1.0), 0.0);
        assert!(triangle_test(&vac(), &g, OrderParameter::WIGNER).is_err());
        assert!(parallelogram_test(&vac(), &g, OrderParameter::WIGNER).is_err());
    }

    #[test]
    fn identity_squeeze_matches_unsqueezed_tests() {
        let st = State::Gaussian(GaussianState::new(C64::new(0.2, 0.1), 0.5, 0.3, 0.1).unwrap());
        let base = BaseRectangle::new(-0.2, 0.1, 0.5, 0.6);
        for (plain, squeezed) in [
            (PointGeometry::rectangle(base, 0.7), PointGeometry::parallelogram(base, 0.7, SqueezeMap::identity())),
            (PointGeometry::right_triangle(base, 0.7), PointGeometry::sheared_triangle(base, 0.7, SqueezeMap::identity())),
        ] {
            let a = evaluate(&st, &plain, s(-0.3)).value;
            let b = evaluate(&st, &squeezed, s(-0.3)).value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn squeezed_kinds_use_wigner_bounds_and_skip_nonclassicality() {
        let g = PointGeometry::parallelogram(BaseRectangle::from_sides(0.4, 0.4), 0.0, SqueezeMap::new(0.5, 0.0).unwrap());
        let r = evaluate(&vac(), &g, s(-0.5));
        assert_eq!(r.nonclassical, None);
        assert_eq!(r.gaussian_mixture_bound, crate::four_point_gaussian_bound());
        assert!(r.gaussian_bound_at_s < r.gaussian_bound_s0);
        let json = r.to_json();
        assert!(json.contains("\"gaussian_bound_s0\""));
        assert!(json.contains("\"nonclassical\": null"));
    }

    #[test]
    fn vertex_identity_and_bw_decomposition() {
        let rho = State::Fock(FockDensityMatrix::vacuum_two_photon_mixture(0.3).unwrap());
        let g = PointGeometry::parallelogram(BaseRectangle::new(0.1, -0.3, 0.6, 0.4), 0.9, SqueezeMap::new(0.8, 0.2).unwrap());
        let v = |x| g.vertex(x);
        let gap = v(Vertex::V00) + v(Vertex::V11) - v(Vertex::V10) - v(Vertex::V01);
        assert!(gap.norm() < 1e-12);
        let (da, db) = diagonals(&g);
        let sc = |x| eval(&rho, crate::PhaseSpacePoint::from_complex(v(x)), OrderParameter::WIGNER).scaled;
        let two_term = (sc(Vertex::V00) - sc(Vertex::V11)) * (-0.5 * db.norm_sqr()).exp()
            + (sc(Vertex::V10) + sc(Vertex::V01)) * (-0.5 * da.norm_sqr()).exp();
        assert_abs_diff_eq!(bw_test(&rho, &g), two_term, epsilon = 1e-10);
    }

    #[test]
    fn bw_vacuum_and_degenerate_margin() {
        let g = PointGeometry::parallelogram(BaseRectangle::new(0.0, 0.0, 0.0, 0.0), 0.0, SqueezeMap::identity());
        assert!(bw_test(&vac(), &g) <= 2.0 + 1e-12);
        let p = cst_margin(&vac(), &g);
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-12);
        let g = PointGeometry::parallelogram(BaseRectangle::from_sides(0.5, 0.7), 0.3, SqueezeMap::identity());
        assert!(cst_margin(&vac(), &g) < 0.0);
        assert!(bw_test(&vac(), &g) <= 2.0);
    }

    #[test]
    fn coherent_values_respect_classical_bounds() {
        let st = State::Gaussian(GaussianState::coherent(C64::new(0.4, -0.7)));
        let base = BaseRectangle::new(0.1, 0.2, 0.9, -0.4);
        for sv in [0.0, -0.5, -1.0, -2.0] {
            for th in [0.0, 0.4, PI / 4.0, 2.0] {
                let r = evaluate(&st, &PointGeometry::rectangle(base, th), s(sv)).value;
                assert!(r > -1.0 && r <= 2.0 + 1e-12);
                let t = evaluate(&st, &PointGeometry::right_triangle(base, th), s(sv)).value;
                assert!(t > -1.0 && t <= 1.0 + 1e-12);
            }
        }
    }
}
