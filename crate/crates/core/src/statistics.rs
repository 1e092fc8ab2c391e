//! Finite-sample detection criteria, second moments of the test observables,
//! angle tolerance under an unknown squeezing phase, and success-probability
//! maps over Gaussian states.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{gaussian_optimal_for_state, signed_vertices, test_operator};
use crate::functionals::test_value;
use crate::geometry::{BaseRectangle, OrderParameter, PointGeometry, Shape};
use crate::linalg::CMatrix;
use crate::states::{FockDensityMatrix, GaussianState, State, DEFAULT_FOCK_DIM};
use crate::{Error, Result, C64};

/// The sample-mean criterion `⟨J⟩ > B_c + ΔJ/√N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDataCriterion {
    pub n: u64,
    pub mean: f64,
    pub std: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl FiniteDataCriterion {
    pub fn new(n: u64, mean: f64, std: f64, bound: f64) -> Self {
        let std = std.max(0.0);
        Self {
            n,
            mean,
            std,
            bound,
            satisfied: mean > bound + std / (n as f64).sqrt(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.bound + self.std / (self.n as f64).sqrt()
    }
}

/// Classical bound of an unsqueezed test kind.
pub fn classical_bound(kind: Shape) -> f64 {
    if kind.is_three_point() {
        1.0
    } else {
        2.0
    }
}

/// Mean and second moment `(tr ρH, tr ρH²)` of the test operator.
pub fn test_operator_moments(state: &State, g: &PointGeometry, s: OrderParameter) -> Result<(f64, f64)> {
    match state {
        State::Gaussian(st) => Ok(gaussian_moments(st, g, s)),
        State::Fock(rho) => fock_moments(rho, g, s),
    }
}

/// `⟨H²⟩ - ⟨H⟩²`; rounding below zero (down to -1e-10) is clipped.
pub fn test_operator_variance(state: &State, g: &PointGeometry, s: OrderParameter) -> Result<f64> {
    let (m, m2) = test_operator_moments(state, g, s)?;
    let var = m2 - m * m;
    if var < -1e-10 * (1.0 + m2.abs()) {
        return Err(Error::NonConvergence(format!("negative variance {var:e}")));
    }
    Ok(var.max(0.0))
}

pub fn finite_data_criterion(state: &State, g: &PointGeometry, s: OrderParameter, n: u64) -> Result<FiniteDataCriterion> {
    let (m, m2) = test_operator_moments(state, g, s)?;
    Ok(FiniteDataCriterion::new(n, m, (m2 - m * m).max(0.0).sqrt(), classical_bound(g.shape)))
}

fn gaussian_moments(st: &GaussianState, g: &PointGeometry, s: OrderParameter) -> (f64, f64) {
    let verts = signed_vertices(g);
    let mean = test_value(&State::Gaussian(*st), g, s);
    let mut second = 0.0;
    for (i, &(si, a)) in verts.iter().enumerate() {
        second += si * si * gaussian_pair(st, a, a, s).re;
        for &(sj, b) in &verts[i + 1..] {
            second += 2.0 * si * sj * gaussian_pair(st, a, b, s).re;
        }
    }
    (mean, second)
}

/// `tr[σ A(α) A(β)]` with `A(α) = D(α) T(s) D†(α)` for a Gaussian state.
pub fn gaussian_pair(st: &GaussianState, alpha: C64, beta: C64, s: OrderParameter) -> C64 {
    let gamma = st.covariance();
    let mean = st.displacement;
    let chi = |w: C64| {
        let u = [2.0 * w.im, -2.0 * w.re];
        let quad = u[0] * u[0] * gamma[(0, 0)] + 2.0 * u[0] * u[1] * gamma[(0, 1)] + u[1] * u[1] * gamma[(1, 1)];
        C64::new(-0.5 * quad, u[0] * mean.re + u[1] * mean.im).exp()
    };
    let sv = s.value();
    if sv == 0.0 {
        // Π(α)Π(β) = e^{-4i Im(αβ*)} D(2α - 2β)
        let phase = C64::new(0.0, -4.0 * (alpha * beta.conj()).im).exp();
        return phase * chi(2.0 * (alpha - beta));
    }
    // A(α) = (1-s)/(2π) ∫ d²ξ e^{s|ξ|²/2 + ξ*α - ξα*} D(ξ); the double
    // integral over (ξ, ζ) is Gaussian in z = (ξr, ξi, ζr, ζi).
    let jg = {
        // u = J(ξ + ζ), J = [[0, 2], [-2, 0]]
        let j = nalgebra::Matrix2::new(0.0, 2.0, -2.0, 0.0);
        let q = j.transpose() * gamma * j;
        let mut m = Matrix4::<f64>::zeros();
        for (bi, bj) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            m.fixed_view_mut::<2, 2>(bi, bj).copy_from(&q);
        }
        m
    };
    let re = Matrix4::<f64>::identity() * (-sv) + jg;
    let mut im = Matrix4::<f64>::zeros();
    im[(1, 2)] = -1.0;
    im[(2, 1)] = -1.0;
    im[(0, 3)] = 1.0;
    im[(3, 0)] = 1.0;
    let m = re.map(|x| C64::new(x, 0.0)) + im.map(|x| C64::new(0.0, x));
    let mj = {
        let j = nalgebra::Matrix2::new(0.0, 2.0, -2.0, 0.0);
        j.transpose() * nalgebra::Vector2::new(mean.re, mean.im)
    };
    let b = Vector4::new(
        C64::new(0.0, 2.0 * alpha.im + mj[0]),
        C64::new(0.0, -2.0 * alpha.re + mj[1]),
        C64::new(0.0, 2.0 * beta.im + mj[0]),
        C64::new(0.0, -2.0 * beta.re + mj[1]),
    );
    let inv = m.try_inverse().expect("positive-definite real part");
    let expo = 0.5 * (b.transpose() * inv * b)[(0, 0)];
    // √det M on the branch continuous from the real part
    let eig = SymmetricEigen::new(re);
    let inv_half = eig.eigenvectors * Matrix4::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * eig.eigenvectors.transpose();
    let rel = SymmetricEigen::new(inv_half * im * inv_half);
    let mut sqrt_det = C64::new(eig.eigenvalues.iter().product::<f64>().sqrt(), 0.0);
    for l in rel.eigenvalues.iter() {
        sqrt_det *= C64::new(1.0, *l).sqrt();
    }
    (1.0 - sv) * (1.0 - sv) * expo.exp() / sqrt_det
}

/// Fock-space working dimension that holds `H ρ` for a state of dimension
/// `dim` and vertices up to `|α| = reach`.
fn padded_dim(dim: usize, reach: f64) -> usize {
    let r = (dim as f64).sqrt() + 2.0 * reach + 7.0;
    dim.max((r * r).ceil() as usize + 10)
}

fn fock_second_moment(rho: &FockDensityMatrix, g: &PointGeometry, s: OrderParameter, work: usize) -> (f64, f64) {
    let d = rho.dim();
    let h = test_operator(g, s, work);
    let rows: CMatrix = h.rows(0, d).into_owned();
    let h2 = &rows * rows.adjoint();
    let r = rho.matrix();
    let mean = (r * h.view((0, 0), (d, d))).trace().re;
    let second = (r * h2).trace().re;
    (mean, second)
}

fn fock_moments(rho: &FockDensityMatrix, g: &PointGeometry, s: OrderParameter) -> Result<(f64, f64)> {
    let reach = signed_vertices(g).iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
    let work = padded_dim(rho.dim(), reach);
    let cap = 4 * DEFAULT_FOCK_DIM.max(rho.dim());
    if work > cap {
        return Err(Error::DimensionOverflow { requested: work, cap });
    }
    let a = fock_second_moment(rho, g, s, work);
    let b = fock_second_moment(rho, g, s, work + 20);
    let delta = (a.1 - b.1).abs();
    if delta > 1e-8 * (1.0 + b.1.abs()) {
        return Err(Error::Truncation {
            dim: work,
            tail: delta,
            limit: 1e-8,
        });
    }
    Ok(b)
}

pub const DEFAULT_ANGLE_RESOLUTION: usize = 512;

/// Base rectangle (in the known-phase frame, centred on the state mean)
/// used for the phase-unknown scan.
pub fn optimal_base(state: &GaussianState, s: OrderParameter, kind: Shape) -> BaseRectangle {
    let centred = GaussianState {
        displacement: C64::new(0.0, 0.0),
        ..*state
    };
    gaussian_optimal_for_state(&centred, s, kind.unsqueezed()).1.base
}

fn rotated_test(state: &GaussianState, base: BaseRectangle, theta: f64, kind: Shape) -> PointGeometry {
    let g = if kind.is_three_point() {
        PointGeometry::right_triangle(base, theta)
    } else {
        PointGeometry::rectangle(base, theta)
    };
    g.translated(state.displacement)
}

/// Total measure `Δ` of frame angles `θ - φ ∈ [0, π/2)` satisfying the
/// finite-data criterion, sampled at `resolution` midpoints. `base` defaults
/// to the known-phase optimum.
pub fn angle_tolerance(
    state: &GaussianState,
    s: OrderParameter,
    kind: Shape,
    n: u64,
    base: Option<BaseRectangle>,
    resolution: usize,
) -> f64 {
    let kind = kind.unsqueezed();
    let base = base.unwrap_or_else(|| optimal_base(state, s, kind));
    let bound = classical_bound(kind);
    let step = FRAC_PI_2 / resolution as f64;
    let hits = (0..resolution)
        .filter(|&i| {
            let theta = state.squeeze_axis + (i as f64 + 0.5) * step;
            let g = rotated_test(state, base, theta, kind);
            let (m, m2) = gaussian_moments(state, &g, s);
            m > bound && FiniteDataCriterion::new(n, m, (m2 - m * m).max(0.0).sqrt(), bound).satisfied
        })
        .count();
    hits as f64 * step
}

/// `P_s = Δ / (π/2)` over a `(μ, κ₀)` grid of squeezed thermal states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbabilityMap {
    pub mus: Vec<f64>,
    pub kappas: Vec<f64>,
    /// `values[i][j]` at `(mus[i], kappas[j])`.
    pub values: Vec<Vec<f64>>,
    pub s: OrderParameter,
    pub kind: Shape,
    pub n: u64,
}

impl SuccessProbabilityMap {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Smallest purity on the grid with `P_s > 0` at `kappas[j]`.
    pub fn frontier(&self, j: usize) -> Option<f64> {
        self.mus
            .iter()
            .zip(&self.values)
            .filter(|(_, row)| row[j] > 0.0)
            .map(|(m, _)| *m)
            .reduce(f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,kappa0,P_s\n");
        for (i, mu) in self.mus.iter().enumerate() {
            for (j, k) in self.kappas.iter().enumerate() {
                out.push_str(&format!("{mu},{k},{}\n", self.values[i][j]));
            }
        }
        out
    }
}

pub fn success_probability_map(
    mus: &[f64],
    kappas: &[f64],
    s: OrderParameter,
    kind: Shape,
    n: u64,
    resolution: usize,
) -> Result<SuccessProbabilityMap> {
    let mut cells = Vec::with_capacity(mus.len() * kappas.len());
    for &mu in mus {
        for &k in kappas {
            cells.push(GaussianState::from_purity_kappa(mu, k)?);
        }
    }
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|st| angle_tolerance(st, s, kind, n, None, resolution) / FRAC_PI_2)
        .collect();
    let values = flat.chunks(kappas.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(SuccessProbabilityMap {
        mus: mus.to_vec(),
        kappas: kappas.to_vec(),
        values,
        s,
        kind: kind.unsqueezed(),
        n,
    })
}

/// Simulated experiment: `n` outcomes drawn from the spectral measure of the
/// test operator, returning the sample mean and standard deviation.
pub fn sample_test_outcomes(
    rho: &FockDensityMatrix,
    g: &PointGeometry,
    s: OrderParameter,
    n: usize,
    rng: &mut impl rand::Rng,
) -> (f64, f64) {
    use rand::distr::{weighted::WeightedIndex, Distribution};
    let reach = signed_vertices(g).iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
    let work = padded_dim(rho.dim(), reach);
    let h = test_operator(g, s, work);
    let (vals, vecs) = crate::linalg::hermitian_eigen(&h);
    let mut padded = CMatrix::zeros(work, work);
    padded.view_mut((0, 0), (rho.dim(), rho.dim())).copy_from(rho.matrix());
    let weights: Vec<f64> = (0..work)
        .map(|k| {
            let v = vecs.column(k);
            (v.adjoint() * &padded * v)[(0, 0)].re.max(0.0)
        })
        .collect();
    let dist = WeightedIndex::new(&weights).expect("non-degenerate spectral weights");
    let draws: Vec<f64> = (0..n).map(|_| vals[dist.sample(rng)]).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(v: f64) -> OrderParameter {
        OrderParameter::new(v).unwrap()
    }

    #[test]
    fn criterion_threshold() {
        let c = FiniteDataCriterion::new(100, 2.2, 1.0, 2.0);
        assert_abs_diff_eq!(c.threshold(), 2.1, epsilon = 1e-15);
        assert!(c.satisfied);
        assert!(!FiniteDataCriterion::new(4, 2.2, 1.0, 2.0).satisfied);
    }

    #[test]
    fn vacuum_coincident_points_have_no_spread() {
        let g = PointGeometry::rectangle(BaseRectangle::new(0.0, 0.0, 0.0, 0.0), 0.0);
        let v = test_operator_variance(&State::Gaussian(GaussianState::vacuum()), &g, s(0.0)).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_pairs_match_fock() {
        let st = GaussianState::new(C64::new(0.2, -0.1), 0.4, 0.3, 0.1).unwrap();
        let rho = st.to_fock(60).unwrap();
        let g = PointGeometry::rectangle(BaseRectangle::new(-0.2, 0.1, 0.35, -0.4), 0.7);
        for sv in [0.0, -0.3, -1.0, -1.7] {
            let (ma, sa) = gaussian_moments(&st, &g, s(sv));
            let (mb, sb) = fock_moments(&rho, &g, s(sv)).unwrap();
            assert_abs_diff_eq!(ma, mb, epsilon = 1e-9);
            assert_abs_diff_eq!(sa, sb, epsilon = 1e-9);
        }
    }

    #[test]
    fn s_zero_is_the_limit_of_the_integral_route() {
        let st = GaussianState::new(C64::new(-0.3, 0.2), 0.6, 1.1, 0.2).unwrap();
        let (a, b) = (C64::new(0.1, 0.4), C64::new(-0.5, 0.2));
        let lim = gaussian_pair(&st, a, b, s(-1e-7));
        let exact = gaussian_pair(&st, a, b, s(0.0));
        assert_abs_diff_eq!(lim.re, exact.re, epsilon = 1e-6);
        assert_abs_diff_eq!(lim.im, exact.im, epsilon = 1e-6);
    }

    #[test]
    fn number_states_are_eigenstates_at_the_origin() {
        // all vertices at the origin: H = 2 T(s), diagonal in the number basis
        let g = PointGeometry::rectangle(BaseRectangle::new(0.0, 0.0, 0.0, 0.0), 0.0);
        for n in [0, 1, 3] {
            let rho = FockDensityMatrix::number_state(n, 8);
            for sv in [0.0, -0.5] {
                let var = test_operator_variance(&State::Fock(rho.clone()), &g, s(sv)).unwrap();
                assert_abs_diff_eq!(var, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn variance_agrees_with_spectral_sampling() {
        let st = GaussianState::from_purity_kappa(0.9, 1.2).unwrap();
        let (_, g) = gaussian_optimal_for_state(&st, s(0.0), Shape::Rectangle);
        let var = test_operator_variance(&State::Gaussian(st), &g, s(0.0)).unwrap();
        assert!(var > 0.0);
        let rho = st.to_fock(60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        let (m, sd) = sample_test_outcomes(&rho, &g, s(0.0), n, &mut rng);
        // standard error of a sample variance ≈ σ²·√(2/n) for moderate kurtosis
        let se = 4.0 * var * (2.0 / n as f64).sqrt();
        assert!((sd * sd - var).abs() < 3.0 * se, "{} vs {var}", sd * sd);
        assert!((m - test_value(&State::Gaussian(st), &g, s(0.0))).abs() < 3.0 * (var / n as f64).sqrt() + 1e-3);
    }

    #[test]
    fn factorised_frame_never_succeeds() {
        let st = GaussianState::squeezed_vacuum(0.8, 0.3);
        let base = optimal_base(&st, s(0.0), Shape::Rectangle);
        for theta in [st.squeeze_axis, st.squeeze_axis + FRAC_PI_2] {
            let g = rotated_test(&st, base, theta, Shape::Rectangle);
            let c = finite_data_criterion(&State::Gaussian(st), &g, s(0.0), 1_000_000_000).unwrap();
            assert!(!c.satisfied, "{c:?}");
        }
    }

    #[test]
    fn tolerance_grows_with_data_and_is_bounded() {
        let st = GaussianState::squeezed_vacuum(0.5 * (1.5f64 / 2.0).atanh(), 0.0);
        let mut prev = 0.0;
        for n in [1_000u64, 100_000, 1_000_000, 1_000_000_000_000] {
            let d = angle_tolerance(&st, s(0.0), Shape::Rectangle, n, None, 256);
            assert!(d + 1e-15 >= prev && d <= FRAC_PI_2);
            prev = d;
        }
        let d6 = angle_tolerance(&st, s(0.0), Shape::Rectangle, 1_000_000, None, 256);
        assert!(d6 > 0.9 * prev, "{d6} vs {prev}");
    }

    #[test]
    fn tolerance_is_symmetric_about_the_diagonal() {
        let st = GaussianState::from_purity_kappa(0.95, 1.6).unwrap();
        let base = optimal_base(&st, s(0.0), Shape::RightTriangle);
        let res = 128;
        let step = FRAC_PI_2 / res as f64;
        let ok: Vec<bool> = (0..res)
            .map(|i| {
                let g = rotated_test(&st, base, (i as f64 + 0.5) * step, Shape::RightTriangle);
                finite_data_criterion(&State::Gaussian(st), &g, s(0.0), 100_000).unwrap().satisfied
            })
            .collect();
        let flips = (0..res).filter(|&i| ok[i] != ok[res - 1 - i]).count();
        assert!(flips <= 2, "{flips}");
    }

    #[test]
    fn below_threshold_purity_never_detected() {
        for (kind, mu) in [(Shape::Rectangle, 0.84), (Shape::RightTriangle, 0.49)] {
            let st = GaussianState::from_purity_kappa(mu, 1.98).unwrap();
            assert_eq!(angle_tolerance(&st, s(0.0), kind, u64::MAX, None, 128), 0.0);
        }
    }

    #[test]
    fn map_csv_and_frontier() {
        let m = success_probability_map(&[0.5, 0.95], &[1.8], s(0.0), Shape::Rectangle, 100_000, 64).unwrap();
        assert_eq!(m.at(0, 0), 0.0);
        assert!(m.at(1, 0) > 0.0);
        assert_eq!(m.frontier(0), Some(0.95));
        assert!(m.to_csv().starts_with("mu,kappa0,P_s\n"));
    }
}
