use nalgebra::DMatrix;
use proptest::prelude::*;

use phasebell::functionals::test_value;
use phasebell::quasiprob::eval;
use phasebell::states::{apply_loss, mix_with_ancilla, DEFAULT_PRODUCT_CAP};
use phasebell::{BaseRectangle, FockDensityMatrix, GaussianState, LossChannel, OrderParameter, PhaseSpacePoint, PointGeometry, Shape, SqueezeMap, State, C64};

/// Random full-rank density matrix `(A A† + εI) / tr` on `dim` levels.
fn density(dim: usize, entries: &[f64]) -> FockDensityMatrix {
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        C64::new(entries[k], entries[k + 1])
    });
    let rho = &a * a.adjoint() + DMatrix::identity(dim, dim).map(|z: C64| z * 1e-3);
    let tr = rho.trace().re;
    let rho = rho.map(|z| z / tr);
    let rho = (&rho + rho.adjoint()).map(|z| z * 0.5);
    FockDensityMatrix::new(rho).unwrap()
}

fn fock_state(max_dim: usize) -> impl Strategy<Value = FockDensityMatrix> {
    (1..=max_dim).prop_flat_map(|d| prop::collection::vec(-1.0..1.0f64, 2 * d * d).prop_map(move |e| density(d, &e)))
}

fn gaussian_state() -> impl Strategy<Value = GaussianState> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.0..1.2f64, 0.0..3.2f64, 0.0..1.0f64)
        .prop_map(|(x, y, r, phi, n)| GaussianState::new(C64::new(x, y), r, phi, n).unwrap())
}

fn any_state() -> impl Strategy<Value = State> {
    prop_oneof![fock_state(5).prop_map(State::Fock), gaussian_state().prop_map(State::Gaussian)]
}

fn point() -> impl Strategy<Value = C64> {
    (-1.5..1.5f64, -1.5..1.5f64).prop_map(|(x, y)| C64::new(x, y))
}

fn geometry() -> impl Strategy<Value = PointGeometry> {
    (
        prop::array::uniform4(-1.0..1.0f64),
        0.0..3.2f64,
        0.0..1.0f64,
        0.0..3.2f64,
        prop::sample::select(vec![Shape::Rectangle, Shape::RightTriangle, Shape::Parallelogram, Shape::ShearedTriangle]),
    )
        .prop_map(|([x0, y0, x1, y1], theta, r, axis, shape)| {
            let squeeze = shape.is_squeezed().then(|| SqueezeMap::new(r, axis).unwrap());
            PointGeometry::new(BaseRectangle::new(x0, y0, x1, y1), theta, squeeze, shape).unwrap()
        })
}

fn order() -> impl Strategy<Value = OrderParameter> {
    (-2.0..=0.0f64).prop_map(|s| OrderParameter::new(s).unwrap())
}

fn scaled(state: &State, alpha: C64, s: OrderParameter) -> f64 {
    eval(state, PhaseSpacePoint::from_complex(alpha), s).scaled
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_matches_smoothing(
        rho in fock_state(5),
        eta in prop::sample::select(vec![0.5, 1.0 / 3.0, 0.8]),
        alphas in prop::collection::vec(point(), 20),
    ) {
        let s = OrderParameter::new(1.0 - 1.0 / eta).unwrap();
        let lossy = State::Fock(apply_loss(&rho, LossChannel::new(eta).unwrap()));
        let rho = State::Fock(rho);
        for a in alphas {
            let lhs = scaled(&rho, a / eta.sqrt(), s);
            let rhs = scaled(&lossy, a, OrderParameter::WIGNER);
            prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn squeezing_moves_wigner_points(
        rho in fock_state(4),
        r in 0.0..0.8f64,
        phi in 0.0..3.2f64,
        alphas in prop::collection::vec(point(), 10),
    ) {
        let dim = 100;
        let sq = State::Fock(rho.squeezed(r, phi, dim));
        let map = SqueezeMap::new(r, phi).unwrap();
        let rho = State::Fock(rho);
        for a in alphas {
            let lhs = scaled(&sq, a, OrderParameter::WIGNER);
            let rhs = scaled(&rho, map.apply(a), OrderParameter::WIGNER);
            prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn displacement_and_rotation_invariance(
        state in any_state(),
        g in geometry(),
        s in order(),
        beta in point(),
        phi in 0.0..6.3f64,
    ) {
        let state = match state {
            State::Fock(f) => State::Fock(f.resized(60)),
            other => other,
        };
        let base = test_value(&state, &g, s);
        let shifted = test_value(&state.displaced(beta), &g.translated(beta), s);
        prop_assert!((base - shifted).abs() < 1e-9, "displacement {base} vs {shifted}");
        let squeeze = g.squeeze.map(|m| SqueezeMap::new(m.strength, m.axis + phi).unwrap());
        let turned = PointGeometry::new(g.base, g.theta + phi, squeeze, g.shape).unwrap();
        let rotated = test_value(&state.rotated(phi), &turned, s);
        prop_assert!((base - rotated).abs() < 1e-9, "rotation {base} vs {rotated}");
    }

    #[test]
    fn functionals_are_linear_in_the_state(
        a in fock_state(5),
        b in fock_state(5),
        p in 0.0..1.0f64,
        g in geometry(),
        s in order(),
    ) {
        let mix = FockDensityMatrix::mixture(&[(p, &a), (1.0 - p, &b)]).unwrap();
        let lhs = test_value(&State::Fock(mix), &g, s);
        let rhs = p * test_value(&State::Fock(a), &g, s) + (1.0 - p) * test_value(&State::Fock(b), &g, s);
        prop_assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn squeezed_reservoir_identity(
        rho in fock_state(3),
        s in -1.5..-0.2f64,
        r in 0.0..0.4f64,
        phi in 0.0..3.2f64,
        alphas in prop::collection::vec(point(), 6),
    ) {
        let dim = 28;
        let eta = 1.0 / (1.0 - s);
        let sq = rho.squeezed(r, phi, dim);
        let anc = FockDensityMatrix::vacuum(1).squeezed(r, phi, dim);
        let out = State::Fock(mix_with_ancilla(&sq, &anc, eta, DEFAULT_PRODUCT_CAP).unwrap());
        let map = SqueezeMap::new(r, phi).unwrap();
        let s = OrderParameter::new(s).unwrap();
        let rho = State::Fock(rho);
        for a in alphas {
            let lhs = scaled(&rho, map.apply(a), s);
            let rhs = scaled(&out, a / (1.0 - s.value()).sqrt(), OrderParameter::WIGNER);
            prop_assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scaled_values_respect_their_range(state in any_state(), alpha in point(), s in -3.0..=0.0f64) {
        let v = scaled(&state, alpha, OrderParameter::new(s).unwrap());
        prop_assert!(v <= 1.0 + 1e-9, "{v} above 1");
        if s >= -1.0 {
            prop_assert!(v >= (s + 1.0) / (s - 1.0) - 1e-9, "{v} below the lower end at s = {s}");
        } else {
            prop_assert!(v > -1e-9, "{v} negative at s = {s}");
        }
    }
}
