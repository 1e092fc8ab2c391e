//! Derivative-free optimisation: a box-constrained Nelder–Mead, a seeded
//! multi-start driver, and the loss-sweep problems built on them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::test_operator;
use crate::functionals::{diagonals, test_value};
use crate::geometry::{BaseRectangle, OrderParameter, PointGeometry, Shape, SqueezeMap};
use crate::linalg::{hermitian_extremes, top_eigenpair, CMatrix};
use crate::special::ln_binomial;
use crate::states::{apply_loss, FockDensityMatrix, GaussianState, LossChannel, State};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub ftol: f64,
    /// ... and the simplex diameter below this.
    pub xtol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
    /// Number of restarts from the best vertex after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            ftol: 1e-13,
            xtol: 1e-9,
            initial_step: 0.1,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Minimises `f` over the box `[lower, upper]`; trial points are projected
/// back into the box.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n, "bounds must match the dimension");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_x = x0.to_vec();
    project(&mut best_x, lower, upper);
    let mut best_v = eval(&best_x, &mut evals);
    let mut converged = false;
    for _ in 0..=opts.restarts {
        let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
        for i in 0..n {
            let mut v = best_x.clone();
            let width = (upper[i] - lower[i]).min(10.0).max(1e-12);
            let step = opts.initial_step * width;
            v[i] = if v[i] + step <= upper[i] { v[i] + step } else { v[i] - step };
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();
        converged = false;
        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            let spread = (values[n] - values[0]).abs();
            let diameter = simplex[1..]
                .iter()
                .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread <= opts.ftol * (1.0 + values[0].abs()) && diameter <= opts.xtol {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
                project(&mut p, lower, upper);
                p
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
            } else {
                let (xc, fc) = if fr < values[n] {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < values[n].min(fr) {
                    simplex[n] = xc;
                    values[n] = fc;
                } else {
                    for i in 1..=n {
                        let mut p: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                        project(&mut p, lower, upper);
                        values[i] = eval(&p, &mut evals);
                        simplex[i] = p;
                    }
                }
            }
        }
        let (i_best, v) = values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty simplex");
        let improved = v < best_v - opts.ftol * (1.0 + best_v.abs());
        if v <= best_v {
            best_v = v;
            best_x = simplex[i_best].clone();
        }
        if evals >= opts.max_evals || (!improved && converged) {
            break;
        }
    }
    Minimum {
        x: best_x,
        value: best_v,
        evals,
        converged,
    }
}

/// Maximises `f`; the returned `value` is the maximum.
pub fn nelder_mead_max(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let mut m = nelder_mead(|x| -f(x), x0, lower, upper, opts);
    m.value = -m.value;
    m
}

/// Golden-section maximisation of a unimodal function on `[a, b]`.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Test functional being maximised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    J,
    JPrime,
    N,
    NPrime,
    /// `N - 2 exp(max(|D_a|, |D_b|)²/2)` on the parallelogram.
    P,
}

impl Objective {
    pub fn shape(self) -> Shape {
        match self {
            Objective::J => Shape::Rectangle,
            Objective::JPrime => Shape::RightTriangle,
            Objective::N | Objective::P => Shape::Parallelogram,
            Objective::NPrime => Shape::ShearedTriangle,
        }
    }

    /// Gaussian-mixture bound at `s = 0` (used for every `s`), or the
    /// classical bound for the bridge quantity.
    pub fn bound(self) -> f64 {
        match self {
            Objective::J | Objective::N => crate::four_point_gaussian_bound(),
            Objective::JPrime | Objective::NPrime => crate::THREE_POINT_GAUSSIAN_BOUND,
            Objective::P => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::J => "J",
            Objective::JPrime => "J'",
            Objective::N => "N",
            Objective::NPrime => "N'",
            Objective::P => "P",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "J" | "j" => Ok(Objective::J),
            "J'" | "j'" | "Jp" | "jp" => Ok(Objective::JPrime),
            "N" | "n" => Ok(Objective::N),
            "N'" | "n'" | "Np" | "np" => Ok(Objective::NPrime),
            "P" | "p" => Ok(Objective::P),
            other => Err(Error::param("objective", format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    Fixed(State),
    /// `Σ_{n ≤ n_trunc} C_n |n⟩`, coefficients optimised.
    Superposition { n_trunc: usize },
    /// Squeezed thermal states of fixed purity; squeezing optimised.
    Gaussian { purity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableBlock {
    Geometry,
    Squeeze,
    Coefficients,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizeOptions {
    pub starts: usize,
    pub seed: u64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0,
            nelder_mead: NelderMeadOptions {
                max_evals: 3000,
                ftol: 1e-12,
                xtol: 1e-8,
                initial_step: 0.15,
                restarts: 2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    pub objective: Objective,
    pub family: StateFamily,
    pub s: OrderParameter,
    pub channel: Option<LossChannel>,
    pub blocks: Vec<VariableBlock>,
    /// Fixed geometry for absent blocks, and the first start otherwise.
    pub initial: Option<PointGeometry>,
    pub options: MaximizeOptions,
}

impl OptimizationProblem {
    pub fn new(objective: Objective, family: StateFamily, s: OrderParameter) -> Self {
        let mut blocks = vec![VariableBlock::Geometry];
        if objective.shape().is_squeezed() {
            blocks.push(VariableBlock::Squeeze);
        }
        if matches!(family, StateFamily::Superposition { .. }) {
            blocks.push(VariableBlock::Coefficients);
        }
        Self {
            objective,
            family,
            s,
            channel: None,
            blocks,
            initial: None,
            options: MaximizeOptions::default(),
        }
    }

    pub fn with_channel(mut self, channel: LossChannel) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn with_options(mut self, options: MaximizeOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_initial(mut self, g: PointGeometry) -> Self {
        self.initial = Some(g);
        self
    }

    fn has(&self, b: VariableBlock) -> bool {
        self.blocks.contains(&b)
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::param("blocks", "at least one variable block is required"));
        }
        let coeffs = self.has(VariableBlock::Coefficients);
        let sup = matches!(self.family, StateFamily::Superposition { .. });
        if coeffs != sup {
            return Err(Error::param("blocks", "the coefficient block goes with the superposition family"));
        }
        if self.has(VariableBlock::Squeeze) && !self.objective.shape().is_squeezed() {
            return Err(Error::param("blocks", "squeeze block needs a parallelogram-type objective"));
        }
        let fixed_geometry = !self.has(VariableBlock::Geometry);
        let fixed_squeeze = self.objective.shape().is_squeezed() && !self.has(VariableBlock::Squeeze);
        if (fixed_geometry || fixed_squeeze) && self.initial.is_none() {
            return Err(Error::param("initial", "a geometry is required for blocks that are held fixed"));
        }
        if let Some(g) = &self.initial {
            if g.shape.unsqueezed() != self.objective.shape().unsqueezed() {
                return Err(Error::InvalidGeometry("initial geometry does not match the objective".into()));
            }
        }
        if let StateFamily::Gaussian { purity } = self.family {
            if !(purity > 0.0 && purity <= 1.0) {
                return Err(Error::param("purity", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argmax {
    pub geometry: PointGeometry,
    pub coefficients: Option<Vec<C64>>,
    pub gaussian: Option<GaussianState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub value: f64,
    pub argmax: Argmax,
    pub trace: Vec<StartTrace>,
    pub converged: bool,
}

/// Variable vector layout: `[r (gaussian family)], [x0, y0, d_q, d_p],
/// [θ (unless absorbed by the coefficients)], [r_t, φ_t]`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    gaussian: bool,
    geometry: bool,
    theta: bool,
    squeeze: bool,
}

impl Layout {
    fn of(p: &OptimizationProblem) -> Self {
        let geometry = p.has(VariableBlock::Geometry);
        Self {
            gaussian: matches!(p.family, StateFamily::Gaussian { .. }),
            geometry,
            // a free state phase makes the frame angle redundant
            theta: geometry && !p.has(VariableBlock::Coefficients),
            squeeze: p.has(VariableBlock::Squeeze),
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        if self.gaussian {
            lo.push(0.0);
            hi.push(3.0);
        }
        if self.geometry {
            lo.extend([-4.0, -4.0, 1e-3, 1e-3]);
            hi.extend([4.0, 4.0, 6.0, 6.0]);
        }
        if self.theta {
            lo.push(0.0);
            hi.push(PI);
        }
        if self.squeeze {
            lo.extend([0.0, 0.0]);
            hi.extend([3.0, PI]);
        }
        (lo, hi)
    }

    fn encode(&self, g: &PointGeometry, r: f64) -> Vec<f64> {
        let mut x = Vec::new();
        if self.gaussian {
            x.push(r);
        }
        if self.geometry {
            x.extend([g.base.x0, g.base.y0, g.base.d_q(), g.base.d_p()]);
        }
        if self.theta {
            x.push(g.theta);
        }
        if self.squeeze {
            let m = g.squeeze.unwrap_or_else(SqueezeMap::identity);
            x.extend([m.strength, m.axis.rem_euclid(PI)]);
        }
        x
    }

    /// Random start: log-uniform sides and rectangles straddling the origin
    /// half of the time.
    fn random(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut x = Vec::new();
        if self.gaussian {
            x.push(rng.random_range(0.0..2.0));
        }
        if self.geometry {
            let d: [f64; 2] = [0, 1].map(|_| (rng.random_range(0.02f64.ln()..3f64.ln())).exp());
            let straddle = rng.random_bool(0.5);
            for k in 0..2 {
                let off = if straddle { 0.0 } else { rng.random_range(-1.0..1.0) };
                x.push(-rng.random_range(0.0..1.0) * d[k] + off);
            }
            x.extend(d);
        }
        if self.theta {
            x.push(rng.random_range(0.0..PI));
        }
        if self.squeeze {
            x.push(rng.random_range(0.0..2.0));
            x.push(rng.random_range(0.0..PI));
        }
        x
    }

    /// `(gaussian r, geometry)`.
    fn decode(&self, x: &[f64], shape: Shape, fixed: Option<&PointGeometry>) -> (f64, PointGeometry) {
        let mut i = 0;
        let r = if self.gaussian {
            i += 1;
            x[0]
        } else {
            0.0
        };
        let (base, mut theta) = if self.geometry {
            let b = BaseRectangle::new(x[i], x[i + 1], x[i] + x[i + 2], x[i + 1] + x[i + 3]);
            i += 4;
            (b, 0.0)
        } else {
            let g = fixed.expect("validated fixed geometry");
            (g.base, g.theta)
        };
        if self.theta {
            theta = x[i];
            i += 1;
        }
        let squeeze = if !shape.is_squeezed() {
            None
        } else if self.squeeze {
            Some(SqueezeMap { strength: x[i], axis: x[i + 1] })
        } else {
            Some(fixed.and_then(|g| g.squeeze).unwrap_or_else(SqueezeMap::identity))
        };
        let g = PointGeometry::new(base, theta, squeeze, shape).expect("finite decoded geometry");
        (r, g)
    }
}

/// `⟨m|L†(H)|n⟩` for `m, n ≤ n_trunc` from the same block of `H`.
pub fn heisenberg_loss_block(h: &CMatrix, eta: f64) -> CMatrix {
    let d = h.nrows();
    if eta >= 1.0 {
        return h.clone();
    }
    CMatrix::from_fn(d, d, |m, n| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=m.min(n) {
            let ln = 0.5 * (ln_binomial(m, k) + ln_binomial(n, k))
                + if k > 0 { k as f64 * (1.0 - eta).ln() } else { 0.0 }
                + if m + n > 2 * k { 0.5 * (m + n - 2 * k) as f64 * eta.ln() } else { 0.0 };
            acc += h[(m - k, n - k)] * ln.exp();
        }
        acc
    })
}

fn bridge_penalty(g: &PointGeometry) -> f64 {
    let (da, db) = diagonals(g);
    2.0 * (0.5 * da.norm().max(db.norm()).powi(2)).exp()
}

/// Prepared evaluation context for one problem.
struct Evaluator<'a> {
    problem: &'a OptimizationProblem,
    layout: Layout,
    shape: Shape,
    fixed_state: Option<State>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a OptimizationProblem) -> Self {
        let fixed_state = match &problem.family {
            StateFamily::Fixed(st) => Some(match (st, problem.channel) {
                (_, None) => st.clone(),
                (State::Gaussian(g), Some(ch)) => State::Gaussian(g.after_loss(ch)),
                (State::Fock(f), Some(ch)) => State::Fock(apply_loss(f, ch)),
            }),
            _ => None,
        };
        Self {
            problem,
            layout: Layout::of(problem),
            shape: problem.objective.shape(),
            fixed_state,
        }
    }

    fn geometry_of(&self, x: &[f64]) -> (f64, PointGeometry) {
        self.layout.decode(x, self.shape, self.problem.initial.as_ref())
    }

    fn gaussian_state(&self, r: f64) -> GaussianState {
        let StateFamily::Gaussian { purity } = self.problem.family else {
            unreachable!("gaussian family")
        };
        let st = GaussianState::new(C64::new(0.0, 0.0), r, 0.0, (1.0 / purity - 1.0) / 2.0).expect("valid gaussian");
        match self.problem.channel {
            Some(ch) => st.after_loss(ch),
            None => st,
        }
    }

    /// Projected, loss-transformed test operator for the superposition family.
    fn block(&self, g: &PointGeometry, n_trunc: usize) -> CMatrix {
        let h = test_operator(g, self.problem.s, n_trunc + 1);
        let eta = self.problem.channel.map_or(1.0, |c| c.transmittance());
        heisenberg_loss_block(&h, eta)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (r, g) = self.geometry_of(x);
        let raw = match &self.problem.family {
            StateFamily::Fixed(_) => test_value(self.fixed_state.as_ref().expect("fixed state"), &g, self.problem.s),
            StateFamily::Gaussian { .. } => test_value(&State::Gaussian(self.gaussian_state(r)), &g, self.problem.s),
            StateFamily::Superposition { n_trunc } => hermitian_extremes(&self.block(&g, *n_trunc)).1,
        };
        if self.problem.objective == Objective::P {
            raw - bridge_penalty(&g)
        } else {
            raw
        }
    }

    fn argmax(&self, x: &[f64]) -> Argmax {
        let (r, g) = self.geometry_of(x);
        let coefficients = match &self.problem.family {
            StateFamily::Superposition { n_trunc } => {
                let (_, v) = top_eigenpair(&self.block(&g, *n_trunc));
                Some(gauge_fixed(v.as_slice()))
            }
            _ => None,
        };
        let gaussian = matches!(self.problem.family, StateFamily::Gaussian { .. }).then(|| self.gaussian_state(r));
        Argmax {
            geometry: g,
            coefficients,
            gaussian,
        }
    }
}

/// Unit vector with its largest-magnitude entry real and positive.
pub fn gauge_fixed(v: &[C64]) -> Vec<C64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0));
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
    v.iter().map(|c| c * phase / norm).collect()
}

/// Seeded multi-start Nelder–Mead maximisation; starts run in parallel and
/// are reproducible for a given seed.
pub fn maximize(problem: &OptimizationProblem) -> Result<Maximum> {
    problem.validate()?;
    let ev = Evaluator::new(problem);
    let (lo, hi) = ev.layout.bounds();
    let opts = problem.options;
    let first = problem.initial.map(|g| {
        let mut x = ev.layout.encode(&g, 0.5);
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(lo[j], hi[j]);
        }
        x
    });
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|i| {
            if i == 0 {
                if let Some(x) = &first {
                    return x.clone();
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            if i % 3 == 2 {
                lo.iter().zip(&hi).map(|(&a, &b)| rng.random_range(a..=b)).collect()
            } else {
                ev.layout.random(&mut rng)
            }
        })
        .collect();
    let trace: Vec<StartTrace> = starts
        .par_iter()
        .map(|x0| {
            let m = nelder_mead_max(|x| ev.value(x), x0, &lo, &hi, &opts.nelder_mead);
            StartTrace {
                start: x0.clone(),
                end: m.x,
                value: m.value,
                evals: m.evals,
                converged: m.converged,
            }
        })
        .collect();
    let best = trace
        .iter()
        .filter(|t| t.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::NonConvergence("no finite objective value".into()))?;
    Ok(Maximum {
        value: best.value,
        argmax: ev.argmax(&best.end),
        converged: trace.iter().any(|t| t.converged),
        trace: trace.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEta {
    /// `None` when no transmittance in `(0, 1]` reaches the threshold.
    pub eta_c: Option<f64>,
    pub margin_threshold: f64,
    pub objective: Objective,
    pub n_trunc: usize,
    pub s: OrderParameter,
    /// Optimised value at `η = 1`.
    pub value_at_unit: f64,
}

pub const DEFAULT_ETA_MARGIN: f64 = 1e-3;

/// Smallest `η` at which the optimised objective over `n_trunc`-photon
/// superpositions reaches `bound + margin`, bisected to `tol`.
pub fn critical_eta(
    objective: Objective,
    n_trunc: usize,
    s: OrderParameter,
    margin: f64,
    tol: f64,
    options: &MaximizeOptions,
) -> Result<CriticalEta> {
    if !matches!(objective, Objective::N | Objective::NPrime) {
        return Err(Error::param("objective", "critical transmittance is defined for N and N'"));
    }
    let threshold = objective.bound() + margin;
    let solve = |eta: f64, warm: Option<PointGeometry>, budget: usize| -> Result<Maximum> {
        let mut p = OptimizationProblem::new(objective, StateFamily::Superposition { n_trunc }, s)
            .with_channel(LossChannel::new(eta)?)
            .with_options(MaximizeOptions {
                starts: budget,
                ..*options
            });
        p.initial = warm;
        maximize(&p)
    };
    let top = solve(1.0, None, options.starts)?;
    let mut out = CriticalEta {
        eta_c: None,
        margin_threshold: margin,
        objective,
        n_trunc,
        s,
        value_at_unit: top.value,
    };
    if top.value < threshold {
        return Ok(out);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut warm = top.argmax.geometry;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        // tighter brackets get more starts
        let budget = if hi - lo < 16.0 * tol { 2 * options.starts } else { options.starts };
        let m = solve(mid, Some(warm), budget)?;
        if m.value >= threshold {
            hi = mid;
            warm = m.argmax.geometry;
        } else {
            lo = mid;
        }
    }
    out.eta_c = Some(hi);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeCurvePoint {
    pub r_t: f64,
    /// Parallelogram value on the original state.
    pub value: f64,
    pub geometry: PointGeometry,
    /// The same vertices read as a rectangle/triangle on `ŜρŜ†` (`s = 0` only).
    pub squeezed_state_value: Option<f64>,
    pub bound: f64,
    pub violates: bool,
}

/// Optimised value of the squeezed-state test per `r_t`, computed as the
/// parallelogram (sheared triangle) test on `state` with the squeeze map fixed.
pub fn squeeze_enhancement_curve(
    state: &FockDensityMatrix,
    s: OrderParameter,
    kind: Shape,
    r_ts: &[f64],
    options: &MaximizeOptions,
) -> Result<Vec<SqueezeCurvePoint>> {
    let objective = if kind.is_three_point() { Objective::NPrime } else { Objective::N };
    let shape = objective.shape();
    r_ts.iter()
        .map(|&r_t| {
            let map = SqueezeMap::new(r_t, 0.0)?;
            let seed = PointGeometry::new(BaseRectangle::from_sides(0.5, 0.5), 0.0, Some(map), shape)?;
            let mut p = OptimizationProblem::new(objective, StateFamily::Fixed(State::Fock(state.clone())), s)
                .with_options(*options)
                .with_initial(seed);
            p.blocks = vec![VariableBlock::Geometry];
            let m = maximize(&p)?;
            let g = m.argmax.geometry;
            let squeezed_state_value = if s.value() == 0.0 {
                let pad = state.dim() + 40 + (80.0 * r_t * r_t * (1.0 + state.mean_photon())).ceil() as usize;
                let sq = state.resized(pad).squeezed(r_t, 0.0, pad);
                let plain = g.with_shape(shape.unsqueezed())?;
                let plain = PointGeometry { squeeze: None, ..plain };
                Some(test_value(&State::Fock(sq), &plain, s))
            } else {
                None
            };
            let bound = objective.bound();
            Ok(SqueezeCurvePoint {
                r_t,
                value: m.value,
                geometry: g,
                squeezed_state_value,
                bound,
                violates: m.value > bound + crate::VIOLATION_MARGIN,
            })
        })
        .collect()
}
