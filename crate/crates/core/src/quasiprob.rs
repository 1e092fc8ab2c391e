//! s-parametrized quasiprobability functions by three routes: analytic
//! Gaussian, Fock-basis kernel elements, and the closed-form lossy cat.
//!
//! Every route returns both the raw value `W(q, p; s)` and the scaled value
//! `π(1-s)/2 · W`, which is what the test functionals combine.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::geometry::{OrderParameter, PhaseSpacePoint};
use crate::linalg::CMatrix;
use crate::special::{ln_factorial, scaled_laguerre};
use crate::states::{FockDensityMatrix, GaussianState, State};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledQuasiprobValue {
    pub w: f64,
    pub scaled: f64,
    pub s: OrderParameter,
}

impl ScaledQuasiprobValue {
    fn from_scaled(scaled: f64, s: OrderParameter) -> Self {
        Self {
            w: scaled / s.scale(),
            scaled,
            s,
        }
    }
}

/// One element `⟨n| D(α) T(s) D†(α) |m⟩` of the displaced kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacedKernelElement {
    pub n: usize,
    pub m: usize,
    pub value: C64,
}

/// Fock matrix of `D(α) T(s) D†(α)` with `T(s) = ((s+1)/(s-1))^n`.
///
/// For `n ≥ m` the element is
/// `√(m!/n!) e^{-2|α|²/(1-s)} (2α/(1-s))^{n-m} t^m L_m^{(n-m)}(4|α|²/(1-s²))`
/// with `t = (s+1)/(s-1)`; the rest follows by Hermiticity. The Laguerre
/// factor is carried as `t^m L_m` so `s = -1` stays finite.
pub fn kernel_matrix(alpha: C64, s: OrderParameter, dim: usize) -> CMatrix {
    let sv = s.value();
    let t = s.ratio();
    let mag2 = alpha.norm_sqr();
    let y = -4.0 * mag2 / ((1.0 - sv) * (1.0 - sv));
    let gauss = -2.0 * mag2 / (1.0 - sv);
    let ln_step = (2.0 * alpha.norm() / (1.0 - sv)).ln();
    let phase = alpha.arg();
    let mut k = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        if a > 0 && mag2 == 0.0 {
            break;
        }
        let poly = scaled_laguerre(a, t, y, dim - 1 - a);
        let rot = C64::from_polar(1.0, a as f64 * phase);
        let power = if a == 0 { 0.0 } else { a as f64 * ln_step };
        for (m, p) in poly.iter().enumerate() {
            if p.sign == 0.0 {
                continue;
            }
            let n = m + a;
            let ln_mag = 0.5 * (ln_factorial(m) - ln_factorial(n)) + gauss + power + p.ln_abs;
            let v = rot * (p.sign * ln_mag.exp());
            k[(n, m)] = v;
            if a > 0 {
                k[(m, n)] = v.conj();
            }
        }
    }
    k
}

/// Single kernel element for any `(n, m)`.
pub fn kernel_element(alpha: C64, s: OrderParameter, n: usize, m: usize) -> DisplacedKernelElement {
    let dim = n.max(m) + 1;
    let k = kernel_matrix(alpha, s, dim);
    DisplacedKernelElement { n, m, value: k[(n, m)] }
}

/// `tr[ρ K]` restricted to the overlapping block.
pub fn trace_against(rho: &CMatrix, kernel: &CMatrix) -> f64 {
    let d = rho.nrows().min(kernel.nrows());
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (r, k) = (rho[(i, j)], kernel[(j, i)]);
            acc += r.re * k.re - r.im * k.im;
        }
    }
    acc
}

/// Analytic value `f_s exp(-½ dᵀ Γ_s⁻¹ d)` with `Γ_s = Γ - (s/4) I`.
pub fn eval_gaussian(state: &GaussianState, pt: PhaseSpacePoint, s: OrderParameter) -> ScaledQuasiprobValue {
    let g = state.covariance();
    let sv = s.value();
    let (a, b, c) = (g[(0, 0)] - sv / 4.0, g[(1, 1)] - sv / 4.0, g[(0, 1)]);
    let det = a * b - c * c;
    let dq = pt.q - state.displacement.re;
    let dp = pt.p - state.displacement.im;
    let quad = (b * dq * dq - 2.0 * c * dq * dp + a * dp * dp) / det;
    let scaled = (1.0 - sv) / (4.0 * det.sqrt()) * (-0.5 * quad).exp();
    ScaledQuasiprobValue::from_scaled(scaled, s)
}

/// `tr[ρ D(α) T(s) D†(α)]` from the kernel matrix. Values at `s < -1` that
/// come out non-positive can only be truncation artifacts and are clamped.
pub fn eval_fock(rho: &FockDensityMatrix, pt: PhaseSpacePoint, s: OrderParameter) -> ScaledQuasiprobValue {
    let kernel = kernel_matrix(pt.to_complex(), s, rho.dim());
    let mut scaled = trace_against(rho.matrix(), &kernel);
    if s.value() < -1.0 && scaled <= 0.0 {
        log::warn!("clamping non-positive value {scaled:.3e} at s = {} (truncation artifact)", s.value());
        scaled = 0.0;
    }
    ScaledQuasiprobValue::from_scaled(scaled, s)
}

/// Routes on the state's representation; no silent switching.
pub fn eval(state: &State, pt: PhaseSpacePoint, s: OrderParameter) -> ScaledQuasiprobValue {
    match state {
        State::Gaussian(g) => eval_gaussian(g, pt, s),
        State::Fock(f) => eval_fock(f, pt, s),
    }
}

/// Wigner function of the even cat with real amplitude `γ` after a pure-loss
/// channel of transmittance `η`.
pub fn eval_lossy_cat(gamma: f64, eta: f64, pt: PhaseSpacePoint) -> f64 {
    let g2 = gamma * gamma;
    let b = eta.sqrt() * gamma;
    let (q, p) = (pt.q, pt.p);
    let env = (-2.0 * q * q - 2.0 * p * p).exp();
    // cosh term written out to stay finite for large |q|
    let lobes = 0.5 * ((-2.0 * (q - b) * (q - b)).exp() + (-2.0 * (q + b) * (q + b)).exp());
    let fringe = env * (-2.0 * (1.0 - eta) * g2).exp() * (4.0 * b * p).cos();
    2.0 / PI / (1.0 + (-2.0 * g2).exp()) * ((-2.0 * p * p).exp() * lobes + fringe)
}

/// Memo table of kernel matrices keyed by the exact bit patterns of
/// `(α, s)` and the dimension.
#[derive(Debug)]
pub struct KernelCache {
    map: RwLock<HashMap<(u64, u64, u64, usize), Arc<CMatrix>>>,
    capacity: usize,
}

impl KernelCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            map: RwLock::new(HashMap::new()),
            capacity: capacity.max(1),
        }
    }

    pub fn get(&self, alpha: C64, s: OrderParameter, dim: usize) -> Arc<CMatrix> {
        let key = (alpha.re.to_bits(), alpha.im.to_bits(), s.value().to_bits(), dim);
        if let Some(k) = self.map.read().expect("kernel cache poisoned").get(&key) {
            return Arc::clone(k);
        }
        let k = Arc::new(kernel_matrix(alpha, s, dim));
        let mut map = self.map.write().expect("kernel cache poisoned");
        if map.len() >= self.capacity {
            map.clear();
        }
        map.insert(key, Arc::clone(&k));
        k
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for KernelCache {
    fn default() -> Self {
        Self::new(256)
    }
}

/// Square sample grid `values[i * n + j] = W(axis[i], axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn sample(axis: Vec<f64>, f: impl Fn(PhaseSpacePoint) -> f64) -> Self {
        let mut values = Vec::with_capacity(axis.len() * axis.len());
        for &q in &axis {
            for &p in &axis {
                values.push(f(PhaseSpacePoint::new(q, p)));
            }
        }
        Self { axis, values }
    }

    pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis.len() + j]
    }

    pub fn step(&self) -> f64 {
        self.axis[1] - self.axis[0]
    }
}

/// Smooths a grid of `W(·; s₁)` into `W(·; s₂)`, `s₂ < s₁`, with the
/// Gaussian kernel `(2/(π(s₁-s₂))) exp(-2|α-β|²/(s₁-s₂))`. The kernel is
/// separable, so the convolution runs one axis at a time. Used as a
/// validation oracle only.
pub fn convolve_s(grid: &Grid, s1: OrderParameter, s2: OrderParameter) -> crate::Result<Grid> {
    let width = s1.value() - s2.value();
    if width < 0.0 {
        return Err(crate::Error::param("s2", "must not exceed s1"));
    }
    if width == 0.0 {
        return Ok(grid.clone());
    }
    let n = grid.axis.len();
    let h = grid.step();
    let sigma = (width / 4.0).sqrt();
    if sigma < 2.0 * h {
        log::warn!("convolution kernel width {sigma:.3e} is below two grid steps ({h:.3e})");
    }
    // weights normalised over the infinite lattice so narrow kernels reduce
    // to the identity
    let reach = ((8.0 * sigma / h).ceil() as usize).max(1);
    let raw: Vec<f64> = (0..=reach).map(|k| (-((k as f64 * h).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let norm = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
    let w: Vec<f64> = raw.iter().map(|x| x / norm).collect();
    let pass = |src: &[f64], stride_out: usize, stride_in: usize| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for line in 0..n {
            for i in 0..n {
                let mut acc = 0.0;
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(n - 1);
                for j in lo..=hi {
                    acc += w[i.abs_diff(j)] * src[line * stride_out + j * stride_in];
                }
                out[line * stride_out + i * stride_in] = acc;
            }
        }
        out
    };
    let along_p = pass(&grid.values, n, 1);
    let both = pass(&along_p, 1, n);
    Ok(Grid {
        axis: grid.axis.clone(),
        values: both,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub q: f64,
    pub p: f64,
    pub w: f64,
    pub scaled: f64,
}

/// Evaluates `state` over the product of two axes.
pub fn eval_grid(state: &State, qs: &[f64], ps: &[f64], s: OrderParameter) -> Vec<GridRow> {
    use rayon::prelude::*;
    let pts: Vec<(f64, f64)> = qs.iter().flat_map(|&q| ps.iter().map(move |&p| (q, p))).collect();
    pts.par_iter()
        .map(|&(q, p)| {
            let v = eval(state, PhaseSpacePoint::new(q, p), s);
            GridRow { q, p, w: v.w, scaled: v.scaled }
        })
        .collect()
}

/// CSV with header `q,p,W,scaled`.
pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("q,p,W,scaled\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.12e},{:.12e}", r.q, r.p, r.w, r.scaled);
    }
    out
}
