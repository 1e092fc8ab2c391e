//! Single-mode states (analytic Gaussian and truncated Fock density
//! matrices) and the Gaussian channels acting on them.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::geometry::{OrderParameter, PhaseSpacePoint};
use crate::linalg::{annihilation, expm_antihermitian, hermitian_extremes, hermiticity_error, CMatrix};
use crate::special::ln_binomial;
use crate::{quasiprob, Error, Result, C64};

/// Tail mass above which operations log a warning.
pub const DEFAULT_TAIL_WARN: f64 = 1e-8;
/// Tail mass at which Fock construction fails.
pub const DEFAULT_TAIL_LIMIT: f64 = 1e-4;
/// Default truncation for paper-scale states (`|γ| ≤ 2`, `r ≤ 1.5`).
pub const DEFAULT_FOCK_DIM: usize = 100;
/// Cap on the two-mode product dimension used by [`mix_with_ancilla`].
pub const DEFAULT_PRODUCT_CAP: usize = 40_000;

/// Displaced squeezed thermal state `D(α) S(r, φ) σ_th(n̄) S†(r, φ) D†(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub displacement: C64,
    pub squeezing: f64,
    pub squeeze_axis: f64,
    pub thermal: f64,
}

impl GaussianState {
    pub fn new(displacement: C64, squeezing: f64, squeeze_axis: f64, thermal: f64) -> Result<Self> {
        if !(displacement.re.is_finite() && displacement.im.is_finite()) {
            return Err(Error::param("alpha", "must be finite"));
        }
        if !(squeezing.is_finite() && squeezing >= 0.0) {
            return Err(Error::param("r", "must be finite and >= 0"));
        }
        if !squeeze_axis.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        if !(thermal.is_finite() && thermal >= 0.0) {
            return Err(Error::param("nbar", "must be finite and >= 0"));
        }
        Ok(Self {
            displacement,
            squeezing,
            squeeze_axis,
            thermal,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            displacement: C64::new(0.0, 0.0),
            squeezing: 0.0,
            squeeze_axis: 0.0,
            thermal: 0.0,
        }
    }

    pub fn coherent(alpha: C64) -> Self {
        Self {
            displacement: alpha,
            ..Self::vacuum()
        }
    }

    pub fn squeezed_vacuum(r: f64, phi: f64) -> Self {
        Self {
            squeezing: r,
            squeeze_axis: phi,
            ..Self::vacuum()
        }
    }

    pub fn thermal_state(nbar: f64) -> Self {
        Self {
            thermal: nbar,
            ..Self::vacuum()
        }
    }

    /// Squeezed thermal state of purity `μ` and `κ₀ = 2 tanh 2r`, axis 0.
    pub fn from_purity_kappa(purity: f64, kappa0: f64) -> Result<Self> {
        if !(purity > 0.0 && purity <= 1.0) {
            return Err(Error::param("purity", "must lie in (0, 1]"));
        }
        if !(0.0..2.0).contains(&kappa0) {
            return Err(Error::param("kappa0", "must lie in [0, 2)"));
        }
        let r = 0.25 * ((2.0 + kappa0) / (2.0 - kappa0)).ln();
        Self::new(C64::new(0.0, 0.0), r, 0.0, (1.0 / purity - 1.0) / 2.0)
    }

    /// `Tr σ² = 1/(1 + 2n̄)`.
    pub fn purity(&self) -> f64 {
        1.0 / (1.0 + 2.0 * self.thermal)
    }

    /// `κ₀ = 2 tanh 2r`.
    pub fn kappa0(&self) -> f64 {
        2.0 * (2.0 * self.squeezing).tanh()
    }

    pub fn mean(&self) -> (f64, f64) {
        (self.displacement.re, self.displacement.im)
    }

    /// Symmetrised quadrature covariance matrix.
    pub fn covariance(&self) -> Matrix2<f64> {
        gaussian_covariance(self)
    }

    pub fn to_fock(&self, dim: usize) -> Result<FockDensityMatrix> {
        to_fock(self, dim, &FockOptions::default())
    }

    /// Gaussian state with the given mean and covariance matrix.
    pub fn from_moments(mean: C64, cov: Matrix2<f64>) -> Result<Self> {
        let (a, b, c) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
        let det = a * b - c * c;
        if !(det >= 1.0 / 16.0 - 1e-12 && a > 0.0) {
            return Err(Error::param("covariance", "violates the uncertainty relation"));
        }
        let nu = 4.0 * det.sqrt();
        let half_diff = (0.25 * (a - b).powi(2) + c * c).sqrt();
        let m = 0.5 * (a + b);
        let r = 0.25 * ((m + half_diff) / (m - half_diff)).ln();
        let axis = 0.5 * (-2.0 * c).atan2(b - a);
        Self::new(mean, r, if half_diff > 0.0 { axis } else { 0.0 }, ((nu - 1.0) / 2.0).max(0.0))
    }

    /// Image under a pure-loss channel of transmittance `η`.
    pub fn after_loss(&self, channel: LossChannel) -> Self {
        let eta = channel.transmittance();
        let cov = self.covariance() * eta + Matrix2::identity() * ((1.0 - eta) / 4.0);
        Self::from_moments(self.displacement * eta.sqrt(), cov).expect("loss keeps a physical covariance")
    }
}

pub fn gaussian_covariance(state: &GaussianState) -> Matrix2<f64> {
    let pre = 0.5 * (state.thermal + 0.5);
    let (ch, sh) = ((2.0 * state.squeezing).cosh(), (2.0 * state.squeezing).sinh());
    let (s2, c2) = (2.0 * state.squeeze_axis).sin_cos();
    let g11 = pre * (ch - sh * c2);
    let g22 = pre * (ch + sh * c2);
    let g12 = -pre * sh * s2;
    Matrix2::new(g11, g12, g12, g22)
}

/// Truncation settings for Fock-space construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockOptions {
    pub tail_warn: f64,
    pub tail_limit: f64,
    /// Extra working levels used while applying truncated unitaries.
    pub padding: usize,
}

impl Default for FockOptions {
    fn default() -> Self {
        Self {
            tail_warn: DEFAULT_TAIL_WARN,
            tail_limit: DEFAULT_TAIL_LIMIT,
            padding: 40,
        }
    }
}

/// Truncated density matrix in the number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    rho: CMatrix,
    /// Estimated population lost to truncation when the state was built.
    truncation_tail: f64,
}

impl FockDensityMatrix {
    /// Wraps a matrix after checking shape, Hermiticity and trace.
    pub fn new(rho: CMatrix) -> Result<Self> {
        let dim = rho.nrows();
        if dim < 1 || rho.ncols() != dim {
            return Err(Error::param("rho", "must be a non-empty square matrix"));
        }
        let herm = hermiticity_error(&rho);
        if herm > 1e-10 {
            return Err(Error::param("rho", format!("not Hermitian (error {herm:.2e})")));
        }
        let tr = rho.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + 1e-9) {
            return Err(Error::param("rho", format!("trace {tr} outside (0, 1]")));
        }
        Ok(Self {
            rho,
            truncation_tail: 0.0,
        })
    }

    pub(crate) fn from_raw(rho: CMatrix, truncation_tail: f64) -> Self {
        Self { rho, truncation_tail }
    }

    /// Checks positive semidefiniteness on top of the constructor checks.
    pub fn validate(&self) -> Result<()> {
        let (lo, _) = hermitian_extremes(&self.rho);
        if lo < -1e-10 {
            return Err(Error::param("rho", format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(())
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::number_state(0, dim)
    }

    pub fn number_state(n: usize, dim: usize) -> Self {
        assert!(n < dim, "number state |{n}> needs dim > {n}");
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(n, n)] = C64::new(1.0, 0.0);
        Self::from_raw(rho, 0.0)
    }

    /// Diagonal state with the given populations (normalised).
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        if populations.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param("populations", "must be finite and >= 0"));
        }
        let total: f64 = populations.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("populations", "must not all vanish"));
        }
        let dim = populations.len().max(1);
        let mut rho = CMatrix::zeros(dim, dim);
        for (n, p) in populations.iter().enumerate() {
            rho[(n, n)] = C64::new(p / total, 0.0);
        }
        Ok(Self::from_raw(rho, 0.0))
    }

    /// `f|0⟩⟨0| + (1-f)|2⟩⟨2|`.
    pub fn vacuum_two_photon_mixture(f: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::param("f", "must lie in [0, 1]"));
        }
        Self::diagonal(&[f, 0.0, 1.0 - f])
    }

    /// Projector on a (normalised) state vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::param("coefficients", "must contain a nonzero finite entry"));
        }
        let dim = amplitudes.len();
        let rho = CMatrix::from_fn(dim, dim, |i, j| amplitudes[i] * amplitudes[j].conj() / (norm * norm));
        Ok(Self::from_raw(rho, 0.0))
    }

    /// Convex combination of states; the result has the largest dimension.
    pub fn mixture(components: &[(f64, &FockDensityMatrix)]) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.is_empty() || components.iter().any(|(w, _)| *w < 0.0) || total <= 0.0 {
            return Err(Error::param("weights", "must be non-negative with positive sum"));
        }
        let dim = components.iter().map(|(_, r)| r.dim()).max().unwrap_or(1);
        let mut rho = CMatrix::zeros(dim, dim);
        let mut tail = 0.0;
        for (w, r) in components {
            let d = r.dim();
            let mut block = rho.view_mut((0, 0), (d, d));
            block += r.matrix() * C64::new(w / total, 0.0);
            tail += w / total * r.truncation_tail;
        }
        Ok(Self::from_raw(rho, tail))
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.rho[(i, j)].norm_sqr();
            }
        }
        acc
    }

    pub fn population(&self, n: usize) -> f64 {
        if n < self.dim() {
            self.rho[(n, n)].re
        } else {
            0.0
        }
    }

    pub fn mean_photon(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.rho[(n, n)].re).sum()
    }

    /// Population of the top 10% of levels.
    pub fn tail_mass(&self) -> f64 {
        let d = self.dim();
        let top = d.div_ceil(10);
        ((d - top)..d).map(|n| self.rho[(n, n)].re.max(0.0)).sum()
    }

    /// Truncation loss recorded at construction plus the current trace deficit.
    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail.max(1.0 - self.trace()).max(0.0)
    }

    /// `tr[ρ O]` for an operator given in (at least) the same basis.
    pub fn expect(&self, op: &CMatrix) -> C64 {
        let d = self.dim().min(op.nrows());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.rho[(i, j)] * op[(j, i)];
            }
        }
        acc
    }

    /// `(⟨q⟩, ⟨p⟩)` and the symmetrised covariance matrix.
    pub fn moments(&self) -> ((f64, f64), Matrix2<f64>) {
        let d = self.dim();
        let mut a1 = C64::new(0.0, 0.0);
        let mut a2 = C64::new(0.0, 0.0);
        for n in 0..d {
            if n + 1 < d {
                a1 += self.rho[(n + 1, n)] * ((n + 1) as f64).sqrt();
            }
            if n + 2 < d {
                a2 += self.rho[(n + 2, n)] * (((n + 1) * (n + 2)) as f64).sqrt();
            }
        }
        let nbar = self.mean_photon();
        let tr = self.trace();
        let (mq, mp) = (a1.re, a1.im);
        let g11 = 0.25 * (2.0 * a2.re + 2.0 * nbar + tr) - mq * mq;
        let g22 = 0.25 * (-2.0 * a2.re + 2.0 * nbar + tr) - mp * mp;
        let g12 = 0.5 * a2.im - mq * mp;
        ((mq, mp), Matrix2::new(g11, g12, g12, g22))
    }

    /// Zero-pads or crops to `dim` levels.
    pub fn resized(&self, dim: usize) -> Self {
        let mut rho = CMatrix::zeros(dim, dim);
        let d = dim.min(self.dim());
        rho.view_mut((0, 0), (d, d)).copy_from(&self.rho.view((0, 0), (d, d)));
        let dropped = if dim < self.dim() {
            (dim..self.dim()).map(|n| self.rho[(n, n)].re).sum::<f64>()
        } else {
            0.0
        };
        Self::from_raw(rho, self.truncation_tail + dropped)
    }

    /// `U ρ U†` for a unitary built in a padded working space, cropped to `out_dim`.
    fn conjugated(&self, generator: impl Fn(&CMatrix) -> CMatrix, out_dim: usize, padding: usize) -> Self {
        let work = out_dim.max(self.dim()) + padding;
        let a = annihilation(work);
        let u = expm_antihermitian(&generator(&a));
        let rho = self.resized(work);
        let out = &u * rho.matrix() * u.adjoint();
        let lost = (out_dim..work).map(|n| out[(n, n)].re).sum::<f64>();
        let cropped = out.view((0, 0), (out_dim, out_dim)).into_owned();
        Self::from_raw(cropped, self.truncation_tail + lost.max(0.0))
    }

    /// `S(r, φ) ρ S†(r, φ)` with `S = exp[-r/2 (e^{2iφ} a†² - e^{-2iφ} a²)]`.
    pub fn squeezed(&self, r: f64, phi: f64, out_dim: usize) -> Self {
        if r == 0.0 {
            return self.resized(out_dim);
        }
        self.conjugated(|a| squeeze_generator(a, r, phi), out_dim, 40)
    }

    /// `D(α) ρ D†(α)`.
    pub fn displaced(&self, alpha: C64, out_dim: usize) -> Self {
        if alpha == C64::new(0.0, 0.0) {
            return self.resized(out_dim);
        }
        self.conjugated(|a| displacement_generator(a, alpha), out_dim, 40)
    }

    /// `e^{iφ n} ρ e^{-iφ n}`, exact.
    pub fn rotated(&self, phi: f64) -> Self {
        let d = self.dim();
        let rho = CMatrix::from_fn(d, d, |i, j| self.rho[(i, j)] * C64::from_polar(1.0, phi * (i as f64 - j as f64)));
        Self::from_raw(rho, self.truncation_tail)
    }

    /// Fidelity with a pure state given by amplitudes, `⟨ψ|ρ|ψ⟩`.
    pub fn overlap_pure(&self, psi: &[C64]) -> f64 {
        let d = self.dim().min(psi.len());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += psi[i].conj() * self.rho[(i, j)] * psi[j];
            }
        }
        acc.re
    }
}

fn squeeze_generator(a: &CMatrix, r: f64, phi: f64) -> CMatrix {
    let a2 = a * a;
    let ad2 = a2.adjoint();
    let e = C64::from_polar(1.0, 2.0 * phi);
    (ad2 * e - a2 * e.conj()) * C64::new(-r / 2.0, 0.0)
}

fn displacement_generator(a: &CMatrix, alpha: C64) -> CMatrix {
    a.adjoint() * alpha - a * alpha.conj()
}

/// Builds `σ` in a padded working space by exponentiating the truncated
/// squeeze and displacement generators, then crops to `dim`.
pub fn to_fock(state: &GaussianState, dim: usize, opts: &FockOptions) -> Result<FockDensityMatrix> {
    if dim < 2 {
        return Err(Error::param("dim", "must be at least 2"));
    }
    let trivial_unitaries = state.squeezing == 0.0 && state.displacement == C64::new(0.0, 0.0);
    let work = if trivial_unitaries { dim } else { dim + opts.padding };
    let nbar = state.thermal;
    let mut rho = CMatrix::zeros(work, work);
    let mut thermal_mass = 0.0;
    for n in 0..work {
        let p = if nbar == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (n as f64 * (nbar / (nbar + 1.0)).ln()).exp() / (nbar + 1.0)
        };
        rho[(n, n)] = C64::new(p, 0.0);
        thermal_mass += p;
    }
    let mut fock = FockDensityMatrix::from_raw(rho, 1.0 - thermal_mass);
    if state.squeezing != 0.0 {
        fock = fock.conjugated(|a| squeeze_generator(a, state.squeezing, state.squeeze_axis), work, 0);
    }
    if state.displacement != C64::new(0.0, 0.0) {
        fock = fock.conjugated(|a| displacement_generator(a, state.displacement), work, 0);
    }
    let cropped = fock.resized(dim);
    let tail = cropped.truncation_tail().max(cropped.tail_mass());
    if tail >= opts.tail_limit {
        return Err(Error::Truncation {
            dim,
            tail,
            limit: opts.tail_limit,
        });
    }
    if tail >= opts.tail_warn {
        log::warn!("Fock truncation at dim {dim} leaves tail mass {tail:.2e}");
    }
    Ok(FockDensityMatrix::from_raw(cropped.rho, tail))
}

/// Normalised pure superposition `Σ C_n |n⟩` embedded in `dim` levels.
pub fn superposition_state(coeffs: &[C64], dim: usize) -> Result<FockDensityMatrix> {
    if coeffs.is_empty() || coeffs.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::param("coefficients", "at least one coefficient must be nonzero"));
    }
    if coeffs.len() > dim {
        return Err(Error::param("dim", format!("{} coefficients need dim >= {}", coeffs.len(), coeffs.len())));
    }
    let mut amps = coeffs.to_vec();
    amps.resize(dim, C64::new(0.0, 0.0));
    FockDensityMatrix::pure(&amps)
}

/// Even cat state `(|γ⟩ + |-γ⟩)/√(2 + 2e^{-2|γ|²})`.
pub fn cat_state(gamma: C64, dim: usize) -> Result<FockDensityMatrix> {
    let mut amps = Vec::with_capacity(dim);
    let ln_g = gamma.norm().ln();
    let phase = gamma.arg();
    for n in 0..dim {
        if n % 2 == 1 || (gamma.norm() == 0.0 && n > 0) {
            amps.push(C64::new(0.0, 0.0));
            continue;
        }
        let mag = if n == 0 {
            1.0
        } else {
            (n as f64 * ln_g - 0.5 * crate::special::ln_factorial(n)).exp()
        };
        amps.push(C64::from_polar(mag, n as f64 * phase));
    }
    let state = FockDensityMatrix::pure(&amps)?;
    let mut tail = 0.0;
    // coherent amplitude tail beyond the truncation
    let mean = gamma.norm_sqr();
    if mean > 0.0 {
        let ln_p = |n: usize| n as f64 * mean.ln() - crate::special::ln_factorial(n) - mean;
        tail = (dim..dim + 200).map(|n| ln_p(n).exp()).sum::<f64>();
    }
    Ok(FockDensityMatrix::from_raw(state.rho, tail))
}

/// Pure-loss channel: a beam splitter of transmittance `η` with vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("eta", "transmittance must lie in [0, 1]"));
        }
        Ok(Self { eta })
    }

    pub fn transmittance(&self) -> f64 {
        self.eta
    }

    /// Order parameter `s' = 1 - 1/η` whose test values match `s = 0` after loss.
    pub fn equivalent_order(&self) -> f64 {
        1.0 - 1.0 / self.eta
    }
}

/// Applies the Kraus family `A_k = (1-η)^{k/2} η^{n/2} a^k / √k!`, summed
/// over every `k` the truncation supports.
pub fn apply_loss(rho: &FockDensityMatrix, channel: LossChannel) -> FockDensityMatrix {
    let eta = channel.eta;
    let d = rho.dim();
    if eta == 1.0 {
        return rho.clone();
    }
    let m = rho.matrix();
    let mut out = CMatrix::zeros(d, d);
    if eta == 0.0 {
        out[(0, 0)] = C64::new(rho.trace(), 0.0);
        return FockDensityMatrix::from_raw(out, rho.truncation_tail);
    }
    let (ln_eta, ln_loss) = (eta.ln(), (1.0 - eta).ln());
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..(d - i.max(j)) {
                let ln_c = 0.5 * (ln_binomial(i + k, k) + ln_binomial(j + k, k))
                    + k as f64 * ln_loss
                    + 0.5 * (i + j) as f64 * ln_eta;
                acc += m[(i + k, j + k)] * ln_c.exp();
            }
            out[(i, j)] = acc;
        }
    }
    FockDensityMatrix::from_raw(out, rho.truncation_tail)
}

/// `(N+1)×(N+1)` beam-splitter block on `|k, N-k⟩` (k photons in the first
/// mode), for `U a† U† = √η a† - √(1-η) b†`.
fn beam_splitter_block(total: usize, eta: f64) -> CMatrix {
    let dim = total + 1;
    let theta = eta.sqrt().acos();
    let mut gen = CMatrix::zeros(dim, dim);
    for k in 0..total {
        // a†b |k, N-k⟩ = √((k+1)(N-k)) |k+1, N-k-1⟩
        let amp = (((k + 1) * (total - k)) as f64).sqrt() * theta;
        gen[(k + 1, k)] = C64::new(amp, 0.0);
        gen[(k, k + 1)] = C64::new(-amp, 0.0);
    }
    expm_antihermitian(&gen)
}

/// Mixes `ρ` with an ancilla on a beam splitter of transmittance `η` and
/// traces out the ancilla mode. The output keeps every level the input
/// photon numbers can reach.
pub fn mix_with_ancilla(
    rho: &FockDensityMatrix,
    ancilla: &FockDensityMatrix,
    eta: f64,
    product_cap: usize,
) -> Result<FockDensityMatrix> {
    let channel = LossChannel::new(eta)?;
    let (dr, da) = (rho.dim(), ancilla.dim());
    if dr * da > product_cap {
        return Err(Error::DimensionOverflow {
            requested: dr * da,
            cap: product_cap,
        });
    }
    if da == 1 {
        return Ok(apply_loss(rho, channel));
    }
    let dout = dr + da - 1;
    let nmax = dr + da - 2;
    let blocks: Vec<CMatrix> = (0..=nmax).map(|n| beam_splitter_block(n, eta)).collect();
    let (r, s) = (rho.matrix(), ancilla.matrix());
    let mut out = CMatrix::zeros(dout, dout);
    // output ancilla photon number j; total photon numbers k + j and k' + j
    for j in 0..=nmax {
        for k in 0..dout {
            let tot = k + j;
            if tot > nmax {
                break;
            }
            let b = &blocks[tot];
            let n_lo = tot.saturating_sub(da - 1);
            let n_hi = tot.min(dr - 1);
            if n_lo > n_hi {
                continue;
            }
            for kp in 0..dout {
                let totp = kp + j;
                if totp > nmax {
                    break;
                }
                let bp = &blocks[totp];
                let np_lo = totp.saturating_sub(da - 1);
                let np_hi = totp.min(dr - 1);
                if np_lo > np_hi {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                for n in n_lo..=n_hi {
                    let left = b[(k, n)];
                    if left == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for np in np_lo..=np_hi {
                        acc += left * r[(n, np)] * s[(tot - n, totp - np)] * bp[(kp, np)].conj();
                    }
                }
                out[(k, kp)] += acc;
            }
        }
    }
    Ok(FockDensityMatrix::from_raw(
        out,
        rho.truncation_tail + ancilla.truncation_tail,
    ))
}

/// A state in either representation. Evaluation routes follow the variant.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Gaussian(GaussianState),
    Fock(FockDensityMatrix),
}

impl State {
    pub fn as_fock(&self, dim: usize) -> Result<FockDensityMatrix> {
        match self {
            State::Gaussian(g) => g.to_fock(dim),
            State::Fock(f) => Ok(f.clone()),
        }
    }

    /// `D(β) ρ D†(β)` in the same representation.
    pub fn displaced(&self, beta: C64) -> State {
        match self {
            State::Gaussian(g) => State::Gaussian(GaussianState {
                displacement: g.displacement + beta,
                ..*g
            }),
            State::Fock(f) => State::Fock(f.displaced(beta, f.dim())),
        }
    }

    /// `e^{iφ n} ρ e^{-iφ n}` in the same representation.
    pub fn rotated(&self, phi: f64) -> State {
        match self {
            State::Gaussian(g) => State::Gaussian(GaussianState {
                displacement: g.displacement * C64::from_polar(1.0, phi),
                squeeze_axis: g.squeeze_axis + phi,
                ..*g
            }),
            State::Fock(f) => State::Fock(f.rotated(phi)),
        }
    }
}

impl From<GaussianState> for State {
    fn from(g: GaussianState) -> Self {
        State::Gaussian(g)
    }
}

impl From<FockDensityMatrix> for State {
    fn from(f: FockDensityMatrix) -> Self {
        State::Fock(f)
    }
}

/// Vacuum Wigner function `(2/π) e^{-2|γ|²}`.
pub fn vacuum_wigner(gamma: C64) -> f64 {
    2.0 / PI * (-2.0 * gamma.norm_sqr()).exp()
}

/// Two-mode Wigner function of `ρ` mixed with vacuum on a 50:50 beam
/// splitter, evaluated pointwise.
pub fn bw_two_mode_wigner(state: &State, alpha: C64, beta: C64) -> f64 {
    let a = (alpha + beta) * FRAC_1_SQRT_2;
    let b = (beta - alpha) * FRAC_1_SQRT_2;
    let w = quasiprob::eval(state, PhaseSpacePoint::from_complex(a), OrderParameter::WIGNER).w;
    w * vacuum_wigner(b)
}
