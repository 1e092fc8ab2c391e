//! JSON state and geometry descriptions.
//!
//! States:
//!
//! ```json
//! {"kind": "gaussian", "alpha": [0.0, 0.0], "r": 0.5, "phi": 0.0, "nbar": 0.0}
//! {"kind": "gaussian", "purity": 0.9, "kappa0": 1.2}
//! {"kind": "fock", "populations": [0.3, 0.0, 0.7]}
//! {"kind": "fock", "number": 1}
//! {"kind": "superposition", "coeffs": [[1.0, 0.0], [0.0, 1.0]]}
//! {"kind": "cat", "gamma": [2.0, 0.0]}
//! {"kind": "mixture", "components": [{"weight": 0.5, "state": {...}}, ...]}
//! ```
//!
//! Every state accepts an optional `"loss": η` (pure loss applied last) and
//! Fock-type states an optional `"squeeze": {"r": .., "phi": ..}` applied
//! before the loss. Complex numbers are `[re, im]` pairs or plain reals.
//!
//! Geometries:
//!
//! ```json
//! {"shape": "rectangle", "base": [x0, y0, x1, y1], "theta": 0.785}
//! {"shape": "parallelogram", "sides": [0.5, 0.5], "squeeze": {"r": 1.0, "phi": 0.0}}
//! {"shape": "right_triangle", "optimal": true}
//! ```
//!
//! `"optimal": true` replaces `base`, `sides` and `theta` with the best
//! geometry for the state: in closed form for Gaussian states on the
//! rectangle and right triangle, by multi-start search otherwise. A given
//! `squeeze` is then held fixed.

use serde::Deserialize;

use crate::bounds::gaussian_optimal_for_state;
use crate::optimize::{maximize, MaximizeOptions, Objective, OptimizationProblem, StateFamily, VariableBlock};
use crate::geometry::{BaseRectangle, OrderParameter, PointGeometry, Shape, SqueezeMap};
use crate::states::{apply_loss, cat_state, superposition_state, FockDensityMatrix, GaussianState, LossChannel, State};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Pair([f64; 2]),
    Real(f64),
}

impl ComplexSpec {
    pub fn value(self) -> C64 {
        match self {
            ComplexSpec::Pair([re, im]) => C64::new(re, im),
            ComplexSpec::Real(re) => C64::new(re, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeSpec {
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian {
        alpha: Option<ComplexSpec>,
        r: Option<f64>,
        phi: Option<f64>,
        nbar: Option<f64>,
        purity: Option<f64>,
        kappa0: Option<f64>,
        loss: Option<f64>,
    },
    Fock {
        populations: Option<Vec<f64>>,
        number: Option<usize>,
        squeeze: Option<SqueezeSpec>,
        loss: Option<f64>,
    },
    Superposition {
        coeffs: Vec<ComplexSpec>,
        squeeze: Option<SqueezeSpec>,
        loss: Option<f64>,
    },
    Cat {
        gamma: ComplexSpec,
        squeeze: Option<SqueezeSpec>,
        loss: Option<f64>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
        loss: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub shape: String,
    pub base: Option<[f64; 4]>,
    pub sides: Option<[f64; 2]>,
    #[serde(default)]
    pub theta: f64,
    pub squeeze: Option<SqueezeSpec>,
    #[serde(default)]
    pub optimal: bool,
}

fn json_error(what: &str, e: serde_json::Error) -> Error {
    Error::Spec(format!("{what}: {e}"))
}

fn field(path: &str, e: Error) -> Error {
    match e {
        Error::Spec(msg) => Error::Spec(msg),
        other => Error::Spec(format!("field `{path}`: {other}")),
    }
}

pub fn parse_state(text: &str) -> Result<StateSpec> {
    serde_json::from_str(text).map_err(|e| json_error("state", e))
}

pub fn parse_geometry(text: &str) -> Result<GeometrySpec> {
    serde_json::from_str(text).map_err(|e| json_error("geometry", e))
}

fn channel(loss: Option<f64>) -> Result<Option<LossChannel>> {
    loss.map(|eta| LossChannel::new(eta).map_err(|e| field("loss", e))).transpose()
}

fn finish_fock(mut rho: FockDensityMatrix, squeeze: Option<SqueezeSpec>, loss: Option<f64>, dim: usize) -> Result<State> {
    if let Some(sq) = squeeze {
        if !(sq.r.is_finite() && sq.r >= 0.0 && sq.phi.is_finite()) {
            return Err(Error::Spec("field `squeeze`: r must be finite and >= 0".into()));
        }
        rho = rho.resized(dim).squeezed(sq.r, sq.phi, dim);
        if rho.truncation_tail() > crate::states::DEFAULT_TAIL_LIMIT {
            return Err(Error::Truncation {
                dim,
                tail: rho.truncation_tail(),
                limit: crate::states::DEFAULT_TAIL_LIMIT,
            });
        }
    }
    if let Some(ch) = channel(loss)? {
        rho = apply_loss(&rho, ch);
    }
    Ok(State::Fock(rho))
}

impl StateSpec {
    /// Builds the state; `dim` bounds Fock representations that need one.
    pub fn build(&self, dim: usize) -> Result<State> {
        match self {
            StateSpec::Gaussian {
                alpha,
                r,
                phi,
                nbar,
                purity,
                kappa0,
                loss,
            } => {
                let alpha = alpha.map_or(C64::new(0.0, 0.0), |a| a.value());
                let st = match (purity, kappa0) {
                    (None, None) => GaussianState::new(alpha, r.unwrap_or(0.0), phi.unwrap_or(0.0), nbar.unwrap_or(0.0))
                        .map_err(|e| field("gaussian", e))?,
                    (Some(mu), k) => {
                        if r.is_some() || nbar.is_some() {
                            return Err(Error::Spec("give either (r, nbar) or (purity, kappa0), not both".into()));
                        }
                        let base = GaussianState::from_purity_kappa(*mu, k.unwrap_or(0.0)).map_err(|e| field("purity/kappa0", e))?;
                        GaussianState {
                            displacement: alpha,
                            squeeze_axis: phi.unwrap_or(0.0),
                            ..base
                        }
                    }
                    (None, Some(_)) => return Err(Error::Spec("field `kappa0` needs `purity`".into())),
                };
                Ok(State::Gaussian(match channel(*loss)? {
                    Some(ch) => st.after_loss(ch),
                    None => st,
                }))
            }
            StateSpec::Fock {
                populations,
                number,
                squeeze,
                loss,
            } => {
                let rho = match (populations, number) {
                    (Some(p), None) => FockDensityMatrix::diagonal(p).map_err(|e| field("populations", e))?,
                    (None, Some(n)) => FockDensityMatrix::number_state(*n, n + 1),
                    _ => return Err(Error::Spec("fock state needs exactly one of `populations`, `number`".into())),
                };
                finish_fock(rho, *squeeze, *loss, dim)
            }
            StateSpec::Superposition { coeffs, squeeze, loss } => {
                let c: Vec<C64> = coeffs.iter().map(|c| c.value()).collect();
                let rho = superposition_state(&c, c.len()).map_err(|e| field("coeffs", e))?;
                finish_fock(rho, *squeeze, *loss, dim)
            }
            StateSpec::Cat { gamma, squeeze, loss } => {
                let rho = cat_state(gamma.value(), dim).map_err(|e| field("gamma", e))?;
                finish_fock(rho, *squeeze, *loss, dim)
            }
            StateSpec::Mixture { components, loss } => {
                if components.is_empty() {
                    return Err(Error::Spec("field `components`: empty mixture".into()));
                }
                let mut parts = Vec::new();
                for (i, c) in components.iter().enumerate() {
                    let st = c.state.build(dim).map_err(|e| match e {
                        Error::Spec(m) => Error::Spec(format!("components[{i}]: {m}")),
                        other => other,
                    })?;
                    parts.push((c.weight, st.as_fock(dim)?));
                }
                let refs: Vec<(f64, &FockDensityMatrix)> = parts.iter().map(|(w, r)| (*w, r)).collect();
                let rho = FockDensityMatrix::mixture(&refs).map_err(|e| field("components", e))?;
                finish_fock(rho, None, *loss, dim)
            }
        }
    }
}

impl GeometrySpec {
    pub fn build(&self, state: Option<&State>, s: OrderParameter) -> Result<PointGeometry> {
        self.build_with(state, s, &MaximizeOptions::default())
    }

    /// As [`GeometrySpec::build`]; `options` drive the numerical search behind
    /// `"optimal": true` when no closed form applies.
    pub fn build_with(&self, state: Option<&State>, s: OrderParameter, options: &MaximizeOptions) -> Result<PointGeometry> {
        let shape: Shape = self.shape.parse().map_err(|e| field("shape", e))?;
        if self.optimal {
            return self.optimal_geometry(shape, state, s, options);
        }
        let base = match (self.base, self.sides) {
            (Some([x0, y0, x1, y1]), None) => BaseRectangle::new(x0, y0, x1, y1),
            (None, Some([dq, dp])) => BaseRectangle::from_sides(dq, dp),
            _ => return Err(Error::Spec("geometry needs exactly one of `base`, `sides`".into())),
        };
        let squeeze = match (shape.is_squeezed(), self.squeeze) {
            (true, Some(sq)) => Some(SqueezeMap::new(sq.r, sq.phi).map_err(|e| field("squeeze", e))?),
            (true, None) => Some(SqueezeMap::identity()),
            (false, None) => None,
            (false, Some(_)) => return Err(Error::Spec(format!("field `squeeze`: not allowed for {}", shape.name()))),
        };
        PointGeometry::new(base, self.theta, squeeze, shape).map_err(|e| field("geometry", e))
    }

    fn optimal_geometry(&self, shape: Shape, state: Option<&State>, s: OrderParameter, options: &MaximizeOptions) -> Result<PointGeometry> {
        let Some(state) = state else {
            return Err(Error::Spec("field `optimal`: needs a state".into()));
        };
        if let (State::Gaussian(g), false) = (state, shape.is_squeezed()) {
            return Ok(gaussian_optimal_for_state(g, s, shape).1);
        }
        if self.base.is_some() || self.sides.is_some() {
            return Err(Error::Spec("field `optimal`: `base`/`sides` are chosen by the search".into()));
        }
        let objective = match shape {
            Shape::Rectangle => Objective::J,
            Shape::RightTriangle => Objective::JPrime,
            Shape::Parallelogram => Objective::N,
            Shape::ShearedTriangle => Objective::NPrime,
        };
        let mut p = OptimizationProblem::new(objective, StateFamily::Fixed(state.clone()), s).with_options(*options);
        match (shape.is_squeezed(), self.squeeze) {
            (true, Some(sq)) => {
                let map = SqueezeMap::new(sq.r, sq.phi).map_err(|e| field("squeeze", e))?;
                p = p.with_initial(PointGeometry::new(BaseRectangle::from_sides(0.5, 0.5), 0.0, Some(map), shape)?);
                p.blocks = vec![VariableBlock::Geometry];
            }
            (false, Some(_)) => return Err(Error::Spec(format!("field `squeeze`: not allowed for {}", shape.name()))),
            _ => {}
        }
        let m = maximize(&p)?;
        if !m.converged {
            return Err(Error::NonConvergence("no start of the geometry search converged".into()));
        }
        Ok(m.argmax.geometry)
    }
}

pub fn load_state(text: &str, dim: usize) -> Result<State> {
    parse_state(text)?.build(dim)
}
