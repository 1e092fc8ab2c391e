//! Phase-space coordinates, rotations, squeeze maps and the vertex sets
//! used by the test functionals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// A point `(q, p)` in phase space, with `α = q + ip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub q: f64,
    pub p: f64,
}

impl PhaseSpacePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn origin() -> Self {
        Self { q: 0.0, p: 0.0 }
    }

    pub fn from_complex(alpha: C64) -> Self {
        Self {
            q: alpha.re,
            p: alpha.im,
        }
    }

    pub fn to_complex(self) -> C64 {
        C64::new(self.q, self.p)
    }
}

/// Applies `R(θ) = [[cos θ, sin θ], [-sin θ, cos θ]]` to `(q, p)`.
pub fn rotate(point: PhaseSpacePoint, theta: f64) -> PhaseSpacePoint {
    let (sin, cos) = theta.sin_cos();
    PhaseSpacePoint {
        q: cos * point.q + sin * point.p,
        p: -sin * point.q + cos * point.p,
    }
}

/// Order parameter `s` of the quasiprobability family (`s = 0` Wigner,
/// `s = -1` Husimi Q). Positive values are rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OrderParameter(f64);

impl OrderParameter {
    pub const WIGNER: OrderParameter = OrderParameter(0.0);
    pub const HUSIMI: OrderParameter = OrderParameter(-1.0);

    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::param("s", "must be finite"));
        }
        if s > 0.0 {
            return Err(Error::PositiveOrder(s));
        }
        // normalise -0.0 so cache keys agree
        Ok(Self(if s == 0.0 { 0.0 } else { s }))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `π(1-s)/2`, the factor mapping `W` onto the scaled value.
    pub fn scale(self) -> f64 {
        PI * (1.0 - self.0) / 2.0
    }

    /// Eigenvalue ratio `(s+1)/(s-1)` of `T(s) = ((s+1)/(s-1))^n`.
    pub fn ratio(self) -> f64 {
        (self.0 + 1.0) / (self.0 - 1.0)
    }
}

impl TryFrom<f64> for OrderParameter {
    type Error = Error;

    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<OrderParameter> for f64 {
    fn from(s: OrderParameter) -> f64 {
        s.0
    }
}

/// The phase-space transform `S[α] = α cosh r + α* e^{2iφ} sinh r` induced by
/// squeezing with strength `r` along axis `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeMap {
    pub strength: f64,
    pub axis: f64,
}

impl SqueezeMap {
    pub fn new(strength: f64, axis: f64) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::param("squeeze.strength", "must be finite and >= 0"));
        }
        if !axis.is_finite() {
            return Err(Error::param("squeeze.axis", "must be finite"));
        }
        Ok(Self { strength, axis })
    }

    pub fn identity() -> Self {
        Self {
            strength: 0.0,
            axis: 0.0,
        }
    }

    pub fn apply(&self, alpha: C64) -> C64 {
        squeeze_map(alpha, *self)
    }

    /// The real 2×2 matrix acting on `(q, p)`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (ch, sh) = (self.strength.cosh(), self.strength.sinh());
        let (s2, c2) = (2.0 * self.axis).sin_cos();
        [[ch + sh * c2, sh * s2], [sh * s2, ch - sh * c2]]
    }
}

pub fn squeeze_map(alpha: C64, map: SqueezeMap) -> C64 {
    if map.strength == 0.0 {
        return alpha;
    }
    alpha * map.strength.cosh() + alpha.conj() * C64::from_polar(1.0, 2.0 * map.axis) * map.strength.sinh()
}

/// Test geometry family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rectangle,
    RightTriangle,
    Parallelogram,
    ShearedTriangle,
}

impl Shape {
    pub fn is_three_point(self) -> bool {
        matches!(self, Shape::RightTriangle | Shape::ShearedTriangle)
    }

    pub fn is_squeezed(self) -> bool {
        matches!(self, Shape::Parallelogram | Shape::ShearedTriangle)
    }

    pub fn vertices(self) -> &'static [Vertex] {
        if self.is_three_point() {
            &[Vertex::V10, Vertex::V01, Vertex::V11]
        } else {
            &[Vertex::V00, Vertex::V10, Vertex::V01, Vertex::V11]
        }
    }

    /// The unsqueezed counterpart with the same vertex set.
    pub fn unsqueezed(self) -> Shape {
        match self {
            Shape::Rectangle | Shape::Parallelogram => Shape::Rectangle,
            Shape::RightTriangle | Shape::ShearedTriangle => Shape::RightTriangle,
        }
    }

    pub fn squeezed(self) -> Shape {
        match self {
            Shape::Rectangle | Shape::Parallelogram => Shape::Parallelogram,
            Shape::RightTriangle | Shape::ShearedTriangle => Shape::ShearedTriangle,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Rectangle => "rectangle",
            Shape::RightTriangle => "right_triangle",
            Shape::Parallelogram => "parallelogram",
            Shape::ShearedTriangle => "sheared_triangle",
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangle" | "rect" => Ok(Shape::Rectangle),
            "right_triangle" | "triangle" => Ok(Shape::RightTriangle),
            "parallelogram" => Ok(Shape::Parallelogram),
            "sheared_triangle" => Ok(Shape::ShearedTriangle),
            other => Err(Error::InvalidGeometry(format!("unknown shape `{other}`"))),
        }
    }
}

/// Vertex labels `(x_i, y_j)` of the base rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vertex {
    V00,
    V10,
    V01,
    V11,
}

impl Vertex {
    /// Sign of the vertex in the test combination: only `(x1, y1)` enters negatively.
    pub fn sign(self) -> f64 {
        if self == Vertex::V11 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Vertex::V00 => "00",
            Vertex::V10 => "10",
            Vertex::V01 => "01",
            Vertex::V11 => "11",
        }
    }
}

/// Corner coordinates `{x0, y0, x1, y1}` in the rotated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseRectangle {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BaseRectangle {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    /// The rectangle `{0, d_q, i d_p, d_q + i d_p}`.
    pub fn from_sides(d_q: f64, d_p: f64) -> Self {
        Self::new(0.0, 0.0, d_q, d_p)
    }

    pub fn d_q(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn d_p(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn corner(&self, v: Vertex) -> PhaseSpacePoint {
        match v {
            Vertex::V00 => PhaseSpacePoint::new(self.x0, self.y0),
            Vertex::V10 => PhaseSpacePoint::new(self.x1, self.y0),
            Vertex::V01 => PhaseSpacePoint::new(self.x0, self.y1),
            Vertex::V11 => PhaseSpacePoint::new(self.x1, self.y1),
        }
    }

    fn negated(&self) -> Self {
        Self::new(-self.x0, -self.y0, -self.x1, -self.y1)
    }
}

/// A test geometry: a base rectangle in a frame rotated by `θ`, optionally
/// mapped through a squeeze transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointGeometry {
    pub base: BaseRectangle,
    pub theta: f64,
    pub squeeze: Option<SqueezeMap>,
    pub shape: Shape,
}

impl PointGeometry {
    /// Validates the shape/squeeze combination and normalises `θ` to `[0, π)`.
    /// A shift of `θ` by π is compensated by negating the base so that the
    /// emitted vertices are unchanged.
    pub fn new(
        base: BaseRectangle,
        theta: f64,
        squeeze: Option<SqueezeMap>,
        shape: Shape,
    ) -> Result<Self> {
        if shape.is_squeezed() != squeeze.is_some() {
            return Err(Error::InvalidGeometry(format!(
                "{} requires the squeeze map to be {}",
                shape.name(),
                if shape.is_squeezed() { "present" } else { "absent" }
            )));
        }
        let coords = [base.x0, base.y0, base.x1, base.y1, theta];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite coordinate".into()));
        }
        let turns = (theta / PI).floor();
        let mut theta = theta - turns * PI;
        if theta >= PI {
            theta -= PI;
        }
        let base = if (turns as i64).rem_euclid(2) == 1 {
            base.negated()
        } else {
            base
        };
        Ok(Self {
            base,
            theta,
            squeeze,
            shape,
        })
    }

    pub fn rectangle(base: BaseRectangle, theta: f64) -> Self {
        Self::new(base, theta, None, Shape::Rectangle).expect("finite rectangle")
    }

    pub fn right_triangle(base: BaseRectangle, theta: f64) -> Self {
        Self::new(base, theta, None, Shape::RightTriangle).expect("finite triangle")
    }

    pub fn parallelogram(base: BaseRectangle, theta: f64, squeeze: SqueezeMap) -> Self {
        Self::new(base, theta, Some(squeeze), Shape::Parallelogram).expect("finite parallelogram")
    }

    pub fn sheared_triangle(base: BaseRectangle, theta: f64, squeeze: SqueezeMap) -> Self {
        Self::new(base, theta, Some(squeeze), Shape::ShearedTriangle)
            .expect("finite sheared triangle")
    }

    /// Same vertices, relabelled as another shape of the same vertex count.
    pub fn with_shape(&self, shape: Shape) -> Result<Self> {
        let squeeze = if shape.is_squeezed() {
            Some(self.squeeze.unwrap_or_else(SqueezeMap::identity))
        } else {
            None
        };
        Self::new(self.base, self.theta, squeeze, shape)
    }

    /// All four lab-frame vertex images, regardless of shape.
    pub fn all_vertices(&self) -> [(Vertex, C64); 4] {
        let frame = C64::from_polar(1.0, self.theta);
        [Vertex::V00, Vertex::V10, Vertex::V01, Vertex::V11].map(|v| {
            let local = self.base.corner(v).to_complex() * frame;
            let lab = match self.squeeze {
                Some(map) => map.apply(local),
                None => local,
            };
            (v, lab)
        })
    }

    /// Labelled vertices evaluated by the test functional of this shape.
    pub fn points(&self) -> Vec<(Vertex, PhaseSpacePoint)> {
        let verts = self.all_vertices();
        self.shape
            .vertices()
            .iter()
            .map(|v| {
                let (_, lab) = verts.iter().find(|(w, _)| w == v).expect("vertex present");
                (*v, PhaseSpacePoint::from_complex(*lab))
            })
            .collect()
    }

    pub fn vertex(&self, v: Vertex) -> C64 {
        self.all_vertices()
            .into_iter()
            .find(|(w, _)| *w == v)
            .map(|(_, a)| a)
            .expect("vertex present")
    }

    /// Translates every vertex by `shift` in the lab frame (the base is
    /// adjusted through the inverse squeeze and rotation).
    pub fn translated(&self, shift: C64) -> Self {
        let local = match self.squeeze {
            Some(map) => inverse_squeeze(shift, map),
            None => shift,
        } * C64::from_polar(1.0, -self.theta);
        let mut out = *self;
        out.base.x0 += local.re;
        out.base.x1 += local.re;
        out.base.y0 += local.im;
        out.base.y1 += local.im;
        out
    }

    /// Signed area `(v10 - v00) × (v01 - v00)` of the vertex quadrilateral.
    pub fn area(&self) -> f64 {
        let v = self.all_vertices();
        let e1 = v[1].1 - v[0].1;
        let e2 = v[2].1 - v[0].1;
        e1.re * e2.im - e1.im * e2.re
    }

    /// Zero-area geometries are accepted but flagged.
    pub fn is_degenerate(&self) -> bool {
        self.base.d_q() == 0.0 || self.base.d_p() == 0.0
    }
}

/// Inverse of `S[·]`: `S⁻¹[β] = β cosh r - β* e^{2iφ} sinh r`.
pub fn inverse_squeeze(beta: C64, map: SqueezeMap) -> C64 {
    beta * map.strength.cosh() - beta.conj() * C64::from_polar(1.0, 2.0 * map.axis) * map.strength.sinh()
}
