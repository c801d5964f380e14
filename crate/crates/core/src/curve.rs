//! Unit-speed planar arcs with nonvanishing curvature.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_integrate, gauss_legendre_12};

/// Points used for the unit-speed and curvature checks.
pub const VALIDATION_GRID: usize = 10_000;
pub const SPEED_TOLERANCE: f64 = 1e-10;
const KAPPA_SAFETY: f64 = 0.9;
const TABLE_KNOTS: usize = 4096;
const MIN_RAW_SPEED: f64 = 1e-8;
const MIN_RAW_CURVATURE: f64 = 1e-8;

pub type Vec2 = [f64; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn det(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// A regular parametrised curve on `[0, 1]` with two derivatives; input to
/// [`reparametrize_arclength`].
pub trait RawCurve: Send + Sync {
    fn position(&self, u: f64) -> Vec2;
    fn derivative(&self, u: f64) -> Vec2;
    fn second_derivative(&self, u: f64) -> Vec2;
}

/// Point, unit tangent, unit normal (tangent turned by +90 degrees) and
/// signed curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDescriptor {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone)]
enum Kind {
    Circle { kappa: f64 },
    Parabola,
    Generic(Arc<Reparametrized>),
}

struct Reparametrized {
    raw: Arc<dyn RawCurve>,
    length: f64,
    /// Cumulative raw arclength at `u = k / TABLE_KNOTS`.
    cumulative: Vec<f64>,
}

impl Reparametrized {
    fn speed(&self, u: f64) -> f64 {
        let d = self.raw.derivative(u);
        d[0].hypot(d[1])
    }

    /// Raw parameter with arclength `t * length`, by safeguarded Newton
    /// inside the bracketing table segment.
    fn parameter(&self, t: f64) -> f64 {
        let target = t.clamp(0.0, 1.0) * self.length;
        let k = match self.cumulative.binary_search_by(|s| s.total_cmp(&target)) {
            Ok(k) => return k as f64 / TABLE_KNOTS as f64,
            Err(k) => k.clamp(1, TABLE_KNOTS) - 1,
        };
        let knot = k as f64 / TABLE_KNOTS as f64;
        let (mut lo, mut hi) = (knot, (k + 1) as f64 / TABLE_KNOTS as f64);
        let base = self.cumulative[k];
        let span = self.cumulative[k + 1] - base;
        let mut u = lo + (hi - lo) * ((target - base) / span).clamp(0.0, 1.0);
        let gl = gauss_legendre_12();
        for _ in 0..60 {
            let f = base + gl.integrate(knot, u, |x| self.speed(x)) - target;
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let step = f / self.speed(u);
            let mut next = u - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 1e-15 {
                return next;
            }
            u = next;
        }
        u
    }
}

/// An arclength-parametrised curve `gamma: [0, 1] -> R^2` with `|gamma'| = 1`
/// and `|det(gamma', gamma'')| >= kappa_min > 0`.
#[derive(Clone)]
pub struct CurveSpec {
    kind: Kind,
    kappa_min: f64,
    kappa_max: f64,
}

impl fmt::Debug for CurveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveSpec")
            .field("family", &self.family())
            .field("kappa_min", &self.kappa_min)
            .field("kappa_max", &self.kappa_max)
            .finish()
    }
}

/// Raw parabola arclength `int_0^u sqrt(1 + 4x^2) dx`.
fn parabola_length(u: f64) -> f64 {
    let s = (1.0 + 4.0 * u * u).sqrt();
    0.5 * u * s + 0.25 * (2.0 * u).asinh()
}

fn parabola_parameter(t: f64) -> f64 {
    // Newton from the arclength itself; the length is convex in u so the
    // iteration is monotone from the right.
    let mut u = t;
    for _ in 0..60 {
        let f = parabola_length(u) - t;
        let next = u - f / (1.0 + 4.0 * u * u).sqrt();
        if (next - u).abs() <= 1e-16 {
            return next;
        }
        u = next;
    }
    u
}

pub fn make_circle_arc(kappa: f64) -> Result<CurveSpec> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParams(format!("curvature {kappa} must be positive")));
    }
    CurveSpec::validated(Kind::Circle { kappa })
}

/// `u -> (u, u^2)` on `[0, T]` with unit arclength.
pub fn make_parabola_arc() -> CurveSpec {
    CurveSpec::validated(Kind::Parabola).expect("parabola arc is regular")
}

/// The end parameter `T` of the unit-length parabola arc.
pub fn parabola_end_parameter() -> f64 {
    parabola_parameter(1.0)
}

/// Reparametrises `raw` by arclength and rescales it to unit length. The
/// original length is kept in [`CurveSpec::raw_length`].
pub fn reparametrize_arclength(raw: Arc<dyn RawCurve>) -> Result<CurveSpec> {
    for i in 0..VALIDATION_GRID {
        let u = i as f64 / (VALIDATION_GRID - 1) as f64;
        let d = raw.derivative(u);
        if d[0].hypot(d[1]) < MIN_RAW_SPEED {
            return Err(Error::DegenerateSpeed { at: u });
        }
        let k = det(d, raw.second_derivative(u)) / d[0].hypot(d[1]).powi(3);
        if k.abs() < MIN_RAW_CURVATURE {
            return Err(Error::CurvatureVanishes { at: u });
        }
    }
    let speed = |u: f64| {
        let d = raw.derivative(u);
        d[0].hypot(d[1])
    };
    let mut cumulative = Vec::with_capacity(TABLE_KNOTS + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for k in 0..TABLE_KNOTS {
        let a = k as f64 / TABLE_KNOTS as f64;
        let b = (k + 1) as f64 / TABLE_KNOTS as f64;
        acc += adaptive_integrate(&speed, a, b, 1e-14);
        cumulative.push(acc);
    }
    let inner = Reparametrized { raw, length: acc, cumulative };
    CurveSpec::validated(Kind::Generic(Arc::new(inner)))
}

impl CurveSpec {
    fn validated(kind: Kind) -> Result<Self> {
        let mut spec = CurveSpec { kind, kappa_min: 0.0, kappa_max: 0.0 };
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..VALIDATION_GRID {
            let t = i as f64 / (VALIDATION_GRID - 1) as f64;
            let d = spec.derivative(t);
            let speed = d[0].hypot(d[1]);
            if (speed - 1.0).abs() > SPEED_TOLERANCE {
                return Err(Error::DegenerateSpeed { at: t });
            }
            let k = det(d, spec.second_derivative(t)).abs();
            if k < MIN_RAW_CURVATURE {
                return Err(Error::CurvatureVanishes { at: t });
            }
            lo = lo.min(k);
            hi = hi.max(k);
        }
        spec.kappa_min = KAPPA_SAFETY * lo;
        spec.kappa_max = hi;
        Ok(spec)
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Circle { .. } => "circle_arc",
            Kind::Parabola => "parabola_arc",
            Kind::Generic(_) => "generic",
        }
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    /// Largest sampled `|curvature|`.
    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    /// Length of the curve before rescaling to unit length.
    pub fn raw_length(&self) -> f64 {
        match &self.kind {
            Kind::Circle { .. } | Kind::Parabola => 1.0,
            Kind::Generic(g) => g.length,
        }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        match &self.kind {
            Kind::Circle { kappa } => {
                let (s, c) = (kappa * t).sin_cos();
                [s / kappa, (1.0 - c) / kappa]
            }
            Kind::Parabola => {
                let u = parabola_parameter(t);
                [u, u * u]
            }
            Kind::Generic(g) => {
                let p = g.raw.position(g.parameter(t));
                [p[0] / g.length, p[1] / g.length]
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Vec2 {
        match &self.kind {
            Kind::Circle { kappa } => {
                let (s, c) = (kappa * t).sin_cos();
                [c, s]
            }
            Kind::Parabola => {
                let u = parabola_parameter(t);
                let s = (1.0 + 4.0 * u * u).sqrt();
                [1.0 / s, 2.0 * u / s]
            }
            Kind::Generic(g) => {
                let d = g.raw.derivative(g.parameter(t));
                let s = d[0].hypot(d[1]);
                [d[0] / s, d[1] / s]
            }
        }
    }

    pub fn second_derivative(&self, t: f64) -> Vec2 {
        match &self.kind {
            Kind::Circle { kappa } => {
                let (s, c) = (kappa * t).sin_cos();
                [-kappa * s, kappa * c]
            }
            Kind::Parabola => {
                let u = parabola_parameter(t);
                let w = (1.0 + 4.0 * u * u).powi(2);
                [-4.0 * u / w, 2.0 / w]
            }
            Kind::Generic(g) => {
                let u = g.parameter(t);
                let d = g.raw.derivative(u);
                let dd = g.raw.second_derivative(u);
                let s2 = dot(d, d);
                let proj = dot(d, dd);
                let scale = g.length / (s2 * s2);
                [scale * (dd[0] * s2 - d[0] * proj), scale * (dd[1] * s2 - d[1] * proj)]
            }
        }
    }

    pub fn curvature(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Circle { kappa } => kappa,
            _ => det(self.derivative(t), self.second_derivative(t)),
        }
    }

    pub fn frame(&self, t: f64) -> Frame {
        let tangent = self.derivative(t);
        Frame {
            point: self.position(t),
            tangent,
            normal: [-tangent[1], tangent[0]],
            curvature: self.curvature(t),
        }
    }

    /// Unit normal direction at `t`, as an angle in `[0, 2 pi)`.
    pub fn normal_angle(&self, t: f64) -> f64 {
        let n = self.frame(t).normal;
        n[1].atan2(n[0]).rem_euclid(2.0 * PI)
    }

    pub fn descriptor(&self) -> Option<CurveDescriptor> {
        let mut params = BTreeMap::new();
        let family = match self.kind {
            Kind::Circle { kappa } => {
                params.insert("curvature".to_string(), kappa);
                "circle_arc"
            }
            Kind::Parabola => "parabola_arc",
            Kind::Generic(_) => return None,
        };
        Some(CurveDescriptor { family: family.to_string(), params })
    }

    pub fn from_descriptor(desc: &CurveDescriptor) -> Result<Self> {
        match desc.family.as_str() {
            "circle_arc" | "circle" => {
                let kappa = desc
                    .params
                    .get("curvature")
                    .or_else(|| desc.params.get("kappa"))
                    .copied()
                    .unwrap_or(2.0 * PI);
                make_circle_arc(kappa)
            }
            "parabola_arc" | "parabola" => Ok(make_parabola_arc()),
            other => Err(Error::InvalidParams(format!("unknown curve family '{other}'"))),
        }
    }
}

impl Serialize for CurveSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.descriptor() {
            Some(d) => d.serialize(serializer),
            None => Err(serde::ser::Error::custom("generic curves are not serializable")),
        }
    }
}

impl<'de> Deserialize<'de> for CurveSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let desc = CurveDescriptor::deserialize(deserializer)?;
        CurveSpec::from_descriptor(&desc).map_err(serde::de::Error::custom)
    }
}
