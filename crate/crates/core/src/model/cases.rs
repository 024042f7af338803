use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;

use super::jet::{ScalarJet, VectorJet};
use super::{interface_tangent, InterfaceData, PhysicalParams, SourceData};
use crate::error::{Error, Result};
use crate::mesh::{Point, Vec2};

/// Closed-form primary fields. The Darcy velocity is derived as
/// `-K grad(p_p) / mu`, so the Darcy law holds exactly.
pub trait ExactFields: Send + Sync {
    fn fluid_velocity(&self, x: &Point, t: f64) -> VectorJet;
    fn fluid_pressure(&self, x: &Point, t: f64) -> ScalarJet;
    fn porous_pressure(&self, x: &Point, t: f64) -> ScalarJet;
    /// Time derivative of the porous pressure.
    fn porous_pressure_rate(&self, x: &Point, t: f64) -> ScalarJet;
    fn displacement(&self, x: &Point, t: f64) -> VectorJet;
    /// Time derivative of the displacement.
    fn displacement_rate(&self, x: &Point, t: f64) -> VectorJet;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    /// `exp(t)`
    Exponential,
    /// `1 + t`
    Linear,
}

impl TimeProfile {
    pub fn value(self, t: f64) -> f64 {
        match self {
            TimeProfile::Exponential => t.exp(),
            TimeProfile::Linear => 1.0 + t,
        }
    }

    pub fn rate(self, t: f64) -> f64 {
        match self {
            TimeProfile::Exponential => t.exp(),
            TimeProfile::Linear => 1.0,
        }
    }
}

type ScalarFn = Arc<dyn Fn(&Point) -> ScalarJet + Send + Sync>;
type VectorFn = Arc<dyn Fn(&Point) -> VectorJet + Send + Sync>;

/// Fields of the form `scale * theta(t) * S(x)`.
#[derive(Clone)]
pub struct SeparableFields {
    pub time: TimeProfile,
    pub scale: f64,
    pub fluid_velocity: VectorFn,
    pub fluid_pressure: ScalarFn,
    pub porous_pressure: ScalarFn,
    pub displacement: VectorFn,
}

impl fmt::Debug for SeparableFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableFields")
            .field("time", &self.time)
            .field("scale", &self.scale)
            .finish()
    }
}

impl ExactFields for SeparableFields {
    fn fluid_velocity(&self, x: &Point, t: f64) -> VectorJet {
        (self.fluid_velocity)(x).scale(self.scale * self.time.value(t))
    }
    fn fluid_pressure(&self, x: &Point, t: f64) -> ScalarJet {
        (self.fluid_pressure)(x) * (self.scale * self.time.value(t))
    }
    fn porous_pressure(&self, x: &Point, t: f64) -> ScalarJet {
        (self.porous_pressure)(x) * (self.scale * self.time.value(t))
    }
    fn porous_pressure_rate(&self, x: &Point, t: f64) -> ScalarJet {
        (self.porous_pressure)(x) * (self.scale * self.time.rate(t))
    }
    fn displacement(&self, x: &Point, t: f64) -> VectorJet {
        (self.displacement)(x).scale(self.scale * self.time.value(t))
    }
    fn displacement_rate(&self, x: &Point, t: f64) -> VectorJet {
        (self.displacement)(x).scale(self.scale * self.time.rate(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    /// Trigonometric fields times `exp(t)`; interface data nonzero.
    Smooth,
    /// Fields inside the discrete spaces, linear in time.
    Polynomial,
    /// Fields concentrated in a layer of width `delta` on both sides of the
    /// interface `y = 0.5`.
    Layer {
        delta: f64,
    },
    Zero,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Smooth => "builtin-smooth",
            CaseKind::Polynomial => "polynomial",
            CaseKind::Layer { .. } => "layer",
            CaseKind::Zero => "zero",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "builtin-smooth" | "smooth" => Some(CaseKind::Smooth),
            "polynomial" => Some(CaseKind::Polynomial),
            "layer" => Some(CaseKind::Layer {
                delta: DEFAULT_LAYER_WIDTH,
            }),
            "zero" => Some(CaseKind::Zero),
            _ => None,
        }
    }
}

pub const DEFAULT_LAYER_WIDTH: f64 = 0.05;

fn smooth_fields() -> SeparableFields {
    let pi = |p: &Point| (ScalarJet::x(p) * PI, ScalarJet::y(p) * PI);
    SeparableFields {
        time: TimeProfile::Exponential,
        scale: 1.0,
        fluid_velocity: Arc::new(move |p| {
            let (px, py) = pi(p);
            let (x, y) = (ScalarJet::x(p), ScalarJet::y(p));
            VectorJet::new(
                px.sin() * py.cos() + x * y,
                -(px.cos() * py.sin()) + x.powi(2),
            )
        }),
        fluid_pressure: Arc::new(move |p| {
            let (px, py) = pi(p);
            px.cos() * py.cos() + 1.0
        }),
        porous_pressure: Arc::new(move |p| {
            let (px, py) = pi(p);
            px.cos() * py.sin() + 0.5
        }),
        displacement: Arc::new(move |p| {
            let (px, py) = pi(p);
            let (x, y) = (ScalarJet::x(p), ScalarJet::y(p));
            VectorJet::new((px.sin() * py.sin() + x) * 0.5, x * y * 0.5)
        }),
    }
}

fn polynomial_fields() -> SeparableFields {
    SeparableFields {
        time: TimeProfile::Linear,
        scale: 1.0,
        fluid_velocity: Arc::new(|p| {
            let (x, y) = (ScalarJet::x(p), ScalarJet::y(p));
            VectorJet::new(y.powi(2) + x, x.powi(2))
        }),
        fluid_pressure: Arc::new(|p| ScalarJet::y(p) * 3.0 + 0.5),
        porous_pressure: Arc::new(|_| ScalarJet::constant(0.5)),
        displacement: Arc::new(|p| {
            let (x, y) = (ScalarJet::x(p), ScalarJet::y(p));
            VectorJet::new(x * 0.1 + y * 0.2, x * 0.3 + y * 0.05)
        }),
    }
}

fn layer_fields(delta: f64) -> SeparableFields {
    // e_up decays into the fluid, e_down into the porous medium
    let e_up = move |p: &Point| ((ScalarJet::y(p) + (-0.5)) * (-1.0 / delta)).exp();
    let e_down = move |p: &Point| ((ScalarJet::y(p) + (-0.5)) * (1.0 / delta)).exp();
    let px = |p: &Point| ScalarJet::x(p) * PI;
    SeparableFields {
        time: TimeProfile::Exponential,
        scale: 1.0,
        fluid_velocity: Arc::new(move |p| {
            VectorJet::new(px(p).sin() * e_up(p), px(p).cos() * e_up(p) * delta)
        }),
        fluid_pressure: Arc::new(move |p| px(p).cos() * e_up(p)),
        porous_pressure: Arc::new(move |p| px(p).cos() * e_down(p)),
        displacement: Arc::new(move |p| {
            VectorJet::new(
                px(p).sin() * e_down(p) * delta,
                px(p).cos() * e_down(p) * delta,
            )
        }),
    }
}

fn zero_fields() -> SeparableFields {
    SeparableFields {
        time: TimeProfile::Linear,
        scale: 0.0,
        fluid_velocity: Arc::new(|_| VectorJet::zero()),
        fluid_pressure: Arc::new(|_| ScalarJet::zero()),
        porous_pressure: Arc::new(|_| ScalarJet::zero()),
        displacement: Arc::new(|_| VectorJet::zero()),
    }
}

/// A manufactured solution with all data derived from its fields.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub params: PhysicalParams,
    k_inv: Matrix2<f64>,
    fields: SeparableFields,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("scale", &self.fields.scale)
            .finish()
    }
}

impl ManufacturedCase {
    pub fn new(kind: CaseKind, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let fields = match kind {
            CaseKind::Smooth => smooth_fields(),
            CaseKind::Polynomial => polynomial_fields(),
            CaseKind::Layer { delta } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "layer width must be positive".into(),
                    ));
                }
                layer_fields(delta)
            }
            CaseKind::Zero => zero_fields(),
        };
        Ok(ManufacturedCase {
            kind,
            k_inv: params.k_inverse()?,
            params,
            fields,
        })
    }

    /// The shipped smooth verification case.
    pub fn builtin_smooth(params: PhysicalParams) -> Result<Self> {
        Self::new(CaseKind::Smooth, params)
    }

    pub fn by_name(name: &str, params: PhysicalParams) -> Result<Self> {
        let kind = CaseKind::from_name(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown case '{name}'")))?;
        Self::new(kind, params)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Same case with every field (and hence all data) multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.fields.scale *= c;
        s
    }

    pub fn fields(&self) -> &dyn ExactFields {
        &self.fields
    }

    pub fn fluid_velocity(&self, x: &Point, t: f64) -> VectorJet {
        self.fields.fluid_velocity(x, t)
    }

    pub fn fluid_pressure(&self, x: &Point, t: f64) -> ScalarJet {
        self.fields.fluid_pressure(x, t)
    }

    pub fn porous_pressure(&self, x: &Point, t: f64) -> ScalarJet {
        self.fields.porous_pressure(x, t)
    }

    pub fn displacement(&self, x: &Point, t: f64) -> VectorJet {
        self.fields.displacement(x, t)
    }

    pub fn displacement_rate(&self, x: &Point, t: f64) -> VectorJet {
        self.fields.displacement_rate(x, t)
    }

    /// Darcy velocity `-K grad(p_p) / mu` and its gradient.
    pub fn darcy_velocity(&self, x: &Point, t: f64) -> (Vec2, Matrix2<f64>) {
        let p = self.porous_pressure(x, t);
        let s = -1.0 / self.params.mu;
        (self.params.k * p.grad * s, self.params.k * p.hess * s)
    }

    pub fn fluid_stress(&self, x: &Point, t: f64) -> Matrix2<f64> {
        let u = self.fluid_velocity(x, t);
        self.params
            .stress_stokes(&u.grad, self.fluid_pressure(x, t).value)
    }

    pub fn porous_stress(&self, x: &Point, t: f64) -> Matrix2<f64> {
        let eta = self.displacement(x, t);
        self.params
            .stress_poroelastic(&eta.grad, self.porous_pressure(x, t).value)
    }

    /// Exact multiplier `-(sigma_f n_f).n_f`.
    pub fn multiplier(&self, x: &Point, t: f64, n_f: &Vec2) -> f64 {
        -(self.fluid_stress(x, t) * n_f).dot(n_f)
    }

    fn k_inv(&self) -> &Matrix2<f64> {
        &self.k_inv
    }

    /// Residual of Darcy's law `mu K^-1 u_p + grad p_p` (zero by
    /// construction).
    pub fn darcy_residual(&self, x: &Point, t: f64) -> Vec2 {
        let (u, _) = self.darcy_velocity(x, t);
        self.k_inv() * u * self.params.mu + self.porous_pressure(x, t).grad
    }
}

impl SourceData for ManufacturedCase {
    fn params(&self) -> &PhysicalParams {
        &self.params
    }

    fn fluid_force(&self, x: &Point, t: f64) -> Vec2 {
        let u = self.fluid_velocity(x, t);
        let p = self.fluid_pressure(x, t);
        -(u.laplacian() + u.grad_div()) * self.params.mu + p.grad
    }

    fn fluid_source(&self, x: &Point, t: f64) -> f64 {
        self.fluid_velocity(x, t).div()
    }

    fn porous_force(&self, x: &Point, t: f64) -> Vec2 {
        let eta = self.displacement(x, t);
        let p = self.porous_pressure(x, t);
        let (lp, mp) = (self.params.lambda_p, self.params.mu_p);
        -(eta.grad_div() * (lp + mp) + eta.laplacian() * mp) + p.grad * self.params.alpha
    }

    fn porous_source(&self, x: &Point, t: f64) -> f64 {
        let dp = self.fields.porous_pressure_rate(x, t).value;
        let ddiv = self.displacement_rate(x, t).div();
        let (_, grad_up) = self.darcy_velocity(x, t);
        self.params.s0 * dp + self.params.alpha * ddiv + grad_up.trace()
    }

    fn fluid_velocity_bc(&self, x: &Point, t: f64) -> Vec2 {
        self.fluid_velocity(x, t).value
    }

    fn displacement_bc(&self, x: &Point, t: f64) -> Vec2 {
        self.displacement(x, t).value
    }

    fn darcy_velocity_bc(&self, x: &Point, t: f64) -> Vec2 {
        self.darcy_velocity(x, t).0
    }

    fn pressure_bc(&self, x: &Point, t: f64) -> f64 {
        self.porous_pressure(x, t).value
    }

    fn interface_data(&self, x: &Point, t: f64, n_f: &Vec2) -> InterfaceData {
        let n_p = -n_f;
        let tau = interface_tangent(n_f);
        let u_f = self.fluid_velocity(x, t).value;
        let (u_p, _) = self.darcy_velocity(x, t);
        let deta = self.displacement_rate(x, t).value;
        let sf_n = self.fluid_stress(x, t) * n_f;
        let sp_n = self.porous_stress(x, t) * n_p;
        let k_tau = tau.dot(&(self.params.k * tau));
        let c = self.params.mu * self.params.alpha_bjs / k_tau.sqrt();
        InterfaceData {
            g1: u_f.dot(n_f) + (deta + u_p).dot(&n_p),
            g2: self.porous_pressure(x, t).value + sf_n.dot(n_f),
            g3: sf_n + sp_n,
            g4: sf_n.dot(&tau) + c * (u_f - deta).dot(&tau),
        }
    }

    fn initial_pressure(&self, x: &Point) -> f64 {
        self.porous_pressure(x, 0.0).value
    }

    fn initial_displacement(&self, x: &Point) -> Vec2 {
        self.displacement(x, 0.0).value
    }

    fn exact(&self) -> Option<&ManufacturedCase> {
        Some(self)
    }
}
