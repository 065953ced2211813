//! Balance laws `U_t + F(U)_x = g(U)/eps` with stiff relaxation sources.
//!
//! Every model exposes its flux, the unscaled source `g` (the scheme divides
//! by `eps`), the analytic source Jacobian, a bound on the characteristic
//! speeds of `dF/dU`, the projection onto the equilibrium manifold
//! `g(U) = 0`, and an admissibility test.

use crate::error::{Error, Result};

/// The stiff part of a balance law, `g` and `dg/dU`.
pub trait StiffSource: Send + Sync {
    fn dim(&self) -> usize;

    fn source(&self, u: &[f64], out: &mut [f64]);

    /// Row-major `d x d` Jacobian `dg/dU`.
    fn source_jacobian(&self, u: &[f64], out: &mut [f64]);

    /// `false` when row `k` of `g` vanishes identically; such components
    /// are updated explicitly by the implicit solvers.
    fn source_row_active(&self, _k: usize) -> bool {
        true
    }
}

pub trait BalanceLaw: StiffSource {
    fn name(&self) -> &str;

    fn component_names(&self) -> Vec<String>;

    fn flux(&self, u: &[f64], out: &mut [f64]);

    /// Upper bound on the spectral radius of `dF/dU` at `u`.
    fn max_wave_speed(&self, u: &[f64]) -> f64;

    fn equilibrium(&self, u: &[f64], out: &mut [f64]);

    fn admissible(&self, u: &[f64]) -> bool;

    fn try_flux(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.admissible(u) {
            return Err(Error::Inadmissible {
                cell: -1,
                time: f64::NAN,
                state: u.to_vec(),
            });
        }
        self.flux(u, out);
        Ok(())
    }
}

/// The catalog of relaxation systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    /// `u_t + v_x = 0`, `v_t + u_x = -(v - a u)/eps`.
    JinXin { a: f64 },
    /// Unit-gravity shallow water relaxing to `hu = h^2/2`.
    ShallowWater,
    /// Broadwell discrete-velocity gas in `(rho, m, z)`.
    Broadwell,
    /// Euler equations with stiff heat exchange, `K = 1/eps`.
    EulerHeat { gamma: f64, cv: f64, t0: f64 },
    /// Full Euler equations with linear friction, `alpha = 1/eps`.
    EulerFriction { gamma: f64 },
    /// Isentropic Euler with `p = k rho^gamma` and friction `alpha = 1/eps`.
    EulerIsentropic { gamma: f64, k: f64 },
}

pub const DEFAULT_GAMMA: f64 = 1.4;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl ModelSpec {
    pub fn jin_xin(a: f64) -> Result<Self> {
        check(a.abs() < 1.0, || {
            format!("Jin-Xin needs |a| < 1 (subcharacteristic condition), got a = {a}")
        })?;
        Ok(ModelSpec::JinXin { a })
    }

    pub fn shallow_water() -> Self {
        ModelSpec::ShallowWater
    }

    pub fn broadwell() -> Self {
        ModelSpec::Broadwell
    }

    pub fn euler_heat(gamma: f64, cv: f64, t0: f64) -> Result<Self> {
        check(gamma > 1.0, || format!("gamma must exceed 1, got {gamma}"))?;
        check(cv > 0.0, || format!("c_v must be positive, got {cv}"))?;
        check(t0 > 0.0, || format!("T0 must be positive, got {t0}"))?;
        Ok(ModelSpec::EulerHeat { gamma, cv, t0 })
    }

    /// `gamma = 1.4`, `c_v = 1/(gamma - 1)`, `T0 = 1`.
    pub fn euler_heat_default() -> Self {
        ModelSpec::EulerHeat {
            gamma: DEFAULT_GAMMA,
            cv: 1.0 / (DEFAULT_GAMMA - 1.0),
            t0: 1.0,
        }
    }

    pub fn euler_friction(gamma: f64) -> Result<Self> {
        check(gamma > 1.0, || format!("gamma must exceed 1, got {gamma}"))?;
        Ok(ModelSpec::EulerFriction { gamma })
    }

    pub fn euler_isentropic(gamma: f64, k: f64) -> Result<Self> {
        check(gamma > 1.0, || format!("gamma must exceed 1, got {gamma}"))?;
        check(k > 0.0, || format!("k must be positive, got {k}"))?;
        Ok(ModelSpec::EulerIsentropic { gamma, k })
    }

    /// Short identifier used on the command line and in CSV headers.
    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::JinXin { .. } => "jinxin",
            ModelSpec::ShallowWater => "shallow-water",
            ModelSpec::Broadwell => "broadwell",
            ModelSpec::EulerHeat { .. } => "euler-heat",
            ModelSpec::EulerFriction { .. } => "euler-friction",
            ModelSpec::EulerIsentropic { .. } => "euler-isentropic",
        }
    }

    /// Pressure of an Euler state; `None` for models without one.
    pub fn pressure(&self, u: &[f64]) -> Option<f64> {
        match *self {
            ModelSpec::EulerHeat { gamma, .. } | ModelSpec::EulerFriction { gamma } => {
                Some(ideal_gas_pressure(gamma, u))
            }
            ModelSpec::EulerIsentropic { gamma, k } => Some(k * u[0].powf(gamma)),
            _ => None,
        }
    }

    pub fn primitive_names(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::JinXin { .. } => &["u", "v"],
            ModelSpec::ShallowWater => &["h", "u"],
            ModelSpec::Broadwell => &["rho", "u", "z"],
            ModelSpec::EulerHeat { .. } | ModelSpec::EulerFriction { .. } => &["rho", "u", "p"],
            ModelSpec::EulerIsentropic { .. } => &["rho", "u"],
        }
    }

    /// Map primitive variables (see [`primitive_names`](Self::primitive_names))
    /// to conserved ones.
    pub fn primitive_to_conserved(&self, prim: &[f64]) -> Result<Vec<f64>> {
        self.expect_len(prim)?;
        let positive = |v: f64, what: &str| {
            check(v > 0.0 && v.is_finite(), || format!("{what} must be positive, got {v}"))
        };
        Ok(match *self {
            ModelSpec::JinXin { .. } => prim.to_vec(),
            ModelSpec::ShallowWater => {
                positive(prim[0], "h")?;
                vec![prim[0], prim[0] * prim[1]]
            }
            ModelSpec::Broadwell => {
                positive(prim[0], "rho")?;
                vec![prim[0], prim[0] * prim[1], prim[2]]
            }
            ModelSpec::EulerHeat { gamma, .. } | ModelSpec::EulerFriction { gamma } => {
                let (rho, vel, p) = (prim[0], prim[1], prim[2]);
                positive(rho, "rho")?;
                positive(p, "p")?;
                vec![rho, rho * vel, p / (gamma - 1.0) + 0.5 * rho * vel * vel]
            }
            ModelSpec::EulerIsentropic { .. } => {
                positive(prim[0], "rho")?;
                vec![prim[0], prim[0] * prim[1]]
            }
        })
    }

    pub fn conserved_to_primitive(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.expect_len(u)?;
        let positive = |v: f64, what: &str| {
            check(v > 0.0 && v.is_finite(), || format!("{what} must be positive, got {v}"))
        };
        Ok(match *self {
            ModelSpec::JinXin { .. } => u.to_vec(),
            ModelSpec::ShallowWater | ModelSpec::EulerIsentropic { .. } => {
                positive(u[0], "density")?;
                vec![u[0], u[1] / u[0]]
            }
            ModelSpec::Broadwell => {
                positive(u[0], "rho")?;
                vec![u[0], u[1] / u[0], u[2]]
            }
            ModelSpec::EulerHeat { gamma, .. } | ModelSpec::EulerFriction { gamma } => {
                positive(u[0], "rho")?;
                let p = ideal_gas_pressure(gamma, u);
                positive(p, "p")?;
                vec![u[0], u[1] / u[0], p]
            }
        })
    }

    fn expect_len(&self, v: &[f64]) -> Result<()> {
        check(v.len() == self.dim(), || {
            format!("{} expects {} components, got {}", self.id(), self.dim(), v.len())
        })
    }
}

#[inline]
fn ideal_gas_pressure(gamma: f64, u: &[f64]) -> f64 {
    (gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
}

impl StiffSource for ModelSpec {
    fn dim(&self) -> usize {
        match self {
            ModelSpec::JinXin { .. } | ModelSpec::ShallowWater | ModelSpec::EulerIsentropic { .. } => 2,
            _ => 3,
        }
    }

    fn source(&self, u: &[f64], out: &mut [f64]) {
        match *self {
            ModelSpec::JinXin { a } => {
                out[0] = 0.0;
                out[1] = -(u[1] - a * u[0]);
            }
            ModelSpec::ShallowWater => {
                out[0] = 0.0;
                out[1] = -(u[1] - 0.5 * u[0] * u[0]);
            }
            ModelSpec::Broadwell => {
                let (rho, m, z) = (u[0], u[1], u[2]);
                out[0] = 0.0;
                out[1] = 0.0;
                out[2] = 0.5 * (rho * rho + m * m - 2.0 * rho * z);
            }
            ModelSpec::EulerHeat { cv, t0, .. } => {
                let (rho, m, e) = (u[0], u[1], u[2]);
                out[0] = 0.0;
                out[1] = 0.0;
                out[2] = rho * t0 - (e - 0.5 * m * m / rho) / cv;
            }
            ModelSpec::EulerFriction { .. } => {
                out[0] = 0.0;
                out[1] = -u[1];
                out[2] = -u[1] * u[1] / u[0];
            }
            ModelSpec::EulerIsentropic { .. } => {
                out[0] = 0.0;
                out[1] = -u[1];
            }
        }
    }

    fn source_jacobian(&self, u: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out[..d * d].fill(0.0);
        match *self {
            ModelSpec::JinXin { a } => {
                out[2] = a;
                out[3] = -1.0;
            }
            ModelSpec::ShallowWater => {
                out[2] = u[0];
                out[3] = -1.0;
            }
            ModelSpec::Broadwell => {
                let (rho, m, z) = (u[0], u[1], u[2]);
                out[6] = rho - z;
                out[7] = m;
                out[8] = -rho;
            }
            ModelSpec::EulerHeat { cv, t0, .. } => {
                let (rho, m) = (u[0], u[1]);
                out[6] = t0 - 0.5 * m * m / (rho * rho * cv);
                out[7] = m / (rho * cv);
                out[8] = -1.0 / cv;
            }
            ModelSpec::EulerFriction { .. } => {
                let vel = u[1] / u[0];
                out[4] = -1.0;
                out[6] = vel * vel;
                out[7] = -2.0 * vel;
            }
            ModelSpec::EulerIsentropic { .. } => {
                out[3] = -1.0;
            }
        }
    }

    fn source_row_active(&self, k: usize) -> bool {
        match self {
            ModelSpec::JinXin { .. } | ModelSpec::ShallowWater | ModelSpec::EulerIsentropic { .. } => k == 1,
            ModelSpec::Broadwell | ModelSpec::EulerHeat { .. } => k == 2,
            ModelSpec::EulerFriction { .. } => k >= 1,
        }
    }
}

impl BalanceLaw for ModelSpec {
    fn name(&self) -> &str {
        self.id()
    }

    fn component_names(&self) -> Vec<String> {
        let names: &[&str] = match self {
            ModelSpec::JinXin { .. } => &["u", "v"],
            ModelSpec::ShallowWater => &["h", "hu"],
            ModelSpec::Broadwell => &["rho", "m", "z"],
            ModelSpec::EulerHeat { .. } | ModelSpec::EulerFriction { .. } => &["rho", "rhou", "rhoE"],
            ModelSpec::EulerIsentropic { .. } => &["rho", "rhou"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    fn flux(&self, u: &[f64], out: &mut [f64]) {
        match *self {
            ModelSpec::JinXin { .. } => {
                out[0] = u[1];
                out[1] = u[0];
            }
            ModelSpec::ShallowWater => {
                let (h, hu) = (u[0], u[1]);
                out[0] = hu;
                out[1] = hu * hu / h + 0.5 * h * h;
            }
            ModelSpec::Broadwell => {
                out[0] = u[1];
                out[1] = u[2];
                out[2] = u[1];
            }
            ModelSpec::EulerHeat { gamma, .. } | ModelSpec::EulerFriction { gamma } => {
                let (rho, m, e) = (u[0], u[1], u[2]);
                let p = ideal_gas_pressure(gamma, u);
                let vel = m / rho;
                out[0] = m;
                out[1] = m * vel + p;
                out[2] = (e + p) * vel;
            }
            ModelSpec::EulerIsentropic { gamma, k } => {
                let (rho, m) = (u[0], u[1]);
                out[0] = m;
                out[1] = m * m / rho + k * rho.powf(gamma);
            }
        }
    }

    fn max_wave_speed(&self, u: &[f64]) -> f64 {
        match *self {
            ModelSpec::JinXin { .. } | ModelSpec::Broadwell => 1.0,
            ModelSpec::ShallowWater => (u[1] / u[0]).abs() + u[0].max(0.0).sqrt(),
            ModelSpec::EulerHeat { gamma, .. } | ModelSpec::EulerFriction { gamma } => {
                let p = ideal_gas_pressure(gamma, u);
                (u[1] / u[0]).abs() + (gamma * p.max(0.0) / u[0]).sqrt()
            }
            ModelSpec::EulerIsentropic { gamma, k } => {
                let rho = u[0];
                (u[1] / rho).abs() + (gamma * k * rho.max(0.0).powf(gamma - 1.0)).sqrt()
            }
        }
    }

    fn equilibrium(&self, u: &[f64], out: &mut [f64]) {
        out[..self.dim()].copy_from_slice(&u[..self.dim()]);
        match *self {
            ModelSpec::JinXin { a } => out[1] = a * u[0],
            ModelSpec::ShallowWater => out[1] = 0.5 * u[0] * u[0],
            ModelSpec::Broadwell => out[2] = (u[0] * u[0] + u[1] * u[1]) / (2.0 * u[0]),
            ModelSpec::EulerHeat { cv, t0, .. } => {
                out[2] = cv * u[0] * t0 + 0.5 * u[1] * u[1] / u[0];
            }
            ModelSpec::EulerFriction { .. } | ModelSpec::EulerIsentropic { .. } => out[1] = 0.0,
        }
    }

    fn admissible(&self, u: &[f64]) -> bool {
        if u.len() < self.dim() || !u[..self.dim()].iter().all(|v| v.is_finite()) {
            return false;
        }
        match *self {
            ModelSpec::JinXin { .. } => true,
            ModelSpec::ShallowWater | ModelSpec::Broadwell | ModelSpec::EulerIsentropic { .. } => u[0] > 0.0,
            ModelSpec::EulerHeat { gamma, .. } | ModelSpec::EulerFriction { gamma } => {
                u[0] > 0.0 && ideal_gas_pressure(gamma, u) > 0.0
            }
        }
    }
}

/// Models used to exercise the scheme on degenerate cases.
pub mod auxiliary {
    use super::*;

    /// `F = 0`, `g = 0` in `dim` components.
    #[derive(Debug, Clone, Copy)]
    pub struct Inert {
        pub dim: usize,
    }

    impl StiffSource for Inert {
        fn dim(&self) -> usize {
            self.dim
        }
        fn source(&self, _u: &[f64], out: &mut [f64]) {
            out[..self.dim].fill(0.0);
        }
        fn source_jacobian(&self, _u: &[f64], out: &mut [f64]) {
            out[..self.dim * self.dim].fill(0.0);
        }
        fn source_row_active(&self, _k: usize) -> bool {
            false
        }
    }

    impl BalanceLaw for Inert {
        fn name(&self) -> &str {
            "inert"
        }
        fn component_names(&self) -> Vec<String> {
            (0..self.dim).map(|k| format!("q{k}")).collect()
        }
        fn flux(&self, _u: &[f64], out: &mut [f64]) {
            out[..self.dim].fill(0.0);
        }
        fn max_wave_speed(&self, _u: &[f64]) -> f64 {
            0.0
        }
        fn equilibrium(&self, u: &[f64], out: &mut [f64]) {
            out[..self.dim].copy_from_slice(&u[..self.dim]);
        }
        fn admissible(&self, u: &[f64]) -> bool {
            u[..self.dim].iter().all(|v| v.is_finite())
        }
    }

    /// Wraps a model and drops its source: `g = 0`.
    #[derive(Debug, Clone, Copy)]
    pub struct SourceFree<M>(pub M);

    impl<M: BalanceLaw> StiffSource for SourceFree<M> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn source(&self, _u: &[f64], out: &mut [f64]) {
            out[..self.dim()].fill(0.0);
        }
        fn source_jacobian(&self, _u: &[f64], out: &mut [f64]) {
            let d = self.dim();
            out[..d * d].fill(0.0);
        }
        fn source_row_active(&self, _k: usize) -> bool {
            false
        }
    }

    impl<M: BalanceLaw> BalanceLaw for SourceFree<M> {
        fn name(&self) -> &str {
            "source-free"
        }
        fn component_names(&self) -> Vec<String> {
            self.0.component_names()
        }
        fn flux(&self, u: &[f64], out: &mut [f64]) {
            self.0.flux(u, out)
        }
        fn max_wave_speed(&self, u: &[f64]) -> f64 {
            self.0.max_wave_speed(u)
        }
        fn equilibrium(&self, u: &[f64], out: &mut [f64]) {
            out[..self.dim()].copy_from_slice(&u[..self.dim()]);
        }
        fn admissible(&self, u: &[f64]) -> bool {
            self.0.admissible(u)
        }
    }

    /// Scalar `y_t = rate * y` with no flux: the scheme reduces to an ODE
    /// integrator.
    #[derive(Debug, Clone, Copy)]
    pub struct LinearDecay {
        pub rate: f64,
    }

    impl StiffSource for LinearDecay {
        fn dim(&self) -> usize {
            1
        }
        fn source(&self, u: &[f64], out: &mut [f64]) {
            out[0] = self.rate * u[0];
        }
        fn source_jacobian(&self, _u: &[f64], out: &mut [f64]) {
            out[0] = self.rate;
        }
    }

    impl BalanceLaw for LinearDecay {
        fn name(&self) -> &str {
            "linear-decay"
        }
        fn component_names(&self) -> Vec<String> {
            vec!["y".into()]
        }
        fn flux(&self, _u: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn max_wave_speed(&self, _u: &[f64]) -> f64 {
            0.0
        }
        fn equilibrium(&self, _u: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn admissible(&self, u: &[f64]) -> bool {
            u[0].is_finite()
        }
    }

    /// Scalar linear advection `u_t + c u_x = 0`.
    #[derive(Debug, Clone, Copy)]
    pub struct LinearAdvection {
        pub speed: f64,
    }

    impl StiffSource for LinearAdvection {
        fn dim(&self) -> usize {
            1
        }
        fn source(&self, _u: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn source_jacobian(&self, _u: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn source_row_active(&self, _k: usize) -> bool {
            false
        }
    }

    impl BalanceLaw for LinearAdvection {
        fn name(&self) -> &str {
            "linear-advection"
        }
        fn component_names(&self) -> Vec<String> {
            vec!["u".into()]
        }
        fn flux(&self, u: &[f64], out: &mut [f64]) {
            out[0] = self.speed * u[0];
        }
        fn max_wave_speed(&self, _u: &[f64]) -> f64 {
            self.speed.abs()
        }
        fn equilibrium(&self, u: &[f64], out: &mut [f64]) {
            out[0] = u[0];
        }
        fn admissible(&self, u: &[f64]) -> bool {
            u[0].is_finite()
        }
    }
}
