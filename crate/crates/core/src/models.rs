//! Two-velocity collision models, their stiff/non-stiff source split, local
//! equilibria, and the closed-form reference solutions used by the test
//! problems.
//!
//! With the micro-macro split f = rho + eps g, every model's source enters the
//! g equation as -(1/eps^2) s1 - s2:
//!
//! | model                 | s1                | s2        | eps -> 0 limit        |
//! |-----------------------|-------------------|-----------|-----------------------|
//! | Porous {K, m}         | K rho^m g         | 0         | porous media / heat   |
//! | AdvDiff {A}           | g - A v rho       | 0         | advection-diffusion   |
//! | Burgers {C}           | g - C v rho^2     | C v g^2   | viscous Burgers       |

use std::sync::Arc;

use crate::basis::Basis;
use crate::error::{Result, SolverError};
use crate::field::{project_l2, project_l2_piecewise, DGField};
use crate::mesh::Mesh1D;

/// Discrete velocity, v in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Velocity {
    Plus,
    Minus,
}

impl Velocity {
    pub fn sign(self) -> f64 {
        match self {
            Velocity::Plus => 1.0,
            Velocity::Minus => -1.0,
        }
    }

    pub const BOTH: [Velocity; 2] = [Velocity::Plus, Velocity::Minus];
}

/// The collision operators considered, with their parameters.
///
/// `Porous { k_coef: 1, m: 0 }` is the telegraph / heat case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionModel {
    Porous { k_coef: f64, m: f64 },
    AdvDiff { a_coef: f64 },
    Burgers { c_coef: f64 },
}

impl CollisionModel {
    pub fn telegraph() -> Self {
        CollisionModel::Porous { k_coef: 1.0, m: 0.0 }
    }

    /// Parameter sanity: K > 0, m <= 0; C > 0. The |A eps| < 1 constraint is
    /// checked where eps is known (solver construction).
    pub fn validate(&self) -> Result<()> {
        match *self {
            CollisionModel::Porous { k_coef, m } => {
                if k_coef <= 0.0 || m > 0.0 {
                    return Err(SolverError::InvalidConfig(format!(
                        "porous model needs K > 0 and m <= 0, got K = {k_coef}, m = {m}"
                    )));
                }
            }
            CollisionModel::AdvDiff { .. } => {}
            CollisionModel::Burgers { c_coef } => {
                if c_coef <= 0.0 {
                    return Err(SolverError::InvalidConfig(format!(
                        "Burgers model needs C > 0, got C = {c_coef}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate_with_epsilon(&self, epsilon: f64) -> Result<()> {
        self.validate()?;
        if let CollisionModel::AdvDiff { a_coef } = *self {
            if (a_coef * epsilon).abs() >= 1.0 {
                return Err(SolverError::InvalidConfig(format!(
                    "advection-diffusion requires |A eps| < 1, got {}",
                    (a_coef * epsilon).abs()
                )));
            }
        }
        Ok(())
    }

    /// True for the degenerate porous case m < 0, which needs the nodal
    /// reformulated solves wherever rho can vanish.
    pub fn is_degenerate_porous(&self) -> bool {
        matches!(self, CollisionModel::Porous { m, .. } if *m < 0.0)
    }
}

/// Pointwise integrand of the stiff source s1.
pub fn s1_pointwise(model: &CollisionModel, v: Velocity, rho: f64, g_v: f64) -> Result<f64> {
    let vs = v.sign();
    match *model {
        CollisionModel::Porous { k_coef, m } => {
            if m == 0.0 {
                Ok(k_coef * g_v)
            } else if rho > 0.0 {
                Ok(k_coef * rho.powf(m) * g_v)
            } else {
                Err(SolverError::DegeneratePoint { element: usize::MAX })
            }
        }
        CollisionModel::AdvDiff { a_coef } => Ok(g_v - a_coef * vs * rho),
        CollisionModel::Burgers { c_coef } => Ok(g_v - c_coef * vs * rho * rho),
    }
}

/// Pointwise integrand of the non-stiff source s2 (zero except for Burgers).
pub fn s2_pointwise(model: &CollisionModel, v: Velocity, g_v: f64) -> f64 {
    match *model {
        CollisionModel::Burgers { c_coef } => c_coef * v.sign() * g_v * g_v,
        _ => 0.0,
    }
}

/// The eps -> 0 local equilibrium value of g at a point, given rho and its
/// spatial derivative. Second return marks a degenerate porous point where the
/// limit value 0 was substituted.
pub fn equilibrium_g(model: &CollisionModel, v: Velocity, rho: f64, drho_dx: f64) -> (f64, bool) {
    let vs = v.sign();
    match *model {
        CollisionModel::Porous { k_coef, m } => {
            if m == 0.0 {
                (-vs * drho_dx / k_coef, false)
            } else if rho > 0.0 {
                // -(1/(K(1-m))) v d(rho^{1-m})/dx = -(v/K) rho^{-m} drho/dx
                (-vs * rho.powf(-m) * drho_dx / k_coef, false)
            } else {
                (0.0, true)
            }
        }
        CollisionModel::AdvDiff { a_coef } => (a_coef * vs * rho - vs * drho_dx, false),
        CollisionModel::Burgers { c_coef } => (c_coef * vs * rho * rho - vs * drho_dx, false),
    }
}

/// Maxwellian current of the Burgers model at density rho:
/// j solves C eps^2 j^2 + j - C rho^2 = 0, the positive-root form below being
/// stable for small eps.
pub fn burgers_maxwellian_j(c_coef: f64, rho: f64, epsilon: f64) -> f64 {
    2.0 * c_coef * rho * rho
        / (1.0 + (1.0 + 4.0 * c_coef * c_coef * rho * rho * epsilon * epsilon).sqrt())
}

// ---------------------------------------------------------------------------
// Exact solutions
// ---------------------------------------------------------------------------

/// Closed-form (rho, j) reference solutions.
#[derive(Debug, Clone)]
pub enum ExactSolution {
    /// rho = (1/r) e^{rt} sin x, j = e^{rt} cos x with
    /// r = -2 / (1 + sqrt(1 - 4 eps^2)); needs eps <= 1/2.
    TelegraphSmooth { epsilon: f64 },
    /// Limit advection-diffusion (A = 1): rho = e^{-t} sin(x - t),
    /// j = e^{-t} (sin(x-t) - cos(x-t)).
    AdvDiffSmooth,
    /// Limit erf profile of the advection-diffusion Riemann problem (A = 1).
    AdvDiffRiemann { rho_l: f64, rho_r: f64 },
    /// Ruijgrok-Wu travelling smooth shock of the Burgers model (C = 1/2).
    RuijgrokWuShock(RuijgrokWuShock),
    /// Compactly supported Barenblatt solution of rho_t = (rho^2)_xx
    /// (porous model with K = 1/2, m = -1).
    Barenblatt,
}

/// Derived constants of the Ruijgrok-Wu shock, computed once at construction.
#[derive(Debug, Clone)]
pub struct RuijgrokWuShock {
    pub epsilon: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub xi0: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    /// Shock speed in the unscaled travelling frame; profile argument is
    /// xi = (x - w t / eps) / 2.
    pub w: f64,
    pub x0: f64,
}

impl RuijgrokWuShock {
    pub fn new(epsilon: f64, rho_minus: f64, rho_plus: f64, xi0: f64) -> Self {
        let j = |rho: f64| rho * rho / (1.0 + (1.0 + rho * rho * epsilon * epsilon).sqrt());
        let (jm, jp) = (j(rho_minus), j(rho_plus));
        let u_minus = rho_minus + epsilon * jm;
        let u_plus = rho_plus + epsilon * jp;
        let v_minus = rho_minus - epsilon * jm;
        let v_plus = rho_plus - epsilon * jp;
        let du = u_minus - u_plus;
        let dv = v_minus - v_plus;
        let w = (du - dv) / (du + dv);
        let x0 = (1.0 + w) / du;
        RuijgrokWuShock {
            epsilon,
            rho_minus,
            rho_plus,
            xi0,
            u_minus,
            u_plus,
            v_minus,
            v_plus,
            w,
            x0,
        }
    }

    /// The x0 consistency partner (1 - w)/(v^- - v^+); equals `x0` analytically.
    pub fn x0_from_v(&self) -> f64 {
        (1.0 - self.w) / (self.v_minus - self.v_plus)
    }

    fn profiles(&self, x: f64, t: f64) -> (f64, f64) {
        let xi = (x - self.w * t / self.epsilon) / 2.0;
        let z = -(xi - self.xi0) / self.x0;
        // Logistic blend evaluated against the larger exponential so large
        // |xi| cannot overflow.
        let blend = |a_inf: f64, a_neg: f64| -> f64 {
            if z <= 0.0 {
                let e = z.exp();
                (a_inf + a_neg * e) / (1.0 + e)
            } else {
                let e = (-z).exp();
                (a_inf * e + a_neg) / (e + 1.0)
            }
        };
        (
            blend(self.u_plus, self.u_minus),
            blend(self.v_plus, self.v_minus),
        )
    }
}

/// Radius of the Barenblatt support at time t (rho_t = (rho^2)_xx form).
pub fn barenblatt_radius(t: f64) -> f64 {
    (12.0 * (t + 1.0)).cbrt()
}

impl ExactSolution {
    /// Evaluate (rho, j) at (x, t).
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        match self {
            ExactSolution::TelegraphSmooth { epsilon } => {
                let r = -2.0 / (1.0 + (1.0 - 4.0 * epsilon * epsilon).sqrt());
                let e = (r * t).exp();
                (e * x.sin() / r, e * x.cos())
            }
            ExactSolution::AdvDiffSmooth => {
                let e = (-t).exp();
                (e * (x - t).sin(), e * ((x - t).sin() - (x - t).cos()))
            }
            ExactSolution::AdvDiffRiemann { rho_l, rho_r } => {
                if t <= 0.0 {
                    // Sharp step (erf argument limit +-inf); slaved j undefined
                    // at t = 0, use the Riemann data value 0.
                    let rho = if x < 0.0 { *rho_l } else { *rho_r };
                    return (rho, 0.0);
                }
                let arg = (t - x) / (2.0 * t.sqrt());
                let rho = 0.5 * (rho_l + rho_r) + 0.5 * (rho_l - rho_r) * libm::erf(arg);
                // Limit closure with A = 1: j = rho - rho_x.
                let drho = -(rho_l - rho_r) / (2.0 * (std::f64::consts::PI * t).sqrt())
                    * (-arg * arg).exp();
                (rho, rho - drho)
            }
            ExactSolution::RuijgrokWuShock(s) => {
                let (u, v) = s.profiles(x, t);
                ((u + v) / 2.0, (u - v) / (2.0 * s.epsilon))
            }
            ExactSolution::Barenblatt => {
                let r = barenblatt_radius(t);
                if x.abs() >= r {
                    (0.0, 0.0)
                } else {
                    let rho = (1.0 - (x / r) * (x / r)) / r;
                    (rho, rho * 4.0 * x / (r * r * r))
                }
            }
        }
    }

    pub fn rho(&self, x: f64, t: f64) -> f64 {
        self.eval(x, t).0
    }

    pub fn j(&self, x: f64, t: f64) -> f64 {
        self.eval(x, t).1
    }

    /// Jump locations of the initial data, if any (projection split points).
    pub fn initial_breakpoints(&self) -> Vec<f64> {
        match self {
            ExactSolution::AdvDiffRiemann { .. } => vec![0.0],
            _ => vec![],
        }
    }
}

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

/// The kinetic unknowns (rho_h, g_h at both velocities) sharing one mesh/basis.
#[derive(Debug, Clone)]
pub struct KineticState {
    pub rho: DGField,
    pub g_plus: DGField,
    pub g_minus: DGField,
    pub epsilon: f64,
}

impl KineticState {
    pub fn g(&self, v: Velocity) -> &DGField {
        match v {
            Velocity::Plus => &self.g_plus,
            Velocity::Minus => &self.g_minus,
        }
    }
}

/// Build the consistent initial state from pointwise (rho0, j0):
/// rho_h projects rho0 and g_h(., v) = v * (projection of j0), so <g_h> = 0 and
/// <v g_h> = j_h hold exactly at the coefficient level.
pub fn initial_state<R, J>(
    rho0: R,
    j0: J,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
    epsilon: f64,
    breakpoints: &[f64],
) -> Result<KineticState>
where
    R: Fn(f64) -> f64,
    J: Fn(f64) -> f64,
{
    let rho = project_l2_piecewise(rho0, mesh, basis, breakpoints)?;
    let j_h = project_l2_piecewise(j0, mesh, basis, breakpoints)?;
    let mut g_minus = j_h.clone();
    g_minus.coeffs.mapv_inplace(|c| -c);
    Ok(KineticState { rho, g_plus: j_h, g_minus, epsilon })
}

/// Initial state drawn from an exact solution at t = 0.
pub fn initial_state_from_exact(
    sol: &ExactSolution,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
    epsilon: f64,
) -> Result<KineticState> {
    let breaks = sol.initial_breakpoints();
    initial_state(
        |x| sol.rho(x, 0.0),
        |x| sol.j(x, 0.0),
        mesh,
        basis,
        epsilon,
        &breaks,
    )
}

/// Piecewise-constant Riemann data (rho_l, j_l | rho_r, j_r) split at x = 0.
pub fn initial_state_riemann(
    rho_l: f64,
    j_l: f64,
    rho_r: f64,
    j_r: f64,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
    epsilon: f64,
) -> Result<KineticState> {
    initial_state(
        move |x| if x < 0.0 { rho_l } else { rho_r },
        move |x| if x < 0.0 { j_l } else { j_r },
        mesh,
        basis,
        epsilon,
        &[0.0],
    )
}

/// Projection helper for smooth data given as closures (no jump).
pub fn project_pair<R, J>(
    rho0: R,
    j0: J,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
) -> Result<(DGField, DGField)>
where
    R: Fn(f64) -> f64,
    J: Fn(f64) -> f64,
{
    Ok((project_l2(rho0, mesh, basis)?, project_l2(j0, mesh, basis)?))
}
