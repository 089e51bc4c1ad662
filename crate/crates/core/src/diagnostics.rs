//! Derived quantities and verification metrics: current reconstruction,
//! discrete energies, mean-g monitoring, convergence-order estimation.

use crate::error::{Result, SolverError};
use crate::field::DGField;
use crate::models::{CollisionModel, KineticState};
use crate::operators::average_field;

/// j_h = <v g_h> = (g_plus - g_minus)/2, coefficient-wise.
pub fn reconstruct_j(state: &KineticState) -> DGField {
    let mut j = state.g_plus.clone();
    j.coeffs = (&state.g_plus.coeffs - &state.g_minus.coeffs) * 0.5;
    j
}

/// Max |<g_h>| over all coefficients; zero for consistently initialized data
/// up to roundoff accumulation.
pub fn max_mean_g(state: &KineticState) -> f64 {
    average_field(&state.g_plus, &state.g_minus).max_abs_coeff()
}

/// Discrete energy functional:
/// porous/telegraph: 1/2 int (rho^2 + eps^2 j^2);
/// advection-diffusion: 1/2 int ((1 - eps^2 A^2) rho^2 + eps^2 (j - A rho)^2).
/// No energy identity is available for Burgers.
pub fn discrete_energy(state: &KineticState, model: &CollisionModel) -> Result<f64> {
    let j = reconstruct_j(state);
    let eps2 = state.epsilon * state.epsilon;
    let basis = &state.rho.basis;
    let mesh = &state.rho.mesh;
    let nq = basis.quad.len();
    let half_dx = 0.5 * mesh.dx;
    let mut rho_q = vec![0.0; nq];
    let mut j_q = vec![0.0; nq];
    let mut total = 0.0;
    match *model {
        CollisionModel::Porous { .. } => {
            for i in 0..mesh.n_elements {
                state.rho.at_quad(i, &mut rho_q);
                j.at_quad(i, &mut j_q);
                let mut s = 0.0;
                for q in 0..nq {
                    s += basis.quad.weights[q] * (rho_q[q] * rho_q[q] + eps2 * j_q[q] * j_q[q]);
                }
                total += half_dx * s;
            }
        }
        CollisionModel::AdvDiff { a_coef } => {
            if (a_coef * state.epsilon).abs() >= 1.0 {
                return Err(SolverError::InvalidConfig(
                    "energy positivity needs |A eps| < 1".into(),
                ));
            }
            let c0 = 1.0 - eps2 * a_coef * a_coef;
            for i in 0..mesh.n_elements {
                state.rho.at_quad(i, &mut rho_q);
                j.at_quad(i, &mut j_q);
                let mut s = 0.0;
                for q in 0..nq {
                    let fluct = j_q[q] - a_coef * rho_q[q];
                    s += basis.quad.weights[q] * (c0 * rho_q[q] * rho_q[q] + eps2 * fluct * fluct);
                }
                total += half_dx * s;
            }
        }
        CollisionModel::Burgers { .. } => {
            return Err(SolverError::UnsupportedModel("no Burgers energy identity"));
        }
    }
    Ok(0.5 * total)
}

/// Convergence orders from (N, error) pairs on doubling meshes:
/// order_i = log2(e_{i-1} / e_i). `None` marks a nonpositive error.
pub fn order_from_errors(errors: &[(usize, f64)]) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    for w in errors.windows(2) {
        let (n0, e0) = w[0];
        let (n1, e1) = w[1];
        debug_assert_eq!(n1, 2 * n0, "convergence meshes must double");
        if e0 <= 0.0 || e1 <= 0.0 {
            out.push(None);
        } else {
            out.push(Some((e0 / e1).log2()));
        }
    }
    out
}

/// Per-run time series of the monitored quantities, one entry per recorded
/// step; `final_errors` is filled by the harness when a reference exists.
#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    pub time: Vec<f64>,
    pub total_mass: Vec<f64>,
    /// Discrete energy; NaN where the model has no energy functional.
    pub energy: Vec<f64>,
    pub max_mean_g: Vec<f64>,
    pub final_l1_rho: Option<f64>,
    pub final_l1_j: Option<f64>,
}

impl RunMetrics {
    pub fn record(&mut self, t: f64, state: &KineticState, model: &CollisionModel) {
        self.time.push(t);
        self.total_mass.push(state.rho.total_integral());
        self.energy
            .push(discrete_energy(state, model).unwrap_or(f64::NAN));
        self.max_mean_g.push(max_mean_g(state));
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}
