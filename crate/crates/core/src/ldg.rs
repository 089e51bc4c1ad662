//! Explicit local DG scheme for the eps -> 0 limit equations (heat/porous
//! media, advection-diffusion, viscous Burgers) in first-order form
//! rho_t + q_x = 0 with q slaved to rho algebraically. Serves as the
//! asymptotic-preserving oracle and as a standalone solver.

use std::sync::Arc;

use ndarray::Array2;

use crate::basis::{Basis, BasisKind};
use crate::error::{Result, SolverError};
use crate::field::DGField;
use crate::imex::{tableau, DoubleButcherTableau};
use crate::mesh::Mesh1D;
use crate::models::CollisionModel;
use crate::operators::{
    apply_dh, assemble_square_weak, flux_divergence_residual, mass_invert, mass_weak,
    BoundaryCondition, FluxChoice,
};

/// (rho, q) pair; q always satisfies the stage relation and is recomputed
/// from rho rather than evolved.
#[derive(Debug, Clone)]
pub struct LdgState {
    pub rho: DGField,
    pub q: DGField,
}

/// Explicit RK local DG solver for the limit equations.
pub struct LdgSolver {
    pub model: CollisionModel,
    pub flux: FluxChoice,
    pub bc: BoundaryCondition,
    /// Explicit half of the IMEX pair of the same order.
    pub tableau: DoubleButcherTableau,
    pub mesh: Arc<Mesh1D>,
    pub basis: Arc<Basis>,
}

impl LdgSolver {
    pub fn new(
        model: CollisionModel,
        flux: FluxChoice,
        bc: BoundaryCondition,
        order: usize,
        mesh: Arc<Mesh1D>,
        basis: Arc<Basis>,
    ) -> Result<Self> {
        model.validate()?;
        flux.validate(&mesh)?;
        if model.is_degenerate_porous() && basis.kind != BasisKind::NodalGauss {
            return Err(SolverError::InvalidConfig(
                "degenerate porous media needs the nodal basis (reformulated q solve)".into(),
            ));
        }
        Ok(LdgSolver { model, flux, bc, tableau: tableau(order)?, mesh, basis })
    }

    /// Solve the stage relation for q given rho:
    /// porous: K rho^m q = M^{-1} d_h(rho); adv-diff: q = M^{-1} d_h + A rho;
    /// Burgers: q = M^{-1} d_h + C rho^2 (weak).
    pub fn stage_q(&self, rho: &DGField) -> Result<DGField> {
        let d = apply_dh(rho, self.flux, &self.bc)?;
        let mut q = DGField {
            mesh: self.mesh.clone(),
            basis: self.basis.clone(),
            coeffs: mass_invert(rho, &d),
        };
        match self.model {
            CollisionModel::Porous { k_coef, m } => {
                if m == 0.0 {
                    q.coeffs.mapv_inplace(|v| v / k_coef);
                } else {
                    match self.basis.kind {
                        BasisKind::NodalGauss => {
                            // q_p = rho_p^{-m} (M^{-1} d)_p / K; 0 at degenerate nodes.
                            for (qc, rc) in q.coeffs.iter_mut().zip(rho.coeffs.iter()) {
                                let rho_p = rc.max(0.0);
                                *qc *= rho_p.powf(-m) / k_coef;
                            }
                        }
                        BasisKind::ModalLegendre => {
                            // Constructor rejects this pairing; keep the arm for
                            // exhaustiveness.
                            return Err(SolverError::DegeneratePoint { element: 0 });
                        }
                    }
                }
            }
            CollisionModel::AdvDiff { a_coef } => {
                q.coeffs.scaled_add(a_coef, &rho.coeffs);
            }
            CollisionModel::Burgers { c_coef } => {
                let sq = assemble_square_weak(rho);
                let sq_field = mass_invert(rho, &sq);
                q.coeffs.scaled_add(c_coef, &sq_field);
            }
        }
        Ok(q)
    }

    /// Consistent initial state: project rho0 and slave q to it.
    pub fn initial_state(&self, rho: DGField) -> Result<LdgState> {
        let q = self.stage_q(&rho)?;
        Ok(LdgState { rho, q })
    }

    /// One explicit RK step; the final stage is the update (the explicit half
    /// of a globally stiffly accurate pair has b~ equal to its last row).
    pub fn step(&self, state: &LdgState, dt: f64) -> Result<LdgState> {
        let s = self.tableau.s;
        let mut r_slopes: Vec<Array2<f64>> = Vec::with_capacity(s);
        let mut rho_l = state.rho.clone();
        let mut q_l = self.stage_q(&rho_l)?;
        for l in 0..s {
            if l > 0 {
                let mut acc = state.rho.coeffs.clone();
                for (j, slope) in r_slopes.iter().enumerate() {
                    let w = self.tableau.a_ex[[l, j]];
                    if w != 0.0 {
                        acc.scaled_add(-dt * w, slope);
                    }
                }
                rho_l = DGField {
                    mesh: self.mesh.clone(),
                    basis: self.basis.clone(),
                    coeffs: acc,
                };
                q_l = self.stage_q(&rho_l)?;
            }
            if l + 1 < s {
                let r = flux_divergence_residual(&q_l, self.flux, self.bc.edge_rule_q())?;
                r_slopes.push(mass_invert(&q_l, &r));
            }
        }
        Ok(LdgState { rho: rho_l, q: q_l })
    }

    pub fn advance(&self, state: LdgState, t_final: f64, dt0: f64) -> Result<LdgState> {
        let mut st = state;
        let mut t = 0.0;
        while t < t_final - 1e-13 * t_final.max(1.0) {
            let dt = dt0.min(t_final - t);
            st = self.step(&st, dt)?;
            t += dt;
        }
        Ok(st)
    }
}

/// Weak-form residual of the q relation, for verification: d_h(rho, psi)
/// minus the model's right side evaluated at q.
pub fn q_relation_residual(solver: &LdgSolver, rho: &DGField, q: &DGField) -> Result<Array2<f64>> {
    let d = apply_dh(rho, solver.flux, &solver.bc)?;
    let rhs = match solver.model {
        CollisionModel::Porous { k_coef, m } => {
            if m == 0.0 {
                mass_weak(q) * k_coef
            } else {
                // Nodal collocation of K rho^m q.
                let mut w = mass_weak(q);
                for (wc, rc) in w.iter_mut().zip(rho.coeffs.iter()) {
                    let rho_p = rc.max(0.0);
                    if rho_p > 0.0 {
                        *wc *= k_coef * rho_p.powf(m);
                    } else {
                        *wc = 0.0;
                    }
                }
                w
            }
        }
        CollisionModel::AdvDiff { a_coef } => {
            let mut w = mass_weak(q);
            w.scaled_add(-a_coef, &mass_weak(rho));
            w
        }
        CollisionModel::Burgers { c_coef } => {
            let mut w = mass_weak(q);
            w.scaled_add(-c_coef, &assemble_square_weak(rho));
            w
        }
    };
    Ok(&d - &rhs)
}
