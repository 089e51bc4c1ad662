//! Semi-discrete DG spatial operators for the micro-macro system: the flux
//! divergence form a_h, the gradient form d_h, the upwind transport operator,
//! its projected part b_{h,v}, and the source assemblies s1/s2.
//!
//! Convention: a_h, d_h, s1, s2 return weak-form residuals (mass matrix not
//! applied); the upwind operator returns genuine DG fields because (I - Pi)
//! must act on a function.

use ndarray::Array2;

use crate::basis::BasisKind;
use crate::error::{Result, SolverError};
use crate::field::{DGField, EdgeRule};
use crate::mesh::Mesh1D;
use crate::models::{s1_pointwise, s2_pointwise, CollisionModel, KineticState, Velocity};

/// <.> on the two-point velocity set.
pub fn velocity_average(a_plus: f64, a_minus: f64) -> f64 {
    0.5 * (a_plus + a_minus)
}

/// <v .> on the two-point velocity set.
pub fn v_moment(a_plus: f64, a_minus: f64) -> f64 {
    0.5 * (a_plus - a_minus)
}

/// Numerical-flux family. Each choice fixes BOTH the hat flux of <v g> (or q)
/// and the paired rho hat; they cannot be mixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxChoice {
    /// hat<vg> = <vg>^-, rho hat = rho^+.
    AltLeftRight,
    /// hat<vg> = <vg>^+, rho hat = rho^-.
    AltRightLeft,
    /// Both hats are arithmetic averages.
    Central,
    /// Right-left strictly left of `split`, left-right at and right of it,
    /// so both degeneracy fronts of the porous problem propagate outward.
    PorousSplit { split: f64 },
}

impl FluxChoice {
    pub fn q_hat(&self, x: f64, qm: f64, qp: f64) -> f64 {
        match self {
            FluxChoice::AltLeftRight => qm,
            FluxChoice::AltRightLeft => qp,
            FluxChoice::Central => 0.5 * (qm + qp),
            FluxChoice::PorousSplit { split } => {
                if x < *split {
                    qp
                } else {
                    qm
                }
            }
        }
    }

    pub fn rho_hat(&self, x: f64, rm: f64, rp: f64) -> f64 {
        match self {
            FluxChoice::AltLeftRight => rp,
            FluxChoice::AltRightLeft => rm,
            FluxChoice::Central => 0.5 * (rm + rp),
            FluxChoice::PorousSplit { split } => {
                if x < *split {
                    rm
                } else {
                    rp
                }
            }
        }
    }

    pub fn validate(&self, mesh: &Mesh1D) -> Result<()> {
        if let FluxChoice::PorousSplit { split } = self {
            if !mesh.contains(*split) {
                return Err(SolverError::InvalidConfig(format!(
                    "porous-split point {split} outside domain [{}, {}]",
                    mesh.x_min, mesh.x_max
                )));
            }
        }
        Ok(())
    }
}

/// Domain boundary treatment. Inflow/outflow holds the given (rho, j) states
/// fixed in time; ghost values are rho itself and g = v j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    InflowOutflow { left: (f64, f64), right: (f64, f64) },
}

impl BoundaryCondition {
    pub fn edge_rule_rho(&self) -> EdgeRule {
        match *self {
            BoundaryCondition::Periodic => EdgeRule::Periodic,
            BoundaryCondition::InflowOutflow { left, right } => EdgeRule::Fixed {
                left: left.0,
                right: right.0,
            },
        }
    }

    pub fn edge_rule_g(&self, v: Velocity) -> EdgeRule {
        match *self {
            BoundaryCondition::Periodic => EdgeRule::Periodic,
            BoundaryCondition::InflowOutflow { left, right } => EdgeRule::Fixed {
                left: v.sign() * left.1,
                right: v.sign() * right.1,
            },
        }
    }

    /// Rule for q-like quantities (<v g>, the LDG auxiliary variable).
    pub fn edge_rule_q(&self) -> EdgeRule {
        match *self {
            BoundaryCondition::Periodic => EdgeRule::Periodic,
            BoundaryCondition::InflowOutflow { left, right } => EdgeRule::Fixed {
                left: left.1,
                right: right.1,
            },
        }
    }
}

/// Traces (u^-, u^+) at all n_elements + 1 interfaces under the edge rule.
pub fn interface_traces(u: &DGField, edge: EdgeRule) -> (Vec<f64>, Vec<f64>) {
    let n = u.mesh.n_elements;
    let mut um = vec![0.0; n + 1];
    let mut up = vec![0.0; n + 1];
    for i in 0..n {
        up[i] = u.edge_left(i);
        um[i + 1] = u.edge_right(i);
    }
    match edge {
        EdgeRule::Periodic => {
            um[0] = um[n];
            up[n] = up[0];
        }
        EdgeRule::Fixed { left, right } => {
            um[0] = left;
            up[n] = right;
        }
    }
    (um, up)
}

/// v-moment field q = <v g> = (g_plus - g_minus)/2, coefficient-wise.
pub fn v_moment_field(g_plus: &DGField, g_minus: &DGField) -> DGField {
    debug_assert!(g_plus.same_layout(g_minus));
    let mut q = g_plus.clone();
    q.coeffs = (&g_plus.coeffs - &g_minus.coeffs) * 0.5;
    q
}

/// Velocity-average field <g> = (g_plus + g_minus)/2.
pub fn average_field(g_plus: &DGField, g_minus: &DGField) -> DGField {
    let mut a = g_plus.clone();
    a.coeffs = (&g_plus.coeffs + &g_minus.coeffs) * 0.5;
    a
}

fn grad_dot(u: &DGField, i: usize, out: &mut [f64]) {
    let n = u.basis.n_funcs();
    let row = u.coeffs.row(i);
    let row = row.as_slice().unwrap();
    let g = u.basis.grad_form.as_slice().unwrap();
    for (l, o) in out.iter_mut().enumerate() {
        let grow = &g[l * n..(l + 1) * n];
        let mut s = 0.0;
        for m in 0..n {
            s += grow[m] * row[m];
        }
        *o = s;
    }
}

/// Weak form of the flux-divergence operator applied to a scalar flux field q:
/// per element, -(q, phi_x) - q_hat jumps. Shared by a_h (q = <v g>) and the
/// limiting scheme's r_h (q itself).
pub fn flux_divergence_residual(
    q: &DGField,
    flux: FluxChoice,
    edge: EdgeRule,
) -> Result<Array2<f64>> {
    flux.validate(&q.mesh)?;
    let n_el = q.mesh.n_elements;
    let n = q.basis.n_funcs();
    let (um, up) = interface_traces(q, edge);
    let mut hat = vec![0.0; n_el + 1];
    for i in 0..=n_el {
        hat[i] = flux.q_hat(q.mesh.interface(i), um[i], up[i]);
    }
    if edge == EdgeRule::Periodic {
        // The wrap interface is one physical interface; a position-dependent
        // flux (porous-split) must not pick different sides at its two copies.
        hat[n_el] = hat[0];
    }
    let mut out = Array2::zeros((n_el, n));
    let mut vol = vec![0.0; n];
    for i in 0..n_el {
        grad_dot(q, i, &mut vol);
        let mut row = out.row_mut(i);
        for l in 0..n {
            row[l] = -vol[l] - hat[i] * q.basis.phi_left[l] + hat[i + 1] * q.basis.phi_right[l];
        }
    }
    Ok(out)
}

/// a_h(g_h, .): flux divergence of <v g_h> with the chosen hat flux.
pub fn apply_ah(
    g_plus: &DGField,
    g_minus: &DGField,
    flux: FluxChoice,
    bc: &BoundaryCondition,
) -> Result<Array2<f64>> {
    let q = v_moment_field(g_plus, g_minus);
    flux_divergence_residual(&q, flux, bc.edge_rule_q())
}

/// d_h(rho_h, .): per element, (rho, psi_x) + rho_hat jumps, with rho hat
/// paired to the q hat of the same flux choice.
pub fn apply_dh(rho: &DGField, flux: FluxChoice, bc: &BoundaryCondition) -> Result<Array2<f64>> {
    flux.validate(&rho.mesh)?;
    let n_el = rho.mesh.n_elements;
    let n = rho.basis.n_funcs();
    let edge = bc.edge_rule_rho();
    let (um, up) = interface_traces(rho, edge);
    let mut hat = vec![0.0; n_el + 1];
    for i in 0..=n_el {
        hat[i] = flux.rho_hat(rho.mesh.interface(i), um[i], up[i]);
    }
    if edge == EdgeRule::Periodic {
        hat[n_el] = hat[0];
    }
    let mut out = Array2::zeros((n_el, n));
    let mut vol = vec![0.0; n];
    for i in 0..n_el {
        grad_dot(rho, i, &mut vol);
        let mut row = out.row_mut(i);
        for l in 0..n {
            row[l] = vol[l] + hat[i] * rho.basis.phi_left[l] - hat[i + 1] * rho.basis.phi_right[l];
        }
    }
    Ok(out)
}

/// Upwind transport operator D_h(g; v) for v = +1 and v = -1, returned as DG
/// fields (mass inverse applied). The upwind flux is v g^- for v > 0 and
/// v g^+ for v < 0.
pub fn apply_dh_upwind(
    g_plus: &DGField,
    g_minus: &DGField,
    bc: &BoundaryCondition,
) -> (DGField, DGField) {
    let mesh = &g_plus.mesh;
    let basis = &g_plus.basis;
    let n_el = mesh.n_elements;
    let n = basis.n_funcs();
    let half_dx = 0.5 * mesh.dx;

    let (gp_m, _) = interface_traces(g_plus, bc.edge_rule_g(Velocity::Plus));
    let (_, gm_p) = interface_traces(g_minus, bc.edge_rule_g(Velocity::Minus));

    let mut d_plus = DGField::zero(mesh.clone(), basis.clone());
    let mut d_minus = DGField::zero(mesh.clone(), basis.clone());
    let mut vol = vec![0.0; n];
    for i in 0..n_el {
        // v = +1: weak form -(g, psi_x) + g^- jumps.
        grad_dot(g_plus, i, &mut vol);
        {
            let mut row = d_plus.coeffs.row_mut(i);
            for l in 0..n {
                let w =
                    -vol[l] - gp_m[i] * basis.phi_left[l] + gp_m[i + 1] * basis.phi_right[l];
                row[l] = w / (half_dx * basis.mass_ref[l]);
            }
        }
        // v = -1: weak form +(g, psi_x) - g^+ jumps.
        grad_dot(g_minus, i, &mut vol);
        {
            let mut row = d_minus.coeffs.row_mut(i);
            for l in 0..n {
                let w = vol[l] + gm_p[i] * basis.phi_left[l] - gm_p[i + 1] * basis.phi_right[l];
                row[l] = w / (half_dx * basis.mass_ref[l]);
            }
        }
    }
    (d_plus, d_minus)
}

/// b_{h,v}(g_h, .) = ((I - Pi) D_h(g_h; v), psi) for both velocities.
/// The two residuals are exact negatives, so their velocity average vanishes
/// identically.
pub fn apply_bhv(
    g_plus: &DGField,
    g_minus: &DGField,
    bc: &BoundaryCondition,
) -> (Array2<f64>, Array2<f64>) {
    let (d_plus, d_minus) = apply_dh_upwind(g_plus, g_minus, bc);
    let basis = &g_plus.basis;
    let half_dx = 0.5 * g_plus.mesh.dx;
    let n = basis.n_funcs();
    let n_el = g_plus.mesh.n_elements;
    let mut b_plus = Array2::zeros((n_el, n));
    for i in 0..n_el {
        let dp = d_plus.coeffs.row(i);
        let dm = d_minus.coeffs.row(i);
        let mut row = b_plus.row_mut(i);
        for l in 0..n {
            let fluct = 0.5 * (dp[l] - dm[l]);
            row[l] = fluct * half_dx * basis.mass_ref[l];
        }
    }
    let b_minus = &b_plus * -1.0;
    (b_plus, b_minus)
}

/// Mass-matrix inverse applied row-wise to a weak-form residual.
pub fn mass_invert(template: &DGField, residual: &Array2<f64>) -> Array2<f64> {
    let half_dx = 0.5 * template.mesh.dx;
    let mut out = residual.clone();
    for mut row in out.rows_mut() {
        for (l, r) in row.iter_mut().enumerate() {
            *r /= half_dx * template.basis.mass_ref[l];
        }
    }
    out
}

/// Weak form (u, psi) of a DG field: mass matrix times coefficients.
pub fn mass_weak(u: &DGField) -> Array2<f64> {
    let half_dx = 0.5 * u.mesh.dx;
    let mut out = u.coeffs.clone();
    for mut row in out.rows_mut() {
        for (l, r) in row.iter_mut().enumerate() {
            *r *= half_dx * u.basis.mass_ref[l];
        }
    }
    out
}

/// Assemble the weak form (f(point values), psi) by quadrature collocation for
/// the modal basis, or nodal collocation for the nodal basis.
fn collocated_weak<F>(
    rho: &DGField,
    g: &DGField,
    mut f: F,
) -> Result<Array2<f64>>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mesh = &rho.mesh;
    let basis = &rho.basis;
    let n_el = mesh.n_elements;
    let n = basis.n_funcs();
    let half_dx = 0.5 * mesh.dx;
    let mut out = Array2::zeros((n_el, n));
    match basis.kind {
        BasisKind::NodalGauss => {
            for i in 0..n_el {
                let r = rho.coeffs.row(i);
                let gv = g.coeffs.row(i);
                let mut row = out.row_mut(i);
                for p in 0..n {
                    let val = f(r[p], gv[p]).map_err(|e| locate(e, i))?;
                    row[p] = half_dx * basis.node_weights[p] * val;
                }
            }
        }
        BasisKind::ModalLegendre => {
            let nq = basis.quad.len();
            let mut rv = vec![0.0; nq];
            let mut gvv = vec![0.0; nq];
            for i in 0..n_el {
                rho.at_quad(i, &mut rv);
                g.at_quad(i, &mut gvv);
                let mut row = out.row_mut(i);
                for q in 0..nq {
                    let val = f(rv[q], gvv[q]).map_err(|e| locate(e, i))?;
                    let w = half_dx * basis.quad.weights[q] * val;
                    for l in 0..n {
                        row[l] += w * basis.phi_quad[[q, l]];
                    }
                }
            }
        }
    }
    Ok(out)
}

fn locate(e: SolverError, element: usize) -> SolverError {
    match e {
        SolverError::DegeneratePoint { .. } => SolverError::DegeneratePoint { element },
        other => other,
    }
}

/// Weak forms (s1, psi) for both velocities.
pub fn assemble_s1(
    model: &CollisionModel,
    state: &KineticState,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let plus = collocated_weak(&state.rho, &state.g_plus, |r, g| {
        s1_pointwise(model, Velocity::Plus, r, g)
    })?;
    let minus = collocated_weak(&state.rho, &state.g_minus, |r, g| {
        s1_pointwise(model, Velocity::Minus, r, g)
    })?;
    Ok((plus, minus))
}

/// Weak forms (s2, psi) for both velocities (zero except for Burgers).
pub fn assemble_s2(model: &CollisionModel, state: &KineticState) -> (Array2<f64>, Array2<f64>) {
    let plus = collocated_weak(&state.rho, &state.g_plus, |_, g| {
        Ok(s2_pointwise(model, Velocity::Plus, g))
    })
    .expect("s2 is total");
    let minus = collocated_weak(&state.rho, &state.g_minus, |_, g| {
        Ok(s2_pointwise(model, Velocity::Minus, g))
    })
    .expect("s2 is total");
    (plus, minus)
}

/// Weak form (u^2, psi), used for the explicit rho-parts of s1.
pub fn assemble_square_weak(u: &DGField) -> Array2<f64> {
    collocated_weak(u, u, |r, _| Ok(r * r)).expect("square is total")
}
