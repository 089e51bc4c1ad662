//! Piecewise-polynomial fields over a mesh: L2 projection, traces, norms.

use std::sync::Arc;

use ndarray::Array2;

use crate::basis::Basis;
use crate::error::{Result, SolverError};
use crate::mesh::Mesh1D;
use crate::quadrature::QuadratureRule;

/// One scalar DG unknown: an (n_elements x (k+1)) coefficient array over a
/// shared mesh and basis.
#[derive(Debug, Clone)]
pub struct DGField {
    pub mesh: Arc<Mesh1D>,
    pub basis: Arc<Basis>,
    pub coeffs: Array2<f64>,
}

/// Ghost-value rule for traces at the two domain boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRule {
    Periodic,
    /// Exterior trace values pinned at the left/right boundary interfaces.
    Fixed { left: f64, right: f64 },
}

impl DGField {
    pub fn zero(mesh: Arc<Mesh1D>, basis: Arc<Basis>) -> Self {
        let coeffs = Array2::zeros((mesh.n_elements, basis.n_funcs()));
        DGField { mesh, basis, coeffs }
    }

    pub fn same_layout(&self, other: &DGField) -> bool {
        self.mesh.n_elements == other.mesh.n_elements
            && self.basis.degree == other.basis.degree
            && self.basis.kind == other.basis.kind
    }

    /// Value at the left edge (xi = -1) of element i.
    pub fn edge_left(&self, i: usize) -> f64 {
        let row = self.coeffs.row(i);
        row.iter()
            .zip(&self.basis.phi_left)
            .map(|(c, p)| c * p)
            .sum()
    }

    /// Value at the right edge (xi = +1) of element i.
    pub fn edge_right(&self, i: usize) -> f64 {
        let row = self.coeffs.row(i);
        row.iter()
            .zip(&self.basis.phi_right)
            .map(|(c, p)| c * p)
            .sum()
    }

    /// Point evaluation (element located by coordinate).
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.mesh.element_of(x);
        let xi = 2.0 * (x - self.mesh.element_center(i)) / self.mesh.dx;
        self.basis
            .eval_ref(self.coeffs.row(i).as_slice().unwrap(), xi.clamp(-1.0, 1.0))
    }

    /// Values of element i at the basis quadrature points, into `out`.
    pub fn at_quad(&self, i: usize, out: &mut [f64]) {
        let n = self.basis.n_funcs();
        let row = self.coeffs.row(i);
        let row = row.as_slice().unwrap();
        for (q, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for m in 0..n {
                s += row[m] * self.basis.phi_quad[[q, m]];
            }
            *o = s;
        }
    }

    /// Integral of the field over the whole domain.
    pub fn total_integral(&self) -> f64 {
        let half_dx = 0.5 * self.mesh.dx;
        let nq = self.basis.quad.len();
        let mut vals = vec![0.0; nq];
        let mut total = 0.0;
        for i in 0..self.mesh.n_elements {
            self.at_quad(i, &mut vals);
            let mut s = 0.0;
            for q in 0..nq {
                s += self.basis.quad.weights[q] * vals[q];
            }
            total += half_dx * s;
        }
        total
    }

    /// Max absolute coefficient (cheap magnitude monitor).
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, &c| m.max(c.abs()))
    }
}

/// Interface traces (u^-, u^+) at interface `i` in 0..=n_elements.
///
/// Interior interfaces need no context; boundary interfaces take the exterior
/// value from `edges` and error with `MissingGhost` when none is supplied.
pub fn trace_values(u: &DGField, interface: usize, edges: Option<EdgeRule>) -> Result<(f64, f64)> {
    let n = u.mesh.n_elements;
    assert!(interface <= n, "interface index out of range");
    let interior_minus = |i: usize| u.edge_right(i - 1);
    let interior_plus = |i: usize| u.edge_left(i);
    if interface > 0 && interface < n {
        return Ok((interior_minus(interface), interior_plus(interface)));
    }
    match edges {
        None => Err(SolverError::MissingGhost { interface }),
        Some(EdgeRule::Periodic) => Ok((u.edge_right(n - 1), u.edge_left(0))),
        Some(EdgeRule::Fixed { left, right }) => {
            if interface == 0 {
                Ok((left, u.edge_left(0)))
            } else {
                Ok((u.edge_right(n - 1), right))
            }
        }
    }
}

/// Jump and average derived from a trace pair.
pub fn jump_average((um, up): (f64, f64)) -> (f64, f64) {
    (up - um, 0.5 * (up + um))
}

/// Element-wise L2 projection of `f` onto the DG space.
///
/// Load vectors use the basis quadrature (degree 2k+3); with the exact
/// diagonal mass matrices this realizes the quadrature-consistent projection
/// in either basis kind. Modal coefficients are (2j+1)/2 times the reference
/// quadrature of f P_j.
pub fn project_l2<F: Fn(f64) -> f64>(
    f: F,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
) -> Result<DGField> {
    project_l2_piecewise(f, mesh, basis, &[])
}

/// L2 projection of a function with known jump locations: any element whose
/// interior contains a breakpoint has its load integral split there, so
/// Riemann data is projected exactly rather than sampled across the jump.
pub fn project_l2_piecewise<F: Fn(f64) -> f64>(
    f: F,
    mesh: &Arc<Mesh1D>,
    basis: &Arc<Basis>,
    breakpoints: &[f64],
) -> Result<DGField> {
    let n = basis.n_funcs();
    let nq = basis.quad.len();
    let mut field = DGField::zero(mesh.clone(), basis.clone());
    let half_dx = 0.5 * mesh.dx;

    for i in 0..mesh.n_elements {
        let xl = mesh.interface(i);
        let xr = mesh.interface(i + 1);
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > xl + 1e-14 * mesh.dx && b < xr - 1e-14 * mesh.dx)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut load = vec![0.0; n];
        let mut seg_start = xl;
        let accumulate = |a: f64, b: f64, load: &mut [f64]| -> Result<()> {
            // Map the reference rule onto [a, b]; express phi at the element's
            // own reference coordinate of each sample point.
            let jac = 0.5 * (b - a);
            for q in 0..nq {
                let x = 0.5 * (a + b) + jac * basis.quad.points[q];
                let fx = f(x);
                if !fx.is_finite() {
                    return Err(SolverError::NonFiniteSample { x });
                }
                let xi_elem = (x - mesh.element_center(i)) / half_dx;
                for (m, l) in load.iter_mut().enumerate() {
                    let phi = basis_value(basis, m, xi_elem);
                    *l += basis.quad.weights[q] * jac * fx * phi;
                }
            }
            Ok(())
        };

        if cuts.is_empty() {
            // Fast path: samples at the element's own quadrature points.
            let mut row = field.coeffs.row_mut(i);
            for q in 0..nq {
                let x = mesh.to_physical(i, basis.quad.points[q]);
                let fx = f(x);
                if !fx.is_finite() {
                    return Err(SolverError::NonFiniteSample { x });
                }
                for m in 0..n {
                    load[m] += basis.quad.weights[q] * half_dx * fx * basis.phi_quad[[q, m]];
                }
            }
            for m in 0..n {
                row[m] = load[m] / (half_dx * basis.mass_ref[m]);
            }
            continue;
        }

        for &c in &cuts {
            accumulate(seg_start, c, &mut load)?;
            seg_start = c;
        }
        accumulate(seg_start, xr, &mut load)?;
        let mut row = field.coeffs.row_mut(i);
        for m in 0..n {
            row[m] = load[m] / (half_dx * basis.mass_ref[m]);
        }
    }
    Ok(field)
}

fn basis_value(basis: &Basis, m: usize, xi: f64) -> f64 {
    let mut coeffs = vec![0.0; basis.n_funcs()];
    coeffs[m] = 1.0;
    basis.eval_ref(&coeffs, xi)
}

/// L1 distance between a DG field and a pointwise reference, by a Gauss rule
/// with k+4 points per element (|.| is non-smooth, so over-integrate).
pub fn l1_error<F: Fn(f64) -> f64>(u: &DGField, reference: F) -> f64 {
    let rule = QuadratureRule::gauss_legendre(u.basis.degree + 4);
    let half_dx = 0.5 * u.mesh.dx;
    let mut total = 0.0;
    for i in 0..u.mesh.n_elements {
        let row = u.coeffs.row(i);
        let row = row.as_slice().unwrap();
        let mut s = 0.0;
        for q in 0..rule.len() {
            let xi = rule.points[q];
            let x = u.mesh.to_physical(i, xi);
            s += rule.weights[q] * (u.basis.eval_ref(row, xi) - reference(x)).abs();
        }
        total += half_dx * s;
    }
    total
}

/// L1 norm of a DG field.
pub fn l1_norm(u: &DGField) -> f64 {
    l1_error(u, |_| 0.0)
}

/// L1 distance between two DG fields on possibly different meshes, integrated
/// on the first field's mesh with a k+4 rule.
pub fn l1_distance(u: &DGField, v: &DGField) -> f64 {
    l1_error(u, |x| v.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisKind;
    use approx::assert_abs_diff_eq;

    fn setup(x_min: f64, x_max: f64, n: usize, k: usize, kind: BasisKind) -> (Arc<Mesh1D>, Arc<Basis>) {
        (Arc::new(Mesh1D::new(x_min, x_max, n)), Arc::new(Basis::new(k, kind)))
    }

    #[test]
    fn projects_constant_exactly() {
        for kind in [BasisKind::ModalLegendre, BasisKind::NodalGauss] {
            let (mesh, basis) = setup(0.0, 2.0, 5, 1, kind);
            let u = project_l2(|_| 3.0, &mesh, &basis).unwrap();
            for i in 0..5 {
                for &x in &[0.05, 0.21, 0.39] {
                    let xc = mesh.element_center(i);
                    assert_abs_diff_eq!(u.eval(xc + x - 0.2), 3.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn projects_linear_exactly_at_quadrature_points() {
        let (mesh, basis) = setup(0.0, 1.0, 4, 1, BasisKind::ModalLegendre);
        let u = project_l2(|x| x, &mesh, &basis).unwrap();
        for i in 0..4 {
            for q in 0..basis.quad.len() {
                let x = mesh.to_physical(i, basis.quad.points[q]);
                assert_abs_diff_eq!(u.eval(x), x, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn projection_error_third_order_for_p2() {
        let f = |x: f64| x.sin();
        let errs: Vec<f64> = [10usize, 20]
            .iter()
            .map(|&n| {
                let (mesh, basis) =
                    setup(-std::f64::consts::PI, std::f64::consts::PI, n, 2, BasisKind::ModalLegendre);
                let u = project_l2(f, &mesh, &basis).unwrap();
                l1_error(&u, f)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((7.0..9.0).contains(&ratio), "ratio {ratio} not ~ 8");
    }

    #[test]
    fn projection_idempotent() {
        for kind in [BasisKind::ModalLegendre, BasisKind::NodalGauss] {
            let (mesh, basis) = setup(-1.0, 2.0, 6, 3, kind);
            let u = project_l2(|x| (1.3 * x).sin() + 0.3 * x * x, &mesh, &basis).unwrap();
            let v = project_l2(|x| u.eval(x), &mesh, &basis).unwrap();
            for (a, b) in u.coeffs.iter().zip(v.coeffs.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn l1_error_identity_and_box() {
        let (mesh, basis) = setup(0.0, 1.0, 4, 2, BasisKind::ModalLegendre);
        let u = project_l2(|x| 0.2 + x * x, &mesh, &basis).unwrap();
        assert!(l1_error(&u, |x| u.eval(x)) < 1e-14);

        let (mesh0, basis0) = setup(0.0, 1.0, 4, 0, BasisKind::ModalLegendre);
        let ones = project_l2(|_| 1.0, &mesh0, &basis0).unwrap();
        assert_abs_diff_eq!(l1_error(&ones, |_| 0.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn l1_error_of_sine_against_zero_field() {
        let (mesh, basis) = setup(-std::f64::consts::PI, std::f64::consts::PI, 10, 2, BasisKind::ModalLegendre);
        let zero = DGField::zero(mesh, basis);
        // int |sin| over one period = 4; kinks sit on interfaces for even N.
        assert_abs_diff_eq!(l1_error(&zero, |x: f64| x.sin()), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn traces_constant_and_step() {
        let (mesh, basis) = setup(0.0, 1.0, 2, 0, BasisKind::ModalLegendre);
        let mut u = DGField::zero(mesh.clone(), basis.clone());
        u.coeffs[[0, 0]] = 1.0;
        u.coeffs[[1, 0]] = 3.0;
        let (um, up) = trace_values(&u, 1, None).unwrap();
        assert_eq!((um, up), (1.0, 3.0));
        let (j, a) = jump_average((um, up));
        assert_eq!((j, a), (2.0, 2.0));

        let c = project_l2(|_| 5.5, &mesh, &basis).unwrap();
        let (um, up) = trace_values(&c, 1, None).unwrap();
        assert_abs_diff_eq!(um, 5.5, epsilon = 1e-14);
        assert_abs_diff_eq!(up, 5.5, epsilon = 1e-14);
        assert!(matches!(
            trace_values(&c, 0, None),
            Err(SolverError::MissingGhost { interface: 0 })
        ));
        let (um, up) = trace_values(&c, 0, Some(EdgeRule::Periodic)).unwrap();
        assert_abs_diff_eq!(um, up, epsilon = 1e-14);
    }

    #[test]
    fn trace_of_continuous_linear_field() {
        let (mesh, basis) = setup(0.0, 2.0, 2, 1, BasisKind::ModalLegendre);
        let u = project_l2(|x| x, &mesh, &basis).unwrap();
        let (um, up) = trace_values(&u, 1, None).unwrap();
        assert_abs_diff_eq!(um, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(up, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn split_projection_handles_interior_jump() {
        // Jump at x = 0.3 inside element 0 of a 2-element mesh on [0,1].
        let (mesh, basis) = setup(0.0, 1.0, 2, 2, BasisKind::ModalLegendre);
        let step = |x: f64| if x < 0.3 { 2.0 } else { 1.0 };
        let u = project_l2_piecewise(step, &mesh, &basis, &[0.3]).unwrap();
        // Element-mean must equal the exact mean of the step.
        let exact_mean_el0 = (0.3 * 2.0 + 0.2 * 1.0) / 0.5;
        let mean = basis
            .quad
            .points
            .iter()
            .zip(&basis.quad.weights)
            .map(|(&xi, &w)| w * u.basis.eval_ref(u.coeffs.row(0).as_slice().unwrap(), xi))
            .sum::<f64>()
            / 2.0;
        assert_abs_diff_eq!(mean, exact_mean_el0, epsilon = 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // Projection reproduces any member of the DG space exactly, i.e.
            // it is a projection (idempotent on the range).
            #[test]
            fn projection_reproduces_space_members(
                coeffs in proptest::collection::vec(-10.0f64..10.0, 12),
                nodal in proptest::bool::ANY,
            ) {
                let kind = if nodal { BasisKind::NodalGauss } else { BasisKind::ModalLegendre };
                let (mesh, basis) = setup(-2.0, 1.0, 4, 2, kind);
                let mut u = DGField::zero(mesh.clone(), basis.clone());
                for (c, v) in u.coeffs.iter_mut().zip(&coeffs) {
                    *c = *v;
                }
                let v = project_l2(|x| u.eval(x), &mesh, &basis).unwrap();
                for (a, b) in u.coeffs.iter().zip(v.coeffs.iter()) {
                    prop_assert!((a - b).abs() <= 1e-11 * (1.0 + a.abs()));
                }
                prop_assert!(l1_error(&u, |x| v.eval(x)) <= 1e-10);
            }

            // Jump/average algebra: u+- recovers from ([u], {u}) for any traces.
            #[test]
            fn jump_average_invertible(um in -50.0f64..50.0, up in -50.0f64..50.0) {
                let (j, a) = jump_average((um, up));
                prop_assert!((a + 0.5 * j - up).abs() < 1e-12 * (1.0 + up.abs()));
                prop_assert!((a - 0.5 * j - um).abs() < 1e-12 * (1.0 + um.abs()));
            }
        }
    }

    #[test]
    fn projection_rejects_non_finite_samples() {
        let (mesh, basis) = setup(0.0, 1.0, 2, 1, BasisKind::ModalLegendre);
        let r = project_l2(|x| 1.0 / (x - x), &mesh, &basis);
        assert!(matches!(r, Err(SolverError::NonFiniteSample { .. })));
    }
}
