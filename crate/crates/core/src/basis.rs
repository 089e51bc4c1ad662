//! Element-local polynomial bases: modal Legendre and nodal Lagrange at Gauss points.
//!
//! Both bases have an exactly diagonal reference mass matrix: Legendre by
//! orthogonality, Lagrange-at-Gauss because the (k+1)-point Gauss rule
//! integrates the degree-2k products exactly.

use ndarray::Array2;

use crate::quadrature::{legendre_with_derivative, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    ModalLegendre,
    NodalGauss,
}

/// Reference-element basis of degree k with all matrices the spatial
/// operators need, precomputed once.
///
/// Weak-form integrals use a (k+2)-point Gauss rule (exact to degree 2k+3) so
/// nonlinear source terms are over-integrated on the modal path.
#[derive(Debug, Clone)]
pub struct Basis {
    pub degree: usize,
    pub kind: BasisKind,
    /// Quadrature rule for weak-form integrals (k+2 points).
    pub quad: QuadratureRule,
    /// Diagonal of the reference mass matrix (physical mass = dx/2 times this).
    pub mass_ref: Vec<f64>,
    /// phi_m(eta_q), shape (n_quad, k+1).
    pub phi_quad: Array2<f64>,
    /// G[l][m] = sum_q w_q phi_m(eta_q) phi_l'(eta_q); gives int u phi_l' d(xi).
    pub grad_form: Array2<f64>,
    /// Basis values at the element edges xi = -1 and xi = +1.
    pub phi_left: Vec<f64>,
    pub phi_right: Vec<f64>,
    /// The k+1 Gauss nodes (interpolation points of the nodal kind).
    pub nodes: Vec<f64>,
    pub node_weights: Vec<f64>,
    /// phi_m(xi_p), shape (k+1, k+1): coefficients -> values at the nodes.
    pub to_node_values: Array2<f64>,
}

impl Basis {
    pub fn new(degree: usize, kind: BasisKind) -> Self {
        let n = degree + 1;
        let quad = QuadratureRule::gauss_legendre(degree + 2);
        let node_rule = QuadratureRule::gauss_legendre(n);
        let nodes = node_rule.points.clone();
        let node_weights = node_rule.weights.clone();

        let eval = |m: usize, x: f64| -> (f64, f64) {
            match kind {
                BasisKind::ModalLegendre => legendre_with_derivative(m, x),
                BasisKind::NodalGauss => lagrange_with_derivative(&nodes, m, x),
            }
        };

        let nq = quad.len();
        let mut phi_quad = Array2::zeros((nq, n));
        let mut dphi_quad = Array2::zeros((nq, n));
        for q in 0..nq {
            for m in 0..n {
                let (p, dp) = eval(m, quad.points[q]);
                phi_quad[[q, m]] = p;
                dphi_quad[[q, m]] = dp;
            }
        }

        let mut grad_form = Array2::zeros((n, n));
        for l in 0..n {
            for m in 0..n {
                let mut s = 0.0;
                for q in 0..nq {
                    s += quad.weights[q] * phi_quad[[q, m]] * dphi_quad[[q, l]];
                }
                grad_form[[l, m]] = s;
            }
        }

        let mass_ref = match kind {
            BasisKind::ModalLegendre => (0..n).map(|j| 2.0 / (2 * j + 1) as f64).collect(),
            BasisKind::NodalGauss => node_weights.clone(),
        };

        let phi_left: Vec<f64> = (0..n).map(|m| eval(m, -1.0).0).collect();
        let phi_right: Vec<f64> = (0..n).map(|m| eval(m, 1.0).0).collect();

        let mut to_node_values = Array2::zeros((n, n));
        for p in 0..n {
            for m in 0..n {
                to_node_values[[p, m]] = eval(m, nodes[p]).0;
            }
        }

        Basis {
            degree,
            kind,
            quad,
            mass_ref,
            phi_quad,
            grad_form,
            phi_left,
            phi_right,
            nodes,
            node_weights,
            to_node_values,
        }
    }

    pub fn n_funcs(&self) -> usize {
        self.degree + 1
    }

    /// Evaluate the polynomial with coefficients `coeffs` at reference point `xi`.
    pub fn eval_ref(&self, coeffs: &[f64], xi: f64) -> f64 {
        match self.kind {
            BasisKind::ModalLegendre => {
                // Horner-style Legendre sum via the recurrence.
                let mut acc = 0.0;
                let mut p_prev = 1.0;
                let mut p = xi;
                acc += coeffs[0] * p_prev;
                if coeffs.len() > 1 {
                    acc += coeffs[1] * p;
                }
                for j in 1..coeffs.len().saturating_sub(1) {
                    let jf = j as f64;
                    let p_next = ((2.0 * jf + 1.0) * xi * p - jf * p_prev) / (jf + 1.0);
                    p_prev = p;
                    p = p_next;
                    acc += coeffs[j + 1] * p;
                }
                acc
            }
            BasisKind::NodalGauss => (0..coeffs.len())
                .map(|m| coeffs[m] * lagrange_with_derivative(&self.nodes, m, xi).0)
                .sum(),
        }
    }

    /// Coefficient vector representing the values `vals` at the k+1 Gauss nodes.
    pub fn coeffs_from_node_values(&self, vals: &[f64]) -> Vec<f64> {
        match self.kind {
            BasisKind::NodalGauss => vals.to_vec(),
            BasisKind::ModalLegendre => {
                // c_j = (2j+1)/2 sum_p w_p vals_p P_j(xi_p), exact for P^k data.
                let n = self.n_funcs();
                let mut out = vec![0.0; n];
                for (j, c) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for p in 0..n {
                        s += self.node_weights[p] * vals[p] * self.to_node_values[[p, j]];
                    }
                    *c = s * (2 * j + 1) as f64 / 2.0;
                }
                out
            }
        }
    }

    /// Values at the k+1 Gauss nodes from a coefficient vector.
    pub fn node_values(&self, coeffs: &[f64]) -> Vec<f64> {
        match self.kind {
            BasisKind::NodalGauss => coeffs.to_vec(),
            BasisKind::ModalLegendre => {
                let n = self.n_funcs();
                (0..n)
                    .map(|p| {
                        (0..n)
                            .map(|m| coeffs[m] * self.to_node_values[[p, m]])
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

/// Lagrange basis function m on the given nodes: value and derivative at x.
///
/// Valid for x away from the nodes (derivative uses the product-sum form);
/// at a node the exact Kronecker/derivative values are returned.
pub fn lagrange_with_derivative(nodes: &[f64], m: usize, x: f64) -> (f64, f64) {
    let n = nodes.len();
    // On-node case.
    if let Some(p) = nodes.iter().position(|&xp| (x - xp).abs() < 1e-14) {
        let val = if p == m { 1.0 } else { 0.0 };
        let dm: f64 = if p == m {
            (0..n)
                .filter(|&q| q != m)
                .map(|q| 1.0 / (nodes[m] - nodes[q]))
                .sum()
        } else {
            let num: f64 = (0..n)
                .filter(|&q| q != p && q != m)
                .map(|q| nodes[p] - nodes[q])
                .product();
            let den: f64 = (0..n)
                .filter(|&q| q != m)
                .map(|q| nodes[m] - nodes[q])
                .product();
            num / den
        };
        return (val, dm);
    }
    let mut val = 1.0;
    let mut inv_sum = 0.0;
    for q in 0..n {
        if q != m {
            val *= (x - nodes[q]) / (nodes[m] - nodes[q]);
            inv_sum += 1.0 / (x - nodes[q]);
        }
    }
    (val, val * inv_sum)
}
