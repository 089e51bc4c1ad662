//! Uniform 1-D mesh.

/// Uniform partition of [x_min, x_max] into `n_elements` cells.
///
/// Element i spans [x_min + i dx, x_min + (i+1) dx]; there are
/// n_elements + 1 strictly increasing interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_elements: usize,
    pub dx: f64,
}

impl Mesh1D {
    pub fn new(x_min: f64, x_max: f64, n_elements: usize) -> Self {
        assert!(n_elements >= 1, "mesh needs at least one element");
        assert!(x_max > x_min, "mesh needs positive extent");
        let dx = (x_max - x_min) / n_elements as f64;
        Mesh1D { x_min, x_max, n_elements, dx }
    }

    /// Coordinate of interface i, i in 0..=n_elements.
    pub fn interface(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn element_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    /// Map a reference coordinate xi in [-1,1] into element i.
    pub fn to_physical(&self, i: usize, xi: f64) -> f64 {
        self.element_center(i) + 0.5 * self.dx * xi
    }

    /// Element index containing x (clamped to the domain).
    pub fn element_of(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.dx).floor() as isize;
        raw.clamp(0, self.n_elements as isize - 1) as usize
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}
