//! Nonuniform spatial grids over the rescaled domain [-1, 1].
//!
//! Grids are predetermined (no moving-mesh adaptation): either uniform, or the
//! equidistribution of a parabolic monitor density that concentrates cells near
//! an expected quenching site while keeping the boundary cells coarse.

use crate::error::{Error, Result};

/// One-dimensional grid: nodes x_0 .. x_{N+1} with x_0 = -1, x_{N+1} = 1,
/// steps h_i = x_{i+1} - x_i, and N interior nodes.
#[derive(Debug, Clone)]
pub struct Grid1D {
    pub nodes: Vec<f64>,
    pub steps: Vec<f64>,
    pub n_interior: usize,
}

impl Grid1D {
    /// Validates ordering, endpoint exactness and node/step consistency.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid1D> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least one interior node, got {} nodes",
                nodes.len()
            )));
        }
        if nodes[0] != -1.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "grid endpoints must be exactly -1 and 1, got {} and {}",
                nodes[0],
                nodes.last().unwrap()
            )));
        }
        let steps: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if steps.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidArgument(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        let n_interior = nodes.len() - 2;
        Ok(Grid1D {
            nodes,
            steps,
            n_interior,
        })
    }

    /// Interior nodes x_1 .. x_N.
    pub fn interior(&self) -> &[f64] {
        &self.nodes[1..=self.n_interior]
    }
}

/// Tensor-product grid for the two-dimensional problem.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub gx: Grid1D,
    pub gy: Grid1D,
}

/// Equally spaced nodes; every step is 2/(N+1).
pub fn make_uniform_grid(n_interior: usize) -> Result<Grid1D> {
    if n_interior < 1 {
        return Err(Error::InvalidArgument(
            "uniform grid needs n_interior >= 1".into(),
        ));
    }
    let m = n_interior + 1; // number of cells
    let mut nodes = vec![0.0; m + 1];
    // Mirror construction keeps the grid antisymmetric to the last bit,
    // so symmetric problems quench at x = 0 exactly.
    for i in 0..=m / 2 {
        let x = (2 * i) as f64 / m as f64 - 1.0;
        nodes[i] = x;
        nodes[m - i] = -x;
    }
    if m.is_multiple_of(2) {
        nodes[m / 2] = 0.0;
    }
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    Grid1D::from_nodes(nodes)
}

/// Monitor density for the refined grid: a downward parabola with value
/// `ratio` at `center` decaying to 1 at the farther boundary.
#[cfg(test)]
fn monitor(x: f64, ratio: f64, center: f64, w: f64) -> f64 {
    let s = (x - center) / w;
    let m = 1.0 + (ratio - 1.0) * (1.0 - s * s);
    m.max(1.0)
}

/// Integral of the monitor from -1 to x (the clip at 1 is inactive inside the
/// domain because |x - center| <= w there).
fn monitor_cumulative(x: f64, ratio: f64, center: f64, w: f64) -> f64 {
    let cube = |y: f64| {
        let d = y - center;
        d * d * d
    };
    (x + 1.0) + (ratio - 1.0) * ((x + 1.0) - (cube(x) - cube(-1.0)) / (3.0 * w * w))
}

/// Grid generated by equidistributing a parabolic monitor: every cell carries
/// the same monitor mass, so cells are finest where the monitor peaks (at
/// `center`) and coarsest at the far boundary, with step ratio close to
/// `refinement_ratio`. Endpoints are snapped to exactly -1 and 1, and a grid
/// centered at 0 is mirror-symmetrized.
pub fn make_parabolic_arclength_grid(
    n_interior: usize,
    refinement_ratio: f64,
    center: f64,
) -> Result<Grid1D> {
    if n_interior < 3 {
        return Err(Error::InvalidArgument(
            "parabolic grid needs n_interior >= 3".into(),
        ));
    }
    if !(refinement_ratio >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "refinement_ratio must be >= 1, got {refinement_ratio}"
        )));
    }
    if !(-1.0 < center && center < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "center must lie strictly inside (-1, 1), got {center}"
        )));
    }
    if refinement_ratio == 1.0 {
        // Flat monitor: the equidistribution is the uniform grid.
        return make_uniform_grid(n_interior);
    }

    let w = (1.0 + center).max(1.0 - center);
    let m = n_interior + 1;
    let total = monitor_cumulative(1.0, refinement_ratio, center, w);
    let mut nodes = vec![0.0; m + 1];
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    for i in 1..m {
        let target = total * i as f64 / m as f64;
        // The cumulative is strictly increasing (monitor >= 1), so bisection
        // converges unconditionally.
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if monitor_cumulative(mid, refinement_ratio, center, w) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        nodes[i] = 0.5 * (lo + hi);
    }
    // Affine rescale guards the endpoint identity against quadrature drift.
    let (lo, hi) = (nodes[0], nodes[m]);
    for x in nodes.iter_mut() {
        *x = -1.0 + 2.0 * (*x - lo) / (hi - lo);
    }
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    if center == 0.0 {
        // The monitor is even, so enforce exact antisymmetry.
        for i in 0..=m / 2 {
            let x = 0.5 * (nodes[i] - nodes[m - i]);
            nodes[i] = x;
            nodes[m - i] = -x;
        }
        if m.is_multiple_of(2) {
            nodes[m / 2] = 0.0;
        }
        nodes[0] = -1.0;
        nodes[m] = 1.0;
    }
    Grid1D::from_nodes(nodes)
}

/// Exact minimum and maximum of the step sizes.
pub fn grid_extremal_steps(g: &Grid1D) -> (f64, f64) {
    let mut h_min = f64::INFINITY;
    let mut h_max = 0.0f64;
    for &h in &g.steps {
        h_min = h_min.min(h);
        h_max = h_max.max(h);
    }
    (h_min, h_max)
}
