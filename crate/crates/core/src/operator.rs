//! Second-difference operators on nonuniform grids and their weighted forms.
//!
//! The pure difference operator P acts on interior values with homogeneous
//! Dirichlet data folded in. Row i (steps h_{i-1} to the left, h_i to the
//! right) is
//!
//!   2/(h_{i-1}(h_{i-1}+h_i)) u_{i-1}  -  2/(h_{i-1} h_i) u_i  +  2/(h_i(h_{i-1}+h_i)) u_{i+1}
//!
//! which reproduces second derivatives of quadratics exactly. The full
//! operator is M = (1/a^2) B P with B = diag(1/sigma_i); a is the physical
//! half-width folded out of the rescaled domain [-1, 1].

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Tridiagonal matrix: `sub` and `sup` have length N-1, `diag` length N.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// out = T v.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sub[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Thomas elimination without pivoting. The systems solved here are
    /// strictly diagonally dominant by construction, so a vanishing pivot
    /// means the inputs lost that structure.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        debug_assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return Err(Error::Structure("zero pivot in tridiagonal solve".into()));
        }
        x[0] = rhs[0] / pivot;
        for i in 1..n {
            c[i - 1] = self.sup[i - 1] / pivot;
            pivot = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if pivot == 0.0 {
                return Err(Error::Structure("zero pivot in tridiagonal solve".into()));
            }
            x[i] = (rhs[i] - self.sub[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// P, the degeneracy weights, and the half-width, kept together so that the
/// action of M = (1/a^2) B P never needs a dense representation.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub p: Tridiagonal,
    /// 1/sigma_i, the diagonal of B.
    pub b_diag: Vec<f64>,
    pub a: f64,
    pub sigma: Vec<f64>,
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.p.n()
    }

    /// out = M v = (1/a^2) B P v.
    pub fn apply_m(&self, v: &[f64], out: &mut [f64]) {
        self.p.apply(v, out);
        let inv_a2 = 1.0 / (self.a * self.a);
        for (o, b) in out.iter_mut().zip(&self.b_diag) {
            *o *= inv_a2 * b;
        }
    }

    /// M with the row scaling folded into explicit tridiagonal storage.
    pub fn m_tridiagonal(&self) -> Tridiagonal {
        let n = self.n();
        let inv_a2 = 1.0 / (self.a * self.a);
        let row = |i: usize| inv_a2 * self.b_diag[i];
        Tridiagonal {
            sub: (1..n).map(|i| row(i) * self.p.sub[i - 1]).collect(),
            diag: (0..n).map(|i| row(i) * self.p.diag[i]).collect(),
            sup: (0..n - 1).map(|i| row(i) * self.p.sup[i]).collect(),
        }
    }
}

/// Assemble the pure second-difference operator for a grid.
///
/// Interior node i (0-based row index) has left step h[i] and right step
/// h[i+1] in grid storage, because step k spans nodes k..k+1 and row i
/// belongs to global node i+1.
pub fn assemble_p(g: &Grid1D) -> Tridiagonal {
    let n = g.n_interior;
    let h = &g.steps;
    let mut sub = Vec::with_capacity(n - 1);
    let mut diag = Vec::with_capacity(n);
    let mut sup = Vec::with_capacity(n - 1);
    for i in 0..n {
        let hl = h[i];
        let hr = h[i + 1];
        diag.push(-2.0 / (hl * hr));
        if i > 0 {
            sub.push(2.0 / (hl * (hl + hr)));
        }
        if i + 1 < n {
            sup.push(2.0 / (hr * (hl + hr)));
        }
    }
    Tridiagonal { sub, diag, sup }
}

/// Build M = (1/a^2) B P. `sigma` holds interior values of the degeneracy.
pub fn assemble_m(g: &Grid1D, sigma: &[f64], a: f64) -> Result<DiscreteOperator> {
    if a <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "half-width a must be positive, got {a}"
        )));
    }
    if sigma.len() != g.n_interior {
        return Err(Error::InvalidArgument(format!(
            "sigma length {} does not match {} interior nodes",
            sigma.len(),
            g.n_interior
        )));
    }
    for (i, &s) in sigma.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::DegenerateInterior { index: i, value: s });
        }
    }
    Ok(DiscreteOperator {
        p: assemble_p(g),
        b_diag: sigma.iter().map(|s| 1.0 / s).collect(),
        a,
        sigma: sigma.to_vec(),
    })
}

/// Upper bound max_i 4/h_i^2 on the spectral norm of P.
pub fn spectral_norm_bound_p(g: &Grid1D) -> f64 {
    g.steps.iter().map(|h| 4.0 / (h * h)).fold(0.0, f64::max)
}

/// h_min^2 / (2 ||B||_2) = h_min^2 sigma_min / 2, the grid half of the step ceiling.
pub fn beta_min(g: &Grid1D, sigma: &[f64]) -> f64 {
    let h_min = g.steps.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_norm = sigma.iter().map(|s| 1.0 / s).fold(0.0, f64::max);
    h_min * h_min / (2.0 * b_norm)
}

/// Diagonal congruence P = D^{-1/2} S D^{1/2} with S symmetric.
#[derive(Debug, Clone)]
pub struct SymmetrizedForm {
    /// delta_j = (h_{j-1} + h_j) / (h_0 + h_1), the diagonal of D.
    pub d_diag: Vec<f64>,
    pub s: Tridiagonal,
}

/// Symmetrize P by the diagonal scaling D with delta_j = (h_{j-1}+h_j)/(h_0+h_1).
/// The symmetric off-diagonal is the geometric mean of each coupling pair,
/// alpha_k = sqrt(sup_k * sub_k), well defined because both signs are positive.
pub fn symmetrize(p: &Tridiagonal, g: &Grid1D) -> Result<SymmetrizedForm> {
    let n = p.n();
    let h = &g.steps;
    let base = h[0] + h[1];
    let d_diag: Vec<f64> = (0..n).map(|i| (h[i] + h[i + 1]) / base).collect();
    let mut alpha = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let prod = p.sup[k] * p.sub[k];
        if !(prod > 0.0) {
            return Err(Error::Structure(format!(
                "off-diagonal product nonpositive at k={k}: {prod}"
            )));
        }
        alpha.push(prod.sqrt());
    }
    Ok(SymmetrizedForm {
        d_diag,
        s: Tridiagonal {
            sub: alpha.clone(),
            diag: p.diag.clone(),
            sup: alpha,
        },
    })
}

/// Union of the Gershgorin discs of M projected to the real axis.
/// For valid assemblies the upper end never exceeds rounding noise above zero:
/// interior rows have zero row sum, boundary rows negative.
pub fn gershgorin_interval(op: &DiscreteOperator) -> Result<(f64, f64)> {
    let n = op.n();
    let m = op.m_tridiagonal();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += m.sub[i - 1].abs();
        }
        if i + 1 < n {
            radius += m.sup[i].abs();
        }
        lo = lo.min(m.diag[i] - radius);
        hi = hi.max(m.diag[i] + radius);
        scale = scale.max(m.diag[i].abs());
    }
    if hi > 1e-9 * scale {
        return Err(Error::Structure(format!(
            "Gershgorin interval reaches {hi} above zero; operator rows lost diagonal dominance"
        )));
    }
    Ok((lo, hi))
}
