//! The nonlinear reaction term, its stochastic weighting and the degeneracy profile.
//!
//! The raw nonlinearity f(u) = (1-u)^{-theta} blows up as u approaches 1;
//! evaluation at or above unity is refused with a quench signal so the driver
//! always sees the terminal event instead of saturated arithmetic.

use crate::error::{Error, Result};
use crate::noise::SplitMix64;

/// Componentwise source data: g_i(v) = phi_i f(v_i) / sigma_i.
#[derive(Debug, Clone)]
pub struct SourceModel {
    /// Blow-up exponent theta > 0.
    pub theta: f64,
    /// Stochastic weights phi(eps_i), all within a positive band.
    pub phi: Vec<f64>,
    /// Degeneracy values at the interior nodes.
    pub sigma: Vec<f64>,
    /// f(0), kept explicit because the first-step bound depends on it.
    pub f0: f64,
}

impl SourceModel {
    pub fn new(theta: f64, phi: Vec<f64>, sigma: Vec<f64>) -> Result<SourceModel> {
        if !(theta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if phi.len() != sigma.len() {
            return Err(Error::InvalidArgument(format!(
                "phi length {} does not match sigma length {}",
                phi.len(),
                sigma.len()
            )));
        }
        if let Some(p) = phi.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "phi must stay strictly positive, got {p}"
            )));
        }
        for (i, &s) in sigma.iter().enumerate() {
            if !(s > 0.0) {
                return Err(Error::DegenerateInterior { index: i, value: s });
            }
        }
        Ok(SourceModel {
            theta,
            phi,
            sigma,
            f0: 1.0,
        })
    }

    /// Unit weights and unit degeneracy, the classical problem.
    pub fn classical(n: usize, theta: f64) -> SourceModel {
        SourceModel::new(theta, vec![1.0; n], vec![1.0; n]).unwrap()
    }
}

/// f(u) = (1-u)^{-theta}, strictly increasing on [0, 1).
pub fn f_eval(u: f64, theta: f64) -> Result<f64> {
    if u >= 1.0 {
        return Err(Error::QuenchOverflow { index: 0, value: u });
    }
    Ok(power_law(1.0 - u, theta))
}

/// (1-u)^{-theta} with the ubiquitous theta = 1 case kept on the fast path;
/// the solver evaluates this for every component at every step.
#[inline]
fn power_law(one_minus_u: f64, theta: f64) -> f64 {
    if theta == 1.0 {
        1.0 / one_minus_u
    } else {
        one_minus_u.powf(-theta)
    }
}

/// Frozen white-noise specification: i.i.d. uniform values on [lo, hi].
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

/// Draw the frozen noise vector. Same seed, same vector, bit for bit.
pub fn sample_noise(n: usize, spec: &NoiseSpec) -> Result<Vec<f64>> {
    if !(spec.lo > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise lower bound must be positive to keep the weight positive, got {}",
            spec.lo
        )));
    }
    if spec.hi < spec.lo {
        return Err(Error::InvalidArgument(format!(
            "noise bounds out of order: [{}, {}]",
            spec.lo, spec.hi
        )));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("noise vector needs n >= 1".into()));
    }
    let mut rng = SplitMix64::new(spec.seed);
    Ok((0..n).map(|_| rng.uniform(spec.lo, spec.hi)).collect())
}

/// Vector source g(v) with g_i = phi_i (1-v_i)^{-theta} / sigma_i.
pub fn g_eval(v: &[f64], model: &SourceModel) -> Result<Vec<f64>> {
    debug_assert_eq!(v.len(), model.phi.len());
    let mut out = Vec::with_capacity(v.len());
    for (i, &u) in v.iter().enumerate() {
        if u >= 1.0 {
            return Err(Error::QuenchOverflow { index: i, value: u });
        }
        out.push(model.phi[i] * power_law(1.0 - u, model.theta) / model.sigma[i]);
    }
    Ok(out)
}

/// Degeneracy profile sigma(x) = (x+1)^p (1-x)^{1-p}, positive strictly inside
/// the domain and vanishing at the boundary it weights toward.
pub fn sigma_degenerate(x: f64, p: f64) -> Result<f64> {
    if x.abs() >= 1.0 {
        return Err(Error::BoundaryDegeneracy(x));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "degeneracy exponent p must lie in [0, 1], got {p}"
        )));
    }
    Ok((x + 1.0).powf(p) * (1.0 - x).powf(1.0 - p))
}
