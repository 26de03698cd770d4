//! The normalized Gaussian smoothing operator
//! `G(z) = T κ^n ∫ h(y) exp(-κ²(2^r-2)|z-y|²) dy` and its derivatives.

use std::f64::consts::PI;

use crate::error::{usage, Error, Result};
use crate::jets::MultiIndex;
use crate::numerics::{default_hermite_count, finite_diff, hermite, gamma_p, gamma_q, QuadratureRule, VectorFunction};

/// Smallest κ returned by [`choose_kappa`].
pub const KAPPA_FLOOR: f64 = 1e-3;

/// Largest derivative order handled by the Hermite-multiplier path.
pub const MAX_KERNEL_ORDER: u32 = 6;

fn kernel_constant(level: u32) -> Result<f64> {
    if level < 2 {
        return Err(Error::UnsupportedLevel {
            level,
            reason: "the Gaussian phrase needs 2^r - 2 > 0".into(),
        });
    }
    Ok((1u64 << level) as f64 - 2.0)
}

/// `T = ((2^r - 2)/π)^{l 2^(r-1)}`, the constant giving the kernel unit mass.
pub fn normalization_t(level: u32, arity: usize) -> Result<f64> {
    let c = kernel_constant(level)?;
    let half_n = (arity << level) as f64 / 2.0;
    Ok((c / PI).powf(half_n))
}

/// Kernel mass inside the ball of radius `rho`: `P(n/2, κ²(2^r-2)ρ²)`.
pub fn phi_mass(rho: f64, kappa: f64, level: u32, arity: usize) -> Result<f64> {
    if rho < 0.0 || kappa <= 0.0 {
        return usage("phi_mass needs rho >= 0 and kappa > 0");
    }
    let c = kernel_constant(level)?;
    let n = (arity << level) as f64;
    Ok(gamma_p(n / 2.0, kappa * kappa * c * rho * rho))
}

/// `1 - Φ(ρ)` computed from the upper incomplete gamma (no cancellation).
pub fn phi_tail(rho: f64, kappa: f64, level: u32, arity: usize) -> Result<f64> {
    if rho < 0.0 || kappa <= 0.0 {
        return usage("phi_tail needs rho >= 0 and kappa > 0");
    }
    let c = kernel_constant(level)?;
    let n = (arity << level) as f64;
    Ok(gamma_q(n / 2.0, kappa * kappa * c * rho * rho))
}

/// Smallest κ (to relative precision 1e-12) with `1 - Φ(κδ) < ε / (4 K_h)`,
/// found by doubling from [`KAPPA_FLOOR`] and bisection.
pub fn choose_kappa(eps: f64, delta: f64, k_h: f64, level: u32, arity: usize) -> Result<f64> {
    if !(eps > 0.0 && delta > 0.0 && k_h > 0.0) {
        return usage("choose_kappa needs positive inputs");
    }
    let target = eps / (4.0 * k_h);
    let ok = |k: f64| -> Result<bool> { Ok(phi_tail(delta, k, level, arity)? < target) };
    let mut hi = KAPPA_FLOOR;
    if ok(hi)? {
        return Ok(hi);
    }
    while !ok(hi)? {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Internal("kappa search diverged".into()));
        }
    }
    let mut lo = hi / 2.0;
    while hi / lo - 1.0 > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Parameters of one smoothing operator.
#[derive(Clone, Debug)]
pub struct MollifierParams {
    pub kappa: f64,
    pub level: u32,
    pub arity: usize,
    pub t: f64,
    pub rule: QuadratureRule,
}

impl MollifierParams {
    /// Uses the default Hermite node count for the dimension.
    pub fn new(kappa: f64, level: u32, arity: usize) -> Result<Self> {
        Self::with_nodes(kappa, level, arity, default_hermite_count(arity << level))
    }

    pub fn with_nodes(kappa: f64, level: u32, arity: usize, nodes: usize) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return usage("kappa must be positive and finite");
        }
        Ok(Self {
            kappa,
            level,
            arity,
            t: normalization_t(level, arity)?,
            rule: QuadratureRule::gauss_hermite(arity << level, nodes)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.arity << self.level
    }

    /// `κ sqrt(2^r - 2)`: the kernel is `exp(-scale² |z - y|²)`.
    pub fn scale(&self) -> f64 {
        self.kappa * (((1u64 << self.level) as f64) - 2.0).sqrt()
    }

    /// Standard deviation of the kernel along one coordinate.
    pub fn sigma(&self) -> f64 {
        1.0 / (std::f64::consts::SQRT_2 * self.scale())
    }

    /// Largest distance from `z` at which a quadrature node is placed.
    pub fn reach(&self) -> f64 {
        let m = self.rule.axis_nodes().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let r = (self.dim() as f64).sqrt() * m;
        self.rule.truncation_radius().map_or(r, |t| t.min(r)) / self.scale()
    }

    /// `T κ^n scale^-n`, which multiplies the Hermite sum.
    pub fn prefactor(&self) -> f64 {
        let n = self.dim() as i32;
        self.t * self.kappa.powi(n) * self.scale().powi(-n)
    }

    fn check(&self, h: &dyn VectorFunction, z: &[f64]) -> Result<()> {
        self.rule.check_arity(h.input_dim())?;
        if z.len() != self.dim() {
            return usage(format!("point needs {} coordinates", self.dim()));
        }
        Ok(())
    }
}

/// `G(z)` by tensor Gauss-Hermite quadrature.
pub fn mollify(h: &dyn VectorFunction, params: &MollifierParams, z: &[f64]) -> Result<Vec<f64>> {
    params.check(h, z)?;
    let s = params.scale();
    let mut acc = vec![0.0; h.output_dim()];
    let mut buf = vec![0.0; h.output_dim()];
    let mut y = vec![0.0; z.len()];
    params.rule.for_each_node(|x, w| {
        for ((yi, zi), xi) in y.iter_mut().zip(z).zip(x) {
            *yi = zi + xi / s;
        }
        h.eval_into(&y, &mut buf)?;
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += w * b;
        }
        Ok(())
    })?;
    let pre = params.prefactor();
    acc.iter_mut().for_each(|a| *a *= pre);
    Ok(acc)
}

/// Where the derivative of `h` comes from on the function side.
#[derive(Clone, Copy)]
pub enum DerivativeSource<'a> {
    /// A function returning `∂^k h` directly.
    Oracle(&'a dyn VectorFunction),
    /// Central differences of `h` with the given step.
    FiniteDifference { step: f64 },
}

#[derive(Clone, Copy)]
pub enum PartialMode<'a> {
    /// Differentiate the Gaussian: Hermite multipliers `s^{k_i} H_{k_i}(x_i)`.
    KernelSide,
    /// Smooth `∂^k h` instead.
    FunctionSide(DerivativeSource<'a>),
}

/// `∂^k G(z)`.
pub fn mollify_partial(
    h: &dyn VectorFunction,
    params: &MollifierParams,
    k: &MultiIndex,
    z: &[f64],
    mode: PartialMode<'_>,
) -> Result<Vec<f64>> {
    if k.len() != params.dim() {
        return usage("multi-index length mismatch");
    }
    if k.order() > MAX_KERNEL_ORDER {
        return Err(Error::Usage(format!(
            "derivative order {} exceeds the supported {MAX_KERNEL_ORDER}",
            k.order()
        )));
    }
    match mode {
        PartialMode::KernelSide => Ok(mollify_derivatives(h, params, std::slice::from_ref(k), z)?
            .pop()
            .expect("one index")),
        PartialMode::FunctionSide(DerivativeSource::Oracle(dh)) => {
            if dh.output_dim() != h.output_dim() {
                return usage("derivative oracle has the wrong number of channels");
            }
            mollify(dh, params, z)
        }
        PartialMode::FunctionSide(DerivativeSource::FiniteDifference { step }) => {
            let dh = DiffOf { h, k, step };
            mollify(&dh, params, z)
        }
    }
}

struct DiffOf<'a> {
    h: &'a dyn VectorFunction,
    k: &'a MultiIndex,
    step: f64,
}

impl VectorFunction for DiffOf<'_> {
    fn input_dim(&self) -> usize {
        self.h.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.h.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let v = finite_diff(self.h, u, self.k, self.step)?;
        out.copy_from_slice(&v);
        Ok(())
    }
}

/// Kernel-side `∂^k G(z)` for several multi-indices from one pass over the nodes.
pub fn mollify_derivatives(
    h: &dyn VectorFunction,
    params: &MollifierParams,
    ks: &[MultiIndex],
    z: &[f64],
) -> Result<Vec<Vec<f64>>> {
    params.check(h, z)?;
    if ks.iter().any(|k| k.len() != z.len() || k.order() > MAX_KERNEL_ORDER) {
        return usage("multi-indices must match the dimension and have order <= 6");
    }
    let s = params.scale();
    let ch = h.output_dim();
    let mut acc = vec![vec![0.0; ch]; ks.len()];
    let mut buf = vec![0.0; ch];
    let mut y = vec![0.0; z.len()];
    params.rule.for_each_node(|x, w| {
        for ((yi, zi), xi) in y.iter_mut().zip(z).zip(x) {
            *yi = zi + xi / s;
        }
        h.eval_into(&y, &mut buf)?;
        for (k, a) in ks.iter().zip(acc.iter_mut()) {
            let mult: f64 = k
                .exps()
                .iter()
                .zip(x)
                .filter(|(e, _)| **e > 0)
                .map(|(&e, &xi)| s.powi(e as i32) * hermite(e, xi))
                .product();
            let f = w * mult;
            for (ai, bi) in a.iter_mut().zip(&buf) {
                *ai += f * bi;
            }
        }
        Ok(())
    })?;
    let pre = params.prefactor();
    acc.iter_mut().flatten().for_each(|a| *a *= pre);
    Ok(acc)
}
