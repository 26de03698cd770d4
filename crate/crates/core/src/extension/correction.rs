//! Localized monomials that adjust derivatives at isolated points.

use super::bump::smooth_step;
use crate::error::{usage, Result};
use crate::jets::{monomial, MultiIndex};
use crate::numerics::{finite_diff_richardson, VectorFunction};
use crate::sets::euclid;

/// `ω(z) = (z - c)^k / k! · ξ(z)`, with `ξ = 1` on `B(c, ρ/2)` and `ξ = 0` outside `B(c, ρ)`.
/// All derivatives of `ω` at `c` vanish except `∂^k ω(c) = 1`.
#[derive(Clone, Debug)]
pub struct PointCorrection {
    center: Vec<f64>,
    k: MultiIndex,
    rho: f64,
}

impl PointCorrection {
    pub fn new(center: Vec<f64>, k: MultiIndex, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return usage("support radius must be positive");
        }
        if k.len() != center.len() {
            return usage("multi-index and center dimensions differ");
        }
        Ok(Self { center, k, rho })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn index(&self) -> &MultiIndex {
        &self.k
    }

    pub fn radius(&self) -> f64 {
        self.rho
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let half = 0.5 * self.rho;
        let xi = smooth_step((euclid(z, &self.center) - half) / half);
        if xi == 0.0 {
            return 0.0;
        }
        let du: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        xi * monomial(&du, &self.k) / self.k.factorial()
    }
}

impl VectorFunction for PointCorrection {
    fn input_dim(&self) -> usize {
        self.center.len()
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        if u.len() != self.center.len() {
            return usage("point dimension mismatch");
        }
        out[0] = self.value(u);
        Ok(())
    }
}

/// `F + Σ_j coeff_j ω_j`.
pub struct Corrected<F> {
    base: F,
    terms: Vec<(PointCorrection, Vec<f64>)>,
}

impl<F: VectorFunction> Corrected<F> {
    pub fn new(base: F, terms: Vec<(PointCorrection, Vec<f64>)>) -> Result<Self> {
        for (w, c) in &terms {
            if w.input_dim() != base.input_dim() || c.len() != base.output_dim() {
                return usage("correction term does not match the base function");
            }
        }
        Ok(Self { base, terms })
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    pub fn terms(&self) -> &[(PointCorrection, Vec<f64>)] {
        &self.terms
    }
}

impl<F: VectorFunction> VectorFunction for Corrected<F> {
    fn input_dim(&self) -> usize {
        self.base.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.base.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.eval_into(u, out)?;
        for (w, c) in &self.terms {
            let v = w.value(u);
            if v != 0.0 {
                for (o, ci) in out.iter_mut().zip(c) {
                    *o += v * ci;
                }
            }
        }
        Ok(())
    }
}

/// Adds corrections at `center` so that the finite-difference derivatives of the
/// result match `targets` (pairs of multi-index and value) at that point.
pub fn correct_at_point<F: VectorFunction>(
    base: F,
    center: &[f64],
    targets: &[(MultiIndex, Vec<f64>)],
    rho: f64,
    fd_step: f64,
) -> Result<Corrected<F>> {
    let mut terms = Vec::with_capacity(targets.len());
    for (k, want) in targets {
        let have = finite_diff_richardson(&base, center, k, fd_step)?;
        let coeff: Vec<f64> = want.iter().zip(&have).map(|(w, h)| w - h).collect();
        terms.push((PointCorrection::new(center.to_vec(), k.clone(), rho)?, coeff));
    }
    Corrected::new(base, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff;

    #[test]
    fn kronecker_pattern_at_center() {
        let c = vec![0.3, -0.2, 0.1, 0.4];
        let k = MultiIndex::unit(4, 0);
        let w = PointCorrection::new(c.clone(), k.clone(), 0.5).unwrap();
        assert_eq!(w.value(&c), 0.0);
        for j in MultiIndex::enumerate(4, 2).unwrap() {
            let d = finite_diff(&w, &c, &j, 1e-4).unwrap()[0];
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((d - want).abs() < 1e-6, "{j:?}: {d}");
        }
        assert_eq!(w.value(&[0.9, -0.2, 0.1, 0.4]), 0.0);
        let w0 = PointCorrection::new(c.clone(), MultiIndex::zero(4), 0.5).unwrap();
        assert_eq!(w0.value(&c), 1.0);
    }
}
