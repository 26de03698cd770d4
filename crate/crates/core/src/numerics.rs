//! Tensor quadrature, finite differences, grids and the regularized gamma function.

use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;

use crate::error::{usage, Result};
use crate::jets::MultiIndex;

/// A vector-valued function of real coordinates; the common currency of the
/// mollifier and extension modules.
pub trait VectorFunction: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()>;

    fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.eval_into(u, &mut out)?;
        Ok(out)
    }
}

impl<T: VectorFunction + Send + ?Sized> VectorFunction for Box<T> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).eval_into(u, out)
    }
}

impl<T: VectorFunction + Send + Sync + ?Sized> VectorFunction for std::sync::Arc<T> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).eval_into(u, out)
    }
}

/// Adapter turning a closure into a [`VectorFunction`].
pub struct FnVector<F> {
    input_dim: usize,
    output_dim: usize,
    f: F,
}

impl<F> FnVector<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    pub fn new(input_dim: usize, output_dim: usize, f: F) -> Self {
        Self {
            input_dim,
            output_dim,
            f,
        }
    }
}

impl<F> VectorFunction for FnVector<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(u, out);
        Ok(())
    }
}

/// Scalar closure as a one-channel [`VectorFunction`].
pub fn scalar_fn<F>(input_dim: usize, f: F) -> FnVector<impl Fn(&[f64], &mut [f64]) + Sync>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    FnVector::new(input_dim, 1, move |u: &[f64], out: &mut [f64]| out[0] = f(u))
}

/// Per-axis Hermite node count used when none is configured.
pub fn default_hermite_count(arity: usize) -> usize {
    match arity {
        0..=4 => 20,
        5..=8 => 8,
        9..=16 => 4,
        _ => 2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisKind {
    /// Nodes and weights for the weight `exp(-x^2)` on the real line.
    Hermite,
    /// Midpoint rule on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

/// Tensor-product rule over `arity` axes sharing one 1-D rule.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    arity: usize,
    kind: AxisKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    truncation_radius: Option<f64>,
}

impl QuadratureRule {
    pub fn gauss_hermite(arity: usize, count: usize) -> Result<Self> {
        let Some(c) = NonZeroUsize::new(count) else {
            return usage("node count must be positive");
        };
        if arity == 0 {
            return usage("arity must be positive");
        }
        let rule = GaussHermite::new(c);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Ok(Self {
            arity,
            kind: AxisKind::Hermite,
            nodes,
            weights,
            truncation_radius: None,
        })
    }

    pub fn uniform(arity: usize, count: usize, lo: f64, hi: f64) -> Result<Self> {
        if count == 0 || arity == 0 || hi <= lo {
            return usage("uniform rule needs positive count, arity and hi > lo");
        }
        let h = (hi - lo) / count as f64;
        Ok(Self {
            arity,
            kind: AxisKind::Uniform { lo, hi },
            nodes: (0..count).map(|i| lo + (i as f64 + 0.5) * h).collect(),
            weights: vec![h; count],
            truncation_radius: None,
        })
    }

    /// Drops tensor nodes farther than `radius` from the origin (in node coordinates).
    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.truncation_radius = Some(radius);
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> AxisKind {
        self.kind
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    /// Number of tensor nodes before truncation.
    pub fn len(&self) -> usize {
        self.nodes.len().pow(self.arity as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Visits every tensor node in a fixed odometer order (last axis fastest).
    pub fn for_each_node(&self, mut visit: impl FnMut(&[f64], f64) -> Result<()>) -> Result<()> {
        let n = self.arity;
        let m = self.nodes.len();
        let r2 = self.truncation_radius.map(|r| r * r);
        let mut idx = vec![0usize; n];
        let mut x: Vec<f64> = vec![self.nodes[0]; n];
        loop {
            let keep = match r2 {
                Some(r2) => x.iter().map(|v| v * v).sum::<f64>() <= r2,
                None => true,
            };
            if keep {
                let w: f64 = idx.iter().map(|&i| self.weights[i]).product();
                visit(&x, w)?;
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < m {
                    x[axis] = self.nodes[idx[axis]];
                    break;
                }
                idx[axis] = 0;
                x[axis] = self.nodes[0];
            }
        }
    }

    /// Sum of `w * f(node)` over the tensor grid; the plain rule on its own domain.
    pub fn integrate(&self, f: &dyn VectorFunction) -> Result<Vec<f64>> {
        self.check_arity(f.input_dim())?;
        let mut acc = vec![0.0; f.output_dim()];
        let mut buf = vec![0.0; f.output_dim()];
        self.for_each_node(|x, w| {
            f.eval_into(x, &mut buf)?;
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += w * b;
            }
            Ok(())
        })?;
        Ok(acc)
    }

    pub(crate) fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.arity {
            return usage(format!(
                "quadrature arity {} does not match function arity {n}",
                self.arity
            ));
        }
        Ok(())
    }
}

/// `∫ f(y) exp(-scale^2 |y - center|^2) dy` by the Hermite tensor rule.
pub fn integrate_gaussian(
    f: &dyn VectorFunction,
    center: &[f64],
    scale: f64,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    if scale <= 0.0 {
        return usage("scale must be positive");
    }
    if rule.kind != AxisKind::Hermite {
        return usage("Gaussian integrals need a Hermite rule");
    }
    rule.check_arity(f.input_dim())?;
    if center.len() != rule.arity {
        return usage("center arity mismatch");
    }
    let mut acc = vec![0.0; f.output_dim()];
    let mut buf = vec![0.0; f.output_dim()];
    let mut y = vec![0.0; rule.arity];
    rule.for_each_node(|x, w| {
        for ((yi, ci), xi) in y.iter_mut().zip(center).zip(x) {
            *yi = ci + xi / scale;
        }
        f.eval_into(&y, &mut buf)?;
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += w * b;
        }
        Ok(())
    })?;
    let jac = scale.powi(-(rule.arity as i32));
    acc.iter_mut().for_each(|a| *a *= jac);
    Ok(acc)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central difference `δ_h^k f(z) / h^|k|` with half-step offsets; O(h^2) accurate.
pub fn finite_diff(f: &dyn VectorFunction, z: &[f64], k: &MultiIndex, h: f64) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return usage("finite-difference step must be positive");
    }
    if k.len() != z.len() || z.len() != f.input_dim() {
        return usage("multi-index, point and function arity must agree");
    }
    let active: Vec<(usize, u32)> = k
        .exps()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| (i, e))
        .collect();
    let mut acc = vec![0.0; f.output_dim()];
    if active.is_empty() {
        f.eval_into(z, &mut acc)?;
        return Ok(acc);
    }
    let mut buf = vec![0.0; f.output_dim()];
    let mut y = z.to_vec();
    let mut js = vec![0u32; active.len()];
    loop {
        let mut coeff = 1.0;
        for (&(axis, q), &j) in active.iter().zip(&js) {
            y[axis] = z[axis] + (q as f64 / 2.0 - j as f64) * h;
            coeff *= if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(q, j);
        }
        f.eval_into(&y, &mut buf)?;
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += coeff * b;
        }
        let mut t = active.len();
        loop {
            if t == 0 {
                let norm = h.powi(k.order() as i32);
                acc.iter_mut().for_each(|a| *a /= norm);
                return Ok(acc);
            }
            t -= 1;
            js[t] += 1;
            if js[t] <= active[t].1 {
                break;
            }
            js[t] = 0;
        }
    }
}

/// One Richardson step on [`finite_diff`]: `(4 D(h/2) - D(h)) / 3`, O(h^4).
pub fn finite_diff_richardson(
    f: &dyn VectorFunction,
    z: &[f64],
    k: &MultiIndex,
    h: f64,
) -> Result<Vec<f64>> {
    let coarse = finite_diff(f, z, k, h)?;
    let fine = finite_diff(f, z, k, h / 2.0)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

/// Points of the uniform `count^n` grid on the cube around `center` that lie in
/// the closed ball of the given radius, in lexicographic order.
pub fn ball_grid(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    if count <= 1 || radius <= 0.0 {
        return vec![center.to_vec()];
    }
    let step = 2.0 * radius / (count - 1) as f64;
    let slack = radius * radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let offs: Vec<f64> = idx.iter().map(|&i| -radius + i as f64 * step).collect();
        if offs.iter().map(|o| o * o).sum::<f64>() <= slack {
            out.push(center.iter().zip(&offs).map(|(c, o)| c + o).collect());
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < count {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Uniform `count^n` grid on `[lo, hi]^n` including both ends, lexicographic.
pub fn cube_grid(n: usize, lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    let c = vec![(lo + hi) / 2.0; n];
    let r = (hi - lo) / 2.0;
    if count <= 1 {
        return vec![c];
    }
    let step = 2.0 * r / (count - 1) as f64;
    let mut out = Vec::with_capacity(count.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        out.push(idx.iter().map(|&i| lo + i as f64 * step).collect());
        let mut axis = n;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < count {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, accurate in the tail.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        statrs::function::gamma::gamma_ur(a, x)
    }
}

/// Physicists' Hermite polynomial `H_q(x)`.
pub fn hermite(q: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    match q {
        0 => h0,
        _ => {
            for n in 1..q {
                let h2 = 2.0 * x * h1 - 2.0 * n as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_weights_carry_the_gaussian_mass() {
        for count in [2, 3, 8, 20] {
            let r = QuadratureRule::gauss_hermite(1, count).unwrap();
            let s: f64 = r.axis_weights().iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-12, "count {count}: {s}");
            assert!(r.axis_weights().iter().all(|w| *w > 0.0));
        }
        let u = QuadratureRule::uniform(2, 10, -1.0, 3.0).unwrap();
        let one = scalar_fn(2, |_| 1.0);
        assert!((u.integrate(&one).unwrap()[0] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_moments() {
        let rule = QuadratureRule::gauss_hermite(4, 6).unwrap();
        let c = [0.3, -0.2, 1.0, 0.5];
        let s = 1.7;
        let mass = (PI.sqrt() / s).powi(4);
        let one = scalar_fn(4, |_| 1.0);
        let v = integrate_gaussian(&one, &c, s, &rule).unwrap()[0];
        assert!((v / mass - 1.0).abs() < 1e-10);
        let odd = scalar_fn(4, |y| y[0] - 0.3);
        assert!(integrate_gaussian(&odd, &c, s, &rule).unwrap()[0].abs() < 1e-10);
        let second = scalar_fn(4, |y| (y[0] - 0.3).powi(2));
        let v2 = integrate_gaussian(&second, &c, s, &rule).unwrap()[0];
        let expect = mass / (2.0 * s * s);
        assert!((v2 / expect - 1.0).abs() < 1e-10);
        let wrong = scalar_fn(3, |_| 1.0);
        assert!(integrate_gaussian(&wrong, &c, s, &rule).is_err());
    }

    #[test]
    fn finite_difference_examples() {
        let lin = scalar_fn(3, |u| 2.0 * u[0] - 3.0 * u[1] + 0.5 * u[2] + 1.0);
        let k = MultiIndex::unit(3, 1);
        let d = finite_diff(&lin, &[0.1, 0.2, 0.3], &k, 1e-3).unwrap()[0];
        assert!((d + 3.0).abs() < 1e-10);
        let g = scalar_fn(4, |u| (-u.iter().map(|x| x * x).sum::<f64>()).exp());
        let k2 = MultiIndex::new(vec![2, 0, 0, 0]).unwrap();
        let d2 = finite_diff(&g, &[0.0; 4], &k2, 5e-4).unwrap()[0];
        assert!((d2 + 2.0).abs() < 1e-6);
        let zero = MultiIndex::zero(4);
        let z = [0.3, 0.1, -0.2, 0.4];
        assert_eq!(finite_diff(&g, &z, &zero, 0.1).unwrap()[0], g.eval(&z).unwrap()[0]);
    }

    #[test]
    fn ball_grid_examples() {
        assert_eq!(ball_grid(&[1.0, 2.0], 0.0, 5), vec![vec![1.0, 2.0]]);
        assert_eq!(ball_grid(&[1.0, 2.0], 3.0, 1), vec![vec![1.0, 2.0]]);
        assert_eq!(ball_grid(&[0.0, 0.0], 1.0, 3).len(), 5);
        assert_eq!(cube_grid(2, 0.0, 1.0, 3).len(), 9);
    }

    #[test]
    fn gamma_and_hermite_values() {
        // P(2, x) = 1 - e^{-x}(1 + x)
        for x in [0.1, 1.0, 3.0, 10.0] {
            let closed = 1.0 - (-x as f64).exp() * (1.0 + x);
            assert!((gamma_p(2.0, x) - closed).abs() < 1e-14);
        }
        assert_eq!(gamma_p(2.0, 0.0), 0.0);
        assert_eq!(hermite(0, 0.7), 1.0);
        assert!((hermite(3, 0.7) - (8.0 * 0.343 - 12.0 * 0.7)).abs() < 1e-14);
    }
}
