//! Real Cayley-Dickson algebras A_r (dimension 2^r) and their complexifications.
//!
//! Basis elements are indexed so that `i_a * i_b = ±i_(a ^ b)`. At level 3 the
//! indices 0..7 correspond to the octonion units 1, i, j, k, l, il, jl, kl.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{usage, Error, Result};

/// Largest supported doubling level (64 real dimensions).
pub const R_MAX: u32 = 6;

fn check_level(level: u32) -> Result<()> {
    if level > R_MAX {
        return usage(format!("level {level} exceeds R_MAX = {R_MAX}"));
    }
    Ok(())
}

/// An element of A_r stored as its 2^r real coefficients, `i_0` first.
#[derive(Clone, Debug, PartialEq)]
pub struct CdNumber {
    level: u32,
    coeffs: Vec<f64>,
}

impl CdNumber {
    pub fn new(level: u32, coeffs: Vec<f64>) -> Result<Self> {
        check_level(level)?;
        if coeffs.len() != 1 << level {
            return usage(format!(
                "level {level} needs {} coefficients, got {}",
                1usize << level,
                coeffs.len()
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(Self { level, coeffs })
    }

    pub fn zero(level: u32) -> Self {
        assert!(level <= R_MAX, "level {level} exceeds R_MAX");
        Self {
            level,
            coeffs: vec![0.0; 1 << level],
        }
    }

    pub fn real(level: u32, x: f64) -> Self {
        let mut z = Self::zero(level);
        z.coeffs[0] = x;
        z
    }

    pub fn one(level: u32) -> Self {
        Self::real(level, 1.0)
    }

    /// The basis unit `i_index`.
    pub fn basis(level: u32, index: usize) -> Result<Self> {
        check_level(level)?;
        if index >= 1 << level {
            return usage(format!("basis index {index} out of range at level {level}"));
        }
        let mut z = Self::zero(level);
        z.coeffs[index] = 1.0;
        Ok(z)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn re(&self) -> f64 {
        self.coeffs[0]
    }

    fn same_level(&self, other: &Self) -> Result<()> {
        if self.level != other.level {
            return usage(format!("level mismatch: {} vs {}", self.level, other.level));
        }
        Ok(())
    }

    /// Recursive doubling product `(a + b l)(c + d l) = (ac - d* b) + (d a + b c*) l`.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_level(other)?;
        let mut out = vec![0.0; self.dim()];
        doubling_mul(&self.coeffs, &other.coeffs, &mut out);
        Ok(Self {
            level: self.level,
            coeffs: out,
        })
    }

    /// Product through the cached structure constants. Agrees with [`try_mul`](Self::try_mul).
    pub fn table_mul(&self, other: &Self) -> Result<Self> {
        self.same_level(other)?;
        let table = MultiplicationTable::cached(self.level);
        let mut out = vec![0.0; self.dim()];
        table.mul_into(&self.coeffs, &other.coeffs, &mut out);
        Ok(Self {
            level: self.level,
            coeffs: out,
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_level(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_level(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            level: self.level,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        conj_in_place(&mut coeffs);
        Self {
            level: self.level,
            coeffs,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `a* / |a|^2`. From level 4 on this is not checked against zero divisors;
    /// see [`verified_inverse`](Self::verified_inverse).
    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n == 0.0 {
            return Err(Error::Domain("inverse of zero".into()));
        }
        Ok(self.conj().scale(1.0 / n))
    }

    /// Inverse that also checks `a * a^-1 = 1` to `tol` (relative to 1).
    pub fn verified_inverse(&self, tol: f64) -> Result<Self> {
        let inv = self.inverse()?;
        let prod = self.try_mul(&inv)?;
        let defect = (prod.coeffs[0] - 1.0)
            .abs()
            .max(prod.coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs())));
        if defect > tol {
            return Err(Error::Domain(format!(
                "a * conj(a)/|a|^2 misses 1 by {defect:e}"
            )));
        }
        Ok(inv)
    }

    /// Left-fold power `((a a) a) ...`.
    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.level);
        for _ in 0..n {
            acc = acc.try_mul(self).expect("same level");
        }
        acc
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

impl Add for &CdNumber {
    type Output = CdNumber;
    fn add(self, rhs: &CdNumber) -> CdNumber {
        self.try_add(rhs).expect("level mismatch in +")
    }
}

impl Sub for &CdNumber {
    type Output = CdNumber;
    fn sub(self, rhs: &CdNumber) -> CdNumber {
        self.try_sub(rhs).expect("level mismatch in -")
    }
}

impl Mul for &CdNumber {
    type Output = CdNumber;
    /// Panics on level mismatch; use `try_mul` to get an error instead.
    fn mul(self, rhs: &CdNumber) -> CdNumber {
        self.try_mul(rhs).expect("level mismatch in *")
    }
}

impl Neg for &CdNumber {
    type Output = CdNumber;
    fn neg(self) -> CdNumber {
        self.scale(-1.0)
    }
}

fn conj_in_place(v: &mut [f64]) {
    for c in &mut v[1..] {
        *c = -*c;
    }
}

/// Doubling product on raw coefficient slices of equal power-of-two length.
pub(crate) fn doubling_mul(x: &[f64], y: &[f64], out: &mut [f64]) {
    // Each level needs 2n scratch slots for itself, so 4n covers the recursion.
    let mut scratch = vec![0.0; 4 * x.len()];
    doubling_rec(x, y, out, &mut scratch);
}

fn doubling_rec(x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let n = x.len();
    match n {
        1 => {
            out[0] = x[0] * y[0];
            return;
        }
        2 => {
            out[0] = x[0] * y[0] - x[1] * y[1];
            out[1] = x[0] * y[1] + x[1] * y[0];
            return;
        }
        _ => {}
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let (mine, rest) = scratch.split_at_mut(2 * n);
    let (conj, tmp) = mine.split_at_mut(n);
    let (c_conj, d_conj) = conj.split_at_mut(h);
    let (t1, t2) = tmp.split_at_mut(h);
    c_conj.copy_from_slice(c);
    conj_in_place(c_conj);
    d_conj.copy_from_slice(d);
    conj_in_place(d_conj);
    let (lo, hi) = out.split_at_mut(h);
    doubling_rec(a, c, t1, rest);
    doubling_rec(d_conj, b, t2, rest);
    for i in 0..h {
        lo[i] = t1[i] - t2[i];
    }
    doubling_rec(d, a, t1, rest);
    doubling_rec(b, c_conj, t2, rest);
    for i in 0..h {
        hi[i] = t1[i] + t2[i];
    }
}

/// Structure constants `i_a * i_b = sign * i_target` of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicationTable {
    level: u32,
    // Row-major 2^r x 2^r; target is always a ^ b, kept for inspection.
    entries: Vec<(u32, i8)>,
}

impl MultiplicationTable {
    /// Builds the table by multiplying every pair of basis units with the doubling product.
    pub fn build(level: u32) -> Result<Self> {
        check_level(level)?;
        let dim = 1usize << level;
        let mut entries = Vec::with_capacity(dim * dim);
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        for a in 0..dim {
            x.fill(0.0);
            x[a] = 1.0;
            for b in 0..dim {
                y.fill(0.0);
                y[b] = 1.0;
                doubling_mul(&x, &y, &mut out);
                let (idx, val) = out
                    .iter()
                    .enumerate()
                    .find(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .ok_or_else(|| Error::Internal("basis product vanished".into()))?;
                if val.abs() != 1.0 || out.iter().filter(|v| **v != 0.0).count() != 1 {
                    return Err(Error::Internal(format!(
                        "basis product i_{a} i_{b} is not a signed unit"
                    )));
                }
                entries.push((idx as u32, if val > 0.0 { 1 } else { -1 }));
            }
        }
        Ok(Self { level, entries })
    }

    /// Shared table for `level`, built once per process.
    pub fn cached(level: u32) -> &'static MultiplicationTable {
        static TABLES: [OnceLock<MultiplicationTable>; R_MAX as usize + 1] =
            [const { OnceLock::new() }; R_MAX as usize + 1];
        TABLES[level as usize].get_or_init(|| Self::build(level).expect("level checked"))
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// `(target index, sign)` with `i_a * i_b = sign * i_target`.
    pub fn entry(&self, a: usize, b: usize) -> (usize, f64) {
        let (t, s) = self.entries[(a << self.level) | b];
        (t as usize, s as f64)
    }

    pub fn mul_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let dim = 1usize << self.level;
        out.fill(0.0);
        for a in 0..dim {
            let xa = x[a];
            if xa == 0.0 {
                continue;
            }
            let row = &self.entries[a * dim..(a + 1) * dim];
            for (b, &(t, s)) in row.iter().enumerate() {
                out[t as usize] += s as f64 * xa * y[b];
            }
        }
    }
}

/// `x + i y` in the complexified algebra, with a central unit `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdComplex {
    pub re: CdNumber,
    pub im: CdNumber,
}

impl CdComplex {
    pub fn new(re: CdNumber, im: CdNumber) -> Result<Self> {
        re.same_level(&im)?;
        Ok(Self { re, im })
    }

    pub fn from_real(re: CdNumber) -> Self {
        let im = CdNumber::zero(re.level);
        Self { re, im }
    }

    /// The central unit `i` at `level`.
    pub fn unit_i(level: u32) -> Self {
        Self {
            re: CdNumber::zero(level),
            im: CdNumber::one(level),
        }
    }

    pub fn level(&self) -> u32 {
        self.re.level
    }

    /// `(x + i y)(u + i v) = (xu - yv) + i(xv + yu)`.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.re.same_level(&other.re)?;
        let xu = self.re.try_mul(&other.re)?;
        let yv = self.im.try_mul(&other.im)?;
        let xv = self.re.try_mul(&other.im)?;
        let yu = self.im.try_mul(&other.re)?;
        Ok(Self {
            re: &xu - &yv,
            im: &xv + &yu,
        })
    }

    /// `Re z - Im z`, i.e. `x* - i y`.
    pub fn conj(&self) -> Self {
        Self {
            re: self.re.conj(),
            im: -&self.im,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.re.norm_sq() + self.im.norm_sq()
    }

    /// Real channels: coefficients of `x` followed by those of `y`.
    pub fn channels(&self) -> Vec<f64> {
        let mut v = self.re.coeffs.clone();
        v.extend_from_slice(&self.im.coeffs);
        v
    }
}

/// An element of A_r^l.
#[derive(Clone, Debug, PartialEq)]
pub struct CdVector {
    parts: Vec<CdNumber>,
}

impl CdVector {
    pub fn new(parts: Vec<CdNumber>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return usage("a vector needs at least one part");
        };
        let level = first.level;
        if parts.iter().any(|p| p.level != level) {
            return usage("all parts of a vector must share one level");
        }
        Ok(Self { parts })
    }

    pub fn zero(level: u32, arity: usize) -> Self {
        Self {
            parts: vec![CdNumber::zero(level); arity.max(1)],
        }
    }

    pub fn level(&self) -> u32 {
        self.parts[0].level
    }

    pub fn arity(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[CdNumber] {
        &self.parts
    }

    pub fn norm_sq(&self) -> f64 {
        self.parts.iter().map(CdNumber::norm_sq).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(level: u32, i: usize) -> CdNumber {
        CdNumber::basis(level, i).unwrap()
    }

    #[test]
    fn octonion_units_follow_the_fano_relations() {
        // 1, i, j, k, l, il, jl, kl
        let (i, j, k, l) = (b(3, 1), b(3, 2), b(3, 3), b(3, 4));
        assert_eq!(&i * &j, k);
        assert_eq!(&j * &i, -&k);
        for u in 1..8 {
            assert_eq!(&b(3, u) * &b(3, u), CdNumber::real(3, -1.0));
        }
        let jl = &j * &l;
        assert_eq!(jl, b(3, 6));
        assert_eq!(&(&i * &j) * &l, b(3, 7));
        assert_eq!(&i * &jl, -&b(3, 7));
    }

    #[test]
    fn sedenion_zero_divisor() {
        let a = &b(4, 3) + &b(4, 10);
        let c = &b(4, 6) - &b(4, 15);
        let p = &a * &c;
        assert_eq!(p.max_abs(), 0.0);
        assert!(a.norm() > 0.0 && c.norm() > 0.0);
    }

    #[test]
    fn low_levels_are_real_and_complex_multiplication() {
        let x = CdNumber::new(0, vec![3.0]).unwrap();
        let y = CdNumber::new(0, vec![-2.5]).unwrap();
        assert_eq!((&x * &y).coeffs(), &[-7.5]);
        let z = CdNumber::new(1, vec![1.0, 2.0]).unwrap();
        let w = CdNumber::new(1, vec![3.0, -1.0]).unwrap();
        assert_eq!((&z * &w).coeffs(), &[5.0, 5.0]);
    }

    #[test]
    fn table_targets_are_xor_and_match_doubling() {
        for level in 0..=5 {
            let t = MultiplicationTable::build(level).unwrap();
            let dim = 1usize << level;
            for a in 0..dim {
                for c in 0..dim {
                    let (target, sign) = t.entry(a, c);
                    assert_eq!(target, a ^ c);
                    let prod = &b(level, a) * &b(level, c);
                    assert_eq!(prod, b(level, target).scale(sign));
                }
            }
        }
        assert_eq!(MultiplicationTable::build(1).unwrap().entry(1, 1), (0, -1.0));
        assert!(MultiplicationTable::build(R_MAX + 1).is_err());
    }

    #[test]
    fn inverse_and_errors() {
        assert_eq!(b(2, 1).inverse().unwrap(), -&b(2, 1));
        assert_eq!(CdNumber::real(3, 2.0).inverse().unwrap(), CdNumber::real(3, 0.5));
        assert!(matches!(CdNumber::zero(2).inverse(), Err(Error::Domain(_))));
        assert!(b(2, 1).try_mul(&b(3, 1)).is_err());
        assert!(CdNumber::new(2, vec![0.0; 3]).is_err());
        assert!(CdNumber::new(1, vec![f64::NAN, 0.0]).is_err());
        assert_eq!(CdNumber::new(1, vec![1.0, 1.0]).unwrap().norm_sq(), 2.0);
        assert_eq!(b(3, 1).conj(), -&b(3, 1));
    }

    #[test]
    fn complexified_unit_is_central_and_squares_to_minus_one() {
        let i = CdComplex::unit_i(3);
        let sq = i.try_mul(&i).unwrap();
        assert_eq!(sq, CdComplex::from_real(CdNumber::real(3, -1.0)));
        let bb = CdComplex::from_real(CdNumber::new(3, (0..8).map(|x| x as f64 - 2.5).collect()).unwrap());
        assert_eq!(i.try_mul(&bb).unwrap(), bb.try_mul(&i).unwrap());
        let x = CdNumber::new(2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let y = CdNumber::new(2, vec![0.25, 1.0, -1.0, 2.0]).unwrap();
        let p = CdComplex::from_real(x.clone()).try_mul(&CdComplex::from_real(y.clone())).unwrap();
        assert_eq!(p.re, &x * &y);
        assert_eq!(p.im.max_abs(), 0.0);
    }
}
