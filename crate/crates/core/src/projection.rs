//! Coordinate extraction by algebra operations, vectorization of A_r^l, and
//! the conjugation and Gaussian phrases behind the mollifier kernel.

use crate::algebra::{CdNumber, CdVector};
use crate::error::{usage, Error, Result};

/// Real coordinates of an element of A_r^l, part-major: slot `(p, j)` is `p * 2^r + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateVector {
    level: u32,
    arity: usize,
    entries: Vec<f64>,
}

impl CoordinateVector {
    pub fn new(level: u32, arity: usize, entries: Vec<f64>) -> Result<Self> {
        if arity == 0 || entries.len() != arity << level {
            return usage(format!(
                "coordinate vector for level {level}, arity {arity} needs {} entries, got {}",
                arity << level,
                entries.len()
            ));
        }
        Ok(Self {
            level,
            arity,
            entries,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    /// Index of slot `(p, j)`, with `p` counted from 0.
    pub fn slot(&self, p: usize, j: usize) -> usize {
        (p << self.level) + j
    }
}

pub fn vectorize(z: &CdVector) -> CoordinateVector {
    let entries = z
        .parts()
        .iter()
        .flat_map(|p| p.coeffs().iter().copied())
        .collect();
    CoordinateVector {
        level: z.level(),
        arity: z.arity(),
        entries,
    }
}

pub fn devectorize(u: &CoordinateVector) -> Result<CdVector> {
    let dim = 1usize << u.level;
    let parts = u
        .entries
        .chunks(dim)
        .map(|c| CdNumber::new(u.level, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    CdVector::new(parts)
}

fn require_level_two(level: u32) -> Result<()> {
    if level < 2 {
        return Err(Error::UnsupportedLevel {
            level,
            reason: "coordinate extraction divides by 2^r - 2".into(),
        });
    }
    Ok(())
}

/// `-z + sum_{k>=1} i_k (z i_k*)`, which equals `(2^r - 2) z*`.
fn conjugation_sum(z: &CdNumber) -> Result<CdNumber> {
    let level = z.level();
    let mut acc = -z;
    for k in 1..z.dim() {
        let ik = CdNumber::basis(level, k)?;
        let inner = z.try_mul(&ik.conj())?;
        acc = &acc + &ik.try_mul(&inner)?;
    }
    Ok(acc)
}

/// The `j`-th real coordinate of `z`, computed only with products, sums and
/// real scalings. Needs level at least 2.
pub fn pi_j(z: &CdNumber, j: usize) -> Result<f64> {
    let level = z.level();
    require_level_two(level)?;
    if j >= z.dim() {
        return usage(format!("coordinate index {j} out of range at level {level}"));
    }
    let c = 1.0 / ((1u64 << level) as f64 - 2.0);
    let conj_part = conjugation_sum(z)?.scale(c);
    let value = if j == 0 {
        (z + &conj_part).scale(0.5)
    } else {
        let ij = CdNumber::basis(level, j)?;
        let left = -&z.try_mul(&ij)?;
        (&left + &ij.try_mul(&conj_part)?).scale(0.5)
    };
    Ok(value.re())
}

/// `sum_{k=0}^{2^r-1} i_k (z i_k)`; equals `-(2^r - 2) z*`.
pub fn conj_phrase(z: &CdNumber) -> Result<CdNumber> {
    require_level_two(z.level())?;
    let mut acc = CdNumber::zero(z.level());
    for k in 0..z.dim() {
        let ik = CdNumber::basis(z.level(), k)?;
        acc = &acc + &ik.try_mul(&z.try_mul(&ik)?)?;
    }
    Ok(acc)
}

/// `exp(-(2^r-2)^-1 sum_p b_p [z_p sum_k i_k (z_p i_k)])`, evaluated through the
/// algebra. Equals `exp(sum_p b_p |z_p|^2)`.
pub fn gauss_phrase(z: &CdVector, b: &[f64]) -> Result<f64> {
    let level = z.level();
    require_level_two(level)?;
    if b.len() != z.arity() {
        return usage(format!("{} weights for {} parts", b.len(), z.arity()));
    }
    let c = (1u64 << level) as f64 - 2.0;
    let mut exponent = 0.0;
    for (zp, bp) in z.parts().iter().zip(b) {
        let prod = zp.try_mul(&conj_phrase(zp)?)?;
        let scale = prod.max_abs().max(f64::MIN_POSITIVE);
        let imag = prod.coeffs()[1..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if imag > 1e-12 * scale {
            return Err(Error::Internal(format!(
                "phrase produced a non-real value (imaginary part {imag:e})"
            )));
        }
        exponent += bp * prod.re();
    }
    Ok((-exponent / c).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_reads_coordinates() {
        let z = CdNumber::new(2, vec![3.0, 0.0, 5.0, 0.0]).unwrap();
        assert!((pi_j(&z, 0).unwrap() - 3.0).abs() < 1e-15);
        assert!((pi_j(&z, 2).unwrap() - 5.0).abs() < 1e-15);
        assert!(pi_j(&z, 1).unwrap().abs() < 1e-15);
        for level in 2..=5 {
            let dim = 1usize << level;
            for k in 0..dim {
                let ik = CdNumber::basis(level, k).unwrap();
                for j in 0..dim {
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert_eq!(pi_j(&ik, j).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn pi_rejects_low_levels() {
        let z = CdNumber::one(1);
        assert!(matches!(
            pi_j(&z, 0),
            Err(Error::UnsupportedLevel { level: 1, .. })
        ));
    }

    #[test]
    fn conj_phrase_on_units() {
        // Direct 8-term and 4-term basis sums worked by hand.
        assert_eq!(conj_phrase(&CdNumber::one(3)).unwrap(), CdNumber::real(3, -6.0));
        let i1 = CdNumber::basis(2, 1).unwrap();
        assert_eq!(conj_phrase(&i1).unwrap(), i1.scale(2.0));
    }

    #[test]
    fn gauss_phrase_values() {
        let z = CdVector::zero(2, 1);
        assert_eq!(gauss_phrase(&z, &[-1.0]).unwrap(), 1.0);
        let u = CdVector::new(vec![CdNumber::new(2, vec![0.6, 0.0, 0.8, 0.0]).unwrap()]).unwrap();
        let g = gauss_phrase(&u, &[-1.0]).unwrap();
        assert!((g - (-1.0f64).exp()).abs() < 1e-15);
        assert!((g - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn vectorize_places_units_and_round_trips() {
        let parts = vec![CdNumber::zero(3), CdNumber::basis(3, 3).unwrap()];
        let z = CdVector::new(parts).unwrap();
        let u = vectorize(&z);
        assert_eq!(u.entries().len(), 16);
        assert_eq!(u.entries()[u.slot(1, 3)], 1.0);
        assert_eq!(u.entries().iter().sum::<f64>(), 1.0);
        assert_eq!(devectorize(&u).unwrap(), z);
        assert!(CoordinateVector::new(3, 2, vec![0.0; 15]).is_err());
    }
}
