//! Multi-indices, Whitney jets on finite point clouds, Taylor fields and the
//! remainder test for the C^m condition.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::numerics::{finite_diff, VectorFunction};

/// Largest total order a multi-index may have.
pub const MAX_ORDER: u32 = 12;

/// Exponents over the coordinate slots of A_r^l.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Result<Self> {
        let order: u32 = exps.iter().sum();
        if order > MAX_ORDER {
            return usage(format!("multi-index order {order} exceeds {MAX_ORDER}"));
        }
        Ok(Self(exps))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, slot: usize) -> Self {
        let mut e = vec![0; n];
        e[slot] = 1;
        Self(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `k! = prod k_i!`, exact for orders up to [`MAX_ORDER`].
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u64).product::<u64>())
            .product::<u64>() as f64
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return usage("multi-index length mismatch");
        }
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut out = Vec::with_capacity(self.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(Self(out))
    }

    /// All multi-indices over `n` slots with order at most `max_order`,
    /// sorted by order and then lexicographically descending.
    pub fn enumerate(n: usize, max_order: u32) -> Result<Vec<Self>> {
        if max_order > MAX_ORDER {
            return usage(format!("order {max_order} exceeds {MAX_ORDER}"));
        }
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut cur = vec![0u32; n];
            compositions(n, order, 0, &mut cur, &mut out);
        }
        Ok(out)
    }
}

fn compositions(n: usize, remaining: u32, slot: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slot + 1 == n || n == 0 {
        if n > 0 {
            cur[slot] = remaining;
        }
        if n > 0 || remaining == 0 {
            out.push(MultiIndex(cur.clone()));
        }
        if n > 0 {
            cur[slot] = 0;
        }
        return;
    }
    for e in (0..=remaining).rev() {
        cur[slot] = e;
        compositions(n, remaining - e, slot + 1, cur, out);
    }
    cur[slot] = 0;
}

/// `prod u_i^{s_i}`.
pub fn monomial(u: &[f64], s: &MultiIndex) -> f64 {
    u.iter()
        .zip(s.exps())
        .filter(|(_, &e)| e > 0)
        .map(|(x, &e)| x.powi(e as i32))
        .product()
}

/// Scalar field of jet values: real A_r or complexified A_{r,C}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "R")]
    Real,
    #[serde(rename = "C")]
    Complex,
}

impl Field {
    /// Real channels per value at `level`.
    pub fn channels(self, level: u32) -> usize {
        match self {
            Field::Real => 1 << level,
            Field::Complex => 2 << level,
        }
    }
}

/// Prescribed values `f_k(x)` for every point `x` of a finite cloud and every
/// multi-index with `|k| <= m`.
#[derive(Clone, Debug)]
pub struct WhitneyJet {
    level: u32,
    arity: usize,
    order: u32,
    field: Field,
    points: Vec<Vec<f64>>,
    point_orders: Vec<u32>,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    values: Vec<f64>,
}

impl WhitneyJet {
    /// A jet with all values zero.
    pub fn new(level: u32, arity: usize, order: u32, field: Field, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = arity << level;
        if arity == 0 {
            return usage("arity must be positive");
        }
        if let Some(bad) = points.iter().position(|p| p.len() != n) {
            return usage(format!("point {bad} does not have {n} coordinates"));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite point coordinate".into()));
        }
        let indices = MultiIndex::enumerate(n, order)?;
        let lookup = indices.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let channels = field.channels(level);
        let values = vec![0.0; points.len() * indices.len() * channels];
        Ok(Self {
            level,
            arity,
            order,
            field,
            point_orders: vec![order; points.len()],
            points,
            indices,
            lookup,
            values,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of real coordinates `l * 2^r`.
    pub fn dim(&self) -> usize {
        self.arity << self.level
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn channels(&self) -> usize {
        self.field.channels(self.level)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Multi-indices with `|k| <= m` in storage order.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index_of(&self, k: &MultiIndex) -> Option<usize> {
        self.lookup.get(k).copied()
    }

    pub fn point_order(&self, point: usize) -> u32 {
        self.point_orders[point]
    }

    fn offset(&self, point: usize, idx: usize) -> usize {
        (point * self.indices.len() + idx) * self.channels()
    }

    fn check_point(&self, point: usize) -> Result<()> {
        if point >= self.points.len() {
            return usage(format!("unknown point {point}"));
        }
        Ok(())
    }

    fn checked_index(&self, k: &MultiIndex) -> Result<usize> {
        self.index_of(k)
            .ok_or_else(|| Error::Usage(format!("multi-index {:?} outside the jet", k.exps())))
    }

    pub fn set_value(&mut self, point: usize, k: &MultiIndex, value: &[f64]) -> Result<()> {
        self.check_point(point)?;
        let idx = self.checked_index(k)?;
        if value.len() != self.channels() {
            return usage(format!("value needs {} channels, got {}", self.channels(), value.len()));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite jet value".into()));
        }
        let o = self.offset(point, idx);
        let c = self.channels();
        self.values[o..o + c].copy_from_slice(value);
        Ok(())
    }

    /// Lowers the order at one point; entries above it become zero.
    pub fn set_point_order(&mut self, point: usize, m: u32) -> Result<()> {
        self.check_point(point)?;
        if m > self.order {
            return usage("point order cannot exceed the jet order");
        }
        self.point_orders[point] = m;
        let c = self.channels();
        for idx in 0..self.indices.len() {
            if self.indices[idx].order() > m {
                let o = self.offset(point, idx);
                self.values[o..o + c].fill(0.0);
            }
        }
        Ok(())
    }

    pub fn value(&self, point: usize, k: &MultiIndex) -> Result<&[f64]> {
        self.check_point(point)?;
        let idx = self.checked_index(k)?;
        Ok(self.value_at(point, idx))
    }

    /// Value by storage index, unchecked.
    pub fn value_at(&self, point: usize, idx: usize) -> &[f64] {
        let o = self.offset(point, idx);
        &self.values[o..o + self.channels()]
    }

    /// Copy of the jet keeping only multi-indices of order at most `m`.
    pub fn truncated(&self, m: u32) -> Result<Self> {
        let m = m.min(self.order);
        let mut out = Self::new(self.level, self.arity, m, self.field, self.points.clone())?;
        for p in 0..self.len() {
            for (idx, k) in out.indices.clone().iter().enumerate() {
                let src = self.value_at(p, self.lookup[k]).to_vec();
                let o = out.offset(p, idx);
                let c = out.channels();
                out.values[o..o + c].copy_from_slice(&src);
            }
            out.point_orders[p] = self.point_orders[p].min(m);
        }
        Ok(out)
    }

    /// Sub-jet on the listed points.
    pub fn restricted(&self, keep: &[usize]) -> Result<Self> {
        let pts = keep.iter().map(|&i| self.points[i].clone()).collect();
        let mut out = Self::new(self.level, self.arity, self.order, self.field, pts)?;
        let per = self.indices.len() * self.channels();
        for (new, &old) in keep.iter().enumerate() {
            out.values[new * per..(new + 1) * per]
                .copy_from_slice(&self.values[old * per..(old + 1) * per]);
            out.point_orders[new] = self.point_orders[old];
        }
        Ok(out)
    }
}

/// Taylor field `ψ_{m;k}(z; y) = sum_{|s| <= m-|k|} f_{k+s}(y) / s! (z - y)^s`
/// anchored at jet point `anchor`.
pub fn taylor_field(jet: &WhitneyJet, k: &MultiIndex, z: &[f64], anchor: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; jet.channels()];
    taylor_field_into(jet, k, z, anchor, &mut out)?;
    Ok(out)
}

pub fn taylor_field_into(
    jet: &WhitneyJet,
    k: &MultiIndex,
    z: &[f64],
    anchor: usize,
    out: &mut [f64],
) -> Result<()> {
    jet.check_point(anchor)?;
    if z.len() != jet.dim() {
        return usage(format!("point needs {} coordinates", jet.dim()));
    }
    if k.order() > jet.order {
        return usage("|k| exceeds the jet order");
    }
    let y = &jet.points[anchor];
    let du: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
    out.fill(0.0);
    let budget = jet.order - k.order();
    let zero_k = k.order() == 0;
    for (sidx, s) in jet.indices.iter().enumerate() {
        if s.order() > budget {
            break;
        }
        let target = if zero_k { sidx } else { jet.lookup[&k.add(s)?] };
        let coef = monomial(&du, s) / s.factorial();
        if coef == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(jet.value_at(anchor, target)) {
            *o += coef * v;
        }
    }
    Ok(())
}

/// `Y_k(x; y) = f_k(x) - ψ_{m;k}(x; y)` for jet points `x` and `y`.
pub fn remainder(jet: &WhitneyJet, k: &MultiIndex, x: usize, y: usize) -> Result<Vec<f64>> {
    jet.check_point(x)?;
    let psi = taylor_field(jet, k, &jet.points[x], y)?;
    let fx = jet.value(x, k)?;
    Ok(fx.iter().zip(&psi).map(|(a, b)| a - b).collect())
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Worst remainder ratio over pairs closer than one scale.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleEntry {
    pub delta: f64,
    pub pairs: usize,
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyReport {
    pub eps: f64,
    pub delta: f64,
    /// Worst `|Y_k| / |x-y|^{m-|k|}` for each order `|k| = 0..=m`.
    pub worst_ratio_by_order: Vec<f64>,
    pub worst_ratio: f64,
    /// Ordered pair `(x, y)` and multi-index attaining the worst ratio.
    pub worst_pair: Option<(usize, usize)>,
    pub worst_k: Option<Vec<u32>>,
    pub pairs_checked: usize,
    /// Worst ratios at `delta / 2^t`, `t = 0, 1, 2`.
    pub multiscale: Vec<ScaleEntry>,
    pub passed: bool,
}

#[derive(Clone, Copy)]
struct PairWorst {
    ratio: f64,
    x: usize,
    y: usize,
    kidx: usize,
}

fn better(a: Option<PairWorst>, b: Option<PairWorst>) -> Option<PairWorst> {
    match (a, b) {
        (None, b) => b,
        (a, None) => a,
        (Some(p), Some(q)) => {
            if q.ratio > p.ratio || (q.ratio == p.ratio && (q.x, q.y, q.kidx) < (p.x, p.y, p.kidx)) {
                Some(q)
            } else {
                Some(p)
            }
        }
    }
}

/// Checks `|Y_k(x; y)| <= eps |x - y|^{m-|k|}` for all ordered pairs with
/// `|x - y| < delta` and all `|k| <= m`.
pub fn whitney_check(jet: &WhitneyJet, eps: f64, delta: f64) -> Result<WhitneyReport> {
    if eps <= 0.0 || delta <= 0.0 || !eps.is_finite() || !delta.is_finite() {
        return usage("eps and delta must be positive");
    }
    if jet.len() < 2 {
        return usage("a Whitney check needs at least two points");
    }
    let m = jet.order as usize;
    let npts = jet.len();
    // (distance, x, y, per-index ratios)
    let rows: Vec<(f64, usize, usize, Vec<f64>)> = (0..npts * npts)
        .into_par_iter()
        .filter_map(|pair| {
            let (x, y) = (pair / npts, pair % npts);
            if x == y {
                return None;
            }
            let d = euclid(&jet.points[x], &jet.points[y]);
            if d >= delta {
                return None;
            }
            let ratios = jet
                .indices
                .iter()
                .map(|k| {
                    let yk = remainder(jet, k, x, y).expect("indices valid");
                    let mag = yk.iter().map(|v| v * v).sum::<f64>().sqrt();
                    mag / d.powi((jet.order - k.order()) as i32)
                })
                .collect();
            Some((d, x, y, ratios))
        })
        .collect();

    let mut by_order = vec![0.0f64; m + 1];
    let mut worst: Option<PairWorst> = None;
    for (_, x, y, ratios) in &rows {
        for (kidx, &r) in ratios.iter().enumerate() {
            let o = jet.indices[kidx].order() as usize;
            by_order[o] = by_order[o].max(r);
            worst = better(worst, Some(PairWorst { ratio: r, x: *x, y: *y, kidx }));
        }
    }
    let multiscale = (0..3)
        .map(|t| {
            let dt = delta / f64::from(1u32 << t);
            let sel: Vec<_> = rows.iter().filter(|r| r.0 < dt).collect();
            let w = sel
                .iter()
                .flat_map(|r| r.3.iter().copied())
                .fold(0.0f64, f64::max);
            ScaleEntry {
                delta: dt,
                pairs: sel.len(),
                worst_ratio: w,
            }
        })
        .collect();
    let worst_ratio = worst.map_or(0.0, |w| w.ratio);
    Ok(WhitneyReport {
        eps,
        delta,
        worst_ratio_by_order: by_order,
        worst_ratio,
        worst_pair: worst.map(|w| (w.x, w.y)),
        worst_k: worst.map(|w| jet.indices[w.kidx].exps().to_vec()),
        pairs_checked: rows.len(),
        multiscale,
        passed: worst_ratio <= eps,
    })
}

/// Builds a jet of order `m` from central finite differences of `f` with step `h`.
pub fn jet_from_function(
    f: &dyn VectorFunction,
    level: u32,
    arity: usize,
    field: Field,
    points: Vec<Vec<f64>>,
    m: u32,
    h: f64,
) -> Result<WhitneyJet> {
    let mut jet = WhitneyJet::new(level, arity, m, field, points)?;
    if f.input_dim() != jet.dim() || f.output_dim() != jet.channels() {
        return usage("function shape does not match the jet");
    }
    for p in 0..jet.len() {
        for k in jet.indices.clone() {
            let v = finite_diff(f, &jet.points[p].clone(), &k, h)?;
            jet.set_value(p, &k, &v)?;
        }
    }
    Ok(jet)
}

/// Builds a jet from exact derivative values `deriv(k, x)`.
pub fn jet_from_derivatives(
    level: u32,
    arity: usize,
    field: Field,
    points: Vec<Vec<f64>>,
    m: u32,
    deriv: impl Fn(&MultiIndex, &[f64]) -> Vec<f64>,
) -> Result<WhitneyJet> {
    let mut jet = WhitneyJet::new(level, arity, m, field, points)?;
    for p in 0..jet.len() {
        for k in jet.indices.clone() {
            let v = deriv(&k, &jet.points[p].clone());
            jet.set_value(p, &k, &v)?;
        }
    }
    Ok(jet)
}

#[derive(Serialize, Deserialize)]
struct JetFileValue {
    point: usize,
    k: Vec<u32>,
    value: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JetFile {
    r: u32,
    l: usize,
    m: u32,
    field: Field,
    points: Vec<Vec<f64>>,
    values: Vec<JetFileValue>,
}

impl WhitneyJet {
    /// Parses the JSON jet format. Entries not listed are zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: JetFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("jet JSON line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let mut jet = Self::new(file.r, file.l, file.m, file.field, file.points)?;
        for (i, v) in file.values.iter().enumerate() {
            let k = MultiIndex::new(v.k.clone())?;
            jet.set_value(v.point, &k, &v.value).map_err(|e| Error::Parse {
                context: format!("values[{i}]"),
                message: e.to_string(),
            })?;
        }
        Ok(jet)
    }

    pub fn to_json(&self) -> String {
        let mut values = Vec::new();
        for p in 0..self.len() {
            for (idx, k) in self.indices.iter().enumerate() {
                values.push(JetFileValue {
                    point: p,
                    k: k.exps().to_vec(),
                    value: self.value_at(p, idx).to_vec(),
                });
            }
        }
        let file = JetFile {
            r: self.level,
            l: self.arity,
            m: self.order,
            field: self.field,
            points: self.points.clone(),
            values,
        };
        serde_json::to_string_pretty(&file).expect("jet serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::scalar_fn;

    #[test]
    fn enumeration_counts_and_order() {
        let ks = MultiIndex::enumerate(4, 2).unwrap();
        assert_eq!(ks.len(), 15);
        assert!(ks.windows(2).all(|w| w[0].order() <= w[1].order()));
        assert_eq!(ks[0], MultiIndex::zero(4));
        assert!(MultiIndex::enumerate(4, 13).is_err());
        assert!(MultiIndex::new(vec![7, 6]).is_err());
        assert_eq!(MultiIndex::new(vec![3, 2, 0]).unwrap().factorial(), 12.0);
    }

    #[test]
    fn monomial_examples() {
        let u = [2.0, 0.5, -1.0, 3.0];
        assert_eq!(monomial(&u, &MultiIndex::zero(4)), 1.0);
        assert_eq!(monomial(&u, &MultiIndex::new(vec![3, 0, 0, 0]).unwrap()), 8.0);
    }

    fn quadratic_jet(points: Vec<Vec<f64>>) -> WhitneyJet {
        // q(u) = u_0^2
        jet_from_derivatives(2, 1, Field::Real, points, 2, |k, x| {
            let mut v = vec![0.0; 4];
            v[0] = match k.exps() {
                [0, 0, 0, 0] => x[0] * x[0],
                [1, 0, 0, 0] => 2.0 * x[0],
                [2, 0, 0, 0] => 2.0,
                _ => 0.0,
            };
            v
        })
        .unwrap()
    }

    #[test]
    fn taylor_field_reproduces_quadratic() {
        let jet = quadratic_jet(vec![vec![0.5, 1.0, 0.0, -1.0], vec![-2.0, 0.0, 0.3, 0.0]]);
        let z = [1.7, -0.4, 2.0, 0.1];
        for y in 0..2 {
            let v = taylor_field(&jet, &MultiIndex::zero(4), &z, y).unwrap();
            assert!((v[0] - 1.7 * 1.7).abs() < 1e-14);
            let at_y = taylor_field(&jet, &MultiIndex::zero(4), jet.point(y), y).unwrap();
            assert_eq!(at_y, jet.value(y, &MultiIndex::zero(4)).unwrap());
        }
        assert!(taylor_field(&jet, &MultiIndex::zero(4), &z, 5).is_err());
        let r = remainder(&jet, &MultiIndex::unit(4, 0), 0, 1).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn abs_jet_fails_and_polynomial_passes() {
        let pts: Vec<Vec<f64>> = [-0.2, -0.1, 0.1, 0.2].iter().map(|&t| vec![t, 0.0, 0.0, 0.0]).collect();
        let bad = jet_from_derivatives(2, 1, Field::Real, pts.clone(), 1, |k, x| {
            let mut v = vec![0.0; 4];
            v[0] = match k.exps() {
                [0, 0, 0, 0] => x[0].abs(),
                [1, 0, 0, 0] => x[0].signum(),
                _ => 0.0,
            };
            v
        })
        .unwrap();
        let rep = whitney_check(&bad, 0.1, 1.0).unwrap();
        assert!(!rep.passed);
        assert!(rep.worst_ratio >= 1.0);
        let good = quadratic_jet(pts);
        let rep = whitney_check(&good, 1e-10, 1.0).unwrap();
        assert!(rep.passed, "{:?}", rep.worst_ratio);
        assert!(whitney_check(&good, 0.0, 1.0).is_err());
        assert_eq!(rep.multiscale.len(), 3);
    }

    #[test]
    fn finite_difference_jets() {
        let pts = vec![vec![0.2, -0.1, 0.3, 0.0]];
        let c = scalar_fn(4, |_| 2.5);
        let c4 = crate::numerics::FnVector::new(4, 4, |_u: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            out[0] = 2.5;
        });
        let _ = c;
        let jet = jet_from_function(&c4, 2, 1, Field::Real, pts.clone(), 2, 1e-3).unwrap();
        assert_eq!(jet.value(0, &MultiIndex::zero(4)).unwrap()[0], 2.5);
        for k in jet.indices().iter().skip(1) {
            let v = jet.value(0, k).unwrap()[0];
            assert!(v.abs() < 1e-10 / 1e-3f64.powi(k.order() as i32));
        }
        let lin = crate::numerics::FnVector::new(4, 4, |u: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            out[0] = u[0];
        });
        let jet = jet_from_function(&lin, 2, 1, Field::Real, pts, 1, 1e-3).unwrap();
        assert!((jet.value(0, &MultiIndex::unit(4, 0)).unwrap()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let jet = quadratic_jet(vec![vec![0.5, 1.0, 0.0, -1.0]]);
        let back = WhitneyJet::from_json(&jet.to_json()).unwrap();
        assert_eq!(back.to_json(), jet.to_json());
        let err = WhitneyJet::from_json("{\"r\": 2,").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let bad_len = r#"{"r":2,"l":1,"m":0,"field":"R","points":[[0,0,0,0]],
            "values":[{"point":0,"k":[0,0,0,0],"value":[1,2]}]}"#;
        assert!(matches!(WhitneyJet::from_json(bad_len), Err(Error::Parse { .. })));
    }

    #[test]
    fn point_orders_zero_high_entries() {
        let mut jet = quadratic_jet(vec![vec![1.0, 0.0, 0.0, 0.0]]);
        jet.set_point_order(0, 1).unwrap();
        let k2 = MultiIndex::new(vec![2, 0, 0, 0]).unwrap();
        assert_eq!(jet.value(0, &k2).unwrap()[0], 0.0);
        assert_eq!(jet.value(0, &MultiIndex::unit(4, 0)).unwrap()[0], 2.0);
    }
}
