//! Dyadic cube decompositions of the complement of a closed set.
//!
//! A cube of level `s` has rib `2^-s` and integer corner `k` (its low corner is
//! `k 2^-s`). It is admitted when its distance to the closed set is at least
//! `c 2^-s` with `c = 6 sqrt(l) 2^(r-1)`. The decomposition keeps admitted cubes
//! whose parent is not admitted, starting from the unit cubes inside the bounds.
//!
//! Vertices are keyed by integer coordinates at resolution `2^-s_max`. Each vertex
//! carries `t`, the largest rib among kept cubes having it as a corner, and an
//! anchor, the nearest point of the anchor cloud.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::sets::{euclid, ClosedSet};

/// Largest supported refinement level.
pub const S_MAX_LIMIT: u32 = 14;

/// `6 sqrt(l) 2^(r-1)`.
pub fn admission_constant(level: u32, arity: usize) -> f64 {
    6.0 * (arity as f64).sqrt() * 2f64.powi(level as i32 - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicCube {
    pub level: u32,
    pub corner: Vec<i64>,
}

impl DyadicCube {
    pub fn rib(&self) -> f64 {
        2f64.powi(-(self.level as i32))
    }

    pub fn lo(&self) -> Vec<f64> {
        let r = self.rib();
        self.corner.iter().map(|&k| k as f64 * r).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        let r = self.rib();
        self.corner.iter().map(|&k| (k + 1) as f64 * r).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let r = self.rib();
        self.corner.iter().map(|&k| (k as f64 + 0.5) * r).collect()
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            corner: self.corner.iter().map(|k| k.div_euclid(2)).collect(),
        })
    }

    pub fn children(&self) -> Vec<Self> {
        let n = self.corner.len();
        (0..1usize << n)
            .map(|bits| Self {
                level: self.level + 1,
                corner: self
                    .corner
                    .iter()
                    .enumerate()
                    .map(|(i, k)| 2 * k + ((bits >> i) & 1) as i64)
                    .collect(),
            })
            .collect()
    }

    /// The level-`level` cube containing `z` (low corner rounding).
    pub fn containing(z: &[f64], level: u32) -> Self {
        let scale = 2f64.powi(level as i32);
        Self {
            level,
            corner: z.iter().map(|x| (x * scale).floor() as i64).collect(),
        }
    }
}

/// A vertex of the decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    /// Integer coordinates at resolution `2^-s_max`.
    pub key: Vec<i64>,
    pub coords: Vec<f64>,
    /// Largest adjacent kept rib; the bump around the vertex lives on `|z - v|_inf < t`.
    pub t: f64,
    /// Index of the nearest anchor point.
    pub anchor: usize,
}

#[derive(Debug)]
enum Storage {
    Explicit {
        levels: Vec<Vec<DyadicCube>>,
        vertices: HashMap<Vec<i64>, Vertex>,
        boundary_layer: Vec<DyadicCube>,
    },
    Lazy {
        memo: Mutex<HashMap<Vec<i64>, Option<Vertex>>>,
    },
}

/// Configuration shared by both construction routes.
#[derive(Clone, Debug)]
pub struct CoverSpec {
    pub level: u32,
    pub arity: usize,
    /// Integer bounds of the level-0 grid, per coordinate.
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub s_max: u32,
    /// Set whose neighbourhood is refined (`A ∪ R`).
    pub set: ClosedSet,
    /// Points that vertices anchor to.
    pub anchors: Vec<Vec<f64>>,
    /// Stage index recorded in exports.
    pub stage: usize,
}

/// Dyadic Whitney cubes for one closed set with vertex, rib and anchor data.
#[derive(Debug)]
pub struct CubeCover {
    spec: CoverSpec,
    n: usize,
    c: f64,
    storage: Storage,
}

/// Outcome of locating a point in the decomposition.
#[derive(Clone, Debug, PartialEq)]
pub enum Location {
    /// Inside the kept cube.
    Covered(DyadicCube),
    /// Within the unresolved layer next to the set at `s_max`, or on the set.
    BoundaryLayer,
    /// Outside the bounds.
    Outside,
}

impl CubeCover {
    fn check(spec: &CoverSpec) -> Result<usize> {
        let n = spec.arity << spec.level;
        if spec.s_max > S_MAX_LIMIT {
            return usage(format!("s_max {} exceeds {S_MAX_LIMIT}", spec.s_max));
        }
        if spec.lo.len() != n || spec.hi.len() != n || spec.set.dim() != n {
            return usage(format!("bounds and set must have dimension {n}"));
        }
        if spec.lo.iter().zip(&spec.hi).any(|(a, b)| a >= b) {
            return usage("bounds must have lo < hi");
        }
        if spec.anchors.is_empty() || spec.anchors.iter().any(|a| a.len() != n) {
            return usage("anchor cloud must be nonempty with matching dimension");
        }
        Ok(n)
    }

    /// A cover whose cubes and vertices are computed on demand and memoized.
    pub fn lazy(spec: CoverSpec) -> Result<Self> {
        let n = Self::check(&spec)?;
        Ok(Self {
            c: admission_constant(spec.level, spec.arity),
            n,
            spec,
            storage: Storage::Lazy {
                memo: Mutex::new(HashMap::new()),
            },
        })
    }

    /// Builds every kept cube and vertex. Fails when more than `max_cubes` are needed.
    pub fn build(spec: CoverSpec, max_cubes: usize) -> Result<Self> {
        let n = Self::check(&spec)?;
        let mut cover = Self {
            c: admission_constant(spec.level, spec.arity),
            n,
            spec,
            storage: Storage::Lazy {
                memo: Mutex::new(HashMap::new()),
            },
        };
        let mut levels: Vec<Vec<DyadicCube>> = Vec::new();
        let mut boundary_layer = Vec::new();
        let mut frontier = cover.level0_cubes();
        let mut total = 0usize;
        for s in 0..=cover.spec.s_max {
            let mut kept = Vec::new();
            let mut next = Vec::new();
            for q in frontier {
                if cover.admitted(&q) {
                    kept.push(q);
                } else if s < cover.spec.s_max {
                    next.extend(q.children());
                } else {
                    boundary_layer.push(q);
                }
            }
            total += kept.len() + next.len();
            if total > max_cubes {
                return usage(format!(
                    "decomposition needs more than {max_cubes} cubes; use the lazy cover"
                ));
            }
            kept.sort();
            levels.push(kept);
            frontier = next;
        }
        boundary_layer.sort();
        let mut vertices: HashMap<Vec<i64>, Vertex> = HashMap::new();
        for q in levels.iter().flatten() {
            let t = q.rib();
            let shift = cover.spec.s_max - q.level;
            for bits in 0..1usize << n {
                let key: Vec<i64> = q
                    .corner
                    .iter()
                    .enumerate()
                    .map(|(i, k)| (k + ((bits >> i) & 1) as i64) << shift)
                    .collect();
                match vertices.get_mut(&key) {
                    Some(v) if v.t >= t => {}
                    Some(v) => v.t = t,
                    None => {
                        let coords = cover.key_coords(&key);
                        let anchor = cover.nearest_anchor(&coords);
                        vertices.insert(key.clone(), Vertex { key, coords, t, anchor });
                    }
                }
            }
        }
        cover.storage = Storage::Explicit {
            levels,
            vertices,
            boundary_layer,
        };
        Ok(cover)
    }

    pub fn spec(&self) -> &CoverSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn admission_constant(&self) -> f64 {
        self.c
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.storage, Storage::Explicit { .. })
    }

    fn level0_cubes(&self) -> Vec<DyadicCube> {
        let mut out = Vec::new();
        let mut idx = self.spec.lo.clone();
        loop {
            out.push(DyadicCube {
                level: 0,
                corner: idx.clone(),
            });
            let mut axis = self.n;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < self.spec.hi[axis] {
                    break;
                }
                idx[axis] = self.spec.lo[axis];
            }
        }
    }

    fn in_bounds(&self, q: &DyadicCube) -> bool {
        let shift = q.level;
        q.corner
            .iter()
            .zip(self.spec.lo.iter().zip(&self.spec.hi))
            .all(|(&k, (&lo, &hi))| (k >> shift) >= lo && (k >> shift) < hi)
    }

    /// Distance admission `d(Q, set) >= c 2^-s`, with `1e-12` slack.
    pub fn admitted(&self, q: &DyadicCube) -> bool {
        let d = self.spec.set.distance_to_box(&q.lo(), &q.hi());
        d >= self.c * q.rib() - 1e-12
    }

    /// Whether `q` is one of the kept cubes.
    pub fn is_kept(&self, q: &DyadicCube) -> bool {
        q.level <= self.spec.s_max
            && self.in_bounds(q)
            && self.admitted(q)
            && q.parent().map_or(true, |p| !self.admitted(&p))
    }

    pub fn key_coords(&self, key: &[i64]) -> Vec<f64> {
        let r = 2f64.powi(-(self.spec.s_max as i32));
        key.iter().map(|&k| k as f64 * r).collect()
    }

    fn nearest_anchor(&self, z: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.spec.anchors.iter().enumerate() {
            let d = euclid(a, z);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Nearest and second-nearest anchor distances with the nearest index.
    fn two_nearest(&self, z: &[f64]) -> (usize, f64, f64) {
        let (mut i1, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
        for (i, a) in self.spec.anchors.iter().enumerate() {
            let d = euclid(a, z);
            if d < d1 {
                d2 = d1;
                d1 = d;
                i1 = i;
            } else if d < d2 {
                d2 = d;
            }
        }
        (i1, d1, d2)
    }

    /// Computes a vertex from scratch; `None` when no kept cube has it as a corner.
    fn compute_vertex(&self, key: &[i64]) -> Option<Vertex> {
        let s_max = self.spec.s_max;
        let coords = self.key_coords(key);
        let dv = self.spec.set.distance(&coords);
        if dv <= 0.0 {
            return None;
        }
        let tz = key.iter().map(|k| if *k == 0 { 64 } else { k.trailing_zeros() }).min()?;
        let s_min = s_max.saturating_sub(tz);
        let (s_lo, s_hi) = self.level_window(dv, self.c, 2.0 * (self.c + (self.n as f64).sqrt()));
        let mut t = 0.0f64;
        for s in s_lo.max(s_min)..=s_hi {
            let shift = s_max - s;
            let base: Vec<i64> = key.iter().map(|k| k >> shift).collect();
            for bits in 0..1usize << self.n {
                let q = DyadicCube {
                    level: s,
                    corner: base
                        .iter()
                        .enumerate()
                        .map(|(i, b)| b - ((bits >> i) & 1) as i64)
                        .collect(),
                };
                if self.is_kept(&q) {
                    t = t.max(q.rib());
                }
            }
        }
        (t > 0.0).then(|| Vertex {
            key: key.to_vec(),
            anchor: self.nearest_anchor(&coords),
            coords,
            t,
        })
    }

    /// Levels `s` with `2^-s` in `[d / hi_factor, d / lo_factor]`, widened by one, clamped.
    fn level_window(&self, d: f64, lo_factor: f64, hi_factor: f64) -> (u32, u32) {
        let fine = (hi_factor / d).log2().ceil() + 1.0;
        let coarse = (lo_factor / d).log2().floor() - 1.0;
        let clamp = |x: f64| x.clamp(0.0, self.spec.s_max as f64) as u32;
        (clamp(coarse), clamp(fine))
    }

    /// The vertex with the given key, if it belongs to the decomposition.
    pub fn vertex(&self, key: &[i64]) -> Option<Vertex> {
        match &self.storage {
            Storage::Explicit { vertices, .. } => vertices.get(key).cloned(),
            Storage::Lazy { memo } => {
                if let Some(v) = memo.lock().expect("memo lock").get(key) {
                    return v.clone();
                }
                let v = self.compute_vertex(key);
                let mut m = memo.lock().expect("memo lock");
                if m.len() > 4_000_000 {
                    m.clear();
                }
                m.insert(key.to_vec(), v.clone());
                v
            }
        }
    }

    /// Finds the kept cube containing `z`.
    pub fn locate(&self, z: &[f64]) -> Location {
        if z.len() != self.n {
            return Location::Outside;
        }
        let inside = z
            .iter()
            .zip(self.spec.lo.iter().zip(&self.spec.hi))
            .all(|(x, (&lo, &hi))| *x >= lo as f64 && *x <= hi as f64);
        if !inside {
            return Location::Outside;
        }
        for s in 0..=self.spec.s_max {
            let mut q = DyadicCube::containing(z, s);
            // Points on the upper bound face belong to the last cube.
            for (i, k) in q.corner.iter_mut().enumerate() {
                let top = (self.spec.hi[i] << s) - 1;
                *k = (*k).min(top);
            }
            if self.admitted(&q) {
                return Location::Covered(q);
            }
        }
        Location::BoundaryLayer
    }

    /// Vertices whose open support box `|z - v|_inf < t_v` contains `z`.
    pub fn vertices_near(&self, z: &[f64]) -> Vec<Vertex> {
        let dz = self.spec.set.distance(z);
        if dz <= 0.0 {
            return Vec::new();
        }
        let sqrt_n = (self.n as f64).sqrt();
        let lo_factor = (self.c - sqrt_n).max(1e-3);
        let hi_factor = 2.0 * self.c + 3.0 * sqrt_n;
        let (s_lo, s_hi) = self.level_window(dz, lo_factor, hi_factor);
        let s_max = self.spec.s_max;
        let mut out = Vec::new();
        for s in s_lo..=s_hi {
            let scale = 2f64.powi(s as i32);
            let rib = 1.0 / scale;
            // Per axis: lattice values within one rib (open) of z.
            let axes: Vec<Vec<i64>> = z
                .iter()
                .map(|x| {
                    let f = (x * scale).floor() as i64;
                    let mut c = vec![f];
                    if (f as f64) < x * scale {
                        c.push(f + 1);
                    }
                    c
                })
                .collect();
            let mut idx = vec![0usize; self.n];
            'outer: loop {
                let key: Vec<i64> = axes
                    .iter()
                    .zip(&idx)
                    .map(|(a, &i)| a[i] << (s_max - s))
                    .collect();
                if let Some(v) = self.vertex(&key) {
                    if v.t == rib {
                        let linf = v
                            .coords
                            .iter()
                            .zip(z)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0f64, f64::max);
                        if linf < v.t {
                            out.push(v);
                        }
                    }
                }
                let mut axis = self.n;
                loop {
                    if axis == 0 {
                        break 'outer;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < axes[axis].len() {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
        }
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }

    /// When every vertex that can matter at `z` anchors to the same point, returns it.
    pub fn unique_anchor(&self, z: &[f64]) -> Option<usize> {
        let dz = self.spec.set.distance(z);
        let sqrt_n = (self.n as f64).sqrt();
        if self.c <= sqrt_n || dz <= 0.0 {
            return None;
        }
        let reach = sqrt_n * dz / (self.c - sqrt_n);
        let (i, d1, d2) = self.two_nearest(z);
        (d2 - d1 > 2.0 * reach * (1.0 + 1e-9)).then_some(i)
    }

    /// Kept cubes by level (explicit covers only).
    pub fn levels(&self) -> Option<&[Vec<DyadicCube>]> {
        match &self.storage {
            Storage::Explicit { levels, .. } => Some(levels),
            Storage::Lazy { .. } => None,
        }
    }

    /// Unresolved cubes at `s_max` (explicit covers only).
    pub fn boundary_layer(&self) -> Option<&[DyadicCube]> {
        match &self.storage {
            Storage::Explicit { boundary_layer, .. } => Some(boundary_layer),
            Storage::Lazy { .. } => None,
        }
    }

    /// All vertices sorted by key (explicit covers only).
    pub fn vertex_list(&self) -> Option<Vec<Vertex>> {
        match &self.storage {
            Storage::Explicit { vertices, .. } => {
                let mut v: Vec<Vertex> = vertices.values().cloned().collect();
                v.sort_by(|a, b| a.key.cmp(&b.key));
                Some(v)
            }
            Storage::Lazy { .. } => None,
        }
    }

    /// Cover multiplicity: the largest number of vertex supports meeting one kept
    /// cube. Exact for explicit covers; for lazy covers the largest number of
    /// supports containing one of `samples` random points in the bounds.
    pub fn multiplicity(&self, samples: usize, rng: &mut impl Rng) -> usize {
        match &self.storage {
            Storage::Explicit { levels, vertices, .. } => {
                let tmax = vertices.values().map(|v| v.t).fold(0.0f64, f64::max);
                if tmax == 0.0 {
                    return 0;
                }
                let bucket = 2.0 * tmax;
                let cell = |x: &[f64]| -> Vec<i64> { x.iter().map(|c| (c / bucket).floor() as i64).collect() };
                let mut grid: HashMap<Vec<i64>, Vec<&Vertex>> = HashMap::new();
                for v in vertices.values() {
                    grid.entry(cell(&v.coords)).or_default().push(v);
                }
                let mut chi = 0;
                for q in levels.iter().flatten() {
                    let c = q.center();
                    let half = q.rib() / 2.0;
                    let base = cell(&c);
                    let mut count = 0;
                    for bits in 0..3usize.pow(self.n as u32) {
                        let mut b = base.clone();
                        let mut code = bits;
                        for x in b.iter_mut() {
                            *x += (code % 3) as i64 - 1;
                            code /= 3;
                        }
                        for v in grid.get(&b).into_iter().flatten() {
                            let linf = v
                                .coords
                                .iter()
                                .zip(&c)
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0f64, f64::max);
                            if linf < v.t + half {
                                count += 1;
                            }
                        }
                    }
                    chi = chi.max(count);
                }
                chi
            }
            Storage::Lazy { .. } => (0..samples)
                .map(|_| {
                    let z: Vec<f64> = self
                        .spec
                        .lo
                        .iter()
                        .zip(&self.spec.hi)
                        .map(|(&a, &b)| rng.gen_range(a as f64..b as f64))
                        .collect();
                    self.vertices_near(&z).len()
                })
                .max()
                .unwrap_or(0),
        }
    }

    /// JSON export of an explicit cover.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Level<'a> {
            level: usize,
            rib: f64,
            cubes: Vec<&'a [i64]>,
        }
        #[derive(Serialize)]
        struct Export<'a> {
            stage: usize,
            dim: usize,
            s_max: u32,
            admission_constant: f64,
            levels: Vec<Level<'a>>,
            vertices: Vec<Vertex>,
            anchors: &'a [Vec<f64>],
            boundary_layer: Vec<&'a [i64]>,
        }
        let (Some(levels), Some(vertices), Some(layer)) =
            (self.levels(), self.vertex_list(), self.boundary_layer())
        else {
            return usage("only explicit covers can be exported");
        };
        let export = Export {
            stage: self.spec.stage,
            dim: self.n,
            s_max: self.spec.s_max,
            admission_constant: self.c,
            levels: levels
                .iter()
                .enumerate()
                .map(|(s, cubes)| Level {
                    level: s,
                    rib: 2f64.powi(-(s as i32)),
                    cubes: cubes.iter().map(|q| q.corner.as_slice()).collect(),
                })
                .collect(),
            vertices,
            anchors: &self.spec.anchors,
            boundary_layer: layer.iter().map(|q| q.corner.as_slice()).collect(),
        };
        Ok(serde_json::to_string_pretty(&export).expect("cover serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin_spec(s_max: u32) -> CoverSpec {
        CoverSpec {
            level: 1,
            arity: 1,
            lo: vec![-2, -2],
            hi: vec![2, 2],
            s_max,
            set: ClosedSet::points(vec![vec![0.0, 0.0]]).unwrap(),
            anchors: vec![vec![0.0, 0.0]],
            stage: 0,
        }
    }

    #[test]
    fn far_set_admits_every_unit_cube() {
        let mut spec = origin_spec(4);
        spec.set = ClosedSet::points(vec![vec![100.0, 100.0]]).unwrap();
        let cover = CubeCover::build(spec, 10_000).unwrap();
        assert_eq!(cover.levels().unwrap()[0].len(), 16);
        assert!(cover.levels().unwrap()[1..].iter().all(|l| l.is_empty()));
    }

    #[test]
    fn kept_cubes_match_exhaustive_enumeration() {
        let cover = CubeCover::build(origin_spec(6), 1_000_000).unwrap();
        let c = admission_constant(1, 1);
        for (s, kept) in cover.levels().unwrap().iter().enumerate() {
            let m = 4i64 << s;
            let mut brute = 0;
            for a in -(m / 2)..(m / 2) {
                for b in -(m / 2)..(m / 2) {
                    let q = DyadicCube { level: s as u32, corner: vec![a, b] };
                    let adm = |q: &DyadicCube| {
                        ClosedSet::points(vec![vec![0.0, 0.0]]).unwrap().distance_to_box(&q.lo(), &q.hi())
                            >= c * q.rib() - 1e-12
                    };
                    if adm(&q) && q.parent().map_or(true, |p| !adm(&p)) {
                        brute += 1;
                    }
                }
            }
            assert_eq!(kept.len(), brute, "level {s}");
            for q in kept {
                assert!(q.parent().map_or(true, |p| !cover.admitted(&p)));
            }
        }
        assert!(!cover.boundary_layer().unwrap().is_empty());
    }

    #[test]
    fn lazy_vertices_agree_with_explicit() {
        let explicit = CubeCover::build(origin_spec(6), 1_000_000).unwrap();
        let lazy = CubeCover::lazy(origin_spec(6)).unwrap();
        for v in explicit.vertex_list().unwrap() {
            assert_eq!(lazy.vertex(&v.key).as_ref(), Some(&v));
        }
        for z in [[0.7, -1.3], [0.05, 0.2], [-1.9, 1.99], [0.3, 0.3]] {
            let a: Vec<_> = explicit.vertices_near(&z).into_iter().map(|v| v.key).collect();
            let b: Vec<_> = lazy.vertices_near(&z).into_iter().map(|v| v.key).collect();
            assert_eq!(a, b);
            assert!(!a.is_empty());
        }
    }
}
