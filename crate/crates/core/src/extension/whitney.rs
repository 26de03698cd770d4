//! The bump partition of unity on a cube cover and the Whitney extension
//! `g(z) = sum φ_v(z) ψ_{m;0}(z; x_v)`.

use std::sync::Arc;

use super::bump::{log_bump, Theta};
use super::cubes::{CubeCover, Location, Vertex};
use crate::error::{usage, Error, Result};
use crate::jets::{taylor_field_into, WhitneyJet};
use crate::numerics::VectorFunction;
use crate::sets::euclid;

/// Within this fraction of `t` from a vertex the partition is pinned to that vertex.
pub const VERTEX_SNAP: f64 = 1e-3;

fn local(v: &Vertex, z: &[f64]) -> Vec<f64> {
    z.iter().zip(&v.coords).map(|(a, b)| (a - b) / v.t).collect()
}

/// `η_v(z) = Θ((z - v) / t_v)`.
pub fn eta(v: &Vertex, z: &[f64]) -> f64 {
    Theta(&local(v, z))
}

/// Partition weights at `z`, one per vertex whose support contains `z`.
/// Empty when no support contains `z`.
pub fn partition(cover: &CubeCover, z: &[f64]) -> Vec<(Vertex, f64)> {
    let verts = cover.vertices_near(z);
    if let Some(i) = verts
        .iter()
        .position(|v| euclid(&v.coords, z) < VERTEX_SNAP * v.t)
    {
        return verts
            .into_iter()
            .enumerate()
            .map(|(j, v)| (v, if j == i { 1.0 } else { 0.0 }))
            .collect();
    }
    let logs: Vec<f64> = verts.iter().map(|v| log_bump(&local(v, z))).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Vec::new();
    }
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    verts.into_iter().zip(w).map(|(v, wi)| (v, wi / total)).collect()
}

/// `φ_v(z)` for the vertex with the given key (0 if its support misses `z`).
pub fn phi(cover: &CubeCover, key: &[i64], z: &[f64]) -> f64 {
    partition(cover, z)
        .into_iter()
        .find(|(v, _)| v.key == key)
        .map_or(0.0, |(_, w)| w)
}

/// How an extension value was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Branch {
    /// `z` is a jet point; the prescribed value is returned.
    OnSet,
    /// All relevant vertices anchor to one point; its Taylor field is returned.
    SingleAnchor,
    /// Full partition-of-unity sum.
    WhitneySum,
    /// Unresolved layer next to the set; Taylor field of the nearest point.
    BoundaryFallback,
    /// Value produced by a smoothing stage.
    Mollified,
}

/// The Whitney extension of a jet over a cube cover whose anchors are the jet points.
#[derive(Clone)]
pub struct WhitneyExtension {
    jet: Arc<WhitneyJet>,
    cover: Arc<CubeCover>,
    shortcut: bool,
}

impl WhitneyExtension {
    pub fn new(jet: Arc<WhitneyJet>, cover: Arc<CubeCover>) -> Result<Self> {
        if cover.spec().anchors.len() != jet.len() || cover.dim() != jet.dim() {
            return usage("cover anchors must be the jet points");
        }
        Ok(Self {
            jet,
            cover,
            shortcut: true,
        })
    }

    /// Disables the single-anchor shortcut so every value goes through the partition.
    pub fn without_shortcut(mut self) -> Self {
        self.shortcut = false;
        self
    }

    pub fn jet(&self) -> &WhitneyJet {
        &self.jet
    }

    pub fn cover(&self) -> &CubeCover {
        &self.cover
    }

    /// Value at `z` and the branch that produced it.
    pub fn eval_with_branch(&self, z: &[f64], out: &mut [f64]) -> Result<Branch> {
        extend_at(&self.jet, &self.cover, z, out, self.shortcut)
    }
}

fn extend_at(jet: &WhitneyJet, cover: &CubeCover, z: &[f64], out: &mut [f64], shortcut: bool) -> Result<Branch> {
    if z.len() != jet.dim() {
        return usage(format!("point needs {} coordinates", jet.dim()));
    }
    let zero = &jet.indices()[0];
    if let Some(p) = jet.points().iter().position(|x| x.as_slice() == z) {
        out.copy_from_slice(jet.value_at(p, 0));
        return Ok(Branch::OnSet);
    }
    match cover.locate(z) {
        Location::Outside => {
            let hint = z
                .iter()
                .zip(cover.spec().lo.iter().zip(&cover.spec().hi))
                .map(|(x, (&lo, &hi))| x.clamp(lo as f64, hi as f64))
                .collect();
            return Err(Error::CoverageGap {
                point: z.to_vec(),
                hint,
            });
        }
        Location::BoundaryLayer => {
            taylor_field_into(jet, zero, z, nearest(jet, z), out)?;
            return Ok(Branch::BoundaryFallback);
        }
        Location::Covered(_) => {}
    }
    if shortcut {
        if let Some(p) = cover.unique_anchor(z) {
            taylor_field_into(jet, zero, z, p, out)?;
            return Ok(Branch::SingleAnchor);
        }
    }
    let parts = partition(cover, z);
    if parts.is_empty() {
        return Err(Error::Internal(format!("covered point {z:?} has no vertex support")));
    }
    out.fill(0.0);
    let mut buf = vec![0.0; out.len()];
    for (v, w) in parts {
        if w == 0.0 {
            continue;
        }
        taylor_field_into(jet, zero, z, v.anchor, &mut buf)?;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o += w * b;
        }
    }
    Ok(Branch::WhitneySum)
}

fn nearest(jet: &WhitneyJet, z: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, p) in jet.points().iter().enumerate() {
        let d = euclid(p, z);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

impl VectorFunction for WhitneyExtension {
    fn input_dim(&self) -> usize {
        self.jet.dim()
    }
    fn output_dim(&self) -> usize {
        self.jet.channels()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_with_branch(u, out).map(|_| ())
    }
}

/// Whitney extension at one point, always through the partition of unity.
pub fn whitney_extend(jet: &WhitneyJet, cover: &CubeCover, z: &[f64]) -> Result<Vec<f64>> {
    if cover.spec().anchors.len() != jet.len() {
        return usage("cover anchors must be the jet points");
    }
    let mut out = vec![0.0; jet.channels()];
    extend_at(jet, cover, z, &mut out, false)?;
    Ok(out)
}
