//! Finitely described closed sets and exact distance queries.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return usage("box corners must have equal, positive length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return usage("box needs lo <= hi in every coordinate");
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(center: &[f64], half: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn distance_to_point(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (a, b))| {
                let g = (a - x).max(x - b).max(0.0);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance_to_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(lo.iter().zip(hi))
            .map(|((a0, a1), (b0, b1))| {
                let g = (b0 - a1).max(a0 - b1).max(0.0);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `r` such that the closed `r`-neighbourhood (L-infinity) of `z` stays in the box.
    pub fn inner_margin(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (a, b))| (x - a).min(b - x))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn point_box_distance(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    p.iter()
        .zip(lo.iter().zip(hi))
        .map(|(x, (a, b))| {
            let g = (a - x).max(x - b).max(0.0);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Closed subsets of `R^n` with exact distance functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedSet {
    Points { points: Vec<Vec<f64>> },
    Boxes { boxes: Vec<AxisBox> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl ClosedSet {
    pub fn points(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return usage("point cloud is empty");
        };
        let n = first.len();
        if n == 0 || points.iter().any(|p| p.len() != n) {
            return usage("points must share a positive dimension");
        }
        Ok(Self::Points { points })
    }

    pub fn boxes(boxes: Vec<AxisBox>) -> Result<Self> {
        let Some(first) = boxes.first() else {
            return usage("box union is empty");
        };
        if boxes.iter().any(|b| b.dim() != first.dim()) {
            return usage("boxes must share a dimension");
        }
        Ok(Self::Boxes { boxes })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius >= 0.0) {
            return usage("ball needs a center and a nonnegative radius");
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Points { points } => points[0].len(),
            Self::Boxes { boxes } => boxes[0].dim(),
            Self::Ball { center, .. } => center.len(),
        }
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        match self {
            Self::Points { points } => points.iter().map(|p| euclid(p, z)).fold(f64::INFINITY, f64::min),
            Self::Boxes { boxes } => boxes
                .iter()
                .map(|b| b.distance_to_point(z))
                .fold(f64::INFINITY, f64::min),
            Self::Ball { center, radius } => (euclid(center, z) - radius).max(0.0),
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.distance(z) == 0.0
    }

    /// Distance between the set and the closed box `[lo, hi]`.
    pub fn distance_to_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            Self::Points { points } => points
                .iter()
                .map(|p| point_box_distance(p, lo, hi))
                .fold(f64::INFINITY, f64::min),
            Self::Boxes { boxes } => boxes
                .iter()
                .map(|b| b.distance_to_box(lo, hi))
                .fold(f64::INFINITY, f64::min),
            Self::Ball { center, radius } => (point_box_distance(center, lo, hi) - radius).max(0.0),
        }
    }

    /// Index of the nearest point and its distance, for point clouds.
    pub fn nearest_point(&self, z: &[f64]) -> Option<(usize, f64)> {
        match self {
            Self::Points { points } => points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, euclid(p, z)))
                .fold(None, |best: Option<(usize, f64)>, c| match best {
                    Some(b) if b.1 <= c.1 => Some(b),
                    _ => Some(c),
                }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let b = AxisBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(b.distance_to_point(&[2.0, 3.0]), 2f64.sqrt());
        assert_eq!(b.distance_to_point(&[0.5, 1.0]), 0.0);
        assert_eq!(b.distance_to_box(&[3.0, 0.5], &[4.0, 0.7]), 2.0);
        assert_eq!(b.inner_margin(&[0.25, 1.0]), 0.25);
        let s = ClosedSet::points(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.distance(&[3.0, 0.0]), 3.0);
        assert_eq!(s.nearest_point(&[2.0, 3.0]).unwrap().0, 1);
        assert_eq!(s.distance_to_box(&[1.0, 1.0], &[2.0, 2.0]), 2f64.sqrt());
        let ball = ClosedSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(ball.distance(&[0.0, 3.0]), 2.0);
        assert!(ball.contains(&[0.6, 0.0]));
        assert!(AxisBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(ClosedSet::points(vec![]).is_err());
    }
}
