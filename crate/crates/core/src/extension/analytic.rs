//! Extension of a jet that is smooth off the jet set: Whitney sum, then
//! layered Gaussian smoothing over distance shells of the set, with the jet's
//! values kept on the set.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cubes::{CoverSpec, CubeCover, Location};
use super::whitney::{partition, Branch, WhitneyExtension};
use crate::error::{usage, Error, Result};
use crate::jets::{taylor_field, whitney_check, MultiIndex, WhitneyJet, WhitneyReport};
use crate::mollifier::layered::{
    layered_approximate, Exhaustion, ExhaustionSpec, KappaSchedule, LayeredConfig, LayeredFunction, OrderBudget,
    StageDiagnostics, ValidationPolicy,
};
use crate::numerics::{finite_diff_richardson, VectorFunction};
use crate::sets::{euclid, ClosedSet};

/// A function built by one of the extension drivers.
pub trait Extension: VectorFunction + Send + Sync {
    /// Value at `z` and how it was produced.
    fn eval_with_provenance(&self, z: &[f64], out: &mut [f64]) -> Result<Branch>;
}

/// Sampled comparison of `∂^k F` against the Taylor field of the nearest jet point.
#[derive(Clone, Debug)]
pub struct RingSpec {
    pub distances: Vec<f64>,
    /// Jet points used as ring centers (the first `points` of the jet).
    pub points: usize,
    pub fd_step: f64,
    /// Largest `|k|` checked (capped by the jet order).
    pub max_order: u32,
}

#[derive(Clone, Debug)]
pub struct AnalyticConfig {
    pub eps: f64,
    pub delta: f64,
    /// Integer bounds of the cube cover; `None` uses the cloud's bounding box plus one unit.
    pub bounds: Option<(Vec<i64>, Vec<i64>)>,
    pub s_max: u32,
    /// Outer shell radius `d_1`; shells are `d_a = d_1 2^{1-a}`.
    pub shell_outer: f64,
    pub stages: usize,
    pub kappa: KappaSchedule,
    pub nodes_per_axis: usize,
    pub tolerances: Vec<f64>,
    pub validation: ValidationPolicy,
    pub validation_samples: usize,
    pub rings: Option<RingSpec>,
    pub partition_samples: usize,
    pub seed: u64,
}

impl AnalyticConfig {
    pub fn new(stages: usize, kappa: KappaSchedule) -> Self {
        Self {
            eps: 1e-2,
            delta: 1.0,
            bounds: None,
            s_max: 12,
            shell_outer: 0.8 / 3.0,
            stages,
            kappa,
            nodes_per_axis: 2,
            tolerances: vec![1e-2],
            validation: ValidationPolicy::Off,
            validation_samples: 4,
            rings: None,
            partition_samples: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RingRow {
    pub distance: f64,
    pub order: u32,
    pub samples: usize,
    pub worst_error: f64,
    pub mean_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    pub order: u32,
    pub from: f64,
    pub to: f64,
    pub observed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionDiagnostics {
    pub whitney: Option<WhitneyReport>,
    /// Largest sampled `|Σ φ - 1|` over covered points.
    pub partition_defect: f64,
    pub partition_samples: usize,
    pub kappas: Vec<f64>,
    pub stages: Vec<StageDiagnostics>,
    pub rings: Vec<RingRow>,
    pub orders: Vec<OrderRow>,
    pub staged: Vec<super::staged::StagedReport>,
}

pub struct ExtensionResult {
    pub function: Arc<dyn Extension>,
    pub diagnostics: ExtensionDiagnostics,
}

/// `F = f_0` on the jet set, `F = G` elsewhere.
pub struct AnalyticExtension {
    jet: Arc<WhitneyJet>,
    whitney: Arc<WhitneyExtension>,
    layered: LayeredFunction,
}

impl AnalyticExtension {
    pub fn layered(&self) -> &LayeredFunction {
        &self.layered
    }

    pub fn whitney(&self) -> &WhitneyExtension {
        &self.whitney
    }
}

impl Extension for AnalyticExtension {
    fn eval_with_provenance(&self, z: &[f64], out: &mut [f64]) -> Result<Branch> {
        if let Some(p) = self.jet.points().iter().position(|x| x.as_slice() == z) {
            out.copy_from_slice(self.jet.value_at(p, 0));
            return Ok(Branch::OnSet);
        }
        if self.layered.smoothing_weight(z) == 0.0 {
            return self.whitney.eval_with_branch(z, out);
        }
        self.layered.eval_into(z, out)?;
        Ok(Branch::Mollified)
    }
}

impl VectorFunction for AnalyticExtension {
    fn input_dim(&self) -> usize {
        self.jet.dim()
    }
    fn output_dim(&self) -> usize {
        self.jet.channels()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_with_provenance(u, out).map(|_| ())
    }
}

pub(crate) fn default_bounds(points: &[Vec<f64>]) -> (Vec<i64>, Vec<i64>) {
    let n = points[0].len();
    let lo = (0..n)
        .map(|i| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min).floor() as i64 - 1)
        .collect();
    let hi = (0..n)
        .map(|i| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1)
        .collect();
    (lo, hi)
}

pub(crate) fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Largest `|Σ φ - 1|` at random covered points within `radius` of the jet points.
pub(crate) fn partition_defect(
    cover: &CubeCover,
    points: &[Vec<f64>],
    radius: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, usize) {
    let n = cover.dim();
    let mut worst = 0.0f64;
    let mut used = 0;
    for _ in 0..samples {
        let base = &points[rng.gen_range(0..points.len())];
        let d = random_unit(n, rng);
        let rho = rng.gen_range(0.0..radius);
        let z: Vec<f64> = base.iter().zip(&d).map(|(b, u)| b + rho * u).collect();
        if !matches!(cover.locate(&z), Location::Covered(_)) {
            continue;
        }
        let s: f64 = partition(cover, &z).iter().map(|(_, w)| w).sum();
        worst = worst.max((s - 1.0).abs());
        used += 1;
    }
    (worst, used)
}

/// Compares finite-difference derivatives of `f` with the Taylor field of the ring center.
pub fn ring_verification(
    f: &dyn VectorFunction,
    jet: &WhitneyJet,
    rings: &RingSpec,
    seed: u64,
) -> Result<(Vec<RingRow>, Vec<OrderRow>)> {
    let n = jet.dim();
    let top = rings.max_order.min(jet.order());
    let ks = MultiIndex::enumerate(n, top)?;
    let centers = rings.points.min(jet.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Ring points are drawn up front so the result does not depend on scheduling.
    let mut tasks = Vec::new();
    for &d in &rings.distances {
        for c in 0..centers {
            let x = jet.point(c);
            let mut z = None;
            for _ in 0..200 {
                let u = random_unit(n, &mut rng);
                let cand: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + d * b).collect();
                let nearest = jet
                    .points()
                    .iter()
                    .map(|p| euclid(p, &cand))
                    .fold(f64::INFINITY, f64::min);
                if nearest >= d * (1.0 - 1e-12) {
                    z = Some(cand);
                    break;
                }
            }
            if let Some(z) = z {
                tasks.push((d, c, z));
            }
        }
    }
    let errs: Vec<Vec<(u32, f64)>> = tasks
        .par_iter()
        .map(|(_, c, z)| {
            ks.iter()
                .map(|k| {
                    let fd = finite_diff_richardson(f, z, k, rings.fd_step)?;
                    let psi = taylor_field(jet, k, z, *c)?;
                    let e = fd.iter().zip(&psi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    Ok((k.order(), e))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &d in &rings.distances {
        for order in 0..=top {
            let vals: Vec<f64> = tasks
                .iter()
                .zip(&errs)
                .filter(|((td, _, _), _)| *td == d)
                .flat_map(|(_, e)| e.iter().filter(|(o, _)| *o == order).map(|(_, v)| *v))
                .collect();
            if vals.is_empty() {
                continue;
            }
            rows.push(RingRow {
                distance: d,
                order,
                samples: vals.len(),
                worst_error: vals.iter().copied().fold(0.0, f64::max),
                mean_error: vals.iter().sum::<f64>() / vals.len() as f64,
            });
        }
    }
    let mut orders = Vec::new();
    for order in 0..=top {
        let seq: Vec<&RingRow> = rows.iter().filter(|r| r.order == order).collect();
        for w in seq.windows(2) {
            orders.push(OrderRow {
                order,
                from: w[0].distance,
                to: w[1].distance,
                observed: (w[0].worst_error / w[1].worst_error).ln() / (w[0].distance / w[1].distance).ln(),
            });
        }
    }
    Ok((rows, orders))
}

/// Builds `F` from a jet: checks the jet, extends it by the Whitney sum over a
/// lazily built cube cover, and smooths the result over distance shells of the jet set.
pub fn extend_analytic(jet: WhitneyJet, config: &AnalyticConfig) -> Result<ExtensionResult> {
    let report = whitney_check(&jet, config.eps, config.delta)?;
    if !report.passed {
        return Err(Error::JetRejected(format!(
            "worst remainder ratio {:e} exceeds {:e} (pair {:?}, k {:?})",
            report.worst_ratio, config.eps, report.worst_pair, report.worst_k
        )));
    }
    if config.stages == 0 {
        return usage("at least one smoothing stage is required");
    }
    let points = jet.points().to_vec();
    let (lo, hi) = config.bounds.clone().unwrap_or_else(|| default_bounds(&points));
    let set = ClosedSet::points(points.clone())?;
    let cover = Arc::new(CubeCover::lazy(CoverSpec {
        level: jet.level(),
        arity: jet.arity(),
        lo,
        hi,
        s_max: config.s_max,
        set: set.clone(),
        anchors: points.clone(),
        stage: 0,
    })?);
    let jet = Arc::new(jet);
    let whitney = Arc::new(WhitneyExtension::new(jet.clone(), cover.clone())?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (partition_defect, partition_samples) =
        partition_defect(&cover, &points, 2.0 * config.shell_outer, config.partition_samples, &mut rng);
    let spec = ExhaustionSpec {
        exhaustion: Exhaustion::geometric_shells(set, config.shell_outer, config.stages + 2)?,
        eps: config.tolerances.clone(),
        order: OrderBudget::Finite(jet.order()),
    };
    let mut lc = LayeredConfig::new(jet.level(), jet.arity(), config.stages, config.kappa.clone());
    lc.nodes_per_axis = config.nodes_per_axis;
    lc.terminal = true;
    lc.validation = config.validation;
    lc.validation_samples = config.validation_samples;
    lc.seed = config.seed.wrapping_add(1);
    let layered = layered_approximate(whitney.clone(), spec, &lc)?;
    let f = AnalyticExtension {
        jet: jet.clone(),
        whitney,
        layered,
    };
    let (rings, orders) = match &config.rings {
        Some(r) => ring_verification(&f, &jet, r, config.seed.wrapping_add(2))?,
        None => (Vec::new(), Vec::new()),
    };
    let diagnostics = ExtensionDiagnostics {
        whitney: Some(report),
        partition_defect,
        partition_samples,
        kappas: f.layered.kappas(),
        stages: f.layered.diagnostics().to_vec(),
        rings,
        orders,
        staged: Vec::new(),
    };
    Ok(ExtensionResult {
        function: Arc::new(f),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{jet_from_derivatives, Field};

    #[test]
    fn constant_jet_extends_to_constant() {
        let pts = vec![vec![0.5, 0.5, 0.5, 0.5], vec![-0.5, 0.3, 0.0, 0.1], vec![0.1, -0.6, 0.2, 0.0]];
        let jet = jet_from_derivatives(2, 1, Field::Real, pts.clone(), 1, |k, _| {
            vec![if k.order() == 0 { 2.5 } else { 0.0 }, 0.0, 0.0, 0.0]
        })
        .unwrap();
        let cfg = AnalyticConfig::new(2, KappaSchedule::Explicit(vec![1e5, 2e5]));
        let res = extend_analytic(jet, &cfg).unwrap();
        let mut out = [0.0; 4];
        for z in [[0.0, 0.0, 0.0, 0.0], [0.6, 0.55, 0.5, 0.45], [0.3, -0.1, 0.2, 0.7]] {
            res.function.eval_with_provenance(&z, &mut out).unwrap();
            assert!((out[0] - 2.5).abs() < 1e-8, "{z:?}: {}", out[0]);
        }
        assert_eq!(res.function.eval_with_provenance(&pts[1], &mut out).unwrap(), Branch::OnSet);
        assert_eq!(out[0], 2.5);
        assert!(res.diagnostics.partition_defect < 1e-10);
    }

    #[test]
    fn bad_jet_is_rejected() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 * i as f64 - 0.2, 0.0, 0.0, 0.0]).collect();
        let jet = jet_from_derivatives(2, 1, Field::Real, pts, 1, |k, x| {
            vec![if k.order() == 0 { x[0].abs() } else { 0.0 }, 0.0, 0.0, 0.0]
        })
        .unwrap();
        let cfg = AnalyticConfig::new(1, KappaSchedule::Explicit(vec![10.0]));
        assert!(matches!(extend_analytic(jet, &cfg), Err(Error::JetRejected(_))));
    }
}
