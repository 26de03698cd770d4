//! Finite-stage extension from a family of jets on sets `Υ_0, Υ_1, ...`.
//!
//! Stage `p` extends jet `p` by the Whitney sum `g_{p,1}`, blends it into the
//! previous result near `Υ_p` with `b_p = g_{p-1} + λ_p (g_{p,1} - g_{p-1})`,
//! where `λ_p` sums the partition functions whose supports lie within `ρ_p` of
//! `Υ_p`, and smooths `b_p` off the jet points to get `g_p`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::analytic::{default_bounds, random_unit, Extension, ExtensionDiagnostics, ExtensionResult};
use super::cubes::{CoverSpec, CubeCover, Location};
use super::whitney::{partition, Branch, WhitneyExtension};
use crate::error::{usage, Error, Result};
use crate::jets::{MultiIndex, WhitneyJet};
use crate::mollifier::layered::{
    layered_approximate, Exhaustion, ExhaustionSpec, KappaSchedule, LayeredConfig, LayeredFunction, OrderBudget,
};
use crate::numerics::{finite_diff, VectorFunction};
use crate::sets::ClosedSet;

pub type Weight = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug)]
pub struct StagedConfig {
    pub bounds: Option<(Vec<i64>, Vec<i64>)>,
    pub s_max: u32,
    /// `ρ_p` per stage; the last entry is reused.
    pub neighbourhood: Vec<f64>,
    pub shell_outer: f64,
    pub smoothing_stages: usize,
    pub kappa: Vec<f64>,
    pub nodes_per_axis: usize,
    pub samples: usize,
    pub fd_step: f64,
    pub escalation_cap: u32,
    pub seed: u64,
}

impl StagedConfig {
    pub fn new(neighbourhood: f64, kappa: Vec<f64>) -> Self {
        Self {
            bounds: None,
            s_max: 12,
            neighbourhood: vec![neighbourhood],
            shell_outer: 0.8 / 3.0,
            smoothing_stages: kappa.len(),
            kappa,
            nodes_per_axis: 2,
            samples: 12,
            fd_step: 1e-5,
            escalation_cap: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StagedReport {
    pub stage: usize,
    pub kappas: Vec<f64>,
    pub escalations: u32,
    pub samples: usize,
    /// Worst `|∂^k (g_p - g_{p-1})| / (σ 2^{-p-2})` away from `Υ_p`, `|k| <= p-1`.
    pub worst_ratio: f64,
    pub worst_k: Vec<u32>,
    pub worst_z: Vec<f64>,
    /// Largest `|g_p(x) - f_0(x)|` over the points of `Υ_p`.
    pub on_set_defect: f64,
    pub passed: bool,
}

struct Blend {
    jet: Arc<WhitneyJet>,
    whitney: WhitneyExtension,
    cover: Arc<CubeCover>,
    prev: Option<Arc<dyn Extension>>,
    rho: f64,
    set: ClosedSet,
}

impl Blend {
    fn lambda(&self, z: &[f64]) -> f64 {
        match self.cover.locate(z) {
            Location::Outside => 0.0,
            Location::BoundaryLayer => 1.0,
            Location::Covered(_) => {
                let sqrt_n = (z.len() as f64).sqrt();
                partition(&self.cover, z)
                    .into_iter()
                    .filter(|(v, _)| self.set.distance(&v.coords) + sqrt_n * v.t < self.rho)
                    .map(|(_, w)| w)
                    .sum::<f64>()
                    .min(1.0)
            }
        }
    }

    fn eval(&self, z: &[f64], out: &mut [f64]) -> Result<Branch> {
        if let Some(p) = self.jet.points().iter().position(|x| x.as_slice() == z) {
            out.copy_from_slice(self.jet.value_at(p, 0));
            return Ok(Branch::OnSet);
        }
        let lam = if self.prev.is_none() { 1.0 } else { self.lambda(z) };
        if lam == 1.0 {
            return self.whitney.eval_with_branch(z, out);
        }
        let prev = self.prev.as_ref().expect("blend without previous stage");
        let branch = prev.eval_with_provenance(z, out)?;
        if lam == 0.0 {
            return Ok(branch);
        }
        let mut g1 = vec![0.0; out.len()];
        self.whitney.eval_with_branch(z, &mut g1)?;
        for (o, g) in out.iter_mut().zip(&g1) {
            *o += lam * (g - *o);
        }
        Ok(Branch::WhitneySum)
    }
}

impl VectorFunction for Blend {
    fn input_dim(&self) -> usize {
        self.jet.dim()
    }
    fn output_dim(&self) -> usize {
        self.jet.channels()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval(u, out).map(|_| ())
    }
}

/// `g_p`: the smoothed blend, equal to the blend next to every jet point.
pub struct StagedExtension {
    blend: Arc<Blend>,
    layered: LayeredFunction,
    all_points: Vec<Vec<f64>>,
}

impl Extension for StagedExtension {
    fn eval_with_provenance(&self, z: &[f64], out: &mut [f64]) -> Result<Branch> {
        if self.all_points.iter().any(|x| x.as_slice() == z) || self.layered.smoothing_weight(z) == 0.0 {
            return Blend::eval(&self.blend, z, out);
        }
        self.layered.eval_into(z, out)?;
        Ok(Branch::Mollified)
    }
}

impl VectorFunction for StagedExtension {
    fn input_dim(&self) -> usize {
        self.blend.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.blend.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_with_provenance(u, out).map(|_| ())
    }
}

struct Diff<'a> {
    a: &'a dyn Extension,
    b: &'a dyn Extension,
}

impl VectorFunction for Diff<'_> {
    fn input_dim(&self) -> usize {
        self.a.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.a.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.a.eval_into(u, out)?;
        let mut t = vec![0.0; out.len()];
        self.b.eval_into(u, &mut t)?;
        out.iter_mut().zip(&t).for_each(|(o, v)| *o -= v);
        Ok(())
    }
}

/// Runs the stages in order. At most four stages are accepted.
pub fn staged_extend(jets: Vec<WhitneyJet>, sigma: Weight, config: &StagedConfig) -> Result<ExtensionResult> {
    if jets.is_empty() || jets.len() > 4 {
        return usage("staged extension takes between one and four jets");
    }
    if config.kappa.len() < config.smoothing_stages || config.smoothing_stages == 0 {
        return usage("need one kappa per smoothing stage and at least one smoothing stage");
    }
    let (level, arity, n) = (jets[0].level(), jets[0].arity(), jets[0].dim());
    if jets.iter().any(|j| j.level() != level || j.arity() != arity || j.channels() != jets[0].channels()) {
        return usage("all jets must live in the same algebra with the same field");
    }
    let all_points: Vec<Vec<f64>> = jets.iter().flat_map(|j| j.points().to_vec()).collect();
    let (lo, hi) = config.bounds.clone().unwrap_or_else(|| default_bounds(&all_points));
    let all_set = ClosedSet::points(all_points.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut prev: Option<Arc<dyn Extension>> = None;
    let mut reports = Vec::new();
    let mut stage_diags = Vec::new();
    let mut kappas_all = Vec::new();
    for (p, jet) in jets.into_iter().enumerate() {
        let pts = jet.points().to_vec();
        let set = ClosedSet::points(pts.clone())?;
        let cover = Arc::new(CubeCover::lazy(CoverSpec {
            level,
            arity,
            lo: lo.clone(),
            hi: hi.clone(),
            s_max: config.s_max,
            set: set.clone(),
            anchors: pts.clone(),
            stage: p,
        })?);
        let jet = Arc::new(jet);
        let rho = config.neighbourhood[p.min(config.neighbourhood.len() - 1)];
        let blend = Arc::new(Blend {
            jet: jet.clone(),
            whitney: WhitneyExtension::new(jet.clone(), cover.clone())?,
            cover,
            prev: prev.clone(),
            rho,
            set: set.clone(),
        });
        let tol = sigma_floor(&sigma, &all_points) * 0.5f64.powi(p as i32 + 2);
        let mut kappas: Vec<f64> = config.kappa[..config.smoothing_stages].to_vec();
        let mut escalations = 0;
        loop {
            let spec = ExhaustionSpec {
                exhaustion: Exhaustion::geometric_shells(all_set.clone(), config.shell_outer, config.smoothing_stages + 2)?,
                eps: vec![tol.max(f64::MIN_POSITIVE)],
                order: OrderBudget::Finite(jet.order()),
            };
            let mut lc = LayeredConfig::new(level, arity, config.smoothing_stages, KappaSchedule::Explicit(kappas.clone()));
            lc.nodes_per_axis = config.nodes_per_axis;
            lc.terminal = true;
            lc.seed = config.seed.wrapping_add(p as u64 + 1);
            let layered = layered_approximate(blend.clone(), spec, &lc)?;
            let g = Arc::new(StagedExtension {
                blend: blend.clone(),
                layered,
                all_points: all_points.clone(),
            });
            let mut report = StagedReport {
                stage: p,
                kappas: kappas.clone(),
                escalations,
                samples: 0,
                worst_ratio: 0.0,
                worst_k: vec![0; n],
                worst_z: Vec::new(),
                on_set_defect: 0.0,
                passed: true,
            };
            let mut out = vec![0.0; jet.channels()];
            for (i, x) in pts.iter().enumerate() {
                g.eval_into(x, &mut out)?;
                let d = out.iter().zip(jet.value_at(i, 0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                report.on_set_defect = report.on_set_defect.max(d);
            }
            if let Some(prev) = &prev {
                let diff = Diff { a: g.as_ref(), b: prev.as_ref() };
                let ks = MultiIndex::enumerate(n, (p as u32).saturating_sub(1))?;
                let mut sample_rng = ChaCha8Rng::seed_from_u64(rng.gen());
                for _ in 0..config.samples {
                    let base = &all_points[sample_rng.gen_range(0..all_points.len())];
                    let u = random_unit(n, &mut sample_rng);
                    let r = sample_rng.gen_range(0.0..2.0 * config.shell_outer);
                    let z: Vec<f64> = base.iter().zip(&u).map(|(b, v)| b + r * v).collect();
                    if set.distance(&z) < rho || !in_bounds(&z, &lo, &hi, config.shell_outer) {
                        continue;
                    }
                    let s = sigma(&z) * 0.5f64.powi(p as i32 + 2);
                    report.samples += 1;
                    for k in &ks {
                        let v = finite_diff(&diff, &z, k, config.fd_step)?;
                        let ratio = v.iter().map(|x| x * x).sum::<f64>().sqrt() / s;
                        if ratio > report.worst_ratio || report.worst_z.is_empty() {
                            report.worst_ratio = ratio;
                            report.worst_k = k.exps().to_vec();
                            report.worst_z = z.clone();
                        }
                    }
                }
                report.passed = report.worst_ratio < 1.0;
            }
            if report.passed || escalations >= config.escalation_cap {
                if !report.passed {
                    return Err(Error::StageValidation {
                        stage: p,
                        k: report.worst_k,
                        z: report.worst_z,
                        detail: format!("ratio {:e} to the stage bound after {escalations} doublings", report.worst_ratio),
                    });
                }
                kappas_all.extend(kappas.iter().copied());
                stage_diags.extend(g.layered.diagnostics().iter().cloned());
                reports.push(report);
                prev = Some(g);
                break;
            }
            kappas.iter_mut().for_each(|k| *k *= 2.0);
            escalations += 1;
        }
    }
    Ok(ExtensionResult {
        function: prev.expect("at least one stage"),
        diagnostics: ExtensionDiagnostics {
            whitney: None,
            partition_defect: 0.0,
            partition_samples: 0,
            kappas: kappas_all,
            stages: stage_diags,
            rings: Vec::new(),
            orders: Vec::new(),
            staged: reports,
        },
    })
}

fn in_bounds(z: &[f64], lo: &[i64], hi: &[i64], margin: f64) -> bool {
    z.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| *x > *l as f64 + margin && *x < *h as f64 - margin)
}

fn sigma_floor(sigma: &Weight, pts: &[Vec<f64>]) -> f64 {
    pts.iter().map(|x| sigma(x)).fold(f64::INFINITY, f64::min).max(1e-300)
}
