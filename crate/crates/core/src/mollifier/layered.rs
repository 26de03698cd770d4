//! Layered smoothing over an exhaustion `V_1 ⊂ V_2 ⊂ ...`:
//! `G = Σ_a G_a` with `G_a = T κ_a^n ∫ f_a(y) [g(y) - Σ_{s<a} G_s(y)] K_a(z - y) dy`.
//!
//! Stage `a` smooths the current residual after multiplying it by the cutoff
//! `f_a = step_{a+1} (1 - step_{a-1})`, which is 1 on `W_a = cl V_{a+1} \ V_a` and
//! vanishes on `cl V_{a-1}` and outside `V_{a+2}`. Stages are evaluated lazily:
//! a stage at `z` only recurses into earlier stages at quadrature nodes where its
//! cutoff is nonzero, and is skipped when its support is out of reach.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::kernel::{choose_kappa, MollifierParams};
use crate::error::{usage, Error, Result};
use crate::extension::bump::smooth_step;
use crate::jets::MultiIndex;
use crate::numerics::{finite_diff, VectorFunction};
use crate::sets::{AxisBox, ClosedSet};

/// Nested open sets given by finite data.
#[derive(Clone, Debug)]
pub enum Exhaustion {
    /// `V_a = {z : d(z, set) > radii[a-1]}` with strictly decreasing radii.
    DistanceShells { set: ClosedSet, radii: Vec<f64> },
    /// `V_a` is the union of the interiors of `levels[a-1]`.
    Boxes { levels: Vec<Vec<AxisBox>>, gaps: Vec<f64> },
}

impl Exhaustion {
    pub fn distance_shells(set: ClosedSet, radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) {
            return usage("distance shells need at least two positive radii");
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return usage("shell radii must decrease strictly");
        }
        Ok(Self::DistanceShells { set, radii })
    }

    /// Geometric shells `d_a = d_1 2^{-(a-1)}`, `a = 1..=count`.
    pub fn geometric_shells(set: ClosedSet, d1: f64, count: usize) -> Result<Self> {
        Self::distance_shells(set, (0..count).map(|a| d1 * 0.5f64.powi(a as i32)).collect())
    }

    /// Nested box unions; every box of `V_a` must sit inside a box of `V_{a+1}`
    /// with a positive margin.
    pub fn boxes(levels: Vec<Vec<AxisBox>>) -> Result<Self> {
        if levels.len() < 2 || levels.iter().any(|l| l.is_empty()) {
            return usage("box exhaustion needs at least two nonempty levels");
        }
        let mut gaps = Vec::with_capacity(levels.len() - 1);
        for w in levels.windows(2) {
            let mut gap = f64::INFINITY;
            for b in &w[0] {
                let best = w[1]
                    .iter()
                    .map(|c| {
                        b.lo
                            .iter()
                            .zip(&b.hi)
                            .zip(c.lo.iter().zip(&c.hi))
                            .map(|((bl, bh), (cl, ch))| (bl - cl).min(ch - bh))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                gap = gap.min(best);
            }
            if !(gap > 0.0) {
                return usage("closure of each box level must lie inside the next level");
            }
            gaps.push(gap);
        }
        Ok(Self::Boxes { levels, gaps })
    }

    /// Number of sets `V_1..V_K`.
    pub fn len(&self) -> usize {
        match self {
            Self::DistanceShells { radii, .. } => radii.len(),
            Self::Boxes { levels, .. } => levels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::DistanceShells { set, .. } => set.dim(),
            Self::Boxes { levels, .. } => levels[0][0].dim(),
        }
    }

    fn box_distance(boxes: &[AxisBox], z: &[f64]) -> f64 {
        boxes
            .iter()
            .map(|b| b.distance_to_point(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smooth step that is 1 on `cl V_b` and 0 outside `V_{b+1}`; `step(0) = 0`.
    pub fn step(&self, b: usize, z: &[f64]) -> f64 {
        if b == 0 {
            return 0.0;
        }
        match self {
            Self::DistanceShells { set, radii } => {
                let (rb, rn) = (radii[b - 1], radii[b]);
                smooth_step((rb - set.distance(z)) / (rb - rn))
            }
            Self::Boxes { levels, gaps } => {
                smooth_step(Self::box_distance(&levels[b - 1], z) / gaps[b - 1])
            }
        }
    }

    /// Stage cutoff `f_a = step_{a+1} (1 - step_{a-1})`.
    pub fn stage_cutoff(&self, a: usize, z: &[f64]) -> f64 {
        let outer = self.step(a + 1, z);
        if outer == 0.0 {
            return 0.0;
        }
        outer * (1.0 - self.step(a - 1, z))
    }

    /// False when every point within `reach` of `z` has `f_a = 0`.
    fn could_touch(&self, a: usize, z: &[f64], reach: f64) -> bool {
        match self {
            Self::DistanceShells { set, radii } => {
                let d = set.distance(z);
                if d + reach <= radii[a + 1] {
                    return false;
                }
                !(a >= 2 && d - reach >= radii[a - 2])
            }
            Self::Boxes { levels, gaps } => {
                if Self::box_distance(&levels[a], z) >= gaps[a] + reach {
                    return false;
                }
                if a >= 2 {
                    let depth = levels[a - 2]
                        .iter()
                        .map(|b| b.inner_margin(z))
                        .fold(f64::NEG_INFINITY, f64::max);
                    if depth > reach {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// A random point where `f_a` may be nonzero.
    fn sample(&self, a: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let n = self.dim();
        match self {
            Self::DistanceShells { set, radii } => {
                let inner = radii[a + 1];
                let outer = if a >= 2 { radii[a - 2] } else { radii[0] + (radii[0] - radii[1]) };
                let base = match set {
                    ClosedSet::Points { points } => points[rng.gen_range(0..points.len())].clone(),
                    ClosedSet::Ball { center, radius } => {
                        let d = unit(n, rng);
                        center.iter().zip(&d).map(|(c, u)| c + radius * u).collect()
                    }
                    ClosedSet::Boxes { boxes } => {
                        let b = &boxes[rng.gen_range(0..boxes.len())];
                        b.lo.iter().zip(&b.hi).map(|(l, h)| if l < h { rng.gen_range(*l..*h) } else { *l }).collect()
                    }
                };
                let rho = rng.gen_range(inner..outer);
                let d = unit(n, rng);
                Some(base.iter().zip(&d).map(|(b, u)| b + rho * u).collect())
            }
            Self::Boxes { levels, gaps } => {
                let outer = &levels[(a + 1).min(levels.len() - 1)];
                let pad = gaps.iter().copied().fold(0.0f64, f64::max);
                let lo: Vec<f64> = (0..n)
                    .map(|i| outer.iter().map(|b| b.lo[i]).fold(f64::INFINITY, f64::min) - pad)
                    .collect();
                let hi: Vec<f64> = (0..n)
                    .map(|i| outer.iter().map(|b| b.hi[i]).fold(f64::NEG_INFINITY, f64::max) + pad)
                    .collect();
                (0..10_000).find_map(|_| {
                    let z: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.gen_range(*l..*h)).collect();
                    (self.stage_cutoff(a, &z) > 0.0).then_some(z)
                })
            }
        }
    }
}

fn unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Derivative orders controlled per stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum OrderBudget {
    /// `α_a = m`.
    Finite(u32),
    /// `α_a = a`.
    Unbounded,
}

impl OrderBudget {
    pub fn alpha(self, a: usize) -> u32 {
        match self {
            Self::Finite(m) => m,
            Self::Unbounded => a as u32,
        }
    }
}

/// Exhaustion with its tolerance schedule `ε_1 >= ε_2 >= ...` and order budget.
#[derive(Clone, Debug)]
pub struct ExhaustionSpec {
    pub exhaustion: Exhaustion,
    pub eps: Vec<f64>,
    pub order: OrderBudget,
}

impl ExhaustionSpec {
    fn eps(&self, a: usize) -> f64 {
        self.eps[(a - 1).min(self.eps.len() - 1)]
    }
}

#[derive(Clone, Debug)]
pub enum KappaSchedule {
    /// `κ_a` for `a = 1..=P`.
    Explicit(Vec<f64>),
    /// `κ_a` from the stage tolerance `ν_a` with sampled derivative bounds
    /// (sample maximum times 2).
    Derived { samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValidationPolicy {
    Off,
    /// Record sampled stage defects without acting on them.
    Report,
    /// Double `κ_a` until the sampled defect is below `ν_a`, at most `cap` times.
    Escalate { cap: u32 },
}

#[derive(Clone, Debug)]
pub struct LayeredConfig {
    pub level: u32,
    pub arity: usize,
    pub stages: usize,
    pub nodes_per_axis: usize,
    pub kappa: KappaSchedule,
    /// Keep the unsmoothed residual inside `V_P`'s complement, so the result
    /// equals `g` next to the limit set.
    pub terminal: bool,
    pub validation: ValidationPolicy,
    pub validation_samples: usize,
    /// Highest derivative order checked by finite differences.
    pub validation_order: u32,
    pub fd_step: f64,
    pub seed: u64,
}

impl LayeredConfig {
    pub fn new(level: u32, arity: usize, stages: usize, kappa: KappaSchedule) -> Self {
        Self {
            level,
            arity,
            stages,
            nodes_per_axis: 2,
            kappa,
            terminal: false,
            validation: ValidationPolicy::Off,
            validation_samples: 4,
            validation_order: 1,
            fd_step: 1e-4,
            seed: 0,
        }
    }
}

/// What was measured while building one stage.
#[derive(Clone, Debug, Serialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    pub kappa: f64,
    pub sigma: f64,
    /// Stage tolerance `ν_a`.
    pub nu: f64,
    pub escalations: u32,
    pub samples: usize,
    /// Largest sampled `|∂^k (G_a - f_a R_a)|`.
    pub worst_defect: f64,
    pub worst_k: Vec<u32>,
    pub worst_z: Vec<f64>,
    pub passed: Option<bool>,
}

struct Stage {
    params: MollifierParams,
    reach: f64,
}

/// The evaluable layered approximation.
pub struct LayeredFunction {
    g: Arc<dyn VectorFunction + Send + Sync>,
    spec: ExhaustionSpec,
    stages: Vec<Stage>,
    terminal: bool,
    diagnostics: Vec<StageDiagnostics>,
    norm: f64,
}

impl LayeredFunction {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn diagnostics(&self) -> &[StageDiagnostics] {
        &self.diagnostics
    }

    pub fn exhaustion(&self) -> &Exhaustion {
        &self.spec.exhaustion
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.params.kappa).collect()
    }

    /// `f_a(z)`.
    pub fn cutoff(&self, a: usize, z: &[f64]) -> f64 {
        self.spec.exhaustion.stage_cutoff(a, z)
    }

    /// `G_a(z)` for `a = 1..=P`.
    pub fn stage_value(&self, a: usize, z: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        let st = &self.stages[a - 1];
        if !self.spec.exhaustion.could_touch(a, z, st.reach) {
            return Ok(());
        }
        let s = st.params.scale();
        let mut y = vec![0.0; z.len()];
        let mut r = vec![0.0; out.len()];
        st.params.rule.for_each_node(|x, w| {
            for ((yi, zi), xi) in y.iter_mut().zip(z).zip(x) {
                *yi = zi + xi / s;
            }
            let fa = self.cutoff(a, &y);
            if fa == 0.0 {
                return Ok(());
            }
            self.residual(a, &y, &mut r)?;
            for (o, ri) in out.iter_mut().zip(&r) {
                *o += w * fa * ri;
            }
            Ok(())
        })?;
        out.iter_mut().for_each(|o| *o *= self.norm);
        Ok(())
    }

    /// `R_a(z) = g(z) - Σ_{s<a} G_s(z)`.
    pub fn residual(&self, a: usize, z: &[f64], out: &mut [f64]) -> Result<()> {
        self.g.eval_into(z, out)?;
        let mut buf = vec![0.0; out.len()];
        for s in 1..a {
            self.stage_value(s, z, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o -= b;
            }
        }
        Ok(())
    }

    /// Weight of the smoothed part at `z`; 0 means the value is `g(z)` itself.
    pub fn smoothing_weight(&self, z: &[f64]) -> f64 {
        if self.terminal {
            self.spec.exhaustion.step(self.stages.len(), z)
        } else {
            1.0
        }
    }

    /// Value and whether the smoothed part contributed (false means `g` was returned).
    pub fn eval_with_flag(&self, z: &[f64], out: &mut [f64]) -> Result<bool> {
        let p = self.stages.len();
        let keep = self.smoothing_weight(z);
        if keep == 0.0 {
            self.g.eval_into(z, out)?;
            return Ok(false);
        }
        out.fill(0.0);
        let mut buf = vec![0.0; out.len()];
        for a in 1..=p {
            self.stage_value(a, z, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += b;
            }
        }
        if keep < 1.0 {
            self.g.eval_into(z, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o = keep * *o + (1.0 - keep) * b;
            }
        }
        Ok(true)
    }
}

impl VectorFunction for LayeredFunction {
    fn input_dim(&self) -> usize {
        self.g.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.g.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_with_flag(u, out).map(|_| ())
    }
}

/// `G_a - f_a R_a` as a function (the quantity a stage must keep small).
struct StageDefect<'a> {
    f: &'a LayeredFunction,
    a: usize,
}

impl VectorFunction for StageDefect<'_> {
    fn input_dim(&self) -> usize {
        self.f.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.f.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.f.stage_value(self.a, u, out)?;
        let fa = self.f.cutoff(self.a, u);
        if fa != 0.0 {
            let mut r = vec![0.0; out.len()];
            self.f.residual(self.a, u, &mut r)?;
            for (o, ri) in out.iter_mut().zip(&r) {
                *o -= fa * ri;
            }
        }
        Ok(())
    }
}

/// `f_a R_a`.
struct StageTarget<'a> {
    f: &'a LayeredFunction,
    a: usize,
}

impl VectorFunction for StageTarget<'_> {
    fn input_dim(&self) -> usize {
        self.f.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.f.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let fa = self.f.cutoff(self.a, u);
        if fa == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        self.f.residual(self.a, u, out)?;
        out.iter_mut().for_each(|o| *o *= fa);
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn factorial(k: u32) -> f64 {
    (1..=k as u64).product::<u64>() as f64
}

/// Builds `G = Σ_{a<=P} G_a` stage by stage.
pub fn layered_approximate(
    g: Arc<dyn VectorFunction + Send + Sync>,
    spec: ExhaustionSpec,
    config: &LayeredConfig,
) -> Result<LayeredFunction> {
    let p = config.stages;
    let n = config.arity << config.level;
    if p == 0 {
        return usage("at least one stage is required");
    }
    if spec.exhaustion.len() < p + 2 {
        return usage(format!(
            "{p} stages need at least {} sets in the exhaustion, got {}",
            p + 2,
            spec.exhaustion.len()
        ));
    }
    if spec.exhaustion.dim() != n || g.input_dim() != n {
        return usage("exhaustion, function and algebra dimensions disagree");
    }
    if spec.eps.is_empty() || spec.eps.iter().any(|e| !(*e > 0.0)) || spec.eps.windows(2).any(|w| w[1] > w[0]) {
        return usage("tolerances must be positive and non-increasing");
    }
    if let KappaSchedule::Explicit(k) = &config.kappa {
        if k.len() < p {
            return usage(format!("{p} stages need {p} kappas, got {}", k.len()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut f = LayeredFunction {
        g,
        spec,
        stages: Vec::with_capacity(p),
        terminal: config.terminal,
        diagnostics: Vec::with_capacity(p),
        norm: PI.powf(-(n as f64) / 2.0),
    };
    for a in 1..=p {
        let alpha = f.spec.order.alpha(a + 1).min(config.validation_order);
        let ks = MultiIndex::enumerate(n, alpha)?;
        let samples: Vec<Vec<f64>> = (0..config.validation_samples.max(1))
            .filter_map(|_| f.spec.exhaustion.sample(a, &mut rng))
            .collect();
        // ν_a = ε_{a+1} 2^{-a-2} [(α_{a+1}+1)!]^{-n} / N_{a+1}
        let n_next = if a + 3 <= f.spec.exhaustion.len() {
            let next: Vec<Vec<f64>> = (0..config.validation_samples.max(1))
                .filter_map(|_| f.spec.exhaustion.sample(a + 1, &mut rng))
                .collect();
            let cut = CutoffFn { f: &f, a: a + 1, n };
            2.0 * sup_derivatives(&cut, &next, &ks, config.fd_step)?.max(0.5)
        } else {
            1.0
        };
        let nu = f.spec.eps(a + 1) * 0.5f64.powi(a as i32 + 2)
            * factorial(f.spec.order.alpha(a + 1) + 1).powi(-(n as i32))
            / n_next;
        let mut kappa = match &config.kappa {
            KappaSchedule::Explicit(k) => k[a - 1],
            KappaSchedule::Derived { samples: count } => {
                let pts: Vec<Vec<f64>> = (0..(*count).max(1))
                    .filter_map(|_| f.spec.exhaustion.sample(a, &mut rng))
                    .collect();
                let target = StageTarget { f: &f, a };
                let k_h = 2.0 * sup_derivatives(&target, &pts, &ks, config.fd_step)?.max(1e-300);
                let ks_next = MultiIndex::enumerate(n, alpha + 1)?;
                let lip = 2.0 * sup_derivatives(&target, &pts, &ks_next, config.fd_step)?.max(1e-300);
                choose_kappa(nu, nu / (2.0 * lip), k_h, config.level, config.arity)?
            }
        };
        let mut escalations = 0;
        loop {
            let params = MollifierParams::with_nodes(kappa, config.level, config.arity, config.nodes_per_axis)?;
            let reach = params.reach();
            f.stages.truncate(a - 1);
            f.stages.push(Stage { params, reach });
            let mut diag = StageDiagnostics {
                stage: a,
                kappa,
                sigma: f.stages[a - 1].params.sigma(),
                nu,
                escalations,
                samples: 0,
                worst_defect: 0.0,
                worst_k: vec![0; n],
                worst_z: Vec::new(),
                passed: None,
            };
            if config.validation != ValidationPolicy::Off {
                let defect = StageDefect { f: &f, a };
                for z in &samples {
                    for k in &ks {
                        let v = norm(&finite_diff(&defect, z, k, config.fd_step)?);
                        if v > diag.worst_defect || diag.worst_z.is_empty() {
                            diag.worst_defect = v;
                            diag.worst_k = k.exps().to_vec();
                            diag.worst_z = z.clone();
                        }
                    }
                }
                diag.samples = samples.len();
                diag.passed = Some(diag.worst_defect < nu);
            }
            let failed = diag.passed == Some(false);
            match config.validation {
                ValidationPolicy::Escalate { cap } if failed => {
                    if escalations >= cap {
                        return Err(Error::StageValidation {
                            stage: a,
                            k: diag.worst_k,
                            z: diag.worst_z,
                            detail: format!(
                                "defect {:e} above tolerance {nu:e} after {cap} doublings of kappa",
                                diag.worst_defect
                            ),
                        });
                    }
                    kappa *= 2.0;
                    escalations += 1;
                }
                _ => {
                    f.diagnostics.push(diag);
                    break;
                }
            }
        }
    }
    Ok(f)
}

struct CutoffFn<'a> {
    f: &'a LayeredFunction,
    a: usize,
    n: usize,
}

impl VectorFunction for CutoffFn<'_> {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.f.cutoff(self.a, u);
        Ok(())
    }
}

fn sup_derivatives(h: &dyn VectorFunction, pts: &[Vec<f64>], ks: &[MultiIndex], step: f64) -> Result<f64> {
    let mut m = 0.0f64;
    for z in pts {
        for k in ks {
            m = m.max(norm(&finite_diff(h, z, k, step)?));
        }
    }
    Ok(m)
}
