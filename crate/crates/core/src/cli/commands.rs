use std::path::Path;
use std::time::Instant;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cell, cell_f64, fmt_f64, json_with_meta, write_file, Csv, Outcome, RunOutput};
use crate::algebra::{CdNumber, CdVector, MultiplicationTable};
use crate::error::{usage, Result};
use crate::extension::cubes::{CoverSpec, CubeCover};
use crate::extension::{extend_analytic, AnalyticConfig, RingSpec};
use crate::jets::{jet_from_derivatives, whitney_check, Field, MultiIndex, WhitneyJet};
use crate::mollifier::{
    choose_kappa, mollify_derivatives, CutoffProduct, CutoffSpec, KappaSchedule, MollifierParams,
};
use crate::numerics::{ball_grid, cube_grid, finite_diff, FnVector, VectorFunction};
use crate::projection::{conj_phrase, gauss_phrase, pi_j};
use crate::sets::ClosedSet;

fn random_number(level: u32, rng: &mut ChaCha8Rng) -> CdNumber {
    let c = (0..1usize << level).map(|_| rng.gen_range(-1.0..1.0)).collect();
    CdNumber::new(level, c).expect("finite coefficients")
}

fn rel(a: &CdNumber, b: &CdNumber, scale: f64) -> f64 {
    (a - b).norm() / scale.max(f64::MIN_POSITIVE)
}

fn imag_norm(a: &CdNumber) -> f64 {
    a.coeffs()[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- algebra

#[derive(Args, Debug, Serialize)]
pub struct AlgebraArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraConfig {
    pub r: u32,
    pub trials: usize,
    pub seed: u64,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self { r: 3, trials: 10_000, seed: 0 }
    }
}

struct SuiteRow {
    name: &'static str,
    trials: usize,
    worst: f64,
    tol: f64,
    /// True when the identity is expected to hold.
    holds: bool,
}

impl SuiteRow {
    fn pass(&self) -> bool {
        if self.holds {
            self.worst <= self.tol
        } else {
            self.worst > self.tol
        }
    }
}

fn algebra_rows(level: u32, trials: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = [0.0f64; 9];
    for _ in 0..trials {
        let a = random_number(level, &mut rng);
        let b = random_number(level, &mut rng);
        let (na, nb) = (a.norm(), b.norm());
        let ab = a.try_mul(&b)?;
        w[0] = w[0].max(rel(&ab.conj(), &b.conj().try_mul(&a.conj())?, na * nb));
        w[1] = w[1].max(imag_norm(&(&a + &a.conj())) / na);
        let aac = a.try_mul(&a.conj())?;
        let aca = a.conj().try_mul(&a)?;
        w[2] = w[2].max((imag_norm(&aac).max(imag_norm(&aca)) + (&aac - &aca).norm()) / (na * na));
        let (p, q) = (rng.gen_range(1..4u32), rng.gen_range(1..4u32));
        let ap = a.powi(p);
        let aq = a.powi(q);
        let apq = a.powi(p + q);
        let s = na.powi((p + q) as i32);
        w[3] = w[3].max(rel(&ap.try_mul(&aq)?, &apq, s).max(rel(&aq.try_mul(&ap)?, &apq, s)));
        w[4] = w[4].max(rel(&a.try_mul(&b.try_mul(&a)?)?, &ab.try_mul(&a)?, na * na * nb));
        let aa = a.try_mul(&a)?;
        let left = rel(&a.try_mul(&ab)?, &aa.try_mul(&b)?, na * na * nb);
        let right = rel(&b.try_mul(&a)?.try_mul(&a)?, &b.try_mul(&aa)?, na * na * nb);
        w[5] = w[5].max(left.max(right));
        w[6] = w[6].max((ab.norm() - na * nb).abs() / (na * nb));
        w[7] = w[7].max(rel(&a.table_mul(&b)?, &ab, na * nb));
    }
    let mut rows = vec![
        SuiteRow { name: "conjugation_reverses_products", trials, worst: w[0], tol: 1e-12, holds: true },
        SuiteRow { name: "sum_with_conjugate_is_real", trials, worst: w[1], tol: 1e-12, holds: true },
        SuiteRow { name: "norm_product_real_and_commuting", trials, worst: w[2], tol: 1e-12, holds: true },
        SuiteRow { name: "powers_commute", trials, worst: w[3], tol: 1e-12, holds: true },
        SuiteRow { name: "flexible_law", trials, worst: w[4], tol: 1e-12, holds: true },
        SuiteRow { name: "alternative_laws", trials, worst: w[5], tol: 1e-12, holds: level <= 3 },
        SuiteRow { name: "norm_multiplicative", trials, worst: w[6], tol: 1e-12, holds: level <= 3 },
        SuiteRow { name: "table_matches_doubling", trials, worst: w[7], tol: 1e-14, holds: true },
    ];
    if level >= 4 {
        let e = |i| CdNumber::basis(level, i);
        let x = &e(3)? + &e(10)?;
        let y = &e(6)? - &e(15)?;
        rows.push(SuiteRow {
            name: "zero_divisor_witness",
            trials: 1,
            worst: x.try_mul(&y)?.norm(),
            tol: 1e-12,
            holds: true,
        });
    }
    Ok(rows)
}

pub(super) fn algebra(cfg: &AlgebraConfig, out: &Path) -> Result<RunOutput> {
    if cfg.r == 0 || cfg.r > crate::algebra::R_MAX {
        return usage(format!("level must be in 1..={}", crate::algebra::R_MAX));
    }
    let rows = algebra_rows(cfg.r, cfg.trials, cfg.seed)?;
    let mut csv = Csv::new(&["identity", "level", "trials", "worst", "tolerance", "expected", "pass"]);
    let mut table = String::new();
    for row in &rows {
        let expected = if row.holds { "holds" } else { "fails" };
        csv.row(vec![
            row.name.into(),
            cfg.r.to_string(),
            row.trials.to_string(),
            fmt_f64(row.worst),
            fmt_f64(row.tol),
            expected.into(),
            row.pass().to_string(),
        ]);
        table.push_str(&format!(
            "{:<34} {:>10.3e} {:>8} {}\n",
            row.name,
            row.worst,
            expected,
            if row.pass() { "PASS" } else { "FAIL" }
        ));
    }
    let file = write_file(out, "algebra.csv", &csv.finish("algebra", cfg))?;
    Ok(RunOutput {
        outcome: if rows.iter().all(SuiteRow::pass) { Outcome::Passed } else { Outcome::Failed },
        files: vec![file],
        summary: table.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- project

#[derive(Args, Debug, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub r: u32,
    pub l: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self { r: 3, l: 2, trials: 10_000, seed: 0 }
    }
}

pub(super) fn project(cfg: &ProjectConfig, out: &Path) -> Result<RunOutput> {
    if cfg.r < 2 || cfg.r > crate::algebra::R_MAX || cfg.l == 0 {
        return usage(format!("level must be in 2..={} and l >= 1", crate::algebra::R_MAX));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = (1u64 << cfg.r) as f64 - 2.0;
    let mut w = [0.0f64; 4];
    for _ in 0..cfg.trials {
        let z = random_number(cfg.r, &mut rng);
        let nz = z.norm();
        for j in 0..z.dim() {
            w[0] = w[0].max((pi_j(&z, j)? - z.coeffs()[j]).abs() / nz);
        }
        w[1] = w[1].max(rel(&conj_phrase(&z)?, &z.conj().scale(-c), nz));
        let parts: Vec<CdNumber> = (0..cfg.l).map(|_| random_number(cfg.r, &mut rng)).collect();
        let b: Vec<f64> = (0..cfg.l).map(|_| rng.gen_range(-1.0..0.0)).collect();
        let want: f64 = parts.iter().zip(&b).map(|(p, bp)| bp * p.norm_sq()).sum::<f64>().exp();
        let v = CdVector::new(parts.clone())?;
        let got = gauss_phrase(&v, &b)?;
        w[2] = w[2].max((got - want).abs() / want);
        let mut perm: Vec<usize> = (0..cfg.l).collect();
        perm.rotate_left(1);
        let pv = CdVector::new(perm.iter().map(|&i| parts[i].clone()).collect())?;
        let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
        w[3] = w[3].max((gauss_phrase(&pv, &pb)? - got).abs() / want);
    }
    let rows = [
        ("coordinate_extraction", w[0], 1e-13),
        ("conjugation_phrase", w[1], 1e-12),
        ("gauss_phrase", w[2], 1e-12),
        ("gauss_phrase_permutation", w[3], 1e-12),
    ];
    let mut csv = Csv::new(&["identity", "level", "arity", "trials", "worst", "tolerance", "pass"]);
    let mut summary = String::new();
    for (name, worst, tol) in rows {
        csv.row(vec![
            name.into(),
            cfg.r.to_string(),
            cfg.l.to_string(),
            cfg.trials.to_string(),
            fmt_f64(worst),
            fmt_f64(tol),
            (worst <= tol).to_string(),
        ]);
        summary.push_str(&format!("{name:<26} {worst:>10.3e} {}\n", if worst <= tol { "PASS" } else { "FAIL" }));
    }
    let file = write_file(out, "project.csv", &csv.finish("project", cfg))?;
    Ok(RunOutput {
        outcome: if rows.iter().all(|(_, w, t)| w <= t) { Outcome::Passed } else { Outcome::Failed },
        files: vec![file],
        summary: summary.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- check-jet

#[derive(Args, Debug, Serialize)]
pub struct CheckJetArgs {
    /// Jet file (JSON).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckJetConfig {
    pub jet: String,
    pub eps: f64,
    pub delta: f64,
}

impl Default for CheckJetConfig {
    fn default() -> Self {
        Self { jet: String::new(), eps: 1e-2, delta: 1.0 }
    }
}

pub(super) fn check_jet(cfg: &CheckJetConfig, out: &Path) -> Result<RunOutput> {
    if cfg.jet.is_empty() {
        return usage("a jet file is required");
    }
    let text = std::fs::read_to_string(&cfg.jet)?;
    let jet = WhitneyJet::from_json(&text)?;
    let report = whitney_check(&jet, cfg.eps, cfg.delta)?;
    let file = write_file(out, "check_jet.json", &json_with_meta("check-jet", cfg, &report)?)?;
    let summary = format!(
        "whitney check {}: worst ratio {:e} (eps {:e}, delta {:e}, pairs {}){}",
        if report.passed { "passed" } else { "FAILED" },
        report.worst_ratio,
        cfg.eps,
        cfg.delta,
        report.pairs_checked,
        match (report.worst_pair, &report.worst_k) {
            (Some((x, y)), Some(k)) if !report.passed => format!(" at pair ({x}, {y}), k = [{}]", cell(k)),
            _ => String::new(),
        }
    );
    Ok(RunOutput {
        outcome: if report.passed { Outcome::Passed } else { Outcome::Failed },
        files: vec![file],
        summary,
    })
}

// ---------------------------------------------------------------- mollify

#[derive(Args, Debug, Serialize)]
pub struct MollifyArgs {
    /// Test function: exp-re (cut off outside a ball) or gauss.
    #[arg(long = "fn")]
    #[serde(rename = "function", skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<f64>>,
    /// Points per axis of the evaluation grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Gauss-Hermite nodes per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Also run the kappa chosen for this tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choose_eps: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifyConfig {
    pub r: u32,
    pub l: usize,
    pub function: String,
    pub kappas: Vec<f64>,
    pub grid: usize,
    /// Grid is the cube `[-half_width, half_width]^n`.
    pub half_width: f64,
    /// Ball radius and cutoff enlargement for `exp-re`.
    pub radius: f64,
    pub delta0: f64,
    pub nodes: usize,
    pub choose_eps: Option<f64>,
    /// Finite-difference step for the bound estimates behind the chosen kappa.
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for MollifyConfig {
    fn default() -> Self {
        Self {
            r: 2,
            l: 1,
            function: "exp-re".into(),
            kappas: vec![2.0, 4.0, 8.0],
            grid: 5,
            half_width: 0.25,
            radius: 0.5,
            delta0: 0.5,
            nodes: 20,
            choose_eps: None,
            fd_step: 1e-3,
            seed: 0,
        }
    }
}

/// Test function, its exact derivatives on the grid, and its support radius.
struct TestFunction {
    h: Box<dyn VectorFunction>,
    exact: Box<dyn Fn(&MultiIndex, &[f64]) -> f64 + Sync>,
    support: f64,
}

fn test_function(cfg: &MollifyConfig, n: usize) -> Result<TestFunction> {
    match cfg.function.as_str() {
        "exp-re" => {
            if cfg.half_width * (n as f64).sqrt() > cfg.radius * (1.0 + 1e-12) {
                return usage("the grid must lie inside the ball");
            }
            let spec = CutoffSpec::new(ClosedSet::ball(vec![0.0; n], cfg.radius)?, cfg.delta0)?;
            let inner = FnVector::new(n, 1, |u: &[f64], o: &mut [f64]| o[0] = u[0].exp());
            Ok(TestFunction {
                h: Box::new(CutoffProduct { cutoff: spec, inner }),
                exact: Box::new(|k, u| {
                    if k.exps()[1..].iter().all(|&e| e == 0) {
                        u[0].exp()
                    } else {
                        0.0
                    }
                }),
                support: cfg.radius + cfg.delta0,
            })
        }
        "gauss" => Ok(TestFunction {
            h: Box::new(FnVector::new(n, 1, |u: &[f64], o: &mut [f64]| {
                o[0] = (-u.iter().map(|x| x * x).sum::<f64>()).exp()
            })),
            exact: Box::new(|k, u| gauss_derivative(k, u)),
            support: 6.0,
        }),
        other => usage(format!("unknown test function {other:?} (exp-re, gauss)")),
    }
}

/// `∂^k exp(-|u|^2)` from physicists' Hermite polynomials.
pub(crate) fn gauss_derivative(k: &MultiIndex, u: &[f64]) -> f64 {
    k.exps()
        .iter()
        .zip(u)
        .map(|(&e, &x)| {
            let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
            sign * crate::numerics::hermite(e, x) * (-x * x).exp()
        })
        .product()
}

pub(super) fn mollify(cfg: &MollifyConfig, out: &Path) -> Result<RunOutput> {
    let n = cfg.l << cfg.r;
    let tf = test_function(cfg, n)?;
    let grid = cube_grid(n, -cfg.half_width, cfg.half_width, cfg.grid);
    let ks = MultiIndex::enumerate(n, 1)?;
    let mut runs: Vec<(f64, &str)> = cfg.kappas.iter().map(|&k| (k, "explicit")).collect();
    if let Some(eps) = cfg.choose_eps {
        let samples = ball_grid(&vec![0.0; n], tf.support.min(3.0), 7);
        let mut k_h = 0.0f64;
        let mut second = 0.0f64;
        for z in &samples {
            for k in MultiIndex::enumerate(n, 2)? {
                let v = finite_diff(tf.h.as_ref(), z, &k, cfg.fd_step)?[0].abs();
                if k.order() <= 1 {
                    k_h = k_h.max(v);
                } else {
                    second = second.max(v);
                }
            }
        }
        let k_h = 2.0 * k_h;
        let lip = 2.0 * (n as f64).sqrt() * second.max(k_h);
        let kappa = choose_kappa(eps, eps / (2.0 * lip), k_h, cfg.r, cfg.l)?;
        runs.push((kappa, "chosen"));
    }
    let mut csv = Csv::new(&["kappa", "source", "sup_error", "worst_k", "worst_point"]);
    let mut errors = Vec::new();
    let mut summary = String::new();
    for (kappa, source) in &runs {
        let params = MollifierParams::with_nodes(*kappa, cfg.r, cfg.l, cfg.nodes)?;
        use rayon::prelude::*;
        let per_point: Vec<(f64, usize, usize)> = grid
            .par_iter()
            .enumerate()
            .map(|(pi, z)| {
                let d = mollify_derivatives(tf.h.as_ref(), &params, &ks, z)?;
                let mut best = (0.0, 0, pi);
                for (ki, (k, v)) in ks.iter().zip(&d).enumerate() {
                    let e = (v[0] - (tf.exact)(k, z)).abs();
                    if e > best.0 {
                        best = (e, ki, pi);
                    }
                }
                Ok(best)
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = per_point
            .into_iter()
            .fold((0.0, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
        errors.push((*source, worst.0));
        csv.row(vec![
            fmt_f64(*kappa),
            source.to_string(),
            fmt_f64(worst.0),
            cell(ks[worst.1].exps()),
            cell_f64(&grid[worst.2]),
        ]);
        summary.push_str(&format!("kappa {kappa:<12.6} {source:<9} sup error {:.3e}\n", worst.0));
    }
    let explicit: Vec<f64> = errors.iter().filter(|(s, _)| *s == "explicit").map(|(_, e)| *e).collect();
    let decreasing = explicit.windows(2).all(|w| w[1] < w[0]);
    let chosen_ok = match cfg.choose_eps {
        Some(eps) => errors.iter().filter(|(s, _)| *s == "chosen").all(|(_, e)| *e < eps),
        None => true,
    };
    let file = write_file(out, "mollify.csv", &csv.finish("mollify", cfg))?;
    Ok(RunOutput {
        outcome: if decreasing && chosen_ok { Outcome::Passed } else { Outcome::Failed },
        files: vec![file],
        summary: summary.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- extend

#[derive(Args, Debug, Serialize)]
pub struct ExtendArgs {
    /// Jet file; when absent a jet of the generator is sampled on a sphere.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ring_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendConfig {
    pub r: u32,
    pub l: usize,
    pub m: u32,
    pub jet: Option<String>,
    /// Generator for sampled jets: exp-re or constant.
    pub function: String,
    pub points: usize,
    pub sphere_radius: f64,
    pub min_separation: f64,
    pub eps: f64,
    pub delta: f64,
    pub s_max: u32,
    pub stages: usize,
    pub shell_outer: f64,
    /// Without explicit kappas, stage `a` uses `σ_a = q1 2^{-γ(a-1)}` times
    /// the width of the band its cutoff varies on.
    pub kappas: Option<Vec<f64>>,
    pub q1: f64,
    pub gamma: f64,
    pub nodes: usize,
    pub ring_distances: Vec<f64>,
    pub ring_points: usize,
    pub fd_step: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        Self {
            r: 2,
            l: 1,
            m: 1,
            jet: None,
            function: "exp-re".into(),
            points: 30,
            sphere_radius: 1.5,
            min_separation: 0.8,
            eps: 5.0,
            delta: 1.0,
            s_max: 12,
            stages: 5,
            shell_outer: 0.6,
            kappas: None,
            q1: 0.2,
            gamma: 1.5,
            nodes: 2,
            ring_distances: vec![0.2, 0.1, 0.05],
            ring_points: 30,
            fd_step: 1e-6,
            samples: 20,
            seed: 11,
        }
    }
}

/// `count` seeded points on the sphere of the given radius, pairwise at least `sep` apart.
pub fn sphere_cloud(n: usize, count: usize, radius: f64, sep: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut tries = 0usize;
    while pts.len() < count {
        tries += 1;
        if tries > 1_000_000 {
            return usage(format!("cannot place {count} points {sep} apart on the sphere"));
        }
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&r) {
            continue;
        }
        let v: Vec<f64> = v.iter().map(|x| radius * x / r).collect();
        if pts.iter().all(|q| crate::sets::euclid(q, &v) > sep) {
            pts.push(v);
        }
    }
    Ok(pts)
}

/// `κ_a` giving `σ_a = q1 2^{-γ(a-1)} d_1 2^{-a-1}` at level `r`.
pub fn geometric_kappas(stages: usize, shell_outer: f64, q1: f64, gamma: f64, level: u32) -> Vec<f64> {
    let c = ((1u64 << level) as f64 - 2.0).sqrt();
    (1..=stages)
        .map(|a| {
            let width = shell_outer * 0.5f64.powi(a as i32 + 1);
            let q = q1 * 2f64.powf(-gamma * (a as f64 - 1.0));
            1.0 / (c * q * width)
        })
        .collect()
}

pub(super) fn extend(cfg: &ExtendConfig, out: &Path) -> Result<RunOutput> {
    let jet = match &cfg.jet {
        Some(p) => WhitneyJet::from_json(&std::fs::read_to_string(p)?)?,
        None => {
            let n = cfg.l << cfg.r;
            let pts = sphere_cloud(n, cfg.points, cfg.sphere_radius, cfg.min_separation, cfg.seed)?;
            let ch = 1usize << cfg.r;
            match cfg.function.as_str() {
                "exp-re" => jet_from_derivatives(cfg.r, cfg.l, Field::Real, pts, cfg.m, move |k, x| {
                    let mut v = vec![0.0; ch];
                    if k.exps()[1..].iter().all(|&e| e == 0) {
                        v[0] = x[0].exp();
                    }
                    v
                })?,
                "constant" => jet_from_derivatives(cfg.r, cfg.l, Field::Real, pts, cfg.m, move |k, _| {
                    let mut v = vec![0.0; ch];
                    if k.order() == 0 {
                        v[0] = 1.0;
                    }
                    v
                })?,
                other => return usage(format!("unknown generator {other:?} (exp-re, constant)")),
            }
        }
    };
    let kappas = match &cfg.kappas {
        Some(k) => k.clone(),
        None => geometric_kappas(cfg.stages, cfg.shell_outer, cfg.q1, cfg.gamma, jet.level()),
    };
    let mut ac = AnalyticConfig::new(cfg.stages, KappaSchedule::Explicit(kappas));
    ac.eps = cfg.eps;
    ac.delta = cfg.delta;
    ac.s_max = cfg.s_max;
    ac.shell_outer = cfg.shell_outer;
    ac.nodes_per_axis = cfg.nodes;
    ac.seed = cfg.seed;
    ac.rings = Some(RingSpec {
        distances: cfg.ring_distances.clone(),
        points: cfg.ring_points,
        fd_step: cfg.fd_step,
        max_order: jet.order(),
    });
    let points = jet.points().to_vec();
    let res = extend_analytic(jet, &ac)?;
    let mut rings = Csv::new(&["distance", "order", "samples", "worst_error", "mean_error"]);
    for r in &res.diagnostics.rings {
        rings.row(vec![
            fmt_f64(r.distance),
            r.order.to_string(),
            r.samples.to_string(),
            fmt_f64(r.worst_error),
            fmt_f64(r.mean_error),
        ]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(99));
    let n = points[0].len();
    let mut samples = Csv::new(&["sample", "point", "distance_to_set", "branch", "value"]);
    let mut buf = vec![0.0; res.function.output_dim()];
    let set = ClosedSet::points(points.clone())?;
    for i in 0..cfg.samples {
        let z: Vec<f64> = if i % 4 == 0 {
            points[rng.gen_range(0..points.len())].clone()
        } else {
            let base = &points[rng.gen_range(0..points.len())];
            let d = rng.gen_range(0.0..2.0 * cfg.shell_outer);
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            base.iter().zip(&u).map(|(b, v)| b + d * v / s).collect()
        };
        let branch = res.function.eval_with_provenance(&z, &mut buf)?;
        samples.row(vec![
            i.to_string(),
            cell_f64(&z),
            fmt_f64(set.distance(&z)),
            format!("{branch:?}"),
            cell_f64(&buf),
        ]);
    }
    let files = vec![
        write_file(out, "extend_rings.csv", &rings.finish("extend", cfg))?,
        write_file(out, "extend_samples.csv", &samples.finish("extend", cfg))?,
        write_file(out, "extend_diagnostics.json", &json_with_meta("extend", cfg, &res.diagnostics)?)?,
    ];
    let mut summary = String::new();
    for o in &res.diagnostics.orders {
        summary.push_str(&format!(
            "|k| = {}: observed order {:.3} between d = {} and d = {}\n",
            o.order, o.observed, o.from, o.to
        ));
    }
    summary.push_str(&format!("partition defect {:.3e}", res.diagnostics.partition_defect));
    Ok(RunOutput { outcome: Outcome::Passed, files, summary })
}

// ---------------------------------------------------------------- cubes

#[derive(Args, Debug, Serialize)]
pub struct CubesArgs {
    /// Jet file whose points define the set; otherwise random points are used.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<u32>,
    /// Bounds are `[-bound, bound]` in every coordinate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubesConfig {
    pub r: u32,
    pub l: usize,
    pub jet: Option<String>,
    pub points: usize,
    pub s_max: u32,
    pub bound: i64,
    pub max_cubes: usize,
    pub seed: u64,
}

impl Default for CubesConfig {
    fn default() -> Self {
        Self { r: 1, l: 1, jet: None, points: 3, s_max: 7, bound: 2, max_cubes: 2_000_000, seed: 0 }
    }
}

pub(super) fn cubes(cfg: &CubesConfig, out: &Path) -> Result<RunOutput> {
    let (level, arity, pts) = match &cfg.jet {
        Some(p) => {
            let jet = WhitneyJet::from_json(&std::fs::read_to_string(p)?)?;
            (jet.level(), jet.arity(), jet.points().to_vec())
        }
        None => {
            let n = cfg.l << cfg.r;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let pts = (0..cfg.points.max(1))
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            (cfg.r, cfg.l, pts)
        }
    };
    let n = arity << level;
    let cover = CubeCover::build(
        CoverSpec {
            level,
            arity,
            lo: vec![-cfg.bound; n],
            hi: vec![cfg.bound; n],
            s_max: cfg.s_max,
            set: ClosedSet::points(pts.clone())?,
            anchors: pts,
            stage: 0,
        },
        cfg.max_cubes,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chi = cover.multiplicity(0, &mut rng);
    let export: serde_json::Value =
        serde_json::from_str(&cover.to_json()?).map_err(|e| crate::Error::Internal(e.to_string()))?;
    let cubes: usize = cover.levels().map_or(0, |l| l.iter().map(Vec::len).sum());
    let body = serde_json::json!({ "multiplicity": chi, "cover": export });
    let file = write_file(out, "cubes.json", &json_with_meta("cubes", cfg, &body)?)?;
    Ok(RunOutput {
        outcome: Outcome::Passed,
        files: vec![file],
        summary: format!(
            "{cubes} kept cubes, {} vertices, multiplicity {chi}",
            cover.vertex_list().map_or(0, |v| v.len())
        ),
    })
}

// ---------------------------------------------------------------- bench

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ops: Option<usize>,
    /// Add wall-clock columns (these vary between runs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub r: u32,
    pub ops: usize,
    pub timings: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { r: 3, ops: 100_000, timings: false, seed: 0 }
    }
}

pub(super) fn bench(cfg: &BenchConfig, out: &Path) -> Result<RunOutput> {
    if cfg.r > crate::algebra::R_MAX {
        return usage("level too large");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xs: Vec<CdNumber> = (0..64).map(|_| random_number(cfg.r, &mut rng)).collect();
    let table = MultiplicationTable::cached(cfg.r);
    let d = 1usize << cfg.r;
    let mut header = vec!["method", "level", "ops", "checksum"];
    if cfg.timings {
        header.push("ns_per_op");
    }
    let mut csv = Csv::new(&header);
    let mut summary = String::new();
    let mut buf = vec![0.0; d];
    let methods: [(&str, &dyn Fn(&CdNumber, &CdNumber, &mut [f64]) -> Result<()>); 2] = [
        ("doubling", &|a, b, o| {
            o.copy_from_slice(a.try_mul(b)?.coeffs());
            Ok(())
        }),
        ("table", &|a, b, o| {
            table.mul_into(a.coeffs(), b.coeffs(), o);
            Ok(())
        }),
    ];
    for (name, f) in methods {
        let start = Instant::now();
        let mut sum = 0.0;
        for i in 0..cfg.ops {
            f(&xs[i % 64], &xs[(i * 7 + 3) % 64], &mut buf)?;
            sum += buf.iter().sum::<f64>();
        }
        let ns = start.elapsed().as_nanos() as f64 / cfg.ops.max(1) as f64;
        let mut row = vec![name.to_string(), cfg.r.to_string(), cfg.ops.to_string(), fmt_f64(sum)];
        if cfg.timings {
            row.push(format!("{ns:.1}"));
        }
        csv.row(row);
        summary.push_str(&format!("{name:<9} level {} {:>10.1} ns/op\n", cfg.r, ns));
    }
    let file = write_file(out, "bench.csv", &csv.finish("bench", cfg))?;
    Ok(RunOutput {
        outcome: Outcome::Passed,
        files: vec![file],
        summary: summary.trim_end().to_string(),
    })
}
