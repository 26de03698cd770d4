//! Stage constants from moduli of continuity instead of derivative bounds.
//!
//! For stage `a`, with `F_a = [(α_{a+1}+1)!]^n`:
//! `ζ_a(t) = F_a [β_a μ_a(t) + γ_a η_{a+2}(t)]`, `δ_a` solves `ζ_a(δ_a) = ν_a 2^{-a}`,
//! and `κ_{a,0}` is the smallest κ with `1 - Φ(κ δ_a) < ν_a / (4 F_a β_a γ_a)`.

use serde::Serialize;

use super::kernel::choose_kappa;
use super::layered::OrderBudget;
use crate::error::{usage, Result};

pub type Modulus = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Inputs of the cascade. Index `a-1` holds the stage-`a` entry.
pub struct ModulusInputs {
    pub level: u32,
    pub arity: usize,
    pub stages: usize,
    /// Moduli of `∂^k g` on `cl V_a`; at least `stages + 2` of them.
    pub eta: Vec<Modulus>,
    /// Moduli of the cutoff derivatives `∂^k f_a`.
    pub mu: Vec<Modulus>,
    /// Bounds of `|∂^k g|` used by stage `a`.
    pub beta: Vec<f64>,
    /// Sup of `|∂^k f_a|`.
    pub gamma: Vec<f64>,
    /// Stage tolerances `ν_a`.
    pub nu: Vec<f64>,
    pub order: OrderBudget,
    /// Radii at which monotonicity of the moduli is checked.
    pub probe: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusStage {
    pub stage: usize,
    pub beta: f64,
    pub gamma: f64,
    /// `[(α_{a+1}+1)!]^n`.
    pub factor: f64,
    pub delta: f64,
    pub zeta_at_delta: f64,
    pub kappa0: f64,
}

fn factorial(k: u32) -> f64 {
    (1..=k as u64).product::<u64>() as f64
}

fn default_probe() -> Vec<f64> {
    (-12..=2).map(|e| 10f64.powi(e)).collect()
}

/// Runs the cascade for `a = 1..=stages`.
pub fn modulus_schedule(inp: &ModulusInputs) -> Result<Vec<ModulusStage>> {
    let p = inp.stages;
    if p == 0 {
        return usage("at least one stage is required");
    }
    if inp.eta.len() < p + 2 || inp.mu.len() < p || inp.beta.len() < p || inp.gamma.len() < p || inp.nu.len() < p {
        return usage("schedule needs eta for stages+2 sets and mu, beta, gamma, nu per stage");
    }
    if inp.beta.iter().chain(&inp.gamma).chain(&inp.nu).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return usage("beta, gamma and nu must be positive and finite");
    }
    let probe = if inp.probe.is_empty() { default_probe() } else { inp.probe.clone() };
    let mut ts = probe.clone();
    ts.sort_by(f64::total_cmp);
    for (name, family) in [("eta", &inp.eta), ("mu", &inp.mu)] {
        for (a, m) in family.iter().enumerate() {
            let vals: Vec<f64> = ts.iter().map(|&t| m(t)).collect();
            if vals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return usage(format!("{name}_{} must be finite and nonnegative", a + 1));
            }
            if vals.windows(2).any(|w| w[1] < w[0]) {
                return usage(format!("{name}_{} is not nondecreasing in t", a + 1));
            }
        }
        for (a, w) in family.windows(2).enumerate() {
            if ts.iter().any(|&t| w[1](t) < w[0](t)) {
                return usage(format!("{name}_{} exceeds {name}_{} somewhere", a + 1, a + 2));
            }
        }
    }
    let n = inp.arity << inp.level;
    let mut out = Vec::with_capacity(p);
    for a in 1..=p {
        let (beta, gamma, nu) = (inp.beta[a - 1], inp.gamma[a - 1], inp.nu[a - 1]);
        let factor = factorial(inp.order.alpha(a + 1) + 1).powi(n as i32);
        let mu = &inp.mu[a - 1];
        let eta = &inp.eta[a + 1];
        let zeta = |t: f64| factor * (beta * mu(t) + gamma * eta(t));
        let target = nu * 0.5f64.powi(a as i32);
        if zeta(1e-300) >= target {
            return usage(format!("stage {a}: moduli do not vanish at 0+"));
        }
        // δ with ζ(δ) ≈ target: expand, then bisect.
        let mut hi = 1.0;
        while zeta(hi) < target {
            hi *= 2.0;
            if hi > 1e300 {
                break;
            }
        }
        let mut lo = hi;
        while zeta(lo) >= target {
            lo /= 2.0;
        }
        if zeta(hi) >= target {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if zeta(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi / lo - 1.0 < 1e-14 {
                    break;
                }
            }
        }
        let delta = lo;
        let kappa0 = choose_kappa(nu, delta, factor * beta * gamma, inp.level, inp.arity)?;
        out.push(ModulusStage {
            stage: a,
            beta,
            gamma,
            factor,
            delta,
            zeta_at_delta: zeta(delta),
            kappa0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lipschitz(l: f64) -> Modulus {
        Box::new(move |t| l * t)
    }

    fn inputs(p: usize) -> ModulusInputs {
        ModulusInputs {
            level: 2,
            arity: 1,
            stages: p,
            eta: (0..p + 2).map(|a| lipschitz(1.0 + a as f64)).collect(),
            mu: (0..p).map(|a| lipschitz(2.0f64.powi(a as i32))).collect(),
            beta: vec![3.0; p],
            gamma: (0..p).map(|a| 2.0f64.powi(a as i32)).collect(),
            nu: (0..p).map(|a| 10f64.powi(-(a as i32) - 2)).collect(),
            order: OrderBudget::Finite(1),
            probe: Vec::new(),
        }
    }

    #[test]
    fn lipschitz_delta_is_linear_solve() {
        let s = modulus_schedule(&inputs(3)).unwrap();
        for st in &s {
            let a = st.stage;
            let slope = st.factor * (st.beta * 2.0f64.powi(a as i32 - 1) + st.gamma * (a as f64 + 2.0));
            let expect = 10f64.powi(-(a as i32) - 1) * 0.5f64.powi(a as i32) / slope;
            assert!((st.delta / expect - 1.0).abs() < 1e-12, "{} vs {expect}", st.delta);
        }
    }

    #[test]
    fn constants_move_monotonically() {
        let s = modulus_schedule(&inputs(4)).unwrap();
        for w in s.windows(2) {
            assert!(w[1].delta < w[0].delta);
            assert!(w[1].kappa0 > w[0].kappa0);
        }
    }

    #[test]
    fn rejects_non_monotone_eta() {
        let mut inp = inputs(2);
        inp.eta[1] = lipschitz(0.1);
        assert!(modulus_schedule(&inp).is_err());
        let mut inp = inputs(2);
        inp.mu[0] = Box::new(|t: f64| (1.0 / (1.0 + t)).min(t));
        assert!(modulus_schedule(&inp).is_err());
    }
}
