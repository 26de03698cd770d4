//! The bump `Θ` on the cube `[-1, 1]^n` and the smooth step built from it.
//!
//! `θ(u) = -1 + 2 Π (1 - u_i^2)`, `θ₁ = θ / (1 - θ^2)`, `Θ = exp(θ₁)` on the open
//! cube minus its center and `0` outside; `Θ₁ = 1 / Θ` with `Θ₁(0) = 0`.

pub fn theta(u: &[f64]) -> f64 {
    -1.0 + 2.0 * u.iter().map(|x| 1.0 - x * x).product::<f64>()
}

/// `θ₁ = θ / (1 - θ^2)`; `+∞` at the center, `-∞` on the boundary of the cube.
pub fn theta1(u: &[f64]) -> f64 {
    let t = theta(u);
    if t >= 1.0 {
        return f64::INFINITY;
    }
    if t <= -1.0 {
        return f64::NEG_INFINITY;
    }
    t / ((1.0 - t) * (1.0 + t))
}

pub fn in_open_cube(u: &[f64]) -> bool {
    u.iter().all(|x| x.abs() < 1.0)
}

/// `log Θ(u)`: `θ₁` inside the open cube, `-∞` outside.
pub fn log_bump(u: &[f64]) -> f64 {
    if in_open_cube(u) {
        theta1(u)
    } else {
        f64::NEG_INFINITY
    }
}

#[allow(non_snake_case)]
pub fn Theta(u: &[f64]) -> f64 {
    log_bump(u).exp()
}

#[allow(non_snake_case)]
pub fn Theta1(u: &[f64]) -> f64 {
    if !in_open_cube(u) {
        return f64::INFINITY;
    }
    (-theta1(u)).exp()
}

/// Smooth step: `1` for `t <= 0`, `0` for `t >= 1`, and in between the weight of
/// the left bump in the two-bump partition of unity on the unit interval.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let a = theta1(&[t]);
    let b = theta1(&[1.0 - t]);
    1.0 / (1.0 + (b - a).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert_eq!(theta(&[0.0; 4]), 1.0);
        assert_eq!(Theta1(&[0.0; 4]), 0.0);
        assert_eq!(Theta(&[0.2, -1.0, 0.0, 0.1]), 0.0);
        assert_eq!(theta(&[0.2, 1.0, 0.0, 0.1]), -1.0);
        assert_eq!(Theta(&[1.5, 1.5]), 0.0);
        // 1 - u^2 = 1/2 on one axis, zero elsewhere: θ = 0, Θ = 1.
        let u = [0.5f64.sqrt(), 0.0, 0.0];
        assert!(theta(&u).abs() < 1e-15);
        assert!((Theta(&u) - 1.0).abs() < 1e-15);
        assert!(Theta(&[0.3, 0.4]) > 0.0);
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-0.5), 1.0);
        assert_eq!(smooth_step(1.0), 0.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 1..100 {
            let s = smooth_step(i as f64 / 100.0);
            assert!(s <= prev && (0.0..=1.0).contains(&s));
            prev = s;
        }
        assert!(smooth_step(1e-3) == 1.0 && smooth_step(1.0 - 1e-3) == 0.0);
    }
}
