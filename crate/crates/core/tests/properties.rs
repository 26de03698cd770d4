use std::sync::OnceLock;

use cdwhitney::algebra::{CdNumber, CdVector, MultiplicationTable};
use cdwhitney::extension::cubes::{admission_constant, CoverSpec, CubeCover, Location};
use cdwhitney::extension::whitney::partition;
use cdwhitney::extension::whitney_extend;
use cdwhitney::jets::{
    jet_from_derivatives, remainder, taylor_field, taylor_field_into, whitney_check, Field, MultiIndex, WhitneyJet,
};
use cdwhitney::mollifier::{
    choose_kappa, mollify, mollify_partial, phi_tail, DerivativeSource, MollifierParams, PartialMode,
};
use cdwhitney::numerics::{finite_diff, integrate_gaussian, FnVector, QuadratureRule};
use cdwhitney::projection::{conj_phrase, gauss_phrase, pi_j};
use cdwhitney::sets::ClosedSet;
use proptest::prelude::*;

fn cd(level: u32) -> impl Strategy<Value = CdNumber> {
    prop::collection::vec(-1.0f64..1.0, 1usize << level)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(move |c| CdNumber::new(level, c).unwrap())
}

fn pair(levels: std::ops::RangeInclusive<u32>) -> impl Strategy<Value = (CdNumber, CdNumber)> {
    levels.prop_flat_map(|r| (cd(r), cd(r)))
}

fn dist(a: &CdNumber, b: &CdNumber) -> f64 {
    (a - b).norm()
}

fn imag(a: &CdNumber) -> f64 {
    a.coeffs()[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn conjugation_reverses_products((a, b) in pair(1..=5)) {
        let lhs = (&a * &b).conj();
        let rhs = &b.conj() * &a.conj();
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * a.norm() * b.norm());
    }

    #[test]
    fn nicely_normed((a, _) in pair(1..=5)) {
        let n2 = a.norm_sq();
        prop_assert!(imag(&(&a + &a.conj())) <= 1e-15 * a.norm());
        let aac = &a * &a.conj();
        let aca = &a.conj() * &a;
        prop_assert!(imag(&aac) <= 1e-14 * n2);
        prop_assert!(dist(&aac, &aca) <= 1e-14 * n2);
    }

    #[test]
    fn flexible_law((a, b) in pair(1..=5)) {
        let lhs = &a * &(&b * &a);
        let rhs = &(&a * &b) * &a;
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * a.norm_sq() * b.norm());
    }

    #[test]
    fn alternative_and_normed_up_to_octonions((a, b) in pair(1..=3)) {
        let s = a.norm_sq() * b.norm();
        prop_assert!(dist(&(&a * &(&a * &b)), &(&(&a * &a) * &b)) <= 1e-12 * s);
        prop_assert!(dist(&(&(&b * &a) * &a), &(&b * &(&a * &a))) <= 1e-12 * s);
        let ab = (&a * &b).norm();
        prop_assert!((ab - a.norm() * b.norm()).abs() <= 1e-12 * a.norm() * b.norm());
    }

    #[test]
    fn table_agrees_with_doubling((a, b) in pair(1..=6)) {
        let d = &a * &b;
        let t = a.table_mul(&b).unwrap();
        prop_assert!(dist(&d, &t) <= 1e-14 * a.norm() * b.norm() * (a.dim() as f64).sqrt());
    }

    #[test]
    fn pi_reads_coordinates(z in (2u32..=5).prop_flat_map(cd), j in 0usize..32) {
        let j = j % z.dim();
        prop_assert!((pi_j(&z, j).unwrap() - z.coeffs()[j]).abs() <= 1e-13 * z.norm().max(1.0));
    }

    #[test]
    fn conj_phrase_is_scaled_conjugate(z in (2u32..=5).prop_flat_map(cd)) {
        let c = (1u64 << z.level()) as f64 - 2.0;
        prop_assert!(dist(&conj_phrase(&z).unwrap(), &z.conj().scale(-c)) <= 1e-12 * z.norm() * c);
    }

    #[test]
    fn gauss_phrase_permutation_invariant(
        parts in prop::collection::vec(cd(3), 1..=4),
        weights in prop::collection::vec(-1.0f64..0.0, 4),
        shift in 0usize..4,
    ) {
        let l = parts.len();
        let b = &weights[..l];
        let g = gauss_phrase(&CdVector::new(parts.clone()).unwrap(), b).unwrap();
        let perm: Vec<usize> = (0..l).map(|i| (i + shift) % l).collect();
        let pv = CdVector::new(perm.iter().map(|&i| parts[i].clone()).collect()).unwrap();
        let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
        prop_assert!((gauss_phrase(&pv, &pb).unwrap() - g).abs() <= 1e-12 * g);
    }
}

#[test]
fn table_is_bit_exact_on_basis_elements() {
    for r in 1..=5 {
        let t = MultiplicationTable::cached(r);
        for a in 0..1usize << r {
            for b in 0..1usize << r {
                let p = &CdNumber::basis(r, a).unwrap() * &CdNumber::basis(r, b).unwrap();
                let (target, sign) = t.entry(a, b);
                let want = CdNumber::basis(r, target).unwrap().scale(sign);
                assert_eq!(p, want, "i_{a} i_{b} at level {r}");
            }
        }
    }
}

// ---------------------------------------------------------------- jets

/// `∂^k x^t` at `x`.
fn monomial_derivative(t: &[u32], k: &[u32], x: &[f64]) -> f64 {
    let mut v = 1.0;
    for ((&ti, &ki), &xi) in t.iter().zip(k).zip(x) {
        if ki > ti {
            return 0.0;
        }
        let falling: f64 = (0..ki).map(|j| (ti - j) as f64).product();
        v *= falling * xi.powi((ti - ki) as i32);
    }
    v
}

/// A random polynomial of degree at most `deg` in two variables, channel 0 only.
#[derive(Clone, Debug)]
struct Poly {
    terms: Vec<(Vec<u32>, f64)>,
}

impl Poly {
    fn deriv(&self, k: &[u32], x: &[f64]) -> f64 {
        self.terms.iter().map(|(t, c)| c * monomial_derivative(t, k, x)).sum()
    }
}

fn poly(deg: u32) -> impl Strategy<Value = Poly> {
    let idx = MultiIndex::enumerate(2, deg).unwrap();
    prop::collection::vec(-2.0f64..2.0, idx.len()).prop_map(move |c| Poly {
        terms: idx.iter().map(|k| k.exps().to_vec()).zip(c).collect(),
    })
}

fn cloud(count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), count).prop_filter("distinct", |pts| {
        pts.iter().enumerate().all(|(i, p)| {
            pts[..i]
                .iter()
                .all(|q| (p[0] - q[0]).abs() + (p[1] - q[1]).abs() > 1e-3)
        })
    })
}

fn poly_jet(p: &Poly, pts: Vec<Vec<f64>>, m: u32) -> WhitneyJet {
    let p = p.clone();
    jet_from_derivatives(1, 1, Field::Real, pts, m, move |k, x| vec![p.deriv(k.exps(), x), 0.0]).unwrap()
}

/// Derivative at 0 of the interpolant through `(t_j, v_j)`: exact for polynomials of degree `< len`.
fn lagrange_derivative_at_zero(ts: &[f64], vs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (j, (&tj, &vj)) in ts.iter().zip(vs).enumerate() {
        let mut w = 0.0;
        for (i, &ti) in ts.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut term = 1.0 / (tj - ti);
            for (q, &tq) in ts.iter().enumerate() {
                if q != j && q != i {
                    term *= (0.0 - tq) / (tj - tq);
                }
            }
            w += term;
        }
        total += w * vj;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn taylor_field_differentiates_formally(p in poly(3), pts in cloud(3), z in prop::collection::vec(-1.5f64..1.5, 2)) {
        let jet = poly_jet(&p, pts, 3);
        let ts = [-0.5, -0.25, 0.0, 0.25, 0.5];
        for k in MultiIndex::enumerate(2, 2).unwrap() {
            for axis in 0..2 {
                let next = k.add(&MultiIndex::unit(2, axis)).unwrap();
                for anchor in 0..jet.len() {
                    let vs: Vec<f64> = ts
                        .iter()
                        .map(|t| {
                            let mut y = z.clone();
                            y[axis] += t;
                            taylor_field(&jet, &k, &y, anchor).unwrap()[0]
                        })
                        .collect();
                    let d = lagrange_derivative_at_zero(&ts, &vs);
                    let want = taylor_field(&jet, &next, &z, anchor).unwrap()[0];
                    prop_assert!((d - want).abs() <= 1e-9 * (1.0 + want.abs()), "{k:?} axis {axis}: {d} vs {want}");
                }
            }
        }
    }

    #[test]
    fn polynomial_remainders_vanish(p in poly(2), pts in cloud(12)) {
        let jet = poly_jet(&p, pts, 2);
        for k in jet.indices().to_vec() {
            for x in 0..jet.len() {
                for y in 0..jet.len() {
                    let r = remainder(&jet, &k, x, y).unwrap();
                    prop_assert!(r[0].abs() <= 1e-12 * 100.0, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn whitney_check_is_monotone_in_eps(
        pts in cloud(8),
        vals in prop::collection::vec(-1.0f64..1.0, 24),
        e1 in 1e-3f64..1e2,
        factor in 1.0f64..10.0,
    ) {
        let mut jet = WhitneyJet::new(1, 1, 1, Field::Real, pts).unwrap();
        for (p, chunk) in vals.chunks(3).enumerate() {
            for (k, v) in MultiIndex::enumerate(2, 1).unwrap().iter().zip(chunk) {
                jet.set_value(p, k, &[*v, 0.0]).unwrap();
            }
        }
        let a = whitney_check(&jet, e1, 1.0).unwrap();
        let b = whitney_check(&jet, e1 * factor, 1.0).unwrap();
        prop_assert!(!a.passed || b.passed);
    }
}

// ---------------------------------------------------------------- numerics

fn double_factorial(n: i64) -> f64 {
    (1..=n).rev().step_by(2).map(|x| x as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_hermite_is_exact_on_polynomials(
        count in 2usize..8,
        degs in prop::collection::vec(0u32..16, 2),
        center in prop::collection::vec(-1.0f64..1.0, 2),
        scale in 0.5f64..3.0,
    ) {
        let degs: Vec<u32> = degs.iter().map(|d| d % (2 * count as u32)).collect();
        let rule = QuadratureRule::gauss_hermite(2, count).unwrap();
        let (c, d) = (center.clone(), degs.clone());
        let f = FnVector::new(2, 1, move |y: &[f64], o: &mut [f64]| {
            o[0] = y.iter().zip(&c).zip(&d).map(|((yi, ci), &di)| (yi - ci).powi(di as i32)).product()
        });
        let got = integrate_gaussian(&f, &center, scale, &rule).unwrap()[0];
        // ∫ x^(2j) exp(-s^2 x^2) dx = (2j-1)!! sqrt(π) / (2^j s^(2j+1)); odd moments vanish.
        let even = |j: i32| {
            double_factorial(2 * j as i64 - 1) * std::f64::consts::PI.sqrt() / (2f64.powi(j) * scale.powi(2 * j + 1))
        };
        let want: f64 = degs.iter().map(|&dg| if dg % 2 == 1 { 0.0 } else { even((dg / 2) as i32) }).product();
        // Odd moments are compared against the size of the neighbouring even one.
        let size: f64 = degs.iter().map(|&dg| even(dg.div_ceil(2) as i32)).product();
        prop_assert!((got - want).abs() <= 1e-10 * size, "{got} vs {want}");
    }

    #[test]
    fn finite_differences_converge_at_second_order(
        z in prop::collection::vec(-1.0f64..1.0, 3),
        k in prop::collection::vec(0u32..=2, 3).prop_filter("order 1..=2", |k| (1..=2).contains(&k.iter().sum::<u32>())),
    ) {
        // f = sin(u0) exp(u1) cos(u2): each factor has known derivatives.
        let f = FnVector::new(3, 1, |u: &[f64], o: &mut [f64]| o[0] = u[0].sin() * u[1].exp() * u[2].cos());
        let d = |e: u32, x: f64, which: usize| -> f64 {
            match which {
                0 => [x.sin(), x.cos(), -x.sin()][e as usize],
                1 => x.exp(),
                _ => [x.cos(), -x.sin(), -x.cos()][e as usize],
            }
        };
        let exact: f64 = (0..3).map(|i| d(k[i], z[i], i)).product();
        let mi = MultiIndex::new(k.clone()).unwrap();
        let err: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&h| (finite_diff(&f, &z, &mi, h).unwrap()[0] - exact).abs())
            .collect();
        if err[2] > 1e-9 {
            let slope = (err[0] / err[2]).ln() / 4f64.ln();
            prop_assert!(slope >= 1.9, "{err:?} slope {slope}");
        }
    }
}

// ---------------------------------------------------------------- mollifier

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mollify_keeps_unit_mass(kappa in prop::sample::select(vec![1.0, 2.0, 4.0, 8.0]), r in 2u32..=3, shift in -2.0f64..2.0) {
        let n = 1usize << r;
        let one = FnVector::new(n, 1, |_: &[f64], o: &mut [f64]| o[0] = 1.0);
        let p = MollifierParams::new(kappa, r, 1).unwrap();
        let z = vec![shift; n];
        prop_assert!((mollify(&one, &p, &z).unwrap()[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn mollify_reproduces_affine(
        coef in prop::collection::vec(-3.0f64..3.0, 5),
        z in prop::collection::vec(-2.0f64..2.0, 4),
        kappa in 0.5f64..10.0,
    ) {
        let c = coef.clone();
        let f = FnVector::new(4, 1, move |u: &[f64], o: &mut [f64]| {
            o[0] = c[0] + u.iter().zip(&c[1..]).map(|(a, b)| a * b).sum::<f64>()
        });
        let p = MollifierParams::new(kappa, 2, 1).unwrap();
        let want = coef[0] + z.iter().zip(&coef[1..]).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((mollify(&f, &p, &z).unwrap()[0] - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn chosen_kappa_meets_its_inequality(
        eps in 1e-6f64..1.0,
        delta in 1e-3f64..1.0,
        k_h in 0.1f64..100.0,
        r in 2u32..=3,
    ) {
        let kappa = choose_kappa(eps, delta, k_h, r, 1).unwrap();
        prop_assert!(phi_tail(delta, kappa, r, 1).unwrap() < eps / (4.0 * k_h));
    }

    #[test]
    fn kernel_and_function_side_derivatives_agree(
        z in prop::collection::vec(-0.8f64..0.8, 4),
        k in prop::collection::vec(0u32..=2, 4).prop_filter("order <= 2", |k| k.iter().sum::<u32>() <= 2),
        kappa in 2.0f64..8.0,
    ) {
        let h = FnVector::new(4, 1, |u: &[f64], o: &mut [f64]| o[0] = u[0].sin() * (u[1] + 0.5 * u[2]).cos() + u[3] * u[3]);
        let mi = MultiIndex::new(k).unwrap();
        let p = MollifierParams::new(kappa, 2, 1).unwrap();
        let a = mollify_partial(&h, &p, &mi, &z, PartialMode::KernelSide).unwrap()[0];
        let b = mollify_partial(&h, &p, &mi, &z, PartialMode::FunctionSide(DerivativeSource::FiniteDifference { step: 1e-3 }))
            .unwrap()[0];
        prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
}

// ---------------------------------------------------------------- extension

const SET: [[f64; 2]; 4] = [[0.1, 0.2], [-0.6, 0.5], [0.45, -0.7], [-0.3, -0.35]];

fn set_points() -> Vec<Vec<f64>> {
    SET.iter().map(|p| p.to_vec()).collect()
}

fn spec(s_max: u32) -> CoverSpec {
    CoverSpec {
        level: 1,
        arity: 1,
        lo: vec![-2, -2],
        hi: vec![2, 2],
        s_max,
        set: ClosedSet::points(set_points()).unwrap(),
        anchors: set_points(),
        stage: 0,
    }
}

fn lazy_cover() -> &'static CubeCover {
    static COVER: OnceLock<CubeCover> = OnceLock::new();
    COVER.get_or_init(|| CubeCover::lazy(spec(10)).unwrap())
}

#[test]
fn admitted_cubes_satisfy_the_distance_inequality() {
    let cover = CubeCover::build(spec(7), 2_000_000).unwrap();
    let c = admission_constant(1, 1);
    let mut count = 0;
    for level in cover.levels().unwrap() {
        for q in level {
            let (lo, hi) = (q.lo(), q.hi());
            // Distance from each point to the closed box, computed coordinate-wise.
            let d = SET
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(lo.iter().zip(&hi))
                        .map(|(x, (a, b))| (a - x).max(x - b).max(0.0).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d >= c * q.rib() - 1e-12, "{q:?}: {d}");
            count += 1;
        }
    }
    assert!(count > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partition_is_nonnegative_and_sums_to_one(z in prop::collection::vec(-2.0f64..2.0, 2)) {
        let cover = lazy_cover();
        prop_assume!(matches!(cover.locate(&z), Location::Covered(_)));
        let w = partition(cover, &z);
        prop_assert!(w.iter().all(|(_, x)| *x >= 0.0));
        prop_assert!((w.iter().map(|(_, x)| x).sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn extension_only_sees_supporting_vertices(z in prop::collection::vec(-2.0f64..2.0, 2), p in poly(2)) {
        let cover = lazy_cover();
        prop_assume!(matches!(cover.locate(&z), Location::Covered(_)));
        let jet = poly_jet(&p, set_points(), 2);
        let full = whitney_extend(&jet, cover, &z).unwrap();
        let mut local = vec![0.0; 2];
        let mut buf = vec![0.0; 2];
        for (v, w) in partition(cover, &z) {
            if w == 0.0 {
                continue;
            }
            taylor_field_into(&jet, &MultiIndex::zero(2), &z, v.anchor, &mut buf).unwrap();
            for (o, b) in local.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
        prop_assert_eq!(full, local);
    }

    #[test]
    fn polynomial_jets_are_reproduced(z in prop::collection::vec(-2.0f64..2.0, 2), p in poly(2)) {
        let cover = lazy_cover();
        prop_assume!(matches!(cover.locate(&z), Location::Covered(_)));
        let jet = poly_jet(&p, set_points(), 2);
        let f = whitney_extend(&jet, cover, &z).unwrap();
        let want = p.deriv(&[0, 0], &z);
        prop_assert!((f[0] - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {want}", f[0]);
        prop_assert!(f[1].abs() <= 1e-12);
    }
}
