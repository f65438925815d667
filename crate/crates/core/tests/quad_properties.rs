use constxr::quad::{integrate, integrate_singular, Node, SingularIntegrand, Tol};
use proptest::prelude::*;
use std::f64::consts::PI;

// B(k + 1/2, 1/2) = π (2k)! / (4^k (k!)²)
fn chebyshev_moment(k: u32) -> f64 {
    let mut v = PI;
    for j in 1..=k {
        v *= (2 * j - 1) as f64 / (2 * j) as f64;
    }
    v
}

// B(k + 1, 1/2) = 2^{2k+1} (k!)² / (2k+1)!
fn left_moment(k: u32) -> f64 {
    let mut v = 2.0;
    for j in 1..=k {
        v *= (2 * j) as f64 / (2 * j + 1) as f64;
    }
    v
}

#[test]
fn beta_moments_are_exact() {
    for k in 0..=6 {
        let g = SingularIntegrand::both(|n: Node| n.x.powi(k as i32));
        let v = integrate_singular(&g, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - chebyshev_moment(k)).abs() <= 1e-10, "k = {k}: {v}");
    }
}

#[test]
fn one_sided_kernels_are_exact() {
    for k in 0..=6 {
        let left = SingularIntegrand::left(|n: Node| n.to_hi.powi(k as i32));
        let right = SingularIntegrand::right(|n: Node| n.from_lo.powi(k as i32));
        let a = integrate_singular(&left, 0.0, 1.0, 1e-12).unwrap();
        let b = integrate_singular(&right, 0.0, 1.0, 1e-12).unwrap();
        assert!((a - left_moment(k)).abs() <= 1e-10, "k = {k}: {a}");
        assert!((b - left_moment(k)).abs() <= 1e-10, "k = {k}: {b}");
    }
}

#[test]
fn shifted_interval_scales_the_kernel() {
    // ∫_a^b (x−a)^{-1/2}(b−x)^{-1/2} dx = π on any interval
    let g = SingularIntegrand::both(|_: Node| 1.0);
    for (a, b) in [(-3.0, 5.0), (1e-8, 2e-8), (100.0, 100.5)] {
        let v = integrate_singular(&g, a, b, Tol::new(1e-13, 1e-13)).unwrap();
        assert!((v - PI).abs() < 1e-11, "[{a}, {b}]: {v}");
    }
}

#[test]
fn divergent_integrand_reports_accuracy_failure() {
    let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10);
    assert!(r.is_err());
}

proptest! {
    #[test]
    fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.1f64..4.0) {
        let f = |x: f64| (w * x).sin();
        let g = |x: f64| (x * x + 1.0).sqrt();
        let lhs = integrate(|x| a * f(x) + b * g(x), 0.0, 2.0, 1e-12).unwrap();
        let rhs = a * integrate(f, 0.0, 2.0, 1e-12).unwrap() + b * integrate(g, 0.0, 2.0, 1e-12).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn interval_additivity(lo in -2.0f64..0.0, mid in 0.0f64..1.0, hi in 1.0f64..3.0) {
        let f = |x: f64| (x * x).exp() * x.cos();
        let whole = integrate(f, lo, hi, 1e-12).unwrap();
        let parts = integrate(f, lo, mid, 1e-12).unwrap() + integrate(f, mid, hi, 1e-12).unwrap();
        prop_assert!((whole - parts).abs() < 1e-9 * whole.abs().max(1.0));
    }

    #[test]
    fn singular_linearity(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = SingularIntegrand::both(|n: Node| a * n.x.cos() + b * n.x * n.x);
        let fc = SingularIntegrand::both(|n: Node| n.x.cos());
        let fq = SingularIntegrand::both(|n: Node| n.x * n.x);
        let lhs = integrate_singular(&f, 0.0, 1.5, 1e-13).unwrap();
        let rhs = a * integrate_singular(&fc, 0.0, 1.5, 1e-13).unwrap()
            + b * integrate_singular(&fq, 0.0, 1.5, 1e-13).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}
