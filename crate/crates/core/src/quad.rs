//! Adaptive Gauss–Kronrod quadrature, plus integrands carrying an
//! inverse-square-root singularity at one or both endpoints.
//!
//! Singular kernels are removed by substitution before the adaptive rule
//! sees them:
//!
//! * both ends, `(z-lo)^{-1/2} (hi-z)^{-1/2}`: `z = lo + (hi-lo) sin²θ`, which
//!   turns the integral into `2 ∫_0^{π/2} g(z(θ)) dθ`;
//! * left end, `(z-lo)^{-1/2}`: `z = lo + u²`, giving `2 ∫_0^{√(hi-lo)} g du`;
//! * right end, `(hi-z)^{-1/2}`: `z = hi - u²`.
//!
//! The smooth part receives a [`Node`] with the distances to both endpoints
//! computed without cancellation, since callers routinely need `hi - z` when
//! it is far below `ulp(hi)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Default requested accuracy.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Upper bound on the number of panels of one adaptive run.
pub const MAX_PANELS: usize = 1 << 15;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Accuracy target: an estimate is accepted once its error bound is below
/// `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn abs(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn rel(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    fn target(&self, estimate: f64) -> f64 {
        self.abs.max(self.rel * estimate.abs())
    }
}

impl From<f64> for Tol {
    fn from(tol: f64) -> Self {
        Tol::new(tol, tol)
    }
}

/// An integration result with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Evaluation point handed to the smooth part of a [`SingularIntegrand`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    /// `x - lo`, exact up to rounding of the substitution.
    pub from_lo: f64,
    /// `hi - x`, exact up to rounding of the substitution.
    pub to_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    /// `(x - lo)^{-1/2}`
    Left,
    /// `(hi - x)^{-1/2}`
    Right,
    /// `(x - lo)^{-1/2} (hi - x)^{-1/2}`
    Both,
}

/// `g(x) · kernel(x)` where the kernel is fixed by `singularity` and `g` is
/// bounded on the closed interval.
#[derive(Clone)]
pub struct SingularIntegrand<F> {
    pub smooth: F,
    pub singularity: Singularity,
}

impl<F: Fn(Node) -> f64> SingularIntegrand<F> {
    pub fn new(singularity: Singularity, smooth: F) -> Self {
        Self {
            smooth,
            singularity,
        }
    }

    pub fn left(smooth: F) -> Self {
        Self::new(Singularity::Left, smooth)
    }

    pub fn right(smooth: F) -> Self {
        Self::new(Singularity::Right, smooth)
    }

    pub fn both(smooth: F) -> Self {
        Self::new(Singularity::Both, smooth)
    }
}

/// Integrates `g.smooth · kernel` over `[lo, hi]`.
pub fn integrate_singular<F, T>(g: &SingularIntegrand<F>, lo: f64, hi: f64, tol: T) -> Result<f64>
where
    F: Fn(Node) -> f64,
    T: Into<Tol>,
{
    integrate_singular_estimate(g, lo, hi, tol.into()).map(|e| e.value)
}

pub fn integrate_singular_estimate<F>(
    g: &SingularIntegrand<F>,
    lo: f64,
    hi: f64,
    tol: Tol,
) -> Result<Estimate>
where
    F: Fn(Node) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Invalid(format!("empty interval [{lo}, {hi}]")));
    }
    let len = hi - lo;
    let smooth = &g.smooth;
    match g.singularity {
        Singularity::Both => {
            let est = adaptive(
                |theta: f64| {
                    let (s, c) = theta.sin_cos();
                    let from_lo = len * s * s;
                    let to_hi = len * c * c;
                    let x = if from_lo <= to_hi { lo + from_lo } else { hi - to_hi };
                    2.0 * smooth(Node { x, from_lo, to_hi })
                },
                0.0,
                FRAC_PI_2,
                tol,
            )?;
            Ok(est)
        }
        Singularity::Left => {
            let root = len.sqrt();
            adaptive(
                |u: f64| {
                    let from_lo = u * u;
                    let to_hi = (root - u) * (root + u);
                    2.0 * smooth(Node {
                        x: lo + from_lo,
                        from_lo,
                        to_hi,
                    })
                },
                0.0,
                root,
                tol,
            )
        }
        Singularity::Right => {
            let root = len.sqrt();
            adaptive(
                |u: f64| {
                    let to_hi = u * u;
                    let from_lo = (root - u) * (root + u);
                    2.0 * smooth(Node {
                        x: hi - to_hi,
                        from_lo,
                        to_hi,
                    })
                },
                0.0,
                root,
                tol,
            )
        }
    }
}

/// Plain adaptive integration of a bounded integrand.
pub fn integrate<F, T>(f: F, lo: f64, hi: f64, tol: T) -> Result<f64>
where
    F: Fn(f64) -> f64,
    T: Into<Tol>,
{
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return integrate(f, hi, lo, tol).map(|v| -v);
    }
    adaptive(f, lo, hi, tol.into()).map(|e| e.value)
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err, resabs)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    let (value, error, resabs) = gauss_kronrod_15(&f, a, b);
    if !value.is_finite() {
        return Err(Error::Accuracy {
            estimate: value,
            error_bound: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        error,
        resabs,
    });
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = resabs;
    loop {
        let floor = 100.0 * f64::EPSILON * total_abs;
        if total_err <= tol.target(total).max(floor) {
            return Ok(Estimate {
                value: total,
                error: total_err,
                panels: heap.len(),
            });
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Accuracy {
                estimate: total,
                error_bound: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split; accept what we have if the
            // remaining error is only this panel's rounding.
            heap.push(worst);
            return Err(Error::Accuracy {
                estimate: total,
                error_bound: total_err,
            });
        }
        let (v1, e1, r1) = gauss_kronrod_15(&f, worst.a, mid);
        let (v2, e2, r2) = gauss_kronrod_15(&f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Accuracy {
                estimate: total,
                error_bound: f64::INFINITY,
            });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += r1 + r2 - worst.resabs;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            resabs: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            resabs: r2,
        });
    }
}
