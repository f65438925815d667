//! Dormand–Prince 5(4) embedded Runge–Kutta pair.

/// Right-hand side `dy/dt = f(y)` of an autonomous system.
pub trait Autonomous<const N: usize> {
    fn rhs(&self, y: &[f64; N]) -> [f64; N];
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

/// One step of size `h` from `y`. Returns the 5th-order solution and the
/// scaled error norm (accept when ≤ 1).
pub fn step<const N: usize, S: Autonomous<N>>(
    sys: &S,
    y: &[f64; N],
    h: f64,
    tol: Tolerances,
) -> ([f64; N], f64) {
    let k1 = sys.rhs(y);
    let k2 = sys.rhs(&combine(y, h, &[(A21, &k1)]));
    let k3 = sys.rhs(&combine(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = sys.rhs(&combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = sys.rhs(&combine(
        y,
        h,
        &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ));
    let k6 = sys.rhs(&combine(
        y,
        h,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y5 = combine(
        y,
        h,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = sys.rhs(&y5);
    let mut norm = 0.0f64;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
        norm = norm.max((e / scale).abs());
    }
    (y5, norm)
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        *o += h * acc;
    }
    out
}

/// The 5th-order increment `y(t + h) - y(t)` without forming the sum, so
/// small displacements keep full relative precision.
pub fn increment<const N: usize, S: Autonomous<N>>(sys: &S, y: &[f64; N], h: f64) -> [f64; N] {
    let k1 = sys.rhs(y);
    let k2 = sys.rhs(&combine(y, h, &[(A21, &k1)]));
    let k3 = sys.rhs(&combine(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = sys.rhs(&combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = sys.rhs(&combine(
        y,
        h,
        &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ));
    let k6 = sys.rhs(&combine(
        y,
        h,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let mut out = [0.0; N];
    for (i, o) in out.iter_mut().enumerate() {
        *o = h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    out
}

/// Step-size update for an error norm from a 5th-order step.
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}
