//! Lines and X-ray transforms in the plane, convex domains given by support
//! functions, and the moment tests that single out discs.
//!
//! A line is `L_{r,θ} = {x : ⟨x, v_θ⟩ = r}` with `v_θ = (cos θ, sin θ)`. Points
//! on it are `r v_θ + t v_θ^⊥`, `v_θ^⊥ = (−sin θ, cos θ)`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::batch::{self, Execution};
use crate::error::{Error, Result};
use crate::quad::{self, Node, SingularIntegrand, Tol};

/// Smallest accepted number of support-function samples.
pub const MIN_SAMPLES: usize = 256;
/// Default number of samples for named shapes.
pub const DEFAULT_SAMPLES: usize = 512;
/// Default relative Fourier tolerance of [`disc_test`].
pub const DISC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParam {
    pub r: f64,
    pub theta: f64,
}

impl LineParam {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn normal(&self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c, s]
    }

    pub fn tangent(&self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [-s, c]
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        let n = self.normal();
        let d = self.tangent();
        [self.r * n[0] + t * d[0], self.r * n[1] + t * d[1]]
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// A planar convex body through its support function `h(θ) = sup ⟨x, v_θ⟩`,
/// sampled on `N` uniform angles and interpolated trigonometrically.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFunction {
    samples: Vec<f64>,
    // h(θ) = cos_coef[0] + Σ_{k≥1} cos_coef[k] cos kθ + sin_coef[k] sin kθ
    cos_coef: Vec<f64>,
    sin_coef: Vec<f64>,
    degree: usize,
}

impl SupportFunction {
    /// Samples `h(2πk/N)`, `k = 0..N`. `N` must be even and at least 256.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < MIN_SAMPLES || n % 2 != 0 {
            return Err(Error::Invalid(format!(
                "support function needs an even number ≥ {MIN_SAMPLES} of samples, got {n}"
            )));
        }
        if samples.iter().any(|h| !h.is_finite()) {
            return Err(Error::Invalid("non-finite support function sample".into()));
        }
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&h| Complex::new(h, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let m = n / 2;
        let mut cos_coef = vec![0.0; m + 1];
        let mut sin_coef = vec![0.0; m + 1];
        let scale = 1.0 / n as f64;
        cos_coef[0] = buf[0].re * scale;
        for k in 1..m {
            cos_coef[k] = 2.0 * buf[k].re * scale;
            sin_coef[k] = -2.0 * buf[k].im * scale;
        }
        cos_coef[m] = buf[m].re * scale;
        let size = cos_coef[0].abs().max(1e-300);
        let degree = (0..=m)
            .rev()
            .find(|&k| cos_coef[k].abs().max(sin_coef[k].abs()) > 1e-16 * size)
            .unwrap_or(0);
        let body = Self {
            samples,
            cos_coef,
            sin_coef,
            degree,
        };
        body.check_convex(1e-9)?;
        Ok(body)
    }

    pub fn from_fn(n: usize, h: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples((0..n).map(|k| h(TAU * k as f64 / n as f64)).collect())
    }

    pub fn disc(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Invalid(format!("disc radius {radius} must be positive")));
        }
        Self::from_fn(n, |t| radius + center[0] * t.cos() + center[1] * t.sin())
    }

    /// Axis-aligned ellipse with semi-axes `a` (along x) and `b` (along y).
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Invalid("ellipse semi-axes must be positive".into()));
        }
        Self::from_fn(n, |t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt())
    }

    /// Smooth constant-width body `h(θ) = w/2 + ε cos 3θ`.
    pub fn reuleaux(width: f64, eps: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| 0.5 * width + eps * (3.0 * t).cos())
    }

    /// Convex hull of a point set, through directional maxima.
    pub fn from_points(points: &[[f64; 2]], n: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("empty point set".into()));
        }
        Self::from_fn(n, |t| {
            let v = [t.cos(), t.sin()];
            points.iter().map(|&p| dot(p, v)).fold(f64::NEG_INFINITY, f64::max)
        })
    }

    /// `(θ, h)` pairs on a uniform grid starting at 0.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let n = pairs.len();
        for (k, &(theta, _)) in pairs.iter().enumerate() {
            let expected = TAU * k as f64 / n as f64;
            if (theta - expected).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "sample {k} at θ = {theta}, expected uniform grid value {expected}"
                )));
            }
        }
        Self::from_samples(pairs.iter().map(|p| p.1).collect())
    }

    /// Parses `"disc cx cy R"`, `"ellipse a b"` or `"reuleaux w eps"`.
    pub fn from_shape_spec(spec: &str, n: usize) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let kind = words.next().unwrap_or("");
        let args: Vec<f64> = words
            .map(|w| {
                w.parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("bad number '{w}' in shape '{spec}'")))
            })
            .collect::<Result<_>>()?;
        match (kind, args.as_slice()) {
            ("disc", &[cx, cy, r]) => Self::disc([cx, cy], r, n),
            ("ellipse", &[a, b]) => Self::ellipse(a, b, n),
            ("reuleaux", &[w, eps]) => Self::reuleaux(w, eps, n),
            _ => Err(Error::Invalid(format!("unknown shape '{spec}'"))),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.len() as f64
    }

    /// `(h, h′, h″)` at `θ`.
    pub fn eval_with_derivs(&self, theta: f64) -> (f64, f64, f64) {
        let (s1, c1) = theta.sin_cos();
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut h = self.cos_coef[0];
        let (mut d1, mut d2) = (0.0, 0.0);
        for k in 1..=self.degree {
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
            let (a, b) = (self.cos_coef[k], self.sin_coef[k]);
            let kf = k as f64;
            h += a * ck + b * sk;
            d1 += kf * (b * ck - a * sk);
            d2 -= kf * kf * (a * ck + b * sk);
        }
        (h, d1, d2)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_with_derivs(theta).0
    }

    /// `b(θ) = h(θ)`.
    pub fn upper(&self, theta: f64) -> f64 {
        self.eval(theta)
    }

    /// `a(θ) = −h(θ + π)`.
    pub fn lower(&self, theta: f64) -> f64 {
        -self.eval(theta + PI)
    }

    pub fn width(&self, theta: f64) -> f64 {
        self.upper(theta) - self.lower(theta)
    }

    /// Boundary point with outward normal `v_φ`: `h v_φ + h′ v_φ^⊥`.
    pub fn boundary_point(&self, phi: f64) -> [f64; 2] {
        let (h, dh, _) = self.eval_with_derivs(phi);
        let (s, c) = phi.sin_cos();
        [h * c - dh * s, h * s + dh * c]
    }

    /// Largest violation of `h + h″ ≥ 0` on the sample grid.
    pub fn convexity_defect(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let (h, _, d2) = self.eval_with_derivs(self.angle(k));
                (-(h + d2)).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn check_convex(&self, tol: f64) -> Result<()> {
        let scale = self.samples.iter().map(|h| h.abs()).fold(0.0, f64::max).max(1.0);
        let defect = self.convexity_defect();
        if defect > tol * scale {
            return Err(Error::Invalid(format!(
                "support function is not convex: h + h'' = {}",
                -defect
            )));
        }
        Ok(())
    }

    /// The body rotated by `phi` about the origin.
    pub fn rotated(&self, phi: f64) -> Result<Self> {
        Self::from_fn(self.len(), |t| self.eval(t - phi))
    }

    /// The body translated by `z`.
    pub fn translated(&self, z: [f64; 2]) -> Result<Self> {
        Self::from_fn(self.len(), |t| self.eval(t) + z[0] * t.cos() + z[1] * t.sin())
    }

    /// Endpoints of `L ∩ Ω` as parameters `t0 < t1` along `v_θ^⊥`, or `None`
    /// when the line misses the interior.
    pub fn chord(&self, line: &LineParam) -> Option<(f64, f64)> {
        let theta = line.theta;
        if !(line.r > self.lower(theta) && line.r < self.upper(theta)) {
            return None;
        }
        let v = line.normal();
        let offset = |phi: f64| dot(self.boundary_point(phi), v) - line.r;
        // ⟨x(φ), v_θ⟩ increases on (θ−π, θ) and decreases on (θ, θ+π)
        let rising = bisect(|phi| offset(phi), theta - PI, theta);
        let falling = bisect(|phi| -offset(phi), theta, theta + PI);
        let d = line.tangent();
        let t_a = dot(self.boundary_point(rising), d);
        let t_b = dot(self.boundary_point(falling), d);
        Some((t_a.min(t_b), t_a.max(t_b)))
    }

    /// Membership test against the sampled support function, refined at the
    /// most binding angle.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.support_excess(x) <= 0.0
    }

    /// `max_φ (⟨x, v_φ⟩ − h(φ))`.
    pub fn support_excess(&self, x: [f64; 2]) -> f64 {
        let g = |phi: f64| {
            let (s, c) = phi.sin_cos();
            x[0] * c + x[1] * s - self.eval(phi)
        };
        let n = self.len();
        let k = (0..n)
            .max_by(|&a, &b| {
                g(self.angle(a)).total_cmp(&g(self.angle(b)))
            })
            .unwrap_or(0);
        let step = TAU / n as f64;
        golden_max(g, self.angle(k) - step, self.angle(k) + step)
    }

    /// Outward normal angle of the boundary point nearest in angle to `x`.
    pub fn normal_angle_at(&self, x: [f64; 2]) -> f64 {
        let g = |phi: f64| {
            let (s, c) = phi.sin_cos();
            x[0] * c + x[1] * s - self.eval(phi)
        };
        let n = self.len();
        let k = (0..n)
            .max_by(|&a, &b| g(self.angle(a)).total_cmp(&g(self.angle(b))))
            .unwrap_or(0);
        let step = TAU / n as f64;
        golden_argmax(g, self.angle(k) - step, self.angle(k) + step)
    }
}

/// Root of an increasing function on `[lo, hi]` (or decreasing when
/// `lo > hi`), to full precision.
fn bisect(f: impl Fn(f64) -> f64, mut neg: f64, mut pos: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            break;
        }
        if f(mid) < 0.0 {
            neg = mid;
        } else {
            pos = mid;
        }
    }
    0.5 * (neg + pos)
}

fn golden_argmax(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let x = golden_argmax(&f, a, b);
    f(x)
}

/// A function on the plane for X-ray transforms.
pub trait PlaneFunction: Sync {
    fn eval(&self, x: [f64; 2]) -> f64;

    /// True when the function blows up like the inverse square root of the
    /// distance to the boundary of the domain it is integrated over.
    fn boundary_blowup(&self) -> bool {
        false
    }

    /// `f(line(t)) √((t − t0)(t1 − t))` at a node of the chord `[t0, t1]`,
    /// for functions with a boundary blow-up that can evaluate it without
    /// cancellation.
    fn chord_edge_factor(&self, _line: &LineParam, _t0: f64, _t1: f64, _node: &Node) -> Option<f64> {
        None
    }

    /// The chord `[ta, tb]` of the line with the set where the function
    /// blows up, when known in closed form. Domain chord endpoints within
    /// [`SNAP_TOL`] of it are moved onto it, and the function is taken as
    /// zero outside it.
    fn singular_chord(&self, _line: &LineParam) -> Option<(f64, f64)> {
        None
    }
}

/// Absolute distance under which domain chord endpoints are identified with
/// the singular chord of the integrand.
pub const SNAP_TOL: f64 = 1e-9;

impl<F: Fn([f64; 2]) -> f64 + Sync> PlaneFunction for F {
    fn eval(&self, x: [f64; 2]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineIntegral {
    Hit(f64),
    /// The line does not meet the domain; the transform is 0 there.
    Miss,
}

impl LineIntegral {
    pub fn value(&self) -> f64 {
        match self {
            LineIntegral::Hit(v) => *v,
            LineIntegral::Miss => 0.0,
        }
    }

    pub fn hit(&self) -> bool {
        matches!(self, LineIntegral::Hit(_))
    }
}

/// `If(r, θ)` over the chord `L ∩ Ω`.
pub fn line_integral<F: PlaneFunction + ?Sized>(
    f: &F,
    dom: &SupportFunction,
    line: &LineParam,
    tol: f64,
) -> Result<LineIntegral> {
    let Some((t0, t1)) = dom.chord(line) else {
        return Ok(LineIntegral::Miss);
    };
    integrate_chord(f, line, t0, t1, tol).map(LineIntegral::Hit)
}

fn integrate_chord<F: PlaneFunction + ?Sized>(
    f: &F,
    line: &LineParam,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<f64> {
    let (mut t0, mut t1) = (t0, t1);
    if f.boundary_blowup() {
        if let Some((ta, tb)) = f.singular_chord(line) {
            t0 = if (t0 - ta).abs() <= SNAP_TOL { ta } else { t0.max(ta) };
            t1 = if (t1 - tb).abs() <= SNAP_TOL { tb } else { t1.min(tb) };
            if !(t0 < t1) {
                return Ok(0.0);
            }
        }
    }
    let p0 = line.point(t0);
    let p1 = line.point(t1);
    let d = line.tangent();
    let at = |n: &Node| {
        if n.from_lo <= n.to_hi {
            [p0[0] + n.from_lo * d[0], p0[1] + n.from_lo * d[1]]
        } else {
            [p1[0] - n.to_hi * d[0], p1[1] - n.to_hi * d[1]]
        }
    };
    if f.boundary_blowup() {
        let g = SingularIntegrand::both(|n: Node| {
            f.chord_edge_factor(line, t0, t1, &n)
                .unwrap_or_else(|| f.eval(at(&n)) * (n.from_lo * n.to_hi).sqrt())
        });
        quad::integrate_singular(&g, t0, t1, tol)
    } else {
        quad::integrate(|t| f.eval(line.point(t)), t0, t1, tol)
    }
}

pub fn line_integrals<F: PlaneFunction + ?Sized>(
    exec: Execution,
    f: &F,
    dom: &SupportFunction,
    lines: &[LineParam],
    tol: f64,
) -> Result<Vec<LineIntegral>> {
    batch::try_map(exec, lines, |l| line_integral(f, dom, l, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    Const,
    Linear,
    Power(u32),
}

impl TestFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TestFunction::Const => 1.0,
            TestFunction::Linear => t,
            TestFunction::Power(k) => t.powi(*k as i32),
        }
    }
}

/// `∫_Ω f(x) h(⟨v_θ, x⟩) dx`, computed as `∫_a^b If(r, θ) h(r) dr`.
pub fn moment<F: PlaneFunction + ?Sized>(
    f: &F,
    dom: &SupportFunction,
    theta: f64,
    test: TestFunction,
    tol: f64,
) -> Result<f64> {
    let (a, b) = (dom.lower(theta), dom.upper(theta));
    let inner_tol = 0.1 * tol;
    let failure = std::cell::RefCell::new(None);
    // the chord length vanishes like √(r−a) at the ends; the sin² substitution
    // of the two-sided kernel makes the r-integrand smooth
    let g = SingularIntegrand::both(|n: Node| {
        let r = if n.from_lo <= n.to_hi { a + n.from_lo } else { b - n.to_hi };
        let line = LineParam::new(r, theta);
        match line_integral(f, dom, &line, inner_tol) {
            Ok(v) => v.value() * test.eval(r) * (n.from_lo * n.to_hi).sqrt(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    });
    let value = quad::integrate_singular(&g, a, b, Tol::new(tol, tol))?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WidthOutcome {
    Pass { width: f64 },
    Fail { theta: f64, width: f64, mean_width: f64 },
}

/// Constant width check on the sample grid.
pub fn constant_width_test(dom: &SupportFunction, tol: f64) -> WidthOutcome {
    let n = dom.len();
    let widths: Vec<f64> = (0..n / 2)
        .map(|k| dom.samples[k] + dom.samples[k + n / 2])
        .collect();
    let mean = widths.iter().sum::<f64>() / widths.len() as f64;
    let (k, dev) = widths
        .iter()
        .enumerate()
        .map(|(k, w)| (k, (w - mean).abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if dev <= tol {
        WidthOutcome::Pass { width: mean }
    } else {
        WidthOutcome::Fail {
            theta: dom.angle(k),
            width: widths[k],
            mean_width: mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscFit {
    pub center: [f64; 2],
    pub radius: f64,
    /// Largest Fourier amplitude of `a(θ) + w/2` outside degree 1.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "harmonic", rename_all = "snake_case")]
pub enum Rejection {
    Width,
    Harmonic(usize),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Width => write!(f, "width"),
            Rejection::Harmonic(k) => write!(f, "harmonic {k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DiscOutcome {
    Disc(DiscFit),
    Rejected { reason: Rejection, amplitude: f64 },
}

/// Decides whether the body is a disc: constant width `w`, and
/// `a(θ) + w/2` a pure first harmonic `⟨z, v_θ⟩`. `tol` is relative to `w`.
pub fn disc_test(dom: &SupportFunction, tol: f64) -> DiscOutcome {
    let n = dom.len();
    let scale = dom.samples.iter().map(|h| h.abs()).fold(0.0, f64::max).max(1e-300);
    let width = match constant_width_test(dom, tol * 2.0 * scale) {
        WidthOutcome::Pass { width } => width,
        WidthOutcome::Fail {
            width, mean_width, ..
        } => {
            return DiscOutcome::Rejected {
                reason: Rejection::Width,
                amplitude: (width - mean_width).abs(),
            }
        }
    };
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::new(-dom.samples[(k + n / 2) % n] + 0.5 * width, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let amp = |k: usize| {
        let f = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
        f * buf[k].norm() / n as f64
    };
    let (worst, residual) = (0..=n / 2)
        .filter(|&k| k != 1)
        .map(|k| (k, amp(k)))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if residual > tol * width {
        return DiscOutcome::Rejected {
            reason: Rejection::Harmonic(worst),
            amplitude: residual,
        };
    }
    let z = [2.0 * buf[1].re / n as f64, -2.0 * buf[1].im / n as f64];
    DiscOutcome::Disc(DiscFit {
        center: z,
        radius: 0.5 * width,
        residual,
    })
}

/// `f(x) = 1 / (π √(R² − |x − c|²))` on the ball `B(c, R) ⊂ ℝⁿ`, whose
/// integral over every line meeting the ball is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallDensity {
    pub center: Vec<f64>,
    pub radius: f64,
}

pub fn ball_density(n: usize, center: &[f64], radius: f64) -> Result<BallDensity> {
    if n < 2 || center.len() != n {
        return Err(Error::Invalid(format!(
            "ball density needs dimension ≥ 2 and a matching center, got n = {n}, center of length {}",
            center.len()
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::Invalid(format!("radius {radius} must be positive")));
    }
    Ok(BallDensity {
        center: center.to_vec(),
        radius,
    })
}

impl BallDensity {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn eval_at(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let gap = self.radius * self.radius - d2;
        if gap <= 0.0 {
            return 0.0;
        }
        1.0 / (PI * gap.sqrt())
    }

    /// Chord of the line `point + t·dir` (`dir` normalised internally) as
    /// parameters along the unit direction.
    pub fn chord(&self, point: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let u: Vec<f64> = dir.iter().map(|d| d / norm).collect();
        let rel: Vec<f64> = point.iter().zip(&self.center).map(|(p, c)| p - c).collect();
        let along: f64 = rel.iter().zip(&u).map(|(a, b)| a * b).sum();
        let perp2 = rel.iter().map(|a| a * a).sum::<f64>() - along * along;
        let gap = self.radius * self.radius - perp2;
        if gap <= 0.0 {
            return None;
        }
        let half = gap.sqrt();
        Some((-along - half, -along + half))
    }

    /// Integral over the line `point + t·dir` in ℝⁿ.
    pub fn line_integral(&self, point: &[f64], dir: &[f64], tol: f64) -> Result<LineIntegral> {
        let Some((t0, t1)) = self.chord(point, dir) else {
            return Ok(LineIntegral::Miss);
        };
        // along the chord R² − |x − c|² = (t − t0)(t1 − t)
        let g = SingularIntegrand::both(|n: Node| {
            let gap = n.from_lo * n.to_hi;
            (n.from_lo * n.to_hi).sqrt() / (PI * gap.sqrt())
        });
        quad::integrate_singular(&g, t0, t1, tol).map(LineIntegral::Hit)
    }
}

impl PlaneFunction for BallDensity {
    fn eval(&self, x: [f64; 2]) -> f64 {
        self.eval_at(&x)
    }

    fn boundary_blowup(&self) -> bool {
        true
    }

    fn singular_chord(&self, line: &LineParam) -> Option<(f64, f64)> {
        self.chord(&line.point(0.0), &line.tangent())
    }

    fn chord_edge_factor(&self, line: &LineParam, t0: f64, t1: f64, node: &Node) -> Option<f64> {
        let (ta, tb) = self.chord(&line.point(0.0), &line.tangent())?;
        let from_a = (t0 - ta).max(0.0) + node.from_lo;
        let to_b = (tb - t1).max(0.0) + node.to_hi;
        let (lo, hi) = if node.from_lo <= node.to_hi {
            (from_a, (tb - ta) - from_a)
        } else {
            ((tb - ta) - to_b, to_b)
        };
        Some((node.from_lo * node.to_hi).sqrt() / (PI * (lo * hi).sqrt()))
    }
}

/// One ball of a superposition: density of `B(center, radius)` times
/// `coefficient`, extended by zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedBall {
    pub center: [f64; 2],
    pub radius: f64,
    pub coefficient: f64,
}

/// Line integrals of `Σ cᵢ fᵢ`; each equals the sum of `cᵢ` over the balls
/// the line meets.
pub fn piecewise_constant_demo(
    exec: Execution,
    balls: &[WeightedBall],
    lines: &[LineParam],
    tol: f64,
) -> Result<Vec<f64>> {
    let parts = balls
        .iter()
        .map(|b| {
            Ok((
                ball_density(2, &b.center, b.radius)?,
                SupportFunction::disc(b.center, b.radius, MIN_SAMPLES)?,
                b.coefficient,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    batch::try_map(exec, lines, |line| {
        parts.iter().try_fold(0.0, |acc, (f, dom, c)| {
            Ok(acc + c * line_integral(f, dom, line, tol)?.value())
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disc() -> SupportFunction {
        SupportFunction::disc([0.0, 0.0], 1.0, DEFAULT_SAMPLES).unwrap()
    }

    #[test]
    fn sample_count_is_validated() {
        assert!(SupportFunction::from_samples(vec![1.0; 128]).is_err());
        assert!(SupportFunction::from_samples(vec![1.0; 257]).is_err());
        assert!(SupportFunction::from_samples(vec![1.0; 256]).is_ok());
    }

    #[test]
    fn non_convex_samples_are_rejected() {
        // h = 1 + 0.2 cos 3θ has h + h″ = 1 − 1.6 cos 3θ < 0 somewhere
        assert!(SupportFunction::from_fn(256, |t| 1.0 + 0.2 * (3.0 * t).cos()).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_ellipse_support() {
        let e = SupportFunction::ellipse(1.0, 1.2, DEFAULT_SAMPLES).unwrap();
        let t: f64 = 0.123_456;
        let exact = (t.cos().powi(2) + 1.44 * t.sin().powi(2)).sqrt();
        assert!((e.eval(t) - exact).abs() < 1e-13);
    }

    #[test]
    fn chord_of_unit_disc() {
        let d = unit_disc();
        let (t0, t1) = d.chord(&LineParam::new(0.6, 0.7)).unwrap();
        assert!((t1 - t0 - 1.6).abs() < 1e-13);
        assert!(d.chord(&LineParam::new(1.0, 0.0)).is_none());
        assert!(d.chord(&LineParam::new(-1.2, 2.0)).is_none());
    }

    #[test]
    fn line_integral_examples() {
        let d = unit_disc();
        let f = ball_density(2, &[0.0, 0.0], 1.0).unwrap();
        for &(r, th) in &[(0.0, 0.0), (0.3, 1.0), (-0.7, 4.0), (0.999, 2.5)] {
            let v = line_integral(&f, &d, &LineParam::new(r, th), 1e-12).unwrap();
            assert!((v.value() - 1.0).abs() < 1e-10, "r={r}: {v:?}");
        }
        let one = |_: [f64; 2]| 1.0;
        let v = line_integral(&one, &d, &LineParam::new(0.6, 0.0), 1e-12).unwrap();
        assert!((v.value() - 1.6).abs() < 1e-12);
        let miss = line_integral(&one, &d, &LineParam::new(1.5, 0.0), 1e-12).unwrap();
        assert_eq!(miss, LineIntegral::Miss);
        assert_eq!(miss.value(), 0.0);
    }

    #[test]
    fn moments_of_ball_density() {
        let d = unit_disc();
        let f = ball_density(2, &[0.0, 0.0], 1.0).unwrap();
        for th in [0.0, 1.0, 2.5] {
            let m0 = moment(&f, &d, th, TestFunction::Const, 1e-10).unwrap();
            assert!((m0 - 2.0).abs() < 1e-8);
            let m1 = moment(&f, &d, th, TestFunction::Linear, 1e-10).unwrap();
            assert!(m1.abs() < 1e-8);
        }
        let shifted = SupportFunction::disc([0.3, 0.0], 1.0, DEFAULT_SAMPLES).unwrap();
        let g = ball_density(2, &[0.3, 0.0], 1.0).unwrap();
        let m1 = moment(&g, &shifted, 0.0, TestFunction::Linear, 1e-10).unwrap();
        assert!((m1 - 0.6).abs() < 1e-8, "{m1}");
    }

    #[test]
    fn width_examples() {
        assert!(matches!(
            constant_width_test(&unit_disc(), 1e-10),
            WidthOutcome::Pass { width } if (width - 2.0).abs() < 1e-12
        ));
        let e = SupportFunction::ellipse(1.0, 1.2, DEFAULT_SAMPLES).unwrap();
        match constant_width_test(&e, 1e-6) {
            WidthOutcome::Fail { width, .. } => assert!((2.0..=2.4 + 1e-12).contains(&width)),
            other => panic!("{other:?}"),
        }
        let r = SupportFunction::reuleaux(2.0, 0.02, DEFAULT_SAMPLES).unwrap();
        assert!(matches!(constant_width_test(&r, 1e-10), WidthOutcome::Pass { .. }));
    }

    #[test]
    fn disc_test_examples() {
        let d = SupportFunction::disc([0.3, -0.1], 1.0, DEFAULT_SAMPLES).unwrap();
        match disc_test(&d, DISC_TOL) {
            DiscOutcome::Disc(fit) => {
                assert!((fit.center[0] - 0.3).abs() < 1e-12);
                assert!((fit.center[1] + 0.1).abs() < 1e-12);
                assert!((fit.radius - 1.0).abs() < 1e-12);
                assert!(fit.residual <= 1e-10);
            }
            other => panic!("{other:?}"),
        }
        let e = SupportFunction::ellipse(1.0, 1.2, DEFAULT_SAMPLES).unwrap();
        assert!(matches!(
            disc_test(&e, DISC_TOL),
            DiscOutcome::Rejected { reason: Rejection::Width, .. }
        ));
        let r = SupportFunction::reuleaux(2.0, 0.02, DEFAULT_SAMPLES).unwrap();
        match disc_test(&r, DISC_TOL) {
            DiscOutcome::Rejected { reason, amplitude } => {
                assert_eq!(reason, Rejection::Harmonic(3));
                assert!((amplitude - 0.02).abs() < 1e-12);
                assert_eq!(reason.to_string(), "harmonic 3");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ball_density_examples() {
        let f = ball_density(2, &[0.0, 0.0], 1.0).unwrap();
        assert!((f.eval_at(&[0.0, 0.0]) - 1.0 / PI).abs() < 1e-15);
        let f2 = ball_density(2, &[0.0, 0.0], 2.0).unwrap();
        assert!((f2.eval_at(&[0.0, 0.0]) - 0.5 / PI).abs() < 1e-15);
        let f3 = ball_density(3, &[0.0, 0.0, 0.0], 1.0).unwrap();
        let v = f3.line_integral(&[0.5, 0.0, 0.0], &[0.0, 0.3, 0.4], 1e-12).unwrap();
        assert!((v.value() - 1.0).abs() < 1e-10);
        assert!(ball_density(1, &[0.0], 1.0).is_err());
        assert!(ball_density(2, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn shape_specs() {
        assert!(SupportFunction::from_shape_spec("disc 0 0 1", 256).is_ok());
        assert!(SupportFunction::from_shape_spec("ellipse 1 1.2", 256).is_ok());
        assert!(SupportFunction::from_shape_spec("reuleaux 2 0.02", 256).is_ok());
        assert!(SupportFunction::from_shape_spec("square 1", 256).is_err());
        assert!(SupportFunction::from_shape_spec("disc a b c", 256).is_err());
    }

    #[test]
    fn membership_and_normals() {
        let d = SupportFunction::disc([0.2, 0.1], 1.0, 256).unwrap();
        assert!(d.contains([0.2, 0.1]));
        assert!(!d.contains([1.3, 0.1]));
        let phi = d.normal_angle_at([0.2 + 0.6, 0.1 + 0.8]);
        assert!((phi - 0.8f64.atan2(0.6)).abs() < 1e-7, "{phi}");
    }
}
