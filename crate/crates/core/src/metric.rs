//! Rotationally symmetric metrics `c(r)⁻² g_Eucl` on the closed unit ball.
//!
//! Every geodesic of such a metric lies in a 2-plane through the origin, so
//! all geometry here is planar and applies verbatim in any dimension.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use crate::boundary::BlowupDensity;
use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::ode::{self, Autonomous, Tolerances};
use crate::quad::{self, SingularIntegrand, Tol};
use crate::spline::CubicSpline;

/// Step for the 5-point central-difference fallback of `c′`.
pub const FD_STEP: f64 = 1e-5;
/// Default accuracy of the geodesic tracer.
pub const TRACE_TOL: f64 = 1e-10;
const MAX_TRACE_STEPS: usize = 200_000;

#[derive(Debug, Clone)]
pub enum ProfileSource {
    Constant(f64),
    /// `e^{-r²/2}`
    Gaussian,
    /// `1 / (1 + r²/4)`
    Lens,
    /// `Σ a_k r^k`
    Polynomial(Vec<f64>),
    Expression {
        text: String,
        expr: Arc<Expr>,
        derivative: Arc<Expr>,
    },
    Samples(Arc<CubicSpline>),
}

/// A sound speed `c(r) > 0` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    source: ProfileSource,
    scale: f64,
}

impl RadialProfile {
    pub fn constant(c: f64) -> Self {
        Self::from_source(ProfileSource::Constant(c))
    }

    pub fn euclidean() -> Self {
        Self::constant(1.0)
    }

    pub fn gaussian() -> Self {
        Self::from_source(ProfileSource::Gaussian)
    }

    pub fn lens() -> Self {
        Self::from_source(ProfileSource::Lens)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::from_source(ProfileSource::Polynomial(coeffs))
    }

    pub fn from_expr(text: &str) -> std::result::Result<Self, expr::ParseError> {
        let e = expr::parse(text)?;
        let derivative = e.derivative();
        Ok(Self::from_source(ProfileSource::Expression {
            text: text.to_string(),
            expr: Arc::new(e),
            derivative: Arc::new(derivative),
        }))
    }

    pub fn from_samples(rs: Vec<f64>, cs: Vec<f64>) -> Result<Self> {
        let spline = CubicSpline::new(rs, cs)?;
        let (lo, hi) = spline.domain();
        if lo > 0.0 || hi < 1.0 {
            return Err(Error::Invalid(format!(
                "profile samples cover [{lo}, {hi}], need [0, 1]"
            )));
        }
        Ok(Self::from_source(ProfileSource::Samples(Arc::new(spline))))
    }

    fn from_source(source: ProfileSource) -> Self {
        Self { source, scale: 1.0 }
    }

    /// The profile `λ·c`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            source: self.source.clone(),
            scale: self.scale * lambda,
        }
    }

    /// True when both describe the same `c`: same source and scale.
    pub fn same_metric(&self, other: &Self) -> bool {
        self.scale == other.scale
            && match (&self.source, &other.source) {
                (ProfileSource::Samples(a), ProfileSource::Samples(b)) => Arc::ptr_eq(a, b),
                (ProfileSource::Samples(_), _) | (_, ProfileSource::Samples(_)) => false,
                _ => self.label() == other.label(),
            }
    }

    pub fn source(&self) -> &ProfileSource {
        &self.source
    }

    pub fn label(&self) -> String {
        let base = match &self.source {
            ProfileSource::Constant(c) => format!("{c}"),
            ProfileSource::Gaussian => "exp(-r^2/2)".to_string(),
            ProfileSource::Lens => "1/(1 + r^2/4)".to_string(),
            ProfileSource::Polynomial(a) => format!("poly{a:?}"),
            ProfileSource::Expression { text, .. } => text.clone(),
            ProfileSource::Samples(_) => "samples".to_string(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{} * ({base})", self.scale)
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let raw = match &self.source {
            ProfileSource::Constant(c) => *c,
            ProfileSource::Gaussian => (-0.5 * r * r).exp(),
            ProfileSource::Lens => 1.0 / (1.0 + 0.25 * r * r),
            ProfileSource::Polynomial(a) => a.iter().rev().fold(0.0, |acc, &k| acc * r + k),
            ProfileSource::Expression { expr, .. } => expr.eval(r),
            ProfileSource::Samples(s) => s.eval(r),
        };
        self.scale * raw
    }

    /// `c′(r)`; analytic or symbolic where available, otherwise (or when the
    /// symbolic form is not finite at `r`) a 5-point central difference.
    pub fn deriv(&self, r: f64) -> f64 {
        let raw = match &self.source {
            ProfileSource::Constant(_) => 0.0,
            ProfileSource::Gaussian => -r * (-0.5 * r * r).exp(),
            ProfileSource::Lens => {
                let d = 1.0 + 0.25 * r * r;
                -0.5 * r / (d * d)
            }
            ProfileSource::Polynomial(a) => a
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * r + k as f64 * c),
            ProfileSource::Expression { derivative, .. } => derivative.eval(r),
            ProfileSource::Samples(s) => s.deriv(r),
        };
        let d = self.scale * raw;
        if d.is_finite() {
            d
        } else {
            self.fd_deriv(r)
        }
    }

    pub fn fd_deriv(&self, r: f64) -> f64 {
        let h = FD_STEP;
        (-self.eval(r + 2.0 * h) + 8.0 * self.eval(r + h) - 8.0 * self.eval(r - h)
            + self.eval(r - 2.0 * h))
            / (12.0 * h)
    }

    /// Checks `c > 0` and derivative consistency on a uniform grid.
    pub fn validate(&self, grid: usize, tol: f64) -> Result<()> {
        for r in grid_points(grid) {
            let c = self.eval(r);
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidProfile { r, value: c });
            }
            let d = self.deriv(r);
            let fd = self.fd_deriv(r);
            if (d - fd).abs() > tol * (1.0 + d.abs()) {
                return Err(Error::Invalid(format!(
                    "c'({r}) = {d} disagrees with finite difference {fd}"
                )));
            }
        }
        Ok(())
    }

    pub fn rho(&self) -> RhoFunction {
        RhoFunction {
            profile: self.clone(),
        }
    }

    /// Scalar second fundamental form of the boundary sphere, from the
    /// boundary-normal-coordinate formula `II = −½ ∂₀ g_T` applied to a unit
    /// tangent vector. The tangential metric of the sphere at radius `r` is
    /// `ρ(r)² g_S` and `dr/dx⁰ = −c`.
    pub fn boundary_second_fundamental_form(&self) -> f64 {
        let rho = self.rho();
        let (rho1, drho1) = (rho.eval(1.0), rho.deriv(1.0));
        let dg_dr = 2.0 * rho1 * drho1;
        let dr_dx0 = -self.eval(1.0);
        -0.5 * dg_dr * dr_dx0 / (rho1 * rho1)
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c(r) = {}", self.label())
    }
}

/// `ρ(r) = r / c(r)`.
#[derive(Debug, Clone)]
pub struct RhoFunction {
    profile: RadialProfile,
}

impl RhoFunction {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn eval(&self, r: f64) -> f64 {
        r / self.profile.eval(r)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let c = self.profile.eval(r);
        (c - r * self.profile.deriv(r)) / (c * c)
    }

    /// `ρ(b) − ρ(a)`, integrating `ρ′` over short intervals so the result
    /// keeps full relative accuracy as `b − a → 0`.
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        self.increment_by(a, b - a)
    }

    /// `ρ(a + δ) − ρ(a)` with `δ` taken as exact rather than through the
    /// rounded endpoint `a + δ`.
    pub fn increment_by(&self, a: f64, delta: f64) -> f64 {
        if delta.abs() > 0.05 {
            return self.eval(a + delta) - self.eval(a);
        }
        quad::integrate(|t| self.deriv(a + t), 0.0, delta, Tol::new(0.0, 1e-14))
            .unwrap_or_else(|_| self.eval(a + delta) - self.eval(a))
    }

    /// `ρ(1) − ρ(r)`.
    pub fn gap(&self, r: f64) -> f64 {
        self.increment(r, 1.0)
    }

    /// `ρ(1) − ρ(1 − δ)` for a boundary gap `δ`.
    pub fn gap_from_boundary(&self, delta: f64) -> f64 {
        self.increment_by(1.0 - delta, delta)
    }

    /// Solves `ρ(r) = p` on `[0, 1]` to full precision by safeguarded Newton
    /// inside a shrinking bracket. Assumes monotone `ρ`.
    pub(crate) fn invert(&self, p: f64) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = 1.0;
        let (flo, fhi) = (-p, self.eval(1.0) - p);
        if flo > 0.0 || fhi < 0.0 {
            return Err(Error::OutOfRange {
                what: "rho value",
                value: p,
                range: "[0, rho(1)]",
            });
        }
        let mut x = (p / self.eval(1.0)).clamp(0.0, 1.0);
        for _ in 0..200 {
            let fx = self.eval(x) - p;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.deriv(x);
            let newton = x - fx / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
                || hi - lo <= 2.0 * f64::EPSILON * hi
            {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

fn grid_points(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HerglotzOutcome {
    Pass { min_derivative: f64 },
    Fail { r: f64, derivative: f64 },
}

impl HerglotzOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, HerglotzOutcome::Pass { .. })
    }
}

/// Tests `d/dr (r/c(r)) > 0` on a uniform grid of `grid_size` points.
pub fn herglotz_check(profile: &RadialProfile, grid_size: usize) -> Result<HerglotzOutcome> {
    let rho = profile.rho();
    let mut min_derivative = f64::INFINITY;
    for r in grid_points(grid_size) {
        let c = profile.eval(r);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidProfile { r, value: c });
        }
        let d = rho.deriv(r);
        if !(d > 0.0) {
            return Ok(HerglotzOutcome::Fail { r, derivative: d });
        }
        min_derivative = min_derivative.min(d);
    }
    Ok(HerglotzOutcome::Pass { min_derivative })
}

pub(crate) fn require_herglotz(profile: &RadialProfile) -> Result<()> {
    match herglotz_check(profile, 257)? {
        HerglotzOutcome::Pass { .. } => Ok(()),
        HerglotzOutcome::Fail { r, derivative } => Err(Error::HerglotzViolation { r, derivative }),
    }
}

/// The radius `s` at which a geodesic with Clairaut constant `p` turns,
/// i.e. the unique solution of `ρ(s) = p`.
pub fn turning_radius(rho: &RhoFunction, p: f64) -> Result<f64> {
    let rho1 = rho.eval(1.0);
    if !(p > 0.0 && p < rho1) {
        return Err(Error::OutOfRange {
            what: "Clairaut constant",
            value: p,
            range: "(0, rho(1))",
        });
    }
    require_herglotz(rho.profile())?;
    let s = rho.invert(p)?;
    let d = rho.deriv(s);
    if !(d > 0.0) || (rho.eval(s) - p).abs() > 1e-12 * rho1 {
        return Err(Error::HerglotzViolation { r: s, derivative: d });
    }
    Ok(s)
}

/// Metric distance from the sphere of radius `r` to the boundary,
/// `∫_r^1 dt / c(t)`.
pub fn boundary_distance(profile: &RadialProfile, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: r,
            range: "[0, 1]",
        });
    }
    if r == 1.0 {
        return Ok(0.0);
    }
    if let ProfileSource::Constant(c) = profile.source {
        return Ok((1.0 - r) / (c * profile.scale));
    }
    quad::integrate(|t| 1.0 / profile.eval(t), r, 1.0, Tol::new(0.0, 1e-13))
}

/// `∫_{1−δ}^1 dt / c(t)` for a boundary gap `δ ∈ [0, 1]`, accurate to full
/// relative precision for tiny `δ`.
pub fn boundary_distance_from_gap(profile: &RadialProfile, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::OutOfRange {
            what: "boundary gap",
            value: delta,
            range: "[0, 1]",
        });
    }
    if let ProfileSource::Constant(c) = profile.source {
        return Ok(delta / (c * profile.scale));
    }
    if delta > 0.05 {
        return boundary_distance(profile, 1.0 - delta);
    }
    quad::integrate(|t| 1.0 / profile.eval(1.0 - t), 0.0, delta, Tol::new(0.0, 1e-13))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChordKind {
    /// Geodesic of the radial metric with the given turning radius.
    Radial { turning_radius: f64 },
    /// Euclidean line `⟨x, v_θ⟩ = r`.
    Line { r: f64, theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicChord {
    pub kind: ChordKind,
    pub endpoints: [[f64; 2]; 2],
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub position: [f64; 2],
    /// Euclidean components of `dγ/dt`, `t` being metric arclength.
    pub velocity: [f64; 2],
}

/// Hamiltonian form of the geodesic flow of `c⁻² g_Eucl`:
/// `ẋ = c² p`, `ṗ = −c ∇c |p|²`. Unit metric speed means `c|p| = 1`.
struct GeodesicFlow<'a> {
    profile: &'a RadialProfile,
}

impl Autonomous<4> for GeodesicFlow<'_> {
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let (x, z, px, pz) = (y[0], y[1], y[2], y[3]);
        let r = x.hypot(z);
        let c = self.profile.eval(r);
        let p2 = px * px + pz * pz;
        let (gx, gz) = if r > 1e-300 {
            let dc = self.profile.deriv(r);
            (dc * x / r, dc * z / r)
        } else {
            (0.0, 0.0)
        };
        [c * c * px, c * c * pz, -c * gx * p2, -c * gz * p2]
    }
}

/// A geodesic traced from a boundary point until it leaves the ball.
#[derive(Debug, Clone)]
pub struct TracedGeodesic {
    profile: RadialProfile,
    tol: f64,
    // (t, [x, y, px, py]) at accepted steps; last entry is the exit point
    states: Vec<(f64, [f64; 4])>,
    pub exited: bool,
}

impl TracedGeodesic {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// Integrator tolerance the trace was computed with.
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Metric length of the geodesic.
    pub fn length(&self) -> f64 {
        self.states.last().map(|s| s.0).unwrap_or(0.0)
    }

    pub fn exit_point(&self) -> [f64; 2] {
        let s = self.states.last().expect("trace has samples").1;
        [s[0], s[1]]
    }

    pub fn start_point(&self) -> [f64; 2] {
        let s = self.states[0].1;
        [s[0], s[1]]
    }

    fn sample_from_state(&self, t: f64, y: &[f64; 4]) -> TraceSample {
        let c = self.profile.eval(y[0].hypot(y[1]));
        TraceSample {
            t,
            position: [y[0], y[1]],
            velocity: [c * c * y[2], c * c * y[3]],
        }
    }

    /// Samples at the integrator's accepted steps.
    pub fn samples(&self) -> Vec<TraceSample> {
        self.states
            .iter()
            .map(|(t, y)| self.sample_from_state(*t, y))
            .collect()
    }

    /// `n ≥ 2` samples at uniform arclength spacing, endpoints included.
    pub fn resample(&self, n: usize) -> Vec<TraceSample> {
        let n = n.max(2);
        let len = self.length();
        (0..n)
            .map(|i| {
                let t = len * i as f64 / (n - 1) as f64;
                let y = self.state_at(t);
                self.sample_from_state(t, &y)
            })
            .collect()
    }

    fn nearest_state(&self, t: f64) -> (f64, [f64; 4]) {
        let k = self.states.partition_point(|s| s.0 <= t);
        let candidates = [k.saturating_sub(1), k.min(self.states.len() - 1)];
        candidates
            .iter()
            .map(|&i| self.states[i])
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .expect("non-empty")
    }

    /// Displacement of the state over arclength `h` from `y0`.
    fn displacement(&self, y0: &[f64; 4], h: f64) -> [f64; 4] {
        if h == 0.0 {
            return [0.0; 4];
        }
        let flow = GeodesicFlow {
            profile: &self.profile,
        };
        // stored steps were accepted at the trace tolerance; a shorter step
        // is at least as accurate
        ode::increment(&flow, y0, h)
    }

    /// State at arclength `t`, by one integrator step from the nearest
    /// stored state (forward or backward).
    fn state_at(&self, t: f64) -> [f64; 4] {
        let (t0, y0) = self.nearest_state(t);
        let d = self.displacement(&y0, t - t0);
        std::array::from_fn(|i| y0[i] + d[i])
    }

    /// `1 − |γ(t)|`, formed from the displacement relative to the nearest
    /// stored state so it keeps relative precision next to the boundary.
    pub fn boundary_gap_at(&self, t: f64) -> f64 {
        let (t0, y0) = self.nearest_state(t);
        let d = self.displacement(&y0, t - t0);
        let r0 = y0[0].hypot(y0[1]);
        let one_minus_r0_sq = (1.0 - r0) * (1.0 + r0);
        let one_minus_r_sq =
            one_minus_r0_sq - 2.0 * (y0[0] * d[0] + y0[1] * d[1]) - (d[0] * d[0] + d[1] * d[1]);
        let r = (y0[0] + d[0]).hypot(y0[1] + d[1]);
        one_minus_r_sq / (1.0 + r)
    }

    pub fn position_at(&self, t: f64) -> [f64; 2] {
        let y = self.state_at(t);
        [y[0], y[1]]
    }

    /// Clairaut constant `x × p`, which equals `ρ(|x|) sin α`.
    pub fn angular_momentum(&self) -> f64 {
        let y = self.states[0].1;
        y[0] * y[3] - y[1] * y[2]
    }

    /// `ρ(|x|) sin α` evaluated from position and velocity.
    pub fn clairaut(&self, s: &TraceSample) -> f64 {
        let r = s.position[0].hypot(s.position[1]);
        let speed = s.velocity[0].hypot(s.velocity[1]);
        if r == 0.0 || speed == 0.0 {
            return 0.0;
        }
        let cross = s.position[0] * s.velocity[1] - s.position[1] * s.velocity[0];
        self.profile.rho().eval(r) * cross / (r * speed)
    }

    /// `|γ̇|_g = |γ̇|_Eucl / c`.
    pub fn metric_speed(&self, s: &TraceSample) -> f64 {
        let r = s.position[0].hypot(s.position[1]);
        s.velocity[0].hypot(s.velocity[1]) / self.profile.eval(r)
    }

    /// Largest deviation of the Clairaut quantity from its initial value.
    pub fn clairaut_drift(&self) -> f64 {
        let samples = self.samples();
        let c0 = self.clairaut(&samples[0]);
        samples
            .iter()
            .map(|s| (self.clairaut(s) - c0).abs())
            .fold(0.0, f64::max)
    }

    pub fn speed_drift(&self) -> f64 {
        self.samples()
            .iter()
            .map(|s| (self.metric_speed(s) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest Euclidean radius along the trace, `(t, |γ(t)|)`.
    pub fn min_radius(&self) -> (f64, f64) {
        let radius = |t: f64| {
            let p = self.position_at(t);
            p[0].hypot(p[1])
        };
        let k = self
            .states
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let ra = a.1 .1[0].hypot(a.1 .1[1]);
                let rb = b.1 .1[0].hypot(b.1 .1[1]);
                ra.total_cmp(&rb)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut a = self.states[k.saturating_sub(1)].0;
        let mut b = self.states[(k + 1).min(self.states.len() - 1)].0;
        // golden section
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (radius(x1), radius(x2));
        for _ in 0..200 {
            if b - a <= 1e-14 * (1.0 + b.abs()) {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = radius(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = radius(x2);
            }
        }
        let t = 0.5 * (a + b);
        (t, radius(t))
    }

    pub fn chord(&self) -> GeodesicChord {
        let s = self.min_radius().1;
        GeodesicChord {
            kind: ChordKind::Radial { turning_radius: s },
            endpoints: [self.start_point(), self.exit_point()],
            length: self.length(),
        }
    }

    /// CSV with columns `t,x,y,speed,clairaut`.
    pub fn to_csv(&self, samples: &[TraceSample]) -> String {
        let mut out = String::from("t,x,y,speed,clairaut\n");
        for s in samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.t,
                s.position[0],
                s.position[1],
                self.metric_speed(s),
                self.clairaut(s)
            ));
        }
        out
    }
}

/// Traces the unit-speed geodesic leaving the boundary point `start` in the
/// inward direction `direction` until it exits the ball.
pub fn trace_geodesic(
    profile: &RadialProfile,
    start: [f64; 2],
    direction: [f64; 2],
    tol: f64,
) -> Result<TracedGeodesic> {
    trace_geodesic_with_limit(profile, start, direction, tol, MAX_TRACE_STEPS)
}

pub fn trace_geodesic_with_limit(
    profile: &RadialProfile,
    start: [f64; 2],
    direction: [f64; 2],
    tol: f64,
    max_steps: usize,
) -> Result<TracedGeodesic> {
    let r0 = start[0].hypot(start[1]);
    if (r0 - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("start point has radius {r0}, expected 1")));
    }
    let dn = direction[0].hypot(direction[1]);
    if dn == 0.0 || !dn.is_finite() {
        return Err(Error::Invalid("zero direction".into()));
    }
    let d = [direction[0] / dn, direction[1] / dn];
    if d[0] * start[0] + d[1] * start[1] >= 0.0 {
        return Err(Error::Invalid("direction does not point into the ball".into()));
    }
    let start = [start[0] / r0, start[1] / r0];
    let c1 = profile.eval(1.0);
    let flow = GeodesicFlow { profile };
    let tols = Tolerances { atol: tol, rtol: tol };
    let mut y = [start[0], start[1], d[0] / c1, d[1] / c1];
    let mut t = 0.0;
    let mut h = 1e-3;
    let mut states = vec![(t, y)];
    for _ in 0..max_steps {
        let (y1, err) = ode::step(&flow, &y, h, tols);
        if err <= 1.0 {
            let r1 = y1[0].hypot(y1[1]);
            if r1 >= 1.0 {
                // bisect the step length for the crossing, keep the inner side
                let (mut lo, mut hi) = (0.0, h);
                let mut inner = y;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let ym = ode::step(&flow, &y, mid, tols).0;
                    let rm = ym[0].hypot(ym[1]);
                    if rm < 1.0 {
                        lo = mid;
                        inner = ym;
                        if 1.0 - rm < 1e-15 {
                            break;
                        }
                    } else {
                        hi = mid;
                    }
                }
                if lo > 0.0 {
                    states.push((t + lo, inner));
                }
                return Ok(TracedGeodesic {
                    profile: profile.clone(),
                    tol,
                    states,
                    exited: true,
                });
            }
            t += h;
            y = y1;
            states.push((t, y));
        }
        h = ode::next_step(h, err).min(0.05);
    }
    Err(Error::NonExit { steps: max_steps })
}

/// Boundary point and inward direction of the geodesic whose Clairaut
/// constant is `ρ(s)`; `s = 0` gives the diameter.
pub fn chord_initial_data(profile: &RadialProfile, s: f64) -> Result<([f64; 2], [f64; 2])> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::OutOfRange {
            what: "turning radius",
            value: s,
            range: "[0, 1)",
        });
    }
    let rho = profile.rho();
    let (rho_s, rho1) = (rho.eval(s), rho.eval(1.0));
    let sin_a = rho_s / rho1;
    let cos_a = (rho.gap(s) * (rho1 + rho_s)).sqrt() / rho1;
    Ok(([1.0, 0.0], [-cos_a, sin_a]))
}

pub fn trace_chord(profile: &RadialProfile, s: f64, tol: f64) -> Result<TracedGeodesic> {
    let (start, dir) = chord_initial_data(profile, s)?;
    trace_geodesic(profile, start, dir, tol)
}

/// `∫ f(γ(t)) dt` in metric arclength. The endpoint blow-up of `f` is
/// absorbed by the both-endpoint square-root kernel.
pub fn integrate_along_trace(trace: &TracedGeodesic, density: &BlowupDensity) -> Result<f64> {
    integrate_along_trace_with(trace, density, 1e-11)
}

/// [`integrate_along_trace`] at absolute and relative tolerance `tol`.
pub fn integrate_along_trace_with(trace: &TracedGeodesic, density: &BlowupDensity, tol: f64) -> Result<f64> {
    if !trace.exited {
        return Err(Error::Invalid("trace did not exit".into()));
    }
    let len = trace.length();
    let failed = RefCell::new(None);
    let g = SingularIntegrand::both(|n: quad::Node| {
        let t = if n.from_lo <= n.to_hi { n.from_lo } else { len - n.to_hi };
        let p = trace.position_at(t);
        let v = match density.eval_at_gap(trace.boundary_gap_at(t).max(0.0)) {
            Some(v) => v,
            None => density.eval(&p),
        };
        if !v.is_finite() && n.from_lo.min(n.to_hi) < 1e-14 * len {
            // rounding put the node on the boundary sphere itself
            return 0.0;
        }
        if !v.is_finite() {
            failed.borrow_mut().get_or_insert_with(|| p.to_vec());
            return 0.0;
        }
        v * (n.from_lo * n.to_hi).sqrt()
    });
    let value = quad::integrate_singular(&g, 0.0, len, Tol::new(tol, tol))?;
    if let Some(at) = failed.into_inner() {
        return Err(Error::Evaluation { at });
    }
    Ok(value)
}
