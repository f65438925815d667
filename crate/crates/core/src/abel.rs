//! The Abel-type transform of radial densities along the geodesics of a
//! Herglotz metric, its explicit inversion, and the density whose transform
//! is identically one.
//!
//! A geodesic with turning radius `s` has Clairaut constant `p = ρ(s)`, and
//!
//! ```text
//! 𝒜f(s) = 2 ∫_s^1 f(r) [1 − (ρ(s)/ρ(r))²]^{-1/2} dr / c(r).
//! ```

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::batch::{self, Execution};
use crate::boundary::BlowupDensity;
use crate::error::{Error, Result};
use crate::metric::{self, RadialProfile, RhoFunction};
use crate::quad::{self, Node, SingularIntegrand, Tol};

/// Accuracy of [`abel_forward`].
pub const FORWARD_TOL: f64 = 1e-12;
/// Accuracy of the inner integral of [`abel_inverse`].
pub const INVERSE_TOL: f64 = 1e-13;
/// Relative step `δ = STEP · (1 − r)` of the outer derivative in [`abel_inverse`].
pub const INVERSE_STEP: f64 = 1e-4;

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
// f evaluated from (r, 1 − r), the second argument being authoritative near r = 1
type GapFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

// below this distance to r = 1 the boundary factor is replaced by its limit
const EDGE: f64 = 1e-13;

/// A radial function `f(r)` on `[0, 1)`, optionally carrying the boundary
/// factorization `f = D^{-1/2} w` with `D` the distance to the boundary.
#[derive(Clone)]
pub struct RadialDensity {
    profile: RadialProfile,
    label: String,
    value: GapFn,
    // f(r) · √(ρ(1) − ρ(r)), bounded up to r = 1
    edge: Option<RadialFn>,
}

impl std::fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialDensity")
            .field("label", &self.label)
            .field("profile", &self.profile.label())
            .field("blowup", &self.edge.is_some())
            .finish()
    }
}

impl RadialDensity {
    /// A density bounded on `[0, 1]`.
    pub fn new(
        profile: &RadialProfile,
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            profile: profile.clone(),
            label: label.into(),
            value: Arc::new(move |r, _| f(r)),
            edge: None,
        }
    }

    /// `f = D^{-1/2} w` with `w` smooth up to `r = 1`.
    pub fn with_blowup(
        profile: &RadialProfile,
        label: impl Into<String>,
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let w: RadialFn = Arc::new(w);
        let rho = profile.rho();
        let limit = (rho.deriv(1.0) * profile.eval(1.0)).sqrt();
        let (p1, w1) = (profile.clone(), w.clone());
        let edge: RadialFn = Arc::new(move |r| {
            if 1.0 - r < EDGE {
                return w1(r) * limit;
            }
            let d = metric::boundary_distance(&p1, r).unwrap_or(f64::NAN);
            w1(r) * (p1.rho().gap(r) / d).sqrt()
        });
        let p2 = profile.clone();
        Self {
            profile: profile.clone(),
            label: label.into(),
            value: Arc::new(move |r, delta| {
                w(r) / metric::boundary_distance_from_gap(&p2, delta.max(0.0))
                    .unwrap_or(f64::NAN)
                    .sqrt()
            }),
            edge: Some(edge),
        }
    }

    /// Density given through `E(r) = f(r) √(ρ(1) − ρ(r))`.
    fn from_edge_factor(
        profile: &RadialProfile,
        label: impl Into<String>,
        edge: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let edge: RadialFn = Arc::new(edge);
        let (rho, e) = (profile.rho(), edge.clone());
        Self {
            profile: profile.clone(),
            label: label.into(),
            value: Arc::new(move |r, delta| e(r) / rho.gap_from_boundary(delta.max(0.0)).sqrt()),
            edge: Some(edge),
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.value)(r, 1.0 - r)
    }

    /// `f(1 − δ)`, exact in `δ` for points next to the boundary.
    pub fn eval_at_gap(&self, delta: f64) -> f64 {
        (self.value)(1.0 - delta, delta)
    }

    pub fn has_blowup(&self) -> bool {
        self.edge.is_some()
    }

    /// `f √(ρ(1) − ρ(r))`, bounded up to the boundary.
    pub fn edge_factor(&self, r: f64) -> Option<f64> {
        self.edge.as_ref().map(|e| e(r))
    }

    /// The smooth factor `w = f √D` of the blow-up factorization, including
    /// its value at `r = 1`.
    pub fn weight(&self, r: f64) -> Option<f64> {
        let e = self.edge.as_ref()?(r);
        let rho = self.profile.rho();
        if 1.0 - r < EDGE {
            return Some(e / (rho.deriv(1.0) * self.profile.eval(1.0)).sqrt());
        }
        let d = metric::boundary_distance(&self.profile, r).ok()?;
        Some(e * (d / rho.gap(r)).sqrt())
    }

    /// `∫₀¹ |f(r)| r^{n−1} dr`, the radial part of the `L¹` norm in `ℝⁿ`.
    pub fn radial_l1(&self, n: usize) -> Result<f64> {
        let power = n.saturating_sub(1) as i32;
        let value = match &self.edge {
            None => quad::integrate(|r| self.eval(r).abs() * r.powi(power), 0.0, 1.0, 1e-10)?,
            Some(edge) => {
                let rho = self.profile.rho();
                let g = SingularIntegrand::right(|n: Node| {
                    let r = n.x;
                    let e = if n.to_hi < EDGE {
                        edge(r) / rho.deriv(1.0).sqrt()
                    } else {
                        edge(r) * (n.to_hi / rho.gap(r)).sqrt()
                    };
                    e.abs() * r.powi(power)
                });
                quad::integrate_singular(&g, 0.0, 1.0, 1e-10)?
            }
        };
        if !value.is_finite() {
            return Err(Error::Invalid(format!("density {} is not integrable", self.label)));
        }
        Ok(value)
    }

    /// The map `x ↦ f(|x|)` with its boundary factorization in any dimension.
    pub fn to_blowup_density(&self) -> BlowupDensity {
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let (a, b, c, d) = (self.clone(), self.profile.clone(), self.clone(), self.clone());
        let density = BlowupDensity::new(
            move |x| a.eval(norm(x)),
            move |x| metric::boundary_distance(&b, norm(x).min(1.0)).unwrap_or(f64::NAN),
        )
        .with_radial_form(move |delta| d.eval_at_gap(delta));
        if self.has_blowup() {
            density.with_weight(move |x| c.weight(norm(x).min(1.0)).unwrap_or(f64::NAN))
        } else {
            density
        }
    }

    /// CSV with columns `r,f,w` on `r = k/grid`, `k = 0..grid`; the point
    /// `r = 1` is omitted since `f` blows up there. `w` is empty for
    /// densities without a boundary factorization.
    pub fn sample_csv(&self, grid: usize) -> String {
        let mut out = String::from("r,f,w\n");
        for k in 0..grid.max(1) {
            let r = k as f64 / grid.max(1) as f64;
            let w = self.weight(r).map(|w| w.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", r, self.eval(r), w);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelTransformValue {
    pub s: f64,
    pub value: f64,
}

/// `𝒜f(s)` for `s ∈ [0, 1)`; `s = 0` is the diameter.
pub fn abel_forward(f: &RadialDensity, profile: &RadialProfile, s: f64) -> Result<f64> {
    abel_forward_tol(f, profile, s, FORWARD_TOL)
}

pub fn abel_forward_tol(f: &RadialDensity, profile: &RadialProfile, s: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::OutOfRange {
            what: "turning radius",
            value: s,
            range: "[0, 1)",
        });
    }
    if f.has_blowup() && !f.profile.same_metric(profile) {
        return Err(Error::Invalid(format!(
            "density {} is factorized for a different metric than {}",
            f.label,
            profile.label()
        )));
    }
    metric::require_herglotz(profile)?;
    let rho = profile.rho();
    let tol = Tol::new(tol, tol);
    if s == 0.0 {
        return diameter_integral(f, profile, &rho, tol);
    }
    let rho1 = rho.eval(1.0);
    let p = rho.eval(s);
    let failed = RefCell::new(None);
    // u = ρ(r): 2 ∫_p^{ρ(1)} f u / (c ρ′ √(u + p)) (u − p)^{-1/2} du
    let smooth = |n: Node, blowup: bool| {
        let u = if n.from_lo <= n.to_hi { p + n.from_lo } else { rho1 - n.to_hi };
        let r = match rho.invert(u) {
            Ok(r) => r,
            Err(e) => {
                failed.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        let fr = if blowup { f.edge_factor(r).unwrap_or(f64::NAN) } else { f.eval(r) };
        let v = 2.0 * fr * u / (profile.eval(r) * rho.deriv(r) * (u + p).sqrt());
        if !v.is_finite() {
            failed
                .borrow_mut()
                .get_or_insert(Error::Evaluation { at: vec![r] });
            return 0.0;
        }
        v
    };
    let value = if f.has_blowup() {
        quad::integrate_singular(&SingularIntegrand::both(|n| smooth(n, true)), p, rho1, tol)?
    } else {
        quad::integrate_singular(&SingularIntegrand::left(|n| smooth(n, false)), p, rho1, tol)?
    };
    match failed.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `2 ∫₀¹ f(r) dr / c(r)` along a diameter.
fn diameter_integral(f: &RadialDensity, profile: &RadialProfile, rho: &RhoFunction, tol: Tol) -> Result<f64> {
    match &f.edge {
        None => quad::integrate(|r| 2.0 * f.eval(r) / profile.eval(r), 0.0, 1.0, tol),
        Some(edge) => {
            let d1 = rho.deriv(1.0);
            let g = SingularIntegrand::right(|n: Node| {
                let r = n.x;
                let ratio = if n.to_hi < EDGE { 1.0 / d1 } else { n.to_hi / rho.gap(r) };
                2.0 * edge(r) * ratio.sqrt() / profile.eval(r)
            });
            quad::integrate_singular(&g, 0.0, 1.0, tol)
        }
    }
}

pub fn abel_forward_grid(
    exec: Execution,
    f: &RadialDensity,
    profile: &RadialProfile,
    ss: &[f64],
) -> Result<Vec<AbelTransformValue>> {
    batch::try_map(exec, ss, |&s| {
        abel_forward(f, profile, s).map(|value| AbelTransformValue { s, value })
    })
}

/// Which factor multiplies the kernel of the inner inversion integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionKernel {
    /// `ρ′(z)/ρ(z)`, evaluated at the integration variable.
    #[default]
    PointwiseZ,
    /// `ρ′(x)/ρ(x)`, frozen at the outer variable.
    PrintedX,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions {
    pub kernel: InversionKernel,
    pub tol: f64,
    pub step: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            kernel: InversionKernel::PointwiseZ,
            tol: INVERSE_TOL,
            step: INVERSE_STEP,
        }
    }
}

/// `F(x) = ∫_x^1 k(x, z) [(ρ(z)/ρ(x))² − 1]^{-1/2} A(z) dz`, integrated in
/// `u = ρ(z)/ρ(x)`.
pub fn inversion_integral<A>(
    a: &A,
    profile: &RadialProfile,
    x: f64,
    kernel: InversionKernel,
    tol: f64,
) -> Result<f64>
where
    A: Fn(f64) -> f64 + ?Sized,
{
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: x,
            range: "(0, 1)",
        });
    }
    let rho = profile.rho();
    let rx = rho.eval(x);
    let upper = rho.eval(1.0) / rx;
    if !(upper > 1.0) {
        return Ok(0.0);
    }
    let dx = rho.deriv(x);
    let failed = RefCell::new(None);
    let g = SingularIntegrand::left(|n: Node| {
        let u = if n.from_lo <= n.to_hi { 1.0 + n.from_lo } else { upper - n.to_hi };
        let z = match rho.invert(u * rx) {
            Ok(z) => z,
            Err(e) => {
                failed.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        let az = a(z);
        if !az.is_finite() {
            failed
                .borrow_mut()
                .get_or_insert(Error::Evaluation { at: vec![z] });
            return 0.0;
        }
        match kernel {
            InversionKernel::PointwiseZ => az / (u * (u + 1.0).sqrt()),
            InversionKernel::PrintedX => az * dx / (rho.deriv(z) * (u + 1.0).sqrt()),
        }
    });
    let value = quad::integrate_singular(&g, 1.0, upper, Tol::new(tol, tol))?;
    match failed.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Recovers `f(r) = −(c(r)/π) F′(r)` from the transform `A = 𝒜f`.
pub fn abel_inverse<A>(a: &A, profile: &RadialProfile, r: f64) -> Result<f64>
where
    A: Fn(f64) -> f64 + ?Sized,
{
    abel_inverse_with(a, profile, r, InverseOptions::default())
}

pub fn abel_inverse_with<A>(a: &A, profile: &RadialProfile, r: f64, opts: InverseOptions) -> Result<f64>
where
    A: Fn(f64) -> f64 + ?Sized,
{
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: r,
            range: "(0, 1)",
        });
    }
    metric::require_herglotz(profile)?;
    let delta = opts.step * (1.0 - r);
    if delta < 64.0 * f64::EPSILON * r || r - delta <= 0.0 {
        return Err(Error::StepUnderflow { r });
    }
    let big_f = |x: f64| inversion_integral(a, profile, x, opts.kernel, opts.tol);
    let central = |h: f64| -> Result<f64> { Ok((big_f(r + h)? - big_f(r - h)?) / (2.0 * h)) };
    let d1 = central(delta)?;
    let d2 = central(0.5 * delta)?;
    let derivative = (4.0 * d2 - d1) / 3.0;
    Ok(-profile.eval(r) / PI * derivative)
}

pub fn abel_inverse_grid<A>(
    exec: Execution,
    a: &A,
    profile: &RadialProfile,
    rs: &[f64],
) -> Result<Vec<f64>>
where
    A: Fn(f64) -> f64 + Sync + ?Sized,
{
    batch::try_map(exec, rs, |&r| abel_inverse(a, profile, r))
}

/// Deviation of `∫_x^1 (ρ′(z)/ρ(z)) [(ρ(z)/ρ(x))² − 1]^{-1/2} dz` from
/// `π/2 − arcsin(ρ(x)/ρ(1))`. The integral is taken in `z` directly.
pub fn arcsin_identity_check(profile: &RadialProfile, x: f64) -> Result<f64> {
    Ok(arcsin_identity_terms(profile, x)?.deviation())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcsinTerms {
    pub integral: f64,
    pub closed_form: f64,
}

impl ArcsinTerms {
    pub fn deviation(&self) -> f64 {
        (self.integral - self.closed_form).abs()
    }
}

pub fn arcsin_identity_terms(profile: &RadialProfile, x: f64) -> Result<ArcsinTerms> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: x,
            range: "(0, 1]",
        });
    }
    metric::require_herglotz(profile)?;
    let rho = profile.rho();
    let (rx, rho1) = (rho.eval(x), rho.eval(1.0));
    let closed_form = FRAC_PI_2 - (rx / rho1).min(1.0).asin();
    if x == 1.0 {
        return Ok(ArcsinTerms {
            integral: 0.0,
            closed_form,
        });
    }
    let g = SingularIntegrand::left(|n: Node| {
        let z = n.x;
        let rz = rho.eval(z);
        let inc = rho.increment_by(x, n.from_lo);
        let ratio = if inc > 0.0 { n.from_lo / inc } else { 1.0 / rho.deriv(x) };
        rho.deriv(z) / rz * rx / (rz + rx).sqrt() * ratio.sqrt()
    });
    let integral = quad::integrate_singular(&g, x, 1.0, Tol::new(1e-13, 1e-13))?;
    Ok(ArcsinTerms {
        integral,
        closed_form,
    })
}

/// The radial density with `𝒜f ≡ 1`:
/// `f(r) = c ρ′ / (π √(ρ(1)² − ρ(r)²))`, equivalently
/// `(c − r c′) / (π c √(c(1)⁻² − (r/c)²))`.
pub fn synthesize_constant(profile: &RadialProfile) -> Result<RadialDensity> {
    metric::require_herglotz(profile)?;
    let rho = profile.rho();
    let rho1 = rho.eval(1.0);
    let p = profile.clone();
    Ok(RadialDensity::from_edge_factor(
        profile,
        format!("constant-transform density for c(r) = {}", profile.label()),
        move |r| {
            let rho = p.rho();
            p.eval(r) * rho.deriv(r) / (PI * (rho1 + rho.eval(r)).sqrt())
        },
    ))
}
