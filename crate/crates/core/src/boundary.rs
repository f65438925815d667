//! Boundary asymptotics: the blow-up factorization `f = d^{-1/2} w`, the
//! chord estimator of the second fundamental form, integrals of `d^{-1/2}`
//! along short geodesics, and the near-tangent slice test for umbilicity.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{self, RadialProfile};
use crate::quad::{self, Node, SingularIntegrand};
use crate::xray2d::SupportFunction;

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A density near the boundary written as `f(x) = d(x, ∂M)^{-1/2} w(x)`.
#[derive(Clone)]
pub struct BlowupDensity {
    value: PointFn,
    distance: PointFn,
    weight: Option<PointFn>,
    radial: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for BlowupDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlowupDensity")
            .field("explicit_weight", &self.weight.is_some())
            .finish_non_exhaustive()
    }
}

impl BlowupDensity {
    /// `value` is `f`, `distance` is `d(·, ∂M)`; the weight defaults to `f √d`.
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        distance: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            distance: Arc::new(distance),
            weight: None,
            radial: None,
        }
    }

    /// Attaches `f` on the unit ball as a function of `1 − |x|`, so callers
    /// that know the boundary gap more accurately than the position can use it.
    pub fn with_radial_form(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.radial = Some(Arc::new(f));
        self
    }

    /// `f` at a point with `1 − |x| = gap`, when a radial form is attached.
    pub fn eval_at_gap(&self, gap: f64) -> Option<f64> {
        self.radial.as_ref().map(|f| f(gap))
    }

    /// Supplies `w` directly, for densities where `f √d` loses precision.
    pub fn with_weight(mut self, weight: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.weight = Some(Arc::new(weight));
        self
    }

    /// `1 / (π √(R² − |x − c|²))` on the Euclidean ball `B(c, R)`.
    pub fn euclidean_ball(center: Vec<f64>, radius: f64) -> Self {
        let rel = |x: &[f64], c: &[f64]| -> f64 {
            x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        };
        let (c1, c2, c3) = (center.clone(), center.clone(), center);
        Self::new(
            move |x| {
                let r = rel(x, &c1);
                1.0 / (PI * ((radius - r) * (radius + r)).sqrt())
            },
            move |x| radius - rel(x, &c2),
        )
        .with_weight(move |x| 1.0 / (PI * (radius + rel(x, &c3)).sqrt()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (self.distance)(x)
    }

    /// The smooth factor `w = f √d`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        match &self.weight {
            Some(w) => w(x),
            None => self.eval(x) * self.distance(x).max(0.0).sqrt(),
        }
    }
}

/// A convex body in `ℝⁿ` known through membership and boundary normals.
pub trait ConvexBody: Sync {
    fn dim(&self) -> usize;

    fn contains(&self, x: &[f64]) -> bool;

    /// Unit inward normal at a boundary point.
    fn inward_normal(&self, x: &[f64]) -> Vec<f64>;

    /// Exit parameter `t > 0` of the ray `o + t d` from an interior point,
    /// bracketed by doubling from `scale` and refined by bisection.
    fn ray_exit(&self, o: &[f64], d: &[f64], scale: f64) -> Result<f64> {
        let at = |t: f64| -> Vec<f64> { o.iter().zip(d).map(|(a, b)| a + t * b).collect() };
        if !self.contains(o) {
            return Err(Error::Probe(format!("probe origin {o:?} is outside the body")));
        }
        let mut inside = 0.0;
        let mut outside = scale.max(f64::MIN_POSITIVE);
        let mut doublings = 0;
        while self.contains(&at(outside)) {
            inside = outside;
            outside *= 2.0;
            doublings += 1;
            if doublings > 2000 || !outside.is_finite() {
                return Err(Error::Probe("ray does not leave the body".into()));
            }
        }
        for _ in 0..300 {
            let mid = 0.5 * (inside + outside);
            if mid <= inside || mid >= outside {
                break;
            }
            if self.contains(&at(mid)) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    }
}

/// `{x : φ(x) ≤ 0}` for a convex `φ`.
#[derive(Clone)]
pub struct ImplicitBody {
    dim: usize,
    phi: PointFn,
    grad: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
}

impl std::fmt::Debug for ImplicitBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImplicitBody").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl ImplicitBody {
    /// Gradients are taken by central differences.
    pub fn new(dim: usize, phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            phi: Arc::new(phi),
            grad: None,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Self {
        let c = center.clone();
        Self::new(center.len(), move |x| {
            let d2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            let d = d2.sqrt();
            (d - radius) * (d + radius)
        })
        .with_gradient(move |x| x.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect())
    }

    /// Axis-aligned ellipsoid `Σ xᵢ² / aᵢ² ≤ 1`.
    pub fn ellipsoid(semi_axes: Vec<f64>) -> Self {
        let a = semi_axes.clone();
        Self::new(semi_axes.len(), move |x| {
            x.iter().zip(&semi_axes).map(|(x, a)| (x / a) * (x / a)).sum::<f64>() - 1.0
        })
        .with_gradient(move |x| x.iter().zip(&a).map(|(x, a)| 2.0 * x / (a * a)).collect())
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        (self.phi)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let mut y = x.to_vec();
        (0..self.dim)
            .map(|i| {
                let h = 1e-6 * (1.0 + x[i].abs());
                y[i] = x[i] + h;
                let fp = self.phi(&y);
                y[i] = x[i] - h;
                let fm = self.phi(&y);
                y[i] = x[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    /// Boundary point on the ray from the interior point `origin` along `dir`,
    /// by Newton steps on `t ↦ φ(origin + t dir)` inside a bisection bracket.
    pub fn boundary_along(&self, origin: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let d: Vec<f64> = dir.iter().map(|x| x / norm).collect();
        let at = |t: f64| -> Vec<f64> { origin.iter().zip(&d).map(|(a, b)| a + t * b).collect() };
        if self.phi(origin) >= 0.0 {
            return Err(Error::Probe("ray origin is not interior".into()));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.phi(&at(hi)) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Probe("ray does not leave the body".into()));
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let x = at(t);
            let f = self.phi(&x);
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let slope: f64 = self.gradient(&x).iter().zip(&d).map(|(g, v)| g * v).sum();
            let newton = t - f / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs() || f == 0.0 {
                return Ok(at(next));
            }
            t = next;
        }
        Ok(at(t))
    }
}

impl ConvexBody for ImplicitBody {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.phi(x) <= 0.0
    }

    fn inward_normal(&self, x: &[f64]) -> Vec<f64> {
        let g = self.gradient(x);
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g.iter().map(|v| -v / n).collect()
    }
}

impl ConvexBody for SupportFunction {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, x: &[f64]) -> bool {
        SupportFunction::contains(self, [x[0], x[1]])
    }

    fn inward_normal(&self, x: &[f64]) -> Vec<f64> {
        let phi = self.normal_angle_at([x[0], x[1]]);
        vec![-phi.cos(), -phi.sin()]
    }
}

/// One chord `Ω ∩ (x + hν + ℝv)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordProbe {
    pub depth: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub h: f64,
    pub raw: f64,
    /// Extrapolation from this and all larger depths.
    pub extrapolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondFundamentalFormEstimate {
    pub value: f64,
    pub records: Vec<ConvergenceRecord>,
}

impl SecondFundamentalFormEstimate {
    /// CSV with columns `h,raw,extrapolated`.
    pub fn to_csv(&self) -> String {
        records_csv(&self.records)
    }
}

pub fn records_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from("h,raw,extrapolated\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.h, r.raw, r.extrapolated);
    }
    out
}

/// Least-squares limit of `y(h) ≈ L + b √h + c h` as `h → 0`.
///
/// With fewer than three points the value at the smallest depth is returned.
pub fn extrapolate_sqrt(hs: &[f64], ys: &[f64]) -> f64 {
    let n = hs.len().min(ys.len());
    if n == 0 {
        return f64::NAN;
    }
    if n < 3 {
        let k = (0..n).min_by(|&a, &b| hs[a].total_cmp(&hs[b])).unwrap_or(0);
        return ys[k];
    }
    // normalise the abscissa so the normal equations stay well conditioned
    let hmax = hs.iter().cloned().fold(0.0, f64::max);
    let rows: Vec<[f64; 3]> = hs[..n]
        .iter()
        .map(|h| {
            let q = (h / hmax).sqrt();
            [1.0, q, q * q]
        })
        .collect();
    least_squares::<3>(&rows, &ys[..n]).map(|c| c[0]).unwrap_or(f64::NAN)
}

/// Power law `err ≈ C h^p` fitted by linear regression in log-log
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub constant: f64,
}

pub fn fit_power_law(hs: &[f64], errors: &[f64]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errors)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit("need two positive errors for a rate fit".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Ok(RateFit {
        exponent,
        constant: (my - exponent * mx).exp(),
    })
}

fn least_squares<const K: usize>(rows: &[[f64; K]], ys: &[f64]) -> Option<[f64; K]> {
    let mut a = [[0.0; K]; K];
    let mut b = [0.0; K];
    for (row, y) in rows.iter().zip(ys) {
        for i in 0..K {
            b[i] += row[i] * y;
            for j in 0..K {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    solve(a, b)
}

fn solve<const K: usize>(mut a: [[f64; K]; K], mut b: [f64; K]) -> Option<[f64; K]> {
    for col in 0..K {
        let pivot = (col..K).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..K {
            let f = a[row][col] / a[col][col];
            for k in col..K {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; K];
    for i in (0..K).rev() {
        let s: f64 = (i + 1..K).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Invalid("zero direction".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn check_point<B: ConvexBody + ?Sized>(body: &B, x: &[f64], v: &[f64]) -> Result<()> {
    if x.len() != body.dim() || v.len() != body.dim() {
        return Err(Error::Invalid(format!(
            "point and direction must have dimension {}",
            body.dim()
        )));
    }
    Ok(())
}

/// Length of the chord through `x + hν` parallel to the tangent `v`.
pub fn chord_probe<B: ConvexBody + ?Sized>(body: &B, x: &[f64], v: &[f64], h: f64) -> Result<ChordProbe> {
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("depth {h} must be positive")));
    }
    let nu = body.inward_normal(x);
    let v = unit(v)?;
    let o: Vec<f64> = x.iter().zip(&nu).map(|(a, n)| a + h * n).collect();
    if !body.contains(&o) {
        return Err(Error::Probe(format!("depth {h} leaves the body")));
    }
    let back: Vec<f64> = v.iter().map(|a| -a).collect();
    let scale = h.sqrt();
    let t_plus = body.ray_exit(&o, &v, scale)?;
    let t_minus = body.ray_exit(&o, &back, scale)?;
    Ok(ChordProbe {
        depth: h,
        length: t_plus + t_minus,
    })
}

/// Estimates `II(v, v)` at the boundary point `x` from the chord lengths
/// `ℓ(h)` via `8h / ℓ² → II`.
pub fn estimate_ii_chords<B: ConvexBody + ?Sized>(
    body: &B,
    x: &[f64],
    v: &[f64],
    depths: &[f64],
) -> Result<SecondFundamentalFormEstimate> {
    check_point(body, x, v)?;
    if depths.is_empty() {
        return Err(Error::Invalid("no depths given".into()));
    }
    let mut hs: Vec<f64> = depths.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut raws = Vec::with_capacity(hs.len());
    let mut records = Vec::with_capacity(hs.len());
    for (i, &h) in hs.iter().enumerate() {
        let probe = chord_probe(body, x, v, h)?;
        raws.push(8.0 * h / (probe.length * probe.length));
        records.push(ConvergenceRecord {
            h,
            raw: raws[i],
            extrapolated: extrapolate_sqrt(&hs[..=i], &raws),
        });
    }
    let value = records.last().map(|r| r.extrapolated).unwrap_or(f64::NAN);
    if !(value > 0.0) {
        return Err(Error::Probe(format!(
            "non-positive curvature estimate {value}; body not strictly convex at x"
        )));
    }
    Ok(SecondFundamentalFormEstimate { value, records })
}

/// Where a short geodesic lives.
#[derive(Debug, Clone)]
pub enum ShortGeodesicSetting {
    /// Euclidean ball of the given radius centred at the origin.
    EuclideanBall { radius: f64 },
    /// The unit ball with metric `c(r)⁻² g_Eucl`.
    Radial(RadialProfile),
}

/// `∫ d(γ(t), ∂M)^{-1/2} dt` over the geodesic tangent to `v` at depth `h`
/// below the boundary point `x`, in arclength.
pub fn short_geodesic_integral(
    setting: &ShortGeodesicSetting,
    x: &[f64],
    v: &[f64],
    h: f64,
    tol: f64,
) -> Result<f64> {
    if x.len() != v.len() || x.len() < 2 {
        return Err(Error::Invalid("point and tangent must share a dimension ≥ 2".into()));
    }
    let xv: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let xn = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if xv.abs() > 1e-9 * xn * vn {
        return Err(Error::Invalid("direction is not tangent to the boundary".into()));
    }
    match setting {
        ShortGeodesicSetting::EuclideanBall { radius } => {
            let radius = *radius;
            if (xn - radius).abs() > 1e-9 * radius {
                return Err(Error::Invalid(format!("|x| = {xn} is not on the sphere of radius {radius}")));
            }
            if !(h > 0.0 && h < radius) {
                return Err(Error::OutOfRange {
                    what: "depth",
                    value: h,
                    range: "(0, R)",
                });
            }
            // chord at distance R − h from the centre; on it
            // R − |y| = (ℓ/2 − t)(ℓ/2 + t) / (R + |y|)
            let inner = radius - h;
            let half = (h * (2.0 * radius - h)).sqrt();
            let g = SingularIntegrand::both(|n: Node| {
                let t = if n.from_lo <= n.to_hi { n.from_lo - half } else { half - n.to_hi };
                (radius + inner.hypot(t)).sqrt()
            });
            quad::integrate_singular(&g, -half, half, tol)
        }
        ShortGeodesicSetting::Radial(profile) => {
            if (xn - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("|x| = {xn} is not on the unit sphere")));
            }
            let s = depth_to_radius(profile, h)?;
            let trace = metric::trace_chord(profile, s, 1e-13)?;
            let (p, q, g) = (profile.clone(), profile.clone(), profile.clone());
            let density = BlowupDensity::new(
                move |y| {
                    let r = y[0].hypot(y[1]).min(1.0);
                    1.0 / metric::boundary_distance(&p, r).unwrap_or(f64::NAN).sqrt()
                },
                move |y| metric::boundary_distance(&q, y[0].hypot(y[1]).min(1.0)).unwrap_or(f64::NAN),
            )
            .with_radial_form(move |delta| {
                1.0 / metric::boundary_distance_from_gap(&g, delta).unwrap_or(f64::NAN).sqrt()
            });
            metric::integrate_along_trace_with(&trace, &density, tol)
        }
    }
}

/// The radius `s` with `boundary_distance(s) = h`.
pub fn depth_to_radius(profile: &RadialProfile, h: f64) -> Result<f64> {
    let total = metric::boundary_distance(profile, 0.0)?;
    if !(h > 0.0 && h < total) {
        return Err(Error::OutOfRange {
            what: "depth",
            value: h,
            range: "(0, distance from centre to boundary)",
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut s = (1.0 - h * profile.eval(1.0)).clamp(0.0, 1.0);
    for _ in 0..200 {
        let f = metric::boundary_distance(profile, s)? - h;
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        // dD/ds = −1/c(s)
        let newton = s + f * profile.eval(s);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= 2.0 * f64::EPSILON || f == 0.0 {
            return Ok(next);
        }
        s = next;
    }
    Ok(s)
}

/// `√(2π² / II)`, the limit of [`short_geodesic_integral`] as `h → 0`.
pub fn short_geodesic_limit(ii: f64) -> f64 {
    (2.0 * PI * PI / ii).sqrt()
}

/// `√(II / 2π²)`, the boundary value of `w` for a constant-transform density.
pub fn expected_boundary_weight(ii: f64) -> f64 {
    (ii / (2.0 * PI * PI)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    pub value: f64,
    pub records: Vec<ConvergenceRecord>,
}

/// Boundary value of `w = f √d` at `x`, extrapolated in `√d` from the
/// approach points. The sequence must settle: increments between
/// consecutive points (ordered by decreasing distance) have to shrink.
pub fn boundary_value_w(f: &BlowupDensity, x: &[f64], approach: &[Vec<f64>]) -> Result<BoundaryLimit> {
    if approach.len() < 3 {
        return Err(Error::Invalid("need at least three approach points".into()));
    }
    if approach.iter().any(|y| y.len() != x.len()) {
        return Err(Error::Invalid("approach points must match the dimension of x".into()));
    }
    let mut pts: Vec<(f64, f64)> = approach
        .iter()
        .map(|y| (f.distance(y), f.weight(y)))
        .collect();
    if pts.iter().any(|(d, w)| !(d.is_finite() && *d > 0.0) || !w.is_finite()) {
        return Err(Error::NoBlowupFactorization {
            increments: pts.iter().map(|p| p.1).collect(),
        });
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let increments: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let first = increments[0];
    let last = increments[increments.len() - 1];
    let scale = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    if last > first && last > 1e-12 * scale.max(1e-300) {
        return Err(Error::NoBlowupFactorization { increments });
    }
    let ds: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ws: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let records = (0..pts.len())
        .map(|i| ConvergenceRecord {
            h: ds[i],
            raw: ws[i],
            extrapolated: extrapolate_sqrt(&ds[..=i], &ws[..=i]),
        })
        .collect::<Vec<_>>();
    Ok(BoundaryLimit {
        value: records[records.len() - 1].extrapolated,
        records,
    })
}

/// Points `x + d_k ν` approaching the boundary point `x` along the inward
/// normal `ν`.
pub fn normal_approach(x: &[f64], inward: &[f64], depths: &[f64]) -> Vec<Vec<f64>> {
    depths
        .iter()
        .map(|d| x.iter().zip(inward).map(|(a, n)| a + d * n).collect())
        .collect()
}

/// Conic fit of one slice `(P + hν) ∩ Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceFit {
    pub h: f64,
    /// Semi-axes `p ≤ q`.
    pub semi_axes: [f64; 2],
    pub ratio: f64,
}

/// Plane spanned by two orthonormal tangent vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentPlane {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneResult {
    pub plane: TangentPlane,
    pub fits: Vec<SliceFit>,
    pub limiting_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SliceOutcome {
    Umbilical { planes: Vec<PlaneResult> },
    NonUmbilical { witness: PlaneResult, planes: Vec<PlaneResult> },
}

impl SliceOutcome {
    pub fn is_umbilical(&self) -> bool {
        matches!(self, SliceOutcome::Umbilical { .. })
    }

    pub fn planes(&self) -> &[PlaneResult] {
        match self {
            SliceOutcome::Umbilical { planes } | SliceOutcome::NonUmbilical { planes, .. } => planes,
        }
    }
}

/// Number of rays used to trace each slice curve.
pub const SLICE_RAYS: usize = 64;

/// Fits an ellipse to the slice of the body by `x + hν + span(e1, e2)`.
pub fn slice_fit<B: ConvexBody + ?Sized>(body: &B, x: &[f64], plane: &TangentPlane, h: f64) -> Result<SliceFit> {
    let nu = body.inward_normal(x);
    let o: Vec<f64> = x.iter().zip(&nu).map(|(a, n)| a + h * n).collect();
    if !body.contains(&o) {
        return Err(Error::Fit(format!("slice at depth {h} misses the body")));
    }
    let scale = h.sqrt();
    let mut pts = Vec::with_capacity(SLICE_RAYS);
    for k in 0..SLICE_RAYS {
        let phi = 2.0 * PI * k as f64 / SLICE_RAYS as f64;
        let (s, c) = phi.sin_cos();
        let d: Vec<f64> = plane.e1.iter().zip(&plane.e2).map(|(a, b)| c * a + s * b).collect();
        let t = body.ray_exit(&o, &d, scale).map_err(|e| Error::Fit(e.to_string()))?;
        pts.push((t * c, t * s));
    }
    let mean = pts.iter().map(|p| p.0.hypot(p.1)).sum::<f64>() / pts.len() as f64;
    let rows: Vec<[f64; 5]> = pts
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (u / mean, v / mean);
            [u * u, u * v, v * v, u, v]
        })
        .collect();
    let coef = least_squares::<5>(&rows, &vec![1.0; rows.len()])
        .ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    let [a, b, c, d, e] = coef;
    let half_b = 0.5 * b;
    let tr = a + c;
    let disc = ((a - c) * (a - c) + b * b).sqrt();
    let (lmin, lmax) = (0.5 * (tr - disc), 0.5 * (tr + disc));
    if !(lmin > 0.0) {
        return Err(Error::Fit(format!("slice at depth {h} is not an ellipse")));
    }
    // centre solves 2 M z = −(d, e); then zᵀ M z + 1 is the level of the
    // centred quadratic form
    let det = a * c - half_b * half_b;
    let zx = -(c * d - half_b * e) / (2.0 * det);
    let zy = -(a * e - half_b * d) / (2.0 * det);
    let level = 1.0 + a * zx * zx + b * zx * zy + c * zy * zy;
    if !(level > 0.0) {
        return Err(Error::Fit(format!("degenerate conic at depth {h}")));
    }
    let p = (level / lmax).sqrt() * mean;
    let q = (level / lmin).sqrt() * mean;
    Ok(SliceFit {
        h,
        semi_axes: [p, q],
        ratio: (lmax / lmin).sqrt(),
    })
}

/// Decides umbilicity at `x`: every sampled tangent plane must have slices
/// whose axis ratio extrapolates to 1 within `tol`.
pub fn slice_umbilicity_test<B: ConvexBody + ?Sized>(
    body: &B,
    x: &[f64],
    planes: &[TangentPlane],
    depths: &[f64],
    tol: f64,
) -> Result<SliceOutcome> {
    if planes.is_empty() || depths.is_empty() {
        return Err(Error::Invalid("need at least one plane and one depth".into()));
    }
    let mut hs = depths.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut results = Vec::with_capacity(planes.len());
    for plane in planes {
        let fits = hs
            .iter()
            .map(|&h| slice_fit(body, x, plane, h))
            .collect::<Result<Vec<_>>>()?;
        let ratios: Vec<f64> = fits.iter().map(|f| f.ratio).collect();
        results.push(PlaneResult {
            plane: plane.clone(),
            limiting_ratio: extrapolate_sqrt(&hs, &ratios),
            fits,
        });
    }
    let witness = results
        .iter()
        .max_by(|a, b| (a.limiting_ratio - 1.0).abs().total_cmp(&(b.limiting_ratio - 1.0).abs()))
        .cloned()
        .expect("at least one plane");
    if (witness.limiting_ratio - 1.0).abs() <= tol {
        Ok(SliceOutcome::Umbilical { planes: results })
    } else {
        Ok(SliceOutcome::NonUmbilical {
            witness,
            planes: results,
        })
    }
}

/// An orthonormal basis of the tangent space at `x`, from Gram–Schmidt on
/// the coordinate axes against the normal.
pub fn tangent_basis<B: ConvexBody + ?Sized>(body: &B, x: &[f64]) -> Vec<Vec<f64>> {
    let n = body.dim();
    let nu = body.inward_normal(x);
    let mut basis: Vec<Vec<f64>> = vec![nu];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for b in &basis {
            let p: f64 = e.iter().zip(b).map(|(a, c)| a * c).sum();
            for (ek, bk) in e.iter_mut().zip(b) {
                *ek -= p * bk;
            }
        }
        let norm = e.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(e.iter().map(|a| a / norm).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_depths(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (hi.ln() + (lo.ln() - hi.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn ball_blowup_density() {
        let f = BlowupDensity::euclidean_ball(vec![0.0, 0.0], 1.0);
        let y = [0.6, 0.0];
        let exact = 1.0 / (PI * 0.64f64.sqrt());
        assert!((f.eval(&y) - exact).abs() < 1e-15);
        assert!((f.weight(&y) - exact * 0.4f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn circle_chord_estimate() {
        let circle = SupportFunction::disc([0.0, 0.0], 2.0, 512).unwrap();
        let est = estimate_ii_chords(&circle, &[2.0, 0.0], &[0.0, 1.0], &log_depths(1e-4, 1e-2, 5)).unwrap();
        assert!((est.value - 0.5).abs() < 5e-3, "{}", est.value);
        for r in &est.records {
            // 8h/ℓ² = 2/(2R − h) for a circle
            assert!((r.raw - 2.0 / (4.0 - r.h)).abs() < 1e-8, "{r:?}");
        }
        assert!(est.to_csv().starts_with("h,raw,extrapolated\n"));
    }

    #[test]
    fn sphere_and_ellipsoid_chord_estimates() {
        let depths = log_depths(1e-5, 1e-2, 6);
        let s = ImplicitBody::sphere(vec![0.0; 3], 1.0);
        let est = estimate_ii_chords(&s, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &depths).unwrap();
        assert!((est.value - 1.0).abs() < 1e-5, "{}", est.value);
        let e = ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]);
        let est = estimate_ii_chords(&e, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &depths).unwrap();
        assert!((est.value - 0.25).abs() < 1e-5, "{}", est.value);
    }

    #[test]
    fn probe_beyond_the_body_fails() {
        let s = ImplicitBody::sphere(vec![0.0; 2], 1.0);
        assert!(matches!(chord_probe(&s, &[1.0, 0.0], &[0.0, 1.0], 3.0), Err(Error::Probe(_))));
    }

    #[test]
    fn short_chord_integral_of_unit_disc() {
        let setting = ShortGeodesicSetting::EuclideanBall { radius: 1.0 };
        let v = short_geodesic_integral(&setting, &[1.0, 0.0], &[0.0, 1.0], 1e-4, 1e-12).unwrap();
        assert!((v / (PI * 2f64.sqrt()) - 1.0).abs() < 0.02);
        // exact value ∫ √(1 + √(1 − ℓ² cos² θ)) dθ over (−π/2, π/2), ℓ² = 2h − h²
        let h: f64 = 0.01;
        let l2 = 2.0 * h - h * h;
        let oracle = quad::integrate(
            |t: f64| (1.0 + (1.0 - l2 * t.cos().powi(2)).sqrt()).sqrt(),
            -PI / 2.0,
            PI / 2.0,
            1e-14,
        )
        .unwrap();
        let v = short_geodesic_integral(&setting, &[1.0, 0.0], &[0.0, 1.0], h, 1e-12).unwrap();
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn radial_short_geodesic_matches_euclidean_for_constant_speed() {
        let e = ShortGeodesicSetting::EuclideanBall { radius: 1.0 };
        let r = ShortGeodesicSetting::Radial(RadialProfile::euclidean());
        let a = short_geodesic_integral(&e, &[1.0, 0.0], &[0.0, 1.0], 1e-3, 1e-12).unwrap();
        let b = short_geodesic_integral(&r, &[1.0, 0.0], &[0.0, 1.0], 1e-3, 1e-10).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn depth_inversion() {
        let g = RadialProfile::gaussian();
        let s = depth_to_radius(&g, 0.01).unwrap();
        assert!((metric::boundary_distance(&g, s).unwrap() - 0.01).abs() < 1e-14);
        assert!(depth_to_radius(&g, 0.0).is_err());
    }

    #[test]
    fn boundary_weight_of_ball_densities() {
        for radius in [1.0, 2.0] {
            let f = BlowupDensity::euclidean_ball(vec![0.0, 0.0, 0.0], radius);
            let x = [0.0, radius, 0.0];
            let pts = normal_approach(&x, &[0.0, -1.0, 0.0], &log_depths(1e-6, 1e-2, 5));
            let w = boundary_value_w(&f, &x, &pts).unwrap();
            let exact = (1.0 / (2.0 * PI * PI * radius)).sqrt();
            assert!((w.value - exact).abs() < 1e-7, "{} vs {exact}", w.value);
        }
    }

    #[test]
    fn boundary_weight_rejects_stronger_blowup() {
        let f = BlowupDensity::new(|x| 1.0 / (1.0 - x[0]), |x| 1.0 - x[0]);
        let pts = normal_approach(&[1.0], &[-1.0], &log_depths(1e-8, 1e-2, 5));
        assert!(matches!(
            boundary_value_w(&f, &[1.0], &pts),
            Err(Error::NoBlowupFactorization { .. })
        ));
    }

    #[test]
    fn slice_examples() {
        let depths = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4];
        let sphere = ImplicitBody::sphere(vec![0.0; 3], 1.0);
        let x = [0.0, 0.6, 0.8];
        let basis = tangent_basis(&sphere, &x);
        let plane = TangentPlane {
            e1: basis[0].clone(),
            e2: basis[1].clone(),
        };
        let out = slice_umbilicity_test(&sphere, &x, &[plane], &depths, 1e-3).unwrap();
        assert!(out.is_umbilical());
        let ell = ImplicitBody::ellipsoid(vec![1.0, 1.0, 2.0]);
        let plane = TangentPlane {
            e1: vec![0.0, 1.0, 0.0],
            e2: vec![0.0, 0.0, 1.0],
        };
        let out = slice_umbilicity_test(&ell, &[1.0, 0.0, 0.0], &[plane], &depths, 1e-3).unwrap();
        match &out {
            SliceOutcome::NonUmbilical { witness, .. } => {
                assert!((witness.limiting_ratio - 2.0).abs() < 1e-6);
                let f = witness.fits[0];
                let s = (2.0 * f.h - f.h * f.h).sqrt();
                assert!((f.semi_axes[0] - s).abs() < 1e-9 && (f.semi_axes[1] - 2.0 * s).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn least_squares_recovers_quadratic() {
        let hs = [1e-2, 1e-3, 1e-4, 1e-5];
        let ys: Vec<f64> = hs.iter().map(|h: &f64| 3.0 + 2.0 * h.sqrt() - h).collect();
        assert!((extrapolate_sqrt(&hs, &ys) - 3.0).abs() < 1e-12);
        let fit = fit_power_law(&hs, &hs.iter().map(|h| 5.0 * h.sqrt()).collect::<Vec<_>>()).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12 && (fit.constant - 5.0).abs() < 1e-10);
    }
}
