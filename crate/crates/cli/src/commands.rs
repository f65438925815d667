//! The subcommands. Each returns the text to emit and a verdict; report
//! assembly is sequential so output is deterministic.

use std::f64::consts::PI;

use constxr::abel::{abel_forward_grid, synthesize_constant};
use constxr::batch::{self, Execution};
use constxr::boundary::{
    estimate_ii_chords, short_geodesic_limit, slice_umbilicity_test, tangent_basis, SliceOutcome, TangentPlane,
};
use constxr::metric::{herglotz_check, integrate_along_trace, trace_chord, HerglotzOutcome, TRACE_TOL};
use constxr::xray2d::{disc_test, DiscOutcome};
use constxr::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::{Command, DiscArgs, Format, HerglotzArgs, IiArgs, SliceArgs, SynthArgs, VerifyArgs};
use crate::inputs::{load_body, load_planar, load_profile, parse_vector, Body, InputError};
use crate::report::{Record, TransformReport};

/// Accuracy required of the traced cross-check in `verify`.
pub const TRACE_CHECK_TOL: f64 = 1e-4;
/// Chords re-integrated with the geodesic tracer in `verify`.
pub const TRACED_CHORDS: usize = 50;
/// Depths for `slicetest`.
pub const SLICE_DEPTHS: [f64; 5] = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Reject(String),
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub text: String,
    pub verdict: Verdict,
    /// Extra files to write, `(path, contents)`.
    pub extra: Vec<(std::path::PathBuf, String)>,
}

impl CommandOutput {
    fn new(text: String, verdict: Verdict) -> Self {
        Self {
            text,
            verdict,
            extra: Vec::new(),
        }
    }
}

pub fn execute(command: &Command) -> Result<CommandOutput, InputError> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Verify(a) => verify(a),
        Command::Herglotz(a) => herglotz(a),
        Command::Disctest(a) => disctest(a),
        Command::Iiest(a) => iiest(a),
        Command::Slicetest(a) => slicetest(a),
    }
}

fn herglotz_rejection(e: Error) -> Result<CommandOutput, InputError> {
    match e {
        Error::HerglotzViolation { r, derivative } => Ok(CommandOutput::new(
            String::new(),
            Verdict::Reject(format!("Herglotz condition fails at r = {r}: d/dr(r/c) = {derivative}")),
        )),
        other => Err(other.into()),
    }
}

fn synth(a: &SynthArgs) -> Result<CommandOutput, InputError> {
    if a.grid == 0 {
        return Err(InputError::Usage("--grid must be positive".into()));
    }
    let profile = load_profile(&a.source)?;
    let f = match synthesize_constant(&profile) {
        Ok(f) => f,
        Err(e) => return herglotz_rejection(e),
    };
    let text = match a.format {
        Format::Csv => f.sample_csv(a.grid),
        Format::Json => {
            let rs: Vec<f64> = (0..a.grid).map(|k| k as f64 / a.grid as f64).collect();
            let records = rs.iter().map(|&r| Record { parameter: r, value: f.eval(r) }).collect();
            let weights: Vec<f64> = rs.iter().map(|&r| f.weight(r).unwrap_or(f64::NAN)).collect();
            let mut report = TransformReport::new("synth", 0)
                .input("profile", profile.label())
                .input("grid", a.grid);
            report.records = records;
            report.passed = true;
            report.details = json!({
                "density": "f(r) = c(r) rho'(r) / (pi sqrt(rho(1)^2 - rho(r)^2))",
                "boundary_weight": f.weight(1.0),
                "w": weights,
            });
            report.to_json()
        }
    };
    Ok(CommandOutput::new(text, Verdict::Pass))
}

fn verify(a: &VerifyArgs) -> Result<CommandOutput, InputError> {
    if a.chords == 0 {
        return Err(InputError::Usage("--chords must be positive".into()));
    }
    if !(a.tol > 0.0) {
        return Err(InputError::Usage("--tol must be positive".into()));
    }
    let profile = load_profile(&a.source)?;
    let f = match synthesize_constant(&profile) {
        Ok(f) => f,
        Err(e) => return herglotz_rejection(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let radii: Vec<f64> = (0..a.chords).map(|_| rng.gen_range(0.0..1.0)).collect();
    let values = abel_forward_grid(Execution::Parallel, &f, &profile, &radii)?;
    let records: Vec<Record> = values.iter().map(|v| Record { parameter: v.s, value: v.value }).collect();

    let density = f.to_blowup_density();
    let traced_radii: Vec<f64> = radii.iter().copied().filter(|s| *s > 0.0).take(TRACED_CHORDS).collect();
    let traced = batch::try_map(Execution::Parallel, &traced_radii, |&s| {
        let trace = trace_chord(&profile, s, TRACE_TOL)?;
        let value = integrate_along_trace(&trace, &density)?;
        Ok::<_, Error>((trace, value))
    })?;
    let worst_trace = traced
        .iter()
        .enumerate()
        .max_by(|x, y| (x.1 .1 - 1.0).abs().total_cmp(&(y.1 .1 - 1.0).abs()));
    let trace_dev = worst_trace.map(|(_, t)| (t.1 - 1.0).abs()).unwrap_or(0.0);
    let drift = traced.iter().map(|t| t.0.clairaut_drift()).fold(0.0, f64::max);

    let mut report = TransformReport::new("verify", a.seed)
        .input("profile", profile.label())
        .input("chords", a.chords)
        .tolerance("max_abs_deviation", a.tol)
        .tolerance("traced_max_abs_deviation", TRACE_CHECK_TOL.max(a.tol))
        .tolerance("ode", TRACE_TOL)
        .with_records(records, 1.0);
    let summary = report.summary.expect("summary set with records");
    report.passed = summary.max_abs_deviation <= a.tol && trace_dev <= TRACE_CHECK_TOL.max(a.tol);
    report.details = json!({
        "traced_chords": traced.len(),
        "traced_max_abs_deviation": trace_dev,
        "max_clairaut_drift": drift,
    });
    let verdict = if report.passed {
        Verdict::Pass
    } else {
        Verdict::Reject(format!(
            "max |If - 1| = {:e} (tolerance {:e}), traced {:e}",
            summary.max_abs_deviation, a.tol, trace_dev
        ))
    };
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Csv => report.records_csv("s", "transform"),
    };
    let mut out = CommandOutput::new(text, verdict);
    if let (Some(path), Some((_, (trace, _)))) = (&a.trace_csv, worst_trace) {
        out.extra.push((path.clone(), trace.to_csv(&trace.resample(201))));
    }
    Ok(out)
}

fn herglotz(a: &HerglotzArgs) -> Result<CommandOutput, InputError> {
    if a.grid < 2 {
        return Err(InputError::Usage("--grid must be at least 2".into()));
    }
    let profile = load_profile(&a.source)?;
    let outcome = herglotz_check(&profile, a.grid)?;
    let verdict = match outcome {
        HerglotzOutcome::Pass { .. } => Verdict::Pass,
        HerglotzOutcome::Fail { r, derivative } => {
            Verdict::Reject(format!("Herglotz condition fails at r = {r}: d/dr(r/c) = {derivative}"))
        }
    };
    let rho = profile.rho();
    let rs: Vec<f64> = (0..a.grid).map(|k| k as f64 / (a.grid - 1) as f64).collect();
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("r,rho_prime\n");
            for r in &rs {
                s.push_str(&format!("{},{}\n", r, rho.deriv(*r)));
            }
            s
        }
        Format::Json => {
            let mut report = TransformReport::new("herglotz", 0)
                .input("profile", profile.label())
                .input("grid", a.grid);
            report.passed = outcome.passed();
            report.details = match outcome {
                HerglotzOutcome::Pass { min_derivative } => json!({ "min_rho_prime": min_derivative }),
                HerglotzOutcome::Fail { r, derivative } => json!({ "witness_r": r, "rho_prime": derivative }),
            };
            report.to_json()
        }
    };
    Ok(CommandOutput::new(text, verdict))
}

fn disctest(a: &DiscArgs) -> Result<CommandOutput, InputError> {
    if !(a.tol > 0.0) {
        return Err(InputError::Usage("--tol must be positive".into()));
    }
    let dom = load_planar(&a.shape, a.grid)?;
    let outcome = disc_test(&dom, a.tol);
    let verdict = match outcome {
        DiscOutcome::Disc(_) => Verdict::Pass,
        DiscOutcome::Rejected { reason, .. } => Verdict::Reject(reason.to_string()),
    };
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("theta,h,width\n");
            for k in 0..dom.len() {
                let t = dom.angle(k);
                s.push_str(&format!("{},{},{}\n", t, dom.samples()[k], dom.width(t)));
            }
            s
        }
        Format::Json => {
            let mut report = TransformReport::new("disctest", 0)
                .input("shape", &a.shape)
                .input("samples", dom.len())
                .tolerance("fourier_relative", a.tol);
            report.passed = verdict == Verdict::Pass;
            let reason = match &verdict {
                Verdict::Reject(r) => Some(r.clone()),
                Verdict::Pass => None,
            };
            report.details = json!({ "outcome": outcome, "reason": reason });
            report.to_json()
        }
    };
    Ok(CommandOutput::new(text, verdict))
}

fn boundary_point(body: &Body, text: Option<&str>) -> Result<Vec<f64>, InputError> {
    let x = match text {
        Some(t) => parse_vector(t, body.dim(), "--point")?,
        None => return Ok(body.default_point()),
    };
    let off = match body {
        Body::Planar(s) => s.support_excess([x[0], x[1]]).abs(),
        Body::Solid { body, .. } => {
            let g = body.gradient(&x);
            body.phi(&x).abs() / g.iter().map(|a| a * a).sum::<f64>().sqrt()
        }
    };
    if off > 1e-8 {
        return Err(InputError::Usage(format!("--point {x:?} is not on the boundary")));
    }
    Ok(x)
}

fn iiest(a: &IiArgs) -> Result<CommandOutput, InputError> {
    if a.grid < 3 {
        return Err(InputError::Usage("--grid must be at least 3".into()));
    }
    let body = load_body(&a.shape)?;
    let x = boundary_point(&body, a.point.as_deref())?;
    let v = match &a.direction {
        Some(t) => parse_vector(t, body.dim(), "--direction")?,
        None => tangent_basis(body.as_convex(), &x)[0].clone(),
    };
    let depths: Vec<f64> = (0..a.grid)
        .map(|i| (1e-2f64.ln() + (1e-6f64.ln() - 1e-2f64.ln()) * i as f64 / (a.grid - 1) as f64).exp())
        .collect();
    let est = estimate_ii_chords(body.as_convex(), &x, &v, &depths)?;
    let text = match a.format {
        Format::Csv => est.to_csv(),
        Format::Json => {
            let mut report = TransformReport::new("iiest", 0)
                .input("shape", &a.shape)
                .input("point", format!("{x:?}"))
                .input("direction", format!("{v:?}"));
            report.records = est.records.iter().map(|r| Record { parameter: r.h, value: r.raw }).collect();
            report.passed = true;
            report.details = json!({
                "estimate": est.value,
                "convergence": est.records,
                "short_geodesic_limit": short_geodesic_limit(est.value),
                "boundary_weight": (est.value / (2.0 * PI * PI)).sqrt(),
            });
            report.to_json()
        }
    };
    Ok(CommandOutput::new(text, Verdict::Pass))
}

fn slicetest(a: &SliceArgs) -> Result<CommandOutput, InputError> {
    let body = load_body(&a.shape)?;
    if body.dim() != 3 {
        return Err(InputError::Usage("slicetest needs a solid: 'sphere R' or 'ellipsoid a b c'".into()));
    }
    let x = boundary_point(&body, a.point.as_deref())?;
    let basis = tangent_basis(body.as_convex(), &x);
    let plane = TangentPlane {
        e1: basis[0].clone(),
        e2: basis[1].clone(),
    };
    let outcome = slice_umbilicity_test(body.as_convex(), &x, &[plane], &SLICE_DEPTHS, a.tol)?;
    let verdict = match &outcome {
        SliceOutcome::Umbilical { .. } => Verdict::Pass,
        SliceOutcome::NonUmbilical { witness, .. } => {
            Verdict::Reject(format!("non-umbilical: limiting axis ratio {}", witness.limiting_ratio))
        }
    };
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("h,ratio\n");
            for fit in &outcome.planes()[0].fits {
                s.push_str(&format!("{},{}\n", fit.h, fit.ratio));
            }
            s
        }
        Format::Json => {
            let mut report = TransformReport::new("slicetest", 0)
                .input("shape", &a.shape)
                .input("point", format!("{x:?}"))
                .tolerance("axis_ratio", a.tol);
            report.records = outcome.planes()[0]
                .fits
                .iter()
                .map(|f| Record { parameter: f.h, value: f.ratio })
                .collect();
            report.passed = outcome.is_umbilical();
            report.details = json!({ "outcome": outcome });
            report.to_json()
        }
    };
    Ok(CommandOutput::new(text, verdict))
}
