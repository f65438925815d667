//! Turning command-line text into profiles and bodies.

use std::path::Path;

use constxr::boundary::ImplicitBody;
use constxr::metric::RadialProfile;
use constxr::xray2d::SupportFunction;
use thiserror::Error;

use crate::args::ProfileSource;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error(transparent)]
    Library(#[from] constxr::Error),
}

pub fn load_profile(source: &ProfileSource) -> Result<RadialProfile, InputError> {
    match (&source.profile, &source.profile_csv) {
        (Some(text), _) => RadialProfile::from_expr(text)
            .map_err(|e| InputError::Usage(format!("--profile {text:?}: {e}"))),
        (None, Some(path)) => {
            let rows = read_pairs(path)?;
            let (rs, cs) = rows.into_iter().unzip();
            Ok(RadialProfile::from_samples(rs, cs)?)
        }
        (None, None) => Err(InputError::Usage("one of --profile or --profile-csv is required".into())),
    }
}

/// Two numeric columns; a first row that does not parse is taken as a header.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>, InputError> {
    let read_err = |message: String| InputError::Read {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| read_err(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| read_err(e.to_string()))?;
        if record.len() != 2 {
            return Err(read_err(format!("line {}: expected 2 columns, found {}", i + 1, record.len())));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(a), Ok(b)) => rows.push((a, b)),
            _ if i == 0 => continue,
            _ => return Err(read_err(format!("line {}: non-numeric value", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(read_err("no data rows".into()));
    }
    Ok(rows)
}

/// A planar body, parsed from a shape spec or a `(θ, h)` CSV file.
pub fn load_planar(spec: &str, samples: usize) -> Result<SupportFunction, InputError> {
    let path = Path::new(spec);
    if path.is_file() {
        let pairs = read_pairs(path)?;
        return Ok(SupportFunction::from_pairs(&pairs)?);
    }
    SupportFunction::from_shape_spec(spec, samples).map_err(|e| InputError::Usage(format!("--shape: {e}")))
}

pub enum Body {
    Planar(SupportFunction),
    Solid { body: ImplicitBody, semi_axes: Vec<f64> },
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Planar(_) => 2,
            Body::Solid { semi_axes, .. } => semi_axes.len(),
        }
    }

    pub fn as_convex(&self) -> &dyn constxr::ConvexBody {
        match self {
            Body::Planar(s) => s,
            Body::Solid { body, .. } => body,
        }
    }

    /// End of the first axis, `(h(0), 0)` for planar bodies.
    pub fn default_point(&self) -> Vec<f64> {
        match self {
            Body::Planar(s) => vec![s.eval(0.0), 0.0],
            Body::Solid { semi_axes, .. } => {
                let mut x = vec![0.0; semi_axes.len()];
                x[0] = semi_axes[0];
                x
            }
        }
    }
}

/// `"sphere R"`, `"ellipsoid a b c"`, or a planar shape.
pub fn load_body(spec: &str) -> Result<Body, InputError> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    let numbers = |ws: &[&str]| -> Result<Vec<f64>, InputError> {
        ws.iter()
            .map(|w| {
                w.parse::<f64>()
                    .map_err(|_| InputError::Usage(format!("bad number '{w}' in shape '{spec}'")))
            })
            .collect()
    };
    match words.first().copied() {
        Some("sphere") => {
            let r = numbers(&words[1..])?;
            if r.len() != 1 || !(r[0] > 0.0) {
                return Err(InputError::Usage(format!("expected 'sphere R' with R > 0, got '{spec}'")));
            }
            Ok(Body::Solid {
                body: ImplicitBody::sphere(vec![0.0; 3], r[0]),
                semi_axes: vec![r[0]; 3],
            })
        }
        Some("ellipsoid") => {
            let axes = numbers(&words[1..])?;
            if axes.len() < 2 || axes.iter().any(|a| !(*a > 0.0)) {
                return Err(InputError::Usage(format!(
                    "expected 'ellipsoid a b c' with positive semi-axes, got '{spec}'"
                )));
            }
            Ok(Body::Solid {
                body: ImplicitBody::ellipsoid(axes.clone()),
                semi_axes: axes,
            })
        }
        _ => Ok(Body::Planar(load_planar(spec, constxr::xray2d::DEFAULT_SAMPLES)?)),
    }
}

pub fn parse_vector(text: &str, dim: usize, what: &str) -> Result<Vec<f64>, InputError> {
    let v = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| InputError::Usage(format!("{what}: cannot parse '{text}'")))?;
    if v.len() != dim {
        return Err(InputError::Usage(format!("{what}: expected {dim} components, got {}", v.len())));
    }
    Ok(v)
}
