//! Run configuration: flat TOML files, scheme sources and initial data.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scheme::{builtin_scheme, BuiltinScheme, SchemeSpec};
use crate::simulator::StoppingRule;

/// Every key a config or scheme file may contain. Unknown keys are errors.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<String>,
    pub a: Option<f64>,
    pub lambda: Option<f64>,
    pub space_coeffs: Option<Vec<(i64, f64)>>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub cells: Option<usize>,
    pub x_max: Option<f64>,
    pub tfinal: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub initial: Option<String>,
    pub levels: Option<String>,
    pub stopping: Option<String>,
    pub quad_order: Option<usize>,
    pub horizon: Option<usize>,
    pub weighted_mu: Option<f64>,
    pub circle_samples: Option<usize>,
    pub eta_samples: Option<usize>,
    pub consistency_tol: Option<f64>,
    pub force_unstable: Option<bool>,
    pub out_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The scheme described by the file: a builtin when `scheme` is set,
    /// otherwise explicit coefficients.
    pub fn scheme_spec(&self) -> Result<SchemeSpec> {
        let a = self.a.ok_or_else(|| Error::Config("missing key `a`".into()))?;
        let lambda = self
            .lambda
            .ok_or_else(|| Error::Config("missing key `lambda`".into()))?;
        if let Some(name) = &self.scheme {
            return builtin_scheme(name.parse()?, a, lambda);
        }
        let missing = |k: &str| Error::Config(format!("missing key `{k}` (or set `scheme`)"));
        let pairs = self.space_coeffs.as_ref().ok_or_else(|| missing("space_coeffs"))?;
        let alpha = self.alpha.clone().ok_or_else(|| missing("alpha"))?;
        let beta = self.beta.clone().ok_or_else(|| missing("beta"))?;
        SchemeSpec::from_pairs(a, lambda, pairs, alpha, beta)
    }
}

/// Parses and builds a scheme file.
pub fn load_scheme(path: &Path) -> Result<SchemeSpec> {
    ConfigFile::load(path)?.scheme_spec()
}

/// `"5..10"` (inclusive) into `[32, 64, ..., 1024]`.
pub fn parse_levels(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("levels must look like `5..10`, got `{text}`"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u32 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if lo > hi || hi > 24 {
        return Err(bad());
    }
    Ok((lo..=hi).map(|m| 1usize << m).collect())
}

pub fn parse_stopping(text: &str) -> Result<StoppingRule> {
    match text {
        "floor" => Ok(StoppingRule::Floor),
        "ceil" => Ok(StoppingRule::Ceil),
        _ => Err(Error::Config(format!(
            "stopping must be `floor` or `ceil`, got `{text}`"
        ))),
    }
}

/// Tabulated `(x, u)` samples, interpolated piecewise linearly and held
/// constant beyond the first and last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledData {
    xs: Vec<f64>,
    us: Vec<f64>,
}

impl SampledData {
    pub fn new(xs: Vec<f64>, us: Vec<f64>) -> Result<Self> {
        if xs.len() != us.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: us.len(),
            });
        }
        if xs.is_empty() {
            return Err(Error::Config("sampled initial data is empty".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sample abscissae must be strictly increasing".into()));
        }
        if let Some(i) = xs.iter().chain(&us).position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite sample value at entry {i}")));
        }
        Ok(SampledData { xs, us })
    }

    /// Two comma-separated columns `x,u`; a non-numeric first line is a
    /// header; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (x, u) = match (cols.next(), cols.next(), cols.next()) {
                (Some(x), Some(u), None) => (x, u),
                _ => return Err(Error::Config(format!("line {}: expected `x,u`", i + 1))),
            };
            match (x.parse::<f64>(), u.parse::<f64>()) {
                (Ok(x), Ok(u)) => {
                    xs.push(x);
                    us.push(u);
                }
                _ if xs.is_empty() && i == 0 => continue,
                _ => return Err(Error::Config(format!("line {}: not a number pair", i + 1))),
            }
        }
        Self::new(xs, us)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.us[0];
        }
        if x >= self.xs[n - 1] {
            return self.us[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let s = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.us[i] + s * (self.us[i + 1] - self.us[i])
    }
}

/// Initial data selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `exp(-100 (x - 1/2)^2)`.
    GaussianBump,
    Constant(f64),
    Linear,
    /// `sin(2 pi x)`.
    Sine,
    Sampled(SampledData),
}

impl InitialCondition {
    pub const BUILTIN: [&'static str; 4] = ["gaussian_bump", "constant", "linear", "sine"];

    /// A builtin name, or else the path of a sampled-data file.
    pub fn resolve(text: &str) -> Result<Self> {
        match text {
            "gaussian_bump" => Ok(InitialCondition::GaussianBump),
            "constant" => Ok(InitialCondition::Constant(1.0)),
            "linear" => Ok(InitialCondition::Linear),
            "sine" => Ok(InitialCondition::Sine),
            path => {
                let p = Path::new(path);
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "initial condition `{path}` is neither a builtin ({}) nor a file",
                        Self::BUILTIN.join(", ")
                    )));
                }
                let text = fs::read_to_string(p)?;
                Ok(InitialCondition::Sampled(SampledData::parse(&text)?))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialCondition::GaussianBump => (-100.0 * (x - 0.5) * (x - 0.5)).exp(),
            InitialCondition::Constant(c) => *c,
            InitialCondition::Linear => x,
            InitialCondition::Sine => (2.0 * PI * x).sin(),
            InitialCondition::Sampled(d) => d.eval(x),
        }
    }
}

/// Where the scheme comes from: `--scheme` is a builtin name when it parses
/// as one, otherwise a scheme file.
pub fn resolve_scheme(
    scheme: Option<&str>,
    a: Option<f64>,
    lambda: Option<f64>,
    file: &ConfigFile,
) -> Result<SchemeSpec> {
    let a = a.or(file.a);
    let lambda = lambda.or(file.lambda);
    match scheme {
        Some(name) if name.parse::<BuiltinScheme>().is_ok() => {
            let a = a.ok_or_else(|| Error::Config("builtin scheme needs --a".into()))?;
            let lambda = lambda.ok_or_else(|| Error::Config("builtin scheme needs --lambda".into()))?;
            builtin_scheme(name.parse()?, a, lambda)
        }
        Some(path) if Path::new(path).exists() => {
            let mut f = ConfigFile::load(Path::new(path))?;
            f.a = a.or(f.a);
            f.lambda = lambda.or(f.lambda);
            f.scheme_spec()
        }
        Some(other) => Err(Error::UnknownScheme {
            name: other.to_string(),
            available: BuiltinScheme::available(),
        }),
        None => {
            if file.scheme.is_none() && file.space_coeffs.is_none() {
                return Err(Error::Config("no scheme given (use --scheme or a config file)".into()));
            }
            let mut f = file.clone();
            f.a = a;
            f.lambda = lambda;
            f.scheme_spec()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scheme_file() {
        let f = ConfigFile::parse("scheme = \"ab3_five_point\"\na = -1.0\nlambda = 0.4\n").unwrap();
        let s = f.scheme_spec().unwrap();
        assert_eq!(s.k_levels(), 3);
        assert_eq!((s.r_left(), s.p_right()), (2, 2));
    }

    #[test]
    fn explicit_scheme_file() {
        let text = "a = 1.0\nlambda = 0.5\nspace_coeffs = [[-1, -1.0], [0, 1.0]]\nalpha = [-1.0, 1.0]\nbeta = [1.0]\n";
        let s = ConfigFile::parse(text).unwrap().scheme_spec().unwrap();
        assert_eq!(s.coeff(-1), -1.0);
        assert_eq!(s.coeff(0), 1.0);
    }

    #[test]
    fn missing_and_unknown_keys() {
        assert!(matches!(
            ConfigFile::parse("a = 1.0\nlambda = 0.5\n").unwrap().scheme_spec(),
            Err(Error::Config(_))
        ));
        assert!(matches!(ConfigFile::parse("colour = 3"), Err(Error::Config(_))));
        let unknown = ConfigFile::parse("scheme = \"nope\"\na = 1.0\nlambda = 0.5\n").unwrap();
        assert!(matches!(unknown.scheme_spec(), Err(Error::UnknownScheme { .. })));
    }

    #[test]
    fn levels() {
        assert_eq!(parse_levels("5..10").unwrap(), vec![32, 64, 128, 256, 512, 1024]);
        assert_eq!(parse_levels("3..=4").unwrap(), vec![8, 16]);
        assert!(parse_levels("10..5").is_err());
        assert!(parse_levels("five").is_err());
    }

    #[test]
    fn sampled_interpolation() {
        let d = SampledData::parse("x,u\n0,0\n1,2\n2,0\n").unwrap();
        assert_eq!(d.eval(-1.0), 0.0);
        assert_eq!(d.eval(0.5), 1.0);
        assert_eq!(d.eval(1.0), 2.0);
        assert_eq!(d.eval(1.75), 0.5);
        assert_eq!(d.eval(5.0), 0.0);
        assert!(SampledData::parse("0,0\n0,1\n").is_err());
        assert!(SampledData::parse("0,0\nfoo,1\n").is_err());
    }

    #[test]
    fn initial_builtins() {
        let b = InitialCondition::resolve("gaussian_bump").unwrap();
        assert_eq!(b.eval(0.5), 1.0);
        assert!(InitialCondition::resolve("sine").unwrap().eval(0.25) > 0.999_999);
        assert!(matches!(
            InitialCondition::resolve("/no/such/file"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scheme_resolution() {
        let empty = ConfigFile::default();
        let s = resolve_scheme(Some("upwind"), Some(1.0), Some(0.5), &empty).unwrap();
        assert_eq!(s.r_left(), 1);
        assert!(matches!(
            resolve_scheme(Some("upwind"), None, Some(0.5), &empty),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            resolve_scheme(Some("bogus"), Some(1.0), Some(0.5), &empty),
            Err(Error::UnknownScheme { .. })
        ));
        assert!(matches!(
            resolve_scheme(None, Some(1.0), Some(0.5), &empty),
            Err(Error::Config(_))
        ));
    }
}
