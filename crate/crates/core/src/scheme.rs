//! Explicit multistep finite-difference schemes for `u_t + a u_x = 0`:
//!
//! ```text
//! sum_{s=0}^{k} alpha_s u_j^{n+s} + lambda sum_{s=0}^{k-1} beta_s sum_{l=-r}^{p} a_l u_{j+l}^{n+s} = 0
//! ```
//!
//! together with the consistency checks and the conservative (flux) form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default absolute tolerance of [`check_consistency`].
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// One discretization: space stencil, time integrator, CFL number and
/// transport velocity. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    a_velocity: f64,
    cfl_lambda: f64,
    /// `a_{-r}, ..., a_p`, stored at offset `l + r`.
    space_coeffs: Vec<f64>,
    r_left: usize,
    p_right: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl SchemeSpec {
    /// Builds a scheme from a contiguous coefficient vector `a_{-r}..a_p`.
    pub fn new(
        a_velocity: f64,
        cfl_lambda: f64,
        r_left: usize,
        space_coeffs: Vec<f64>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        if space_coeffs.is_empty() {
            return Err(Error::InvalidScheme("empty space stencil".into()));
        }
        if r_left >= space_coeffs.len() {
            return Err(Error::InvalidScheme(format!(
                "left width r = {r_left} exceeds the stencil length {}",
                space_coeffs.len()
            )));
        }
        let p_right = space_coeffs.len() - 1 - r_left;
        let spec = SchemeSpec {
            a_velocity,
            cfl_lambda,
            space_coeffs,
            r_left,
            p_right,
            alpha,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a scheme from sparse `(l, a_l)` pairs. Missing interior indices
    /// are zero; the stencil extent is taken from the smallest and largest `l`.
    pub fn from_pairs(
        a_velocity: f64,
        cfl_lambda: f64,
        pairs: &[(i64, f64)],
        alpha: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let lo = pairs
            .iter()
            .map(|&(l, _)| l)
            .min()
            .ok_or_else(|| Error::InvalidScheme("empty space stencil".into()))?;
        let hi = pairs.iter().map(|&(l, _)| l).max().unwrap_or(lo);
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidScheme(format!("stencil [{lo}, {hi}] must contain l = 0")));
        }
        let mut coeffs = vec![0.0; (hi - lo + 1) as usize];
        for &(l, v) in pairs {
            coeffs[(l - lo) as usize] += v;
        }
        Self::new(a_velocity, cfl_lambda, (-lo) as usize, coeffs, alpha, beta)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScheme(m));
        if !self.a_velocity.is_finite() || self.a_velocity == 0.0 {
            return bad(format!(
                "velocity a must be finite and nonzero, got {}",
                self.a_velocity
            ));
        }
        if !self.cfl_lambda.is_finite() || self.cfl_lambda <= 0.0 {
            return bad(format!("CFL number lambda must be positive, got {}", self.cfl_lambda));
        }
        let all_finite = self
            .space_coeffs
            .iter()
            .chain(&self.alpha)
            .chain(&self.beta)
            .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite coefficient".into());
        }
        if self.space_coeffs[0] == 0.0 {
            return bad(format!(
                "a_{{-r}} = 0 with r = {}: stencil width is not tight",
                self.r_left
            ));
        }
        if *self.space_coeffs.last().unwrap() == 0.0 {
            return bad(format!("a_p = 0 with p = {}: stencil width is not tight", self.p_right));
        }
        if self.beta.is_empty() {
            return bad("k_levels must be at least 1 (beta is empty)".into());
        }
        if self.alpha.len() != self.beta.len() + 1 {
            return bad(format!(
                "k_levels mismatch: alpha has {} entries, beta has {} (need len(alpha) = len(beta) + 1)",
                self.alpha.len(),
                self.beta.len()
            ));
        }
        if self.alpha[self.k_levels()] != 1.0 {
            return bad(format!("alpha_k must be 1, got {}", self.alpha[self.k_levels()]));
        }
        if self.alpha[0].abs() + self.beta[0].abs() == 0.0 {
            return bad("normalization |alpha_0| + |beta_0| > 0 violated".into());
        }
        Ok(())
    }

    pub fn a_velocity(&self) -> f64 {
        self.a_velocity
    }

    pub fn cfl_lambda(&self) -> f64 {
        self.cfl_lambda
    }

    pub fn r_left(&self) -> usize {
        self.r_left
    }

    pub fn p_right(&self) -> usize {
        self.p_right
    }

    pub fn k_levels(&self) -> usize {
        self.beta.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `a_{-r}, ..., a_p` in order.
    pub fn space_coeffs(&self) -> &[f64] {
        &self.space_coeffs
    }

    /// `a_l`, zero outside `[-r, p]`.
    pub fn coeff(&self, l: i64) -> f64 {
        let idx = l + self.r_left as i64;
        if idx < 0 {
            return 0.0;
        }
        self.space_coeffs.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// Iterator over `(l, a_l)`.
    pub fn stencil(&self) -> impl DoubleEndedIterator<Item = (i64, f64)> + '_ {
        let r = self.r_left as i64;
        self.space_coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - r, c))
    }

    /// Dimensionless `tau` with `dx = tau |a| dt`, i.e. `1 / (lambda |a|)`.
    pub fn tau(&self) -> f64 {
        1.0 / (self.cfl_lambda * self.a_velocity.abs())
    }

    pub fn sum_beta(&self) -> f64 {
        self.beta.iter().sum()
    }

    pub fn is_outgoing(&self) -> bool {
        self.a_velocity < 0.0
    }

    /// Same stencil and integrator with a different CFL number. Only valid
    /// for user-defined schemes whose coefficients do not depend on lambda.
    pub fn with_lambda(&self, cfl_lambda: f64) -> Result<Self> {
        let mut s = self.clone();
        s.cfl_lambda = cfl_lambda;
        s.validate()?;
        Ok(s)
    }
}

/// Outcome of the consistency checks on space stencil and integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// `sum a_l = 0` and `sum l a_l = a`.
    pub space_ok: bool,
    /// `sum alpha = 0` and `sum s alpha_s = sum beta_s`.
    pub time_ok: bool,
    /// `sum s alpha_s` bounded away from zero.
    pub sigma_alpha_nonzero: bool,
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
}

impl ConsistencyReport {
    pub fn passes(&self) -> bool {
        self.space_ok && self.time_ok && self.sigma_alpha_nonzero
    }
}

pub const RES_SUM_A: &str = "sum_a";
pub const RES_FIRST_MOMENT: &str = "sum_l_a_minus_a";
pub const RES_SUM_ALPHA: &str = "sum_alpha";
pub const RES_ALPHA_BETA: &str = "sum_s_alpha_minus_sum_beta";
pub const RES_SIGMA_ALPHA: &str = "sum_s_alpha";

pub fn check_consistency(spec: &SchemeSpec, tol: f64) -> ConsistencyReport {
    let sum_a: f64 = spec.space_coeffs().iter().sum();
    let first_moment: f64 = spec.stencil().map(|(l, c)| l as f64 * c).sum();
    let sum_alpha: f64 = spec.alpha().iter().sum();
    let sigma_alpha: f64 = spec.alpha().iter().enumerate().map(|(s, &c)| s as f64 * c).sum();

    let mut residuals = BTreeMap::new();
    residuals.insert(RES_SUM_A.to_string(), sum_a.abs());
    residuals.insert(RES_FIRST_MOMENT.to_string(), (first_moment - spec.a_velocity()).abs());
    residuals.insert(RES_SUM_ALPHA.to_string(), sum_alpha.abs());
    residuals.insert(RES_ALPHA_BETA.to_string(), (sigma_alpha - spec.sum_beta()).abs());
    residuals.insert(RES_SIGMA_ALPHA.to_string(), sigma_alpha.abs());

    ConsistencyReport {
        space_ok: residuals[RES_SUM_A] < tol && residuals[RES_FIRST_MOMENT] < tol,
        time_ok: residuals[RES_SUM_ALPHA] < tol && residuals[RES_ALPHA_BETA] < tol,
        sigma_alpha_nonzero: residuals[RES_SIGMA_ALPHA] > tol,
        residuals,
        tol,
    }
}

/// Coefficients `f_{-r}, ..., f_{p-1}` of the linear numerical flux
/// `F(v_j, ..., v_{j+p+r-1}) = sum_l f_l v_{j+l+r}` such that
/// `sum_l a_l u_{j+l} = F(u_{j-r+1}, ..., u_{j+p}) - F(u_{j-r}, ..., u_{j+p-1})`.
///
/// `f_l = -sum_{m=-r}^{l} a_m = sum_{m=l+1}^{p} a_m`, which gives
/// `F(u, ..., u) = a u`.
pub fn flux_coefficients(spec: &SchemeSpec) -> Result<Vec<f64>> {
    let report = check_consistency(spec, CONSISTENCY_TOL);
    if !report.space_ok {
        return Err(Error::Inconsistent(format!(
            "flux form needs sum a_l = 0 and sum l a_l = a (residuals {:e}, {:e})",
            report.residuals[RES_SUM_A], report.residuals[RES_FIRST_MOMENT]
        )));
    }
    let width = spec.r_left() + spec.p_right();
    let mut f = Vec::with_capacity(width);
    let mut partial = 0.0;
    for &c in &spec.space_coeffs()[..width] {
        partial += c;
        f.push(-partial);
    }
    Ok(f)
}

/// Built-in discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinScheme {
    /// First-order upwind, forward Euler.
    Upwind,
    LaxFriedrichs,
    LaxWendroff,
    /// Centered three-point stencil with the two-step midpoint (Nystrom) rule.
    LeapFrog,
    /// Centered five-point stencil with fourth-order dissipation, third-order
    /// Adams-Bashforth in time.
    Ab3FivePoint,
}

impl BuiltinScheme {
    pub const ALL: [BuiltinScheme; 5] = [
        BuiltinScheme::Upwind,
        BuiltinScheme::LaxFriedrichs,
        BuiltinScheme::LaxWendroff,
        BuiltinScheme::LeapFrog,
        BuiltinScheme::Ab3FivePoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScheme::Upwind => "upwind",
            BuiltinScheme::LaxFriedrichs => "lax_friedrichs",
            BuiltinScheme::LaxWendroff => "lax_wendroff",
            BuiltinScheme::LeapFrog => "leap_frog",
            BuiltinScheme::Ab3FivePoint => "ab3_five_point",
        }
    }

    pub fn available() -> String {
        Self::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for BuiltinScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownScheme {
                name: s.to_string(),
                available: Self::available(),
            })
    }
}

/// Instantiates a built-in scheme for velocity `a` and CFL number `lambda`.
pub fn builtin_scheme(name: BuiltinScheme, a: f64, lambda: f64) -> Result<SchemeSpec> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "a must be finite and nonzero, got {a}"
        )));
    }
    let euler = || (vec![-1.0, 1.0], vec![1.0]);
    match name {
        BuiltinScheme::Upwind => {
            let (alpha, beta) = euler();
            if a > 0.0 {
                SchemeSpec::new(a, lambda, 1, vec![-a, a], alpha, beta)
            } else {
                SchemeSpec::new(a, lambda, 0, vec![-a, a], alpha, beta)
            }
        }
        BuiltinScheme::LaxFriedrichs => {
            let (alpha, beta) = euler();
            let h = 0.5 / lambda;
            SchemeSpec::new(
                a,
                lambda,
                1,
                vec![-h - a / 2.0, 1.0 / lambda, -h + a / 2.0],
                alpha,
                beta,
            )
        }
        BuiltinScheme::LaxWendroff => {
            let (alpha, beta) = euler();
            let d = lambda * a * a;
            SchemeSpec::new(
                a,
                lambda,
                1,
                vec![-a / 2.0 - d / 2.0, d, a / 2.0 - d / 2.0],
                alpha,
                beta,
            )
        }
        BuiltinScheme::LeapFrog => SchemeSpec::new(
            a,
            lambda,
            1,
            vec![-a / 2.0, 0.0, a / 2.0],
            vec![-1.0, 0.0, 1.0],
            vec![0.0, 2.0],
        ),
        BuiltinScheme::Ab3FivePoint => SchemeSpec::new(
            a,
            lambda,
            2,
            vec![
                a / 12.0 + 1.0 / 24.0,
                -2.0 * a / 3.0 - 1.0 / 6.0,
                0.25,
                2.0 * a / 3.0 - 1.0 / 6.0,
                -a / 12.0 + 1.0 / 24.0,
            ],
            vec![0.0, 0.0, -1.0, 1.0],
            vec![5.0 / 12.0, -16.0 / 12.0, 23.0 / 12.0],
        ),
    }
}
