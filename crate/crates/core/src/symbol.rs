//! Diagnostics of the amplification function `A(z) = sum_l a_l z^l`:
//! Cauchy stability of the multistep recurrence, roots of `A` on the unit
//! circle, roots inside the unit disk (by companion matrix and by the
//! argument principle), and the position of the positive real axis with
//! respect to the integrator's stability region.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly;
use crate::scheme::{check_consistency, ConsistencyReport, SchemeSpec, CONSISTENCY_TOL};

/// Roots closer than this are one root of higher multiplicity.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Width of the band below the unit circle where disk roots are rejected.
pub const DISK_TOL: f64 = 1e-9;
/// Slack on `|X| <= 1` in the root condition.
pub const UNIT_TOL: f64 = 1e-8;
/// A unit-modulus root is numerically simple when no other root is this close.
pub const SIMPLE_SEPARATION: f64 = 1e-6;
/// `|A'| ` below this at a circle root marks the root as multiple.
pub const SIMPLE_DERIVATIVE_TOL: f64 = 1e-6;
/// Polynomial roots this close to the unit circle must be confirmed by the scan.
pub const NEAR_CIRCLE_TOL: f64 = 1e-6;

pub const DEFAULT_CIRCLE_SAMPLES: usize = 1024;
pub const DEFAULT_CIRCLE_TOL: f64 = 1e-8;
pub const DEFAULT_ETA_SAMPLES: usize = 1024;
pub const DEFAULT_CONTOUR_EPS: f64 = 0.1;
pub const DEFAULT_CONTOUR_QUAD: usize = 2048;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Coefficients of the polynomial `z^r A(z)`, ascending.
pub fn symbol_polynomial(spec: &SchemeSpec) -> Vec<Complex64> {
    poly::to_complex(spec.space_coeffs())
}

/// `A(z)`; Horner on `z^r A(z)` followed by division by `z^r`.
pub fn amplification(spec: &SchemeSpec, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Pole { order: spec.r_left() });
    }
    let num = spec
        .space_coeffs()
        .iter()
        .rev()
        .fold(c(0.0, 0.0), |acc, &a| acc * z + a);
    Ok(num / z.powi(spec.r_left() as i32))
}

/// `A'(z) = sum_l l a_l z^{l-1}`.
pub fn amplification_derivative(spec: &SchemeSpec, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Pole {
            order: spec.r_left() + 1,
        });
    }
    let r = spec.r_left() as i32;
    let d = spec
        .stencil()
        .rev()
        .fold(c(0.0, 0.0), |acc, (l, a)| acc * z + a * l as f64);
    // d = sum l a_l z^{l+r}
    Ok(d / z.powi(r + 1))
}

fn on_circle(spec: &SchemeSpec, theta: f64) -> Complex64 {
    amplification(spec, Complex64::from_polar(1.0, theta)).expect("unit circle avoids the pole")
}

/// Uniform grid on `(-pi, pi]`; contains `0` and `pi` when `n` is even.
pub fn periodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -PI + 2.0 * PI * (i + 1) as f64 / n as f64).collect()
}

fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta;
    while t > PI {
        t -= 2.0 * PI;
    }
    while t <= -PI {
        t += 2.0 * PI;
    }
    t
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(lo, f(lo)), (mid, f(mid)), (hi, f(hi))]
        .into_iter()
        .fold(
            (mid, f64::INFINITY),
            |best, (x, v)| if v < best.1 { (x, v) } else { best },
        )
        .0
}

/// A zero of `theta -> A(e^{i theta})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleRoot {
    pub theta: f64,
    /// `|A'(e^{i theta})|` is bounded away from zero.
    pub simple: bool,
    /// `false` when only the polynomial root finder sees a root this close
    /// to the circle and the scan could not confirm it.
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleScan {
    pub roots: Vec<CircleRoot>,
    /// `z = 1` is the only root of `A` on the unit circle.
    pub unique_root_at_one: bool,
}

/// Locates the zeros of `A` on the unit circle: scan `|A(e^{i theta})|^2`
/// for local minima on a uniform grid, refine each by golden section, keep
/// those with `|A| < tol`.
pub fn circle_roots(spec: &SchemeSpec, n_samples: usize, tol: f64) -> Result<CircleScan> {
    if n_samples < 64 {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be >= 64, got {n_samples}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let grid = periodic_grid(n_samples);
    let h = 2.0 * PI / n_samples as f64;
    let g: Vec<f64> = grid.iter().map(|&t| on_circle(spec, t).norm_sqr()).collect();
    let n = g.len();
    let mut roots: Vec<CircleRoot> = Vec::new();
    for i in 0..n {
        let prev = g[(i + n - 1) % n];
        let next = g[(i + 1) % n];
        if !(g[i] <= prev && g[i] <= next) {
            continue;
        }
        let t0 = grid[i];
        let best = golden_min(|t| on_circle(spec, t).norm(), t0 - h, t0 + h);
        if on_circle(spec, best).norm() >= tol {
            continue;
        }
        let theta = wrap_angle(best);
        if roots.iter().any(|r| angle_dist(r.theta, theta) < 1e-9) {
            continue;
        }
        let d = amplification_derivative(spec, Complex64::from_polar(1.0, theta))?;
        roots.push(CircleRoot {
            theta,
            simple: d.norm() > SIMPLE_DERIVATIVE_TOL,
            resolved: true,
        });
    }
    if on_circle(spec, 0.0).norm() < tol && !roots.iter().any(|r| angle_dist(r.theta, 0.0) < 1e-9) {
        let d = amplification_derivative(spec, c(1.0, 0.0))?;
        roots.push(CircleRoot {
            theta: 0.0,
            simple: d.norm() > SIMPLE_DERIVATIVE_TOL,
            resolved: true,
        });
    }
    // cross-check against the companion-matrix roots
    for z in poly::roots(&symbol_polynomial(spec))? {
        if (z.norm() - 1.0).abs() >= NEAR_CIRCLE_TOL {
            continue;
        }
        let theta = z.arg();
        if !roots.iter().any(|r| angle_dist(r.theta, theta) < 1e-5) {
            roots.push(CircleRoot {
                theta: wrap_angle(theta),
                simple: false,
                resolved: false,
            });
        }
    }
    roots.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let unique_root_at_one = roots.len() == 1 && roots[0].theta.abs() < 1e-9 && roots[0].resolved;
    Ok(CircleScan {
        roots,
        unique_root_at_one,
    })
}

fn angle_dist(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Sampled `(theta, |A|^2, Re A, Im A)` on the periodic grid.
pub fn circle_samples(spec: &SchemeSpec, n_samples: usize) -> Vec<[f64; 4]> {
    periodic_grid(n_samples)
        .into_iter()
        .map(|t| {
            let v = on_circle(spec, t);
            [t, v.norm_sqr(), v.re, v.im]
        })
        .collect()
}

/// Sampled `(eta, Re(-lambda A), Im(-lambda A))`: the curve that must lie in
/// the stability region of the time integrator.
pub fn stability_curve(spec: &SchemeSpec, n_samples: usize) -> Vec<[f64; 3]> {
    periodic_grid(n_samples)
        .into_iter()
        .map(|t| {
            let v = -on_circle(spec, t) * spec.cfl_lambda();
            [t, v.re, v.im]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    /// Root condition holds up to a near-multiple unit-modulus root.
    Marginal,
    Unstable,
}

impl StabilityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityVerdict::Stable => "stable",
            StabilityVerdict::Marginal => "marginal",
            StabilityVerdict::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyStability {
    pub verdict: StabilityVerdict,
    /// Sample with the largest root modulus.
    pub worst_eta: f64,
    pub max_modulus: f64,
    /// Every sampled `-lambda A(e^{i eta})` satisfies the root condition of
    /// the integrator, i.e. lies in its stability region.
    pub curve_in_region: bool,
    pub n_samples: usize,
}

/// `rho(X) + lambda A(e^{i eta}) sigma(X)` as an ascending coefficient list.
pub fn characteristic_polynomial(spec: &SchemeSpec, eta: f64) -> Vec<Complex64> {
    let la = on_circle(spec, eta) * spec.cfl_lambda();
    let mut coeffs = poly::to_complex(spec.alpha());
    for (i, &b) in spec.beta().iter().enumerate() {
        coeffs[i] += la * b;
    }
    coeffs
}

struct SampleOutcome {
    eta: f64,
    max_modulus: f64,
    near_multiple: bool,
}

fn root_condition(roots: &[Complex64]) -> (f64, bool) {
    let max_modulus = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let near_multiple = roots.iter().enumerate().any(|(i, zi)| {
        zi.norm() >= 1.0 - UNIT_TOL
            && roots
                .iter()
                .enumerate()
                .any(|(j, zj)| i != j && (zi - zj).norm() < SIMPLE_SEPARATION)
    });
    (max_modulus, near_multiple)
}

/// Root condition for the Fourier-transformed recurrence at every sampled
/// frequency.
pub fn cauchy_stability(spec: &SchemeSpec, n_samples: usize) -> Result<CauchyStability> {
    if n_samples < 64 {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be >= 64, got {n_samples}"
        )));
    }
    let samples: Vec<Result<SampleOutcome>> = periodic_grid(n_samples)
        .into_par_iter()
        .map(|eta| {
            let roots = poly::roots(&characteristic_polynomial(spec, eta))
                .map_err(|_| Error::RootFinding { eta: Some(eta) })?;
            let (max_modulus, near_multiple) = root_condition(&roots);
            Ok(SampleOutcome {
                eta,
                max_modulus,
                near_multiple,
            })
        })
        .collect();
    let mut worst = (0.0, f64::NEG_INFINITY);
    let mut unstable = false;
    let mut marginal = false;
    for s in samples {
        let s = s?;
        if s.max_modulus > worst.1 {
            worst = (s.eta, s.max_modulus);
        }
        if s.max_modulus > 1.0 + UNIT_TOL {
            unstable = true;
        } else if s.near_multiple {
            marginal = true;
        }
    }
    let verdict = if unstable {
        StabilityVerdict::Unstable
    } else if marginal {
        StabilityVerdict::Marginal
    } else {
        StabilityVerdict::Stable
    };
    Ok(CauchyStability {
        verdict,
        worst_eta: worst.0,
        max_modulus: worst.1,
        curve_in_region: verdict == StabilityVerdict::Stable,
        n_samples,
    })
}

/// A distinct zero of `A` in the punctured unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskRoot {
    pub z: Complex64,
    pub multiplicity: usize,
}

/// Zeros of `A` in `0 < |z| < 1`, grouped by multiplicity and sorted by
/// `(|z|, arg z)`.
pub fn disk_roots(spec: &SchemeSpec) -> Result<Vec<DiskRoot>> {
    let all = poly::roots(&symbol_polynomial(spec))?;
    let mut inside = Vec::new();
    for z in all {
        let m = z.norm();
        if (m - 1.0).abs() < DISK_TOL && (z - 1.0).norm() > CLUSTER_TOL {
            return Err(Error::Borderline { re: z.re, im: z.im });
        }
        if m > 0.0 && m < 1.0 - DISK_TOL {
            inside.push(z);
        }
    }
    let mut out: Vec<DiskRoot> = poly::cluster(&inside, CLUSTER_TOL)
        .into_iter()
        .map(|(z, multiplicity)| DiskRoot { z, multiplicity })
        .collect();
    out.sort_by(|a, b| a.z.norm().total_cmp(&b.z.norm()).then(a.z.arg().total_cmp(&b.z.arg())));
    Ok(out)
}

/// `r` for `a < 0`, `r - 1` for `a > 0`.
pub fn predicted_disk_count(spec: &SchemeSpec) -> i64 {
    let r = spec.r_left() as i64;
    if spec.is_outgoing() {
        r
    } else {
        r - 1
    }
}

/// `(1 / 2 pi i) * integral of A'/A` along the unit circle with a chord cut
/// at `Re z = cos(eps)` around `z = 1` (trapezoid rule with `n_quad` points
/// on each piece). Equals `#zeros - r` inside the contour.
pub fn contour_integral(spec: &SchemeSpec, epsilon: f64, n_quad: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= PI / 4.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, pi/4], got {epsilon}"
        )));
    }
    if n_quad < 2 {
        return Err(Error::InvalidParameter(format!("n_quad must be >= 2, got {n_quad}")));
    }
    let log_deriv =
        |z: Complex64| -> Result<Complex64> { Ok(amplification_derivative(spec, z)? / amplification(spec, z)?) };
    let trapezoid = |path: &dyn Fn(f64) -> (Complex64, Complex64), lo: f64, hi: f64| -> Result<Complex64> {
        let h = (hi - lo) / (n_quad - 1) as f64;
        let mut acc = c(0.0, 0.0);
        for i in 0..n_quad {
            let (z, dz) = path(lo + h * i as f64);
            let w = if i == 0 || i == n_quad - 1 { 0.5 } else { 1.0 };
            acc += log_deriv(z)? * dz * w;
        }
        Ok(acc * h)
    };
    let arc = |t: f64| {
        let z = Complex64::from_polar(1.0, t);
        (z, c(0.0, 1.0) * z)
    };
    let x0 = epsilon.cos();
    let chord = |w: f64| (c(x0, w), c(0.0, 1.0));
    let total = trapezoid(&arc, epsilon, 2.0 * PI - epsilon)? + trapezoid(&chord, -epsilon.sin(), epsilon.sin())?;
    let value = (total / c(0.0, 2.0 * PI)).re;
    if !value.is_finite() {
        return Err(Error::ContourCount {
            value,
            distance: f64::INFINITY,
        });
    }
    Ok(value)
}

/// Number of zeros of `A` in the punctured disk from the argument principle.
pub fn contour_root_count(spec: &SchemeSpec, epsilon: f64, n_quad: usize) -> Result<i64> {
    let value = contour_integral(spec, epsilon, n_quad)?;
    let distance = (value - value.round()).abs();
    if distance > 0.25 {
        return Err(Error::ContourCount { value, distance });
    }
    Ok(value.round() as i64 + spec.r_left() as i64)
}

/// The integrator polynomials `rho(X) = sum alpha_j X^j`, `sigma(X) = sum beta_j X^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistepPolynomials {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl MultistepPolynomials {
    pub fn new(rho: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let k = rho
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidParameter("empty rho".into()))?;
        if k == 0 || rho[k] != 1.0 {
            return Err(Error::InvalidParameter(
                "rho must have degree k >= 1 and leading coefficient 1".into(),
            ));
        }
        if sigma.len() > k {
            return Err(Error::InvalidParameter(format!("deg sigma must be <= {}", k - 1)));
        }
        Ok(MultistepPolynomials { rho, sigma })
    }

    pub fn from_scheme(spec: &SchemeSpec) -> Self {
        MultistepPolynomials {
            rho: spec.alpha().to_vec(),
            sigma: spec.beta().to_vec(),
        }
    }

    pub fn degree(&self) -> usize {
        self.rho.len() - 1
    }

    fn rho_prime_at_one(&self) -> f64 {
        self.rho.iter().enumerate().map(|(j, &c)| j as f64 * c).sum()
    }

    /// `P_mu = rho - mu sigma`.
    pub fn shifted(&self, mu: f64) -> Vec<f64> {
        let mut p = self.rho.clone();
        for (i, &s) in self.sigma.iter().enumerate() {
            p[i] -= mu * s;
        }
        p
    }

    fn check_hypotheses(&self) -> Result<()> {
        let rho1 = poly::eval_real(&self.rho, 1.0);
        if rho1.abs() > CONSISTENCY_TOL {
            return Err(Error::Hypothesis(format!("rho(1) = {rho1} is not zero")));
        }
        let sigma1 = poly::eval_real(&self.sigma, 1.0);
        let drho = self.rho_prime_at_one();
        if (drho - sigma1).abs() > CONSISTENCY_TOL {
            return Err(Error::Hypothesis(format!(
                "order >= 1 needs rho'(1) = sigma(1), got {drho} vs {sigma1}"
            )));
        }
        if sigma1.abs() <= CONSISTENCY_TOL {
            return Err(Error::Hypothesis("sigma(1) = 0".into()));
        }
        let roots = poly::roots(&poly::to_complex(&self.rho))?;
        let (max_modulus, near_multiple) = root_condition(&roots);
        if max_modulus > 1.0 + UNIT_TOL || near_multiple {
            return Err(Error::Hypothesis(
                "rho violates the root condition (method is not zero-stable)".into(),
            ));
        }
        Ok(())
    }
}

/// For each `mu > 0`, whether `rho - mu sigma` has a real root in `(1, inf)`,
/// i.e. whether `mu` lies outside the stability region.
pub fn stability_region_probe(mp: &MultistepPolynomials, mu_samples: &[f64]) -> Result<Vec<bool>> {
    mp.check_hypotheses()?;
    mu_samples
        .iter()
        .map(|&mu| {
            if !(mu > 0.0) {
                return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
            }
            let roots = poly::roots(&poly::to_complex(&mp.shifted(mu)))?;
            Ok(roots
                .iter()
                .any(|z| z.im.abs() <= 1e-9 * z.norm().max(1.0) && z.re > 1.0))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub circle_samples: usize,
    pub circle_tol: f64,
    pub eta_samples: usize,
    pub contour_eps: f64,
    pub contour_quad: usize,
    pub consistency_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            circle_samples: DEFAULT_CIRCLE_SAMPLES,
            circle_tol: DEFAULT_CIRCLE_TOL,
            eta_samples: DEFAULT_ETA_SAMPLES,
            contour_eps: DEFAULT_CONTOUR_EPS,
            contour_quad: DEFAULT_CONTOUR_QUAD,
            consistency_tol: CONSISTENCY_TOL,
        }
    }
}

/// Everything known about the symbol of one scheme.
#[derive(Debug, Clone)]
pub struct SymbolAnalysis {
    pub consistency: ConsistencyReport,
    pub circle: CircleScan,
    pub cauchy: CauchyStability,
    /// Empty when `disk_error` is set.
    pub disk_roots: Vec<DiskRoot>,
    pub disk_error: Option<Error>,
    pub disk_count_poly: Option<usize>,
    pub disk_count_contour: Option<i64>,
    pub contour_error: Option<Error>,
    pub predicted_disk_count: i64,
}

/// Pass/fail of the four structural assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionStatus {
    pub space_consistency: bool,
    pub time_consistency: bool,
    pub cauchy_stability: StabilityVerdict,
    pub unique_circle_root: bool,
}

impl AssumptionStatus {
    pub fn all_pass(&self) -> bool {
        self.space_consistency
            && self.time_consistency
            && self.cauchy_stability == StabilityVerdict::Stable
            && self.unique_circle_root
    }

    /// Names of the failing checks.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.space_consistency {
            out.push("space_consistency");
        }
        if !self.time_consistency {
            out.push("time_consistency");
        }
        if self.cauchy_stability != StabilityVerdict::Stable {
            out.push("cauchy_stability");
        }
        if !self.unique_circle_root {
            out.push("unique_circle_root");
        }
        out
    }
}

impl SymbolAnalysis {
    pub fn assumptions(&self) -> AssumptionStatus {
        AssumptionStatus {
            space_consistency: self.consistency.space_ok,
            time_consistency: self.consistency.time_ok && self.consistency.sigma_alpha_nonzero,
            cauchy_stability: self.cauchy.verdict,
            unique_circle_root: self.circle.unique_root_at_one,
        }
    }

    /// Root counts agree with each other and with the predicted value.
    pub fn counts_agree(&self) -> bool {
        matches!(
            (self.disk_count_poly, self.disk_count_contour),
            (Some(p), Some(c)) if p as i64 == c && c == self.predicted_disk_count
        )
    }
}

pub fn analyze(spec: &SchemeSpec, opts: &AnalysisOptions) -> Result<SymbolAnalysis> {
    let consistency = check_consistency(spec, opts.consistency_tol);
    let circle = circle_roots(spec, opts.circle_samples, opts.circle_tol)?;
    let cauchy = cauchy_stability(spec, opts.eta_samples)?;
    let (disk_roots, disk_error) = match disk_roots(spec) {
        Ok(d) => (d, None),
        Err(e) => (Vec::new(), Some(e)),
    };
    let disk_count_poly = disk_error
        .is_none()
        .then(|| disk_roots.iter().map(|d| d.multiplicity).sum());
    let (disk_count_contour, contour_error) = if circle.unique_root_at_one && consistency.space_ok {
        match contour_root_count(spec, opts.contour_eps, opts.contour_quad) {
            Ok(n) => (Some(n), None),
            Err(e) => (None, Some(e)),
        }
    } else {
        (
            None,
            Some(Error::NotApplicable(
                "contour count needs a unique circle root at z = 1".into(),
            )),
        )
    };
    Ok(SymbolAnalysis {
        consistency,
        circle,
        cauchy,
        disk_roots,
        disk_error,
        disk_count_poly,
        disk_count_contour,
        contour_error,
        predicted_disk_count: predicted_disk_count(spec),
    })
}
