//! Leading boundary-layer profile `w` and first corrector `w~` for the
//! homogeneous Dirichlet closure.
//!
//! For `a < 0` the profile is the unique decaying solution of
//! `sum_l a_l w_{j+l} = 0` (`j >= r`) with `w_0 = ... = w_{r-1} = -1`; the
//! corrector is the unique decaying solution of
//! `sum_l a_l w~_{j+l} + w_j = 0` (`j >= r`) with `w~_0 = ... = w~_{r-1} = 0`.
//! Both are finite sums of `c j^s z^j` over the zeros `z` of `A` in the unit
//! disk. For `a > 0` both vanish identically.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scheme::SchemeSpec;
use crate::symbol::{analyze, AnalysisOptions, DiskRoot, SymbolAnalysis};

/// Largest accepted condition number of the `r x r` basis matrix.
pub const MAX_BASIS_CONDITION: f64 = 1e12;
/// Imaginary residue tolerated in evaluated sequences.
pub const REALNESS_TOL: f64 = 1e-10;
/// Cap on materialized profile lengths.
pub const MAX_HORIZON: usize = 10_000;

const UNDERFLOW: f64 = 1e-300;

/// One term `coeff * j^power * root^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub root: Complex64,
    pub power: u32,
    pub coeff: Complex64,
}

/// A closed-form exponentially decaying sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerSequence {
    terms: Vec<Term>,
    decay_rate: f64,
}

impl LayerSequence {
    fn new(terms: Vec<Term>) -> Self {
        let decay_rate = terms.iter().map(|t| t.root.norm()).fold(0.0, f64::max);
        LayerSequence { terms, decay_rate }
    }

    pub fn zero() -> Self {
        LayerSequence::default()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// First index past which `rho^j` underflows.
    fn cutoff(&self) -> usize {
        if self.decay_rate <= 0.0 {
            return 0;
        }
        (UNDERFLOW.ln() / self.decay_rate.ln()).ceil() as usize
    }

    pub fn evaluate_complex(&self, j: usize) -> Complex64 {
        if self.terms.is_empty() || j >= self.cutoff() {
            return Complex64::new(0.0, 0.0);
        }
        let jf = j as f64;
        self.terms
            .iter()
            .map(|t| t.coeff * jf.powi(t.power as i32) * t.root.powu(j as u32))
            .sum()
    }

    /// Real part of the closed form; exactly zero past the underflow cutoff.
    pub fn evaluate(&self, j: usize) -> f64 {
        self.evaluate_complex(j).re
    }

    /// Values `0..horizon`.
    pub fn materialize(&self, horizon: usize) -> Vec<f64> {
        (0..horizon).map(|j| self.evaluate(j)).collect()
    }

    /// Smallest `J` with `rho^J < 1e-16`, capped at [`MAX_HORIZON`].
    pub fn truncation_horizon(&self) -> usize {
        if self.decay_rate <= 0.0 {
            return 0;
        }
        let j = (1e-16f64.ln() / self.decay_rate.ln()).floor() as usize + 1;
        j.min(MAX_HORIZON)
    }

    fn check_real(&self, horizon: usize) -> Result<()> {
        for j in 0..horizon {
            let v = self.evaluate_complex(j);
            if v.im.abs() > REALNESS_TOL {
                return Err(Error::NotReal { j, imag: v.im });
            }
        }
        Ok(())
    }
}

/// Which sequence to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// `w`, the leading profile for unit trace.
    Profile,
    /// `w~`, the first corrector.
    Corrector,
}

/// Set of traces admitting a decaying profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnumKind {
    /// `a > 0`: only the zero trace.
    Trivial,
    /// `a < 0`: every real trace.
    FullLine,
}

/// Coefficients of the corrector construction: per basis element the
/// particular-solution coefficients `varsigma`, then the homogeneous
/// correction `varpi` fixing the boundary rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrectorCoeffs {
    pub varsigma: Vec<Vec<Complex64>>,
    pub varpi: Vec<Complex64>,
}

/// Corrector descriptor returned by [`build_corrector`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corrector {
    pub sequence: LayerSequence,
    pub coeffs: CorrectorCoeffs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLayerProfile {
    pub roots: Vec<DiskRoot>,
    /// Coefficients of `w` in the basis `(j^nu z_i^j)`, roots in the order of
    /// `roots`, `nu` ascending.
    pub omega: Vec<Complex64>,
    pub corrector_coeffs: CorrectorCoeffs,
    /// `max_i |z_i|`, zero without roots.
    pub decay_rate: f64,
    pub c_num_kind: CnumKind,
    r_left: usize,
    profile: LayerSequence,
    corrector: LayerSequence,
}

/// `(root, nu)` pairs spanning the decaying solutions of the recurrence.
fn basis(roots: &[DiskRoot]) -> Vec<(usize, u32)> {
    roots
        .iter()
        .enumerate()
        .flat_map(|(i, d)| (0..d.multiplicity as u32).map(move |nu| (i, nu)))
        .collect()
}

fn basis_value(root: Complex64, nu: u32, j: usize) -> Complex64 {
    // 0^0 = 1
    (j as f64).powi(nu as i32) * root.powu(j as u32)
}

fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

struct BasisSystem {
    elems: Vec<(usize, u32)>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl BasisSystem {
    fn new(roots: &[DiskRoot], r: usize) -> Result<Self> {
        let elems = basis(roots);
        if elems.len() != r {
            return Err(Error::NotApplicable(format!(
                "{} decaying modes for {r} boundary rows; root count does not match the left stencil width",
                elems.len()
            )));
        }
        let m = DMatrix::from_fn(r, r, |j, col| {
            let (i, nu) = elems[col];
            basis_value(roots[i].z, nu, j)
        });
        let cond = condition_number(&m);
        if !(cond <= MAX_BASIS_CONDITION) {
            return Err(Error::Singular { cond });
        }
        Ok(BasisSystem { elems, lu: m.lu() })
    }

    fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let b = nalgebra::DVector::from_column_slice(rhs);
        let x = self.lu.solve(&b).ok_or(Error::Singular { cond: f64::INFINITY })?;
        Ok(x.iter().copied().collect())
    }
}

/// Leading profile (and, for `a < 0`, the corrector) of a scheme whose
/// assumptions were verified by `analysis`.
pub fn build_profile(spec: &SchemeSpec, analysis: &SymbolAnalysis) -> Result<BoundaryLayerProfile> {
    let status = analysis.assumptions();
    if !status.all_pass() {
        return Err(Error::NotApplicable(format!(
            "boundary-layer profile needs every assumption to hold; failing: {}",
            status.failures().join(", ")
        )));
    }
    if let Some(e) = &analysis.disk_error {
        return Err(e.clone());
    }
    assemble(spec, analysis.disk_roots.clone())
}

/// Profile and corrector from the disk roots of `A`.
fn assemble(spec: &SchemeSpec, roots: Vec<DiskRoot>) -> Result<BoundaryLayerProfile> {
    let r = spec.r_left();
    let decay_rate = roots.iter().map(|d| d.z.norm()).fold(0.0, f64::max);
    if !spec.is_outgoing() {
        return Ok(BoundaryLayerProfile {
            roots,
            omega: Vec::new(),
            corrector_coeffs: CorrectorCoeffs::default(),
            decay_rate,
            c_num_kind: CnumKind::Trivial,
            r_left: r,
            profile: LayerSequence::zero(),
            corrector: LayerSequence::zero(),
        });
    }
    if r == 0 {
        // No Dirichlet rows, so nothing to correct.
        return Ok(BoundaryLayerProfile {
            roots,
            omega: Vec::new(),
            corrector_coeffs: CorrectorCoeffs::default(),
            decay_rate,
            c_num_kind: CnumKind::FullLine,
            r_left: 0,
            profile: LayerSequence::zero(),
            corrector: LayerSequence::zero(),
        });
    }
    let system = BasisSystem::new(&roots, r)?;
    let omega = system.solve(&vec![Complex64::new(-1.0, 0.0); r])?;
    let terms = system
        .elems
        .iter()
        .zip(&omega)
        .map(|(&(i, nu), &coeff)| Term {
            root: roots[i].z,
            power: nu,
            coeff,
        })
        .collect();
    let profile = LayerSequence::new(terms);
    profile.check_real(profile.truncation_horizon().max(r))?;
    let mut out = BoundaryLayerProfile {
        roots,
        omega,
        corrector_coeffs: CorrectorCoeffs::default(),
        decay_rate,
        c_num_kind: CnumKind::FullLine,
        r_left: r,
        profile,
        corrector: LayerSequence::zero(),
    };
    let corrector = build_corrector(spec, &out)?;
    out.corrector = corrector.sequence;
    out.corrector_coeffs = corrector.coeffs;
    Ok(out)
}

/// Runs the symbol analysis with default options and builds the profile.
pub fn profile_for(spec: &SchemeSpec) -> Result<BoundaryLayerProfile> {
    let analysis = analyze(spec, &AnalysisOptions::default())?;
    build_profile(spec, &analysis)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `D_t(z) = sum_l a_l l^t z^l`, i.e. `(z d/dz)^t A` at `z`.
fn moment_symbol(spec: &SchemeSpec, t: u32, z: Complex64) -> Complex64 {
    spec.stencil()
        .map(|(l, a)| a * (l as f64).powi(t as i32) * z.powi(l as i32))
        .sum()
}

/// First corrector `w~` of a built profile.
///
/// For each basis element `j^nu z^j` of `w` (with `z` of multiplicity `mu`)
/// a particular solution `sum_{q <= nu} varsigma_q j^{mu+q} z^j` is found
/// from the upper triangular system obtained by expanding
/// `sum_l a_l (j+l)^s z^{j+l}` in powers of `j`; the boundary rows are then
/// reset to zero with a homogeneous combination.
pub fn build_corrector(spec: &SchemeSpec, profile: &BoundaryLayerProfile) -> Result<Corrector> {
    if !spec.is_outgoing() || profile.c_num_kind == CnumKind::Trivial {
        return Ok(Corrector::default());
    }
    let r = spec.r_left();
    let roots = &profile.roots;
    let system = BasisSystem::new(roots, r)?;
    let mut terms = Vec::new();
    let mut varsigma_all = Vec::with_capacity(system.elems.len());
    for (&(i, nu), &omega) in system.elems.iter().zip(&profile.omega) {
        let z = roots[i].z;
        let mu = roots[i].multiplicity as u32;
        // coefficient of j^q z^j in L[j^{mu+m} z^j] is C(mu+m, q) D_{mu+m-q}(z), m >= q
        let entry = |q: u32, m: u32| {
            let s = mu + m;
            binomial(s, q) * moment_symbol(spec, s - q, z)
        };
        let n = nu as usize + 1;
        let mut varsigma = vec![Complex64::new(0.0, 0.0); n];
        for q in (0..n).rev() {
            let rhs = if q == nu as usize {
                -Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let known: Complex64 = ((q + 1)..n).map(|m| entry(q as u32, m as u32) * varsigma[m]).sum();
            let diag = entry(q as u32, q as u32);
            if diag.norm() == 0.0 {
                return Err(Error::Singular { cond: f64::INFINITY });
            }
            varsigma[q] = (rhs - known) / diag;
        }
        for (m, &vs) in varsigma.iter().enumerate() {
            terms.push(Term {
                root: z,
                power: mu + m as u32,
                coeff: omega * vs,
            });
        }
        varsigma_all.push(varsigma);
    }
    let particular = LayerSequence::new(terms.clone());
    let rhs: Vec<Complex64> = (0..r).map(|j| -particular.evaluate_complex(j)).collect();
    let varpi = system.solve(&rhs)?;
    for (&(i, nu), &coeff) in system.elems.iter().zip(&varpi) {
        terms.push(Term {
            root: roots[i].z,
            power: nu,
            coeff,
        });
    }
    let sequence = LayerSequence::new(terms);
    sequence.check_real(sequence.truncation_horizon().max(r))?;
    Ok(Corrector {
        sequence,
        coeffs: CorrectorCoeffs {
            varsigma: varsigma_all,
            varpi,
        },
    })
}

impl BoundaryLayerProfile {
    pub fn r_left(&self) -> usize {
        self.r_left
    }

    pub fn sequence(&self, which: Layer) -> &LayerSequence {
        match which {
            Layer::Profile => &self.profile,
            Layer::Corrector => &self.corrector,
        }
    }

    pub fn evaluate(&self, which: Layer, j: usize) -> f64 {
        self.sequence(which).evaluate(j)
    }

    /// `(j, w_j, w~_j)` for `j <= horizon`.
    pub fn table(&self, horizon: usize) -> Vec<(usize, f64, f64)> {
        (0..=horizon)
            .map(|j| (j, self.profile.evaluate(j), self.corrector.evaluate(j)))
            .collect()
    }
}

pub fn evaluate(profile: &BoundaryLayerProfile, which: Layer, j: usize) -> f64 {
    profile.evaluate(which, j)
}
