//! Small dense polynomial helpers. Coefficients are stored in ascending order
//! (`c[0] + c[1] X + ...`).

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn eval_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

pub fn to_complex(coeffs: &[f64]) -> Vec<Complex64> {
    coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()
}

/// All roots (with repetition) of a polynomial, from the eigenvalues of its
/// companion matrix, followed by a few guarded Newton polishing steps.
///
/// Exact zero leading coefficients are dropped; a zero polynomial is an error.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = match coeffs.iter().rposition(|c| c.norm() != 0.0) {
        Some(d) => d,
        None => return Err(Error::InvalidParameter("zero polynomial has no isolated roots".into())),
    };
    let coeffs = &coeffs[..=deg];
    // roots at the origin are split off exactly
    let zeros = coeffs.iter().position(|c| c.norm() != 0.0).unwrap();
    let reduced = &coeffs[zeros..];
    let n = reduced.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    if n == 0 {
        return Ok(out);
    }
    let lead = reduced[n];
    let mut comp = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -reduced[i] / lead;
    }
    let schur = Schur::try_new(comp, 1e-15, 10_000).ok_or(Error::RootFinding { eta: None })?;
    let eig = schur.eigenvalues().ok_or(Error::RootFinding { eta: None })?;
    let dp = derivative(reduced);
    for &z0 in eig.iter() {
        out.push(polish(reduced, &dp, z0));
    }
    Ok(out)
}

fn polish(p: &[Complex64], dp: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut best = eval(p, z).norm();
    for _ in 0..3 {
        let d = eval(dp, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - eval(p, z) / d;
        let val = eval(p, cand).norm();
        if !(val < best) {
            break;
        }
        best = val;
        z = cand;
    }
    z
}

/// Groups roots lying within `tol` of each other (single linkage) into
/// `(centroid, multiplicity)` pairs.
pub fn cluster(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let n = roots.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn find(g: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (roots[i] - roots[j]).norm() < tol {
                let (a, b) = (find(&mut group, i), find(&mut group, j));
                if a != b {
                    group[b] = a;
                }
            }
        }
    }
    let mut out: Vec<(usize, Complex64, usize)> = Vec::new();
    for (i, &z) in roots.iter().enumerate() {
        let g = find(&mut group, i);
        match out.iter_mut().find(|(id, _, _)| *id == g) {
            Some(entry) => {
                entry.1 += z;
                entry.2 += 1;
            }
            None => out.push((g, z, 1)),
        }
    }
    out.into_iter().map(|(_, sum, m)| (sum / m as f64, m)).collect()
}
