//! Oracles shared by the integration tests.
#![allow(dead_code)]

use numbl::boundary_layer::{BoundaryLayerProfile, Layer};
use numbl::SchemeSpec;

/// `sum_l a_l v_{j+l}`.
pub fn apply(spec: &SchemeSpec, v: &[f64], j: usize) -> f64 {
    spec.stencil().map(|(l, a)| a * v[(j as i64 + l) as usize]).sum()
}

/// Solves the truncated boundary problem on `0..len`: rows `j < r` fix
/// `v_j = boundary`, rows `j >= r` impose `sum_l a_l v_{j+l} = rhs_j` with
/// `v = 0` past the end. Banded Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn truncated_layer(spec: &SchemeSpec, len: usize, boundary: f64, rhs: &[f64]) -> Vec<f64> {
    let r = spec.r_left();
    let p = spec.p_right();
    let mut m = vec![vec![0.0; len]; len];
    let mut b = vec![0.0; len];
    for j in 0..len {
        if j < r {
            m[j][j] = 1.0;
            b[j] = boundary;
        } else {
            for (l, a) in spec.stencil() {
                let col = (j as i64 + l) as usize;
                if col < len {
                    m[j][col] = a;
                }
            }
            b[j] = rhs[j];
        }
    }
    // lower bandwidth r, upper bandwidth p (r + p after pivoting)
    for c in 0..len {
        let last_row = (c + r).min(len - 1);
        let piv = (c..=last_row)
            .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
            .unwrap();
        m.swap(c, piv);
        b.swap(c, piv);
        let last_col = (c + r + p).min(len - 1);
        for row in c + 1..=last_row {
            let f = m[row][c] / m[c][c];
            if f == 0.0 {
                continue;
            }
            for col in c..=last_col {
                m[row][col] -= f * m[c][col];
            }
            b[row] -= f * b[c];
        }
    }
    let mut x = vec![0.0; len];
    for row in (0..len).rev() {
        let last_col = (row + r + p).min(len - 1);
        let s: f64 = (row + 1..=last_col).map(|col| m[row][col] * x[col]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

/// Oracle pair `(w, w~)` on `0..len`.
pub fn oracle_layers(spec: &SchemeSpec, len: usize) -> (Vec<f64>, Vec<f64>) {
    let w = truncated_layer(spec, len, -1.0, &vec![0.0; len]);
    let minus_w: Vec<f64> = w.iter().map(|v| -v).collect();
    let wt = truncated_layer(spec, len, 0.0, &minus_w);
    (w, wt)
}

/// Residual summary of a profile against its defining equations.
pub struct LayerChecks {
    pub profile_recurrence: f64,
    pub corrector_recurrence: f64,
    pub boundary_rows: f64,
    pub decay_violations: usize,
    pub oracle_gap: f64,
}

pub fn layer_checks(spec: &SchemeSpec, profile: &BoundaryLayerProfile) -> LayerChecks {
    let r = spec.r_left();
    let horizon = 200;
    let w = profile
        .sequence(Layer::Profile)
        .materialize(horizon + spec.p_right() + 1);
    let wt = profile
        .sequence(Layer::Corrector)
        .materialize(horizon + spec.p_right() + 1);
    let mut profile_recurrence: f64 = 0.0;
    let mut corrector_recurrence: f64 = 0.0;
    for j in r..=horizon {
        profile_recurrence = profile_recurrence.max(apply(spec, &w, j).abs());
        corrector_recurrence = corrector_recurrence.max((apply(spec, &wt, j) + w[j]).abs());
    }
    let mut boundary_rows: f64 = 0.0;
    for j in 0..r {
        boundary_rows = boundary_rows.max((w[j] + 1.0).abs()).max(wt[j].abs());
    }
    // |sum c j^s z^j| <= sum |c| j^s rho^j
    let mut decay_violations = 0;
    for seq in [profile.sequence(Layer::Profile), profile.sequence(Layer::Corrector)] {
        for j in 0..=horizon {
            let bound: f64 = seq
                .terms()
                .iter()
                .map(|t| t.coeff.norm() * (j as f64).powi(t.power as i32) * profile.decay_rate.powi(j as i32))
                .sum();
            if seq.evaluate(j).abs() > bound * (1.0 + 1e-9) + 1e-300 {
                decay_violations += 1;
            }
        }
    }
    let (ow, owt) = oracle_layers(spec, 400);
    let mut oracle_gap: f64 = 0.0;
    for j in 0..100 {
        oracle_gap = oracle_gap.max((ow[j] - w[j]).abs()).max((owt[j] - wt[j]).abs());
    }
    LayerChecks {
        profile_recurrence,
        corrector_recurrence,
        boundary_rows,
        decay_violations,
        oracle_gap,
    }
}

/// Composite adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
            return l + r + (l + r - whole) / 15.0;
        }
        rec(f, a, m, l, tol / 2.0, depth - 1) + rec(f, m, b, r, tol / 2.0, depth - 1)
    }
    rec(f, lo, hi, simpson(f, lo, hi), tol, 40)
}

pub fn bump(x: f64) -> f64 {
    (-100.0 * (x - 0.5) * (x - 0.5)).exp()
}
