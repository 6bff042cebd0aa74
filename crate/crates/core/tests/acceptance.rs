//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{bump, layer_checks};
use num_complex::Complex64;
use numbl::boundary_layer::profile_for;
use numbl::simulator::{convergence_study, run, simulate, Grid, RunOptions, SimulateOptions, StoppingRule};
use numbl::symbol::{self, amplification, circle_roots, contour_root_count, disk_roots, predicted_disk_count};
use numbl::{builtin_scheme, BuiltinScheme, SchemeSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn ab3(lambda: f64) -> SchemeSpec {
    builtin_scheme(BuiltinScheme::Ab3FivePoint, -1.0, lambda).unwrap()
}

fn disk_roots_of_ab3() -> Outcome {
    let s = ab3(0.4);
    let a = symbol::analyze(&s, &symbol::AnalysisOptions::default()).unwrap();
    let roots = &a.disk_roots;
    let simple_real = roots.len() == 2 && roots.iter().all(|d| d.multiplicity == 1 && d.z.im.abs() < 1e-12);
    let near = |want: f64| roots.iter().any(|d| (d.z.re - want).abs() < 5e-4);
    let counts = a.disk_count_contour == Some(2) && a.predicted_disk_count == 2 && a.disk_count_poly == Some(2);
    Outcome {
        pass: simple_real && near(-0.6595) && near(0.0809) && counts,
        detail: format!(
            "roots {:?}, contour {:?}, predicted {}",
            roots.iter().map(|d| d.z.re).collect::<Vec<_>>(),
            a.disk_count_contour,
            a.predicted_disk_count
        ),
    }
}

fn symbol_identity() -> Outcome {
    let s = ab3(0.4);
    let worst = (0..4096)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / 4096.0;
            let v = amplification(&s, Complex64::from_polar(1.0, theta)).unwrap();
            (v.re - 2.0 / 3.0 * (theta / 2.0).sin().powi(4)).abs()
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: worst < 1e-12,
        detail: format!("max deviation {worst:.3e}"),
    }
}

fn root_count_matrix() -> Outcome {
    let cases = [
        (BuiltinScheme::Upwind, 1.0, 0.5, 0),
        (BuiltinScheme::LaxFriedrichs, -1.0, 0.5, 1),
        (BuiltinScheme::LaxWendroff, -1.0, 0.5, 1),
        (BuiltinScheme::LaxWendroff, 1.0, 0.5, 0),
        (BuiltinScheme::Ab3FivePoint, -1.0, 0.4, 2),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (b, a, lambda, want) in cases {
        let s = builtin_scheme(b, a, lambda).unwrap();
        let roots = disk_roots(&s).unwrap();
        let poly: usize = roots.iter().map(|d| d.multiplicity).sum();
        let contour = contour_root_count(&s, 0.1, 2048).unwrap();
        let ok = poly as i64 == want && contour == want && predicted_disk_count(&s) == want;
        pass &= ok;
        detail.push(format!("{b}(a={a}):{poly}/{contour}"));
        if b == BuiltinScheme::LaxFriedrichs {
            let z = (1.0 + lambda * a) / (1.0 - lambda * a);
            let hit = roots.len() == 1 && (roots[0].z - Complex64::new(z, 0.0)).norm() < 1e-10;
            pass &= hit;
        }
    }
    Outcome {
        pass,
        detail: detail.join(" "),
    }
}

fn leap_frog_counterexample() -> Outcome {
    let s = builtin_scheme(BuiltinScheme::LeapFrog, -1.0, 0.4).unwrap();
    let scan = circle_roots(&s, 1024, 1e-8).unwrap();
    let at_pi = scan.roots.iter().find(|r| (r.theta.abs() - PI).abs() < 1e-6);
    let status = Command::new(env!("CARGO_BIN_EXE_numbl"))
        .args(["assumptions", "--scheme", "leap_frog", "--a", "-1", "--lambda", "0.4"])
        .output()
        .expect("binary runs")
        .status
        .code();
    Outcome {
        pass: at_pi.is_some() && !scan.unique_root_at_one && status.is_some_and(|c| c != 0),
        detail: format!("root at theta {:?}, exit status {:?}", at_pi.map(|r| r.theta), status),
    }
}

fn convergence_orders() -> Outcome {
    let s = ab3(0.4);
    let levels: Vec<usize> = (5..=10).map(|m| 1 << m).collect();
    let opts = RunOptions::default();
    let short = convergence_study(&s, &bump, 0.125, &levels, &opts).unwrap();
    let long = convergence_study(&s, &bump, 0.4, &levels, &opts).unwrap();
    let inside = |v: Option<f64>, lo: f64, hi: f64| v.is_some_and(|x| x >= lo && x <= hi);
    let pass = short.is_complete()
        && long.is_complete()
        && inside(short.raw_slope, 2.7, 3.3)
        && inside(short.corrected_slope, 2.7, 3.3)
        && inside(long.raw_slope, 0.2, 0.8)
        && inside(long.corrected_slope, 1.2, 1.8);
    let f = |v: Option<f64>| v.map_or("n/a".into(), |x| format!("{x:.3}"));
    Outcome {
        pass,
        detail: format!(
            "T=0.125 raw {} corrected {}; T=0.4 raw {} corrected {}",
            f(short.raw_slope),
            f(short.corrected_slope),
            f(long.raw_slope),
            f(long.corrected_slope)
        ),
    }
}

fn boundary_layer_fit() -> Outcome {
    let s = ab3(0.4);
    let g = Grid::unit(&s, 216).unwrap();
    let sim = simulate(&s, &g, &bump, 0.5, &SimulateOptions::default()).unwrap();
    let u = &sim.solution.snapshots[0].u;
    let (int, app) = &sim.references[0];
    let app = app.as_ref().unwrap();
    let near = |reference: &[f64]| (0..20).map(|j| (u[j] - reference[j]).abs()).fold(0.0, f64::max);
    let (with_layer, without) = (near(app), near(int));
    Outcome {
        pass: with_layer <= 0.2 * without,
        detail: format!(
            "n = {}, max |u - u_app| = {with_layer:.3e}, max |u - u_int| = {without:.3e}, ratio {:.4}",
            sim.solution.snapshots[0].n,
            with_layer / without
        ),
    }
}

fn residual_suites() -> Outcome {
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let cases = [
        (BuiltinScheme::LaxFriedrichs, 0.3),
        (BuiltinScheme::LaxFriedrichs, 0.5),
        (BuiltinScheme::LaxFriedrichs, 0.8),
        (BuiltinScheme::Ab3FivePoint, 0.2),
        (BuiltinScheme::Ab3FivePoint, 0.3),
        (BuiltinScheme::Ab3FivePoint, 0.4),
    ];
    for (b, lambda) in cases {
        let s = builtin_scheme(b, -1.0, lambda).unwrap();
        let p = profile_for(&s).unwrap();
        let c = layer_checks(&s, &p);
        let recurrence = c.profile_recurrence.max(c.corrector_recurrence);
        pass &= recurrence < 1e-9 && c.boundary_rows < 1e-12 && c.decay_violations == 0 && c.oracle_gap < 1e-6;
        worst = (
            worst.0.max(recurrence),
            worst.1.max(c.boundary_rows),
            worst.2.max(c.oracle_gap),
        );
    }
    Outcome {
        pass,
        detail: format!(
            "recurrence {:.2e}, boundary rows {:.2e}, oracle gap {:.2e}",
            worst.0, worst.1, worst.2
        ),
    }
}

fn semigroup_bound() -> Outcome {
    let s = ab3(0.4);
    let mut sups = Vec::new();
    let mut pass = true;
    for n in [64usize, 128, 256, 512] {
        let g = Grid::unit(&s, n).unwrap();
        let sol = run(&s, &g, &bump, 1.0, &RunOptions::default()).unwrap();
        let sup = sol.norm_history.iter().cloned().fold(0.0, f64::max);
        pass &= sup <= 2.0 * sol.norm_history[0];
        sups.push(sup);
    }
    let ratios: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
    pass &= ratios.iter().all(|&r| r <= 1.1);
    Outcome {
        pass,
        detail: format!("sup norms {sups:.5?}, ratios {ratios:.4?}"),
    }
}

fn trajectory(s: &SchemeSpec, g: &Grid, u0: &(dyn Fn(f64) -> f64 + Sync), steps: usize) -> Vec<Vec<f64>> {
    let opts = RunOptions {
        keep_trajectory: true,
        stopping: StoppingRule::Floor,
        ..RunOptions::default()
    };
    let sol = run(s, g, u0, g.t(steps), &opts).unwrap();
    sol.trajectory.unwrap()
}

fn simulator_invariants() -> Outcome {
    let s = ab3(0.4);
    let (r, p, k) = (s.r_left(), s.p_right(), s.k_levels());
    let g = Grid::unit(&s, 64).unwrap();
    let steps = 200;
    let sine = |x: f64| (2.0 * PI * x).sin();
    let combo = |x: f64| bump(x) - 2.5 * sine(x);
    let (ub, us, uc) = (
        trajectory(&s, &g, &bump, steps),
        trajectory(&s, &g, &sine, steps),
        trajectory(&s, &g, &combo, steps),
    );
    let mut linearity: f64 = 0.0;
    for n in 0..=steps {
        for j in 0..g.n_cells {
            linearity = linearity.max((uc[n][j] - ub[n][j] + 2.5 * us[n][j]).abs());
        }
    }
    let zero = trajectory(&s, &g, &|_| 0.0, steps);
    let zero_exact = zero.iter().all(|l| l.iter().all(|&v| v == 0.0));

    // constant data stays 1 away from both ends of the domain
    let width = r.max(p);
    let mut constant: f64 = 0.0;
    let mut cone_cells = 0;
    for (n_cells, n_steps) in [(64usize, steps), (2048, steps)] {
        let g = Grid::unit(&s, n_cells).unwrap();
        let one = trajectory(&s, &g, &|_| 1.0, n_steps);
        for (n, level) in one.iter().enumerate() {
            let lo = r + n * width;
            let hi = n_cells.saturating_sub(n * width);
            for v in level.iter().take(hi).skip(lo) {
                constant = constant.max((v - 1.0).abs());
                cone_cells += 1;
            }
        }
    }
    let dirichlet = ub.iter().skip(k).all(|l| l[..r].iter().all(|&v| v == 0.0));
    Outcome {
        pass: ub.len() == steps + 1 && linearity < 1e-10 && zero_exact && constant < 1e-12 && dirichlet,
        detail: format!(
            "linearity {linearity:.2e}, zero exact {zero_exact}, constant {constant:.2e} over {cone_cells} cells, dirichlet rows zero {dirichlet}"
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "disk roots of the AB3 scheme",
            disk_roots_of_ab3,
            Duration::from_secs(1),
        ),
        ("real part of the AB3 symbol", symbol_identity, Duration::from_secs(1)),
        ("disk root counts", root_count_matrix, Duration::from_secs(5)),
        (
            "leap-frog circle root",
            leap_frog_counterexample,
            Duration::from_secs(1),
        ),
        ("convergence orders", convergence_orders, Duration::from_secs(120)),
        (
            "boundary-layer fit near x = 0",
            boundary_layer_fit,
            Duration::from_secs(10),
        ),
        (
            "profile and corrector residuals",
            residual_suites,
            Duration::from_secs(5),
        ),
        ("semigroup bound", semigroup_bound, Duration::from_secs(60)),
        ("simulator invariants", simulator_invariants, Duration::from_secs(5)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} {name} ({:.2}s of {}s): {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            outcome.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
