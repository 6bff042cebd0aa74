//! Discrete initial boundary value problem on `[0, x_max]`: cell-average
//! initial data, the multistep update with homogeneous Dirichlet rows
//! `u_0 = ... = u_{r-1} = 0` on the left and zero ghost cells on the right,
//! the two-scale approximate solution, and the error measurements.

use std::cell::Cell;
use std::collections::VecDeque;

use rayon::prelude::*;

use crate::boundary_layer::{BoundaryLayerProfile, Layer};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scheme::SchemeSpec;
use crate::symbol::{analyze, AnalysisOptions};

pub const DEFAULT_QUAD_ORDER: usize = 6;
/// Errors below this are treated as quadrature-floor limited in slope fits.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Initial condition `u_0`, defined on `x >= 0`.
pub type InitialData<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Uniform grid: `N` cells of width `dx = x_max / N`, `dt = lambda dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_cells: usize,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
}

impl Grid {
    pub fn new(spec: &SchemeSpec, n_cells: usize, x_max: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidParameter("grid needs at least one cell".into()));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!("x_max must be positive, got {x_max}")));
        }
        let dx = x_max / n_cells as f64;
        Ok(Grid {
            n_cells,
            x_max,
            dx,
            dt: spec.cfl_lambda() * dx,
        })
    }

    /// Unit interval, the usual setting.
    pub fn unit(spec: &SchemeSpec, n_cells: usize) -> Result<Self> {
        Self::new(spec, n_cells, 1.0)
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// How a requested time maps to a time level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoppingRule {
    /// Largest `n` with `n dt <= T`.
    #[default]
    Floor,
    /// First `n` with `n dt >= T`.
    Ceil,
}

impl StoppingRule {
    pub fn level(self, t: f64, dt: f64) -> usize {
        let ratio = t / dt;
        // absorb representation error in T / dt
        let snapped = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.abs().max(1.0) {
            ratio.round()
        } else {
            ratio
        };
        match self {
            StoppingRule::Floor => snapped.floor().max(0.0) as usize,
            StoppingRule::Ceil => snapped.ceil().max(0.0) as usize,
        }
    }
}

/// `u^ex(x, t) = u_0(x - a t)`, with `u_0` extended by zero to `x < 0` for
/// `a > 0`.
pub fn exact_interior(u0: InitialData, a: f64, x: f64, t: f64) -> f64 {
    let y = x - a * t;
    if a > 0.0 && y < 0.0 {
        0.0
    } else {
        u0(y)
    }
}

fn cell_average(u0: InitialData, a: f64, t: f64, lo: f64, hi: f64, gl: &GaussLegendre) -> Result<f64> {
    let bad = Cell::new(None);
    let f = |x: f64| {
        let y = x - a * t;
        if a > 0.0 && y < 0.0 {
            return 0.0;
        }
        let v = u0(y);
        if !v.is_finite() && bad.get().is_none() {
            bad.set(Some(y));
        }
        v
    };
    let width = hi - lo;
    let kink = a * t;
    let integral = if a > 0.0 && kink > lo && kink < hi {
        gl.integrate(f, lo, kink) + gl.integrate(f, kink, hi)
    } else {
        gl.integrate(f, lo, hi)
    };
    if let Some(x) = bad.get() {
        return Err(Error::NonFiniteInput { x });
    }
    Ok(integral / width)
}

/// `u^int_{j,n}`: cell averages of `u_0(x - a t^n)` over every cell.
pub fn interior_level(
    spec: &SchemeSpec,
    grid: &Grid,
    u0: InitialData,
    n: usize,
    quad_order: usize,
) -> Result<Vec<f64>> {
    let gl = GaussLegendre::new(quad_order);
    let t = grid.t(n);
    (0..grid.n_cells)
        .map(|j| cell_average(u0, spec.a_velocity(), t, grid.x(j), grid.x(j + 1), &gl))
        .collect()
}

/// The `k` starting levels `n = 0..k-1`.
pub fn initial_levels(spec: &SchemeSpec, grid: &Grid, u0: InitialData, quad_order: usize) -> Result<Vec<Vec<f64>>> {
    (0..spec.k_levels())
        .map(|n| interior_level(spec, grid, u0, n, quad_order))
        .collect()
}

/// `u^tr_n = (1/dt) int_{t^n}^{t^{n+1}} u_0(-a t) dt`, outgoing case only.
pub fn trace_average(u0: InitialData, a: f64, n: usize, dt: f64, quad_order: usize) -> Result<f64> {
    if a > 0.0 {
        return Err(Error::NotApplicable("trace average is only defined for a < 0".into()));
    }
    let gl = GaussLegendre::new(quad_order);
    let (lo, hi) = (n as f64 * dt, (n + 1) as f64 * dt);
    let bad = Cell::new(None);
    let v = gl.integrate(
        |t| {
            let v = u0(-a * t);
            if !v.is_finite() && bad.get().is_none() {
                bad.set(Some(-a * t));
            }
            v
        },
        lo,
        hi,
    ) / dt;
    match bad.get() {
        Some(x) => Err(Error::NonFiniteInput { x }),
        None => Ok(v),
    }
}

/// `sqrt(dx * sum (u_j - ref_j)^2)`.
pub fn error_norm(u: &[f64], reference: &[f64], dx: f64) -> Result<f64> {
    if u.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: reference.len(),
        });
    }
    let s: f64 = u.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((dx * s).sqrt())
}

/// `||u||_{dx, l2}`.
pub fn l2_norm(u: &[f64], dx: f64) -> f64 {
    (dx * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// A stored time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub requested_t: f64,
    pub n: usize,
    pub t: f64,
    pub u: Vec<f64>,
}

/// Multistep state of one run.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub grid: Grid,
    /// Levels `n-k+1 ..= n`, oldest first.
    window: VecDeque<Vec<f64>>,
    /// Space operator `sum_l a_l u_{j+l}` of each window level.
    operator: VecDeque<Vec<f64>>,
    time_index: usize,
    pub snapshots: Vec<Snapshot>,
    /// Every level, when requested.
    pub trajectory: Option<Vec<Vec<f64>>>,
    /// `||u^n||` for every level reached.
    pub norm_history: Vec<f64>,
}

fn space_operator(spec: &SchemeSpec, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let r = spec.r_left();
    let mut out = vec![0.0; n];
    for (j, slot) in out.iter_mut().enumerate().skip(r) {
        let mut acc = 0.0;
        for (l, a) in spec.stencil() {
            let idx = (j as i64 + l) as usize;
            if idx < n {
                acc += a * u[idx];
            }
        }
        *slot = acc;
    }
    out
}

impl GridSolution {
    /// Starts from the `k` given levels (`n = 0..k-1`).
    pub fn from_levels(spec: &SchemeSpec, grid: Grid, levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != spec.k_levels() {
            return Err(Error::LengthMismatch {
                left: levels.len(),
                right: spec.k_levels(),
            });
        }
        for l in &levels {
            if l.len() != grid.n_cells {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: grid.n_cells,
                });
            }
        }
        let norm_history = levels.iter().map(|l| l2_norm(l, grid.dx)).collect();
        let operator = levels.iter().map(|l| space_operator(spec, l)).collect();
        Ok(GridSolution {
            grid,
            time_index: levels.len() - 1,
            window: levels.into(),
            operator,
            snapshots: Vec::new(),
            trajectory: None,
            norm_history,
        })
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn time(&self) -> f64 {
        self.grid.t(self.time_index)
    }

    pub fn current(&self) -> &[f64] {
        self.window.back().expect("window is never empty")
    }

    pub fn window(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.window.iter()
    }

    /// Advances by one time level.
    pub fn step(&mut self, spec: &SchemeSpec) -> Result<()> {
        let n_cells = self.grid.n_cells;
        let r = spec.r_left();
        let lambda = spec.cfl_lambda();
        let k = spec.k_levels();
        let alpha = spec.alpha();
        let beta = spec.beta();
        let new_n = self.time_index + 1;
        let mut next = vec![0.0; n_cells];
        for (j, slot) in next.iter_mut().enumerate().skip(r) {
            let mut acc = 0.0;
            for s in 0..k {
                acc -= alpha[s] * self.window[s][j] + lambda * beta[s] * self.operator[s][j];
            }
            if !acc.is_finite() {
                return Err(Error::BlowUp { n: new_n, j });
            }
            *slot = acc;
        }
        self.operator.pop_front();
        self.operator.push_back(space_operator(spec, &next));
        self.window.pop_front();
        if let Some(traj) = self.trajectory.as_mut() {
            traj.push(next.clone());
        }
        self.norm_history.push(l2_norm(&next, self.grid.dx));
        self.window.push_back(next);
        self.time_index = new_n;
        Ok(())
    }
}

/// Free-function form of [`GridSolution::step`].
pub fn step(spec: &SchemeSpec, state: &mut GridSolution) -> Result<()> {
    state.step(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub snapshot_times: Vec<f64>,
    pub stopping: StoppingRule,
    pub keep_trajectory: bool,
    pub quad_order: usize,
    /// Skip the assumption checks (e.g. to run the leap-frog scheme).
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            snapshot_times: Vec::new(),
            stopping: StoppingRule::Floor,
            keep_trajectory: false,
            quad_order: DEFAULT_QUAD_ORDER,
            force: false,
        }
    }
}

/// Runs the scheme from the cell-average initial data up to `t_final`.
pub fn run(spec: &SchemeSpec, grid: &Grid, u0: InitialData, t_final: f64, opts: &RunOptions) -> Result<GridSolution> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_final must be nonnegative, got {t_final}"
        )));
    }
    if !opts.force {
        let status = analyze(spec, &AnalysisOptions::default())?.assumptions();
        if !status.all_pass() {
            return Err(Error::NotApplicable(format!(
                "scheme fails {}; force the run to proceed anyway",
                status.failures().join(", ")
            )));
        }
    }
    let levels = initial_levels(spec, grid, u0, opts.quad_order)?;
    let mut sol = GridSolution::from_levels(spec, *grid, levels)?;
    if opts.keep_trajectory {
        sol.trajectory = Some(sol.window.iter().cloned().collect());
    }
    let n_final = opts.stopping.level(t_final, grid.dt);
    let mut targets: Vec<(usize, f64)> = opts
        .snapshot_times
        .iter()
        .map(|&t| (opts.stopping.level(t, grid.dt), t))
        .collect();
    targets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let take = |sol: &mut GridSolution| {
        let k = sol.window.len();
        let first = sol.time_index + 1 - k;
        for &(n, t) in &targets {
            if n >= first && n <= sol.time_index && !sol.snapshots.iter().any(|s| s.requested_t == t) {
                let u = sol.window[n - first].clone();
                sol.snapshots.push(Snapshot {
                    requested_t: t,
                    n,
                    t: grid.t(n),
                    u,
                });
            }
        }
    };
    take(&mut sol);
    while sol.time_index < n_final {
        sol.step(spec)?;
        take(&mut sol);
    }
    Ok(sol)
}

/// `u^app_{., n} = u^int + u^{bl,0} + dx u^{bl,1}`.
pub fn approximate_solution(
    spec: &SchemeSpec,
    profile: &BoundaryLayerProfile,
    u0: InitialData,
    grid: &Grid,
    n: usize,
    quad_order: usize,
) -> Result<Vec<f64>> {
    let mut u = interior_level(spec, grid, u0, n, quad_order)?;
    let k = spec.k_levels();
    if !spec.is_outgoing() || n < k {
        return Ok(u);
    }
    let a = spec.a_velocity();
    let trace = |m: usize| trace_average(u0, a, m, grid.dt, quad_order);
    let tr_n = trace(n)?;
    let mut dtrace = 0.0;
    for (s, &alpha) in spec.alpha().iter().enumerate() {
        dtrace += alpha * trace(n + s)?;
    }
    let corr = dtrace / (grid.dt * spec.sum_beta());
    let w = profile.sequence(Layer::Profile);
    let wt = profile.sequence(Layer::Corrector);
    for (j, slot) in u.iter_mut().enumerate() {
        *slot += tr_n * w.evaluate(j) + grid.dx * corr * wt.evaluate(j);
    }
    Ok(u)
}

/// Exponentially weighted space-time sums of an error trajectory `e_{j,n}`:
/// `sum_n sum_j dt dx e^{-2 n gamma dt} |e|^2` over all cells, and
/// `sum_n sum_{j < boundary_width} dt e^{-2 n gamma dt} |e|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorms {
    pub gamma: f64,
    pub interior_sum: f64,
    pub boundary_sum: f64,
}

pub fn weighted_norms(
    trajectory: &[Vec<f64>],
    gamma: f64,
    dx: f64,
    dt: f64,
    boundary_width: usize,
) -> Result<WeightedNorms> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut interior = 0.0;
    let mut boundary = 0.0;
    for (n, e) in trajectory.iter().enumerate() {
        let w = (-2.0 * n as f64 * gamma * dt).exp();
        let sq: f64 = e.iter().map(|v| v * v).sum();
        interior += dt * dx * w * sq;
        let bsq: f64 = e.iter().take(boundary_width).map(|v| v * v).sum();
        boundary += dt * w * bsq;
    }
    Ok(WeightedNorms {
        gamma,
        interior_sum: interior,
        boundary_sum: boundary,
    })
}

/// Residuals of a trajectory under the scheme: interior consistency errors
/// `eps_{j,n+k}` (`j >= r`) and boundary values `eta_{j,n} = u_{j,n}`
/// (`j < r`, `n >= k`).
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResiduals {
    /// Indexed by `n - k` for `n >= k`.
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
}

pub fn scheme_residuals(spec: &SchemeSpec, grid: &Grid, trajectory: &[Vec<f64>]) -> SchemeResiduals {
    let k = spec.k_levels();
    let r = spec.r_left();
    let ops: Vec<Vec<f64>> = trajectory.iter().map(|u| space_operator(spec, u)).collect();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for n in k..trajectory.len() {
        let base = n - k;
        let mut eps = vec![0.0; grid.n_cells];
        for (j, slot) in eps.iter_mut().enumerate().skip(r) {
            let mut acc = 0.0;
            for s in 0..=k {
                acc += spec.alpha()[s] * trajectory[base + s][j];
            }
            for s in 0..k {
                acc += spec.cfl_lambda() * spec.beta()[s] * ops[base + s][j];
            }
            *slot = acc / grid.dt;
        }
        interior.push(eps);
        boundary.push(trajectory[n][..r.min(grid.n_cells)].to_vec());
    }
    SchemeResiduals { interior, boundary }
}

impl SchemeResiduals {
    /// The weighted sums bounding the error: interior over `j >= r`,
    /// boundary over `j < r`, both for `n >= k`.
    pub fn weighted(&self, spec: &SchemeSpec, gamma: f64, dx: f64, dt: f64) -> (f64, f64) {
        let k = spec.k_levels();
        let r = spec.r_left();
        let mut interior = 0.0;
        let mut boundary = 0.0;
        for (i, (eps, eta)) in self.interior.iter().zip(&self.boundary).enumerate() {
            let n = i + k;
            let w = (-2.0 * n as f64 * gamma * dt).exp();
            interior += dt * dx * w * eps.iter().skip(r).map(|v| v * v).sum::<f64>();
            boundary += dt * w * eta.iter().map(|v| v * v).sum::<f64>();
        }
        (interior, boundary)
    }
}

/// Error measurements of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `(t, raw, corrected)` per snapshot; corrected is `None` without a
    /// boundary-layer profile.
    pub snapshots: Vec<SnapshotErrors>,
    /// `sup_n ||u^n||`.
    pub semigroup_sup: f64,
    pub initial_norm: f64,
    pub weighted: Option<WeightedNorms>,
    pub residual_sums: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotErrors {
    pub t: f64,
    pub n: usize,
    pub raw_l2: f64,
    pub corrected_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulateOptions {
    pub run: RunOptions,
    /// Monitor the weighted norms with `gamma = dt^mu`.
    pub weighted_mu: Option<f64>,
}

/// A finished run with its references.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub solution: GridSolution,
    pub profile: Option<BoundaryLayerProfile>,
    pub report: ErrorReport,
    /// `(u^int, u^app)` per snapshot, same order as the snapshots.
    pub references: Vec<(Vec<f64>, Option<Vec<f64>>)>,
}

/// Runs the scheme and measures raw and layer-corrected errors at the
/// requested snapshot times (the final time is always included).
pub fn simulate(
    spec: &SchemeSpec,
    grid: &Grid,
    u0: InitialData,
    t_final: f64,
    opts: &SimulateOptions,
) -> Result<Simulation> {
    let analysis = analyze(spec, &AnalysisOptions::default())?;
    let profile = if analysis.assumptions().all_pass() {
        Some(crate::boundary_layer::build_profile(spec, &analysis)?)
    } else {
        None
    };
    let mut run_opts = opts.run.clone();
    if !run_opts.snapshot_times.contains(&t_final) {
        run_opts.snapshot_times.push(t_final);
    }
    run_opts.keep_trajectory |= opts.weighted_mu.is_some();
    if profile.is_some() {
        // assumptions already verified above
        run_opts.force = true;
    }
    let solution = run(spec, grid, u0, t_final, &run_opts)?;
    let q = run_opts.quad_order;
    let mut snapshots = Vec::new();
    let mut references = Vec::new();
    for s in &solution.snapshots {
        let int = interior_level(spec, grid, u0, s.n, q)?;
        let raw = error_norm(&s.u, &int, grid.dx)?;
        let (app, corrected) = match &profile {
            Some(p) => {
                let app = approximate_solution(spec, p, u0, grid, s.n, q)?;
                let c = error_norm(&s.u, &app, grid.dx)?;
                (Some(app), Some(c))
            }
            None => (None, None),
        };
        snapshots.push(SnapshotErrors {
            t: s.t,
            n: s.n,
            raw_l2: raw,
            corrected_l2: corrected,
        });
        references.push((int, app));
    }
    let (weighted, residual_sums) = match (opts.weighted_mu, &profile, &solution.trajectory) {
        (Some(mu), Some(p), Some(traj)) => {
            let gamma = grid.dt.powf(mu);
            let app: Vec<Vec<f64>> = (0..traj.len())
                .map(|n| approximate_solution(spec, p, u0, grid, n, q))
                .collect::<Result<_>>()?;
            let errs: Vec<Vec<f64>> = app
                .iter()
                .zip(traj)
                .map(|(a, u)| a.iter().zip(u).map(|(x, y)| x - y).collect())
                .collect();
            let w = weighted_norms(&errs, gamma, grid.dx, grid.dt, spec.r_left() + spec.p_right())?;
            let res = scheme_residuals(spec, grid, &app).weighted(spec, gamma, grid.dx, grid.dt);
            (Some(w), Some(res))
        }
        _ => (None, None),
    };
    let report = ErrorReport {
        snapshots,
        semigroup_sup: solution.norm_history.iter().cloned().fold(0.0, f64::max),
        initial_norm: solution.norm_history[0],
        weighted,
        residual_sums,
    };
    Ok(Simulation {
        solution,
        profile,
        report,
        references,
    })
}

/// Least-squares slope of `log(err)` against `log(dx)`.
pub fn fit_slope(dx: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = dx
        .iter()
        .zip(err)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub dx: f64,
    pub raw: f64,
    pub corrected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
    pub raw_slope: Option<f64>,
    pub corrected_slope: Option<f64>,
    /// Fits excluding errors below [`ERROR_FLOOR`].
    pub raw_slope_trimmed: Option<f64>,
    pub corrected_slope_trimmed: Option<f64>,
    /// First level that failed, with the reason; rows stop before it.
    pub failure: Option<(usize, Error)>,
}

impl ConvergenceStudy {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Raw and corrected errors at `t_final` over a ladder of grid sizes, with
/// fitted orders. Levels run in parallel; results are in ladder order.
pub fn convergence_study(
    spec: &SchemeSpec,
    u0: InitialData,
    t_final: f64,
    levels: &[usize],
    opts: &RunOptions,
) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let sim_opts = SimulateOptions {
        run: RunOptions {
            snapshot_times: Vec::new(),
            ..opts.clone()
        },
        weighted_mu: None,
    };
    let results: Vec<Result<ConvergenceRow>> = levels
        .par_iter()
        .map(|&n| {
            let grid = Grid::unit(spec, n)?;
            let sim = simulate(spec, &grid, u0, t_final, &sim_opts)?;
            let last = sim
                .report
                .snapshots
                .iter()
                .find(|s| s.n == opts.stopping.level(t_final, grid.dt))
                .copied()
                .ok_or_else(|| Error::InvalidParameter("final snapshot missing".into()))?;
            Ok(ConvergenceRow {
                n_cells: n,
                dx: grid.dx,
                raw: last.raw_l2,
                corrected: last.corrected_l2,
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failure = None;
    for (res, &n) in results.into_iter().zip(levels) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some((n, e));
                break;
            }
        }
    }
    let dx: Vec<f64> = rows.iter().map(|r| r.dx).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.raw).collect();
    let corrected: Option<Vec<f64>> = rows.iter().map(|r| r.corrected).collect();
    let trimmed = |e: &[f64]| {
        let (h, v): (Vec<f64>, Vec<f64>) = dx
            .iter()
            .zip(e)
            .filter(|(_, v)| **v >= ERROR_FLOOR)
            .map(|(h, v)| (*h, *v))
            .unzip();
        fit_slope(&h, &v)
    };
    Ok(ConvergenceStudy {
        t_final,
        raw_slope: fit_slope(&dx, &raw),
        corrected_slope: corrected.as_ref().and_then(|c| fit_slope(&dx, c)),
        raw_slope_trimmed: trimmed(&raw),
        corrected_slope_trimmed: corrected.as_ref().and_then(|c| trimmed(c)),
        rows,
        failure,
    })
}
