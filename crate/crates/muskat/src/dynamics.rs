//! Time integration: nonlinear evolution of grid fields, linear propagation
//! along frozen coefficient paths, and the fixed-point (Picard) iteration that
//! couples the two.
//!
//! All stepping is fixed-step and deterministic: a run with the same inputs
//! reproduces bitwise identical states, and two runs over aligned step grids
//! compose exactly (the semiflow identity holds to machine zero on aligned
//! grids, which `semiflow_defect` exposes).

use crate::kernels::KernelError;
use crate::torus::{GridFunction, TorusError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the integrators.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid time-stepping setup: {0}")]
    BadSetup(String),
    #[error("state became non-finite at t = {t}; integration aborted")]
    BlowUp { t: f64, partial: Box<TrajectoryRecord> },
    #[error("linear propagation produced a non-finite state on segment {segment}")]
    SegmentFailure { segment: usize },
    #[error("fixed-point iteration exhausted {max_iter} iterations (last defect {last:.3e})")]
    NonConvergence {
        max_iter: usize,
        last: f64,
        defects: Vec<f64>,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Fourier-diagonal linear operator: one real multiplier per FFT index, zero
/// on the mean and Nyquist slots. Used as the implicit part of the IMEX scheme.
#[derive(Debug, Clone)]
pub struct LinearSymbol {
    multipliers: Vec<f64>,
}

impl LinearSymbol {
    /// Builds the symbol from eigenvalues on wavenumbers `1..n/2`.
    pub fn from_flat_eigenvalues(n: usize, lambda: impl Fn(f64) -> f64) -> Self {
        let mut multipliers = vec![0.0; n];
        for m in 1..n / 2 {
            let l = lambda(m as f64);
            multipliers[m] = l;
            multipliers[n - m] = l;
        }
        Self { multipliers }
    }

    pub fn grid_len(&self) -> usize {
        self.multipliers.len()
    }

    /// Applies the operator: multiply each coefficient by its eigenvalue.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        self.transform(f, |l| l)
    }

    /// Solves `(I - a L) u = f` diagonally.
    fn solve_shifted(&self, f: &GridFunction, a: f64) -> GridFunction {
        self.transform(f, |l| 1.0 / (1.0 - a * l))
    }

    fn transform(&self, f: &GridFunction, factor: impl Fn(f64) -> f64) -> GridFunction {
        let coeffs = f.to_coeffs();
        let n = f.len();
        let scaled: Vec<Complex64> = (0..n)
            .map(|k| {
                let m = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
                coeffs.coeff(m) * factor(self.multipliers[k])
            })
            .collect();
        crate::torus::FourierCoeffs::new(scaled)
            .expect("diagonal real multiplier preserves Hermitian symmetry")
            .to_grid()
    }
}

/// Time-stepping scheme for the nonlinear evolutions.
#[derive(Debug, Clone)]
pub enum TimeScheme {
    /// Classic fourth-order Runge-Kutta on the full right-hand side.
    ExplicitRk4,
    /// Two-stage second-order IMEX Runge-Kutta: the given Fourier symbol is
    /// treated implicitly (diagonal solves), the remainder explicitly.
    ImexLinearlyImplicit(LinearSymbol),
}

fn rk4_step<F>(rhs: &F, f: &GridFunction, dt: f64) -> Result<GridFunction, DynamicsError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, KernelError>,
{
    let k1 = rhs(f)?;
    let k2 = rhs(&f.add_scaled(&k1, 0.5 * dt))?;
    let k3 = rhs(&f.add_scaled(&k2, 0.5 * dt))?;
    let k4 = rhs(&f.add_scaled(&k3, dt))?;
    let mut out = f.add_scaled(&k1, dt / 6.0);
    out = out.add_scaled(&k2, dt / 3.0);
    out = out.add_scaled(&k3, dt / 3.0);
    out = out.add_scaled(&k4, dt / 6.0);
    Ok(out)
}

/// One step of the ARS(2,2,2) IMEX pair with stiffly accurate implicit part:
/// `gamma = 1 - 1/sqrt(2)`, `delta = 1 - 1/(2 gamma)`.
fn imex_step<F>(
    rhs: &F,
    symbol: &LinearSymbol,
    f: &GridFunction,
    dt: f64,
) -> Result<GridFunction, DynamicsError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, KernelError>,
{
    let gamma = 1.0 - 1.0 / 2.0f64.sqrt();
    let delta = 1.0 - 1.0 / (2.0 * gamma);
    // N(v) = rhs(v) - L v
    let n1 = rhs(f)?.add_scaled(&symbol.apply(f), -1.0);
    let u2 = symbol.solve_shifted(&f.add_scaled(&n1, dt * gamma), dt * gamma);
    let lu2 = symbol.apply(&u2);
    let n2 = rhs(&u2)?.add_scaled(&lu2, -1.0);
    let mut explicit = f.add_scaled(&n1, dt * delta);
    explicit = explicit.add_scaled(&n2, dt * (1.0 - delta));
    explicit = explicit.add_scaled(&lu2, dt * (1.0 - gamma));
    Ok(symbol.solve_shifted(&explicit, dt * gamma))
}

/// Advances one step with the chosen scheme. Exposed so that monitors (escape
/// probes) can drive the integrator step by step.
pub fn step<F>(
    scheme: &TimeScheme,
    rhs: &F,
    f: &GridFunction,
    dt: f64,
) -> Result<GridFunction, DynamicsError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, KernelError>,
{
    match scheme {
        TimeScheme::ExplicitRk4 => rk4_step(rhs, f, dt),
        TimeScheme::ImexLinearlyImplicit(symbol) => imex_step(rhs, symbol, f, dt),
    }
}

/// Recorded trajectory: strictly increasing times, the state at each recorded
/// time, and Sobolev norms for each configured exponent (consistent with the
/// states by construction).
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    times: Vec<f64>,
    states: Vec<GridFunction>,
    norm_exponents: Vec<f64>,
    norms: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    fn new(norm_exponents: Vec<f64>) -> Self {
        let norms = vec![Vec::new(); norm_exponents.len()];
        Self { times: Vec::new(), states: Vec::new(), norm_exponents, norms }
    }

    fn push(&mut self, t: f64, state: GridFunction) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        for (series, &r) in self.norms.iter_mut().zip(&self.norm_exponents) {
            series.push(state.sobolev_norm(r));
        }
        self.times.push(t);
        self.states.push(state);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[GridFunction] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one record")
    }

    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("trajectory has at least one record")
    }

    pub fn norm_exponents(&self) -> &[f64] {
        &self.norm_exponents
    }

    /// Norm series for one of the recorded exponents.
    pub fn norm_series(&self, r: f64) -> Option<&[f64]> {
        self.norm_exponents
            .iter()
            .position(|&e| e == r)
            .map(|k| self.norms[k].as_slice())
    }
}

/// Options for [`integrate`].
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub scheme: TimeScheme,
    /// Fixed step size; the final step shrinks to land exactly on `t_end`.
    pub dt: f64,
    pub t_end: f64,
    /// Record the state every this many steps (the initial and final states
    /// are always recorded).
    pub record_every: usize,
    /// Sobolev exponents tracked alongside the states.
    pub norm_exponents: Vec<f64>,
}

fn step_count(t_end: f64, dt: f64) -> (usize, f64) {
    let ratio = t_end / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        (rounded as usize, 0.0)
    } else {
        let full = ratio.floor() as usize;
        (full, t_end - full as f64 * dt)
    }
}

/// Integrates `df/dt = rhs(f)` from `f0` to `t_end`, recording along the way.
/// Aborts with a blow-up error (carrying the partial record) if the state
/// leaves the finite range.
pub fn integrate<F>(
    f0: &GridFunction,
    rhs: &F,
    opts: &IntegrateOptions,
) -> Result<TrajectoryRecord, DynamicsError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, KernelError>,
{
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(DynamicsError::BadSetup(format!("dt = {} must be positive", opts.dt)));
    }
    if !(opts.t_end.is_finite() && opts.t_end >= 0.0) {
        return Err(DynamicsError::BadSetup(format!(
            "t_end = {} must be nonnegative",
            opts.t_end
        )));
    }
    if opts.record_every == 0 {
        return Err(DynamicsError::BadSetup("record_every must be at least 1".into()));
    }
    if let TimeScheme::ImexLinearlyImplicit(symbol) = &opts.scheme {
        if symbol.grid_len() != f0.len() {
            return Err(DynamicsError::BadSetup(format!(
                "implicit symbol is sized for grid {}, state has {}",
                symbol.grid_len(),
                f0.len()
            )));
        }
    }
    if let Some(&r) = opts.norm_exponents.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(DynamicsError::BadSetup(format!("norm exponent {r} must be nonnegative")));
    }

    let (full_steps, remainder) = step_count(opts.t_end, opts.dt);
    let mut record = TrajectoryRecord::new(opts.norm_exponents.clone());
    record.push(0.0, f0.clone());
    let mut state = f0.clone();
    let blow_up = |t: f64, record: TrajectoryRecord| DynamicsError::BlowUp {
        t,
        partial: Box::new(record),
    };

    for k in 0..full_steps {
        let t_next = if k + 1 == full_steps && remainder == 0.0 {
            opts.t_end
        } else {
            (k + 1) as f64 * opts.dt
        };
        state = match step(&opts.scheme, rhs, &state, opts.dt) {
            Ok(next) => next,
            Err(DynamicsError::Kernel(KernelError::Torus(TorusError::NonFiniteSample(_)))) => {
                return Err(blow_up(t_next, record));
            }
            Err(other) => return Err(other),
        };
        if !state.is_finite() {
            return Err(blow_up(t_next, record));
        }
        if (k + 1) % opts.record_every == 0 || (k + 1 == full_steps && remainder == 0.0) {
            record.push(t_next, state.clone());
        }
    }
    if remainder > 0.0 {
        state = match step(&opts.scheme, rhs, &state, remainder) {
            Ok(next) => next,
            Err(DynamicsError::Kernel(KernelError::Torus(TorusError::NonFiniteSample(_)))) => {
                return Err(blow_up(opts.t_end, record));
            }
            Err(other) => return Err(other),
        };
        if !state.is_finite() {
            return Err(blow_up(opts.t_end, record));
        }
        record.push(opts.t_end, state);
    }
    Ok(record)
}

/// How coefficient data is interpolated between path nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientInterp {
    /// Left-node value on each segment.
    PiecewiseConstant,
    /// Linear interpolation in time between the segment endpoints.
    LinearInTime,
}

/// Frozen-coefficient path: matrices `A(τ_j)` on strictly increasing nodes,
/// defining the nonautonomous linear flow `v' + A(t) v = g(t)`.
#[derive(Debug, Clone)]
pub struct PropagatorPath {
    times: Vec<f64>,
    matrices: Vec<DMatrix<f64>>,
    interp: CoefficientInterp,
}

impl PropagatorPath {
    pub fn new(
        times: Vec<f64>,
        matrices: Vec<DMatrix<f64>>,
        interp: CoefficientInterp,
    ) -> Result<Self, DynamicsError> {
        if times.len() < 2 {
            return Err(DynamicsError::BadSetup("path needs at least two nodes".into()));
        }
        if times.len() != matrices.len() {
            return Err(DynamicsError::BadSetup(format!(
                "{} nodes but {} matrices",
                times.len(),
                matrices.len()
            )));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) || !times.iter().all(|t| t.is_finite()) {
            return Err(DynamicsError::BadSetup("node times must be finite and strictly increasing".into()));
        }
        let dim = matrices[0].nrows();
        for m in &matrices {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(DynamicsError::BadSetup("path matrices must be square and equally sized".into()));
            }
            if !m.iter().all(|v| v.is_finite()) {
                return Err(DynamicsError::BadSetup("path matrices must be finite".into()));
            }
        }
        Ok(Self { times, matrices, interp })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn segments(&self) -> usize {
        self.times.len() - 1
    }
}

/// Options for [`propagate`].
#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    /// Runge-Kutta substeps per path segment.
    pub substeps: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { substeps: 16 }
    }
}

/// Integrates the linear flow `v' + A(t) v = g(t)` along the path, returning
/// the state at every node (first entry is `v0`). `forcing`, when given, holds
/// `g(τ_j)` at the nodes and is interpolated like the matrices.
pub fn propagate(
    path: &PropagatorPath,
    forcing: Option<&[DVector<f64>]>,
    v0: &DVector<f64>,
    opts: &PropagateOptions,
) -> Result<Vec<DVector<f64>>, DynamicsError> {
    let dim = path.dim();
    if v0.len() != dim {
        return Err(DynamicsError::BadSetup(format!(
            "initial state has dimension {}, path expects {dim}",
            v0.len()
        )));
    }
    if let Some(g) = forcing {
        if g.len() != path.times.len() {
            return Err(DynamicsError::BadSetup(format!(
                "forcing sampled on {} nodes, path has {}",
                g.len(),
                path.times.len()
            )));
        }
        if g.iter().any(|v| v.len() != dim) {
            return Err(DynamicsError::BadSetup("forcing dimension mismatch".into()));
        }
    }
    if opts.substeps == 0 {
        return Err(DynamicsError::BadSetup("substeps must be at least 1".into()));
    }

    let zero = DVector::zeros(dim);
    let mut states = Vec::with_capacity(path.times.len());
    states.push(v0.clone());
    let mut v = v0.clone();

    for seg in 0..path.segments() {
        let (t0, t1) = (path.times[seg], path.times[seg + 1]);
        let a0 = &path.matrices[seg];
        let a1 = &path.matrices[seg + 1];
        let g0 = forcing.map_or(&zero, |g| &g[seg]);
        let g1 = forcing.map_or(&zero, |g| &g[seg + 1]);
        let span = t1 - t0;
        let h = span / opts.substeps as f64;
        // v' = rhs(theta, v) with theta the position inside the segment.
        let rhs = |theta: f64, v: &DVector<f64>| -> DVector<f64> {
            match path.interp {
                CoefficientInterp::PiecewiseConstant => g0 - a0 * v,
                CoefficientInterp::LinearInTime => {
                    let w = theta.clamp(0.0, 1.0);
                    let g = g0 * (1.0 - w) + g1 * w;
                    g - (a0 * v) * (1.0 - w) - (a1 * v) * w
                }
            }
        };
        for sub in 0..opts.substeps {
            let th0 = sub as f64 / opts.substeps as f64;
            let th_half = (sub as f64 + 0.5) / opts.substeps as f64;
            let th1 = (sub as f64 + 1.0) / opts.substeps as f64;
            let k1 = rhs(th0, &v);
            let k2 = rhs(th_half, &(&v + &k1 * (0.5 * h)));
            let k3 = rhs(th_half, &(&v + &k2 * (0.5 * h)));
            let k4 = rhs(th1, &(&v + &k3 * h));
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(DynamicsError::SegmentFailure { segment: seg });
        }
        states.push(v.clone());
    }
    Ok(states)
}

/// Options for [`picard_lambda`].
#[derive(Debug, Clone)]
pub struct PicardOptions {
    /// Number of uniform path segments on `[0, t_end]`.
    pub segments: usize,
    /// Runge-Kutta substeps per segment in each linear propagation.
    pub substeps: usize,
    pub interp: CoefficientInterp,
    /// Convergence threshold on the sup-over-nodes defect.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            segments: 32,
            substeps: 32,
            interp: CoefficientInterp::LinearInTime,
            tol: 1e-9,
            max_iter: 25,
        }
    }
}

/// Convergence diagnostics of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Number of map applications performed.
    pub iterations: usize,
    /// sup-over-nodes distance between consecutive iterates.
    pub defects: Vec<f64>,
    /// Ratios of consecutive defects (empirical contraction factors).
    pub contraction_factors: Vec<f64>,
    pub converged: bool,
}

/// A converged fixed point: node times and states, plus the iteration report.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub report: PicardReport,
}

fn sup_distance(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0f64, f64::max)
}

/// Fixed-point iteration for the quasilinear problem `v' + A(v) v = g(v)`:
/// repeatedly freezes the coefficients along the current iterate and solves the
/// resulting linear problem with [`propagate`], starting from the constant path
/// at `v0`, until the sup-over-nodes defect drops below `tol`.
pub fn picard_lambda(
    a_of: impl Fn(&DVector<f64>) -> Result<DMatrix<f64>, DynamicsError>,
    g_of: impl Fn(&DVector<f64>) -> Result<DVector<f64>, DynamicsError>,
    v0: &DVector<f64>,
    t_end: f64,
    opts: &PicardOptions,
) -> Result<PicardSolution, DynamicsError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(DynamicsError::BadSetup(format!("t_end = {t_end} must be positive")));
    }
    if opts.segments == 0 {
        return Err(DynamicsError::BadSetup("segments must be at least 1".into()));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(DynamicsError::BadSetup(format!("tol = {} must be positive", opts.tol)));
    }
    let nodes = opts.segments + 1;
    let times: Vec<f64> = (0..nodes)
        .map(|j| j as f64 / opts.segments as f64 * t_end)
        .collect();
    let mut current: Vec<DVector<f64>> = vec![v0.clone(); nodes];
    let mut defects = Vec::new();
    let propagate_opts = PropagateOptions { substeps: opts.substeps };

    for _ in 0..opts.max_iter {
        let matrices = current
            .iter()
            .map(&a_of)
            .collect::<Result<Vec<_>, _>>()?;
        let forcing = current
            .iter()
            .map(&g_of)
            .collect::<Result<Vec<_>, _>>()?;
        let path = PropagatorPath::new(times.clone(), matrices, opts.interp)?;
        let next = propagate(&path, Some(&forcing), v0, &propagate_opts)?;
        let defect = sup_distance(&next, &current);
        defects.push(defect);
        current = next;
        if defect <= opts.tol {
            let contraction_factors = contraction_factors(&defects);
            return Ok(PicardSolution {
                times,
                states: current,
                report: PicardReport {
                    iterations: defects.len(),
                    defects,
                    contraction_factors,
                    converged: true,
                },
            });
        }
    }
    let last = defects.last().copied().unwrap_or(f64::NAN);
    Err(DynamicsError::NonConvergence { max_iter: opts.max_iter, last, defects })
}

fn contraction_factors(defects: &[f64]) -> Vec<f64> {
    defects
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect()
}

/// Defect of the semiflow identity `v(t + s; f0) = v(t; v(s; f0))`, measured in
/// the Sobolev norm of order `r`. Exactly zero when `s` and `t` are multiples
/// of `dt` (aligned step grids compose bitwise).
pub fn semiflow_defect<F>(
    f0: &GridFunction,
    rhs: &F,
    s: f64,
    t: f64,
    r: f64,
    scheme: &TimeScheme,
    dt: f64,
) -> Result<f64, DynamicsError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, KernelError>,
{
    if !(s.is_finite() && s >= 0.0 && t.is_finite() && t >= 0.0) {
        return Err(DynamicsError::BadSetup(format!(
            "semiflow offsets s = {s}, t = {t} must be nonnegative"
        )));
    }
    let final_state = |start: &GridFunction, span: f64| -> Result<GridFunction, DynamicsError> {
        let opts = IntegrateOptions {
            scheme: scheme.clone(),
            dt,
            t_end: span,
            record_every: usize::MAX,
            norm_exponents: Vec::new(),
        };
        Ok(integrate(start, rhs, &opts)?.final_state().clone())
    };
    let direct = final_state(f0, s + t)?;
    let mid = final_state(f0, s)?;
    let composed = final_state(&mid, t)?;
    Ok(direct.add_scaled(&composed, -1.0).sobolev_norm(r))
}
