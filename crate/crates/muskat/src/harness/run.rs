//! Experiment execution: builds the numerical objects from a validated
//! configuration, runs the requested pipeline, and returns a typed,
//! serializable result record.

use super::config::{
    BasisSpec, ConfigError, ExperimentConfig, ExperimentSpec, InitialSpec, InterpSpec,
    ProblemSpec, SchemeSpec,
};
use crate::dynamics::{
    integrate, picard_lambda, semiflow_defect, CoefficientInterp, DynamicsError, IntegrateOptions,
    LinearSymbol, PicardOptions, TimeScheme, TrajectoryRecord,
};
use crate::kernels::{
    phi1_matrix, Dealias, KernelError, MuskatParamsNoSt, MuskatParamsSt, Pe1System, Pe2System,
    PvRule,
};
use crate::stability::{
    decay_rate_fit, eigen_spectrum, instability_probe, jacobian, JacobianBasis, JacobianOptions,
    ProbeOptions, StabilityError, Verdict,
};
use crate::torus::{GridFunction, TorusError};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

/// Errors from running an experiment.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("bad initial data: {0}")]
    BadInitial(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("result serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Torus(#[from] TorusError),
}

/// Schema version of the emitted result document.
pub const RESULT_SCHEMA_VERSION: u32 = 1;

/// Everything a run produces, ready for serialization.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    /// Wall-clock duration; the single field excluded from reproducibility.
    pub duration_seconds: f64,
    pub payload: Payload,
}

/// Per-experiment results.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Payload {
    Spectrum(SpectrumPayload),
    Evolve(EvolvePayload),
    Decay(DecayPayload),
    Instability(InstabilityPayload),
    Picard(PicardPayload),
    Semiflow(SemiflowPayload),
}

/// One eigenvalue next to its flat-interface partner.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumRow {
    /// Wavenumber of the analytic partner.
    pub wavenumber: usize,
    pub analytic: f64,
    pub numeric_re: f64,
    pub numeric_im: f64,
    /// `|numeric - analytic| / |analytic|` in the complex modulus.
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumPayload {
    pub basis: String,
    pub dimension: usize,
    pub spectral_bound: f64,
    pub verdict: String,
    pub omega_plus: Option<f64>,
    pub margin: f64,
    /// Sup-norm of the state the Jacobian was taken at; the analytic column
    /// is exact only when this is zero.
    pub base_sup_norm: f64,
    /// Eigenvalues sorted by descending real part, paired with the analytic
    /// flat-interface rates in the same order.
    pub rows: Vec<SpectrumRow>,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolvePayload {
    pub times: Vec<f64>,
    pub norm_exponents: Vec<f64>,
    /// One series per exponent, aligned with `times`.
    pub norms: Vec<Vec<f64>>,
    pub final_sup_norm: f64,
    pub mean_drift: f64,
    /// Final profile for the state table.
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitPayload {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPayload {
    pub norm_exponent: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub window_start: f64,
    pub window_end: f64,
    pub sup_below: Option<f64>,
    pub samples_used: usize,
    pub fit: FitPayload,
    /// Flat-interface rate of the fundamental mode, the linear-theory
    /// reference for the fitted slope.
    pub reference_rate: f64,
    pub relative_rate_error: f64,
    pub mean_drift: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeRow {
    pub amplitude: f64,
    pub predicted_time: f64,
    pub escape_time: Option<f64>,
    /// `|escape - predicted| / predicted` when the sample escaped.
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstabilityPayload {
    pub growth_rate: f64,
    pub escape_radius: f64,
    pub norm_exponent: f64,
    pub samples: Vec<EscapeRow>,
    pub conclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardRunPayload {
    pub t_end: f64,
    pub iterations: usize,
    pub converged: bool,
    pub defects: Vec<f64>,
    pub contraction_factors: Vec<f64>,
    /// First empirical contraction factor, the horizon-sensitive quantity.
    pub first_contraction: Option<f64>,
    /// Sup distance between the fixed point at `t_end` and direct integration.
    pub vs_integration: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardPayload {
    pub full: PicardRunPayload,
    pub halved: Option<PicardRunPayload>,
    /// Whether the first contraction factor strictly improves on the halved
    /// horizon.
    pub contraction_improves: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemiflowPayload {
    pub split_s: f64,
    pub split_t: f64,
    pub dt: f64,
    pub norm_exponent: f64,
    pub defect: f64,
    /// `|u_dt(T) - u_{dt/2}(T)|` in the same norm: a step-resolution error
    /// estimate to scale the defect against.
    pub halving_estimate: f64,
    pub defect_over_estimate: Option<f64>,
    /// True when both split points land on the step grid, which makes the
    /// defect exactly zero for a deterministic one-step method.
    pub aligned: bool,
}

/// The configured problem, bound to its quadrature rule.
enum System {
    Pe1(Pe1System),
    Pe2(Pe2System),
}

impl System {
    fn from_config(config: &ExperimentConfig) -> Result<Option<Self>, HarnessError> {
        let rule = || PvRule::new(config.grid.quadrature_m);
        match &config.problem {
            ProblemSpec::Pe1 { permeability, viscosity, delta_rho } => {
                let params = MuskatParamsNoSt::new(*permeability, *viscosity, *delta_rho)?;
                Ok(Some(System::Pe1(Pe1System { params, rule: rule()? })))
            }
            ProblemSpec::Pe2 { permeability, mu_minus, mu_plus, surface_tension, theta } => {
                let params = MuskatParamsSt::new(
                    *permeability,
                    *mu_minus,
                    *mu_plus,
                    *surface_tension,
                    *theta,
                )?;
                Ok(Some(System::Pe2(Pe2System {
                    params,
                    rule: rule()?,
                    dealias: Dealias::from_flag(config.grid.dealias),
                })))
            }
            ProblemSpec::ScalarModel { .. } => Ok(None),
        }
    }

    fn rhs(&self, f: &GridFunction) -> Result<GridFunction, KernelError> {
        match self {
            System::Pe1(s) => s.rhs(f),
            System::Pe2(s) => s.rhs(f),
        }
    }

    fn flat_eigenvalue(&self, m: f64) -> f64 {
        match self {
            System::Pe1(s) => s.params.flat_eigenvalue(m),
            System::Pe2(s) => s.params.flat_eigenvalue(m),
        }
    }

    fn scheme(&self, spec: SchemeSpec, n: usize) -> TimeScheme {
        match spec {
            SchemeSpec::Rk4 => TimeScheme::ExplicitRk4,
            SchemeSpec::Imex => TimeScheme::ImexLinearlyImplicit(
                LinearSymbol::from_flat_eigenvalues(n, |m| self.flat_eigenvalue(m)),
            ),
        }
    }
}

fn initial_field(initial: &InitialSpec, n: usize) -> Result<GridFunction, HarnessError> {
    if let Some(path) = &initial.file {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let values: Vec<f64> = serde_json::from_str(&text)?;
        if values.len() != n {
            return Err(HarnessError::BadInitial(format!(
                "{} holds {} samples, the grid needs {n}",
                path.display(),
                values.len()
            )));
        }
        return Ok(GridFunction::new(values)?);
    }
    let mut f = GridFunction::zeros(n)?;
    for spec in &initial.modes {
        f = f.add_scaled(&GridFunction::harmonic(n, spec.mode, spec.cos, spec.sin)?, 1.0);
    }
    Ok(f)
}

fn basis_of(spec: BasisSpec) -> JacobianBasis {
    match spec {
        BasisSpec::Grid => JacobianBasis::Grid,
        BasisSpec::ZeroMean => JacobianBasis::ZeroMean,
        BasisSpec::ZeroMeanResolved => JacobianBasis::ZeroMeanResolved,
    }
}

fn interp_of(spec: InterpSpec) -> CoefficientInterp {
    match spec {
        InterpSpec::Constant => CoefficientInterp::PiecewiseConstant,
        InterpSpec::Linear => CoefficientInterp::LinearInTime,
    }
}

fn verdict_slug(v: Verdict) -> String {
    match v {
        Verdict::Stable => "stable",
        Verdict::Unstable => "unstable",
        Verdict::Marginal => "marginal",
    }
    .to_string()
}

/// Runs the configured experiment. Deterministic: identical configurations
/// produce identical payloads.
pub fn run(config: &ExperimentConfig) -> Result<ResultRecord, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let payload = match &config.experiment {
        ExperimentSpec::Spectrum { basis, fd_eps, margin } => {
            Payload::Spectrum(run_spectrum(config, *basis, *fd_eps, *margin)?)
        }
        ExperimentSpec::Evolve { norm_exponents } => {
            Payload::Evolve(run_evolve(config, norm_exponents)?)
        }
        ExperimentSpec::Decay { norm_exponent, window_start, window_end, sup_below } => {
            Payload::Decay(run_decay(config, *norm_exponent, *window_start, *window_end, *sup_below)?)
        }
        ExperimentSpec::Instability { amplitudes, escape_radius, norm_exponent } => {
            Payload::Instability(run_instability(config, amplitudes, *escape_radius, *norm_exponent)?)
        }
        ExperimentSpec::Picard {
            segments,
            substeps,
            interp,
            tol,
            max_iter,
            compare_halved,
            compare_integration,
        } => Payload::Picard(run_picard(
            config,
            *segments,
            *substeps,
            interp_of(*interp),
            *tol,
            *max_iter,
            *compare_halved,
            *compare_integration,
        )?),
        ExperimentSpec::Semiflow { split, norm_exponent } => {
            Payload::Semiflow(run_semiflow(config, *split, *norm_exponent)?)
        }
    };
    Ok(ResultRecord {
        schema_version: RESULT_SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.kind_slug(),
        config: config.clone(),
        duration_seconds: started.elapsed().as_secs_f64(),
        payload,
    })
}

fn run_spectrum(
    config: &ExperimentConfig,
    basis: BasisSpec,
    fd_eps: f64,
    margin: f64,
) -> Result<SpectrumPayload, HarnessError> {
    let system = System::from_config(config)?.expect("validation restricts spectrum to grid problems");
    let f_star = initial_field(&config.initial, config.grid.n)?;
    let opts = JacobianOptions { eps: fd_eps, basis: basis_of(basis) };
    let matrix = jacobian(&|f| system.rhs(f), &f_star, &opts)?;
    let report = eigen_spectrum(&matrix, margin)?;

    // Analytic flat-interface rates with their wavenumbers, sorted the same
    // way as the numeric spectrum.
    let mut analytic: Vec<(usize, f64)> = Vec::new();
    for m in 1..config.grid.n / 2 {
        let l = system.flat_eigenvalue(m as f64);
        analytic.push((m, l));
        analytic.push((m, l));
    }
    analytic.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite rates").then(a.0.cmp(&b.0)));

    let paired = report.eigenvalues.len().min(analytic.len());
    let rows: Vec<SpectrumRow> = (0..paired)
        .map(|k| {
            let (wavenumber, lambda) = analytic[k];
            let z = report.eigenvalues[k];
            let gap = ((z.re - lambda).powi(2) + z.im.powi(2)).sqrt();
            SpectrumRow {
                wavenumber,
                analytic: lambda,
                numeric_re: z.re,
                numeric_im: z.im,
                relative_error: gap / lambda.abs().max(f64::MIN_POSITIVE),
            }
        })
        .collect();
    let max_relative_error = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);

    Ok(SpectrumPayload {
        basis: format!("{:?}", opts.basis),
        dimension: matrix.nrows(),
        spectral_bound: report.spectral_bound,
        verdict: verdict_slug(report.verdict),
        omega_plus: report.omega_plus,
        margin: report.margin,
        base_sup_norm: f_star.sup_norm(),
        rows,
        max_relative_error,
    })
}

fn integrate_configured(
    config: &ExperimentConfig,
    system: &System,
    norm_exponents: Vec<f64>,
) -> Result<TrajectoryRecord, HarnessError> {
    let f0 = initial_field(&config.initial, config.grid.n)?;
    let opts = IntegrateOptions {
        scheme: system.scheme(config.time.scheme, config.grid.n),
        dt: config.time.dt,
        t_end: config.time.t_end,
        record_every: config.time.record_every,
        norm_exponents,
    };
    Ok(integrate(&f0, &|f| system.rhs(f), &opts)?)
}

fn run_evolve(
    config: &ExperimentConfig,
    norm_exponents: &[f64],
) -> Result<EvolvePayload, HarnessError> {
    let system = System::from_config(config)?.expect("validation restricts evolve to grid problems");
    let exponents = if norm_exponents.is_empty() { vec![0.0] } else { norm_exponents.to_vec() };
    let traj = integrate_configured(config, &system, exponents.clone())?;
    let norms = exponents
        .iter()
        .map(|&r| traj.norm_series(r).expect("recorded exponent").to_vec())
        .collect();
    let mean_drift = (traj.final_state().mean() - traj.states()[0].mean()).abs();
    Ok(EvolvePayload {
        times: traj.times().to_vec(),
        norm_exponents: exponents,
        norms,
        final_sup_norm: traj.final_state().sup_norm(),
        mean_drift,
        final_state: traj.final_state().values().to_vec(),
    })
}

fn run_decay(
    config: &ExperimentConfig,
    norm_exponent: f64,
    window_start: Option<f64>,
    window_end: Option<f64>,
    sup_below: Option<f64>,
) -> Result<DecayPayload, HarnessError> {
    let system = System::from_config(config)?.expect("validation restricts decay to grid problems");
    let traj = integrate_configured(config, &system, vec![norm_exponent])?;
    let norms = traj.norm_series(norm_exponent).expect("recorded exponent");
    let start = window_start.unwrap_or(0.0);
    let end = window_end.unwrap_or(config.time.t_end);

    let mut window_times = Vec::new();
    let mut window_norms = Vec::new();
    for (k, &t) in traj.times().iter().enumerate() {
        if t < start || t > end {
            continue;
        }
        if let Some(bound) = sup_below {
            if traj.states()[k].sup_norm() > bound {
                continue;
            }
        }
        window_times.push(t);
        window_norms.push(norms[k]);
    }
    if window_times.len() < 2 {
        return Err(HarnessError::Stability(StabilityError::BadWindow(format!(
            "window [{start}, {end}] keeps {} of {} recorded samples; need at least 2",
            window_times.len(),
            traj.len()
        ))));
    }
    let fit = decay_rate_fit(&window_times, &window_norms)?;
    let reference_rate = system.flat_eigenvalue(1.0);
    let relative_rate_error = (fit.slope - reference_rate).abs() / reference_rate.abs();
    let mean_drift = (traj.final_state().mean() - traj.states()[0].mean()).abs();

    Ok(DecayPayload {
        norm_exponent,
        times: traj.times().to_vec(),
        norms: norms.to_vec(),
        window_start: start,
        window_end: end,
        sup_below,
        samples_used: window_times.len(),
        fit: FitPayload { slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared },
        reference_rate,
        relative_rate_error,
        mean_drift,
    })
}

fn run_instability(
    config: &ExperimentConfig,
    amplitudes: &[f64],
    escape_radius: f64,
    norm_exponent: f64,
) -> Result<InstabilityPayload, HarnessError> {
    let params = match System::from_config(config)? {
        Some(System::Pe2(system)) => system.params,
        _ => unreachable!("validation restricts instability to the surface-tension problem"),
    };
    let opts = ProbeOptions {
        grid: config.grid.n,
        quadrature: config.grid.quadrature_m,
        dt: config.time.dt,
        t_cap: config.time.t_end,
        norm_exponent,
        dealias: Dealias::from_flag(config.grid.dealias),
    };
    let report = instability_probe(&params, amplitudes, escape_radius, &opts)?;
    let samples = report
        .samples
        .iter()
        .map(|s| EscapeRow {
            amplitude: s.amplitude,
            predicted_time: s.predicted_time,
            escape_time: s.escape_time,
            relative_gap: s
                .escape_time
                .map(|t| (t - s.predicted_time).abs() / s.predicted_time.max(f64::MIN_POSITIVE)),
        })
        .collect();
    Ok(InstabilityPayload {
        growth_rate: report.growth_rate,
        escape_radius: report.escape_radius,
        norm_exponent,
        samples,
        conclusive: report.conclusive,
    })
}

/// Frozen-coefficient assembly callback for the fixed-point solver.
type CoefficientFn = Box<dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>, DynamicsError>>;
/// Reference integration of the same problem to a given horizon.
type DirectFn = Box<dyn Fn(f64) -> Result<DVector<f64>, HarnessError>>;

/// One fixed-point solve plus its diagnostics.
fn picard_run(
    a_of: &CoefficientFn,
    v0: &DVector<f64>,
    t_end: f64,
    opts: &PicardOptions,
    direct: Option<&DVector<f64>>,
) -> Result<PicardRunPayload, HarnessError> {
    let dim = v0.len();
    let sol = picard_lambda(a_of, |_| Ok(DVector::zeros(dim)), v0, t_end, opts)?;
    let vs_integration =
        direct.map(|d| (sol.states.last().expect("at least one node") - d).amax());
    Ok(PicardRunPayload {
        t_end,
        iterations: sol.report.iterations,
        converged: sol.report.converged,
        first_contraction: sol.report.contraction_factors.first().copied(),
        defects: sol.report.defects,
        contraction_factors: sol.report.contraction_factors,
        vs_integration,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_picard(
    config: &ExperimentConfig,
    segments: usize,
    substeps: usize,
    interp: CoefficientInterp,
    tol: f64,
    max_iter: usize,
    compare_halved: bool,
    compare_integration: bool,
) -> Result<PicardPayload, HarnessError> {
    let opts = PicardOptions { segments, substeps, interp, tol, max_iter };
    let t_end = config.time.t_end;

    let (a_of, v0, direct_at): (CoefficientFn, DVector<f64>, DirectFn) = match &config.problem {
        ProblemSpec::Pe1 { permeability, viscosity, delta_rho } => {
            let params = MuskatParamsNoSt::new(*permeability, *viscosity, *delta_rho)?;
            let rule = PvRule::new(config.grid.quadrature_m)?;
            let n = config.grid.n;
            let f0 = initial_field(&config.initial, n)?;
            let v0 = DVector::from_column_slice(f0.values());
            let a_rule = rule.clone();
            let a_of = move |v: &DVector<f64>| -> Result<DMatrix<f64>, DynamicsError> {
                let f = GridFunction::new(v.iter().copied().collect())
                    .map_err(KernelError::from)
                    .map_err(DynamicsError::from)?;
                Ok(phi1_matrix(&f, &params, &a_rule)?)
            };
            let system = Pe1System { params, rule };
            let dt = config.time.dt;
            let direct = move |horizon: f64| -> Result<DVector<f64>, HarnessError> {
                let opts = IntegrateOptions {
                    scheme: TimeScheme::ExplicitRk4,
                    dt,
                    t_end: horizon,
                    record_every: usize::MAX,
                    norm_exponents: Vec::new(),
                };
                let traj = integrate(&f0, &|f| system.rhs(f), &opts)?;
                Ok(DVector::from_column_slice(traj.final_state().values()))
            };
            (Box::new(a_of), v0, Box::new(direct))
        }
        ProblemSpec::ScalarModel { stiffness } => {
            let stiffness = *stiffness;
            let v0 = DVector::from_element(
                1,
                config.initial.value.expect("validation requires a scalar start value"),
            );
            let a_of = move |v: &DVector<f64>| -> Result<DMatrix<f64>, DynamicsError> {
                Ok(DMatrix::from_element(1, 1, 1.0 + stiffness * v[0] * v[0]))
            };
            let start = v0[0];
            let dt = config.time.dt;
            let direct = move |horizon: f64| -> Result<DVector<f64>, HarnessError> {
                let f = |v: f64| -(1.0 + stiffness * v * v) * v;
                let steps = (horizon / dt).ceil().max(1.0) as usize;
                let h = horizon / steps as f64;
                let mut v = start;
                for _ in 0..steps {
                    let k1 = f(v);
                    let k2 = f(v + 0.5 * h * k1);
                    let k3 = f(v + 0.5 * h * k2);
                    let k4 = f(v + h * k3);
                    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
                Ok(DVector::from_element(1, v))
            };
            (Box::new(a_of), v0, Box::new(direct))
        }
        ProblemSpec::Pe2 { .. } => {
            unreachable!("validation restricts the fixed-point experiment to pe1 and the scalar model")
        }
    };

    let direct_full = if compare_integration { Some(direct_at(t_end)?) } else { None };
    let full = picard_run(&a_of, &v0, t_end, &opts, direct_full.as_ref())?;

    let halved = if compare_halved {
        let direct_half = if compare_integration { Some(direct_at(0.5 * t_end)?) } else { None };
        Some(picard_run(&a_of, &v0, 0.5 * t_end, &opts, direct_half.as_ref())?)
    } else {
        None
    };
    let contraction_improves = match (&halved, full.first_contraction) {
        (Some(h), Some(f)) => h.first_contraction.map(|hf| hf < f),
        _ => None,
    };

    Ok(PicardPayload { full, halved, contraction_improves })
}

fn run_semiflow(
    config: &ExperimentConfig,
    split: f64,
    norm_exponent: f64,
) -> Result<SemiflowPayload, HarnessError> {
    let system = System::from_config(config)?.expect("validation restricts semiflow to grid problems");
    let f0 = initial_field(&config.initial, config.grid.n)?;
    let scheme = system.scheme(config.time.scheme, config.grid.n);
    let dt = config.time.dt;
    let s = split;
    let t = config.time.t_end - split;
    let rhs = |f: &GridFunction| system.rhs(f);

    let defect = semiflow_defect(&f0, &rhs, s, t, norm_exponent, &scheme, dt)?;

    let final_state = |step: f64| -> Result<GridFunction, HarnessError> {
        let opts = IntegrateOptions {
            scheme: scheme.clone(),
            dt: step,
            t_end: config.time.t_end,
            record_every: usize::MAX,
            norm_exponents: Vec::new(),
        };
        Ok(integrate(&f0, &rhs, &opts)?.final_state().clone())
    };
    let coarse = final_state(dt)?;
    let fine = final_state(0.5 * dt)?;
    let halving_estimate = coarse.add_scaled(&fine, -1.0).sobolev_norm(norm_exponent);
    let defect_over_estimate = (halving_estimate > 0.0).then(|| defect / halving_estimate);

    let on_step_grid = |x: f64| {
        let ratio = x / dt;
        (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0)
    };

    Ok(SemiflowPayload {
        split_s: s,
        split_t: t,
        dt,
        norm_exponent,
        defect,
        halving_estimate,
        defect_over_estimate,
        aligned: on_step_grid(s) && on_step_grid(t),
    })
}
