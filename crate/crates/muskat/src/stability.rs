//! Linearized stability analysis: finite-difference Jacobians in trigonometric
//! bases, spectra with a stability verdict, exponential rate fits on recorded
//! norm histories, and a nonlinear escape-time probe for unstable interfaces.

use crate::dynamics::{step, DynamicsError, LinearSymbol, TimeScheme};
use crate::kernels::{Dealias, KernelError, MuskatParamsSt, Pe2System, PvRule};
use crate::torus::GridFunction;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Errors raised by the stability analyses.
#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("eigenvalue iteration failed to converge")]
    Eigensolver,
    #[error("jacobian column {column} is not finite")]
    NonFiniteColumn { column: usize },
    #[error("invalid fit window: {0}")]
    BadWindow(String),
    #[error("norm sample {index} is not a positive finite value (got {value})")]
    NonpositiveNorm { index: usize, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Subspace the Jacobian acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianBasis {
    /// Plain grid coordinates: all `n` point values.
    Grid,
    /// Orthonormal trigonometric basis of the zero-mean subspace (`n - 1`
    /// directions, including the Nyquist cosine).
    ZeroMean,
    /// Zero-mean subspace without the Nyquist direction (`n - 2` directions).
    /// The default: odd-order spectral derivatives annihilate the Nyquist
    /// mode, so keeping it would append a spurious zero eigenvalue.
    #[default]
    ZeroMeanResolved,
}

impl JacobianBasis {
    pub fn dim(&self, n: usize) -> usize {
        match self {
            JacobianBasis::Grid => n,
            JacobianBasis::ZeroMean => n - 1,
            JacobianBasis::ZeroMeanResolved => n - 2,
        }
    }
}

/// Options for [`jacobian`].
#[derive(Debug, Clone)]
pub struct JacobianOptions {
    /// Relative step for central differences; the absolute step is
    /// `eps * (1 + |f*|_sup)`.
    pub eps: f64,
    pub basis: JacobianBasis,
}

impl Default for JacobianOptions {
    fn default() -> Self {
        Self { eps: 1e-6, basis: JacobianBasis::default() }
    }
}

/// Basis fields spanning the requested subspace. The trigonometric fields are
/// orthonormal with respect to the mean inner product `(1/n) sum u_i v_i`.
fn basis_fields(n: usize, basis: JacobianBasis) -> Vec<GridFunction> {
    match basis {
        JacobianBasis::Grid => (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                GridFunction::new(v).expect("unit vector is valid")
            })
            .collect(),
        JacobianBasis::ZeroMean | JacobianBasis::ZeroMeanResolved => {
            let amp = 2.0f64.sqrt();
            let mut fields = Vec::with_capacity(basis.dim(n));
            for m in 1..n / 2 {
                fields.push(GridFunction::harmonic(n, m, amp, 0.0).expect("valid harmonic"));
                fields.push(GridFunction::harmonic(n, m, 0.0, amp).expect("valid harmonic"));
            }
            if basis == JacobianBasis::ZeroMean {
                let nyquist: Vec<f64> =
                    (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
                fields.push(GridFunction::new(nyquist).expect("valid nyquist field"));
            }
            fields
        }
    }
}

/// Central finite-difference Jacobian of `rhs` at `f_star`, expressed in the
/// chosen basis. In the trigonometric bases the entries are mean inner
/// products against the (orthonormal) basis fields, so the matrix represents
/// the linearization compressed to that subspace.
pub fn jacobian<F>(
    rhs: &F,
    f_star: &GridFunction,
    opts: &JacobianOptions,
) -> Result<DMatrix<f64>, StabilityError>
where
    F: Fn(&GridFunction) -> Result<GridFunction, KernelError> + Sync,
{
    if !(opts.eps.is_finite() && opts.eps > 0.0) {
        return Err(StabilityError::Precondition(format!(
            "finite-difference step {} must be positive",
            opts.eps
        )));
    }
    let n = f_star.len();
    let fields = basis_fields(n, opts.basis);
    let dim = fields.len();
    let eps = opts.eps * (1.0 + f_star.sup_norm());

    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|l| -> Result<Vec<f64>, StabilityError> {
            let plus = rhs(&f_star.add_scaled(&fields[l], eps))?;
            let minus = rhs(&f_star.add_scaled(&fields[l], -eps))?;
            let deriv = plus.add_scaled(&minus, -1.0).scaled(0.5 / eps);
            if !deriv.is_finite() {
                return Err(StabilityError::NonFiniteColumn { column: l });
            }
            let column = match opts.basis {
                JacobianBasis::Grid => deriv.values().to_vec(),
                _ => fields
                    .iter()
                    .map(|b| {
                        b.values()
                            .iter()
                            .zip(deriv.values())
                            .map(|(bi, di)| bi * di)
                            .sum::<f64>()
                            / n as f64
                    })
                    .collect(),
            };
            Ok(column)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(DMatrix::from_fn(dim, dim, |i, j| columns[j][i]))
}

/// Stability classification of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    /// The spectral bound sits inside the classification margin.
    Marginal,
}

/// Spectrum of a linearization with its stability verdict.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Eigenvalues sorted by real part (descending), ties by imaginary part
    /// (descending).
    pub eigenvalues: Vec<Complex64>,
    /// Largest real part.
    pub spectral_bound: f64,
    pub verdict: Verdict,
    /// Positive growth rate: the spectral bound when the verdict is unstable.
    pub omega_plus: Option<f64>,
    /// Half-width of the marginal band around zero used for the verdict.
    pub margin: f64,
}

/// Default half-width of the marginal band for verdicts.
pub const DEFAULT_MARGIN: f64 = 1e-8;

/// Computes the full complex spectrum of `matrix` and classifies it.
pub fn eigen_spectrum(matrix: &DMatrix<f64>, margin: f64) -> Result<SpectrumReport, StabilityError> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(StabilityError::Precondition(format!(
            "margin {margin} must be nonnegative"
        )));
    }
    let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), f64::EPSILON, 100_000)
        .ok_or(StabilityError::Eigensolver)?;
    let mut eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(StabilityError::Eigensolver);
    }
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .expect("finite eigenvalues")
            .then(b.im.partial_cmp(&a.im).expect("finite eigenvalues"))
    });
    let spectral_bound = eigenvalues.first().map_or(f64::NEG_INFINITY, |z| z.re);
    let verdict = if spectral_bound > margin {
        Verdict::Unstable
    } else if spectral_bound < -margin {
        Verdict::Stable
    } else {
        Verdict::Marginal
    };
    let omega_plus = (verdict == Verdict::Unstable).then_some(spectral_bound);
    Ok(SpectrumReport { eigenvalues, spectral_bound, verdict, omega_plus, margin })
}

/// Eigenvalues of the flat-interface linearization on the resolved zero-mean
/// modes of an `n`-point grid: each wavenumber `1 <= m < n/2` contributes a
/// cosine and a sine direction with the same eigenvalue. Sorted descending.
pub fn analytic_spectrum(n: usize, flat_eigenvalue: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n - 2);
    for m in 1..n / 2 {
        let l = flat_eigenvalue(m as f64);
        out.push(l);
        out.push(l);
    }
    out.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    out
}

/// Least-squares fit of an exponential rate to a norm history.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Slope of `ln |f(t)|` in time: negative for decay, positive for growth.
    pub slope: f64,
    /// Fitted `ln |f(0)|`.
    pub intercept: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
}

/// Fits `ln(norms) = intercept + slope * times` by least squares.
pub fn decay_rate_fit(times: &[f64], norms: &[f64]) -> Result<RateFit, StabilityError> {
    if times.len() != norms.len() {
        return Err(StabilityError::BadWindow(format!(
            "{} times but {} norms",
            times.len(),
            norms.len()
        )));
    }
    if times.len() < 2 {
        return Err(StabilityError::BadWindow("need at least two samples".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) || !times.iter().all(|t| t.is_finite()) {
        return Err(StabilityError::BadWindow("times must be finite and strictly increasing".into()));
    }
    if let Some((index, &value)) =
        norms.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(StabilityError::NonpositiveNorm { index, value });
    }

    let n = times.len() as f64;
    let logs: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let t_mean = times.iter().sum::<f64>() / n;
    let l_mean = logs.iter().sum::<f64>() / n;
    let mut s_tt = 0.0;
    let mut s_tl = 0.0;
    for (&t, &l) in times.iter().zip(&logs) {
        s_tt += (t - t_mean) * (t - t_mean);
        s_tl += (t - t_mean) * (l - l_mean);
    }
    let slope = s_tl / s_tt;
    let intercept = l_mean - slope * t_mean;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&t, &l) in times.iter().zip(&logs) {
        let fit = intercept + slope * t;
        ss_res += (l - fit) * (l - fit);
        ss_tot += (l - l_mean) * (l - l_mean);
    }
    let r_squared = if ss_tot < 1e-30 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared })
}

/// Options for [`instability_probe`].
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    /// Grid size for the nonlinear runs.
    pub grid: usize,
    /// Quadrature nodes for the nonlinear runs.
    pub quadrature: usize,
    pub dt: f64,
    /// Give up on a sample after this much simulated time.
    pub t_cap: f64,
    /// Sobolev exponent of the escape measurement norm.
    pub norm_exponent: f64,
    pub dealias: Dealias,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            grid: 64,
            quadrature: 128,
            dt: 1e-3,
            t_cap: 30.0,
            norm_exponent: 1.0,
            dealias: Dealias::On,
        }
    }
}

/// Escape measurement for one seed amplitude.
#[derive(Debug, Clone, Copy)]
pub struct EscapeSample {
    pub amplitude: f64,
    /// First time the measurement norm reached the escape radius; `None` if
    /// the run hit the time cap first.
    pub escape_time: Option<f64>,
    /// Linear-theory prediction `ln(radius / amplitude) / omega_plus`.
    pub predicted_time: f64,
}

/// Outcome of the escape probe.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub samples: Vec<EscapeSample>,
    pub escape_radius: f64,
    /// Largest flat-interface growth rate over the resolved wavenumbers.
    pub growth_rate: f64,
    /// True when even the largest seed escaped, so every smaller seed's
    /// non-escape (if any) is a time-cap artifact rather than stability.
    pub conclusive: bool,
}

/// Seeds cosine perturbations of decreasing amplitude on a spectrally unstable
/// flat interface and measures when each run's norm leaves the ball of the
/// given radius. Escape times should track `ln(radius / amplitude) /
/// omega_plus` while the dynamics stays in the linear regime.
pub fn instability_probe(
    params: &MuskatParamsSt,
    amplitudes: &[f64],
    escape_radius: f64,
    opts: &ProbeOptions,
) -> Result<ProbeReport, StabilityError> {
    let growth_rate = (1..=opts.grid / 2)
        .map(|m| params.flat_eigenvalue(m as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if growth_rate <= 0.0 {
        return Err(StabilityError::Precondition(format!(
            "flat interface is spectrally stable (largest rate {growth_rate:.3e}); nothing to probe"
        )));
    }
    if amplitudes.is_empty() {
        return Err(StabilityError::Precondition("need at least one seed amplitude".into()));
    }
    if !amplitudes.iter().all(|a| a.is_finite() && *a > 0.0) {
        return Err(StabilityError::Precondition("seed amplitudes must be positive".into()));
    }
    if !amplitudes.windows(2).all(|w| w[0] > w[1]) {
        return Err(StabilityError::Precondition(
            "seed amplitudes must be strictly decreasing".into(),
        ));
    }
    if !(escape_radius.is_finite() && escape_radius > 0.0) {
        return Err(StabilityError::Precondition(format!(
            "escape radius {escape_radius} must be positive"
        )));
    }
    if !(opts.dt > 0.0 && opts.t_cap > 0.0) {
        return Err(StabilityError::Precondition(
            "probe step size and time cap must be positive".into(),
        ));
    }

    let system =
        Pe2System { params: *params, rule: PvRule::new(opts.quadrature)?, dealias: opts.dealias };
    let symbol = LinearSymbol::from_flat_eigenvalues(opts.grid, |m| params.flat_eigenvalue(m));
    let scheme = TimeScheme::ImexLinearlyImplicit(symbol);
    let rhs = |f: &GridFunction| system.rhs(f);
    let max_steps = (opts.t_cap / opts.dt).ceil() as usize;

    let samples = amplitudes
        .iter()
        .map(|&amplitude| -> Result<EscapeSample, StabilityError> {
            let predicted_time = (escape_radius / amplitude).ln() / growth_rate;
            let mut f =
                GridFunction::harmonic(opts.grid, 1, amplitude, 0.0).map_err(KernelError::from)?;
            if f.sobolev_norm(opts.norm_exponent) >= escape_radius {
                return Ok(EscapeSample { amplitude, escape_time: Some(0.0), predicted_time });
            }
            let mut escape_time = None;
            for k in 1..=max_steps {
                f = step(&scheme, &rhs, &f, opts.dt)?;
                let norm = f.sobolev_norm(opts.norm_exponent);
                // A non-finite state has certainly left every bounded ball.
                if !norm.is_finite() || norm >= escape_radius {
                    escape_time = Some(k as f64 * opts.dt);
                    break;
                }
            }
            Ok(EscapeSample { amplitude, escape_time, predicted_time })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let conclusive = samples.first().is_some_and(|s| s.escape_time.is_some());
    Ok(ProbeReport { samples, escape_radius, growth_rate, conclusive })
}

/// Projects a grid field onto the orthonormal basis of a subspace; useful for
/// mapping states into the coordinates a Jacobian was assembled in.
pub fn project_onto_basis(f: &GridFunction, basis: JacobianBasis) -> DVector<f64> {
    let n = f.len();
    match basis {
        JacobianBasis::Grid => DVector::from_column_slice(f.values()),
        _ => {
            let fields = basis_fields(n, basis);
            DVector::from_iterator(
                fields.len(),
                fields.iter().map(|b| {
                    b.values().iter().zip(f.values()).map(|(bi, fi)| bi * fi).sum::<f64>()
                        / n as f64
                }),
            )
        }
    }
}

/// Reconstructs a grid field from subspace coordinates (adjoint of
/// [`project_onto_basis`] on the span).
pub fn lift_from_basis(coords: &DVector<f64>, n: usize, basis: JacobianBasis) -> GridFunction {
    match basis {
        JacobianBasis::Grid => {
            GridFunction::new(coords.iter().copied().collect()).expect("finite coordinates")
        }
        _ => {
            let fields = basis_fields(n, basis);
            assert_eq!(coords.len(), fields.len(), "coordinate count matches basis");
            let mut out = GridFunction::zeros(n).expect("valid grid size");
            for (c, b) in coords.iter().zip(&fields) {
                out = out.add_scaled(b, *c);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{MuskatParamsNoSt, Pe1System};
    use approx::assert_abs_diff_eq;

    fn linear_rhs(f: &GridFunction) -> Result<GridFunction, KernelError> {
        Ok(f.derivative(2))
    }

    #[test]
    fn jacobian_dimensions_follow_the_basis() {
        let f = GridFunction::zeros(32).unwrap();
        for (basis, dim) in [
            (JacobianBasis::Grid, 32),
            (JacobianBasis::ZeroMean, 31),
            (JacobianBasis::ZeroMeanResolved, 30),
        ] {
            let opts = JacobianOptions { basis, ..JacobianOptions::default() };
            let j = jacobian(&linear_rhs, &f, &opts).unwrap();
            assert_eq!(j.nrows(), dim);
            assert_eq!(j.ncols(), dim);
            assert_eq!(basis.dim(32), dim);
        }
    }

    #[test]
    fn jacobian_recovers_a_linear_operator() {
        // d²/dx² is linear with eigenvalue -m² on both trig directions of
        // wavenumber m, so the Jacobian must be diagonal in the trig basis.
        let f = GridFunction::zeros(32).unwrap();
        let j = jacobian(&linear_rhs, &f, &JacobianOptions::default()).unwrap();
        for k in 0..j.nrows() {
            let m = (k / 2 + 1) as f64;
            for l in 0..j.ncols() {
                let want = if k == l { -m * m } else { 0.0 };
                assert_abs_diff_eq!(j[(k, l)], want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn jacobian_is_insensitive_to_the_step_size() {
        let params = MuskatParamsNoSt::new(1.0, 1.0, 2.0).unwrap();
        let system = Pe1System { params, rule: PvRule::new(64).unwrap() };
        let f_star = GridFunction::harmonic(32, 1, 0.05, 0.0).unwrap();
        let rhs = |f: &GridFunction| system.rhs(f);
        let coarse = jacobian(&rhs, &f_star, &JacobianOptions { eps: 1e-6, ..Default::default() })
            .unwrap();
        let fine = jacobian(&rhs, &f_star, &JacobianOptions { eps: 1e-7, ..Default::default() })
            .unwrap();
        let diff = (&coarse - &fine).amax();
        assert!(diff <= 1e-7, "step-size sensitivity {diff:.3e}");
    }

    #[test]
    fn flat_interface_spectrum_matches_the_analytic_rates() {
        let params = MuskatParamsNoSt::new(1.0, 1.0, 2.0).unwrap();
        let system = Pe1System { params, rule: PvRule::new(64).unwrap() };
        let flat = GridFunction::zeros(32).unwrap();
        let rhs = |f: &GridFunction| system.rhs(f);
        let j = jacobian(&rhs, &flat, &JacobianOptions::default()).unwrap();
        let report = eigen_spectrum(&j, DEFAULT_MARGIN).unwrap();
        let want = analytic_spectrum(32, |m| params.flat_eigenvalue(m));
        assert_eq!(report.eigenvalues.len(), want.len());
        for (got, want) in report.eigenvalues.iter().zip(&want) {
            assert_abs_diff_eq!(got.re, *want, epsilon = 1e-6);
            assert!(got.im.abs() <= 1e-8);
        }
        assert_eq!(report.verdict, Verdict::Stable);
        assert_abs_diff_eq!(report.spectral_bound, -1.0, epsilon = 1e-6);
        assert!(report.omega_plus.is_none());
    }

    #[test]
    fn eigen_spectrum_classifies_and_sorts() {
        let stable = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0, -0.5]));
        let r = eigen_spectrum(&stable, DEFAULT_MARGIN).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert_abs_diff_eq!(r.spectral_bound, -0.5, epsilon = 1e-12);
        let re: Vec<f64> = r.eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![-0.5, -1.0, -2.0]);

        let unstable = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -2.0]));
        let r = eigen_spectrum(&unstable, DEFAULT_MARGIN).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_eq!(r.omega_plus, Some(r.spectral_bound));

        // Pure rotation: conjugate pair on the imaginary axis, sorted with the
        // positive imaginary part first; verdict marginal.
        let rotation = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = eigen_spectrum(&rotation, DEFAULT_MARGIN).unwrap();
        assert_eq!(r.verdict, Verdict::Marginal);
        assert!(r.eigenvalues[0].im > 0.0 && r.eigenvalues[1].im < 0.0);
    }

    #[test]
    fn verdict_respects_the_margin() {
        let nearly = DMatrix::from_diagonal(&DVector::from_vec(vec![-1e-12, -3.0]));
        assert_eq!(eigen_spectrum(&nearly, 1e-8).unwrap().verdict, Verdict::Marginal);
        assert_eq!(eigen_spectrum(&nearly, 1e-14).unwrap().verdict, Verdict::Stable);
        assert!(eigen_spectrum(&nearly, -1.0).is_err());
    }

    #[test]
    fn analytic_rates_match_closed_forms() {
        // Density jump 2, permeability 1, viscosity 1: rate -m at wavenumber m.
        let no_st = MuskatParamsNoSt::new(1.0, 1.0, 2.0).unwrap();
        let spectrum = analytic_spectrum(8, |m| no_st.flat_eigenvalue(m));
        assert_eq!(spectrum.len(), 6);
        assert_abs_diff_eq!(spectrum[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spectrum[5], -3.0, epsilon = 1e-15);

        // Gravity-dominated unstable case: sigma = 1, theta = -2 gives
        // -(m³ - 2m)/2, positive only at m = 1.
        let st = MuskatParamsSt::new(1.0, 1.0, 1.0, 1.0, -2.0).unwrap();
        let spectrum = analytic_spectrum(8, |m| st.flat_eigenvalue(m));
        assert_abs_diff_eq!(spectrum[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spectrum[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spectrum[2], -2.0, epsilon = 1e-15);
    }

    #[test]
    fn rate_fit_recovers_an_exponential() {
        let times: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        let norms: Vec<f64> = times.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let fit = decay_rate_fit(&times, &norms).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 3.0f64.ln(), epsilon = 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn rate_fit_on_an_integrated_decay() {
        use crate::dynamics::{integrate, IntegrateOptions};
        let f0 = GridFunction::harmonic(32, 1, 1.0, 0.0).unwrap();
        let rhs = |f: &GridFunction| -> Result<GridFunction, KernelError> { Ok(f.scaled(-2.0)) };
        let opts = IntegrateOptions {
            scheme: TimeScheme::ExplicitRk4,
            dt: 1e-3,
            t_end: 2.0,
            record_every: 100,
            norm_exponents: vec![1.0],
        };
        let traj = integrate(&f0, &rhs, &opts).unwrap();
        let fit = decay_rate_fit(traj.times(), traj.norm_series(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-10);
    }

    #[test]
    fn rate_fit_validates_the_window() {
        assert!(matches!(
            decay_rate_fit(&[0.0], &[1.0]),
            Err(StabilityError::BadWindow(_))
        ));
        assert!(matches!(
            decay_rate_fit(&[0.0, 0.0], &[1.0, 1.0]),
            Err(StabilityError::BadWindow(_))
        ));
        assert!(matches!(
            decay_rate_fit(&[0.0, 1.0], &[1.0, 0.0]),
            Err(StabilityError::NonpositiveNorm { index: 1, .. })
        ));
    }

    #[test]
    fn probe_rejects_stable_parameters() {
        // theta + sigma > 0: every mode decays.
        let params = MuskatParamsSt::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let err = instability_probe(&params, &[1e-2], 0.05, &ProbeOptions::default()).unwrap_err();
        assert!(matches!(err, StabilityError::Precondition(_)));
    }

    #[test]
    fn probe_validates_amplitudes() {
        let params = MuskatParamsSt::new(1.0, 1.0, 1.0, 1.0, -2.0).unwrap();
        let opts = ProbeOptions::default();
        assert!(instability_probe(&params, &[], 0.05, &opts).is_err());
        assert!(instability_probe(&params, &[1e-3, 1e-2], 0.05, &opts).is_err());
        assert!(instability_probe(&params, &[1e-2, -1e-3], 0.05, &opts).is_err());
    }

    #[test]
    fn probe_reports_immediate_escape_for_large_seeds() {
        let params = MuskatParamsSt::new(1.0, 1.0, 1.0, 1.0, -2.0).unwrap();
        let opts = ProbeOptions { grid: 16, quadrature: 32, t_cap: 0.1, ..Default::default() };
        let report = instability_probe(&params, &[0.2], 0.05, &opts).unwrap();
        assert_eq!(report.samples[0].escape_time, Some(0.0));
        assert!(report.conclusive);
    }

    #[test]
    fn probe_escape_times_track_the_linear_prediction() {
        // sigma = 1, theta = -2: growth rate 1/2 on the fundamental mode.
        let params = MuskatParamsSt::new(1.0, 1.0, 1.0, 1.0, -2.0).unwrap();
        let opts = ProbeOptions {
            grid: 32,
            quadrature: 64,
            dt: 1e-2,
            t_cap: 25.0,
            ..Default::default()
        };
        let report = instability_probe(&params, &[1e-2, 1e-3], 0.05, &opts).unwrap();
        assert_abs_diff_eq!(report.growth_rate, 0.5, epsilon = 1e-12);
        assert!(report.conclusive);
        for sample in &report.samples {
            let escaped = sample.escape_time.expect("sample escapes well before the cap");
            let rel = (escaped - sample.predicted_time).abs() / sample.predicted_time;
            assert!(
                rel <= 0.2,
                "amplitude {:.1e}: escape {escaped:.3} vs predicted {:.3}",
                sample.amplitude,
                sample.predicted_time
            );
        }
    }

    #[test]
    fn basis_projection_roundtrips() {
        let f = GridFunction::harmonic(32, 3, 0.7, -0.4).unwrap();
        for basis in [JacobianBasis::Grid, JacobianBasis::ZeroMean, JacobianBasis::ZeroMeanResolved]
        {
            let coords = project_onto_basis(&f, basis);
            let back = lift_from_basis(&coords, 32, basis);
            let diff = f.add_scaled(&back, -1.0).sup_norm();
            assert!(diff <= 1e-12, "{basis:?} roundtrip error {diff:.3e}");
        }
    }
}
