//! Spectral calculus for real fields on the 2π-periodic grid.
//!
//! Conventions used throughout the crate:
//!
//! * collocation points `x_i = 2π i / n`, `i = 0..n`, with `n` even and at least 16;
//! * coefficients `c_m = (1/n) Σ_i f(x_i) e^{-i m x_i}` stored in FFT index order,
//!   so `cos(m x)` has `c_{±m} = 1/2`;
//! * the Nyquist slot `m = n/2` represents `c_{n/2} cos(n x / 2)`. Odd-order
//!   derivatives and the Hilbert transform send it to zero (the sign of the
//!   Nyquist wavenumber is ambiguous on an even grid), even orders keep it;
//! * `sobolev_norm(f, r) = (Σ_m (1 + m²)^r |c_m|²)^{1/2}`, so `r = 0` recovers the
//!   root-mean-square grid norm (Parseval).

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};
use thiserror::Error;

/// Smallest admissible grid size. Below this the quadrature and dealiasing
/// machinery has no room to work with.
pub const MIN_GRID: usize = 16;

/// Errors raised by grid and coefficient constructors.
#[derive(Debug, Error)]
pub enum TorusError {
    #[error("grid length {0} is unsupported: need an even length of at least {MIN_GRID}")]
    BadLength(usize),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("coefficient array breaks Hermitian symmetry at index {0}")]
    NotHermitian(usize),
    #[error("regularity exponent {value} outside the admissible interval ({lo}, {hi})")]
    BadExponent { value: f64, lo: f64, hi: f64 },
}

fn check_length(n: usize) -> Result<(), TorusError> {
    if n < MIN_GRID || !n.is_multiple_of(2) {
        return Err(TorusError::BadLength(n));
    }
    Ok(())
}

/// Collocation points `x_i = 2π i / n`.
pub fn grid_points(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| 2.0 * PI * i as f64 / n as f64)
}

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

fn with_planner<T>(f: impl FnOnce(&mut FftPlanner<f64>) -> T) -> T {
    let mutex = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut planner = mutex.lock().expect("FFT planner lock poisoned");
    f(&mut planner)
}

fn fft_forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let plan = with_planner(|p| p.plan_fft_forward(n));
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

fn fft_inverse_real(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let plan = with_planner(|p| p.plan_fft_inverse(n));
    let mut buf = coeffs.to_vec();
    plan.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Real field sampled on the uniform periodic grid.
///
/// Invariants: even length of at least [`MIN_GRID`], all samples finite.
#[derive(Debug, Clone)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    /// Wraps a sample vector, validating the grid invariants.
    pub fn new(values: Vec<f64>) -> Result<Self, TorusError> {
        check_length(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TorusError::NonFiniteSample(i));
        }
        Ok(Self { values })
    }

    /// Internal constructor for arithmetic on already-validated data. The
    /// caller is responsible for checking finiteness when it can be lost.
    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(check_length(values.len()).is_ok());
        Self { values }
    }

    /// The zero field.
    pub fn zeros(n: usize) -> Result<Self, TorusError> {
        check_length(n)?;
        Ok(Self { values: vec![0.0; n] })
    }

    /// The constant field `c`.
    pub fn constant(n: usize, c: f64) -> Result<Self, TorusError> {
        Self::new(vec![c; n])
    }

    /// Samples `g` at the collocation points.
    pub fn from_fn(n: usize, g: impl Fn(f64) -> f64) -> Result<Self, TorusError> {
        check_length(n)?;
        Self::new(grid_points(n).map(g).collect())
    }

    /// Samples `a cos(m x) + b sin(m x)`.
    pub fn harmonic(n: usize, m: usize, cos_amp: f64, sin_amp: f64) -> Result<Self, TorusError> {
        let mf = m as f64;
        Self::from_fn(n, |x| cos_amp * (mf * x).cos() + sin_amp * (mf * x).sin())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Arithmetic mean of the samples (the discrete interface mean).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self + c * other`. Both fields must share a grid.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Self::from_values_unchecked(values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_values_unchecked(self.values.iter().map(|v| c * v).collect())
    }

    /// Forward transform to Fourier coefficients.
    pub fn to_coeffs(&self) -> FourierCoeffs {
        FourierCoeffs {
            coeffs: fft_forward(&self.values),
        }
    }

    /// Spectral derivative of order 1, 2 or 3.
    pub fn derivative(&self, order: u32) -> Self {
        self.to_coeffs().derivative(order).to_grid()
    }

    /// Periodic Hilbert transform (Fourier multiplier `-i sgn(m)`).
    pub fn hilbert(&self) -> Self {
        self.to_coeffs().hilbert().to_grid()
    }

    /// Sobolev norm of order `r >= 0` under the grid-coefficient convention
    /// described in the module docs.
    pub fn sobolev_norm(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "sobolev exponent must be nonnegative");
        self.to_coeffs().sobolev_norm(r)
    }

    /// Removes the mean. Idempotent; commutes with `derivative` and `hilbert`.
    pub fn zero_mean(&self) -> Self {
        let mean = self.mean();
        Self::from_values_unchecked(self.values.iter().map(|v| v - mean).collect())
    }

    /// Curvature of the graph `y = f(x)`: `f'' (1 + f'^2)^{-3/2}`, with spectral
    /// derivatives and a pointwise product.
    pub fn curvature(&self) -> Self {
        let c = self.to_coeffs();
        let d1 = c.derivative(1).to_grid();
        let d2 = c.derivative(2).to_grid();
        let values = d1
            .values
            .iter()
            .zip(&d2.values)
            .map(|(&fp, &fpp)| fpp / (1.0 + fp * fp).powf(1.5))
            .collect();
        Self::from_values_unchecked(values)
    }

    /// Curvature evaluated on a 3/2-padded grid and truncated back, damping the
    /// aliasing of the pointwise nonlinearity into the resolved modes.
    pub fn curvature_dealiased(&self) -> Self {
        let n = self.len();
        let fine = 3 * n / 2;
        let c = self.to_coeffs();
        let d1 = c.derivative(1).resample(fine).to_grid();
        let d2 = c.derivative(2).resample(fine).to_grid();
        let values = d1
            .values
            .iter()
            .zip(&d2.values)
            .map(|(&fp, &fpp)| fpp / (1.0 + fp * fp).powf(1.5))
            .collect();
        GridFunction::from_values_unchecked(values)
            .to_coeffs()
            .resample(n)
            .to_grid()
    }
}

/// Fourier coefficients of a real field, stored in FFT index order.
///
/// Invariants: even length of at least [`MIN_GRID`], Hermitian symmetry
/// `c_{n-k} = conj(c_k)` (so the represented field is real).
#[derive(Debug, Clone)]
pub struct FourierCoeffs {
    coeffs: Vec<Complex64>,
}

impl FourierCoeffs {
    /// Wraps a coefficient vector, validating length and Hermitian symmetry.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, TorusError> {
        let n = coeffs.len();
        check_length(n)?;
        let scale = coeffs.iter().fold(1.0f64, |a, c| a.max(c.norm())) * 1e-8;
        for k in 0..=n / 2 {
            let mirror = coeffs[(n - k) % n];
            if (coeffs[k] - mirror.conj()).norm() > scale {
                return Err(TorusError::NotHermitian(k));
            }
        }
        Ok(Self { coeffs })
    }

    /// Grid size of the represented field.
    pub fn grid_len(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of the signed wavenumber `m`, `|m| <= n/2`.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let n = self.coeffs.len() as i64;
        assert!(m.abs() <= n / 2, "wavenumber out of range");
        self.coeffs[m.rem_euclid(n) as usize]
    }

    /// Signed wavenumber for FFT index `k` (Nyquist maps to `+n/2`).
    fn wavenumber(n: usize, k: usize) -> i64 {
        if k <= n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Inverse transform back to grid samples.
    pub fn to_grid(&self) -> GridFunction {
        GridFunction::from_values_unchecked(fft_inverse_real(&self.coeffs))
    }

    /// Multiplier `(i m)^order`; the Nyquist slot is zeroed for odd orders.
    pub fn derivative(&self, order: u32) -> Self {
        assert!((1..=3).contains(&order), "derivative order must be 1..=3");
        let n = self.coeffs.len();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k == n / 2 && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let m = Self::wavenumber(n, k) as f64;
                c * Complex64::new(0.0, m).powu(order)
            })
            .collect();
        Self { coeffs }
    }

    /// Multiplier `-i sgn(m)`; mean and Nyquist slots are zeroed.
    pub fn hilbert(&self) -> Self {
        let n = self.coeffs.len();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k == 0 || k == n / 2 {
                    return Complex64::new(0.0, 0.0);
                }
                let m = Self::wavenumber(n, k);
                let mult = Complex64::new(0.0, if m > 0 { -1.0 } else { 1.0 });
                c * mult
            })
            .collect();
        Self { coeffs }
    }

    /// Weighted coefficient norm `(Σ_m (1 + m²)^r |c_m|²)^{1/2}`.
    pub fn sobolev_norm(&self, r: f64) -> f64 {
        let n = self.coeffs.len();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let m = Self::wavenumber(n, k) as f64;
                (1.0 + m * m).powf(r) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Trigonometric interpolant evaluated at a single point.
    pub fn eval_at(&self, y: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = self.coeffs[0].re;
        for m in 1..n / 2 {
            let phase = Complex64::from_polar(1.0, m as f64 * y);
            acc += 2.0 * (self.coeffs[m] * phase).re;
        }
        acc += self.coeffs[n / 2].re * (n as f64 / 2.0 * y).cos();
        acc
    }

    /// Interpolant sampled on the rotated grid `{x_i + delta}`, via a phase
    /// shift and one inverse transform. The Nyquist slot follows the cosine
    /// convention, so a zero shift reproduces the original samples.
    pub fn eval_shifted_grid(&self, delta: f64) -> Vec<f64> {
        let n = self.coeffs.len();
        let shifted: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k == n / 2 {
                    c * (n as f64 / 2.0 * delta).cos()
                } else {
                    let m = Self::wavenumber(n, k) as f64;
                    c * Complex64::from_polar(1.0, m * delta)
                }
            })
            .collect();
        fft_inverse_real(&shifted)
    }

    /// Re-expands the interpolant on a grid of `n_new` points: zero padding for
    /// refinement, mode truncation (with Nyquist folding) for coarsening.
    pub fn resample(&self, n_new: usize) -> Self {
        check_length(n_new).expect("resample target must be an admissible grid length");
        let n = self.coeffs.len();
        if n_new == n {
            return self.clone();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n_new];
        if n_new > n {
            out[0] = self.coeffs[0];
            for m in 1..n / 2 {
                out[m] = self.coeffs[m];
                out[n_new - m] = self.coeffs[n - m];
            }
            let half = self.coeffs[n / 2] * 0.5;
            out[n / 2] = half;
            out[n_new - n / 2] = half;
        } else {
            out[0] = self.coeffs[0];
            for m in 1..n_new / 2 {
                out[m] = self.coeffs[m];
                out[n_new - m] = self.coeffs[n - m];
            }
            let folded = self.coeffs[n_new / 2] + self.coeffs[n - n_new / 2];
            out[n_new / 2] = Complex64::new(folded.re, 0.0);
        }
        Self { coeffs: out }
    }
}

/// Regularity exponent of the phase space for one of the two flow regimes,
/// validated against the admissible open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevScale {
    exponent: f64,
    lo: f64,
    hi: f64,
}

impl SobolevScale {
    /// Phase-space exponent for the flow without surface tension: `r` in (3/2, 2).
    pub fn no_surface_tension(r: f64) -> Result<Self, TorusError> {
        Self::in_interval(r, 1.5, 2.0)
    }

    /// Phase-space exponent for the flow with surface tension: `r` in (2, 3).
    pub fn surface_tension(r: f64) -> Result<Self, TorusError> {
        Self::in_interval(r, 2.0, 3.0)
    }

    fn in_interval(r: f64, lo: f64, hi: f64) -> Result<Self, TorusError> {
        if !(r.is_finite() && r > lo && r < hi) {
            return Err(TorusError::BadExponent { value: r, lo, hi });
        }
        Ok(Self { exponent: r, lo, hi })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}
