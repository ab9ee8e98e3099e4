//! Principal-value kernels of the periodic interface evolutions.
//!
//! Both flow regimes drive the interface graph `f` through convolution-type
//! integrals over the relative coordinate `s` with the half-angle geometry
//!
//! ```text
//! t = tan(s/2),   T = tanh((f(x) - f(x-s)) / 2),
//! ```
//!
//! every integrand regular except for an odd `1/s`-type pole at `s = 0` that
//! the symmetric quadrature rule cancels by construction. The rule places `M`
//! midpoints `s_j = -π + (j + 1/2) 2π/M`; none of them hits the pole, mirrored
//! nodes are bitwise negations of each other, and the induced approximation of
//! the cotangent transform is exact for wavenumbers below `M` (up to roundoff).
//!
//! Off-grid samples `f(x_i - s_j)` come from the trigonometric interpolant.
//! `x_i - s_j` lands on a small number of rotations of the original grid, one
//! per residue class of `n (M - 2j - 1) mod 2M`, so the whole table costs a
//! handful of phase-shifted inverse transforms instead of `n·M` pointwise
//! evaluations.

use crate::torus::{FourierCoeffs, GridFunction, TorusError};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by quadrature and kernel evaluation.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("quadrature node count {0} must be an even number of at least 2")]
    BadRule(usize),
    #[error("integrand evaluated to a non-finite value at node s = {node}")]
    BadIntegrand { node: f64 },
    #[error("vorticity system is numerically degenerate (1-norm condition estimate {cond:.3e})")]
    DegenerateSystem { cond: f64 },
    #[error("parameter {name} = {value} is out of range: {requirement}")]
    BadParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error(transparent)]
    Torus(#[from] TorusError),
}

fn require(ok: bool, name: &'static str, value: f64, requirement: &'static str) -> Result<(), KernelError> {
    if ok {
        Ok(())
    } else {
        Err(KernelError::BadParameter { name, value, requirement })
    }
}

/// Physical parameters of the equal-viscosity flow without surface tension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuskatParamsNoSt {
    /// Permeability of the porous medium, positive.
    pub permeability: f64,
    /// Common viscosity of both fluids, positive.
    pub viscosity: f64,
    /// Density jump (lower minus upper fluid); positive means heavy below.
    pub delta_rho: f64,
}

impl MuskatParamsNoSt {
    pub fn new(permeability: f64, viscosity: f64, delta_rho: f64) -> Result<Self, KernelError> {
        require(permeability.is_finite() && permeability > 0.0, "permeability", permeability, "must be positive")?;
        require(viscosity.is_finite() && viscosity > 0.0, "viscosity", viscosity, "must be positive")?;
        require(delta_rho.is_finite(), "delta_rho", delta_rho, "must be finite")?;
        Ok(Self { permeability, viscosity, delta_rho })
    }

    /// Prefactor of the principal-value integrals.
    fn pv_prefactor(&self) -> f64 {
        self.permeability * self.delta_rho / (4.0 * PI * self.viscosity)
    }

    /// Eigenvalue of the linearization at the flat interface on wavenumber `m`.
    pub fn flat_eigenvalue(&self, m: f64) -> f64 {
        -self.permeability * self.delta_rho * m / (2.0 * self.viscosity)
    }
}

/// Physical parameters of the flow with surface tension and a viscosity jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuskatParamsSt {
    /// Permeability of the porous medium, positive.
    pub permeability: f64,
    /// Viscosity of the lower fluid, positive.
    pub mu_minus: f64,
    /// Viscosity of the upper fluid, positive.
    pub mu_plus: f64,
    /// Surface tension coefficient, positive.
    pub surface_tension: f64,
    /// Effective buoyancy slope: gravity term plus the viscosity-jump pumping
    /// term. Its sign against `-surface_tension` decides stability.
    pub theta: f64,
}

impl MuskatParamsSt {
    pub fn new(
        permeability: f64,
        mu_minus: f64,
        mu_plus: f64,
        surface_tension: f64,
        theta: f64,
    ) -> Result<Self, KernelError> {
        require(permeability.is_finite() && permeability > 0.0, "permeability", permeability, "must be positive")?;
        require(mu_minus.is_finite() && mu_minus > 0.0, "mu_minus", mu_minus, "must be positive")?;
        require(mu_plus.is_finite() && mu_plus > 0.0, "mu_plus", mu_plus, "must be positive")?;
        require(
            surface_tension.is_finite() && surface_tension > 0.0,
            "surface_tension",
            surface_tension,
            "must be positive",
        )?;
        require(theta.is_finite(), "theta", theta, "must be finite")?;
        Ok(Self { permeability, mu_minus, mu_plus, surface_tension, theta })
    }

    pub fn mu_sum(&self) -> f64 {
        self.mu_minus + self.mu_plus
    }

    /// Relative viscosity jump `(mu_minus - mu_plus) / (mu_minus + mu_plus)`,
    /// guaranteed inside `(-1, 1)` by the positivity of both viscosities.
    pub fn viscosity_contrast(&self) -> f64 {
        (self.mu_minus - self.mu_plus) / self.mu_sum()
    }

    /// Eigenvalue of the linearization at the flat interface on wavenumber `m`.
    pub fn flat_eigenvalue(&self, m: f64) -> f64 {
        -(self.permeability / self.mu_sum()) * (self.surface_tension * m.powi(3) + self.theta * m)
    }
}

/// Symmetric midpoint rule for periodic principal-value integrals.
///
/// Invariants: even node count, nodes sorted ascending with `s_j` and
/// `s_{M-1-j}` bitwise negations, no node at the origin.
#[derive(Debug, Clone)]
pub struct PvRule {
    nodes: Vec<f64>,
    half_nodes: Vec<f64>,
}

impl PvRule {
    pub fn new(m: usize) -> Result<Self, KernelError> {
        if m < 2 || !m.is_multiple_of(2) {
            return Err(KernelError::BadRule(m));
        }
        let h = 2.0 * PI / m as f64;
        let half_nodes: Vec<f64> = (0..m / 2).map(|q| (q as f64 + 0.5) * h).collect();
        let mut nodes = Vec::with_capacity(m);
        for q in (0..m / 2).rev() {
            nodes.push(-half_nodes[q]);
        }
        nodes.extend_from_slice(&half_nodes);
        Ok(Self { nodes, half_nodes })
    }

    /// All quadrature nodes, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight `2π / M`.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }
}

/// Principal-value integral of `g` over one period, realized as the midpoint
/// sum over mirrored node pairs so that odd singular parts cancel exactly.
pub fn pv_integrate(rule: &PvRule, g: impl Fn(f64) -> f64) -> Result<f64, KernelError> {
    let mut acc = 0.0;
    for &s in &rule.half_nodes {
        let plus = g(s);
        if !plus.is_finite() {
            return Err(KernelError::BadIntegrand { node: s });
        }
        let minus = g(-s);
        if !minus.is_finite() {
            return Err(KernelError::BadIntegrand { node: -s });
        }
        acc += plus + minus;
    }
    Ok(acc * rule.weight())
}

/// Exact decomposition of the interpolation targets `x_i - s_j` into an integer
/// grid rotation plus one of a few fractional shifts.
///
/// With `h = 2π/n`, the offset `-s_j` equals `(o_j + rem_j / (2M)) h` where
/// `num_j = n (M - 2j - 1)`, `o_j = num_j div 2M` and `rem_j = num_j mod 2M`
/// are exact integers. Nodes sharing `rem_j` share one rotated grid.
struct ShiftPlan {
    n: usize,
    class_of: Vec<u32>,
    offset_of: Vec<u32>,
    class_delta: Vec<f64>,
}

impl ShiftPlan {
    fn new(n: usize, m: usize) -> Self {
        let den = 2 * m as i64;
        let h = 2.0 * PI / n as f64;
        let mut classes: BTreeMap<i64, u32> = BTreeMap::new();
        let mut class_of = Vec::with_capacity(m);
        let mut offset_of = Vec::with_capacity(m);
        let mut class_delta = Vec::new();
        for j in 0..m as i64 {
            let num = n as i64 * (m as i64 - 2 * j - 1);
            let off = num.div_euclid(den);
            let rem = num.rem_euclid(den);
            let next = classes.len() as u32;
            let class = *classes.entry(rem).or_insert_with(|| {
                class_delta.push(rem as f64 / den as f64 * h);
                next
            });
            class_of.push(class);
            offset_of.push(off.rem_euclid(n as i64) as u32);
        }
        Self { n, class_of, offset_of, class_delta }
    }

    /// Tabulates the interpolant of `c` on every rotated grid the plan needs.
    fn tabulate(&self, c: &FourierCoeffs) -> ShiftedField {
        let rows = self
            .class_delta
            .iter()
            .map(|&delta| c.eval_shifted_grid(delta))
            .collect();
        ShiftedField { rows }
    }
}

/// Interpolated samples `f(x_i - s_j)`, stored per fractional-shift class of
/// the plan that produced them.
struct ShiftedField {
    rows: Vec<Vec<f64>>,
}

impl ShiftedField {
    #[inline]
    fn value(&self, plan: &ShiftPlan, i: usize, j: usize) -> f64 {
        let mut idx = i + plan.offset_of[j] as usize;
        if idx >= plan.n {
            idx -= plan.n;
        }
        self.rows[plan.class_of[j] as usize][idx]
    }
}

fn node_tangents(rule: &PvRule) -> Vec<f64> {
    rule.nodes().iter().map(|s| (0.5 * s).tan()).collect()
}

/// Right-hand side of the evolution without surface tension.
///
/// For each grid point the quadrature accumulates the two principal-value
/// integrals driven by the slopes of `f`, using the half-angle kernel with the
/// common denominator `t² + T²`.
pub fn pe1_rhs(
    f: &GridFunction,
    params: &MuskatParamsNoSt,
    rule: &PvRule,
) -> Result<GridFunction, KernelError> {
    let n = f.len();
    let m = rule.len();
    let plan = ShiftPlan::new(n, m);
    let coeffs = f.to_coeffs();
    let slope_coeffs = coeffs.derivative(1);
    let f_off = plan.tabulate(&coeffs);
    let slope_off = plan.tabulate(&slope_coeffs);
    let slope = slope_coeffs.to_grid();
    let tans = node_tangents(rule);
    let scale = -params.pv_prefactor() * rule.weight();

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = f.values()[i];
            let mut drift = 0.0;
            let mut transport = 0.0;
            for (j, &t) in tans.iter().enumerate() {
                let fo = f_off.value(&plan, i, j);
                let so = slope_off.value(&plan, i, j);
                let th = (0.5 * (fi - fo)).tanh();
                let den = t * t + th * th;
                debug_assert!(den > 0.0);
                transport += so * th * (1.0 + t * t) / den;
                drift += so * t * (1.0 - th * th) / den;
            }
            scale * (slope.values()[i] * transport + drift)
        })
        .collect();
    Ok(GridFunction::new(values)?)
}

/// Frozen-coefficient state of the quasilinear form `Φ(f)[·]`: every table that
/// depends on `f` alone, reusable across many arguments `h`.
struct QuasilinearWorkspace {
    n: usize,
    m: usize,
    plan: ShiftPlan,
    f_slope_off: ShiftedField,
    /// tanh((f(x_i) - f(x_i - s_j)) / 2), row-major `i * m + j`.
    th: Vec<f64>,
    tans: Vec<f64>,
    scale: f64,
}

impl QuasilinearWorkspace {
    fn new(f: &GridFunction, params: &MuskatParamsNoSt, rule: &PvRule) -> Self {
        let n = f.len();
        let m = rule.len();
        let plan = ShiftPlan::new(n, m);
        let f_coeffs = f.to_coeffs();
        let f_off = plan.tabulate(&f_coeffs);
        let f_slope_off = plan.tabulate(&f_coeffs.derivative(1));
        let tans = node_tangents(rule);
        let mut th = vec![0.0; n * m];
        for i in 0..n {
            let fi = f.values()[i];
            for j in 0..m {
                th[i * m + j] = (0.5 * (fi - f_off.value(&plan, i, j))).tanh();
            }
        }
        let scale = params.pv_prefactor() * rule.weight();
        Self { n, m, plan, f_slope_off, th, tans, scale }
    }

    fn apply(&self, h: &GridFunction) -> GridFunction {
        let h_slope_coeffs = h.to_coeffs().derivative(1);
        let h_slope_off = self.plan.tabulate(&h_slope_coeffs);
        let h_slope = h_slope_coeffs.to_grid();
        let values: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map(|i| self.apply_row(i, &h_slope, &h_slope_off))
            .collect();
        GridFunction::from_values_unchecked(values)
    }

    fn apply_row(&self, i: usize, h_slope: &GridFunction, h_slope_off: &ShiftedField) -> f64 {
        let hxi = h_slope.values()[i];
        let mut acc = 0.0;
        for j in 0..self.m {
            let t = self.tans[j];
            let fso = self.f_slope_off.value(&self.plan, i, j);
            let hso = h_slope_off.value(&self.plan, i, j);
            let th = self.th[i * self.m + j];
            let den = t * t + th * th;
            debug_assert!(den > 0.0);
            acc += (-(hxi - hso) * t
                + hxi * (fso * th + t)
                + hxi * fso * th * t * t
                - hso * th * th * t)
                / den;
        }
        self.scale * acc
    }
}

/// Quasilinear form of the surface-tension-free evolution: the linear-in-`h`
/// operator `Φ(f)[h]` whose diagonal realizes the flow, `Φ(f)[f] = -pe1_rhs(f)`.
pub fn phi1_apply(
    f: &GridFunction,
    h: &GridFunction,
    params: &MuskatParamsNoSt,
    rule: &PvRule,
) -> Result<GridFunction, KernelError> {
    let ws = QuasilinearWorkspace::new(f, params, rule);
    let out = ws.apply(h);
    if let Some(i) = out.values().iter().position(|v| !v.is_finite()) {
        return Err(KernelError::Torus(TorusError::NonFiniteSample(i)));
    }
    Ok(out)
}

/// Dense grid-basis matrix of `h ↦ Φ(f)[h]`, column by column through the
/// shared frozen-coefficient workspace. `matrix · h` matches [`phi1_apply`]
/// up to roundoff.
pub fn phi1_matrix(
    f: &GridFunction,
    params: &MuskatParamsNoSt,
    rule: &PvRule,
) -> Result<DMatrix<f64>, KernelError> {
    let n = f.len();
    let ws = QuasilinearWorkspace::new(f, params, rule);
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut unit = vec![0.0; n];
            unit[l] = 1.0;
            ws.apply(&GridFunction::from_values_unchecked(unit)).into_values()
        })
        .collect();
    let mat = DMatrix::from_fn(n, n, |i, l| columns[l][i]);
    if mat.iter().all(|v| v.is_finite()) {
        Ok(mat)
    } else {
        Err(KernelError::BadIntegrand { node: f64::NAN })
    }
}

/// Which of the two vorticity kernels a contraction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VorticityKernel {
    /// Feedback of the vorticity on itself through the interface geometry.
    Feedback,
    /// Transfer from vorticity to normal interface velocity.
    Velocity,
}

#[inline]
fn kernel_value(which: VorticityKernel, slope_i: f64, t: f64, th: f64) -> f64 {
    let den = t * t + th * th;
    debug_assert!(den > 0.0);
    match which {
        VorticityKernel::Feedback => (slope_i * t * (1.0 - th * th) - (1.0 + t * t) * th) / den,
        VorticityKernel::Velocity => (slope_i * (1.0 + t * t) * th + t * (1.0 - th * th)) / den,
    }
}

fn pv_contract(
    f: &GridFunction,
    density: &GridFunction,
    rule: &PvRule,
    which: VorticityKernel,
) -> Result<GridFunction, KernelError> {
    let n = f.len();
    let m = rule.len();
    let plan = ShiftPlan::new(n, m);
    let f_coeffs = f.to_coeffs();
    let f_off = plan.tabulate(&f_coeffs);
    let density_off = plan.tabulate(&density.to_coeffs());
    let slope = f_coeffs.derivative(1).to_grid();
    let tans = node_tangents(rule);
    let scale = 1.0 / m as f64;

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = f.values()[i];
            let si = slope.values()[i];
            let mut acc = 0.0;
            for (j, &t) in tans.iter().enumerate() {
                let th = (0.5 * (fi - f_off.value(&plan, i, j))).tanh();
                acc += kernel_value(which, si, t, th) * density_off.value(&plan, i, j);
            }
            scale * acc
        })
        .collect();
    Ok(GridFunction::new(values)?)
}

/// Geometry-weighted singular operator acting on a vorticity density:
/// `(1/2π) PV ∫ density(x-s) · K_feedback(x, s) ds`.
pub fn op_a_apply(
    f: &GridFunction,
    density: &GridFunction,
    rule: &PvRule,
) -> Result<GridFunction, KernelError> {
    pv_contract(f, density, rule, VorticityKernel::Feedback)
}

/// Vorticity-to-velocity transfer operator:
/// `(1/2π) PV ∫ density(x-s) · K_velocity(x, s) ds`. At the flat interface it
/// reduces to the periodic Hilbert transform.
pub fn op_b_apply(
    f: &GridFunction,
    density: &GridFunction,
    rule: &PvRule,
) -> Result<GridFunction, KernelError> {
    pv_contract(f, density, rule, VorticityKernel::Velocity)
}

/// Interpolation stencil `ψ(u) = sin(n u / 2) cot(u / 2) / n`, the cardinal
/// function of the even-size trigonometric interpolant with cosine Nyquist.
fn stencil(n: usize, u: f64) -> f64 {
    if u.abs() < 1e-14 {
        return 1.0;
    }
    let half = 0.5 * u;
    (0.5 * n as f64 * u).sin() * half.cos() / (half.sin() * n as f64)
}

/// Dense matrix of [`op_a_apply`] in the grid basis, assembled through the same
/// quadrature rule and interpolation stencil so that `matrix · q` reproduces
/// `op_a_apply(f, q)` up to roundoff.
pub fn op_a_matrix(f: &GridFunction, rule: &PvRule) -> Result<DMatrix<f64>, KernelError> {
    let n = f.len();
    let m = rule.len();
    let plan = ShiftPlan::new(n, m);
    let f_coeffs = f.to_coeffs();
    let f_off = plan.tabulate(&f_coeffs);
    let slope = f_coeffs.derivative(1).to_grid();
    let tans = node_tangents(rule);
    let h = 2.0 * PI / n as f64;
    let scale = 1.0 / m as f64;

    // stencil_rows[r][d] = ψ(x_d + δ_r)
    let stencil_rows: Vec<Vec<f64>> = plan
        .class_delta
        .iter()
        .map(|&delta| (0..n).map(|d| stencil(n, d as f64 * h + delta)).collect())
        .collect();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = f.values()[i];
            let si = slope.values()[i];
            let mut row = vec![0.0; n];
            for j in 0..m {
                let th = (0.5 * (fi - f_off.value(&plan, i, j))).tanh();
                let k = kernel_value(VorticityKernel::Feedback, si, tans[j], th) * scale;
                let base = {
                    let b = i + plan.offset_of[j] as usize;
                    if b >= n {
                        b - n
                    } else {
                        b
                    }
                };
                let psi = &stencil_rows[plan.class_of[j] as usize];
                for (l, slot) in row.iter_mut().enumerate() {
                    let d = if base >= l { base - l } else { base + n - l };
                    *slot += k * psi[d];
                }
            }
            row
        })
        .collect();

    Ok(DMatrix::from_fn(n, n, |i, l| rows[i][l]))
}

/// 1-norm condition estimate of a square matrix: exact `‖A‖₁` times a Hager
/// lower estimate of `‖A⁻¹‖₁` obtained from a handful of LU solves.
pub(crate) fn condition_estimate(mat: &DMatrix<f64>) -> f64 {
    let n = mat.nrows();
    let norm_a = (0..n)
        .map(|c| mat.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let lu = mat.clone().lu();
    let lu_t = mat.transpose().lu();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0f64;
    for _ in 0..5 {
        let y = match lu.solve(&x) {
            Some(y) => y,
            None => return f64::INFINITY,
        };
        estimate = y.iter().map(|v| v.abs()).sum();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = match lu_t.solve(&xi) {
            Some(z) => z,
            None => return f64::INFINITY,
        };
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[jmax] = 1.0;
    }
    norm_a * estimate
}

/// Whether pointwise nonlinearities are evaluated with 3/2 zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    #[default]
    On,
    Off,
}

impl Dealias {
    pub fn from_flag(on: bool) -> Self {
        if on {
            Dealias::On
        } else {
            Dealias::Off
        }
    }
}

const CONDITION_LIMIT: f64 = 1e12;

/// Solves the vorticity balance `(I + a_mu A(f)) ω = (2k/(μ₋+μ₊)) ∂ₓ(σ κ(f) - Θ f)`.
///
/// With equal viscosities (`a_mu = 0`) the right-hand side is returned as is;
/// otherwise the dense operator matrix is assembled and LU-solved, guarded by a
/// condition estimate.
pub fn solve_omega_bar(
    f: &GridFunction,
    params: &MuskatParamsSt,
    rule: &PvRule,
    dealias: Dealias,
) -> Result<GridFunction, KernelError> {
    let kappa = match dealias {
        Dealias::On => f.curvature_dealiased(),
        Dealias::Off => f.curvature(),
    };
    let driving = kappa
        .scaled(params.surface_tension)
        .add_scaled(f, -params.theta);
    let b = driving
        .derivative(1)
        .scaled(2.0 * params.permeability / params.mu_sum());
    let a_mu = params.viscosity_contrast();
    if a_mu == 0.0 {
        return Ok(b);
    }
    let mut system = op_a_matrix(f, rule)?;
    system *= a_mu;
    for i in 0..system.nrows() {
        system[(i, i)] += 1.0;
    }
    let cond = condition_estimate(&system);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(KernelError::DegenerateSystem { cond });
    }
    let rhs = DVector::from_column_slice(b.values());
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(KernelError::DegenerateSystem { cond: f64::INFINITY })?;
    Ok(GridFunction::new(solution.iter().copied().collect())?)
}

/// Right-hand side of the evolution with surface tension: solve the vorticity
/// balance, then transfer the density to normal velocity.
pub fn pe2_rhs(
    f: &GridFunction,
    params: &MuskatParamsSt,
    rule: &PvRule,
    dealias: Dealias,
) -> Result<GridFunction, KernelError> {
    let omega = solve_omega_bar(f, params, rule, dealias)?;
    Ok(op_b_apply(f, &omega, rule)?.scaled(0.5))
}

/// Bundled surface-tension-free problem: parameters plus quadrature rule.
#[derive(Debug, Clone)]
pub struct Pe1System {
    pub params: MuskatParamsNoSt,
    pub rule: PvRule,
}

impl Pe1System {
    pub fn rhs(&self, f: &GridFunction) -> Result<GridFunction, KernelError> {
        pe1_rhs(f, &self.params, &self.rule)
    }
}

/// Bundled surface-tension problem: parameters, quadrature rule, dealiasing.
#[derive(Debug, Clone)]
pub struct Pe2System {
    pub params: MuskatParamsSt,
    pub rule: PvRule,
    pub dealias: Dealias,
}

impl Pe2System {
    pub fn rhs(&self, f: &GridFunction) -> Result<GridFunction, KernelError> {
        pe2_rhs(f, &self.params, &self.rule, self.dealias)
    }
}
