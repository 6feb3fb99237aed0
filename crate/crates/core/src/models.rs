//! Right-hand sides `g(u)` of `i u_t + u_xx = g(u)`, the conserved
//! functionals, and the Hartree convolution `(|x|^{-a} * |u|^2)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{ComplexField, Grid, GridError, RealField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("nonlinearity needs at least one term")]
    NoTerms,
    #[error("exponent p = {0} outside (1, 5]")]
    BadExponent(f64),
    #[error("coefficient {0} is not finite")]
    BadCoefficient(f64),
    #[error("argument s = {0} must be nonnegative")]
    NegativeArgument(f64),
    #[error("coupling mu = {0} must be nonnegative")]
    NegativeCoupling(f64),
    #[error("potential is not even (defect {0:e})")]
    PotentialNotEven(f64),
    #[error("Hartree exponent a = {0} outside (0, 1)")]
    BadHartreeExponent(f64),
    #[error("Hartree sign sigma = {0} must be +1 or -1")]
    BadSign(f64),
    #[error("potential sampled on a different grid than the field")]
    GridMismatch,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `s^q` through exp-log with `s` clamped at zero; `q > 0` is assumed.
#[inline]
pub(crate) fn pow_clamped(s: f64, q: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (q * s.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

/// `f(s) = sum_j c_j s^{(p_j - 1)/2}` with antiderivative
/// `F(s) = sum_j c_j 2/(p_j + 1) s^{(p_j + 1)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    terms: Vec<PowerTerm>,
}

impl NonlinearitySpec {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self, ModelError> {
        if terms.is_empty() {
            return Err(ModelError::NoTerms);
        }
        for t in &terms {
            if !(t.exponent > 1.0 && t.exponent <= 5.0) {
                return Err(ModelError::BadExponent(t.exponent));
            }
            if !t.coeff.is_finite() {
                return Err(ModelError::BadCoefficient(t.coeff));
            }
        }
        Ok(Self { terms })
    }

    /// `c |u|^{p-1} u`; `c = -1` focusing, `c = +1` defocusing.
    pub fn pure_power(coeff: f64, exponent: f64) -> Result<Self, ModelError> {
        Self::new(vec![PowerTerm { coeff, exponent }])
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// True when every coefficient vanishes.
    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    /// Every term has a nonnegative coefficient.
    pub fn is_defocusing(&self) -> bool {
        self.terms.iter().all(|t| t.coeff >= 0.0)
    }

    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * pow_clamped(s, 0.5 * (t.exponent - 1.0)))
            .sum()
    }

    #[inline]
    pub fn antiderivative(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * 2.0 / (t.exponent + 1.0) * pow_clamped(s, 0.5 * (t.exponent + 1.0)))
            .sum()
    }
}

pub fn f_eval(nl: &NonlinearitySpec, s: f64) -> Result<f64, ModelError> {
    if s < 0.0 {
        return Err(ModelError::NegativeArgument(s));
    }
    Ok(nl.f(s))
}

pub fn antiderivative_eval(nl: &NonlinearitySpec, s: f64) -> Result<f64, ModelError> {
    if s < 0.0 {
        return Err(ModelError::NegativeArgument(s));
    }
    Ok(nl.antiderivative(s))
}

/// Closed-form even potentials that can be resampled on any grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialShape {
    /// `V(x) = amplitude * sech^power(x)`.
    SechPower { amplitude: f64, power: f64 },
}

impl PotentialShape {
    /// `(V(x), V'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            PotentialShape::SechPower { amplitude, power } => {
                // sech^n via exp to stay finite for large |x|
                let ax = x.abs();
                let sech = if ax > 700.0 { 0.0 } else { 1.0 / x.cosh() };
                let v = amplitude * pow_clamped(sech, power);
                (v, -power * v * x.tanh())
            }
        }
    }
}

/// `mu`, `V` and `V_x` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub mu: f64,
    pub v: RealField,
    pub v_x: RealField,
}

impl PotentialSpec {
    pub fn new(mu: f64, v: RealField, v_x: RealField) -> Result<Self, ModelError> {
        if !(mu >= 0.0) {
            return Err(ModelError::NegativeCoupling(mu));
        }
        if v.grid != v_x.grid {
            return Err(ModelError::GridMismatch);
        }
        let defect = v.evenness_defect();
        if defect > 1e-12 {
            return Err(ModelError::PotentialNotEven(defect));
        }
        Ok(Self { mu, v, v_x })
    }

    pub fn from_shape(grid: &Grid, mu: f64, shape: PotentialShape) -> Result<Self, ModelError> {
        let (v, v_x): (Vec<f64>, Vec<f64>) = grid.nodes().iter().map(|&x| shape.eval(x)).unzip();
        Self::new(mu, RealField::new(grid, v)?, RealField::new(grid, v_x)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.v.grid
    }

    /// `int (|V| + |V_x|) cosh(2x) dx` on the grid; infinite when the
    /// weighted integrand overflows.
    pub fn decay_certificate(&self) -> f64 {
        let g = self.grid();
        g.integrate_fn(|j, x| {
            let amp = self.v.values[j].abs() + self.v_x.values[j].abs();
            if amp == 0.0 {
                0.0
            } else {
                amp * (2.0 * x).cosh()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HartreeSpec {
    a: f64,
    sigma: f64,
}

impl HartreeSpec {
    pub fn new(a: f64, sigma: f64) -> Result<Self, ModelError> {
        if !(a > 0.0 && a < 1.0) {
            return Err(ModelError::BadHartreeExponent(a));
        }
        if sigma != 1.0 && sigma != -1.0 {
            return Err(ModelError::BadSign(sigma));
        }
        Ok(Self { a, sigma })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Semilinear(NonlinearitySpec),
    WithPotential(NonlinearitySpec, PotentialSpec),
    Hartree(HartreeSpec),
}

impl ModelSpec {
    pub fn nonlinearity(&self) -> Option<&NonlinearitySpec> {
        match self {
            ModelSpec::Semilinear(nl) | ModelSpec::WithPotential(nl, _) => Some(nl),
            ModelSpec::Hartree(_) => None,
        }
    }

    pub fn potential(&self) -> Option<&PotentialSpec> {
        match self {
            ModelSpec::WithPotential(_, p) => Some(p),
            _ => None,
        }
    }

    pub fn hartree(&self) -> Option<&HartreeSpec> {
        match self {
            ModelSpec::Hartree(h) => Some(h),
            _ => None,
        }
    }
}

/// Exact cell average of `|y|^{-a}` over `[d - dx/2, d + dx/2]`, `d >= 0`.
pub fn cell_averaged_kernel(d: f64, dx: f64, a: f64) -> f64 {
    let e = 1.0 - a;
    let half = 0.5 * dx;
    if d < half {
        // cell straddles the singularity
        ((half + d).powf(e) + (half - d).powf(e)) / (e * dx)
    } else {
        ((d + half).powf(e) - (d - half).powf(e)) / (e * dx)
    }
}

/// Circular convolution with the cell-averaged `|x|^{-a}` kernel on a grid.
#[derive(Debug, Clone)]
pub struct HartreeOperator {
    grid: Grid,
    a: f64,
    kernel: Vec<f64>,
    kernel_hat: Vec<Complex64>,
}

impl HartreeOperator {
    pub fn new(grid: &Grid, a: f64) -> Self {
        let n = grid.len();
        let dx = grid.dx();
        let kernel: Vec<f64> = (0..n)
            .map(|j| cell_averaged_kernel(j.min(n - j) as f64 * dx, dx, a))
            .collect();
        let mut kernel_hat: Vec<Complex64> = kernel.iter().map(|&k| Complex64::new(k * dx, 0.0)).collect();
        grid.fft(&mut kernel_hat);
        Self {
            grid: grid.clone(),
            a,
            kernel,
            kernel_hat,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Kernel value at circular offset `j`.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `(K * rho)(x_j) = dx sum_m K_{j-m} rho_m`, O(N log N).
    pub fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        self.grid.fft(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.grid.ifft(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Same sum evaluated directly, O(N^2).
    pub fn potential_direct(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let dx = self.grid.dx();
        (0..n)
            .map(|j| dx * (0..n).map(|m| self.kernel[(j + n - m) % n] * rho[m]).sum::<f64>())
            .collect()
    }
}

pub fn hartree_potential(u: &ComplexField, h: &HartreeSpec) -> RealField {
    let op = HartreeOperator::new(&u.grid, h.a());
    RealField {
        grid: u.grid.clone(),
        values: op.potential(&u.density()),
    }
}

/// Grid-bound form of a `ModelSpec`: potential samples and the Hartree
/// kernel are computed once.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    spec: ModelSpec,
    grid: Grid,
    hartree: Option<HartreeOperator>,
}

impl PreparedModel {
    pub fn new(spec: &ModelSpec, grid: &Grid) -> Result<Self, ModelError> {
        if let Some(p) = spec.potential() {
            if p.grid() != grid {
                return Err(ModelError::GridMismatch);
            }
        }
        let hartree = spec.hartree().map(|h| HartreeOperator::new(grid, h.a()));
        Ok(Self {
            spec: spec.clone(),
            grid: grid.clone(),
            hartree,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hartree_operator(&self) -> Option<&HartreeOperator> {
        self.hartree.as_ref()
    }

    /// Real multiplier `P` with `g(u) = P u`, computed from `rho = |u|^2`.
    pub fn multiplier(&self, rho: &[f64]) -> Vec<f64> {
        match &self.spec {
            ModelSpec::Semilinear(nl) => rho.iter().map(|&s| nl.f(s)).collect(),
            ModelSpec::WithPotential(nl, p) => rho
                .iter()
                .zip(&p.v.values)
                .map(|(&s, &v)| p.mu * v + nl.f(s))
                .collect(),
            ModelSpec::Hartree(h) => {
                let op = self.hartree.as_ref().expect("Hartree operator prepared");
                let mut w = op.potential(rho);
                for v in w.iter_mut() {
                    *v *= h.sigma();
                }
                w
            }
        }
    }

    pub fn apply_g(&self, u: &ComplexField) -> ComplexField {
        let p = self.multiplier(&u.density());
        u.with_values(u.values.iter().zip(&p).map(|(z, &m)| z * m).collect())
    }

    /// `G(u)`: `(mu/2) int V |u|^2 + (1/2) int F(|u|^2)`, or
    /// `(sigma/4) int (W * |u|^2) |u|^2`.
    pub fn potential_energy(&self, u: &ComplexField) -> f64 {
        let rho = u.density();
        let g = &self.grid;
        match &self.spec {
            ModelSpec::Semilinear(nl) => 0.5 * g.integrate_fn(|j, _| nl.antiderivative(rho[j])),
            ModelSpec::WithPotential(nl, p) => g.integrate_fn(|j, _| {
                0.5 * p.mu * p.v.values[j] * rho[j] + 0.5 * nl.antiderivative(rho[j])
            }),
            ModelSpec::Hartree(h) => {
                let w = self.hartree.as_ref().expect("Hartree operator prepared").potential(&rho);
                0.25 * h.sigma() * g.integrate_fn(|j, _| w[j] * rho[j])
            }
        }
    }

    pub fn energy(&self, u: &ComplexField) -> f64 {
        let ux = u.grid.derivative(&u.values);
        0.5 * u.grid.integrate_fn(|j, _| ux[j].norm_sqr()) + self.potential_energy(u)
    }
}

pub fn apply_g(u: &ComplexField, model: &ModelSpec) -> Result<ComplexField, ModelError> {
    Ok(PreparedModel::new(model, &u.grid)?.apply_g(u))
}

/// `M = int |u|^2`.
pub fn mass(u: &ComplexField) -> f64 {
    u.grid.integrate_fn(|j, _| u.values[j].norm_sqr())
}

/// `P = Im int u conj(u_x)`.
pub fn momentum(u: &ComplexField) -> f64 {
    let ux = u.grid.derivative(&u.values);
    u.grid.integrate_fn(|j, _| (u.values[j] * ux[j].conj()).im)
}

pub fn energy(u: &ComplexField, model: &ModelSpec) -> Result<f64, ModelError> {
    Ok(PreparedModel::new(model, &u.grid)?.energy(u))
}
