//! Uniform periodic grids on `[-L, L)`, sampled fields, spectral
//! differentiation and quadrature.
//!
//! The node set is `x_j = -L + j dx`, `j = 0..N`, so `-L` is a node and `+L`
//! is not. Mirror pairing `x <-> -x` maps node `j` to `(N - j) mod N`, which
//! makes parity exact at the grid level.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("N must be even")]
    OddPointCount,
    #[error("N must be at least 16, got {0}")]
    TooFewPoints(usize),
    #[error("half-length must be positive and finite, got {0}")]
    BadHalfLength(f64),
    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

struct GridInner {
    half_length: f64,
    dx: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform symmetric periodic grid. Cloning is cheap (shared storage).
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.inner.half_length)
            .field("n_points", &self.len())
            .field("dx", &self.inner.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.half_length == other.inner.half_length && self.len() == other.len())
    }
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self, GridError> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(GridError::BadHalfLength(half_length));
        }
        if !n_points.is_multiple_of(2) {
            return Err(GridError::OddPointCount);
        }
        if n_points < 16 {
            return Err(GridError::TooFewPoints(n_points));
        }
        let n = n_points;
        let dx = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|j| -half_length + j as f64 * dx).collect();
        let base = std::f64::consts::PI / half_length;
        let wavenumbers = (0..n)
            .map(|m| {
                let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                signed as f64 * base
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                half_length,
                dx,
                nodes,
                wavenumbers,
                forward,
                inverse,
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn len(&self) -> usize {
        self.inner.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    /// Periodic spectral frequencies for period `2L`; index `N/2` holds the
    /// Nyquist frequency `-N pi / (2L)`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Index of the node at `-x_j`.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        let n = self.len();
        (n - j) % n
    }

    /// Index of the node `x = 0`.
    pub fn origin(&self) -> usize {
        self.len() / 2
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.clone(),
            values: self.nodes().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn sample_complex(&self, f: impl Fn(f64) -> Complex64) -> ComplexField {
        ComplexField {
            grid: self.clone(),
            values: self.nodes().iter().map(|&x| f(x)).collect(),
            t: 0.0,
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn fft(&self, data: &mut [Complex64]) {
        self.inner.forward.process(data);
    }

    /// Inverse DFT in place, including the `1/N` normalization.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.inner.inverse.process(data);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Applies a real Fourier multiplier `m(k)` to `data` in place.
    pub fn apply_multiplier(&self, data: &mut [Complex64], multiplier: impl Fn(usize, f64) -> Complex64) {
        self.fft(data);
        for (m, (v, &k)) in data.iter_mut().zip(self.wavenumbers()).enumerate() {
            *v *= multiplier(m, k);
        }
        self.ifft(data);
    }

    /// `d/dx` through the multiplier `i k`; the Nyquist mode is zeroed so
    /// that real input gives real output.
    pub fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = values.to_vec();
        let nyquist = self.len() / 2;
        self.apply_multiplier(&mut out, |m, k| {
            if m == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        });
        out
    }

    /// Derivative of a real sampled function.
    pub fn derivative_real(&self, values: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&c).into_iter().map(|z| z.re).collect()
    }

    /// Periodic rectangle rule `dx * sum f(x_j)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.dx() * values.iter().sum::<f64>()
    }

    pub fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        values.iter().sum::<Complex64>() * self.dx()
    }

    /// `dx * sum_j f(x_j)` for a closure evaluated at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.dx() * self.nodes().iter().enumerate().map(|(j, &x)| f(j, x)).sum::<f64>()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<(), GridError> {
        if len != self.len() {
            return Err(GridError::LengthMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self, GridError> {
        grid.check_len(values.len())?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// `max_j |f(x_j) - f(-x_j)| / max(1, max |f|)`.
    pub fn evenness_defect(&self) -> f64 {
        let g = &self.grid;
        let scale = self.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let defect = (0..g.len())
            .map(|j| (self.values[j] - self.values[g.mirror(j)]).abs())
            .fold(0.0_f64, f64::max);
        defect / scale
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            t: 0.0,
        }
    }
}

/// Complex samples of `u(t, .)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl ComplexField {
    pub fn new(grid: &Grid, values: Vec<Complex64>, t: f64) -> Result<Self, GridError> {
        grid.check_len(values.len())?;
        Ok(Self {
            grid: grid.clone(),
            values,
            t,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self {
            grid: self.grid.clone(),
            values,
            t: self.t,
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn real_part(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.re).collect(),
        }
    }

    pub fn imag_part(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn integral(&self) -> Complex64 {
        self.grid.integrate_complex(&self.values)
    }
}

pub fn spectral_derivative(f: &ComplexField) -> ComplexField {
    f.with_values(f.grid.derivative(&f.values))
}

pub fn quadrature(f: &RealField) -> f64 {
    f.integral()
}

pub fn quadrature_complex(f: &ComplexField) -> Complex64 {
    f.integral()
}

/// Odd part `(f(x) - f(-x)) / 2` using the node pairing.
pub fn antisymmetrize(f: &ComplexField) -> ComplexField {
    let g = &f.grid;
    let values = (0..g.len())
        .map(|j| (f.values[j] - f.values[g.mirror(j)]) * 0.5)
        .collect();
    f.with_values(values)
}

/// Even part `(f(x) + f(-x)) / 2`.
pub fn symmetrize(f: &ComplexField) -> ComplexField {
    let g = &f.grid;
    let values = (0..g.len())
        .map(|j| (f.values[j] + f.values[g.mirror(j)]) * 0.5)
        .collect();
    f.with_values(values)
}

/// `max_j |f(x_j) + f(-x_j)| / max(1, max_j |f(x_j)|)`.
pub fn oddness_defect(f: &ComplexField) -> f64 {
    let g = &f.grid;
    let scale = f.max_abs().max(1.0);
    let defect = (0..g.len())
        .map(|j| (f.values[j] + f.values[g.mirror(j)]).norm())
        .fold(0.0_f64, f64::max);
    defect / scale
}
