//! Strang-split time stepping for `i u_t + u_xx = g(u)`.
//!
//! One step is `N(dt/2) L(dt) N(dt/2)`: `N` multiplies by the pure phase
//! `exp(-i P(|u|^2) dt/2)`, which leaves `|u|` unchanged and is therefore the
//! exact flow of `i u_t = P(|u|^2) u`; `L` is the exact Fourier multiplier
//! `exp(-i k^2 dt)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{ComplexField, Grid};
use crate::models::{ModelError, ModelSpec, PreparedModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("blow-up or instability detected at t = {t}")]
    BlowUp { t: f64 },
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("monitor failed at t = {t}: {reason}")]
    Monitor { t: f64, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Absorbing layer `u <- u exp(-gamma(x) dt)` near `x = +-L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

impl Sponge {
    /// `gamma(x) = strength * s(r)`, `r = (|x| - (L - width)) / width`, with
    /// `s = 0` for `r <= 0`, `sin^2(pi r)` on `(0, 1/2)` and `1` beyond.
    pub fn profile(&self, grid: &Grid) -> Vec<f64> {
        let l = grid.half_length();
        grid.nodes()
            .iter()
            .map(|&x| {
                if self.width <= 0.0 {
                    return 0.0;
                }
                let r = (x.abs() - (l - self.width)) / self.width;
                let s = if r <= 0.0 {
                    0.0
                } else if r < 0.5 {
                    (std::f64::consts::PI * r).sin().powi(2)
                } else {
                    1.0
                };
                self.strength * s
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub sponge: Option<Sponge>,
    /// 2/3-rule spectral filter after each linear substep.
    pub dealias: bool,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_end: f64, sample_every: usize) -> Self {
        Self {
            dt,
            t_end,
            sample_every,
            sponge: None,
            dealias: false,
        }
    }

    pub fn with_sponge(mut self, sponge: Sponge) -> Self {
        self.sponge = Some(sponge);
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, grid: &Grid) -> Result<(), EvolveError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EvolveError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(EvolveError::InvalidConfig(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        let n = self.t_end / self.dt;
        if (n - n.round()).abs() > 1e-6 {
            return Err(EvolveError::InvalidConfig(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(EvolveError::InvalidConfig("sample_every must be positive".into()));
        }
        if let Some(s) = self.sponge {
            if !(s.width > 0.0 && s.width < grid.half_length() / 4.0) {
                return Err(EvolveError::InvalidConfig(format!(
                    "sponge width {} must lie in (0, L/4 = {})",
                    s.width,
                    grid.half_length() / 4.0
                )));
            }
            if !(s.strength >= 0.0) {
                return Err(EvolveError::InvalidConfig("sponge strength must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Precomputed propagator for a fixed model, grid and step.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: PreparedModel,
    dt: f64,
    linear: Vec<Complex64>,
    damping: Option<Vec<f64>>,
}

impl Stepper {
    pub fn new(model: PreparedModel, dt: f64, sponge: Option<Sponge>, dealias: bool) -> Self {
        let grid = model.grid().clone();
        let n = grid.len();
        let cutoff = n / 3;
        let linear = grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(m, &k)| {
                let signed = if m <= n / 2 { m } else { n - m };
                if dealias && signed > cutoff {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -k * k * dt).exp()
                }
            })
            .collect();
        let damping = sponge
            .filter(|s| s.strength > 0.0)
            .map(|s| s.profile(&grid).into_iter().map(|g| (-g * dt).exp()).collect());
        Self {
            model,
            dt,
            linear,
            damping,
        }
    }

    pub fn model(&self) -> &PreparedModel {
        &self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn nonlinear_half(&self, u: &mut [Complex64]) {
        let rho: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
        let p = self.model.multiplier(&rho);
        let h = 0.5 * self.dt;
        for (z, &m) in u.iter_mut().zip(&p) {
            *z *= Complex64::new(0.0, -m * h).exp();
        }
    }

    /// Advances `u` by one step in place.
    pub fn step(&self, u: &mut [Complex64]) {
        let grid = self.model.grid();
        self.nonlinear_half(u);
        grid.fft(u);
        for (z, l) in u.iter_mut().zip(&self.linear) {
            *z *= l;
        }
        grid.ifft(u);
        self.nonlinear_half(u);
        if let Some(d) = &self.damping {
            for (z, &f) in u.iter_mut().zip(d) {
                *z *= f;
            }
        }
    }
}

pub fn strang_step(u: &ComplexField, dt: f64, model: &ModelSpec) -> Result<ComplexField, EvolveError> {
    let stepper = Stepper::new(PreparedModel::new(model, &u.grid)?, dt, None, false);
    let mut values = u.values.clone();
    stepper.step(&mut values);
    let out = ComplexField {
        grid: u.grid.clone(),
        values,
        t: u.t + dt,
    };
    if !out.is_finite() {
        return Err(EvolveError::BlowUp { t: out.t });
    }
    Ok(out)
}

pub fn apply_sponge(u: &ComplexField, sponge: &Sponge, dt: f64) -> ComplexField {
    let gamma = sponge.profile(&u.grid);
    u.with_values(
        u.values
            .iter()
            .zip(&gamma)
            .map(|(z, &g)| z * (-g * dt).exp())
            .collect(),
    )
}

/// Receives the state at every sample point.
pub trait Observer {
    fn observe(&mut self, u: &ComplexField) -> Result<(), String>;
}

impl<F: FnMut(&ComplexField) -> Result<(), String>> Observer for F {
    fn observe(&mut self, u: &ComplexField) -> Result<(), String> {
        self(u)
    }
}

/// Stored samples of an evolution, strictly increasing in `t`.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<ComplexField>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&ComplexField> {
        self.samples.last()
    }
}

impl Observer for Trajectory {
    fn observe(&mut self, u: &ComplexField) -> Result<(), String> {
        if let Some(prev) = self.samples.last() {
            if u.t <= prev.t {
                return Err(format!("non-increasing sample time {} after {}", u.t, prev.t));
            }
        }
        self.samples.push(u.clone());
        Ok(())
    }
}

/// Outcome of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSummary {
    pub steps: usize,
    pub final_state: ComplexField,
}

/// Runs `cfg.steps()` Strang steps, calling `observer` at `t = 0`, every
/// `sample_every` steps and at the final step. On blow-up the observer keeps
/// whatever it recorded so far.
pub fn evolve(
    u0: &ComplexField,
    cfg: &EvolveConfig,
    model: &ModelSpec,
    observer: &mut dyn Observer,
) -> Result<EvolveSummary, EvolveError> {
    cfg.validate(&u0.grid)?;
    let prepared = PreparedModel::new(model, &u0.grid)?;
    let stepper = Stepper::new(prepared, cfg.dt, cfg.sponge, cfg.dealias);
    let t0 = u0.t;
    let mut u = u0.clone();
    observer
        .observe(&u)
        .map_err(|reason| EvolveError::Monitor { t: t0, reason })?;
    let steps = cfg.steps();
    for n in 1..=steps {
        stepper.step(&mut u.values);
        u.t = t0 + n as f64 * cfg.dt;
        if n % cfg.sample_every == 0 || n == steps {
            if !u.is_finite() {
                return Err(EvolveError::BlowUp { t: u.t });
            }
            observer
                .observe(&u)
                .map_err(|reason| EvolveError::Monitor { t: u.t, reason })?;
        }
    }
    if !u.is_finite() {
        return Err(EvolveError::BlowUp { t: u.t });
    }
    Ok(EvolveSummary { steps, final_state: u })
}

/// `(max |u|` over the outer band `|x| >= L - band`), the boundary
/// contamination measure.
pub fn boundary_amplitude(u: &ComplexField, band: f64) -> f64 {
    let l = u.grid.half_length();
    u.grid
        .nodes()
        .iter()
        .zip(&u.values)
        .filter(|(&x, _)| x.abs() >= l - band)
        .fold(0.0_f64, |m, (_, z)| m.max(z.norm()))
}
