//! Negative spectrum of `-d^2/dx^2 + W` on `[-L, L]` with Dirichlet ends,
//! discretized by second-order finite differences.

use thiserror::Error;

use crate::grid::{Grid, RealField};
use crate::virial::simon_weight;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("need at least 4 interior points per half line, got {0}")]
    TooFewPoints(usize),
    #[error("half length must be positive, got {0}")]
    BadHalfLength(f64),
    #[error("potential is not finite at x = {0}")]
    NonFinitePotential(f64),
    #[error("sector restriction needs an even potential (defect {0:e})")]
    NotEven(f64),
    #[error("cosh-weighted decay condition violated on grid: weighted integral {0:e}")]
    WeightedIntegralDiverges(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Full,
    Odd,
    Even,
}

/// `W` sampled at `x_j = -L + j h`, `j = 0..=2M`, `h = L/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerProblem {
    half_length: f64,
    half_points: usize,
    potential: Vec<f64>,
    length_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub sector: Sector,
    pub negative_count: usize,
    /// Up to three smallest eigenvalues, ascending.
    pub lowest_eigenvalues: Vec<f64>,
    /// Smallest eigenvalue of the odd restriction.
    pub lowest_odd_eigenvalue: f64,
    pub warnings: Vec<String>,
}

/// Symmetric tridiagonal matrix, `diag` of length `n`, `off` of length `n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `shift`, from the signs of the
    /// pivots of `T - shift = L D L^T`.
    pub fn count_below(&self, shift: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = d - shift - if i == 0 { 0.0 } else { e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + shift.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection on `count_below`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl SchrodingerProblem {
    pub fn from_fn(half_length: f64, half_points: usize, w: impl Fn(f64) -> f64) -> Result<Self, SpectraError> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(SpectraError::BadHalfLength(half_length));
        }
        if half_points < 5 {
            return Err(SpectraError::TooFewPoints(half_points.saturating_sub(1)));
        }
        let h = half_length / half_points as f64;
        let potential: Vec<f64> = (0..=2 * half_points)
            .map(|j| w(-half_length + j as f64 * h))
            .collect();
        if let Some(j) = potential.iter().position(|v| !v.is_finite()) {
            return Err(SpectraError::NonFinitePotential(-half_length + j as f64 * h));
        }
        Ok(Self {
            half_length,
            half_points,
            potential,
            length_scale: None,
        })
    }

    /// Uses the periodic grid's nodes; the missing node `x = +L` reuses `W(-L)`.
    pub fn from_field(w: &RealField) -> Result<Self, SpectraError> {
        let n = w.grid.len();
        let mut potential = w.values.clone();
        potential.push(w.values[0]);
        if let Some(j) = potential.iter().position(|v| !v.is_finite()) {
            return Err(SpectraError::NonFinitePotential(w.grid.nodes()[j % n]));
        }
        Ok(Self {
            half_length: w.grid.half_length(),
            half_points: n / 2,
            potential,
            length_scale: None,
        })
    }

    /// Smallest feature size of `W`; resolution below 8 points per scale
    /// produces a warning.
    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = Some(scale);
        self
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.half_length / self.half_points as f64
    }

    pub fn evenness_defect(&self) -> f64 {
        let n = self.potential.len();
        let scale = self.potential.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        (0..n)
            .map(|j| (self.potential[j] - self.potential[n - 1 - j]).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn matrix(&self, sector: Sector) -> Result<Tridiagonal, SpectraError> {
        let h = self.spacing();
        let c = 1.0 / (h * h);
        let m = self.half_points;
        if sector != Sector::Full {
            let defect = self.evenness_defect();
            if defect > 1e-10 {
                return Err(SpectraError::NotEven(defect));
            }
        }
        let range = match sector {
            Sector::Full => 1..2 * m,
            Sector::Odd => m + 1..2 * m,
            Sector::Even => m..2 * m,
        };
        let diag: Vec<f64> = range.clone().map(|j| 2.0 * c + self.potential[j]).collect();
        let mut off = vec![-c; diag.len() - 1];
        if sector == Sector::Even {
            // ghost value v_{-1} = v_1 folds into row 0; rescaling v_0 by sqrt(2)
            // restores symmetry
            off[0] = -std::f64::consts::SQRT_2 * c;
        }
        Ok(Tridiagonal { diag, off })
    }

    fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(scale) = self.length_scale {
            let per = scale / self.spacing();
            if per < 8.0 {
                out.push(format!("grid too coarse: {per:.2} points per potential length scale"));
            }
        }
        out
    }
}

/// Count and lowest eigenvalues of one sector. The odd-sector minimum is
/// computed alongside whenever the potential is even.
pub fn negative_eigencount(prob: &SchrodingerProblem, sector: Sector) -> Result<EigenReport, SpectraError> {
    let t = prob.matrix(sector)?;
    let negative_count = t.count_below(0.0);
    let k = 3.min(t.len());
    let lowest_eigenvalues: Vec<f64> = (0..k).map(|i| t.eigenvalue(i)).collect();
    let lowest_odd_eigenvalue = match sector {
        Sector::Odd => lowest_eigenvalues[0],
        _ => match prob.matrix(Sector::Odd) {
            Ok(odd) => odd.eigenvalue(0),
            Err(_) => f64::NAN,
        },
    };
    Ok(EigenReport {
        sector,
        negative_count,
        lowest_eigenvalues,
        lowest_odd_eigenvalue,
        warnings: prob.warnings(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexFormula {
    /// `1/2 sqrt(8 gamma nu a^2 / h^2 + 1) - 1/2`
    pub bound: f64,
    /// Largest integer strictly below `bound`.
    pub raw: i64,
    /// `max(raw, 0)`
    pub count: usize,
}

/// Bound-state index of `-nu d^2/dx^2 - gamma sech^2(x/a)`-type wells as
/// the largest integer `N < 1/2 sqrt(8 gamma nu a^2 h^-2 + 1) - 1/2`.
pub fn index_formula(gamma: f64, nu: f64, a: f64, h: f64) -> IndexFormula {
    let bound = 0.5 * (8.0 * gamma * nu * a * a / (h * h) + 1.0).sqrt() - 0.5;
    let raw = bound.ceil() as i64 - 1;
    IndexFormula {
        bound,
        raw,
        count: raw.max(0) as usize,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimonWeight {
    pub v0: RealField,
    /// `int V_0`
    pub direct: f64,
    /// `int cosh(2x/lambda) V`
    pub via_cosh: f64,
    /// `int (1 + x^2) |V_0|`
    pub moment: f64,
    /// `int |V_x| (lambda/2) |sinh(2x/lambda)|` over the nodes where `V_0` was
    /// zeroed because the factor overflowed.
    pub truncated_tail: f64,
}

const OVERFLOW_GUARD: f64 = 1e150;

/// `V_0 = -V_x phi/phi_x` and its integral by two routes.
pub fn simon_v0(v: &RealField, v_x: &RealField, lambda: f64) -> Result<SimonWeight, SpectraError> {
    let g: &Grid = &v.grid;
    let v0 = simon_weight(v_x, lambda);
    let direct = v0.integral();
    let via_cosh = g.integrate_fn(|j, x| {
        let val = v.values[j];
        if val == 0.0 {
            0.0
        } else {
            val * (2.0 * x / lambda).cosh()
        }
    });
    let moment = g.integrate_fn(|j, x| (1.0 + x * x) * v0.values[j].abs());
    let truncated_tail = g.integrate_fn(|j, x| {
        let d = v_x.values[j].abs();
        if d != 0.0 && v0.values[j] == 0.0 && x != 0.0 {
            // (lambda/2) sinh(2|x|/lambda) ~ (lambda/4) e^{2|x|/lambda} in log form
            (d.ln() + 2.0 * x.abs() / lambda + (0.25 * lambda).ln()).exp()
        } else {
            0.0
        }
    });
    for value in [direct, via_cosh, moment] {
        if !value.is_finite() || value.abs() > OVERFLOW_GUARD {
            return Err(SpectraError::WeightedIntegralDiverges(value));
        }
    }
    Ok(SimonWeight {
        v0,
        direct,
        via_cosh,
        moment,
        truncated_tail,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimonRow {
    pub mu: f64,
    pub integral_v0: f64,
    pub full_count: usize,
    pub odd_count: usize,
    pub even_count: usize,
    pub lowest: f64,
    /// Count predicted from the sign of `int V_0`.
    pub expected_full: usize,
    pub pass: bool,
}

/// Eigencounts of `-d^2/dx^2 + mu V_0` for each `mu`.
pub fn simon_check(v: &RealField, v_x: &RealField, lambda: f64, mus: &[f64]) -> Result<Vec<SimonRow>, SpectraError> {
    let sw = simon_v0(v, v_x, lambda)?;
    let nonzero = sw.v0.values.iter().any(|&x| x != 0.0);
    let expected_full = usize::from(nonzero && sw.direct <= 0.0);
    mus.iter()
        .map(|&mu| {
            let scaled = RealField {
                grid: sw.v0.grid.clone(),
                values: sw.v0.values.iter().map(|x| mu * x).collect(),
            };
            let prob = SchrodingerProblem::from_field(&scaled)?;
            let full = negative_eigencount(&prob, Sector::Full)?;
            let odd = prob.matrix(Sector::Odd)?.count_below(0.0);
            let even = prob.matrix(Sector::Even)?.count_below(0.0);
            Ok(SimonRow {
                mu,
                integral_v0: sw.direct,
                full_count: full.negative_count,
                odd_count: odd,
                even_count: even,
                lowest: full.lowest_eigenvalues[0],
                expected_full,
                pass: full.negative_count == expected_full && odd == 0,
            })
        })
        .collect()
}
