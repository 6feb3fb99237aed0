//! Standing waves, breather seeds and odd test data.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{antisymmetrize, ComplexField, Grid, RealField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error("soliton needs c > 0 and 1 < p < 5, got c = {c}, p = {p}")]
    BadSoliton { c: f64, p: f64 },
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error("degenerate odd projection")]
    DegenerateOddProjection,
}

fn sech(y: f64) -> f64 {
    if y.abs() > 710.0 {
        0.0
    } else {
        1.0 / y.cosh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonSpec {
    c: f64,
    p: f64,
}

impl SolitonSpec {
    pub fn new(c: f64, p: f64) -> Result<Self, SolutionError> {
        if !(c > 0.0 && p > 1.0 && p < 5.0 && c.is_finite()) {
            return Err(SolutionError::BadSoliton { c, p });
        }
        Ok(Self { c, p })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `Q(x) = [c(p+1)/2]^{1/(p-1)} sech^{2/(p-1)}(sqrt(c)(p-1)x/2)`, the
    /// positive even solution of `Q'' - cQ + Q^p = 0`.
    pub fn eval(&self, x: f64) -> f64 {
        let (c, p) = (self.c, self.p);
        let amp = (0.5 * c * (p + 1.0)).powf(1.0 / (p - 1.0));
        let s = sech(0.5 * c.sqrt() * (p - 1.0) * x);
        if s == 0.0 {
            0.0
        } else {
            amp * s.powf(2.0 / (p - 1.0))
        }
    }
}

pub fn soliton_profile(spec: &SolitonSpec, grid: &Grid) -> RealField {
    grid.sample(|x| spec.eval(x))
}

/// `2 sqrt(2) c sech(c x)`: the two-soliton bound-state datum of
/// `i u_t + u_xx + |u|^2 u = 0`, of period `pi / (4 c^2)` in `|u|`.
pub fn breather_seed(c: f64, grid: &Grid) -> Result<ComplexField, SolutionError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(SolutionError::BadScale(c));
    }
    let amp = 2.0 * std::f64::consts::SQRT_2 * c;
    Ok(grid.sample_complex(|x| Complex64::new(amp * sech(c * x), 0.0)))
}

/// `(int |u|^2 + |u_x|^2)^{1/2}`.
pub fn h1_norm(u: &ComplexField) -> f64 {
    let ux = u.grid.derivative(&u.values);
    u.grid
        .integrate_fn(|j, _| u.values[j].norm_sqr() + ux[j].norm_sqr())
        .sqrt()
}

/// Odd part of `exp(-(x - x0)^2 + i k x)` rescaled to `H^1` norm `eps`.
pub fn odd_packet(eps: f64, k: f64, x0: f64, grid: &Grid) -> Result<ComplexField, SolutionError> {
    let seed = grid.sample_complex(|x| Complex64::new(0.0, k * x).exp() * (-(x - x0) * (x - x0)).exp());
    let odd = antisymmetrize(&seed);
    let seed_norm = h1_norm(&seed);
    let norm = h1_norm(&odd);
    if !(norm > 1e-12 * seed_norm) {
        return Err(SolutionError::DegenerateOddProjection);
    }
    let s = eps / norm;
    Ok(odd.with_values(odd.values.iter().map(|z| z * s).collect()))
}

/// `amplitude e^{ikx} sech(x - x0)`.
pub fn sech_wave(amplitude: f64, k: f64, x0: f64, grid: &Grid) -> ComplexField {
    grid.sample_complex(|x| Complex64::new(0.0, k * x).exp() * amplitude * sech(x - x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve, EvolveConfig};
    use crate::grid::oddness_defect;
    use crate::models::{mass, momentum, ModelSpec, NonlinearitySpec};

    #[test]
    fn soliton_solves_profile_equation() {
        let g = Grid::new(60.0, 4096).unwrap();
        for (c, p) in [(1.0, 3.0), (0.5, 2.0), (0.3, 4.0), (2.0, 1.5)] {
            let spec = SolitonSpec::new(c, p).unwrap();
            let q = soliton_profile(&spec, &g);
            let qxx = g.derivative_real(&g.derivative_real(&q.values));
            let res = q
                .values
                .iter()
                .zip(&qxx)
                .map(|(&v, &d)| (d - c * v + v.powf(p)).abs())
                .fold(0.0, f64::max);
            assert!(res <= 1e-8, "c={c} p={p} residual {res}");
            let o = g.origin();
            assert!(q.evenness_defect() < 1e-15);
            assert!(q.values[o..].windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
        }
        let q = SolitonSpec::new(1.0, 3.0).unwrap();
        assert!((q.eval(0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!(SolitonSpec::new(0.0, 3.0).is_err());
        assert!(SolitonSpec::new(1.0, 5.0).is_err());
    }

    #[test]
    fn cubic_soliton_mass_and_momentum() {
        let g = Grid::new(60.0, 2048).unwrap();
        for c in [0.25, 1.0, 2.0] {
            let q = soliton_profile(&SolitonSpec::new(c, 3.0).unwrap(), &g).to_complex();
            assert!((mass(&q) - 4.0 * f64::sqrt(c)).abs() < 1e-8);
            assert!(momentum(&q).abs() < 1e-15);
            let rotated = q.with_values(q.values.iter().map(|z| z * Complex64::new(0.0, 0.7).exp()).collect());
            assert!(momentum(&rotated).abs() < 1e-15);
        }
    }

    #[test]
    fn soliton_modulus_is_stationary() {
        let g = Grid::new(40.0, 1024).unwrap();
        let spec = SolitonSpec::new(1.0, 3.0).unwrap();
        let q = soliton_profile(&spec, &g);
        let model = ModelSpec::Semilinear(NonlinearitySpec::pure_power(-1.0, 3.0).unwrap());
        let mut worst = 0.0_f64;
        let mut obs = |u: &ComplexField| {
            let d = u.values.iter().zip(&q.values).map(|(z, &v)| (z.norm() - v).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
            Ok(())
        };
        evolve(&q.to_complex(), &EvolveConfig::new(1e-3, 20.0, 500), &model, &mut obs).unwrap();
        assert!(worst <= 1e-3, "{worst}");
    }

    #[test]
    fn breather_seed_is_even() {
        let g = Grid::new(40.0, 512).unwrap();
        let u = breather_seed(1.0, &g).unwrap();
        assert!((u.values[g.origin()].re - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((oddness_defect(&u) - 2.0).abs() < 1e-12);
        assert_eq!(antisymmetrize(&u).max_abs(), 0.0);
        assert!(breather_seed(0.0, &g).is_err());
    }

    #[test]
    fn odd_packet_normalization() {
        let g = Grid::new(40.0, 1024).unwrap();
        for (eps, k, x0) in [(0.1, 0.5, 2.0), (0.025, 0.0, 1.0), (1.0, 2.0, 0.0)] {
            let u = odd_packet(eps, k, x0, &g).unwrap();
            assert!((h1_norm(&u) - eps).abs() < 1e-12 * eps.max(1.0));
            assert!(oddness_defect(&u) <= 1e-14);
        }
        assert_eq!(odd_packet(0.1, 0.0, 0.0, &g), Err(SolutionError::DegenerateOddProjection));
    }
}
