//! Virial functional `I(u) = Im int phi u conj(u_x)`, the right-hand side of
//! its evolution law, the bilinear forms obtained from it, and the
//! symmetrized Hartree term.

use num_complex::Complex64;
use thiserror::Error;

use crate::evolve::{strang_step, EvolveError};
use crate::grid::{ComplexField, Grid, RealField};
use crate::models::{cell_averaged_kernel, ModelError, ModelSpec, NonlinearitySpec, PotentialSpec, PreparedModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VirialError {
    #[error("weight scale lambda = {0} must exceed 1")]
    BadLambda(f64),
    #[error("field and weights live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

fn sech(y: f64) -> f64 {
    if y.abs() > 710.0 {
        0.0
    } else {
        1.0 / y.cosh()
    }
}

/// `phi = lambda tanh(x/lambda)` and `alpha = sech(x/lambda)` with the
/// derivatives used by the virial estimates, all in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct VirialWeights {
    pub lambda: f64,
    pub phi: RealField,
    pub phi_x: RealField,
    pub phi_xxx: RealField,
    pub alpha: RealField,
    pub alpha_x: RealField,
    pub alpha_xx: RealField,
}

impl VirialWeights {
    pub fn new(grid: &Grid, lambda: f64) -> Result<Self, VirialError> {
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(VirialError::BadLambda(lambda));
        }
        let l2 = lambda * lambda;
        let field = |f: &dyn Fn(f64, f64) -> f64| {
            grid.sample(|x| {
                let y = x / lambda;
                f(sech(y), y.tanh())
            })
        };
        Ok(Self {
            lambda,
            phi: field(&|_, t| lambda * t),
            phi_x: field(&|s, _| s * s),
            phi_xxx: field(&|s, t| 2.0 / l2 * s * s * (2.0 * t * t - s * s)),
            alpha: field(&|s, _| s),
            alpha_x: field(&|s, t| -s * t / lambda),
            alpha_xx: field(&|s, t| (s * t * t - s * s * s) / l2),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.phi.grid
    }
}

/// The `sech(x)` weight of the local `H^1` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagWeight {
    pub w: RealField,
}

impl DiagWeight {
    pub fn new(grid: &Grid) -> Self {
        Self { w: grid.sample(sech) }
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<(), VirialError> {
    if a == b {
        Ok(())
    } else {
        Err(VirialError::GridMismatch)
    }
}

/// `Im int phi u conj(u_x)`.
pub fn virial_i(u: &ComplexField, phi: &RealField) -> f64 {
    let g = &u.grid;
    let ux = g.derivative(&u.values);
    g.integrate_fn(|j, _| phi.values[j] * (u.values[j] * ux[j].conj()).im)
}

/// Term-by-term pieces of `-dI/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirialRhs {
    /// `2 int phi_x |u_x|^2`
    pub gradient: f64,
    /// `-1/2 int phi_xxx |u|^2`
    pub curvature: f64,
    /// `-int phi_x [F - f |u|^2]`, or `-sigma int phi d_x(W * |u|^2) |u|^2`.
    pub nonlinear: f64,
    /// `-mu int phi V_x |u|^2`
    pub potential: f64,
}

impl VirialRhs {
    pub fn total(&self) -> f64 {
        self.gradient + self.curvature + self.nonlinear + self.potential
    }
}

/// `-int phi_x [F(|u|^2) - f(|u|^2)|u|^2]`.
pub fn nonlinear_virial_term(u: &ComplexField, phi_x: &RealField, nl: &NonlinearitySpec) -> f64 {
    u.grid.integrate_fn(|j, _| {
        let s = u.values[j].norm_sqr();
        -phi_x.values[j] * (nl.antiderivative(s) - nl.f(s) * s)
    })
}

pub fn virial_rhs_terms(u: &ComplexField, w: &VirialWeights, model: &PreparedModel) -> Result<VirialRhs, VirialError> {
    same_grid(&u.grid, w.grid())?;
    same_grid(&u.grid, model.grid())?;
    let g = &u.grid;
    let ux = g.derivative(&u.values);
    let rho = u.density();
    let mut out = VirialRhs {
        gradient: 2.0 * g.integrate_fn(|j, _| w.phi_x.values[j] * ux[j].norm_sqr()),
        curvature: -0.5 * g.integrate_fn(|j, _| w.phi_xxx.values[j] * rho[j]),
        ..Default::default()
    };
    match model.spec() {
        ModelSpec::Semilinear(nl) => {
            out.nonlinear = nonlinear_virial_term(u, &w.phi_x, nl);
        }
        ModelSpec::WithPotential(nl, p) => {
            out.nonlinear = nonlinear_virial_term(u, &w.phi_x, nl);
            out.potential = -p.mu * g.integrate_fn(|j, _| w.phi.values[j] * p.v_x.values[j] * rho[j]);
        }
        ModelSpec::Hartree(h) => {
            let op = model.hartree_operator().expect("Hartree operator prepared");
            let pot = op.potential(&rho);
            let dpot = g.derivative_real(&pot);
            out.nonlinear = -h.sigma() * g.integrate_fn(|j, _| w.phi.values[j] * dpot[j] * rho[j]);
        }
    }
    Ok(out)
}

/// `-dI/dt` evaluated from the state alone.
pub fn virial_rhs(u: &ComplexField, w: &VirialWeights, model: &ModelSpec) -> Result<f64, VirialError> {
    let prepared = PreparedModel::new(model, &u.grid)?;
    Ok(virial_rhs_terms(u, w, &prepared)?.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialIdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// Centered difference `-(I(u(dt)) - I(u(-dt)))/(2 dt)` against `virial_rhs(u0)`.
pub fn check_virial_identity(
    u0: &ComplexField,
    model: &ModelSpec,
    w: &VirialWeights,
    dt: f64,
) -> Result<VirialIdentityCheck, VirialError> {
    let fwd = strang_step(u0, dt, model)?;
    let back = strang_step(u0, -dt, model)?;
    let lhs = -(virial_i(&fwd, &w.phi) - virial_i(&back, &w.phi)) / (2.0 * dt);
    let rhs = virial_rhs(u0, w, model)?;
    Ok(VirialIdentityCheck {
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
    })
}

/// `V_0 = -V_x phi / phi_x = -V_x (lambda/2) sinh(2x/lambda)`, set to zero
/// where the factor overflows or `V_x` vanishes.
pub fn simon_weight(v_x: &RealField, lambda: f64) -> RealField {
    let g = &v_x.grid;
    let values = g
        .nodes()
        .iter()
        .zip(&v_x.values)
        .map(|(&x, &d)| {
            if d == 0.0 {
                return 0.0;
            }
            let s = (2.0 * x / lambda).sinh();
            let v = -d * 0.5 * lambda * s;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        })
        .collect();
    RealField { grid: g.clone(), values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearReport {
    /// `B(w)`
    pub b: f64,
    /// `B` recomputed from `v = alpha w`
    pub b_transformed: f64,
    /// `int v_x^2`
    pub gradient: f64,
    /// `b_transformed / gradient`, zero when the gradient vanishes.
    pub ratio: f64,
}

/// `B(w) = 2 int phi_x w_x^2 - 1/2 int phi_xxx w^2 (- mu int phi V_x w^2)`
/// and its transformed form `2 int v_x^2 - lambda^-2 int sech^2(x/lambda) v^2
/// (+ mu int V_0 v^2)`.
pub fn bilinear_b(w: &RealField, weights: &VirialWeights, potential: Option<&PotentialSpec>) -> Result<BilinearReport, VirialError> {
    let g = &w.grid;
    same_grid(g, weights.grid())?;
    if let Some(p) = potential {
        same_grid(g, p.grid())?;
    }
    let wx = g.derivative_real(&w.values);
    let mut b = g.integrate_fn(|j, _| {
        2.0 * weights.phi_x.values[j] * wx[j] * wx[j] - 0.5 * weights.phi_xxx.values[j] * w.values[j] * w.values[j]
    });
    let v: Vec<f64> = w.values.iter().zip(&weights.alpha.values).map(|(a, b)| a * b).collect();
    let vx = g.derivative_real(&v);
    let gradient = g.integrate_fn(|j, _| vx[j] * vx[j]);
    let l2 = weights.lambda * weights.lambda;
    let mut bt = 2.0 * gradient - g.integrate_fn(|j, _| weights.phi_x.values[j] * v[j] * v[j]) / l2;
    if let Some(p) = potential {
        b -= p.mu * g.integrate_fn(|j, _| weights.phi.values[j] * p.v_x.values[j] * w.values[j] * w.values[j]);
        let v0 = simon_weight(&p.v_x, weights.lambda);
        bt += p.mu * g.integrate_fn(|j, _| v0.values[j] * v[j] * v[j]);
    }
    Ok(BilinearReport {
        b,
        b_transformed: bt,
        gradient,
        ratio: if gradient > 0.0 { bt / gradient } else { 0.0 },
    })
}

/// Discrete symmetrized Hartree term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HartreeSym {
    /// Pairs `j != m`.
    pub off_diagonal: f64,
    /// Cells `j = m`.
    pub diagonal: f64,
}

impl HartreeSym {
    pub fn total(&self) -> f64 {
        self.off_diagonal + self.diagonal
    }
}

fn kernel_table(grid: &Grid, a: f64) -> Vec<f64> {
    let dx = grid.dx();
    (0..grid.len()).map(|d| cell_averaged_kernel(d as f64 * dx, dx, a)).collect()
}

/// `1/2 sum_{j,m} dx^2 Phi_jm K_jm rho_j rho_m`, where `Phi` is the divided
/// difference of `phi` (`phi_x` on the diagonal) and `K` the cell average of
/// `|x|^{-a}`. Nonnegative whenever `phi` is nondecreasing.
pub fn hartree_sym_density(grid: &Grid, rho: &[f64], phi: &RealField, phi_x: &RealField, a: f64) -> HartreeSym {
    let n = grid.len();
    let dx = grid.dx();
    let x = grid.nodes();
    let k = kernel_table(grid, a);
    let mut off = 0.0;
    for j in 0..n {
        if rho[j] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for m in (j + 1)..n {
            let div = (phi.values[m] - phi.values[j]) / (x[m] - x[j]);
            row += div * k[m - j] * rho[m];
        }
        off += row * rho[j];
    }
    let diagonal: f64 = (0..n).map(|j| phi_x.values[j] * k[0] * rho[j] * rho[j]).sum::<f64>() * 0.5 * dx * dx;
    HartreeSym {
        off_diagonal: off * dx * dx,
        diagonal,
    }
}

/// Unsymmetrized off-diagonal sum `sum_{j != m} dx^2 phi_j (x_j - x_m) kappa_jm
/// rho_j rho_m` with `kappa = K / |x_j - x_m|^2`; equals
/// `HartreeSym::off_diagonal` identically.
pub fn hartree_asym_density(grid: &Grid, rho: &[f64], phi: &RealField, a: f64) -> f64 {
    let n = grid.len();
    let dx = grid.dx();
    let x = grid.nodes();
    let k = kernel_table(grid, a);
    let mut acc = 0.0;
    for j in 0..n {
        if rho[j] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for m in 0..n {
            if m == j {
                continue;
            }
            let d = x[j] - x[m];
            row += d * k[j.abs_diff(m)] / (d * d) * rho[m];
        }
        acc += phi.values[j] * rho[j] * row;
    }
    acc * dx * dx
}

pub fn hartree_sym_term(u: &ComplexField, w: &VirialWeights, a: f64) -> Result<HartreeSym, VirialError> {
    same_grid(&u.grid, w.grid())?;
    Ok(hartree_sym_density(&u.grid, &u.density(), &w.phi, &w.phi_x, a))
}

/// `int w (|u_x|^2 + |u|^2)`.
pub fn weighted_h1_norm_sq(u: &ComplexField, w: &DiagWeight) -> f64 {
    let ux = u.grid.derivative(&u.values);
    u.grid
        .integrate_fn(|j, _| w.w.values[j] * (ux[j].norm_sqr() + u.values[j].norm_sqr()))
}

/// `int w |u|^2`.
pub fn weighted_l2_norm_sq(u: &ComplexField, w: &DiagWeight) -> f64 {
    u.grid.integrate_fn(|j, _| w.w.values[j] * u.values[j].norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    /// `rhs <= 0` for a nonzero field.
    pub violation: bool,
}

/// `||u||^2_{H^1_sech}` against `B(Re u) + B(Im u)`.
pub fn coercivity_weighted_bound(u: &ComplexField, w: &VirialWeights) -> Result<CoercivityReport, VirialError> {
    let lhs = weighted_h1_norm_sq(u, &DiagWeight::new(&u.grid));
    let rhs = bilinear_b(&u.real_part(), w, None)?.b + bilinear_b(&u.imag_part(), w, None)?.b;
    let nonzero = u.max_abs() > 0.0;
    Ok(CoercivityReport {
        lhs,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        violation: nonzero && rhs <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundCheck {
    pub minus_didt: f64,
    pub norm_sq: f64,
    pub margin: f64,
}

/// `-dI/dt - c_test ||u||^2_{H^1_sech}`.
pub fn virial_lower_bound_check(
    u: &ComplexField,
    w: &VirialWeights,
    model: &ModelSpec,
    c_test: f64,
) -> Result<LowerBoundCheck, VirialError> {
    let minus_didt = virial_rhs(u, w, model)?;
    let norm_sq = weighted_h1_norm_sq(u, &DiagWeight::new(&u.grid));
    Ok(LowerBoundCheck {
        minus_didt,
        norm_sq,
        margin: minus_didt - c_test * norm_sq,
    })
}

/// `Im int phi u conj(u_x)` with a complex-valued integrand exposed, for
/// callers that monitor both parts.
pub fn virial_integrand(u: &ComplexField, phi: &RealField) -> Vec<Complex64> {
    let ux = u.grid.derivative(&u.values);
    u.values
        .iter()
        .zip(&ux)
        .zip(&phi.values)
        .map(|((z, d), &p)| z * d.conj() * p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::antisymmetrize;
    use crate::models::{HartreeSpec, PotentialShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use virial_oracles as oracle;

    fn random_odd_real(g: &Grid, rng: &mut ChaCha8Rng) -> RealField {
        let c: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.3..2.0)))
            .collect();
        g.sample(|x| {
            c.iter()
                .map(|&(amp, x0, s)| amp * ((-(x - x0).powi(2) / (s * s)).exp() - (-(x + x0).powi(2) / (s * s)).exp()))
                .sum()
        })
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn weight_identities() {
        for lambda in [2.0, 5.0] {
            let g = Grid::new(20.0 * lambda, 4096).unwrap();
            let w = VirialWeights::new(&g, lambda).unwrap();
            // phi itself is not periodic; differentiate the decaying phi_x twice
            let d3 = g.derivative_real(&g.derivative_real(&w.phi_x.values));
            for j in 0..g.len() {
                let a = w.alpha.values[j];
                assert!((a * a - w.phi_x.values[j]).abs() < 1e-15);
                let ax = w.alpha_x.values[j];
                let rebuilt = 2.0 * (a * w.alpha_xx.values[j] + ax * ax);
                assert!((rebuilt - w.phi_xxx.values[j]).abs() < 1e-12);
                assert!((d3[j] - w.phi_xxx.values[j]).abs() < 1e-8);
            }
            assert!(w.phi_x.values.iter().all(|&v| v >= 0.0));
            assert!(w.phi.values.iter().zip(&w.phi.values[1..]).all(|(a, b)| b >= a));
        }
        let g = Grid::new(20.0, 64).unwrap();
        assert!(matches!(VirialWeights::new(&g, 1.0), Err(VirialError::BadLambda(_))));
    }

    #[test]
    fn virial_i_examples() {
        let g = Grid::new(40.0, 1024).unwrap();
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let real = g.sample_complex(|x| Complex64::new((-x * x).exp(), 0.0));
        assert!(virial_i(&real, &w.phi).abs() < 1e-15);
        let wave = g.sample_complex(|x| Complex64::new(0.0, 0.7 * x).exp() * sech(x));
        assert!(virial_i(&wave, &w.phi).abs() < 1e-10);

        // u = sech(x-1) e^{ix}: u conj(u_x) = -i sech^2 - sech^2 tanh, Im = -sech^2(x-1)
        let u = g.sample_complex(|x| Complex64::new(0.0, x).exp() * sech(x - 1.0));
        let reference = oracle::integrate(|x| -2.0 * (x / 2.0).tanh() * sech(x - 1.0).powi(2), -40.0, 40.0, 1e-13);
        assert!((virial_i(&u, &w.phi) - reference).abs() < 1e-8);
    }

    #[test]
    fn linear_rhs_matches_termwise_oracle() {
        let g = Grid::new(40.0, 2048).unwrap();
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let model = ModelSpec::Semilinear(NonlinearitySpec::pure_power(0.0, 3.0).unwrap());
        // odd Gaussian x e^{-x^2}
        let u = g.sample_complex(|x| Complex64::new(x * (-x * x).exp(), 0.0));
        let got = virial_rhs(&u, &w, &model).unwrap();
        let phi_x = |x: f64| sech(x / 2.0).powi(2);
        let phi_xxx = |x: f64| {
            let (s, t) = (sech(x / 2.0), (x / 2.0).tanh());
            0.5 * s * s * (2.0 * t * t - s * s)
        };
        let ux = |x: f64| (1.0 - 2.0 * x * x) * (-x * x).exp();
        let want = oracle::integrate(
            |x| 2.0 * phi_x(x) * ux(x).powi(2) - 0.5 * phi_xxx(x) * (x * (-x * x).exp()).powi(2),
            -20.0,
            20.0,
            1e-13,
        );
        assert!((got - want).abs() < 1e-8, "{got} {want}");
        assert_eq!(virial_rhs(&ComplexField::zeros(&g), &w, &model).unwrap(), 0.0);
    }

    #[test]
    fn defocusing_term_is_half_quartic() {
        let g = Grid::new(20.0, 512).unwrap();
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let nl = NonlinearitySpec::pure_power(1.0, 3.0).unwrap();
        let u = g.sample_complex(|x| Complex64::new(sech(x), 0.3 * x * sech(x)));
        let term = nonlinear_virial_term(&u, &w.phi_x, &nl);
        let want = 0.5 * g.integrate_fn(|j, _| w.phi_x.values[j] * u.values[j].norm_sqr().powi(2));
        assert!(term > 0.0 && (term - want).abs() < 1e-13);
    }

    #[test]
    fn virial_identity_second_order() {
        let g = Grid::new(40.0, 1024).unwrap();
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let u0 = antisymmetrize(&g.sample_complex(|x| Complex64::new(0.0, 0.5 * x).exp() * (-(x - 1.0).powi(2)).exp() * 0.3));
        for model in [
            ModelSpec::Semilinear(NonlinearitySpec::pure_power(-1.0, 3.0).unwrap()),
            ModelSpec::Hartree(HartreeSpec::new(0.5, 1.0).unwrap()),
        ] {
            let d1 = check_virial_identity(&u0, &model, &w, 2e-3).unwrap().defect;
            let d2 = check_virial_identity(&u0, &model, &w, 1e-3).unwrap().defect;
            let r = d1 / d2;
            assert!((3.5..=4.5).contains(&r), "ratio {r}");
        }
        let zero = check_virial_identity(&ComplexField::zeros(&g), &ModelSpec::Hartree(HartreeSpec::new(0.5, 1.0).unwrap()), &w, 1e-3).unwrap();
        assert_eq!(zero.defect, 0.0);
    }

    #[test]
    fn transform_identity_and_odd_coercivity() {
        let g = Grid::new(60.0, 2048).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for lambda in [2.0, 10.0] {
            let w = VirialWeights::new(&g, lambda).unwrap();
            for _ in 0..20 {
                let f = random_odd_real(&g, &mut rng);
                let r = bilinear_b(&f, &w, None).unwrap();
                assert!((r.b - r.b_transformed).abs() <= 1e-8 * (1.0 + r.b.abs()));
                assert!(r.b_transformed >= 1.5 * r.gradient - 1e-8);
            }
        }
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let zero = bilinear_b(&RealField::zeros(&g), &w, None).unwrap();
        assert_eq!((zero.b, zero.b_transformed, zero.gradient, zero.ratio), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn transform_identity_with_potential() {
        let g = Grid::new(40.0, 2048).unwrap();
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let p = PotentialSpec::from_shape(&g, 0.05, PotentialShape::SechPower { amplitude: -1.0, power: 4.0 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let f = random_odd_real(&g, &mut rng);
            let r = bilinear_b(&f, &w, Some(&p)).unwrap();
            assert!((r.b - r.b_transformed).abs() <= 1e-8 * (1.0 + r.b.abs()));
        }
    }

    #[test]
    fn hartree_sym_basic_properties() {
        let g = Grid::new(15.0, 256).unwrap();
        let w = VirialWeights::new(&g, 3.0).unwrap();
        let zero = hartree_sym_term(&ComplexField::zeros(&g), &w, 0.5).unwrap();
        assert_eq!(zero.total(), 0.0);

        let flat = g.sample(|_| 2.5);
        let u = g.sample_complex(|x| Complex64::new(sech(x), 0.0));
        let zero_phi_x = RealField::zeros(&g);
        let h = hartree_sym_density(&g, &u.density(), &flat, &zero_phi_x, 0.5);
        assert_eq!(h.total(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in [0.25, 0.5, 0.75] {
            let rho: Vec<f64> = (0..g.len()).map(|_| rng.gen::<f64>()).collect();
            let s = hartree_sym_density(&g, &rho, &w.phi, &w.phi_x, a);
            let asym = hartree_asym_density(&g, &rho, &w.phi, a);
            assert!(s.total() >= 0.0);
            assert!((s.off_diagonal - asym).abs() <= 1e-10 * s.off_diagonal.abs());
        }
    }

    #[test]
    fn weighted_norms() {
        let g = Grid::new(60.0, 2048).unwrap();
        let w = DiagWeight::new(&g);
        assert_eq!(weighted_h1_norm_sq(&ComplexField::zeros(&g), &w), 0.0);
        let one = g.sample_complex(|_| Complex64::new(1.0, 0.0));
        assert!((weighted_l2_norm_sq(&one, &w) - std::f64::consts::PI).abs() < 1e-6);
        let s = g.sample_complex(|x| Complex64::new(sech(x), 0.0));
        let want = oracle::integrate(|x| sech(x).powi(3) * (1.0 + x.tanh().powi(2)), -60.0, 60.0, 1e-13);
        assert!((weighted_h1_norm_sq(&s, &w) - want).abs() < 1e-10);
    }

    #[test]
    fn coercivity_report_flags() {
        let g = Grid::new(400.0, 4096).unwrap();
        let w = VirialWeights::new(&g, 100.0).unwrap();
        let zero = coercivity_weighted_bound(&ComplexField::zeros(&g), &w).unwrap();
        assert!(zero.ratio.is_none() && !zero.violation);
        let odd = g.sample_complex(|x| Complex64::new(x * (-x * x / 4.0).exp(), 0.2 * x * (-x * x).exp()));
        let r = coercivity_weighted_bound(&odd, &w).unwrap();
        assert!(!r.violation && r.ratio.unwrap() > 0.0);
    }

    #[test]
    fn lower_bound_zero_margin() {
        let g = Grid::new(20.0, 256).unwrap();
        let w = VirialWeights::new(&g, 2.0).unwrap();
        let model = ModelSpec::Semilinear(NonlinearitySpec::pure_power(-1.0, 2.0).unwrap());
        let r = virial_lower_bound_check(&ComplexField::zeros(&g), &w, &model, 0.1).unwrap();
        assert_eq!(r.margin, 0.0);
    }
}
