//! Reference computations for tests. Nothing here shares code with
//! `virial-core`; every routine works from closed forms or plain
//! adaptive quadrature.

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 || (b - a).abs() < 1e-14 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive 15-point Gauss-Kronrod on `[a, b]` with absolute tolerance `tol`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&mut f, a, b, tol, 40)
}

/// Integral over `[a, b]` split at the given interior break points.
pub fn integrate_pieces(mut f: impl FnMut(f64) -> f64, points: &[f64], tol: f64) -> f64 {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    points
        .windows(2)
        .map(|w| adapt(&mut f, w[0], w[1], tol / pieces, 40))
        .sum()
}

/// Nested adaptive quadrature of `f(x, y)` over `[x0, x1]` with inner limits
/// `[y0(x), y1(x)]`.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: impl Fn(f64) -> f64,
    y1: impl Fn(f64) -> f64,
    tol: f64,
) -> f64 {
    let width = (x1 - x0).abs().max(1.0);
    integrate(
        |x| integrate(|y| f(x, y), y0(x), y1(x), tol / width),
        x0,
        x1,
        tol,
    )
}

/// `int_R |x - y|^{-a} s(x, y) dy` for smooth `s`, with the singular factor
/// removed by `|x - y| = t^{1/(1-a)}` on each side of `y = x`.
pub fn weakly_singular_line(s: impl Fn(f64) -> f64, x: f64, a: f64, reach: f64, tol: f64) -> f64 {
    let q = 1.0 / (1.0 - a);
    let t_max = reach.powf(1.0 - a);
    let side = |sign: f64| integrate(|t| s(x + sign * t.powf(q)) * q, 0.0, t_max, tol);
    side(1.0) + side(-1.0)
}

/// Observed order `log2(e_coarse / e_fine)` for a refinement ratio of 2.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

/// Bound-state energies of `-d^2/dx^2 - gamma sech^2(x)` on the line,
/// from the closed-form Poschl-Teller spectrum `-(s - n)^2`,
/// `s = (sqrt(1 + 4 gamma) - 1) / 2`.
pub fn poschl_teller_levels(gamma: f64) -> Vec<f64> {
    let s = 0.5 * ((1.0 + 4.0 * gamma).sqrt() - 1.0);
    let mut out = Vec::new();
    let mut n = 0.0;
    while n < s {
        out.push(-(s - n) * (s - n));
        n += 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomials_and_sech() {
        let v = integrate(|x| x * x * x * x, 0.0, 2.0, 1e-14);
        assert!((v - 32.0 / 5.0).abs() < 1e-13);
        let v = integrate(|x| 1.0 / x.cosh().powi(2), -20.0, 20.0, 1e-13);
        assert!((v - 2.0 * 20f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn singular_line_integral() {
        // int_{-1}^{1} |y|^{-1/2} dy = 4
        let v = weakly_singular_line(|y| if y.abs() <= 1.0 { 1.0 } else { 0.0 }, 0.0, 0.5, 1.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn poschl_teller_integer_cases() {
        assert_eq!(poschl_teller_levels(2.0), vec![-1.0]);
        assert_eq!(poschl_teller_levels(6.0), vec![-4.0, -1.0]);
    }
}
