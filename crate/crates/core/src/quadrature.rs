//! Quadrature building blocks: Gauss-Legendre panel rules, an adaptive
//! Gauss-Kronrod integrator for complex-valued integrands, and log-weighted
//! interpolatory weights for integrals with a ln|s-t| factor.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Order of the panel rule used throughout the boundary solver.
pub const PANEL_ORDER: usize = 8;

// ---------------------------------------------------------------------------
// Gauss-Legendre rules
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_and_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The fixed panel rule (cached).
pub fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Barycentric weights for Lagrange interpolation on the given nodes.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    w
}

/// Evaluates the Lagrange interpolant through (nodes, values) at `x`
/// using the barycentric formula.
pub fn barycentric_eval(nodes: &[f64], bary: &[f64], values: &[Complex64], x: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in 0..nodes.len() {
        let dx = x - nodes[j];
        if dx.abs() < 1e-300 {
            return values[j];
        }
        let c = bary[j] / dx;
        num += values[j] * c;
        den += c;
    }
    num / den
}

// ---------------------------------------------------------------------------
// adaptive Gauss-Kronrod (7-15 pair), complex-valued integrands
// ---------------------------------------------------------------------------

// QUADPACK abscissae and weights for the 15-point Kronrod rule with
// embedded 7-point Gauss rule.
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One GK15 evaluation: returns (kronrod value, |kronrod - gauss| estimate,
/// integral of |f| under the Kronrod rule). The last is the scale against
/// which machine-level convergence must be judged, because the value itself
/// can cancel to zero on oscillatory panels.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK15[7];
    let mut gauss = fc * WG7[3];
    let mut res_abs = fc.norm() * WGK15[7];
    for j in 0..7 {
        let dx = h * XGK15[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let fsum = f1 + f2;
        kronrod += fsum * WGK15[j];
        res_abs += (f1.norm() + f2.norm()) * WGK15[j];
        if j % 2 == 1 {
            // odd Kronrod indices are the embedded Gauss nodes
            gauss += fsum * WG7[j / 2];
        }
    }
    kronrod *= h;
    gauss *= h;
    res_abs *= h.abs();
    (kronrod, (kronrod - gauss).norm(), res_abs)
}

/// Adaptively integrates `f` over [a, b] to the given absolute tolerance.
///
/// Plain bisection-based refinement; suited to the smooth and mildly peaked
/// integrands in this crate. For strongly oscillatory integrands use
/// [`adaptive_quad_oscillatory`], which pre-splits panels by phase variation.
pub fn adaptive_quad<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack = vec![(a, b, 0u32)];
    let mut spent = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        spent += 1;
        if spent > 2_000_000 {
            return Err(Error::contract(
                "adaptive_quad: evaluation budget exhausted",
            ));
        }
        let (val, err, res_abs) = gk15(&f, lo, hi);
        // local tolerance proportional to the panel fraction, floored at the
        // rounding level of the panel's function scale
        let local_tol = (abs_tol * ((hi - lo) / (b - a)).max(1e-3)).max(1e-15 * res_abs);
        if err <= local_tol || depth >= 48 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

/// Adaptive quadrature of an oscillatory integrand `e^{i gamma p(t)} q(t)`
/// style: the initial panels are chosen so each covers at most a tenth of a
/// period of the phase sweep `phase_span` (an upper bound on
/// `gamma * |p(b) - p(a)|`), then GK15 refinement runs per panel.
pub fn adaptive_quad_oscillatory<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    phase_span: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let periods = phase_span.abs() / (2.0 * std::f64::consts::PI);
    let panels = ((10.0 * periods).ceil() as usize).clamp(1, 4_000_000);
    let mut total = Complex64::new(0.0, 0.0);
    let step = (b - a) / panels as f64;
    let panel_tol = abs_tol / panels as f64;
    for i in 0..panels {
        let lo = a + i as f64 * step;
        let hi = if i + 1 == panels { b } else { lo + step };
        let (val, err, res_abs) = gk15(&f, lo, hi);
        if err <= panel_tol.max(1e-15 * res_abs) {
            total += val;
        } else {
            total += adaptive_quad(&f, lo, hi, panel_tol)?;
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// log-weighted interpolatory weights
// ---------------------------------------------------------------------------

/// Moments M_n(s) = \int_{-1}^{1} u^n ln|s-u| du, n = 0..count-1.
///
/// Valid for any real s (principal-value cancellation is built into the
/// closed form when |s| < 1).
pub fn log_moments(s: f64, count: usize) -> Vec<f64> {
    let lm = (s - 1.0).abs().max(1e-300).ln();
    let lp = (s + 1.0).abs().max(1e-300).ln();
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        // boundary term of integration by parts
        let mut v = lm + sign * lp;
        // polynomial part: sum_{m=0}^{n} s^m (1 + (-1)^{n-m})/(n-m+1)
        let mut poly = 0.0;
        let mut spow = 1.0;
        for m in 0..=n {
            let rem = n - m;
            if rem % 2 == 0 {
                poly += spow * 2.0 / (rem as f64 + 1.0);
            }
            spow *= s;
        }
        // spow is now s^{n+1}
        v -= poly + spow * (lm - lp);
        out.push(v / (nf + 1.0));
    }
    out
}

/// Interpolatory weights w_j for \int_{-1}^{1} g(u) ln|s-u| du
/// ≈ sum_j w_j g(u_j), where u_j are the given interpolation nodes.
///
/// Exact whenever g is a polynomial of degree < nodes.len().
pub fn log_weights(nodes: &[f64], s: f64) -> Vec<f64> {
    let p = nodes.len();
    let moments = log_moments(s, p);
    // solve the Vandermonde system V w = m with V[n][j] = u_j^n
    let mut v = nalgebra::DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut pw = 1.0;
        for n in 0..p {
            v[(n, j)] = pw;
            pw *= nodes[j];
        }
    }
    let m = nalgebra::DVector::<f64>::from_vec(moments);
    let sol = v
        .lu()
        .solve(&m)
        .expect("log_weights: Vandermonde solve failed");
    sol.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // degree-15 exactness: \int x^14 = 2/15
        let v: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14, "got {v}");
        // odd vanishes
        let o: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(7)).sum();
        assert!(o.abs() < 1e-15);
    }

    #[test]
    fn adaptive_quad_known_integrals() {
        let v = adaptive_quad(|t| Complex64::new(t.exp(), 0.0), 0.0, 1.0, 1e-13).unwrap();
        assert!((v.re - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        // complex oscillation: \int_0^1 e^{i 10 t} dt
        let v = adaptive_quad(
            |t| Complex64::from_polar(1.0, 10.0 * t),
            0.0,
            1.0,
            1e-13,
        )
        .unwrap();
        let want = (Complex64::from_polar(1.0, 10.0) - Complex64::new(1.0, 0.0))
            / Complex64::new(0.0, 10.0);
        assert!((v - want).norm() < 1e-12);
    }

    #[test]
    fn adaptive_quad_handles_log_singularity_at_endpoint() {
        // \int_0^1 ln(t) dt = -1
        let v = adaptive_quad(|t| Complex64::new(t.max(1e-300).ln(), 0.0), 0.0, 1.0, 1e-11)
            .unwrap();
        assert!((v.re + 1.0).abs() < 1e-9, "got {}", v.re);
    }

    #[test]
    fn oscillatory_quad_high_frequency() {
        // \int_0^pi e^{i gamma cos t} dt = pi J0(gamma)
        let gamma = 5e3;
        let v = adaptive_quad_oscillatory(
            |t| Complex64::from_polar(1.0, gamma * t.cos()),
            0.0,
            std::f64::consts::PI,
            2.0 * gamma,
            1e-11,
        )
        .unwrap();
        let want = std::f64::consts::PI * crate::specialfun::bessel_j0(gamma).unwrap();
        assert!((v.re - want).abs() < 1e-9, "re {} vs {}", v.re, want);
        assert!(v.im.abs() < 1e-9);
    }

    #[test]
    fn log_moments_match_closed_forms() {
        // M_0(0) = -2, M_0(3) = 6 ln 2 - 2
        let m = log_moments(0.0, 3);
        assert!((m[0] + 2.0).abs() < 1e-13);
        let m = log_moments(3.0, 1);
        assert!((m[0] - (6.0 * 2.0f64.ln() - 2.0)).abs() < 1e-13);
    }

    #[test]
    fn log_moments_match_quadrature() {
        for &s in &[-0.83, -0.2, 0.0, 0.31, 0.97, 1.4, -2.5] {
            let m = log_moments(s, 8);
            for (n, &mn) in m.iter().enumerate() {
                // split at the singularity for the oracle
                let f = |u: f64| {
                    Complex64::new(u.powi(n as i32) * (s - u).abs().max(1e-300).ln(), 0.0)
                };
                let want = if (-1.0..1.0).contains(&s) {
                    adaptive_quad(f, -1.0, s, 1e-13).unwrap().re
                        + adaptive_quad(f, s, 1.0, 1e-13).unwrap().re
                } else {
                    adaptive_quad(f, -1.0, 1.0, 1e-13).unwrap().re
                };
                assert!(
                    (mn - want).abs() < 1e-9,
                    "moment {n} at s={s}: {mn} vs {want}"
                );
            }
        }
    }

    #[test]
    fn log_weights_exact_on_polynomials() {
        let (nodes, _) = gauss_legendre(8);
        for &s in &[0.1, -0.55, 0.93, 1.8] {
            let w = log_weights(&nodes, s);
            for deg in 0..8usize {
                let got: f64 = nodes
                    .iter()
                    .zip(&w)
                    .map(|(u, wi)| wi * u.powi(deg as i32))
                    .sum();
                let want = log_moments(s, deg + 1)[deg];
                assert!(
                    (got - want).abs() < 1e-11,
                    "deg {deg}, s={s}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn log_weights_integrate_smooth_factor() {
        // \int_{-1}^1 cos(u) ln|s-u| du against the adaptive oracle; accuracy
        // limited by 8-point interpolation of cos (~1e-8)
        let (nodes, _) = gauss_legendre(8);
        for &s in &[0.1, -0.55, 0.93, 1.8] {
            let w = log_weights(&nodes, s);
            let got: f64 = nodes
                .iter()
                .zip(&w)
                .map(|(u, wi)| wi * u.cos())
                .sum();
            let f = |u: f64| Complex64::new(u.cos() * (s - u).abs().max(1e-300).ln(), 0.0);
            let want = if (-1.0..1.0).contains(&s) {
                adaptive_quad(f, -1.0, s, 1e-13).unwrap().re
                    + adaptive_quad(f, s, 1.0, 1e-13).unwrap().re
            } else {
                adaptive_quad(f, -1.0, 1.0, 1e-13).unwrap().re
            };
            assert!((got - want).abs() < 1e-7, "s={s}: {got} vs {want}");
        }
    }
}
