//! Locally rough surface profiles and their discretized boundary meshes.
//!
//! A profile is the graph `x2 = h(x1)` of a compactly supported perturbation
//! of the flat line: `h(x1) = 0` outside a finite interval. The mesh covers
//! the perturbed part plus a flat margin on each side, discretized into
//! Gauss-Legendre panels with arc-length weights.

use crate::error::{Error, Result};
use crate::quadrature::panel_rule;
use serde::{Deserialize, Serialize};

/// Interpolation rule for tabulated profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    Cubic,
}

/// A compactly supported surface height function.
#[derive(Clone, Debug)]
pub enum SurfaceProfile {
    /// h = 0 everywhere.
    Flat,
    /// Sum of scaled translates of the quartic B-spline `phi`:
    /// `h(x) = sum_i a_i phi((x - c_i) / w_i)`.
    SplineBumps {
        amplitudes: Vec<f64>,
        centers: Vec<f64>,
        widths: Vec<f64>,
    },
    /// Piecewise-linear through the given nodes; first and last heights must
    /// vanish so the support stays compact. Corners carry the right-hand
    /// slope.
    PiecewiseLinear { nodes: Vec<(f64, f64)> },
    /// `h(x) = amplitude * exp(s^2/(x^2-s^2)) * (base + micro_amp
    /// sin(micro_freq pi x)) * sin(macro_freq pi x)` for |x| < s, else 0.
    Multiscale {
        amplitude: f64,
        base: f64,
        micro_amp: f64,
        micro_freq: f64,
        macro_freq: f64,
        half_support: f64,
    },
    /// Sampled heights with an interpolation rule. Queries outside the table
    /// are a domain error.
    Tabulated {
        xs: Vec<f64>,
        hs: Vec<f64>,
        interpolation: Interpolation,
        /// natural-spline second derivatives (empty for linear interpolation)
        spline_m: Vec<f64>,
    },
}

/// The quartic cardinal B-spline of the bump profiles (support |x| < 5/2).
pub fn bspline_phi(x: f64) -> f64 {
    if x.abs() >= 2.5 {
        return 0.0;
    }
    const BINOM: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    let mut acc = 0.0;
    for (j, b) in BINOM.iter().enumerate() {
        let u = x + 2.5 - j as f64;
        if u > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * b * u.powi(4);
        }
    }
    acc / 24.0
}

fn bspline_phi_d1(x: f64) -> f64 {
    if x.abs() >= 2.5 {
        return 0.0;
    }
    const BINOM: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    let mut acc = 0.0;
    for (j, b) in BINOM.iter().enumerate() {
        let u = x + 2.5 - j as f64;
        if u > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * b * u.powi(3);
        }
    }
    acc / 6.0
}

fn bspline_phi_d2(x: f64) -> f64 {
    if x.abs() >= 2.5 {
        return 0.0;
    }
    const BINOM: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    let mut acc = 0.0;
    for (j, b) in BINOM.iter().enumerate() {
        let u = x + 2.5 - j as f64;
        if u > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * b * u.powi(2);
        }
    }
    acc / 2.0
}

impl SurfaceProfile {
    /// Bump-sum profile; all three parameter lists must have equal length
    /// and positive widths.
    pub fn spline_bumps(amplitudes: Vec<f64>, centers: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != centers.len() || centers.len() != widths.len() {
            return Err(Error::domain(
                "spline_bumps: amplitudes, centers, widths must have equal length",
            ));
        }
        if widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::domain("spline_bumps: widths must be positive"));
        }
        Ok(SurfaceProfile::SplineBumps { amplitudes, centers, widths })
    }

    /// Piecewise-linear profile; nodes must be strictly increasing in x and
    /// the first and last heights must be zero.
    pub fn piecewise_linear(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::domain("piecewise_linear: need at least 2 nodes"));
        }
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::domain("piecewise_linear: x must be strictly increasing"));
        }
        if nodes.first().unwrap().1 != 0.0 || nodes.last().unwrap().1 != 0.0 {
            return Err(Error::domain(
                "piecewise_linear: first and last heights must vanish for compact support",
            ));
        }
        Ok(SurfaceProfile::PiecewiseLinear { nodes })
    }

    pub fn multiscale(
        amplitude: f64,
        base: f64,
        micro_amp: f64,
        micro_freq: f64,
        macro_freq: f64,
        half_support: f64,
    ) -> Result<Self> {
        if !(half_support > 0.0) {
            return Err(Error::domain("multiscale: half_support must be positive"));
        }
        Ok(SurfaceProfile::Multiscale {
            amplitude,
            base,
            micro_amp,
            micro_freq,
            macro_freq,
            half_support,
        })
    }

    /// Tabulated profile from sample pairs.
    pub fn tabulated(xs: Vec<f64>, hs: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if xs.len() != hs.len() || xs.len() < 2 {
            return Err(Error::domain("tabulated: need >= 2 samples of equal length"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tabulated: x samples must be strictly increasing"));
        }
        let spline_m = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::Cubic => natural_spline_second_derivatives(&xs, &hs),
        };
        Ok(SurfaceProfile::Tabulated { xs, hs, interpolation, spline_m })
    }

    /// The two-bump cubic-spline profile used throughout the experiments:
    /// `h(x) = 0.1 phi((x+0.2)/0.3) - 0.08 phi((x-0.3)/0.2)`.
    pub fn example1() -> Self {
        SurfaceProfile::SplineBumps {
            amplitudes: vec![0.1, -0.08],
            centers: vec![-0.2, 0.3],
            widths: vec![0.3, 0.2],
        }
    }

    /// A representative piecewise-linear (tent) profile. The published
    /// piecewise-linear geometry exists only as a figure, so this is a
    /// documented stand-in with the same character.
    pub fn example2() -> Self {
        SurfaceProfile::PiecewiseLinear {
            nodes: vec![(-0.6, 0.0), (0.0, 0.18), (0.6, 0.0)],
        }
    }

    /// The multi-scale profile
    /// `0.3 exp(16/(25 x^2 - 16)) (0.5 + 0.1 sin(16 pi x)) sin(pi x)` on
    /// |x| < 4/5.
    pub fn example3() -> Self {
        SurfaceProfile::Multiscale {
            amplitude: 0.3,
            base: 0.5,
            micro_amp: 0.1,
            micro_freq: 16.0,
            macro_freq: 1.0,
            half_support: 0.8,
        }
    }

    /// Short name of the profile kind (used in dataset provenance headers).
    pub fn kind_name(&self) -> &'static str {
        match self {
            SurfaceProfile::Flat => "flat",
            SurfaceProfile::SplineBumps { .. } => "spline_bumps",
            SurfaceProfile::PiecewiseLinear { .. } => "piecewise_linear",
            SurfaceProfile::Multiscale { .. } => "multiscale",
            SurfaceProfile::Tabulated { .. } => "tabulated",
        }
    }

    /// Minimal closed interval containing `{h != 0}`, or None when h == 0.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            SurfaceProfile::Flat => None,
            SurfaceProfile::SplineBumps { amplitudes, centers, widths } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for ((&a, &c), &w) in amplitudes.iter().zip(centers).zip(widths) {
                    if a != 0.0 {
                        lo = lo.min(c - 2.5 * w);
                        hi = hi.max(c + 2.5 * w);
                    }
                }
                (lo < hi).then_some((lo, hi))
            }
            SurfaceProfile::PiecewiseLinear { nodes } => {
                let mut lo = None;
                let mut hi = None;
                for w in nodes.windows(2) {
                    if w[0].1 != 0.0 || w[1].1 != 0.0 {
                        lo.get_or_insert(w[0].0);
                        hi = Some(w[1].0);
                    }
                }
                lo.zip(hi)
            }
            SurfaceProfile::Multiscale { amplitude, half_support, .. } => {
                (*amplitude != 0.0).then_some((-half_support, *half_support))
            }
            SurfaceProfile::Tabulated { xs, hs, .. } => {
                let n = xs.len();
                let first = hs.iter().position(|&h| h != 0.0)?;
                let last = hs.iter().rposition(|&h| h != 0.0).unwrap();
                let lo = xs[first.saturating_sub(1)];
                let hi = xs[(last + 1).min(n - 1)];
                Some((lo, hi))
            }
        }
    }

    /// Height h(x1).
    pub fn height(&self, x1: f64) -> Result<f64> {
        if !x1.is_finite() {
            return Err(Error::domain("height: non-finite abscissa"));
        }
        match self {
            SurfaceProfile::Flat => Ok(0.0),
            SurfaceProfile::SplineBumps { amplitudes, centers, widths } => Ok(amplitudes
                .iter()
                .zip(centers)
                .zip(widths)
                .map(|((&a, &c), &w)| a * bspline_phi((x1 - c) / w))
                .sum()),
            SurfaceProfile::PiecewiseLinear { nodes } => Ok(piecewise_eval(nodes, x1).0),
            SurfaceProfile::Multiscale {
                amplitude,
                base,
                micro_amp,
                micro_freq,
                macro_freq,
                half_support,
            } => {
                let s = *half_support;
                if x1.abs() >= s {
                    return Ok(0.0);
                }
                let pi = std::f64::consts::PI;
                let envelope = (s * s / (x1 * x1 - s * s)).exp();
                Ok(amplitude
                    * envelope
                    * (base + micro_amp * (micro_freq * pi * x1).sin())
                    * (macro_freq * pi * x1).sin())
            }
            SurfaceProfile::Tabulated { xs, hs, interpolation, spline_m } => {
                tabulated_eval(xs, hs, *interpolation, spline_m, x1).map(|v| v.0)
            }
        }
    }

    /// Derivative h'(x1); at piecewise-linear corners the right-hand slope.
    pub fn derivative(&self, x1: f64) -> Result<f64> {
        if !x1.is_finite() {
            return Err(Error::domain("derivative: non-finite abscissa"));
        }
        match self {
            SurfaceProfile::Flat => Ok(0.0),
            SurfaceProfile::SplineBumps { amplitudes, centers, widths } => Ok(amplitudes
                .iter()
                .zip(centers)
                .zip(widths)
                .map(|((&a, &c), &w)| a / w * bspline_phi_d1((x1 - c) / w))
                .sum()),
            SurfaceProfile::PiecewiseLinear { nodes } => Ok(piecewise_eval(nodes, x1).1),
            SurfaceProfile::Multiscale { .. } => Ok(self.multiscale_derivs(x1).1),
            SurfaceProfile::Tabulated { xs, hs, interpolation, spline_m } => {
                tabulated_eval(xs, hs, *interpolation, spline_m, x1).map(|v| v.1)
            }
        }
    }

    /// Second derivative h''(x1) (zero a.e. for piecewise-linear kinds).
    pub fn second_derivative(&self, x1: f64) -> Result<f64> {
        if !x1.is_finite() {
            return Err(Error::domain("second_derivative: non-finite abscissa"));
        }
        match self {
            SurfaceProfile::Flat | SurfaceProfile::PiecewiseLinear { .. } => Ok(0.0),
            SurfaceProfile::SplineBumps { amplitudes, centers, widths } => Ok(amplitudes
                .iter()
                .zip(centers)
                .zip(widths)
                .map(|((&a, &c), &w)| a / (w * w) * bspline_phi_d2((x1 - c) / w))
                .sum()),
            SurfaceProfile::Multiscale { .. } => Ok(self.multiscale_derivs(x1).2),
            SurfaceProfile::Tabulated { xs, hs, interpolation, spline_m } => {
                tabulated_eval(xs, hs, *interpolation, spline_m, x1).map(|v| v.2)
            }
        }
    }

    fn multiscale_derivs(&self, x: f64) -> (f64, f64, f64) {
        let SurfaceProfile::Multiscale {
            amplitude,
            base,
            micro_amp,
            micro_freq,
            macro_freq,
            half_support,
        } = self
        else {
            unreachable!()
        };
        let s = *half_support;
        if x.abs() >= s {
            return (0.0, 0.0, 0.0);
        }
        let pi = std::f64::consts::PI;
        let s2 = s * s;
        let u = x * x - s2;
        let e = (s2 / u).exp();
        if e == 0.0 {
            // envelope underflowed; all derivatives vanish with it
            return (0.0, 0.0, 0.0);
        }
        let e1 = e * (-2.0 * s2 * x / (u * u));
        let e2 = e * (4.0 * s2 * s2 * x * x / u.powi(4) - 2.0 * s2 / (u * u)
            + 8.0 * s2 * x * x / u.powi(3));
        let wm = micro_freq * pi;
        let wg = macro_freq * pi;
        let m = base + micro_amp * (wm * x).sin();
        let m1 = micro_amp * wm * (wm * x).cos();
        let m2 = -micro_amp * wm * wm * (wm * x).sin();
        let g = (wg * x).sin();
        let g1 = wg * (wg * x).cos();
        let g2 = -wg * wg * (wg * x).sin();
        let h = amplitude * e * m * g;
        let h1 = amplitude * (e1 * m * g + e * m1 * g + e * m * g1);
        let h2 = amplitude
            * (e2 * m * g
                + e * m2 * g
                + e * m * g2
                + 2.0 * (e1 * m1 * g + e1 * m * g1 + e * m1 * g1));
        (h, h1, h2)
    }

    /// Signed curvature of the graph at x1.
    pub fn curvature(&self, x1: f64) -> Result<f64> {
        let d1 = self.derivative(x1)?;
        let d2 = self.second_derivative(x1)?;
        Ok(d2 / (1.0 + d1 * d1).powf(1.5))
    }
}

fn piecewise_eval(nodes: &[(f64, f64)], x: f64) -> (f64, f64) {
    let n = nodes.len();
    if x < nodes[0].0 || x > nodes[n - 1].0 {
        return (0.0, 0.0);
    }
    if x == nodes[n - 1].0 {
        return (nodes[n - 1].1, 0.0);
    }
    // right-hand segment at corners
    let i = nodes.partition_point(|&(xi, _)| xi <= x) - 1;
    let (x0, y0) = nodes[i];
    let (x1, y1) = nodes[i + 1];
    let slope = (y1 - y0) / (x1 - x0);
    (y0 + slope * (x - x0), slope)
}

fn natural_spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior tridiagonal system
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for i in 2..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let w = h0 / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

fn tabulated_eval(
    xs: &[f64],
    hs: &[f64],
    interp: Interpolation,
    spline_m: &[f64],
    x: f64,
) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return Err(Error::domain(format!(
            "tabulated profile queried at {x} outside table [{}, {}]",
            xs[0],
            xs[n - 1]
        )));
    }
    let i = if x == xs[n - 1] {
        n - 2
    } else {
        xs.partition_point(|&xi| xi <= x) - 1
    };
    let h = xs[i + 1] - xs[i];
    match interp {
        Interpolation::Linear => {
            let slope = (hs[i + 1] - hs[i]) / h;
            Ok((hs[i] + slope * (x - xs[i]), slope, 0.0))
        }
        Interpolation::Cubic => {
            let a = (xs[i + 1] - x) / h;
            let b = (x - xs[i]) / h;
            let (m0, m1) = (spline_m[i], spline_m[i + 1]);
            let val = a * hs[i]
                + b * hs[i + 1]
                + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
            let d1 = (hs[i + 1] - hs[i]) / h
                + ((3.0 * b * b - 1.0) * m1 - (3.0 * a * a - 1.0) * m0) * h / 6.0;
            let d2 = a * m0 + b * m1;
            Ok((val, d1, d2))
        }
    }
}

// ---------------------------------------------------------------------------
// boundary mesh
// ---------------------------------------------------------------------------

/// One quadrature node of the discretized boundary curve.
#[derive(Clone, Debug)]
pub struct MeshNode {
    /// abscissa x1 (the parameter of the graph)
    pub t: f64,
    pub point: [f64; 2],
    /// unit normal pointing into the upper domain
    pub normal: [f64; 2],
    /// sqrt(1 + h'(t)^2)
    pub arc_factor: f64,
    pub curvature: f64,
    /// Gauss-Legendre weight in the parameter
    pub param_weight: f64,
    /// arc-length weight: param_weight * arc_factor
    pub weight: f64,
}

/// One Gauss-Legendre panel of the mesh.
#[derive(Clone, Debug)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// index of the panel's first node in the mesh node list
    pub first_node: usize,
}

impl Panel {
    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
    pub fn half_len(&self) -> f64 {
        0.5 * (self.b - self.a)
    }
}

/// Discretized truncated boundary curve.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    profile: SurfaceProfile,
    k: f64,
    points_per_wavelength: f64,
    interval: (f64, f64),
    panels: Vec<Panel>,
    nodes: Vec<MeshNode>,
    degenerate_flat: bool,
}

/// Default truncation margin: half a wavelength beyond the support.
pub fn default_margin(k: f64) -> f64 {
    std::f64::consts::PI / k
}

/// Builds the boundary mesh for `profile` at wavenumber `k`.
///
/// The mesh covers `[a - margin, b + margin]` where `[a, b]` is the support
/// hull, with uniform-in-x1 panels (corner-aligned for piecewise-linear
/// profiles) sized so the arc-length node spacing stays below
/// `wavelength / points_per_wavelength`. Panels are bisected further only if
/// their 8-point arc-length integral has not converged, which matters for
/// profiles with features finer than the wavelength.
pub fn build_mesh(
    profile: &SurfaceProfile,
    k: f64,
    points_per_wavelength: f64,
    margin: f64,
) -> Result<BoundaryMesh> {
    if !(k > 0.0) {
        return Err(Error::domain("build_mesh: wavenumber must be positive"));
    }
    if !(points_per_wavelength >= 6.0) {
        return Err(Error::domain(
            "build_mesh: points_per_wavelength must be at least 6",
        ));
    }
    if !(margin >= 0.0) {
        return Err(Error::domain("build_mesh: margin must be nonnegative"));
    }
    let support = profile.support();
    let (lo, hi) = match support {
        Some((a, b)) => (a - margin, b + margin),
        None => (-margin, margin),
    };
    if hi <= lo {
        // flat profile with zero margin: degenerate placeholder mesh
        let node = MeshNode {
            t: 0.0,
            point: [0.0, 0.0],
            normal: [0.0, 1.0],
            arc_factor: 1.0,
            curvature: 0.0,
            param_weight: 0.0,
            weight: 0.0,
        };
        return Ok(BoundaryMesh {
            profile: profile.clone(),
            k,
            points_per_wavelength,
            interval: (0.0, 0.0),
            panels: vec![],
            nodes: vec![node.clone(), node],
            degenerate_flat: true,
        });
    }

    let wavelength = 2.0 * std::f64::consts::PI / k;
    let (gl_nodes, _) = panel_rule();
    // largest node gap of the reference rule on [-1, 1], including the gap
    // across a panel boundary between two equal panels
    let mut max_gap: f64 = 2.0 * (1.0 - gl_nodes.last().unwrap());
    for w in gl_nodes.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    let max_arc = max_arc_factor(profile, lo, hi)?;
    let spacing = wavelength / points_per_wavelength;
    // both the worst-gap bound and a density floor of one node per
    // half-spacing of arc
    let target_len =
        (spacing * 2.0 / max_gap).min(spacing * gl_nodes.len() as f64 / 2.0) / max_arc;

    // panel boundaries must align with corners, with the support edges, and
    // with interior zero crossings of h: where the curve meets the line
    // x2 = 0 the image kernel makes the layer density discontinuous, so the
    // jump has to sit on a panel boundary
    let mut breakpoints = vec![lo];
    if let SurfaceProfile::PiecewiseLinear { nodes } = profile {
        for &(x, _) in nodes {
            if x > lo && x < hi {
                breakpoints.push(x);
            }
        }
    }
    if let Some((a, b)) = support {
        for x in [a, b] {
            if x > lo && x < hi {
                breakpoints.push(x);
            }
        }
        for x in zero_crossings(profile, a, b)? {
            if x > lo && x < hi {
                breakpoints.push(x);
            }
        }
    }
    breakpoints.push(hi);
    breakpoints.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breakpoints.dedup_by(|p, q| (*p - *q).abs() < 1e-12 * (hi - lo));

    let crossings: Vec<f64> = match support {
        Some((a, b)) => zero_crossings(profile, a, b)?,
        None => vec![],
    };
    let mut panels_param: Vec<(f64, f64)> = Vec::new();
    for piece in breakpoints.windows(2) {
        let len = piece[1] - piece[0];
        let n = (len / target_len).ceil().max(1.0) as usize;
        let step = len / n as f64;
        for i in 0..n {
            let a = piece[0] + i as f64 * step;
            let b = if i + 1 == n { piece[1] } else { a + step };
            // grade dyadically toward a zero crossing at either end: the
            // density transition there is self-similar at the height scale
            let tol = 1e-12 * (hi - lo);
            let graded_levels = 5;
            if crossings.iter().any(|&c| (c - b).abs() < tol) {
                let mut left = a;
                for j in (1..=graded_levels).rev() {
                    let cut = b - (b - a) * 0.5f64.powi(graded_levels - j + 1);
                    panels_param.push((left, cut));
                    left = cut;
                }
                panels_param.push((left, b));
            } else if crossings.iter().any(|&c| (c - a).abs() < tol) {
                let mut cuts: Vec<f64> = (1..=graded_levels)
                    .map(|j| a + (b - a) * 0.5f64.powi(graded_levels - j + 1))
                    .collect();
                cuts.push(b);
                let mut left = a;
                for cut in cuts {
                    panels_param.push((left, cut));
                    left = cut;
                }
            } else {
                panels_param.push((a, b));
            }
        }
    }

    // bisect panels whose arc-length quadrature has not converged
    let mut rounds = 0;
    loop {
        let mut refined = Vec::with_capacity(panels_param.len());
        let mut changed = false;
        for &(a, b) in &panels_param {
            let whole = panel_arc_length(profile, a, b)?;
            let mid = 0.5 * (a + b);
            let halves = panel_arc_length(profile, a, mid)? + panel_arc_length(profile, mid, b)?;
            if (whole - halves).abs() > 1e-13 * (hi - lo).max(1.0) {
                refined.push((a, mid));
                refined.push((mid, b));
                changed = true;
            } else {
                refined.push((a, b));
            }
        }
        panels_param = refined;
        rounds += 1;
        if !changed || rounds >= 14 {
            break;
        }
    }

    let (gl_nodes, gl_weights) = panel_rule();
    let mut panels = Vec::with_capacity(panels_param.len());
    let mut nodes = Vec::with_capacity(panels_param.len() * gl_nodes.len());
    for &(a, b) in &panels_param {
        panels.push(Panel { a, b, first_node: nodes.len() });
        let c = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (u, w) in gl_nodes.iter().zip(gl_weights) {
            let t = c + half * u;
            let h = profile.height(t)?;
            let d1 = profile.derivative(t)?;
            let kappa = profile.curvature(t)?;
            let arc = (1.0 + d1 * d1).sqrt();
            let pw = w * half;
            nodes.push(MeshNode {
                t,
                point: [t, h],
                normal: [-d1 / arc, 1.0 / arc],
                arc_factor: arc,
                curvature: kappa,
                param_weight: pw,
                weight: pw * arc,
            });
        }
    }

    Ok(BoundaryMesh {
        profile: profile.clone(),
        k,
        points_per_wavelength,
        interval: (lo, hi),
        panels,
        nodes,
        degenerate_flat: false,
    })
}

/// Sign changes of h inside the support, located by scan + bisection.
fn zero_crossings(profile: &SurfaceProfile, a: f64, b: f64) -> Result<Vec<f64>> {
    let samples = 4096;
    let mut out = Vec::new();
    let mut prev_x = a;
    let mut prev_h = profile.height(a)?;
    for i in 1..=samples {
        let x = a + (b - a) * i as f64 / samples as f64;
        let h = profile.height(x)?;
        if prev_h != 0.0 && h != 0.0 && prev_h.signum() != h.signum() {
            let (mut xl, mut xr, mut hl) = (prev_x, x, prev_h);
            for _ in 0..80 {
                let xm = 0.5 * (xl + xr);
                let hm = profile.height(xm)?;
                if hm == 0.0 {
                    xl = xm;
                    break;
                }
                if hm.signum() == hl.signum() {
                    xl = xm;
                    hl = hm;
                } else {
                    xr = xm;
                }
                if xr - xl < 1e-15 * (b - a).abs().max(1.0) {
                    break;
                }
            }
            out.push(0.5 * (xl + xr));
        }
        prev_x = x;
        prev_h = h;
    }
    Ok(out)
}

fn max_arc_factor(profile: &SurfaceProfile, lo: f64, hi: f64) -> Result<f64> {
    let samples = 4096;
    let mut max = 1.0f64;
    for i in 0..=samples {
        let t = lo + (hi - lo) * i as f64 / samples as f64;
        let d = profile.derivative(t)?;
        max = max.max((1.0 + d * d).sqrt());
    }
    Ok(max * 1.02)
}

fn panel_arc_length(profile: &SurfaceProfile, a: f64, b: f64) -> Result<f64> {
    let (gl_nodes, gl_weights) = panel_rule();
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (u, w) in gl_nodes.iter().zip(gl_weights) {
        let d = profile.derivative(c + half * u)?;
        acc += w * (1.0 + d * d).sqrt();
    }
    Ok(acc * half)
}

impl BoundaryMesh {
    pub fn profile(&self) -> &SurfaceProfile {
        &self.profile
    }
    pub fn wavenumber(&self) -> f64 {
        self.k
    }
    pub fn points_per_wavelength(&self) -> f64 {
        self.points_per_wavelength
    }
    /// Truncated parameter interval `[a - margin, b + margin]`.
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }
    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }
    pub fn nodes(&self) -> &[MeshNode] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    /// True for the placeholder mesh of a flat profile with zero margin.
    pub fn is_degenerate_flat(&self) -> bool {
        self.degenerate_flat
    }
    /// Node indices of one panel.
    pub fn panel_nodes(&self, p: usize) -> std::ops::Range<usize> {
        let first = self.panels[p].first_node;
        let last = self
            .panels
            .get(p + 1)
            .map_or(self.nodes.len(), |q| q.first_node);
        first..last
    }
    /// Sum of the arc-length weights.
    pub fn arc_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Independent Cox-de Boor evaluation of the centered cardinal B-spline
    /// of order `k` (degree k-1).
    fn cardinal_bspline(order: usize, x: f64) -> f64 {
        if order == 1 {
            return if (-0.5..0.5).contains(&x) { 1.0 } else { 0.0 };
        }
        let k = order as f64;
        ((k / 2.0 + x) * cardinal_bspline(order - 1, x + 0.5)
            + (k / 2.0 - x) * cardinal_bspline(order - 1, x - 0.5))
            / (k - 1.0)
    }

    #[test]
    fn phi_matches_cox_de_boor() {
        let mut x = -2.6;
        while x < 2.6 {
            let want = cardinal_bspline(5, x);
            let got = bspline_phi(x);
            assert!((got - want).abs() < 1e-13, "phi({x}): {got} vs {want}");
            x += 0.037;
        }
    }

    #[test]
    fn flat_profile_is_zero() {
        let p = SurfaceProfile::Flat;
        for x in [-3.0, 0.0, 17.5] {
            assert_eq!(p.height(x).unwrap(), 0.0);
        }
    }

    #[test]
    fn piecewise_linear_interpolates_nodes() {
        let p = SurfaceProfile::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert_eq!(p.height(1.0).unwrap(), 1.0);
        assert_eq!(p.height(0.5).unwrap(), 0.5);
        // right-hand slope at the corner
        assert_eq!(p.derivative(1.0).unwrap(), -1.0);
        assert_eq!(p.height(2.5).unwrap(), 0.0);
    }

    #[test]
    fn example1_matches_direct_bspline_sum() {
        let p = SurfaceProfile::example1();
        let x = 0.2;
        let want = 0.1 * cardinal_bspline(5, (x + 0.2) / 0.3)
            - 0.08 * cardinal_bspline(5, (x - 0.3) / 0.2);
        let got = p.height(x).unwrap();
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn example1_support_and_vanishing() {
        let p = SurfaceProfile::example1();
        let (lo, hi) = p.support().unwrap();
        assert!(lo >= -1.7 && hi <= 1.3, "support ({lo}, {hi})");
        for x in [-1.7, lo - 1e-9, hi + 1e-9, 1.3, 5.0] {
            assert_eq!(p.height(x).unwrap(), 0.0, "h({x}) must vanish");
            assert_eq!(p.derivative(x).unwrap(), 0.0);
        }
    }

    #[test]
    fn example3_vanishes_at_support_edge() {
        let p = SurfaceProfile::example3();
        let s = 0.8;
        for sign in [-1.0, 1.0] {
            let outside = sign * (s + 1e-6);
            let inside = sign * (s - 1e-6);
            assert_eq!(p.height(outside).unwrap(), 0.0);
            assert_eq!(p.derivative(outside).unwrap(), 0.0);
            assert!(p.height(inside).unwrap().abs() < 1e-300);
            assert!(p.derivative(inside).unwrap().abs() < 1e-300);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let profiles = [
            SurfaceProfile::example1(),
            SurfaceProfile::example3(),
            SurfaceProfile::tabulated(
                (0..=40).map(|i| -1.0 + i as f64 * 0.05).collect(),
                (0..=40)
                    .map(|i| {
                        let x: f64 = -1.0 + i as f64 * 0.05;
                        0.1 * (std::f64::consts::PI * x).sin().powi(2)
                    })
                    .collect(),
                Interpolation::Cubic,
            )
            .unwrap(),
        ];
        for p in &profiles {
            let (lo, hi) = p.support().unwrap();
            let n = 50;
            for i in 1..n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                let d = p.derivative(x).unwrap();
                let eps = 1e-6;
                if let SurfaceProfile::Tabulated { xs, .. } = p {
                    // keep the stencil inside a single segment
                    let seg = xs.windows(2).any(|w| x - eps > w[0] && x + eps < w[1]);
                    if !seg {
                        continue;
                    }
                }
                let fd =
                    (p.height(x + eps).unwrap() - p.height(x - eps).unwrap()) / (2.0 * eps);
                let scale = d.abs().max(1e-3);
                assert!(
                    (d - fd).abs() / scale < 1e-6,
                    "{} at {x}: d={d} fd={fd}",
                    p.kind_name()
                );
            }
        }
    }

    #[test]
    fn second_derivative_matches_fd_of_first() {
        let p = SurfaceProfile::example3();
        for i in 1..40 {
            let x = -0.78 + 1.56 * i as f64 / 40.0;
            let d2 = p.second_derivative(x).unwrap();
            let eps = 1e-5;
            let fd = (p.derivative(x + eps).unwrap() - p.derivative(x - eps).unwrap())
                / (2.0 * eps);
            assert!(
                (d2 - fd).abs() / d2.abs().max(1.0) < 1e-4,
                "at {x}: {d2} vs {fd}"
            );
        }
    }

    #[test]
    fn tabulated_outside_table_is_domain_error() {
        let p = SurfaceProfile::tabulated(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 0.5, 0.0],
            Interpolation::Linear,
        )
        .unwrap();
        assert!(p.height(-0.1).is_err());
        assert!(p.height(2.1).is_err());
        assert!(p.height(1.5).is_ok());
    }

    #[test]
    fn flat_mesh_with_margin() {
        let mesh = build_mesh(&SurfaceProfile::Flat, std::f64::consts::PI, 10.0, 1.0).unwrap();
        let (lo, hi) = mesh.interval();
        assert_eq!((lo, hi), (-1.0, 1.0));
        // wavelength 2, so >= 10 nodes per unit length
        assert!(mesh.len() >= 20, "{} nodes", mesh.len());
        assert!(!mesh.is_degenerate_flat());
    }

    #[test]
    fn degenerate_flat_mesh() {
        let mesh = build_mesh(&SurfaceProfile::Flat, 1.0, 10.0, 0.0).unwrap();
        assert!(mesh.is_degenerate_flat());
        assert_eq!(mesh.len(), 2);
    }

    #[test]
    fn mesh_spacing_bound_example1_k40() {
        let p = SurfaceProfile::example1();
        let k = 40.0;
        let mesh = build_mesh(&p, k, 10.0, default_margin(k)).unwrap();
        let bound = 2.0 * std::f64::consts::PI / k / 10.0;
        let nodes = mesh.nodes();
        for w in nodes.windows(2) {
            // arc length between consecutive nodes via fine quadrature
            let arc = crate::quadrature::adaptive_quad(
                |t| Complex64::new((1.0 + p.derivative(t).unwrap().powi(2)).sqrt(), 0.0),
                w[0].t,
                w[1].t,
                1e-12,
            )
            .unwrap()
            .re;
            assert!(
                arc <= bound * (1.0 + 1e-9),
                "gap {arc} exceeds {bound} at t={}",
                w[0].t
            );
        }
    }

    #[test]
    fn mesh_weights_sum_to_arc_length() {
        for (p, k) in [
            (SurfaceProfile::example1(), 10.0),
            (SurfaceProfile::example3(), 40.0),
            (SurfaceProfile::example2(), 15.0),
        ] {
            let mesh = build_mesh(&p, k, 10.0, default_margin(k)).unwrap();
            let (lo, hi) = mesh.interval();
            let oracle = crate::quadrature::adaptive_quad(
                |t| Complex64::new((1.0 + p.derivative(t).unwrap().powi(2)).sqrt(), 0.0),
                lo,
                hi,
                1e-12,
            )
            .unwrap()
            .re;
            let sum = mesh.arc_length();
            assert!(
                (sum - oracle).abs() < 1e-8,
                "{}: weights {sum} vs arc {oracle}",
                p.kind_name()
            );
        }
    }

    #[test]
    fn normals_are_unit_and_upward() {
        let mesh = build_mesh(&SurfaceProfile::example1(), 10.0, 10.0, 0.3).unwrap();
        for n in mesh.nodes() {
            let norm = (n.normal[0] * n.normal[0] + n.normal[1] * n.normal[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(n.normal[1] > 0.0);
        }
    }
}
