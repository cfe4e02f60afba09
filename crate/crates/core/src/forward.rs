//! Direct scattering solver for the sound-soft locally rough surface.
//!
//! The scattered field is represented as a combined double/single layer
//! potential over the truncated boundary curve, built on the half-plane
//! Dirichlet Green's function
//!
//! ```text
//! G(x, y) = Phi_k(x, y) - Phi_k(x, y'),   y' = (y1, -y2),
//! ```
//!
//! which vanishes identically whenever either argument lies on the line
//! `x2 = 0`. The Dirichlet condition on the flat part of the curve is
//! therefore satisfied exactly and the unknown density lives on a bounded
//! arc. Collocation at the mesh nodes yields the second-kind system
//! `psi/2 + (K + i eta S) psi = -u0` with coupling `eta = max(k, 1)`.
//!
//! Log singularities of the on-curve kernels are split off analytically and
//! integrated with exact log-weighted panel quadrature; the image kernel,
//! which is sharply peaked where the surface height is small, is handled by
//! adaptive panel refinement.

use crate::error::{Error, Result};
use crate::exec;
use crate::quadrature::{
    adaptive_quad, barycentric_eval, barycentric_weights, log_weights, panel_rule,
};
use crate::specialfun::{h0_raw, h1_raw, j0_raw, j1_raw, EULER_GAMMA};
use crate::surface::{BoundaryMesh, MeshNode};
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// incident field and directions
// ---------------------------------------------------------------------------

/// A downward-pointing plane-wave direction on the lower unit half circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentDirection {
    theta: f64,
    d: [f64; 2],
}

impl IncidentDirection {
    /// Builds a direction from its angle `theta_d` in `(pi, 2 pi)`.
    pub fn from_angle(theta: f64) -> Result<Self> {
        if !(theta > PI && theta < 2.0 * PI) {
            return Err(Error::domain(format!(
                "incident direction angle must lie in (pi, 2 pi), got {theta}"
            )));
        }
        Ok(IncidentDirection { theta, d: [theta.cos(), theta.sin()] })
    }

    pub fn angle(&self) -> f64 {
        self.theta
    }

    /// Cartesian components `(cos theta, sin theta)`; the second is negative.
    pub fn components(&self) -> [f64; 2] {
        self.d
    }

    /// The mirrored direction `d' = (d1, -d2)` (points upward).
    pub fn reflected(&self) -> [f64; 2] {
        [self.d[0], -self.d[1]]
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Plane wave `u^i(x, d) = e^{i k x . d}`.
#[inline]
pub fn plane_wave(k: f64, d: IncidentDirection, x: [f64; 2]) -> C64 {
    C64::cis(k * dot(x, d.components()))
}

/// Reflected wave `u^r(x, d) = -e^{i k x . d'}`.
#[inline]
pub fn reflected_wave(k: f64, d: IncidentDirection, x: [f64; 2]) -> C64 {
    -C64::cis(k * dot(x, d.reflected()))
}

/// `u^0 = u^i + u^r = e^{ikx.d} - e^{ikx.d'}`; exactly zero on the line
/// `x2 = 0` because both phases coincide there.
#[inline]
pub fn incident_trace(k: f64, d: IncidentDirection, x: [f64; 2]) -> C64 {
    C64::cis(k * dot(x, d.components())) - C64::cis(k * dot(x, d.reflected()))
}

/// Combined-field coupling parameter.
#[inline]
pub fn coupling(k: f64) -> f64 {
    k.max(1.0)
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

/// Free-space Green's function `Phi_k(x, y) = (i/4) H_0^(1)(k |x-y|)`.
#[inline]
pub fn greens_free(k: f64, x: [f64; 2], y: [f64; 2]) -> C64 {
    let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
    0.25 * I * h0_raw(k * r)
}

/// Half-plane Dirichlet kernel `G(x,y) = Phi_k(x,y) - Phi_k(x,y')`.
#[inline]
pub fn greens_half_plane(k: f64, x: [f64; 2], y: [f64; 2]) -> C64 {
    greens_free(k, x, y) - greens_free(k, x, [y[0], -y[1]])
}

/// Direct single-layer kernel (i/4) H0(kr).
#[inline]
fn s_direct(k: f64, r: f64) -> C64 {
    0.25 * I * h0_raw(k * r)
}

/// Direct double-layer kernel (ik/4) H1(kr) ((x-y).nu)/r.
#[inline]
fn k_direct(k: f64, x: [f64; 2], y: [f64; 2], nu: [f64; 2], r: f64) -> C64 {
    let q = ((x[0] - y[0]) * nu[0] + (x[1] - y[1]) * nu[1]) / r;
    0.25 * I * k * h1_raw(k * r) * q
}

/// Image single-layer kernel Phi_k(x, y').
#[inline]
fn s_image(k: f64, x: [f64; 2], y: [f64; 2]) -> C64 {
    let rp = ((x[0] - y[0]).powi(2) + (x[1] + y[1]).powi(2)).sqrt();
    0.25 * I * h0_raw(k * rp)
}

/// Image double-layer kernel d/d nu(y) Phi_k(x, y').
#[inline]
fn k_image(k: f64, x: [f64; 2], y: [f64; 2], nu: [f64; 2], rp: f64) -> C64 {
    let q = ((x[0] - y[0]) * nu[0] - (x[1] + y[1]) * nu[1]) / rp;
    0.25 * I * k * h1_raw(k * rp) * q
}

/// Combined far-field kernel coefficient of the layer representation:
/// `u^inf(xhat) = sum_j ff_kernel(xhat, y_j, nu_j) psi_j w_j`.
#[inline]
fn ff_kernel(k: f64, eta: f64, xhat: [f64; 2], y: [f64; 2], nu: [f64; 2]) -> C64 {
    let c_inf = C64::from_polar(1.0 / (8.0 * PI * k).sqrt(), PI / 4.0);
    let xhat_m = [xhat[0], -xhat[1]];
    let direct = (-I * k * dot(xhat, nu) + I * eta) * C64::cis(-k * dot(xhat, y));
    let image =
        (-I * k * dot(xhat_m, nu) + I * eta) * C64::cis(-k * (xhat[0] * y[0] - xhat[1] * y[1]));
    c_inf * (direct - image)
}

// ---------------------------------------------------------------------------
// layer density
// ---------------------------------------------------------------------------

/// Solution density of the boundary integral equation for one incident
/// direction.
#[derive(Clone, Debug)]
pub struct LayerDensity {
    pub direction: IncidentDirection,
    pub values: Vec<C64>,
    /// max-norm residual of the discrete system
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

/// Assembled and factorized boundary solver for one (mesh, wavenumber) pair.
///
/// The matrix depends only on geometry and `k`, so it is factorized once and
/// reused for every incident direction. Immutable after construction; all
/// evaluation methods take `&self` and are safe to call concurrently.
pub struct ForwardSolver {
    mesh: BoundaryMesh,
    k: f64,
    eta: f64,
    matrix: DMatrix<C64>,
    lu: nalgebra::linalg::LU<C64, Dyn, Dyn>,
    bary: Vec<f64>,
}

impl ForwardSolver {
    /// Assembles the collocation matrix and computes its LU factorization.
    pub fn new(mesh: BoundaryMesh) -> Result<Self> {
        if mesh.points_per_wavelength() < 6.0 {
            return Err(Error::contract(
                "forward solver requires at least 6 points per wavelength",
            ));
        }
        let k = mesh.wavenumber();
        let eta = coupling(k);
        let n = mesh.len();
        let (gl_nodes, _) = panel_rule();
        let bary = barycentric_weights(gl_nodes);

        let rows = exec::map_indexed(n, |i| {
            let target = &mesh.nodes()[i];
            let mut row = vec![C64::new(0.0, 0.0); n];
            if target.point[1] != 0.0 {
                for p in 0..mesh.panels().len() {
                    let range = mesh.panel_nodes(p);
                    let w = panel_row_weights(&mesh, k, eta, target.t, target.point, p);
                    for (j, wj) in range.zip(w) {
                        row[j] += wj;
                    }
                }
            }
            // else: target on the flat line, where G(x, .) vanishes
            // identically and the row reduces to the jump term
            row[i] += C64::new(0.5, 0.0);
            row
        });

        let mut matrix = DMatrix::<C64>::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                matrix[(i, j)] = *v;
            }
        }

        let lu = matrix.clone().lu();
        // cheap singularity probe: solve against a fixed right-hand side
        let probe = DVector::<C64>::from_element(n, C64::new(1.0, 0.0));
        let sol = lu.solve(&probe).ok_or_else(|| Error::Solver {
            reason: "LU factorization is singular".into(),
            cond_estimate: f64::INFINITY,
        })?;
        let norm_a = matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let cond_estimate = norm_a * sol.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if !cond_estimate.is_finite() || cond_estimate > 1e14 {
            return Err(Error::Solver {
                reason: "discrete system is numerically singular".into(),
                cond_estimate,
            });
        }

        Ok(ForwardSolver { mesh, k, eta, matrix, lu, bary })
    }

    pub fn mesh(&self) -> &BoundaryMesh {
        &self.mesh
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    /// Solves the boundary equation for one incident direction.
    pub fn solve(&self, d: IncidentDirection) -> Result<LayerDensity> {
        let n = self.mesh.len();
        let rhs = DVector::<C64>::from_iterator(
            n,
            self.mesh
                .nodes()
                .iter()
                .map(|node| -incident_trace(self.k, d, node.point)),
        );
        let sol = self.lu.solve(&rhs).ok_or_else(|| Error::Solver {
            reason: "LU solve failed".into(),
            cond_estimate: f64::INFINITY,
        })?;
        let residual = (&self.matrix * &sol - &rhs)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        if residual > 1e-10 {
            return Err(Error::Solver {
                reason: format!("discrete residual {residual:.3e} exceeds 1e-10"),
                cond_estimate: residual / f64::EPSILON,
            });
        }
        Ok(LayerDensity {
            direction: d,
            values: sol.iter().copied().collect(),
            residual,
        })
    }

    /// One-shot assembly + solve for a single direction. Prefer building the
    /// solver once and calling [`ForwardSolver::solve`] per direction.
    pub fn assemble_and_solve(mesh: BoundaryMesh, d: IncidentDirection) -> Result<LayerDensity> {
        ForwardSolver::new(mesh)?.solve(d)
    }

    /// Scattered field `u^s(x, d)` at a point strictly above the curve.
    ///
    /// Within one mesh spacing of the curve a near-singular warning is
    /// logged and the value is computed by adaptive panel refinement.
    pub fn scattered_near(&self, density: &LayerDensity, x: [f64; 2]) -> Result<C64> {
        if self.mesh.is_degenerate_flat() {
            return Ok(C64::new(0.0, 0.0));
        }
        let h_here = self.height_extended(x[0])?;
        if x[1] <= h_here {
            return Err(Error::domain(format!(
                "scattered_near: point ({}, {}) is not above the surface",
                x[0], x[1]
            )));
        }
        let spacing = 2.0 * PI / self.k / self.mesh.points_per_wavelength();
        let dist = self.distance_to_curve(x);
        if dist < spacing {
            log::warn!(
                "near-singular field evaluation at ({}, {}): distance {dist:.3e} below one mesh spacing {spacing:.3e}; using refined quadrature",
                x[0],
                x[1]
            );
        }
        Ok(self.layer_potential(density, x))
    }

    /// Boundary limit of the scattered field from above, at the curve point
    /// with abscissa `x1` (may lie between mesh nodes).
    pub fn boundary_trace(&self, density: &LayerDensity, x1: f64) -> Result<C64> {
        if self.mesh.is_degenerate_flat() {
            return Ok(C64::new(0.0, 0.0));
        }
        let (lo, hi) = self.mesh.interval();
        if x1 < lo || x1 > hi {
            return Err(Error::domain(format!(
                "boundary_trace: abscissa {x1} outside the truncated curve [{lo}, {hi}]"
            )));
        }
        let h = self.mesh.profile().height(x1)?;
        let point = [x1, h];
        let mut acc = 0.5 * self.interpolate_density(density, x1);
        if point[1] != 0.0 {
            for p in 0..self.mesh.panels().len() {
                let w = panel_row_weights(&self.mesh, self.k, self.eta, x1, point, p);
                for (j, wj) in self.mesh.panel_nodes(p).zip(w) {
                    acc += wj * density.values[j];
                }
            }
        }
        Ok(acc)
    }

    /// Far-field pattern `u^inf(xhat, d)` for an observation direction on
    /// the upper unit half circle.
    pub fn far_field(&self, density: &LayerDensity, xhat: [f64; 2]) -> Result<C64> {
        let norm = (xhat[0] * xhat[0] + xhat[1] * xhat[1]).sqrt();
        if !(xhat[1] > 0.0) || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!(
                "far_field: observation direction ({}, {}) must be a unit vector with positive second component",
                xhat[0], xhat[1]
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (node, psi) in self.mesh.nodes().iter().zip(&density.values) {
            acc += ff_kernel(self.k, self.eta, xhat, node.point, node.normal) * psi * node.weight;
        }
        Ok(acc)
    }

    /// Total field `u = u^i + u^r + u^s` at `x`. Points on the curve (within
    /// 1e-9) are evaluated through the boundary trace.
    pub fn total_field(&self, density: &LayerDensity, x: [f64; 2]) -> Result<C64> {
        let u0 = incident_trace(self.k, density.direction, x);
        let (lo, hi) = self.mesh.interval();
        if x[0] >= lo && x[0] <= hi && !self.mesh.is_degenerate_flat() {
            let h = self.mesh.profile().height(x[0])?;
            if (x[1] - h).abs() < 1e-9 {
                return Ok(u0 + self.boundary_trace(density, x[0])?);
            }
        }
        Ok(u0 + self.scattered_near(density, x)?)
    }

    /// `|u(x, d)|`.
    pub fn total_field_magnitude(&self, density: &LayerDensity, x: [f64; 2]) -> Result<f64> {
        Ok(self.total_field(density, x)?.norm())
    }

    // -- internals ----------------------------------------------------------

    /// Height of the surface, treating everything outside the truncated
    /// interval as flat.
    fn height_extended(&self, x1: f64) -> Result<f64> {
        let (lo, hi) = self.mesh.interval();
        if x1 >= lo && x1 <= hi && !self.mesh.is_degenerate_flat() {
            self.mesh.profile().height(x1)
        } else {
            Ok(0.0)
        }
    }

    fn distance_to_curve(&self, x: [f64; 2]) -> f64 {
        self.mesh
            .nodes()
            .iter()
            .map(|n| ((x[0] - n.point[0]).powi(2) + (x[1] - n.point[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Interpolates the density at an off-node abscissa using the
    /// barycentric form on the containing panel.
    fn interpolate_density(&self, density: &LayerDensity, x1: f64) -> C64 {
        let panels = self.mesh.panels();
        let p = panels
            .partition_point(|panel| panel.b < x1)
            .min(panels.len() - 1);
        let panel = &panels[p];
        let (gl_nodes, _) = panel_rule();
        let u = (x1 - panel.center()) / panel.half_len();
        let range = self.mesh.panel_nodes(p);
        let vals: Vec<C64> = density.values[range].to_vec();
        barycentric_eval(gl_nodes, &self.bary, &vals, u)
    }

    /// Combined-layer potential at an off-curve point.
    fn layer_potential(&self, density: &LayerDensity, x: [f64; 2]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        let k = self.k;
        let eta = self.eta;
        for (p, panel) in self.mesh.panels().iter().enumerate() {
            let range = self.mesh.panel_nodes(p);
            let nodes = &self.mesh.nodes()[range.clone()];
            let plen = panel.b - panel.a;
            let near_direct = nodes
                .iter()
                .map(|n| ((x[0] - n.point[0]).powi(2) + (x[1] - n.point[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
                < plen;
            let near_image = nodes
                .iter()
                .map(|n| ((x[0] - n.point[0]).powi(2) + (x[1] + n.point[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
                < plen;
            if near_direct || near_image {
                // adaptive refinement of the panel against the interpolated
                // density
                let profile = self.mesh.profile();
                let (gl_nodes, _) = panel_rule();
                let vals: Vec<C64> = density.values[range].to_vec();
                let integrand = |t: f64| {
                    let h = profile.height(t).unwrap_or(0.0);
                    let d1 = profile.derivative(t).unwrap_or(0.0);
                    let arc = (1.0 + d1 * d1).sqrt();
                    let y = [t, h];
                    let nu = [-d1 / arc, 1.0 / arc];
                    let r = ((x[0] - t).powi(2) + (x[1] - h).powi(2)).sqrt();
                    let rp = ((x[0] - t).powi(2) + (x[1] + h).powi(2)).sqrt();
                    let kern = k_direct(k, x, y, nu, r) + I * eta * s_direct(k, r)
                        - k_image(k, x, y, nu, rp)
                        - I * eta * s_image(k, x, y);
                    let u = (t - panel.center()) / panel.half_len();
                    kern * barycentric_eval(gl_nodes, &self.bary, &vals, u) * arc
                };
                acc += adaptive_quad(integrand, panel.a, panel.b, 1e-11)
                    .unwrap_or_else(|_| C64::new(0.0, 0.0));
            } else {
                for (node, psi) in nodes.iter().zip(&density.values[range]) {
                    let r = ((x[0] - node.point[0]).powi(2) + (x[1] - node.point[1]).powi(2))
                        .sqrt();
                    let rp = ((x[0] - node.point[0]).powi(2) + (x[1] + node.point[1]).powi(2))
                        .sqrt();
                    let kern = k_direct(k, x, node.point, node.normal, r)
                        + I * eta * s_direct(k, r)
                        - k_image(k, x, node.point, node.normal, rp)
                        - I * eta * s_image(k, x, node.point);
                    acc += kern * psi * node.weight;
                }
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// panel row assembly
// ---------------------------------------------------------------------------

/// Weights w_j such that `sum_j w_j psi_j` approximates the panel's
/// contribution to `(K + i eta S) psi` at an on-curve target with abscissa
/// `target_s` and position `target_point`.
fn panel_row_weights(
    mesh: &BoundaryMesh,
    k: f64,
    eta: f64,
    target_s: f64,
    target_point: [f64; 2],
    panel_idx: usize,
) -> Vec<C64> {
    let panel = &mesh.panels()[panel_idx];
    let range = mesh.panel_nodes(panel_idx);
    let nodes = &mesh.nodes()[range];
    let plen = panel.b - panel.a;
    let (gl_nodes, gl_weights) = panel_rule();
    let mut w = vec![C64::new(0.0, 0.0); nodes.len()];

    // -- direct kernel --------------------------------------------------------
    let near_direct = target_s >= panel.a - 0.75 * plen && target_s <= panel.b + 0.75 * plen;
    if near_direct {
        // split ln r = ln(r/|s-t|) + ln|s-t| and integrate the second factor
        // with exact log weights
        let sigma = (target_s - panel.center()) / panel.half_len();
        let lw = log_weights(gl_nodes, sigma);
        let half = panel.half_len();
        for (j, node) in nodes.iter().enumerate() {
            let (a_s, b_s, a_k, b_k) = split_kernel_parts(k, target_s, target_point, node);
            let log_w = half * (lw[j] + half.ln() * gl_weights[j]);
            let smooth_w = node.param_weight;
            w[j] += (a_k + I * eta * a_s) * smooth_w + (b_k + I * eta * b_s) * log_w;
        }
    } else {
        for (j, node) in nodes.iter().enumerate() {
            let r = dist(target_point, node.point);
            let kern =
                k_direct(k, target_point, node.point, node.normal, r) + I * eta * s_direct(k, r);
            w[j] += kern * node.weight;
        }
    }

    // -- image kernel (enters with a minus sign) --------------------------------
    let min_image_dist = nodes
        .iter()
        .map(|n| {
            ((target_point[0] - n.point[0]).powi(2) + (target_point[1] + n.point[1]).powi(2))
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    if min_image_dist < 1.5 * plen {
        let profile = mesh.profile();
        let bary = barycentric_weights(gl_nodes);
        let image_dist = |t: f64| {
            let h = profile.height(t).unwrap_or(0.0);
            ((target_point[0] - t).powi(2) + (target_point[1] + h).powi(2)).sqrt()
        };
        let (peak_t, peak_scale) = minimize_on_interval(&image_dist, panel.a, panel.b);
        let f = |t: f64| {
            let h = profile.height(t).unwrap_or(0.0);
            let d1 = profile.derivative(t).unwrap_or(0.0);
            let arc = (1.0 + d1 * d1).sqrt();
            let y = [t, h];
            let nu = [-d1 / arc, 1.0 / arc];
            let rp = ((target_point[0] - t).powi(2) + (target_point[1] + h).powi(2)).sqrt();
            (k_image(k, target_point, y, nu, rp) + I * eta * s_image(k, target_point, y)) * arc
        };
        let wi = graded_basis_weights(&f, panel.a, panel.b, peak_t, peak_scale, gl_nodes, &bary);
        for (j, v) in wi.into_iter().enumerate() {
            w[j] -= v;
        }
    } else {
        for (j, node) in nodes.iter().enumerate() {
            let rp = ((target_point[0] - node.point[0]).powi(2)
                + (target_point[1] + node.point[1]).powi(2))
            .sqrt();
            let kern = k_image(k, target_point, node.point, node.normal, rp)
                + I * eta * s_image(k, target_point, node.point);
            w[j] -= kern * node.weight;
        }
    }

    w
}

#[inline]
fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Coarse sampling followed by golden-section refinement of the minimizer
/// of `f` on [a, b]; returns (argmin, min value).
fn minimize_on_interval(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let samples = 16;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=samples {
        let t = a + (b - a) * i as f64 / samples as f64;
        let v = f(t);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let step = (b - a) / samples as f64;
    let mut lo = (a + (best_i as f64 - 1.0) * step).max(a);
    let mut hi = (a + (best_i as f64 + 1.0) * step).min(b);
    let phi = 0.5 * (3.0 - 5.0f64.sqrt());
    for _ in 0..60 {
        let l = lo + phi * (hi - lo);
        let r = hi - phi * (hi - lo);
        if f(l) < f(r) {
            hi = r;
        } else {
            lo = l;
        }
        if hi - lo < 1e-14 * (b - a) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Splits the direct kernels at an on-curve target into smooth and
/// log-weighted parts:
/// `kernel(t) * arc(t) = A(t) + B(t) ln|s - t|`.
///
/// Returns `(A_S, B_S, A_K, B_K)` for the single and double layer.
fn split_kernel_parts(
    k: f64,
    target_s: f64,
    target_point: [f64; 2],
    node: &MeshNode,
) -> (C64, C64, C64, C64) {
    let sep = target_s - node.t;
    let arc = node.arc_factor;
    if sep.abs() < 1e-12 {
        // diagonal limits
        let a_s = arc
            * (C64::new(0.0, 0.25)
                - C64::new((EULER_GAMMA + (0.5 * k).ln() + arc.ln()) / (2.0 * PI), 0.0));
        let b_s = C64::new(-arc / (2.0 * PI), 0.0);
        let a_k = C64::new(arc * node.curvature / (4.0 * PI), 0.0);
        let b_k = C64::new(0.0, 0.0);
        return (a_s, b_s, a_k, b_k);
    }
    let r = dist(target_point, node.point);
    let kr = k * r;
    let ln_ratio = (r / sep.abs()).ln();
    let j0 = j0_raw(kr);
    let j1 = j1_raw(kr);
    let q = ((target_point[0] - node.point[0]) * node.normal[0]
        + (target_point[1] - node.point[1]) * node.normal[1])
        / r;

    let logc_s = -j0 / (2.0 * PI);
    let reg_s = s_direct(k, r) - logc_s * r.ln();
    let a_s = (reg_s + logc_s * ln_ratio) * arc;
    let b_s = C64::new(arc * logc_s, 0.0);

    let logc_k = -k * j1 * q / (2.0 * PI);
    let reg_k = k_direct(k, target_point, node.point, node.normal, r) - logc_k * r.ln();
    let a_k = (reg_k + logc_k * ln_ratio) * arc;
    let b_k = C64::new(arc * logc_k, 0.0);

    (a_s, b_s, a_k, b_k)
}

/// Weights v_j = \int_a^b f(t) l_j(t) dt against the Lagrange basis of the
/// panel's reference nodes, for an integrand with a single sharp peak at
/// `peak_t` of width `peak_scale`: the panel is split into subintervals
/// graded geometrically toward the peak (down to the peak scale) and each
/// subinterval is integrated with the 8-point rule. Deterministic cost,
/// no recursion.
fn graded_basis_weights(
    f: &dyn Fn(f64) -> C64,
    a: f64,
    b: f64,
    peak_t: f64,
    peak_scale: f64,
    ref_nodes: &[f64],
    bary: &[f64],
) -> Vec<C64> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let (gl_nodes, gl_weights) = panel_rule();
    let n = ref_nodes.len();
    let mut out = vec![C64::new(0.0, 0.0); n];

    let mut accumulate = |lo: f64, hi: f64| {
        let c = 0.5 * (lo + hi);
        let hl = 0.5 * (hi - lo);
        for (u, wq) in gl_nodes.iter().zip(gl_weights) {
            let t = c + hl * u;
            let val = f(t) * (wq * hl);
            let uref = (t - center) / half;
            for (j, out_j) in out.iter_mut().enumerate() {
                *out_j += val * lagrange_basis(ref_nodes, bary, j, uref);
            }
        }
    };

    let len = b - a;
    let scale = peak_scale.max(1e-13 * len);
    // dyadic breakpoints peak +- len 2^{-j}; the innermost cell around the
    // peak has width ~ scale, where the (integrable) peak contributes
    // negligibly
    let levels = ((len / scale).log2().ceil() as usize).clamp(1, 48);
    let mut cuts = vec![a, b];
    for j in 0..=levels {
        let d = len * 0.5f64.powi(j as i32);
        for t in [peak_t - d, peak_t + d] {
            if t > a && t < b {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            accumulate(w[0], w[1]);
        }
    }
    out
}

/// Value of the j-th Lagrange basis polynomial at `x` (barycentric form).
fn lagrange_basis(nodes: &[f64], bary: &[f64], j: usize, x: f64) -> f64 {
    let dxj = x - nodes[j];
    if dxj.abs() < 1e-300 {
        return 1.0;
    }
    let mut den = 0.0;
    for (i, &ni) in nodes.iter().enumerate() {
        let dx = x - ni;
        if dx.abs() < 1e-300 {
            return if i == j { 1.0 } else { 0.0 };
        }
        den += bary[i] / dx;
    }
    (bary[j] / dxj) / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_mesh, default_margin, SurfaceProfile};

    fn example1_solver(k: f64, ppw: f64) -> ForwardSolver {
        let mesh = build_mesh(&SurfaceProfile::example1(), k, ppw, default_margin(k)).unwrap();
        ForwardSolver::new(mesh).unwrap()
    }

    #[test]
    fn incident_trace_vanishes_on_the_line() {
        let d = IncidentDirection::from_angle(4.5).unwrap();
        let v = incident_trace(3.0, d, [5.0, 0.0]);
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn incident_trace_vertical_incidence() {
        // x = (0, 1), d = (0, -1), k = 1: e^{-i} - e^{i} = -2i sin 1
        let d = IncidentDirection::from_angle(1.5 * PI).unwrap();
        let v = incident_trace(1.0, d, [0.0, 1.0]);
        let want = C64::new(0.0, -2.0 * 1.0f64.sin());
        assert!((v - want).norm() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn incident_trace_on_example1_curve() {
        let p = SurfaceProfile::example1();
        let x1 = 0.2;
        let h = p.height(x1).unwrap();
        let d = IncidentDirection::from_angle(1.3 * PI).unwrap();
        let k = 7.0;
        let got = incident_trace(k, d, [x1, h]);
        let dc = d.components();
        let want =
            C64::cis(k * (x1 * dc[0] + h * dc[1])) - C64::cis(k * (x1 * dc[0] - h * dc[1]));
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn kernel_image_property_on_the_line() {
        // G(x, y) = 0 for x2 = 0, arbitrary y above the line
        let k = 9.0;
        let mut state = 123456789u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let x = [4.0 * next() - 2.0, 0.0];
            let y = [4.0 * next() - 2.0, 3.0 * next() + 1e-3];
            let g = greens_half_plane(k, x, y);
            assert_eq!(g, C64::new(0.0, 0.0), "x={x:?} y={y:?}");
        }
    }

    #[test]
    fn greens_half_plane_is_symmetric() {
        let k = 5.0;
        let x = [0.3, 0.9];
        let y = [-0.7, 0.4];
        let a = greens_half_plane(k, x, y);
        let b = greens_half_plane(k, y, x);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn flat_profile_gives_zero_density_and_fields() {
        let k = 10.0;
        let mesh = build_mesh(&SurfaceProfile::Flat, k, 10.0, 1.0).unwrap();
        let solver = ForwardSolver::new(mesh).unwrap();
        let d = IncidentDirection::from_angle(1.4 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        let max = psi.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        assert_eq!(max, 0.0, "density must vanish exactly");
        let us = solver.scattered_near(&psi, [0.3, 2.0]).unwrap();
        assert_eq!(us, C64::new(0.0, 0.0));
        let ff = solver.far_field(&psi, [0.0, 1.0]).unwrap();
        assert_eq!(ff, C64::new(0.0, 0.0));
        // closed-form total field magnitude 2|sin(k x2 d2)|
        let x = [0.5, 1.7];
        let m = solver.total_field_magnitude(&psi, x).unwrap();
        let want = 2.0 * (k * x[1] * d.components()[1]).sin().abs();
        assert!((m - want).abs() < 1e-12, "{m} vs {want}");
    }

    #[test]
    fn solve_residual_is_small() {
        let solver = example1_solver(10.0, 10.0);
        let d = IncidentDirection::from_angle(1.5 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        assert!(psi.residual <= 1e-10, "residual {}", psi.residual);
    }

    #[test]
    fn density_vanishes_near_truncation_endpoints() {
        let solver = example1_solver(10.0, 10.0);
        let d = IncidentDirection::from_angle(1.35 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        let n = psi.values.len();
        let edge = psi.values[..crate::quadrature::PANEL_ORDER]
            .iter()
            .chain(&psi.values[n - crate::quadrature::PANEL_ORDER..])
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(edge < 1e-12, "edge density {edge}");
    }

    #[test]
    fn boundary_limit_satisfies_dirichlet_condition() {
        // u^s + u^0 -> 0 on the perturbed part, within 1e-3 (k = 10)
        let solver = example1_solver(10.0, 10.0);
        let d = IncidentDirection::from_angle(1.5 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        for &x1 in &[-0.8, -0.33, 0.11, 0.42, 0.63] {
            let trace = solver.boundary_trace(&psi, x1).unwrap();
            let h = solver.mesh().profile().height(x1).unwrap();
            let u0 = incident_trace(10.0, d, [x1, h]);
            let res = (trace + u0).norm();
            assert!(res < 1e-3, "residual {res} at x1 = {x1}");
        }
    }

    #[test]
    fn scattered_field_decays_like_inverse_sqrt() {
        let solver = example1_solver(10.0, 10.0);
        let d = IncidentDirection::from_angle(1.45 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        let theta: f64 = 1.1;
        let mut scaled = Vec::new();
        for &r in &[10.0, 20.0, 40.0, 80.0] {
            let x = [r * theta.cos(), r * theta.sin()];
            let us = solver.scattered_near(&psi, x).unwrap();
            scaled.push(r.sqrt() * us.norm());
        }
        let max = scaled.iter().cloned().fold(0.0f64, f64::max);
        let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && max > 0.0);
        // |x|^{1/2} |u^s| stays bounded (and roughly constant) along the ray
        assert!(max / min < 1.2, "scaled values {scaled:?}");
    }

    #[test]
    fn far_field_matches_scaled_near_field() {
        // | sqrt(r) e^{-ikr} u^s - u^inf | decays like 1/r
        let solver = example1_solver(10.0, 10.0);
        let d = IncidentDirection::from_angle(1.55 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        let theta: f64 = 2.0;
        let xhat = [theta.cos(), theta.sin()];
        let uinf = solver.far_field(&psi, xhat).unwrap();
        let resid_at = |r: f64| {
            let us = solver
                .scattered_near(&psi, [r * xhat[0], r * xhat[1]])
                .unwrap();
            (us * r.sqrt() * C64::cis(-10.0 * r) - uinf).norm()
        };
        let (r1, r2) = (150.0, 600.0);
        let (e1, e2) = (resid_at(r1), resid_at(r2));
        assert!(e1 < 0.02 * uinf.norm(), "residual {e1} too large");
        let slope = (e2 / e1).ln() / (r2 / r1).ln();
        assert!(
            (-1.35..=-0.65).contains(&slope),
            "decay slope {slope} (residuals {e1:.3e}, {e2:.3e})"
        );
    }

    #[test]
    fn far_field_rejects_lower_half_directions() {
        let solver = example1_solver(10.0, 12.0);
        let d = IncidentDirection::from_angle(1.5 * PI).unwrap();
        let psi = solver.solve(d).unwrap();
        assert!(solver.far_field(&psi, [0.0, -1.0]).is_err());
        assert!(solver.far_field(&psi, [0.5, 0.5]).is_err());
    }

    #[test]
    fn self_convergence_under_refinement() {
        // density-induced fields change little when ppw doubles
        let d = IncidentDirection::from_angle(1.4 * PI).unwrap();
        let coarse = example1_solver(10.0, 10.0);
        let fine = example1_solver(10.0, 20.0);
        let pc = coarse.solve(d).unwrap();
        let pf = fine.solve(d).unwrap();
        for &x in &[[0.1, 1.0], [-0.5, 2.0], [1.5, 0.8]] {
            let a = coarse.scattered_near(&pc, x).unwrap();
            let b = fine.scattered_near(&pf, x).unwrap();
            assert!(
                (a - b).norm() <= 1e-3 * b.norm().max(1e-6),
                "at {x:?}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn incident_direction_domain() {
        assert!(IncidentDirection::from_angle(PI).is_err());
        assert!(IncidentDirection::from_angle(0.5).is_err());
        assert!(IncidentDirection::from_angle(1.5 * PI).is_ok());
    }
}
