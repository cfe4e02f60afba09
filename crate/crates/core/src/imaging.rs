//! Direct imaging indicators and their diagnostic decompositions.
//!
//! The phaseless indicator processes |u| data measured on the upper half
//! circle; the full-data indicator processes far-field patterns. Both are
//! sampling functionals that peak on the surface and need no forward solves
//! during inversion. The U/W field decompositions, the diagnostics F(R, z)
//! and F0(z), and the boundary identity residual are used by the
//! verification suites to check the theory behind the indicators.

use crate::dataset::{FarFieldDataset, PhaselessDataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::forward::{
    incident_trace, plane_wave, reflected_wave, ForwardSolver, IncidentDirection,
};
use crate::specialfun::j0_raw;
use crate::surface::SurfaceProfile;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

type C64 = Complex64;

// ---------------------------------------------------------------------------
// sampling grid
// ---------------------------------------------------------------------------

/// Rectangular grid of sampling points z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingGrid {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl SamplingGrid {
    pub fn new(
        x1: (f64, f64),
        x2: (f64, f64),
        n1: usize,
        n2: usize,
    ) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::domain("sampling grid needs at least 2x2 points"));
        }
        if !(x1.1 > x1.0) || !(x2.1 > x2.0) {
            return Err(Error::domain("sampling grid bounds must be increasing"));
        }
        Ok(SamplingGrid {
            x1_min: x1.0,
            x1_max: x1.1,
            x2_min: x2.0,
            x2_max: x2.1,
            n1,
            n2,
        })
    }

    /// Default window: support padded by 0.3 on each side horizontally,
    /// height range padded by 0.2, 201 x 101 points.
    pub fn default_for(profile: &SurfaceProfile) -> Result<Self> {
        let (a, b) = profile.support().unwrap_or((-0.5, 0.5));
        let samples = 512;
        let mut h_min = 0.0f64;
        let mut h_max = 0.0f64;
        for i in 0..=samples {
            let x = a + (b - a) * i as f64 / samples as f64;
            let h = profile.height(x)?;
            h_min = h_min.min(h);
            h_max = h_max.max(h);
        }
        SamplingGrid::new(
            (a - 0.3, b + 0.3),
            (h_min - 0.2, h_max + 0.2),
            201,
            101,
        )
    }

    pub fn x1(&self, i1: usize) -> f64 {
        self.x1_min + (self.x1_max - self.x1_min) * i1 as f64 / (self.n1 - 1) as f64
    }

    pub fn x2(&self, i2: usize) -> f64 {
        self.x2_min + (self.x2_max - self.x2_min) * i2 as f64 / (self.n2 - 1) as f64
    }

    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        [self.x1(i1), self.x2(i2)]
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which imaging functional produced a result grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndicatorKind {
    Phaseless,
    Full,
}

/// One extracted surface sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub x1: f64,
    pub z2: f64,
    /// true when the column maximum sat on the grid edge and the height is
    /// unreliable
    pub flagged: bool,
}

/// Indicator values on a sampling grid plus the extracted surface estimate.
#[derive(Clone, Debug)]
pub struct ImagingResult {
    pub grid: SamplingGrid,
    pub kind: IndicatorKind,
    /// column-major: `values[i1 * grid.n2 + i2]`
    pub values: Vec<f64>,
    pub surface: Vec<SurfacePoint>,
}

impl ImagingResult {
    pub fn value(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid.n2 + i2]
    }
}

// ---------------------------------------------------------------------------
// indicators
// ---------------------------------------------------------------------------

/// Pairwise summation (stable, deterministic regardless of thread count).
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Precomputed state for evaluating the phaseless indicator at many points.
pub struct PhaselessIndicator {
    k: f64,
    weight: f64,
    receivers: usize,
    incident: usize,
    directions: Vec<[f64; 2]>,
    /// `(|u_ij|^2 - 2 + e^{2 i k x2_i d2_j}) e^{i k x_i . d_j}`
    coeff: Vec<C64>,
    /// `e^{i k x_i' . d_j}`
    image_phase: Vec<C64>,
}

impl PhaselessIndicator {
    pub fn new(dataset: &PhaselessDataset) -> Self {
        let k = dataset.config.wavenumber;
        let m = dataset.config.receivers;
        let n = dataset.config.incident;
        let points = dataset.config.receiver_points();
        let directions: Vec<[f64; 2]> = dataset
            .config
            .incident_directions()
            .iter()
            .map(|d| d.components())
            .collect();
        let mut coeff = Vec::with_capacity(m * n);
        let mut image_phase = Vec::with_capacity(m * n);
        for (i, x) in points.iter().enumerate() {
            for (j, d) in directions.iter().enumerate() {
                let v = dataset.entry(i, j);
                let c = C64::new(v * v - 2.0, 0.0) + C64::cis(2.0 * k * x[1] * d[1]);
                coeff.push(c * C64::cis(k * (x[0] * d[0] + x[1] * d[1])));
                image_phase.push(C64::cis(k * (x[0] * d[0] - x[1] * d[1])));
            }
        }
        PhaselessIndicator {
            k,
            weight: PI.powi(3) * dataset.config.radius / (m as f64 * (n as f64).powi(2)),
            receivers: m,
            incident: n,
            directions,
            coeff,
            image_phase,
        }
    }

    /// The discretized imaging functional at one sampling point.
    pub fn eval(&self, z: [f64; 2]) -> f64 {
        let k = self.k;
        let n = self.incident;
        // e^{-ik z.d_j} and e^{-ik z'.d_j}
        let phases: Vec<(C64, C64)> = self
            .directions
            .iter()
            .map(|d| {
                (
                    C64::cis(-k * (z[0] * d[0] + z[1] * d[1])),
                    C64::cis(-k * (z[0] * d[0] - z[1] * d[1])),
                )
            })
            .collect();
        let terms: Vec<f64> = (0..self.receivers)
            .map(|i| {
                let row = &self.coeff[i * n..(i + 1) * n];
                let img = &self.image_phase[i * n..(i + 1) * n];
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    acc += row[j] * phases[j].0 - img[j] * phases[j].1;
                }
                acc.norm_sqr()
            })
            .collect();
        self.weight * pairwise_sum(&terms)
    }
}

/// Precomputed state for the full far-field indicator (which coincides with
/// the diagnostic F0).
pub struct FullIndicator {
    k: f64,
    incident: usize,
    observations: usize,
    directions: Vec<[f64; 2]>,
    obs_dirs: Vec<[f64; 2]>,
    values: Vec<C64>,
}

impl FullIndicator {
    pub fn new(dataset: &FarFieldDataset) -> Self {
        FullIndicator {
            k: dataset.config.wavenumber,
            incident: dataset.config.incident,
            observations: dataset.config.observations,
            directions: dataset
                .config
                .incident_directions()
                .iter()
                .map(|d| d.components())
                .collect(),
            obs_dirs: dataset.config.observation_directions(),
            values: dataset.values.clone(),
        }
    }

    pub fn eval(&self, z: [f64; 2]) -> f64 {
        let k = self.k;
        let n = self.incident;
        let l = self.observations;
        let phases: Vec<C64> = self
            .directions
            .iter()
            .map(|d| C64::cis(-k * (z[0] * d[0] + z[1] * d[1])))
            .collect();
        let plane_term = C64::from_polar((2.0 * PI / k).sqrt(), -PI / 4.0);
        let terms: Vec<f64> = (0..l)
            .map(|i| {
                let row = &self.values[i * n..(i + 1) * n];
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    acc += row[j] * phases[j];
                }
                let xhat = self.obs_dirs[i];
                let mirrored = C64::cis(-k * (xhat[0] * z[0] - xhat[1] * z[1]))
                    + C64::cis(-k * (xhat[0] * z[0] + xhat[1] * z[1]));
                ((PI / n as f64) * acc - plane_term * mirrored).norm_sqr()
            })
            .collect();
        (PI / l as f64) * pairwise_sum(&terms)
    }
}

/// Phaseless imaging functional at one point.
pub fn indicator_phaseless(dataset: &PhaselessDataset, z: [f64; 2]) -> f64 {
    PhaselessIndicator::new(dataset).eval(z)
}

/// Full far-field imaging functional at one point (this is F0(z)).
pub fn indicator_full(dataset: &FarFieldDataset, z: [f64; 2]) -> f64 {
    FullIndicator::new(dataset).eval(z)
}

/// Evaluates an indicator over a grid (parallel over sampling points) and
/// extracts the surface estimate over the horizontal window `window`.
pub fn image_phaseless(
    dataset: &PhaselessDataset,
    grid: &SamplingGrid,
    window: Option<(f64, f64)>,
) -> ImagingResult {
    let ind = PhaselessIndicator::new(dataset);
    let values = exec::map_indexed(grid.len(), |idx| {
        let (i1, i2) = (idx / grid.n2, idx % grid.n2);
        ind.eval(grid.point(i1, i2))
    });
    finish_result(grid, IndicatorKind::Phaseless, values, window)
}

/// Far-field analogue of [`image_phaseless`].
pub fn image_full(
    dataset: &FarFieldDataset,
    grid: &SamplingGrid,
    window: Option<(f64, f64)>,
) -> ImagingResult {
    let ind = FullIndicator::new(dataset);
    let values = exec::map_indexed(grid.len(), |idx| {
        let (i1, i2) = (idx / grid.n2, idx % grid.n2);
        ind.eval(grid.point(i1, i2))
    });
    finish_result(grid, IndicatorKind::Full, values, window)
}

fn finish_result(
    grid: &SamplingGrid,
    kind: IndicatorKind,
    values: Vec<f64>,
    window: Option<(f64, f64)>,
) -> ImagingResult {
    let mut result = ImagingResult { grid: *grid, kind, values, surface: vec![] };
    result.surface = extract_surface(&result, window);
    result
}

// ---------------------------------------------------------------------------
// surface extraction
// ---------------------------------------------------------------------------

/// For every grid column inside `window`, the height maximizing the
/// indicator, refined by a 3-point quadratic fit. Columns whose maximum sits
/// on the vertical grid edge are flagged.
pub fn extract_surface(
    result: &ImagingResult,
    window: Option<(f64, f64)>,
) -> Vec<SurfacePoint> {
    let grid = &result.grid;
    let (lo, hi) = window.unwrap_or((grid.x1_min, grid.x1_max));
    let mut out = Vec::new();
    for i1 in 0..grid.n1 {
        let x1 = grid.x1(i1);
        if x1 < lo || x1 > hi {
            continue;
        }
        let col = &result.values[i1 * grid.n2..(i1 + 1) * grid.n2];
        let (best, _) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        if best == 0 || best + 1 == grid.n2 {
            out.push(SurfacePoint { x1, z2: grid.x2(best), flagged: true });
            continue;
        }
        let (vm, v0, vp) = (col[best - 1], col[best], col[best + 1]);
        let denom = vm - 2.0 * v0 + vp;
        let shift = if denom.abs() < 1e-300 { 0.0 } else { 0.5 * (vm - vp) / denom };
        let dz = (grid.x2_max - grid.x2_min) / (grid.n2 - 1) as f64;
        out.push(SurfacePoint {
            x1,
            z2: grid.x2(best) + shift.clamp(-0.5, 0.5) * dz,
            flagged: false,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// field sweeps and the U/W decomposition
// ---------------------------------------------------------------------------

/// Scattered fields u^s(x_p, d_j) for a set of probe points and a midpoint
/// direction grid, plus everything needed to assemble the U/W integrals.
pub struct FieldSweep {
    pub k: f64,
    pub points: Vec<[f64; 2]>,
    pub directions: Vec<IncidentDirection>,
    /// `scattered[p * directions.len() + j]`
    pub scattered: Vec<C64>,
}

/// Solves for all directions (reusing one factorization) and evaluates the
/// scattered field at each probe point.
pub fn sweep_scattered(
    solver: &ForwardSolver,
    points: &[[f64; 2]],
    directions: &[IncidentDirection],
) -> Result<FieldSweep> {
    let columns = exec::map_indexed(directions.len(), |j| -> Result<Vec<C64>> {
        let psi = solver.solve(directions[j])?;
        points
            .iter()
            .map(|&x| solver.scattered_near(&psi, x))
            .collect()
    });
    let mut scattered = vec![C64::new(0.0, 0.0); points.len() * directions.len()];
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (p, v) in col.into_iter().enumerate() {
            scattered[p * directions.len() + j] = v;
        }
    }
    Ok(FieldSweep {
        k: solver.wavenumber(),
        points: points.to_vec(),
        directions: directions.to_vec(),
        scattered,
    })
}

/// Like [`sweep_scattered`] but with probe points on the boundary curve,
/// where the scattered field is the boundary trace from above.
pub fn sweep_boundary(
    solver: &ForwardSolver,
    abscissas: &[f64],
    directions: &[IncidentDirection],
) -> Result<FieldSweep> {
    let profile = solver.mesh().profile().clone();
    let columns = exec::map_indexed(directions.len(), |j| -> Result<Vec<C64>> {
        let psi = solver.solve(directions[j])?;
        abscissas
            .iter()
            .map(|&x1| solver.boundary_trace(&psi, x1))
            .collect()
    });
    let mut scattered = vec![C64::new(0.0, 0.0); abscissas.len() * directions.len()];
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (p, v) in col.into_iter().enumerate() {
            scattered[p * directions.len() + j] = v;
        }
    }
    let points = abscissas
        .iter()
        .map(|&x1| Ok([x1, profile.height(x1)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSweep {
        k: solver.wavenumber(),
        points,
        directions: directions.to_vec(),
        scattered,
    })
}

impl FieldSweep {
    fn quad_weight(&self) -> f64 {
        PI / self.directions.len() as f64
    }

    pub fn scattered_at(&self, p: usize, j: usize) -> C64 {
        self.scattered[p * self.directions.len() + j]
    }

    /// (U1, U2, U3)(x_p, z) by midpoint quadrature over the direction grid.
    pub fn u_components(&self, p: usize, z: [f64; 2]) -> (C64, C64, C64) {
        let k = self.k;
        let x = self.points[p];
        let w = self.quad_weight();
        let mut u1 = C64::new(0.0, 0.0);
        let mut u2 = C64::new(0.0, 0.0);
        let mut u3 = C64::new(0.0, 0.0);
        for (j, d) in self.directions.iter().enumerate() {
            let dc = d.components();
            let ph_z = C64::cis(-k * (z[0] * dc[0] + z[1] * dc[1]));
            let ph_zm = C64::cis(-k * (z[0] * dc[0] - z[1] * dc[1]));
            let ph_xr = C64::cis(k * (x[0] * dc[0] - x[1] * dc[1]));
            u1 += self.scattered_at(p, j) * ph_z;
            u2 -= ph_xr * ph_z;
            u3 -= ph_xr * ph_zm;
        }
        (u1 * w, u2 * w, u3 * w)
    }

    /// (W1, W2, W3, W4)(x_p, z).
    pub fn w_components(&self, p: usize, z: [f64; 2]) -> (C64, C64, C64, C64) {
        let k = self.k;
        let x = self.points[p];
        let w = self.quad_weight();
        let mut acc = [C64::new(0.0, 0.0); 4];
        for (j, d) in self.directions.iter().enumerate() {
            let dc = d.components();
            let ph_z = C64::cis(-k * (z[0] * dc[0] + z[1] * dc[1]));
            let ui = plane_wave(k, *d, x);
            let ur = reflected_wave(k, *d, x);
            let us = self.scattered_at(p, j);
            acc[0] += ui * ui * us.conj() * ph_z;
            acc[1] += ui * ur * us.conj() * ph_z;
            acc[2] += ui * ur.conj() * us * ph_z;
            acc[3] += ui * us.norm_sqr() * ph_z;
        }
        (acc[0] * w, acc[1] * w, acc[2] * w, acc[3] * w)
    }

    /// U = U1 + U2 + U3.
    pub fn u_total(&self, p: usize, z: [f64; 2]) -> C64 {
        let (u1, u2, u3) = self.u_components(p, z);
        u1 + u2 + u3
    }

    /// The data-driven inner integral of the imaging functional, computed
    /// from total-field magnitudes exactly as the indicator sees them.
    pub fn data_bracket(&self, p: usize, z: [f64; 2]) -> C64 {
        let k = self.k;
        let x = self.points[p];
        let w = self.quad_weight();
        let mut acc = C64::new(0.0, 0.0);
        for (j, d) in self.directions.iter().enumerate() {
            let dc = d.components();
            let u_tot = incident_trace(k, *d, x) + self.scattered_at(p, j);
            let mag2 = u_tot.norm_sqr();
            let c = C64::new(mag2 - 2.0, 0.0) + C64::cis(2.0 * k * x[1] * dc[1]);
            let ph_x = C64::cis(k * ((x[0] - z[0]) * dc[0] + (x[1] - z[1]) * dc[1]));
            let ph_xm = C64::cis(k * ((x[0] - z[0]) * dc[0] - (x[1] - z[1]) * dc[1]));
            acc += c * ph_x - ph_xm;
        }
        acc * w
    }
}

// ---------------------------------------------------------------------------
// diagnostics: F(R, z), F0(z), boundary identity
// ---------------------------------------------------------------------------

/// F(R, z): quadrature of |U(x, z)|^2 over the measurement half circle,
/// using a sweep whose probe points are the M receivers on radius R.
pub fn f_r(sweep: &FieldSweep, radius: f64, z: [f64; 2]) -> f64 {
    let m = sweep.points.len();
    let terms: Vec<f64> = (0..m).map(|p| sweep.u_total(p, z).norm_sqr()).collect();
    PI * radius / m as f64 * pairwise_sum(&terms)
}

/// F0(z) from a far-field dataset (identical to the full-data indicator).
pub fn f_0(dataset: &FarFieldDataset, z: [f64; 2]) -> f64 {
    indicator_full(dataset, z)
}

/// Residual |U(x, z) + 2 pi J0(k |x - z|)| of the boundary identity, with
/// `U` computed from solver fields on the curve (index `p` of a boundary
/// sweep).
pub fn boundary_identity_residual(sweep: &FieldSweep, p: usize, z: [f64; 2]) -> f64 {
    let x = sweep.points[p];
    let r = ((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2)).sqrt();
    let u = sweep.u_total(p, z);
    (u + 2.0 * PI * j0_raw(sweep.k * r)).norm()
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

impl ImagingResult {
    /// Metadata header plus CSV matrix (rows = x2 from min to max).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "# roughscat indicator grid v1, kind = {}",
            match self.kind {
                IndicatorKind::Phaseless => "phaseless",
                IndicatorKind::Full => "full",
            }
        )?;
        writeln!(
            out,
            "# x1 = [{:.16e}, {:.16e}], n1 = {}",
            self.grid.x1_min, self.grid.x1_max, self.grid.n1
        )?;
        writeln!(
            out,
            "# x2 = [{:.16e}, {:.16e}], n2 = {}",
            self.grid.x2_min, self.grid.x2_max, self.grid.n2
        )?;
        for i2 in 0..self.grid.n2 {
            let row: Vec<String> = (0..self.grid.n1)
                .map(|i1| format!("{:.16e}", self.value(i1, i2)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// 8-bit binary PGM heatmap, linear min-max scaling, top row = x2_max.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
        let mut data = Vec::with_capacity(self.grid.len());
        for i2 in (0..self.grid.n2).rev() {
            for i1 in 0..self.grid.n1 {
                data.push(((self.value(i1, i2) - lo) * scale).round().clamp(0.0, 255.0) as u8);
            }
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "P5\n{} {}\n255\n", self.grid.n1, self.grid.n2)?;
        out.write_all(&data)?;
        Ok(())
    }

    /// Extracted polyline as CSV `x1,z2,flagged`.
    pub fn write_surface_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x1,z2,flagged")?;
        for p in &self.surface {
            writeln!(
                out,
                "{:.16e},{:.16e},{}",
                p.x1,
                p.z2,
                if p.flagged { 1 } else { 0 }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_phaseless, MeasurementConfig, Provenance};
    use crate::surface::{build_mesh, default_margin};

    fn flat_config(k: f64, m: usize, n: usize) -> MeasurementConfig {
        MeasurementConfig {
            radius: 3.0,
            receivers: m,
            incident: n,
            observations: m,
            wavenumber: k,
            points_per_wavelength: 8.0,
        }
    }

    #[test]
    fn phaseless_indicator_is_nonnegative_and_peaks_on_line_for_flat() {
        let c = flat_config(8.0, 24, 24);
        let ds = synthesize_phaseless(&SurfaceProfile::Flat, &c).unwrap();
        let ind = PhaselessIndicator::new(&ds);
        let on_line = ind.eval([0.0, 0.0]);
        assert!(on_line >= 0.0);
        for dz in [0.35, 0.6, 1.0] {
            let off = ind.eval([0.0, dz]);
            assert!(off >= 0.0);
            assert!(
                on_line > off,
                "on-line {on_line} should dominate off-line {off} at dz={dz}"
            );
        }
    }

    #[test]
    fn phaseless_single_entry_weight_check() {
        // M = N = 1, measurement value 0: one hand-computable summand
        let k = 2.0;
        let config = MeasurementConfig {
            radius: 5.0,
            receivers: 1,
            incident: 1,
            observations: 1,
            wavenumber: k,
            points_per_wavelength: 8.0,
        };
        let ds = PhaselessDataset {
            config,
            provenance: Provenance::noiseless(&SurfaceProfile::Flat),
            values: vec![0.0],
        };
        let z = [0.3, -0.2];
        let x = config.receiver_points()[0];
        let d = config.incident_directions()[0].components();
        let bracket = (C64::new(-2.0, 0.0) + C64::cis(2.0 * k * x[1] * d[1]))
            * C64::cis(k * ((x[0] - z[0]) * d[0] + (x[1] - z[1]) * d[1]))
            - C64::cis(k * ((x[0] - z[0]) * d[0] - (x[1] - z[1]) * d[1]));
        let want = PI.powi(3) * config.radius * bracket.norm_sqr();
        let got = indicator_phaseless(&ds, z);
        assert!(
            ((got - want) / want).abs() < 1e-13,
            "{got} vs {want}"
        );
    }

    #[test]
    fn full_indicator_flat_limit_on_line() {
        // u^inf = 0: for z on the line the value approaches 8 pi^2 / k
        let k = 4.0;
        let config = MeasurementConfig {
            radius: 3.0,
            receivers: 4,
            incident: 64,
            observations: 512,
            wavenumber: k,
            points_per_wavelength: 8.0,
        };
        let ds = FarFieldDataset {
            config,
            provenance: Provenance::noiseless(&SurfaceProfile::Flat),
            values: vec![C64::new(0.0, 0.0); config.observations * config.incident],
        };
        let got = indicator_full(&ds, [0.4, 0.0]);
        let want = 8.0 * PI * PI / k;
        assert!(
            ((got - want) / want).abs() < 1e-6,
            "{got} vs {want}"
        );
        // away from the line the value decays relative to the on-line value
        let off = indicator_full(&ds, [0.4, 2.5]);
        assert!(off < 0.7 * got, "off-line {off} vs on-line {got}");
    }

    #[test]
    fn extract_surface_recovers_gaussian_bump_centers() {
        let grid = SamplingGrid::new((-1.0, 1.0), (-0.5, 0.5), 41, 81).unwrap();
        let center = |x1: f64| 0.2 * (-(x1 * x1) / 0.1).exp();
        let mut values = vec![0.0; grid.len()];
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                let [x1, x2] = grid.point(i1, i2);
                let c = center(x1);
                values[i1 * grid.n2 + i2] = (-(x2 - c).powi(2) / 0.02).exp();
            }
        }
        let result = ImagingResult {
            grid,
            kind: IndicatorKind::Phaseless,
            values,
            surface: vec![],
        };
        let surface = extract_surface(&result, None);
        let cell = (grid.x2_max - grid.x2_min) / (grid.n2 - 1) as f64;
        for p in surface {
            assert!(!p.flagged);
            assert!(
                (p.z2 - center(p.x1)).abs() < 1e-3 * cell + 1e-4,
                "at {}: {} vs {}",
                p.x1,
                p.z2,
                center(p.x1)
            );
        }
    }

    #[test]
    fn extract_surface_flags_edge_maxima() {
        let grid = SamplingGrid::new((0.0, 1.0), (0.0, 1.0), 3, 5).unwrap();
        // monotone in x2: maximum on the top edge
        let mut values = vec![0.0; grid.len()];
        for i1 in 0..3 {
            for i2 in 0..5 {
                values[i1 * 5 + i2] = i2 as f64;
            }
        }
        let result =
            ImagingResult { grid, kind: IndicatorKind::Full, values, surface: vec![] };
        let surface = extract_surface(&result, None);
        assert!(surface.iter().all(|p| p.flagged));
    }

    #[test]
    fn mirror_symmetry_for_symmetric_profile() {
        // symmetric bump, symmetric measurement layout: indicator grid is
        // symmetric under x1 -> -x1
        let profile =
            SurfaceProfile::spline_bumps(vec![0.08], vec![0.0], vec![0.25]).unwrap();
        let c = flat_config(6.0, 16, 16);
        let ds = synthesize_phaseless(&profile, &c).unwrap();
        let ind = PhaselessIndicator::new(&ds);
        for &(x1, x2) in &[(0.3, 0.05), (0.55, -0.1), (0.14, 0.02)] {
            let a = ind.eval([x1, x2]);
            let b = ind.eval([-x1, x2]);
            assert!(
                ((a - b) / a.max(1e-300)).abs() < 1e-6,
                "asymmetry at ({x1}, {x2}): {a} vs {b}"
            );
        }
    }

    #[test]
    fn u_w_decomposition_matches_data_bracket() {
        // the data-route bracket equals U + W given the same solver fields
        let k = 5.0;
        let profile = SurfaceProfile::example1();
        let mesh = build_mesh(&profile, k, 8.0, default_margin(k)).unwrap();
        let solver = ForwardSolver::new(mesh).unwrap();
        let dirs = crate::dataset::incident_grid(48);
        let points = [[0.4, 1.3], [-0.8, 2.1]];
        let sweep = sweep_scattered(&solver, &points, &dirs).unwrap();
        for p in 0..points.len() {
            for &z in &[[0.1, 0.05], [-0.3, -0.1]] {
                let (u1, u2, u3) = sweep.u_components(p, z);
                let (w1, w2, w3, w4) = sweep.w_components(p, z);
                let uw = u1 + u2 + u3 + w1 + w2 + w3 + w4;
                let bracket = sweep.data_bracket(p, z);
                assert!(
                    (uw - bracket).norm() < 1e-8,
                    "p={p} z={z:?}: {uw} vs {bracket}"
                );
            }
        }
    }

    #[test]
    fn flat_surface_components_vanish() {
        let k = 4.0;
        let mesh = build_mesh(&SurfaceProfile::Flat, k, 8.0, 1.0).unwrap();
        let solver = ForwardSolver::new(mesh).unwrap();
        let dirs = crate::dataset::incident_grid(16);
        let sweep = sweep_scattered(&solver, &[[0.2, 1.5]], &dirs).unwrap();
        let z = [0.0, 0.1];
        let (u1, _, _) = sweep.u_components(0, z);
        let (w1, w2, w3, w4) = sweep.w_components(0, z);
        assert_eq!(u1.norm(), 0.0);
        assert_eq!((w1 + w2 + w3 + w4).norm(), 0.0);
    }

    #[test]
    fn u2_at_origin_matches_quadrature_oracle() {
        // U2(x, 0) = -int e^{ik x.d'} ds(d), cross-checked against the
        // adaptive quadrature oracle
        let k = 3.0;
        let mesh = build_mesh(&SurfaceProfile::Flat, k, 8.0, 1.0).unwrap();
        let solver = ForwardSolver::new(mesh).unwrap();
        let dirs = crate::dataset::incident_grid(4096);
        let x = [1.2, 0.7];
        let sweep = sweep_scattered(&solver, &[x], &dirs).unwrap();
        let (_, u2, _) = sweep.u_components(0, [0.0, 0.0]);
        let oracle = crate::quadrature::adaptive_quad(
            |th| {
                let d = [th.cos(), th.sin()];
                -C64::cis(k * (x[0] * d[0] - x[1] * d[1]))
            },
            PI,
            2.0 * PI,
            1e-12,
        )
        .unwrap();
        assert!((u2 - oracle).norm() < 1e-6, "{u2} vs {oracle}");
    }

    #[test]
    fn magnitude_is_phase_invariant() {
        // |e^{i a} u| = |u| to machine precision for synthesized fields
        let k = 5.0;
        let profile = SurfaceProfile::example1();
        let mesh = build_mesh(&profile, k, 8.0, default_margin(k)).unwrap();
        let solver = ForwardSolver::new(mesh).unwrap();
        let d = crate::dataset::incident_grid(4)[1];
        let psi = solver.solve(d).unwrap();
        let u = solver.total_field(&psi, [0.3, 1.9]).unwrap();
        for alpha in [0.3, 1.7, 4.4] {
            let rotated = (u * C64::cis(alpha)).norm();
            assert!((rotated - u.norm()).abs() <= 1e-12 * u.norm());
        }
    }

    #[test]
    fn pgm_and_csv_outputs() {
        let grid = SamplingGrid::new((0.0, 1.0), (0.0, 1.0), 4, 3).unwrap();
        let values: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let result =
            ImagingResult { grid, kind: IndicatorKind::Full, values, surface: vec![] };
        let dir = std::env::temp_dir().join("roughscat_imaging_test");
        std::fs::create_dir_all(&dir).unwrap();
        let pgm = dir.join("t.pgm");
        result.write_pgm(&pgm).unwrap();
        let bytes = std::fs::read(&pgm).unwrap();
        assert!(bytes.starts_with(b"P5\n4 3\n255\n"));
        assert_eq!(bytes.len(), 11 + 12);
        let csv = dir.join("t.csv");
        result.write_csv(&csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 3 + 3);
        std::fs::remove_dir_all(&dir).ok();
    }
}
