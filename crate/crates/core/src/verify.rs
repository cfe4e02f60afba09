//! Runnable verification suites with machine-readable reports.
//!
//! Each check pins its tolerances in code and reports the measured
//! quantities alongside the verdict. The acceptance test target and the
//! `verify` CLI subcommand both run these functions; a failed check makes
//! the CLI exit nonzero.

use crate::asymptotics::{
    stationary_expand, u1_asymptotic, u2_closed, u2_quadrature, u3_closed, u3_quadrature,
    PhaseIntegral,
};
use crate::dataset::{
    apply_noise_phaseless, incident_grid, synthesize_farfield, synthesize_phaseless,
    MeasurementConfig, NoiseModel, PhaselessDataset, Provenance,
};
use crate::error::Result;
use crate::exec;
use crate::forward::{incident_trace, ForwardSolver, IncidentDirection};
use crate::imaging::{
    boundary_identity_residual, extract_surface, f_0, f_r, image_phaseless, sweep_boundary,
    sweep_scattered, FieldSweep, PhaselessIndicator, SamplingGrid,
};
use crate::surface::{build_mesh, default_margin, SurfaceProfile};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

type C64 = Complex64;

/// Outcome of one verification check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub details: String,
    pub runtime_ms: u128,
}

impl CheckReport {
    fn finish(name: &str, started: Instant, passed: bool, details: String) -> Self {
        CheckReport {
            name: name.to_string(),
            passed,
            details,
            runtime_ms: started.elapsed().as_millis(),
        }
    }

    fn error(name: &str, started: Instant, err: impl std::fmt::Display) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: false,
            details: format!("check aborted: {err}"),
            runtime_ms: started.elapsed().as_millis(),
        }
    }
}

/// A bundle of check results.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

// ---------------------------------------------------------------------------
// criterion 1: flat-surface oracle
// ---------------------------------------------------------------------------

/// For the flat surface the far field vanishes to 1e-10 and every phaseless
/// entry matches the closed form 2|sin(k x2 d2)| to 1e-10 (k = 10,
/// M = N = 64).
pub fn check_flat_oracle() -> CheckReport {
    let name = "flat_surface_oracle";
    let t0 = Instant::now();
    let run = || -> Result<(f64, f64)> {
        let config = MeasurementConfig {
            radius: 3.0,
            receivers: 64,
            incident: 64,
            observations: 64,
            wavenumber: 10.0,
            points_per_wavelength: 8.0,
        };
        let ff = synthesize_farfield(&SurfaceProfile::Flat, &config)?;
        let ff_max = ff.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let ph = synthesize_phaseless(&SurfaceProfile::Flat, &config)?;
        let points = config.receiver_points();
        let dirs = config.incident_directions();
        let mut mag_err = 0.0f64;
        for (i, x) in points.iter().enumerate() {
            for (j, d) in dirs.iter().enumerate() {
                let want = 2.0 * (10.0 * x[1] * d.components()[1]).sin().abs();
                mag_err = mag_err.max((ph.entry(i, j) - want).abs());
            }
        }
        Ok((ff_max, mag_err))
    };
    match run() {
        Ok((ff_max, mag_err)) => CheckReport::finish(
            name,
            t0,
            ff_max <= 1e-10 && mag_err <= 1e-10,
            format!("max |u_inf| = {ff_max:.3e} (<= 1e-10), max closed-form deviation = {mag_err:.3e} (<= 1e-10)"),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// criterion 2: reciprocity
// ---------------------------------------------------------------------------

/// Far-field reciprocity u_inf(xhat, d) = u_inf(-d, -xhat) on mirrored
/// 32 x 32 midpoint grids (Example 1, k = 10): relative mismatch <= 1e-3.
pub fn check_reciprocity() -> CheckReport {
    let name = "reciprocity";
    let t0 = Instant::now();
    let run = || -> Result<f64> {
        let config = MeasurementConfig {
            radius: 3.0,
            receivers: 32,
            incident: 32,
            observations: 32,
            wavenumber: 10.0,
            points_per_wavelength: 16.0,
        };
        let ds = synthesize_farfield(&SurfaceProfile::example1(), &config)?;
        // mirrored midpoint grids make reciprocity a matrix symmetry
        let n = 32;
        let mut max_dev = 0.0f64;
        let mut max_val = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                max_val = max_val.max(ds.entry(i, j).norm());
                max_dev = max_dev.max((ds.entry(i, j) - ds.entry(j, i)).norm());
            }
        }
        Ok(max_dev / max_val)
    };
    match run() {
        Ok(mismatch) => CheckReport::finish(
            name,
            t0,
            mismatch <= 1e-3,
            format!("max relative reciprocity mismatch = {mismatch:.3e} (<= 1e-3)"),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// criterion 3: boundary identity
// ---------------------------------------------------------------------------

/// U(x, z) = -2 pi J0(k |x - z|) for x on the curve: residual <= 1e-2 * 2 pi
/// at N = 256 directions, halving when N doubles (Example 1, k = 10,
/// 10 boundary probes x 5 sampling points).
pub fn check_boundary_identity() -> CheckReport {
    let name = "boundary_identity";
    let t0 = Instant::now();
    let run = || -> Result<(f64, f64)> {
        let k = 10.0;
        let profile = SurfaceProfile::example1();
        let mesh = build_mesh(&profile, k, 20.0, default_margin(k))?;
        let solver = ForwardSolver::new(mesh)?;
        let probes: Vec<f64> = (0..10).map(|i| -0.87 + 1.53 * i as f64 / 9.0).collect();
        let zs = [
            [-0.4, 0.03],
            [0.1, -0.02],
            [0.45, 0.05],
            [-0.1, 0.1],
            [0.7, 0.0],
        ];
        let mut residuals = [0.0f64; 2];
        for (idx, n_dirs) in [256usize, 512].into_iter().enumerate() {
            let sweep = sweep_boundary(&solver, &probes, &incident_grid(n_dirs))?;
            let mut worst = 0.0f64;
            for p in 0..probes.len() {
                for &z in &zs {
                    worst = worst.max(boundary_identity_residual(&sweep, p, z));
                }
            }
            residuals[idx] = worst;
        }
        Ok((residuals[0], residuals[1]))
    };
    match run() {
        Ok((r256, r512)) => {
            let bound = 1e-2 * 2.0 * PI;
            let passed = r256 <= bound && r512 <= 0.525 * r256;
            CheckReport::finish(
                name,
                t0,
                passed,
                format!(
                    "residual(N=256) = {r256:.3e} (<= {bound:.3e}), residual(N=512) = {r512:.3e} (ratio {:.3}, need <= 0.525)",
                    r512 / r256
                ),
            )
        }
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// criterion 4: far-field matching
// ---------------------------------------------------------------------------

/// | |x|^(1/2) e^{-ik|x|} u^s - u_inf | decays with fitted slope in
/// [-1.2, -0.8] over |x| in {50, 100, 200, 400} (Example 1, k = 10).
pub fn check_farfield_matching() -> CheckReport {
    let name = "farfield_matching";
    let t0 = Instant::now();
    let run = || -> Result<(f64, Vec<f64>)> {
        let k = 10.0;
        let mesh = build_mesh(&SurfaceProfile::example1(), k, 12.0, default_margin(k))?;
        let solver = ForwardSolver::new(mesh)?;
        let d = IncidentDirection::from_angle(1.45 * PI)?;
        let psi = solver.solve(d)?;
        let radii = [50.0, 100.0, 200.0, 400.0];
        let angles = [1.0f64, PI / 2.0, 2.1];
        let mut residuals = Vec::new();
        for &r in &radii {
            let mut acc = 0.0;
            for &th in &angles {
                let xhat = [th.cos(), th.sin()];
                let uinf = solver.far_field(&psi, xhat)?;
                let us = solver.scattered_near(&psi, [r * xhat[0], r * xhat[1]])?;
                acc += (us * r.sqrt() * C64::cis(-k * r) - uinf).norm();
            }
            residuals.push(acc / angles.len() as f64);
        }
        Ok((fit_loglog_slope(&radii, &residuals), residuals))
    };
    match run() {
        Ok((slope, residuals)) => CheckReport::finish(
            name,
            t0,
            (-1.2..=-0.8).contains(&slope),
            format!("fitted slope = {slope:.3} (need [-1.2, -0.8]); residuals {residuals:?}"),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// criterion 5: stationary-phase bounds
// ---------------------------------------------------------------------------

/// On 50 seeded admissible instances the expansion error stays within
/// |delta| + |eps| (zero violations), and the closed-form leading terms of
/// U2 show the 1/|x| residual decay (slope -1 +- 0.15).
pub fn check_stationary_bounds() -> CheckReport {
    let name = "stationary_phase_bounds";
    let t0 = Instant::now();
    let run = || -> Result<(usize, f64, f64)> {
        // deterministic instance parameters from a tiny LCG
        let params: Vec<(u32, f64, [f64; 6])> = {
            let mut state = 20260810u64;
            let mut next = move || {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            (0..50)
                .map(|trial| {
                    let gam = 10f64.powf(2.0 + 3.0 * next());
                    let raw = [next(), next(), next(), next(), next(), next()];
                    (trial, gam, raw)
                })
                .collect()
        };
        let violations: Vec<Option<String>> = exec::map_indexed(params.len(), |i| {
            let (trial, gam, r) = params[i];
            let (m, n) = match trial % 3 {
                0 => (0usize, 1usize),
                1 => (1, 1),
                _ => (1, 2),
            };
            let result = (|| -> Result<(f64, f64)> {
                let (pi_int, oracle) = if trial % 2 == 0 {
                    let p = PhaseIntegral::cosine_phase(
                        0.5 + 2.5 * r[0],
                        0.7 + (PI - 1.0) * r[1],
                        3.0 * r[2],
                        2.0 * PI * r[3],
                        gam,
                    )?;
                    let o = p.integrate(1e-13)?;
                    (p, o)
                } else {
                    let p = PhaseIntegral::cubic_phase(
                        0.5 + 2.0 * r[0],
                        r[1],
                        0.5 + 1.5 * r[2],
                        C64::new(2.0 * r[3] - 1.0, 2.0 * r[4] - 1.0),
                        C64::new(r[5] - 0.5, r[0] - 0.5),
                        2.0 * r[1],
                        gam,
                    )?;
                    let o = p.integrate(1e-13)?;
                    (p, o)
                };
                let ex = stationary_expand(&pi_int, m, n)?;
                Ok(((oracle - ex.value()).norm(), ex.error_bound()))
            })();
            match result {
                Ok((err, bound)) if err <= bound => None,
                Ok((err, bound)) => Some(format!(
                    "trial {trial}: error {err:.3e} > bound {bound:.3e}"
                )),
                Err(e) => Some(format!("trial {trial}: {e}")),
            }
        });
        let n_violations = violations.iter().flatten().count();

        // closed-form residual decay, averaged over angles
        let k = 5.0;
        let z = [0.3, 0.1];
        let radii: Vec<f64> = (0..6).map(|i| 100.0 * 2f64.powi(i)).collect();
        let mut res_u2 = Vec::new();
        let mut res_u3 = Vec::new();
        for &r in &radii {
            let mut a2 = 0.0;
            let mut a3 = 0.0;
            for th in [1.2f64, PI / 2.0, 1.9] {
                let x = [r * th.cos(), r * th.sin()];
                a2 += (u2_quadrature(x, z, k, 1e-12)? - u2_closed(x, z, k)?).norm();
                a3 += (u3_quadrature(x, z, k, 1e-12)? - u3_closed(x, z, k)?).norm();
            }
            res_u2.push(a2 / 3.0);
            res_u3.push(a3 / 3.0);
        }
        let slope_u2 = fit_loglog_slope(&radii, &res_u2);
        let slope_u3 = fit_loglog_slope(&radii, &res_u3);
        Ok((n_violations, slope_u2, slope_u3))
    };
    match run() {
        Ok((violations, slope_u2, slope_u3)) => {
            let slopes_ok =
                (-1.15..=-0.85).contains(&slope_u2) && (-1.15..=-0.85).contains(&slope_u3);
            CheckReport::finish(
                name,
                t0,
                violations == 0 && slopes_ok,
                format!(
                    "bound violations: {violations}/50; closed-form residual slopes U2 = {slope_u2:.3}, U3 = {slope_u3:.3} (need -1 +- 0.15)"
                ),
            )
        }
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// criterion 6: indicator convergence
// ---------------------------------------------------------------------------

/// Builds the phaseless dataset for radius `radius` from an existing sweep
/// (receivers of `config` must match the sweep points).
fn dataset_from_sweep(
    sweep: &FieldSweep,
    config: &MeasurementConfig,
    profile: &SurfaceProfile,
) -> PhaselessDataset {
    let n = sweep.directions.len();
    let mut values = vec![0.0; sweep.points.len() * n];
    for (p, &x) in sweep.points.iter().enumerate() {
        for (j, d) in sweep.directions.iter().enumerate() {
            let u = incident_trace(config.wavenumber, *d, x) + sweep.scattered_at(p, j);
            values[p * n + j] = u.norm();
        }
    }
    PhaselessDataset {
        config: *config,
        provenance: Provenance::noiseless(profile),
        values,
    }
}

/// |I_phaseless - F_R| is non-increasing over R in {10, 20, 40} at five
/// sampling points near the surface, and |F_R - F0| has log-log slope
/// <= -0.15 over R in {20, 40, 80, 160} (Example 1, k = 10, M = N = 128).
pub fn check_indicator_convergence() -> CheckReport {
    let name = "indicator_convergence";
    let t0 = Instant::now();
    let run = || -> Result<(Vec<Vec<f64>>, f64, bool)> {
        let k = 10.0;
        let profile = SurfaceProfile::example1();
        let mesh = build_mesh(&profile, k, 12.0, default_margin(k))?;
        let solver = ForwardSolver::new(mesh)?;
        let m = 128;
        let dirs = incident_grid(m);
        let zs: Vec<[f64; 2]> = [-0.5, -0.2, 0.05, 0.3, 0.6]
            .iter()
            .map(|&x1| {
                let h = profile.height(x1).unwrap();
                [x1, h + 0.02]
            })
            .collect();

        // part a: |I - F_R| at R in {10, 20, 40}
        let radii_a = [10.0, 20.0, 40.0];
        let mut gaps: Vec<Vec<f64>> = vec![vec![]; zs.len()];
        for &radius in &radii_a {
            let config = MeasurementConfig {
                radius,
                receivers: m,
                incident: m,
                observations: m,
                wavenumber: k,
                points_per_wavelength: 12.0,
            };
            let sweep = sweep_scattered(&solver, &config.receiver_points(), &dirs)?;
            let ds = dataset_from_sweep(&sweep, &config, &profile);
            let ind = PhaselessIndicator::new(&ds);
            for (zi, &z) in zs.iter().enumerate() {
                let i_ph = ind.eval(z);
                let f = f_r(&sweep, radius, z);
                gaps[zi].push((i_ph - f).abs());
            }
        }
        let monotone = gaps
            .iter()
            .all(|g| g.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));

        // part b: |F_R - F0| slope over R in {20, 40, 80, 160}
        let ff_config = MeasurementConfig {
            radius: 3.0,
            receivers: m,
            incident: m,
            observations: m,
            wavenumber: k,
            points_per_wavelength: 12.0,
        };
        let ff = synthesize_farfield(&profile, &ff_config)?;
        let radii_b = [20.0, 40.0, 80.0, 160.0];
        let mut max_gap = Vec::new();
        for &radius in &radii_b {
            let config = MeasurementConfig { radius, ..ff_config };
            let sweep = sweep_scattered(&solver, &config.receiver_points(), &dirs)?;
            let worst = zs
                .iter()
                .map(|&z| (f_r(&sweep, radius, z) - f_0(&ff, z)).abs())
                .fold(0.0f64, f64::max);
            max_gap.push(worst);
        }
        let slope = fit_loglog_slope(&radii_b, &max_gap);
        Ok((gaps, slope, monotone))
    };
    match run() {
        Ok((gaps, slope, monotone)) => CheckReport::finish(
            name,
            t0,
            monotone && slope <= -0.15,
            format!(
                "|I - F_R| per z over R in (10,20,40): {gaps:?} (non-increasing: {monotone}); |F_R - F0| slope = {slope:.3} (need <= -0.15)"
            ),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// criteria 7 & 8: reconstruction quality and noise robustness
// ---------------------------------------------------------------------------

/// Shared artifacts of criteria 7 and 8.
pub struct ReconstructionArtifacts {
    pub fraction_within: f64,
    pub flagged: usize,
    pub columns: usize,
    pub tolerance: f64,
    pub correlation: f64,
}

/// Desk-scale reconstruction (Example 1 at k = 20, R = 4, M = N = 128,
/// 10% noise): at least 90% of the columns over the support recover the
/// height within 0.1 wavelengths; and the delta = 0 vs delta = 40% indicator
/// grids stay correlated (Pearson >= 0.9).
pub fn reconstruction_artifacts() -> Result<ReconstructionArtifacts> {
    let k = 20.0;
    let profile = SurfaceProfile::example1();
    let config = MeasurementConfig {
        radius: 4.0,
        receivers: 128,
        incident: 128,
        observations: 128,
        wavenumber: k,
        points_per_wavelength: 10.0,
    };
    let clean = synthesize_phaseless(&profile, &config)?;
    let noisy10 = apply_noise_phaseless(&clean, 0.1, 20260810, NoiseModel::Uniform)?;
    let grid = SamplingGrid::default_for(&profile)?;
    let support = profile.support().unwrap();
    let result10 = image_phaseless(&noisy10, &grid, Some(support));

    let tolerance = 0.1 * 2.0 * PI / k;
    let mut within = 0usize;
    let mut flagged = 0usize;
    for p in &result10.surface {
        if p.flagged {
            flagged += 1;
            continue;
        }
        let h = profile.height(p.x1)?;
        if (p.z2 - h).abs() <= tolerance {
            within += 1;
        }
    }
    let columns = result10.surface.len();
    let fraction_within = within as f64 / columns as f64;

    // criterion 8 artifacts: delta = 0 and delta = 40% grids
    let result0 = image_phaseless(&clean, &grid, Some(support));
    let noisy40 = apply_noise_phaseless(&clean, 0.4, 20260810, NoiseModel::Uniform)?;
    let result40 = image_phaseless(&noisy40, &grid, Some(support));
    let correlation = pearson(&result0.values, &result40.values);

    Ok(ReconstructionArtifacts {
        fraction_within,
        flagged,
        columns,
        tolerance,
        correlation,
    })
}

pub fn check_reconstruction(art: &ReconstructionArtifacts) -> CheckReport {
    let t0 = Instant::now();
    CheckReport::finish(
        "reconstruction_accuracy",
        t0,
        art.fraction_within >= 0.9,
        format!(
            "{:.1}% of {} columns within {:.4} of the true height ({} flagged; need >= 90%)",
            100.0 * art.fraction_within,
            art.columns,
            art.tolerance,
            art.flagged
        ),
    )
}

pub fn check_noise_robustness(art: &ReconstructionArtifacts) -> CheckReport {
    let t0 = Instant::now();
    CheckReport::finish(
        "noise_robustness",
        t0,
        art.correlation >= 0.9,
        format!(
            "Pearson correlation between delta=0 and delta=40% grids = {:.4} (need >= 0.9)",
            art.correlation
        ),
    )
}

// ---------------------------------------------------------------------------
// additional property suites (decay rates, identities)
// ---------------------------------------------------------------------------

/// Along a ray, |U1|, |U2|, |U3| decay like |x|^{-1/2} and |W1|, |W4| like
/// |x|^{-1} (fitted slopes within +-0.15).
pub fn check_decay_rates() -> CheckReport {
    let name = "uw_decay_rates";
    let t0 = Instant::now();
    let run = || -> Result<Vec<(String, f64, f64)>> {
        let k = 10.0;
        let mesh = build_mesh(&SurfaceProfile::example1(), k, 10.0, default_margin(k))?;
        let solver = ForwardSolver::new(mesh)?;
        let dirs = incident_grid(64);
        let theta: f64 = 1.25;
        let radii = [50.0, 100.0, 200.0, 400.0, 800.0];
        let points: Vec<[f64; 2]> = radii
            .iter()
            .map(|&r| [r * theta.cos(), r * theta.sin()])
            .collect();
        let sweep = sweep_scattered(&solver, &points, &dirs)?;
        let z = [0.2, 0.1];
        let mut mags: Vec<Vec<f64>> = vec![vec![]; 5];
        for p in 0..points.len() {
            let (u1, u2, u3) = sweep.u_components(p, z);
            let (w1, _, _, w4) = sweep.w_components(p, z);
            mags[0].push(u1.norm());
            mags[1].push(u2.norm());
            mags[2].push(u3.norm());
            mags[3].push(w1.norm());
            mags[4].push(w4.norm());
        }
        let expected = [-0.5, -0.5, -0.5, -1.0, -1.0];
        let names = ["U1", "U2", "U3", "W1", "W4"];
        Ok(names
            .iter()
            .zip(expected)
            .zip(&mags)
            .map(|((n, e), m)| (n.to_string(), fit_loglog_slope(&radii, m), e))
            .collect())
    };
    match run() {
        Ok(slopes) => {
            let passed = slopes.iter().all(|(_, s, e)| (s - e).abs() <= 0.15);
            let detail = slopes
                .iter()
                .map(|(n, s, e)| format!("{n}: {s:.3} (expect {e})"))
                .collect::<Vec<_>>()
                .join(", ");
            CheckReport::finish(name, t0, passed, detail)
        }
        Err(e) => CheckReport::error(name, t0, e),
    }
}

/// The far-field form of U1 approximates the exact U1 with an |x|^{-3/2}
/// residual (fitted slope -1.5 +- 0.2), and |U1| itself decays like
/// |x|^{-1/2}.
pub fn check_u1_asymptotics() -> CheckReport {
    let name = "u1_asymptotics";
    let t0 = Instant::now();
    let run = || -> Result<(f64, f64)> {
        let k = 10.0;
        let mesh = build_mesh(&SurfaceProfile::example1(), k, 12.0, default_margin(k))?;
        let solver = ForwardSolver::new(mesh)?;
        let n_dirs = 64;
        let dirs = incident_grid(n_dirs);
        let densities: Vec<_> = dirs
            .iter()
            .map(|&d| solver.solve(d))
            .collect::<Result<Vec<_>>>()?;
        let theta: f64 = 1.9;
        let xhat = [theta.cos(), theta.sin()];
        let ff_row: Vec<C64> = densities
            .iter()
            .map(|psi| solver.far_field(psi, xhat))
            .collect::<Result<Vec<_>>>()?;
        let radii = [50.0, 100.0, 200.0, 400.0];
        let z = [0.15, 0.05];
        let mut residuals = Vec::new();
        let mut u1_mags = Vec::new();
        for &r in &radii {
            let x = [r * xhat[0], r * xhat[1]];
            let w = PI / n_dirs as f64;
            let mut u1 = C64::new(0.0, 0.0);
            for (psi, d) in densities.iter().zip(&dirs) {
                let dc = d.components();
                u1 += solver.scattered_near(psi, x)?
                    * C64::cis(-k * (z[0] * dc[0] + z[1] * dc[1]));
            }
            u1 *= w;
            let approx = u1_asymptotic(&ff_row, &dirs, x, z, k)?;
            residuals.push((u1 - approx).norm());
            u1_mags.push(u1.norm());
        }
        Ok((
            fit_loglog_slope(&radii, &residuals),
            fit_loglog_slope(&radii, &u1_mags),
        ))
    };
    match run() {
        Ok((res_slope, mag_slope)) => CheckReport::finish(
            name,
            t0,
            (res_slope + 1.5).abs() <= 0.2 && (mag_slope + 0.5).abs() <= 0.15,
            format!(
                "residual slope = {res_slope:.3} (expect -1.5 +- 0.2), |U1| slope = {mag_slope:.3} (expect -0.5 +- 0.15)"
            ),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

/// The data-driven inner integral equals U + W pointwise (within 1e-8) when
/// both routes use the same solver fields.
pub fn check_uw_identity() -> CheckReport {
    let name = "uw_identity";
    let t0 = Instant::now();
    let run = || -> Result<f64> {
        let k = 10.0;
        let mesh = build_mesh(&SurfaceProfile::example1(), k, 10.0, default_margin(k))?;
        let solver = ForwardSolver::new(mesh)?;
        let dirs = incident_grid(64);
        let points = [[0.3, 1.4], [-0.9, 2.3], [1.4, 0.9]];
        let sweep = sweep_scattered(&solver, &points, &dirs)?;
        let mut worst = 0.0f64;
        for p in 0..points.len() {
            for &z in &[[0.1, 0.0], [-0.4, 0.08], [0.55, -0.06]] {
                let (u1, u2, u3) = sweep.u_components(p, z);
                let (w1, w2, w3, w4) = sweep.w_components(p, z);
                let uw = u1 + u2 + u3 + w1 + w2 + w3 + w4;
                worst = worst.max((uw - sweep.data_bracket(p, z)).norm());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CheckReport::finish(
            name,
            t0,
            worst <= 1e-8,
            format!("max |bracket - (U + W)| = {worst:.3e} (<= 1e-8)"),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

/// Surface extraction on flat far-field data puts the polyline within one
/// cell of the line x2 = 0.
pub fn check_flat_extraction() -> CheckReport {
    let name = "flat_extraction";
    let t0 = Instant::now();
    let run = || -> Result<f64> {
        let config = MeasurementConfig {
            radius: 3.0,
            receivers: 32,
            incident: 48,
            observations: 48,
            wavenumber: 8.0,
            points_per_wavelength: 8.0,
        };
        let ds = synthesize_farfield(&SurfaceProfile::Flat, &config)?;
        let grid = SamplingGrid::new((-1.0, 1.0), (-0.4, 0.4), 41, 41)?;
        let result = crate::imaging::image_full(&ds, &grid, None);
        let cell = (grid.x2_max - grid.x2_min) / (grid.n2 - 1) as f64;
        let worst = extract_surface(&result, None)
            .iter()
            .filter(|p| !p.flagged)
            .map(|p| p.z2.abs())
            .fold(0.0f64, f64::max);
        Ok(worst / cell)
    };
    match run() {
        Ok(cells) => CheckReport::finish(
            name,
            t0,
            cells <= 1.0,
            format!("worst extracted height = {cells:.3} cells from the line (<= 1)"),
        ),
        Err(e) => CheckReport::error(name, t0, e),
    }
}

// ---------------------------------------------------------------------------
// suite driver
// ---------------------------------------------------------------------------

/// Known suite selectors.
pub const SUITES: &[&str] = &[
    "flat",
    "reciprocity",
    "boundary",
    "farfield",
    "stationary",
    "convergence",
    "reconstruction",
    "decay",
    "identity",
    "all",
];

/// Runs the selected suite(s). `all` runs everything, including the heavy
/// reconstruction checks.
pub fn run_suite(selector: &str) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let want = |s: &str| selector == "all" || selector == s;
    if !SUITES.contains(&selector) {
        return Err(crate::error::Error::domain(format!(
            "unknown verify suite '{selector}' (available: {})",
            SUITES.join(", ")
        )));
    }
    if want("flat") {
        checks.push(check_flat_oracle());
        checks.push(check_flat_extraction());
    }
    if want("reciprocity") {
        checks.push(check_reciprocity());
    }
    if want("boundary") {
        checks.push(check_boundary_identity());
    }
    if want("farfield") {
        checks.push(check_farfield_matching());
    }
    if want("stationary") {
        checks.push(check_stationary_bounds());
    }
    if want("convergence") {
        checks.push(check_indicator_convergence());
    }
    if want("decay") {
        checks.push(check_decay_rates());
        checks.push(check_u1_asymptotics());
    }
    if want("identity") {
        checks.push(check_uw_identity());
    }
    if want("reconstruction") {
        match reconstruction_artifacts() {
            Ok(art) => {
                checks.push(check_reconstruction(&art));
                checks.push(check_noise_robustness(&art));
            }
            Err(e) => {
                let t0 = Instant::now();
                checks.push(CheckReport::error("reconstruction_accuracy", t0, &e));
                checks.push(CheckReport::error("noise_robustness", t0, e));
            }
        }
    }
    Ok(VerifyReport { checks })
}
