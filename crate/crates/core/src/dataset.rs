//! Measurement geometries, synthetic phaseless/far-field datasets, the
//! multiplicative noise model, and a diff-able text format for persistence.
//!
//! Receivers sit on the upper half circle of radius `R` at midpoint-offset
//! angles `theta_i = pi (i - 1/2) / M`, incident directions on the lower
//! half circle at `pi + pi (j - 1/2) / N`, and far-field observation
//! directions on the upper half circle at `pi (i - 1/2) / L`. The half
//! offset keeps the grazing angles 0 and pi, where measurements degenerate
//! onto the flat line, out of every grid.

use crate::error::{Error, Result};
use crate::exec;
use crate::forward::{ForwardSolver, IncidentDirection};
use crate::surface::{build_mesh, default_margin, SurfaceProfile};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufReader, Read as _};
use std::path::Path;

/// Measurement layout shared by both dataset kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// radius of the measurement half circle (must exceed the perturbation)
    pub radius: f64,
    /// number of receivers on the half circle
    pub receivers: usize,
    /// number of incident directions
    pub incident: usize,
    /// number of far-field observation directions
    pub observations: usize,
    pub wavenumber: f64,
    /// mesh resolution used for synthesis
    pub points_per_wavelength: f64,
}

impl MeasurementConfig {
    pub fn validate(&self, profile: &SurfaceProfile) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::domain("measurement radius must be positive"));
        }
        if !(self.wavenumber > 0.0) {
            return Err(Error::domain("wavenumber must be positive"));
        }
        if let Some((a, b)) = profile.support() {
            let mut circum: f64 = a.abs().max(b.abs());
            let samples = 512;
            for i in 0..=samples {
                let x = a + (b - a) * i as f64 / samples as f64;
                let h = profile.height(x)?;
                circum = circum.max((x * x + h * h).sqrt());
            }
            if self.radius <= circum {
                return Err(Error::domain(format!(
                    "measurement radius {} does not enclose the perturbation (circumradius {circum:.3})",
                    self.radius
                )));
            }
        }
        Ok(())
    }

    /// Receiver points `x^(i) = R (cos theta_i, sin theta_i)`,
    /// `theta_i = pi (i - 1/2) / M`.
    pub fn receiver_points(&self) -> Vec<[f64; 2]> {
        let m = self.receivers;
        (1..=m)
            .map(|i| {
                let th = PI * (i as f64 - 0.5) / m as f64;
                [self.radius * th.cos(), self.radius * th.sin()]
            })
            .collect()
    }

    /// Incident directions at `theta = pi + pi (j - 1/2) / N`.
    pub fn incident_directions(&self) -> Vec<IncidentDirection> {
        incident_grid(self.incident)
    }

    /// Far-field observation directions `xhat^(i)`, `theta = pi (i - 1/2) / L`.
    pub fn observation_directions(&self) -> Vec<[f64; 2]> {
        observation_grid(self.observations)
    }
}

/// Midpoint grid of `n` incident directions on the lower half circle.
pub fn incident_grid(n: usize) -> Vec<IncidentDirection> {
    (1..=n)
        .map(|j| {
            IncidentDirection::from_angle(PI + PI * (j as f64 - 0.5) / n as f64)
                .expect("midpoint angles are interior")
        })
        .collect()
}

/// Midpoint grid of `n` observation directions on the upper half circle.
pub fn observation_grid(n: usize) -> Vec<[f64; 2]> {
    (1..=n)
        .map(|i| {
            let th = PI * (i as f64 - 0.5) / n as f64;
            [th.cos(), th.sin()]
        })
        .collect()
}

/// How the noise amplitudes `zeta` are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// uniform on [-1, 1]
    #[default]
    Uniform,
    /// standard normal conditioned on [-1, 1]
    TruncatedGaussian,
}

impl NoiseModel {
    fn name(&self) -> &'static str {
        match self {
            NoiseModel::Uniform => "uniform",
            NoiseModel::TruncatedGaussian => "truncated_gaussian",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseModel::Uniform),
            "truncated_gaussian" => Ok(NoiseModel::TruncatedGaussian),
            other => Err(Error::integrity(format!("unknown noise model '{other}'"))),
        }
    }

    /// One draw in [-1, 1].
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseModel::Uniform => rng.gen_range(-1.0..=1.0),
            NoiseModel::TruncatedGaussian => loop {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                if z.abs() <= 1.0 {
                    return z;
                }
            },
        }
    }
}

/// Provenance carried in every dataset header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub profile_kind: String,
    pub delta: f64,
    pub seed: u64,
    pub noise_model: NoiseModel,
    /// hash of the run configuration, when produced by the CLI
    pub config_sha: Option<String>,
}

impl Provenance {
    pub fn noiseless(profile: &SurfaceProfile) -> Self {
        Provenance {
            profile_kind: profile.kind_name().to_string(),
            delta: 0.0,
            seed: 0,
            noise_model: NoiseModel::Uniform,
            config_sha: None,
        }
    }
}

/// Phaseless near-field measurements |u(x^(i), d^(j))|, row-major M x N.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaselessDataset {
    pub config: MeasurementConfig,
    pub provenance: Provenance,
    /// `values[i * incident + j] = |u(x_i, d_j)|`
    pub values: Vec<f64>,
}

/// Full far-field measurements u^inf(xhat^(i), d^(j)), row-major L x N.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldDataset {
    pub config: MeasurementConfig,
    pub provenance: Provenance,
    /// `values[i * incident + j] = u^inf(xhat_i, d_j)`
    pub values: Vec<Complex64>,
}

impl PhaselessDataset {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.config.incident + j]
    }
}

impl FarFieldDataset {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.config.incident + j]
    }
}

/// Solves the forward problem for every incident direction of `config` and
/// records the total-field magnitudes at the receivers.
pub fn synthesize_phaseless(
    profile: &SurfaceProfile,
    config: &MeasurementConfig,
) -> Result<PhaselessDataset> {
    config.validate(profile)?;
    let mesh = build_mesh(
        profile,
        config.wavenumber,
        config.points_per_wavelength,
        default_margin(config.wavenumber),
    )?;
    let solver = ForwardSolver::new(mesh)?;
    let receivers = config.receiver_points();
    let directions = config.incident_directions();
    let columns = exec::map_indexed(directions.len(), |j| -> Result<Vec<f64>> {
        let psi = solver.solve(directions[j]).map_err(|e| {
            Error::contract(format!("forward solve failed for direction index {j}: {e}"))
        })?;
        receivers
            .iter()
            .map(|&x| solver.total_field_magnitude(&psi, x))
            .collect()
    });
    let mut values = vec![0.0; receivers.len() * directions.len()];
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (i, v) in col.into_iter().enumerate() {
            values[i * directions.len() + j] = v;
        }
    }
    Ok(PhaselessDataset {
        config: *config,
        provenance: Provenance::noiseless(profile),
        values,
    })
}

/// Solves the forward problem for every incident direction and records the
/// far-field pattern at the observation directions.
pub fn synthesize_farfield(
    profile: &SurfaceProfile,
    config: &MeasurementConfig,
) -> Result<FarFieldDataset> {
    config.validate(profile)?;
    let mesh = build_mesh(
        profile,
        config.wavenumber,
        config.points_per_wavelength,
        default_margin(config.wavenumber),
    )?;
    let solver = ForwardSolver::new(mesh)?;
    let observations = config.observation_directions();
    let directions = config.incident_directions();
    let columns = exec::map_indexed(directions.len(), |j| -> Result<Vec<Complex64>> {
        let psi = solver.solve(directions[j]).map_err(|e| {
            Error::contract(format!("forward solve failed for direction index {j}: {e}"))
        })?;
        observations
            .iter()
            .map(|&xhat| solver.far_field(&psi, xhat))
            .collect()
    });
    let mut values = vec![Complex64::new(0.0, 0.0); observations.len() * directions.len()];
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (i, v) in col.into_iter().enumerate() {
            values[i * directions.len() + j] = v;
        }
    }
    Ok(FarFieldDataset {
        config: *config,
        provenance: Provenance::noiseless(profile),
        values,
    })
}

/// Applies multiplicative noise `|u_d| = |u| (1 + delta zeta)` with `zeta`
/// drawn per entry in row-major order from the seeded generator. Negative
/// results are clamped at zero.
pub fn apply_noise_phaseless(
    dataset: &PhaselessDataset,
    delta: f64,
    seed: u64,
    model: NoiseModel,
) -> Result<PhaselessDataset> {
    if !(delta >= 0.0) {
        return Err(Error::domain("noise ratio delta must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = dataset
        .values
        .iter()
        .map(|&v| (v * (1.0 + delta * model.draw(&mut rng))).max(0.0))
        .collect();
    Ok(PhaselessDataset {
        config: dataset.config,
        provenance: Provenance {
            delta,
            seed,
            noise_model: model,
            ..dataset.provenance.clone()
        },
        values,
    })
}

/// Applies `u^inf_d = u^inf + delta (zeta_2 + i zeta_3) |u^inf|`, drawing
/// `zeta_2, zeta_3` per entry (in that order) in row-major order.
pub fn apply_noise_farfield(
    dataset: &FarFieldDataset,
    delta: f64,
    seed: u64,
    model: NoiseModel,
) -> Result<FarFieldDataset> {
    if !(delta >= 0.0) {
        return Err(Error::domain("noise ratio delta must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = dataset
        .values
        .iter()
        .map(|&v| {
            let z2 = model.draw(&mut rng);
            let z3 = model.draw(&mut rng);
            v + Complex64::new(z2, z3) * delta * v.norm()
        })
        .collect();
    Ok(FarFieldDataset {
        config: dataset.config,
        provenance: Provenance {
            delta,
            seed,
            noise_model: model,
            ..dataset.provenance.clone()
        },
        values,
    })
}

// ---------------------------------------------------------------------------
// persistence: text header + CSV body, 17 significant digits
// ---------------------------------------------------------------------------

const PHASELESS_MAGIC: &str = "roughscat phaseless dataset v1";
const FARFIELD_MAGIC: &str = "roughscat farfield dataset v1";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn header_common(config: &MeasurementConfig, prov: &Provenance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kind = {}", prov.profile_kind);
    let _ = writeln!(s, "k = {}", fmt_f64(config.wavenumber));
    let _ = writeln!(s, "radius = {}", fmt_f64(config.radius));
    let _ = writeln!(s, "receivers = {}", config.receivers);
    let _ = writeln!(s, "incident = {}", config.incident);
    let _ = writeln!(s, "observations = {}", config.observations);
    let _ = writeln!(s, "ppw = {}", fmt_f64(config.points_per_wavelength));
    let _ = writeln!(s, "delta = {}", fmt_f64(prov.delta));
    let _ = writeln!(s, "seed = {}", prov.seed);
    let _ = writeln!(s, "noise = {}", prov.noise_model.name());
    let _ = writeln!(
        s,
        "config_sha = {}",
        prov.config_sha.as_deref().unwrap_or("-")
    );
    s
}

impl PhaselessDataset {
    /// Serializes to the `.pld` text format.
    #[allow(clippy::inherent_to_string)]
    pub fn to_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{PHASELESS_MAGIC}");
        s.push_str(&header_common(&self.config, &self.provenance));
        let _ = writeln!(s, "data:");
        for i in 0..self.config.receivers {
            let row: Vec<String> = (0..self.config.incident)
                .map(|j| fmt_f64(self.entry(i, j)))
                .collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = LineParser::new(text);
        lines.expect_magic(PHASELESS_MAGIC)?;
        let (config, prov) = lines.parse_header()?;
        let mut values = Vec::with_capacity(config.receivers * config.incident);
        for _ in 0..config.receivers {
            let row = lines.data_row(config.incident)?;
            values.extend(row);
        }
        lines.expect_end()?;
        if values.iter().any(|v: &f64| !v.is_finite() || *v < 0.0) {
            return Err(Error::integrity(
                "phaseless entries must be finite and nonnegative",
            ));
        }
        Ok(PhaselessDataset { config, provenance: prov, values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(std::fs::File::open(path)?).read_to_string(&mut text)?;
        Self::parse(&text)
    }
}

impl FarFieldDataset {
    /// Serializes to the `.ffd` text format; complex entries are stored as
    /// adjacent `re,im` pairs.
    #[allow(clippy::inherent_to_string)]
    pub fn to_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FARFIELD_MAGIC}");
        s.push_str(&header_common(&self.config, &self.provenance));
        let _ = writeln!(s, "data:");
        for i in 0..self.config.observations {
            let row: Vec<String> = (0..self.config.incident)
                .flat_map(|j| {
                    let v = self.entry(i, j);
                    [fmt_f64(v.re), fmt_f64(v.im)]
                })
                .collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = LineParser::new(text);
        lines.expect_magic(FARFIELD_MAGIC)?;
        let (config, prov) = lines.parse_header()?;
        let mut values = Vec::with_capacity(config.observations * config.incident);
        for _ in 0..config.observations {
            let row = lines.data_row(2 * config.incident)?;
            for pair in row.chunks(2) {
                values.push(Complex64::new(pair[0], pair[1]));
            }
        }
        lines.expect_end()?;
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::integrity("far-field entries must be finite"));
        }
        Ok(FarFieldDataset { config, provenance: prov, values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(std::fs::File::open(path)?).read_to_string(&mut text)?;
        Self::parse(&text)
    }
}

struct LineParser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str) -> Self {
        LineParser { lines: text.lines().enumerate() }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::integrity("file truncated"))
    }

    fn expect_magic(&mut self, magic: &str) -> Result<()> {
        let (line, text) = self.next_line()?;
        if text.trim() != magic {
            return Err(Error::Parse {
                line,
                reason: format!("expected header '{magic}', found '{text}'"),
            });
        }
        Ok(())
    }

    fn parse_header(&mut self) -> Result<(MeasurementConfig, Provenance)> {
        let mut kind = None;
        let mut k = None;
        let mut radius = None;
        let mut receivers = None;
        let mut incident = None;
        let mut observations = None;
        let mut ppw = None;
        let mut delta = None;
        let mut seed = None;
        let mut noise = None;
        let mut config_sha = None;
        loop {
            let (line_no, line) = self.next_line()?;
            let line = line.trim();
            if line == "data:" {
                break;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("expected 'key = value' or 'data:', found '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse {
                line: line_no,
                reason: format!("invalid {what}: '{value}'"),
            };
            match key {
                "kind" => kind = Some(value.to_string()),
                "k" => k = Some(value.parse::<f64>().map_err(|_| bad("wavenumber"))?),
                "radius" => radius = Some(value.parse::<f64>().map_err(|_| bad("radius"))?),
                "receivers" => {
                    receivers = Some(value.parse::<usize>().map_err(|_| bad("receivers"))?)
                }
                "incident" => {
                    incident = Some(value.parse::<usize>().map_err(|_| bad("incident"))?)
                }
                "observations" => {
                    observations =
                        Some(value.parse::<usize>().map_err(|_| bad("observations"))?)
                }
                "ppw" => ppw = Some(value.parse::<f64>().map_err(|_| bad("ppw"))?),
                "delta" => delta = Some(value.parse::<f64>().map_err(|_| bad("delta"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                "noise" => noise = Some(NoiseModel::parse(value)?),
                "config_sha" => {
                    config_sha = Some((value != "-").then(|| value.to_string()));
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("unknown header key '{other}'"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::integrity(format!("missing header field '{what}'"));
        let config = MeasurementConfig {
            radius: radius.ok_or_else(|| missing("radius"))?,
            receivers: receivers.ok_or_else(|| missing("receivers"))?,
            incident: incident.ok_or_else(|| missing("incident"))?,
            observations: observations.ok_or_else(|| missing("observations"))?,
            wavenumber: k.ok_or_else(|| missing("k"))?,
            points_per_wavelength: ppw.ok_or_else(|| missing("ppw"))?,
        };
        let prov = Provenance {
            profile_kind: kind.ok_or_else(|| missing("kind"))?,
            delta: delta.ok_or_else(|| missing("delta"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            noise_model: noise.ok_or_else(|| missing("noise"))?,
            config_sha: config_sha.flatten(),
        };
        Ok((config, prov))
    }

    fn data_row(&mut self, expected: usize) -> Result<Vec<f64>> {
        let (line_no, line) = self
            .next_line()
            .map_err(|_| Error::integrity("file truncated inside the data block"))?;
        let row: std::result::Result<Vec<f64>, _> =
            line.trim().split(',').map(|v| v.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Parse {
            line: line_no,
            reason: format!("invalid numeric entry: {e}"),
        })?;
        if row.len() != expected {
            return Err(Error::integrity(format!(
                "row at line {line_no} has {} entries, header promises {expected}",
                row.len()
            )));
        }
        Ok(row)
    }

    fn expect_end(&mut self) -> Result<()> {
        for (line_no, line) in self.lines.by_ref() {
            if !line.trim().is_empty() {
                return Err(Error::Parse {
                    line: line_no + 1,
                    reason: "trailing content after data block".into(),
                });
            }
        }
        Ok(())
    }
}
