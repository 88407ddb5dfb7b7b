//! Declarative run configuration: a TOML document describing the grid, the
//! coupling matrix, the regularization, and the initial data, compiled into
//! ready-to-run solver pieces.
//!
//! Unknown keys are rejected everywhere (a typo in a tolerance should not
//! silently fall back to a default), and every semantic error carries the
//! key path it refers to.

use crate::coefficients::{
    delta0_scaled_search, seawater_matrix, skew_example_matrix, CouplingMatrix,
    MobilityFunction, MobilityKind, PositivityCertificate, SeawaterParams,
};
use crate::continuation::{LevelParams, LimitSchedule, ScheduleStage};
use crate::entropy::SpeciesState;
use crate::grid::{GridSpec, MollifierProfile, ScalarField};
use crate::rng::SplitMix64;
use crate::scheme::{LinearParams, PicardParams, RegularizationParams, SchemeConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.into() }
}

/// The whole run document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed: every random choice in the run derives from this one
    /// value through named streams. When set it overrides seeds given inside
    /// sections (currently `initial.seed` for random_positive data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Named pointwise mobility for diagnostics and comparison plots. The
    /// time stepper itself always uses the entropy-consistent edge mobility;
    /// this name is validated and echoed, never substituted into the flux.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility: Option<MobilityName>,
    pub grid: GridSection,
    pub matrix: MatrixSection,
    #[serde(default)]
    pub certificate: CertificateSection,
    pub regularization: RegularizationSection,
    pub time: TimeSection,
    pub mollifier: MollifierSection,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub invariants: InvariantsSection,
    pub initial: InitialSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSection {
    /// Decoupled heat/porous-medium dynamics.
    Identity { m: usize },
    /// Row-major entries, one inner list per row.
    Explicit { entries: Vec<Vec<f64>> },
    /// The two-species seawater intrusion coupling [[1-eps0, 1-eps0],
    /// [1-eps0, 1]].
    Seawater { eps0: f64 },
    /// The non-symmetric demonstration pair [[1, -a], [2a, 1]].
    SkewExample { a: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateSection {
    /// Direct if the symmetric part is definite, otherwise a scaled search.
    #[default]
    Auto,
    /// Require the symmetric part itself to be definite.
    Direct,
    /// Always run the diagonal-scaling search.
    ScaledSearch,
    /// Verify the given diagonal scalings.
    Explicit { left: Vec<f64>, right: Vec<f64> },
    /// Run without a certificate: no entropy enforcement.
    None,
}

/// A knob that is either one number for every species or one per species.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PerSpecies {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerSpecies {
    fn resolve(&self, m: usize, path: &str) -> Result<Vec<f64>, ConfigError> {
        match self {
            PerSpecies::Uniform(v) => Ok(vec![*v; m]),
            PerSpecies::Each(vs) => {
                if vs.len() != m {
                    return Err(invalid(
                        path,
                        format!("expected {m} per-species values, got {}", vs.len()),
                    ));
                }
                Ok(vs.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSection {
    pub eps: PerSpecies,
    pub ell: PerSpecies,
    pub delta: PerSpecies,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub steps: usize,
    /// Optional cross-check: dt * steps must equal this within 1e-9 relative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MollifierSection {
    pub eta: f64,
    #[serde(default = "default_profile")]
    pub profile: ProfileName,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    CosineBump,
    Triangle,
}

fn default_profile() -> ProfileName {
    ProfileName::CosineBump
}

impl From<ProfileName> for MollifierProfile {
    fn from(p: ProfileName) -> Self {
        match p {
            ProfileName::CosineBump => MollifierProfile::CosineBump,
            ProfileName::Triangle => MollifierProfile::Triangle,
        }
    }
}

/// The nameable scalar mobilities. Tabulated mobilities carry data and are
/// constructed in code rather than named in a config.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MobilityName {
    Identity,
    PinchedSqrt,
}

impl From<MobilityName> for MobilityKind {
    fn from(n: MobilityName) -> Self {
        match n {
            MobilityName::Identity => MobilityKind::Identity,
            MobilityName::PinchedSqrt => MobilityKind::PinchedSqrt,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        let p = PicardParams::default();
        PicardSection { tol: p.tol, max_iters: p.max_iters, damping: p.damping }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSection {
    pub dense_threshold: usize,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    pub gmres_tol: f64,
}

impl Default for LinearSection {
    fn default() -> Self {
        let l = LinearParams::default();
        LinearSection {
            dense_threshold: l.dense_threshold,
            gmres_restart: l.gmres_restart,
            gmres_max_iters: l.gmres_max_iters,
            gmres_tol: l.gmres_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantsSection {
    pub strict_stability: bool,
    pub enforce: bool,
}

impl Default for InvariantsSection {
    fn default() -> Self {
        InvariantsSection { strict_stability: false, enforce: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// One constant per species.
    Constant { values: Vec<f64> },
    /// A radial bump around `center` shared by all species, with per-species
    /// amplitude above a per-species floor.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: Vec<f64>,
        floor: Vec<f64>,
    },
    /// Independent uniform draws in [min, max] per cell, one named stream
    /// per species: reruns with the same seed are bitwise identical.
    RandomPositive { seed: u64, min: f64, max: f64 },
    /// Two species: a smooth periodic water column dropping from `left_h`
    /// to `right_h` across the torus, over a flat brine level `g_level`.
    SeawaterDambreak {
        left_h: f64,
        right_h: f64,
        g_level: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub stage: StageName,
    pub horizon: f64,
    /// Either generated levels...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    /// ...or fully explicit ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level: Vec<LevelSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    DtEps,
    EllEta,
    Delta,
    Joint,
}

impl From<StageName> for ScheduleStage {
    fn from(s: StageName) -> Self {
        match s {
            StageName::DtEps => ScheduleStage::DtEps,
            StageName::EllEta => ScheduleStage::EllEta,
            StageName::Delta => ScheduleStage::Delta,
            StageName::Joint => ScheduleStage::Joint,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LevelSection {
    pub dt: f64,
    pub eps: f64,
    pub ell: f64,
    pub eta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Where the diagnostics CSV goes when the command line names no file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics_path: Option<String>,
    /// Where snapshots go when the command line names no directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_dir: Option<String>,
    /// Write a full state snapshot every this many steps (0 = none).
    pub snapshot_every: usize,
    /// Also snapshot the final state.
    pub snapshot_final: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            diagnostics_path: None,
            snapshot_dir: None,
            snapshot_every: 0,
            snapshot_final: false,
        }
    }
}

/// A compiled configuration, ready to hand to the solver.
#[derive(Debug, Clone)]
pub struct BuiltRun {
    pub grid: GridSpec,
    pub scheme: SchemeConfig,
    pub initial: SpeciesState,
    pub schedule: Option<(LimitSchedule, f64)>,
    /// Validated diagnostic mobility, if the config named one.
    pub mobility: Option<MobilityFunction>,
    pub snapshot_every: usize,
    pub snapshot_final: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Number of species implied by the matrix section.
    pub fn species_count(&self) -> usize {
        match &self.matrix {
            MatrixSection::Identity { m } => *m,
            MatrixSection::Explicit { entries } => entries.len(),
            MatrixSection::Seawater { .. } | MatrixSection::SkewExample { .. } => 2,
        }
    }

    pub fn build_matrix(&self) -> Result<CouplingMatrix, ConfigError> {
        match &self.matrix {
            MatrixSection::Identity { m } => {
                if *m == 0 {
                    return Err(invalid("matrix.m", "need at least one species"));
                }
                Ok(CouplingMatrix::identity(*m))
            }
            MatrixSection::Explicit { entries } => {
                let m = entries.len();
                let mut flat = Vec::with_capacity(m * m);
                for (i, row) in entries.iter().enumerate() {
                    if row.len() != m {
                        return Err(invalid(
                            "matrix.entries",
                            format!("row {i} has {} entries, expected {m}", row.len()),
                        ));
                    }
                    flat.extend_from_slice(row);
                }
                CouplingMatrix::new(m, flat)
                    .map_err(|e| invalid("matrix.entries", e.to_string()))
            }
            MatrixSection::Seawater { eps0 } => Ok(seawater_matrix(SeawaterParams {
                eps0: *eps0,
            })
            .map_err(|e| invalid("matrix.eps0", e.to_string()))?
            .0),
            MatrixSection::SkewExample { a } => {
                skew_example_matrix(*a).map_err(|e| invalid("matrix.a", e.to_string()))
            }
        }
    }

    pub fn build_certificate(
        &self,
        matrix: &CouplingMatrix,
    ) -> Result<PositivityCertificate, ConfigError> {
        use crate::coefficients::DirectPositivity;
        let cert = match &self.certificate {
            CertificateSection::Auto => match matrix.delta0_direct() {
                DirectPositivity::Holds { delta0 } => PositivityCertificate::Direct { delta0 },
                DirectPositivity::Fails { .. } => delta0_scaled_search(matrix)
                    .map_err(|e| invalid("certificate", e.to_string()))?,
            },
            CertificateSection::Direct => match matrix.delta0_direct() {
                DirectPositivity::Holds { delta0 } => PositivityCertificate::Direct { delta0 },
                DirectPositivity::Fails { lambda_min } => {
                    return Err(invalid(
                        "certificate.kind",
                        format!(
                            "direct certificate requested but sym(A) has lambda_min = {lambda_min}"
                        ),
                    ));
                }
            },
            CertificateSection::ScaledSearch => delta0_scaled_search(matrix)
                .map_err(|e| invalid("certificate", e.to_string()))?,
            CertificateSection::Explicit { left, right } => {
                PositivityCertificate::from_scaling(matrix, left, right)
                    .map_err(|e| invalid("certificate", e.to_string()))?
            }
            CertificateSection::None => {
                PositivityCertificate::None { best_lambda: f64::NAN }
            }
        };
        // An explicitly requested witness that fails the search is a config
        // error, not a silent downgrade.
        if matches!(self.certificate, CertificateSection::Explicit { .. })
            && cert.delta0().is_none()
        {
            return Err(invalid(
                "certificate",
                "the given scalings do not make sym(L A R) positive definite",
            ));
        }
        Ok(cert)
    }

    pub fn build_regularization(&self) -> Result<RegularizationParams, ConfigError> {
        let m = self.species_count();
        let eps = self.regularization.eps.resolve(m, "regularization.eps")?;
        let ell = self.regularization.ell.resolve(m, "regularization.ell")?;
        let delta = self.regularization.delta.resolve(m, "regularization.delta")?;
        RegularizationParams::per_species(eps, ell, delta)
            .map_err(|e| invalid("regularization", e.to_string()))
    }

    pub fn build_initial(&self, grid: GridSpec) -> Result<SpeciesState, ConfigError> {
        let m = self.species_count();
        let fields = match &self.initial {
            InitialSection::Constant { values } => {
                if values.len() != m {
                    return Err(invalid(
                        "initial.values",
                        format!("expected {m} species values, got {}", values.len()),
                    ));
                }
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        if !(c >= 0.0) || !c.is_finite() {
                            return Err(invalid(
                                "initial.values",
                                format!("species {i}: {c} is not a nonnegative number"),
                            ));
                        }
                        ScalarField::constant(grid, c)
                            .map_err(|e| invalid("initial.values", e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            InitialSection::GaussianBump { center, width, amplitude, floor } => {
                if center.len() != grid.dim() {
                    return Err(invalid(
                        "initial.center",
                        format!("expected {} coordinates, got {}", grid.dim(), center.len()),
                    ));
                }
                if !(*width > 0.0) {
                    return Err(invalid("initial.width", "must be positive"));
                }
                for (name, v) in [("initial.amplitude", amplitude), ("initial.floor", floor)] {
                    if v.len() != m {
                        return Err(invalid(
                            name,
                            format!("expected {m} species values, got {}", v.len()),
                        ));
                    }
                    if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                        return Err(invalid(name, "all values must be nonnegative"));
                    }
                }
                let w2 = width * width;
                (0..m)
                    .map(|i| {
                        let (amp, fl) = (amplitude[i], floor[i]);
                        let c = center.clone();
                        ScalarField::from_fn(grid, move |x| {
                            // Periodic squared distance to the bump center.
                            let d2: f64 = x
                                .iter()
                                .zip(&c)
                                .map(|(xi, ci)| {
                                    let d = (xi - ci).abs();
                                    let d = d.min(1.0 - d);
                                    d * d
                                })
                                .sum();
                            fl + amp * (-d2 / (2.0 * w2)).exp()
                        })
                        .map_err(|e| invalid("initial", e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            InitialSection::RandomPositive { seed, min, max } => {
                if !(*min >= 0.0 && *max > *min) {
                    return Err(invalid(
                        "initial",
                        format!("need 0 <= min < max, got min = {min}, max = {max}"),
                    ));
                }
                // The top-level master seed, when present, wins over the
                // section-local one.
                let seed = self.seed.unwrap_or(*seed);
                (0..m)
                    .map(|i| {
                        let mut rng = SplitMix64::stream(seed, "initial", i as u64);
                        let vals: Vec<f64> =
                            (0..grid.cells()).map(|_| rng.next_in(*min, *max)).collect();
                        ScalarField::from_values(grid, vals)
                            .map_err(|e| invalid("initial", e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            InitialSection::SeawaterDambreak { left_h, right_h, g_level } => {
                if m != 2 {
                    return Err(invalid(
                        "initial.kind",
                        format!("seawater_dambreak needs exactly 2 species, matrix has {m}"),
                    ));
                }
                for (name, v) in [
                    ("initial.left_h", *left_h),
                    ("initial.right_h", *right_h),
                    ("initial.g_level", *g_level),
                ] {
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(invalid(name, "must be a nonnegative number"));
                    }
                }
                let (lh, rh, gl) = (*left_h, *right_h, *g_level);
                let water = ScalarField::from_fn(grid, move |x| {
                    // Smooth periodic column: peaks at x = 0, trough at 1/2.
                    let s = (std::f64::consts::PI * x[0]).cos();
                    rh + (lh - rh) * s * s
                })
                .map_err(|e| invalid("initial", e.to_string()))?;
                let brine = ScalarField::constant(grid, gl)
                    .map_err(|e| invalid("initial", e.to_string()))?;
                vec![water, brine]
            }
        };
        SpeciesState::new(fields, 0.0).map_err(|e| invalid("initial", e.to_string()))
    }

    fn build_schedule(&self) -> Result<Option<(LimitSchedule, f64)>, ConfigError> {
        let Some(s) = &self.schedule else { return Ok(None) };
        let stage: ScheduleStage = s.stage.into();
        if !(s.horizon > 0.0) || !s.horizon.is_finite() {
            return Err(invalid("schedule.horizon", "must be positive"));
        }
        let schedule = if !s.level.is_empty() {
            if s.levels.is_some() || s.factor.is_some() {
                return Err(invalid(
                    "schedule",
                    "give either explicit [[schedule.level]] tables or levels+factor, not both",
                ));
            }
            let levels = s
                .level
                .iter()
                .map(|l| LevelParams {
                    dt: l.dt,
                    eps: l.eps,
                    ell: l.ell,
                    eta: l.eta,
                    delta: l.delta,
                })
                .collect();
            LimitSchedule::explicit(stage, levels)
                .map_err(|e| invalid("schedule.level", e.to_string()))?
        } else {
            let (Some(count), Some(factor)) = (s.levels, s.factor) else {
                return Err(invalid(
                    "schedule",
                    "generated schedules need both levels and factor",
                ));
            };
            let base = LevelParams {
                dt: self.time.dt,
                eps: first_of(&self.regularization.eps),
                ell: first_of(&self.regularization.ell),
                delta: first_of(&self.regularization.delta),
                eta: self.mollifier.eta,
            };
            LimitSchedule::generated(stage, base, count, factor)
                .map_err(|e| invalid("schedule", e.to_string()))?
        };
        Ok(Some((schedule, s.horizon)))
    }

    /// Compiles the document into solver-ready pieces, validating everything.
    pub fn build(&self) -> Result<BuiltRun, ConfigError> {
        let grid = GridSpec::new(self.grid.dim, self.grid.n)
            .map_err(|e| invalid("grid", e.to_string()))?;
        let matrix = self.build_matrix()?;
        let certificate = self.build_certificate(&matrix)?;
        let reg = self.build_regularization()?;

        if !(self.time.dt > 0.0) || !self.time.dt.is_finite() {
            return Err(invalid("time.dt", "must be positive and finite"));
        }
        if self.time.steps == 0 {
            return Err(invalid("time.steps", "must be at least 1"));
        }
        if let Some(h) = self.time.horizon {
            let implied = self.time.dt * self.time.steps as f64;
            if (implied - h).abs() > 1e-9 * h.abs().max(1.0) {
                return Err(invalid(
                    "time.horizon",
                    format!("dt * steps = {implied} does not match horizon = {h}"),
                ));
            }
        }
        if self.picard.tol <= 0.0 || self.picard.max_iters == 0 {
            return Err(invalid("picard", "tol must be positive and max_iters nonzero"));
        }
        if !(0.0..1.0).contains(&self.picard.damping) {
            return Err(invalid("picard.damping", "must lie in [0, 1)"));
        }
        if self.linear.gmres_tol <= 0.0 || self.linear.gmres_restart == 0 {
            return Err(invalid("linear", "gmres_tol must be positive and restart nonzero"));
        }

        let mut scheme = SchemeConfig::new(
            matrix,
            certificate,
            reg,
            self.mollifier.eta,
            self.time.dt,
            self.time.steps,
        );
        scheme.profile = self.mollifier.profile.into();
        scheme.picard = PicardParams {
            tol: self.picard.tol,
            max_iters: self.picard.max_iters,
            damping: self.picard.damping,
        };
        scheme.linear = LinearParams {
            dense_threshold: self.linear.dense_threshold,
            gmres_restart: self.linear.gmres_restart,
            gmres_max_iters: self.linear.gmres_max_iters,
            gmres_tol: self.linear.gmres_tol,
        };
        scheme.strict_stability = self.invariants.strict_stability;
        scheme.enforce_invariants = self.invariants.enforce;

        let initial = self.build_initial(grid)?;
        let schedule = self.build_schedule()?;
        let mobility = match self.mobility {
            Some(name) => Some(
                MobilityFunction::new(name.into())
                    .map_err(|e| invalid("mobility", e.to_string()))?,
            ),
            None => None,
        };

        Ok(BuiltRun {
            grid,
            scheme,
            initial,
            schedule,
            mobility,
            snapshot_every: self.output.snapshot_every,
            snapshot_final: self.output.snapshot_final,
        })
    }
}

fn first_of(p: &PerSpecies) -> f64 {
    match p {
        PerSpecies::Uniform(v) => *v,
        PerSpecies::Each(vs) => vs.first().copied().unwrap_or(f64::NAN),
    }
}

/// Built-in ready-to-run configurations.
pub fn preset_names() -> &'static [&'static str] {
    &["porous_medium", "seawater", "skew_example"]
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        "porous_medium" => RunConfig {
            seed: None,
            mobility: None,
            grid: GridSection { dim: 1, n: 64 },
            matrix: MatrixSection::Identity { m: 1 },
            certificate: CertificateSection::Auto,
            regularization: RegularizationSection {
                eps: PerSpecies::Uniform(1e-4),
                ell: PerSpecies::Uniform(10.0),
                delta: PerSpecies::Uniform(1e-3),
            },
            time: TimeSection { dt: 1e-4, steps: 200, horizon: None },
            mollifier: MollifierSection { eta: 0.1, profile: ProfileName::CosineBump },
            picard: PicardSection::default(),
            linear: LinearSection::default(),
            invariants: InvariantsSection::default(),
            initial: InitialSection::GaussianBump {
                center: vec![0.5],
                width: 0.08,
                amplitude: vec![1.0],
                floor: vec![0.1],
            },
            schedule: None,
            output: OutputSection::default(),
        },
        "seawater" => RunConfig {
            seed: None,
            mobility: None,
            grid: GridSection { dim: 1, n: 48 },
            matrix: MatrixSection::Seawater { eps0: 0.025 },
            certificate: CertificateSection::Auto,
            regularization: RegularizationSection {
                eps: PerSpecies::Uniform(1e-3),
                ell: PerSpecies::Uniform(8.0),
                delta: PerSpecies::Uniform(1e-2),
            },
            time: TimeSection { dt: 2e-4, steps: 250, horizon: Some(0.05) },
            mollifier: MollifierSection { eta: 0.12, profile: ProfileName::CosineBump },
            picard: PicardSection::default(),
            linear: LinearSection::default(),
            invariants: InvariantsSection::default(),
            initial: InitialSection::SeawaterDambreak {
                left_h: 1.2,
                right_h: 0.4,
                g_level: 0.6,
            },
            schedule: None,
            output: OutputSection::default(),
        },
        "skew_example" => RunConfig {
            seed: None,
            mobility: None,
            grid: GridSection { dim: 1, n: 32 },
            matrix: MatrixSection::SkewExample { a: 3.0 },
            certificate: CertificateSection::ScaledSearch,
            regularization: RegularizationSection {
                eps: PerSpecies::Uniform(1e-3),
                ell: PerSpecies::Uniform(6.0),
                delta: PerSpecies::Uniform(1e-2),
            },
            time: TimeSection { dt: 2e-4, steps: 150, horizon: None },
            mollifier: MollifierSection { eta: 0.15, profile: ProfileName::CosineBump },
            picard: PicardSection::default(),
            linear: LinearSection::default(),
            invariants: InvariantsSection::default(),
            initial: InitialSection::RandomPositive { seed: 7, min: 0.3, max: 1.2 },
            schedule: None,
            output: OutputSection::default(),
        },
        _ => return None,
    };
    Some(cfg)
}
