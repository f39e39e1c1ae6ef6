use std::fmt::Write as _;
use std::path::Path;

use pairing_ep::atlas::AtlasOptions;
use pairing_ep::discriminant::FinderOptions;
use pairing_ep::monodromy::LoopSpec;
use pairing_ep::{Complex64, LevelSpec, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Raised for unreadable, malformed or inconsistent configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Complete run configuration. Every key is optional; missing keys take the
/// documented defaults and unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub precision: PrecisionConfig,
    pub atlas: AtlasConfig,
    pub sweep: SweepConfig,
    pub encircle: EncircleConfig,
    pub cut: CutConfig,
}

/// `[model]`: single-particle levels, pair number and anisotropy ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Level energies, default `[0, 1, 2]`.
    pub epsilons: Vec<f64>,
    /// Level degeneracies (even), default `[2, 6, 2]`.
    pub omegas: Vec<u32>,
    /// Number of pairs, default 2.
    pub n_pairs: u32,
    /// Ratio of the anisotropy coupling to the pairing coupling, default −0.5.
    pub gamma: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 1.0, 2.0],
            omegas: vec![2, 6, 2],
            n_pairs: 2,
            gamma: -0.5,
        }
    }
}

/// `[precision]`: numerical thresholds shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrecisionConfig {
    /// Interpolation circle radius of the root finder, default 0.5.
    pub finder_radius: f64,
    /// Root clustering radius relative to the circle radius, default 1e-6.
    pub cluster: f64,
    /// Coalescence threshold on |b(u,u)|, default 1e-6.
    pub tau: f64,
    /// Radius of the classification loop, default 0.01.
    pub loop_radius: f64,
    /// Steps per classification loop, default 256.
    pub loop_steps: usize,
    /// Distance below which two points count as merged in a sweep, default 1e-4.
    pub merge_radius: f64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        let a = AtlasOptions::default();
        Self {
            finder_radius: a.finder.radius,
            cluster: a.finder.cluster_factor,
            tau: a.tau,
            loop_radius: a.loop_radius,
            loop_steps: a.loop_steps,
            merge_radius: a.merge_radius,
        }
    }
}

/// `[atlas]`: reported window and heatmap grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    /// Re g range, default `[-0.3, 0.3]`.
    pub re: [f64; 2],
    /// Im g range, default `[-0.3, 0.3]`.
    pub im: [f64; 2],
    /// Heatmap columns, default 121.
    pub nx: usize,
    /// Heatmap rows, default 121.
    pub ny: usize,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            re: [-0.3, 0.3],
            im: [-0.3, 0.3],
            nx: 121,
            ny: 121,
        }
    }
}

/// `[sweep]`: γ grid of the coalescence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// γ range, default `[-0.52, -0.48]`.
    pub gamma: [f64; 2],
    /// Number of γ samples, default 9.
    pub steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: [-0.52, -0.48],
            steps: 9,
        }
    }
}

/// `[encircle]`: circular loop in the coupling plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncircleConfig {
    /// Loop center `[Re g, Im g]`, default the pseudo-DP `[0, −1/(4√2)]`.
    pub center: [f64; 2],
    /// Loop radius, default 0.01.
    pub radius: f64,
    /// Steps per loop, default 256.
    pub steps: usize,
    /// Loops traced while counting restorations, default 4.
    pub loops: usize,
    /// Clockwise orientation, default false.
    pub clockwise: bool,
}

impl Default for EncircleConfig {
    fn default() -> Self {
        Self {
            center: [0.0, -1.0 / (4.0 * 2f64.sqrt())],
            radius: 0.01,
            steps: 256,
            loops: 4,
            clockwise: false,
        }
    }
}

/// `[cut]`: straight segment for spectra and pairing energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutConfig {
    /// Start `[Re g, Im g]`, default `[−0.05, −1/(4√2)]`.
    pub start: [f64; 2],
    /// End `[Re g, Im g]`, default `[0.05, −1/(4√2)]`.
    pub end: [f64; 2],
    /// Samples along the segment, default 400.
    pub samples: usize,
    /// 1-based labels of the states summed in the pairing-energy file, default `[2, 3]`.
    pub states: [usize; 2],
}

impl Default for CutConfig {
    fn default() -> Self {
        let y = -1.0 / (4.0 * 2f64.sqrt());
        Self {
            start: [-0.05, y],
            end: [0.05, y],
            samples: 400,
            states: [2, 3],
        }
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), ConfigError> {
    match values.iter().all(|v| v.is_finite()) {
        true => Ok(()),
        false => Err(ConfigError(format!("{name}: values must be finite"))),
    }
}

fn positive(name: &str, value: f64) -> Result<(), ConfigError> {
    match value > 0.0 && value.is_finite() {
        true => Ok(()),
        false => Err(ConfigError(format!("{name}: must be positive, got {value}"))),
    }
}

fn range(name: &str, r: [f64; 2]) -> Result<(), ConfigError> {
    finite(name, &r)?;
    match r[0] < r[1] {
        true => Ok(()),
        false => Err(ConfigError(format!("{name}: lower bound {} not below upper bound {}", r[0], r[1]))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if m.epsilons.len() != m.omegas.len() {
            return Err(ConfigError(format!(
                "model: {} epsilons but {} omegas",
                m.epsilons.len(),
                m.omegas.len()
            )));
        }
        self.model_spec()
            .validate()
            .map_err(|e| ConfigError(format!("model: {e}")))?;
        let p = &self.precision;
        for (name, v) in [
            ("precision.finder_radius", p.finder_radius),
            ("precision.cluster", p.cluster),
            ("precision.tau", p.tau),
            ("precision.loop_radius", p.loop_radius),
            ("precision.merge_radius", p.merge_radius),
        ] {
            positive(name, v)?;
        }
        if p.loop_steps < 64 {
            return Err(ConfigError("precision.loop_steps: at least 64".into()));
        }
        range("atlas.re", self.atlas.re)?;
        range("atlas.im", self.atlas.im)?;
        if self.atlas.nx < 2 || self.atlas.ny < 2 {
            return Err(ConfigError("atlas: nx and ny must be at least 2".into()));
        }
        range("sweep.gamma", self.sweep.gamma)?;
        if self.sweep.steps < 2 {
            return Err(ConfigError("sweep.steps: at least 2".into()));
        }
        finite("encircle.center", &self.encircle.center)?;
        self.loop_spec()
            .validate()
            .map_err(|e| ConfigError(format!("encircle: {e}")))?;
        finite("cut.start", &self.cut.start)?;
        finite("cut.end", &self.cut.end)?;
        if self.cut.start == self.cut.end {
            return Err(ConfigError("cut: start and end coincide".into()));
        }
        if self.cut.samples < 2 {
            return Err(ConfigError("cut.samples: at least 2".into()));
        }
        let dim = pairing_ep::model::enumerate_basis(&self.model_spec())
            .map_err(|e| ConfigError(format!("model: {e}")))?
            .len();
        let [a, b] = self.cut.states;
        if a == b || a == 0 || b == 0 || a > dim || b > dim {
            return Err(ConfigError(format!(
                "cut.states: two distinct labels in 1..={dim} required, got [{a}, {b}]"
            )));
        }
        Ok(())
    }

    pub fn model_spec(&self) -> ModelSpec {
        let levels = self
            .model
            .epsilons
            .iter()
            .zip(&self.model.omegas)
            .map(|(&e, &w)| LevelSpec::new(e, w))
            .collect();
        ModelSpec::new(levels, self.model.n_pairs, self.model.gamma)
    }

    pub fn atlas_options(&self) -> AtlasOptions {
        let p = &self.precision;
        AtlasOptions {
            finder: FinderOptions {
                radius: p.finder_radius,
                cluster_factor: p.cluster,
                ..FinderOptions::default()
            },
            tau: p.tau,
            loop_radius: p.loop_radius,
            loop_steps: p.loop_steps,
            merge_radius: p.merge_radius,
        }
    }

    pub fn loop_spec(&self) -> LoopSpec {
        let e = &self.encircle;
        let spec = LoopSpec::new(Complex64::new(e.center[0], e.center[1]), e.radius)
            .with_steps(e.steps)
            .with_loops(e.loops);
        match e.clockwise {
            true => spec.reversed(),
            false => spec,
        }
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}
