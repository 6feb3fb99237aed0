use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use virial_core::models::{HartreeSpec, ModelSpec, NonlinearitySpec, PotentialShape, PotentialSpec, PowerTerm};
use virial_core::solutions::{breather_seed, odd_packet, sech_wave, soliton_profile, SolitonSpec};
use virial_core::{ComplexField, EvolveConfig, Grid, Sponge};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Conservation,
    VirialCheck,
    Coercivity,
    Spectrum,
    Simon,
    Decay,
    Counterexample,
    SpacetimeBound,
    MomentumIdentity,
    HartreePositivity,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Conservation => "conservation",
            Kind::VirialCheck => "virial-check",
            Kind::Coercivity => "coercivity",
            Kind::Spectrum => "spectrum",
            Kind::Simon => "simon",
            Kind::Decay => "decay",
            Kind::Counterexample => "counterexample",
            Kind::SpacetimeBound => "spacetime-bound",
            Kind::MomentumIdentity => "momentum-identity",
            Kind::HartreePositivity => "hartree-positivity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_length: f64,
    pub n_points: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, LabError> {
        Ok(Grid::new(self.half_length, self.n_points)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    SechPower { amplitude: f64, power: f64 },
}

impl PotentialConfig {
    pub fn shape(&self) -> PotentialShape {
        match *self {
            PotentialConfig::SechPower { amplitude, power } => PotentialShape::SechPower { amplitude, power },
        }
    }
}

/// `terms` are `[coefficient, exponent]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Semilinear {
        #[serde(default)]
        label: Option<String>,
        terms: Vec<[f64; 2]>,
    },
    WithPotential {
        #[serde(default)]
        label: Option<String>,
        terms: Vec<[f64; 2]>,
        mu: f64,
        potential: PotentialConfig,
    },
    Hartree {
        #[serde(default)]
        label: Option<String>,
        a: f64,
        sigma: f64,
    },
}

fn nonlinearity(terms: &[[f64; 2]]) -> Result<NonlinearitySpec, LabError> {
    Ok(NonlinearitySpec::new(
        terms
            .iter()
            .map(|&[coeff, exponent]| PowerTerm { coeff, exponent })
            .collect(),
    )?)
}

impl ModelConfig {
    pub fn label(&self) -> String {
        let given = match self {
            ModelConfig::Semilinear { label, .. }
            | ModelConfig::WithPotential { label, .. }
            | ModelConfig::Hartree { label, .. } => label.clone(),
        };
        given.unwrap_or_else(|| match self {
            ModelConfig::Semilinear { .. } => "semilinear".into(),
            ModelConfig::WithPotential { .. } => "potential".into(),
            ModelConfig::Hartree { .. } => "hartree".into(),
        })
    }

    pub fn build(&self, grid: &Grid) -> Result<ModelSpec, LabError> {
        Ok(match self {
            ModelConfig::Semilinear { terms, .. } => ModelSpec::Semilinear(nonlinearity(terms)?),
            ModelConfig::WithPotential { terms, mu, potential, .. } => ModelSpec::WithPotential(
                nonlinearity(terms)?,
                PotentialSpec::from_shape(grid, *mu, potential.shape())?,
            ),
            ModelConfig::Hartree { a, sigma, .. } => ModelSpec::Hartree(HartreeSpec::new(*a, *sigma)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    Zero,
    OddPacket { eps: f64, k: f64, x0: f64 },
    Soliton { c: f64, p: f64 },
    Breather { c: f64 },
    SechWave { amplitude: f64, k: f64, x0: f64 },
}

impl DataConfig {
    pub fn build(&self, grid: &Grid) -> Result<ComplexField, LabError> {
        Ok(match *self {
            DataConfig::Zero => ComplexField::zeros(grid),
            DataConfig::OddPacket { eps, k, x0 } => odd_packet(eps, k, x0, grid)?,
            DataConfig::Soliton { c, p } => soliton_profile(&SolitonSpec::new(c, p)?, grid).to_complex(),
            DataConfig::Breather { c } => breather_seed(c, grid)?,
            DataConfig::SechWave { amplitude, k, x0 } => sech_wave(amplitude, k, x0, grid),
        })
    }

    /// Same datum with the packet size replaced, for ladders.
    pub fn with_eps(&self, eps: f64) -> Result<Self, LabError> {
        match *self {
            DataConfig::OddPacket { k, x0, .. } => Ok(DataConfig::OddPacket { eps, k, x0 }),
            DataConfig::Zero => Ok(DataConfig::Zero),
            _ => Err(LabError::Config("an epsilon ladder needs odd_packet data".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpongeConfig {
    pub width: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    #[serde(default)]
    pub sponge: Option<SpongeConfig>,
    #[serde(default)]
    pub dealias: bool,
}

impl EvolveSection {
    pub fn build(&self) -> EvolveConfig {
        EvolveConfig {
            dt: self.dt,
            t_end: self.t_end,
            sample_every: self.sample_every,
            sponge: self.sponge.as_ref().map(|s| Sponge {
                width: s.width,
                strength: s.strength,
            }),
            dealias: self.dealias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    #[serde(default = "default_lambda_virial")]
    pub lambda_virial: f64,
    #[serde(default = "default_lambda_coercive")]
    pub lambda_coercive: f64,
}

fn default_lambda_virial() -> f64 {
    2.0
}

fn default_lambda_coercive() -> f64 {
    100.0
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            lambda_virial: default_lambda_virial(),
            lambda_coercive: default_lambda_coercive(),
        }
    }
}

/// Parameter lists swept by a single experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub mus: Vec<f64>,
    #[serde(default)]
    pub dts: Vec<f64>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub a_values: Vec<f64>,
    #[serde(default)]
    pub exponents: Vec<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

fn default_interval() -> [f64; 2] {
    [-5.0, 5.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub potentials: Vec<PotentialConfig>,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub evolve: Option<EvolveSection>,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub output: Option<String>,
}

/// Thresholds used when a config does not set them.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("mass_drift", 1e-10),
        ("energy_ratio_min", 3.5),
        ("energy_ratio_max", 4.5),
        ("momentum_drift", 1e-8),
        ("order_min", 1.8),
        ("order_max", 2.2),
        ("coercivity_factor", 1.5),
        ("coercivity_slack", 1e-8),
        ("transform_rel", 1e-8),
        ("odd_eigen_floor", -1e-8),
        ("weighted_constant", 10.0),
        ("positivity_floor", 1e-12),
        ("sym_asym_rel", 1e-10),
        ("v0_dual", 1e-8),
        ("decay_factor", 0.1),
        ("decay_factor_inf", 0.2),
        ("weighted_rate_constant", 1.0),
        ("contamination", 1e-8),
        ("contamination_band", 1.0),
        ("c_test", 0.1),
        ("sample_fraction", 0.99),
        ("spacetime_constant", 1.0),
        ("band_low", 0.9),
        ("band_high", 1.1),
        ("recurrence", 0.05),
        ("recurrence_trigger", 0.5),
        ("periods", 3.0),
        ("momentum_rel", 1e-4),
        ("real_drift", 1e-8),
        ("localization", 1e-8),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config tolerances merged over the defaults.
    pub fn tolerances(&self) -> BTreeMap<String, f64> {
        let mut t = default_tolerances();
        t.extend(self.tolerances.iter().map(|(k, v)| (k.clone(), *v)));
        t
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances()
            .get(name)
            .copied()
            .unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    pub fn data(&self) -> Result<&DataConfig, LabError> {
        self.data
            .as_ref()
            .ok_or_else(|| LabError::Config(format!("{} needs a data section", self.kind.as_str())))
    }

    pub fn evolve(&self) -> Result<&EvolveSection, LabError> {
        self.evolve
            .as_ref()
            .ok_or_else(|| LabError::Config(format!("{} needs an evolve section", self.kind.as_str())))
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let cfg_err = |m: &str| Err(LabError::Config(format!("{}: {m}", self.kind.as_str())));
        let needs_models = matches!(
            self.kind,
            Kind::Conservation | Kind::VirialCheck | Kind::Decay | Kind::Counterexample | Kind::SpacetimeBound | Kind::MomentumIdentity
        );
        if needs_models && self.models.is_empty() {
            return cfg_err("at least one model is required");
        }
        let needs_evolve = matches!(
            self.kind,
            Kind::Conservation | Kind::Decay | Kind::Counterexample | Kind::SpacetimeBound | Kind::MomentumIdentity
        );
        if needs_evolve {
            self.evolve()?;
        }
        if needs_evolve || self.kind == Kind::VirialCheck {
            self.data()?;
        }
        if self.interval[0].partial_cmp(&self.interval[1]) != Some(std::cmp::Ordering::Less) {
            return cfg_err("interval must satisfy a < b");
        }
        match self.kind {
            Kind::Conservation | Kind::VirialCheck if self.sweep.dts.len() < 2 => cfg_err("sweep.dts needs at least two steps"),
            Kind::SpacetimeBound if self.sweep.epsilons.is_empty() => cfg_err("sweep.epsilons is empty"),
            Kind::Spectrum | Kind::Coercivity if self.sweep.lambdas.is_empty() => cfg_err("sweep.lambdas is empty"),
            Kind::Simon if self.sweep.mus.is_empty() => cfg_err("sweep.mus is empty"),
            Kind::Simon if self.potentials.is_empty() => cfg_err("at least one potential is required"),
            Kind::HartreePositivity if self.sweep.a_values.is_empty() => cfg_err("sweep.a_values is empty"),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_decay_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "kind": "decay",
                "grid": {"half_length": 40, "n_points": 256},
                "models": [{"type": "semilinear", "terms": [[1, 3]]}],
                "data": {"type": "odd_packet", "eps": 0.1, "k": 0.5, "x0": 2},
                "evolve": {"dt": 0.01, "t_end": 1, "sample_every": 10},
                "tolerances": {"decay_factor": 0.5}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.interval, [-5.0, 5.0]);
        assert_eq!(cfg.weights.lambda_virial, 2.0);
        assert_eq!(cfg.tol("decay_factor"), 0.5);
        assert_eq!(cfg.tol("contamination"), 1e-8);
    }

    #[test]
    fn rejects_missing_sections_and_unknown_fields() {
        let missing = r#"{"kind": "decay", "grid": {"half_length": 40, "n_points": 256},
            "models": [{"type": "hartree", "a": 0.5, "sigma": 1}]}"#;
        assert!(matches!(ExperimentConfig::from_json(missing), Err(LabError::Config(_))));
        let unknown = r#"{"kind": "spectrum", "grid": {"half_length": 40, "n_points": 256}, "bogus": 1}"#;
        assert!(matches!(ExperimentConfig::from_json(unknown), Err(LabError::Json(_))));
    }
}
