use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;

use super::HarnessError;
use crate::field::Grid;
use crate::perturbation::Perturbation;
use crate::simulator::SimConfig;
use crate::soliton::CoreParams;

/// Perturbation named by its label, with its strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    None,
    DispersiveDamping { gamma: f64 },
    LinearDamping { gamma: f64 },
    TwoPhoton { gamma3: f64 },
}

impl PerturbationSpec {
    pub fn build(&self) -> crate::Result<Perturbation> {
        match *self {
            PerturbationSpec::None => Ok(Perturbation::none()),
            PerturbationSpec::DispersiveDamping { gamma } => Perturbation::dispersive_damping(gamma),
            PerturbationSpec::LinearDamping { gamma } => Perturbation::linear_damping(gamma),
            PerturbationSpec::TwoPhoton { gamma3 } => Perturbation::two_photon(gamma3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSpec {
    pub u_inf: f64,
    pub delta_phi0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    /// Number of intervals N; the grid holds N + 1 points.
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub z_max: f64,
    /// Step size; the stability bound `0.2·dt²` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dz: Option<f64>,
    /// Propagation distance between stored snapshots.
    pub snapshot_spacing: f64,
    /// Comoving probe offset T* for the phase-drift measurement.
    pub probe: f64,
    /// Start of the z window used for rate and edge-speed fits.
    pub fit_from: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Profile,
    Contour,
    Trajectory,
    Layer,
    Snapshots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run identifier, used as a file-name prefix.
    pub name: String,
    pub perturbation: PerturbationSpec,
    pub epsilon: f64,
    pub soliton: SolitonSpec,
    pub grid: GridSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub outputs: Vec<OutputKind>,
}

fn invalid(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Validation { field: field.to_string(), reason: reason.into() }
}

fn core_error(field: &str, err: crate::Error) -> HarnessError {
    invalid(field, err.to_string())
}

impl ExperimentConfig {
    pub fn core_params(&self) -> Result<CoreParams, HarnessError> {
        CoreParams::new(self.soliton.u_inf, self.soliton.delta_phi0, 0.0, 0.0).map_err(|e| core_error("soliton", e))
    }

    pub fn grid(&self) -> Result<Grid, HarnessError> {
        Grid::new(self.grid.half_width, self.grid.intervals).map_err(|e| core_error("grid", e))
    }

    pub fn perturbation(&self) -> Result<Perturbation, HarnessError> {
        self.perturbation.build().map_err(|e| core_error("perturbation", e))
    }

    pub fn dz(&self) -> Result<f64, HarnessError> {
        Ok(self.run.dz.unwrap_or(SimConfig::max_dz(&self.grid()?)))
    }

    pub fn sim_config(&self) -> Result<SimConfig, HarnessError> {
        let dz = self.dz()?;
        let stride = ((self.run.snapshot_spacing / dz).round() as usize).max(1);
        let cfg = SimConfig::new(self.epsilon, self.perturbation()?, dz, stride);
        cfg.validate(&self.grid()?).map_err(|e| core_error("run", e))?;
        Ok(cfg)
    }

    /// Checks every field, reporting the first offending one.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("name", format!("`{}` must be non-empty ASCII letters, digits, `_` or `-`", self.name)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid("epsilon", format!("must be finite and >= 0, got {}", self.epsilon)));
        }
        self.perturbation()?;
        let params = self.core_params()?;
        let grid = self.grid()?;
        let run = &self.run;
        if !(run.z_max.is_finite() && run.z_max > 0.0) {
            return Err(invalid("run.z_max", format!("must be > 0, got {}", run.z_max)));
        }
        if grid.half_width < 3.0 * params.u_inf * run.z_max {
            return Err(invalid("grid.half_width", format!("{} is below 3·u_inf·z_max = {}", grid.half_width, 3.0 * params.u_inf * run.z_max)));
        }
        if !(run.snapshot_spacing.is_finite() && run.snapshot_spacing > 0.0 && run.snapshot_spacing <= run.z_max) {
            return Err(invalid("run.snapshot_spacing", format!("must lie in (0, z_max], got {}", run.snapshot_spacing)));
        }
        if !(run.probe.is_finite() && run.probe != 0.0) {
            return Err(invalid("run.probe", format!("must be finite and nonzero, got {}", run.probe)));
        }
        if !(run.fit_from.is_finite() && run.fit_from >= 0.0 && run.fit_from < run.z_max) {
            return Err(invalid("run.fit_from", format!("must lie in [0, z_max), got {}", run.fit_from)));
        }
        self.sim_config()?;
        Ok(())
    }
}

/// Named experiments reproducing the reference regimes at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    BlackDispersive,
    GreyDispersive,
    GreySweep,
    Unperturbed,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::BlackDispersive, Preset::GreyDispersive, Preset::GreySweep, Preset::Unperturbed];

    pub fn name(self) -> &'static str {
        match self {
            Preset::BlackDispersive => "black_dispersive",
            Preset::GreyDispersive => "grey_dispersive",
            Preset::GreySweep => "grey_sweep",
            Preset::Unperturbed => "unperturbed",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, HarnessError> {
        Self::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
            invalid("preset", format!("unknown preset `{name}`; known: {}", known.join(", ")))
        })
    }

    pub fn configs(self) -> Vec<ExperimentConfig> {
        let all = vec![OutputKind::Profile, OutputKind::Contour, OutputKind::Trajectory, OutputKind::Layer];
        match self {
            Preset::BlackDispersive => vec![dispersive("black_dispersive", PI, 100.0, 4096, 30.0, all)],
            Preset::GreyDispersive => vec![dispersive("grey_dispersive", 4.0 * PI / 5.0, 100.0, 4096, 30.0, all)],
            // Shallower cores need longer runs before the plateau clears the core margin.
            Preset::GreySweep => vec![
                dispersive("sweep_2pi5", 2.0 * PI / 5.0, 480.0, 9600, 160.0, Vec::new()),
                dispersive("sweep_3pi5", 3.0 * PI / 5.0, 180.0, 7424, 60.0, Vec::new()),
                dispersive("sweep_4pi5", 4.0 * PI / 5.0, 100.0, 4096, 30.0, Vec::new()),
                dispersive("sweep_pi", PI, 100.0, 4096, 30.0, Vec::new()),
            ],
            Preset::Unperturbed => vec![ExperimentConfig {
                name: "unperturbed".into(),
                perturbation: PerturbationSpec::None,
                epsilon: 0.0,
                soliton: SolitonSpec { u_inf: 1.0, delta_phi0: PI },
                grid: GridSpec { half_width: 100.0, intervals: 4096 },
                run: RunSpec { z_max: 10.0, dz: None, snapshot_spacing: 0.5, probe: 3.0, fit_from: 0.0 },
                outputs: vec![OutputKind::Profile, OutputKind::Trajectory],
            }],
        }
    }
}

fn dispersive(name: &str, delta_phi0: f64, half_width: f64, intervals: usize, z_max: f64, outputs: Vec<OutputKind>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        perturbation: PerturbationSpec::DispersiveDamping { gamma: 1.0 },
        epsilon: 0.05,
        soliton: SolitonSpec { u_inf: 1.0, delta_phi0 },
        grid: GridSpec { half_width, intervals },
        run: RunSpec { z_max, dz: None, snapshot_spacing: 1.0, probe: 3.0, fit_from: z_max / 3.0 },
        outputs,
    }
}

/// Parses a configuration document: `{"preset": name}`, a single explicit
/// experiment, or `{"configs": [...]}`. Every returned config is validated.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let value: Value = serde_json::from_str(text).map_err(|e| invalid("<document>", e.to_string()))?;
    let configs = match &value {
        Value::Object(map) if map.contains_key("preset") => {
            if map.len() != 1 {
                return Err(invalid("preset", "a preset document holds only the `preset` key"));
            }
            let name = map["preset"].as_str().ok_or_else(|| invalid("preset", "must be a string"))?;
            Preset::from_name(name)?.configs()
        }
        Value::Object(map) if map.contains_key("configs") => {
            serde_json::from_value::<Vec<ExperimentConfig>>(map["configs"].clone()).map_err(|e| invalid("configs", e.to_string()))?
        }
        Value::Object(_) => vec![serde_json::from_value::<ExperimentConfig>(value).map_err(|e| invalid("<config>", e.to_string()))?],
        _ => return Err(invalid("<document>", "expected a JSON object")),
    };
    if configs.is_empty() {
        return Err(invalid("configs", "no experiments listed"));
    }
    let mut names: Vec<&str> = configs.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(invalid("name", format!("duplicate run name `{}`", w[0])));
    }
    for c in &configs {
        c.validate().map_err(|e| match e {
            HarnessError::Validation { field, reason } => HarnessError::Validation { field: format!("{}.{field}", c.name), reason },
            other => other,
        })?;
    }
    Ok(configs)
}
