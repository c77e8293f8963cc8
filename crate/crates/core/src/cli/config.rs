//! Run configuration: a JSON document whose fields can be overridden by flags.

use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::SolverOptions;
use crate::scenario::{build_case, validation_spec, ConfigSource, ScenarioSpec, DEFAULT_K_MAX, DEFAULT_STRIDE};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Complete scenario description; exclusive with `case`.
    pub scenario: Option<ScenarioSpec>,
    pub case: Option<u8>,
    /// Hole diameter in the liner bottom (m).
    pub hole: Option<f64>,
    /// Downward liner shift (m).
    pub shift: Option<f64>,
    #[serde(default)]
    pub no_liner: bool,
    /// Geometric-factor cap for enumeration (m).
    pub kmax: Option<f64>,
    /// Take every n-th enumerated configuration; 1 uses all of them.
    pub stride: Option<usize>,
    /// Validation mesh in MSH 4.1 ASCII format instead of the built-in mesher.
    pub mesh_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub solver: Option<SolverOptions>,
    /// Write wall-clock timings into `summary.json`; off by default so that
    /// repeated runs produce identical files.
    #[serde(default)]
    pub timings: bool,
}

impl RunConfig {
    /// JSON Schema of the configuration document, as shipped in `docs/`.
    pub fn schema() -> String {
        let mut s = serde_json::to_string_pretty(&schemars::schema_for!(RunConfig)).expect("schema serializes");
        s.push('\n');
        s
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those of `self`.
    pub fn merge(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(scenario, case, hole, shift, kmax, stride, mesh_file, out, threads, solver);
        self.no_liner |= other.no_liner;
        self.timings |= other.timings;
        self
    }

    fn check_common(&self) -> Result<()> {
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::Config("threads must be at least 1".into()));
            }
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if let Some(k) = self.kmax {
            if k.is_nan() || k < 0.0 {
                return Err(Error::Config(format!("kmax must be non-negative, got {k}")));
            }
        }
        Ok(())
    }

    fn apply_overrides(&self, mut spec: ScenarioSpec) -> Result<ScenarioSpec> {
        if let Some(s) = self.solver {
            spec.solver = s;
        }
        if self.no_liner {
            match spec.liner.as_mut() {
                Some(l) => l.membrane = false,
                None => return Err(Error::Config("no_liner given but the scenario has no liner".into())),
            }
        }
        if self.kmax.is_some() || self.stride.is_some() {
            let (k0, s0) = match spec.configs {
                ConfigSource::Enumerate { k_max, stride } => (k_max, stride),
                _ => (DEFAULT_K_MAX, DEFAULT_STRIDE),
            };
            spec.configs = ConfigSource::Enumerate { k_max: self.kmax.unwrap_or(k0), stride: self.stride.unwrap_or(s0) };
        }
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    /// Landfill scenario from either an explicit spec or case flags.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        self.check_common()?;
        if self.hole.is_some() && self.no_liner {
            return Err(Error::Config("a liner hole contradicts no_liner".into()));
        }
        let spec = match (&self.scenario, self.case) {
            (Some(_), Some(_)) => return Err(Error::Config("give either a scenario document or a case, not both".into())),
            (Some(s), None) => {
                if self.hole.is_some() || self.shift.is_some() {
                    return Err(Error::Config("hole and shift only apply to built-in cases".into()));
                }
                s.clone()
            }
            (None, Some(c)) => build_case(c, self.hole, self.shift).map_err(|e| Error::Config(e.to_string()))?,
            (None, None) => return Err(Error::Config("a case (1, 2 or 3) or a scenario document is required".into())),
        };
        self.apply_overrides(spec)
    }

    /// Homogeneous validation scenario, optionally replaced by the document.
    pub fn validation_spec(&self) -> Result<ScenarioSpec> {
        self.check_common()?;
        if self.case.is_some() || self.hole.is_some() || self.shift.is_some() || self.no_liner {
            return Err(Error::Config("validation takes no case, hole, shift or liner options".into()));
        }
        if self.kmax.is_some() || self.stride.is_some() {
            return Err(Error::Config("validation uses fixed arrays; kmax and stride do not apply".into()));
        }
        let spec = self.scenario.clone().unwrap_or_else(validation_spec);
        self.apply_overrides(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_schema_is_current() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.schema.json");
        if std::env::var_os("UPDATE_SCHEMA").is_some() {
            std::fs::write(path, RunConfig::schema()).unwrap();
        }
        let shipped = std::fs::read_to_string(path).expect("docs/config.schema.json exists");
        assert_eq!(shipped, RunConfig::schema(), "regenerate with UPDATE_SCHEMA=1 cargo test shipped_schema_is_current");
    }

    #[test]
    fn shipped_example_parses() {
        let c = RunConfig::from_file(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/case2-hole.json"))).unwrap();
        let s = c.scenario_spec().unwrap();
        assert_eq!(s.liner.unwrap().hole_diameter, Some(0.1));
        assert_eq!(s.configs, ConfigSource::Enumerate { k_max: 1e4, stride: 128 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = serde_json::from_str::<RunConfig>(r#"{"case": 1, "colour": "red"}"#);
        assert!(e.is_err());
        let c: RunConfig = serde_json::from_str(r#"{"case": 2, "hole": 0.1}"#).unwrap();
        assert_eq!(c.scenario_spec().unwrap().liner.unwrap().hole_diameter, Some(0.1));
    }

    #[test]
    fn contradictions() {
        let c = RunConfig { case: Some(1), hole: Some(0.1), no_liner: true, ..Default::default() };
        assert!(matches!(c.scenario_spec(), Err(Error::Config(_))));
        let c = RunConfig { case: Some(1), scenario: Some(validation_spec()), ..Default::default() };
        assert!(c.scenario_spec().is_err());
        assert!(RunConfig::default().scenario_spec().is_err());
        let c = RunConfig { case: Some(1), ..Default::default() };
        assert!(c.validation_spec().is_err());
    }

    #[test]
    fn negative_resistivity_is_a_config_error() {
        let mut s = validation_spec();
        s.rho_outside = -100.0;
        s.rho_inside = -100.0;
        let c = RunConfig { scenario: Some(s), ..Default::default() };
        assert!(matches!(c.validation_spec(), Err(Error::Config(_))));
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig { case: Some(1), stride: Some(10), ..Default::default() };
        let flags = RunConfig { case: Some(2), kmax: Some(5.0), ..Default::default() };
        let c = file.merge(flags);
        let s = c.scenario_spec().unwrap();
        assert_eq!(s.configs, ConfigSource::Enumerate { k_max: 5.0, stride: 10 });
        assert_eq!(s.layout, crate::scenario::Layout::Case(2));
    }
}
