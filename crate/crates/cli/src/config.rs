//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steiner_core::{HelixSpec, OneForm, Region, ScalarField, SolveConfig, SpaceBackend, Winding};

use crate::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fields,
    Solve,
    Helix,
    Diagnose,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fields => "fields",
            Experiment::Solve => "solve",
            Experiment::Helix => "helix",
            Experiment::Diagnose => "diagnose",
            Experiment::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Signed so that negative counts are reported by field name.
    pub cells: Vec<i64>,
    #[serde(default)]
    pub periodic_axis: Option<usize>,
}

impl RegionConfig {
    pub fn to_region(&self) -> Result<Region, ConfigError> {
        let mut cells = Vec::with_capacity(self.cells.len());
        for (i, &n) in self.cells.iter().enumerate() {
            if n < 4 {
                return Err(ConfigError::new(
                    format!("region.cells[{i}]"),
                    format!("at least 4 cells per axis required (got {n})"),
                ));
            }
            cells.push(n as usize);
        }
        let mut region = Region::new(self.lower.clone(), self.upper.clone(), cells);
        region.periodic_axis = self.periodic_axis;
        Ok(region)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub field: Option<ScalarField>,
    /// Uniform nodal noise in `[-a, a]` drawn from the run seed.
    pub random_amplitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Ball center in chart coordinates; the region midpoint when absent.
    pub center: Option<Vec<f64>>,
    /// Levels of `q`; eight equally spaced levels in `[0, max q)` when absent.
    pub lambdas: Option<Vec<f64>>,
    /// Ball radii; quarters of the largest distance from the center when absent.
    pub rhos: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Named acceptance checks to run after the chart invariants; `"all"` runs every check.
    pub checks: Vec<String>,
}

fn default_thickness() -> ScalarField {
    ScalarField::constant(0.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub backend: SpaceBackend,
    /// Synthetic connection form added on a constant-curvature backend.
    #[serde(default)]
    pub connection: Option<OneForm>,
    pub region: RegionConfig,
    #[serde(default = "default_thickness")]
    pub thickness: ScalarField,
    /// CSV with a column `h`, one row per grid node; overrides `thickness`.
    #[serde(default)]
    pub thickness_file: Option<PathBuf>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub winding: Option<Winding>,
    /// Potential `v` of an exact connection; the report then includes `max |u_0 + v − mean v|`.
    #[serde(default)]
    pub reference: Option<ScalarField>,
    #[serde(default)]
    pub save_chart: bool,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub helix: HelixSpec,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
            let key = e.message().split('`').nth(1).unwrap_or("config");
            let table = e.span().and_then(|span| enclosing_table(&text[..span.start]));
            let field = match table {
                Some(t) if key != "config" => format!("{t}.{key}"),
                _ => key.to_string(),
            };
            ConfigError::new(field, e.to_string().trim_end().to_string())
        })?;
        if let Some(file) = &config.thickness_file {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.thickness_file = Some(base.join(file));
            }
        }
        Ok(config)
    }

    pub fn check_experiment(&self, requested: Experiment) -> Result<(), ConfigError> {
        match self.experiment {
            Some(e) if e != requested => Err(ConfigError::new(
                "experiment",
                format!("config is for `{}`, not `{}`", e.name(), requested.name()),
            )),
            _ => Ok(()),
        }
    }

    /// Nodal thickness from `thickness_file`, if given.
    pub fn thickness_field(&self) -> Result<ScalarField, ConfigError> {
        let Some(path) = &self.thickness_file else {
            return Ok(self.thickness.clone());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("thickness_file", format!("cannot read {}: {e}", path.display())))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| ConfigError::new("thickness_file", "empty file"))?
            .split(',')
            .map(str::trim)
            .collect();
        let col = header
            .iter()
            .position(|c| *c == "h")
            .ok_or_else(|| ConfigError::new("thickness_file", "no column `h` in the header"))?;
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let cell = line.split(',').nth(col).map(str::trim).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                ConfigError::new("thickness_file", format!("row {}: `{cell}` is not a number", row + 1))
            })?;
            values.push(v);
        }
        Ok(ScalarField::Table { values })
    }
}

/// Name of the last `[table]` header in `prefix`.
fn enclosing_table(prefix: &str) -> Option<&str> {
    prefix
        .lines()
        .map(str::trim).rfind(|l| l.starts_with('[') && !l.starts_with("[["))
        .and_then(|l| l.strip_prefix('['))
        .and_then(|l| l.split(']').next())
        .map(str::trim)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        backend = { kind = "euclidean", dim = 3 }
        [region]
        lower = [0.0, 0.0]
        upper = [1.0, 1.0]
        cells = [8, 8]
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        assert_eq!(c.solver, SolveConfig::default());
        assert_eq!(c.helix, HelixSpec::default());
        assert_eq!(c.thickness, ScalarField::constant(0.1));
        assert!(c.region.to_region().is_ok());
    }

    #[test]
    fn negative_cells_name_the_field() {
        let region = RegionConfig {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            cells: vec![8, -3],
            periodic_axis: None,
        };
        let err = region.to_region().unwrap_err();
        assert_eq!(err.field, "region.cells[1]");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[solver]\neps_mni = 1e-3\n");
        assert!(toml::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn parse_errors_name_the_table() {
        let dir = std::env::temp_dir().join(format!("steiner-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, format!("{MINIMAL}\n[solver]\neps_mni = 1e-3\n")).unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err();
        std::fs::remove_dir_all(&dir).unwrap();
        assert_eq!(err.field, "solver.eps_mni");
    }

    #[test]
    fn experiment_mismatch_is_reported() {
        let mut c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.experiment = Some(Experiment::Helix);
        assert_eq!(c.check_experiment(Experiment::Solve).unwrap_err().field, "experiment");
        assert!(c.check_experiment(Experiment::Helix).is_ok());
    }
}
