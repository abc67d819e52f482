//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub dimension: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    /// Explicit coordinates, or `"sampled"` / `"sampled:SEED"`.
    pub x0: Option<StartSpec>,
    pub body: Option<BodySpec>,
    pub semigroup: SemigroupSpec,
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub mean: MeanSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Directory the config was read from; table paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Point(Vec<f64>),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ellipsoid { center: Vec<f64>, shape: Rows, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSpec {
    /// `"Z_n"`, `"N"`, `"N-window:N"`, or a table file path.
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    Involution {
        matrix: Rows,
    },
    Cyclic {
        order: usize,
        /// Defaults to the rotation by `2π/order` in the plane.
        block: Option<Rows>,
        conjugator: Option<Rows>,
    },
    LinearTable {
        matrices: Vec<Rows>,
    },
    LinearPower {
        generator: Rows,
    },
    Contraction {
        center: Vec<f64>,
        ratio: f64,
    },
    DistPerturbation {
        set: SetSpec,
        anchor: Vec<f64>,
        eps: f64,
    },
    BumpedReflection {
        reflection: Rows,
        bump: f64,
        direction: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Segment { a: Vec<f64>, b: Vec<f64> },
    Points { points: Rows },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanSpec {
    /// `"exact"`, `"folner"`, `"folner:N"`, or `"weights"`.
    #[serde(default = "default_mode")]
    pub mode: String,
    pub weights: Option<Vec<f64>>,
}

fn default_mode() -> String {
    "exact".into()
}

impl Default for MeanSpec {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Sampled points for the retraction identities.
    pub samples: usize,
    /// Pairs for the Hölder check.
    pub pairs: usize,
    /// Starting points for the decay checks.
    pub traces: usize,
    /// Pairs for the Lipschitz estimate.
    pub lipschitz_samples: usize,
    pub retraction_tol: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            samples: 100,
            pairs: 1000,
            traces: 20,
            lipschitz_samples: 200,
            retraction_tol: 1e-6,
        }
    }
}

/// Parsed form of [`SemigroupSpec::spec`].
#[derive(Debug, Clone, PartialEq)]
pub enum IndexChoice {
    Cyclic(usize),
    Naturals(Option<usize>),
    Table(PathBuf),
}

/// Parsed form of [`MeanSpec::mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanMode {
    Exact,
    Folner(Option<usize>),
    Weights,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    pub fn index_choice(&self) -> Result<IndexChoice, CliError> {
        let spec = self.semigroup.spec.trim();
        if let Some(n) = spec.strip_prefix("Z_") {
            let n: usize = n.parse().map_err(|_| bad(format!("bad cyclic order in {spec:?}")))?;
            if n == 0 {
                return Err(bad("Z_0 is not a semigroup"));
            }
            return Ok(IndexChoice::Cyclic(n));
        }
        if spec == "N" {
            return Ok(IndexChoice::Naturals(None));
        }
        if let Some(n) = spec.strip_prefix("N-window:") {
            let n: usize = n.parse().map_err(|_| bad(format!("bad window in {spec:?}")))?;
            if n == 0 {
                return Err(bad("window length must be positive"));
            }
            return Ok(IndexChoice::Naturals(Some(n)));
        }
        let path = PathBuf::from(spec);
        let path = match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path,
        };
        Ok(IndexChoice::Table(path))
    }

    pub fn mean_mode(&self) -> Result<MeanMode, CliError> {
        let mode = self.mean.mode.trim();
        match mode {
            "exact" => Ok(MeanMode::Exact),
            "weights" => Ok(MeanMode::Weights),
            "folner" => Ok(MeanMode::Folner(None)),
            _ => match mode.strip_prefix("folner:") {
                Some(n) => {
                    let n: usize = n.parse().map_err(|_| bad(format!("bad window in {mode:?}")))?;
                    if n == 0 {
                        return Err(bad("window length must be positive"));
                    }
                    Ok(MeanMode::Folner(Some(n)))
                }
                None => Err(bad(format!("unknown mean mode {mode:?}"))),
            },
        }
    }

    /// Window length for actions of the naturals.
    pub fn window(&self) -> Result<Option<usize>, CliError> {
        let from_index = match self.index_choice()? {
            IndexChoice::Naturals(n) => n,
            _ => return Ok(None),
        };
        let from_mean = match self.mean_mode()? {
            MeanMode::Folner(n) => n,
            MeanMode::Weights => self.mean.weights.as_ref().map(Vec::len),
            MeanMode::Exact => {
                return Err(bad(
                    "the naturals have no finitely supported invariant mean; use mode = \"folner:N\"",
                ))
            }
        };
        match (from_index, from_mean) {
            (Some(a), Some(b)) if a != b => Err(bad(format!(
                "window length {a} in the semigroup spec disagrees with {b} in the mean"
            ))),
            (a, b) => a
                .or(b)
                .map(Some)
                .ok_or_else(|| bad("no window length given for the naturals")),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(bad(format!("tol must be positive, got {}", self.tol)));
        }
        let v = &self.verify;
        if !(v.retraction_tol > 0.0 && v.retraction_tol.is_finite()) {
            return Err(bad("verify.retraction_tol must be positive"));
        }
        self.index_choice()?;
        let mode = self.mean_mode()?;
        if mode == MeanMode::Weights && self.mean.weights.is_none() {
            return Err(bad("mean mode \"weights\" needs a weights array"));
        }
        if mode != MeanMode::Weights && self.mean.weights.is_some() {
            return Err(bad("mean weights are only read in mode \"weights\""));
        }
        self.window()?;
        if let Some(StartSpec::Named(name)) = &self.x0 {
            parse_sampled(name)?;
        }
        Ok(())
    }
}

/// `"sampled"` → `None`, `"sampled:SEED"` → `Some(SEED)`.
pub fn parse_sampled(name: &str) -> Result<Option<u64>, CliError> {
    match name.trim() {
        "sampled" => Ok(None),
        other => match other.strip_prefix("sampled:") {
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| bad(format!("bad seed in x0 = {other:?}"))),
            None => Err(bad(format!("x0 must be a point or \"sampled[:SEED]\", got {other:?}"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHEAR: &str = r#"
scenario = "shear"
x0 = [0.2, 0.4]
[body]
kind = "ellipsoid"
center = [0.0, 0.0]
shape = [[1.0, 0.3], [0.0, 1.0]]
radius = 1.0
[semigroup]
spec = "Z_2"
[action]
family = "involution"
matrix = [[1.0, -0.6], [0.0, -1.0]]
"#;

    #[test]
    fn parses_shear() {
        let c = ExperimentConfig::from_toml(SHEAR).unwrap();
        assert_eq!(c.index_choice().unwrap(), IndexChoice::Cyclic(2));
        assert_eq!(c.mean_mode().unwrap(), MeanMode::Exact);
        assert_eq!(c.x0, Some(StartSpec::Point(vec![0.2, 0.4])));
        assert_eq!(c.tol, 1e-12);
        assert_eq!(c.verify, VerifySpec::default());
    }

    #[test]
    fn window_resolution() {
        let base = "scenario = \"w\"\n[semigroup]\nspec = \"N-window:100\"\n";
        let c = ExperimentConfig::from_toml(&format!("{base}[mean]\nmode = \"folner\"\n")).unwrap();
        assert_eq!(c.window().unwrap(), Some(100));
        let err = ExperimentConfig::from_toml(&format!("{base}[mean]\nmode = \"folner:10\"\n"));
        assert!(matches!(err, Err(CliError::Config(_))));
        let err = ExperimentConfig::from_toml(base);
        assert!(matches!(err, Err(CliError::Config(_))));
        let c = ExperimentConfig::from_toml(
            "scenario = \"w\"\n[semigroup]\nspec = \"N\"\n[mean]\nmode = \"folner:7\"\n",
        )
        .unwrap();
        assert_eq!(c.window().unwrap(), Some(7));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "scenario = \"x\"\n[semigroup]\nspec = \"Z_0\"\n",
            "scenario = \"x\"\n[semigroup]\nspec = \"Z_2\"\n[mean]\nmode = \"cesaro\"\n",
            "scenario = \"x\"\n[semigroup]\nspec = \"Z_2\"\n[mean]\nmode = \"weights\"\n",
            "scenario = \"x\"\ntol = -1.0\n[semigroup]\nspec = \"Z_2\"\n",
            "scenario = \"x\"\nx0 = \"random\"\n[semigroup]\nspec = \"Z_2\"\n",
            "scenario = \"x\"\nbogus = 1\n[semigroup]\nspec = \"Z_2\"\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
        assert_eq!(parse_sampled("sampled:9").unwrap(), Some(9));
        assert_eq!(parse_sampled("sampled").unwrap(), None);
    }

    #[test]
    fn table_paths_resolve_against_config_dir() {
        let mut c = ExperimentConfig::from_toml(
            "scenario = \"t\"\n[semigroup]\nspec = \"tables/k4.txt\"\n",
        )
        .unwrap();
        c.base_dir = Some(PathBuf::from("/etc/scen"));
        assert_eq!(
            c.index_choice().unwrap(),
            IndexChoice::Table(PathBuf::from("/etc/scen/tables/k4.txt"))
        );
    }
}
