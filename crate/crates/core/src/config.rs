//! Experiment configuration, read from TOML.
//!
//! Every constraint of the owning modules is re-checked by
//! [`ExperimentConfig::validate`], so a config that parses is runnable.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytics::{uniform_grid, InversionOptions, Symbol};
use crate::error::{Error, Result};
use crate::limit::Truncation;
use crate::stable::{DirectionLaw, MovingTimeLaw};
use crate::stats::{log_grid, ConvergenceConfig, GovernMonteCarlo, Process};
use crate::walk::WalkConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Tail index; 2 denotes finite-variance (exponential) flights.
    pub beta: f64,
    pub dimension: usize,
    pub replicas: usize,
    pub horizon: f64,
    #[serde(default)]
    pub process: ProcessKind,
    pub moving_time: MovingTimeSpec,
    pub directions: DirectionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub govcheck: Option<GovcheckSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    #[default]
    Walk,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum MovingTimeSpec {
    Pareto { x0: f64 },
    ExactStable,
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub theta: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionSpec {
    /// λ = (δ₋₁ + δ₊₁)/2 in one dimension.
    Symmetric,
    Atoms { atoms: Vec<AtomSpec> },
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "spacing", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Explicit { values: Vec<f64> },
    Linear { min: f64, max: f64, points: usize },
    Log { min: f64, max: f64, points: usize },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Explicit { values } => values.clone(),
            Self::Linear { min, max, points } => uniform_grid(*min, *max, *points),
            Self::Log { min, max, points } => log_grid(*min, *max, *points),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationSpec {
    MinJump { epsilon: f64 },
    MaxJumps { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub scales: Vec<f64>,
    pub samples: usize,
    pub macro_replicas: usize,
    pub level: f64,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub t: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    #[serde(default)]
    pub inversion: InversionOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovcheckSpec {
    /// Wavenumbers along `direction` (default: first axis).
    pub k: Vec<f64>,
    /// Real Laplace variables, all positive.
    pub s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    /// Monte Carlo paths; 0 skips the Monte Carlo comparison.
    #[serde(default)]
    pub replicas: usize,
    #[serde(default = "eight")]
    pub horizon: f64,
}

pub type GovcheckGrids = (Vec<Vec<f64>>, Vec<Complex64>, Option<GovernMonteCarlo>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    /// Write renewal skeletons and jump series for only the first n replicas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton_replicas: Option<usize>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            skeleton_replicas: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn eight() -> f64 {
    8.0
}

fn field(name: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {reason}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(field("dimension", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(field("replicas", "must be at least 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(field("horizon", format!("{} must be positive", self.horizon)));
        }
        let beta = self.beta;
        match &self.moving_time {
            MovingTimeSpec::Pareto { x0 } => {
                if !(beta > 0.0 && beta < 2.0 && beta != 1.0) {
                    return Err(field("beta", format!("{beta} must lie in (0, 1) ∪ (1, 2) for pareto flights")));
                }
                if !(x0.is_finite() && *x0 > 0.0) {
                    return Err(field("moving_time.x0", format!("{x0} must be positive")));
                }
            }
            MovingTimeSpec::ExactStable => {
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(field("beta", format!("{beta} must lie in (0, 1) for exact_stable flights")));
                }
            }
            MovingTimeSpec::Exponential { rate } => {
                if beta != 2.0 {
                    return Err(field("beta", "exponential flights have finite variance; set beta = 2"));
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(field("moving_time.rate", format!("{rate} must be positive")));
                }
            }
        }
        let law = self
            .direction_law()
            .map_err(|e| field("directions", e))?;
        if law.dim() != self.dimension {
            return Err(field(
                "directions",
                format!("have dimension {}, expected {}", law.dim(), self.dimension),
            ));
        }
        if self.process == ProcessKind::Limit && !(beta > 0.0 && beta < 1.0) {
            return Err(field("process", "the limit process is simulated for beta in (0, 1)"));
        }
        if let Some(g) = &self.t_grid {
            let v = g.values();
            if let GridSpec::Linear { points, .. } | GridSpec::Log { points, .. } = g {
                if *points < 2 {
                    return Err(field("t_grid.points", "must be at least 2"));
                }
            }
            if v.is_empty() || v.windows(2).any(|w| !(w[0] < w[1])) || !(v[0] >= 0.0) {
                return Err(field("t_grid", "must be nonempty, nonnegative and increasing"));
            }
            if matches!(g, GridSpec::Log { min, .. } if !(*min > 0.0)) {
                return Err(field("t_grid.min", "log spacing needs a positive minimum"));
            }
            if v[v.len() - 1] > self.horizon {
                return Err(field("t_grid", format!("exceeds horizon {}", self.horizon)));
            }
        }
        match self.truncation {
            Some(TruncationSpec::MinJump { epsilon }) if !(epsilon.is_finite() && epsilon > 0.0) => {
                return Err(field("truncation.epsilon", format!("{epsilon} must be positive")));
            }
            Some(TruncationSpec::MaxJumps { count: 0 }) => {
                return Err(field("truncation.count", "must be positive"));
            }
            _ => {}
        }
        if let Some(l) = &self.ladder {
            if l.scales.is_empty() || l.scales.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(field("ladder.scales", "must be a nonempty list of positive scales"));
            }
            if l.samples < 100 {
                return Err(field("ladder.samples", "must be at least 100"));
            }
            if l.macro_replicas == 0 {
                return Err(field("ladder.macro_replicas", "must be positive"));
            }
            if !(l.level > 0.0 && l.level < 1.0) {
                return Err(field("ladder.level", "must lie in (0, 1)"));
            }
            if !(l.t > 0.0) {
                return Err(field("ladder.t", "must be positive"));
            }
            if l.projection.as_ref().is_some_and(|p| p.len() != self.dimension) {
                return Err(field("ladder.projection", "dimension mismatch"));
            }
            self.convergence_config()?
                .reference()
                .map_err(|e| field("moving_time", e))?;
        }
        if let Some(d) = &self.density {
            if self.dimension != 1 {
                return Err(field("density", "density inversion is one-dimensional"));
            }
            if !(beta > 0.0 && beta < 1.0) {
                return Err(field("beta", "density inversion needs beta in (0, 1)"));
            }
            if !(d.t > 0.0) {
                return Err(field("density.t", "must be positive"));
            }
            if d.points < 2 || !(d.x_min < d.x_max) {
                return Err(field("density", "need x_min < x_max and at least 2 points"));
            }
            let half = d.inversion.period_factor * d.t / 2.0;
            if !(d.inversion.period_factor > 2.0) || d.x_min < -half || d.x_max > half {
                return Err(field(
                    "density.inversion.period_factor",
                    "the period must exceed 2t and cover [x_min, x_max]",
                ));
            }
            if d.inversion.modes == 0 || d.inversion.talbot_nodes == 0 {
                return Err(field("density.inversion", "modes and talbot_nodes must be positive"));
            }
        }
        if let Some(g) = &self.govcheck {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(field("beta", "the governing-equation check needs beta in (0, 1)"));
            }
            if g.k.is_empty() || g.s.is_empty() {
                return Err(field("govcheck", "k and s grids must be nonempty"));
            }
            if let Some(s) = g.s.iter().find(|s| !(**s > 0.0)) {
                return Err(field("govcheck.s", format!("{s} must be positive")));
            }
            if g.direction.as_ref().is_some_and(|d| d.len() != self.dimension) {
                return Err(field("govcheck.direction", "dimension mismatch"));
            }
            if g.replicas == 1 {
                return Err(field("govcheck.replicas", "use 0 to skip or at least 2"));
            }
            if !(g.horizon > 0.0) {
                return Err(field("govcheck.horizon", "must be positive"));
            }
        }
        if self.output.dir.is_empty() {
            return Err(field("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn direction_law(&self) -> Result<DirectionLaw> {
        match &self.directions {
            DirectionSpec::Symmetric => {
                if self.dimension != 1 {
                    return Err(field("directions", "`symmetric` is one-dimensional"));
                }
                Ok(DirectionLaw::symmetric_1d())
            }
            DirectionSpec::Atoms { atoms } => {
                let list: Vec<(Vec<f64>, f64)> =
                    atoms.iter().map(|a| (a.theta.clone(), a.weight)).collect();
                DirectionLaw::atoms(&list)
            }
            DirectionSpec::Uniform => DirectionLaw::uniform_sphere(self.dimension),
        }
    }

    pub fn moving_time_law(&self) -> MovingTimeLaw {
        match self.moving_time {
            MovingTimeSpec::Pareto { x0 } => MovingTimeLaw::Pareto { beta: self.beta, x0 },
            MovingTimeSpec::ExactStable => MovingTimeLaw::ExactStable { beta: self.beta },
            MovingTimeSpec::Exponential { rate } => MovingTimeLaw::Exponential { rate },
        }
    }

    pub fn walk_config(&self) -> Result<WalkConfig> {
        WalkConfig::new(self.moving_time_law(), self.direction_law()?)
    }

    /// Configured t-grid, or 101 equispaced points on [0, horizon].
    pub fn t_values(&self) -> Vec<f64> {
        self.t_grid
            .as_ref()
            .map_or_else(|| uniform_grid(0.0, self.horizon, 101), GridSpec::values)
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation.map(|t| match t {
            TruncationSpec::MinJump { epsilon } => Truncation::MinJump(epsilon),
            TruncationSpec::MaxJumps { count } => Truncation::MaxJumps(count),
        })
    }

    pub fn process(&self) -> Result<Process> {
        Ok(match self.process {
            ProcessKind::Walk => Process::Walk {
                config: self.walk_config()?,
                scale: None,
            },
            ProcessKind::Limit => Process::Limit {
                beta: self.beta,
                directions: self.direction_law()?,
                truncation: self.truncation(),
            },
        })
    }

    pub fn convergence_config(&self) -> Result<ConvergenceConfig> {
        let l = self
            .ladder
            .as_ref()
            .ok_or_else(|| field("ladder", "section is required for this command"))?;
        Ok(ConvergenceConfig {
            moving_time: self.moving_time_law(),
            directions: self.direction_law()?,
            scales: l.scales.clone(),
            samples: l.samples,
            macro_replicas: l.macro_replicas,
            level: l.level,
            t: l.t,
            seed: self.seed,
            truncation: self.truncation(),
            projection: l.projection.clone(),
        })
    }

    pub fn symbol(&self) -> Result<Symbol> {
        Symbol::new(self.beta, &self.direction_law()?)
    }

    pub fn density_grid(&self) -> Result<(&DensitySpec, Vec<f64>)> {
        let d = self
            .density
            .as_ref()
            .ok_or_else(|| field("density", "section is required for this command"))?;
        Ok((d, uniform_grid(d.x_min, d.x_max, d.points)))
    }

    /// (k vectors, s values, Monte Carlo settings if requested).
    pub fn govcheck_grids(&self) -> Result<GovcheckGrids> {
        let g = self
            .govcheck
            .as_ref()
            .ok_or_else(|| field("govcheck", "section is required for this command"))?;
        let dir = g.direction.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; self.dimension];
            e[0] = 1.0;
            e
        });
        let ks = g
            .k
            .iter()
            .map(|k| dir.iter().map(|d| k * d).collect())
            .collect();
        let ss = g.s.iter().map(|s| Complex64::new(*s, 0.0)).collect();
        let mc = (g.replicas > 0).then_some(GovernMonteCarlo {
            replicas: g.replicas,
            horizon: g.horizon,
            seed: self.seed,
            truncation: match self.truncation {
                Some(TruncationSpec::MinJump { epsilon }) => Some(epsilon),
                _ => None,
            },
        });
        Ok((ks, ss, mc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
beta = 0.5
dimension = 1
replicas = 10
horizon = 4.0

[moving_time]
law = "pareto"
x0 = 1.0

[directions]
kind = "symmetric"
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.process, ProcessKind::Walk);
        assert_eq!(cfg.output.dir, "out");
        assert_eq!(cfg.t_values().len(), 101);
        assert_eq!(cfg.t_values()[100], 4.0);
        assert!(matches!(cfg.moving_time_law(), MovingTimeLaw::Pareto { beta, .. } if beta == 0.5));
    }

    #[test]
    fn missing_field_is_named() {
        let text = MINIMAL.replace("beta = 0.5\n", "");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("beta"), "{err}");
        let text = MINIMAL.replace("x0 = 1.0\n", "");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("x0"), "{err}");
    }

    #[test]
    fn domain_constraints_are_rechecked() {
        for (from, to, name) in [
            ("beta = 0.5", "beta = 1.0", "beta"),
            ("beta = 0.5", "beta = 2.5", "beta"),
            ("x0 = 1.0", "x0 = -1.0", "x0"),
            ("horizon = 4.0", "horizon = 0.0", "horizon"),
            ("dimension = 1", "dimension = 2", "directions"),
        ] {
            let err = ExperimentConfig::from_toml_str(&MINIMAL.replace(from, to))
                .unwrap_err()
                .to_string();
            assert!(err.contains(name), "{from} → {to}: {err}");
        }
        let unknown = format!("extra = 1\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
        let bad_atoms = MINIMAL.replace(
            "kind = \"symmetric\"",
            "kind = \"atoms\"\natoms = [{ theta = [1.0], weight = 0.4 }]",
        );
        assert!(ExperimentConfig::from_toml_str(&bad_atoms).is_err());
    }

    #[test]
    fn full_config_round_trips() {
        let text = format!(
            "{MINIMAL}
[t_grid]
spacing = \"log\"
min = 0.1
max = 4.0
points = 7

[truncation]
rule = \"min_jump\"
epsilon = 1e-7

[ladder]
scales = [100.0, 1000.0]
samples = 1000
macro_replicas = 3
level = 0.01

[density]
t = 1.0
x_min = -1.5
x_max = 1.5
points = 301

[govcheck]
k = [0.5, 1.0]
s = [1.0]
replicas = 100

[output]
dir = \"results\"
"
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.density.as_ref().unwrap().inversion, InversionOptions::default());
        let grid = back.t_values();
        assert_eq!(grid.len(), 7);
        assert_eq!(grid[6], 4.0);
        assert_eq!(back.truncation(), Some(Truncation::MinJump(1e-7)));
        let (ks, ss, mc) = back.govcheck_grids().unwrap();
        assert_eq!(ks, vec![vec![0.5], vec![1.0]]);
        assert_eq!(ss.len(), 1);
        assert_eq!(mc.unwrap().truncation, Some(1e-7));
        // Floats survive the text round trip bit for bit.
        let mut odd = cfg.clone();
        odd.horizon = 4.0 + 1.0 / 3.0;
        let again = ExperimentConfig::from_toml_str(&odd.to_toml_string().unwrap()).unwrap();
        assert_eq!(again.horizon.to_bits(), odd.horizon.to_bits());
    }

    #[test]
    fn section_specific_checks() {
        let exp = MINIMAL
            .replace("beta = 0.5", "beta = 2.0")
            .replace("law = \"pareto\"\nx0 = 1.0", "law = \"exponential\"\nrate = 1.0");
        assert!(ExperimentConfig::from_toml_str(&exp).is_ok());
        assert!(ExperimentConfig::from_toml_str(&exp.replace("beta = 2.0", "beta = 0.5")).is_err());
        let grid = format!("{MINIMAL}\n[t_grid]\nspacing = \"explicit\"\nvalues = [1.0, 5.0]\n");
        assert!(ExperimentConfig::from_toml_str(&grid)
            .unwrap_err()
            .to_string()
            .contains("t_grid"));
        let dens = format!("{MINIMAL}\n[density]\nt = 1.0\nx_min = -3.0\nx_max = 3.0\npoints = 11\n");
        assert!(ExperimentConfig::from_toml_str(&dens).is_err());
        let limit = MINIMAL.replace("beta = 0.5", "beta = 1.5").replace("seed = 7", "seed = 7\nprocess = \"limit\"");
        assert!(ExperimentConfig::from_toml_str(&limit)
            .unwrap_err()
            .to_string()
            .contains("process"));
    }
}
