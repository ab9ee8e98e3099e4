//! Experiment configuration: TOML schema, dotted-path overrides, and
//! whole-file validation that reports every violation at once.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Errors from loading or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid override `{given}`: {reason}")]
    BadOverride { given: String, reason: String },
    #[error("config validation failed:{}", format_violations(.0))]
    Invalid(Vec<String>),
    #[error("config is for experiment `{configured}` but the `{invoked}` command was invoked")]
    ExperimentMismatch { configured: String, invoked: String },
}

fn format_violations(violations: &[String]) -> String {
    violations.iter().map(|v| format!("\n  - {v}")).collect()
}

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A full experiment description, deserialized from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Reserved for randomized inputs; echoed into results so reruns are
    /// attributable. None of the shipped experiments draw random numbers.
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Which evolution problem the run is about.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Single-viscosity, density-driven interface without surface tension.
    Pe1 { permeability: f64, viscosity: f64, delta_rho: f64 },
    /// Two-viscosity interface with surface tension.
    Pe2 {
        permeability: f64,
        mu_minus: f64,
        mu_plus: f64,
        surface_tension: f64,
        theta: f64,
    },
    /// One-dimensional stiff model `v' + (1 + stiffness v^2) v = 0`, a
    /// fixed-point testbed with no spatial structure.
    ScalarModel {
        #[serde(default = "default_stiffness")]
        stiffness: f64,
    },
}

fn default_stiffness() -> f64 {
    1.0
}

impl ProblemSpec {
    pub fn kind_slug(&self) -> &'static str {
        match self {
            ProblemSpec::Pe1 { .. } => "pe1",
            ProblemSpec::Pe2 { .. } => "pe2",
            ProblemSpec::ScalarModel { .. } => "scalar-model",
        }
    }
}

/// Spatial resolution: `n` grid points, `quadrature_m` convolution nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub quadrature_m: usize,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_true() -> bool {
    true
}

/// Time discretization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub scheme: SchemeSpec,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    Rk4,
    Imex,
}

/// Initial data: a trigonometric mode list, a scalar value, or a JSON file of
/// grid samples. An empty spec means the zero field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub mode: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Jacobian subspace selector mirrored into the stability module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisSpec {
    Grid,
    ZeroMean,
    #[default]
    ZeroMeanResolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpSpec {
    Constant,
    #[default]
    Linear,
}

/// What to do with the configured problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// Linearize at the initial field and report the spectrum next to the
    /// flat-interface rates.
    Spectrum {
        #[serde(default)]
        basis: BasisSpec,
        #[serde(default = "default_fd_eps")]
        fd_eps: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Integrate and record norm histories.
    Evolve {
        #[serde(default)]
        norm_exponents: Vec<f64>,
    },
    /// Integrate, then fit an exponential rate to one norm history over a
    /// window (by time, by sup-norm bound, or both).
    Decay {
        norm_exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window_start: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window_end: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sup_below: Option<f64>,
    },
    /// Escape-time probe on a spectrally unstable flat interface.
    Instability {
        amplitudes: Vec<f64>,
        escape_radius: f64,
        #[serde(default = "default_probe_exponent")]
        norm_exponent: f64,
    },
    /// Frozen-coefficient fixed-point solve, optionally re-run on the halved
    /// horizon and compared against direct integration.
    Picard {
        segments: usize,
        substeps: usize,
        #[serde(default)]
        interp: InterpSpec,
        #[serde(default = "default_picard_tol")]
        tol: f64,
        #[serde(default = "default_picard_max_iter")]
        max_iter: usize,
        #[serde(default = "default_true")]
        compare_halved: bool,
        #[serde(default = "default_true")]
        compare_integration: bool,
    },
    /// Split the horizon at `split` and measure the composition defect of the
    /// numerical solution map, next to a step-halving error estimate.
    Semiflow { split: f64, norm_exponent: f64 },
}

fn default_fd_eps() -> f64 {
    1e-6
}

fn default_margin() -> f64 {
    crate::stability::DEFAULT_MARGIN
}

fn default_probe_exponent() -> f64 {
    1.0
}

fn default_picard_tol() -> f64 {
    1e-9
}

fn default_picard_max_iter() -> usize {
    25
}

impl ExperimentSpec {
    pub fn kind_slug(&self) -> &'static str {
        match self {
            ExperimentSpec::Spectrum { .. } => "spectrum",
            ExperimentSpec::Evolve { .. } => "evolve",
            ExperimentSpec::Decay { .. } => "decay",
            ExperimentSpec::Instability { .. } => "instability",
            ExperimentSpec::Picard { .. } => "picard",
            ExperimentSpec::Semiflow { .. } => "semiflow",
        }
    }
}

/// Where `emit` writes, unless the command line overrides it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads, overrides, parses, and validates a configuration file.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    /// Parses a configuration from TOML text, applying `key.path=value`
    /// overrides before deserialization.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value: toml::Value = text.parse()?;
        for entry in overrides {
            apply_override(&mut value, entry)?;
        }
        let config: ExperimentConfig = value.try_into()?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every cross-field invariant, collecting all violations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };

        check(
            self.schema_version == SCHEMA_VERSION,
            format!(
                "schema_version: {} is not the supported version {SCHEMA_VERSION}",
                self.schema_version
            ),
        );

        let positive = |v: f64| v.is_finite() && v > 0.0;
        match &self.problem {
            ProblemSpec::Pe1 { permeability, viscosity, delta_rho } => {
                check(positive(*permeability), format!("problem.permeability: {permeability} must be positive"));
                check(positive(*viscosity), format!("problem.viscosity: {viscosity} must be positive"));
                check(positive(*delta_rho), format!("problem.delta_rho: {delta_rho} must be positive"));
            }
            ProblemSpec::Pe2 { permeability, mu_minus, mu_plus, surface_tension, theta } => {
                check(positive(*permeability), format!("problem.permeability: {permeability} must be positive"));
                check(positive(*mu_minus), format!("problem.mu_minus: {mu_minus} must be positive"));
                check(positive(*mu_plus), format!("problem.mu_plus: {mu_plus} must be positive"));
                check(
                    positive(*surface_tension),
                    format!("problem.surface_tension: {surface_tension} must be positive"),
                );
                check(theta.is_finite(), format!("problem.theta: {theta} must be finite"));
            }
            ProblemSpec::ScalarModel { stiffness } => {
                check(
                    stiffness.is_finite() && *stiffness >= 0.0,
                    format!("problem.stiffness: {stiffness} must be nonnegative"),
                );
            }
        }

        check(
            self.grid.n.is_power_of_two() && self.grid.n >= 16,
            format!("grid.n: {} must be a power of two, at least 16", self.grid.n),
        );
        check(
            self.grid.quadrature_m.is_power_of_two() && self.grid.quadrature_m >= 16,
            format!(
                "grid.quadrature_m: {} must be a power of two, at least 16",
                self.grid.quadrature_m
            ),
        );

        check(positive(self.time.dt), format!("time.dt: {} must be positive", self.time.dt));
        check(
            self.time.t_end.is_finite() && self.time.t_end >= 0.0,
            format!("time.t_end: {} must be nonnegative", self.time.t_end),
        );
        check(
            self.time.record_every >= 1,
            "time.record_every: must be at least 1".to_string(),
        );

        let scalar_problem = matches!(self.problem, ProblemSpec::ScalarModel { .. });
        if scalar_problem {
            check(
                self.initial.value.is_some(),
                "initial.value: the scalar model needs a starting value".to_string(),
            );
            check(
                self.initial.modes.is_empty() && self.initial.file.is_none(),
                "initial: the scalar model takes only `value`, not modes or a file".to_string(),
            );
        } else {
            check(
                self.initial.value.is_none(),
                "initial.value: only meaningful for the scalar model".to_string(),
            );
            check(
                self.initial.modes.is_empty() || self.initial.file.is_none(),
                "initial: give either modes or a file, not both".to_string(),
            );
            for (k, spec) in self.initial.modes.iter().enumerate() {
                check(
                    spec.mode >= 1 && spec.mode < self.grid.n / 2,
                    format!(
                        "initial.modes[{k}].mode: {} must lie in 1..{} for an n = {} grid",
                        spec.mode,
                        self.grid.n / 2,
                        self.grid.n
                    ),
                );
                check(
                    spec.cos.is_finite() && spec.sin.is_finite(),
                    format!("initial.modes[{k}]: amplitudes must be finite"),
                );
            }
        }

        let slug = self.experiment.kind_slug();
        let allowed: &[&str] = match &self.problem {
            ProblemSpec::Pe1 { .. } => &["spectrum", "evolve", "decay", "picard", "semiflow"],
            ProblemSpec::Pe2 { .. } => &["spectrum", "evolve", "decay", "instability", "semiflow"],
            ProblemSpec::ScalarModel { .. } => &["picard"],
        };
        check(
            allowed.contains(&slug),
            format!(
                "experiment.kind: `{slug}` is not available for problem `{}` (choose one of: {})",
                self.problem.kind_slug(),
                allowed.join(", ")
            ),
        );

        match &self.experiment {
            ExperimentSpec::Spectrum { fd_eps, margin, .. } => {
                check(positive(*fd_eps), format!("experiment.fd_eps: {fd_eps} must be positive"));
                check(
                    margin.is_finite() && *margin >= 0.0,
                    format!("experiment.margin: {margin} must be nonnegative"),
                );
            }
            ExperimentSpec::Evolve { norm_exponents } => {
                for (k, r) in norm_exponents.iter().enumerate() {
                    check(
                        r.is_finite() && *r >= 0.0,
                        format!("experiment.norm_exponents[{k}]: {r} must be nonnegative"),
                    );
                }
            }
            ExperimentSpec::Decay { norm_exponent, window_start, window_end, sup_below } => {
                check(
                    norm_exponent.is_finite() && *norm_exponent >= 0.0,
                    format!("experiment.norm_exponent: {norm_exponent} must be nonnegative"),
                );
                if let (Some(a), Some(b)) = (window_start, window_end) {
                    check(
                        a < b,
                        format!("experiment.window: start {a} must precede end {b}"),
                    );
                }
                if let Some(bound) = sup_below {
                    check(positive(*bound), format!("experiment.sup_below: {bound} must be positive"));
                }
            }
            ExperimentSpec::Instability { amplitudes, escape_radius, norm_exponent } => {
                check(!amplitudes.is_empty(), "experiment.amplitudes: must not be empty".to_string());
                check(
                    amplitudes.iter().all(|a| positive(*a)),
                    "experiment.amplitudes: must all be positive".to_string(),
                );
                check(
                    amplitudes.windows(2).all(|w| w[0] > w[1]),
                    "experiment.amplitudes: must be strictly decreasing".to_string(),
                );
                check(
                    positive(*escape_radius),
                    format!("experiment.escape_radius: {escape_radius} must be positive"),
                );
                check(
                    norm_exponent.is_finite() && *norm_exponent >= 0.0,
                    format!("experiment.norm_exponent: {norm_exponent} must be nonnegative"),
                );
            }
            ExperimentSpec::Picard { segments, substeps, tol, max_iter, .. } => {
                check(*segments >= 1, "experiment.segments: must be at least 1".to_string());
                check(*substeps >= 1, "experiment.substeps: must be at least 1".to_string());
                check(positive(*tol), format!("experiment.tol: {tol} must be positive"));
                check(*max_iter >= 1, "experiment.max_iter: must be at least 1".to_string());
                check(
                    positive(self.time.t_end),
                    format!(
                        "time.t_end: {} must be positive for a fixed-point solve",
                        self.time.t_end
                    ),
                );
            }
            ExperimentSpec::Semiflow { split, norm_exponent } => {
                check(
                    split.is_finite() && *split > 0.0 && *split < self.time.t_end,
                    format!(
                        "experiment.split: {split} must lie strictly inside (0, t_end = {})",
                        self.time.t_end
                    ),
                );
                check(
                    norm_exponent.is_finite() && *norm_exponent >= 0.0,
                    format!("experiment.norm_exponent: {norm_exponent} must be nonnegative"),
                );
            }
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }
}

/// Applies one `key.path=value` override to a parsed TOML tree, creating
/// intermediate tables as needed. The value is parsed as TOML; if that fails
/// it is taken as a bare string.
pub fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), ConfigError> {
    let (path, raw) = entry.split_once('=').ok_or_else(|| ConfigError::BadOverride {
        given: entry.to_string(),
        reason: "expected key.path=value".to_string(),
    })?;
    let path = path.trim();
    let raw = raw.trim();
    if path.is_empty() {
        return Err(ConfigError::BadOverride {
            given: entry.to_string(),
            reason: "empty key path".to_string(),
        });
    }
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("literal key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    };

    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (k, segment) in segments.iter().enumerate() {
        if segment.is_empty() {
            return Err(ConfigError::BadOverride {
                given: entry.to_string(),
                reason: "empty path segment".to_string(),
            });
        }
        let table = cursor.as_table_mut().ok_or_else(|| ConfigError::BadOverride {
            given: entry.to_string(),
            reason: format!("`{}` is not a table", segments[..k].join(".")),
        })?;
        if k + 1 == segments.len() {
            table.insert(segment.to_string(), parsed);
            return Ok(());
        }
        cursor = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!("loop returns on the last segment");
}

#[cfg(test)]
mod tests {
    use super::*;

    const PE1_DECAY: &str = r#"
        schema_version = 1

        [problem]
        kind = "pe1"
        permeability = 1.0
        viscosity = 1.0
        delta_rho = 2.0

        [grid]
        n = 64
        quadrature_m = 128

        [time]
        scheme = "rk4"
        dt = 1e-3
        t_end = 4.0
        record_every = 10

        [initial]
        modes = [{ mode = 1, cos = 0.01 }]

        [experiment]
        kind = "decay"
        norm_exponent = 1.75
    "#;

    #[test]
    fn parses_a_complete_config() {
        let config = ExperimentConfig::from_toml_str(PE1_DECAY, &[]).unwrap();
        assert_eq!(config.schema_version, 1);
        assert_eq!(config.problem.kind_slug(), "pe1");
        assert_eq!(config.experiment.kind_slug(), "decay");
        assert_eq!(config.grid.n, 64);
        assert!(config.grid.dealias);
        assert_eq!(config.time.record_every, 10);
        assert_eq!(config.initial.modes.len(), 1);
        assert_eq!(config.initial.modes[0].sin, 0.0);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let overrides = vec![
            "grid.n=128".to_string(),
            "time.dt = 5e-4".to_string(),
            "experiment.norm_exponent=2.0".to_string(),
            "output.dir=out/decay".to_string(),
        ];
        let config = ExperimentConfig::from_toml_str(PE1_DECAY, &overrides).unwrap();
        assert_eq!(config.grid.n, 128);
        assert_eq!(config.time.dt, 5e-4);
        match config.experiment {
            ExperimentSpec::Decay { norm_exponent, .. } => assert_eq!(norm_exponent, 2.0),
            other => panic!("unexpected experiment {other:?}"),
        }
        assert_eq!(config.output.dir.as_deref(), Some(Path::new("out/decay")));
    }

    #[test]
    fn override_grammar_is_checked() {
        for bad in ["no-equals", "=5", "a..b=1"] {
            let err = ExperimentConfig::from_toml_str(PE1_DECAY, &[bad.to_string()]).unwrap_err();
            assert!(matches!(err, ConfigError::BadOverride { .. }), "{bad}: {err}");
        }
    }

    #[test]
    fn validation_collects_every_violation() {
        let overrides = vec![
            "grid.n=63".to_string(),
            "grid.quadrature_m=100".to_string(),
            "time.dt=-1.0".to_string(),
        ];
        let err = ExperimentConfig::from_toml_str(PE1_DECAY, &overrides).unwrap_err();
        match err {
            ConfigError::Invalid(violations) => {
                assert_eq!(violations.len(), 3, "{violations:?}");
                assert!(violations[0].contains("grid.n"));
                assert!(violations[1].contains("grid.quadrature_m"));
                assert!(violations[2].contains("time.dt"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn odd_grid_is_named_in_the_error() {
        let err =
            ExperimentConfig::from_toml_str(PE1_DECAY, &["grid.n=65".to_string()]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("grid.n"), "{text}");
        assert!(text.contains("power of two"), "{text}");
    }

    #[test]
    fn experiment_problem_compatibility_is_enforced() {
        let err = ExperimentConfig::from_toml_str(
            PE1_DECAY,
            &[
                "experiment.kind=instability".to_string(),
                "experiment.amplitudes=[1e-2]".to_string(),
                "experiment.escape_radius=0.05".to_string(),
            ],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not available for problem `pe1`"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ExperimentConfig::from_toml_str(PE1_DECAY, &["grid.misspelled=1".to_string()])
            .unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    }

    #[test]
    fn scalar_model_requires_a_value() {
        let text = r#"
            schema_version = 1
            [problem]
            kind = "scalar-model"
            [grid]
            n = 16
            quadrature_m = 16
            [time]
            scheme = "rk4"
            dt = 1e-3
            t_end = 0.5
            [experiment]
            kind = "picard"
            segments = 8
            substeps = 16
        "#;
        let err = ExperimentConfig::from_toml_str(text, &[]).unwrap_err();
        assert!(err.to_string().contains("initial.value"), "{err}");
        let ok = ExperimentConfig::from_toml_str(text, &["initial.value=1.0".to_string()]);
        assert!(ok.is_ok(), "{ok:?}");
    }

    #[test]
    fn config_round_trips_through_serde() {
        let config = ExperimentConfig::from_toml_str(PE1_DECAY, &[]).unwrap();
        let json = serde_json::to_string(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.grid.n, config.grid.n);
        assert_eq!(back.experiment.kind_slug(), "decay");
    }
}
