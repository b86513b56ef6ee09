//! Run configuration: one JSON document with `physics`, `optim`, `contour`
//! and `outputs` sections, plus the `validate`/`kappa` job lists.

use std::path::{Path, PathBuf};

use contour_opt::optimize::OptimConfig;
use contour_opt::presets::{ContourPreset, FieldPreset, FieldSpec};
use contour_opt::solver::PhysicsConfig;
use contour_opt::{io, Contour, Rect};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub optim: OptimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourSection>,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaSection>,
}

/// A scalar field: a constant, a named closed form, or gridded samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Constant(f64),
    Preset(String),
    Samples { samples: PathBuf },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub k: Option<f64>,
    pub gamma: Option<f64>,
    pub u0: Option<f64>,
    pub q: Option<FieldValue>,
    pub target: Option<FieldValue>,
    /// `[x0, x1, y0, y1]` of the tracking region.
    pub region: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimSection {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub l0: f64,
    pub ell: f64,
    pub eps_j: f64,
    pub eps_tau: f64,
    pub max_iters: usize,
    pub margin: f64,
    pub line_tol: f64,
    pub line_max_evals: usize,
}

impl Default for OptimSection {
    fn default() -> Self {
        let d = OptimConfig::default();
        OptimSection {
            n: d.n,
            m: d.m,
            alpha: d.alpha,
            l0: d.l0,
            ell: d.ell,
            eps_j: d.eps_j,
            eps_tau: d.eps_tau,
            max_iters: d.max_iters,
            margin: d.margin,
            line_tol: d.line_tol,
            line_max_evals: d.line_max_evals,
        }
    }
}

impl OptimSection {
    pub fn to_config(&self) -> OptimConfig {
        OptimConfig {
            alpha: self.alpha,
            l0: self.l0,
            ell: self.ell,
            eps_j: self.eps_j,
            eps_tau: self.eps_tau,
            max_iters: self.max_iters,
            n: self.n,
            m: self.m,
            margin: self.margin,
            line_tol: self.line_tol,
            line_max_evals: self.line_max_evals,
        }
    }
}

/// Exactly one of `preset`, `points` or `file`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    /// Write grid fields (`u.csv`, adjoint field).
    pub fields: bool,
    /// Write one contour CSV per optimization iterate.
    pub snapshots: bool,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { fields: true, snapshots: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Combination {
    pub contour: String,
    pub zeta: u32,
    pub n: usize,
    pub m: usize,
    /// Required best `|κ − 1|` on the plateau window.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub combinations: Vec<Combination>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaSection {
    pub zeta: u32,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

pub fn default_epsilons() -> Vec<f64> {
    (1..=10).map(|k| 10f64.powi(-k)).collect()
}

/// Window of ε searched for the κ plateau.
pub const PLATEAU_WINDOW: (f64, f64) = (1e-6, 1e-1);

impl RunConfig {
    /// Parses JSON; syntax and schema errors carry line and column.
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("{e} (line {}, column {})", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// Makes relative data paths relative to the config file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for f in [&mut self.physics.q, &mut self.physics.target].into_iter().flatten() {
            if let FieldValue::Samples { samples } = f {
                fix(samples);
            }
        }
        if let Some(ContourSection { file: Some(p), .. }) = &mut self.contour {
            fix(p);
        }
    }

    /// Physical constants with defaults filled in. Omitted constants are
    /// logged because the defaults are a policy, not a measurement.
    pub fn physics(&self) -> Result<PhysicsConfig, CliError> {
        let d = PhysicsConfig::default();
        let p = &self.physics;
        let pick = |v: Option<f64>, name: &str, default: f64| {
            v.unwrap_or_else(|| {
                log::warn!("physics.{name} not given; using default {name} = {default}");
                default
            })
        };
        let k = pick(p.k, "k", d.k);
        let gamma = pick(p.gamma, "gamma", d.gamma);
        let u0 = pick(p.u0, "u0", d.u0);
        let q = match &p.q {
            Some(f) => field_spec(f, "physics.q")?,
            None => FieldSpec::Constant(0.0),
        };
        let target = match &p.target {
            Some(f) => field_spec(f, "physics.target")?,
            None => FieldSpec::Constant(u0),
        };
        let region = match p.region {
            Some([x0, x1, y0, y1]) => Rect::new(x0, x1, y0, y1).map_err(CliError::from_setup)?,
            None => Rect::OMEGA,
        };
        let physics = PhysicsConfig { k, gamma, u0, q, target, region };
        physics.validate().map_err(CliError::from_setup)?;
        Ok(physics)
    }

    /// The initial contour resampled to `m` equal-arclength nodes and
    /// checked against the open square.
    pub fn contour(&self, m: usize) -> Result<Contour, CliError> {
        let section = self.contour.as_ref().ok_or_else(|| CliError::config("missing `contour` section"))?;
        let given = [section.preset.is_some(), section.points.is_some(), section.file.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(CliError::config("contour needs exactly one of `preset`, `points`, `file`"));
        }
        let raw = if let Some(name) = &section.preset {
            preset_contour(name, m)?
        } else if let Some(points) = &section.points {
            inside_square(points)?;
            Contour::new(points.clone()).map_err(CliError::from_setup)?
        } else {
            io::load_contour(section.file.as_ref().unwrap()).map_err(CliError::from_setup)?
        };
        inside_square(raw.points())?;
        if !raw.is_simple() {
            return Err(CliError::config("contour must be simple (it self-intersects)"));
        }
        contour_opt::resample_equal_arclength(&raw, m).map_err(CliError::from_setup)
    }
}

fn inside_square(points: &[[f64; 2]]) -> Result<(), CliError> {
    match points.iter().find(|p| !(p[0].abs() < 1.0 && p[1].abs() < 1.0)) {
        Some(p) => Err(CliError::config(format!(
            "contour must lie strictly inside the square (-1, 1)²; node ({}, {}) does not",
            p[0], p[1]
        ))),
        None => Ok(()),
    }
}

pub fn preset_contour(name: &str, m: usize) -> Result<Contour, CliError> {
    let preset: ContourPreset = name.parse().map_err(|_| CliError::config(format!("unknown contour preset '{name}'")))?;
    preset.contour(m).map_err(CliError::from_setup)
}

fn field_spec(f: &FieldValue, what: &str) -> Result<FieldSpec, CliError> {
    match f {
        FieldValue::Constant(c) => Ok(FieldSpec::Constant(*c)),
        FieldValue::Preset(name) => name
            .parse::<FieldPreset>()
            .map(FieldSpec::Preset)
            .map_err(|_| CliError::config(format!("{what}: unknown field preset '{name}'"))),
        FieldValue::Samples { samples } => {
            io::load_grid(samples).map(FieldSpec::Samples).map_err(|e| CliError::config(format!("{what}: {e}")))
        }
    }
}

/// Built-in run definitions.
pub fn preset(name: &str, initial: Option<&str>) -> Result<RunConfig, CliError> {
    let paper_fields = |target: &str| PhysicsSection {
        q: Some(FieldValue::Preset("q_paper".into())),
        target: Some(FieldValue::Preset(target.into())),
        k: Some(1.0),
        gamma: Some(1.0),
        u0: Some(10.0),
        region: None,
    };
    let contour = |name: &str| Some(ContourSection { preset: Some(name.into()), ..Default::default() });
    let combos = |contours: &[&str], zetas: &[u32], res: &[(usize, usize)]| {
        let finest = *res.last().unwrap();
        let mut out = Vec::new();
        for c in contours {
            for &z in zetas {
                for &(n, m) in res {
                    let tolerance = if (n, m) == finest { 1e-3 } else { 1e-2 };
                    out.push(Combination { contour: c.to_string(), zeta: z, n, m, tolerance });
                }
            }
        }
        Some(ValidateSection { combinations: out, epsilons: default_epsilons() })
    };
    let config = match name {
        "case1" => RunConfig {
            physics: paper_fields("ubar_cells"),
            optim: OptimSection { n: 50, m: 100, alpha: 0.0, ell: 0.1, ..Default::default() },
            contour: contour(initial.unwrap_or("C2")),
            ..Default::default()
        },
        "case2" => RunConfig {
            physics: PhysicsSection { region: Some([-0.5, 1.0, -0.5, 1.0]), ..paper_fields("ubar_cells") },
            optim: OptimSection { n: 50, m: 100, alpha: 100.0, l0: 3.0, ell: 0.1, ..Default::default() },
            contour: contour(initial.unwrap_or("C6")),
            ..Default::default()
        },
        "test1" => RunConfig {
            physics: paper_fields("ubar_sin"),
            validate: combos(&["C1"], &[1, 2, 3, 4], &[(50, 50), (100, 100), (80, 300)]),
            ..Default::default()
        },
        "test2" => RunConfig {
            physics: paper_fields("ubar_sin"),
            validate: combos(&["C2", "C3", "C4", "C5"], &[1], &[(50, 50), (80, 100), (80, 200), (80, 300), (80, 400)]),
            ..Default::default()
        },
        other => return Err(CliError::config(format!("unknown preset '{other}' (expected case1, case2, test1, test2)"))),
    };
    if initial.is_some() && !matches!(name, "case1" | "case2") {
        return Err(CliError::config(format!("--initial does not apply to preset '{name}'")));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_errors_report_position() {
        let err = RunConfig::parse("{\n  \"physics\": {\"k\": }\n}").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("line 2"), "{}", err.message);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"physics": {"gama": 2}}"#).is_err());
    }

    #[test]
    fn field_values_parse_all_forms() {
        let c = RunConfig::parse(r#"{"physics": {"q": 3.5, "target": "ubar_sin"}}"#).unwrap();
        assert_eq!(c.physics.q, Some(FieldValue::Constant(3.5)));
        let p = c.physics().unwrap();
        assert_eq!(p.target, FieldSpec::Preset(FieldPreset::UbarSin));
        assert_eq!(p.gamma, 1.0);
        assert!(RunConfig::parse(r#"{"physics": {"q": "nope"}}"#).unwrap().physics().is_err());
    }

    #[test]
    fn presets_are_complete() {
        let c = preset("case2", None).unwrap();
        assert_eq!(c.physics().unwrap().region, Rect::new(-0.5, 1.0, -0.5, 1.0).unwrap());
        assert!((c.contour(100).unwrap().length() - 3.0).abs() < 1e-9);
        assert_eq!(preset("test1", None).unwrap().validate.unwrap().combinations.len(), 12);
        assert_eq!(preset("test2", None).unwrap().validate.unwrap().combinations.len(), 20);
        assert!(preset("case9", None).is_err());
        assert!(preset("test1", Some("C2")).is_err());
    }

    #[test]
    fn contour_outside_square_names_the_constraint() {
        let c = RunConfig::parse(r#"{"contour": {"points": [[0,0],[1.5,0],[0,0.5]]}}"#).unwrap();
        let err = c.contour(16).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("strictly inside"), "{}", err.message);
    }
}
