//! JSON run configuration and its resolution into a [`Job`].
//!
//! ```json
//! {
//!   "material": { "kind": "maxwell", "mu": 40.0, "eta": 400.0 },
//!   "program": { "preset": "paper-4.1" },
//!   "run": { "integrator": "ebmsc", "dt": 1.0, "t_end": 300.0, "output": "out.csv" }
//! }
//! ```
//!
//! Every block is optional when a preset is given on the command line.
//! Units are MPa and s.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;
use viscostep::driver::{LoadingProgram, Material, StretchHistory};
use viscostep::genvisc::GenViscParams;
use viscostep::integrators::Integrator;
use viscostep::maxwell::MaxwellParams;
use viscostep::Tensor2;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
pub enum Preset {
    /// Isochoric tension, shear, tension on a single Maxwell element (0..300 s).
    #[serde(rename = "paper-4.1")]
    #[value(name = "paper-4.1")]
    TensionShearTension,
    /// Three uniaxial cycles between stretch 1 and 2 at 0.015 1/s.
    #[serde(rename = "uniaxial-cyclic")]
    #[value(name = "uniaxial-cyclic")]
    UniaxialCyclic,
    /// Slow uniaxial load to 2, hold, fast unload to 1.5, hold.
    #[serde(rename = "relaxation")]
    #[value(name = "relaxation")]
    Relaxation,
}

impl Preset {
    fn program(self) -> Result<Program, CliError> {
        Ok(match self {
            Preset::TensionShearTension => Program::Path(LoadingProgram::tension_shear_tension()),
            Preset::UniaxialCyclic => {
                Program::Uniaxial(StretchHistory::cyclic(0.015, 1.0, 2.0, 3)?)
            }
            Preset::Relaxation => {
                Program::Uniaxial(StretchHistory::relaxation(0.015, 1.5, 2.0, 1.5, 500.0)?)
            }
        })
    }

    fn default_dt(self) -> f64 {
        match self {
            Preset::TensionShearTension => 1.0,
            Preset::UniaxialCyclic | Preset::Relaxation => 0.1,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub material: Option<MaterialConfig>,
    pub program: Option<ProgramConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaterialConfig {
    Maxwell {
        mu: f64,
        eta: f64,
    },
    /// Missing fields take the rubber defaults.
    Genvisc {
        c10: Option<f64>,
        c20: Option<f64>,
        c30: Option<f64>,
        k: Option<f64>,
        branches: Option<Vec<BranchConfig>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub mu: f64,
    pub eta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub t: f64,
    /// Row-major deformation gradient.
    #[serde(rename = "F")]
    pub f: [[f64; 3]; 3],
}

/// Exactly one of `preset`, `keyframes` or `stretch`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramConfig {
    pub preset: Option<Preset>,
    pub keyframes: Option<Vec<Keyframe>>,
    /// Applies to `keyframes` only.
    #[serde(default = "default_isochoric")]
    pub isochoric: bool,
    /// `[t, F_xx]` pairs of a uniaxial stretch history.
    pub stretch: Option<Vec<(f64, f64)>>,
}

fn default_isochoric() -> bool {
    true
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub integrator: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub output: Option<PathBuf>,
    /// Step sizes of a convergence study.
    pub dts: Option<Vec<f64>>,
    pub reference_dt: Option<f64>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub integrator: Option<Integrator>,
    pub dt: Vec<f64>,
    pub reference_dt: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub enum Program {
    /// Prescribed `F(t)`.
    Path(LoadingProgram),
    /// Prescribed `F_xx(t)` with traction-free lateral faces.
    Uniaxial(StretchHistory),
}

impl Program {
    pub fn end_time(&self) -> f64 {
        match self {
            Program::Path(p) => p.end_time(),
            Program::Uniaxial(h) => h.end_time(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Job {
    pub material: Material,
    pub program: Program,
    pub integrator: Integrator,
    /// `None` when neither the config nor the command line sets a step.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub output: Option<PathBuf>,
    pub dts: Vec<f64>,
    pub reference_dt: f64,
}

fn material(cfg: MaterialConfig) -> Result<Material, CliError> {
    Ok(match cfg {
        MaterialConfig::Maxwell { mu, eta } => Material::Maxwell(MaxwellParams::new(mu, eta)?),
        MaterialConfig::Genvisc {
            c10,
            c20,
            c30,
            k,
            branches,
        } => {
            let d = GenViscParams::rubber();
            let branches = match branches {
                Some(b) => b
                    .iter()
                    .map(|b| MaxwellParams::new(b.mu, b.eta))
                    .collect::<viscostep::Result<Vec<_>>>()?,
                None => d.branches,
            };
            Material::GenVisc(GenViscParams::new(
                c10.unwrap_or(d.c10),
                c20.unwrap_or(d.c20),
                c30.unwrap_or(d.c30),
                k.unwrap_or(d.k),
                branches,
            )?)
        }
    })
}

fn program(cfg: ProgramConfig) -> Result<(Program, Option<f64>), CliError> {
    match (cfg.preset, cfg.keyframes, cfg.stretch) {
        (Some(p), None, None) => Ok((p.program()?, Some(p.default_dt()))),
        (None, Some(k), None) => {
            let keyframes = k
                .into_iter()
                .map(|k| {
                    let mut f = Tensor2::ZERO;
                    for i in 0..3 {
                        for j in 0..3 {
                            f[(i, j)] = k.f[i][j];
                        }
                    }
                    (k.t, f)
                })
                .collect();
            Ok((
                Program::Path(LoadingProgram::new(keyframes, cfg.isochoric)?),
                None,
            ))
        }
        (None, None, Some(s)) => Ok((Program::Uniaxial(StretchHistory::new(s)?), None)),
        _ => Err(CliError::Config(
            "program needs exactly one of \"preset\", \"keyframes\" or \"stretch\"".into(),
        )),
    }
}

pub(crate) fn check_positive(what: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!(
            "{what} must be a positive number, got {x}"
        )))
    }
}

impl Job {
    pub fn resolve(cfg: Config, over: Overrides) -> Result<Self, CliError> {
        let program_cfg = match over.preset {
            Some(p) => Some(ProgramConfig {
                preset: Some(p),
                keyframes: None,
                isochoric: true,
                stretch: None,
            }),
            None => cfg.program,
        };
        let (program, preset_dt) = match program_cfg {
            Some(p) => program(p)?,
            None => {
                return Err(CliError::Config(
                    "no program: give --preset or a \"program\" block".into(),
                ))
            }
        };
        let material = match (cfg.material, &program) {
            (Some(m), _) => material(m)?,
            (None, Program::Path(_)) => Material::Maxwell(MaxwellParams::new(40.0, 400.0)?),
            (None, Program::Uniaxial(_)) => Material::GenVisc(GenViscParams::rubber()),
        };
        if matches!(program, Program::Uniaxial(_)) && !matches!(material, Material::GenVisc(_)) {
            return Err(CliError::Config(
                "uniaxial programs need a genvisc material".into(),
            ));
        }
        let integrator = match (over.integrator, cfg.run.integrator) {
            (Some(i), _) => i,
            (None, Some(s)) => s.parse().map_err(|_| {
                CliError::Config(format!("unknown integrator {s:?} (ebmsc, ebm, em)"))
            })?,
            (None, None) => Integrator::Ebmsc,
        };
        let dt = over.dt.first().copied().or(cfg.run.dt).or(preset_dt);
        if let Some(dt) = dt {
            if !(dt >= 0.0 && dt.is_finite()) {
                return Err(CliError::Config(format!("dt must be >= 0, got {dt}")));
            }
        }
        let t_end = cfg.run.t_end.unwrap_or_else(|| program.end_time());
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end must be >= 0, got {t_end}")));
        }
        let dts = if !over.dt.is_empty() {
            over.dt.clone()
        } else {
            cfg.run.dts.unwrap_or_else(|| vec![1.0, 0.5])
        };
        let reference_dt = check_positive(
            "reference_dt",
            over.reference_dt.or(cfg.run.reference_dt).unwrap_or(1e-3),
        )?;
        Ok(Self {
            material,
            program,
            integrator,
            dt,
            t_end,
            output: over.out.or(cfg.run.output),
            dts,
            reference_dt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(json: &str) -> Result<Job, CliError> {
        Job::resolve(Config::from_json(json)?, Overrides::default())
    }

    #[test]
    fn preset_alone_is_enough() {
        let job = Job::resolve(
            Config::default(),
            Overrides {
                preset: Some(Preset::TensionShearTension),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(job.dt, Some(1.0));
        assert_eq!(job.t_end, 300.0);
        assert_eq!(job.integrator, Integrator::Ebmsc);
        assert!(matches!(job.material, Material::Maxwell(_)));
    }

    #[test]
    fn genvisc_defaults_and_overrides() {
        let job = resolve(
            r#"{"material": {"kind": "genvisc", "k": 500}, "program": {"preset": "relaxation"}}"#,
        )
        .unwrap();
        let Material::GenVisc(p) = job.material else {
            panic!()
        };
        assert_eq!(p.k, 500.0);
        assert_eq!(p.branches.len(), 4);
        assert_eq!(p.c10, 0.45);
    }

    #[test]
    fn keyframes_program() {
        let job = resolve(
            r#"{"program": {"keyframes": [
                    {"t": 0, "F": [[1,0,0],[0,1,0],[0,0,1]]},
                    {"t": 2, "F": [[1.2,0,0],[0,1,0],[0,0,1]]}],
                 "isochoric": false},
                "run": {"dt": 0.5, "integrator": "em"}}"#,
        )
        .unwrap();
        assert_eq!(job.integrator, Integrator::Em);
        assert_eq!(job.t_end, 2.0);
        let Program::Path(p) = job.program else {
            panic!()
        };
        assert!(!p.is_isochoric());
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"colour": 1}"#,
            r#"{"program": {"preset": "paper-4.1"}, "run": {"dtt": 1}}"#,
            r#"{"material": {"kind": "maxwell", "mu": 1, "eta": 1, "k": 2}, "program": {"preset": "paper-4.1"}}"#,
            r#"{"material": {"kind": "maxwell", "mu": -1, "eta": 1}, "program": {"preset": "paper-4.1"}}"#,
            r#"{"program": {"preset": "nope"}}"#,
            r#"{"program": {"preset": "paper-4.1", "stretch": [[0, 1]]}}"#,
            r#"{"program": {"preset": "relaxation"}, "material": {"kind": "maxwell", "mu": 1, "eta": 1}}"#,
            r#"{"program": {"preset": "paper-4.1"}, "run": {"integrator": "rk4"}}"#,
            r#"{"program": {"preset": "paper-4.1"}, "run": {"dt": -1}}"#,
            r#"{"run": {"dt": 1}}"#,
            "not json",
        ] {
            assert!(matches!(resolve(bad), Err(CliError::Config(_))), "{bad}");
        }
    }
}
