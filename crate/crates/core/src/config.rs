//! Run configuration: a JSON file and command-line flags merged into one
//! validated [`Job`].

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arcsine::{published_eps, DEFAULT_GRID};
use crate::division::DEFAULT_BRANCH_CAP;
use crate::error::{Error, Result};
use crate::master::SsaConfig;
use crate::presets::preset;
use crate::resource::EstimationCase;
use crate::state_space::{KernelSpec, MassDistribution, TransitionTable, DEFAULT_STATE_CAP};

/// Collision step used when neither the file nor the flags set one.
pub const DEFAULT_DT: f64 = 0.01;
/// Pipeline sweep size used by `emulate` by default.
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Simulate,
    Emulate,
    ArcsineFit,
    Estimate,
    ReproduceTables,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Solve,
        Command::Simulate,
        Command::Emulate,
        Command::ArcsineFit,
        Command::Estimate,
        Command::ReproduceTables,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Emulate => "emulate",
            Command::ArcsineFit => "arcsine-fit",
            Command::Estimate => "estimate",
            Command::ReproduceTables => "reproduce-tables",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown format `{s}` (json or csv)"))),
        }
    }
}

/// Division-simulator bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    #[default]
    Merged,
    Tree,
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merged" => Ok(SimMode::Merged),
            "tree" => Ok(SimMode::Tree),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (merged or tree)"
            ))),
        }
    }
}

/// Which time series `solve` writes as CSV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Series {
    #[default]
    Counts,
    States,
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counts" => Ok(Series::Counts),
            "states" => Ok(Series::States),
            _ => Err(Error::Config(format!(
                "unknown series `{s}` (counts or states)"
            ))),
        }
    }
}

/// Everything a run can be told, before validation. Every field except
/// `command` is optional; flags given on the command line win over the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,

    #[serde(default, alias = "N", skip_serializing_if = "Option::is_none")]
    pub bins: Option<u32>,
    #[serde(default, alias = "M", skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Initial occupation counts; all mass in bin 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_cap: Option<u32>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SimMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_master: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_cap: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa_runs: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Series>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_eps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_eps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rotation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_estimation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_arcsin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_calculation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_bin: Option<u32>,

    /// Arcsine polynomial degree for `arcsine-fit`.
    #[serde(default, alias = "d", skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    /// Arcsine target error for `arcsine-fit` and `emulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Register widths swept by `emulate`; `n_eps` alone when empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<u32>>,
    /// Quantized coefficient file: written by `arcsine-fit`, read by `emulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            preset: None,
            bins: None,
            steps: None,
            dt: None,
            kernel: None,
            initial: None,
            state_cap: None,
            mode: None,
            check_master: None,
            branch_cap: None,
            ssa_runs: None,
            series: None,
            n_eps: None,
            d_eps: None,
            m_eps: None,
            eps_rotation: None,
            eps_estimation: None,
            eps_c: None,
            delta: None,
            eps_arcsin: None,
            eps_calculation: None,
            readout_bin: None,
            degree: None,
            eps: None,
            grid: None,
            samples: None,
            widths: None,
            coefficients: None,
            seed: None,
            out: None,
            format: None,
        }
    }

    /// Parses a JSON configuration; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Config(format!(
                "configuration is empty; required field: command (one of {})",
                Command::ALL.map(Command::name).join(", ")
            )));
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("{path}: {inner}"))
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Copies every field set in `other` over `self`; the command is kept.
    pub fn overlay(&mut self, other: RunConfig) {
        overlay_fields!(self, other; preset, bins, steps, dt, kernel, initial, state_cap, mode,
            check_master, branch_cap, ssa_runs, series, n_eps, d_eps, m_eps, eps_rotation,
            eps_estimation, eps_c, delta, eps_arcsin, eps_calculation, readout_bin, degree, eps,
            grid, samples, widths, coefficients, seed, out, format);
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// The estimation case from the preset (if any) with explicit fields on top.
    pub fn estimation_case(&self) -> Result<EstimationCase> {
        let base = self.preset.as_deref().map(preset).transpose()?;
        let missing: Vec<&str> = [
            ("N", self.bins.is_none() && base.is_none()),
            ("M", self.steps.is_none() && base.is_none()),
            ("n_eps", self.n_eps.is_none() && base.is_none()),
            ("d_eps", self.d_eps.is_none() && base.is_none()),
            ("m_eps", self.m_eps.is_none() && base.is_none()),
            (
                "eps_rotation",
                self.eps_rotation.is_none() && base.is_none(),
            ),
            (
                "eps_estimation",
                self.eps_estimation.is_none() && base.is_none(),
            ),
            ("eps_c", self.eps_c.is_none() && base.is_none()),
            ("delta", self.delta.is_none() && base.is_none()),
        ]
        .into_iter()
        .filter(|m| m.1)
        .map(|m| m.0)
        .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "estimate needs a preset or these fields: {}",
                missing.join(", ")
            )));
        }
        let mut c = base.unwrap_or(EstimationCase {
            bins: 0,
            steps: 0,
            n_eps: 0,
            d_eps: 0,
            m_eps: 0,
            eps_rotation: 0.0,
            eps_estimation: 0.0,
            eps_c: 0.0,
            delta: 0.0,
            eps_arcsin: None,
            eps_calculation: None,
            readout_bin: 1,
        });
        c.bins = self.bins.unwrap_or(c.bins);
        c.steps = self.steps.unwrap_or(c.steps);
        c.n_eps = self.n_eps.unwrap_or(c.n_eps);
        c.d_eps = self.d_eps.unwrap_or(c.d_eps);
        c.m_eps = self.m_eps.unwrap_or(c.m_eps);
        c.eps_rotation = self.eps_rotation.unwrap_or(c.eps_rotation);
        c.eps_estimation = self.eps_estimation.unwrap_or(c.eps_estimation);
        c.eps_c = self.eps_c.unwrap_or(c.eps_c);
        c.delta = self.delta.unwrap_or(c.delta);
        c.eps_arcsin = self.eps_arcsin.or(c.eps_arcsin);
        c.eps_calculation = self.eps_calculation.or(c.eps_calculation);
        c.readout_bin = self.readout_bin.unwrap_or(c.readout_bin);
        c.validate()?;
        Ok(c)
    }

    fn dynamics(&self) -> Result<Dynamics> {
        let bins = self
            .bins
            .ok_or_else(|| Error::Config(format!("{} needs N", self.command.name())))?;
        let steps = self
            .steps
            .ok_or_else(|| Error::Config(format!("{} needs M", self.command.name())))?;
        let cap = self.state_cap.unwrap_or(DEFAULT_STATE_CAP);
        if bins > cap {
            return Err(Error::ResourceLimit {
                what: format!("N = {bins} exceeds the state cap"),
                limit: cap as u128,
            });
        }
        let kernel = self
            .kernel
            .clone()
            .unwrap_or(KernelSpec::Constant { k0: 1.0 });
        let dt = self.dt.unwrap_or(DEFAULT_DT);
        let table = TransitionTable::new(bins, &kernel, dt)?;
        let initial = match &self.initial {
            Some(c) => {
                let s = MassDistribution::new(c.clone())?;
                if s.bins() != bins {
                    return Err(Error::Config(format!(
                        "initial state has mass {}, expected N = {bins}",
                        s.bins()
                    )));
                }
                s
            }
            None => MassDistribution::monodisperse(bins),
        };
        Ok(Dynamics {
            kernel,
            table,
            initial,
            steps,
        })
    }

    fn arcsine_target(&self, degree: u32) -> Result<f64> {
        if let Some(e) = self.eps {
            return Ok(e);
        }
        if let Some(m) = self.m_eps {
            if let Some(e) = published_eps(degree, m as usize) {
                return Ok(e);
            }
        }
        if let Some(c) = self.preset.as_deref().map(preset).transpose()? {
            if let Some(e) = published_eps(c.d_eps, c.m_eps as usize) {
                return Ok(e);
            }
        }
        Err(Error::Config(
            "an arcsine target error is needed: set eps".into(),
        ))
    }

    /// Checks everything that can be checked without running, and resolves defaults.
    pub fn resolve(&self) -> Result<Job> {
        if let Some(g) = self.grid {
            if g < 2 {
                return Err(Error::Config(format!("grid must be at least 2, got {g}")));
            }
        }
        let grid = self.grid.unwrap_or(DEFAULT_GRID);
        match self.command {
            Command::Solve => {
                let dynamics = self.dynamics()?;
                let ssa = self.ssa_runs.map(|n_runs| SsaConfig {
                    n_runs,
                    seed: self.seed(),
                    t_end: dynamics.steps as f64 * dynamics.table.dt(),
                });
                Ok(Job::Solve {
                    dynamics,
                    ssa,
                    series: self.series.unwrap_or_default(),
                })
            }
            Command::Simulate => {
                let dynamics = self.dynamics()?;
                if dynamics.steps > u32::MAX as u64 {
                    return Err(Error::Config(format!(
                        "M = {} is too large for the simulator",
                        dynamics.steps
                    )));
                }
                Ok(Job::Simulate {
                    dynamics,
                    mode: self.mode.unwrap_or_default(),
                    check_master: self.check_master.unwrap_or(false),
                    branch_cap: self.branch_cap.unwrap_or(DEFAULT_BRANCH_CAP),
                })
            }
            Command::Emulate => {
                let from_preset = self.preset.as_deref().map(preset).transpose()?;
                let widths = match (&self.widths, self.n_eps, &from_preset) {
                    (Some(w), _, _) if !w.is_empty() => w.clone(),
                    (_, Some(n), _) => vec![n],
                    (_, None, Some(c)) => vec![c.n_eps],
                    _ => {
                        return Err(Error::Config(
                            "emulate needs n_eps, widths or a preset".into(),
                        ))
                    }
                };
                let samples = self.samples.unwrap_or(DEFAULT_SAMPLES);
                if samples == 0 {
                    return Err(Error::Config("samples must be positive".into()));
                }
                let source = match &self.coefficients {
                    Some(path) => PieceSource::File(path.clone()),
                    None => {
                        let degree = self
                            .degree
                            .or(self.d_eps)
                            .or(from_preset.as_ref().map(|c| c.d_eps))
                            .ok_or_else(|| {
                                Error::Config(
                                    "emulate needs d, a preset or a coefficient file".into(),
                                )
                            })?;
                        PieceSource::Fit {
                            degree,
                            eps: self.arcsine_target(degree)?,
                            grid,
                        }
                    }
                };
                Ok(Job::Emulate {
                    widths,
                    samples,
                    seed: self.seed(),
                    source,
                })
            }
            Command::ArcsineFit => {
                let eps = self
                    .eps
                    .ok_or_else(|| Error::Config("arcsine-fit needs eps".into()))?;
                if !(eps > 0.0) {
                    return Err(Error::Config(format!("eps must be positive, got {eps}")));
                }
                let degree = self.degree.or(self.d_eps);
                if degree.is_none() && self.n_eps.is_none() {
                    return Err(Error::Config(
                        "arcsine-fit needs d, or n_eps to choose the cheapest degree".into(),
                    ));
                }
                if self.coefficients.is_some() && self.n_eps.is_none() {
                    return Err(Error::Config("writing coefficients needs n_eps".into()));
                }
                Ok(Job::ArcsineFit {
                    degree,
                    eps,
                    grid,
                    n_eps: self.n_eps,
                    coefficients: self.coefficients.clone(),
                })
            }
            Command::Estimate => Ok(Job::Estimate {
                name: self.preset.clone(),
                case: self.estimation_case()?,
            }),
            Command::ReproduceTables => Ok(Job::ReproduceTables { grid }),
        }
    }
}

/// Inputs shared by the two dynamical commands.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub kernel: KernelSpec,
    pub table: TransitionTable,
    pub initial: MassDistribution,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PieceSource {
    Fit { degree: u32, eps: f64, grid: usize },
    File(PathBuf),
}

/// A validated unit of work.
#[derive(Clone, Debug)]
pub enum Job {
    Solve {
        dynamics: Dynamics,
        ssa: Option<SsaConfig>,
        series: Series,
    },
    Simulate {
        dynamics: Dynamics,
        mode: SimMode,
        check_master: bool,
        branch_cap: u128,
    },
    Emulate {
        widths: Vec<u32>,
        samples: usize,
        seed: u64,
        source: PieceSource,
    },
    ArcsineFit {
        degree: Option<u32>,
        eps: f64,
        grid: usize,
        n_eps: Option<u32>,
        coefficients: Option<PathBuf>,
    },
    Estimate {
        name: Option<String>,
        case: EstimationCase,
    },
    ReproduceTables {
        grid: usize,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_lists_required() {
        let e = RunConfig::from_json("  \n").unwrap_err().to_string();
        assert!(e.contains("command"), "{e}");
        assert!(e.contains("reproduce-tables"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let e = RunConfig::from_json(r#"{"command":"solve","kernel":{"kind":"sum","k0":1,"x":2}}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("kernel"), "{e}");
        let e = RunConfig::from_json(r#"{"command":"solve","bogus":1}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("bogus"), "{e}");
        let e = RunConfig::from_json(r#"{"N":3}"#).unwrap_err().to_string();
        assert!(e.contains("command"), "{e}");
    }

    #[test]
    fn presets_resolve() {
        let mut c = RunConfig::new(Command::Estimate);
        c.preset = Some("paper-case-1".into());
        let case = c.estimation_case().unwrap();
        assert_eq!(
            (case.bins, case.steps, case.n_eps, case.d_eps, case.m_eps),
            (40, 2000, 42, 5, 15)
        );
        assert_eq!(
            (
                case.eps_rotation,
                case.eps_estimation,
                case.eps_c,
                case.delta
            ),
            (1e-13, 9.9e-3, 1e-8, 0.01)
        );
        c.preset = Some("paper-case-4".into());
        let case = c.estimation_case().unwrap();
        assert_eq!((case.bins, case.steps, case.eps_c), (40, 20000, 1e-9));
        c.steps = Some(10);
        assert_eq!(c.estimation_case().unwrap().steps, 10);
    }

    #[test]
    fn estimate_without_case_names_fields() {
        let e = RunConfig::new(Command::Estimate)
            .resolve()
            .unwrap_err()
            .to_string();
        assert!(
            e.contains("N") && e.contains("eps_c") && e.contains("delta"),
            "{e}"
        );
    }

    #[test]
    fn overlay_prefers_flags() {
        let mut file =
            RunConfig::from_json(r#"{"command":"simulate","N":4,"M":2,"dt":0.02}"#).unwrap();
        let mut flags = RunConfig::new(Command::Simulate);
        flags.bins = Some(3);
        file.overlay(flags);
        assert_eq!(
            (file.bins, file.steps, file.dt),
            (Some(3), Some(2), Some(0.02))
        );
        assert!(matches!(file.resolve().unwrap(), Job::Simulate { .. }));
    }

    #[test]
    fn emulate_target_from_preset() {
        let mut c = RunConfig::new(Command::Emulate);
        c.preset = Some("paper-case-1".into());
        match c.resolve().unwrap() {
            Job::Emulate { widths, source, .. } => {
                assert_eq!(widths, vec![42]);
                assert_eq!(
                    source,
                    PieceSource::Fit {
                        degree: 5,
                        eps: 1e-12,
                        grid: DEFAULT_GRID
                    }
                );
            }
            other => panic!("{other:?}"),
        }
    }
}
