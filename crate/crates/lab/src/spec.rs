//! Experiment specification: command-line flags layered over an optional
//! key=value config file layered over per-experiment defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use squeezesim_core::sed::validate_sed;
use squeezesim_core::trajectory::{validate_chd, validate_homodyne};
use squeezesim_core::{DetectionConfig, SystemParams};

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Classical and Wigner quadrature spectra.
    Spectra,
    /// Autocorrelation of the filtered homodyne current.
    AutocorrQuantum,
    /// Conditional homodyne detection, quantum trajectories.
    ChdQuantum,
    /// Conditional homodyne detection, classical field network.
    ChdSed,
    /// Classical photon number of the unpumped cavity against its target.
    Calibrate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectra => "spectra",
            Experiment::AutocorrQuantum => "autocorr-quantum",
            Experiment::ChdQuantum => "chd-quantum",
            Experiment::ChdSed => "chd-sed",
            Experiment::Calibrate => "calibrate",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Experiment as ValueEnum>::from_str(s, false).ok()
    }

    /// Detection settings before any file or flag is applied.
    pub fn default_detection(self) -> DetectionConfig {
        let base = DetectionConfig::default();
        match self {
            // Many short trajectories resolve the narrow shot-noise spike.
            Experiment::AutocorrQuantum => DetectionConfig {
                t_max: 40.0,
                tau_max: 1.0,
                n_tau: 51,
                n_traj: 10_000,
                ..base
            },
            Experiment::Calibrate => DetectionConfig {
                t_max: 20_000.0,
                n_traj: 16,
                ..base
            },
            _ => base,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Parser)]
#[command(name = "squeezesim", version, about = "Squeezed-light detection experiments")]
struct Cli {
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// Pump parameter, 0 <= lambda < 1.
    #[arg(long)]
    lambda: Option<f64>,
    /// Classical photon number of the noise driving the cavity.
    #[arg(long = "nbar-a")]
    nbar_a: Option<f64>,
    /// Noise bandwidth in units of kappa.
    #[arg(long)]
    bc: Option<f64>,
    /// Detection bandwidth in units of kappa.
    #[arg(long)]
    bd: Option<f64>,
    /// Reflectivity towards the start detector.
    #[arg(long)]
    r: Option<f64>,
    /// Offset amplitude, or `auto` for the flux-matched offset.
    #[arg(long = "offset-amp")]
    offset_amp: Option<String>,
    #[arg(long = "offset-phase")]
    offset_phase: Option<f64>,
    #[arg(long = "lo-phase")]
    lo_phase: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long = "tau-max")]
    tau_max: Option<f64>,
    #[arg(long = "n-tau")]
    n_tau: Option<usize>,
    #[arg(long = "n-traj")]
    n_traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Highest frequency of the spectra grid, in units of kappa.
    #[arg(long = "omega-max")]
    omega_max: Option<f64>,
    #[arg(long = "n-omega")]
    n_omega: Option<usize>,
    /// Output CSV; written atomically.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file using the flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// `None` when neither flags nor file name one; the CLI then only echoes
    /// the defaults.
    pub experiment: Option<Experiment>,
    pub params: SystemParams,
    pub detection: DetectionConfig,
    pub omega_max: f64,
    pub n_omega: usize,
    pub output_path: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "experiment",
    "lambda",
    "nbar-a",
    "bc",
    "bd",
    "r",
    "offset-amp",
    "offset-phase",
    "lo-phase",
    "dt",
    "t-max",
    "tau-max",
    "n-tau",
    "n-traj",
    "seed",
    "omega-max",
    "n-omega",
    "out",
];

/// Reads `key = value` lines. `#` starts a comment; keys may use `_` or `-`.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|m| LabError::Config(format!("{}: {m}", path.display())))
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key `{}`", n + 1, k.trim()));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn file_value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, LabError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| LabError::Config(format!("`{key}`: cannot parse `{v}`"))),
    }
}

fn parse_offset(v: &str) -> Result<Option<f64>, LabError> {
    if v.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| LabError::Config(format!("`offset-amp`: expected a number or `auto`, got `{v}`")))
}

/// Resolves `argv` (program name first) into a validated spec.
pub fn parse_spec<I, T>(argv: I) -> Result<ExperimentSpec, LabError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(LabError::Usage)?;
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let experiment = match (cli.experiment, file.get("experiment")) {
        (Some(e), _) => Some(e),
        (None, Some(v)) => {
            Some(Experiment::parse(v).ok_or_else(|| LabError::Config(format!("`experiment`: unknown value `{v}`")))?)
        }
        (None, None) => None,
    };

    macro_rules! pick {
        ($flag:expr, $key:literal, $default:expr) => {
            match $flag {
                Some(v) => v,
                None => file_value(&file, $key)?.unwrap_or($default),
            }
        };
    }

    let base = SystemParams::baseline(0.0);
    let params = SystemParams {
        kappa: base.kappa,
        lambda_pump: pick!(cli.lambda, "lambda", base.lambda_pump),
        nbar_a: pick!(cli.nbar_a, "nbar-a", base.nbar_a),
        bc: pick!(cli.bc, "bc", base.bc),
        bd: pick!(cli.bd, "bd", base.bd),
    };
    let d = experiment.map_or_else(DetectionConfig::default, |e| e.default_detection());
    let offset_amp = match (&cli.offset_amp, file.get("offset-amp")) {
        (Some(v), _) | (None, Some(v)) => parse_offset(v)?,
        (None, None) => d.offset_amp,
    };
    let detection = DetectionConfig {
        r: pick!(cli.r, "r", d.r),
        offset_amp,
        offset_phase: pick!(cli.offset_phase, "offset-phase", d.offset_phase),
        lo_phase: pick!(cli.lo_phase, "lo-phase", d.lo_phase),
        dt: pick!(cli.dt, "dt", d.dt),
        t_max: pick!(cli.t_max, "t-max", d.t_max),
        tau_max: pick!(cli.tau_max, "tau-max", d.tau_max),
        n_tau: pick!(cli.n_tau, "n-tau", d.n_tau),
        n_traj: pick!(cli.n_traj, "n-traj", d.n_traj),
        seed: pick!(cli.seed, "seed", d.seed),
    };
    let output_path = match cli.out {
        Some(p) => Some(p),
        None => file.get("out").map(PathBuf::from),
    };
    let spec = ExperimentSpec {
        experiment,
        params,
        detection,
        omega_max: pick!(cli.omega_max, "omega-max", 10.0),
        n_omega: pick!(cli.n_omega, "n-omega", 201),
        output_path,
    };
    spec.validate()?;
    Ok(spec)
}

impl ExperimentSpec {
    /// Checks every precondition of the chosen experiment before any
    /// compute is launched.
    pub fn validate(&self) -> Result<(), LabError> {
        let p = &self.params;
        let d = &self.detection;
        let checked = match self.experiment {
            None => p.validate(),
            Some(Experiment::Spectra) => {
                if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
                    return Err(LabError::invalid("omega-max must be > 0"));
                }
                if self.n_omega < 2 {
                    return Err(LabError::invalid("n-omega must be >= 2"));
                }
                p.validate()
            }
            Some(Experiment::AutocorrQuantum) => validate_homodyne(p, d),
            Some(Experiment::ChdQuantum) => validate_chd(p, d),
            Some(Experiment::ChdSed) => validate_sed(p, d),
            Some(Experiment::Calibrate) => {
                if p.nbar_a.is_nan() || p.nbar_a <= 0.0 {
                    return Err(LabError::invalid("calibrate needs nbar-a > 0"));
                }
                if d.n_traj == 0 {
                    return Err(LabError::invalid("n-traj must be >= 1"));
                }
                SystemParams { lambda_pump: 0.0, ..*p }.validate()
            }
        };
        checked.map_err(LabError::Invalid)
    }

    /// The spec as `key=value` pairs, in flag order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let d = &self.detection;
        let mut v = vec![
            (
                "experiment",
                self.experiment.map_or("none".to_string(), |e| e.name().to_string()),
            ),
            ("lambda", p.lambda_pump.to_string()),
            ("nbar-a", p.nbar_a.to_string()),
            ("bc", p.bc.to_string()),
            ("bd", p.bd.to_string()),
            ("kappa", p.kappa.to_string()),
            ("r", d.r.to_string()),
            ("offset-amp", d.offset_amp.map_or("auto".to_string(), |a| a.to_string())),
            ("offset-phase", d.offset_phase.to_string()),
            ("lo-phase", d.lo_phase.to_string()),
            ("dt", d.dt.to_string()),
            ("t-max", d.t_max.to_string()),
            ("tau-max", d.tau_max.to_string()),
            ("n-tau", d.n_tau.to_string()),
            ("n-traj", d.n_traj.to_string()),
            ("seed", d.seed.to_string()),
        ];
        if self.experiment == Some(Experiment::Spectra) {
            v.push(("omega-max", self.omega_max.to_string()));
            v.push(("n-omega", self.n_omega.to_string()));
        }
        v.into_iter().map(|(k, val)| (k.to_string(), val)).collect()
    }
}
