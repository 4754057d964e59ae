//! Flat key=value experiment configuration with documented keys.
//!
//! Precedence: built-in defaults, then the config file, then environment
//! variables prefixed `NSAC_LAB_`, then explicit `--set key=value` pairs.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{CutoffPair, CutoffProfile, Grid1D};
use crate::model::{ModelParams, PressureLaw, StateTriple, ViscosityLaw};
use crate::solver::{InitialData, Integrator, SolverConfig};

/// Environment-variable prefix for CI overrides.
pub const ENV_PREFIX: &str = "NSAC_LAB_";

/// Experiment names in the catalog.
pub const CATALOG: &[&str] = &[
    "nsac-decay",
    "parabolic-decay",
    "difference-decay",
    "lp-decay",
    "linear-decay",
    "spectrum-certify",
    "green-diff",
    "energy-lyapunov",
];

/// One documented configuration key.
struct KeyDoc {
    key: &'static str,
    default: &'static str,
    doc: &'static str,
}

/// The full key table; every accepted key appears here with its default.
const KEYS: &[KeyDoc] = &[
    KeyDoc { key: "experiment", default: "nsac-decay", doc: "experiment name from the catalog" },
    KeyDoc { key: "seed", default: "0", doc: "seed of the counter-based noise generator" },
    KeyDoc { key: "out_dir", default: "runs", doc: "output directory for series files and the manifest" },
    KeyDoc { key: "box_length", default: "4000", doc: "periodic box length L" },
    KeyDoc { key: "points", default: "16384", doc: "grid point count N (power of two)" },
    KeyDoc { key: "epsilon", default: "1", doc: "interface thickness" },
    KeyDoc { key: "vbar", default: "1", doc: "reference specific volume" },
    KeyDoc { key: "ubar", default: "0", doc: "reference velocity" },
    KeyDoc { key: "pressure_amp", default: "0.5", doc: "pressure law amplitude a in p(v)=a v^-gamma" },
    KeyDoc { key: "pressure_exp", default: "2", doc: "pressure law exponent gamma" },
    KeyDoc { key: "viscosity_model", default: "inverse-volume", doc: "viscosity law: constant | inverse-volume" },
    KeyDoc { key: "viscosity_coeff", default: "1", doc: "viscosity coefficient mu" },
    KeyDoc { key: "dt", default: "0.02", doc: "time step" },
    KeyDoc { key: "t_final", default: "300", doc: "final time of the run" },
    KeyDoc { key: "integrator", default: "semi-implicit-spectral", doc: "semi-implicit-spectral | explicit-rk4" },
    KeyDoc { key: "snapshot_stride", default: "25", doc: "steps between norm records" },
    KeyDoc { key: "state_stride", default: "0", doc: "steps between checkpoint states (0 = none)" },
    KeyDoc { key: "beta1", default: "0.05", doc: "Lyapunov cross-term weight" },
    KeyDoc { key: "dealias", default: "true", doc: "2/3-rule dealiasing of nonlinear products" },
    KeyDoc { key: "floor_correct", default: "true", doc: "subtract the conserved zero mode before norms" },
    KeyDoc { key: "resume", default: "false", doc: "resume from the checkpoint in out_dir if present" },
    KeyDoc { key: "delta0", default: "0.01", doc: "perturbation amplitude" },
    KeyDoc { key: "sigma", default: "2", doc: "width of the (n, w) Gaussian bumps" },
    KeyDoc { key: "sigma_phase", default: "4", doc: "width of the phase Gaussian bump" },
    KeyDoc { key: "amp_n", default: "1", doc: "amplitude multiplier of the n bump" },
    KeyDoc { key: "amp_w", default: "1", doc: "amplitude multiplier of the w bump" },
    KeyDoc { key: "amp_phi", default: "1", doc: "amplitude multiplier of the phase bump" },
    KeyDoc { key: "center", default: "0", doc: "bump center" },
    KeyDoc { key: "noise_amp", default: "0", doc: "relative amplitude of seeded band-limited noise" },
    KeyDoc { key: "s", default: "3", doc: "Sobolev order of the energy functionals" },
    KeyDoc { key: "alpha", default: "0.05", doc: "slack exponent absorbed into difference targets" },
    KeyDoc { key: "fit_t0", default: "50", doc: "algebraic fit window start" },
    KeyDoc { key: "fit_t1", default: "300", doc: "algebraic fit window end" },
    KeyDoc { key: "exp_fit_t0", default: "0.5", doc: "exponential fit window start (phase channels)" },
    KeyDoc { key: "exp_fit_t1", default: "6", doc: "exponential fit window end" },
    KeyDoc { key: "diff_exp_fit_t0", default: "2", doc: "exponential window start for the phase difference" },
    KeyDoc { key: "diff_exp_fit_t1", default: "8", doc: "exponential window end for the phase difference" },
    KeyDoc { key: "cutoff_inner", default: "auto", doc: "low-frequency cutoff radius r0 (auto = 0.5 c/nu)" },
    KeyDoc { key: "cutoff_outer", default: "auto", doc: "high-frequency cutoff radius R0 (auto = 4 c/nu)" },
    KeyDoc { key: "spectrum_samples", default: "10000", doc: "log-spaced wavenumber samples for certification" },
    KeyDoc { key: "envelope_c", default: "auto", doc: "Gaussian envelope constant C (auto = 8 nu)" },
    KeyDoc { key: "workers", default: "2", doc: "worker budget for experiment batches" },
];

/// Resolved experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|k| (k.key.to_string(), k.default.to_string()))
            .collect();
        Self { values }
    }
}

fn known_key(key: &str) -> bool {
    KEYS.iter().any(|k| k.key == key)
}

/// One line per documented key, for `--help` style output.
pub fn key_documentation() -> String {
    let mut out = String::new();
    for k in KEYS {
        out.push_str(&format!("  {:<18} (default {:<22}) {}\n", k.key, k.default, k.doc));
    }
    out
}

impl ExperimentConfig {
    /// Defaults, then file, then environment, then explicit overrides.
    pub fn load(
        config_file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path)?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Usage(format!("{}:{}: expected key=value", path.display(), lineno + 1))
                })?;
                cfg.set(key.trim(), value.trim())?;
            }
        }
        for (name, value) in std::env::vars() {
            if let Some(stripped) = name.strip_prefix(ENV_PREFIX) {
                let key = stripped.to_lowercase();
                if known_key(&key) {
                    cfg.set(&key, &value)?;
                }
            }
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known_key(key) {
            return Err(Error::Usage(format!(
                "unknown configuration key '{key}' (see the documented key table)"
            )));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key '{key}' missing from defaults"))
    }

    /// Full resolved key table, echoed into the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }

    fn f64_key(&self, key: &str) -> Result<f64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Usage(format!("key '{key}': expected a number, got '{}'", self.get(key))))
    }

    fn usize_key(&self, key: &str) -> Result<usize> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Usage(format!("key '{key}': expected an integer, got '{}'", self.get(key))))
    }

    fn u64_key(&self, key: &str) -> Result<u64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Usage(format!("key '{key}': expected an integer, got '{}'", self.get(key))))
    }

    fn bool_key(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            other => Err(Error::Usage(format!("key '{key}': expected a boolean, got '{other}'"))),
        }
    }

    pub fn experiment(&self) -> &str {
        self.get("experiment")
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_key("seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out_dir"))
    }

    pub fn workers(&self) -> Result<usize> {
        Ok(self.usize_key("workers")?.max(1))
    }

    pub fn alpha(&self) -> Result<f64> {
        self.f64_key("alpha")
    }

    pub fn sobolev_order(&self) -> Result<usize> {
        self.usize_key("s")
    }

    pub fn resume(&self) -> Result<bool> {
        self.bool_key("resume")
    }

    pub fn spectrum_samples(&self) -> Result<usize> {
        self.usize_key("spectrum_samples")
    }

    pub fn fit_window(&self) -> Result<(f64, f64)> {
        Ok((self.f64_key("fit_t0")?, self.f64_key("fit_t1")?))
    }

    pub fn exp_fit_window(&self) -> Result<(f64, f64)> {
        Ok((self.f64_key("exp_fit_t0")?, self.f64_key("exp_fit_t1")?))
    }

    pub fn diff_exp_fit_window(&self) -> Result<(f64, f64)> {
        Ok((self.f64_key("diff_exp_fit_t0")?, self.f64_key("diff_exp_fit_t1")?))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let viscosity = match self.get("viscosity_model") {
            "constant" => ViscosityLaw::Constant { mu: self.f64_key("viscosity_coeff")? },
            "inverse-volume" => ViscosityLaw::InverseVolume { mu: self.f64_key("viscosity_coeff")? },
            other => {
                return Err(Error::Usage(format!(
                    "viscosity_model must be 'constant' or 'inverse-volume', got '{other}'"
                )))
            }
        };
        let params = ModelParams {
            interface_thickness: self.f64_key("epsilon")?,
            reference_volume: self.f64_key("vbar")?,
            reference_velocity: self.f64_key("ubar")?,
            pressure: PressureLaw::new(self.f64_key("pressure_amp")?, self.f64_key("pressure_exp")?)?,
            viscosity,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn grid(&self) -> Result<Arc<Grid1D>> {
        Grid1D::new(self.f64_key("box_length")?, self.usize_key("points")?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let integrator = match self.get("integrator") {
            "semi-implicit-spectral" => Integrator::SemiImplicitSpectral,
            "explicit-rk4" => Integrator::ExplicitRk4,
            other => {
                return Err(Error::Usage(format!(
                    "integrator must be 'semi-implicit-spectral' or 'explicit-rk4', got '{other}'"
                )))
            }
        };
        let cfg = SolverConfig {
            dt: self.f64_key("dt")?,
            t_final: self.f64_key("t_final")?,
            start_time: 0.0,
            integrator,
            snapshot_stride: self.usize_key("snapshot_stride")?,
            state_stride: self.usize_key("state_stride")?,
            sobolev_order: self.usize_key("s")?,
            beta1: self.f64_key("beta1")?,
            dealias: self.bool_key("dealias")?,
            floor_correct: self.bool_key("floor_correct")?,
            guard: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        Ok(InitialData {
            delta0: self.f64_key("delta0")?,
            sigma: self.f64_key("sigma")?,
            sigma_phase: self.f64_key("sigma_phase")?,
            amp_n: self.f64_key("amp_n")?,
            amp_w: self.f64_key("amp_w")?,
            amp_phi: self.f64_key("amp_phi")?,
            center: self.f64_key("center")?,
            noise_amp: self.f64_key("noise_amp")?,
            seed: self.u64_key("seed")?,
        })
    }

    pub fn initial_state(&self) -> Result<StateTriple> {
        Ok(self.initial_data()?.build(&self.grid()?))
    }

    pub fn cutoffs(&self) -> Result<CutoffPair> {
        let params = self.model_params()?;
        let scale = params.sound_speed()? / params.reference_viscosity()?;
        let inner = match self.get("cutoff_inner") {
            "auto" => 0.5 * scale,
            v => v
                .parse()
                .map_err(|_| Error::Usage(format!("cutoff_inner: expected a number or 'auto', got '{v}'")))?,
        };
        let outer = match self.get("cutoff_outer") {
            "auto" => 4.0 * scale,
            v => v
                .parse()
                .map_err(|_| Error::Usage(format!("cutoff_outer: expected a number or 'auto', got '{v}'")))?,
        };
        CutoffPair::new(inner, outer, CutoffProfile::Smooth)
    }

    pub fn envelope_c(&self) -> Result<f64> {
        match self.get("envelope_c") {
            "auto" => Ok(8.0 * self.model_params()?.reference_viscosity()?),
            v => v
                .parse()
                .map_err(|_| Error::Usage(format!("envelope_c: expected a number or 'auto', got '{v}'"))),
        }
    }

    pub fn delta0(&self) -> Result<f64> {
        self.f64_key("delta0")
    }

    pub fn validate(&self) -> Result<()> {
        if !CATALOG.contains(&self.experiment()) {
            return Err(Error::Usage(format!(
                "unknown experiment '{}'; catalog: {}",
                self.experiment(),
                CATALOG.join(", ")
            )));
        }
        self.model_params()?;
        self.grid()?;
        self.solver_config()?;
        self.initial_data()?;
        self.cutoffs()?;
        self.envelope_c()?;
        let (a, b) = self.fit_window()?;
        if !(b > a) {
            return Err(Error::Usage("fit window must be nonempty".into()));
        }
        if !(self.f64_key("delta0")? > 0.0) {
            return Err(Error::Usage("delta0 must be positive".into()));
        }
        if !(self.alpha()? >= 0.0) {
            return Err(Error::Usage("alpha must be nonnegative".into()));
        }
        self.seed()?;
        self.spectrum_samples()?;
        self.workers()?;
        self.resume()?;
        Ok(())
    }
}
