//! Experiment configuration: a single JSON document per run.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::BscConfig;
use crate::error::{Error, Result};
use crate::metrics::SecurityParams;
use crate::nbkg::{default_theta, EveGains, NbkgConfig, RotationConfig};
use crate::shaping::{required_block_length, EccScheme, ShaperConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Nbkg,
    Keyless,
    MetricsTable,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Nbkg => "nbkg",
            ExperimentKind::Keyless => "keyless",
            ExperimentKind::MetricsTable => "metrics-table",
        }
    }
}

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub grid: ParameterGrid,
    #[serde(default)]
    pub keyless: KeylessSettings,
    #[serde(default)]
    pub nbkg: NbkgSettings,
}

/// Swept parameters. Each list contributes one axis of the Cartesian
/// product; axes irrelevant to the experiment kind are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterGrid {
    #[serde(default = "default_lambda")]
    pub lambda: Vec<u32>,
    #[serde(default)]
    pub error_floor: Vec<f64>,
    /// Explicit block lengths; empty means the minimum for each (lambda, error_floor).
    #[serde(default)]
    pub block_length: Vec<usize>,
    #[serde(default = "default_q")]
    pub q: Vec<usize>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_an")]
    pub an_power_fraction: Vec<f64>,
    /// Eavesdropper SNR; empty means she shares the legitimate noise level.
    #[serde(default)]
    pub eve_snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trial_count: Vec<usize>,
}

fn default_lambda() -> Vec<u32> {
    vec![128]
}
fn default_q() -> Vec<usize> {
    vec![100]
}
fn default_an() -> Vec<f64> {
    vec![crate::nbkg::DEFAULT_AN_POWER_FRACTION]
}
fn default_trials() -> Vec<usize> {
    vec![1]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EccChoice {
    Passthrough,
    #[default]
    Repetition3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeylessSettings {
    pub legit_crossover: f64,
    pub ecc: EccChoice,
    /// Defaults to `2·lambda`.
    pub state_width: Option<usize>,
    pub t0_through_eve: bool,
    pub session_constant: Option<u64>,
}

impl Default for KeylessSettings {
    fn default() -> Self {
        Self {
            legit_crossover: 1e-3,
            ecc: EccChoice::Repetition3,
            state_width: None,
            t0_through_eve: false,
            session_constant: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveGainSetting {
    Rayleigh,
    /// Fixed gains as `[re, im]` pairs.
    Fixed {
        a: [f64; 2],
        b: [f64; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NbkgSettings {
    pub payload_bits: usize,
    pub key_bits: usize,
    /// Rotation angle in radians; defaults to `atan(1/2)`.
    pub theta: Option<f64>,
    pub eve_gains: EveGainSetting,
    /// Samples for the Monte Carlo synchronous-degree estimate per grid
    /// point; 0 disables it.
    pub dosa_samples: usize,
}

impl Default for NbkgSettings {
    fn default() -> Self {
        Self {
            payload_bits: 256,
            key_bits: 128,
            theta: None,
            eve_gains: EveGainSetting::Rayleigh,
            dosa_samples: 0,
        }
    }
}

/// One point of the expanded grid.
#[derive(Clone, Debug, PartialEq)]
pub enum GridPoint {
    Keyless {
        lambda: u32,
        error_floor: f64,
        block_length: usize,
        q: usize,
        trials: usize,
    },
    Nbkg {
        snr_db: f64,
        an_power_fraction: f64,
        eve_snr_db: Option<f64>,
        trials: usize,
    },
    Metrics {
        lambda: u32,
        error_floor: f64,
    },
}

fn require_nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::config(field, "must list at least one value"))
    } else {
        Ok(())
    }
}

fn map_field<T>(field: String, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::config(field, reason),
        other => other,
    })
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every cross-field constraint the downstream modules impose.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        require_nonempty("grid.trial_count", &g.trial_count)?;
        for (i, &t) in g.trial_count.iter().enumerate() {
            if t == 0 {
                return Err(Error::config(
                    format!("grid.trial_count[{i}]"),
                    "must be >= 1",
                ));
            }
        }
        match self.experiment {
            ExperimentKind::Keyless | ExperimentKind::MetricsTable => {
                require_nonempty("grid.lambda", &g.lambda)?;
                require_nonempty("grid.error_floor", &g.error_floor)?;
                for (i, &l) in g.lambda.iter().enumerate() {
                    if l == 0 {
                        return Err(Error::config(format!("grid.lambda[{i}]"), "must be >= 1"));
                    }
                }
                let upper = if self.experiment == ExperimentKind::Keyless {
                    0.5
                } else {
                    1.0
                };
                for (i, &p) in g.error_floor.iter().enumerate() {
                    let ok = p > 0.0 && (p < upper || (upper == 0.5 && p == 0.5));
                    if !ok {
                        let range = if upper == 0.5 { "(0, 0.5]" } else { "(0, 1)" };
                        return Err(Error::config(
                            format!("grid.error_floor[{i}]"),
                            format!("error_floor {p} is outside the range {range}"),
                        ));
                    }
                }
                if self.experiment == ExperimentKind::Keyless {
                    self.validate_keyless()?;
                }
            }
            ExperimentKind::Nbkg => self.validate_nbkg()?,
        }
        Ok(())
    }

    fn validate_keyless(&self) -> Result<()> {
        let g = &self.grid;
        require_nonempty("grid.q", &g.q)?;
        for (i, &q) in g.q.iter().enumerate() {
            if q == 0 {
                return Err(Error::config(format!("grid.q[{i}]"), "must be >= 1"));
            }
        }
        let s = &self.keyless;
        map_field(
            "keyless.legit_crossover".into(),
            BscConfig::new(s.legit_crossover),
        )?;
        for &lambda in &g.lambda {
            if let Some(w) = s.state_width {
                if w < lambda as usize {
                    return Err(Error::config(
                        "keyless.state_width",
                        format!("{w} is below lambda = {lambda}"),
                    ));
                }
            }
            for &p in &g.error_floor {
                let min = required_block_length(lambda, p)?;
                for (i, &l) in g.block_length.iter().enumerate() {
                    if l < min {
                        return Err(Error::config(
                            format!("grid.block_length[{i}]"),
                            format!(
                                "{l} is below the required minimum {min} for lambda={lambda}, error_floor={p}"
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_nbkg(&self) -> Result<()> {
        let g = &self.grid;
        require_nonempty("grid.snr_db", &g.snr_db)?;
        require_nonempty("grid.an_power_fraction", &g.an_power_fraction)?;
        for (i, s) in g.snr_db.iter().chain(&g.eve_snr_db).enumerate() {
            if s.is_nan() {
                return Err(Error::config(
                    format!("grid.snr_db[{i}]"),
                    "must be a number",
                ));
            }
        }
        for (i, &a) in g.an_power_fraction.iter().enumerate() {
            map_field(
                format!("grid.an_power_fraction[{i}]"),
                RotationConfig::new(self.nbkg.theta.unwrap_or_else(default_theta), a),
            )?;
        }
        let n = &self.nbkg;
        let probe = NbkgConfig {
            payload_bits: n.payload_bits,
            key_bits: n.key_bits,
            ..Default::default()
        };
        probe.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(format!("nbkg.{name}"), reason)
            }
            other => other,
        })?;
        if n.dosa_samples != 0 && n.dosa_samples < crate::metrics::DOSA_MIN_SAMPLES {
            return Err(Error::config(
                "nbkg.dosa_samples",
                format!("must be 0 or >= {}", crate::metrics::DOSA_MIN_SAMPLES),
            ));
        }
        Ok(())
    }

    /// Expands the grid in a fixed nesting order.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let g = &self.grid;
        let mut out = Vec::new();
        match self.experiment {
            ExperimentKind::Keyless => {
                for &lambda in &g.lambda {
                    for &error_floor in &g.error_floor {
                        let lengths = if g.block_length.is_empty() {
                            vec![required_block_length(lambda, error_floor).unwrap_or(0)]
                        } else {
                            g.block_length.clone()
                        };
                        for &block_length in &lengths {
                            for &q in &g.q {
                                for &trials in &g.trial_count {
                                    out.push(GridPoint::Keyless {
                                        lambda,
                                        error_floor,
                                        block_length,
                                        q,
                                        trials,
                                    });
                                }
                            }
                        }
                    }
                }
            }
            ExperimentKind::Nbkg => {
                let eve: Vec<Option<f64>> = if g.eve_snr_db.is_empty() {
                    vec![None]
                } else {
                    g.eve_snr_db.iter().copied().map(Some).collect()
                };
                for &snr_db in &g.snr_db {
                    for &an_power_fraction in &g.an_power_fraction {
                        for &eve_snr_db in &eve {
                            for &trials in &g.trial_count {
                                out.push(GridPoint::Nbkg {
                                    snr_db,
                                    an_power_fraction,
                                    eve_snr_db,
                                    trials,
                                });
                            }
                        }
                    }
                }
            }
            ExperimentKind::MetricsTable => {
                for &lambda in &g.lambda {
                    for &error_floor in &g.error_floor {
                        out.push(GridPoint::Metrics {
                            lambda,
                            error_floor,
                        });
                    }
                }
            }
        }
        out
    }

    /// Shaper configuration for a keyless grid point.
    pub fn shaper_config(
        &self,
        lambda: u32,
        error_floor: f64,
        block_length: usize,
    ) -> Result<ShaperConfig> {
        let params = SecurityParams::new(lambda, error_floor, block_length)?;
        let mut cfg = ShaperConfig::new(params);
        let s = &self.keyless;
        if let Some(w) = s.state_width {
            cfg.state_width = w;
        }
        if let Some(c) = s.session_constant {
            cfg.session_constant = c;
        }
        cfg.t0_through_eve = s.t0_through_eve;
        cfg.ecc = match s.ecc {
            EccChoice::Passthrough => EccScheme::Passthrough,
            EccChoice::Repetition3 => EccScheme::Repetition3,
        };
        Ok(cfg)
    }

    /// Protocol configuration for an NBKG grid point.
    pub fn nbkg_config(
        &self,
        snr_db: f64,
        an_power_fraction: f64,
        eve_snr_db: Option<f64>,
    ) -> Result<NbkgConfig> {
        let n = &self.nbkg;
        let rotation =
            RotationConfig::new(n.theta.unwrap_or_else(default_theta), an_power_fraction)?;
        let eve_gains = match n.eve_gains {
            EveGainSetting::Rayleigh => EveGains::Rayleigh,
            EveGainSetting::Fixed { a, b } => {
                EveGains::Fixed(Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1]))
            }
        };
        Ok(NbkgConfig {
            payload_bits: n.payload_bits,
            key_bits: n.key_bits,
            snr_db,
            eve_snr_db,
            eve_gains,
            rotation,
        })
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form, with the
    /// output path left out.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_path = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}
