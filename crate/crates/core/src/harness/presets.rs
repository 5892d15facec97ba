//! Named configurations, one per headline experiment.

use crate::error::{Error, Result};

use super::config::{
    EccChoice, ExperimentConfig, ExperimentKind, KeylessSettings, NbkgSettings, ParameterGrid,
    DEFAULT_MASTER_SEED,
};

pub const PRESET_NAMES: &[&str] = &["table2", "dosa-bullets", "nbkg-sweep"];

fn grid() -> ParameterGrid {
    ParameterGrid {
        lambda: vec![128],
        error_floor: vec![],
        block_length: vec![],
        q: vec![100],
        snr_db: vec![],
        an_power_fraction: vec![0.5],
        eve_snr_db: vec![],
        trial_count: vec![1],
    }
}

/// Keyless shaping at lambda = 128 across four error floors. Ten sessions
/// of 100 blocks give at least 1.28e5 measured bits per row.
pub fn table2() -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentKind::Keyless,
        master_seed: DEFAULT_MASTER_SEED,
        output_path: None,
        grid: ParameterGrid {
            error_floor: vec![0.2, 0.3, 0.4, 0.5],
            trial_count: vec![10],
            ..grid()
        },
        keyless: KeylessSettings {
            legit_crossover: 1e-3,
            ecc: EccChoice::Repetition3,
            ..Default::default()
        },
        nbkg: NbkgSettings::default(),
    }
}

/// Closed-form rows for the three synchronous-degree operating points.
pub fn dosa_bullets() -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentKind::MetricsTable,
        master_seed: DEFAULT_MASTER_SEED,
        output_path: None,
        grid: ParameterGrid {
            error_floor: vec![0.2, 0.3, 0.5],
            ..grid()
        },
        keyless: KeylessSettings::default(),
        nbkg: NbkgSettings::default(),
    }
}

/// NBKG across legitimate SNR with Rayleigh eavesdropper gains.
pub fn nbkg_sweep() -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentKind::Nbkg,
        master_seed: DEFAULT_MASTER_SEED,
        output_path: None,
        grid: ParameterGrid {
            snr_db: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            trial_count: vec![200],
            ..grid()
        },
        keyless: KeylessSettings::default(),
        nbkg: NbkgSettings {
            dosa_samples: 100_000,
            ..Default::default()
        },
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "table2" => Ok(table2()),
        "dosa-bullets" => Ok(dosa_bullets()),
        "nbkg-sweep" => Ok(nbkg_sweep()),
        other => Err(Error::Config {
            field: "preset".into(),
            message: format!(
                "unknown preset {other:?}; expected one of {}",
                PRESET_NAMES.join(", ")
            ),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("table3").unwrap_err().is_config_error());
    }

    #[test]
    fn table2_meets_bit_budget() {
        let cfg = table2();
        for p in cfg.grid_points() {
            if let super::super::config::GridPoint::Keyless {
                block_length,
                q,
                trials,
                ..
            } = p
            {
                assert!(block_length * q * trials >= 100_000);
            }
        }
    }
}
