//! Grid expansion, per-trial seeding and aggregation.

use crate::channel::BscConfig;
use crate::error::Result;
use crate::metrics::{dosa_highsnr_approx, estimate_dosa_montecarlo_with, min_entropy_bound};
use crate::nbkg::{run_nbkg, NbkgReport};
use crate::parallel::Exec;
use crate::rng::SeedStream;
use crate::shaping::{
    required_block_length, simulate_keyless_with, KeylessCounts, KeylessReport, Shaper,
};

use super::config::{ExperimentConfig, GridPoint};
use super::report::{binomial_se, ResultRow};

/// Seed for trial `trial` of grid point `point`.
pub fn trial_seed(master_seed: u64, point: usize, trial: usize) -> SeedStream {
    SeedStream::new(master_seed, format!("point{point}/trial{trial}"))
}

/// Runs every grid point with the default (parallel) executor.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with(cfg, Exec::default())
}

/// Runs every grid point. Trials within a point are the unit of parallel
/// work; their results are reduced in trial order, so the executor never
/// changes the output. A point that fails yields a row with `error` set.
pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    Ok(run_points(cfg, &cfg.grid_points(), exec))
}

fn run_points(cfg: &ExperimentConfig, points: &[GridPoint], exec: Exec) -> Vec<ResultRow> {
    let hash = cfg.content_hash();
    let mut rows = Vec::with_capacity(points.len());
    for (g, point) in points.iter().enumerate() {
        log::info!("grid point {}/{}: {:?}", g + 1, points.len(), point);
        let mut row = describe(cfg, g, point, &hash);
        if let Err(e) = run_point(cfg, g, point, exec, &mut row) {
            log::warn!("grid point {g} failed: {e}");
            row.error = Some(e.to_string());
        }
        rows.push(row.rounded());
    }
    rows
}

fn describe(cfg: &ExperimentConfig, g: usize, point: &GridPoint, hash: &str) -> ResultRow {
    let mut row = ResultRow {
        experiment: cfg.experiment.as_str().to_string(),
        grid_index: g,
        master_seed: cfg.master_seed,
        config_hash: hash.to_string(),
        trial_count: 1,
        ..Default::default()
    };
    match *point {
        GridPoint::Keyless {
            lambda,
            error_floor,
            block_length,
            q,
            trials,
        } => {
            row.lambda = Some(lambda);
            row.error_floor = Some(error_floor);
            row.block_length = Some(block_length);
            row.q = Some(q);
            row.trial_count = trials;
        }
        GridPoint::Nbkg {
            snr_db,
            an_power_fraction,
            eve_snr_db,
            trials,
        } => {
            row.snr_db = Some(snr_db);
            row.an_power_fraction = Some(an_power_fraction);
            row.eve_snr_db = eve_snr_db;
            row.key_bits = Some(cfg.nbkg.key_bits);
            row.trial_count = trials;
        }
        GridPoint::Metrics {
            lambda,
            error_floor,
        } => {
            row.lambda = Some(lambda);
            row.error_floor = Some(error_floor);
        }
    }
    row
}

fn run_point(
    cfg: &ExperimentConfig,
    g: usize,
    point: &GridPoint,
    exec: Exec,
    row: &mut ResultRow,
) -> Result<()> {
    match *point {
        GridPoint::Keyless {
            lambda,
            error_floor,
            block_length,
            q,
            trials,
        } => keyless_point(
            cfg,
            g,
            (lambda, error_floor, block_length, q, trials),
            exec,
            row,
        ),
        GridPoint::Nbkg {
            snr_db,
            an_power_fraction,
            eve_snr_db,
            trials,
        } => nbkg_point(
            cfg,
            g,
            (snr_db, an_power_fraction, eve_snr_db, trials),
            exec,
            row,
        ),
        GridPoint::Metrics {
            lambda,
            error_floor,
        } => metrics_point(lambda, error_floor, row),
    }
}

fn dosa_columns(lambda: u32, block_length: usize, row: &mut ResultRow) {
    let dosa = lambda as f64 / block_length as f64;
    row.doa = Some(dosa);
    row.achieved_dosa = Some(dosa);
    row.achieved_dosa_2dp = Some(format!("{dosa:.2}"));
}

fn metrics_point(lambda: u32, error_floor: f64, row: &mut ResultRow) -> Result<()> {
    let h = min_entropy_bound(error_floor)?;
    row.min_entropy_bound = Some(h);
    let l = required_block_length(lambda, error_floor)?;
    row.block_length = Some(l);
    row.log2_eve_success = Some(-(l as f64) * h);
    dosa_columns(lambda, l, row);
    Ok(())
}

fn keyless_point(
    cfg: &ExperimentConfig,
    g: usize,
    (lambda, error_floor, block_length, q, trials): (u32, f64, usize, usize, usize),
    exec: Exec,
    row: &mut ResultRow,
) -> Result<()> {
    let shaper_cfg = cfg.shaper_config(lambda, error_floor, block_length)?;
    let shaper = Shaper::new(&shaper_cfg)?;
    let legit = BscConfig::new(cfg.keyless.legit_crossover)?;
    let eve = BscConfig::new(error_floor)?;

    let per_trial: Vec<Result<KeylessCounts>> = exec.map(trials, |t| {
        simulate_keyless_with(&shaper, legit, eve, q, &trial_seed(cfg.master_seed, g, t))
            .map(|r| r.counts)
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let counts = per_trial
        .iter()
        .fold(KeylessCounts::default(), |a, &c| a.merge(c));
    let report = KeylessReport::from_counts(&shaper_cfg, counts);
    let n = counts.info_bits;
    let stat =
        |f: fn(&KeylessCounts) -> u64| pooled_rate(per_trial.iter().map(|c| (f(c), c.info_bits)));

    row.coded_length = Some(report.coded_length);
    row.measured_bits = Some(n);
    (row.eve_ber_without_shaping, row.eve_ber_without_shaping_se) = stat(|c| c.eve_errors_unshaped);
    (row.eve_ber_with_shaping, row.eve_ber_with_shaping_se) = stat(|c| c.eve_errors_shaped);
    (row.legit_ber, row.legit_ber_se) = stat(|c| c.legit_errors_coded);
    (row.legit_message_ber, row.legit_message_ber_se) = stat(|c| c.legit_errors_message);
    (
        row.legit_ber_without_shaping,
        row.legit_ber_without_shaping_se,
    ) = stat(|c| c.legit_errors_unshaped);

    let h = min_entropy_bound(error_floor)?;
    row.min_entropy_bound = Some(h);
    row.log2_eve_success = Some(-(block_length as f64) * h);
    dosa_columns(lambda, block_length, row);
    row.coded_dosa = Some(report.coded_dosa);
    Ok(())
}

/// Pooled rate over `(errors, events)` pairs with its standard error. With
/// two or more trials the error is the spread of per-trial rates over
/// `sqrt(trials)`, which stays honest when events within a trial are
/// correlated; a single trial falls back to the binomial formula.
pub fn pooled_rate(trials: impl IntoIterator<Item = (u64, u64)>) -> (Option<f64>, Option<f64>) {
    let trials: Vec<(u64, u64)> = trials.into_iter().collect();
    let errors: u64 = trials.iter().map(|t| t.0).sum();
    let events: u64 = trials.iter().map(|t| t.1).sum();
    if events == 0 {
        return (None, None);
    }
    let rate = errors as f64 / events as f64;
    let k = trials.len();
    if k < 2 {
        return (Some(rate), Some(binomial_se(rate, events)));
    }
    let rates: Vec<f64> = trials
        .iter()
        .map(|&(e, n)| if n == 0 { rate } else { e as f64 / n as f64 })
        .collect();
    let mean = rates.iter().sum::<f64>() / k as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (Some(rate), Some((var / k as f64).sqrt()))
}

fn nbkg_point(
    cfg: &ExperimentConfig,
    g: usize,
    (snr_db, an_power_fraction, eve_snr_db, trials): (f64, f64, Option<f64>, usize),
    exec: Exec,
    row: &mut ResultRow,
) -> Result<()> {
    let ncfg = cfg.nbkg_config(snr_db, an_power_fraction, eve_snr_db)?;
    let per_trial: Vec<Result<NbkgReport>> = exec.map(trials, |t| {
        run_nbkg(&ncfg, &trial_seed(cfg.master_seed, g, t))
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let stat = |f: fn(&NbkgReport) -> (usize, usize)| {
        pooled_rate(per_trial.iter().map(|r| {
            let (e, n) = f(r);
            (e as u64, n as u64)
        }))
    };

    row.measured_bits = Some(per_trial.iter().map(|r| r.exchanged_bits as u64).sum());
    (row.legit_ber, row.legit_ber_se) = stat(|r| (r.legit_bit_errors, r.exchanged_bits));
    (row.eve_ber, row.eve_ber_se) = stat(|r| (r.eve_bit_errors, r.exchanged_bits));
    (row.key_mismatch_rate, row.key_mismatch_rate_se) = stat(|r| (r.key_mismatch as usize, 1));
    (
        row.exchange_block_error_rate,
        row.exchange_block_error_rate_se,
    ) = stat(|r| (r.exchange_block_error as usize, 1));
    (row.eve_key_distance, row.eve_key_distance_se) = stat(|r| {
        (
            (r.eve_key_distance * r.key_bits as f64).round() as usize,
            r.key_bits,
        )
    });
    let achieved_dosa = per_trial.first().map(|r| r.achieved_dosa).unwrap_or(0.0);
    row.achieved_dosa = Some(achieved_dosa);
    row.achieved_dosa_2dp = Some(format!("{achieved_dosa:.2}"));

    let snr_linear = 10f64.powf(snr_db / 10.0);
    if snr_linear > 1.0 {
        row.dosa_highsnr_approx = Some(dosa_highsnr_approx(snr_linear)?.value);
    }
    if cfg.nbkg.dosa_samples > 0 && snr_linear.is_finite() {
        let est = estimate_dosa_montecarlo_with(
            snr_linear,
            cfg.nbkg.dosa_samples,
            &SeedStream::new(cfg.master_seed, format!("point{g}/dosa")),
            an_power_fraction,
            exec,
        )?;
        row.dosa_estimate = Some(est.value);
        row.dosa_estimate_se = Some(est.std_error);
    }
    Ok(())
}
