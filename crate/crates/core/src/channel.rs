//! Seedable channel primitives: complex AWGN, binary symmetric channels,
//! Rayleigh gains and the full-duplex superposition seen by an eavesdropper.
//!
//! SNR convention: energy per complex symbol over total complex noise
//! variance. A noise variance `v` is split evenly between the real and
//! imaginary parts. `snr_db = f64::INFINITY` turns noise off.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bits::{check_len, BitBlock};
use crate::error::{Error, Result};
use crate::rng::{SeedStream, StreamRng};

/// One complex baseband sample.
pub type ComplexSample = Complex64;

/// Complex noise variance for a given SNR in dB; 0 for `+inf`.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Circularly symmetric complex Gaussian with total variance `variance`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> ComplexSample {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BscConfig {
    crossover: f64,
}

impl BscConfig {
    pub fn new(crossover: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&crossover) {
            return Err(Error::invalid(
                "crossover",
                format!("{crossover} is outside [0, 0.5]"),
            ));
        }
        Ok(Self { crossover })
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }
}

/// Parameters of the eavesdropper's view of a full-duplex exchange.
/// Legitimate links have unit gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WiretapLinkConfig {
    pub snr_db: f64,
    pub eve_gain_a: ComplexSample,
    pub eve_gain_b: ComplexSample,
    eve_noise_variance: f64,
}

impl WiretapLinkConfig {
    /// `eve_noise_variance` may be zero only to disable noise in tests of
    /// algebraic identities.
    pub fn new(
        snr_db: f64,
        eve_gain_a: ComplexSample,
        eve_gain_b: ComplexSample,
        eve_noise_variance: f64,
    ) -> Result<Self> {
        if !(eve_noise_variance >= 0.0 && eve_noise_variance.is_finite()) {
            return Err(Error::invalid(
                "eve_noise_variance",
                "must be finite and >= 0",
            ));
        }
        if !(eve_gain_a.is_finite() && eve_gain_b.is_finite()) {
            return Err(Error::invalid("eve_gain", "must be finite"));
        }
        Ok(Self {
            snr_db,
            eve_gain_a,
            eve_gain_b,
            eve_noise_variance,
        })
    }

    /// Eve shares the legitimate noise level.
    pub fn matched(
        snr_db: f64,
        eve_gain_a: ComplexSample,
        eve_gain_b: ComplexSample,
    ) -> Result<Self> {
        Self::new(snr_db, eve_gain_a, eve_gain_b, noise_variance(snr_db))
    }

    pub fn eve_noise_variance(&self) -> f64 {
        self.eve_noise_variance
    }

    pub fn legit_noise_variance(&self) -> f64 {
        noise_variance(self.snr_db)
    }
}

/// Adds complex Gaussian noise of variance `10^(-snr_db/10)`.
pub fn awgn(samples: &[ComplexSample], snr_db: f64, seed: &SeedStream) -> Vec<ComplexSample> {
    awgn_with(samples, noise_variance(snr_db), &mut seed.rng())
}

pub(crate) fn awgn_with(
    samples: &[ComplexSample],
    variance: f64,
    rng: &mut StreamRng,
) -> Vec<ComplexSample> {
    if variance == 0.0 {
        return samples.to_vec();
    }
    samples
        .iter()
        .map(|&s| s + complex_gaussian(rng, variance))
        .collect()
}

/// Flips each bit independently with probability `config.crossover()`.
pub fn bsc(bits: &BitBlock, config: BscConfig, seed: &SeedStream) -> BitBlock {
    bsc_with(bits, config, &mut seed.rng())
}

pub(crate) fn bsc_with<R: Rng + ?Sized>(
    bits: &BitBlock,
    config: BscConfig,
    rng: &mut R,
) -> BitBlock {
    let p = config.crossover;
    let mut out = bits.clone();
    if p == 0.0 {
        return out;
    }
    if p == 0.5 {
        let mask = BitBlock::random(bits.len(), rng);
        out.xor_assign_unchecked(&mask);
        return out;
    }
    // Geometric skipping between flips keeps small crossovers cheap.
    let log_q = (-p).ln_1p();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.random();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !(gap < (bits.len() - i) as f64) {
            break;
        }
        i += gap as usize;
        out.flip(i);
        i += 1;
    }
    out
}

/// `gain_a·tx_a + gain_b·tx_b + noise`.
pub fn eve_superposition(
    tx_a: &[ComplexSample],
    tx_b: &[ComplexSample],
    cfg: &WiretapLinkConfig,
    seed: &SeedStream,
) -> Result<Vec<ComplexSample>> {
    eve_superposition_with(tx_a, tx_b, cfg, &mut seed.rng())
}

pub(crate) fn eve_superposition_with(
    tx_a: &[ComplexSample],
    tx_b: &[ComplexSample],
    cfg: &WiretapLinkConfig,
    rng: &mut StreamRng,
) -> Result<Vec<ComplexSample>> {
    check_len(tx_a.len(), tx_b.len())?;
    let mixed: Vec<_> = tx_a
        .iter()
        .zip(tx_b)
        .map(|(&a, &b)| cfg.eve_gain_a * a + cfg.eve_gain_b * b)
        .collect();
    Ok(awgn_with(&mixed, cfg.eve_noise_variance, rng))
}

/// Unit-power Rayleigh fading coefficient, `CN(0, 1)`.
pub fn sample_rayleigh_gain(seed: &SeedStream) -> ComplexSample {
    complex_gaussian(&mut seed.rng(), 1.0)
}

/// Hamming distance over length.
pub fn bit_error_rate(a: &BitBlock, b: &BitBlock) -> Result<f64> {
    let d = a.hamming_distance(b)?;
    Ok(if a.is_empty() {
        0.0
    } else {
        d as f64 / a.len() as f64
    })
}
