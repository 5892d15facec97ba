//! Secrecy metrics.
//!
//! Closed-form quantities relating key material, channel rates and the
//! eavesdropper's error floor, plus two estimators that do not rely on any
//! closed form: an exhaustive enumeration of a small cipher's joint
//! (message, observation) distribution, and a Monte Carlo mutual-information
//! estimate for the full-duplex constellation-rotation exchange.
//!
//! All logarithms are base 2.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::parallel::Exec;
use crate::rng::SeedStream;

/// Entropy of the key material versus entropy of the protected message.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyBudget {
    key_entropy_bits: f64,
    message_entropy_bits: f64,
}

impl EntropyBudget {
    pub fn new(key_entropy_bits: f64, message_entropy_bits: f64) -> Result<Self> {
        if !(key_entropy_bits >= 0.0 && key_entropy_bits.is_finite()) {
            return Err(Error::invalid(
                "key_entropy_bits",
                "must be finite and >= 0",
            ));
        }
        if !(message_entropy_bits > 0.0 && message_entropy_bits.is_finite()) {
            return Err(Error::invalid(
                "message_entropy_bits",
                "must be finite and > 0",
            ));
        }
        Ok(Self {
            key_entropy_bits,
            message_entropy_bits,
        })
    }

    pub fn key_entropy_bits(&self) -> f64 {
        self.key_entropy_bits
    }

    pub fn message_entropy_bits(&self) -> f64 {
        self.message_entropy_bits
    }
}

/// Secret-key capacity versus channel capacity, both in bits per unit time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityPair {
    secret_key_capacity: f64,
    channel_capacity: f64,
}

impl CapacityPair {
    pub fn new(secret_key_capacity: f64, channel_capacity: f64) -> Result<Self> {
        if !(secret_key_capacity >= 0.0 && secret_key_capacity.is_finite()) {
            return Err(Error::invalid(
                "secret_key_capacity",
                "must be finite and >= 0",
            ));
        }
        if !(channel_capacity > 0.0 && channel_capacity.is_finite()) {
            return Err(Error::invalid("channel_capacity", "must be finite and > 0"));
        }
        Ok(Self {
            secret_key_capacity,
            channel_capacity,
        })
    }

    pub fn secret_key_capacity(&self) -> f64 {
        self.secret_key_capacity
    }

    pub fn channel_capacity(&self) -> f64 {
        self.channel_capacity
    }
}

/// Target security level, eavesdropper error floor and block length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityParams {
    lambda: u32,
    error_floor: f64,
    block_length: usize,
}

impl SecurityParams {
    /// Validates that `block_length` reaches the minimum needed for `lambda`
    /// bits of security at the given error floor.
    pub fn new(lambda: u32, error_floor: f64, block_length: usize) -> Result<Self> {
        if lambda == 0 {
            return Err(Error::invalid("lambda", "must be >= 1"));
        }
        check_error_floor(error_floor)?;
        if block_length == 0 {
            return Err(Error::invalid("block_length", "must be >= 1"));
        }
        let min = min_block_length(lambda, error_floor);
        if block_length < min {
            return Err(Error::invalid(
                "block_length",
                format!(
                    "{block_length} is below the required minimum {min} for lambda={lambda}, error_floor={error_floor}"
                ),
            ));
        }
        Ok(Self {
            lambda,
            error_floor,
            block_length,
        })
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn error_floor(&self) -> f64 {
        self.error_floor
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }
}

fn check_error_floor(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "error_floor",
            format!("{p} is outside the range (0, 1]"),
        ))
    }
}

/// `ceil(lambda / log2(1/(1-p)))`; 0 when `p == 1`.
pub(crate) fn min_block_length(lambda: u32, error_floor: f64) -> usize {
    let per_bit = -(-error_floor).ln_1p() / std::f64::consts::LN_2;
    if per_bit.is_infinite() {
        return 0;
    }
    let exact = lambda as f64 / per_bit;
    // absorb rounding noise when the ratio is an integer, e.g. p = 0.75
    let nearest = exact.round();
    if (exact - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        exact.ceil() as usize
    }
}

/// Ratio of key entropy to message entropy. Values above 1 are returned as-is.
pub fn degree_of_approaching(budget: &EntropyBudget) -> f64 {
    budget.key_entropy_bits / budget.message_entropy_bits
}

/// Ratio of secret-key capacity to channel capacity. Not clamped.
pub fn degree_of_synchronous_approaching(pair: &CapacityPair) -> f64 {
    pair.secret_key_capacity / pair.channel_capacity
}

/// High-SNR closed-form approximation of the NBKG synchronous degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighSnrDosa {
    pub value: f64,
    /// Set when the approximation has gone negative, i.e. the SNR is too low
    /// for it to be meaningful.
    pub low_snr: bool,
}

const HIGH_SNR_CONSTANT: f64 = 2.83;

/// `1 - 2.83 / log2(snr)`.
pub fn dosa_highsnr_approx(snr_linear: f64) -> Result<HighSnrDosa> {
    if !(snr_linear > 1.0) {
        return Err(Error::invalid(
            "snr_linear",
            format!("{snr_linear} must exceed 1"),
        ));
    }
    let value = 1.0 - HIGH_SNR_CONSTANT / snr_linear.log2();
    Ok(HighSnrDosa {
        value,
        low_snr: value < 0.0,
    })
}

/// Upper bound on the eavesdropper's per-bit min-entropy, `log2(1/(1-p))`.
/// Returns `f64::INFINITY` at `p == 1`.
pub fn min_entropy_bound(error_floor: f64) -> Result<f64> {
    check_error_floor(error_floor)?;
    Ok(-(-error_floor).ln_1p() / std::f64::consts::LN_2)
}

/// Smallest eavesdropper error floor supporting the target synchronous
/// degree: `1 - 2^(-d)`.
pub fn required_error_floor(target_dosa: f64) -> Result<f64> {
    if !(target_dosa >= 0.0) {
        return Err(Error::invalid("target_dosa", "must be >= 0"));
    }
    Ok(-(-target_dosa * std::f64::consts::LN_2).exp_m1())
}

/// Joint distribution of a message and the eavesdropper's observation.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    message_width: u32,
    observation_width: u32,
    table: BTreeMap<(u32, u32), f64>,
}

fn entropy<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

impl JointDistribution {
    pub fn new(
        message_width: u32,
        observation_width: u32,
        table: BTreeMap<(u32, u32), f64>,
    ) -> Result<Self> {
        if table.values().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("probabilities", "must be nonnegative"));
        }
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "probabilities",
                format!("sum to {total}, not 1"),
            ));
        }
        Ok(Self {
            message_width,
            observation_width,
            table,
        })
    }

    pub fn message_width(&self) -> u32 {
        self.message_width
    }

    pub fn observation_width(&self) -> u32 {
        self.observation_width
    }

    pub fn probability(&self, message: u32, observation: u32) -> f64 {
        self.table
            .get(&(message, observation))
            .copied()
            .unwrap_or(0.0)
    }

    fn marginal(&self, pick: impl Fn(&(u32, u32)) -> u32) -> BTreeMap<u32, f64> {
        let mut out = BTreeMap::new();
        for (k, &p) in &self.table {
            *out.entry(pick(k)).or_insert(0.0) += p;
        }
        out
    }

    /// H(M)
    pub fn message_entropy(&self) -> f64 {
        entropy(self.marginal(|&(m, _)| m).into_values())
    }

    /// H(X)
    pub fn observation_entropy(&self) -> f64 {
        entropy(self.marginal(|&(_, x)| x).into_values())
    }

    /// H(M, X)
    pub fn joint_entropy(&self) -> f64 {
        entropy(self.table.values().copied())
    }

    /// H(M | X) = H(M, X) - H(X)
    pub fn conditional_message_entropy(&self) -> f64 {
        self.joint_entropy() - self.observation_entropy()
    }
}

/// Result of [`exhaustive_secrecy_audit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecrecyAudit {
    pub h_m: f64,
    pub h_m_given_x: f64,
}

impl SecrecyAudit {
    /// Bits of message information the observation reveals.
    pub fn leakage(&self) -> f64 {
        self.h_m - self.h_m_given_x
    }
}

/// Largest message or key width accepted by the audit.
pub const AUDIT_MAX_WIDTH: u32 = 12;

/// Builds the joint (message, ciphertext) distribution of `cipher` under the
/// given message prior and a uniform key independent of the message.
pub fn cipher_joint_distribution<F>(
    cipher: F,
    message_width: u32,
    key_width: u32,
    message_prior: &[f64],
) -> Result<JointDistribution>
where
    F: Fn(u32, u32) -> u32,
{
    if message_width > AUDIT_MAX_WIDTH || key_width > AUDIT_MAX_WIDTH {
        return Err(Error::EnumerationCap(format!(
            "message_width={message_width}, key_width={key_width}; each must be <= {AUDIT_MAX_WIDTH}"
        )));
    }
    let messages = 1usize << message_width;
    if message_prior.len() != messages {
        return Err(Error::LengthMismatch {
            expected: messages,
            actual: message_prior.len(),
        });
    }
    let keys = 1u32 << key_width;
    let key_prob = 1.0 / keys as f64;
    let mut table = BTreeMap::new();
    let mut max_obs = 0u32;
    for (m, &pm) in message_prior.iter().enumerate() {
        if pm == 0.0 {
            continue;
        }
        for k in 0..keys {
            let x = cipher(m as u32, k);
            max_obs = max_obs.max(x);
            *table.entry((m as u32, x)).or_insert(0.0) += pm * key_prob;
        }
    }
    let observation_width = u32::BITS - max_obs.leading_zeros();
    JointDistribution::new(message_width, observation_width, table)
}

/// Enumerates every (message, key) pair and returns `H(M)` and `H(M|X)`.
pub fn exhaustive_secrecy_audit<F>(
    cipher: F,
    message_width: u32,
    key_width: u32,
    message_prior: &[f64],
) -> Result<SecrecyAudit>
where
    F: Fn(u32, u32) -> u32,
{
    let joint = cipher_joint_distribution(cipher, message_width, key_width, message_prior)?;
    Ok(SecrecyAudit {
        h_m: joint.message_entropy(),
        h_m_given_x: joint.conditional_message_entropy(),
    })
}

/// Uniform prior over `width`-bit messages.
pub fn uniform_prior(width: u32) -> Vec<f64> {
    let n = 1usize << width;
    vec![1.0 / n as f64; n]
}

/// Monte Carlo estimate of the NBKG synchronous degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DosaEstimate {
    /// Estimated ratio.
    pub value: f64,
    /// Standard error of `value` across independent sample batches.
    pub std_error: f64,
    /// `I(X_K1; Y_K2) + I(X_K2; Y_K1)`, bits per channel use.
    pub legit_bits: f64,
    /// `I((X_K1, X_K2); Z)`, bits per channel use.
    pub eve_bits: f64,
}

pub const DOSA_MIN_SAMPLES: usize = 10_000;
const DOSA_BATCH: usize = 4096;

#[derive(Default, Clone, Copy)]
struct InfoSums {
    legit: f64,
    eve: f64,
    n: usize,
}

// log2 density of N(0, var) at x
fn log2_normal(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()) / std::f64::consts::LN_2
}

// log2 density of a zero-mean 2D Gaussian with covariance [[a, b], [b, c]]
fn log2_normal2(v: [f64; 2], cov: [f64; 3]) -> f64 {
    let [a, b, c] = cov;
    let det = a * c - b * b;
    let quad = (c * v[0] * v[0] - 2.0 * b * v[0] * v[1] + a * v[1] * v[1]) / det;
    (-0.5 * quad - (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln()) / std::f64::consts::LN_2
}

fn outer_add(cov: &mut [f64; 3], v: [f64; 2], w: f64) {
    cov[0] += w * v[0] * v[0];
    cov[1] += w * v[0] * v[1];
    cov[2] += w * v[1] * v[1];
}

/// Monte Carlo estimate of the synchronous degree of the constellation-rotation
/// key exchange, with the default artificial-noise power split.
pub fn estimate_dosa_montecarlo(
    snr_linear: f64,
    sample_count: usize,
    rng_seed: u64,
) -> Result<DosaEstimate> {
    estimate_dosa_montecarlo_with(
        snr_linear,
        sample_count,
        &SeedStream::new(rng_seed, "dosa-mc"),
        crate::nbkg::RotationConfig::default().an_power_fraction(),
        Exec::default(),
    )
}

/// Signal model: both nodes send a real Gaussian key component of power
/// `1 - a` plus an imaginary artificial-noise component of power `a`. Every
/// node sees complex noise of variance `1/snr`. Self-interference is
/// cancelled perfectly and legitimate gains are 1, so each legitimate
/// receiver observes the peer's real component plus real noise. Eve sees both
/// transmissions through independent Rayleigh gains, which she knows.
///
/// The ratio returned is
/// `(I(X_K1;Y_K2) + I(X_K2;Y_K1) - I((X_K1,X_K2);Z)) / (I(X_K1;Y_K2) + I(X_K2;Y_K1))`,
/// with every term estimated as a sample mean of log-likelihood ratios.
pub fn estimate_dosa_montecarlo_with(
    snr_linear: f64,
    sample_count: usize,
    seed: &SeedStream,
    an_power_fraction: f64,
    exec: Exec,
) -> Result<DosaEstimate> {
    if !(snr_linear > 0.0 && snr_linear.is_finite()) {
        return Err(Error::invalid("snr_linear", "must be positive and finite"));
    }
    if sample_count < DOSA_MIN_SAMPLES {
        return Err(Error::invalid(
            "sample_count",
            format!("{sample_count} is below the minimum {DOSA_MIN_SAMPLES}"),
        ));
    }
    if !(0.0..1.0).contains(&an_power_fraction) {
        return Err(Error::invalid("an_power_fraction", "must lie in [0, 1)"));
    }
    let sig_var = 1.0 - an_power_fraction;
    let an_var = an_power_fraction;
    let noise_dim = 0.5 / snr_linear;
    let batches = sample_count.div_ceil(DOSA_BATCH);

    let sums = exec.map(batches, |b| {
        let n = DOSA_BATCH.min(sample_count - b * DOSA_BATCH);
        let mut rng = seed.rng_at(b as u64);
        let mut g = || -> f64 { rng.sample(StandardNormal) };
        let mut acc = InfoSums {
            n,
            ..Default::default()
        };
        for _ in 0..n {
            // legitimate links, one per direction
            for _ in 0..2 {
                let x = g() * sig_var.sqrt();
                let y = x + g() * noise_dim.sqrt();
                acc.legit += log2_normal(y - x, noise_dim) - log2_normal(y, sig_var + noise_dim);
            }
            // eavesdropper
            let h = |g: &mut dyn FnMut() -> f64| [g() * 0.5f64.sqrt(), g() * 0.5f64.sqrt()];
            let ha = h(&mut g);
            let hb = h(&mut g);
            let (xa, xb) = (g() * sig_var.sqrt(), g() * sig_var.sqrt());
            let (ga, gb) = (g() * an_var.sqrt(), g() * an_var.sqrt());
            // (x + j g) · h, with h = (re, im)
            let rot = |h: [f64; 2], x: f64, an: f64| [h[0] * x - h[1] * an, h[1] * x + h[0] * an];
            let sa = rot(ha, xa, ga);
            let sb = rot(hb, xb, gb);
            let z = [
                sa[0] + sb[0] + g() * noise_dim.sqrt(),
                sa[1] + sb[1] + g() * noise_dim.sqrt(),
            ];
            let mut cond = [noise_dim, 0.0, noise_dim];
            outer_add(&mut cond, [-ha[1], ha[0]], an_var);
            outer_add(&mut cond, [-hb[1], hb[0]], an_var);
            let mut marg = cond;
            outer_add(&mut marg, ha, sig_var);
            outer_add(&mut marg, hb, sig_var);
            let mean = [ha[0] * xa + hb[0] * xb, ha[1] * xa + hb[1] * xb];
            acc.eve += log2_normal2([z[0] - mean[0], z[1] - mean[1]], cond) - log2_normal2(z, marg);
        }
        acc
    });

    let total = sums.iter().fold(InfoSums::default(), |a, s| InfoSums {
        legit: a.legit + s.legit,
        eve: a.eve + s.eve,
        n: a.n + s.n,
    });
    let legit_bits = total.legit / total.n as f64;
    let eve_bits = total.eve / total.n as f64;
    let value = 1.0 - eve_bits / legit_bits;

    let ratios: Vec<f64> = sums.iter().map(|s| 1.0 - s.eve / s.legit).collect();
    let std_error = if ratios.len() > 1 {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var =
            ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (ratios.len() - 1) as f64;
        (var / ratios.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(DosaEstimate {
        value,
        std_error,
        legit_bits,
        eve_bits,
    })
}
