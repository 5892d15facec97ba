//! Noise-based key generation.
//!
//! Each party sign-quantizes locally sampled Gaussian noise into key bits,
//! then both parties exchange those bits simultaneously over a full-duplex
//! link. A QPSK symbol is rotated and projected onto the real axis, which
//! carries it as a 4-level amplitude; the imaginary axis carries Gaussian
//! artificial noise. A legitimate receiver cancels its own signal and reads
//! only the real axis of its peer's, so the artificial noise never touches
//! its decisions. The eavesdropper receives the sum of both transmissions
//! through her own complex gains, where each artificial-noise component
//! leaks into the information-bearing directions.
//!
//! Both parties hash `alice_local ∥ bob_local` (as each of them sees it) down
//! to the final key with a Toeplitz universal hash.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bits::{check_len, BitBlock};
use crate::channel::{
    awgn_with, complex_gaussian, eve_superposition_with, sample_rayleigh_gain, ComplexSample,
    WiretapLinkConfig,
};
use crate::error::{Error, Result};
use crate::gf2::Toeplitz;
use crate::metrics::min_entropy_bound;
use crate::rng::{SeedStream, StreamRng};

/// One party's quantized local noise bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalKey {
    pub bits: BitBlock,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationConfig {
    theta: f64,
    an_power_fraction: f64,
}

/// Rotation mapping QPSK onto a uniform 4-level real alphabet.
pub fn default_theta() -> f64 {
    0.5f64.atan()
}

pub const DEFAULT_AN_POWER_FRACTION: f64 = 0.5;

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            theta: default_theta(),
            an_power_fraction: DEFAULT_AN_POWER_FRACTION,
        }
    }
}

const MIN_PROJECTION_GAP: f64 = 1e-9;

impl RotationConfig {
    pub fn new(theta: f64, an_power_fraction: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_4) {
            return Err(Error::invalid(
                "theta",
                format!("{theta} is outside (0, pi/4)"),
            ));
        }
        if !(0.0..1.0).contains(&an_power_fraction) {
            return Err(Error::invalid(
                "an_power_fraction",
                format!("{an_power_fraction} is outside [0, 1)"),
            ));
        }
        let cfg = Self {
            theta,
            an_power_fraction,
        };
        let p = cfg.projections();
        for i in 0..4 {
            for j in i + 1..4 {
                if (p[i] - p[j]).abs() < MIN_PROJECTION_GAP {
                    return Err(Error::invalid(
                        "theta",
                        "projected constellation points coincide",
                    ));
                }
            }
        }
        Ok(cfg)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn an_power_fraction(&self) -> f64 {
        self.an_power_fraction
    }

    /// Unscaled projections of the QPSK points for patterns 00, 01, 10, 11.
    pub fn projections(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (pattern, slot) in out.iter_mut().enumerate() {
            *slot = project(qpsk_point(pattern as u8), self.theta);
        }
        out
    }

    /// Amplitude factor applied to projections so the real component carries
    /// `1 - an_power_fraction` of unit transmit power.
    pub fn amplitude_scale(&self) -> f64 {
        let p = self.projections();
        let second_moment = p.iter().map(|x| x * x).sum::<f64>() / 4.0;
        (1.0 - self.an_power_fraction).sqrt() / second_moment.sqrt()
    }

    /// Transmitted real amplitudes for patterns 00, 01, 10, 11.
    pub fn alphabet(&self) -> [f64; 4] {
        let s = self.amplitude_scale();
        self.projections().map(|p| p * s)
    }
}

/// Gray-mapped unit-energy QPSK point for a 2-bit pattern `(b0 << 1) | b1`.
fn qpsk_point(pattern: u8) -> ComplexSample {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let re = if pattern & 0b10 == 0 { r } else { -r };
    let im = if pattern & 0b01 == 0 { r } else { -r };
    Complex64::new(re, im)
}

fn project(symbol: ComplexSample, theta: f64) -> f64 {
    (symbol * Complex64::from_polar(1.0, -theta)).re
}

/// Sign-quantized Gaussian noise: `sample >= 0` maps to 1.
pub fn collect_noise_bits(count: usize, seed: &SeedStream) -> Result<LocalKey> {
    if count == 0 {
        return Err(Error::invalid("count", "must be > 0"));
    }
    let mut rng = seed.rng();
    let bits = (0..count)
        .map(|_| rng.sample::<f64, _>(StandardNormal) >= 0.0)
        .collect();
    Ok(LocalKey { bits })
}

/// Gray-mapped unit-energy QPSK: `00 → (1+j)/√2`, `11 → (−1−j)/√2`.
pub fn modulate_qpsk(bits: &BitBlock) -> Result<Vec<ComplexSample>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::invalid("bits", format!("odd length {}", bits.len())));
    }
    Ok((0..bits.len() / 2)
        .map(|k| qpsk_point(pattern_at(bits, k)))
        .collect())
}

fn pattern_at(bits: &BitBlock, k: usize) -> u8 {
    ((bits.get(2 * k) as u8) << 1) | bits.get(2 * k + 1) as u8
}

/// `Re(symbol · e^{−jθ})`.
pub fn rotate_and_project(symbol: ComplexSample, cfg: &RotationConfig) -> f64 {
    project(symbol, cfg.theta)
}

/// Real part: scaled projection. Imaginary part: Gaussian artificial noise.
pub fn build_tx_signal(projection: f64, cfg: &RotationConfig, seed: &SeedStream) -> ComplexSample {
    build_tx_with(projection, cfg, &mut seed.rng())
}

fn build_tx_with<R: Rng + ?Sized>(
    projection: f64,
    cfg: &RotationConfig,
    rng: &mut R,
) -> ComplexSample {
    let an = if cfg.an_power_fraction > 0.0 {
        rng.sample::<f64, _>(StandardNormal) * cfg.an_power_fraction.sqrt()
    } else {
        0.0
    };
    Complex64::new(projection * cfg.amplitude_scale(), an)
}

/// Minimum-distance decision on the real component.
pub fn detect_projection(received: ComplexSample, cfg: &RotationConfig) -> [bool; 2] {
    let pattern = nearest(received.re, &cfg.alphabet());
    [pattern & 0b10 != 0, pattern & 0b01 != 0]
}

fn nearest(x: f64, alphabet: &[f64; 4]) -> u8 {
    let mut best = 0;
    for k in 1..4 {
        if (x - alphabet[k]).abs() < (x - alphabet[best]).abs() {
            best = k;
        }
    }
    best as u8
}

fn transmit(
    bits: &BitBlock,
    cfg: &RotationConfig,
    rng: &mut StreamRng,
) -> Result<Vec<ComplexSample>> {
    Ok(modulate_qpsk(bits)?
        .into_iter()
        .map(|s| build_tx_with(rotate_and_project(s, cfg), cfg, rng))
        .collect())
}

fn detect_all(rx: &[ComplexSample], cfg: &RotationConfig) -> BitBlock {
    let alphabet = cfg.alphabet();
    let mut out = BitBlock::zeros(2 * rx.len());
    for (k, y) in rx.iter().enumerate() {
        let p = nearest(y.re, &alphabet);
        out.set(2 * k, p & 0b10 != 0);
        out.set(2 * k + 1, p & 0b01 != 0);
    }
    out
}

/// Everything observed during one simultaneous exchange.
#[derive(Clone, Debug)]
pub struct ExchangeOutcome {
    /// Bob's bits as detected by Alice.
    pub alice_received: BitBlock,
    /// Alice's bits as detected by Bob.
    pub bob_received: BitBlock,
    pub eve_observation: Vec<ComplexSample>,
}

/// Both parties transmit at once; each detects the other after perfect
/// self-interference cancellation, and Eve observes the superposition.
pub fn exchange_round(
    alice: &LocalKey,
    bob: &LocalKey,
    link: &WiretapLinkConfig,
    cfg: &RotationConfig,
    seed: &SeedStream,
) -> Result<ExchangeOutcome> {
    check_len(alice.bits.len(), bob.bits.len())?;
    let tx_a = transmit(&alice.bits, cfg, &mut seed.derive("alice-an").rng())?;
    let tx_b = transmit(&bob.bits, cfg, &mut seed.derive("bob-an").rng())?;
    let noise = link.legit_noise_variance();
    let at_alice = awgn_with(&tx_b, noise, &mut seed.derive("alice-rx").rng());
    let at_bob = awgn_with(&tx_a, noise, &mut seed.derive("bob-rx").rng());
    let eve_observation =
        eve_superposition_with(&tx_a, &tx_b, link, &mut seed.derive("eve-rx").rng())?;
    Ok(ExchangeOutcome {
        alice_received: detect_all(&at_alice, cfg),
        bob_received: detect_all(&at_bob, cfg),
        eve_observation,
    })
}

// Numerical floor added to Eve's covariance so noise-free, degenerate
// geometries reduce to minimum-distance detection.
const COV_FLOOR: f64 = 1e-12;

/// Joint maximum-likelihood detection of both parties' 4-level symbols.
///
/// Eve knows the rotation, the amplitude alphabet and her two gains. Given
/// the pair of symbols, her observation is Gaussian: the artificial noise of
/// each party arrives along `j·h`, plus her own receiver noise. All sixteen
/// hypotheses share one covariance, so ML reduces to the smallest
/// Mahalanobis distance.
pub fn eve_detect(
    observation: &[ComplexSample],
    link: &WiretapLinkConfig,
    cfg: &RotationConfig,
) -> (BitBlock, BitBlock) {
    let alphabet = cfg.alphabet();
    let (ha, hb) = (link.eve_gain_a, link.eve_gain_b);
    let an = cfg.an_power_fraction();
    let half_noise = 0.5 * link.eve_noise_variance() + COV_FLOOR;
    let (ua, ub) = (Complex64::i() * ha, Complex64::i() * hb);
    let c00 = an * (ua.re * ua.re + ub.re * ub.re) + half_noise;
    let c01 = an * (ua.re * ua.im + ub.re * ub.im);
    let c11 = an * (ua.im * ua.im + ub.im * ub.im) + half_noise;
    let det = c00 * c11 - c01 * c01;
    let (i00, i01, i11) = (c11 / det, -c01 / det, c00 / det);

    let mut hypotheses = [(0u8, 0u8, Complex64::new(0.0, 0.0)); 16];
    for pa in 0..4u8 {
        for pb in 0..4u8 {
            let mean = ha * alphabet[pa as usize] + hb * alphabet[pb as usize];
            hypotheses[(pa * 4 + pb) as usize] = (pa, pb, mean);
        }
    }

    let n = observation.len();
    let mut alice = BitBlock::zeros(2 * n);
    let mut bob = BitBlock::zeros(2 * n);
    for (k, z) in observation.iter().enumerate() {
        let mut best = (f64::INFINITY, 0u8, 0u8);
        for &(pa, pb, mean) in &hypotheses {
            let d = z - mean;
            let q = i00 * d.re * d.re + 2.0 * i01 * d.re * d.im + i11 * d.im * d.im;
            if q < best.0 {
                best = (q, pa, pb);
            }
        }
        alice.set(2 * k, best.1 & 0b10 != 0);
        alice.set(2 * k + 1, best.1 & 0b01 != 0);
        bob.set(2 * k, best.2 & 0b10 != 0);
        bob.set(2 * k + 1, best.2 & 0b01 != 0);
    }
    (alice, bob)
}

/// Final key plus the public hash seed that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalKey {
    pub bits: BitBlock,
    pub amplifier_seed: BitBlock,
}

/// Toeplitz universal hashing of `bits` down to `out_len` bits.
/// `public_seed` must hold `bits.len() + out_len - 1` bits.
pub fn privacy_amplify(
    bits: &BitBlock,
    public_seed: &BitBlock,
    out_len: usize,
) -> Result<GlobalKey> {
    if out_len == 0 || out_len >= bits.len() {
        return Err(Error::invalid(
            "out_len",
            format!("{out_len} must be in 1..{}", bits.len()),
        ));
    }
    let hash = Toeplitz::new(public_seed, bits.len(), out_len)?;
    Ok(GlobalKey {
        bits: hash.hash(bits)?,
        amplifier_seed: public_seed.clone(),
    })
}

/// Key length supported by `exchanged_bits` once the eavesdropper's
/// per-bit min-entropy bound at her measured error rate is applied.
pub fn secure_key_length(exchanged_bits: usize, eve_ber: f64) -> usize {
    if exchanged_bits < 2 || eve_ber <= 0.0 {
        return 0;
    }
    let per_bit = min_entropy_bound(eve_ber.min(1.0)).unwrap_or(0.0).min(1.0);
    ((exchanged_bits as f64 * per_bit).floor() as usize).min(exchanged_bits - 1)
}

/// Eavesdropper channel geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EveGains {
    /// Fresh `CN(0, 1)` gains per run.
    Rayleigh,
    Fixed(ComplexSample, ComplexSample),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbkgConfig {
    /// Local key bits per party; must be even.
    pub payload_bits: usize,
    /// Output key length.
    pub key_bits: usize,
    /// Legitimate-link SNR; `f64::INFINITY` turns noise off.
    pub snr_db: f64,
    /// Eve's SNR; `None` means she shares the legitimate noise level.
    pub eve_snr_db: Option<f64>,
    pub eve_gains: EveGains,
    pub rotation: RotationConfig,
}

impl Default for NbkgConfig {
    fn default() -> Self {
        Self {
            payload_bits: 256,
            key_bits: 128,
            snr_db: 25.0,
            eve_snr_db: None,
            eve_gains: EveGains::Rayleigh,
            rotation: RotationConfig::default(),
        }
    }
}

impl NbkgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.payload_bits == 0 || !self.payload_bits.is_multiple_of(2) {
            return Err(Error::invalid("payload_bits", "must be positive and even"));
        }
        if self.key_bits == 0 || self.key_bits >= 2 * self.payload_bits {
            return Err(Error::invalid(
                "key_bits",
                format!("must be in 1..{}", 2 * self.payload_bits),
            ));
        }
        if self.snr_db.is_nan() || self.eve_snr_db.is_some_and(f64::is_nan) {
            return Err(Error::invalid("snr_db", "must not be NaN"));
        }
        Ok(())
    }

    fn link(&self, seed: &SeedStream) -> Result<WiretapLinkConfig> {
        let (ga, gb) = match self.eve_gains {
            EveGains::Rayleigh => (
                sample_rayleigh_gain(&seed.derive("eve-gain-a")),
                sample_rayleigh_gain(&seed.derive("eve-gain-b")),
            ),
            EveGains::Fixed(a, b) => (a, b),
        };
        let eve_noise = crate::channel::noise_variance(self.eve_snr_db.unwrap_or(self.snr_db));
        WiretapLinkConfig::new(self.snr_db, ga, gb, eve_noise)
    }
}

/// Outcome of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct NbkgReport {
    pub key_mismatch: bool,
    /// Normalized Hamming distance between Eve's candidate key and Alice's key.
    pub eve_key_distance: f64,
    pub eve_symbol_ber: f64,
    pub legit_symbol_ber: f64,
    /// True when any exchanged bit was misdetected in either direction.
    pub exchange_block_error: bool,
    /// Output key bits over the bits the same channel uses carry
    /// bidirectionally (two per direction per slot).
    pub achieved_dosa: f64,
    pub key_bits: usize,
    pub exchanged_bits: usize,
    pub legit_bit_errors: usize,
    pub eve_bit_errors: usize,
    /// Key length the measured Eve error rate supports.
    pub leakage_budget_bits: usize,
}

/// Runs the complete protocol once.
pub fn run_nbkg(config: &NbkgConfig, seed: &SeedStream) -> Result<NbkgReport> {
    config.validate()?;
    let link = config.link(seed)?;
    let n = config.payload_bits;

    let alice = collect_noise_bits(n, &seed.derive("alice-noise"))?;
    let bob = collect_noise_bits(n, &seed.derive("bob-noise"))?;
    let round = exchange_round(
        &alice,
        &bob,
        &link,
        &config.rotation,
        &seed.derive("exchange"),
    )?;
    let (eve_a, eve_b) = eve_detect(&round.eve_observation, &link, &config.rotation);

    let pa_seed = BitBlock::random(
        2 * n + config.key_bits - 1,
        &mut seed.derive("pa-seed").rng(),
    );
    let alice_key = privacy_amplify(
        &alice.bits.concat(&round.alice_received),
        &pa_seed,
        config.key_bits,
    )?;
    let bob_key = privacy_amplify(
        &round.bob_received.concat(&bob.bits),
        &pa_seed,
        config.key_bits,
    )?;
    let eve_key = privacy_amplify(&eve_a.concat(&eve_b), &pa_seed, config.key_bits)?;

    let legit_bit_errors = round.alice_received.hamming_distance(&bob.bits)?
        + round.bob_received.hamming_distance(&alice.bits)?;
    let eve_bit_errors =
        eve_a.hamming_distance(&alice.bits)? + eve_b.hamming_distance(&bob.bits)?;
    let exchanged = 2 * n;
    let eve_ber = eve_bit_errors as f64 / exchanged as f64;

    Ok(NbkgReport {
        key_mismatch: alice_key.bits != bob_key.bits,
        eve_key_distance: eve_key.bits.hamming_distance(&alice_key.bits)? as f64
            / config.key_bits as f64,
        eve_symbol_ber: eve_ber,
        legit_symbol_ber: legit_bit_errors as f64 / exchanged as f64,
        exchange_block_error: legit_bit_errors > 0,
        achieved_dosa: config.key_bits as f64 / exchanged as f64,
        key_bits: config.key_bits,
        exchanged_bits: exchanged,
        legit_bit_errors,
        eve_bit_errors,
        leakage_budget_bits: secure_key_length(exchanged, eve_ber),
    })
}

/// Unit-modulus gain with uniform random phase.
pub fn random_phase_gain<R: Rng + ?Sized>(rng: &mut R) -> ComplexSample {
    let g = complex_gaussian(rng, 1.0);
    if g.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        g / g.norm()
    }
}
