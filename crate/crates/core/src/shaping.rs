//! Keyless secure transmission by randomness shaping.
//!
//! Each `L`-bit information block `m_i` is masked, diffused and encoded:
//!
//! ```text
//! u_i = m_i XOR ore(s_{i-1}, L)
//! v_i = bre(u_i)
//! x_i = ecc(v_i)
//! s_i = cre(s_{i-1}, v_i),     s_0 = t0
//! ```
//!
//! `bre` is a public invertible GF(2) matrix with dense rows and columns, so
//! a single bit error in `v_i` spreads over about half of the recovered
//! block. `cre` folds every transmitted block into the chained state and
//! `ore` turns that state into the next mask through a one-way function, so
//! an error in any earlier block also scrambles all later blocks. An
//! eavesdropper with per-bit error floor `p_e` sees a whole block without
//! error with probability `(1 - p_e)^L`, which the block length keeps below
//! `2^-lambda`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::bits::{check_len, BitBlock};
use crate::channel::{bsc_with, BscConfig};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, Toeplitz};
use crate::metrics::{min_block_length, SecurityParams};
use crate::rng::SeedStream;

/// Least block length `L` with `(1 - p_e)^L <= 2^-lambda`.
pub fn required_block_length(lambda: u32, error_floor: f64) -> Result<usize> {
    if lambda == 0 {
        return Err(Error::invalid("lambda", "must be >= 1"));
    }
    if !(error_floor > 0.0 && error_floor < 1.0) {
        return Err(Error::invalid(
            "error_floor",
            format!("{error_floor} is outside (0, 1)"),
        ));
    }
    Ok(min_block_length(lambda, error_floor))
}

/// Error-control code applied to every shaped block.
pub trait BlockCodec: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn coded_len(&self, info_len: usize) -> usize;
    fn encode(&self, block: &BitBlock) -> BitBlock;
    fn decode(&self, word: &BitBlock) -> Result<BitBlock>;
}

#[derive(Clone, Debug, Default)]
pub enum EccScheme {
    Passthrough,
    /// Each bit sent three times in a row, majority decoding.
    #[default]
    Repetition3,
    External(Arc<dyn BlockCodec>),
}

impl EccScheme {
    pub fn name(&self) -> &str {
        match self {
            EccScheme::Passthrough => "passthrough",
            EccScheme::Repetition3 => "repetition3",
            EccScheme::External(c) => c.name(),
        }
    }

    pub fn coded_len(&self, info_len: usize) -> usize {
        match self {
            EccScheme::Passthrough => info_len,
            EccScheme::Repetition3 => 3 * info_len,
            EccScheme::External(c) => c.coded_len(info_len),
        }
    }
}

pub fn ecc_encode(block: &BitBlock, scheme: &EccScheme) -> BitBlock {
    match scheme {
        EccScheme::Passthrough => block.clone(),
        EccScheme::Repetition3 => {
            let mut out = BitBlock::zeros(3 * block.len());
            for (i, bit) in block.iter().enumerate() {
                if bit {
                    out.set(3 * i, true);
                    out.set(3 * i + 1, true);
                    out.set(3 * i + 2, true);
                }
            }
            out
        }
        EccScheme::External(c) => c.encode(block),
    }
}

pub fn ecc_decode(word: &BitBlock, scheme: &EccScheme) -> Result<BitBlock> {
    match scheme {
        EccScheme::Passthrough => Ok(word.clone()),
        EccScheme::Repetition3 => {
            if !word.len().is_multiple_of(3) {
                return Err(Error::invalid(
                    "codeword",
                    format!("length {} is not a multiple of 3", word.len()),
                ));
            }
            Ok((0..word.len() / 3)
                .map(|i| {
                    let votes = word.get(3 * i) as u8
                        + word.get(3 * i + 1) as u8
                        + word.get(3 * i + 2) as u8;
                    votes >= 2
                })
                .collect())
        }
        EccScheme::External(c) => c.decode(word),
    }
}

fn seeded_rng(domain: &[u8], seed: &BitBlock, extra: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(domain);
    h.update((seed.len() as u64).to_le_bytes());
    h.update(seed.to_bytes());
    h.update(extra.to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(h.finalize().as_slice());
    ChaCha8Rng::from_seed(key)
}

const BRE_MAX_ATTEMPTS: usize = 64;

/// Bidirectional extractor: a public invertible `L × L` matrix over GF(2).
#[derive(Clone, Debug)]
pub struct Bre {
    forward: BitMatrix,
    inverse: BitMatrix,
}

impl Bre {
    /// Derives the matrix `lower · upper` from `seed`, where both factors are
    /// random unit-diagonal triangular matrices. Draws are repeated until
    /// every row and column of the matrix and of its inverse has weight at
    /// least `L/4`.
    pub fn from_seed(seed: &BitBlock, block_length: usize) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::invalid("block_length", "must be >= 1"));
        }
        let mut rng = seeded_rng(b"wiretap-bre\0", seed, block_length as u64);
        let min_weight = block_length.div_ceil(4);
        let mut best = None;
        for _ in 0..BRE_MAX_ATTEMPTS {
            let lower = BitMatrix::random_unit_lower(block_length, &mut rng);
            let upper = BitMatrix::random_unit_upper(block_length, &mut rng);
            let candidate = Self::from_factors(&lower, &upper)?;
            let weight = candidate.min_diffusion();
            if weight >= min_weight {
                return Ok(candidate);
            }
            if best.as_ref().is_none_or(|(w, _)| weight > *w) {
                best = Some((weight, candidate));
            }
        }
        // only tiny blocks can miss the target; keep the best draw
        Ok(best.expect("at least one attempt").1)
    }

    fn from_factors(lower: &BitMatrix, upper: &BitMatrix) -> Result<Self> {
        let n = lower.nrows();
        let forward = lower.mul(upper)?;
        // columns of the inverse are inverse images of unit vectors
        let mut inv_cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = BitBlock::zeros(n);
            e.set(j, true);
            inv_cols.push(upper.solve_unit_upper(&lower.solve_unit_lower(&e)?)?);
        }
        let inverse = BitMatrix::from_rows(
            (0..n)
                .map(|i| inv_cols.iter().map(|c| c.get(i)).collect())
                .collect(),
            n,
        )?;
        Ok(Self { forward, inverse })
    }

    /// Identity map. Useful only to isolate the other stages in tests.
    pub fn identity(block_length: usize) -> Self {
        Self {
            forward: BitMatrix::identity(block_length),
            inverse: BitMatrix::identity(block_length),
        }
    }

    pub fn block_length(&self) -> usize {
        self.forward.nrows()
    }

    pub fn forward(&self, block: &BitBlock) -> Result<BitBlock> {
        self.forward.mul_vec(block)
    }

    pub fn inverse(&self, block: &BitBlock) -> Result<BitBlock> {
        self.inverse.mul_vec(block)
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.forward
    }

    pub fn inverse_matrix(&self) -> &BitMatrix {
        &self.inverse
    }

    /// Smallest row or column weight across the matrix and its inverse.
    pub fn min_diffusion(&self) -> usize {
        [&self.forward, &self.inverse]
            .into_iter()
            .flat_map(|m| {
                let n = m.nrows();
                let rows = (0..n).map(move |i| m.row(i).count_ones());
                let cols = (0..n).map(move |j| (0..n).filter(|&i| m.get(i, j)).count());
                rows.chain(cols)
            })
            .min()
            .unwrap_or(0)
    }
}

pub fn bre_forward(block: &BitBlock, public_matrix_seed: &BitBlock) -> Result<BitBlock> {
    Bre::from_seed(public_matrix_seed, block.len())?.forward(block)
}

pub fn bre_inverse(block: &BitBlock, public_matrix_seed: &BitBlock) -> Result<BitBlock> {
    Bre::from_seed(public_matrix_seed, block.len())?.inverse(block)
}

/// Chained accumulator, `t0` and its successors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShaperState {
    pub accumulator: BitBlock,
}

impl ShaperState {
    pub fn new(accumulator: BitBlock) -> Self {
        Self { accumulator }
    }

    pub fn random(width: usize, seed: &SeedStream) -> Self {
        Self::new(BitBlock::random(width, &mut seed.rng()))
    }

    pub fn width(&self) -> usize {
        self.accumulator.len()
    }
}

/// One-way extractor: SHA-256 in counter mode over the session constant and
/// the state, truncated to `out_len` bits.
pub fn ore(state: &ShaperState, out_len: usize, session_constant: u64) -> BitBlock {
    let state_bytes = state.accumulator.to_bytes();
    let mut out = BitBlock::zeros(0);
    let mut counter = 0u64;
    while out.len() < out_len {
        let mut h = Sha256::new();
        h.update(b"wiretap-ore\0");
        h.update(session_constant.to_le_bytes());
        h.update((state.width() as u64).to_le_bytes());
        h.update(&state_bytes);
        h.update(counter.to_le_bytes());
        for byte in h.finalize().iter() {
            for b in 0..8 {
                out.push(byte >> b & 1 == 1);
            }
        }
        counter += 1;
    }
    out.slice(0, out_len)
}

/// Compressive extractor: Toeplitz hash of `state ∥ block` back to the state width.
#[derive(Clone, Debug)]
pub struct Cre {
    hash: Toeplitz,
    state_width: usize,
    block_length: usize,
}

impl Cre {
    pub fn from_seed(seed: &BitBlock, state_width: usize, block_length: usize) -> Result<Self> {
        let in_len = state_width + block_length;
        let mut rng = seeded_rng(b"wiretap-cre\0", seed, in_len as u64);
        let toeplitz_seed = BitBlock::random(in_len + state_width - 1, &mut rng);
        Ok(Self {
            hash: Toeplitz::new(&toeplitz_seed, in_len, state_width)?,
            state_width,
            block_length,
        })
    }

    pub fn apply(&self, state: &ShaperState, block: &BitBlock) -> Result<ShaperState> {
        check_len(self.state_width, state.width())?;
        check_len(self.block_length, block.len())?;
        Ok(ShaperState::new(
            self.hash.hash(&state.accumulator.concat(block))?,
        ))
    }
}

pub fn cre(state: &ShaperState, block: &BitBlock, public_seed: &BitBlock) -> Result<ShaperState> {
    Cre::from_seed(public_seed, state.width(), block.len())?.apply(state, block)
}

#[derive(Clone, Debug)]
pub struct ShaperConfig {
    pub params: SecurityParams,
    pub state_width: usize,
    pub ecc: EccScheme,
    /// Public constant from which the extractor matrices and the one-way
    /// mask key are derived.
    pub session_constant: u64,
    /// Pass `t0` through the eavesdropper's channel instead of giving it to
    /// her error-free.
    pub t0_through_eve: bool,
}

impl ShaperConfig {
    /// Defaults: state width `2·lambda`, repetition-3 coding.
    pub fn new(params: SecurityParams) -> Self {
        Self {
            params,
            state_width: 2 * params.lambda() as usize,
            ecc: EccScheme::default(),
            session_constant: 0x005e_ed0f_5afe,
            t0_through_eve: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_width < self.params.lambda() as usize {
            return Err(Error::invalid(
                "state_width",
                format!(
                    "{} is below lambda = {}",
                    self.state_width,
                    self.params.lambda()
                ),
            ));
        }
        Ok(())
    }

    pub fn block_length(&self) -> usize {
        self.params.block_length()
    }

    pub fn coded_length(&self) -> usize {
        self.ecc.coded_len(self.block_length())
    }
}

/// Instantiated extractors for one configuration.
#[derive(Clone, Debug)]
pub struct Shaper {
    cfg: ShaperConfig,
    bre: Bre,
    cre: Cre,
}

impl Shaper {
    pub fn new(cfg: &ShaperConfig) -> Result<Self> {
        cfg.validate()?;
        let public = BitBlock::from_u64(cfg.session_constant, 64);
        let l = cfg.block_length();
        Ok(Self {
            bre: Bre::from_seed(&public, l)?,
            cre: Cre::from_seed(&public, cfg.state_width, l)?,
            cfg: cfg.clone(),
        })
    }

    /// Replaces the bidirectional extractor.
    pub fn with_bre(mut self, bre: Bre) -> Result<Self> {
        check_len(self.cfg.block_length(), bre.block_length())?;
        self.bre = bre;
        Ok(self)
    }

    pub fn config(&self) -> &ShaperConfig {
        &self.cfg
    }

    pub fn bre(&self) -> &Bre {
        &self.bre
    }

    pub fn ore(&self, state: &ShaperState) -> BitBlock {
        ore(state, self.cfg.block_length(), self.cfg.session_constant)
    }

    pub fn cre(&self, state: &ShaperState, block: &BitBlock) -> Result<ShaperState> {
        self.cre.apply(state, block)
    }

    fn check_t0(&self, t0: &ShaperState) -> Result<()> {
        check_len(self.cfg.state_width, t0.width())
    }

    /// Shaped blocks `v_1 … v_q`, before channel coding.
    pub fn shape(&self, blocks: &[BitBlock], t0: &ShaperState) -> Result<Vec<BitBlock>> {
        self.check_t0(t0)?;
        let mut state = t0.clone();
        blocks
            .iter()
            .map(|m| {
                check_len(self.cfg.block_length(), m.len())?;
                let u = m.xor(&self.ore(&state))?;
                let v = self.bre.forward(&u)?;
                state = self.cre(&state, &v)?;
                Ok(v)
            })
            .collect()
    }

    /// Inverse of [`Shaper::shape`] for possibly corrupted blocks.
    pub fn unshape(&self, shaped: &[BitBlock], t0: &ShaperState) -> Result<Vec<BitBlock>> {
        self.check_t0(t0)?;
        let mut state = t0.clone();
        shaped
            .iter()
            .map(|v| {
                check_len(self.cfg.block_length(), v.len())?;
                let u = self.bre.inverse(v)?;
                let m = u.xor(&self.ore(&state))?;
                state = self.cre(&state, v)?;
                Ok(m)
            })
            .collect()
    }

    pub fn encode(&self, blocks: &[BitBlock], t0: &ShaperState) -> Result<Vec<BitBlock>> {
        Ok(self
            .shape(blocks, t0)?
            .iter()
            .map(|v| ecc_encode(v, &self.cfg.ecc))
            .collect())
    }

    pub fn decode(&self, codewords: &[BitBlock], t0: &ShaperState) -> Result<Vec<BitBlock>> {
        let coded = self.cfg.coded_length();
        let shaped = codewords
            .iter()
            .map(|x| {
                check_len(coded, x.len())?;
                ecc_decode(x, &self.cfg.ecc)
            })
            .collect::<Result<Vec<_>>>()?;
        self.unshape(&shaped, t0)
    }
}

/// Codewords `x_1 … x_q` for information blocks `m_1 … m_q`.
pub fn shaper_encode(
    blocks: &[BitBlock],
    t0: &ShaperState,
    cfg: &ShaperConfig,
) -> Result<Vec<BitBlock>> {
    Shaper::new(cfg)?.encode(blocks, t0)
}

/// Recovered information blocks from (possibly corrupted) codewords.
pub fn shaper_decode(
    codewords: &[BitBlock],
    t0: &ShaperState,
    cfg: &ShaperConfig,
) -> Result<Vec<BitBlock>> {
    Shaper::new(cfg)?.decode(codewords, t0)
}

/// Measured outcome of one keyless session. Counts are kept alongside the
/// rates so sessions can be pooled exactly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeylessReport {
    pub eve_ber_without_shaping: f64,
    pub eve_ber_with_shaping: f64,
    /// Bit error rate of the shaped blocks after channel decoding at Bob.
    pub legit_ber: f64,
    /// Bit error rate of Bob's recovered information blocks, including the
    /// propagation of residual decoding errors along the chain.
    pub legit_message_ber: f64,
    pub legit_ber_without_shaping: f64,
    pub block_length: usize,
    pub coded_length: usize,
    /// `lambda / L`.
    pub achieved_dosa: f64,
    /// `lambda / coded length`.
    pub coded_dosa: f64,
    pub counts: KeylessCounts,
}

/// Raw error counts behind a [`KeylessReport`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KeylessCounts {
    pub info_bits: u64,
    pub eve_errors_shaped: u64,
    pub eve_errors_unshaped: u64,
    pub legit_errors_coded: u64,
    pub legit_errors_message: u64,
    pub legit_errors_unshaped: u64,
    pub legit_block_errors: u64,
    pub blocks: u64,
}

impl KeylessCounts {
    pub fn merge(self, o: KeylessCounts) -> KeylessCounts {
        KeylessCounts {
            info_bits: self.info_bits + o.info_bits,
            eve_errors_shaped: self.eve_errors_shaped + o.eve_errors_shaped,
            eve_errors_unshaped: self.eve_errors_unshaped + o.eve_errors_unshaped,
            legit_errors_coded: self.legit_errors_coded + o.legit_errors_coded,
            legit_errors_message: self.legit_errors_message + o.legit_errors_message,
            legit_errors_unshaped: self.legit_errors_unshaped + o.legit_errors_unshaped,
            legit_block_errors: self.legit_block_errors + o.legit_block_errors,
            blocks: self.blocks + o.blocks,
        }
    }
}

impl KeylessReport {
    pub fn from_counts(cfg: &ShaperConfig, counts: KeylessCounts) -> Self {
        let rate = |e: u64| {
            if counts.info_bits == 0 {
                0.0
            } else {
                e as f64 / counts.info_bits as f64
            }
        };
        let lambda = cfg.params.lambda() as f64;
        Self {
            eve_ber_without_shaping: rate(counts.eve_errors_unshaped),
            eve_ber_with_shaping: rate(counts.eve_errors_shaped),
            legit_ber: rate(counts.legit_errors_coded),
            legit_message_ber: rate(counts.legit_errors_message),
            legit_ber_without_shaping: rate(counts.legit_errors_unshaped),
            block_length: cfg.block_length(),
            coded_length: cfg.coded_length(),
            achieved_dosa: lambda / cfg.block_length() as f64,
            coded_dosa: lambda / cfg.coded_length() as f64,
            counts,
        }
    }
}

/// Runs `q` random blocks through the shaped and unshaped pipelines over a
/// legitimate BSC (on coded bits) and an eavesdropper BSC. The eavesdropper
/// channel models the error floor left after her demodulation and decoding,
/// so it acts on the shaped blocks directly.
pub fn simulate_keyless(
    cfg: &ShaperConfig,
    legit: BscConfig,
    eve: BscConfig,
    q: usize,
    seed: &SeedStream,
) -> Result<KeylessReport> {
    let shaper = Shaper::new(cfg)?;
    simulate_keyless_with(&shaper, legit, eve, q, seed)
}

pub(crate) fn simulate_keyless_with(
    shaper: &Shaper,
    legit: BscConfig,
    eve: BscConfig,
    q: usize,
    seed: &SeedStream,
) -> Result<KeylessReport> {
    let cfg = shaper.config();
    if (eve.crossover() - cfg.params.error_floor()).abs() > 1e-12 {
        return Err(Error::invalid(
            "eve crossover",
            format!(
                "{} differs from the configured error floor {}",
                eve.crossover(),
                cfg.params.error_floor()
            ),
        ));
    }
    let l = cfg.block_length();
    let mut msg_rng = seed.derive("messages").rng();
    let messages: Vec<BitBlock> = (0..q).map(|_| BitBlock::random(l, &mut msg_rng)).collect();
    let t0 = ShaperState::random(cfg.state_width, &seed.derive("t0"));

    let mut legit_rng = seed.derive("legit-channel").rng();
    let mut eve_rng = seed.derive("eve-channel").rng();

    // shaped arm
    let shaped = shaper.shape(&messages, &t0)?;
    let bob_shaped = shaped
        .iter()
        .map(|v| {
            ecc_decode(
                &bsc_with(&ecc_encode(v, &cfg.ecc), legit, &mut legit_rng),
                &cfg.ecc,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let bob_messages = shaper.unshape(&bob_shaped, &t0)?;
    let eve_t0 = if cfg.t0_through_eve {
        ShaperState::new(bsc_with(&t0.accumulator, eve, &mut eve_rng))
    } else {
        t0.clone()
    };
    let eve_shaped: Vec<_> = shaped
        .iter()
        .map(|v| bsc_with(v, eve, &mut eve_rng))
        .collect();
    let eve_messages = shaper.unshape(&eve_shaped, &eve_t0)?;

    // control arm: the same blocks without shaping
    let mut legit_plain_rng = seed.derive("legit-channel-plain").rng();
    let mut eve_plain_rng = seed.derive("eve-channel-plain").rng();

    let mut counts = KeylessCounts {
        info_bits: (q * l) as u64,
        blocks: q as u64,
        ..Default::default()
    };
    for i in 0..q {
        let coded_err = bob_shaped[i].hamming_distance(&shaped[i])? as u64;
        counts.legit_errors_coded += coded_err;
        counts.legit_block_errors += (coded_err > 0) as u64;
        counts.legit_errors_message += bob_messages[i].hamming_distance(&messages[i])? as u64;
        counts.eve_errors_shaped += eve_messages[i].hamming_distance(&messages[i])? as u64;

        let bob_plain = ecc_decode(
            &bsc_with(
                &ecc_encode(&messages[i], &cfg.ecc),
                legit,
                &mut legit_plain_rng,
            ),
            &cfg.ecc,
        )?;
        counts.legit_errors_unshaped += bob_plain.hamming_distance(&messages[i])? as u64;
        let eve_plain = bsc_with(&messages[i], eve, &mut eve_plain_rng);
        counts.eve_errors_unshaped += eve_plain.hamming_distance(&messages[i])? as u64;
    }
    Ok(KeylessReport::from_counts(cfg, counts))
}

/// Largest block length for which every error pattern is enumerated explicitly.
pub const EXPLICIT_ENUMERATION_BITS: usize = 20;
/// Largest block length handled by weight-class summation.
pub const WEIGHT_CLASS_MAX_BITS: usize = 1 << 16;
pub const EVE_SUCCESS_MAX_LAMBDA: u32 = 16;

/// Probability that the eavesdropper recovers a whole block, obtained by
/// summing over the distribution of her error patterns and checking which
/// patterns survive the bidirectional extractor.
///
/// Up to [`EXPLICIT_ENUMERATION_BITS`] every pattern is pushed through a
/// fixed extractor instance; beyond that, patterns are grouped by weight and
/// each class contributes its probability mass times the fraction of its
/// members that decode correctly (the extractor is injective, so only the
/// all-zero pattern does).
pub fn eve_success_exhaustive(lambda_small: u32, error_floor: f64) -> Result<f64> {
    if lambda_small > EVE_SUCCESS_MAX_LAMBDA {
        return Err(Error::EnumerationCap(format!(
            "lambda {lambda_small} exceeds {EVE_SUCCESS_MAX_LAMBDA}"
        )));
    }
    let l = required_block_length(lambda_small, error_floor)?;
    if l > WEIGHT_CLASS_MAX_BITS {
        return Err(Error::EnumerationCap(format!(
            "block length {l} exceeds {WEIGHT_CLASS_MAX_BITS}"
        )));
    }
    let p = error_floor;
    if l <= EXPLICIT_ENUMERATION_BITS {
        let bre = Bre::from_seed(&BitBlock::from_u64(0xe5e, 16), l)?;
        let truth = BitBlock::zeros(l);
        let mut success = 0.0;
        let mut total = 0.0;
        for pattern in 0..(1u64 << l) {
            let e = BitBlock::from_u64(pattern, l);
            let w = e.count_ones();
            let mut prob = 1.0;
            for _ in 0..w {
                prob *= p;
            }
            for _ in w..l {
                prob *= 1.0 - p;
            }
            total += prob;
            // v = bre(m) with m = 0; Eve inverts v XOR e
            if bre.inverse(&e)? == truth {
                success += prob;
            }
        }
        debug_assert!((total - 1.0).abs() < 1e-9);
        Ok(success)
    } else {
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        let mut ln_choose = 0.0f64;
        let mut success = 0.0;
        let mut total = 0.0;
        for w in 0..=l {
            if w > 0 {
                ln_choose += ((l - w + 1) as f64).ln() - (w as f64).ln();
            }
            let mass = (ln_choose + w as f64 * ln_p + (l - w) as f64 * ln_q).exp();
            total += mass;
            let surviving_fraction = if w == 0 { 1.0 } else { 0.0 };
            success += mass * surviving_fraction;
        }
        debug_assert!((total - 1.0).abs() < 1e-9);
        Ok(success)
    }
}
