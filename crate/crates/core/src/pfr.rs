//! One-shot channel simulation with the Poisson functional representation.
//!
//! Encoder and decoder share `U = (seed, sample_index)`. From it both derive
//! the same candidate sequence `X̂_1, X̂_2, …` drawn i.i.d. from the
//! reconstruction marginal, together with Exp(1) gaps `S_i` whose partial sums
//! `T_i` are the epochs of a unit-rate Poisson process. The encoder sends
//!
//! ```text
//! K = argmin_i T_i · P_X̂(X̂_i) / Q(X̂_i | x)
//! ```
//!
//! and `X̂_K` is an exact sample from `Q(· | x)`.
//!
//! # Derivation layer
//!
//! Randomness comes from ChaCha20 keyed with the seed (little-endian in the
//! first 8 key bytes, the rest zero) and using `sample_index` as the 64-bit
//! stream id. Candidate `i` owns a slot of `8·⌈(4 + dim)/8⌉` consecutive
//! 64-bit output words starting at word `(i − 1)·slot`, so every slot is
//! aligned to a ChaCha block and can be reached by seeking:
//!
//! * word 0: the gap draw;
//! * words 1–3: replacement gap draws, used in order when a draw gives `S = 0`;
//! * words 4.. : one word per candidate coordinate.
//!
//! A gap word `w` maps to `u = ((w >> 11) + 1)·2⁻⁵³ ∈ (0, 1]` and `S = −ln u`.
//! A symbol word maps to `u = (w >> 11)·2⁻⁵³ ∈ [0, 1)` and then through the
//! inverse CDF of the marginal.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probcore::{self, Channel, Pmf};

/// Candidate budget used when none is configured.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

const GAP_WORDS: usize = 4;
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// Shared randomness `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommonRandomness {
    pub seed: u64,
    pub sample_index: u64,
}

impl CommonRandomness {
    pub fn new(seed: u64, sample_index: u64) -> Self {
        CommonRandomness { seed, sample_index }
    }
}

/// The `i`-th candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateDraw {
    pub index: u64,
    pub symbol: usize,
    /// Exp(1) gap `S_i`.
    pub gap: f64,
    /// Poisson epoch `T_i = S_1 + … + S_i`.
    pub epoch: f64,
    /// `P_X̂(x̂_i) / Q(x̂_i | x)`, `+∞` where `Q` vanishes.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PfrEncoding {
    /// Selected index, 1-based.
    pub k: u64,
    /// Candidates drawn, including the one whose epoch triggered the stop.
    pub candidates_examined: u64,
}

fn slot_words(dim: usize) -> u64 {
    (GAP_WORDS + dim).div_ceil(8) as u64 * 8
}

fn keyed(u: CommonRandomness) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&u.seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(u.sample_index);
    rng
}

/// The raw 64-bit words of candidate `i`'s slot for a `dim`-coordinate
/// candidate. Exposed for the pinned test vectors.
pub fn raw_words(u: CommonRandomness, i: u64, dim: usize) -> Result<Vec<u64>> {
    if i == 0 {
        return Err(Error::ZeroIndex);
    }
    let w = slot_words(dim);
    let mut rng = keyed(u);
    rng.set_word_pos(u128::from(i - 1) * u128::from(w) * 2);
    Ok((0..w).map(|_| rng.next_u64()).collect())
}

fn gap_from(words: &[u64]) -> f64 {
    for &w in &words[..GAP_WORDS] {
        let u = ((w >> 11) + 1) as f64 * UNIT;
        if u < 1.0 {
            return -u.ln();
        }
    }
    // Four consecutive draws of exactly 1: take the smallest positive gap.
    UNIT
}

/// Inverse-CDF lookup table for one marginal.
#[derive(Debug, Clone)]
struct Sampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Sampler {
    fn new(marginal: &Pmf) -> Self {
        let mut acc = 0.0;
        let cdf = marginal
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_positive = marginal.support().last().unwrap_or(0);
        Sampler { cdf, last_positive }
    }

    fn symbol(&self, word: u64) -> usize {
        let u = (word >> 11) as f64 * UNIT;
        // Zero-probability symbols have an empty interval and are never hit.
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_positive)
    }
}

/// `(x̂_i, S_i)` for a scalar candidate.
pub fn derive(u: CommonRandomness, i: u64, marginal: &Pmf) -> Result<(usize, f64)> {
    let words = raw_words(u, i, 1)?;
    Ok((
        Sampler::new(marginal).symbol(words[GAP_WORDS]),
        gap_from(&words),
    ))
}

/// `(x̂_i, S_i)` for a candidate vector of length `dim` with i.i.d.
/// coordinates.
pub fn derive_vector(
    u: CommonRandomness,
    i: u64,
    marginal: &Pmf,
    dim: usize,
) -> Result<(Vec<usize>, f64)> {
    let words = raw_words(u, i, dim)?;
    let sampler = Sampler::new(marginal);
    let symbols = words[GAP_WORDS..GAP_WORDS + dim]
        .iter()
        .map(|&w| sampler.symbol(w))
        .collect();
    Ok((symbols, gap_from(&words)))
}

/// Sequential reader of the candidate stream; yields the same values as
/// repeated [`derive_vector`] calls with `i = 1, 2, …`.
pub struct CandidateStream {
    rng: ChaCha20Rng,
    sampler: Sampler,
    dim: usize,
    words: Vec<u64>,
    next_index: u64,
    epoch: f64,
}

impl CandidateStream {
    pub fn new(u: CommonRandomness, marginal: &Pmf, dim: usize) -> Self {
        CandidateStream {
            rng: keyed(u),
            sampler: Sampler::new(marginal),
            dim,
            words: vec![0; slot_words(dim) as usize],
            next_index: 1,
            epoch: 0.0,
        }
    }

    /// Advances to the next candidate, writing its symbols into `symbols`.
    /// Returns `(index, gap, epoch)`.
    pub fn next_into(&mut self, symbols: &mut [usize]) -> (u64, f64, f64) {
        for w in self.words.iter_mut() {
            *w = self.rng.next_u64();
        }
        for (s, &w) in symbols
            .iter_mut()
            .zip(&self.words[GAP_WORDS..GAP_WORDS + self.dim])
        {
            *s = self.sampler.symbol(w);
        }
        let gap = gap_from(&self.words);
        self.epoch += gap;
        let index = self.next_index;
        self.next_index += 1;
        (index, gap, self.epoch)
    }
}

/// `min_x̂ P_X̂(x̂) / Q(x̂ | x)` over the support of `Q(· | x)`.
pub fn min_weight_bound(q: &Channel, marginal: &Pmf, x: usize) -> Result<f64> {
    check_codec_inputs(q, marginal)?;
    if x >= q.in_size() {
        return Err(Error::InvalidArgument(format!(
            "symbol {x} outside an input alphabet of size {}",
            q.in_size()
        )));
    }
    Ok(row_weights(q, marginal, x)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

fn check_codec_inputs(q: &Channel, marginal: &Pmf) -> Result<()> {
    if q.out_size() != marginal.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} outputs but the marginal has {} symbols",
            q.out_size(),
            marginal.len()
        )));
    }
    Ok(())
}

fn row_weights(q: &Channel, marginal: &Pmf, x: usize) -> Result<Vec<f64>> {
    q.row(x)
        .iter()
        .zip(marginal.probs())
        .enumerate()
        .map(|(y, (&qy, &py))| {
            if qy == 0.0 {
                Ok(f64::INFINITY)
            } else if py == 0.0 {
                Err(Error::AbsoluteContinuityViolated {
                    input: x,
                    symbol: y,
                })
            } else {
                Ok(py / qy)
            }
        })
        .collect()
}

/// The argmin search shared by scalar and block codes. `weight` maps a
/// candidate to its density ratio; `w_min` must lower-bound every weight.
pub(crate) fn search(
    mut stream: CandidateStream,
    dim: usize,
    mut weight: impl FnMut(&[usize]) -> f64,
    w_min: f64,
    budget: u64,
) -> Result<PfrEncoding> {
    let mut symbols = vec![0; dim];
    let mut best = f64::INFINITY;
    let mut k = 0;
    for _ in 0..budget {
        let (i, _, epoch) = stream.next_into(&mut symbols);
        // Every later candidate has a larger epoch and weight at least w_min.
        if epoch * w_min >= best {
            return Ok(PfrEncoding {
                k,
                candidates_examined: i,
            });
        }
        let score = epoch * weight(&symbols);
        if score < best {
            best = score;
            k = i;
        }
    }
    Err(Error::BudgetExhausted { budget })
}

/// Encoder with a fixed channel, marginal and budget. Per-input weights and
/// stopping bounds are precomputed.
#[derive(Debug, Clone)]
pub struct PfrCodec {
    channel: Channel,
    marginal: Pmf,
    weights: Vec<Vec<f64>>,
    w_min: Vec<f64>,
    budget: u64,
}

impl PfrCodec {
    pub fn new(channel: Channel, marginal: Pmf) -> Result<Self> {
        check_codec_inputs(&channel, &marginal)?;
        let weights = (0..channel.in_size())
            .map(|x| row_weights(&channel, &marginal, x))
            .collect::<Result<Vec<_>>>()?;
        let w_min = weights
            .iter()
            .map(|w| w.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        Ok(PfrCodec {
            channel,
            marginal,
            weights,
            w_min,
            budget: DEFAULT_BUDGET,
        })
    }

    /// Codec for `q` with the reconstruction marginal induced by `source`.
    pub fn for_source(q: Channel, source: &Pmf) -> Result<Self> {
        let marginal = probcore::marginal_recon(source, &q)?;
        PfrCodec::new(q, marginal)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn marginal(&self) -> &Pmf {
        &self.marginal
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub(crate) fn weights(&self, x: usize) -> &[f64] {
        &self.weights[x]
    }

    pub fn min_weight(&self, x: usize) -> f64 {
        self.w_min[x]
    }

    pub(crate) fn check_symbol(&self, x: usize) -> Result<()> {
        if x >= self.channel.in_size() {
            return Err(Error::InvalidArgument(format!(
                "symbol {x} outside an input alphabet of size {}",
                self.channel.in_size()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, x: usize, u: CommonRandomness) -> Result<PfrEncoding> {
        self.check_symbol(x)?;
        let w = &self.weights[x];
        search(
            CandidateStream::new(u, &self.marginal, 1),
            1,
            |s| w[s[0]],
            self.w_min[x],
            self.budget,
        )
    }

    pub fn decode(&self, k: u64, u: CommonRandomness) -> Result<usize> {
        decode(k, &self.marginal, u)
    }

    /// Encodes and returns the reconstruction alongside the index.
    pub fn simulate(&self, x: usize, u: CommonRandomness) -> Result<(PfrEncoding, usize)> {
        let enc = self.encode(x, u)?;
        Ok((enc, self.decode(enc.k, u)?))
    }

    /// All candidates up to and including the selected one, for inspection.
    pub fn trace(&self, x: usize, u: CommonRandomness) -> Result<Vec<CandidateDraw>> {
        let enc = self.encode(x, u)?;
        let mut stream = CandidateStream::new(u, &self.marginal, 1);
        let mut s = [0];
        Ok((0..enc.k)
            .map(|_| {
                let (index, gap, epoch) = stream.next_into(&mut s);
                CandidateDraw {
                    index,
                    symbol: s[0],
                    gap,
                    epoch,
                    weight: self.weights[x][s[0]],
                }
            })
            .collect())
    }
}

/// `K` for input `x` under channel `q` and marginal `marginal`, with the
/// default budget.
pub fn encode_index(
    x: usize,
    q: &Channel,
    marginal: &Pmf,
    u: CommonRandomness,
) -> Result<PfrEncoding> {
    PfrCodec::new(q.clone(), marginal.clone())?.encode(x, u)
}

/// The `k`-th candidate symbol.
pub fn decode(k: u64, marginal: &Pmf, u: CommonRandomness) -> Result<usize> {
    Ok(derive(u, k, marginal)?.0)
}

/// `H[K | U = u]` in bits: the entropy of the source pushed through the
/// deterministic map `x ↦ K(x, u)`.
pub fn exact_index_entropy_given_seed(
    q: &Channel,
    source: &Pmf,
    marginal: &Pmf,
    u: CommonRandomness,
) -> Result<f64> {
    let codec = PfrCodec::new(q.clone(), marginal.clone())?;
    codec_index_entropy(&codec, source, u).map(|(h, _)| h)
}

/// Same as [`exact_index_entropy_given_seed`] for an existing codec; also
/// returns the selected index per source symbol (`0` for symbols of
/// probability zero).
pub fn codec_index_entropy(
    codec: &PfrCodec,
    source: &Pmf,
    u: CommonRandomness,
) -> Result<(f64, Vec<u64>)> {
    if source.len() != codec.channel.in_size() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} symbols but the channel has {} inputs",
            source.len(),
            codec.channel.in_size()
        )));
    }
    let mut ks = vec![0; source.len()];
    for x in source.support() {
        ks[x] = codec.encode(x, u)?.k;
    }
    let mut mass: Vec<(u64, f64)> = Vec::new();
    for x in source.support() {
        match mass.iter_mut().find(|(k, _)| *k == ks[x]) {
            Some((_, p)) => *p += source[x],
            None => mass.push((ks[x], source[x])),
        }
    }
    let h = mass
        .iter()
        .map(|&(_, p)| -p * p.log2())
        .sum::<f64>()
        .max(0.0);
    Ok((h, ks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_core::RngCore;

    const VECTORS: &str = include_str!("../testdata/prf_vectors.txt");

    fn u(seed: u64, i: u64) -> CommonRandomness {
        CommonRandomness::new(seed, i)
    }

    fn half() -> Pmf {
        Pmf::uniform(2).unwrap()
    }

    #[test]
    fn chacha_matches_published_block() {
        // Block-function test vector for ChaCha20 with key 00 01 … 1f,
        // nonce 00:00:00:09:00:00:00:4a:00:00:00:00 and block counter 1.
        let key: [u8; 32] = std::array::from_fn(|i| i as u8);
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(0x4a00_0000);
        rng.set_word_pos(((0x0900_0000u128 << 32) | 1) * 16);
        let mut out = [0u8; 16];
        rng.fill_bytes(&mut out);
        assert_eq!(
            out,
            [
                0x10, 0xf1, 0xe7, 0xe4, 0xd1, 0x3b, 0x59, 0x15, 0x50, 0x0f, 0xdd, 0x1f, 0xa3, 0x20,
                0x71, 0xc4
            ]
        );
    }

    #[test]
    fn pinned_vectors() {
        let mut checked = 0;
        for line in VECTORS.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let seed: u64 = f[0].parse().unwrap();
            let sample: u64 = f[1].parse().unwrap();
            let i: u64 = f[2].parse().unwrap();
            let dim: usize = f[3].parse().unwrap();
            let expected: Vec<u64> = f[4..]
                .iter()
                .map(|w| u64::from_str_radix(w, 16).unwrap())
                .collect();
            assert_eq!(
                raw_words(u(seed, sample), i, dim).unwrap(),
                expected,
                "{line}"
            );
            checked += 1;
        }
        assert!(checked >= 8);
    }

    #[test]
    fn slot_layout() {
        assert_eq!(slot_words(1), 8);
        assert_eq!(slot_words(4), 8);
        assert_eq!(slot_words(5), 16);
        assert_eq!(slot_words(8), 16);
        assert!(matches!(raw_words(u(0, 0), 0, 1), Err(Error::ZeroIndex)));
    }

    #[test]
    fn gap_redraw() {
        // A word with all top 53 bits set maps to u = 1 and S = 0.
        let ones = u64::MAX;
        assert_abs_diff_eq!(gap_from(&[ones, 0, 0, 0]), -(UNIT).ln(), epsilon = 1e-12);
        assert_eq!(gap_from(&[ones; 4]), UNIT);
        assert!(gap_from(&[0, 0, 0, 0]) > 36.0);
    }

    #[test]
    fn sampler_edges() {
        let p = Pmf::new(vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let s = Sampler::new(&p);
        assert_eq!(s.symbol(0), 1);
        assert_eq!(s.symbol(u64::MAX), 3);
        assert_eq!(s.symbol(1u64 << 63), 3);
        assert_eq!(s.symbol((1u64 << 63) - (1 << 11)), 1);
    }

    #[test]
    fn derive_is_deterministic() {
        let m = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        for i in 1..50 {
            assert_eq!(
                derive(u(7, 3), i, &m).unwrap(),
                derive(u(7, 3), i, &m).unwrap()
            );
        }
        assert_ne!(
            derive(u(7, 3), 1, &m).unwrap(),
            derive(u(7, 4), 1, &m).unwrap()
        );
        assert_ne!(
            derive(u(7, 3), 1, &m).unwrap().1,
            derive(u(8, 3), 1, &m).unwrap().1
        );
    }

    #[test]
    fn stream_matches_random_access() {
        let m = Pmf::new(vec![0.1, 0.6, 0.3]).unwrap();
        for dim in [1, 3, 4, 5, 8] {
            let mut stream = CandidateStream::new(u(11, 5), &m, dim);
            let mut s = vec![0; dim];
            let mut epoch = 0.0;
            for i in 1..=40 {
                let (idx, gap, t) = stream.next_into(&mut s);
                let (sym, g) = derive_vector(u(11, 5), i, &m, dim).unwrap();
                epoch += g;
                assert_eq!((idx, gap, t, &s), (i, g, epoch, &sym));
            }
        }
    }

    #[test]
    fn derived_marginal_and_gaps() {
        let m = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let n = 100_000u64;
        let mut stream = CandidateStream::new(u(2024, 0), &m, 1);
        let mut counts = [0u64; 3];
        let mut s = [0];
        let mut gap_sum = 0.0;
        for _ in 0..n {
            let (_, gap, _) = stream.next_into(&mut s);
            counts[s[0]] += 1;
            gap_sum += gap;
        }
        let tv: f64 = 0.5
            * counts
                .iter()
                .zip(m.probs())
                .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
                .sum::<f64>();
        assert!(tv <= 0.01, "tv {tv}");
        let mean = gap_sum / n as f64;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
    }

    #[test]
    fn min_weight_examples() {
        let m = half();
        assert_eq!(
            min_weight_bound(&Channel::constant(2, &m).unwrap(), &m, 0).unwrap(),
            1.0
        );
        let bsc = Channel::bsc(0.25).unwrap();
        assert_abs_diff_eq!(
            min_weight_bound(&bsc, &m, 0).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(
            min_weight_bound(&Channel::identity(2).unwrap(), &m, 1).unwrap(),
            0.5
        );
        let degenerate = Pmf::point_mass(2, 0).unwrap();
        assert_eq!(
            min_weight_bound(&bsc, &degenerate, 0),
            Err(Error::AbsoluteContinuityViolated {
                input: 0,
                symbol: 1
            })
        );
    }

    #[test]
    fn independent_channel_selects_first() {
        let m = Pmf::new(vec![0.3, 0.7]).unwrap();
        let codec = PfrCodec::new(Channel::constant(2, &m).unwrap(), m.clone()).unwrap();
        for i in 0..200 {
            let enc = codec.encode(i % 2, u(9, i as u64)).unwrap();
            assert_eq!(enc.k, 1);
            assert_eq!(
                codec.decode(1, u(9, i as u64)).unwrap(),
                derive(u(9, i as u64), 1, &m).unwrap().0
            );
        }
    }

    #[test]
    fn identity_channel_picks_first_match() {
        let codec = PfrCodec::new(Channel::identity(2).unwrap(), half()).unwrap();
        let mut counts = std::collections::HashMap::new();
        for i in 0..20_000u64 {
            let x = (i % 2) as usize;
            let enc = codec.encode(x, u(5, i)).unwrap();
            let first = (1..)
                .find(|&j| derive(u(5, i), j, &half()).unwrap().0 == x)
                .unwrap();
            assert_eq!(enc.k, first);
            *counts.entry(enc.k).or_insert(0u64) += 1;
        }
        let h = probcore::empirical_entropy(counts.into_values());
        assert!((h - 2.0).abs() < 0.05, "H[K] = {h}");
    }

    #[test]
    fn budget_exhaustion() {
        let codec = PfrCodec::new(Channel::bsc(0.25).unwrap(), half())
            .unwrap()
            .with_budget(1);
        assert_eq!(
            codec.encode(0, u(1, 1)),
            Err(Error::BudgetExhausted { budget: 1 })
        );
        assert!(codec.encode(2, u(1, 1)).is_err());
    }

    #[test]
    fn entropy_given_seed_examples() {
        let m = half();
        let indep = Channel::constant(2, &m).unwrap();
        let id = Channel::identity(2).unwrap();
        for seed in 0..50 {
            assert_eq!(
                exact_index_entropy_given_seed(&indep, &m, &m, u(seed, 0)).unwrap(),
                0.0
            );
            assert_eq!(
                exact_index_entropy_given_seed(&id, &m, &m, u(seed, 0)).unwrap(),
                1.0
            );
        }
    }

    /// Reference scan without the stopping rule.
    fn scan(codec: &PfrCodec, x: usize, u: CommonRandomness, n: u64) -> u64 {
        let mut stream = CandidateStream::new(u, codec.marginal(), 1);
        let mut s = [0];
        let (mut best, mut k) = (f64::INFINITY, 0);
        for _ in 0..n {
            let (i, _, t) = stream.next_into(&mut s);
            let v = t * codec.weights(x)[s[0]];
            if v < best {
                best = v;
                k = i;
            }
        }
        k
    }

    #[test]
    fn stopping_rule_is_exact() {
        let src = Pmf::new(vec![0.5, 0.3, 0.2]).unwrap();
        let q = Channel::new(vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let codec = PfrCodec::for_source(q, &src).unwrap();
        for i in 0..3000u64 {
            let x = (i % 3) as usize;
            let enc = codec.encode(x, u(77, i)).unwrap();
            assert!(enc.k >= 1 && enc.k <= enc.candidates_examined);
            assert_eq!(
                enc.k,
                scan(&codec, x, u(77, i), 10 * enc.candidates_examined)
            );
        }
    }

    proptest! {
        #[test]
        fn decode_matches_selection(seed in any::<u64>(), sample in any::<u64>(), x in 0usize..2, eps in 0.01f64..0.49) {
            let codec = PfrCodec::new(Channel::bsc(eps).unwrap(), half()).unwrap();
            let enc = codec.encode(x, u(seed, sample)).unwrap();
            let trace = codec.trace(x, u(seed, sample)).unwrap();
            prop_assert_eq!(trace.len() as u64, enc.k);
            let last = trace.last().unwrap();
            prop_assert_eq!(codec.decode(enc.k, u(seed, sample)).unwrap(), last.symbol);
            prop_assert!(last.weight.is_finite());
            for w in trace.windows(2) {
                prop_assert!(w[1].epoch > w[0].epoch);
            }
        }
    }
}
