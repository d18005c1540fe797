//! The Poisson functional representation on blocks of `N` i.i.d. symbols.
//!
//! Candidates are vectors with i.i.d. coordinates from the base marginal, the
//! weight of a candidate is the product of per-coordinate density ratios, and
//! the stopping rule uses the product of per-coordinate minimal ratios. The
//! selected vector has law `∏_n Q(· | x_n)`.

use crate::error::{Error, Result};
use crate::pfr::{self, CandidateStream, CommonRandomness, PfrCodec, PfrEncoding};
use crate::probcore::{Channel, Pmf};

/// Hard ceiling on the scaled block budget.
pub const BLOCK_BUDGET_CAP: u64 = 1 << 32;

/// `N · log2(1 / w_min)` above which the search is expected to be slow.
pub const BUDGET_WARNING_BITS: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct BlockProblem {
    n: usize,
    source: Pmf,
    codec: PfrCodec,
}

impl BlockProblem {
    /// Block code for `channel` with the marginal induced by `source`.
    pub fn new(n: usize, channel: Channel, source: Pmf) -> Result<Self> {
        let codec = PfrCodec::for_source(channel, &source)?;
        Self::from_codec(n, codec, source)
    }

    /// Block code with an explicit reconstruction marginal.
    pub fn with_marginal(n: usize, channel: Channel, source: Pmf, marginal: Pmf) -> Result<Self> {
        Self::from_codec(n, PfrCodec::new(channel, marginal)?, source)
    }

    fn from_codec(n: usize, codec: PfrCodec, source: Pmf) -> Result<Self> {
        if n == 0 || n > usize::from(u16::MAX) {
            return Err(Error::InvalidArgument(format!(
                "block size {n} must lie in 1..={}",
                u16::MAX
            )));
        }
        if source.len() != codec.channel().in_size() {
            return Err(Error::DimensionMismatch(format!(
                "source has {} symbols but the channel has {} inputs",
                source.len(),
                codec.channel().in_size()
            )));
        }
        Ok(BlockProblem { n, source, codec })
    }

    /// Per-symbol candidate budget; the block search may draw up to
    /// `budget · 2^N` candidates, capped at [`BLOCK_BUDGET_CAP`].
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.codec = self.codec.with_budget(budget);
        self
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> &Pmf {
        &self.source
    }

    pub fn channel(&self) -> &Channel {
        self.codec.channel()
    }

    pub fn marginal(&self) -> &Pmf {
        self.codec.marginal()
    }

    pub fn block_budget(&self) -> u64 {
        let scale = 1u64.checked_shl(self.n as u32).unwrap_or(u64::MAX);
        self.codec
            .budget()
            .saturating_mul(scale)
            .min(BLOCK_BUDGET_CAP)
    }

    /// Smallest per-symbol `w_min` over inputs of positive probability.
    pub fn worst_min_weight(&self) -> f64 {
        self.source
            .support()
            .map(|x| self.codec.min_weight(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// A message when `N · log2(1 / w_min)` exceeds [`BUDGET_WARNING_BITS`].
    pub fn budget_warning(&self) -> Option<String> {
        let bits = self.n as f64 * -self.worst_min_weight().log2();
        (bits > BUDGET_WARNING_BITS).then(|| {
            format!(
                "block size {} gives product w_min = 2^-{bits:.1}; the candidate search may exhaust its budget",
                self.n
            )
        })
    }
}

pub fn encode_block(x: &[usize], bp: &BlockProblem, u: CommonRandomness) -> Result<PfrEncoding> {
    if x.len() != bp.n {
        return Err(Error::DimensionMismatch(format!(
            "block of length {} for block size {}",
            x.len(),
            bp.n
        )));
    }
    let mut w_min = 1.0;
    for &xi in x {
        bp.codec.check_symbol(xi)?;
        w_min *= bp.codec.min_weight(xi);
    }
    let codec = &bp.codec;
    pfr::search(
        CandidateStream::new(u, codec.marginal(), bp.n),
        bp.n,
        |cand| {
            x.iter()
                .zip(cand)
                .fold(1.0, |acc, (&xi, &yi)| acc * codec.weights(xi)[yi])
        },
        w_min,
        bp.block_budget(),
    )
}

/// The `k`-th candidate vector.
pub fn decode_block(k: u64, bp: &BlockProblem, u: CommonRandomness) -> Result<Vec<usize>> {
    Ok(pfr::derive_vector(u, k, bp.marginal(), bp.n)?.0)
}

/// Per-symbol rate bound `R + log2(N·R + 2)/N + 5/N` in bits.
pub fn theorem3_bound(n: usize, rate: f64) -> f64 {
    let n = n as f64;
    rate + (n * rate + 2.0).log2() / n + 5.0 / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn u(seed: u64, i: u64) -> CommonRandomness {
        CommonRandomness::new(seed, i)
    }

    fn bsc_problem(n: usize) -> BlockProblem {
        BlockProblem::new(n, Channel::bsc(0.25).unwrap(), Pmf::uniform(2).unwrap()).unwrap()
    }

    #[test]
    fn bound_values() {
        let r = 0.188_721_875_540_867;
        assert_abs_diff_eq!(
            theorem3_bound(1, r),
            r + (r + 2.0).log2() + 5.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(theorem3_bound(1, r), 6.319, epsilon = 1e-3);
        assert_abs_diff_eq!(theorem3_bound(4, r), 1.804, epsilon = 1e-3);
        let seq: Vec<f64> = [1, 2, 4, 8, 16, 64, 1024, 1 << 20]
            .iter()
            .map(|&n| theorem3_bound(n, r))
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(seq.last().unwrap() - r < 1e-4);
    }

    #[test]
    fn single_symbol_blocks_match_scalar_code() {
        let src = Pmf::new(vec![0.6, 0.4]).unwrap();
        let q = Channel::new(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let bp = BlockProblem::new(1, q.clone(), src.clone()).unwrap();
        let codec = PfrCodec::for_source(q, &src).unwrap();
        for i in 0..2000u64 {
            let x = (i % 2) as usize;
            let a = encode_block(&[x], &bp, u(3, i)).unwrap();
            let b = codec.encode(x, u(3, i)).unwrap();
            assert_eq!(a, b);
            assert_eq!(
                decode_block(a.k, &bp, u(3, i)).unwrap(),
                vec![codec.decode(b.k, u(3, i)).unwrap()]
            );
        }
    }

    #[test]
    fn independent_channel_selects_first() {
        let m = Pmf::uniform(2).unwrap();
        for n in [1, 3, 8] {
            let bp = BlockProblem::new(n, Channel::constant(2, &m).unwrap(), m.clone()).unwrap();
            for i in 0..50u64 {
                let x: Vec<usize> = (0..n).map(|j| ((i >> j) & 1) as usize).collect();
                assert_eq!(encode_block(&x, &bp, u(1, i)).unwrap().k, 1);
            }
        }
    }

    #[test]
    fn roundtrip_and_determinism() {
        let bp = bsc_problem(4);
        for i in 0..1000u64 {
            let x: Vec<usize> = (0..4).map(|j| (((i * 7) >> j) & 1) as usize).collect();
            let enc = encode_block(&x, &bp, u(8, i)).unwrap();
            let y = decode_block(enc.k, &bp, u(8, i)).unwrap();
            assert_eq!(y, decode_block(enc.k, &bp, u(8, i)).unwrap());
            assert_eq!(y.len(), 4);
        }
    }

    #[test]
    fn per_coordinate_law() {
        let n = 4;
        let bp = bsc_problem(n);
        let blocks = 20_000u64;
        // flips[j][x] = (count of x at coordinate j, count decoded as 1 - x)
        let mut flips = vec![[(0u64, 0u64); 2]; n];
        for i in 0..blocks {
            let x: Vec<usize> = (0..n)
                .map(|j| ((i.wrapping_mul(0x9e37_79b9) >> (j + 5)) & 1) as usize)
                .collect();
            let enc = encode_block(&x, &bp, u(21, i)).unwrap();
            let y = decode_block(enc.k, &bp, u(21, i)).unwrap();
            for j in 0..n {
                let e = &mut flips[j][x[j]];
                e.0 += 1;
                e.1 += u64::from(y[j] != x[j]);
            }
        }
        for coord in &flips {
            for &(total, flipped) in coord {
                let rate = flipped as f64 / total as f64;
                assert!((rate - 0.25).abs() <= 0.02, "flip rate {rate}");
            }
        }
    }

    #[test]
    fn validation_and_budget() {
        let m = Pmf::uniform(2).unwrap();
        assert!(BlockProblem::new(0, Channel::bsc(0.1).unwrap(), m.clone()).is_err());
        let bp = bsc_problem(3);
        assert!(matches!(
            encode_block(&[0, 1], &bp, u(0, 0)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(encode_block(&[0, 1, 2], &bp, u(0, 0)).is_err());
        assert_eq!(bp.clone().with_budget(5).block_budget(), 40);
        assert_eq!(
            bp.clone().with_budget(u64::MAX).block_budget(),
            BLOCK_BUDGET_CAP
        );
        let tight = bp.with_budget(0);
        assert_eq!(
            encode_block(&[0, 1, 0], &tight, u(0, 0)),
            Err(Error::BudgetExhausted { budget: 0 })
        );
        assert!(bsc_problem(8).budget_warning().is_none());
        let skewed = BlockProblem::new(
            8,
            Channel::identity(2).unwrap(),
            Pmf::new(vec![0.99, 0.01]).unwrap(),
        )
        .unwrap();
        assert!(skewed.budget_warning().is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn decoded_candidate_has_finite_weight(
            seed in any::<u64>(),
            sample in any::<u64>(),
            bits in any::<u8>(),
            eps in 0.05f64..0.45,
        ) {
            let n = 5;
            let bp = BlockProblem::new(n, Channel::bsc(eps).unwrap(), Pmf::uniform(2).unwrap()).unwrap();
            let x: Vec<usize> = (0..n).map(|j| ((bits >> j) & 1) as usize).collect();
            let enc = encode_block(&x, &bp, u(seed, sample)).unwrap();
            prop_assert!(enc.k >= 1 && enc.k < enc.candidates_examined);
            prop_assert_eq!(decode_block(enc.k, &bp, u(seed, sample)).unwrap().len(), n);
        }
    }
}
