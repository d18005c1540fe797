//! Exact probability machinery on finite alphabets.
//!
//! Everything here is a pure function of validated inputs. All information
//! quantities are in bits and use the conventions `0 log 0 = 0` and
//! `0 log(0/0) = 0`. Nothing is ever renormalized behind the caller's back: a
//! vector that does not sum to one within [`PMF_TOLERANCE`] is rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a probability vector.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// A probability mass function over `0..len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs)?;
        Ok(Pmf { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Pmf {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, symbol: usize) -> Result<Self> {
        if symbol >= n {
            return Err(Error::InvalidArgument(format!(
                "symbol {symbol} outside alphabet of size {n}"
            )));
        }
        let mut probs = vec![0.0; n];
        probs[symbol] = 1.0;
        Ok(Pmf { probs })
    }

    /// `Bern(p)`: symbol 1 with probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Pmf::new(vec![1.0 - p, p])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(probs)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in probs.iter().enumerate() {
        // NaN fails this comparison too.
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::SumNotOne { sum });
    }
    Ok(())
}

/// Validates a probability vector without normalizing it.
pub fn validate_pmf(probs: &[f64]) -> Result<Pmf> {
    Pmf::new(probs.to_vec())
}

/// A row-stochastic matrix `rows[x][x̂] = Q(x̂ | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Channel {
    in_size: usize,
    out_size: usize,
    data: Vec<f64>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let in_size = rows.len();
        if in_size == 0 {
            return Err(Error::Empty);
        }
        let out_size = rows[0].len();
        let mut data = Vec::with_capacity(in_size * out_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != out_size {
                return Err(Error::DimensionMismatch(format!(
                    "channel row {x} has {} entries, expected {out_size}",
                    row.len()
                )));
            }
            check_distribution(row)?;
            data.extend_from_slice(row);
        }
        Ok(Channel {
            in_size,
            out_size,
            data,
        })
    }

    /// Builds a channel from a row-major buffer of `in_size * out_size` entries.
    pub fn from_flat(in_size: usize, out_size: usize, data: Vec<f64>) -> Result<Self> {
        if in_size == 0 || out_size == 0 {
            return Err(Error::Empty);
        }
        if data.len() != in_size * out_size {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {in_size}x{out_size} channel",
                data.len()
            )));
        }
        for row in data.chunks(out_size) {
            check_distribution(row)?;
        }
        Ok(Channel {
            in_size,
            out_size,
            data,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let rows = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Channel::new(rows)
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        Channel::new(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }

    /// Every input maps to the same output law, so `X̂` is independent of `X`.
    pub fn constant(in_size: usize, output: &Pmf) -> Result<Self> {
        Channel::new(vec![output.probs().to_vec(); in_size])
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.out_size..(x + 1) * self.out_size]
    }

    pub fn get(&self, x: usize, x_hat: usize) -> f64 {
        self.data[x * self.out_size + x_hat]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.out_size)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Channel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Channel::new(rows)
    }
}

impl From<Channel> for Vec<Vec<f64>> {
    fn from(c: Channel) -> Self {
        c.rows()
    }
}

/// Per-pair distortion `d[x][x̂] ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DistortionMatrix {
    in_size: usize,
    out_size: usize,
    data: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let in_size = rows.len();
        if in_size == 0 || rows[0].is_empty() {
            return Err(Error::Empty);
        }
        let out_size = rows[0].len();
        let mut data = Vec::with_capacity(in_size * out_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != out_size {
                return Err(Error::DimensionMismatch(format!(
                    "distortion row {x} has {} entries, expected {out_size}",
                    row.len()
                )));
            }
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "distortion d[{x}][{y}] = {v} must be finite and non-negative"
                    )));
                }
            }
            data.extend_from_slice(row);
        }
        Ok(DistortionMatrix {
            in_size,
            out_size,
            data,
        })
    }

    /// `d(x, x̂) = [x ≠ x̂]` on an `in_size × out_size` grid.
    pub fn hamming(in_size: usize, out_size: usize) -> Result<Self> {
        let rows = (0..in_size)
            .map(|x| {
                (0..out_size)
                    .map(|y| if x == y { 0.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        DistortionMatrix::new(rows)
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn get(&self, x: usize, x_hat: usize) -> f64 {
        self.data[x * self.out_size + x_hat]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.out_size)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DistortionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DistortionMatrix::new(rows)
    }
}

impl From<DistortionMatrix> for Vec<Vec<f64>> {
    fn from(d: DistortionMatrix) -> Self {
        d.rows()
    }
}

/// Divergence between the source law and the reconstruction law.
///
/// The first argument of every divergence is the reference (source) law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    #[serde(alias = "tv")]
    TotalVariation,
    /// `KL(P_X ‖ P_X̂)` in bits.
    #[serde(alias = "kl")]
    KullbackLeibler,
    /// Earth mover's distance on the real line: each alphabet carries a scalar
    /// value per symbol.
    #[serde(alias = "w1")]
    Wasserstein1Scalar {
        source_values: Vec<f64>,
        recon_values: Vec<f64>,
    },
}

impl DivergenceKind {
    /// W1 with the same scalar assignment on both alphabets.
    pub fn wasserstein1(values: Vec<f64>) -> Self {
        DivergenceKind::Wasserstein1Scalar {
            source_values: values.clone(),
            recon_values: values,
        }
    }

    fn check_sizes(&self, p_len: usize, q_len: usize) -> Result<()> {
        match self {
            DivergenceKind::TotalVariation | DivergenceKind::KullbackLeibler => {
                if p_len != q_len {
                    return Err(Error::DimensionMismatch(format!(
                        "divergence between alphabets of size {p_len} and {q_len}"
                    )));
                }
            }
            DivergenceKind::Wasserstein1Scalar {
                source_values,
                recon_values,
            } => {
                if source_values.len() != p_len || recon_values.len() != q_len {
                    return Err(Error::DimensionMismatch(format!(
                        "W1 value assignments of length {}/{} for alphabets {p_len}/{q_len}",
                        source_values.len(),
                        recon_values.len()
                    )));
                }
                if source_values
                    .iter()
                    .chain(recon_values)
                    .any(|v| !v.is_finite())
                {
                    return Err(Error::InvalidArgument("non-finite W1 value".into()));
                }
            }
        }
        Ok(())
    }
}

/// One constraint functional `D_i[P_{X,X̂}]` of the rate function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConstraintFunctional {
    /// `E[d(X, X̂)]`.
    Distortion { matrix: DistortionMatrix },
    /// `D[P_X, P_X̂]`.
    MarginalDivergence { divergence: DivergenceKind },
    /// `D[target, π(P_X̂)]` where `π` maps every reconstruction symbol to a
    /// symbol of a smaller alphabet. Product-alphabet problems use it to
    /// constrain the law of a single coordinate.
    ProjectedDivergence {
        divergence: DivergenceKind,
        target: Pmf,
        projection: Vec<usize>,
    },
}

/// A functional together with its threshold `θ_i`; `+∞` disables it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub functional: ConstraintFunctional,
    pub threshold: f64,
}

impl Constraint {
    pub fn new(functional: ConstraintFunctional, threshold: f64) -> Result<Self> {
        if threshold.is_nan() || threshold < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} must be non-negative"
            )));
        }
        Ok(Constraint {
            functional,
            threshold,
        })
    }

    pub fn distortion(matrix: DistortionMatrix, threshold: f64) -> Result<Self> {
        Constraint::new(ConstraintFunctional::Distortion { matrix }, threshold)
    }

    pub fn divergence(divergence: DivergenceKind, threshold: f64) -> Result<Self> {
        Constraint::new(
            ConstraintFunctional::MarginalDivergence { divergence },
            threshold,
        )
    }

    pub fn is_active(&self) -> bool {
        self.threshold.is_finite()
    }
}

/// Joint law `P(x, x̂)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub in_size: usize,
    pub out_size: usize,
    pub probs: Vec<f64>,
}

impl Joint {
    pub fn get(&self, x: usize, x_hat: usize) -> f64 {
        self.probs[x * self.out_size + x_hat]
    }
}

fn check_channel(source: &Pmf, q: &Channel) -> Result<()> {
    if source.len() != q.in_size() {
        return Err(Error::DimensionMismatch(format!(
            "source alphabet {} vs channel input size {}",
            source.len(),
            q.in_size()
        )));
    }
    Ok(())
}

/// `-Σ p log2 p`.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Plug-in entropy (bits) of the empirical law behind a histogram.
pub fn empirical_entropy<I>(counts: I) -> f64
where
    I: IntoIterator<Item = u64>,
{
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

pub fn push_joint(source: &Pmf, q: &Channel) -> Result<Joint> {
    check_channel(source, q)?;
    let mut probs = Vec::with_capacity(q.in_size() * q.out_size());
    for x in 0..q.in_size() {
        probs.extend(q.row(x).iter().map(|&w| source[x] * w));
    }
    Ok(Joint {
        in_size: q.in_size(),
        out_size: q.out_size(),
        probs,
    })
}

/// `P_X̂(x̂) = Σ_x P_X(x) Q(x̂|x)`.
pub fn marginal_recon(source: &Pmf, q: &Channel) -> Result<Pmf> {
    check_channel(source, q)?;
    Ok(Pmf {
        probs: recon_marginal_of(source.probs(), q.as_flat(), q.out_size()),
    })
}

pub(crate) fn recon_marginal_of(source: &[f64], rows: &[f64], out_size: usize) -> Vec<f64> {
    let mut r = vec![0.0; out_size];
    for (x, row) in rows.chunks(out_size).enumerate() {
        let px = source[x];
        if px == 0.0 {
            continue;
        }
        for (acc, &w) in r.iter_mut().zip(row) {
            *acc += px * w;
        }
    }
    r
}

/// `I[X; X̂]` in bits.
pub fn mutual_information(source: &Pmf, q: &Channel) -> Result<f64> {
    check_channel(source, q)?;
    Ok(mutual_information_of(
        source.probs(),
        q.as_flat(),
        q.out_size(),
    ))
}

pub(crate) fn mutual_information_of(source: &[f64], rows: &[f64], out_size: usize) -> f64 {
    let r = recon_marginal_of(source, rows, out_size);
    let mut acc = 0.0;
    for (x, row) in rows.chunks(out_size).enumerate() {
        let px = source[x];
        if px == 0.0 {
            continue;
        }
        for (y, &w) in row.iter().enumerate() {
            if w > 0.0 {
                acc += px * w * (w / r[y]).log2();
            }
        }
    }
    acc.max(0.0)
}

/// `E[d(X, X̂)]`.
pub fn expected_distortion(source: &Pmf, q: &Channel, d: &DistortionMatrix) -> Result<f64> {
    check_channel(source, q)?;
    if d.in_size() != q.in_size() || d.out_size() != q.out_size() {
        return Err(Error::DimensionMismatch(format!(
            "distortion is {}x{}, channel is {}x{}",
            d.in_size(),
            d.out_size(),
            q.in_size(),
            q.out_size()
        )));
    }
    Ok(expected_distortion_of(source.probs(), q.as_flat(), &d.data))
}

fn expected_distortion_of(source: &[f64], rows: &[f64], d: &[f64]) -> f64 {
    let out_size = rows.len() / source.len();
    rows.iter()
        .zip(d)
        .enumerate()
        .map(|(k, (&w, &dist))| source[k / out_size] * w * dist)
        .sum()
}

/// `D[p, q]` for the given kind. KL returns `+∞` when `q` misses part of the
/// support of `p`.
pub fn divergence(kind: &DivergenceKind, p: &Pmf, q: &Pmf) -> Result<f64> {
    kind.check_sizes(p.len(), q.len())?;
    Ok(divergence_of(kind, p.probs(), q.probs()))
}

fn divergence_of(kind: &DivergenceKind, p: &[f64], q: &[f64]) -> f64 {
    match kind {
        DivergenceKind::TotalVariation => {
            0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
        }
        DivergenceKind::KullbackLeibler => {
            let mut acc = 0.0;
            for (&a, &b) in p.iter().zip(q) {
                if a > 0.0 {
                    if b <= 0.0 {
                        return f64::INFINITY;
                    }
                    acc += a * (a / b).log2();
                }
            }
            acc.max(0.0)
        }
        DivergenceKind::Wasserstein1Scalar {
            source_values,
            recon_values,
        } => wasserstein1_of(source_values, p, recon_values, q),
    }
}

/// `∫ |F_p(z) − F_q(z)| dz` by sweeping the merged sorted support.
fn wasserstein1_of(p_values: &[f64], p: &[f64], q_values: &[f64], q: &[f64]) -> f64 {
    let sorted = |values: &[f64], mass: &[f64]| {
        let mut v: Vec<(f64, f64)> = values.iter().copied().zip(mass.iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let p = sorted(p_values, p);
    let q = sorted(q_values, q);
    // The two CDFs are accumulated separately so that identical inputs give
    // bit-identical CDFs and hence exactly zero.
    let mut breaks: Vec<f64> = p.iter().chain(&q).map(|e| e.0).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (mut i, mut j) = (0, 0);
    let (mut fp, mut fq) = (0.0, 0.0);
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        while i < p.len() && p[i].0 <= pair[0] {
            fp += p[i].1;
            i += 1;
        }
        while j < q.len() && q[j].0 <= pair[0] {
            fq += q[j].1;
            j += 1;
        }
        total += (fp - fq).abs() * (pair[1] - pair[0]);
    }
    total
}

/// Pushforward of `r` through `projection` onto an alphabet of `target_len`.
pub(crate) fn project(r: &[f64], projection: &[usize], target_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; target_len];
    for (&mass, &j) in r.iter().zip(projection) {
        out[j] += mass;
    }
    out
}

/// Checks that a functional is well-formed for a `in_size → out_size` channel.
pub fn check_functional(
    f: &ConstraintFunctional,
    source: &Pmf,
    in_size: usize,
    out_size: usize,
) -> Result<()> {
    match f {
        ConstraintFunctional::Distortion { matrix } => {
            if matrix.in_size() != in_size || matrix.out_size() != out_size {
                return Err(Error::DimensionMismatch(format!(
                    "distortion is {}x{}, channel is {in_size}x{out_size}",
                    matrix.in_size(),
                    matrix.out_size()
                )));
            }
        }
        ConstraintFunctional::MarginalDivergence { divergence } => {
            divergence.check_sizes(source.len(), out_size)?;
        }
        ConstraintFunctional::ProjectedDivergence {
            divergence,
            target,
            projection,
        } => {
            if projection.len() != out_size {
                return Err(Error::DimensionMismatch(format!(
                    "projection covers {} symbols, reconstruction alphabet has {out_size}",
                    projection.len()
                )));
            }
            if let Some(&bad) = projection.iter().find(|&&j| j >= target.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "projection image {bad} outside target alphabet of size {}",
                    target.len()
                )));
            }
            divergence.check_sizes(target.len(), target.len())?;
        }
    }
    Ok(())
}

/// Achieved value of one functional under `source × q`.
pub fn evaluate_functional(f: &ConstraintFunctional, source: &Pmf, q: &Channel) -> Result<f64> {
    check_channel(source, q)?;
    check_functional(f, source, q.in_size(), q.out_size())?;
    Ok(evaluate_functional_of(
        f,
        source.probs(),
        q.as_flat(),
        q.out_size(),
    ))
}

pub(crate) fn evaluate_functional_of(
    f: &ConstraintFunctional,
    source: &[f64],
    rows: &[f64],
    out_size: usize,
) -> f64 {
    match f {
        ConstraintFunctional::Distortion { matrix } => {
            expected_distortion_of(source, rows, &matrix.data)
        }
        ConstraintFunctional::MarginalDivergence { divergence } => {
            let r = recon_marginal_of(source, rows, out_size);
            divergence_of(divergence, source, &r)
        }
        ConstraintFunctional::ProjectedDivergence {
            divergence,
            target,
            projection,
        } => {
            let r = recon_marginal_of(source, rows, out_size);
            let reduced = project(&r, projection, target.len());
            divergence_of(divergence, target.probs(), &reduced)
        }
    }
}

/// Achieved values of each constraint, in order.
pub fn evaluate_constraints(source: &Pmf, q: &Channel, cs: &[Constraint]) -> Result<Vec<f64>> {
    cs.iter()
        .map(|c| evaluate_functional(&c.functional, source, q))
        .collect()
}
