//! The information rate function
//!
//! ```text
//! R(θ) = inf_{Q} I[X; X̂]  s.t.  D_i[P_{X,X̂}] ≤ θ_i  for all i
//! ```
//!
//! on finite alphabets, with the rate–distortion–perception function as the
//! two-constraint special case ([`rdpf`]).
//!
//! [`solve_irf`] treats the problem as a convex program over the rows of `Q`.
//! Phase I minimizes the largest constraint violation; if that minimum is
//! positive the problem is reported infeasible. Phase II follows the central
//! path of a log-barrier method whose duality-gap bound `m/t` is reported as
//! `gap_estimate`, so every returned rate comes with a certified lower bound.
//! Total-variation and W1 constraints enter through their epigraph (one
//! auxiliary variable per absolute value), distortions are linear, and KL is
//! kept as a smooth convex term.
//!
//! [`brute_force_irf`] is an independent grid oracle for alphabets of at most
//! three symbols.

mod barrier;
mod oracle;

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probcore::{
    self, Channel, Constraint, ConstraintFunctional, DistortionMatrix, DivergenceKind, Pmf,
};
use barrier::{Coordinate, Ineq, KlTerm, Limits, Objective, Program};

pub use oracle::{brute_force_irf, ORACLE_MAX_ALPHABET, ORACLE_MAX_GRID_POINTS};

/// Constraint slack accepted on a solution reported as [`SolveStatus::Optimal`].
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Phase I declares a problem infeasible once its certified minimum violation
/// exceeds this.
const INFEASIBILITY_MARGIN: f64 = 1e-8;

/// Problems whose best violation is within this of zero have no strictly
/// feasible point; they are solved with every threshold loosened by slightly
/// more than the observed violation.
const BOUNDARY_RELAXATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfProblem {
    source: Pmf,
    constraints: Vec<Constraint>,
    recon_alphabet_size: usize,
}

impl IrfProblem {
    /// `recon_alphabet_size` defaults to the source alphabet size.
    pub fn new(
        source: Pmf,
        constraints: Vec<Constraint>,
        recon_alphabet_size: Option<usize>,
    ) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidArgument(
                "a rate function needs at least one constraint".into(),
            ));
        }
        let recon_alphabet_size = recon_alphabet_size.unwrap_or(source.len());
        if recon_alphabet_size == 0 {
            return Err(Error::InvalidArgument(
                "reconstruction alphabet must be non-empty".into(),
            ));
        }
        for c in &constraints {
            probcore::check_functional(&c.functional, &source, source.len(), recon_alphabet_size)?;
            if c.threshold.is_nan() || c.threshold < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "threshold {} must be non-negative",
                    c.threshold
                )));
            }
        }
        Ok(IrfProblem {
            source,
            constraints,
            recon_alphabet_size,
        })
    }

    pub fn source(&self) -> &Pmf {
        &self.source
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn recon_alphabet_size(&self) -> usize {
        self.recon_alphabet_size
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.threshold).collect()
    }

    /// Same functionals, new thresholds.
    pub fn with_thresholds(&self, thresholds: &[f64]) -> Result<Self> {
        if thresholds.len() != self.constraints.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} thresholds for {} constraints",
                thresholds.len(),
                self.constraints.len()
            )));
        }
        let constraints = self
            .constraints
            .iter()
            .zip(thresholds)
            .map(|(c, &t)| Constraint::new(c.functional.clone(), t))
            .collect::<Result<_>>()?;
        IrfProblem::new(
            self.source.clone(),
            constraints,
            Some(self.recon_alphabet_size),
        )
    }

    /// Achieved value of every constraint under `q`.
    pub fn evaluate(&self, q: &Channel) -> Result<Vec<f64>> {
        probcore::evaluate_constraints(&self.source, q, &self.constraints)
    }

    fn max_excess(&self, achieved: &[f64]) -> f64 {
        self.constraints
            .iter()
            .zip(achieved)
            .filter(|(c, _)| c.is_active())
            .map(|(c, &a)| a - c.threshold)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIterations => "max_iterations",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfSolution {
    /// Mutual information of `channel` in bits; `+∞` when infeasible.
    pub rate_bits: f64,
    pub channel: Channel,
    /// Achieved `D_i` under `channel`, in constraint order.
    pub achieved: Vec<f64>,
    pub status: SolveStatus,
    /// `rate_bits` minus a certified lower bound on `R(θ)`. `NaN` for the grid
    /// oracle, which carries no such bound.
    pub gap_estimate: f64,
}

impl IrfSolution {
    pub fn lower_bound_bits(&self) -> f64 {
        self.rate_bits - self.gap_estimate
    }

    /// Turns a non-optimal status into the matching error.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible {
                violation: self.achieved.iter().copied().fold(0.0, f64::max),
            }),
            SolveStatus::MaxIterations => Err(Error::MaxIterations),
        }
    }
}

/// `I[X; X̂]` in nats as a function of the flattened channel, which occupies
/// the first `m·n` coordinates.
struct MutualInformation<'a> {
    source: &'a [f64],
    out_size: usize,
}

impl MutualInformation<'_> {
    fn len(&self) -> usize {
        self.source.len() * self.out_size
    }

    fn recon(&self, z: &[f64]) -> Vec<f64> {
        probcore::recon_marginal_of(self.source, &z[..self.len()], self.out_size)
    }
}

impl Objective for MutualInformation<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let n = self.out_size;
        let r = self.recon(z);
        let mut acc = 0.0;
        for (x, &px) in self.source.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for y in 0..n {
                let w = z[x * n + y];
                if w > 0.0 {
                    acc += px * w * (w / r[y]).ln();
                }
            }
        }
        acc
    }

    fn add_grad_hess(&self, z: &[f64], scale: f64, g: &mut [f64], h: &mut DMatrix<f64>) {
        let n = self.out_size;
        let r = self.recon(z);
        for (x, &px) in self.source.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for y in 0..n {
                let i = x * n + y;
                let w = z[i];
                g[i] += scale * px * (w / r[y]).ln();
                h[(i, i)] += scale * px / w;
                for (x2, &px2) in self.source.iter().enumerate() {
                    if px2 != 0.0 {
                        h[(i, x2 * n + y)] -= scale * px * px2 / r[y];
                    }
                }
            }
        }
    }
}

/// Weighted absolute values `Σ_j weight_j |⟨form_j, Q⟩ − offset_j|` behind TV
/// and W1 constraints.
struct AbsPieces {
    pieces: Vec<(f64, Vec<f64>, f64)>,
}

/// Linear forms `Q ↦ r_k` for the (possibly projected) reconstruction law.
fn recon_forms(
    source: &[f64],
    out_size: usize,
    projection: Option<&[usize]>,
    len: usize,
) -> Vec<Vec<f64>> {
    let q_len = source.len() * out_size;
    let mut forms = vec![vec![0.0; q_len]; len];
    for (x, &px) in source.iter().enumerate() {
        for y in 0..out_size {
            let k = projection.map_or(y, |p| p[y]);
            forms[k][x * out_size + y] += px;
        }
    }
    forms
}

fn divergence_pieces(kind: &DivergenceKind, target: &[f64], forms: &[Vec<f64>]) -> AbsPieces {
    match kind {
        DivergenceKind::TotalVariation => AbsPieces {
            pieces: forms
                .iter()
                .zip(target)
                .map(|(f, &t)| (0.5, f.clone(), t))
                .collect(),
        },
        DivergenceKind::Wasserstein1Scalar {
            source_values,
            recon_values,
        } => {
            let mut breaks: Vec<f64> = source_values.iter().chain(recon_values).copied().collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let q_len = forms.first().map_or(0, Vec::len);
            let pieces = breaks
                .windows(2)
                .map(|w| {
                    let (z, gap) = (w[0], w[1] - w[0]);
                    let offset: f64 = source_values
                        .iter()
                        .zip(target)
                        .filter(|(&v, _)| v <= z)
                        .map(|(_, &t)| t)
                        .sum();
                    let mut form = vec![0.0; q_len];
                    for (f, _) in forms.iter().zip(recon_values).filter(|(_, &v)| v <= z) {
                        for (a, b) in form.iter_mut().zip(f) {
                            *a += b;
                        }
                    }
                    (gap, form, offset)
                })
                .filter(|(gap, _, _)| *gap > 0.0)
                .collect();
            AbsPieces { pieces }
        }
        DivergenceKind::KullbackLeibler => unreachable!("KL is not piecewise linear"),
    }
}

struct Compiled {
    program: Program,
    q_len: usize,
    start: Vec<f64>,
}

fn pad(mut v: Vec<f64>, dim: usize) -> Vec<f64> {
    v.resize(dim, 0.0);
    v
}

/// Lowers a problem to barrier form. Inactive (`+∞`) constraints are dropped.
fn compile(problem: &IrfProblem) -> Result<Compiled> {
    let source = problem.source.probs();
    let m = source.len();
    let n = problem.recon_alphabet_size;
    let q_len = m * n;

    enum Lowered {
        Linear(Vec<f64>, f64),
        Abs(AbsPieces, f64),
        Kl(Vec<Vec<f64>>, Vec<f64>, f64),
    }

    let mut lowered = Vec::new();
    for c in problem.constraints.iter().filter(|c| c.is_active()) {
        let theta = c.threshold;
        let (kind, target, forms) = match &c.functional {
            ConstraintFunctional::Distortion { matrix } => {
                let mut lin = vec![0.0; q_len];
                for (x, &px) in source.iter().enumerate() {
                    for y in 0..n {
                        lin[x * n + y] = px * matrix.get(x, y);
                    }
                }
                lowered.push(Lowered::Linear(lin, theta));
                continue;
            }
            ConstraintFunctional::MarginalDivergence { divergence } => {
                (divergence, source.to_vec(), recon_forms(source, n, None, n))
            }
            ConstraintFunctional::ProjectedDivergence {
                divergence,
                target,
                projection,
            } => (
                divergence,
                target.probs().to_vec(),
                recon_forms(source, n, Some(projection), target.len()),
            ),
        };
        match kind {
            DivergenceKind::KullbackLeibler => {
                if forms
                    .iter()
                    .zip(&target)
                    .any(|(f, &t)| t > 0.0 && f.iter().all(|&a| a == 0.0))
                {
                    // Some target mass can never be covered: KL is +∞ for every channel.
                    return Err(Error::Infeasible {
                        violation: f64::INFINITY,
                    });
                }
                lowered.push(Lowered::Kl(forms, target, theta));
            }
            _ => lowered.push(Lowered::Abs(
                divergence_pieces(kind, &target, &forms),
                theta,
            )),
        }
    }

    let aux: usize = lowered
        .iter()
        .map(|l| match l {
            Lowered::Abs(p, _) => p.pieces.len(),
            _ => 0,
        })
        .sum();
    let dim = q_len + aux;

    let mut start = vec![1.0 / n as f64; q_len];
    let mut ineqs = Vec::new();
    for k in 0..q_len {
        let mut lin = vec![0.0; dim];
        lin[k] = -1.0;
        ineqs.push(Ineq {
            lin,
            rhs: 0.0,
            kl: None,
            relaxable: false,
        });
    }
    let mut next_aux = q_len;
    let mut aux_start = Vec::with_capacity(aux);
    for l in lowered {
        match l {
            Lowered::Linear(lin, theta) => ineqs.push(Ineq {
                lin: pad(lin, dim),
                rhs: theta,
                kl: None,
                relaxable: true,
            }),
            Lowered::Abs(pieces, theta) => {
                let mut total = vec![0.0; dim];
                for (weight, form, offset) in pieces.pieces {
                    let a = next_aux;
                    next_aux += 1;
                    let at_start: f64 = form.iter().zip(&start).map(|(f, z)| f * z).sum();
                    aux_start.push((at_start - offset).abs() + 1e-3);
                    // ±(⟨form, Q⟩ − offset) ≤ t_a
                    let mut up = pad(form.clone(), dim);
                    up[a] = -1.0;
                    ineqs.push(Ineq {
                        lin: up,
                        rhs: offset,
                        kl: None,
                        relaxable: true,
                    });
                    let mut down: Vec<f64> = pad(form.iter().map(|v| -v).collect(), dim);
                    down[a] = -1.0;
                    ineqs.push(Ineq {
                        lin: down,
                        rhs: -offset,
                        kl: None,
                        relaxable: true,
                    });
                    total[a] = weight;
                }
                ineqs.push(Ineq {
                    lin: total,
                    rhs: theta,
                    kl: None,
                    relaxable: true,
                });
            }
            Lowered::Kl(forms, target, theta) => ineqs.push(Ineq {
                lin: vec![0.0; dim],
                rhs: theta,
                kl: Some(KlTerm {
                    forms: forms.into_iter().map(|f| pad(f, dim)).collect(),
                    target,
                    scale: 1.0 / LN_2,
                }),
                relaxable: true,
            }),
        }
    }
    start.extend(aux_start);

    let mut eq = DMatrix::zeros(m, dim);
    for x in 0..m {
        for y in 0..n {
            eq[(x, x * n + y)] = 1.0;
        }
    }
    Ok(Compiled {
        program: Program {
            dim,
            ineqs,
            eq,
            eq_rhs: vec![1.0; m],
        },
        q_len,
        start,
    })
}

fn channel_from(z: &[f64], m: usize, n: usize) -> Result<Channel> {
    let mut data = z[..m * n].to_vec();
    for row in data.chunks_mut(n) {
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    Channel::from_flat(m, n, data)
}

fn finish(
    problem: &IrfProblem,
    channel: Channel,
    lower_bound: f64,
    status: SolveStatus,
) -> Result<IrfSolution> {
    let achieved = problem.evaluate(&channel)?;
    let rate_bits = probcore::mutual_information(&problem.source, &channel)?;
    Ok(IrfSolution {
        rate_bits,
        channel,
        achieved,
        status,
        gap_estimate: (rate_bits - lower_bound).max(0.0),
    })
}

/// Moves `q` toward the feasible channel `fallback` until every constraint
/// holds within [`FEASIBILITY_TOLERANCE`].
fn polish(problem: &IrfProblem, q: &Channel, fallback: &Channel) -> Result<Channel> {
    let excess = |c: &Channel| -> Result<f64> { Ok(problem.max_excess(&problem.evaluate(c)?)) };
    if excess(q)? <= FEASIBILITY_TOLERANCE {
        return Ok(q.clone());
    }
    let mix = |lambda: f64| {
        let data: Vec<f64> = q
            .as_flat()
            .iter()
            .zip(fallback.as_flat())
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        channel_from(&data, q.in_size(), q.out_size())
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(&mix(mid)?)? <= FEASIBILITY_TOLERANCE {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mix(lo)
}

/// ε-optimal solution of the rate function.
///
/// `tol` is the target for `gap_estimate` in bits. Infeasibility and iteration
/// caps are reported through [`IrfSolution::status`]; errors are reserved for
/// malformed input.
pub fn solve_irf(problem: &IrfProblem, tol: f64) -> Result<IrfSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let m = problem.source.len();
    let n = problem.recon_alphabet_size;
    let compiled = match compile(problem) {
        Ok(c) => c,
        Err(Error::Infeasible { .. }) => {
            let channel = channel_from(&vec![1.0; m * n], m, n)?;
            let mut sol = finish(problem, channel, f64::INFINITY, SolveStatus::Infeasible)?;
            sol.rate_bits = f64::INFINITY;
            sol.gap_estimate = 0.0;
            return Ok(sol);
        }
        Err(e) => return Err(e),
    };
    let Compiled {
        program,
        q_len,
        start,
    } = compiled;
    let limits = Limits::default();

    // Phase I: minimize the largest violation s.
    let mut z = start;
    let mut relax = 0.0;
    let initial_violation = program.max_violation(&z);
    if initial_violation >= -1e-6 {
        let phase1 = program.with_slack();
        let s = program.dim;
        let mut z1 = z.clone();
        z1.push(initial_violation.max(0.0) + 1.0);
        let out = phase1.solve(&Coordinate(s), z1, 1.0, 1e-11, limits, |z, gap| {
            z[s] < -1e-6 || z[s] - gap > INFEASIBILITY_MARGIN
        });
        z = out.z[..program.dim].to_vec();
        let violation = program.max_violation(&z);
        let certified = out.z[s] - out.gap;
        if certified > INFEASIBILITY_MARGIN {
            let channel = channel_from(&z, m, n)?;
            let mut sol = finish(problem, channel, f64::INFINITY, SolveStatus::Infeasible)?;
            sol.rate_bits = f64::INFINITY;
            sol.gap_estimate = 0.0;
            return Ok(sol);
        }
        if violation > INFEASIBILITY_MARGIN {
            let channel = channel_from(&z, m, n)?;
            return finish(problem, channel, 0.0, SolveStatus::MaxIterations);
        }
        if violation >= -BOUNDARY_RELAXATION {
            relax = violation.max(0.0) + BOUNDARY_RELAXATION;
        }
    }
    let feasible_point = channel_from(&z, m, n)?;

    // Phase II on the (possibly loosened) program.
    let mut program = program;
    for q in program.ineqs.iter_mut().filter(|q| q.relaxable) {
        q.rhs += relax;
    }
    let objective = MutualInformation {
        source: problem.source.probs(),
        out_size: n,
    };
    debug_assert_eq!(objective.len(), q_len);
    let i0 = objective.value(&z).max(1e-2);
    let t0 = program.ineqs.len() as f64 / i0;
    // One path step past the target, so a stalled final centering still
    // leaves a certified gap within `tol` from the one before it.
    let out = program.solve(&objective, z, t0, tol * LN_2 / limits.mu, limits, |_, _| {
        false
    });
    let lower_bound = (objective.value(&out.z) - out.gap) / LN_2;

    let channel = polish(problem, &channel_from(&out.z, m, n)?, &feasible_point)?;
    let mut sol = finish(problem, channel, lower_bound, SolveStatus::Optimal)?;
    let feasible = problem.max_excess(&sol.achieved) <= FEASIBILITY_TOLERANCE;
    if !feasible || sol.gap_estimate.is_nan() || sol.gap_estimate > tol {
        sol.status = SolveStatus::MaxIterations;
    }
    Ok(sol)
}

/// `R(θ_d, θ_D)`: distortion bound plus a divergence bound between the source
/// and reconstruction laws. Either threshold may be `+∞`.
pub fn rdpf(
    source: &Pmf,
    d: &DistortionMatrix,
    kind: &DivergenceKind,
    theta_d: f64,
    theta_div: f64,
    tol: f64,
) -> Result<IrfSolution> {
    let problem = rdpf_problem(source, d, kind, theta_d, theta_div)?;
    solve_irf(&problem, tol)
}

pub fn rdpf_problem(
    source: &Pmf,
    d: &DistortionMatrix,
    kind: &DivergenceKind,
    theta_d: f64,
    theta_div: f64,
) -> Result<IrfProblem> {
    IrfProblem::new(
        source.clone(),
        vec![
            Constraint::distortion(d.clone(), theta_d)?,
            Constraint::divergence(kind.clone(), theta_div)?,
        ],
        Some(d.out_size()),
    )
}

/// The `copies`-fold i.i.d. extension of a problem with every constraint
/// imposed on each coordinate separately. Symbols of the product alphabet are
/// mixed-radix with coordinate 0 most significant.
pub fn iid_extension(problem: &IrfProblem, copies: usize) -> Result<IrfProblem> {
    if copies == 0 {
        return Err(Error::InvalidArgument("at least one copy".into()));
    }
    let m = problem.source.len();
    let n = problem.recon_alphabet_size;
    let big_m = m.checked_pow(copies as u32).filter(|&v| v <= 1 << 12);
    let big_n = n.checked_pow(copies as u32).filter(|&v| v <= 1 << 12);
    let (Some(big_m), Some(big_n)) = (big_m, big_n) else {
        return Err(Error::TooLarge(format!(
            "{copies} copies of a {m}x{n} problem"
        )));
    };
    let digit = |mut v: usize, radix: usize, coord: usize| {
        for _ in 0..(copies - 1 - coord) {
            v /= radix;
        }
        v % radix
    };
    let source: Vec<f64> = (0..big_m)
        .map(|v| {
            (0..copies)
                .map(|c| problem.source[digit(v, m, c)])
                .product()
        })
        .collect();
    // The product of pmfs summing to one can drift by an ulp or two.
    let total: f64 = source.iter().sum();
    let source = Pmf::new(source.iter().map(|p| p / total).collect())?;

    let mut constraints = Vec::new();
    for coord in 0..copies {
        for c in &problem.constraints {
            let functional = match &c.functional {
                ConstraintFunctional::Distortion { matrix } => {
                    let rows = (0..big_m)
                        .map(|x| {
                            (0..big_n)
                                .map(|y| matrix.get(digit(x, m, coord), digit(y, n, coord)))
                                .collect()
                        })
                        .collect();
                    ConstraintFunctional::Distortion {
                        matrix: DistortionMatrix::new(rows)?,
                    }
                }
                ConstraintFunctional::MarginalDivergence { divergence } => {
                    if let DivergenceKind::Wasserstein1Scalar {
                        source_values,
                        recon_values,
                    } = divergence
                    {
                        if source_values != recon_values {
                            return Err(Error::InvalidArgument(
                                "per-coordinate W1 needs a shared value assignment".into(),
                            ));
                        }
                    }
                    ConstraintFunctional::ProjectedDivergence {
                        divergence: divergence.clone(),
                        target: problem.source.clone(),
                        projection: (0..big_n).map(|y| digit(y, n, coord)).collect(),
                    }
                }
                ConstraintFunctional::ProjectedDivergence {
                    divergence,
                    target,
                    projection,
                } => ConstraintFunctional::ProjectedDivergence {
                    divergence: divergence.clone(),
                    target: target.clone(),
                    projection: (0..big_n).map(|y| projection[digit(y, n, coord)]).collect(),
                },
            };
            constraints.push(Constraint::new(functional, c.threshold)?);
        }
    }
    IrfProblem::new(source, constraints, Some(big_n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub theta_d: f64,
    pub theta_div: f64,
    pub solution: std::result::Result<IrfSolution, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    /// Row-major: `theta_d` outer, `theta_div` inner.
    pub cells: Vec<SweepCell>,
    /// Monotonicity violations beyond [`FEASIBILITY_TOLERANCE`].
    pub warnings: Vec<String>,
}

/// Solves the RDPF on every `(θ_d, θ_D)` pair of the two grids.
pub fn sweep_surface(
    source: &Pmf,
    d: &DistortionMatrix,
    kind: &DivergenceKind,
    theta_d_grid: &[f64],
    theta_div_grid: &[f64],
    tol: f64,
) -> Result<SweepTable> {
    if theta_d_grid.is_empty() || theta_div_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep grids must be non-empty".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = theta_d_grid
        .iter()
        .flat_map(|&a| theta_div_grid.iter().map(move |&b| (a, b)))
        .collect();
    let cells: Vec<SweepCell> = pairs
        .par_iter()
        .map(|&(theta_d, theta_div)| SweepCell {
            theta_d,
            theta_div,
            solution: rdpf(source, d, kind, theta_d, theta_div, tol).map_err(|e| e.to_string()),
        })
        .collect();

    let mut warnings = Vec::new();
    for a in &cells {
        for b in &cells {
            let (Ok(sa), Ok(sb)) = (&a.solution, &b.solution) else {
                continue;
            };
            if sa.status != SolveStatus::Optimal || sb.status != SolveStatus::Optimal {
                continue;
            }
            let dominates = b.theta_d >= a.theta_d && b.theta_div >= a.theta_div;
            if dominates && sb.rate_bits > sa.rate_bits + FEASIBILITY_TOLERANCE {
                warnings.push(format!(
                    "rate {} at ({}, {}) exceeds {} at ({}, {})",
                    sb.rate_bits, b.theta_d, b.theta_div, sa.rate_bits, a.theta_d, a.theta_div
                ));
            }
        }
    }
    Ok(SweepTable { cells, warnings })
}
