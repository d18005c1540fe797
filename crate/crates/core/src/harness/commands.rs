use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::report::{num, nums, Check, VerificationReport};
use super::{source_symbols, CommandOutput, ExitStatus, HarnessError};
use crate::bitcode;
use crate::blockcode::{self, BlockProblem};
use crate::error::Error;
use crate::irf::{self, IrfProblem, IrfSolution, SolveStatus};
use crate::pfr::{self, CommonRandomness, PfrCodec};
use crate::probcore::{self, Channel, ConstraintFunctional, DivergenceKind, Pmf};

/// Per-input conditional-law tolerance for scalar channel simulation.
pub const THM1_TV_TOLERANCE: f64 = 0.01;
/// Per-coordinate conditional-law tolerance for block codes.
pub const THM3_TV_TOLERANCE: f64 = 0.02;
/// Allowed increase of `H[K_N]/N` between successive block sizes.
pub const TREND_TOLERANCE: f64 = 0.05;
/// Required per-symbol gain from `N = 1` to `N = 8`.
pub const TREND_GAIN: f64 = 0.3;
/// Slack on converse checks against the grid oracle.
pub const CONVERSE_SLACK: f64 = 1e-2;
/// Additive constant of the index entropy bound.
const ENTROPY_BOUND_CONSTANT: f64 = 4.0;
/// Additive constant of the Elias-delta rate bound.
const RATE_BOUND_CONSTANT: f64 = 6.0;
/// Grid size limit for the converse oracle.
const CONVERSE_GRID_POINTS: u64 = 50_000_000;
/// Largest block size `verify-thm3` accepts.
const MAX_VERIFY_BLOCK: usize = 8;

fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::new(ExitStatus::Config, msg)
}

fn u(seed: u64, index: u64) -> CommonRandomness {
    CommonRandomness::new(seed, index)
}

fn budget(cfg: &ExperimentConfig) -> u64 {
    cfg.budget.unwrap_or(pfr::DEFAULT_BUDGET)
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

fn solution_json(sol: &IrfSolution) -> Value {
    json!({
        "rate_bits": num(sol.rate_bits),
        "achieved": nums(&sol.achieved),
        "status": sol.status.to_string(),
        "gap_estimate": num(sol.gap_estimate),
        "lower_bound_bits": num(sol.lower_bound_bits()),
        "channel": sol.channel.rows(),
    })
}

fn solve_optimal(problem: &IrfProblem, tol: f64) -> Result<IrfSolution, HarnessError> {
    let sol = irf::solve_irf(problem, tol)?;
    match sol.status {
        SolveStatus::Optimal => Ok(sol),
        SolveStatus::Infeasible => Err(HarnessError::new(
            ExitStatus::Infeasible,
            "no channel satisfies the constraints",
        )),
        SolveStatus::MaxIterations => Err(HarnessError::new(
            ExitStatus::Runtime,
            format!(
                "solver stopped at its iteration cap (gap {:e} bits)",
                sol.gap_estimate
            ),
        )),
    }
}

/// The configured channel, or the optimal one at tolerance `tol`.
fn channel_for(
    cfg: &ExperimentConfig,
    tol: f64,
) -> Result<(Channel, Option<IrfSolution>), HarnessError> {
    if let Some(q) = &cfg.channel {
        return Ok((q.clone(), None));
    }
    let sol = solve_optimal(&cfg.problem()?, tol)?;
    Ok((sol.channel.clone(), Some(sol)))
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Empirical rows of a count matrix; rows without observations are `None`.
fn empirical_rows(counts: &[u64], out: usize) -> Vec<Option<Vec<f64>>> {
    counts
        .chunks(out)
        .map(|row| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row.iter().map(|&c| c as f64 / total as f64).collect())
        })
        .collect()
}

/// Largest TV between an empirical row and the channel row.
fn max_row_tv(counts: &[u64], q: &Channel) -> (f64, Vec<Value>) {
    let mut worst: f64 = 0.0;
    let per_row = empirical_rows(counts, q.out_size())
        .into_iter()
        .enumerate()
        .map(|(x, row)| match row {
            Some(r) => {
                let d = tv(&r, q.row(x));
                worst = worst.max(d);
                num(d)
            }
            None => Value::Null,
        })
        .collect();
    (worst, per_row)
}

fn entropy_bound(i: f64) -> f64 {
    i + (i + 1.0).log2() + ENTROPY_BOUND_CONSTANT
}

fn rate_bound(i: f64) -> f64 {
    i + (i + 1.0).log2() + RATE_BOUND_CONSTANT
}

/// Order-independent Monte Carlo statistics.
#[derive(Debug, Clone)]
struct Tally {
    k: BTreeMap<u64, u64>,
    joint: Vec<u64>,
    bits: u64,
    examined: u64,
    error: Option<(u64, Error)>,
}

impl Tally {
    fn new(joint_len: usize) -> Self {
        Tally {
            k: BTreeMap::new(),
            joint: vec![0; joint_len],
            bits: 0,
            examined: 0,
            error: None,
        }
    }

    fn record_index(&mut self, enc: pfr::PfrEncoding) -> Result<(), Error> {
        *self.k.entry(enc.k).or_default() += 1;
        self.bits += u64::from(bitcode::codeword_len(enc.k)?);
        self.examined += enc.candidates_examined;
        Ok(())
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (k, c) in other.k {
            *self.k.entry(k).or_default() += c;
        }
        for (a, b) in self.joint.iter_mut().zip(other.joint) {
            *a += b;
        }
        self.bits += other.bits;
        self.examined += other.examined;
        self.error = match (self.error, other.error) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    fn entropy(&self) -> f64 {
        probcore::empirical_entropy(self.k.values().copied())
    }
}

/// Runs `trial(i)` for `i < trials` in parallel. The reported error, if any,
/// is the one from the smallest trial index.
fn tally<F>(trials: u64, joint_len: usize, trial: F) -> Result<Tally, Error>
where
    F: Fn(u64, &mut Tally) -> Result<(), Error> + Sync,
{
    let t = (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(joint_len),
            |mut acc, i| {
                if acc.error.is_none() {
                    if let Err(e) = trial(i, &mut acc) {
                        acc.error = Some((i, e));
                    }
                }
                acc
            },
        )
        .reduce(|| Tally::new(joint_len), Tally::merge);
    match t.error {
        Some((_, e)) => Err(e),
        None => Ok(t),
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let problem = cfg.problem()?;
    let sol = irf::solve_irf(&problem, cfg.tolerance())?;
    let status = match sol.status {
        SolveStatus::Optimal => ExitStatus::Success,
        SolveStatus::Infeasible => ExitStatus::Infeasible,
        SolveStatus::MaxIterations => ExitStatus::Runtime,
    };
    let mut report = solution_json(&sol);
    report["command"] = json!("solve");
    report["thresholds"] = nums(&problem.thresholds());
    report["tolerance"] = num(cfg.tolerance());
    Ok(CommandOutput {
        status,
        files: vec![("solve.json".into(), pretty(&report))],
        report,
    })
}

/// Shortest representation that parses back to the same `f64`.
fn csv_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "theta_d",
    "theta_D",
    "rate_bits",
    "achieved_d",
    "achieved_D",
    "status",
    "gap_estimate",
];

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let grid = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config_error("sweep: missing grid"))?;
    if cfg.constraints.is_some() {
        return Err(config_error("sweep: needs the distortion/divergence form"));
    }
    let d = cfg
        .distortion_matrix()?
        .ok_or_else(|| config_error("distortion: missing"))?;
    // Validates sizes before any solve.
    cfg.problem_at(Some((0.0, 0.0)))?;
    let kind = cfg
        .divergence
        .clone()
        .unwrap_or(DivergenceKind::TotalVariation);
    let td: Vec<f64> = grid.theta_d.iter().map(|t| t.0).collect();
    let tv: Vec<f64> = grid.theta_div.iter().map(|t| t.0).collect();
    let table = irf::sweep_surface(&cfg.source, &d, &kind, &td, &tv, cfg.tolerance())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::new(ExitStatus::Runtime, e.to_string());
    w.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    let (mut optimal, mut infeasible, mut errors) = (0, 0, 0);
    for cell in &table.cells {
        let (a, b) = (csv_num(cell.theta_d), csv_num(cell.theta_div));
        let row = match &cell.solution {
            Ok(sol) => {
                match sol.status {
                    SolveStatus::Optimal => optimal += 1,
                    SolveStatus::Infeasible => infeasible += 1,
                    SolveStatus::MaxIterations => errors += 1,
                }
                [
                    a,
                    b,
                    csv_num(sol.rate_bits),
                    csv_num(sol.achieved[0]),
                    csv_num(sol.achieved[1]),
                    sol.status.to_string(),
                    csv_num(sol.gap_estimate),
                ]
            }
            Err(_) => {
                errors += 1;
                [
                    a,
                    b,
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    "error".into(),
                    "nan".into(),
                ]
            }
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::new(ExitStatus::Runtime, e.to_string()))?;
    let status = if optimal > 0 {
        ExitStatus::Success
    } else if errors == 0 {
        ExitStatus::Infeasible
    } else {
        ExitStatus::Runtime
    };
    let failures: Vec<Value> = table
        .cells
        .iter()
        .filter_map(|c| {
            c.solution.as_ref().err().map(
                |e| json!({"theta_d": num(c.theta_d), "theta_D": num(c.theta_div), "error": e}),
            )
        })
        .collect();
    let report = json!({
        "command": "sweep",
        "rows": table.cells.len(),
        "optimal": optimal,
        "infeasible": infeasible,
        "errors": errors,
        "failures": failures,
        "monotonicity_warnings": table.warnings,
        "csv": "sweep.csv",
    });
    Ok(CommandOutput {
        status,
        files: vec![
            ("sweep.csv".into(), bytes),
            ("sweep.json".into(), pretty(&report)),
        ],
        report,
    })
}

/// Reads whitespace-separated symbols; `#` starts a comment.
pub fn read_symbols(path: &Path, alphabet: usize) -> Result<Vec<usize>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("input: {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let s: usize = tok.parse().map_err(|_| {
                config_error(format!(
                    "input: line {}: `{tok}` is not a symbol",
                    line_no + 1
                ))
            })?;
            if s >= alphabet {
                return Err(config_error(format!(
                    "input: line {}: symbol {s} outside an alphabet of size {alphabet}",
                    line_no + 1
                )));
            }
            out.push(s);
        }
    }
    Ok(out)
}

fn functional_name(f: &ConstraintFunctional) -> &'static str {
    match f {
        ConstraintFunctional::Distortion { .. } => "distortion",
        ConstraintFunctional::MarginalDivergence { .. } => "marginal_divergence",
        ConstraintFunctional::ProjectedDivergence { .. } => "projected_divergence",
    }
}

pub fn cmd_roundtrip(cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let (channel, sol) = channel_for(cfg, cfg.tolerance())?;
    let n = cfg.block_size.unwrap_or(1);
    let bp = BlockProblem::new(n, channel.clone(), cfg.source.clone())?.with_budget(budget(cfg));
    let symbols = match &cfg.input {
        Some(path) => read_symbols(path, cfg.source.len())?,
        None => (0..cfg.trials)
            .flat_map(|b| source_symbols(cfg.seed, b, &cfg.source, n))
            .collect(),
    };
    if symbols.is_empty() || symbols.len() % n != 0 {
        return Err(config_error(format!(
            "input: {} symbols do not form whole blocks of {n}",
            symbols.len()
        )));
    }
    let blocks: Vec<&[usize]> = symbols.chunks(n).collect();
    let encoded: Vec<Result<pfr::PfrEncoding, Error>> = blocks
        .par_iter()
        .enumerate()
        .map(|(b, x)| blockcode::encode_block(x, &bp, u(cfg.seed, b as u64)))
        .collect();
    let encoded = encoded.into_iter().collect::<Result<Vec<_>, _>>()?;
    let ks: Vec<u64> = encoded.iter().map(|e| e.k).collect();

    let bytes = bitcode::write_stream(&ks, cfg.seed, n as u16)?;
    let back = bitcode::read_stream(&bytes)?;
    if back.indices != ks || back.seed != cfg.seed || usize::from(back.block_size) != n {
        return Err(HarnessError::new(
            ExitStatus::Runtime,
            "container did not read back",
        ));
    }
    let decoded: Vec<Vec<usize>> = back
        .indices
        .par_iter()
        .enumerate()
        .map(|(b, &k)| blockcode::decode_block(k, &bp, u(back.seed, b as u64)))
        .collect::<Result<_, _>>()?;
    let recon: Vec<usize> = decoded.into_iter().flatten().collect();

    let (m, out) = (channel.in_size(), channel.out_size());
    let mut joint = vec![0u64; m * out];
    for (&x, &y) in symbols.iter().zip(&recon) {
        joint[x * out + y] += 1;
    }
    let total = symbols.len() as f64;
    let p_hat = Pmf::new(
        joint
            .chunks(out)
            .map(|r| r.iter().sum::<u64>() as f64 / total)
            .collect::<Vec<_>>(),
    )
    .or_else(|_| {
        // Rounding of the counts can leave the sum an ulp away from one.
        let raw: Vec<f64> = joint
            .chunks(out)
            .map(|r| r.iter().sum::<u64>() as f64)
            .collect();
        let s: f64 = raw.iter().sum();
        Pmf::new(raw.iter().map(|v| v / s).collect())
    })?;
    let q_hat = Channel::new(
        empirical_rows(&joint, out)
            .into_iter()
            .map(|r| r.unwrap_or_else(|| vec![1.0 / out as f64; out]))
            .collect(),
    )?;

    let mut empirical = Vec::new();
    if cfg.has_problem() {
        let problem = cfg.problem()?;
        let solver_achieved = problem.evaluate(&channel)?;
        for (c, target) in problem.constraints().iter().zip(solver_achieved) {
            let value = probcore::evaluate_functional(&c.functional, &p_hat, &q_hat)?;
            empirical.push(json!({
                "functional": functional_name(&c.functional),
                "threshold": num(c.threshold),
                "channel_value": num(target),
                "empirical": num(value),
            }));
        }
    }
    let payload_bits = bitcode::payload_bits(&ks)?;
    let i = probcore::mutual_information(&cfg.source, &channel)?;
    let exact = symbols.iter().zip(&recon).filter(|(a, b)| a == b).count();
    let report = json!({
        "command": "roundtrip",
        "samples": symbols.len(),
        "block_size": n,
        "seed": cfg.seed,
        "container_bytes": bytes.len(),
        "payload_bits": payload_bits,
        "bits_per_sample": num(payload_bits as f64 / total),
        "container_bits_per_sample": num(bytes.len() as f64 * 8.0 / total),
        "mutual_information_bits": num(i),
        "rate_bound_bits": num(rate_bound(i)),
        "mean_candidates": num(encoded.iter().map(|e| e.candidates_examined).sum::<u64>() as f64 / blocks.len() as f64),
        "exact_reconstruction_fraction": num(exact as f64 / total),
        "empirical_constraints": empirical,
        "solution": sol.as_ref().map(solution_json),
    });
    let recon_text: String = recon.iter().map(|y| format!("{y}\n")).collect();
    Ok(CommandOutput {
        status: ExitStatus::Success,
        files: vec![
            ("roundtrip.rdpc".into(), bytes),
            ("reconstruction.txt".into(), recon_text.into_bytes()),
            ("roundtrip.json".into(), pretty(&report)),
        ],
        report,
    })
}

fn verification_output(report: VerificationReport, budget_hit: bool) -> CommandOutput {
    let status = if budget_hit {
        ExitStatus::BudgetExhausted
    } else if report.pass {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    };
    let value = serde_json::to_value(&report).expect("reports always serialize");
    CommandOutput {
        status,
        files: vec![(format!("{}.json", report.command), pretty(&value))],
        report: value,
    }
}

pub fn cmd_verify_thm1(cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let (channel, sol) = channel_for(cfg, cfg.tolerance())?;
    let codec = PfrCodec::for_source(channel.clone(), &cfg.source)?.with_budget(budget(cfg));
    let (m, n) = (channel.in_size(), channel.out_size());
    let t = tally(cfg.trials, m * n, |i, acc| {
        let x = source_symbols(cfg.seed, i, &cfg.source, 1)[0];
        let (enc, y) = codec.simulate(x, u(cfg.seed, i))?;
        acc.record_index(enc)?;
        acc.joint[x * n + y] += 1;
        Ok(())
    })?;
    let trials = cfg.trials as f64;
    let i = probcore::mutual_information(&cfg.source, &channel)?;
    let h = t.entropy();
    let (worst_tv, per_input_tv) = max_row_tv(&t.joint, &channel);
    let decoded: Vec<f64> = (0..n)
        .map(|y| (0..m).map(|x| t.joint[x * n + y]).sum::<u64>() as f64 / trials)
        .collect();
    let marginal_tv = tv(&decoded, codec.marginal().probs());
    let bits = t.bits as f64 / trials;
    let unobserved: Vec<usize> = cfg
        .source
        .support()
        .filter(|&x| t.joint[x * n..(x + 1) * n].iter().all(|&c| c == 0))
        .collect();

    let mut law = Check::below(
        "conditional_law",
        "max over inputs of TV(empirical law of decoded symbols given x, Q(.|x)) <= 0.01",
        worst_tv,
        THM1_TV_TOLERANCE,
        false,
    );
    if !unobserved.is_empty() {
        law = law.with_note(format!("inputs {unobserved:?} were never drawn"));
    }
    let checks = vec![
        Check::below(
            "index_entropy",
            "empirical H[K] < I + log2(I + 1) + 4",
            h,
            entropy_bound(i),
            true,
        ),
        law,
        Check::below(
            "reconstruction_marginal",
            "TV(empirical law of decoded symbols, reconstruction marginal) <= 0.01",
            marginal_tv,
            THM1_TV_TOLERANCE,
            false,
        ),
        Check::below(
            "rate_accounting",
            "mean Elias-delta bits per sample <= I + log2(I + 1) + 6",
            bits,
            rate_bound(i),
            false,
        ),
    ];
    let details = json!({
        "trials": cfg.trials,
        "seed": cfg.seed,
        "mutual_information_bits": num(i),
        "index_entropy_bits": num(h),
        "entropy_bound_bits": num(entropy_bound(i)),
        "bits_per_sample": num(bits),
        "per_input_tv": per_input_tv,
        "mean_candidates": num(t.examined as f64 / trials),
        "largest_index": t.k.keys().next_back(),
        "channel": channel.rows(),
        "solution": sol.as_ref().map(solution_json),
    });
    Ok(verification_output(
        VerificationReport::new("verify-thm1", checks, details),
        false,
    ))
}

/// Finest grid the converse oracle can afford for an `m × n` channel.
fn converse_grid_step(m: usize, n: usize) -> f64 {
    let rows = |k: u64| -> u64 {
        // C(k + n − 1, n − 1)
        (1..n as u64).fold(1u64, |acc, j| acc * (k + j) / j)
    };
    for k in [1000u64, 500, 250, 200, 100, 50, 40, 25, 20, 10, 5, 2] {
        if rows(k)
            .checked_pow(m as u32)
            .is_some_and(|p| p <= CONVERSE_GRID_POINTS)
        {
            return 1.0 / k as f64;
        }
    }
    0.5
}

fn deterministic_channel(map: &[usize], out: usize) -> Result<Channel, Error> {
    Channel::new(
        map.iter()
            .map(|&y| (0..out).map(|j| if j == y { 1.0 } else { 0.0 }).collect())
            .collect(),
    )
}

pub fn cmd_verify_converse(cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    if !cfg.has_problem() {
        return Err(config_error(
            "constraints: verify-converse needs constraint functionals",
        ));
    }
    let problem = cfg.problem()?;
    let (m, out) = (cfg.source.len(), problem.recon_alphabet_size());
    if m > irf::ORACLE_MAX_ALPHABET || out > irf::ORACLE_MAX_ALPHABET {
        return Err(Error::TooLarge(format!(
            "verify-converse needs alphabets of at most {} symbols, got {m}x{out}",
            irf::ORACLE_MAX_ALPHABET
        ))
        .into());
    }
    let (channel, sol) = channel_for(cfg, cfg.tolerance())?;
    let codec = PfrCodec::for_source(channel.clone(), &cfg.source)?.with_budget(budget(cfg));
    let per_seed: Vec<(f64, Vec<usize>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|s| -> Result<_, Error> {
            let uu = u(cfg.seed, s);
            let (h, ks) = pfr::codec_index_entropy(&codec, &cfg.source, uu)?;
            let map = ks
                .iter()
                .map(|&k| if k == 0 { Ok(0) } else { codec.decode(k, uu) })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((h, map))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;

    let step = converse_grid_step(m, out);
    let mut maps: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for (_, map) in &per_seed {
        *maps.entry(map.clone()).or_default() += 1;
    }
    let mut oracle: BTreeMap<Vec<usize>, (Vec<f64>, f64)> = BTreeMap::new();
    for map in maps.keys() {
        let theta = problem.evaluate(&deterministic_channel(map, out)?)?;
        let r = irf::brute_force_irf(&problem.with_thresholds(&theta)?, step)?.rate_bits;
        oracle.insert(map.clone(), (theta, r));
    }
    let (mut min_margin, mut worst_seed) = (f64::INFINITY, 0u64);
    for (s, (h, map)) in per_seed.iter().enumerate() {
        let margin = h - oracle[map].1;
        if margin < min_margin {
            min_margin = margin;
            worst_seed = s as u64;
        }
    }

    // Seed-averaged form: the code's joint law averages the per-seed maps.
    let seeds = per_seed.len() as f64;
    let mut avg = vec![0.0; m * out];
    for (map, &count) in &maps {
        for (x, &y) in map.iter().enumerate() {
            avg[x * out + y] += count as f64 / seeds;
        }
    }
    let avg = Channel::new(
        avg.chunks(out)
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            })
            .collect(),
    )?;
    let theta_bar = problem.evaluate(&avg)?;
    let r_bar = irf::brute_force_irf(&problem.with_thresholds(&theta_bar)?, step)?.rate_bits;
    let mean_h = per_seed.iter().map(|(h, _)| h).sum::<f64>() / seeds;

    let checks = vec![
        Check::above(
            "per_seed_converse",
            "min over seeds u of H[K | U = u] - R(achieved constraint values of the seed-u code) >= -0.01",
            min_margin,
            -CONVERSE_SLACK,
        ),
        Check::above(
            "seed_averaged_converse",
            "mean over seeds of H[K | U = u] >= R(achieved constraint values of the averaged code) - 0.01",
            mean_h,
            r_bar - CONVERSE_SLACK,
        ),
    ];
    let table: Vec<Value> = oracle
        .iter()
        .map(|(map, (theta, r))| {
            json!({"map": map, "seeds": maps[map], "achieved": nums(theta), "rate_bits": num(*r)})
        })
        .collect();
    let details = json!({
        "seeds": cfg.trials,
        "seed": cfg.seed,
        "grid_step": step,
        "mean_index_entropy_bits": num(mean_h),
        "min_margin_bits": num(min_margin),
        "worst_sample_index": worst_seed,
        "averaged_achieved": nums(&theta_bar),
        "averaged_rate_bits": num(r_bar),
        "channel_mutual_information_bits": num(probcore::mutual_information(&cfg.source, &channel)?),
        "maps": table,
        "solution": sol.as_ref().map(solution_json),
    });
    Ok(verification_output(
        VerificationReport::new("verify-converse", checks, details),
        false,
    ))
}

struct BlockRun {
    entropy: f64,
    worst_tv: f64,
    bits: f64,
    mean_candidates: f64,
}

fn run_blocks(cfg: &ExperimentConfig, bp: &BlockProblem) -> Result<BlockRun, Error> {
    let n = bp.block_size();
    let (m, out) = (bp.channel().in_size(), bp.channel().out_size());
    let t = tally(cfg.trials, n * m * out, |b, acc| {
        let x = source_symbols(cfg.seed, b, &cfg.source, n);
        let uu = u(cfg.seed, b);
        let enc = blockcode::encode_block(&x, bp, uu)?;
        let y = blockcode::decode_block(enc.k, bp, uu)?;
        acc.record_index(enc)?;
        for j in 0..n {
            acc.joint[(j * m + x[j]) * out + y[j]] += 1;
        }
        Ok(())
    })?;
    let worst_tv = t
        .joint
        .chunks(m * out)
        .map(|c| max_row_tv(c, bp.channel()).0)
        .fold(0.0, f64::max);
    let blocks = cfg.trials as f64;
    Ok(BlockRun {
        entropy: t.entropy(),
        worst_tv,
        bits: t.bits as f64 / blocks,
        mean_candidates: t.examined as f64 / blocks,
    })
}

pub fn cmd_verify_thm3(cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let mut ns = cfg
        .block_sizes
        .clone()
        .ok_or_else(|| config_error("block_sizes: required by verify-thm3"))?;
    ns.sort_unstable();
    ns.dedup();
    if cfg.source.len() != 2 {
        return Err(config_error("source: verify-thm3 needs a binary source"));
    }
    if let Some(&n) = ns.iter().find(|&&n| n > MAX_VERIFY_BLOCK) {
        return Err(config_error(format!(
            "block_sizes: {n} exceeds the limit of {MAX_VERIFY_BLOCK}"
        )));
    }
    let base = if cfg.channel.is_none() {
        Some(solve_optimal(&cfg.problem()?, cfg.tolerance())?)
    } else {
        None
    };

    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut per_symbol: Vec<(usize, f64)> = Vec::new();
    let mut budget_hit = false;
    for &n in &ns {
        // Refine the channel so that I_N is within 1/N of the optimum.
        let tol = cfg.tolerance().min(1.0 / n as f64);
        let (channel, _) = channel_for(cfg, tol)?;
        let i_n = probcore::mutual_information(&cfg.source, &channel)?;
        let bp = BlockProblem::new(n, channel, cfg.source.clone())?.with_budget(budget(cfg));
        let bound = blockcode::theorem3_bound(n, i_n);
        match run_blocks(cfg, &bp) {
            Ok(run) => {
                let h_n = run.entropy / n as f64;
                per_symbol.push((n, h_n));
                checks.push(Check::below(
                    &format!("block_entropy_n{n}"),
                    "empirical H[K_N]/N < I_N + log2(N I_N + 2)/N + 5/N",
                    h_n,
                    bound,
                    true,
                ));
                checks.push(Check::below(
                    &format!("per_coordinate_law_n{n}"),
                    "max over coordinates and inputs of TV(empirical conditional, Q(.|x)) <= 0.02",
                    run.worst_tv,
                    THM3_TV_TOLERANCE,
                    false,
                ));
                rows.push(json!({
                    "n": n,
                    "solver_tolerance": num(tol),
                    "mutual_information_bits": num(i_n),
                    "index_entropy_bits": num(run.entropy),
                    "per_symbol_entropy_bits": num(h_n),
                    "bound_bits": num(bound),
                    "per_symbol_elias_bits": num(run.bits / n as f64),
                    "mean_candidates": num(run.mean_candidates),
                    "max_coordinate_tv": num(run.worst_tv),
                    "budget_warning": bp.budget_warning(),
                }));
            }
            Err(e @ Error::BudgetExhausted { .. }) => {
                budget_hit = true;
                checks.push(Check::failed(
                    &format!("block_entropy_n{n}"),
                    "empirical H[K_N]/N < I_N + log2(N I_N + 2)/N + 5/N",
                    e.to_string(),
                ));
                rows.push(json!({"n": n, "error": e.to_string()}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if per_symbol.len() > 1 {
        let worst_rise = per_symbol
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::below(
            "monotone_trend",
            "largest increase of H[K_N]/N between successive block sizes <= 0.05",
            worst_rise,
            TREND_TOLERANCE,
            false,
        ));
    }
    let h_at = |n: usize| per_symbol.iter().find(|(m, _)| *m == n).map(|p| p.1);
    if let (Some(h1), Some(h8)) = (h_at(1), h_at(8)) {
        checks.push(Check::below(
            "trend_gain",
            "H[K_8]/8 < H[K_1] - 0.3",
            h8,
            h1 - TREND_GAIN,
            true,
        ));
    }
    let details = json!({
        "blocks": cfg.trials,
        "seed": cfg.seed,
        "rate_bits": base.as_ref().map(|s| num(s.rate_bits)),
        "per_block_size": rows,
    });
    Ok(verification_output(
        VerificationReport::new("verify-thm3", checks, details),
        budget_hit,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_steps() {
        assert_eq!(converse_grid_step(2, 2), 0.001);
        let s = converse_grid_step(3, 3);
        assert!(s > 0.001 && s <= 0.05, "{s}");
    }

    #[test]
    fn csv_numbers_roundtrip() {
        for x in [
            0.1,
            1.0 / 3.0,
            0.188_721_875_540_867,
            f64::INFINITY,
            0.0,
            1e-300,
        ] {
            assert_eq!(csv_num(x).parse::<f64>().unwrap(), x);
        }
        assert!(csv_num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn tally_merge_keeps_earliest_error() {
        let mut a = Tally::new(1);
        a.error = Some((5, Error::ZeroIndex));
        let mut b = Tally::new(1);
        b.error = Some((3, Error::Truncated));
        assert_eq!(a.merge(b).error.unwrap().0, 3);
    }
}
