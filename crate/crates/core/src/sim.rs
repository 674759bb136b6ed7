//! Monte Carlo execution of the (1+1) EA and the (1+1) EA with binomial
//! crossover on real bitstrings, with optional Hamming-distance adaptation.
//!
//! Bitstrings are `u64` words, so `n <= 64`. Each run draws from its own
//! ChaCha8 stream `(base_seed, run_index)`, and results are aggregated as
//! integer level counts. Output is therefore identical for any thread count.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::level::{binomial, LevelProblem};

/// Draws flip masks whose bits are independent with a common rate.
///
/// The number of set bits is drawn from its binomial distribution by inverse
/// CDF, then that many distinct positions are chosen uniformly.
#[derive(Debug, Clone)]
pub struct MaskSampler {
    n: usize,
    rate: f64,
    cdf: Vec<f64>,
}

impl MaskSampler {
    pub fn new(n: usize, rate: f64) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(domain(format!("mask width {n} outside 1..=64")));
        }
        if !(0.0..=1.0).contains(&rate) {
            return Err(domain(format!("rate {rate} outside [0, 1]")));
        }
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for k in 0..=n {
            acc += binomial(n, k) * rate.powi(k as i32) * (1.0 - rate).powi((n - k) as i32);
            cdf.push(acc);
        }
        cdf[n] = f64::INFINITY;
        Ok(Self { n, rate, cdf })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let k = self.cdf.iter().position(|&c| u < c).unwrap_or(self.n);
        let full = full_mask(self.n);
        if 2 * k <= self.n {
            distinct_bits(k, self.n, rng)
        } else {
            full & !distinct_bits(self.n - k, self.n, rng)
        }
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn distinct_bits<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> u64 {
    let mut m = 0u64;
    let mut set = 0;
    while set < k {
        let b = 1u64 << rng.gen_range(0..n);
        if m & b == 0 {
            m |= b;
            set += 1;
        }
    }
    m
}

/// Uniformly random `n`-bit string.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> u64 {
    rng.gen::<u64>() & full_mask(n)
}

/// Outcome of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// Incumbent after selection.
    pub x: u64,
    /// Candidate before selection.
    pub y: u64,
    pub accepted: bool,
    /// `f(y) > f(x)`.
    pub improved: bool,
    /// Hamming distance between the old incumbent and the candidate.
    pub hamming: u32,
}

fn select(x: u64, y: u64, fitness: &[f64]) -> Step {
    let fx = fitness[x.count_ones() as usize];
    let fy = fitness[y.count_ones() as usize];
    let accepted = fy >= fx;
    Step {
        x: if accepted { y } else { x },
        y,
        accepted,
        improved: fy > fx,
        hamming: (x ^ y).count_ones(),
    }
}

/// Bitwise mutation with elitist selection. `fitness` is indexed by
/// ones-count.
pub fn step_ea<R: Rng + ?Sized>(x: u64, mutation: &MaskSampler, fitness: &[f64], rng: &mut R) -> Step {
    select(x, x ^ mutation.sample(rng), fitness)
}

/// Mutation, then binomial crossover with the incumbent, then elitist
/// selection.
///
/// The donor takes every position in the crossover mask. That mask has each
/// bit with rate `C_R` plus one uniformly chosen forced position.
pub fn step_ea_c<R: Rng + ?Sized>(
    x: u64,
    mutation: &MaskSampler,
    crossover: &MaskSampler,
    fitness: &[f64],
    rng: &mut R,
) -> Step {
    let forced = 1u64 << rng.gen_range(0..mutation.n);
    let v = x ^ mutation.sample(rng);
    let take = crossover.sample(rng) | forced;
    let y = (v & take) | (x & !take);
    select(x, y, fitness)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ea,
    Eac,
}

/// Current rates of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AdaptiveState {
    Ea { p_m: f64 },
    Eac { q_m: f64, c_r: f64 },
}

/// Rate update after a strict improvement at Hamming distance `h`.
///
/// Mutation rates grow by `h/n` and stay in `[1/n^2, 1 - 1/n^2]`. The
/// crossover rate is chosen so that `C_R q_m` grows by `h/(n-1)`, capped at 1.
/// `h = 0` leaves the state unchanged.
pub fn adapt_parameters(state: AdaptiveState, h: u32, n: usize) -> AdaptiveState {
    if h == 0 {
        log::debug!("adaptive update skipped: zero Hamming distance");
        return state;
    }
    let nf = n as f64;
    let lo = 1.0 / (nf * nf);
    let clamp = |v: f64| v.clamp(lo, 1.0 - lo);
    let hf = h as f64;
    match state {
        AdaptiveState::Ea { p_m } => AdaptiveState::Ea {
            p_m: clamp(p_m + hf / nf),
        },
        AdaptiveState::Eac { q_m, c_r } => {
            let q_new = clamp(q_m + hf / nf);
            let c_new = ((c_r * q_m + hf / (nf - 1.0)) / q_new).min(1.0);
            AdaptiveState::Eac { q_m: q_new, c_r: c_new }
        }
    }
}

/// Problem selection in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSpec {
    OneMax { n: usize },
    Deceptive { n: usize },
    Custom { path: PathBuf },
}

impl ProblemSpec {
    pub fn load(&self) -> Result<LevelProblem> {
        match self {
            ProblemSpec::OneMax { n } => LevelProblem::onemax(*n),
            ProblemSpec::Deceptive { n } => LevelProblem::deceptive(*n),
            ProblemSpec::Custom { path } => LevelProblem::load(path),
        }
    }
}

fn default_tails() -> Vec<usize> {
    vec![1]
}

/// Monte Carlo configuration as stored on disk.
///
/// For `eac` either `c_r` is given or it is derived from the coupled rate
/// `p` (default `1/n`) as `C_R = p / q_m`. For `ea`, `p_m` defaults to `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub p_m: Option<f64>,
    #[serde(default)]
    pub q_m: Option<f64>,
    #[serde(default)]
    pub c_r: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub adaptive: bool,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    #[serde(default = "default_tails")]
    pub tails: Vec<usize>,
}

/// A configuration with its problem loaded and rates resolved.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub problem: LevelProblem,
    pub initial: AdaptiveState,
    pub adaptive: bool,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub tails: Vec<usize>,
}

impl SimConfig {
    pub fn resolve(&self) -> Result<Simulation> {
        let problem = self.problem.load()?;
        let n = problem.n();
        if self.runs == 0 {
            return Err(config("runs must be at least 1"));
        }
        if let Some(&bad) = self.tails.iter().find(|&&i| i == 0 || i > problem.max_level()) {
            return Err(domain(format!("tail index {bad} outside 1..={}", problem.max_level())));
        }
        let p = self.p.unwrap_or(1.0 / n as f64);
        let open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(v)
            } else {
                Err(domain(format!("{name} = {v} outside (0, 1)")))
            }
        };
        let initial = match self.algorithm {
            Algorithm::Ea => AdaptiveState::Ea {
                p_m: open("p_m", self.p_m.unwrap_or(p))?,
            },
            Algorithm::Eac => {
                // Any missing one of q_m and C_R follows from p = C_R * q_m.
                let (q_m, c_r) = match (self.q_m, self.c_r) {
                    (Some(q), Some(c)) => (q, c),
                    (Some(q), None) => (q, p / q),
                    (None, Some(c)) => (p / c, c),
                    (None, None) => return Err(config("eac needs q_m or c_r")),
                };
                let q_m = open("q_m", q_m)?;
                if !(c_r > 0.0 && c_r <= 1.0) {
                    return Err(domain(format!("C_R = {c_r} outside (0, 1]")));
                }
                AdaptiveState::Eac { q_m, c_r }
            }
        };
        if self.adaptive && n < 2 {
            return Err(config("adaptive runs need n >= 2"));
        }
        Ok(Simulation {
            problem,
            initial,
            adaptive: self.adaptive,
            horizon: self.horizon,
            runs: self.runs,
            base_seed: self.base_seed,
            tails: self.tails.clone(),
        })
    }
}

/// Random stream of one run.
pub fn run_rng(base_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run_index);
    rng
}

struct Operator {
    n: usize,
    state: AdaptiveState,
    mutation: MaskSampler,
    crossover: Option<MaskSampler>,
}

impl Operator {
    fn new(n: usize, state: AdaptiveState) -> Self {
        let (m, c) = match state {
            AdaptiveState::Ea { p_m } => (p_m, None),
            AdaptiveState::Eac { q_m, c_r } => (q_m, Some(c_r)),
        };
        Self {
            n,
            state,
            mutation: MaskSampler::new(n, m).expect("rate validated"),
            crossover: c.map(|c| MaskSampler::new(n, c).expect("rate validated")),
        }
    }

    fn step<R: Rng>(&self, x: u64, fitness: &[f64], rng: &mut R) -> Step {
        match &self.crossover {
            None => step_ea(x, &self.mutation, fitness, rng),
            Some(c) => step_ea_c(x, &self.mutation, c, fitness, rng),
        }
    }

    fn adapt(&mut self, h: u32) {
        *self = Self::new(self.n, adapt_parameters(self.state, h, self.n));
    }
}

/// Piecewise-constant level path of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// `(generation, level)` at every level change, starting at generation 0.
    pub segments: Vec<(usize, usize)>,
    pub final_state: AdaptiveState,
}

impl RunTrace {
    pub fn level_at(&self, t: usize) -> usize {
        let k = self.segments.partition_point(|&(s, _)| s <= t);
        self.segments[k - 1].1
    }
}

/// Runs one trajectory for `horizon` generations.
///
/// Once the optimum is reached the run stops drawing; the level stays 0.
pub fn simulate_run(sim: &Simulation, run_index: u64) -> RunTrace {
    let mut rng = run_rng(sim.base_seed, run_index);
    let problem = &sim.problem;
    let n = problem.n();
    let fitness = problem.fitness_table();
    let levels = problem.level_of_ones();
    let mut op = Operator::new(n, sim.initial);
    let mut x = random_bits(n, &mut rng);
    let mut level = levels[x.count_ones() as usize];
    let mut segments = vec![(0, level)];
    for t in 1..=sim.horizon {
        if level == 0 {
            break;
        }
        let s = op.step(x, &fitness, &mut rng);
        x = s.x;
        let new_level = levels[x.count_ones() as usize];
        if new_level != level {
            level = new_level;
            segments.push((t, level));
        }
        if sim.adaptive && s.improved {
            op.adapt(s.hamming);
        }
    }
    RunTrace {
        segments,
        final_state: op.state,
    }
}

/// Per-generation empirical metrics with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSeries {
    pub horizon: usize,
    pub runs: usize,
    pub mean_err: Vec<f64>,
    pub se_err: Vec<f64>,
    /// Tail index to `(frequency, standard error)` per generation.
    pub tails: BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
    /// `counts[t][level]` = runs at `level` after `t` generations.
    #[serde(skip)]
    pub counts: Vec<Vec<u64>>,
}

/// Difference array over `(generation, level)`; integer, so merge order does
/// not matter.
struct Histogram {
    width: usize,
    diff: Vec<i64>,
}

impl Histogram {
    fn new(horizon: usize, width: usize) -> Self {
        Self {
            width,
            diff: vec![0; (horizon + 2) * width],
        }
    }

    fn add(&mut self, trace: &RunTrace, horizon: usize) {
        for (k, &(start, level)) in trace.segments.iter().enumerate() {
            let end = trace.segments.get(k + 1).map_or(horizon + 1, |s| s.0);
            self.diff[start * self.width + level] += 1;
            self.diff[end * self.width + level] -= 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.diff.iter_mut().zip(other.diff).for_each(|(a, b)| *a += b);
        self
    }

    fn counts(self, horizon: usize) -> Vec<Vec<u64>> {
        let w = self.width;
        let mut running = vec![0i64; w];
        (0..=horizon)
            .map(|t| {
                for (r, d) in running.iter_mut().zip(&self.diff[t * w..(t + 1) * w]) {
                    *r += d;
                }
                running.iter().map(|&c| c as u64).collect()
            })
            .collect()
    }
}

/// Runs every trajectory and aggregates level counts.
pub fn monte_carlo(sim: &Simulation) -> EmpiricalSeries {
    let width = sim.problem.level_count();
    let horizon = sim.horizon;
    let hist = (0..sim.runs as u64)
        .into_par_iter()
        .fold(
            || Histogram::new(horizon, width),
            |mut h, i| {
                h.add(&simulate_run(sim, i), horizon);
                h
            },
        )
        .reduce(|| Histogram::new(horizon, width), Histogram::merge);
    summarize(hist.counts(horizon), sim.problem.error_vector(), &sim.tails, sim.runs)
}

/// Means and standard errors from level counts.
pub fn summarize(counts: Vec<Vec<u64>>, errors: &[f64], tails: &[usize], runs: usize) -> EmpiricalSeries {
    let r = runs as f64;
    let se = |mean: f64, sq_mean: f64| {
        if runs < 2 {
            return 0.0;
        }
        let var = (sq_mean - mean * mean).max(0.0) * r / (r - 1.0);
        (var / r).sqrt()
    };
    let mut mean_err = Vec::with_capacity(counts.len());
    let mut se_err = Vec::with_capacity(counts.len());
    let mut tail_out: BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
        tails.iter().map(|&i| (i, (Vec::new(), Vec::new()))).collect();
    for row in &counts {
        let m: f64 = row.iter().zip(errors).map(|(&c, e)| c as f64 * e).sum::<f64>() / r;
        let m2: f64 = row.iter().zip(errors).map(|(&c, e)| c as f64 * e * e).sum::<f64>() / r;
        mean_err.push(m);
        se_err.push(se(m, m2));
        for (&i, (freq, err)) in tail_out.iter_mut() {
            let f = row[i..].iter().sum::<u64>() as f64 / r;
            freq.push(f);
            err.push(se(f, f));
        }
    }
    EmpiricalSeries {
        horizon: counts.len() - 1,
        runs,
        mean_err,
        se_err,
        tails: tail_out,
        counts,
    }
}
