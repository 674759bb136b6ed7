//! Level-transition matrices of elitist (1+1) algorithms.
//!
//! `r[i][j]` is the probability of moving from level `j` to level `i`. Only the
//! improving entries `i < j` are computed from the kernel; each diagonal entry
//! takes the remaining mass of its column.

use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::kernel::{FlipKernel, KernelVariant};
use crate::level::{binomial, LevelProblem, ProblemKind};

/// Slack for entrywise comparisons between matrices.
pub const COMPARE_TOL: f64 = 1e-12;

/// Column residues more negative than this are reported instead of clamped.
pub const RESIDUE_TOL: f64 = 1e-12;

/// Largest `n` for which mutation-only outcomes are enumerated.
pub const BRUTEFORCE_MAX_N_MUTATION: usize = 8;

/// Largest `n` for which mutation-with-crossover outcomes are enumerated.
pub const BRUTEFORCE_MAX_N_CROSSOVER: usize = 5;

/// Dense column-stochastic upper-triangular matrix over levels `0..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds a matrix from its strictly upper part; the diagonal is filled in.
    pub fn from_off_diagonal(max_level: usize, mut off: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let size = max_level + 1;
        let mut m = Self {
            size,
            data: vec![0.0; size * size],
        };
        for j in 0..size {
            for i in 0..j {
                m.data[i * size + j] = off(i, j);
            }
        }
        m.fill_diagonal()?;
        Ok(m)
    }

    /// Wraps explicit rows, checking shape, triangularity and column sums.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(config("matrix must have at least one row"));
        }
        let mut data = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(config(format!("row {i} has {} entries, expected {size}", row.len())));
            }
            data.extend(row);
        }
        let m = Self { size, data };
        m.validate()?;
        Ok(m)
    }

    fn fill_diagonal(&mut self) -> Result<()> {
        let size = self.size;
        for j in 0..size {
            let off: f64 = (0..j).map(|i| self.data[i * size + j]).sum();
            let residue = 1.0 - off;
            if residue < -RESIDUE_TOL {
                return Err(Error::NegativeResidue {
                    column: j,
                    excess: -residue,
                });
            }
            self.data[j * size + j] = residue.max(0.0);
        }
        Ok(())
    }

    /// Checks entry range, upper-triangularity and column sums.
    pub fn validate(&self) -> Result<()> {
        let size = self.size;
        for j in 0..size {
            let mut sum = 0.0;
            for i in 0..size {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(config(format!("entry ({i},{j}) = {v} outside [0, 1]")));
                }
                if i > j && v != 0.0 {
                    return Err(config(format!("entry ({i},{j}) below the diagonal is nonzero")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > COMPARE_TOL {
                return Err(config(format!("column {j} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Highest level index `L`.
    pub fn max_level(&self) -> usize {
        self.size - 1
    }

    /// Number of levels, `L + 1`.
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    /// Row-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.size)
            .map(|j| (0..self.size).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Diagonal entries of levels `1..=L`.
    pub fn non_optimal_diagonal(&self) -> Vec<f64> {
        (1..self.size).map(|j| self.get(j, j)).collect()
    }
}

/// Transition matrix for the problem and kernel, dispatching on problem kind.
///
/// Custom problems need a bijective level map so that the level process is a
/// Markov chain independent of which string represents a level.
pub fn build(problem: &LevelProblem, kernel: &FlipKernel) -> Result<TransitionMatrix> {
    match problem.kind() {
        ProblemKind::OneMax => build_onemax(problem.n(), kernel),
        ProblemKind::Deceptive => build_deceptive(problem.n(), kernel),
        ProblemKind::Custom => build_from_counts(problem, kernel),
    }
}

fn check_kernel(n: usize, kernel: &FlipKernel) -> Result<Vec<f64>> {
    if kernel.n != n {
        return Err(config(format!("kernel dimension {} does not match n = {n}", kernel.n)));
    }
    kernel.table()
}

/// OneMax: level `j` has `j` zeros. Reaching level `i` flips `k` ones and
/// `k + j - i` zeros.
pub fn build_onemax(n: usize, kernel: &FlipKernel) -> Result<TransitionMatrix> {
    let p = check_kernel(n, kernel)?;
    TransitionMatrix::from_off_diagonal(n, |i, j| {
        (0..=(n - j).min(i))
            .map(|k| binomial(n - j, k) * binomial(j, k + j - i) * p[2 * k + j - i])
            .sum()
    })
}

/// Deceptive: level `j >= 1` has `j - 1` ones. The optimum needs all
/// `n - j + 1` zeros flipped and nothing else; other improvements move toward
/// fewer ones.
pub fn build_deceptive(n: usize, kernel: &FlipKernel) -> Result<TransitionMatrix> {
    if n < 2 {
        return Err(config("deceptive matrices need n >= 2"));
    }
    let p = check_kernel(n, kernel)?;
    TransitionMatrix::from_off_diagonal(n, |i, j| {
        if i == 0 {
            return p[n - j + 1];
        }
        (0..=(n - j + 1).min(i - 1))
            .map(|k| binomial(n - j + 1, k) * binomial(j - 1, k + j - i) * p[2 * k + j - i])
            .sum()
    })
}

/// Generic builder over ones-counts for problems with a bijective level map.
///
/// From `c` ones, flipping `a` ones and `b` zeros lands on `c - a + b` ones
/// with probability `C(c,a) C(n-c,b) P(a+b)`.
pub fn build_from_counts(problem: &LevelProblem, kernel: &FlipKernel) -> Result<TransitionMatrix> {
    if !problem.is_bijective() {
        return Err(config("level map must be a bijection between ones-counts and levels"));
    }
    let n = problem.n();
    let p = check_kernel(n, kernel)?;
    let fit = problem.fitness_table();
    let levels = problem.level_of_ones();
    let mut ones_at = vec![0; problem.level_count()];
    for (c, &l) in levels.iter().enumerate() {
        ones_at[l] = c;
    }
    let size = problem.level_count();
    let mut off = vec![0.0; size * size];
    for j in 1..size {
        let c = ones_at[j];
        for a in 0..=c {
            for b in 0..=(n - c) {
                let c2 = c - a + b;
                let i = levels[c2];
                if i < j && fit[c2] >= fit[c] {
                    off[i * size + j] += binomial(c, a) * binomial(n - c, b) * p[a + b];
                }
            }
        }
    }
    TransitionMatrix::from_off_diagonal(size - 1, |i, j| off[i * size + j])
}

/// Which string stands in for a level in [`bruteforce_transition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representative {
    /// Ones packed into the low bits.
    Low,
    /// Ones packed into the high bits.
    High,
}

impl Representative {
    fn string(self, ones: usize, n: usize) -> u64 {
        let block = if ones == 64 { u64::MAX } else { (1u64 << ones) - 1 };
        match self {
            Representative::Low => block,
            Representative::High => block << (n - ones),
        }
    }
}

/// Transition matrix by exhaustive enumeration of operator randomness on one
/// representative string per level.
pub fn bruteforce_transition(
    problem: &LevelProblem,
    kernel: &FlipKernel,
    representative: Representative,
) -> Result<TransitionMatrix> {
    let n = problem.n();
    if kernel.n != n {
        return Err(config(format!("kernel dimension {} does not match n = {n}", kernel.n)));
    }
    let limit = if kernel.is_crossover() {
        BRUTEFORCE_MAX_N_CROSSOVER
    } else {
        BRUTEFORCE_MAX_N_MUTATION
    };
    if n > limit {
        return Err(Error::EnumerationLimit(format!(
            "n = {n} exceeds the enumeration limit of {limit} for this kernel"
        )));
    }
    let flips = flip_mask_distribution(n, &kernel.variant);
    let fit = problem.fitness_table();
    let size = problem.level_count();
    let mut r = vec![vec![0.0; size]; size];
    #[allow(clippy::needless_range_loop)] // `j` is a column index into every row
    for j in 0..size {
        let Some(c) = problem.level_of_ones().iter().position(|&l| l == j) else {
            r[j][j] = 1.0;
            continue;
        };
        let x = representative.string(c, n);
        for (mask, &prob) in flips.iter().enumerate() {
            let y = x ^ mask as u64;
            let cy = y.count_ones() as usize;
            let dest = if fit[cy] >= fit[c] { cy } else { c };
            r[problem.level_of(dest)?][j] += prob;
        }
    }
    TransitionMatrix::from_off_diagonal(size - 1, |i, j| r[i][j])
}

/// Probability of each flip mask over `n` bits.
fn flip_mask_distribution(n: usize, variant: &KernelVariant) -> Vec<f64> {
    let full = 1usize << n;
    let bern = |mask: usize, rate: f64, bits: u32| {
        let k = mask.count_ones() as i32;
        rate.powi(k) * (1.0 - rate).powi(bits as i32 - k)
    };
    let mut out = vec![0.0; full];
    match *variant {
        KernelVariant::MutationOnly { p_m } => {
            for (m, o) in out.iter_mut().enumerate() {
                *o = bern(m, p_m, n as u32);
            }
        }
        KernelVariant::MutationCrossover { q_m, c_r } => {
            for m in 0..full {
                let pm = bern(m, q_m, n as u32);
                for forced in 0..n {
                    let fbit = 1usize << forced;
                    for cross in 0..full {
                        if cross & fbit == 0 {
                            continue;
                        }
                        // The forced position takes no crossover draw.
                        let pc = bern(cross & !fbit, c_r, n as u32 - 1);
                        out[m & cross] += pm * pc / n as f64;
                    }
                }
            }
        }
    }
    out
}

/// The two artificial chains where dominance does not give outperformance.
///
/// `R` is the dominated chain, `S` the dominating one.
pub fn counterexample_pair(n: usize) -> Result<(TransitionMatrix, TransitionMatrix)> {
    if n < 3 {
        return Err(config("counterexample chains need n >= 3"));
    }
    let nf = n as f64;
    let n2 = nf * nf;
    let n3 = n2 * nf;
    let r = TransitionMatrix::from_off_diagonal(n, |i, j| {
        if i == 0 {
            j as f64 / n3
        } else if i + 1 == j {
            (j - 1) as f64 / n2
        } else {
            0.0
        }
    })?;
    let s = TransitionMatrix::from_off_diagonal(n, |i, j| {
        if i == 0 {
            2.0 * j as f64 / n3
        } else if i + 1 == j {
            (j - 1) as f64 * (1.0 / n2 + 1.0 / (2.0 * nf))
        } else {
            0.0
        }
    })?;
    Ok((r, s))
}

/// Result of an entrywise dominance check over the improving entries.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub dominates: bool,
    /// Entries `(i, j)` where the first matrix falls below the second.
    pub violations: Vec<(usize, usize)>,
    /// First entry where the first matrix is strictly larger.
    pub strict: Option<(usize, usize)>,
}

/// Whether `a[i][j] >= b[i][j]` for every `i < j`, strictly somewhere.
pub fn dominates(a: &TransitionMatrix, b: &TransitionMatrix) -> Result<DominanceReport> {
    same_size(a, b)?;
    let mut violations = Vec::new();
    let mut strict = None;
    for j in 0..a.size() {
        for i in 0..j {
            let d = a.get(i, j) - b.get(i, j);
            if d < -COMPARE_TOL {
                violations.push((i, j));
            } else if d > COMPARE_TOL && strict.is_none() {
                strict = Some((i, j));
            }
        }
    }
    Ok(DominanceReport {
        dominates: violations.is_empty() && strict.is_some(),
        violations,
        strict,
    })
}

fn same_size(a: &TransitionMatrix, b: &TransitionMatrix) -> Result<()> {
    if a.size() != b.size() {
        return Err(config(format!("matrix sizes differ: {} vs {}", a.size(), b.size())));
    }
    Ok(())
}

/// Outcome of one ordering condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub holds: bool,
    /// First `(i, j)` that violates the condition.
    pub first_violation: Option<(usize, usize)>,
}

/// Sufficient conditions for the chain `R` to outperform `S` at every step
/// from any common start.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    /// `s[j][j] >= r[j][j]`.
    pub diagonal: ConditionResult,
    /// `sum_{l<i} (r[l][j] - s[l][j]) >= 0` for `i < j`.
    pub cumulative_gain: ConditionResult,
    /// `sum_{l<=i} (s[l][j-1] - s[l][j]) >= 0` for `i < j - 1`.
    pub monotone_columns: ConditionResult,
}

impl OrderingReport {
    pub fn all_hold(&self) -> bool {
        self.diagonal.holds && self.cumulative_gain.holds && self.monotone_columns.holds
    }
}

/// Evaluates the three ordering conditions with slack [`COMPARE_TOL`].
pub fn ordering_conditions(r: &TransitionMatrix, s: &TransitionMatrix) -> Result<OrderingReport> {
    same_size(r, s)?;
    let size = r.size();
    let mut diag = None;
    for j in 0..size {
        if s.get(j, j) - r.get(j, j) < -COMPARE_TOL {
            diag = Some((j, j));
            break;
        }
    }
    let mut gain = None;
    'gain: for j in 1..size {
        let mut acc = 0.0;
        for i in 0..j {
            if i > 0 {
                acc += r.get(i - 1, j) - s.get(i - 1, j);
            }
            if acc < -COMPARE_TOL {
                gain = Some((i, j));
                break 'gain;
            }
        }
    }
    let mut mono = None;
    'mono: for j in 2..size {
        let mut acc = 0.0;
        for i in 0..j - 1 {
            acc += s.get(i, j - 1) - s.get(i, j);
            if acc < -COMPARE_TOL {
                mono = Some((i, j));
                break 'mono;
            }
        }
    }
    let result = |v: Option<(usize, usize)>| ConditionResult {
        holds: v.is_none(),
        first_violation: v,
    };
    Ok(OrderingReport {
        diagonal: result(diag),
        cumulative_gain: result(gain),
        monotone_columns: result(mono),
    })
}
