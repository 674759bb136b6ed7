//! Level-decomposable problems `max f(|x|)` over `{0,1}^n`.
//!
//! Only the map from ones-count to error level matters for the chain
//! analysis, so a problem is fully described by its error vector and that map.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Tolerance on the total mass of a [`LevelDistribution`].
pub const DISTRIBUTION_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    OneMax,
    Deceptive,
    Custom,
}

/// A problem whose fitness depends only on the number of one-bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelProblem {
    kind: ProblemKind,
    n: usize,
    error_vector: Vec<f64>,
    level_of_ones: Vec<usize>,
}

/// On-disk layout of a custom problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomProblemFile {
    pub n: usize,
    pub error_vector: Vec<f64>,
    pub level_of_ones: Vec<usize>,
}

/// Level of a OneMax solution: the number of zero bits.
pub fn onemax_error(ones: usize, n: usize) -> Result<usize> {
    if ones > n {
        return Err(domain(format!("ones count {ones} exceeds n = {n}")));
    }
    Ok(n - ones)
}

/// Level of a Deceptive solution. The all-ones optimum is level 0; any other
/// string with `c` ones sits at level `c + 1`, so the all-zeros local optimum
/// is level 1.
pub fn deceptive_error(ones: usize, n: usize) -> Result<usize> {
    if ones > n {
        return Err(domain(format!("ones count {ones} exceeds n = {n}")));
    }
    Ok(if ones == n { 0 } else { ones + 1 })
}

/// Binomial coefficient as a double, via the multiplicative formula.
///
/// Exact for every `n <= 50` (all intermediate products stay below 2^53).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

impl LevelProblem {
    pub fn onemax(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self {
            kind: ProblemKind::OneMax,
            n,
            error_vector: (0..=n).map(|i| i as f64).collect(),
            level_of_ones: (0..=n).map(|c| n - c).collect(),
        })
    }

    pub fn deceptive(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self {
            kind: ProblemKind::Deceptive,
            n,
            error_vector: (0..=n).map(|i| i as f64).collect(),
            level_of_ones: (0..=n).map(|c| if c == n { 0 } else { c + 1 }).collect(),
        })
    }

    /// A custom problem from an explicit error vector and level map.
    pub fn custom(error_vector: Vec<f64>, level_of_ones: Vec<usize>) -> Result<Self> {
        if level_of_ones.is_empty() {
            return Err(config("level_of_ones must not be empty"));
        }
        let n = level_of_ones.len() - 1;
        check_dimension(n)?;
        if error_vector.len() != n + 1 {
            return Err(config(format!(
                "error_vector has {} entries, expected n + 1 = {}",
                error_vector.len(),
                n + 1
            )));
        }
        if error_vector.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(domain("error_vector entries must be finite and non-negative"));
        }
        if error_vector[0] != 0.0 {
            return Err(domain("error_vector[0] must be 0"));
        }
        if error_vector.windows(2).any(|w| w[1] < w[0]) {
            return Err(domain("error_vector must be non-decreasing"));
        }
        if let Some(bad) = level_of_ones.iter().find(|&&l| l > n) {
            return Err(domain(format!("level index {bad} exceeds L = {n}")));
        }
        Ok(Self {
            kind: ProblemKind::Custom,
            n,
            error_vector,
            level_of_ones,
        })
    }

    pub fn from_custom_file(file: CustomProblemFile) -> Result<Self> {
        let problem = Self::custom(file.error_vector, file.level_of_ones)?;
        if problem.n != file.n {
            return Err(config(format!(
                "declared n = {} but level_of_ones describes n = {}",
                file.n, problem.n
            )));
        }
        Ok(problem)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_custom_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_custom_file(&self) -> CustomProblemFile {
        CustomProblemFile {
            n: self.n,
            error_vector: self.error_vector.clone(),
            level_of_ones: self.level_of_ones.clone(),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// Bitstring dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Highest level index `L`; levels run over `0..=L`.
    pub fn max_level(&self) -> usize {
        self.error_vector.len() - 1
    }

    pub fn level_count(&self) -> usize {
        self.error_vector.len()
    }

    pub fn error_vector(&self) -> &[f64] {
        &self.error_vector
    }

    pub fn level_of_ones(&self) -> &[usize] {
        &self.level_of_ones
    }

    pub fn level_of(&self, ones: usize) -> Result<usize> {
        self.level_of_ones
            .get(ones)
            .copied()
            .ok_or_else(|| domain(format!("ones count {ones} exceeds n = {}", self.n)))
    }

    /// Whether every level is hit by exactly one ones-count.
    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.level_count()];
        for &l in &self.level_of_ones {
            if seen[l] {
                return false;
            }
            seen[l] = true;
        }
        seen.iter().all(|&s| s)
    }

    /// Fitness as a function of the ones-count.
    ///
    /// The built-ins use their defining formulas. Custom problems rank
    /// solutions by level (`-level`), so elitist acceptance never moves to a
    /// higher level index.
    pub fn fitness(&self, ones: usize) -> f64 {
        let n = self.n;
        match self.kind {
            ProblemKind::OneMax => ones as f64,
            ProblemKind::Deceptive => {
                if ones == n {
                    n as f64
                } else {
                    (n - 1 - ones) as f64
                }
            }
            ProblemKind::Custom => -(self.level_of_ones[ones] as f64),
        }
    }

    /// Fitness indexed by ones-count, `0..=n`.
    pub fn fitness_table(&self) -> Vec<f64> {
        (0..=self.n).map(|c| self.fitness(c)).collect()
    }

    /// Level distribution of a uniformly random bitstring:
    /// `q[i] = sum over c with level(c) = i of C(n, c) / 2^n`.
    pub fn initial_distribution(&self) -> LevelDistribution {
        let mut q = vec![0.0; self.level_count()];
        let scale = 0.5_f64.powi(self.n as i32);
        for (c, &level) in self.level_of_ones.iter().enumerate() {
            q[level] += binomial(self.n, c) * scale;
        }
        LevelDistribution { q }
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("dimension n must be positive"));
    }
    if n > 64 {
        return Err(domain(format!("dimension n = {n} exceeds the supported maximum of 64")));
    }
    Ok(())
}

/// Probability vector over levels `0..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDistribution {
    q: Vec<f64>,
}

impl LevelDistribution {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(domain("distribution must have at least one level"));
        }
        if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(domain("distribution entries must lie in [0, 1]"));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
            return Err(domain(format!("distribution sums to {sum}, not 1")));
        }
        Ok(Self { q })
    }

    /// Wraps a vector produced by exact iteration without re-validating it.
    pub(crate) fn from_raw(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn uniform(levels: usize) -> Self {
        Self {
            q: vec![1.0 / levels as f64; levels],
        }
    }

    /// All mass on one level.
    pub fn point(levels: usize, level: usize) -> Result<Self> {
        if level >= levels {
            return Err(domain(format!("level {level} outside 0..{levels}")));
        }
        let mut q = vec![0.0; levels];
        q[level] = 1.0;
        Ok(Self { q })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.q.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15
    }

    #[test]
    fn onemax_error_counts_zeros() {
        assert_eq!(onemax_error(7, 7).unwrap(), 0);
        assert_eq!(onemax_error(0, 7).unwrap(), 7);
        // 1111000
        let bits = [1, 1, 1, 1, 0, 0, 0];
        let zeros = bits.iter().filter(|&&b| b == 0).count();
        assert_eq!(onemax_error(4, 7).unwrap(), zeros);
        assert!(onemax_error(8, 7).is_err());
    }

    #[test]
    fn deceptive_error_table() {
        let n = 9;
        assert_eq!(deceptive_error(n, n).unwrap(), 0);
        assert_eq!(deceptive_error(0, n).unwrap(), 1);
        assert_eq!(deceptive_error(n - 1, n).unwrap(), n);
        assert!(deceptive_error(n + 1, n).is_err());
    }

    #[test]
    fn deceptive_error_is_a_bijection() {
        for n in 1..=20 {
            let mut levels: Vec<usize> = (0..=n).map(|c| deceptive_error(c, n).unwrap()).collect();
            levels.sort_unstable();
            assert_eq!(levels, (0..=n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(50, 25), 126_410_606_437_752.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
    }

    #[test]
    fn initial_distribution_n2() {
        let q = LevelProblem::onemax(2).unwrap().initial_distribution();
        let expect = [0.25, 0.5, 0.25];
        assert!(q.as_slice().iter().zip(expect).all(|(a, b)| close(*a, b)));

        // 00 -> level 1, 01/10 -> level 2, 11 -> level 0
        let q = LevelProblem::deceptive(2).unwrap().initial_distribution();
        let expect = [0.25, 0.25, 0.5];
        assert!(q.as_slice().iter().zip(expect).all(|(a, b)| close(*a, b)));
    }

    #[test]
    fn initial_distribution_matches_enumeration() {
        for n in 1..=12 {
            for problem in [LevelProblem::onemax(n).unwrap(), LevelProblem::deceptive(n).unwrap()] {
                let q = problem.initial_distribution();
                assert!((q.sum() - 1.0).abs() <= 1e-12);
                let weighted: f64 = q
                    .as_slice()
                    .iter()
                    .zip(problem.error_vector())
                    .map(|(p, e)| p * e)
                    .sum();
                let mut brute = 0.0;
                for x in 0u32..(1 << n) {
                    let level = problem.level_of(x.count_ones() as usize).unwrap();
                    brute += problem.error_vector()[level];
                }
                brute /= (1u64 << n) as f64;
                assert!((weighted - brute).abs() <= 1e-12, "n={n} {:?}", problem.kind());
            }
        }
    }

    #[test]
    fn builtins_are_bijective() {
        assert!(LevelProblem::onemax(6).unwrap().is_bijective());
        assert!(LevelProblem::deceptive(6).unwrap().is_bijective());
        let p = LevelProblem::custom(vec![0.0, 1.0, 1.0], vec![1, 1, 0]).unwrap();
        assert!(!p.is_bijective());
    }

    #[test]
    fn custom_validation() {
        assert!(LevelProblem::custom(vec![0.0, 2.0, 1.0], vec![2, 1, 0]).is_err());
        assert!(LevelProblem::custom(vec![1.0, 2.0, 3.0], vec![2, 1, 0]).is_err());
        assert!(LevelProblem::custom(vec![0.0, 1.0], vec![2, 1, 0]).is_err());
        assert!(LevelProblem::custom(vec![0.0, 1.0, 2.0], vec![3, 1, 0]).is_err());
        let json = r#"{"n": 3, "error_vector": [0, 1, 2, 5], "level_of_ones": [3, 2, 1, 0]}"#;
        let p = LevelProblem::from_json(json).unwrap();
        assert_eq!(p.kind(), ProblemKind::Custom);
        assert_eq!(p.max_level(), 3);
        let bad_n = r#"{"n": 4, "error_vector": [0, 1, 2, 5], "level_of_ones": [3, 2, 1, 0]}"#;
        assert!(LevelProblem::from_json(bad_n).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(LevelDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(LevelDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(LevelDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(LevelDistribution::point(3, 3).is_err());
        assert!((LevelDistribution::uniform(7).sum() - 1.0).abs() < 1e-15);
    }
}
