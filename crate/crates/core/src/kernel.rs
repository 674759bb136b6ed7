//! Probabilities of flipping one exact `l`-bit pattern.
//!
//! Mutation-only flips every bit independently with rate `p_m`. Mutation with
//! binomial crossover keeps a mutated bit only if its position is the forced
//! index or passes an independent `C_R` draw.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Which operator generates offspring, with its rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelVariant {
    MutationOnly { p_m: f64 },
    MutationCrossover { q_m: f64, c_r: f64 },
}

/// A flip kernel bound to a dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipKernel {
    pub n: usize,
    pub variant: KernelVariant,
}

impl FlipKernel {
    pub fn mutation_only(n: usize, p_m: f64) -> Result<Self> {
        check_n(n)?;
        if !(p_m > 0.0 && p_m < 1.0) {
            return Err(domain(format!("p_m = {p_m} outside (0, 1)")));
        }
        Ok(Self {
            n,
            variant: KernelVariant::MutationOnly { p_m },
        })
    }

    pub fn mutation_crossover(n: usize, q_m: f64, c_r: f64) -> Result<Self> {
        check_n(n)?;
        if !(q_m > 0.0 && q_m < 1.0) {
            return Err(domain(format!("q_m = {q_m} outside (0, 1)")));
        }
        if !(c_r > 0.0 && c_r <= 1.0) {
            return Err(domain(format!("C_R = {c_r} outside (0, 1]")));
        }
        Ok(Self {
            n,
            variant: KernelVariant::MutationCrossover { q_m, c_r },
        })
    }

    /// Crossover kernel with `C_R * q_m = p`, i.e. `q_m = p / C_R`.
    pub fn coupled(n: usize, p: f64, c_r: f64) -> Result<Self> {
        if !(c_r > 0.0 && c_r <= 1.0) {
            return Err(domain(format!("C_R = {c_r} outside (0, 1]")));
        }
        Self::mutation_crossover(n, p / c_r, c_r)
    }

    /// Probability of flipping one specific set of `l` bits and no others.
    pub fn flip(&self, l: usize) -> Result<f64> {
        match self.variant {
            KernelVariant::MutationOnly { p_m } => p1_flip(l, self.n, p_m),
            KernelVariant::MutationCrossover { q_m, c_r } => p2_flip(l, self.n, q_m, c_r),
        }
    }

    /// `flip(l)` for every `l` in `0..=n`.
    pub fn table(&self) -> Result<Vec<f64>> {
        (0..=self.n).map(|l| self.flip(l)).collect()
    }

    /// Effective per-bit flip rate (`p_m`, or `C_R * q_m`).
    pub fn effective_rate(&self) -> f64 {
        match self.variant {
            KernelVariant::MutationOnly { p_m } => p_m,
            KernelVariant::MutationCrossover { q_m, c_r } => q_m * c_r,
        }
    }

    pub fn is_crossover(&self) -> bool {
        matches!(self.variant, KernelVariant::MutationCrossover { .. })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("dimension n must be positive"));
    }
    Ok(())
}

fn check_l(l: usize, n: usize) -> Result<()> {
    if l > n {
        return Err(domain(format!("pattern size l = {l} outside 0..={n}")));
    }
    Ok(())
}

/// `p^l (1-p)^(n-l)`.
pub fn p1_flip(l: usize, n: usize, p_m: f64) -> Result<f64> {
    check_l(l, n)?;
    Ok(p_m.powi(l as i32) * (1.0 - p_m).powi((n - l) as i32))
}

/// Exact-pattern probability for mutation followed by binomial crossover.
///
/// The `l = n` and `l = 0` cases are evaluated from their own closed forms;
/// the general expression has a `(1 - q C_R)^(-1)` factor at `l = n`.
pub fn p2_flip(l: usize, n: usize, q_m: f64, c_r: f64) -> Result<f64> {
    check_l(l, n)?;
    let qc = q_m * c_r;
    if l == n {
        return Ok(c_r.powi(n as i32 - 1) * q_m.powi(n as i32));
    }
    if qc >= 1.0 {
        return Err(Error::Singular(format!(
            "q_m * C_R = {qc} leaves no mass for unflipped bits"
        )));
    }
    if l == 0 {
        return Ok((1.0 - q_m) * (1.0 - qc).powi(n as i32 - 1));
    }
    let nf = n as f64;
    let lf = l as f64;
    let lead = (lf + (nf - lf) * c_r - nf * qc) / nf;
    Ok(lead * c_r.powi(l as i32 - 1) * q_m.powi(l as i32) * (1.0 - qc).powi((n - l - 1) as i32))
}

/// `p2_flip - p1_flip` under `p_m = C_R q_m = p`, in factored form.
pub fn flip_difference(l: usize, p: f64, c_r: f64, n: usize) -> Result<f64> {
    if !(c_r > 0.0 && c_r < 1.0) {
        return Err(domain(format!("C_R = {c_r} outside (0, 1)")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("p = {p} outside (0, 1)")));
    }
    if l == 0 || l >= n {
        return Err(domain(format!("l = {l} outside 1..={}", n.saturating_sub(1))));
    }
    let lf = l as f64;
    Ok((1.0 / c_r - 1.0) * (lf / n as f64 - p) * p.powi(l as i32) * (1.0 - p).powi((n - l - 1) as i32))
}

/// Per-`l` outcome of comparing the two kernels under the coupled setting.
#[derive(Debug, Clone, Serialize)]
pub struct FlipComparison {
    pub l: usize,
    pub p1: f64,
    pub p2: f64,
    pub holds: bool,
}

/// Result of checking `p1_flip(l) <= p2_flip(l)` for all `l` in `1..=n`.
#[derive(Debug, Clone, Serialize)]
pub struct FlipDominanceReport {
    pub n: usize,
    pub p: f64,
    pub c_r: f64,
    pub rows: Vec<FlipComparison>,
    pub holds: bool,
    /// `p > 1/n`: the ordering is not expected to hold.
    pub out_of_scope: bool,
    /// `C_R = 1`: both kernels coincide.
    pub boundary: bool,
}

/// Absolute slack allowed when comparing `p1` against `p2`.
pub const FLIP_SLACK: f64 = 1e-14;

/// Compares the kernels for every nonzero pattern size at `p_m = C_R q_m = p`.
pub fn flip_dominance_report(n: usize, p: f64, c_r: f64) -> Result<FlipDominanceReport> {
    if !(c_r > 0.0 && c_r <= 1.0) {
        return Err(domain(format!("C_R = {c_r} outside (0, 1]")));
    }
    let q_m = p / c_r;
    let mut rows = Vec::with_capacity(n);
    for l in 1..=n {
        let p1 = p1_flip(l, n, p)?;
        let p2 = p2_flip(l, n, q_m, c_r)?;
        rows.push(FlipComparison {
            l,
            p1,
            p2,
            holds: p1 <= p2 + FLIP_SLACK,
        });
    }
    Ok(FlipDominanceReport {
        n,
        p,
        c_r,
        holds: rows.iter().all(|r| r.holds),
        rows,
        out_of_scope: p > 1.0 / n as f64,
        boundary: c_r == 1.0,
    })
}
