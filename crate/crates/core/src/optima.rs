//! Direct escape from a Deceptive level to the optimum.
//!
//! From level `j` the optimum is reached only by flipping exactly the
//! `n - j + 1` zero bits, so the escape probability is one flip-kernel value.
//! This module locates the rates that maximize it.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::kernel::{p1_flip, p2_flip};

/// Relative margin for calling a crossover gain strict.
pub const STRICT_GAIN_REL_TOL: f64 = 1e-9;
/// Interval width at which golden-section search stops.
pub const GOLDEN_TOL: f64 = 1e-10;

fn check_level(n: usize, j: usize) -> Result<()> {
    if n < 3 {
        return Err(domain(format!("escape analysis needs n >= 3, got {n}")));
    }
    if j == 0 || j > n {
        return Err(domain(format!("level j = {j} outside 1..={n}")));
    }
    Ok(())
}

/// Mutation-only escape probability `p_m^(n-j+1) (1-p_m)^(j-1)`.
pub fn escape_mutation(n: usize, j: usize, p_m: f64) -> Result<f64> {
    check_level(n, j)?;
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(domain(format!("p_m = {p_m} outside (0, 1)")));
    }
    p1_flip(n - j + 1, n, p_m)
}

/// Escape probability with binomial crossover.
///
/// Defined on the closed range `C_R` in `[0, 1]` so maximization can reach
/// the `C_R -> 0` supremum.
pub fn escape_crossover(n: usize, j: usize, c_r: f64, q_m: f64) -> Result<f64> {
    check_level(n, j)?;
    if !(q_m > 0.0 && q_m < 1.0) {
        return Err(domain(format!("q_m = {q_m} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&c_r) {
        return Err(domain(format!("C_R = {c_r} outside [0, 1]")));
    }
    p2_flip(n - j + 1, n, q_m, c_r)
}

/// Best mutation rate for escaping level `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutationOptimum {
    pub p_star: f64,
    pub max: f64,
    /// The optimum sits at `p_m = 1`, outside the open domain; `max` is a
    /// supremum.
    pub boundary: bool,
}

/// `p* = (n-j+1)/n` with value `(p*)^(n-j+1) ((j-1)/n)^(j-1)`.
pub fn optimal_mutation_rate(n: usize, j: usize) -> Result<MutationOptimum> {
    check_level(n, j)?;
    let nf = n as f64;
    let a = (n - j + 1) as f64;
    let b = (j - 1) as f64;
    let p_star = a / nf;
    // powi(0) is 1, which supplies the 0^0 = 1 convention at j = 1.
    let max = p_star.powi(n as i32 - j as i32 + 1) * (b / nf).powi(j as i32 - 1);
    Ok(MutationOptimum {
        p_star,
        max,
        boundary: j == 1,
    })
}

/// Shape of the crossover-rate optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverRegime {
    /// Escape probability increases in `C_R`; best at `C_R = 1`.
    Full,
    /// Interior maximizer with a closed form.
    ClosedFormInterior,
    /// Interior maximizer found numerically inside a known bracket.
    NumericInterior,
    /// Decreasing in `C_R`; supremum as `C_R -> 0`.
    Vanishing,
}

impl CrossoverRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossoverRegime::Full => "full",
            CrossoverRegime::ClosedFormInterior => "closed_form_interior",
            CrossoverRegime::NumericInterior => "numeric_interior",
            CrossoverRegime::Vanishing => "vanishing",
        }
    }
}

/// Best crossover rate for escaping level `j` at fixed `q_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverOptimum {
    pub c_star: f64,
    pub max: f64,
    pub regime: CrossoverRegime,
}

/// Classifies the optimum by level and mutation rate.
///
/// Thresholds are compared as `q_m <= a / b` through `q_m * b <= a`, so grid
/// values sitting exactly on a threshold land on the closed side.
pub fn crossover_regime(n: usize, j: usize, q_m: f64) -> Result<CrossoverRegime> {
    check_level(n, j)?;
    let nf = n as f64;
    let above = |num: f64, den: f64| q_m > num / den;
    Ok(if j == 1 {
        CrossoverRegime::Full
    } else if j == 2 {
        if above(nf - 1.0, nf) {
            CrossoverRegime::ClosedFormInterior
        } else {
            CrossoverRegime::Full
        }
    } else if j < n {
        if above((n - j) as f64, nf - 1.0) {
            CrossoverRegime::NumericInterior
        } else {
            CrossoverRegime::Full
        }
    } else if !above(1.0, nf) {
        CrossoverRegime::Full
    } else if !above(1.0, 2.0) {
        CrossoverRegime::ClosedFormInterior
    } else {
        CrossoverRegime::Vanishing
    })
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Maximizer of the crossover escape probability over `C_R` in `[0, 1]`.
pub fn optimal_crossover_rate(n: usize, j: usize, q_m: f64) -> Result<CrossoverOptimum> {
    let regime = crossover_regime(n, j, q_m)?;
    let s = |c: f64| escape_crossover(n, j, c, q_m);
    let nf = n as f64;
    let c_star = match regime {
        CrossoverRegime::Full => 1.0,
        CrossoverRegime::Vanishing => 0.0,
        CrossoverRegime::ClosedFormInterior if j == 2 => (nf - 2.0) / (nf * q_m - 1.0),
        CrossoverRegime::ClosedFormInterior => (1.0 - 2.0 * q_m) / (q_m * (nf - 1.0 - nf * q_m)),
        CrossoverRegime::NumericInterior => {
            let f = |c: f64| s(c).unwrap_or(f64::NEG_INFINITY);
            let lo = (n - j) as f64 / ((nf - 1.0) * q_m);
            let hi = ((n - j + 1) as f64 / ((nf - 1.0) * q_m)).min(1.0);
            let mut candidates = vec![1.0, lo, hi, golden_max(f, 0.0, 1.0, GOLDEN_TOL)];
            if lo < hi {
                candidates.push(golden_max(f, lo, hi, GOLDEN_TOL));
            }
            candidates.into_iter().max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap()
        }
    };
    Ok(CrossoverOptimum {
        c_star,
        max: s(c_star)?,
        regime,
    })
}

/// Whether tuning `C_R` strictly beats plain mutation at `p_m = q_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeGain {
    /// Measured: best crossover escape exceeds mutation escape by more than
    /// [`STRICT_GAIN_REL_TOL`] relative.
    pub strict_improvement: bool,
    /// Predicted from the threshold on `q_m`.
    pub predicted: bool,
}

impl EscapeGain {
    pub fn consistent(&self) -> bool {
        self.strict_improvement == self.predicted
    }
}

/// Smallest `q_m` above which lowering `C_R` from 1 strictly raises the
/// escape probability: `(n(n-j) + j - 1) / (n(n-1))`.
///
/// This is the sign change of `d s / d C_R` at `C_R = 1`. It equals
/// `(n-1)/n` at `j = 2`, `1/n` at `j = n` and 1 at `j = 1`. For `3 <= j < n`
/// it sits strictly above `(n-j)/(n-1)`, the point where the maximizer may
/// first leave `C_R = 1`; between the two the optimum is still `C_R = 1`.
pub fn strict_gain_threshold(n: usize, j: usize) -> Result<f64> {
    check_level(n, j)?;
    let nf = n as f64;
    Ok((nf * (n - j) as f64 + (j - 1) as f64) / (nf * (nf - 1.0)))
}

/// Threshold prediction of a strict escape gain from tuning `C_R`.
pub fn predicted_gain(n: usize, j: usize, q_m: f64) -> Result<bool> {
    Ok(q_m > strict_gain_threshold(n, j)?)
}

pub fn crossover_escape_gain(n: usize, j: usize, q_m: f64) -> Result<EscapeGain> {
    let best = optimal_crossover_rate(n, j, q_m)?;
    let base = escape_mutation(n, j, q_m)?;
    Ok(EscapeGain {
        strict_improvement: best.max > base * (1.0 + STRICT_GAIN_REL_TOL),
        predicted: predicted_gain(n, j, q_m)?,
    })
}

/// Full escape analysis of one level at one mutation rate.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeAnalysis {
    pub n: usize,
    pub j: usize,
    pub q_m: f64,
    /// Mutation-only escape at `p_m = q_m`.
    pub p0j: f64,
    pub optimal_p_m: f64,
    pub p0j_max: f64,
    pub mutation_boundary: bool,
    pub optimal_c_r: f64,
    pub s0j_max: f64,
    pub regime: CrossoverRegime,
    pub strict_improvement: bool,
    pub predicted_strict: bool,
}

pub fn escape_analysis(n: usize, j: usize, q_m: f64) -> Result<EscapeAnalysis> {
    let m = optimal_mutation_rate(n, j)?;
    let c = optimal_crossover_rate(n, j, q_m)?;
    let gain = crossover_escape_gain(n, j, q_m)?;
    Ok(EscapeAnalysis {
        n,
        j,
        q_m,
        p0j: escape_mutation(n, j, q_m)?,
        optimal_p_m: m.p_star,
        p0j_max: m.max,
        mutation_boundary: m.boundary,
        optimal_c_r: c.c_star,
        s0j_max: c.max,
        regime: c.regime,
        strict_improvement: gain.strict_improvement,
        predicted_strict: gain.predicted,
    })
}
