//! Exact fixed-budget analysis of level chains.
//!
//! Trajectories come from repeated matrix-vector products. Large horizons use
//! repeated squaring, with a log-scaled copy of the non-optimal block so that
//! error series far below `f64::MIN_POSITIVE` still compare correctly.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{config, domain, Error, Result};
use crate::level::LevelDistribution;
use crate::transition::TransitionMatrix;

/// Steps between drift checks in [`iterate`].
pub const RENORMALIZE_EVERY: usize = 10_000;
/// Mass drift that triggers renormalization.
pub const RENORMALIZE_DRIFT: f64 = 1e-9;
/// Absolute slack for the per-step outperformance relation.
pub const OUTPERFORM_TOL: f64 = 1e-12;
/// Relative slack when comparing spectral gaps.
pub const RADIUS_REL_TOL: f64 = 1e-9;
/// Relative noise floor for asymptotic probe comparisons.
pub const PROBE_REL_TOL: f64 = 1e-9;

/// Distributions `q[0..=T]` plus how often drift was corrected.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub distributions: Vec<LevelDistribution>,
    pub renormalizations: usize,
}

#[inline]
fn step(m: &TransitionMatrix, q: &[f64], out: &mut [f64]) {
    let s = m.size();
    let data = m.as_slice();
    for i in 0..s {
        let row = &data[i * s..(i + 1) * s];
        out[i] = (i..s).map(|j| row[j] * q[j]).sum();
    }
}

fn check_dims(m: &TransitionMatrix, q0: &LevelDistribution) -> Result<()> {
    if m.size() != q0.len() {
        return Err(config(format!(
            "distribution has {} levels, matrix has {}",
            q0.len(),
            m.size()
        )));
    }
    Ok(())
}

fn maybe_renormalize(t: usize, q: &mut [f64], count: &mut usize) {
    if t.is_multiple_of(RENORMALIZE_EVERY) {
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_DRIFT {
            q.iter_mut().for_each(|v| *v /= sum);
            *count += 1;
        }
    }
}

/// `q[t+1] = R q[t]` for `t < T`.
pub fn iterate(m: &TransitionMatrix, q0: &LevelDistribution, horizon: usize) -> Result<Trajectory> {
    check_dims(m, q0)?;
    let mut out = Vec::with_capacity(horizon + 1);
    let mut cur = q0.as_slice().to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut renormalizations = 0;
    out.push(q0.clone());
    for t in 1..=horizon {
        step(m, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        maybe_renormalize(t, &mut cur, &mut renormalizations);
        out.push(LevelDistribution::from_raw(cur.clone()));
    }
    Ok(Trajectory {
        distributions: out,
        renormalizations,
    })
}

/// Expected error and tail probabilities per generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub horizon: usize,
    pub eae: Vec<f64>,
    /// Tail index `i` to `Pr{level >= i}` per generation.
    pub tails: BTreeMap<usize, Vec<f64>>,
}

fn check_tails(tails: &[usize], max_level: usize) -> Result<()> {
    if let Some(&bad) = tails.iter().find(|&&i| i == 0 || i > max_level) {
        return Err(domain(format!("tail index {bad} outside 1..={max_level}")));
    }
    Ok(())
}

struct SeriesBuilder<'a> {
    errors: &'a [f64],
    series: MetricSeries,
    suffix: Vec<f64>,
}

impl<'a> SeriesBuilder<'a> {
    fn new(errors: &'a [f64], tails: &[usize], horizon: usize) -> Self {
        Self {
            errors,
            series: MetricSeries {
                horizon,
                eae: Vec::with_capacity(horizon + 1),
                tails: tails.iter().map(|&i| (i, Vec::with_capacity(horizon + 1))).collect(),
            },
            suffix: vec![0.0; errors.len() + 1],
        }
    }

    fn push(&mut self, q: &[f64]) {
        self.series
            .eae
            .push(q.iter().zip(self.errors).map(|(p, e)| p * e).sum());
        for i in (0..q.len()).rev() {
            self.suffix[i] = self.suffix[i + 1] + q[i];
        }
        for (&i, v) in self.series.tails.iter_mut() {
            v.push(self.suffix[i]);
        }
    }
}

/// EAE and tail series of an existing trajectory.
pub fn metrics(traj: &[LevelDistribution], errors: &[f64], tails: &[usize]) -> Result<MetricSeries> {
    let Some(first) = traj.first() else {
        return Err(config("trajectory is empty"));
    };
    if first.len() != errors.len() {
        return Err(config("error vector and distributions differ in length"));
    }
    check_tails(tails, errors.len() - 1)?;
    let mut b = SeriesBuilder::new(errors, tails, traj.len() - 1);
    for q in traj {
        b.push(q.as_slice());
    }
    Ok(b.series)
}

/// Iterates and reduces to metrics without keeping the distributions.
///
/// Returns the series and the number of renormalizations performed.
pub fn metric_series(
    m: &TransitionMatrix,
    q0: &LevelDistribution,
    errors: &[f64],
    tails: &[usize],
    horizon: usize,
) -> Result<(MetricSeries, usize)> {
    check_dims(m, q0)?;
    if errors.len() != m.size() {
        return Err(config("error vector and matrix differ in size"));
    }
    check_tails(tails, m.max_level())?;
    let mut b = SeriesBuilder::new(errors, tails, horizon);
    let mut cur = q0.as_slice().to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut renorm = 0;
    b.push(&cur);
    for t in 1..=horizon {
        step(m, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        maybe_renormalize(t, &mut cur, &mut renorm);
        b.push(&cur);
    }
    Ok((b.series, renorm))
}

/// Largest diagonal entry over the non-optimal levels.
pub fn spectral_radius(m: &TransitionMatrix) -> Result<f64> {
    m.non_optimal_diagonal()
        .into_iter()
        .reduce(f64::max)
        .ok_or_else(|| Error::Degenerate("chain has only the optimal level".into()))
}

/// Smallest total improving probability over non-optimal levels.
///
/// Equals `1 - spectral_radius` but is summed from the small entries, so it
/// keeps full relative precision when the radius is within rounding of 1.
pub fn spectral_gap(m: &TransitionMatrix) -> Result<f64> {
    (1..m.size())
        .map(|j| (0..j).map(|i| m.get(i, j)).sum::<f64>())
        .reduce(f64::min)
        .ok_or_else(|| Error::Degenerate("chain has only the optimal level".into()))
}

/// Whether `a` has a strictly smaller spectral radius than `b`, decided on the
/// gaps with relative tolerance [`RADIUS_REL_TOL`].
pub fn radius_strictly_smaller(a: &TransitionMatrix, b: &TransitionMatrix) -> Result<bool> {
    let ga = spectral_gap(a)?;
    let gb = spectral_gap(b)?;
    Ok(ga > gb * (1.0 + RADIUS_REL_TOL))
}

/// Average convergence rate `1 - (eae[t] / eae[0])^(1/t)`.
pub fn acr(eae: &[f64], t: usize) -> Result<f64> {
    let Some(&e0) = eae.first() else {
        return Err(config("series is empty"));
    };
    if e0 == 0.0 {
        return Err(Error::UndefinedAcr);
    }
    if t == 0 || t >= eae.len() {
        return Err(domain(format!("t = {t} outside 1..={}", eae.len().saturating_sub(1))));
    }
    Ok(1.0 - (eae[t] / e0).powf(1.0 / t as f64))
}

/// Maximal interval of generations with the same sign of `a - b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignRun {
    /// -1 when `a < b`, 0 within tolerance, +1 when `a > b`.
    pub sign: i8,
    pub start: usize,
    pub end: usize,
}

/// Pointwise comparison of one metric between two series.
#[derive(Debug, Clone, Serialize)]
pub struct MetricComparison {
    pub metric: String,
    /// `a[t] <= b[t] + tol` at every `t`.
    pub a_never_worse: bool,
    pub a_below: usize,
    pub b_below: usize,
    pub ties: usize,
    pub runs: Vec<SignRun>,
    pub final_sign: i8,
    /// First `t` where the sign changes between -1 and +1, ignoring ties.
    pub first_sign_change: Option<usize>,
}

/// Comparison of two series on every metric.
#[derive(Debug, Clone, Serialize)]
pub struct OutperformanceReport {
    /// `a` is never worse than `b` on any metric at any generation.
    pub outperforms: bool,
    pub comparisons: Vec<MetricComparison>,
}

impl OutperformanceReport {
    pub fn metric(&self, name: &str) -> Option<&MetricComparison> {
        self.comparisons.iter().find(|c| c.metric == name)
    }
}

fn sign_of(d: f64) -> i8 {
    if d < -OUTPERFORM_TOL {
        -1
    } else if d > OUTPERFORM_TOL {
        1
    } else {
        0
    }
}

fn compare_metric(metric: String, a: &[f64], b: &[f64]) -> MetricComparison {
    let mut runs: Vec<SignRun> = Vec::new();
    let (mut a_below, mut b_below, mut ties) = (0, 0, 0);
    let mut last_strict = 0i8;
    let mut first_sign_change = None;
    for (t, (x, y)) in a.iter().zip(b).enumerate() {
        let s = sign_of(x - y);
        match s {
            -1 => a_below += 1,
            1 => b_below += 1,
            _ => ties += 1,
        }
        if s != 0 {
            if last_strict != 0 && s != last_strict && first_sign_change.is_none() {
                first_sign_change = Some(t);
            }
            last_strict = s;
        }
        match runs.last_mut() {
            Some(r) if r.sign == s => r.end = t,
            _ => runs.push(SignRun {
                sign: s,
                start: t,
                end: t,
            }),
        }
    }
    MetricComparison {
        metric,
        a_never_worse: b_below == 0,
        a_below,
        b_below,
        ties,
        final_sign: runs.last().map_or(0, |r| r.sign),
        runs,
        first_sign_change,
    }
}

/// Compares `a` against `b` generation by generation.
pub fn outperformance_report(a: &MetricSeries, b: &MetricSeries) -> Result<OutperformanceReport> {
    if a.horizon != b.horizon || a.eae.len() != b.eae.len() {
        return Err(config(format!("horizons differ: {} vs {}", a.horizon, b.horizon)));
    }
    if !a.tails.keys().eq(b.tails.keys()) {
        return Err(config("tail index sets differ"));
    }
    let mut comparisons = vec![compare_metric("eae".into(), &a.eae, &b.eae)];
    for (i, ta) in &a.tails {
        comparisons.push(compare_metric(format!("tp_{i}"), ta, &b.tails[i]));
    }
    Ok(OutperformanceReport {
        outperforms: comparisons.iter().all(|c| c.a_never_worse),
        comparisons,
    })
}

/// Probe generations `1, 2, 4, ..., 2^19, 10^6`.
pub fn default_probe_times() -> Vec<u64> {
    let mut t: Vec<u64> = (0..20).map(|k| 1u64 << k).collect();
    t.push(1_000_000);
    t
}

/// Square matrix in row-major order, upper triangular.
#[derive(Clone)]
struct Upper {
    s: usize,
    d: Vec<f64>,
}

impl Upper {
    fn square(&self) -> Self {
        let s = self.s;
        let mut d = vec![0.0; s * s];
        for i in 0..s {
            for k in i..s {
                let a = self.d[i * s + k];
                if a == 0.0 {
                    continue;
                }
                for j in k..s {
                    d[i * s + j] += a * self.d[k * s + j];
                }
            }
        }
        Self { s, d }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let s = self.s;
        (0..s).map(|i| (i..s).map(|j| self.d[i * s + j] * v[j]).sum()).collect()
    }

    /// Divides by the largest entry and returns its logarithm.
    fn normalize(&mut self) -> f64 {
        let m = self.d.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.d.iter_mut().for_each(|v| *v /= m);
        m.ln()
    }
}

/// One chain advanced along the probe schedule.
struct ProbeChain {
    /// Powers `M^(2^k)` of the full matrix.
    full: Vec<Upper>,
    /// Log-scaled powers of the non-optimal block: `(matrix, log factor)`.
    sub: Vec<(Upper, f64)>,
    v: Vec<f64>,
    w: Vec<f64>,
    w_log: f64,
    t: u64,
}

impl ProbeChain {
    fn new(m: &TransitionMatrix, q0: &[f64]) -> Self {
        let s = m.size();
        let full = Upper {
            s,
            d: m.as_slice().to_vec(),
        };
        let mut sub = Upper {
            s: s - 1,
            d: (1..s)
                .flat_map(|i| (1..s).map(move |j| (i, j)))
                .map(|(i, j)| m.get(i, j))
                .collect(),
        };
        let log = sub.normalize();
        let mut w = q0[1..].to_vec();
        let w_log = rescale(&mut w);
        Self {
            full: vec![full],
            sub: vec![(sub, log)],
            v: q0.to_vec(),
            w,
            w_log,
            t: 0,
        }
    }

    fn power(&mut self, k: usize) {
        while self.full.len() <= k {
            let f = self.full.last().unwrap().square();
            let (last, log) = self.sub.last().unwrap();
            let mut sq = last.square();
            let l = sq.normalize() + 2.0 * log;
            self.full.push(f);
            self.sub.push((sq, l));
        }
    }

    fn advance_to(&mut self, t: u64) {
        let mut d = t - self.t;
        let mut k = 0;
        while d > 0 {
            if d & 1 == 1 {
                self.power(k);
                self.v = self.full[k].apply(&self.v);
                let (m, log) = &self.sub[k];
                self.w = m.apply(&self.w);
                self.w_log += log + rescale(&mut self.w);
            }
            d >>= 1;
            k += 1;
        }
        self.t = t;
    }
}

fn rescale(v: &mut [f64]) -> f64 {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= m);
    m.ln()
}

fn log_weighted(w: &[f64], weights: impl Iterator<Item = f64>) -> f64 {
    w.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>().ln()
}

/// How a probe was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePath {
    /// Most mass absorbed: compare logarithms of the scaled non-optimal mass.
    LogScaled,
    /// Most mass still unabsorbed: compare through optimal-level mass.
    Absorbed,
}

/// Ordering of two chains at one probe generation.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub t: u64,
    pub path: ProbePath,
    /// -1 when `a` has strictly smaller EAE, +1 strictly larger, 0 unresolved.
    pub eae_sign: i8,
    pub tail_sign: i8,
}

/// Asymptotic comparison of two chains over the probe schedule.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub tail_index: usize,
    pub rows: Vec<ProbeRow>,
    /// First probe from which `a` is strictly ahead on both metrics at every
    /// later probe.
    pub t_star: Option<u64>,
}

fn resolved_sign(diff: f64, scale: f64) -> i8 {
    if diff < -scale {
        -1
    } else if diff > scale {
        1
    } else {
        0
    }
}

/// Probes the EAE and `Pr{level >= tail_index}` of two chains from a common
/// start at the given increasing generations.
pub fn asymptotic_order(
    a: &TransitionMatrix,
    b: &TransitionMatrix,
    q0: &LevelDistribution,
    errors: &[f64],
    tail_index: usize,
    times: &[u64],
) -> Result<AsymptoticReport> {
    check_dims(a, q0)?;
    check_dims(b, q0)?;
    if errors.len() != a.size() {
        return Err(config("error vector and matrix differ in size"));
    }
    if a.size() < 2 {
        return Err(Error::Degenerate("chain has only the optimal level".into()));
    }
    check_tails(&[tail_index], a.max_level())?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config("probe times must be strictly increasing"));
    }
    let e1 = errors[1];
    let mut ca = ProbeChain::new(a, q0.as_slice());
    let mut cb = ProbeChain::new(b, q0.as_slice());
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        ca.advance_to(t);
        cb.advance_to(t);
        let tp1 = |v: &[f64]| v[1..].iter().sum::<f64>();
        let (va, vb) = (&ca.v, &cb.v);
        let row = if tp1(va).max(tp1(vb)) <= 0.5 {
            let la = log_weighted(&ca.w, errors[1..].iter().copied()) + ca.w_log;
            let lb = log_weighted(&cb.w, errors[1..].iter().copied()) + cb.w_log;
            let in_tail = |i: usize| if i + 1 >= tail_index { 1.0 } else { 0.0 };
            let ta = log_weighted(&ca.w, (0..ca.w.len()).map(in_tail)) + ca.w_log;
            let tb = log_weighted(&cb.w, (0..cb.w.len()).map(in_tail)) + cb.w_log;
            let slack = |x: f64, y: f64| PROBE_REL_TOL + 1e-12 * x.abs().max(y.abs());
            ProbeRow {
                t,
                path: ProbePath::LogScaled,
                eae_sign: log_sign(la, lb, slack(la, lb)),
                tail_sign: log_sign(ta, tb, slack(ta, tb)),
            }
        } else {
            let mut diff = -e1 * (va[0] - vb[0]);
            let mut scale = e1 * va[0].max(vb[0]);
            for i in 2..va.len() {
                diff += (errors[i] - e1) * (va[i] - vb[i]);
                scale += (errors[i] - e1) * va[i].max(vb[i]);
            }
            let eae_sign = resolved_sign(diff, PROBE_REL_TOL * scale);
            let tail_sign = if tail_index == 1 {
                resolved_sign(-(va[0] - vb[0]), PROBE_REL_TOL * va[0].max(vb[0]))
            } else {
                let sa: f64 = va[tail_index..].iter().sum();
                let sb: f64 = vb[tail_index..].iter().sum();
                resolved_sign(sa - sb, PROBE_REL_TOL * sa.max(sb))
            };
            ProbeRow {
                t,
                path: ProbePath::Absorbed,
                eae_sign,
                tail_sign,
            }
        };
        rows.push(row);
    }
    let mut t_star = None;
    for row in rows.iter().rev() {
        if row.eae_sign == -1 && row.tail_sign == -1 {
            t_star = Some(row.t);
        } else {
            break;
        }
    }
    Ok(AsymptoticReport {
        tail_index,
        rows,
        t_star,
    })
}

fn log_sign(la: f64, lb: f64, slack: f64) -> i8 {
    if la == lb {
        return 0;
    }
    resolved_sign(la - lb, slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::FlipKernel;
    use crate::level::LevelProblem;
    use crate::transition::{build_onemax, counterexample_pair};
    use proptest::prelude::*;

    fn two_state(rho: f64) -> TransitionMatrix {
        TransitionMatrix::from_off_diagonal(1, |_, _| 1.0 - rho).unwrap()
    }

    fn onemax(n: usize, p: f64) -> (LevelProblem, TransitionMatrix) {
        let prob = LevelProblem::onemax(n).unwrap();
        let m = build_onemax(n, &FlipKernel::mutation_only(n, p).unwrap()).unwrap();
        (prob, m)
    }

    #[test]
    fn zero_horizon_and_absorbing_start() {
        let (prob, m) = onemax(5, 0.2);
        let q0 = prob.initial_distribution();
        let tr = iterate(&m, &q0, 0).unwrap();
        assert_eq!(tr.distributions, vec![q0]);
        let opt = LevelDistribution::point(6, 0).unwrap();
        let tr = iterate(&m, &opt, 20).unwrap();
        assert!(tr.distributions.iter().all(|q| *q == opt));
    }

    #[test]
    fn metrics_of_simple_distributions() {
        let errs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let s = metrics(&[LevelDistribution::uniform(5)], &errs, &[1, 3]).unwrap();
        assert!((s.eae[0] - 2.0).abs() < 1e-15);
        assert!((s.tails[&3][0] - 0.4).abs() < 1e-15);
        let s = metrics(&[LevelDistribution::point(5, 0).unwrap()], &errs, &[1]).unwrap();
        assert_eq!((s.eae[0], s.tails[&1][0]), (0.0, 0.0));
        assert!(metrics(&[LevelDistribution::uniform(5)], &errs, &[0]).is_err());
        assert!(metrics(&[LevelDistribution::uniform(5)], &errs, &[5]).is_err());
    }

    #[test]
    fn one_step_matches_enumeration_n2() {
        // Every (start, mask) pair of OneMax with n = 2 and p = 1/2 is equally likely.
        let (prob, m) = onemax(2, 0.5);
        let (s, _) = metric_series(&m, &prob.initial_distribution(), prob.error_vector(), &[1], 1).unwrap();
        let mut total = 0.0;
        for x in 0u32..4 {
            for mask in 0u32..4 {
                let y = x ^ mask;
                let keep = if y.count_ones() >= x.count_ones() { y } else { x };
                total += (2 - keep.count_ones()) as f64;
            }
        }
        assert!((s.eae[1] - total / 16.0).abs() < 1e-15);
    }

    #[test]
    fn radius_examples() {
        let (r, _) = counterexample_pair(4).unwrap();
        assert!((spectral_radius(&r).unwrap() - (1.0 - 1.0 / 64.0)).abs() < 1e-15);
        let id = TransitionMatrix::from_off_diagonal(3, |_, _| 0.0).unwrap();
        assert_eq!(spectral_radius(&id).unwrap(), 1.0);
        assert!(spectral_radius(&TransitionMatrix::from_off_diagonal(0, |_, _| 0.0).unwrap()).is_err());
    }

    #[test]
    fn crossover_gap_exceeds_mutation_gap_on_deceptive() {
        use crate::transition::build_deceptive;
        let n = 10;
        let ea = build_deceptive(n, &FlipKernel::mutation_only(n, 0.1).unwrap()).unwrap();
        let eac = build_deceptive(n, &FlipKernel::coupled(n, 0.1, 0.5).unwrap()).unwrap();
        assert!(radius_strictly_smaller(&eac, &ea).unwrap());
        assert!(!radius_strictly_smaller(&ea, &eac).unwrap());
    }

    #[test]
    fn acr_closed_forms() {
        assert_eq!(acr(&[2.0, 2.0, 2.0], 2).unwrap(), 0.0);
        let rho: f64 = 0.9;
        let e: Vec<f64> = (0..50).map(|t| 3.0 * rho.powi(t)).collect();
        assert!((acr(&e, 49).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(acr(&[0.0, 0.0], 1), Err(Error::UndefinedAcr)));
        assert!(acr(&e, 0).is_err());
    }

    #[test]
    fn two_state_acr_is_exact() {
        let m = two_state(0.93);
        let q0 = LevelDistribution::point(2, 1).unwrap();
        let (s, _) = metric_series(&m, &q0, &[0.0, 1.0], &[1], 200).unwrap();
        for t in 1..=200 {
            assert!((acr(&s.eae, t).unwrap() - 0.07).abs() < 1e-12);
        }
    }

    #[test]
    fn acr_tends_to_gap() {
        let (prob, m) = onemax(10, 0.1);
        let (s, _) = metric_series(&m, &prob.initial_distribution(), prob.error_vector(), &[1], 10_000).unwrap();
        let rho = spectral_radius(&m).unwrap();
        assert!((acr(&s.eae, 10_000).unwrap() - (1.0 - rho)).abs() <= 0.01);
    }

    #[test]
    fn identical_series_have_no_sign_change() {
        let (prob, m) = onemax(6, 0.15);
        let (s, _) = metric_series(&m, &prob.initial_distribution(), prob.error_vector(), &[1, 2], 50).unwrap();
        let rep = outperformance_report(&s, &s).unwrap();
        assert!(rep.outperforms);
        assert!(rep
            .comparisons
            .iter()
            .all(|c| c.first_sign_change.is_none() && c.runs.len() == 1));
    }

    #[test]
    fn counterexample_tail_difference_changes_sign() {
        let (r, s) = counterexample_pair(10).unwrap();
        let q0 = LevelDistribution::uniform(11);
        let errs: Vec<f64> = (0..=10).map(f64::from).collect();
        let (sr, _) = metric_series(&r, &q0, &errs, &[1], 2000).unwrap();
        let (ss, _) = metric_series(&s, &q0, &errs, &[1], 2000).unwrap();
        let rep = outperformance_report(&ss, &sr).unwrap();
        let tp = rep.metric("tp_1").unwrap();
        assert!(tp.a_below > 0 && tp.b_below > 0);
        assert!(tp.first_sign_change.is_some());
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let (prob, m) = onemax(4, 0.2);
        let q0 = prob.initial_distribution();
        let (a, _) = metric_series(&m, &q0, prob.error_vector(), &[1], 5).unwrap();
        let (b, _) = metric_series(&m, &q0, prob.error_vector(), &[1], 6).unwrap();
        assert!(outperformance_report(&a, &b).is_err());
    }

    #[test]
    fn probe_matches_direct_iteration() {
        let n = 8;
        let prob = LevelProblem::onemax(n).unwrap();
        let a = build_onemax(n, &FlipKernel::coupled(n, 0.05, 0.5).unwrap()).unwrap();
        let b = build_onemax(n, &FlipKernel::mutation_only(n, 0.05).unwrap()).unwrap();
        let q0 = prob.initial_distribution();
        let rep = asymptotic_order(&a, &b, &q0, prob.error_vector(), 1, &[1, 3, 10, 100, 700]).unwrap();
        let (sa, _) = metric_series(&a, &q0, prob.error_vector(), &[1], 700).unwrap();
        let (sb, _) = metric_series(&b, &q0, prob.error_vector(), &[1], 700).unwrap();
        for row in &rep.rows {
            let t = row.t as usize;
            assert_eq!(row.eae_sign, sign_of(sa.eae[t] - sb.eae[t]), "t={t}");
            assert_eq!(row.tail_sign, sign_of(sa.tails[&1][t] - sb.tails[&1][t]), "t={t}");
        }
        assert_eq!(rep.t_star, Some(1));
    }

    #[test]
    fn probe_survives_underflow() {
        let (prob, m) = onemax(10, 0.1);
        let faster = build_onemax(10, &FlipKernel::coupled(10, 0.05, 0.5).unwrap()).unwrap();
        let slower = build_onemax(10, &FlipKernel::mutation_only(10, 0.05).unwrap()).unwrap();
        let rep = asymptotic_order(
            &faster,
            &slower,
            &prob.initial_distribution(),
            prob.error_vector(),
            1,
            &default_probe_times(),
        )
        .unwrap();
        assert!(rep.t_star.is_some());
        assert_eq!(rep.rows.last().unwrap().path, ProbePath::LogScaled);
        let same = asymptotic_order(
            &m,
            &m,
            &prob.initial_distribution(),
            prob.error_vector(),
            1,
            &default_probe_times(),
        )
        .unwrap();
        assert!(same.rows.iter().all(|r| r.eae_sign == 0 && r.tail_sign == 0));
        assert_eq!(same.t_star, None);
    }

    proptest! {
        #[test]
        fn series_are_monotone(n in 3usize..=20, pf in 0.2f64..1.5, ci in 1u32..=9, h in 1usize..200) {
            let p = pf / n as f64;
            let prob = LevelProblem::onemax(n).unwrap();
            let k = FlipKernel::coupled(n, p, ci as f64 / 10.0);
            prop_assume!(k.is_ok());
            let m = build_onemax(n, &k.unwrap()).unwrap();
            let (s, _) = metric_series(&m, &prob.initial_distribution(), prob.error_vector(), &[1, n / 2 + 1, n], h).unwrap();
            for t in 0..h {
                prop_assert!(s.eae[t + 1] <= s.eae[t] + 1e-12);
                prop_assert!(s.eae[t] + 1e-12 >= s.tails[&1][t]);
                for v in s.tails.values() {
                    prop_assert!(v[t + 1] <= v[t] + 1e-12);
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&v[t]));
                }
            }
        }

        #[test]
        fn tail_is_eae_of_indicator(n in 3usize..=15, i in 1usize..=15, p in 0.01f64..0.3) {
            prop_assume!(i <= n);
            let (prob, m) = onemax(n, p);
            let q0 = prob.initial_distribution();
            let ind: Vec<f64> = (0..=n).map(|l| if l >= i { 1.0 } else { 0.0 }).collect();
            let (a, _) = metric_series(&m, &q0, prob.error_vector(), &[i], 60).unwrap();
            let (b, _) = metric_series(&m, &q0, &ind, &[1], 60).unwrap();
            for t in 0..=60 {
                prop_assert!((a.tails[&i][t] - b.eae[t]).abs() <= 1e-12);
            }
        }
    }
}
