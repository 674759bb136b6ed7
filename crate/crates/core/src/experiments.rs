//! Built-in experiment recipes.
//!
//! * `fig1`: the artificial chain pair, exact.
//! * `fig2`: Deceptive with `p_m = 1/n` against `q_m = 1/2, C_R = 2/n`, exact.
//! * `fig3`: Monte Carlo comparison of fixed and adaptive rates on Deceptive.
//!
//! Each recipe returns its series plus a serializable summary and can write
//! both to a directory.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    asymptotic_order, default_probe_times, metric_series, outperformance_report, MetricSeries, OutperformanceReport,
};
use crate::error::{config, Result};
use crate::io::{empirical_to_csv, series_to_csv};
use crate::kernel::FlipKernel;
use crate::level::{LevelDistribution, LevelProblem};
use crate::sim::{monte_carlo, Algorithm, EmpiricalSeries, ProblemSpec, SimConfig};
use crate::transition::{build_deceptive, counterexample_pair};

pub const RECIPES: [&str; 3] = ["fig1", "fig2", "fig3"];

/// Overrides for a recipe's built-in settings.
#[derive(Debug, Clone, Default)]
pub struct RecipeOptions {
    pub horizon: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig1Summary {
    pub n: usize,
    pub horizon: usize,
    pub initial_distribution: &'static str,
    /// Generations where `S` has strictly smaller / larger `Pr{level >= 1}`.
    pub tp_s_below_r: usize,
    pub tp_s_above_r: usize,
    pub tp_difference_changes_sign: bool,
    pub first_tp_sign_change: Option<usize>,
    pub eae_difference_changes_sign: bool,
}

pub struct Fig1 {
    pub r: MetricSeries,
    pub s: MetricSeries,
    pub report: OutperformanceReport,
    pub summary: Fig1Summary,
}

/// Exact series of the artificial chains from the uniform start.
pub fn fig1(opts: &RecipeOptions) -> Result<Fig1> {
    let n = match opts.dims.as_deref() {
        None => 10,
        Some([n]) => *n,
        Some(_) => return Err(config("fig1 takes a single dimension")),
    };
    let horizon = opts.horizon.unwrap_or(2000);
    let (r, s) = counterexample_pair(n)?;
    let q0 = LevelDistribution::uniform(n + 1);
    let errors: Vec<f64> = (0..=n).map(|i| i as f64).collect();
    let (sr, _) = metric_series(&r, &q0, &errors, &[1], horizon)?;
    let (ss, _) = metric_series(&s, &q0, &errors, &[1], horizon)?;
    let report = outperformance_report(&ss, &sr)?;
    let tp = report.metric("tp_1").expect("tail 1 requested");
    let eae = report.metric("eae").expect("eae always compared");
    let summary = Fig1Summary {
        n,
        horizon,
        initial_distribution: "uniform over all L+1 levels",
        tp_s_below_r: tp.a_below,
        tp_s_above_r: tp.b_below,
        tp_difference_changes_sign: tp.first_sign_change.is_some(),
        first_tp_sign_change: tp.first_sign_change,
        eae_difference_changes_sign: eae.first_sign_change.is_some(),
    };
    Ok(Fig1 {
        r: sr,
        s: ss,
        report,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Case {
    pub n: usize,
    pub p_m: f64,
    pub q_m: f64,
    pub c_r: f64,
    pub horizon: usize,
    pub ea_eae_smaller_at: usize,
    pub ea_tp1_smaller_at: usize,
    /// Any tail index where mutation-only is ever strictly ahead.
    pub ea_any_tp_smaller: bool,
    /// Some generation has mutation-only strictly ahead on both EAE and
    /// `Pr{level >= 1}`.
    pub exists_t_where_ea_beats_eac: bool,
    /// First probe generation from which crossover stays strictly ahead.
    pub crossover_ahead_from: Option<u64>,
}

pub struct Fig2 {
    pub cases: Vec<(Fig2Case, MetricSeries, MetricSeries)>,
}

/// Exact comparison on Deceptive for one dimension.
pub fn fig2_case(n: usize, horizon: usize) -> Result<(Fig2Case, MetricSeries, MetricSeries)> {
    let problem = LevelProblem::deceptive(n)?;
    let nf = n as f64;
    let (p_m, q_m, c_r) = (1.0 / nf, 0.5, 2.0 / nf);
    let ea = build_deceptive(n, &FlipKernel::mutation_only(n, p_m)?)?;
    let eac = build_deceptive(n, &FlipKernel::mutation_crossover(n, q_m, c_r)?)?;
    let q0 = problem.initial_distribution();
    let errors = problem.error_vector();
    let tails: Vec<usize> = (1..=n).collect();
    let (se, _) = metric_series(&ea, &q0, errors, &tails, horizon)?;
    let (sc, _) = metric_series(&eac, &q0, errors, &tails, horizon)?;
    let eae_ahead: Vec<bool> = se.eae.iter().zip(&sc.eae).map(|(a, b)| a < b).collect();
    let tp1_ahead: Vec<bool> = se.tails[&1].iter().zip(&sc.tails[&1]).map(|(a, b)| a < b).collect();
    let ea_any_tp_smaller = tails
        .iter()
        .any(|i| se.tails[i].iter().zip(&sc.tails[i]).any(|(a, b)| a < b));
    let asym = asymptotic_order(&eac, &ea, &q0, errors, 1, &default_probe_times())?;
    let case = Fig2Case {
        n,
        p_m,
        q_m,
        c_r,
        horizon,
        ea_eae_smaller_at: eae_ahead.iter().filter(|&&b| b).count(),
        ea_tp1_smaller_at: tp1_ahead.iter().filter(|&&b| b).count(),
        ea_any_tp_smaller,
        exists_t_where_ea_beats_eac: eae_ahead.iter().zip(&tp1_ahead).any(|(a, b)| *a && *b),
        crossover_ahead_from: asym.t_star,
    };
    Ok((case, se, sc))
}

pub fn fig2(opts: &RecipeOptions) -> Result<Fig2> {
    let dims = opts.dims.clone().unwrap_or_else(|| vec![6, 9, 12, 15]);
    let horizon = opts.horizon.unwrap_or(10_000);
    let cases = dims
        .par_iter()
        .map(|&n| fig2_case(n, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig2 { cases })
}

/// One simulated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Fig3Variant {
    pub n: usize,
    pub label: String,
    pub config: SimConfig,
    pub final_tp1: f64,
    pub final_tp1_se: f64,
}

/// Gap between two variants at the final horizon.
#[derive(Debug, Clone, Serialize)]
pub struct Fig3Gap {
    pub n: usize,
    pub better: String,
    pub worse: String,
    pub difference: f64,
    pub pooled_se: f64,
    /// `worse - better > 3 * pooled_se`.
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Summary {
    pub runs: usize,
    pub horizon: usize,
    pub coupled_rate: &'static str,
    pub variants: Vec<Fig3Variant>,
    /// Adaptive variant against its fixed-rate counterpart.
    pub adaptive_vs_fixed: Vec<Fig3Gap>,
    /// Adaptive crossover variants against adaptive mutation-only.
    pub adaptive_eac_vs_adaptive_ea: Vec<Fig3Gap>,
}

pub struct Fig3 {
    pub series: Vec<(String, EmpiricalSeries)>,
    pub summary: Fig3Summary,
}

fn fig3_configs(n: usize, runs: usize, horizon: usize, seed: u64) -> Vec<(String, SimConfig)> {
    let base = |algorithm, q_m, adaptive| SimConfig {
        problem: ProblemSpec::Deceptive { n },
        algorithm,
        p_m: None,
        q_m,
        c_r: None,
        p: Some(1.0 / n as f64),
        adaptive,
        horizon,
        runs,
        base_seed: seed,
        tails: vec![1],
    };
    let root = (n as f64).sqrt();
    let mut out = vec![
        ("ea_fixed".to_string(), base(Algorithm::Ea, None, false)),
        ("ea_adaptive".to_string(), base(Algorithm::Ea, None, true)),
    ];
    for (tag, q) in [("q1", 1.0 / root), ("q2", 1.5 / root), ("q3", 2.0 / root)] {
        out.push((format!("eac_{tag}_fixed"), base(Algorithm::Eac, Some(q), false)));
        out.push((format!("eac_{tag}_adaptive"), base(Algorithm::Eac, Some(q), true)));
    }
    // Distinct seeds per configuration, independent of dimension order.
    for (k, (_, c)) in out.iter_mut().enumerate() {
        c.base_seed = seed.wrapping_add((n as u64) << 16).wrapping_add(k as u64);
    }
    out
}

fn gap(n: usize, better: &Fig3Variant, worse: &Fig3Variant) -> Fig3Gap {
    let difference = worse.final_tp1 - better.final_tp1;
    let pooled_se = (worse.final_tp1_se.powi(2) + better.final_tp1_se.powi(2)).sqrt();
    Fig3Gap {
        n,
        better: better.label.clone(),
        worse: worse.label.clone(),
        difference,
        pooled_se,
        significant: difference > 3.0 * pooled_se,
    }
}

/// Monte Carlo comparison of fixed and adaptive rates.
///
/// Mutation-only uses `p_m = 1/n`; crossover variants start from
/// `q_m in {1, 3/2, 2} / sqrt(n)` with `C_R = 1/(n q_m)`.
pub fn fig3(opts: &RecipeOptions) -> Result<Fig3> {
    let dims = opts.dims.clone().unwrap_or_else(|| vec![12, 16, 20]);
    let runs = opts.runs.unwrap_or(10_000);
    let horizon = opts.horizon.unwrap_or(20_000);
    let seed = opts.seed.unwrap_or(2024);
    let mut series = Vec::new();
    let mut variants = Vec::new();
    let mut adaptive_vs_fixed = Vec::new();
    let mut adaptive_eac_vs_adaptive_ea = Vec::new();
    for &n in &dims {
        let mut local = Vec::new();
        for (label, cfg) in fig3_configs(n, runs, horizon, seed) {
            let emp = monte_carlo(&cfg.resolve()?);
            let (f, e) = &emp.tails[&1];
            local.push(Fig3Variant {
                n,
                label: label.clone(),
                config: cfg,
                final_tp1: f[horizon],
                final_tp1_se: e[horizon],
            });
            series.push((format!("n{n}_{label}"), emp));
        }
        for pair in local.chunks(2) {
            adaptive_vs_fixed.push(gap(n, &pair[1], &pair[0]));
        }
        for pair in local[2..].chunks(2) {
            adaptive_eac_vs_adaptive_ea.push(gap(n, &pair[1], &local[1]));
        }
        variants.extend(local);
    }
    Ok(Fig3 {
        series,
        summary: Fig3Summary {
            runs,
            horizon,
            coupled_rate: "p = C_R * q_m = 1/n",
            variants,
            adaptive_vs_fixed,
            adaptive_eac_vs_adaptive_ea,
        },
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Runs a recipe and writes its CSVs and `summary.json` into `dir`.
pub fn run_recipe(name: &str, dir: &Path, opts: &RecipeOptions) -> Result<serde_json::Value> {
    std::fs::create_dir_all(dir)?;
    let summary = match name {
        "fig1" => {
            let f = fig1(opts)?;
            std::fs::write(dir.join("r_series.csv"), series_to_csv(&f.r))?;
            std::fs::write(dir.join("s_series.csv"), series_to_csv(&f.s))?;
            write_json(&dir.join("report.json"), &f.report)?;
            serde_json::to_value(&f.summary)?
        }
        "fig2" => {
            let f = fig2(opts)?;
            let mut cases = Vec::new();
            for (case, ea, eac) in f.cases {
                std::fs::write(dir.join(format!("n{}_ea.csv", case.n)), series_to_csv(&ea))?;
                std::fs::write(dir.join(format!("n{}_eac.csv", case.n)), series_to_csv(&eac))?;
                cases.push(case);
            }
            serde_json::to_value(&cases)?
        }
        "fig3" => {
            let f = fig3(opts)?;
            for (label, emp) in &f.series {
                std::fs::write(dir.join(format!("{label}.csv")), empirical_to_csv(emp))?;
            }
            serde_json::to_value(&f.summary)?
        }
        other => {
            return Err(config(format!(
                "unknown recipe `{other}`; expected one of {}",
                RECIPES.join(", ")
            )))
        }
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
