mod common;

use proptest::prelude::*;
use xchain_core::analysis::{iterate, metrics};
use xchain_core::kernel::{p1_flip, p2_flip};
use xchain_core::optima::{escape_crossover, escape_mutation, optimal_crossover_rate, CrossoverRegime};
use xchain_core::transition::{build_deceptive, build_onemax};
use xchain_core::{FlipKernel, LevelProblem};

#[test]
fn case_split_matches_enumeration() {
    for n in 2..=5 {
        for l in 0..=n {
            for (q, c) in [(0.15, 0.35), (0.5, 0.5), (0.9, 0.2), (0.3, 1.0)] {
                let a = common::crossover_by_cases(n, l, q, c);
                let b = common::enumerate_crossover(n, l, q, c);
                assert!((a - b).abs() < 1e-14, "n={n} l={l}");
            }
        }
    }
}

#[test]
fn crossover_escape_is_full_pattern_probability() {
    for n in 3..=5 {
        for j in 1..=n {
            for (q, c) in [(0.2, 0.4), (0.7, 0.9), (0.5, 0.0)] {
                let closed = escape_crossover(n, j, c, q).unwrap();
                let brute = common::enumerate_crossover(n, n - j + 1, q, c);
                assert!((closed - brute).abs() < 1e-14, "n={n} j={j} q={q} c={c}");
            }
        }
    }
}

#[test]
fn last_level_regimes_match_numeric_maximum() {
    for n in [5, 9, 16] {
        let nf = n as f64;
        for q in [0.5 / nf, 1.5 / nf, 0.3, 0.5, 0.6, 0.95] {
            let o = optimal_crossover_rate(n, n, q).unwrap();
            let numeric = common::numeric_best_escape(n, n, q);
            assert!((o.max - numeric).abs() <= 1e-12 * numeric, "n={n} q={q}");
            let expected = if q <= 1.0 / nf {
                CrossoverRegime::Full
            } else if q <= 0.5 {
                CrossoverRegime::ClosedFormInterior
            } else {
                CrossoverRegime::Vanishing
            };
            assert_eq!(o.regime, expected);
        }
    }
}

#[test]
fn deceptive_escape_entries_are_top_row() {
    let n = 7;
    let ea = build_deceptive(n, &FlipKernel::mutation_only(n, 0.2).unwrap()).unwrap();
    for j in 1..=n {
        assert!((ea.get(0, j) - common::mutation_escape(n, j, 0.2)).abs() < 1e-15);
    }
}

#[test]
fn exact_iteration_matches_explicit_products() {
    let n = 6;
    let problem = LevelProblem::onemax(n).unwrap();
    let m = build_onemax(n, &FlipKernel::coupled(n, 1.0 / 6.0, 0.5).unwrap()).unwrap();
    let q0 = problem.initial_distribution();
    let traj = iterate(&m, &q0, 25).unwrap();
    let mut v = q0.as_slice().to_vec();
    for _ in 0..25 {
        v = (0..v.len())
            .map(|i| (0..v.len()).map(|j| m.get(i, j) * v[j]).sum())
            .collect();
    }
    let last = traj.distributions.last().unwrap().as_slice();
    for (a, b) in last.iter().zip(&v) {
        assert!((a - b).abs() < 1e-14);
    }
    let series = metrics(&traj.distributions, problem.error_vector(), &[1]).unwrap();
    let eae: f64 = v.iter().zip(problem.error_vector()).map(|(q, e)| q * e).sum();
    assert!((series.eae[25] - eae).abs() < 1e-13);
    assert!((series.tails[&1][25] - (1.0 - v[0])).abs() < 1e-14);
}

proptest! {
    #[test]
    fn mutation_kernel_matches_enumeration(n in 1usize..=6, p in 0.01f64..0.99) {
        for l in 0..=n {
            prop_assert!((p1_flip(l, n, p).unwrap() - common::enumerate_mutation(n, l, p)).abs() < 1e-14);
        }
    }

    #[test]
    fn crossover_kernel_matches_cases(n in 2usize..=30, q in 0.01f64..0.99, c in 0.0f64..=1.0) {
        for l in 0..=n {
            let a = p2_flip(l, n, q, c).unwrap();
            let b = common::crossover_by_cases(n, l, q, c);
            prop_assert!((a - b).abs() <= 1e-13 * b.max(1e-300), "l={} a={} b={}", l, a, b);
        }
    }

    #[test]
    fn crossover_optimum_never_below_numeric(n in 5usize..=20, jf in 0.0f64..1.0, q in 0.02f64..0.98) {
        let j = 1 + ((n as f64 - 1.0) * jf).round() as usize;
        let o = optimal_crossover_rate(n, j, q).unwrap();
        let numeric = common::numeric_best_escape(n, j, q);
        prop_assert!(o.max >= numeric * (1.0 - 1e-9), "n={} j={} q={}", n, j, q);
        prop_assert!(o.max >= escape_mutation(n, j, q).unwrap() * (1.0 - 1e-12));
    }
}
