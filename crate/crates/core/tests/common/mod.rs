//! Independent oracles shared by the integration tests. Nothing here calls the
//! closed forms under test.

#![allow(dead_code)]

/// Probability that mutation at rate `p` flips exactly the low `l` bits.
pub fn enumerate_mutation(n: usize, l: usize, p: f64) -> f64 {
    let target = (1usize << l) - 1;
    let mut total = 0.0;
    for mask in 0..(1usize << n) {
        let k = mask.count_ones() as i32;
        let pr = p.powi(k) * (1.0 - p).powi(n as i32 - k);
        if mask == target {
            total += pr;
        }
    }
    total
}

/// Probability that mutation at rate `q` followed by binomial crossover at
/// rate `c` flips exactly the low `l` bits, summed over every
/// (mutation mask, crossover mask, forced index) triple.
pub fn enumerate_crossover(n: usize, l: usize, q: f64, c: f64) -> f64 {
    let target = (1usize << l) - 1;
    let full = 1usize << n;
    let mut total = 0.0;
    for forced in 0..n {
        for mmask in 0..full {
            let km = mmask.count_ones() as i32;
            let pm = q.powi(km) * (1.0 - q).powi(n as i32 - km);
            for cmask in 0..full {
                // Bit `forced` of cmask is ignored: that position always takes the donor.
                if cmask & (1 << forced) != 0 {
                    continue;
                }
                let kc = cmask.count_ones() as i32;
                let pc = c.powi(kc) * (1.0 - c).powi(n as i32 - 1 - kc);
                let take = cmask | (1 << forced);
                if mmask & take == target {
                    total += pm * pc / n as f64;
                }
            }
        }
    }
    total
}

/// Exact-pattern probability with crossover, derived by conditioning on
/// whether the forced index lies inside the `l` flipped positions.
pub fn crossover_by_cases(n: usize, l: usize, q: f64, c: f64) -> f64 {
    let (nf, lf) = (n as f64, l as f64);
    let inside = if l == 0 {
        0.0
    } else {
        (lf / nf) * q * (q * c).powi(l as i32 - 1) * (1.0 - q * c).powi((n - l) as i32)
    };
    let outside = if l == n {
        0.0
    } else {
        ((nf - lf) / nf) * (q * c).powi(l as i32) * (1.0 - q) * (1.0 - q * c).powi((n - l - 1) as i32)
    };
    inside + outside
}

/// Golden-section maximizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.618_033_988_749_894_9;
    while hi - lo > tol {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizer of `p^a (1-p)^b` over `(0, 1)`, located by bisection on the sign
/// of the derivative of its logarithm. Bisection on the slope resolves the
/// flat top to machine precision where value comparisons cannot.
pub fn numeric_mutation_optimum(n: usize, j: usize) -> f64 {
    let a = (n - j + 1) as f64;
    let b = (j - 1) as f64;
    let slope = |p: f64| a / p - b / (1.0 - p);
    let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
    if slope(hi) >= 0.0 {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Best crossover escape probability from Deceptive level `j` over a fine
/// scan of `[0, 1]` refined by golden-section around the best scan point.
pub fn numeric_best_escape(n: usize, j: usize, q: f64) -> f64 {
    let s = |c: f64| crossover_by_cases(n, n - j + 1, q, c);
    let steps = 2000;
    let (mut best_c, mut best) = (1.0, s(1.0));
    for k in 0..=steps {
        let c = k as f64 / steps as f64;
        let v = s(c);
        if v > best {
            best = v;
            best_c = c;
        }
    }
    let lo = (best_c - 1.0 / steps as f64).max(0.0);
    let hi = (best_c + 1.0 / steps as f64).min(1.0);
    let c = golden_section(s, lo, hi, 1e-12);
    best.max(s(c))
}

/// Mutation-only escape `q^(n-j+1) (1-q)^(j-1)` from Deceptive level `j`.
pub fn mutation_escape(n: usize, j: usize, q: f64) -> f64 {
    q.powi((n - j + 1) as i32) * (1.0 - q).powi(j as i32 - 1)
}
