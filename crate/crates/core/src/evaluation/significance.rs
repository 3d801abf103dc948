use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use super::metrics::average_ranks;
use crate::error::{invalid, Error, Result};

/// Largest sample size for which the signed-rank null distribution is
/// enumerated exactly.
pub const SIGNED_RANK_EXACT_MAX: usize = 25;
/// Largest sample size for which Spearman's rho is tested by full permutation.
pub const SPEARMAN_EXACT_MAX: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: &'static str,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, method: &'static str) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            method,
        }
    }
}

/// Exact two-sided McNemar test on per-case correctness of two classifiers.
/// The statistic is the signed normal score `(b - c) / sqrt(b + c)`, positive
/// when the first classifier wins more discordant cases.
pub fn mcnemar(paired: &[(bool, bool)]) -> Result<TestResult> {
    if paired.is_empty() {
        return invalid("McNemar test needs at least one paired case");
    }
    let b = paired.iter().filter(|&&(a, b)| a && !b).count() as u64;
    let c = paired.iter().filter(|&&(a, b)| !a && b).count() as u64;
    Ok(mcnemar_counts(b, c))
}

/// McNemar test from the discordant counts: `b` cases only the first
/// classifier got right, `c` only the second.
pub fn mcnemar_counts(b: u64, c: u64) -> TestResult {
    let n = b + c;
    if n == 0 {
        return TestResult::new(0.0, 1.0, "mcnemar-exact-binomial");
    }
    let z = (b as f64 - c as f64) / (n as f64).sqrt();
    let p = 2.0 * binomial_half_lower_tail(n, b.min(c));
    TestResult::new(z, p.min(1.0), "mcnemar-exact-binomial")
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_half_lower_tail(n: u64, k: u64) -> f64 {
    if n <= 120 {
        let mut coeff: u128 = 1;
        let mut sum: u128 = 1;
        for i in 1..=k {
            coeff = coeff * (n - i + 1) as u128 / i as u128;
            sum += coeff;
        }
        return sum as f64 / 2f64.powi(n as i32);
    }
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    let terms: Vec<f64> = (0..=k)
        .map(|i| ln_n_fact - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0) - n as f64 * std::f64::consts::LN_2)
        .collect();
    crate::numeric::log_sum_exp(&terms).exp()
}

/// Two-sided Wilcoxon signed-rank test of a zero median. Zeros are dropped,
/// tied magnitudes share their average rank; exact null up to
/// [`SIGNED_RANK_EXACT_MAX`] non-zero differences, normal approximation with
/// continuity and tie corrections above. The statistic is `W+`.
pub fn signed_rank(differences: &[f64]) -> Result<TestResult> {
    if differences.iter().any(|d| !d.is_finite()) {
        return invalid("signed-rank differences must be finite");
    }
    let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Ok(TestResult::new(0.0, 1.0, "signed-rank"));
    }
    let ranks = average_ranks(&nonzero.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    if n <= SIGNED_RANK_EXACT_MAX {
        // Average ranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w = (2.0 * w_plus).round() as usize;
        let lower: f64 = counts[..=w].iter().sum::<f64>() / total;
        let upper: f64 = counts[w..].iter().sum::<f64>() / total;
        return Ok(TestResult::new(w_plus, (2.0 * lower.min(upper)).min(1.0), "signed-rank-exact"));
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let dev = w_plus - mean;
    let corrected = (dev.abs() - 0.5).max(0.0);
    let z = corrected / var.sqrt();
    let p = 2.0 * standard_normal().sf(z);
    Ok(TestResult::new(w_plus, p.min(1.0), "signed-rank-normal"))
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Two-sided paired t-test on the differences with `n - 1` degrees of
/// freedom. Zero variance gives `p = 0` when the mean is non-zero and
/// `p = 1` otherwise.
pub fn paired_t(differences: &[f64]) -> Result<TestResult> {
    let n = differences.len();
    if n < 2 {
        return invalid("paired t-test needs at least two differences");
    }
    let nf = n as f64;
    let mean = differences.iter().sum::<f64>() / nf;
    let var = differences.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TestResult::new(0.0, 1.0, "paired-t-degenerate")
        } else {
            TestResult::new(mean.signum() * f64::INFINITY, 0.0, "paired-t-degenerate")
        });
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(TestResult::new(t, 2.0 * dist.sf(t.abs()), "paired-t"))
}

/// Spearman's rank correlation with a two-sided test of zero correlation:
/// exact permutation up to [`SPEARMAN_EXACT_MAX`] pairs, t approximation above.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return invalid("Spearman correlation needs equal-length samples");
    }
    let n = a.len();
    if n < 3 {
        return invalid("Spearman correlation needs at least three pairs");
    }
    let center = |xs: &[f64]| -> Vec<f64> {
        let r = average_ranks(xs);
        let m = r.iter().sum::<f64>() / n as f64;
        r.into_iter().map(|v| v - m).collect()
    };
    let ca = center(a);
    let cb = center(b);
    let ssa: f64 = ca.iter().map(|v| v * v).sum();
    let ssb: f64 = cb.iter().map(|v| v * v).sum();
    if ssa == 0.0 || ssb == 0.0 {
        return Err(Error::Undefined("Spearman correlation of a constant sample".into()));
    }
    let norm = (ssa * ssb).sqrt();
    let cross = |perm: &[f64]| -> f64 { ca.iter().zip(perm).map(|(x, y)| x * y).sum::<f64>() };
    let rho = (cross(&cb) / norm).clamp(-1.0, 1.0);

    if n <= SPEARMAN_EXACT_MAX {
        let target = rho.abs() * norm - 1e-9 * norm.max(1.0);
        let mut perm = cb.clone();
        let mut hits = 0u64;
        let mut total = 0u64;
        heap_permutations(&mut perm, &mut |p| {
            total += 1;
            if cross(p).abs() >= target {
                hits += 1;
            }
        });
        return Ok(TestResult::new(rho, hits as f64 / total as f64, "spearman-exact"));
    }

    if rho.abs() == 1.0 {
        return Ok(TestResult::new(rho, 0.0, "spearman-t"));
    }
    let df = n as f64 - 2.0;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(TestResult::new(rho, 2.0 * dist.sf(t.abs()), "spearman-t"))
}

/// Visits every permutation of `xs` (Heap's algorithm).
fn heap_permutations(xs: &mut [f64], visit: &mut impl FnMut(&[f64])) {
    let n = xs.len();
    let mut c = vec![0usize; n];
    visit(xs);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                xs.swap(0, i);
            } else {
                xs.swap(c[i], i);
            }
            visit(xs);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
