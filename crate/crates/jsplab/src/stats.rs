//! Small statistics toolkit: rounding, summaries, Kolmogorov-Smirnov tests,
//! and log-log least squares.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("nonpositive mean")]
    NonpositiveMean,
    #[error("log-log regression requires strictly positive values")]
    NonpositiveValue,
    #[error("regression needs at least two points with varying x")]
    DegenerateVariance,
}

/// Round-half-up: `floor(x + 0.5)`.
pub fn rint(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Mean of integer samples.
pub fn mean_u64(samples: &[u64]) -> f64 {
    samples.iter().map(|&x| x as f64).sum::<f64>() / samples.len() as f64
}

/// Median of integer samples (mean of the central pair for even counts).
/// Sorts in place.
pub fn median_u64(samples: &mut [u64]) -> f64 {
    assert!(!samples.is_empty(), "median of an empty sample");
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2] as f64
    } else {
        (samples[n / 2 - 1] as f64 + samples[n / 2] as f64) / 2.0
    }
}

/// Mean and median in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

pub fn summarize_costs(samples: &[u64]) -> Result<Summary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut buf = samples.to_vec();
    Ok(Summary { mean: mean_u64(samples), median: median_u64(&mut buf) })
}

/// A Kolmogorov-Smirnov test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d_stat: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²λ²)`,
/// with `λ = (√n_e + 0.12 + 0.11/√n_e)·d`.
fn kolmogorov_p(d: f64, n_effective: f64) -> f64 {
    let sqrt_ne = n_effective.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    let a2 = -2.0 * lambda * lambda;
    let mut fac = 2.0;
    let mut sum = 0.0;
    let mut prev_term = 0.0;
    for k in 1..=100 {
        let term = fac * (a2 * (k * k) as f64).exp();
        sum += term;
        if term.abs() <= 0.001 * prev_term || term.abs() <= 1e-10 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        prev_term = term.abs();
    }
    // The series only fails to converge as λ → 0, where Q → 1.
    1.0
}

/// Two-sample KS test: `d_stat` is the supremum ECDF difference; the p-value
/// uses the asymptotic Kolmogorov distribution with effective size
/// `n_a·n_b/(n_a+n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_unstable_by(f64::total_cmp);
    xb.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while ia < na && ib < nb {
        let x = xa[ia].min(xb[ib]);
        while ia < na && xa[ia] <= x {
            ia += 1;
        }
        while ib < nb && xb[ib] <= x {
            ib += 1;
        }
        d = d.max((ia as f64 / na as f64 - ib as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    Ok(KsResult { d_stat: d, p_value: kolmogorov_p(d, ne) })
}

/// How [`ks_vs_exponential`] compares the sample against the fitted
/// exponential: analytically against the CDF, or against a freshly drawn
/// synthetic sample of the given size (the heavier two-sample procedure).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpKsMethod {
    Analytic,
    Synthetic { draws: usize, seed: u64 },
}

/// One-sample KS test of `samples` against the exponential distribution with
/// the given mean (CDF `1 - exp(-x/mean)`).
pub fn ks_vs_exponential(
    samples: &[f64],
    mean: f64,
    method: ExpKsMethod,
) -> Result<KsResult, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(mean > 0.0) {
        return Err(StatsError::NonpositiveMean);
    }
    match method {
        ExpKsMethod::Analytic => {
            let mut xs = samples.to_vec();
            xs.sort_unstable_by(f64::total_cmp);
            let n = xs.len() as f64;
            let mut d: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let f = 1.0 - (-x / mean).exp();
                d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
            }
            Ok(KsResult { d_stat: d, p_value: kolmogorov_p(d, n) })
        }
        ExpKsMethod::Synthetic { draws, seed } => {
            if draws == 0 {
                return Err(StatsError::EmptySample);
            }
            let mut rng = crate::rng::rng_from_seed(seed);
            let synth: Vec<f64> = (0..draws)
                .map(|_| {
                    // Inverse CDF over (0, 1]; 1-u avoids ln(0).
                    let u: f64 = rng.gen::<f64>();
                    -mean * (1.0 - u).ln()
                })
                .collect();
            ks_two_sample(samples, &synth)
        }
    }
}

/// Ordinary least squares on `(log10 x, log10 y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// Squared Pearson correlation of the transformed pairs.
    pub r2: f64,
}

pub fn loglog_regression(xs: &[f64], ys: &[f64]) -> Result<Regression, StatsError> {
    assert_eq!(xs.len(), ys.len(), "paired samples of mismatched length");
    if xs.len() < 2 {
        return Err(StatsError::DegenerateVariance);
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(StatsError::NonpositiveValue);
    }
    let lx: Vec<f64> = xs.iter().map(|&v| v.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|&v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|&x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|&y| (y - my).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(Regression { slope, intercept: my - slope * mx, r2 })
}
