//! Chain diagnostics: integrated autocorrelation time, effective sample
//! size, Monte Carlo standard errors and a Kolmogorov–Smirnov statistic.

/// Integrated autocorrelation time by Geyer's initial positive sequence:
/// sum paired autocorrelations until a pair goes non-positive.
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 1.0;
    }
    let auto = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (xs[i] - mean) * (xs[i + lag] - mean);
        }
        acc / n as f64 / var
    };
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n / 2 {
        let pair = auto(lag) + auto(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    tau.max(1.0)
}

/// Effective sample size `n / τ`.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    xs.len() as f64 / integrated_autocorr_time(xs)
}

/// Monte Carlo standard error of the chain mean, `sd * sqrt(τ / n)`.
pub fn mc_standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (var * integrated_autocorr_time(xs) / n as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `xs`
/// and a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_series_has_unit_autocorr_time() {
        // deterministic pseudo-random walk-free series
        let mut state = 42_u64;
        let xs: Vec<f64> = (0..5000)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let tau = integrated_autocorr_time(&xs);
        assert!(tau < 1.5, "tau = {tau}");
    }

    #[test]
    fn perfectly_correlated_series_has_large_tau()
    {
        let xs: Vec<f64> = (0..1000).map(|i| if i < 500 { -1.0 } else { 1.0 }).collect();
        assert!(integrated_autocorr_time(&xs) > 100.0);
    }

    #[test]
    fn ks_of_uniform_grid_against_uniform_cdf_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.002, "{d}");
    }
}
