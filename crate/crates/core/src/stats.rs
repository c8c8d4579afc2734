//! Small estimators shared by the Monte Carlo modules.

use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, se: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, se: f64::INFINITY, n };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Estimate { mean, se: (var / n as f64).sqrt(), n }
    }

    /// Pooled z-score of the difference of two independent estimates.
    /// Two identical deterministic values give 0.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        let d = self.mean - other.mean;
        let s = self.se.hypot(other.se);
        if s == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY * d.signum() }
        } else {
            d / s
        }
    }

    /// z-score against an exact reference value.
    pub fn z_exact(&self, value: f64) -> f64 {
        self.z_against(&Estimate { mean: value, se: 0.0, n: 0 })
    }
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `log(mean(exp(xs)))` with a max-shift.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + (s / xs.len() as f64).ln()
}

/// Delete-a-group jackknife of `log_mean_exp`: `(estimate, se)`.
pub fn jackknife_log_mean_exp(xs: &[f64], groups: usize) -> (f64, f64) {
    let n = xs.len();
    let groups = groups.clamp(2, n);
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let full = m + (total / n as f64).ln();
    let mut loo = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * n / groups;
        let hi = (g + 1) * n / groups;
        let part: f64 = w[lo..hi].iter().sum();
        loo.push(m + ((total - part) / (n - (hi - lo)) as f64).ln());
    }
    let k = groups as f64;
    let mean_loo = loo.iter().sum::<f64>() / k;
    let var = (k - 1.0) / k * loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Fraction of `sum(exp(xs))` carried by the largest 1% of terms.
pub fn top_weight_share(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    let top = (xs.len() / 100).max(1);
    let total: f64 = w.iter().sum();
    w[..top].iter().sum::<f64>() / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
}

/// Weighted least squares `y ~ a + b x`; `weights = None` means unit weights.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> LinearFit {
    let n = x.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    let mx = (0..n).map(|i| w(i) * x[i]).sum::<f64>() / sw;
    let my = (0..n).map(|i| w(i) * y[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w(i) * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = (0..n).map(|i| w(i) * (y[i] - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n).map(|i| w(i) * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_se = if n > 2 { (sse / (n as f64 - 2.0) / sxx).sqrt() } else { f64::NAN };
    LinearFit { slope, intercept, r_squared, slope_se }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn estimate_of_constant_sample() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.se, 0.0);
        assert_eq!(e.z_exact(2.0), 0.0);
    }

    #[test]
    fn log_mean_exp_survives_overflow() {
        let v = log_mean_exp(&[1000.0, 1000.0]);
        assert_abs_diff_eq!(v, 1000.0, epsilon = 1e-12);
        let v = log_mean_exp(&[0.0, 2f64.ln()]);
        assert_abs_diff_eq!(v, 1.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn jackknife_matches_delta_method() {
        // for small spread log-mean-exp is close to the mean
        use rand::Rng;
        let mut rng = crate::exec::replica_rng(1, 0);
        let xs: Vec<f64> = (0..5000).map(|_| 1e-2 * rng.random::<f64>()).collect();
        let (v, se) = jackknife_log_mean_exp(&xs, 50);
        let est = Estimate::from_samples(&xs);
        assert!((v - est.mean).abs() < 1e-4);
        assert!((se / est.se - 1.0).abs() < 0.2, "{se} vs {}", est.se);
    }

    #[test]
    fn exact_line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_fit(&x, &y, None);
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ks_of_uniform_quantiles() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert_abs_diff_eq!(d, 0.5 / n as f64, epsilon = 1e-12);
        assert!(d < ks_critical_1pct(n));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
