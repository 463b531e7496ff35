//! Small statistics toolbox: two-sample Kolmogorov–Smirnov distance, Wilson
//! score intervals, sample quantiles with order-statistic confidence bounds,
//! and least-squares slope fits for decay exponents.

/// Two-sample Kolmogorov–Smirnov statistic sup |F1 - F2|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Wilson score interval for a binomial proportion at ~95% (z = 1.96).
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    wilson_interval_z(successes, trials, 1.96)
}

pub fn wilson_interval_z(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sample quantile (sorted copy, linear interpolation between order stats).
pub fn quantile(data: &[f64], q: f64) -> f64 {
    assert!(!data.is_empty() && (0.0..=1.0).contains(&q));
    let mut v = data.to_vec();
    v.sort_by(|p, r| p.partial_cmp(r).unwrap());
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Distribution-free ~95% confidence interval for the median from order
/// statistics (binomial normal approximation on the ranks).
pub fn median_ci(data: &[f64]) -> (f64, f64, f64) {
    let mut v = data.to_vec();
    v.sort_by(|p, r| p.partial_cmp(r).unwrap());
    let n = v.len();
    let med = quantile_sorted(&v, 0.5);
    if n < 8 {
        return (v[0], med, v[n - 1]);
    }
    let half_width = 1.96 * (n as f64).sqrt() * 0.5;
    let lo_rank = ((n as f64 / 2.0 - half_width).floor().max(0.0)) as usize;
    let hi_rank = ((n as f64 / 2.0 + half_width).ceil() as usize).min(n - 1);
    (v[lo_rank], med, v[hi_rank])
}

/// Least-squares slope of y against x (returns slope, intercept, slope SE).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (x.len() as i64 - 2).max(1) as f64;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let r = v - (intercept + slope * u);
            r * r
        })
        .sum();
    let se = (sse / dof / sxx).sqrt();
    (slope, intercept, se)
}

/// Running mean/variance accumulator (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn ks_of_disjoint_samples_is_one() {
        let a = vec![0.0, 0.1, 0.2];
        let b = vec![5.0, 6.0, 7.0];
        assert!((ks_two_sample(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_matches_direct_enumeration() {
        let a = vec![0.3, 0.7, 1.1, 2.0, 2.5];
        let b = vec![0.5, 0.9, 1.0, 1.6];
        // brute force over all sample points
        let mut points = a.clone();
        points.extend(&b);
        let mut d: f64 = 0.0;
        for &p in &points {
            let fa = a.iter().filter(|&&v| v <= p).count() as f64 / a.len() as f64;
            let fb = b.iter().filter(|&&v| v <= p).count() as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        assert!((ks_two_sample(&a, &b) - d).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo0, _) = wilson_interval(0, 50);
        assert_eq!(lo0, 0.0);
    }

    #[test]
    fn quantiles_and_median_ci() {
        let v: Vec<f64> = (1..=101).map(|i| i as f64).collect();
        assert!((quantile(&v, 0.5) - 51.0).abs() < 1e-12);
        let (lo, med, hi) = median_ci(&v);
        assert!(lo <= med && med <= hi);
        assert!(lo >= 40.0 && hi <= 62.0);
    }

    #[test]
    fn linear_fit_recovers_slope() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| -2.5 * v + 4.0).collect();
        let (slope, intercept, se) = linear_fit(&x, &y);
        assert!((slope + 2.5).abs() < 1e-10);
        assert!((intercept - 4.0).abs() < 1e-10);
        assert!(se < 1e-10);
    }

    #[test]
    fn moments_match_direct() {
        let data = [1.0, 2.0, 4.0, 8.0];
        let mut m = Moments::default();
        for &d in &data {
            m.push(d);
        }
        assert!((m.mean() - 3.75).abs() < 1e-12);
        let var = data.iter().map(|d| (d - 3.75) * (d - 3.75)).sum::<f64>() / 3.0;
        assert!((m.variance() - var).abs() < 1e-12);
    }
}
