//! Interval estimates and fitting helpers for the Monte Carlo reports.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` trials.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Running sums of one variable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Delta-method 95% interval for `mean(Y) / mean(V)` from per-replication
/// pairs, given `sum Y`, `sum V`, `sum V^2`, `sum Y V` and `sum Y^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioSums {
    pub n: u64,
    pub y: f64,
    pub y_sq: f64,
    pub v: f64,
    pub v_sq: f64,
    pub yv: f64,
}

impl RatioSums {
    /// Ratio of means and its log-scale delta interval; `None` when
    /// `sum Y = 0` or `sum V = 0`.
    pub fn interval(&self, z: f64) -> Option<(f64, f64, f64)> {
        if self.y <= 0.0 || self.v <= 0.0 || self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        let (my, mv) = (self.y / n, self.v / n);
        let var_y = (self.y_sq / n - my * my).max(0.0);
        let var_v = (self.v_sq / n - mv * mv).max(0.0);
        let cov = self.yv / n - my * mv;
        let rel = (var_y / (my * my) + var_v / (mv * mv) - 2.0 * cov / (my * mv)).max(0.0) / n;
        let r = my / mv;
        let w = z * rel.sqrt();
        Some((r, r * (-w).exp(), r * w.exp()))
    }
}

/// Least-squares slope of `ln y` against `ln x` over points with
/// `x >= lower` and `y > 0`. `None` with fewer than two such points.
pub fn loglog_slope(xs: &[f64], ys: &[f64], lower: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x >= lower && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `n` points from `lo` to `hi`, equally spaced on a log scale.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo * (r * i as f64).exp() }).collect()
}
