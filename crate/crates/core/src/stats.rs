//! Small statistics helpers used by the Monte Carlo checks.

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and a reference CDF.
///
/// `total` is the number of Monte Carlo runs the samples were drawn from.
/// When `total > samples.len()` the comparison is between sub-distributions
/// (runs without an event in this category carry no sample), and `cdf` must
/// be the matching defective CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], total: usize, cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = total as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    if sorted.is_empty() {
        d = d.max(cdf(f64::INFINITY).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Binomial proportion and its standard error.
pub fn proportion(successes: usize, trials: usize) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `n` points from `start` to `stop` inclusive, linear or logarithmic.
pub fn grid(start: f64, stop: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            if log {
                (start.ln() + s * (stop.ln() - start.ln())).exp()
            } else {
                start + s * (stop - start)
            }
        })
        .collect()
}
