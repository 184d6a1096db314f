//! Grids, empirical distributions and goodness-of-fit statistics.

use crate::error::{Error, Result};

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// Empirical CDF over a sorted copy of the samples.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Self {
        let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| !x.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        Ecdf { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    /// Fraction of samples strictly below `x`.
    pub fn eval_below(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v < x);
        k as f64 / self.sorted.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Kolmogorov-Smirnov distance to a reference CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        d
    }
}

/// Density histogram on equal-width bins.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub width: f64,
}

/// Histogram with Freedman-Diaconis bin width, restricted to `[lo, hi]`.
///
/// Densities are normalized by the total sample count, so mass outside the
/// range is accounted for.
pub fn histogram_fd(samples: &[f64], lo: f64, hi: f64) -> Result<Histogram> {
    let ecdf = Ecdf::new(samples);
    if ecdf.len() < 2 || !(hi > lo) {
        return Err(Error::GridTooSmall { detail: "histogram needs ≥ 2 samples and hi > lo".into() });
    }
    let iqr = ecdf.quantile(0.75) - ecdf.quantile(0.25);
    let mut width = 2.0 * iqr / (ecdf.len() as f64).cbrt();
    if !(width > 0.0) {
        width = (hi - lo) / 100.0;
    }
    let bins = (((hi - lo) / width).ceil() as usize).max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in ecdf.sorted() {
        if x >= lo && x < hi {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let n = ecdf.len() as f64;
    Ok(Histogram {
        centers: (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        width,
    })
}

/// Mean of squared differences between two tabulations on a common grid.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n as f64
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
