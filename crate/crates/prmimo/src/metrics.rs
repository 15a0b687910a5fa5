//! Link metrics and distribution tooling: single-stream capacity, the
//! Gaussian Q-function, QPSK symbol error rate, polarization-angle
//! distribution theory, chi-square references, the ordered-SNR joint
//! density, and empirical-distribution utilities.

use statrs::function::gamma::{gamma, gamma_lr};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Instantaneous single-stream capacity `log2(1 + mean_snr * gamma)`.
pub fn capacity_from_snr(gamma: f64, mean_snr: f64) -> f64 {
    (1.0 + mean_snr * gamma).log2()
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`, via the complementary
/// error function. libm's erfc is correctly rounded to a few ulp, well
/// inside the 1e-12 absolute target on |x| <= 8.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Instantaneous QPSK symbol error rate `1 - [1 - Q(sqrt(mean_snr * gamma))]^2`.
pub fn ser_qpsk(gamma: f64, mean_snr: f64) -> f64 {
    let q = q_function((mean_snr * gamma).sqrt());
    1.0 - (1.0 - q) * (1.0 - q)
}

/// Average QPSK SER over a set of effective-SNR realizations.
pub fn average_ser(gammas: &[f64], mean_snr: f64) -> Result<f64> {
    if gammas.is_empty() {
        return Err(Error::EmptyInput("average_ser needs at least one realization".into()));
    }
    Ok(gammas.iter().map(|&g| ser_qpsk(g, mean_snr)).sum::<f64>() / gammas.len() as f64)
}

/// Density of `Y = cos(Theta)` (equally of `sin(Theta)`) for
/// `Theta ~ U(-pi, pi)`: `(1/pi) / sqrt(1 - y^2)` on `(-1, 1)`.
pub fn pdf_cos_uniform(y: f64) -> Result<f64> {
    if !(y.abs() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "density support is (-1, 1), got {y}"
        )));
    }
    Ok(1.0 / (PI * (1.0 - y * y).sqrt()))
}

/// CDF of `Y = cos(Theta)`: `1 - arccos(y)/pi`, clamped outside `[-1, 1]`.
pub fn cdf_cos_uniform(y: f64) -> f64 {
    if y <= -1.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        1.0 - y.acos() / PI
    }
}

/// CDF of `X = sin(Theta)`: `1/2 + arcsin(x)/pi`.
pub fn cdf_sin_uniform(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 + x.asin() / PI
    }
}

/// Analytic mean and variance of `cos(Theta)` under uniform `Theta`.
pub fn moments_cos_uniform() -> (f64, f64) {
    (0.0, 0.5)
}

/// Standard chi-square density with `dof` degrees of freedom.
pub fn chi_square_pdf(x: f64, dof: u32) -> f64 {
    assert!(dof >= 1, "dof must be positive");
    if x < 0.0 {
        return 0.0;
    }
    let k = dof as f64 / 2.0;
    if x == 0.0 {
        return match dof {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    (x / 2.0).powf(k - 1.0) * (-x / 2.0).exp() / (2.0 * gamma(k))
}

/// Standard chi-square CDF (regularized lower incomplete gamma).
pub fn chi_square_cdf(x: f64, dof: u32) -> f64 {
    assert!(dof >= 1, "dof must be positive");
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(dof as f64 / 2.0, x / 2.0)
    }
}

/// Joint density of the ordered per-antenna SNRs
/// `gamma_(1) < gamma_(2) < ... < gamma_(N_t)` with unit-mean gamma
/// branches of shape `n_r`:
/// `N_t! prod_i gamma_i^(n_r - 1) exp(-gamma_i) / Gamma(n_r)`; zero for
/// unordered or non-positive input.
pub fn ordered_snr_joint_pdf(gammas_sorted: &[f64], n_r: usize) -> f64 {
    assert!(n_r >= 1, "n_r must be positive");
    if gammas_sorted.is_empty() {
        return 0.0;
    }
    if gammas_sorted.iter().any(|&g| g <= 0.0)
        || !gammas_sorted.windows(2).all(|w| w[0] < w[1])
    {
        return 0.0;
    }
    let n_t = gammas_sorted.len();
    let factorial: f64 = (1..=n_t).map(|k| k as f64).product();
    let gamma_nr = gamma(n_r as f64);
    factorial
        * gammas_sorted
            .iter()
            .map(|&g| g.powi(n_r as i32 - 1) * (-g).exp() / gamma_nr)
            .product::<f64>()
}

/// One-sided Kolmogorov-Smirnov critical value at the given significance
/// level (asymptotic two-sided formula `sqrt(-ln(alpha/2)/2) / sqrt(n)`).
pub fn ks_critical_value(n_samples: usize, significance: f64) -> f64 {
    assert!(n_samples > 0 && significance > 0.0 && significance < 1.0);
    (-(significance / 2.0).ln() / 2.0).sqrt() / (n_samples as f64).sqrt()
}

/// A sorted sample set with a histogram, for CSV export and KS testing.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl EmpiricalDistribution {
    /// Sorts the samples and bins them with the Freedman-Diaconis rule.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::build(samples, None)
    }

    /// Same, with an explicit bin count.
    pub fn with_bin_count(samples: Vec<f64>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("bin count must be positive".into()));
        }
        Self::build(samples, Some(bins))
    }

    fn build(mut samples: Vec<f64>, bins: Option<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("empirical distribution".into()));
        }
        if !samples.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("samples".into()));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len();
        let min = samples[0];
        let max = samples[n - 1];

        let bins = bins.unwrap_or_else(|| {
            let iqr = samples[(3 * n) / 4] - samples[n / 4];
            let width = 2.0 * iqr / (n as f64).cbrt();
            if width > 0.0 && max > min {
                (((max - min) / width).ceil() as usize).clamp(1, 10_000)
            } else {
                1
            }
        });

        let span = if max > min { max - min } else { 1.0 };
        let bin_edges: Vec<f64> = (0..=bins)
            .map(|k| min + span * k as f64 / bins as f64)
            .collect();
        let mut counts = vec![0u64; bins];
        for &x in &samples {
            let mut idx = ((x - min) / span * bins as f64) as usize;
            if idx >= bins {
                idx = bins - 1;
            }
            counts[idx] += 1;
        }

        Ok(Self { samples, bin_edges, counts })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn histogram(&self) -> (&[f64], &[u64]) {
        (&self.bin_edges, &self.counts)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.samples.len() as f64
    }

    /// Fraction of samples `<= x`.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        let idx = self.samples.partition_point(|&s| s <= x);
        idx as f64 / self.samples.len() as f64
    }

    /// `(bin center, normalized density)` pairs.
    pub fn density_points(&self) -> Vec<(f64, f64)> {
        let n = self.samples.len() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let lo = self.bin_edges[k];
                let hi = self.bin_edges[k + 1];
                let width = (hi - lo).max(f64::MIN_POSITIVE);
                (0.5 * (lo + hi), c as f64 / (n * width))
            })
            .collect()
    }

    /// Two-column CSV `value,density` over histogram bins.
    pub fn to_density_csv(&self) -> String {
        let mut out = String::from("value,density\n");
        for (x, d) in self.density_points() {
            out.push_str(&format!("{x:?},{d:?}\n"));
        }
        out
    }

    /// Two-column CSV `value,cdf` over the sorted samples.
    pub fn to_cdf_csv(&self) -> String {
        let mut out = String::from("value,cdf\n");
        let n = self.samples.len();
        for (i, &x) in self.samples.iter().enumerate() {
            out.push_str(&format!("{x:?},{:?}\n", (i + 1) as f64 / n as f64));
        }
        out
    }
}

/// Sup-norm distance between the empirical CDF and a reference CDF.
/// Requires at least 100 samples to be meaningful.
pub fn ks_distance(emp: &EmpiricalDistribution, ref_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let n = emp.len();
    if n < 100 {
        return Err(Error::InvalidInput(format!(
            "KS distance needs at least 100 samples, got {n}"
        )));
    }
    let mut d: f64 = 0.0;
    for (i, &x) in emp.sorted_samples().iter().enumerate() {
        let f = ref_cdf(x);
        d = d.max((f - i as f64 / n as f64).abs());
        d = d.max(((i + 1) as f64 / n as f64 - f).abs());
    }
    Ok(d)
}
