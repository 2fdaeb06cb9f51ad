//! Descriptive statistics, effect sizes and the Monte Carlo harness.
//!
//! Conventions: sample standard deviation (n - 1), normal-approximation 95%
//! interval, pooled-sd Cohen's d, moment-based skewness and Pearson
//! kurtosis (normal = 3), Jarque-Bera normality test.

pub mod harness;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("zero variance sample")]
    ZeroVariance,
    #[error("zero mean: coefficient of variation undefined")]
    ZeroMean,
    #[error("non-finite observation")]
    NonFinite,
}

pub const Z95: f64 = 1.96;

/// Labels describing the conventions above, emitted with reports.
pub const CONVENTIONS: &str =
    "std=sample(n-1); ci95=mean±1.96·s/√n (normal approx); d=pooled-sd Cohen; kurtosis=Pearson; normality=Jarque-Bera χ²(2)";

fn check(sample: &[f64], need: usize) -> Result<(), StatsError> {
    if sample.len() < need {
        return Err(StatsError::TooFew {
            need,
            got: sample.len(),
        });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub fn mean(sample: &[f64]) -> Result<f64, StatsError> {
    check(sample, 1)?;
    Ok(sample.iter().sum::<f64>() / sample.len() as f64)
}

pub fn sample_variance(sample: &[f64]) -> Result<f64, StatsError> {
    check(sample, 2)?;
    let m = mean(sample)?;
    let ss: f64 = sample.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(ss / (sample.len() - 1) as f64)
}

pub fn std_dev(sample: &[f64]) -> Result<f64, StatsError> {
    sample_variance(sample).map(f64::sqrt)
}

pub fn ci95(sample: &[f64]) -> Result<(f64, f64), StatsError> {
    let m = mean(sample)?;
    let half = Z95 * std_dev(sample)? / (sample.len() as f64).sqrt();
    Ok((m - half, m + half))
}

pub fn cv(sample: &[f64]) -> Result<f64, StatsError> {
    let m = mean(sample)?;
    let s = std_dev(sample)?;
    if m == 0.0 {
        return Err(StatsError::ZeroMean);
    }
    Ok(s / m.abs())
}

pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sample_variance(a)? + (nb - 1.0) * sample_variance(b)?) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(a)? - mean(b)?) / pooled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub skewness: f64,
    /// Pearson kurtosis; 3 for a normal distribution.
    pub kurtosis: f64,
    pub jarque_bera: f64,
    pub p_value: f64,
}

pub fn shape_stats(sample: &[f64]) -> Result<Shape, StatsError> {
    check(sample, 8)?;
    let n = sample.len() as f64;
    let m = mean(sample)?;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in sample {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let jb = n * (skewness * skewness / 6.0 + (kurtosis - 3.0).powi(2) / 24.0);
    // χ²(2) survival function
    let p_value = (-jb / 2.0).exp();
    Ok(Shape {
        skewness,
        kurtosis,
        jarque_bera: jb,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub metric_name: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    /// `None` when the mean is zero.
    pub cv: Option<f64>,
    /// `None` for fewer than 8 observations or zero variance.
    pub shape: Option<Shape>,
}

impl RunStats {
    pub fn from_sample(metric_name: &str, sample: &[f64]) -> Result<Self, StatsError> {
        let m = mean(sample)?;
        let s = std_dev(sample)?;
        let (lo, hi) = ci95(sample)?;
        Ok(Self {
            metric_name: metric_name.to_string(),
            n: sample.len(),
            mean: m,
            std: s,
            ci95_lo: lo,
            ci95_hi: hi,
            cv: cv(sample).ok(),
            shape: shape_stats(sample).ok(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectBand {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectBand {
    pub fn of(d: f64) -> Self {
        match d.abs() {
            x if x < 0.2 => EffectBand::Negligible,
            x if x < 0.5 => EffectBand::Small,
            x if x < 0.8 => EffectBand::Medium,
            _ => EffectBand::Large,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EffectBand::Negligible => "negligible",
            EffectBand::Small => "small",
            EffectBand::Medium => "medium",
            EffectBand::Large => "large",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectSize {
    pub metric_name: String,
    pub scenario_a: String,
    pub scenario_b: String,
    pub cohens_d: f64,
    pub band: EffectBand,
}
