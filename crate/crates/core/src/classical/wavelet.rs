use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Orthogonal Daubechies families. `Db4` has four vanishing moments
/// (eight taps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Haar,
    Db2,
    #[default]
    Db4,
}

const DB4: [f64; 8] = [
    0.230_377_813_308_896_500_86,
    0.714_846_570_552_915_647_09,
    0.630_880_767_929_858_907_88,
    -0.027_983_769_416_859_854_211,
    -0.187_034_811_719_093_084_08,
    0.030_841_381_835_560_763_627,
    0.032_883_011_666_885_199_735,
    -0.010_597_401_785_069_032_105,
];

impl WaveletFamily {
    /// Scaling (lowpass) filter, normalized so the taps sum to √2.
    pub fn lowpass(&self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![1.0 / SQRT_2, 1.0 / SQRT_2],
            WaveletFamily::Db2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * SQRT_2;
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
            WaveletFamily::Db4 => DB4.to_vec(),
        }
    }

    /// Quadrature mirror of the lowpass filter.
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|n| if n % 2 == 0 { h[l - 1 - n] } else { -h[l - 1 - n] })
            .collect()
    }
}

impl std::str::FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" | "db1" => Ok(WaveletFamily::Haar),
            "db2" => Ok(WaveletFamily::Db2),
            "db4" => Ok(WaveletFamily::Db4),
            other => Err(Error::InvalidConfig(format!("unknown wavelet family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    #[default]
    Soft,
    Hard,
}

impl std::str::FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(ThresholdRule::Soft),
            "hard" => Ok(ThresholdRule::Hard),
            other => Err(Error::InvalidConfig(format!("unknown threshold rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletConfig {
    pub family: WaveletFamily,
    pub levels: usize,
    pub threshold_rule: ThresholdRule,
    /// Multiplier on the universal threshold; 0 disables thresholding.
    pub threshold_scale: f64,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            family: WaveletFamily::Db4,
            levels: 4,
            threshold_rule: ThresholdRule::Soft,
            threshold_scale: 1.0,
        }
    }
}

/// Approximation at the coarsest level plus details, finest (level 1) first.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let l = x.len();
    let half = l / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        for (n, (&hn, &gn)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + n) % l];
            a[k] += hn * v;
            d[k] += gn * v;
        }
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let l = 2 * a.len();
    let mut x = vec![0.0; l];
    for k in 0..a.len() {
        for (n, (&hn, &gn)) in h.iter().zip(g).enumerate() {
            x[(2 * k + n) % l] += hn * a[k] + gn * d[k];
        }
    }
    x
}

fn max_levels(len: usize) -> usize {
    if len.is_power_of_two() {
        len.trailing_zeros() as usize
    } else {
        0
    }
}

/// Periodized orthogonal DWT. `x.len()` must be a power of two no smaller
/// than `2^levels`.
pub fn dwt(x: &[f64], family: WaveletFamily, levels: usize) -> Result<WaveletDecomposition> {
    let max = max_levels(x.len());
    if levels == 0 || levels > max {
        return Err(Error::InvalidLevel { level: levels, max });
    }
    let h = family.lowpass();
    let g = family.highpass();
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, &h, &g);
        details.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition { approx, details })
}

pub fn idwt(dec: &WaveletDecomposition, family: WaveletFamily) -> Vec<f64> {
    let h = family.lowpass();
    let g = family.highpass();
    let mut x = dec.approx.clone();
    for d in dec.details.iter().rev() {
        x = synthesis_step(&x, d, &h, &g);
    }
    x
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `σ̂ √(2 ln n)` with `σ̂ = median(|d₁|) / 0.6745` from the finest details.
pub fn universal_threshold(finest: &[f64], n: usize) -> f64 {
    let sigma = median(finest.iter().map(|v| v.abs()).collect()) / 0.6745;
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

pub fn threshold_coeffs(coeffs: &mut [f64], tau: f64, rule: ThresholdRule) {
    for c in coeffs.iter_mut() {
        *c = match rule {
            ThresholdRule::Hard => {
                if c.abs() > tau {
                    *c
                } else {
                    0.0
                }
            }
            ThresholdRule::Soft => c.signum() * (c.abs() - tau).max(0.0),
        };
    }
}

/// Half-sample symmetric index reflection into `0..n`.
fn reflect(mut i: isize, n: isize) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

fn symmetric_pad(x: &[f64], target: usize) -> (Vec<f64>, usize) {
    let n = x.len();
    let left = (target - n) / 2;
    let padded = (0..target)
        .map(|p| x[reflect(p as isize - left as isize, n as isize)])
        .collect();
    (padded, left)
}

/// Pads symmetrically to the next power of two, thresholds every detail
/// level, reconstructs and crops.
pub fn wavelet_denoise(s: &Spectrum, cfg: &WaveletConfig) -> Result<Spectrum> {
    if !(cfg.threshold_scale >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold scale {} must be non-negative",
            cfg.threshold_scale
        )));
    }
    let n = s.len();
    let padded_len = n.next_power_of_two();
    let max = max_levels(padded_len);
    if cfg.levels == 0 || cfg.levels > max {
        return Err(Error::InvalidLevel {
            level: cfg.levels,
            max,
        });
    }
    let (padded, left) = symmetric_pad(s.values(), padded_len);
    let mut dec = dwt(&padded, cfg.family, cfg.levels)?;
    if cfg.threshold_scale > 0.0 {
        let tau = cfg.threshold_scale * universal_threshold(&dec.details[0], n);
        for d in dec.details.iter_mut() {
            threshold_coeffs(d, tau, cfg.threshold_rule);
        }
    }
    let rec = idwt(&dec, cfg.family);
    Spectrum::new(*s.grid(), rec[left..left + n].to_vec())
}
