//! Sensor signal model: gain calibration, dark-frame statistics and
//! sampling of dark-subtracted noisy spectra.
//!
//! After gain calibration and subtraction of a single dark frame, the
//! measured spectrum at each wavenumber is distributed as
//!
//! ```text
//! S ~ N(S_sample, S_sample + 2 * S_dark)
//! ```
//!
//! where `S_sample` is the expected Raman plus sample fluorescence count and
//! `S_dark` lumps component fluorescence, dark current, read noise and
//! offset variance as estimated from laser-on, no-sample frames.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_gaussian, sample_poisson};
use crate::spectrum::{Spectrum, SpectrumGrid};

/// Expected count at and above which the photoelectron term is drawn from
/// the Gaussian approximation in [`NoiseMode::Exact`].
pub const POISSON_GAUSSIAN_SWITCH: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GainCurve {
    grid: SpectrumGrid,
    gain: Vec<f64>,
}

impl GainCurve {
    pub fn new(grid: SpectrumGrid, gain: Vec<f64>) -> Result<Self> {
        if gain.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: gain.len(),
            });
        }
        Ok(Self { grid, gain })
    }

    pub fn grid(&self) -> &SpectrumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.gain
    }

    /// Checks that every gain value is strictly positive.
    pub fn validate(&self) -> Result<()> {
        match self
            .gain
            .iter()
            .enumerate()
            .find(|(_, &g)| !(g > 0.0 && g.is_finite()))
        {
            Some((index, &value)) => Err(Error::NonPositiveGain { index, value }),
            None => Ok(()),
        }
    }
}

/// `g(λ) = measured(λ) / true(λ)` from a reference source of known radiance.
///
/// Zero points in the measured reference produce zero gain; [`calibrate`]
/// rejects such a curve.
pub fn estimate_gain(measured_ref: &Spectrum, true_radiance: &Spectrum) -> Result<GainCurve> {
    measured_ref.grid().ensure_same(true_radiance.grid())?;
    if let Some(i) = true_radiance.values().iter().position(|&r| r <= 0.0) {
        return Err(Error::ZeroRadiance(i));
    }
    let gain = measured_ref
        .values()
        .iter()
        .zip(true_radiance.values())
        .map(|(m, r)| m / r)
        .collect();
    GainCurve::new(*measured_ref.grid(), gain)
}

pub fn calibrate(raw: &Spectrum, gain: &GainCurve) -> Result<Spectrum> {
    raw.grid().ensure_same(gain.grid())?;
    gain.validate()?;
    Spectrum::new(
        *raw.grid(),
        raw.values()
            .iter()
            .zip(gain.values())
            .map(|(y, g)| y / g)
            .collect(),
    )
}

/// Per-wavenumber statistics of calibrated dark frames at one integration
/// time. `variance` is the `S_dark` estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkStats {
    pub grid: SpectrumGrid,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Seconds.
    pub integration_time: f64,
    pub n_frames: usize,
}

impl DarkStats {
    /// Stats with a fixed dark variance and zero mean; handy for simulation
    /// when no measured frames are available.
    pub fn from_variance(grid: SpectrumGrid, variance: Vec<f64>, integration_time: f64) -> Result<Self> {
        let stats = Self {
            grid,
            mean: vec![0.0; grid.len()],
            variance,
            integration_time,
            n_frames: 2,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        for (name, arr) in [("mean", &self.mean), ("variance", &self.variance)] {
            if arr.len() != n {
                return Err(Error::Validation(format!(
                    "dark stats {name} has {} values, grid has {n}",
                    arr.len()
                )));
            }
        }
        if let Some(&v) = self.variance.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeVariance(v));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("dark stats mean is not finite".into()));
        }
        if self.n_frames < 2 {
            return Err(Error::InsufficientFrames(self.n_frames));
        }
        Ok(())
    }

    pub fn mean_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.grid, self.mean.clone())
    }

    pub fn variance_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.grid, self.variance.clone())
    }
}

/// Sample mean and unbiased sample variance across frames.
pub fn estimate_dark_stats(frames: &[Spectrum], integration_time: f64) -> Result<DarkStats> {
    if frames.len() < 2 {
        return Err(Error::InsufficientFrames(frames.len()));
    }
    let grid = *frames[0].grid();
    for f in &frames[1..] {
        grid.ensure_same(f.grid())?;
    }
    let n = frames.len() as f64;
    // work with deviations from the first frame; identical frames then give
    // exactly zero variance
    let shift = frames[0].values();
    let mut mean_dev = vec![0.0; grid.len()];
    for f in frames {
        for ((m, v), s) in mean_dev.iter_mut().zip(f.values()).zip(shift) {
            *m += v - s;
        }
    }
    mean_dev.iter_mut().for_each(|m| *m /= n);
    let mut variance = vec![0.0; grid.len()];
    for f in frames {
        for (((acc, v), s), m) in variance.iter_mut().zip(f.values()).zip(shift).zip(&mean_dev) {
            let d = (v - s) - m;
            *acc += d * d;
        }
    }
    variance.iter_mut().for_each(|v| *v /= n - 1.0);
    let mean = shift.iter().zip(&mean_dev).map(|(s, m)| s + m).collect();
    Ok(DarkStats {
        grid,
        mean,
        variance,
        integration_time,
        n_frames: frames.len(),
    })
}

/// Expected sample signal: Raman plus sample fluorescence.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanSignal {
    pub raman: Spectrum,
    pub fluorescence: Spectrum,
}

impl CleanSignal {
    pub fn new(raman: Spectrum, fluorescence: Spectrum) -> Result<Self> {
        raman.grid().ensure_same(fluorescence.grid())?;
        for (name, s) in [("raman", &raman), ("fluorescence", &fluorescence)] {
            if let Some(v) = s.values().iter().find(|&&v| v < 0.0) {
                return Err(Error::Domain(format!("{name} component is negative ({v})")));
            }
        }
        Ok(Self {
            raman,
            fluorescence,
        })
    }

    pub fn grid(&self) -> &SpectrumGrid {
        self.raman.grid()
    }

    pub fn sample_signal(&self) -> Vec<f64> {
        self.raman
            .values()
            .iter()
            .zip(self.fluorescence.values())
            .map(|(r, f)| r + f)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// One Gaussian with the combined variance.
    #[default]
    Gaussian,
    /// Poisson photoelectrons below the switch count, then Gaussian dark
    /// difference noise.
    Exact,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseMode::Gaussian),
            "exact" => Ok(NoiseMode::Exact),
            other => Err(Error::InvalidConfig(format!("unknown noise mode '{other}'"))),
        }
    }
}

/// Noise-free dark-subtracted expectation is `S_sample`; the returned
/// spectrum is one realization. Negative values are kept.
pub fn sample_noisy_spectrum<R: Rng + ?Sized>(
    clean: &CleanSignal,
    dark: &DarkStats,
    rng: &mut R,
    mode: NoiseMode,
) -> Result<Spectrum> {
    clean.grid().ensure_same(&dark.grid)?;
    if dark.variance.len() != clean.grid().len() {
        return Err(Error::LengthMismatch {
            expected: clean.grid().len(),
            actual: dark.variance.len(),
        });
    }
    let signal = clean.sample_signal();
    let mut out = Vec::with_capacity(signal.len());
    for (&s, &d) in signal.iter().zip(&dark.variance) {
        if d < 0.0 || d.is_nan() {
            return Err(Error::NegativeVariance(d));
        }
        let v = match mode {
            NoiseMode::Gaussian => sample_gaussian(rng, s, s + 2.0 * d)?,
            NoiseMode::Exact => {
                let photo = if s < POISSON_GAUSSIAN_SWITCH {
                    sample_poisson(rng, s)? as f64
                } else {
                    sample_gaussian(rng, s, s)?
                };
                photo + sample_gaussian(rng, 0.0, 2.0 * d)?
            }
        };
        out.push(v);
    }
    Spectrum::new(*clean.grid(), out)
}

/// `calibrated - dark.mean`.
pub fn subtract_dark(calibrated: &Spectrum, dark: &DarkStats) -> Result<Spectrum> {
    calibrated.grid().ensure_same(&dark.grid)?;
    calibrated.sub(&dark.mean_spectrum()?)
}

/// Picks one of several dark stat sets uniformly.
pub fn choose_dark<'a, R: Rng + ?Sized>(sets: &'a [DarkStats], rng: &mut R) -> Result<(usize, &'a DarkStats)> {
    if sets.is_empty() {
        return Err(Error::Validation("no dark statistics supplied".into()));
    }
    let i = rng.random_range(0..sets.len());
    Ok((i, &sets[i]))
}
