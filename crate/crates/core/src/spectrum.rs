//! Wavenumber grids and spectrum containers.
//!
//! Every signal in the toolkit (raw counts, calibrated intensities, Raman
//! and fluorescence components, denoiser outputs) is a [`Spectrum`]: a
//! vector of intensities sampled on a uniform [`SpectrumGrid`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_START_WN: f64 = 600.0;
pub const DEFAULT_END_WN: f64 = 1790.0;
pub const DEFAULT_POINTS: usize = 693;

/// Uniform wavenumber axis in cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    start_wn: f64,
    end_wn: f64,
    n_points: usize,
}

impl SpectrumGrid {
    pub fn new(start_wn: f64, end_wn: f64, n_points: usize) -> Result<Self> {
        if !start_wn.is_finite() || !end_wn.is_finite() {
            return Err(Error::InvalidRange(format!(
                "grid bounds must be finite ({start_wn}, {end_wn})"
            )));
        }
        if start_wn >= end_wn {
            return Err(Error::InvalidRange(format!(
                "start {start_wn} must be below end {end_wn}"
            )));
        }
        if n_points < 2 {
            return Err(Error::InvalidRange(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self {
            start_wn,
            end_wn,
            n_points,
        })
    }

    pub fn start(&self) -> f64 {
        self.start_wn
    }

    pub fn end(&self) -> f64 {
        self.end_wn
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.end_wn - self.start_wn) / (self.n_points - 1) as f64
    }

    /// Wavenumber of point `i`. The last point is pinned to `end` exactly.
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.end_wn
        } else {
            self.start_wn + self.spacing() * i as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Position of `i` mapped onto [0, 1].
    pub fn unit_abscissa(&self, i: usize) -> f64 {
        i as f64 / (self.n_points - 1) as f64
    }

    pub fn contains(&self, wn: f64) -> bool {
        wn >= self.start_wn && wn <= self.end_wn
    }

    pub fn ensure_same(&self, other: &SpectrumGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}; {}] vs [{}, {}; {}]",
                self.start_wn,
                self.end_wn,
                self.n_points,
                other.start_wn,
                other.end_wn,
                other.n_points
            )))
        }
    }
}

impl Default for SpectrumGrid {
    fn default() -> Self {
        Self {
            start_wn: DEFAULT_START_WN,
            end_wn: DEFAULT_END_WN,
            n_points: DEFAULT_POINTS,
        }
    }
}

pub fn make_grid(start_wn: f64, end_wn: f64, n_points: usize) -> Result<SpectrumGrid> {
    SpectrumGrid::new(start_wn, end_wn, n_points)
}

/// Intensities sampled on a grid. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SpectrumGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: SpectrumGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpectrumGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: SpectrumGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Evaluates `f` at every grid wavenumber.
    pub fn from_fn(grid: SpectrumGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| f(grid.point(i))).collect())
    }

    pub fn grid(&self) -> &SpectrumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the maximum; ties resolve to the lowest wavenumber.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn add(&self, other: &Spectrum) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &Spectrum, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Trapezoidal integral over the physical wavenumber axis.
    pub fn trapezoid_area(&self) -> f64 {
        let h = self.grid.spacing();
        let inner: f64 = self.values[1..self.values.len() - 1].iter().sum();
        h * (inner + 0.5 * (self.values[0] + self.values[self.values.len() - 1]))
    }

    /// Linear interpolation onto another grid; points outside this grid's
    /// range take the nearest edge value.
    pub fn resample(&self, target: SpectrumGrid) -> Result<Self> {
        let h = self.grid.spacing();
        let last = self.values.len() - 1;
        let values = (0..target.len())
            .map(|i| {
                let pos = (target.point(i) - self.grid.start()) / h;
                if pos <= 0.0 {
                    self.values[0]
                } else if pos >= last as f64 {
                    self.values[last]
                } else {
                    let lo = pos.floor() as usize;
                    let frac = pos - lo as f64;
                    self.values[lo] * (1.0 - frac) + self.values[lo + 1] * frac
                }
            })
            .collect();
        Self::new(target, values)
    }

    /// Linear interpolation of scattered samples `(xs, ys)` onto `grid`.
    /// `xs` must be strictly increasing and cover the grid.
    pub fn from_samples(grid: SpectrumGrid, xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::InvalidRange(format!("need at least 2 samples, got {}", xs.len())));
        }
        if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidRange(format!(
                "sample positions not strictly increasing at index {}",
                i + 1
            )));
        }
        let slack = 1e-9 * (grid.end() - grid.start());
        if xs[0] > grid.start() + slack || xs[xs.len() - 1] < grid.end() - slack {
            return Err(Error::GridMismatch(format!(
                "samples span [{}, {}] but grid needs [{}, {}]",
                xs[0],
                xs[xs.len() - 1],
                grid.start(),
                grid.end()
            )));
        }
        let mut j = 0;
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                if x <= xs[0] {
                    return ys[0];
                }
                while j + 2 < xs.len() && xs[j + 1] < x {
                    j += 1;
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let t = (x - xs[j]) / (xs[j + 1] - xs[j]);
                ys[j] * (1.0 - t) + ys[j + 1] * t
            })
            .collect();
        Self::new(grid, values)
    }
}

/// Rescales `s` so its trapezoidal area equals one.
pub fn auc_normalize(s: &Spectrum) -> Result<Spectrum> {
    if s.values().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroArea);
    }
    let area = s.trapezoid_area();
    if area == 0.0 {
        return Err(Error::ZeroArea);
    }
    if area < 0.0 {
        return Err(Error::NegativeArea(area));
    }
    s.scale(1.0 / area)
}
