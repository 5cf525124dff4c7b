//! Synthetic spectrum generation.
//!
//! Pure Raman spectra are sums of pseudo-Voigt peaks, fluorescence baselines
//! are random low-order polynomials, and the two are scaled jointly so the
//! composite hits a target Raman-to-fluorescence ratio (r2f) and a target
//! SNR at the tallest Raman peak before noise is drawn.

use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noisemodel::{choose_dark, sample_noisy_spectrum, CleanSignal, DarkStats, NoiseMode};
use crate::rng::{open_closed_unit, RngStream};
use crate::spectrum::{Spectrum, SpectrumGrid};

pub const MIN_FWHM: f64 = 10.0;
pub const MAX_FWHM: f64 = 200.0;
pub const MAX_PEAKS: usize = 30;
pub const FLUOR_ORDER_MIN: usize = 3;
pub const FLUOR_ORDER_MAX: usize = 6;
pub const FLUOR_SHIFT_EPS: f64 = 1e-6;
pub const FLUOR_MAX_ATTEMPTS: usize = 100;
/// Redraws allowed when a Raman draw comes out flat (zero peaks).
pub const RAMAN_MAX_ATTEMPTS: usize = 64;

/// One pseudo-Voigt line. `fwhm` is shared by the Lorentzian and Gaussian
/// kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    pub center: f64,
    pub fwhm: f64,
    pub mix: f64,
    pub amplitude: f64,
}

impl PeakParams {
    pub fn new(center: f64, fwhm: f64, mix: f64, amplitude: f64) -> Result<Self> {
        let p = Self {
            center,
            fwhm,
            mix,
            amplitude,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::InvalidConfig(format!("peak center {}", self.center)));
        }
        if !(MIN_FWHM..=MAX_FWHM).contains(&self.fwhm) {
            return Err(Error::InvalidConfig(format!(
                "peak FWHM {} outside [{MIN_FWHM}, {MAX_FWHM}]",
                self.fwhm
            )));
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return Err(Error::InvalidConfig(format!("peak mix {} outside [0, 1]", self.mix)));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "peak amplitude {} outside (0, 1]",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Lorentzian half width at half maximum γ.
    pub fn lorentz_width(&self) -> f64 {
        self.fwhm / 2.0
    }

    /// Gaussian standard deviation σ.
    pub fn gauss_width(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * LN_2).sqrt())
    }

    pub fn eval(&self, wn: f64) -> f64 {
        let dx = wn - self.center;
        let gamma = self.lorentz_width();
        let sigma = self.gauss_width();
        let lorentz = gamma * gamma / (dx * dx + gamma * gamma);
        let gauss = (-dx * dx / (2.0 * sigma * sigma)).exp();
        self.amplitude * (self.mix * lorentz + (1.0 - self.mix) * gauss)
    }
}

/// Unit-amplitude pseudo-Voigt profile scaled by `p.amplitude`.
pub fn pseudo_voigt(grid: &SpectrumGrid, p: &PeakParams) -> Result<Spectrum> {
    p.validate()?;
    if !grid.contains(p.center) {
        return Err(Error::InvalidConfig(format!(
            "peak center {} outside grid [{}, {}]",
            p.center,
            grid.start(),
            grid.end()
        )));
    }
    Spectrum::from_fn(*grid, |x| p.eval(x))
}

pub fn raman_from_peaks(grid: &SpectrumGrid, peaks: &[PeakParams]) -> Result<Spectrum> {
    let mut values = vec![0.0; grid.len()];
    for p in peaks {
        let s = pseudo_voigt(grid, p)?;
        for (acc, v) in values.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    Spectrum::new(*grid, values)
}

/// Sampling ranges for one simulated composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub peak_count: (usize, usize),
    pub fwhm: (f64, f64),
    pub poly_order: (usize, usize),
    pub coeff: (f64, f64),
    pub noise_mode: NoiseMode,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            peak_count: (0, MAX_PEAKS),
            fwhm: (MIN_FWHM, MAX_FWHM),
            poly_order: (FLUOR_ORDER_MIN, FLUOR_ORDER_MAX),
            coeff: (-1.0, 1.0),
            noise_mode: NoiseMode::Gaussian,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.peak_count;
        if lo > hi {
            return Err(Error::InvalidRange(format!("peak count {lo}..{hi}")));
        }
        let (a, b) = self.fwhm;
        if !(MIN_FWHM <= a && a <= b && b <= MAX_FWHM) {
            return Err(Error::InvalidRange(format!("fwhm {a}..{b}")));
        }
        let (lo, hi) = self.poly_order;
        if !(FLUOR_ORDER_MIN <= lo && lo <= hi && hi <= FLUOR_ORDER_MAX) {
            return Err(Error::InvalidRange(format!("polynomial order {lo}..{hi}")));
        }
        if !(self.coeff.0 <= self.coeff.1) {
            return Err(Error::InvalidRange(format!("coefficients {:?}", self.coeff)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanDraw {
    pub spectrum: Spectrum,
    pub peaks: Vec<PeakParams>,
}

pub fn sample_peak<R: Rng + ?Sized>(grid: &SpectrumGrid, cfg: &SynthesisConfig, rng: &mut R) -> PeakParams {
    let amplitude = open_closed_unit(rng);
    let fwhm = rng.random_range(cfg.fwhm.0..=cfg.fwhm.1);
    let center = rng.random_range(grid.start()..=grid.end());
    let mix = rng.random_range(0.0..=1.0);
    PeakParams {
        center,
        fwhm,
        mix,
        amplitude,
    }
}

/// Draws `count` peaks and sums them.
pub fn gen_pure_raman_with_count<R: Rng + ?Sized>(
    grid: &SpectrumGrid,
    count: usize,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> Result<RamanDraw> {
    let peaks: Vec<PeakParams> = (0..count).map(|_| sample_peak(grid, cfg, rng)).collect();
    Ok(RamanDraw {
        spectrum: raman_from_peaks(grid, &peaks)?,
        peaks,
    })
}

/// Peak count uniform on `cfg.peak_count` (inclusive); zero peaks gives the
/// zero spectrum.
pub fn gen_pure_raman<R: Rng + ?Sized>(
    grid: &SpectrumGrid,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> Result<RamanDraw> {
    let count = rng.random_range(cfg.peak_count.0..=cfg.peak_count.1);
    gen_pure_raman_with_count(grid, count, cfg, rng)
}

/// Polynomial `Σ a_k t^k` with `t` the grid position mapped onto [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluorSpec {
    pub order: usize,
    pub coeffs: Vec<f64>,
}

impl FluorSpec {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    pub fn evaluate(&self, grid: &SpectrumGrid) -> Vec<f64> {
        (0..grid.len()).map(|i| self.eval(grid.unit_abscissa(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluorDraw {
    pub spectrum: Spectrum,
    pub spec: FluorSpec,
    /// Offset added to make the curve positive; zero when accepted as drawn.
    pub shift: f64,
    pub attempts: usize,
}

/// Lifts a curve so its minimum is exactly [`FLUOR_SHIFT_EPS`] when it is
/// not already strictly positive. Returns the shift applied.
pub fn shift_positive(values: &mut [f64]) -> f64 {
    let Some((argmin, min)) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
    else {
        return 0.0;
    };
    if min > 0.0 {
        return 0.0;
    }
    let shift = -min + FLUOR_SHIFT_EPS;
    values.iter_mut().for_each(|v| *v += shift);
    // pin the minimum so rounding cannot leave it off by an ulp
    values[argmin] = FLUOR_SHIFT_EPS;
    shift
}

pub fn sample_fluor_spec<R: Rng + ?Sized>(cfg: &SynthesisConfig, rng: &mut R) -> FluorSpec {
    let order = rng.random_range(cfg.poly_order.0..=cfg.poly_order.1);
    let coeffs = (0..=order)
        .map(|_| rng.random_range(cfg.coeff.0..=cfg.coeff.1))
        .collect();
    FluorSpec { order, coeffs }
}

/// Random positive fluorescence baseline. Draws are accepted as-is when
/// strictly positive; after [`FLUOR_MAX_ATTEMPTS`] non-positive draws the
/// last one is shifted up.
pub fn gen_fluorescence<R: Rng + ?Sized>(
    grid: &SpectrumGrid,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> Result<FluorDraw> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let spec = sample_fluor_spec(cfg, rng);
        let mut values = spec.evaluate(grid);
        let positive = values.iter().all(|&v| v > 0.0);
        if positive || attempts >= FLUOR_MAX_ATTEMPTS {
            let shift = shift_positive(&mut values);
            return Ok(FluorDraw {
                spectrum: Spectrum::new(*grid, values)?,
                spec,
                shift,
                attempts,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleTargets {
    pub r2f: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRanges {
    pub r2f: (f64, f64),
    pub snr: (f64, f64),
}

impl Default for TargetRanges {
    fn default() -> Self {
        Self {
            r2f: (0.1, 0.5),
            snr: (0.01, 20.0),
        }
    }
}

impl TargetRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("r2f", self.r2f), ("snr", self.snr)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidRange(format!("{name} range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ScaleTargets {
        ScaleTargets {
            r2f: rng.random_range(self.r2f.0..=self.r2f.1),
            snr: rng.random_range(self.snr.0..=self.snr.1),
        }
    }
}

/// Multipliers for the Raman (`m`) and fluorescence (`n`) components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub m: f64,
    pub n: f64,
}

/// Solves for `(m, n)` such that
///
/// ```text
/// m·x_p / (n·f_max) = r2f
/// m·x_p / sqrt(m·x_p + n·f_p + y) = s
/// ```
///
/// by eliminating `m` and taking the positive root of
/// `A n² + B n + C = 0` with `A = r2f²·f_max²`, `B = −s²(r2f·f_max + f_p)`,
/// `C = −s²·y`.
pub fn solve_scale(r2f: f64, s: f64, x_p: f64, f_max: f64, f_p: f64, y: f64) -> Result<Scale> {
    if !(x_p > 0.0) {
        return Err(Error::Domain(format!("raman peak amplitude x_p = {x_p} must be positive")));
    }
    if !(f_max > 0.0) {
        return Err(Error::Domain(format!("fluorescence maximum f_max = {f_max} must be positive")));
    }
    if !(r2f > 0.0) || !(s > 0.0) {
        return Err(Error::Domain(format!("targets must be positive (r2f {r2f}, snr {s})")));
    }
    if !(f_p >= 0.0) || !(y >= 0.0) {
        return Err(Error::Domain(format!("f_p = {f_p} and y = {y} must be non-negative")));
    }
    let a = (r2f * f_max).powi(2);
    let b = -s * s * (r2f * f_max + f_p);
    let c = -s * s * y;
    let disc = b * b - 4.0 * a * c;
    let n = (-b + disc.sqrt()) / (2.0 * a);
    let m = r2f * n * f_max / x_p;
    if !(n > 0.0 && m > 0.0 && n.is_finite() && m.is_finite()) {
        return Err(Error::Domain(format!("no positive finite scale (m {m}, n {n})")));
    }
    Ok(Scale { m, n })
}

/// A simulated training triple plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub noisy: Spectrum,
    pub clean_with_baseline: Spectrum,
    pub pure_raman: Spectrum,
    pub fluorescence: Spectrum,
    pub targets: ScaleTargets,
    pub scale: Scale,
    /// Index of the tallest Raman point used for scaling.
    pub peak_index: usize,
    pub dark_id: usize,
    pub seed: RngStream,
    /// Mixture weights when the Raman component is a skin mixture.
    pub mixture_weights: Option<Vec<f64>>,
}

impl LabeledExample {
    pub fn clean_signal(&self) -> Result<CleanSignal> {
        CleanSignal::new(self.pure_raman.clone(), self.fluorescence.clone())
    }

    /// SNR at the scaling peak implied by the clean components and dark
    /// variance.
    pub fn achieved_snr(&self, dark: &DarkStats) -> f64 {
        let p = self.peak_index;
        self.pure_raman.values()[p]
            / (self.clean_with_baseline.values()[p] + 2.0 * dark.variance[p]).sqrt()
    }

    pub fn achieved_r2f(&self) -> f64 {
        self.pure_raman.max() / self.fluorescence.max()
    }
}

/// Scaled clean components before noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledComposite {
    pub pure_raman: Spectrum,
    pub fluorescence: Spectrum,
    pub clean_with_baseline: Spectrum,
    pub scale: Scale,
    pub peak_index: usize,
}

pub fn scale_composite(
    raman: &Spectrum,
    fluor: &Spectrum,
    targets: ScaleTargets,
    dark: &DarkStats,
) -> Result<ScaledComposite> {
    raman.grid().ensure_same(fluor.grid())?;
    raman.grid().ensure_same(&dark.grid)?;
    let p = raman.argmax();
    let x_p = raman.values()[p];
    if !(x_p > 0.0) {
        return Err(Error::FlatRaman);
    }
    if let Some(v) = fluor.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("fluorescence must be strictly positive (found {v})")));
    }
    let f_max = fluor.max();
    let f_p = fluor.values()[p];
    let y = 2.0 * dark.variance[p];
    let scale = solve_scale(targets.r2f, targets.snr, x_p, f_max, f_p, y)?;
    let pure_raman = raman.scale(scale.m)?;
    let fluorescence = fluor.scale(scale.n)?;
    let clean_with_baseline = pure_raman.add(&fluorescence)?;
    Ok(ScaledComposite {
        pure_raman,
        fluorescence,
        clean_with_baseline,
        scale,
        peak_index: p,
    })
}

/// Scales `raman` and `fluor` to `targets` and draws one noisy realization.
pub fn assemble_example<R: Rng + ?Sized>(
    raman: &Spectrum,
    fluor: &Spectrum,
    targets: ScaleTargets,
    dark: &DarkStats,
    mode: NoiseMode,
    rng: &mut R,
) -> Result<LabeledExample> {
    let composite = scale_composite(raman, fluor, targets, dark)?;
    let clean = CleanSignal::new(composite.pure_raman.clone(), composite.fluorescence.clone())?;
    let noisy = sample_noisy_spectrum(&clean, dark, rng, mode)?;
    Ok(LabeledExample {
        noisy,
        clean_with_baseline: composite.clean_with_baseline,
        pure_raman: composite.pure_raman,
        fluorescence: composite.fluorescence,
        targets,
        scale: composite.scale,
        peak_index: composite.peak_index,
        dark_id: 0,
        seed: RngStream::new(0, 0),
        mixture_weights: None,
    })
}

/// Draws a Raman spectrum with at least one peak.
pub fn gen_nonflat_raman<R: Rng + ?Sized>(
    grid: &SpectrumGrid,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> Result<RamanDraw> {
    for _ in 0..RAMAN_MAX_ATTEMPTS {
        let draw = gen_pure_raman(grid, cfg, rng)?;
        if draw.spectrum.max() > 0.0 {
            return Ok(draw);
        }
    }
    Err(Error::FlatRaman)
}

/// One dataset item generated entirely from `stream`.
pub fn gen_example(
    grid: &SpectrumGrid,
    dark_sets: &[DarkStats],
    stream: RngStream,
    ranges: &TargetRanges,
    cfg: &SynthesisConfig,
) -> Result<LabeledExample> {
    let mut rng = stream.rng();
    let raman = gen_nonflat_raman(grid, cfg, &mut rng)?;
    let fluor = gen_fluorescence(grid, cfg, &mut rng)?;
    let targets = ranges.sample(&mut rng);
    let (dark_id, dark) = choose_dark(dark_sets, &mut rng)?;
    let mut ex = assemble_example(&raman.spectrum, &fluor.spectrum, targets, dark, cfg.noise_mode, &mut rng)?;
    ex.dark_id = dark_id;
    ex.seed = stream;
    Ok(ex)
}

/// `count` examples; item `i` draws only from `stream.child(i)`, so the
/// output does not depend on thread count or scheduling.
pub fn gen_dataset(
    count: usize,
    grid: &SpectrumGrid,
    dark_sets: &[DarkStats],
    stream: RngStream,
    ranges: &TargetRanges,
    cfg: &SynthesisConfig,
) -> Result<Vec<LabeledExample>> {
    if count == 0 {
        return Err(Error::InvalidRange("dataset count must be at least 1".into()));
    }
    ranges.validate()?;
    cfg.validate()?;
    if dark_sets.is_empty() {
        return Err(Error::Validation("no dark statistics supplied".into()));
    }
    for d in dark_sets {
        grid.ensure_same(&d.grid)?;
        d.validate()?;
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| gen_example(grid, dark_sets, stream.child(i), ranges, cfg))
        .collect()
}
