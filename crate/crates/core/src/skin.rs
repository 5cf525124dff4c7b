//! Simulated skin spectra: non-negative mixtures of seven area-normalized
//! component spectra.
//!
//! The built-in basis is a set of synthetic stand-ins made of pseudo-Voigt
//! bands near each component's characteristic positions. Real reference
//! spectra can be loaded with [`load_basis`].

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::dataio::read_spectrum_samples;
use crate::error::{Error, Result};
use crate::noisemodel::{choose_dark, DarkStats};
use crate::rng::RngStream;
use crate::spectrum::{auc_normalize, Spectrum, SpectrumGrid};
use crate::synth::{
    assemble_example, gen_fluorescence, pseudo_voigt, LabeledExample, PeakParams, SynthesisConfig,
    TargetRanges,
};

pub const COMPONENT_NAMES: [&str; 7] = [
    "water", "ceramide", "keratin", "nucleus", "triolein", "elastin", "collagen",
];

/// Upper SNR bound of the low-SNR evaluation group.
pub const LOW_SNR_MAX: f64 = 7.0;

const AUC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SkinBasis {
    names: Vec<String>,
    components: Vec<Spectrum>,
}

impl SkinBasis {
    /// Normalizes each component to unit area and checks the set.
    pub fn new(named: Vec<(String, Spectrum)>) -> Result<Self> {
        if named.len() != COMPONENT_NAMES.len() {
            return Err(Error::Validation(format!(
                "skin basis needs {} components, got {}",
                COMPONENT_NAMES.len(),
                named.len()
            )));
        }
        let grid = *named[0].1.grid();
        let mut names = Vec::with_capacity(named.len());
        let mut components = Vec::with_capacity(named.len());
        for (name, s) in named {
            grid.ensure_same(s.grid())
                .map_err(|e| Error::Validation(format!("component {name}: {e}")))?;
            let normalized = auc_normalize(&s).map_err(|e| Error::Validation(format!("component {name}: {e}")))?;
            names.push(name);
            components.push(normalized);
        }
        let basis = Self { names, components };
        basis.validate()?;
        Ok(basis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.len() != COMPONENT_NAMES.len() || self.names.len() != self.components.len() {
            return Err(Error::Validation(format!(
                "skin basis needs {} components",
                COMPONENT_NAMES.len()
            )));
        }
        let grid = self.grid();
        for (name, c) in self.names.iter().zip(&self.components) {
            grid.ensure_same(c.grid())?;
            let area = c.trapezoid_area();
            if (area - 1.0).abs() > AUC_TOL {
                return Err(Error::Validation(format!("component {name} has area {area}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> SpectrumGrid {
        *self.components[0].grid()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn components(&self) -> &[Spectrum] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// `(center, fwhm, mix, amplitude)` bands for each stand-in component.
const STAND_IN_BANDS: [&[(f64, f64, f64, f64)]; 7] = [
    // water: bending mode plus a rising shoulder at the high end
    &[(1640.0, 110.0, 0.3, 1.0), (1790.0, 160.0, 0.2, 0.35)],
    // ceramide
    &[(1062.0, 14.0, 0.6, 0.7), (1128.0, 14.0, 0.6, 0.6), (1296.0, 18.0, 0.5, 0.8), (1438.0, 22.0, 0.5, 1.0)],
    // keratin
    &[(1003.0, 10.0, 0.7, 0.5), (1250.0, 45.0, 0.4, 0.6), (1450.0, 30.0, 0.5, 0.9), (1652.0, 35.0, 0.5, 1.0)],
    // nucleus
    &[(785.0, 16.0, 0.6, 1.0), (1095.0, 20.0, 0.5, 0.7), (1337.0, 26.0, 0.5, 0.8), (1578.0, 20.0, 0.5, 0.9)],
    // triolein
    &[(1266.0, 20.0, 0.5, 0.7), (1302.0, 18.0, 0.5, 0.8), (1442.0, 20.0, 0.5, 1.0), (1656.0, 18.0, 0.5, 0.8), (1748.0, 16.0, 0.6, 0.5)],
    // elastin
    &[(935.0, 26.0, 0.5, 0.5), (1003.0, 10.0, 0.7, 0.4), (1335.0, 40.0, 0.4, 0.6), (1448.0, 28.0, 0.5, 0.9), (1668.0, 40.0, 0.4, 1.0)],
    // collagen
    &[(816.0, 14.0, 0.6, 0.4), (856.0, 14.0, 0.6, 0.7), (876.0, 14.0, 0.6, 0.6), (938.0, 22.0, 0.5, 0.8), (1246.0, 30.0, 0.5, 0.7), (1450.0, 26.0, 0.5, 0.9), (1666.0, 30.0, 0.5, 1.0)],
];

/// Synthetic stand-in basis on `grid`. Bands outside the grid are skipped.
pub fn builtin_basis(grid: &SpectrumGrid) -> Result<SkinBasis> {
    let named = COMPONENT_NAMES
        .iter()
        .zip(STAND_IN_BANDS)
        .map(|(name, bands)| {
            let mut acc = Spectrum::zeros(*grid);
            for &(c, w, eta, a) in bands.iter().filter(|b| grid.contains(b.0)) {
                acc = acc.add(&pseudo_voigt(grid, &PeakParams::new(c, w, eta, a)?)?)?;
            }
            Ok((name.to_string(), acc))
        })
        .collect::<Result<Vec<_>>>()?;
    SkinBasis::new(named)
}

/// Reads one spectrum file per component, resamples onto `grid` by linear
/// interpolation and normalizes each to unit area.
pub fn load_basis(files: &[(String, PathBuf)], grid: &SpectrumGrid) -> Result<SkinBasis> {
    for name in COMPONENT_NAMES {
        if !files.iter().any(|(n, _)| n == name) {
            return Err(Error::Validation(format!("missing skin component '{name}'")));
        }
    }
    let named = COMPONENT_NAMES
        .iter()
        .map(|&name| {
            let (_, path) = files.iter().find(|(n, _)| n == name).expect("checked above");
            let (wn, values) = read_spectrum_samples(path)?;
            let s = Spectrum::from_samples(*grid, &wn, &values)
                .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
            Ok((name.to_string(), s))
        })
        .collect::<Result<Vec<_>>>()?;
    SkinBasis::new(named)
}

/// [`load_basis`] over `<dir>/<component>.csv`.
pub fn load_basis_dir(dir: &Path, grid: &SpectrumGrid) -> Result<SkinBasis> {
    let files: Vec<(String, PathBuf)> = COMPONENT_NAMES
        .iter()
        .map(|n| (n.to_string(), dir.join(format!("{n}.csv"))))
        .collect();
    for (name, path) in &files {
        if !path.exists() {
            return Err(Error::Validation(format!(
                "missing skin component '{name}' ({})",
                path.display()
            )));
        }
    }
    load_basis(&files, grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkinSample {
    pub weights: Vec<f64>,
    pub spectrum: Spectrum,
}

/// `Σ wᵢ·Cᵢ`.
pub fn mix(basis: &SkinBasis, weights: &[f64]) -> Result<Spectrum> {
    if weights.len() != basis.len() {
        return Err(Error::LengthMismatch {
            expected: basis.len(),
            actual: weights.len(),
        });
    }
    let mut values = vec![0.0; basis.grid().len()];
    for (w, c) in weights.iter().zip(basis.components()) {
        for (acc, v) in values.iter_mut().zip(c.values()) {
            *acc += w * v;
        }
    }
    Spectrum::new(basis.grid(), values)
}

/// Seven independent U(0, 1) weights and their mixture.
pub fn gen_skin<R: Rng + ?Sized>(basis: &SkinBasis, rng: &mut R) -> Result<SkinSample> {
    let weights: Vec<f64> = (0..basis.len()).map(|_| rng.random::<f64>()).collect();
    let spectrum = mix(basis, &weights)?;
    Ok(SkinSample { weights, spectrum })
}

/// Skin test spectra: item `i` uses `stream.child(i)` to draw a mixture, a
/// fluorescence baseline, targets and a dark set, then goes through the
/// usual scaling and noise.
pub fn gen_skin_testset(
    basis: &SkinBasis,
    count: usize,
    stream: RngStream,
    dark_sets: &[DarkStats],
    ranges: &TargetRanges,
    cfg: &SynthesisConfig,
) -> Result<Vec<LabeledExample>> {
    if count == 0 {
        return Err(Error::InvalidRange("dataset count must be at least 1".into()));
    }
    basis.validate()?;
    ranges.validate()?;
    cfg.validate()?;
    if dark_sets.is_empty() {
        return Err(Error::Validation("no dark statistics supplied".into()));
    }
    let grid = basis.grid();
    for d in dark_sets {
        grid.ensure_same(&d.grid)?;
        d.validate()?;
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let item = stream.child(i);
            let mut rng = item.rng();
            let sample = gen_skin(basis, &mut rng)?;
            let fluor = gen_fluorescence(&grid, cfg, &mut rng)?;
            let targets = ranges.sample(&mut rng);
            let (dark_id, dark) = choose_dark(dark_sets, &mut rng)?;
            let mut ex = assemble_example(&sample.spectrum, &fluor.spectrum, targets, dark, cfg.noise_mode, &mut rng)?;
            ex.dark_id = dark_id;
            ex.seed = item;
            ex.mixture_weights = Some(sample.weights);
            Ok(ex)
        })
        .collect()
}
