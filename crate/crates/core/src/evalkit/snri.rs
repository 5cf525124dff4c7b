use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimSetup;
use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::noisemodel::{choose_dark, sample_noisy_spectrum, CleanSignal};
use crate::rng::RngStream;
use crate::spectrum::Spectrum;
use crate::synth::{gen_fluorescence, gen_nonflat_raman, scale_composite, ScaleTargets, ScaledComposite};

/// Upper limit on a post-denoising SNR; reached when the outputs do not
/// vary across realizations.
pub const SNR_CAP: f64 = 1e6;

/// `10·log10(new/old)`.
pub fn snri_db(snr_new: f64, snr_old: f64) -> f64 {
    10.0 * (snr_new / snr_old).log10()
}

/// `10·log10(1 + (new − old)/old)`, algebraically equal to [`snri_db`].
pub fn snri_db_relative(snr_new: f64, snr_old: f64) -> f64 {
    10.0 * (1.0 + (snr_new - snr_old) / snr_old).log10()
}

/// Sample standard deviation with the `n − 1` denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnriConfig {
    pub n_pairs: usize,
    pub signals_per_pair: usize,
    pub realizations: usize,
}

impl Default for SnriConfig {
    fn default() -> Self {
        Self {
            n_pairs: 500,
            signals_per_pair: 5,
            realizations: 10,
        }
    }
}

impl SnriConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 || self.signals_per_pair == 0 {
            return Err(Error::InvalidConfig("need at least one pair and one signal".into()));
        }
        if self.realizations < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 realizations to estimate a deviation, got {}",
                self.realizations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnriSignal {
    pub composite: ScaledComposite,
    pub noisy: Vec<Spectrum>,
}

/// Clean composites and noisy realizations for one `(r2f, snr)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SnriCase {
    pub pair: usize,
    pub targets: ScaleTargets,
    pub dark_id: usize,
    pub signals: Vec<SnriSignal>,
}

impl SnriCase {
    fn flat_noisy(&self) -> Vec<Spectrum> {
        self.signals.iter().flat_map(|s| s.noisy.iter().cloned()).collect()
    }

    fn flat_truth(&self) -> Vec<Spectrum> {
        self.signals
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.composite.clean_with_baseline.clone(), s.noisy.len()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnriRecord {
    pub pair: usize,
    pub r2f: f64,
    pub snr_old: f64,
    /// Mean over the pair's signals.
    pub snr_new: f64,
    /// Mean over the pair's signals.
    pub snri_db: f64,
    /// Signals whose SNR hit [`SNR_CAP`].
    pub n_capped: usize,
    pub signal_snri_db: Vec<f64>,
}

/// Pair `i` draws its targets, dark set and signals from `stream.child(i)`.
pub fn build_snri_cases(setup: &SimSetup, cfg: &SnriConfig, stream: RngStream) -> Result<Vec<SnriCase>> {
    cfg.validate()?;
    setup.validate()?;
    (0..cfg.n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i as u64).rng();
            let targets = setup.ranges.sample(&mut rng);
            let (dark_id, dark) = choose_dark(&setup.dark_sets, &mut rng)?;
            let signals = (0..cfg.signals_per_pair)
                .map(|_| {
                    let raman = gen_nonflat_raman(&setup.grid, &setup.synthesis, &mut rng)?;
                    let fluor = gen_fluorescence(&setup.grid, &setup.synthesis, &mut rng)?;
                    let composite = scale_composite(&raman.spectrum, &fluor.spectrum, targets, dark)?;
                    let clean = CleanSignal::new(composite.pure_raman.clone(), composite.fluorescence.clone())?;
                    let noisy = (0..cfg.realizations)
                        .map(|_| sample_noisy_spectrum(&clean, dark, &mut rng, setup.synthesis.noise_mode))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(SnriSignal { composite, noisy })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SnriCase {
                pair: i,
                targets,
                dark_id,
                signals,
            })
        })
        .collect()
}

/// Denoiser outputs shaped like the cases' noisy spectra
/// (`[pair][signal][realization]`). In-process denoisers run one batch per
/// pair; out-of-process ones get a single batch for the whole sweep.
pub fn denoise_cases(cases: &[SnriCase], denoiser: &dyn Denoiser) -> Result<Vec<Vec<Vec<Spectrum>>>> {
    let reshape = |case: &SnriCase, flat: Vec<Spectrum>| -> Vec<Vec<Spectrum>> {
        let mut it = flat.into_iter();
        case.signals
            .iter()
            .map(|s| it.by_ref().take(s.noisy.len()).collect())
            .collect()
    };
    let check = |flat: &[Spectrum], expected: usize, context: &str| -> Result<()> {
        if flat.len() != expected {
            return Err(Error::Denoiser {
                context: context.into(),
                source: Box::new(Error::LengthMismatch {
                    expected,
                    actual: flat.len(),
                }),
            });
        }
        Ok(())
    };
    if denoiser.prefers_single_batch() {
        let noisy: Vec<Spectrum> = cases.iter().flat_map(|c| c.flat_noisy()).collect();
        let truth: Vec<Spectrum> = cases.iter().flat_map(|c| c.flat_truth()).collect();
        let out = denoiser
            .denoise_batch(&noisy, Some(&truth))
            .map_err(|e| Error::Denoiser {
                context: "snri sweep".into(),
                source: Box::new(e),
            })?;
        check(&out, noisy.len(), "snri sweep")?;
        let mut it = out.into_iter();
        return Ok(cases
            .iter()
            .map(|c| {
                let n: usize = c.signals.iter().map(|s| s.noisy.len()).sum();
                reshape(c, it.by_ref().take(n).collect())
            })
            .collect());
    }
    cases
        .par_iter()
        .map(|case| {
            let noisy = case.flat_noisy();
            let context = format!("pair {} (signal-major order)", case.pair);
            let out = denoiser
                .denoise_batch(&noisy, Some(&case.flat_truth()))
                .map_err(|e| Error::Denoiser {
                    context: context.clone(),
                    source: Box::new(e),
                })?;
            check(&out, noisy.len(), &context)?;
            Ok(reshape(case, out))
        })
        .collect()
}

/// SNR after denoising at each signal's tallest Raman point: the pure Raman
/// amplitude there over the spread of the outputs across realizations.
pub fn score_snri(cases: &[SnriCase], outputs: &[Vec<Vec<Spectrum>>]) -> Result<Vec<SnriRecord>> {
    if cases.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            expected: cases.len(),
            actual: outputs.len(),
        });
    }
    cases
        .iter()
        .zip(outputs)
        .map(|(case, out)| {
            let snr_old = case.targets.snr;
            let mut snr_sum = 0.0;
            let mut n_capped = 0;
            let mut signal_snri_db = Vec::with_capacity(case.signals.len());
            for (sig, realizations) in case.signals.iter().zip(out) {
                let p = sig.composite.peak_index;
                let at_peak: Vec<f64> = realizations.iter().map(|s| s.values()[p]).collect();
                let sigma = sample_std(&at_peak);
                let amplitude = sig.composite.pure_raman.values()[p];
                let raw = amplitude / sigma;
                let snr_new = if sigma > 0.0 && raw < SNR_CAP { raw } else { SNR_CAP };
                if snr_new == SNR_CAP {
                    n_capped += 1;
                }
                snr_sum += snr_new;
                signal_snri_db.push(snri_db(snr_new, snr_old));
            }
            let k = case.signals.len() as f64;
            Ok(SnriRecord {
                pair: case.pair,
                r2f: case.targets.r2f,
                snr_old,
                snr_new: snr_sum / k,
                snri_db: signal_snri_db.iter().sum::<f64>() / k,
                n_capped,
                signal_snri_db,
            })
        })
        .collect()
}

pub fn run_snri_protocol(
    denoiser: &dyn Denoiser,
    setup: &SimSetup,
    cfg: &SnriConfig,
    stream: RngStream,
) -> Result<Vec<SnriRecord>> {
    let cases = build_snri_cases(setup, cfg, stream)?;
    let outputs = denoise_cases(&cases, denoiser)?;
    score_snri(&cases, &outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_forms_agree() {
        for (new, old) in [(2.0, 1.0), (0.5, 3.0), (1e6, 0.01), (7.0, 7.0)] {
            assert!((snri_db(new, old) - snri_db_relative(new, old)).abs() < 1e-12);
        }
        assert!((snri_db(2.0, 1.0) - 3.010_299_956_639_812).abs() < 1e-12);
    }

    #[test]
    fn unbiased_std() {
        assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_std(&[2.0; 10]), 0.0);
    }
}
