//! Evaluation protocols: SNR improvement, peak recovery and NNLS
//! concentration agreement.

mod concentration;
mod nnls;
mod peaks;
mod snri;

pub use concentration::{concentration_analysis, linear_fit, ComponentFit, ConcentrationReport, LinearFit};
pub use nnls::{basis_matrix, kkt_residual, nnls, nnls_matrix, NnlsSolution};
pub use peaks::{
    detect_peaks, match_peaks, peak_sweep, prominence_at, strict_local_maxima, MatchedPair, Peak,
    PeakLevelSummary, PeakMatchReport, PeakSweep, DEFAULT_PROMINENCE_LEVELS, MATCH_TOLERANCE_WN,
};
pub use snri::{
    build_snri_cases, denoise_cases, run_snri_protocol, sample_std, score_snri, snri_db, snri_db_relative,
    SnriCase, SnriConfig, SnriRecord, SnriSignal, SNR_CAP,
};

use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::noisemodel::DarkStats;
use crate::spectrum::{Spectrum, SpectrumGrid};
use crate::synth::{SynthesisConfig, TargetRanges};

/// Everything needed to simulate fresh composites for a protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub grid: SpectrumGrid,
    pub dark_sets: Vec<DarkStats>,
    pub ranges: TargetRanges,
    pub synthesis: SynthesisConfig,
}

impl SimSetup {
    pub fn validate(&self) -> Result<()> {
        self.ranges.validate()?;
        self.synthesis.validate()?;
        if self.dark_sets.is_empty() {
            return Err(Error::Validation("no dark statistics supplied".into()));
        }
        for d in &self.dark_sets {
            self.grid.ensure_same(&d.grid)?;
            d.validate()?;
        }
        Ok(())
    }
}

/// Denoises `noisy` (ground truth `pure` is handed to the denoiser for the
/// oracle) and sweeps the peak metrics over `levels`.
pub fn run_peak_protocol(
    denoiser: &dyn Denoiser,
    noisy: &[Spectrum],
    pure: &[Spectrum],
    levels: &[f64],
    tol_wn: f64,
) -> Result<PeakSweep> {
    let denoised = denoiser
        .denoise_batch(noisy, Some(pure))
        .map_err(|e| Error::Denoiser {
            context: "peak protocol".into(),
            source: Box::new(e),
        })?;
    peak_sweep(pure, &denoised, levels, tol_wn)
}
