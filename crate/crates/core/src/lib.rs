//! Simulation, classical denoising and evaluation of noisy Raman spectra.

pub mod classical;
pub mod cli;
pub mod dataio;
pub mod denoise;
pub mod error;
pub mod evalkit;
pub mod noisemodel;
pub mod report;
pub mod rng;
pub mod skin;
pub mod spectrum;
pub mod synth;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use spectrum::{auc_normalize, make_grid, Spectrum, SpectrumGrid};
