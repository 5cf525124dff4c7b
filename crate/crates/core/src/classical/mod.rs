//! Classical comparator algorithms: Savitzky–Golay smoothing, wavelet
//! threshold denoising, ModPoly baseline removal, and the orthonormal DCT
//! pair used by frequency-domain denoisers.

mod dct;
mod lsq;
mod modpoly;
mod sg;
mod wavelet;

pub use dct::{dct, idct};
pub use modpoly::{modpoly_baseline, modpoly_fit_order, ModPolyConfig, ModPolyResult, OrderFit};
pub use sg::{sg_coefficients, sg_filter, SgConfig};
pub use wavelet::{
    dwt, idwt, threshold_coeffs, universal_threshold, wavelet_denoise, ThresholdRule, WaveletConfig,
    WaveletDecomposition, WaveletFamily,
};
