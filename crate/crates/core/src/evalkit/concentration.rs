use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nnls::{basis_matrix, nnls_matrix};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// `None` when `x` has no spread.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFit {
    pub name: String,
    pub fit: Option<LinearFit>,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// One weight vector per spectrum.
    pub weights_pure: Vec<Vec<f64>>,
    pub weights_denoised: Vec<Vec<f64>>,
    /// Denoised-derived against pure-derived weights, per component.
    pub components: Vec<ComponentFit>,
    /// Mean squared difference over all components and spectra.
    pub mse: f64,
}

/// NNLS weights of each pure and denoised spectrum, line fits per
/// component, and the overall mean squared weight difference.
pub fn concentration_analysis(
    pure: &[Spectrum],
    denoised: &[Spectrum],
    basis: &[Spectrum],
    names: &[String],
) -> Result<ConcentrationReport> {
    if pure.len() != denoised.len() {
        return Err(Error::LengthMismatch {
            expected: pure.len(),
            actual: denoised.len(),
        });
    }
    if pure.is_empty() {
        return Err(Error::Validation("no spectra to analyse".into()));
    }
    if names.len() != basis.len() {
        return Err(Error::LengthMismatch {
            expected: basis.len(),
            actual: names.len(),
        });
    }
    let a = basis_matrix(basis)?;
    let solve = |set: &[Spectrum]| -> Result<Vec<Vec<f64>>> {
        set.par_iter()
            .enumerate()
            .map(|(k, s)| {
                basis[0].grid().ensure_same(s.grid())?;
                let b = nalgebra::DVector::from_column_slice(s.values());
                nnls_matrix(&a, &b).map(|sol| sol.weights).map_err(|e| Error::Denoiser {
                    context: format!("nnls on spectrum {k}"),
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let weights_pure = solve(pure)?;
    let weights_denoised = solve(denoised)?;
    let n = pure.len() as f64;
    let components = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let x: Vec<f64> = weights_pure.iter().map(|w| w[j]).collect();
            let y: Vec<f64> = weights_denoised.iter().map(|w| w[j]).collect();
            let mse = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
            ComponentFit {
                name: name.clone(),
                fit: linear_fit(&x, &y),
                mse,
            }
        })
        .collect::<Vec<_>>();
    let mse = components.iter().map(|c| c.mse).sum::<f64>() / components.len() as f64;
    Ok(ConcentrationReport {
        weights_pure,
        weights_denoised,
        components,
        mse,
    })
}
