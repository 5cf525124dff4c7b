use serde::{Deserialize, Serialize};

use super::lsq::PolyProjector;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModPolyConfig {
    /// Inclusive range of polynomial orders tried.
    pub order_range: (usize, usize),
    pub max_iters: usize,
    /// Relative change of the residual norm that stops the iteration.
    pub tol: f64,
}

impl Default for ModPolyConfig {
    fn default() -> Self {
        Self {
            order_range: (3, 6),
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

impl ModPolyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order_range.0 > self.order_range.1 {
            return Err(Error::InvalidConfig(format!(
                "order range {:?} is empty",
                self.order_range
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol {} must be positive", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged fit for one polynomial order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub order: usize,
    pub baseline: Vec<f64>,
    /// Working signal after the last masking pass; never above the input.
    pub working: Vec<f64>,
    pub iterations: usize,
    /// ‖y − b‖₂ after each fit.
    pub residual_norms: Vec<f64>,
    /// RMS of `y − b` over points not flagged as peaks (`y ≤ b`).
    pub masked_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModPolyResult {
    pub baseline: Spectrum,
    pub corrected: Spectrum,
    pub order: usize,
    pub fits: Vec<OrderFit>,
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Iterative masked polynomial fit of a single order.
pub fn modpoly_fit_order(y: &[f64], order: usize, cfg: &ModPolyConfig) -> OrderFit {
    let n = y.len();
    let degree = order.min(n.saturating_sub(1));
    let t = PolyProjector::symmetric_abscissa(n);
    let proj = PolyProjector::new(&t, degree);
    let mut working = y.to_vec();
    let mut baseline = vec![0.0; n];
    let mut norms: Vec<f64> = Vec::new();
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        baseline = proj.project(&working);
        let norm = l2(y, &baseline);
        for (w, &b) in working.iter_mut().zip(&baseline) {
            if *w > b {
                *w = b;
            }
        }
        let done = match norms.last() {
            Some(&prev) if prev == 0.0 => norm == 0.0,
            Some(&prev) => ((norm - prev) / prev).abs() < cfg.tol,
            None => norm == 0.0,
        };
        norms.push(norm);
        if done {
            break;
        }
    }
    let (sum, count) = y
        .iter()
        .zip(&baseline)
        .filter(|(v, b)| v <= b)
        .fold((0.0, 0usize), |(s, c), (v, b)| (s + (v - b) * (v - b), c + 1));
    let masked_residual = if count == 0 {
        f64::INFINITY
    } else {
        (sum / count as f64).sqrt()
    };
    OrderFit {
        order,
        baseline,
        working,
        iterations,
        residual_norms: norms,
        masked_residual,
    }
}

/// ModPoly baseline over every order in `cfg.order_range`; keeps the order
/// with the smallest masked residual, lowest order on ties.
pub fn modpoly_baseline(s: &Spectrum, cfg: &ModPolyConfig) -> Result<ModPolyResult> {
    cfg.validate()?;
    let y = s.values();
    let fits: Vec<OrderFit> = (cfg.order_range.0..=cfg.order_range.1)
        .map(|order| modpoly_fit_order(y, order, cfg))
        .collect();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tie = cfg.tol * scale;
    let mut best = 0;
    for (i, f) in fits.iter().enumerate().skip(1) {
        if f.masked_residual + tie < fits[best].masked_residual {
            best = i;
        }
    }
    let chosen = &fits[best];
    let baseline = Spectrum::new(*s.grid(), chosen.baseline.clone())?;
    let corrected = s.sub(&baseline)?;
    Ok(ModPolyResult {
        baseline,
        corrected,
        order: chosen.order,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumGrid;
    use crate::synth::{pseudo_voigt, PeakParams};

    fn cubic(g: SpectrumGrid) -> Spectrum {
        Spectrum::from_fn(g, |x| {
            let u = (x - 600.0) / 1190.0;
            50.0 + 30.0 * u - 80.0 * u * u + 60.0 * u * u * u
        })
        .unwrap()
    }

    #[test]
    fn pure_cubic_removed() {
        let g = SpectrumGrid::default();
        let s = cubic(g);
        let r = modpoly_baseline(&s, &ModPolyConfig::default()).unwrap();
        let tol = 1e-6 * s.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r.corrected.values().iter().all(|v| v.abs() < tol));
    }

    #[test]
    fn zero_signal() {
        let g = SpectrumGrid::default();
        let r = modpoly_baseline(&Spectrum::zeros(g), &ModPolyConfig::default()).unwrap();
        assert!(r.baseline.values().iter().all(|&v| v == 0.0));
        assert!(r.corrected.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cubic_under_peak() {
        let g = SpectrumGrid::default();
        let base = cubic(g);
        let peak = pseudo_voigt(&g, &PeakParams::new(1100.0, 30.0, 0.1, 1.0).unwrap())
            .unwrap()
            .scale(5.0)
            .unwrap();
        let s = base.add(&peak).unwrap();
        let r = modpoly_baseline(&s, &ModPolyConfig::default()).unwrap();
        let mask: Vec<usize> = (0..g.len()).filter(|&i| peak.values()[i] < 0.05).collect();
        let rms = (mask
            .iter()
            .map(|&i| (r.baseline.values()[i] - base.values()[i]).powi(2))
            .sum::<f64>()
            / mask.len() as f64)
            .sqrt();
        let range = base.max() - base.min();
        assert!(rms < 0.02 * range, "rms {rms} range {range}");
    }

    #[test]
    fn masking_never_raises_working_signal() {
        let g = SpectrumGrid::default();
        let s = cubic(g)
            .add(&pseudo_voigt(&g, &PeakParams::new(1500.0, 100.0, 0.2, 1.0).unwrap()).unwrap().scale(10.0).unwrap())
            .unwrap();
        for order in 3..=6 {
            let fit = modpoly_fit_order(s.values(), order, &ModPolyConfig::default());
            assert!(fit.working.iter().zip(s.values()).all(|(w, y)| w <= y));
            assert!(fit.iterations <= 100);
        }
    }

    #[test]
    fn config_validation() {
        let g = SpectrumGrid::default();
        let s = Spectrum::zeros(g);
        let bad = ModPolyConfig { order_range: (5, 3), ..Default::default() };
        assert!(modpoly_baseline(&s, &bad).is_err());
        let bad = ModPolyConfig { tol: 0.0, ..Default::default() };
        assert!(modpoly_baseline(&s, &bad).is_err());
    }
}
