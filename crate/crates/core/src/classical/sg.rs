use serde::{Deserialize, Serialize};

use super::lsq::PolyProjector;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Window of `2 * half_window + 1` points, local polynomial of `degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SgConfig {
    pub half_window: usize,
    pub degree: usize,
}

impl Default for SgConfig {
    fn default() -> Self {
        Self {
            half_window: 5,
            degree: 3,
        }
    }
}

impl SgConfig {
    pub fn window(&self) -> usize {
        2 * self.half_window + 1
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.degree >= self.window() {
            return Err(Error::InvalidConfig(format!(
                "SG degree {} needs a window longer than {}",
                self.degree,
                self.window()
            )));
        }
        if self.window() > len {
            return Err(Error::WindowTooLarge {
                window: self.window(),
                len,
            });
        }
        Ok(())
    }
}

/// Least-squares weights over a `2m+1` window that return the fitted
/// polynomial at window position `eval_pos` (`m` is the centre).
pub fn sg_coefficients(half_window: usize, degree: usize, eval_pos: usize) -> Result<Vec<f64>> {
    let cfg = SgConfig {
        half_window,
        degree,
    };
    cfg.validate(cfg.window())?;
    if eval_pos >= cfg.window() {
        return Err(Error::InvalidConfig(format!(
            "evaluation position {eval_pos} outside window of {}",
            cfg.window()
        )));
    }
    let t = PolyProjector::symmetric_abscissa(cfg.window());
    Ok(PolyProjector::new(&t, degree).hat_row(eval_pos))
}

/// Savitzky–Golay smoothing. Points within `half_window` of either end are
/// fitted on the first (or last) full window and evaluated at their own
/// position, so the output keeps the input length.
pub fn sg_filter(s: &Spectrum, cfg: &SgConfig) -> Result<Spectrum> {
    let n = s.len();
    cfg.validate(n)?;
    let m = cfg.half_window;
    let w = cfg.window();
    let t = PolyProjector::symmetric_abscissa(w);
    let proj = PolyProjector::new(&t, cfg.degree);
    let y = s.values();
    let mut out = vec![0.0; n];

    let central = proj.hat_row(m);
    for i in m..n - m {
        out[i] = central
            .iter()
            .zip(&y[i - m..=i + m])
            .map(|(c, v)| c * v)
            .sum();
    }
    for i in 0..m {
        let left = proj.hat_row(i);
        out[i] = left.iter().zip(&y[..w]).map(|(c, v)| c * v).sum();
        let right = proj.hat_row(w - 1 - i);
        out[n - 1 - i] = right.iter().zip(&y[n - w..]).map(|(c, v)| c * v).sum();
    }
    Spectrum::new(*s.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{make_grid, SpectrumGrid};

    #[test]
    fn classic_five_point_quadratic() {
        let c = sg_coefficients(2, 2, 2).unwrap();
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{c:?}");
        }
    }

    #[test]
    fn reproduces_polynomials() {
        let g = SpectrumGrid::default();
        for (m, d) in [(2, 2), (5, 3), (7, 4), (3, 0), (1, 2)] {
            let s = Spectrum::from_fn(g, |x| {
                let u = (x - 1200.0) / 600.0;
                (0..=d).map(|k| (k as f64 + 1.0) * u.powi(k as i32)).sum()
            })
            .unwrap();
            let out = sg_filter(&s, &SgConfig { half_window: m, degree: d }).unwrap();
            for (a, b) in out.values().iter().zip(s.values()) {
                assert!((a - b).abs() < 1e-10, "m={m} d={d}");
            }
        }
    }

    #[test]
    fn constant_unchanged() {
        let s = Spectrum::constant(SpectrumGrid::default(), 3.25);
        let out = sg_filter(&s, &SgConfig::default()).unwrap();
        assert!(out.values().iter().all(|v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn window_checks() {
        let g = make_grid(0.0, 1.0, 5).unwrap();
        let s = Spectrum::zeros(g);
        assert!(matches!(
            sg_filter(&s, &SgConfig { half_window: 3, degree: 2 }),
            Err(Error::WindowTooLarge { window: 7, len: 5 })
        ));
        assert!(sg_filter(&s, &SgConfig { half_window: 2, degree: 5 }).is_err());
        assert!(sg_filter(&s, &SgConfig { half_window: 2, degree: 4 }).is_ok());
    }

    #[test]
    fn linear_in_input() {
        let g = SpectrumGrid::default();
        let x = Spectrum::from_fn(g, |w| (w / 13.0).sin()).unwrap();
        let y = Spectrum::from_fn(g, |w| (w / 7.0).cos() * 2.0).unwrap();
        let cfg = SgConfig { half_window: 6, degree: 3 };
        let combo = x.scale(1.5).unwrap().add(&y.scale(-0.25).unwrap()).unwrap();
        let lhs = sg_filter(&combo, &cfg).unwrap();
        let sx = sg_filter(&x, &cfg).unwrap();
        let sy = sg_filter(&y, &cfg).unwrap();
        for i in 0..g.len() {
            let rhs = 1.5 * sx.values()[i] - 0.25 * sy.values()[i];
            assert!((lhs.values()[i] - rhs).abs() < 1e-10);
        }
    }
}
