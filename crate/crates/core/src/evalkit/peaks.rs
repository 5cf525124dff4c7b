use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Default position tolerance for a detected peak to count as recovered.
pub const MATCH_TOLERANCE_WN: f64 = 6.0;

/// Prominence thresholds as fractions of the true spectrum's maximum.
pub const DEFAULT_PROMINENCE_LEVELS: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub position: f64,
    pub amplitude: f64,
    pub prominence: f64,
}

/// Indices `i` with `y[i-1] < y[i] > y[i+1]`.
pub fn strict_local_maxima(y: &[f64]) -> Vec<usize> {
    if y.len() < 3 {
        return Vec::new();
    }
    (1..y.len() - 1)
        .filter(|&i| y[i - 1] < y[i] && y[i] > y[i + 1])
        .collect()
}

/// Height of `y[i]` above the higher of the two minima found by walking
/// outwards until a strictly higher sample (or the edge) is reached.
pub fn prominence_at(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left_min = h;
    for &v in y[..i].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Strict local maxima whose prominence is at least `prominence`.
pub fn detect_peaks(s: &Spectrum, prominence: f64) -> Result<Vec<Peak>> {
    if !(prominence >= 0.0) {
        return Err(Error::Domain(format!("prominence {prominence} must be non-negative")));
    }
    let y = s.values();
    Ok(strict_local_maxima(y)
        .into_iter()
        .filter_map(|i| {
            let p = prominence_at(y, i);
            (p >= prominence).then(|| Peak {
                index: i,
                position: s.grid().point(i),
                amplitude: y[i],
                prominence: p,
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub true_index: usize,
    pub pred_index: usize,
    pub shift: f64,
    pub value_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakMatchReport {
    pub missing_ratio: f64,
    /// Infinite when there are predicted peaks but no true ones.
    pub artifact_ratio: f64,
    /// Mean |A_pred − A_true| over matches; 0 when nothing matched.
    pub value_bias: f64,
    /// Mean |λ_pred − λ_true| over matches; 0 when nothing matched.
    pub shift_mean: f64,
    pub n_true: usize,
    pub n_pred: usize,
    pub n_match: usize,
    pub n_missing: usize,
    pub n_artifact: usize,
    /// False when `n_true = 0` and the ratios have no denominator.
    pub ratios_defined: bool,
    /// False when `n_match = 0`.
    pub match_stats_defined: bool,
    pub pairs: Vec<MatchedPair>,
}

/// Greedy one-to-one matching: candidate pairs within `tol_wn` are taken
/// in order of increasing distance, each peak used at most once.
pub fn match_peaks(true_peaks: &[Peak], pred_peaks: &[Peak], tol_wn: f64) -> PeakMatchReport {
    let mut candidates = Vec::new();
    for (a, t) in true_peaks.iter().enumerate() {
        for (b, p) in pred_peaks.iter().enumerate() {
            let d = (p.position - t.position).abs();
            if d <= tol_wn {
                candidates.push((d, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_true = vec![false; true_peaks.len()];
    let mut used_pred = vec![false; pred_peaks.len()];
    let mut pairs = Vec::new();
    for (d, a, b) in candidates {
        if used_true[a] || used_pred[b] {
            continue;
        }
        used_true[a] = true;
        used_pred[b] = true;
        pairs.push(MatchedPair {
            true_index: a,
            pred_index: b,
            shift: d,
            value_error: (pred_peaks[b].amplitude - true_peaks[a].amplitude).abs(),
        });
    }
    pairs.sort_by_key(|p| p.true_index);

    let n_true = true_peaks.len();
    let n_pred = pred_peaks.len();
    let n_match = pairs.len();
    let n_missing = n_true - n_match;
    let n_artifact = n_pred - n_match;
    let ratios_defined = n_true > 0;
    let (missing_ratio, artifact_ratio) = if ratios_defined {
        (n_missing as f64 / n_true as f64, n_artifact as f64 / n_true as f64)
    } else if n_artifact > 0 {
        (0.0, f64::INFINITY)
    } else {
        (0.0, 0.0)
    };
    let match_stats_defined = n_match > 0;
    let (value_bias, shift_mean) = if match_stats_defined {
        let k = n_match as f64;
        (
            pairs.iter().map(|p| p.value_error).sum::<f64>() / k,
            pairs.iter().map(|p| p.shift).sum::<f64>() / k,
        )
    } else {
        (0.0, 0.0)
    };
    PeakMatchReport {
        missing_ratio,
        artifact_ratio,
        value_bias,
        shift_mean,
        n_true,
        n_pred,
        n_match,
        n_missing,
        n_artifact,
        ratios_defined,
        match_stats_defined,
        pairs,
    }
}

/// Averages of the per-spectrum metrics at one prominence level. Spectra
/// with undefined ratios or no matches are left out of the respective mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakLevelSummary {
    pub level: f64,
    pub n_spectra: usize,
    pub missing_ratio: f64,
    pub artifact_ratio: f64,
    pub value_bias: f64,
    pub shift_mean: f64,
    pub n_ratio_undefined: usize,
    pub n_match_undefined: usize,
    pub total_true: usize,
    pub total_pred: usize,
    pub total_match: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSweep {
    pub tol_wn: f64,
    pub levels: Vec<PeakLevelSummary>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Peak metrics of each prediction against its truth. At each level the
/// absolute prominence is `level × max(truth)` for both spectra.
pub fn peak_sweep(truths: &[Spectrum], preds: &[Spectrum], levels: &[f64], tol_wn: f64) -> Result<PeakSweep> {
    if truths.len() != preds.len() {
        return Err(Error::LengthMismatch {
            expected: truths.len(),
            actual: preds.len(),
        });
    }
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let reports = truths
            .iter()
            .zip(preds)
            .map(|(t, p)| {
                t.grid().ensure_same(p.grid())?;
                let prom = level * t.max().max(0.0);
                Ok(match_peaks(&detect_peaks(t, prom)?, &detect_peaks(p, prom)?, tol_wn))
            })
            .collect::<Result<Vec<_>>>()?;
        let defined = || reports.iter().filter(|r| r.ratios_defined);
        let matched = || reports.iter().filter(|r| r.match_stats_defined);
        out.push(PeakLevelSummary {
            level,
            n_spectra: reports.len(),
            missing_ratio: mean(defined().map(|r| r.missing_ratio)),
            artifact_ratio: mean(defined().map(|r| r.artifact_ratio)),
            value_bias: mean(matched().map(|r| r.value_bias)),
            shift_mean: mean(matched().map(|r| r.shift_mean)),
            n_ratio_undefined: reports.len() - defined().count(),
            n_match_undefined: reports.len() - matched().count(),
            total_true: reports.iter().map(|r| r.n_true).sum(),
            total_pred: reports.iter().map(|r| r.n_pred).sum(),
            total_match: reports.iter().map(|r| r.n_match).sum(),
        });
    }
    Ok(PeakSweep { tol_wn, levels: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::make_grid;

    fn spectrum(values: Vec<f64>) -> Spectrum {
        let n = values.len();
        Spectrum::new(make_grid(0.0, (n - 1) as f64, n).unwrap(), values).unwrap()
    }

    fn at(position: f64, amplitude: f64) -> Peak {
        Peak {
            index: 0,
            position,
            amplitude,
            prominence: amplitude,
        }
    }

    #[test]
    fn triangle_peak() {
        let s = spectrum(vec![0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0]);
        let p = detect_peaks(&s, 0.5).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].index, 3);
        assert_eq!(p[0].amplitude, 1.0);
        assert!(detect_peaks(&s, 1.5).unwrap().is_empty());
    }

    #[test]
    fn two_peaks_valley_zero() {
        let s = spectrum(vec![0.0, 1.0, 0.0, 0.3, 0.0]);
        let p = detect_peaks(&s, 0.5).unwrap();
        assert_eq!(p.iter().map(|p| p.index).collect::<Vec<_>>(), vec![1]);
        assert_eq!(prominence_at(s.values(), 3), 0.3);
    }

    #[test]
    fn prominence_uses_higher_base() {
        // Peak at 3 is bounded by the higher peak at 7 on the right; its
        // right base is the valley at 5 (0.4), left base 0.
        let y = [0.0, 0.2, 0.5, 0.9, 0.6, 0.4, 0.8, 1.5, 0.0];
        assert!((prominence_at(&y, 3) - 0.5).abs() < 1e-15);
        assert_eq!(prominence_at(&y, 7), 1.5);
    }

    #[test]
    fn plateaus_are_not_strict_maxima() {
        let y = [0.0, 1.0, 1.0, 0.0, 2.0, 0.0];
        assert_eq!(strict_local_maxima(&y), vec![4]);
        assert_eq!(strict_local_maxima(&[1.0, 0.0]), Vec::<usize>::new());
    }

    #[test]
    fn negative_prominence_rejected() {
        assert!(detect_peaks(&spectrum(vec![0.0, 1.0, 0.0]), -0.1).is_err());
    }

    #[test]
    fn match_within_tolerance() {
        let r = match_peaks(&[at(1000.0, 1.0)], &[at(1005.0, 0.8)], MATCH_TOLERANCE_WN);
        assert_eq!(r.n_match, 1);
        assert_eq!(r.shift_mean, 5.0);
        assert!((r.value_bias - 0.2).abs() < 1e-15);
        let r = match_peaks(&[at(1000.0, 1.0)], &[at(1006.5, 0.8)], MATCH_TOLERANCE_WN);
        assert_eq!(r.n_match, 0);
        assert_eq!(r.missing_ratio, 1.0);
        assert_eq!(r.artifact_ratio, 1.0);
        assert!(!r.match_stats_defined);
    }

    #[test]
    fn missing_ratio_quarter() {
        let t = [at(700.0, 1.0), at(800.0, 1.0), at(900.0, 1.0), at(1000.0, 1.0)];
        let p = [at(701.0, 1.0), at(799.0, 1.0), at(1002.0, 1.0)];
        let r = match_peaks(&t, &p, MATCH_TOLERANCE_WN);
        assert_eq!(r.n_match, 3);
        assert_eq!(r.missing_ratio, 0.25);
        assert_eq!(r.artifact_ratio, 0.0);
    }

    #[test]
    fn no_true_peaks() {
        let r = match_peaks(&[], &[at(700.0, 1.0), at(900.0, 1.0)], MATCH_TOLERANCE_WN);
        assert_eq!(r.n_artifact, 2);
        assert!(r.artifact_ratio.is_infinite());
        assert!(!r.ratios_defined);
    }

    #[test]
    fn greedy_prefers_closest_pair() {
        // Pred at 1004 is 4 from the first true peak and 1 from the second.
        let t = [at(1000.0, 1.0), at(1005.0, 1.0)];
        let p = [at(1004.0, 1.0), at(1009.0, 1.0)];
        let r = match_peaks(&t, &p, MATCH_TOLERANCE_WN);
        assert_eq!(r.n_match, 1);
        assert_eq!((r.pairs[0].true_index, r.pairs[0].pred_index), (1, 0));
    }
}
