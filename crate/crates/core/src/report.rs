//! Evaluation reports and the plot data derived from them.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{format_value, read_json, write_json};
use crate::error::{Error, Result};
use crate::evalkit::{ConcentrationReport, PeakSweep, SnriConfig, SnriRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnriReport {
    pub denoiser: String,
    pub root_seed: u64,
    pub stream_index: u64,
    pub config: SnriConfig,
    pub mean_snri_db: f64,
    pub records: Vec<SnriRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeaksReport {
    pub denoiser: String,
    pub split: String,
    pub n_spectra: usize,
    pub sweep: PeakSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkinGroup {
    pub label: String,
    pub snr_range: (f64, f64),
    pub n_spectra: usize,
    pub analysis: Option<ConcentrationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkinReport {
    pub denoiser: String,
    pub split: String,
    pub components: Vec<String>,
    pub all: ConcentrationReport,
    pub groups: Vec<SkinGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Report {
    Snri(SnriReport),
    Peaks(PeaksReport),
    Skin(SkinReport),
}

impl Report {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    /// Flat table of plot points: SNRi scatter, peak metrics against
    /// prominence, or concentration pairs with each component's fitted line.
    pub fn plot_table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let num = |v: f64| format_value(v);
        match self {
            Report::Snri(r) => (
                vec!["pair", "r2f", "snr", "snri_db"],
                r.records
                    .iter()
                    .map(|x| vec![x.pair.to_string(), num(x.r2f), num(x.snr_old), num(x.snri_db)])
                    .collect(),
            ),
            Report::Peaks(r) => (
                vec!["prominence", "missing_ratio", "artifact_ratio", "value_bias", "shift_mean"],
                r.sweep
                    .levels
                    .iter()
                    .map(|l| {
                        vec![
                            num(l.level),
                            num(l.missing_ratio),
                            num(l.artifact_ratio),
                            num(l.value_bias),
                            num(l.shift_mean),
                        ]
                    })
                    .collect(),
            ),
            Report::Skin(r) => {
                let mut rows = Vec::new();
                for (j, c) in r.all.components.iter().enumerate() {
                    let (slope, intercept) = c.fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.intercept));
                    for (wp, wd) in r.all.weights_pure.iter().zip(&r.all.weights_denoised) {
                        rows.push(vec![
                            c.name.clone(),
                            num(wp[j]),
                            num(wd[j]),
                            num(slope * wp[j] + intercept),
                            num(slope),
                            num(intercept),
                        ]);
                    }
                }
                (vec!["component", "pure", "denoised", "fitted", "slope", "intercept"], rows)
            }
        }
    }

    pub fn plot_csv(&self) -> String {
        let (header, rows) = self.plot_table();
        let mut out = header.join(",");
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn plot_svg(&self) -> String {
        let fig = match self {
            Report::Snri(r) => Figure {
                title: format!("SNR improvement ({})", r.denoiser),
                xlabel: "input SNR".into(),
                ylabel: "SNRi (dB)".into(),
                series: vec![Series {
                    name: "pairs".into(),
                    points: r.records.iter().map(|x| (x.snr_old, x.snri_db)).collect(),
                    line: false,
                }],
            },
            Report::Peaks(r) => {
                let line = |name: &str, f: fn(&crate::evalkit::PeakLevelSummary) -> f64| Series {
                    name: name.into(),
                    points: r.sweep.levels.iter().map(|l| (l.level, f(l))).collect(),
                    line: true,
                };
                Figure {
                    title: format!("Peak recovery ({})", r.denoiser),
                    xlabel: "relative prominence".into(),
                    ylabel: "ratio".into(),
                    series: vec![
                        line("missing", |l| l.missing_ratio),
                        line("artifact", |l| l.artifact_ratio),
                    ],
                }
            }
            Report::Skin(r) => Figure {
                title: format!("NNLS concentrations ({}), MSE {:.4}", r.denoiser, r.all.mse),
                xlabel: "from pure spectra".into(),
                ylabel: "from denoised spectra".into(),
                series: r
                    .all
                    .components
                    .iter()
                    .enumerate()
                    .map(|(j, c)| Series {
                        name: c.name.clone(),
                        points: r
                            .all
                            .weights_pure
                            .iter()
                            .zip(&r.all.weights_denoised)
                            .map(|(p, d)| (p[j], d[j]))
                            .collect(),
                        line: false,
                    })
                    .collect(),
            },
        };
        fig.render()
    }

    /// Writes the CSV or SVG form, chosen by the extension of `path`.
    pub fn write_plot(&self, path: &Path) -> Result<()> {
        let body = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => self.plot_csv(),
            Some("svg") => self.plot_svg(),
            _ => {
                return Err(Error::Validation(format!(
                    "{}: plot output must end in .csv or .svg",
                    path.display()
                )))
            }
        };
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    line: bool,
}

struct Figure {
    title: String,
    xlabel: String,
    ylabel: String,
    series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    fn render(&self) -> String {
        let (w, h) = (640.0, 440.0);
        let (left, right, top, bottom) = (70.0, 150.0, 40.0, 60.0);
        let pw = w - left - right;
        let ph = h - top - bottom;
        let all = || self.series.iter().flat_map(|s| s.points.iter().copied());
        let (x0, x1) = bounds(all().map(|p| p.0));
        let (y0, y1) = bounds(all().map(|p| p.1));
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            left + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#,
                sx(fx),
                top + ph + 18.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.3}</text>"#,
                left - 6.0,
                sy(fy) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            h - 16.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            escape(&self.ylabel)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| (sx(x), sy(y)))
                .collect();
            if series.line {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    path.join(" ")
                );
            }
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
            }
            let ly = top + 14.0 + 18.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                left + pw + 12.0,
                ly - 9.0,
                left + pw + 28.0,
                ly,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
