use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::SweepResult;
use crate::{Error, Result};

/// One measured point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub pe: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
}

/// Measured excitation probabilities to compare a model curve against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverlayDataset {
    rows: Vec<OverlayRow>,
}

impl OverlayDataset {
    pub fn new(rows: Vec<OverlayRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("overlay", "no data points"));
        }
        for (i, r) in rows.iter().enumerate() {
            if !r.t.is_finite() {
                return Err(Error::param(format!("overlay[{i}].T"), "must be finite"));
            }
            if !(0.0..=1.0).contains(&r.pe) {
                return Err(Error::param(format!("overlay[{i}].pe"), format!("must lie in [0, 1], got {}", r.pe)));
            }
            if let Some(s) = r.sigma {
                if !(s > 0.0) {
                    return Err(Error::param(format!("overlay[{i}].sigma"), format!("must be > 0, got {s}")));
                }
            }
        }
        Ok(OverlayDataset { rows })
    }

    pub fn rows(&self) -> &[OverlayRow] {
        &self.rows
    }

    /// CSV with a `T,pe[,sigma]` header; `#` lines are skipped.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<OverlayRow>, _>>()?;
        Self::new(rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub phase_offset: f64,
    /// `pe_measured − model(T + offset)` per point.
    pub residuals: Vec<f64>,
    pub rms: f64,
    /// `Σ (residual/σ)²`, present when every point carries a σ.
    pub chi_square: Option<f64>,
}

fn interpolate(curve: &[(f64, f64)], t: f64) -> Result<f64> {
    let (min, max) = (curve[0].0, curve[curve.len() - 1].0);
    if !(t >= min && t <= max) {
        return Err(Error::OverlayRange { t, min, max });
    }
    let k = curve.partition_point(|&(x, _)| x <= t);
    if k == curve.len() {
        return Ok(curve[k - 1].1);
    }
    let ((t0, v0), (t1, v1)) = (curve[k - 1], curve[k]);
    Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}

fn residuals_on_curve(curve: &[(f64, f64)], overlay: &OverlayDataset, phase_offset: f64) -> Result<ResidualReport> {
    if curve.is_empty() {
        return Err(Error::param("sweep", "model curve is empty"));
    }
    let residuals = overlay
        .rows
        .iter()
        .map(|r| Ok(r.pe - interpolate(curve, r.t + phase_offset)?))
        .collect::<Result<Vec<f64>>>()?;
    let rms = (residuals.iter().map(|x| x * x).sum::<f64>() / residuals.len() as f64).sqrt();
    let chi_square = overlay
        .rows
        .iter()
        .zip(&residuals)
        .map(|(r, res)| r.sigma.map(|s| (res / s).powi(2)))
        .sum::<Option<f64>>();
    Ok(ResidualReport { phase_offset, residuals, rms, chi_square })
}

/// Residuals against a sweep holding a single curve.
pub fn residuals(sweep: &SweepResult, overlay: &OverlayDataset, phase_offset: f64) -> Result<ResidualReport> {
    match sweep.tags().as_slice() {
        [tag] => residuals_for_tag(sweep, tag, overlay, phase_offset),
        tags => Err(Error::param("sweep", format!("expected exactly one curve, found {}", tags.len()))),
    }
}

pub fn residuals_for_tag(sweep: &SweepResult, tag: &str, overlay: &OverlayDataset, phase_offset: f64) -> Result<ResidualReport> {
    residuals_on_curve(&sweep.curve(tag), overlay, phase_offset)
}

/// Offset in `[lo, hi]` minimising the RMS residual: a scan over `steps`
/// evenly spaced offsets followed by golden-section refinement around the
/// best scan point. Offsets that push an overlay point off the model range
/// are skipped.
pub fn best_offset(sweep: &SweepResult, tag: &str, overlay: &OverlayDataset, lo: f64, hi: f64, steps: usize) -> Result<ResidualReport> {
    if !(hi >= lo) || steps < 2 {
        return Err(Error::param("offset bracket", format!("need lo <= hi and at least 2 steps, got [{lo}, {hi}] with {steps}")));
    }
    let curve = sweep.curve(tag);
    let rms = |x: f64| residuals_on_curve(&curve, overlay, x).map(|r| r.rms).unwrap_or(f64::INFINITY);
    let h = (hi - lo) / (steps - 1) as f64;
    let (best_i, best_rms) = (0..steps)
        .map(|i| (i, rms(lo + h * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two steps");
    if !best_rms.is_finite() {
        return Err(Error::param("offset bracket", "every offset moves the overlay outside the model range"));
    }
    let centre = lo + h * best_i as f64;
    let (mut a, mut b) = ((centre - h).max(lo), (centre + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if rms(c) <= rms(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let refined = 0.5 * (a + b);
    let pick = if rms(refined) <= best_rms { refined } else { centre };
    residuals_on_curve(&curve, overlay, pick)
}
