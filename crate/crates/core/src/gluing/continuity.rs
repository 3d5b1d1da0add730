//! Pointwise continuity versus operator-norm discontinuity of `a ↦ π_a`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cutoff::CutoffBeta;
use super::ops::pi_projection;
use super::param::GluingParameter;
use crate::error::{Error, Result};
use crate::scale_space::{distance_at_level, norm_at_level, CylinderGrid, ScaleFunction, WeightSequence};

/// Width of the Gaussian envelope used by the oscillatory probes.
pub const PROBE_ENVELOPE_WIDTH: f64 = 1.0;

/// `a_k = (r0 + dr·2^{−k}, θ0 + dθ·2^{−k})` for `k = 1..=count`.
pub fn dyadic_sequence(a0: &GluingParameter, dr: f64, dtheta: f64, count: usize) -> Result<Vec<GluingParameter>> {
    (1..=count)
        .map(|k| {
            let f = 0.5f64.powi(k as i32);
            GluingParameter::exponential(a0.r + dr * f, a0.theta + dtheta * f)
        })
        .collect()
}

/// Probes `e^{−(s − s_c)²/2w²}·{cos, sin}(2πqt)` on the plus half for every
/// non-Nyquist frequency `q ≥ 1`. The centre `s_c = R/2 − δ_0 w²` puts the
/// peak of the level-0 weighted mass on the middle of the neck of `a0`.
pub fn oscillatory_probes(grid: CylinderGrid, weights: &WeightSequence, a0: &GluingParameter) -> Vec<ScaleFunction> {
    let delta0 = weights.deltas()[0];
    let centre = 0.5 * a0.neck - delta0 * PROBE_ENVELOPE_WIDTH * PROBE_ENVELOPE_WIDTH;
    let mut out = Vec::new();
    for q in 1..grid.n_t / 2 {
        for phase in [0.0, 0.25] {
            let u = ScaleFunction::from_decaying(
                grid,
                weights.clone(),
                vec![0.0],
                move |_, s, t| {
                    let x = (s - centre) / PROBE_ENVELOPE_WIDTH;
                    (-0.5 * x * x).exp() * (2.0 * PI * (q as f64 * t - phase)).cos()
                },
                |_, _, _| 0.0,
            );
            out.push(u);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiContinuityRow {
    pub k: usize,
    pub r: f64,
    pub theta: f64,
    #[serde(rename = "R")]
    pub neck: f64,
    /// `sup_u ‖π_{a_k} u − π_{a0} u‖_0` over the normalized smooth probes.
    pub smooth_discrepancy: f64,
    /// `max_u ‖(π_{a_k} − π_{a0}) u‖_0 / ‖u‖_0` over the oscillatory probes.
    pub operator_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiContinuityReport {
    pub r0: f64,
    pub theta0: f64,
    #[serde(rename = "R0")]
    pub neck0: f64,
    pub rows: Vec<PiContinuityRow>,
    pub final_smooth_discrepancy: f64,
    /// Smallest operator gap over the sequence.
    pub gap_floor: f64,
    /// `gap_floor ≥ 10 · final_smooth_discrepancy`.
    pub ordering_holds: bool,
}

impl PiContinuityReport {
    /// Sweep table with columns `r,theta,R,metric,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "theta", "R", "metric", "value"])?;
        for row in &self.rows {
            for (metric, value) in [("smooth_discrepancy", row.smooth_discrepancy), ("operator_gap", row.operator_gap)] {
                w.write_record([
                    row.r.to_string(),
                    row.theta.to_string(),
                    row.neck.to_string(),
                    metric.to_string(),
                    format!("{value:e}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn normalized(probes: &[ScaleFunction]) -> Result<Vec<ScaleFunction>> {
    probes
        .iter()
        .map(|u| {
            let n = norm_at_level(u, 0)?.value;
            if n == 0.0 {
                return Err(Error::DomainError("zero probe cannot be normalized".into()));
            }
            Ok(u.scaled(1.0 / n))
        })
        .collect()
}

/// Measure `‖π_{a_k} u − π_{a0} u‖_0` on smooth probes and the operator-gap
/// lower bound on oscillatory probes, for each `a_k` in `sequence`.
pub fn pi_continuity_experiment(
    a0: &GluingParameter,
    sequence: &[GluingParameter],
    smooth: &[ScaleFunction],
    oscillatory: &[ScaleFunction],
    beta: &CutoffBeta,
) -> Result<PiContinuityReport> {
    let smooth = normalized(smooth)?;
    let oscillatory = normalized(oscillatory)?;
    let base_smooth: Vec<ScaleFunction> = smooth.iter().map(|u| pi_projection(a0, u, beta)).collect::<Result<_>>()?;
    let base_osc: Vec<ScaleFunction> = oscillatory
        .par_iter()
        .map(|u| pi_projection(a0, u, beta))
        .collect::<Result<_>>()?;

    let sup = |probes: &[ScaleFunction], base: &[ScaleFunction], a: &GluingParameter| -> Result<f64> {
        let values: Vec<f64> = probes
            .par_iter()
            .zip(base.par_iter())
            .map(|(u, p0)| distance_at_level(&pi_projection(a, u, beta)?, p0, 0))
            .collect::<Result<_>>()?;
        Ok(values.into_iter().fold(0.0, f64::max))
    };

    let mut rows = Vec::with_capacity(sequence.len());
    for (idx, a) in sequence.iter().enumerate() {
        rows.push(PiContinuityRow {
            k: idx + 1,
            r: a.r,
            theta: a.theta,
            neck: a.neck,
            smooth_discrepancy: sup(&smooth, &base_smooth, a)?,
            operator_gap: sup(&oscillatory, &base_osc, a)?,
        });
    }
    let final_smooth = rows.last().map(|r| r.smooth_discrepancy).unwrap_or(0.0);
    let gap_floor = rows.iter().map(|r| r.operator_gap).fold(f64::INFINITY, f64::min);
    let gap_floor = if gap_floor.is_finite() { gap_floor } else { 0.0 };
    Ok(PiContinuityReport {
        r0: a0.r,
        theta0: a0.theta,
        neck0: a0.neck,
        ordering_holds: !rows.is_empty() && gap_floor >= 10.0 * final_smooth,
        final_smooth_discrepancy: final_smooth,
        gap_floor,
        rows,
    })
}
