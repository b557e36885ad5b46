//! Mode-shape comparison: magnitude thresholding, constant-angle alignment
//! minimizing the wrapped-RMS angle difference, and ranking of the residual
//! differences.
//!
//! The alignment is anchored to the lexicographically smallest channel in
//! the comparison set, so the residuals depend only on angle *differences*
//! between the two shapes. Rotating either shape by a constant therefore
//! leaves diffs, rms, ranking and verdict untouched (bit-identical when the
//! rotation is exact in floating point), which is the gauge property the
//! whole method rests on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ComplexPhasor;

/// Wraps an angle in degrees to (-180, 180], with 180 preserved as +180.
pub fn wrap_deg(x: f64) -> f64 {
    let mut y = x % 360.0;
    if y > 180.0 {
        y -= 360.0;
    } else if y <= -180.0 {
        y += 360.0;
    }
    y
}

/// Per-channel complex phasors (magnitude + angle) at one oscillation
/// frequency, with angles relative to a designated reference channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeShape {
    pub frequency_hz: f64,
    pub reference: String,
    pub entries: BTreeMap<String, ComplexPhasor>,
}

impl ModeShape {
    pub fn empty(frequency_hz: f64, reference: impl Into<String>) -> Self {
        Self {
            frequency_hz,
            reference: reference.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reference = self.entries.get(&self.reference).ok_or_else(|| {
            Error::InvalidInput(format!(
                "reference channel `{}` missing from shape entries",
                self.reference
            ))
        })?;
        if reference.angle_deg.abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "reference channel `{}` must have angle 0, got {}",
                self.reference, reference.angle_deg
            )));
        }
        for (id, phasor) in &self.entries {
            if !phasor.magnitude.is_finite() || phasor.magnitude < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "channel `{id}`: magnitude must be finite and >= 0, got {}",
                    phasor.magnitude
                )));
            }
            if !(phasor.angle_deg > -180.0 && phasor.angle_deg <= 180.0) {
                return Err(Error::InvalidInput(format!(
                    "channel `{id}`: angle {} not wrapped to (-180, 180]",
                    phasor.angle_deg
                )));
            }
        }
        Ok(())
    }

    /// Magnitudes divided by the largest magnitude.
    pub fn normalized_magnitudes(&self) -> BTreeMap<String, f64> {
        let max = self
            .entries
            .values()
            .map(|p| p.magnitude)
            .fold(0.0f64, f64::max);
        self.entries
            .iter()
            .map(|(id, p)| {
                let m = if max > 0.0 { p.magnitude / max } else { 0.0 };
                (id.clone(), m)
            })
            .collect()
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }
}

/// Result of aligning a forced-oscillation shape onto a natural-oscillation
/// shape by a constant angle shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    /// Constant shift applied to the forced shape's angles, degrees.
    pub delta_deg: f64,
    /// Wrapped residual `natural - (forced + delta)` per channel, degrees.
    pub diffs_deg: BTreeMap<String, f64>,
    /// RMS of the residuals over `channels_used` (weighted RMS when weights
    /// were supplied).
    pub rms_deg: f64,
    pub channels_used: BTreeSet<String>,
}

/// Outcome of the dominance test on the ranked angle differences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Verdict {
    /// One channel's residual dominates the rest: the source location.
    SingleSource { channel: String },
    /// Several channels carry comparable residuals; triangulation applies.
    Ambiguous { channels: Vec<String> },
    /// No residual clears the minimum-angle floor.
    NoSource,
}

/// Channels whose magnitude is at least `threshold_fraction` times the
/// largest magnitude in the shape. Never empty: the max-magnitude channel
/// always qualifies.
pub fn magnitude_filter(shape: &ModeShape, threshold_fraction: f64) -> Result<BTreeSet<String>> {
    if shape.entries.is_empty() {
        return Err(Error::InvalidInput("empty mode shape".into()));
    }
    if !(0.0..=1.0).contains(&threshold_fraction) {
        return Err(Error::InvalidInput(format!(
            "threshold_fraction must lie in [0, 1], got {threshold_fraction}"
        )));
    }
    let max = shape
        .entries
        .values()
        .map(|p| p.magnitude)
        .fold(0.0f64, f64::max);
    let cut = threshold_fraction * max;
    Ok(shape
        .entries
        .iter()
        .filter(|(_, p)| p.magnitude >= cut)
        .map(|(id, _)| id.clone())
        .collect())
}

/// Weighted RMS of the wrapped residuals `e_i - mu`.
fn objective(e: &[f64], w: &[f64], mu: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ei, wi) in e.iter().zip(w.iter()) {
        let r = wrap_deg(ei - mu);
        num += wi * r * r;
        den += wi;
    }
    (num / den).sqrt()
}

/// Golden-section minimization of the wrapped-RMS objective on `[lo, hi]`.
/// Returns the best point actually evaluated.
fn golden_section(e: &[f64], w: &[f64], mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (lo, objective(e, w, lo));
    let mut consider = |mu: f64, val: f64, best: &mut (f64, f64)| {
        if val < best.1 {
            *best = (mu, val);
        }
    };
    consider(hi, objective(e, w, hi), &mut best);

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = objective(e, w, x1);
    let mut f2 = objective(e, w, x2);
    consider(x1, f1, &mut best);
    consider(x2, f2, &mut best);
    for _ in 0..120 {
        if hi - lo <= 1e-9 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(e, w, x1);
            consider(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(e, w, x2);
            consider(x2, f2, &mut best);
        }
    }
    best
}

/// Aligns `forced` onto `natural` over `channels`, minimizing the wrapped
/// RMS of the angle differences with equal channel weights.
pub fn align_shapes(
    forced: &ModeShape,
    natural: &ModeShape,
    channels: &BTreeSet<String>,
) -> Result<AlignmentResult> {
    align_shapes_with(forced, natural, channels, None)
}

/// As [`align_shapes`], but with optional per-channel weights (the pipeline
/// passes forced-shape magnitudes when magnitude weighting is configured).
/// Missing weights default to 1.
pub fn align_shapes_with(
    forced: &ModeShape,
    natural: &ModeShape,
    channels: &BTreeSet<String>,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<AlignmentResult> {
    if channels.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "alignment needs at least 2 channels, got {}",
            channels.len()
        )));
    }
    for id in channels {
        if !forced.entries.contains_key(id) {
            return Err(Error::InvalidInput(format!(
                "channel `{id}` missing from forced shape"
            )));
        }
        if !natural.entries.contains_key(id) {
            return Err(Error::InvalidInput(format!(
                "channel `{id}` missing from natural shape"
            )));
        }
    }

    // Raw per-channel angle differences, then re-anchored to the first
    // channel so the optimization sees gauge-free quantities only.
    let ids: Vec<&String> = channels.iter().collect();
    let d: Vec<f64> = ids
        .iter()
        .map(|id| wrap_deg(natural.entries[*id].angle_deg - forced.entries[*id].angle_deg))
        .collect();
    let d_anchor = d[0];
    let e: Vec<f64> = d.iter().map(|di| wrap_deg(di - d_anchor)).collect();
    let w: Vec<f64> = ids
        .iter()
        .map(|id| match weights {
            Some(map) => map.get(*id).copied().unwrap_or(1.0),
            None => 1.0,
        })
        .collect();
    if w.iter().any(|wi| !wi.is_finite() || *wi < 0.0) {
        return Err(Error::InvalidInput("weights must be finite and >= 0".into()));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidInput("all alignment weights are zero".into()));
    }

    // Closed-form first guess: circular mean of the anchored differences.
    let (mut sy, mut sx) = (0.0, 0.0);
    for (ei, wi) in e.iter().zip(w.iter()) {
        sy += wi * ei.to_radians().sin();
        sx += wi * ei.to_radians().cos();
    }
    let mu0 = sy.atan2(sx).to_degrees();

    let mut best = (mu0, objective(&e, &w, mu0));
    // Coarse 1-degree sweep guards against the circular mean landing in the
    // wrong basin of the (piecewise-quadratic) wrapped objective.
    let mut coarse = best;
    for k in -179..=180i32 {
        let mu = k as f64;
        let val = objective(&e, &w, mu);
        if val < coarse.1 {
            coarse = (mu, val);
        }
    }
    if coarse.1 < best.1 {
        best = coarse;
    }

    let local = golden_section(&e, &w, mu0 - 30.0, mu0 + 30.0);
    if local.1 < best.1 {
        best = local;
    }
    if wrap_deg(coarse.0 - local.0).abs() > 1.0 {
        let refined = golden_section(&e, &w, coarse.0 - 1.5, coarse.0 + 1.5);
        if refined.1 < best.1 {
            best = refined;
        }
    }

    // Exact vertex of the quadratic piece containing the current best: the
    // weighted mean of residuals unwrapped around it.
    let wsum: f64 = w.iter().sum();
    let vertex = ids
        .iter()
        .enumerate()
        .map(|(i, _)| w[i] * (best.0 + wrap_deg(e[i] - best.0)))
        .sum::<f64>()
        / wsum;
    let vval = objective(&e, &w, vertex);
    if vval < best.1 {
        best = (vertex, vval);
    }

    let mu = best.0;
    let mut diffs_deg = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        diffs_deg.insert((*id).clone(), wrap_deg(e[i] - mu));
    }
    let mut num = 0.0;
    for (i, _) in ids.iter().enumerate() {
        let r = diffs_deg[ids[i]];
        num += w[i] * r * r;
    }
    Ok(AlignmentResult {
        delta_deg: wrap_deg(d_anchor + mu),
        diffs_deg,
        rms_deg: (num / wsum).sqrt(),
        channels_used: channels.clone(),
    })
}

/// Channels ordered by descending absolute angle difference. Ties break by
/// channel id so the ordering is deterministic.
pub fn rank_differences(result: &AlignmentResult) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = result
        .diffs_deg
        .iter()
        .map(|(id, d)| (id.clone(), d.abs()))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Applies the dominance test: the top-ranked channel is declared the
/// source when its residual clears `min_angle_deg` and exceeds the runner-up
/// by the factor `ratio_k`; comparable residuals yield an ambiguous verdict
/// instead.
pub fn dominance_verdict(ranked: &[(String, f64)], ratio_k: f64, min_angle_deg: f64) -> Verdict {
    let Some((top_id, top)) = ranked.first() else {
        return Verdict::NoSource;
    };
    if *top < min_angle_deg {
        return Verdict::NoSource;
    }
    let second = ranked.get(1).map(|(_, d)| *d).unwrap_or(0.0);
    if *top >= ratio_k * second {
        return Verdict::SingleSource {
            channel: top_id.clone(),
        };
    }
    let cut = top / ratio_k;
    Verdict::Ambiguous {
        channels: ranked
            .iter()
            .filter(|(_, d)| *d >= cut)
            .map(|(id, _)| id.clone())
            .collect(),
    }
}
