//! Ball maxima of |det F'|, the empirical Takahashi constant, and the
//! singular-value inequalities that hold at determinant argmax points.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caloric::{SmoothMap, SpaceTimePoint};
use crate::error::{CoreError, Result};
use crate::linalg::spectral_summary;
use crate::radii::MaxOracle;
use crate::sampler::{golden_polish, BallSampler};

/// Threshold below which a sampled determinant maximum is useless.
pub const DEGENERATE_DET: f64 = 1e-14;

/// Sampled maxima over one closed centered ball: M(r) = max |det F'|, a
/// point attaining it, and the Frobenius-norm maximum over the same ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallMaxRecord {
    pub r: f64,
    /// M(r), the sampled maximum of |det F'|.
    pub det_max: f64,
    /// A point attaining `det_max`; smallest sample index wins ties.
    pub beta: SpaceTimePoint,
    /// Sampled maximum of the Frobenius norm of F' over the same ball.
    pub max_frob: f64,
    pub sample_count: usize,
}

#[derive(Clone)]
struct TwoScores {
    det: f64,
    det_index: u64,
    det_point: Vec<f64>,
    frob: f64,
    frob_index: u64,
    frob_point: Vec<f64>,
}

fn merge(a: TwoScores, b: TwoScores) -> TwoScores {
    let (det, det_index, det_point) =
        if b.det > a.det || (b.det == a.det && b.det_index < a.det_index) {
            (b.det, b.det_index, b.det_point)
        } else {
            (a.det, a.det_index, a.det_point)
        };
    let (frob, frob_index, frob_point) =
        if b.frob > a.frob || (b.frob == a.frob && b.frob_index < a.frob_index) {
            (b.frob, b.frob_index, b.frob_point)
        } else {
            (a.frob, a.frob_index, a.frob_point)
        };
    TwoScores {
        det,
        det_index,
        det_point,
        frob,
        frob_index,
        frob_point,
    }
}

/// Sampled maximum of |det F'| and of ||F'|| over the closed ball of radius
/// `r`, deterministic in (budget, seed) and in the worker thread count.
///
/// Low-discrepancy samples (the center is always included) are refined by a
/// golden-section coordinate polish around the best sample of each
/// objective.
pub fn ball_max<M: SmoothMap>(map: &M, r: f64, budget: usize, seed: u64) -> Result<BallMaxRecord> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "r",
            reason: format!("ball radius must lie in (0, 1], got {r}"),
        });
    }
    if budget < 1 {
        return Err(CoreError::InvalidParameter {
            name: "budget",
            reason: "sample budget must be at least 1".into(),
        });
    }
    let dim = map.dim() + 1;
    let center = vec![0.0; dim];
    let sampler = BallSampler::new(center.clone(), r, seed);
    let score = |i: u64| {
        let p = sampler.point(i);
        let z = SpaceTimePoint::from_coords(&p);
        let jac = map.jacobian(&z);
        let mut det = jac.det().abs();
        let mut frob = jac.frobenius();
        if det.is_nan() {
            det = f64::NEG_INFINITY;
        }
        if frob.is_nan() {
            frob = f64::NEG_INFINITY;
        }
        TwoScores {
            det,
            det_index: i,
            det_point: p.clone(),
            frob,
            frob_index: i,
            frob_point: p,
        }
    };
    let init = score(0);
    let best = (1..budget as u64)
        .into_par_iter()
        .map(score)
        .reduce(|| init.clone(), merge);

    let det_objective = |p: &[f64]| {
        map.jacobian(&SpaceTimePoint::from_coords(p)).det().abs()
    };
    let frob_objective = |p: &[f64]| map.jacobian(&SpaceTimePoint::from_coords(p)).frobenius();
    let (beta, det_max, det_evals) =
        golden_polish(&det_objective, best.det_point, best.det, &center, r);
    let (_, max_frob, frob_evals) =
        golden_polish(&frob_objective, best.frob_point, best.frob, &center, r);

    Ok(BallMaxRecord {
        r,
        det_max,
        beta: SpaceTimePoint::from_coords(&beta),
        max_frob,
        sample_count: budget + det_evals + frob_evals,
    })
}

/// One row of the Takahashi-ratio table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiusRatio {
    pub r: f64,
    pub max_frob: f64,
    pub det_max: f64,
    /// max ||F'|| over the ball divided by M(r)^{1/(m+1)}.
    pub ratio: f64,
}

/// Empirical Takahashi constant: the largest ratio over the radii grid.
/// Sampling can only underestimate the true constant, so callers inflate it
/// by a safety factor before certifying.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KEstimate {
    pub k: f64,
    pub per_radius: Vec<RadiusRatio>,
}

pub fn estimate_k<M: SmoothMap>(
    map: &M,
    radii: &[f64],
    budget: usize,
    seed: u64,
) -> Result<KEstimate> {
    if radii.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "radii",
            reason: "radii grid must be nonempty".into(),
        });
    }
    let exponent = 1.0 / (map.dim() as f64 + 1.0);
    let mut per_radius = Vec::with_capacity(radii.len());
    let mut k = 0.0f64;
    for &r in radii {
        let rec = ball_max(map, r, budget, seed)?;
        if rec.det_max < DEGENERATE_DET {
            return Err(CoreError::DegenerateDeterminant { r });
        }
        let ratio = rec.max_frob / rec.det_max.powf(exponent);
        if ratio > k {
            k = ratio;
        }
        per_radius.push(RadiusRatio {
            r,
            max_frob: rec.max_frob,
            det_max: rec.det_max,
            ratio,
        });
    }
    Ok(KEstimate { k, per_radius })
}

/// Slacks of the three singular-value inequalities at a determinant argmax;
/// nonnegative slack means the inequality holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WuReport {
    pub k: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub det: f64,
    /// K^m lambda - Lambda.
    pub slack_pow_m: f64,
    /// K^{m+1} lambda - Lambda.
    pub slack_pow_m_plus_one: f64,
    /// lambda - K^{-(m+1)} |det|^{1/(m+1)}.
    pub slack_det_root: f64,
    pub all_hold: bool,
}

/// Check, at the recorded argmax point, the eigenvalue inequalities that
/// follow from the Takahashi condition. A negative slack is reported rather
/// than erroring; it signals that `k` underestimates the map's constant.
pub fn check_wu_inequalities<M: SmoothMap>(map: &M, record: &BallMaxRecord, k: f64) -> WuReport {
    let m = map.dim() as i32;
    let s = spectral_summary(&map.jacobian(&record.beta));
    let det_root = s.det.abs().powf(1.0 / (m as f64 + 1.0));
    let slack_pow_m = k.powi(m) * s.lambda_min - s.lambda_max;
    let slack_pow_m_plus_one = k.powi(m + 1) * s.lambda_min - s.lambda_max;
    let slack_det_root = s.lambda_min - det_root / k.powi(m + 1);
    WuReport {
        k,
        lambda_min: s.lambda_min,
        lambda_max: s.lambda_max,
        det: s.det,
        slack_pow_m,
        slack_pow_m_plus_one,
        slack_det_root,
        all_hold: slack_pow_m >= 0.0 && slack_pow_m_plus_one >= 0.0 && slack_det_root >= 0.0,
    }
}

/// `ball_max` evaluated on demand with a per-radius cache; the oracle fed to
/// the radius-sequence construction.
pub struct SampledMaxOracle<'a, M: SmoothMap> {
    map: &'a M,
    budget: usize,
    seed: u64,
    cache: BTreeMap<u64, BallMaxRecord>,
}

impl<'a, M: SmoothMap> SampledMaxOracle<'a, M> {
    pub fn new(map: &'a M, budget: usize, seed: u64) -> Self {
        SampledMaxOracle {
            map,
            budget,
            seed,
            cache: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, r: f64) -> Result<&BallMaxRecord> {
        let key = r.to_bits();
        if !self.cache.contains_key(&key) {
            let rec = ball_max(self.map, r, self.budget, self.seed)?;
            self.cache.insert(key, rec);
        }
        Ok(&self.cache[&key])
    }
}

impl<M: SmoothMap> MaxOracle for SampledMaxOracle<'_, M> {
    fn det_max(&mut self, r: f64) -> Result<f64> {
        Ok(self.record(r)?.det_max)
    }
}
