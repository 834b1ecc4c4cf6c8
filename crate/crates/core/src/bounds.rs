//! Closed-form schlicht-radius bounds, the growth/margin constant
//! optimization that yields 0.22, and the empirical estimator for the
//! dimensional derivative-estimate constant a_m.

use serde::{Deserialize, Serialize};

use crate::caloric::{CaloricComponent, MultiIndex, SpaceTimePoint};
use crate::error::{CoreError, Result};
use crate::radii::{r_from_gamma, r_gamma_lower_bound};
use crate::sampler::max_on_ball;

fn check_inputs(m: usize, k: f64, gamma: f64, sigma: f64, a_m: f64) -> Result<()> {
    if m < 1 {
        return Err(CoreError::DimensionOutOfRange(m));
    }
    if !(gamma > 1.0) {
        return Err(CoreError::GammaOutOfRange(gamma));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "sigma",
            reason: format!("must lie in (0, 1), got {sigma}"),
        });
    }
    if !(k > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            reason: format!("must be positive, got {k}"),
        });
    }
    if !(a_m >= 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "a_m",
            reason: format!("must be at least 1, got {a_m}"),
        });
    }
    Ok(())
}

fn two_pow_m3(m: usize) -> f64 {
    (1u64 << (m + 3)) as f64
}

/// Interior-branch bound:
/// (1-sigma) sigma / (2^{m+3} (m+1) K^{2m+3} gamma^4)
///   * (r_gamma/a_m)^4 * M(r_gamma)^{1/(m+1)} / gamma^4.
pub fn bound_interior(
    m: usize,
    k: f64,
    gamma: f64,
    sigma: f64,
    r_gamma: f64,
    a_m: f64,
    m_rgamma: f64,
) -> Result<f64> {
    check_inputs(m, k, gamma, sigma, a_m)?;
    let md = m as f64;
    Ok(
        (1.0 - sigma) * sigma / (two_pow_m3(m) * (md + 1.0) * k.powi(2 * m as i32 + 3))
            / gamma.powi(4)
            * (r_gamma / a_m).powi(4)
            * m_rgamma.powf(1.0 / (md + 1.0))
            / gamma.powi(4),
    )
}

/// Origin-branch bound:
/// sigma (1-sigma) / ((m+1) 2^{m+3} K^{2m+3} M(r_gamma)^{1/(m+1)})
///   * (r_gamma/a_m)^4.
pub fn bound_origin(
    m: usize,
    k: f64,
    gamma: f64,
    sigma: f64,
    r_gamma: f64,
    a_m: f64,
    m_rgamma: f64,
) -> Result<f64> {
    check_inputs(m, k, gamma, sigma, a_m)?;
    let md = m as f64;
    Ok(
        sigma * (1.0 - sigma)
            / ((md + 1.0) * two_pow_m3(m) * k.powi(2 * m as i32 + 3))
            / m_rgamma.powf(1.0 / (md + 1.0))
            * (r_gamma / a_m).powi(4),
    )
}

/// The map-independent bound
/// sigma(1-sigma) / ((m+1) 2^{m+3} K^{2m+3}) * (r_gamma/(a_m gamma))^4,
/// evaluated both with the exact r_gamma and with its closed-form lower
/// bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorstCaseBound {
    pub with_r_gamma: f64,
    pub with_lower_bound: f64,
}

pub fn worst_case_bound(
    m: usize,
    k: f64,
    gamma: f64,
    sigma: f64,
    a_m: f64,
) -> Result<WorstCaseBound> {
    check_inputs(m, k, gamma, sigma, a_m)?;
    let md = m as f64;
    let prefix =
        sigma * (1.0 - sigma) / ((md + 1.0) * two_pow_m3(m) * k.powi(2 * m as i32 + 3));
    let exact = r_from_gamma(gamma)?;
    let lower = r_gamma_lower_bound(gamma)?;
    Ok(WorstCaseBound {
        with_r_gamma: prefix * (exact / (a_m * gamma)).powi(4),
        with_lower_bound: prefix * (lower / (a_m * gamma)).powi(4),
    })
}

/// Result of the constant optimization: the optimal margin is exactly 1/2
/// (vertex of sigma(1-sigma)), and the growth factor maximizes
/// r_gamma_lower_bound(gamma)/gamma, whose maximum is the 0.22 in the final
/// bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsOptimum {
    pub sigma_star: f64,
    pub gamma_star: f64,
    pub c_star: f64,
}

/// Grid search plus golden-section refinement over gamma in (1, 100].
pub fn optimize_constants(resolution: usize) -> Result<ConstantsOptimum> {
    if resolution < 100 {
        return Err(CoreError::InvalidParameter {
            name: "resolution",
            reason: format!("need at least 100 grid points per axis, got {resolution}"),
        });
    }
    let objective = |gamma: f64| -> f64 {
        match r_gamma_lower_bound(gamma) {
            Ok(v) => v / gamma,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let span = 99.0;
    let mut best_i = 1;
    let mut best = f64::NEG_INFINITY;
    for i in 1..=resolution {
        let gamma = 1.0 + span * (i as f64) / (resolution as f64);
        let v = objective(gamma);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let grid = |i: usize| 1.0 + span * (i as f64) / (resolution as f64);
    let mut a = grid(best_i.saturating_sub(1).max(1));
    let mut b = grid((best_i + 1).min(resolution));
    if a >= b {
        a = (1.0 + f64::EPSILON).max(a - 1e-6);
        b += 1e-6;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..120 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2);
        }
    }
    let gamma_star = if f1 >= f2 { x1 } else { x2 };
    let c_star = objective(gamma_star).max(best);
    if c_star < 0.22 {
        return Err(CoreError::InvalidParameter {
            name: "c_star",
            reason: format!("optimum {c_star} fell below 0.22; the lower bound is broken"),
        });
    }
    Ok(ConstantsOptimum {
        sigma_star: 0.5,
        gamma_star,
        c_star,
    })
}

/// The final constant with the denominator from the concluding derivation:
/// 0.22^4 / (2^{m+5} (m+1) a_m^4 K^{2m+3}).
pub fn theorem_bound(m: usize, k: f64, a_m: f64) -> Result<f64> {
    if m < 1 {
        return Err(CoreError::DimensionOutOfRange(m));
    }
    if !(k >= 1.0) || !(a_m >= 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "k/a_m",
            reason: "both must be at least 1".into(),
        });
    }
    let md = m as f64;
    Ok(0.22f64.powi(4)
        / ((1u64 << (m + 5)) as f64 * (md + 1.0) * a_m.powi(4) * k.powi(2 * m as i32 + 3)))
}

/// The same constant with the denominator as displayed in the theorem
/// statement (m instead of m+1); reported side by side since the two
/// disagree.
pub fn theorem_bound_stated(m: usize, k: f64, a_m: f64) -> Result<f64> {
    let derived = theorem_bound(m, k, a_m)?;
    Ok(derived * (m as f64 + 1.0) / m as f64)
}

/// Lower estimate of the smallest admissible a_m over a family of caloric
/// components: the max over members, radii r, and multiindices |k| in {1,2}
/// of r^{2|k|} sup_{B_{r^2/4}} |d^k u| / sup_{B_r} |u|, floored at 1.
pub fn estimate_am(
    m: usize,
    family: &[CaloricComponent],
    radii: &[f64],
    budget: usize,
    seed: u64,
) -> Result<f64> {
    if family.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "family",
            reason: "need at least one component".into(),
        });
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(CoreError::InvalidParameter {
            name: "radii",
            reason: "radii must be a nonempty subset of (0, 1)".into(),
        });
    }
    let dim = m + 1;
    let mut indices: Vec<MultiIndex> = (0..dim).map(|axis| MultiIndex::unit(m, axis)).collect();
    for i in 0..dim {
        for j in i..dim {
            let mut orders = vec![0u32; dim];
            orders[i] += 1;
            orders[j] += 1;
            indices.push(MultiIndex::new(orders));
        }
    }
    let center = vec![0.0; dim];
    let mut best = 0.0f64;
    for (idx, u) in family.iter().enumerate() {
        for &r in radii {
            let sup_u = max_on_ball(&center, r, budget, seed, |p| {
                u.evaluate(&SpaceTimePoint::from_coords(p)).abs()
            })
            .value;
            if sup_u == 0.0 {
                return Err(CoreError::ZeroSupNorm { index: idx });
            }
            for k in &indices {
                let sup_d = max_on_ball(&center, r * r / 4.0, budget, seed, |p| {
                    u.derivative(k, &SpaceTimePoint::from_coords(p))
                        .expect("orders 1 and 2 are supported")
                        .abs()
                })
                .value;
                let ratio = r.powi(2 * k.order() as i32) * sup_d / sup_u;
                if ratio > best {
                    best = ratio;
                }
            }
        }
    }
    Ok(best.max(1.0))
}

/// All closed-form bounds for one configuration, with the branch selection
/// criterion M(r_gamma)^{1/(m+1)} >= gamma^4.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlochBoundReport {
    pub m: usize,
    pub k: f64,
    pub a_m: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub r_gamma: f64,
    pub m_rgamma: f64,
    pub bound_interior: f64,
    pub bound_origin: f64,
    pub bound_worst_case: f64,
    pub bound_worst_case_lower: f64,
    pub theorem_bound: f64,
    pub theorem_bound_stated: f64,
    pub better_branch: CertBranchChoice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertBranchChoice {
    Interior,
    Origin,
}

impl BlochBoundReport {
    pub fn new(
        m: usize,
        k: f64,
        a_m: f64,
        gamma: f64,
        sigma: f64,
        r_gamma: f64,
        m_rgamma: f64,
    ) -> Result<Self> {
        let bi = bound_interior(m, k, gamma, sigma, r_gamma, a_m, m_rgamma)?;
        let bo = bound_origin(m, k, gamma, sigma, r_gamma, a_m, m_rgamma)?;
        let wc = worst_case_bound(m, k, gamma, sigma, a_m)?;
        let better = if m_rgamma.powf(1.0 / (m as f64 + 1.0)) >= gamma.powi(4) {
            CertBranchChoice::Interior
        } else {
            CertBranchChoice::Origin
        };
        Ok(BlochBoundReport {
            m,
            k,
            a_m,
            gamma,
            sigma,
            r_gamma,
            m_rgamma,
            bound_interior: bi,
            bound_origin: bo,
            bound_worst_case: wc.with_r_gamma,
            bound_worst_case_lower: wc.with_lower_bound,
            theorem_bound: theorem_bound(m, k.max(1.0), a_m)?,
            theorem_bound_stated: theorem_bound_stated(m, k.max(1.0), a_m)?,
            better_branch: better,
        })
    }
}
