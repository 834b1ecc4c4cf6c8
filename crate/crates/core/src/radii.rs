//! The growth-factor radius correspondence r_gamma, its closed-form lower
//! bound, and the maximal radius/epsilon sequences driven by ball maxima of
//! |det F'|.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Hard cap on the sequence length; a bounded Jacobian guarantees
/// termination long before this, so hitting the cap means the sampled
/// maxima are noise.
pub const MAX_SEQUENCE_LEN: usize = 64;

/// Truncation threshold for the infinite product defining r_gamma.
const PRODUCT_TAIL_TOL: f64 = 1e-14;

/// Relative tolerance used to monotonize sampled ball maxima before
/// bisection; larger raw drops are reported as errors.
const MONOTONE_TOL: f64 = 1e-6;

/// Supplier of M(r) = max |det F'| over the closed ball of radius r.
pub trait MaxOracle {
    fn det_max(&mut self, r: f64) -> Result<f64>;
}

impl<F: FnMut(f64) -> Result<f64>> MaxOracle for F {
    fn det_max(&mut self, r: f64) -> Result<f64> {
        self(r)
    }
}

/// r_gamma, defined by r_gamma * prod_{j>=1} (1 + gamma^{-j}) = 1.
///
/// The product is accumulated in log space and truncated once the remaining
/// tail sum gamma^{-N}/(gamma - 1) drops below 1e-14.
pub fn r_from_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(CoreError::GammaOutOfRange(gamma));
    }
    let mut log_sum = 0.0f64;
    let mut q = 1.0 / gamma;
    loop {
        log_sum += q.ln_1p();
        if log_sum > 700.0 {
            return Err(CoreError::InvalidParameter {
                name: "gamma",
                reason: format!("gamma = {gamma} is so close to 1 that r_gamma underflows"),
            });
        }
        if q / (gamma - 1.0) < PRODUCT_TAIL_TOL {
            break;
        }
        q /= gamma;
    }
    Ok((-log_sum).exp())
}

/// Invert the monotone map gamma -> r_gamma by bracketing and bisection.
pub fn gamma_from_r0(r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(CoreError::R0OutOfRange(r0));
    }
    let mut lo = 1.5f64;
    let mut hi = 2.0f64;
    while r_from_gamma(lo)? > r0 {
        hi = lo;
        lo = 1.0 + (lo - 1.0) / 2.0;
        if lo - 1.0 < 2e-3 {
            lo = 1.002;
            if r_from_gamma(lo)? > r0 {
                return Err(CoreError::InvalidParameter {
                    name: "r0",
                    reason: format!("r0 = {r0} corresponds to gamma below the supported range"),
                });
            }
            break;
        }
    }
    while r_from_gamma(hi)? < r0 {
        lo = hi;
        hi = 1.0 + 2.0 * (hi - 1.0);
        if hi > 1e12 {
            break;
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let rm = r_from_gamma(mid)?;
        if (rm - r0).abs() < 1e-13 {
            return Ok(mid);
        }
        if rm < r0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * mid {
            break;
        }
    }
    Ok(mid)
}

/// Closed-form lower bound
/// r_gamma >= exp(-1/(gamma-1) + 1/(2(gamma^2-1)) - 1/(3(gamma^3-1))).
pub fn r_gamma_lower_bound(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(CoreError::GammaOutOfRange(gamma));
    }
    let g2 = gamma * gamma;
    let g3 = g2 * gamma;
    Ok((-1.0 / (gamma - 1.0) + 0.5 / (g2 - 1.0) - 1.0 / (3.0 * (g3 - 1.0))).exp())
}

/// The maximal radius and epsilon sequences for one map and growth factor,
/// together with the sampled maxima that produced them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiiSequence {
    pub gamma: f64,
    pub r_gamma: f64,
    /// r_0 = r_gamma < r_1 < ... < r_l; the convention r_{l+1} = 1 is
    /// implicit and never stored.
    pub r: Vec<f64>,
    /// eps_j for j = 0..=l; eps_l = 1/r_l - 1.
    pub eps: Vec<f64>,
    pub l: usize,
    /// M(r_j) for each stored radius.
    pub det_max: Vec<f64>,
    /// M(1).
    pub det_max_at_one: f64,
}

impl RadiiSequence {
    /// Check the construction invariants: the multiplicative recurrence,
    /// the telescoping product r_0 prod (1+eps_j) = 1, the gamma^4 ratio
    /// conditions, and the guaranteed index with eps_k >= gamma^{-(k+1)}.
    pub fn validate(&self, m: usize) -> Result<()> {
        let fail = |reason: String| CoreError::InvalidParameter {
            name: "sequence",
            reason,
        };
        if self.r.len() != self.l + 1 || self.eps.len() != self.l + 1 {
            return Err(fail(format!(
                "lengths r = {}, eps = {} inconsistent with l = {}",
                self.r.len(),
                self.eps.len(),
                self.l
            )));
        }
        for j in 1..=self.l {
            let rebuilt = (1.0 + self.eps[j - 1]) * self.r[j - 1];
            if (rebuilt - self.r[j]).abs() > 1e-12 * self.r[j] {
                return Err(fail(format!("recurrence fails at j = {j}")));
            }
        }
        let tail = 1.0 / self.r[self.l] - 1.0;
        if (self.eps[self.l] - tail).abs() > 1e-12 * tail.max(1e-12) {
            return Err(fail("closing epsilon is not 1/r_l - 1".into()));
        }
        let mut product = self.r[0];
        for e in &self.eps {
            product *= 1.0 + e;
        }
        if (product - 1.0).abs() > 1e-9 {
            return Err(fail(format!("telescoping product is {product}, not 1")));
        }
        let exponent = 1.0 / (m as f64 + 1.0);
        let g4 = self.gamma.powi(4);
        for n in 0..self.l {
            let ratio = (self.det_max[n + 1] / self.det_max[n]).powf(exponent);
            if (ratio - g4).abs() > 1e-6 * g4 {
                return Err(fail(format!(
                    "ratio condition fails at n = {n}: {ratio} vs gamma^4 = {g4}"
                )));
            }
        }
        let last_ratio = (self.det_max_at_one / self.det_max[self.l]).powf(exponent);
        if last_ratio > g4 * (1.0 + 1e-6) {
            return Err(fail(format!(
                "terminal ratio {last_ratio} exceeds gamma^4 = {g4}"
            )));
        }
        let has_large_eps = self
            .eps
            .iter()
            .enumerate()
            .any(|(k, &e)| e >= self.gamma.powi(-(k as i32 + 1)));
        if !has_large_eps {
            return Err(fail("no index k with eps_k >= gamma^{-(k+1)}".into()));
        }
        Ok(())
    }
}

/// Monotonized view of a sampled oracle. Closed-ball maxima are monotone in
/// exact arithmetic; running maxima absorb sampling dust, and a raw drop
/// beyond the tolerance is reported as an insufficient budget.
struct MonotoneMax<'a> {
    oracle: &'a mut dyn MaxOracle,
    raw: BTreeMap<u64, f64>,
}

impl<'a> MonotoneMax<'a> {
    fn new(oracle: &'a mut dyn MaxOracle) -> Self {
        MonotoneMax {
            oracle,
            raw: BTreeMap::new(),
        }
    }

    fn eval(&mut self, r: f64) -> Result<f64> {
        let key = r.to_bits();
        let raw = match self.raw.get(&key) {
            Some(&v) => v,
            None => {
                let v = self.oracle.det_max(r)?;
                self.raw.insert(key, v);
                v
            }
        };
        let mut value = raw;
        for (&bits, &v) in &self.raw {
            let rr = f64::from_bits(bits);
            if rr <= r {
                if v > value {
                    if (v - raw) > MONOTONE_TOL * v {
                        return Err(CoreError::NonMonotoneMaxima {
                            r,
                            drop: (v - raw) / v,
                        });
                    }
                    value = v;
                }
            } else if raw > v && (raw - v) > MONOTONE_TOL * raw {
                return Err(CoreError::NonMonotoneMaxima {
                    r: rr,
                    drop: (raw - v) / raw,
                });
            }
        }
        Ok(value)
    }
}

/// Build the maximal sequences {r_j}, {eps_j} for the given growth factor.
///
/// Starting from r_0 = r_gamma, each step bisects for the smallest radius
/// where M(r)^{1/(m+1)} has grown by gamma^4; when no such radius below 1
/// exists the sequence closes with eps_l = 1/r_l - 1.
pub fn build_sequences(
    m: usize,
    gamma: f64,
    oracle: &mut dyn MaxOracle,
    ratio_tol: f64,
) -> Result<RadiiSequence> {
    if ratio_tol <= 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "ratio_tol",
            reason: "ratio tolerance must be positive".into(),
        });
    }
    let r_gamma = r_from_gamma(gamma)?;
    let mut mono = MonotoneMax::new(oracle);
    let growth = gamma.powi(4 * (m as i32 + 1));

    let m0 = mono.eval(r_gamma)?;
    let m_one = mono.eval(1.0)?;
    let mut r = vec![r_gamma];
    let mut det_max = vec![m0];
    let mut eps: Vec<f64> = Vec::new();

    loop {
        let target = det_max.last().unwrap() * growth;
        if m_one <= target * (1.0 + ratio_tol) {
            break;
        }
        if r.len() >= MAX_SEQUENCE_LEN {
            return Err(CoreError::SequenceTooLong(MAX_SEQUENCE_LEN));
        }
        let prev = *r.last().unwrap();
        let mut lo = prev;
        let mut hi = 1.0f64;
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if mono.eval(mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r_n = hi;
        let m_n = mono.eval(r_n)?;
        eps.push(r_n / prev - 1.0);
        r.push(r_n);
        det_max.push(m_n);
    }
    let last = *r.last().unwrap();
    eps.push(1.0 / last - 1.0);
    let l = r.len() - 1;
    Ok(RadiiSequence {
        gamma,
        r_gamma,
        r,
        eps,
        l,
        det_max,
        det_max_at_one: m_one,
    })
}
