//! Contraction radii, the frozen-Jacobian (chord) solver for w = F(z), and
//! empirical verification of contraction and schlichtness.
//!
//! The fixed-point map behind everything here is
//! g_w(z) = z + F'(beta)^{-1} (w - F(z)), which is algebraically identical
//! to the Taylor-remainder fixed-point form but needs no quadrature: the
//! remainder is absorbed by evaluating F exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caloric::{SmoothMap, SpaceTimePoint};
use crate::error::{CoreError, Result};
use crate::linalg::{invert, Matrix};
use crate::sampler::BallSampler;

/// Which branch of the argument issued a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateBranch {
    /// Ball around an interior determinant argmax beta_n.
    Interior,
    /// Ball around the origin.
    Origin,
}

/// A certified schlicht disk: around `beta` the chord map is a contraction
/// on the closed eta-ball, so F is a bijection onto the disk of radius
/// rho = sigma * eta * lambda_F(beta) about F(beta).
///
/// The derivation inputs are stored so that a verifier can recompute the
/// admissible eta; a certificate claiming more than the formulas grant is
/// rejected by [`SchlichtCertificate::validate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchlichtCertificate {
    pub branch: CertificateBranch,
    /// Sequence index for the interior branch; 0 for the origin branch.
    pub n: usize,
    pub beta: SpaceTimePoint,
    pub sigma: f64,
    pub eta: f64,
    pub lambda_at_beta: f64,
    /// sigma * eta * lambda_at_beta, the certified disk radius.
    pub rho: f64,
    /// F(beta), the center of the certified disk.
    pub center_image: Vec<f64>,
    /// eps_n * r_n for the interior branch, r_gamma for the origin branch;
    /// the radius entering the interior derivative estimates.
    pub estimate_radius: f64,
    pub k: f64,
    pub gamma: f64,
    pub a_m: f64,
    /// M(r_gamma) after normalization.
    pub det_max_r_gamma: f64,
    pub dimension: usize,
}

impl SchlichtCertificate {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        branch: CertificateBranch,
        n: usize,
        beta: SpaceTimePoint,
        sigma: f64,
        eta: f64,
        lambda_at_beta: f64,
        center_image: Vec<f64>,
        estimate_radius: f64,
        k: f64,
        gamma: f64,
        a_m: f64,
        det_max_r_gamma: f64,
        dimension: usize,
    ) -> Result<Self> {
        let cert = SchlichtCertificate {
            branch,
            n,
            beta,
            sigma,
            eta,
            lambda_at_beta,
            rho: sigma * eta * lambda_at_beta,
            center_image,
            estimate_radius,
            k,
            gamma,
            a_m,
            det_max_r_gamma,
            dimension,
        };
        cert.validate()?;
        Ok(cert)
    }

    /// Recompute the eta the stored inputs admit.
    pub fn admissible_eta(&self) -> Result<f64> {
        match self.branch {
            CertificateBranch::Interior => {
                // estimate_radius plays eps_n * r_n; split it as (eps, r) =
                // (estimate_radius, 1) since only the product enters.
                eta_interior(
                    self.estimate_radius,
                    1.0,
                    self.sigma,
                    self.k,
                    self.gamma,
                    self.dimension,
                    self.a_m,
                )
            }
            CertificateBranch::Origin => eta_origin(
                self.estimate_radius,
                self.sigma,
                self.k,
                self.dimension,
                self.a_m,
                self.det_max_r_gamma,
                self.lambda_at_beta,
            ),
        }
    }

    /// Structural and derivational validity:
    /// rho = sigma * eta * lambda exactly, eta within the square bound
    /// eta <= (eps_n r_n)^2 / 4, the eta-ball inside the open unit ball,
    /// and eta not exceeding what the stored inputs admit.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| CoreError::InvalidCertificate(reason);
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(fail(format!("sigma = {} outside (0, 1)", self.sigma)));
        }
        if !(self.eta > 0.0) {
            return Err(fail(format!("eta = {} not positive", self.eta)));
        }
        if self.rho != self.sigma * self.eta * self.lambda_at_beta {
            return Err(fail("rho is not sigma * eta * lambda_F(beta)".into()));
        }
        let square_bound = self.estimate_radius * self.estimate_radius / 4.0;
        if self.eta > square_bound * (1.0 + 1e-12) {
            return Err(fail(format!(
                "eta = {} exceeds (eps r)^2/4 = {square_bound}",
                self.eta
            )));
        }
        if self.beta.norm() + self.eta >= 1.0 {
            return Err(fail("eta-ball reaches the unit sphere".into()));
        }
        let admissible = self.admissible_eta()?;
        if self.eta > admissible * (1.0 + 1e-9) {
            return Err(fail(format!(
                "eta = {} exceeds the admissible {admissible}",
                self.eta
            )));
        }
        Ok(())
    }
}

fn check_common(sigma: f64, k: f64, m: usize, a_m: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "sigma",
            reason: format!("must lie in (0, 1), got {sigma}"),
        });
    }
    if !(k >= 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            reason: format!("Takahashi constant must be at least 1, got {k}"),
        });
    }
    if !(a_m >= 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "a_m",
            reason: format!("derivative-estimate constant must be at least 1, got {a_m}"),
        });
    }
    if m < 1 {
        return Err(CoreError::DimensionOutOfRange(m));
    }
    Ok(())
}

/// Contraction radius for the interior branch:
/// eta = (1 - sigma) (eps_n r_n / a_m)^4 / (2^{m+3} (m+1) K^{m+2} gamma^4).
///
/// The result always satisfies eta <= (eps_n r_n)^2 / 4.
pub fn eta_interior(
    eps_n: f64,
    r_n: f64,
    sigma: f64,
    k: f64,
    gamma: f64,
    m: usize,
    a_m: f64,
) -> Result<f64> {
    check_common(sigma, k, m, a_m)?;
    if !(gamma > 1.0) {
        return Err(CoreError::GammaOutOfRange(gamma));
    }
    let product = eps_n * r_n;
    if !(product > 0.0 && product < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "eps_n * r_n",
            reason: format!("must lie in (0, 1), got {product}"),
        });
    }
    let pow2 = (1u64 << (m + 3)) as f64;
    let eta = (1.0 - sigma) * (product / a_m).powi(4)
        / (pow2 * (m as f64 + 1.0) * k.powi(m as i32 + 2) * gamma.powi(4));
    debug_assert!(eta <= product * product / 4.0);
    Ok(eta)
}

/// Contraction radius for the origin branch:
/// eta = (1-sigma) lambda_F(0) (r_gamma/a_m)^4 /
///       (2^{m+3} (m+1) K M(r_gamma)^{1/(m+1)}).
pub fn eta_origin(
    r_gamma: f64,
    sigma: f64,
    k: f64,
    m: usize,
    a_m: f64,
    det_max_r_gamma: f64,
    lambda_at_origin: f64,
) -> Result<f64> {
    check_common(sigma, k, m, a_m)?;
    if !(r_gamma > 0.0 && r_gamma < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "r_gamma",
            reason: format!("must lie in (0, 1), got {r_gamma}"),
        });
    }
    if !(lambda_at_origin > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "lambda_at_origin",
            reason: format!("must be positive, got {lambda_at_origin}"),
        });
    }
    if !(det_max_r_gamma >= 1.0 - 1e-9) {
        return Err(CoreError::InvalidParameter {
            name: "det_max_r_gamma",
            reason: format!("normalization forces M(r_gamma) >= 1, got {det_max_r_gamma}"),
        });
    }
    let pow2 = (1u64 << (m + 3)) as f64;
    let eta = (1.0 - sigma) * lambda_at_origin * (r_gamma / a_m).powi(4)
        / (pow2 * (m as f64 + 1.0) * k * det_max_r_gamma.powf(1.0 / (m as f64 + 1.0)));
    Ok(eta)
}

/// Outcome of one chord solve.
#[derive(Clone, Debug)]
pub struct ChordSolution {
    pub point: SpaceTimePoint,
    pub iterations: usize,
    pub residual: f64,
    /// |z_{i+1} - z_i| per iteration, for rate measurements.
    pub step_norms: Vec<f64>,
}

impl ChordSolution {
    /// Worst consecutive step-size ratio; the observed linear rate.
    pub fn contraction_factor(&self) -> Option<f64> {
        self.step_norms
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

fn vec_sub_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Solve w = F(z) by the chord iteration z <- z + F'(beta)^{-1} (w - F(z)),
/// starting at beta. Every iterate must stay in the closed eta-ball around
/// beta; leaving it means the certificate was violated.
pub fn chord_solve<M: SmoothMap>(
    map: &M,
    beta: &SpaceTimePoint,
    w: &[f64],
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ChordSolution> {
    chord_solve_from(map, beta, beta, w, eta, tol, max_iter)
}

/// Chord iteration from an arbitrary start inside the eta-ball; used by the
/// multi-start uniqueness witness.
pub fn chord_solve_from<M: SmoothMap>(
    map: &M,
    beta: &SpaceTimePoint,
    start: &SpaceTimePoint,
    w: &[f64],
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ChordSolution> {
    let j_inv = invert(&map.jacobian(beta))?;
    let start_dist = start.dist(beta);
    if start_dist > eta * (1.0 + 1e-12) {
        return Err(CoreError::LeftContractionBall {
            iteration: 0,
            distance: start_dist,
            eta,
        });
    }
    let mut z = start.clone();
    let mut step_norms = Vec::new();
    for iter in 0..=max_iter {
        let fz = map.eval(&z);
        let residual = vec_sub_norm(w, &fz);
        if residual < tol {
            return Ok(ChordSolution {
                point: z,
                iterations: iter,
                residual,
                step_norms,
            });
        }
        if iter == max_iter {
            return Err(CoreError::NoConvergence(max_iter, residual));
        }
        let rhs: Vec<f64> = w.iter().zip(&fz).map(|(a, b)| a - b).collect();
        let delta = j_inv.mul_vec(&rhs);
        let mut coords = z.coords();
        for (c, d) in coords.iter_mut().zip(&delta) {
            *c += d;
        }
        z = SpaceTimePoint::from_coords(&coords);
        step_norms.push(delta.iter().map(|d| d * d).sum::<f64>().sqrt());
        let dist = z.dist(beta);
        if dist > eta * (1.0 + 1e-12) {
            return Err(CoreError::LeftContractionBall {
                iteration: iter + 1,
                distance: dist,
                eta,
            });
        }
    }
    unreachable!("loop returns or errors");
}

/// Empirical contraction check over the eta-ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionReport {
    pub pair_budget: usize,
    /// Worst |g(z1) - g(z2)| / |z1 - z2| over sampled pairs.
    pub worst_pair_ratio: f64,
    pub pair_bound: f64,
    /// Worst row norm of the Jacobian of g over sampled points.
    pub worst_row_norm: f64,
    pub row_bound: f64,
    pub passed: bool,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

/// Sample point pairs in the eta-ball and check the pairwise contraction
/// ratio against 1 - sigma, and each row norm of the Jacobian of g_w
/// against (1 - sigma)/sqrt(m+1). The difference g_w(z1) - g_w(z2) does not
/// depend on w, so no target is needed.
pub fn verify_contraction<M: SmoothMap>(
    map: &M,
    beta: &SpaceTimePoint,
    eta: f64,
    sigma: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<ContractionReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "sigma",
            reason: format!("must lie in (0, 1), got {sigma}"),
        });
    }
    let dim = map.dim() + 1;
    let j_inv = invert(&map.jacobian(beta))?;
    let sampler = BallSampler::new(beta.coords(), eta, seed);

    struct PairScore {
        ratio: f64,
        index: u64,
        pair: Option<(Vec<f64>, Vec<f64>)>,
        row_norm: f64,
    }
    let identity = Matrix::identity(dim);
    let score = |i: u64| {
        let p1 = sampler.point(2 * i + 1);
        let p2 = sampler.point(2 * i + 2);
        let z1 = SpaceTimePoint::from_coords(&p1);
        let z2 = SpaceTimePoint::from_coords(&p2);
        let dz = vec_sub_norm(&p1, &p2);
        let ratio = if dz < 1e-14 {
            0.0
        } else {
            // g(z1) - g(z2) = (z1 - z2) - J^{-1} (F(z1) - F(z2)).
            let f1 = map.eval(&z1);
            let f2 = map.eval(&z2);
            let df: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a - b).collect();
            let jdf = j_inv.mul_vec(&df);
            let g: Vec<f64> = p1
                .iter()
                .zip(&p2)
                .zip(&jdf)
                .map(|((a, b), c)| (a - b) - c)
                .collect();
            g.iter().map(|v| v * v).sum::<f64>().sqrt() / dz
        };
        // Row norms of I - J^{-1} F'(z) at the first point of the pair.
        let g_prime = identity.sub(&j_inv.mul(&map.jacobian(&z1)));
        let mut row_norm = 0.0f64;
        for row in 0..dim {
            row_norm = row_norm.max(g_prime.row_norm(row));
        }
        PairScore {
            ratio,
            index: i,
            pair: Some((p1, p2)),
            row_norm,
        }
    };
    let init = PairScore {
        ratio: f64::NEG_INFINITY,
        index: u64::MAX,
        pair: None,
        row_norm: f64::NEG_INFINITY,
    };
    let best = (0..pair_budget as u64)
        .into_par_iter()
        .map(score)
        .reduce(
            || PairScore {
                ratio: init.ratio,
                index: init.index,
                pair: None,
                row_norm: init.row_norm,
            },
            |a, b| {
                let (ratio, index, pair) = if b.ratio > a.ratio
                    || (b.ratio == a.ratio && b.index < a.index)
                {
                    (b.ratio, b.index, b.pair)
                } else {
                    (a.ratio, a.index, a.pair)
                };
                PairScore {
                    ratio,
                    index,
                    pair,
                    row_norm: a.row_norm.max(b.row_norm),
                }
            },
        );
    let pair_bound = 1.0 - sigma + 1e-9;
    let row_bound = (1.0 - sigma) / (dim as f64).sqrt();
    let worst_pair_ratio = best.ratio.max(0.0);
    let worst_row_norm = best.row_norm.max(0.0);
    let passed = worst_pair_ratio <= pair_bound && worst_row_norm <= row_bound;
    Ok(ContractionReport {
        pair_budget,
        worst_pair_ratio,
        pair_bound,
        worst_row_norm,
        row_bound,
        passed,
        worst_pair: if passed { None } else { best.pair },
    })
}

/// Empirical schlichtness check over the certified disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchlichtReport {
    pub n_targets: usize,
    pub max_residual: f64,
    pub max_iterations: usize,
    /// Worst spread among the multi-start solutions of one target.
    pub worst_multistart_spread: f64,
    /// Smallest distance between solutions of distinct targets.
    pub min_solution_separation: f64,
    pub min_target_separation: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

const MULTISTART_COUNT: u64 = 8;
const UNIQUENESS_TOL: f64 = 1e-9;

/// For seeded targets w in the certified disk: solve w = F(z), re-solve
/// from 8 seeded starts in the eta-ball and demand agreement within 1e-9,
/// and check injectivity across targets.
pub fn verify_schlicht<M: SmoothMap>(
    map: &M,
    cert: &SchlichtCertificate,
    n_targets: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<SchlichtReport> {
    cert.validate()?;
    let report = verify_schlicht_unchecked(map, cert, n_targets, seed, tol, max_iter);
    Ok(report)
}

/// The empirical part of `verify_schlicht`, without the certificate
/// validity gate; used directly by negative-control tests that feed
/// deliberately forged certificates.
pub fn verify_schlicht_unchecked<M: SmoothMap>(
    map: &M,
    cert: &SchlichtCertificate,
    n_targets: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> SchlichtReport {
    let target_sampler = BallSampler::new(cert.center_image.clone(), cert.rho, seed);
    let start_sampler = BallSampler::new(cert.beta.coords(), cert.eta, seed ^ 0x9e37_79b9);

    struct TargetOutcome {
        solution: Option<Vec<f64>>,
        target: Vec<f64>,
        residual: f64,
        iterations: usize,
        spread: f64,
        failure: Option<String>,
    }

    let run_target = |i: u64| {
        let w = target_sampler.point(i);
        let mut solutions: Vec<Vec<f64>> = Vec::new();
        let mut residual = 0.0f64;
        let mut iterations = 0usize;
        let mut failure = None;
        match chord_solve(map, &cert.beta, &w, cert.eta, tol, max_iter) {
            Ok(sol) => {
                residual = sol.residual;
                iterations = sol.iterations;
                solutions.push(sol.point.coords());
            }
            Err(e) => failure = Some(format!("target {i}: {e}")),
        }
        if failure.is_none() {
            for s in 1..=MULTISTART_COUNT {
                let start =
                    SpaceTimePoint::from_coords(&start_sampler.point(i * MULTISTART_COUNT + s));
                match chord_solve_from(map, &cert.beta, &start, &w, cert.eta, tol, max_iter) {
                    Ok(sol) => {
                        residual = residual.max(sol.residual);
                        iterations = iterations.max(sol.iterations);
                        solutions.push(sol.point.coords());
                    }
                    Err(e) => {
                        failure = Some(format!("target {i}, start {s}: {e}"));
                        break;
                    }
                }
            }
        }
        let mut spread = 0.0f64;
        for a in 0..solutions.len() {
            for b in a + 1..solutions.len() {
                spread = spread.max(vec_sub_norm(&solutions[a], &solutions[b]));
            }
        }
        if failure.is_none() && spread > UNIQUENESS_TOL {
            failure = Some(format!(
                "target {i}: multistart solutions differ by {spread:.3e}"
            ));
        }
        TargetOutcome {
            solution: solutions.into_iter().next(),
            target: w,
            residual,
            iterations,
            spread,
            failure,
        }
    };

    let outcomes: Vec<TargetOutcome> = (0..n_targets as u64)
        .into_par_iter()
        .map(run_target)
        .collect();

    let mut failures: Vec<String> = Vec::new();
    let mut max_residual = 0.0f64;
    let mut max_iterations = 0usize;
    let mut worst_spread = 0.0f64;
    for o in &outcomes {
        if let Some(f) = &o.failure {
            failures.push(f.clone());
        }
        max_residual = max_residual.max(o.residual);
        max_iterations = max_iterations.max(o.iterations);
        worst_spread = worst_spread.max(o.spread);
    }
    let mut min_sep = f64::INFINITY;
    let mut min_target_sep = f64::INFINITY;
    for a in 0..outcomes.len() {
        for b in a + 1..outcomes.len() {
            let tw = vec_sub_norm(&outcomes[a].target, &outcomes[b].target);
            if tw == 0.0 {
                continue;
            }
            min_target_sep = min_target_sep.min(tw);
            if let (Some(za), Some(zb)) = (&outcomes[a].solution, &outcomes[b].solution) {
                min_sep = min_sep.min(vec_sub_norm(za, zb));
            }
        }
    }
    if min_sep <= 0.0 {
        failures.push("distinct targets mapped to one preimage".into());
    }
    let passed = failures.is_empty();
    SchlichtReport {
        n_targets,
        max_residual,
        max_iterations,
        worst_multistart_spread: worst_spread,
        min_solution_separation: min_sep,
        min_target_separation: min_target_sep,
        failures,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caloric::MultiIndex;
    use crate::gallery::{cubic, identity_like, LinearMap};
    use crate::linalg::spectral_summary;

    #[test]
    fn eta_interior_closed_form() {
        // sigma = 1/2, eps r -> 1, a_m = K = 1, gamma -> 1, m = 1: 1/64.
        let eta = eta_interior(
            1.0 - 1e-12,
            1.0,
            0.5,
            1.0,
            1.0 + 1e-12,
            1,
            1.0,
        )
        .unwrap();
        assert!((eta - 1.0 / 64.0).abs() < 1e-10);
        // Doubling K divides eta by 2^{m+2}.
        let base = eta_interior(0.5, 0.5, 0.5, 2.0, 2.0, 1, 1.5).unwrap();
        let doubled = eta_interior(0.5, 0.5, 0.5, 4.0, 2.0, 1, 1.5).unwrap();
        assert!((doubled * 8.0 - base).abs() < 1e-15 * base);
        // Monotone: up in eps r, down in gamma, K, a_m.
        let mut last = 0.0;
        for i in 1..10 {
            let e = eta_interior(0.05 * i as f64, 1.0, 0.5, 2.0, 2.0, 1, 1.5).unwrap();
            assert!(e > last);
            last = e;
        }
        for (name, f) in [
            ("gamma", Box::new(|v: f64| eta_interior(0.5, 0.5, 0.5, 2.0, v, 1, 1.5))
                as Box<dyn Fn(f64) -> Result<f64>>),
            ("k", Box::new(|v: f64| eta_interior(0.5, 0.5, 0.5, v, 2.0, 1, 1.5))),
            ("a_m", Box::new(|v: f64| eta_interior(0.5, 0.5, 0.5, 2.0, 2.0, 1, v))),
        ] {
            let mut prev = f64::INFINITY;
            for i in 0..8 {
                let v = 1.5 + 0.5 * i as f64;
                let e = f(v).unwrap();
                assert!(e < prev, "{name} not decreasing");
                prev = e;
            }
        }
        // The square bound holds.
        let eps_r = 0.9f64;
        let eta = eta_interior(eps_r, 1.0, 0.5, 1.5, 1.3, 2, 1.0).unwrap();
        assert!(eta <= eps_r * eps_r / 4.0);
        // Bad inputs rejected.
        assert!(eta_interior(1.2, 1.0, 0.5, 2.0, 2.0, 1, 1.0).is_err());
        assert!(eta_interior(0.5, 1.0, 0.5, 0.5, 2.0, 1, 1.0).is_err());
        assert!(eta_interior(0.5, 1.0, 1.5, 2.0, 2.0, 1, 1.0).is_err());
    }

    #[test]
    fn eta_origin_closed_form() {
        let eta = eta_origin(1.0 - 1e-12, 0.5, 1.0, 1, 1.0, 1.0, 1.0).unwrap();
        assert!((eta - 1.0 / 64.0).abs() < 1e-10);
        // Linear in lambda at the origin.
        let a = eta_origin(0.5, 0.5, 2.0, 1, 1.5, 1.2, 0.7).unwrap();
        let b = eta_origin(0.5, 0.5, 2.0, 1, 1.5, 1.2, 1.4).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
        assert!(eta_origin(0.5, 0.5, 2.0, 1, 1.5, 1.2, -0.1).is_err());
        assert!(eta_origin(0.5, 0.5, 2.0, 1, 1.5, 0.3, 1.0).is_err());
    }

    #[test]
    fn eta_origin_agrees_with_inequality_rearranged() {
        // Recompute from the contraction inequality grouped differently.
        let (r_gamma, sigma, k, m, a_m, m_rg, lambda0) = (0.544, 0.5, 1.7, 1usize, 2.0, 1.33, 0.97);
        let direct = eta_origin(r_gamma, sigma, k, m, a_m, m_rg, lambda0).unwrap();
        let md = m as f64;
        let lhs_coeff = (1u64 << (m + 3)) as f64 * (md + 1.0).sqrt() * k
            * m_rg.powf(1.0 / (md + 1.0))
            / (r_gamma / a_m).powi(4);
        let indirect = (1.0 - sigma) * lambda0 / (md + 1.0).sqrt() / lhs_coeff;
        assert!((direct - indirect).abs() <= 1e-15 * direct);
    }

    #[test]
    fn chord_solves_linear_map_in_one_iteration() {
        let a = crate::linalg::Matrix::from_rows(&[vec![1.3, 0.2], vec![-0.4, 0.9]]).unwrap();
        let map = LinearMap::new(a);
        let beta = SpaceTimePoint::new(vec![0.1], 0.05);
        let f_beta = map.eval(&beta);
        let w = vec![f_beta[0] + 0.01, f_beta[1] - 0.02];
        let sol = chord_solve(&map, &beta, &w, 0.5, 1e-12, 50).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.residual < 1e-12);
        // Center target needs zero iterations.
        let sol0 = chord_solve(&map, &beta, &f_beta, 0.5, 1e-12, 50).unwrap();
        assert_eq!(sol0.iterations, 0);
    }

    #[test]
    fn chord_reports_ball_escape() {
        let map = cubic();
        let beta = SpaceTimePoint::origin(1);
        // Target far outside any sane disk with a microscopic eta.
        let w = vec![0.5, 0.5];
        match chord_solve(&map, &beta, &w, 1e-6, 1e-12, 50) {
            Err(CoreError::LeftContractionBall { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected LeftContractionBall, got {other:?}"),
        }
    }

    #[test]
    fn chord_form_equals_remainder_form_for_degree_two_maps() {
        // For maps of total degree <= 2 the Taylor remainder coefficients
        // are constant, R_alpha = F^(alpha)(beta)/alpha!, so the remainder
        // fixed-point form can be evaluated without quadrature and must
        // agree with the chord form.
        let map = identity_like(1);
        let beta = SpaceTimePoint::new(vec![0.2], -0.1);
        let j_inv = invert(&map.jacobian(&beta)).unwrap();
        let f_beta = map.eval(&beta);
        let w = vec![0.3, 0.05];
        let second_orders = [vec![2u32, 0], vec![1, 1], vec![0, 2]];
        for &(x, t) in &[(0.25, -0.05), (0.1, 0.0), (0.3, -0.2)] {
            let z = SpaceTimePoint::new(vec![x], t);
            // Chord form.
            let fz = map.eval(&z);
            let rhs: Vec<f64> = w.iter().zip(&fz).map(|(a, b)| a - b).collect();
            let chord: Vec<f64> = z
                .coords()
                .iter()
                .zip(&j_inv.mul_vec(&rhs))
                .map(|(a, b)| a + b)
                .collect();
            // Remainder form: beta + J^{-1}(w - F(beta)) - J^{-1} sum_alpha
            // R_alpha (z - beta)^alpha.
            let dz = [z.x[0] - beta.x[0], z.t - beta.t];
            let mut remainder = vec![0.0f64; 2];
            for orders in &second_orders {
                let k = MultiIndex::new(orders.clone());
                let monomial = dz[0].powi(orders[0] as i32) * dz[1].powi(orders[1] as i32);
                let alpha_fact = k.factorial();
                for (row, comp) in map.components().iter().enumerate() {
                    let d = comp.derivative(&k, &beta).unwrap();
                    remainder[row] += d / alpha_fact * monomial;
                }
            }
            let head: Vec<f64> = w.iter().zip(&f_beta).map(|(a, b)| a - b).collect();
            let lin = j_inv.mul_vec(&head);
            let rem = j_inv.mul_vec(&remainder);
            let taylor: Vec<f64> = beta
                .coords()
                .iter()
                .zip(&lin)
                .zip(&rem)
                .map(|((b, l), r)| b + l - r)
                .collect();
            for (c, t) in chord.iter().zip(&taylor) {
                assert!((c - t).abs() < 1e-12, "chord {c} vs taylor {t}");
            }
        }
    }

    #[test]
    fn verify_contraction_linear_map_is_exact() {
        let a = crate::linalg::Matrix::from_rows(&[vec![1.1, 0.0], vec![0.3, 0.8]]).unwrap();
        let map = LinearMap::new(a);
        let beta = SpaceTimePoint::origin(1);
        let rep = verify_contraction(&map, &beta, 0.25, 0.5, 128, 3).unwrap();
        assert!(rep.worst_pair_ratio < 1e-12);
        assert!(rep.worst_row_norm < 1e-12);
        assert!(rep.passed);
    }

    #[test]
    fn verify_contraction_identity_like_small_in_ball() {
        let map = identity_like(1);
        let beta = SpaceTimePoint::origin(1);
        let eta = 0.05;
        let rep = verify_contraction(&map, &beta, eta, 0.5, 256, 11).unwrap();
        // G'(z) rows vanish at beta and stay O(eta) in the ball.
        assert!(rep.worst_row_norm < 0.1);
        assert!(rep.passed);
    }

    #[test]
    fn schlicht_identity_like_matches_explicit_inverse() {
        // F(x, t) = (x, (x^2 + 2t)/2) inverts explicitly:
        // x = w1, t = w2 - w1^2/2.
        let map = identity_like(1);
        let beta = SpaceTimePoint::origin(1);
        let lambda = spectral_summary(&map.jacobian(&beta)).lambda_min;
        let eta = eta_origin(0.5, 0.5, 2.0, 1, 1.0, 1.0, lambda).unwrap();
        let cert = SchlichtCertificate::new(
            CertificateBranch::Origin,
            0,
            beta.clone(),
            0.5,
            eta,
            lambda,
            map.eval(&beta),
            0.5,
            2.0,
            2.0,
            1.0,
            1.0,
            1,
        )
        .unwrap();
        let rep = verify_schlicht(&map, &cert, 40, 5, 1e-13, 200).unwrap();
        assert!(rep.passed, "failures: {:?}", rep.failures);
        // Spot check one target against the closed-form inverse.
        let w = [0.6 * cert.rho, -0.3 * cert.rho];
        let sol = chord_solve(&map, &beta, &w, cert.eta, 1e-13, 200).unwrap();
        assert!((sol.point.x[0] - w[0]).abs() < 1e-12);
        assert!((sol.point.t - (w[1] - w[0] * w[0] / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn rho_scales_linearly_in_sigma() {
        // Doubling sigma doubles rho exactly: rounding commutes with
        // powers of two.
        let eta = 1e-3;
        let lambda = 0.9137;
        for &sigma in &[0.125, 0.25, 0.4375] {
            let rho = sigma * eta * lambda;
            let rho2 = (2.0 * sigma) * eta * lambda;
            assert_eq!(rho2, 2.0 * rho);
        }
    }

    #[test]
    fn forged_certificate_is_rejected() {
        let map = cubic();
        let beta = SpaceTimePoint::origin(1);
        let lambda = spectral_summary(&map.jacobian(&beta)).lambda_min;
        let eta = eta_origin(0.5, 0.5, 1.7, 1, 2.0, 1.3, lambda).unwrap();
        let mut cert = SchlichtCertificate::new(
            CertificateBranch::Origin,
            0,
            beta.clone(),
            0.5,
            eta,
            lambda,
            map.eval(&beta),
            0.5,
            1.7,
            2.0,
            2.0,
            1.3,
            1,
        )
        .unwrap();
        cert.validate().unwrap();
        // Inflate eta tenfold: structurally consistent but not derivable.
        cert.eta *= 10.0;
        cert.rho = cert.sigma * cert.eta * cert.lambda_at_beta;
        match cert.validate() {
            Err(CoreError::InvalidCertificate(msg)) => {
                assert!(msg.contains("admissible"), "{msg}")
            }
            other => panic!("expected InvalidCertificate, got {other:?}"),
        }
    }
}
