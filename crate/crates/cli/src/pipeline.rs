//! Command implementations: estimate-k, certify, invert, verify, constants.

use std::fs;
use std::path::Path;

use heatbloch_core::bounds::{estimate_am, theorem_bound, theorem_bound_stated, BlochBoundReport};
use heatbloch_core::caloric::{HeatMap, SpaceTimePoint};
use heatbloch_core::contraction::{
    chord_solve, eta_interior, eta_origin, verify_contraction, verify_schlicht_unchecked,
    CertificateBranch, SchlichtCertificate,
};
use heatbloch_core::gallery::am_family;
use heatbloch_core::linalg::spectral_summary;
use heatbloch_core::radii::{build_sequences, gamma_from_r0, r_from_gamma};
use heatbloch_core::takahashi::{estimate_k, SampledMaxOracle};
use heatbloch_core::{bounds, CoreError};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{
    AmSection, CertVerifyResult, CertificateStore, CertifyReport, CertifySection, ConstantsReport,
    EstimateKReport, InvertReport, KSection, MapSummary, TheoremRow, VerifyReport, SCHEMA_VERSION,
};

/// Load the map document and cross-check the configured dimension.
pub fn load_map(cfg: &RunConfig) -> CliResult<HeatMap> {
    let text = fs::read_to_string(&cfg.map_source).map_err(|e| {
        CliError::invalid(format!("cannot read map {:?}: {e}", cfg.map_source))
    })?;
    let map = HeatMap::from_json_str(&text)?;
    if let Some(m) = cfg.m {
        if m != map.m() {
            return Err(CliError::invalid(format!(
                "config says m = {m} but the map document has m = {}",
                map.m()
            )));
        }
    }
    Ok(map)
}

fn normalize_with_scale(map: &HeatMap) -> CliResult<(HeatMap, f64, f64)> {
    let det_raw = map
        .jacobian_at(&SpaceTimePoint::origin(map.m()))
        .det()
        .abs();
    let normalized = map.normalize()?;
    let scale = if (det_raw - 1.0).abs() <= 1e-12 {
        1.0
    } else {
        det_raw.powf(-1.0 / (map.m() as f64 + 1.0))
    };
    Ok((normalized, det_raw, scale))
}

fn effective_gamma(cfg: &RunConfig) -> CliResult<f64> {
    match (cfg.gamma, cfg.r0) {
        (Some(g), None) => {
            if !(g > 1.0) {
                return Err(CliError::invalid(format!("gamma must exceed 1, got {g}")));
            }
            Ok(g)
        }
        (None, Some(r0)) => Ok(gamma_from_r0(r0)?),
        _ => Err(CliError::invalid("exactly one of gamma or r0 is required")),
    }
}

const AM_RADII: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

fn resolve_k(cfg: &RunConfig, map: &HeatMap) -> CliResult<(KSection, f64)> {
    let grid = cfg.radii_grid();
    let est = estimate_k(map, &grid, cfg.sample_budget, cfg.seed)?;
    let applied = match cfg.k {
        Some(k) => k,
        None => est.k * cfg.tolerances.k_safety,
    };
    if !(applied >= 1.0) {
        return Err(CliError::invalid(format!(
            "takahashi constant must be at least 1, got {applied}"
        )));
    }
    let section = KSection::new(&est, cfg.tolerances.k_safety, applied);
    Ok((section, applied))
}

fn resolve_am(cfg: &RunConfig, map: &HeatMap) -> CliResult<(AmSection, f64)> {
    let mut family = am_family(map.m());
    family.extend(map.components().iter().cloned());
    let budget = (cfg.sample_budget / 4).max(512);
    let raw = estimate_am(map.m(), &family, &AM_RADII, budget, cfg.seed)?;
    let applied = match cfg.a_m {
        Some(a) => a,
        None => raw * cfg.tolerances.a_m_safety,
    };
    if !(applied >= 1.0) {
        return Err(CliError::invalid(format!(
            "a_m must be at least 1, got {applied}"
        )));
    }
    Ok((
        AmSection {
            raw_estimate: raw,
            safety_factor: cfg.tolerances.a_m_safety,
            applied,
        },
        applied,
    ))
}

pub fn run_estimate_k(cfg: &RunConfig) -> CliResult<EstimateKReport> {
    let map = load_map(cfg)?;
    let (normalized, det_raw, scale) = normalize_with_scale(&map)?;
    let (section, _) = resolve_k(cfg, &normalized)?;
    Ok(EstimateKReport {
        schema_version: SCHEMA_VERSION,
        command: "estimate-k".into(),
        config: cfg.clone(),
        map: MapSummary {
            source: cfg.map_source.clone(),
            m: normalized.m(),
            det_origin_raw: det_raw,
            normalization_scale: scale,
        },
        k_estimate: section,
    })
}

/// The full certification pipeline: normalize, estimate K and a_m, build
/// the radius sequences, pick the index n with
/// eps_n^4 M(r_n)^{1/(m+1)} >= M(r_gamma)^{1/(m+1)}/gamma^4, and emit both
/// certificates together with every closed-form bound.
pub fn run_certify(cfg: &RunConfig) -> CliResult<(CertifyReport, CertificateStore)> {
    let raw_map = load_map(cfg)?;
    let (map, det_raw, scale) = normalize_with_scale(&raw_map)?;
    let m = map.m();
    let md = m as f64;
    let (k_section, k) = resolve_k(cfg, &map)?;
    let (am_section, a_m) = resolve_am(cfg, &map)?;
    let gamma = effective_gamma(cfg)?;
    let r_gamma = r_from_gamma(gamma)?;

    let mut oracle = SampledMaxOracle::new(&map, cfg.sample_budget, cfg.seed);
    let sequence = build_sequences(m, gamma, &mut oracle, cfg.tolerances.ratio_tol)?;
    let m_rgamma = sequence.det_max[0];

    // Selection inequality; the construction guarantees a valid index.
    let exponent = 1.0 / (md + 1.0);
    let threshold = m_rgamma.powf(exponent) / gamma.powi(4);
    let mut chosen: Option<(usize, f64)> = None;
    for n in 0..=sequence.l {
        let value = sequence.eps[n].powi(4) * sequence.det_max[n].powf(exponent);
        if value >= threshold * (1.0 - 1e-12) {
            let better = match chosen {
                None => true,
                Some((_, best)) => value > best,
            };
            if better {
                chosen = Some((n, value));
            }
        }
    }

    let interior = match chosen {
        None => None,
        Some((n, _)) => {
            let record = oracle.record(sequence.r[n])?.clone();
            let lambda = spectral_summary(&map.jacobian_at(&record.beta)).lambda_min;
            let eta = eta_interior(
                sequence.eps[n],
                sequence.r[n],
                cfg.sigma,
                k,
                gamma,
                m,
                a_m,
            )?;
            Some(SchlichtCertificate::new(
                CertificateBranch::Interior,
                n,
                record.beta.clone(),
                cfg.sigma,
                eta,
                lambda,
                map.evaluate(&record.beta),
                sequence.eps[n] * sequence.r[n],
                k,
                gamma,
                a_m,
                m_rgamma,
                m,
            )?)
        }
    };

    let origin_point = SpaceTimePoint::origin(m);
    let lambda0 = spectral_summary(&map.jacobian_at(&origin_point)).lambda_min;
    let eta0 = eta_origin(r_gamma, cfg.sigma, k, m, a_m, m_rgamma, lambda0)?;
    let origin = SchlichtCertificate::new(
        CertificateBranch::Origin,
        0,
        origin_point.clone(),
        cfg.sigma,
        eta0,
        lambda0,
        map.evaluate(&origin_point),
        r_gamma,
        k,
        gamma,
        a_m,
        m_rgamma,
        m,
    )?;

    let bounds = BlochBoundReport::new(m, k, a_m, gamma, cfg.sigma, r_gamma, m_rgamma)?;

    let report = CertifyReport {
        schema_version: SCHEMA_VERSION,
        command: "certify".into(),
        config: cfg.clone(),
        map: MapSummary {
            source: cfg.map_source.clone(),
            m,
            det_origin_raw: det_raw,
            normalization_scale: scale,
        },
        k_estimate: k_section,
        a_m: am_section,
        gamma,
        r_gamma,
        sequence: sequence.clone(),
        chosen_n: chosen.map(|(n, _)| n),
        certificates: CertifySection {
            interior: interior.clone(),
            origin: origin.clone(),
        },
        bounds,
    };
    let store = CertificateStore {
        schema_version: SCHEMA_VERSION,
        map_source: cfg.map_source.clone(),
        m,
        seed: cfg.seed,
        k,
        a_m,
        gamma,
        sigma: cfg.sigma,
        sequence,
        interior,
        origin,
    };
    Ok((report, store))
}

/// Which stored certificate a query should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchChoice {
    Interior,
    Origin,
    /// The certificate with the larger certified radius.
    Best,
}

fn pick_certificate<'s>(
    store: &'s CertificateStore,
    branch: BranchChoice,
) -> CliResult<&'s SchlichtCertificate> {
    match branch {
        BranchChoice::Origin => Ok(&store.origin),
        BranchChoice::Interior => store
            .interior
            .as_ref()
            .ok_or_else(|| CliError::invalid("store holds no interior certificate")),
        BranchChoice::Best => Ok(match &store.interior {
            Some(i) if i.rho > store.origin.rho => i,
            _ => &store.origin,
        }),
    }
}

fn branch_name(cert: &SchlichtCertificate) -> String {
    match cert.branch {
        CertificateBranch::Interior => "interior".into(),
        CertificateBranch::Origin => "origin".into(),
    }
}

/// Invert the map at `w` against a stored certificate.
pub fn run_invert(
    cfg: &RunConfig,
    store_path: &Path,
    w: &[f64],
    branch: BranchChoice,
) -> CliResult<InvertReport> {
    let store = CertificateStore::load(store_path)?;
    let map = load_map(cfg)?;
    let (map, _, _) = normalize_with_scale(&map)?;
    if w.len() != map.m() + 1 {
        return Err(CliError::invalid(format!(
            "target w needs {} coordinates, got {}",
            map.m() + 1,
            w.len()
        )));
    }
    let cert = pick_certificate(&store, branch)?;
    cert.validate()?;
    let dist = w
        .iter()
        .zip(&cert.center_image)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if dist > cert.rho {
        return Err(CoreError::TargetOutsideDisk {
            dist,
            rho: cert.rho,
        }
        .into());
    }
    let sol = chord_solve(
        &map,
        &cert.beta,
        w,
        cert.eta,
        cfg.tolerances.chord_tol,
        cfg.tolerances.chord_max_iter,
    )?;
    Ok(InvertReport {
        schema_version: SCHEMA_VERSION,
        command: "invert".into(),
        branch: branch_name(cert),
        target: w.to_vec(),
        solution: sol.point.coords(),
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

fn verify_one(
    map: &HeatMap,
    cert: &SchlichtCertificate,
    cfg: &RunConfig,
) -> CliResult<CertVerifyResult> {
    let branch = branch_name(cert);
    // A certificate is checked before it is trusted: the derivation audit
    // is the precondition for the empirical checks.
    if let Err(e) = cert.validate() {
        return Ok(CertVerifyResult {
            branch,
            structurally_valid: false,
            validity_error: Some(e.to_string()),
            contraction: None,
            schlicht: None,
            passed: false,
        });
    }
    let contraction = verify_contraction(
        map,
        &cert.beta,
        cert.eta,
        cert.sigma,
        cfg.tolerances.verify_pairs,
        cfg.seed,
    )?;
    let schlicht = verify_schlicht_unchecked(
        map,
        cert,
        cfg.tolerances.verify_targets,
        cfg.seed,
        cfg.tolerances.chord_tol,
        cfg.tolerances.chord_max_iter,
    );
    let passed = contraction.passed && schlicht.passed;
    Ok(CertVerifyResult {
        branch,
        structurally_valid: true,
        validity_error: None,
        contraction: Some(contraction),
        schlicht: Some(schlicht),
        passed,
    })
}

/// Verify every stored certificate; `all_passed` drives the exit code.
pub fn run_verify(cfg: &RunConfig, store_path: &Path) -> CliResult<VerifyReport> {
    let store = CertificateStore::load(store_path)?;
    let map = load_map(cfg)?;
    let (map, _, _) = normalize_with_scale(&map)?;
    let mut results = Vec::new();
    if let Some(cert) = &store.interior {
        results.push(verify_one(&map, cert, cfg)?);
    }
    results.push(verify_one(&map, &store.origin, cfg)?);
    let all_passed = results.iter().all(|r| r.passed);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify".into(),
        store: store_path.display().to_string(),
        results,
        all_passed,
    })
}

/// Reproduce the constant optimization and tabulate the final bound.
pub fn run_constants(resolution: usize) -> CliResult<ConstantsReport> {
    let optimum = bounds::optimize_constants(resolution)?;
    let mut table = Vec::new();
    for m in 1..=3usize {
        for k in [1.0, 2.0, 4.0] {
            for a_m in [1.0, 2.0] {
                table.push(TheoremRow {
                    m,
                    k,
                    a_m,
                    bound: theorem_bound(m, k, a_m)?,
                    bound_stated: theorem_bound_stated(m, k, a_m)?,
                });
            }
        }
    }
    Ok(ConstantsReport {
        schema_version: SCHEMA_VERSION,
        command: "constants".into(),
        resolution,
        optimum,
        table,
    })
}
