//! Cross-module property tests: spectral invariants against a
//! characteristic-polynomial oracle, Jacobians against finite differences,
//! and exact serialization round trips.

use heatbloch_core::caloric::{CaloricComponent, HeatMap, MultiIndex, SpaceTimePoint, Term};
use heatbloch_core::linalg::{invert, spectral_summary, Matrix};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Characteristic polynomial of a symmetric matrix by Faddeev-LeVerrier:
/// p(x) = x^n + c[0] x^{n-1} + ... + c[n-1].
fn char_poly(b: &Matrix) -> Vec<f64> {
    let n = b.n();
    let mut coeffs = Vec::with_capacity(n);
    let mut mk = b.clone();
    let mut ck = -trace(&mk);
    coeffs.push(ck);
    for k in 2..=n {
        let mut shifted = mk.clone();
        for i in 0..n {
            shifted[(i, i)] += ck;
        }
        mk = b.mul(&shifted);
        ck = -trace(&mk) / k as f64;
        coeffs.push(ck);
    }
    coeffs
}

fn trace(m: &Matrix) -> f64 {
    (0..m.n()).map(|i| m[(i, i)]).sum()
}

fn eval_poly(coeffs: &[f64], x: f64) -> (f64, f64) {
    // Horner for p and p' of the monic polynomial.
    let mut p = 1.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Newton from the right of every root; monotone for real-rooted monic
/// polynomials, so it lands on the largest root.
fn largest_root(coeffs: &[f64], start: f64) -> f64 {
    let mut x = start;
    for _ in 0..500 {
        let (p, dp) = eval_poly(coeffs, x);
        if dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        if !next.is_finite() || (next - x).abs() <= 1e-16 * x.abs().max(1e-300) {
            x = next.min(x);
            break;
        }
        x = next;
    }
    x
}

/// Extreme eigenvalues of the PSD matrix B straight from its
/// characteristic polynomial, plus |det| from the constant coefficient.
fn charpoly_extremes(b: &Matrix) -> (f64, f64, f64) {
    let n = b.n();
    let coeffs = char_poly(b);
    let upper = trace(b).max(0.0) + 1.0;
    let max_eig = largest_root(&coeffs, upper);
    // Reflect: q(y) = (-1)^n p(-y) is monic with roots -lambda_i <= 0.
    let mut reflected: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| if (i + 1) % 2 == 1 { -c } else { c })
        .collect();
    // (-1)^n p(-y) = y^n + sum (-1)^{k} ... ; the mapping above flips odd
    // powers' coefficients, which is exactly that identity for monic p.
    let min_eig = -largest_root(&mut reflected.clone(), 1.0);
    let _ = &mut reflected;
    let det_b = coeffs[n - 1] * if n % 2 == 1 { -1.0 } else { 1.0 };
    (min_eig.max(0.0), max_eig.max(0.0), det_b.abs())
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn spectral_summary_matches_charpoly_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for n in 2..=4usize {
        for _ in 0..1000 {
            let a = random_matrix(&mut rng, n);
            let s = spectral_summary(&a);
            let (lo, hi, det_b) = charpoly_extremes(&a.gram());
            assert!(
                (s.lambda_min - lo.sqrt()).abs() < 1e-10,
                "n={n}: lambda {} vs oracle {}",
                s.lambda_min,
                lo.sqrt()
            );
            assert!(
                (s.lambda_max - hi.sqrt()).abs() < 1e-10,
                "n={n}: Lambda {} vs oracle {}",
                s.lambda_max,
                hi.sqrt()
            );
            assert!(
                (s.det.abs() - det_b.sqrt()).abs() < 1e-10,
                "n={n}: |det| {} vs oracle {}",
                s.det.abs(),
                det_b.sqrt()
            );
        }
    }
}

#[test]
fn spectral_summary_invariants_on_seeded_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for n in 2..=4usize {
        for _ in 0..1000 {
            let a = random_matrix(&mut rng, n);
            let s = spectral_summary(&a);
            assert_eq!(s.operator_norm, s.lambda_max);
            let lo_pow = s.lambda_min.powi(n as i32);
            let hi_pow = s.lambda_max.powi(n as i32);
            assert!(lo_pow <= s.det.abs() + 1e-12);
            assert!(s.det.abs() <= hi_pow + 1e-12);
            assert!(s.operator_norm <= s.frobenius + 1e-12);
            assert!(s.frobenius <= (n as f64).sqrt() * s.operator_norm + 1e-12);
            // The reciprocal identity is a well-conditioned-sample claim;
            // near-singular matrices lose digits in the inversion itself.
            if s.lambda_min > 0.05 {
                let inv = invert(&a).unwrap();
                let si = spectral_summary(&inv);
                assert!(
                    (s.lambda_min * si.lambda_max - 1.0).abs() < 1e-10,
                    "n={n}: lambda * Lambda(inv) = {}",
                    s.lambda_min * si.lambda_max
                );
            }
        }
    }
}

fn random_poly_map(rng: &mut ChaCha8Rng, m: usize) -> HeatMap {
    let mut comps = Vec::new();
    for i in 0..=m {
        let mut terms = Vec::new();
        // A dominant linear part keeps the map nondegenerate.
        let mut degrees = vec![0u32; m];
        if i < m {
            degrees[i] = 1;
            terms.push(Term::Poly { coeff: 1.0, degrees });
        } else {
            degrees[0] = 2;
            terms.push(Term::Poly { coeff: 0.5, degrees });
        }
        for _ in 0..3 {
            let mut degrees = vec![0u32; m];
            degrees[rng.gen_range(0..m)] = rng.gen_range(0..=4);
            terms.push(Term::Poly {
                coeff: rng.gen_range(-0.3..0.3),
                degrees,
            });
        }
        comps.push(CaloricComponent::new(m, terms).unwrap());
    }
    HeatMap::new(m, comps).unwrap()
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for m in 1..=3usize {
        for _ in 0..20 {
            let map = random_poly_map(&mut rng, m);
            let coords: Vec<f64> = (0..=m).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let z = SpaceTimePoint::from_coords(&coords);
            let jac = map.jacobian_at(&z);
            let h = 1e-6;
            for row in 0..=m {
                for col in 0..=m {
                    let mut plus = coords.clone();
                    plus[col] += h;
                    let mut minus = coords.clone();
                    minus[col] -= h;
                    let fd = (map.evaluate(&SpaceTimePoint::from_coords(&plus))[row]
                        - map.evaluate(&SpaceTimePoint::from_coords(&minus))[row])
                        / (2.0 * h);
                    let exact = jac[(row, col)];
                    let scale = exact.abs().max(1e-3);
                    assert!(
                        (exact - fd).abs() / scale < 1e-6,
                        "m={m} ({row},{col}): {exact} vs {fd}"
                    );
                }
            }
        }
    }
}

#[test]
fn second_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let map = random_poly_map(&mut rng, 2);
    let z = SpaceTimePoint::new(vec![0.2, -0.3], 0.1);
    let h = 1e-4;
    for comp in map.components() {
        // Mixed x1 x2 second partial against the cross stencil.
        let k = MultiIndex::new(vec![1, 1, 0]);
        let exact = comp.derivative(&k, &z).unwrap();
        let at = |dx: f64, dy: f64| {
            comp.evaluate(&SpaceTimePoint::new(vec![0.2 + dx, -0.3 + dy], 0.1))
        };
        let fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        assert!((exact - fd).abs() < 1e-5 * exact.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_map_json_round_trip_is_bit_exact(
        c1 in -10.0f64..10.0,
        c2 in -10.0f64..10.0,
        c3 in -10.0f64..10.0,
        d1 in 0u32..6,
        d2 in 0u32..6,
        sx in 1.3f64..3.0,
        st in -3.0f64..-1.3,
    ) {
        let map = HeatMap::new(
            1,
            vec![
                CaloricComponent::new(
                    1,
                    vec![
                        Term::Poly { coeff: c1, degrees: vec![d1] },
                        Term::Kernel { coeff: c3, source_x: vec![sx], source_t: st },
                    ],
                )
                .unwrap(),
                CaloricComponent::new(
                    1,
                    vec![Term::Poly { coeff: c2, degrees: vec![d2] }],
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let text = map.to_json_string().unwrap();
        let back = HeatMap::from_json_str(&text).unwrap();
        prop_assert_eq!(&map, &back);
        // Decimal text is a fixed point of the round trip.
        prop_assert_eq!(text, back.to_json_string().unwrap());
    }

    #[test]
    fn evaluation_invariant_under_term_rotation(
        coeffs in proptest::collection::vec(-5.0f64..5.0, 2..6),
        x in -1.0f64..1.0,
        t in -1.0f64..1.0,
        rot in 0usize..5,
    ) {
        let terms: Vec<Term> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| Term::Poly { coeff: c, degrees: vec![(i % 5) as u32] })
            .collect();
        let mut rotated = terms.clone();
        let shift = rot % rotated.len();
        rotated.rotate_left(shift);
        let a = CaloricComponent::new(1, terms).unwrap();
        let b = CaloricComponent::new(1, rotated).unwrap();
        let z = SpaceTimePoint::new(vec![x], t);
        prop_assert_eq!(a.evaluate(&z).to_bits(), b.evaluate(&z).to_bits());
    }
}
