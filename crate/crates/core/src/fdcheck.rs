//! Finite-difference residual oracles.
//!
//! The production path differentiates in closed form; these stencils exist
//! so the test suites can check caloricity and derivatives against an
//! independent route. Nothing here feeds a certificate.

use crate::caloric::{CaloricComponent, SpaceTimePoint};

fn shifted(z: &SpaceTimePoint, axis: usize, h: f64) -> SpaceTimePoint {
    let mut c = z.coords();
    c[axis] += h;
    SpaceTimePoint::from_coords(&c)
}

/// Second-order heat residual Delta u - du/dt with central differences.
pub fn heat_residual_fd2(u: &CaloricComponent, z: &SpaceTimePoint, h: f64) -> f64 {
    let m = u.m();
    let center = u.evaluate(z);
    let mut laplacian = 0.0;
    for axis in 0..m {
        let plus = u.evaluate(&shifted(z, axis, h));
        let minus = u.evaluate(&shifted(z, axis, -h));
        laplacian += (plus - 2.0 * center + minus) / (h * h);
    }
    let dt = (u.evaluate(&shifted(z, m, h)) - u.evaluate(&shifted(z, m, -h))) / (2.0 * h);
    laplacian - dt
}

/// Fourth-order heat residual: five-point second derivatives and the
/// four-point first derivative in time.
pub fn heat_residual_fd4(u: &CaloricComponent, z: &SpaceTimePoint, h: f64) -> f64 {
    let m = u.m();
    let center = u.evaluate(z);
    let mut laplacian = 0.0;
    for axis in 0..m {
        let p1 = u.evaluate(&shifted(z, axis, h));
        let m1 = u.evaluate(&shifted(z, axis, -h));
        let p2 = u.evaluate(&shifted(z, axis, 2.0 * h));
        let m2 = u.evaluate(&shifted(z, axis, -2.0 * h));
        laplacian += (-p2 + 16.0 * p1 - 30.0 * center + 16.0 * m1 - m2) / (12.0 * h * h);
    }
    let p1 = u.evaluate(&shifted(z, m, h));
    let m1 = u.evaluate(&shifted(z, m, -h));
    let p2 = u.evaluate(&shifted(z, m, 2.0 * h));
    let m2 = u.evaluate(&shifted(z, m, -2.0 * h));
    let dt = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
    laplacian - dt
}

/// Central first difference along one axis.
pub fn first_partial_fd(u: &CaloricComponent, axis: usize, z: &SpaceTimePoint, h: f64) -> f64 {
    (u.evaluate(&shifted(z, axis, h)) - u.evaluate(&shifted(z, axis, -h))) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caloric::Term;
    use crate::gallery::kernel_translates;
    use crate::sampler::BallSampler;

    #[test]
    fn polynomial_residual_is_rounding_level() {
        // Degree <= 4 polynomials are exact under the 4th-order stencils.
        let c = CaloricComponent::new(
            1,
            vec![
                Term::Poly { coeff: 0.3, degrees: vec![4] },
                Term::Poly { coeff: -1.1, degrees: vec![3] },
            ],
        )
        .unwrap();
        let z = SpaceTimePoint::new(vec![0.4], -0.6);
        assert!(heat_residual_fd4(&c, &z, 5e-3).abs() < 1e-9);
    }

    #[test]
    fn kernel_residual_below_tolerance_on_sampled_ball() {
        for u in kernel_translates(2) {
            let sampler = BallSampler::new(vec![0.0; 3], 1.0, 77);
            let mut worst = 0.0f64;
            for i in 0..500 {
                let z = SpaceTimePoint::from_coords(&sampler.point(i));
                worst = worst.max(heat_residual_fd4(&u, &z, 5e-3).abs());
            }
            assert!(worst < 1e-8, "worst fd4 residual {worst}");
        }
    }

    #[test]
    fn second_order_residual_matches_spec_tolerance() {
        for u in kernel_translates(1) {
            let sampler = BallSampler::new(vec![0.0; 2], 1.0, 78);
            let mut worst = 0.0f64;
            for i in 0..500 {
                let z = SpaceTimePoint::from_coords(&sampler.point(i));
                worst = worst.max(heat_residual_fd2(&u, &z, 2e-4).abs());
            }
            assert!(worst < 1e-8, "worst fd2 residual {worst}");
        }
    }

    #[test]
    fn rescaled_components_stay_caloric() {
        for u in kernel_translates(1) {
            for &r in &[0.3, 0.7, 0.95] {
                let scaled = u.parabolic_rescale(r).unwrap();
                let sampler = BallSampler::new(vec![0.0; 2], 1.0, 79);
                for i in 0..200 {
                    let z = SpaceTimePoint::from_coords(&sampler.point(i));
                    let res = heat_residual_fd4(&scaled, &z, 5e-3).abs();
                    assert!(res < 1e-8, "r = {r}: residual {res}");
                }
            }
        }
    }
}
