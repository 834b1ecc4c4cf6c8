//! Ready-made maps and components used by the test suites and as CLI
//! fixture material.
//!
//! Exactly affine maps with an invertible Jacobian cannot be caloric (the
//! bare time coordinate does not solve the heat equation), so the linear
//! test map lives outside [`HeatMap`] and implements [`SmoothMap`] directly
//! with exact affine arithmetic.

use crate::caloric::{CaloricComponent, HeatMap, SmoothMap, SpaceTimePoint, Term};
use crate::linalg::Matrix;

fn poly(coeff: f64, degrees: Vec<u32>) -> Term {
    Term::Poly { coeff, degrees }
}

fn component(m: usize, terms: Vec<Term>) -> CaloricComponent {
    CaloricComponent::new(m, terms).expect("gallery components are valid")
}

/// F_i = x_i for i <= m, F_{m+1} = (x_1^2 + 2t)/2. Jacobian is the identity
/// at the origin and det F' = 1 everywhere: the canonical constant-det map.
pub fn identity_like(m: usize) -> HeatMap {
    let mut comps = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut degrees = vec![0u32; m];
        degrees[i] = 1;
        comps.push(component(m, vec![poly(1.0, degrees)]));
    }
    let mut degrees = vec![0u32; m];
    degrees[0] = 2;
    comps.push(component(m, vec![poly(0.5, degrees)]));
    HeatMap::new(m, comps).expect("identity-like map is valid")
}

/// The 1-D cubic test map: F_1 = x + 0.1 (x^3 + 6xt), F_2 = (x^2 + 2t)/2.
/// det F' = 1 - 0.3 x^2 + 0.6 t, already normalized at the origin.
pub fn cubic() -> HeatMap {
    HeatMap::new(
        1,
        vec![
            component(1, vec![poly(1.0, vec![1]), poly(0.1, vec![3])]),
            component(1, vec![poly(0.5, vec![2])]),
        ],
    )
    .expect("cubic map is valid")
}

/// A 1-D map whose determinant grows along the time axis while the Jacobian
/// stays isotropic there: F_1 = v_1 + c v_3, F_2 = v_2/2 + (c/4) v_4.
/// On the t-axis F'(0, t) = (1 + 6ct) I, so the argmax of |det F'| over the
/// ball of radius r is (0, r) with M(r) = (1 + 6cr)^2.
pub fn growing_det(c: f64) -> HeatMap {
    HeatMap::new(
        1,
        vec![
            component(1, vec![poly(1.0, vec![1]), poly(c, vec![3])]),
            component(1, vec![poly(0.5, vec![2]), poly(c / 4.0, vec![4])]),
        ],
    )
    .expect("growing-det map is valid")
}

/// The cubic map with a far heat-kernel source mixed into the first
/// component; exercises normalization and kernel derivatives end to end.
pub fn cubic_with_kernel() -> HeatMap {
    HeatMap::new(
        1,
        vec![
            component(
                1,
                vec![
                    poly(1.0, vec![1]),
                    poly(0.1, vec![3]),
                    Term::Kernel {
                        coeff: 0.02,
                        source_x: vec![2.0],
                        source_t: -1.5,
                    },
                ],
            ),
            component(1, vec![poly(0.5, vec![2])]),
        ],
    )
    .expect("cubic-with-kernel map is valid")
}

/// Three kernel translates with sources at distance >= 1.25 from the
/// origin. Sources sit far enough in the past that the elapsed time t - s
/// stays well above zero on the closed unit ball, which keeps high-order
/// derivatives tame for the finite-difference oracles.
pub fn kernel_translates(m: usize) -> Vec<CaloricComponent> {
    let mut e1 = vec![0.0; m];
    e1[0] = 1.2;
    let mut diag = vec![0.0; m];
    diag[0] = -0.8;
    vec![
        component(
            m,
            vec![Term::Kernel {
                coeff: 1.0,
                source_x: vec![0.0; m],
                source_t: -2.0,
            }],
        ),
        component(
            m,
            vec![Term::Kernel {
                coeff: -0.5,
                source_x: e1,
                source_t: -1.8,
            }],
        ),
        component(
            m,
            vec![Term::Kernel {
                coeff: 2.0,
                source_x: diag,
                source_t: -2.2,
            }],
        ),
    ]
}

/// Default family for the a_m estimator: 1-D heat polynomials of degree up
/// to 6 along each axis, plus the kernel translates.
pub fn am_family(m: usize) -> Vec<CaloricComponent> {
    let mut family = Vec::new();
    for axis in 0..m {
        for n in 1..=6u32 {
            let mut degrees = vec![0u32; m];
            degrees[axis] = n;
            family.push(component(m, vec![poly(1.0, degrees)]));
        }
    }
    family.extend(kernel_translates(m));
    family
}

/// Every caloric component the crate ships, labeled; the caloricity suite
/// runs over this list.
pub fn shipped_components() -> Vec<(String, CaloricComponent)> {
    let mut out: Vec<(String, CaloricComponent)> = Vec::new();
    let mut add_map = |name: &str, map: &HeatMap| {
        for (i, c) in map.components().iter().enumerate() {
            out.push((format!("{name}[{i}]"), c.clone()));
        }
    };
    add_map("identity_like_m1", &identity_like(1));
    add_map("identity_like_m2", &identity_like(2));
    add_map("identity_like_m3", &identity_like(3));
    add_map("cubic", &cubic());
    add_map("growing_det_1", &growing_det(1.0));
    add_map("growing_det_25", &growing_det(25.0));
    add_map("cubic_with_kernel", &cubic_with_kernel());
    for (i, c) in kernel_translates(1).into_iter().enumerate() {
        out.push((format!("kernel_m1[{i}]"), c));
    }
    for (i, c) in kernel_translates(2).into_iter().enumerate() {
        out.push((format!("kernel_m2[{i}]"), c));
    }
    for (i, c) in am_family(1).into_iter().enumerate() {
        out.push((format!("am_family_m1[{i}]"), c));
    }
    out
}

/// Exact affine test map F(z) = A z; not caloric, but ideal as an oracle:
/// the chord iteration terminates in one step and the Takahashi ratio is a
/// closed form.
#[derive(Clone, Debug)]
pub struct LinearMap {
    a: Matrix,
}

impl LinearMap {
    pub fn new(a: Matrix) -> Self {
        assert!(a.n() >= 2, "need at least a 2x2 matrix");
        LinearMap { a }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }
}

impl SmoothMap for LinearMap {
    fn dim(&self) -> usize {
        self.a.n() - 1
    }

    fn eval(&self, z: &SpaceTimePoint) -> Vec<f64> {
        self.a.mul_vec(&z.coords())
    }

    fn jacobian(&self, _z: &SpaceTimePoint) -> Matrix {
        self.a.clone()
    }
}
