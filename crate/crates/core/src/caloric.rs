//! Exact solutions of the heat equation and the maps built from them.
//!
//! Components are finite combinations of two closed-form families: tensor
//! products of 1-D heat polynomials (one factor per spatial variable, all
//! sharing the time variable) and translated heat kernels whose sources lie
//! strictly outside the closed unit ball. Both families are closed under
//! differentiation, so Jacobians and second derivatives come out in closed
//! form; finite differences are used only as test oracles.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{Matrix, SINGULAR_DET_THRESHOLD};

/// Largest supported spatial dimension; sampling in m+1 dimensions is
/// exponential in m, so the crate targets desk scale.
pub const MAX_DIMENSION: usize = 8;

/// Highest mixed-derivative order the artifact needs (Jacobian, second
/// derivatives, one remainder check).
pub const MAX_DERIVATIVE_ORDER: u32 = 3;

/// Largest total polynomial degree of a single tensor term. Keeps the
/// integer coefficient bookkeeping of the symbolic residual well inside i128.
pub const MAX_POLY_DEGREE: u32 = 16;

const NORMALIZATION_TOL: f64 = 1e-12;

/// A point (x, t) with x in R^m and time t; the domain of every map here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        SpaceTimePoint { x, t }
    }

    pub fn origin(m: usize) -> Self {
        SpaceTimePoint {
            x: vec![0.0; m],
            t: 0.0,
        }
    }

    /// Spatial dimension m.
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Coordinate j, with j = m addressing t.
    pub fn coord(&self, j: usize) -> f64 {
        if j < self.x.len() {
            self.x[j]
        } else {
            self.t
        }
    }

    /// Flat coordinates (x_1, ..., x_m, t).
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        c.push(self.t);
        c
    }

    pub fn from_coords(coords: &[f64]) -> Self {
        let (x, t) = coords.split_at(coords.len() - 1);
        SpaceTimePoint {
            x: x.to_vec(),
            t: t[0],
        }
    }

    /// Euclidean norm of (x, t) in R^{m+1}.
    pub fn norm(&self) -> f64 {
        (self.x.iter().map(|v| v * v).sum::<f64>() + self.t * self.t).sqrt()
    }

    pub fn dist(&self, other: &SpaceTimePoint) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.x.iter().zip(&other.x) {
            s += (a - b) * (a - b);
        }
        s += (self.t - other.t) * (self.t - other.t);
        s.sqrt()
    }
}

/// A multiindex over (x_1, ..., x_m, t); the last entry is the time order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndex {
    orders: Vec<u32>,
}

impl MultiIndex {
    /// `orders` has length m+1.
    pub fn new(orders: Vec<u32>) -> Self {
        assert!(orders.len() >= 2, "multiindex needs at least two entries");
        MultiIndex { orders }
    }

    /// Unit multiindex along `axis` in an (m+1)-dimensional domain.
    pub fn unit(m: usize, axis: usize) -> Self {
        let mut orders = vec![0; m + 1];
        orders[axis] = 1;
        MultiIndex { orders }
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    /// Total order |k|.
    pub fn order(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// k! = k_1! ... k_{m+1}!.
    pub fn factorial(&self) -> f64 {
        self.orders
            .iter()
            .map(|&k| (1..=k).map(|i| i as f64).product::<f64>())
            .product()
    }

    pub fn spatial(&self) -> &[u32] {
        &self.orders[..self.orders.len() - 1]
    }

    pub fn time_order(&self) -> u32 {
        self.orders[self.orders.len() - 1]
    }
}

/// One weighted basis term of a caloric component.
///
/// `Poly` is the tensor product of 1-D heat polynomials, one per spatial
/// variable (degree 0 factors are constant 1); `Kernel` is the fundamental
/// solution translated to a source strictly outside the closed unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Term {
    Poly { coeff: f64, degrees: Vec<u32> },
    Kernel { coeff: f64, source_x: Vec<f64>, source_t: f64 },
}

impl Term {
    pub fn coeff(&self) -> f64 {
        match self {
            Term::Poly { coeff, .. } | Term::Kernel { coeff, .. } => *coeff,
        }
    }

    pub fn with_coeff(&self, c: f64) -> Term {
        let mut t = self.clone();
        match &mut t {
            Term::Poly { coeff, .. } | Term::Kernel { coeff, .. } => *coeff = c,
        }
        t
    }

    fn validate(&self, m: usize) -> Result<()> {
        match self {
            Term::Poly { degrees, .. } => {
                if degrees.len() != m {
                    return Err(CoreError::TermShapeMismatch {
                        m,
                        reason: format!("poly term has {} degrees", degrees.len()),
                    });
                }
                let total: u32 = degrees.iter().sum();
                if total > MAX_POLY_DEGREE {
                    return Err(CoreError::PolyDegreeTooHigh(total, MAX_POLY_DEGREE));
                }
            }
            Term::Kernel {
                source_x, source_t, ..
            } => {
                if source_x.len() != m {
                    return Err(CoreError::TermShapeMismatch {
                        m,
                        reason: format!("kernel source has {} spatial coordinates", source_x.len()),
                    });
                }
                let norm = (source_x.iter().map(|v| v * v).sum::<f64>()
                    + source_t * source_t)
                    .sqrt();
                if !(norm > 1.0) {
                    return Err(CoreError::KernelSourceInsideBall(norm));
                }
            }
        }
        Ok(())
    }
}

/// 1-D heat polynomial v_n(x, t) = n! sum_k x^{n-2k} t^k / (k! (n-2k)!).
///
/// v_0 = 1, v_1 = x, v_2 = x^2 + 2t, v_3 = x^3 + 6xt, ...; each satisfies
/// the 1-D heat equation exactly, and d/dx v_n = n v_{n-1}.
pub fn heat_polynomial_1d(n: u32, x: f64, t: f64) -> f64 {
    let mut coeff = 1.0f64;
    let mut sum = x.powi(n as i32);
    let mut k = 0u32;
    while 2 * (k + 1) <= n {
        let a = (n - 2 * k) as f64;
        let b = (n - 2 * k - 1) as f64;
        coeff *= a * b / ((k + 1) as f64);
        k += 1;
        sum += coeff * x.powi((n - 2 * k) as i32) * t.powi(k as i32);
    }
    sum
}

/// Fundamental solution of the heat equation in m spatial dimensions:
/// (4 pi t)^{-m/2} exp(-|x|^2 / 4t) for t > 0, zero for t <= 0.
///
/// Evaluation at the singularity (0, 0) is rejected.
pub fn heat_kernel(x: &[f64], t: f64) -> Result<f64> {
    if t == 0.0 && x.iter().all(|&c| c == 0.0) {
        return Err(CoreError::KernelSingularity);
    }
    Ok(kernel_value(x, t))
}

fn kernel_value(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let m = x.len() as f64;
    let q = x.iter().map(|v| v * v).sum::<f64>() / (4.0 * t);
    if q >= 700.0 {
        return 0.0;
    }
    (-q).exp() * (4.0 * PI * t).powf(-m / 2.0)
}

/// Falling factorial n (n-1) ... (n-j+1); zero when j > n.
fn falling(n: u32, j: u32) -> f64 {
    if j > n {
        return 0.0;
    }
    let mut p = 1.0;
    for i in 0..j {
        p *= (n - i) as f64;
    }
    p
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Enumerate compositions of `total` into `parts` nonnegative entries.
fn for_each_composition(total: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(buf: &mut Vec<u32>, remaining: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
        if buf.len() + 1 == parts {
            buf.push(remaining);
            f(buf);
            buf.pop();
            return;
        }
        for v in 0..=remaining {
            buf.push(v);
            rec(buf, remaining - v, parts, f);
            buf.pop();
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, total, parts, f);
}

/// Physicists' Hermite polynomial H_n.
fn hermite_phys(n: u32, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let mut h0 = 1.0;
            let mut h1 = 2.0 * x;
            for k in 1..n {
                let h2 = 2.0 * x * h1 - 2.0 * (k as f64) * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

/// d^n/dx^n of the 1-D kernel factor (4 pi t)^{-1/2} exp(-x^2/4t), t > 0.
fn h1_derivative(n: u32, x: f64, t: f64) -> f64 {
    let s = (4.0 * t).sqrt();
    let xi = x / s;
    if xi * xi >= 700.0 {
        return 0.0;
    }
    let base = (-xi * xi).exp() / (s * PI.sqrt());
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    sign * hermite_phys(n, xi) * s.powi(-(n as i32)) * base
}

/// Pure spatial mixed derivative of the m-dimensional kernel (t > 0).
fn kernel_spatial_derivative(xi: &[f64], tau: f64, orders: &[u32]) -> f64 {
    let mut p = 1.0;
    for (o, v) in orders.iter().zip(xi) {
        p *= h1_derivative(*o, *v, tau);
        if p == 0.0 {
            return 0.0;
        }
    }
    p
}

fn poly_term_value(degrees: &[u32], z: &SpaceTimePoint) -> f64 {
    degrees
        .iter()
        .zip(&z.x)
        .map(|(&n, &x)| heat_polynomial_1d(n, x, z.t))
        .product()
}

fn poly_term_derivative(degrees: &[u32], k: &MultiIndex, z: &SpaceTimePoint) -> f64 {
    let m = degrees.len();
    let kx = k.spatial();
    let kt = k.time_order();
    let mut spatial_factor = 1.0;
    let mut reduced = vec![0u32; m];
    for i in 0..m {
        if kx[i] > degrees[i] {
            return 0.0;
        }
        spatial_factor *= falling(degrees[i], kx[i]);
        reduced[i] = degrees[i] - kx[i];
    }
    if kt == 0 {
        let mut p = spatial_factor;
        for i in 0..m {
            p *= heat_polynomial_1d(reduced[i], z.x[i], z.t);
        }
        return p;
    }
    // Time derivatives distribute over the factors: each d/dt acting on a
    // 1-D heat polynomial equals its second x-derivative, so
    // d^kt/dt^kt prod v_{a_i} = sum over compositions j of kt of
    // multinomial(kt; j) prod (a_i)_(2 j_i) v_{a_i - 2 j_i}.
    let kt_fact = factorial(kt);
    let mut total = 0.0;
    for_each_composition(kt, m, &mut |j| {
        let mut w = kt_fact;
        for &ji in j {
            w /= factorial(ji);
        }
        for i in 0..m {
            let drop = 2 * j[i];
            if drop > reduced[i] {
                w = 0.0;
                break;
            }
            w *= falling(reduced[i], drop) * heat_polynomial_1d(reduced[i] - drop, z.x[i], z.t);
            if w == 0.0 {
                break;
            }
        }
        total += w;
    });
    spatial_factor * total
}

fn kernel_term_value(source_x: &[f64], source_t: f64, z: &SpaceTimePoint) -> f64 {
    let xi: Vec<f64> = z.x.iter().zip(source_x).map(|(a, b)| a - b).collect();
    kernel_value(&xi, z.t - source_t)
}

fn kernel_term_derivative(
    source_x: &[f64],
    source_t: f64,
    k: &MultiIndex,
    z: &SpaceTimePoint,
) -> f64 {
    let tau = z.t - source_t;
    if tau <= 0.0 {
        return 0.0;
    }
    let m = source_x.len();
    let xi: Vec<f64> = z.x.iter().zip(source_x).map(|(a, b)| a - b).collect();
    let kx = k.spatial();
    let kt = k.time_order();
    if kt == 0 {
        return kernel_spatial_derivative(&xi, tau, kx);
    }
    // The kernel is caloric away from its source, so each time derivative is
    // a Laplacian: expand Delta^{kt} into pure spatial derivatives.
    let kt_fact = factorial(kt);
    let mut total = 0.0;
    for_each_composition(kt, m, &mut |j| {
        let mut w = kt_fact;
        for &ji in j {
            w /= factorial(ji);
        }
        let orders: Vec<u32> = (0..m).map(|i| kx[i] + 2 * j[i]).collect();
        total += w * kernel_spatial_derivative(&xi, tau, &orders);
    });
    total
}

/// Order-independent sum: canonicalize by total order, then Neumaier.
fn stable_sum(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// A finite combination of caloric basis terms; an exact solution of the
/// heat equation on (a neighbourhood of) the closed unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct CaloricComponent {
    m: usize,
    terms: Vec<Term>,
}

impl CaloricComponent {
    pub fn new(m: usize, terms: Vec<Term>) -> Result<Self> {
        if m < 1 || m > MAX_DIMENSION {
            return Err(CoreError::DimensionOutOfRange(m));
        }
        for t in &terms {
            t.validate(m)?;
        }
        Ok(CaloricComponent { m, terms })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Value at z; deterministic under any permutation of the term list.
    pub fn evaluate(&self, z: &SpaceTimePoint) -> f64 {
        let values = self
            .terms
            .iter()
            .map(|term| match term {
                Term::Poly { coeff, degrees } => coeff * poly_term_value(degrees, z),
                Term::Kernel {
                    coeff,
                    source_x,
                    source_t,
                } => coeff * kernel_term_value(source_x, *source_t, z),
            })
            .collect();
        stable_sum(values)
    }

    /// Exact mixed partial of order |k| <= 3 at z.
    pub fn derivative(&self, k: &MultiIndex, z: &SpaceTimePoint) -> Result<f64> {
        if k.order() > MAX_DERIVATIVE_ORDER {
            return Err(CoreError::DerivativeOrderTooHigh(
                k.order(),
                MAX_DERIVATIVE_ORDER,
            ));
        }
        let values = self
            .terms
            .iter()
            .map(|term| match term {
                Term::Poly { coeff, degrees } => coeff * poly_term_derivative(degrees, k, z),
                Term::Kernel {
                    coeff,
                    source_x,
                    source_t,
                } => coeff * kernel_term_derivative(source_x, *source_t, k, z),
            })
            .collect();
        Ok(stable_sum(values))
    }

    pub fn scale(&self, c: f64) -> CaloricComponent {
        CaloricComponent {
            m: self.m,
            terms: self
                .terms
                .iter()
                .map(|t| t.with_coeff(c * t.coeff()))
                .collect(),
        }
    }

    /// The parabolic rescaling u(r x, r^2 t), expressed exactly in the same
    /// basis: heat-polynomial terms pick up r^degree, kernel translates move
    /// their source to (y/r, s/r^2) with an r^{-m} prefactor.
    pub fn parabolic_rescale(&self, r: f64) -> Result<CaloricComponent> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "r",
                reason: format!("rescale factor must be positive and finite, got {r}"),
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|term| match term {
                Term::Poly { coeff, degrees } => {
                    let total: u32 = degrees.iter().sum();
                    Term::Poly {
                        coeff: coeff * r.powi(total as i32),
                        degrees: degrees.clone(),
                    }
                }
                Term::Kernel {
                    coeff,
                    source_x,
                    source_t,
                } => Term::Kernel {
                    coeff: coeff * r.powi(-(self.m as i32)),
                    source_x: source_x.iter().map(|y| y / r).collect(),
                    source_t: source_t / (r * r),
                },
            })
            .collect();
        CaloricComponent::new(self.m, terms)
    }

    /// The kernel terms alone, if any. Polynomial terms are checked for
    /// caloricity symbolically; the finite-difference oracle runs on this
    /// part, where no symbolic route exists.
    pub fn kernel_part(&self) -> Option<CaloricComponent> {
        let terms: Vec<Term> = self
            .terms
            .iter()
            .filter(|t| matches!(t, Term::Kernel { .. }))
            .cloned()
            .collect();
        if terms.is_empty() {
            None
        } else {
            Some(CaloricComponent {
                m: self.m,
                terms,
            })
        }
    }

    /// Largest absolute integer coefficient of Delta u - d/dt u over the
    /// polynomial terms, computed symbolically in integer arithmetic.
    /// Exactly zero for tensor heat-polynomial terms; kernel terms are not
    /// polynomial and are skipped (their residual is checked by the
    /// finite-difference oracle in the test suites).
    pub fn symbolic_heat_residual(&self) -> f64 {
        let mut worst: i128 = 0;
        for term in &self.terms {
            if let Term::Poly { degrees, .. } = term {
                let monos = poly_term_monomials(degrees);
                let mut residual: BTreeMap<(Vec<u32>, u32), i128> = BTreeMap::new();
                for ((exps, tp), c) in &monos {
                    for i in 0..exps.len() {
                        if exps[i] >= 2 {
                            let mut e = exps.clone();
                            e[i] -= 2;
                            *residual.entry((e, *tp)).or_insert(0) +=
                                c * (exps[i] as i128) * ((exps[i] - 1) as i128);
                        }
                    }
                    if *tp >= 1 {
                        *residual.entry((exps.clone(), tp - 1)).or_insert(0) -=
                            c * (*tp as i128);
                    }
                }
                for v in residual.values() {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst as f64
    }
}

/// Expand a tensor heat-polynomial term into integer-coefficient monomials
/// keyed by (spatial exponents, time exponent).
fn poly_term_monomials(degrees: &[u32]) -> BTreeMap<(Vec<u32>, u32), i128> {
    let m = degrees.len();
    let mut acc: BTreeMap<(Vec<u32>, u32), i128> = BTreeMap::new();
    acc.insert((vec![0; m], 0), 1);
    for (i, &n) in degrees.iter().enumerate() {
        // v_n(x_i, t) = sum_k c_k x_i^{n-2k} t^k with integer c_k.
        let mut factors: Vec<(u32, u32, i128)> = Vec::new();
        let mut c: i128 = 1;
        factors.push((n, 0, 1));
        let mut k = 0u32;
        while 2 * (k + 1) <= n {
            let a = (n - 2 * k) as i128;
            let b = (n - 2 * k - 1) as i128;
            c = c * a * b / ((k + 1) as i128);
            k += 1;
            factors.push((n - 2 * k, k, c));
        }
        let mut next: BTreeMap<(Vec<u32>, u32), i128> = BTreeMap::new();
        for ((exps, tp), coeff) in &acc {
            for &(xe, te, fc) in &factors {
                let mut e = exps.clone();
                e[i] += xe;
                *next.entry((e, tp + te)).or_insert(0) += coeff * fc;
            }
        }
        acc = next;
    }
    acc
}

/// Anything the samplers and solvers can evaluate and differentiate once:
/// heat maps, and exact affine test maps that sit outside the caloric class.
pub trait SmoothMap: Sync {
    /// Spatial dimension m; domain and range are (m+1)-dimensional.
    fn dim(&self) -> usize;
    fn eval(&self, z: &SpaceTimePoint) -> Vec<f64>;
    fn jacobian(&self, z: &SpaceTimePoint) -> Matrix;
}

/// An (m+1)-vector of caloric components; the normalized objects the
/// certificates are issued for.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatMap {
    m: usize,
    components: Vec<CaloricComponent>,
    normalized: bool,
}

impl HeatMap {
    pub fn new(m: usize, components: Vec<CaloricComponent>) -> Result<Self> {
        Self::with_flag(m, components, false)
    }

    fn with_flag(m: usize, components: Vec<CaloricComponent>, normalized: bool) -> Result<Self> {
        if m < 1 || m > MAX_DIMENSION {
            return Err(CoreError::DimensionOutOfRange(m));
        }
        if components.len() != m + 1 {
            return Err(CoreError::ComponentCountMismatch {
                m,
                expected: m + 1,
                found: components.len(),
            });
        }
        if let Some(c) = components.iter().find(|c| c.m() != m) {
            return Err(CoreError::TermShapeMismatch {
                m,
                reason: format!("component built for dimension {}", c.m()),
            });
        }
        Ok(HeatMap {
            m,
            components,
            normalized,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn components(&self) -> &[CaloricComponent] {
        &self.components
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn evaluate(&self, z: &SpaceTimePoint) -> Vec<f64> {
        self.components.iter().map(|c| c.evaluate(z)).collect()
    }

    /// Jacobian matrix (dF_i/dx_j) with x_{m+1} = t.
    pub fn jacobian_at(&self, z: &SpaceTimePoint) -> Matrix {
        let n = self.m + 1;
        let mut j = Matrix::zeros(n);
        for col in 0..n {
            let k = MultiIndex::unit(self.m, col);
            for row in 0..n {
                j[(row, col)] = self.components[row]
                    .derivative(&k, z)
                    .expect("first-order derivative is always supported");
            }
        }
        j
    }

    pub fn scale(&self, c: f64) -> HeatMap {
        HeatMap {
            m: self.m,
            components: self.components.iter().map(|cc| cc.scale(c)).collect(),
            normalized: false,
        }
    }

    /// Rescale so that |det F'(0)| = 1. Maps already within 1e-12 of the
    /// normalization are returned unchanged, which makes the operation
    /// exactly idempotent.
    pub fn normalize(&self) -> Result<HeatMap> {
        let d = self
            .jacobian_at(&SpaceTimePoint::origin(self.m))
            .det()
            .abs();
        if d <= SINGULAR_DET_THRESHOLD {
            return Err(CoreError::SingularAtOrigin(d));
        }
        if (d - 1.0).abs() <= NORMALIZATION_TOL {
            let mut out = self.clone();
            out.normalized = true;
            return Ok(out);
        }
        let scale = d.powf(-1.0 / (self.m as f64 + 1.0));
        let mut out = self.scale(scale);
        out.normalized = true;
        Ok(out)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = HeatMapDoc {
            m: self.m,
            components: self.components.iter().map(|c| c.terms().to_vec()).collect(),
            normalized: self.normalized,
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json_str(s: &str) -> Result<HeatMap> {
        let doc: HeatMapDoc = serde_json::from_str(s)?;
        let components = doc
            .components
            .into_iter()
            .map(|terms| CaloricComponent::new(doc.m, terms))
            .collect::<Result<Vec<_>>>()?;
        HeatMap::with_flag(doc.m, components, doc.normalized)
    }
}

impl SmoothMap for HeatMap {
    fn dim(&self) -> usize {
        self.m
    }

    fn eval(&self, z: &SpaceTimePoint) -> Vec<f64> {
        self.evaluate(z)
    }

    fn jacobian(&self, z: &SpaceTimePoint) -> Matrix {
        self.jacobian_at(z)
    }
}

/// On-disk document shape: `m`, per-component term lists, normalized flag.
#[derive(Serialize, Deserialize)]
struct HeatMapDoc {
    m: usize,
    components: Vec<Vec<Term>>,
    normalized: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(m: usize, terms: Vec<Term>) -> CaloricComponent {
        CaloricComponent::new(m, terms).unwrap()
    }

    #[test]
    fn kernel_basics() {
        // (4 pi)^{-1/2} at x = 0, t = 1.
        let k = heat_kernel(&[0.0], 1.0).unwrap();
        assert!((k - 0.28209479177387814).abs() < 1e-15);
        // Vanishes for t <= 0.
        assert_eq!(heat_kernel(&[3.0], -1.0).unwrap(), 0.0);
        assert_eq!(heat_kernel(&[3.0], 0.0).unwrap(), 0.0);
        // Even in x.
        assert_eq!(
            heat_kernel(&[2.0], 1.0).unwrap(),
            heat_kernel(&[-2.0], 1.0).unwrap()
        );
        // The singularity is rejected.
        assert!(matches!(
            heat_kernel(&[0.0, 0.0], 0.0),
            Err(CoreError::KernelSingularity)
        ));
    }

    #[test]
    fn heat_polynomial_values() {
        assert_eq!(heat_polynomial_1d(0, 3.7, -2.0), 1.0);
        assert_eq!(heat_polynomial_1d(1, 3.7, -2.0), 3.7);
        assert_eq!(heat_polynomial_1d(2, 1.0, 1.0), 3.0);
        assert_eq!(heat_polynomial_1d(3, 1.0, 1.0), 7.0);
        assert_eq!(heat_polynomial_1d(4, 1.0, 1.0), 25.0); // 1 + 12 + 12
    }

    #[test]
    fn heat_polynomial_satisfies_heat_equation_symbolically() {
        for n in 0..=8 {
            let c = v(1, vec![Term::Poly { coeff: 1.0, degrees: vec![n] }]);
            assert_eq!(c.symbolic_heat_residual(), 0.0);
        }
        // Tensor products in higher dimension too.
        let c = v(
            3,
            vec![Term::Poly {
                coeff: -0.25,
                degrees: vec![3, 2, 4],
            }],
        );
        assert_eq!(c.symbolic_heat_residual(), 0.0);
    }

    #[test]
    fn evaluate_examples() {
        let c = v(1, vec![Term::Poly { coeff: 1.0, degrees: vec![2] }]);
        assert_eq!(c.evaluate(&SpaceTimePoint::new(vec![1.0], 0.5)), 2.0);
        let zero = v(1, vec![Term::Poly { coeff: 0.0, degrees: vec![4] }]);
        assert_eq!(zero.evaluate(&SpaceTimePoint::new(vec![0.3], -0.2)), 0.0);
    }

    #[test]
    fn kernel_term_matches_direct_kernel() {
        // Source at distance 2 from the origin; grid over the unit ball.
        let c = v(
            2,
            vec![Term::Kernel {
                coeff: 1.0,
                source_x: vec![1.2, 0.0],
                source_t: -1.6,
            }],
        );
        for &(a, b, t) in &[
            (0.0, 0.0, 0.0),
            (0.5, -0.4, 0.3),
            (-0.7, 0.1, -0.6),
            (0.2, 0.9, 0.2),
        ] {
            let z = SpaceTimePoint::new(vec![a, b], t);
            let direct = heat_kernel(&[a - 1.2, b - 0.0], t + 1.6).unwrap();
            assert_eq!(c.evaluate(&z), direct);
        }
    }

    #[test]
    fn derivative_examples() {
        let c = v(1, vec![Term::Poly { coeff: 1.0, degrees: vec![2] }]);
        let z = SpaceTimePoint::new(vec![0.4], -0.9);
        let dxx = c.derivative(&MultiIndex::new(vec![2, 0]), &z).unwrap();
        assert_eq!(dxx, 2.0);
        let dt = c.derivative(&MultiIndex::new(vec![0, 1]), &z).unwrap();
        assert_eq!(dt, 2.0);
        // Heat residual is exactly zero.
        assert_eq!(dxx - dt, 0.0);
        // Orders above 3 are rejected.
        assert!(matches!(
            c.derivative(&MultiIndex::new(vec![4, 0]), &z),
            Err(CoreError::DerivativeOrderTooHigh(4, 3))
        ));
    }

    #[test]
    fn kernel_derivative_matches_finite_difference() {
        let c = v(
            1,
            vec![Term::Kernel {
                coeff: 1.0,
                source_x: vec![1.5],
                source_t: -0.7,
            }],
        );
        let k = MultiIndex::new(vec![1, 0]);
        let h = 1e-5;
        for &(x, t) in &[(0.3, 0.2), (-0.8, 0.5), (0.0, -0.1), (0.6, -0.5)] {
            let exact = c.derivative(&k, &SpaceTimePoint::new(vec![x], t)).unwrap();
            let fd = (c.evaluate(&SpaceTimePoint::new(vec![x + h], t))
                - c.evaluate(&SpaceTimePoint::new(vec![x - h], t)))
                / (2.0 * h);
            let scale = exact.abs().max(1e-3);
            assert!(
                (exact - fd).abs() / scale < 1e-6,
                "exact {exact} vs fd {fd} at ({x}, {t})"
            );
        }
    }

    #[test]
    fn kernel_time_derivative_equals_laplacian() {
        // The closed-form time derivative must agree with the closed-form
        // Laplacian, since the kernel is caloric away from its source.
        let c = v(
            2,
            vec![Term::Kernel {
                coeff: 0.8,
                source_x: vec![-1.1, 0.9],
                source_t: -0.4,
            }],
        );
        let z = SpaceTimePoint::new(vec![0.2, -0.5], 0.4);
        let dt = c.derivative(&MultiIndex::new(vec![0, 0, 1]), &z).unwrap();
        let dxx = c.derivative(&MultiIndex::new(vec![2, 0, 0]), &z).unwrap();
        let dyy = c.derivative(&MultiIndex::new(vec![0, 2, 0]), &z).unwrap();
        assert!((dt - (dxx + dyy)).abs() < 1e-14 * dt.abs().max(1.0));
    }

    #[test]
    fn kernel_source_inside_ball_rejected() {
        let r = CaloricComponent::new(
            1,
            vec![Term::Kernel {
                coeff: 1.0,
                source_x: vec![0.5],
                source_t: 0.5,
            }],
        );
        assert!(matches!(r, Err(CoreError::KernelSourceInsideBall(_))));
    }

    #[test]
    fn evaluation_is_permutation_invariant() {
        let terms = vec![
            Term::Poly { coeff: 0.1, degrees: vec![3] },
            Term::Poly { coeff: -7.25, degrees: vec![1] },
            Term::Kernel { coeff: 3.33, source_x: vec![1.5], source_t: 0.1 },
            Term::Poly { coeff: 1e-7, degrees: vec![5] },
        ];
        let a = v(1, terms.clone());
        let mut rev = terms;
        rev.reverse();
        let b = v(1, rev);
        let z = SpaceTimePoint::new(vec![0.77], -0.31);
        assert_eq!(a.evaluate(&z).to_bits(), b.evaluate(&z).to_bits());
        let k = MultiIndex::new(vec![1, 1]);
        assert_eq!(
            a.derivative(&k, &z).unwrap().to_bits(),
            b.derivative(&k, &z).unwrap().to_bits()
        );
    }

    #[test]
    fn parabolic_rescale_is_exact() {
        let c = v(
            1,
            vec![
                Term::Poly { coeff: 0.4, degrees: vec![3] },
                Term::Kernel { coeff: 1.1, source_x: vec![1.3], source_t: -0.8 },
            ],
        );
        let r = 0.6;
        let scaled = c.parabolic_rescale(r).unwrap();
        assert_eq!(scaled.symbolic_heat_residual(), 0.0);
        for &(x, t) in &[(0.9, -0.3), (-0.5, 0.7), (0.1, 0.1)] {
            let lhs = scaled.evaluate(&SpaceTimePoint::new(vec![x], t));
            let rhs = c.evaluate(&SpaceTimePoint::new(vec![r * x], r * r * t));
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs().max(1.0));
        }
    }

    fn identity_like(m: usize) -> HeatMap {
        let mut comps = Vec::new();
        for i in 0..m {
            let mut degrees = vec![0; m];
            degrees[i] = 1;
            comps.push(v(m, vec![Term::Poly { coeff: 1.0, degrees }]));
        }
        let mut degrees = vec![0; m];
        degrees[0] = 2;
        comps.push(v(m, vec![Term::Poly { coeff: 0.5, degrees }]));
        HeatMap::new(m, comps).unwrap()
    }

    #[test]
    fn jacobian_of_identity_like_map() {
        let f = identity_like(2);
        let j = f.jacobian_at(&SpaceTimePoint::origin(2));
        for i in 0..3 {
            for jj in 0..3 {
                assert_eq!(j[(i, jj)], if i == jj { 1.0 } else { 0.0 });
            }
        }
        // Scaling the map scales the Jacobian.
        let j2 = f.scale(3.0).jacobian_at(&SpaceTimePoint::new(vec![0.2, -0.1], 0.3));
        let j1 = f.jacobian_at(&SpaceTimePoint::new(vec![0.2, -0.1], 0.3));
        for i in 0..3 {
            for jj in 0..3 {
                assert!((j2[(i, jj)] - 3.0 * j1[(i, jj)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalize_scales_by_det_root() {
        // m = 1 with det F'(0) = 16: components scale by 16^{-1/2} = 1/4.
        let f = HeatMap::new(
            1,
            vec![
                v(1, vec![Term::Poly { coeff: 4.0, degrees: vec![1] }]),
                v(1, vec![Term::Poly { coeff: 2.0, degrees: vec![2] }]),
            ],
        )
        .unwrap();
        let n = f.normalize().unwrap();
        assert!((n.components()[0].terms()[0].coeff() - 1.0).abs() < 1e-14);
        let d = n.jacobian_at(&SpaceTimePoint::origin(1)).det().abs();
        assert!((d - 1.0).abs() < 1e-12);
        // Idempotent, bit for bit.
        let nn = n.normalize().unwrap();
        assert_eq!(n, nn);
    }

    #[test]
    fn normalize_rejects_singular_origin() {
        let f = HeatMap::new(
            1,
            vec![
                v(1, vec![Term::Poly { coeff: 1.0, degrees: vec![1] }]),
                v(1, vec![Term::Poly { coeff: 1.0, degrees: vec![1] }]),
            ],
        )
        .unwrap();
        assert!(matches!(f.normalize(), Err(CoreError::SingularAtOrigin(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = HeatMap::new(
            1,
            vec![
                v(
                    1,
                    vec![
                        Term::Poly { coeff: 0.1, degrees: vec![3] },
                        Term::Poly { coeff: 1.0, degrees: vec![1] },
                    ],
                ),
                v(
                    1,
                    vec![
                        Term::Poly { coeff: 0.5, degrees: vec![2] },
                        Term::Kernel {
                            coeff: -1.0 / 3.0,
                            source_x: vec![1.25 + 1e-13],
                            source_t: 0.7,
                        },
                    ],
                ),
            ],
        )
        .unwrap();
        let s = f.to_json_string().unwrap();
        let back = HeatMap::from_json_str(&s).unwrap();
        assert_eq!(f, back);
        // And the decimal text itself is stable.
        assert_eq!(s, back.to_json_string().unwrap());
    }
}
