//! Deterministic low-discrepancy sampling of closed balls, plus a
//! golden-section coordinate polish for sampled maxima.
//!
//! The whole crate samples through this module so that every estimate is
//! reproducible from a seed: the seed selects an offset into the Halton
//! sequence, the reduction over samples is associative with index
//! tie-breaking, and the polish is a pure function of the best sample.

use rayon::prelude::*;

const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radical-inverse (Halton) value of `index` in the given prime base.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * f;
        index /= base;
        f /= base as f64;
    }
    result
}

/// Inverse standard normal CDF, Acklam's rational approximation.
/// Relative error below 1.2e-9; only used to pick sample directions.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Low-discrepancy point source for a closed ball in R^dim.
#[derive(Clone, Debug)]
pub struct BallSampler {
    dim: usize,
    center: Vec<f64>,
    radius: f64,
    base_index: u64,
}

impl BallSampler {
    /// The seed shifts the Halton subsequence; budget and seed together
    /// determine every sample exactly.
    pub fn new(center: Vec<f64>, radius: f64, seed: u64) -> Self {
        let dim = center.len();
        assert!(dim >= 1 && dim + 1 <= PRIMES.len());
        BallSampler {
            dim,
            center,
            radius,
            base_index: 1 + (seed % 0x7fff_ffff),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sample `i`; index 0 is always the center of the ball.
    pub fn point(&self, i: u64) -> Vec<f64> {
        if i == 0 {
            return self.center.clone();
        }
        let idx = self.base_index + i;
        let mut gauss = Vec::with_capacity(self.dim);
        let mut norm2 = 0.0;
        for (j, g) in (0..self.dim).map(|j| (j, inverse_normal_cdf(halton(idx, PRIMES[j])))) {
            norm2 += g * g;
            let _ = j;
            gauss.push(g);
        }
        let norm = norm2.sqrt();
        let dir: Vec<f64> = if norm < 1e-12 {
            let mut d = vec![0.0; self.dim];
            d[0] = 1.0;
            d
        } else {
            gauss.iter().map(|g| g / norm).collect()
        };
        let u = halton(idx, PRIMES[self.dim]);
        let rad = self.radius * u.powf(1.0 / self.dim as f64);
        self.center
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + rad * d)
            .collect()
    }
}

/// Result of a sampled maximization over a closed ball.
#[derive(Clone, Debug)]
pub struct MaxSearch {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Clone)]
struct Scored {
    value: f64,
    index: u64,
    point: Vec<f64>,
}

/// Pick the strictly better sample; ties go to the smaller index so the
/// reduction is associative and independent of work splitting.
fn better(a: Scored, b: Scored) -> Scored {
    if b.value > a.value || (b.value == a.value && b.index < a.index) {
        b
    } else {
        a
    }
}

/// Deterministic sampled maximum of `f` over the closed ball, refined by a
/// coordinate-wise golden-section polish around the best sample.
pub fn max_on_ball<F>(center: &[f64], radius: f64, budget: usize, seed: u64, f: F) -> MaxSearch
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sampler = BallSampler::new(center.to_vec(), radius, seed);
    let seed_score = |i: u64| {
        let p = sampler.point(i);
        let mut v = f(&p);
        if v.is_nan() {
            v = f64::NEG_INFINITY;
        }
        Scored { value: v, index: i, point: p }
    };
    let init = seed_score(0);
    let best = (1..budget as u64)
        .into_par_iter()
        .map(seed_score)
        .reduce(|| init.clone(), better);
    let (argmax, value, polish_evals) = golden_polish(&f, best.point, best.value, center, radius);
    MaxSearch {
        value,
        argmax,
        evaluations: budget + polish_evals,
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// One golden-section pass maximizing a 1-D slice; returns the best probe.
fn golden_line<G>(mut a: f64, mut b: f64, iters: usize, mut g: G) -> (f64, f64)
where
    G: FnMut(f64) -> f64,
{
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    let mut cand = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = g(x2);
        }
        let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if fx > cand.1 {
            cand = (x, fx);
        }
    }
    cand
}

/// Spherical coordinates relative to a center: radius plus dim-1 angles.
fn to_spherical(p: &[f64], center: &[f64]) -> (f64, Vec<f64>) {
    let d = p.len();
    let rel: Vec<f64> = p.iter().zip(center).map(|(a, c)| a - c).collect();
    let rho = rel.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut angles = Vec::with_capacity(d - 1);
    let mut tail2: f64 = rel.iter().map(|v| v * v).sum();
    for k in 0..d - 1 {
        let tail = tail2.max(0.0).sqrt();
        let theta = if tail == 0.0 {
            0.0
        } else if k == d - 2 {
            rel[d - 1].atan2(rel[d - 2])
        } else {
            (rel[k] / tail).clamp(-1.0, 1.0).acos()
        };
        angles.push(theta);
        tail2 -= rel[k] * rel[k];
    }
    (rho, angles)
}

fn from_spherical(rho: f64, angles: &[f64], center: &[f64]) -> Vec<f64> {
    let d = center.len();
    let mut p = center.to_vec();
    let mut sin_prod = 1.0;
    for k in 0..d - 1 {
        p[k] = center[k] + rho * sin_prod * angles[k].cos();
        sin_prod *= angles[k].sin();
    }
    p[d - 1] = center[d - 1] + rho * sin_prod;
    p
}

/// Coordinate-wise golden-section ascent inside the ball: Cartesian sweeps
/// first, then sweeps in spherical coordinates, where the ball constraint is
/// a box and boundary maxima are reachable without corner-sticking. Only
/// strictly improving moves are kept, so the result never falls below the
/// sampled starting value.
pub fn golden_polish<F>(
    f: &F,
    start: Vec<f64>,
    start_value: f64,
    center: &[f64],
    radius: f64,
) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = start.len();
    let mut best = start;
    let mut best_value = start_value;
    let mut evals = 0usize;
    let eval = |p: &[f64], evals: &mut usize| {
        *evals += 1;
        let fv = f(p);
        if fv.is_nan() {
            f64::NEG_INFINITY
        } else {
            fv
        }
    };

    let mut width = radius * 0.5;
    for _sweep in 0..4 {
        for axis in 0..dim {
            let rest: f64 = (0..dim)
                .filter(|&j| j != axis)
                .map(|j| (best[j] - center[j]) * (best[j] - center[j]))
                .sum();
            let span2 = radius * radius - rest;
            if span2 <= 0.0 {
                continue;
            }
            let span = span2.sqrt();
            let a = (center[axis] - span).max(best[axis] - width);
            let b = (center[axis] + span).min(best[axis] + width);
            if !(b > a) {
                continue;
            }
            let cand = golden_line(a, b, 48, |v| {
                let mut p = best.clone();
                p[axis] = v;
                eval(&p, &mut evals)
            });
            if cand.1 > best_value {
                best[axis] = cand.0;
                best_value = cand.1;
            }
        }
        width *= 0.25;
    }

    if dim >= 2 {
        let (rho0, mut angles) = to_spherical(&best, center);
        if rho0 > 0.0 {
            let mut rho = rho0;
            let mut angle_width = std::f64::consts::PI / 2.0;
            for _sweep in 0..4 {
                for k in 0..angles.len() {
                    let cand = golden_line(
                        angles[k] - angle_width,
                        angles[k] + angle_width,
                        48,
                        |th| {
                            let mut a = angles.clone();
                            a[k] = th;
                            eval(&from_spherical(rho, &a, center), &mut evals)
                        },
                    );
                    if cand.1 > best_value {
                        angles[k] = cand.0;
                        best_value = cand.1;
                        best = from_spherical(rho, &angles, center);
                    }
                }
                let cand = golden_line(0.0, radius, 48, |r| {
                    eval(&from_spherical(r, &angles, center), &mut evals)
                });
                if cand.1 > best_value {
                    rho = cand.0;
                    best_value = cand.1;
                    best = from_spherical(rho, &angles, center);
                }
                angle_width *= 0.25;
            }
        }
    }

    // Guard against rounding pushing the point a hair outside the ball.
    let norm2: f64 = best
        .iter()
        .zip(center)
        .map(|(p, c)| (p - c) * (p - c))
        .sum();
    if norm2 > radius * radius {
        let shrink = radius / norm2.sqrt() * (1.0 - 1e-15);
        for (p, c) in best.iter_mut().zip(center) {
            *p = c + (*p - c) * shrink;
        }
        let fv = eval(&best, &mut evals);
        best_value = fv;
    }
    (best, best_value, evals)
}
