//! Finite-difference residual checks of the structural identities satisfied
//! by the tangential and radial quantities, evaluated on closed-form
//! solution families (never on discrete solver output: third differences of
//! a solved field would turn its O(h^2) error into O(1) residual noise).
//!
//! The derivative quantities themselves come from the closed-form gradient;
//! the outer derivatives in each identity are centered finite differences of
//! those composite functions, so every residual converges at second order.
//!
//! Sample coordinates are snapped to the lattice of multiples of 5*2^-20 and
//! the difference spacings are multiples of 5*2^-9. On that lattice every
//! stencil coordinate, and every product with the combination weights 3/5
//! and 4/5, is exact in f64, which is what makes the `p = 0` residuals come
//! out identically zero rather than rounding-floor sized.

use rand::Rng;
use rand::SeedableRng;

use super::analytic::AnalyticFamily;
use super::fitted_order;

/// Lattice quantum for sample coordinates.
pub const LATTICE_Q: f64 = 5.0 / (1 << 20) as f64;
/// Default difference spacings (multiples of the lattice quantum).
pub const DEFAULT_SPACINGS: [f64; 3] = [
    5.0 / (1 << 9) as f64,
    5.0 / (1 << 10) as f64,
    5.0 / (1 << 11) as f64,
];

const CLOUD_SEED: u64 = 0x5eed_2d15;

/// Identity-residual convergence record: L-infinity residual per spacing
/// over a fixed sample cloud, plus the fitted order when meaningful.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub identity: String,
    pub spacings: Vec<f64>,
    pub linf: Vec<f64>,
    pub fitted_order: Option<f64>,
}

impl ResidualReport {
    fn new(identity: &str, spacings: &[f64], linf: Vec<f64>) -> Self {
        let fitted_order = fitted_order(spacings, &linf);
        ResidualReport {
            identity: identity.to_string(),
            spacings: spacings.to_vec(),
            linf,
            fitted_order,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.linf.iter().cloned().fold(0.0, f64::max)
    }
}

fn snap(x: f64) -> f64 {
    (x / LATTICE_Q).round() * LATTICE_Q
}

#[inline]
fn shifted<const D: usize>(x: &[f64; D], axis: usize, t: f64) -> [f64; D] {
    let mut y = *x;
    y[axis] += t;
    y
}

#[inline]
fn d1<const D: usize>(f: &impl Fn(&[f64; D]) -> f64, x: &[f64; D], axis: usize, h: f64) -> f64 {
    (f(&shifted(x, axis, h)) - f(&shifted(x, axis, -h))) / (2.0 * h)
}

#[inline]
fn lap<const D: usize>(f: &impl Fn(&[f64; D]) -> f64, x: &[f64; D], h: f64) -> f64 {
    let c = f(x);
    let mut acc = 0.0;
    for axis in 0..D {
        acc += f(&shifted(x, axis, h)) - 2.0 * c + f(&shifted(x, axis, -h));
    }
    acc / (h * h)
}

/// Sample cloud in the annulus, snapped to the exactness lattice.
fn annulus_cloud(fam: &AnalyticFamily, count: usize) -> Vec<[f64; 2]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(CLOUD_SEED);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (rng.gen_range(fam.r_lo * fam.r_lo..fam.r_hi * fam.r_hi)).sqrt();
        let x = [snap(r * th.cos()), snap(r * th.sin())];
        let rr = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if rr > fam.r_lo && rr < fam.r_hi {
            pts.push(x);
        }
    }
    pts
}

/// Sample cloud in the spherical shell, snapped to the exactness lattice.
fn shell_cloud(fam: &AnalyticFamily, count: usize) -> Vec<[f64; 3]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(CLOUD_SEED ^ 3);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let v = [
            rng.gen_range(-1.0..1.0f64),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n < 1e-2 {
            continue;
        }
        let r = rng.gen_range(fam.r_lo..fam.r_hi);
        let x = [snap(v[0] / n * r), snap(v[1] / n * r), snap(v[2] / n * r)];
        let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if rr > fam.r_lo && rr < fam.r_hi {
            pts.push(x);
        }
    }
    pts
}

/// Residual of the combination identity in its a-multiplied form at one
/// point:
///
///   a F_ii - c1 (grad a . grad F) - c2 a (a_2 F_1 - a_1 F_2),
///
/// with `c1 = (b^2 a^2 - al^2)/(b^2 a^2 + al^2)` and
/// `c2 = 2 al b / (b^2 a^2 + al^2)`. With `(al, b) = (1, 0)` this is the
/// tangential identity `a T_ii + a_i T_i`, and with `(0, 1)` the radial one
/// `a R_ii - a_i R_i`.
pub fn combination_residual_at(
    fam: &AnalyticFamily,
    x: &[f64; 2],
    alpha: f64,
    beta: f64,
    h: f64,
) -> f64 {
    let a = fam.a(x);
    let ga = fam.grad_a(x);
    let f = |q: &[f64; 2]| {
        let gu = fam.grad_u(q);
        let t = -q[1] * gu[0] + q[0] * gu[1];
        let r = fam.a(q) * (q[0] * gu[0] + q[1] * gu[1]);
        alpha * t + beta * r
    };
    let denom = beta * beta * a * a + alpha * alpha;
    let c1 = (beta * beta * a * a - alpha * alpha) / denom;
    let c2 = 2.0 * alpha * beta / denom;
    let f1 = d1(&f, x, 0, h);
    let f2 = d1(&f, x, 1, h);
    a * lap(&f, x, h) - c1 * (ga[0] * f1 + ga[1] * f2) - c2 * a * (ga[1] * f1 - ga[0] * f2)
}

/// Residuals of the first-derivative coupling identities at one point,
/// `(lhs - rhs)` for
///   a_1 R_1 + a_2 R_2 = a (a_2 T_1 - a_1 T_2)
///   a (a_1 T_1 + a_2 T_2) = -a_2 R_1 + a_1 R_2.
pub fn coupling_residuals_at(fam: &AnalyticFamily, x: &[f64; 2], h: f64) -> (f64, f64) {
    let a = fam.a(x);
    let ga = fam.grad_a(x);
    let t = |q: &[f64; 2]| {
        let gu = fam.grad_u(q);
        -q[1] * gu[0] + q[0] * gu[1]
    };
    let r = |q: &[f64; 2]| {
        let gu = fam.grad_u(q);
        fam.a(q) * (q[0] * gu[0] + q[1] * gu[1])
    };
    let t1 = d1(&t, x, 0, h);
    let t2 = d1(&t, x, 1, h);
    let r1 = d1(&r, x, 0, h);
    let r2 = d1(&r, x, 1, h);
    let first = ga[0] * r1 + ga[1] * r2 - a * (ga[1] * t1 - ga[0] * t2);
    let second = a * (ga[0] * t1 + ga[1] * t2) + ga[1] * r1 - ga[0] * r2;
    (first, second)
}

/// 2D residual suite: the two second-order identities, the two coupling
/// identities, and the combination identity for three weight pairs,
/// each reported as an L-infinity over the sample cloud per spacing.
pub fn identity_residuals_2d(
    fam: &AnalyticFamily,
    spacings: &[f64],
    samples: usize,
) -> Vec<ResidualReport> {
    assert_eq!(fam.dimension, 2);
    let cloud = annulus_cloud(fam, samples);
    let pairs = [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)];

    let mut tangential = Vec::new();
    let mut radial = Vec::new();
    let mut coupling_a = Vec::new();
    let mut coupling_b = Vec::new();
    let mut combos: Vec<Vec<f64>> = vec![Vec::new(); pairs.len()];
    for &h in spacings {
        let mut worst = [0.0f64; 4];
        let mut worst_combo = vec![0.0f64; pairs.len()];
        for x in &cloud {
            worst[0] = worst[0].max(combination_residual_at(fam, x, 1.0, 0.0, h).abs());
            worst[1] = worst[1].max(combination_residual_at(fam, x, 0.0, 1.0, h).abs());
            let (ca, cb) = coupling_residuals_at(fam, x, h);
            worst[2] = worst[2].max(ca.abs());
            worst[3] = worst[3].max(cb.abs());
            for (i, &(al, be)) in pairs.iter().enumerate() {
                worst_combo[i] =
                    worst_combo[i].max(combination_residual_at(fam, x, al, be, h).abs());
            }
        }
        tangential.push(worst[0]);
        radial.push(worst[1]);
        coupling_a.push(worst[2]);
        coupling_b.push(worst[3]);
        for (i, w) in worst_combo.into_iter().enumerate() {
            combos[i].push(w);
        }
    }

    let mut reports = vec![
        ResidualReport::new("tangential_second_order", spacings, tangential),
        ResidualReport::new("radial_second_order", spacings, radial),
        ResidualReport::new("coupling_first", spacings, coupling_a),
        ResidualReport::new("coupling_second", spacings, coupling_b),
    ];
    for (i, linf) in combos.into_iter().enumerate() {
        let (al, be) = pairs[i];
        reports.push(ResidualReport::new(
            &format!("combination_{al}_{be}"),
            spacings,
            linf,
        ));
    }
    reports
}

/// Antisymmetric pairwise rotation quantity `T(j,k) = -x_k u_j + x_j u_k`.
fn pair_quantity(fam: &AnalyticFamily, q: &[f64; 3], j: usize, k: usize) -> f64 {
    let gu = fam.grad_u(q);
    -q[k] * gu[j] + q[j] * gu[k]
}

/// Residual of the n-dimensional tangential identity for one pair (j,k):
/// `a T_ii + a_i T_i`.
pub fn nd_tangential_residual_at(
    fam: &AnalyticFamily,
    x: &[f64; 3],
    j: usize,
    k: usize,
    h: f64,
) -> f64 {
    let a = fam.a(x);
    let ga = fam.grad_a(x);
    let f = |q: &[f64; 3]| pair_quantity(fam, q, j, k);
    let mut adv = 0.0;
    for i in 0..3 {
        adv += ga[i] * d1(&f, x, i, h);
    }
    a * lap(&f, x, h) + adv
}

/// Residuals of the remaining n-dimensional identities at one point, with
/// `R = a sum_k x_k u_k` and `n = 3`:
/// - radial: `a R_ii - a_i R_i - (n-2) a a_i u_i`
/// - pairwise: `-a_k R_j + a_j R_k - a sum_i a_i T(j,k)_i` (max over pairs)
/// - trace: `sum_j a_j R_j + (n-2) a' R / |x|
///           - (a/2) sum_{j,k} (a_k T(j,k)_j - a_j T(j,k)_k)`.
pub fn nd_radial_pairwise_trace_at(fam: &AnalyticFamily, x: &[f64; 3], h: f64) -> (f64, f64, f64) {
    let n = 3.0;
    let a = fam.a(x);
    let ga = fam.grad_a(x);
    let gu = fam.grad_u(x);
    let rfun = |q: &[f64; 3]| {
        let g = fam.grad_u(q);
        fam.a(q) * (q[0] * g[0] + q[1] * g[1] + q[2] * g[2])
    };
    let dr = [d1(&rfun, x, 0, h), d1(&rfun, x, 1, h), d1(&rfun, x, 2, h)];

    let mut adv = 0.0;
    let mut source = 0.0;
    for i in 0..3 {
        adv += ga[i] * dr[i];
        source += ga[i] * gu[i];
    }
    let radial = a * lap(&rfun, x, h) - adv - (n - 2.0) * a * source;

    let mut pairwise: f64 = 0.0;
    let mut trace_rhs = 0.0;
    for j in 0..3 {
        for k in 0..3 {
            if j == k {
                continue;
            }
            let f = |q: &[f64; 3]| pair_quantity(fam, q, j, k);
            let dj = d1(&f, x, j, h);
            let dk = d1(&f, x, k, h);
            trace_rhs += ga[k] * dj - ga[j] * dk;
            if j < k {
                let mut rhs = 0.0;
                for i in 0..3 {
                    rhs += ga[i] * d1(&f, x, i, h);
                }
                pairwise = pairwise.max((-ga[k] * dr[j] + ga[j] * dr[k] - a * rhs).abs());
            }
        }
    }
    let rad = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let trace = adv + (n - 2.0) * fam.a_radial_deriv(rad) * rfun(x) / rad - a / 2.0 * trace_rhs;
    (radial, pairwise, trace)
}

/// 3D residual suite: the tangential identity (max over pairs j<k), the
/// radial identity with its (n-2) source, the pairwise coupling identity,
/// and the trace identity.
pub fn identity_residuals_nd(
    fam: &AnalyticFamily,
    spacings: &[f64],
    samples: usize,
) -> Vec<ResidualReport> {
    assert_eq!(fam.dimension, 3);
    let cloud = shell_cloud(fam, samples);
    let mut tang = Vec::new();
    let mut radial = Vec::new();
    let mut pairwise = Vec::new();
    let mut trace = Vec::new();
    for &h in spacings {
        let mut w = [0.0f64; 4];
        for x in &cloud {
            for (j, k) in [(0, 1), (0, 2), (1, 2)] {
                w[0] = w[0].max(nd_tangential_residual_at(fam, x, j, k, h).abs());
            }
            let (r, p, t) = nd_radial_pairwise_trace_at(fam, x, h);
            w[1] = w[1].max(r.abs());
            w[2] = w[2].max(p.abs());
            w[3] = w[3].max(t.abs());
        }
        tang.push(w[0]);
        radial.push(w[1]);
        pairwise.push(w[2]);
        trace.push(w[3]);
    }
    vec![
        ResidualReport::new("nd_tangential_second_order", spacings, tang),
        ResidualReport::new("nd_radial_second_order", spacings, radial),
        ResidualReport::new("nd_pairwise_coupling", spacings, pairwise),
        ResidualReport::new("nd_trace_coupling", spacings, trace),
    ]
}
