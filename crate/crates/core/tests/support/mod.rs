//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use magnetic_hardy::profiles::{Potential, RadialField};
use magnetic_hardy::quadform::{qform, TestFunction};
use magnetic_hardy::spectral::{assemble_mode, count_negative, Grid, ModeOperator};
use magnetic_hardy::Point;
use nalgebra::{Complex, DMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Negative eigenvalues of a tridiagonal operator by a dense symmetric eigensolver.
pub fn dense_negative_count(op: &ModeOperator) -> usize {
    let n = op.diag.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = op.diag[i];
        if i + 1 < n {
            a[(i, i + 1)] = op.offdiag[i];
            a[(i + 1, i)] = op.offdiag[i];
        }
    }
    a.symmetric_eigenvalues().iter().filter(|x| **x < 0.0).count()
}

/// `t(s)` and `g(s) = ln dt/ds` of the stretched coordinate.
pub fn t_and_g(s: f64) -> (f64, f64) {
    if s >= -1.0 {
        (s, 0.0)
    } else {
        (-(-1.0 - s).exp(), -1.0 - s)
    }
}

const G3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Negative eigenvalues of the full 2D form `∫|(i∇+A)u|² - λV|u|²` on a tensor
/// grid: P1 elements in the stretched radial coordinate, Dirichlet ends, and
/// `n_theta` (odd) angular nodes with Fourier-spectral differentiation.
pub fn polar_negative_count(field: &RadialField, v: &Potential, lambda: f64, grid: &Grid, n_theta: usize) -> (usize, f64) {
    assert!(n_theta % 2 == 1);
    let s = grid.nodes();
    let nr = s.len() - 2;
    let dim = nr * n_theta;
    let dth = TWO_PI / n_theta as f64;
    let mut d = DMatrix::<f64>::zeros(n_theta, n_theta);
    for j in 0..n_theta {
        for l in 0..n_theta {
            if j != l {
                let x = (j as f64 - l as f64) * dth;
                let sign = if (j + n_theta - l).is_multiple_of(2) { 1.0 } else { -1.0 };
                d[(j, l)] = 0.5 * sign / (0.5 * x).sin();
            }
        }
    }
    let i = Complex::new(0.0, 1.0);
    let id = d.map(|x| i * x);
    let mut h = DMatrix::<Complex<f64>>::zeros(dim, dim);
    let idx = |node: usize, j: usize| (node - 1) * n_theta + j;
    for e in 0..s.len() - 1 {
        let (a, b) = (s[e], s[e + 1]);
        let len = b - a;
        for &(x, wq) in &G3 {
            let sq = 0.5 * (a + b) + 0.5 * len * x;
            let w = 0.5 * len * wq;
            let (t, g) = t_and_g(sq);
            let alpha = field.alpha(&Point::from_s(sq)).unwrap();
            let pot = lambda * v.value(t) * (2.0 * t).exp();
            let xi = (sq - a) / len;
            let phi = [1.0 - xi, xi];
            let dphi = [-1.0 / len, 1.0 / len];
            let mut op = id.clone();
            for j in 0..n_theta {
                op[(j, j)] += Complex::new(alpha, 0.0);
            }
            let ang = op.adjoint() * &op;
            for p in 0..2 {
                for q in 0..2 {
                    let (np, nq) = (e + p, e + q);
                    if np == 0 || nq == 0 || np == s.len() - 1 || nq == s.len() - 1 {
                        continue;
                    }
                    let kin = (-g).exp() * dphi[p] * dphi[q] * w * dth;
                    let mass = g.exp() * phi[p] * phi[q] * w * dth;
                    for j in 0..n_theta {
                        h[(idx(np, j), idx(nq, j))] += Complex::new(kin - mass * pot, 0.0);
                        for l in 0..n_theta {
                            h[(idx(np, j), idx(nq, l))] += ang[(j, l)] * mass;
                        }
                    }
                }
            }
        }
    }
    let eig = h.symmetric_eigenvalues();
    let gap = eig.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    (eig.iter().filter(|x| **x < 0.0).count(), gap)
}

/// 5-point Gauss–Legendre rule on `[-1, 1]`.
pub const G5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Composite 5-point Gauss–Legendre over `[a, b]` split at `breaks`.
pub fn gauss_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], per_piece: usize) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / per_piece as f64;
        for k in 0..per_piece {
            let lo = w[0] + k as f64 * h;
            for &(x, wq) in &G5 {
                total += 0.5 * h * wq * f(lo + 0.5 * h * (1.0 + x));
            }
        }
    }
    total
}

/// `∫|(i∇ + A)u|² dx` for `u = v(ln r) e^{imθ}` in Cartesian coordinates, with
/// the Poincaré gauge `A = α(r)/r² (-y, x)` and central-difference gradients.
pub fn direct_polar_form(field: &RadialField, u: &TestFunction, n_theta: usize, per_piece: usize) -> f64 {
    let m = u.m() as f64;
    let val = |x: f64, y: f64| -> Complex<f64> {
        let r = x.hypot(y);
        let th = y.atan2(x);
        let (v, _) = u.eval(r.ln());
        Complex::new(v.re, v.im) * Complex::from_polar(1.0, m * th)
    };
    let integrand_t = |t: f64| -> f64 {
        let r = t.exp();
        let alpha = field.alpha(&Point::from_t(t)).unwrap();
        let h = 1e-6 * r;
        let mut acc = 0.0;
        for k in 0..n_theta {
            let th = TWO_PI * (k as f64 + 0.5) / n_theta as f64;
            let (x, y) = (r * th.cos(), r * th.sin());
            let u0 = val(x, y);
            let ux = (val(x + h, y) - val(x - h, y)) / (2.0 * h);
            let uy = (val(x, y + h) - val(x, y - h)) / (2.0 * h);
            let (ax, ay) = (-alpha * y / (r * r), alpha * x / (r * r));
            let i = Complex::new(0.0, 1.0);
            let cx = i * ux + u0 * ax;
            let cy = i * uy + u0 * ay;
            acc += cx.norm_sqr() + cy.norm_sqr();
        }
        acc * TWO_PI / n_theta as f64 * r * r
    };
    let (lo, hi) = u.support();
    let mut breaks = u.breaks();
    breaks.extend(field.kinks());
    gauss_composite(integrand_t, lo, hi, &breaks, per_piece)
}

/// Closed-form flux of the first example field: `b0/(γ-1) |t|^{1-γ}` for `t <= -1`.
pub fn example1_alpha(b0: f64, gamma: f64, t: f64) -> f64 {
    b0 / (gamma - 1.0) * (-t).max(1.0).powf(1.0 - gamma)
}

/// Closed-form bump flux `Φ x(3 - 3x + x²)`, `x = (r/r1)²`, capped at 1.
pub fn bump_alpha(total: f64, r1: f64, t: f64) -> f64 {
    let x = (2.0 * (t - r1.ln())).exp().min(1.0);
    total * x * (3.0 - 3.0 * x + x * x)
}

/// `∫ x^p dx` on `[a, b]`.
pub fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    if (p + 1.0).abs() < 1e-14 {
        (b / a).ln()
    } else {
        (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
    }
}

/// `‖u_α‖²` with the weight `|ln r|^{-b} r^{-2}` on `t <= -1` for the cutoff `t_cut = -k`.
pub fn probe_numerator(alpha: f64, b: f64, k: f64) -> f64 {
    let body = power_integral(2.0 * alpha - b, 1.0, k);
    // ramp: v = k^α (2k - x)/k on x = -t ∈ [k, 2k]
    let c = k.powf(2.0 * alpha - 2.0);
    let ramp = c
        * (4.0 * k * k * power_integral(-b, k, 2.0 * k) - 4.0 * k * power_integral(1.0 - b, k, 2.0 * k)
            + power_integral(2.0 - b, k, 2.0 * k));
    TWO_PI * (body + ramp)
}

/// `2π ∫|v'|² dt` of `u_α` with cutoff `-k` and closing ramp width `eps`.
pub fn probe_radial_part(alpha: f64, k: f64, eps: f64) -> f64 {
    let ramp_lo = k.powf(2.0 * alpha) / k;
    let body = alpha * alpha * power_integral(2.0 * alpha - 2.0, eps, k);
    let ramp_hi = eps.powf(2.0 * alpha) / eps;
    TWO_PI * (ramp_lo + body + ramp_hi)
}

pub fn random_field(rng: &mut StdRng) -> RadialField {
    match rng.gen_range(0..4) {
        0 => RadialField::Zero,
        1 => RadialField::bump(rng.gen_range(-1.0..1.5), rng.gen_range(0.3..3.0)),
        2 => RadialField::example1(rng.gen_range(0.1..2.0), rng.gen_range(1.1..3.0)),
        _ => RadialField::example2(rng.gen_range(0.1..2.0), rng.gen_range(1.1..3.0)),
    }
}

pub fn random_potential(rng: &mut StdRng) -> Potential {
    match rng.gen_range(0..4) {
        0 => Potential::StepWell { depth: rng.gen_range(1.0..200.0), radius: rng.gen_range(0.3..3.0) },
        1 => Potential::GaussianWell { depth: rng.gen_range(1.0..200.0), width: rng.gen_range(0.3..3.0) },
        2 => Potential::VSigma { sigma: rng.gen_range(1.1..4.0) }.scaled(rng.gen_range(1.0..500.0)),
        _ => Potential::Zero,
    }
}

/// Random mode operators whose inertia disagrees with the dense count.
pub fn dense_mismatches(seed: u64, instances: usize) -> Vec<String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for _ in 0..instances {
        let field = random_field(&mut rng);
        let v = random_potential(&mut rng);
        let n = rng.gen_range(5..=200);
        let grid = Grid::uniform_s(rng.gen_range(-8.0..-2.0), rng.gen_range(0.0..3.0), n).unwrap();
        let m = rng.gen_range(-3..=3);
        let op = assemble_mode(&field, &v, m, &grid).unwrap();
        let (a, b) = (count_negative(&op), dense_negative_count(&op));
        if a != b {
            bad.push(format!("{field:?} {v:?} m={m} n={n}: {a} vs {b}"));
        }
    }
    bad
}

/// Largest relative gap between `qform` and the Cartesian quadrature over random instances.
pub fn parseval_max_error(seed: u64, instances: usize) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = Grid::uniform_t(-5.0, 4.0, 200).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let field = match rng.gen_range(0..3) {
            0 => RadialField::Zero,
            1 => RadialField::bump(rng.gen_range(-1.0..2.0), rng.gen_range(0.5..2.0)),
            _ => RadialField::example1(rng.gen_range(0.2..1.5), rng.gen_range(1.2..2.5)),
        };
        let m = rng.gen_range(-3..=3);
        let lo = rng.gen_range(-4.0..0.0);
        let hi = lo + rng.gen_range(1.0..3.5);
        let edge = rng.gen_range(0.1..0.5) * (hi - lo);
        let u = TestFunction::mode_bump(m, lo, hi, edge).unwrap();
        let q = qform(&field, &u, &grid).unwrap().total;
        let direct = direct_polar_form(&field, &u, 16, 64);
        worst = worst.max(((q - direct) / direct).abs());
    }
    worst
}
