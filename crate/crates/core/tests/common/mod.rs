//! Reference computations for the integration tests, written without the
//! library's operators so they can check them.
#![allow(dead_code)]

use std::f64::consts::PI;

use bhacs::acs::{project_polar, CompatibleJField};
use bhacs::energy::battery_field;
use bhacs::linalg::quaternion_left;
use bhacs::{EndoField, Grid, Mat4, MetricField};
use nalgebra::Vector3;

/// A non-diagonal constant metric used alongside the flat one.
pub fn skewed_metric(grid: Grid) -> MetricField {
    #[rustfmt::skip]
    let g = Mat4::new(
        1.4, 0.2, 0.0, 0.1,
        0.2, 1.1, 0.1, 0.0,
        0.0, 0.1, 0.8, 0.05,
        0.1, 0.0, 0.05, 1.3,
    );
    MetricField::constant(grid, g).unwrap()
}

fn wrap(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).rem_euclid(n as isize) as usize
}

fn idx(n: usize, c: [usize; 4]) -> usize {
    ((c[0] * n + c[1]) * n + c[2]) * n + c[3]
}

/// Centered difference along `axis`, by explicit index arithmetic.
fn central(values: &[Mat4], n: usize, axis: usize) -> Vec<Mat4> {
    let h = 1.0 / n as f64;
    let mut out = vec![Mat4::zeros(); values.len()];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let x = [a, b, c, d];
                    let mut up = x;
                    let mut down = x;
                    up[axis] = wrap(x[axis], 1, n);
                    down[axis] = wrap(x[axis], -1, n);
                    out[idx(n, x)] = (values[idx(n, up)] - values[idx(n, down)]) / (2.0 * h);
                }
            }
        }
    }
    out
}

/// `g^{pq} D_p D_q f` with `D` the centered difference.
pub fn naive_laplacian(field: &EndoField, g_inv: &Mat4) -> Vec<Mat4> {
    let n = field.grid().n();
    let first: Vec<Vec<Mat4>> = (0..4).map(|q| central(field.values(), n, q)).collect();
    let mut out = vec![Mat4::zeros(); field.values().len()];
    for p in 0..4 {
        for q in 0..4 {
            if g_inv[(p, q)] == 0.0 {
                continue;
            }
            let second = central(&first[q], n, p);
            for (o, s) in out.iter_mut().zip(&second) {
                *o += s * g_inv[(p, q)];
            }
        }
    }
    out
}

/// `∫ |ΔJ|²` by plain loops: `tr(g X g⁻¹ Xᵗ)` weighted by `√det g · h⁴`.
pub fn naive_e2(field: &EndoField, g: &Mat4) -> f64 {
    let g_inv = g.try_inverse().unwrap();
    let n = field.grid().n();
    let weight = g.determinant().sqrt() / (n as f64).powi(4);
    naive_laplacian(field, &g_inv)
        .iter()
        .map(|x| (g * x * g_inv * x.transpose()).trace() * weight)
        .sum()
}

/// `Σ tr(g A g⁻¹ Bᵗ) √det g h⁴`.
pub fn naive_inner(a: &[Mat4], b: &[Mat4], g: &Mat4, n: usize) -> f64 {
    let g_inv = g.try_inverse().unwrap();
    let weight = g.determinant().sqrt() / (n as f64).powi(4);
    a.iter().zip(b).map(|(x, y)| (g * x * g_inv * y.transpose()).trace() * weight).sum()
}

/// Principal square root by the coupled Denman–Beavers iteration.
pub fn denman_beavers_sqrt(x: &Mat4) -> Mat4 {
    let mut y = *x;
    let mut z = Mat4::identity();
    for _ in 0..100 {
        let y_inv = y.try_inverse().unwrap();
        let z_inv = z.try_inverse().unwrap();
        let next = (y + z_inv) * 0.5;
        z = (z + y_inv) * 0.5;
        let change = (next - y).norm();
        y = next;
        if change <= 1e-15 * y.norm() {
            break;
        }
    }
    y
}

/// Spectral radius of `id + A²` for skew `A`: the largest `|1 - λ|` over
/// eigenvalues `λ` of `-A²`.
pub fn series_radius(a: &Mat4) -> f64 {
    let x = -(a * a);
    let sym = (x + x.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    eig.iter().map(|l| (1.0 - l).abs()).fold(0.0, f64::max)
}

/// `√(-A²) = Σ_l C(½, l) (-(id + A²))^l`, summed until the terms vanish.
pub fn binomial_sqrt(a: &Mat4) -> Mat4 {
    let step = -(Mat4::identity() + a * a);
    let mut power = Mat4::identity();
    let mut coeff = 1.0;
    let mut sum = Mat4::identity();
    for l in 1..100_000 {
        coeff *= (0.5 - (l - 1) as f64) / l as f64;
        power *= step;
        let term = power * coeff;
        sum += term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    sum
}

/// Signed solid angle of a spherical triangle (Van Oosterom and Strackee).
pub fn triangle_solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Fiber vector of a flat-metric structure `J = L_n`: the image of `e₀`.
pub fn fiber_of(j: &Mat4) -> Vector3<f64> {
    let v = Vector3::new(j[(1, 0)], j[(2, 0)], j[(3, 0)]);
    v / v.norm()
}

/// Degree of the fiber map of a flat-metric field on the coordinate plane
/// `(a, b)` through grid point `base`.
pub fn slice_degree(field: &EndoField, plane: (usize, usize), base: [usize; 4]) -> f64 {
    let n = field.grid().n();
    let (a, b) = plane;
    let at = |i: usize, k: usize| {
        let mut c = base;
        c[a] = i % n;
        c[b] = k % n;
        fiber_of(&field.values()[idx(n, c)])
    };
    let mut total = 0.0;
    for i in 0..n {
        for k in 0..n {
            let (p, q, r, s) = (at(i, k), at(i + 1, k), at(i + 1, k + 1), at(i, k + 1));
            total += triangle_solid_angle(&p, &q, &r) + triangle_solid_angle(&p, &r, &s);
        }
    }
    total / (4.0 * PI)
}

/// Eigenvalue of the wide Laplacian on `cos(2π k·x)`: `-Σ sin²(2π k_a h)/h²`.
pub fn wide_symbol(k: [f64; 4], h: f64) -> f64 {
    -k.iter().map(|&ka| (2.0 * PI * ka * h).sin().powi(2)).sum::<f64>() / (h * h)
}

/// Smooth compatible field: polar projection of `J₀ + amp·T` for a smooth
/// battery field `T` normalized to pointwise norm at most one.
pub fn smooth_compatible(metric: &MetricField, amp: f64, seed: u64) -> CompatibleJField {
    let grid = metric.grid();
    let j0 = bhacs::acs::standard_structure(metric).unwrap();
    let t = battery_field(grid, seed, 0);
    let amp = amp / t.max_norm();
    let m = j0.field().zip_map(&t, |_, a, b| a + b * amp);
    project_polar(&m, metric).unwrap()
}

fn wide_laplacian_2d(n: usize, f: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let h = 1.0 / n as f64;
    let w = 1.0 / (4.0 * h * h);
    let at = |a: usize, b: usize| (a % n) * n + (b % n);
    (0..n * n)
        .map(|k| {
            let (a, b) = (k / n, k % n);
            (f[at(a + 2, b)] + f[at(a + n - 2, b)] + f[at(a, b + 2)] + f[at(a, b + n - 2)] - f[k] * 4.0) * w
        })
        .collect()
}

/// Discrete critical point of `∫ |Δn|²` among maps of the `n×n` torus into
/// the sphere, started from a degree-one bubble and relaxed by projected
/// gradient descent until the tangential gradient is below `tol`.
pub fn relaxed_bubble(n: usize, tol: f64) -> Vec<Vector3<f64>> {
    let h = 1.0 / n as f64;
    let radius = 0.45;
    let mut f: Vec<Vector3<f64>> = (0..n * n)
        .map(|k| {
            let (x, y) = ((k / n) as f64 * h - 0.5, (k % n) as f64 * h - 0.5);
            let s = ((x * x + y * y).sqrt() / radius).min(1.0);
            let polar = PI * (1.0 - s * s * (3.0 - 2.0 * s));
            let azimuth = y.atan2(x);
            Vector3::new(polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos())
        })
        .collect();
    // stable for the wide stencil, whose squared symbol is at most 4/h⁴
    let tau = 0.225 * h.powi(4);
    for _ in 0..2_000_000 {
        let bilap = wide_laplacian_2d(n, &wide_laplacian_2d(n, &f));
        let mut worst: f64 = 0.0;
        for (v, b) in f.iter_mut().zip(&bilap) {
            let g = b - *v * v.dot(b);
            worst = worst.max(g.norm());
            *v = (*v - g * tau).normalize();
        }
        if worst < tol {
            break;
        }
    }
    f
}

/// The bubble as a structure on the 4-torus, `J = L_{n(x₀, x₁)}`.
pub fn bubble_structure(metric: &MetricField, bubble: &[Vector3<f64>]) -> EndoField {
    let grid = metric.grid();
    let n = grid.n();
    EndoField::from_fn(grid, |c| quaternion_left(&bubble[c[0] * n + c[1]]))
}
