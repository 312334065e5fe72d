//! First Chern class of a compatible structure on the flat torus.
//!
//! Compatible structures of a flat torus are, in a g-orthonormal frame,
//! left multiplications `L_n` (or right multiplications `R_n`) by a unit
//! imaginary quaternion `n(x)`. The pointwise 2-form is
//! `γ_pq = (1/8π) ω(∇_p J, ∇_q J)` with `ω(A, B) = g^{cd} ω_ab A^a_c B^b_d`
//! and `ω_ab = -(gJ)_ab`. For `J = L_n` this is `(1/2π) n·(∂_p n × ∂_q n)`, so
//! the period over a coordinate 2-torus is twice the degree of `n` there.
//!
//! Periods are computed on the lattice from the fiber vector `n`: each
//! plaquette contributes the signed solid angle of its two spherical
//! triangles, which makes the period an integer on every grid. The plain
//! Riemann sum of `γ` is kept as `quadrature_periods`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::acs::{frame, validate, CompatibleJField, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::field::{EndoField, TwoForm, TwoFormField, TWO_FORM_PAIRS};
use crate::geometry::Derivatives;
use crate::linalg::{pairwise_sum, quaternion_left, quaternion_right, Mat4};
use crate::metric::MetricField;

/// Radius of the cell-centered disc carrying a degree map.
pub const DEGREE_MAP_RADIUS: f64 = 0.45;

/// Fiber value outside the disc; `L` of it is `J₀`.
const OUTER: [f64; 3] = [1.0, 0.0, 0.0];

/// A smooth map of the unit 2-torus to the sphere with prescribed degree,
/// constant `(1, 0, 0)` outside a disc of radius [`DEGREE_MAP_RADIUS`]
/// around `(½, ½)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeMap {
    pub degree: i32,
}

impl DegreeMap {
    pub fn new(degree: i32) -> Self {
        Self { degree }
    }

    /// Value at torus coordinates `(u, v)` (any reals; reduced mod 1).
    pub fn eval(&self, u: f64, v: f64) -> Vector3<f64> {
        let outer = Vector3::new(OUTER[0], OUTER[1], OUTER[2]);
        if self.degree == 0 {
            return outer;
        }
        let x = u - u.floor() - 0.5;
        let y = v - v.floor() - 0.5;
        let q = x * x + y * y;
        let r2 = DEGREE_MAP_RADIUS * DEGREE_MAP_RADIUS;
        if q >= r2 {
            return outer;
        }
        // w = c z^d / s(|z|²) with s flat at the disc boundary, then the
        // inverse stereographic projection sending w = ∞ to the outer value.
        let s = (1.0 - r2 / (r2 - q)).exp();
        let c = (2.0 / DEGREE_MAP_RADIUS).powi(self.degree.abs());
        let (mut re, mut im) = (1.0, 0.0);
        // the chart reverses orientation, so positive degrees use conj(z)
        let conj = if self.degree > 0 { -1.0 } else { 1.0 };
        for _ in 0..self.degree.unsigned_abs() {
            let t = re * x - im * y * conj;
            im = re * y * conj + im * x;
            re = t;
        }
        let (wr, wi) = (c * re / s, c * im / s);
        let w2 = wr * wr + wi * wi;
        if !w2.is_finite() {
            return outer;
        }
        Vector3::new(w2 - 1.0, 2.0 * wr, 2.0 * wi) / (w2 + 1.0)
    }
}

/// Fiber map `n(x) = m(x_p, w·x)` on the 4-torus, where `m` is a degree map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereMap {
    pub base: DegreeMap,
    /// Axis supplying the first torus coordinate.
    pub axis: usize,
    /// Integer weights of the second torus coordinate (zero at `axis`).
    pub weights: [i32; 4],
}

impl SphereMap {
    /// Realizes the period vector `2·degrees` (plane order 01, 02, 03, 12, 13, 23)
    /// when all nonzero planes share one axis.
    pub fn from_degrees(degrees: &[i32; 6]) -> Result<Self> {
        let nonzero: Vec<usize> = (0..6).filter(|&k| degrees[k] != 0).collect();
        if nonzero.is_empty() {
            return Ok(Self { base: DegreeMap::new(0), axis: 0, weights: [0; 4] });
        }
        let axis = (0..4)
            .find(|&p| {
                nonzero.iter().all(|&k| {
                    let (a, b) = TWO_FORM_PAIRS[k];
                    a == p || b == p
                })
            })
            .ok_or_else(|| {
                Error::UnrealizableSeed(format!(
                    "degrees {degrees:?}: nonzero planes do not share an axis"
                ))
            })?;
        let g = nonzero.iter().fold(0i32, |acc, &k| gcd(acc, degrees[k].abs()));
        let mut weights = [0i32; 4];
        for &k in &nonzero {
            let (a, b) = TWO_FORM_PAIRS[k];
            // the (a, b) Jacobian of (x_axis, w·x) is w_b if axis = a, else -w_a
            if a == axis {
                weights[b] = degrees[k] / g;
            } else {
                weights[a] = -degrees[k] / g;
            }
        }
        Ok(Self { base: DegreeMap::new(g), axis, weights })
    }

    pub fn eval(&self, x: [f64; 4]) -> Vector3<f64> {
        let v: f64 = (0..4).map(|a| self.weights[a] as f64 * x[a]).sum();
        self.base.eval(x[self.axis], v)
    }

    /// Degree of the map on each coordinate 2-torus, in plane order.
    pub fn degrees(&self) -> [i32; 6] {
        std::array::from_fn(|k| {
            let (a, b) = TWO_FORM_PAIRS[k];
            let jac = if a == self.axis {
                self.weights[b]
            } else if b == self.axis {
                -self.weights[a]
            } else {
                0
            };
            self.base.degree * jac
        })
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The compatible structure `P^{-1} L_{n(x)} P` of a fiber map on a constant metric.
pub fn fiber_structure<F>(metric: &MetricField, n: F) -> Result<CompatibleJField>
where
    F: Fn([f64; 4]) -> Vector3<f64> + Sync,
{
    let (g, _) = metric.require_constant("a fiber-map seed")?;
    let (p, p_inv) = frame(g);
    let grid = metric.grid();
    let field = EndoField::from_fn(grid, |c| {
        let v = n(grid.position(c));
        p_inv * quaternion_left(&(v / v.norm())) * p
    });
    validate(field, metric, DEFAULT_TOL)
}

/// Seed with Chern periods `2·degrees` (plane order 01, 02, 03, 12, 13, 23).
pub fn sphere_map_seed(degrees: &[i32; 6], metric: &MetricField) -> Result<CompatibleJField> {
    let map = SphereMap::from_degrees(degrees)?;
    fiber_structure(metric, |x| map.eval(x))
}

/// The 2-form `γ` and its periods over the six coordinate 2-tori.
#[derive(Clone, Debug)]
pub struct ChernForm {
    pub gamma: TwoFormField,
    /// Lattice periods (integer on every grid for a resolved field).
    pub periods: TwoForm,
    /// Riemann sums of `γ`; converge to `periods` as `O(h²)`.
    pub quadrature_periods: TwoForm,
}

/// Which half of the fiber a structure lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberKind {
    /// `L_n`, orientation-compatible.
    Left,
    /// `R_n`, orientation-reversing.
    Right,
}

/// Fiber vector of `Ĵ` in the orthonormal frame, with its kind.
pub fn fiber_vector(j_hat: &Mat4) -> (FiberKind, Vector3<f64>) {
    let coeff = |f: fn(&Vector3<f64>) -> Mat4| {
        Vector3::from_fn(|a, _| {
            let mut e = Vector3::zeros();
            e[a] = 1.0;
            0.25 * f(&e).component_mul(j_hat).sum()
        })
    };
    let left = coeff(quaternion_left);
    let right = coeff(quaternion_right);
    if left.norm_squared() >= right.norm_squared() {
        (FiberKind::Left, left)
    } else {
        (FiberKind::Right, right)
    }
}

/// Signed area of the spherical triangle `(a, b, c)`.
pub fn solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    2.0 * a.dot(&b.cross(c)).atan2(1.0 + a.dot(b) + b.dot(c) + c.dot(a))
}

/// `γ`, lattice periods and quadrature periods on a constant metric.
pub fn chern_form(j: &CompatibleJField, metric: &MetricField) -> Result<ChernForm> {
    let (g, g_inv) = metric.require_constant("the Chern form")?;
    let grid = j.grid();
    grid.check_same(&metric.grid())?;
    let d = Derivatives::new(j, metric)?;
    let scale = 1.0 / (8.0 * PI);
    let gamma = TwoFormField::from_fn(grid, |c| {
        let i = grid.index(c);
        let omega = -(g * j[i]);
        let first = d.first_all(c);
        std::array::from_fn(|k| {
            let (p, q) = TWO_FORM_PAIRS[k];
            scale * (first[p].transpose() * omega * first[q] * g_inv).trace()
        })
    });
    let cell = grid.cell_volume();
    let quadrature_periods: TwoForm = std::array::from_fn(|k| {
        let terms: Vec<f64> = gamma.values().iter().map(|w| w[k] * cell).collect();
        pairwise_sum(&terms)
    });
    let periods = lattice_periods(j, metric)?;
    Ok(ChernForm { gamma, periods, quadrature_periods })
}

/// Lattice periods alone (cheaper than [`chern_form`]).
pub fn lattice_periods(j: &CompatibleJField, metric: &MetricField) -> Result<TwoForm> {
    let (g, _) = metric.require_constant("the Chern periods")?;
    let grid = j.grid();
    grid.check_same(&metric.grid())?;
    let (p, p_inv) = frame(g);
    let fibers: Vec<(FiberKind, Vector3<f64>)> = j
        .values()
        .par_iter()
        .map(|m| {
            let (kind, v) = fiber_vector(&(p * m * p_inv));
            (kind, v / v.norm())
        })
        .collect();
    let kind = fibers[0].0;
    if let Some(bad) = fibers.iter().position(|f| f.0 != kind) {
        return Err(Error::InvalidArgument(format!(
            "structure changes fiber component at grid point {:?}",
            grid.coords(bad)
        )));
    }
    let sign = match kind {
        FiberKind::Left => 1.0,
        FiberKind::Right => -1.0,
    };
    let per_point: Vec<TwoForm> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            std::array::from_fn(|k| {
                let (a, b) = TWO_FORM_PAIRS[k];
                let n00 = &fibers[i].1;
                let n10 = &fibers[grid.shift(c, a, 1)].1;
                let n01 = &fibers[grid.shift(c, b, 1)].1;
                let mut o = [0isize; 4];
                o[a] = 1;
                o[b] = 1;
                let n11 = &fibers[grid.offset(c, o)].1;
                solid_angle(n00, n10, n11) + solid_angle(n00, n11, n01)
            })
        })
        .collect();
    let slices = (grid.n() * grid.n()) as f64;
    Ok(std::array::from_fn(|k| {
        let terms: Vec<f64> = per_point.iter().map(|w| w[k]).collect();
        sign * pairwise_sum(&terms) / (2.0 * PI * slices)
    }))
}

/// Largest change of each period along a sequence of period vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftReport {
    pub per_plane: TwoForm,
    pub max_drift: f64,
}

/// Drift of periods relative to the first entry.
pub fn period_drift(periods: &[TwoForm]) -> Result<DriftReport> {
    let first = periods
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty period trajectory".into()))?;
    let mut per_plane = [0.0f64; 6];
    for p in periods {
        for k in 0..6 {
            per_plane[k] = per_plane[k].max((p[k] - first[k]).abs());
        }
    }
    let max_drift = per_plane.iter().cloned().fold(0.0, f64::max);
    Ok(DriftReport { per_plane, max_drift })
}

/// Period drift along a sequence of structures.
pub fn chern_trajectory(trace: &[CompatibleJField], metric: &MetricField) -> Result<DriftReport> {
    let periods = trace
        .iter()
        .map(|j| lattice_periods(j, metric))
        .collect::<Result<Vec<_>>>()?;
    period_drift(&periods)
}

/// Degree of a fiber map on the `(a, b)` coordinate 2-torus through `base`,
/// from `samples²` lattice triangles.
pub fn sampled_degree<F>(n: F, plane: (usize, usize), base: [f64; 4], samples: usize) -> f64
where
    F: Fn([f64; 4]) -> Vector3<f64>,
{
    let (a, b) = plane;
    let at = |i: usize, k: usize| {
        let mut x = base;
        x[a] += i as f64 / samples as f64;
        x[b] += k as f64 / samples as f64;
        let v = n(x);
        v / v.norm()
    };
    let mut total = Vec::with_capacity(samples * samples);
    for i in 0..samples {
        for k in 0..samples {
            let (n00, n10, n11, n01) = (at(i, k), at(i + 1, k), at(i + 1, k + 1), at(i, k + 1));
            total.push(solid_angle(&n00, &n10, &n11) + solid_angle(&n00, &n11, &n01));
        }
    }
    pairwise_sum(&total) / (4.0 * PI)
}
