//! The manifold of metric-compatible almost complex structures.
//!
//! A field `J` is compatible with `g` when `J² = -id` and `gJ` is
//! antisymmetric at every point. Tangent vectors `S` satisfy
//! `JS + SJ = 0` and `gS + S^t g = 0`. Two retractions are provided: the
//! Cayley conjugation `(id - tS) J (id - tS)^{-1}` and the polar projection
//! `Q^{-1} A` of an arbitrary field onto the manifold.

use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::EndoField;
use crate::grid::Grid;
use crate::linalg::{inf_norm, orthonormal_frame, quaternion_left, sym_eigen, Mat4};
use crate::metric::{adjoint_g, MetricField};

/// Default tolerance for pointwise constraint checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default degeneracy threshold of the polar projection.
pub const SIGMA_MIN: f64 = 0.01;

/// Largest admissible `|tS|_∞` for the Cayley retraction.
pub const CAYLEY_STEP_LIMIT: f64 = 0.5;

/// Pointwise constraint defects of a candidate structure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Violation {
    /// `|J² + id|_F`
    pub square: f64,
    /// `|J^t g J - g|_F`
    pub metric: f64,
    /// `|gJ + J^t g|_F`
    pub skew: f64,
}

impl Violation {
    pub fn worst(&self) -> f64 {
        self.square.max(self.metric).max(self.skew)
    }
}

pub fn point_violation(j: &Mat4, g: &Mat4) -> Violation {
    Violation {
        square: (j * j + Mat4::identity()).norm(),
        metric: (j.transpose() * g * j - g).norm(),
        skew: (g * j + j.transpose() * g).norm(),
    }
}

/// An endomorphism field validated against the compatibility constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibleJField {
    field: EndoField,
    max_square_violation: f64,
    max_metric_violation: f64,
}

impl CompatibleJField {
    pub fn max_square_violation(&self) -> f64 {
        self.max_square_violation
    }

    pub fn max_metric_violation(&self) -> f64 {
        self.max_metric_violation
    }

    pub fn field(&self) -> &EndoField {
        &self.field
    }

    pub fn into_field(self) -> EndoField {
        self.field
    }
}

impl Deref for CompatibleJField {
    type Target = EndoField;
    fn deref(&self) -> &EndoField {
        &self.field
    }
}

/// A field of tangent vectors to the constraint manifold at some `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    field: EndoField,
}

impl TangentField {
    /// Accept `s` as tangent at `j` if both tangent residuals are below
    /// `tol * max(1, |S|)` at every point.
    pub fn checked(j: &CompatibleJField, s: EndoField, metric: &MetricField, tol: f64) -> Result<Self> {
        j.grid().check_same(&s.grid())?;
        let (worst_idx, residual) = (0..s.grid().len())
            .into_par_iter()
            .map(|i| {
                let r = tangent_residual(&j[i], &s[i], metric.g(i));
                (i, r / s[i].norm().max(1.0))
            })
            .reduce(|| (0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if residual > tol {
            return Err(Error::NotTangent {
                worst_point: s.grid().coords(worst_idx),
                residual,
            });
        }
        Ok(Self { field: s })
    }

    pub fn field(&self) -> &EndoField {
        &self.field
    }

    pub fn into_field(self) -> EndoField {
        self.field
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            field: self.field.scale(s),
        }
    }
}

impl Deref for TangentField {
    type Target = EndoField;
    fn deref(&self) -> &EndoField {
        &self.field
    }
}

/// `max(|JS + SJ|, |gS + S^t g|)` at one point.
pub fn tangent_residual(j: &Mat4, s: &Mat4, g: &Mat4) -> f64 {
    (j * s + s * j).norm().max((g * s + s.transpose() * g).norm())
}

/// Check the compatibility constraints at every point.
pub fn validate(j: EndoField, metric: &MetricField, tol: f64) -> Result<CompatibleJField> {
    j.grid().check_same(&metric.grid())?;
    let violations: Vec<Violation> = (0..j.grid().len())
        .into_par_iter()
        .map(|i| point_violation(&j[i], metric.g(i)))
        .collect();
    let mut count = 0;
    let mut worst = (0usize, Violation::default());
    let mut max_square: f64 = 0.0;
    let mut max_metric: f64 = 0.0;
    for (i, v) in violations.iter().enumerate() {
        max_square = max_square.max(v.square);
        max_metric = max_metric.max(v.metric);
        if v.worst() > tol {
            count += 1;
        }
        if v.worst() > worst.1.worst() {
            worst = (i, *v);
        }
    }
    if count > 0 {
        return Err(Error::ConstraintViolation {
            count,
            worst_point: j.grid().coords(worst.0),
            square: worst.1.square,
            metric: worst.1.metric,
            tol,
        });
    }
    Ok(CompatibleJField {
        field: j,
        max_square_violation: max_square,
        max_metric_violation: max_metric,
    })
}

/// The g-orthonormal frame change `P` with `g = P^t P` (identity when flat).
pub(crate) fn frame(g: &Mat4) -> (Mat4, Mat4) {
    let p = orthonormal_frame(g).expect("metric is positive definite");
    let p_inv = p.try_inverse().expect("frame is invertible");
    (p, p_inv)
}

/// The standard structure: in a g-orthonormal frame, `J₀ = diag(rot90, rot90)`
/// (left multiplication by `i` on the quaternions).
pub fn standard_matrix(g: &Mat4) -> Mat4 {
    let (p, p_inv) = frame(g);
    p_inv * quaternion_left(&nalgebra::Vector3::new(1.0, 0.0, 0.0)) * p
}

/// Constant field `J₀` for a constant metric.
pub fn standard_structure(metric: &MetricField) -> Result<CompatibleJField> {
    let (g, _) = metric.require_constant("the standard structure")?;
    let j0 = standard_matrix(g);
    validate(EndoField::constant(metric.grid(), j0), metric, DEFAULT_TOL)
}

/// `J₀` conjugated pointwise by the rotation `R(θ(x))` in the plane
/// `(axis_a, axis_b)` of a g-orthonormal frame, `θ = ε sin(2π k x₁)`.
///
/// The plane must mix the two `J₀`-invariant planes (e.g. `(0, 2)`),
/// otherwise `R` commutes with `J₀` and the field stays constant.
pub fn rotation_perturbation(
    metric: &MetricField,
    epsilon: f64,
    mode: f64,
    plane: (usize, usize),
) -> Result<CompatibleJField> {
    let (g, _) = metric.require_constant("the rotation perturbation")?;
    let (a, b) = plane;
    if a == b || a > 3 || b > 3 {
        return Err(Error::InvalidArgument(format!("invalid rotation plane {plane:?}")));
    }
    let (p, p_inv) = frame(g);
    let j0_hat = quaternion_left(&nalgebra::Vector3::new(1.0, 0.0, 0.0));
    let grid = metric.grid();
    let field = EndoField::from_fn(grid, |c| {
        let x = grid.position(c);
        let theta = epsilon * (2.0 * std::f64::consts::PI * mode * x[0]).sin();
        let r = plane_rotation(a, b, theta);
        p_inv * r * j0_hat * r.transpose() * p
    });
    validate(field, metric, DEFAULT_TOL)
}

/// Rotation by `theta` in the coordinate plane `(a, b)`.
pub fn plane_rotation(a: usize, b: usize, theta: f64) -> Mat4 {
    let mut r = Mat4::identity();
    let (s, c) = theta.sin_cos();
    r[(a, a)] = c;
    r[(b, b)] = c;
    r[(a, b)] = -s;
    r[(b, a)] = s;
    r
}

/// `¼[(T + JTJ) - ((T + JTJ))*]` at one point, with `X* = g^{-1} X^t g`.
#[inline]
pub fn tangent_project_point(j: &Mat4, t: &Mat4, g: &Mat4, g_inv: &Mat4) -> Mat4 {
    let a = t + j * t * j;
    (a - adjoint_g(&a, g, g_inv)) * 0.25
}

/// Orthogonal projection (for the g-inner product) onto the tangent space at `J`.
pub fn tangent_project(j: &CompatibleJField, t: &EndoField, metric: &MetricField) -> Result<TangentField> {
    j.grid().check_same(&t.grid())?;
    j.grid().check_same(&metric.grid())?;
    let field = t.map(|i, ti| tangent_project_point(&j[i], ti, metric.g(i), metric.g_inv(i)));
    Ok(TangentField { field })
}

/// Cayley retraction `(id - tS) J (id - tS)^{-1}`.
pub fn retract_cayley(
    j: &CompatibleJField,
    s: &TangentField,
    t: f64,
    metric: &MetricField,
) -> Result<CompatibleJField> {
    j.grid().check_same(&s.grid())?;
    j.grid().check_same(&metric.grid())?;
    let grid = j.grid();
    let (worst, norm) = (0..grid.len())
        .into_par_iter()
        .map(|i| (i, inf_norm(&(s[i] * t))))
        .reduce(|| (0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    if norm >= CAYLEY_STEP_LIMIT {
        return Err(Error::StepTooLarge {
            worst_point: grid.coords(worst),
            norm,
        });
    }
    let field = j.map(|i, ji| {
        let m = Mat4::identity() - s[i] * t;
        let m_inv = m.try_inverse().expect("|tS| < 1/2 keeps id - tS invertible");
        m * ji * m_inv
    });
    validate(field, metric, DEFAULT_TOL)
}

/// Pieces of the polar projection at one point.
#[derive(Clone, Copy, Debug)]
pub struct PolarParts {
    /// g-skew part `A = ½(M - M*)`.
    pub skew: Mat4,
    /// g-symmetric part `½(M + M*)`.
    pub symmetric: Mat4,
    /// g-self-adjoint positive square root `Q` of `-A²`.
    pub q: Mat4,
    /// Projected structure `Q^{-1} A`.
    pub j: Mat4,
    /// Smallest eigenvalue of `-A²`.
    pub min_eigenvalue: f64,
    /// `|A² + id|_F`.
    pub defect: f64,
}

/// Polar projection at one point, computed in a g-orthonormal frame with a
/// Jacobi eigendecomposition of `-A²`.
pub fn polar_parts(m: &Mat4, g: &Mat4) -> PolarParts {
    let (p, p_inv) = frame(g);
    let m_hat = p * m * p_inv;
    let a_hat = (m_hat - m_hat.transpose()) * 0.5;
    let s_hat = (m_hat + m_hat.transpose()) * 0.5;
    let x = -(a_hat * a_hat);
    let (w, v) = sym_eigen(&x);
    let mut d = Mat4::zeros();
    let mut d_inv = Mat4::zeros();
    for i in 0..4 {
        let r = w[i].max(0.0).sqrt();
        d[(i, i)] = r;
        d_inv[(i, i)] = if r > 0.0 { 1.0 / r } else { f64::INFINITY };
    }
    let q_hat = v * d * v.transpose();
    let q_inv_hat = v * d_inv * v.transpose();
    let j_hat = q_inv_hat * a_hat;
    let a = p_inv * a_hat * p;
    PolarParts {
        skew: a,
        symmetric: p_inv * s_hat * p,
        q: p_inv * q_hat * p,
        j: p_inv * j_hat * p,
        min_eigenvalue: w[0],
        defect: (a * a + Mat4::identity()).norm(),
    }
}

/// Project an arbitrary field onto compatible structures with the default
/// degeneracy threshold [`SIGMA_MIN`].
pub fn project_polar(m: &EndoField, metric: &MetricField) -> Result<CompatibleJField> {
    project_polar_with(m, metric, SIGMA_MIN)
}

pub fn project_polar_with(m: &EndoField, metric: &MetricField, sigma_min: f64) -> Result<CompatibleJField> {
    m.grid().check_same(&metric.grid())?;
    let parts: Vec<PolarParts> = (0..m.grid().len())
        .into_par_iter()
        .map(|i| polar_parts(&m[i], metric.g(i)))
        .collect();
    let (worst, min_eig) = parts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.min_eigenvalue))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if min_eig < sigma_min {
        return Err(Error::DegenerateProjection {
            worst_point: m.grid().coords(worst),
            min_eigenvalue: min_eig,
            sigma_min,
        });
    }
    let field = EndoField::from_values(m.grid(), parts.into_iter().map(|p| p.j).collect());
    validate(field, metric, DEFAULT_TOL)
}

/// Uniformly random endomorphism field with entries in `[-1, 1]`.
pub fn random_field(grid: Grid, seed: u64) -> EndoField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| Mat4::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    EndoField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed_metric(grid: Grid) -> MetricField {
        let g = Mat4::new(
            1.4, 0.2, 0.0, 0.1, 0.2, 1.1, 0.1, 0.0, 0.0, 0.1, 0.8, 0.05, 0.1, 0.0, 0.05, 1.3,
        );
        MetricField::constant(grid, g).unwrap()
    }

    #[test]
    fn standard_structure_is_valid() {
        let grid = Grid::new(8).unwrap();
        for metric in [MetricField::flat(grid), skewed_metric(grid)] {
            let j = standard_structure(&metric).unwrap();
            assert!(j.max_square_violation() < 1e-14);
            assert!(j.max_metric_violation() < 1e-14);
        }
        let flat = standard_structure(&MetricField::flat(grid)).unwrap();
        assert_eq!(flat.max_square_violation(), 0.0);
        assert_eq!(flat.max_metric_violation(), 0.0);
        #[rustfmt::skip]
        let expected = Mat4::new(
            0.0, -1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
            0.0, 0.0, 1.0, 0.0,
        );
        assert_eq!(flat[0], expected);
    }

    #[test]
    fn perturbed_entry_rejected() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let mut j = standard_structure(&metric).unwrap().into_field();
        let idx = grid.index([1, 2, 3, 4]);
        j[idx][(0, 1)] += 1e-3;
        match validate(j, &metric, 1e-9) {
            Err(Error::ConstraintViolation { count, worst_point, .. }) => {
                assert_eq!(count, 1);
                assert_eq!(worst_point, [1, 2, 3, 4]);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn tangent_projection_properties() {
        let grid = Grid::new(8).unwrap();
        for metric in [MetricField::flat(grid), skewed_metric(grid)] {
            let j = rotation_perturbation(&metric, 0.3, 1.0, (0, 2)).unwrap();
            let t = random_field(grid, 11);
            let s = tangent_project(&j, &t, &metric).unwrap();
            for i in 0..grid.len() {
                assert!(tangent_residual(&j[i], &s[i], metric.g(i)) < 1e-12);
            }
            let s2 = tangent_project(&j, &s, &metric).unwrap();
            assert!(s2.max_abs_diff(&s) < 1e-12);
            let zero = tangent_project(&j, &j, &metric).unwrap();
            assert!(zero.max_norm() < 1e-12);
        }
    }

    #[test]
    fn cayley_forms_agree_and_preserve_constraints() {
        let grid = Grid::new(8).unwrap();
        for metric in [MetricField::flat(grid), skewed_metric(grid)] {
            let j = rotation_perturbation(&metric, 0.2, 1.0, (0, 2)).unwrap();
            let s = tangent_project(&j, &random_field(grid, 5), &metric).unwrap();
            let t = 0.4 / s.values().iter().map(inf_norm).fold(0.0, f64::max);
            let out = retract_cayley(&j, &s, t, &metric).unwrap();
            for i in 0..grid.len() {
                let ts = s[i] * t;
                let right = j[i]
                    * (Mat4::identity() + ts)
                    * (Mat4::identity() - ts).try_inverse().unwrap();
                assert!((right - out[i]).norm() < 1e-10);
                assert!(point_violation(&out[i], metric.g(i)).worst() < 1e-10);
            }
            let same = retract_cayley(&j, &s, 0.0, &metric).unwrap();
            assert_eq!(same.field(), j.field());
        }
    }

    #[test]
    fn cayley_rejects_large_steps() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let j = rotation_perturbation(&metric, 0.2, 1.0, (0, 2)).unwrap();
        let s = tangent_project(&j, &random_field(grid, 5), &metric).unwrap();
        assert!(matches!(
            retract_cayley(&j, &s, 100.0, &metric),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn polar_fixes_compatible_and_scaled() {
        let grid = Grid::new(8).unwrap();
        for metric in [MetricField::flat(grid), skewed_metric(grid)] {
            let j = rotation_perturbation(&metric, 0.3, 1.0, (0, 2)).unwrap();
            let p = project_polar(&j, &metric).unwrap();
            assert!(p.max_abs_diff(&j) < 1e-10);
            let j0 = standard_structure(&metric).unwrap();
            let scaled = j0.scale(1.7);
            let p = project_polar(&scaled, &metric).unwrap();
            assert!(p.max_abs_diff(&j0) < 1e-12);
        }
    }

    #[test]
    fn polar_rejects_degenerate() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let mut m = standard_structure(&metric).unwrap().into_field();
        m[grid.index([0, 0, 0, 3])] = Mat4::identity();
        match project_polar(&m, &metric) {
            Err(Error::DegenerateProjection { worst_point, .. }) => {
                assert_eq!(worst_point, [0, 0, 0, 3])
            }
            other => panic!("expected degenerate projection, got {other:?}"),
        }
    }

    #[test]
    fn polar_commutes_with_q() {
        let mut rng_seed = 0;
        let grid = Grid::new(8).unwrap();
        let metric = skewed_metric(grid);
        let m = random_field(grid, 99);
        for i in 0..200 {
            let parts = polar_parts(&m[i], metric.g(i));
            if parts.min_eigenvalue < SIGMA_MIN {
                rng_seed += 1;
                continue;
            }
            assert!((parts.j * parts.q - parts.q * parts.j).norm() < 1e-9);
            assert!(point_violation(&parts.j, metric.g(i)).worst() < 1e-9);
        }
        assert!(rng_seed < 200);
    }
}
