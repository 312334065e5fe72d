//! Differential operators on the periodic grid.
//!
//! Every derivative is the centered second-order difference
//! `D_p f(x) = (f(x + h e_p) - f(x - h e_p)) / 2h`. Second derivatives are
//! compositions of first differences, so the rough Laplacian of a constant
//! metric is `Δ = g^pq D_p D_q`. On the flat torus each axis contributes the
//! wide stencil `(f(x+2h) - 2 f(x) + f(x-2h)) / 4h^2`, nine points in total,
//! with Fourier symbol `-sin^2(2π k h) / h^2` per axis. Because all operators
//! are built from the same commuting differences, discrete integration by
//! parts and `Δ_d = -Δ` on forms hold exactly up to rounding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{EndoField, ScalarField, TwoForm, TwoFormField, TWO_FORM_PAIRS};
use crate::grid::Grid;
use crate::linalg::Mat4;
use crate::metric::MetricField;

/// Rank-3 field `∇J`, one endomorphism field per direction `p`.
pub type CovariantDerivative = [EndoField; 4];

/// Fourier symbol of the flat rough Laplacian along one axis for wave number `k`.
pub fn laplacian_symbol(k: f64, h: f64) -> f64 {
    let s = (2.0 * std::f64::consts::PI * k * h).sin();
    -(s * s) / (h * h)
}

/// Pointwise access to first and second derivatives of an endomorphism field.
///
/// For constant metrics the stencils are evaluated on the fly; for varying
/// metrics the first covariant derivative is cached and the Christoffel
/// terms are applied on top of the nested differences.
pub struct Derivatives<'a> {
    field: &'a EndoField,
    metric: &'a MetricField,
    first: Option<CovariantDerivative>,
    inv_2h: f64,
}

impl<'a> Derivatives<'a> {
    pub fn new(field: &'a EndoField, metric: &'a MetricField) -> Result<Self> {
        field.grid().check_same(&metric.grid())?;
        let inv_2h = 0.5 / field.grid().spacing();
        let first = if metric.curvature_flag() {
            Some(std::array::from_fn(|p| {
                EndoField::from_fn(field.grid(), |c| covariant_first(field, metric, c, p, inv_2h))
            }))
        } else {
            None
        };
        Ok(Self {
            field,
            metric,
            first,
            inv_2h,
        })
    }

    pub fn grid(&self) -> Grid {
        self.field.grid()
    }

    /// `∇_p J` at grid point `c`.
    #[inline]
    pub fn first(&self, c: [usize; 4], p: usize) -> Mat4 {
        match &self.first {
            Some(t) => t[p][self.grid().index(c)],
            None => centered(self.field, c, p, self.inv_2h),
        }
    }

    pub fn first_all(&self, c: [usize; 4]) -> [Mat4; 4] {
        std::array::from_fn(|p| self.first(c, p))
    }

    /// `∇_p ∇_q J` at grid point `c`.
    pub fn second(&self, c: [usize; 4], p: usize, q: usize) -> Mat4 {
        let grid = self.grid();
        match &self.first {
            None => {
                let f = self.field;
                let s = self.inv_2h * self.inv_2h;
                if p == q {
                    (f[grid.shift(c, p, 2)] - f[grid.index(c)] * 2.0 + f[grid.shift(c, p, -2)]) * s
                } else {
                    let mut o = [0isize; 4];
                    let mut corner = |sp: isize, sq: isize| {
                        o = [0; 4];
                        o[p] = sp;
                        o[q] = sq;
                        f[grid.offset(c, o)]
                    };
                    (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) * s
                }
            }
            Some(t) => {
                let idx = grid.index(c);
                let gamma = self
                    .metric
                    .christoffel(idx)
                    .expect("varying metric carries christoffel symbols");
                let tq = &t[q];
                let mut out = centered(tq, c, p, self.inv_2h);
                let tq_here = &tq[idx];
                for i in 0..4 {
                    for j in 0..4 {
                        let mut s = 0.0;
                        for k in 0..4 {
                            s += gamma[i][p][k] * tq_here[(k, j)];
                            s -= gamma[k][p][q] * t[k][idx][(i, j)];
                            s -= gamma[k][p][j] * tq_here[(i, k)];
                        }
                        out[(i, j)] += s;
                    }
                }
                out
            }
        }
    }

    pub fn hessian(&self, c: [usize; 4]) -> [[Mat4; 4]; 4] {
        let mut h = [[Mat4::zeros(); 4]; 4];
        for p in 0..4 {
            for q in 0..4 {
                if q < p && self.first.is_none() {
                    h[p][q] = h[q][p];
                } else {
                    h[p][q] = self.second(c, p, q);
                }
            }
        }
        h
    }

    /// `ΔJ = g^pq ∇_p ∇_q J` at grid point `c`.
    pub fn laplacian(&self, c: [usize; 4]) -> Mat4 {
        let idx = self.grid().index(c);
        let gi = self.metric.g_inv(idx);
        let mut out = Mat4::zeros();
        for p in 0..4 {
            for q in 0..4 {
                let w = gi[(p, q)];
                if w != 0.0 {
                    out += self.second(c, p, q) * w;
                }
            }
        }
        out
    }
}

#[inline]
fn centered(field: &EndoField, c: [usize; 4], p: usize, inv_2h: f64) -> Mat4 {
    let g = field.grid();
    (field[g.shift(c, p, 1)] - field[g.shift(c, p, -1)]) * inv_2h
}

fn covariant_first(
    field: &EndoField,
    metric: &MetricField,
    c: [usize; 4],
    p: usize,
    inv_2h: f64,
) -> Mat4 {
    let mut out = centered(field, c, p, inv_2h);
    let idx = field.grid().index(c);
    if let Some(gamma) = metric.christoffel(idx) {
        let j = &field[idx];
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += gamma[a][p][k] * j[(k, b)] - gamma[k][p][b] * j[(a, k)];
                }
                out[(a, b)] += s;
            }
        }
    }
    out
}

/// Levi-Civita derivative `∇_p J^i_j = D_p J^i_j + Γ^i_pk J^k_j - Γ^k_pj J^i_k`.
pub fn covariant_derivative(field: &EndoField, metric: &MetricField) -> Result<CovariantDerivative> {
    let d = Derivatives::new(field, metric)?;
    Ok(std::array::from_fn(|p| {
        EndoField::from_fn(field.grid(), |c| d.first(c, p))
    }))
}

/// Rough (connection) Laplacian `ΔJ = g^pq ∇_p ∇_q J`.
pub fn rough_laplacian(field: &EndoField, metric: &MetricField) -> Result<EndoField> {
    let d = Derivatives::new(field, metric)?;
    Ok(EndoField::from_fn(field.grid(), |c| d.laplacian(c)))
}

/// `Δ²J`, the rough Laplacian applied twice.
pub fn bi_laplacian(field: &EndoField, metric: &MetricField) -> Result<EndoField> {
    rough_laplacian(&rough_laplacian(field, metric)?, metric)
}

/// A field of 1-forms `α_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneFormField {
    grid: Grid,
    values: Vec<[f64; 4]>,
}

/// A field of 3-forms. Component `m` holds `β_abc` for the increasing
/// triple `(a, b, c)` that omits index `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeFormField {
    grid: Grid,
    values: Vec<[f64; 4]>,
}

macro_rules! form_field_common {
    ($t:ty) => {
        impl $t {
            pub fn from_values(grid: Grid, values: Vec<[f64; 4]>) -> Self {
                assert_eq!(values.len(), grid.len());
                Self { grid, values }
            }

            pub fn from_fn<F>(grid: Grid, f: F) -> Self
            where
                F: Fn([usize; 4]) -> [f64; 4] + Sync,
            {
                let values = (0..grid.len())
                    .into_par_iter()
                    .map(|i| f(grid.coords(i)))
                    .collect();
                Self { grid, values }
            }

            pub fn grid(&self) -> Grid {
                self.grid
            }

            pub fn values(&self) -> &[[f64; 4]] {
                &self.values
            }
        }
    };
}

form_field_common!(OneFormField);
form_field_common!(ThreeFormField);

/// `β_abc` for arbitrary indices, with the sign of the sorting permutation.
pub fn three_form_component(beta: &[f64; 4], a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    let mut idx = [a, b, c];
    let mut sign = 1.0;
    for i in 0..3 {
        for j in 0..2 - i {
            if idx[j] > idx[j + 1] {
                idx.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    let omitted = 6 - idx[0] - idx[1] - idx[2];
    sign * beta[omitted]
}

/// Increasing triple omitting `m`.
fn triple_without(m: usize) -> [usize; 3] {
    let mut t = [0; 3];
    let mut k = 0;
    for i in 0..4 {
        if i != m {
            t[k] = i;
            k += 1;
        }
    }
    t
}

fn two_form_component(w: &TwoForm, a: usize, b: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let k = TWO_FORM_PAIRS
        .iter()
        .position(|&pair| pair == (lo, hi))
        .expect("valid pair");
    sign * w[k]
}

fn require_flat(metric: &MetricField) -> Result<&Mat4> {
    if metric.curvature_flag() {
        return Err(Error::Unsupported(
            "Hodge operators require a constant (flat) metric".into(),
        ));
    }
    Ok(metric.g_inv(0))
}

/// Exterior derivative of a 1-form.
pub fn d_one_form(alpha: &OneFormField) -> TwoFormField {
    let grid = alpha.grid();
    let inv_2h = 0.5 / grid.spacing();
    let v = &alpha.values;
    TwoFormField::from_fn(grid, |c| {
        std::array::from_fn(|k| {
            let (a, b) = TWO_FORM_PAIRS[k];
            let da_b = (v[grid.shift(c, a, 1)][b] - v[grid.shift(c, a, -1)][b]) * inv_2h;
            let db_a = (v[grid.shift(c, b, 1)][a] - v[grid.shift(c, b, -1)][a]) * inv_2h;
            da_b - db_a
        })
    })
}

/// Exterior derivative of a 2-form.
pub fn d_two_form(omega: &TwoFormField) -> ThreeFormField {
    let grid = omega.grid();
    let inv_2h = 0.5 / grid.spacing();
    let w = omega.values();
    let diff = |c: [usize; 4], p: usize, a: usize, b: usize| {
        (two_form_component(&w[grid.shift(c, p, 1)], a, b)
            - two_form_component(&w[grid.shift(c, p, -1)], a, b))
            * inv_2h
    };
    ThreeFormField::from_fn(grid, |c| {
        std::array::from_fn(|m| {
            let [a, b, cc] = triple_without(m);
            diff(c, a, b, cc) + diff(c, b, cc, a) + diff(c, cc, a, b)
        })
    })
}

/// Codifferential of a 1-form, `d*α = -g^pq D_p α_q`.
pub fn codifferential_one_form(alpha: &OneFormField, metric: &MetricField) -> Result<ScalarField> {
    alpha.grid().check_same(&metric.grid())?;
    let gi = *require_flat(metric)?;
    let grid = alpha.grid();
    let inv_2h = 0.5 / grid.spacing();
    let v = &alpha.values;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            let mut s = 0.0;
            for p in 0..4 {
                let dp: [f64; 4] = std::array::from_fn(|q| {
                    (v[grid.shift(c, p, 1)][q] - v[grid.shift(c, p, -1)][q]) * inv_2h
                });
                for q in 0..4 {
                    s -= gi[(p, q)] * dp[q];
                }
            }
            s
        })
        .collect();
    Ok(ScalarField::from_values(grid, values))
}

/// Codifferential of a 2-form, `(d*ω)_b = -g^pq D_p ω_qb`.
pub fn codifferential_two_form(omega: &TwoFormField, metric: &MetricField) -> Result<OneFormField> {
    omega.grid().check_same(&metric.grid())?;
    let gi = *require_flat(metric)?;
    let grid = omega.grid();
    let inv_2h = 0.5 / grid.spacing();
    let w = omega.values();
    Ok(OneFormField::from_fn(grid, |c| {
        std::array::from_fn(|b| {
            let mut s = 0.0;
            for p in 0..4 {
                let plus = &w[grid.shift(c, p, 1)];
                let minus = &w[grid.shift(c, p, -1)];
                for q in 0..4 {
                    if gi[(p, q)] != 0.0 {
                        let d = (two_form_component(plus, q, b) - two_form_component(minus, q, b))
                            * inv_2h;
                        s -= gi[(p, q)] * d;
                    }
                }
            }
            s
        })
    }))
}

/// Codifferential of a 3-form, `(d*β)_bc = -g^pq D_p β_qbc`.
pub fn codifferential_three_form(
    beta: &ThreeFormField,
    metric: &MetricField,
) -> Result<TwoFormField> {
    beta.grid().check_same(&metric.grid())?;
    let gi = *require_flat(metric)?;
    let grid = beta.grid();
    let inv_2h = 0.5 / grid.spacing();
    let v = &beta.values;
    Ok(TwoFormField::from_fn(grid, |c| {
        std::array::from_fn(|k| {
            let (b, cc) = TWO_FORM_PAIRS[k];
            let mut s = 0.0;
            for p in 0..4 {
                let plus = &v[grid.shift(c, p, 1)];
                let minus = &v[grid.shift(c, p, -1)];
                for q in 0..4 {
                    if gi[(p, q)] != 0.0 {
                        let d = (three_form_component(plus, q, b, cc)
                            - three_form_component(minus, q, b, cc))
                            * inv_2h;
                        s -= gi[(p, q)] * d;
                    }
                }
            }
            s
        })
    }))
}

/// Output of [`hodge_operators`].
#[derive(Clone, Debug)]
pub struct HodgeOutput {
    pub d_omega: ThreeFormField,
    pub dstar_omega: OneFormField,
    pub delta_d_omega: TwoFormField,
}

/// `dω`, `d*ω` and the Hodge Laplacian `Δ_d ω = d d*ω + d* dω`.
pub fn hodge_operators(omega: &TwoFormField, metric: &MetricField) -> Result<HodgeOutput> {
    omega.grid().check_same(&metric.grid())?;
    require_flat(metric)?;
    let d_omega = d_two_form(omega);
    let dstar_omega = codifferential_two_form(omega, metric)?;
    let dd_star = d_one_form(&dstar_omega);
    let d_star_d = codifferential_three_form(&d_omega, metric)?;
    let values = dd_star
        .values()
        .par_iter()
        .zip(d_star_d.values().par_iter())
        .map(|(a, b)| std::array::from_fn(|k| a[k] + b[k]))
        .collect();
    Ok(HodgeOutput {
        d_omega,
        dstar_omega,
        delta_d_omega: TwoFormField::from_values(omega.grid(), values),
    })
}

/// Full contraction `g^ab α_a α_b`.
pub fn one_form_norm_sq(alpha: &[f64; 4], g_inv: &Mat4) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += g_inv[(a, b)] * alpha[a] * alpha[b];
        }
    }
    s
}

/// Full contraction `g^ac g^bd ω_ab ω_cd` (all index orders summed).
pub fn two_form_norm_sq(w: &TwoForm, g_inv: &Mat4) -> f64 {
    let m = crate::field::two_form_matrix(w);
    (g_inv * m * g_inv).component_mul(&m).sum()
}

/// Full contraction of a 3-form over all index orders.
pub fn three_form_norm_sq(beta: &[f64; 4], g_inv: &Mat4) -> f64 {
    let mut full = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                full[a][b][c] = three_form_component(beta, a, b, c);
            }
        }
    }
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                if full[a][b][c] == 0.0 {
                    continue;
                }
                for d in 0..4 {
                    for e in 0..4 {
                        for f in 0..4 {
                            s += g_inv[(a, d)]
                                * g_inv[(b, e)]
                                * g_inv[(c, f)]
                                * full[a][b][c]
                                * full[d][e][f];
                        }
                    }
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat4;
    use std::f64::consts::PI;

    fn sin_entry(grid: Grid, k: f64) -> EndoField {
        EndoField::from_fn(grid, |c| {
            let x = grid.position(c);
            let mut m = Mat4::identity();
            m[(0, 1)] = (2.0 * PI * k * x[0]).sin();
            m
        })
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let j = EndoField::constant(grid, Mat4::from_fn(|i, k| (i * 4 + k) as f64));
        let d = covariant_derivative(&j, &metric).unwrap();
        assert!(d.iter().all(|f| f.max_norm() == 0.0));
        assert_eq!(rough_laplacian(&j, &metric).unwrap().max_norm(), 0.0);
        assert_eq!(bi_laplacian(&j, &metric).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn derivative_is_second_order() {
        let err = |n: usize| {
            let grid = Grid::new(n).unwrap();
            let metric = MetricField::flat(grid);
            let f = sin_entry(grid, 1.0);
            let d = Derivatives::new(&f, &metric).unwrap();
            (0..grid.len())
                .map(|i| {
                    let c = grid.coords(i);
                    let x = grid.position(c);
                    (d.first(c, 0)[(0, 1)] - 2.0 * PI * (2.0 * PI * x[0]).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(16) / err(32);
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stencil_weights_sum_to_zero() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let mut f = EndoField::constant(grid, Mat4::identity() * 3.0);
        f[grid.index([2, 5, 1, 7])] = Mat4::identity() * 11.0;
        let lap = rough_laplacian(&f, &metric).unwrap();
        let total: Mat4 = lap.values().iter().sum();
        assert!(total.norm() < 1e-9);
        let d = covariant_derivative(&f, &metric).unwrap();
        for p in 0..4 {
            let t: Mat4 = d[p].values().iter().sum();
            assert!(t.norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_matches_symbol() {
        let grid = Grid::new(16).unwrap();
        let metric = MetricField::flat(grid);
        for k in [1.0, 2.0, 3.0] {
            let f = sin_entry(grid, k);
            let lap = rough_laplacian(&f, &metric).unwrap();
            let sym = laplacian_symbol(k, grid.spacing());
            for i in 0..grid.len() {
                assert!((lap[i][(0, 1)] - sym * f[i][(0, 1)]).abs() < 1e-12 * sym.abs().max(1.0));
            }
        }
    }

    #[test]
    fn varying_path_agrees_with_constant_path() {
        let grid = Grid::new(8).unwrap();
        let g = Mat4::new(
            1.5, 0.2, 0.0, 0.0, 0.2, 1.0, 0.1, 0.0, 0.0, 0.1, 1.2, 0.0, 0.0, 0.0, 0.0, 0.9,
        );
        let constant = MetricField::constant(grid, g).unwrap();
        let varying = MetricField::varying(grid, vec![g; grid.len()]).unwrap();
        let f = EndoField::from_fn(grid, |c| {
            let x = grid.position(c);
            Mat4::from_fn(|i, j| (2.0 * PI * (x[i] + 0.5 * x[j])).sin())
        });
        let a = rough_laplacian(&f, &constant).unwrap();
        let b = rough_laplacian(&f, &varying).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9 * a.max_norm());
    }

    #[test]
    fn hodge_rejects_varying_metric() {
        let grid = Grid::new(8).unwrap();
        let varying = MetricField::varying(grid, vec![Mat4::identity(); grid.len()]).unwrap();
        let w = TwoFormField::from_values(grid, vec![[0.0; 6]; grid.len()]);
        assert!(matches!(
            hodge_operators(&w, &varying),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn three_form_signs() {
        let beta = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(three_form_component(&beta, 1, 2, 3), 1.0);
        assert_eq!(three_form_component(&beta, 2, 1, 3), -1.0);
        assert_eq!(three_form_component(&beta, 3, 0, 1), 3.0);
        assert_eq!(three_form_component(&beta, 0, 0, 1), 0.0);
    }
}
