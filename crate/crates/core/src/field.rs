//! Tensor fields sampled on the grid.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::Grid;
use crate::linalg::{pairwise_sum, Mat4};
use crate::metric::{inner_g, MetricField};

/// A field of 4x4 real matrices `A^i_j` (row = upper index).
#[derive(Clone, Debug, PartialEq)]
pub struct EndoField {
    grid: Grid,
    values: Vec<Mat4>,
}

impl EndoField {
    pub fn from_values(grid: Grid, values: Vec<Mat4>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length does not match grid");
        Self { grid, values }
    }

    pub fn constant(grid: Grid, m: Mat4) -> Self {
        Self::from_values(grid, vec![m; grid.len()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, Mat4::zeros())
    }

    /// Build a field from a function of grid coordinates (evaluated in parallel).
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([usize; 4]) -> Mat4 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.coords(idx)))
            .collect();
        Self { grid, values }
    }

    /// Pointwise map, in parallel.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(usize, &Mat4) -> Mat4 + Sync,
    {
        let values = self
            .values
            .par_iter()
            .enumerate()
            .map(|(i, m)| f(i, m))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn zip_map<F>(&self, other: &EndoField, f: F) -> Self
    where
        F: Fn(usize, &Mat4, &Mat4) -> Mat4 + Sync,
    {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .enumerate()
            .map(|(i, (a, b))| f(i, a, b))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Mat4] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Mat4> {
        self.values
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|_, m| m * s)
    }

    /// Translate the field by whole grid steps: `out(x) = self(x - shift)`.
    pub fn translated(&self, shift: [isize; 4]) -> Self {
        let g = self.grid;
        Self::from_fn(g, |c| {
            self.values[g.offset(c, [-shift[0], -shift[1], -shift[2], -shift[3]])]
        })
    }

    /// Largest Frobenius norm over all points.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &EndoField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs().max())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for EndoField {
    type Output = Mat4;
    fn index(&self, idx: usize) -> &Mat4 {
        &self.values[idx]
    }
}

impl IndexMut<usize> for EndoField {
    fn index_mut(&mut self, idx: usize) -> &mut Mat4 {
        &mut self.values[idx]
    }
}

impl Add for &EndoField {
    type Output = EndoField;
    fn add(self, rhs: &EndoField) -> EndoField {
        self.zip_map(rhs, |_, a, b| a + b)
    }
}

impl Sub for &EndoField {
    type Output = EndoField;
    fn sub(self, rhs: &EndoField) -> EndoField {
        self.zip_map(rhs, |_, a, b| a - b)
    }
}

impl Mul<f64> for &EndoField {
    type Output = EndoField;
    fn mul(self, s: f64) -> EndoField {
        self.scale(s)
    }
}

/// Weighted `L^2` inner product `sum_x <A, B>_g sqrt(det g) h^4`.
pub fn l2_inner(a: &EndoField, b: &EndoField, metric: &MetricField) -> Result<f64> {
    a.grid().check_same(&b.grid())?;
    a.grid().check_same(&metric.grid())?;
    let terms: Vec<f64> = (0..a.grid().len())
        .into_par_iter()
        .map(|i| inner_g(&a[i], &b[i], metric.g(i), metric.g_inv(i)) * metric.volume_weight(i))
        .collect();
    Ok(pairwise_sum(&terms))
}

pub fn l2_norm(a: &EndoField, metric: &MetricField) -> Result<f64> {
    Ok(l2_inner(a, a, metric)?.max(0.0).sqrt())
}

/// A scalar field on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Deterministic weighted integral.
    pub fn integrate(&self, metric: &MetricField) -> f64 {
        let terms: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * metric.volume_weight(i))
            .collect();
        pairwise_sum(&terms)
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, idx: usize) -> &f64 {
        &self.values[idx]
    }
}

/// Index pairs of the six independent 2-form components, in storage order.
pub const TWO_FORM_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// A 2-form stored as its six components `ω_ab`, `a < b`.
pub type TwoForm = [f64; 6];

/// Expand a 2-form to its full antisymmetric matrix.
pub fn two_form_matrix(w: &TwoForm) -> Mat4 {
    let mut m = Mat4::zeros();
    for (k, &(a, b)) in TWO_FORM_PAIRS.iter().enumerate() {
        m[(a, b)] = w[k];
        m[(b, a)] = -w[k];
    }
    m
}

/// Antisymmetric part of `m`, as a 2-form.
pub fn two_form_from_matrix(m: &Mat4) -> TwoForm {
    std::array::from_fn(|k| {
        let (a, b) = TWO_FORM_PAIRS[k];
        0.5 * (m[(a, b)] - m[(b, a)])
    })
}

/// A field of 2-forms (lower indices).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFormField {
    grid: Grid,
    values: Vec<TwoForm>,
}

impl TwoFormField {
    pub fn from_values(grid: Grid, values: Vec<TwoForm>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([usize; 4]) -> TwoForm + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.coords(idx)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[TwoForm] {
        &self.values
    }

    pub fn matrix(&self, idx: usize) -> Mat4 {
        two_form_matrix(&self.values[idx])
    }
}

impl Index<usize> for TwoFormField {
    type Output = TwoForm;
    fn index(&self, idx: usize) -> &TwoForm {
        &self.values[idx]
    }
}
