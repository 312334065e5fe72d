//! Riemannian metrics on the grid.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{sym_eigen, Mat4};

/// Smallest eigenvalue any metric sample may have.
pub const MIN_METRIC_EIGENVALUE: f64 = 0.1;

/// Christoffel symbols at one point, indexed `[k][i][j]` for `Γ^k_{ij}`.
pub type Christoffel = [[[f64; 4]; 4]; 4];

#[derive(Clone, Debug)]
enum Storage {
    Constant {
        g: Mat4,
        g_inv: Mat4,
        weight: f64,
    },
    Varying {
        g: Vec<Mat4>,
        g_inv: Vec<Mat4>,
        weight: Vec<f64>,
        christoffel: Vec<Christoffel>,
    },
}

/// A field of symmetric positive definite matrices `g_ij`.
///
/// Constant metrics are stored once; their Christoffel symbols vanish and
/// `curvature_flag` is false.
#[derive(Clone, Debug)]
pub struct MetricField {
    grid: Grid,
    storage: Storage,
}

fn check_spd(g: &Mat4) -> Result<Mat4> {
    if (g - g.transpose()).abs().max() > 1e-14 * g.abs().max().max(1.0) {
        return Err(Error::InvalidMetric("metric is not symmetric".into()));
    }
    let (w, _) = sym_eigen(g);
    if w[0] < MIN_METRIC_EIGENVALUE {
        return Err(Error::InvalidMetric(format!(
            "smallest eigenvalue {:.3e} below {MIN_METRIC_EIGENVALUE}",
            w[0]
        )));
    }
    let g_inv = g
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("metric is singular".into()))?;
    Ok(g_inv)
}

impl MetricField {
    pub fn flat(grid: Grid) -> Self {
        Self {
            grid,
            storage: Storage::Constant {
                g: Mat4::identity(),
                g_inv: Mat4::identity(),
                weight: grid.cell_volume(),
            },
        }
    }

    pub fn constant(grid: Grid, g: Mat4) -> Result<Self> {
        let g_inv = check_spd(&g)?;
        Ok(Self {
            grid,
            storage: Storage::Constant { g, g_inv, weight: g.determinant().sqrt() * grid.cell_volume() },
        })
    }

    /// Position-dependent metric. Christoffel symbols come from centered
    /// differences of the samples.
    pub fn varying(grid: Grid, samples: Vec<Mat4>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidMetric(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        let g_inv = samples.iter().map(check_spd).collect::<Result<Vec<_>>>()?;
        let inv_2h = 0.5 / grid.spacing();
        let christoffel = (0..grid.len())
            .map(|idx| {
                let c = grid.coords(idx);
                let dg: [Mat4; 4] = std::array::from_fn(|p| {
                    (samples[grid.shift(c, p, 1)] - samples[grid.shift(c, p, -1)]) * inv_2h
                });
                let gi = &g_inv[idx];
                let mut gamma = [[[0.0; 4]; 4]; 4];
                for k in 0..4 {
                    for i in 0..4 {
                        for j in 0..4 {
                            let mut s = 0.0;
                            for l in 0..4 {
                                s += gi[(k, l)]
                                    * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                            }
                            gamma[k][i][j] = 0.5 * s;
                        }
                    }
                }
                gamma
            })
            .collect();
        let weight = samples.iter().map(|g| g.determinant().sqrt() * grid.cell_volume()).collect();
        Ok(Self {
            grid,
            storage: Storage::Varying {
                g: samples,
                g_inv,
                weight,
                christoffel,
            },
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// True iff the metric varies over the grid.
    pub fn curvature_flag(&self) -> bool {
        matches!(self.storage, Storage::Varying { .. })
    }

    /// The constant matrix, if the metric is constant.
    pub fn constant_value(&self) -> Option<(&Mat4, &Mat4)> {
        match &self.storage {
            Storage::Constant { g, g_inv, .. } => Some((g, g_inv)),
            Storage::Varying { .. } => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        self.constant_value()
            .is_some_and(|(g, _)| *g == Mat4::identity())
    }

    #[inline]
    pub fn g(&self, idx: usize) -> &Mat4 {
        match &self.storage {
            Storage::Constant { g, .. } => g,
            Storage::Varying { g, .. } => &g[idx],
        }
    }

    #[inline]
    pub fn g_inv(&self, idx: usize) -> &Mat4 {
        match &self.storage {
            Storage::Constant { g_inv, .. } => g_inv,
            Storage::Varying { g_inv, .. } => &g_inv[idx],
        }
    }

    #[inline]
    pub fn christoffel(&self, idx: usize) -> Option<&Christoffel> {
        match &self.storage {
            Storage::Constant { .. } => None,
            Storage::Varying { christoffel, .. } => Some(&christoffel[idx]),
        }
    }

    /// Volume weight `sqrt(det g) h^4` of the cell at `idx`.
    #[inline]
    pub fn volume_weight(&self, idx: usize) -> f64 {
        match &self.storage {
            Storage::Constant { weight, .. } => *weight,
            Storage::Varying { weight, .. } => weight[idx],
        }
    }

    pub fn require_constant(&self, what: &str) -> Result<(&Mat4, &Mat4)> {
        self.constant_value().ok_or_else(|| {
            Error::Unsupported(format!("{what} requires a constant metric"))
        })
    }
}

/// `|A|_g^2 = g_ik g^jl A^i_j A^k_l = tr(g A g^{-1} A^t)`.
#[inline]
pub fn norm_sq_g(a: &Mat4, g: &Mat4, g_inv: &Mat4) -> f64 {
    inner_g(a, a, g, g_inv)
}

/// Full contraction `<A, B>_g = tr(g A g^{-1} B^t)` of mixed tensors.
#[inline]
pub fn inner_g(a: &Mat4, b: &Mat4, g: &Mat4, g_inv: &Mat4) -> f64 {
    if *g == Mat4::identity() {
        return a.dot(b);
    }
    (g * a * g_inv).component_mul(b).sum()
}

/// The g-adjoint `X* = g^{-1} X^t g`.
#[inline]
pub fn adjoint_g(x: &Mat4, g: &Mat4, g_inv: &Mat4) -> Mat4 {
    g_inv * x.transpose() * g
}
