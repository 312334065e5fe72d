//! Energy functionals, the constrained gradient and Euler–Lagrange residuals.
//!
//! Pointwise norms are full contractions with the metric:
//! `|∇J|² = g^pq g_ik g^jl ∇_p J^i_j ∇_q J^k_l`, and likewise for every other
//! tensor. Integrals are weighted sums `Σ f √det g h⁴` reduced in a fixed
//! pairwise order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::acs::{tangent_project, tangent_project_point, CompatibleJField, TangentField};
use crate::error::{Error, Result};
use crate::field::{l2_inner, l2_norm, two_form_from_matrix, EndoField, ScalarField, TwoFormField};
use crate::geometry::{
    hodge_operators, one_form_norm_sq, rough_laplacian, three_form_norm_sq, two_form_norm_sq,
    Derivatives,
};
use crate::grid::Grid;
use crate::linalg::{pairwise_sum, Mat4};
use crate::metric::{inner_g, norm_sq_g, MetricField};

/// Number of fields in the default weak-residual test battery.
pub const DEFAULT_BATTERY_SIZE: usize = 32;
/// Seed of the default weak-residual test battery.
pub const DEFAULT_BATTERY_SEED: u64 = 0x5eed_2024;

/// Energies, densities and residuals from one evaluation.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    /// `∫ |∇J|²`
    pub e1: f64,
    /// `∫ |ΔJ|²`
    pub e2: f64,
    /// `|∇²J|² + |∇J|⁴` per point.
    pub density_mu: ScalarField,
    /// `|ΔJ|²` per point.
    pub density_xi: ScalarField,
    pub residual_commutator: Option<f64>,
    pub residual_strong: Option<f64>,
    pub residual_weak_max: Option<f64>,
}

#[inline]
fn contract_first(d: &[Mat4; 4], g: &Mat4, g_inv: &Mat4) -> f64 {
    let mut s = 0.0;
    for p in 0..4 {
        for q in 0..4 {
            let w = g_inv[(p, q)];
            if w != 0.0 {
                s += w * inner_g(&d[p], &d[q], g, g_inv);
            }
        }
    }
    s
}

#[inline]
fn contract_hessian(h: &[[Mat4; 4]; 4], g: &Mat4, g_inv: &Mat4) -> f64 {
    let mut s = 0.0;
    for p in 0..4 {
        for r in 0..4 {
            let wpr = g_inv[(p, r)];
            if wpr == 0.0 {
                continue;
            }
            for q in 0..4 {
                for t in 0..4 {
                    let w = wpr * g_inv[(q, t)];
                    if w != 0.0 {
                        s += w * inner_g(&h[p][q], &h[r][t], g, g_inv);
                    }
                }
            }
        }
    }
    s
}

/// `Σ_pq g^pq A_p B_q` for families of matrices indexed by direction.
#[inline]
fn contract_products(a: &[Mat4; 4], b: &[Mat4; 4], g_inv: &Mat4) -> Mat4 {
    let mut out = Mat4::zeros();
    for p in 0..4 {
        for q in 0..4 {
            let w = g_inv[(p, q)];
            if w != 0.0 {
                out += a[p] * b[q] * w;
            }
        }
    }
    out
}

fn weighted_sum<F>(grid: Grid, metric: &MetricField, f: F) -> f64
where
    F: Fn(usize, [usize; 4]) -> f64 + Sync,
{
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| f(i, grid.coords(i)) * metric.volume_weight(i))
        .collect();
    pairwise_sum(&terms)
}

/// `E₂(J) = Σ |ΔJ|²_g √det g h⁴` without densities or residuals.
pub fn e2_value(j: &EndoField, metric: &MetricField) -> Result<f64> {
    let d = Derivatives::new(j, metric)?;
    Ok(weighted_sum(j.grid(), metric, |i, c| {
        norm_sq_g(&d.laplacian(c), metric.g(i), metric.g_inv(i))
    }))
}

/// `E₁(J) = Σ |∇J|²_g √det g h⁴`.
pub fn e1_value(j: &EndoField, metric: &MetricField) -> Result<f64> {
    let d = Derivatives::new(j, metric)?;
    Ok(weighted_sum(j.grid(), metric, |i, c| {
        contract_first(&d.first_all(c), metric.g(i), metric.g_inv(i))
    }))
}

/// `|∇²J|² + |∇J|⁴` per point.
pub fn density_mu(j: &EndoField, metric: &MetricField) -> Result<ScalarField> {
    let d = Derivatives::new(j, metric)?;
    let grid = j.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            let (g, gi) = (metric.g(i), metric.g_inv(i));
            let first = contract_first(&d.first_all(c), g, gi);
            contract_hessian(&d.hessian(c), g, gi) + first * first
        })
        .collect();
    Ok(ScalarField::from_values(grid, values))
}

/// Energies and densities of `J`; residuals are left empty (see [`evaluate`]).
pub fn energy_e2(j: &CompatibleJField, metric: &MetricField) -> Result<EnergyReport> {
    let d = Derivatives::new(j, metric)?;
    let grid = j.grid();
    let per_point: Vec<(f64, f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            let (g, gi) = (metric.g(i), metric.g_inv(i));
            let first = contract_first(&d.first_all(c), g, gi);
            let xi = norm_sq_g(&d.laplacian(c), g, gi);
            let mu = contract_hessian(&d.hessian(c), g, gi) + first * first;
            (first, xi, mu)
        })
        .collect();
    let density_xi = ScalarField::from_values(grid, per_point.iter().map(|t| t.1).collect());
    let density_mu = ScalarField::from_values(grid, per_point.iter().map(|t| t.2).collect());
    let e1 = ScalarField::from_values(grid, per_point.iter().map(|t| t.0).collect()).integrate(metric);
    let e2 = density_xi.integrate(metric);
    Ok(EnergyReport {
        e1,
        e2,
        density_mu,
        density_xi,
        residual_commutator: None,
        residual_strong: None,
        residual_weak_max: None,
    })
}

/// Full evaluation: energies, densities and all three residuals.
pub fn evaluate(j: &CompatibleJField, metric: &MetricField, battery: &[EndoField]) -> Result<EnergyReport> {
    let mut report = energy_e2(j, metric)?;
    report.residual_commutator = Some(residual_commutator(j, metric)?);
    report.residual_strong = Some(residual_strong(j, metric)?);
    report.residual_weak_max = Some(residual_weak(j, metric, battery)?);
    Ok(report)
}

/// Gradient of the discrete `E₂` in the Cayley chart at `J`.
///
/// For tangent `S`, `d/dt E₂((id - tS) J (id - tS)^{-1})` at `t = 0` equals
/// `⟨G, S⟩`. The curve has velocity `2JS`, so `G` is the tangent projection
/// of `-4 J Δ²J`; it equals `-2J` times the embedded gradient `P(2Δ²J)`.
pub fn gradient_e2(j: &CompatibleJField, metric: &MetricField) -> Result<TangentField> {
    let lap = rough_laplacian(j, metric)?;
    gradient_from_laplacian(j, &lap, metric)
}

pub(crate) fn gradient_from_laplacian(
    j: &CompatibleJField,
    lap: &EndoField,
    metric: &MetricField,
) -> Result<TangentField> {
    Ok(gradient_and_commutator(j, lap, metric)?.0)
}

/// Gradient together with `‖Δ²J + J(Δ²J)J‖`, sharing one bi-Laplacian pass.
pub(crate) fn gradient_and_commutator(
    j: &CompatibleJField,
    lap: &EndoField,
    metric: &MetricField,
) -> Result<(TangentField, f64)> {
    let d = Derivatives::new(lap, metric)?;
    let grid = j.grid();
    let pairs: Vec<(Mat4, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            let (g, gi) = (metric.g(i), metric.g_inv(i));
            let bilap = d.laplacian(c);
            let comm = bilap + j[i] * bilap * j[i];
            let grad = tangent_project_point(&j[i], &(j[i] * bilap * -4.0), g, gi);
            (grad, norm_sq_g(&comm, g, gi) * metric.volume_weight(i))
        })
        .collect();
    let residual = pairwise_sum(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()).sqrt();
    let field = EndoField::from_values(grid, pairs.into_iter().map(|p| p.0).collect());
    // exact by construction; the checked constructor only re-verifies it
    Ok((TangentField::checked(j, field, metric, 1e-8)?, residual))
}

/// Gradient and commutator residual of `J` (see [`gradient_e2`]).
pub fn gradient_with_residual(j: &CompatibleJField, metric: &MetricField) -> Result<(TangentField, f64)> {
    let lap = rough_laplacian(j, metric)?;
    gradient_and_commutator(j, &lap, metric)
}

/// `(E₁, E₂)` in one pass.
pub fn energies(j: &EndoField, metric: &MetricField) -> Result<(f64, f64)> {
    let d = Derivatives::new(j, metric)?;
    let grid = j.grid();
    let pairs: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            let (g, gi) = (metric.g(i), metric.g_inv(i));
            let w = metric.volume_weight(i);
            (contract_first(&d.first_all(c), g, gi) * w, norm_sq_g(&d.laplacian(c), g, gi) * w)
        })
        .collect();
    let e1 = pairwise_sum(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let e2 = pairwise_sum(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok((e1, e2))
}

/// The embedded (Riemannian) gradient `P(2Δ²J)`.
pub fn embedded_gradient(j: &CompatibleJField, metric: &MetricField) -> Result<TangentField> {
    let bilap = rough_laplacian(&rough_laplacian(j, metric)?, metric)?;
    tangent_project(j, &bilap.scale(2.0), metric)
}

/// `Δ²J + J (Δ²J) J` as a field.
pub fn commutator_field(j: &EndoField, metric: &MetricField) -> Result<EndoField> {
    let bilap = rough_laplacian(&rough_laplacian(j, metric)?, metric)?;
    Ok(bilap.zip_map(j, |_, b, ji| b + ji * b * ji))
}

/// `L²` norm of `Δ²J + J (Δ²J) J`.
pub fn residual_commutator(j: &EndoField, metric: &MetricField) -> Result<f64> {
    l2_norm(&commutator_field(j, metric)?, metric)
}

/// The lower-order term
/// `Q = JΔJΔJ + J∇_pJ∇_pΔJ + J∇_pΔJ∇_pJ + JΔ(∇_pJ∇_pJ)`,
/// assembled term by term from the discrete operators.
pub fn q_term(j: &EndoField, metric: &MetricField) -> Result<EndoField> {
    let grid = j.grid();
    let dj = Derivatives::new(j, metric)?;
    let lap = rough_laplacian(j, metric)?;
    let dlap = Derivatives::new(&lap, metric)?;
    let grad_sq = EndoField::from_fn(grid, |c| {
        let i = grid.index(c);
        let first = dj.first_all(c);
        contract_products(&first, &first, metric.g_inv(i))
    });
    let lap_grad_sq = rough_laplacian(&grad_sq, metric)?;
    Ok(EndoField::from_fn(grid, |c| {
        let i = grid.index(c);
        let gi = metric.g_inv(i);
        let ji = &j[i];
        let first = dj.first_all(c);
        let first_lap = dlap.first_all(c);
        ji * lap[i] * lap[i]
            + ji * contract_products(&first, &first_lap, gi)
            + ji * contract_products(&first_lap, &first, gi)
            + ji * lap_grad_sq[i]
    }))
}

/// `Δ²J - Q` as a field.
pub fn strong_field(j: &EndoField, metric: &MetricField) -> Result<EndoField> {
    let bilap = rough_laplacian(&rough_laplacian(j, metric)?, metric)?;
    let q = q_term(j, metric)?;
    Ok(&bilap - &q)
}

/// `L²` norm of `Δ²J - Q(J, ∇J, ∇²J, ∇³J)`.
pub fn residual_strong(j: &EndoField, metric: &MetricField) -> Result<f64> {
    l2_norm(&strong_field(j, metric)?, metric)
}

/// `‖T‖_{W^{2,2}}` on the grid.
pub fn w22_norm(t: &EndoField, metric: &MetricField) -> Result<f64> {
    let d = Derivatives::new(t, metric)?;
    Ok(weighted_sum(t.grid(), metric, |i, c| {
        let (g, gi) = (metric.g(i), metric.g_inv(i));
        norm_sq_g(&t[i], g, gi) + contract_first(&d.first_all(c), g, gi) + contract_hessian(&d.hessian(c), g, gi)
    })
    .sqrt())
}

/// The weak Euler–Lagrange functional tested against `T`:
/// `∫ ⟨ΔJ, ΔT J - J ΔT⟩ + 2 ∫ ⟨ΔJ, ∇T∇J - ∇J∇T⟩`.
pub fn weak_functional(j: &EndoField, metric: &MetricField, t: &EndoField) -> Result<f64> {
    j.grid().check_same(&t.grid())?;
    let lap_j = rough_laplacian(j, metric)?;
    weak_functional_with(j, &lap_j, metric, t)
}

fn weak_functional_with(j: &EndoField, lap_j: &EndoField, metric: &MetricField, t: &EndoField) -> Result<f64> {
    let dj = Derivatives::new(j, metric)?;
    let dt = Derivatives::new(t, metric)?;
    Ok(weighted_sum(j.grid(), metric, |i, c| {
        let (g, gi) = (metric.g(i), metric.g_inv(i));
        let lap_t = dt.laplacian(c);
        let fj = dj.first_all(c);
        let ft = dt.first_all(c);
        let integrand = lap_t * j[i] - j[i] * lap_t
            + (contract_products(&ft, &fj, gi) - contract_products(&fj, &ft, gi)) * 2.0;
        inner_g(&lap_j[i], &integrand, g, gi)
    }))
}

/// The alternative weak functional
/// `∫ ⟨ΔJ - J∇J∇J, ΔT⟩ + ⟨A, T⟩ + ⟨B, ∇T⟩` with
/// `A = JΔJΔJ + ∇_pJ∇_pJΔJ - ΔJ∇_pJ∇_pJ + ∇_pJΔJ∇_pJ` and
/// `B_p = ∇_pJ ΔJ J + J ΔJ ∇_pJ`; a weak form of `⟨Δ²J - Q, T⟩`.
pub fn weak_functional_split(j: &EndoField, metric: &MetricField, t: &EndoField) -> Result<f64> {
    j.grid().check_same(&t.grid())?;
    let dj = Derivatives::new(j, metric)?;
    let dt = Derivatives::new(t, metric)?;
    Ok(weighted_sum(j.grid(), metric, |i, c| {
        let (g, gi) = (metric.g(i), metric.g_inv(i));
        let ji = &j[i];
        let lap = dj.laplacian(c);
        let fj = dj.first_all(c);
        let ft = dt.first_all(c);
        let grad_sq = contract_products(&fj, &fj, gi);
        let mut across = Mat4::zeros();
        for p in 0..4 {
            for q in 0..4 {
                let w = gi[(p, q)];
                if w != 0.0 {
                    across += fj[p] * lap * fj[q] * w;
                }
            }
        }
        let a = ji * lap * lap + grad_sq * lap - lap * grad_sq + across;
        let mut b_term = 0.0;
        for p in 0..4 {
            let bp = fj[p] * lap * ji + ji * lap * fj[p];
            for q in 0..4 {
                let w = gi[(p, q)];
                if w != 0.0 {
                    b_term += w * inner_g(&bp, &ft[q], g, gi);
                }
            }
        }
        inner_g(&(lap - ji * grad_sq), &dt.laplacian(c), g, gi) + inner_g(&a, &t[i], g, gi) + b_term
    }))
}

/// Largest normalized weak residual `|weak_functional(T)| / ‖T‖_{W^{2,2}}` over the battery.
pub fn residual_weak(j: &EndoField, metric: &MetricField, tests: &[EndoField]) -> Result<f64> {
    weak_worst(j, metric, tests.len(), |k| tests[k].clone())
}

fn weak_worst<F>(j: &EndoField, metric: &MetricField, count: usize, test: F) -> Result<f64>
where
    F: Fn(usize) -> EndoField,
{
    if count == 0 {
        return Err(Error::EmptyTestBattery);
    }
    let lap_j = rough_laplacian(j, metric)?;
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let t = test(k);
        j.grid().check_same(&t.grid())?;
        let norm = w22_norm(&t, metric)?;
        if norm == 0.0 {
            continue;
        }
        worst = worst.max(weak_functional_with(j, &lap_j, metric, &t)?.abs() / norm);
    }
    Ok(worst)
}

/// Test field number `index` of the battery with the given seed. Its Fourier
/// support lies in wave numbers `{0, 1, 2}` on each axis, and it does not
/// depend on the grid beyond sampling, so batteries agree across resolutions.
pub fn battery_field(grid: Grid, seed: u64, index: usize) -> EndoField {
    use rand::{Rng, SeedableRng};
    const TERMS: usize = 4;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let terms: Vec<([f64; 4], f64, Mat4)> = (0..TERMS)
        .map(|_| {
            let k = std::array::from_fn(|_| rng.gen_range(0..3) as f64);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let coeff = Mat4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            (k, phase, coeff)
        })
        .collect();
    EndoField::from_fn(grid, |c| {
        let x = grid.position(c);
        terms.iter().fold(Mat4::zeros(), |acc, (k, phase, coeff)| {
            let arg = std::f64::consts::TAU * (0..4).map(|a| k[a] * x[a]).sum::<f64>() + phase;
            acc + coeff * arg.cos()
        })
    })
}

/// The first `count` fields of the battery with the given seed.
pub fn test_battery(grid: Grid, count: usize, seed: u64) -> Vec<EndoField> {
    (0..count).map(|k| battery_field(grid, seed, k)).collect()
}

/// [`residual_weak`] over the seeded battery, generating one test field at a
/// time.
pub fn residual_weak_seeded(j: &EndoField, metric: &MetricField, count: usize, seed: u64) -> Result<f64> {
    weak_worst(j, metric, count, |k| battery_field(j.grid(), seed, k))
}

pub fn default_battery(grid: Grid) -> Vec<EndoField> {
    test_battery(grid, DEFAULT_BATTERY_SIZE, DEFAULT_BATTERY_SEED)
}

/// `ω(X, Y) = g(JX, Y)`, i.e. `ω_ab = -(gJ)_ab`.
pub fn lower_index(j: &EndoField, metric: &MetricField) -> Result<TwoFormField> {
    j.grid().check_same(&metric.grid())?;
    let grid = j.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| two_form_from_matrix(&-(metric.g(i) * j[i])))
        .collect();
    Ok(TwoFormField::from_values(grid, values))
}

/// Energies of the associated 2-form `ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticEnergies {
    /// `∫ |dω|² + |d*ω|²`
    pub e1_tilde: f64,
    /// `∫ |Δ_d ω|²`
    pub e2_tilde: f64,
}

/// Hodge-theoretic energies of `ω = g(J·, ·)`; flat (constant) metrics only.
pub fn energy_symplectic(j: &EndoField, metric: &MetricField) -> Result<SymplecticEnergies> {
    let (_, g_inv) = metric.require_constant("the symplectic energy")?;
    let omega = lower_index(j, metric)?;
    let h = hodge_operators(&omega, metric)?;
    let grid = j.grid();
    let e2_tilde = weighted_sum(grid, metric, |i, _| two_form_norm_sq(&h.delta_d_omega[i], g_inv));
    let e1_tilde = weighted_sum(grid, metric, |i, _| {
        three_form_norm_sq(&h.d_omega.values()[i], g_inv) + one_form_norm_sq(&h.dstar_omega.values()[i], g_inv)
    });
    Ok(SymplecticEnergies { e1_tilde, e2_tilde })
}

/// `⟨A, B⟩` over the grid; re-exported for diagnostics.
pub fn inner(a: &EndoField, b: &EndoField, metric: &MetricField) -> Result<f64> {
    l2_inner(a, b, metric)
}
