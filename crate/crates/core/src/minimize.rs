//! Projected-gradient descent of `E₂` on the constraint manifold, the
//! minimizing-sequence experiment and energy-concentration scans.
//!
//! Each iteration moves along `S = -G` with the Cayley retraction and picks
//! the step by Armijo backtracking. The step grows by a factor two after
//! every accepted step, which lets it track the stiff `h⁻⁴` scale.

use rayon::prelude::*;

use crate::acs::{project_polar, retract_cayley, CompatibleJField, TangentField};
use crate::energy::{density_mu, energies, gradient_with_residual};
use crate::error::{Error, Result};
use crate::field::{l2_inner, EndoField, TwoForm};
use crate::geometry::Derivatives;
use crate::grid::norm4;
use crate::linalg::pairwise_sum;
use crate::metric::{norm_sq_g, MetricField};
use crate::topology::lattice_periods;

/// Smallest step tried before the run is declared stalled.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop when `‖G‖_{L²} < grad_tol`.
    pub grad_tol: f64,
    /// First trial step; `None` means `h⁴`.
    pub initial_step: Option<f64>,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub checkpoint_every: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            initial_step: None,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            checkpoint_every: 100,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("optimizer config: {m}")));
        if self.max_iters == 0 || self.checkpoint_every == 0 {
            return bad("max_iters and checkpoint_every must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return bad("initial_step must be positive");
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        Ok(())
    }
}

/// One row of the optimizer trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub e2: f64,
    pub e1: f64,
    pub grad_norm: f64,
    /// Step accepted to reach this iterate (0 for the seed).
    pub step: f64,
    pub residual_commutator: f64,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "iteration,e2,e1,grad_norm,step,residual_commutator";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e}",
            self.iteration, self.e2, self.e1, self.grad_norm, self.step, self.residual_commutator
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Stall { reason: String },
}

#[derive(Clone, Debug)]
pub struct MinimizeOutput {
    pub j: CompatibleJField,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

impl MinimizeOutput {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn last(&self) -> &IterationRecord {
        self.trace.last().expect("trace holds at least the seed")
    }
}

/// Runs the descent; `observer` sees every iterate, including the seed.
pub fn minimize_observed<F>(
    j0: &CompatibleJField,
    metric: &MetricField,
    cfg: &OptimizerConfig,
    mut observer: F,
) -> Result<MinimizeOutput>
where
    F: FnMut(&IterationRecord, &CompatibleJField) -> Result<()>,
{
    cfg.validate()?;
    j0.grid().check_same(&metric.grid())?;
    let h = j0.grid().spacing();
    let mut step = cfg.initial_step.unwrap_or(h.powi(4));
    let mut j = j0.clone();
    let (mut e1, mut e2) = energies(&j, metric)?;
    let (mut grad, mut residual) = gradient_with_residual(&j, metric)?;
    let mut grad_norm = l2_inner(&grad, &grad, metric)?.sqrt();
    let mut trace = Vec::new();
    let mut record = IterationRecord { iteration: 0, e2, e1, grad_norm, step: 0.0, residual_commutator: residual };
    observer(&record, &j)?;
    trace.push(record);

    for iteration in 1..=cfg.max_iters {
        if grad_norm < cfg.grad_tol {
            return Ok(MinimizeOutput { j, trace, termination: Termination::Converged });
        }
        let direction = grad.scale(-1.0);
        let slope = grad_norm * grad_norm;
        let mut t = step;
        let accepted = loop {
            if t < MIN_STEP {
                break None;
            }
            let candidate = match retract_cayley(&j, &direction, t, metric) {
                Ok(c) => Some(c),
                Err(Error::StepTooLarge { .. }) => polar_step(&j, &direction, t, metric),
                Err(e) => return Err(e),
            };
            if let Some(c) = candidate {
                let (c_e1, c_e2) = energies(&c, metric)?;
                if c_e2 <= e2 - cfg.armijo_c * t * slope && c_e2 < e2 {
                    break Some((c, c_e1, c_e2));
                }
            }
            t *= cfg.armijo_shrink;
        };
        let Some((next, next_e1, next_e2)) = accepted else {
            let reason = format!(
                "no Armijo step above {MIN_STEP:e} at iteration {iteration} (e2 = {e2:e}, |G| = {grad_norm:e})"
            );
            log::warn!("{reason}");
            return Ok(MinimizeOutput { j, trace, termination: Termination::Stall { reason } });
        };
        j = next;
        e1 = next_e1;
        e2 = next_e2;
        (grad, residual) = gradient_with_residual(&j, metric)?;
        grad_norm = l2_inner(&grad, &grad, metric)?.sqrt();
        record = IterationRecord { iteration, e2, e1, grad_norm, step: t, residual_commutator: residual };
        observer(&record, &j)?;
        trace.push(record);
        log::debug!("iter {iteration}: e2 {e2:e} |G| {grad_norm:e} step {t:e}");
        step = 2.0 * t;
    }
    let termination =
        if grad_norm < cfg.grad_tol { Termination::Converged } else { Termination::MaxIterations };
    Ok(MinimizeOutput { j, trace, termination })
}

pub fn minimize(j0: &CompatibleJField, metric: &MetricField, cfg: &OptimizerConfig) -> Result<MinimizeOutput> {
    minimize_observed(j0, metric, cfg, |_, _| Ok(()))
}

/// Fallback when the Cayley step is too long: `polar(J + 2tJS)`, matching
/// the Cayley curve to first order.
fn polar_step(j: &CompatibleJField, s: &TangentField, t: f64, metric: &MetricField) -> Option<CompatibleJField> {
    let moved = j.zip_map(s, |_, a, b| a + a * b * (2.0 * t));
    project_polar(&moved, metric).ok()
}

/// `F(r, p) = ∫_{B_r(p)} (|∇²J|² + |∇J|⁴)` on a sublattice of centers.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub radii: Vec<f64>,
    pub centers: Vec<[usize; 4]>,
    /// `f_values[c][r]` for center `c` and radius `r`.
    pub f_values: Vec<Vec<f64>>,
    /// `(center, radius)` index pairs with `F ≥ eps0`.
    pub flagged: Vec<(usize, usize)>,
}

/// Scan with `stride` grid steps between centers (`None`: `n / 8`).
pub fn concentration_scan(
    j: &CompatibleJField,
    metric: &MetricField,
    radii: &[f64],
    eps0: f64,
    stride: Option<usize>,
) -> Result<ConcentrationReport> {
    let grid = j.grid();
    let h = grid.spacing();
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii to scan".into()));
    }
    if let Some(r) = radii.iter().find(|&&r| !(r >= 2.0 * h && r < 0.5)) {
        return Err(Error::InvalidArgument(format!("radius {r} outside [2h, 0.5)")));
    }
    let stride = stride.unwrap_or((grid.n() / 8).max(1));
    if stride == 0 || !grid.n().is_multiple_of(stride) {
        return Err(Error::InvalidArgument(format!("stride {stride} must divide n = {}", grid.n())));
    }
    let mu = density_mu(j, metric)?;
    let weighted: Vec<f64> = (0..grid.len()).map(|i| mu.values()[i] * metric.volume_weight(i)).collect();

    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|a, b| radii[*a].total_cmp(&radii[*b]));
    let r_max = radii[order[order.len() - 1]];
    let reach = (r_max / h).ceil() as isize;
    let mut offsets: Vec<([isize; 4], f64)> = Vec::new();
    for a in -reach..=reach {
        for b in -reach..=reach {
            for c in -reach..=reach {
                for d in -reach..=reach {
                    let o = [a, b, c, d];
                    let r = norm4(o.map(|v| v as f64 * h));
                    if r < r_max {
                        offsets.push((o, r));
                    }
                }
            }
        }
    }
    offsets.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));

    let m = grid.n() / stride;
    let centers: Vec<[usize; 4]> = (0..m.pow(4))
        .map(|k| {
            let c = [k / (m * m * m), (k / (m * m)) % m, (k / m) % m, k % m];
            c.map(|v| v * stride)
        })
        .collect();
    // running sums in distance order make F exactly monotone in r
    let f_values: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&p| {
            let mut out = vec![0.0; radii.len()];
            let mut sum = 0.0;
            let mut next = 0;
            for &ri in &order {
                while next < offsets.len() && offsets[next].1 < radii[ri] {
                    sum += weighted[grid.offset(p, offsets[next].0)];
                    next += 1;
                }
                out[ri] = sum;
            }
            out
        })
        .collect();
    let mut flagged = Vec::new();
    for (c, row) in f_values.iter().enumerate() {
        for (r, f) in row.iter().enumerate() {
            if *f >= eps0 {
                flagged.push((c, r));
            }
        }
    }
    Ok(ConcentrationReport { radii: radii.to_vec(), centers, f_values, flagged })
}

/// Outcome of one seed in [`sequence_experiment`].
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub initial_e2: f64,
    pub final_e2: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub start_periods: TwoForm,
    pub end_periods: TwoForm,
    /// Largest period change seen along the run.
    pub period_drift: f64,
}

#[derive(Clone, Debug)]
pub struct SequenceReport {
    pub runs: Vec<SeedRun>,
    /// `W^{1,2}` distances between final fields.
    pub distances: Vec<Vec<f64>>,
    /// Smallest final energy over the seeds.
    pub empirical_inf: f64,
}

/// `(∫ |A - B|² + |∇(A - B)|²)^{1/2}`.
pub fn w12_distance(a: &EndoField, b: &EndoField, metric: &MetricField) -> Result<f64> {
    a.grid().check_same(&b.grid())?;
    let diff = a - b;
    let d = Derivatives::new(&diff, metric)?;
    let grid = a.grid();
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (g, gi) = (metric.g(i), metric.g_inv(i));
            let first = d.first_all(grid.coords(i));
            let mut s = norm_sq_g(&diff[i], g, gi);
            for p in 0..4 {
                for q in 0..4 {
                    if gi[(p, q)] != 0.0 {
                        s += gi[(p, q)] * crate::metric::inner_g(&first[p], &first[q], g, gi);
                    }
                }
            }
            s * metric.volume_weight(i)
        })
        .collect();
    Ok(pairwise_sum(&terms).sqrt())
}

/// Runs [`minimize`] from each seed and compares the limits. Periods are
/// sampled every `cfg.checkpoint_every` iterations and at the end.
pub fn sequence_experiment(
    seeds: &[CompatibleJField],
    metric: &MetricField,
    cfg: &OptimizerConfig,
) -> Result<SequenceReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("sequence experiment needs at least one seed".into()));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    let mut finals = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let start_periods = lattice_periods(seed, metric)?;
        let mut drift = 0.0f64;
        let out = minimize_observed(seed, metric, cfg, |rec, j| {
            if rec.iteration % cfg.checkpoint_every == 0 {
                let p = lattice_periods(j, metric)?;
                for k in 0..6 {
                    drift = drift.max((p[k] - start_periods[k]).abs());
                }
            }
            Ok(())
        })?;
        let end_periods = lattice_periods(&out.j, metric)?;
        for k in 0..6 {
            drift = drift.max((end_periods[k] - start_periods[k]).abs());
        }
        runs.push(SeedRun {
            initial_e2: out.trace[0].e2,
            final_e2: out.last().e2,
            iterations: out.last().iteration,
            termination: out.termination.clone(),
            start_periods,
            end_periods,
            period_drift: drift,
        });
        finals.push(out.j);
    }
    let k = finals.len();
    let mut distances = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let d = w12_distance(&finals[a], &finals[b], metric)?;
            distances[a][b] = d;
            distances[b][a] = d;
        }
    }
    let empirical_inf = runs.iter().map(|r| r.final_e2).fold(f64::INFINITY, f64::min);
    Ok(SequenceReport { runs, distances, empirical_inf })
}
