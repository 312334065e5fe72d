//! Splicing two compatible structures across an annulus.
//!
//! With `s = |x - center| / scale`, the pipeline is
//! 1. cutoff interpolation `M = J_out + (J_in - J_out)(1 - ψ(s))`,
//! 2. mollification with a location-dependent radius `ρ(s)·scale`,
//! 3. polar projection back onto compatible structures.
//!
//! `ψ` switches from 0 to 1 on `[1 - 1/j, 1]` and `ρ` vanishes outside that
//! interval, so points off the open annulus are copied from the inputs.

use rayon::prelude::*;

use crate::acs::{polar_parts, validate, CompatibleJField, DEFAULT_TOL, SIGMA_MIN};
use crate::energy::{density_mu, energy_e2};
use crate::error::{Error, Result};
use crate::field::EndoField;
use crate::geometry::Derivatives;
use crate::grid::{norm4, torus_displacement, Grid};
use crate::linalg::{pairwise_sum, Mat4};
use crate::metric::MetricField;

/// Number of samples used when a profile checks its derivative bounds.
pub const PROFILE_SAMPLES: usize = 10_000;

/// Radius function of the variable mollification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadiusProfile {
    /// The annulus profile tied to the sharpness `j`.
    Annulus,
    /// Constant radius (in units of `scale`) on the open annulus.
    Constant(f64),
    /// No mollification.
    Zero,
}

/// Cutoff `ψ` and radius `ρ` for annulus sharpness `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlueProfile {
    pub j: u32,
    pub rho_bar: f64,
    pub delta1: f64,
    pub radius: RadiusProfile,
}

/// Quintic smoothstep, flat to second order at both ends.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

impl GlueProfile {
    /// Profile with `δ₁ = 1/j` and `ρ̄ = 1/(10 j²)`; bounds are sampled and
    /// checked before returning.
    pub fn new(j: u32) -> Result<Self> {
        Self::with_radius(j, RadiusProfile::Annulus)
    }

    pub fn with_radius(j: u32, radius: RadiusProfile) -> Result<Self> {
        if j < 3 {
            return Err(Error::InvalidProfile(format!("sharpness j = {j} must be at least 3")));
        }
        if let RadiusProfile::Constant(r) = radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidProfile(format!("radius {r} must be nonnegative")));
            }
        }
        let jf = j as f64;
        let profile = Self { j, rho_bar: 1.0 / (10.0 * jf * jf), delta1: 1.0 / jf, radius };
        profile.check_bounds()?;
        Ok(profile)
    }

    /// Inner radius `1 - 1/j` of the annulus (in units of `scale`).
    pub fn inner(&self) -> f64 {
        1.0 - 1.0 / self.j as f64
    }

    fn local(&self, s: f64) -> f64 {
        (s - self.inner()) * self.j as f64
    }

    /// `ψ(s)`: exactly 0 on `[0, 1 - 1/j]`, exactly 1 on `[1, ∞)`.
    pub fn psi(&self, s: f64) -> f64 {
        if s <= self.inner() {
            0.0
        } else if s >= 1.0 {
            1.0
        } else {
            smoothstep(self.local(s))
        }
    }

    /// Normalized bump `B(t)` on `[0, 1]`: slope one on the edge strips of
    /// width `δ₁`, a parabola in between, symmetric about `½`.
    fn bump(&self, t: f64) -> f64 {
        let d = self.delta1;
        let t = t.min(1.0 - t);
        if t <= 0.0 {
            0.0
        } else if t <= d {
            t
        } else {
            let half = 0.5 - d;
            let u = t - d;
            d + u - u * u / (2.0 * half)
        }
    }

    /// `ρ(s)`, supported in the open annulus.
    pub fn rho(&self, s: f64) -> f64 {
        if s <= self.inner() || s >= 1.0 {
            return 0.0;
        }
        match self.radius {
            RadiusProfile::Annulus => self.rho_bar * self.bump(self.local(s)),
            RadiusProfile::Constant(r) => r,
            RadiusProfile::Zero => 0.0,
        }
    }

    fn check_bounds(&self) -> Result<()> {
        let jf = self.j as f64;
        let lo = self.inner();
        let width = 1.0 / jf;
        let step = width / PROFILE_SAMPLES as f64;
        let fail = |what: String| Err(Error::InvalidProfile(what));
        // second differences on a fine interior grid
        let (mut max_d1, mut max_d2) = (0.0f64, 0.0f64);
        let (mut max_rho_d, mut edge_max, mut mid_min) = (0.0f64, 0.0f64, f64::INFINITY);
        let e = 1e-3 * step;
        let threshold = self.delta1 * self.rho_bar;
        for k in 1..PROFILE_SAMPLES {
            let s = lo + k as f64 * step;
            let d1 = (self.psi(s + e) - self.psi(s - e)) / (2.0 * e);
            let d2 = (self.psi(s + e) - 2.0 * self.psi(s) + self.psi(s - e)) / (e * e);
            max_d1 = max_d1.max(d1.abs());
            max_d2 = max_d2.max(d2.abs());
            if self.radius == RadiusProfile::Annulus {
                let r1 = (self.rho(s + e) - self.rho(s - e)) / (2.0 * e);
                let r2 = (self.rho(s + e) - 2.0 * self.rho(s) + self.rho(s - e)) / (e * e);
                // the bump has kinks only where its pieces meet
                let t = self.local(s);
                let near_joint = [self.delta1, 1.0 - self.delta1]
                    .iter()
                    .any(|&c| (t - c).abs() * width < 2.0 * e);
                if !near_joint {
                    max_rho_d = max_rho_d.max(r1.abs() + r2.abs());
                }
                let inside_edge = t < self.delta1 || t > 1.0 - self.delta1;
                if inside_edge {
                    edge_max = edge_max.max(self.rho(s));
                } else {
                    mid_min = mid_min.min(self.rho(s));
                }
            }
        }
        if max_d1 > 3.0 * jf {
            return fail(format!("|psi'| = {max_d1} exceeds 3j"));
        }
        if max_d2 > 10.0 * jf * jf * (1.0 + 1e-4) {
            return fail(format!("|psi''| = {max_d2} exceeds 10j^2"));
        }
        if self.radius == RadiusProfile::Annulus {
            let bound = 10.0 * self.rho_bar * jf * jf;
            if max_rho_d > bound * (1.0 + 1e-4) || bound > 1.0 + 1e-12 {
                return fail(format!("|rho'| + |rho''| = {max_rho_d} exceeds {bound}"));
            }
            if edge_max >= threshold {
                return fail(format!("rho reaches {edge_max} on an edge strip"));
            }
            if mid_min < threshold * (1.0 - 1e-12) {
                return fail(format!("rho drops to {mid_min} in the middle"));
            }
            let anchors = [lo + self.delta1 / jf, 1.0 - self.delta1 / jf];
            for a in anchors {
                if (self.rho(a) - threshold).abs() > 1e-12 * threshold {
                    return fail(format!("rho({a}) = {} differs from {threshold}", self.rho(a)));
                }
            }
        }
        Ok(())
    }
}

/// Radial bump `φ(r) = (12/π²)(1 - r²)²` on the unit 4-ball (unit mass),
/// integrated with Gauss–Legendre radial nodes times the 24-cell vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifierKernel {
    nodes: Vec<([f64; 4], f64)>,
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::new()
    }
}

impl MollifierKernel {
    pub fn new() -> Self {
        // 4-point Gauss–Legendre on [-1, 1]
        const GL: [(f64, f64); 4] = [
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
            (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
        ];
        let mut dirs: Vec<[f64; 4]> = Vec::with_capacity(24);
        for a in 0..4 {
            for sign in [1.0, -1.0] {
                let mut v = [0.0; 4];
                v[a] = sign;
                dirs.push(v);
            }
        }
        for bits in 0..16u32 {
            dirs.push(std::array::from_fn(|a| if bits >> a & 1 == 1 { -0.5 } else { 0.5 }));
        }
        let sphere = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        let mut nodes = Vec::with_capacity(GL.len() * dirs.len());
        for (x, w) in GL {
            let r = 0.5 * (x + 1.0);
            let radial = 0.5 * w * r.powi(3) * Self::phi(r) * sphere / dirs.len() as f64;
            for d in &dirs {
                nodes.push((d.map(|c| c * r), radial));
            }
        }
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= total;
        }
        Self { nodes }
    }

    /// Kernel profile; zero for `r ≥ 1`.
    pub fn phi(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            let u = 1.0 - r * r;
            12.0 / (std::f64::consts::PI * std::f64::consts::PI) * u * u
        }
    }

    /// Quadrature nodes in the unit ball with weights summing to one.
    pub fn nodes(&self) -> &[([f64; 4], f64)] {
        &self.nodes
    }
}

/// Multilinear interpolation of a periodic field at torus position `y`.
pub fn sample(field: &EndoField, y: [f64; 4]) -> Mat4 {
    let grid = field.grid();
    let n = grid.n() as f64;
    let mut base = [0usize; 4];
    let mut frac = [0.0; 4];
    for a in 0..4 {
        let u = y[a] * n;
        let f = u.floor();
        frac[a] = u - f;
        base[a] = f.rem_euclid(n) as usize;
    }
    let mut out = Mat4::zeros();
    for corner in 0..16u32 {
        let mut w = 1.0;
        let mut off = [0isize; 4];
        for a in 0..4 {
            if corner >> a & 1 == 1 {
                w *= frac[a];
                off[a] = 1;
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if w != 0.0 {
            out += field[grid.offset(base, off)] * w;
        }
    }
    out
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "annulus scale {scale} must lie in (0, 0.5) to avoid periodic self-overlap"
        )));
    }
    Ok(())
}

fn radial(grid: Grid, center: [usize; 4], scale: f64, idx: usize) -> f64 {
    let x = grid.position(grid.coords(idx));
    norm4(torus_displacement(x, grid.position(center))) / scale
}

/// `J_out + (J_in - J_out)(1 - ψ(s))`, copying `J_out` where `ψ = 1` and
/// `J_in` where `ψ = 0`.
pub fn cutoff_interpolate(
    j_out: &EndoField,
    j_in: &EndoField,
    profile: &GlueProfile,
    center: [usize; 4],
    scale: f64,
) -> Result<EndoField> {
    check_scale(scale)?;
    j_out.grid().check_same(&j_in.grid())?;
    let grid = j_out.grid();
    Ok(j_out.map(|i, out| {
        let psi = profile.psi(radial(grid, center, scale, i));
        if psi == 1.0 {
            *out
        } else if psi == 0.0 {
            j_in[i]
        } else {
            out + (j_in[i] - out) * (1.0 - psi)
        }
    }))
}

/// Kernel average over the ball of radius `ρ(s)·scale`; points whose radius
/// is below `2h` are returned unchanged.
pub fn mollify_variable(
    m: &EndoField,
    profile: &GlueProfile,
    kernel: &MollifierKernel,
    center: [usize; 4],
    scale: f64,
) -> Result<EndoField> {
    check_scale(scale)?;
    let grid = m.grid();
    let min_radius = 2.0 * grid.spacing();
    let skipped = std::sync::atomic::AtomicUsize::new(0);
    let out = m.map(|i, value| {
        let r = profile.rho(radial(grid, center, scale, i)) * scale;
        if r == 0.0 {
            return *value;
        }
        if r < min_radius {
            skipped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            return *value;
        }
        let x = grid.position(grid.coords(i));
        kernel.nodes().iter().fold(Mat4::zeros(), |acc, (z, w)| {
            let y = std::array::from_fn(|a| x[a] + r * z[a]);
            acc + sample(m, y) * *w
        })
    });
    let skipped = skipped.into_inner();
    if skipped > 0 {
        log::debug!("mollifier radius below 2h at {skipped} points; left unchanged");
    }
    Ok(out)
}

/// Admissibility thresholds for [`glue`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlueSettings {
    /// Largest `|J_in - J_out|_F` allowed on the open annulus.
    pub closeness_tol: f64,
    /// Small-energy alternative: `μ` of the annulus neighborhood below `eps0`.
    pub eps0: f64,
    pub sigma_min: f64,
}

impl Default for GlueSettings {
    fn default() -> Self {
        Self { closeness_tol: 0.5, eps0: 0.1, sigma_min: SIGMA_MIN }
    }
}

/// Result of [`glue`].
#[derive(Clone, Debug)]
pub struct GlueOutput {
    pub j: CompatibleJField,
    /// `∫_annulus |ΔJ|²` of the glued field.
    pub annulus_energy: f64,
    /// `∫ μ` of both inputs over the annulus neighborhood.
    pub neighborhood_mu: f64,
    /// `annulus_energy / neighborhood_mu` (0 when both vanish).
    pub measured_constant: f64,
    /// `max |J_in - J_out|_F` on the open annulus.
    pub input_gap: f64,
    /// `∫ |∇J_glued - ∇J_out|⁴` over the neighborhood.
    pub gradient_gap_l4: f64,
}

fn region_integral(values: &[f64], metric: &MetricField, keep: &[bool]) -> f64 {
    let terms: Vec<f64> = values
        .iter()
        .zip(keep)
        .enumerate()
        .map(|(i, (v, k))| if *k { v * metric.volume_weight(i) } else { 0.0 })
        .collect();
    pairwise_sum(&terms)
}

/// Splice `J_in` (inside radius `scale(1 - 1/j)`) to `J_out` (outside `scale`).
#[allow(clippy::too_many_arguments)]
pub fn glue(
    j_out: &CompatibleJField,
    j_in: &CompatibleJField,
    profile: &GlueProfile,
    kernel: &MollifierKernel,
    center: [usize; 4],
    scale: f64,
    metric: &MetricField,
    settings: &GlueSettings,
) -> Result<GlueOutput> {
    check_scale(scale)?;
    let grid = j_out.grid();
    grid.check_same(&j_in.grid())?;
    grid.check_same(&metric.grid())?;
    let s: Vec<f64> = (0..grid.len()).map(|i| radial(grid, center, scale, i)).collect();
    let annulus: Vec<bool> = s.iter().map(|&v| v > profile.inner() && v < 1.0).collect();
    let reach = profile.rho_bar;
    let neighborhood: Vec<bool> =
        s.iter().map(|&v| v >= profile.inner() - reach && v <= 1.0 + reach).collect();

    let input_gap = (0..grid.len())
        .filter(|&i| annulus[i])
        .map(|i| (j_in[i] - j_out[i]).norm())
        .fold(0.0, f64::max);
    let mu_out = density_mu(j_out, metric)?;
    let mu_in = density_mu(j_in, metric)?;
    let neighborhood_mu = region_integral(mu_out.values(), metric, &neighborhood)
        + region_integral(mu_in.values(), metric, &neighborhood);
    if input_gap > settings.closeness_tol && neighborhood_mu > settings.eps0 {
        return Err(Error::GluePrecondition(format!(
            "inputs differ by {input_gap:.3e} > {} on the annulus and its neighborhood energy {neighborhood_mu:.3e} exceeds eps0 = {}",
            settings.closeness_tol, settings.eps0
        )));
    }

    let cut = cutoff_interpolate(j_out, j_in, profile, center, scale)?;
    let smooth = mollify_variable(&cut, profile, kernel, center, scale)?;
    let parts: Vec<Option<(Mat4, f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            annulus[i].then(|| {
                let p = polar_parts(&smooth[i], metric.g(i));
                (p.j, p.min_eigenvalue, p.defect)
            })
        })
        .collect();
    let worst = parts
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p.1, p.2)))
        .fold(None, |acc: Option<(usize, f64, f64)>, b| match acc {
            Some(a) if a.1 <= b.1 => Some(a),
            _ => Some(b),
        });
    if let Some((i, min_eig, defect)) = worst {
        if min_eig < settings.sigma_min {
            return Err(Error::GlueFailure { worst_point: grid.coords(i), defect });
        }
    }
    let values = (0..grid.len())
        .map(|i| match parts[i] {
            Some((j, _, _)) => j,
            None => cut[i],
        })
        .collect();
    let glued = validate(EndoField::from_values(grid, values), metric, DEFAULT_TOL)?;

    let report = energy_e2(&glued, metric)?;
    let annulus_energy = region_integral(report.density_xi.values(), metric, &annulus);
    let measured_constant = if neighborhood_mu > 0.0 { annulus_energy / neighborhood_mu } else { 0.0 };
    let diff = glued.field() - j_out.field();
    let d = Derivatives::new(&diff, metric)?;
    let fourth: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !neighborhood[i] {
                return 0.0;
            }
            let sq: f64 = d.first_all(grid.coords(i)).iter().map(|m| m.norm_squared()).sum();
            sq * sq
        })
        .collect();
    let gradient_gap_l4 = region_integral(&fourth, metric, &vec![true; grid.len()]);
    Ok(GlueOutput {
        j: glued,
        annulus_energy,
        neighborhood_mu,
        measured_constant,
        input_gap,
        gradient_gap_l4,
    })
}

/// Both sides of the Poincaré inequality
/// `R^{-4} ∫_{B_R} |f - f_*|² ≤ C R^{-2} ∫_{B_R} |Df|²` on the grid ball,
/// with `f_*` the kernel-weighted mean over the ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareSides {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn poincare_check(m: &EndoField, center: [usize; 4], radius: f64) -> Result<PoincareSides> {
    let grid = m.grid();
    if !(radius > grid.spacing() && radius < 0.5) {
        return Err(Error::InvalidArgument(format!("ball radius {radius} must lie in (h, 0.5)")));
    }
    let c = grid.position(center);
    let ball: Vec<(usize, f64)> = (0..grid.len())
        .filter_map(|i| {
            let r = norm4(torus_displacement(grid.position(grid.coords(i)), c)) / radius;
            (r < 1.0).then_some((i, r))
        })
        .collect();
    let weights: Vec<f64> = ball.iter().map(|&(_, r)| MollifierKernel::phi(r)).collect();
    let total = pairwise_sum(&weights);
    let mean = ball
        .iter()
        .zip(&weights)
        .fold(Mat4::zeros(), |acc, (&(i, _), w)| acc + m[i] * (w / total));
    let cell = grid.cell_volume();
    let inv_2h = 0.5 / grid.spacing();
    let (mut lhs_terms, mut rhs_terms) = (Vec::with_capacity(ball.len()), Vec::with_capacity(ball.len()));
    for &(i, _) in &ball {
        lhs_terms.push((m[i] - mean).norm_squared() * cell);
        let x = grid.coords(i);
        let grad: f64 = (0..4)
            .map(|p| ((m[grid.shift(x, p, 1)] - m[grid.shift(x, p, -1)]) * inv_2h).norm_squared())
            .sum();
        rhs_terms.push(grad * cell);
    }
    Ok(PoincareSides {
        lhs: pairwise_sum(&lhs_terms) / radius.powi(4),
        rhs: pairwise_sum(&rhs_terms) / radius.powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acs::{rotation_perturbation, standard_structure};

    #[test]
    fn profiles_satisfy_bounds() {
        for j in [3, 4, 5, 8, 20] {
            let p = GlueProfile::new(j).unwrap();
            assert_eq!(p.psi(p.inner()), 0.0);
            assert_eq!(p.psi(1.0), 1.0);
            assert_eq!(p.rho(p.inner()), 0.0);
            assert_eq!(p.rho(1.0), 0.0);
        }
        assert!(GlueProfile::new(2).is_err());
        assert!(GlueProfile::with_radius(4, RadiusProfile::Constant(-1.0)).is_err());
    }

    #[test]
    fn kernel_has_unit_mass_and_vanishing_first_moment() {
        let k = MollifierKernel::new();
        let mass: f64 = k.nodes().iter().map(|n| n.1).sum();
        assert!((mass - 1.0).abs() < 1e-14);
        for a in 0..4 {
            let m: f64 = k.nodes().iter().map(|(z, w)| z[a] * w).sum();
            assert!(m.abs() < 1e-15);
        }
        assert_eq!(MollifierKernel::phi(1.0), 0.0);
        // radial mass of the closed form is one
        let steps = 100_000;
        let sphere = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        let integral: f64 = (0..steps)
            .map(|i| {
                let r = (i as f64 + 0.5) / steps as f64;
                sphere * r.powi(3) * MollifierKernel::phi(r) / steps as f64
            })
            .sum();
        assert!((integral - 1.0).abs() < 1e-8);
    }

    #[test]
    fn interpolation_midpoint_is_average() {
        let grid = Grid::new(8).unwrap();
        let a = EndoField::constant(grid, Mat4::identity());
        let b = EndoField::constant(grid, Mat4::zeros());
        let p = GlueProfile::new(3).unwrap();
        // ψ(s) = ½ at the middle of the annulus; sample a point there by
        // choosing the scale so a grid point lands on it
        let mid = p.inner() + 0.5 / 3.0;
        let scale = 2.0 / 8.0 / mid;
        let cut = cutoff_interpolate(&a, &b, &p, [0; 4], scale).unwrap();
        let idx = grid.index([2, 0, 0, 0]);
        assert!((cut[idx] - Mat4::identity() * 0.5).norm() < 1e-12);
    }

    #[test]
    fn identical_inputs_glue_to_themselves() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let j = standard_structure(&metric).unwrap();
        let out = glue(&j, &j, &GlueProfile::new(3).unwrap(), &MollifierKernel::new(), [4; 4], 0.4, &metric, &GlueSettings::default())
            .unwrap();
        assert_eq!(out.j.values(), j.values());
        assert_eq!(out.annulus_energy, 0.0);
    }

    #[test]
    fn opposite_structures_fail_to_glue() {
        let grid = Grid::new(8).unwrap();
        let metric = MetricField::flat(grid);
        let j = standard_structure(&metric).unwrap();
        let neg = validate(j.field().scale(-1.0), &metric, DEFAULT_TOL).unwrap();
        let (p, k) = (GlueProfile::new(3).unwrap(), MollifierKernel::new());
        let perm = GlueSettings { closeness_tol: f64::INFINITY, ..Default::default() };
        let strict = GlueSettings::default();
        let r = rotation_perturbation(&metric, 1.5, 1.0, (0, 2)).unwrap();
        assert!(matches!(glue(&neg, &j, &p, &k, [4; 4], 0.4, &metric, &perm), Err(Error::GlueFailure { .. })));
        assert!(matches!(glue(&r, &j, &p, &k, [4; 4], 0.4, &metric, &strict), Err(Error::GluePrecondition(_))));
    }

    #[test]
    fn bad_scale_is_rejected() {
        let grid = Grid::new(8).unwrap();
        let a = EndoField::zeros(grid);
        let p = GlueProfile::new(3).unwrap();
        assert!(cutoff_interpolate(&a, &a, &p, [0; 4], 0.6).is_err());
    }

    #[test]
    fn poincare_of_constant_is_zero() {
        let grid = Grid::new(8).unwrap();
        let m = EndoField::constant(grid, Mat4::identity());
        let sides = poincare_check(&m, [4; 4], 0.3).unwrap();
        assert!(sides.lhs < 1e-28);
        assert_eq!(sides.rhs, 0.0);
    }
}
