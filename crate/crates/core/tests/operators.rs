mod common;

use bhacs::acs::{
    polar_parts, project_polar, random_field, retract_cayley, standard_structure, tangent_project, tangent_residual,
    validate, DEFAULT_TOL,
};
use bhacs::energy::{
    density_mu, e2_value, energies, energy_e2, gradient_with_residual, residual_commutator, weak_functional,
    weak_functional_split,
};
use bhacs::field::l2_norm;
use bhacs::geometry::rough_laplacian;
use bhacs::glue::{
    glue, mollify_variable, poincare_check, GlueProfile, GlueSettings, MollifierKernel, RadiusProfile,
};
use bhacs::grid::{norm4, torus_displacement};
use bhacs::minimize::concentration_scan;
use bhacs::topology::{lattice_periods, sphere_map_seed};
use bhacs::{EndoField, Grid, Mat4, MetricField};
use proptest::prelude::*;

use common::*;

#[test]
fn laplacian_acts_on_cosines_by_its_symbol() {
    let grid = Grid::new(16).unwrap();
    let metric = MetricField::flat(grid);
    let h = grid.spacing();
    let coeff = Mat4::from_fn(|r, c| (r * 4 + c) as f64 - 7.5);
    for k in [[1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 0.0, 3.0], [4.0, 1.0, 1.0, 2.0]] {
        let f = EndoField::from_fn(grid, |c| {
            let x = grid.position(c);
            coeff * (2.0 * std::f64::consts::PI * (0..4).map(|a| k[a] * x[a]).sum::<f64>()).cos()
        });
        let lap = rough_laplacian(&f, &metric).unwrap();
        let expected = f.scale(wide_symbol(k, h));
        assert!(lap.max_abs_diff(&expected) <= 1e-9 * expected.max_norm(), "k = {k:?}");
    }
}

#[test]
fn energy_matches_plain_loops() {
    let grid = Grid::new(8).unwrap();
    for metric in [MetricField::flat(grid), skewed_metric(grid)] {
        let j = smooth_compatible(&metric, 0.7, 3);
        let (g, _) = metric.constant_value().unwrap();
        let direct = naive_e2(&j, g);
        let lib = e2_value(&j, &metric).unwrap();
        assert!((lib - direct).abs() <= 1e-12 * direct, "{lib} vs {direct}");
        let lap = rough_laplacian(&j, &metric).unwrap();
        let loops = naive_laplacian(&j, &g.try_inverse().unwrap());
        let diff = lap.values().iter().zip(&loops).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-10 * lap.max_norm());
        let sq = naive_inner(lap.values(), lap.values(), g, 8);
        assert!((sq - direct).abs() <= 1e-12 * direct);
    }
}

#[test]
fn gradient_norm_is_twice_commutator_residual() {
    let grid = Grid::new(8).unwrap();
    for metric in [MetricField::flat(grid), skewed_metric(grid)] {
        let j = smooth_compatible(&metric, 0.5, 11);
        let (grad, rc) = gradient_with_residual(&j, &metric).unwrap();
        let norm = l2_norm(&grad, &metric).unwrap();
        assert!((norm - 2.0 * rc).abs() <= 1e-10 * norm);
        assert!((rc - residual_commutator(&j, &metric).unwrap()).abs() <= 1e-12 * rc);
    }
}

#[test]
fn weak_forms_agree_up_to_discretization() {
    // weak(T) + 2·split(JT) is a product-rule defect of order h², once the
    // field is resolved
    let gaps: Vec<f64> = [16usize, 32]
        .iter()
        .map(|&n| {
            let metric = MetricField::flat(Grid::new(n).unwrap());
            let j = smooth_compatible(&metric, 0.4, 21);
            let t = bhacs::energy::battery_field(metric.grid(), 5, 0);
            let jt = j.field().zip_map(&t, |_, a, b| a * b);
            let weak = weak_functional(&j, &metric, &t).unwrap();
            let split = weak_functional_split(&j, &metric, &jt).unwrap();
            (weak + 2.0 * split).abs() / weak.abs()
        })
        .collect();
    assert!(gaps[1] < 0.3 * gaps[0], "gaps {gaps:?}");
}

#[test]
fn periods_add_over_planes() {
    let metric = MetricField::flat(Grid::new(16).unwrap());
    let j = sphere_map_seed(&[0, 1, 1, 0, 0, 0], &metric).unwrap();
    let p = lattice_periods(&j, &metric).unwrap();
    let expected_02 = 2.0 * slice_degree(&j, (0, 2), [0; 4]);
    let expected_03 = 2.0 * slice_degree(&j, (0, 3), [0; 4]);
    assert!((p[1] - expected_02).abs() < 1e-9 && (p[1] - 2.0).abs() < 1e-9, "{p:?}");
    assert!((p[2] - expected_03).abs() < 1e-9 && (p[2] - 2.0).abs() < 1e-9, "{p:?}");
    assert!(p[0].abs() < 1e-9 && p[3].abs() < 1e-9);
}

#[test]
fn mollifier_preserves_affine_fields() {
    let grid = Grid::new(16).unwrap();
    let a = Mat4::from_fn(|r, c| (r as f64) - 0.5 * c as f64);
    let b: [Mat4; 4] = std::array::from_fn(|k| Mat4::from_fn(|r, c| ((r + 2 * c + k) % 5) as f64 * 0.3));
    let m = EndoField::from_fn(grid, |c| {
        let x = grid.position(c);
        (0..4).fold(a, |acc, k| acc + b[k] * x[k])
    });
    let profile = GlueProfile::with_radius(3, RadiusProfile::Constant(0.3)).unwrap();
    let (center, scale) = ([8usize; 4], 0.35);
    let out = mollify_variable(&m, &profile, &MollifierKernel::new(), center, scale).unwrap();
    let mut touched = 0;
    for i in 0..grid.len() {
        let s = norm4(torus_displacement(grid.position(grid.coords(i)), grid.position(center))) / scale;
        if s > profile.inner() && s < 1.0 {
            touched += 1;
            assert!((out[i] - m[i]).norm() < 1e-6);
        } else {
            assert_eq!(out[i], m[i]);
        }
    }
    assert!(touched > 0);
}

#[test]
fn glue_changes_energy_only_near_the_annulus() {
    let grid = Grid::new(16).unwrap();
    let metric = MetricField::flat(grid);
    let outer = bhacs::acs::rotation_perturbation(&metric, 0.05, 1.0, (0, 2)).unwrap();
    let inner = standard_structure(&metric).unwrap();
    let (center, scale) = ([8usize; 4], 0.4);
    let profile = GlueProfile::new(4).unwrap();
    let out = glue(&outer, &inner, &profile, &MollifierKernel::new(), center, scale, &metric, &GlueSettings::default())
        .unwrap();
    let glued = energy_e2(&out.j, &metric).unwrap().density_xi;
    let (d_out, d_in) = (energy_e2(&outer, &metric).unwrap().density_xi, energy_e2(&inner, &metric).unwrap().density_xi);
    // the Laplacian stencil reaches two points
    let reach = 2.0 * grid.spacing() / scale;
    for i in 0..grid.len() {
        let s = norm4(torus_displacement(grid.position(grid.coords(i)), grid.position(center))) / scale;
        if s > 1.0 + reach {
            assert_eq!(glued.values()[i], d_out.values()[i]);
        } else if s < profile.inner() - reach {
            assert_eq!(glued.values()[i], d_in.values()[i]);
        }
    }
}

#[test]
fn poincare_holds_for_smooth_fields() {
    let metric = MetricField::flat(Grid::new(16).unwrap());
    let j = smooth_compatible(&metric, 0.6, 8);
    for radius in [0.2, 0.3, 0.45] {
        let sides = poincare_check(&j, [8; 4], radius).unwrap();
        assert!(sides.lhs > 0.0 && sides.lhs <= sides.rhs, "{sides:?} at R = {radius}");
    }
}

#[test]
fn concentration_scan_flags_a_bubble() {
    let metric = MetricField::flat(Grid::new(16).unwrap());
    let j = sphere_map_seed(&[1, 0, 0, 0, 0, 0], &metric).unwrap();
    let h = metric.grid().spacing();
    let report = concentration_scan(&j, &metric, &[2.0 * h, 4.0 * h], 1e-6, None).unwrap();
    assert!(!report.flagged.is_empty());
    for f in &report.f_values {
        assert!(f[0] <= f[1]);
    }
    let mu = density_mu(&j, &metric).unwrap();
    assert!(mu.values().iter().all(|v| *v >= 0.0));
    let (e1, e2) = energies(&j, &metric).unwrap();
    assert!(e1 > 0.0 && e2 > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_lands_on_the_manifold(seed in 0u64..10_000, amp in 0.05f64..0.5, skewed in any::<bool>()) {
        let grid = Grid::new(8).unwrap();
        let metric = if skewed { skewed_metric(grid) } else { MetricField::flat(grid) };
        let j0 = standard_structure(&metric).unwrap();
        let m = j0.field().zip_map(&random_field(grid, seed), |_, a, b| a + b * amp);
        let j = project_polar(&m, &metric).unwrap();
        prop_assert!(j.max_square_violation() <= DEFAULT_TOL && j.max_metric_violation() <= DEFAULT_TOL);
        // projecting a structure returns it
        let again = project_polar(&j, &metric).unwrap();
        prop_assert!(again.max_abs_diff(&j) <= 1e-12);
        // pieces recombine: A = Q J
        let i = (seed as usize) % grid.len();
        let parts = polar_parts(&m[i], metric.g(i));
        prop_assert!((parts.q * parts.j - parts.skew).norm() <= 1e-10 * parts.skew.norm());
    }

    #[test]
    fn tangent_projection_is_idempotent(seed in 0u64..10_000, t in -0.3f64..0.3) {
        let grid = Grid::new(8).unwrap();
        let metric = skewed_metric(grid);
        let j = smooth_compatible(&metric, 0.4, seed % 7);
        let s = tangent_project(&j, &random_field(grid, seed), &metric).unwrap();
        for i in 0..grid.len() {
            prop_assert!(tangent_residual(&j[i], &s[i], metric.g(i)) <= 1e-12 * (1.0 + s[i].norm()));
        }
        let twice = tangent_project(&j, &s, &metric).unwrap();
        prop_assert!(twice.max_abs_diff(&s) <= 1e-12 * (1.0 + s.max_norm()));
        let s = s.scale(1.0 / s.max_norm());
        let moved = retract_cayley(&j, &s, t, &metric).unwrap();
        prop_assert!(validate(moved.into_field(), &metric, DEFAULT_TOL).is_ok());
    }
}
