mod common;

use common::{classical_nt_step, ComplexSplit};
use csebt2_core::models::auxiliary::{LinearDecay, SourceFree};
use csebt2_core::models::StiffSource;
use csebt2_core::scheme::{compute_dt, evolve, semi_discrete_step, step_with_dt};
use csebt2_core::stability::phi;
use csebt2_core::{BalanceLaw, BoundaryKind, Grid1D, ModelSpec, SchemeConfig, SolutionField};
use num_complex::Complex64;
use proptest::prelude::*;

fn periodic(cfl: f64, eps: f64, t_final: f64) -> SchemeConfig {
    SchemeConfig::new(cfl, eps, BoundaryKind::Periodic, t_final).unwrap()
}

fn sw_field(n: usize, data: &[(f64, f64)]) -> SolutionField {
    let grid = Grid1D::new(0.0, 1.0, n).unwrap();
    SolutionField::from_data(grid, 2, data.iter().flat_map(|&(h, q)| [h, q]).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn source_free_step_is_classical_nt(
        data in prop::collection::vec((0.5f64..2.0, -0.5f64..0.5), 8..48),
        cfl in 0.05f64..0.5,
    ) {
        let model = SourceFree(ModelSpec::shallow_water());
        let field = sw_field(data.len(), &data);
        let config = periodic(cfl, 1.0, 10.0);
        let dt = compute_dt(&model, &field, cfl);
        let (ours, _) = step_with_dt(&model, &field, &config, dt).unwrap();
        let theirs = classical_nt_step(&model, &field, dt);
        prop_assert_eq!(ours.grid.parity(), theirs.grid.parity());
        for (a, b) in ours.data.iter().zip(&theirs.data) {
            prop_assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
        }
        // and back from the staggered grid
        let (ours2, _) = step_with_dt(&model, &ours, &config, dt).unwrap();
        let theirs2 = classical_nt_step(&model, &theirs, dt);
        for (a, b) in ours2.data.iter().zip(&theirs2.data) {
            prop_assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn periodic_runs_conserve_inactive_components(
        data in prop::collection::vec((0.8f64..1.6, -0.3f64..0.3), 16..40),
        eps in prop::sample::select(vec![1e-8, 1e-3, 1.0]),
    ) {
        let model = ModelSpec::shallow_water();
        let field = sw_field(data.len(), &data);
        let run = evolve(&model, &field, &periodic(0.4, eps, 0.05)).unwrap();
        let (before, after) = (field.total(0), run.field.total(0));
        prop_assert!((before - after).abs() <= 1e-12 * before.abs());
    }

    #[test]
    fn amplification_matches_stability_function(
        x1 in -3.0f64..1.0, y1 in -3.0f64..3.0, x2 in -50.0f64..0.5, y2 in -50.0f64..50.0,
    ) {
        let (z1, z2) = (Complex64::new(x1, y1), Complex64::new(x2, y2));
        let y = semi_discrete_step(&ComplexSplit { z1, z2 }, &[1.0, 0.0], 1.0, 1e-14, 50).unwrap();
        let expected = phi(z1, z2).unwrap();
        let got = Complex64::new(y[0], y[1]);
        prop_assert!((got - expected).norm() <= 1e-12 * (1.0 + expected.norm()), "{got} vs {expected}");
    }
}

#[test]
fn pde_step_on_a_pure_ode_is_phi_zero() {
    // no flux, constant data: the corrector sees exactly y' = rate y / eps
    for z2 in [-2.0, -0.5, -10.0, -1e4, 0.3] {
        let eps = 1.0;
        let model = LinearDecay { rate: z2 };
        let grid = Grid1D::new(0.0, 1.0, 8).unwrap();
        let field = SolutionField::from_data(grid, 1, vec![1.0; 8]).unwrap();
        let (out, _) = step_with_dt(&model, &field, &periodic(0.5, eps, 10.0), 1.0).unwrap();
        let expected = phi(Complex64::new(0.0, 0.0), Complex64::new(z2, 0.0)).unwrap().re;
        for v in &out.data {
            assert!((v - expected).abs() <= 1e-14 * expected.abs().max(1e-300), "{z2}: {v} vs {expected}");
        }
    }
}

#[test]
fn constant_equilibria_are_fixed_points() {
    let models = [
        ModelSpec::jin_xin(0.7).unwrap(),
        ModelSpec::shallow_water(),
        ModelSpec::broadwell(),
        ModelSpec::euler_heat_default(),
        ModelSpec::euler_friction(1.4).unwrap(),
        ModelSpec::euler_isentropic(1.4, 1.0).unwrap(),
    ];
    for model in models {
        let d = model.dim();
        let prim: Vec<f64> = [1.3, 0.4, 1.1][..d].to_vec();
        let mut eq = vec![0.0; d];
        model.equilibrium(&model.primitive_to_conserved(&prim).unwrap(), &mut eq);
        let grid = Grid1D::new(0.0, 1.0, 32).unwrap();
        let field = SolutionField::from_data(grid, d, eq.repeat(32)).unwrap();
        for eps in [1e-10, 1.0] {
            for bc in [BoundaryKind::Periodic, BoundaryKind::Transmissive] {
                let config = SchemeConfig::new(0.4, eps, bc, 0.1).unwrap();
                let run = evolve(&model, &field, &config).unwrap();
                for (a, b) in run.field.data.iter().zip(&field.data) {
                    assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0), "{} eps {eps}: {a} vs {b}", model.id());
                }
            }
        }
    }
}

#[test]
fn stiff_linear_relaxation_lands_on_the_manifold() {
    // unprepared data relaxes to v = a u within one step when eps is tiny
    let model = ModelSpec::jin_xin(0.7).unwrap();
    let grid = Grid1D::new(0.0, 1.0, 64).unwrap();
    let field = SolutionField::from_point_values(grid, 2, |x, c| {
        c[0] = (2.0 * std::f64::consts::PI * x).sin();
        c[1] = 0.1 * c[0];
    });
    let config = periodic(0.4, 1e-12, 1.0);
    let dt = compute_dt(&model, &field, 0.4);
    let (out, _) = step_with_dt(&model, &field, &config, dt).unwrap();
    let mut g = [0.0; 2];
    for u in out.cells() {
        model.source(u, &mut g);
        assert!(g[1].abs() < 1e-8, "{u:?}");
    }
}
