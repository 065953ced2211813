use csebt2_core::harness::{preset, reference_on_grid};
use csebt2_core::imex::{imex_rk2_step, reference_run, restrict, ImexTableau};
use csebt2_core::models::auxiliary::SourceFree;
use csebt2_core::oracles::{jinxin_exact, l1_error, observed_order, FourierMode};
use csebt2_core::scheme::compute_dt;
use csebt2_core::{BalanceLaw, BoundaryKind, Grid1D, ModelSpec, SchemeConfig, SolutionField};
use proptest::prelude::*;

fn mm(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Periodic MUSCL-MinMod Rusanov semi-discretisation, written out directly.
fn rate<M: BalanceLaw>(model: &M, u: &[Vec<f64>], dx: f64) -> Vec<Vec<f64>> {
    let n = u.len();
    let d = u[0].len();
    let w = |i: isize| &u[i.rem_euclid(n as isize) as usize];
    let slope = |i: isize, k: usize| mm(w(i + 1)[k] - w(i)[k], w(i)[k] - w(i - 1)[k]);
    // h[q] is the flux through the left face of cell q
    let h: Vec<Vec<f64>> = (0..n as isize)
        .map(|q| {
            let l: Vec<f64> = (0..d).map(|k| w(q - 1)[k] + 0.5 * slope(q - 1, k)).collect();
            let r: Vec<f64> = (0..d).map(|k| w(q)[k] - 0.5 * slope(q, k)).collect();
            let (mut fl, mut fr) = (vec![0.0; d], vec![0.0; d]);
            model.flux(&l, &mut fl);
            model.flux(&r, &mut fr);
            let a = model.max_wave_speed(&l).max(model.max_wave_speed(&r));
            (0..d).map(|k| 0.5 * (fl[k] + fr[k]) - 0.5 * a * (r[k] - l[k])).collect()
        })
        .collect();
    (0..n)
        .map(|i| (0..d).map(|k| -(h[(i + 1) % n][k] - h[i][k]) / dx).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn source_free_step_is_the_explicit_rk(
        data in prop::collection::vec((0.5f64..2.0, -0.5f64..0.5), 8..40),
        cfl in 0.1f64..0.5,
    ) {
        let model = SourceFree(ModelSpec::shallow_water());
        let n = data.len();
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let field = SolutionField::from_data(grid, 2, data.iter().flat_map(|&(h, q)| [h, q]).collect()).unwrap();
        let config = SchemeConfig::new(cfl, 1.0, BoundaryKind::Periodic, 1.0).unwrap();
        let dt = compute_dt(&model, &field, cfl);
        let ours = imex_rk2_step(&model, &field, dt, &config).unwrap();

        let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        let delta = 1.0 - 1.0 / (2.0 * gamma);
        let u0: Vec<Vec<f64>> = data.iter().map(|&(h, q)| vec![h, q]).collect();
        let k1 = rate(&model, &u0, grid.dx());
        let u1: Vec<Vec<f64>> = u0.iter().zip(&k1).map(|(u, k)| vec![u[0] + gamma * dt * k[0], u[1] + gamma * dt * k[1]]).collect();
        let k2 = rate(&model, &u1, grid.dx());
        for i in 0..n {
            for c in 0..2 {
                let theirs = u0[i][c] + dt * (delta * k1[i][c] + (1.0 - delta) * k2[i][c]);
                prop_assert!((ours.cell(i)[c] - theirs).abs() <= 1e-13, "{} vs {theirs}", ours.cell(i)[c]);
            }
        }
    }
}

#[test]
fn tableau_is_second_order_and_stiffly_accurate() {
    let t = ImexTableau::ars222();
    assert!(t.order_defect() < 1e-15);
    assert!(t.stiffly_accurate());
}

#[test]
fn reference_converges_on_smooth_jin_xin() {
    let model = ModelSpec::jin_xin(0.7).unwrap();
    let modes = FourierMode::sine_pair(1, 1.0, 0.7);
    let mut errors = Vec::new();
    for n in [80, 160, 320] {
        let grid = Grid1D::new(0.0, 1.0, n).unwrap();
        let init = SolutionField::from_cell_averages(grid, 2, |x, c| {
            c[0] = (2.0 * std::f64::consts::PI * x).sin();
            c[1] = 0.7 * c[0];
        });
        let config = SchemeConfig::new(0.5, 1e-6, BoundaryKind::Periodic, 0.35).unwrap();
        let run = reference_run(&model, &init, &config).unwrap();
        let exact = jinxin_exact(0.7, 1e-6, &modes, 0.35, &grid).unwrap();
        errors.push(l1_error(&run.field, &exact).unwrap()[0]);
    }
    for w in errors.windows(2) {
        assert!(observed_order(w[0], w[1]) > 1.5, "{errors:?}");
    }
}

#[test]
fn restricted_reference_is_a_block_average() {
    let grid = Grid1D::new(0.0, 1.0, 16).unwrap();
    let fine = SolutionField::from_data(grid, 1, (0..16).map(|i| i as f64).collect()).unwrap();
    let coarse = restrict(&fine, 4).unwrap();
    assert_eq!(coarse.data, vec![1.5, 5.5, 9.5, 13.5]);
    assert!(restrict(&fine, 5).is_err());
}

#[test]
fn reference_for_a_preset_lives_on_the_test_grid() {
    let mut p = preset("sw-riemann").unwrap();
    p.t_final = 0.05;
    p.reference = "imex:640".parse().unwrap();
    let r = reference_on_grid(&p, 160, 1e-8, None).unwrap();
    assert_eq!(r.n_cells(), 160);
    assert!((r.grid.x_left() + 1.0).abs() < 1e-15);
    assert!(r.is_finite());
}
