//! Accuracy and stability measurements of the rational propagator against
//! dense oracles: local and global error orders, stencil exactness, spectra,
//! weighted contraction, and paired-run amplification envelopes.

use kawarada::diagnostics::{
    dense_m, frozen_cn_run, linear_exact_solution, matrix_exp_oracle, pade_factor_dense,
    product_norm_bound_check, spectral_norm, stability_probe, temporal_order_estimate,
    weighted_pade_norm, LinearProblem, ProbeSpec,
};
use kawarada::grid::{make_parabolic_arclength_grid, make_uniform_grid, Grid1D};
use kawarada::noise::SplitMix64;
use kawarada::operator::{assemble_m, symmetrize};
use kawarada::source::SourceModel;
use kawarada::stepper::cfl_ceiling;

fn jittered_grid(rng: &mut SplitMix64, n: usize, amount: f64) -> Grid1D {
    let h = 2.0 / (n + 1) as f64;
    let mut nodes = vec![-1.0];
    for i in 1..=n {
        nodes.push(-1.0 + i as f64 * h + rng.uniform(-amount * h, amount * h));
    }
    nodes.push(1.0);
    Grid1D::from_nodes(nodes).unwrap()
}

#[test]
fn rational_factor_local_error_falls_eightfold_under_halving() {
    // a = 2 keeps tau * ||M|| small enough that the cubic local term
    // dominates across the whole halving sequence.
    let grid = make_uniform_grid(6).unwrap();
    let op = assemble_m(&grid, &[1.0; 6], 2.0).unwrap();
    let m = dense_m(&op).unwrap();
    let errs: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&tau| {
            let exact = matrix_exp_oracle(&m, tau).unwrap();
            let pade = pade_factor_dense(&op, tau).unwrap();
            spectral_norm(&(exact - pade))
        })
        .collect();
    for k in 0..2 {
        let ratio = errs[k] / errs[k + 1];
        assert!(
            (6.5..=9.5).contains(&ratio),
            "local error ratio {ratio} outside [6.5, 9.5]"
        );
    }
}

#[test]
fn global_temporal_order_is_second_with_quartering_error() {
    let mut rng = SplitMix64::new(0x0D9E);
    for trial in 0..6 {
        let grid = if trial % 2 == 0 {
            make_uniform_grid(10).unwrap()
        } else {
            make_parabolic_arclength_grid(10, 3.0, 0.2).unwrap()
        };
        let n = grid.n_interior;
        let sigma: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 2.0)).collect();
        let op = assemble_m(&grid, &sigma, 1.5).unwrap();
        let v0: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 0.9)).collect();
        let g0: Vec<f64> = if trial < 3 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.uniform(0.0, 1.0)).collect()
        };
        let est = temporal_order_estimate(&LinearProblem {
            op: &op,
            v0,
            g0,
            t_final: 0.5,
            tau0: 0.05,
        })
        .unwrap();
        assert!(
            !est.degenerate_floor,
            "trial {trial} hit the rounding floor"
        );
        assert!(
            (1.8..=2.2).contains(&est.estimated_order),
            "trial {trial}: order {} outside [1.8, 2.2]",
            est.estimated_order
        );
        for r in &est.ratios {
            assert!(
                (3.6..=4.4).contains(r),
                "trial {trial}: halving ratio {r} outside [3.6, 4.4]"
            );
        }
    }
}

#[test]
fn stencil_reproduces_second_derivatives_of_quadratics() {
    let mut rng = SplitMix64::new(0x9AD);
    for trial in 0..30 {
        let grid = match trial % 3 {
            0 => make_uniform_grid(4 + trial % 20).unwrap(),
            1 => make_parabolic_arclength_grid(
                4 + trial % 20,
                rng.uniform(1.0, 8.0),
                rng.uniform(-0.5, 0.5),
            )
            .unwrap(),
            _ => {
                let n = 4 + trial % 20;
                jittered_grid(&mut rng, n, 0.3)
            }
        };
        let (alpha, beta, gamma) = (
            rng.uniform(-3.0, 3.0),
            rng.uniform(-3.0, 3.0),
            rng.uniform(-3.0, 3.0),
        );
        let q = |x: f64| alpha * x * x + beta * x + gamma;
        let op = assemble_m(&grid, &vec![1.0; grid.n_interior], 1.0).unwrap();
        let p = &op.p;
        let h = &grid.steps;
        let n = grid.n_interior;
        for i in 0..n {
            // Row i couples nodes i, i+1, i+2 of the full grid; the two
            // boundary couplings are not stored and are rebuilt here.
            let left = if i == 0 {
                2.0 / (h[0] * (h[0] + h[1])) * q(grid.nodes[0])
            } else {
                p.sub[i - 1] * q(grid.nodes[i])
            };
            let right = if i + 1 == n {
                2.0 / (h[n] * (h[n - 1] + h[n])) * q(grid.nodes[n + 1])
            } else {
                p.sup[i] * q(grid.nodes[i + 2])
            };
            let row = left + p.diag[i] * q(grid.nodes[i + 1]) + right;
            assert!(
                (row - 2.0 * alpha).abs() <= 1e-10,
                "trial {trial} row {i}: stencil gave {row}, expected {}",
                2.0 * alpha
            );
        }
    }
}

#[test]
fn dense_operator_spectra_are_real_and_negative() {
    let mut rng = SplitMix64::new(0x5BEC);
    for _ in 0..25 {
        let n = 3 + (rng.next_u64() % 10) as usize;
        let grid = match rng.next_u64() % 2 {
            0 => make_uniform_grid(n).unwrap(),
            _ => make_parabolic_arclength_grid(n, rng.uniform(1.0, 6.0), rng.uniform(-0.4, 0.4))
                .unwrap(),
        };
        let sigma: Vec<f64> = (0..n).map(|_| rng.uniform(0.3, 3.0)).collect();
        let a = rng.uniform(0.5, 3.0);
        let op = assemble_m(&grid, &sigma, a).unwrap();
        let m = dense_m(&op).unwrap();
        let scale = spectral_norm(&m);
        for ev in m.complex_eigenvalues().iter() {
            assert!(
                ev.im.abs() <= 1e-10 * scale,
                "eigenvalue {ev} has nonreal part"
            );
            assert!(ev.re < 0.0, "eigenvalue {ev} is not negative");
        }
    }
}

#[test]
fn density_weight_contracts_the_factor_on_uniform_grids() {
    // On a uniform grid the similarity by sqrt(sigma) symmetrizes the
    // operator exactly, so the weighted factor norm never exceeds one for any
    // positive step, however far past the positivity ceiling.
    let mut rng = SplitMix64::new(0xD1CE);
    for _ in 0..20 {
        let n = 4 + (rng.next_u64() % 12) as usize;
        let grid = make_uniform_grid(n).unwrap();
        let sigma: Vec<f64> = (0..n).map(|_| rng.uniform(0.2, 4.0)).collect();
        let a = rng.uniform(0.5, 3.0);
        let op = assemble_m(&grid, &sigma, a).unwrap();
        let ceiling = cfl_ceiling(&op, &grid);
        let weight: Vec<f64> = sigma.iter().map(|s| s.sqrt()).collect();
        for _ in 0..6 {
            let tau = rng.uniform(0.05, 8.0) * ceiling;
            let norm = weighted_pade_norm(&op, &weight, tau).unwrap();
            assert!(
                norm <= 1.0 + 1e-10,
                "weighted norm {norm} exceeds one at tau {tau}"
            );
        }
    }
}

#[test]
fn combined_weight_contracts_the_factor_on_arbitrary_grids() {
    // On a graded grid the density weight alone is not enough; folding in the
    // cell-size scaling from the symmetrized form restores a similarity to a
    // symmetric negative-definite matrix, so contraction holds for every
    // positive step.
    let mut rng = SplitMix64::new(0x6AAD);
    for trial in 0..20 {
        let n = 4 + (rng.next_u64() % 12) as usize;
        let grid = match trial % 3 {
            0 => make_parabolic_arclength_grid(n, rng.uniform(2.0, 8.0), rng.uniform(-0.5, 0.5))
                .unwrap(),
            1 => jittered_grid(&mut rng, n, 0.35),
            _ => make_uniform_grid(n).unwrap(),
        };
        let sigma: Vec<f64> = (0..n).map(|_| rng.uniform(0.2, 4.0)).collect();
        let a = rng.uniform(0.5, 3.0);
        let op = assemble_m(&grid, &sigma, a).unwrap();
        let sym = symmetrize(&op.p, &grid).unwrap();
        let weight: Vec<f64> = (0..n).map(|i| (sigma[i] * sym.d_diag[i]).sqrt()).collect();
        let ceiling = cfl_ceiling(&op, &grid);
        for _ in 0..6 {
            let tau = rng.uniform(0.05, 8.0) * ceiling;
            let norm = weighted_pade_norm(&op, &weight, tau).unwrap();
            assert!(
                norm <= 1.0 + 1e-10,
                "combined-weight norm {norm} exceeds one at tau {tau}"
            );
        }
    }
}

#[test]
fn stepped_products_stay_under_the_density_bound() {
    let mut rng = SplitMix64::new(0x9B0D);
    for _ in 0..10 {
        let n = 5 + (rng.next_u64() % 8) as usize;
        let grid = make_uniform_grid(n).unwrap();
        let sigma: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 2.0)).collect();
        let op = assemble_m(&grid, &sigma, 1.2).unwrap();
        let ceiling = cfl_ceiling(&op, &grid);
        let taus: Vec<f64> = (0..12).map(|_| rng.uniform(0.05, 0.9) * ceiling).collect();
        let check = product_norm_bound_check(&op, &grid, &taus).unwrap();
        assert!(
            check.passed,
            "exp {} vs bound {}, rational {} vs {}",
            check.exp_norm, check.bound, check.pade_norm, check.pade_bound
        );
    }
}

#[test]
fn frozen_probe_amplification_respects_the_density_bound() {
    let mut rng = SplitMix64::new(0xF0F);
    for trial in 0..8 {
        let n = 15;
        let grid = if trial % 2 == 0 {
            make_uniform_grid(n).unwrap()
        } else {
            make_parabolic_arclength_grid(n, 3.0, 0.0).unwrap()
        };
        let sigma: Vec<f64> = (0..n).map(|_| rng.uniform(0.4, 2.5)).collect();
        let model = SourceModel::new(1.0, vec![1.0; n], sigma.clone()).unwrap();
        let a = rng.uniform(0.8, 2.5);
        let op = assemble_m(&grid, &sigma, a).unwrap();
        let tau = 0.4 * cfl_ceiling(&op, &grid);
        let spec = ProbeSpec {
            grid: &grid,
            model: &model,
            a,
            tau,
            t_final: 0.3,
        };
        let r = stability_probe(&spec, 1e-6, true).unwrap();
        let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
        let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        let bound = (smax / smin).sqrt() + 0.1;
        assert!(
            r.amplification <= bound,
            "trial {trial}: amplification {} above {bound}",
            r.amplification
        );
    }
}

#[test]
fn nonlinear_probe_amplification_stays_inside_the_jacobian_envelope() {
    // Perturbation growth on a quenching run, measured to 80% of the quench
    // time, must stay under exp(G t) sqrt(kappa(B)) with G the largest source
    // Jacobian entry seen along the base trajectory.
    let n = 21;
    let grid = make_uniform_grid(n).unwrap();
    let model = SourceModel::classical(n, 1.0);
    let a = 2.0;
    let op = assemble_m(&grid, &model.sigma, a).unwrap();
    let tau = 0.5 * cfl_ceiling(&op, &grid);
    let t_final = 0.8 * 0.509;
    let spec = ProbeSpec {
        grid: &grid,
        model: &model,
        a,
        tau,
        t_final,
    };
    let r = stability_probe(&spec, 1e-6, false).unwrap();
    assert!(r.jacobian_max.is_finite() && r.jacobian_max > 0.0);
    let envelope = (r.jacobian_max * t_final).exp(); // kappa(B) = 1 here
    assert!(
        r.amplification <= envelope,
        "amplification {} exceeds envelope {envelope}",
        r.amplification
    );
    assert!(
        r.amplification >= 1.0,
        "a quenching run should amplify uniform perturbations, got {}",
        r.amplification
    );
}

#[test]
fn frozen_scheme_matches_the_dense_solution_under_refinement() {
    // Direct Richardson check at a fixed horizon on a graded grid with an
    // affine source: quartering of the gap to the dense solution.
    let n = 9;
    let grid = make_parabolic_arclength_grid(n, 4.0, -0.3).unwrap();
    let sigma: Vec<f64> = (0..n).map(|i| 0.6 + 0.1 * i as f64).collect();
    let op = assemble_m(&grid, &sigma, 1.0).unwrap();
    let v0: Vec<f64> = (0..n).map(|i| 0.02 * (i as f64 + 1.0)).collect();
    let g0 = vec![0.4; n];
    let t_final = 0.4;
    let exact = linear_exact_solution(&op, &v0, &g0, t_final).unwrap();
    let err = |steps: usize| -> f64 {
        let v = frozen_cn_run(&op, &v0, &g0, t_final, steps).unwrap();
        v.iter()
            .zip(&exact)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let (e1, e2, e3) = (err(16), err(32), err(64));
    for ratio in [e1 / e2, e2 / e3] {
        assert!(
            (3.6..=4.4).contains(&ratio),
            "refinement ratio {ratio} outside [3.6, 4.4]"
        );
    }
}
