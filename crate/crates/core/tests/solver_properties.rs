mod common;

use common::*;
use entire_ma::ball_grid::{BallGrid, GridSpec};
use entire_ma::density::{DensitySpec, RadialDensity};
use entire_ma::exhaustion::symmetry_defect;
use entire_ma::group::cyclic;
use entire_ma::plc::ball_lattice;
use entire_ma::sdot::{cell_masses, orbit_complete, solve_weights, OTProblemInstance, SolveOptions, Target};
use entire_ma::PLConvexFunction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `|cell_i ∩ B_ρ|` with the disk replaced by a 4096-gon.
fn exact_cell_areas(phi: &PLConvexFunction, rho: f64) -> Vec<f64> {
    let sides = 4096;
    let disk: Vec<P2> = (0..sides)
        .map(|s| {
            let t = std::f64::consts::TAU * s as f64 / sides as f64;
            [rho * t.cos(), rho * t.sin()]
        })
        .collect();
    (0..phi.len())
        .map(|i| {
            let mut poly = disk.clone();
            let yi = phi.slope(i);
            for j in 0..phi.len() {
                if j != i && !poly.is_empty() {
                    let yj = phi.slope(j);
                    poly = clip(&poly, [yj[0] - yi[0], yj[1] - yi[1]], phi.intercept(j) - phi.intercept(i));
                }
            }
            if poly.len() < 3 {
                0.0
            } else {
                area(&poly)
            }
        })
        .collect()
}

fn symmetric_instance(seed: u64, m: usize, reps: usize, rho: f64) -> OTProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..reps)
        .map(|_| {
            let r = 0.2 + 0.8 * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            vec![r * t.cos(), r * t.sin()]
        })
        .collect();
    let (points, ids) = orbit_complete(&pts, &cyclic(m).unwrap());
    let src = DensitySpec::constant(2, 0.0).unwrap().perturbed(1);
    let total = src.ball_mass(rho).unwrap();
    let mass = total / points.len() as f64;
    let targets = points.into_iter().zip(ids).map(|(point, orbit)| Target { point, mass, orbit }).collect();
    OTProblemInstance::new(rho, src, targets, 1.0).unwrap()
}

#[test]
fn grid_cell_masses_match_clipped_polygons() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let one = DensitySpec::constant(2, 1.0).unwrap();
    let grid = BallGrid::new(&one, 1.0, GridSpec::uniform(64)).unwrap();
    for trial in 0..10 {
        let phi = random_pl(&mut rng, 6 + 3 * trial, 2.0);
        let src = DensitySpec::constant(2, 0.0).unwrap().perturbed(1);
        let targets = (0..phi.len())
            .map(|i| Target { point: phi.slope(i).to_vec(), mass: std::f64::consts::PI / phi.len() as f64, orbit: i })
            .collect();
        let inst = OTProblemInstance::new(1.0, src, targets, 2.0).unwrap();
        let got = cell_masses(&inst, phi.intercepts(), &grid);
        let want = exact_cell_areas(&phi, 1.0);
        for (i, (a, b)) in got.iter().zip(&want).enumerate() {
            assert!((a - b).abs() < 1e-5, "trial {trial} cell {i}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solved_weights_balance_mass_and_keep_symmetry(seed in any::<u64>(), m in 3usize..=8, reps in 2usize..=6) {
        let rho = 1.3;
        let inst = symmetric_instance(seed, m, reps, rho);
        let init = vec![0.0; inst.targets.len()];
        let opts = SolveOptions { tol: 1e-4, ..Default::default() };
        let out = solve_weights(&inst, &init, &opts).unwrap();
        prop_assert!(out.trace.converged, "residual {}", out.trace.final_residual);
        prop_assert!(out.trace.is_monotone());
        prop_assert!(out.phi.value(&[0.0, 0.0]).abs() < 1e-12);
        let grid = ball_lattice(2, rho, 20);
        prop_assert!(symmetry_defect(&out.phi, &cyclic(m).unwrap(), &grid) <= 1e-10);
        let areas = exact_cell_areas(&out.phi, rho);
        let mass = inst.targets[0].mass;
        for a in areas {
            prop_assert!((a - mass).abs() <= 2e-3 * mass, "{a} vs {mass}");
        }
    }
}
