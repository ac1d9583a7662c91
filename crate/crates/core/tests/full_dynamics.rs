use coinfect_core::full::{
    full_rhs, integrate_full, neutral_scalar_observables, slow_manifold_state, FullState,
};
use coinfect_core::matrix::SquareMatrix;
use coinfect_core::model::{
    neutral_equilibrium, realize_traits, NeutralParameters, TraitMask, TraitPerturbations,
};
use coinfect_core::ode::SolverConfig;
use coinfect_core::validation::project_slow;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference() -> NeutralParameters {
    NeutralParameters::new(4.0, 1.0, 1.0, 1.5).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, mass: f64) -> FullState {
    let raw: Vec<f64> = (0..FullState::dim(n)).map(|_| rng.random_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    FullState::from_flat(n, &raw.iter().map(|x| mass * x / sum).collect::<Vec<_>>()).unwrap()
}

fn random_pert(rng: &mut ChaCha8Rng, n: usize, mask: TraitMask) -> TraitPerturbations {
    let mut v = |len: usize| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    TraitPerturbations {
        n,
        b: v(n),
        nu: v(n),
        u: SquareMatrix::from_flat(n, v(n * n)).unwrap(),
        omega: SquareMatrix::from_flat(n, v(n * n)).unwrap(),
        alpha: SquareMatrix::from_flat(n, v(n * n)).unwrap(),
        mask,
    }
}

#[test]
fn deficient_mass_relaxes_exponentially() {
    let p = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sp = realize_traits(&p, &random_pert(&mut rng, 4, TraitMask::ALL), 0.05).unwrap();
    let state0 = random_state(&mut rng, 4, 0.9);
    let cfg = SolverConfig::default();
    let traj = integrate_full(&state0, &sp, &p, 10.0, 100, &cfg).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let want = 1.0 - 0.1 * (-t).exp();
        assert!((s.total_mass() - want).abs() <= 10.0 * (cfg.rtol + cfg.atol), "t={t}");
    }
}

#[test]
fn infection_free_start_stays_infection_free() {
    let p = reference();
    let sp = realize_traits(&p, &TraitPerturbations::neutral(3, TraitMask::EMPTY), 0.0).unwrap();
    let mut state0 = FullState::disease_free(3);
    state0.s = 0.7;
    let traj = integrate_full(&state0, &sp, &p, 20.0, 20, &SolverConfig::default()).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        assert_eq!(neutral_scalar_observables(s), (0.0, 0.0, 0.0));
        assert!((s.s - (1.0 - 0.3 * (-t).exp())).abs() < 1e-8);
    }
}

#[test]
fn subcritical_infection_dies_out() {
    let p = NeutralParameters::new(1.5, 1.0, 1.0, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sp = realize_traits(&p, &TraitPerturbations::neutral(3, TraitMask::EMPTY), 0.0).unwrap();
    let traj = integrate_full(&random_state(&mut rng, 3, 1.0), &sp, &p, 200.0, 1, &SolverConfig::default()).unwrap();
    let (t, _, _) = neutral_scalar_observables(traj.states.last().unwrap());
    assert!(t < 1e-8, "{t}");
}

#[test]
fn neutral_aggregates_converge() {
    let p = reference();
    let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sp = realize_traits(&p, &TraitPerturbations::neutral(5, TraitMask::EMPTY), 0.0).unwrap();
    let traj = integrate_full(&random_state(&mut rng, 5, 1.0), &sp, &p, 200.0, 1, &SolverConfig::default()).unwrap();
    let (t, i, d) = neutral_scalar_observables(traj.states.last().unwrap());
    assert!((t - eq.t_star).abs() < 1e-6);
    assert!((i - eq.i_star).abs() < 1e-6);
    assert!((d - eq.d_star).abs() < 1e-6);
}

#[test]
fn fast_variables_decay_at_xi_in_neutral_system() {
    let p = reference();
    let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
    let sp = realize_traits(&p, &TraitPerturbations::neutral(3, TraitMask::EMPTY), 0.0).unwrap();
    // Start at the neutral aggregate equilibrium but off the slow manifold.
    let mut state0 = slow_manifold_state(&eq, &[0.3, 0.3, 0.4]);
    state0.i_single[0] += 0.02;
    state0.i_single[2] -= 0.02;
    let cfg = SolverConfig::with_tolerances(1e-10, 1e-12);
    let traj = integrate_full(&state0, &sp, &p, 5.0, 50, &cfg).unwrap();
    let v0 = project_slow(&traj.states[0], &sp, &eq).v;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let v = project_slow(s, &sp, &eq).v;
        for i in 0..3 {
            let bound = v0[i].abs() * (-eq.xi * t).exp() + 10.0 * (cfg.rtol + cfg.atol);
            assert!(v[i].abs() <= bound, "t={t} i={i} v={} bound={bound}", v[i]);
        }
    }
}

#[test]
fn projected_frequencies_approach_the_simplex() {
    let p = reference();
    let eq = neutral_equilibrium(&p, TraitMask::from_indices(&[1, 2]).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sp = realize_traits(&p, &random_pert(&mut rng, 4, eq.mask), 0.02).unwrap();
    let traj = integrate_full(&random_state(&mut rng, 4, 1.0), &sp, &p, 40.0, 400, &SolverConfig::default()).unwrap();
    let drift: Vec<f64> = traj
        .states
        .iter()
        .map(|s| (project_slow(s, &sp, &eq).z_raw.iter().sum::<f64>() - 1.0).abs())
        .collect();
    // After the fast transient the sum sits within O(ε) of one.
    let after = (10.0 / eq.xi / 0.1).ceil() as usize;
    assert!(drift[0] > 0.05);
    assert!(drift[after..].iter().all(|d| *d < 0.5 * 0.02), "{:?}", &drift[after..]);
}

#[test]
fn manifold_start_is_stationary_in_neutral_system() {
    let p = reference();
    let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
    let sp = realize_traits(&p, &TraitPerturbations::neutral(4, TraitMask::EMPTY), 0.0).unwrap();
    let state = slow_manifold_state(&eq, &[0.1, 0.2, 0.3, 0.4]);
    let d = full_rhs(&state, &sp, &p);
    assert!(d.to_flat().iter().all(|x| x.abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn relabeling_strains_permutes_the_trajectory(seed in any::<u64>(), n in 2usize..5) {
        let p = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pert = random_pert(&mut rng, n, TraitMask::ALL);
        let state0 = random_state(&mut rng, n, 1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(1);

        let sp = realize_traits(&p, &pert, 0.05).unwrap();
        let sp_perm = realize_traits(&p, &pert.permuted(&perm), 0.05).unwrap();
        let state_perm = FullState {
            s: state0.s,
            i_single: perm.iter().map(|&k| state0.i_single[k]).collect(),
            i_double: state0.i_double.permuted(&perm),
        };
        let cfg = SolverConfig::with_tolerances(1e-10, 1e-13);
        let a = integrate_full(&state0, &sp, &p, 20.0, 4, &cfg).unwrap();
        let b = integrate_full(&state_perm, &sp_perm, &p, 20.0, 4, &cfg).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert!((sa.s - sb.s).abs() < 1e-8);
            for i in 0..n {
                prop_assert!((sb.i_single[i] - sa.i_single[perm[i]]).abs() < 1e-8);
                for j in 0..n {
                    prop_assert!((sb.i_double[(i, j)] - sa.i_double[(perm[i], perm[j])]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn unit_mass_rhs_conserves_mass(seed in any::<u64>(), n in 1usize..6, eps in 0.0f64..0.1) {
        let p = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = realize_traits(&p, &random_pert(&mut rng, n, TraitMask::ALL), eps).unwrap();
        let d = full_rhs(&random_state(&mut rng, n, 1.0), &sp, &p);
        prop_assert!(d.to_flat().iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn realization_at_zero_epsilon_is_neutral(seed in any::<u64>(), n in 1usize..6) {
        let p = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = realize_traits(&p, &random_pert(&mut rng, n, TraitMask::ALL), 0.0).unwrap();
        prop_assert!(sp.beta_i.iter().all(|b| *b == p.beta));
        prop_assert!(sp.gamma_i.iter().all(|g| *g == p.gamma));
        prop_assert!(sp.gamma_ij.as_slice().iter().all(|g| *g == p.gamma));
        prop_assert!(sp.p_ij_i.as_slice().iter().all(|q| *q == 0.5));
        prop_assert!(sp.k_ij.as_slice().iter().all(|k| *k == p.k));
    }
}
