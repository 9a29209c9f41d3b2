mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sea_core::composite::{embed_local, marginal, CompositeModel, CompositeStructure, HamiltonianSpec};
use sea_core::integrator::{evolve, IntegratorConfig};
use sea_core::linalg::{herm_eig, matrix_bln, partial_trace, partial_transpose, project_to_state, tensor, DensityMatrix, CLIP_TOL, EPS_BLN};
use sea_core::nosignal::apply_local_unitary;
use sea_core::oracles::{bell_diagonal, bell_diagonal_eigenvalues, example1_state, example2_state, Example1Params, Example2Params};
use sea_core::perception::LocalFrame;
use sea_core::random::random_unitary_with;
use sea_core::sea::{SeaParams, SeaSystem};

const SHAPES: [&[usize]; 4] = [&[2, 2], &[2, 3], &[3, 2], &[2, 2, 2]];

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

fn random_system<R: Rng>(dims: &[usize], coupling: f64, tau: f64, rng: &mut R) -> SeaSystem {
    let s = CompositeStructure::new(dims.to_vec()).unwrap();
    let locals = dims.iter().map(|&d| random_hermitian(d, rng)).collect();
    let v = random_hermitian(s.total_dim(), rng).scale(coupling);
    let spec = HamiltonianSpec::new(locals, v, &s).unwrap();
    SeaSystem::new(CompositeModel::new(s, spec).unwrap(), SeaParams::uniform(dims.len(), tau)).unwrap()
}

fn random_density<R: Rng>(n: usize, rng: &mut R) -> DensityMatrix {
    let rank = rng.random_range(1..=n);
    DensityMatrix::new(random_state(n, rank, rng)).unwrap()
}

fn full_rank<R: Rng>(n: usize, rng: &mut R) -> DensityMatrix {
    // Mix in the identity so the smallest eigenvalue stays clear of zero.
    let m = random_state(n, n, rng).scale(0.8) + M::identity(n, n).scale(0.2 / n as f64);
    DensityMatrix::new(m).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn partial_trace_matches_index_sum(seed in any::<u64>(), shape in 0..SHAPES.len(), mask in 1u32..7) {
        let dims = SHAPES[shape];
        let s = CompositeStructure::new(dims.to_vec()).unwrap();
        let mut r = rng(seed);
        let n = s.total_dim();
        let m = M::from_fn(n, n, |_, _| gaussian(&mut r));
        let keep: Vec<usize> = (0..dims.len()).filter(|k| mask & (1 << k) != 0).collect();
        prop_assume!(!keep.is_empty() && keep.len() < dims.len());
        let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
        let ours = partial_trace(&m, &s, &traced).unwrap();
        prop_assert!((ours - reduce(&m, dims, &keep)).norm() < 1e-12);
    }

    #[test]
    fn tensor_and_embedding_follow_index_order(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let dims = SHAPES[shape];
        let s = CompositeStructure::new(dims.to_vec()).unwrap();
        let mut r = rng(seed);
        for j in 0..dims.len() {
            let x = M::from_fn(dims[j], dims[j], |_, _| gaussian(&mut r));
            prop_assert!((embed_local(&x, j, &s).unwrap() - embed(&x, j, dims)).norm() < 1e-14);
        }
        let (a, b) = (M::from_fn(dims[0], dims[0], |_, _| gaussian(&mut r)), M::from_fn(2, 2, |_, _| gaussian(&mut r)));
        let pair = [dims[0], 2];
        prop_assert!((tensor(&a, &b) - product_in_order(&a, &b, 0, &pair)).norm() < 1e-14);
    }

    #[test]
    fn spectral_functions_reconstruct(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let h = random_hermitian(n, &mut r);
        let eig = herm_eig(&h).unwrap();
        prop_assert!((eig.reconstruct() - &h).norm() < 1e-12 * h.norm().max(1.0));
        let rho = random_density(n, &mut r);
        let l = matrix_bln(&rho, EPS_BLN);
        prop_assert!((&l * rho.matrix() - rho.matrix() * &l).norm() < 1e-11);
        let s_from_bln = -(rho.matrix() * &l).trace().re;
        prop_assert!((s_from_bln - entropy(rho.matrix())).abs() < 1e-10);
        let once = project_to_state(rho.matrix(), CLIP_TOL).unwrap();
        let twice = project_to_state(once.matrix(), CLIP_TOL).unwrap();
        prop_assert!((once.matrix() - twice.matrix()).norm() < 1e-14);
        prop_assert!((once.matrix() - rho.matrix()).norm() < 1e-13);
    }

    #[test]
    fn perception_matches_brute_force(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let dims = SHAPES[shape];
        let s = CompositeStructure::new(dims.to_vec()).unwrap();
        let mut r = rng(seed);
        let rho = random_density(s.total_dim(), &mut r);
        let x = random_hermitian(s.total_dim(), &mut r);
        for j in 0..dims.len() {
            let frame = LocalFrame::new(&rho, j, &s).unwrap();
            let rest: Vec<usize> = (0..dims.len()).filter(|&k| k != j).collect();
            let rho_rest = reduce(rho.matrix(), dims, &rest);
            let weight = product_in_order(&M::identity(dims[j], dims[j]), &rho_rest, j, dims);
            let expected = reduce(&(weight * &x), dims, &[j]);
            let perceived = frame.perceive(&x);
            prop_assert!((&perceived - &expected).norm() < 1e-12);
            let rho_j = reduce(rho.matrix(), dims, &[j]);
            let mean = (&rho_j * &perceived).trace().re;
            let uncorrelated = product_in_order(&rho_j, &rho_rest, j, dims);
            prop_assert!((mean - (uncorrelated * &x).trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_conserves_trace_energy_and_extras(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let dims = SHAPES[shape];
        let mut r = rng(seed);
        let coupling = if r.random_bool(0.5) { 0.0 } else { r.random_range(0.1..1.0) };
        let base = random_system(dims, coupling, 1.0, &mut r);
        let n: usize = dims.iter().product();
        let extra = embed(base.model().local_hamiltonian(0), 0, dims);
        // An extra conserved quantity only makes sense if H conserves it too.
        let commuting = (base.model().hamiltonian() * &extra - &extra * base.model().hamiltonian()).norm() < 1e-12;
        let system = if commuting {
            let mut p = base.params().clone();
            p.extra_conserved = vec![extra.clone()];
            base.with_params(p).unwrap()
        } else {
            base
        };
        let rho = random_density(n, &mut r);
        let f = system.rhs(&rho).unwrap();
        prop_assert!(f.trace().norm() < 1e-12);
        prop_assert!((&f - f.adjoint()).norm() < 1e-12);
        prop_assert!((system.model().hamiltonian() * &f).trace().re.abs() < 1e-11);
        if commuting {
            prop_assert!((&extra * &f).trace().re.abs() < 1e-11);
        }
    }

    #[test]
    fn local_rhs_is_reduced_rhs(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let dims = SHAPES[shape];
        let mut r = rng(seed);
        let system = random_system(dims, r.random_range(0.0..1.0), r.random_range(0.5..2.0), &mut r);
        let rho = random_density(dims.iter().product(), &mut r);
        let f = system.rhs(&rho).unwrap();
        for j in 0..dims.len() {
            let local = system.local_rhs(&rho, j).unwrap();
            prop_assert!((local - reduce(&f, dims, &[j])).norm() < 1e-11);
        }
    }

    #[test]
    fn dissipation_scales_inversely_with_tau(seed in any::<u64>(), tau in 0.1f64..10.0) {
        let mut r = rng(seed);
        let one = random_system(&[2, 3], 0.5, 1.0, &mut r);
        let scaled = one.with_params(SeaParams::uniform(2, tau)).unwrap();
        let rho = random_density(6, &mut r);
        let a = one.dissipative_rhs(&rho).unwrap();
        let b = scaled.dissipative_rhs(&rho).unwrap();
        prop_assert!((a.unscale(tau) - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn dissipator_ignores_remote_local_hamiltonian(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = CompositeStructure::qubits(3);
        let locals: Vec<M> = (0..3).map(|_| random_hermitian(2, &mut r)).collect();
        let mut swapped = locals.clone();
        swapped[2] = random_hermitian(2, &mut r);
        let system = |ls: Vec<M>| {
            let spec = HamiltonianSpec::noninteracting(ls, &s).unwrap();
            SeaSystem::new(CompositeModel::new(s.clone(), spec).unwrap(), SeaParams::uniform(3, 1.0)).unwrap()
        };
        let rho = random_density(8, &mut r);
        let a = system(locals).dissipator(&rho, 0).unwrap();
        let b = system(swapped).dissipator(&rho, 0).unwrap();
        prop_assert!((a.operator - b.operator).norm() < 1e-11);
    }

    #[test]
    fn example_spectra_match_numerics(a in -0.9f64..0.9, b in -0.9f64..0.9) {
        if let Ok(p) = Example1Params::new(a, b) {
            let mut want = p.eigenvalues().to_vec();
            want.sort_by(f64::total_cmp);
            let got = example1_state(&p).spectrum();
            for (x, y) in got.iter().zip(&want) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
        if let Ok(p) = Example2Params::new(a, b) {
            let rho = example2_state(&p);
            let mut want = p.eigenvalues().to_vec();
            want.sort_by(f64::total_cmp);
            for (x, y) in rho.spectrum().iter().zip(&want) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let pt = partial_transpose(rho.matrix(), &CompositeStructure::qubits(2), 0).unwrap();
            let mut got = sea_core::linalg::eigenvalues(&pt).unwrap();
            got.sort_by(f64::total_cmp);
            let mut want = p.partial_transpose_eigenvalues().to_vec();
            want.sort_by(f64::total_cmp);
            for (x, y) in got.iter().zip(&want) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn example_dissipators_are_sigma_x(a in -0.5f64..0.5, b in -0.5f64..0.5) {
        let system = SeaSystem::new(CompositeModel::two_qubit_sigma_z(), SeaParams::uniform(2, 1.0)).unwrap();
        let states = [
            Example1Params::new(a, b).ok().map(|p| example1_state(&p)),
            Example2Params::new(a, b).ok().map(|p| example2_state(&p)),
        ];
        let x = &pauli()[1];
        for rho in states.into_iter().flatten() {
            prop_assume!(rho.spectrum()[0] > 1e-3);
            for d in system.dissipators(&rho).unwrap() {
                let k = (d.anticommutator.clone() * x).trace().re / 2.0;
                prop_assert!((d.anticommutator - x.scale(k)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_diagonal_states_are_nondissipative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = loop {
            let c: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
            if bell_diagonal_eigenvalues(c).iter().all(|&x| x > 1e-4) {
                break c;
            }
        };
        let rho = bell_diagonal(c).unwrap();
        let system = random_system(&[2, 2], 1.0, 1.0, &mut r);
        for j in 0..2 {
            let frame = LocalFrame::new(&rho, j, system.model().structure()).unwrap();
            let perceived = frame.perceive(&matrix_bln(&rho, EPS_BLN));
            let scalar = perceived.trace() / 2.0;
            prop_assert!((&perceived - M::identity(2, 2) * scalar).norm() < 1e-12);
        }
        for d in system.dissipators(&rho).unwrap() {
            prop_assert!(d.operator.norm() < 1e-12);
        }
    }

    #[test]
    fn local_unitaries_preserve_spectrum_and_remote_marginal(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let dims = SHAPES[shape];
        let s = CompositeStructure::new(dims.to_vec()).unwrap();
        let mut r = rng(seed);
        let rho = random_density(s.total_dim(), &mut r);
        let u = random_unitary_with(dims[0], &mut r);
        let rotated = apply_local_unitary(&rho, &u, &[0], &s).unwrap();
        for (x, y) in rho.spectrum().iter().zip(rotated.spectrum()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let last = dims.len() - 1;
        let before = marginal(rho.matrix(), last, &s).unwrap();
        let after = marginal(rotated.matrix(), last, &s).unwrap();
        prop_assert!((before - after).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..config() })]

    #[test]
    fn trajectories_raise_entropy_and_converge_with_tolerance(seed in any::<u64>(), shape in 0..SHAPES.len()) {
        let dims = SHAPES[shape];
        let mut r = rng(seed);
        let system = random_system(dims, 0.5, 1.0, &mut r);
        let rho = full_rank(dims.iter().product(), &mut r);
        let loose = IntegratorConfig { t_final: 2.0, rel_tol: 1e-8, abs_tol: 1e-10, ..Default::default() };
        let tight = IntegratorConfig { rel_tol: 1e-11, abs_tol: 1e-13, ..loose.clone() };
        let a = evolve(&rho, &system, &loose).unwrap();
        let b = evolve(&rho, &system, &tight).unwrap();
        prop_assert!((a.final_state().matrix() - b.final_state().matrix()).norm() < 1e-6);
        prop_assert!(b.max_entropy_decrease() < 1e-10);
        for pair in b.samples.windows(2) {
            prop_assert!(pair[1].entropy >= pair[0].entropy - 1e-10);
        }
    }
}
