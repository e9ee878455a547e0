use std::sync::Arc;

use dicke_qfi_core::blocks::hermitian_frame;
use dicke_qfi_core::evolve::{evolve, DensityState};
use dicke_qfi_core::operators::assemble_rhs;
use dicke_qfi_core::probes::ProbeFamily;
use dicke_qfi_core::{BasisLayout, Complex64, IntegratorConfig, SimParams};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{random_hermitian, random_state};

fn params(q: u32) -> impl Strategy<Value = SimParams> {
    (0.0..2.0f64, 0.0..1.5f64, 0.0..1.5f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(move |(g, k, gm, wq, wc)| SimParams {
        omega_q: wq,
        omega_c: wc,
        ..SimParams::new(q, g, k, gm)
    })
}

fn derivative(p: &SimParams, rho: &DensityState) -> DensityState {
    let mut out = vec![Complex64::new(0.0, 0.0); rho.as_slice().len()];
    assemble_rhs(p, rho.layout()).unwrap().apply(rho.as_slice(), &mut out);
    DensityState::from_vec(rho.layout().clone(), out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rhs_is_traceless_and_hermitian(q in 1u32..=6, seed in any::<u64>(), p in params(1)) {
        let p = SimParams { qubits: q, ..p };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = Arc::new(BasisLayout::new(q).unwrap());
        let rho = random_hermitian(&mut rng, layout);
        let d = derivative(&p, &rho);
        prop_assert!(d.trace().norm() < 1e-12, "trace {:e}", d.trace().norm());
        prop_assert!(d.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn block_frames_reconstruct(q in 1u32..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = Arc::new(BasisLayout::new(q).unwrap());
        let rho = random_state(&mut rng, layout.clone());
        for s in 0..layout.sectors().len() {
            let b = rho.block(s);
            let f = hermitian_frame(&b);
            let lam = DMatrix::from_diagonal(&DVector::from_iterator(
                f.values.len(),
                f.values.iter().map(|&v| Complex64::new(0.5 * v, 0.0)),
            ));
            let back = &f.frame * lam * f.frame.adjoint();
            let err = (back - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10, "sector {}: {:e}", s, err);
        }
    }
}

#[test]
fn closed_dynamics_stays_pure() {
    let cfg = IntegratorConfig::default();
    for q in 2..=5 {
        for fam in [ProbeFamily::Dicke(1), ProbeFamily::XPolarized, ProbeFamily::Ghz] {
            let rho = fam.at(q).unwrap().state().unwrap();
            let rhs = assemble_rhs(&SimParams::dimensionless(q, 0.0, 0.0), rho.layout()).unwrap();
            let traj = evolve(&rho, &rhs, &[0.0, 1.0, 4.0, 9.0], &cfg).unwrap();
            for i in 0..traj.len() {
                let s = traj.state(i);
                assert!((s.purity() - 1.0).abs() < 1e-8, "{fam} N={q}");
                assert!((s.trace().re - 1.0).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn open_dynamics_stays_physical() {
    let cfg = IntegratorConfig::default();
    for q in [3, 6] {
        let rho = ProbeFamily::DickeHalf.at(q).unwrap().state().unwrap();
        let rhs = assemble_rhs(&SimParams::dimensionless(q, 0.2, 0.6), rho.layout()).unwrap();
        let traj = evolve(&rho, &rhs, &[0.0, 2.0, 5.0, 20.0], &cfg).unwrap();
        for i in 0..traj.len() {
            let s = traj.state(i);
            assert!((s.trace().re - 1.0).abs() < 1e-8);
            assert!(s.hermiticity_residual() < 1e-10);
            assert!(s.min_block_eigenvalue() > -1e-8);
        }
        // everything has decayed back toward the ground state by gt = 20
        assert!(traj.state(3).mean_excited_qubits() < 1e-3);
    }
}
