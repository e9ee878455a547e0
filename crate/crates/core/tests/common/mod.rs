use std::sync::Arc;

use dicke_qfi_core::blocks::MatrixStructure;
use dicke_qfi_core::evolve::DensityState;
use dicke_qfi_core::{BasisLayout, Complex64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random positive trace-one state with every sector populated.
pub fn random_state(rng: &mut impl Rng, layout: Arc<BasisLayout>) -> DensityState {
    let dims = layout.block_dims();
    let blocks: Vec<DMatrix<Complex64>> = dims
        .iter()
        .map(|&d| {
            let a = DMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            &a * a.adjoint()
        })
        .collect();
    let total: f64 = blocks.iter().map(|b| b.trace().re).sum();
    let mut rho = DensityState::zeros(layout.clone());
    for idx in 0..layout.total_dim() {
        let (b, r, c) = layout.locate(idx);
        rho.as_mut_slice()[idx] = blocks[b][(r, c)] / total;
    }
    rho
}

/// Random Hermitian (not necessarily positive) state with unit trace.
#[allow(dead_code)]
pub fn random_hermitian(rng: &mut impl Rng, layout: Arc<BasisLayout>) -> DensityState {
    let dims = layout.block_dims();
    let blocks: Vec<DMatrix<Complex64>> = dims
        .iter()
        .map(|&d| {
            let a = DMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
        })
        .collect();
    let mut rho = DensityState::zeros(layout.clone());
    for idx in 0..layout.total_dim() {
        let (b, r, c) = layout.locate(idx);
        rho.as_mut_slice()[idx] = blocks[b][(r, c)];
    }
    let tr = rho.trace();
    let shift = (Complex64::new(1.0, 0.0) - tr) / layout.boson_levels() as f64 / layout.sectors().len() as f64;
    // spread the trace correction over the diagonal of the top multiplet's m = J row
    for s in layout.sectors() {
        let t = dicke_qfi_core::SpinTriple::new(s.j2, s.j2 as i32, s.j2 as i32).unwrap();
        for l in 0..layout.boson_levels() {
            let v = rho.get(t, l, l) + Complex64::new(shift.re, 0.0);
            rho.set(t, l, l, v);
        }
    }
    rho
}
