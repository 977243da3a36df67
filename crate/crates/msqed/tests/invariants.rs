//! Cross-module invariants on random band-limited states.

use std::sync::Arc;

use msqed::energy::{energy, pauli_form_energy};
use msqed::fock::TruncatedFock;
use msqed::model::{
    build_cutoff, build_potential, kramers_conjugate, CutoffKind, ModelConfig, PotentialKind, SpinorField, SplitRule,
    VectorPotential,
};
use msqed::quasiclassical::{parameter_from_potential, potential_from_parameter};
use msqed::spectral::{
    divergence_defect, forward_transform, inverse_transform, leray_project, random_band_limited,
    random_band_limited_vector, SpectralBox,
};
use msqed::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Arc<SpectralBox> {
    SpectralBox::new(6.0, 8).unwrap()
}

fn model(g: f64) -> ModelConfig {
    let grid = grid();
    let v = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap();
    let chi = build_cutoff(&CutoffKind::Gaussian { sigma: 2.0 }, SplitRule::Auto, &grid).unwrap();
    ModelConfig::new(v, chi, g, None).unwrap()
}

fn state(seed: u64, grid: &Arc<SpectralBox>) -> (SpinorField, VectorPotential) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let up = random_band_limited(grid, 2, &mut rng);
    let down = random_band_limited(grid, 2, &mut rng);
    let u = SpinorField::from_components(&up, &down).unwrap().normalized().unwrap();
    let scale = rng.random_range(0.1..3.0);
    let a = VectorPotential::project(&random_band_limited_vector(grid, 2, &mut rng)).scale(scale);
    (u, a)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip_and_parseval(seed in any::<u64>()) {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited(&g, 3, &mut rng);
        let h = random_band_limited(&g, 3, &mut rng);
        let (sf, sh) = (forward_transform(&f), forward_transform(&h));
        let back = inverse_transform(&sf);
        let err = back.data.iter().zip(&f.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "round trip {err:e}");
        let direct = f.inner(&h).unwrap();
        prop_assert!((sf.parseval_inner(&sh).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn leray_projection_is_idempotent_and_transverse(seed in any::<u64>()) {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_limited_vector(&g, 3, &mut rng);
        let w = random_band_limited_vector(&g, 3, &mut rng);
        let p = leray_project(&f);
        let pp = leray_project(&p);
        prop_assert!(pp.axpy(-1.0, &p).unwrap().norm() <= 1e-12 * p.norm());
        let (d, t) = divergence_defect(&p);
        prop_assert!(d <= 1e-12 * t);
        let lhs = p.inner(&w).unwrap();
        let rhs = f.inner(&leray_project(&w)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * f.norm() * w.norm());
    }

    #[test]
    fn pauli_form_equals_five_term_energy(seed in any::<u64>(), g in 0.0f64..1.0) {
        let cfg = model(g);
        let (u, a) = state(seed, &cfg.grid);
        let five = energy(&u, &a, &cfg).unwrap().total;
        let pauli = pauli_form_energy(&u, &a, &cfg).unwrap();
        prop_assert!(rel(five, pauli) < 1e-10, "{five} vs {pauli}");
    }

    #[test]
    fn energy_is_kramers_and_phase_invariant(seed in any::<u64>(), g in 0.0f64..1.0, theta in 0.0f64..6.3) {
        let cfg = model(g);
        let (u, a) = state(seed, &cfg.grid);
        let e = energy(&u, &a, &cfg).unwrap().total;
        let (nu, na) = kramers_conjugate(&u, &a);
        prop_assert!(rel(energy(&nu, &na, &cfg).unwrap().total, e) < 1e-12);
        let turned = u.scale(C64::from_polar(1.0, theta));
        prop_assert!(rel(energy(&turned, &a, &cfg).unwrap().total, e) < 1e-12);
    }

    #[test]
    fn photon_parameter_round_trip(seed in any::<u64>()) {
        let g = grid();
        let (_, a) = state(seed, &g);
        let back = potential_from_parameter(&parameter_from_potential(&a).unwrap()).unwrap();
        prop_assert!(back.distance_h1(&a).unwrap() <= 1e-12 * a.h1_norm());
    }

    #[test]
    fn fock_creation_is_adjoint_of_annihilation(seed in any::<u64>()) {
        let fock = TruncatedFock::new(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<C64> = (0..3).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        prop_assert!(fock.adjoint_defect(&h).unwrap() < 1e-14);
        let phi = fock.field(&h).unwrap();
        let herm = (&phi - phi.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(herm < 1e-14);
    }
}

#[test]
fn free_ccr_holds_below_the_cutoff() {
    assert!(TruncatedFock::new(2, 6).unwrap().ccr_defect() < 1e-13);
}
