mod common;

use common::*;
use lensirs::channel::ula_steering;
use lensirs::reflect::{dual_objective, ratio_objective, transformed_objective, update_lambda, update_y};
use lensirs::system::{phase_set, sinr, total_power, PhaseConfig, Scenario};
use lensirs::transmit::{rotate_to_real, sqrt_surrogate};
use lensirs::{CVector, C64};
use proptest::prelude::*;

fn instance(seed: u64, m: usize, k: usize) -> (Vec<CVector>, lensirs::system::BeamMatrix) {
    let mut r = rng(seed);
    let h = (0..k).map(|_| cn_vector(&mut r, m)).collect();
    (h, random_beam(m, k, 1.0, &mut r))
}

proptest! {
    #[test]
    fn phases_are_unit_modulus(bits in 1u32..=6, idx in prop::collection::vec(0u32..64, 1..24)) {
        let levels = 1u32 << bits;
        let idx: Vec<u32> = idx.into_iter().map(|q| q % levels).collect();
        let p = PhaseConfig::new(bits, vec![idx]).unwrap();
        let set = phase_set(bits).unwrap();
        for (n, z) in p.u().iter().enumerate() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-15);
            let expect = C64::from_polar(1.0, set[p.index(0, n) as usize]);
            prop_assert!((z - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn steering_has_unit_norm(angle in -3.2f64..3.2, n in 1usize..200) {
        prop_assert!((ula_steering(angle, n).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_is_scale_invariant(seed in any::<u64>(), k in 1usize..5, c in 0.01f64..100.0, sigma2 in 0.01f64..10.0) {
        let (h, w) = instance(seed, 6, k);
        let a = sinr(&h, &w, sigma2);
        let b = sinr(&h, &w.scaled(c), sigma2 * c * c);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(rel_err(*x, *y) <= 1e-10);
        }
    }

    #[test]
    fn power_is_affine_in_transmit_power(seed in any::<u64>(), c in 0.0f64..10.0) {
        let s = Scenario::desk();
        let (_, w) = instance(seed, s.m_antennas, s.k_users);
        let p0 = total_power(&lensirs::system::BeamMatrix::zeros(s.m_antennas, s.k_users), &s);
        let p = total_power(&w.scaled(c.sqrt()), &s);
        prop_assert!((p - p0 - s.epsilon * c).abs() <= 1e-12 * p);
    }

    #[test]
    fn rotation_keeps_sinr(seed in any::<u64>(), k in 1usize..5) {
        let (h, w) = instance(seed, 7, k);
        let rot = rotate_to_real(&h, &w);
        for (x, y) in sinr(&h, &w, 0.3).iter().zip(&sinr(&h, &rot, 0.3)) {
            prop_assert!(rel_err(*x, *y) <= 1e-12);
        }
        prop_assert!(rel_err(w.transmit_power(), rot.transmit_power()) <= 1e-12);
    }

    #[test]
    fn surrogate_majorizes(x in 0.0f64..100.0, y in 0.0f64..100.0, x0 in 1e-3f64..100.0, y0 in 1e-3f64..100.0) {
        prop_assert!(sqrt_surrogate(x, y, x0, y0).unwrap() >= (x * y).sqrt() - 1e-10);
    }

    #[test]
    fn dual_objective_peaks_at_sinr(gammas in prop::collection::vec(0.0f64..50.0, 1..5), shift in prop::collection::vec(-0.9f64..5.0, 5)) {
        let lambda: Vec<f64> = gammas.iter().zip(&shift).map(|(g, s)| (g * (1.0 + s)).max(0.0)).collect();
        let best = dual_objective(&gammas, &update_lambda(&gammas));
        prop_assert!(dual_objective(&gammas, &lambda) <= best + 1e-12 * best.abs().max(1.0));
    }

    #[test]
    fn quadratic_transform_never_exceeds_ratio(seed in any::<u64>(), k in 1usize..4, dim in 1usize..10, jitter in 0.0f64..2.0) {
        let mut r = rng(seed);
        let v: Vec<Vec<CVector>> = (0..k).map(|_| (0..k).map(|_| cn_vector(&mut r, dim)).collect()).collect();
        let u = CVector::from_iterator(dim, (0..dim).map(|_| C64::from_polar(1.0, 2.0 * cn(&mut r).re)));
        let lambda: Vec<f64> = (0..k).map(|_| cn(&mut r).norm()).collect();
        let y_star = update_y(&u, &v, &lambda, 0.5);
        let y: Vec<C64> = y_star.iter().map(|z| z + cn(&mut r) * jitter).collect();
        let f3 = ratio_objective(&u, &v, &lambda, 0.5);
        prop_assert!(transformed_objective(&u, &y, &v, &lambda, 0.5) <= f3 + 1e-10 * f3.abs().max(1.0));
    }
}
