#![allow(dead_code)]

use lensirs::channel::ChannelSet;
use lensirs::system::{BeamMatrix, PhaseConfig, Scenario};
use lensirs::{CMatrix, CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-variance circular complex Gaussian.
pub fn cn<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| cn(rng)))
}

/// Small abstract scenario: unit noise, unit power budget, zero floors.
pub fn small_scenario(m: usize, n: usize, l: usize, k: usize, bits: u32) -> Scenario {
    let mut s = Scenario::desk().with_users(k);
    s.m_antennas = m;
    s.n_elements = n;
    s.l_irs = l;
    s.phase_bits = bits;
    s.n_rf = s.n_rf.min(m);
    s.sigma2 = 1.0;
    s.p_t = 1.0;
    s.rho = vec![0.0; k];
    s.geometry.irs_positions = (0..l)
        .map(|i| [50.0, 50.0 - 100.0 * i as f64 / l.max(2) as f64])
        .collect();
    s.validate().expect("small scenario is valid");
    s
}

/// I.i.d. CN(0, 1) cascaded channels with the scenario's dimensions.
pub fn random_channels<R: Rng>(s: &Scenario, rng: &mut R) -> ChannelSet {
    let g = (0..s.l_irs)
        .map(|_| CMatrix::from_fn(s.n_elements, s.m_antennas, |_, _| cn(rng)))
        .collect();
    let h = (0..s.l_irs)
        .map(|_| (0..s.k_users).map(|_| cn_vector(rng, s.n_elements)).collect())
        .collect();
    ChannelSet {
        g,
        h,
        seed: 0,
        user_positions: vec![[0.0, 0.0]; s.k_users],
    }
}

/// Random beamformer with total power `p`.
pub fn random_beam<R: Rng>(m: usize, k: usize, p: f64, rng: &mut R) -> BeamMatrix {
    let w = CMatrix::from_fn(m, k, |_, _| cn(rng));
    let scale = (p / w.norm_squared()).sqrt();
    BeamMatrix::new(w * C64::new(scale, 0.0))
}

pub fn random_phases<R: Rng>(s: &Scenario, rng: &mut R) -> PhaseConfig {
    let levels = 1u32 << s.phase_bits;
    let idx = (0..s.l_irs)
        .map(|_| (0..s.n_elements).map(|_| rng.random_range(0..levels)).collect())
        .collect();
    PhaseConfig::new(s.phase_bits, idx).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
