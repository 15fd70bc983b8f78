mod common;

use common::*;
use lensirs::baselines::{max_irs_phases, run_baseline, zf_precoder, zf_with_selection, BaselineOptions, Scheme};
use lensirs::channel::synth_channel_set;
use lensirs::par;
use lensirs::reflect::{build_v_cache, effective_gains};
use lensirs::system::{PhaseConfig, Scenario};
use lensirs::{CVector, C64};

#[test]
fn zf_single_user_is_matched_filter() {
    let h = vec![cn_vector(&mut rng(1), 6)];
    let zf = zf_precoder(&h, 2.5).unwrap();
    assert!(zf.full_rank);
    let w = zf.w.column(0);
    assert!((zf.w.transmit_power() - 2.5).abs() < 1e-10);
    let cos = h[0].dotc(&w).norm() / (h[0].norm() * w.norm());
    assert!((cos - 1.0).abs() < 1e-12);
}

#[test]
fn zf_nulls_cross_terms() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let h: Vec<CVector> = (0..3).map(|_| cn_vector(&mut r, 7)).collect();
        let zf = zf_precoder(&h, 1.0).unwrap();
        assert!((zf.w.transmit_power() - 1.0).abs() < 1e-10);
        for k in 0..3 {
            let own = h[k].dotc(&zf.w.column(k)).norm();
            for i in (0..3).filter(|&i| i != k) {
                assert!(h[k].dotc(&zf.w.column(i)).norm() <= 1e-9 * own);
            }
        }
    }
}

#[test]
fn zf_flags_rank_deficiency() {
    let h0 = cn_vector(&mut rng(2), 5);
    let h = vec![h0.clone(), h0 * C64::new(0.0, 2.0)];
    let zf = zf_precoder(&h, 1.0).unwrap();
    assert!(!zf.full_rank);
    assert!(zf.w.transmit_power() <= 1.0 + 1e-10);
}

#[test]
fn zf_with_selection_respects_rf_chains() {
    let mut s = small_scenario(9, 4, 1, 2, 2);
    s.n_rf = 4;
    let mut r = rng(3);
    let h: Vec<CVector> = (0..2).map(|_| cn_vector(&mut r, 9)).collect();
    let w = zf_with_selection(&h, &s).unwrap();
    assert_eq!(w.active_antennas(), 4);
    assert!(h[0].dotc(&w.column(1)).norm() <= 1e-9 * h[0].dotc(&w.column(0)).norm());
}

fn signal_strength(ch: &lensirs::channel::ChannelSet, w: &lensirs::system::BeamMatrix, p: &PhaseConfig) -> f64 {
    let v = build_v_cache(ch, w);
    let g = effective_gains(&p.u(), &v);
    (0..g.len()).map(|k| g[k][k].norm()).sum::<f64>() / g.len() as f64
}

#[test]
fn max_irs_single_element_is_exhaustive() {
    for seed in 0..20 {
        let mut r = rng(10 + seed);
        let s = small_scenario(5, 1, 1, 1, 3);
        let ch = random_channels(&s, &mut r);
        let w = random_beam(5, 1, 1.0, &mut r);
        let got = max_irs_phases(&ch, &w, &PhaseConfig::zeros(1, 1, 3));
        let best = (0..8)
            .map(|q| signal_strength(&ch, &w, &PhaseConfig::new(3, vec![vec![q]]).unwrap()))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(rel_err(signal_strength(&ch, &w, &got), best) <= 1e-12);
    }
}

#[test]
fn max_irs_is_coordinate_optimal() {
    for seed in 0..10 {
        let mut r = rng(30 + seed);
        let s = small_scenario(5, 6, 2, 3, 2);
        let ch = random_channels(&s, &mut r);
        let w = random_beam(5, 3, 1.0, &mut r);
        let init = random_phases(&s, &mut r);
        let got = max_irs_phases(&ch, &w, &init);
        let f = signal_strength(&ch, &w, &got);
        assert!(f >= signal_strength(&ch, &w, &init) - 1e-12);
        for l in 0..2 {
            for n in 0..6 {
                for q in 0..4 {
                    let mut alt = got.clone();
                    alt.set_index(l, n, q);
                    assert!(signal_strength(&ch, &w, &alt) <= f * (1.0 + 1e-9));
                }
            }
        }
    }
}

#[test]
fn baselines_share_channels_and_report_feasibility() {
    let s = Scenario::desk();
    let seeds: Vec<u64> = (0..20).collect();
    let opts = BaselineOptions::default();
    let pairs = par::map(&seeds, par::parallel_available(), |&seed| {
        let ch = synth_channel_set(&s, seed).unwrap();
        let p = run_baseline(Scheme::Proposed, &ch, &s, &opts).unwrap();
        let z = run_baseline(Scheme::ZfRbf, &ch, &s, &opts).unwrap();
        assert!(p.feasible && z.feasible);
        (p.se, z.se)
    });
    let (p, z): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    assert!(p.iter().sum::<f64>() >= z.iter().sum::<f64>(), "{p:?} vs {z:?}");
}

#[test]
fn fully_digital_pays_for_every_chain() {
    let s = Scenario::desk();
    let ch = synth_channel_set(&s, 1).unwrap();
    let fd = run_baseline(Scheme::FullyDigital, &ch, &s, &BaselineOptions::default()).unwrap();
    let all = Scenario {
        n_rf: s.m_antennas,
        ..s.clone()
    };
    let expect = s.epsilon * fd.w.transmit_power() + all.circuit_power();
    assert!(rel_err(fd.total_power, expect) <= 1e-12);
}

#[test]
fn scheme_ids_parse() {
    for s in Scheme::ALL {
        assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
    }
    assert_eq!("nope".parse::<Scheme>().unwrap_err().class(), "config");
}
