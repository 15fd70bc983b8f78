//! Comparison schemes: zero-forcing with reflect optimization, transmit
//! optimization with signal-strength phases, and a fully digital array.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::harness::alternating::{alternating_optimize, alternating_with, AlternatingOptions, PhaseStep};
use crate::reflect::{build_v_cache, effective_gains, optimize_reflect};
use crate::system::{combined_channels, evaluate, unit_phasor, BeamMatrix, PhaseConfig, RunTrace, Scenario};
use crate::transmit::antenna_select;
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Proposed,
    ZfRbf,
    TbfMaxIrs,
    FullyDigital,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::ZfRbf, Scheme::TbfMaxIrs, Scheme::FullyDigital];

    /// Stable CLI identifier.
    pub fn id(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::ZfRbf => "zf-rbf",
            Scheme::TbfMaxIrs => "tbf-maxirs",
            Scheme::FullyDigital => "fully-digital",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.id() == s.trim())
            .ok_or_else(|| Error::config("schemes", format!("unknown scheme `{s}`")))
    }
}

/// Zero-forcing output; `full_rank` is false when the pseudo-inverse had to
/// drop directions and some streams could not be nulled.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfPrecoder {
    pub w: BeamMatrix,
    pub full_rank: bool,
}

/// `H (H^H H)^+` with columns normalized and equal power `p_t / K` per
/// stream. Streams whose pseudo-inverse column vanishes get no power and the
/// budget is shared by the rest.
pub fn zf_precoder(combined: &[CVector], p_t: f64) -> Result<ZfPrecoder> {
    let k = combined.len();
    if k == 0 {
        return Err(Error::Dimension("zero-forcing needs at least one user".into()));
    }
    let h = CMatrix::from_columns(combined);
    let hh = h.adjoint();
    let sv = hh.clone().svd(false, false).singular_values;
    let eps = 1e-10 * sv.max().max(f64::MIN_POSITIVE);
    let rank = sv.iter().filter(|s| **s > eps).count();
    let mut w = hh
        .pseudo_inverse(eps)
        .map_err(|e| Error::Domain(format!("pseudo-inverse failed: {e}")))?;
    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let live = norms.iter().filter(|n| **n > 0.0).count();
    for (i, mut col) in w.column_iter_mut().enumerate() {
        if norms[i] > 0.0 {
            col *= C64::new((p_t / live as f64).sqrt() / norms[i], 0.0);
        }
    }
    Ok(ZfPrecoder {
        w: BeamMatrix::new(w),
        full_rank: rank == k,
    })
}

/// ZF on every antenna, keep the `n_rf` strongest rows, then ZF again on
/// those rows.
pub fn zf_with_selection(combined: &[CVector], scenario: &Scenario) -> Result<BeamMatrix> {
    let m = combined.first().map_or(0, CVector::len);
    let full = zf_precoder(combined, scenario.p_t)?.w;
    if scenario.n_rf >= m {
        return Ok(full);
    }
    let rows = antenna_select(&full, scenario.n_rf);
    let sub: Vec<CVector> = combined
        .iter()
        .map(|h| CVector::from_iterator(rows.len(), rows.iter().map(|&r| h[r])))
        .collect();
    let w = zf_precoder(&sub, scenario.p_t)?.w;
    let mut out = CMatrix::zeros(m, combined.len());
    for (i, &r) in rows.iter().enumerate() {
        out.set_row(r, &w.w.row(i));
    }
    Ok(BeamMatrix::new(out))
}

/// Coordinate ascent on `(1/K) sum_k |H_k^H w_k|` over single-element phase
/// changes, starting from `init`, until no change improves it.
pub fn max_irs_phases(channels: &ChannelSet, w: &BeamMatrix, init: &PhaseConfig) -> PhaseConfig {
    let v = build_v_cache(channels, w);
    let levels = init.levels();
    let mut idx = init.stacked_indices();
    let mut u = init.u();
    let k_users = v.len();
    let mut s: Vec<C64> = effective_gains(&u, &v)
        .iter()
        .enumerate()
        .map(|(k, row)| row[k])
        .collect();
    let objective = |s: &[C64]| s.iter().map(|z| z.norm()).sum::<f64>() / k_users as f64;
    let mut current = objective(&s);
    loop {
        let mut changed = false;
        for n in 0..idx.len() {
            let mut best: Option<(u32, f64, Vec<C64>)> = None;
            for q in 0..levels {
                if q == idx[n] {
                    continue;
                }
                let delta = (unit_phasor(q, levels) - u[n]).conj();
                let cand: Vec<C64> = (0..k_users).map(|k| s[k] + delta * v[k][k][n]).collect();
                let f = objective(&cand);
                if f > current * (1.0 + 1e-12) && best.as_ref().is_none_or(|(_, b, _)| f > *b) {
                    best = Some((q, f, cand));
                }
            }
            if let Some((q, f, cand)) = best {
                idx[n] = q;
                u[n] = unit_phasor(q, levels);
                s = cand;
                current = f;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    PhaseConfig::from_stacked(init.bits(), init.l_irs(), &idx).expect("indices stay on the grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOptions {
    pub alternating: AlternatingOptions,
    /// ZF rounds for the zf-rbf scheme.
    pub zf_rounds: usize,
    /// zf-rbf computes ZF once at zero phases, runs one reflect step, and
    /// keeps that beamformer.
    pub zf_single_shot: bool,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            alternating: AlternatingOptions::default(),
            zf_rounds: 10,
            zf_single_shot: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub scheme: Scheme,
    pub w: BeamMatrix,
    pub phases: PhaseConfig,
    /// bits / J / Hz.
    pub ee: f64,
    /// bits / s / Hz.
    pub se: f64,
    pub total_power: f64,
    pub min_sinr_margin_db: f64,
    /// Every SINR floor is met.
    pub feasible: bool,
    pub trace: RunTrace,
}

fn finish(
    scheme: Scheme,
    channels: &ChannelSet,
    scenario: &Scenario,
    w: BeamMatrix,
    phases: PhaseConfig,
    trace: RunTrace,
) -> BaselineResult {
    let m = evaluate(channels, &phases, &w, scenario);
    BaselineResult {
        scheme,
        feasible: m.gammas.iter().zip(&scenario.rho).all(|(g, r)| *g >= r * (1.0 - 1e-9)),
        ee: m.ee_per_hz,
        se: m.rate_per_hz,
        total_power: m.power,
        min_sinr_margin_db: m.min_sinr_margin_db,
        w,
        phases,
        trace,
    }
}

fn zf_rbf(channels: &ChannelSet, scenario: &Scenario, opts: &BaselineOptions) -> Result<BaselineResult> {
    let mut phases = PhaseConfig::zeros(scenario.l_irs, scenario.n_elements, scenario.phase_bits);
    let mut w = zf_with_selection(&combined_channels(channels, &phases), scenario)?;
    let mut best_ee = evaluate(channels, &phases, &w, scenario).ee_per_hz;
    let mut trace = RunTrace::new();
    trace.push(evaluate(channels, &phases, &w, scenario).record(0, 0));
    let rounds = if opts.zf_single_shot { 1 } else { opts.zf_rounds };
    for round in 1..=rounds {
        let r = optimize_reflect(channels, &w, &phases, scenario, &opts.alternating.reflect);
        let w_new = if opts.zf_single_shot {
            w.clone()
        } else {
            zf_with_selection(&combined_channels(channels, &r.phases), scenario)?
        };
        let m = evaluate(channels, &r.phases, &w_new, scenario);
        if !(m.ee_per_hz > best_ee) {
            break;
        }
        let gain = m.ee_per_hz - best_ee;
        trace.push(m.record(round, phases.phase_changes(&r.phases)));
        best_ee = m.ee_per_hz;
        phases = r.phases;
        w = w_new;
        if gain <= opts.alternating.outer_tol * best_ee {
            break;
        }
    }
    Ok(finish(Scheme::ZfRbf, channels, scenario, w, phases, trace))
}

/// Runs one scheme on one channel realization.
pub fn run_baseline(
    scheme: Scheme,
    channels: &ChannelSet,
    scenario: &Scenario,
    opts: &BaselineOptions,
) -> Result<BaselineResult> {
    match scheme {
        Scheme::Proposed => {
            let out = alternating_optimize(channels, scenario, &opts.alternating)?;
            Ok(finish(scheme, channels, scenario, out.w, out.phases, out.trace))
        }
        Scheme::ZfRbf => zf_rbf(channels, scenario, opts),
        Scheme::TbfMaxIrs => {
            let out = alternating_with(channels, scenario, &opts.alternating, PhaseStep::MaxIrs)?;
            Ok(finish(scheme, channels, scenario, out.w, out.phases, out.trace))
        }
        Scheme::FullyDigital => {
            let mut full = scenario.clone();
            full.n_rf = scenario.m_antennas;
            let out = alternating_optimize(channels, &full, &opts.alternating)?;
            Ok(finish(scheme, channels, &full, out.w, out.phases, out.trace))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_ids_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
        }
        assert!("zf".parse::<Scheme>().is_err());
    }

    #[test]
    fn zf_single_user_is_matched() {
        let h = CVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.5)]);
        let zf = zf_precoder(std::slice::from_ref(&h), 2.0).unwrap();
        let expect = &h * C64::new(2f64.sqrt() / h.norm(), 0.0);
        assert!((zf.w.w.column(0) - expect).norm() < 1e-12);
        assert!(zf.full_rank);
        assert!((zf.w.transmit_power() - 2.0).abs() < 1e-12);
    }
}
