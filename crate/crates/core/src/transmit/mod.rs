//! Transmit beamforming for fixed IRS phases: SCA on the squared-EE
//! reformulation, followed by power-based antenna selection and a re-solve on
//! the selected rows.

pub mod barrier;
pub mod sca;

use nalgebra::DMatrix;

use crate::channel::ChannelSet;
use crate::error::{Error, Result, Stage};
use crate::system::{combined_channels, evaluate_combined, BeamMatrix, PhaseConfig, RunTrace, Scenario};
use crate::{CMatrix, CVector, C64};

pub use barrier::BarrierOptions;
pub use sca::{sca_loop, solve_subproblem, ConvexSubproblem, ScaOptions, ScaState};

/// First-order upper bound of `sqrt(x y)` around `(x0, y0)`:
/// `sqrt(x0 y0) + sqrt(y0 / x0) (x - x0) / 2 + sqrt(x0 / y0) (y - y0) / 2`.
pub fn sqrt_surrogate(x: f64, y: f64, x0: f64, y0: f64) -> Result<f64> {
    if !(x0 > 0.0 && y0 > 0.0) {
        return Err(Error::Domain(format!(
            "surrogate expansion point ({x0}, {y0}) must be positive"
        )));
    }
    Ok((x0 * y0).sqrt() + 0.5 * (y0 / x0).sqrt() * (x - x0) + 0.5 * (x0 / y0).sqrt() * (y - y0))
}

/// Rotates each column so that `H_k^H w_k` is real and nonnegative.
pub fn rotate_to_real(combined: &[CVector], w: &BeamMatrix) -> BeamMatrix {
    let mut out = w.clone();
    for (k, h) in combined.iter().enumerate().take(w.k_users()) {
        let z = h.dotc(&w.w.column(k));
        if z.norm() > 0.0 {
            let rot = (z / z.norm()).conj();
            let mut col = out.w.column_mut(k);
            col *= rot;
        }
    }
    out
}

/// Indices of the `n_rf` rows with the largest power, ascending. Ties go to
/// the lower index.
pub fn antenna_select(w_full: &BeamMatrix, n_rf: usize) -> Vec<usize> {
    let p = w_full.row_powers();
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    idx.truncate(n_rf);
    idx.sort_unstable();
    idx
}

fn ee_of(combined: &[CVector], w: &BeamMatrix, scenario: &Scenario) -> f64 {
    evaluate_combined(combined, w, scenario).ee_per_hz
}

/// Unit-norm beam directions: zero-forcing, regularized ZF and matched.
fn candidate_directions(combined: &[CVector], scenario: &Scenario) -> Vec<CMatrix> {
    let k = combined.len();
    let h = CMatrix::from_columns(combined);
    let gram = h.adjoint() * &h;
    let mut out = Vec::new();
    let alpha = k as f64 * scenario.sigma2 / scenario.p_t;
    for reg in [0.0, alpha] {
        let mut g = gram.clone();
        for i in 0..k {
            g[(i, i)] += C64::new(reg, 0.0);
        }
        if let Some(inv) = g.try_inverse() {
            out.push(&h * inv);
        }
    }
    out.push(h);
    for d in &mut out {
        for mut col in d.column_iter_mut() {
            let n = col.norm();
            if n > 0.0 {
                col /= C64::new(n, 0.0);
            }
        }
    }
    out
}

/// Minimum per-stream powers giving SINR exactly `targets` along directions
/// `d`, if they exist.
fn min_powers(combined: &[CVector], d: &CMatrix, targets: &[f64], sigma2: f64) -> Option<Vec<f64>> {
    let k = combined.len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (row, h) in combined.iter().enumerate() {
        for i in 0..k {
            let gain = h.dotc(&d.column(i)).norm_sqr();
            a[(row, i)] = if row == i { gain / targets[row] } else { -gain };
        }
    }
    let p = a.lu().solve(&nalgebra::DVector::from_element(k, sigma2))?;
    p.iter()
        .all(|x| x.is_finite() && *x > 0.0)
        .then(|| p.iter().copied().collect())
}

/// A feasible starting beamformer: for each direction family, the minimum
/// powers meeting slightly inflated SINR floors, then a common power scale
/// chosen by golden-section search on EE within the power budget.
pub fn initial_beam(combined: &[CVector], scenario: &Scenario) -> Result<BeamMatrix> {
    let k = combined.len();
    let m = combined.first().map_or(0, CVector::len);
    if k == 0 || m == 0 {
        return Err(Error::Dimension(
            "initializer needs at least one user and antenna".into(),
        ));
    }
    let targets: Vec<f64> = scenario.rho.iter().map(|r| r * (1.0 + 1e-3) + 1e-3).collect();
    let mut best: Option<(f64, BeamMatrix)> = None;
    for d in candidate_directions(combined, scenario) {
        let Some(p) = min_powers(combined, &d, &targets, scenario.sigma2) else {
            continue;
        };
        let total: f64 = p.iter().sum();
        let s_max = scenario.p_t * (1.0 - 1e-6) / total;
        if s_max < 1.0 {
            continue;
        }
        let build = |s: f64| {
            let mut w = d.clone();
            for (i, mut col) in w.column_iter_mut().enumerate() {
                col *= C64::new((s * p[i]).sqrt(), 0.0);
            }
            BeamMatrix::new(w)
        };
        let ee = |s: f64| ee_of(combined, &build(s), scenario);
        let (mut lo, mut hi) = (1.0f64, s_max);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut f1, mut f2) = (ee(x1), ee(x2));
        for _ in 0..80 {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = ee(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = ee(x2);
            }
        }
        for s in [1.0, s_max, 0.5 * (lo + hi)] {
            let w = build(s);
            let e = ee_of(combined, &w, scenario);
            if best.as_ref().is_none_or(|(b, _)| e > *b) {
                best = Some((e, w));
            }
        }
    }
    best.map(|(_, w)| w).ok_or_else(|| {
        Error::infeasible(
            Stage::Initializer,
            "no beam direction meets every SINR floor within the power budget",
        )
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitOptions {
    pub sca: ScaOptions,
    /// Also re-solve on the selected rows from the truncated full-digital
    /// beamformer when that point is still feasible.
    pub warm_restricted: bool,
}

impl Default for TransmitOptions {
    fn default() -> Self {
        TransmitOptions {
            sca: ScaOptions::default(),
            warm_restricted: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransmitOutcome {
    /// Final beamformer with at most `n_rf` nonzero rows.
    pub w: BeamMatrix,
    /// Trace of the SCA run that produced `w`.
    pub trace: RunTrace,
    /// Stage-one beamformer using every antenna, and its trace.
    pub full: BeamMatrix,
    pub full_trace: RunTrace,
    pub selected: Vec<usize>,
}

fn restrict(combined: &[CVector], rows: &[usize]) -> Vec<CVector> {
    combined
        .iter()
        .map(|h| CVector::from_iterator(rows.len(), rows.iter().map(|&r| h[r])))
        .collect()
}

fn restrict_beam(w: &BeamMatrix, rows: &[usize]) -> BeamMatrix {
    BeamMatrix::new(w.w.select_rows(rows))
}

fn expand_beam(w: &BeamMatrix, rows: &[usize], m: usize) -> BeamMatrix {
    let mut full = CMatrix::zeros(m, w.k_users());
    for (i, &r) in rows.iter().enumerate() {
        full.set_row(r, &w.w.row(i));
    }
    BeamMatrix::new(full)
}

fn feasible(combined: &[CVector], w: &BeamMatrix, scenario: &Scenario) -> bool {
    let m = evaluate_combined(combined, w, scenario);
    w.transmit_power() <= scenario.p_t * (1.0 + 1e-9)
        && m.gammas.iter().zip(&scenario.rho).all(|(g, r)| *g >= r * (1.0 - 1e-9))
}

/// SCA restricted to `rows`, started from `w_start` (full-size, zero off
/// `rows`). Returns a full-size beamformer.
pub fn sca_on_support(
    combined: &[CVector],
    rows: &[usize],
    w_start: &BeamMatrix,
    scenario: &Scenario,
    opts: &ScaOptions,
) -> Result<(BeamMatrix, RunTrace)> {
    let m = combined.first().map_or(0, CVector::len);
    let sub = restrict(combined, rows);
    let (w, trace) = sca_loop(&sub, &restrict_beam(w_start, rows), scenario, opts)?;
    Ok((expand_beam(&w, rows, m), trace))
}

pub fn optimize_transmit(
    channels: &ChannelSet,
    phases: &PhaseConfig,
    scenario: &Scenario,
    opts: &TransmitOptions,
) -> Result<TransmitOutcome> {
    optimize_transmit_combined(&combined_channels(channels, phases), scenario, opts)
}

/// Stage one: SCA with all antennas. Stage two: keep the `n_rf` strongest
/// rows. Stage three: cold-started SCA on those rows.
pub fn optimize_transmit_combined(
    combined: &[CVector],
    scenario: &Scenario,
    opts: &TransmitOptions,
) -> Result<TransmitOutcome> {
    let m = combined.first().map_or(0, CVector::len);
    let w0 = initial_beam(combined, scenario)?;
    let (full, full_trace) = sca_loop(combined, &w0, scenario, &opts.sca)?;
    let selected = antenna_select(&full, scenario.n_rf.min(m));

    let mut best: Option<(f64, BeamMatrix, RunTrace)> = None;
    let mut offer = |w: BeamMatrix, trace: RunTrace| {
        let e = ee_of(combined, &w, scenario);
        if best.as_ref().is_none_or(|(b, _, _)| e > *b) {
            best = Some((e, w, trace));
        }
    };
    if full.active_antennas() <= scenario.n_rf {
        offer(full.clone(), full_trace.clone());
    }
    if selected.len() < m {
        let sub = restrict(combined, &selected);
        let cold = initial_beam(&sub, scenario).and_then(|w| sca_loop(&sub, &w, scenario, &opts.sca));
        let cold_err = match cold {
            Ok((w, trace)) => {
                offer(expand_beam(&w, &selected, m), trace);
                None
            }
            Err(e) => Some(e),
        };
        if opts.warm_restricted {
            let trunc = restrict_beam(&full, &selected);
            if feasible(&sub, &trunc, scenario) {
                if let Ok((w, trace)) = sca_loop(&sub, &trunc, scenario, &opts.sca) {
                    offer(expand_beam(&w, &selected, m), trace);
                }
            }
        }
        if best.is_none() {
            return Err(cold_err.unwrap_or_else(|| {
                Error::infeasible(Stage::Transmit, "no feasible beamformer on the selected antennas")
            }));
        }
    }
    let (_, w, trace) = best.expect("stage one or three produced a candidate");
    Ok(TransmitOutcome {
        w,
        trace,
        full,
        full_trace,
        selected,
    })
}
