//! Convexified EE subproblem and the SCA outer loop for fixed IRS phases.

use nalgebra::{DMatrix, DVector};

use super::barrier::{self, BarrierError, BarrierOptions, Constraint};
use super::{rotate_to_real, sqrt_surrogate};
use crate::error::{Error, Result, Stage};
use crate::system::{evaluate_combined, BeamMatrix, RunTrace, Scenario};
use crate::{CMatrix, CVector, C64};

/// SCA variables in physical units: `eta` is squared EE (per Hz), `t` squared
/// power (W^2), `a_k` per-user rate (bits/s/Hz), `v_k` an SINR-plus-one
/// surrogate and `b_k` interference plus noise (W).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub eta: f64,
    pub t: f64,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    pub b: Vec<f64>,
}

impl ScaState {
    /// The point where every surrogate is tight for `w`.
    pub fn tight(combined: &[CVector], w: &BeamMatrix, scenario: &Scenario) -> Self {
        let m = evaluate_combined(combined, w, scenario);
        let b = (0..combined.len())
            .map(|k| {
                (0..w.k_users())
                    .filter(|&i| i != k)
                    .map(|i| combined[k].dotc(&w.w.column(i)).norm_sqr())
                    .sum::<f64>()
                    + scenario.sigma2
            })
            .collect();
        ScaState {
            eta: m.ee_per_hz * m.ee_per_hz,
            t: m.power * m.power,
            a: m.gammas.iter().map(|g| (1.0 + g).log2()).collect(),
            v: m.gammas.iter().map(|g| 1.0 + g).collect(),
            b,
        }
    }
}

/// One convexified subproblem around an expansion point.
#[derive(Debug, Clone)]
pub struct ConvexSubproblem {
    pub combined: Vec<CVector>,
    pub expansion: ScaState,
    /// Beamformer the expansion point was taken at; seeds the solver.
    pub w0: BeamMatrix,
    pub p_t: f64,
    pub sigma2: f64,
    pub rho: Vec<f64>,
    pub epsilon: f64,
    pub p_c: f64,
}

impl ConvexSubproblem {
    pub fn at(combined: &[CVector], w: &BeamMatrix, scenario: &Scenario) -> Self {
        ConvexSubproblem {
            combined: combined.to_vec(),
            expansion: ScaState::tight(combined, w, scenario),
            w0: w.clone(),
            p_t: scenario.p_t,
            sigma2: scenario.sigma2,
            rho: scenario.rho.clone(),
            epsilon: scenario.epsilon,
            p_c: scenario.circuit_power(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOptions {
    /// Relative `eta` improvement below which the loop stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Required Lagrangian-gradient norm at the subproblem optimum.
    pub kkt_tol: f64,
    pub barrier: BarrierOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        ScaOptions {
            tol: 1e-4,
            max_iter: 30,
            kkt_tol: 1e-6,
            barrier: BarrierOptions::default(),
        }
    }
}

/// Orthonormal basis of the span of the channels. Optimal beams lie there:
/// any component orthogonal to every channel only costs power.
fn channel_basis(combined: &[CVector]) -> CMatrix {
    let m = combined.first().map_or(0, CVector::len);
    let h = CMatrix::from_columns(combined);
    if m == 0 || combined.is_empty() {
        return CMatrix::zeros(m, 0);
    }
    let svd = h.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > 1e-10 * smax)
        .collect();
    CMatrix::from_columns(&keep.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>())
}

/// Real-variable layout of the subproblem.
struct Layout {
    k: usize,
    r: usize,
}

impl Layout {
    fn re(&self, i: usize, j: usize) -> usize {
        2 * self.r * i + j
    }
    fn im(&self, i: usize, j: usize) -> usize {
        2 * self.r * i + self.r + j
    }
    fn w_len(&self) -> usize {
        2 * self.r * self.k
    }
    fn eta(&self) -> usize {
        self.w_len()
    }
    fn t(&self) -> usize {
        self.w_len() + 1
    }
    fn a(&self, k: usize) -> usize {
        self.w_len() + 2 + k
    }
    fn v(&self, k: usize) -> usize {
        self.w_len() + 2 + self.k + k
    }
    fn b(&self, k: usize) -> usize {
        self.w_len() + 2 + 2 * self.k + k
    }
    fn len(&self) -> usize {
        self.w_len() + 2 + 3 * self.k
    }

    /// Coefficients of `Re(g^H c_i)` and `Im(g^H c_i)` over the w block.
    fn gain_rows(&self, g: &CVector, i: usize) -> (DVector<f64>, DVector<f64>) {
        let mut re = DVector::zeros(self.w_len());
        let mut im = DVector::zeros(self.w_len());
        for j in 0..self.r {
            re[self.re(i, j)] = g[j].re;
            re[self.im(i, j)] = g[j].im;
            im[self.re(i, j)] = -g[j].im;
            im[self.im(i, j)] = g[j].re;
        }
        (re, im)
    }
}

/// `f_a(x, y; x0, y0)` is linear and homogeneous: `cx x + cy y`.
fn surrogate_slopes(x0: f64, y0: f64) -> Result<(f64, f64)> {
    let cx = sqrt_surrogate(1.0, 0.0, x0, y0)?;
    let cy = sqrt_surrogate(0.0, 1.0, x0, y0)?;
    Ok((cx, cy))
}

fn sparse(row: &DVector<f64>, scale: f64) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, v * scale))
        .collect()
}

/// Solves one convexified subproblem. Returns the new beamformer (not yet
/// rotated), the optimal surrogate variables and solver statistics. The
/// expansion point comes back unchanged when the solver cannot beat its `eta`.
pub fn solve_subproblem(
    sub: &ConvexSubproblem,
    opts: &ScaOptions,
) -> Result<(BeamMatrix, ScaState, crate::system::SolverStats)> {
    let (w, state, stats) = solve_barrier(sub, opts)?;
    // the barrier stops strictly inside; never hand back less than the expansion point
    if state.eta < sub.expansion.eta {
        return Ok((sub.w0.clone(), sub.expansion.clone(), stats));
    }
    Ok((w, state, stats))
}

fn solve_barrier(
    sub: &ConvexSubproblem,
    opts: &ScaOptions,
) -> Result<(BeamMatrix, ScaState, crate::system::SolverStats)> {
    let k_users = sub.combined.len();
    let m_ant = sub.combined.first().map_or(0, CVector::len);
    if sub.w0.k_users() != k_users || sub.w0.m_antennas() != m_ant || sub.rho.len() != k_users {
        return Err(Error::Dimension(format!(
            "subproblem with {k_users} users, {m_ant} antennas, start {}x{}",
            sub.w0.m_antennas(),
            sub.w0.k_users()
        )));
    }
    let e = &sub.expansion;
    if !(e.eta > 0.0 && e.t > 0.0) {
        return Err(Error::Domain("expansion point needs eta > 0 and t > 0".into()));
    }

    let q = channel_basis(&sub.combined);
    let lay = Layout {
        k: k_users,
        r: q.ncols(),
    };
    let sigma = sub.sigma2.sqrt();
    // noise-normalized channels in the basis
    let g: Vec<CVector> = sub
        .combined
        .iter()
        .map(|h| q.adjoint() * h / C64::new(sigma, 0.0))
        .collect();

    let n = lay.len();
    let wl = lay.w_len();
    let mut cons = Vec::new();

    // interference forms, shared by the SINR and QoS constraints
    let mut interference: Vec<DMatrix<f64>> = Vec::with_capacity(k_users);
    let mut signal: Vec<DVector<f64>> = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mut p = DMatrix::zeros(wl, wl);
        for i in 0..k_users {
            let (re, im) = lay.gain_rows(&g[k], i);
            if i == k {
                signal.push(re);
            } else {
                p.ger(1.0, &re, &re, 1.0);
                p.ger(1.0, &im, &im, 1.0);
            }
        }
        interference.push(p);
    }

    for k in 0..k_users {
        // Re(g^H c_k) >= f_a(v_k - 1, b_k) around (v0 - 1, b0)
        let x0 = (e.v[k] - 1.0).max(1e-12);
        let b0 = e.b[k] / sub.sigma2;
        let (cx, cy) = surrogate_slopes(x0, b0)?;
        let mut lin = sparse(&signal[k], 1.0);
        lin.push((lay.v(k), -cx));
        lin.push((lay.b(k), -cy));
        cons.push(Constraint::affine(cx, lin));
    }
    {
        // sum a_k >= f_a(eta, t)
        let (cx, cy) = surrogate_slopes(e.eta, e.t)?;
        let mut lin: Vec<(usize, f64)> = (0..k_users).map(|k| (lay.a(k), 1.0)).collect();
        lin.push((lay.eta(), -cx));
        lin.push((lay.t(), -cy));
        cons.push(Constraint::affine(0.0, lin));
    }
    // beam coordinates are not noise-scaled, so ||c||^2 is the transmit power
    let eye = DMatrix::identity(wl, wl);
    cons.push(Constraint {
        c0: -sub.p_c,
        quad: Some(&eye * sub.epsilon),
        sqrts: vec![(lay.t(), 1.0)],
        ..Default::default()
    });
    cons.push(Constraint {
        c0: sub.p_t,
        quad: Some(eye),
        ..Default::default()
    });
    for k in 0..k_users {
        if sub.rho[k] > 0.0 {
            cons.push(Constraint {
                lin: sparse(&signal[k], 1.0 / sub.rho[k].sqrt()),
                norm: Some((interference[k].clone(), 1.0)),
                ..Default::default()
            });
        }
        cons.push(Constraint {
            lin: vec![(lay.a(k), -1.0)],
            logs: vec![(lay.v(k), std::f64::consts::LOG2_E)],
            ..Default::default()
        });
        cons.push(Constraint {
            c0: -1.0,
            lin: vec![(lay.b(k), 1.0)],
            quad: Some(interference[k].clone()),
            ..Default::default()
        });
    }
    cons.push(Constraint::affine(0.0, vec![(lay.eta(), 1.0)]));

    let mut x0 = DVector::zeros(n);
    for i in 0..k_users {
        let c = q.adjoint() * sub.w0.w.column(i);
        for j in 0..lay.r {
            x0[lay.re(i, j)] = c[j].re;
            x0[lay.im(i, j)] = c[j].im;
        }
    }
    x0[lay.eta()] = e.eta;
    x0[lay.t()] = e.t;
    for k in 0..k_users {
        x0[lay.a(k)] = e.a[k];
        x0[lay.v(k)] = e.v[k];
        x0[lay.b(k)] = e.b[k] / sub.sigma2;
    }

    let mut cost = DVector::zeros(n);
    cost[lay.eta()] = -1.0;
    let (x, stats) = barrier::minimize(&cost, &cons, &x0, &opts.barrier).map_err(|err| match err {
        BarrierError::Infeasible { depth } => Error::infeasible(
            Stage::Subproblem,
            format!("no strictly feasible point (max violation {depth:.3e})"),
        ),
        BarrierError::Domain => Error::infeasible(Stage::Subproblem, "start point outside the constraint domain"),
    })?;

    let mut w = CMatrix::zeros(m_ant, k_users);
    for i in 0..k_users {
        let c = CVector::from_iterator(lay.r, (0..lay.r).map(|j| C64::new(x[lay.re(i, j)], x[lay.im(i, j)])));
        w.set_column(i, &(&q * c));
    }
    let state = ScaState {
        eta: x[lay.eta()],
        t: x[lay.t()],
        a: (0..k_users).map(|k| x[lay.a(k)]).collect(),
        v: (0..k_users).map(|k| x[lay.v(k)]).collect(),
        b: (0..k_users).map(|k| x[lay.b(k)] * sub.sigma2).collect(),
    };
    Ok((BeamMatrix::new(w), state, stats))
}

fn audit(combined: &[CVector], w: &BeamMatrix, scenario: &Scenario) -> (crate::system::Metrics, bool) {
    let m = evaluate_combined(combined, w, scenario);
    let ok = w.transmit_power() <= scenario.p_t * (1.0 + 1e-9)
        && m.gammas.iter().zip(&scenario.rho).all(|(g, r)| *g >= r * (1.0 - 1e-9));
    (m, ok)
}

/// SCA iterations from a feasible `w_init`. Every iteration re-expands at the
/// beamformer actually returned, so the recorded EE never decreases; a solve
/// that fails to improve ends the loop with the incumbent.
pub fn sca_loop(
    combined: &[CVector],
    w_init: &BeamMatrix,
    scenario: &Scenario,
    opts: &ScaOptions,
) -> Result<(BeamMatrix, RunTrace)> {
    let mut w = rotate_to_real(combined, w_init);
    let (mut metrics, ok) = audit(combined, &w, scenario);
    if !ok {
        return Err(Error::infeasible(
            Stage::Transmit,
            "initial beamformer violates the power budget or an SINR floor",
        ));
    }
    let mut trace = RunTrace::new();
    trace.push(metrics.record(0, 0));
    for it in 1..=opts.max_iter {
        let sub = ConvexSubproblem::at(combined, &w, scenario);
        let (w_new, _, stats) = match solve_barrier(&sub, opts) {
            Ok(r) => r,
            Err(e) if it == 1 => return Err(e),
            Err(_) => break,
        };
        trace.solver.push(stats);
        let w_new = rotate_to_real(combined, &w_new);
        let (m_new, ok) = audit(combined, &w_new, scenario);
        if !ok || !(m_new.ee_per_hz >= metrics.ee_per_hz) {
            break;
        }
        let eta_old = metrics.ee_per_hz * metrics.ee_per_hz;
        let eta_new = m_new.ee_per_hz * m_new.ee_per_hz;
        w = w_new;
        metrics = m_new;
        trace.push(metrics.record(it, 0));
        if (eta_new - eta_old) <= opts.tol * eta_old {
            break;
        }
    }
    Ok((w, trace))
}
