//! Discrete IRS phase optimization for a fixed beamformer.
//!
//! The sum rate `sum_k ln(1 + gamma_k)` is lifted with auxiliaries `lambda`
//! (closed form `lambda = gamma`) and `y` (quadratic transform), which turns
//! the phase problem into maximizing `-u^H A u + 2 Re(u^H B) + C` over
//! unit-modulus `u` with entries on the discrete phase grid. That surrogate is
//! maximized one element at a time, restricted to phases that keep every
//! user's SINR floor satisfied.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelSet;
use crate::system::{
    margin_db, sinr_from_gains, total_power, unit_phasor, BeamMatrix, IterRecord, PhaseConfig, RunTrace, Scenario,
};
use crate::{CMatrix, CVector, C64};

/// Auxiliary state of the fractional-programming iteration.
#[derive(Debug, Clone)]
pub struct FpState {
    pub lambda: Vec<f64>,
    pub y: Vec<C64>,
    /// `v[k][i]` stacks `diag(H_lk^H) G_l w_i` over all IRSs, so that
    /// `H_k^H w_i = u^H v[k][i]`.
    pub v: Vec<Vec<CVector>>,
}

impl FpState {
    pub fn new(channels: &ChannelSet, w: &BeamMatrix) -> Self {
        let k = channels.k_users();
        FpState {
            lambda: vec![0.0; k],
            y: vec![C64::new(0.0, 0.0); k],
            v: build_v_cache(channels, w),
        }
    }
}

/// Builds `v[k][i]` for the current beamformer.
pub fn build_v_cache(channels: &ChannelSet, w: &BeamMatrix) -> Vec<Vec<CVector>> {
    let (l_irs, n) = (channels.l_irs(), channels.n_elements());
    let k_users = channels.k_users();
    let gw: Vec<Vec<CVector>> = channels
        .g
        .iter()
        .map(|g| (0..w.k_users()).map(|i| g * w.w.column(i)).collect())
        .collect();
    (0..k_users)
        .map(|k| {
            (0..w.k_users())
                .map(|i| {
                    CVector::from_iterator(
                        l_irs * n,
                        (0..l_irs).flat_map(|l| {
                            let h = &channels.h[l][k];
                            let g = &gw[l][i];
                            (0..n).map(move |e| h[e].conj() * g[e])
                        }),
                    )
                })
                .collect()
        })
        .collect()
}

/// `s[k][i] = u^H v[k][i]`.
pub fn effective_gains(u: &CVector, v: &[Vec<CVector>]) -> Vec<Vec<C64>> {
    v.iter()
        .map(|row| row.iter().map(|vki| u.dotc(vki)).collect())
        .collect()
}

/// Closed-form maximizer of the Lagrangian-dual objective: `lambda = gamma`.
pub fn update_lambda(gammas: &[f64]) -> Vec<f64> {
    gammas.to_vec()
}

/// Closed-form quadratic-transform auxiliaries for fixed `u`.
pub fn update_y(u: &CVector, v: &[Vec<CVector>], lambda: &[f64], sigma2: f64) -> Vec<C64> {
    effective_gains(u, v)
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let denom: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2;
            s[k] * ((1.0 + lambda[k]).sqrt() / denom)
        })
        .collect()
}

/// Lagrangian-dual objective `f1`, natural log.
pub fn dual_objective(gammas: &[f64], lambda: &[f64]) -> f64 {
    gammas
        .iter()
        .zip(lambda)
        .map(|(&g, &l)| (1.0 + l).ln() - l + (1.0 + l) * g / (1.0 + g))
        .sum()
}

/// Multiple-ratio objective `f3(u)` for fixed `lambda`.
pub fn ratio_objective(u: &CVector, v: &[Vec<CVector>], lambda: &[f64], sigma2: f64) -> f64 {
    effective_gains(u, v)
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let denom: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2;
            (1.0 + lambda[k]) * s[k].norm_sqr() / denom
        })
        .sum()
}

/// Quadratic-transform objective `f4(u, y)`.
pub fn transformed_objective(u: &CVector, y: &[C64], v: &[Vec<CVector>], lambda: &[f64], sigma2: f64) -> f64 {
    effective_gains(u, v)
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let denom: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2;
            2.0 * (1.0 + lambda[k]).sqrt() * (y[k].conj() * s[k]).re - y[k].norm_sqr() * denom
        })
        .sum()
}

/// Matrices of the quadratic program in `u`.
#[derive(Debug, Clone)]
pub struct QuadraticForms {
    /// `sum_k |y_k|^2 sum_i v_ki v_ki^H`, Hermitian PSD.
    pub a: CMatrix,
    /// `sum_k sqrt(1 + lambda_k) conj(y_k) v_kk`.
    pub b: CVector,
    /// `-sum_k |y_k|^2 sigma^2`.
    pub c: f64,
    /// Per-user QoS matrices `v_kk v_kk^H - rho_k sum_{i != k} v_ki v_ki^H`.
    pub d: Vec<CMatrix>,
}

impl QuadraticForms {
    /// `f5(u) = -u^H A u + 2 Re(u^H B) + C`.
    pub fn objective(&self, u: &CVector) -> f64 {
        let au = &self.a * u;
        -u.dotc(&au).re + 2.0 * u.dotc(&self.b).re + self.c
    }

    /// `d_n = B_n - sum_{j != n} A_nj u_j`.
    pub fn coupling(&self, u: &CVector, n: usize) -> C64 {
        let row: C64 = (0..u.len()).filter(|&j| j != n).map(|j| self.a[(n, j)] * u[j]).sum();
        self.b[n] - row
    }
}

pub fn assemble_quadratics(state: &FpState, sigma2: f64, rho: &[f64]) -> QuadraticForms {
    let v = &state.v;
    let k_users = v.len();
    let dim = v.first().and_then(|r| r.first()).map_or(0, CVector::len);
    let mut a = CMatrix::zeros(dim, dim);
    let mut b = CVector::zeros(dim);
    let mut c = 0.0;
    let mut d = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let y2 = state.y[k].norm_sqr();
        let mut dk = CMatrix::zeros(dim, dim);
        for (i, vki) in v[k].iter().enumerate() {
            let outer = vki * vki.adjoint();
            if y2 != 0.0 {
                a += &outer * C64::new(y2, 0.0);
            }
            if i == k {
                dk += &outer;
            } else if rho[k] != 0.0 {
                dk -= &outer * C64::new(rho[k], 0.0);
            }
        }
        b += &v[k][k] * (state.y[k].conj() * (1.0 + state.lambda[k]).sqrt());
        c -= y2 * sigma2;
        d.push(dk);
    }
    QuadraticForms { a, b, c, d }
}

/// Incrementally maintained `D_k u` and `u^H D_k u`.
#[derive(Debug, Clone)]
struct QosTracker {
    du: Vec<CVector>,
    qd: Vec<f64>,
}

impl QosTracker {
    fn new(d: &[CMatrix], u: &CVector) -> Self {
        let du: Vec<CVector> = d.iter().map(|dk| dk * u).collect();
        let qd = du.iter().map(|x| u.dotc(x).re).collect();
        QosTracker { du, qd }
    }

    /// `u'^H D_k u'` after replacing `u_n` by `u_n + delta`.
    fn value_after(&self, k: usize, d: &[CMatrix], n: usize, delta: C64) -> f64 {
        self.qd[k] + 2.0 * (delta.conj() * self.du[k][n]).re + delta.norm_sqr() * d[k][(n, n)].re
    }

    fn satisfied(value: f64, rho: f64, sigma2: f64) -> bool {
        if rho == 0.0 {
            return true;
        }
        let floor = rho * sigma2;
        value >= floor - 1e-12 * (floor + value.abs())
    }

    fn all_satisfied(&self, rho: &[f64], sigma2: f64) -> bool {
        self.qd.iter().zip(rho).all(|(&q, &r)| Self::satisfied(q, r, sigma2))
    }

    fn candidate_ok(&self, d: &[CMatrix], n: usize, delta: C64, rho: &[f64], sigma2: f64) -> bool {
        (0..self.qd.len()).all(|k| Self::satisfied(self.value_after(k, d, n, delta), rho[k], sigma2))
    }

    fn apply(&mut self, d: &[CMatrix], u: &CVector, n: usize, delta: C64) {
        for (k, dk) in d.iter().enumerate() {
            let col = dk.column(n);
            for j in 0..u.len() {
                self.du[k][j] += col[j] * delta;
            }
            self.qd[k] = u.dotc(&self.du[k]).re;
        }
    }
}

/// Phase indices for element `element_index` that keep `u^H D_k u >=
/// rho_k sigma^2` for every user when all other elements stay fixed.
pub fn qos_feasible_set(
    u: &CVector,
    element_index: usize,
    quadratics: &QuadraticForms,
    rho: &[f64],
    sigma2: f64,
    levels: u32,
) -> Vec<u32> {
    let tracker = QosTracker::new(&quadratics.d, u);
    (0..levels)
        .filter(|&q| {
            let delta = unit_phasor(q, levels) - u[element_index];
            tracker.candidate_ok(&quadratics.d, element_index, delta, rho, sigma2)
        })
        .collect()
}

fn best_candidate(d_n: C64, feasible: &[u32], levels: u32) -> Option<u32> {
    let tol = 1e-14 * d_n.norm();
    let mut best: Option<(u32, f64)> = None;
    for &q in feasible {
        let score = (unit_phasor(q, levels).conj() * d_n).re;
        match best {
            Some((_, s)) if score <= s + tol => {}
            _ => best = Some((q, score)),
        }
    }
    best.map(|(q, _)| q)
}

/// The feasible phase maximizing `Re(conj(u_n) d_n)`, i.e. the one closest to
/// the angle of `d_n` on the circle. Ties go to the smallest index. `None`
/// when `feasible` is empty.
pub fn update_element(
    element_index: usize,
    quadratics: &QuadraticForms,
    u: &CVector,
    feasible: &[u32],
    levels: u32,
) -> Option<u32> {
    best_candidate(quadratics.coupling(u, element_index), feasible, levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Ascending,
    /// Fresh random permutation every sweep, seeded.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectOptions {
    /// Stop when the relative sum-rate gain of an iteration falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub order: SweepOrder,
    /// Number of starts; starts beyond the first are uniform-random phases.
    pub multi_start: usize,
    pub start_seed: u64,
    /// Cap on coordinate sweeps per (lambda, y) update.
    pub max_inner_sweeps: usize,
    /// Once the (lambda, y) iteration settles, sweep single-element changes
    /// against the sum rate itself and resume the iteration if any helped.
    pub refine: bool,
}

impl Default for ReflectOptions {
    fn default() -> Self {
        ReflectOptions {
            tol: 1e-4,
            max_iter: 50,
            order: SweepOrder::Ascending,
            multi_start: 1,
            start_seed: 0,
            max_inner_sweeps: 200,
            refine: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReflectOutcome {
    pub phases: PhaseConfig,
    pub trace: RunTrace,
    /// `sum_k log2(1 + gamma_k)` at the returned phases.
    pub objective: f64,
    pub initial_objective: f64,
    /// The returned phases satisfy every SINR floor.
    pub feasible: bool,
    /// Auxiliaries used by the final coordinate sweeps.
    pub lambda: Vec<f64>,
    pub y: Vec<C64>,
    pub iterations: usize,
}

fn log2_rate(gammas: &[f64]) -> f64 {
    gammas.iter().map(|g| (1.0 + g).log2()).sum()
}

fn floors_met(gammas: &[f64], rho: &[f64]) -> bool {
    gammas.iter().zip(rho).all(|(g, r)| *g >= r * (1.0 - 1e-10))
}

/// Maximizes the sum rate over discrete phases for fixed `w`.
pub fn optimize_reflect(
    channels: &ChannelSet,
    w: &BeamMatrix,
    phases_init: &PhaseConfig,
    scenario: &Scenario,
    opts: &ReflectOptions,
) -> ReflectOutcome {
    let v = build_v_cache(channels, w);
    let power = total_power(w, scenario);
    let bits = phases_init.bits();
    let l_irs = phases_init.l_irs();
    let mut best = run_from(&v, phases_init.stacked_indices(), power, scenario, opts, 0);
    let levels = phases_init.levels();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.start_seed);
    for start in 1..opts.multi_start.max(1) {
        let idx: Vec<u32> = (0..phases_init.l_irs() * phases_init.n_elements())
            .map(|_| rng.random_range(0..levels))
            .collect();
        let cand = run_from(&v, idx, power, scenario, opts, start as u64);
        let better = match (cand.feasible, best.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => cand.objective > best.objective,
        };
        if better {
            best = cand;
        }
    }
    let phases = PhaseConfig::from_stacked(bits, l_irs, &best.indices).expect("indices stay on the grid");
    ReflectOutcome {
        phases,
        trace: best.trace,
        objective: best.objective,
        initial_objective: best.initial_objective,
        feasible: best.feasible,
        lambda: best.lambda,
        y: best.y,
        iterations: best.iterations,
    }
}

struct SingleRun {
    indices: Vec<u32>,
    trace: RunTrace,
    objective: f64,
    initial_objective: f64,
    feasible: bool,
    lambda: Vec<f64>,
    y: Vec<C64>,
    iterations: usize,
}

fn run_from(
    v: &[Vec<CVector>],
    mut idx: Vec<u32>,
    power: f64,
    scenario: &Scenario,
    opts: &ReflectOptions,
    stream: u64,
) -> SingleRun {
    let sigma2 = scenario.sigma2;
    let rho = &scenario.rho;
    let levels = 1u32 << scenario.phase_bits;
    let dim = idx.len();
    let mut u = CVector::from_iterator(dim, idx.iter().map(|&q| unit_phasor(q, levels)));
    let mut gammas = sinr_from_gains(&effective_gains(&u, v), sigma2);
    let initial_objective = log2_rate(&gammas);
    let mut feasible = floors_met(&gammas, rho);

    let mut trace = RunTrace::new();
    trace.infeasible_start = !feasible;
    let record = |iteration: usize, gammas: &[f64], changes: usize| {
        let rate = log2_rate(gammas);
        IterRecord {
            iteration,
            ee: rate / power,
            sum_rate: rate,
            total_power: power,
            min_sinr_margin: gammas.iter().zip(rho).map(|(g, r)| g - r).fold(f64::INFINITY, f64::min),
            min_sinr_margin_db: margin_db(gammas, rho),
            phase_changes: changes,
        }
    };
    trace.push(record(0, &gammas, 0));

    let degenerate = v.iter().flatten().all(|x| x.iter().all(|z| *z == C64::new(0.0, 0.0)));
    let mut lambda = vec![0.0; gammas.len()];
    let mut y = vec![C64::new(0.0, 0.0); gammas.len()];
    if degenerate || dim == 0 {
        return SingleRun {
            indices: idx,
            trace,
            objective: initial_objective,
            initial_objective,
            feasible,
            lambda,
            y,
            iterations: 0,
        };
    }

    let mut order_rng = match opts.order {
        SweepOrder::Random(seed) => Some(ChaCha8Rng::seed_from_u64(
            seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        )),
        SweepOrder::Ascending => None,
    };
    let mut order: Vec<usize> = (0..dim).collect();
    // an infeasible start gets one sweep that ignores the floors
    let mut enforce = feasible;
    let mut f = gammas.iter().map(|g| (1.0 + g).ln()).sum::<f64>();
    let mut iterations = 0;
    let mut step = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        lambda = update_lambda(&gammas);
        y = update_y(&u, v, &lambda, sigma2);
        let state = FpState {
            lambda: lambda.clone(),
            y: y.clone(),
            v: v.to_vec(),
        };
        let q = assemble_quadratics(&state, sigma2, rho);
        let mut au = &q.a * &u;
        let mut tracker = QosTracker::new(&q.d, &u);
        let mut state_ok = !enforce || tracker.all_satisfied(rho, sigma2);
        let mut changes = 0;

        for _ in 0..opts.max_inner_sweeps {
            let mut changed = false;
            if let Some(rng) = order_rng.as_mut() {
                order.shuffle(rng);
            }
            for &n in &order {
                let d_n = q.b[n] - au[n] + q.a[(n, n)] * u[n];
                let candidates: Vec<u32> = if enforce {
                    (0..levels)
                        .filter(|&c| {
                            let delta = unit_phasor(c, levels) - u[n];
                            tracker.candidate_ok(&q.d, n, delta, rho, sigma2)
                        })
                        .collect()
                } else {
                    (0..levels).collect()
                };
                let Some(pick) = best_candidate(d_n, &candidates, levels) else {
                    continue;
                };
                let cur = idx[n];
                if pick == cur {
                    continue;
                }
                let gain = (unit_phasor(pick, levels).conj() * d_n).re - (unit_phasor(cur, levels).conj() * d_n).re;
                let restoring = enforce && !state_ok;
                if !restoring && gain <= 1e-13 * d_n.norm() {
                    continue;
                }
                let delta = unit_phasor(pick, levels) - u[n];
                let col = q.a.column(n);
                for j in 0..dim {
                    au[j] += col[j] * delta;
                }
                u[n] = unit_phasor(pick, levels);
                idx[n] = pick;
                if enforce {
                    tracker.apply(&q.d, &u, n, delta);
                    if restoring {
                        state_ok = tracker.all_satisfied(rho, sigma2);
                    }
                }
                changed = true;
                changes += 1;
            }
            if !changed {
                break;
            }
        }

        gammas = sinr_from_gains(&effective_gains(&u, v), sigma2);
        feasible = floors_met(&gammas, rho);
        step += 1;
        trace.push(record(step, &gammas, changes));
        let f_new = gammas.iter().map(|g| (1.0 + g).ln()).sum::<f64>();
        let rel = (f_new - f) / f.abs().max(f64::MIN_POSITIVE);
        f = f_new;
        if !enforce {
            enforce = true;
            continue;
        }
        if rel < opts.tol {
            if !opts.refine {
                break;
            }
            let moved = refine_sweeps(v, &mut u, &mut idx, scenario, feasible);
            if moved == 0 {
                break;
            }
            gammas = sinr_from_gains(&effective_gains(&u, v), sigma2);
            feasible = floors_met(&gammas, rho);
            f = gammas.iter().map(|g| (1.0 + g).ln()).sum::<f64>();
            step += 1;
            trace.push(record(step, &gammas, moved));
        }
    }
    trace.infeasible_end = !feasible;
    SingleRun {
        indices: idx,
        trace,
        objective: log2_rate(&gammas),
        initial_objective,
        feasible,
        lambda,
        y,
        iterations,
    }
}

/// Coordinate ascent on `sum_k ln(1 + gamma_k)` over single-element phase
/// changes, run until no change improves it. With `enforce`, candidates must
/// keep every floor. Returns the number of accepted changes.
fn refine_sweeps(v: &[Vec<CVector>], u: &mut CVector, idx: &mut [u32], scenario: &Scenario, enforce: bool) -> usize {
    let levels = 1u32 << scenario.phase_bits;
    let (sigma2, rho) = (scenario.sigma2, &scenario.rho);
    let k_users = v.len();
    let mut s = effective_gains(u, v);
    let value = |s: &[Vec<C64>]| -> Option<f64> {
        let g = sinr_from_gains(s, sigma2);
        (!enforce || floors_met(&g, rho)).then(|| g.iter().map(|x| x.ln_1p()).sum())
    };
    let mut current = value(&s).unwrap_or(f64::NEG_INFINITY);
    let mut moves = 0;
    let mut cand = s.clone();
    loop {
        let mut changed = false;
        for n in 0..idx.len() {
            let mut best: Option<(u32, f64)> = None;
            for q in 0..levels {
                if q == idx[n] {
                    continue;
                }
                let delta = (unit_phasor(q, levels) - u[n]).conj();
                for k in 0..k_users {
                    for i in 0..k_users {
                        cand[k][i] = s[k][i] + delta * v[k][i][n];
                    }
                }
                let Some(f) = value(&cand) else { continue };
                if f > current + 1e-12 * current.abs().max(1e-300) && best.is_none_or(|(_, b)| f > b) {
                    best = Some((q, f));
                }
            }
            if let Some((q, f)) = best {
                let delta = (unit_phasor(q, levels) - u[n]).conj();
                for k in 0..k_users {
                    for i in 0..k_users {
                        s[k][i] += delta * v[k][i][n];
                    }
                }
                u[n] = unit_phasor(q, levels);
                idx[n] = q;
                current = f;
                moves += 1;
                changed = true;
            }
        }
        if !changed {
            return moves;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scalar_state(v: f64, lambda: f64, y: f64) -> FpState {
        FpState {
            lambda: vec![lambda],
            y: vec![C64::new(y, 0.0)],
            v: vec![vec![CVector::from_element(1, C64::new(v, 0.0))]],
        }
    }

    #[test]
    fn lambda_is_gamma() {
        assert_eq!(update_lambda(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(update_lambda(&[2.5, 0.1]), vec![2.5, 0.1]);
    }

    #[test]
    fn lambda_update_maximizes_dual_objective() {
        let gammas = [2.5, 0.1, 7.0];
        let lam = update_lambda(&gammas);
        let f = dual_objective(&gammas, &lam);
        for k in 0..3 {
            for s in [0.99, 1.01] {
                let mut p = lam.clone();
                p[k] *= s;
                assert!(dual_objective(&gammas, &p) < f);
            }
        }
        let direct: f64 = gammas.iter().map(|g| (1.0f64 + g).ln()).sum();
        assert!((f - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn scalar_y_update() {
        let st = scalar_state(2.0, 3.0, 0.0);
        let u = CVector::from_element(1, C64::new(1.0, 0.0));
        let y = update_y(&u, &st.v, &st.lambda, 1.0);
        assert!((y[0] - C64::new(0.8, 0.0)).norm() < 1e-15);
        let f3 = ratio_objective(&u, &st.v, &st.lambda, 1.0);
        let f4 = transformed_objective(&u, &y, &st.v, &st.lambda, 1.0);
        assert!((f3 - 3.2).abs() < 1e-12 && (f4 - 3.2).abs() < 1e-12);
    }

    #[test]
    fn y_vanishes_without_direct_term() {
        let v = vec![vec![CVector::zeros(2), CVector::from_element(2, C64::new(1.0, 1.0))]; 2];
        let u = CVector::from_element(2, C64::new(1.0, 0.0));
        let y = update_y(&u, &v, &[1.0, 1.0], 1.0);
        assert_eq!(y[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn scalar_quadratics() {
        let st = scalar_state(2.0, 0.0, 1.0);
        let q = assemble_quadratics(&st, 0.5, &[1.0]);
        assert_eq!(q.a[(0, 0)], C64::new(4.0, 0.0));
        assert_eq!(q.b[0], C64::new(2.0, 0.0));
        assert_eq!(q.c, -0.5);
    }

    #[test]
    fn element_update_nearest_phase() {
        // B = 2, angle of d_n is 0.3 pi
        let q = QuadraticForms {
            a: CMatrix::zeros(1, 1),
            b: CVector::from_element(1, C64::from_polar(1.0, 0.3 * PI)),
            c: 0.0,
            d: vec![],
        };
        let u = CVector::from_element(1, C64::new(1.0, 0.0));
        assert_eq!(update_element(0, &q, &u, &[0, 1, 2, 3], 4), Some(1));
        // wraparound: angle just below 2 pi picks 0, not 3 pi / 2
        let q2 = QuadraticForms {
            b: CVector::from_element(1, C64::from_polar(1.0, 1.95 * PI)),
            ..q.clone()
        };
        assert_eq!(update_element(0, &q2, &u, &[0, 1, 2, 3], 4), Some(0));
        assert_eq!(update_element(0, &q2, &u, &[], 4), None);
        assert_eq!(update_element(0, &q2, &u, &[2, 3], 4), Some(3));
    }

    #[test]
    fn single_user_feasible_set_is_rank_one_check() {
        // K = 1: constraint is |u^H v|^2 >= rho sigma^2
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let st = FpState {
            lambda: vec![0.0],
            y: vec![C64::new(1.0, 0.0)],
            v: vec![vec![v.clone()]],
        };
        let q = assemble_quadratics(&st, 1.0, &[2.0]);
        let u0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let set = qos_feasible_set(&u0, 1, &q, &[2.0], 1.0, 4);
        for c in 0..4u32 {
            let mut u = u0.clone();
            u[1] = unit_phasor(c, 4);
            let ok = u.dotc(&v).norm_sqr() >= 2.0;
            assert_eq!(set.contains(&c), ok, "phase {c}");
        }
    }
}
