//! Log-barrier interior-point method for small dense convex programs
//!
//! ```text
//! minimize  cost . x   subject to  g_i(x) > 0
//! ```
//!
//! where every `g_i` is concave and built from the pieces in [`Constraint`].
//! Centering uses damped Newton steps with a backtracking line search; a
//! phase-I problem `min s  s.t.  g_i(x) + s > 0` finds a strictly feasible
//! start when the supplied one is not.

use nalgebra::{DMatrix, DVector};

use crate::system::SolverStats;

/// `g(x) = c0 + lin.x - x'Qx - sqrt(x'Px + p0) + sum s_i sqrt(x_i) + sum l_i ln(x_i)`.
///
/// `Q` and `P` must be PSD and the square-root and log weights nonnegative for
/// `g` to be concave. The matrices may be smaller than `x`; they then act on
/// the leading coordinates.
#[derive(Debug, Clone, Default)]
pub struct Constraint {
    pub c0: f64,
    pub lin: Vec<(usize, f64)>,
    pub quad: Option<DMatrix<f64>>,
    pub norm: Option<(DMatrix<f64>, f64)>,
    pub sqrts: Vec<(usize, f64)>,
    pub logs: Vec<(usize, f64)>,
}

impl Constraint {
    pub fn affine(c0: f64, lin: Vec<(usize, f64)>) -> Self {
        Constraint {
            c0,
            lin,
            ..Default::default()
        }
    }

    /// Value, or `None` outside the domain of the root/log terms.
    pub fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let mut g = self.c0 + self.lin.iter().map(|&(i, a)| a * x[i]).sum::<f64>();
        if let Some(q) = &self.quad {
            let xs = x.rows(0, q.nrows());
            g -= xs.dot(&(q * xs));
        }
        if let Some((p, p0)) = &self.norm {
            let xs = x.rows(0, p.nrows());
            let r = xs.dot(&(p * xs)) + p0;
            if r < 0.0 {
                return None;
            }
            g -= r.sqrt();
        }
        for &(i, s) in &self.sqrts {
            if x[i] <= 0.0 {
                return None;
            }
            g += s * x[i].sqrt();
        }
        for &(i, l) in &self.logs {
            if x[i] <= 0.0 {
                return None;
            }
            g += l * x[i].ln();
        }
        g.is_finite().then_some(g)
    }

    /// Value, gradient and Hessian at a point inside the domain.
    fn derivatives(&self, x: &DVector<f64>) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let n = x.len();
        let g = self.value(x).unwrap_or(f64::NAN);
        let mut grad = DVector::zeros(n);
        let mut hess: Option<DMatrix<f64>> = None;
        for &(i, a) in &self.lin {
            grad[i] += a;
        }
        if let Some(q) = &self.quad {
            let k = q.nrows();
            let qx = q * x.rows(0, k);
            grad.rows_mut(0, k).axpy(-2.0, &qx, 1.0);
            let h = hess.get_or_insert_with(|| DMatrix::zeros(n, n));
            let mut block = h.view_mut((0, 0), (k, k));
            block -= q * 2.0;
        }
        if let Some((p, p0)) = &self.norm {
            let k = p.nrows();
            let px = p * x.rows(0, k);
            let r = (x.rows(0, k).dot(&px) + p0).sqrt();
            if r > 0.0 {
                let dn = &px / r;
                grad.rows_mut(0, k).axpy(-1.0, &dn, 1.0);
                // Hessian of the norm is (P - dn dn') / r
                let h = hess.get_or_insert_with(|| DMatrix::zeros(n, n));
                let mut block = h.view_mut((0, 0), (k, k));
                block -= p / r;
                block.ger(1.0 / r, &dn, &dn, 1.0);
            }
        }
        for &(i, s) in &self.sqrts {
            grad[i] += 0.5 * s / x[i].sqrt();
            let h = hess.get_or_insert_with(|| DMatrix::zeros(n, n));
            h[(i, i)] -= 0.25 * s / (x[i] * x[i].sqrt());
        }
        for &(i, l) in &self.logs {
            grad[i] += l / x[i];
            let h = hess.get_or_insert_with(|| DMatrix::zeros(n, n));
            h[(i, i)] -= l / (x[i] * x[i]);
        }
        (g, grad, hess)
    }

    fn with_slack(&self, s: usize) -> Self {
        let mut c = self.clone();
        c.lin.push((s, 1.0));
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierOptions {
    /// Stop once `m / tau <= gap_tol * max(gap_floor, |cost . x|)`.
    pub gap_tol: f64,
    pub gap_floor: f64,
    /// Barrier parameter growth factor.
    pub mu: f64,
    /// Centering stops when half the squared Newton decrement drops below this.
    pub newton_tol: f64,
    /// Total Newton-step budget across all centering rounds.
    pub max_newton: usize,
    /// A centering round that needs more steps than this has hit the
    /// round-off floor; the solve ends there.
    pub max_center_steps: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            gap_tol: 1e-9,
            gap_floor: 1e-12,
            mu: 10.0,
            newton_tol: 1e-10,
            max_newton: 2000,
            max_center_steps: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierError {
    /// Phase I converged without finding a strictly feasible point; `depth` is
    /// the smallest achievable `max_i -g_i`.
    Infeasible { depth: f64 },
    /// The start point lies outside the domain of a root or log term.
    Domain,
}

fn constraint_values(cons: &[Constraint], x: &DVector<f64>) -> Option<Vec<f64>> {
    cons.iter().map(|c| c.value(x).filter(|g| *g > 0.0)).collect()
}

/// `phi(x + step) - phi(x)` from the ratios `g_i(x + step) / g_i(x)`, which
/// stays accurate when `tau cost . x` is large.
fn barrier_change(cost: &DVector<f64>, step: &DVector<f64>, tau: f64, g_old: &[f64], g_new: &[f64]) -> f64 {
    tau * cost.dot(step) - g_new.iter().zip(g_old).map(|(n, o)| (n / o).ln()).sum::<f64>()
}

fn barrier_newton_system(
    cost: &DVector<f64>,
    cons: &[Constraint],
    x: &DVector<f64>,
    tau: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut grad = cost * tau;
    let mut hess = DMatrix::zeros(n, n);
    for c in cons {
        let (g, dg, d2g) = c.derivatives(x);
        grad.axpy(-1.0 / g, &dg, 1.0);
        hess.ger(1.0 / (g * g), &dg, &dg, 1.0);
        if let Some(h) = d2g {
            hess -= h / g;
        }
    }
    (grad, hess)
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        if reg > 0.0 {
            for i in 0..h.nrows() {
                h[(i, i)] += reg;
            }
        }
        if let Some(ch) = h.cholesky() {
            let dx = ch.solve(&(-grad));
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

struct Centering {
    x: DVector<f64>,
    grad_norm: f64,
    steps: usize,
    /// The line search could not make progress.
    stalled: bool,
}

fn center(
    cost: &DVector<f64>,
    cons: &[Constraint],
    mut x: DVector<f64>,
    tau: f64,
    opts: &BarrierOptions,
    budget: usize,
    stop: &dyn Fn(&DVector<f64>) -> bool,
) -> Centering {
    let mut steps = 0;
    let mut grad_norm = f64::INFINITY;
    let Some(mut g_cur) = constraint_values(cons, &x) else {
        return Centering {
            x,
            grad_norm,
            steps,
            stalled: true,
        };
    };
    while steps < budget {
        if steps == opts.max_center_steps {
            return Centering {
                x,
                grad_norm,
                steps,
                stalled: true,
            };
        }
        let (grad, hess) = barrier_newton_system(cost, cons, &x, tau);
        grad_norm = grad.norm();
        let Some(dx) = newton_direction(&grad, &hess) else {
            return Centering {
                x,
                grad_norm,
                steps,
                stalled: true,
            };
        };
        let slope = grad.dot(&dx);
        if -slope / 2.0 <= opts.newton_tol {
            break;
        }
        steps += 1;
        let mut s = 1.0;
        loop {
            let step = &dx * s;
            let xn = &x + &step;
            if let Some(g_new) = constraint_values(cons, &xn) {
                let change = barrier_change(cost, &step, tau, &g_cur, &g_new);
                if change.is_finite() && change <= 0.25 * s * slope {
                    x = xn;
                    g_cur = g_new;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-18 {
                return Centering {
                    x,
                    grad_norm,
                    steps,
                    stalled: true,
                };
            }
        }
        if stop(&x) {
            break;
        }
    }
    Centering {
        x,
        grad_norm,
        steps,
        stalled: false,
    }
}

fn strictly_feasible(cons: &[Constraint], x: &DVector<f64>) -> bool {
    cons.iter().all(|c| c.value(x).is_some_and(|g| g > 0.0))
}

/// Phase I: finds `x` with `g_i(x) > 0` for every `i`, starting from `x0`.
pub fn find_interior(
    cons: &[Constraint],
    x0: &DVector<f64>,
    opts: &BarrierOptions,
) -> Result<(DVector<f64>, usize), BarrierError> {
    if strictly_feasible(cons, x0) {
        return Ok((x0.clone(), 0));
    }
    let n = x0.len();
    let mut worst = 0.0f64;
    for c in cons {
        worst = worst.max(-c.value(x0).ok_or(BarrierError::Domain)?);
    }
    let s0 = 2.0 * worst.max(1e-9);
    let aug: Vec<Constraint> = cons.iter().map(|c| c.with_slack(n)).collect();
    let mut z = x0.clone().resize_vertically(n + 1, s0);
    let mut cost = DVector::zeros(n + 1);
    cost[n] = 1.0;
    let target = -1e-3 * s0;
    let stop = |z: &DVector<f64>| z[n] < target;
    let m = aug.len() as f64;
    let mut tau = 1.0 / s0;
    let mut used = 0;
    loop {
        let run = center(&cost, &aug, z, tau, opts, opts.max_newton - used, &stop);
        used += run.steps;
        z = run.x;
        let s = z[n];
        if s < 0.0 && (stop(&z) || m / tau < 1e-3 * s.abs()) {
            return Ok((z.rows(0, n).into_owned(), used));
        }
        if run.stalled || used >= opts.max_newton || m / tau < 1e-14 * (1.0 + s.abs()) {
            if s < 0.0 {
                return Ok((z.rows(0, n).into_owned(), used));
            }
            return Err(BarrierError::Infeasible { depth: s });
        }
        tau *= opts.mu;
    }
}

/// Minimizes `cost . x` over the strict interior of the constraints.
pub fn minimize(
    cost: &DVector<f64>,
    cons: &[Constraint],
    x0: &DVector<f64>,
    opts: &BarrierOptions,
) -> Result<(DVector<f64>, SolverStats), BarrierError> {
    let (mut x, phase_one) = find_interior(cons, x0, opts)?;
    let m = cons.len().max(1) as f64;
    let mut tau = 1.0;
    let mut stats = SolverStats {
        phase_one_iterations: phase_one,
        ..Default::default()
    };
    let never = |_: &DVector<f64>| false;
    loop {
        let budget = opts.max_newton.saturating_sub(stats.newton_iterations);
        let run = center(cost, cons, x, tau, opts, budget, &never);
        stats.newton_iterations += run.steps;
        x = run.x;
        stats.gap = m / tau;
        stats.kkt_residual = run.grad_norm / tau;
        let done = stats.gap <= opts.gap_tol * cost.dot(&x).abs().max(opts.gap_floor);
        if done || run.stalled || stats.newton_iterations >= opts.max_newton {
            return Ok((x, stats));
        }
        tau *= opts.mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_lp() {
        // min -x0 - x1 on the box [0,1]^2
        let cons = vec![
            Constraint::affine(0.0, vec![(0, 1.0)]),
            Constraint::affine(1.0, vec![(0, -1.0)]),
            Constraint::affine(0.0, vec![(1, 1.0)]),
            Constraint::affine(1.0, vec![(1, -1.0)]),
        ];
        let cost = DVector::from_vec(vec![-1.0, -1.0]);
        let opts = BarrierOptions::default();
        let (x, st) = minimize(&cost, &cons, &DVector::from_vec(vec![0.5, 0.5]), &opts).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9, "{x}");
        assert!(st.gap <= opts.gap_tol * 2.0, "{}", st.gap);
    }

    #[test]
    fn disk_via_quadratic_and_phase_one() {
        // max x0 s.t. x0^2 + x1^2 < 4, started outside
        let cons = vec![Constraint {
            c0: 4.0,
            quad: Some(DMatrix::identity(2, 2)),
            ..Default::default()
        }];
        let cost = DVector::from_vec(vec![-1.0, 0.0]);
        let (x, st) = minimize(
            &cost,
            &cons,
            &DVector::from_vec(vec![5.0, 5.0]),
            &BarrierOptions::default(),
        )
        .unwrap();
        assert!(st.phase_one_iterations > 0);
        assert!((x[0] - 2.0).abs() < 1e-8, "{x}");
    }

    #[test]
    fn cone_and_log_terms() {
        // max x1 s.t. ln(x0) >= x1, x0 <= 1 + sqrt(0) -> x0 = 1, x1 = 0
        // written as a cone: 1 - sqrt(x0^2) >= 0
        let cons = vec![
            Constraint {
                lin: vec![(1, -1.0)],
                logs: vec![(0, 1.0)],
                ..Default::default()
            },
            Constraint {
                c0: 1.0,
                norm: Some((DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])), 0.0)),
                ..Default::default()
            },
        ];
        let cost = DVector::from_vec(vec![0.0, -1.0]);
        let (x, _) = minimize(
            &cost,
            &cons,
            &DVector::from_vec(vec![0.5, -3.0]),
            &BarrierOptions::default(),
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && x[1].abs() < 1e-8, "{x}");
    }

    #[test]
    fn sqrt_term() {
        // max x s.t. sqrt(x) >= x  ->  x = 1
        let cons = vec![Constraint {
            lin: vec![(0, -1.0)],
            sqrts: vec![(0, 1.0)],
            ..Default::default()
        }];
        let (x, _) = minimize(
            &DVector::from_vec(vec![-1.0]),
            &cons,
            &DVector::from_vec(vec![0.25]),
            &BarrierOptions::default(),
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_is_reported() {
        let cons = vec![
            Constraint::affine(-1.0, vec![(0, 1.0)]),
            Constraint::affine(-1.0, vec![(0, -1.0)]),
        ];
        let r = minimize(
            &DVector::from_vec(vec![1.0]),
            &cons,
            &DVector::from_vec(vec![0.0]),
            &BarrierOptions::default(),
        );
        assert!(matches!(r, Err(BarrierError::Infeasible { .. })));
    }
}
