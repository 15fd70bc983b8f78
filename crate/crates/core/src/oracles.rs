//! Slow, independent verifiers for the test suite.
//!
//! Nothing here calls into the production metric or optimizer code: signal
//! terms are expanded with explicit loops over antennas, elements and IRSs.

use std::f64::consts::PI;
use std::time::Instant;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::par;
use crate::system::{BeamMatrix, PhaseConfig, Scenario};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationBudget {
    pub max_configs: u128,
    /// Wall-clock limit in seconds.
    pub timeout: f64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_configs: 1_000_000,
            timeout: 60.0,
        }
    }
}

/// Metrics recomputed from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMetrics {
    pub gammas: Vec<f64>,
    /// bits / s.
    pub sum_rate: f64,
    /// W.
    pub power: f64,
    /// bits / J.
    pub ee: f64,
}

/// `G_l w_i` for every IRS and stream, by explicit summation.
fn reflected_beams(channels: &ChannelSet, w: &BeamMatrix) -> Vec<Vec<Vec<C64>>> {
    let (m, k) = (w.w.nrows(), w.w.ncols());
    channels
        .g
        .iter()
        .map(|g| {
            (0..k)
                .map(|i| {
                    (0..g.nrows())
                        .map(|n| {
                            let mut acc = C64::new(0.0, 0.0);
                            for a in 0..m {
                                acc += g[(n, a)] * w.w[(a, i)];
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `y[k][i] = sum_l sum_n conj(h_lkn) exp(-j theta_ln) (G_l w_i)_n`.
fn received(channels: &ChannelSet, beams: &[Vec<Vec<C64>>], angles: &[Vec<f64>], k_users: usize) -> Vec<Vec<C64>> {
    let streams = beams.first().map_or(0, Vec::len);
    (0..k_users)
        .map(|k| {
            (0..streams)
                .map(|i| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (l, beam) in beams.iter().enumerate() {
                        let h = &channels.h[l][k];
                        for n in 0..h.len() {
                            let th = angles[l][n];
                            acc += h[n].conj() * C64::new(th.cos(), -th.sin()) * beam[i][n];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn sinrs(y: &[Vec<C64>], sigma2: f64) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(k, row)| {
            let signal = row[k].norm_sqr();
            let mut interference = 0.0;
            for (i, z) in row.iter().enumerate() {
                if i != k {
                    interference += z.norm_sqr();
                }
            }
            signal / (interference + sigma2)
        })
        .collect()
}

fn angles_of(phases: &PhaseConfig) -> Vec<Vec<f64>> {
    let levels = f64::from(phases.levels());
    phases
        .indices()
        .iter()
        .map(|row| row.iter().map(|&q| 2.0 * PI * f64::from(q) / levels).collect())
        .collect()
}

fn element_power(scenario: &Scenario) -> f64 {
    let table = &scenario.p_n_of_b;
    let b = scenario.phase_bits;
    if let Some(p) = table.get(&b) {
        return *p;
    }
    // straight line through the two entries closest in resolution
    let mut pts: Vec<(f64, f64)> = table.iter().map(|(k, v)| (f64::from(*k), *v)).collect();
    if pts.len() == 1 {
        return pts[0].1;
    }
    let x = f64::from(b);
    pts.sort_by(|p, q| (p.0 - x).abs().total_cmp(&(q.0 - x).abs()).then(p.0.total_cmp(&q.0)));
    let ((x0, y0), (x1, y1)) = (pts[0], pts[1]);
    (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).max(0.0)
}

/// Rebuilds SINR, sum rate, power and EE term by term.
pub fn direct_objective(
    channels: &ChannelSet,
    phases: &PhaseConfig,
    w: &BeamMatrix,
    scenario: &Scenario,
) -> DirectMetrics {
    let beams = reflected_beams(channels, w);
    let y = received(channels, &beams, &angles_of(phases), channels.h[0].len());
    let gammas = sinrs(&y, scenario.sigma2);
    let mut rate = 0.0;
    for g in &gammas {
        rate += (1.0 + g).ln() / 2f64.ln();
    }
    let sum_rate = scenario.bandwidth * rate;
    let mut tx = 0.0;
    for z in w.w.iter() {
        tx += z.re * z.re + z.im * z.im;
    }
    let power = scenario.epsilon * tx
        + scenario.n_rf as f64 * scenario.p_rf
        + (scenario.l_irs * scenario.n_elements) as f64 * element_power(scenario)
        + scenario.p_cir;
    DirectMetrics {
        ee: sum_rate / power,
        gammas,
        sum_rate,
        power,
    }
}

/// Exhaustive search over every phase configuration for the largest
/// `sum_k log2(1 + gamma_k)` subject to `gamma_k >= rho_k`. `Ok(None)` when no
/// configuration meets the floors.
pub fn exhaustive_reflect(
    channels: &ChannelSet,
    w: &BeamMatrix,
    scenario: &Scenario,
    budget: &EnumerationBudget,
) -> Result<Option<(PhaseConfig, f64)>> {
    let (l_irs, n) = (channels.g.len(), channels.h[0][0].len());
    let levels = 1u128 << scenario.phase_bits;
    let digits = (l_irs * n) as u32;
    let total = levels.checked_pow(digits).unwrap_or(u128::MAX);
    if total > budget.max_configs {
        return Err(Error::BudgetExceeded {
            configs: total,
            limit: budget.max_configs,
        });
    }
    let beams = reflected_beams(channels, w);
    let k_users = channels.h[0].len();
    let lv = levels as u64;
    let decode = |mut c: u64| -> Vec<Vec<u32>> {
        let mut idx = vec![vec![0u32; n]; l_irs];
        for row in idx.iter_mut() {
            for q in row.iter_mut() {
                *q = (c % lv) as u32;
                c /= lv;
            }
        }
        idx
    };
    let start = Instant::now();
    let chunk = 4096u64;
    let chunks = (total as u64).div_ceil(chunk);
    let best_per_chunk = par::map_range(chunks as usize, true, |ci| {
        if start.elapsed().as_secs_f64() > budget.timeout {
            return Err(());
        }
        let mut best: Option<(u64, f64)> = None;
        for c in (ci as u64 * chunk)..((ci as u64 + 1) * chunk).min(total as u64) {
            let idx = decode(c);
            let angles: Vec<Vec<f64>> = idx
                .iter()
                .map(|row| row.iter().map(|&q| 2.0 * PI * f64::from(q) / lv as f64).collect())
                .collect();
            let g = sinrs(&received(channels, &beams, &angles, k_users), scenario.sigma2);
            if g.iter().zip(&scenario.rho).any(|(g, r)| g < r) {
                continue;
            }
            let f: f64 = g.iter().map(|x| (1.0 + x).ln() / 2f64.ln()).sum();
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((c, f));
            }
        }
        Ok(best)
    });
    let mut best: Option<(u64, f64)> = None;
    for r in best_per_chunk {
        let Ok(cand) = r else {
            return Err(Error::Timeout(start.elapsed().as_secs_f64()));
        };
        if let Some((c, f)) = cand {
            if best.is_none_or(|(bc, b)| f > b || (f == b && c < bc)) {
                best = Some((c, f));
            }
        }
    }
    best.map(|(c, f)| Ok((PhaseConfig::new(scenario.phase_bits, decode(c))?, f)))
        .transpose()
}

/// Central-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, point: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut x = point.to_vec();
    Ok((0..point.len())
        .map(|i| {
            x[i] = point[i] + step;
            let up = f(&x);
            x[i] = point[i] - step;
            let down = f(&x);
            x[i] = point[i];
            (up - down) / (2.0 * step)
        })
        .collect())
}

/// Single-user EE optimum over transmit power by golden-section search:
/// maximize `log2(1 + p g / sigma2) / (eps p + p_c)` over
/// `p in [rho sigma2 / g, p_t]`, with `g = ||h||^2`. Returns `(p, ee)` per Hz,
/// or `None` when the floor cannot be met.
pub fn single_user_power_search(
    gain: f64,
    sigma2: f64,
    rho: f64,
    epsilon: f64,
    p_c: f64,
    p_t: f64,
) -> Option<(f64, f64)> {
    let ee = |p: f64| (1.0 + p * gain / sigma2).log2() / (epsilon * p + p_c);
    let lo0 = rho * sigma2 / gain;
    if lo0 > p_t {
        return None;
    }
    let (mut lo, mut hi) = (lo0.max(0.0), p_t);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if ee(a) >= ee(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mid = 0.5 * (lo + hi);
    [mid, lo0.max(0.0), p_t]
        .into_iter()
        .map(|p| (p, ee(p)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_square() {
        let g = numeric_gradient(|x| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        assert!(numeric_gradient(|x| x[0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn power_search_interior_and_bound() {
        let (p, _) = single_user_power_search(1.0, 1.0, 0.0, 1.0, 1.0, 100.0).unwrap();
        // stationarity of log2(1+p)/(p+1): ln(1+p) = 1
        assert!((p - (std::f64::consts::E - 1.0)).abs() < 1e-6);
        assert!(single_user_power_search(1.0, 1.0, 200.0, 1.0, 1.0, 100.0).is_none());
    }
}
