//! Alternating optimization of the beamformer and the IRS phases.

use crate::baselines::max_irs_phases;
use crate::channel::ChannelSet;
use crate::error::Result;
use crate::reflect::{optimize_reflect, ReflectOptions};
use crate::system::{combined_channels, evaluate, BeamMatrix, PhaseConfig, RunTrace, Scenario};
use crate::transmit::{optimize_transmit, sca_on_support, TransmitOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingOptions {
    /// Stop when an outer round improves EE by less than this, relatively.
    pub outer_tol: f64,
    pub outer_max: usize,
    pub transmit: TransmitOptions,
    pub reflect: ReflectOptions,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        AlternatingOptions {
            outer_tol: 1e-3,
            outer_max: 20,
            transmit: TransmitOptions::default(),
            reflect: ReflectOptions {
                multi_start: 4,
                ..ReflectOptions::default()
            },
        }
    }
}

/// How the phases are updated in each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStep {
    /// Sum-rate reflect optimizer.
    SumRate,
    /// Average received signal strength only.
    MaxIrs,
}

#[derive(Debug, Clone)]
pub struct AlternatingOutcome {
    pub w: BeamMatrix,
    pub phases: PhaseConfig,
    /// One record per outer round; round 0 is the initial transmit solve.
    pub trace: RunTrace,
    pub transmit_traces: Vec<RunTrace>,
    pub reflect_traces: Vec<RunTrace>,
}

fn feasible(channels: &ChannelSet, phases: &PhaseConfig, w: &BeamMatrix, scenario: &Scenario) -> bool {
    let m = evaluate(channels, phases, w, scenario);
    w.transmit_power() <= scenario.p_t * (1.0 + 1e-9)
        && w.active_antennas() <= scenario.n_rf
        && m.gammas.iter().zip(&scenario.rho).all(|(g, r)| *g >= r * (1.0 - 1e-9))
}

/// All-zero phases, transmit solve, then alternate phase and transmit
/// updates. Each round keeps the best of a cold transmit solve, a warm SCA
/// run on the incumbent's antennas, and the incumbent beamformer, so the
/// recorded EE never decreases.
pub fn alternating_optimize(
    channels: &ChannelSet,
    scenario: &Scenario,
    opts: &AlternatingOptions,
) -> Result<AlternatingOutcome> {
    alternating_with(channels, scenario, opts, PhaseStep::SumRate)
}

pub fn alternating_with(
    channels: &ChannelSet,
    scenario: &Scenario,
    opts: &AlternatingOptions,
    step: PhaseStep,
) -> Result<AlternatingOutcome> {
    let mut phases = PhaseConfig::zeros(scenario.l_irs, scenario.n_elements, scenario.phase_bits);
    let first = optimize_transmit(channels, &phases, scenario, &opts.transmit)?;
    let mut w = first.w;
    let mut metrics = evaluate(channels, &phases, &w, scenario);
    let mut trace = RunTrace::new();
    trace.push(metrics.record(0, 0));
    let mut transmit_traces = vec![first.trace];
    let mut reflect_traces = Vec::new();

    for round in 1..=opts.outer_max {
        let new_phases = match step {
            PhaseStep::SumRate => {
                let r = optimize_reflect(channels, &w, &phases, scenario, &opts.reflect);
                reflect_traces.push(r.trace);
                r.phases
            }
            PhaseStep::MaxIrs => max_irs_phases(channels, &w, &phases),
        };

        let mut best: Option<(f64, BeamMatrix, RunTrace)> = None;
        let mut offer = |cand: BeamMatrix, t: RunTrace| {
            if !feasible(channels, &new_phases, &cand, scenario) {
                return;
            }
            let e = evaluate(channels, &new_phases, &cand, scenario).ee_per_hz;
            if best.as_ref().is_none_or(|(b, _, _)| e > *b) {
                best = Some((e, cand, t));
            }
        };
        offer(w.clone(), RunTrace::new());
        if let Ok(out) = optimize_transmit(channels, &new_phases, scenario, &opts.transmit) {
            offer(out.w, out.trace);
        }
        let combined = combined_channels(channels, &new_phases);
        if feasible(channels, &new_phases, &w, scenario) {
            let rows = w.active_rows();
            if let Ok((cand, t)) = sca_on_support(&combined, &rows, &w, scenario, &opts.transmit.sca) {
                offer(cand, t);
            }
        }

        let prev = metrics.ee_per_hz;
        let Some((e, cand, t)) = best else {
            break;
        };
        if !(e > prev) {
            break;
        }
        let changes = phases.phase_changes(&new_phases);
        w = cand;
        phases = new_phases;
        metrics = evaluate(channels, &phases, &w, scenario);
        if !t.is_empty() {
            transmit_traces.push(t);
        }
        trace.push(metrics.record(round, changes));
        if (e - prev) <= opts.outer_tol * prev {
            break;
        }
    }
    Ok(AlternatingOutcome {
        w,
        phases,
        trace,
        transmit_traces,
        reflect_traces,
    })
}
