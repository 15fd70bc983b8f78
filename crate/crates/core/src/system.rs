//! System state types and metric computations: combined channels, SINR,
//! sum rate, power consumption and energy efficiency.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, Geometry, IrsResponse, PathlossParams};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative threshold below which a beamformer row counts as inactive.
pub const ROW_ACTIVITY_REL: f64 = 1e-9;

/// All constants describing one system configuration. Internal units are
/// linear (watts, hertz); dB/dBm only appear in the config loader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub m_antennas: usize,
    pub n_elements: usize,
    pub l_irs: usize,
    pub k_users: usize,
    pub n_rf: usize,
    pub phase_bits: u32,
    /// Maximum transmit power (W).
    pub p_t: f64,
    /// Noise power (W).
    pub sigma2: f64,
    /// Per-user SINR floors, linear.
    pub rho: Vec<f64>,
    /// Amplifier inefficiency, `1 / efficiency`.
    pub epsilon: f64,
    /// Power per RF chain (W).
    pub p_rf: f64,
    /// Power per IRS element keyed by phase resolution in bits (W).
    pub p_n_of_b: BTreeMap<u32, f64>,
    /// Static circuit power (W).
    pub p_cir: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    pub geometry: Geometry,
    pub pathloss_los: PathlossParams,
    pub pathloss_nlos: PathlossParams,
    pub lens_aperture: f64,
    pub lens_norm_dim: f64,
    /// Number of NLOS paths per BS-IRS channel.
    pub gp: usize,
    pub irs_response: IrsResponse,
}

impl Scenario {
    /// The full-size parameter set (M = 151, N = 80, K = 12, N_RF = 20, B = 6).
    pub fn full() -> Self {
        let m = 151;
        let dim = ((m - 1) / 2) as f64;
        Scenario {
            m_antennas: m,
            n_elements: 80,
            l_irs: 2,
            k_users: 12,
            n_rf: 20,
            phase_bits: 6,
            p_t: dbm_to_watts(30.0),
            sigma2: dbm_to_watts(-117.0),
            rho: vec![db_to_linear(0.0); 12],
            epsilon: 1.2,
            p_rf: 0.3,
            p_n_of_b: BTreeMap::from([(5, 0.006), (6, 0.0078)]),
            p_cir: 0.2,
            bandwidth: 500e6,
            geometry: Geometry::default_layout(),
            pathloss_los: PathlossParams::los(),
            pathloss_nlos: PathlossParams::nlos(),
            lens_aperture: dim,
            lens_norm_dim: dim,
            gp: 2,
            irs_response: IrsResponse::Element,
        }
    }

    /// Small profile where one alternating run completes in well under a second.
    /// SINR floors are off: with 16 elements per IRS the weakest users sit far
    /// below the noise floor on most draws.
    pub fn desk() -> Self {
        let mut s = Scenario::full();
        s.m_antennas = 31;
        s.n_elements = 16;
        s.k_users = 4;
        s.n_rf = 8;
        s.phase_bits = 4;
        s.rho = vec![0.0; 4];
        s.lens_aperture = 15.0;
        s.lens_norm_dim = 15.0;
        s
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::config(path, msg));
        if self.m_antennas == 0 || self.m_antennas.is_multiple_of(2) {
            return bad(
                "m_antennas",
                format!("must be odd and positive, got {}", self.m_antennas),
            );
        }
        if self.n_elements == 0 {
            return bad("n_elements", "must be positive".into());
        }
        if self.l_irs == 0 {
            return bad("l_irs", "must be positive".into());
        }
        if self.k_users == 0 {
            return bad("k_users", "must be positive".into());
        }
        if self.n_rf == 0 || self.n_rf > self.m_antennas {
            return bad(
                "n_rf",
                format!(
                    "must satisfy 1 <= n_rf <= m_antennas ({}), got {}",
                    self.m_antennas, self.n_rf
                ),
            );
        }
        if self.phase_bits == 0 || self.phase_bits > 16 {
            return bad("phase_bits", format!("must be in 1..=16, got {}", self.phase_bits));
        }
        if !(self.p_t > 0.0 && self.p_t.is_finite()) {
            return bad("p_t", "must be positive".into());
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2", "must be positive".into());
        }
        if self.rho.len() != self.k_users {
            return bad(
                "rho",
                format!("expected {} entries, got {}", self.k_users, self.rho.len()),
            );
        }
        if let Some(i) = self.rho.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad(&format!("rho[{i}]"), "must be finite and non-negative".into());
        }
        if !(self.epsilon >= 1.0) {
            return bad("epsilon", format!("must be >= 1, got {}", self.epsilon));
        }
        for (path, v) in [("p_rf", self.p_rf), ("p_cir", self.p_cir)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(path, "must be finite and non-negative".into());
            }
        }
        if self.p_n_of_b.is_empty() {
            return bad("p_n_of_b", "needs at least one entry".into());
        }
        if !(self.bandwidth > 0.0) {
            return bad("bandwidth", "must be positive".into());
        }
        if !(self.lens_aperture > 0.0) || !(self.lens_norm_dim > 0.0) {
            return bad("lens", "aperture and normalized dimension must be positive".into());
        }
        self.pathloss_los.validate("pathloss_los")?;
        self.pathloss_nlos.validate("pathloss_nlos")?;
        self.geometry.validate(self.l_irs, self.k_users)?;
        Ok(())
    }

    /// Per-element IRS power at the configured resolution. Resolutions missing
    /// from the table are linearly inter/extrapolated from the two nearest
    /// entries and floored at zero.
    pub fn p_n(&self) -> f64 {
        p_n_lookup(&self.p_n_of_b, self.phase_bits)
    }

    /// Circuit power `P_c = N_RF P_RF + L N P_N(B) + P_cir`.
    pub fn circuit_power(&self) -> f64 {
        self.n_rf as f64 * self.p_rf + (self.l_irs * self.n_elements) as f64 * self.p_n() + self.p_cir
    }

    /// Returns a copy with `k` users; the SINR floor list is resized by
    /// repeating its first entry and fixed user positions are truncated or
    /// dropped.
    pub fn with_users(&self, k: usize) -> Self {
        let mut s = self.clone();
        let floor = self.rho.first().copied().unwrap_or(1.0);
        s.rho.resize(k, floor);
        s.rho.truncate(k);
        s.k_users = k;
        if let Some(pos) = &mut s.geometry.user_positions {
            if pos.len() >= k {
                pos.truncate(k);
            } else {
                s.geometry.user_positions = None;
            }
        }
        s
    }
}

pub(crate) fn p_n_lookup(table: &BTreeMap<u32, f64>, bits: u32) -> f64 {
    if let Some(v) = table.get(&bits) {
        return *v;
    }
    let pts: Vec<(f64, f64)> = table.iter().map(|(b, p)| (*b as f64, *p)).collect();
    if pts.len() == 1 {
        return pts[0].1;
    }
    let x = bits as f64;
    // two nearest table entries by resolution
    let mut by_dist = pts.clone();
    by_dist.sort_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()).then(a.0.total_cmp(&b.0)));
    let (mut p0, mut p1) = (by_dist[0], by_dist[1]);
    if p0.0 > p1.0 {
        std::mem::swap(&mut p0, &mut p1);
    }
    let slope = (p1.1 - p0.1) / (p1.0 - p0.0);
    (p0.1 + slope * (x - p0.0)).max(0.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// The discrete phase set `{2 pi q / 2^B : q = 0 .. 2^B - 1}`.
pub fn phase_set(bits: u32) -> Result<Vec<f64>> {
    if bits == 0 {
        return Err(Error::Domain("phase resolution must be at least 1 bit".into()));
    }
    if bits > 16 {
        return Err(Error::Domain(format!("phase resolution {bits} bits is too large")));
    }
    let count = 1usize << bits;
    Ok((0..count).map(|q| 2.0 * PI * q as f64 / count as f64).collect())
}

/// Discrete phase-shift indices for every IRS element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    bits: u32,
    /// `indices[l][n]` in `0 .. 2^bits`.
    indices: Vec<Vec<u32>>,
}

impl PhaseConfig {
    pub fn zeros(l_irs: usize, n_elements: usize, bits: u32) -> Self {
        PhaseConfig {
            bits,
            indices: vec![vec![0; n_elements]; l_irs],
        }
    }

    pub fn new(bits: u32, indices: Vec<Vec<u32>>) -> Result<Self> {
        let levels = 1u32 << bits;
        if bits == 0 {
            return Err(Error::Domain("phase resolution must be at least 1 bit".into()));
        }
        let n = indices.first().map_or(0, Vec::len);
        if indices.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension("ragged phase index table".into()));
        }
        if indices.iter().flatten().any(|&q| q >= levels) {
            return Err(Error::Domain(format!("phase index out of range 0..{levels}")));
        }
        Ok(PhaseConfig { bits, indices })
    }

    /// Builds a configuration from a stacked index vector of length `l * n`.
    pub fn from_stacked(bits: u32, l_irs: usize, stacked: &[u32]) -> Result<Self> {
        if l_irs == 0 || !stacked.len().is_multiple_of(l_irs) {
            return Err(Error::Dimension("stacked index length not divisible by L".into()));
        }
        let n = stacked.len() / l_irs;
        PhaseConfig::new(bits, stacked.chunks(n).map(<[u32]>::to_vec).collect())
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn l_irs(&self) -> usize {
        self.indices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn stacked_indices(&self) -> Vec<u32> {
        self.indices.iter().flatten().copied().collect()
    }

    pub fn index(&self, l: usize, n: usize) -> u32 {
        self.indices[l][n]
    }

    pub fn set_index(&mut self, l: usize, n: usize, q: u32) {
        assert!(q < self.levels(), "phase index {q} out of range");
        self.indices[l][n] = q;
    }

    pub fn phase(&self, l: usize, n: usize) -> f64 {
        2.0 * PI * self.indices[l][n] as f64 / self.levels() as f64
    }

    /// Stacked unit-modulus vector `u` with `u_n = exp(j theta_n)`.
    pub fn u(&self) -> CVector {
        let levels = self.levels();
        CVector::from_iterator(
            self.l_irs() * self.n_elements(),
            self.indices.iter().flatten().map(|&q| unit_phasor(q, levels)),
        )
    }

    pub fn phase_changes(&self, other: &PhaseConfig) -> usize {
        self.indices
            .iter()
            .flatten()
            .zip(other.indices.iter().flatten())
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// `exp(j 2 pi q / levels)`, exact for the quarter-turn points.
pub(crate) fn unit_phasor(q: u32, levels: u32) -> C64 {
    let q = q % levels;
    if 4 * q == levels {
        return C64::new(0.0, 1.0);
    }
    if 2 * q == levels {
        return C64::new(-1.0, 0.0);
    }
    if 4 * q == 3 * levels {
        return C64::new(0.0, -1.0);
    }
    if q == 0 {
        return C64::new(1.0, 0.0);
    }
    let theta = 2.0 * PI * q as f64 / levels as f64;
    C64::new(theta.cos(), theta.sin())
}

/// Transmit beamforming matrix `W` (M x K); column `k` is user k's beam,
/// row `m` is antenna m's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMatrix {
    pub w: CMatrix,
}

impl BeamMatrix {
    pub fn new(w: CMatrix) -> Self {
        BeamMatrix { w }
    }

    pub fn zeros(m: usize, k: usize) -> Self {
        BeamMatrix {
            w: CMatrix::zeros(m, k),
        }
    }

    pub fn m_antennas(&self) -> usize {
        self.w.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.w.ncols()
    }

    pub fn column(&self, k: usize) -> CVector {
        self.w.column(k).into_owned()
    }

    /// `sum_k ||w_k||^2`.
    pub fn transmit_power(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `P_m = sum_k |w_mk|^2` for every antenna.
    pub fn row_powers(&self) -> Vec<f64> {
        self.w
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Number of rows whose infinity norm exceeds `1e-9` times the largest
    /// row infinity norm.
    pub fn active_antennas(&self) -> usize {
        let inf: Vec<f64> = self
            .w
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .collect();
        let max = inf.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        inf.iter().filter(|&&x| x > ROW_ACTIVITY_REL * max).count()
    }

    pub fn active_rows(&self) -> Vec<usize> {
        let inf: Vec<f64> = self
            .w
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .collect();
        let max = inf.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Vec::new();
        }
        (0..inf.len()).filter(|&m| inf[m] > ROW_ACTIVITY_REL * max).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        BeamMatrix {
            w: self.w.map(|z| z * c),
        }
    }
}

/// One record of an optimization trace. Rates and EE are per hertz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    /// Energy efficiency, bits / joule / Hz.
    pub ee: f64,
    /// Sum rate, bits / s / Hz.
    pub sum_rate: f64,
    pub total_power: f64,
    /// `min_k (gamma_k - rho_k)`.
    pub min_sinr_margin: f64,
    /// `min_k 10 log10(gamma_k / rho_k)` over users with a positive floor.
    pub min_sinr_margin_db: f64,
    pub phase_changes: usize,
}

/// Per-iteration history of an optimizer run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<IterRecord>,
    /// The run began from a point violating the SINR floors.
    pub infeasible_start: bool,
    /// The returned point violates the SINR floors.
    pub infeasible_end: bool,
    /// Inner convex-solver statistics, one entry per subproblem solve.
    pub solver: Vec<SolverStats>,
}

/// Diagnostics of one interior-point solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub newton_iterations: usize,
    pub phase_one_iterations: usize,
    /// Duality-gap bound `m / tau` at exit.
    pub gap: f64,
    /// Norm of the Lagrangian gradient at exit.
    pub kkt_residual: f64,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Panics if the iteration index does not increase or
    /// the EE value is not finite.
    pub fn push(&mut self, rec: IterRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                rec.iteration > last.iteration,
                "trace iterations must strictly increase"
            );
        }
        assert!(rec.ee.is_finite(), "trace EE must be finite");
        self.records.push(rec);
    }

    pub fn records(&self) -> &[IterRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Largest drop of `f(record)` between consecutive records (0 if none).
    pub fn max_decrease(&self, f: impl Fn(&IterRecord) -> f64) -> f64 {
        self.records.windows(2).map(|w| f(&w[0]) - f(&w[1])).fold(0.0, f64::max)
    }
}

/// Combined channels `H_k` such that the effective scalar channel of stream i
/// at user k is `H_k^H w_i = sum_l H_lk^H Phi_l^H G_l w_i`.
pub fn combined_channels(channels: &ChannelSet, phases: &PhaseConfig) -> Vec<CVector> {
    let l_irs = channels.g.len();
    let k_users = channels.h.first().map_or(0, Vec::len);
    let m = channels.g.first().map_or(0, |g| g.ncols());
    let levels = phases.levels();
    (0..k_users)
        .map(|k| {
            // row vector r = sum_l (conj(h_lk) .* conj(phi_l))^T G_l, then H_k = conj(r)^T
            let mut row = CVector::zeros(m);
            for l in 0..l_irs {
                let h = &channels.h[l][k];
                let g = &channels.g[l];
                for n in 0..g.nrows() {
                    let coeff = h[n].conj() * unit_phasor(phases.index(l, n), levels).conj();
                    if coeff == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for mm in 0..m {
                        row[mm] += coeff * g[(n, mm)];
                    }
                }
            }
            row.map(|z| z.conj())
        })
        .collect()
}

/// Effective scalar gains `H_k^H w_i` for all (k, i).
pub fn cross_gains(combined: &[CVector], w: &BeamMatrix) -> Vec<Vec<C64>> {
    combined
        .iter()
        .map(|h| (0..w.k_users()).map(|i| h.dotc(&w.w.column(i))).collect())
        .collect()
}

/// Per-user SINR.
pub fn sinr(combined: &[CVector], w: &BeamMatrix, sigma2: f64) -> Vec<f64> {
    sinr_from_gains(&cross_gains(combined, w), sigma2)
}

pub(crate) fn sinr_from_gains(gains: &[Vec<C64>], sigma2: f64) -> Vec<f64> {
    gains
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let interference: f64 = row
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            row[k].norm_sqr() / (interference + sigma2)
        })
        .collect()
}

/// `W sum_k log2(1 + gamma_k)` in bits/s; pass `bandwidth = 1` for bits/s/Hz.
pub fn sum_rate(gammas: &[f64], bandwidth: f64) -> f64 {
    bandwidth * gammas.iter().map(|g| (1.0 + g).log2()).sum::<f64>()
}

/// `eps sum_k ||w_k||^2 + P_c` in watts.
pub fn total_power(w: &BeamMatrix, scenario: &Scenario) -> f64 {
    scenario.epsilon * w.transmit_power() + scenario.circuit_power()
}

/// Sum rate over total power, bits / joule.
pub fn energy_efficiency(channels: &ChannelSet, phases: &PhaseConfig, w: &BeamMatrix, scenario: &Scenario) -> f64 {
    evaluate(channels, phases, w, scenario).ee_per_hz * scenario.bandwidth
}

/// All metrics of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub gammas: Vec<f64>,
    pub rate_per_hz: f64,
    pub power: f64,
    pub ee_per_hz: f64,
    pub min_sinr_margin: f64,
    pub min_sinr_margin_db: f64,
}

impl Metrics {
    pub fn from_gammas(gammas: Vec<f64>, w: &BeamMatrix, scenario: &Scenario) -> Self {
        let rate_per_hz = sum_rate(&gammas, 1.0);
        let power = total_power(w, scenario);
        let min_sinr_margin = gammas
            .iter()
            .zip(&scenario.rho)
            .map(|(g, r)| g - r)
            .fold(f64::INFINITY, f64::min);
        Metrics {
            ee_per_hz: rate_per_hz / power,
            min_sinr_margin_db: margin_db(&gammas, &scenario.rho),
            gammas,
            rate_per_hz,
            power,
            min_sinr_margin,
        }
    }

    pub fn record(&self, iteration: usize, phase_changes: usize) -> IterRecord {
        IterRecord {
            iteration,
            ee: self.ee_per_hz,
            sum_rate: self.rate_per_hz,
            total_power: self.power,
            min_sinr_margin: self.min_sinr_margin,
            min_sinr_margin_db: self.min_sinr_margin_db,
            phase_changes,
        }
    }
}

/// Worst per-user margin `10 log10(gamma_k / rho_k)` in dB; users with a
/// zero floor are skipped (`+inf` when every floor is zero).
pub fn margin_db(gammas: &[f64], rho: &[f64]) -> f64 {
    gammas
        .iter()
        .zip(rho)
        .filter(|(_, r)| **r > 0.0)
        .map(|(g, r)| 10.0 * (g / r).log10())
        .fold(f64::INFINITY, f64::min)
}

pub fn evaluate(channels: &ChannelSet, phases: &PhaseConfig, w: &BeamMatrix, scenario: &Scenario) -> Metrics {
    let combined = combined_channels(channels, phases);
    evaluate_combined(&combined, w, scenario)
}

pub fn evaluate_combined(combined: &[CVector], w: &BeamMatrix, scenario: &Scenario) -> Metrics {
    Metrics::from_gammas(sinr(combined, w, scenario.sigma2), w, scenario)
}
