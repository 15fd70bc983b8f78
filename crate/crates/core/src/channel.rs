//! Channel synthesis: lens array response, IRS steering vectors, geometric
//! BS-IRS channels and LOS IRS-user channels.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by
//! `(seed, entity)`, so the BS-IRS channel of IRS `l` does not depend on how
//! many users exist, and the channel of user `k` does not depend on `K`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::system::Scenario;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Log-distance pathloss with log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossParams {
    /// Offset (dB).
    pub kappa_a: f64,
    /// Distance exponent.
    pub kappa_b: f64,
    /// Shadowing standard deviation (dB).
    pub sigma_c: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl PathlossParams {
    pub fn los() -> Self {
        PathlossParams {
            kappa_a: 61.4,
            kappa_b: 2.0,
            sigma_c: 5.8,
            tx_gain_dbi: 9.82,
            rx_gain_dbi: 0.0,
        }
    }

    pub fn nlos() -> Self {
        PathlossParams {
            kappa_a: 72.0,
            kappa_b: 2.92,
            sigma_c: 8.7,
            tx_gain_dbi: 9.82,
            rx_gain_dbi: 0.0,
        }
    }

    pub(crate) fn validate(&self, path: &str) -> Result<()> {
        if !(self.kappa_b > 0.0) {
            return Err(Error::config(format!("{path}.kappa_b"), "must be positive"));
        }
        if !(self.sigma_c >= 0.0) {
            return Err(Error::config(format!("{path}.sigma_c"), "must be non-negative"));
        }
        for (name, v) in [
            ("kappa_a", self.kappa_a),
            ("tx_gain_dbi", self.tx_gain_dbi),
            ("rx_gain_dbi", self.rx_gain_dbi),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{path}.{name}"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Linear product of transmit and receive antenna gains.
    pub fn antenna_gain(&self) -> f64 {
        10f64.powf(self.tx_gain_dbi / 10.0) * 10f64.powf(self.rx_gain_dbi / 10.0)
    }
}

/// Normalization of the IRS array response used inside the channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IrsResponse {
    /// Unit-norm steering vector (entries `1/sqrt(N)`).
    Unit,
    /// Unit-modulus entries (norm `sqrt(N)`), so an aligned IRS yields an
    /// `N^2` power gain.
    Element,
}

/// Node positions in meters (2-D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_position: [f64; 2],
    pub irs_positions: Vec<[f64; 2]>,
    /// Fixed user positions; drawn uniformly in the disk when absent.
    pub user_positions: Option<Vec<[f64; 2]>>,
    pub user_disk_center: [f64; 2],
    pub user_disk_radius: f64,
}

impl Geometry {
    /// BS at the origin, IRSs at (50, +-50), users in a disk of radius 30
    /// around (100, 0).
    pub fn default_layout() -> Self {
        Geometry {
            bs_position: [0.0, 0.0],
            irs_positions: vec![[50.0, 50.0], [50.0, -50.0]],
            user_positions: None,
            user_disk_center: [100.0, 0.0],
            user_disk_radius: 30.0,
        }
    }

    pub(crate) fn validate(&self, l_irs: usize, k_users: usize) -> Result<()> {
        if self.irs_positions.len() != l_irs {
            return Err(Error::config(
                "irs_positions",
                format!("expected {l_irs} positions, got {}", self.irs_positions.len()),
            ));
        }
        for (l, p) in self.irs_positions.iter().enumerate() {
            if distance(*p, self.bs_position) <= 0.0 {
                return Err(Error::config(
                    format!("irs_positions[{l}]"),
                    "coincides with the base station",
                ));
            }
        }
        if let Some(users) = &self.user_positions {
            if users.len() != k_users {
                return Err(Error::config(
                    "user_positions",
                    format!("expected {k_users} positions, got {}", users.len()),
                ));
            }
        }
        if !(self.user_disk_radius >= 0.0) {
            return Err(Error::config("user_disk_radius", "must be non-negative"));
        }
        Ok(())
    }

    /// User positions for this seed: the fixed list, or one uniform draw in
    /// the disk per user from that user's own stream.
    pub fn realize_users(&self, k_users: usize, seed: u64) -> Vec<[f64; 2]> {
        if let Some(users) = &self.user_positions {
            return users.clone();
        }
        (0..k_users)
            .map(|k| {
                let mut rng = entity_rng(seed, StreamTag::UserPosition, k as u64, 0);
                let r = self.user_disk_radius * rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                [
                    self.user_disk_center[0] + r * phi.cos(),
                    self.user_disk_center[1] + r * phi.sin(),
                ]
            })
            .collect()
    }
}

/// One channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS-to-IRS matrices, `g[l]` is N x M.
    pub g: Vec<CMatrix>,
    /// IRS-to-user vectors, `h[l][k]` has length N.
    pub h: Vec<Vec<CVector>>,
    pub seed: u64,
    pub user_positions: Vec<[f64; 2]>,
}

impl ChannelSet {
    pub fn l_irs(&self) -> usize {
        self.g.len()
    }

    pub fn k_users(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    pub fn n_elements(&self) -> usize {
        self.g.first().map_or(0, |g| g.nrows())
    }

    pub fn m_antennas(&self) -> usize {
        self.g.first().map_or(0, |g| g.ncols())
    }
}

/// One propagation path of a BS-IRS channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: C64,
    /// Arrival angle at the IRS (rad).
    pub aoa: f64,
    /// Departure angle at the lens (rad).
    pub aod: f64,
}

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum StreamTag {
    BsIrs = 1,
    IrsUser = 2,
    UserPosition = 3,
}

fn entity_rng(seed: u64, tag: StreamTag, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 56) | ((a & 0x0fff_ffff) << 28) | (b & 0x0fff_ffff));
    rng
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Angle of the vector `to - from` measured from the x axis.
fn bearing(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// `sin(pi x) / (pi x)`, exactly zero at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let n = x.round();
    let frac = x - n;
    let sign = if (n as i64) % 2 == 0 { 1.0 } else { -1.0 };
    sign * (PI * frac).sin() / (PI * x)
}

/// Lens antenna array response `sqrt(A) sinc(m - D sin(aod))` over the
/// antenna indices `m = -(M-1)/2 ..= (M-1)/2`.
pub fn lens_array_response(aod: f64, m_count: usize, aperture: f64, norm_dim: f64) -> Result<CVector> {
    if m_count == 0 || m_count.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "lens array needs an odd antenna count, got {m_count}"
        )));
    }
    if !(aperture > 0.0) || !(norm_dim > 0.0) {
        return Err(Error::Domain("lens aperture and dimension must be positive".into()));
    }
    let half = (m_count as i64 - 1) / 2;
    let shift = norm_dim * aod.sin();
    let amp = aperture.sqrt();
    Ok(CVector::from_iterator(
        m_count,
        (-half..=half).map(|m| C64::new(amp * sinc(m as f64 - shift), 0.0)),
    ))
}

/// Unit-norm half-wavelength ULA steering vector,
/// entry `n` = `exp(j pi n sin(angle)) / sqrt(N)`.
pub fn ula_steering(angle: f64, n_count: usize) -> CVector {
    let scale = 1.0 / (n_count as f64).sqrt();
    let s = angle.sin();
    CVector::from_iterator(n_count, (0..n_count).map(|n| C64::from_polar(scale, PI * n as f64 * s)))
}

fn irs_response(angle: f64, n_count: usize, mode: IrsResponse) -> CVector {
    let a = ula_steering(angle, n_count);
    match mode {
        IrsResponse::Unit => a,
        IrsResponse::Element => a * C64::new((n_count as f64).sqrt(), 0.0),
    }
}

/// Pathloss `kappa_a + 10 kappa_b log10(d) + shadow` in dB.
pub fn pathloss_db(distance: f64, params: &PathlossParams, shadow_db: f64) -> f64 {
    params.kappa_a + 10.0 * params.kappa_b * distance.log10() + shadow_db
}

/// Draws a complex path gain `alpha sqrt(g_t g_r)` with
/// `alpha ~ CN(0, 10^(-kappa/10))` and log-normal shadowing.
pub fn pathloss_gain<R: Rng + ?Sized>(distance: f64, params: &PathlossParams, rng: &mut R) -> Result<C64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    let shadow = if params.sigma_c > 0.0 {
        Normal::new(0.0, params.sigma_c)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    let variance = 10f64.powf(-0.1 * pathloss_db(distance, params, shadow));
    let std = (variance / 2.0).sqrt();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let alpha = C64::new(std * unit.sample(rng), std * unit.sample(rng));
    Ok(alpha * params.antenna_gain().sqrt())
}

/// Path parameters of the BS-IRS channel for IRS `irs_index`: the LOS path
/// from geometry followed by `gp` NLOS paths with uniform angles.
pub fn draw_bs_irs_paths<R: Rng + ?Sized>(
    scenario: &Scenario,
    irs_index: usize,
    rng: &mut R,
) -> Result<Vec<PathComponent>> {
    let geo = &scenario.geometry;
    let irs = *geo
        .irs_positions
        .get(irs_index)
        .ok_or_else(|| Error::Dimension(format!("IRS index {irs_index} out of range")))?;
    let d = distance(geo.bs_position, irs);
    let mut paths = Vec::with_capacity(scenario.gp + 1);
    paths.push(PathComponent {
        gain: pathloss_gain(d, &scenario.pathloss_los, rng)?,
        aoa: bearing(irs, geo.bs_position),
        aod: bearing(geo.bs_position, irs),
    });
    for _ in 0..scenario.gp {
        let aoa = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let aod = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let gain = pathloss_gain(d, &scenario.pathloss_nlos, rng)?;
        paths.push(PathComponent { gain, aoa, aod });
    }
    Ok(paths)
}

/// `G_l = sum_g K_g a_IRS(aoa_g) a_LAA(aod_g)^H`, an N x M matrix.
pub fn assemble_bs_irs_channel(scenario: &Scenario, paths: &[PathComponent]) -> Result<CMatrix> {
    let (n, m) = (scenario.n_elements, scenario.m_antennas);
    let mut g = CMatrix::zeros(n, m);
    for p in paths {
        let a_irs = irs_response(p.aoa, n, scenario.irs_response);
        let a_laa = lens_array_response(p.aod, m, scenario.lens_aperture, scenario.lens_norm_dim)?;
        g += (a_irs * p.gain) * a_laa.adjoint();
    }
    Ok(g)
}

pub fn synth_bs_irs_channel<R: Rng + ?Sized>(scenario: &Scenario, irs_index: usize, rng: &mut R) -> Result<CMatrix> {
    let paths = draw_bs_irs_paths(scenario, irs_index, rng)?;
    assemble_bs_irs_channel(scenario, &paths)
}

/// LOS IRS-user channel `beta_lk a_IRS(aod_lk)`.
pub fn synth_irs_user_channel<R: Rng + ?Sized>(
    scenario: &Scenario,
    user_positions: &[[f64; 2]],
    irs_index: usize,
    user_index: usize,
    rng: &mut R,
) -> Result<CVector> {
    let irs = *scenario
        .geometry
        .irs_positions
        .get(irs_index)
        .ok_or_else(|| Error::Dimension(format!("IRS index {irs_index} out of range")))?;
    let user = *user_positions
        .get(user_index)
        .ok_or_else(|| Error::Dimension(format!("user index {user_index} out of range")))?;
    let beta = pathloss_gain(distance(irs, user), &scenario.pathloss_los, rng)?;
    Ok(irs_response(bearing(irs, user), scenario.n_elements, scenario.irs_response) * beta)
}

/// Full channel realization for `seed`.
pub fn synth_channel_set(scenario: &Scenario, seed: u64) -> Result<ChannelSet> {
    scenario.validate()?;
    let users = scenario.geometry.realize_users(scenario.k_users, seed);
    let mut g = Vec::with_capacity(scenario.l_irs);
    let mut h = Vec::with_capacity(scenario.l_irs);
    for l in 0..scenario.l_irs {
        let mut rng = entity_rng(seed, StreamTag::BsIrs, l as u64, 0);
        g.push(synth_bs_irs_channel(scenario, l, &mut rng)?);
        let row = (0..scenario.k_users)
            .map(|k| {
                let mut rng = entity_rng(seed, StreamTag::IrsUser, l as u64, k as u64);
                synth_irs_user_channel(scenario, &users, l, k, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        h.push(row);
    }
    Ok(ChannelSet {
        g,
        h,
        seed,
        user_positions: users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_response_integer_zeros() {
        let a = lens_array_response(0.0, 5, 1.0, 2.0).unwrap();
        let re: Vec<f64> = a.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(a.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn lens_response_shifted_peak() {
        let aod = (0.5f64).asin(); // D sin(aod) = 1 with D = 2
        let a = lens_array_response(aod, 5, 1.0, 2.0).unwrap();
        for (i, z) in a.iter().enumerate() {
            let m = i as i64 - 2;
            if m == 1 {
                assert!((z.re - 1.0).abs() < 1e-14);
            } else {
                assert!(z.re.abs() < 1e-14, "m = {m}: {}", z.re);
            }
        }
    }

    #[test]
    fn lens_response_rejects_even_count() {
        assert!(matches!(
            lens_array_response(0.1, 4, 1.0, 1.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn ula_examples() {
        let a = ula_steering(0.0, 4);
        for z in a.iter() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let b = ula_steering(FRAC_PI_2, 2);
        assert!((b[0] - C64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((b[1] - C64::new(-(0.5f64.sqrt()), 0.0)).norm() < 1e-15);
        assert!((ula_steering(0.4, 16).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pathloss_arithmetic() {
        let mut p = PathlossParams::los();
        p.sigma_c = 0.0;
        let k = pathloss_db(100.0, &p, 0.0);
        assert!((k - 101.4).abs() < 1e-12);
        let unit = PathlossParams {
            kappa_a: 0.0,
            kappa_b: 2.0,
            sigma_c: 0.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
        };
        assert_eq!(pathloss_db(1.0, &unit, 0.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(pathloss_gain(0.0, &unit, &mut rng).is_err());
        assert!(pathloss_gain(-3.0, &unit, &mut rng).is_err());
    }

    #[test]
    fn channel_set_shapes() {
        let mut s = Scenario::desk();
        s.n_elements = 8;
        s.m_antennas = 17;
        s.k_users = 2;
        s.rho = vec![1.0; 2];
        s.n_rf = 4;
        let set = synth_channel_set(&s, 3).unwrap();
        assert_eq!(set.g.len(), 2);
        assert!(set.g.iter().all(|g| g.nrows() == 8 && g.ncols() == 17));
        assert_eq!(set.h.iter().flatten().count(), 4);
        assert!(set.h.iter().flatten().all(|h| h.len() == 8));
    }
}
