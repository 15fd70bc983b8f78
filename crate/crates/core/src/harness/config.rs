//! JSON scenario files.
//!
//! Every field is optional and overrides the chosen base profile. Powers are
//! given in dBm (`p_t_dbm`, `sigma2_dbm`), SINR floors either in dB
//! (`rho_db`) or linear (`rho`), as a scalar or one value per user.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::channel::{IrsResponse, PathlossParams};
use crate::error::{Error, Result};
use crate::system::{db_to_linear, dbm_to_watts, Scenario};

const FIELDS: &[&str] = &[
    "m_antennas",
    "n_elements",
    "l_irs",
    "k_users",
    "n_rf",
    "phase_bits",
    "p_t_dbm",
    "sigma2_dbm",
    "rho_db",
    "rho",
    "epsilon",
    "p_rf_w",
    "p_cir_w",
    "p_n_w",
    "bandwidth_hz",
    "bs_position",
    "irs_positions",
    "user_positions",
    "user_disk_center",
    "user_disk_radius",
    "pathloss_los",
    "pathloss_nlos",
    "lens_aperture",
    "lens_norm_dim",
    "gp",
    "irs_response",
];

/// Loads a scenario on top of the full-size defaults.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    load_scenario_over(path, Scenario::full())
}

pub fn load_scenario_over(path: &Path, base: Scenario) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_str(&text, base)
}

pub fn scenario_from_str(text: &str, base: Scenario) -> Result<Scenario> {
    let value: Value = serde_json::from_str(text)?;
    scenario_from_value(&value, base)
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(path, format!("expected a number, got {v}")))
}

fn count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::config(path, format!("expected a non-negative integer, got {v}")))
}

fn point(v: &Value, path: &str) -> Result<[f64; 2]> {
    match v.as_array().map(Vec::as_slice) {
        Some([x, y]) => Ok([number(x, &format!("{path}[0]"))?, number(y, &format!("{path}[1]"))?]),
        _ => Err(Error::config(path, "expected [x, y]")),
    }
}

fn points(v: &Value, path: &str) -> Result<Vec<[f64; 2]>> {
    v.as_array()
        .ok_or_else(|| Error::config(path, "expected a list of [x, y] points"))?
        .iter()
        .enumerate()
        .map(|(i, p)| point(p, &format!("{path}[{i}]")))
        .collect()
}

fn floors(v: &Value, path: &str, k: usize, convert: fn(f64) -> f64) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => {
            if items.len() != k {
                return Err(Error::config(
                    path,
                    format!("expected {k} entries, got {}", items.len()),
                ));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, x)| number(x, &format!("{path}[{i}]")).map(convert))
                .collect()
        }
        _ => Ok(vec![convert(number(v, path)?); k]),
    }
}

fn pathloss(v: &Value, path: &str, base: &PathlossParams) -> Result<PathlossParams> {
    let obj = v.as_object().ok_or_else(|| Error::config(path, "expected an object"))?;
    let mut p = *base;
    for (key, val) in obj {
        let sub = format!("{path}.{key}");
        let slot = match key.as_str() {
            "kappa_a" => &mut p.kappa_a,
            "kappa_b" => &mut p.kappa_b,
            "sigma_c" => &mut p.sigma_c,
            "tx_gain_dbi" => &mut p.tx_gain_dbi,
            "rx_gain_dbi" => &mut p.rx_gain_dbi,
            _ => return Err(Error::config(sub, "unknown field")),
        };
        *slot = number(val, &sub)?;
    }
    Ok(p)
}

/// Applies a JSON object to `base`, then validates the result.
pub fn scenario_from_value(value: &Value, base: Scenario) -> Result<Scenario> {
    let obj: &Map<String, Value> = value
        .as_object()
        .ok_or_else(|| Error::config("$", "scenario must be a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(Error::config(key.clone(), "unknown field"));
    }
    if obj.contains_key("rho") && obj.contains_key("rho_db") {
        return Err(Error::config("rho", "give either `rho` or `rho_db`, not both"));
    }
    let mut s = base;
    let get = |k: &str| obj.get(k);

    if let Some(v) = get("m_antennas") {
        s.m_antennas = count(v, "m_antennas")?;
    }
    if let Some(v) = get("n_elements") {
        s.n_elements = count(v, "n_elements")?;
    }
    if let Some(v) = get("l_irs") {
        s.l_irs = count(v, "l_irs")?;
    }
    if let Some(v) = get("k_users") {
        s = s.with_users(count(v, "k_users")?);
    }
    if let Some(v) = get("n_rf") {
        s.n_rf = count(v, "n_rf")?;
    }
    if let Some(v) = get("phase_bits") {
        s.phase_bits =
            u32::try_from(count(v, "phase_bits")?).map_err(|_| Error::config("phase_bits", "out of range"))?;
    }
    if let Some(v) = get("p_t_dbm") {
        s.p_t = dbm_to_watts(number(v, "p_t_dbm")?);
    }
    if let Some(v) = get("sigma2_dbm") {
        s.sigma2 = dbm_to_watts(number(v, "sigma2_dbm")?);
    }
    if let Some(v) = get("rho_db") {
        s.rho = floors(v, "rho_db", s.k_users, db_to_linear)?;
    }
    if let Some(v) = get("rho") {
        s.rho = floors(v, "rho", s.k_users, |x| x)?;
    }
    if let Some(v) = get("epsilon") {
        s.epsilon = number(v, "epsilon")?;
    }
    if let Some(v) = get("p_rf_w") {
        s.p_rf = number(v, "p_rf_w")?;
    }
    if let Some(v) = get("p_cir_w") {
        s.p_cir = number(v, "p_cir_w")?;
    }
    if let Some(v) = get("p_n_w") {
        let table = v
            .as_object()
            .ok_or_else(|| Error::config("p_n_w", "expected an object mapping bits to watts"))?;
        let mut out = BTreeMap::new();
        for (bits, watts) in table {
            let path = format!("p_n_w.{bits}");
            let b: u32 = bits
                .parse()
                .map_err(|_| Error::config(path.clone(), "key must be a bit count"))?;
            out.insert(b, number(watts, &path)?);
        }
        s.p_n_of_b = out;
    }
    if let Some(v) = get("bandwidth_hz") {
        s.bandwidth = number(v, "bandwidth_hz")?;
    }
    if let Some(v) = get("bs_position") {
        s.geometry.bs_position = point(v, "bs_position")?;
    }
    if let Some(v) = get("irs_positions") {
        s.geometry.irs_positions = points(v, "irs_positions")?;
    }
    if let Some(v) = get("user_positions") {
        s.geometry.user_positions = Some(points(v, "user_positions")?);
    }
    if let Some(v) = get("user_disk_center") {
        s.geometry.user_disk_center = point(v, "user_disk_center")?;
    }
    if let Some(v) = get("user_disk_radius") {
        s.geometry.user_disk_radius = number(v, "user_disk_radius")?;
    }
    if let Some(v) = get("pathloss_los") {
        s.pathloss_los = pathloss(v, "pathloss_los", &s.pathloss_los)?;
    }
    if let Some(v) = get("pathloss_nlos") {
        s.pathloss_nlos = pathloss(v, "pathloss_nlos", &s.pathloss_nlos)?;
    }
    if let Some(v) = get("lens_aperture") {
        s.lens_aperture = number(v, "lens_aperture")?;
    }
    if let Some(v) = get("lens_norm_dim") {
        s.lens_norm_dim = number(v, "lens_norm_dim")?;
    }
    if let Some(v) = get("gp") {
        s.gp = count(v, "gp")?;
    }
    if let Some(v) = get("irs_response") {
        s.irs_response = match v.as_str() {
            Some("unit") => IrsResponse::Unit,
            Some("element") => IrsResponse::Element,
            _ => return Err(Error::config("irs_response", "expected \"unit\" or \"element\"")),
        };
    }
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_full_default() {
        assert_eq!(scenario_from_str("{}", Scenario::full()).unwrap(), Scenario::full());
    }

    #[test]
    fn dbm_conversion() {
        let s = scenario_from_str(r#"{"p_t_dbm": 30}"#, Scenario::full()).unwrap();
        assert!((s.p_t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_field() {
        let e = scenario_from_str(r#"{"n_rf": 200, "m_antennas": 151}"#, Scenario::full()).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "n_rf"), "{e}");
        let e = scenario_from_str(r#"{"pathloss_los": {"kappa_b": "x"}}"#, Scenario::full()).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path == "pathloss_los.kappa_b"),
            "{e}"
        );
        let e = scenario_from_str(r#"{"rho_db": [0, 0]}"#, Scenario::full()).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "rho_db"), "{e}");
        let e = scenario_from_str(r#"{"bogus": 1}"#, Scenario::full()).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "bogus"), "{e}");
        assert_eq!(
            scenario_from_str("[1]", Scenario::full()).unwrap_err().class(),
            "config"
        );
    }
}
