//! System configuration and unit conversions.
//!
//! Everything inside the library is in linear units (watts, linear gains).
//! Decibel values are only accepted at the configuration boundary.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// dB to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Geometry, link budget, fading and algorithm parameters of one scenario.
///
/// Serialized key names follow the conventional symbols (`M`, `N`, `P_AP`,
/// `sigma2_U`, `alpha_AI`, `K_IE`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// AP antenna count.
    #[serde(rename = "M")]
    pub num_antennas: usize,
    /// IRS reflecting-unit count.
    #[serde(rename = "N")]
    pub num_elements: usize,
    pub pos_ap: [f64; 2],
    pub pos_user: [f64; 2],
    pub pos_eve: [f64; 2],
    pub pos_irs: [f64; 2],
    /// Transmit power budget in watts.
    #[serde(rename = "P_AP")]
    pub p_ap: f64,
    #[serde(rename = "sigma2_U")]
    pub sigma2_user: f64,
    #[serde(rename = "sigma2_E")]
    pub sigma2_eve: f64,
    /// Path-loss gain at the reference distance (linear).
    pub zeta0: f64,
    pub d0: f64,
    #[serde(rename = "alpha_AU")]
    pub alpha_au: f64,
    #[serde(rename = "alpha_AE")]
    pub alpha_ae: f64,
    #[serde(rename = "alpha_AI")]
    pub alpha_ai: f64,
    #[serde(rename = "alpha_IU")]
    pub alpha_iu: f64,
    #[serde(rename = "alpha_IE")]
    pub alpha_ie: f64,
    #[serde(rename = "K_AU")]
    pub k_au: f64,
    #[serde(rename = "K_AE")]
    pub k_ae: f64,
    #[serde(rename = "K_AI")]
    pub k_ai: f64,
    #[serde(rename = "K_IU")]
    pub k_iu: f64,
    #[serde(rename = "K_IE")]
    pub k_ie: f64,
    /// Exponential spatial correlation coefficient of the AP-side links.
    pub r: f64,
    /// Relative improvement threshold of the alternating loop.
    pub epsilon: f64,
    /// Gaussian randomization trials per reflect sub-problem.
    #[serde(rename = "L_rand")]
    pub l_rand: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Row of the AP-IRS channel used for the initial transmit direction.
    pub init_row: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_antennas: 4,
            num_elements: 64,
            pos_ap: [0.0, 0.0],
            pos_user: [150.0, 0.0],
            pos_eve: [145.0, 0.0],
            pos_irs: [145.0, 5.0],
            p_ap: dbm_to_watts(15.0),
            sigma2_user: dbm_to_watts(-80.0),
            sigma2_eve: dbm_to_watts(-80.0),
            zeta0: db_to_linear(-30.0),
            d0: 1.0,
            alpha_au: 3.0,
            alpha_ae: 3.0,
            alpha_ai: 2.2,
            alpha_iu: 3.0,
            alpha_ie: 3.0,
            k_au: 1.0,
            k_ae: 1.0,
            k_ai: 1.0,
            k_iu: 1.0,
            k_ie: 1.0,
            r: 0.95,
            epsilon: 1e-3,
            l_rand: 1000,
            max_iter: 50,
            seed: 1,
            init_row: 0,
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl SystemConfig {
    pub fn with_elements(mut self, n: usize) -> Self {
        self.num_elements = n;
        self
    }

    pub fn with_power_dbm(mut self, dbm: f64) -> Self {
        self.p_ap = dbm_to_watts(dbm);
        self
    }

    pub fn d_ap_user(&self) -> f64 {
        distance(self.pos_ap, self.pos_user)
    }

    pub fn d_ap_eve(&self) -> f64 {
        distance(self.pos_ap, self.pos_eve)
    }

    pub fn d_ap_irs(&self) -> f64 {
        distance(self.pos_ap, self.pos_irs)
    }

    pub fn d_irs_user(&self) -> f64 {
        distance(self.pos_irs, self.pos_user)
    }

    pub fn d_irs_eve(&self) -> f64 {
        distance(self.pos_irs, self.pos_eve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(invalid("M must be at least 1"));
        }
        let positive = [
            ("P_AP", self.p_ap),
            ("sigma2_U", self.sigma2_user),
            ("sigma2_E", self.sigma2_eve),
            ("zeta0", self.zeta0),
            ("d0", self.d0),
            ("epsilon", self.epsilon),
            ("d_AU", self.d_ap_user()),
            ("d_AE", self.d_ap_eve()),
            ("d_AI", self.d_ap_irs()),
            ("d_IU", self.d_irs_user()),
            ("d_IE", self.d_irs_eve()),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let exponents = [
            ("alpha_AU", self.alpha_au),
            ("alpha_AE", self.alpha_ae),
            ("alpha_AI", self.alpha_ai),
            ("alpha_IU", self.alpha_iu),
            ("alpha_IE", self.alpha_ie),
        ];
        for (name, v) in exponents {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        let factors = [
            ("K_AU", self.k_au),
            ("K_AE", self.k_ae),
            ("K_AI", self.k_ai),
            ("K_IU", self.k_iu),
            ("K_IE", self.k_ie),
        ];
        for (name, v) in factors {
            if v.is_nan() || v < 0.0 {
                return Err(invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(invalid(format!("r must lie in [0, 1), got {}", self.r)));
        }
        if self.l_rand == 0 {
            return Err(invalid("L_rand must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if self.num_elements > 0 && self.init_row >= self.num_elements {
            return Err(invalid(format!(
                "init_row {} out of range for N = {}",
                self.init_row, self.num_elements
            )));
        }
        Ok(())
    }

    /// Parses a JSON object of configuration keys.
    ///
    /// Besides the linear keys, `P_AP_dBm`, `sigma2_U_dBm`, `sigma2_E_dBm` and
    /// `zeta0_dB` are accepted and converted once here. Giving both forms of
    /// the same quantity is an error.
    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let serde_json::Value::Object(mut map) = value else {
            return Err(Error::Config("expected a JSON object".into()));
        };
        const DB_KEYS: [(&str, &str, fn(f64) -> f64); 4] = [
            ("P_AP_dBm", "P_AP", dbm_to_watts),
            ("sigma2_U_dBm", "sigma2_U", dbm_to_watts),
            ("sigma2_E_dBm", "sigma2_E", dbm_to_watts),
            ("zeta0_dB", "zeta0", db_to_linear),
        ];
        for (db_key, lin_key, convert) in DB_KEYS {
            if let Some(v) = map.remove(db_key) {
                if map.contains_key(lin_key) {
                    return Err(Error::Config(format!(
                        "both {db_key} and {lin_key} given"
                    )));
                }
                let db = v
                    .as_f64()
                    .ok_or_else(|| Error::Config(format!("{db_key} must be a number")))?;
                map.insert(lin_key.to_string(), serde_json::json!(convert(db)));
            }
        }
        let cfg: SystemConfig = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
