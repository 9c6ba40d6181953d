//! Gas constants shared by all component models.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GasError {
    #[error("gas property `{0}` must be strictly positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("heat capacity ratio c_p/c_v must exceed 1, got {0}")]
    RatioNotAboveOne(f64),
}

/// Constant gas properties: specific gas constant, reference temperature,
/// compressibility factor, specific heats and gravity. All SI.
#[derive(Debug, Clone, PartialEq)]
pub struct GasProperties {
    /// Specific gas constant \[m²/(s²K)\]
    pub r_s: f64,
    /// Constant reference temperature \[K\]
    pub t_0: f64,
    /// Constant compressibility factor \[1\]
    pub z_0: f64,
    /// Specific heat at constant pressure \[J/(kg K)\]
    pub c_p: f64,
    /// Specific heat at constant volume \[J/(kg K)\]
    pub c_v: f64,
    /// Gravity \[m/s²\]
    pub g: f64,
}

impl GasProperties {
    pub fn new(r_s: f64, t_0: f64, z_0: f64, c_p: f64, c_v: f64, g: f64) -> Result<Self, GasError> {
        let positives = [
            ("r_s", r_s),
            ("t_0", t_0),
            ("z_0", z_0),
            ("c_p", c_p),
            ("c_v", c_v),
            ("g", g),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(GasError::NonPositive(name, value));
            }
        }
        if c_p / c_v <= 1.0 {
            return Err(GasError::RatioNotAboveOne(c_p / c_v));
        }
        Ok(Self {
            r_s,
            t_0,
            z_0,
            c_p,
            c_v,
            g,
        })
    }

    /// Heat capacity ratio μ = c_p/c_v.
    pub fn mu(&self) -> f64 {
        self.c_p / self.c_v
    }

    /// The recurring product R_s·T_0·z_0 \[m²/s²\].
    pub fn rtz(&self) -> f64 {
        self.r_s * self.t_0 * self.z_0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_physical_gas() {
        let gas = GasProperties::new(518.3, 293.15, 0.9, 2225.3, 1707.0, 9.81).unwrap();
        assert!((gas.mu() - 2225.3 / 1707.0).abs() < 1e-12);
        assert!((gas.rtz() - 518.3 * 293.15 * 0.9).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_and_bad_ratio() {
        assert!(GasProperties::new(0.0, 293.0, 0.9, 2225.0, 1707.0, 9.81).is_err());
        assert!(GasProperties::new(518.3, 293.0, 0.9, 1000.0, 1707.0, 9.81).is_err());
    }
}
