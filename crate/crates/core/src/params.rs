use crate::error::{Result, VemError};

/// Physical coefficients of the coupled bulk–plate system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Fluid density.
    pub rho_f: f64,
    /// Viscosity.
    pub mu: f64,
    /// Slip rate.
    pub gamma: f64,
    /// Plate inertial parameter.
    pub rho_p: f64,
    /// Flexural rigidity.
    pub d: f64,
    /// Biot–Willis coefficient.
    pub alpha: f64,
    /// Storativity.
    pub c0: f64,
    /// Permeability.
    pub kappa: f64,
    /// Time step.
    pub tau: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::unity()
    }
}

impl ModelParams {
    pub fn unity() -> Self {
        Self {
            rho_f: 1.0,
            mu: 1.0,
            gamma: 1.0,
            rho_p: 1.0,
            d: 1.0,
            alpha: 1.0,
            c0: 1.0,
            kappa: 1.0,
            tau: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_f", self.rho_f),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("rho_p", self.rho_p),
            ("D", self.d),
            ("alpha", self.alpha),
            ("kappa", self.kappa),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VemError::Config(format!("parameter {name} must be positive, got {v}")));
            }
        }
        if !(self.c0 >= 0.0 && self.c0.is_finite()) {
            return Err(VemError::Config(format!(
                "parameter c0 must be non-negative, got {}",
                self.c0
            )));
        }
        Ok(())
    }

    /// Sets a parameter by its config key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "rho_f" => &mut self.rho_f,
            "mu" => &mut self.mu,
            "gamma" => &mut self.gamma,
            "rho_p" => &mut self.rho_p,
            "D" | "d" => &mut self.d,
            "alpha" => &mut self.alpha,
            "c0" => &mut self.c0,
            "kappa" => &mut self.kappa,
            "tau" => &mut self.tau,
            _ => return Err(VemError::Config(format!("unknown parameter '{key}'"))),
        };
        *slot = value;
        Ok(())
    }
}
