use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Default ratio between the detection bandwidth `bd*kappa` and the
/// squeezing bandwidth `2*kappa*(1+lambda)`.
pub const DEFAULT_WIDE_DETECTION_FACTOR: f64 = 5.0;

/// Physical constants of the noise source, squeezer and detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity amplitude decay rate; fixes the time unit.
    pub kappa: f64,
    /// Pump parameter, below threshold: `0 <= lambda_pump < 1`.
    pub lambda_pump: f64,
    /// Intracavity photon number produced by the classical noise alone
    /// (pump off).
    pub nbar_a: f64,
    /// Classical-noise filter half-width in units of `kappa`.
    pub bc: f64,
    /// Detection filter half-width in units of `kappa`.
    pub bd: f64,
}

impl SystemParams {
    pub fn new(kappa: f64, lambda_pump: f64, nbar_a: f64, bc: f64, bd: f64) -> Result<Self> {
        let p = SystemParams {
            kappa,
            lambda_pump,
            nbar_a,
            bc,
            bd,
        };
        p.validate()?;
        Ok(p)
    }

    /// `lambda = 0.4`, `Bc = 15`, `Bd = 25`, `kappa = 1`.
    pub fn baseline(nbar_a: f64) -> Self {
        SystemParams {
            kappa: 1.0,
            lambda_pump: 0.4,
            nbar_a,
            bc: 15.0,
            bd: 25.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", self.kappa, "kappa > 0"));
        }
        if !(self.lambda_pump >= 0.0) {
            return Err(Error::invalid("lambda_pump", self.lambda_pump, "lambda_pump >= 0"));
        }
        if !(self.lambda_pump < 1.0) {
            return Err(Error::invalid(
                "lambda_pump",
                self.lambda_pump,
                "lambda_pump < 1 (oscillation threshold at 1)",
            ));
        }
        if !(self.nbar_a >= 0.0 && self.nbar_a.is_finite()) {
            return Err(Error::invalid("nbar_a", self.nbar_a, "nbar_a >= 0"));
        }
        if !(self.bc > 0.0 && self.bc.is_finite()) {
            return Err(Error::invalid("bc", self.bc, "bc > 0"));
        }
        if !(self.bd > 0.0 && self.bd.is_finite()) {
            return Err(Error::invalid("bd", self.bd, "bd > 0"));
        }
        Ok(())
    }

    /// Detection bandwidth must exceed the squeezing bandwidth by `factor`.
    pub fn check_wide_detection(&self, factor: f64) -> Result<()> {
        let needed = factor * 2.0 * (1.0 + self.lambda_pump);
        if self.bd < needed {
            return Err(Error::invalid(
                "bd",
                self.bd,
                "bd*kappa >= factor * 2*kappa*(1+lambda) (wide detection bandwidth)",
            ));
        }
        Ok(())
    }

    /// Decay rate of the antisqueezed (X) quadrature, `kappa(1-lambda)`.
    pub fn antisqueezed_rate(&self) -> f64 {
        self.kappa * (1.0 - self.lambda_pump)
    }

    /// Decay rate of the squeezed (Y) quadrature, `kappa(1+lambda)`.
    pub fn squeezed_rate(&self) -> f64 {
        self.kappa * (1.0 + self.lambda_pump)
    }

    pub fn noise_rate(&self) -> f64 {
        self.bc * self.kappa
    }

    pub fn detection_rate(&self) -> f64 {
        self.bd * self.kappa
    }

    /// Ten times the slowest system relaxation time.
    pub fn transient_time(&self) -> f64 {
        10.0 / self.antisqueezed_rate()
    }

    /// Lag at which the narrow feature around `tau = 0` is measured.
    pub fn spike_width(&self) -> f64 {
        crate::estimators::SPIKE_WIDTH_DETECTION_TIMES / self.detection_rate()
    }

    pub fn with_nbar(mut self, nbar_a: f64) -> Self {
        self.nbar_a = nbar_a;
        self
    }
}

/// Measurement-side settings shared by the homodyne, conditional-homodyne
/// and classical-network experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Reflectivity of the beam splitter feeding the start detector.
    pub r: f64,
    /// Coherent offset magnitude. `None` selects the offset whose flux equals
    /// the DPO output flux.
    pub offset_amp: Option<f64>,
    pub offset_phase: f64,
    pub lo_phase: f64,
    pub dt: f64,
    /// Horizon of each trajectory, transient included.
    pub t_max: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub n_traj: usize,
    pub seed: u64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            r: 0.5,
            offset_amp: None,
            offset_phase: FRAC_PI_2,
            lo_phase: FRAC_PI_2,
            dt: 2e-3,
            t_max: 2000.0,
            tau_max: 4.0,
            n_tau: 81,
            n_traj: 64,
            seed: 20_040_615,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.r >= 0.0 && self.r < 1.0) {
            return Err(Error::invalid("r", self.r, "0 <= r < 1"));
        }
        if let Some(amp) = self.offset_amp {
            if !(amp >= 0.0 && amp.is_finite()) {
                return Err(Error::invalid("offset_amp", amp, "offset_amp >= 0"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", self.dt, "dt > 0"));
        }
        if self.dt * params.detection_rate() > 0.1 {
            return Err(Error::invalid(
                "dt",
                self.dt,
                "dt*bd*kappa <= 0.1 (resolve the detection filter)",
            ));
        }
        if !(self.tau_max > 0.0) {
            return Err(Error::invalid("tau_max", self.tau_max, "tau_max > 0"));
        }
        if !(self.tau_max < self.t_max / 4.0) {
            return Err(Error::invalid("tau_max", self.tau_max, "tau_max < t_max/4"));
        }
        if self.n_tau < 3 || self.n_tau.is_multiple_of(2) {
            return Err(Error::invalid(
                "n_tau",
                self.n_tau as f64,
                "n_tau odd and >= 3 (tau = 0 is a bin center)",
            ));
        }
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj", 0.0, "n_traj >= 1"));
        }
        if self.t_max <= params.transient_time() + 2.0 * self.tau_max {
            return Err(Error::invalid(
                "t_max",
                self.t_max,
                "t_max > transient 10/(kappa(1-lambda)) + 2*tau_max",
            ));
        }
        Ok(())
    }

    pub fn tau_grid(&self) -> crate::estimators::TauGrid {
        crate::estimators::TauGrid::new(self.tau_max, self.n_tau)
    }
}
