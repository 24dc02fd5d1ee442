use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("coil geometry: {0}")]
    Geometry(String),

    #[error("point ({x}, {y}, {z}) lies inside the magnet body")]
    InsideMagnet { x: f64, y: f64, z: f64 },

    #[error("flux quadrature did not converge after {levels} refinements (last relative change {last_change:.3e})")]
    Quadrature { levels: usize, last_change: f64 },

    #[error("transduction derivative did not converge (step {step:.3e} m, last relative change {last_change:.3e})")]
    Derivative { step: f64, last_change: f64 },

    #[error("integration produced a non-finite state at step {step} (t = {time:.6} s, f = {frequency_hz:.4} Hz)")]
    BlowUp {
        step: usize,
        time: f64,
        frequency_hz: f64,
    },

    #[error("integration contract violated: {0}")]
    Resolution(String),

    #[error("steady state window too short: {cycles:.1} forcing cycles retained, at least 50 required")]
    ShortWindow { cycles: f64 },

    #[error("steady state not reached: last two cycle amplitudes differ by {relative_change:.3e}")]
    Unsettled { relative_change: f64 },

    #[error("sweep range: {0}")]
    SweepRange(String),

    #[error("response: {0}")]
    Response(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("scaling study: {0}")]
    Scaling(String),

    #[error("calibration infeasible: {0}")]
    Calibration(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration rather than
    /// by the model.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter { .. })
    }
}

pub(crate) fn require(
    ok: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else if !value.is_finite() {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
