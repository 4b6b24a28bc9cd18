//! Closed-form evolution of a Gaussian envelope under the comoving-frame
//! equation i dA/dxi = (d^2/dtau^2 + F tau) A.
//!
//! For the initial condition A(tau, 0) = exp(-tau^2/tau0^2) exp(-i p0 tau)
//! the magnitude and phase have closed forms; the phase evaluated at the
//! moving maximum splits into Gouy, Kennard, momentum, and momentum-force
//! cross contributions. These expressions double as the correctness oracle
//! for the spectral solver, so this module is deliberately grid-free.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DimensionlessFrame;

/// A Gaussian wave packet with initial momentum `p0` evolving under the
/// dimensionless effective force `force`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianState {
    frame: DimensionlessFrame,
    p0: f64,
    force: f64,
}

/// Phase at the envelope maximum split into its four contributions:
///
///   gouy            = (1/2) arctan(xi / xi_s)
///   kennard         = -(2/3) F^2 xi^3
///   momentum_linear = -p0^2 xi
///   cross           = -2 p0 F xi^2
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDecomposition {
    pub gouy: f64,
    pub kennard: f64,
    pub momentum_linear: f64,
    pub cross: f64,
    pub total: f64,
}

impl GaussianState {
    pub fn new(frame: DimensionlessFrame, p0: f64, force: f64) -> Self {
        Self { frame, p0, force }
    }

    /// State built directly from the frame's physical parameters: p0 from
    /// the frequency detuning and the force stored on the parameters.
    pub fn from_frame(frame: DimensionlessFrame) -> Self {
        let p0 = frame.params().effective_momentum();
        let force = frame.params().force();
        Self { frame, p0, force }
    }

    pub fn frame(&self) -> &DimensionlessFrame {
        &self.frame
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn force(&self) -> f64 {
        self.force
    }

    /// Classical packet trajectory tau_cm(xi) = 2 p0 xi + F xi^2.
    pub fn tau_at_maximum(&self, xi: f64) -> f64 {
        (2.0 * self.p0 + self.force * xi) * xi
    }

    /// Stretch factor sqrt(1 + (xi/xi_s)^2).
    pub fn stretch(&self, xi: f64) -> f64 {
        self.frame.stretch(xi)
    }

    /// Peak magnitude (1 + xi^2/xi_s^2)^(-1/4) at propagation coordinate xi.
    pub fn peak_magnitude(&self, xi: f64) -> f64 {
        1.0 / self.stretch(xi).sqrt()
    }

    /// |A(tau, xi)|; lies in (0, 1] with the maximum on tau_at_maximum(xi).
    pub fn envelope_magnitude(&self, tau: f64, xi: f64) -> f64 {
        debug_assert!(xi >= 0.0, "propagation coordinate must be non-negative");
        let tau0 = self.frame.tau0();
        let s2 = 1.0 + (xi / self.frame.xi_s()).powi(2);
        let dev = tau - self.tau_at_maximum(xi);
        s2.powf(-0.25) * (-dev * dev / (tau0 * tau0 * s2)).exp()
    }

    /// Unwrapped envelope phase arg A(tau, xi): Gouy term, chirp term, the
    /// force terms -F(tau - 2 p0 xi) xi + F^2 xi^3 / 3, and the momentum
    /// terms -p0 tau + p0^2 xi - p0 F xi^2.
    pub fn envelope_phase(&self, tau: f64, xi: f64) -> f64 {
        debug_assert!(xi >= 0.0, "propagation coordinate must be non-negative");
        let tau0 = self.frame.tau0();
        let xi_s = self.frame.xi_s();
        let p0 = self.p0;
        let f = self.force;
        let ratio = xi / xi_s;
        let s2 = 1.0 + ratio * ratio;
        let dev = tau - self.tau_at_maximum(xi);

        let gouy = 0.5 * ratio.atan();
        let chirp = -ratio * dev * dev / (tau0 * tau0 * s2);
        let force_linear = -f * (tau - 2.0 * p0 * xi) * xi;
        let force_cubic = f * f * xi * xi * xi / 3.0;
        let momentum = -p0 * tau + p0 * p0 * xi - p0 * f * xi * xi;
        gouy + chirp + force_linear + force_cubic + momentum
    }

    /// Complex envelope A = |A| exp(i phi).
    pub fn field(&self, tau: f64, xi: f64) -> Complex64 {
        Complex64::from_polar(self.envelope_magnitude(tau, xi), self.envelope_phase(tau, xi))
    }

    /// Phase at the envelope maximum,
    /// (1/2) arctan(xi/xi_s) - (2/3) F^2 xi^3 - p0^2 xi - 2 p0 F xi^2.
    ///
    /// Identical to `envelope_phase(tau_at_maximum(xi), xi)`.
    pub fn phase_at_maximum(&self, xi: f64) -> f64 {
        self.decompose_phase_at_maximum(xi).total
    }

    /// Term-by-term split of `phase_at_maximum`.
    pub fn decompose_phase_at_maximum(&self, xi: f64) -> PhaseDecomposition {
        debug_assert!(xi >= 0.0, "propagation coordinate must be non-negative");
        let p0 = self.p0;
        let f = self.force;
        let gouy = 0.5 * (xi / self.frame.xi_s()).atan();
        let kennard = -(2.0 / 3.0) * f * f * xi * xi * xi;
        let momentum_linear = -p0 * p0 * xi;
        let cross = -2.0 * p0 * f * xi * xi;
        PhaseDecomposition {
            gouy,
            kennard,
            momentum_linear,
            cross,
            total: gouy + kennard + momentum_linear + cross,
        }
    }

    fn check_comparable(&self, rest: &GaussianState) -> Result<()> {
        if self.frame != rest.frame || self.force != rest.force {
            return Err(Error::InvalidComparison(
                "boost comparison requires identical frame and force".into(),
            ));
        }
        Ok(())
    }

    /// Residual of the amplitude boost identity
    /// |A(tau, xi)| - |A_0(tau - 2 p0 xi, xi)| against the packet `rest`
    /// launched with p0 = 0; vanishes identically.
    pub fn galilean_amplitude_residual(
        &self,
        rest: &GaussianState,
        tau: f64,
        xi: f64,
    ) -> Result<f64> {
        self.check_comparable(rest)?;
        let shifted = tau - 2.0 * self.p0 * xi;
        Ok(self.envelope_magnitude(tau, xi) - rest.envelope_magnitude(shifted, xi))
    }

    /// Residual of the phase boost identity
    /// phi(tau, xi) - [phi_0(tau - 2 p0 xi, xi) - p0 tau + p0^2 xi - p0 F xi^2];
    /// vanishes identically.
    pub fn galilean_phase_residual(
        &self,
        rest: &GaussianState,
        tau: f64,
        xi: f64,
    ) -> Result<f64> {
        self.check_comparable(rest)?;
        let p0 = self.p0;
        let shifted = tau - 2.0 * p0 * xi;
        let boosted = rest.envelope_phase(shifted, xi) - p0 * tau + p0 * p0 * xi
            - p0 * self.force * xi * xi;
        Ok(self.envelope_phase(tau, xi) - boosted)
    }
}
