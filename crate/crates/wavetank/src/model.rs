//! Physical parameters, the deep-water dispersion relation, and the mapping
//! between laboratory coordinates (x, t) and the dimensionless comoving
//! frame (xi, tau) used by every other module.

use crate::error::{Error, Result};

/// Hard upper bound on the wave steepness; beyond this the linear envelope
/// model is not meaningful.
pub const EPSILON_MAX: f64 = 0.3;

/// Steepness above which a warning is attached (the linear approximation
/// degrades well before `EPSILON_MAX`).
pub const EPSILON_WARN: f64 = 0.15;

/// Relative tolerance for the consistency check epsilon = k0 * a0.
const EPSILON_CONSISTENCY_TOL: f64 = 1e-9;

/// Laboratory-frame constants of a wave-packet experiment.
///
/// The carrier frequency omega0 and group velocity c_g are always derived
/// from `k0` and `g` on demand, so the dispersion relation cannot be broken
/// by stale copies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    k0: f64,
    g: f64,
    a0: f64,
    t0: f64,
    omega_detuning: f64,
    epsilon: f64,
    force: f64,
}

/// Derive (omega0, c_g) from the deep-water dispersion relation
/// omega0^2 = k0 * g, c_g = omega0 / (2 k0).
pub fn derive_frequencies(k0: f64, g: f64) -> Result<(f64, f64)> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "carrier wavenumber k0 must be positive, got {k0}"
        )));
    }
    if !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gravitational acceleration g must be positive, got {g}"
        )));
    }
    let omega0 = (k0 * g).sqrt();
    Ok((omega0, omega0 / (2.0 * k0)))
}

impl PhysicalParams {
    /// Validated constructor. `force` is the dimensionless effective force
    /// of the comoving-frame envelope equation, taken as a direct input.
    pub fn new(
        k0: f64,
        g: f64,
        a0: f64,
        t0: f64,
        omega_detuning: f64,
        epsilon: f64,
        force: f64,
    ) -> Result<Self> {
        derive_frequencies(k0, g)?;
        if !(a0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "envelope amplitude a0 must be positive, got {a0}"
            )));
        }
        if !(t0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pulse size t0 must be positive, got {t0}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wave steepness epsilon must be positive, got {epsilon}"
            )));
        }
        if epsilon >= EPSILON_MAX {
            return Err(Error::InvalidParameter(format!(
                "wave steepness epsilon = {epsilon} is outside the linear regime (must be < {EPSILON_MAX})"
            )));
        }
        let steepness = k0 * a0;
        if ((epsilon - steepness) / epsilon).abs() >= EPSILON_CONSISTENCY_TOL {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {epsilon} is inconsistent with k0*a0 = {steepness}"
            )));
        }
        if !omega_detuning.is_finite() || !force.is_finite() {
            return Err(Error::InvalidParameter(
                "omega_detuning and force must be finite".into(),
            ));
        }
        Ok(Self { k0, g, a0, t0, omega_detuning, epsilon, force })
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn omega_detuning(&self) -> f64 {
        self.omega_detuning
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn force(&self) -> f64 {
        self.force
    }

    /// Carrier angular frequency omega0 = sqrt(k0 * g).
    pub fn omega0(&self) -> f64 {
        (self.k0 * self.g).sqrt()
    }

    /// Deep-water group velocity c_g = omega0 / (2 k0).
    pub fn group_velocity(&self) -> f64 {
        self.omega0() / (2.0 * self.k0)
    }

    /// Dimensionless initial momentum p0 = Omega0 / (epsilon * omega0).
    pub fn effective_momentum(&self) -> f64 {
        self.omega_detuning / (self.epsilon * self.omega0())
    }

    /// Copy with a different effective force (used when running the same
    /// packet with and without the external flow).
    pub fn with_force(&self, force: f64) -> Self {
        Self { force, ..*self }
    }

    /// Copy with a different frequency detuning.
    pub fn with_detuning(&self, omega_detuning: f64) -> Self {
        Self { omega_detuning, ..*self }
    }

    /// Non-fatal diagnostics about the parameter regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.epsilon > EPSILON_WARN {
            warnings.push(format!(
                "wave steepness epsilon = {} is above {}; the linear envelope model degrades",
                self.epsilon, EPSILON_WARN
            ));
        }
        warnings
    }
}

/// Conversion rules between laboratory coordinates and the dimensionless
/// comoving frame:
///
///   xi  = epsilon^2 * k0 * x
///   tau = epsilon * omega0 * (x / c_g - t)
///
/// together with the derived scales tau0 = epsilon * omega0 * t0 and
/// xi_s = tau0^2 / 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessFrame {
    params: PhysicalParams,
    tau0: f64,
    xi_s: f64,
}

impl DimensionlessFrame {
    pub fn new(params: PhysicalParams) -> Self {
        let tau0 = params.epsilon() * params.omega0() * params.t0();
        let xi_s = tau0 * tau0 / 4.0;
        Self { params, tau0, xi_s }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Dimensionless initial pulse size tau0 = epsilon * omega0 * t0.
    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Rayleigh-like spreading scale xi_s = tau0^2 / 4.
    pub fn xi_s(&self) -> f64 {
        self.xi_s
    }

    pub fn to_dimensionless(&self, x: f64, t: f64) -> (f64, f64) {
        (self.xi_of(x), self.tau_of(x, t))
    }

    pub fn from_dimensionless(&self, xi: f64, tau: f64) -> (f64, f64) {
        let x = self.x_of(xi);
        (x, self.t_of(x, tau))
    }

    pub fn xi_of(&self, x: f64) -> f64 {
        let p = &self.params;
        p.epsilon() * p.epsilon() * p.k0() * x
    }

    pub fn x_of(&self, xi: f64) -> f64 {
        let p = &self.params;
        xi / (p.epsilon() * p.epsilon() * p.k0())
    }

    pub fn tau_of(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        p.epsilon() * p.omega0() * (x / p.group_velocity() - t)
    }

    pub fn t_of(&self, x: f64, tau: f64) -> f64 {
        let p = &self.params;
        x / p.group_velocity() - tau / (p.epsilon() * p.omega0())
    }

    /// Envelope stretch factor sqrt(1 + (xi/xi_s)^2) at propagation
    /// coordinate xi.
    pub fn stretch(&self, xi: f64) -> f64 {
        let r = xi / self.xi_s;
        (1.0 + r * r).sqrt()
    }
}
