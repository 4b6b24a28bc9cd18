//! Split-step spectral integrator for the comoving-frame envelope equation
//!
//!   i dA/dxi = (d^2/dtau^2 + F tau) A
//!
//! on a periodic tau grid. One Strang step is a half-step potential
//! multiplier exp(-i F tau dxi / 2), a full kinetic step in spectral space
//! with multiplier exp(+i Omega^2 dxi), and a second potential half-step.
//! The kinetic sign follows from i dA/dxi = d^2A/dtau^2 giving
//! spectrum(xi) = spectrum(0) * exp(+i Omega^2 xi). The potential multiplier
//! uses the true (non-periodic) tau values, so runs must keep the packet
//! inside the boundary margin; leaks abort instead of wrapping around.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::DimensionlessFrame;

/// Relative amplitude allowed at the grid edges of a freshly constructed
/// initial condition.
const INIT_BOUNDARY_TOL: f64 = 1e-8;

/// Relative amplitude in the boundary margin beyond which a propagation is
/// aborted as leaking.
const LEAK_TOL: f64 = 1e-6;

/// Allowed relative norm change across a single step.
const PER_STEP_NORM_TOL: f64 = 1e-12;

/// Maximum number of automatic step halvings after a norm-drift abort.
const MAX_STEP_HALVINGS: u32 = 3;

/// Periodic tau grid on which envelopes are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n: usize,
}

impl GridSpec {
    /// Default grid for a run to `xi_target`: symmetric about tau = 0, with
    /// a tail pad of eight stretched pulse widths plus the largest classical
    /// excursion |2 p0 xi + F xi^2|, and the smallest power-of-two point
    /// count keeping the spacing at or below tau0 / 32.
    pub fn auto(frame: &DimensionlessFrame, p0: f64, force: f64, xi_target: f64) -> Self {
        Self::padded(frame, p0, force, xi_target, 8.0)
    }

    /// Like [`GridSpec::auto`] with an explicit tail pad in units of the
    /// stretched pulse width.
    pub fn padded(
        frame: &DimensionlessFrame,
        p0: f64,
        force: f64,
        xi_target: f64,
        pad_pulses: f64,
    ) -> Self {
        let tau0 = frame.tau0();
        let trajectory = |xi: f64| (2.0 * p0 + force * xi) * xi;
        let mut travel = trajectory(xi_target).abs();
        if force != 0.0 {
            let vertex = -p0 / force;
            if vertex > 0.0 && vertex < xi_target {
                travel = travel.max(trajectory(vertex).abs());
            }
        }
        let pad = pad_pulses * tau0 * frame.stretch(xi_target);
        let half = pad + travel;
        let target_step = tau0 / 32.0;
        let mut n = 16usize;
        while (2.0 * half) / (n as f64) > target_step {
            n *= 2;
        }
        Self { tau_min: -half, tau_max: half, n }
    }

    pub fn with_points(self, n: usize) -> Self {
        Self { n, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 16, got {}",
                self.n
            )));
        }
        if !(self.tau_max > self.tau_min) {
            return Err(Error::InvalidParameter(
                "grid requires tau_max > tau_min".into(),
            ));
        }
        Ok(())
    }
}

/// Step-size and safety settings for a propagation run.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Step in xi. Halved automatically (up to three times) if the run
    /// trips the norm-drift check.
    pub d_xi: f64,
    /// Fraction of the grid on each side treated as a low-amplitude buffer.
    pub boundary_margin: f64,
    /// Maximum relative drift of the discrete norm over a whole run.
    pub norm_drift_tol: f64,
}

impl SolverConfig {
    /// Default configuration for a given frame: d_xi = xi_s / 2000.
    pub fn for_frame(frame: &DimensionlessFrame) -> Self {
        Self {
            d_xi: frame.xi_s() / 2000.0,
            boundary_margin: 0.05,
            norm_drift_tol: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.d_xi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size d_xi must be positive, got {}",
                self.d_xi
            )));
        }
        if !(0.0..0.5).contains(&self.boundary_margin) {
            return Err(Error::InvalidParameter(format!(
                "boundary_margin must lie in [0, 0.5), got {}",
                self.boundary_margin
            )));
        }
        Ok(())
    }
}

/// Complex envelope A(tau) sampled on a uniform grid at a fixed xi.
#[derive(Debug, Clone)]
pub struct EnvelopeField {
    tau_min: f64,
    tau_max: f64,
    xi: f64,
    values: Vec<Complex64>,
}

impl EnvelopeField {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn d_tau(&self) -> f64 {
        (self.tau_max - self.tau_min) / self.values.len() as f64
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.tau_min + i as f64 * self.d_tau()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Discrete norm sum |A|^2 dtau.
    pub fn norm(&self) -> f64 {
        let d_tau = self.d_tau();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * d_tau
    }

    /// Unnormalized forward spectrum of the current samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf
    }

    /// Complex conjugate of every sample; with the force unchanged this
    /// reverses the direction of propagation.
    pub fn conjugate_in_place(&mut self) {
        for v in &mut self.values {
            *v = v.conj();
        }
    }

    fn peak_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Gaussian initial condition A(tau, 0) = exp(-tau^2/tau0^2) exp(-i p0 tau)
/// sampled on `grid`.
pub fn init_gaussian(
    frame: &DimensionlessFrame,
    p0: f64,
    grid: &GridSpec,
) -> Result<EnvelopeField> {
    grid.validate()?;
    let tau0 = frame.tau0();
    let d_tau = (grid.tau_max - grid.tau_min) / grid.n as f64;
    let values: Vec<Complex64> = (0..grid.n)
        .map(|i| {
            let tau = grid.tau_min + i as f64 * d_tau;
            Complex64::from_polar((-tau * tau / (tau0 * tau0)).exp(), -p0 * tau)
        })
        .collect();
    let field = EnvelopeField {
        tau_min: grid.tau_min,
        tau_max: grid.tau_max,
        xi: 0.0,
        values,
    };
    let peak = field.peak_abs();
    let edge = field.values[0].norm().max(field.values[grid.n - 1].norm());
    if edge > INIT_BOUNDARY_TOL * peak {
        return Err(Error::BoundaryLeak(format!(
            "grid too narrow: edge amplitude {:.3e} of peak exceeds {:.0e}",
            edge / peak,
            INIT_BOUNDARY_TOL
        )));
    }
    Ok(field)
}

/// Reusable split-step machinery for one grid/force/step combination. The
/// FFT workspace is owned per propagator, so distinct propagations can run
/// concurrently without shared state.
pub struct Propagator {
    force: f64,
    d_xi: f64,
    boundary_margin: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    tau: Vec<f64>,
    omega_sq: Vec<f64>,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
}

impl Propagator {
    pub fn new(field: &EnvelopeField, force: f64, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = field.n();
        let length = field.tau_max - field.tau_min;
        let tau: Vec<f64> = (0..n).map(|i| field.tau(i)).collect();
        let omega_sq: Vec<f64> = (0..n)
            .map(|i| {
                let k = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                let omega = 2.0 * std::f64::consts::PI * k / length;
                omega * omega
            })
            .collect();
        let mut planner = FftPlanner::new();
        let mut prop = Self {
            force,
            d_xi: config.d_xi,
            boundary_margin: config.boundary_margin,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            tau,
            omega_sq,
            half_potential: Vec::new(),
            kinetic: Vec::new(),
        };
        prop.set_step(config.d_xi);
        Ok(prop)
    }

    pub fn d_xi(&self) -> f64 {
        self.d_xi
    }

    fn set_step(&mut self, d_xi: f64) {
        self.d_xi = d_xi;
        self.half_potential = self
            .tau
            .iter()
            .map(|&t| Complex64::from_polar(1.0, -self.force * t * d_xi / 2.0))
            .collect();
        self.kinetic = self
            .omega_sq
            .iter()
            .map(|&w2| Complex64::from_polar(1.0, w2 * d_xi))
            .collect();
    }

    /// Advance by one full step of the configured d_xi.
    pub fn step(&self, field: &mut EnvelopeField) -> Result<()> {
        self.step_by(field, self.d_xi, &self.half_potential, &self.kinetic)
    }

    fn step_by(
        &self,
        field: &mut EnvelopeField,
        d_xi: f64,
        half_potential: &[Complex64],
        kinetic: &[Complex64],
    ) -> Result<()> {
        let n = field.n();
        if n != self.tau.len() {
            return Err(Error::InvalidParameter(
                "field grid does not match propagator grid".into(),
            ));
        }
        let norm_before = field.norm();
        if !(norm_before > 0.0) || !norm_before.is_finite() {
            return Err(Error::EmptyField);
        }
        let scale = 1.0 / n as f64;
        for (v, m) in field.values.iter_mut().zip(half_potential) {
            *v *= m;
        }
        self.fft.process(&mut field.values);
        for (v, m) in field.values.iter_mut().zip(kinetic) {
            *v *= m;
        }
        self.ifft.process(&mut field.values);
        for (v, m) in field.values.iter_mut().zip(half_potential) {
            *v = *v * m * scale;
        }
        field.xi += d_xi;

        let drift = (field.norm() / norm_before - 1.0).abs();
        if drift > PER_STEP_NORM_TOL {
            return Err(Error::NumericalInstability(format!(
                "norm drifted by {drift:.3e} in one step at xi = {}",
                field.xi
            )));
        }
        self.check_boundary(field)?;
        Ok(())
    }

    /// Advance by an arbitrary (shorter) step; used to land exactly on a
    /// requested xi.
    fn partial_step(&self, field: &mut EnvelopeField, d_xi: f64) -> Result<()> {
        let half: Vec<Complex64> = self
            .tau
            .iter()
            .map(|&t| Complex64::from_polar(1.0, -self.force * t * d_xi / 2.0))
            .collect();
        let kin: Vec<Complex64> = self
            .omega_sq
            .iter()
            .map(|&w2| Complex64::from_polar(1.0, w2 * d_xi))
            .collect();
        self.step_by(field, d_xi, &half, &kin)
    }

    fn check_boundary(&self, field: &EnvelopeField) -> Result<()> {
        let n = field.n();
        let margin = ((self.boundary_margin * n as f64) as usize).min(n / 2);
        if margin == 0 {
            return Ok(());
        }
        let peak = field.peak_abs();
        let worst = field.values[..margin]
            .iter()
            .chain(&field.values[n - margin..])
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if worst > LEAK_TOL * peak {
            return Err(Error::BoundaryLeak(format!(
                "amplitude {:.3e} of peak inside the boundary margin at xi = {}",
                worst / peak,
                field.xi
            )));
        }
        Ok(())
    }

    /// March the field to `xi_target`, shortening the final step to land
    /// exactly; checks cumulative norm drift against `norm_drift_tol`.
    fn run(&self, field: &mut EnvelopeField, xi_target: f64, norm_drift_tol: f64) -> Result<()> {
        let xi_start = field.xi;
        let span = xi_target - xi_start;
        let norm_start = field.norm();
        let full_steps = (span / self.d_xi).floor() as u64;
        for i in 0..full_steps {
            self.step(field)?;
            // recompute instead of accumulating rounding
            field.xi = xi_start + (i + 1) as f64 * self.d_xi;
        }
        let leftover = xi_target - field.xi;
        if leftover > 1e-12 * self.d_xi {
            self.partial_step(field, leftover)?;
        }
        field.xi = xi_target;
        let drift = (field.norm() / norm_start - 1.0).abs();
        if drift > norm_drift_tol {
            return Err(Error::NumericalInstability(format!(
                "cumulative norm drift {drift:.3e} exceeds {norm_drift_tol:.0e}"
            )));
        }
        Ok(())
    }
}

/// Advance `field` by one step of `config.d_xi`.
pub fn step(field: &mut EnvelopeField, force: f64, config: &SolverConfig) -> Result<()> {
    Propagator::new(field, force, config)?.step(field)
}

/// Propagate to `xi_target`. On a norm-drift abort the run restarts from the
/// input field with the step halved, at most `MAX_STEP_HALVINGS` times.
pub fn propagate(
    field: &EnvelopeField,
    force: f64,
    xi_target: f64,
    config: &SolverConfig,
) -> Result<EnvelopeField> {
    config.validate()?;
    if xi_target < field.xi {
        return Err(Error::InvalidParameter(format!(
            "xi_target = {xi_target} lies behind the field at xi = {}",
            field.xi
        )));
    }
    if xi_target == field.xi {
        return Ok(field.clone());
    }
    let mut attempt_config = *config;
    let mut halvings = 0;
    loop {
        let mut work = field.clone();
        let propagator = Propagator::new(&work, force, &attempt_config)?;
        match propagator.run(&mut work, xi_target, config.norm_drift_tol) {
            Ok(()) => return Ok(work),
            Err(Error::NumericalInstability(msg)) if halvings < MAX_STEP_HALVINGS => {
                halvings += 1;
                attempt_config.d_xi /= 2.0;
                let _ = msg;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Scalar diagnostics of a field snapshot.
#[derive(Debug, Clone, Copy)]
pub struct Observables {
    /// Sub-grid peak location from a three-point parabola in log amplitude.
    pub peak_tau: f64,
    /// First moment of |A|^2.
    pub centroid_tau: f64,
    /// Standard deviation of |A|^2.
    pub rms_width: f64,
    /// Phase interpolated at the peak, reported in (-pi, pi].
    pub peak_phase: f64,
}

/// Peak, centroid, width, and peak phase of a field.
pub fn sample_observables(field: &EnvelopeField) -> Result<Observables> {
    let n = field.n();
    let d_tau = field.d_tau();
    let abs: Vec<f64> = field.values.iter().map(|v| v.norm()).collect();
    let peak = abs.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::EmptyField);
    }
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, &a) in abs.iter().enumerate() {
        let w = a * a;
        let tau = field.tau(i);
        m0 += w;
        m1 += w * tau;
        m2 += w * tau * tau;
    }
    let centroid_tau = m1 / m0;
    let rms_width = (m2 / m0 - centroid_tau * centroid_tau).max(0.0).sqrt();

    let pk = abs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if pk == 0 || pk == n - 1 {
        return Err(Error::BoundaryLeak(
            "envelope maximum sits on the grid edge".into(),
        ));
    }
    // three-point parabola in log amplitude: exact for Gaussian envelopes
    let (y0, y1, y2) = (abs[pk - 1].ln(), abs[pk].ln(), abs[pk + 1].ln());
    let denom = y0 - 2.0 * y1 + y2;
    let delta = if denom < 0.0 { (y0 - y2) / (2.0 * denom) } else { 0.0 };
    let peak_tau = field.tau(pk) + delta * d_tau;

    let center = field.values[pk].arg();
    let unwrap_to = |angle: f64, reference: f64| {
        let mut a = angle;
        while a - reference > std::f64::consts::PI {
            a -= 2.0 * std::f64::consts::PI;
        }
        while a - reference < -std::f64::consts::PI {
            a += 2.0 * std::f64::consts::PI;
        }
        a
    };
    let p0 = unwrap_to(field.values[pk - 1].arg(), center);
    let p2 = unwrap_to(field.values[pk + 1].arg(), center);
    let peak_phase =
        center + delta * (p2 - p0) / 2.0 + delta * delta * (p0 - 2.0 * center + p2) / 2.0;

    Ok(Observables { peak_tau, centroid_tau, rms_width, peak_phase })
}

/// Field snapshot as CSV text: a metadata line recording xi, F, p0 and the
/// grid, then rows (tau, re_A, im_A, abs_A, phase_unwrapped).
pub fn snapshot_csv(field: &EnvelopeField, force: f64, p0: f64) -> String {
    let fmt = crate::csvio::fmt_f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# xi={} F={} p0={} n={} tau_min={} tau_max={}",
        fmt(field.xi),
        fmt(force),
        fmt(p0),
        field.n(),
        fmt(field.tau_min),
        fmt(field.tau_max)
    );
    out.push_str("tau,re_A,im_A,abs_A,phase_unwrapped\n");
    let peak = field.peak_abs();
    let mut last_phase = 0.0f64;
    let mut anchored = false;
    for (i, v) in field.values.iter().enumerate() {
        let a = v.norm();
        let phase = if a > 1e-14 * peak {
            let raw = v.arg();
            let unwrapped = if anchored {
                let mut p = raw;
                while p - last_phase > std::f64::consts::PI {
                    p -= 2.0 * std::f64::consts::PI;
                }
                while p - last_phase < -std::f64::consts::PI {
                    p += 2.0 * std::f64::consts::PI;
                }
                p
            } else {
                anchored = true;
                raw
            };
            last_phase = unwrapped;
            unwrapped
        } else {
            last_phase
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt(field.tau(i)),
            fmt(v.re),
            fmt(v.im),
            fmt(a),
            fmt(phase)
        );
    }
    out
}
