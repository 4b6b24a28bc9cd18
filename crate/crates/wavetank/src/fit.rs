//! Trajectory and phase-curve analysis: quadratic center-of-mass fits
//! recovering the group velocity and the effective force, and phase
//! difference curves isolating the force-dependent contributions.

use crate::error::{Error, Result};
use crate::model::{DimensionlessFrame, PhysicalParams};
use crate::phase::unwrap_step;

/// Result of the quadratic trajectory fit <t>(x) = a1 x + a2 x^2.
///
/// The recovered constants follow from the fit coefficients:
/// c_g = 1 / (a1 + 2 Omega0 / g) and F = -(omega0 / (eps^3 k0^2)) a2.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryFit {
    pub a1: f64,
    pub a2: f64,
    /// Root-mean-square residual against the fitted model.
    pub residual_rms: f64,
    pub c_g_recovered: f64,
    pub f_recovered: f64,
}

/// Trajectory fit with a free constant term; a significant intercept points
/// at misaligned synthesis rather than physics.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryDiagnostic {
    pub intercept: f64,
    pub a1: f64,
    pub a2: f64,
    pub residual_rms: f64,
}

fn check_design(points: &[(f64, f64)]) -> Result<()> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 distinct gauge positions, got {}",
            xs.len()
        )));
    }
    Ok(())
}

fn residual_rms(points: &[(f64, f64)], model: impl Fn(f64) -> f64) -> f64 {
    let ss: f64 = points
        .iter()
        .map(|&(x, t)| {
            let r = t - model(x);
            r * r
        })
        .sum();
    (ss / points.len() as f64).sqrt()
}

/// Least-squares fit of (x, <t>) samples to a1 x + a2 x^2 (no constant
/// term: the packet is launched at x = 0, t = 0), then inversion to the
/// group velocity and effective force using the run parameters.
pub fn fit_trajectory(points: &[(f64, f64)], params: &PhysicalParams) -> Result<TrajectoryFit> {
    check_design(points)?;
    let (mut s2, mut s3, mut s4, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, t) in points {
        let x2 = x * x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
        b1 += x * t;
        b2 += x2 * t;
    }
    let det = s2 * s4 - s3 * s3;
    if det.abs() <= 1e-12 * s2 * s4 {
        return Err(Error::DegenerateFit("gauge positions are collinear in the design".into()));
    }
    let a1 = (b1 * s4 - b2 * s3) / det;
    let a2 = (s2 * b2 - s3 * b1) / det;

    let g = params.g();
    let omega0 = params.omega0();
    let eps = params.epsilon();
    let k0 = params.k0();
    let c_g_recovered = 1.0 / (a1 + 2.0 * params.omega_detuning() / g);
    let f_recovered = -(omega0 / (eps * eps * eps * k0 * k0)) * a2;
    Ok(TrajectoryFit {
        a1,
        a2,
        residual_rms: residual_rms(points, |x| a1 * x + a2 * x * x),
        c_g_recovered,
        f_recovered,
    })
}

/// Diagnostic three-parameter fit a0 + a1 x + a2 x^2.
pub fn fit_trajectory_diagnostic(points: &[(f64, f64)]) -> Result<TrajectoryDiagnostic> {
    check_design(points)?;
    // normal equations for the basis {1, x, x^2}
    let mut s = [0.0f64; 5];
    let mut b = [0.0f64; 3];
    for &(x, t) in points {
        let mut xp = 1.0;
        for (k, slot) in s.iter_mut().enumerate() {
            *slot += xp;
            if k < 4 {
                xp *= x;
            }
        }
        b[0] += t;
        b[1] += t * x;
        b[2] += t * x * x;
    }
    let mut m = [
        [s[0], s[1], s[2], b[0]],
        [s[1], s[2], s[3], b[1]],
        [s[2], s[3], s[4], b[2]],
    ];
    // Gaussian elimination with partial pivoting
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &bi| m[a][col].abs().total_cmp(&m[bi][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        if m[col][col].abs() <= 1e-12 * s[0].max(s[4]) {
            return Err(Error::DegenerateFit("singular design matrix".into()));
        }
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut coeff = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = m[row][3];
        for k in row + 1..3 {
            acc -= m[row][k] * coeff[k];
        }
        coeff[row] = acc / m[row][row];
    }
    let [c0, c1, c2] = coeff;
    Ok(TrajectoryDiagnostic {
        intercept: c0,
        a1: c1,
        a2: c2,
        residual_rms: residual_rms(points, |x| c0 + c1 * x + c2 * x * x),
    })
}

/// How phase-at-peak samples arriving at the curve builder are referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnwrapPolicy {
    /// Samples are principal values; recover continuity by sequential
    /// unwrapping along increasing x (requires inter-gauge phase steps
    /// below pi).
    ChainUnwrap,
    /// Samples are already continuous in x (closed-form values).
    AlreadyContinuous,
}

/// Phase-at-maximum curves with and without the external flow, their
/// difference, and the closed-form model of that difference,
/// -(2/3) F^2 xi^3 - 2 p0 F xi^2.
#[derive(Debug, Clone)]
pub struct PhaseCurve {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub phi_with_flow: Vec<f64>,
    pub phi_without_flow: Vec<f64>,
    pub difference: Vec<f64>,
    pub model_difference: Vec<f64>,
    pub max_deviation: f64,
    /// False when the gauge spacing predicts inter-gauge phase steps too
    /// close to pi for sequential unwrapping to be trustworthy.
    pub unwrap_reliable: bool,
}

fn checked_positions(
    with_flow: &[(f64, f64)],
    without_flow: &[(f64, f64)],
) -> Result<Vec<f64>> {
    if with_flow.len() != without_flow.len() || with_flow.is_empty() {
        return Err(Error::InvalidComparison(
            "flow and no-flow gauge sets must cover the same positions".into(),
        ));
    }
    let mut xs = Vec::with_capacity(with_flow.len());
    let mut prev = f64::NEG_INFINITY;
    for (a, b) in with_flow.iter().zip(without_flow) {
        if (a.0 - b.0).abs() > 1e-9 * a.0.abs().max(1.0) {
            return Err(Error::InvalidComparison(format!(
                "gauge positions differ: {} vs {}",
                a.0, b.0
            )));
        }
        if a.0 <= prev {
            return Err(Error::InvalidComparison(
                "gauge positions must be strictly increasing".into(),
            ));
        }
        prev = a.0;
        xs.push(a.0);
    }
    Ok(xs)
}

fn unwrap_curve(values: &[(f64, f64)], policy: UnwrapPolicy) -> Vec<f64> {
    let mut out: Vec<f64> = values.iter().map(|v| v.1).collect();
    if policy == UnwrapPolicy::ChainUnwrap {
        crate::phase::unwrap_in_place(&mut out);
    }
    out
}

/// Largest phase step between adjacent gauges predicted by the closed form,
/// used to judge whether chain unwrapping is safe.
fn predicted_max_step(xi: &[f64], frame: &DimensionlessFrame, p0: f64, force: f64) -> f64 {
    let state = crate::analytic::GaussianState::new(*frame, p0, force);
    xi.windows(2)
        .map(|w| (state.phase_at_maximum(w[1]) - state.phase_at_maximum(w[0])).abs())
        .fold(0.0, f64::max)
}

/// Build the phase-difference curve from per-gauge phase-at-peak samples
/// (x, phase) of the runs with and without the external flow.
pub fn build_phase_curves(
    with_flow: &[(f64, f64)],
    without_flow: &[(f64, f64)],
    frame: &DimensionlessFrame,
    p0: f64,
    force: f64,
    policy: UnwrapPolicy,
) -> Result<PhaseCurve> {
    let x = checked_positions(with_flow, without_flow)?;
    let xi: Vec<f64> = x.iter().map(|&xv| frame.xi_of(xv)).collect();
    let phi_with_flow = unwrap_curve(with_flow, policy);
    let phi_without_flow = unwrap_curve(without_flow, policy);
    let difference: Vec<f64> = phi_with_flow
        .iter()
        .zip(&phi_without_flow)
        .map(|(w, o)| w - o)
        .collect();
    let model_difference: Vec<f64> = xi
        .iter()
        .map(|&xi| -(2.0 / 3.0) * force * force * xi * xi * xi - 2.0 * p0 * force * xi * xi)
        .collect();
    let max_deviation = difference
        .iter()
        .zip(&model_difference)
        .map(|(d, m)| (d - m).abs())
        .fold(0.0, f64::max);
    let unwrap_reliable = policy == UnwrapPolicy::AlreadyContinuous
        || predicted_max_step(&xi, frame, p0, force)
            .max(predicted_max_step(&xi, frame, p0, 0.0))
            < 0.95 * std::f64::consts::PI;
    Ok(PhaseCurve {
        x,
        xi,
        phi_with_flow,
        phi_without_flow,
        difference,
        model_difference,
        max_deviation,
        unwrap_reliable,
    })
}

/// Estimate of p0^2 from the slope of the free-propagation phase.
#[derive(Debug, Clone, Copy)]
pub struct MomentumFit {
    pub p0_squared: f64,
    /// 95% confidence half-width of the estimate.
    pub ci_halfwidth: f64,
}

/// Recover p0^2 from free-propagation (F = 0) phase-at-peak samples: after
/// subtracting the Gouy term, the remaining phase is -p0^2 xi and a linear
/// fit through the origin returns the slope.
pub fn recover_momentum_phase(
    gauges: &[(f64, f64)],
    frame: &DimensionlessFrame,
    policy: UnwrapPolicy,
) -> Result<MomentumFit> {
    if gauges.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 gauges, got {}",
            gauges.len()
        )));
    }
    let phases = unwrap_curve(gauges, policy);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut pairs = Vec::with_capacity(gauges.len());
    for (&(x, _), &phase) in gauges.iter().zip(&phases) {
        let xi = frame.xi_of(x);
        let gouy = 0.5 * (xi / frame.xi_s()).atan();
        let y = phase - gouy;
        sxx += xi * xi;
        sxy += xi * y;
        pairs.push((xi, y));
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all gauges sit at x = 0".into()));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = pairs.iter().map(|&(xi, y)| (y - slope * xi).powi(2)).sum();
    let sigma_sq = ss_res / (pairs.len() - 1) as f64;
    Ok(MomentumFit {
        p0_squared: -slope,
        ci_halfwidth: 1.96 * (sigma_sq / sxx).sqrt(),
    })
}

/// Sequentially unwrap raw per-gauge phases against the previous gauge.
/// Exposed for callers assembling curves incrementally.
pub fn chain_unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = phases.to_vec();
    for i in 1..out.len() {
        out[i] = unwrap_step(out[i - 1], out[i]);
    }
    out
}
