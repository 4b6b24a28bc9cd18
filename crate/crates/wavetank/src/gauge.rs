//! Virtual wave gauges: synthesis of laboratory-frame surface-elevation
//! records eta(t) at a fixed position, and recovery of envelope and phase
//! from real records through the analytic-signal (Hilbert) method.
//!
//! A record stores eta(t, x) = a0 |A| cos(k0 x - omega0 t + phi). Its
//! analytic signal is |A| a0 exp(-i (k0 x - omega0 t + phi)) because the
//! carrier phase decreases with time, so demodulation reports the
//! propagating-wave phase, the negated argument of the analytic signal;
//! subtracting the carrier k0 x - omega0 t then leaves phi directly.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::analytic::GaussianState;
use crate::error::{Error, Result};
use crate::exec;
use crate::model::DimensionlessFrame;
use crate::phase::unwrap_step;

/// Envelope fraction below which the phase is not trusted.
const PHASE_GATE: f64 = 0.1;

/// Required relative smallness of eta at the record ends.
const END_AMPLITUDE_TOL: f64 = 1e-4;

/// Uniform sampling description for one gauge record.
#[derive(Debug, Clone, Copy)]
pub struct SamplingSpec {
    /// Sample rate in Hz.
    pub fs: f64,
    /// Time of the first sample in s.
    pub t_start: f64,
    /// Number of samples.
    pub n: usize,
}

impl SamplingSpec {
    /// Default sampling for a packet passing the gauge at `x`: forty samples
    /// per carrier period, centered on the classical arrival time, spanning
    /// six stretched pulse lengths to either side.
    pub fn auto(frame: &DimensionlessFrame, p0: f64, force: f64, x: f64) -> Self {
        let params = frame.params();
        let omega0 = params.omega0();
        let fs = 40.0 * omega0 / TAU;
        let xi = frame.xi_of(x);
        let tau_cm = (2.0 * p0 + force * xi) * xi;
        let t_center = frame.t_of(x, tau_cm);
        let half_width = 6.0 * params.t0() * frame.stretch(xi);
        let n = (2.0 * half_width * fs).ceil() as usize + 1;
        Self { fs, t_start: t_center - half_width, n }
    }
}

/// Real surface-elevation time series at a fixed gauge position.
#[derive(Debug, Clone)]
pub struct GaugeRecord {
    x: f64,
    fs: f64,
    t_start: f64,
    k0: f64,
    omega0: f64,
    eta: Vec<f64>,
}

impl GaugeRecord {
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 / self.fs
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Build a record from raw samples (e.g. external measurements).
    pub fn from_samples(
        x: f64,
        fs: f64,
        t_start: f64,
        k0: f64,
        omega0: f64,
        eta: Vec<f64>,
    ) -> Result<Self> {
        if !(fs > 0.0) || eta.len() < 4 {
            return Err(Error::Sampling(
                "a record needs a positive sample rate and at least 4 samples".into(),
            ));
        }
        Ok(Self { x, fs, t_start, k0, omega0, eta })
    }

    /// CSV form: metadata line (x, fs, k0, omega0), column header, then
    /// rows (t, eta) with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let fmt = crate::csvio::fmt_f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# x={} fs={} k0={} omega0={}",
            fmt(self.x),
            fmt(self.fs),
            fmt(self.k0),
            fmt(self.omega0)
        );
        out.push_str("t,eta\n");
        for (i, &e) in self.eta.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt(self.time(i)), fmt(e));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (line_no, meta_line) = lines
            .next()
            .ok_or_else(|| Error::Config { line: 1, message: "empty gauge CSV".into() })?;
        let meta = crate::csvio::parse_meta(meta_line);
        let x = crate::csvio::meta_value(&meta, "x", line_no + 1)?;
        let fs = crate::csvio::meta_value(&meta, "fs", line_no + 1)?;
        let k0 = crate::csvio::meta_value(&meta, "k0", line_no + 1)?;
        let omega0 = crate::csvio::meta_value(&meta, "omega0", line_no + 1)?;
        let mut t_values = Vec::new();
        let mut eta = Vec::new();
        for (idx, line) in lines {
            if idx == 1 {
                continue; // column header
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let t = crate::csvio::parse_f64(cols.next().unwrap_or(""), idx + 1)?;
            let e = crate::csvio::parse_f64(cols.next().unwrap_or(""), idx + 1)?;
            t_values.push(t);
            eta.push(e);
        }
        let record = Self::from_samples(x, fs, *t_values.first().unwrap_or(&0.0), k0, omega0, eta)?;
        let dt = 1.0 / fs;
        for (i, &t) in t_values.iter().enumerate() {
            if (t - record.time(i)).abs() > 1e-9 * dt.max(t.abs()) {
                return Err(Error::Sampling(format!(
                    "non-uniform sampling at row {i}: t = {t}"
                )));
            }
        }
        Ok(record)
    }
}

/// Demodulated gauge record: envelope, total propagating-wave phase, and
/// the residual phase after carrier removal, with a per-sample confidence
/// flag (false where the envelope gate forced extrapolation).
#[derive(Debug, Clone)]
pub struct DemodulatedRecord {
    x: f64,
    fs: f64,
    t_start: f64,
    k0: f64,
    omega0: f64,
    envelope: Vec<f64>,
    phase_total: Vec<f64>,
    phase_residual: Vec<f64>,
    confidence: Vec<bool>,
}

impl DemodulatedRecord {
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n(&self) -> usize {
        self.envelope.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 / self.fs
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn phase_total(&self) -> &[f64] {
        &self.phase_total
    }

    pub fn phase_residual(&self) -> &[f64] {
        &self.phase_residual
    }

    pub fn confidence(&self) -> &[bool] {
        &self.confidence
    }

    pub fn to_csv(&self) -> String {
        let fmt = crate::csvio::fmt_f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# x={} fs={} k0={} omega0={}",
            fmt(self.x),
            fmt(self.fs),
            fmt(self.k0),
            fmt(self.omega0)
        );
        out.push_str("t,envelope,phase_total,phase_residual,confidence\n");
        for i in 0..self.n() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt(self.time(i)),
                fmt(self.envelope[i]),
                fmt(self.phase_total[i]),
                fmt(self.phase_residual[i]),
                u8::from(self.confidence[i])
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (line_no, meta_line) = lines
            .next()
            .ok_or_else(|| Error::Config { line: 1, message: "empty demodulated CSV".into() })?;
        let meta = crate::csvio::parse_meta(meta_line);
        let x = crate::csvio::meta_value(&meta, "x", line_no + 1)?;
        let fs = crate::csvio::meta_value(&meta, "fs", line_no + 1)?;
        let k0 = crate::csvio::meta_value(&meta, "k0", line_no + 1)?;
        let omega0 = crate::csvio::meta_value(&meta, "omega0", line_no + 1)?;
        let mut t_start = 0.0;
        let mut envelope = Vec::new();
        let mut phase_total = Vec::new();
        let mut phase_residual = Vec::new();
        let mut confidence = Vec::new();
        for (idx, line) in lines {
            if idx == 1 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Config {
                    line: idx + 1,
                    message: format!("expected 5 columns, got {}", cols.len()),
                });
            }
            let t = crate::csvio::parse_f64(cols[0], idx + 1)?;
            if envelope.is_empty() {
                t_start = t;
            }
            envelope.push(crate::csvio::parse_f64(cols[1], idx + 1)?);
            phase_total.push(crate::csvio::parse_f64(cols[2], idx + 1)?);
            phase_residual.push(crate::csvio::parse_f64(cols[3], idx + 1)?);
            confidence.push(cols[4].trim() == "1");
        }
        Ok(Self {
            x,
            fs,
            t_start,
            k0,
            omega0,
            envelope,
            phase_total,
            phase_residual,
            confidence,
        })
    }
}

/// Synthesize the surface elevation seen by a gauge at `x`:
/// eta(t) = a0 |A(tau, xi)| cos(k0 x - omega0 t + phi(tau, xi)).
pub fn synthesize_gauge(
    frame: &DimensionlessFrame,
    p0: f64,
    force: f64,
    x: f64,
    spec: &SamplingSpec,
) -> Result<GaugeRecord> {
    let params = frame.params();
    let omega0 = params.omega0();
    let detuning = (p0 * params.epsilon() * omega0).abs();
    if spec.fs <= 4.0 * (omega0 + detuning) / TAU {
        return Err(Error::Sampling(format!(
            "sample rate {} Hz does not oversample the carrier of {} rad/s",
            spec.fs, omega0
        )));
    }
    if spec.n < 4 {
        return Err(Error::Sampling("record too short".into()));
    }
    let state = GaussianState::new(*frame, p0, force);
    let xi = frame.xi_of(x);
    let k0 = params.k0();
    let a0 = params.a0();
    let eta: Vec<f64> = (0..spec.n)
        .map(|i| {
            let t = spec.t_start + i as f64 / spec.fs;
            let tau = frame.tau_of(x, t);
            let carrier = k0 * x - omega0 * t;
            a0 * state.envelope_magnitude(tau, xi) * (carrier + state.envelope_phase(tau, xi)).cos()
        })
        .collect();
    let peak = eta.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let worst_end = eta[0].abs().max(eta[spec.n - 1].abs());
    if worst_end > END_AMPLITUDE_TOL * peak {
        return Err(Error::Sampling(format!(
            "record does not cover the packet: end amplitude is {:.2e} of the maximum",
            worst_end / peak
        )));
    }
    GaugeRecord::from_samples(x, spec.fs, spec.t_start, k0, omega0, eta)
}

/// Synthesize one record per position (default sampling), in parallel when
/// the `parallel` feature is enabled.
pub fn synthesize_gauges(
    frame: &DimensionlessFrame,
    p0: f64,
    force: f64,
    positions: &[f64],
) -> Result<Vec<GaugeRecord>> {
    exec::try_map(positions, |&x| {
        let spec = SamplingSpec::auto(frame, p0, force, x);
        synthesize_gauge(frame, p0, force, x, &spec)
    })
}

/// Frequency-domain analytic signal: zero the negative-frequency bins,
/// double the positive ones, keep DC and Nyquist unscaled. The real part of
/// the result reproduces the input.
pub fn analytic_signal(record: &GaugeRecord) -> Result<Vec<Complex64>> {
    let n = record.n();
    let mut buf: Vec<Complex64> = record.eta.iter().map(|&e| Complex64::new(e, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (i, v) in buf.iter_mut().enumerate() {
        if i == 0 || (n % 2 == 0 && i == half) {
            // DC and Nyquist stay
        } else if i < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}

/// Recover envelope and phase from a gauge record.
///
/// The total phase is unwrapped over the contiguous region around the
/// envelope peak where the envelope exceeds 10% of its maximum; outside
/// that gate the residual is bridged by linear extrapolation and flagged
/// low-confidence. The residual is reported with its value at the peak
/// reduced to (-pi, pi]; absolute multiples of 2 pi are not observable
/// from a single record.
pub fn demodulate(record: &GaugeRecord, frame: &DimensionlessFrame) -> Result<DemodulatedRecord> {
    let params = frame.params();
    if (record.k0 - params.k0()).abs() > 1e-9 * params.k0()
        || (record.omega0 - params.omega0()).abs() > 1e-9 * params.omega0()
    {
        return Err(Error::InvalidComparison(
            "record carrier metadata does not match the frame".into(),
        ));
    }
    let z = analytic_signal(record)?;
    let n = record.n();
    let envelope: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    let peak_env = envelope.iter().cloned().fold(0.0, f64::max);
    if !(peak_env > 0.0) {
        return Err(Error::AmbiguousPacket("record is identically zero".into()));
    }
    let pk = envelope
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let mut lo = pk;
    while lo > 0 && envelope[lo - 1] >= PHASE_GATE * peak_env {
        lo -= 1;
    }
    let mut hi = pk;
    while hi < n - 1 && envelope[hi + 1] >= PHASE_GATE * peak_env {
        hi += 1;
    }

    let carrier = |i: usize| record.k0 * record.x - record.omega0 * record.time(i);
    let mut residual = vec![0.0f64; n];
    // propagating-wave phase is the negated analytic-signal argument
    let mut prev = -z[lo].arg();
    residual[lo] = prev - carrier(lo);
    for i in lo + 1..=hi {
        let theta = unwrap_step(prev, -z[i].arg());
        residual[i] = theta - carrier(i);
        prev = theta;
    }
    let shift = TAU * (residual[pk] / TAU).round();
    for r in residual[lo..=hi].iter_mut() {
        *r -= shift;
    }
    // bridge the gated-out tails with the edge slope
    let dt = 1.0 / record.fs;
    if lo > 0 {
        let slope = if hi > lo { (residual[lo + 1] - residual[lo]) / dt } else { 0.0 };
        for i in (0..lo).rev() {
            residual[i] = residual[lo] - slope * (lo - i) as f64 * dt;
        }
    }
    if hi < n - 1 {
        let slope = if hi > lo { (residual[hi] - residual[hi - 1]) / dt } else { 0.0 };
        for i in hi + 1..n {
            residual[i] = residual[hi] + slope * (i - hi) as f64 * dt;
        }
    }
    let phase_total: Vec<f64> = (0..n).map(|i| residual[i] + carrier(i)).collect();
    let confidence: Vec<bool> = (0..n).map(|i| (lo..=hi).contains(&i)).collect();
    Ok(DemodulatedRecord {
        x: record.x,
        fs: record.fs,
        t_start: record.t_start,
        k0: record.k0,
        omega0: record.omega0,
        envelope,
        phase_total,
        phase_residual: residual,
        confidence,
    })
}

/// Demodulate a batch of records, in parallel when enabled.
pub fn demodulate_gauges(
    records: &[GaugeRecord],
    frame: &DimensionlessFrame,
) -> Result<Vec<DemodulatedRecord>> {
    exec::try_map(records, |record| demodulate(record, frame))
}

/// Temporal mean, interpolated peak time, and phase at the peak of a
/// demodulated record.
#[derive(Debug, Clone, Copy)]
pub struct PacketStats {
    /// First moment of envelope^2 over the record (trapezoid rule).
    pub t_mean: f64,
    /// Sub-sample peak time from a three-point parabola in log envelope.
    pub t_peak: f64,
    /// Residual phase interpolated at `t_peak`, within (-pi, pi] up to the
    /// interpolation correction.
    pub phase_at_peak: f64,
}

/// Packet statistics of a single-lobe demodulated record.
pub fn packet_statistics(demod: &DemodulatedRecord) -> Result<PacketStats> {
    let n = demod.n();
    let env = &demod.envelope;
    let peak_env = env.iter().cloned().fold(0.0, f64::max);
    if !(peak_env > 0.0) {
        return Err(Error::AmbiguousPacket("record is identically zero".into()));
    }
    // a packet is ambiguous if the half-maximum region is disconnected
    let mut lobes = 0;
    let mut inside = false;
    for &e in env {
        let above = e > 0.5 * peak_env;
        if above && !inside {
            lobes += 1;
        }
        inside = above;
    }
    if lobes != 1 {
        return Err(Error::AmbiguousPacket(format!(
            "envelope has {lobes} lobes above half maximum"
        )));
    }

    let dt = 1.0 / demod.fs;
    let (mut m0, mut m1) = (0.0, 0.0);
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let p = w * env[i] * env[i];
        m0 += p;
        m1 += p * demod.time(i);
    }
    let t_mean = m1 / m0;

    let pk = env.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    if pk == 0 || pk == n - 1 {
        return Err(Error::Sampling("record does not bracket the envelope maximum".into()));
    }
    let (y0, y1, y2) = (env[pk - 1].ln(), env[pk].ln(), env[pk + 1].ln());
    let denom = y0 - 2.0 * y1 + y2;
    let delta = if denom < 0.0 { (y0 - y2) / (2.0 * denom) } else { 0.0 };
    let t_peak = demod.time(pk) + delta * dt;

    let (r0, r1, r2) = (
        demod.phase_residual[pk - 1],
        demod.phase_residual[pk],
        demod.phase_residual[pk + 1],
    );
    let phase_at_peak = r1 + delta * (r2 - r0) / 2.0 + delta * delta * (r0 - 2.0 * r1 + r2) / 2.0;
    Ok(PacketStats { t_mean, t_peak, phase_at_peak })
}

/// Convenience: synthesize, demodulate, and reduce one gauge.
pub fn measure_gauge(
    frame: &DimensionlessFrame,
    p0: f64,
    force: f64,
    x: f64,
) -> Result<(DemodulatedRecord, PacketStats)> {
    let spec = SamplingSpec::auto(frame, p0, force, x);
    let record = synthesize_gauge(frame, p0, force, x, &spec)?;
    let demod = demodulate(&record, frame)?;
    let stats = packet_statistics(&demod)?;
    Ok((demod, stats))
}
