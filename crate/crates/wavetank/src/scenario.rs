//! Scenario-driven experiment runner: a flat key/value config describes the
//! physical setup, gauge line, and execution mode; running a scenario emits
//! the gauge records, demodulated records, trajectory fits, and phase
//! curves as plot-ready CSV plus a human-readable report. Outputs are
//! deterministic: identical configs produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analytic::GaussianState;
use crate::csvio::fmt_f64;
use crate::error::{Error, Result};
use crate::exec;
use crate::fit::{self, PhaseCurve, TrajectoryFit, UnwrapPolicy};
use crate::gauge::{self, SamplingSpec};
use crate::model::{DimensionlessFrame, PhysicalParams};
use crate::phase::wrap;
use crate::solver::{self, GridSpec, SolverConfig};

/// How gauge observables are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Closed-form Gaussian evolution only.
    Analytic,
    /// Spectral solver observables on the envelope grid.
    Numeric,
    /// Synthesized elevation records demodulated through the Hilbert path.
    FullPipeline,
}

impl Mode {
    fn parse(token: &str, line: usize) -> Result<Self> {
        match token {
            "analytic" => Ok(Mode::Analytic),
            "numeric" => Ok(Mode::Numeric),
            "full-pipeline" => Ok(Mode::FullPipeline),
            other => Err(Error::Config {
                line,
                message: format!(
                    "mode must be analytic, numeric, or full-pipeline, got {other:?}"
                ),
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Numeric => "numeric",
            Mode::FullPipeline => "full-pipeline",
        }
    }
}

/// Which force branches a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSelector {
    /// Both F = 0 and F = force_F (enables difference curves).
    Both,
    /// Only the branch with the external flow.
    FlowOnly,
    /// Only free propagation.
    None,
}

impl FlowSelector {
    fn parse(token: &str, line: usize) -> Result<Self> {
        match token {
            "both" => Ok(FlowSelector::Both),
            "flow" => Ok(FlowSelector::FlowOnly),
            "none" => Ok(FlowSelector::None),
            other => Err(Error::Config {
                line,
                message: format!("with_flow must be both, flow, or none, got {other:?}"),
            }),
        }
    }
}

/// Whether per-gauge record CSVs are written in full-pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutput {
    Full,
    Summary,
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    k0: f64,
    g: f64,
    a0: f64,
    t0: f64,
    epsilon: f64,
    pub detunings: Vec<f64>,
    pub force: f64,
    pub gauge_positions: Vec<f64>,
    pub mode: Mode,
    pub flow: FlowSelector,
    pub output_dir: Option<PathBuf>,
    pub sampling_rate: Option<f64>,
    pub record_halfwidth: f64,
    pub d_xi: Option<f64>,
    pub grid_points: Option<usize>,
    pub grid_pad: f64,
    pub norm_drift_tol: f64,
    pub boundary_margin: f64,
    pub record_output: RecordOutput,
    pub tank_length: f64,
}

struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("key {key:?} has no value"),
                });
            }
            if entries.insert(key.clone(), (value, line_no)).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => Ok(Some((crate::csvio::parse_f64(&v, line)?, line))),
        }
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64(key)?
            .map(|(v, _)| v)
            .ok_or_else(|| Error::Config {
                line: 0,
                message: format!("missing required key {key:?}"),
            })
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(Error::Config {
                line,
                message: format!("unknown key {key:?}"),
            });
        }
        Ok(())
    }
}

fn parse_value_list(value: &str, line: usize) -> Result<Vec<f64>> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config {
                line,
                message: format!("range must be start:step:stop, got {value:?}"),
            });
        }
        let start = crate::csvio::parse_f64(parts[0], line)?;
        let step = crate::csvio::parse_f64(parts[1], line)?;
        let stop = crate::csvio::parse_f64(parts[2], line)?;
        if !(step > 0.0) || stop < start {
            return Err(Error::Config {
                line,
                message: "range requires step > 0 and stop >= start".into(),
            });
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| start + i as f64 * step).collect())
    } else {
        value
            .split(',')
            .map(|tok| crate::csvio::parse_f64(tok, line))
            .collect()
    }
}

impl Scenario {
    /// Parse and validate a scenario config. The first comment line of the
    /// file serves as its description.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let description = text
            .lines()
            .find(|l| l.trim_start().starts_with('#'))
            .map(|l| l.trim_start_matches(['#', ' ']).trim().to_string())
            .unwrap_or_default();
        let mut raw = RawConfig::parse(text)?;

        let k0 = raw.require_f64("k0")?;
        let g = raw.take_f64("g")?.map(|(v, _)| v).unwrap_or(9.81);
        let a0 = raw.require_f64("a0")?;
        let t0 = raw.require_f64("t0")?;
        let epsilon = raw.require_f64("epsilon")?;

        let (detuning_value, detuning_line) =
            raw.take("omega_detuning").ok_or_else(|| Error::Config {
                line: 0,
                message: "missing required key \"omega_detuning\"".into(),
            })?;
        let detunings = parse_value_list(&detuning_value, detuning_line)?;

        let (gauge_value, gauge_line) =
            raw.take("gauge_positions").ok_or_else(|| Error::Config {
                line: 0,
                message: "missing required key \"gauge_positions\"".into(),
            })?;
        let gauge_positions = parse_value_list(&gauge_value, gauge_line)?;

        let mode = match raw.take("mode") {
            Some((v, line)) => Mode::parse(&v, line)?,
            None => Mode::FullPipeline,
        };
        let flow = match raw.take("with_flow") {
            Some((v, line)) => FlowSelector::parse(&v, line)?,
            None => FlowSelector::Both,
        };
        let force = match raw.take_f64("force_F")? {
            Some((v, _)) => v,
            None if flow == FlowSelector::None => 0.0,
            None => {
                return Err(Error::Config {
                    line: 0,
                    message: "missing required key \"force_F\" (needed unless with_flow = none)"
                        .into(),
                })
            }
        };
        let output_dir = raw.take("output_dir").map(|(v, _)| PathBuf::from(v));
        let sampling_rate = raw.take_f64("sampling_rate")?.map(|(v, _)| v);
        let record_halfwidth = raw
            .take_f64("record_halfwidth")?
            .map(|(v, _)| v)
            .unwrap_or(6.0);
        let d_xi = raw.take_f64("d_xi")?.map(|(v, _)| v);
        let grid_points = match raw.take_f64("grid_points")? {
            Some((v, line)) => {
                if v < 16.0 || v.fract() != 0.0 || !(v as usize).is_power_of_two() {
                    return Err(Error::Config {
                        line,
                        message: format!("grid_points must be a power of two >= 16, got {v}"),
                    });
                }
                Some(v as usize)
            }
            None => None,
        };
        let grid_pad = match raw.take_f64("grid_pad")? {
            Some((v, line)) => {
                if !(v > 0.0) {
                    return Err(Error::Config {
                        line,
                        message: format!("grid_pad must be positive, got {v}"),
                    });
                }
                v
            }
            None => 8.0,
        };
        let norm_drift_tol = raw
            .take_f64("norm_drift_tol")?
            .map(|(v, _)| v)
            .unwrap_or(1e-10);
        let boundary_margin = raw
            .take_f64("boundary_margin")?
            .map(|(v, _)| v)
            .unwrap_or(0.05);
        let record_output = match raw.take("record_output") {
            Some((v, line)) => match v.as_str() {
                "full" => RecordOutput::Full,
                "summary" => RecordOutput::Summary,
                other => {
                    return Err(Error::Config {
                        line,
                        message: format!("record_output must be full or summary, got {other:?}"),
                    })
                }
            },
            None => RecordOutput::Full,
        };
        let tank_length = raw.take_f64("tank_length")?.map(|(v, _)| v).unwrap_or(5.0);
        raw.finish()?;

        let scenario = Self {
            name: name.to_string(),
            description,
            k0,
            g,
            a0,
            t0,
            epsilon,
            detunings,
            force,
            gauge_positions,
            mode,
            flow,
            output_dir,
            sampling_rate,
            record_halfwidth,
            d_xi,
            grid_points,
            grid_pad,
            norm_drift_tol,
            boundary_margin,
            record_output,
            tank_length,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Load a scenario from a bundled name or a config file path.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(text) = bundled_scenarios()
            .iter()
            .find(|(name, _)| *name == spec)
            .map(|(_, text)| *text)
        {
            return Self::parse(spec, text);
        }
        let path = Path::new(spec);
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {spec:?}: {e}"),
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::parse(&name, &text)
    }

    fn validate(&self) -> Result<()> {
        if self.detunings.is_empty() {
            return Err(Error::Config {
                line: 0,
                message: "omega_detuning list is empty".into(),
            });
        }
        if self.gauge_positions.is_empty() {
            return Err(Error::Config {
                line: 0,
                message: "gauge_positions is empty".into(),
            });
        }
        let mut prev = f64::NEG_INFINITY;
        for &x in &self.gauge_positions {
            if x < 0.0 {
                return Err(Error::Config {
                    line: 0,
                    message: format!("gauge position {x} is negative"),
                });
            }
            if x > self.tank_length {
                return Err(Error::Config {
                    line: 0,
                    message: format!(
                        "gauge position {x} exceeds the tank length {}",
                        self.tank_length
                    ),
                });
            }
            if x <= prev {
                return Err(Error::Config {
                    line: 0,
                    message: "gauge positions must be strictly increasing".into(),
                });
            }
            prev = x;
        }
        // every (detuning, branch) pair must yield valid parameters
        for &omega in &self.detunings {
            for force in self.branch_forces() {
                self.params_for(omega, force)
                    .map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
            }
        }
        Ok(())
    }

    pub fn params_for(&self, omega_detuning: f64, force: f64) -> Result<PhysicalParams> {
        PhysicalParams::new(self.k0, self.g, self.a0, self.t0, omega_detuning, self.epsilon, force)
    }

    fn branch_forces(&self) -> Vec<f64> {
        match self.flow {
            FlowSelector::Both => vec![0.0, self.force],
            FlowSelector::FlowOnly => vec![self.force],
            FlowSelector::None => vec![0.0],
        }
    }

    /// Aggregated non-fatal warnings for the configured cases.
    pub fn warnings(&self) -> Vec<String> {
        self.detunings
            .first()
            .and_then(|&om| self.params_for(om, 0.0).ok())
            .map(|p| p.warnings())
            .unwrap_or_default()
    }

    fn solver_config(&self, frame: &DimensionlessFrame) -> SolverConfig {
        let mut config = SolverConfig::for_frame(frame);
        if let Some(d_xi) = self.d_xi {
            config.d_xi = d_xi;
        }
        config.norm_drift_tol = self.norm_drift_tol;
        config.boundary_margin = self.boundary_margin;
        config
    }

    fn sampling_for(
        &self,
        frame: &DimensionlessFrame,
        p0: f64,
        force: f64,
        x: f64,
    ) -> SamplingSpec {
        let mut spec = SamplingSpec::auto(frame, p0, force, x);
        if let Some(fs) = self.sampling_rate {
            let n_half = (spec.n - 1) as f64 / (2.0 * spec.fs);
            spec.fs = fs;
            spec.n = (2.0 * n_half * fs).ceil() as usize + 1;
            let t_center = spec.t_start + n_half;
            spec.t_start = t_center - (spec.n - 1) as f64 / (2.0 * fs);
        }
        if self.record_halfwidth != 6.0 {
            let params = frame.params();
            let xi = frame.xi_of(x);
            let tau_cm = (2.0 * p0 + force * xi) * xi;
            let t_center = frame.t_of(x, tau_cm);
            let half = self.record_halfwidth * params.t0() * frame.stretch(xi);
            spec.n = (2.0 * half * spec.fs).ceil() as usize + 1;
            spec.t_start = t_center - half;
        }
        spec
    }
}

/// Observables of one gauge in one branch.
#[derive(Debug, Clone, Copy)]
pub struct GaugeObservation {
    pub x: f64,
    pub xi: f64,
    pub t_mean: f64,
    pub t_peak: f64,
    /// Phase at the envelope maximum. Continuous in analytic mode, wrapped
    /// per gauge otherwise (curves re-unwrap along x).
    pub phase_at_peak: f64,
}

/// One force branch of one detuning case.
#[derive(Debug)]
pub struct BranchRun {
    pub force: f64,
    pub with_flow: bool,
    pub observations: Vec<GaugeObservation>,
    pub fit: Option<TrajectoryFit>,
    records: Vec<(gauge::GaugeRecord, gauge::DemodulatedRecord)>,
}

/// All branches of one detuning.
#[derive(Debug)]
pub struct CaseRun {
    pub omega_detuning: f64,
    pub p0: f64,
    pub branches: Vec<BranchRun>,
    pub phase_curve: Option<PhaseCurve>,
}

/// In-memory result of a scenario execution.
#[derive(Debug)]
pub struct ScenarioRun {
    pub cases: Vec<CaseRun>,
    pub warnings: Vec<String>,
}

fn run_branch(
    scenario: &Scenario,
    omega: f64,
    force: f64,
    keep_records: bool,
) -> Result<BranchRun> {
    let params = scenario.params_for(omega, force)?;
    let frame = DimensionlessFrame::new(params);
    let p0 = params.effective_momentum();
    let state = GaussianState::new(frame, p0, force);
    let positions = &scenario.gauge_positions;

    let mut records = Vec::new();
    let observations: Vec<GaugeObservation> = match scenario.mode {
        Mode::Analytic => positions
            .iter()
            .map(|&x| {
                let xi = frame.xi_of(x);
                let tau_cm = state.tau_at_maximum(xi);
                let t = frame.t_of(x, tau_cm);
                GaugeObservation {
                    x,
                    xi,
                    t_mean: t,
                    t_peak: t,
                    phase_at_peak: state.phase_at_maximum(xi),
                }
            })
            .collect(),
        Mode::Numeric => {
            let xi_max = frame.xi_of(*positions.last().unwrap());
            let mut grid = GridSpec::padded(&frame, p0, force, xi_max, scenario.grid_pad);
            if let Some(n) = scenario.grid_points {
                grid = grid.with_points(n);
            }
            let config = scenario.solver_config(&frame);
            let mut field = solver::init_gaussian(&frame, p0, &grid)?;
            let mut out = Vec::with_capacity(positions.len());
            for &x in positions {
                let xi = frame.xi_of(x);
                field = solver::propagate(&field, force, xi, &config)?;
                let obs = solver::sample_observables(&field)?;
                out.push(GaugeObservation {
                    x,
                    xi,
                    t_mean: frame.t_of(x, obs.centroid_tau),
                    t_peak: frame.t_of(x, obs.peak_tau),
                    phase_at_peak: wrap(obs.peak_phase),
                });
            }
            out
        }
        Mode::FullPipeline => {
            let measured = exec::try_map(positions, |&x| {
                let spec = scenario.sampling_for(&frame, p0, force, x);
                let record = gauge::synthesize_gauge(&frame, p0, force, x, &spec)?;
                let demod = gauge::demodulate(&record, &frame)?;
                let stats = gauge::packet_statistics(&demod)?;
                Ok((record, demod, stats))
            })?;
            let mut out = Vec::with_capacity(measured.len());
            for (record, demod, stats) in measured {
                out.push(GaugeObservation {
                    x: record.x(),
                    xi: frame.xi_of(record.x()),
                    t_mean: stats.t_mean,
                    t_peak: stats.t_peak,
                    phase_at_peak: stats.phase_at_peak,
                });
                if keep_records {
                    records.push((record, demod));
                }
            }
            out
        }
    };

    let points: Vec<(f64, f64)> = observations.iter().map(|o| (o.x, o.t_mean)).collect();
    let fit = match fit::fit_trajectory(&points, &params) {
        Ok(f) => Some(f),
        Err(Error::DegenerateFit(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BranchRun {
        force,
        with_flow: force != 0.0,
        observations,
        fit,
        records,
    })
}

/// Execute a scenario in memory. Branches (and gauges inside the pipeline)
/// run in parallel when the `parallel` feature is enabled; outputs do not
/// depend on the execution order.
pub fn execute(scenario: &Scenario, keep_records: bool) -> Result<ScenarioRun> {
    let mut jobs = Vec::new();
    for &omega in &scenario.detunings {
        for force in scenario.branch_forces() {
            jobs.push((omega, force));
        }
    }
    let branch_runs = exec::try_map(&jobs, |&(omega, force)| {
        run_branch(scenario, omega, force, keep_records)
    })?;

    let mut cases = Vec::new();
    let mut runs = branch_runs.into_iter();
    for &omega in &scenario.detunings {
        let branches: Vec<BranchRun> =
            (0..scenario.branch_forces().len()).map(|_| runs.next().unwrap()).collect();
        let params = scenario.params_for(omega, 0.0)?;
        let frame = DimensionlessFrame::new(params);
        let p0 = params.effective_momentum();
        let phase_curve = if branches.len() == 2 {
            let policy = if scenario.mode == Mode::Analytic {
                UnwrapPolicy::AlreadyContinuous
            } else {
                UnwrapPolicy::ChainUnwrap
            };
            let pick = |b: &BranchRun| -> Vec<(f64, f64)> {
                b.observations.iter().map(|o| (o.x, o.phase_at_peak)).collect()
            };
            let no_flow = branches.iter().find(|b| !b.with_flow);
            let with_flow = branches.iter().find(|b| b.with_flow);
            match (with_flow, no_flow) {
                (Some(w), Some(n)) => Some(fit::build_phase_curves(
                    &pick(w),
                    &pick(n),
                    &frame,
                    p0,
                    w.force,
                    policy,
                )?),
                _ => None,
            }
        } else {
            None
        };
        cases.push(CaseRun { omega_detuning: omega, p0, branches, phase_curve });
    }
    Ok(ScenarioRun { cases, warnings: scenario.warnings() })
}

fn case_tag(omega: f64) -> String {
    format!("om{omega:+.2}")
}

fn branch_tag(with_flow: bool) -> &'static str {
    if with_flow {
        "flow"
    } else {
        "noflow"
    }
}

fn write_file(path: &Path, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, contents)?;
    written.push(path.to_path_buf());
    Ok(())
}

fn trajectory_csv(branch: &BranchRun) -> String {
    let mut out = String::from("x,xi,t_mean,t_peak,phase_at_peak\n");
    for o in &branch.observations {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(o.x),
            fmt_f64(o.xi),
            fmt_f64(o.t_mean),
            fmt_f64(o.t_peak),
            fmt_f64(o.phase_at_peak)
        );
    }
    out
}

fn fit_csv(fit: &TrajectoryFit, params: &PhysicalParams) -> String {
    let mut out =
        String::from("a1,a2,residual_rms,c_g_recovered,F_recovered,Omega0,epsilon,k0,g\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        fmt_f64(fit.a1),
        fmt_f64(fit.a2),
        fmt_f64(fit.residual_rms),
        fmt_f64(fit.c_g_recovered),
        fmt_f64(fit.f_recovered),
        fmt_f64(params.omega_detuning()),
        fmt_f64(params.epsilon()),
        fmt_f64(params.k0()),
        fmt_f64(params.g())
    );
    out
}

fn phase_curve_csv(curve: &PhaseCurve) -> String {
    let mut out = format!(
        "# unwrap_reliable={} max_deviation={}\n",
        curve.unwrap_reliable,
        fmt_f64(curve.max_deviation)
    );
    out.push_str("x,xi,phi_no_flow,phi_flow,difference,model,deviation\n");
    for i in 0..curve.x.len() {
        let deviation = curve.difference[i] - curve.model_difference[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(curve.x[i]),
            fmt_f64(curve.xi[i]),
            fmt_f64(curve.phi_without_flow[i]),
            fmt_f64(curve.phi_with_flow[i]),
            fmt_f64(curve.difference[i]),
            fmt_f64(curve.model_difference[i]),
            fmt_f64(deviation)
        );
    }
    out
}

fn analytic_profile_csv(scenario: &Scenario, omega: f64, force: f64) -> Result<String> {
    let params = scenario.params_for(omega, force)?;
    let frame = DimensionlessFrame::new(params);
    let state = GaussianState::new(frame, params.effective_momentum(), force);
    let mut out = String::from(
        "x,xi,tau_peak,envelope_peak,phase_at_peak,gouy,kennard,momentum_linear,cross\n",
    );
    for &x in &scenario.gauge_positions {
        let xi = frame.xi_of(x);
        let d = state.decompose_phase_at_maximum(xi);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(xi),
            fmt_f64(state.tau_at_maximum(xi)),
            fmt_f64(state.peak_magnitude(xi)),
            fmt_f64(d.total),
            fmt_f64(d.gouy),
            fmt_f64(d.kennard),
            fmt_f64(d.momentum_linear),
            fmt_f64(d.cross)
        );
    }
    Ok(out)
}

fn report_text(scenario: &Scenario, run: &ScenarioRun) -> String {
    let params = scenario
        .params_for(scenario.detunings[0], 0.0)
        .expect("scenario was validated");
    let frame = DimensionlessFrame::new(params);
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", scenario.name);
    if !scenario.description.is_empty() {
        let _ = writeln!(out, "{}", scenario.description);
    }
    let _ = writeln!(out, "mode = {}", scenario.mode.label());
    let _ = writeln!(out, "k0 = {} 1/m (config)", scenario.k0);
    let _ = writeln!(out, "g = {} m/s^2 (config)", scenario.g);
    let _ = writeln!(out, "a0 = {} m (config)", scenario.a0);
    let _ = writeln!(out, "t0 = {} s (config)", scenario.t0);
    let _ = writeln!(out, "epsilon = {} (config)", scenario.epsilon);
    let _ = writeln!(out, "force_F = {} (config)", scenario.force);
    let _ = writeln!(out, "tank_length = {} m (config)", scenario.tank_length);
    let _ = writeln!(
        out,
        "omega0 = {:.6} rad/s (derived: sqrt(k0*g))",
        params.omega0()
    );
    let _ = writeln!(
        out,
        "c_g = {:.6} m/s (derived: omega0/(2 k0))",
        params.group_velocity()
    );
    let _ = writeln!(
        out,
        "tau0 = {:.6} (derived: epsilon*omega0*t0), xi_s = {:.6} (derived: tau0^2/4)",
        frame.tau0(),
        frame.xi_s()
    );
    let _ = writeln!(
        out,
        "gauges: {} positions in [{}, {}] m (config)",
        scenario.gauge_positions.len(),
        scenario.gauge_positions.first().unwrap(),
        scenario.gauge_positions.last().unwrap()
    );
    match scenario.sampling_rate {
        Some(fs) => {
            let _ = writeln!(out, "sampling_rate = {fs} Hz (config)");
        }
        None => {
            let _ = writeln!(
                out,
                "sampling_rate = {:.6} Hz (derived: 40*omega0/2pi)",
                40.0 * params.omega0() / std::f64::consts::TAU
            );
        }
    }
    match scenario.d_xi {
        Some(d) => {
            let _ = writeln!(out, "d_xi = {d} (config)");
        }
        None => {
            let _ = writeln!(out, "d_xi = {:.3e} (derived: xi_s/2000)", frame.xi_s() / 2000.0);
        }
    }
    for w in &run.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for case in &run.cases {
        let _ = writeln!(
            out,
            "\ncase omega_detuning = {:+.3} rad/s, p0 = {:.6} (derived: Omega0/(epsilon*omega0))",
            case.omega_detuning, case.p0
        );
        for branch in &case.branches {
            match &branch.fit {
                Some(f) => {
                    let _ = writeln!(
                        out,
                        "  {} (F = {}): a1 = {:.6} s/m, a2 = {:.6} s/m^2, rms = {:.3e} s, c_g = {:.6} m/s, F = {:.4}",
                        branch_tag(branch.with_flow),
                        branch.force,
                        f.a1,
                        f.a2,
                        f.residual_rms,
                        f.c_g_recovered,
                        f.f_recovered
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "  {} (F = {}): fewer than 3 distinct gauges, no trajectory fit",
                        branch_tag(branch.with_flow),
                        branch.force
                    );
                }
            }
        }
        if let Some(curve) = &case.phase_curve {
            let _ = writeln!(
                out,
                "  phase difference vs model: max deviation {:.3e} rad (unwrap_reliable = {})",
                curve.max_deviation, curve.unwrap_reliable
            );
        }
    }
    out
}

/// Outcome of `run_scenario`: the in-memory results plus every file path
/// written, in write order.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub run: ScenarioRun,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Execute a scenario and write its artifact files under
/// `out_root/<scenario name>/`.
pub fn run_scenario(scenario: &Scenario, out_root: &Path) -> Result<ScenarioOutcome> {
    let keep_records =
        scenario.mode == Mode::FullPipeline && scenario.record_output == RecordOutput::Full;
    let run = execute(scenario, keep_records)?;

    let dir = out_root.join(&scenario.name);
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();

    write_file(&dir.join("report.txt"), &report_text(scenario, &run), &mut files)?;
    for case in &run.cases {
        let tag = case_tag(case.omega_detuning);
        for branch in &case.branches {
            let btag = branch_tag(branch.with_flow);
            write_file(
                &dir.join(format!("trajectory_{tag}_{btag}.csv")),
                &trajectory_csv(branch),
                &mut files,
            )?;
            if let Some(fit) = &branch.fit {
                let params = scenario.params_for(case.omega_detuning, branch.force)?;
                write_file(
                    &dir.join(format!("fit_{tag}_{btag}.csv")),
                    &fit_csv(fit, &params),
                    &mut files,
                )?;
            }
            if scenario.mode == Mode::Analytic {
                write_file(
                    &dir.join(format!("profile_{tag}_{btag}.csv")),
                    &analytic_profile_csv(scenario, case.omega_detuning, branch.force)?,
                    &mut files,
                )?;
            }
            if !branch.records.is_empty() {
                let records_dir = dir.join("records");
                fs::create_dir_all(&records_dir)?;
                for (record, demod) in &branch.records {
                    let xtag = format!("x{:.3}", record.x());
                    write_file(
                        &records_dir.join(format!("gauge_{tag}_{btag}_{xtag}.csv")),
                        &record.to_csv(),
                        &mut files,
                    )?;
                    write_file(
                        &records_dir.join(format!("demod_{tag}_{btag}_{xtag}.csv")),
                        &demod.to_csv(),
                        &mut files,
                    )?;
                }
            }
        }
        if let Some(curve) = &case.phase_curve {
            write_file(
                &dir.join(format!("phase_curve_{tag}.csv")),
                &phase_curve_csv(curve),
                &mut files,
            )?;
        }
    }
    Ok(ScenarioOutcome { run, output_dir: dir, files })
}

/// Per-gauge deviation row of a mode comparison.
#[derive(Debug, Clone, Copy)]
pub struct CompareRow {
    pub omega_detuning: f64,
    pub force: f64,
    pub x: f64,
    pub xi: f64,
    pub envelope_numeric_vs_analytic: f64,
    pub envelope_pipeline_vs_analytic: f64,
    pub phase_numeric_vs_analytic: f64,
    pub phase_pipeline_vs_analytic: f64,
    pub phase_numeric_vs_pipeline: f64,
    pub t_mean_numeric_vs_analytic: f64,
    pub t_mean_pipeline_vs_analytic: f64,
    pub t_mean_numeric_vs_pipeline: f64,
    pub sample_period: f64,
}

/// Cross-check of the three execution modes on the same scenario.
#[derive(Debug)]
pub struct ComparisonReport {
    pub rows: Vec<CompareRow>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "omega_detuning,force,x,xi,env_num_vs_ana,env_pipe_vs_ana,phase_num_vs_ana,\
             phase_pipe_vs_ana,phase_num_vs_pipe,tmean_num_vs_ana,tmean_pipe_vs_ana,\
             tmean_num_vs_pipe,sample_period\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.omega_detuning),
                fmt_f64(r.force),
                fmt_f64(r.x),
                fmt_f64(r.xi),
                fmt_f64(r.envelope_numeric_vs_analytic),
                fmt_f64(r.envelope_pipeline_vs_analytic),
                fmt_f64(r.phase_numeric_vs_analytic),
                fmt_f64(r.phase_pipeline_vs_analytic),
                fmt_f64(r.phase_numeric_vs_pipeline),
                fmt_f64(r.t_mean_numeric_vs_analytic),
                fmt_f64(r.t_mean_pipeline_vs_analytic),
                fmt_f64(r.t_mean_numeric_vs_pipeline),
                fmt_f64(r.sample_period)
            );
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let max_of = |f: fn(&CompareRow) -> f64| self.rows.iter().map(f).fold(0.0, f64::max);
        let mut out = String::new();
        let _ = writeln!(out, "mode comparison over {} gauges", self.rows.len());
        let _ = writeln!(
            out,
            "max |envelope| deviation, numeric vs analytic:   {:.3e}",
            max_of(|r| r.envelope_numeric_vs_analytic)
        );
        let _ = writeln!(
            out,
            "max |envelope| deviation, pipeline vs analytic:  {:.3e}",
            max_of(|r| r.envelope_pipeline_vs_analytic)
        );
        let _ = writeln!(
            out,
            "max phase-at-peak deviation, numeric vs analytic:  {:.3e} rad",
            max_of(|r| r.phase_numeric_vs_analytic)
        );
        let _ = writeln!(
            out,
            "max phase-at-peak deviation, pipeline vs analytic: {:.3e} rad",
            max_of(|r| r.phase_pipeline_vs_analytic)
        );
        let _ = writeln!(
            out,
            "max t_mean deviation, numeric vs pipeline: {:.3e} s (sample period {:.3e} s)",
            max_of(|r| r.t_mean_numeric_vs_pipeline),
            self.rows.first().map(|r| r.sample_period).unwrap_or(0.0)
        );
        out
    }
}

fn compare_branch(scenario: &Scenario, omega: f64, force: f64) -> Result<Vec<CompareRow>> {
    let params = scenario.params_for(omega, force)?;
    let frame = DimensionlessFrame::new(params);
    let p0 = params.effective_momentum();
    let state = GaussianState::new(frame, p0, force);
    let a0 = params.a0();

    let xi_max = frame.xi_of(*scenario.gauge_positions.last().unwrap());
    let mut grid = GridSpec::padded(&frame, p0, force, xi_max, scenario.grid_pad);
    if let Some(n) = scenario.grid_points {
        grid = grid.with_points(n);
    }
    let config = scenario.solver_config(&frame);
    let mut field = solver::init_gaussian(&frame, p0, &grid)?;

    let mut rows = Vec::new();
    for &x in &scenario.gauge_positions {
        let xi = frame.xi_of(x);
        field = solver::propagate(&field, force, xi, &config)?;
        let obs = solver::sample_observables(&field)?;
        let mut env_num = 0.0f64;
        for (i, v) in field.values().iter().enumerate() {
            env_num = env_num.max((v.norm() - state.envelope_magnitude(field.tau(i), xi)).abs());
        }
        let t_mean_num = frame.t_of(x, obs.centroid_tau);
        let phase_num = wrap(obs.peak_phase - state.phase_at_maximum(xi)).abs();

        let spec = scenario.sampling_for(&frame, p0, force, x);
        let record = gauge::synthesize_gauge(&frame, p0, force, x, &spec)?;
        let demod = gauge::demodulate(&record, &frame)?;
        let stats = gauge::packet_statistics(&demod)?;
        let peak_env = demod.envelope().iter().cloned().fold(0.0, f64::max);
        let mut env_pipe = 0.0f64;
        for i in 0..demod.n() {
            if demod.envelope()[i] < 0.1 * peak_env {
                continue;
            }
            let tau = frame.tau_of(x, demod.time(i));
            env_pipe = env_pipe
                .max((demod.envelope()[i] / a0 - state.envelope_magnitude(tau, xi)).abs());
        }
        let phase_pipe = wrap(stats.phase_at_peak - state.phase_at_maximum(xi)).abs();
        let t_ana = frame.t_of(x, state.tau_at_maximum(xi));

        rows.push(CompareRow {
            omega_detuning: omega,
            force,
            x,
            xi,
            envelope_numeric_vs_analytic: env_num,
            envelope_pipeline_vs_analytic: env_pipe,
            phase_numeric_vs_analytic: phase_num,
            phase_pipeline_vs_analytic: phase_pipe,
            phase_numeric_vs_pipeline: wrap(obs.peak_phase - stats.phase_at_peak).abs(),
            t_mean_numeric_vs_analytic: (t_mean_num - t_ana).abs(),
            t_mean_pipeline_vs_analytic: (stats.t_mean - t_ana).abs(),
            t_mean_numeric_vs_pipeline: (t_mean_num - stats.t_mean).abs(),
            sample_period: 1.0 / record.fs(),
        });
    }
    Ok(rows)
}

/// Run every gauge of a scenario through all three modes and tabulate the
/// pairwise deviations.
pub fn compare_modes(scenario: &Scenario) -> Result<ComparisonReport> {
    let mut jobs = Vec::new();
    for &omega in &scenario.detunings {
        for force in scenario.branch_forces() {
            jobs.push((omega, force));
        }
    }
    let per_branch =
        exec::try_map(&jobs, |&(omega, force)| compare_branch(scenario, omega, force))?;
    Ok(ComparisonReport { rows: per_branch.into_iter().flatten().collect() })
}

/// Bundled scenario configs shipped with the crate.
pub fn bundled_scenarios() -> &'static [(&'static str, &'static str)] {
    &[
        ("fig1a", include_str!("../scenarios/fig1a.cfg")),
        ("fig1b", include_str!("../scenarios/fig1b.cfg")),
        ("fig1c", include_str!("../scenarios/fig1c.cfg")),
        ("fig2", include_str!("../scenarios/fig2.cfg")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# test scenario
k0 = 20.0
a0 = 0.003
t0 = 0.8
epsilon = 0.06
omega_detuning = 0.0
force_F = -24.4
gauge_positions = 1.0,2.0,3.0
mode = analytic
";

    #[test]
    fn minimal_config_parses() {
        let s = Scenario::parse("test", MINIMAL).unwrap();
        assert_eq!(s.mode, Mode::Analytic);
        assert_eq!(s.flow, FlowSelector::Both);
        assert_eq!(s.gauge_positions, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.description, "test scenario");
        assert_eq!(s.g, 9.81);
    }

    #[test]
    fn range_syntax_expands() {
        let text = MINIMAL.replace("1.0,2.0,3.0", "0.5:0.5:5.0");
        let s = Scenario::parse("test", &text).unwrap();
        assert_eq!(s.gauge_positions.len(), 10);
        assert!((s.gauge_positions[9] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_a_hard_error() {
        let text = format!("{MINIMAL}typo_key = 1.0\n");
        match Scenario::parse("test", &text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 10);
                assert!(message.contains("typo_key"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = format!("{MINIMAL}k0 = 21.0\n");
        assert!(matches!(
            Scenario::parse("test", &text),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn missing_required_key_is_rejected() {
        let text = MINIMAL.replace("k0 = 20.0\n", "");
        match Scenario::parse("test", &text) {
            Err(Error::Config { message, .. }) => assert!(message.contains("k0")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn gauge_positions_are_validated() {
        for bad in [
            "gauge_positions = 3.0,2.0,1.0",
            "gauge_positions = -1.0,2.0,3.0",
            "gauge_positions = 1.0,2.0,7.5",
            "gauge_positions = 1.0,1.0,2.0",
        ] {
            let text = MINIMAL.replace("gauge_positions = 1.0,2.0,3.0", bad);
            assert!(Scenario::parse("test", &text).is_err(), "{bad}");
        }
    }

    #[test]
    fn inconsistent_steepness_is_a_config_error() {
        let text = MINIMAL.replace("epsilon = 0.06", "epsilon = 0.07");
        assert!(matches!(
            Scenario::parse("test", &text),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn bundled_scenarios_parse_and_validate() {
        for (name, text) in bundled_scenarios() {
            let s = Scenario::parse(name, text).unwrap();
            assert!(!s.description.is_empty(), "{name} needs a description");
            assert!(Scenario::load(name).is_ok());
        }
    }

    #[test]
    fn analytic_run_recovers_exact_fit() {
        let s = Scenario::parse("test", MINIMAL).unwrap();
        let run = execute(&s, false).unwrap();
        assert_eq!(run.cases.len(), 1);
        let case = &run.cases[0];
        assert_eq!(case.branches.len(), 2);
        let flow = case.branches.iter().find(|b| b.with_flow).unwrap();
        let fit = flow.fit.as_ref().unwrap();
        let params = s.params_for(0.0, -24.4).unwrap();
        assert!((fit.c_g_recovered - params.group_velocity()).abs() < 1e-9);
        assert!((fit.f_recovered - (-24.4)).abs() < 1e-9);
        let curve = case.phase_curve.as_ref().unwrap();
        assert!(curve.max_deviation < 1e-12);
    }

    #[test]
    fn scenario_outputs_are_deterministic() {
        let s = Scenario::parse("test", MINIMAL).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let out_a = run_scenario(&s, dir_a.path()).unwrap();
        let out_b = run_scenario(&s, dir_b.path()).unwrap();
        assert_eq!(out_a.files.len(), out_b.files.len());
        for (a, b) in out_a.files.iter().zip(&out_b.files) {
            assert_eq!(a.file_name(), b.file_name());
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{a:?}");
        }
    }

    #[test]
    fn report_mentions_derived_quantities() {
        let s = Scenario::parse("test", MINIMAL).unwrap();
        let run = execute(&s, false).unwrap();
        let report = report_text(&s, &run);
        assert!(report.contains("derived: sqrt(k0*g)"));
        assert!(report.contains("c_g"));
        assert!(report.contains("case omega_detuning"));
    }
}
