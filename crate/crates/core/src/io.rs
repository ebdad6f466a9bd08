//! JSON network description files and report serialization.
//!
//! Vertices are numbered from 1 in files and reports and from 0 in the library.
//! An edge `{"from": j, "to": i, "weight": g}` means vertex `i` reads the output
//! of vertex `j` with weight `g_ij > 0`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analyzer::{
    AnalysisOptions, Counterexample, ImperviousReport, ManifoldReport, NetworkModel, ReportStatus, StabilityReport,
    SupGainMethod, VertexGain,
};
use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedDigraph};
use crate::lti::StateSpace;
use crate::simulator::DisturbanceSignal;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpecFile {
    pub version: u32,
    pub subsystem: SubsystemSpec,
    pub alpha: f64,
    pub vertices: usize,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSpec>,
}

/// Either explicit `A`, `B`, `C` (row-major nested arrays) or
/// `{"template": "planar", "d": ...}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemSpec {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Scalar for single-channel subsystems or one value per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelValues {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ChannelValues {
    fn expand(&self, channels: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            ChannelValues::Scalar(v) => Ok(vec![*v; channels]),
            ChannelValues::Vector(v) if v.len() == channels => Ok(v.clone()),
            ChannelValues::Vector(v) => Err(Error::DimensionMismatch(format!(
                "disturbance.{field} has {} entries, subsystem has {channels} inputs",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceSpec {
    Tone {
        amplitude: ChannelValues,
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<ChannelValues>,
    },
    Pulse {
        amplitude: ChannelValues,
        start: f64,
        width: f64,
    },
    Chirp {
        amplitude: ChannelValues,
        omega0: f64,
        omega1: f64,
        duration: f64,
    },
    /// `values[c][k]`: channel `c` at `t_k = k dt`.
    Samples {
        dt: f64,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    /// `"bisect"` or `"grid"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub analysis: AnalysisOptions,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            analysis: AnalysisOptions::default(),
            dt: None,
            horizon: None,
            rel_tol: crate::simulator::MAJORIZATION_RTOL,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNetwork {
    pub model: NetworkModel,
    pub disturbance: Option<DisturbanceSignal>,
    pub options: RunOptions,
    /// Options block as written, kept for serialization.
    pub raw_options: Option<OptionsSpec>,
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::DimensionMismatch(format!("{name} is empty")));
    }
    if let Some(bad) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::DimensionMismatch(format!(
            "{name} row {} has {} entries, expected {c}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn build_subsystem(spec: &SubsystemSpec) -> Result<StateSpace> {
    match (&spec.template, &spec.a, &spec.b, &spec.c, spec.d) {
        (Some(t), None, None, None, Some(d)) if t == "planar" => {
            if !d.is_finite() {
                return Err(Error::Schema("subsystem.d must be finite".into()));
            }
            Ok(StateSpace::planar(d))
        }
        (Some(t), ..) if t != "planar" => Err(Error::Schema(format!("subsystem.template: unknown template {t:?}"))),
        (Some(_), ..) => Err(Error::Schema("subsystem: the planar template takes exactly the field d".into())),
        (None, Some(a), Some(b), Some(c), None) => StateSpace::new(matrix(a, "A")?, matrix(b, "B")?, matrix(c, "C")?),
        _ => Err(Error::Schema("subsystem: give either A, B and C, or template and d".into())),
    }
}

fn build_graph(vertices: usize, edges: &[EdgeSpec]) -> Result<WeightedDigraph> {
    if vertices == 0 {
        return Err(Error::Schema("vertices must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(edges.len());
    let mut seen = std::collections::HashSet::new();
    for e in edges {
        for v in [e.from, e.to] {
            if v == 0 || v > vertices {
                return Err(Error::VertexOutOfRange { vertex: v, count: vertices });
            }
        }
        if e.from == e.to {
            return Err(Error::SelfLoop(e.to));
        }
        if !(e.weight > 0.0 && e.weight.is_finite()) {
            return Err(Error::NonPositiveWeight { from: e.from, to: e.to, weight: e.weight });
        }
        if !seen.insert((e.from, e.to)) {
            return Err(Error::Schema(format!("edges: duplicate edge {} -> {}", e.from, e.to)));
        }
        out.push(Edge { from: e.from - 1, to: e.to - 1, weight: e.weight });
    }
    WeightedDigraph::new(vertices, out)
}

fn build_disturbance(spec: &DisturbanceSpec, channels: usize) -> Result<DisturbanceSignal> {
    Ok(match spec {
        DisturbanceSpec::Tone { amplitude, omega, phase } => DisturbanceSignal::Tone {
            amplitude: amplitude.expand(channels, "amplitude")?,
            omega: *omega,
            phase: match phase {
                Some(p) => p.expand(channels, "phase")?,
                None => vec![0.0; channels],
            },
        },
        DisturbanceSpec::Pulse { amplitude, start, width } => DisturbanceSignal::Pulse {
            amplitude: amplitude.expand(channels, "amplitude")?,
            start: *start,
            width: *width,
        },
        DisturbanceSpec::Chirp { amplitude, omega0, omega1, duration } => DisturbanceSignal::Chirp {
            amplitude: amplitude.expand(channels, "amplitude")?,
            omega0: *omega0,
            omega1: *omega1,
            duration: *duration,
        },
        DisturbanceSpec::Samples { dt, values } => {
            if values.len() != channels {
                return Err(Error::DimensionMismatch(format!(
                    "disturbance.values has {} channels, subsystem has {channels} inputs",
                    values.len()
                )));
            }
            DisturbanceSignal::Samples { dt: *dt, values: matrix(values, "disturbance.values")? }
        }
    })
}

fn disturbance_spec(signal: &DisturbanceSignal) -> DisturbanceSpec {
    match signal {
        DisturbanceSignal::Tone { amplitude, omega, phase } => DisturbanceSpec::Tone {
            amplitude: ChannelValues::Vector(amplitude.clone()),
            omega: *omega,
            phase: Some(ChannelValues::Vector(phase.clone())),
        },
        DisturbanceSignal::Pulse { amplitude, start, width } => {
            DisturbanceSpec::Pulse { amplitude: ChannelValues::Vector(amplitude.clone()), start: *start, width: *width }
        }
        DisturbanceSignal::Chirp { amplitude, omega0, omega1, duration } => DisturbanceSpec::Chirp {
            amplitude: ChannelValues::Vector(amplitude.clone()),
            omega0: *omega0,
            omega1: *omega1,
            duration: *duration,
        },
        DisturbanceSignal::Samples { dt, values } => DisturbanceSpec::Samples { dt: *dt, values: rows(values) },
    }
}

fn build_options(spec: Option<&OptionsSpec>) -> Result<RunOptions> {
    let mut out = RunOptions::default();
    let Some(spec) = spec else { return Ok(out) };
    let positive = |v: Option<f64>, name: &str| -> Result<Option<f64>> {
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Schema(format!("options.{name} must be > 0"))),
            other => Ok(other),
        }
    };
    if let Some(m) = &spec.method {
        out.analysis.method = match m.as_str() {
            "bisect" => SupGainMethod::Bisect,
            "grid" => SupGainMethod::Grid,
            other => {
                return Err(Error::Schema(format!("options.method: expected \"bisect\" or \"grid\", got {other:?}")))
            }
        };
    }
    if let Some(t) = positive(spec.cert_tol, "cert_tol")? {
        out.analysis.cert_tol = t;
    }
    if let Some(p) = spec.grid_points {
        if p < 2 {
            return Err(Error::Schema("options.grid_points must be at least 2".into()));
        }
        out.analysis.sweep.points = p;
    }
    if let Some(lo) = positive(spec.grid_lo, "grid_lo")? {
        out.analysis.sweep.lo_factor = lo;
    }
    if let Some(hi) = positive(spec.grid_hi, "grid_hi")? {
        out.analysis.sweep.hi_factor = hi;
    }
    if out.analysis.sweep.lo_factor >= out.analysis.sweep.hi_factor {
        return Err(Error::Schema("options.grid_lo must be below options.grid_hi".into()));
    }
    out.dt = positive(spec.dt, "dt")?;
    out.horizon = positive(spec.horizon, "horizon")?;
    if let Some(r) = spec.rel_tol {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Schema("options.rel_tol must be >= 0".into()));
        }
        out.rel_tol = r;
    }
    if let Some(s) = spec.seed {
        out.seed = s;
    }
    Ok(out)
}

impl NetworkSpecFile {
    pub fn into_network(self) -> Result<ParsedNetwork> {
        if self.version != SPEC_VERSION {
            return Err(Error::Schema(format!("version: expected {SPEC_VERSION}, got {}", self.version)));
        }
        let subsystem = build_subsystem(&self.subsystem)?;
        let graph = build_graph(self.vertices, &self.edges)?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Schema(format!("alpha must be > 0, got {}", self.alpha)));
        }
        let mut model = NetworkModel::new(graph, self.alpha, subsystem)?;
        if let Some(s) = self.source {
            if s == 0 || s > self.vertices {
                return Err(Error::VertexOutOfRange { vertex: s, count: self.vertices });
            }
            model = model.with_source(s - 1)?;
        }
        let disturbance = match &self.disturbance {
            Some(d) => Some(build_disturbance(d, model.subsystem.m())?),
            None => None,
        };
        let options = build_options(self.options.as_ref())?;
        Ok(ParsedNetwork { model, disturbance, options, raw_options: self.options })
    }

    pub fn from_network(net: &ParsedNetwork) -> Self {
        let ss = &net.model.subsystem;
        let subsystem = match ss.planar_damping() {
            Some(d) => SubsystemSpec { template: Some("planar".into()), d: Some(d), ..Default::default() },
            None => SubsystemSpec {
                a: Some(rows(ss.a())),
                b: Some(rows(ss.b())),
                c: Some(rows(ss.c())),
                ..Default::default()
            },
        };
        NetworkSpecFile {
            version: SPEC_VERSION,
            subsystem,
            alpha: net.model.alpha,
            vertices: net.model.vertex_count(),
            edges: net
                .model
                .graph
                .edges()
                .iter()
                .map(|e| EdgeSpec { from: e.from + 1, to: e.to + 1, weight: e.weight })
                .collect(),
            source: net.model.source.map(|s| s + 1),
            disturbance: net.disturbance.as_ref().map(disturbance_spec),
            options: net.raw_options.clone(),
        }
    }
}

pub fn parse_network_str(text: &str) -> Result<ParsedNetwork> {
    let spec: NetworkSpecFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    spec.into_network()
}

pub fn parse_network_file(path: impl AsRef<Path>) -> Result<ParsedNetwork> {
    parse_network_str(&std::fs::read_to_string(path)?)
}

pub fn serialize_network(net: &ParsedNetwork) -> String {
    serde_json::to_string_pretty(&NetworkSpecFile::from_network(net)).expect("spec file serializes")
}

/// 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn status_name(s: ReportStatus) -> &'static str {
    match s {
        ReportStatus::CertifiedStable => "CERTIFIED_STABLE",
        ReportStatus::CertifiedUnstable => "CERTIFIED_UNSTABLE",
        ReportStatus::Undecided => "UNDECIDED",
    }
}

/// Process exit code for a certification status.
pub fn exit_code(s: ReportStatus) -> i32 {
    match s {
        ReportStatus::CertifiedStable => 0,
        ReportStatus::CertifiedUnstable => 2,
        ReportStatus::Undecided => 3,
    }
}

fn options_json(opts: &AnalysisOptions) -> Value {
    json!({
        "method": match opts.method { SupGainMethod::Bisect => "bisect", SupGainMethod::Grid => "grid" },
        "cert_tol": opts.cert_tol,
        "grid_points": opts.sweep.points,
        "grid_lo": opts.sweep.lo_factor,
        "grid_hi": opts.sweep.hi_factor,
        "refine_rtol": opts.sweep.refine_rtol,
        "bisect_rtol": opts.sweep.bisect_rtol,
    })
}

fn vertex_gain_json(vertex: usize, g: &VertexGain) -> Value {
    match g {
        VertexGain::Exempt => json!({ "vertex": vertex + 1, "status": "exempt", "pass": true }),
        VertexGain::Checked { gain, peak, pass, boundary } => json!({
            "vertex": vertex + 1,
            "status": "checked",
            "loop_gain": gain,
            "sup_gain": peak.value,
            "omega": peak.omega,
            "pass": pass,
            "boundary": boundary,
        }),
        VertexGain::UnstableLoop { gain } => {
            json!({ "vertex": vertex + 1, "status": "unstable_loop", "loop_gain": gain, "pass": false })
        }
    }
}

fn manifold_json(m: &ManifoldReport) -> Value {
    json!({
        "stable": m.stable,
        "laplacian_diagonalizable": m.laplacian_diagonalizable,
        "full_matrix": m.full_matrix,
        "modes": m.modes.iter().map(|mode| json!({
            "lambda": { "re": mode.lambda.re, "im": mode.lambda.im },
            "spectral_abscissa": mode.spectral_abscissa,
            "hurwitz": mode.hurwitz,
        })).collect::<Vec<_>>(),
    })
}

fn counterexample_json(cx: &Counterexample) -> Value {
    json!({ "vertex": cx.vertex + 1, "in_neighbor": cx.in_neighbor + 1, "omega": cx.omega, "gain": cx.gain })
}

fn cause_text(c: &crate::analyzer::Cause) -> String {
    use crate::analyzer::Cause;
    match *c {
        Cause::UnstableLoop { vertex } => Cause::UnstableLoop { vertex: vertex + 1 }.to_string(),
        Cause::GainExceeded { vertex, peak, omega } => {
            Cause::GainExceeded { vertex: vertex + 1, peak, omega }.to_string()
        }
        other => other.to_string(),
    }
}

pub fn stability_report_json(r: &StabilityReport) -> Value {
    json!({
        "status": status_name(r.status),
        "manifold": manifold_json(&r.manifold),
        "vertices": r.vertices.iter().enumerate().map(|(i, g)| vertex_gain_json(i, g)).collect::<Vec<_>>(),
        "counterexample": r.counterexample.as_ref().map(counterexample_json),
        "causes": r.causes.iter().map(cause_text).collect::<Vec<_>>(),
        "options": options_json(&r.options),
    })
}

pub fn impervious_report_json(r: &ImperviousReport, opts: &AnalysisOptions) -> Value {
    json!({
        "region": r.region.iter().map(|v| v + 1).collect::<Vec<_>>(),
        "pass": r.pass,
        "manifold_stable": r.manifold_stable,
        "vertices": r.vertices.iter().map(|(i, g)| vertex_gain_json(*i, g)).collect::<Vec<_>>(),
        "options": options_json(opts),
    })
}

/// Header `t,y1,...` (or `y{i}_{c}` for several channels) and one row per sample.
pub fn trajectories_csv(result: &crate::simulator::SimulationResult) -> String {
    let m = result.channels;
    let mut out = String::from("t");
    for i in 0..result.vertex_count() {
        for c in 0..m {
            if m == 1 {
                write!(out, ",y{}", i + 1).unwrap();
            } else {
                write!(out, ",y{}_{}", i + 1, c + 1).unwrap();
            }
        }
    }
    out.push('\n');
    for k in 0..result.samples() {
        out.push_str(&format_f64(result.time(k)));
        for r in 0..result.outputs.nrows() {
            out.push(',');
            out.push_str(&format_f64(result.outputs[(r, k)]));
        }
        out.push('\n');
    }
    out
}

/// Parses a comma-separated list of 1-based vertex ids into 0-based indices.
pub fn parse_region(text: &str, vertices: usize) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: usize = s.parse().map_err(|_| Error::InvalidArgument(format!("bad vertex id {s:?}")))?;
            if v == 0 || v > vertices {
                return Err(Error::VertexOutOfRange { vertex: v, count: vertices });
            }
            Ok(v - 1)
        })
        .collect()
}
