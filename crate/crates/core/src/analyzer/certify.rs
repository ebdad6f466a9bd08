use super::manifold::{manifold_stable, ManifoldReport};
use super::{vertex_gain, AnalysisOptions, NetworkModel, VertexGain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStatus {
    CertifiedStable,
    CertifiedUnstable,
    Undecided,
}

/// Single-tone witness: a tone at `omega` injected upstream of `vertex` is
/// amplified from `in_neighbor` to `vertex`, which violates majorization across
/// the cutset `{in_neighbor}` for long horizons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counterexample {
    pub vertex: usize,
    pub in_neighbor: usize,
    pub omega: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub status: ReportStatus,
    pub manifold: ManifoldReport,
    pub vertices: Vec<VertexGain>,
    pub counterexample: Option<Counterexample>,
    pub causes: Vec<Cause>,
    pub options: AnalysisOptions,
}

/// Reason a report is not `CertifiedStable`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cause {
    ManifoldUnstable,
    UnstableLoop {
        vertex: usize,
    },
    GainExceeded {
        vertex: usize,
        peak: f64,
        omega: f64,
    },
    /// Gain failures without a single-tone witness: MIMO subsystem, or every
    /// failing vertex has several incoming edges.
    SufficientOnly {
        mimo: bool,
    },
}

impl std::fmt::Display for Cause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cause::ManifoldUnstable => write!(f, "synchronization manifold is not asymptotically stable"),
            Cause::UnstableLoop { vertex } => write!(f, "local loop at vertex {vertex} is unstable"),
            Cause::GainExceeded { vertex, peak, omega } => {
                write!(f, "vertex {vertex}: peak gain {peak} exceeds 1 at omega {omega}")
            }
            Cause::SufficientOnly { mimo: true } => write!(f, "gain test is only sufficient for MIMO subsystems"),
            Cause::SufficientOnly { mimo: false } => {
                write!(f, "failing vertices have several incoming edges; the gain test is only sufficient")
            }
        }
    }
}

fn assess_vertex(net: &NetworkModel, i: usize, opts: &AnalysisOptions) -> Result<VertexGain> {
    match vertex_gain(net, i, opts) {
        Err(Error::UnstableLoop(_)) => Ok(VertexGain::UnstableLoop { gain: net.loop_gain(i) }),
        other => other,
    }
}

/// Sufficient-condition certificate, with a tightness witness for SISO
/// vertices fed by a single edge.
pub fn certify(net: &NetworkModel, opts: &AnalysisOptions) -> Result<StabilityReport> {
    let manifold = manifold_stable(net);
    let vertices: Vec<VertexGain> =
        (0..net.vertex_count()).map(|i| assess_vertex(net, i, opts)).collect::<Result<_>>()?;
    let mut causes = Vec::new();

    if !manifold.stable {
        causes.push(Cause::ManifoldUnstable);
    }
    for (i, v) in vertices.iter().enumerate() {
        match v {
            VertexGain::UnstableLoop { .. } => causes.push(Cause::UnstableLoop { vertex: i }),
            VertexGain::Checked { pass: false, peak, .. } => {
                causes.push(Cause::GainExceeded { vertex: i, peak: peak.value, omega: peak.omega })
            }
            _ => {}
        }
    }

    let all_pass = vertices.iter().all(VertexGain::passes);
    let counterexample = if net.subsystem.is_siso() {
        vertices.iter().enumerate().find_map(|(i, v)| match (v, net.graph.incoming(i)) {
            (VertexGain::Checked { pass: false, peak, .. }, [(j, _)]) => {
                Some(Counterexample { vertex: i, in_neighbor: *j, omega: peak.omega, gain: peak.value })
            }
            _ => None,
        })
    } else {
        None
    };

    let status = if manifold.stable && all_pass {
        ReportStatus::CertifiedStable
    } else if !manifold.stable || counterexample.is_some() {
        ReportStatus::CertifiedUnstable
    } else {
        causes.push(Cause::SufficientOnly { mimo: !net.subsystem.is_siso() });
        ReportStatus::Undecided
    };

    Ok(StabilityReport { status, manifold, vertices, counterexample, causes, options: *opts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImperviousReport {
    pub region: Vec<usize>,
    pub manifold_stable: bool,
    /// `(vertex, assessment)` for each region vertex; loop gains use the full
    /// graph's in-edges.
    pub vertices: Vec<(usize, VertexGain)>,
    pub pass: bool,
}

/// Sufficient condition for the region to attenuate disturbances internally.
pub fn certify_impervious(net: &NetworkModel, region: &[usize], opts: &AnalysisOptions) -> Result<ImperviousReport> {
    for &v in region {
        net.graph.check_vertex(v)?;
    }
    let mut region = region.to_vec();
    region.sort_unstable();
    region.dedup();
    if !net.graph.is_strongly_connected_on(&region) {
        return Err(Error::NotStronglyConnected);
    }
    let manifold = manifold_stable(net);
    let vertices: Vec<(usize, VertexGain)> =
        region.iter().map(|&i| assess_vertex(net, i, opts).map(|g| (i, g))).collect::<Result<_>>()?;
    let pass = manifold.stable && vertices.iter().all(|(_, g)| g.passes());
    Ok(ImperviousReport { region, manifold_stable: manifold.stable, vertices, pass })
}
