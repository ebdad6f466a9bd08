//! Frequency-domain certification of disturbance-propagation stability.
//!
//! Each vertex `i` with incoming neighbors gets a local loop: the subsystem under
//! unity negative feedback with gain `k_i = alpha * sum_j g_ij`,
//!
//! ```text
//! H_i(s) = k_i C (sI - A + k_i B C)^-1 B
//! ```
//!
//! The network is certified when the synchronization manifold is stable and every
//! local loop has peak gain at most one.

mod certify;
pub mod hinf;
mod manifold;
mod siso;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{weighted_in_degree, WeightedDigraph};
use crate::lti::{eval_transfer, is_hurwitz_real, StateSpace};

pub use certify::{
    certify, certify_impervious, Cause, Counterexample, ImperviousReport, ReportStatus, StabilityReport,
};
pub use hinf::{peak_gain, GainPeak, SupGainMethod, SweepOptions};
pub use manifold::{manifold_stable, manifold_stable_full_matrix, stacked_state_matrix, ManifoldReport, ModeVerdict};
pub use siso::{
    is_positive_real, min_real_part, planar_damping_threshold, pole_screen, siso_real_part_condition, PlanarThreshold,
    RealPartCondition, RealPartMin, ScreenVerdict,
};

/// Tolerance on the `sup gain <= 1` test.
pub const CERTIFICATION_TOL: f64 = 1e-7;

/// Homogeneous network: one strictly proper subsystem per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub graph: WeightedDigraph,
    pub alpha: f64,
    pub subsystem: StateSpace,
    pub source: Option<usize>,
}

impl NetworkModel {
    pub fn new(graph: WeightedDigraph, alpha: f64, subsystem: StateSpace) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling strength must be >= 0, got {alpha}")));
        }
        if !subsystem.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "subsystem must have as many outputs as inputs, got {} and {}",
                subsystem.p(),
                subsystem.m()
            )));
        }
        if !subsystem.is_strictly_proper() {
            return Err(Error::Feedthrough);
        }
        Ok(Self { graph, alpha, subsystem, source: None })
    }

    pub fn with_source(mut self, source: usize) -> Result<Self> {
        self.graph.check_vertex(source)?;
        self.source = Some(source);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// `k_i = alpha * sum_j g_ij`.
    pub fn loop_gain(&self, i: usize) -> f64 {
        self.alpha * weighted_in_degree(&self.graph, i)
    }

    /// `alpha * max_i sum_j g_ij`.
    pub fn max_loop_gain(&self) -> f64 {
        self.alpha * self.graph.max_weighted_in_degree()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalLoop {
    pub vertex: usize,
    pub gain: f64,
    /// Realization `(A - k B C, k B, C)` of `H_i`.
    pub system: StateSpace,
}

impl LocalLoop {
    /// `H_i(s)` from the closed-loop realization.
    pub fn transfer(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        eval_transfer(&self.system, s)
    }

    pub fn is_stable(&self) -> bool {
        is_hurwitz_real(self.system.a(), 0.0)
    }
}

/// Builds the local loop of vertex `i`.
pub fn local_loop(net: &NetworkModel, i: usize) -> Result<LocalLoop> {
    net.graph.check_vertex(i)?;
    let gain = net.loop_gain(i);
    if net.graph.incoming(i).is_empty() || gain == 0.0 {
        return Err(Error::NoIncomingEdges(i));
    }
    Ok(loop_with_gain(&net.subsystem, i, gain))
}

pub(crate) fn loop_with_gain(ss: &StateSpace, vertex: usize, gain: f64) -> LocalLoop {
    let a = ss.a() - gain * ss.b() * ss.c();
    let b = gain * ss.b();
    let system = StateSpace::new(a, b, ss.c().clone()).expect("closed loop keeps dimensions");
    LocalLoop { vertex, gain, system }
}

/// `k T(s) / (1 + k T(s))` evaluated from the open-loop transfer function.
pub fn siso_loop_transfer(ss: &StateSpace, gain: f64, s: Complex64) -> Result<Complex64> {
    if !ss.is_siso() {
        return Err(Error::NotSiso(ss.m()));
    }
    let t = eval_transfer(ss, s)?[(0, 0)];
    let kt = gain * t;
    Ok(kt / (1.0 + kt))
}

/// Peak gain of a local loop. Fails with `UnstableLoop` when the closed-loop
/// state matrix is not Hurwitz.
pub fn sup_gain(lp: &LocalLoop, method: SupGainMethod, opts: &SweepOptions) -> Result<GainPeak> {
    peak_gain(&lp.system, method, opts).map_err(|e| match e {
        Error::NotHurwitz => Error::UnstableLoop(lp.vertex),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub method: SupGainMethod,
    pub sweep: SweepOptions,
    pub cert_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { method: SupGainMethod::Bisect, sweep: SweepOptions::default(), cert_tol: CERTIFICATION_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexGain {
    /// No incoming edges: the vertex never receives a propagated disturbance.
    Exempt,
    Checked {
        gain: f64,
        peak: GainPeak,
        pass: bool,
        /// Peak within `cert_tol` of one.
        boundary: bool,
    },
    /// Closed-loop state matrix not Hurwitz; the peak gain is unbounded.
    UnstableLoop { gain: f64 },
}

impl VertexGain {
    pub fn passes(&self) -> bool {
        match self {
            VertexGain::Exempt => true,
            VertexGain::Checked { pass, .. } => *pass,
            VertexGain::UnstableLoop { .. } => false,
        }
    }
}

pub(crate) fn vertex_gain(net: &NetworkModel, i: usize, opts: &AnalysisOptions) -> Result<VertexGain> {
    let lp = match local_loop(net, i) {
        Ok(lp) => lp,
        Err(Error::NoIncomingEdges(_)) => return Ok(VertexGain::Exempt),
        Err(e) => return Err(e),
    };
    let peak = sup_gain(&lp, opts.method, &opts.sweep)?;
    Ok(VertexGain::Checked {
        gain: lp.gain,
        peak,
        pass: peak.value <= 1.0 + opts.cert_tol,
        boundary: (peak.value - 1.0).abs() <= opts.cert_tol,
    })
}

/// Local requirement `sup_w sigma_max(H_i(jw)) <= 1 + tol` at every vertex.
pub fn check_local_requirement(net: &NetworkModel, opts: &AnalysisOptions) -> Result<Vec<VertexGain>> {
    (0..net.vertex_count()).map(|i| vertex_gain(net, i, opts)).collect()
}
