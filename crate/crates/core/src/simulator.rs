//! Time-domain simulation of the coupled network under a single-source
//! disturbance, output energies, and empirical majorization checks.
//!
//! Simulation can only refute propagation stability: a run with zero violations
//! is evidence for the sampled disturbance and horizons, not a proof.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analyzer::{local_loop, stacked_state_matrix, NetworkModel};
use crate::error::{Error, Result};
use crate::graph::{graph_distance, monotone_reachable, CutsetPartition};
use crate::lti::{simulate_lti, simulate_lti_foh, spectral_radius, StateSpace};

/// Default relative slack for majorization and path checks.
pub const MAJORIZATION_RTOL: f64 = 1e-6;

/// Energies below this fraction of the largest vertex energy at a horizon are
/// treated as roundoff when comparing.
pub const ENERGY_FLOOR_RTOL: f64 = 1e-12;

/// Number of prefix horizons checked in addition to the final one.
pub const PREFIX_HORIZONS: usize = 8;

const MAX_SAMPLES: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSignal {
    /// `a_c sin(omega t + phi_c)` on channel `c`.
    Tone { amplitude: Vec<f64>, omega: f64, phase: Vec<f64> },
    /// `a_c` on `[start, start + width)`, zero elsewhere.
    Pulse { amplitude: Vec<f64>, start: f64, width: f64 },
    /// Linear chirp `a_c sin(omega0 t + (omega1 - omega0) t^2 / (2 duration))`
    /// on `[0, duration]`, zero afterwards.
    Chirp { amplitude: Vec<f64>, omega0: f64, omega1: f64, duration: f64 },
    /// Samples on the simulation grid, `channels x K`.
    Samples { dt: f64, values: DMatrix<f64> },
}

impl DisturbanceSignal {
    pub fn tone(amplitude: f64, omega: f64, phase: f64) -> Self {
        Self::Tone { amplitude: vec![amplitude], omega, phase: vec![phase] }
    }

    pub fn pulse(amplitude: f64, start: f64, width: f64) -> Self {
        Self::Pulse { amplitude: vec![amplitude], start, width }
    }

    pub fn chirp(amplitude: f64, omega0: f64, omega1: f64, duration: f64) -> Self {
        Self::Chirp { amplitude: vec![amplitude], omega0, omega1, duration }
    }

    pub fn channels(&self) -> usize {
        match self {
            Self::Tone { amplitude, .. } | Self::Pulse { amplitude, .. } | Self::Chirp { amplitude, .. } => {
                amplitude.len()
            }
            Self::Samples { values, .. } => values.nrows(),
        }
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = |a: &Vec<f64>| a.iter().map(|v| v * c).collect::<Vec<_>>();
        match self {
            Self::Tone { amplitude, omega, phase } => {
                Self::Tone { amplitude: scale(amplitude), omega: *omega, phase: phase.clone() }
            }
            Self::Pulse { amplitude, start, width } => {
                Self::Pulse { amplitude: scale(amplitude), start: *start, width: *width }
            }
            Self::Chirp { amplitude, omega0, omega1, duration } => {
                Self::Chirp { amplitude: scale(amplitude), omega0: *omega0, omega1: *omega1, duration: *duration }
            }
            Self::Samples { dt, values } => Self::Samples { dt: *dt, values: values * c },
        }
    }

    pub fn validate(&self, channels: usize, dt: f64) -> Result<()> {
        if self.channels() != channels {
            return Err(Error::DimensionMismatch(format!(
                "disturbance has {} channels, subsystem has {channels}",
                self.channels()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            Self::Tone { amplitude, omega, phase } => {
                phase.len() == amplitude.len() && finite(amplitude) && finite(phase) && omega.is_finite()
            }
            Self::Pulse { amplitude, start, width } => {
                finite(amplitude) && start.is_finite() && *start >= 0.0 && width.is_finite() && *width > 0.0
            }
            Self::Chirp { amplitude, omega0, omega1, duration } => {
                finite(amplitude) && omega0.is_finite() && omega1.is_finite() && *duration > 0.0
            }
            Self::Samples { dt: sdt, values } => {
                if (sdt - dt).abs() > 1e-12 * dt {
                    return Err(Error::InvalidArgument(format!("sample spacing {sdt} does not match dt {dt}")));
                }
                values.iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("disturbance parameters must be finite (and width, duration > 0)".into()))
        }
    }

    /// Value on channel `c` at time `t` (`Samples` uses sample index `k`).
    fn value(&self, c: usize, t: f64, k: usize) -> f64 {
        match self {
            Self::Tone { amplitude, omega, phase } => amplitude[c] * (omega * t + phase[c]).sin(),
            Self::Pulse { amplitude, start, width } => {
                if t >= *start && t < start + width {
                    amplitude[c]
                } else {
                    0.0
                }
            }
            Self::Chirp { amplitude, omega0, omega1, duration } => {
                if t <= *duration {
                    amplitude[c] * (omega0 * t + (omega1 - omega0) * t * t / (2.0 * duration)).sin()
                } else {
                    0.0
                }
            }
            Self::Samples { values, .. } => {
                if k < values.ncols() {
                    values[(c, k)]
                } else {
                    0.0
                }
            }
        }
    }

    /// `channels x samples` matrix of values at `t_k = k dt`.
    pub fn sample(&self, dt: f64, samples: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.channels(), samples, |c, k| {
            let t = k as f64 * dt;
            // pulse edges are snapped to the grid
            let t = if matches!(self, Self::Pulse { .. }) { (t / dt).round() * dt + 0.5 * dt } else { t };
            self.value(c, t, k)
        })
    }

    /// Seeded random tone, pulse, or chirp with frequencies in `[0.05, 3]`
    /// rad/time and unit-order amplitudes.
    pub fn random(seed: u64, channels: usize, horizon: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amplitude: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.2..2.0)).collect();
        match rng.gen_range(0..3) {
            0 => Self::Tone {
                amplitude,
                omega: rng.gen_range(0.05..3.0),
                phase: (0..channels).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
            },
            1 => {
                let start = rng.gen_range(0.0..0.2) * horizon;
                let width = rng.gen_range(0.02..0.3) * horizon;
                Self::Pulse { amplitude, start, width }
            }
            _ => Self::Chirp {
                amplitude,
                omega0: rng.gen_range(0.05..1.0),
                omega1: rng.gen_range(0.5..3.0),
                duration: rng.gen_range(0.3..1.0) * horizon,
            },
        }
    }
}

/// Stacked network with the disturbance entering at `source`:
/// `(I (x) A - alpha L (x) B C, e_s (x) B, I (x) C)`.
pub fn build_stacked_system(net: &NetworkModel, source: usize) -> Result<StateSpace> {
    net.graph.check_vertex(source)?;
    let ss = &net.subsystem;
    let (n, m, count) = (ss.n(), ss.m(), net.vertex_count());
    let a = stacked_state_matrix(&net.graph, net.alpha, ss);
    let mut b = DMatrix::zeros(count * n, m);
    b.view_mut((source * n, 0), (n, m)).copy_from(ss.b());
    let mut c = DMatrix::zeros(count * ss.p(), count * n);
    for i in 0..count {
        c.view_mut((i * ss.p(), i * n), (ss.p(), n)).copy_from(ss.c());
    }
    StateSpace::new(a, b, c)
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub dt: f64,
    pub horizon: f64,
    pub source: usize,
    pub channels: usize,
    /// `(N m) x K`: rows `i m .. (i + 1) m` hold vertex `i`.
    pub outputs: DMatrix<f64>,
    /// `prefix_energy[i][k]` is `E_i(t_k)`.
    pub prefix_energy: Vec<Vec<f64>>,
    pub model: NetworkModel,
}

impl SimulationResult {
    pub fn samples(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// `E_i(T)` at the final horizon.
    pub fn energies(&self) -> Vec<f64> {
        self.prefix_energy.iter().map(|e| *e.last().unwrap()).collect()
    }

    pub fn energies_at(&self, k: usize) -> Vec<f64> {
        self.prefix_energy.iter().map(|e| e[k]).collect()
    }

    /// Output of vertex `i` on channel `c` at sample `k`.
    pub fn output(&self, i: usize, c: usize, k: usize) -> f64 {
        self.outputs[(i * self.channels + c, k)]
    }

    pub fn vertex_count(&self) -> usize {
        self.prefix_energy.len()
    }
}

/// Zero-state response of the network to `disturbance` at `source` on
/// `[0, horizon]`, sampled every `dt`.
pub fn simulate(
    net: &NetworkModel,
    source: usize,
    disturbance: &DisturbanceSignal,
    horizon: f64,
    dt: f64,
) -> Result<SimulationResult> {
    if !(horizon > 0.0 && horizon.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("need horizon > 0 and dt > 0, got {horizon}, {dt}")));
    }
    let steps = (horizon / dt).round();
    if !(1.0..=MAX_SAMPLES).contains(&steps) {
        return Err(Error::InvalidArgument(format!("horizon / dt = {steps} outside [1, 1e7]")));
    }
    let m = net.subsystem.m();
    disturbance.validate(m, dt)?;
    let stacked = build_stacked_system(net, source)?;
    let rho = spectral_radius(stacked.a());
    if rho > 0.0 && dt > 0.1 / rho {
        return Err(Error::StepTooLarge { dt, limit: 0.1 / rho });
    }
    let samples = steps as usize + 1;
    let inputs = disturbance.sample(dt, samples);
    let outputs = simulate_lti(&stacked, &inputs, dt)?;
    let prefix_energy =
        (0..net.vertex_count()).map(|i| prefix_energy(&outputs.rows(i * m, m).into_owned(), dt)).collect();
    Ok(SimulationResult { dt, horizon: steps * dt, source, channels: m, outputs, prefix_energy, model: net.clone() })
}

/// Composite trapezoidal `int_0^{t_k} |y|^2 dt` for every sample `k`;
/// `signal` is `channels x K`.
pub fn prefix_energy(signal: &DMatrix<f64>, dt: f64) -> Vec<f64> {
    let sq: Vec<f64> = signal.column_iter().map(|c| c.norm_squared()).collect();
    let mut out = Vec::with_capacity(sq.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in sq.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(sq.len().max(1));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub energies: Vec<f64>,
    pub prefix: Vec<Vec<f64>>,
}

pub fn energy_profile(result: &SimulationResult) -> EnergyProfile {
    EnergyProfile { energies: result.energies(), prefix: result.prefix_energy.clone() }
}

/// Final sample plus [`PREFIX_HORIZONS`] log-spaced earlier samples between 1%
/// and 100% of the horizon.
pub fn default_horizons(result: &SimulationResult) -> Vec<usize> {
    let last = result.samples() - 1;
    let mut out: Vec<usize> = (0..PREFIX_HORIZONS)
        .map(|j| {
            let frac = 10f64.powf(-2.0 + 2.0 * j as f64 / PREFIX_HORIZONS as f64);
            ((frac * last as f64).round() as usize).clamp(1, last)
        })
        .collect();
    out.push(last);
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub cut: Vec<usize>,
    pub vertex: usize,
    pub sample: usize,
    pub time: f64,
    pub energy: f64,
    pub max_cut_energy: f64,
}

/// Flags `E_b > (1 + rel_tol) max_{c in cut} E_c` for every far-side vertex
/// `b` at every requested sample.
pub fn check_majorization(
    result: &SimulationResult,
    cutsets: &[CutsetPartition],
    rel_tol: f64,
    samples: &[usize],
) -> Vec<Violation> {
    let mut out = Vec::new();
    for &k in samples {
        let energies = result.energies_at(k);
        let floor = ENERGY_FLOOR_RTOL * energies.iter().copied().fold(0.0, f64::max);
        for part in cutsets {
            let max_cut = part.cut.iter().map(|&c| energies[c]).fold(0.0, f64::max);
            for &b in &part.far {
                if energies[b] > (1.0 + rel_tol) * max_cut + floor {
                    out.push(Violation {
                        cut: part.cut.clone(),
                        vertex: b,
                        sample: k,
                        time: result.time(k),
                        energy: energies[b],
                        max_cut_energy: max_cut,
                    });
                }
            }
        }
    }
    out
}

/// Reachable vertices lacking an energy non-increasing path from the source at
/// sample `k`.
pub fn path_form_failures(result: &SimulationResult, rel_tol: f64, k: usize) -> Vec<usize> {
    let energies = result.energies_at(k);
    let floor = ENERGY_FLOOR_RTOL * energies.iter().copied().fold(0.0, f64::max);
    // lift every energy by the floor so roundoff-level values compare as equal
    let lifted: Vec<f64> = energies.iter().map(|e| e + floor).collect();
    let dist = graph_distance(&result.model.graph, result.source);
    let reach = monotone_reachable(&result.model.graph, result.source, &lifted, rel_tol);
    (0..energies.len()).filter(|&v| dist[v].is_some() && !reach[v]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    /// `profile[r]` is the largest final energy among vertices at hop distance `r`.
    pub profile: Vec<f64>,
    pub unreachable: Vec<usize>,
    pub non_increasing: bool,
}

pub fn distance_energy_profile(result: &SimulationResult, rel_tol: f64) -> DistanceProfile {
    let energies = result.energies();
    let dist = graph_distance(&result.model.graph, result.source);
    let depth = dist.iter().flatten().copied().max().unwrap_or(0);
    let mut profile = vec![0.0f64; depth + 1];
    let mut unreachable = Vec::new();
    for (v, d) in dist.iter().enumerate() {
        match d {
            Some(r) => profile[*r] = profile[*r].max(energies[v]),
            None => unreachable.push(v),
        }
    }
    let floor = ENERGY_FLOOR_RTOL * energies.iter().copied().fold(0.0, f64::max);
    let non_increasing = profile.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel_tol) + floor);
    DistanceProfile { profile, unreachable, non_increasing }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityError {
    pub max_abs: f64,
    /// `max_abs / max |y_i|` (zero when the output is identically zero).
    pub relative: f64,
}

/// Rebuilds `y_i` on `[0, horizon]` by filtering the weighted average of the
/// truncated neighbor outputs through the local loop `H_i`, and compares with the
/// simulated `y_i`. Neighbor outputs are linearly interpolated between samples.
pub fn filtering_identity_check(result: &SimulationResult, i: usize, horizon: f64) -> Result<IdentityError> {
    let net = &result.model;
    net.graph.check_vertex(i)?;
    if i == result.source {
        return Err(Error::SourceVertex(i));
    }
    let lp = local_loop(net, i)?;
    let last = ((horizon / result.dt).round() as usize).min(result.samples() - 1);
    let m = result.channels;
    let total: f64 = net.graph.incoming(i).iter().map(|(_, g)| g).sum();
    let mut z = DMatrix::zeros(m, last + 1);
    for &(j, g) in net.graph.incoming(i) {
        let w = g / total;
        for k in 0..=last {
            for c in 0..m {
                z[(c, k)] += w * result.output(j, c, k);
            }
        }
    }
    let rebuilt = simulate_lti_foh(&lp.system, &z, result.dt)?;
    let mut max_abs: f64 = 0.0;
    let mut max_y: f64 = 0.0;
    for k in 0..=last {
        for c in 0..m {
            let y = result.output(i, c, k);
            max_abs = max_abs.max((rebuilt[(c, k)] - y).abs());
            max_y = max_y.max(y.abs());
        }
    }
    Ok(IdentityError { max_abs, relative: if max_y > 0.0 { max_abs / max_y } else { 0.0 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_separating_cutsets, validate_cutset, WeightedDigraph, CUTSET_ENUMERATION_CAP};
    use approx::assert_relative_eq;

    fn planar_net(graph: WeightedDigraph, alpha: f64, d: f64) -> NetworkModel {
        NetworkModel::new(graph, alpha, StateSpace::planar(d)).unwrap()
    }

    #[test]
    fn single_vertex_stack_is_subsystem() {
        let net = planar_net(WeightedDigraph::new(1, vec![]).unwrap(), 1.0, 0.5);
        let stacked = build_stacked_system(&net, 0).unwrap();
        assert_eq!(&stacked, &net.subsystem);
    }

    #[test]
    fn stacked_input_placement() {
        let net = planar_net(WeightedDigraph::path(3).unwrap(), 1.0, 1.0);
        let stacked = build_stacked_system(&net, 1).unwrap();
        assert_eq!(stacked.b().column(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(stacked.p(), 3);
    }

    #[test]
    fn zero_disturbance_zero_energy() {
        let net = planar_net(WeightedDigraph::path(3).unwrap(), 1.0, 1.0);
        let r = simulate(&net, 0, &DisturbanceSignal::tone(0.0, 1.0, 0.0), 10.0, 0.01).unwrap();
        assert!(r.energies().iter().all(|e| *e == 0.0));
        let err = filtering_identity_check(&r, 2, 10.0).unwrap();
        assert_eq!(err.max_abs, 0.0);
    }

    #[test]
    fn single_vertex_tone_steady_state() {
        let net = planar_net(WeightedDigraph::new(1, vec![]).unwrap(), 1.0, 1.0);
        // sin input has a DC-like drift through the integrator; use cos phase to start near rest
        let dt = 0.01;
        let r = simulate(&net, 0, &DisturbanceSignal::tone(1.0, 1.0, 0.0), 200.0, dt).unwrap();
        let last = r.samples() - 1;
        let period = (2.0 * std::f64::consts::PI / dt).round() as usize;
        let window: Vec<f64> = (last - period..=last).map(|k| r.output(0, 0, k)).collect();
        let amp =
            0.5 * (window.iter().copied().fold(f64::MIN, f64::max) - window.iter().copied().fold(f64::MAX, f64::min));
        assert_relative_eq!(amp, std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-2);
    }

    #[test]
    fn decoupled_vertices_do_not_interact() {
        let net = planar_net(WeightedDigraph::path(2).unwrap(), 0.0, 1.0);
        let r = simulate(&net, 0, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 20.0, 0.01).unwrap();
        assert!(r.energies()[0] > 0.0);
        assert_eq!(r.energies()[1], 0.0);
        let none = planar_net(WeightedDigraph::new(2, vec![]).unwrap(), 1.0, 1.0);
        let r = simulate(&none, 0, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 20.0, 0.01).unwrap();
        assert_eq!(r.energies()[1], 0.0);
        let cuts = [validate_cutset(&none.graph, 0, &[0]).unwrap()];
        assert!(check_majorization(&r, &cuts, MAJORIZATION_RTOL, &default_horizons(&r)).is_empty());
    }

    #[test]
    fn trapezoid_energy() {
        let ones = DMatrix::from_element(1, 101, 1.0);
        assert_relative_eq!(*prefix_energy(&ones, 0.01).last().unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(*prefix_energy(&DMatrix::zeros(1, 11), 0.1).last().unwrap(), 0.0);
        // A sin(w t) over P whole periods: A^2 P pi / w
        let (a, w, dt) = (1.5, 2.0, 1e-3);
        let periods = 3.0;
        let dur = periods * 2.0 * std::f64::consts::PI / w;
        let n = (dur / dt).round() as usize;
        let dt = dur / n as f64;
        let s = DMatrix::from_fn(1, n + 1, |_, k| a * (w * k as f64 * dt).sin());
        assert_relative_eq!(*prefix_energy(&s, dt).last().unwrap(), a * a * dur / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn prefix_energy_monotone() {
        let net = planar_net(WeightedDigraph::path(4).unwrap(), 1.0, 1.5);
        let r = simulate(&net, 1, &DisturbanceSignal::chirp(1.0, 0.1, 2.0, 30.0), 40.0, 0.01).unwrap();
        for e in &r.prefix_energy {
            assert!(e.windows(2).all(|w| w[1] >= w[0]));
            assert!(e.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn step_guard() {
        let net = planar_net(WeightedDigraph::path(2).unwrap(), 1.0, 1.0);
        assert!(matches!(
            simulate(&net, 0, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 10.0, 1.0),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn filtering_identity_source_is_rejected() {
        let net = planar_net(WeightedDigraph::path(3).unwrap(), 1.0, 2.0);
        let r = simulate(&net, 0, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 5.0, 0.01).unwrap();
        assert!(matches!(filtering_identity_check(&r, 0, 5.0), Err(Error::SourceVertex(0))));
    }

    #[test]
    fn single_in_edge_identity() {
        let net = planar_net(WeightedDigraph::directed_line(3).unwrap(), 1.0, 2.0);
        let r = simulate(&net, 0, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 20.0, 1e-3).unwrap();
        let e = filtering_identity_check(&r, 2, 20.0).unwrap();
        assert!(e.relative < 1e-6, "{e:?}");
    }

    #[test]
    fn certified_path_has_no_violations() {
        let net = planar_net(WeightedDigraph::path(4).unwrap(), 1.0, 2.0);
        for source in 0..4 {
            let r = simulate(&net, source, &DisturbanceSignal::tone(1.0, 0.9, 0.3), 60.0, 0.01).unwrap();
            let cuts = enumerate_separating_cutsets(&net.graph, source, CUTSET_ENUMERATION_CAP).unwrap();
            assert!(check_majorization(&r, &cuts, MAJORIZATION_RTOL, &default_horizons(&r)).is_empty());
            assert!(distance_energy_profile(&r, MAJORIZATION_RTOL).non_increasing);
            assert!(path_form_failures(&r, MAJORIZATION_RTOL, r.samples() - 1).is_empty());
        }
    }

    #[test]
    fn random_disturbances_are_reproducible() {
        assert_eq!(DisturbanceSignal::random(7, 2, 50.0), DisturbanceSignal::random(7, 2, 50.0));
        assert_eq!(DisturbanceSignal::random(7, 2, 50.0).channels(), 2);
    }

    #[test]
    fn distance_profile_single_vertex() {
        let net = planar_net(WeightedDigraph::new(1, vec![]).unwrap(), 1.0, 1.0);
        let r = simulate(&net, 0, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 5.0, 0.01).unwrap();
        let p = distance_energy_profile(&r, MAJORIZATION_RTOL);
        assert_eq!(p.profile.len(), 1);
        assert!(p.non_increasing);
    }
}
