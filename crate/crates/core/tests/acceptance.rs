//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use netprop::analyzer::{
    certify, check_local_requirement, is_positive_real, local_loop, manifold_stable, manifold_stable_full_matrix,
    peak_gain, planar_damping_threshold, siso_real_part_condition, AnalysisOptions, NetworkModel, ReportStatus,
    SupGainMethod, SweepOptions, VertexGain,
};
use netprop::graph::{
    enumerate_separating_cutsets, laplacian, validate_cutset, WeightedDigraph, CUTSET_ENUMERATION_CAP,
};
use netprop::io::parse_network_file;
use netprop::lti::{eval_transfer, StateSpace};
use netprop::simulator::{
    build_stacked_system, check_majorization, default_horizons, filtering_identity_check, path_form_failures, simulate,
    DisturbanceSignal, MAJORIZATION_RTOL,
};
use netprop::Error;

use common::{
    fixture, random_digraph, random_positive_real, random_siso_subsystem, random_stable_siso,
    random_strongly_connected, random_undirected,
};

// Tolerances pinned by the acceptance criteria.
const BOUNDARY_GAIN_TOL: f64 = 1e-6;
const FAILING_GAIN_MARGIN: f64 = 1e-4;
const RESONANCE_TOL: f64 = 1e-3;
const METHOD_AGREEMENT_RTOL: f64 = 1e-4;
const TIGHTNESS_RATIO: f64 = 1.25;
const IDENTITY_RTOL: f64 = 1e-6;
const PARSEVAL_RTOL: f64 = 1e-2;
const SCALING_RTOL: f64 = 1e-10;
const DT_HALVING_RTOL: f64 = 1e-3;
const FLIP_TOL: f64 = 0.01;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn planar_net(graph: WeightedDigraph, alpha: f64, d: f64) -> NetworkModel {
    NetworkModel::new(graph, alpha, StateSpace::planar(d)).unwrap()
}

fn planar_threshold_reproduction() -> Outcome {
    let start = Instant::now();
    let stable = parse_network_file(fixture("path6_planar_d2.json")).map_err(err)?;
    let t = planar_damping_threshold(&stable.model).map_err(err)?;
    ensure(t.critical_damping == 2.0, format!("d* = {} (expected exactly 2)", t.critical_damping))?;
    let opts = AnalysisOptions::default();
    let report = certify(&stable.model, &opts).map_err(err)?;
    ensure(report.status == ReportStatus::CertifiedStable, format!("d = 2 status {:?}", report.status))?;
    for i in 1..5 {
        match report.vertices[i] {
            VertexGain::Checked { peak, .. } => ensure(
                (peak.value - 1.0).abs() <= BOUNDARY_GAIN_TOL,
                format!("interior vertex {} gain {}", i + 1, peak.value),
            )?,
            other => return Err(format!("interior vertex {} not checked: {other:?}", i + 1)),
        }
    }
    let low = parse_network_file(fixture("path6_planar_d1_9.json")).map_err(err)?;
    let report = certify(&low.model, &opts).map_err(err)?;
    let worst = report
        .vertices
        .iter()
        .filter_map(|v| match v {
            VertexGain::Checked { peak, .. } => Some(peak.value),
            _ => None,
        })
        .fold(0.0, f64::max);
    ensure(worst > 1.0 + FAILING_GAIN_MARGIN, format!("d = 1.9 worst gain {worst}"))?;
    ensure(report.status != ReportStatus::CertifiedStable, "d = 1.9 certified stable")?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("d* = 2, d = 1.9 worst gain {worst:.6}, {:.2?}", elapsed))
}

fn resonance_oracle() -> Outcome {
    let net = planar_net(WeightedDigraph::path(2).unwrap(), 1.0, 1.0);
    let lp = local_loop(&net, 1).map_err(err)?;
    let zeta: f64 = 0.5;
    let peak = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
    let omega = (1.0 - 2.0 * zeta * zeta).sqrt();
    let opts = SweepOptions::default();
    let bisect = peak_gain(&lp.system, SupGainMethod::Bisect, &opts).map_err(err)?;
    let grid = peak_gain(&lp.system, SupGainMethod::Grid, &opts).map_err(err)?;
    ensure((bisect.value - peak).abs() <= RESONANCE_TOL, format!("peak {} vs {peak}", bisect.value))?;
    ensure((bisect.omega - omega).abs() <= RESONANCE_TOL, format!("omega {} vs {omega}", bisect.omega))?;
    ensure(
        (bisect.value - grid.value).abs() <= METHOD_AGREEMENT_RTOL * bisect.value,
        format!("bisect {} grid {}", bisect.value, grid.value),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let order = rng.gen_range(1..=5);
        let ss = random_stable_siso(&mut rng, order, 0.05);
        let b = peak_gain(&ss, SupGainMethod::Bisect, &opts).map_err(err)?;
        let g = peak_gain(&ss, SupGainMethod::Grid, &opts).map_err(err)?;
        worst = worst.max((b.value - g.value).abs() / b.value);
    }
    ensure(worst <= METHOD_AGREEMENT_RTOL, format!("random loops disagree by {worst:e}"))?;
    Ok(format!("peak {:.6} at {:.6}, worst random disagreement {worst:.1e}", bisect.value, bisect.omega))
}

fn tightness_construction() -> Outcome {
    let net = parse_network_file(fixture("line3_planar_d1.json")).map_err(err)?;
    let source = net.model.source.ok_or("fixture has no source")?;
    let tone = net.disturbance.clone().ok_or("fixture has no disturbance")?;
    let result = simulate(&net.model, source, &tone, 500.0, 0.01).map_err(err)?;
    let e = result.energies();
    let ratio = e[2] / e[1];
    ensure(ratio >= TIGHTNESS_RATIO, format!("E3/E2 = {ratio}"))?;
    let cut = validate_cutset(&net.model.graph, source, &[1]).map_err(err)?;
    let violations = check_majorization(&result, &[cut], MAJORIZATION_RTOL, &default_horizons(&result));
    ensure(!violations.is_empty(), "no violation across cutset {2}")?;
    let report = certify(&net.model, &AnalysisOptions::default()).map_err(err)?;
    ensure(report.status == ReportStatus::CertifiedUnstable, format!("status {:?}", report.status))?;
    let cx = report.counterexample.ok_or("no counterexample")?;
    ensure(cx.vertex == 1 || cx.vertex == 2, format!("counterexample at vertex {}", cx.vertex + 1))?;
    Ok(format!(
        "E3/E2 = {ratio:.4}, {} violations, counterexample vertex {} at omega {:.5}",
        violations.len(),
        cx.vertex + 1,
        cx.omega
    ))
}

fn certified_networks_majorize() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut graphs, mut runs, mut resampled) = (0, 0, 0);
    let opts = AnalysisOptions::default();
    while graphs < 10 {
        let n = rng.gen_range(3..=7);
        let graph = random_strongly_connected(&mut rng, n, 0.3);
        let probe = planar_net(graph.clone(), 1.0, 1.0);
        let d = 1.05 * planar_damping_threshold(&probe).map_err(err)?.critical_damping;
        let net = planar_net(graph, 1.0, d);
        if certify(&net, &opts).map_err(err)?.status != ReportStatus::CertifiedStable {
            // complex Laplacian eigenvalues can still destabilize the manifold
            resampled += 1;
            continue;
        }
        graphs += 1;
        let mut sources: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(sources.as_mut_slice(), &mut rng);
        for &s in &sources[..3] {
            let cuts = enumerate_separating_cutsets(&net.graph, s, CUTSET_ENUMERATION_CAP).map_err(err)?;
            for _ in 0..20 {
                let seed = rng.gen();
                let w = DisturbanceSignal::random(seed, 1, 60.0);
                let result = simulate(&net, s, &w, 60.0, 0.01).map_err(err)?;
                let horizons = default_horizons(&result);
                ensure(horizons.len() == 9, format!("{} horizons", horizons.len()))?;
                let violations = check_majorization(&result, &cuts, MAJORIZATION_RTOL, &horizons);
                if let Some(v) = violations.first() {
                    return Err(format!("seed {seed}, source {}: {v:?}", s + 1));
                }
                for &k in &horizons {
                    let failures = path_form_failures(&result, MAJORIZATION_RTOL, k);
                    ensure(failures.is_empty(), format!("seed {seed}: path form disagrees at sample {k}"))?;
                }
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("{runs} runs on 10 graphs ({resampled} resampled), zero violations, {elapsed:.1?}"))
}

fn siso_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = AnalysisOptions::default();
    let (mut checked, mut passing, mut skipped) = (0, 0, 0);
    while checked < 50 {
        let ss = random_siso_subsystem(&mut rng);
        let n = rng.gen_range(2..=6);
        let graph = random_digraph(&mut rng, n, 0.5);
        let alpha = 10f64.powf(rng.gen_range(-1.5..1.0));
        let net = NetworkModel::new(graph, alpha, ss).map_err(err)?;
        let local = match check_local_requirement(&net, &opts) {
            Ok(v) => v.iter().all(VertexGain::passes),
            Err(Error::UnstableLoop(_)) => {
                // the real-part bound says nothing about closed-loop stability
                skipped += 1;
                continue;
            }
            Err(e) => return Err(err(e)),
        };
        let real = siso_real_part_condition(&net, &opts.sweep).map_err(err)?;
        ensure(real.pass == local, format!("instance {checked}: real-part {} local {local}", real.pass))?;
        checked += 1;
        passing += usize::from(local);
    }
    Ok(format!("50 instances agree ({passing} passing, {skipped} unstable loops resampled)"))
}

fn positive_real_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = AnalysisOptions::default();
    for k in 0..20 {
        let order = rng.gen_range(1..=4);
        let ss = random_positive_real(&mut rng, order);
        ensure(is_positive_real(&ss, &opts.sweep).map_err(err)?, format!("subsystem {k} not positive real"))?;
        let n = rng.gen_range(2..=7);
        let graph = random_digraph(&mut rng, n, 0.5);
        for alpha in [0.1, 1.0, 10.0] {
            let net = NetworkModel::new(graph.clone(), alpha, ss.clone()).map_err(err)?;
            let gains = check_local_requirement(&net, &opts).map_err(err)?;
            ensure(gains.iter().all(VertexGain::passes), format!("subsystem {k}, alpha {alpha} fails"))?;
        }
    }
    Ok("20 subsystems x 3 couplings pass".into())
}

fn manifold_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fixtures: Vec<NetworkModel> = Vec::new();
    for _ in 0..30 {
        let n = rng.gen_range(2..=6);
        let graph = match rng.gen_range(0..3) {
            0 => random_undirected(&mut rng, n, 0.6),
            1 => random_strongly_connected(&mut rng, n, 0.3),
            _ => WeightedDigraph::directed_cycle(n).unwrap(),
        };
        let ss = random_siso_subsystem(&mut rng);
        fixtures.push(NetworkModel::new(graph, rng.gen_range(0.2..3.0), ss).map_err(err)?);
    }
    let mut compared = 0;
    for net in &fixtures {
        if !laplacian(&net.graph).diagonalizable {
            continue;
        }
        let modal = manifold_stable(net).stable;
        ensure(modal == manifold_stable_full_matrix(net), "modal and full-matrix verdicts differ")?;
        compared += 1;
    }

    // 3-cycle: s^2 + d s + lambda with lambda = 1.5 +- 0.866j is Hurwitz iff d^2 Re(lambda) > Im(lambda)^2
    let cycle = WeightedDigraph::directed_cycle(3).unwrap();
    let flip = |verdict: &dyn Fn(&NetworkModel) -> bool| {
        let (mut lo, mut hi) = (0.01, 3.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if verdict(&planar_net(cycle.clone(), 1.0, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let modal_flip = flip(&|n| manifold_stable(n).stable);
    let full_flip = flip(&manifold_stable_full_matrix);
    let oracle = (0.75f64 / 1.5).sqrt();
    ensure((modal_flip - full_flip).abs() <= FLIP_TOL, format!("flips {modal_flip} vs {full_flip}"))?;
    ensure((modal_flip - oracle).abs() <= FLIP_TOL, format!("flip {modal_flip} vs oracle {oracle}"))?;
    Ok(format!("{compared} diagonalizable fixtures agree; 3-cycle flips at {modal_flip:.4} / {full_flip:.4}"))
}

fn filtering_identity() -> Outcome {
    let net = parse_network_file(fixture("path3_planar_d2_pulse.json")).map_err(err)?;
    let w = net.disturbance.clone().ok_or("fixture has no disturbance")?;
    let result = simulate(&net.model, 0, &w, 20.0, 1e-3).map_err(err)?;
    let mut worst: f64 = 0.0;
    for i in [1, 2] {
        let e = filtering_identity_check(&result, i, 20.0).map_err(err)?;
        worst = worst.max(e.relative);
    }
    ensure(worst <= IDENTITY_RTOL, format!("relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.2e}"))
}

/// Energy of each vertex output from the frequency domain: the sampled
/// disturbance spectrum (FFT) times the stacked transfer function.
fn spectral_energies(stacked: &StateSpace, w: &DMatrix<f64>, dt: f64, vertices: usize) -> Vec<f64> {
    let n = w.ncols();
    let mut buf: Vec<Complex64> = w.row(0).iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut out = vec![0.0; vertices];
    for (k, wk) in buf.iter().enumerate() {
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let omega = 2.0 * std::f64::consts::PI * signed / (n as f64 * dt);
        // zero-order hold on the input
        let hold = if omega == 0.0 {
            Complex64::new(dt, 0.0)
        } else {
            (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -omega * dt).exp()) / Complex64::new(0.0, omega)
        };
        let g = eval_transfer(stacked, Complex64::new(0.0, omega)).unwrap();
        for (i, e) in out.iter_mut().enumerate() {
            *e += (g[(i, 0)] * hold * wk).norm_sqr() / (n as f64 * dt);
        }
    }
    out
}

fn numerical_hygiene() -> Outcome {
    // Parseval on a network whose outputs decay
    let damped = StateSpace::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
    )
    .unwrap();
    let net = NetworkModel::new(WeightedDigraph::path(3).unwrap(), 1.0, damped).unwrap();
    let (dt, horizon) = (0.01, 120.0);
    let pulse = DisturbanceSignal::pulse(1.0, 0.0, 1.0);
    let result = simulate(&net, 0, &pulse, horizon, dt).map_err(err)?;
    let stacked = build_stacked_system(&net, 0).map_err(err)?;
    let w = pulse.sample(dt, result.samples());
    let spectral = spectral_energies(&stacked, &w, dt, 3);
    let mut parseval: f64 = 0.0;
    for (e, s) in result.energies().iter().zip(&spectral) {
        parseval = parseval.max((e - s).abs() / s);
    }
    ensure(parseval <= PARSEVAL_RTOL, format!("Parseval mismatch {parseval:e}"))?;

    // scaling
    let c = 3.7;
    let scaled = simulate(&net, 0, &pulse.scaled(c), horizon, dt).map_err(err)?;
    let mut scaling: f64 = 0.0;
    for (a, b) in result.energies().iter().zip(scaled.energies()) {
        scaling = scaling.max((b - c * c * a).abs() / (c * c * a));
    }
    ensure(scaling <= SCALING_RTOL, format!("scaling mismatch {scaling:e}"))?;

    // dt halving on the acceptance fixtures
    let mut halving: f64 = 0.0;
    for name in ["line3_planar_d1.json", "path3_planar_d2_pulse.json"] {
        let net = parse_network_file(fixture(name)).map_err(err)?;
        let w = net.disturbance.clone().unwrap();
        let (dt, horizon) = (net.options.dt.unwrap(), net.options.horizon.unwrap());
        let coarse = simulate(&net.model, 0, &w, horizon, dt).map_err(err)?;
        let fine = simulate(&net.model, 0, &w, horizon, dt / 2.0).map_err(err)?;
        for (a, b) in coarse.energies().iter().zip(fine.energies()) {
            halving = halving.max((a - b).abs() / b);
        }
    }
    ensure(halving < DT_HALVING_RTOL, format!("dt halving changes energies by {halving:e}"))?;
    Ok(format!("Parseval {parseval:.1e}, scaling {scaling:.1e}, dt halving {halving:.1e}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("planar threshold reproduction", planar_threshold_reproduction),
        ("second-order resonance oracle", resonance_oracle),
        ("single-edge tightness construction", tightness_construction),
        ("certified networks show no violations", certified_networks_majorize),
        ("SISO real-part equivalence", siso_equivalence),
        ("positive-real subsystems always pass", positive_real_property),
        ("manifold modal vs full-matrix", manifold_cross_check),
        ("filtering identity", filtering_identity),
        ("numerical hygiene", numerical_hygiene),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("acceptance {}: PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {}: FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
