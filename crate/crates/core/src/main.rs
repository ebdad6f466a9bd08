use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use netprop::analyzer::{certify, certify_impervious, planar_damping_threshold};
use netprop::graph::{enumerate_separating_cutsets, CUTSET_ENUMERATION_CAP};
use netprop::io::{
    exit_code, format_f64, impervious_report_json, parse_network_file, parse_region, stability_report_json,
    trajectories_csv, ParsedNetwork,
};
use netprop::lti::{eval_transfer, FrequencyGrid};
use netprop::simulator::{
    check_majorization, default_horizons, distance_energy_profile, path_form_failures, simulate, DisturbanceSignal,
};
use netprop::{Error, Result};

#[derive(Parser)]
#[command(name = "netprop", version, about = "Disturbance-propagation stability of coupled LTI networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency-domain certificate; exit 0 stable, 2 unstable, 3 undecided.
    Certify { spec: PathBuf },
    /// Simulate a single-source disturbance and check energy majorization.
    Simulate {
        spec: PathBuf,
        /// Source vertex (1-based); defaults to the file's source.
        #[arg(long)]
        source: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Seed for the random disturbance used when the file has none.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        check_cutsets: bool,
        #[arg(long)]
        check_paths: bool,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Open-loop frequency response as CSV (omega, Re T, Im T).
    ExportNyquist {
        spec: PathBuf,
        #[arg(long, default_value_t = 2000)]
        points: usize,
    },
    /// Critical damping for the planar template.
    Threshold { spec: PathBuf },
    /// Check that a strongly connected region attenuates disturbances internally.
    Impervious {
        spec: PathBuf,
        /// Comma-separated 1-based vertex ids.
        #[arg(long)]
        region: String,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("json value serializes")));
}

fn run_certify(net: &ParsedNetwork) -> Result<i32> {
    let report = certify(&net.model, &net.options.analysis)?;
    print_json(&stability_report_json(&report));
    Ok(exit_code(report.status))
}

struct SimulateArgs {
    source: Option<usize>,
    horizon: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
    check_cutsets: bool,
    check_paths: bool,
    out_csv: Option<PathBuf>,
}

fn run_simulate(net: &ParsedNetwork, args: SimulateArgs) -> Result<i32> {
    let n = net.model.vertex_count();
    let source = match (args.source, net.model.source) {
        (Some(s), _) if s == 0 || s > n => return Err(Error::VertexOutOfRange { vertex: s, count: n }),
        (Some(s), _) => s - 1,
        (None, Some(s)) => s,
        (None, None) => return Err(Error::InvalidArgument("no source: pass --source or set it in the file".into())),
    };
    let horizon = args
        .horizon
        .or(net.options.horizon)
        .ok_or_else(|| Error::InvalidArgument("no horizon: pass --horizon or set options.horizon".into()))?;
    let dt = args
        .dt
        .or(net.options.dt)
        .ok_or_else(|| Error::InvalidArgument("no step: pass --dt or set options.dt".into()))?;
    let seed = args.seed.unwrap_or(net.options.seed);
    let (disturbance, random_seed) = match &net.disturbance {
        Some(d) => (d.clone(), None),
        None => (DisturbanceSignal::random(seed, net.model.subsystem.m(), horizon), Some(seed)),
    };
    let result = simulate(&net.model, source, &disturbance, horizon, dt)?;
    let rel_tol = net.options.rel_tol;
    let horizons = default_horizons(&result);

    let mut out = json!({
        "source": source + 1,
        "dt": dt,
        "horizon": result.horizon,
        "samples": result.samples(),
        "seed": random_seed,
        "disturbance": format!("{disturbance:?}"),
        "rel_tol": rel_tol,
        "energies": result.energies(),
        "note": "simulation can refute propagation stability but cannot confirm it",
    });

    let mut cutset_violations = None;
    if args.check_cutsets {
        let cuts = enumerate_separating_cutsets(&net.model.graph, source, CUTSET_ENUMERATION_CAP)?;
        let violations = check_majorization(&result, &cuts, rel_tol, &horizons);
        cutset_violations = Some(!violations.is_empty());
        out["cutsets"] = json!({
            "checked": cuts.len(),
            "horizons": horizons.iter().map(|&k| result.time(k)).collect::<Vec<_>>(),
            "violations": violations.iter().map(|v| json!({
                "cut": v.cut.iter().map(|c| c + 1).collect::<Vec<_>>(),
                "vertex": v.vertex + 1,
                "time": v.time,
                "energy": v.energy,
                "max_cut_energy": v.max_cut_energy,
            })).collect::<Vec<_>>(),
        });
    }
    if args.check_paths {
        let failures: Vec<(f64, Vec<usize>)> = horizons
            .iter()
            .map(|&k| (result.time(k), path_form_failures(&result, rel_tol, k)))
            .filter(|(_, f)| !f.is_empty())
            .collect();
        let profile = distance_energy_profile(&result, rel_tol);
        out["paths"] = json!({
            "failures": failures.iter().map(|(t, f)| json!({
                "time": t,
                "vertices": f.iter().map(|v| v + 1).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "distance_profile": profile.profile,
            "unreachable": profile.unreachable.iter().map(|v| v + 1).collect::<Vec<_>>(),
            "non_increasing": profile.non_increasing,
        });
        if let Some(v) = cutset_violations {
            out["paths"]["agrees_with_cutsets"] = json!(v == !failures.is_empty());
        }
    }
    if let Some(path) = args.out_csv {
        std::fs::write(&path, trajectories_csv(&result))?;
        out["csv"] = json!(path.display().to_string());
    }
    print_json(&out);
    Ok(0)
}

fn run_export_nyquist(net: &ParsedNetwork, points: usize) -> Result<i32> {
    let ss = &net.model.subsystem;
    if !ss.is_siso() {
        return Err(Error::NotSiso(ss.m()));
    }
    let sweep = &net.options.analysis.sweep;
    let grid = FrequencyGrid::scaled_to(ss.a(), sweep.lo_factor, sweep.hi_factor, points)?;
    let k_max = net.model.max_loop_gain();
    let threshold = if k_max > 0.0 { -1.0 / (2.0 * k_max) } else { f64::NEG_INFINITY };
    let mut out = format!("# threshold={}\nomega,re,im\n", format_f64(threshold));
    for &w in grid.points() {
        // frequencies that hit an imaginary-axis pole are skipped
        if let Ok(t) = eval_transfer(ss, Complex64::new(0.0, w)) {
            let t = t[(0, 0)];
            out.push_str(&format!("{},{},{}\n", format_f64(w), format_f64(t.re), format_f64(t.im)));
        }
    }
    emit(&out);
    Ok(0)
}

fn run_threshold(net: &ParsedNetwork) -> Result<i32> {
    let t = planar_damping_threshold(&net.model)?;
    print_json(&json!({
        "damping": t.damping,
        "critical_damping": t.critical_damping,
        "pass": t.pass,
        "alpha": net.model.alpha,
        "max_weighted_in_degree": net.model.graph.max_weighted_in_degree(),
    }));
    Ok(0)
}

fn run_impervious(net: &ParsedNetwork, region: &str) -> Result<i32> {
    let region = parse_region(region, net.model.vertex_count())?;
    let report = certify_impervious(&net.model, &region, &net.options.analysis)?;
    print_json(&impervious_report_json(&report, &net.options.analysis));
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Certify { spec } => run_certify(&parse_network_file(spec)?),
        Command::Simulate { spec, source, horizon, dt, seed, check_cutsets, check_paths, out_csv } => run_simulate(
            &parse_network_file(spec)?,
            SimulateArgs { source, horizon, dt, seed, check_cutsets, check_paths, out_csv },
        ),
        Command::ExportNyquist { spec, points } => run_export_nyquist(&parse_network_file(spec)?, points),
        Command::Threshold { spec } => run_threshold(&parse_network_file(spec)?),
        Command::Impervious { spec, region } => run_impervious(&parse_network_file(spec)?, &region),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
