#![allow(dead_code)]

use nalgebra::DMatrix;
use netprop::graph::{Edge, WeightedDigraph};
use netprop::lti::{eigenvalues, StateSpace};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Random Hamiltonian cycle plus extra edges with probability `p`; weights in
/// `[0.5, 2]`.
pub fn random_strongly_connected<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedDigraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    if n > 1 {
        for k in 0..n {
            let (from, to) = (order[k], order[(k + 1) % n]);
            if seen.insert((from, to)) {
                edges.push(Edge { from, to, weight: rng.gen_range(0.5..2.0) });
            }
        }
    }
    for from in 0..n {
        for to in 0..n {
            if from != to && !seen.contains(&(from, to)) && rng.gen_bool(p) {
                seen.insert((from, to));
                edges.push(Edge { from, to, weight: rng.gen_range(0.5..2.0) });
            }
        }
    }
    WeightedDigraph::new(n, edges).unwrap()
}

/// Random digraph with edge probability `p` (possibly disconnected).
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedDigraph {
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.gen_bool(p) {
                edges.push(Edge { from, to, weight: rng.gen_range(0.2..3.0) });
            }
        }
    }
    WeightedDigraph::new(n, edges).unwrap()
}

/// Random symmetric graph (diagonalizable Laplacian).
pub fn random_undirected<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedDigraph {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                pairs.push((i, j, rng.gen_range(0.2..3.0)));
            }
        }
    }
    WeightedDigraph::bidirectional(n, &pairs).unwrap()
}

/// Random strictly stable SISO system of the given order, spectral abscissa at
/// most `-margin`.
pub fn random_stable_siso<R: Rng>(rng: &mut R, order: usize, margin: f64) -> StateSpace {
    let mut a = DMatrix::from_fn(order, order, |_, _| rng.gen_range(-2.0..2.0));
    let abscissa = eigenvalues(&a).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let shift = abscissa + margin + rng.gen_range(0.0..1.0);
    for i in 0..order {
        a[(i, i)] -= shift;
    }
    let b = DMatrix::from_fn(order, 1, |_, _| rng.gen_range(-1.5..1.5));
    let c = DMatrix::from_fn(1, order, |_, _| rng.gen_range(-1.5..1.5));
    StateSpace::new(a, b, c).unwrap()
}

/// `sum_i r_i / (s + p_i)` with `r_i, p_i > 0`: positive real.
pub fn random_positive_real<R: Rng>(rng: &mut R, order: usize) -> StateSpace {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(order, |_, _| -rng.gen_range(0.1..5.0)));
    let b = DMatrix::from_element(order, 1, 1.0);
    let c = DMatrix::from_fn(1, order, |_, _| rng.gen_range(0.1..3.0));
    StateSpace::new(a, b, c).unwrap()
}

/// Random planar template, random stable system, or a lightly damped
/// oscillator with an integrator.
pub fn random_siso_subsystem<R: Rng>(rng: &mut R) -> StateSpace {
    match rng.gen_range(0..3) {
        0 => StateSpace::planar(rng.gen_range(0.2..4.0)),
        1 => {
            let order = rng.gen_range(1..=3);
            random_stable_siso(rng, order, 0.05)
        }
        _ => {
            let w: f64 = rng.gen_range(0.5..3.0);
            let z: f64 = rng.gen_range(0.05..1.0);
            // 1 / (s (s^2 + 2 z w s + w^2))
            let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -w * w, -2.0 * z * w]);
            let b = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
            let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
            StateSpace::new(a, b, c).unwrap()
        }
    }
}
