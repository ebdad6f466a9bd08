use nalgebra::DMatrix;
use num_complex::Complex64;

use super::NetworkModel;
use crate::graph::{laplacian, WeightedDigraph};
use crate::lti::{eigenvalues, is_hurwitz, max_real_part_complex, StateSpace};

/// Matching radius used to deflate the subsystem modes from the stacked spectrum.
const DEFLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeVerdict {
    pub lambda: Complex64,
    /// Largest real part among eigenvalues of `A - alpha lambda B C`.
    pub spectral_abscissa: f64,
    pub hurwitz: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldReport {
    pub stable: bool,
    pub modes: Vec<ModeVerdict>,
    pub laplacian_diagonalizable: bool,
    /// Verdict of the stacked-matrix route, filled in when the modal route is
    /// not applicable.
    pub full_matrix: Option<bool>,
}

/// `I (x) A - alpha L (x) B C`.
pub fn stacked_state_matrix(graph: &WeightedDigraph, alpha: f64, ss: &StateSpace) -> DMatrix<f64> {
    let n = ss.n();
    let count = graph.vertex_count();
    let l = graph.laplacian_matrix();
    let bc = ss.b() * ss.c();
    let mut out = DMatrix::zeros(count * n, count * n);
    for i in 0..count {
        for j in 0..count {
            let mut block = out.view_mut((i * n, j * n), (n, n));
            if l[(i, j)] != 0.0 {
                block -= alpha * l[(i, j)] * &bc;
            }
            if i == j {
                block += ss.a();
            }
        }
    }
    out
}

/// Modal test: `A - alpha lambda_i B C` Hurwitz for every Laplacian eigenvalue
/// except one copy of zero. Falls back to the stacked-matrix route when `L` is
/// not diagonalizable.
pub fn manifold_stable(net: &NetworkModel) -> ManifoldReport {
    let spectrum = laplacian(&net.graph);
    let a = net.subsystem.a().map(|v| Complex64::new(v, 0.0));
    let bc = (net.subsystem.b() * net.subsystem.c()).map(|v| Complex64::new(v, 0.0));
    let modes: Vec<ModeVerdict> = spectrum
        .transverse_eigenvalues()
        .iter()
        .map(|&lambda| {
            let m = &a - &bc * (lambda * net.alpha);
            ModeVerdict { lambda, spectral_abscissa: max_real_part_complex(&m), hurwitz: is_hurwitz(&m, 0.0) }
        })
        .collect();
    let modal = modes.iter().all(|m| m.hurwitz);
    if spectrum.diagonalizable {
        ManifoldReport { stable: modal, modes, laplacian_diagonalizable: true, full_matrix: None }
    } else {
        let full = manifold_stable_full_matrix(net);
        ManifoldReport { stable: full, modes, laplacian_diagonalizable: false, full_matrix: Some(full) }
    }
}

/// Stacked-matrix route: remove one copy of each eigenvalue of `A` from the
/// spectrum of `I (x) A - alpha L (x) B C`; the rest must be strictly stable.
pub fn manifold_stable_full_matrix(net: &NetworkModel) -> bool {
    let stacked = stacked_state_matrix(&net.graph, net.alpha, &net.subsystem);
    let mut remaining = eigenvalues(&stacked);
    for mode in eigenvalues(net.subsystem.a()) {
        let nearest =
            remaining.iter().enumerate().map(|(idx, z)| (idx, (z - mode).norm())).min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((idx, dist)) = nearest {
            if dist <= DEFLATION_TOL * mode.norm().max(1.0) {
                remaining.swap_remove(idx);
            }
        }
    }
    remaining.iter().all(|z| z.re < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar_net(graph: WeightedDigraph, d: f64) -> NetworkModel {
        NetworkModel::new(graph, 1.0, StateSpace::planar(d)).unwrap()
    }

    #[test]
    fn two_node_planar_is_stable() {
        let net = planar_net(WeightedDigraph::path(2).unwrap(), 1.0);
        let r = manifold_stable(&net);
        assert!(r.stable);
        assert_eq!(r.modes.len(), 1);
        assert!((r.modes[0].lambda.re - 2.0).abs() < 1e-12);
        // A - 2BC = [[0, 1], [-2, -1]]: eigenvalues -0.5 +- j sqrt(7)/2
        assert!((r.modes[0].spectral_abscissa + 0.5).abs() < 1e-12);
        assert!(manifold_stable_full_matrix(&net));
    }

    #[test]
    fn single_vertex_is_vacuous() {
        let net = planar_net(WeightedDigraph::new(1, vec![]).unwrap(), 1.0);
        let r = manifold_stable(&net);
        assert!(r.stable && r.modes.is_empty());
        assert!(manifold_stable_full_matrix(&net));
    }

    #[test]
    fn lightly_damped_cycle_is_unstable() {
        let net = planar_net(WeightedDigraph::directed_cycle(3).unwrap(), 0.1);
        assert!(!manifold_stable(&net).stable);
        assert!(!manifold_stable_full_matrix(&net));
    }

    #[test]
    fn stacked_blocks() {
        let ss = StateSpace::planar(1.0);
        let m = stacked_state_matrix(&WeightedDigraph::path(2).unwrap(), 1.0, &ss);
        let bc = ss.b() * ss.c();
        assert_eq!(m.view((0, 0), (2, 2)).into_owned(), ss.a() - &bc);
        assert_eq!(m.view((0, 2), (2, 2)).into_owned(), bc.clone());
        assert_eq!(m.view((2, 0), (2, 2)).into_owned(), bc);
        let decoupled = stacked_state_matrix(&WeightedDigraph::path(2).unwrap(), 0.0, &ss);
        assert!(decoupled.view((0, 2), (2, 2)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn defective_laplacian_uses_stacked_route() {
        let net = planar_net(WeightedDigraph::directed_line(3).unwrap(), 1.0);
        let r = manifold_stable(&net);
        assert!(!r.laplacian_diagonalizable);
        assert_eq!(r.full_matrix, Some(true));
        assert!(r.stable);
        // eigenvalues are still valid modes even without a full eigenbasis
        assert!(r.modes.iter().all(|m| m.hurwitz));
    }

    #[test]
    fn disconnected_graph_needs_stable_subsystem() {
        let net = planar_net(WeightedDigraph::new(2, vec![]).unwrap(), 1.0);
        let r = manifold_stable(&net);
        assert!(!r.stable);
        assert!(!manifold_stable_full_matrix(&net));
    }
}
