use netprop::analyzer::{certify_impervious, AnalysisOptions, NetworkModel};
use netprop::graph::{enumerate_separating_cutsets, WeightedDigraph, CUTSET_ENUMERATION_CAP};
use netprop::lti::StateSpace;
use netprop::simulator::{
    check_majorization, default_horizons, distance_energy_profile, simulate, DisturbanceSignal, MAJORIZATION_RTOL,
};

#[test]
fn impervious_region_has_no_internal_violations() {
    // hub 0 with three spokes; spoke 3 continues to 4. With d = 2.2 the hub fails
    // the gain test, the pair {3, 4} passes.
    let g = WeightedDigraph::bidirectional(5, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (3, 4, 1.0)]).unwrap();
    let net = NetworkModel::new(g, 1.0, StateSpace::planar(2.2)).unwrap();
    let region = [3, 4];
    assert!(certify_impervious(&net, &region, &AnalysisOptions::default()).unwrap().pass);

    let mut checked = 0;
    for source in 0..5 {
        let inside: Vec<_> = enumerate_separating_cutsets(&net.graph, source, CUTSET_ENUMERATION_CAP)
            .unwrap()
            .into_iter()
            .filter(|p| p.cut.iter().all(|c| region.contains(c)))
            .map(|mut p| {
                p.far.retain(|b| region.contains(b));
                p
            })
            .filter(|p| !p.far.is_empty())
            .collect();
        for seed in 0..6 {
            let w = DisturbanceSignal::random(seed, 1, 60.0);
            let r = simulate(&net, source, &w, 60.0, 0.01).unwrap();
            assert!(check_majorization(&r, &inside, MAJORIZATION_RTOL, &default_horizons(&r)).is_empty());
            checked += inside.len();
        }
    }
    assert!(checked > 0);
}

#[test]
fn resonant_line_energy_grows_with_distance() {
    let net = NetworkModel::new(WeightedDigraph::directed_line(4).unwrap(), 1.0, StateSpace::planar(1.0)).unwrap();
    let tone = DisturbanceSignal::tone(1.0, std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_PI_2);
    let r = simulate(&net, 0, &tone, 300.0, 0.01).unwrap();
    let profile = distance_energy_profile(&r, MAJORIZATION_RTOL);
    assert!(!profile.non_increasing);
    assert!(profile.profile.windows(2).skip(1).all(|w| w[1] > 1.2 * w[0]));
}

#[test]
fn unreachable_vertices_are_reported() {
    let net = NetworkModel::new(WeightedDigraph::directed_line(3).unwrap(), 1.0, StateSpace::planar(2.0)).unwrap();
    let r = simulate(&net, 1, &DisturbanceSignal::pulse(1.0, 0.0, 1.0), 20.0, 0.01).unwrap();
    let profile = distance_energy_profile(&r, MAJORIZATION_RTOL);
    assert_eq!(profile.unreachable, vec![0]);
    assert_eq!(r.energies()[0], 0.0);
    assert!(profile.non_increasing);
}
