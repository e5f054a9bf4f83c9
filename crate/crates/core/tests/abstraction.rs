mod common;

use common::{cell, s6_interval, s6_lattice};
use logsym::abstraction::{
    build_abstraction, deadzone_covered, enabled_inputs, load_model, save_model, transition_targets,
    InputApproxConfig, SymbolicModel,
};
use logsym::dynamics::pendulum_system;
use logsym::refinement::check_feedback_refinement;
use logsym::quantizer::{EdgePolicy, LogLattice, Variant};
use logsym::transition::TransitionSystem;
use logsym::Error;
use proptest::prelude::*;
use rayon::prelude::*;

fn s6_model(lazy: bool) -> SymbolicModel {
    let cfg = InputApproxConfig::new(2e-3, 51).unwrap();
    build_abstraction(&pendulum_system(), &s6_lattice(), &cfg, lazy).unwrap()
}

#[test]
fn pendulum_model_has_25_states_and_self_loops() {
    let m = s6_model(false);
    assert_eq!(m.num_states(), 25);
    let loops = (0..m.num_states())
        .filter(|&s| m.enabled(s).iter().any(|&u| m.successors(s, u).contains(&(s as u32))))
        .count();
    assert!(loops > 0);
}

#[test]
fn targets_match_exhaustive_intersection() {
    let sys = pendulum_system();
    let lat = s6_lattice();
    let c = cell(&[1, 0]);
    for u in [-2.5, -1.0, 0.0, 0.7, 2.5] {
        let got = transition_targets(&c, &[u], &sys, &lat).unwrap();
        let x = sys.successor(&[0.48, 0.0], &[u]).unwrap();
        let theta = 0.2 / 0.8;
        let grow = (6.0f64 * 0.2).exp();
        let r = [theta * grow * 0.48, theta * grow * 1.0];
        let lo = [x[0] - r[0], x[1] - r[1]];
        let hi = [x[0] + r[0], x[1] + r[1]];
        let inside = (0..2).all(|i| lo[i] >= -1.0 && hi[i] <= 1.0);
        let want: Vec<_> = if inside {
            lat.enumerate_cells()
                .into_iter()
                .filter(|c| {
                    (0..2).all(|i| {
                        let (a, b) = s6_interval(c.0[i]);
                        let (p, q) = (lo[i].max(a), hi[i].min(b));
                        p < q || (p == q && !(c.0[i] > 0 && p == a) && !(c.0[i] < 0 && p == b))
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        assert_eq!(got, want, "u = {u}");
    }
}

#[test]
fn enabled_inputs_behave() {
    let m = s6_model(false);
    assert!(!enabled_inputs(&m, &cell(&[0, 0])).unwrap().is_empty());
    // The right-most column always pushes the inflated box past the bound.
    assert!(enabled_inputs(&m, &cell(&[2, 0])).unwrap().is_empty());
    assert!(m.is_blocking(m.cell_id(&cell(&[2, 0])).unwrap()));
    assert!(matches!(enabled_inputs(&m, &cell(&[3, 0])), Err(Error::OutOfDomain(_))));
    let sys = pendulum_system();
    for s in 0..m.num_states() {
        for u in m.enabled(s) {
            assert!((u as usize) < m.inputs().len());
            assert!(sys.input_box().contains(m.input(u)));
            assert!(!m.successors(s, u).is_empty());
        }
    }
}

#[test]
fn successor_views_agree() {
    let m = s6_model(false);
    let mut by_pair: Vec<Vec<u32>> = vec![Vec::new(); m.num_states()];
    for (s, t, _) in m.transitions() {
        by_pair[s as usize].push(t);
    }
    for (s, mut v) in by_pair.into_iter().enumerate() {
        v.sort_unstable();
        assert_eq!(v, m.state_successors(s));
    }
    assert_eq!(m.transitions().len(), m.transition_count());
}

#[test]
fn lazy_build_matches_eager() {
    let eager = s6_model(false);
    let lazy = s6_model(true);
    assert!(lazy.is_lazy());
    assert_eq!(lazy.computed_count(), 0);
    let z = lazy.cell_id(&cell(&[0, 0])).unwrap();
    let u = lazy.candidate_inputs(z)[0];
    assert!(!lazy.is_computed(z, u));
    lazy.successors(z, u);
    assert!(lazy.is_computed(z, u));
    assert_eq!(lazy.computed_count(), 1);
    assert_eq!(save_model(&lazy), save_model(&eager));
}

#[test]
fn concurrent_first_queries_agree() {
    let lazy = s6_model(true);
    let keys: Vec<(usize, u32)> = (0..lazy.num_states())
        .flat_map(|s| lazy.candidate_inputs(s).iter().map(move |&u| (s, u)).collect::<Vec<_>>())
        .collect();
    let repeated: Vec<(usize, u32)> = keys.iter().cycle().take(keys.len() * 4).copied().collect();
    let seen: Vec<Vec<u32>> = repeated
        .par_iter()
        .map(|&(s, u)| lazy.successors(s, u).to_vec())
        .collect();
    for (i, &(s, u)) in repeated.iter().enumerate() {
        assert_eq!(seen[i], lazy.successors(s, u));
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let build = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| save_model(&s6_model(false)))
    };
    assert_eq!(build(1), build(4));
}

#[test]
fn finer_lattices_keep_containment_when_deadzone_is_covered() {
    let sys = pendulum_system();
    let cfg = InputApproxConfig::new(2e-3, 21).unwrap();
    for (eta, a) in [(0.2, 0.25), (0.1, 0.1), (0.05, 0.05)] {
        let lat = LogLattice::uniform(2, eta, a, Variant::DeadzoneScale, 1.0, EdgePolicy::Merge).unwrap();
        assert!(deadzone_covered(&lat.axes()[0]));
        let m = build_abstraction(&sys, &lat, &cfg, false).unwrap();
        let report = check_feedback_refinement(&m, &sys, 3000, 11).unwrap();
        assert!(report.passed(), "eta {eta}: {}", report.witness_lines());
    }
}

#[test]
fn wide_deadzone_can_miss_successors() {
    // With a deadzone wider than eta/(1-eta) the radius of a zero level is
    // smaller than the cell, and some successors fall outside the box.
    let sys = pendulum_system();
    let lat = LogLattice::uniform(2, 0.1, 0.4, Variant::DeadzoneScale, 1.0, EdgePolicy::Merge).unwrap();
    assert!(!deadzone_covered(&lat.axes()[0]));
    let cfg = InputApproxConfig::new(2e-3, 21).unwrap();
    let m = build_abstraction(&sys, &lat, &cfg, false).unwrap();
    let report = check_feedback_refinement(&m, &sys, 20_000, 3).unwrap();
    assert!(!report.violations.is_empty());
    assert!(report.violations.iter().all(|v| v.cell.0.contains(&0)));
}

#[test]
fn dimension_mismatch_is_a_config_error() {
    let lat = LogLattice::uniform(3, 0.2, 0.4, Variant::DeadzoneScale, 1.0, EdgePolicy::Merge).unwrap();
    let cfg = InputApproxConfig::new(2e-3, 3).unwrap();
    assert!(matches!(
        build_abstraction(&pendulum_system(), &lat, &cfg, false),
        Err(Error::Config(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn model_file_round_trips(samples in 1usize..12, mu in 1e-3f64..0.3, lazy in any::<bool>()) {
        let cfg = InputApproxConfig::new(mu, samples).unwrap();
        let m = build_abstraction(&pendulum_system(), &s6_lattice(), &cfg, lazy).unwrap();
        let text = save_model(&m);
        let back = load_model(&text).unwrap();
        prop_assert_eq!(save_model(&back), text);
        prop_assert_eq!(back.inputs(), m.inputs());
    }
}
