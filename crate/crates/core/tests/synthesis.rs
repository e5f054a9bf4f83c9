mod common;

use common::{cell, fine_lattice, max_invariant, max_invariant_worklist, random_system, s6_lattice};
use logsym::abstraction::{build_abstraction, InputApproxConfig, SymbolicModel};
use logsym::dynamics::pendulum_system;
use logsym::planning::{plan_guided, plan_reach, GuidedOptions, PlanMode};
use logsym::quantizer::{EdgePolicy, LogLattice, Variant};
use logsym::refinement::abstract_safe_set;
use logsym::simulation::{simulate_closed_loop, Policy, StopReason};
use logsym::synthesis::{cpre, cpre_cells, refine_controller, safety_fixpoint, solve_safety};
use logsym::transition::{ExplicitSystem, TransitionSystem};
use logsym::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn s6_model() -> SymbolicModel {
    let cfg = InputApproxConfig::new(2e-3, 51).unwrap();
    build_abstraction(&pendulum_system(), &s6_lattice(), &cfg, false).unwrap()
}

fn medium_lattice() -> LogLattice {
    LogLattice::uniform(2, 0.1, 0.1, Variant::DeadzoneScale, 1.0, EdgePolicy::Merge).unwrap()
}

proptest! {
    #[test]
    fn fixpoint_matches_oracle_on_random_systems(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ts, safe) = random_system(&mut rng, 30, 4);
        let fp = solve_safety(&ts, &safe);
        prop_assert_eq!(&fp.domain, &max_invariant(&ts, &safe));
        prop_assert!(fp.chain.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(fp.iterations <= safe.iter().filter(|&&b| b).count() + 1);
        let again: Vec<bool> = cpre(&ts, &fp.domain)
            .iter()
            .zip(&safe)
            .map(|(a, b)| *a && *b)
            .collect();
        prop_assert_eq!(&again, &fp.domain);
        for s in 0..ts.num_states() {
            let expected: Vec<u32> = if fp.domain[s] {
                ts.enabled(s)
                    .into_iter()
                    .filter(|&u| ts.successors(s, u).iter().all(|&t| fp.domain[t as usize]))
                    .collect()
            } else {
                Vec::new()
            };
            prop_assert_eq!(&fp.admissible[s], &expected);
            prop_assert_eq!(fp.domain[s], !expected.is_empty());
        }
    }
}

#[test]
fn hand_iteration_drops_blocking_state() {
    let mut ts = ExplicitSystem::new(4);
    ts.add_transition(0, 0, 1);
    ts.add_transition(1, 0, 2);
    ts.add_transition(2, 0, 2);
    let fp = solve_safety(&ts, &[true; 4]);
    assert_eq!(fp.domain, vec![true, true, true, false]);
    assert_eq!(fp.chain[1], 3);
    assert_eq!(cpre(&ts, &[false, false, true, false]), vec![false, true, true, false]);
}

#[test]
fn pendulum_fixpoint_matches_worklist_oracle() {
    let m = s6_model();
    let lat = s6_lattice();
    let safe = abstract_safe_set(lat.bounds(), &lat, &m);
    assert_eq!(safe.cells.len(), 25);
    let ctrl = safety_fixpoint(&m, &safe).unwrap();
    let oracle = max_invariant_worklist(&m, &[true; 25]);
    let domain: Vec<bool> = m.cells().iter().map(|c| ctrl.contains(c)).collect();
    assert_eq!(domain, oracle);
    // The inflated boxes of the outer columns always leave the bounds, and
    // everything else eventually depends on them.
    assert_eq!(ctrl.domain_size(), 0);
    let all = cpre_cells(&m, m.cells()).unwrap();
    assert_eq!(all.len(), (0..25).filter(|&s| !m.is_blocking(s)).count());
    assert!(cpre_cells(&m, &[]).unwrap().is_empty());
}

#[test]
fn safe_set_outside_model_is_rejected() {
    let m = s6_model();
    let mut safe = abstract_safe_set(s6_lattice().bounds(), &s6_lattice(), &m);
    safe.cells.push(cell(&[7, 0]));
    assert!(matches!(safety_fixpoint(&m, &safe), Err(Error::Config(_))));
}

#[test]
fn lazy_fixpoint_matches_eager_and_expands_less() {
    let lat = medium_lattice();
    let sys = pendulum_system();
    let cfg = InputApproxConfig::new(2e-3, 21).unwrap();
    let eager = build_abstraction(&sys, &lat, &cfg, false).unwrap();
    let lazy = build_abstraction(&sys, &lat, &cfg, true).unwrap();
    let half = logsym::geometry::HyperBox::symmetric(&[0.5, 0.5]).unwrap();
    let safe = abstract_safe_set(&half, &lat, &eager);
    let a = safety_fixpoint(&eager, &safe).unwrap();
    let b = safety_fixpoint(&lazy, &safe).unwrap();
    assert_eq!(a.admissible, b.admissible);
    assert_eq!(a.chain, b.chain);
    let total: usize = (0..lazy.num_states()).map(|s| lazy.candidate_inputs(s).len()).sum();
    assert!(lazy.computed_count() < total);
}

#[test]
fn refined_controller_queries() {
    let lat = fine_lattice();
    let sys = pendulum_system();
    let cfg = InputApproxConfig::new(2e-3, 21).unwrap();
    let m = build_abstraction(&sys, &lat, &cfg, false).unwrap();
    let safe = abstract_safe_set(lat.bounds(), &lat, &m);
    let ctrl = safety_fixpoint(&m, &safe).unwrap();
    assert!(ctrl.contains(&cell(&[0, 0])));
    let c = refine_controller(ctrl.clone(), lat.clone());

    let inputs = &ctrl.admissible[&cell(&[0, 0])];
    assert_eq!(c.query(&[0.0, 0.0]).inputs, *inputs);
    assert_eq!(c.query(&[0.01, -0.04]), c.query(&[-0.03, 0.02]));
    assert_eq!(c.pick(&[0.0, 0.0]), Some(inputs[0]));

    let gap = lat
        .enumerate_cells()
        .into_iter()
        .find(|c| !ctrl.contains(c))
        .expect("some cell is outside the domain");
    let outside = c.query(&lat.center(&gap).unwrap());
    assert!(outside.inputs.is_empty() && !outside.out_of_bounds);
    let beyond = c.query(&[1.5, 0.0]);
    assert!(beyond.inputs.is_empty() && beyond.out_of_bounds);

    // Closed loop from a spread of domain lattice points stays in the domain.
    for cell in ctrl.domain().step_by(7) {
        let x0 = lat.center(cell).unwrap();
        let run = simulate_closed_loop(&sys, Policy::Controller(&c), &x0, 30).unwrap();
        assert_eq!(run.stop, StopReason::MaxSteps, "left the domain from {cell}");
    }
}

#[test]
fn planner_edge_cases() {
    let m = s6_model();
    let start = cell(&[-1, 0]);
    assert!(plan_reach(&m, &start, std::slice::from_ref(&start), PlanMode::Deterministic)
        .unwrap()
        .steps
        .is_empty());
    // No successor set of this model is a singleton.
    assert!(matches!(
        plan_reach(&m, &start, &[cell(&[0, 0])], PlanMode::Deterministic),
        Err(Error::Unreachable { goal }) if goal == "0,0"
    ));
    // Blocking cells reach nothing.
    assert!(matches!(
        plan_reach(&m, &cell(&[2, 0]), &[cell(&[0, 0])], PlanMode::Nondeterministic),
        Err(Error::Unreachable { .. })
    ));
}

#[test]
fn disconnected_model_cannot_be_planned() {
    let lat = LogLattice::uniform(1, 0.2, 0.4, Variant::DeadzoneScale, 0.5, EdgePolicy::Merge).unwrap();
    assert_eq!(lat.num_cells(), 3);
    let text = "#version 1\n#lattice dim=1 edge=merge axes=deadzone:0.2:0.4 lo=-0.5 hi=0.5\n\
#tau 0.2 #eta 0.2 #mu 0.002 #L 1\nstate 0 -1\nstate 1 0\nstate 2 1\ninput 0 0\n0 0 0\n2 2 0\n";
    let m = logsym::abstraction::load_model(text).unwrap();
    assert!(matches!(
        plan_reach(&m, &cell(&[-1]), &[cell(&[1])], PlanMode::Nondeterministic),
        Err(Error::Unreachable { .. })
    ));
}

#[test]
fn abstract_cycle_between_left_cell_and_origin() {
    let m = s6_model();
    let left = cell(&[-1, 0]);
    let origin = cell(&[0, 0]);
    let plan = plan_reach(&m, &left, &[origin, left.clone()], PlanMode::Nondeterministic).unwrap();
    assert!(plan.periods() >= 2);
}

#[test]
fn guided_plan_replays_through_goals() {
    let m = s6_model();
    let sys = pendulum_system();
    let goals = [cell(&[0, 0]), cell(&[-1, 0]), cell(&[0, 1])];
    let plan = plan_guided(&sys, &m, &[-0.48, 0.0], &goals, GuidedOptions::default()).unwrap();
    let policy = Policy::Plan {
        plan: &plan,
        inputs: m.inputs(),
        lattice: m.lattice(),
    };
    let run = simulate_closed_loop(&sys, policy, &[-0.48, 0.0], 1000).unwrap();
    assert_eq!(run.stop, StopReason::PlanComplete);
    let mut pending = goals.iter().peekable();
    for x in run.trajectory.states() {
        if pending.peek().is_some_and(|g| **g == m.lattice().quantize(x).unwrap()) {
            pending.next();
        }
    }
    assert!(pending.peek().is_none());
    assert_eq!(m.lattice().quantize(run.trajectory.states().last().unwrap()).unwrap(), goals[2]);
}
