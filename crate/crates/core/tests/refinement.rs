mod common;

use common::{cell, s6_interval, s6_lattice};
use logsym::abstraction::{build_abstraction, enabled_inputs, load_model, save_model, InputApproxConfig};
use logsym::dynamics::pendulum_system;
use logsym::geometry::HyperBox;
use logsym::refinement::{abstract_safe_set, check_feedback_refinement, relate};
use proptest::prelude::*;

#[test]
fn relate_examples() {
    let lat = s6_lattice();
    assert_eq!(relate(&[0.45, 0.1], &lat).unwrap(), cell(&[1, 0]));
    assert_eq!(relate(&[-0.6, 0.6], &lat).unwrap(), cell(&[-1, 1]));
    assert_eq!(relate(&[-0.61, 1.0], &lat).unwrap(), cell(&[-2, 2]));
}

#[test]
fn removed_successor_is_reported() {
    let cfg = InputApproxConfig::new(2e-3, 3).unwrap();
    let sys = pendulum_system();
    let model = build_abstraction(&sys, &s6_lattice(), &cfg, false).unwrap();
    let z = model.cell_id(&cell(&[0, 0])).unwrap() as u32;
    let u = model.inputs().iter().position(|v| v == &[0.0]).unwrap() as u32;
    let line = format!("{z} {z} {u}");
    let text = save_model(&model);
    assert!(text.lines().any(|l| l == line));
    let damaged: String = text
        .lines()
        .filter(|l| *l != line)
        .map(|l| format!("{l}\n"))
        .collect();
    let damaged = load_model(&damaged).unwrap();

    let report = check_feedback_refinement(&damaged, &sys, 20_000, 4).unwrap();
    assert!(!report.passed());
    assert!(report
        .violations
        .iter()
        .all(|v| v.cell == cell(&[0, 0]) && v.input == u && v.observed == Some(cell(&[0, 0]))));
    let witness = report.witness_lines();
    assert_eq!(witness.lines().count(), report.violations.len());
    assert!(witness.lines().all(|l| l.contains("observed=0,0") && l.contains("u=0")));

    // Replaying a witness reproduces the observation.
    let v = &report.violations[0];
    let y = sys.successor(&v.x, &v.u).unwrap();
    assert_eq!(relate(&y, damaged.lattice()).unwrap(), cell(&[0, 0]));

    let intact = check_feedback_refinement(&model, &sys, 20_000, 4).unwrap();
    assert!(intact.passed());
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let cfg = InputApproxConfig::new(2e-3, 5).unwrap();
    let sys = pendulum_system();
    let model = build_abstraction(&sys, &s6_lattice(), &cfg, false).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| check_feedback_refinement(&model, &sys, 3000, 9).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn safe_set_under_seven_tenths() {
    let lat = s6_lattice();
    let cfg = InputApproxConfig::new(2e-3, 3).unwrap();
    let model = build_abstraction(&pendulum_system(), &lat, &cfg, false).unwrap();
    let safe = HyperBox::symmetric(&[0.7, 0.7]).unwrap();
    let got = abstract_safe_set(&safe, &lat, &model);
    let want: Vec<_> = lat
        .enumerate_cells()
        .into_iter()
        .filter(|c| {
            c.0.iter().all(|&l| {
                let (a, b) = s6_interval(l);
                -0.7 <= a && b <= 0.7
            })
        })
        .collect();
    assert_eq!(got.cells, want);
    assert_eq!(want.len(), 9);
    let mut inputs: Vec<u32> = want
        .iter()
        .flat_map(|c| enabled_inputs(&model, c).unwrap())
        .collect();
    inputs.sort_unstable();
    inputs.dedup();
    assert_eq!(got.inputs, inputs);
}

proptest! {
    #[test]
    fn safe_set_is_an_under_approximation(
        lo in prop::collection::vec(-1.2f64..0.3, 2),
        w in prop::collection::vec(0.0f64..1.5, 2),
        probes in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), 8),
    ) {
        let lat = s6_lattice();
        let cfg = InputApproxConfig::new(2e-3, 1).unwrap();
        let model = build_abstraction(&pendulum_system(), &lat, &cfg, false).unwrap();
        let safe = HyperBox::new(lo.clone(), lo.iter().zip(&w).map(|(a, b)| a + b).collect()).unwrap();
        let set = abstract_safe_set(&safe, &lat, &model);
        for c in &set.cells {
            let b = lat.cell_bounds(c).unwrap();
            for p in &probes {
                let x: Vec<f64> = (0..2).map(|i| b.lo[i] + p[i] * (b.hi[i] - b.lo[i])).collect();
                prop_assert!(safe.contains(&x));
            }
        }
        for c in lat.enumerate_cells() {
            if !set.cells.contains(&c) {
                prop_assert!(!safe.contains_box(&lat.cell_bounds(&c).unwrap().hull()));
            }
        }
    }
}
