//! Closed-loop simulation of the concrete system under a controller or a plan.

use crate::dynamics::{Sample, SampledSystem, Trajectory};
use crate::error::{Error, Result};
use crate::planning::Plan;
use crate::quantizer::LogLattice;
use crate::synthesis::ConcreteController;

/// Source of inputs during a run.
#[derive(Clone, Copy, Debug)]
pub enum Policy<'a> {
    /// Lowest admissible input of the refined controller at each step.
    Controller(&'a ConcreteController),
    /// Scripted inputs (indices into `inputs`); the run stops if the state
    /// leaves the lattice bounds.
    Plan {
        plan: &'a Plan,
        inputs: &'a [Vec<f64>],
        lattice: &'a LogLattice,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxSteps,
    /// The state left the controller domain or the lattice bounds.
    OutOfDomain,
    PlanComplete,
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRun {
    pub trajectory: Trajectory,
    pub stop: StopReason,
}

pub fn simulate_closed_loop(
    sys: &SampledSystem,
    policy: Policy<'_>,
    x0: &[f64],
    max_steps: usize,
) -> Result<SimulationRun> {
    if x0.len() != sys.dim_x() {
        return Err(Error::Input(format!(
            "initial state has {} components, expected {}",
            x0.len(),
            sys.dim_x()
        )));
    }
    let mut schedule: Box<dyn Iterator<Item = u32>> = match policy {
        Policy::Controller(c) => {
            if c.pick(x0).is_none() {
                return Err(Error::OutOfDomain(format!(
                    "initial state {x0:?} is outside the controller domain"
                )));
            }
            Box::new(std::iter::empty())
        }
        Policy::Plan {
            plan,
            inputs,
            lattice,
        } => {
            if !lattice.bounds().contains(x0) {
                return Err(Error::OutOfDomain(format!(
                    "initial state {x0:?} is outside the lattice bounds"
                )));
            }
            if let Some(s) = plan.steps.iter().find(|s| s.input as usize >= inputs.len()) {
                return Err(Error::Input(format!("plan refers to unknown input {}", s.input)));
            }
            Box::new(plan.schedule())
        }
    };

    let mut samples = Vec::new();
    let mut x = x0.to_vec();
    let mut step = 0;
    let stop = loop {
        if step == max_steps {
            break StopReason::MaxSteps;
        }
        let u: Vec<f64> = match policy {
            Policy::Controller(c) => match c.pick(&x) {
                Some(id) => c.input(id).to_vec(),
                None => break StopReason::OutOfDomain,
            },
            Policy::Plan { inputs, .. } => match schedule.next() {
                Some(id) => inputs[id as usize].clone(),
                None => break StopReason::PlanComplete,
            },
        };
        let next = match sys.successor(&x, &u) {
            Ok(y) => y,
            Err(Error::Divergence { .. }) => break StopReason::Diverged,
            Err(e) => return Err(e),
        };
        samples.push(Sample {
            t: step as f64 * sys.tau(),
            x: std::mem::replace(&mut x, next),
            u: Some(u),
        });
        step += 1;
        if let Policy::Plan { lattice, .. } = policy {
            if !lattice.bounds().contains(&x) {
                break StopReason::OutOfDomain;
            }
        }
    };
    samples.push(Sample {
        t: step as f64 * sys.tau(),
        x,
        u: None,
    });
    Ok(SimulationRun {
        trajectory: Trajectory { samples },
        stop,
    })
}
