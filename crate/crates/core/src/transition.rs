//! Finite transition systems with nondeterministic, input-labelled transitions.

/// Read access to a finite transition system with states `0..num_states()`.
///
/// `successors` returns an empty slice for inputs that are not enabled.
pub trait TransitionSystem {
    fn num_states(&self) -> usize;

    /// Inputs that may be enabled at `state`, ascending.
    fn candidate_inputs(&self, state: usize) -> &[u32];

    /// Sorted successor states of `(state, input)`.
    fn successors(&self, state: usize, input: u32) -> &[u32];

    /// Inputs with at least one successor.
    fn enabled(&self, state: usize) -> Vec<u32> {
        self.candidate_inputs(state)
            .iter()
            .copied()
            .filter(|&u| !self.successors(state, u).is_empty())
            .collect()
    }

    fn is_blocking(&self, state: usize) -> bool {
        self.candidate_inputs(state)
            .iter()
            .all(|&u| self.successors(state, u).is_empty())
    }
}

/// Transition system stored as explicit adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplicitSystem {
    inputs: Vec<Vec<u32>>,
    targets: Vec<Vec<Vec<u32>>>,
}

impl ExplicitSystem {
    pub fn new(num_states: usize) -> Self {
        ExplicitSystem {
            inputs: vec![Vec::new(); num_states],
            targets: vec![Vec::new(); num_states],
        }
    }

    pub fn add_transition(&mut self, from: usize, input: u32, to: usize) {
        assert!(from < self.inputs.len() && to < self.inputs.len(), "state out of range");
        let pos = match self.inputs[from].binary_search(&input) {
            Ok(p) => p,
            Err(p) => {
                self.inputs[from].insert(p, input);
                self.targets[from].insert(p, Vec::new());
                p
            }
        };
        let set = &mut self.targets[from][pos];
        if let Err(p) = set.binary_search(&(to as u32)) {
            set.insert(p, to as u32);
        }
    }

    /// Total number of `(state, input, successor)` triples.
    pub fn transition_count(&self) -> usize {
        self.targets.iter().flatten().map(Vec::len).sum()
    }
}

impl TransitionSystem for ExplicitSystem {
    fn num_states(&self) -> usize {
        self.inputs.len()
    }

    fn candidate_inputs(&self, state: usize) -> &[u32] {
        &self.inputs[state]
    }

    fn successors(&self, state: usize, input: u32) -> &[u32] {
        match self.inputs[state].binary_search(&input) {
            Ok(p) => &self.targets[state][p],
            Err(_) => &[],
        }
    }
}
