//! The full memory call: route the walker superposition to the leaves,
//! XOR the addressed cells into the data register, then walk back up.
//!
//! One call costs exactly 2n+1 primitive steps: n downward level steps,
//! one query pass, n upward level steps. The query touches only leaf
//! entries; it is completed by the identity on interior nodes, which is
//! the unique unitary completion and is never exercised by the canonical
//! pipeline.

use crate::error::{Error, Result};
use crate::state::{
    make_initial_state_with, AddressSuperposition, BasisState, Exec, MemoryTable, SparseState,
    TreeShape,
};
use crate::walk::{level_step_down_with, level_step_up_with};

/// Labeled intermediate states of one traced memory call: `psi0_0` …
/// `psi0_n` for the routing stage, `query`, then `psix_{n-1}` … `psix_0`
/// for the output stage — 2n+2 states in all.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    steps: Vec<(String, SparseState)>,
}

impl TraceRecord {
    fn new() -> Self {
        TraceRecord { steps: Vec::new() }
    }

    fn push(&mut self, label: String, state: &SparseState) {
        // Deep copy so later pipeline stages cannot alias the record.
        self.steps.push((label, state.clone()));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = (&str, &SparseState)> {
        self.steps.iter().map(|(label, state)| (label.as_str(), state))
    }

    pub fn get(&self, label: &str) -> Option<&SparseState> {
        self.steps
            .iter()
            .find(|(step, _)| step == label)
            .map(|(_, state)| state)
    }

    pub fn final_state(&self) -> Option<&SparseState> {
        self.steps.last().map(|(_, state)| state)
    }

    pub(crate) fn from_steps(steps: Vec<(String, SparseState)>) -> Self {
        TraceRecord { steps }
    }
}

/// Routing stage: n downward level steps delivering each walker to the
/// leaf addressed by its address register.
pub fn route(state: &SparseState) -> Result<SparseState> {
    route_with(state, Exec::Sequential)
}

pub fn route_with(state: &SparseState, exec: Exec) -> Result<SparseState> {
    let mut state = state.clone();
    for level in 0..state.shape().n() {
        state = level_step_down_with(&state, level, exec)?;
    }
    Ok(state)
}

/// Query stage: every entry sitting on leaf ∣w,n⟩ gets the cell contents
/// XORed into its data register, in a single pass. Non-leaf entries are
/// left alone.
pub fn query(state: &SparseState, memory: &MemoryTable) -> Result<SparseState> {
    query_with(state, memory, Exec::Sequential)
}

pub fn query_with(state: &SparseState, memory: &MemoryTable, exec: Exec) -> Result<SparseState> {
    let shape = state.shape();
    if memory.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected_n: shape.n(),
            expected_m: shape.m(),
            found_n: memory.shape().n(),
            found_m: memory.shape().m(),
        });
    }
    let leaf_level = shape.n();
    Ok(state.permuted(exec, |basis| {
        if basis.node.level() == leaf_level {
            BasisState {
                data: basis.data ^ memory.get(basis.node.pos()),
                ..*basis
            }
        } else {
            *basis
        }
    }))
}

/// Output stage: n upward level steps; exact inverse of [`route`].
pub fn unroute(state: &SparseState) -> Result<SparseState> {
    unroute_with(state, Exec::Sequential)
}

pub fn unroute_with(state: &SparseState, exec: Exec) -> Result<SparseState> {
    let mut state = state.clone();
    for level in (0..state.shape().n()).rev() {
        state = level_step_up_with(&state, level, exec)?;
    }
    Ok(state)
}

/// One full memory call on a fresh input superposition: load at the root,
/// route, query, unroute. The output carries each input amplitude on
/// ∣0,0⟩ ∣0⟩_C ∣a⟩ ∣x^(a)⟩.
pub fn qram(
    shape: TreeShape,
    addrs: &AddressSuperposition,
    memory: &MemoryTable,
) -> Result<SparseState> {
    qram_with(shape, addrs, memory, true, Exec::Sequential)
}

pub fn qram_with(
    shape: TreeShape,
    addrs: &AddressSuperposition,
    memory: &MemoryTable,
    normalize: bool,
    exec: Exec,
) -> Result<SparseState> {
    check_memory_shape(shape, memory)?;
    let state = make_initial_state_with(shape, addrs, normalize)?;
    let state = route_with(&state, exec)?;
    let state = query_with(&state, memory, exec)?;
    unroute_with(&state, exec)
}

/// As [`qram`], also recording every intermediate state under its
/// canonical label.
pub fn qram_traced(
    shape: TreeShape,
    addrs: &AddressSuperposition,
    memory: &MemoryTable,
) -> Result<(SparseState, TraceRecord)> {
    qram_traced_with(shape, addrs, memory, true, Exec::Sequential)
}

pub fn qram_traced_with(
    shape: TreeShape,
    addrs: &AddressSuperposition,
    memory: &MemoryTable,
    normalize: bool,
    exec: Exec,
) -> Result<(SparseState, TraceRecord)> {
    check_memory_shape(shape, memory)?;
    let mut trace = TraceRecord::new();
    let mut state = make_initial_state_with(shape, addrs, normalize)?;
    trace.push("psi0_0".to_string(), &state);
    for level in 0..shape.n() {
        state = level_step_down_with(&state, level, exec)?;
        trace.push(format!("psi0_{}", level + 1), &state);
    }
    state = query_with(&state, memory, exec)?;
    trace.push("query".to_string(), &state);
    for level in (0..shape.n()).rev() {
        state = level_step_up_with(&state, level, exec)?;
        trace.push(format!("psix_{}", level), &state);
    }
    Ok((state, trace))
}

fn check_memory_shape(shape: TreeShape, memory: &MemoryTable) -> Result<()> {
    if memory.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected_n: shape.n(),
            expected_m: shape.m(),
            found_n: memory.shape().n(),
            found_m: memory.shape().m(),
        });
    }
    Ok(())
}
