//! Sparse simulator for a quantum-walk bucket-brigade qRAM.
//!
//! A walker with a two-level chirality is carried down a full binary tree:
//! each routing step copies the next address bit into the chirality
//! (a CNOT coin) and then shifts every node to the child matching its
//! chirality. After n steps the walker superposition sits on exactly the
//! addressed leaves, one XOR pass loads the classical cell contents into
//! the data register, and the same steps in reverse pull everything back
//! to the root:
//!
//! ```text
//! ∑_a α_a ∣0,0⟩∣0⟩_C ∣a⟩∣0⟩  ↦  ∑_a α_a ∣0,0⟩∣0⟩_C ∣a⟩∣x^(a)⟩
//! ```
//!
//! in 2n+1 primitive steps, independent of how many addresses are in
//! superposition. All operators permute basis labels, so states stay as
//! sparse as their inputs; [`oracle`] builds the same operators as explicit
//! dense matrices at small sizes for brute-force cross-checking.
//!
//! ```
//! use qwqram::{qram, AddressSuperposition, MemoryTable, TreeShape};
//!
//! let shape = TreeShape::new(3, 2).unwrap();
//! let mut memory = MemoryTable::new(shape);
//! memory.set(0b001, 0b10).unwrap();
//! let addrs = AddressSuperposition::uniform(&[0b001, 0b110]).unwrap();
//! let out = qram(shape, &addrs, &memory).unwrap();
//! assert_eq!(out.len(), 2);
//! ```

pub mod error;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod state;
pub mod walk;

pub use error::{Error, Result};
pub use pipeline::{qram, qram_traced, query, route, unroute, TraceRecord};
pub use state::{
    make_initial_state, AddressSuperposition, Amplitude, BasisState, Chirality, Exec, MemoryTable,
    NodeIndex, SparseState, TreeShape, PRUNE_THRESHOLD,
};
pub use walk::{apply_coin, apply_shift_level, level_step_down, level_step_up};
