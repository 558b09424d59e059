//! Brute-force dense oracle: every operator in the system written out as
//! an explicit matrix on the full space V_B ⊗ V_C ⊗ V_A ⊗ V_D at small
//! sizes.
//!
//! Single operators (shift, coin, query) are transcribed term by term from
//! their bra-ket sums, composites come from literal matrix products —
//! nothing here routes through the sparse transformers, so agreement
//! between the two paths is a real check. Storage is plain row-major
//! complex doubles; all of these matrices are 0/1 permutations, and the
//! multiply skips zero columns, which keeps products at O(dim²) without
//! assuming anything about its inputs.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline;
use crate::state::{
    random_state, BasisState, Chirality, MemoryTable, NodeIndex, SparseState, TreeShape,
};
use crate::walk;

/// Default bound on the dense dimension; n=3, m=2 gives dim = 960.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Which operator to materialize.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    ShiftLevel(u32),
    Coin(u32),
    LevelStepDown(u32),
    LevelStepUp(u32),
    Route,
    Query(MemoryTable),
    Unroute,
    QRam(MemoryTable),
}

/// A fully specified operator: kind plus the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    shape: TreeShape,
    kind: OperatorKind,
}

impl OperatorSpec {
    pub fn new(shape: TreeShape, kind: OperatorKind) -> Result<Self> {
        let n = shape.n();
        match &kind {
            OperatorKind::ShiftLevel(l)
            | OperatorKind::LevelStepDown(l)
            | OperatorKind::LevelStepUp(l) => {
                if *l >= n {
                    return Err(Error::LevelOutOfRange { level: *l, n });
                }
            }
            OperatorKind::Coin(k) => {
                if *k > n {
                    return Err(Error::CoinOutOfRange { k: *k, n });
                }
            }
            OperatorKind::Query(mem) | OperatorKind::QRam(mem) => {
                if mem.shape() != shape {
                    return Err(Error::ShapeMismatch {
                        expected_n: n,
                        expected_m: shape.m(),
                        found_n: mem.shape().n(),
                        found_m: mem.shape().m(),
                    });
                }
            }
            OperatorKind::Route | OperatorKind::Unroute => {}
        }
        Ok(OperatorSpec { shape, kind })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Applies the same operator through the sparse transformers; the
    /// other side of the dense/sparse comparison.
    pub fn apply_sparse(&self, state: &SparseState) -> Result<SparseState> {
        match &self.kind {
            OperatorKind::ShiftLevel(l) => walk::apply_shift_level(state, *l),
            OperatorKind::Coin(k) => walk::apply_coin(state, *k),
            OperatorKind::LevelStepDown(l) => walk::level_step_down(state, *l),
            OperatorKind::LevelStepUp(l) => walk::level_step_up(state, *l),
            OperatorKind::Route => pipeline::route(state),
            OperatorKind::Query(mem) => pipeline::query(state, mem),
            OperatorKind::Unroute => pipeline::unroute(state),
            OperatorKind::QRam(mem) => {
                let routed = pipeline::route(state)?;
                let filled = pipeline::query(&routed, mem)?;
                pipeline::unroute(&filled)
            }
        }
    }
}

/// Flat index of a basis label in the canonical (flat node id, c, a, d)
/// layout shared with `SparseState::canonical_entries`.
pub fn basis_index(shape: TreeShape, basis: &BasisState) -> usize {
    let node_part = basis.node.flat_id() * 2 + basis.chirality.bit();
    let with_address = node_part * shape.leaf_count() + basis.address;
    (with_address * shape.data_count() + basis.data) as usize
}

/// Inverse of [`basis_index`].
pub fn basis_from_index(shape: TreeShape, index: usize) -> BasisState {
    let mut rest = index as u64;
    let data = rest % shape.data_count();
    rest /= shape.data_count();
    let address = rest % shape.leaf_count();
    rest /= shape.leaf_count();
    let chirality = Chirality::from_bit(rest % 2);
    let node = NodeIndex::from_flat_id(rest / 2);
    BasisState::new(node, chirality, address, data)
}

/// Dense dimension (2^(n+1) − 1) · 2 · 2^n · 2^m.
pub fn dense_dimension(shape: TreeShape) -> u128 {
    shape.node_count() as u128 * 2 * shape.leaf_count() as u128 * shape.data_count() as u128
}

/// Row-major complex matrix on the full composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DenseMatrix {
    fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn conj_transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.dim);
        for row in 0..self.dim {
            for col in 0..self.dim {
                out.set(col, row, self.get(row, col).conj());
            }
        }
        out
    }

    /// self · rhs. Zero columns of `rhs` are skipped, so products of
    /// permutation matrices cost O(dim²); the result is exact for any
    /// inputs.
    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let dim = self.dim;
        let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for k in 0..dim {
            for (j, col) in cols.iter_mut().enumerate() {
                let v = rhs.get(k, j);
                if v != Complex64::new(0.0, 0.0) {
                    col.push((k, v));
                }
            }
        }
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            let row = &self.entries[i * dim..(i + 1) * dim];
            for (j, col) in cols.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, v) in col {
                    acc += row[*k] * v;
                }
                out.entries[i * dim + j] = acc;
            }
        }
        out
    }

    /// Matrix–vector product.
    pub fn apply(&self, vector: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(vector.len(), self.dim, "dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (j, x) in vector.iter().enumerate() {
            if *x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i, acc) in out.iter_mut().enumerate() {
                *acc += self.get(i, j) * x;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// True iff every column and every row holds exactly one entry equal
    /// to 1 and zeros elsewhere.
    pub fn is_permutation(&self) -> bool {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut row_counts = vec![0usize; self.dim];
        for col in 0..self.dim {
            let mut hits = 0;
            for (row, count) in row_counts.iter_mut().enumerate() {
                let v = self.get(row, col);
                if v == one {
                    hits += 1;
                    *count += 1;
                } else if v != zero {
                    return false;
                }
            }
            if hits != 1 {
                return false;
            }
        }
        row_counts.iter().all(|count| *count == 1)
    }

    /// Nonzero entries as text, one `row col re im` line under a header;
    /// debugging aid only.
    pub fn dump_nonzeros(&self) -> String {
        let mut out = format!("qwqram-matrix v1 dim={}\n", self.dim);
        for row in 0..self.dim {
            for col in 0..self.dim {
                let v = self.get(row, col);
                if v != Complex64::new(0.0, 0.0) {
                    out.push_str(&format!("{} {} {:.16e} {:.16e}\n", row, col, v.re, v.im));
                }
            }
        }
        out
    }
}

/// Materializes the operator named by `spec` with the default dimension
/// cap.
pub fn build_dense(spec: &OperatorSpec) -> Result<DenseMatrix> {
    build_dense_capped(spec, DEFAULT_DIMENSION_CAP)
}

pub fn build_dense_capped(spec: &OperatorSpec, cap: usize) -> Result<DenseMatrix> {
    let shape = spec.shape();
    let dim_wide = dense_dimension(shape);
    if dim_wide > cap as u128 {
        return Err(Error::DimensionCap {
            dim: dim_wide.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let dim = dim_wide as usize;
    let n = shape.n();
    let matrix = match spec.kind() {
        OperatorKind::ShiftLevel(l) => build_shift_level(shape, dim, *l),
        OperatorKind::Coin(k) => build_coin(shape, dim, *k),
        OperatorKind::LevelStepDown(l) => level_step_down_matrix(shape, dim, *l),
        OperatorKind::LevelStepUp(l) => level_step_up_matrix(shape, dim, *l),
        OperatorKind::Route => {
            // F = F^(n|n−1) ··· F^(1|0): rightmost factor acts first.
            let mut acc = level_step_down_matrix(shape, dim, 0);
            for l in 1..n {
                acc = level_step_down_matrix(shape, dim, l).mul(&acc);
            }
            acc
        }
        OperatorKind::Query(mem) => build_query(shape, dim, mem),
        OperatorKind::Unroute => {
            let mut acc = level_step_up_matrix(shape, dim, n - 1);
            for l in (0..n - 1).rev() {
                acc = level_step_up_matrix(shape, dim, l).mul(&acc);
            }
            acc
        }
        OperatorKind::QRam(mem) => {
            let route = build_dense_capped(&OperatorSpec::new(shape, OperatorKind::Route)?, cap)?;
            let unroute =
                build_dense_capped(&OperatorSpec::new(shape, OperatorKind::Unroute)?, cap)?;
            let query = build_query(shape, dim, mem);
            unroute.mul(&query.mul(&route))
        }
    };
    Ok(matrix)
}

/// Shift at level l, written out one operator term at a time: the two
/// parent↔child exchanges per subtree for the matching chirality, the two
/// mismatched children held fixed, then the identity on every node outside
/// levels {l, l+1}. Each term is tensored with the identity on the address
/// and data registers.
fn build_shift_level(shape: TreeShape, dim: usize, l: u32) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(dim);
    let one = Complex64::new(1.0, 0.0);
    let for_all_registers = |m: &mut DenseMatrix, to: NodeIndex, c: u64, from: NodeIndex| {
        for a in 0..shape.leaf_count() {
            for d in 0..shape.data_count() {
                let col = basis_index(
                    shape,
                    &BasisState::new(from, Chirality::from_bit(c), a, d),
                );
                let row = basis_index(shape, &BasisState::new(to, Chirality::from_bit(c), a, d));
                m.set(row, col, one);
            }
        }
    };
    for w in 0..(1u64 << l) {
        let parent = NodeIndex::new_unchecked(l, w);
        for i in 0..2u64 {
            let child = NodeIndex::new_unchecked(l + 1, 2 * w + i);
            // ∣2w+i, l+1⟩⟨w, l∣ ⊗ ∣i⟩⟨i∣ and its transpose partner.
            for_all_registers(&mut m, child, i, parent);
            for_all_registers(&mut m, parent, i, child);
            // ∣2w + (1+(−1)^i)/2, l+1⟩ held fixed for chirality i.
            let fixed = NodeIndex::new_unchecked(l + 1, 2 * w + (1 - i));
            for_all_registers(&mut m, fixed, i, fixed);
        }
    }
    for id in 0..shape.node_count() {
        let node = NodeIndex::from_flat_id(id);
        if node.level() == l || node.level() == l + 1 {
            continue;
        }
        for c in 0..2u64 {
            for_all_registers(&mut m, node, c, node);
        }
    }
    m
}

/// Coin with address bit k as control: I ⊗ ∣0⟩⟨0∣ + X ⊗ ∣1⟩⟨1∣ on
/// (chirality, A_k), identity on everything else; k = n is the identity.
fn build_coin(shape: TreeShape, dim: usize, k: u32) -> DenseMatrix {
    if k == shape.n() {
        return DenseMatrix::identity(dim);
    }
    let mut m = DenseMatrix::zeros(dim);
    let one = Complex64::new(1.0, 0.0);
    for col in 0..dim {
        let basis = basis_from_index(shape, col);
        let chirality = if (basis.address >> k) & 1 == 1 {
            basis.chirality.flipped()
        } else {
            basis.chirality
        };
        let row = basis_index(shape, &BasisState { chirality, ..basis });
        m.set(row, col, one);
    }
    m
}

/// Query: ∑_w ∣w,n⟩⟨w,n∣ ⊗ ⊗_i X^{x_i^(w)} on the data register, completed
/// by the identity on interior nodes.
fn build_query(shape: TreeShape, dim: usize, memory: &MemoryTable) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(dim);
    let one = Complex64::new(1.0, 0.0);
    for col in 0..dim {
        let basis = basis_from_index(shape, col);
        let data = if basis.node.level() == shape.n() {
            basis.data ^ memory.get(basis.node.pos())
        } else {
            basis.data
        };
        let row = basis_index(shape, &BasisState { data, ..basis });
        m.set(row, col, one);
    }
    m
}

fn level_step_down_matrix(shape: TreeShape, dim: usize, l: u32) -> DenseMatrix {
    let n = shape.n();
    let shift = build_shift_level(shape, dim, l);
    let coin_next = build_coin(shape, dim, n - (l + 1));
    let coin_prev = build_coin(shape, dim, n - l);
    shift.mul(&coin_next.mul(&coin_prev))
}

fn level_step_up_matrix(shape: TreeShape, dim: usize, l: u32) -> DenseMatrix {
    let n = shape.n();
    let shift = build_shift_level(shape, dim, l);
    let coin_next = build_coin(shape, dim, n - (l + 1));
    let coin_prev = build_coin(shape, dim, n - l);
    coin_prev.mul(&coin_next.mul(&shift))
}

/// Max entry of ∣U†U − I∣; zero for an exactly unitary matrix.
pub fn check_unitary(matrix: &DenseMatrix) -> f64 {
    let product = matrix.conj_transpose().mul(matrix);
    product.max_abs_diff(&DenseMatrix::identity(matrix.dim()))
}

/// Compares the dense matrix for `spec` against the sparse transformer on
/// `trials` random states; returns the worst amplitude deviation seen.
pub fn check_equivalence(spec: &OperatorSpec, trials: usize, seed: u64) -> Result<f64> {
    check_equivalence_capped(spec, trials, seed, DEFAULT_DIMENSION_CAP)
}

pub fn check_equivalence_capped(
    spec: &OperatorSpec,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<f64> {
    let shape = spec.shape();
    let matrix = build_dense_capped(spec, cap)?;
    let dim = matrix.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let state = random_state(shape, 12, &mut rng);
        let mut vector = vec![Complex64::new(0.0, 0.0); dim];
        for (basis, amp) in state.iter() {
            vector[basis_index(shape, basis)] = *amp;
        }
        let dense_out = matrix.apply(&vector);
        let sparse_out = spec.apply_sparse(&state)?;
        for (index, dense_amp) in dense_out.iter().enumerate() {
            let sparse_amp = sparse_out.amplitude(&basis_from_index(shape, index));
            worst = worst.max((dense_amp - sparse_amp).norm());
        }
    }
    Ok(worst)
}

/// Entrywise distance between the upward step and the conjugate transpose
/// of the downward step at the same level.
pub fn check_adjoint(shape: TreeShape, level: u32) -> Result<f64> {
    check_adjoint_capped(shape, level, DEFAULT_DIMENSION_CAP)
}

pub fn check_adjoint_capped(shape: TreeShape, level: u32, cap: usize) -> Result<f64> {
    let up = build_dense_capped(&OperatorSpec::new(shape, OperatorKind::LevelStepUp(level))?, cap)?;
    let down = build_dense_capped(
        &OperatorSpec::new(shape, OperatorKind::LevelStepDown(level))?,
        cap,
    )?;
    Ok(up.max_abs_diff(&down.conj_transpose()))
}

pub const UNITARY_TOLERANCE: f64 = 1e-10;
pub const ADJOINT_TOLERANCE: f64 = 1e-12;
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Unitarity,
    Permutation,
    Equivalence,
    Adjoint,
}

/// Outcome of one verification check; permutation checks are pass/fail,
/// the rest carry a measured deviation against their tolerance.
#[derive(Clone, Debug)]
pub struct VerifyCheck {
    pub kind: CheckKind,
    pub name: String,
    /// 0.0 for passing flag checks, 1.0 for failing ones.
    pub deviation: f64,
    pub tolerance: f64,
}

impl VerifyCheck {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// Every operator kind over one shape, with a seeded random memory backing
/// the query/qram entries.
pub fn all_operator_specs(shape: TreeShape, seed: u64) -> Vec<OperatorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let memory = MemoryTable::random(shape, &mut rng);
    let mut specs = Vec::new();
    for l in 0..shape.n() {
        specs.push(OperatorSpec {
            shape,
            kind: OperatorKind::ShiftLevel(l),
        });
    }
    for k in 0..=shape.n() {
        specs.push(OperatorSpec {
            shape,
            kind: OperatorKind::Coin(k),
        });
    }
    for l in 0..shape.n() {
        specs.push(OperatorSpec {
            shape,
            kind: OperatorKind::LevelStepDown(l),
        });
        specs.push(OperatorSpec {
            shape,
            kind: OperatorKind::LevelStepUp(l),
        });
    }
    specs.push(OperatorSpec {
        shape,
        kind: OperatorKind::Route,
    });
    specs.push(OperatorSpec {
        shape,
        kind: OperatorKind::Query(memory.clone()),
    });
    specs.push(OperatorSpec {
        shape,
        kind: OperatorKind::Unroute,
    });
    specs.push(OperatorSpec {
        shape,
        kind: OperatorKind::QRam(memory),
    });
    specs
}

fn kind_name(kind: &OperatorKind) -> String {
    match kind {
        OperatorKind::ShiftLevel(l) => format!("shift(l={l})"),
        OperatorKind::Coin(k) => format!("coin(k={k})"),
        OperatorKind::LevelStepDown(l) => format!("step-down(l={l})"),
        OperatorKind::LevelStepUp(l) => format!("step-up(l={l})"),
        OperatorKind::Route => "route".to_string(),
        OperatorKind::Query(_) => "query".to_string(),
        OperatorKind::Unroute => "unroute".to_string(),
        OperatorKind::QRam(_) => "qram".to_string(),
    }
}

/// Runs the whole battery for one shape: unitarity, permutation structure
/// and sparse/dense equivalence for every operator kind, plus the adjoint
/// comparison per level. The dense dimension must stay within `cap`.
pub fn verify_operators(
    shape: TreeShape,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<Vec<VerifyCheck>> {
    let mut checks = Vec::new();
    for spec in all_operator_specs(shape, seed) {
        let name = kind_name(spec.kind());
        let matrix = build_dense_capped(&spec, cap)?;
        checks.push(VerifyCheck {
            kind: CheckKind::Unitarity,
            name: format!("unitarity {name}"),
            deviation: check_unitary(&matrix),
            tolerance: UNITARY_TOLERANCE,
        });
        checks.push(VerifyCheck {
            kind: CheckKind::Permutation,
            name: format!("permutation {name}"),
            deviation: if matrix.is_permutation() { 0.0 } else { 1.0 },
            tolerance: 0.0,
        });
        checks.push(VerifyCheck {
            kind: CheckKind::Equivalence,
            name: format!("sparse/dense {name}"),
            deviation: check_equivalence_capped(&spec, trials, seed, cap)?,
            tolerance: EQUIVALENCE_TOLERANCE,
        });
    }
    for level in 0..shape.n() {
        checks.push(VerifyCheck {
            kind: CheckKind::Adjoint,
            name: format!("adjoint(l={level})"),
            deviation: check_adjoint_capped(shape, level, cap)?,
            tolerance: ADJOINT_TOLERANCE,
        });
    }
    Ok(checks)
}
