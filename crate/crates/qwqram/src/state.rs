//! Basis labeling for the composite space V_B ⊗ V_C ⊗ V_A ⊗ V_D, the sparse
//! state container, and the classical memory/address inputs.
//!
//! A basis label is a tree node ∣w,l⟩ (bus), a chirality bit ∣c⟩, an n-bit
//! address word ∣a⟩ and an m-bit data word ∣d⟩. Address bit a_{n−1} is the
//! most significant and steers the first routing decision; data bit x_0 is
//! the least significant. States are finite maps from basis labels to
//! complex amplitudes, kept in canonical order (flat node id, c, a, d).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude attached to one basis label.
pub type Amplitude = Complex64;

/// Entries with modulus below this are dropped after each operator
/// application. All operators here permute basis labels, so only true
/// zeros (up to rounding) ever fall under it.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Widest supported address/data word, so that `1 << width` fits in u64
/// together with the flat node ids.
pub const MAX_WIDTH: u32 = 48;

/// Address width n (tree depth) and data width m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TreeShape {
    n: u32,
    m: u32,
}

impl TreeShape {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n < 1 || m < 1 || n > MAX_WIDTH || m > MAX_WIDTH {
            return Err(Error::InvalidShape {
                n,
                m,
                max: MAX_WIDTH,
            });
        }
        Ok(TreeShape { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of tree nodes, 2^(n+1) − 1.
    pub fn node_count(&self) -> u64 {
        (1u64 << (self.n + 1)) - 1
    }

    /// Number of leaves (memory cells), 2^n.
    pub fn leaf_count(&self) -> u64 {
        1u64 << self.n
    }

    /// Number of representable data words, 2^m.
    pub fn data_count(&self) -> u64 {
        1u64 << self.m
    }

    pub fn address_in_range(&self, address: u64) -> bool {
        address < self.leaf_count()
    }

    pub fn data_in_range(&self, data: u64) -> bool {
        data < self.data_count()
    }
}

/// Coin state of the walker: `Left` moves to the left child, `Right` to the
/// right one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chirality {
    Left = 0,
    Right = 1,
}

impl Chirality {
    pub fn bit(self) -> u64 {
        match self {
            Chirality::Left => 0,
            Chirality::Right => 1,
        }
    }

    pub fn from_bit(bit: u64) -> Self {
        if bit & 1 == 0 {
            Chirality::Left
        } else {
            Chirality::Right
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Chirality::Left => Chirality::Right,
            Chirality::Right => Chirality::Left,
        }
    }

    /// CNOT action: flip iff the control bit is set.
    pub fn xor_bit(self, bit: u64) -> Self {
        if bit & 1 == 1 {
            self.flipped()
        } else {
            self
        }
    }
}

/// Position ∣w,l⟩ in the full binary tree: level `l`, node `w` counted from
/// the left, 0 ≤ w < 2^l.
///
/// Ordering is by (level, pos), which coincides with the flat heap id
/// 2^l − 1 + w because every level-l id is smaller than every level-(l+1) id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIndex {
    level: u32,
    pos: u64,
}

impl NodeIndex {
    pub fn new(level: u32, pos: u64) -> Result<Self> {
        if level > MAX_WIDTH || pos >= (1u64 << level.min(63)) {
            return Err(Error::InvalidNode {
                pos,
                level,
                n: MAX_WIDTH,
            });
        }
        Ok(NodeIndex { level, pos })
    }

    pub(crate) fn new_unchecked(level: u32, pos: u64) -> Self {
        debug_assert!(pos < (1u64 << level));
        NodeIndex { level, pos }
    }

    pub fn root() -> Self {
        NodeIndex { level: 0, pos: 0 }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn pos(&self) -> u64 {
        self.pos
    }

    /// Flat heap id 2^l − 1 + w; bijective onto [0, 2^(n+1) − 2].
    pub fn flat_id(&self) -> u64 {
        (1u64 << self.level) - 1 + self.pos
    }

    /// Inverse of [`flat_id`](Self::flat_id).
    pub fn from_flat_id(id: u64) -> Self {
        let level = u64::BITS - (id + 1).leading_zeros() - 1;
        NodeIndex {
            level,
            pos: id + 1 - (1u64 << level),
        }
    }

    /// Child selected by the chirality: ∣2w+c, l+1⟩.
    pub fn child(&self, side: Chirality) -> NodeIndex {
        NodeIndex {
            level: self.level + 1,
            pos: 2 * self.pos + side.bit(),
        }
    }

    pub fn parent(&self) -> Option<NodeIndex> {
        if self.level == 0 {
            None
        } else {
            Some(NodeIndex {
                level: self.level - 1,
                pos: self.pos / 2,
            })
        }
    }

    /// Which side of its parent this node sits on.
    pub fn side(&self) -> Chirality {
        Chirality::from_bit(self.pos)
    }

    fn valid_for(&self, shape: TreeShape) -> bool {
        self.level <= shape.n()
    }
}

/// One computational basis label of V_B ⊗ V_C ⊗ V_A ⊗ V_D.
///
/// The derived ordering (node, chirality, address, data) is the canonical
/// serialization order used everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub node: NodeIndex,
    pub chirality: Chirality,
    pub address: u64,
    pub data: u64,
}

impl BasisState {
    pub fn new(node: NodeIndex, chirality: Chirality, address: u64, data: u64) -> Self {
        BasisState {
            node,
            chirality,
            address,
            data,
        }
    }

    /// Address bit a_k (k = 0 is least significant).
    pub fn address_bit(&self, k: u32) -> u64 {
        (self.address >> k) & 1
    }

    pub fn validate(&self, shape: TreeShape) -> Result<()> {
        if !self.node.valid_for(shape) {
            return Err(Error::InvalidNode {
                pos: self.node.pos(),
                level: self.node.level(),
                n: shape.n(),
            });
        }
        if !shape.address_in_range(self.address) {
            return Err(Error::AddressOutOfRange {
                address: self.address,
                n: shape.n(),
            });
        }
        if !shape.data_in_range(self.data) {
            return Err(Error::DataOutOfRange {
                data: self.data,
                m: shape.m(),
            });
        }
        Ok(())
    }
}

/// How per-entry operator application is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    /// Entry-parallel via rayon; output is merged into the same canonical
    /// map, so results are byte-identical to sequential runs.
    Parallel,
}

/// Sparse vector over the composite basis: a finite map label → amplitude
/// in canonical order.
///
/// Operations never mutate their inputs; a state can be shared freely
/// across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    shape: TreeShape,
    amplitudes: BTreeMap<BasisState, Amplitude>,
}

impl SparseState {
    /// The zero vector.
    pub fn new(shape: TreeShape) -> Self {
        SparseState {
            shape,
            amplitudes: BTreeMap::new(),
        }
    }

    /// Builds a state from (label, amplitude) terms. Duplicate labels are
    /// summed; exact zeros are dropped; labels must fit the shape and
    /// amplitudes must be finite.
    pub fn from_entries<I>(shape: TreeShape, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisState, Amplitude)>,
    {
        let mut amplitudes: BTreeMap<BasisState, Amplitude> = BTreeMap::new();
        for (basis, amp) in entries {
            basis.validate(shape)?;
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFiniteAmplitude);
            }
            *amplitudes.entry(basis).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        amplitudes.retain(|_, amp| amp.norm() != 0.0);
        Ok(SparseState { shape, amplitudes })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    /// Amplitude of one basis label (zero if absent).
    pub fn amplitude(&self, basis: &BasisState) -> Amplitude {
        self.amplitudes
            .get(basis)
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Number of stored (nonzero) entries.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Entries in canonical order (flat node id, chirality, address, data).
    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, &Amplitude)> {
        self.amplitudes.iter()
    }

    /// Canonically ordered entry list; the basis order used by all
    /// serialization and by the dense oracle's index layout.
    pub fn canonical_entries(&self) -> Vec<(BasisState, Amplitude)> {
        self.amplitudes.iter().map(|(b, a)| (*b, *a)).collect()
    }

    /// ∑ |amplitude|² over all entries.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Largest amplitude difference over the union of both supports; the
    /// tolerance-equality measure used in tests. States of different
    /// shapes compare as infinitely far apart.
    pub fn max_deviation(&self, other: &SparseState) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        let mut max = 0.0f64;
        for (basis, amp) in &self.amplitudes {
            max = max.max((amp - other.amplitude(basis)).norm());
        }
        for (basis, amp) in &other.amplitudes {
            max = max.max((amp - self.amplitude(basis)).norm());
        }
        max
    }

    /// Applies an injective basis-label permutation to every entry.
    /// Collisions would mean the map is not injective, so they are asserted
    /// away; near-zero amplitudes are pruned.
    pub(crate) fn permuted<F>(&self, exec: Exec, f: F) -> SparseState
    where
        F: Fn(&BasisState) -> BasisState + Sync,
    {
        let mapped: Vec<(BasisState, Amplitude)> = match exec {
            Exec::Sequential => self
                .amplitudes
                .iter()
                .map(|(basis, amp)| (f(basis), *amp))
                .collect(),
            Exec::Parallel => {
                use rayon::prelude::*;
                self.amplitudes
                    .par_iter()
                    .map(|(basis, amp)| (f(basis), *amp))
                    .collect()
            }
        };
        let mut amplitudes = BTreeMap::new();
        for (basis, amp) in mapped {
            if amp.norm() < PRUNE_THRESHOLD {
                continue;
            }
            let previous = amplitudes.insert(basis, amp);
            assert!(previous.is_none(), "basis-state collision: map not injective");
        }
        SparseState {
            shape: self.shape,
            amplitudes,
        }
    }
}

/// Random normalized state with up to `max_entries` distinct labels spread
/// over the whole tree; used by the dense-oracle equivalence checks and by
/// randomized tests.
pub fn random_state<R: rand::Rng>(shape: TreeShape, max_entries: usize, rng: &mut R) -> SparseState {
    let target = rng.gen_range(1..=max_entries.max(1));
    let mut entries: BTreeMap<BasisState, Amplitude> = BTreeMap::new();
    while entries.len() < target {
        let level = rng.gen_range(0..=shape.n());
        let pos = rng.gen_range(0..(1u64 << level));
        let basis = BasisState::new(
            NodeIndex::new_unchecked(level, pos),
            Chirality::from_bit(rng.gen_range(0..2u64)),
            rng.gen_range(0..shape.leaf_count()),
            rng.gen_range(0..shape.data_count()),
        );
        entries.insert(
            basis,
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
    }
    let norm = entries
        .values()
        .map(|amp| amp.norm_sqr())
        .sum::<f64>()
        .sqrt();
    // Continuous draws make a zero norm impossible in practice; guard anyway.
    let scale = if norm > 1e-9 { 1.0 / norm } else { 1.0 };
    for amp in entries.values_mut() {
        *amp *= scale;
    }
    SparseState {
        shape,
        amplitudes: entries,
    }
}

/// Classical memory array a ↦ x^(a); unlisted cells read as 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryTable {
    shape: TreeShape,
    cells: BTreeMap<u64, u64>,
}

impl MemoryTable {
    /// All-zero memory.
    pub fn new(shape: TreeShape) -> Self {
        MemoryTable {
            shape,
            cells: BTreeMap::new(),
        }
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn set(&mut self, address: u64, value: u64) -> Result<()> {
        if !self.shape.address_in_range(address) {
            return Err(Error::AddressOutOfRange {
                address,
                n: self.shape.n(),
            });
        }
        if !self.shape.data_in_range(value) {
            return Err(Error::DataOutOfRange {
                data: value,
                m: self.shape.m(),
            });
        }
        if value == 0 {
            self.cells.remove(&address);
        } else {
            self.cells.insert(address, value);
        }
        Ok(())
    }

    /// Cell contents x^(a); total over the address range.
    pub fn get(&self, address: u64) -> u64 {
        self.cells.get(&address).copied().unwrap_or(0)
    }

    /// Nonzero cells in address order.
    pub fn nonzero_cells(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.cells.iter().map(|(a, x)| (*a, *x))
    }

    /// Uniformly random contents for every cell. Only sensible at small n.
    pub fn random<R: rand::Rng>(shape: TreeShape, rng: &mut R) -> Self {
        let mut mem = MemoryTable::new(shape);
        for address in 0..shape.leaf_count() {
            let value = rng.gen_range(0..shape.data_count());
            mem.set(address, value).expect("in-range by construction");
        }
        mem
    }

    pub fn is_all_zero(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Weighted set of input addresses: the ∑_a amp_a ∣a⟩ to be loaded at the
/// root. The classic examples are equal-amplitude sums, but any complex
/// weights are accepted since every operator is linear.
#[derive(Clone, Debug, PartialEq)]
pub struct AddressSuperposition {
    terms: Vec<(u64, Amplitude)>,
}

impl AddressSuperposition {
    pub fn new(terms: Vec<(u64, Amplitude)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptySuperposition);
        }
        for (_, amp) in &terms {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFiniteAmplitude);
            }
        }
        Ok(AddressSuperposition { terms })
    }

    /// Equal unit weight on each listed address.
    pub fn uniform(addresses: &[u64]) -> Result<Self> {
        Self::new(
            addresses
                .iter()
                .map(|a| (*a, Complex64::new(1.0, 0.0)))
                .collect(),
        )
    }

    pub fn terms(&self) -> &[(u64, Amplitude)] {
        &self.terms
    }

    /// Range-checks against the shape, merges duplicate addresses, drops
    /// exact zeros and (by default) rescales to unit norm. Terms come out
    /// sorted by address.
    pub fn canonicalized(&self, shape: TreeShape, normalize: bool) -> Result<Self> {
        let mut merged: BTreeMap<u64, Amplitude> = BTreeMap::new();
        for (address, amp) in &self.terms {
            if !shape.address_in_range(*address) {
                return Err(Error::AddressOutOfRange {
                    address: *address,
                    n: shape.n(),
                });
            }
            *merged.entry(*address).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        merged.retain(|_, amp| amp.norm() != 0.0);
        if merged.is_empty() {
            return Err(Error::ZeroNorm);
        }
        let mut terms: Vec<(u64, Amplitude)> = merged.into_iter().collect();
        if normalize {
            let norm = terms
                .iter()
                .map(|(_, amp)| amp.norm_sqr())
                .sum::<f64>()
                .sqrt();
            for (_, amp) in &mut terms {
                *amp /= norm;
            }
        }
        Ok(AddressSuperposition { terms })
    }
}

/// Builds ∑_a amp_a ∣0,0⟩_B ∣0⟩_C ∣a⟩_A ∣0⟩_D: every walker starts at the
/// root with chirality left and an empty data register. The superposition
/// is canonicalized and normalized first.
pub fn make_initial_state(shape: TreeShape, addrs: &AddressSuperposition) -> Result<SparseState> {
    make_initial_state_with(shape, addrs, true)
}

/// As [`make_initial_state`], with normalization optional (inputs written
/// as unweighted sums keep their raw amplitudes when `normalize` is off).
pub fn make_initial_state_with(
    shape: TreeShape,
    addrs: &AddressSuperposition,
    normalize: bool,
) -> Result<SparseState> {
    let canonical = addrs.canonicalized(shape, normalize)?;
    SparseState::from_entries(
        shape,
        canonical.terms().iter().map(|(address, amp)| {
            (
                BasisState::new(NodeIndex::root(), Chirality::Left, *address, 0),
                *amp,
            )
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: u32, m: u32) -> TreeShape {
        TreeShape::new(n, m).unwrap()
    }

    fn basis(level: u32, pos: u64, c: u64, a: u64, d: u64) -> BasisState {
        BasisState::new(
            NodeIndex::new(level, pos).unwrap(),
            Chirality::from_bit(c),
            a,
            d,
        )
    }

    #[test]
    fn shape_counts() {
        let s = shape(3, 2);
        assert_eq!(s.node_count(), 15);
        assert_eq!(s.leaf_count(), 8);
        assert_eq!(s.data_count(), 4);
        assert!(TreeShape::new(0, 1).is_err());
        assert!(TreeShape::new(1, 0).is_err());
    }

    #[test]
    fn flat_id_matches_heap_order() {
        // ids 0..6 for n=2: (0,0), (0,1), (1,1), (0,2), (1,2), (2,2), (3,2)
        let expected = [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (2, 3)];
        for (id, (level, pos)) in expected.iter().enumerate() {
            let node = NodeIndex::new(*level, *pos).unwrap();
            assert_eq!(node.flat_id(), id as u64);
            assert_eq!(NodeIndex::from_flat_id(id as u64), node);
        }
    }

    #[test]
    fn node_child_parent() {
        let node = NodeIndex::new(1, 1).unwrap();
        assert_eq!(node.child(Chirality::Left), NodeIndex::new(2, 2).unwrap());
        assert_eq!(node.child(Chirality::Right), NodeIndex::new(2, 3).unwrap());
        assert_eq!(node.child(Chirality::Right).parent(), Some(node));
        assert_eq!(NodeIndex::root().parent(), None);
        assert!(NodeIndex::new(1, 2).is_err());
    }

    #[test]
    fn initial_state_three_addresses_equal_amplitudes() {
        // n=3 with {001, 011, 110}: three root entries at 1/√3 each.
        let s = shape(3, 2);
        let addrs = AddressSuperposition::uniform(&[0b001, 0b011, 0b110]).unwrap();
        let state = make_initial_state(s, &addrs).unwrap();
        assert_eq!(state.len(), 3);
        let w = 1.0 / 3.0f64.sqrt();
        for a in [0b001u64, 0b011, 0b110] {
            let amp = state.amplitude(&basis(0, 0, 0, a, 0));
            assert!((amp - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
        assert!((state.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_state_single_address() {
        let s = shape(1, 1);
        let addrs = AddressSuperposition::uniform(&[0]).unwrap();
        let state = make_initial_state(s, &addrs).unwrap();
        assert_eq!(state.len(), 1);
        assert_eq!(
            state.amplitude(&basis(0, 0, 0, 0, 0)),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn initial_state_merges_duplicates_then_normalizes() {
        // {(01, 0.6), (01, 0.8i)} merges to 0.6+0.8i, which already has
        // unit modulus, so the stored amplitude is (0.6+0.8i)/1.0.
        let s = shape(2, 1);
        let addrs = AddressSuperposition::new(vec![
            (0b01, Complex64::new(0.6, 0.0)),
            (0b01, Complex64::new(0.0, 0.8)),
        ])
        .unwrap();
        let state = make_initial_state(s, &addrs).unwrap();
        assert_eq!(state.len(), 1);
        let amp = state.amplitude(&basis(0, 0, 0, 0b01, 0));
        assert!((amp - Complex64::new(0.6, 0.8)).norm() < 1e-15);
        assert!((state.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_state_rejects_bad_inputs() {
        let s = shape(2, 1);
        let out_of_range = AddressSuperposition::uniform(&[4]).unwrap();
        assert!(matches!(
            make_initial_state(s, &out_of_range),
            Err(Error::AddressOutOfRange { address: 4, n: 2 })
        ));
        assert!(matches!(
            AddressSuperposition::uniform(&[]),
            Err(Error::EmptySuperposition)
        ));
        // Amplitudes that cancel exactly leave nothing to normalize.
        let cancelling = AddressSuperposition::new(vec![
            (1, Complex64::new(1.0, 0.0)),
            (1, Complex64::new(-1.0, 0.0)),
        ])
        .unwrap();
        assert!(matches!(
            make_initial_state(s, &cancelling),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn unnormalized_inputs_keep_their_amplitudes() {
        let s = shape(3, 1);
        let addrs = AddressSuperposition::uniform(&[0b001, 0b011, 0b110]).unwrap();
        let state = make_initial_state_with(s, &addrs, false).unwrap();
        assert!((state.norm_squared() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn norm_squared_examples() {
        let s = shape(2, 1);
        assert_eq!(SparseState::new(s).norm_squared(), 0.0);
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let state = SparseState::from_entries(
            s,
            vec![
                (basis(0, 0, 0, 0, 0), Complex64::new(w, 0.0)),
                (basis(0, 0, 0, 1, 0), Complex64::new(w, 0.0)),
            ],
        )
        .unwrap();
        assert!((state.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_order_is_flat_id_then_fields() {
        let s = shape(2, 1);
        // Insert in scrambled order; iteration must come out sorted by
        // (flat id, c, a, d).
        let entries = vec![
            (basis(1, 1, 0, 0, 0), Complex64::new(0.5, 0.0)),
            (basis(1, 0, 1, 0, 0), Complex64::new(0.5, 0.0)),
            (basis(1, 0, 0, 2, 0), Complex64::new(0.5, 0.0)),
            (basis(1, 0, 0, 1, 0), Complex64::new(0.5, 0.0)),
        ];
        let state = SparseState::from_entries(s, entries).unwrap();
        let listed: Vec<BasisState> = state.canonical_entries().iter().map(|(b, _)| *b).collect();
        assert_eq!(
            listed,
            vec![
                basis(1, 0, 0, 1, 0),
                basis(1, 0, 0, 2, 0),
                basis(1, 0, 1, 0, 0),
                basis(1, 1, 0, 0, 0),
            ]
        );
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let s = shape(2, 1);
        let forward = vec![
            (basis(0, 0, 0, 0, 0), Complex64::new(0.6, 0.0)),
            (basis(2, 3, 1, 3, 1), Complex64::new(0.8, 0.0)),
        ];
        let mut reversed = forward.clone();
        reversed.reverse();
        let a = SparseState::from_entries(s, forward).unwrap();
        let b = SparseState::from_entries(s, reversed).unwrap();
        assert_eq!(a.canonical_entries(), b.canonical_entries());
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let s = shape(3, 1);
        let addrs = AddressSuperposition::new(vec![
            (5, Complex64::new(0.2, 0.1)),
            (1, Complex64::new(-1.0, 0.0)),
            (5, Complex64::new(0.3, 0.0)),
        ])
        .unwrap();
        let once = addrs.canonicalized(s, true).unwrap();
        let twice = once.canonicalized(s, true).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn max_deviation_over_support_union() {
        let s = shape(1, 1);
        let a = SparseState::from_entries(s, vec![(basis(0, 0, 0, 0, 0), Complex64::new(1.0, 0.0))])
            .unwrap();
        let b = SparseState::from_entries(s, vec![(basis(1, 1, 1, 1, 1), Complex64::new(1.0, 0.0))])
            .unwrap();
        assert!((a.max_deviation(&b) - 1.0).abs() < 1e-15);
        assert_eq!(a.max_deviation(&a), 0.0);
    }

    #[test]
    fn memory_defaults_to_zero() {
        let s = shape(3, 2);
        let mut mem = MemoryTable::new(s);
        assert_eq!(mem.get(5), 0);
        mem.set(5, 3).unwrap();
        assert_eq!(mem.get(5), 3);
        assert!(mem.set(8, 0).is_err());
        assert!(mem.set(0, 4).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flat_id_is_a_bijection(
                n in 1u32..=12,
                level_seed in any::<u32>(),
                pos_seed in any::<u64>(),
            ) {
                let level = level_seed % (n + 1);
                let pos = pos_seed % (1u64 << level);
                let node = NodeIndex::new(level, pos).unwrap();
                let id = node.flat_id();
                prop_assert!(id <= (1u64 << (n + 1)) - 2);
                prop_assert_eq!(NodeIndex::from_flat_id(id), node);
                // And back the other way, from a random id.
                let id = pos_seed % ((1u64 << (n + 1)) - 1);
                prop_assert_eq!(NodeIndex::from_flat_id(id).flat_id(), id);
            }
        }
    }
}
