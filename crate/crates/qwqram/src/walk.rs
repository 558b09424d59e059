//! Discrete-time walk primitives on the tree: the level-wide shift, the
//! chirality coin, and their composition into one routing step.
//!
//! The shift at level l swaps each parent ∣w,l⟩ with the child matching its
//! chirality (∣2w+c, l+1⟩) and leaves the mismatched child alone; nodes at
//! other levels are untouched. The local operator is only defined on the
//! parent/children subspace, and extending it by the identity elsewhere is
//! the unique completion consistent with its level-wide direct sum, so that
//! is what is implemented. The coin is a CNOT with an address bit as
//! control and the chirality as target. Both are involutions, which is how
//! the upward step realizes the exact adjoint of the downward one.

use crate::error::{Error, Result};
use crate::state::{BasisState, Exec, SparseState};

fn check_level(state: &SparseState, level: u32) -> Result<()> {
    let n = state.shape().n();
    if level >= n {
        return Err(Error::LevelOutOfRange { level, n });
    }
    Ok(())
}

fn shift_map(basis: &BasisState, level: u32) -> BasisState {
    let node = basis.node;
    if node.level() == level {
        // Parent descends to the child selected by its chirality.
        BasisState {
            node: node.child(basis.chirality),
            ..*basis
        }
    } else if node.level() == level + 1 && node.side() == basis.chirality {
        // Matching-chirality child is pulled back to the parent.
        BasisState {
            node: node.parent().expect("level + 1 >= 1"),
            ..*basis
        }
    } else {
        // Mismatched child, or a node outside levels {l, l+1}.
        *basis
    }
}

/// Applies the shift between levels `level` and `level + 1` to every entry.
/// Amplitudes are carried, never combined; applying it twice is the
/// identity.
pub fn apply_shift_level(state: &SparseState, level: u32) -> Result<SparseState> {
    apply_shift_level_with(state, level, Exec::Sequential)
}

pub fn apply_shift_level_with(state: &SparseState, level: u32, exec: Exec) -> Result<SparseState> {
    check_level(state, level)?;
    Ok(state.permuted(exec, |basis| shift_map(basis, level)))
}

/// CNOT coin: flips the chirality of each entry whose address bit `target`
/// is set. `target == n` denotes the identity coin used at the first step.
pub fn apply_coin(state: &SparseState, target: u32) -> Result<SparseState> {
    apply_coin_with(state, target, Exec::Sequential)
}

pub fn apply_coin_with(state: &SparseState, target: u32, exec: Exec) -> Result<SparseState> {
    let n = state.shape().n();
    if target > n {
        return Err(Error::CoinOutOfRange { k: target, n });
    }
    if target == n {
        return Ok(state.clone());
    }
    Ok(state.permuted(exec, |basis| BasisState {
        chirality: basis.chirality.xor_bit(basis.address_bit(target)),
        ..*basis
    }))
}

/// One routing step from level `level` to `level + 1`: undo the previous
/// coin (bit a_{n−l}), set the chirality from the next address bit
/// (a_{n−(l+1)}), then shift. The rightmost coin acts first.
pub fn level_step_down(state: &SparseState, level: u32) -> Result<SparseState> {
    level_step_down_with(state, level, Exec::Sequential)
}

pub fn level_step_down_with(state: &SparseState, level: u32, exec: Exec) -> Result<SparseState> {
    check_level(state, level)?;
    let n = state.shape().n();
    let state = apply_coin_with(state, n - level, exec)?;
    let state = apply_coin_with(&state, n - (level + 1), exec)?;
    apply_shift_level_with(&state, level, exec)
}

/// Adjoint of [`level_step_down`]: same factors in reverse order, using
/// that shift and coin are involutions. `level_step_up(level_step_down(s))`
/// is `s` exactly.
pub fn level_step_up(state: &SparseState, level: u32) -> Result<SparseState> {
    level_step_up_with(state, level, Exec::Sequential)
}

pub fn level_step_up_with(state: &SparseState, level: u32, exec: Exec) -> Result<SparseState> {
    check_level(state, level)?;
    let n = state.shape().n();
    let state = apply_shift_level_with(state, level, exec)?;
    let state = apply_coin_with(&state, n - (level + 1), exec)?;
    apply_coin_with(&state, n - level, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{
        make_initial_state, AddressSuperposition, Chirality, NodeIndex, TreeShape,
    };
    use num_complex::Complex64;

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

    fn single(s: TreeShape, b: BasisState) -> SparseState {
        SparseState::from_entries(s, vec![(b, Complex64::new(1.0, 0.0))]).unwrap()
    }

    /// Builds a state with equal real amplitudes on the given labels.
    fn uniform_state(s: TreeShape, labels: &[BasisState]) -> SparseState {
        let amp = Complex64::new(1.0 / (labels.len() as f64).sqrt(), 0.0);
        SparseState::from_entries(s, labels.iter().map(|b| (*b, amp))).unwrap()
    }

    #[test]
    fn shift_moves_parent_to_matching_child() {
        let s = shape(3, 1);
        let out = apply_shift_level(&single(s, basis(0, 0, 0, 0, 0)), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, basis(1, 0, 0, 0, 0));
        let out = apply_shift_level(&single(s, basis(0, 0, 1, 0, 0)), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, basis(1, 1, 1, 0, 0));
    }

    #[test]
    fn shift_pulls_matching_child_to_parent() {
        let s = shape(3, 1);
        let out = apply_shift_level(&single(s, basis(1, 1, 1, 0, 0)), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, basis(0, 0, 1, 0, 0));
    }

    #[test]
    fn shift_fixes_mismatched_child() {
        let s = shape(3, 1);
        let fixed = basis(1, 0, 1, 0, 0);
        let out = apply_shift_level(&single(s, fixed), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, fixed);
        let fixed = basis(1, 1, 0, 0, 0);
        let out = apply_shift_level(&single(s, fixed), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, fixed);
    }

    #[test]
    fn shift_is_identity_outside_its_levels() {
        let s = shape(3, 1);
        let far = basis(3, 5, 0, 0, 0);
        let out = apply_shift_level(&single(s, far), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, far);
    }

    #[test]
    fn shift_rejects_out_of_range_level() {
        let s = shape(2, 1);
        let state = single(s, basis(0, 0, 0, 0, 0));
        assert!(matches!(
            apply_shift_level(&state, 2),
            Err(Error::LevelOutOfRange { level: 2, n: 2 })
        ));
    }

    #[test]
    fn coin_is_cnot_on_chirality() {
        let s = shape(3, 1);
        // a = 100₂ has a_2 = 1: chirality flips for k = 2.
        let out = apply_coin(&single(s, basis(0, 0, 0, 0b100, 0)), 2).unwrap();
        assert_eq!(out.canonical_entries()[0].0, basis(0, 0, 1, 0b100, 0));
        // a = 000₂: no control bit set, nothing moves.
        for k in 0..=2 {
            let fixed = basis(0, 0, 0, 0, 0);
            let out = apply_coin(&single(s, fixed), k).unwrap();
            assert_eq!(out.canonical_entries()[0].0, fixed);
        }
    }

    #[test]
    fn coin_at_n_is_identity() {
        let s = shape(3, 1);
        let b = basis(2, 3, 1, 0b111, 0);
        let out = apply_coin(&single(s, b), 3).unwrap();
        assert_eq!(out.canonical_entries()[0].0, b);
        assert!(matches!(
            apply_coin(&single(s, b), 4),
            Err(Error::CoinOutOfRange { k: 4, n: 3 })
        ));
    }

    // The worked n=3 example with addresses {001, 011, 110}: each routing
    // step must land on the expected intermediate states.

    #[test]
    fn level_step_down_first_level() {
        let s = shape(3, 1);
        let addrs = AddressSuperposition::uniform(&[0b001, 0b011, 0b110]).unwrap();
        let psi0 = make_initial_state(s, &addrs).unwrap();
        let psi1 = level_step_down(&psi0, 0).unwrap();
        let expected = uniform_state(
            s,
            &[
                basis(1, 0, 0, 0b001, 0),
                basis(1, 0, 0, 0b011, 0),
                basis(1, 1, 1, 0b110, 0),
            ],
        );
        assert!(psi1.max_deviation(&expected) < 1e-12);
    }

    #[test]
    fn level_step_down_second_level() {
        let s = shape(3, 1);
        let psi1 = uniform_state(
            s,
            &[
                basis(1, 0, 0, 0b001, 0),
                basis(1, 0, 0, 0b011, 0),
                basis(1, 1, 1, 0b110, 0),
            ],
        );
        let psi2 = level_step_down(&psi1, 1).unwrap();
        let expected = uniform_state(
            s,
            &[
                basis(2, 0, 0, 0b001, 0),
                basis(2, 1, 1, 0b011, 0),
                basis(2, 3, 1, 0b110, 0),
            ],
        );
        assert!(psi2.max_deviation(&expected) < 1e-12);
    }

    #[test]
    fn level_step_down_third_level() {
        let s = shape(3, 1);
        let psi2 = uniform_state(
            s,
            &[
                basis(2, 0, 0, 0b001, 0),
                basis(2, 1, 1, 0b011, 0),
                basis(2, 3, 1, 0b110, 0),
            ],
        );
        let psi3 = level_step_down(&psi2, 2).unwrap();
        let expected = uniform_state(
            s,
            &[
                basis(3, 1, 1, 0b001, 0),
                basis(3, 3, 1, 0b011, 0),
                basis(3, 6, 0, 0b110, 0),
            ],
        );
        assert!(psi3.max_deviation(&expected) < 1e-12);
    }

    #[test]
    fn level_step_up_inverts_level_step_down() {
        let s = shape(3, 2);
        let state = uniform_state(
            s,
            &[
                basis(0, 0, 0, 0b001, 1),
                basis(0, 0, 1, 0b110, 2),
                basis(1, 1, 0, 0b011, 3),
            ],
        );
        for level in 0..3 {
            let down = level_step_down(&state, level).unwrap();
            let back = level_step_up(&down, level).unwrap();
            assert!(back.max_deviation(&state) < 1e-12);
        }
    }

    #[test]
    fn level_step_up_resets_chirality_at_root() {
        // Loaded walker at the right child comes back to the root with the
        // chirality cleared: (1,1) c=1 a=1 d=01₂ → (0,0) c=0 a=1 d=01₂.
        let s = shape(1, 2);
        let out = level_step_up(&single(s, basis(1, 1, 1, 1, 0b01)), 0).unwrap();
        assert_eq!(out.canonical_entries()[0].0, basis(0, 0, 0, 1, 0b01));
    }

    #[test]
    fn routed_example_reverses_to_root() {
        // The delivered {001, 011, 110} state walks back up to the root
        // with all chirality cleared.
        let s = shape(3, 1);
        let psi3 = uniform_state(
            s,
            &[
                basis(3, 1, 1, 0b001, 0),
                basis(3, 3, 1, 0b011, 0),
                basis(3, 6, 0, 0b110, 0),
            ],
        );
        let up = level_step_up(&psi3, 2).unwrap();
        let up = level_step_up(&up, 1).unwrap();
        let up = level_step_up(&up, 0).unwrap();
        let expected = uniform_state(
            s,
            &[
                basis(0, 0, 0, 0b001, 0),
                basis(0, 0, 0, 0b011, 0),
                basis(0, 0, 0, 0b110, 0),
            ],
        );
        assert!(up.max_deviation(&expected) < 1e-12);
    }

    #[test]
    fn parallel_application_matches_sequential() {
        let s = shape(4, 2);
        let labels: Vec<BasisState> = (0..16).map(|a| basis(0, 0, 0, a, 0)).collect();
        let state = uniform_state(s, &labels);
        for level in 0..4 {
            let seq = level_step_down_with(&state, level, Exec::Sequential).unwrap();
            let par = level_step_down_with(&state, level, Exec::Parallel).unwrap();
            assert_eq!(seq.canonical_entries(), par.canonical_entries());
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Random shape plus a random batch of valid labels for it.
        fn arb_state() -> impl Strategy<Value = SparseState> {
            (1u32..=5, 1u32..=3).prop_flat_map(|(n, m)| {
                let s = shape(n, m);
                let label = (0..=n, any::<u64>(), any::<u64>(), any::<u64>(), any::<u64>())
                    .prop_map(move |(level, pos, c, a, d)| {
                        basis(
                            level,
                            pos % (1u64 << level),
                            c & 1,
                            a % s.leaf_count(),
                            d % s.data_count(),
                        )
                    });
                proptest::collection::btree_set(label, 1..12).prop_map(move |labels| {
                    let labels: Vec<BasisState> = labels.into_iter().collect();
                    uniform_state(s, &labels)
                })
            })
        }

        proptest! {
            #[test]
            fn shift_is_an_involution(state in arb_state(), level_seed in any::<u32>()) {
                let level = level_seed % state.shape().n();
                let twice = apply_shift_level(
                    &apply_shift_level(&state, level).unwrap(), level).unwrap();
                prop_assert!(twice.max_deviation(&state) < 1e-15);
            }

            #[test]
            fn coin_is_an_involution(state in arb_state(), k_seed in any::<u32>()) {
                let k = k_seed % (state.shape().n() + 1);
                let twice = apply_coin(&apply_coin(&state, k).unwrap(), k).unwrap();
                prop_assert!(twice.max_deviation(&state) < 1e-15);
            }

            #[test]
            fn operators_preserve_norm_and_support(state in arb_state(), seed in any::<u32>()) {
                let level = seed % state.shape().n();
                for out in [
                    apply_shift_level(&state, level).unwrap(),
                    apply_coin(&state, seed % (state.shape().n() + 1)).unwrap(),
                    level_step_down(&state, level).unwrap(),
                    level_step_up(&state, level).unwrap(),
                ] {
                    prop_assert!((out.norm_squared() - state.norm_squared()).abs() < 1e-12);
                    prop_assert_eq!(out.len(), state.len());
                }
            }

            /// Walking a single address a down j levels puts the only
            /// entry at node (∑_{k=1}^{j} 2^{j−k} a_{n−k}, j) with
            /// chirality a_{n−j}.
            #[test]
            fn routing_tracks_the_address_prefix(
                n in 1u32..=10,
                address_seed in any::<u64>(),
            ) {
                let s = shape(n, 1);
                let address = address_seed % s.leaf_count();
                let addrs = AddressSuperposition::uniform(&[address]).unwrap();
                let mut state = make_initial_state(s, &addrs).unwrap();
                for j in 1..=n {
                    state = level_step_down(&state, j - 1).unwrap();
                    let expected_pos: u64 = (1..=j)
                        .map(|k| ((address >> (n - k)) & 1) << (j - k))
                        .sum();
                    let expected_bit = (address >> (n - j)) & 1;
                    prop_assert_eq!(state.len(), 1);
                    let entry = state.canonical_entries()[0].0;
                    prop_assert_eq!(entry.node, NodeIndex::new(j, expected_pos).unwrap());
                    prop_assert_eq!(entry.chirality, Chirality::from_bit(expected_bit));
                    prop_assert_eq!(entry.address, address);
                }
            }
        }
    }
}
